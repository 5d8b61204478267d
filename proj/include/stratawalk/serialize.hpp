#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "stratawalk/analysis.hpp"
#include "stratawalk/environment.hpp"
#include "stratawalk/montecarlo.hpp"

namespace stratawalk {

using Json = nlohmann::ordered_json;

// Config / schema violations; the CLI maps these to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct AnalysisConfig {
  std::int64_t n_minus = 20000;
  std::int64_t n_plus = 20000;
  GridSpec grid;
  Thresholds thresholds;
  double structure_epsilon = 0.1;
};

struct SimulationConfig {
  std::int64_t num_walks = 8;
  std::int64_t steps = 100000;
  bool record_trace = false;
  bool vertical_only = false;
  std::uint64_t base_seed = 1;
};

struct SweepConfig {
  std::vector<double> alpha_grid;
  std::vector<std::uint64_t> env_seeds;
  bool with_simulation = false;
};

struct OutputConfig {
  std::string directory = "out";
  bool write_csv = true;
  bool write_json = true;
};

struct ExperimentConfig {
  EnvironmentModel environment;
  AnalysisConfig analysis;
  SimulationConfig simulation;
  SweepConfig sweep;
  OutputConfig output;
};

// Strict parsing: unknown keys are rejected everywhere.
EnvironmentModel model_from_json(const Json& j);
Json model_to_json(const EnvironmentModel& m);

ExperimentConfig config_from_json(const Json& j);
Json config_to_json(const ExperimentConfig& c);

// FNV-1a over the canonical serialized config.
std::string config_hash(const ExperimentConfig& c);

// ---- report serialization ----

Json report_to_json(const CriterionReport& rep);
Json signed_log_to_json(const SignedLog& v);
Json validation_to_json(const ValidationReport& rep, const EnvStats& stats);
Json ensemble_to_json(const EnsembleResult& ens, bool with_excursions);

std::string format_double(double x);  // shortest round-trip

// CSV payloads; every file starts with a provenance comment line.
std::string provenance_line(const ExperimentConfig& c);
std::string window_csv(const EnvironmentView& env, std::int64_t n_lo, std::int64_t n_hi,
                       const std::string& provenance);
std::string series_csv(const PotentialTables& t, const CriterionReport& rec,
                       const CriterionReport& trans, const std::string& provenance);
std::string phi_table_csv(const PotentialTables& t, GridSpec grid,
                          const std::string& provenance);
std::string ensemble_csv(const EnsembleResult& ens, const std::string& provenance);

}  // namespace stratawalk
