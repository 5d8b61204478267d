// Command-line front end: analyze / simulate / sweep the stratified-environment
// walk diagnostics from a single JSON experiment config.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "stratawalk/analysis.hpp"
#include "stratawalk/environment.hpp"
#include "stratawalk/montecarlo.hpp"
#include "stratawalk/serialize.hpp"
#include "stratawalk/tables.hpp"

namespace fs = std::filesystem;
using namespace stratawalk;

namespace {

enum ExitCode { kOk = 0, kValidation = 2, kNumeric = 3, kIo = 4 };

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed_override;
  int threads = 0;
  std::string format;
};

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("STRATA_WALK_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : int(hw);
}

ExperimentConfig load_config(const CommonOpts& opts) {
  std::ifstream in(opts.config_path);
  if (!in) throw ConfigError("cannot open config file: " + opts.config_path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  ExperimentConfig cfg = config_from_json(j);
  if (opts.seed_override) cfg.environment.seed = *opts.seed_override;
  if (!opts.out_dir.empty()) cfg.output.directory = opts.out_dir;
  if (!opts.format.empty()) {
    cfg.output.write_csv = opts.format == "csv";
    cfg.output.write_json = opts.format == "json";
  }
  const auto errs = cfg.environment.validate();
  if (!errs.empty()) {
    std::string msg = "environment model invalid:";
    for (const auto& e : errs) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  cfg.analysis.grid.validate_against(cfg.environment.eta);
  return cfg;
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot open for writing: " + path.string());
  out << content;
  if (!out) throw std::ios_base::failure("write failed: " + path.string());
}

Json base_output(const ExperimentConfig& cfg) {
  Json j;
  j["config_hash"] = config_hash(cfg);
  j["seeds"] = {{"environment", cfg.environment.seed},
                {"simulation_base", cfg.simulation.base_seed}};
  j["config"] = config_to_json(cfg);
  return j;
}

int cmd_gen_env(const ExperimentConfig& cfg) {
  const EnvironmentView env = build_environment(cfg.environment);
  const std::int64_t lo = -cfg.analysis.n_minus, hi = cfg.analysis.n_plus;
  const ValidationReport rep = validate_hypothesis(env, lo, hi);
  const EnvStats stats = env_stats(env, lo, hi);
  const fs::path dir(cfg.output.directory);

  Json out = base_output(cfg);
  out["environment"] = model_to_json(cfg.environment);
  out["validation"] = validation_to_json(rep, stats);
  if (cfg.output.write_json) write_file(dir / "env.json", out.dump(2) + "\n");
  if (cfg.output.write_csv)
    write_file(dir / "window.csv", window_csv(env, lo, hi, provenance_line(cfg)));

  if (!rep.ok()) {
    std::cerr << "hypothesis violations on " << rep.violations.size() << " level(s):\n";
    std::size_t shown = 0;
    for (const auto& v : rep.violations) {
      std::cerr << "  n=" << v.n << "  " << v.check << "  (" << v.detail << ")\n";
      if (++shown == 20) {
        std::cerr << "  ...\n";
        break;
      }
    }
    return kValidation;
  }
  std::cout << "gen-env: " << rep.levels_checked << " levels validated, outputs in "
            << dir.string() << "\n";
  return kOk;
}

int cmd_analyze(const ExperimentConfig& cfg) {
  const EnvironmentView env = build_environment(cfg.environment);
  const PotentialTables tables = build_tables(env, cfg.analysis.n_minus, cfg.analysis.n_plus);
  const GridSpec grid = resolve_grid(tables, cfg.analysis.grid);
  const ClassifyResult cls =
      classify(tables, grid, cfg.analysis.thresholds, cfg.analysis.structure_epsilon);
  const fs::path dir(cfg.output.directory);

  Json out = base_output(cfg);
  out["label"] = to_string(cls.label);
  out["grid"] = {{"K", cls.grid.K}, {"j_max", cls.grid.j_max}};
  Json evidence;
  evidence["transience"] = report_to_json(cls.transience);
  evidence["recurrence"] = report_to_json(cls.recurrence);
  {
    Json pts = Json::array();
    for (const auto& p : cls.structure.points)
      pts.push_back({{"j", p.j},
                     {"ratio_log10", p.ratio_log / 2.302585092994045684},
                     {"strong_ratio_log10", p.strong_ratio_log / 2.302585092994045684}});
    evidence["structure"] = {{"epsilon", cls.structure.epsilon}, {"points", pts}};
  }
  {
    const HalfPipeReport hp = half_pipe_diagnostic(tables);
    evidence["half_pipe"] = {{"sum_inv_rho", signed_log_to_json(hp.sum_inv_rho)},
                             {"inv_rho_converges", hp.inv_rho_converges},
                             {"drift_sum", signed_log_to_json(hp.drift_sum)},
                             {"abs_drift_sum", signed_log_to_json(hp.abs_drift_sum)},
                             {"abs_drift_converges", hp.abs_drift_converges}};
  }
  try {
    const DriftMassReports dm = drift_mass_series(tables, grid, cfg.analysis.thresholds);
    evidence["drift_mass"] = report_to_json(dm.condensed);
    evidence["drift_mass_conjecture"] = report_to_json(dm.conjecture);
  } catch (const DriftSignError& e) {
    evidence["drift_mass"] = {{"refused", e.what()}};
  }
  {
    Json dv;
    for (auto kind : {PhiKind::PhiStr, PhiKind::Phi, PhiKind::PhiPlus}) {
      const DomVarEstimate est = dominated_variation_estimate(tables, kind, grid);
      const char* name = kind == PhiKind::PhiStr ? "phi_str"
                         : kind == PhiKind::Phi  ? "phi"
                                                 : "phi_plus";
      Json pts = Json::array();
      for (const auto& p : est.points) pts.push_back({{"j", p.j}, {"ratio", p.ratio}});
      dv[name] = {{"c_hat", est.c_hat}, {"points", pts}};
    }
    evidence["dominated_variation"] = dv;
  }
  out["evidence"] = evidence;

  if (cfg.output.write_json) write_file(dir / "verdict.json", out.dump(2) + "\n");
  if (cfg.output.write_csv) {
    write_file(dir / "series.csv",
               series_csv(tables, cls.recurrence, cls.transience, provenance_line(cfg)));
    write_file(dir / "phi_table.csv", phi_table_csv(tables, grid, provenance_line(cfg)));
  }
  std::cout << "analyze: " << to_string(cls.label) << " (K=" << cls.grid.K
            << ", j_max=" << cls.grid.j_max << ")\n";
  return kOk;
}

int cmd_simulate(const ExperimentConfig& cfg, int threads) {
  const EnvironmentView env = build_environment(cfg.environment);
  const EnsembleResult ens =
      ensemble(env, cfg.simulation.num_walks, cfg.simulation.steps, cfg.simulation.base_seed,
               threads, cfg.simulation.record_trace, cfg.simulation.vertical_only);
  const fs::path dir(cfg.output.directory);
  Json out = base_output(cfg);
  out["ensemble"] = ensemble_to_json(ens, cfg.simulation.record_trace);
  if (cfg.output.write_json) write_file(dir / "ensemble.json", out.dump(2) + "\n");
  if (cfg.output.write_csv)
    write_file(dir / "ensemble.csv", ensemble_csv(ens, provenance_line(cfg)));
  std::cout << "simulate: " << ens.walks.size() << " walks of " << ens.steps
            << " steps, median origin returns " << ens.quantiles.returns_origin[2] << "\n";
  return kOk;
}

int cmd_sweep(const ExperimentConfig& cfg, int threads) {
  if (cfg.sweep.alpha_grid.empty()) throw ConfigError("sweep: alpha_grid is empty");
  if (cfg.sweep.env_seeds.empty()) throw ConfigError("sweep: env_seeds is empty");

  struct Cell {
    std::uint64_t seed;
    double alpha;
    std::string label;
    RatioFit rec_fit, trans_fit;
    bool rec_divergent = false;
    double structure_margin_log = 0.0;
    std::int64_t mc_median_returns = -1;
    std::string error;
  };
  std::vector<Cell> cells;
  for (auto seed : cfg.sweep.env_seeds)
    for (auto alpha : cfg.sweep.alpha_grid) cells.push_back({seed, alpha, "", {}, {}, false, 0.0, -1, ""});

  const int nthreads = std::max(1, std::min<int>(threads, int(cells.size())));
  auto run_cell = [&](Cell& cell) {
    try {
      ExperimentConfig c = cfg;
      c.environment.seed = cell.seed;
      c.environment.drift_model.alpha = cell.alpha;
      const EnvironmentView env = build_environment(c.environment);
      const PotentialTables tables = build_tables(env, c.analysis.n_minus, c.analysis.n_plus);
      const ClassifyResult cls =
          classify(tables, c.analysis.grid, c.analysis.thresholds, c.analysis.structure_epsilon);
      cell.label = to_string(cls.label);
      cell.rec_fit = cls.recurrence.fit;
      cell.trans_fit = cls.transience.fit;
      cell.rec_divergent = cls.recurrence.divergent;
      if (!cls.structure.points.empty())
        cell.structure_margin_log = cls.structure.points.back().ratio_log;
      if (c.sweep.with_simulation) {
        const EnsembleResult ens = ensemble(env, c.simulation.num_walks, c.simulation.steps,
                                            c.simulation.base_seed, 1,
                                            c.simulation.record_trace,
                                            c.simulation.vertical_only);
        cell.mc_median_returns = ens.quantiles.returns_origin[2];
      }
    } catch (const std::exception& e) {
      cell.error = e.what();  // per-cell failures recorded, sweep continues
    }
  };
  if (nthreads == 1) {
    for (auto& cell : cells) run_cell(cell);
  } else {
    std::vector<std::thread> pool;
    for (int tid = 0; tid < nthreads; ++tid)
      pool.emplace_back([&, tid] {
        for (std::size_t i = std::size_t(tid); i < cells.size(); i += std::size_t(nthreads))
          run_cell(cells[i]);
      });
    for (auto& th : pool) th.join();
  }

  const fs::path dir(cfg.output.directory);
  std::string csv = provenance_line(cfg) + "\n";
  csv +=
      "env_seed,alpha,verdict,trans_ratio,trans_ratio_se,rec_ratio,rec_ratio_se,"
      "rec_divergent,structure_margin_log10,mc_median_returns,error\n";
  for (const auto& c : cells) {
    csv += std::to_string(c.seed) + ',' + format_double(c.alpha) + ',' + c.label + ',' +
           format_double(c.trans_fit.ratio) + ',' + format_double(c.trans_fit.se) + ',' +
           format_double(c.rec_fit.ratio) + ',' + format_double(c.rec_fit.se) + ',' +
           (c.rec_divergent ? "1" : "0") + ',' +
           format_double(c.structure_margin_log / 2.302585092994045684) + ',' +
           (c.mc_median_returns >= 0 ? std::to_string(c.mc_median_returns) : "") + ',' +
           c.error + '\n';
  }

  Json out = base_output(cfg);
  Json jcells = Json::array();
  for (const auto& c : cells) {
    jcells.push_back({{"env_seed", c.seed},
                      {"alpha", c.alpha},
                      {"verdict", c.label},
                      {"trans_ratio", c.trans_fit.ratio},
                      {"rec_ratio", c.rec_fit.ratio},
                      {"error", c.error}});
  }
  out["cells"] = jcells;
  Json summary = Json::array();
  for (auto alpha : cfg.sweep.alpha_grid) {
    int total = 0, transient = 0;
    for (const auto& c : cells)
      if (c.alpha == alpha && c.error.empty()) {
        ++total;
        transient += (c.label == "transient-indicative");
      }
    summary.push_back({{"alpha", alpha},
                       {"cells", total},
                       {"transient_fraction", total ? double(transient) / total : 0.0}});
  }
  out["summary"] = summary;

  if (cfg.output.write_csv) write_file(dir / "sweep.csv", csv);
  if (cfg.output.write_json) write_file(dir / "sweep.json", out.dump(2) + "\n");
  for (const auto& s : summary)
    std::cout << "sweep: alpha=" << s["alpha"] << " transient fraction "
              << s["transient_fraction"] << "\n";
  return kOk;
}

int cmd_report(const std::string& input, const std::string& emit_config) {
  std::ifstream in(input);
  if (!in) throw std::ios_base::failure("cannot open: " + input);
  Json j;
  in >> j;
  if (!emit_config.empty()) {
    if (!j.contains("config")) throw ConfigError("file has no embedded config");
    write_file(emit_config, j.at("config").dump(2) + "\n");
  }
  std::cout << "config_hash: " << j.value("config_hash", std::string("?")) << "\n";
  if (j.contains("label")) std::cout << "verdict: " << j["label"] << "\n";
  if (j.contains("ensemble")) {
    const auto& e = j["ensemble"];
    std::cout << "ensemble: " << e["num_walks"] << " walks x " << e["steps"] << " steps, "
              << "median returns " << e["quantiles"]["returns_origin"]["median"] << "\n";
  }
  if (j.contains("summary"))
    for (const auto& s : j["summary"])
      std::cout << "alpha " << s["alpha"] << ": transient fraction "
                << s["transient_fraction"] << "\n";
  if (j.contains("validation"))
    std::cout << "validation ok: " << j["validation"]["ok"] << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stratified-environment random walk diagnostics"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string report_input, report_emit;

  auto add_common = [&](CLI::App* sub, bool needs_config = true) {
    auto* c = sub->add_option("--config", opts.config_path, "experiment config JSON");
    if (needs_config) c->required();
    sub->add_option("--out", opts.out_dir, "output directory (overrides config)");
    sub->add_option("--seed-override", opts.seed_override, "override environment seed");
    sub->add_option("--threads", opts.threads,
                    "worker threads (default: STRATA_WALK_THREADS or hardware)");
    sub->add_option("--format", opts.format, "restrict outputs to one format")
        ->check(CLI::IsMember({"csv", "json"}));
  };

  auto* gen = app.add_subcommand("gen-env", "materialize and validate an environment window");
  add_common(gen);
  auto* ana = app.add_subcommand("analyze", "criterion series and verdict");
  add_common(ana);
  auto* sim = app.add_subcommand("simulate", "quenched Monte Carlo ensemble");
  add_common(sim);
  auto* swp = app.add_subcommand("sweep", "seed x alpha phase table");
  add_common(swp);
  auto* rep = app.add_subcommand("report", "summarize a result file");
  rep->add_option("--input", report_input, "result JSON")->required();
  rep->add_option("--emit-config", report_emit, "write the embedded config to a file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (rep->parsed()) return cmd_report(report_input, report_emit);
    const ExperimentConfig cfg = load_config(opts);
    const int threads = resolve_threads(opts.threads);
    if (gen->parsed()) return cmd_gen_env(cfg);
    if (ana->parsed()) return cmd_analyze(cfg);
    if (sim->parsed()) return cmd_simulate(cfg, threads);
    if (swp->parsed()) return cmd_sweep(cfg, threads);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const OutOfWindowError& e) {
    std::cerr << "window error: " << e.what() << " (increase analysis.window)\n";
    return kNumeric;
  } catch (const std::length_error& e) {
    std::cerr << "window error: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kOk;
}
