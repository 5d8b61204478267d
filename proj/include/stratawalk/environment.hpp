#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace stratawalk {

using IntVec = std::vector<std::int64_t>;

// Discrete horizontal jump law mu_n: atoms (offset, weight).
struct PMF {
  struct Atom {
    IntVec offset;
    double weight = 0.0;
  };
  std::vector<Atom> atoms;

  std::vector<double> mean() const;            // expectation vector
  double weight_at_zero() const;
  double moment(double power) const;           // sum ||k||^power * mu(k), Euclidean norm
  std::vector<double> second_moment() const;   // flattened d x d matrix sum k k^t mu(k)
};

// One horizontal layer: transition data constant on Z^d x {n}.
struct Stratum {
  double p = 0.0;  // up
  double q = 0.0;  // down
  double r = 0.0;  // horizontal
  PMF mu;
  std::vector<double> eps;  // expectation of mu
  bool eps_clamped = false; // drift model output hit the support bound

  double log_a() const;     // log(q/p)
};

struct RatioLaw {
  enum class Kind { Constant, TwoPoint, LogSymmetric, BiasedTwoPoint };
  Kind kind = Kind::Constant;
  double a = 1.0;                                   // Constant / TwoPoint {a, 1/a}
  std::vector<std::pair<double, double>> atoms;     // LogSymmetric: (value, weight)
  double a1 = 1.0, a2 = 1.0, w1 = 0.5;              // BiasedTwoPoint

  bool centered() const;  // E log a == 0 structurally
  std::string validate() const;
};

struct RLaw {
  enum class Kind { Constant, Uniform };
  Kind kind = Kind::Constant;
  double value = 1.0 / 3.0;
  double lo = 0.0, hi = 0.0;

  std::string validate() const;
};

struct DriftModel {
  enum class Kind { Zero, Constant, StretchExp, IidUniform, IidTwoPoint };
  enum class SignPattern { Positive, Alternating, Antisymmetric };
  Kind kind = Kind::Zero;
  double c = 0.0;
  double alpha = 0.5;  // StretchExp: eps_n = c * sign(n) * exp(-|n|^alpha)
  double delta = 0.1;  // Iid*: scale(n) = c * exp(-|n|^(1/2 - delta))
  SignPattern sign_pattern = SignPattern::Positive;

  std::string validate() const;
};

struct EnvironmentModel {
  int dimension = 1;
  double eta = 1.0 / 3.0;
  RatioLaw ratio_law;
  RLaw r_law;
  DriftModel drift_model;
  std::uint64_t seed = 0;

  // Returns human-readable violations; empty means the model is well formed.
  std::vector<std::string> validate() const;
};

// Pure function of (model, n); the basis of the determinism contract.
Stratum generate_stratum(const EnvironmentModel& model, std::int64_t n);

// Lazily generated, seed-deterministic doubly-infinite stratum sequence.
// Copies share the cache; generation is pure, so cached and recomputed strata
// are bit-identical.
class EnvironmentView {
 public:
  explicit EnvironmentView(EnvironmentModel model);

  const EnvironmentModel& model() const { return state_->model; }
  Stratum stratum(std::int64_t n) const;

 private:
  struct State {
    EnvironmentModel model;
    std::mutex mutex;
    std::unordered_map<std::int64_t, Stratum> cache;
  };
  std::shared_ptr<State> state_;
};

// Throws std::invalid_argument when the model is malformed.
EnvironmentView build_environment(const EnvironmentModel& model);

struct ValidationReport {
  struct Violation {
    std::int64_t n;
    std::string check;
    std::string detail;
  };
  std::int64_t n_lo = 0, n_hi = 0;
  std::int64_t levels_checked = 0;
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
};

// Per-stratum core of the hypothesis checks; violations are data, not errors.
void validate_stratum(const Stratum& s, double eta, int dimension, std::int64_t n,
                      std::vector<ValidationReport::Violation>& out);

ValidationReport validate_hypothesis(const EnvironmentView& env, std::int64_t n_lo,
                                     std::int64_t n_hi);

struct EnvStats {
  double mean_log_a = 0.0;
  double var_log_a = 0.0;  // empirical sigma^2
  double min_pqr = 1.0;
  double max_support = 0.0;  // max |offset coordinate| seen
  std::int64_t levels = 0;
};

EnvStats env_stats(const EnvironmentView& env, std::int64_t n_lo, std::int64_t n_hi);

}  // namespace stratawalk
