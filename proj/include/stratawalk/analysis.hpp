#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stratawalk/signed_log.hpp"
#include "stratawalk/tables.hpp"

namespace stratawalk {

// Thrown by the condensed drift criterion when the local drift is negative
// (the criterion only has a meaning for nonnegative drift) or identically zero.
struct DriftSignError : std::runtime_error {
  explicit DriftSignError(const std::string& what) : std::runtime_error(what) {}
};

// Geometric evaluation grid n = K^j, 1 <= j <= j_max.
struct GridSpec {
  int K = 0;       // 0 = derive smallest admissible from eta
  int j_max = 0;   // 0 = largest feasible in the window

  void validate_against(double eta) const;
};

GridSpec resolve_grid(const PotentialTables& tables, GridSpec requested);

enum class PhiKind { Phi, PhiPlus, PhiStr };

// ---- dispersion functions (scale arguments are SignedLog, x >= 0) ----

SignedLog phi_str(const PotentialTables& t, const SignedLog& x);
SignedLog psi(const PotentialTables& t, const SignedLog& x);  // Psi(n) = Phi_str(n)^2

// Phi(-m, n); d = 1 only.
SignedLog phi_range(const PotentialTables& t, const SignedLog& m, const SignedLog& n);
SignedLog phi_sym(const PotentialTables& t, const SignedLog& x);   // Phi(n) = Phi(-n, n)
SignedLog phi_plus(const PotentialTables& t, const SignedLog& x);  // sqrt(Phi^2(-n,0)+Phi^2(0,n))

// Literal double-sum evaluation; the oracle for the fast path.
SignedLog phi_brute(const PotentialTables& t, const SignedLog& m, const SignedLog& n,
                    std::int64_t index_cap = 4000);

// Convenience overloads on machine integers.
SignedLog phi_str(const PotentialTables& t, std::int64_t n);
SignedLog phi_sym(const PotentialTables& t, std::int64_t n);
SignedLog phi_plus(const PotentialTables& t, std::int64_t n);

// Generalized inverse max{n in N : f(n) <= x} over the scale axis. The result
// is a (possibly astronomically large) integer carried as a SignedLog; it is
// exact whenever it fits the double integer range.  Throws std::domain_error
// below range and OutOfWindowError above it.
SignedLog phi_inverse(const PotentialTables& t, const SignedLog& x, PhiKind kind);

// C(n) = sum_{-v_-^{-1}(n) <= k <= v_+^{-1}(n)} eps_k / rho_k, and its inverse.
SignedLog drift_mass(const PotentialTables& t, const SignedLog& x);
SignedLog drift_mass_inverse(const PotentialTables& t, const SignedLog& x);

// ---- criterion series ----

struct Thresholds {
  double theta_trans = 0.8;  // fitted geometric ratio below this => convergent
  double theta_rec = 0.1;    // tail terms >= theta_rec * median(first 3) => divergent
  double fit_se_max = 0.05;  // required fit precision for the convergence call
  // windowed sum |eps|/rho across the grid: growth in log beyond the first
  // cell above `hi` reads as divergent drift mass, below `lo` as summable
  double drift_growth_hi = 1.5;
  double drift_growth_lo = 0.8;
};

enum class Indication { Recurrent, Transient, Inconclusive };
std::string to_string(Indication v);

enum class SeriesKind { Recurrence, Transience, DriftMass, DriftMassConjecture };
std::string to_string(SeriesKind k);

struct RatioFit {
  double ratio = 0.0;
  double se = 0.0;
  int points = 0;
  bool valid = false;
};

struct CriterionReport {
  SeriesKind kind;
  GridSpec grid;
  struct Term {
    int j = 0;
    SignedLog n;      // K^j
    SignedLog value;  // series term
  };
  std::vector<Term> terms;               // usable grid points, consecutive from j = 1
  std::vector<SignedLog> partial_sums;   // running sums of terms
  RatioFit fit;
  Indication verdict = Indication::Inconclusive;
  Thresholds thresholds;
  bool convergent = false;
  bool divergent = false;
  std::vector<std::string> notes;
};

// terms: per-cell emulation of sum_n (1/n^2) (Phi^{-1}(n))^2 / Phi_+^{-1}(n)
CriterionReport recurrence_series(const PotentialTables& t, GridSpec grid,
                                  const Thresholds& th = {});

// terms: K^j / Phi(K^j), grid form of sum 1/Phi(n)
CriterionReport transience_series(const PotentialTables& t, GridSpec grid,
                                  const Thresholds& th = {});

struct DriftMassReports {
  CriterionReport condensed;    // terms (sum eps_k/rho_k over the K^j range)^{-1}
  CriterionReport conjecture;   // conjecture-grade series with C^{-1}
};
DriftMassReports drift_mass_series(const PotentialTables& t, GridSpec grid,
                                   const Thresholds& th = {});

// ---- auxiliary diagnostics ----

struct StructureProfile {
  double epsilon = 0.0;
  struct Point {
    int j;
    double ratio_log;         // log of Phi_str(n) / (sqrt(n) (log n)^{1/2+eps})
    double strong_ratio_log;  // log of Phi_str(n) / (sqrt(n) exp(log^{1-eps} n))
  };
  std::vector<Point> points;
};
StructureProfile structure_condition(const PotentialTables& t, double epsilon, GridSpec grid);

struct DomVarEstimate {
  double c_hat = 0.0;      // robust constant: p95 of the probe ratios
  double max_ratio = 0.0;  // raw maximum, for the full picture
  struct Point {
    int j;         // half-octave probe index above x = K
    double ratio;  // f^{-1}(2x) / f^{-1}(x)
  };
  std::vector<Point> points;
};
DomVarEstimate dominated_variation_estimate(const PotentialTables& t, PhiKind kind,
                                            GridSpec grid);

struct HalfPipeReport {
  SignedLog sum_inv_rho;       // windowed sum over both sides
  bool inv_rho_converges;      // geometric-tail heuristic on both sides
  SignedLog drift_sum;         // windowed sum of r_s eps_s / (p_s rho_s)
  SignedLog abs_drift_sum;     // windowed sum of |eps_s| / rho_s
  bool abs_drift_converges;
};
HalfPipeReport half_pipe_diagnostic(const PotentialTables& t);

struct NormalizationProfile {
  struct Point {
    int j;
    SignedLog n;    // K^j
    SignedLog phi;  // Phi(Psi^{-1}(K^j))
  };
  std::vector<Point> points;
  double slope = 0.0;  // log-log regression slope over the points
};
NormalizationProfile normalization_profile(const PotentialTables& t, GridSpec grid);

struct RatioDiagnostics {
  struct Sample {
    std::int64_t n;
    double wv_running_max_log;    // running max of log(w_+(n)/v_+(n))
    double min3_running_max_log;  // running max of log min{v_+/w_+, v_-/v_+, w_+/w_-}
  };
  std::vector<Sample> samples;  // at n = 1, 2, 4, ...
};
RatioDiagnostics lemma_ratio_diagnostics(const PotentialTables& t);

// C_grid for the ordering check Phi(n)^2 >= Phi_str(n)^2 / C_grid over the grid.
double phi_ordering_constant(const PotentialTables& t, GridSpec grid);

// ---- aggregate classifier ----

struct ClassifyResult {
  Indication label = Indication::Inconclusive;
  // which mechanism decided: "drift-mass growth", "drift-mass saturation",
  // "one-over-phi convergent", "criterion series divergent", or "none"
  std::string decided_by = "none";
  CriterionReport recurrence;
  CriterionReport transience;
  bool drift_mass_available = false;
  CriterionReport drift_mass_condensed;  // valid when available
  bool drift_growth_defined = false;
  double drift_growth_log = 0.0;  // log A(K^{j_max}) - log A(K), A = sum |eps|/rho
  HalfPipeReport half_pipe;
  StructureProfile structure;
  GridSpec grid;
};

ClassifyResult classify(const PotentialTables& t, GridSpec grid = {},
                        const Thresholds& th = {}, double structure_eps = 0.1);

}  // namespace stratawalk
