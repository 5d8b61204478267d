#pragma once

#include <cstdint>
#include <vector>

#include "stratawalk/environment.hpp"
#include "stratawalk/rng.hpp"

namespace stratawalk {

struct WalkState {
  IntVec h;         // horizontal position in Z^d
  std::int64_t v = 0;
  std::int64_t t = 0;
};

// Return times sigma_k to Z^d x {0}, vertical exit times tau_k, and the
// horizontal increments D_k = h(sigma_k) - h(sigma_{k-1}).
struct ExcursionStats {
  std::vector<std::int64_t> sigma;
  std::vector<std::int64_t> tau;
  std::vector<IntVec> D;
};

struct WalkStats {
  std::uint64_t walk_seed = 0;
  std::int64_t steps = 0;
  std::int64_t returns_origin = 0;    // t with S_t = 0 (full state)
  std::int64_t returns_vertical = 0;  // t with v = 0
  std::int64_t last_return_t = 0;
  std::int64_t max_abs_v = 0;
  IntVec final_h;
  std::int64_t final_v = 0;
  bool has_trace = false;
  ExcursionStats excursions;
  std::vector<std::int64_t> curve_counts;  // cumulative origin returns at the log grid
};

// One transition of the full chain; pure given the rng stream.
WalkState step(const WalkState& state, const EnvironmentView& env, CounterRng& rng);

WalkStats run_walk(const EnvironmentView& env, std::int64_t T, std::uint64_t walk_seed,
                   bool record_trace = false);

// Vertical chain only: up with p_n/(p_n+q_n), down with q_n/(p_n+q_n).
WalkStats run_vertical(const EnvironmentView& env, std::int64_t T, std::uint64_t walk_seed);

// Log-spaced step checkpoints 1, 2, 4, ..., T used by the return curves.
std::vector<std::int64_t> curve_checkpoints(std::int64_t T);

struct EnsembleResult {
  std::uint64_t env_seed = 0;
  std::uint64_t base_seed = 0;
  bool vertical_only = false;
  std::int64_t steps = 0;
  std::vector<WalkStats> walks;               // ordered by walk index
  std::vector<std::int64_t> checkpoints;
  std::vector<double> return_curve;           // mean cumulative origin returns
  struct Quantiles {
    // q0, q25, q50, q75, q100 of the per-walk statistic
    std::vector<std::int64_t> returns_origin, returns_vertical, max_abs_v, abs_final_h;
  } quantiles;
};

EnsembleResult ensemble(const EnvironmentView& env, std::int64_t num_walks, std::int64_t T,
                        std::uint64_t base_seed, int threads = 1, bool record_trace = false,
                        bool vertical_only = false);

struct ExcursionSummary {
  std::int64_t pooled_count = 0;
  bool low_power = false;  // fewer than 10 pooled excursions
  std::vector<std::pair<std::int64_t, std::int64_t>> histogram;  // (D coordinate 0, count)
  double sign_balance = 0.0;  // |#{D>0} - #{D<0}| / #D
  double mean_D = 0.0;
  double se_mean_D = 0.0;
  // first-half vs second-half two-sample consistency per walk
  int ks_eligible_walks = 0;
  int ks_passing_walks = 0;   // statistic below its 99% null threshold
  std::vector<std::int64_t> sigma_gap_quantiles;  // q25, q50, q75, q90 of pooled gaps
};

ExcursionSummary excursion_summary(const EnsembleResult& ensemble);

}  // namespace stratawalk
