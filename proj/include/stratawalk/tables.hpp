#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "stratawalk/environment.hpp"
#include "stratawalk/signed_log.hpp"

namespace stratawalk {

// Signalled when a scale argument needs levels beyond the built window.
// The caller must rebuild with a larger window.
struct OutOfWindowError : std::runtime_error {
  explicit OutOfWindowError(const std::string& what) : std::runtime_error(what) {}
};

// Pair sums over a level range [lo, hi]:
//   base  = sum_{lo <= k <= l <= hi} rho_k rho_l (1/rho_k^2 + 1/rho_l^2)
//   drift = sum_{lo <= k <= l <= hi} rho_k rho_l (sum_{s=k}^{l} T_s)^2
// with T_s = r_s eps_s / (p_s rho_s).
struct PairSums {
  SignedLog base;
  SignedLog drift;
};

// Prefix structures over a window [-n_minus, n_plus].  Immutable after build;
// all queries are pure and thread-safe.
class PotentialTables {
 public:
  std::int64_t n_minus() const { return n_minus_; }
  std::int64_t n_plus() const { return n_plus_; }
  int dimension() const { return dimension_; }
  double eta() const { return eta_; }
  double a0() const { return a0_; }

  // S_k = log rho_k
  double S(std::int64_t k) const { return S_[idx(k)]; }
  SignedLog rho(std::int64_t k) const { return SignedLog::from_log(+1, S_[idx(k)]); }
  SignedLog inv_rho(std::int64_t k) const { return SignedLog::from_log(+1, -S_[idx(k)]); }
  double eps(std::int64_t k) const { return eps_[idx(k)]; }
  SignedLog drift_term(std::int64_t k) const { return T_[idx(k)]; }

  // Origin-anchored drift prefix: C_x = sum_{0<=s<=x} T_s for x >= 0,
  // C_x = -sum_{x<s<=-1} T_s for x <= -1, so C_l - C_{k-1} = sum_{s=k}^l T_s.
  SignedLog drift_prefix(std::int64_t x) const;

  // v_+(n), n in [0, n_plus];  v_-(n), n in [0, n_minus-1];  same layout for w.
  const std::vector<SignedLog>& vplus() const { return vplus_; }
  const std::vector<SignedLog>& vminus() const { return vminus_; }
  const std::vector<SignedLog>& wplus() const { return wplus_; }
  const std::vector<SignedLog>& wminus() const { return wminus_; }

  // sum_{-i <= k <= -1} 1/rho_k, i in [0, n_minus]
  SignedLog wsum_left(std::int64_t i) const { return wsum_left_[std::size_t(i)]; }

  // Drift-mass prefixes sum eps_k / rho_k (signed), same anchoring as wsum,
  // and their absolute-value counterparts sum |eps_k| / rho_k.
  SignedLog drift_mass_right(std::int64_t j) const { return eorho_right_[std::size_t(j)]; }
  SignedLog drift_mass_left(std::int64_t i) const { return eorho_left_[std::size_t(i)]; }
  SignedLog abs_drift_mass_right(std::int64_t j) const { return aeorho_right_[std::size_t(j)]; }
  SignedLog abs_drift_mass_left(std::int64_t i) const { return aeorho_left_[std::size_t(i)]; }
  double min_eps() const { return min_eps_; }

  // Index bounds of the scale argument x: right index v_+^{-1}(x), left depth
  // v_-^{-1}(x), both clamped to 0 below the first table value (the range of
  // every dispersion sum always contains the origin).
  std::int64_t right_index(const SignedLog& x) const;
  std::int64_t left_depth(const SignedLog& x) const;

  // Whether the ratio law is structurally centered and non-constant (Sinai
  // regime): the drift-summability recurrence mechanism only applies there.
  bool sinai_ratio_law() const { return sinai_ratio_law_; }

  PairSums pair_sums(std::int64_t level_lo, std::int64_t level_hi) const;

  // Largest scale x with both v-inverses inside the window.
  SignedLog max_scale() const;

  // Merged, sorted jump points of x -> (left_depth, right_index).
  const std::vector<SignedLog>& scale_thresholds() const { return thresholds_; }

  friend PotentialTables build_tables_from(const std::function<Stratum(std::int64_t)>& strata,
                                           int dimension, double eta, std::int64_t n_minus,
                                           std::int64_t n_plus, std::size_t memory_budget,
                                           bool sinai_ratio_law);

 private:
  struct Node {
    SignedLog sum_rho, sum_w;
    SignedLog sum_rho_pre, sum_rho_pre2;   // prefix drift sums anchored at node start
    SignedLog sum_rho_suf, sum_rho_suf2;   // suffix drift sums anchored at node end
    SignedLog pair_base, pair_drift;
    SignedLog t_sum;
  };
  static Node merge(const Node& a, const Node& b);

  std::size_t idx(std::int64_t k) const {
    if (k < -n_minus_ || k > n_plus_) throw OutOfWindowError("level outside window");
    return std::size_t(k + n_minus_);
  }

  std::int64_t n_minus_ = 0, n_plus_ = 0;
  int dimension_ = 1;
  double eta_ = 0.0;
  double a0_ = 1.0;
  std::vector<double> S_;
  std::vector<double> eps_;
  std::vector<SignedLog> T_;
  std::vector<SignedLog> c_right_, c_left_;
  std::vector<SignedLog> eorho_right_, eorho_left_;
  std::vector<SignedLog> aeorho_right_, aeorho_left_;
  double min_eps_ = 0.0;
  std::vector<SignedLog> vplus_, vminus_, wplus_, wminus_, wsum_left_;
  std::vector<SignedLog> thresholds_;
  bool sinai_ratio_law_ = false;
  std::size_t leaf_base_ = 0;
  std::vector<Node> tree_;
};

// Fills every prefix structure; rho_0 = 1.  Fails explicitly when the window
// exceeds the memory budget; no silent truncation.
PotentialTables build_tables(const EnvironmentView& env, std::int64_t n_minus,
                             std::int64_t n_plus,
                             std::size_t memory_budget = std::size_t(2) << 30);

// Core builder on an arbitrary stratum source.  `sinai_ratio_law` marks a
// structurally centered, non-constant ratio law (unknown sources: false).
PotentialTables build_tables_from(const std::function<Stratum(std::int64_t)>& strata,
                                  int dimension, double eta, std::int64_t n_minus,
                                  std::int64_t n_plus,
                                  std::size_t memory_budget = std::size_t(2) << 30,
                                  bool sinai_ratio_law = false);

// Generalized inverse of a monotone array: max{ i : f[i] <= x }.
// Precondition x >= f[0]; returns nullopt when x >= f.back() (out of window,
// the true inverse may lie beyond the array).
std::optional<std::int64_t> generalized_inverse(const std::vector<SignedLog>& f,
                                                const SignedLog& x);

}  // namespace stratawalk
