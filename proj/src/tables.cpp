#include "stratawalk/tables.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace stratawalk {

namespace {
const SignedLog kTwo = SignedLog::from_real(2.0);
}

SignedLog PotentialTables::drift_prefix(std::int64_t x) const {
  if (x >= 0) {
    if (x > n_plus_) throw OutOfWindowError("drift_prefix beyond right edge");
    return c_right_[std::size_t(x)];
  }
  const std::int64_t i = -x;
  if (i > n_minus_ + 1) throw OutOfWindowError("drift_prefix beyond left edge");
  return c_left_[std::size_t(i)];
}

std::int64_t PotentialTables::right_index(const SignedLog& x) const {
  if (x < vplus_[0]) return 0;
  auto r = generalized_inverse(vplus_, x);
  if (!r) throw OutOfWindowError("scale argument beyond v_+ range; enlarge the window");
  return *r;
}

std::int64_t PotentialTables::left_depth(const SignedLog& x) const {
  if (x < vminus_[0]) return 0;
  auto r = generalized_inverse(vminus_, x);
  if (!r) throw OutOfWindowError("scale argument beyond v_- range; enlarge the window");
  return *r;
}

SignedLog PotentialTables::max_scale() const {
  return std::min(vplus_.back(), vminus_.back());
}

PotentialTables::Node PotentialTables::merge(const Node& a, const Node& b) {
  Node n;
  n.t_sum = a.t_sum + b.t_sum;
  n.sum_rho = a.sum_rho + b.sum_rho;
  n.sum_w = a.sum_w + b.sum_w;
  n.sum_rho_pre = a.sum_rho_pre + a.t_sum * b.sum_rho + b.sum_rho_pre;
  n.sum_rho_pre2 = a.sum_rho_pre2 + sl_sq(a.t_sum) * b.sum_rho +
                   kTwo * a.t_sum * b.sum_rho_pre + b.sum_rho_pre2;
  n.sum_rho_suf = b.sum_rho_suf + b.t_sum * a.sum_rho + a.sum_rho_suf;
  n.sum_rho_suf2 = b.sum_rho_suf2 + sl_sq(b.t_sum) * a.sum_rho +
                   kTwo * b.t_sum * a.sum_rho_suf + a.sum_rho_suf2;
  n.pair_base = a.pair_base + b.pair_base + a.sum_rho * b.sum_w + a.sum_w * b.sum_rho;
  n.pair_drift = a.pair_drift + b.pair_drift + a.sum_rho_suf2 * b.sum_rho +
                 kTwo * a.sum_rho_suf * b.sum_rho_pre + a.sum_rho * b.sum_rho_pre2;
  return n;
}

PairSums PotentialTables::pair_sums(std::int64_t level_lo, std::int64_t level_hi) const {
  if (level_lo > level_hi) throw std::invalid_argument("pair_sums: empty range");
  std::size_t l = idx(level_lo) + leaf_base_;
  std::size_t r = idx(level_hi) + leaf_base_ + 1;
  std::vector<const Node*> left, right;
  while (l < r) {
    if (l & 1) left.push_back(&tree_[l++]);
    if (r & 1) right.push_back(&tree_[--r]);
    l >>= 1;
    r >>= 1;
  }
  Node acc;  // neutral: merging order matters for the drift algebra
  for (const Node* n : left) acc = merge(acc, *n);
  for (auto it = right.rbegin(); it != right.rend(); ++it) acc = merge(acc, **it);
  return PairSums{acc.pair_base, acc.pair_drift};
}

PotentialTables build_tables(const EnvironmentView& env, std::int64_t n_minus,
                             std::int64_t n_plus, std::size_t memory_budget) {
  const RatioLaw& law = env.model().ratio_law;
  const bool sinai = law.centered() && law.kind != RatioLaw::Kind::Constant;
  return build_tables_from([&env](std::int64_t n) { return env.stratum(n); },
                           env.model().dimension, env.model().eta, n_minus, n_plus,
                           memory_budget, sinai);
}

PotentialTables build_tables_from(const std::function<Stratum(std::int64_t)>& strata,
                                  int dimension, double eta, std::int64_t n_minus,
                                  std::int64_t n_plus, std::size_t memory_budget,
                                  bool sinai_ratio_law) {
  if (n_minus < 1 || n_plus < 1) throw std::invalid_argument("build_tables: need n_minus, n_plus >= 1");
  const std::size_t levels = std::size_t(n_minus + n_plus + 1);
  // per-level cost: scalar arrays + two tree nodes
  const std::size_t estimate = levels * (2 * sizeof(double) + 9 * sizeof(SignedLog)) +
                               4 * std::bit_ceil(levels) * sizeof(PotentialTables::Node);
  if (estimate > memory_budget)
    throw std::length_error("build_tables: window of " + std::to_string(levels) +
                            " levels exceeds the memory budget");

  PotentialTables t;
  t.n_minus_ = n_minus;
  t.n_plus_ = n_plus;
  t.dimension_ = dimension;
  t.eta_ = eta;
  t.sinai_ratio_law_ = sinai_ratio_law;

  t.S_.assign(levels, 0.0);
  t.eps_.assign(levels, 0.0);
  t.T_.assign(levels, SignedLog::zero());

  auto idx = [&](std::int64_t k) { return std::size_t(k + n_minus); };

  // log-potential S: S_0 = 0, S_n - S_{n-1} = log a_n (right), S_{n-1} = S_n + log a_n (left)
  {
    long double s = 0.0L;
    for (std::int64_t n = 1; n <= n_plus; ++n) {
      const Stratum st = strata(n);
      s += std::log((long double)st.q) - std::log((long double)st.p);
      t.S_[idx(n)] = double(s);
    }
    s = 0.0L;
    for (std::int64_t n = 0; n >= -n_minus + 1; --n) {
      const Stratum st = strata(n);
      s += std::log((long double)st.q) - std::log((long double)st.p);
      t.S_[idx(n - 1)] = double(s);
    }
  }
  {
    const Stratum s0 = strata(0);
    t.a0_ = s0.q / s0.p;
  }

  // local drift data (the dispersion drift term is a d = 1 object)
  for (std::int64_t k = -n_minus; k <= n_plus; ++k) {
    const Stratum st = strata(k);
    const double e = st.eps.empty() ? 0.0 : st.eps[0];
    t.eps_[idx(k)] = e;
    if (t.dimension_ == 1 && e != 0.0) {
      const double lm = std::log(st.r) + std::log(std::fabs(e)) - std::log(st.p) - t.S_[idx(k)];
      t.T_[idx(k)] = SignedLog::from_log(e > 0 ? +1 : -1, lm);
    }
  }

  // v and w prefix families
  t.vplus_.resize(std::size_t(n_plus) + 1);
  t.wplus_.resize(std::size_t(n_plus) + 1);
  {
    SlAccum v, w;
    for (std::int64_t n = 0; n <= n_plus; ++n) {
      v.add(SignedLog::from_log(+1, t.S_[idx(n)]));
      w.add(SignedLog::from_log(+1, -t.S_[idx(n)]));
      t.vplus_[std::size_t(n)] = v.value();
      t.wplus_[std::size_t(n)] = w.value();
    }
  }
  t.vminus_.resize(std::size_t(n_minus));
  t.wminus_.resize(std::size_t(n_minus));
  t.wsum_left_.resize(std::size_t(n_minus) + 1);
  t.wsum_left_[0] = SignedLog::zero();
  {
    const double log_a0 = std::log(t.a0_);
    SlAccum v, w;
    for (std::int64_t n = 0; n <= n_minus - 1; ++n) {
      // v_-(n) = a_0 * sum_{-n-1 <= k <= -1} rho_k, w_- with 1/a_0 and 1/rho
      v.add(SignedLog::from_log(+1, t.S_[idx(-n - 1)]));
      w.add(SignedLog::from_log(+1, -t.S_[idx(-n - 1)]));
      SignedLog vv = v.value(), ww = w.value();
      t.vminus_[std::size_t(n)] = SignedLog::from_log(+1, vv.lmag + log_a0);
      t.wminus_[std::size_t(n)] = SignedLog::from_log(+1, ww.lmag - log_a0);
      t.wsum_left_[std::size_t(n + 1)] = ww;
    }
  }

  // drift-mass prefixes (eps_k / rho_k) and minimum drift over the window
  t.min_eps_ = 0.0;
  t.eorho_right_.resize(std::size_t(n_plus) + 1);
  t.eorho_left_.resize(std::size_t(n_minus) + 1);
  t.aeorho_right_.resize(std::size_t(n_plus) + 1);
  t.aeorho_left_.resize(std::size_t(n_minus) + 1);
  {
    auto eps_over_rho = [&](std::int64_t k) {
      const double e = t.eps_[idx(k)];
      if (e == 0.0) return SignedLog::zero();
      return SignedLog::from_log(e > 0 ? +1 : -1, std::log(std::fabs(e)) - t.S_[idx(k)]);
    };
    SlAccum acc, aacc;
    for (std::int64_t j = 0; j <= n_plus; ++j) {
      const SignedLog v = eps_over_rho(j);
      acc.add(v);
      aacc.add(v.abs());
      t.eorho_right_[std::size_t(j)] = acc.value();
      t.aeorho_right_[std::size_t(j)] = aacc.value();
    }
    acc = SlAccum();
    aacc = SlAccum();
    t.eorho_left_[0] = SignedLog::zero();
    t.aeorho_left_[0] = SignedLog::zero();
    for (std::int64_t i = 1; i <= n_minus; ++i) {
      const SignedLog v = eps_over_rho(-i);
      acc.add(v);
      aacc.add(v.abs());
      t.eorho_left_[std::size_t(i)] = acc.value();
      t.aeorho_left_[std::size_t(i)] = aacc.value();
    }
    t.min_eps_ = *std::min_element(t.eps_.begin(), t.eps_.end());
  }

  // origin-anchored drift prefixes
  t.c_right_.resize(std::size_t(n_plus) + 1);
  {
    SlAccum c;
    for (std::int64_t x = 0; x <= n_plus; ++x) {
      c.add(t.T_[idx(x)]);
      t.c_right_[std::size_t(x)] = c.value();
    }
  }
  t.c_left_.resize(std::size_t(n_minus) + 2);
  {
    t.c_left_[1] = SignedLog::zero();
    SlAccum c;
    for (std::int64_t i = 1; i <= n_minus; ++i) {
      c.add(-t.T_[idx(-i)]);
      t.c_left_[std::size_t(i) + 1] = c.value();
    }
  }

  // pair-sum segment tree
  const std::size_t cap = std::bit_ceil(levels);
  t.leaf_base_ = cap;
  t.tree_.assign(2 * cap, PotentialTables::Node{});
  for (std::size_t i = 0; i < levels; ++i) {
    const SignedLog rho = SignedLog::from_log(+1, t.S_[i]);
    const SignedLog w = SignedLog::from_log(+1, -t.S_[i]);
    const SignedLog T = t.T_[i];
    auto& leaf = t.tree_[cap + i];
    leaf.sum_rho = rho;
    leaf.sum_w = w;
    leaf.t_sum = T;
    leaf.sum_rho_pre = rho * T;
    leaf.sum_rho_pre2 = rho * sl_sq(T);
    leaf.sum_rho_suf = leaf.sum_rho_pre;
    leaf.sum_rho_suf2 = leaf.sum_rho_pre2;
    leaf.pair_base = kTwo;
    leaf.pair_drift = sl_sq(rho * T);
  }
  for (std::size_t i = cap - 1; i >= 1; --i)
    t.tree_[i] = PotentialTables::merge(t.tree_[2 * i], t.tree_[2 * i + 1]);

  // merged jump points of the scale -> index-bounds map
  t.thresholds_.resize(t.vplus_.size() + t.vminus_.size());
  std::merge(t.vplus_.begin(), t.vplus_.end(), t.vminus_.begin(), t.vminus_.end(),
             t.thresholds_.begin());
  return t;
}

std::optional<std::int64_t> generalized_inverse(const std::vector<SignedLog>& f,
                                                const SignedLog& x) {
  if (f.empty() || x < f.front())
    throw std::domain_error("generalized_inverse: x below f(0)");
  if (x >= f.back()) return std::nullopt;
  // last index with f[i] <= x
  auto it = std::upper_bound(f.begin(), f.end(), x);
  return std::int64_t(it - f.begin()) - 1;
}

}  // namespace stratawalk
