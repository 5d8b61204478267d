#include "stratawalk/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <stdexcept>
#include <thread>

namespace stratawalk {

namespace {

// Walker-Vose alias table for O(1) sampling of a stratum's jump law.
struct AliasTable {
  std::vector<double> prob;
  std::vector<std::uint32_t> alias;
  std::vector<IntVec> atoms;

  static AliasTable build(const PMF& mu) {
    AliasTable t;
    const std::size_t n = mu.atoms.size();
    t.prob.assign(n, 0.0);
    t.alias.assign(n, 0);
    t.atoms.reserve(n);
    std::vector<double> scaled(n);
    for (std::size_t i = 0; i < n; ++i) {
      t.atoms.push_back(mu.atoms[i].offset);
      scaled[i] = mu.atoms[i].weight * double(n);
    }
    std::vector<std::uint32_t> small, large;
    for (std::size_t i = 0; i < n; ++i)
      (scaled[i] < 1.0 ? small : large).push_back(std::uint32_t(i));
    while (!small.empty() && !large.empty()) {
      const auto s = small.back();
      const auto l = large.back();
      small.pop_back();
      large.pop_back();
      t.prob[s] = scaled[s];
      t.alias[s] = l;
      scaled[l] = (scaled[l] + scaled[s]) - 1.0;
      (scaled[l] < 1.0 ? small : large).push_back(l);
    }
    for (auto i : large) t.prob[i] = 1.0;
    for (auto i : small) t.prob[i] = 1.0;
    return t;
  }

  const IntVec& sample(CounterRng& rng) const {
    const std::size_t i = std::size_t(rng.next_double() * double(prob.size()));
    const std::size_t idx = std::min(i, prob.size() - 1);
    return rng.next_double() < prob[idx] ? atoms[idx] : atoms[alias[idx]];
  }
};

struct CompiledStratum {
  double p = 0.0;
  double pq = 0.0;  // p + q
  AliasTable alias;
};

// Dense two-sided cache of compiled strata; extended on demand so the walk is
// never reflected or truncated.
class LevelCache {
 public:
  explicit LevelCache(const EnvironmentView& env) : env_(env) {}

  const CompiledStratum& get(std::int64_t v) {
    if (v >= 0) {
      while (std::int64_t(pos_.size()) <= v) pos_.push_back(compile(std::int64_t(pos_.size())));
      return pos_[std::size_t(v)];
    }
    const std::int64_t i = -1 - v;
    while (std::int64_t(neg_.size()) <= i)
      neg_.push_back(compile(-1 - std::int64_t(neg_.size())));
    return neg_[std::size_t(i)];
  }

 private:
  CompiledStratum compile(std::int64_t n) const {
    const Stratum s = env_.stratum(n);
    return CompiledStratum{s.p, s.p + s.q, AliasTable::build(s.mu)};
  }
  const EnvironmentView& env_;
  std::vector<CompiledStratum> pos_, neg_;
};

}  // namespace

WalkState step(const WalkState& state, const EnvironmentView& env, CounterRng& rng) {
  const Stratum s = env.stratum(state.v);
  WalkState next = state;
  next.t = state.t + 1;
  const double u = rng.next_double();
  if (u < s.p) {
    ++next.v;
  } else if (u < s.p + s.q) {
    --next.v;
  } else {
    const AliasTable alias = AliasTable::build(s.mu);
    const IntVec& k = alias.sample(rng);
    for (std::size_t i = 0; i < k.size(); ++i) next.h[i] += k[i];
  }
  return next;
}

std::vector<std::int64_t> curve_checkpoints(std::int64_t T) {
  std::vector<std::int64_t> cp;
  for (std::int64_t t = 1; t < T; t *= 2) cp.push_back(t);
  cp.push_back(T);
  return cp;
}

WalkStats run_walk(const EnvironmentView& env, std::int64_t T, std::uint64_t walk_seed,
                   bool record_trace) {
  if (T < 1) throw std::invalid_argument("run_walk: T must be >= 1");
  const int d = env.model().dimension;
  WalkStats st;
  st.walk_seed = walk_seed;
  st.steps = T;
  st.final_h.assign(std::size_t(d), 0);

  LevelCache cache(env);
  CounterRng rng(walk_seed, 0, 0x57414C4Bull);
  const auto checkpoints = curve_checkpoints(T);
  st.curve_counts.reserve(checkpoints.size());
  std::size_t next_cp = 0;

  IntVec h(std::size_t(d), 0);
  int h_nonzero = 0;
  std::int64_t v = 0;
  bool on_axis = true;        // tracks sigma/tau alternation
  IntVec h_at_sigma = h;
  if (record_trace) {
    st.has_trace = true;
    st.excursions.sigma.push_back(0);
  }

  for (std::int64_t t = 1; t <= T; ++t) {
    const CompiledStratum& cs = cache.get(v);
    const double u = rng.next_double();
    if (u < cs.p) {
      ++v;
    } else if (u < cs.pq) {
      --v;
    } else {
      const IntVec& k = cs.alias.sample(rng);
      for (std::size_t i = 0; i < k.size(); ++i) {
        const std::int64_t before = h[i];
        h[i] += k[i];
        if (before == 0 && h[i] != 0) ++h_nonzero;
        if (before != 0 && h[i] == 0) --h_nonzero;
      }
    }
    st.max_abs_v = std::max<std::int64_t>(st.max_abs_v, std::llabs(v));
    if (v == 0) {
      ++st.returns_vertical;
      if (h_nonzero == 0) {
        ++st.returns_origin;
        st.last_return_t = t;
      }
      if (!on_axis) {
        on_axis = true;
        if (record_trace) {
          st.excursions.sigma.push_back(t);
          IntVec Dk(h.size());
          for (std::size_t i = 0; i < h.size(); ++i) Dk[i] = h[i] - h_at_sigma[i];
          st.excursions.D.push_back(std::move(Dk));
          h_at_sigma = h;
        }
      }
    } else if (on_axis) {
      on_axis = false;
      if (record_trace) st.excursions.tau.push_back(t);
    }
    if (next_cp < checkpoints.size() && t == checkpoints[next_cp]) {
      st.curve_counts.push_back(st.returns_origin);
      ++next_cp;
    }
  }
  st.final_h = h;
  st.final_v = v;
  return st;
}

WalkStats run_vertical(const EnvironmentView& env, std::int64_t T, std::uint64_t walk_seed) {
  if (T < 1) throw std::invalid_argument("run_vertical: T must be >= 1");
  WalkStats st;
  st.walk_seed = walk_seed;
  st.steps = T;
  st.final_h.assign(std::size_t(env.model().dimension), 0);

  // up-probability p_n / (p_n + q_n), cached per level
  std::vector<double> pos, neg;
  auto up_prob = [&](std::int64_t v) -> double {
    if (v >= 0) {
      while (std::int64_t(pos.size()) <= v) {
        const Stratum s = env.stratum(std::int64_t(pos.size()));
        pos.push_back(s.p / (s.p + s.q));
      }
      return pos[std::size_t(v)];
    }
    const std::int64_t i = -1 - v;
    while (std::int64_t(neg.size()) <= i) {
      const Stratum s = env.stratum(-1 - std::int64_t(neg.size()));
      neg.push_back(s.p / (s.p + s.q));
    }
    return neg[std::size_t(i)];
  };

  CounterRng rng(walk_seed, 0, 0x56455254ull);
  const auto checkpoints = curve_checkpoints(T);
  std::size_t next_cp = 0;
  std::int64_t v = 0;
  for (std::int64_t t = 1; t <= T; ++t) {
    v += (rng.next_double() < up_prob(v)) ? +1 : -1;
    st.max_abs_v = std::max<std::int64_t>(st.max_abs_v, std::llabs(v));
    if (v == 0) {
      ++st.returns_vertical;
      ++st.returns_origin;  // the state is v itself
      st.last_return_t = t;
    }
    if (next_cp < checkpoints.size() && t == checkpoints[next_cp]) {
      st.curve_counts.push_back(st.returns_origin);
      ++next_cp;
    }
  }
  st.final_v = v;
  return st;
}

EnsembleResult ensemble(const EnvironmentView& env, std::int64_t num_walks, std::int64_t T,
                        std::uint64_t base_seed, int threads, bool record_trace,
                        bool vertical_only) {
  if (num_walks < 1) throw std::invalid_argument("ensemble: need at least one walk");
  EnsembleResult res;
  res.env_seed = env.model().seed;
  res.base_seed = base_seed;
  res.vertical_only = vertical_only;
  res.steps = T;
  res.checkpoints = curve_checkpoints(T);
  res.walks.resize(std::size_t(num_walks));

  // Per-walk seeds are a counter-based split of the base seed; results land in
  // index-ordered slots, so the reduction is invariant under scheduling.
  const int nthreads = std::max(1, std::min<int>(threads, int(num_walks)));
  std::vector<std::thread> pool;
  auto worker = [&](int tid) {
    for (std::int64_t i = tid; i < num_walks; i += nthreads) {
      const std::uint64_t seed = derive_seed(base_seed, std::uint64_t(i));
      res.walks[std::size_t(i)] =
          vertical_only ? run_vertical(env, T, seed) : run_walk(env, T, seed, record_trace);
    }
  };
  if (nthreads == 1) {
    worker(0);
  } else {
    pool.reserve(std::size_t(nthreads));
    for (int tid = 0; tid < nthreads; ++tid) pool.emplace_back(worker, tid);
    for (auto& th : pool) th.join();
  }

  res.return_curve.assign(res.checkpoints.size(), 0.0);
  for (const auto& w : res.walks)
    for (std::size_t c = 0; c < w.curve_counts.size(); ++c)
      res.return_curve[c] += double(w.curve_counts[c]) / double(num_walks);

  auto quantiles = [&](auto getter) {
    std::vector<std::int64_t> vals;
    vals.reserve(res.walks.size());
    for (const auto& w : res.walks) vals.push_back(getter(w));
    std::sort(vals.begin(), vals.end());
    auto q = [&](double p) { return vals[std::size_t(p * double(vals.size() - 1))]; };
    return std::vector<std::int64_t>{q(0.0), q(0.25), q(0.5), q(0.75), q(1.0)};
  };
  res.quantiles.returns_origin = quantiles([](const WalkStats& w) { return w.returns_origin; });
  res.quantiles.returns_vertical =
      quantiles([](const WalkStats& w) { return w.returns_vertical; });
  res.quantiles.max_abs_v = quantiles([](const WalkStats& w) { return w.max_abs_v; });
  res.quantiles.abs_final_h = quantiles([](const WalkStats& w) {
    std::int64_t m = 0;
    for (auto c : w.final_h) m = std::max<std::int64_t>(m, std::llabs(c));
    return m;
  });
  return res;
}

namespace {

// Two-sample Kolmogorov-Smirnov statistic on integer samples.
double ks_statistic(std::vector<std::int64_t> a, std::vector<std::int64_t> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const std::int64_t x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::fabs(double(i) / double(a.size()) - double(j) / double(b.size())));
  }
  return d;
}

}  // namespace

ExcursionSummary excursion_summary(const EnsembleResult& ens) {
  ExcursionSummary sum;
  std::vector<std::int64_t> pooled;   // D coordinate 0
  std::vector<std::int64_t> gaps;
  for (const auto& w : ens.walks) {
    if (!w.has_trace) continue;
    for (const auto& Dk : w.excursions.D)
      pooled.push_back(Dk.empty() ? 0 : Dk[0]);
    for (std::size_t k = 1; k < w.excursions.sigma.size(); ++k)
      gaps.push_back(w.excursions.sigma[k] - w.excursions.sigma[k - 1]);
    // first-half vs second-half consistency at the 99% null level
    const auto& D = w.excursions.D;
    if (D.size() >= 20) {
      std::vector<std::int64_t> first, second;
      for (std::size_t k = 0; k < D.size(); ++k)
        (k < D.size() / 2 ? first : second).push_back(D[k].empty() ? 0 : D[k][0]);
      const double stat = ks_statistic(first, second);
      const double n1 = double(first.size()), n2 = double(second.size());
      const double crit = 1.62762 * std::sqrt((n1 + n2) / (n1 * n2));
      ++sum.ks_eligible_walks;
      if (stat < crit) ++sum.ks_passing_walks;
    }
  }
  sum.pooled_count = std::int64_t(pooled.size());
  sum.low_power = sum.pooled_count < 10;

  std::int64_t pos = 0, neg = 0;
  double mean = 0.0;
  for (auto d : pooled) {
    pos += d > 0;
    neg += d < 0;
    mean += double(d);
  }
  if (!pooled.empty()) {
    mean /= double(pooled.size());
    double var = 0.0;
    for (auto d : pooled) var += (double(d) - mean) * (double(d) - mean);
    var /= std::max<double>(1.0, double(pooled.size() - 1));
    sum.mean_D = mean;
    sum.se_mean_D = std::sqrt(var / double(pooled.size()));
    sum.sign_balance = std::fabs(double(pos) - double(neg)) / double(pooled.size());
  }

  std::map<std::int64_t, std::int64_t> hist;
  for (auto d : pooled) ++hist[d];
  sum.histogram.assign(hist.begin(), hist.end());

  if (!gaps.empty()) {
    std::sort(gaps.begin(), gaps.end());
    auto q = [&](double p) { return gaps[std::size_t(p * double(gaps.size() - 1))]; };
    sum.sigma_gap_quantiles = {q(0.25), q(0.5), q(0.75), q(0.9)};
  }
  return sum;
}

}  // namespace stratawalk
