#include "stratawalk/environment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "stratawalk/rng.hpp"

namespace stratawalk {

namespace {

constexpr std::uint64_t kRatioSalt = 0x5261746Full;  // stream salts per law
constexpr std::uint64_t kRSalt = 0x526C6177ull;
constexpr std::uint64_t kDriftSalt = 0x44726674ull;

double norm2(const IntVec& k) {
  double s = 0.0;
  for (auto c : k) s += double(c) * double(c);
  return std::sqrt(s);
}

// Smallest eigenvalue of a symmetric d x d matrix by cyclic Jacobi sweeps.
double min_eigenvalue_sym(std::vector<double> m, int d) {
  if (d == 1) return m[0];
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) off += std::fabs(m[i * d + j]);
    if (off < 1e-14) break;
    for (int i = 0; i < d; ++i) {
      for (int j = i + 1; j < d; ++j) {
        const double apq = m[i * d + j];
        if (std::fabs(apq) < 1e-300) continue;
        const double app = m[i * d + i], aqq = m[j * d + j];
        const double theta = 0.5 * std::atan2(2.0 * apq, aqq - app);
        const double c = std::cos(theta), s = std::sin(theta);
        for (int k = 0; k < d; ++k) {
          const double aik = m[i * d + k], ajk = m[j * d + k];
          m[i * d + k] = c * aik - s * ajk;
          m[j * d + k] = s * aik + c * ajk;
        }
        for (int k = 0; k < d; ++k) {
          const double aki = m[k * d + i], akj = m[k * d + j];
          m[k * d + i] = c * aki - s * akj;
          m[k * d + j] = s * aki + c * akj;
        }
      }
    }
  }
  double lo = m[0];
  for (int i = 1; i < d; ++i) lo = std::min(lo, m[i * d + i]);
  return lo;
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

}  // namespace

std::vector<double> PMF::mean() const {
  if (atoms.empty()) return {};
  std::vector<double> m(atoms.front().offset.size(), 0.0);
  for (const auto& a : atoms)
    for (std::size_t i = 0; i < m.size(); ++i) m[i] += a.weight * double(a.offset[i]);
  return m;
}

double PMF::weight_at_zero() const {
  for (const auto& a : atoms) {
    bool zero = true;
    for (auto c : a.offset) zero = zero && (c == 0);
    if (zero) return a.weight;
  }
  return 0.0;
}

double PMF::moment(double power) const {
  double s = 0.0;
  for (const auto& a : atoms) s += a.weight * std::pow(norm2(a.offset), power);
  return s;
}

std::vector<double> PMF::second_moment() const {
  const int d = atoms.empty() ? 0 : int(atoms.front().offset.size());
  std::vector<double> m(std::size_t(d) * d, 0.0);
  for (const auto& a : atoms)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) m[i * d + j] += a.weight * double(a.offset[i]) * double(a.offset[j]);
  return m;
}

double Stratum::log_a() const { return std::log(q) - std::log(p); }

bool RatioLaw::centered() const {
  switch (kind) {
    case Kind::Constant: return a == 1.0;
    case Kind::TwoPoint: return true;
    case Kind::LogSymmetric: return true;  // enforced structurally at validate()
    case Kind::BiasedTwoPoint: return false;
  }
  return false;
}

std::string RatioLaw::validate() const {
  switch (kind) {
    case Kind::Constant:
      if (!(a > 0.0)) return "ratio_law.constant: a must be > 0";
      break;
    case Kind::TwoPoint:
      if (!(a > 0.0)) return "ratio_law.two_point: a must be > 0";
      break;
    case Kind::LogSymmetric: {
      if (atoms.empty()) return "ratio_law.log_symmetric: no atoms";
      double wsum = 0.0;
      for (const auto& [v, w] : atoms) {
        if (!(v > 0.0)) return "ratio_law.log_symmetric: atom value must be > 0";
        if (!(w > 0.0)) return "ratio_law.log_symmetric: atom weight must be > 0";
        wsum += w;
        // structural centering: the reciprocal atom must carry the same weight
        bool found = false;
        for (const auto& [v2, w2] : atoms)
          if (std::fabs(v2 * v - 1.0) < 1e-12 && std::fabs(w2 - w) < 1e-12) found = true;
        if (!found) return "ratio_law.log_symmetric: missing reciprocal atom for " + fmt("%g", v);
      }
      if (std::fabs(wsum - 1.0) > 1e-12) return "ratio_law.log_symmetric: weights must sum to 1";
      break;
    }
    case Kind::BiasedTwoPoint:
      if (!(a1 > 0.0 && a2 > 0.0)) return "ratio_law.biased_two_point: values must be > 0";
      if (!(w1 > 0.0 && w1 < 1.0)) return "ratio_law.biased_two_point: w1 must be in (0,1)";
      break;
  }
  return {};
}

std::string RLaw::validate() const {
  if (kind == Kind::Constant) {
    if (!(value > 0.0 && value < 1.0)) return "r_law.constant: value must be in (0,1)";
  } else {
    if (!(lo > 0.0 && hi < 1.0 && lo <= hi)) return "r_law.uniform: need 0 < lo <= hi < 1";
  }
  return {};
}

std::string DriftModel::validate() const {
  switch (kind) {
    case Kind::Zero: break;
    case Kind::Constant: break;
    case Kind::StretchExp:
      if (!(alpha > 0.0 && alpha < 1.0)) return "drift_model.stretch_exp: alpha must be in (0,1)";
      break;
    case Kind::IidUniform:
    case Kind::IidTwoPoint:
      if (!(delta > 0.0 && delta < 0.5)) return "drift_model: delta must be in (0, 1/2)";
      break;
  }
  return {};
}

std::vector<std::string> EnvironmentModel::validate() const {
  std::vector<std::string> errs;
  if (dimension < 1 || dimension > 8) errs.push_back("dimension must be in [1, 8]");
  if (!(eta > 0.0 && eta <= 1.0 / 3.0))
    errs.push_back("eta must be in (0, 1/3]: p+q+r = 1 is infeasible with min >= eta otherwise");
  if (auto e = ratio_law.validate(); !e.empty()) errs.push_back(e);
  if (auto e = r_law.validate(); !e.empty()) errs.push_back(e);
  if (auto e = drift_model.validate(); !e.empty()) errs.push_back(e);
  if (dimension > 1 && eta > 1.0 / dimension)
    errs.push_back("eta too large for the axis jump law in dimension d (needs eta <= 1/d)");
  return errs;
}

namespace {

double draw_ratio(const EnvironmentModel& m, std::int64_t n) {
  switch (m.ratio_law.kind) {
    case RatioLaw::Kind::Constant:
      return m.ratio_law.a;
    case RatioLaw::Kind::TwoPoint: {
      CounterRng rng(m.seed, n, kRatioSalt);
      return rng.next_double() < 0.5 ? m.ratio_law.a : 1.0 / m.ratio_law.a;
    }
    case RatioLaw::Kind::LogSymmetric: {
      CounterRng rng(m.seed, n, kRatioSalt);
      double u = rng.next_double();
      double acc = 0.0;
      for (const auto& [v, w] : m.ratio_law.atoms) {
        acc += w;
        if (u < acc) return v;
      }
      return m.ratio_law.atoms.back().first;
    }
    case RatioLaw::Kind::BiasedTwoPoint: {
      CounterRng rng(m.seed, n, kRatioSalt);
      return rng.next_double() < m.ratio_law.w1 ? m.ratio_law.a1 : m.ratio_law.a2;
    }
  }
  return 1.0;
}

double draw_r(const EnvironmentModel& m, std::int64_t n) {
  if (m.r_law.kind == RLaw::Kind::Constant) return m.r_law.value;
  CounterRng rng(m.seed, n, kRSalt);
  return m.r_law.lo + (m.r_law.hi - m.r_law.lo) * rng.next_double();
}

double pattern_sign(DriftModel::SignPattern p, std::int64_t n) {
  switch (p) {
    case DriftModel::SignPattern::Positive: return 1.0;
    case DriftModel::SignPattern::Alternating: return (n % 2 == 0) ? 1.0 : -1.0;
    case DriftModel::SignPattern::Antisymmetric: return n > 0 ? 1.0 : (n < 0 ? -1.0 : 0.0);
  }
  return 1.0;
}

double draw_eps(const EnvironmentModel& m, std::int64_t n) {
  const auto& d = m.drift_model;
  switch (d.kind) {
    case DriftModel::Kind::Zero: return 0.0;
    case DriftModel::Kind::Constant: return d.c;
    case DriftModel::Kind::StretchExp:
      return d.c * pattern_sign(d.sign_pattern, n) * std::exp(-std::pow(std::fabs(double(n)), d.alpha));
    case DriftModel::Kind::IidUniform: {
      CounterRng rng(m.seed, n, kDriftSalt);
      const double scale = d.c * std::exp(-std::pow(std::fabs(double(n)), 0.5 - d.delta));
      return scale * rng.next_signed();
    }
    case DriftModel::Kind::IidTwoPoint: {
      CounterRng rng(m.seed, n, kDriftSalt);
      const double scale = d.c * std::exp(-std::pow(std::fabs(double(n)), 0.5 - d.delta));
      return rng.next_double() < 0.5 ? scale : -scale;
    }
  }
  return 0.0;
}

}  // namespace

Stratum generate_stratum(const EnvironmentModel& model, std::int64_t n) {
  Stratum s;
  const double a = draw_ratio(model, n);
  s.r = draw_r(model, n);
  s.p = (1.0 - s.r) / (1.0 + a);
  s.q = a * s.p;

  const int d = model.dimension;
  double eps = draw_eps(model, n);
  // The axis jump law needs |d * eps| <= 1; the hypothesis needs |eps| <= 1/eta.
  const double bound = std::min(1.0 / model.eta, 1.0 / d);
  if (std::fabs(eps) > bound) {
    eps = std::copysign(bound, eps);
    s.eps_clamped = true;
  }

  s.eps.assign(d, 0.0);
  s.eps[0] = eps;
  if (d == 1) {
    const double wp = (1.0 + eps) / 2.0, wm = (1.0 - eps) / 2.0;
    if (wp > 0.0) s.mu.atoms.push_back({IntVec{+1}, wp});
    if (wm > 0.0) s.mu.atoms.push_back({IntVec{-1}, wm});
  } else {
    for (int i = 0; i < d; ++i) {
      const double e = s.eps[i];
      IntVec up(d, 0), dn(d, 0);
      up[i] = +1;
      dn[i] = -1;
      const double wp = (1.0 + d * e) / (2.0 * d), wm = (1.0 - d * e) / (2.0 * d);
      if (wp > 0.0) s.mu.atoms.push_back({up, wp});
      if (wm > 0.0) s.mu.atoms.push_back({dn, wm});
    }
  }
  return s;
}

EnvironmentView::EnvironmentView(EnvironmentModel model)
    : state_(std::make_shared<State>()) {
  state_->model = std::move(model);
}

Stratum EnvironmentView::stratum(std::int64_t n) const {
  {
    std::lock_guard<std::mutex> lock(state_->mutex);
    auto it = state_->cache.find(n);
    if (it != state_->cache.end()) return it->second;
  }
  Stratum s = generate_stratum(state_->model, n);
  std::lock_guard<std::mutex> lock(state_->mutex);
  return state_->cache.emplace(n, std::move(s)).first->second;
}

EnvironmentView build_environment(const EnvironmentModel& model) {
  auto errs = model.validate();
  if (!errs.empty()) {
    std::string msg = "invalid environment model:";
    for (const auto& e : errs) msg += "\n  " + e;
    throw std::invalid_argument(msg);
  }
  return EnvironmentView(model);
}

void validate_stratum(const Stratum& s, double eta, int dimension, std::int64_t n,
                      std::vector<ValidationReport::Violation>& out) {
  const double sum = s.p + s.q + s.r;
  if (std::fabs(sum - 1.0) > 1e-12)
    out.push_back({n, "p+q+r=1", fmt("sum = %.17g", sum)});
  const double mn = std::min({s.p, s.q, s.r});
  if (mn < eta)
    out.push_back({n, "min(p,q,r)>=eta", fmt("min = %.17g", mn)});
  const double mom = s.mu.moment(double(std::max(dimension, 3)));
  if (mom > 1.0 / eta + 1e-12)
    out.push_back({n, "moment<=1/eta", fmt("moment = %.17g", mom)});
  if (dimension == 1) {
    if (s.mu.weight_at_zero() > 1.0 - eta + 1e-12)
      out.push_back({n, "mu(0)<=1-eta", fmt("mu(0) = %.17g", s.mu.weight_at_zero())});
  } else {
    const double lam = min_eigenvalue_sym(s.mu.second_moment(), dimension);
    if (lam < eta - 1e-12)
      out.push_back({n, "spectrum>=eta", fmt("min eigenvalue = %.17g", lam)});
  }
  // internal consistency: eps equals the recomputed mean of mu
  const auto m = s.mu.mean();
  for (std::size_t i = 0; i < m.size(); ++i)
    if (std::fabs(m[i] - s.eps[i]) > 1e-12)
      out.push_back({n, "eps==mean(mu)", fmt("coordinate gap = %.17g", m[i] - s.eps[i])});
}

ValidationReport validate_hypothesis(const EnvironmentView& env, std::int64_t n_lo,
                                     std::int64_t n_hi) {
  if (n_lo > n_hi) throw std::invalid_argument("validate_hypothesis: n_lo > n_hi");
  ValidationReport rep;
  rep.n_lo = n_lo;
  rep.n_hi = n_hi;
  const double eta = env.model().eta;
  const int d = env.model().dimension;
  for (std::int64_t n = n_lo; n <= n_hi; ++n) {
    validate_stratum(env.stratum(n), eta, d, n, rep.violations);
    ++rep.levels_checked;
  }
  return rep;
}

EnvStats env_stats(const EnvironmentView& env, std::int64_t n_lo, std::int64_t n_hi) {
  if (n_lo > n_hi) throw std::invalid_argument("env_stats: empty range");
  EnvStats st;
  double sum = 0.0, sum2 = 0.0;
  for (std::int64_t n = n_lo; n <= n_hi; ++n) {
    const Stratum s = env.stratum(n);
    const double la = s.log_a();
    sum += la;
    sum2 += la * la;
    st.min_pqr = std::min(st.min_pqr, std::min({s.p, s.q, s.r}));
    for (const auto& a : s.mu.atoms)
      for (auto c : a.offset) st.max_support = std::max(st.max_support, std::fabs(double(c)));
    ++st.levels;
  }
  st.mean_log_a = sum / double(st.levels);
  st.var_log_a = sum2 / double(st.levels) - st.mean_log_a * st.mean_log_a;
  return st;
}

}  // namespace stratawalk
