#include <doctest.h>

#include <cmath>
#include <random>

#include "stratawalk/analysis.hpp"
#include "stratawalk/environment.hpp"
#include "stratawalk/tables.hpp"

using namespace stratawalk;

namespace {

EnvironmentModel flat_env() {
  EnvironmentModel m;
  m.eta = 0.2;
  m.ratio_law.kind = RatioLaw::Kind::Constant;
  m.ratio_law.a = 1.0;
  return m;
}

EnvironmentModel sinai_env(std::uint64_t seed, double drift_alpha = 0.0) {
  EnvironmentModel m = flat_env();
  m.ratio_law.kind = RatioLaw::Kind::TwoPoint;
  m.ratio_law.a = 2.0;
  m.seed = seed;
  if (drift_alpha > 0.0) {
    m.drift_model.kind = DriftModel::Kind::StretchExp;
    m.drift_model.c = 1.0;
    m.drift_model.alpha = drift_alpha;
  }
  return m;
}

SignedLog eval_kind(const PotentialTables& t, const SignedLog& x, PhiKind kind) {
  switch (kind) {
    case PhiKind::Phi: return phi_sym(t, x);
    case PhiKind::PhiPlus: return phi_plus(t, x);
    case PhiKind::PhiStr: return phi_str(t, x);
  }
  return SignedLog::zero();
}

}  // namespace

TEST_CASE("flat structure inverse: closed form") {
  const EnvironmentView env = build_environment(flat_env());
  const PotentialTables t = build_tables(env, 200, 200);
  // Phi_str(n) = sqrt(n(2n-1)): Phi_str(5) = sqrt(45).  Probe with the
  // function's own value so the left-closed convention is exact.
  const SignedLog inv = phi_inverse(t, phi_str(t, std::int64_t(5)), PhiKind::PhiStr);
  CHECK(std::round(inv.to_real()) == 5.0);
  const SignedLog slightly_above = SignedLog::from_real(std::sqrt(45.0) * (1.0 + 1e-9));
  CHECK(std::round(phi_inverse(t, slightly_above, PhiKind::PhiStr).to_real()) == 5.0);
  // just below the value at 5 the left-closed inverse drops to 4
  const SignedLog just_below = SignedLog::from_real(std::sqrt(45.0) * (1.0 - 1e-9));
  CHECK(std::round(phi_inverse(t, just_below, PhiKind::PhiStr).to_real()) == 4.0);
}

TEST_CASE("sandwich property holds exactly for all scale inverses") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::uint64_t seed : {0ull, 1ull, 2ull}) {
    for (double alpha : {0.0, 0.25}) {
      const EnvironmentView env = build_environment(sinai_env(seed, alpha));
      const PotentialTables t = build_tables(env, 3000, 3000);
      for (PhiKind kind : {PhiKind::Phi, PhiKind::PhiPlus, PhiKind::PhiStr}) {
        // probe arguments whose inverse stays in the exact integer range
        const double hi_scale_lmag = std::min(t.max_scale().lmag - 0.1, 34.0);
        const SignedLog f_lo = eval_kind(t, SignedLog::from_real(1.0), kind);
        const SignedLog f_hi = eval_kind(t, SignedLog::from_log(+1, hi_scale_lmag), kind);
        int violations = 0;
        for (int probe = 0; probe < 1000; ++probe) {
          const double lx = f_lo.lmag + unif(rng) * (f_hi.lmag - f_lo.lmag);
          const SignedLog x = SignedLog::from_log(+1, lx);
          SignedLog n;
          try {
            n = phi_inverse(t, x, kind);
          } catch (const std::domain_error&) {
            continue;
          }
          const double n_int = std::round(n.to_real());  // exact in this range
          const SignedLog fn = eval_kind(t, SignedLog::from_real(n_int), kind);
          const SignedLog fn1 = eval_kind(t, SignedLog::from_real(n_int + 1.0), kind);
          if (!(fn <= x)) ++violations;
          if (!(x < fn1)) ++violations;
        }
        CHECK(violations == 0);
      }
    }
  }
}

TEST_CASE("inverse-of-value identity at plateau right endpoints") {
  // Phi and Phi_+ are piecewise constant between index-jump scales, so the
  // generalized inverse recovers exactly the last integer of each plateau.
  const EnvironmentView env = build_environment(sinai_env(3, 0.25));
  const PotentialTables t = build_tables(env, 3000, 3000);
  const auto& thr = t.scale_thresholds();
  int tested = 0;
  for (PhiKind kind : {PhiKind::Phi, PhiKind::PhiPlus}) {
    for (std::size_t i = 0; i < thr.size() && tested < 600; ++i) {
      if (!(thr[i].lmag > 1.0 && thr[i].lmag < 33.0)) continue;
      const double end = std::ceil(thr[i].to_real()) - 1.0;
      if (end < 1.0) continue;
      const SignedLog n = SignedLog::from_real(end);
      const SignedLog n1 = SignedLog::from_real(end + 1.0);
      if (!(n1 < t.max_scale())) continue;
      const SignedLog fn = eval_kind(t, n, kind);
      if (!(fn < eval_kind(t, n1, kind))) continue;  // tie of two thresholds
      const SignedLog back = phi_inverse(t, fn, kind);
      CHECK(std::round(back.to_real()) == end);
      ++tested;
    }
  }
  CHECK(tested >= 200);
}

TEST_CASE("strictly increasing structure function inverts any integer exactly") {
  const EnvironmentView env = build_environment(sinai_env(5));
  const PotentialTables t = build_tables(env, 3000, 3000);
  std::mt19937_64 rng(17);
  const double top = std::min(t.max_scale().lmag - 0.2, 33.0);
  for (int probe = 0; probe < 1000; ++probe) {
    const double lx = (double(rng() % 100000) / 100000.0) * top;
    const double n = std::floor(std::exp(lx));
    if (n < 1.0) continue;
    const SignedLog x = SignedLog::from_real(n);
    const SignedLog y = phi_str(t, x);
    CHECK(std::round(phi_inverse(t, y, PhiKind::PhiStr).to_real()) == n);
  }
}

TEST_CASE("v_+ inverse under dominated variation: flat ratios approach 2") {
  const EnvironmentView env = build_environment(flat_env());
  const PotentialTables t = build_tables(env, 5000, 5000);
  // v_+^{-1}(x) = floor(x) - 1 on the flat environment
  for (double x : {100.0, 1000.0, 2400.0}) {
    const auto n1 = generalized_inverse(t.vplus(), SignedLog::from_real(x));
    const auto n2 = generalized_inverse(t.vplus(), SignedLog::from_real(2.0 * x));
    REQUIRE(n1.has_value());
    REQUIRE(n2.has_value());
    CHECK(double(*n2) / double(*n1) == doctest::Approx(2.0).epsilon(0.02));
  }
}

TEST_CASE("dominated variation estimate: flat c_hat near 2 for phi_str") {
  const EnvironmentView env = build_environment(flat_env());
  const PotentialTables t = build_tables(env, 300000, 300000);
  const DomVarEstimate est = dominated_variation_estimate(t, PhiKind::PhiStr, GridSpec{});
  REQUIRE(est.points.size() >= 3);
  // Phi_str^{-1}(x) ~ x / sqrt(2): doubling x doubles the inverse
  CHECK(est.c_hat >= 1.8);
  CHECK(est.c_hat <= 2.5);
}

TEST_CASE("dominated variation c_hat is stable under window doubling on Sinai") {
  for (std::uint64_t seed : {0ull, 4ull, 9ull}) {
    const EnvironmentView env = build_environment(sinai_env(seed));
    const PotentialTables small = build_tables(env, 50000, 50000);
    const PotentialTables big = build_tables(env, 100000, 100000);
    for (PhiKind kind : {PhiKind::PhiStr, PhiKind::Phi, PhiKind::PhiPlus}) {
      const double c1 = dominated_variation_estimate(small, kind, GridSpec{}).c_hat;
      const double c2 = dominated_variation_estimate(big, kind, GridSpec{}).c_hat;
      CHECK(c1 > 0.0);
      CHECK(std::isfinite(c2));
      CHECK(std::fabs(c2 - c1) / c1 <= 0.2);
    }
  }
}

TEST_CASE("drift mass and its inverse") {
  const EnvironmentView env = build_environment(sinai_env(6, 0.25));
  const PotentialTables t = build_tables(env, 2000, 2000);
  // C is nondecreasing on positive drift and the inverse satisfies the sandwich
  const SignedLog c_small = drift_mass(t, SignedLog::from_real(10.0));
  const SignedLog c_big =
      drift_mass(t, SignedLog::from_log(+1, t.max_scale().lmag - 0.5));
  CHECK(c_small.sgn == +1);
  CHECK(c_small <= c_big);
  const SignedLog y = SignedLog::from_log(+1, 0.5 * (c_small.lmag + c_big.lmag));
  const SignedLog n = drift_mass_inverse(t, y);
  const double n_int = std::round(n.to_real());
  CHECK(drift_mass(t, SignedLog::from_real(n_int)) <= y);
  CHECK(y < drift_mass(t, SignedLog::from_real(n_int + 1.0)));
}

TEST_CASE("inverse signals below-range and out-of-window arguments") {
  const EnvironmentView env = build_environment(sinai_env(7));
  const PotentialTables t = build_tables(env, 500, 500);
  CHECK_THROWS_AS(phi_inverse(t, SignedLog::from_real(0.5), PhiKind::Phi), std::domain_error);
  const SignedLog top_value =
      phi_sym(t, SignedLog::from_log(+1, t.max_scale().lmag - 1e-9));
  CHECK_THROWS_AS(phi_inverse(t, top_value + top_value, PhiKind::Phi), OutOfWindowError);
}
