#include <doctest.h>

#include <cmath>
#include <random>

#include "stratawalk/analysis.hpp"
#include "stratawalk/environment.hpp"
#include "stratawalk/tables.hpp"

using namespace stratawalk;

namespace {

EnvironmentModel base_model(std::uint64_t seed) {
  EnvironmentModel m;
  m.eta = 0.2;
  m.ratio_law.kind = RatioLaw::Kind::Constant;
  m.ratio_law.a = 1.0;
  m.seed = seed;
  return m;
}

EnvironmentModel flat_env() { return base_model(0); }

EnvironmentModel sinai_env(std::uint64_t seed) {
  EnvironmentModel m = base_model(seed);
  m.ratio_law.kind = RatioLaw::Kind::TwoPoint;
  m.ratio_law.a = 2.0;
  return m;
}

EnvironmentModel with_drift(EnvironmentModel m, DriftModel::Kind kind, double c,
                            double param = 0.5) {
  m.drift_model.kind = kind;
  m.drift_model.c = c;
  if (kind == DriftModel::Kind::StretchExp) m.drift_model.alpha = param;
  if (kind == DriftModel::Kind::IidUniform || kind == DriftModel::Kind::IidTwoPoint)
    m.drift_model.delta = param;
  return m;
}

double rel_lmag_gap(const SignedLog& a, const SignedLog& b) {
  return std::fabs(a.lmag - b.lmag) / std::max(1.0, std::fabs(b.lmag));
}

// scale strictly below the window's reachable v-range: max_scale * u, u in (0,1)
SignedLog below_max(const PotentialTables& t, double u) {
  return SignedLog::from_log(+1, t.max_scale().lmag + std::log(u));
}

}  // namespace

TEST_CASE("flat structure function closed form sqrt(n(2n-1))") {
  const EnvironmentView env = build_environment(flat_env());
  const PotentialTables t = build_tables(env, 1100, 1100);
  CHECK(phi_str(t, std::int64_t(1)).to_real() == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(phi_str(t, std::int64_t(5)).to_real() ==
        doctest::Approx(std::sqrt(45.0)).epsilon(1e-13));
  for (std::int64_t n : {2L, 3L, 10L, 100L, 707L, 1000L}) {
    const double want = std::sqrt(double(n) * double(2 * n - 1));
    CHECK(phi_str(t, n).to_real() == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("flat symmetric dispersion closed form sqrt(2n(2n-1))") {
  const EnvironmentView env = build_environment(flat_env());
  const PotentialTables t = build_tables(env, 1100, 1100);
  CHECK(phi_sym(t, std::int64_t(5)).to_real() ==
        doctest::Approx(std::sqrt(90.0)).epsilon(1e-13));
  for (std::int64_t n : {1L, 2L, 17L, 256L, 1000L}) {
    const double want = std::sqrt(double(2 * n) * double(2 * n - 1));
    CHECK(phi_sym(t, n).to_real() == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("flat one-sided dispersion: Phi_+(5) = sqrt(60)") {
  const EnvironmentView env = build_environment(flat_env());
  const PotentialTables t = build_tables(env, 1100, 1100);
  CHECK(phi_plus(t, std::int64_t(5)).to_real() ==
        doctest::Approx(std::sqrt(60.0)).epsilon(1e-13));
}

TEST_CASE("single-index range: Phi^2 = 2 + (r_0 eps_0 / p_0)^2") {
  const EnvironmentModel m =
      with_drift(base_model(4), DriftModel::Kind::Constant, 0.7);
  const EnvironmentView env = build_environment(m);
  const PotentialTables t = build_tables(env, 10, 10);
  const Stratum s0 = env.stratum(0);
  const double T0 = s0.r * s0.eps[0] / s0.p;
  const SignedLog zero = SignedLog::zero();
  const SignedLog phi00 = phi_range(t, zero, zero);
  CHECK(phi00.to_real() == doctest::Approx(std::sqrt(2.0 + T0 * T0)).epsilon(1e-13));
  const SignedLog brute = phi_brute(t, zero, zero);
  CHECK(rel_lmag_gap(phi00, brute) <= 1e-12);
}

TEST_CASE("fast path equals the literal double sum across environment families") {
  std::vector<EnvironmentModel> models = {
      flat_env(),
      with_drift(flat_env(), DriftModel::Kind::Constant, 0.5),
      sinai_env(1),
      with_drift(sinai_env(2), DriftModel::Kind::StretchExp, 1.0, 0.25),
      with_drift(sinai_env(3), DriftModel::Kind::StretchExp, 1.0, 0.75),
      with_drift(sinai_env(4), DriftModel::Kind::IidUniform, 1.0, 0.1),
      with_drift(sinai_env(5), DriftModel::Kind::IidTwoPoint, 1.0, 0.2),
      with_drift(flat_env(), DriftModel::Kind::IidTwoPoint, 0.8, 0.3),
  };
  std::mt19937_64 rng(555);
  for (std::size_t mi = 0; mi < models.size(); ++mi) {
    const EnvironmentView env = build_environment(models[mi]);
    const PotentialTables t = build_tables(env, 400, 400);
    const bool signed_drift = models[mi].drift_model.kind == DriftModel::Kind::IidUniform ||
                              models[mi].drift_model.kind == DriftModel::Kind::IidTwoPoint;
    // signed iid drift admits intrinsic cancellation in both evaluation routes
    const double tol = signed_drift ? 1e-6 : 1e-9;
    std::uniform_real_distribution<double> unif(1e-9, 1.0);
    for (int trial = 0; trial < 25; ++trial) {
      const SignedLog m = below_max(t, unif(rng));
      const SignedLog n = below_max(t, unif(rng));
      const SignedLog fast = phi_range(t, m, n);
      const SignedLog brute = phi_brute(t, m, n);
      CHECK(rel_lmag_gap(fast, brute) <= tol);
    }
  }
}

TEST_CASE("definitional identity: Phi_+^2 = Phi(-n,0)^2 + Phi(0,n)^2, bit-consistent") {
  const EnvironmentModel m =
      with_drift(sinai_env(6), DriftModel::Kind::StretchExp, 1.0, 0.25);
  const EnvironmentView env = build_environment(m);
  const PotentialTables t = build_tables(env, 300, 300);
  const SignedLog zero = SignedLog::zero();
  for (double frac : {0.05, 0.2, 0.4, 0.6, 0.8, 0.99}) {
    const SignedLog x = below_max(t, frac);
    const SignedLog lhs = sl_sq(phi_plus(t, x));
    const SignedLog rhs = sl_sq(phi_range(t, x, zero)) + sl_sq(phi_range(t, zero, x));
    CHECK(lhs.lmag == rhs.lmag);  // same code path, same fold
  }
}

TEST_CASE("psi is exactly the squared structure function") {
  const EnvironmentView env = build_environment(sinai_env(7));
  const PotentialTables t = build_tables(env, 300, 300);
  for (double frac : {0.01, 0.13, 0.5, 0.77, 0.99}) {
    const SignedLog x = below_max(t, frac);
    CHECK(psi(t, x).lmag == sl_sq(phi_str(t, x)).lmag);  // lmag/2*2 is exact
  }
}

TEST_CASE("subset monotonicity: Phi(n) dominates both one-sided values") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    EnvironmentModel m = sinai_env(1000 + trial);
    if (trial % 2) m = with_drift(m, DriftModel::Kind::IidUniform, 1.0, 0.15);
    const EnvironmentView env = build_environment(m);
    const PotentialTables t = build_tables(env, 60, 60);
    const SignedLog zero = SignedLog::zero();
    const double u = (1.0 + double(rng() % 999)) / 1000.0;
    const SignedLog x = below_max(t, u);
    const SignedLog full = phi_sym(t, x);
    CHECK(full >= phi_range(t, zero, x));
    CHECK(full >= phi_range(t, x, zero));
  }
}

TEST_CASE("origin-pair correction: Phi^2 >= Phi_+^2 - (2 + T_0^2) always") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    EnvironmentModel m = sinai_env(2000 + trial);
    m = with_drift(m, trial % 2 ? DriftModel::Kind::IidTwoPoint : DriftModel::Kind::Constant,
                   0.9, 0.2);
    const EnvironmentView env = build_environment(m);
    const PotentialTables t = build_tables(env, 50, 50);
    const Stratum s0 = env.stratum(0);
    const double T0 = s0.r * s0.eps[0] / s0.p;
    const SignedLog origin_pair = SignedLog::from_real(2.0 + T0 * T0);
    const double u = (1.0 + double(rng() % 999)) / 1000.0;
    const SignedLog x = below_max(t, u);
    const SignedLog lhs = sl_sq(phi_sym(t, x)) + origin_pair;
    CHECK(lhs >= sl_sq(phi_plus(t, x)));
    // brute-force route agrees with the inequality
    const SignedLog zero = SignedLog::zero();
    const SignedLog brute_lhs = sl_sq(phi_brute(t, x, x)) + origin_pair;
    const SignedLog brute_rhs =
        sl_sq(phi_brute(t, x, zero)) + sl_sq(phi_brute(t, zero, x));
    CHECK(brute_lhs >= brute_rhs);
  }
}

TEST_CASE("dispersion functions are nondecreasing in the scale argument") {
  const EnvironmentModel m =
      with_drift(sinai_env(10), DriftModel::Kind::StretchExp, 1.0, 0.25);
  const EnvironmentView env = build_environment(m);
  const PotentialTables t = build_tables(env, 2000, 2000);
  SignedLog prev_phi = SignedLog::zero(), prev_plus = SignedLog::zero(),
            prev_str = SignedLog::zero();
  for (double lx = -3.0; lx < t.max_scale().lmag - 1e-9; lx += 0.37) {
    const SignedLog x = SignedLog::from_log(+1, lx);
    const SignedLog f = phi_sym(t, x);
    const SignedLog fp = phi_plus(t, x);
    const SignedLog fs = phi_str(t, x);
    CHECK(f >= prev_phi);
    CHECK(fp >= prev_plus);
    CHECK(fs >= prev_str);
    prev_phi = f;
    prev_plus = fp;
    prev_str = fs;
  }
}

TEST_CASE("phi ordering constant stays below the ellipticity bound 1 + 1/eta") {
  // Phi_str^2 = n W < (1 + 1/eta) (sum rho)(sum 1/rho) <= (1 + 1/eta) Phi^2
  for (std::uint64_t seed : {0ull, 1ull, 2ull, 3ull}) {
    const EnvironmentView env = build_environment(sinai_env(seed));
    const PotentialTables t = build_tables(env, 3000, 3000);
    const double c_grid = phi_ordering_constant(t, GridSpec{});
    CHECK(c_grid >= 1.0);
    CHECK(c_grid <= 1.0 + 1.0 / t.eta() + 1e-9);
  }
}

TEST_CASE("brute-force cap is enforced") {
  const EnvironmentView env = build_environment(flat_env());
  const PotentialTables t = build_tables(env, 3000, 3000);
  const SignedLog big = SignedLog::from_real(2500.0);
  CHECK_THROWS_AS(phi_brute(t, big, big, 4000), std::invalid_argument);
}

TEST_CASE("d != 1 environments reject the planar dispersion ops") {
  EnvironmentModel m = base_model(0);
  m.dimension = 2;
  const EnvironmentView env = build_environment(m);
  const PotentialTables t = build_tables(env, 20, 20);
  const SignedLog five = SignedLog::from_real(5.0);
  CHECK_THROWS_AS(phi_sym(t, five), std::invalid_argument);
  CHECK_NOTHROW(phi_str(t, five));  // structure function is defined for all d
}
