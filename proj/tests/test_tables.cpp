#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "stratawalk/analysis.hpp"
#include "stratawalk/environment.hpp"
#include "stratawalk/tables.hpp"

using namespace stratawalk;

namespace {

EnvironmentModel flat_model(std::uint64_t seed = 0) {
  EnvironmentModel m;
  m.eta = 0.1;
  m.ratio_law.kind = RatioLaw::Kind::Constant;
  m.ratio_law.a = 1.0;
  m.seed = seed;
  return m;
}

EnvironmentModel sinai_model(std::uint64_t seed) {
  EnvironmentModel m = flat_model(seed);
  m.eta = 0.2;
  m.ratio_law.kind = RatioLaw::Kind::TwoPoint;
  m.ratio_law.a = 2.0;
  return m;
}

// Stratum source with a prescribed ratio sequence a_n (all other data flat).
std::function<Stratum(std::int64_t)> scripted(std::map<std::int64_t, double> a) {
  return [a = std::move(a)](std::int64_t n) {
    Stratum s;
    const double ratio = a.count(n) ? a.at(n) : 1.0;
    s.r = 1.0 / 3.0;
    s.p = (1.0 - s.r) / (1.0 + ratio);
    s.q = ratio * s.p;
    s.mu.atoms = {{IntVec{+1}, 0.5}, {IntVec{-1}, 0.5}};
    s.eps = {0.0};
    return s;
  };
}

}  // namespace

TEST_CASE("flat environment: rho = 1, v(n) = n+1, w(n) = n+1") {
  const EnvironmentView env = build_environment(flat_model());
  const PotentialTables t = build_tables(env, 1100, 1100);
  for (std::int64_t n : {0L, 1L, 2L, 10L, 999L, 1000L}) {
    CHECK(t.S(n) == 0.0);
    CHECK(t.S(-n) == 0.0);
    CHECK(t.vplus()[std::size_t(n)].to_real() == doctest::Approx(double(n + 1)).epsilon(1e-12));
    CHECK(t.vminus()[std::size_t(n)].to_real() == doctest::Approx(double(n + 1)).epsilon(1e-12));
    CHECK(t.wplus()[std::size_t(n)].to_real() == doctest::Approx(double(n + 1)).epsilon(1e-12));
    CHECK(t.wminus()[std::size_t(n)].to_real() == doctest::Approx(double(n + 1)).epsilon(1e-12));
  }
}

TEST_CASE("prescribed ratios: a_1 = 2, a_2 = 1/2 gives rho_1 = 2, rho_2 = 1") {
  const PotentialTables t =
      build_tables_from(scripted({{1, 2.0}, {2, 0.5}}), 1, 0.2, 4, 4);
  CHECK(t.rho(1).to_real() == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(t.rho(2).to_real() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(t.rho(0).to_real() == 1.0);
}

TEST_CASE("negative side follows the product convention rho_n = a_{n+1}...a_{-1} a_0") {
  // a_0 = 3, a_{-1} = 5: rho_{-1} = a_0 = 3, rho_{-2} = a_{-1} a_0 = 15
  const PotentialTables t =
      build_tables_from(scripted({{0, 3.0}, {-1, 5.0}}), 1, 0.05, 5, 5);
  CHECK(t.rho(-1).to_real() == doctest::Approx(3.0).epsilon(1e-13));
  CHECK(t.rho(-2).to_real() == doctest::Approx(15.0).epsilon(1e-13));
  CHECK(t.a0() == doctest::Approx(3.0).epsilon(1e-14));
  // v_-(0) = a_0 * rho_{-1} = 9, v_-(1) = a_0 (rho_{-1} + rho_{-2}) = 54
  CHECK(t.vminus()[0].to_real() == doctest::Approx(9.0).epsilon(1e-13));
  CHECK(t.vminus()[1].to_real() == doctest::Approx(54.0).epsilon(1e-13));
}

TEST_CASE("biased a = 2 everywhere: v_+(n) = 2^{n+1} - 1") {
  EnvironmentModel m = flat_model();
  m.eta = 0.2;
  m.ratio_law.a = 2.0;
  const EnvironmentView env = build_environment(m);
  const PotentialTables t = build_tables(env, 2, 40);
  for (std::int64_t n : {0L, 1L, 5L, 20L, 39L}) {
    CHECK(t.vplus()[std::size_t(n)].to_real() ==
          doctest::Approx(std::pow(2.0, double(n + 1)) - 1.0).epsilon(1e-12));
  }
}

TEST_CASE("v tables match brute-force recomputation on a Sinai window") {
  const EnvironmentView env = build_environment(sinai_model(0));
  const PotentialTables t = build_tables(env, 1100, 1100);
  SlAccum acc;
  for (std::int64_t k = 0; k <= 1000; ++k) {
    acc.add(t.rho(k));
    if (k % 97 == 0 || k == 1000) {
      const SignedLog got = t.vplus()[std::size_t(k)];
      CHECK(std::fabs(got.lmag - acc.value().lmag) <= 1e-12 * std::max(1.0, std::fabs(got.lmag)));
    }
  }
  // v_-(n) = a_0 sum_{-n-1<=k<=-1} rho_k
  SlAccum accm;
  for (std::int64_t n = 0; n <= 1000; ++n) {
    accm.add(t.rho(-n - 1));
    if (n % 101 == 0 || n == 1000) {
      const SignedLog want =
          SignedLog::from_real(t.a0()) * accm.value();
      const SignedLog got = t.vminus()[std::size_t(n)];
      CHECK(std::fabs(got.lmag - want.lmag) <= 1e-12 * std::max(1.0, std::fabs(got.lmag)));
    }
  }
}

TEST_CASE("S increments are bounded by the ellipticity band") {
  const EnvironmentView env = build_environment(sinai_model(3));
  const PotentialTables t = build_tables(env, 500, 500);
  const double band = -std::log(0.2);
  for (std::int64_t n = -499; n <= 499; ++n)
    CHECK(std::fabs(t.S(n + 1) - t.S(n)) <= band + 1e-12);
}

TEST_CASE("v and w arrays are strictly increasing") {
  const EnvironmentView env = build_environment(sinai_model(5));
  const PotentialTables t = build_tables(env, 300, 300);
  for (std::size_t i = 1; i < t.vplus().size(); ++i) {
    CHECK(t.vplus()[i - 1] < t.vplus()[i]);
    CHECK(t.wplus()[i - 1] < t.wplus()[i]);
  }
  for (std::size_t i = 1; i < t.vminus().size(); ++i) {
    CHECK(t.vminus()[i - 1] < t.vminus()[i]);
    CHECK(t.wminus()[i - 1] < t.wminus()[i]);
  }
}

TEST_CASE("generalized inverse: flat cases and the left-closed convention") {
  const EnvironmentView env = build_environment(flat_model());
  const PotentialTables t = build_tables(env, 20, 20);
  // flat: v_+(n) = n+1, so the inverse of 10.5 is 9
  auto inv = generalized_inverse(t.vplus(), SignedLog::from_real(10.5));
  REQUIRE(inv.has_value());
  CHECK(*inv == 9);
  // exact table value maps to its own index
  inv = generalized_inverse(t.vplus(), t.vplus()[7]);
  REQUIRE(inv.has_value());
  CHECK(*inv == 7);
  // beyond the window end: out-of-window signal
  CHECK_FALSE(generalized_inverse(t.vplus(), SignedLog::from_real(1000.0)).has_value());
  // below f(0): precondition violation
  CHECK_THROWS_AS(generalized_inverse(t.vplus(), SignedLog::from_real(0.5)), std::domain_error);
}

TEST_CASE("generalized inverse sandwich on random monotone arrays") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> gap(0.01, 3.0);
  std::vector<SignedLog> f;
  double acc = 0.3;
  for (int i = 0; i < 500; ++i) {
    acc += gap(rng);
    f.push_back(SignedLog::from_real(acc));
  }
  std::uniform_real_distribution<double> probe(f.front().to_real(), f.back().to_real());
  int tested = 0;
  for (int i = 0; i < 1000; ++i) {
    const SignedLog x = SignedLog::from_real(probe(rng));
    const auto n = generalized_inverse(f, x);
    if (!n) continue;
    ++tested;
    CHECK(f[std::size_t(*n)] <= x);
    CHECK(x < f[std::size_t(*n) + 1]);
    // brute-force scan agrees
    std::int64_t want = -1;
    for (std::size_t k = 0; k < f.size(); ++k)
      if (f[k] <= x) want = std::int64_t(k);
    CHECK(*n == want);
  }
  CHECK(tested > 900);
}

TEST_CASE("window too large for the memory budget fails explicitly") {
  const EnvironmentView env = build_environment(flat_model());
  CHECK_THROWS_AS(build_tables(env, 1000000, 1000000, std::size_t(1) << 20),
                  std::length_error);
}

TEST_CASE("drift prefixes telescope to range sums") {
  EnvironmentModel m = sinai_model(9);
  m.drift_model.kind = DriftModel::Kind::StretchExp;
  m.drift_model.c = 1.0;
  m.drift_model.alpha = 0.25;
  const EnvironmentView env = build_environment(m);
  const PotentialTables t = build_tables(env, 200, 200);
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::int64_t k = std::int64_t(rng() % 300) - 150;
    const std::int64_t l = k + std::int64_t(rng() % 50);
    SlAccum acc;
    for (std::int64_t s = k; s <= l; ++s) acc.add(t.drift_term(s));
    const SignedLog direct = acc.value();
    const SignedLog via_prefix = t.drift_prefix(l) - t.drift_prefix(k - 1);
    if (direct.is_zero()) {
      CHECK(via_prefix.abs().lmag <= -25.0);  // cancels to noise level
    } else {
      CHECK(via_prefix.sgn == direct.sgn);
      CHECK(std::fabs(via_prefix.lmag - direct.lmag) <=
            1e-9 * std::max(1.0, std::fabs(direct.lmag)));
    }
  }
}
