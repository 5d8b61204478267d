#include <doctest.h>

#include <cmath>
#include <random>

#include "stratawalk/signed_log.hpp"

using namespace stratawalk;

TEST_CASE("from_real captures sign and log magnitude") {
  const SignedLog z = SignedLog::from_real(0.0);
  CHECK(z.sgn == 0);
  CHECK(std::isinf(z.lmag));
  CHECK(z.lmag < 0);

  const SignedLog one = SignedLog::from_real(1.0);
  CHECK(one.sgn == +1);
  CHECK(one.lmag == 0.0);

  const SignedLog me2 = SignedLog::from_real(-std::exp(2.0));
  CHECK(me2.sgn == -1);
  CHECK(me2.lmag == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("round trip accuracy") {
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> mag(-30.0, 30.0);
  std::bernoulli_distribution coin;
  for (int i = 0; i < 100000; ++i) {
    const double x = (coin(rng) ? 1.0 : -1.0) * std::exp(mag(rng));
    const double back = SignedLog::from_real(x).to_real();
    CHECK(std::fabs(back - x) <= 1e-14 * std::fabs(x));
  }
}

TEST_CASE("addition examples") {
  const SignedLog a = sl_add(SignedLog::one(), SignedLog::one());
  CHECK(a.sgn == +1);
  CHECK(a.lmag == doctest::Approx(std::log(2.0)).epsilon(1e-15));

  const SignedLog cancel = sl_add(SignedLog::from_log(+1, 5.0), SignedLog::from_log(-1, 5.0));
  CHECK(cancel.is_zero());

  const SignedLog big = sl_add(SignedLog::from_log(+1, 1000.0), SignedLog::one());
  CHECK(big.sgn == +1);
  CHECK(big.lmag == doctest::Approx(1000.0).epsilon(1e-15));
}

TEST_CASE("multiplication examples and algebra") {
  const SignedLog m = sl_mul(SignedLog::from_log(+1, 3.0), SignedLog::from_log(-1, 4.0));
  CHECK(m.sgn == -1);
  CHECK(m.lmag == 7.0);

  CHECK(sl_mul(SignedLog::from_log(-1, 2.0), SignedLog::zero()).is_zero());

  const SignedLog sq = sl_mul(SignedLog::from_log(-1, 2.0), SignedLog::from_log(-1, 2.0));
  CHECK(sq.sgn == +1);
  CHECK(sq.lmag == 4.0);

  // associativity and commutativity are exact at the lmag level
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> mag(-100.0, 100.0);
  for (int i = 0; i < 1000; ++i) {
    const SignedLog x = SignedLog::from_log(+1, mag(rng));
    const SignedLog y = SignedLog::from_log(-1, mag(rng));
    const SignedLog z = SignedLog::from_log(+1, mag(rng));
    CHECK(sl_mul(x, y).lmag == sl_mul(y, x).lmag);  // exact: a + b == b + a
    // associativity is exact up to one reassociation rounding of the lmag sum
    const double lhs = sl_mul(sl_mul(x, y), z).lmag;
    const double rhs = sl_mul(x, sl_mul(y, z)).lmag;
    CHECK(std::fabs(lhs - rhs) <=
          2.0 * std::numeric_limits<double>::epsilon() *
              (std::fabs(x.lmag) + std::fabs(y.lmag) + std::fabs(z.lmag)));
    CHECK(sl_mul(sl_mul(x, y), z).sgn == sl_mul(x, sl_mul(y, z)).sgn);
  }
}

TEST_CASE("comparison is an order isomorphism") {
  CHECK(sl_cmp(SignedLog::from_log(+1, 0.0), SignedLog::from_log(+1, 1.0)) < 0);
  CHECK(sl_cmp(SignedLog::from_log(-1, 10.0), SignedLog::from_log(+1, -10.0)) < 0);
  CHECK(sl_cmp(SignedLog::zero(), SignedLog::zero()) == 0);

  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> mag(-30.0, 30.0);
  std::bernoulli_distribution coin;
  for (int i = 0; i < 20000; ++i) {
    const double x = (coin(rng) ? 1.0 : -1.0) * std::exp(mag(rng));
    const double y = (coin(rng) ? 1.0 : -1.0) * std::exp(mag(rng));
    const int want = x < y ? -1 : (x > y ? +1 : 0);
    CHECK(sl_cmp(SignedLog::from_real(x), SignedLog::from_real(y)) == want);
  }
}

TEST_CASE("random-pair addition matches real arithmetic away from cancellation") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> mag(-30.0, 30.0);
  std::bernoulli_distribution coin;
  for (int i = 0; i < 100000; ++i) {
    const double x = (coin(rng) ? 1.0 : -1.0) * std::exp(mag(rng));
    const double y = (coin(rng) ? 1.0 : -1.0) * std::exp(mag(rng));
    const double sum = x + y;
    if (std::fabs(sum) <= 1e-6 * std::max(std::fabs(x), std::fabs(y))) continue;
    const double got = sl_add(SignedLog::from_real(x), SignedLog::from_real(y)).to_real();
    CHECK(std::fabs(got - sum) <= 1e-10 * std::fabs(sum));
  }
}

TEST_CASE("to_real refuses magnitudes beyond exp(700)") {
  CHECK_THROWS_AS((void)SignedLog::from_log(+1, 701.0).to_real(), std::domain_error);
  CHECK_NOTHROW((void)SignedLog::from_log(+1, 699.0).to_real());
}

TEST_CASE("division, sqrt, square") {
  const SignedLog x = SignedLog::from_real(9.0);
  CHECK(sl_sqrt(x).to_real() == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(sl_sq(sl_sqrt(x)).lmag == x.lmag);  // halving then doubling lmag is exact
  CHECK(sl_div(SignedLog::from_real(1.0), SignedLog::from_real(4.0)).to_real() ==
        doctest::Approx(0.25).epsilon(1e-14));
  CHECK_THROWS_AS(sl_div(x, SignedLog::zero()), std::domain_error);
  CHECK_THROWS_AS(sl_sqrt(SignedLog::from_real(-1.0)), std::domain_error);
}

TEST_CASE("accumulator agrees with pairwise addition") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> mag(-5.0, 5.0);
  SlAccum acc;
  SignedLog ref = SignedLog::zero();
  double real_sum = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double x = std::exp(mag(rng));
    real_sum += x;
    const SignedLog v = SignedLog::from_real(x);
    acc.add(v);
    ref = sl_add(ref, v);
  }
  CHECK(acc.value().to_real() == doctest::Approx(real_sum).epsilon(1e-13));
  CHECK(ref.to_real() == doctest::Approx(real_sum).epsilon(1e-11));
}
