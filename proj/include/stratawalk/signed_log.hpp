#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace stratawalk {

// Sign + log-magnitude scalar. Carries every quantity whose magnitude can
// reach exp(+-10^4) (potentials rho_n, scale sums, squared dispersions).
// Invariant: sgn == 0  <=>  lmag == -infinity.
struct SignedLog {
  double lmag = -std::numeric_limits<double>::infinity();
  int sgn = 0;

  static constexpr double kCancelEps = 1e-12;   // opposite-sign lmag gap treated as exact zero
  static constexpr double kRealLimit = 700.0;   // to_real refuses beyond this

  static SignedLog zero() { return SignedLog{}; }
  static SignedLog one() { return SignedLog{0.0, +1}; }

  static SignedLog from_log(int sign, double lm) {
    if (sign == 0 || lm == -std::numeric_limits<double>::infinity()) return zero();
    return SignedLog{lm, sign < 0 ? -1 : +1};
  }

  static SignedLog from_real(double x) {
    if (!std::isfinite(x)) throw std::domain_error("SignedLog::from_real: non-finite input");
    if (x == 0.0) return zero();
    return SignedLog{std::log(std::fabs(x)), x < 0.0 ? -1 : +1};
  }

  bool is_zero() const { return sgn == 0; }
  bool positive() const { return sgn > 0; }

  // Overflow here means downstream code left the log domain by mistake.
  double to_real() const {
    if (sgn == 0) return 0.0;
    if (lmag > kRealLimit) throw std::domain_error("SignedLog::to_real: magnitude exceeds exp(700)");
    return sgn * std::exp(lmag);
  }

  double log10_mag() const { return lmag / 2.302585092994045684; }

  SignedLog operator-() const { return SignedLog{lmag, -sgn}; }
  SignedLog abs() const { return SignedLog{lmag, sgn == 0 ? 0 : +1}; }
};

inline SignedLog sl_mul(const SignedLog& a, const SignedLog& b) {
  if (a.sgn == 0 || b.sgn == 0) return SignedLog::zero();
  return SignedLog{a.lmag + b.lmag, a.sgn * b.sgn};
}

inline SignedLog sl_add(const SignedLog& a, const SignedLog& b) {
  if (a.sgn == 0) return b;
  if (b.sgn == 0) return a;
  const SignedLog& big = (a.lmag >= b.lmag) ? a : b;
  const SignedLog& small = (a.lmag >= b.lmag) ? b : a;
  const double d = small.lmag - big.lmag;  // <= 0
  if (a.sgn == b.sgn) {
    return SignedLog{big.lmag + std::log1p(std::exp(d)), a.sgn};
  }
  // Opposite signs: near-cancellation collapses to the exact zero element.
  if (-d <= SignedLog::kCancelEps) return SignedLog::zero();
  // log(e^B - e^S) = B + log(1 - e^(S-B)), via expm1 to keep small gaps accurate.
  return SignedLog{big.lmag + std::log(-std::expm1(d)), big.sgn};
}

inline SignedLog sl_sub(const SignedLog& a, const SignedLog& b) { return sl_add(a, -b); }

inline SignedLog sl_div(const SignedLog& a, const SignedLog& b) {
  if (b.sgn == 0) throw std::domain_error("SignedLog: division by zero");
  if (a.sgn == 0) return SignedLog::zero();
  return SignedLog{a.lmag - b.lmag, a.sgn * b.sgn};
}

inline SignedLog sl_inv(const SignedLog& a) { return sl_div(SignedLog::one(), a); }

inline SignedLog sl_sq(const SignedLog& a) {
  if (a.sgn == 0) return SignedLog::zero();
  return SignedLog{a.lmag * 2.0, +1};
}

inline SignedLog sl_sqrt(const SignedLog& a) {
  if (a.sgn == 0) return SignedLog::zero();
  if (a.sgn < 0) throw std::domain_error("SignedLog: sqrt of negative value");
  return SignedLog{a.lmag * 0.5, +1};
}

// Total order consistent with the represented real values.
inline int sl_cmp(const SignedLog& a, const SignedLog& b) {
  if (a.sgn != b.sgn) return a.sgn < b.sgn ? -1 : +1;
  if (a.sgn == 0) return 0;
  if (a.lmag == b.lmag) return 0;
  const bool a_less = (a.sgn > 0) ? (a.lmag < b.lmag) : (a.lmag > b.lmag);
  return a_less ? -1 : +1;
}

inline bool operator<(const SignedLog& a, const SignedLog& b) { return sl_cmp(a, b) < 0; }
inline bool operator>(const SignedLog& a, const SignedLog& b) { return sl_cmp(a, b) > 0; }
inline bool operator<=(const SignedLog& a, const SignedLog& b) { return sl_cmp(a, b) <= 0; }
inline bool operator>=(const SignedLog& a, const SignedLog& b) { return sl_cmp(a, b) >= 0; }
inline bool operator==(const SignedLog& a, const SignedLog& b) { return sl_cmp(a, b) == 0; }
inline bool operator!=(const SignedLog& a, const SignedLog& b) { return sl_cmp(a, b) != 0; }

inline SignedLog operator+(const SignedLog& a, const SignedLog& b) { return sl_add(a, b); }
inline SignedLog operator-(const SignedLog& a, const SignedLog& b) { return sl_sub(a, b); }
inline SignedLog operator*(const SignedLog& a, const SignedLog& b) { return sl_mul(a, b); }
inline SignedLog operator/(const SignedLog& a, const SignedLog& b) { return sl_div(a, b); }

inline SignedLog sl_max(const SignedLog& a, const SignedLog& b) { return a < b ? b : a; }

// Long-double accumulator for prefix-array builds. Sequential prefix sums over
// 10^5 levels would otherwise accumulate ~1e-12 of lmag drift, which the
// flat-case closed-form checks do not tolerate.
class SlAccum {
 public:
  SlAccum() = default;
  explicit SlAccum(const SignedLog& v) : lmag_(v.lmag), sgn_(v.sgn) {}

  void add(const SignedLog& v) {
    if (v.sgn == 0) return;
    if (sgn_ == 0) {
      sgn_ = v.sgn;
      lmag_ = v.lmag;
      return;
    }
    const long double vb = v.lmag;
    const long double big = lmag_ >= vb ? lmag_ : vb;
    const long double small = lmag_ >= vb ? vb : lmag_;
    const int big_sgn = lmag_ >= vb ? sgn_ : v.sgn;
    const long double d = small - big;
    if (sgn_ == v.sgn) {
      lmag_ = big + std::log1p(std::exp(d));
      return;
    }
    if (-d <= (long double)SignedLog::kCancelEps) {
      sgn_ = 0;
      lmag_ = -std::numeric_limits<long double>::infinity();
      return;
    }
    lmag_ = big + std::log(-std::expm1(d));
    sgn_ = big_sgn;
  }

  SignedLog value() const {
    if (sgn_ == 0) return SignedLog::zero();
    return SignedLog{(double)lmag_, sgn_};
  }

 private:
  long double lmag_ = -std::numeric_limits<long double>::infinity();
  int sgn_ = 0;
};

}  // namespace stratawalk
