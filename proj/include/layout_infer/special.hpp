#ifndef LAYOUT_INFER_SPECIAL_HPP
#define LAYOUT_INFER_SPECIAL_HPP

#include <cmath>
#include <limits>
#include <numbers>

namespace layout_infer::special {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/**
 * log Gamma(x) for x > 0.
 *
 * Lanczos approximation with g = 607/128 and 15 coefficients (Godfrey);
 * relative accuracy is better than 1e-14 on (0, 1e8). For x < 0.5 the
 * reflection formula is used so tiny shape parameters stay accurate.
 */
inline double lgamma(double x) {
  if (!(x > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  if (x < 0.5) {
    // Gamma(x) Gamma(1 - x) = pi / sin(pi x)
    return std::log(std::numbers::pi / std::sin(std::numbers::pi * x)) - lgamma(1.0 - x);
  }
  static constexpr double kCoef[14] = {
      57.1562356658629235,     -59.5979603554754912,    14.1360979747417471,
      -0.491913816097620199,   .339946499848118887e-4,  .465236289270485756e-4,
      -.983744753048795646e-4, .158088703224912494e-3,  -.210264441724104883e-3,
      .217439618115212643e-3,  -.164318106536763890e-3, .844182239838527433e-4,
      -.261908384015814087e-4, .368991826595316234e-5};
  double y = x;
  double tmp = x + 5.24218750000000000;
  tmp = (x + 0.5) * std::log(tmp) - tmp;
  double ser = 0.999999999999997092;
  for (double c : kCoef) ser += c / ++y;
  return tmp + std::log(2.5066282746310005 * ser / x);
}

/// Digamma psi(x) for x > 0: upward recurrence to x >= 10, then the
/// asymptotic series through x^-12.
inline double digamma(double x) {
  if (!(x > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  double acc = 0.0;
  while (x < 10.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  const double series =
      inv2 * (1.0 / 12 -
              inv2 * (1.0 / 120 -
                      inv2 * (1.0 / 252 -
                              inv2 * (1.0 / 240 - inv2 * (1.0 / 132 - inv2 * (691.0 / 32760))))));
  return acc + std::log(x) - 0.5 * inv - series;
}

/// log of the Beta(a, b) density at x in (0, 1); -inf outside the support
/// or for non-positive shapes.
inline double beta_log_pdf(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0) || !(x > 0.0) || !(x < 1.0)) return kNegInf;
  return lgamma(a + b) - lgamma(a) - lgamma(b) + (a - 1.0) * std::log(x) +
         (b - 1.0) * std::log1p(-x);
}

/// log of the half-normal density with the given scale, x >= 0.
inline double half_normal_log_pdf(double x, double scale) {
  if (!(x >= 0.0) || !(scale > 0.0)) return kNegInf;
  return std::log(2.0 / (scale * std::sqrt(2.0 * std::numbers::pi))) -
         0.5 * (x / scale) * (x / scale);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

inline double inv_logit(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

/// log(inv_logit(u)) without cancellation.
inline double log_inv_logit(double u) {
  return u >= 0.0 ? -std::log1p(std::exp(-u)) : u - std::log1p(std::exp(u));
}

/// log(1 - inv_logit(u)).
inline double log1m_inv_logit(double u) { return log_inv_logit(-u); }

inline double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

/**
 * Inverse of the standard normal CDF (Wichura, AS241 PPND16), accurate to
 * about 1e-16 relative. Returns +-inf at p = 1 and p = 0.
 */
inline double normal_quantile(double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r +
                 67265.770927008700853) * r + 45921.953931549871457) * r +
               13731.693765509461125) * r + 1971.5909503065514427) * r +
             133.14166789178437745) * r + 3.387132872796366608) /
           (((((((r * 5226.495278852545925 + 28729.085735721942674) * r +
                 39307.89580009271061) * r + 21213.794301586595867) * r +
               5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r +
                0.24178072517745061177) * r + 1.27045825245236838258) * r +
              3.64784832476320460504) * r + 5.7694972214606914055) * r +
            4.6303378461565452959) * r + 1.42343711074968357734) /
          (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r +
                0.0151986665636164571966) * r + 0.14810397642748007459) * r +
              0.68976733498510000455) * r + 1.6763848301838038494) * r +
            2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r +
                0.0012426609473880784386) * r + 0.026532189526576123093) * r +
              0.29656057182850489123) * r + 1.7848265399172913358) * r +
            5.4637849111641143699) * r + 6.6579046435011037772) /
          (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r +
                1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r +
              0.0148753612908506148525) * r + 0.13692988092273580531) * r +
            0.59983220655588793769) * r + 1.0);
  }
  return q < 0.0 ? -val : val;
}

}  // namespace layout_infer::special

#endif  // LAYOUT_INFER_SPECIAL_HPP
