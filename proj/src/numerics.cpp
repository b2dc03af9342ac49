#include "cpbh/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "cpbh/error.hpp"

namespace cpbh {
namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2 pi)

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw DomainError(std::string(what) + " must be finite");
}

// lgamma(x + 1) - [(x + 0.5) log x - x + 0.5 log(2 pi)], series valid for x >= 15.
double stirling_remainder(double x) {
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  return inv * (1.0 / 12.0 -
                inv2 * (1.0 / 360.0 -
                        inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 * (1.0 / 1188.0)))));
}

// log(x^a e^{-x} / Gamma(a + 1)), the leading factor of both incomplete gamma expansions.
double log_gamma_prefactor(double a, double x) {
  if (a < 15.0) return a * std::log(x) - x - std::lgamma(a + 1.0);
  const double d = (x - a) / a;
  const double core = std::abs(d) < 0.5 ? a * (std::log1p(d) - d) : a * std::log(x / a) + (a - x);
  return core - 0.5 * std::log(2.0 * std::numbers::pi * a) -
         stirling_remainder(a);
}

// Regularized lower incomplete gamma P(a, x) for a >= 1, x > 0.
double reg_lower_gamma(double a, double x) {
  constexpr int kMaxIter = 100000;
  constexpr double kEps = 1e-17;
  const double log_pref = log_gamma_prefactor(a, x);
  if (x < a + 1.0) {
    // P = D * sum_n x^n / ((a+1)...(a+n))
    double term = 1.0;
    double sum = 1.0;
    for (int n = 1; n < kMaxIter; ++n) {
      term *= x / (a + n);
      sum += term;
      if (term < kEps * sum) break;
    }
    return std::min(1.0, std::exp(log_pref) * sum);
  }
  // Q via the Legendre continued fraction (modified Lentz).
  constexpr double kTiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  // x^a e^{-x} / Gamma(a) = a * D
  const double q = std::exp(log_pref + std::log(a)) * h;
  return std::clamp(1.0 - q, 0.0, 1.0);
}

// Continued fraction for I_x(a, b) (Numerical Recipes betacf, modified Lentz).
double beta_cf(double x, double a, double b) {
  constexpr int kMaxIter = 10000;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return h;
}

// Kahan-compensated accumulator.
struct KahanSum {
  double sum = 0.0;
  double comp = 0.0;
  void add(double v) {
    const double y = v - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

}  // namespace

double log_choose(std::int64_t n, std::int64_t k) {
  if (n < 0 || k < 0 || k > n) {
    throw DomainError("log_choose requires 0 <= k <= n (got n=" + std::to_string(n) +
                      ", k=" + std::to_string(k) + ")");
  }
  const std::int64_t kk = std::min(k, n - k);
  if (kk == 0) return 0.0;
  if (kk <= 30) {
    // Every factor (n - kk + i) / i is at least 2, so each log is well conditioned.
    double s = 0.0;
    for (std::int64_t i = 1; i <= kk; ++i) {
      s += std::log(static_cast<double>(n - kk + i) / static_cast<double>(i));
    }
    return s;
  }
  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(kk);
  const double rd = nd - kd;
  // n log n - k log k - r log r rewritten as a sum of positive terms.
  const double main = kd * std::log(nd / kd) - rd * std::log1p(-kd / nd);
  return main + 0.5 * std::log(nd / (kd * rd)) - kHalfLog2Pi + stirling_remainder(nd) -
         stirling_remainder(kd) - stirling_remainder(rd);
}

double normal_sf(double z) {
  require_finite(z, "normal_sf argument");
  return 0.5 * std::erfc(z * std::numbers::sqrt2 * 0.5);
}

double reg_inc_beta(double x, double a, double b) {
  require_finite(x, "reg_inc_beta x");
  require_finite(a, "reg_inc_beta a");
  require_finite(b, "reg_inc_beta b");
  if (x < 0.0 || x > 1.0) throw DomainError("reg_inc_beta requires x in [0, 1]");
  if (a <= 0.0 || b <= 0.0) throw DomainError("reg_inc_beta requires a > 0 and b > 0");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::clamp(front * beta_cf(x, a, b) / a, 0.0, 1.0);
  }
  return std::clamp(1.0 - front * beta_cf(1.0 - x, b, a) / b, 0.0, 1.0);
}

double poisson_tail(double lambda, std::int64_t k) {
  require_finite(lambda, "poisson_tail lambda");
  if (lambda < 0.0) throw DomainError("poisson_tail requires lambda >= 0");
  if (k < 0) throw DomainError("poisson_tail requires k >= 0");
  if (k == 0) return 1.0;
  if (lambda == 0.0) return 0.0;
  const double kd = static_cast<double>(k);
  if (lambda > 50.0) return reg_lower_gamma(kd, lambda);

  if (kd > lambda) {
    // Upper tail summed directly; terms decrease from the first one.
    double term = std::exp(log_gamma_prefactor(kd, lambda));
    KahanSum acc;
    for (double j = kd; term > 0.0; j += 1.0) {
      acc.add(term);
      term *= lambda / (j + 1.0);
      if (term < 1e-17 * acc.sum) break;
    }
    return std::min(1.0, acc.sum);
  }
  // k <= lambda: the lower tail is the smaller side.
  double term = std::exp(-lambda);
  KahanSum acc;
  for (std::int64_t j = 0; j < k; ++j) {
    acc.add(term);
    term *= lambda / static_cast<double>(j + 1);
  }
  return std::clamp(1.0 - acc.sum, 0.0, 1.0);
}

double fisher_exact_onesided(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d) {
  if (a < 0 || b < 0 || c < 0 || d < 0) {
    throw DomainError("fisher_exact_onesided requires nonnegative counts");
  }
  const std::int64_t row1 = a + b;
  const std::int64_t row2 = c + d;
  const std::int64_t col1 = a + c;
  const std::int64_t total = row1 + row2;
  const std::int64_t lo = std::max<std::int64_t>(0, col1 - row2);
  const std::int64_t hi = std::min(row1, col1);
  if (a <= lo) return 1.0;

  const double log_pmf_a =
      log_choose(row1, a) + log_choose(row2, col1 - a) - log_choose(total, col1);
  double term = std::exp(log_pmf_a);
  KahanSum acc;
  for (std::int64_t x = a; x <= hi; ++x) {
    acc.add(term);
    if (x == hi) break;
    const double ratio = static_cast<double>(row1 - x) * static_cast<double>(col1 - x) /
                         (static_cast<double>(x + 1) * static_cast<double>(row2 - col1 + x + 1));
    term *= ratio;
    if (ratio < 1.0 && term < 1e-17 * acc.sum) break;
  }
  return std::clamp(acc.sum, 0.0, 1.0);
}

}  // namespace cpbh
