#pragma once

// Special functions used throughout the library. All functions are pure and
// reject NaN or out-of-domain arguments with cpbh::DomainError.

#include <cstdint>

namespace cpbh {

/// log C(n, k). Relative error stays near machine precision for n up to 1e6.
double log_choose(std::int64_t n, std::int64_t k);

/// Standard normal upper tail 1 - Phi(z).
double normal_sf(double z);

/// Regularized incomplete beta I_x(a, b), i.e. the Beta(a, b) CDF at x.
double reg_inc_beta(double x, double a, double b);

/// P(Pois(lambda) >= k).
double poisson_tail(double lambda, std::int64_t k);

/// One-sided Fisher exact p-value for the table [[a, b], [c, d]]:
/// P(X >= a) with X hypergeometric under fixed margins (large top-left cell
/// is evidence against the null).
double fisher_exact_onesided(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d);

}  // namespace cpbh
