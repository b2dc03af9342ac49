#pragma once

// Numerical checks of the constants and identities behind the FDR bounds:
// the c_l recursion, the Poisson argmax lemma, the Poisson series identities
// and the global-null closed form.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace cpbh {

struct CSequence {
  std::vector<double> values;             // c_1 .. c_L
  std::optional<std::size_t> converged_at;  // first l with c_l - c_{l-1} < tolerance
  double tolerance = 0.0;

  /// c at convergence, or c_L when the tolerance was not reached.
  double limit() const;
};

/// c_1 = 1, c_2 = 1.5 and for l >= 3
/// c_l = c_{l-1} + P(Pois(x) >= l-1) - c_{l-1} P(Pois(x) >= l), x = (l-1)/c_{l-1}.
CSequence c_sequence(std::size_t L, double tol);

enum class TailMode { Geq, Gt };

struct IdentityCheck {
  double series = 0.0;
  double closed = 0.0;
  std::size_t terms = 0;     // series summed over k = 1..terms
  double tail_bound = 0.0;   // analytic bound on the omitted terms
};

/// sum_{k>=1} P(Pois(t k) >= k) = (t - t^2/2) / (1-t)^2 and
/// sum_{k>=1} P(Pois(t k) > k) = (t^2/2) / (1-t)^2. The series stops at the
/// first K whose geometric tail bound is below 1e-10, or at k_max.
IdentityCheck poisson_identity(double t, TailMode mode, std::size_t k_max);

/// Grid argmax of P(Pois(t) >= i-1) - c P(Pois(t) >= i) over t in (0, 4i/c].
double poisson_argmax_check(int i, double c, std::size_t grid);

/// alpha + (alpha^2 / 2) / (1 - alpha)^2.
double globalnull_closed_bound(double alpha);

/// Upper bound on P(sum of independent Bernoullis >= i) when the means sum
/// to t: t for i = 1, t^2/2 for i = 2 (both capped at 1), and
/// P(Pois(t) >= i) for i >= 3, which requires t <= i - 1.
double hoeffding_poisson_bound(double t, int i);

struct BoundCheck {
  std::string name;
  double computed = 0.0;
  double reference = 0.0;
  bool pass = false;
};

/// The fixed battery reported by the verify-bounds command.
std::vector<BoundCheck> run_bound_checks(double tol, std::size_t L);

}  // namespace cpbh
