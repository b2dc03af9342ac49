#include "cpbh/bounds_verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "cpbh/error.hpp"
#include "cpbh/numerics.hpp"

namespace cpbh {

double CSequence::limit() const {
  if (values.empty()) return 0.0;
  return converged_at ? values[*converged_at - 1] : values.back();
}

CSequence c_sequence(std::size_t L, double tol) {
  if (L < 2) throw DomainError("c_sequence needs L >= 2");
  if (!(tol > 0.0)) throw DomainError("c_sequence needs tol > 0");
  CSequence out;
  out.tolerance = tol;
  out.values = {1.0, 1.5};
  for (std::size_t ell = 3; ell <= L; ++ell) {
    const double prev = out.values.back();
    const auto l = static_cast<std::int64_t>(ell);
    const double x = static_cast<double>(ell - 1) / prev;
    const double next = prev + poisson_tail(x, l - 1) - prev * poisson_tail(x, l);
    out.values.push_back(next);
    if (!out.converged_at && next - prev < tol) out.converged_at = ell;
  }
  return out;
}

IdentityCheck poisson_identity(double t, TailMode mode, std::size_t k_max) {
  if (!(t > 0.0 && t < 1.0)) throw DomainError("poisson_identity needs t in (0, 1)");
  if (k_max < 1) throw DomainError("poisson_identity needs k_max >= 1");
  IdentityCheck out;
  const double u = 1.0 - t;
  out.closed = mode == TailMode::Geq ? (t - t * t / 2.0) / (u * u) : (t * t / 2.0) / (u * u);

  // Chernoff: P(Pois(tk) >= k) <= (t e^{1-t})^k, so the tail after K is at
  // most rho^{K+1} / (1 - rho).
  const double log_rho = std::log(t) + 1.0 - t;
  const double rho = std::exp(log_rho);
  std::size_t K = 1;
  auto tail_after = [&](std::size_t k) {
    return std::exp(static_cast<double>(k + 1) * log_rho) / (1.0 - rho);
  };
  while (K < k_max && tail_after(K) >= 1e-10) ++K;
  out.terms = K;
  out.tail_bound = tail_after(K);

  double acc = 0.0;
  for (std::size_t k = K; k >= 1; --k) {
    const auto ki = static_cast<std::int64_t>(k);
    const double lambda = t * static_cast<double>(k);
    acc += poisson_tail(lambda, mode == TailMode::Geq ? ki : ki + 1);
  }
  out.series = acc;
  return out;
}

double poisson_argmax_check(int i, double c, std::size_t grid) {
  if (i < 2) throw DomainError("poisson_argmax_check needs i >= 2");
  if (!(c > 0.0)) throw DomainError("poisson_argmax_check needs c > 0");
  if (grid < 1) throw DomainError("poisson_argmax_check needs a nonempty grid");
  const double hi = 4.0 * i / c;
  double best_t = 0.0;
  double best_f = -INFINITY;
  for (std::size_t g = 1; g <= grid; ++g) {
    const double t = hi * static_cast<double>(g) / static_cast<double>(grid);
    const double f = poisson_tail(t, i - 1) - c * poisson_tail(t, i);
    if (f > best_f) {
      best_f = f;
      best_t = t;
    }
  }
  return best_t;
}

double globalnull_closed_bound(double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw DomainError("globalnull_closed_bound needs alpha in [0, 1)");
  const double u = 1.0 - alpha;
  return alpha + (alpha * alpha / 2.0) / (u * u);
}

double hoeffding_poisson_bound(double t, int i) {
  if (i < 1) throw DomainError("hoeffding_poisson_bound needs i >= 1");
  if (!(t >= 0.0) || std::isinf(t)) throw DomainError("hoeffding_poisson_bound needs finite t >= 0");
  if (i == 1) return std::min(t, 1.0);
  if (i == 2) return std::min(t * t / 2.0, 1.0);
  if (t > static_cast<double>(i - 1)) {
    throw DomainError("hoeffding_poisson_bound needs t <= i - 1 for i >= 3");
  }
  return poisson_tail(t, i);
}

std::vector<BoundCheck> run_bound_checks(double tol, std::size_t L) {
  std::vector<BoundCheck> out;
  const CSequence cs = c_sequence(L, tol);
  out.push_back({"c_1", cs.values[0], 1.0, cs.values[0] == 1.0});
  out.push_back({"c_2", cs.values[1], 1.5, cs.values[1] == 1.5});
  bool monotone = true;
  for (std::size_t k = 1; k < cs.values.size(); ++k) monotone = monotone && cs.values[k] >= cs.values[k - 1];
  out.push_back({"c_nondecreasing", monotone ? 1.0 : 0.0, 1.0, monotone});
  out.push_back({"c_converged", cs.converged_at ? static_cast<double>(*cs.converged_at) : -1.0,
                 static_cast<double>(L), cs.converged_at.has_value()});
  out.push_back({"c_limit", cs.limit(), 1.9227, cs.limit() <= 1.9227 + 1e-6});

  char name[64];
  for (double t : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    for (auto mode : {TailMode::Geq, TailMode::Gt}) {
      const IdentityCheck id = poisson_identity(t, mode, 100000);
      std::snprintf(name, sizeof name, "poisson_identity_%s_t%.1f", mode == TailMode::Geq ? "geq" : "gt", t);
      out.push_back({name, id.series, id.closed, std::abs(id.series - id.closed) <= 1e-8});
    }
  }
  const std::size_t grid = 20000;
  for (int i = 2; i <= 10; ++i) {
    for (double c : {1.0, 1.5, 1.9227}) {
      const double got = poisson_argmax_check(i, c, grid);
      const double want = (i - 1) / c;
      const double step = 4.0 * i / c / static_cast<double>(grid);
      std::snprintf(name, sizeof name, "poisson_argmax_i%d_c%.4g", i, c);
      out.push_back({name, got, want, std::abs(got - want) <= step});
    }
  }
  for (double a : {0.0, 0.1, 0.2, 0.3, 0.4, 0.5}) {
    const double b = globalnull_closed_bound(a);
    std::snprintf(name, sizeof name, "globalnull_bound_a%.1f", a);
    out.push_back({name, b, a + 2.0 * a * a, b <= a + 2.0 * a * a});
  }
  return out;
}

}  // namespace cpbh
