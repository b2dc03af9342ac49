#pragma once

// Simulation helpers shared by the unit tests and the acceptance runner.

#include <cmath>
#include <cstdint>
#include <vector>

#include "cpbh/constructions.hpp"
#include "cpbh/mt_core.hpp"
#include "cpbh/numerics.hpp"
#include "cpbh/rng.hpp"

namespace support {

inline double normal(cpbh::Rng& rng) {
  // Box-Muller, one value per call.
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

inline double chi_square(cpbh::Rng& rng, int df) {
  double s = 0.0;
  for (int k = 0; k < df; ++k) {
    const double z = normal(rng);
    s += z * z;
  }
  return s;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& v) {
  MeanSe out;
  for (double x : v) out.mean += x;
  out.mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - out.mean) * (x - out.mean);
  if (v.size() > 1) {
    out.se = std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
  }
  return out;
}

/// Difference in group means; depends only on the assignment.
inline double mean_difference(const cpbh::TrialData& t) {
  double s1 = 0.0, s0 = 0.0;
  const std::size_t n = t.units();
  for (std::size_t u = 0; u < n; ++u) (u < t.n_treated ? s1 : s0) += t.values[u];
  return s1 / static_cast<double>(t.n_treated) - s0 / static_cast<double>(n - t.n_treated);
}

/// Global-null trial set: every unit i.i.d. N(0, 1); trial sizes fixed.
inline std::vector<cpbh::TrialData> null_trials(cpbh::Rng& rng, std::size_t m, std::size_t n,
                                                std::size_t n_treated) {
  std::vector<cpbh::TrialData> out(m);
  for (auto& t : out) {
    t.width = 1;
    t.n_treated = n_treated;
    t.values.resize(n);
    for (auto& v : t.values) v = normal(rng);
  }
  return out;
}

/// Per-replicate values of (1/m) sum_i 1{p_i <= t}, one vector per t.
template <class Producer>
std::vector<MeanSe> empirical_null_cdf(Producer&& produce_p, std::size_t reps,
                                       const std::vector<double>& ts) {
  std::vector<std::vector<double>> frac(ts.size());
  for (std::size_t r = 0; r < reps; ++r) {
    const cpbh::PValueVector p = produce_p(r);
    for (std::size_t k = 0; k < ts.size(); ++k) {
      std::size_t c = 0;
      for (double v : p) c += v <= ts[k] ? 1 : 0;
      frac[k].push_back(static_cast<double>(c) / static_cast<double>(p.size()));
    }
  }
  std::vector<MeanSe> out;
  for (const auto& f : frac) out.push_back(mean_se(f));
  return out;
}

/// P-values with heavy mass on BH thresholds and at 1, so ties and
/// boundary cases come up often.
inline cpbh::PValueVector fuzz_vector(cpbh::Rng& rng, std::size_t m, double alpha) {
  std::vector<double> p(m);
  for (auto& v : p) {
    const double u = rng.uniform();
    if (u < 0.4) {
      v = cpbh::bh_threshold(alpha, 1 + rng.below(m), m);
    } else if (u < 0.5) {
      v = 1.0;
    } else {
      v = rng.uniform() * (rng.uniform() < 0.5 ? alpha : 1.0);
    }
  }
  return cpbh::PValueVector(std::move(p));
}

inline cpbh::NullMask fuzz_mask(cpbh::Rng& rng, std::size_t m) {
  std::vector<std::size_t> members;
  const double share = rng.uniform();
  for (std::size_t i = 0; i < m; ++i) {
    if (rng.uniform() < share) members.push_back(i);
  }
  return cpbh::NullMask(m, members);
}

}  // namespace support
