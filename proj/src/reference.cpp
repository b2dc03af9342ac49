#include "cpbh/reference.hpp"

#include <algorithm>
#include <cmath>

#include "cpbh/error.hpp"
#include "cpbh/numerics.hpp"

namespace cpbh::reference {

BHResult bh_reject(const PValueVector& p, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in [0, 1]");
  const std::size_t m = p.size();
  BHResult out;
  for (std::size_t k = 1; k <= m; ++k) {
    const double t = bh_threshold(alpha, k, m);
    std::size_t n = 0;
    for (double v : p) n += v <= t ? 1 : 0;
    if (n >= k) out.k_hat = k;
  }
  out.threshold = bh_threshold(alpha, out.k_hat, m);
  if (out.k_hat > 0) {
    for (std::size_t i = 0; i < m; ++i) {
      if (p[i] <= out.threshold) out.rejected.push_back(i);
    }
  }
  return out;
}

FdrEstimate estimate_fdr(const ExperimentConfig& cfg) {
  if (cfg.scenario == nullptr || cfg.reps < 1) throw DomainError("invalid experiment");
  const NullMask& h0 = cfg.scenario->h0();
  const std::size_t m = cfg.scenario->m();
  std::vector<double> values;
  values.reserve(cfg.reps);
  std::vector<double> p;
  for (std::size_t r = 0; r < cfg.reps; ++r) {
    Rng rng(substream_seed(cfg.seed, r));
    cfg.scenario->draw(rng, p);
    const BHResult res = reference::bh_reject(PValueVector(p), cfg.alpha);
    double v = 0.0;
    switch (cfg.metric) {
      case Metric::Fdr:
        v = fdp(res.rejected, h0);
        break;
      case Metric::ModifiedFdr:
        v = modified_fdp(res.rejected, h0, m, cfg.alpha, cfg.params);
        break;
      case Metric::AnyRejection:
        v = res.rejected.empty() ? 0.0 : 1.0;
        break;
    }
    values.push_back(v);
  }
  FdrEstimate out;
  out.reps = cfg.reps;
  out.seed = cfg.seed;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(cfg.reps);
  if (cfg.reps > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.se = std::sqrt(ss / static_cast<double>(cfg.reps - 1)) / std::sqrt(static_cast<double>(cfg.reps));
  }
  return out;
}

PermutationPooling permutation_pooling(std::span<const TrialData> trials,
                                       const TrialStatistic& statistic,
                                       const PermutationOptions& opts) {
  const std::size_t m = trials.size();
  if (m == 0) throw DomainError("no trials supplied");
  std::vector<NullDistribution> nulls;
  nulls.reserve(m);
  for (std::size_t j = 0; j < m; ++j) nulls.push_back(trial_null_distribution(trials[j], statistic, opts, j));

  PermutationPooling out;
  std::vector<double> compound(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double t = nulls[i].observed;
    double acc = 0.0;
    for (const auto& nj : nulls) {
      std::size_t c = 0;
      for (double s : nj.stats) c += s >= t ? 1 : 0;
      acc += static_cast<double>(c) / static_cast<double>(nj.stats.size());
    }
    compound[i] = std::min(1.0, acc / static_cast<double>(m));
    std::size_t own = 0;
    for (double s : nulls[i].stats) own += s >= t ? 1 : 0;
    out.permutation.push_back(static_cast<double>(own) / static_cast<double>(nulls[i].stats.size()));
    out.observed.push_back(t);
    out.approximated.push_back(nulls[i].approximated);
  }
  out.compound = PValueVector(std::move(compound));
  return out;
}

PValueVector gaussian_means_pvalues(std::span<const GaussianSummary> summaries) {
  const std::size_t m = summaries.size();
  if (m == 0) throw DomainError("no summaries supplied");
  const int n = summaries[0].n;
  if (n < 3) throw DomainError("Gaussian-means construction needs n >= 3");
  std::vector<double> p(m);
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (summaries[j].n != n) throw DomainError("all summaries must share the same sample size n");
      const double x = n * summaries[i].ybar * summaries[i].ybar / ((n - 1) * summaries[j].s2);
      acc += 1.0 - reg_inc_beta(std::min(1.0, x), 0.5, n / 2.0 - 1.0);
    }
    p[i] = std::clamp(acc / static_cast<double>(m), 0.0, 1.0);
  }
  return PValueVector(std::move(p));
}

}  // namespace cpbh::reference
