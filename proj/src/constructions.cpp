#include "cpbh/constructions.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "cpbh/error.hpp"
#include "cpbh/numerics.hpp"
#include "cpbh/rng.hpp"
#include "parallel.hpp"

namespace cpbh {
namespace {

double clamp01(double v) {
  if (std::isnan(v)) throw DomainError("construction produced NaN");
  return std::clamp(v, 0.0, 1.0);
}

// Copies the units of `trial` into `out`, treated subset first. `chosen` lists
// the treated unit indices in ascending order; unchosen units follow in
// ascending order.
void assign_groups(const TrialData& trial, std::span<const std::size_t> chosen,
                   std::vector<char>& mark, TrialData& out) {
  const std::size_t n = trial.units();
  const std::size_t w = trial.width;
  mark.assign(n, 0);
  for (std::size_t u : chosen) mark[u] = 1;
  out.width = w;
  out.n_treated = chosen.size();
  out.values.resize(trial.values.size());
  std::size_t pos = 0;
  for (std::size_t u : chosen) {
    std::copy_n(trial.values.begin() + static_cast<std::ptrdiff_t>(u * w), w,
                out.values.begin() + static_cast<std::ptrdiff_t>(pos));
    pos += w;
  }
  for (std::size_t u = 0; u < n; ++u) {
    if (mark[u]) continue;
    std::copy_n(trial.values.begin() + static_cast<std::ptrdiff_t>(u * w), w,
                out.values.begin() + static_cast<std::ptrdiff_t>(pos));
    pos += w;
  }
}

// Advances `idx` (ascending, values < n) to the next k-combination in
// lexicographic order. Returns false after the last one.
bool next_combination(std::vector<std::size_t>& idx, std::size_t n) {
  const std::size_t k = idx.size();
  std::size_t i = k;
  while (i > 0) {
    --i;
    if (idx[i] < n - k + i) {
      ++idx[i];
      for (std::size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace

// ---------------------------------------------------------------------------

bool CdfBank::monotone_on(std::span<const double> grid) const {
  for (const auto& f : evaluators) {
    for (std::size_t g = 1; g < grid.size(); ++g) {
      const double a = f(grid[g - 1]);
      const double b = f(grid[g]);
      if (orientation == Orientation::Left ? b < a : b > a) return false;
    }
  }
  return true;
}

PValueVector avg_null_cdf_pvalues(std::span<const double> stats, const CdfBank& bank) {
  const std::size_t m = stats.size();
  if (m == 0) throw DomainError("no statistics supplied");
  if (bank.evaluators.size() != m) {
    throw DomainError("CDF bank has " + std::to_string(bank.evaluators.size()) +
                      " evaluators for " + std::to_string(m) + " statistics");
  }
  std::vector<double> p(m);
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (const auto& f : bank.evaluators) acc += f(stats[i]);
    p[i] = clamp01(acc / static_cast<double>(m));
  }
  return PValueVector(std::move(p));
}

// ---------------------------------------------------------------------------

double DensityWeights::tail_value(std::size_t position) const {
  if (position < 1 || position >= w.size()) throw DomainError("order-statistic position out of range");
  double acc = 0.0;
  for (std::size_t j = w.size(); j-- > position;) acc += w[j];
  return std::clamp(acc, 0.0, 1.0);
}

DensityWeights decreasing_density_weights(std::span<const double> x) {
  const std::size_t m = x.size();
  if (m == 0) throw DomainError("decreasing-density construction needs m >= 1");
  for (double v : x) {
    if (!(v >= 0.0) || std::isinf(v)) throw DomainError("decreasing-density inputs must be finite and >= 0");
  }
  DensityWeights out;
  const double md = static_cast<double>(m);
  out.delta = (1.0 + 2.0 * std::log(md)) / md;
  out.order_stats.assign(x.begin(), x.end());
  std::sort(out.order_stats.begin(), out.order_stats.end());

  // xs[i] = X_(i) for i = 0..m with X_(0) = 0.
  std::vector<double> xs(m + 1, 0.0);
  std::copy(out.order_stats.begin(), out.order_stats.end(), xs.begin() + 1);
  std::vector<double> gap(m);
  std::vector<double> max_gap(m);
  for (std::size_t i = 0; i < m; ++i) {
    gap[i] = xs[i + 1] - xs[i];
    max_gap[i] = i == 0 ? gap[0] : std::max(max_gap[i - 1], gap[i]);
  }

  out.w.assign(m + 1, 0.0);
  out.w[m] = out.delta;
  double tail = out.delta;  // sum_{j > i} w_j
  for (std::size_t i = m; i-- > 0;) {
    double wi = 0.0;
    if (gap[i] > 0.0) {
      const double by_mass = (1.0 - tail) * gap[i] / xs[i + 1];
      const double by_slope = out.delta * gap[i] / max_gap[i];
      wi = std::min(by_mass, by_slope);
    }
    out.w[i] = wi;
    tail += wi;
  }
  return out;
}

PValueVector decreasing_density_pvalues(std::span<const double> x) {
  const DensityWeights dw = decreasing_density_weights(x);
  const std::size_t m = x.size();
  // suffix[i] = w_i + ... + w_m
  std::vector<double> suffix(m + 2, 0.0);
  for (std::size_t i = m + 1; i-- > 0;) suffix[i] = suffix[i + 1] + dw.w[i];
  std::vector<double> p(m);
  for (std::size_t i = 0; i < m; ++i) {
    // Any position among tied order statistics gives the same tail, since
    // the weights between ties are zero; use the first.
    const auto it = std::lower_bound(dw.order_stats.begin(), dw.order_stats.end(), x[i]);
    const auto pos = static_cast<std::size_t>(it - dw.order_stats.begin()) + 1;
    p[i] = std::clamp(suffix[pos], 0.0, 1.0);
  }
  return PValueVector(std::move(p));
}

// ---------------------------------------------------------------------------

void TrialData::validate() const {
  if (width == 0) throw DomainError("trial record width must be positive");
  if (values.size() % width != 0) throw DomainError("trial values are not a whole number of records");
  const std::size_t n = units();
  if (n_treated < 1 || n_treated >= n) {
    throw DomainError("degenerate trial: " + std::to_string(n_treated) + " treated of " +
                      std::to_string(n) + " units");
  }
}

std::uint64_t assignment_count(std::size_t n, std::size_t n_treated, std::uint64_t cap) {
  if (n_treated > n) return 0;
  const std::size_t k = std::min(n_treated, n - n_treated);
  uint128_t c = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    // C(n-k+i, i) = C(n-k+i-1, i-1) * (n-k+i) / i stays integral.
    c = c * (n - k + i) / i;
    if (c > cap) return cap + 1;
  }
  return static_cast<std::uint64_t>(c);
}

double NullDistribution::tail_fraction(double t) const {
  const auto it = std::lower_bound(stats.begin(), stats.end(), t);
  const auto count = static_cast<double>(stats.end() - it);
  return count / static_cast<double>(stats.size());
}

NullDistribution trial_null_distribution(const TrialData& trial, const TrialStatistic& statistic,
                                         const PermutationOptions& opts,
                                         std::size_t trial_index) {
  trial.validate();
  if (opts.exact_cap < 1) throw DomainError("exact_cap must be >= 1");
  const std::size_t n = trial.units();
  const std::size_t n1 = trial.n_treated;

  NullDistribution out;
  out.observed = statistic(trial);
  TrialData scratch;
  std::vector<char> mark;
  std::vector<std::size_t> idx(n1);

  const std::uint64_t count = assignment_count(n, n1, opts.exact_cap);
  if (count <= opts.exact_cap) {
    out.stats.reserve(count);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    do {
      assign_groups(trial, idx, mark, scratch);
      out.stats.push_back(statistic(scratch));
    } while (next_combination(idx, n));
  } else {
    if (opts.mc_draws < 1) throw DomainError("mc_draws must be >= 1");
    out.approximated = true;
    out.stats.reserve(opts.mc_draws + 1);
    out.stats.push_back(out.observed);
    Rng rng(substream_seed(opts.seed, trial_index));
    std::vector<std::size_t> perm(n);
    for (std::size_t d = 0; d < opts.mc_draws; ++d) {
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      for (std::size_t i = 0; i < n1; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(perm[i], perm[j]);
      }
      std::copy_n(perm.begin(), n1, idx.begin());
      std::sort(idx.begin(), idx.end());
      assign_groups(trial, idx, mark, scratch);
      out.stats.push_back(statistic(scratch));
    }
  }
  for (double s : out.stats) {
    if (std::isnan(s)) throw DomainError("trial statistic returned NaN");
  }
  std::sort(out.stats.begin(), out.stats.end());
  return out;
}

PooledNull::PooledNull(std::span<const NullDistribution> trials) : trials_(trials.size()) {
  std::map<std::uint64_t, std::vector<double>> by_size;
  for (const auto& t : trials) {
    if (t.stats.empty()) throw DomainError("empty null distribution");
    auto& bucket = by_size[t.stats.size()];
    bucket.insert(bucket.end(), t.stats.begin(), t.stats.end());
  }
  for (auto& [size, vals] : by_size) {
    std::sort(vals.begin(), vals.end());
    Group g;
    g.size = size;
    std::vector<std::uint64_t> mult;
    for (double v : vals) {
      if (g.values.empty() || g.values.back() != v) {
        g.values.push_back(v);
        mult.push_back(1);
      } else {
        ++mult.back();
      }
    }
    g.suffix_count.assign(g.values.size() + 1, 0);
    for (std::size_t k = g.values.size(); k-- > 0;) g.suffix_count[k] = g.suffix_count[k + 1] + mult[k];
    groups_.push_back(std::move(g));
  }
}

double PooledNull::tail_mass(double t) const {
  double acc = 0.0;
  for (const auto& g : groups_) {
    const auto k = static_cast<std::size_t>(
        std::lower_bound(g.values.begin(), g.values.end(), t) - g.values.begin());
    acc += static_cast<double>(g.suffix_count[k]) / static_cast<double>(g.size);
  }
  return acc;
}

PermutationPooling permutation_pooling(std::span<const TrialData> trials,
                                       const TrialStatistic& statistic,
                                       const PermutationOptions& opts) {
  const std::size_t m = trials.size();
  if (m == 0) throw DomainError("no trials supplied");
  for (const auto& t : trials) t.validate();

  std::vector<NullDistribution> nulls(m);
  detail::parallel_for(
      m, [&](std::size_t j) { nulls[j] = trial_null_distribution(trials[j], statistic, opts, j); },
      true);

  const PooledNull pooled(nulls);
  PermutationPooling out;
  std::vector<double> compound(m);
  out.permutation.resize(m);
  out.observed.resize(m);
  out.approximated.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double t = nulls[i].observed;
    out.observed[i] = t;
    out.approximated[i] = nulls[i].approximated;
    out.permutation[i] = nulls[i].tail_fraction(t);
    compound[i] = std::min(1.0, pooled.tail_mass(t) / static_cast<double>(m));
  }
  out.compound = PValueVector(std::move(compound));
  return out;
}

PValueVector permutation_pooled_pvalues(std::span<const TrialData> trials,
                                        const TrialStatistic& statistic,
                                        std::uint64_t exact_cap, std::uint64_t seed) {
  PermutationOptions opts;
  opts.exact_cap = exact_cap;
  opts.seed = seed;
  return permutation_pooling(trials, statistic, opts).compound;
}

// ---------------------------------------------------------------------------

PValueVector mc_pooled_pvalues(std::span<const double> t_obs,
                               std::span<const std::vector<double>> t_null) {
  const std::size_t m = t_obs.size();
  if (m == 0) throw DomainError("no statistics supplied");
  if (t_null.size() != m) throw DomainError("need one null list per observed statistic");
  const std::size_t k = t_null[0].size();
  if (k < 1) throw DomainError("null lists must be nonempty");
  std::vector<double> pooled;
  pooled.reserve(m * (k + 1));
  for (std::size_t j = 0; j < m; ++j) {
    if (t_null[j].size() != k) throw DomainError("ragged null lists");
    pooled.push_back(t_obs[j]);
    pooled.insert(pooled.end(), t_null[j].begin(), t_null[j].end());
  }
  for (double v : pooled) {
    if (std::isnan(v)) throw DomainError("NaN statistic");
  }
  std::sort(pooled.begin(), pooled.end());
  const double denom = static_cast<double>(k + 1) * static_cast<double>(m);
  std::vector<double> p(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto it = std::lower_bound(pooled.begin(), pooled.end(), t_obs[i]);
    p[i] = std::min(1.0, static_cast<double>(pooled.end() - it) / denom);
  }
  return PValueVector(std::move(p));
}

PValueVector weighted_pvalues(const PValueVector& pstar, std::span<const double> weights) {
  const std::size_t m = pstar.size();
  if (weights.size() != m) throw DomainError("weight count does not match p-value count");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0) || std::isinf(w)) throw DomainError("weights must be positive and finite");
    sum += w;
  }
  if (std::abs(sum - static_cast<double>(m)) > 1e-9) {
    throw DomainError("weights must sum to m (got " + std::to_string(sum) + ")");
  }
  std::vector<double> p(m);
  for (std::size_t i = 0; i < m; ++i) p[i] = std::min(pstar[i] / weights[i], 1.0);
  return PValueVector(std::move(p));
}

PValueVector gaussian_means_pvalues(std::span<const GaussianSummary> summaries) {
  const std::size_t m = summaries.size();
  if (m == 0) throw DomainError("no summaries supplied");
  const int n = summaries[0].n;
  if (n < 3) throw DomainError("Gaussian-means construction needs n >= 3");
  for (const auto& s : summaries) {
    if (s.n != n) throw DomainError("all summaries must share the same sample size n");
    if (!(s.s2 > 0.0) || std::isinf(s.s2)) throw DomainError("sample variance must be positive and finite");
    if (!std::isfinite(s.ybar)) throw DomainError("sample mean must be finite");
  }
  const double nd = n;
  const double b = nd / 2.0 - 1.0;
  std::vector<double> p(m);
  detail::parallel_for(m, [&](std::size_t i) {
    const double num = nd * summaries[i].ybar * summaries[i].ybar;
    double acc = 0.0;
    for (const auto& sj : summaries) {
      const double x = std::min(1.0, num / ((nd - 1.0) * sj.s2));
      acc += 1.0 - reg_inc_beta(x, 0.5, b);
    }
    p[i] = std::clamp(acc / static_cast<double>(m), 0.0, 1.0);
  });
  return PValueVector(std::move(p));
}

PValueVector alignment_pooled_pvalues(std::span<const std::vector<double>> x_unlabeled,
                                      std::span<const std::vector<double>> x_tilde,
                                      const NoiseTail& noise_sf, const AlignmentStatistic& t_fn) {
  const std::size_t m = x_unlabeled.size();
  if (m == 0) throw DomainError("no records supplied");
  if (x_tilde.size() != m) throw DomainError("unlabeled and noisy record counts differ");
  std::vector<double> p(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double t = t_fn(x_tilde[i]);
    double acc = 0.0;
    for (const auto& xj : x_unlabeled) acc += noise_sf(t, xj);
    p[i] = clamp01(acc / static_cast<double>(m));
  }
  return PValueVector(std::move(p));
}

}  // namespace cpbh
