#pragma once

// Compound p-value constructions: averaging null CDFs, decreasing densities,
// permutation and Monte Carlo pooling across tests, weighted p-values,
// Gaussian means with unknown variances, and noisy data alignment.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cpbh/mt_core.hpp"

namespace cpbh {

// ---------------------------------------------------------------------------
// Average of null CDFs

enum class Orientation {
  Left,   // F_j(x) = P(X_j <= x); small statistics are evidence against the null
  Right,  // Fbar_j(x) = P(X_j >= x); large statistics are evidence against the null
};

struct CdfBank {
  std::vector<std::function<double(double)>> evaluators;
  Orientation orientation = Orientation::Right;

  /// Checks that every evaluator is monotone in the declared direction on
  /// the given increasing grid.
  bool monotone_on(std::span<const double> grid) const;
};

/// p_i = (1/m) sum_j bank_j(stat_i), clamped to [0, 1].
PValueVector avg_null_cdf_pvalues(std::span<const double> stats, const CdfBank& bank);

// ---------------------------------------------------------------------------
// Decreasing densities

struct DensityWeights {
  double delta = 0.0;                // log(e m^2) / m, never clamped
  std::vector<double> w;             // w_0 .. w_m
  std::vector<double> order_stats;   // X_(1) <= ... <= X_(m)

  /// min(1, w_i + ... + w_m) for a 1-based order-statistic position i.
  double tail_value(std::size_t position) const;
};

DensityWeights decreasing_density_weights(std::span<const double> x);

/// Largest value at X_i of any convex nonincreasing g: [0, inf) -> [0, 1]
/// whose drops between consecutive order statistics are at most delta.
PValueVector decreasing_density_pvalues(std::span<const double> x);

// ---------------------------------------------------------------------------
// Permutation pooling

/// One two-group trial. Each unit is a record of `width` reals stored
/// contiguously; the first n_treated units form the treated group.
struct TrialData {
  std::vector<double> values;
  std::size_t width = 1;
  std::size_t n_treated = 0;

  std::size_t units() const noexcept { return width == 0 ? 0 : values.size() / width; }
  std::span<const double> unit(std::size_t u) const {
    return std::span<const double>(values).subspan(u * width, width);
  }
  /// Throws DomainError unless 1 <= n_treated < units() and the record
  /// layout is consistent.
  void validate() const;
};

/// Must depend only on which units are treated, not on their order within a
/// group. Called concurrently from several threads.
using TrialStatistic = std::function<double(const TrialData&)>;

struct PermutationOptions {
  std::uint64_t exact_cap = 20000;  // enumerate when C(n, n_treated) <= exact_cap
  std::size_t mc_draws = 10000;     // random assignments otherwise (plus the observed one)
  std::uint64_t seed = 0;
};

/// Null statistics for one trial: every treated subset when enumerable,
/// otherwise the observed assignment plus mc_draws sampled ones. All entries
/// carry equal weight.
struct NullDistribution {
  std::vector<double> stats;  // ascending
  double observed = 0.0;
  bool approximated = false;

  /// Fraction of null statistics >= t.
  double tail_fraction(double t) const;
};

NullDistribution trial_null_distribution(const TrialData& trial, const TrialStatistic& statistic,
                                         const PermutationOptions& opts,
                                         std::size_t trial_index);

/// Union of per-trial null distributions, each trial weighted to total mass 1.
class PooledNull {
public:
  explicit PooledNull(std::span<const NullDistribution> trials);

  /// sum_j P_j(T >= t), in [0, number of trials].
  double tail_mass(double t) const;
  std::size_t trials() const noexcept { return trials_; }

private:
  // Trials with the same null size share integer counts, so each group's
  // contribution is one exact division.
  struct Group {
    std::uint64_t size = 0;
    std::vector<double> values;               // distinct, ascending
    std::vector<std::uint64_t> suffix_count;  // statistics >= values[k], plus trailing 0
  };
  std::vector<Group> groups_;  // ascending size
  std::size_t trials_ = 0;
};

struct PermutationPooling {
  PValueVector compound;            // pooled over all trials
  std::vector<double> permutation;  // each trial against its own null only
  std::vector<double> observed;
  std::vector<bool> approximated;
};

PermutationPooling permutation_pooling(std::span<const TrialData> trials,
                                       const TrialStatistic& statistic,
                                       const PermutationOptions& opts);

PValueVector permutation_pooled_pvalues(std::span<const TrialData> trials,
                                        const TrialStatistic& statistic,
                                        std::uint64_t exact_cap, std::uint64_t seed);

/// Number of distinct treated subsets, saturated at cap + 1.
std::uint64_t assignment_count(std::size_t n, std::size_t n_treated, std::uint64_t cap);

// ---------------------------------------------------------------------------
// Monte Carlo pooling

/// p_i = (1/m) sum_j [1{T_j >= t_i} + sum_k 1{T_jk >= t_i}] / (1 + K).
PValueVector mc_pooled_pvalues(std::span<const double> t_obs,
                               std::span<const std::vector<double>> t_null);

// ---------------------------------------------------------------------------
// Weighted p-values, Gaussian means, alignment

/// min(p*_i / w_i, 1). Weights must be positive and sum to m within 1e-9.
PValueVector weighted_pvalues(const PValueVector& pstar, std::span<const double> weights);

struct GaussianSummary {
  double ybar = 0.0;
  double s2 = 1.0;
  int n = 3;
};

/// p_i = (1/m) sum_j [1 - F_Beta(1/2, n/2 - 1)(n ybar_i^2 / ((n - 1) S_j^2))].
/// All summaries must share one n >= 3.
PValueVector gaussian_means_pvalues(std::span<const GaussianSummary> summaries);

/// Right-tail probability of T(x_j + noise) >= t for one unlabeled record.
using NoiseTail = std::function<double(double t, std::span<const double> x_j)>;
using AlignmentStatistic = std::function<double(std::span<const double> x)>;

/// p_i = (1/m) sum_j noise_sf(T(x_tilde_i), x_j).
PValueVector alignment_pooled_pvalues(std::span<const std::vector<double>> x_unlabeled,
                                      std::span<const std::vector<double>> x_tilde,
                                      const NoiseTail& noise_sf, const AlignmentStatistic& t_fn);

}  // namespace cpbh
