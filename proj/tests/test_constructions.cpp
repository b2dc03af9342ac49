#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "cpbh/constructions.hpp"
#include "cpbh/error.hpp"
#include "cpbh/numerics.hpp"
#include "cpbh/reference.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace cpbh;

// ---------------------------------------------------------------------------
// Average of null CDFs

TEST(AvgNullCdf, IdenticalLeftCdfsGiveProbabilityIntegralTransform) {
  CdfBank bank;
  bank.orientation = Orientation::Left;
  for (int j = 0; j < 4; ++j) bank.evaluators.push_back([](double x) { return 1.0 - normal_sf(x); });
  const std::vector<double> x{-1.0, 0.0, 0.3, 2.0};
  const PValueVector p = avg_null_cdf_pvalues(x, bank);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(p[i], 1.0 - normal_sf(x[i]), 1e-15);
}

TEST(AvgNullCdf, HandExampleRightTails) {
  CdfBank bank;
  bank.evaluators.push_back([](double x) { return std::max(0.0, 1.0 - x); });
  bank.evaluators.push_back([](double x) { return std::max(0.0, 1.0 - x / 2.0); });
  const std::vector<double> x{1.0, 0.0};
  const PValueVector p = avg_null_cdf_pvalues(x, bank);
  EXPECT_DOUBLE_EQ(p[0], 0.25);
  EXPECT_DOUBLE_EQ(p[1], 1.0);
  const std::vector<double> grid{0.0, 0.5, 1.0, 1.5, 2.0, 3.0};
  EXPECT_TRUE(bank.monotone_on(grid));
}

TEST(AvgNullCdf, ConstantBankAndMismatch) {
  CdfBank bank;
  for (int j = 0; j < 3; ++j) bank.evaluators.push_back([](double) { return 1.0; });
  const std::vector<double> x{0.1, 5.0, -3.0};
  for (double v : avg_null_cdf_pvalues(x, bank)) EXPECT_EQ(v, 1.0);
  const std::vector<double> two{0.1, 0.2};
  EXPECT_THROW(avg_null_cdf_pvalues(two, bank), DomainError);
}

TEST(CdfBank, DetectsWrongOrientation) {
  CdfBank bank;
  bank.orientation = Orientation::Right;
  bank.evaluators.push_back([](double x) { return std::min(1.0, std::max(0.0, x)); });
  const std::vector<double> grid{0.0, 0.5, 1.0};
  EXPECT_FALSE(bank.monotone_on(grid));
}

// ---------------------------------------------------------------------------
// Decreasing densities

TEST(DecreasingDensity, SinglePoint) {
  const std::vector<double> x{2.7};
  const DensityWeights w = decreasing_density_weights(x);
  EXPECT_DOUBLE_EQ(w.delta, 1.0);
  EXPECT_DOUBLE_EQ(w.w[1], 1.0);
  EXPECT_EQ(decreasing_density_pvalues(x)[0], 1.0);
}

TEST(DecreasingDensity, TiedInputs) {
  const std::vector<double> x(7, 3.25);
  const DensityWeights w = decreasing_density_weights(x);
  for (std::size_t i = 1; i < 7; ++i) EXPECT_EQ(w.w[i], 0.0);
  const PValueVector p = decreasing_density_pvalues(x);
  for (double v : p) EXPECT_EQ(v, p[0]);
}

TEST(DecreasingDensity, DeltaIsUnclamped) {
  const std::vector<double> x{0.5, 1.0, 4.0};
  const DensityWeights w = decreasing_density_weights(x);
  EXPECT_NEAR(w.delta, (1.0 + 2.0 * std::log(3.0)) / 3.0, 1e-15);
  EXPECT_GT(w.delta, 1.0);
  EXPECT_EQ(w.w.back(), w.delta);
  for (double v : decreasing_density_pvalues(x)) EXPECT_EQ(v, 1.0);
}

TEST(DecreasingDensity, StrictlyIncreasingInputs) {
  std::vector<double> x;
  for (int i = 1; i <= 40; ++i) x.push_back(0.1 * i * i);
  const PValueVector p = decreasing_density_pvalues(x);
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_GT(p[i], 0.0);
    if (i > 0) {
      EXPECT_LE(p[i], p[i - 1]);
    }
  }
}

TEST(DecreasingDensity, UnsortedInputAndTies) {
  const std::vector<double> x{3.0, 0.5, 3.0, 9.0, 0.0, 1.5, 9.0, 2.0};
  const PValueVector p = decreasing_density_pvalues(x);
  EXPECT_EQ(p[0], p[2]);
  EXPECT_EQ(p[3], p[6]);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (x[i] <= x[j]) {
        EXPECT_GE(p[i], p[j]);
      }
    }
  }
}

TEST(DecreasingDensity, RejectsNegativeInput) {
  const std::vector<double> x{1.0, -0.5};
  EXPECT_THROW(decreasing_density_weights(x), DomainError);
  EXPECT_THROW(decreasing_density_pvalues(std::vector<double>{}), DomainError);
}

TEST(DecreasingDensity, MatchesLinearProgramOracle) {
  Rng rng(99);
  for (int inst = 0; inst < 150; ++inst) {
    const std::size_t m = 3 + rng.below(4);
    std::vector<double> x(m);
    const int style = static_cast<int>(rng.below(4));
    for (auto& v : x) {
      v = -std::log1p(-rng.uniform()) * (style == 3 ? 10.0 : 1.0);
      if (style == 1) v = std::round(v * 4.0) / 4.0;  // ties
      if (style == 2 && rng.uniform() < 0.3) v = 0.0;
    }
    const DensityWeights w = decreasing_density_weights(x);
    const PValueVector p = decreasing_density_pvalues(x);
    for (std::size_t i = 0; i < m; ++i) {
      const double want = std::min(1.0, oracle::density_sup(x, x[i], w.delta));
      ASSERT_NEAR(p[i], want, 1e-9) << "instance " << inst << " point " << i;
    }
  }
}

TEST(DecreasingDensity, SimulationProfile) {
  Rng rng(11);
  const std::size_t m = 10000;
  std::vector<double> x(m);
  for (std::size_t i = 0; i < m; ++i) {
    x[i] = i < 9000 ? std::abs(support::normal(rng)) : std::abs(10.0 + 2.0 * support::normal(rng));
  }
  const PValueVector p = decreasing_density_pvalues(x);
  std::vector<double> nn(p.begin() + 9000, p.end());
  std::sort(nn.begin(), nn.end());
  EXPECT_LT(nn[500], 0.05);  // most non-nulls land near zero
  std::vector<double> all = p.vec();
  std::sort(all.begin(), all.end());
  // Sorted curve sits below the diagonal over its left part.
  for (std::size_t k = 500; k <= 1000; k += 100) EXPECT_LT(all[k - 1], static_cast<double>(k) / m);
}

// ---------------------------------------------------------------------------
// Permutation pooling

namespace {

TrialData pair_trial(double treated, double control) {
  TrialData t;
  t.values = {treated, control};
  t.n_treated = 1;
  return t;
}

}  // namespace

TEST(AssignmentCount, Values) {
  EXPECT_EQ(assignment_count(6, 3, 100), 20u);
  EXPECT_EQ(assignment_count(2, 1, 100), 2u);
  EXPECT_EQ(assignment_count(40, 20, 1000), 1001u);
  EXPECT_EQ(assignment_count(60, 30, 1ULL << 62), static_cast<std::uint64_t>(oracle::choose(60, 30)));
}

TEST(PermutationPooling, TwoPairExample) {
  const std::vector<TrialData> trials{pair_trial(1, 0), pair_trial(3, 0)};
  const PValueVector p = permutation_pooled_pvalues(trials, support::mean_difference, 20000, 0);
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.25);
}

TEST(PermutationPooling, SingleTrialIsClassicalPermutationTest) {
  TrialData t;
  t.values = {2.0, 1.5, 0.3, -0.2, 0.1, 0.9};
  t.n_treated = 2;
  const std::vector<TrialData> trials{t};
  const PermutationPooling pool = permutation_pooling(trials, support::mean_difference, {});
  // Brute force over the 15 treated pairs.
  std::size_t ge = 0;
  const double obs = support::mean_difference(t);
  for (std::size_t a = 0; a < 6; ++a) {
    for (std::size_t b = a + 1; b < 6; ++b) {
      const double s1 = t.values[a] + t.values[b];
      double s0 = 0.0;
      for (double v : t.values) s0 += v;
      s0 -= s1;
      if (s1 / 2.0 - s0 / 4.0 >= obs - 1e-12) ++ge;
    }
  }
  EXPECT_DOUBLE_EQ(pool.permutation[0], static_cast<double>(ge) / 15.0);
  EXPECT_EQ(pool.compound[0], pool.permutation[0]);
}

TEST(PermutationPooling, InvariantToWithinGroupOrder) {
  Rng rng(5);
  auto trials = support::null_trials(rng, 12, 7, 3);
  const PValueVector p1 = permutation_pooled_pvalues(trials, support::mean_difference, 20000, 1);
  for (auto& t : trials) {
    std::reverse(t.values.begin(), t.values.begin() + 3);
    std::reverse(t.values.begin() + 3, t.values.end());
  }
  const PValueVector p2 = permutation_pooled_pvalues(trials, support::mean_difference, 20000, 1);
  for (std::size_t i = 0; i < p1.size(); ++i) EXPECT_NEAR(p1[i], p2[i], 1e-15);
}

TEST(PermutationPooling, IdentityAssignmentBoundsPValueBelow) {
  Rng rng(6);
  const auto trials = support::null_trials(rng, 25, 8, 4);
  const PValueVector p = permutation_pooled_pvalues(trials, support::mean_difference, 20000, 0);
  for (double v : p) {
    EXPECT_GE(v, 1.0 / (25.0 * 70.0));
    EXPECT_LE(v, 1.0);
  }
}

TEST(PermutationPooling, MatchesSerialReference) {
  Rng rng(12);
  std::vector<TrialData> trials;
  for (std::size_t n : {4, 5, 6, 7, 8, 9, 10, 12}) {
    auto more = support::null_trials(rng, 3, n, n / 2);
    trials.insert(trials.end(), more.begin(), more.end());
  }
  PermutationOptions opts;
  opts.exact_cap = 100;  // some trials fall back to sampling
  opts.mc_draws = 500;
  opts.seed = 77;
  const auto fast = permutation_pooling(trials, support::mean_difference, opts);
  const auto slow = reference::permutation_pooling(trials, support::mean_difference, opts);
  ASSERT_EQ(fast.compound.size(), slow.compound.size());
  bool any_approx = false;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    EXPECT_NEAR(fast.compound[i], slow.compound[i], 1e-12);
    EXPECT_EQ(fast.permutation[i], slow.permutation[i]);
    EXPECT_EQ(fast.approximated[i], slow.approximated[i]);
    any_approx = any_approx || fast.approximated[i];
  }
  EXPECT_TRUE(any_approx);
}

TEST(PermutationPooling, SampledModeIsSeeded) {
  Rng rng(13);
  const auto trials = support::null_trials(rng, 5, 20, 10);
  PermutationOptions opts;
  opts.mc_draws = 300;
  opts.seed = 4;
  const auto a = permutation_pooling(trials, support::mean_difference, opts);
  const auto b = permutation_pooling(trials, support::mean_difference, opts);
  EXPECT_EQ(a.compound, b.compound);
  for (bool f : a.approximated) EXPECT_TRUE(f);
  opts.seed = 5;
  const auto c = permutation_pooling(trials, support::mean_difference, opts);
  EXPECT_NE(a.compound, c.compound);
}

TEST(PermutationPooling, DegenerateTrial) {
  TrialData t;
  t.values = {1.0, 2.0};
  t.n_treated = 2;
  const std::vector<TrialData> trials{t};
  EXPECT_THROW(permutation_pooled_pvalues(trials, support::mean_difference, 100, 0), DomainError);
  t.n_treated = 0;
  const std::vector<TrialData> trials0{t};
  EXPECT_THROW(permutation_pooled_pvalues(trials0, support::mean_difference, 100, 0), DomainError);
}

TEST(PermutationPooling, CompoundValidityUnderGlobalNull) {
  const std::vector<double> ts{0.01, 0.05, 0.1, 0.2, 0.5};
  const auto cdf = support::empirical_null_cdf(
      [](std::size_t r) {
        Rng rng(substream_seed(31, r));
        const auto trials = support::null_trials(rng, 100, 6, 3);
        return permutation_pooled_pvalues(trials, support::mean_difference, 20000, r);
      },
      100, ts);
  for (std::size_t k = 0; k < ts.size(); ++k) EXPECT_LE(cdf[k].mean, ts[k] + 3 * cdf[k].se) << ts[k];
}

// ---------------------------------------------------------------------------
// Monte Carlo pooling

TEST(McPooling, Examples) {
  const std::vector<double> obs{5.0};
  const std::vector<std::vector<double>> nulls{{3.0, 7.0}};
  EXPECT_DOUBLE_EQ(mc_pooled_pvalues(obs, nulls)[0], 2.0 / 3.0);

  const std::vector<double> low{-1e300};
  const std::vector<std::vector<double>> any{{3.0, 7.0}};
  EXPECT_EQ(mc_pooled_pvalues(low, any)[0], 1.0);

  const std::vector<double> sym{1.0, 2.0};
  const std::vector<std::vector<double>> sym_null{{2.0, 0.5}, {1.0, 0.5}};
  const PValueVector p = mc_pooled_pvalues(sym, sym_null);
  const std::vector<double> sym2{2.0, 1.0};
  const std::vector<std::vector<double>> sym_null2{{1.0, 0.5}, {2.0, 0.5}};
  const PValueVector q = mc_pooled_pvalues(sym2, sym_null2);
  EXPECT_EQ(p[0], q[1]);
  EXPECT_EQ(p[1], q[0]);
}

TEST(McPooling, RaggedNullLists) {
  const std::vector<double> obs{1.0, 2.0};
  const std::vector<std::vector<double>> nulls{{1.0, 2.0}, {1.0}};
  EXPECT_THROW(mc_pooled_pvalues(obs, nulls), DomainError);
}

TEST(McPooling, CompoundValidityUnderExchangeableNulls) {
  const std::vector<double> ts{0.01, 0.05, 0.1, 0.2, 0.5};
  const auto cdf = support::empirical_null_cdf(
      [](std::size_t r) {
        Rng rng(substream_seed(32, r));
        const std::size_t m = 100, K = 9;
        std::vector<double> obs(m);
        std::vector<std::vector<double>> nulls(m, std::vector<double>(K));
        for (std::size_t j = 0; j < m; ++j) {
          // Different null laws per test; draws exchangeable within a test.
          const double scale = 1.0 + static_cast<double>(j % 5);
          obs[j] = scale * support::normal(rng);
          for (auto& v : nulls[j]) v = scale * support::normal(rng);
        }
        return mc_pooled_pvalues(obs, nulls);
      },
      1000, ts);
  for (std::size_t k = 0; k < ts.size(); ++k) EXPECT_LE(cdf[k].mean, ts[k] + 3 * cdf[k].se) << ts[k];
}

// ---------------------------------------------------------------------------
// Weighted, Gaussian means, alignment

TEST(Weighted, Examples) {
  const PValueVector ps({0.3, 0.9, 0.5});
  const std::vector<double> ones{1.0, 1.0, 1.0};
  EXPECT_EQ(weighted_pvalues(ps, ones), ps);
  const std::vector<double> w{2.0, 0.5, 0.5};
  const PValueVector p = weighted_pvalues(ps, w);
  EXPECT_DOUBLE_EQ(p[0], 0.15);
  EXPECT_EQ(p[1], 1.0);
  EXPECT_EQ(p[2], 1.0);
}

TEST(Weighted, Validation) {
  const PValueVector ps({0.3, 0.9});
  EXPECT_THROW(weighted_pvalues(ps, std::vector<double>{1.0, 1.1}), DomainError);
  EXPECT_THROW(weighted_pvalues(ps, std::vector<double>{2.0, 0.0}), DomainError);
  EXPECT_THROW(weighted_pvalues(ps, std::vector<double>{2.5, -0.5}), DomainError);
  EXPECT_THROW(weighted_pvalues(ps, std::vector<double>{2.0}), DomainError);
  EXPECT_NO_THROW(weighted_pvalues(ps, std::vector<double>{1.0 + 1e-10, 1.0}));
}

TEST(GaussianMeans, ZeroMeanGivesOne) {
  const std::vector<GaussianSummary> s{{0.0, 1.0, 5}, {0.7, 2.0, 5}};
  EXPECT_EQ(gaussian_means_pvalues(s)[0], 1.0);
}

TEST(GaussianMeans, SelfPooled) {
  const std::vector<GaussianSummary> s{{0.8, 1.3, 6}};
  const double x = 6 * 0.64 / (5 * 1.3);
  EXPECT_NEAR(gaussian_means_pvalues(s)[0], 1.0 - reg_inc_beta(x, 0.5, 2.0), 1e-15);
}

TEST(GaussianMeans, Validation) {
  EXPECT_THROW(gaussian_means_pvalues(std::vector<GaussianSummary>{{0.1, 1.0, 2}}), DomainError);
  EXPECT_THROW(gaussian_means_pvalues(std::vector<GaussianSummary>{{0.1, 1.0, 5}, {0.1, 1.0, 6}}),
               DomainError);
  EXPECT_THROW(gaussian_means_pvalues(std::vector<GaussianSummary>{{0.1, 0.0, 5}}), DomainError);
}

TEST(GaussianMeans, MatchesSerialReference) {
  Rng rng(21);
  std::vector<GaussianSummary> s(60);
  for (auto& g : s) g = {support::normal(rng), 0.2 + rng.uniform() * 3.0, 7};
  const PValueVector a = gaussian_means_pvalues(s);
  const PValueVector b = reference::gaussian_means_pvalues(s);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-13);
}

TEST(GaussianMeans, LemmaIdentityMonteCarlo) {
  // E[1 - F_Beta(1/2, n/2 - 1)(y^2 / X)] = 2 Phi-bar(y / sigma), X ~ sigma^2 chi^2_{n-1}.
  Rng rng(1);
  const int n = 5;
  const std::size_t draws = 1000000;
  std::vector<double> v(draws);
  for (auto& x : v) {
    const double chi = support::chi_square(rng, n - 1);
    x = 1.0 - reg_inc_beta(std::min(1.0, 1.0 / chi), 0.5, n / 2.0 - 1.0);
  }
  const auto ms = support::mean_se(v);
  EXPECT_NEAR(ms.mean, 2.0 * normal_sf(1.0), 3 * ms.se);
}

TEST(GaussianMeans, ApproximateCompoundValidityUnderGlobalNull) {
  const std::size_t m = 100;
  const int n = 5;
  const std::vector<double> ts{0.01, 0.05, 0.1, 0.2, 0.5};
  const auto cdf = support::empirical_null_cdf(
      [&](std::size_t r) {
        Rng rng(substream_seed(33, r));
        std::vector<GaussianSummary> s(m);
        for (std::size_t i = 0; i < m; ++i) {
          const double sigma = std::exp(2.0 * rng.uniform() - 1.0);
          double sum = 0.0, sumsq = 0.0;
          for (int k = 0; k < n; ++k) {
            const double y = sigma * support::normal(rng);
            sum += y;
            sumsq += y * y;
          }
          const double ybar = sum / n;
          s[i] = {ybar, (sumsq - n * ybar * ybar) / (n - 1), n};
        }
        return gaussian_means_pvalues(s);
      },
      200, ts);
  for (std::size_t k = 0; k < ts.size(); ++k) {
    EXPECT_LE(cdf[k].mean, ts[k] + 1.0 / m + 3 * cdf[k].se) << ts[k];
  }
}

TEST(Alignment, Examples) {
  const NoiseTail sf = [](double t, std::span<const double> xj) { return normal_sf(t - xj[0]); };
  const AlignmentStatistic id = [](std::span<const double> x) { return x[0]; };
  {
    const std::vector<std::vector<double>> x{{0.0}}, xt{{0.0}};
    EXPECT_DOUBLE_EQ(alignment_pooled_pvalues(x, xt, sf, id)[0], 0.5);
  }
  {
    const std::vector<std::vector<double>> x{{0.0}}, xt{{40.0}};
    EXPECT_LT(alignment_pooled_pvalues(x, xt, sf, id)[0], 1e-300);
  }
  {
    const std::vector<std::vector<double>> x{{0.0}, {1.0}}, xt{{1.0}, {0.0}};
    const PValueVector p = alignment_pooled_pvalues(x, xt, sf, id);
    EXPECT_NEAR(p[0], (normal_sf(1.0) + 0.5) / 2.0, 1e-15);
    EXPECT_NEAR(p[0], 0.3293276, 1e-7);
  }
  {
    const std::vector<std::vector<double>> x{{0.0}, {1.0}}, xt{{1.0}};
    EXPECT_THROW(alignment_pooled_pvalues(x, xt, sf, id), DomainError);
  }
}
