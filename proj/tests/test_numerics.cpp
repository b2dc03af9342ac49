#include <gtest/gtest.h>

#include <cmath>

#include "cpbh/error.hpp"
#include "cpbh/numerics.hpp"
#include "oracles.hpp"

using namespace cpbh;

TEST(LogChoose, SmallExactValues) {
  EXPECT_NEAR(log_choose(4, 2), std::log(6.0), 1e-15);
  EXPECT_EQ(log_choose(17, 0), 0.0);
  EXPECT_EQ(log_choose(17, 17), 0.0);
  EXPECT_NEAR(log_choose(52, 5), std::log(2598960.0), 1e-13);
}

TEST(LogChoose, MatchesExactIntegers) {
  for (unsigned n = 0; n <= 120; ++n) {
    for (unsigned k = 0; k <= n; ++k) {
      const double want = std::log(static_cast<long double>(oracle::choose(n, k)));
      const double got = log_choose(n, k);
      EXPECT_NEAR(got, want, 1e-12 * std::max(1.0, want)) << n << " " << k;
    }
  }
}

TEST(LogChoose, PascalRatioAtLargeN) {
  // log C(n,k) - log C(n,k-1) = log((n-k+1)/k)
  for (std::int64_t n : {std::int64_t{1000}, std::int64_t{54321}, std::int64_t{1000000}}) {
    for (std::int64_t k : {std::int64_t{1}, std::int64_t{7}, std::int64_t{31}, std::int64_t{32}, std::int64_t{500}, n / 3, n / 2}) {
      const double lhs = log_choose(n, k) - log_choose(n, k - 1);
      const double rhs = std::log(static_cast<double>(n - k + 1) / static_cast<double>(k));
      EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, log_choose(n, k))) << n << " " << k;
    }
  }
}

TEST(LogChoose, RejectsBadArguments) {
  EXPECT_THROW(log_choose(3, 4), DomainError);
  EXPECT_THROW(log_choose(-1, 0), DomainError);
  EXPECT_THROW(log_choose(5, -1), DomainError);
}

TEST(NormalSf, KnownValuesAndReflection) {
  EXPECT_EQ(normal_sf(0.0), 0.5);
  EXPECT_NEAR(normal_sf(1.0), 0.15865525393145705, 1e-15);
  for (double z = -8.0; z <= 8.0; z += 0.37) {
    EXPECT_NEAR(normal_sf(z) + normal_sf(-z), 1.0, 1e-12) << z;
  }
}

TEST(NormalSf, MatchesSeriesOracle) {
  for (double z = -6.0; z <= 6.0; z += 0.125) {
    EXPECT_NEAR(normal_sf(z), oracle::normal_sf(z), 1e-12) << z;
  }
}

TEST(NormalSf, RejectsNonFinite) {
  EXPECT_THROW(normal_sf(NAN), DomainError);
  EXPECT_THROW(normal_sf(INFINITY), DomainError);
}

TEST(RegIncBeta, SpecialCases) {
  for (double x : {0.0, 0.1, 0.5, 0.93, 1.0}) EXPECT_NEAR(reg_inc_beta(x, 1, 1), x, 1e-15);
  EXPECT_NEAR(reg_inc_beta(0.5, 0.5, 0.5), 0.5, 1e-14);
  EXPECT_NEAR(reg_inc_beta(0.25, 0.5, 1.5), 0.6089977810442294, 1e-10);
}

TEST(RegIncBeta, MatchesQuadratureOracle) {
  for (double a : {0.5, 1.0, 2.5, 7.0}) {
    for (double b : {1.0, 1.5, 3.0, 10.0}) {
      for (double x : {0.01, 0.2, 0.45, 0.7, 0.95}) {
        const double want = oracle::reg_inc_beta(x, a, b);
        EXPECT_NEAR(reg_inc_beta(x, a, b), want, 1e-10 * std::max(want, 1e-300) + 1e-15)
            << x << " " << a << " " << b;
      }
    }
  }
}

TEST(RegIncBeta, SymmetryIdentity) {
  for (double a : {0.3, 0.5, 1.7, 4.0, 25.0}) {
    for (double b : {0.4, 1.5, 2.0, 9.0, 60.0}) {
      for (double x = 0.0; x <= 1.0; x += 0.05) {
        EXPECT_NEAR(reg_inc_beta(x, a, b) + reg_inc_beta(1.0 - x, b, a), 1.0, 1e-10);
      }
    }
  }
}

TEST(RegIncBeta, RejectsBadArguments) {
  EXPECT_THROW(reg_inc_beta(-0.1, 1, 1), DomainError);
  EXPECT_THROW(reg_inc_beta(1.1, 1, 1), DomainError);
  EXPECT_THROW(reg_inc_beta(0.5, 0, 1), DomainError);
  EXPECT_THROW(reg_inc_beta(0.5, 1, -2), DomainError);
  EXPECT_THROW(reg_inc_beta(NAN, 1, 1), DomainError);
}

TEST(PoissonTail, SpecialCases) {
  EXPECT_EQ(poisson_tail(3.7, 0), 1.0);
  EXPECT_EQ(poisson_tail(0.0, 1), 0.0);
  EXPECT_NEAR(poisson_tail(1.0, 1), 1.0 - std::exp(-1.0), 1e-16);
  EXPECT_THROW(poisson_tail(-1.0, 2), DomainError);
  EXPECT_THROW(poisson_tail(NAN, 2), DomainError);
}

TEST(PoissonTail, MatchesSummationOracle) {
  for (double lambda : {0.01, 0.3, 1.0, 4.5, 17.0, 49.9, 50.1, 80.0, 160.0, 433.3}) {
    for (long k : {1L, 2L, 3L, 5L, 10L, 20L, 45L, 60L, 100L, 200L, 400L, 480L}) {
      const double want = oracle::poisson_tail(lambda, k);
      if (want < 1e-280) continue;
      EXPECT_NEAR(poisson_tail(lambda, k), want, 1e-12 * want) << lambda << " " << k;
    }
    const auto mode = static_cast<long>(lambda);
    for (long k = std::max(1L, mode - 3); k <= mode + 3; ++k) {
      const double want = oracle::poisson_tail(lambda, k);
      EXPECT_NEAR(poisson_tail(lambda, k), want, 1e-12 * want) << lambda << " " << k;
    }
  }
}

TEST(PoissonTail, MonotoneOnGrid) {
  for (double lambda = 0.0; lambda <= 120.0; lambda += 2.9) {
    for (std::int64_t k = 0; k < 200; ++k) {
      EXPECT_LE(poisson_tail(lambda, k + 1), poisson_tail(lambda, k)) << lambda << " " << k;
      EXPECT_LE(poisson_tail(lambda, k), poisson_tail(lambda + 2.9, k)) << lambda << " " << k;
    }
  }
}

TEST(Fisher, SmallTables) {
  EXPECT_EQ(fisher_exact_onesided(0, 5, 0, 9), 1.0);
  EXPECT_NEAR(fisher_exact_onesided(2, 0, 0, 2), 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(fisher_exact_onesided(1, 1, 1, 1), 5.0 / 6.0, 1e-15);
  EXPECT_NEAR(fisher_exact_onesided(1, 0, 0, 1), 0.5, 1e-15);
}

TEST(Fisher, MatchesEnumerationUpToTotal40) {
  for (unsigned n = 0; n <= 40; ++n) {
    for (unsigned a = 0; a <= n; ++a) {
      for (unsigned b = 0; a + b <= n; ++b) {
        for (unsigned c = 0; a + b + c <= n; ++c) {
          const unsigned d = n - a - b - c;
          const double want = oracle::fisher_onesided(a, b, c, d);
          ASSERT_NEAR(fisher_exact_onesided(a, b, c, d), want, 1e-12 * std::max(want, 1e-300) + 1e-15)
              << a << " " << b << " " << c << " " << d;
        }
      }
    }
  }
}

TEST(Fisher, LargeImpressionCounts) {
  // Symmetric table: the upper tail from the mean is a bit over one half.
  const double p = fisher_exact_onesided(50, 4950, 50, 4950);
  EXPECT_GT(p, 0.5);
  EXPECT_LT(p, 0.6);
  EXPECT_LT(fisher_exact_onesided(120, 4880, 50, 4950), 1e-6);
  EXPECT_GT(fisher_exact_onesided(10, 4990, 80, 4920), 1.0 - 1e-9);
}
