#pragma once

// Straightforward serial versions of the parallel kernels. They share no
// code paths with the fast versions beyond sampling, and exist for tests
// and the benchmark.

#include <cstdint>
#include <span>

#include "cpbh/constructions.hpp"
#include "cpbh/mt_core.hpp"
#include "cpbh/sim_harness.hpp"

namespace cpbh::reference {

/// O(m^2) BH straight from the definition of k_hat.
BHResult bh_reject(const PValueVector& p, double alpha);

/// One thread, one replicate at a time, via bh_reject and fdp. Matches
/// cpbh::estimate_fdr bit for bit.
FdrEstimate estimate_fdr(const ExperimentConfig& cfg);

/// Per-pair counting over every trial's null distribution.
PermutationPooling permutation_pooling(std::span<const TrialData> trials,
                                       const TrialStatistic& statistic,
                                       const PermutationOptions& opts);

PValueVector gaussian_means_pvalues(std::span<const GaussianSummary> summaries);

}  // namespace cpbh::reference
