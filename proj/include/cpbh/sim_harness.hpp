#pragma once

// Seeded Monte Carlo estimation of FDR-type metrics for BH, and the
// theorem-check suites built on top of it.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cpbh/adversarial.hpp"
#include "cpbh/mt_core.hpp"

namespace cpbh {

enum class Metric { Fdr, ModifiedFdr, AnyRejection };

struct ExperimentConfig {
  const PSource* scenario = nullptr;
  double alpha = 0.1;
  std::size_t reps = 10000;
  std::uint64_t seed = 0;
  Metric metric = Metric::Fdr;
  ApproxParams params;  // used by ModifiedFdr only
};

struct FdrEstimate {
  double mean = 0.0;
  double se = 0.0;  // sample standard deviation / sqrt(reps)
  std::size_t reps = 0;
  std::uint64_t seed = 0;
  std::optional<double> exact;
};

/// Replicate r draws from Rng(substream_seed(seed, r)); replicates run in
/// parallel and are reduced in replicate order, so the result does not
/// depend on the thread count.
FdrEstimate estimate_fdr(const ExperimentConfig& cfg);

/// Metric value of a single replicate.
double replicate_metric(const ExperimentConfig& cfg, std::uint64_t replicate);

enum class Relation { AtMost, AtLeast, Matches };

struct SuiteEntry {
  std::string scenario;
  double alpha = 0.0;
  Metric metric = Metric::Fdr;
  FdrEstimate estimate;
  double reference = 0.0;
  Relation relation = Relation::AtMost;
  bool pass = false;
};

struct SuiteReport {
  std::string suite;
  std::uint64_t seed = 0;
  std::size_t reps = 0;
  std::vector<SuiteEntry> entries;

  bool all_pass() const;
  std::string to_json(int indent = 2) const;
  std::string to_csv() const;
};

struct SuiteParams {
  std::size_t reps = 20000;
  std::uint64_t seed = 1;
  std::size_t fuzz_scenarios = 100;  // random scenarios in the thm1 battery
  std::size_t fuzz_m = 50;
  double fuzz_alpha = 0.1;
};

/// Known suites: thm1, thm2, thm3, gamma, props. Throws DomainError otherwise.
SuiteReport run_suite(const std::string& name, const SuiteParams& params);

/// Verdict helpers with the harness's 3 standard error tolerance.
bool within_upper(const FdrEstimate& e, double bound);
bool within_lower(const FdrEstimate& e, double bound);
bool matches(const FdrEstimate& e, double value);

const char* metric_name(Metric m);

}  // namespace cpbh
