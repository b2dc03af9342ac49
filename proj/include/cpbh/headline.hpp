#pragma once

// Headline A/B-test data: ingestion into two-group trials, the one-sided
// Fisher statistic, and the permutation versus compound p-value analysis.

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "cpbh/constructions.hpp"
#include "cpbh/mt_core.hpp"

namespace cpbh {

struct HeadlineSchema {
  std::string article = "clickability_test_id";
  std::string headline = "headline";
  std::string impressions = "impressions";
  std::string clicks = "clicks";
};

enum class DigitMode {
  Unicode,  // any character of general category Nd
  Ascii,    // 0-9 only
};

struct IngestOptions {
  HeadlineSchema schema;
  DigitMode digits = DigitMode::Unicode;
  std::size_t min_headlines = 0;   // keep articles with strictly more headlines
  double max_bad_fraction = 0.01;  // file fails above this share of bad rows
};

struct RowError {
  std::size_t line = 0;
  std::string message;
};

/// Trials in order of first appearance of each article. Each unit is a
/// headline with record (clicks, impressions); treated units (headline has a
/// digit) come first.
struct TrialSet {
  std::vector<std::string> ids;
  std::vector<TrialData> trials;

  std::size_t rows_read = 0;
  std::size_t rows_bad = 0;
  std::size_t articles_seen = 0;
  std::size_t articles_one_sided = 0;  // dropped: all or no headlines with digits
  std::size_t articles_too_small = 0;  // dropped by min_headlines
  std::vector<RowError> errors;

  std::size_t headlines() const;
};

bool contains_digit(const std::string& utf8, DigitMode mode);

TrialSet ingest_headline_csv(std::istream& in, const IngestOptions& opts = {});
TrialSet ingest_headline_csv(const std::string& path, const IngestOptions& opts = {});

/// 1 - one-sided Fisher p-value of
/// [[treated clicks, treated no-clicks], [control clicks, control no-clicks]].
double headline_statistic(const TrialData& trial);

struct DiscoveryCount {
  double alpha = 0.0;
  std::size_t permutation = 0;
  std::size_t compound = 0;
};

struct AnalysisReport {
  std::vector<std::string> ids;
  std::vector<double> statistic;
  std::vector<double> permutation_p;
  std::vector<double> compound_p;
  std::vector<bool> approximated;
  std::vector<DiscoveryCount> counts;
  PermutationOptions options;

  std::size_t approximated_count() const;
  void write_scatter_csv(std::ostream& os) const;
  void write_sorted_csv(std::ostream& os) const;
  void write_summary(std::ostream& os) const;
};

AnalysisReport analyze(const TrialSet& trials, std::span<const double> alphas,
                       const PermutationOptions& opts);

}  // namespace cpbh
