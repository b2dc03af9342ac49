#pragma once

// Benjamini-Hochberg step-up procedure, its leave-one-out reformulation,
// and false discovery proportion metrics.
//
// Indices in this C++ API are 0-based. File formats and CLI output
// translate to 1-based hypothesis labels.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace cpbh {

/// A nonempty vector of values in [0, 1].
class PValueVector {
public:
  PValueVector() = default;
  /// Throws DomainError when empty or when any entry is NaN or outside [0, 1].
  explicit PValueVector(std::vector<double> values);
  PValueVector(std::initializer_list<double> values)
      : PValueVector(std::vector<double>(values)) {}

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& vec() const noexcept { return values_; }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  friend bool operator==(const PValueVector&, const PValueVector&) = default;

private:
  std::vector<double> values_;
};

/// Subset of {0, ..., m-1} marking the true null hypotheses.
class NullMask {
public:
  NullMask() = default;
  NullMask(std::size_t m, std::span<const std::size_t> members);
  NullMask(std::size_t m, std::initializer_list<std::size_t> members)
      : NullMask(m, std::span<const std::size_t>(members.begin(), members.size())) {}

  static NullMask all(std::size_t m);
  static NullMask none(std::size_t m);

  std::size_t universe() const noexcept { return flags_.size(); }
  std::size_t count() const noexcept { return count_; }
  bool contains(std::size_t i) const { return i < flags_.size() && flags_[i]; }
  std::vector<std::size_t> members() const;

  friend bool operator==(const NullMask&, const NullMask&) = default;

private:
  std::vector<bool> flags_;
  std::size_t count_ = 0;
};

/// Rejection threshold alpha * k / m. Every component that places probability
/// atoms on BH thresholds goes through this function so that inclusive
/// comparisons agree bit for bit.
inline double bh_threshold(double alpha, std::size_t k, std::size_t m) noexcept {
  return alpha * static_cast<double>(k) / static_cast<double>(m);
}

struct BHResult {
  std::vector<std::size_t> rejected;  // ascending
  std::size_t k_hat = 0;
  double threshold = 0.0;  // alpha * k_hat / m
};

/// Leave-one-out view of BH: k_seq[i] is the rejection count if exactly i
/// nulls were rejected, and null_rejections is the realized i.
struct CrossCheck {
  std::vector<std::size_t> k_seq;
  std::size_t null_rejections = 0;

  std::size_t k_at_null_rejections() const { return k_seq.at(null_rejections); }
};

struct ApproxParams {
  double epsilon = 0.0;
  double delta = 0.0;
};

/// BH step-up at level alpha with inclusive comparisons p_i <= alpha k / m.
BHResult bh_reject(const PValueVector& p, double alpha);

/// Rejection count only; no allocation beyond the sort buffer.
std::size_t bh_count(std::span<const double> p, double alpha, std::vector<double>& scratch);

CrossCheck bh_crosscheck(const PValueVector& p, double alpha, const NullMask& h0);

/// |S ∩ H0| / max(1, |S|).
double fdp(std::span<const std::size_t> rejected, const NullMask& h0);

/// |S ∩ H0| / (m delta / (alpha (1 + eps)) + |S|); zero when the denominator is zero.
double modified_fdp(std::span<const std::size_t> rejected, const NullMask& h0, std::size_t m,
                    double alpha, ApproxParams params);

/// 1 + 1/2 + ... + 1/m.
double harmonic(std::size_t m);

}  // namespace cpbh
