#include "cpbh/mt_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cpbh/error.hpp"

namespace cpbh {
namespace {

void require_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in [0, 1]");
}

std::size_t count_at_most(std::span<const double> sorted, double t) {
  return static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), t) -
                                  sorted.begin());
}

}  // namespace

PValueVector::PValueVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw DomainError("p-value vector must be nonempty");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const double v = values_[i];
    if (!(v >= 0.0 && v <= 1.0)) {
      throw DomainError("p-value at index " + std::to_string(i) + " is outside [0, 1]");
    }
  }
}

NullMask::NullMask(std::size_t m, std::span<const std::size_t> members) : flags_(m, false) {
  for (std::size_t i : members) {
    if (i >= m) throw DomainError("null index " + std::to_string(i) + " out of range");
    if (!flags_[i]) {
      flags_[i] = true;
      ++count_;
    }
  }
}

NullMask NullMask::all(std::size_t m) {
  NullMask h;
  h.flags_.assign(m, true);
  h.count_ = m;
  return h;
}

NullMask NullMask::none(std::size_t m) {
  NullMask h;
  h.flags_.assign(m, false);
  return h;
}

std::vector<std::size_t> NullMask::members() const {
  std::vector<std::size_t> out;
  out.reserve(count_);
  for (std::size_t i = 0; i < flags_.size(); ++i) {
    if (flags_[i]) out.push_back(i);
  }
  return out;
}

std::size_t bh_count(std::span<const double> p, double alpha, std::vector<double>& scratch) {
  const std::size_t m = p.size();
  scratch.assign(p.begin(), p.end());
  std::sort(scratch.begin(), scratch.end());
  // #{p <= alpha k / m} >= k  iff  the k-th smallest p is <= alpha k / m.
  for (std::size_t k = m; k >= 1; --k) {
    if (scratch[k - 1] <= bh_threshold(alpha, k, m)) return k;
  }
  return 0;
}

BHResult bh_reject(const PValueVector& p, double alpha) {
  require_alpha(alpha);
  const std::size_t m = p.size();
  std::vector<double> scratch;
  BHResult out;
  out.k_hat = bh_count(p.values(), alpha, scratch);
  out.threshold = bh_threshold(alpha, out.k_hat, m);
  if (out.k_hat > 0) {
    out.rejected.reserve(out.k_hat);
    for (std::size_t i = 0; i < m; ++i) {
      if (p[i] <= out.threshold) out.rejected.push_back(i);
    }
  }
  return out;
}

CrossCheck bh_crosscheck(const PValueVector& p, double alpha, const NullMask& h0) {
  require_alpha(alpha);
  const std::size_t m = p.size();
  if (h0.universe() != m) throw DomainError("null mask size does not match p-value count");

  std::vector<double> nulls;
  std::vector<double> non_nulls;
  for (std::size_t j = 0; j < m; ++j) {
    (h0.contains(j) ? nulls : non_nulls).push_back(p[j]);
  }
  std::sort(nulls.begin(), nulls.end());
  std::sort(non_nulls.begin(), non_nulls.end());

  CrossCheck out;
  out.k_seq.resize(nulls.size() + 1, 0);
  for (std::size_t i = 0; i <= nulls.size(); ++i) {
    for (std::size_t k = m; k >= 1; --k) {
      if (i + count_at_most(non_nulls, bh_threshold(alpha, k, m)) >= k) {
        out.k_seq[i] = k;
        break;
      }
    }
  }
  for (std::size_t i = nulls.size() + 1; i-- > 0;) {
    if (count_at_most(nulls, bh_threshold(alpha, out.k_seq[i], m)) >= i) {
      out.null_rejections = i;
      break;
    }
  }
  return out;
}

double fdp(std::span<const std::size_t> rejected, const NullMask& h0) {
  if (rejected.empty()) return 0.0;
  std::size_t false_rejections = 0;
  for (std::size_t i : rejected) false_rejections += h0.contains(i) ? 1 : 0;
  return static_cast<double>(false_rejections) / static_cast<double>(rejected.size());
}

double modified_fdp(std::span<const std::size_t> rejected, const NullMask& h0, std::size_t m,
                    double alpha, ApproxParams params) {
  if (params.epsilon < 0.0 || params.delta < 0.0) {
    throw DomainError("approximation parameters must be nonnegative");
  }
  if (params.delta > 0.0 && alpha <= 0.0) {
    throw DomainError("modified FDP with delta > 0 requires alpha > 0");
  }
  std::size_t false_rejections = 0;
  for (std::size_t i : rejected) false_rejections += h0.contains(i) ? 1 : 0;
  const double slack =
      params.delta > 0.0
          ? static_cast<double>(m) * params.delta / (alpha * (1.0 + params.epsilon))
          : 0.0;
  const double denom = slack + static_cast<double>(rejected.size());
  if (denom == 0.0) return 0.0;
  return static_cast<double>(false_rejections) / denom;
}

double harmonic(std::size_t m) {
  if (m < 1) throw DomainError("harmonic number requires m >= 1");
  double s = 0.0;
  // Smallest terms first.
  for (std::size_t j = m; j >= 1; --j) s += 1.0 / static_cast<double>(j);
  return s;
}

}  // namespace cpbh
