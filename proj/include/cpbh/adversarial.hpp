#pragma once

// Analytic p-value distributions built from point masses: the worst-case
// constructions for BH on compound p-values, a randomized generator of
// compound-valid scenarios for fuzzing, and exact validity checks.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cpbh/mt_core.hpp"
#include "cpbh/rng.hpp"

namespace cpbh {

struct Atom {
  double value = 1.0;
  double mass = 0.0;

  friend bool operator==(const Atom&, const Atom&) = default;
};

/// Anything the simulation harness can draw p-vectors from.
class PSource {
public:
  virtual ~PSource() = default;
  virtual std::size_t m() const = 0;
  virtual const NullMask& h0() const = 0;
  /// Writes one p-vector of length m() into `out`.
  virtual void draw(Rng& rng, std::vector<double>& out) const = 0;
};

/// Independent Unif[0, 1] p-values.
class UniformSource final : public PSource {
public:
  explicit UniformSource(NullMask h0);
  std::size_t m() const override { return h0_.universe(); }
  const NullMask& h0() const override { return h0_; }
  void draw(Rng& rng, std::vector<double>& out) const override;

private:
  NullMask h0_;
};

/// Per-coordinate discrete marginals. Coordinates in the same bin are driven
/// by one shared uniform through their quantile functions; distinct bins are
/// independent. Every coordinate in its own bin means full independence.
class AtomScenario final : public PSource {
public:
  AtomScenario() = default;

  /// Sorts and merges each atom list, adds the residual mass at 1, and
  /// checks masses. `bins` empty means independent coordinates; otherwise
  /// bins[i] is an arbitrary label and equal labels share a uniform.
  AtomScenario(std::string name, NullMask h0, std::vector<std::vector<Atom>> atoms,
               std::vector<std::size_t> bins = {});

  std::size_t m() const override { return atoms_.size(); }
  const NullMask& h0() const override { return h0_; }
  void draw(Rng& rng, std::vector<double>& out) const override;

  const std::string& name() const noexcept { return name_; }
  const std::vector<Atom>& atoms(std::size_t i) const { return atoms_.at(i); }
  /// Group index per coordinate, numbered 0.. in order of first appearance.
  const std::vector<std::size_t>& groups() const noexcept { return group_of_; }
  std::size_t group_count() const noexcept { return group_count_; }
  bool independent() const noexcept { return group_count_ == atoms_.size(); }

  /// P(p_i <= t).
  double cdf(std::size_t i, double t) const;

  std::optional<double> exact_fdr;
  std::optional<double> alpha;  // level the construction is built for

  friend bool operator==(const AtomScenario& a, const AtomScenario& b);

private:
  std::string name_;
  NullMask h0_;
  std::vector<std::vector<Atom>> atoms_;
  std::vector<std::vector<double>> cum_;  // cumulative masses per coordinate
  std::vector<std::size_t> group_of_;
  std::size_t group_count_ = 0;
};

/// Worst case for independent compound p-values, FDR = 7 alpha / 6.
AtomScenario prop2_scenario(double alpha, std::size_t m);

/// Global-null worst case, FDR = alpha + alpha^2 / 4.
AtomScenario prop4_scenario(double alpha, std::size_t m);

/// PRDS compound p-values with FDR of order alpha h_m.
AtomScenario prop5_scenario(double alpha, std::size_t m);

/// Coordinates in H0 place mass alpha/m on each threshold alpha k / m and the
/// rest at 1: BH at level alpha behaves exactly as on Unif[0, 1] p-values.
/// Non-null coordinates are 0.
AtomScenario threshold_grid_scenario(double alpha, NullMask h0);

struct RandomScenarioOptions {
  std::size_t max_atoms = 6;
  bool global_null = false;
  /// Place about half the atoms exactly on BH thresholds at this level.
  double snap_alpha = 0.1;
  /// When set, every null coordinate satisfies P(p_i <= gamma_alpha) <= gamma.
  std::optional<double> gamma;
  double gamma_alpha = 0.1;
};

/// Random independent scenario that passes compound_validity_check.
AtomScenario random_atom_scenario(std::size_t m, std::uint64_t seed,
                                  const RandomScenarioOptions& opts = {});

/// max over atom locations t (and t = 1) of sum_{i in H0} F_i(t) - m t.
double compound_validity_check(const AtomScenario& s);

/// Same against the (eps, delta) relaxation m (t (1 + eps) + delta).
double approx_validity_check(const AtomScenario& s, ApproxParams params);

/// max_{i in H0} P(p_i <= t).
double max_null_cdf(const AtomScenario& s, double t);

/// Inflates every null coordinate's sub-unit mass by (1 + eps) and adds a
/// point mass of total size m delta at alpha / (2m), spread evenly over H0.
/// The result is an (eps, delta)-approximate compound scenario; it is
/// re-checked before returning.
AtomScenario approximate_scenario(const AtomScenario& base, double alpha, ApproxParams params);

struct SampleDraw {
  PValueVector p;
  NullMask h0;
};

/// One draw from replicate stream (seed, replicate).
SampleDraw sample(const AtomScenario& s, std::uint64_t seed, std::uint64_t replicate);

/// JSON document with 1-based hypothesis labels. Round trips bit for bit.
std::string scenario_to_json(const AtomScenario& s, int indent = -1);
AtomScenario scenario_from_json(const std::string& text);

}  // namespace cpbh
