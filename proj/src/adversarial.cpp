#include "cpbh/adversarial.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "json.hpp"

#include "cpbh/error.hpp"

namespace cpbh {
namespace {

constexpr double kMassTol = 1e-12;

// Sorts by value, merges duplicates, drops empty atoms and replaces whatever
// sits at 1 with the residual 1 - (mass below 1).
std::vector<Atom> normalize_atoms(std::vector<Atom> atoms, std::size_t coord) {
  for (const auto& a : atoms) {
    if (!(a.value >= 0.0 && a.value <= 1.0)) {
      throw DomainError("atom value outside [0, 1] at coordinate " + std::to_string(coord));
    }
    if (!(a.mass >= 0.0) || std::isinf(a.mass)) {
      throw DomainError("negative or non-finite atom mass at coordinate " + std::to_string(coord));
    }
  }
  std::stable_sort(atoms.begin(), atoms.end(),
                   [](const Atom& a, const Atom& b) { return a.value < b.value; });
  std::vector<Atom> out;
  double below_one = 0.0;
  for (const auto& a : atoms) {
    if (a.value >= 1.0 || a.mass == 0.0) continue;
    if (!out.empty() && out.back().value == a.value) {
      out.back().mass += a.mass;
    } else {
      out.push_back(a);
    }
  }
  for (const auto& a : out) below_one += a.mass;
  if (below_one > 1.0 + kMassTol) {
    throw DomainError("atom masses exceed 1 at coordinate " + std::to_string(coord));
  }
  const double residual = 1.0 - below_one;
  if (residual > 0.0) out.push_back({1.0, residual});
  if (out.empty()) out.push_back({1.0, 1.0});
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

UniformSource::UniformSource(NullMask h0) : h0_(std::move(h0)) {
  if (h0_.universe() == 0) throw DomainError("uniform source needs m >= 1");
}

void UniformSource::draw(Rng& rng, std::vector<double>& out) const {
  out.resize(h0_.universe());
  for (auto& v : out) v = rng.uniform();
}

AtomScenario::AtomScenario(std::string name, NullMask h0, std::vector<std::vector<Atom>> atoms,
                           std::vector<std::size_t> bins)
    : name_(std::move(name)), h0_(std::move(h0)) {
  const std::size_t m = atoms.size();
  if (m == 0) throw DomainError("scenario needs m >= 1");
  if (h0_.universe() != m) throw DomainError("null mask size does not match coordinate count");
  if (!bins.empty() && bins.size() != m) throw DomainError("bin labels must cover every coordinate");
  atoms_.reserve(m);
  cum_.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    atoms_.push_back(normalize_atoms(std::move(atoms[i]), i));
    std::vector<double> c;
    double acc = 0.0;
    for (const auto& a : atoms_.back()) {
      acc += a.mass;
      c.push_back(acc);
    }
    cum_.push_back(std::move(c));
  }
  group_of_.resize(m);
  if (bins.empty()) {
    std::iota(group_of_.begin(), group_of_.end(), std::size_t{0});
    group_count_ = m;
  } else {
    std::map<std::size_t, std::size_t> label_to_group;
    for (std::size_t i = 0; i < m; ++i) {
      auto [it, inserted] = label_to_group.emplace(bins[i], label_to_group.size());
      group_of_[i] = it->second;
    }
    group_count_ = label_to_group.size();
  }
}

bool operator==(const AtomScenario& a, const AtomScenario& b) {
  return a.name_ == b.name_ && a.h0_ == b.h0_ && a.atoms_ == b.atoms_ &&
         a.group_of_ == b.group_of_ && a.exact_fdr == b.exact_fdr && a.alpha == b.alpha;
}

void AtomScenario::draw(Rng& rng, std::vector<double>& out) const {
  const std::size_t m = atoms_.size();
  out.resize(m);
  thread_local std::vector<double> u;
  u.resize(group_count_);
  for (auto& v : u) v = rng.uniform();
  for (std::size_t i = 0; i < m; ++i) {
    const double ui = u[group_of_[i]];
    const auto& c = cum_[i];
    std::size_t k = 0;
    while (k + 1 < c.size() && c[k] <= ui) ++k;
    out[i] = atoms_[i][k].value;
  }
}

double AtomScenario::cdf(std::size_t i, double t) const {
  const auto& a = atoms_.at(i);
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size() && a[k].value <= t; ++k) acc = cum_[i][k];
  return acc;
}

// ---------------------------------------------------------------------------

AtomScenario prop2_scenario(double alpha, std::size_t m) {
  if (!(alpha > 0.0 && alpha <= 0.5)) throw DomainError("prop2 needs alpha in (0, 1/2]");
  const double kd = 1.0 / (2.0 * alpha);
  const auto k = static_cast<std::size_t>(std::llround(kd));
  if (std::abs(kd - static_cast<double>(k)) > 1e-9) {
    throw DomainError("prop2 needs 1/(2 alpha) to be an integer");
  }
  if (m < 3 * k) throw DomainError("prop2 needs m >= 3/(2 alpha) = " + std::to_string(3 * k));
  const double lo = bh_threshold(alpha, 2 * k, m);  // 1/m
  const double hi = bh_threshold(alpha, 3 * k, m);  // 1.5/m
  const std::size_t n_null = m - 3 * k + 2;
  std::vector<std::size_t> h0(n_null);
  std::iota(h0.begin(), h0.end(), std::size_t{0});

  std::vector<std::vector<Atom>> atoms(m);
  atoms[0] = {{hi, 0.5}};
  atoms[1] = {{lo, 1.0}};
  for (std::size_t i = 2; i < n_null; ++i) atoms[i] = {};
  std::size_t i = n_null;
  for (std::size_t c = 0; c < 2 * k - 1; ++c) atoms[i++] = {{lo, 1.0}};
  for (std::size_t c = 0; c + 1 < k; ++c) atoms[i++] = {{hi, 1.0}};

  AtomScenario s("prop2", NullMask(m, h0), std::move(atoms));
  s.alpha = alpha;
  s.exact_fdr = 7.0 * alpha / 6.0;
  return s;
}

AtomScenario prop4_scenario(double alpha, std::size_t m) {
  if (!(alpha >= 0.0 && alpha <= 2.0 / 3.0)) throw DomainError("prop4 needs alpha in [0, 2/3]");
  if (m < 2) throw DomainError("prop4 needs m >= 2");
  const double t1 = bh_threshold(alpha, 1, m);
  const double t2 = bh_threshold(alpha, 2, m);
  std::vector<std::vector<Atom>> atoms(m);
  atoms[0] = {{t1, alpha}, {t2, alpha / 2.0}};
  atoms[1] = {{t2, alpha / 2.0}};
  AtomScenario s("prop4", NullMask::all(m), std::move(atoms));
  s.alpha = alpha;
  s.exact_fdr = alpha + alpha * alpha / 4.0;
  return s;
}

AtomScenario prop5_scenario(double alpha, std::size_t m) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("prop5 needs alpha in [0, 1]");
  if (m < 1) throw DomainError("prop5 needs m >= 1");
  std::size_t L = 1;
  while ((L + 1) * (L + 2) / 2 <= m) ++L;
  const double alpha_prime = std::min(alpha, 1.0 / harmonic(m));

  std::vector<std::vector<Atom>> atoms(m);
  std::vector<std::size_t> bins(m, L + 1);
  std::size_t i = 0;
  for (std::size_t ell = 1; ell <= L; ++ell) {
    const double v = bh_threshold(alpha, ell, m);
    const double mass = alpha_prime / static_cast<double>(ell);
    for (std::size_t c = 0; c < ell; ++c, ++i) {
      atoms[i] = {{v, mass}};
      bins[i] = ell;
    }
  }
  AtomScenario s("prop5", NullMask::all(m), std::move(atoms), std::move(bins));
  s.alpha = alpha;
  if (alpha < 1.0) {
    double none = 1.0;
    for (std::size_t ell = 1; ell <= L; ++ell) none *= 1.0 - alpha_prime / static_cast<double>(ell);
    s.exact_fdr = 1.0 - none;
  }
  return s;
}

AtomScenario threshold_grid_scenario(double alpha, NullMask h0) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("threshold grid needs alpha in (0, 1]");
  const std::size_t m = h0.universe();
  if (m == 0) throw DomainError("threshold grid needs m >= 1");
  std::vector<std::vector<Atom>> atoms(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!h0.contains(i)) {
      atoms[i] = {{0.0, 1.0}};
      continue;
    }
    double prev = 0.0;
    for (std::size_t k = 1; k <= m; ++k) {
      const double t = bh_threshold(alpha, k, m);
      atoms[i].push_back({t, t - prev});
      prev = t;
    }
  }
  AtomScenario s("threshold_grid", std::move(h0), std::move(atoms));
  s.alpha = alpha;
  s.exact_fdr = alpha * static_cast<double>(s.h0().count()) / static_cast<double>(m);
  return s;
}

// ---------------------------------------------------------------------------

AtomScenario random_atom_scenario(std::size_t m, std::uint64_t seed,
                                  const RandomScenarioOptions& opts) {
  if (m < 1) throw DomainError("random scenario needs m >= 1");
  if (opts.max_atoms < 1) throw DomainError("random scenario needs max_atoms >= 1");
  if (opts.gamma && !(*opts.gamma > 0.0 && *opts.gamma <= 1.0)) {
    throw DomainError("gamma must lie in (0, 1]");
  }
  Rng rng(substream_seed(seed, 0x61746f6d73ULL));
  const double md = static_cast<double>(m);

  // Null set.
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = m; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const std::size_t n_null = opts.global_null ? m : 1 + static_cast<std::size_t>(rng.below(m));
  std::vector<std::size_t> nulls(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_null));
  std::sort(nulls.begin(), nulls.end());
  NullMask h0(m, nulls);

  // Atom locations, half of them on BH thresholds.
  const std::size_t r = 1 + static_cast<std::size_t>(rng.below(opts.max_atoms));
  std::vector<double> locs;
  const double lo = std::log(1.0 / (10.0 * md));
  for (std::size_t k = 0; k < r; ++k) {
    if (opts.snap_alpha > 0.0 && rng.uniform() < 0.5) {
      locs.push_back(bh_threshold(opts.snap_alpha, 1 + rng.below(m), m));
    } else {
      locs.push_back(std::exp(lo * (1.0 - rng.uniform())));
    }
  }
  std::sort(locs.begin(), locs.end());
  locs.erase(std::unique(locs.begin(), locs.end()), locs.end());
  locs.erase(std::remove_if(locs.begin(), locs.end(), [](double t) { return t >= 1.0; }), locs.end());

  // Cumulative null budget C_k <= m t_k, split over null coordinates subject
  // to each coordinate's capacity.
  constexpr double kSafety = 1.0 - 1e-12;
  std::vector<double> used(n_null, 0.0);
  std::vector<std::vector<Atom>> atoms(m);
  double total = 0.0;
  for (double t : locs) {
    const bool gamma_bound = opts.gamma && t <= opts.gamma_alpha;
    const double per_coord_cap = gamma_bound ? *opts.gamma : 1.0;
    double coord_room = 0.0;
    std::vector<double> room(n_null);
    for (std::size_t c = 0; c < n_null; ++c) {
      room[c] = std::max(0.0, per_coord_cap * kSafety - used[c]);
      coord_room += room[c];
    }
    const double cap = std::min(md * t * kSafety - total, coord_room);
    if (cap <= 0.0) continue;
    // Skew toward the cap so the fuzz battery sees near-tight scenarios.
    double budget = cap * std::pow(rng.uniform(), 0.25);
    std::vector<double> give(n_null, 0.0);
    for (int pass = 0; pass < 64 && budget > 1e-15; ++pass) {
      std::vector<double> e(n_null, 0.0);
      double esum = 0.0;
      for (std::size_t c = 0; c < n_null; ++c) {
        if (room[c] - give[c] > 0.0) {
          e[c] = -std::log1p(-rng.uniform());
          esum += e[c];
        }
      }
      if (esum <= 0.0) break;
      double spent = 0.0;
      for (std::size_t c = 0; c < n_null; ++c) {
        const double want = budget * e[c] / esum;
        const double got = std::min(want, room[c] - give[c]);
        give[c] += got;
        spent += got;
      }
      budget -= spent;
    }
    for (std::size_t c = 0; c < n_null; ++c) {
      if (give[c] <= 0.0) continue;
      atoms[nulls[c]].push_back({t, give[c]});
      used[c] += give[c];
      total += give[c];
    }
  }

  // Non-null coordinates are unconstrained.
  for (std::size_t i = 0; i < m; ++i) {
    if (h0.contains(i)) continue;
    const std::size_t na = rng.below(opts.max_atoms + 1);
    double left = 1.0;
    for (std::size_t a = 0; a < na && left > 0.0; ++a) {
      const double v = rng.uniform() < 0.5 && !locs.empty()
                           ? locs[rng.below(locs.size())]
                           : std::exp(lo * (1.0 - rng.uniform()));
      const double mass = left * rng.uniform();
      atoms[i].push_back({std::min(v, 1.0), mass});
      left -= mass;
    }
  }

  AtomScenario s("random_" + std::to_string(seed), std::move(h0), std::move(atoms));
  if (compound_validity_check(s) > 0.0) {
    throw DomainError("random scenario generator produced an invalid scenario (seed " +
                      std::to_string(seed) + ")");
  }
  return s;
}

double approx_validity_check(const AtomScenario& s, ApproxParams params) {
  if (params.epsilon < 0.0 || params.delta < 0.0) throw DomainError("negative (eps, delta)");
  std::vector<Atom> pooled;
  for (std::size_t i : s.h0().members()) {
    const auto& a = s.atoms(i);
    pooled.insert(pooled.end(), a.begin(), a.end());
  }
  std::sort(pooled.begin(), pooled.end(),
            [](const Atom& a, const Atom& b) { return a.value < b.value; });
  const long double md = static_cast<long double>(s.m());
  auto rhs = [&](double t) {
    return md * (static_cast<long double>(t) * (1.0L + params.epsilon) + params.delta);
  };
  // At t = 1 every null coordinate has its full mass.
  long double worst = static_cast<long double>(s.h0().count()) - rhs(1.0);
  long double acc = 0.0L;
  for (std::size_t k = 0; k < pooled.size() && pooled[k].value < 1.0; ++k) {
    acc += pooled[k].mass;
    if (k + 1 < pooled.size() && pooled[k + 1].value == pooled[k].value) continue;
    worst = std::max(worst, acc - rhs(pooled[k].value));
  }
  return static_cast<double>(worst);
}

double compound_validity_check(const AtomScenario& s) { return approx_validity_check(s, {}); }

double max_null_cdf(const AtomScenario& s, double t) {
  double worst = 0.0;
  for (std::size_t i : s.h0().members()) worst = std::max(worst, s.cdf(i, t));
  return worst;
}

AtomScenario approximate_scenario(const AtomScenario& base, double alpha, ApproxParams params) {
  if (params.epsilon < 0.0 || params.delta < 0.0) throw DomainError("negative (eps, delta)");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in (0, 1]");
  const std::size_t m = base.m();
  const std::size_t n_null = base.h0().count();
  const double spike_at = bh_threshold(alpha, 1, m) / 2.0;
  const double spike = n_null == 0 ? 0.0
                                   : std::min(1.0, static_cast<double>(m) * params.delta /
                                                       static_cast<double>(n_null));
  std::vector<std::vector<Atom>> atoms(m);
  std::vector<std::size_t> bins(base.groups());
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<Atom> a = base.atoms(i);
    if (base.h0().contains(i)) {
      double sub = 0.0;
      for (const auto& x : a) {
        if (x.value < 1.0) sub += x.mass;
      }
      const double target = std::min(sub * (1.0 + params.epsilon), 1.0 - spike);
      const double scale = sub > 0.0 ? target / sub : 0.0;
      for (auto& x : a) {
        if (x.value < 1.0) x.mass *= scale;
      }
      if (spike > 0.0) a.push_back({spike_at, spike});
    }
    atoms[i] = std::move(a);
  }
  AtomScenario s(base.name() + "_approx", base.h0(), std::move(atoms),
                 base.independent() ? std::vector<std::size_t>{} : std::move(bins));
  s.alpha = alpha;
  if (approx_validity_check(s, params) > 1e-12) {
    throw DomainError("inflated scenario violates the (eps, delta) condition");
  }
  return s;
}

SampleDraw sample(const AtomScenario& s, std::uint64_t seed, std::uint64_t replicate) {
  Rng rng(substream_seed(seed, replicate));
  std::vector<double> p;
  s.draw(rng, p);
  return {PValueVector(std::move(p)), s.h0()};
}

// ---------------------------------------------------------------------------

std::string scenario_to_json(const AtomScenario& s, int indent) {
  using nlohmann::json;
  json j;
  j["name"] = s.name();
  j["m"] = s.m();
  j["alpha"] = s.alpha ? json(*s.alpha) : json(nullptr);
  j["exact_fdr"] = s.exact_fdr ? json(*s.exact_fdr) : json(nullptr);
  json h0 = json::array();
  for (std::size_t i : s.h0().members()) h0.push_back(i + 1);
  j["h0"] = h0;
  json coords = json::array();
  for (std::size_t i = 0; i < s.m(); ++i) {
    json list = json::array();
    for (const auto& a : s.atoms(i)) list.push_back(json::array({a.value, a.mass}));
    coords.push_back(list);
  }
  j["coordinates"] = coords;
  if (s.independent()) {
    j["coupling"] = {{"kind", "independent"}};
  } else {
    json bins = json::array();
    for (std::size_t g : s.groups()) bins.push_back(g + 1);
    j["coupling"] = {{"kind", "shared_uniform_bins"}, {"bins", bins}};
  }
  return j.dump(indent);
}

AtomScenario scenario_from_json(const std::string& text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("scenario JSON does not parse: ") + e.what());
  }
  try {
    const auto m = j.at("m").get<std::size_t>();
    std::vector<std::size_t> h0;
    for (const auto& v : j.at("h0")) {
      const auto label = v.get<std::size_t>();
      if (label < 1 || label > m) throw InputError("h0 label out of range");
      h0.push_back(label - 1);
    }
    const auto& coords = j.at("coordinates");
    if (coords.size() != m) throw InputError("coordinates length does not match m");
    std::vector<std::vector<Atom>> atoms(m);
    for (std::size_t i = 0; i < m; ++i) {
      for (const auto& pair : coords[i]) {
        if (!pair.is_array() || pair.size() != 2) throw InputError("atom must be [value, mass]");
        atoms[i].push_back({pair[0].get<double>(), pair[1].get<double>()});
      }
    }
    std::vector<std::size_t> bins;
    const auto& coupling = j.at("coupling");
    const auto kind = coupling.at("kind").get<std::string>();
    if (kind == "shared_uniform_bins") {
      bins = coupling.at("bins").get<std::vector<std::size_t>>();
    } else if (kind != "independent") {
      throw InputError("unknown coupling kind '" + kind + "'");
    }
    AtomScenario s(j.value("name", std::string("scenario")), NullMask(m, h0), std::move(atoms),
                   std::move(bins));
    if (j.contains("alpha") && !j["alpha"].is_null()) s.alpha = j["alpha"].get<double>();
    if (j.contains("exact_fdr") && !j["exact_fdr"].is_null()) s.exact_fdr = j["exact_fdr"].get<double>();
    return s;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed scenario JSON: ") + e.what());
  }
}

}  // namespace cpbh
