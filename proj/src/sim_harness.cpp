#include "cpbh/sim_harness.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "cpbh/error.hpp"
#include "json.hpp"
#include "parallel.hpp"

namespace cpbh {
namespace {

constexpr double kSeMultiplier = 3.0;

void require_config(const ExperimentConfig& cfg) {
  if (cfg.scenario == nullptr) throw DomainError("experiment has no scenario");
  if (cfg.reps < 1) throw DomainError("experiment needs reps >= 1");
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) throw DomainError("alpha must lie in [0, 1]");
  if (cfg.metric == Metric::ModifiedFdr) {
    if (cfg.params.epsilon < 0.0 || cfg.params.delta < 0.0) {
      throw DomainError("approximation parameters must be nonnegative");
    }
    if (cfg.params.delta > 0.0 && cfg.alpha <= 0.0) {
      throw DomainError("modified FDR with delta > 0 requires alpha > 0");
    }
  }
}

double metric_value(const ExperimentConfig& cfg, std::size_t m, std::size_t k_hat,
                    std::size_t false_rejections) {
  switch (cfg.metric) {
    case Metric::AnyRejection:
      return k_hat > 0 ? 1.0 : 0.0;
    case Metric::Fdr:
      if (k_hat == 0) return 0.0;
      return static_cast<double>(false_rejections) / static_cast<double>(k_hat);
    case Metric::ModifiedFdr: {
      const double slack =
          cfg.params.delta > 0.0
              ? static_cast<double>(m) * cfg.params.delta / (cfg.alpha * (1.0 + cfg.params.epsilon))
              : 0.0;
      const double denom = slack + static_cast<double>(k_hat);
      if (denom == 0.0) return 0.0;
      return static_cast<double>(false_rejections) / denom;
    }
  }
  return 0.0;
}

double run_replicate(const ExperimentConfig& cfg, std::uint64_t r, std::vector<double>& p,
                     std::vector<double>& scratch) {
  Rng rng(substream_seed(cfg.seed, r));
  cfg.scenario->draw(rng, p);
  const std::size_t m = p.size();
  const std::size_t k_hat = bh_count(p, cfg.alpha, scratch);
  std::size_t false_rejections = 0;
  if (k_hat > 0) {
    const double thr = bh_threshold(cfg.alpha, k_hat, m);
    const NullMask& h0 = cfg.scenario->h0();
    for (std::size_t i = 0; i < m; ++i) {
      if (p[i] <= thr && h0.contains(i)) ++false_rejections;
    }
  }
  return metric_value(cfg, m, k_hat, false_rejections);
}

FdrEstimate summarize(std::span<const double> values, const ExperimentConfig& cfg) {
  FdrEstimate out;
  out.reps = values.size();
  out.seed = cfg.seed;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    out.se = sd / std::sqrt(static_cast<double>(values.size()));
  }
  return out;
}

}  // namespace

const char* metric_name(Metric m) {
  switch (m) {
    case Metric::Fdr:
      return "fdr";
    case Metric::ModifiedFdr:
      return "modified_fdr";
    case Metric::AnyRejection:
      return "any_rejection";
  }
  return "?";
}

double replicate_metric(const ExperimentConfig& cfg, std::uint64_t replicate) {
  require_config(cfg);
  std::vector<double> p;
  std::vector<double> scratch;
  return run_replicate(cfg, replicate, p, scratch);
}

FdrEstimate estimate_fdr(const ExperimentConfig& cfg) {
  require_config(cfg);
  std::vector<double> values(cfg.reps);
  detail::parallel_for(cfg.reps, [&](std::size_t r) {
    thread_local std::vector<double> p;
    thread_local std::vector<double> scratch;
    try {
      values[r] = run_replicate(cfg, r, p, scratch);
    } catch (const std::exception& e) {
      throw DomainError("replicate " + std::to_string(r) + ": " + e.what());
    }
  });
  return summarize(values, cfg);
}

bool within_upper(const FdrEstimate& e, double bound) { return e.mean <= bound + kSeMultiplier * e.se; }
bool within_lower(const FdrEstimate& e, double bound) { return e.mean >= bound - kSeMultiplier * e.se; }
bool matches(const FdrEstimate& e, double value) {
  return std::abs(e.mean - value) <= kSeMultiplier * e.se;
}

// ---------------------------------------------------------------------------

bool SuiteReport::all_pass() const {
  return std::all_of(entries.begin(), entries.end(), [](const SuiteEntry& e) { return e.pass; });
}

namespace {

const char* relation_name(Relation r) {
  switch (r) {
    case Relation::AtMost:
      return "<=";
    case Relation::AtLeast:
      return ">=";
    case Relation::Matches:
      return "==";
  }
  return "?";
}

class SuiteBuilder {
public:
  SuiteBuilder(std::string name, const SuiteParams& params) {
    report_.suite = std::move(name);
    report_.seed = params.seed;
    report_.reps = params.reps;
    params_ = params;
  }

  FdrEstimate run(const PSource& s, double alpha, Metric metric, ApproxParams ap = {}) {
    ExperimentConfig cfg;
    cfg.scenario = &s;
    cfg.alpha = alpha;
    cfg.reps = params_.reps;
    // Each experiment in a suite gets its own stream family.
    cfg.seed = substream_seed(params_.seed, 0x5eed0000ULL + counter_++);
    cfg.metric = metric;
    cfg.params = ap;
    return estimate_fdr(cfg);
  }

  void add(std::string id, double alpha, Metric metric, const FdrEstimate& est, double reference,
           Relation rel) {
    SuiteEntry e;
    e.scenario = std::move(id);
    e.alpha = alpha;
    e.metric = metric;
    e.estimate = est;
    e.reference = reference;
    e.relation = rel;
    switch (rel) {
      case Relation::AtMost:
        e.pass = within_upper(est, reference);
        break;
      case Relation::AtLeast:
        e.pass = within_lower(est, reference);
        break;
      case Relation::Matches:
        e.pass = matches(est, reference);
        break;
    }
    report_.entries.push_back(std::move(e));
  }

  SuiteReport finish() { return std::move(report_); }

private:
  SuiteReport report_;
  SuiteParams params_;
  std::uint64_t counter_ = 0;
};

constexpr double kCompoundFdrConstant = 1.93;

void thm1_suite(SuiteBuilder& b, const SuiteParams& p) {
  const double a = p.fuzz_alpha;
  RandomScenarioOptions opts;
  opts.snap_alpha = a;
  for (std::size_t s = 0; s < p.fuzz_scenarios; ++s) {
    const AtomScenario sc = random_atom_scenario(p.fuzz_m, substream_seed(p.seed, s), opts);
    b.add("random_" + std::to_string(s), a, Metric::Fdr, b.run(sc, a, Metric::Fdr), kCompoundFdrConstant * a,
          Relation::AtMost);
  }
  const AtomScenario p2 = prop2_scenario(0.1, 30);
  b.add("prop2_a0.1_m30", 0.1, Metric::Fdr, b.run(p2, 0.1, Metric::Fdr), kCompoundFdrConstant * 0.1,
        Relation::AtMost);
  const AtomScenario p4 = prop4_scenario(0.2, 10);
  b.add("prop4_a0.2_m10", 0.2, Metric::Fdr, b.run(p4, 0.2, Metric::Fdr), kCompoundFdrConstant * 0.2,
        Relation::AtMost);
}

void thm2_suite(SuiteBuilder& b, const SuiteParams& p) {
  const std::vector<ApproxParams> grid = {{0.1, 0.001}, {0.25, 0.005}};
  for (const auto& ap : grid) {
    std::vector<std::pair<std::string, AtomScenario>> bases;
    bases.emplace_back("prop2_a0.1_m30", prop2_scenario(0.1, 30));
    bases.emplace_back("prop4_a0.2_m10", prop4_scenario(0.2, 10));
    RandomScenarioOptions opts;
    opts.snap_alpha = p.fuzz_alpha;
    for (std::size_t s = 0; s < 20; ++s) {
      bases.emplace_back("random_" + std::to_string(s),
                         random_atom_scenario(p.fuzz_m, substream_seed(p.seed, 5000 + s), opts));
    }
    for (auto& [id, base] : bases) {
      const double a = base.alpha.value_or(p.fuzz_alpha);
      const AtomScenario sc = approximate_scenario(base, a, ap);
      std::ostringstream tag;
      tag << id << "_eps" << ap.epsilon << "_delta" << ap.delta;
      b.add(tag.str(), a, Metric::ModifiedFdr, b.run(sc, a, Metric::ModifiedFdr, ap),
            kCompoundFdrConstant * a * (1.0 + ap.epsilon), Relation::AtMost);
    }
  }
}

void thm3_suite(SuiteBuilder& b, const SuiteParams& p) {
  for (double a : {0.1, 0.2, 0.3}) {
    const double bound = a + 2.0 * a * a;
    const AtomScenario p4 = prop4_scenario(a, 10);
    std::ostringstream tag;
    tag << "prop4_a" << a << "_m10";
    b.add(tag.str(), a, Metric::AnyRejection, b.run(p4, a, Metric::AnyRejection), bound,
          Relation::AtMost);
    RandomScenarioOptions opts;
    opts.global_null = true;
    opts.snap_alpha = a;
    for (std::size_t s = 0; s < 30; ++s) {
      const AtomScenario sc =
          random_atom_scenario(20, substream_seed(p.seed, 9000 + 100 * static_cast<std::uint64_t>(a * 10) + s), opts);
      std::ostringstream id;
      id << "random_global_a" << a << "_" << s;
      b.add(id.str(), a, Metric::AnyRejection, b.run(sc, a, Metric::AnyRejection), bound,
            Relation::AtMost);
    }
  }
}

void gamma_suite(SuiteBuilder& b, const SuiteParams& p) {
  const double a = 0.1;
  for (double g : {0.2, 0.5}) {
    const double bound = a / (1.0 - g);
    const AtomScenario p4 = prop4_scenario(a, 10);
    if (max_null_cdf(p4, a) <= g) {
      std::ostringstream tag;
      tag << "prop4_a" << a << "_gamma" << g;
      b.add(tag.str(), a, Metric::Fdr, b.run(p4, a, Metric::Fdr), bound, Relation::AtMost);
    }
    RandomScenarioOptions opts;
    opts.snap_alpha = a;
    opts.gamma = g;
    opts.gamma_alpha = a;
    for (std::size_t s = 0; s < 30; ++s) {
      const AtomScenario sc =
          random_atom_scenario(30, substream_seed(p.seed, 20000 + static_cast<std::uint64_t>(g * 10) * 100 + s), opts);
      if (max_null_cdf(sc, a) > g) throw DomainError("gamma-constrained generator exceeded gamma");
      std::ostringstream id;
      id << "random_gamma" << g << "_" << s;
      b.add(id.str(), a, Metric::Fdr, b.run(sc, a, Metric::Fdr), bound, Relation::AtMost);
    }
  }
}

void props_suite(SuiteBuilder& b, const SuiteParams&) {
  const AtomScenario p2 = prop2_scenario(0.1, 30);
  b.add("prop2_a0.1_m30", 0.1, Metric::Fdr, b.run(p2, 0.1, Metric::Fdr), *p2.exact_fdr,
        Relation::Matches);
  const AtomScenario p4 = prop4_scenario(0.2, 10);
  b.add("prop4_a0.2_m10", 0.2, Metric::Fdr, b.run(p4, 0.2, Metric::Fdr), *p4.exact_fdr,
        Relation::Matches);
  for (auto [a, m] : {std::pair{0.25, std::size_t{3}}, std::pair{0.1, std::size_t{50}},
                      std::pair{0.3, std::size_t{20}}}) {
    const AtomScenario p5 = prop5_scenario(a, m);
    const FdrEstimate est = b.run(p5, a, Metric::Fdr);
    std::ostringstream tag;
    tag << "prop5_a" << a << "_m" << m;
    b.add(tag.str(), a, Metric::Fdr, est, *p5.exact_fdr, Relation::Matches);
    b.add(tag.str() + "_lower", a, Metric::Fdr, est, 0.375 * std::min(a * harmonic(m), 1.0),
          Relation::AtLeast);
  }
}

}  // namespace

SuiteReport run_suite(const std::string& name, const SuiteParams& params) {
  if (params.reps < 1) throw DomainError("suite needs reps >= 1");
  SuiteBuilder b(name, params);
  if (name == "thm1") {
    thm1_suite(b, params);
  } else if (name == "thm2") {
    thm2_suite(b, params);
  } else if (name == "thm3") {
    thm3_suite(b, params);
  } else if (name == "gamma") {
    gamma_suite(b, params);
  } else if (name == "props") {
    props_suite(b, params);
  } else {
    throw DomainError("unknown suite '" + name + "' (expected thm1, thm2, thm3, gamma or props)");
  }
  return b.finish();
}

std::string SuiteReport::to_json(int indent) const {
  using nlohmann::json;
  json j;
  j["suite"] = suite;
  j["seed"] = seed;
  j["reps"] = reps;
  json arr = json::array();
  for (const auto& e : entries) {
    arr.push_back({{"scenario", e.scenario},
                   {"alpha", e.alpha},
                   {"metric", metric_name(e.metric)},
                   {"estimate", e.estimate.mean},
                   {"se", e.estimate.se},
                   {"reps", e.estimate.reps},
                   {"seed", e.estimate.seed},
                   {"reference", e.reference},
                   {"relation", relation_name(e.relation)},
                   {"verdict", e.pass ? "pass" : "fail"}});
  }
  j["entries"] = arr;
  j["all_pass"] = all_pass();
  return j.dump(indent);
}

std::string SuiteReport::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "suite,scenario,alpha,metric,estimate,se,reps,seed,reference,relation,verdict\n";
  for (const auto& e : entries) {
    os << suite << ',' << e.scenario << ',' << e.alpha << ',' << metric_name(e.metric) << ','
       << e.estimate.mean << ',' << e.estimate.se << ',' << e.estimate.reps << ','
       << e.estimate.seed << ',' << e.reference << ',' << relation_name(e.relation) << ','
       << (e.pass ? "pass" : "fail") << '\n';
  }
  return os.str();
}

}  // namespace cpbh
