// Command-line front end. Exit codes: 0 all checks pass, 1 a check failed,
// 2 usage or input error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cpbh/adversarial.hpp"
#include "cpbh/bounds_verify.hpp"
#include "cpbh/constructions.hpp"
#include "cpbh/csv.hpp"
#include "cpbh/error.hpp"
#include "cpbh/headline.hpp"
#include "cpbh/sim_harness.hpp"
#include "json.hpp"

namespace {

using nlohmann::json;

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw cpbh::InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw cpbh::InputError("cannot write '" + path + "'");
  out << text;
}

// Reads named numeric columns from a CSV file with a header row.
std::vector<std::vector<double>> read_columns(const std::string& path,
                                              const std::vector<std::string>& names) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw cpbh::InputError("cannot open '" + path + "'");
  cpbh::CsvReader reader(in);
  cpbh::CsvRecord rec;
  if (!reader.next(rec)) throw cpbh::InputError("'" + path + "' is empty");
  std::vector<std::size_t> idx;
  for (const auto& n : names) {
    const auto it = std::find(rec.fields.begin(), rec.fields.end(), n);
    if (it == rec.fields.end()) throw cpbh::InputError("'" + path + "' has no column '" + n + "'");
    idx.push_back(static_cast<std::size_t>(it - rec.fields.begin()));
  }
  std::vector<std::vector<double>> cols(names.size());
  while (reader.next(rec)) {
    if (rec.fields.size() == 1 && rec.fields[0].empty()) continue;
    for (std::size_t c = 0; c < names.size(); ++c) {
      if (idx[c] >= rec.fields.size()) {
        throw cpbh::InputError("line " + std::to_string(rec.line) + ": missing field '" + names[c] + "'");
      }
      try {
        std::size_t used = 0;
        const double v = std::stod(rec.fields[idx[c]], &used);
        if (used != rec.fields[idx[c]].size()) throw std::invalid_argument("trailing characters");
        cols[c].push_back(v);
      } catch (const std::exception&) {
        throw cpbh::InputError("line " + std::to_string(rec.line) + ": bad number '" +
                               rec.fields[idx[c]] + "'");
      }
    }
  }
  return cols;
}

void print_pvalues(const cpbh::PValueVector& p) {
  std::printf("index,p\n");
  for (std::size_t i = 0; i < p.size(); ++i) std::printf("%zu,%.17g\n", i + 1, p[i]);
}

cpbh::Metric parse_metric(const std::string& s) {
  if (s == "fdr") return cpbh::Metric::Fdr;
  if (s == "modified_fdr") return cpbh::Metric::ModifiedFdr;
  if (s == "any_rejection") return cpbh::Metric::AnyRejection;
  throw cpbh::DomainError("unknown metric '" + s + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BH with compound p-values: constructions, adversarial scenarios, simulation"};
  app.require_subcommand(1);

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Permutation vs compound p-values on headline A/B data");
  std::string a_input;
  std::vector<double> a_alphas;
  std::size_t a_min_headlines = 0;
  std::uint64_t a_exact_cap = 20000;
  std::size_t a_mc_draws = 10000;
  std::uint64_t a_seed = 0;
  std::string a_prefix;
  std::string a_digits = "unicode";
  cpbh::HeadlineSchema a_schema;
  analyze->add_option("--input", a_input, "Headline CSV")->required()->check(CLI::ExistingFile);
  analyze->add_option("--alpha", a_alphas, "BH level (repeatable)")->required()->check(CLI::Range(0.0, 1.0));
  analyze->add_option("--min-headlines", a_min_headlines, "Keep articles with more than N headlines");
  analyze->add_option("--exact-cap", a_exact_cap, "Enumerate assignments up to this many")->check(CLI::PositiveNumber);
  analyze->add_option("--mc-draws", a_mc_draws, "Sampled assignments above the cap")->check(CLI::PositiveNumber);
  analyze->add_option("--seed", a_seed, "Seed for sampled assignments");
  analyze->add_option("--out-prefix", a_prefix, "Write PREFIX_scatter.csv, PREFIX_sorted.csv, PREFIX_report.json");
  analyze->add_option("--digits", a_digits, "Digit detection")->check(CLI::IsMember({"unicode", "ascii"}));
  analyze->add_option("--col-article", a_schema.article, "Article id column");
  analyze->add_option("--col-headline", a_schema.headline, "Headline text column");
  analyze->add_option("--col-impressions", a_schema.impressions, "Impressions column");
  analyze->add_option("--col-clicks", a_schema.clicks, "Clicks column");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Run a theorem-check suite");
  cpbh::SuiteParams s_params;
  std::string s_suite;
  std::string s_json;
  std::string s_csv;
  simulate->add_option("--suite", s_suite, "thm1|thm2|thm3|gamma|props")
      ->required()
      ->check(CLI::IsMember({"thm1", "thm2", "thm3", "gamma", "props"}));
  simulate->add_option("--reps", s_params.reps, "Replicates per scenario")->check(CLI::PositiveNumber);
  simulate->add_option("--seed", s_params.seed, "Master seed");
  simulate->add_option("--fuzz-scenarios", s_params.fuzz_scenarios, "Random scenarios in thm1");
  simulate->add_option("--json", s_json, "Write JSON report ('-' for stdout)");
  simulate->add_option("--csv", s_csv, "Write CSV report ('-' for stdout)");

  // verify-bounds
  auto* verify = app.add_subcommand("verify-bounds", "Numerical checks of the bound constants");
  double v_tol = 1e-9;
  std::size_t v_L = 500;
  verify->add_option("--tol", v_tol, "Convergence tolerance for c_l")->check(CLI::PositiveNumber);
  verify->add_option("--L", v_L, "Length of the c_l sequence")->check(CLI::Range(2, 100000));

  // construct
  auto* construct = app.add_subcommand("construct", "Compute compound p-values from a CSV file");
  construct->require_subcommand(1);
  std::string c_input;
  auto* c_dd = construct->add_subcommand("decreasing-density", "Column x");
  c_dd->add_option("--input", c_input, "CSV with column x")->required()->check(CLI::ExistingFile);
  auto* c_w = construct->add_subcommand("weighted", "Columns p, w");
  c_w->add_option("--input", c_input, "CSV with columns p, w")->required()->check(CLI::ExistingFile);
  auto* c_g = construct->add_subcommand("gaussian-means", "Columns ybar, s2, n");
  c_g->add_option("--input", c_input, "CSV with columns ybar, s2, n")->required()->check(CLI::ExistingFile);

  // scenario
  auto* scenario = app.add_subcommand("scenario", "Emit, check or simulate atom scenarios");
  scenario->require_subcommand(1);
  auto* sc_emit = scenario->add_subcommand("emit", "Write a scenario as JSON");
  std::string e_kind;
  double e_alpha = 0.1;
  std::size_t e_m = 30;
  std::uint64_t e_seed = 0;
  std::size_t e_atoms = 6;
  sc_emit->add_option("--kind", e_kind, "prop2|prop4|prop5|random|random-global")
      ->required()
      ->check(CLI::IsMember({"prop2", "prop4", "prop5", "random", "random-global"}));
  sc_emit->add_option("--alpha", e_alpha, "Level")->check(CLI::Range(0.0, 1.0));
  sc_emit->add_option("--m", e_m, "Number of hypotheses")->check(CLI::PositiveNumber);
  sc_emit->add_option("--seed", e_seed, "Seed for random scenarios");
  sc_emit->add_option("--max-atoms", e_atoms, "Atom locations for random scenarios")->check(CLI::PositiveNumber);
  auto* sc_check = scenario->add_subcommand("check", "Analytic compound-validity check");
  std::string k_input;
  sc_check->add_option("--input", k_input, "Scenario JSON")->required()->check(CLI::ExistingFile);
  auto* sc_est = scenario->add_subcommand("estimate", "Monte Carlo estimate for a scenario");
  std::string x_input;
  double x_alpha = 0.1;
  std::size_t x_reps = 100000;
  std::uint64_t x_seed = 0;
  std::string x_metric = "fdr";
  sc_est->add_option("--input", x_input, "Scenario JSON")->required()->check(CLI::ExistingFile);
  sc_est->add_option("--alpha", x_alpha, "Level")->check(CLI::Range(0.0, 1.0));
  sc_est->add_option("--reps", x_reps, "Replicates")->check(CLI::PositiveNumber);
  sc_est->add_option("--seed", x_seed, "Seed");
  sc_est->add_option("--metric", x_metric, "fdr|any_rejection")->check(CLI::IsMember({"fdr", "any_rejection"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*analyze) {
      cpbh::IngestOptions io;
      io.schema = a_schema;
      io.digits = a_digits == "ascii" ? cpbh::DigitMode::Ascii : cpbh::DigitMode::Unicode;
      io.min_headlines = a_min_headlines;
      const cpbh::TrialSet ts = cpbh::ingest_headline_csv(a_input, io);
      std::printf("rows: %zu read, %zu malformed\n", ts.rows_read, ts.rows_bad);
      std::printf("articles: %zu seen, %zu dropped (one group only), %zu dropped (<= %zu headlines)\n",
                  ts.articles_seen, ts.articles_one_sided, ts.articles_too_small, a_min_headlines);
      std::printf("kept: m = %zu articles, %zu headlines\n", ts.trials.size(), ts.headlines());
      cpbh::PermutationOptions po;
      po.exact_cap = a_exact_cap;
      po.mc_draws = a_mc_draws;
      po.seed = a_seed;
      const cpbh::AnalysisReport rep = cpbh::analyze(ts, a_alphas, po);
      rep.write_summary(std::cout);
      if (!a_prefix.empty()) {
        std::ostringstream scatter;
        rep.write_scatter_csv(scatter);
        write_text(a_prefix + "_scatter.csv", scatter.str());
        std::ostringstream sorted;
        rep.write_sorted_csv(sorted);
        write_text(a_prefix + "_sorted.csv", sorted.str());
        json j;
        j["input"] = a_input;
        j["min_headlines"] = a_min_headlines;
        j["exact_cap"] = a_exact_cap;
        j["mc_draws"] = a_mc_draws;
        j["seed"] = a_seed;
        j["digits"] = a_digits;
        j["rows_read"] = ts.rows_read;
        j["rows_malformed"] = ts.rows_bad;
        j["articles_seen"] = ts.articles_seen;
        j["articles_dropped_one_group"] = ts.articles_one_sided;
        j["articles_dropped_small"] = ts.articles_too_small;
        j["m"] = ts.trials.size();
        j["headlines"] = ts.headlines();
        j["approximated_trials"] = rep.approximated_count();
        json counts = json::array();
        for (const auto& c : rep.counts) {
          counts.push_back({{"alpha", c.alpha}, {"permutation", c.permutation}, {"compound", c.compound}});
        }
        j["discoveries"] = counts;
        write_text(a_prefix + "_report.json", j.dump(2) + "\n");
      }
      return kOk;
    }

    if (*simulate) {
      const cpbh::SuiteReport rep = cpbh::run_suite(s_suite, s_params);
      if (!s_json.empty()) write_text(s_json, rep.to_json(2) + "\n");
      if (!s_csv.empty()) write_text(s_csv, rep.to_csv());
      std::size_t failed = 0;
      for (const auto& e : rep.entries) {
        if (!e.pass) {
          ++failed;
          std::fprintf(stderr, "FAIL %s: estimate %.6f (se %.6f) vs %.6f\n", e.scenario.c_str(),
                       e.estimate.mean, e.estimate.se, e.reference);
        }
      }
      if (s_json != "-" && s_csv != "-") {
        std::printf("suite %s: %zu checks, %zu failed\n", s_suite.c_str(), rep.entries.size(), failed);
      }
      return failed == 0 ? kOk : kCheckFailed;
    }

    if (*verify) {
      const auto checks = cpbh::run_bound_checks(v_tol, v_L);
      json arr = json::array();
      bool ok = true;
      for (const auto& c : checks) {
        arr.push_back({{"name", c.name}, {"computed", c.computed}, {"reference", c.reference}, {"pass", c.pass}});
        ok = ok && c.pass;
      }
      json j;
      j["tol"] = v_tol;
      j["L"] = v_L;
      j["checks"] = arr;
      j["all_pass"] = ok;
      std::cout << j.dump(2) << "\n";
      return ok ? kOk : kCheckFailed;
    }

    if (*construct) {
      if (*c_dd) {
        const auto cols = read_columns(c_input, {"x"});
        print_pvalues(cpbh::decreasing_density_pvalues(cols[0]));
      } else if (*c_w) {
        const auto cols = read_columns(c_input, {"p", "w"});
        print_pvalues(cpbh::weighted_pvalues(cpbh::PValueVector(cols[0]), cols[1]));
      } else if (*c_g) {
        const auto cols = read_columns(c_input, {"ybar", "s2", "n"});
        std::vector<cpbh::GaussianSummary> s;
        for (std::size_t i = 0; i < cols[0].size(); ++i) {
          s.push_back({cols[0][i], cols[1][i], static_cast<int>(cols[2][i])});
        }
        print_pvalues(cpbh::gaussian_means_pvalues(s));
      }
      return kOk;
    }

    if (*scenario) {
      if (*sc_emit) {
        cpbh::AtomScenario s;
        if (e_kind == "prop2") {
          s = cpbh::prop2_scenario(e_alpha, e_m);
        } else if (e_kind == "prop4") {
          s = cpbh::prop4_scenario(e_alpha, e_m);
        } else if (e_kind == "prop5") {
          s = cpbh::prop5_scenario(e_alpha, e_m);
        } else {
          cpbh::RandomScenarioOptions ro;
          ro.max_atoms = e_atoms;
          ro.global_null = e_kind == "random-global";
          ro.snap_alpha = e_alpha;
          s = cpbh::random_atom_scenario(e_m, e_seed, ro);
        }
        std::cout << cpbh::scenario_to_json(s, 2) << "\n";
        return kOk;
      }
      if (*sc_check) {
        const cpbh::AtomScenario s = cpbh::scenario_from_json(read_file(k_input));
        const double v = cpbh::compound_validity_check(s);
        std::printf("%.17g\n", v);
        return v <= 1e-12 ? kOk : kCheckFailed;
      }
      if (*sc_est) {
        const cpbh::AtomScenario s = cpbh::scenario_from_json(read_file(x_input));
        cpbh::ExperimentConfig cfg;
        cfg.scenario = &s;
        cfg.alpha = x_alpha;
        cfg.reps = x_reps;
        cfg.seed = x_seed;
        cfg.metric = parse_metric(x_metric);
        const cpbh::FdrEstimate est = cpbh::estimate_fdr(cfg);
        json j;
        j["scenario"] = s.name();
        j["alpha"] = x_alpha;
        j["metric"] = x_metric;
        j["estimate"] = est.mean;
        j["se"] = est.se;
        j["reps"] = est.reps;
        j["seed"] = est.seed;
        j["exact_fdr"] = s.exact_fdr ? json(*s.exact_fdr) : json(nullptr);
        std::cout << j.dump(2) << "\n";
        if (s.exact_fdr && cfg.metric == cpbh::Metric::Fdr && s.alpha && *s.alpha == x_alpha) {
          return cpbh::matches(est, *s.exact_fdr) ? kOk : kCheckFailed;
        }
        return kOk;
      }
    }
  } catch (const cpbh::InputError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kUsage;
  } catch (const cpbh::DomainError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  }
  return kOk;
}
