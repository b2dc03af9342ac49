#include "cpbh/headline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <unordered_map>

#include "cpbh/csv.hpp"
#include "cpbh/error.hpp"
#include "cpbh/numerics.hpp"

namespace cpbh {
namespace {

// First code point of every run of ten decimal digits (general category Nd).
constexpr char32_t kDigitZeros[] = {
    0x0030,  0x0660,  0x06F0,  0x07C0,  0x0966,  0x09E6,  0x0A66,  0x0AE6,  0x0B66,  0x0BE6,
    0x0C66,  0x0CE6,  0x0D66,  0x0DE6,  0x0E50,  0x0ED0,  0x0F20,  0x1040,  0x1090,  0x17E0,
    0x1810,  0x1946,  0x19D0,  0x1A80,  0x1A90,  0x1B50,  0x1BB0,  0x1C40,  0x1C50,  0xA620,
    0xA8D0,  0xA900,  0xA9D0,  0xA9F0,  0xAA50,  0xABF0,  0xFF10,  0x104A0, 0x10D30, 0x11066,
    0x110F0, 0x11136, 0x111D0, 0x112F0, 0x11450, 0x114D0, 0x11650, 0x116C0, 0x11730, 0x118E0,
    0x11950, 0x11C50, 0x11D50, 0x11DA0, 0x11F50, 0x16A60, 0x16AC0, 0x16B50, 0x1D7CE, 0x1D7D8,
    0x1D7E2, 0x1D7EC, 0x1D7F6, 0x1E140, 0x1E2F0, 0x1E4F0, 0x1E950, 0x1FBF0,
};

bool is_decimal_digit(char32_t cp) {
  const auto* end = std::end(kDigitZeros);
  const auto* it = std::upper_bound(std::begin(kDigitZeros), end, cp);
  if (it == std::begin(kDigitZeros)) return false;
  return cp - *(it - 1) < 10;
}

// Lenient UTF-8 decoding; malformed bytes decode to U+FFFD.
template <class F>
void for_each_code_point(const std::string& s, F&& f) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    char32_t cp = 0xFFFD;
    if (b0 < 0x80) {
      cp = b0;
    } else if ((b0 >> 5) == 0x6) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 >> 4) == 0xE) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 >> 3) == 0x1E) {
      len = 4;
      cp = b0 & 0x07;
    } else {
      f(char32_t{0xFFFD});
      ++i;
      continue;
    }
    if (i + len > s.size()) {
      f(char32_t{0xFFFD});
      ++i;
      continue;
    }
    bool ok = true;
    for (std::size_t k = 1; k < len; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b >> 6) != 0x2) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (b & 0x3F);
    }
    if (!ok) {
      f(char32_t{0xFFFD});
      ++i;
      continue;
    }
    f(cp);
    i += len;
  }
}

bool parse_count(const std::string& text, std::int64_t& out) {
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
  if (b == e) return false;
  const char* first = text.data() + b;
  const char* last = text.data() + e;
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec == std::errc() && ptr == last) return out >= 0;
  // Some exports write counts as floats ("123.0").
  double d = 0.0;
  auto [ptr2, ec2] = std::from_chars(first, last, d);
  if (ec2 != std::errc() || ptr2 != last || !(d >= 0.0) || d > 9e15 || std::floor(d) != d) return false;
  out = static_cast<std::int64_t>(d);
  return true;
}

struct Unit {
  std::int64_t clicks;
  std::int64_t impressions;
  bool treated;
};

}  // namespace

bool contains_digit(const std::string& utf8, DigitMode mode) {
  if (mode == DigitMode::Ascii) {
    return std::any_of(utf8.begin(), utf8.end(), [](char c) { return c >= '0' && c <= '9'; });
  }
  bool found = false;
  for_each_code_point(utf8, [&](char32_t cp) { found = found || is_decimal_digit(cp); });
  return found;
}

std::size_t TrialSet::headlines() const {
  std::size_t n = 0;
  for (const auto& t : trials) n += t.units();
  return n;
}

TrialSet ingest_headline_csv(const std::string& path, const IngestOptions& opts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  return ingest_headline_csv(in, opts);
}

TrialSet ingest_headline_csv(std::istream& in, const IngestOptions& opts) {
  CsvReader reader(in);
  CsvRecord rec;
  if (!reader.next(rec)) throw InputError("empty CSV input");
  if (!rec.fields.empty() && rec.fields[0].rfind("\xEF\xBB\xBF", 0) == 0) rec.fields[0].erase(0, 3);

  auto column = [&](const std::string& name) {
    const auto it = std::find(rec.fields.begin(), rec.fields.end(), name);
    if (it == rec.fields.end()) throw InputError("missing column '" + name + "'");
    return static_cast<std::size_t>(it - rec.fields.begin());
  };
  const std::size_t c_article = column(opts.schema.article);
  const std::size_t c_headline = column(opts.schema.headline);
  const std::size_t c_impr = column(opts.schema.impressions);
  const std::size_t c_clicks = column(opts.schema.clicks);
  const std::size_t needed = std::max({c_article, c_headline, c_impr, c_clicks}) + 1;

  TrialSet out;
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<Unit>> units;
  while (reader.next(rec)) {
    if (rec.fields.size() == 1 && rec.fields[0].empty()) continue;  // blank line
    ++out.rows_read;
    auto bad = [&](std::string msg) {
      ++out.rows_bad;
      out.errors.push_back({rec.line, std::move(msg)});
    };
    if (rec.fields.size() < needed) {
      bad("expected at least " + std::to_string(needed) + " fields, found " +
          std::to_string(rec.fields.size()));
      continue;
    }
    std::int64_t impressions = 0;
    std::int64_t clicks = 0;
    if (!parse_count(rec.fields[c_impr], impressions)) {
      bad("unparsable impressions '" + rec.fields[c_impr] + "'");
      continue;
    }
    if (!parse_count(rec.fields[c_clicks], clicks)) {
      bad("unparsable clicks '" + rec.fields[c_clicks] + "'");
      continue;
    }
    if (clicks > impressions) {
      bad("clicks exceed impressions");
      continue;
    }
    const std::string& id = rec.fields[c_article];
    auto [it, inserted] = units.try_emplace(id);
    if (inserted) order.push_back(id);
    it->second.push_back({clicks, impressions, contains_digit(rec.fields[c_headline], opts.digits)});
  }
  if (out.rows_read > 0 &&
      static_cast<double>(out.rows_bad) > opts.max_bad_fraction * static_cast<double>(out.rows_read)) {
    std::string msg = std::to_string(out.rows_bad) + " of " + std::to_string(out.rows_read) +
                      " rows are malformed";
    if (!out.errors.empty()) {
      msg += " (first: line " + std::to_string(out.errors.front().line) + ": " +
             out.errors.front().message + ")";
    }
    throw InputError(msg);
  }

  out.articles_seen = order.size();
  for (const auto& id : order) {
    const auto& u = units[id];
    const auto n_treated = static_cast<std::size_t>(
        std::count_if(u.begin(), u.end(), [](const Unit& x) { return x.treated; }));
    if (n_treated == 0 || n_treated == u.size()) {
      ++out.articles_one_sided;
      continue;
    }
    if (u.size() <= opts.min_headlines) {
      ++out.articles_too_small;
      continue;
    }
    TrialData t;
    t.width = 2;
    t.n_treated = n_treated;
    t.values.reserve(2 * u.size());
    for (bool want : {true, false}) {
      for (const auto& x : u) {
        if (x.treated != want) continue;
        t.values.push_back(static_cast<double>(x.clicks));
        t.values.push_back(static_cast<double>(x.impressions));
      }
    }
    out.ids.push_back(id);
    out.trials.push_back(std::move(t));
  }
  return out;
}

double headline_statistic(const TrialData& trial) {
  if (trial.width != 2) throw DomainError("headline trials carry (clicks, impressions) records");
  const std::size_t n = trial.units();
  if (trial.n_treated < 1 || trial.n_treated >= n) throw DomainError("both groups must be nonempty");
  std::int64_t sums[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t u = 0; u < n; ++u) {
    const auto rec = trial.unit(u);
    const auto clicks = static_cast<std::int64_t>(std::llround(rec[0]));
    const auto impressions = static_cast<std::int64_t>(std::llround(rec[1]));
    if (clicks < 0 || impressions < clicks) throw DomainError("invalid (clicks, impressions) record");
    const int g = u < trial.n_treated ? 0 : 1;
    sums[g][0] += clicks;
    sums[g][1] += impressions - clicks;
  }
  return 1.0 - fisher_exact_onesided(sums[0][0], sums[0][1], sums[1][0], sums[1][1]);
}

std::size_t AnalysisReport::approximated_count() const {
  return static_cast<std::size_t>(std::count(approximated.begin(), approximated.end(), true));
}

AnalysisReport analyze(const TrialSet& trials, std::span<const double> alphas,
                       const PermutationOptions& opts) {
  if (trials.trials.empty()) throw DomainError("no trials to analyze");
  const PermutationPooling pool = permutation_pooling(trials.trials, headline_statistic, opts);
  AnalysisReport rep;
  rep.ids = trials.ids;
  rep.statistic = pool.observed;
  rep.permutation_p = pool.permutation;
  rep.compound_p = pool.compound.vec();
  rep.approximated = pool.approximated;
  rep.options = opts;
  const PValueVector perm(pool.permutation);
  for (double a : alphas) {
    rep.counts.push_back({a, bh_reject(perm, a).k_hat, bh_reject(pool.compound, a).k_hat});
  }
  return rep;
}

void AnalysisReport::write_scatter_csv(std::ostream& os) const {
  os << std::setprecision(17);
  os << "article_id,statistic,permutation_p,compound_p,approximated\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    os << csv_escape(ids[i]) << ',' << statistic[i] << ',' << permutation_p[i] << ','
       << compound_p[i] << ',' << (approximated[i] ? 1 : 0) << '\n';
  }
}

void AnalysisReport::write_sorted_csv(std::ostream& os) const {
  std::vector<double> perm = permutation_p;
  std::vector<double> comp = compound_p;
  std::sort(perm.begin(), perm.end());
  std::sort(comp.begin(), comp.end());
  const double m = static_cast<double>(perm.size());
  os << std::setprecision(17);
  os << "rank,fraction,permutation_p,compound_p\n";
  for (std::size_t k = 0; k < perm.size(); ++k) {
    os << k + 1 << ',' << static_cast<double>(k + 1) / m << ',' << perm[k] << ',' << comp[k] << '\n';
  }
}

void AnalysisReport::write_summary(std::ostream& os) const {
  os << "trials: " << ids.size() << " (" << approximated_count()
     << " with sampled assignments, exact_cap " << options.exact_cap << ", seed " << options.seed
     << ")\n";
  os << std::left << std::setw(8) << "alpha" << std::setw(14) << "permutation" << "compound\n";
  for (const auto& c : counts) {
    os << std::left << std::setw(8) << c.alpha << std::setw(14) << c.permutation << c.compound << '\n';
  }
}

}  // namespace cpbh
