#pragma once

// Competitive features and contest labels.
//
// Coarse features are computed per sub-window (default: per day). Fine
// features summarise each coarse feature's sub-series with eight descriptors.
// Labels come from per-window download totals.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "csv.hpp"
#include "errors.hpp"
#include "ingest.hpp"
#include "parallel.hpp"
#include "textmine.hpp"

namespace popcontest {

enum class Granularity : std::uint8_t { CF = 0, FF = 1 };
enum class Source : std::uint8_t { AF = 0, MF = 1 };

inline std::string_view to_string(Granularity g) { return g == Granularity::CF ? "CF" : "FF"; }
inline std::string_view to_string(Source s) { return s == Source::AF ? "AF" : "MF"; }

struct CoarseFeatureDef {
  const char* name;
  Source source;
};

// Coarse feature catalogue in emission order.
inline constexpr std::array<CoarseFeatureDef, 17> kCoarseFeatures{{
    {"n_reviews_A", Source::AF},
    {"n_reviews_B", Source::AF},
    {"dn_norm", Source::AF},
    {"mean_rating_A", Source::AF},
    {"mean_rating_B", Source::AF},
    {"ds", Source::AF},
    {"sent_sim", Source::AF},
    {"n_posts", Source::MF},
    {"n_users", Source::MF},
    {"n_reposts", Source::MF},
    {"n_comments", Source::MF},
    {"n_likes", Source::MF},
    {"r_ba", Source::MF},
    {"r_ab", Source::MF},
    {"cmp_count", Source::MF},
    {"cmp_score_A", Source::MF},
    {"cmp_score_B", Source::MF},
}};

// Unsigned app-statistic differences, emitted only with FeatureConfig::absolute_diffs.
inline constexpr std::array<CoarseFeatureDef, 2> kAbsoluteFeatures{{
    {"dn_abs", Source::AF},
    {"ds_abs", Source::AF},
}};

inline constexpr double kImputedRating = 3.0;

struct FeatureConfig {
  SentimentLexicon lexicon;
  ComparativeDictionary comparatives;
  std::vector<std::string> keywords_A;
  std::vector<std::string> keywords_B;
  SentimentThresholds thresholds;
  MatchMode match = MatchMode::Substring;
  bool absolute_diffs = false;
};

// Bits recording which documented defaults were applied in a sub-window.
enum ImputationFlag : std::uint8_t {
  kRatingA = 1 << 0,       // no rated A reviews: mean rating A = 3.0
  kRatingB = 1 << 1,
  kSentimentA = 1 << 2,    // no A reviews: uniform sentiment distribution
  kSentimentB = 1 << 3,
  kRatioBA = 1 << 4,       // no A mentions in the A dataset: r_ba = 0
  kRatioAB = 1 << 5,
  kReviewCounts = 1 << 6,  // no reviews at all: dn_norm = 0
};

struct ImputationSummary {
  std::size_t rating_A = 0, rating_B = 0;
  std::size_t sentiment_A = 0, sentiment_B = 0;
  std::size_t ratio_ba = 0, ratio_ab = 0;
  std::size_t empty_reviews = 0;
};

class CoarseSeries {
 public:
  CoarseSeries() = default;
  CoarseSeries(std::vector<CoarseFeatureDef> defs, std::size_t windows, std::size_t per_window)
      : defs_(std::move(defs)),
        windows_(windows),
        per_window_(per_window),
        values_(defs_.size(), std::vector<double>(windows * per_window, 0.0)),
        flags_(windows * per_window, 0) {}

  const std::vector<CoarseFeatureDef>& features() const { return defs_; }
  std::size_t feature_count() const { return defs_.size(); }
  std::size_t window_count() const { return windows_; }
  std::size_t sub_windows_per_window() const { return per_window_; }

  std::size_t index_of(std::string_view name) const {
    for (std::size_t i = 0; i < defs_.size(); ++i)
      if (name == defs_[i].name) return i;
    throw std::out_of_range("unknown coarse feature " + std::string(name));
  }

  double value(std::size_t feature, std::size_t window, std::size_t sub) const {
    return values_.at(feature).at(window * per_window_ + sub);
  }
  double& value(std::size_t feature, std::size_t window, std::size_t sub) {
    return values_.at(feature).at(window * per_window_ + sub);
  }
  double value(std::string_view name, std::size_t window, std::size_t sub) const {
    return value(index_of(name), window, sub);
  }

  // Sub-series of one feature inside one window.
  std::span<const double> window_series(std::size_t feature, std::size_t window) const {
    return std::span<const double>(values_.at(feature)).subspan(window * per_window_, per_window_);
  }

  // Value at the last sub-window of a window.
  double window_end(std::size_t feature, std::size_t window) const {
    return value(feature, window, per_window_ - 1);
  }

  std::uint8_t flags(std::size_t window, std::size_t sub) const { return flags_.at(window * per_window_ + sub); }
  std::uint8_t& flags(std::size_t window, std::size_t sub) { return flags_.at(window * per_window_ + sub); }

  ImputationSummary imputations() const {
    ImputationSummary s;
    for (auto f : flags_) {
      s.rating_A += (f & kRatingA) != 0;
      s.rating_B += (f & kRatingB) != 0;
      s.sentiment_A += (f & kSentimentA) != 0;
      s.sentiment_B += (f & kSentimentB) != 0;
      s.ratio_ba += (f & kRatioBA) != 0;
      s.ratio_ab += (f & kRatioAB) != 0;
      s.empty_reviews += (f & kReviewCounts) != 0;
    }
    return s;
  }

 private:
  std::vector<CoarseFeatureDef> defs_;
  std::size_t windows_ = 0;
  std::size_t per_window_ = 0;
  std::vector<std::vector<double>> values_;
  std::vector<std::uint8_t> flags_;
};

namespace detail {

inline std::optional<double> mean_rating(const std::vector<ReviewRecord>& reviews) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : reviews) {
    if (r.rating) {
      sum += *r.rating;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

inline SentimentDistribution review_sentiment(const std::vector<ReviewRecord>& reviews, const FeatureConfig& cfg) {
  std::vector<double> scores;
  scores.reserve(reviews.size());
  for (const auto& r : reviews) scores.push_back(score_sentiment(r.text, cfg.lexicon, cfg.match));
  return sentiment_distribution(scores, cfg.thresholds);
}

inline std::vector<std::string> texts_of(const std::vector<MicroblogRecord>& posts) {
  std::vector<std::string> out;
  out.reserve(posts.size());
  for (const auto& p : posts) out.push_back(p.text);
  return out;
}

inline double mention_ratio(const std::vector<MicroblogRecord>& posts, const std::vector<std::string>& numerator,
                            const std::vector<std::string>& denominator, MatchMode mode, bool& imputed) {
  const auto texts = texts_of(posts);
  const auto den = count_mentions(texts, denominator, mode);
  if (den == 0) {
    imputed = true;
    return 0.0;
  }
  return static_cast<double>(count_mentions(texts, numerator, mode)) / static_cast<double>(den);
}

}  // namespace detail

// Signed normalized difference (a - b) / (a + b), 0 when both are 0.
inline double normalized_difference(double a, double b) {
  const double sum = a + b;
  return sum == 0.0 ? 0.0 : (a - b) / sum;
}

// Coarse features of one cell, written in kCoarseFeatures order (then the
// absolute variants when enabled). Returns the imputation flags.
inline std::uint8_t coarse_cell(const Cell& cell, const FeatureConfig& cfg, std::span<double> out) {
  std::uint8_t flags = 0;
  const auto& revA = cell.reviews_of(App::A);
  const auto& revB = cell.reviews_of(App::B);
  const auto nA = static_cast<double>(revA.size());
  const auto nB = static_cast<double>(revB.size());
  if (revA.empty() && revB.empty()) flags |= kReviewCounts;

  const auto mA = detail::mean_rating(revA);
  const auto mB = detail::mean_rating(revB);
  if (!mA) flags |= kRatingA;
  if (!mB) flags |= kRatingB;
  const double ratingA = mA.value_or(kImputedRating);
  const double ratingB = mB.value_or(kImputedRating);

  if (revA.empty()) flags |= kSentimentA;
  if (revB.empty()) flags |= kSentimentB;
  const auto sentA = detail::review_sentiment(revA, cfg);
  const auto sentB = detail::review_sentiment(revB, cfg);

  const auto& both = cell.posts_of(Dataset::Both);
  std::set<std::string> users;
  double reposts = 0, comments = 0, likes = 0;
  ComparisonResult cmp;
  for (const auto& p : both) {
    users.insert(p.user_id);
    reposts += static_cast<double>(p.reposts);
    comments += static_cast<double>(p.comments);
    likes += static_cast<double>(p.likes);
    cmp += detect_comparisons(p.text, cfg.comparatives, cfg.keywords_A, cfg.keywords_B, cfg.match);
  }

  bool imputed_ba = false, imputed_ab = false;
  const double r_ba = detail::mention_ratio(cell.posts_of(Dataset::A), cfg.keywords_B, cfg.keywords_A, cfg.match,
                                            imputed_ba);
  const double r_ab = detail::mention_ratio(cell.posts_of(Dataset::B), cfg.keywords_A, cfg.keywords_B, cfg.match,
                                            imputed_ab);
  if (imputed_ba) flags |= kRatioBA;
  if (imputed_ab) flags |= kRatioAB;

  const double dn = normalized_difference(nA, nB);
  const double ds = ratingA - ratingB;
  std::size_t i = 0;
  out[i++] = nA;
  out[i++] = nB;
  out[i++] = dn;
  out[i++] = ratingA;
  out[i++] = ratingB;
  out[i++] = ds;
  out[i++] = cosine_similarity(sentA, sentB);
  out[i++] = static_cast<double>(both.size());
  out[i++] = static_cast<double>(users.size());
  out[i++] = reposts;
  out[i++] = comments;
  out[i++] = likes;
  out[i++] = r_ba;
  out[i++] = r_ab;
  out[i++] = static_cast<double>(cmp.count);
  out[i++] = static_cast<double>(cmp.score_A);
  out[i++] = static_cast<double>(cmp.score_B);
  if (cfg.absolute_diffs) {
    out[i++] = std::fabs(dn);
    out[i++] = std::fabs(ds);
  }
  return flags;
}

inline std::vector<CoarseFeatureDef> coarse_feature_defs(bool absolute_diffs) {
  std::vector<CoarseFeatureDef> defs(kCoarseFeatures.begin(), kCoarseFeatures.end());
  if (absolute_diffs) defs.insert(defs.end(), kAbsoluteFeatures.begin(), kAbsoluteFeatures.end());
  return defs;
}

inline CoarseSeries coarse_features(const WindowedDataset& data, const FeatureConfig& cfg, unsigned threads = 1) {
  CoarseSeries series(coarse_feature_defs(cfg.absolute_diffs), data.window_count(), data.sub_windows_per_window());
  const std::size_t per = data.sub_windows_per_window();
  const std::size_t cells = data.window_count() * per;
  std::vector<std::vector<double>> rows(cells, std::vector<double>(series.feature_count()));
  std::vector<std::uint8_t> flags(cells);
  parallel_for(cells, threads, [&](std::size_t c) {
    flags[c] = coarse_cell(data.cell(c / per, c % per), cfg, rows[c]);
  });
  for (std::size_t c = 0; c < cells; ++c) {
    series.flags(c / per, c % per) = flags[c];
    for (std::size_t f = 0; f < series.feature_count(); ++f) series.value(f, c / per, c % per) = rows[c][f];
  }
  return series;
}

// ---------------------------------------------------------------------------
// Fine-grained descriptors

// Number of positions whose value is strictly greater than the next one.
inline std::size_t hopping_count(std::span<const double> seq) {
  std::size_t hops = 0;
  for (std::size_t i = 0; i + 1 < seq.size(); ++i)
    if (seq[i] > seq[i + 1]) ++hops;
  return hops;
}

enum class RunMode {
  Contiguous,   // longest contiguous non-strict run
  Subsequence,  // longest non-strict (non-contiguous) monotone subsequence
};

namespace detail {

// Longest non-decreasing subsequence, patience style.
inline std::size_t longest_non_decreasing(std::span<const double> seq) {
  std::vector<double> tails;
  for (double v : seq) {
    auto it = std::upper_bound(tails.begin(), tails.end(), v);
    if (it == tails.end()) tails.push_back(v);
    else *it = v;
  }
  return tails.size();
}

}  // namespace detail

struct MonotoneRuns {
  std::size_t increasing = 0;
  std::size_t decreasing = 0;
  friend bool operator==(const MonotoneRuns&, const MonotoneRuns&) = default;
};

inline MonotoneRuns longest_monotone_runs(std::span<const double> seq, RunMode mode = RunMode::Contiguous) {
  if (seq.empty()) throw std::invalid_argument("longest_monotone_runs: empty sequence");
  if (mode == RunMode::Subsequence) {
    std::vector<double> neg(seq.size());
    std::transform(seq.begin(), seq.end(), neg.begin(), [](double v) { return -v; });
    return {detail::longest_non_decreasing(seq), detail::longest_non_decreasing(neg)};
  }
  MonotoneRuns best{1, 1};
  std::size_t inc = 1, dec = 1;
  for (std::size_t i = 1; i < seq.size(); ++i) {
    inc = seq[i] >= seq[i - 1] ? inc + 1 : 1;
    dec = seq[i] <= seq[i - 1] ? dec + 1 : 1;
    best.increasing = std::max(best.increasing, inc);
    best.decreasing = std::max(best.decreasing, dec);
  }
  return best;
}

inline constexpr std::array<const char*, 8> kFineDescriptors{
    "mean", "std", "median", "min", "max", "hops", "inc_run", "dec_run"};

// mean, population std, median, min, max, hopping count, longest increasing
// run, longest decreasing run.
using FineVector = std::array<double, 8>;

inline FineVector describe(std::span<const double> seq, RunMode mode = RunMode::Contiguous) {
  if (seq.empty()) throw std::invalid_argument("describe: empty sequence");
  const auto n = static_cast<double>(seq.size());
  double sum = 0.0;
  for (double v : seq) sum += v;
  const double mean = sum / n;
  double ss = 0.0;
  for (double v : seq) ss += (v - mean) * (v - mean);
  std::vector<double> sorted(seq.begin(), seq.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  const double median = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  const auto runs = longest_monotone_runs(seq, mode);
  return {mean,
          std::sqrt(ss / n),
          median,
          sorted.front(),
          sorted.back(),
          static_cast<double>(hopping_count(seq)),
          static_cast<double>(runs.increasing),
          static_cast<double>(runs.decreasing)};
}

struct FineBasis {
  enum class Kind { Daily, Trailing } kind = Kind::Daily;
  std::size_t weeks = 4;  // Trailing only

  // "daily" or "trailing:L".
  static FineBasis parse(std::string_view s) {
    if (s == "daily") return {};
    if (s.starts_with("trailing:")) {
      const auto digits = s.substr(9);
      std::size_t L = 0;
      for (char c : digits) {
        if (c < '0' || c > '9') throw ConfigError("fine_basis", "bad trailing length '" + std::string(s) + "'");
        L = L * 10 + static_cast<std::size_t>(c - '0');
      }
      if (digits.empty() || L == 0) throw ConfigError("fine_basis", "trailing length must be >= 1");
      return {Kind::Trailing, L};
    }
    throw ConfigError("fine_basis", "expected 'daily' or 'trailing:L', got '" + std::string(s) + "'");
  }

  std::string to_string() const { return kind == Kind::Daily ? "daily" : "trailing:" + std::to_string(weeks); }
};

// Fine descriptors of every coarse feature for window w. The daily basis uses
// the window's own sub-series; the trailing basis uses the window-end values
// of the last `weeks` windows (fewer at the start of the series).
inline std::vector<FineVector> fine_features(const CoarseSeries& coarse, std::size_t window, const FineBasis& basis = {},
                                             RunMode mode = RunMode::Contiguous) {
  std::vector<FineVector> out;
  out.reserve(coarse.feature_count());
  for (std::size_t f = 0; f < coarse.feature_count(); ++f) {
    if (basis.kind == FineBasis::Kind::Daily) {
      out.push_back(describe(coarse.window_series(f, window), mode));
    } else {
      const std::size_t first = window + 1 >= basis.weeks ? window + 1 - basis.weeks : 0;
      std::vector<double> series;
      for (std::size_t w = first; w <= window; ++w) series.push_back(coarse.window_end(f, w));
      out.push_back(describe(series, mode));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Labels

enum class Contest : std::uint8_t { BPositive = 0, APositive = 1 };

inline std::string_view to_string(Contest c) { return c == Contest::APositive ? "A" : "B"; }

inline Contest contest_of(double pc) { return pc > 0.0 ? Contest::APositive : Contest::BPositive; }

struct WindowLabel {
  std::uint64_t d_A = 0;
  std::uint64_t d_B = 0;
  double pc = 0.0;
  Contest cr = Contest::BPositive;
  double ci = 0.0;
  bool degenerate = false;  // no downloads in the window; pc defaulted to 0

  friend bool operator==(const WindowLabel&, const WindowLabel&) = default;
};

using ContestLabels = std::vector<WindowLabel>;

inline WindowLabel label_from_downloads(std::uint64_t d_A, std::uint64_t d_B) {
  WindowLabel l;
  l.d_A = d_A;
  l.d_B = d_B;
  const double a = static_cast<double>(d_A);
  const double b = static_cast<double>(d_B);
  if (d_A + d_B == 0) {
    l.degenerate = true;
  } else {
    l.pc = (a - b) / (a + b);
  }
  l.cr = contest_of(l.pc);
  l.ci = std::fabs(l.pc);
  return l;
}

inline ContestLabels compute_labels(const WindowedDataset& data) {
  ContestLabels labels;
  labels.reserve(data.window_count());
  for (std::size_t w = 0; w < data.window_count(); ++w) {
    std::uint64_t dA = 0, dB = 0;
    for (std::size_t s = 0; s < data.sub_windows_per_window(); ++s) {
      for (const auto& d : data.cell(w, s).downloads_of(App::A)) dA += d.downloads;
      for (const auto& d : data.cell(w, s).downloads_of(App::B)) dB += d.downloads;
    }
    labels.push_back(label_from_downloads(dA, dB));
  }
  return labels;
}

// ---------------------------------------------------------------------------
// Feature matrix

struct FeatureSubset {
  bool cf = true, ff = true, af = true, mf = true;

  bool includes(Granularity g, Source s) const {
    return (g == Granularity::CF ? cf : ff) && (s == Source::AF ? af : mf);
  }

  // Tags from {CF, FF, AF, MF}. A missing axis means both of its groups.
  static FeatureSubset parse(const std::vector<std::string>& tags) {
    if (tags.empty()) throw ConfigError("subset", "feature subset must not be empty");
    bool cf = false, ff = false, af = false, mf = false;
    for (const auto& t : tags) {
      if (t == "CF") cf = true;
      else if (t == "FF") ff = true;
      else if (t == "AF") af = true;
      else if (t == "MF") mf = true;
      else throw ConfigError("subset", "unknown feature tag '" + t + "'");
    }
    if (!cf && !ff) cf = ff = true;
    if (!af && !mf) af = mf = true;
    return {cf, ff, af, mf};
  }

  // "CF,FF,AF" style list; also accepts '+' as separator.
  static FeatureSubset parse(std::string_view list) {
    std::vector<std::string> tags;
    std::string cur;
    for (char c : list) {
      if (c == ',' || c == '+') {
        if (!cur.empty()) tags.push_back(cur);
        cur.clear();
      } else if (c != ' ') {
        cur.push_back(c);
      }
    }
    if (!cur.empty()) tags.push_back(cur);
    return parse(tags);
  }

  std::string name() const {
    std::string g = cf && ff ? "CF+FF" : (cf ? "CF" : "FF");
    std::string s = af && mf ? "AF+MF" : (af ? "AF" : "MF");
    if (cf && ff && !(af && mf)) return s;
    if (af && mf && !(cf && ff)) return g;
    return g + "/" + s;
  }

  friend bool operator==(const FeatureSubset&, const FeatureSubset&) = default;
};

struct Column {
  std::string name;
  Granularity granularity = Granularity::CF;
  Source source = Source::AF;

  std::string header() const {
    return name + "|" + std::string(to_string(granularity)) + "|" + std::string(to_string(source));
  }
  friend bool operator==(const Column&, const Column&) = default;
};

struct FeatureMatrix {
  std::vector<Column> columns;
  std::vector<std::vector<double>> rows;  // rows[w][c]
  ContestLabels labels;                   // row-aligned
  std::vector<Instant> window_starts;     // row-aligned

  std::size_t row_count() const { return rows.size(); }
  std::size_t column_count() const { return columns.size(); }

  std::size_t column_index(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i].name == name) return i;
    throw std::out_of_range("no column " + std::string(name));
  }

  FeatureMatrix select(const FeatureSubset& subset) const {
    FeatureMatrix out;
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (subset.includes(columns[i].granularity, columns[i].source)) {
        keep.push_back(i);
        out.columns.push_back(columns[i]);
      }
    }
    if (keep.empty()) throw ConfigError("subset", "subset " + subset.name() + " selects no columns");
    out.rows.reserve(rows.size());
    for (const auto& r : rows) {
      std::vector<double> row;
      row.reserve(keep.size());
      for (auto i : keep) row.push_back(r[i]);
      out.rows.push_back(std::move(row));
    }
    out.labels = labels;
    out.window_starts = window_starts;
    return out;
  }
};

// Columns are sorted lexicographically by name: a coarse feature's CF column
// is its bare name, its FF columns are "<name>.<descriptor>".
inline FeatureMatrix build_matrix(const CoarseSeries& coarse, const std::vector<std::vector<FineVector>>& fine,
                                  const ContestLabels& labels, const FeatureSubset& subset,
                                  const WindowSpec& spec = {}) {
  if (fine.size() != coarse.window_count() || labels.size() != coarse.window_count())
    throw std::invalid_argument("build_matrix: window counts disagree");

  struct Source_ {
    Column column;
    std::size_t feature;
    int descriptor;  // -1 for CF
  };
  std::vector<Source_> sources;
  for (std::size_t f = 0; f < coarse.feature_count(); ++f) {
    const auto& def = coarse.features()[f];
    if (subset.includes(Granularity::CF, def.source))
      sources.push_back({{def.name, Granularity::CF, def.source}, f, -1});
    if (subset.includes(Granularity::FF, def.source)) {
      for (int d = 0; d < static_cast<int>(kFineDescriptors.size()); ++d)
        sources.push_back({{std::string(def.name) + "." + kFineDescriptors[static_cast<std::size_t>(d)],
                            Granularity::FF, def.source},
                           f,
                           d});
    }
  }
  if (sources.empty()) throw ConfigError("subset", "subset " + subset.name() + " selects no columns");
  std::sort(sources.begin(), sources.end(),
            [](const Source_& a, const Source_& b) { return a.column.name < b.column.name; });

  FeatureMatrix m;
  for (const auto& s : sources) m.columns.push_back(s.column);
  for (std::size_t w = 0; w < coarse.window_count(); ++w) {
    std::vector<double> row;
    row.reserve(sources.size());
    for (const auto& s : sources)
      row.push_back(s.descriptor < 0 ? coarse.window_end(s.feature, w)
                                     : fine[w][s.feature][static_cast<std::size_t>(s.descriptor)]);
    m.rows.push_back(std::move(row));
    m.window_starts.push_back(spec.window_start(w));
  }
  m.labels = labels;
  return m;
}

inline FeatureMatrix build_matrix(const CoarseSeries& coarse, const ContestLabels& labels, const FeatureSubset& subset,
                                  const FineBasis& basis = {}, RunMode mode = RunMode::Contiguous,
                                  const WindowSpec& spec = {}) {
  std::vector<std::vector<FineVector>> fine;
  fine.reserve(coarse.window_count());
  for (std::size_t w = 0; w < coarse.window_count(); ++w) fine.push_back(fine_features(coarse, w, basis, mode));
  return build_matrix(coarse, fine, labels, subset, spec);
}

// ---------------------------------------------------------------------------
// CSV exchange

inline void write_features_csv(std::ostream& out, const FeatureMatrix& m, const Provenance& prov) {
  out << prov.comment() << '\n' << "window";
  for (const auto& c : m.columns) out << ',' << c.header();
  out << '\n';
  for (std::size_t w = 0; w < m.rows.size(); ++w) {
    out << w;
    for (double v : m.rows[w]) out << ',' << format_double(v);
    out << '\n';
  }
}

inline void write_labels_csv(std::ostream& out, const FeatureMatrix& m, const Provenance& prov) {
  out << prov.comment() << '\n' << "window,start,d_A,d_B,pc,cr,ci,degenerate\n";
  for (std::size_t w = 0; w < m.labels.size(); ++w) {
    const auto& l = m.labels[w];
    out << w << ',' << (w < m.window_starts.size() ? format_rfc3339(m.window_starts[w]) : std::string{}) << ','
        << l.d_A << ',' << l.d_B << ',' << format_double(l.pc) << ',' << to_string(l.cr) << ','
        << format_double(l.ci) << ',' << (l.degenerate ? 1 : 0) << '\n';
  }
}

inline Column parse_column_header(const std::string& h, std::size_t line) {
  const auto p1 = h.find('|');
  const auto p2 = p1 == std::string::npos ? std::string::npos : h.find('|', p1 + 1);
  if (p2 == std::string::npos) throw ParseError(line, "column header '" + h + "' lacks group tags");
  Column c;
  c.name = h.substr(0, p1);
  const auto g = h.substr(p1 + 1, p2 - p1 - 1);
  const auto s = h.substr(p2 + 1);
  if (g == "CF") c.granularity = Granularity::CF;
  else if (g == "FF") c.granularity = Granularity::FF;
  else throw ParseError(line, "bad granularity tag in '" + h + "'");
  if (s == "AF") c.source = Source::AF;
  else if (s == "MF") c.source = Source::MF;
  else throw ParseError(line, "bad source tag in '" + h + "'");
  return c;
}

// Reads features.csv and labels.csv back into a matrix.
inline FeatureMatrix read_feature_matrix(std::istream& features, std::istream& labels) {
  FeatureMatrix m;
  std::string line;
  std::size_t lineno = 0;
  if (!next_data_line(features, line, lineno)) throw ParseError(lineno, "features file has no header");
  auto header = split_csv_line(line);
  if (header.empty() || header[0] != "window") throw ParseError(lineno, "features header must start with 'window'");
  for (std::size_t i = 1; i < header.size(); ++i) m.columns.push_back(parse_column_header(header[i], lineno));
  while (next_data_line(features, line, lineno)) {
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw ParseError(lineno, "expected " + std::to_string(header.size()) + " cells");
    std::vector<double> row;
    row.reserve(cells.size() - 1);
    for (std::size_t i = 1; i < cells.size(); ++i) row.push_back(parse_double(cells[i], lineno));
    m.rows.push_back(std::move(row));
  }

  lineno = 0;
  if (!next_data_line(labels, line, lineno)) throw ParseError(lineno, "labels file has no header");
  while (next_data_line(labels, line, lineno)) {
    auto cells = split_csv_line(line);
    if (cells.size() != 8) throw ParseError(lineno, "expected 8 label cells");
    WindowLabel l;
    l.d_A = std::stoull(cells[2]);
    l.d_B = std::stoull(cells[3]);
    l.pc = parse_double(cells[4], lineno);
    if (cells[5] == "A") l.cr = Contest::APositive;
    else if (cells[5] == "B") l.cr = Contest::BPositive;
    else throw ParseError(lineno, "cr must be A or B");
    l.ci = parse_double(cells[6], lineno);
    l.degenerate = cells[7] == "1";
    m.labels.push_back(l);
    auto t = parse_rfc3339(cells[1]);
    if (!t) throw ParseError(lineno, "bad window start '" + cells[1] + "'");
    m.window_starts.push_back(*t);
  }
  if (m.labels.size() != m.rows.size())
    throw ParseError(lineno, "features and labels disagree on window count");
  return m;
}

}  // namespace popcontest
