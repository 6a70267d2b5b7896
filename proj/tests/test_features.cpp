#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "oracles.hpp"
#include "popcontest/features.hpp"
#include "popcontest/splitmix.hpp"

using namespace popcontest;

namespace {

Instant origin() { return *parse_rfc3339("2016-06-20T00:00:00Z"); }

Instant day(int d, int hour = 12) { return origin() + Seconds{d * 86400 + hour * 3600}; }

FeatureConfig config() {
  FeatureConfig c;
  c.lexicon = SentimentLexicon({{"great", 2.0}, {"awful", -2.0}});
  c.comparatives = ComparativeDictionary({"sturdier"}, {"heavier"});
  c.keywords_A = {"mobike"};
  c.keywords_B = {"ofo"};
  return c;
}

std::vector<double> random_seq(SplitMix64& rng, std::size_t n) {
  std::vector<double> s(n);
  for (auto& v : s) v = static_cast<double>(rng.below(4));
  return s;
}

}  // namespace

TEST(NormalizedDifference, Examples) {
  EXPECT_NEAR(normalized_difference(69228, 13928), 0.6650151522439752, 1e-12);
  EXPECT_EQ(normalized_difference(0, 0), 0.0);
  EXPECT_EQ(normalized_difference(5, 0), 1.0);
}

TEST(CoarseCell, EmptyCellUsesDocumentedDefaults) {
  Cell cell;
  std::vector<double> out(kCoarseFeatures.size());
  const auto flags = coarse_cell(cell, config(), out);
  EXPECT_EQ(out[2], 0.0);  // dn_norm
  EXPECT_EQ(out[3], kImputedRating);
  EXPECT_EQ(out[4], kImputedRating);
  EXPECT_EQ(out[5], 0.0);
  EXPECT_DOUBLE_EQ(out[6], 1.0);  // uniform vs uniform
  EXPECT_EQ(out[12], 0.0);
  EXPECT_EQ(out[13], 0.0);
  EXPECT_EQ(flags, kRatingA | kRatingB | kSentimentA | kSentimentB | kRatioBA | kRatioAB | kReviewCounts);
}

TEST(CoarseCell, MentionRatio) {
  Cell cell;
  for (int i = 0; i < 120; ++i) {
    MicroblogRecord m{Dataset::A, day(0), "u", i < 30 ? "mobike vs ofo" : "mobike", 0, 0, 0};
    cell.microblogs[1].push_back(m);
  }
  std::vector<double> out(kCoarseFeatures.size());
  coarse_cell(cell, config(), out);
  EXPECT_DOUBLE_EQ(out[12], 0.25);
}

TEST(CoarseCell, CountsAndComparisons) {
  Cell cell;
  cell.reviews[0] = {{App::A, "s", day(0), 5, "great"}, {App::A, "s", day(0), std::nullopt, "meh"}};
  cell.reviews[1] = {{App::B, "s", day(0), 1, "awful"}};
  cell.microblogs[0] = {{Dataset::Both, day(0), "u1", "mobike sturdier than ofo", 1, 2, 3},
                        {Dataset::Both, day(0), "u1", "ofo heavier than mobike", 4, 5, 6},
                        {Dataset::Both, day(0), "u2", "nothing", 0, 0, 1}};
  std::vector<double> out(kCoarseFeatures.size());
  const auto flags = coarse_cell(cell, config(), out);
  EXPECT_EQ(out[0], 2.0);
  EXPECT_EQ(out[1], 1.0);
  EXPECT_DOUBLE_EQ(out[2], 1.0 / 3.0);
  EXPECT_EQ(out[3], 5.0);
  EXPECT_EQ(out[4], 1.0);
  EXPECT_EQ(out[5], 4.0);
  EXPECT_EQ(out[6], 0.0);  // A: half pos half neutral, B: all neg
  EXPECT_EQ(out[7], 3.0);
  EXPECT_EQ(out[8], 2.0);
  EXPECT_EQ(out[9], 5.0);
  EXPECT_EQ(out[10], 7.0);
  EXPECT_EQ(out[11], 10.0);
  EXPECT_EQ(out[14], 2.0);
  EXPECT_EQ(out[15], 2.0);
  EXPECT_EQ(out[16], 0.0);
  EXPECT_EQ(flags & (kRatingA | kRatingB), 0);
}

TEST(CoarseCell, PaperAbsAddsUnsignedDifferences) {
  auto cfg = config();
  cfg.absolute_diffs = true;
  Cell cell;
  cell.reviews[1] = {{App::B, "s", day(0), 5, ""}};
  std::vector<double> out(kCoarseFeatures.size() + 2);
  coarse_cell(cell, cfg, out);
  EXPECT_EQ(out[2], -1.0);
  EXPECT_EQ(out[17], 1.0);
  EXPECT_EQ(out[18], 2.0);
}

TEST(Hopping, Examples) {
  const std::vector<double> a{1, 1, 1}, b{3, 1, 2, 1}, c{5, 4, 3}, d{}, e{7};
  EXPECT_EQ(hopping_count(a), 0u);
  EXPECT_EQ(hopping_count(b), 2u);
  EXPECT_EQ(hopping_count(c), 2u);
  EXPECT_EQ(hopping_count(d), 0u);
  EXPECT_EQ(hopping_count(e), 0u);
}

TEST(Runs, Examples) {
  const std::vector<double> a{2, 2, 2, 2}, b{1, 2, 3, 2, 1}, c{7};
  EXPECT_EQ(longest_monotone_runs(a), (MonotoneRuns{4, 4}));
  EXPECT_EQ(longest_monotone_runs(b), (MonotoneRuns{3, 3}));
  EXPECT_EQ(longest_monotone_runs(c), (MonotoneRuns{1, 1}));
  EXPECT_THROW(longest_monotone_runs(std::vector<double>{}), std::invalid_argument);
}

TEST(Runs, SubsequenceMode) {
  const std::vector<double> s{1, 5, 2, 3, 0, 4};
  EXPECT_EQ(longest_monotone_runs(s, RunMode::Subsequence), (MonotoneRuns{4, 3}));
  EXPECT_EQ(longest_monotone_runs(s), (MonotoneRuns{2, 2}));
}

TEST(RunsProperty, MatchBruteForce) {
  SplitMix64 rng(17);
  for (int i = 0; i < 300; ++i) {
    const auto s = random_seq(rng, 1 + rng.below(10));
    const auto c = oracle::contiguous_runs(s);
    const auto q = oracle::subsequence_runs(s);
    EXPECT_EQ(longest_monotone_runs(s), (MonotoneRuns{c.first, c.second}));
    EXPECT_EQ(longest_monotone_runs(s, RunMode::Subsequence), (MonotoneRuns{q.first, q.second}));
    EXPECT_EQ(hopping_count(s), oracle::hopping(s));
  }
}

TEST(RunsProperty, InvariantUnderIncreasingTransform) {
  SplitMix64 rng(23);
  for (int i = 0; i < 200; ++i) {
    auto s = random_seq(rng, 1 + rng.below(12));
    std::vector<double> t(s);
    for (auto& v : t) v = 3.0 * v * v * v + 7.0;
    EXPECT_EQ(longest_monotone_runs(s), longest_monotone_runs(t));
    EXPECT_EQ(hopping_count(s), hopping_count(t));
  }
}

TEST(Describe, Examples) {
  const std::vector<double> s{1, 2, 3, 4, 5};
  const auto f = describe(s);
  EXPECT_DOUBLE_EQ(f[0], 3.0);
  EXPECT_NEAR(f[1], 1.4142135623730951, 1e-12);
  EXPECT_DOUBLE_EQ(f[2], 3.0);
  EXPECT_EQ(f[3], 1.0);
  EXPECT_EQ(f[4], 5.0);
  EXPECT_EQ(f[5], 0.0);
  EXPECT_EQ(f[6], 5.0);
  EXPECT_EQ(f[7], 1.0);

  const std::vector<double> c(6, 2.5);
  EXPECT_EQ(describe(c), (FineVector{2.5, 0.0, 2.5, 2.5, 2.5, 0.0, 6.0, 6.0}));
  const std::vector<double> one{4};
  EXPECT_EQ(describe(one), (FineVector{4, 0, 4, 4, 4, 0, 1, 1}));
  const std::vector<double> even{4, 1, 3, 2};
  EXPECT_DOUBLE_EQ(describe(even)[2], 2.5);
}

TEST(FineBasis, Parse) {
  EXPECT_EQ(FineBasis::parse("daily").kind, FineBasis::Kind::Daily);
  const auto t = FineBasis::parse("trailing:4");
  EXPECT_EQ(t.kind, FineBasis::Kind::Trailing);
  EXPECT_EQ(t.weeks, 4u);
  EXPECT_EQ(t.to_string(), "trailing:4");
  EXPECT_THROW(FineBasis::parse("trailing:0"), ConfigError);
  EXPECT_THROW(FineBasis::parse("trailing:x"), ConfigError);
  EXPECT_THROW(FineBasis::parse("weekly"), ConfigError);
}

TEST(FineFeatures, DailyAndTrailingBases) {
  CoarseSeries cs({{"x", Source::AF}}, 3, 7);
  for (std::size_t w = 0; w < 3; ++w)
    for (std::size_t s = 0; s < 7; ++s) cs.value(0, w, s) = static_cast<double>(10 * w + s);
  const auto daily = fine_features(cs, 1);
  EXPECT_DOUBLE_EQ(daily[0][0], 13.0);
  EXPECT_EQ(daily[0][6], 7.0);
  const auto trailing = fine_features(cs, 2, FineBasis::parse("trailing:2"));
  EXPECT_DOUBLE_EQ(trailing[0][0], 21.0);  // mean of 16 and 26
  const auto start = fine_features(cs, 0, FineBasis::parse("trailing:5"));
  EXPECT_EQ(start[0][6], 1.0);  // single value at the start of the series
}

TEST(Labels, Examples) {
  EXPECT_NEAR(label_from_downloads(35591757, 30423077).pc, 0.07829573577356871, 1e-12);
  const auto eq = label_from_downloads(100, 100);
  EXPECT_EQ(eq.pc, 0.0);
  EXPECT_EQ(eq.ci, 0.0);
  EXPECT_EQ(eq.cr, Contest::BPositive);
  const auto b = label_from_downloads(0, 100);
  EXPECT_EQ(b.pc, -1.0);
  EXPECT_EQ(b.cr, Contest::BPositive);
  EXPECT_EQ(b.ci, 1.0);
  const auto z = label_from_downloads(0, 0);
  EXPECT_TRUE(z.degenerate);
  EXPECT_EQ(z.pc, 0.0);
  EXPECT_EQ(z.cr, Contest::BPositive);
}

TEST(Labels, SumOverWindow) {
  WindowSpec spec;
  spec.origin = origin();
  std::vector<DownloadRecord> d{{App::A, day(0), 10}, {App::A, day(3), 20}, {App::B, day(6), 10},
                                {App::B, day(7), 5}};
  const auto labels = compute_labels(bucket({}, {}, d, spec));
  ASSERT_EQ(labels.size(), 2u);
  EXPECT_EQ(labels[0].d_A, 30u);
  EXPECT_DOUBLE_EQ(labels[0].pc, 0.5);
  EXPECT_EQ(labels[1].pc, -1.0);
}

TEST(Subset, ParseAndName) {
  EXPECT_EQ(FeatureSubset::parse("CF"), (FeatureSubset{true, false, true, true}));
  EXPECT_EQ(FeatureSubset::parse("CF+FF"), (FeatureSubset{}));
  EXPECT_EQ(FeatureSubset::parse("MF"), (FeatureSubset{true, true, false, true}));
  EXPECT_EQ(FeatureSubset::parse("CF,AF"), (FeatureSubset{true, false, true, false}));
  EXPECT_EQ(FeatureSubset::parse("CF").name(), "CF");
  EXPECT_EQ(FeatureSubset::parse("AF").name(), "AF");
  EXPECT_EQ(FeatureSubset::parse("AF+MF").name(), "CF+FF/AF+MF");
  EXPECT_EQ(FeatureSubset::parse("FF,MF").name(), "FF/MF");
  EXPECT_THROW(FeatureSubset::parse(std::vector<std::string>{}), ConfigError);
  EXPECT_THROW(FeatureSubset::parse("XF"), ConfigError);
}

namespace {

CoarseSeries filled_series(std::size_t windows, std::uint64_t seed) {
  CoarseSeries cs(coarse_feature_defs(false), windows, 7);
  SplitMix64 rng(seed);
  for (std::size_t f = 0; f < cs.feature_count(); ++f)
    for (std::size_t w = 0; w < windows; ++w)
      for (std::size_t s = 0; s < 7; ++s) cs.value(f, w, s) = rng.uniform();
  return cs;
}

ContestLabels some_labels(std::size_t n) {
  ContestLabels l;
  for (std::size_t i = 0; i < n; ++i) l.push_back(label_from_downloads(i, 3));
  return l;
}

}  // namespace

TEST(BuildMatrix, ColumnCounts) {
  const auto cs = filled_series(3, 1);
  const auto labels = some_labels(3);
  EXPECT_EQ(build_matrix(cs, labels, FeatureSubset::parse("CF")).column_count(), 17u);
  EXPECT_EQ(build_matrix(cs, labels, FeatureSubset::parse("FF")).column_count(), 17u * 8);
  EXPECT_EQ(build_matrix(cs, labels, FeatureSubset::parse("CF,FF")).column_count(), 17u * 9);
  EXPECT_EQ(build_matrix(cs, labels, FeatureSubset::parse("AF")).column_count(), 7u * 9);
  EXPECT_EQ(build_matrix(cs, labels, FeatureSubset::parse("MF")).column_count(), 10u * 9);
}

TEST(BuildMatrix, SortedColumnsAndWindowEndValues) {
  const auto cs = filled_series(3, 2);
  const auto m = build_matrix(cs, some_labels(3), FeatureSubset{});
  for (std::size_t i = 1; i < m.columns.size(); ++i) EXPECT_LT(m.columns[i - 1].name, m.columns[i].name);
  const auto c = m.column_index("ds");
  EXPECT_EQ(m.rows[1][c], cs.value("ds", 1, 6));
  EXPECT_EQ(m.columns[c].granularity, Granularity::CF);
  EXPECT_EQ(m.columns[m.column_index("ds.max")].granularity, Granularity::FF);
  EXPECT_EQ(m.columns[m.column_index("r_ba.max")].source, Source::MF);
}

TEST(BuildMatrix, SelectEqualsDirectBuild) {
  const auto cs = filled_series(4, 3);
  const auto labels = some_labels(4);
  const auto full = build_matrix(cs, labels, FeatureSubset{});
  for (const char* s : {"CF", "FF", "AF", "MF", "CF,AF", "FF,MF", "CF,FF,AF,MF"}) {
    const auto sub = FeatureSubset::parse(s);
    const auto a = full.select(sub);
    const auto b = build_matrix(cs, labels, sub);
    EXPECT_EQ(a.columns, b.columns) << s;
    EXPECT_EQ(a.rows, b.rows) << s;
  }
}

TEST(FeatureCsv, RoundTrip) {
  const auto cs = filled_series(5, 4);
  WindowSpec spec;
  spec.origin = origin();
  auto m = build_matrix(cs, some_labels(5), FeatureSubset{}, FineBasis{}, RunMode::Contiguous, spec);
  m.labels[2] = label_from_downloads(0, 0);
  std::stringstream f, l;
  write_features_csv(f, m, {"abc", 7});
  write_labels_csv(l, m, {"abc", 7});
  EXPECT_EQ(f.str().substr(0, 29), "# config_hash=abc seed=7\nwind");
  const auto back = read_feature_matrix(f, l);
  EXPECT_EQ(back.columns, m.columns);
  EXPECT_EQ(back.rows, m.rows);
  EXPECT_EQ(back.labels, m.labels);
  EXPECT_EQ(back.window_starts, m.window_starts);
}

TEST(FeatureCsv, RejectsBadHeader) {
  std::istringstream f("window,ds\n0,1\n"), l("");
  EXPECT_THROW(read_feature_matrix(f, l), ParseError);
}
