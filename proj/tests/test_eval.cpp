#include <gtest/gtest.h>

#include "oracles.hpp"
#include "popcontest/eval.hpp"

using namespace popcontest;

namespace {

constexpr Contest A = Contest::APositive;
constexpr Contest B = Contest::BPositive;

// T windows, one informative column (the next window's sign) plus noise.
FeatureMatrix toy_matrix(std::size_t T, std::uint64_t seed) {
  SplitMix64 rng(seed);
  FeatureMatrix m;
  m.columns = {{"x", Granularity::CF, Source::AF}, {"y", Granularity::FF, Source::MF}};
  for (std::size_t w = 0; w < T; ++w) {
    const auto dA = 100 + rng.below(100);
    const auto dB = 100 + rng.below(100);
    m.labels.push_back(label_from_downloads(dA, dB));
    m.rows.push_back({m.labels.back().pc, rng.uniform()});
    m.window_starts.push_back(Instant{} + Seconds{static_cast<std::int64_t>(w) * 7 * 86400});
  }
  return m;
}

ForestParams small_forest() {
  ForestParams p;
  p.n_trees = 10;
  p.seed = 5;
  return p;
}

}  // namespace

TEST(ClassificationMetrics, Examples) {
  const std::vector<Contest> t{A, A, B, B}, p{A, B, B, B};
  const auto m = classification_metrics(p, t);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.75);
  EXPECT_DOUBLE_EQ(m.precision, 1.0);
  EXPECT_DOUBLE_EQ(m.recall, 0.5);
  EXPECT_DOUBLE_EQ(m.f_measure, 2.0 / 3.0);

  const auto all = classification_metrics(t, t);
  EXPECT_EQ(all.accuracy, 1.0);
  EXPECT_EQ(all.f_measure, 1.0);

  const std::vector<Contest> bs{B, B, B};
  const auto none = classification_metrics(bs, bs);
  EXPECT_EQ(none.accuracy, 1.0);
  EXPECT_EQ(none.precision, 0.0);
  EXPECT_EQ(none.recall, 0.0);
  EXPECT_EQ(none.f_measure, 0.0);
}

TEST(ClassificationMetrics, MatchesOracle) {
  SplitMix64 rng(31);
  for (int i = 0; i < 300; ++i) {
    const auto n = rng.below(20);
    std::vector<Contest> p, t;
    std::vector<bool> pb, tb;
    for (std::uint64_t k = 0; k < n; ++k) {
      pb.push_back(rng.bernoulli(0.5));
      tb.push_back(rng.bernoulli(0.5));
      p.push_back(pb.back() ? A : B);
      t.push_back(tb.back() ? A : B);
    }
    const auto m = classification_metrics(p, t);
    const auto o = oracle::classification(pb, tb);
    EXPECT_NEAR(m.accuracy, o.accuracy, 1e-12);
    EXPECT_NEAR(m.precision, o.precision, 1e-12);
    EXPECT_NEAR(m.recall, o.recall, 1e-12);
    EXPECT_NEAR(m.f_measure, o.f, 1e-12);
  }
}

TEST(Rmse, Examples) {
  const std::vector<double> a{0.1, 0.2}, z{0, 0}, t{0.3, 0.4}, p1{0.2}, t1{0.5};
  EXPECT_EQ(rmse(a, a), 0.0);
  EXPECT_NEAR(rmse(z, t), 0.3535533905932738, 1e-12);
  EXPECT_NEAR(rmse(p1, t1), 0.3, 1e-12);
  EXPECT_THROW(rmse(a, p1), std::invalid_argument);
}

TEST(Scheme, FoldCounts) {
  EvalScheme s;
  EXPECT_EQ(s.fold_count(38), 28u);
  EXPECT_EQ(s.fold_count(11), 1u);
  EXPECT_THROW(s.validate(10), ConfigError);
  s.strict_forecast = true;
  EXPECT_EQ(s.fold_count(38), 27u);
  EXPECT_THROW(s.validate(11), ConfigError);
}

TEST(RollingEvaluate, FoldWindowsNeverLeak) {
  const auto m = toy_matrix(20, 1);
  for (bool strict : {false, true}) {
    EvalScheme s{.train_weeks = 5, .strict_forecast = strict};
    const auto r = rolling_evaluate(m, s, small_forest());
    EXPECT_EQ(r.folds.size(), s.fold_count(20));
    for (const auto& f : r.folds) {
      EXPECT_TRUE(f.error.empty());
      EXPECT_EQ(f.train_last - f.train_first + 1, 5u);
      EXPECT_EQ(f.test_window, f.train_last + 1);
      EXPECT_EQ(f.cr_true, m.labels[f.test_window].cr);
      EXPECT_EQ(f.last_ci, m.labels[f.train_last].ci);
    }
    EXPECT_EQ(r.folds.back().test_window, 19u);
  }
}

TEST(RollingEvaluate, MinimumCaseHasOneFold) {
  const auto m = toy_matrix(11, 2);
  EXPECT_EQ(rolling_evaluate(m, {}, small_forest()).folds.size(), 1u);
  EXPECT_THROW(rolling_evaluate(toy_matrix(10, 2), {}, small_forest()), ConfigError);
}

TEST(RollingEvaluate, ThreadCountDoesNotMatter) {
  const auto m = toy_matrix(25, 3);
  const auto a = rolling_evaluate(m, {}, small_forest(), {ModelKind::RandomForest, 1});
  const auto b = rolling_evaluate(m, {}, small_forest(), {ModelKind::RandomForest, 3});
  EXPECT_EQ(to_json(a, {"h", 5}).dump(), to_json(b, {"h", 5}).dump());
}

TEST(RollingEvaluate, BaselineIsLastWeek) {
  const auto m = toy_matrix(15, 4);
  const auto r = rolling_evaluate(m, {}, small_forest(), {ModelKind::DecisionTree});
  std::vector<double> last, truth;
  for (std::size_t t = 10; t < 15; ++t) {
    last.push_back(m.labels[t - 1].ci);
    truth.push_back(m.labels[t].ci);
  }
  EXPECT_DOUBLE_EQ(r.baseline.rmse, rmse(last, truth));
  EXPECT_EQ(r.baseline.folds, 5u);
}

TEST(Ablation, RowPerSubsetPlusBaseline) {
  const auto m = toy_matrix(14, 5);
  const std::vector<FeatureSubset> subsets{FeatureSubset::parse("CF"), FeatureSubset::parse("FF"), FeatureSubset{}};
  const auto rows = ablation_run(m, subsets, {}, small_forest());
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].name, "CF");
  EXPECT_EQ(rows[2].name, "CF+FF/AF+MF");
  EXPECT_EQ(ablation_run(m, subsets, {}, small_forest(), {}, {"x", "y", "CF+FF"})[2].name, "CF+FF");
  EXPECT_EQ(rows[3].name, "Last");
  const auto full = rolling_evaluate(m, {}, small_forest());
  EXPECT_EQ(rows[2].metrics.rmse, full.metrics.rmse);
}

TEST(EvalJson, FoldsRoundTrip) {
  const auto r = rolling_evaluate(toy_matrix(13, 6), {}, small_forest());
  const auto j = nlohmann::json::parse(to_json(r, {"h", 1}).dump());
  const auto folds = folds_from_json(j);
  ASSERT_EQ(folds.size(), r.folds.size());
  for (std::size_t i = 0; i < folds.size(); ++i) {
    EXPECT_EQ(folds[i].test_window, r.folds[i].test_window);
    EXPECT_EQ(folds[i].cr_pred, r.folds[i].cr_pred);
    EXPECT_EQ(folds[i].ci_pred, r.folds[i].ci_pred);
  }
}
