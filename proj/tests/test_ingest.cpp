#include <gtest/gtest.h>

#include <sstream>

#include "popcontest/ingest.hpp"
#include "popcontest/splitmix.hpp"

using namespace popcontest;

namespace {

Instant ts(const char* s) { return *parse_rfc3339(s); }

}  // namespace

TEST(Rfc3339, ParsesZuluAndOffsets) {
  EXPECT_EQ(format_rfc3339(ts("2016-06-20T00:00:00Z")), "2016-06-20T00:00:00Z");
  EXPECT_EQ(ts("2016-06-20T08:00:00+08:00"), ts("2016-06-20T00:00:00Z"));
  EXPECT_EQ(ts("2016-06-20T00:00:00.999Z"), ts("2016-06-20T00:00:00Z"));
  EXPECT_FALSE(parse_rfc3339("2016-06-20"));
  EXPECT_FALSE(parse_rfc3339("2016-02-30T00:00:00Z"));
  EXPECT_FALSE(parse_rfc3339("2016-06-20T00:00:00"));
}

TEST(ParseReviews, MapsFields) {
  std::istringstream in(R"({"app":"A","store":"s1","ts":"2016-06-20T00:00:00Z","rating":5,"text":"great"})");
  const auto r = parse_reviews(in);
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].app, App::A);
  EXPECT_EQ(r.records[0].store, "s1");
  EXPECT_EQ(r.records[0].rating, 5);
  EXPECT_EQ(r.records[0].text, "great");
  EXPECT_EQ(r.records[0].timestamp, ts("2016-06-20T00:00:00Z"));
}

TEST(ParseReviews, EmptyStream) {
  std::istringstream in("");
  EXPECT_TRUE(parse_reviews(in).records.empty());
}

TEST(ParseReviews, RatingOutOfRangeNamesLine) {
  const std::string text =
      "{\"app\":\"A\",\"ts\":\"2016-06-20T00:00:00Z\",\"rating\":4}\n"
      "{\"app\":\"B\",\"ts\":\"2016-06-20T00:00:00Z\",\"rating\":7}\n";
  {
    std::istringstream in(text);
    try {
      parse_reviews(in, {.strict = true});
      FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
      EXPECT_EQ(e.line(), 2u);
    }
  }
  std::istringstream in(text);
  const auto lenient = parse_reviews(in);
  EXPECT_EQ(lenient.records.size(), 1u);
  ASSERT_EQ(lenient.rejected.size(), 1u);
  EXPECT_EQ(lenient.rejected[0].line, 2u);
}

TEST(ParseReviews, UnknownAppAndMissingRating) {
  std::istringstream bad(R"({"app":"C","ts":"2016-06-20T00:00:00Z"})");
  EXPECT_THROW(parse_reviews(bad, {.strict = true}), ValidationError);
  std::istringstream ok(R"({"app":"B","ts":"2016-06-20T00:00:00Z","rating":null})");
  const auto r = parse_reviews(ok);
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_FALSE(r.records[0].rating.has_value());
}

TEST(ParseMicroblogs, CountsAndNegatives) {
  std::istringstream in(
      R"({"dataset":"Both","ts":"2016-06-20T01:00:00Z","user_id":"u1","text":"x","reposts":3,"comments":0,"likes":1})"
      "\n"
      R"({"dataset":"A","ts":"2016-06-20T01:00:00Z","user_id":"u2","text":"y"})");
  const auto r = parse_microblogs(in);
  ASSERT_EQ(r.records.size(), 2u);
  EXPECT_EQ(r.records[0].reposts, 3u);
  EXPECT_EQ(r.records[0].dataset, Dataset::Both);
  EXPECT_EQ(r.records[1].dataset, Dataset::A);

  std::istringstream neg(R"({"dataset":"Both","ts":"2016-06-20T01:00:00Z","reposts":-1})");
  EXPECT_THROW(parse_microblogs(neg, {.strict = true}), ValidationError);
}

TEST(ParseMicroblogs, CardinalityMatchesLineCount) {
  std::ostringstream os;
  for (int i = 0; i < 25; ++i)
    os << R"({"dataset":"B","ts":"2016-06-21T00:00:00Z","user_id":"u","text":"t","likes":)" << i << "}\n";
  std::istringstream in(os.str());
  EXPECT_EQ(parse_microblogs(in).records.size(), 25u);
}

TEST(ParseDownloads, MalformedLineReportsLineNumber) {
  std::istringstream in(
      "{\"app\":\"A\",\"ts\":\"2016-06-20T00:00:00Z\",\"downloads\":10}\n"
      "\n"
      "{\"app\":\"B\",\"ts\":\"2016-06-20T00:00:00Z\",\"downloads\":\n");
  try {
    parse_downloads(in);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::istringstream empty("");
  EXPECT_TRUE(parse_downloads(empty).records.empty());
}

TEST(Bucket, HalfOpenBoundaries) {
  WindowSpec spec;
  spec.origin = ts("2016-06-20T00:00:00Z");
  std::vector<DownloadRecord> d{{App::A, ts("2016-06-20T00:00:00Z"), 1},
                                {App::A, ts("2016-06-27T00:00:00Z"), 2},
                                {App::B, ts("2016-06-26T23:59:59Z"), 3}};
  const auto w = bucket({}, {}, d, spec);
  EXPECT_EQ(w.window_count(), 2u);
  ASSERT_EQ(w.cell(0, 0).downloads_of(App::A).size(), 1u);
  EXPECT_EQ(w.cell(1, 0).downloads_of(App::A).front().downloads, 2u);
  EXPECT_EQ(w.cell(0, 6).downloads_of(App::B).front().downloads, 3u);
}

TEST(Bucket, ThirtyEightWeeks) {
  WindowSpec spec;
  spec.origin = ts("2016-06-20T00:00:00Z");
  std::vector<DownloadRecord> d;
  for (int w = 0; w < 38; ++w) d.push_back({App::A, spec.window_start(static_cast<std::size_t>(w)) + Seconds{3600}, 5});
  EXPECT_EQ(bucket({}, {}, d, spec).window_count(), 38u);
}

TEST(Bucket, OutOfSpanIsReported) {
  WindowSpec spec;
  spec.origin = ts("2016-06-20T00:00:00Z");
  spec.window_count = 1;
  std::vector<ReviewRecord> r{{App::A, "s", ts("2016-06-19T23:59:59Z"), 3, ""},
                              {App::A, "s", ts("2016-06-21T00:00:00Z"), 3, ""},
                              {App::B, "s", ts("2016-06-28T00:00:00Z"), 3, ""}};
  const auto w = bucket(r, {}, {}, spec);
  EXPECT_EQ(w.skipped().reviews, 2u);
  EXPECT_EQ(w.record_count(), 1u);
}

TEST(Bucket, EmptyInputHasNoWindows) {
  EXPECT_EQ(bucket({}, {}, {}, WindowSpec{}).window_count(), 0u);
}

TEST(Bucket, RejectsNonDividingSubWindow) {
  WindowSpec spec;
  spec.sub_window_length = Seconds{5 * 3600};
  spec.window_length = Seconds{7 * 24 * 3600};
  EXPECT_THROW(bucket({}, {}, {}, spec), ConfigError);
}

// Every record lands in exactly one cell or in the skip report.
TEST(BucketProperty, PartitionHoldsForRandomRecords) {
  SplitMix64 rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    WindowSpec spec;
    spec.origin = ts("2016-06-20T00:00:00Z");
    spec.window_count = trial % 3 == 0 ? 0 : 1 + rng.below(6);
    std::vector<ReviewRecord> r;
    std::vector<MicroblogRecord> m;
    std::vector<DownloadRecord> d;
    const auto n = rng.below(60);
    for (std::uint64_t i = 0; i < n; ++i) {
      const Instant t = spec.origin + Seconds{static_cast<std::int64_t>(rng.below(60 * 86400)) - 5 * 86400};
      switch (rng.below(3)) {
        case 0: r.push_back({App::A, "s", t, std::nullopt, ""}); break;
        case 1: m.push_back({Dataset::Both, t, "u", "", 0, 0, 0}); break;
        default: d.push_back({App::B, t, 1}); break;
      }
    }
    const auto w = bucket(r, m, d, spec);
    EXPECT_EQ(w.record_count() + w.skipped().total(), n);
  }
}

TEST(RoundTrip, SerializeThenParseIsStable) {
  SplitMix64 rng(7);
  std::vector<ReviewRecord> reviews;
  std::vector<MicroblogRecord> posts;
  std::vector<DownloadRecord> downloads;
  for (int i = 0; i < 200; ++i) {
    const Instant t = ts("2016-06-20T00:00:00Z") + Seconds{static_cast<std::int64_t>(rng.below(400 * 86400))};
    std::optional<int> rating;
    if (rng.bernoulli(0.8)) rating = static_cast<int>(1 + rng.below(5));
    reviews.push_back({rng.bernoulli(0.5) ? App::A : App::B, "s" + std::to_string(rng.below(11)), t, rating,
                       "text \"quoted\" \xE6\x91\xA9\xE6\x8B\x9C " + std::to_string(i)});
    posts.push_back({static_cast<Dataset>(rng.below(3)), t, "u" + std::to_string(i), "post\n" + std::to_string(i),
                     rng.below(100), rng.below(100), rng.below(100)});
    downloads.push_back({App::B, t, rng.next() >> 20});
  }
  std::ostringstream ro, mo, dout;
  write_jsonl(ro, reviews);
  write_jsonl(mo, posts);
  write_jsonl(dout, downloads);
  std::istringstream ri(ro.str()), mi(mo.str()), di(dout.str());
  EXPECT_EQ(parse_reviews(ri, {.strict = true}).records, reviews);
  EXPECT_EQ(parse_microblogs(mi, {.strict = true}).records, posts);
  EXPECT_EQ(parse_downloads(di, {.strict = true}).records, downloads);
}
