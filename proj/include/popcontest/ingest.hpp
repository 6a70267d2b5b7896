#pragma once

// Record types for the three input streams, JSON Lines parsing/serialization,
// and bucketing of records into fixed-length time windows.

#include <algorithm>
#include <array>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "timeutil.hpp"

namespace popcontest {

enum class App : std::uint8_t { A = 0, B = 1 };
enum class Dataset : std::uint8_t { Both = 0, A = 1, B = 2 };

constexpr App other(App a) noexcept { return a == App::A ? App::B : App::A; }

inline std::string_view to_string(App a) { return a == App::A ? "A" : "B"; }

inline std::string_view to_string(Dataset d) {
  switch (d) {
    case Dataset::Both: return "Both";
    case Dataset::A: return "A";
    case Dataset::B: return "B";
  }
  return "?";
}

struct ReviewRecord {
  App app = App::A;
  std::string store;
  Instant timestamp{};
  std::optional<int> rating;
  std::string text;

  friend bool operator==(const ReviewRecord&, const ReviewRecord&) = default;
};

struct MicroblogRecord {
  Dataset dataset = Dataset::Both;
  Instant timestamp{};
  std::string user_id;
  std::string text;
  std::uint64_t reposts = 0;
  std::uint64_t comments = 0;
  std::uint64_t likes = 0;

  friend bool operator==(const MicroblogRecord&, const MicroblogRecord&) = default;
};

struct DownloadRecord {
  App app = App::A;
  Instant timestamp{};
  std::uint64_t downloads = 0;

  friend bool operator==(const DownloadRecord&, const DownloadRecord&) = default;
};

struct ParseOptions {
  // When set, the first validation error aborts parsing. Otherwise offending
  // records are dropped and listed in ParseResult::rejected.
  bool strict = false;
};

struct RejectedLine {
  std::size_t line = 0;
  std::string reason;
};

template <typename Record>
struct ParseResult {
  std::vector<Record> records;
  std::vector<RejectedLine> rejected;
};

namespace detail {

using nlohmann::json;

inline const json& require(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError(line, std::string("missing field '") + key + "'");
  return *it;
}

inline std::string require_string(const json& obj, const char* key, std::size_t line) {
  const json& v = require(obj, key, line);
  if (!v.is_string()) throw ValidationError(line, std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

inline std::string optional_string(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_string()) throw ValidationError(line, std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

inline std::uint64_t count_field(const json& obj, const char* key, std::size_t line, bool required) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    if (required) throw ValidationError(line, std::string("missing field '") + key + "'");
    return 0;
  }
  if (!it->is_number_integer())
    throw ValidationError(line, std::string("field '") + key + "' must be an integer");
  if (it->is_number_unsigned()) return it->get<std::uint64_t>();
  const auto v = it->get<std::int64_t>();
  if (v < 0) throw ValidationError(line, std::string("field '") + key + "' must be >= 0, got " + std::to_string(v));
  return static_cast<std::uint64_t>(v);
}

inline Instant timestamp_field(const json& obj, std::size_t line) {
  const std::string raw = require_string(obj, "ts", line);
  auto t = parse_rfc3339(raw);
  if (!t) throw ValidationError(line, "timestamp '" + raw + "' is not RFC 3339");
  return *t;
}

inline App app_field(const json& obj, std::size_t line) {
  const std::string raw = require_string(obj, "app", line);
  if (raw == "A") return App::A;
  if (raw == "B") return App::B;
  throw ValidationError(line, "unknown app tag '" + raw + "'");
}

inline Dataset dataset_field(const json& obj, std::size_t line) {
  const std::string raw = require_string(obj, "dataset", line);
  if (raw == "Both") return Dataset::Both;
  if (raw == "A") return Dataset::A;
  if (raw == "B") return Dataset::B;
  throw ValidationError(line, "unknown dataset '" + raw + "'");
}

inline bool blank(std::string_view s) {
  for (char c : s)
    if (c != ' ' && c != '\t' && c != '\r') return false;
  return true;
}

template <typename Record, typename Decode>
ParseResult<Record> parse_lines(std::istream& in, const ParseOptions& opts, Decode decode) {
  ParseResult<Record> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(lineno, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(lineno, "expected a JSON object");
    try {
      out.records.push_back(decode(obj, lineno));
    } catch (const ValidationError& e) {
      if (opts.strict) throw;
      out.rejected.push_back({lineno, e.what()});
    }
  }
  return out;
}

}  // namespace detail

inline ReviewRecord decode_review(const nlohmann::json& obj, std::size_t line) {
  ReviewRecord r;
  r.app = detail::app_field(obj, line);
  r.store = detail::optional_string(obj, "store", line);
  r.timestamp = detail::timestamp_field(obj, line);
  if (auto it = obj.find("rating"); it != obj.end() && !it->is_null()) {
    if (!it->is_number_integer()) throw ValidationError(line, "field 'rating' must be an integer");
    const auto v = it->get<std::int64_t>();
    if (v < 1 || v > 5) throw ValidationError(line, "rating " + std::to_string(v) + " outside [1, 5]");
    r.rating = static_cast<int>(v);
  }
  r.text = detail::optional_string(obj, "text", line);
  return r;
}

inline MicroblogRecord decode_microblog(const nlohmann::json& obj, std::size_t line) {
  MicroblogRecord m;
  m.dataset = detail::dataset_field(obj, line);
  m.timestamp = detail::timestamp_field(obj, line);
  m.user_id = detail::optional_string(obj, "user_id", line);
  m.text = detail::optional_string(obj, "text", line);
  m.reposts = detail::count_field(obj, "reposts", line, false);
  m.comments = detail::count_field(obj, "comments", line, false);
  m.likes = detail::count_field(obj, "likes", line, false);
  return m;
}

inline DownloadRecord decode_download(const nlohmann::json& obj, std::size_t line) {
  DownloadRecord d;
  d.app = detail::app_field(obj, line);
  d.timestamp = detail::timestamp_field(obj, line);
  d.downloads = detail::count_field(obj, "downloads", line, true);
  return d;
}

inline ParseResult<ReviewRecord> parse_reviews(std::istream& in, const ParseOptions& opts = {}) {
  return detail::parse_lines<ReviewRecord>(in, opts, decode_review);
}

inline ParseResult<MicroblogRecord> parse_microblogs(std::istream& in, const ParseOptions& opts = {}) {
  return detail::parse_lines<MicroblogRecord>(in, opts, decode_microblog);
}

inline ParseResult<DownloadRecord> parse_downloads(std::istream& in, const ParseOptions& opts = {}) {
  return detail::parse_lines<DownloadRecord>(in, opts, decode_download);
}

inline nlohmann::ordered_json to_json(const ReviewRecord& r) {
  nlohmann::ordered_json j;
  j["app"] = to_string(r.app);
  j["store"] = r.store;
  j["ts"] = format_rfc3339(r.timestamp);
  if (r.rating) j["rating"] = *r.rating;
  j["text"] = r.text;
  return j;
}

inline nlohmann::ordered_json to_json(const MicroblogRecord& m) {
  nlohmann::ordered_json j;
  j["dataset"] = to_string(m.dataset);
  j["ts"] = format_rfc3339(m.timestamp);
  j["user_id"] = m.user_id;
  j["text"] = m.text;
  j["reposts"] = m.reposts;
  j["comments"] = m.comments;
  j["likes"] = m.likes;
  return j;
}

inline nlohmann::ordered_json to_json(const DownloadRecord& d) {
  nlohmann::ordered_json j;
  j["app"] = to_string(d.app);
  j["ts"] = format_rfc3339(d.timestamp);
  j["downloads"] = d.downloads;
  return j;
}

// One record per line, newline-terminated.
template <typename Record>
void write_jsonl(std::ostream& out, const std::vector<Record>& records) {
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

// ---------------------------------------------------------------------------
// Windowing

struct WindowSpec {
  Instant origin{};
  Seconds window_length{7 * 24 * 3600};
  Seconds sub_window_length{24 * 3600};
  // 0 derives the window count from the data.
  std::size_t window_count = 0;

  void validate() const {
    if (window_length.count() <= 0) throw ConfigError("window.window_length", "must be positive");
    if (sub_window_length.count() <= 0) throw ConfigError("window.sub_window_length", "must be positive");
    if (window_length.count() % sub_window_length.count() != 0)
      throw ConfigError("window.sub_window_length", "must divide the window length");
  }

  std::size_t sub_windows_per_window() const {
    return static_cast<std::size_t>(window_length.count() / sub_window_length.count());
  }

  Instant window_start(std::size_t w) const {
    return origin + window_length * static_cast<std::int64_t>(w);
  }
};

struct Cell {
  std::array<std::vector<ReviewRecord>, 2> reviews;       // by App
  std::array<std::vector<MicroblogRecord>, 3> microblogs;  // by Dataset
  std::array<std::vector<DownloadRecord>, 2> downloads;    // by App

  const std::vector<ReviewRecord>& reviews_of(App a) const { return reviews[static_cast<int>(a)]; }
  const std::vector<MicroblogRecord>& posts_of(Dataset d) const { return microblogs[static_cast<int>(d)]; }
  const std::vector<DownloadRecord>& downloads_of(App a) const { return downloads[static_cast<int>(a)]; }

  std::size_t size() const {
    return reviews[0].size() + reviews[1].size() + microblogs[0].size() + microblogs[1].size() +
           microblogs[2].size() + downloads[0].size() + downloads[1].size();
  }
};

struct SkipReport {
  std::size_t reviews = 0;
  std::size_t microblogs = 0;
  std::size_t downloads = 0;

  std::size_t total() const { return reviews + microblogs + downloads; }
};

class WindowedDataset {
 public:
  WindowedDataset(WindowSpec spec, std::size_t window_count)
      : spec_(spec),
        window_count_(window_count),
        per_window_(spec.sub_windows_per_window()),
        cells_(window_count * per_window_) {}

  const WindowSpec& spec() const { return spec_; }
  std::size_t window_count() const { return window_count_; }
  std::size_t sub_windows_per_window() const { return per_window_; }

  const Cell& cell(std::size_t window, std::size_t sub) const { return cells_.at(window * per_window_ + sub); }
  Cell& cell(std::size_t window, std::size_t sub) { return cells_.at(window * per_window_ + sub); }

  const SkipReport& skipped() const { return skipped_; }
  SkipReport& skipped() { return skipped_; }

  std::size_t record_count() const {
    std::size_t n = 0;
    for (const auto& c : cells_) n += c.size();
    return n;
  }

 private:
  WindowSpec spec_;
  std::size_t window_count_;
  std::size_t per_window_;
  std::vector<Cell> cells_;
  SkipReport skipped_;
};

struct CellIndex {
  std::int64_t window;
  std::int64_t sub;
};

inline std::size_t tag_index(const ReviewRecord& r) { return static_cast<std::size_t>(r.app); }
inline std::size_t tag_index(const MicroblogRecord& m) { return static_cast<std::size_t>(m.dataset); }
inline std::size_t tag_index(const DownloadRecord& d) { return static_cast<std::size_t>(d.app); }

// Half-open window arithmetic: window = floor((t - origin) / window_length).
inline CellIndex locate(const WindowSpec& spec, Instant t) {
  const std::int64_t offset = (t - spec.origin).count();
  const std::int64_t window = floor_div(offset, spec.window_length.count());
  const std::int64_t within = offset - window * spec.window_length.count();
  return {window, within / spec.sub_window_length.count()};
}

inline WindowedDataset bucket(const std::vector<ReviewRecord>& reviews,
                              const std::vector<MicroblogRecord>& microblogs,
                              const std::vector<DownloadRecord>& downloads, const WindowSpec& spec) {
  spec.validate();
  const std::int64_t limit = spec.window_count == 0 ? -1 : static_cast<std::int64_t>(spec.window_count);
  auto in_span = [&](std::int64_t w) { return w >= 0 && (limit < 0 || w < limit); };

  std::int64_t max_window = -1;
  auto scan = [&](const auto& records) {
    for (const auto& r : records) {
      const auto idx = locate(spec, r.timestamp);
      if (in_span(idx.window)) max_window = std::max(max_window, idx.window);
    }
  };
  scan(reviews);
  scan(microblogs);
  scan(downloads);

  const std::size_t T = limit >= 0 ? static_cast<std::size_t>(limit) : static_cast<std::size_t>(max_window + 1);
  WindowedDataset out(spec, T);
  auto place = [&](const auto& records, auto slot, std::size_t& skipped) {
    for (const auto& r : records) {
      const auto idx = locate(spec, r.timestamp);
      if (!in_span(idx.window)) {
        ++skipped;
        continue;
      }
      auto& cell = out.cell(static_cast<std::size_t>(idx.window), static_cast<std::size_t>(idx.sub));
      slot(cell)[tag_index(r)].push_back(r);
    }
  };
  place(reviews, [](Cell& c) -> auto& { return c.reviews; }, out.skipped().reviews);
  place(microblogs, [](Cell& c) -> auto& { return c.microblogs; }, out.skipped().microblogs);
  place(downloads, [](Cell& c) -> auto& { return c.downloads; }, out.skipped().downloads);
  return out;
}

}  // namespace popcontest
