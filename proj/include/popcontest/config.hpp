#pragma once

// Pipeline configuration: one JSON file, with command-line overrides applied
// on top. Relative paths resolve against the config file's directory.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "eval.hpp"
#include "features.hpp"
#include "ingest.hpp"
#include "model.hpp"
#include "synth.hpp"

namespace popcontest {

namespace fs = std::filesystem;

class FileError : public std::runtime_error {
 public:
  explicit FileError(const fs::path& p, const std::string& what = "cannot open")
      : std::runtime_error(what + ": " + p.string()), path_(p) {}
  const fs::path& path() const noexcept { return path_; }

 private:
  fs::path path_;
};

inline std::ifstream open_input(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw FileError(p, "missing file");
  return in;
}

inline std::string read_file(const fs::path& p) {
  auto in = open_input(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& p, const std::string& content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw FileError(p, "cannot write");
  out << content;
  if (!out) throw FileError(p, "write failed");
}

// 64-bit FNV-1a, hex encoded.
inline std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct PipelineConfig {
  fs::path base_dir = ".";

  // Empty input paths read the streams `synth` wrote into the output directory.
  std::string reviews;
  std::string microblogs;
  std::string downloads;
  std::string lexicon;
  std::string comparatives;
  std::vector<std::string> keywords_A;
  std::vector<std::string> keywords_B;

  std::string origin = "2016-06-20T00:00:00Z";
  std::int64_t window_days = 7;
  std::int64_t sub_window_days = 1;
  std::size_t window_count = 0;

  SentimentThresholds thresholds;
  MatchMode match = MatchMode::Substring;
  FineBasis fine_basis;
  RunMode runs = RunMode::Contiguous;
  bool absolute_diffs = false;

  std::vector<std::string> subset{"CF", "FF", "AF", "MF"};
  ModelKind model = ModelKind::RandomForest;
  ForestParams forest;
  EvalScheme scheme;
  std::vector<std::vector<std::string>> ablations{{"CF"}, {"FF"}, {"CF", "FF"}, {"AF"}, {"MF"}, {"AF", "MF"}};

  // Scenario for `synth`: inline object or a path to a JSON file.
  nlohmann::json scenario;

  std::uint64_t seed = 0;
  bool strict = false;
  unsigned threads = 1;
  std::string out = "out";

  fs::path resolve(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  }
  fs::path out_dir() const { return resolve(out); }
  fs::path input(const std::string& p, const char* fallback) const {
    return p.empty() ? out_dir() / fallback : resolve(p);
  }
  fs::path reviews_path() const { return input(reviews, "reviews.jsonl"); }
  fs::path microblogs_path() const { return input(microblogs, "microblogs.jsonl"); }
  fs::path downloads_path() const { return input(downloads, "downloads.jsonl"); }

  WindowSpec window_spec() const {
    WindowSpec s;
    auto t = parse_rfc3339(origin);
    if (!t) throw ConfigError("window.origin", "not an RFC 3339 timestamp");
    s.origin = *t;
    if (window_days <= 0) throw ConfigError("window.window_days", "must be positive");
    if (sub_window_days <= 0) throw ConfigError("window.sub_window_days", "must be positive");
    s.window_length = Seconds{window_days * 24 * 3600};
    s.sub_window_length = Seconds{sub_window_days * 24 * 3600};
    s.window_count = window_count;
    s.validate();
    return s;
  }

  FeatureSubset feature_subset() const { return FeatureSubset::parse(subset); }

  std::vector<FeatureSubset> ablation_subsets() const {
    std::vector<FeatureSubset> out;
    for (const auto& a : ablations) out.push_back(FeatureSubset::parse(a));
    return out;
  }

  // "CF+FF" style label of each ablation, from its configured tags.
  std::vector<std::string> ablation_names() const {
    std::vector<std::string> out;
    for (const auto& a : ablations) {
      std::string name;
      for (const auto& t : a) name += (name.empty() ? "" : "+") + t;
      out.push_back(name);
    }
    return out;
  }

  ForestParams forest_params() const {
    ForestParams p = forest;
    p.seed = seed;
    return p;
  }

  void validate() const {
    window_spec();
    thresholds.validate();
    feature_subset();
    ablation_subsets();
    forest.validate();
    if (scheme.train_weeks < 1) throw ConfigError("eval.train_weeks", "must be >= 1");
    if (keywords_A.empty()) throw ConfigError("keywords.A", "at least one keyword required");
    if (keywords_B.empty()) throw ConfigError("keywords.B", "at least one keyword required");
    if (lexicon.empty()) throw ConfigError("lexicon", "path required");
    if (comparatives.empty()) throw ConfigError("comparatives", "path required");
    if (threads < 1) throw ConfigError("threads", "must be >= 1");
  }

  // Canonical JSON of every setting that can affect outputs. Thread count and
  // output directory are excluded.
  nlohmann::json canonical() const {
    nlohmann::json j;
    j["inputs"] = {{"reviews", reviews}, {"microblogs", microblogs}, {"downloads", downloads}};
    j["lexicon"] = lexicon;
    j["comparatives"] = comparatives;
    j["keywords"] = {{"A", keywords_A}, {"B", keywords_B}};
    j["window"] = {{"origin", origin},
                   {"window_days", window_days},
                   {"sub_window_days", sub_window_days},
                   {"window_count", window_count}};
    j["sentiment"] = {{"lo", thresholds.lo}, {"hi", thresholds.hi}};
    j["match"] = match == MatchMode::Substring ? "substring" : "token";
    j["fine_basis"] = fine_basis.to_string();
    j["runs"] = runs == RunMode::Contiguous ? "contiguous" : "subsequence";
    j["absolute_diffs"] = absolute_diffs;
    j["subset"] = subset;
    j["model"] = to_string(model);
    j["forest"] = {{"n_trees", forest.n_trees},
                   {"mtry", forest.mtry},
                   {"bootstrap", forest.bootstrap},
                   {"max_depth", forest.tree.max_depth},
                   {"min_samples_split", forest.tree.min_samples_split}};
    j["eval"] = {{"train_weeks", scheme.train_weeks}, {"strict_forecast", scheme.strict_forecast}};
    j["ablations"] = ablations;
    j["scenario"] = scenario;
    j["seed"] = seed;
    j["strict"] = strict;
    return j;
  }

  std::string hash() const { return fnv1a_hex(canonical().dump()); }

  Provenance provenance() const { return {hash(), seed}; }
};

namespace detail {

template <typename T>
T get_as(const nlohmann::json& j, const std::string& field) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(field, "wrong type");
  }
}

inline std::vector<std::string> string_list(const nlohmann::json& j, const std::string& field) {
  if (j.is_string()) return {j.get<std::string>()};
  if (!j.is_array()) throw ConfigError(field, "expected a list of strings");
  std::vector<std::string> out;
  for (const auto& v : j) {
    if (!v.is_string()) throw ConfigError(field, "expected a list of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace detail

inline void apply_config_json(PipelineConfig& c, const nlohmann::json& j) {
  using detail::get_as;
  if (!j.is_object()) throw ConfigError("config", "top level must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const auto& v = it.value();
    if (k == "inputs") {
      for (auto in = v.begin(); in != v.end(); ++in) {
        const auto field = "inputs." + in.key();
        if (in.key() == "reviews") c.reviews = get_as<std::string>(*in, field);
        else if (in.key() == "microblogs") c.microblogs = get_as<std::string>(*in, field);
        else if (in.key() == "downloads") c.downloads = get_as<std::string>(*in, field);
        else throw ConfigError(field, "unknown input");
      }
    } else if (k == "lexicon") c.lexicon = get_as<std::string>(v, k);
    else if (k == "comparatives") c.comparatives = get_as<std::string>(v, k);
    else if (k == "keywords") {
      if (!v.is_object()) throw ConfigError("keywords", "expected {\"A\": [...], \"B\": [...]}");
      if (v.contains("A")) c.keywords_A = detail::string_list(v["A"], "keywords.A");
      if (v.contains("B")) c.keywords_B = detail::string_list(v["B"], "keywords.B");
    } else if (k == "window") {
      for (auto in = v.begin(); in != v.end(); ++in) {
        const auto field = "window." + in.key();
        if (in.key() == "origin") c.origin = get_as<std::string>(*in, field);
        else if (in.key() == "window_days") c.window_days = get_as<std::int64_t>(*in, field);
        else if (in.key() == "sub_window_days") c.sub_window_days = get_as<std::int64_t>(*in, field);
        else if (in.key() == "window_count") c.window_count = get_as<std::size_t>(*in, field);
        else throw ConfigError(field, "unknown window setting");
      }
    } else if (k == "sentiment") {
      if (v.contains("lo")) c.thresholds.lo = get_as<double>(v["lo"], "sentiment.lo");
      if (v.contains("hi")) c.thresholds.hi = get_as<double>(v["hi"], "sentiment.hi");
    } else if (k == "match") {
      const auto m = get_as<std::string>(v, k);
      if (m == "substring") c.match = MatchMode::Substring;
      else if (m == "token") c.match = MatchMode::Token;
      else throw ConfigError("match", "expected 'substring' or 'token'");
    } else if (k == "fine_basis") c.fine_basis = FineBasis::parse(get_as<std::string>(v, k));
    else if (k == "runs") {
      const auto m = get_as<std::string>(v, k);
      if (m == "contiguous") c.runs = RunMode::Contiguous;
      else if (m == "subsequence") c.runs = RunMode::Subsequence;
      else throw ConfigError("runs", "expected 'contiguous' or 'subsequence'");
    } else if (k == "absolute_diffs") c.absolute_diffs = get_as<bool>(v, k);
    else if (k == "subset") c.subset = detail::string_list(v, k);
    else if (k == "model") {
      const auto m = get_as<std::string>(v, k);
      if (m == "RF") c.model = ModelKind::RandomForest;
      else if (m == "DT") c.model = ModelKind::DecisionTree;
      else throw ConfigError("model", "expected 'RF' or 'DT'");
    } else if (k == "forest") {
      for (auto in = v.begin(); in != v.end(); ++in) {
        const auto field = "forest." + in.key();
        if (in.key() == "n_trees") c.forest.n_trees = get_as<std::size_t>(*in, field);
        else if (in.key() == "mtry") c.forest.mtry = get_as<std::size_t>(*in, field);
        else if (in.key() == "bootstrap") c.forest.bootstrap = get_as<bool>(*in, field);
        else if (in.key() == "max_depth") c.forest.tree.max_depth = get_as<std::size_t>(*in, field);
        else if (in.key() == "min_samples_split") c.forest.tree.min_samples_split = get_as<std::size_t>(*in, field);
        else throw ConfigError(field, "unknown forest setting");
      }
    } else if (k == "eval") {
      for (auto in = v.begin(); in != v.end(); ++in) {
        const auto field = "eval." + in.key();
        if (in.key() == "train_weeks") c.scheme.train_weeks = get_as<std::size_t>(*in, field);
        else if (in.key() == "strict_forecast") c.scheme.strict_forecast = get_as<bool>(*in, field);
        else throw ConfigError(field, "unknown eval setting");
      }
    } else if (k == "ablations") {
      if (!v.is_array()) throw ConfigError("ablations", "expected a list of tag lists");
      c.ablations.clear();
      for (const auto& a : v) c.ablations.push_back(detail::string_list(a, "ablations"));
    } else if (k == "scenario") c.scenario = v;
    else if (k == "seed") c.seed = get_as<std::uint64_t>(v, k);
    else if (k == "strict") c.strict = get_as<bool>(v, k);
    else if (k == "threads") c.threads = get_as<unsigned>(v, k);
    else if (k == "out") c.out = get_as<std::string>(v, k);
    else throw ConfigError(k, "unknown config field");
  }
}

inline PipelineConfig load_config(const fs::path& path) {
  PipelineConfig c;
  c.base_dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config", std::string("malformed JSON: ") + e.what());
  }
  apply_config_json(c, j);
  return c;
}

inline Scenario load_scenario(const PipelineConfig& c) {
  if (c.scenario.is_null()) throw ConfigError("scenario", "synth needs a scenario (object or path)");
  if (c.scenario.is_string()) {
    nlohmann::json j;
    const auto path = c.resolve(c.scenario.get<std::string>());
    try {
      j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("scenario", std::string("malformed JSON: ") + e.what());
    }
    return scenario_from_json(j);
  }
  return scenario_from_json(c.scenario);
}

inline FeatureConfig load_feature_config(const PipelineConfig& c) {
  FeatureConfig fc;
  {
    auto in = open_input(c.resolve(c.lexicon));
    fc.lexicon = load_lexicon(in);
  }
  {
    auto in = open_input(c.resolve(c.comparatives));
    fc.comparatives = load_comparatives(in);
  }
  fc.keywords_A = c.keywords_A;
  fc.keywords_B = c.keywords_B;
  fc.thresholds = c.thresholds;
  fc.match = c.match;
  fc.absolute_diffs = c.absolute_diffs;
  return fc;
}

}  // namespace popcontest
