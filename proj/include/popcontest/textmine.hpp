#pragma once

// Lexicon sentiment scoring, sentiment distributions, keyword mention counts
// and comparative-opinion detection.
//
// All matching folds ASCII letters to lower case and works on raw bytes, so
// CJK text matches without a segmenter. MatchMode::Token additionally requires
// that a match is not glued to neighbouring ASCII alphanumerics.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <istream>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "errors.hpp"

namespace popcontest {

enum class MatchMode { Substring, Token };

inline std::string fold_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

namespace detail {

inline bool word_byte(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (u >= '0' && u <= '9') || (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z') || u == '_';
}

inline bool at_token_boundary(std::string_view text, std::size_t pos, std::size_t len) {
  const bool left_ok = pos == 0 || !word_byte(text[pos - 1]) || !word_byte(text[pos]);
  const std::size_t end = pos + len;
  const bool right_ok = end >= text.size() || !word_byte(text[end]) || !word_byte(text[end - 1]);
  return left_ok && right_ok;
}

}  // namespace detail

// Start offsets of non-overlapping occurrences of an already-folded needle.
inline std::vector<std::size_t> find_occurrences(std::string_view folded_text, std::string_view folded_needle,
                                                 MatchMode mode = MatchMode::Substring) {
  std::vector<std::size_t> hits;
  if (folded_needle.empty()) return hits;
  std::size_t pos = folded_text.find(folded_needle);
  while (pos != std::string_view::npos) {
    if (mode == MatchMode::Substring || detail::at_token_boundary(folded_text, pos, folded_needle.size())) {
      hits.push_back(pos);
      pos = folded_text.find(folded_needle, pos + folded_needle.size());
    } else {
      pos = folded_text.find(folded_needle, pos + 1);
    }
  }
  return hits;
}

inline bool contains_term(std::string_view folded_text, std::string_view folded_needle,
                          MatchMode mode = MatchMode::Substring) {
  if (folded_needle.empty()) return false;
  if (mode == MatchMode::Substring) return folded_text.find(folded_needle) != std::string_view::npos;
  return !find_occurrences(folded_text, folded_needle, mode).empty();
}

// ---------------------------------------------------------------------------
// Sentiment

class SentimentLexicon {
 public:
  SentimentLexicon() = default;

  explicit SentimentLexicon(const std::vector<std::pair<std::string, double>>& entries) {
    for (const auto& [term, weight] : entries) add(term, weight);
  }

  void add(std::string_view term, double weight) {
    if (term.empty()) throw ConfigError("lexicon", "empty term");
    if (!std::isfinite(weight)) throw ConfigError("lexicon", "non-finite weight for '" + std::string(term) + "'");
    auto [it, inserted] = entries_.emplace(fold_ascii(term), weight);
    if (!inserted) throw ConfigError("lexicon", "duplicate term '" + std::string(term) + "'");
  }

  // Folded term -> weight, in lexicographic order.
  const std::map<std::string, double>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, double> entries_;
};

// JSON Lines of {"term": string, "weight": number}.
inline SentimentLexicon load_lexicon(std::istream& in) {
  SentimentLexicon lex;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(lineno, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("term") || !j["term"].is_string() || !j.contains("weight") ||
        !j["weight"].is_number())
      throw ValidationError(lineno, "lexicon entry needs string 'term' and numeric 'weight'");
    try {
      lex.add(j["term"].get<std::string>(), j["weight"].get<double>());
    } catch (const ConfigError& e) {
      throw ValidationError(lineno, e.what());
    }
  }
  return lex;
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Sum of the weights of every distinct lexicon term found in the text.
inline double raw_sentiment(std::string_view text, const SentimentLexicon& lexicon,
                            MatchMode mode = MatchMode::Substring) {
  const std::string folded = fold_ascii(text);
  double raw = 0.0;
  for (const auto& [term, weight] : lexicon.entries())
    if (contains_term(folded, term, mode)) raw += weight;
  return raw;
}

// Sentiment value in [0, 1]; 0.5 means no lexical evidence either way.
inline double score_sentiment(std::string_view text, const SentimentLexicon& lexicon,
                              MatchMode mode = MatchMode::Substring) {
  return logistic(raw_sentiment(text, lexicon, mode));
}

struct SentimentThresholds {
  double lo = 0.4;
  double hi = 0.6;

  void validate() const {
    if (!(lo >= 0.0 && lo < hi && hi <= 1.0))
      throw ConfigError("sentiment.thresholds", "require 0 <= lo < hi <= 1");
  }
};

struct SentimentDistribution {
  double p_neg = 1.0 / 3.0;
  double p_neu = 1.0 / 3.0;
  double p_pos = 1.0 / 3.0;

  std::array<double, 3> as_array() const { return {p_neg, p_neu, p_pos}; }
  friend bool operator==(const SentimentDistribution&, const SentimentDistribution&) = default;
};

// Proportions of scores below lo, between, and above hi. An empty score list
// yields the uniform distribution.
inline SentimentDistribution sentiment_distribution(std::span<const double> scores,
                                                    const SentimentThresholds& thresholds = {}) {
  thresholds.validate();
  if (scores.empty()) return {};
  std::size_t neg = 0, pos = 0;
  for (double s : scores) {
    if (s < thresholds.lo) ++neg;
    else if (s > thresholds.hi) ++pos;
  }
  const auto n = static_cast<double>(scores.size());
  const std::size_t neu = scores.size() - neg - pos;
  return {static_cast<double>(neg) / n, static_cast<double>(neu) / n, static_cast<double>(pos) / n};
}

// Cosine of the angle between two equal-length vectors; 0 when either is all zero.
inline double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw ConfigError("cosine_similarity", "vector lengths differ");
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

inline double cosine_similarity(const SentimentDistribution& u, const SentimentDistribution& v) {
  const auto a = u.as_array();
  const auto b = v.as_array();
  return cosine_similarity(std::span<const double>(a), std::span<const double>(b));
}

// ---------------------------------------------------------------------------
// Mentions

// Number of texts that contain at least one keyword (case-insensitive).
inline std::size_t count_mentions(std::span<const std::string> texts, std::span<const std::string> keywords,
                                  MatchMode mode = MatchMode::Substring) {
  std::vector<std::string> folded_keys;
  folded_keys.reserve(keywords.size());
  for (const auto& k : keywords)
    if (!k.empty()) folded_keys.push_back(fold_ascii(k));
  std::size_t n = 0;
  for (const auto& text : texts) {
    const std::string folded = fold_ascii(text);
    for (const auto& k : folded_keys) {
      if (contains_term(folded, k, mode)) {
        ++n;
        break;
      }
    }
  }
  return n;
}

// ---------------------------------------------------------------------------
// Comparative opinions

enum class Polarity { Positive, Negative };

class ComparativeDictionary {
 public:
  ComparativeDictionary() = default;

  ComparativeDictionary(const std::vector<std::string>& positive, const std::vector<std::string>& negative) {
    for (const auto& t : positive) add(t, Polarity::Positive);
    for (const auto& t : negative) add(t, Polarity::Negative);
  }

  void add(std::string_view term, Polarity polarity) {
    if (term.empty()) throw ConfigError("comparatives", "empty term");
    std::string key = fold_ascii(term);
    auto& mine = polarity == Polarity::Positive ? positive_ : negative_;
    const auto& theirs = polarity == Polarity::Positive ? negative_ : positive_;
    if (theirs.contains(key))
      throw ConfigError("comparatives", "term '" + std::string(term) + "' is both positive and negative");
    mine.insert(std::move(key));
  }

  const std::set<std::string>& positive_terms() const { return positive_; }
  const std::set<std::string>& negative_terms() const { return negative_; }
  std::size_t size() const { return positive_.size() + negative_.size(); }

 private:
  std::set<std::string> positive_;
  std::set<std::string> negative_;
};

// JSON Lines of {"term": string, "polarity": "pos" | "neg"}.
inline ComparativeDictionary load_comparatives(std::istream& in) {
  ComparativeDictionary dict;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(lineno, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("term") || !j["term"].is_string() || !j.contains("polarity") ||
        !j["polarity"].is_string())
      throw ValidationError(lineno, "comparative entry needs string 'term' and 'polarity'");
    const auto pol = j["polarity"].get<std::string>();
    if (pol != "pos" && pol != "neg") throw ValidationError(lineno, "polarity must be 'pos' or 'neg'");
    try {
      dict.add(j["term"].get<std::string>(), pol == "pos" ? Polarity::Positive : Polarity::Negative);
    } catch (const ConfigError& e) {
      throw ValidationError(lineno, e.what());
    }
  }
  return dict;
}

struct ComparisonResult {
  std::size_t count = 0;
  std::size_t score_A = 0;
  std::size_t score_B = 0;

  ComparisonResult& operator+=(const ComparisonResult& o) {
    count += o.count;
    score_A += o.score_A;
    score_B += o.score_B;
    return *this;
  }
  friend bool operator==(const ComparisonResult&, const ComparisonResult&) = default;
};

// Every occurrence of a comparative term is one comparison. Its subject is the
// app whose keyword ends closest before the term (A wins ties); a positive
// term credits the subject, a negative one credits the competitor. Terms with
// no preceding keyword only add to the count.
inline ComparisonResult detect_comparisons(std::string_view text, const ComparativeDictionary& dict,
                                           std::span<const std::string> keywords_A,
                                           std::span<const std::string> keywords_B,
                                           MatchMode mode = MatchMode::Substring) {
  const std::string folded = fold_ascii(text);

  // (end offset, app index) of every keyword occurrence.
  std::vector<std::pair<std::size_t, int>> mentions;
  auto collect = [&](std::span<const std::string> keys, int app) {
    for (const auto& k : keys) {
      const std::string fk = fold_ascii(k);
      for (std::size_t pos : find_occurrences(folded, fk, mode)) mentions.emplace_back(pos + fk.size(), app);
    }
  };
  collect(keywords_A, 0);
  collect(keywords_B, 1);

  ComparisonResult out;
  auto tally = [&](const std::set<std::string>& terms, bool positive) {
    for (const auto& term : terms) {
      for (std::size_t pos : find_occurrences(folded, term, mode)) {
        ++out.count;
        std::size_t best_end = 0;
        int subject = -1;
        for (const auto& [end, app] : mentions) {
          if (end > pos) continue;
          if (subject < 0 || end > best_end || (end == best_end && app < subject)) {
            best_end = end;
            subject = app;
          }
        }
        if (subject < 0) continue;
        const int credited = positive ? subject : 1 - subject;
        (credited == 0 ? out.score_A : out.score_B) += 1;
      }
    }
  };
  tally(dict.positive_terms(), true);
  tally(dict.negative_terms(), false);
  return out;
}

}  // namespace popcontest
