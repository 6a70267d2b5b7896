#pragma once

// Deterministic generator for review, microblog and download streams of two
// competing apps, driven by latent weekly popularity.
//
// Each app's latent score is L = base + drift * w + quality + buzz.
//   random_walk:    buzz is zero. Review volume follows downloads, review
//                   polarity follows the latent gap, comparison direction
//                   follows sign(L_A - L_B). Latents are constant within a week.
//   trailing_drift: quality and buzz move independently. Within a week each
//                   moves linearly from last week's value to this week's, so
//                   labels depend on the intra-week trend. Reviews only see
//                   quality; microblogs only see buzz.
//
// Randomness is split into independent splitmix64 streams (latent, reviews,
// posts, downloads) and every draw happens unconditionally, so changing a
// signal strength only moves outcomes, never the draw sequence.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "features.hpp"
#include "ingest.hpp"
#include "splitmix.hpp"
#include "textmine.hpp"
#include "timeutil.hpp"

namespace popcontest {

struct Scenario {
  enum class Mechanism { RandomWalk, TrailingDrift };

  std::size_t weeks = 38;
  std::uint64_t seed = 1;
  Instant origin = *parse_rfc3339("2016-06-20T00:00:00Z");
  Mechanism mechanism = Mechanism::RandomWalk;

  double base_A = 1.0;
  double base_B = 1.0;
  double drift_A = 0.0;  // per week
  double drift_B = 0.0;
  double volatility = 0.5;  // std of the weekly latent innovation
  double reversion = 0.0;   // 0: pure random walk, 1: i.i.d. weekly shocks
  double noise = 0.1;       // sigma of daily multiplicative noise on all volumes

  double sentiment_signal = 0.5;
  double comparison_signal = 0.5;

  double review_volume = 20.0;      // expected reviews per app-day at softplus(L) = 1
  double post_volume = 10.0;        // expected posts per dataset-day at softplus(L) = 1
  double download_volume = 10000.0; // expected downloads per app-week at softplus(L) = 1

  void validate() const {
    if (weeks < 12) throw ConfigError("scenario.weeks", "must be >= 12");
    auto unit = [](double v, const char* field) {
      if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(field, "must lie in [0, 1]");
    };
    unit(sentiment_signal, "scenario.sentiment_signal");
    unit(comparison_signal, "scenario.comparison_signal");
    unit(reversion, "scenario.reversion");
    auto non_negative = [](double v, const char* field) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(field, "must be finite and >= 0");
    };
    non_negative(noise, "scenario.noise");
    non_negative(volatility, "scenario.volatility");
    non_negative(review_volume, "scenario.review_volume");
    non_negative(post_volume, "scenario.post_volume");
    non_negative(download_volume, "scenario.download_volume");
    for (double v : {base_A, base_B, drift_A, drift_B})
      if (!std::isfinite(v)) throw ConfigError("scenario", "latent parameters must be finite");
  }
};

inline nlohmann::ordered_json to_json(const Scenario& s) {
  nlohmann::ordered_json j;
  j["weeks"] = s.weeks;
  j["seed"] = s.seed;
  j["origin"] = format_rfc3339(s.origin);
  j["mechanism"] = s.mechanism == Scenario::Mechanism::RandomWalk ? "random_walk" : "trailing_drift";
  j["base_A"] = s.base_A;
  j["base_B"] = s.base_B;
  j["drift_A"] = s.drift_A;
  j["drift_B"] = s.drift_B;
  j["volatility"] = s.volatility;
  j["reversion"] = s.reversion;
  j["noise"] = s.noise;
  j["sentiment_signal"] = s.sentiment_signal;
  j["comparison_signal"] = s.comparison_signal;
  j["review_volume"] = s.review_volume;
  j["post_volume"] = s.post_volume;
  j["download_volume"] = s.download_volume;
  return j;
}

// Missing keys keep their defaults; unknown keys are rejected.
template <typename Json>
Scenario scenario_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("scenario", "must be a JSON object");
  Scenario s;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const auto& v = it.value();
    auto num = [&]() {
      if (!v.is_number()) throw ConfigError("scenario." + k, "must be a number");
      return v.template get<double>();
    };
    auto count = [&]() {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.template get<std::int64_t>() >= 0))
        throw ConfigError("scenario." + k, "must be a non-negative integer");
      return v.template get<std::uint64_t>();
    };
    if (k == "weeks") s.weeks = static_cast<std::size_t>(count());
    else if (k == "seed") s.seed = count();
    else if (k == "origin") {
      if (!v.is_string()) throw ConfigError("scenario.origin", "must be an RFC 3339 string");
      auto t = parse_rfc3339(v.template get<std::string>());
      if (!t) throw ConfigError("scenario.origin", "not RFC 3339");
      s.origin = *t;
    } else if (k == "mechanism") {
      const auto m = v.is_string() ? v.template get<std::string>() : std::string{};
      if (m == "random_walk") s.mechanism = Scenario::Mechanism::RandomWalk;
      else if (m == "trailing_drift") s.mechanism = Scenario::Mechanism::TrailingDrift;
      else throw ConfigError("scenario.mechanism", "expected 'random_walk' or 'trailing_drift'");
    } else if (k == "base_A") s.base_A = num();
    else if (k == "base_B") s.base_B = num();
    else if (k == "drift_A") s.drift_A = num();
    else if (k == "drift_B") s.drift_B = num();
    else if (k == "volatility") s.volatility = num();
    else if (k == "reversion") s.reversion = num();
    else if (k == "noise") s.noise = num();
    else if (k == "sentiment_signal") s.sentiment_signal = num();
    else if (k == "comparison_signal") s.comparison_signal = num();
    else if (k == "review_volume") s.review_volume = num();
    else if (k == "post_volume") s.post_volume = num();
    else if (k == "download_volume") s.download_volume = num();
    else throw ConfigError("scenario." + k, "unknown scenario field");
  }
  s.validate();
  return s;
}

inline double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

// Vocabulary the generator writes with. Built from the same lexicon,
// comparative dictionary and keywords the pipeline reads.
struct SynthVocabulary {
  std::vector<std::string> positive_words;  // lexicon weight >= 1
  std::vector<std::string> negative_words;  // lexicon weight <= -1
  std::vector<std::string> positive_comparatives;
  std::vector<std::string> negative_comparatives;
  std::vector<std::string> keywords_A;
  std::vector<std::string> keywords_B;

  static SynthVocabulary from(const FeatureConfig& cfg) {
    SynthVocabulary v;
    for (const auto& [term, w] : cfg.lexicon.entries()) {
      if (w >= 1.0) v.positive_words.push_back(term);
      else if (w <= -1.0) v.negative_words.push_back(term);
    }
    v.positive_comparatives.assign(cfg.comparatives.positive_terms().begin(), cfg.comparatives.positive_terms().end());
    v.negative_comparatives.assign(cfg.comparatives.negative_terms().begin(), cfg.comparatives.negative_terms().end());
    v.keywords_A = cfg.keywords_A;
    v.keywords_B = cfg.keywords_B;
    if (v.positive_words.empty() || v.negative_words.empty())
      throw ConfigError("lexicon", "generator needs terms with weight >= 1 and <= -1");
    if (v.positive_comparatives.empty() || v.negative_comparatives.empty())
      throw ConfigError("comparatives", "generator needs positive and negative comparative terms");
    if (v.keywords_A.empty() || v.keywords_B.empty())
      throw ConfigError("keywords", "generator needs keywords for both apps");
    return v;
  }
};

struct WeekTruth {
  double latent_A = 0.0;  // end-of-week latent score
  double latent_B = 0.0;
  WindowLabel label;
};

struct SynthOutput {
  std::vector<ReviewRecord> reviews;
  std::vector<MicroblogRecord> microblogs;
  std::vector<DownloadRecord> downloads;
  std::vector<WeekTruth> truth;
};

namespace detail {

inline const std::string& pick(const std::vector<std::string>& pool, SplitMix64& rng) {
  return pool[static_cast<std::size_t>(rng.below(pool.size()))];
}

// Per-app latent state for one day.
struct DayLatent {
  double quality[2];
  double buzz[2];
  double total[2];
};

}  // namespace detail

inline SynthOutput generate(const Scenario& sc, const SynthVocabulary& vocab) {
  sc.validate();
  using Mech = Scenario::Mechanism;
  SplitMix64 latent_rng(splitmix64(sc.seed));
  SplitMix64 review_rng(splitmix64(sc.seed + 1));
  SplitMix64 post_rng(splitmix64(sc.seed + 2));
  SplitMix64 download_rng(splitmix64(sc.seed + 3));

  // Weekly latent paths; index 0 is the state before week 0.
  const std::size_t T = sc.weeks;
  std::vector<std::array<double, 2>> quality(T + 1, {0.0, 0.0}), buzz(T + 1, {0.0, 0.0});
  for (std::size_t w = 1; w <= T; ++w) {
    for (int a = 0; a < 2; ++a) {
      const double eq = latent_rng.normal();
      const double eb = latent_rng.normal();
      quality[w][a] = (1.0 - sc.reversion) * quality[w - 1][a] + sc.volatility * eq;
      if (sc.mechanism == Mech::TrailingDrift)
        buzz[w][a] = (1.0 - sc.reversion) * buzz[w - 1][a] + sc.volatility * eb;
    }
  }
  const double base[2] = {sc.base_A, sc.base_B};
  const double drift[2] = {sc.drift_A, sc.drift_B};

  auto day_latent = [&](std::size_t w, std::size_t d) {
    detail::DayLatent L{};
    // random_walk holds the week's value all week; trailing_drift
    // interpolates from the previous week's value.
    const double frac = sc.mechanism == Mech::TrailingDrift ? static_cast<double>(d + 1) / 7.0 : 1.0;
    for (int a = 0; a < 2; ++a) {
      L.quality[a] = quality[w][a] + (quality[w + 1][a] - quality[w][a]) * frac;
      L.buzz[a] = buzz[w][a] + (buzz[w + 1][a] - buzz[w][a]) * frac;
      L.total[a] = base[a] + drift[a] * static_cast<double>(w) + L.quality[a] + L.buzz[a];
    }
    return L;
  };

  SynthOutput out;
  out.truth.resize(T);
  const char* stores[] = {"wandoujia", "huawei", "xiaomi", "baidu"};
  const Seconds day{24 * 3600};
  std::size_t user_pool = 5000;

  for (std::size_t w = 0; w < T; ++w) {
    for (std::size_t d = 0; d < 7; ++d) {
      const auto L = day_latent(w, d);
      const Instant day_start = sc.origin + day * static_cast<std::int64_t>(w * 7 + d);
      auto stamp = [&](SplitMix64& rng) { return day_start + Seconds{static_cast<std::int64_t>(rng.below(86400))}; };
      auto jitter = [&](SplitMix64& rng) { return std::exp(sc.noise * rng.normal()); };

      // Downloads: one record per app-day.
      for (int a = 0; a < 2; ++a) {
        const double rate = sc.download_volume / 7.0 * softplus(L.total[a]) * jitter(download_rng);
        DownloadRecord rec;
        rec.app = static_cast<App>(a);
        rec.timestamp = stamp(download_rng);
        rec.downloads = static_cast<std::uint64_t>(std::llround(std::max(0.0, rate)));
        out.downloads.push_back(rec);
      }

      // Reviews.
      for (int a = 0; a < 2; ++a) {
        const int o = 1 - a;
        const bool by_quality = sc.mechanism == Mech::TrailingDrift;
        const double volume_latent = by_quality ? base[a] + L.quality[a] : L.total[a];
        const double gap = by_quality ? L.quality[a] - L.quality[o] : L.total[a] - L.total[o];
        const double rate = sc.review_volume * softplus(volume_latent) * jitter(review_rng);
        const auto n = review_rng.poisson(rate);
        const double u = sc.sentiment_signal * std::tanh(gap);
        const double p_pos = 0.4 * (1.0 + u);
        const double p_neg = 0.4 * (1.0 - u);
        const auto& keys = a == 0 ? vocab.keywords_A : vocab.keywords_B;
        for (std::uint64_t i = 0; i < n; ++i) {
          ReviewRecord r;
          r.app = static_cast<App>(a);
          r.store = stores[review_rng.below(4)];
          r.timestamp = stamp(review_rng);
          const double pol = review_rng.uniform();
          const auto& kw = detail::pick(keys, review_rng);
          const auto& good = detail::pick(vocab.positive_words, review_rng);
          const auto& bad = detail::pick(vocab.negative_words, review_rng);
          if (pol < p_pos) r.text = kw + " is " + good + " to ride";
          else if (pol < p_pos + p_neg) r.text = kw + " feels " + bad + " today";
          else r.text = "rode " + kw + " to work";
          const double mood = pol < p_pos ? 1.0 : (pol < p_pos + p_neg ? -1.0 : 0.0);
          const double stars = std::round(3.0 + 1.5 * mood * (0.5 + 0.5 * sc.sentiment_signal) + 0.8 * review_rng.normal());
          const bool rated = review_rng.uniform() >= 0.05;
          if (rated) r.rating = static_cast<int>(std::clamp(stars, 1.0, 5.0));
          out.reviews.push_back(std::move(r));
        }
      }

      // Microblogs.
      const bool buzz_driven = sc.mechanism == Mech::TrailingDrift;
      const double gapA = buzz_driven ? L.buzz[0] - L.buzz[1] : L.total[0] - L.total[1];
      const double attention = buzz_driven ? softplus(0.5 * (L.buzz[0] + L.buzz[1]) + 1.0)
                                           : 0.5 * (softplus(L.total[0]) + softplus(L.total[1]));
      const double share_A = buzz_driven ? softplus(L.buzz[0] + 1.0) / (softplus(L.buzz[0] + 1.0) + softplus(L.buzz[1] + 1.0))
                                         : softplus(L.total[0]) / (softplus(L.total[0]) + softplus(L.total[1]));
      for (int ds = 0; ds < 3; ++ds) {
        const double rate = sc.post_volume * attention * jitter(post_rng);
        const auto n = post_rng.poisson(rate);
        for (std::uint64_t i = 0; i < n; ++i) {
          MicroblogRecord m;
          m.dataset = static_cast<Dataset>(ds);
          m.timestamp = stamp(post_rng);
          m.user_id = "u" + std::to_string(post_rng.below(user_pool));
          m.reposts = post_rng.poisson(2.0);
          m.comments = post_rng.poisson(2.0);
          m.likes = post_rng.poisson(3.0);
          const auto& ka = detail::pick(vocab.keywords_A, post_rng);
          const auto& kb = detail::pick(vocab.keywords_B, post_rng);
          const double r_form = post_rng.uniform();
          const double r_dir = post_rng.uniform();
          const double r_cmp = post_rng.uniform();
          const auto& pos = detail::pick(vocab.positive_comparatives, post_rng);
          const auto& neg = detail::pick(vocab.negative_comparatives, post_rng);
          if (m.dataset == Dataset::Both) {
            if (r_cmp < 0.7) {
              // Leader by sign of the gap; exact ties pick by the direction draw.
              const int leader = gapA > 0 ? 0 : (gapA < 0 ? 1 : (r_dir < 0.5 ? 0 : 1));
              const bool favor_leader = r_dir < 0.5 * (1.0 + sc.comparison_signal);
              const int favored = favor_leader ? leader : 1 - leader;
              const auto& fk = favored == 0 ? ka : kb;
              const auto& lk = favored == 0 ? kb : ka;
              m.text = r_form < 0.5 ? fk + " is " + pos + " than " + lk : lk + " is " + neg + " than " + fk;
            } else {
              m.text = "saw " + ka + " and " + kb + " bikes everywhere";
            }
          } else {
            // Own-app dataset; the rival is mentioned more when it is more popular.
            const bool own_A = m.dataset == Dataset::A;
            const double rival_share = own_A ? 1.0 - share_A : share_A;
            const bool mention_rival = r_cmp < 0.1 + 0.6 * rival_share;
            const auto& own = own_A ? ka : kb;
            const auto& rival = own_A ? kb : ka;
            m.text = mention_rival ? "took " + own + " instead of " + rival : "first ride on " + own + " today";
          }
          out.microblogs.push_back(std::move(m));
        }
      }
    }
    const auto end = day_latent(w, 6);
    out.truth[w].latent_A = end.total[0];
    out.truth[w].latent_B = end.total[1];
  }

  WindowSpec spec;
  spec.origin = sc.origin;
  spec.window_count = T;
  const auto labels = compute_labels(bucket({}, {}, out.downloads, spec));
  for (std::size_t w = 0; w < T; ++w) out.truth[w].label = labels[w];
  return out;
}

inline nlohmann::ordered_json truth_json(const Scenario& sc, const SynthOutput& out, const Provenance& prov) {
  nlohmann::ordered_json j;
  j["config_hash"] = prov.config_hash;
  j["seed"] = prov.seed;
  j["scenario"] = to_json(sc);
  nlohmann::ordered_json weeks = nlohmann::ordered_json::array();
  for (std::size_t w = 0; w < out.truth.size(); ++w) {
    const auto& t = out.truth[w];
    weeks.push_back({{"week", w},
                     {"start", format_rfc3339(sc.origin + Seconds{7 * 24 * 3600} * static_cast<std::int64_t>(w))},
                     {"latent_A", t.latent_A},
                     {"latent_B", t.latent_B},
                     {"d_A", t.label.d_A},
                     {"d_B", t.label.d_B},
                     {"pc", t.label.pc},
                     {"cr", to_string(t.label.cr)},
                     {"ci", t.label.ci},
                     {"degenerate", t.label.degenerate}});
  }
  j["weeks"] = std::move(weeks);
  return j;
}

}  // namespace popcontest
