#pragma once

// Rolling-origin evaluation: train on a fixed number of consecutive windows,
// predict the next one, slide by one window. Metrics are pooled over folds.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "csv.hpp"
#include "errors.hpp"
#include "features.hpp"
#include "model.hpp"
#include "parallel.hpp"

namespace popcontest {

struct EvalScheme {
  std::size_t train_weeks = 10;
  // Predict window t+1 from the features of window t instead of t+1.
  bool strict_forecast = false;

  std::size_t min_windows() const { return train_weeks + 1 + (strict_forecast ? 1 : 0); }

  void validate(std::size_t windows) const {
    if (train_weeks < 1) throw ConfigError("eval.train_weeks", "must be >= 1");
    if (windows < min_windows())
      throw ConfigError("eval.train_weeks", "rolling evaluation with train_weeks=" + std::to_string(train_weeks) +
                                                " needs at least " + std::to_string(min_windows()) +
                                                " windows, got " + std::to_string(windows));
  }

  std::size_t fold_count(std::size_t windows) const { return windows - min_windows() + 1; }
};

enum class ModelKind { RandomForest, DecisionTree };

inline std::string_view to_string(ModelKind k) { return k == ModelKind::RandomForest ? "RF" : "DT"; }

struct ClassificationMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f_measure = 0.0;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

// APositive is the positive class. Zero denominators give 0.
inline ClassificationMetrics classification_metrics(std::span<const Contest> preds, std::span<const Contest> truths) {
  if (preds.size() != truths.size()) throw std::invalid_argument("classification_metrics: length mismatch");
  ClassificationMetrics m;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] == Contest::APositive;
    const bool t = truths[i] == Contest::APositive;
    if (p && t) ++m.tp;
    else if (p && !t) ++m.fp;
    else if (!p && t) ++m.fn;
    else ++m.tn;
  }
  const auto total = static_cast<double>(preds.size());
  m.accuracy = preds.empty() ? 0.0 : static_cast<double>(m.tp + m.tn) / total;
  m.precision = m.tp + m.fp == 0 ? 0.0 : static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
  m.recall = m.tp + m.fn == 0 ? 0.0 : static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  m.f_measure = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

inline double rmse(std::span<const double> preds, std::span<const double> truths) {
  if (preds.size() != truths.size()) throw std::invalid_argument("rmse: length mismatch");
  if (preds.empty()) return 0.0;
  double ss = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) ss += (preds[i] - truths[i]) * (preds[i] - truths[i]);
  return std::sqrt(ss / static_cast<double>(preds.size()));
}

struct FoldRecord {
  std::size_t fold = 0;
  std::size_t train_first = 0;  // first training window (label index)
  std::size_t train_last = 0;
  std::size_t test_window = 0;
  Contest cr_true = Contest::BPositive;
  Contest cr_pred = Contest::BPositive;
  double cr_prob = 0.0;
  double ci_true = 0.0;
  double ci_pred = 0.0;
  Contest last_cr = Contest::BPositive;
  double last_ci = 0.0;
  std::string error;  // non-empty when this fold failed
};

struct Metrics {
  ClassificationMetrics classification;
  double rmse = 0.0;
  std::size_t folds = 0;
};

struct EvalReport {
  EvalScheme scheme;
  std::string subset;
  ModelKind model = ModelKind::RandomForest;
  std::vector<FoldRecord> folds;
  Metrics metrics;   // model
  Metrics baseline;  // Last

  std::size_t failed_folds() const {
    std::size_t n = 0;
    for (const auto& f : folds) n += !f.error.empty();
    return n;
  }
};

// Pools the predictions of all successful folds.
inline void summarize(EvalReport& report) {
  std::vector<Contest> pred, last, truth;
  std::vector<double> ci_pred, ci_last, ci_truth;
  for (const auto& f : report.folds) {
    if (!f.error.empty()) continue;
    pred.push_back(f.cr_pred);
    last.push_back(f.last_cr);
    truth.push_back(f.cr_true);
    ci_pred.push_back(f.ci_pred);
    ci_last.push_back(f.last_ci);
    ci_truth.push_back(f.ci_true);
  }
  report.metrics = {classification_metrics(pred, truth), rmse(ci_pred, ci_truth), truth.size()};
  report.baseline = {classification_metrics(last, truth), rmse(ci_last, ci_truth), truth.size()};
}

struct EvalOptions {
  ModelKind model = ModelKind::RandomForest;
  unsigned threads = 1;
};

inline FoldRecord evaluate_fold(const FeatureMatrix& m, const EvalScheme& scheme, const ForestParams& params,
                                ModelKind model, std::size_t fold) {
  const std::size_t shift = scheme.strict_forecast ? 1 : 0;
  const std::size_t t = scheme.train_weeks - 1 + shift + fold;  // last training window
  FoldRecord rec;
  rec.fold = fold;
  rec.train_first = t + 1 - scheme.train_weeks;
  rec.train_last = t;
  rec.test_window = t + 1;
  rec.cr_true = m.labels[t + 1].cr;
  rec.ci_true = m.labels[t + 1].ci;
  rec.last_cr = m.labels[t].cr;
  rec.last_ci = m.labels[t].ci;

  Matrix X;
  std::vector<double> y_cr, y_ci;
  for (std::size_t w = rec.train_first; w <= rec.train_last; ++w) {
    X.push_back(m.rows[w - shift]);
    y_cr.push_back(m.labels[w].cr == Contest::APositive ? 1.0 : 0.0);
    y_ci.push_back(m.labels[w].ci);
  }
  const auto& x = m.rows[t + 1 - shift];

  if (model == ModelKind::DecisionTree) {
    const Tree cls = fit_tree(X, y_cr, Task::Classification, params.tree);
    const Tree reg = fit_tree(X, y_ci, Task::Regression, params.tree);
    const auto& leaf = cls.leaf_for(x);
    const auto label = cls.predict_class(x);
    double total = 0.0;
    for (double c : leaf.counts) total += c;
    rec.cr_pred = label == 1 ? Contest::APositive : Contest::BPositive;
    rec.cr_prob = total > 0 ? leaf.counts[label] / total : 0.0;
    rec.ci_pred = std::clamp(reg.predict_value(x), 0.0, 1.0);
    return rec;
  }

  ForestParams cls_params = params;
  cls_params.seed = splitmix64(params.seed + 2 * fold);
  ForestParams reg_params = params;
  reg_params.seed = splitmix64(params.seed + 2 * fold + 1);
  const Forest cls = fit_forest(X, y_cr, Task::Classification, cls_params);
  const Forest reg = fit_forest(X, y_ci, Task::Regression, reg_params);
  const auto vote = cls.predict_class(x);
  rec.cr_pred = vote.label == 1 ? Contest::APositive : Contest::BPositive;
  rec.cr_prob = vote.probability;
  rec.ci_pred = reg.predict_value(x);
  return rec;
}

inline EvalReport rolling_evaluate(const FeatureMatrix& m, const EvalScheme& scheme, const ForestParams& params,
                                   const EvalOptions& opts = {}, std::string subset_name = "CF+FF") {
  scheme.validate(m.row_count());
  if (m.column_count() == 0) throw ConfigError("subset", "feature matrix has no columns");
  const std::size_t folds = scheme.fold_count(m.row_count());
  EvalReport report;
  report.scheme = scheme;
  report.subset = std::move(subset_name);
  report.model = opts.model;
  report.folds.resize(folds);
  parallel_for(folds, opts.threads, [&](std::size_t f) {
    try {
      report.folds[f] = evaluate_fold(m, scheme, params, opts.model, f);
    } catch (const std::exception& e) {
      FoldRecord rec;
      rec.fold = f;
      rec.error = e.what();
      report.folds[f] = rec;
    }
  });
  summarize(report);
  return report;
}

struct AblationRow {
  std::string name;  // subset name, or "Last"
  std::string model;
  Metrics metrics;
  std::size_t failed_folds = 0;
};

// One rolling evaluation per subset, followed by the Last baseline row.
// Rows are named by `names` when given, otherwise by FeatureSubset::name().
inline std::vector<AblationRow> ablation_run(const FeatureMatrix& full, const std::vector<FeatureSubset>& subsets,
                                             const EvalScheme& scheme, const ForestParams& params,
                                             const EvalOptions& opts = {}, const std::vector<std::string>& names = {}) {
  std::vector<AblationRow> rows;
  Metrics baseline;
  for (std::size_t i = 0; i < subsets.size(); ++i) {
    const auto& s = subsets[i];
    const std::string name = i < names.size() ? names[i] : s.name();
    const auto report = rolling_evaluate(full.select(s), scheme, params, opts, name);
    rows.push_back({name, std::string(to_string(opts.model)), report.metrics, report.failed_folds()});
    baseline = report.baseline;
  }
  if (subsets.empty()) {
    scheme.validate(full.row_count());
    baseline = rolling_evaluate(full, scheme, params, opts).baseline;
  }
  rows.push_back({"Last", "Last", baseline, 0});
  return rows;
}

// ---------------------------------------------------------------------------
// Report output

inline nlohmann::ordered_json to_json(const ClassificationMetrics& c) {
  return {{"accuracy", c.accuracy}, {"precision", c.precision}, {"recall", c.recall}, {"f_measure", c.f_measure},
          {"tp", c.tp},             {"fp", c.fp},               {"tn", c.tn},         {"fn", c.fn}};
}

inline nlohmann::ordered_json to_json(const Metrics& m) {
  nlohmann::ordered_json j = to_json(m.classification);
  j["rmse"] = m.rmse;
  j["folds"] = m.folds;
  return j;
}

inline nlohmann::ordered_json to_json(const FoldRecord& f) {
  nlohmann::ordered_json j;
  j["fold"] = f.fold;
  j["train_first"] = f.train_first;
  j["train_last"] = f.train_last;
  j["test_window"] = f.test_window;
  if (!f.error.empty()) {
    j["error"] = f.error;
    return j;
  }
  j["cr_true"] = to_string(f.cr_true);
  j["cr_pred"] = to_string(f.cr_pred);
  j["cr_prob"] = f.cr_prob;
  j["ci_true"] = f.ci_true;
  j["ci_pred"] = f.ci_pred;
  j["last_cr"] = to_string(f.last_cr);
  j["last_ci"] = f.last_ci;
  return j;
}

inline nlohmann::ordered_json to_json(const EvalReport& r, const Provenance& prov) {
  nlohmann::ordered_json j;
  j["config_hash"] = prov.config_hash;
  j["seed"] = prov.seed;
  j["model"] = to_string(r.model);
  j["subset"] = r.subset;
  j["train_weeks"] = r.scheme.train_weeks;
  j["strict_forecast"] = r.scheme.strict_forecast;
  j["fold_count"] = r.folds.size();
  j["failed_folds"] = r.failed_folds();
  j["metrics"] = to_json(r.metrics);
  j["baseline"] = to_json(r.baseline);
  nlohmann::ordered_json folds = nlohmann::ordered_json::array();
  for (const auto& f : r.folds) folds.push_back(to_json(f));
  j["folds"] = std::move(folds);
  return j;
}

inline Contest parse_contest(const std::string& s) {
  if (s == "A") return Contest::APositive;
  if (s == "B") return Contest::BPositive;
  throw std::invalid_argument("contest label must be A or B, got '" + s + "'");
}

// Fold records back from an eval.json document.
template <typename Json>
std::vector<FoldRecord> folds_from_json(const Json& j) {
  std::vector<FoldRecord> out;
  for (const auto& fj : j.at("folds")) {
    FoldRecord f;
    f.fold = fj.at("fold").template get<std::size_t>();
    f.train_first = fj.at("train_first").template get<std::size_t>();
    f.train_last = fj.at("train_last").template get<std::size_t>();
    f.test_window = fj.at("test_window").template get<std::size_t>();
    if (fj.contains("error")) {
      f.error = fj.at("error").template get<std::string>();
    } else {
      f.cr_true = parse_contest(fj.at("cr_true").template get<std::string>());
      f.cr_pred = parse_contest(fj.at("cr_pred").template get<std::string>());
      f.cr_prob = fj.at("cr_prob").template get<double>();
      f.ci_true = fj.at("ci_true").template get<double>();
      f.ci_pred = fj.at("ci_pred").template get<double>();
      f.last_cr = parse_contest(fj.at("last_cr").template get<std::string>());
      f.last_ci = fj.at("last_ci").template get<double>();
    }
    out.push_back(std::move(f));
  }
  return out;
}

inline void write_eval_csv(std::ostream& out, const EvalReport& r, const Provenance& prov) {
  out << prov.comment() << '\n';
  out << "fold,train_first,train_last,test_window,cr_true,cr_pred,cr_prob,ci_true,ci_pred,last_cr,last_ci,error\n";
  for (const auto& f : r.folds) {
    out << f.fold << ',' << f.train_first << ',' << f.train_last << ',' << f.test_window << ',';
    if (f.error.empty()) {
      out << to_string(f.cr_true) << ',' << to_string(f.cr_pred) << ',' << format_double(f.cr_prob) << ','
          << format_double(f.ci_true) << ',' << format_double(f.ci_pred) << ',' << to_string(f.last_cr) << ','
          << format_double(f.last_ci) << ",\n";
    } else {
      std::string msg = f.error;
      for (char& c : msg)
        if (c == ',' || c == '\n') c = ' ';
      out << ",,,,,,," << msg << '\n';
    }
  }
  out << "# summary\n";
  out << "config,accuracy,precision,recall,f_measure,rmse,folds\n";
  auto line = [&](std::string_view name, const Metrics& m) {
    out << name << ',' << format_double(m.classification.accuracy) << ','
        << format_double(m.classification.precision) << ',' << format_double(m.classification.recall) << ','
        << format_double(m.classification.f_measure) << ',' << format_double(m.rmse) << ',' << m.folds << '\n';
  };
  line(std::string(to_string(r.model)) + ":" + r.subset, r.metrics);
  line("Last", r.baseline);
}

}  // namespace popcontest
