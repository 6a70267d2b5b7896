#pragma once

// Batch stages: synth -> featurize -> train -> evaluate -> report.
// Each stage reads its inputs from files and writes its outputs into the
// configured output directory, so stages can be rerun independently.

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "eval.hpp"
#include "features.hpp"
#include "ingest.hpp"
#include "model.hpp"
#include "synth.hpp"

namespace popcontest {

struct FeaturizeResult {
  WindowedDataset windowed{WindowSpec{}, 0};
  CoarseSeries coarse;
  FeatureMatrix matrix;  // all columns
  std::size_t rejected_lines = 0;
};

inline std::string dump_json(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

// synth: reviews.jsonl, microblogs.jsonl, downloads.jsonl, truth.json.
inline SynthOutput run_synth(const PipelineConfig& cfg) {
  cfg.validate();
  const Scenario sc = load_scenario(cfg);
  const auto fc = load_feature_config(cfg);
  const auto out = generate(sc, SynthVocabulary::from(fc));
  const auto dir = cfg.out_dir();
  std::ostringstream r, m, d;
  write_jsonl(r, out.reviews);
  write_jsonl(m, out.microblogs);
  write_jsonl(d, out.downloads);
  write_file(dir / "reviews.jsonl", r.str());
  write_file(dir / "microblogs.jsonl", m.str());
  write_file(dir / "downloads.jsonl", d.str());
  write_file(dir / "truth.json", dump_json(truth_json(sc, out, {cfg.hash(), sc.seed})));
  return out;
}

inline FeaturizeResult featurize(const PipelineConfig& cfg) {
  cfg.validate();
  const auto fc = load_feature_config(cfg);
  const ParseOptions opts{cfg.strict};
  auto rin = open_input(cfg.reviews_path());
  auto min = open_input(cfg.microblogs_path());
  auto din = open_input(cfg.downloads_path());
  const auto reviews = parse_reviews(rin, opts);
  const auto posts = parse_microblogs(min, opts);
  const auto downloads = parse_downloads(din, opts);

  FeaturizeResult res;
  res.rejected_lines = reviews.rejected.size() + posts.rejected.size() + downloads.rejected.size();
  const auto spec = cfg.window_spec();
  res.windowed = bucket(reviews.records, posts.records, downloads.records, spec);
  if (res.windowed.window_count() == 0) throw ConfigError("inputs", "no records fall inside the window span");
  res.coarse = coarse_features(res.windowed, fc, cfg.threads);
  const auto labels = compute_labels(res.windowed);
  res.matrix = build_matrix(res.coarse, labels, FeatureSubset{}, cfg.fine_basis, cfg.runs, spec);
  return res;
}

// featurize: features.csv, labels.csv, featurize.json.
inline FeaturizeResult run_featurize(const PipelineConfig& cfg) {
  auto res = featurize(cfg);
  const auto prov = cfg.provenance();
  const auto dir = cfg.out_dir();
  std::ostringstream f, l;
  write_features_csv(f, res.matrix, prov);
  write_labels_csv(l, res.matrix, prov);
  write_file(dir / "features.csv", f.str());
  write_file(dir / "labels.csv", l.str());

  const auto imp = res.coarse.imputations();
  const auto& sk = res.windowed.skipped();
  std::size_t degenerate = 0;
  for (const auto& lab : res.matrix.labels) degenerate += lab.degenerate;
  nlohmann::ordered_json meta;
  meta["config_hash"] = prov.config_hash;
  meta["seed"] = prov.seed;
  meta["windows"] = res.windowed.window_count();
  meta["sub_windows_per_window"] = res.windowed.sub_windows_per_window();
  meta["columns"] = res.matrix.column_count();
  meta["rejected_lines"] = res.rejected_lines;
  meta["skipped_out_of_span"] = {{"reviews", sk.reviews}, {"microblogs", sk.microblogs}, {"downloads", sk.downloads}};
  meta["degenerate_windows"] = degenerate;
  meta["imputed_sub_windows"] = {{"mean_rating_A", imp.rating_A},   {"mean_rating_B", imp.rating_B},
                                 {"sentiment_A", imp.sentiment_A},  {"sentiment_B", imp.sentiment_B},
                                 {"r_ba", imp.ratio_ba},            {"r_ab", imp.ratio_ab},
                                 {"dn_norm", imp.empty_reviews}};
  meta["defaults"] = {{"mean_rating", kImputedRating},
                      {"sentiment", "uniform (1/3, 1/3, 1/3)"},
                      {"ratio_zero_denominator", 0.0},
                      {"degenerate_pc", 0.0}};
  write_file(dir / "featurize.json", dump_json(meta));
  return res;
}

inline FeatureMatrix load_matrix(const PipelineConfig& cfg) {
  const auto dir = cfg.out_dir();
  auto f = open_input(dir / "features.csv");
  auto l = open_input(dir / "labels.csv");
  return read_feature_matrix(f, l);
}

struct TrainedModels {
  Forest classifier;
  Forest regressor;
  std::vector<Column> columns;
};

// train: forest.json with a classifier (cr) and a regressor (ci) fitted on every window.
inline TrainedModels run_train(const PipelineConfig& cfg) {
  cfg.validate();
  const auto subset = cfg.feature_subset();
  const auto m = load_matrix(cfg).select(subset);
  std::vector<double> y_cr, y_ci;
  for (const auto& l : m.labels) {
    y_cr.push_back(l.cr == Contest::APositive ? 1.0 : 0.0);
    y_ci.push_back(l.ci);
  }
  ForestParams cls = cfg.forest_params();
  ForestParams reg = cls;
  reg.seed = cls.seed + 1;
  TrainedModels t;
  t.columns = m.columns;
  t.classifier = fit_forest(m.rows, y_cr, Task::Classification, cls, cfg.threads);
  t.regressor = fit_forest(m.rows, y_ci, Task::Regression, reg, cfg.threads);

  nlohmann::ordered_json j;
  j["config_hash"] = cfg.hash();
  j["seed"] = cfg.seed;
  j["subset"] = subset.name();
  nlohmann::ordered_json cols = nlohmann::ordered_json::array();
  for (const auto& c : m.columns) cols.push_back(c.header());
  j["columns"] = std::move(cols);
  j["classifier"] = to_json(t.classifier);
  j["regressor"] = to_json(t.regressor);
  write_file(cfg.out_dir() / "forest.json", j.dump() + "\n");
  return t;
}

// evaluate: eval.json and eval.csv.
inline EvalReport run_evaluate(const PipelineConfig& cfg) {
  cfg.validate();
  const auto subset = cfg.feature_subset();
  const auto m = load_matrix(cfg).select(subset);
  const auto report = rolling_evaluate(m, cfg.scheme, cfg.forest_params(), {cfg.model, cfg.threads}, subset.name());
  const auto prov = cfg.provenance();
  std::ostringstream csv;
  write_eval_csv(csv, report, prov);
  write_file(cfg.out_dir() / "eval.json", dump_json(to_json(report, prov)));
  write_file(cfg.out_dir() / "eval.csv", csv.str());
  return report;
}

struct ReportResult {
  std::vector<AblationRow> rows;
};

// report: report.csv and report.json. Consumes features.csv/labels.csv, and
// eval.json when present.
inline ReportResult run_report(const PipelineConfig& cfg) {
  cfg.validate();
  const auto full = load_matrix(cfg);
  const auto params = cfg.forest_params();
  const EvalOptions rf{ModelKind::RandomForest, cfg.threads};

  ReportResult res;
  res.rows = ablation_run(full, cfg.ablation_subsets(), cfg.scheme, params, rf, cfg.ablation_names());
  // Algorithm comparison on the configured subset: DT next to RF, then Last.
  const auto subset = cfg.feature_subset();
  const auto sel = full.select(subset);
  const auto dt = rolling_evaluate(sel, cfg.scheme, params, {ModelKind::DecisionTree, cfg.threads}, subset.name());
  const auto forest = rolling_evaluate(sel, cfg.scheme, params, rf, subset.name());
  const AblationRow last = res.rows.back();
  res.rows.pop_back();
  res.rows.push_back({subset.name(), "DT", dt.metrics, dt.failed_folds()});
  res.rows.push_back({subset.name(), "RF", forest.metrics, forest.failed_folds()});
  res.rows.push_back(last);

  const auto prov = cfg.provenance();
  std::ostringstream csv;
  csv << prov.comment() << '\n' << "config,model,accuracy,precision,recall,f_measure,rmse,folds,failed_folds\n";
  nlohmann::ordered_json table = nlohmann::ordered_json::array();
  for (const auto& r : res.rows) {
    const auto& c = r.metrics.classification;
    csv << r.name << ',' << r.model << ',' << format_double(c.accuracy) << ',' << format_double(c.precision) << ','
        << format_double(c.recall) << ',' << format_double(c.f_measure) << ',' << format_double(r.metrics.rmse)
        << ',' << r.metrics.folds << ',' << r.failed_folds << '\n';
    nlohmann::ordered_json row;
    row["config"] = r.name;
    row["model"] = r.model;
    row["metrics"] = to_json(r.metrics);
    row["failed_folds"] = r.failed_folds;
    table.push_back(std::move(row));
  }

  nlohmann::ordered_json weekly = nlohmann::ordered_json::array();
  for (std::size_t w = 0; w < full.labels.size(); ++w) {
    const auto& l = full.labels[w];
    weekly.push_back({{"window", w},
                      {"start", format_rfc3339(full.window_starts[w])},
                      {"d_A", l.d_A},
                      {"d_B", l.d_B},
                      {"pc", l.pc},
                      {"cr", to_string(l.cr)},
                      {"ci", l.ci},
                      {"degenerate", l.degenerate}});
  }

  nlohmann::ordered_json j;
  j["config_hash"] = prov.config_hash;
  j["seed"] = prov.seed;
  j["windows"] = full.row_count();
  j["train_weeks"] = cfg.scheme.train_weeks;
  j["table"] = std::move(table);
  j["weekly_downloads"] = std::move(weekly);
  const auto eval_path = cfg.out_dir() / "eval.json";
  if (fs::exists(eval_path)) {
    const auto ej = nlohmann::ordered_json::parse(read_file(eval_path));
    j["evaluate"] = {{"model", ej.at("model")},
                     {"subset", ej.at("subset")},
                     {"fold_count", ej.at("fold_count")},
                     {"metrics", ej.at("metrics")},
                     {"baseline", ej.at("baseline")}};
  }
  write_file(cfg.out_dir() / "report.csv", csv.str());
  write_file(cfg.out_dir() / "report.json", dump_json(j));
  return res;
}

}  // namespace popcontest
