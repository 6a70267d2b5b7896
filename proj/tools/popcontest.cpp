// popcontest: synth | featurize | train | evaluate | report
//
// Exit codes: 0 success, 1 internal failure or failed evaluation folds,
// 2 usage, configuration, missing-file or input-data errors.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "popcontest/pipeline.hpp"

namespace {

using namespace popcontest;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> subset;
  std::optional<std::size_t> train_weeks;
  std::optional<std::string> out;
  bool strict = false;
  std::optional<std::string> fine_basis;
  std::optional<unsigned> threads;
};

PipelineConfig resolve_config(const Overrides& o) {
  PipelineConfig cfg = o.config.empty() ? PipelineConfig{} : load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.subset) {
    cfg.subset.clear();
    std::string cur;
    for (char c : *o.subset + ",") {
      if (c == ',') {
        if (!cur.empty()) cfg.subset.push_back(cur);
        cur.clear();
      } else if (c != ' ') {
        cur.push_back(c);
      }
    }
  }
  if (o.train_weeks) cfg.scheme.train_weeks = *o.train_weeks;
  if (o.out) cfg.out = std::filesystem::absolute(*o.out).string();
  if (o.strict) cfg.strict = true;
  if (o.fine_basis) cfg.fine_basis = FineBasis::parse(*o.fine_basis);
  if (o.threads) {
    if (*o.threads < 1) throw ConfigError("threads", "must be >= 1");
    cfg.threads = *o.threads;
  }
  cfg.validate();
  return cfg;
}

int run_stage(const std::string& stage, const PipelineConfig& cfg) {
  if (stage == "synth") {
    const auto out = run_synth(cfg);
    std::cout << "synth: " << out.reviews.size() << " reviews, " << out.microblogs.size() << " microblogs, "
              << out.downloads.size() << " download records, " << out.truth.size() << " weeks -> "
              << cfg.out_dir().string() << "\n";
    return 0;
  }
  if (stage == "featurize") {
    const auto res = run_featurize(cfg);
    std::cout << "featurize: " << res.matrix.row_count() << " windows x " << res.matrix.column_count()
              << " columns, " << res.windowed.skipped().total() << " out-of-span records, " << res.rejected_lines
              << " rejected lines\n";
    return 0;
  }
  if (stage == "train") {
    const auto t = run_train(cfg);
    std::cout << "train: " << t.classifier.trees().size() << " + " << t.regressor.trees().size() << " trees on "
              << t.columns.size() << " columns\n";
    return 0;
  }
  if (stage == "evaluate") {
    const auto r = run_evaluate(cfg);
    const auto& c = r.metrics.classification;
    std::cout << "evaluate: " << r.folds.size() << " folds, accuracy " << c.accuracy << ", f " << c.f_measure
              << ", rmse " << r.metrics.rmse << " (Last: accuracy " << r.baseline.classification.accuracy
              << ", rmse " << r.baseline.rmse << ")\n";
    if (r.failed_folds() > 0) {
      std::cerr << "evaluate: " << r.failed_folds() << " fold(s) failed\n";
      return 1;
    }
    return 0;
  }
  if (stage == "report") {
    const auto r = run_report(cfg);
    std::cout << "config\tmodel\taccuracy\tf_measure\trmse\n";
    std::size_t failed = 0;
    for (const auto& row : r.rows) {
      std::cout << row.name << '\t' << row.model << '\t' << row.metrics.classification.accuracy << '\t'
                << row.metrics.classification.f_measure << '\t' << row.metrics.rmse << '\n';
      failed += row.failed_folds;
    }
    return failed > 0 ? 1 : 0;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Predict the popularity contest between two rival apps from review and microblog streams"};
  app.require_subcommand(1);
  Overrides o;
  std::uint64_t seed = 0;
  std::string subset, out, fine_basis;
  std::size_t train_weeks = 0;
  unsigned threads = 1;

  CLI::Option* seed_opt = nullptr;
  CLI::Option* subset_opt = nullptr;
  CLI::Option* tw_opt = nullptr;
  CLI::Option* out_opt = nullptr;
  CLI::Option* fb_opt = nullptr;
  CLI::Option* th_opt = nullptr;

  app.add_option("--config", o.config, "Pipeline config JSON");
  seed_opt = app.add_option("--seed", seed, "Model seed");
  subset_opt = app.add_option("--subset", subset, "Feature tags, e.g. CF,FF,AF,MF");
  tw_opt = app.add_option("--train-weeks", train_weeks, "Training windows per fold");
  out_opt = app.add_option("--out", out, "Output directory");
  app.add_flag("--strict", o.strict, "Fail on the first invalid input record");
  fb_opt = app.add_option("--fine-basis", fine_basis, "daily | trailing:L");
  th_opt = app.add_option("--threads", threads, "Worker threads (outputs do not depend on it)");

  for (const char* name : {"synth", "featurize", "train", "evaluate", "report"}) {
    auto* sub = app.add_subcommand(name);
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 2;
  }

  if (*seed_opt) o.seed = seed;
  if (*subset_opt) o.subset = subset;
  if (*tw_opt) o.train_weeks = train_weeks;
  if (*out_opt) o.out = out;
  if (*fb_opt) o.fine_basis = fine_basis;
  if (*th_opt) o.threads = threads;

  const std::string stage = app.get_subcommands().front()->get_name();
  try {
    const auto cfg = resolve_config(o);
    return run_stage(stage, cfg);
  } catch (const FileError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error in '" << e.field() << "': " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
