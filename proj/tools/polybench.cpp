// polybench: batch orchestrator for the synthetic polyp-classification
// pipeline. Subcommands mirror the pipeline stages; artifacts land under
// runs/<run_id>/.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>

#include "polybench/experiment.hpp"

using namespace polybench;

namespace {

struct CommonOpts {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<std::string> fold_mode;
  std::optional<std::string> difficulty;
  std::optional<int> jobs;
  bool force = false;
  bool quick = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "experiment config file");
  cmd->add_option("--seed", opts.seed, "master seed override");
  cmd->add_option("--fold-mode", opts.fold_mode, "grouped|pooled");
  cmd->add_option("--difficulty", opts.difficulty, "easy|hard");
  cmd->add_option("--jobs", opts.jobs, "parallel fold workers");
  cmd->add_flag("--force", opts.force, "rebuild even if artifacts exist");
  cmd->add_flag("--quick", opts.quick,
                "reduced-epoch quick profile (fold 0 only)");
}

ExperimentConfig resolve(const CommonOpts& opts) {
  ExperimentConfig cfg = opts.config_path.empty()
                             ? ExperimentConfig{}
                             : ExperimentConfig::load(opts.config_path);
  if (opts.seed) cfg.master_seed = *opts.seed;
  if (opts.fold_mode) cfg.fold_mode = fold_mode_from_name(*opts.fold_mode);
  if (opts.difficulty) cfg.difficulty = difficulty_from_name(*opts.difficulty);
  if (opts.jobs) cfg.jobs = *opts.jobs;
  cfg.force = opts.force;
  if (opts.quick) cfg.apply_quick_profile();
  return cfg;
}

void print_summary(const std::map<std::string, AggregateReport>& result) {
  for (const auto& [cls, agg] : result) {
    std::printf("%-18s test_acc=%.4f sensitivity=%.4f precision=%.4f", cls.c_str(),
                agg.mean_accuracy, agg.mean_sensitivity, agg.mean_precision);
    if (!std::isnan(agg.mean_val_accuracy))
      std::printf(" val_acc=%.4f", agg.mean_val_accuracy);
    std::printf("\n");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"polybench: synthetic tactile polyp-classification pipeline"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string train_classifier = "all";
  bool dump_defaults = false;

  auto* gen = app.add_subcommand("generate", "synthesize phantoms + augmented dataset");
  auto* split = app.add_subcommand("split", "build the 12-fold 2:1:1 plan");
  auto* train = app.add_subcommand("train", "train classifiers per fold");
  train->add_option("--classifier", train_classifier,
                    "svm|resnet_scratch|resnet_pretrained|all");
  auto* eval = app.add_subcommand("evaluate", "score models on test folds");
  auto* report = app.add_subcommand("report", "render tables and heatmaps");
  auto* repro = app.add_subcommand("repro-paper",
                                   "full pipeline, all classifiers, all folds");
  auto* config = app.add_subcommand("config", "config utilities");
  config->add_flag("--dump-defaults", dump_defaults, "print default config");

  for (auto* cmd : {gen, split, train, eval, report, repro}) add_common(cmd, opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (config->parsed()) {
      std::cout << ExperimentConfig{}.to_kv().serialize();
      return 0;
    }
    ExperimentConfig cfg = resolve(opts);
    if (gen->parsed()) {
      auto manifest = cmd_generate(cfg);
      std::printf("manifest: %zu samples -> %s\n", manifest.samples.size(),
                  RunPaths::for_config(cfg).manifest.c_str());
    } else if (split->parsed()) {
      auto plan = cmd_split(cfg);
      std::printf("fold plan: %zu folds -> %s\n", plan.folds.size(),
                  RunPaths::for_config(cfg).foldplan.c_str());
    } else if (train->parsed()) {
      cmd_train(cfg, train_classifier);
      std::printf("models -> %s\n", RunPaths::for_config(cfg).models_dir.c_str());
    } else if (eval->parsed()) {
      print_summary(cmd_evaluate(cfg));
    } else if (report->parsed()) {
      cmd_report(cfg);
      std::printf("reports -> %s\n", RunPaths::for_config(cfg).reports_dir.c_str());
    } else if (repro->parsed()) {
      print_summary(cmd_repro_paper(cfg));
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DigestMismatch& e) {
    std::cerr << "digest mismatch: " << e.what() << "\n";
    return 4;
  } catch (const TrainingError& e) {
    std::cerr << "training failure: " << e.what() << "\n";
    return 5;
  } catch (const IoError& e) {
    std::cerr << "missing or unreadable artifact: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
