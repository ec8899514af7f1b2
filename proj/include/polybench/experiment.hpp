#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "polybench/cnn.hpp"
#include "polybench/dataset.hpp"
#include "polybench/kv.hpp"
#include "polybench/metrics.hpp"
#include "polybench/svm.hpp"

namespace polybench {

inline constexpr const char* kToolVersion = "polybench 0.1.0";

// Full run description. Defaults reproduce the reference protocol: C grid
// {0.01..1000}, lr 0.001/0.0001, max epochs 50/20, 12 folds at 2:1:1.
struct ExperimentConfig {
  uint64_t master_seed = 1;
  Difficulty difficulty = Difficulty::hard;
  FoldMode fold_mode = FoldMode::grouped;
  std::vector<std::string> classifiers = {"svm", "resnet_scratch",
                                          "resnet_pretrained"};

  KernelConfig kernel;                       // degree 3, gamma auto, coef0 0
  std::vector<double> c_grid = default_C_grid();
  int inner_folds = 3;

  CNNConfig scratch_cfg = CNNConfig::preset(Regime::scratch, 1);
  CNNConfig pretrained_cfg = CNNConfig::preset(Regime::pretrained, 1);
  ProxyPretrainConfig proxy_cfg;
  std::string pretrained_weights;  // empty -> proxy-pretrain on demand

  std::string output_dir = "runs";
  int fold_begin = 0;
  int fold_end = 12;
  // Reduced-epoch quick profile: fold 0 only, few epochs; documented in the
  // README for desk-scale runs of the full pipeline.
  bool quick = false;
  int jobs = 1;
  bool force = false;

  void apply_quick_profile();

  KvFile to_kv() const;
  static ExperimentConfig from_kv(const KvFile& kv);
  void save(const std::string& path) const;
  static ExperimentConfig load(const std::string& path);

  // Digest of the canonical serialization; identifies the run directory.
  std::string digest() const;
  std::string run_id() const;
  std::string run_dir() const;
};

struct RunPaths {
  std::string root;
  std::string manifest;
  std::string foldplan;
  std::string images_dir;
  std::string models_dir;
  std::string reports_dir;
  std::string record;

  static RunPaths for_config(const ExperimentConfig& cfg);
};

// Stage results land on disk; these return the key artifact for chaining.
DatasetManifest cmd_generate(const ExperimentConfig& cfg);
FoldPlan cmd_split(const ExperimentConfig& cfg);
void cmd_train(const ExperimentConfig& cfg, const std::string& classifier);
std::map<std::string, AggregateReport> cmd_evaluate(const ExperimentConfig& cfg);
void cmd_report(const ExperimentConfig& cfg);
std::map<std::string, AggregateReport> cmd_repro_paper(const ExperimentConfig& cfg);

uint64_t stage_seed(uint64_t master_seed, const std::string& stage, int fold_id,
                    const std::string& classifier);

}  // namespace polybench
