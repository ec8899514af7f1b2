#pragma once

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "polybench/phantom.hpp"

namespace polybench {

using ConfusionCounts = Eigen::Matrix<int64_t, 4, 4>;

struct LabelPairSet {
  std::vector<PolypClass> y_true;
  std::vector<PolypClass> y_pred;
};

// counts(t, p) = number of samples with true class t predicted as p.
ConfusionCounts confusion_counts(const LabelPairSet& pairs);

// Row-normalized (sensitivity) and column-normalized (precision) matrices.
// Zero rows / columns come back all-zero and are listed in the flag vectors.
struct PairwiseMatrices {
  Eigen::Matrix4d sensitivity;
  Eigen::Matrix4d precision;
  std::vector<PolypClass> zero_true_classes;       // no true samples
  std::vector<PolypClass> zero_predicted_classes;  // never predicted
};
PairwiseMatrices pairwise_matrices(const ConfusionCounts& counts);

// Accuracy, macro sensitivity (recall), macro precision. Classes with a zero
// denominator are excluded from the macro mean.
struct SummaryMetrics {
  double accuracy = 0;
  double sensitivity = 0;
  double precision = 0;
};
SummaryMetrics summary_metrics(const ConfusionCounts& counts);

struct EvalReport {
  double accuracy = 0;
  double sensitivity = 0;
  double precision = 0;
  Eigen::Matrix4d sensitivity_matrix = Eigen::Matrix4d::Zero();
  Eigen::Matrix4d precision_matrix = Eigen::Matrix4d::Zero();
  ConfusionCounts counts = ConfusionCounts::Zero();
  int64_t n_samples = 0;
  double val_accuracy = std::nan("");  // NaN renders as "N/A"

  bool operator==(const EvalReport& o) const;
};

EvalReport evaluate(const LabelPairSet& pairs);

// Scalars averaged per fold; matrices reported both ways: renormalized from
// pooled counts and as the element-wise mean of per-fold matrices.
struct AggregateReport {
  std::vector<EvalReport> per_fold;
  EvalReport pooled;  // from summed counts
  double mean_accuracy = 0;
  double mean_sensitivity = 0;
  double mean_precision = 0;
  double mean_val_accuracy = std::nan("");
  Eigen::Matrix4d mean_sensitivity_matrix = Eigen::Matrix4d::Zero();
  Eigen::Matrix4d mean_precision_matrix = Eigen::Matrix4d::Zero();
};

AggregateReport aggregate_folds(const std::vector<EvalReport>& reports);

void report_to_json(const EvalReport& r, nlohmann::json& j);
EvalReport report_from_json(const nlohmann::json& j);

// Writes metrics.json, table.csv (Table-style rows x classifier columns) and
// two annotated heatmap PNGs per classifier into out_dir.
void render_report(const std::map<std::string, AggregateReport>& by_classifier,
                   const std::string& out_dir);

// Heatmap of a 4x4 matrix with each cell annotated to 2 decimals.
void write_heatmap_png(const Eigen::Matrix4d& matrix, const std::string& title,
                       const std::string& path);

}  // namespace polybench
