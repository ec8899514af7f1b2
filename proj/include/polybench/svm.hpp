#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "polybench/image.hpp"
#include "polybench/phantom.hpp"

namespace polybench {

struct KernelConfig {
  int degree = 3;
  double gamma = 0;  // <= 0 means 1 / (n_features * feature_variance)
  double coef0 = 0;
};

inline constexpr int kFlatFeatures = kImageSize * kImageSize * 3;  // 150528

// Row-major flatten of 224x224x3, scaled to [0,1].
Eigen::VectorXf flatten_features(const TexturalImage& img);

// (gamma <x,y> + coef0)^degree; `gamma` here must already be resolved.
double poly_kernel(const Eigen::VectorXf& x, const Eigen::VectorXf& y,
                   const KernelConfig& cfg);

// One binary one-vs-one classifier. dual_coef holds alpha_i * y_i for each
// support vector; decision(x) = sum_i dual_coef_i K(sv_i, x) + bias, positive
// means class_a.
struct PairClassifier {
  int class_a = 0;
  int class_b = 0;
  std::vector<int> sv_rows;        // rows into SVMModel::support_vectors
  std::vector<int> train_indices;  // original training-set row of each SV
  Eigen::VectorXd dual_coef;
  double bias = 0;
  int iterations = 0;
  bool converged = true;
};

struct SVMModel {
  KernelConfig kernel;
  double resolved_gamma = 0;
  double C = 1.0;
  std::vector<PolypClass> classes;
  // Unique support vectors shared across the 6 pair classifiers, one per row.
  Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
      support_vectors;
  std::vector<PairClassifier> pairs;
  std::string feature_norm = "pixels/255";

  void save(const std::string& path) const;
  static SVMModel load(const std::string& path);
};

struct SmoOptions {
  double kkt_tol = 1e-3;
  int max_iterations = 100000;
};

// One-vs-one fit; rows of X are samples. Throws on single-class input.
// Non-convergence of a pair solver is recorded on the PairClassifier.
SVMModel svm_fit(const Eigen::MatrixXf& X, const std::vector<PolypClass>& y,
                 double C, const KernelConfig& cfg, const SmoOptions& opts = {});

std::vector<PolypClass> svm_predict(const SVMModel& model,
                                    const Eigen::MatrixXf& X);

struct GridSearchResult {
  double best_C = 0;
  std::vector<std::pair<double, double>> scores;  // (C, mean inner-CV accuracy)
};

// Stratified inner cross-validation over the training rows only; ties go to
// the smaller C.
GridSearchResult grid_search_C(const Eigen::MatrixXf& X,
                               const std::vector<PolypClass>& y,
                               const std::vector<double>& grid, int folds_inner,
                               uint64_t seed, const KernelConfig& cfg,
                               const SmoOptions& opts = {});

inline const std::vector<double>& default_C_grid() {
  static const std::vector<double> grid = {0.01, 0.1, 1, 10, 100, 1000};
  return grid;
}

}  // namespace polybench
