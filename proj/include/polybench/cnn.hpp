#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "polybench/nn/resnet.hpp"
#include "polybench/phantom.hpp"

namespace polybench {

enum class Regime { scratch, pretrained };

const char* regime_name(Regime r);
Regime regime_from_name(const std::string& name);

struct CNNConfig {
  Regime regime = Regime::scratch;
  double learning_rate = 0.001;
  int max_epochs = 50;
  int batch_size = 32;
  double momentum = 0.9;
  int patience = 10;
  uint64_t seed = 1;
  // Per-channel input normalization; scratch regime recomputes these from the
  // training set, pretrained regime keeps the pretraining statistics.
  std::array<float, 3> norm_mean{0.5f, 0.5f, 0.5f};
  std::array<float, 3> norm_std{0.25f, 0.25f, 0.25f};

  static CNNConfig preset(Regime r, uint64_t seed);
};

struct CNNModel {
  std::unique_ptr<nn::ResNet18> net;
  Regime regime = Regime::scratch;
  std::array<float, 3> norm_mean{0.5f, 0.5f, 0.5f};
  std::array<float, 3> norm_std{0.25f, 0.25f, 0.25f};
  std::string source_checksum;  // backbone checksum in pretrained regime

  void save(const std::string& path, uint64_t seed) const;
};

// scratch: seeded He initialization. pretrained: backbone tensors loaded from
// weights_path, fresh seeded 4-way head.
CNNModel build_resnet18(int num_classes, Regime regime, uint64_t seed,
                        const std::string& weights_path = "");
CNNModel load_cnn(const std::string& path);

struct EpochRecord {
  double train_loss = 0;
  double val_loss = 0;
  double val_accuracy = 0;
};

struct TrainingHistory {
  std::vector<EpochRecord> epochs;
  int stopped_epoch = 0;  // 1-based count of epochs actually run
  int best_epoch = 0;     // 1-based epoch with minimum val_loss

  void save(const std::string& path) const;
};

// SGD with momentum, seeded per-epoch shuffling, early stopping on
// validation loss; the model ends up holding the best-epoch parameters.
TrainingHistory train_cnn(CNNModel& model,
                          const std::vector<const TexturalImage*>& train_imgs,
                          const std::vector<PolypClass>& train_labels,
                          const std::vector<const TexturalImage*>& val_imgs,
                          const std::vector<PolypClass>& val_labels,
                          const CNNConfig& cfg);

struct CNNPrediction {
  std::vector<PolypClass> labels;
  Eigen::MatrixXf scores;  // per-class logits
};

CNNPrediction cnn_predict(CNNModel& model,
                          const std::vector<const TexturalImage*>& images,
                          int batch_size = 32);

// Mean cross-entropy and accuracy of the model on a labeled set.
std::pair<double, double> cnn_evaluate(
    CNNModel& model, const std::vector<const TexturalImage*>& images,
    const std::vector<PolypClass>& labels, int batch_size = 32);

std::array<float, 3> channel_mean(const std::vector<const TexturalImage*>& imgs);
std::array<float, 3> channel_std(const std::vector<const TexturalImage*>& imgs,
                                 const std::array<float, 3>& mean);

struct ProxyPretrainConfig {
  int num_classes = 4;
  int images_per_class = 96;
  int epochs = 20;
  int batch_size = 32;
  double learning_rate = 0.01;
  double momentum = 0.9;
  uint64_t seed = 7;
};

// Offline substitute for vendored ImageNet weights: trains the backbone on a
// procedurally generated multi-class texture corpus and writes a weights file
// tagged regime="proxy". Returns the backbone checksum.
std::string proxy_pretrain(const ProxyPretrainConfig& cfg,
                           const std::string& out_path);

}  // namespace polybench
