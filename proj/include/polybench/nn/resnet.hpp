#pragma once

#include <array>
#include <memory>

#include "polybench/nn/layers.hpp"

namespace polybench::nn {

// conv3x3-bn-relu-conv3x3-bn plus identity (or strided 1x1 conv) shortcut.
class BasicBlock {
 public:
  BasicBlock(int in_c, int out_c, int stride, const std::string& name);

  void init_he(Rng& rng);
  Tensor forward(const Tensor& x, bool train);
  Tensor backward(const Tensor& dy);
  std::vector<Param*> params();

 private:
  Conv2d conv1_, conv2_;
  BatchNorm2d bn1_, bn2_;
  ReLU relu1_, relu2_;
  bool has_downsample_ = false;
  Conv2d down_conv_;
  BatchNorm2d down_bn_;
};

// Standard 18-layer residual network: 7x7/2 stem, 4 stages of 2 basic blocks
// (64/128/256/512 channels, spatial 56/28/14/7 from a 224 input), global
// average pool, linear head.
class ResNet18 {
 public:
  explicit ResNet18(int num_classes = 4);

  void init_scratch(uint64_t seed);
  // Fresh head only; backbone left as-is (for pretrained loading).
  void init_head(uint64_t seed);

  Eigen::MatrixXf forward(const Tensor& x, bool train);
  void backward(const Eigen::MatrixXf& dlogits);

  std::vector<Param*> params();
  std::vector<Param*> backbone_params();  // everything except fc.*
  int num_classes() const { return num_classes_; }

 private:
  int num_classes_;
  Conv2d conv1_;
  BatchNorm2d bn1_;
  ReLU relu_;
  MaxPool2d pool_{3, 2, 1};
  std::vector<std::unique_ptr<BasicBlock>> blocks_;
  GlobalAvgPool gap_;
  Linear fc_;
};

}  // namespace polybench::nn
