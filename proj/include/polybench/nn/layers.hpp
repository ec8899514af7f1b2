#pragma once

#include <vector>

#include "polybench/common.hpp"
#include "polybench/nn/tensor.hpp"

namespace polybench::nn {

// Layers cache what their backward pass needs; a layer instance therefore
// belongs to exactly one in-flight training step.

class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(int in_c, int out_c, int kernel, int stride, int pad,
         const std::string& name);

  void init_he(Rng& rng);
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);  // accumulates weight grads

  Param& weight() { return weight_; }
  std::vector<Param*> params() { return {&weight_}; }
  int out_size(int in) const { return (in + 2 * pad_ - kernel_) / stride_ + 1; }

 private:
  int in_c_ = 0, out_c_ = 0, kernel_ = 0, stride_ = 0, pad_ = 0;
  Param weight_;  // (out_c, in_c*k*k)
  Tensor x_;      // cached input
};

class BatchNorm2d {
 public:
  BatchNorm2d() = default;
  explicit BatchNorm2d(int channels, const std::string& name);

  Tensor forward(const Tensor& x, bool train);
  Tensor backward(const Tensor& dy);

  std::vector<Param*> params() {
    return {&gamma_, &beta_, &running_mean_, &running_var_};
  }

 private:
  int c_ = 0;
  double momentum_ = 0.1, eps_ = 1e-5;
  Param gamma_, beta_, running_mean_, running_var_;
  Tensor xhat_;
  Eigen::VectorXf invstd_;
};

class ReLU {
 public:
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy) const;

 private:
  Tensor y_;
};

class MaxPool2d {
 public:
  MaxPool2d(int kernel, int stride, int pad)
      : kernel_(kernel), stride_(stride), pad_(pad) {}

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy) const;

 private:
  int kernel_, stride_, pad_;
  int in_h_ = 0, in_w_ = 0, in_c_ = 0;
  std::vector<int> argmax_;
};

class GlobalAvgPool {
 public:
  // (N,C,H,W) -> (N,C) matrix.
  Eigen::MatrixXf forward(const Tensor& x);
  Tensor backward(const Eigen::MatrixXf& dy) const;

 private:
  int c_ = 0, h_ = 0, w_ = 0;
};

class Linear {
 public:
  Linear() = default;
  Linear(int in, int out, const std::string& name);

  void init_he(Rng& rng);
  Eigen::MatrixXf forward(const Eigen::MatrixXf& x);  // rows = samples
  Eigen::MatrixXf backward(const Eigen::MatrixXf& dy);

  std::vector<Param*> params() { return {&weight_, &bias_}; }
  Param& weight() { return weight_; }
  Param& bias() { return bias_; }

 private:
  int in_ = 0, out_ = 0;
  Param weight_;  // (out, in)
  Param bias_;    // (out)
  Eigen::MatrixXf x_;
};

// Mean cross-entropy over the batch; dlogits is d(loss)/d(logits).
struct CrossEntropyResult {
  double loss = 0;
  Eigen::MatrixXf dlogits;
};
CrossEntropyResult softmax_cross_entropy(const Eigen::MatrixXf& logits,
                                         const std::vector<int>& labels);

}  // namespace polybench::nn
