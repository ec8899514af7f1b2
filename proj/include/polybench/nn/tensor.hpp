#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace polybench::nn {

// NCHW float tensor backed by a flat Eigen vector.
struct Tensor {
  int n = 0, c = 0, h = 0, w = 0;
  Eigen::VectorXf data;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_) { resize(n_, c_, h_, w_); }

  void resize(int n_, int c_, int h_, int w_) {
    n = n_;
    c = c_;
    h = h_;
    w = w_;
    data.setZero(static_cast<Eigen::Index>(n) * c * h * w);
  }

  Eigen::Index chw() const { return static_cast<Eigen::Index>(c) * h * w; }
  float* sample(int i) { return data.data() + i * chw(); }
  const float* sample(int i) const { return data.data() + i * chw(); }
};

// One learnable (or tracked) tensor with its gradient.
struct Param {
  std::string name;
  std::vector<int64_t> shape;
  Eigen::VectorXf v;
  Eigen::VectorXf g;
  bool trainable = true;

  void init(std::string n, std::vector<int64_t> s, bool train = true) {
    name = std::move(n);
    shape = std::move(s);
    int64_t total = 1;
    for (auto d : shape) total *= d;
    v.setZero(total);
    g.setZero(total);
    trainable = train;
  }
};

}  // namespace polybench::nn
