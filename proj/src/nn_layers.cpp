#include "polybench/nn/layers.hpp"

#include <cmath>
#include <limits>

namespace polybench::nn {

namespace {

using RowMat =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

void im2col(const float* x, int c, int h, int w, int kernel, int stride,
            int pad, int oh, int ow, float* col) {
  // col is (c*kernel*kernel) x (oh*ow), row-major.
  int row = 0;
  for (int ci = 0; ci < c; ++ci) {
    const float* plane = x + static_cast<ptrdiff_t>(ci) * h * w;
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx, ++row) {
        float* dst = col + static_cast<ptrdiff_t>(row) * oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
          int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) {
            std::fill(dst + oy * ow, dst + (oy + 1) * ow, 0.0f);
            continue;
          }
          const float* src_row = plane + static_cast<ptrdiff_t>(iy) * w;
          for (int ox = 0; ox < ow; ++ox) {
            int ix = ox * stride - pad + kx;
            dst[oy * ow + ox] = (ix >= 0 && ix < w) ? src_row[ix] : 0.0f;
          }
        }
      }
    }
  }
}

void col2im_add(const float* col, int c, int h, int w, int kernel, int stride,
                int pad, int oh, int ow, float* x) {
  int row = 0;
  for (int ci = 0; ci < c; ++ci) {
    float* plane = x + static_cast<ptrdiff_t>(ci) * h * w;
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx, ++row) {
        const float* src = col + static_cast<ptrdiff_t>(row) * oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
          int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) continue;
          float* dst_row = plane + static_cast<ptrdiff_t>(iy) * w;
          for (int ox = 0; ox < ow; ++ox) {
            int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < w) dst_row[ix] += src[oy * ow + ox];
          }
        }
      }
    }
  }
}

}  // namespace

Conv2d::Conv2d(int in_c, int out_c, int kernel, int stride, int pad,
               const std::string& name)
    : in_c_(in_c), out_c_(out_c), kernel_(kernel), stride_(stride), pad_(pad) {
  weight_.init(name + ".weight",
               {out_c, in_c, kernel, kernel});
}

void Conv2d::init_he(Rng& rng) {
  double fan_in = static_cast<double>(in_c_) * kernel_ * kernel_;
  double std = std::sqrt(2.0 / fan_in);
  for (Eigen::Index i = 0; i < weight_.v.size(); ++i)
    weight_.v[i] = static_cast<float>(std * rng.normal());
}

Tensor Conv2d::forward(const Tensor& x) {
  if (x.c != in_c_) throw TrainingError("conv: channel mismatch");
  x_ = x;
  int oh = out_size(x.h), ow = out_size(x.w);
  Tensor y(x.n, out_c_, oh, ow);

  const int crow = in_c_ * kernel_ * kernel_;
  Eigen::VectorXf colbuf(static_cast<Eigen::Index>(crow) * oh * ow);
  CMapMat W(weight_.v.data(), out_c_, crow);
  for (int i = 0; i < x.n; ++i) {
    im2col(x.sample(i), in_c_, x.h, x.w, kernel_, stride_, pad_, oh, ow,
           colbuf.data());
    CMapMat col(colbuf.data(), crow, static_cast<Eigen::Index>(oh) * ow);
    MapMat out(y.sample(i), out_c_, static_cast<Eigen::Index>(oh) * ow);
    out.noalias() = W * col;
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& dy) {
  int oh = dy.h, ow = dy.w;
  const int crow = in_c_ * kernel_ * kernel_;
  Tensor dx(x_.n, x_.c, x_.h, x_.w);

  Eigen::VectorXf colbuf(static_cast<Eigen::Index>(crow) * oh * ow);
  Eigen::VectorXf dcolbuf(static_cast<Eigen::Index>(crow) * oh * ow);
  CMapMat W(weight_.v.data(), out_c_, crow);
  MapMat dW(weight_.g.data(), out_c_, crow);
  for (int i = 0; i < dy.n; ++i) {
    im2col(x_.sample(i), in_c_, x_.h, x_.w, kernel_, stride_, pad_, oh, ow,
           colbuf.data());
    CMapMat col(colbuf.data(), crow, static_cast<Eigen::Index>(oh) * ow);
    CMapMat g(dy.sample(i), out_c_, static_cast<Eigen::Index>(oh) * ow);
    dW.noalias() += g * col.transpose();
    MapMat dcol(dcolbuf.data(), crow, static_cast<Eigen::Index>(oh) * ow);
    dcol.noalias() = W.transpose() * g;
    col2im_add(dcolbuf.data(), in_c_, x_.h, x_.w, kernel_, stride_, pad_, oh,
               ow, dx.sample(i));
  }
  return dx;
}

BatchNorm2d::BatchNorm2d(int channels, const std::string& name) : c_(channels) {
  gamma_.init(name + ".weight", {channels});
  beta_.init(name + ".bias", {channels});
  running_mean_.init(name + ".running_mean", {channels}, /*train=*/false);
  running_var_.init(name + ".running_var", {channels}, /*train=*/false);
  gamma_.v.setOnes();
  running_var_.v.setOnes();
}

Tensor BatchNorm2d::forward(const Tensor& x, bool train) {
  const Eigen::Index plane = static_cast<Eigen::Index>(x.h) * x.w;
  Tensor y(x.n, x.c, x.h, x.w);
  invstd_.resize(c_);

  Eigen::VectorXf mean(c_), var(c_);
  if (train) {
    const double count = static_cast<double>(x.n) * plane;
    for (int ci = 0; ci < c_; ++ci) {
      double s = 0, s2 = 0;
      for (int i = 0; i < x.n; ++i) {
        const float* p = x.sample(i) + ci * plane;
        for (Eigen::Index k = 0; k < plane; ++k) {
          s += p[k];
          s2 += static_cast<double>(p[k]) * p[k];
        }
      }
      double m = s / count;
      double v = s2 / count - m * m;
      if (v < 0) v = 0;
      mean[ci] = static_cast<float>(m);
      var[ci] = static_cast<float>(v);
      running_mean_.v[ci] = static_cast<float>((1 - momentum_) * running_mean_.v[ci] +
                                               momentum_ * m);
      running_var_.v[ci] =
          static_cast<float>((1 - momentum_) * running_var_.v[ci] + momentum_ * v);
    }
    xhat_.resize(x.n, x.c, x.h, x.w);
  } else {
    mean = running_mean_.v;
    var = running_var_.v;
  }

  for (int ci = 0; ci < c_; ++ci)
    invstd_[ci] = 1.0f / std::sqrt(var[ci] + static_cast<float>(eps_));

  for (int i = 0; i < x.n; ++i) {
    for (int ci = 0; ci < c_; ++ci) {
      const float* px = x.sample(i) + ci * plane;
      float* py = y.sample(i) + ci * plane;
      float* ph = train ? xhat_.sample(i) + ci * plane : nullptr;
      float m = mean[ci], is = invstd_[ci], g = gamma_.v[ci], b = beta_.v[ci];
      for (Eigen::Index k = 0; k < plane; ++k) {
        float xh = (px[k] - m) * is;
        if (ph) ph[k] = xh;
        py[k] = g * xh + b;
      }
    }
  }
  return y;
}

Tensor BatchNorm2d::backward(const Tensor& dy) {
  const Eigen::Index plane = static_cast<Eigen::Index>(dy.h) * dy.w;
  const double count = static_cast<double>(dy.n) * plane;
  Tensor dx(dy.n, dy.c, dy.h, dy.w);

  for (int ci = 0; ci < c_; ++ci) {
    double sum_dy = 0, sum_dy_xhat = 0;
    for (int i = 0; i < dy.n; ++i) {
      const float* pd = dy.sample(i) + ci * plane;
      const float* ph = xhat_.sample(i) + ci * plane;
      for (Eigen::Index k = 0; k < plane; ++k) {
        sum_dy += pd[k];
        sum_dy_xhat += static_cast<double>(pd[k]) * ph[k];
      }
    }
    gamma_.g[ci] += static_cast<float>(sum_dy_xhat);
    beta_.g[ci] += static_cast<float>(sum_dy);

    float g_is = gamma_.v[ci] * invstd_[ci];
    float mean_dy = static_cast<float>(sum_dy / count);
    float mean_dy_xhat = static_cast<float>(sum_dy_xhat / count);
    for (int i = 0; i < dy.n; ++i) {
      const float* pd = dy.sample(i) + ci * plane;
      const float* ph = xhat_.sample(i) + ci * plane;
      float* px = dx.sample(i) + ci * plane;
      for (Eigen::Index k = 0; k < plane; ++k)
        px[k] = g_is * (pd[k] - mean_dy - ph[k] * mean_dy_xhat);
    }
  }
  return dx;
}

Tensor ReLU::forward(const Tensor& x) {
  y_ = x;
  y_.data = y_.data.cwiseMax(0.0f);
  return y_;
}

Tensor ReLU::backward(const Tensor& dy) const {
  Tensor dx = dy;
  for (Eigen::Index i = 0; i < dx.data.size(); ++i)
    if (y_.data[i] <= 0.0f) dx.data[i] = 0.0f;
  return dx;
}

Tensor MaxPool2d::forward(const Tensor& x) {
  in_h_ = x.h;
  in_w_ = x.w;
  in_c_ = x.c;
  int oh = (x.h + 2 * pad_ - kernel_) / stride_ + 1;
  int ow = (x.w + 2 * pad_ - kernel_) / stride_ + 1;
  Tensor y(x.n, x.c, oh, ow);
  argmax_.assign(static_cast<size_t>(x.n) * x.c * oh * ow, -1);

  for (int i = 0; i < x.n; ++i) {
    for (int ci = 0; ci < x.c; ++ci) {
      const float* plane = x.sample(i) + static_cast<ptrdiff_t>(ci) * x.h * x.w;
      float* out = y.sample(i) + static_cast<ptrdiff_t>(ci) * oh * ow;
      int* am = argmax_.data() +
                (static_cast<ptrdiff_t>(i) * x.c + ci) * oh * ow;
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          float best = -std::numeric_limits<float>::infinity();
          int best_idx = -1;
          for (int ky = 0; ky < kernel_; ++ky) {
            int iy = oy * stride_ - pad_ + ky;
            if (iy < 0 || iy >= x.h) continue;
            for (int kx = 0; kx < kernel_; ++kx) {
              int ix = ox * stride_ - pad_ + kx;
              if (ix < 0 || ix >= x.w) continue;
              float v = plane[iy * x.w + ix];
              if (v > best) {
                best = v;
                best_idx = iy * x.w + ix;
              }
            }
          }
          out[oy * ow + ox] = best;
          am[oy * ow + ox] = best_idx;
        }
      }
    }
  }
  return y;
}

Tensor MaxPool2d::backward(const Tensor& dy) const {
  Tensor dx(dy.n, in_c_, in_h_, in_w_);
  Eigen::Index plane_out = static_cast<Eigen::Index>(dy.h) * dy.w;
  for (int i = 0; i < dy.n; ++i) {
    for (int ci = 0; ci < in_c_; ++ci) {
      const float* g = dy.sample(i) + ci * plane_out;
      float* out = dx.sample(i) + static_cast<ptrdiff_t>(ci) * in_h_ * in_w_;
      const int* am =
          argmax_.data() + (static_cast<ptrdiff_t>(i) * in_c_ + ci) * plane_out;
      for (Eigen::Index k = 0; k < plane_out; ++k)
        if (am[k] >= 0) out[am[k]] += g[k];
    }
  }
  return dx;
}

Eigen::MatrixXf GlobalAvgPool::forward(const Tensor& x) {
  c_ = x.c;
  h_ = x.h;
  w_ = x.w;
  Eigen::MatrixXf y(x.n, x.c);
  const Eigen::Index plane = static_cast<Eigen::Index>(x.h) * x.w;
  for (int i = 0; i < x.n; ++i)
    for (int ci = 0; ci < x.c; ++ci) {
      const float* p = x.sample(i) + ci * plane;
      y(i, ci) = Eigen::Map<const Eigen::VectorXf>(p, plane).mean();
    }
  return y;
}

Tensor GlobalAvgPool::backward(const Eigen::MatrixXf& dy) const {
  Tensor dx(static_cast<int>(dy.rows()), c_, h_, w_);
  const Eigen::Index plane = static_cast<Eigen::Index>(h_) * w_;
  const float scale = 1.0f / static_cast<float>(plane);
  for (int i = 0; i < dx.n; ++i)
    for (int ci = 0; ci < c_; ++ci) {
      float g = dy(i, ci) * scale;
      float* p = dx.sample(i) + ci * plane;
      for (Eigen::Index k = 0; k < plane; ++k) p[k] = g;
    }
  return dx;
}

Linear::Linear(int in, int out, const std::string& name) : in_(in), out_(out) {
  weight_.init(name + ".weight", {out, in});
  bias_.init(name + ".bias", {out});
}

void Linear::init_he(Rng& rng) {
  double std = std::sqrt(2.0 / in_);
  for (Eigen::Index i = 0; i < weight_.v.size(); ++i)
    weight_.v[i] = static_cast<float>(std * rng.normal());
  bias_.v.setZero();
}

Eigen::MatrixXf Linear::forward(const Eigen::MatrixXf& x) {
  x_ = x;
  CMapMat W(weight_.v.data(), out_, in_);
  Eigen::MatrixXf y = x * W.transpose();
  y.rowwise() += bias_.v.transpose();
  return y;
}

Eigen::MatrixXf Linear::backward(const Eigen::MatrixXf& dy) {
  MapMat dW(weight_.g.data(), out_, in_);
  dW.noalias() += dy.transpose() * x_;
  bias_.g += dy.colwise().sum().transpose();
  CMapMat W(weight_.v.data(), out_, in_);
  return dy * W;
}

CrossEntropyResult softmax_cross_entropy(const Eigen::MatrixXf& logits,
                                         const std::vector<int>& labels) {
  const int n = static_cast<int>(logits.rows());
  if (n == 0 || labels.size() != static_cast<size_t>(n))
    throw TrainingError("cross entropy: batch/labels mismatch");
  CrossEntropyResult res;
  res.dlogits.resize(n, logits.cols());
  double loss = 0;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXf row = logits.row(i);
    float mx = row.maxCoeff();
    Eigen::VectorXf ex = (row.array() - mx).exp();
    float z = ex.sum();
    Eigen::VectorXf p = ex / z;
    loss -= std::log(std::max(p[labels[i]], 1e-30f));
    res.dlogits.row(i) = p.transpose() / static_cast<float>(n);
    res.dlogits(i, labels[i]) -= 1.0f / static_cast<float>(n);
  }
  res.loss = loss / n;
  if (!std::isfinite(res.loss)) throw TrainingError("non-finite loss");
  return res;
}

}  // namespace polybench::nn
