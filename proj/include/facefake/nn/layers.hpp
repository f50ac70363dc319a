#pragma once

#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "facefake/nn/parallel.hpp"
#include "facefake/nn/tensor.hpp"

namespace facefake::nn {

/// Named learnable tensor (or persistent buffer) with its gradient and the
/// optimizer's velocity slot.
template <typename S>
struct Param {
  using Array = Eigen::Array<S, Eigen::Dynamic, 1>;

  std::string name;
  std::vector<int> shape;
  Array value;
  Array grad;
  Array velocity;

  Param() = default;
  Param(std::string name_, std::vector<int> shape_) : name(std::move(name_)), shape(std::move(shape_)) {
    Eigen::Index n = 1;
    for (int d : shape) n *= d;
    value = Array::Zero(n);
    grad = Array::Zero(n);
  }

  void ensure_velocity() {
    if (velocity.size() != value.size()) velocity = Array::Zero(value.size());
  }
};

template <typename S>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor<S> forward(const Tensor<S>& x, bool training) = 0;
  virtual Tensor<S> backward(const Tensor<S>& dy) = 0;
  virtual void collect_params(std::vector<Param<S>*>& out) {}
  virtual void collect_buffers(std::vector<Param<S>*>& out) {}
  // Static (c, h, w) shape propagation; no tensors involved.
  virtual std::array<int, 3> output_shape(std::array<int, 3> in) const = 0;
};

namespace detail {

inline int conv_out_dim(int in, int kernel, int stride) {
  const int pad = kernel / 2;
  return (in + 2 * pad - kernel) / stride + 1;
}

// Gathers the (cin_g*k*k) x (oh*ow) patch matrix for one sample and group.
template <typename S>
void im2col(const S* src, int cin_g, int h, int w, int kernel, int stride,
            MatrixRM<S>& col) {
  const int pad = kernel / 2;
  const int oh = conv_out_dim(h, kernel, stride);
  const int ow = conv_out_dim(w, kernel, stride);
  col.setZero(cin_g * kernel * kernel, static_cast<Eigen::Index>(oh) * ow);
  for (int ci = 0; ci < cin_g; ++ci) {
    const S* plane = src + static_cast<Eigen::Index>(ci) * h * w;
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx) {
        S* row = col.data() +
                 static_cast<Eigen::Index>((ci * kernel + ky) * kernel + kx) * oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) continue;
          const int base_ox = 0 * stride - pad + kx;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = base_ox + ox * stride;
            if (ix < 0 || ix >= w) continue;
            row[oy * ow + ox] = plane[iy * w + ix];
          }
        }
      }
    }
  }
}

// Scatter-add of a patch matrix back into an image gradient.
template <typename S>
void col2im(const MatrixRM<S>& col, int cin_g, int h, int w, int kernel,
            int stride, S* dst) {
  const int pad = kernel / 2;
  const int oh = conv_out_dim(h, kernel, stride);
  const int ow = conv_out_dim(w, kernel, stride);
  for (int ci = 0; ci < cin_g; ++ci) {
    S* plane = dst + static_cast<Eigen::Index>(ci) * h * w;
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx) {
        const S* row = col.data() +
                       static_cast<Eigen::Index>((ci * kernel + ky) * kernel + kx) * oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) continue;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix < 0 || ix >= w) continue;
            plane[iy * w + ix] += row[oy * ow + ox];
          }
        }
      }
    }
  }
}

}  // namespace detail

/// 2-D convolution with symmetric "same" padding (pad = kernel/2).
/// groups == in_channels gives the depthwise case.
template <typename S>
class Conv2d : public Layer<S> {
 public:
  Conv2d(const std::string& name, int cin, int cout, int kernel, int stride,
         int groups = 1, bool bias = false)
      : cin_(cin), cout_(cout), kernel_(kernel), stride_(stride), groups_(groups),
        weight_(name + ".weight",
                std::vector<int>{cout, cin / groups, kernel, kernel}) {
    if (cin % groups != 0 || cout % groups != 0) {
      throw ConfigError("conv channels must divide groups");
    }
    if (bias) bias_ = std::make_unique<Param<S>>(name + ".bias", std::vector<int>{cout});
  }

  Tensor<S> forward(const Tensor<S>& x, bool) override {
    if (x.c != cin_) throw DataError("conv input channel mismatch");
    x_ = x;
    const int oh = detail::conv_out_dim(x.h, kernel_, stride_);
    const int ow = detail::conv_out_dim(x.w, kernel_, stride_);
    Tensor<S> y(x.n, cout_, oh, ow);
    const int cin_g = cin_ / groups_;
    const int cout_g = cout_ / groups_;
    const Eigen::Index ohw = static_cast<Eigen::Index>(oh) * ow;
    parallel_for(x.n, [&](int i) {
      MatrixRM<S> col;
      for (int g = 0; g < groups_; ++g) {
        detail::im2col(x.plane(i, g * cin_g), cin_g, x.h, x.w, kernel_, stride_, col);
        Eigen::Map<const MatrixRM<S>> wmat(
            weight_.value.data() +
                static_cast<Eigen::Index>(g) * cout_g * cin_g * kernel_ * kernel_,
            cout_g, cin_g * kernel_ * kernel_);
        Eigen::Map<MatrixRM<S>> out(y.plane(i, g * cout_g), cout_g, ohw);
        out.noalias() = wmat * col;
      }
      if (bias_) {
        for (int ch = 0; ch < cout_; ++ch) {
          y.plane_map(i, ch) += bias_->value[ch];
        }
      }
    });
    return y;
  }

  Tensor<S> backward(const Tensor<S>& dy) override {
    const int cin_g = cin_ / groups_;
    const int cout_g = cout_ / groups_;
    const Eigen::Index ohw = dy.plane_size();
    Tensor<S> dx(x_.n, x_.c, x_.h, x_.w);

    // Per-sample weight-gradient slices, reduced in sample order below so
    // the sum does not depend on the thread count.
    std::vector<typename Param<S>::Array> dws(
        x_.n, Param<S>::Array::Zero(weight_.value.size()));
    std::vector<typename Param<S>::Array> dbs;
    if (bias_) dbs.assign(x_.n, Param<S>::Array::Zero(cout_));

    parallel_for(x_.n, [&](int i) {
      MatrixRM<S> col, dcol;
      for (int g = 0; g < groups_; ++g) {
        detail::im2col(x_.plane(i, g * cin_g), cin_g, x_.h, x_.w, kernel_, stride_, col);
        Eigen::Map<const MatrixRM<S>> dout(dy.plane(i, g * cout_g), cout_g, ohw);
        const Eigen::Index wsize =
            static_cast<Eigen::Index>(cout_g) * cin_g * kernel_ * kernel_;
        Eigen::Map<MatrixRM<S>> dw(dws[i].data() + g * wsize, cout_g,
                                   cin_g * kernel_ * kernel_);
        dw.noalias() = dout * col.transpose();
        Eigen::Map<const MatrixRM<S>> wmat(weight_.value.data() + g * wsize, cout_g,
                                           cin_g * kernel_ * kernel_);
        dcol.noalias() = wmat.transpose() * dout;
        detail::col2im(dcol, cin_g, x_.h, x_.w, kernel_, stride_,
                       dx.plane(i, g * cin_g));
      }
      if (bias_) {
        for (int ch = 0; ch < cout_; ++ch) {
          dbs[i][ch] = dy.plane_map(i, ch).sum();
        }
      }
    });
    for (int i = 0; i < x_.n; ++i) weight_.grad += dws[i];
    if (bias_) {
      for (int i = 0; i < x_.n; ++i) bias_->grad += dbs[i];
    }
    return dx;
  }

  void collect_params(std::vector<Param<S>*>& out) override {
    out.push_back(&weight_);
    if (bias_) out.push_back(bias_.get());
  }

  std::array<int, 3> output_shape(std::array<int, 3> in) const override {
    return {cout_, detail::conv_out_dim(in[1], kernel_, stride_),
            detail::conv_out_dim(in[2], kernel_, stride_)};
  }

  Param<S>& weight() { return weight_; }

 private:
  int cin_, cout_, kernel_, stride_, groups_;
  Param<S> weight_;
  std::unique_ptr<Param<S>> bias_;
  Tensor<S> x_;
};

/// Per-channel batch normalization over (N, H, W) with running statistics
/// for evaluation mode. eps and momentum follow the convention of the
/// backbone family this project scales.
template <typename S>
class BatchNorm2d : public Layer<S> {
 public:
  BatchNorm2d(const std::string& name, int channels, S eps = S(1e-3),
              S momentum = S(0.1))
      : channels_(channels), eps_(eps), momentum_(momentum),
        gamma_(name + ".gamma", std::vector<int>{channels}),
        beta_(name + ".beta", std::vector<int>{channels}),
        running_mean_(name + ".running_mean", std::vector<int>{channels}),
        running_var_(name + ".running_var", std::vector<int>{channels}) {
    gamma_.value.setOnes();
    running_var_.value.setOnes();
  }

  Tensor<S> forward(const Tensor<S>& x, bool training) override {
    if (x.c != channels_) throw DataError("batchnorm channel mismatch");
    Tensor<S> y(x.n, x.c, x.h, x.w);
    training_ = training;
    if (training) {
      xhat_ = Tensor<S>(x.n, x.c, x.h, x.w);
      inv_std_.resize(channels_);
      const S m = static_cast<S>(x.n) * x.h * x.w;
      batch_m_ = m;
      for (int ch = 0; ch < channels_; ++ch) {
        S mean = 0;
        for (int i = 0; i < x.n; ++i) mean += x.plane_map(i, ch).sum();
        mean /= m;
        S var = 0;
        for (int i = 0; i < x.n; ++i) {
          var += (x.plane_map(i, ch) - mean).square().sum();
        }
        var /= m;
        const S inv = S(1) / std::sqrt(var + eps_);
        inv_std_[ch] = inv;
        for (int i = 0; i < x.n; ++i) {
          auto xh = xhat_.plane_map(i, ch);
          xh = (x.plane_map(i, ch) - mean) * inv;
          y.plane_map(i, ch) = gamma_.value[ch] * xh + beta_.value[ch];
        }
        running_mean_.value[ch] =
            (S(1) - momentum_) * running_mean_.value[ch] + momentum_ * mean;
        running_var_.value[ch] =
            (S(1) - momentum_) * running_var_.value[ch] + momentum_ * var;
      }
    } else {
      for (int ch = 0; ch < channels_; ++ch) {
        const S inv = S(1) / std::sqrt(running_var_.value[ch] + eps_);
        const S scale = gamma_.value[ch] * inv;
        const S shift = beta_.value[ch] - running_mean_.value[ch] * scale;
        for (int i = 0; i < x.n; ++i) {
          y.plane_map(i, ch) = x.plane_map(i, ch) * scale + shift;
        }
      }
    }
    return y;
  }

  Tensor<S> backward(const Tensor<S>& dy) override {
    Tensor<S> dx(dy.n, dy.c, dy.h, dy.w);
    if (!training_) {
      for (int ch = 0; ch < channels_; ++ch) {
        const S scale =
            gamma_.value[ch] / std::sqrt(running_var_.value[ch] + eps_);
        for (int i = 0; i < dy.n; ++i) {
          dx.plane_map(i, ch) = dy.plane_map(i, ch) * scale;
        }
      }
      return dx;
    }
    const S m = batch_m_;
    for (int ch = 0; ch < channels_; ++ch) {
      S sum_dy = 0, sum_dy_xhat = 0;
      for (int i = 0; i < dy.n; ++i) {
        sum_dy += dy.plane_map(i, ch).sum();
        sum_dy_xhat += (dy.plane_map(i, ch) * xhat_.plane_map(i, ch)).sum();
      }
      gamma_.grad[ch] += sum_dy_xhat;
      beta_.grad[ch] += sum_dy;
      const S k = gamma_.value[ch] * inv_std_[ch] / m;
      for (int i = 0; i < dy.n; ++i) {
        dx.plane_map(i, ch) =
            k * (m * dy.plane_map(i, ch) - sum_dy -
                 xhat_.plane_map(i, ch) * sum_dy_xhat);
      }
    }
    return dx;
  }

  void collect_params(std::vector<Param<S>*>& out) override {
    out.push_back(&gamma_);
    out.push_back(&beta_);
  }
  void collect_buffers(std::vector<Param<S>*>& out) override {
    out.push_back(&running_mean_);
    out.push_back(&running_var_);
  }

  std::array<int, 3> output_shape(std::array<int, 3> in) const override {
    return in;
  }

 private:
  int channels_;
  S eps_, momentum_;
  Param<S> gamma_, beta_, running_mean_, running_var_;
  Tensor<S> xhat_;
  std::vector<S> inv_std_;
  S batch_m_ = 1;
  bool training_ = false;
};

/// Sigmoid-weighted linear unit, x * sigmoid(x).
template <typename S>
class SiLU : public Layer<S> {
 public:
  Tensor<S> forward(const Tensor<S>& x, bool) override {
    x_ = x;
    Tensor<S> y = x;
    y.data = x.data / (S(1) + (-x.data).exp());
    return y;
  }
  Tensor<S> backward(const Tensor<S>& dy) override {
    Tensor<S> dx = dy;
    const auto sig = (S(1) / (S(1) + (-x_.data).exp())).eval();
    dx.data = dy.data * sig * (S(1) + x_.data * (S(1) - sig));
    return dx;
  }
  std::array<int, 3> output_shape(std::array<int, 3> in) const override {
    return in;
  }

 private:
  Tensor<S> x_;
};

/// Fully connected layer on (N, C, 1, 1) tensors.
template <typename S>
class Linear : public Layer<S> {
 public:
  Linear(const std::string& name, int cin, int cout)
      : cin_(cin), cout_(cout),
        weight_(name + ".weight", std::vector<int>{cout, cin}),
        bias_(name + ".bias", std::vector<int>{cout}) {}

  Tensor<S> forward(const Tensor<S>& x, bool) override {
    if (x.c != cin_ || x.h != 1 || x.w != 1) {
      throw DataError("linear layer expects pooled (N, C, 1, 1) input");
    }
    x_ = x;
    Tensor<S> y(x.n, cout_, 1, 1);
    Eigen::Map<const MatrixRM<S>> xin(x.data.data(), x.n, cin_);
    Eigen::Map<const MatrixRM<S>> wmat(weight_.value.data(), cout_, cin_);
    Eigen::Map<MatrixRM<S>> out(y.data.data(), x.n, cout_);
    out.noalias() = xin * wmat.transpose();
    out.rowwise() +=
        Eigen::Map<const Eigen::Matrix<S, 1, Eigen::Dynamic>>(bias_.value.data(), cout_);
    return y;
  }

  Tensor<S> backward(const Tensor<S>& dy) override {
    Tensor<S> dx(x_.n, cin_, 1, 1);
    Eigen::Map<const MatrixRM<S>> dout(dy.data.data(), dy.n, cout_);
    Eigen::Map<const MatrixRM<S>> xin(x_.data.data(), x_.n, cin_);
    Eigen::Map<const MatrixRM<S>> wmat(weight_.value.data(), cout_, cin_);
    Eigen::Map<MatrixRM<S>> dW(weight_.grad.data(), cout_, cin_);
    dW.noalias() += dout.transpose() * xin;
    Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, 1>> db(bias_.grad.data(), cout_);
    db.noalias() += dout.colwise().sum().transpose();
    Eigen::Map<MatrixRM<S>> dxm(dx.data.data(), x_.n, cin_);
    dxm.noalias() = dout * wmat;
    return dx;
  }

  void collect_params(std::vector<Param<S>*>& out) override {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }
  std::array<int, 3> output_shape(std::array<int, 3> in) const override {
    return {cout_, 1, 1};
  }

  Param<S>& weight() { return weight_; }
  Param<S>& bias() { return bias_; }

 private:
  int cin_, cout_;
  Param<S> weight_, bias_;
  Tensor<S> x_;
};

template <typename S>
class GlobalAvgPool : public Layer<S> {
 public:
  Tensor<S> forward(const Tensor<S>& x, bool) override {
    in_shape_ = {x.n, x.c, x.h, x.w};
    Tensor<S> y(x.n, x.c, 1, 1);
    const S scale = S(1) / (static_cast<S>(x.h) * x.w);
    for (int i = 0; i < x.n; ++i) {
      for (int ch = 0; ch < x.c; ++ch) {
        y.data[static_cast<Eigen::Index>(i) * x.c + ch] =
            x.plane_map(i, ch).sum() * scale;
      }
    }
    return y;
  }
  Tensor<S> backward(const Tensor<S>& dy) override {
    auto [n, c, h, w] = in_shape_;
    Tensor<S> dx(n, c, h, w);
    const S scale = S(1) / (static_cast<S>(h) * w);
    for (int i = 0; i < n; ++i) {
      for (int ch = 0; ch < c; ++ch) {
        dx.plane_map(i, ch).setConstant(
            dy.data[static_cast<Eigen::Index>(i) * c + ch] * scale);
      }
    }
    return dx;
  }
  std::array<int, 3> output_shape(std::array<int, 3> in) const override {
    return {in[0], 1, 1};
  }

 private:
  std::array<int, 4> in_shape_{};
};

/// Inverted dropout; identity in evaluation mode.
template <typename S>
class Dropout : public Layer<S> {
 public:
  Dropout(S rate, std::mt19937_64* rng) : rate_(rate), rng_(rng) {}

  Tensor<S> forward(const Tensor<S>& x, bool training) override {
    if (!training || rate_ <= 0) {
      active_ = false;
      return x;
    }
    active_ = true;
    mask_ = Tensor<S>(x.n, x.c, x.h, x.w);
    std::bernoulli_distribution keep(1.0 - static_cast<double>(rate_));
    const S scale = S(1) / (S(1) - rate_);
    for (Eigen::Index i = 0; i < mask_.size(); ++i) {
      mask_.data[i] = keep(*rng_) ? scale : S(0);
    }
    Tensor<S> y = x;
    y.data *= mask_.data;
    return y;
  }
  Tensor<S> backward(const Tensor<S>& dy) override {
    if (!active_) return dy;
    Tensor<S> dx = dy;
    dx.data *= mask_.data;
    return dx;
  }
  std::array<int, 3> output_shape(std::array<int, 3> in) const override {
    return in;
  }

 private:
  S rate_;
  std::mt19937_64* rng_;
  Tensor<S> mask_;
  bool active_ = false;
};

/// Squeeze-and-excitation: channel gates from globally pooled features
/// through a two-layer bottleneck.
template <typename S>
class SqueezeExcite : public Layer<S> {
 public:
  SqueezeExcite(const std::string& name, int channels, int reduced)
      : channels_(channels),
        fc1_(name + ".fc1", channels, reduced),
        fc2_(name + ".fc2", reduced, channels) {}

  Tensor<S> forward(const Tensor<S>& x, bool training) override {
    x_ = x;
    Tensor<S> pooled = pool_.forward(x, training);
    Tensor<S> a = silu_.forward(fc1_.forward(pooled, training), training);
    Tensor<S> z = fc2_.forward(a, training);
    gate_ = z;
    gate_.data = S(1) / (S(1) + (-z.data).exp());
    Tensor<S> y(x.n, x.c, x.h, x.w);
    for (int i = 0; i < x.n; ++i) {
      for (int ch = 0; ch < x.c; ++ch) {
        y.plane_map(i, ch) =
            x.plane_map(i, ch) * gate_.data[static_cast<Eigen::Index>(i) * x.c + ch];
      }
    }
    return y;
  }

  Tensor<S> backward(const Tensor<S>& dy) override {
    Tensor<S> dgate(dy.n, channels_, 1, 1);
    Tensor<S> dx(dy.n, dy.c, dy.h, dy.w);
    for (int i = 0; i < dy.n; ++i) {
      for (int ch = 0; ch < channels_; ++ch) {
        const Eigen::Index gi = static_cast<Eigen::Index>(i) * channels_ + ch;
        dgate.data[gi] = (dy.plane_map(i, ch) * x_.plane_map(i, ch)).sum();
        dx.plane_map(i, ch) = dy.plane_map(i, ch) * gate_.data[gi];
      }
    }
    // through the sigmoid
    dgate.data *= gate_.data * (S(1) - gate_.data);
    Tensor<S> dpooled = fc1_.backward(silu_.backward(fc2_.backward(dgate)));
    Tensor<S> dx_pool = pool_.backward(dpooled);
    dx.data += dx_pool.data;
    return dx;
  }

  void collect_params(std::vector<Param<S>*>& out) override {
    fc1_.collect_params(out);
    fc2_.collect_params(out);
  }
  std::array<int, 3> output_shape(std::array<int, 3> in) const override {
    return in;
  }

 private:
  int channels_;
  GlobalAvgPool<S> pool_;
  Linear<S> fc1_, fc2_;
  SiLU<S> silu_;
  Tensor<S> x_, gate_;
};

}  // namespace facefake::nn
