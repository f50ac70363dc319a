#pragma once

#include <Eigen/Core>

#include "facefake/errors.hpp"

namespace facefake::nn {

/// Dense NCHW activation tensor. Samples are contiguous, channel planes are
/// contiguous within a sample.
template <typename S>
struct Tensor {
  using Array = Eigen::Array<S, Eigen::Dynamic, 1>;

  int n = 0, c = 0, h = 0, w = 0;
  Array data;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_) : n(n_), c(c_), h(h_), w(w_) {
    data = Array::Zero(static_cast<Eigen::Index>(n_) * c_ * h_ * w_);
  }

  Eigen::Index size() const { return data.size(); }
  Eigen::Index plane_size() const { return static_cast<Eigen::Index>(h) * w; }
  Eigen::Index sample_size() const { return static_cast<Eigen::Index>(c) * h * w; }

  S* sample(int i) { return data.data() + i * sample_size(); }
  const S* sample(int i) const { return data.data() + i * sample_size(); }

  S* plane(int i, int ch) { return sample(i) + ch * plane_size(); }
  const S* plane(int i, int ch) const { return sample(i) + ch * plane_size(); }

  Eigen::Map<Array> plane_map(int i, int ch) {
    return Eigen::Map<Array>(plane(i, ch), plane_size());
  }
  Eigen::Map<const Array> plane_map(int i, int ch) const {
    return Eigen::Map<const Array>(plane(i, ch), plane_size());
  }

  bool same_shape(const Tensor& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }

  template <typename T>
  Tensor<T> cast() const {
    Tensor<T> out;
    out.n = n;
    out.c = c;
    out.h = h;
    out.w = w;
    out.data = data.template cast<T>();
    return out;
  }
};

template <typename S>
using MatrixRM =
    Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace facefake::nn
