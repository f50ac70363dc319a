#pragma once

#include <Eigen/Core>
#include <cmath>

namespace facefake::nn {

/// Mean binary cross-entropy on logits against (possibly smoothed) targets
/// in [0, 1]. Numerically stable: loss_i = softplus(z) - t*z, gradient
/// d/dz = (sigmoid(z) - t)/n.
template <typename S>
struct BceResult {
  S loss;
  Eigen::Array<S, Eigen::Dynamic, 1> dlogits;
};

template <typename S>
BceResult<S> bce_with_logits(const Eigen::Array<S, Eigen::Dynamic, 1>& logits,
                             const Eigen::Array<S, Eigen::Dynamic, 1>& targets) {
  const Eigen::Index n = logits.size();
  BceResult<S> out;
  out.dlogits.resize(n);
  S total = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const S z = logits[i];
    const S t = targets[i];
    // softplus(z) - t*z, with softplus(z) = max(z,0) + log1p(exp(-|z|))
    const S softplus = std::max(z, S(0)) + std::log1p(std::exp(-std::abs(z)));
    total += softplus - t * z;
    const S sig = S(1) / (S(1) + std::exp(-z));
    out.dlogits[i] = (sig - t) / static_cast<S>(n);
  }
  out.loss = total / static_cast<S>(n);
  return out;
}

}  // namespace facefake::nn
