#pragma once

#include <memory>
#include <optional>

#include "facefake/nn/layers.hpp"
#include "facefake/scaling.hpp"

namespace facefake::nn {

/// Inverted-bottleneck block: optional pointwise expansion, depthwise
/// convolution, squeeze-excitation, pointwise projection, and a residual
/// with per-sample stochastic depth when the shape allows it.
template <typename S>
class MBConvBlock : public Layer<S> {
 public:
  MBConvBlock(const std::string& name, int cin, int cout, int expansion,
              int kernel, int stride, float se_ratio, S drop_connect,
              std::mt19937_64* rng)
      : cin_(cin), cout_(cout), stride_(stride),
        residual_(stride == 1 && cin == cout),
        drop_connect_(drop_connect), rng_(rng),
        dw_(name + ".dw.conv", cin * expansion, cin * expansion, kernel, stride,
            cin * expansion),
        dw_bn_(name + ".dw.bn", cin * expansion),
        se_(name + ".se", cin * expansion,
            std::max(1, static_cast<int>(cin * se_ratio))),
        project_(name + ".project.conv", cin * expansion, cout, 1, 1),
        project_bn_(name + ".project.bn", cout) {
    if (expansion > 1) {
      expand_ = std::make_unique<Conv2d<S>>(name + ".expand.conv", cin,
                                            cin * expansion, 1, 1);
      expand_bn_ = std::make_unique<BatchNorm2d<S>>(name + ".expand.bn",
                                                    cin * expansion);
      expand_act_ = std::make_unique<SiLU<S>>();
    }
  }

  Tensor<S> forward(const Tensor<S>& x, bool training) override {
    Tensor<S> h = x;
    if (expand_) {
      h = expand_act_->forward(expand_bn_->forward(expand_->forward(h, training), training), training);
    }
    h = dw_act_.forward(dw_bn_.forward(dw_.forward(h, training), training), training);
    h = se_.forward(h, training);
    h = project_bn_.forward(project_.forward(h, training), training);
    if (!residual_) return h;

    keep_mask_.reset();
    if (training && drop_connect_ > 0) {
      keep_mask_.emplace(Eigen::Array<S, Eigen::Dynamic, 1>::Zero(x.n));
      std::bernoulli_distribution keep(1.0 - static_cast<double>(drop_connect_));
      const S scale = S(1) / (S(1) - drop_connect_);
      for (int i = 0; i < x.n; ++i) (*keep_mask_)[i] = keep(*rng_) ? scale : S(0);
      for (int i = 0; i < x.n; ++i) {
        Eigen::Map<Eigen::Array<S, Eigen::Dynamic, 1>> sample(h.sample(i),
                                                              h.sample_size());
        sample *= (*keep_mask_)[i];
      }
    }
    Tensor<S> y = h;
    y.data += x.data;
    return y;
  }

  Tensor<S> backward(const Tensor<S>& dy) override {
    Tensor<S> dh = dy;
    if (residual_ && keep_mask_) {
      for (int i = 0; i < dh.n; ++i) {
        Eigen::Map<Eigen::Array<S, Eigen::Dynamic, 1>> sample(dh.sample(i),
                                                              dh.sample_size());
        sample *= (*keep_mask_)[i];
      }
    }
    Tensor<S> dx = project_.backward(project_bn_.backward(dh));
    dx = se_.backward(dx);
    dx = dw_.backward(dw_bn_.backward(dw_act_.backward(dx)));
    if (expand_) {
      dx = expand_->backward(expand_bn_->backward(expand_act_->backward(dx)));
    }
    if (residual_) dx.data += dy.data;
    return dx;
  }

  void collect_params(std::vector<Param<S>*>& out) override {
    if (expand_) {
      expand_->collect_params(out);
      expand_bn_->collect_params(out);
    }
    dw_.collect_params(out);
    dw_bn_.collect_params(out);
    se_.collect_params(out);
    project_.collect_params(out);
    project_bn_.collect_params(out);
  }
  void collect_buffers(std::vector<Param<S>*>& out) override {
    if (expand_bn_) expand_bn_->collect_buffers(out);
    dw_bn_.collect_buffers(out);
    project_bn_.collect_buffers(out);
  }

  std::array<int, 3> output_shape(std::array<int, 3> in) const override {
    auto shape = dw_.output_shape({in[0], in[1], in[2]});
    return {cout_, shape[1], shape[2]};
  }

  bool has_residual() const { return residual_; }
  int in_channels() const { return cin_; }
  int out_channels() const { return cout_; }
  int stride() const { return stride_; }

 private:
  int cin_, cout_, stride_;
  bool residual_;
  S drop_connect_;
  std::mt19937_64* rng_;
  std::unique_ptr<Conv2d<S>> expand_;
  std::unique_ptr<BatchNorm2d<S>> expand_bn_;
  std::unique_ptr<SiLU<S>> expand_act_;
  Conv2d<S> dw_;
  BatchNorm2d<S> dw_bn_;
  SiLU<S> dw_act_;
  SqueezeExcite<S> se_;
  Conv2d<S> project_;
  BatchNorm2d<S> project_bn_;
  std::optional<Eigen::Array<S, Eigen::Dynamic, 1>> keep_mask_;
};

/// Compound-scaled backbone with a single-logit head. Input batches must
/// already be resized to config().input_resolution and normalized; the model
/// never resizes silently.
template <typename S>
class EfficientNet {
 public:
  explicit EfficientNet(const BackboneConfig& cfg, uint64_t seed = 0)
      : cfg_(cfg), rng_(seed),
        stem_(std::make_unique<Conv2d<S>>("stem.conv", cfg.in_channels,
                                          cfg.stem_channels, 3, 2)),
        stem_bn_(std::make_unique<BatchNorm2d<S>>("stem.bn", cfg.stem_channels)),
        pool_(std::make_unique<GlobalAvgPool<S>>()),
        classifier_(std::make_unique<Linear<S>>("classifier", cfg.head_channels, 1)) {
    if (cfg.stages.size() != 7) {
      throw ConfigError("backbone plan must have exactly 7 stages");
    }
    int total_blocks = 0;
    for (const StageSpec& st : cfg.stages) total_blocks += st.repeats;
    int channels = cfg.stem_channels;
    int index = 0;
    for (const StageSpec& st : cfg.stages) {
      for (int r = 0; r < st.repeats; ++r) {
        const int stride = r == 0 ? st.stride : 1;
        const S rate = total_blocks > 1
                           ? static_cast<S>(cfg.drop_connect_rate) * index /
                                 total_blocks
                           : S(0);
        blocks_.push_back(std::make_unique<MBConvBlock<S>>(
            "block" + std::to_string(index), channels, st.channels_out,
            st.expansion, st.kernel, stride, st.se_ratio, rate, &rng_));
        channels = st.channels_out;
        ++index;
      }
    }
    head_conv_ = std::make_unique<Conv2d<S>>("head.conv", channels,
                                             cfg.head_channels, 1, 1);
    head_bn_ = std::make_unique<BatchNorm2d<S>>("head.bn", cfg.head_channels);
    dropout_ = std::make_unique<Dropout<S>>(static_cast<S>(cfg.dropout), &rng_);
    init_params(seed);
  }

  /// Raw logits; apply sigmoid for probabilities.
  Eigen::Array<S, Eigen::Dynamic, 1> forward_logits(const Tensor<S>& x,
                                                    bool training) {
    if (x.n < 1) throw DataError("forward needs a nonempty batch");
    if (x.c != cfg_.in_channels || x.h != cfg_.input_resolution ||
        x.w != cfg_.input_resolution) {
      throw DataError("input resolution mismatch: model expects " +
                      std::to_string(cfg_.input_resolution) + "x" +
                      std::to_string(cfg_.input_resolution));
    }
    Tensor<S> h = stem_act_.forward(
        stem_bn_->forward(stem_->forward(x, training), training), training);
    for (auto& block : blocks_) h = block->forward(h, training);
    h = head_act_.forward(head_bn_->forward(head_conv_->forward(h, training), training),
                          training);
    h = dropout_->forward(pool_->forward(h, training), training);
    Tensor<S> logits = classifier_->forward(h, training);
    return logits.data;
  }

  Eigen::Array<S, Eigen::Dynamic, 1> forward_probs(const Tensor<S>& x,
                                                   bool training = false) {
    auto z = forward_logits(x, training);
    return S(1) / (S(1) + (-z).exp());
  }

  /// Backpropagates d(loss)/d(logit); gradients accumulate into params.
  void backward_from_logits(const Eigen::Array<S, Eigen::Dynamic, 1>& dlogits) {
    Tensor<S> dz(static_cast<int>(dlogits.size()), 1, 1, 1);
    dz.data = dlogits;
    Tensor<S> dh = dropout_->backward(classifier_->backward(dz));
    dh = pool_->backward(dh);
    dh = head_conv_->backward(head_bn_->backward(head_act_.backward(dh)));
    for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) {
      dh = (*it)->backward(dh);
    }
    stem_->backward(stem_bn_->backward(stem_act_.backward(dh)));
  }

  std::vector<Param<S>*> params() {
    std::vector<Param<S>*> out;
    stem_->collect_params(out);
    stem_bn_->collect_params(out);
    for (auto& b : blocks_) b->collect_params(out);
    head_conv_->collect_params(out);
    head_bn_->collect_params(out);
    classifier_->collect_params(out);
    return out;
  }

  std::vector<Param<S>*> buffers() {
    std::vector<Param<S>*> out;
    stem_bn_->collect_buffers(out);
    for (auto& b : blocks_) b->collect_buffers(out);
    head_bn_->collect_buffers(out);
    return out;
  }

  void zero_grads() {
    for (Param<S>* p : params()) p->grad.setZero();
  }

  /// Activation shapes after stem, each block, head and pool, computed from
  /// the layer objects without running data through them.
  std::vector<PlanActivation> trace_shapes() const {
    std::vector<PlanActivation> out;
    std::array<int, 3> shape{cfg_.in_channels, cfg_.input_resolution,
                             cfg_.input_resolution};
    shape = stem_->output_shape(shape);
    out.push_back({"stem", shape[0], shape[1], shape[2]});
    for (size_t i = 0; i < blocks_.size(); ++i) {
      shape = blocks_[i]->output_shape(shape);
      out.push_back({"block" + std::to_string(i), shape[0], shape[1], shape[2]});
    }
    shape = head_conv_->output_shape(shape);
    out.push_back({"head", shape[0], shape[1], shape[2]});
    shape = pool_->output_shape(shape);
    out.push_back({"pool", shape[0], shape[1], shape[2]});
    return out;
  }

  const BackboneConfig& config() const { return cfg_; }
  const std::vector<std::unique_ptr<MBConvBlock<S>>>& blocks() const {
    return blocks_;
  }
  std::mt19937_64& rng() { return rng_; }

 private:
  void init_params(uint64_t seed) {
    std::mt19937_64 init_rng(seed ^ 0x9e3779b97f4a7c15ULL);
    for (Param<S>* p : params()) {
      if (p->shape.size() == 4) {  // conv weights: fan-out normal
        const int cout = p->shape[0];
        const int k = p->shape[2];
        const double fan_out = static_cast<double>(k) * k * cout;
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_out));
        for (Eigen::Index i = 0; i < p->value.size(); ++i) {
          p->value[i] = static_cast<S>(dist(init_rng));
        }
      } else if (p->shape.size() == 2) {  // linear weights
        const double bound = 1.0 / std::sqrt(static_cast<double>(p->shape[1]));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (Eigen::Index i = 0; i < p->value.size(); ++i) {
          p->value[i] = static_cast<S>(dist(init_rng));
        }
      }
      // 1-D tensors keep their constructed values (BN gamma 1, biases 0).
    }
  }

  BackboneConfig cfg_;
  std::mt19937_64 rng_;
  std::unique_ptr<Conv2d<S>> stem_;
  std::unique_ptr<BatchNorm2d<S>> stem_bn_;
  SiLU<S> stem_act_;
  std::vector<std::unique_ptr<MBConvBlock<S>>> blocks_;
  std::unique_ptr<Conv2d<S>> head_conv_;
  std::unique_ptr<BatchNorm2d<S>> head_bn_;
  SiLU<S> head_act_;
  std::unique_ptr<GlobalAvgPool<S>> pool_;
  std::unique_ptr<Dropout<S>> dropout_;
  std::unique_ptr<Linear<S>> classifier_;
};

}  // namespace facefake::nn
