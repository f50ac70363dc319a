#include "facefake/conv_scorer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "facefake/nn/checkpoint.hpp"

namespace facefake {

namespace {

// Landmark anchor fractions within the face box (eyes, nose, mouth corners);
// matches where the synthetic generator draws them.
constexpr std::array<std::array<float, 2>, 5> kLandmarkAnchors = {{
    {0.30f, 0.38f}, {0.70f, 0.38f}, {0.50f, 0.58f}, {0.35f, 0.78f}, {0.65f, 0.78f},
}};

float sigmoidf(float z) { return 1.0f / (1.0f + std::exp(-z)); }

}  // namespace

struct ConvScorer::Net {
  std::vector<std::unique_ptr<nn::Layer<float>>> trunk;
  std::unique_ptr<nn::GlobalAvgPool<float>> pool;
  std::unique_ptr<nn::Linear<float>> fc1;
  std::unique_ptr<nn::SiLU<float>> act;
  std::unique_ptr<nn::Linear<float>> fc2;
  int out_dim = 0;

  Net(int input, bool with_landmarks, uint64_t seed) {
    out_dim = 5 + (with_landmarks ? 10 : 0);
    int channels = 12;
    trunk.push_back(std::make_unique<nn::Conv2d<float>>("conv1", 3, channels, 3, 1));
    trunk.push_back(std::make_unique<nn::BatchNorm2d<float>>("bn1", channels));
    trunk.push_back(std::make_unique<nn::SiLU<float>>());
    const auto add_block = [&](const char* name, int cout) {
      trunk.push_back(std::make_unique<nn::Conv2d<float>>(
          std::string(name) + ".conv", channels, cout, 3, 2));
      trunk.push_back(std::make_unique<nn::BatchNorm2d<float>>(
          std::string(name) + ".bn", cout));
      trunk.push_back(std::make_unique<nn::SiLU<float>>());
      channels = cout;
    };
    add_block("conv2", 16);
    if (input >= 24) add_block("conv3", 24);
    if (input >= 48) add_block("conv4", 32);
    pool = std::make_unique<nn::GlobalAvgPool<float>>();
    fc1 = std::make_unique<nn::Linear<float>>("fc1", channels, 32);
    act = std::make_unique<nn::SiLU<float>>();
    fc2 = std::make_unique<nn::Linear<float>>("fc2", 32, out_dim);
    init(seed);
  }

  void init(uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x5c0e5ULL);
    for (nn::Param<float>* p : params()) {
      if (p->shape.size() == 4) {
        const double fan_out =
            static_cast<double>(p->shape[0]) * p->shape[2] * p->shape[3];
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_out));
        for (Eigen::Index i = 0; i < p->value.size(); ++i) {
          p->value[i] = static_cast<float>(dist(rng));
        }
      } else if (p->shape.size() == 2) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(p->shape[1]));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (Eigen::Index i = 0; i < p->value.size(); ++i) {
          p->value[i] = static_cast<float>(dist(rng));
        }
      }
    }
  }

  nn::Tensor<float> forward(const nn::Tensor<float>& x, bool training) {
    nn::Tensor<float> h = x;
    for (auto& layer : trunk) h = layer->forward(h, training);
    h = pool->forward(h, training);
    h = act->forward(fc1->forward(h, training), training);
    return fc2->forward(h, training);
  }

  void backward(const nn::Tensor<float>& dout) {
    nn::Tensor<float> dh = fc1->backward(act->backward(fc2->backward(dout)));
    dh = pool->backward(dh);
    for (auto it = trunk.rbegin(); it != trunk.rend(); ++it) {
      dh = (*it)->backward(dh);
    }
  }

  std::vector<nn::Param<float>*> params() {
    std::vector<nn::Param<float>*> out;
    for (auto& layer : trunk) layer->collect_params(out);
    fc1->collect_params(out);
    fc2->collect_params(out);
    return out;
  }
  std::vector<nn::Param<float>*> buffers() {
    std::vector<nn::Param<float>*> out;
    for (auto& layer : trunk) layer->collect_buffers(out);
    return out;
  }
};

ConvScorer::ConvScorer(int input_size, bool with_landmarks, uint64_t seed)
    : input_(input_size), with_landmarks_(with_landmarks),
      net_(std::make_shared<Net>(input_size, with_landmarks, seed)) {}

void ConvScorer::fill_input(const ImageBuffer& patch, nn::Tensor<float>& batch,
                            int slot) const {
  ImageBuffer img = denormalize(patch);
  if (img.height != input_ || img.width != input_) {
    img = resize_bilinear(img, input_, input_);
  }
  for (int c = 0; c < 3; ++c) {
    float* plane = batch.plane(slot, c);
    for (int y = 0; y < input_; ++y) {
      for (int x = 0; x < input_; ++x) {
        const int src_c = img.channels == 3 ? c : 0;
        plane[y * input_ + x] = img.at(y, x, src_c) / 127.5f - 1.0f;
      }
    }
  }
}

std::vector<StageScore> ConvScorer::forward_scores(nn::Tensor<float>& batch) const {
  nn::Tensor<float> out = net_->forward(batch, false);
  std::vector<StageScore> scores(batch.n);
  for (int i = 0; i < batch.n; ++i) {
    const float* v = out.sample(i);
    StageScore& s = scores[i];
    s.p_face = sigmoidf(v[0]);
    s.box_offsets = Eigen::Vector4f(v[1], v[2], v[3], v[4]);
    if (with_landmarks_) {
      std::array<Eigen::Vector2f, 5> lms;
      for (int k = 0; k < 5; ++k) {
        lms[k] = Eigen::Vector2f(sigmoidf(v[5 + 2 * k]), sigmoidf(v[6 + 2 * k]));
      }
      s.landmarks = lms;
    }
  }
  return scores;
}

StageScore ConvScorer::score(const ImageBuffer& patch) const {
  nn::Tensor<float> batch(1, 3, input_, input_);
  fill_input(patch, batch, 0);
  return forward_scores(batch).front();
}

std::vector<StageScore> ConvScorer::score_batch(
    const std::vector<ImageBuffer>& patches) const {
  if (patches.empty()) return {};
  std::vector<StageScore> out;
  out.reserve(patches.size());
  constexpr int kChunk = 256;
  for (size_t start = 0; start < patches.size(); start += kChunk) {
    const int n = static_cast<int>(std::min<size_t>(kChunk, patches.size() - start));
    nn::Tensor<float> batch(n, 3, input_, input_);
    for (int i = 0; i < n; ++i) fill_input(patches[start + i], batch, i);
    auto scores = forward_scores(batch);
    out.insert(out.end(), scores.begin(), scores.end());
  }
  return out;
}

ConvScorer::TrainStats ConvScorer::fit(const std::vector<PatchExample>& examples,
                                       int steps, int batch_size, float lr,
                                       uint64_t seed) {
  if (examples.empty()) throw DataError("fit needs at least one example");
  TrainStats stats;
  std::mt19937_64 rng(seed);
  std::vector<size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  size_t cursor = 0;

  const auto params = net_->params();
  for (nn::Param<float>* p : params) p->ensure_velocity();
  constexpr float kMomentum = 0.9f;
  constexpr float kBoxWeight = 2.0f;
  constexpr float kLandmarkWeight = 1.0f;

  nn::Tensor<float> batch(batch_size, 3, input_, input_);
  for (int step = 0; step < steps; ++step) {
    std::vector<size_t> chosen(batch_size);
    for (int i = 0; i < batch_size; ++i) {
      if (cursor >= order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      chosen[i] = order[cursor++];
      fill_input(examples[chosen[i]].patch, batch, i);
    }

    nn::Tensor<float> out = net_->forward(batch, true);
    nn::Tensor<float> dout(batch_size, net_->out_dim, 1, 1);
    float loss = 0;
    for (int i = 0; i < batch_size; ++i) {
      const PatchExample& ex = examples[chosen[i]];
      const float* v = out.sample(i);
      float* dv = dout.sample(i);
      const float sig = sigmoidf(v[0]);
      loss += -(ex.is_face * std::log(std::max(sig, 1e-12f)) +
                (1 - ex.is_face) * std::log(std::max(1 - sig, 1e-12f)));
      dv[0] = (sig - ex.is_face) / batch_size;
      if (ex.is_face > 0.5f) {
        for (int k = 0; k < 4; ++k) {
          const float err = v[1 + k] - ex.offsets[k];
          loss += kBoxWeight * err * err;
          dv[1 + k] = 2.0f * kBoxWeight * err / batch_size;
        }
        if (with_landmarks_) {
          const float bx1 = ex.offsets[0];
          const float by1 = ex.offsets[1];
          const float bw = 1.0f + ex.offsets[2] - bx1;
          const float bh = 1.0f + ex.offsets[3] - by1;
          for (int k = 0; k < 5; ++k) {
            const float tx = bx1 + kLandmarkAnchors[k][0] * bw;
            const float ty = by1 + kLandmarkAnchors[k][1] * bh;
            const float sx = sigmoidf(v[5 + 2 * k]);
            const float sy = sigmoidf(v[6 + 2 * k]);
            loss += kLandmarkWeight * ((sx - tx) * (sx - tx) + (sy - ty) * (sy - ty));
            dv[5 + 2 * k] = 2 * kLandmarkWeight * (sx - tx) * sx * (1 - sx) / batch_size;
            dv[6 + 2 * k] = 2 * kLandmarkWeight * (sy - ty) * sy * (1 - sy) / batch_size;
          }
        }
      }
    }
    stats.losses.push_back(loss / batch_size);

    for (nn::Param<float>* p : params) p->grad.setZero();
    net_->backward(dout);
    for (nn::Param<float>* p : params) {
      p->velocity = kMomentum * p->velocity + p->grad;
      p->value -= lr * p->velocity;
    }
  }
  return stats;
}

void ConvScorer::save(const std::filesystem::path& path) const {
  nn::TensorArchive archive;
  archive.meta = {{"kind", "stage_scorer"},
                  {"input_size", input_},
                  {"with_landmarks", with_landmarks_}};
  for (nn::Param<float>* p : net_->params()) {
    archive.tensors.push_back(nn::tensor_from_param(*p));
  }
  for (nn::Param<float>* p : net_->buffers()) {
    archive.tensors.push_back(nn::tensor_from_param(*p));
  }
  nn::save_tensor_archive(archive, path);
}

std::unique_ptr<ConvScorer> ConvScorer::load(const std::filesystem::path& path) {
  nn::TensorArchive archive = nn::load_tensor_archive(path);
  int input = 0;
  bool with_landmarks = false;
  try {
    if (archive.meta.at("kind").get<std::string>() != "stage_scorer") {
      throw DataError("archive is not a stage scorer: " + path.string());
    }
    input = archive.meta.at("input_size").get<int>();
    with_landmarks = archive.meta.at("with_landmarks").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("corrupt scorer meta: " + std::string(e.what()));
  }
  auto scorer = std::make_unique<ConvScorer>(input, with_landmarks);
  std::vector<nn::Param<float>*> targets = scorer->net_->params();
  for (nn::Param<float>* p : scorer->net_->buffers()) targets.push_back(p);
  nn::restore_named_tensors(archive.tensors, targets);
  return scorer;
}

std::unique_ptr<ConvScorer> ConvScorer::clone() const {
  auto copy = std::make_unique<ConvScorer>(input_, with_landmarks_);
  const auto src_params = net_->params();
  const auto dst_params = copy->net_->params();
  for (size_t i = 0; i < src_params.size(); ++i) {
    dst_params[i]->value = src_params[i]->value;
  }
  const auto src_buf = net_->buffers();
  const auto dst_buf = copy->net_->buffers();
  for (size_t i = 0; i < src_buf.size(); ++i) {
    dst_buf[i]->value = src_buf[i]->value;
  }
  return copy;
}

}  // namespace facefake
