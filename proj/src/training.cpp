#include "facefake/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "facefake/metrics.hpp"
#include "facefake/nn/loss.hpp"
#include "facefake/png_io.hpp"

namespace facefake {

using nlohmann::json;

void check_training_config(const TrainingConfig& cfg) {
  if (cfg.base_lr < 0) throw ConfigError("base_lr must be >= 0");
  if (cfg.momentum < 0 || cfg.momentum >= 1) {
    throw ConfigError("momentum must lie in [0, 1)");
  }
  if (cfg.poly_power <= 0) throw ConfigError("poly_power must be > 0");
  if (cfg.total_steps <= 0) throw ConfigError("total_steps must be > 0");
  if (cfg.batch_size < 2 || cfg.batch_size % 2 != 0) {
    throw ConfigError("batch_size must be even and >= 2");
  }
  if (cfg.label_smoothing_eps < 0 || cfg.label_smoothing_eps >= 0.5f) {
    throw ConfigError("label_smoothing_eps must lie in [0, 0.5)");
  }
  if (cfg.validation_every < 1) throw ConfigError("validation_every must be >= 1");
}

float poly_lr(int step, const TrainingConfig& cfg) {
  if (step >= cfg.total_steps) return 0.0f;
  const float remain = 1.0f - static_cast<float>(step) / cfg.total_steps;
  return cfg.base_lr * std::pow(remain, cfg.poly_power);
}

float smooth_labels(int y, float eps) {
  return y * (1.0f - eps) + eps / 2.0f;
}

std::pair<DatasetManifest, DatasetManifest> split_by_folder(
    const DatasetManifest& manifest, const std::set<int>& holdout_folders) {
  DatasetManifest train, val;
  for (const ManifestEntry& e : manifest.entries) {
    const auto folder = folder_of(e.video_id);
    if (folder.has_value() && holdout_folders.count(*folder)) {
      val.entries.push_back(e);
    } else {
      train.entries.push_back(e);
    }
  }
  return {std::move(train), std::move(val)};
}

BalancedBatchStream::BalancedBatchStream(const DatasetManifest& manifest,
                                         int batch_size, uint64_t seed)
    : half_(batch_size / 2), rng_(seed) {
  if (batch_size < 2 || batch_size % 2 != 0) {
    throw ConfigError("balanced batches need an even batch_size >= 2");
  }
  for (size_t i = 0; i < manifest.entries.size(); ++i) {
    switch (manifest.entries[i].label) {
      case Label::kReal: real_.push_back(static_cast<int>(i)); break;
      case Label::kFake: fake_.push_back(static_cast<int>(i)); break;
      case Label::kUnknown: break;
    }
  }
  if (real_.empty() || fake_.empty()) {
    throw DataError("balanced sampling needs at least one example per class");
  }
  start_epoch();
}

void BalancedBatchStream::start_epoch() {
  const bool real_is_major = real_.size() >= fake_.size();
  const std::vector<int>& major = real_is_major ? real_ : fake_;
  const std::vector<int>& minor = real_is_major ? fake_ : real_;

  std::vector<int> major_order = major;
  std::shuffle(major_order.begin(), major_order.end(), rng_);
  // Whole half-batches only, so every batch is exactly half and half.
  const size_t usable = major_order.size() / half_ * half_;
  major_order.resize(std::max<size_t>(usable, half_));
  while (major_order.size() < static_cast<size_t>(half_)) {
    major_order.push_back(major_order.front());
  }

  std::vector<int> minor_order(major_order.size());
  std::uniform_int_distribution<size_t> pick(0, minor.size() - 1);
  for (size_t i = 0; i < minor_order.size(); ++i) {
    minor_order[i] = minor[pick(rng_)];
  }

  epoch_real_ = real_is_major ? std::move(major_order) : std::move(minor_order);
  epoch_fake_ = real_is_major ? std::move(minor_order) : std::move(major_order);
  cursor_ = 0;
}

std::vector<int> BalancedBatchStream::next() {
  if (cursor_ + half_ > epoch_real_.size()) start_epoch();
  std::vector<int> batch;
  batch.reserve(2 * half_);
  for (int i = 0; i < half_; ++i) batch.push_back(epoch_real_[cursor_ + i]);
  for (int i = 0; i < half_; ++i) batch.push_back(epoch_fake_[cursor_ + i]);
  cursor_ += half_;
  return batch;
}

CropDataset::CropDataset(const DatasetManifest& manifest,
                         const std::filesystem::path& root, int input_resolution)
    : resolution_(input_resolution) {
  entries_.reserve(manifest.entries.size());
  pixels_.reserve(manifest.entries.size());
  for (const ManifestEntry& e : manifest.entries) {
    ImageBuffer img = read_png(root / e.crop_path);
    if (img.channels == 1) {
      ImageBuffer rgb(img.height, img.width, 3);
      for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
          for (int c = 0; c < 3; ++c) rgb.at(y, x, c) = img.at(y, x, 0);
        }
      }
      img = std::move(rgb);
    }
    img = resize_bilinear(img, resolution_, resolution_);
    std::vector<uint8_t> packed(static_cast<size_t>(resolution_) * resolution_ * 3);
    for (size_t i = 0; i < packed.size(); ++i) {
      packed[i] = static_cast<uint8_t>(
          std::clamp(std::lround(img.data[static_cast<Eigen::Index>(i)]), 0L, 255L));
    }
    entries_.push_back(&e);
    pixels_.push_back(std::move(packed));
  }
}

void CropDataset::fill(int i, nn::Tensor<float>& batch, int slot, bool flip) const {
  const std::vector<uint8_t>& px = pixels_[i];
  const int res = resolution_;
  for (int c = 0; c < 3; ++c) {
    float* plane = batch.plane(slot, c);
    for (int y = 0; y < res; ++y) {
      for (int x = 0; x < res; ++x) {
        const int sx = flip ? res - 1 - x : x;
        const uint8_t v = px[(static_cast<size_t>(y) * res + sx) * 3 + c];
        plane[y * res + x] = static_cast<float>(v) / 127.5f - 1.0f;
      }
    }
  }
}

std::vector<FramePrediction> predict_crops(nn::EfficientNet<float>& model,
                                           const CropDataset& dataset,
                                           int batch_size) {
  const int res = model.config().input_resolution;
  std::vector<FramePrediction> out;
  out.reserve(dataset.size());
  for (int start = 0; start < dataset.size(); start += batch_size) {
    const int n = std::min(batch_size, dataset.size() - start);
    nn::Tensor<float> batch(n, 3, res, res);
    for (int i = 0; i < n; ++i) dataset.fill(start + i, batch, i, false);
    const auto probs = model.forward_probs(batch, false);
    for (int i = 0; i < n; ++i) {
      const ManifestEntry& e = dataset.entry(start + i);
      out.push_back({e.video_id, e.frame_index, probs[i]});
    }
  }
  return out;
}

namespace {

ValidationReport validate_holdout(nn::EfficientNet<float>& model,
                                  const CropDataset& val_data,
                                  const AggregationConfig& agg, int step) {
  ValidationReport report;
  report.step = step;
  const auto frame_preds = predict_crops(model, val_data);

  std::map<std::string, std::vector<FramePrediction>> by_video;
  std::map<std::string, Label> labels;
  for (const FramePrediction& f : frame_preds) by_video[f.video_id].push_back(f);
  for (int i = 0; i < val_data.size(); ++i) {
    labels[val_data.entry(i).video_id] = val_data.entry(i).label;
  }

  LabeledPredictionSet set;
  for (const auto& [vid, preds] : by_video) {
    const VideoPrediction vp = aggregate_video(preds, agg);
    set.y.push_back(labels.at(vid) == Label::kFake ? 1 : 0);
    set.p.push_back(vp.p_fake);
  }
  report.logloss_overall = log_loss(set);
  const PerClassLogLoss pc = per_class_log_loss(set);
  report.logloss_real = pc.real.value_or(-1.0);
  report.logloss_fake = pc.fake.value_or(-1.0);
  const bool both = pc.real.has_value() && pc.fake.has_value();
  report.auc = both ? roc_auc(set) : -1.0;
  return report;
}

}  // namespace

TrainResult train(nn::EfficientNet<float>& model, const DatasetManifest& manifest,
                  const std::filesystem::path& data_root,
                  const TrainingConfig& cfg, const TrainOptions& options) {
  check_training_config(cfg);
  check_aggregation_config(options.aggregation);
  nn::set_num_threads(cfg.compute_threads);

  const auto [train_manifest, val_manifest] =
      split_by_folder(manifest, cfg.holdout_folders);
  if (train_manifest.entries.empty()) {
    throw DataError("training split is empty after holdout");
  }

  const int res = model.config().input_resolution;
  CropDataset train_data(train_manifest, data_root, res);
  std::unique_ptr<CropDataset> val_data;
  if (!val_manifest.entries.empty()) {
    val_data = std::make_unique<CropDataset>(val_manifest, data_root, res);
  }

  std::ofstream log;
  if (!options.log_path.empty()) {
    log.open(options.log_path);
    if (!log) throw DataError("cannot write training log: " + options.log_path.string());
  }

  BalancedBatchStream stream(train_manifest, cfg.batch_size, cfg.seed);
  std::mt19937_64 flip_rng(cfg.seed ^ 0xf11bULL);
  std::bernoulli_distribution flip_coin(0.5);

  const auto params = model.params();
  for (nn::Param<float>* p : params) p->ensure_velocity();

  TrainResult result;
  nn::Tensor<float> batch(cfg.batch_size, 3, res, res);
  Eigen::ArrayXf targets(cfg.batch_size);

  for (int step = 0; step < cfg.total_steps; ++step) {
    const float lr = poly_lr(step, cfg);
    const std::vector<int> indices = stream.next();
    for (int i = 0; i < cfg.batch_size; ++i) {
      const bool flip = cfg.horizontal_flip && flip_coin(flip_rng);
      train_data.fill(indices[i], batch, i, flip);
      const int y = train_data.entry(indices[i]).label == Label::kFake ? 1 : 0;
      targets[i] = smooth_labels(y, cfg.label_smoothing_eps);
    }

    const auto logits = model.forward_logits(batch, true);
    const auto bce = nn::bce_with_logits<float>(logits, targets);
    if (!std::isfinite(bce.loss)) {
      std::ostringstream ids;
      for (int i : indices) ids << train_data.entry(i).crop_path << " ";
      throw NumericError("non-finite loss at step " + std::to_string(step) +
                         " (lr " + std::to_string(lr) + ", batch: " + ids.str() + ")");
    }
    result.step_losses.push_back(bce.loss);

    model.zero_grads();
    model.backward_from_logits(bce.dlogits);
    for (nn::Param<float>* p : params) {
      p->velocity = cfg.momentum * p->velocity + p->grad;
      p->value -= lr * p->velocity;
    }

    if (log) {
      json rec{{"step", step}, {"lr", lr}, {"loss", bce.loss}};
      log << rec.dump() << "\n";
    }

    const bool last = step + 1 == cfg.total_steps;
    if (val_data && ((step + 1) % cfg.validation_every == 0 || last)) {
      const ValidationReport report =
          validate_holdout(model, *val_data, options.aggregation, step + 1);
      result.validations.push_back(report);
      if (log) {
        json rec{{"step", report.step},
                 {"logloss_overall", report.logloss_overall},
                 {"logloss_real", report.logloss_real},
                 {"logloss_fake", report.logloss_fake},
                 {"auc", report.auc}};
        log << rec.dump() << "\n";
      }
      if (result.best_step < 0 || report.logloss_overall < result.best_logloss) {
        result.best_logloss = report.logloss_overall;
        result.best_step = report.step;
        result.best = nn::snapshot_model(model);
      }
    }
  }

  if (result.best_step < 0) {
    result.best = nn::snapshot_model(model);
    result.best_step = cfg.total_steps;
  }
  return result;
}

}  // namespace facefake
