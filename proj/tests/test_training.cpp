#include <doctest.h>

#include <filesystem>
#include <random>

#include "facefake/nn/loss.hpp"
#include "facefake/png_io.hpp"
#include "facefake/synth.hpp"
#include "facefake/training.hpp"

using namespace facefake;

namespace {

TrainingConfig quick_config() {
  TrainingConfig cfg;
  cfg.total_steps = 10;
  cfg.batch_size = 4;
  cfg.validation_every = 1000;
  cfg.seed = 99;
  return cfg;
}

DatasetManifest skewed_manifest(int reals, int fakes) {
  DatasetManifest m;
  for (int i = 0; i < reals; ++i) {
    m.entries.push_back({"r" + std::to_string(i), "00_real_0000", i, Label::kReal, ""});
  }
  for (int i = 0; i < fakes; ++i) {
    m.entries.push_back({"f" + std::to_string(i), "00_fake_0000", i, Label::kFake,
                         "00_real_0000"});
  }
  return m;
}

// Materialized micro-dataset on disk: face-patch crops with labels, split
// across folders so holdout logic engages.
std::filesystem::path write_micro_dataset(const std::string& tag, int per_class,
                                          int folders, int resolution = 24) {
  const auto root = std::filesystem::temp_directory_path() / ("ff_train_" + tag);
  std::filesystem::remove_all(root);
  std::filesystem::create_directories(root / "crops");
  DatasetManifest manifest;
  char vid[32];
  for (int i = 0; i < per_class; ++i) {
    const int folder = i % folders;
    {
      const FacePatch patch = render_face_patch(resolution, 0.8f, 0.0f, 0.0f, 100 + i);
      std::snprintf(vid, sizeof(vid), "%02d_real_%04d", folder, i);
      const std::string path = "crops/r" + std::to_string(i) + ".png";
      write_png(patch.image, root / path);
      manifest.entries.push_back({path, vid, 0, Label::kReal, ""});
    }
    {
      // fakes: flat dark patches, trivially separable
      ImageBuffer img = render_background_patch(resolution, 200 + i);
      std::snprintf(vid, sizeof(vid), "%02d_fake_%04d", folder, i);
      const std::string path = "crops/f" + std::to_string(i) + ".png";
      write_png(img, root / path);
      manifest.entries.push_back({path, vid, 0, Label::kFake, ""});
    }
  }
  save_manifest(manifest, root / "manifest.json");
  return root;
}

BackboneConfig micro_backbone(int resolution) {
  BackboneConfig cfg = build_variant("B0", 0.1f);
  cfg.input_resolution = resolution;
  cfg.dropout = 0.0f;
  cfg.drop_connect_rate = 0.0f;
  return cfg;
}

}  // namespace

TEST_CASE("polynomial learning rate") {
  TrainingConfig cfg;
  cfg.base_lr = 0.01f;
  cfg.total_steps = 100;

  CHECK(poly_lr(0, cfg) == 0.01f);
  CHECK(poly_lr(100, cfg) == 0.0f);
  CHECK(poly_lr(250, cfg) == 0.0f);

  cfg.poly_power = 2.0f;
  CHECK(poly_lr(50, cfg) == doctest::Approx(0.0025));

  float prev = poly_lr(0, cfg);
  for (int step = 1; step <= 100; ++step) {
    const float lr = poly_lr(step, cfg);
    CHECK(lr <= prev);
    prev = lr;
  }
}

TEST_CASE("label smoothing") {
  CHECK(smooth_labels(1, 0.0f) == 1.0f);
  CHECK(smooth_labels(0, 0.0f) == 0.0f);
  CHECK(smooth_labels(1, 0.05f) == doctest::Approx(0.975));
  CHECK(smooth_labels(0, 0.05f) == doctest::Approx(0.025));
  for (float eps : {0.0f, 0.1f, 0.4f}) {
    for (int y : {0, 1}) {
      const float s = smooth_labels(y, eps);
      CHECK(s >= eps / 2);
      CHECK(s <= 1 - eps / 2);
    }
  }
}

TEST_CASE("folder split is exact and disjoint") {
  DatasetManifest m;
  for (int folder = 0; folder < 5; ++folder) {
    for (int v = 0; v < 3; ++v) {
      char vid[32];
      std::snprintf(vid, sizeof(vid), "%02d_real_%04d", folder, folder * 3 + v);
      for (int frame = 0; frame < 2; ++frame) {
        m.entries.push_back({std::string(vid) + "_" + std::to_string(frame), vid,
                             frame, Label::kReal, ""});
      }
    }
  }
  const auto [train_m, val_m] = split_by_folder(m, {0, 1, 2});
  CHECK(val_m.entries.size() == 3 * 3 * 2);
  CHECK(train_m.entries.size() == 2 * 3 * 2);
  CHECK(train_m.entries.size() + val_m.entries.size() == m.entries.size());
  for (const auto& e : val_m.entries) {
    CHECK(folder_of(e.video_id).value() <= 2);
  }
  for (const auto& e : train_m.entries) {
    CHECK(folder_of(e.video_id).value() >= 3);
  }

  const auto [all_train, empty_val] = split_by_folder(m, {});
  CHECK(empty_val.entries.empty());
  CHECK(all_train.entries.size() == m.entries.size());
}

TEST_CASE("balanced batches are exactly half and half") {
  SUBCASE("even classes: 25 batches per epoch of 100+100") {
    const DatasetManifest m = skewed_manifest(100, 100);
    BalancedBatchStream stream(m, 8, 1);
    for (int b = 0; b < 25; ++b) {
      const auto batch = stream.next();
      REQUIRE(batch.size() == 8);
      int reals = 0;
      for (int idx : batch) {
        if (m.entries[idx].label == Label::kReal) ++reals;
      }
      CHECK(reals == 4);
    }
  }
  SUBCASE("10:1 skew still balances for 1000 batches") {
    const DatasetManifest m = skewed_manifest(100, 10);
    BalancedBatchStream stream(m, 8, 2);
    for (int b = 0; b < 1000; ++b) {
      const auto batch = stream.next();
      int reals = 0, fakes = 0;
      for (int idx : batch) {
        (m.entries[idx].label == Label::kReal ? reals : fakes)++;
      }
      CHECK(reals == 4);
      CHECK(fakes == 4);
    }
  }
  SUBCASE("identical seeds replay identical batch sequences") {
    const DatasetManifest m = skewed_manifest(50, 20);
    BalancedBatchStream a(m, 6, 7), b(m, 6, 7);
    for (int i = 0; i < 100; ++i) {
      CHECK(a.next() == b.next());
    }
  }
  SUBCASE("an absent class is an error") {
    const DatasetManifest m = skewed_manifest(10, 0);
    CHECK_THROWS_AS(BalancedBatchStream(m, 4, 0), DataError);
  }
}

TEST_CASE("zero learning rate leaves parameters bit-identical") {
  const auto root = write_micro_dataset("lrzero", 6, 1);
  const DatasetManifest manifest = load_manifest(root / "manifest.json");

  nn::EfficientNet<float> model(micro_backbone(24), 17);
  std::vector<Eigen::ArrayXf> before;
  for (nn::Param<float>* p : model.params()) before.push_back(p->value);

  TrainingConfig cfg = quick_config();
  cfg.base_lr = 0.0f;
  cfg.holdout_folders = {};
  train(model, manifest, root, cfg);

  const auto params = model.params();
  for (size_t i = 0; i < params.size(); ++i) {
    CHECK((params[i]->value == before[i]).all());
  }
}

TEST_CASE("momentum zero equals plain gradient descent") {
  const BackboneConfig cfg = micro_backbone(16);
  nn::EfficientNet<float> a(cfg, 4), b(cfg, 4);

  nn::Tensor<float> x(2, 3, 16, 16);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> dist(-1, 1);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data[i] = dist(rng);
  Eigen::ArrayXf targets(2);
  targets << 1.0f, 0.0f;

  const float lr = 0.05f;
  for (int step = 0; step < 5; ++step) {
    // model a: velocity path with momentum 0
    a.zero_grads();
    auto bce_a = nn::bce_with_logits<float>(a.forward_logits(x, true), targets);
    a.backward_from_logits(bce_a.dlogits);
    for (nn::Param<float>* p : a.params()) {
      p->ensure_velocity();
      p->velocity = 0.0f * p->velocity + p->grad;
      p->value -= lr * p->velocity;
    }
    // model b: plain gradient descent
    b.zero_grads();
    auto bce_b = nn::bce_with_logits<float>(b.forward_logits(x, true), targets);
    b.backward_from_logits(bce_b.dlogits);
    for (nn::Param<float>* p : b.params()) p->value -= lr * p->grad;
  }
  const auto pa = a.params();
  const auto pb = b.params();
  REQUIRE(pa.size() == pb.size());
  for (size_t i = 0; i < pa.size(); ++i) {
    CHECK((pa[i]->value == pb[i]->value).all());
  }
}

TEST_CASE("one-batch overfit reduces the loss") {
  const auto root = write_micro_dataset("overfit", 2, 1);
  const DatasetManifest manifest = load_manifest(root / "manifest.json");

  nn::EfficientNet<float> model(micro_backbone(24), 31);
  TrainingConfig cfg = quick_config();
  cfg.total_steps = 200;
  cfg.batch_size = 4;
  cfg.base_lr = 0.05f;
  cfg.holdout_folders = {};
  const TrainResult result = train(model, manifest, root, cfg);
  REQUIRE(result.step_losses.size() == 200);
  CHECK(result.step_losses.back() < result.step_losses.front());
  CHECK(result.step_losses.back() < 0.4);
}

TEST_CASE("training is deterministic for a fixed seed") {
  const auto root = write_micro_dataset("determinism", 4, 2);
  const DatasetManifest manifest = load_manifest(root / "manifest.json");
  TrainingConfig cfg = quick_config();
  cfg.total_steps = 8;
  cfg.holdout_folders = {0};
  cfg.validation_every = 4;

  std::vector<double> losses_a, losses_b;
  std::vector<ValidationReport> val_a, val_b;
  {
    nn::EfficientNet<float> model(micro_backbone(24), cfg.seed);
    const TrainResult r = train(model, manifest, root, cfg);
    losses_a = r.step_losses;
    val_a = r.validations;
  }
  {
    nn::EfficientNet<float> model(micro_backbone(24), cfg.seed);
    const TrainResult r = train(model, manifest, root, cfg);
    losses_b = r.step_losses;
    val_b = r.validations;
  }
  CHECK(losses_a == losses_b);
  REQUIRE(val_a.size() == val_b.size());
  for (size_t i = 0; i < val_a.size(); ++i) {
    CHECK(val_a[i].logloss_overall == val_b[i].logloss_overall);
  }
}

TEST_CASE("validation reports aggregate holdout videos") {
  const auto root = write_micro_dataset("holdout", 8, 4);
  const DatasetManifest manifest = load_manifest(root / "manifest.json");
  TrainingConfig cfg = quick_config();
  cfg.total_steps = 6;
  cfg.validation_every = 3;
  cfg.holdout_folders = {0, 1};

  nn::EfficientNet<float> model(micro_backbone(24), 3);
  const TrainResult result = train(model, manifest, root, cfg);
  REQUIRE(!result.validations.empty());
  for (const ValidationReport& v : result.validations) {
    CHECK(v.logloss_overall >= 0);
    // overall sits between the class losses when both classes are present
    if (v.logloss_real >= 0 && v.logloss_fake >= 0) {
      CHECK(v.logloss_overall >=
            std::min(v.logloss_real, v.logloss_fake) - 1e-12);
      CHECK(v.logloss_overall <=
            std::max(v.logloss_real, v.logloss_fake) + 1e-12);
    }
  }
  CHECK(result.best_step > 0);
}

TEST_CASE("exploding updates abort with a numeric diagnostic") {
  const auto root = write_micro_dataset("explode", 2, 1);
  const DatasetManifest manifest = load_manifest(root / "manifest.json");

  nn::EfficientNet<float> model(micro_backbone(24), 8);
  TrainingConfig cfg = quick_config();
  cfg.total_steps = 50;
  cfg.base_lr = 1e20f;
  cfg.holdout_folders = {};
  CHECK_THROWS_AS(train(model, manifest, root, cfg), NumericError);
}
