#include "facefake/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <thread>

#include <json.hpp>

#include "facefake/blob_scorer.hpp"
#include "facefake/conv_scorer.hpp"
#include "facefake/nn/checkpoint.hpp"
#include "facefake/png_io.hpp"

namespace facefake {

using nlohmann::json;

ScorerSet make_scorers(const RunConfig& cfg) {
  ScorerSet set;
  const int s1 = cfg.detector.pyramid.stage1_input;
  if (cfg.scorer == "blob") {
    set.stage1 = std::make_unique<BrightBlobScorer>(s1, false);
    set.stage2 = std::make_unique<BrightBlobScorer>(24, false);
    set.stage3 = std::make_unique<BrightBlobScorer>(48, true);
  } else if (cfg.scorer.rfind("conv:", 0) == 0) {
    const std::filesystem::path dir = cfg.scorer.substr(5);
    set.stage1 = ConvScorer::load(dir / "stage1.ckpt");
    set.stage2 = ConvScorer::load(dir / "stage2.ckpt");
    set.stage3 = ConvScorer::load(dir / "stage3.ckpt");
  } else {
    throw ConfigError("unknown scorer: " + cfg.scorer +
                      " (expected \"blob\" or \"conv:<dir>\")");
  }
  return set;
}

namespace {

// Fresh scorer instances per worker; conv scorers cache activations and must
// not be shared across threads.
ScorerSet worker_scorers(const RunConfig& cfg, const ScorerSet& proto) {
  if (cfg.scorer == "blob") return make_scorers(cfg);
  ScorerSet set;
  set.stage1 = static_cast<const ConvScorer&>(*proto.stage1).clone();
  set.stage2 = static_cast<const ConvScorer&>(*proto.stage2).clone();
  set.stage3 = static_cast<const ConvScorer&>(*proto.stage3).clone();
  return set;
}

}  // namespace

ExtractResult cmd_extract(const std::filesystem::path& input_dir,
                          const std::filesystem::path& out_dir,
                          const RunConfig& cfg) {
  const std::vector<VideoListing> listings = scan_input_dir(input_dir);
  if (listings.empty()) {
    throw DataError("no frame-directory videos found under " + input_dir.string());
  }
  const ScorerSet proto = make_scorers(cfg);
  const auto det_dir = out_dir / "detections";
  std::filesystem::create_directories(det_dir);

  std::vector<std::string> failures(listings.size());
  std::atomic<size_t> cursor{0};
  const int workers = std::max(1, cfg.workers);
  auto run = [&]() {
    const ScorerSet scorers = worker_scorers(cfg, proto);
    while (true) {
      const size_t i = cursor.fetch_add(1);
      if (i >= listings.size()) break;
      const VideoListing& v = listings[i];
      try {
        FrameDirVideo video(v.dir);
        const std::vector<int> indices =
            sample_frames(video.frame_count(), cfg.sampling);
        VideoDetections dets;
        for (int frame_index : indices) {
          const ImageBuffer frame = video.frame(frame_index);
          auto found = detect_faces(frame, *scorers.stage1, *scorers.stage2,
                                    *scorers.stage3, cfg.detector);
          if (!found.empty()) dets[frame_index] = std::move(found);
        }
        save_detections(v.video_id, dets, det_dir / (v.video_id + ".json"));
      } catch (const Error& e) {
        failures[i] = v.video_id + ": " + e.what();
      }
    }
  };
  if (workers == 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(run);
    for (auto& th : pool) th.join();
  }

  MaterializeOptions mopts;
  mopts.margin_fraction = cfg.margin_fraction;
  mopts.ssim = cfg.ssim;
  mopts.write_masks = cfg.write_masks;
  mopts.workers = workers;
  const MaterializeResult mat = materialize_dataset(listings, det_dir, out_dir, mopts);

  ExtractResult result;
  result.crops_written = mat.crops_written;
  result.masks_written = mat.masks_written;
  for (const std::string& f : failures) {
    if (!f.empty()) result.failures.push_back(f);
  }
  for (const std::string& f : mat.failed_videos) result.failures.push_back(f);
  result.videos_ok = static_cast<int>(listings.size()) -
                     static_cast<int>(result.failures.size());
  if (result.videos_ok <= 0) {
    throw DataError("extraction failed for every video");
  }
  return result;
}

TrainCmdResult cmd_train(const std::filesystem::path& manifest_path,
                         const std::filesystem::path& out_dir,
                         const RunConfig& cfg) {
  const DatasetManifest manifest = load_manifest(manifest_path);
  const auto violations = validate_manifest(manifest);
  if (!violations.empty()) {
    throw DataError("manifest invalid: " + violations.front().code + " " +
                    violations.front().detail);
  }
  std::filesystem::create_directories(out_dir);

  BackboneConfig backbone = build_variant(cfg.variant, cfg.width_budget);
  if (cfg.input_resolution > 0) backbone.input_resolution = cfg.input_resolution;

  TrainingConfig tcfg = cfg.training;
  tcfg.seed = cfg.seed;
  if (tcfg.batch_size == 0) tcfg.batch_size = default_batch_size(cfg.variant);
  check_training_config(tcfg);

  nn::EfficientNet<float> model(backbone, cfg.seed);

  TrainOptions opts;
  opts.aggregation = cfg.aggregation;
  opts.log_path = out_dir / "training_log.jsonl";
  const TrainResult result =
      train(model, manifest, manifest_path.parent_path(), tcfg, opts);

  TrainCmdResult out;
  out.checkpoint_path = out_dir / "model.ckpt";
  out.log_path = opts.log_path;
  nn::save_checkpoint(result.best, out.checkpoint_path);
  if (!result.validations.empty()) {
    out.final_validation = result.validations.back();
  }
  out.best_step = result.best_step;
  out.final_train_loss = result.step_losses.empty() ? 0 : result.step_losses.back();
  return out;
}

namespace {

struct VideoFramePreds {
  std::map<std::string, std::vector<FramePrediction>> by_video;
};

// Frame predictions for raw videos: sample, detect, crop, classify.
VideoFramePreds predict_videos(const std::filesystem::path& input_dir,
                               nn::EfficientNet<float>& model,
                               const RunConfig& cfg) {
  const std::vector<VideoListing> listings = scan_input_dir(input_dir);
  if (listings.empty()) {
    throw DataError("no frame-directory videos found under " + input_dir.string());
  }
  const ScorerSet proto = make_scorers(cfg);
  const int res = model.config().input_resolution;

  VideoFramePreds out;
  std::vector<std::pair<std::string, std::vector<std::pair<int, ImageBuffer>>>>
      crops_per_video(listings.size());

  std::atomic<size_t> cursor{0};
  const int workers = std::max(1, cfg.workers);
  auto run = [&]() {
    const ScorerSet scorers = worker_scorers(cfg, proto);
    while (true) {
      const size_t i = cursor.fetch_add(1);
      if (i >= listings.size()) break;
      const VideoListing& v = listings[i];
      crops_per_video[i].first = v.video_id;
      try {
        FrameDirVideo video(v.dir);
        const auto indices = sample_frames(video.frame_count(), cfg.sampling);
        for (int frame_index : indices) {
          const ImageBuffer frame = video.frame(frame_index);
          const auto dets = detect_faces(frame, *scorers.stage1, *scorers.stage2,
                                         *scorers.stage3, cfg.detector);
          for (const Detection& d : dets) {
            FaceCrop crop = crop_with_margin(frame, d.box, cfg.margin_fraction,
                                             v.video_id, frame_index);
            crops_per_video[i].second.emplace_back(
                frame_index, resize_bilinear(crop.image, res, res));
          }
        }
      } catch (const Error&) {
        // videos with no usable frames simply produce no predictions
      }
    }
  };
  if (workers == 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(run);
    for (auto& th : pool) th.join();
  }

  for (auto& [video_id, crops] : crops_per_video) {
    if (crops.empty()) continue;
    const int n = static_cast<int>(crops.size());
    constexpr int kBatch = 64;
    for (int start = 0; start < n; start += kBatch) {
      const int bn = std::min(kBatch, n - start);
      nn::Tensor<float> batch(bn, 3, res, res);
      for (int k = 0; k < bn; ++k) {
        const ImageBuffer& img = crops[start + k].second;
        for (int c = 0; c < 3; ++c) {
          float* plane = batch.plane(k, c);
          for (int y = 0; y < res; ++y) {
            for (int x = 0; x < res; ++x) {
              const int src_c = img.channels == 3 ? c : 0;
              plane[y * res + x] = img.at(y, x, src_c) / 127.5f - 1.0f;
            }
          }
        }
      }
      const auto probs = model.forward_probs(batch, false);
      for (int k = 0; k < bn; ++k) {
        out.by_video[video_id].push_back(
            {video_id, crops[start + k].first, probs[k]});
      }
    }
  }
  return out;
}

}  // namespace

PredictCmdResult cmd_predict(const std::filesystem::path& input,
                             const std::filesystem::path& checkpoint_path,
                             const std::filesystem::path& out_dir,
                             const RunConfig& cfg) {
  const nn::Checkpoint ckpt = nn::load_checkpoint(checkpoint_path);
  nn::EfficientNet<float> model(ckpt.backbone, cfg.seed);
  nn::restore_model(model, ckpt);
  nn::set_num_threads(cfg.training.compute_threads);

  VideoFramePreds frame_preds;
  if (std::filesystem::exists(input / "manifest.json")) {
    const DatasetManifest manifest = load_manifest(input / "manifest.json");
    CropDataset dataset(manifest, input, model.config().input_resolution);
    for (const FramePrediction& f : predict_crops(model, dataset)) {
      frame_preds.by_video[f.video_id].push_back(f);
    }
  } else {
    frame_preds = predict_videos(input, model, cfg);
  }
  if (frame_preds.by_video.empty()) {
    throw DataError("nothing to predict under " + input.string());
  }

  std::filesystem::create_directories(out_dir);
  PredictCmdResult result;
  result.csv_path = out_dir / "predictions.csv";
  result.report_path = out_dir / "report.json";

  std::ofstream csv(result.csv_path);
  if (!csv) throw DataError("cannot write " + result.csv_path.string());
  csv << "filename,label\n";
  json videos = json::object();
  for (const auto& [video_id, preds] : frame_preds.by_video) {
    const VideoPrediction vp = aggregate_video(preds, cfg.aggregation);
    char prob[16];
    std::snprintf(prob, sizeof(prob), "%.6f", vp.p_fake);
    csv << video_id << "," << prob << "\n";
    videos[video_id] = {{"p_fake", vp.p_fake},
                        {"frames_used", vp.frames_used},
                        {"frames_discarded", vp.frames_discarded},
                        {"fallback_used", vp.fallback_used}};
    result.predictions.push_back(vp);
  }
  json report;
  report["config"] = run_config_to_json(cfg);
  report["videos"] = std::move(videos);
  std::ofstream rep(result.report_path);
  rep << report.dump(2) << "\n";
  return result;
}

namespace {

std::vector<std::pair<std::string, std::string>> read_two_columns(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::pair<std::string, std::string>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const size_t c1 = line.find(',');
    if (c1 == std::string::npos) throw DataError("bad CSV row in " + path.string() + ": " + line);
    const size_t c2 = line.find(',', c1 + 1);
    std::string key = line.substr(0, c1);
    std::string value = c2 == std::string::npos
                            ? line.substr(c1 + 1)
                            : line.substr(c1 + 1, c2 - c1 - 1);
    if (first && key == "filename") {  // header
      first = false;
      continue;
    }
    first = false;
    rows.emplace_back(std::move(key), std::move(value));
  }
  return rows;
}

std::string format4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

EvaluateCmdResult cmd_evaluate(const std::filesystem::path& predictions_csv,
                               const std::filesystem::path& labels_file,
                               const std::optional<std::filesystem::path>& report_json) {
  const auto pred_rows = read_two_columns(predictions_csv);
  const auto label_rows = read_two_columns(labels_file);
  if (pred_rows.empty()) throw DataError("empty predictions file");

  std::map<std::string, int> labels;
  for (const auto& [name, value] : label_rows) {
    int y;
    if (value == "REAL" || value == "0") y = 0;
    else if (value == "FAKE" || value == "1") y = 1;
    else throw DataError("unknown label '" + value + "' for " + name);
    labels[name] = y;
  }

  LabeledPredictionSet set;
  for (const auto& [name, value] : pred_rows) {
    const auto it = labels.find(name);
    if (it == labels.end()) throw DataError("no label for prediction " + name);
    set.y.push_back(it->second);
    set.p.push_back(std::stod(value));
  }

  EvaluateCmdResult result;
  result.n_videos = static_cast<int>(set.size());
  result.logloss = log_loss(set);
  const PerClassLogLoss pc = per_class_log_loss(set);
  result.logloss_real = pc.real;
  result.logloss_fake = pc.fake;
  if (pc.real.has_value() && pc.fake.has_value()) {
    result.auc = roc_auc(set);
  }
  result.prf = precision_recall_f1(set, result.threshold);

  std::vector<TableRow> rows = reference_rows();
  TableRow mine;
  mine.name = "This run";
  mine.logloss = format4(result.logloss);
  if (result.auc) mine.auc = format4(*result.auc);
  mine.f1 = format4(result.prf.f1);
  rows.push_back(std::move(mine));
  result.table = comparison_table(rows);

  if (report_json) {
    json j;
    j["logloss"] = result.logloss;
    j["logloss_real"] = pc.real.has_value() ? json(*pc.real) : json();
    j["logloss_fake"] = pc.fake.has_value() ? json(*pc.fake) : json();
    j["auc"] = result.auc.has_value() ? json(*result.auc) : json();
    j["precision"] = result.prf.precision;
    j["recall"] = result.prf.recall;
    j["f1"] = result.prf.f1;
    j["n_videos"] = result.n_videos;
    j["threshold"] = result.threshold;
    std::ofstream out(*report_json);
    if (!out) throw DataError("cannot write " + report_json->string());
    out << j.dump(2) << "\n";
  }
  return result;
}

SynthSummary cmd_synth(const std::filesystem::path& out_dir,
                       const SynthOptions& options) {
  return generate_synthetic_dataset(out_dir, options);
}

}  // namespace facefake
