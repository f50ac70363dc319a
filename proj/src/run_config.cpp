#include "facefake/run_config.hpp"

#include <cstdlib>
#include <fstream>

namespace facefake {

using nlohmann::json;

namespace {

IouMode iou_mode_from_string(const std::string& s) {
  if (s == "UNION") return IouMode::kUnion;
  if (s == "MIN") return IouMode::kMin;
  throw ConfigError("unknown NMS mode: " + s);
}

std::string iou_mode_to_string(IouMode m) {
  return m == IouMode::kUnion ? "UNION" : "MIN";
}

template <typename T, size_t N>
void read_array(const json& j, const char* key, std::array<T, N>& out) {
  if (!j.contains(key)) return;
  const auto& arr = j.at(key);
  if (arr.size() != N) {
    throw ConfigError(std::string(key) + " needs exactly " + std::to_string(N) +
                      " values");
  }
  for (size_t i = 0; i < N; ++i) out[i] = arr.at(i).get<T>();
}

void expect_keys(const json& j, std::initializer_list<const char*> known,
                 const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) {
      if (key == k) {
        ok = true;
        break;
      }
    }
    if (!ok) throw ConfigError("unknown config key " + where + "." + key);
  }
}

void apply_detector(RunConfig& cfg, const json& j) {
  expect_keys(j,
              {"stage_thresholds", "nms_thresholds", "nms_modes", "min_face_size",
               "scale_factor", "stage1_input", "input_cap"},
              "detector");
  read_array(j, "stage_thresholds", cfg.detector.stage_thresholds);
  read_array(j, "nms_thresholds", cfg.detector.nms_thresholds);
  if (j.contains("nms_modes")) {
    const auto& arr = j.at("nms_modes");
    if (arr.size() != 3) throw ConfigError("nms_modes needs 3 values");
    for (int i = 0; i < 3; ++i) {
      cfg.detector.nms_modes[i] = iou_mode_from_string(arr.at(i).get<std::string>());
    }
  }
  if (j.contains("min_face_size")) {
    cfg.detector.pyramid.min_face_size = j.at("min_face_size").get<int>();
  }
  if (j.contains("scale_factor")) {
    cfg.detector.pyramid.scale_factor = j.at("scale_factor").get<float>();
  }
  if (j.contains("stage1_input")) {
    cfg.detector.pyramid.stage1_input = j.at("stage1_input").get<int>();
  }
  if (j.contains("input_cap")) {
    cfg.detector.detector_input_cap = j.at("input_cap").get<int>();
  }
}

void apply_preprocess(RunConfig& cfg, const json& j) {
  expect_keys(j,
              {"frames_per_video", "margin_fraction", "ssim_window", "ssim_k1",
               "ssim_k2", "write_masks"},
              "preprocess");
  if (j.contains("frames_per_video")) {
    cfg.sampling.frames_per_video = j.at("frames_per_video").get<int>();
  }
  if (j.contains("margin_fraction")) {
    cfg.margin_fraction = j.at("margin_fraction").get<float>();
  }
  if (j.contains("ssim_window")) cfg.ssim.window = j.at("ssim_window").get<int>();
  if (j.contains("ssim_k1")) cfg.ssim.k1 = j.at("ssim_k1").get<float>();
  if (j.contains("ssim_k2")) cfg.ssim.k2 = j.at("ssim_k2").get<float>();
  if (j.contains("write_masks")) cfg.write_masks = j.at("write_masks").get<bool>();
}

void apply_classifier(RunConfig& cfg, const json& j) {
  expect_keys(j, {"variant", "width_budget", "input_resolution"}, "classifier");
  if (j.contains("variant")) cfg.variant = j.at("variant").get<std::string>();
  if (j.contains("width_budget")) {
    cfg.width_budget = j.at("width_budget").get<float>();
  }
  if (j.contains("input_resolution")) {
    cfg.input_resolution = j.at("input_resolution").get<int>();
  }
}

void apply_training(RunConfig& cfg, const json& j) {
  expect_keys(j,
              {"base_lr", "momentum", "poly_power", "total_steps", "batch_size",
               "label_smoothing_eps", "holdout_folders", "validation_every",
               "horizontal_flip", "compute_threads"},
              "training");
  TrainingConfig& t = cfg.training;
  if (j.contains("base_lr")) t.base_lr = j.at("base_lr").get<float>();
  if (j.contains("momentum")) t.momentum = j.at("momentum").get<float>();
  if (j.contains("poly_power")) t.poly_power = j.at("poly_power").get<float>();
  if (j.contains("total_steps")) t.total_steps = j.at("total_steps").get<int>();
  if (j.contains("batch_size")) t.batch_size = j.at("batch_size").get<int>();
  if (j.contains("label_smoothing_eps")) {
    t.label_smoothing_eps = j.at("label_smoothing_eps").get<float>();
  }
  if (j.contains("holdout_folders")) {
    t.holdout_folders.clear();
    for (const auto& f : j.at("holdout_folders")) {
      t.holdout_folders.insert(f.get<int>());
    }
  }
  if (j.contains("validation_every")) {
    t.validation_every = j.at("validation_every").get<int>();
  }
  if (j.contains("horizontal_flip")) {
    t.horizontal_flip = j.at("horizontal_flip").get<bool>();
  }
  if (j.contains("compute_threads")) {
    t.compute_threads = j.at("compute_threads").get<int>();
  }
}

void apply_aggregation(RunConfig& cfg, const json& j) {
  expect_keys(j,
              {"low_conf", "high_conf", "high_weight", "folded_confidence"},
              "aggregation");
  AggregationConfig& a = cfg.aggregation;
  if (j.contains("low_conf")) a.low_conf = j.at("low_conf").get<double>();
  if (j.contains("high_conf")) a.high_conf = j.at("high_conf").get<double>();
  if (j.contains("high_weight")) a.high_weight = j.at("high_weight").get<double>();
  if (j.contains("folded_confidence")) {
    a.folded_confidence = j.at("folded_confidence").get<bool>();
  }
}

}  // namespace

void apply_config_json(RunConfig& cfg, const json& j) {
  expect_keys(j,
              {"seed", "workers", "scorer", "detector", "preprocess",
               "classifier", "training", "aggregation"},
              "config");
  if (j.contains("seed")) cfg.seed = j.at("seed").get<uint64_t>();
  if (j.contains("workers")) cfg.workers = j.at("workers").get<int>();
  if (j.contains("scorer")) cfg.scorer = j.at("scorer").get<std::string>();
  if (j.contains("detector")) apply_detector(cfg, j.at("detector"));
  if (j.contains("preprocess")) apply_preprocess(cfg, j.at("preprocess"));
  if (j.contains("classifier")) apply_classifier(cfg, j.at("classifier"));
  if (j.contains("training")) apply_training(cfg, j.at("training"));
  if (j.contains("aggregation")) apply_aggregation(cfg, j.at("aggregation"));
}

RunConfig load_run_config(const std::optional<std::filesystem::path>& file) {
  RunConfig cfg;
  std::optional<std::filesystem::path> path = file;
  if (!path) {
    if (const char* env = std::getenv("FACEFAKE_CONFIG"); env && *env) {
      path = std::filesystem::path(env);
    }
  }
  if (path) {
    std::ifstream in(*path);
    if (!in) throw ConfigError("cannot open config file: " + path->string());
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw ConfigError("config parse error in " + path->string() + ": " + e.what());
    }
    apply_config_json(cfg, j);
  }
  return cfg;
}

json run_config_to_json(const RunConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["workers"] = cfg.workers;
  j["scorer"] = cfg.scorer;
  j["detector"] = {
      {"stage_thresholds", cfg.detector.stage_thresholds},
      {"nms_thresholds", cfg.detector.nms_thresholds},
      {"nms_modes",
       {iou_mode_to_string(cfg.detector.nms_modes[0]),
        iou_mode_to_string(cfg.detector.nms_modes[1]),
        iou_mode_to_string(cfg.detector.nms_modes[2])}},
      {"min_face_size", cfg.detector.pyramid.min_face_size},
      {"scale_factor", cfg.detector.pyramid.scale_factor},
      {"stage1_input", cfg.detector.pyramid.stage1_input},
      {"input_cap", cfg.detector.detector_input_cap},
  };
  j["preprocess"] = {
      {"frames_per_video", cfg.sampling.frames_per_video},
      {"margin_fraction", cfg.margin_fraction},
      {"ssim_window", cfg.ssim.window},
      {"ssim_k1", cfg.ssim.k1},
      {"ssim_k2", cfg.ssim.k2},
      {"write_masks", cfg.write_masks},
  };
  j["classifier"] = {
      {"variant", cfg.variant},
      {"width_budget", cfg.width_budget},
      {"input_resolution", cfg.input_resolution},
  };
  j["training"] = {
      {"base_lr", cfg.training.base_lr},
      {"momentum", cfg.training.momentum},
      {"poly_power", cfg.training.poly_power},
      {"total_steps", cfg.training.total_steps},
      {"batch_size", cfg.training.batch_size},
      {"label_smoothing_eps", cfg.training.label_smoothing_eps},
      {"holdout_folders", cfg.training.holdout_folders},
      {"validation_every", cfg.training.validation_every},
      {"horizontal_flip", cfg.training.horizontal_flip},
      {"compute_threads", cfg.training.compute_threads},
  };
  j["aggregation"] = {
      {"low_conf", cfg.aggregation.low_conf},
      {"high_conf", cfg.aggregation.high_conf},
      {"high_weight", cfg.aggregation.high_weight},
      {"folded_confidence", cfg.aggregation.folded_confidence},
  };
  return j;
}

}  // namespace facefake
