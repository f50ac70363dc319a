#include "facefake/detector.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace facefake {

using nlohmann::json;

std::vector<float> build_pyramid(int height, int width, const PyramidSpec& spec) {
  if (spec.scale_factor <= 0 || spec.scale_factor >= 1) {
    throw ConfigError("pyramid scale_factor must lie in (0, 1)");
  }
  if (spec.min_face_size < spec.stage1_input) {
    throw ConfigError("min_face_size must be >= stage1 input size");
  }
  const int short_side = std::min(height, width);
  std::vector<float> scales;
  float scale = static_cast<float>(spec.stage1_input) / spec.min_face_size;
  while (short_side * scale >= static_cast<float>(spec.stage1_input)) {
    scales.push_back(scale);
    scale *= spec.scale_factor;
  }
  if (scales.empty()) {
    throw EmptyPyramidError("frame " + std::to_string(height) + "x" +
                            std::to_string(width) +
                            " is too small for the detection pyramid");
  }
  return scales;
}

std::vector<StageScore> StageScorer::score_batch(
    const std::vector<ImageBuffer>& patches) const {
  std::vector<StageScore> out;
  out.reserve(patches.size());
  for (const ImageBuffer& p : patches) out.push_back(score(p));
  return out;
}

std::pair<ImageBuffer, float> dynamic_resize(const ImageBuffer& frame, int cap) {
  const int long_side = std::max(frame.height, frame.width);
  if (long_side <= cap) return {frame, 1.0f};
  const float scale = static_cast<float>(cap) / long_side;
  const int h = static_cast<int>(std::round(frame.height * scale));
  const int w = static_cast<int>(std::round(frame.width * scale));
  return {resize_bilinear(frame, h, w), scale};
}

namespace {

struct Candidate {
  BoundingBox box;
  Landmarks landmarks;
};

std::vector<int> nms_indices(const std::vector<BoundingBox>& boxes,
                             float threshold, IouMode mode) {
  std::vector<int> order(boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return boxes[a].confidence > boxes[b].confidence;
  });
  std::vector<int> kept;
  for (int idx : order) {
    bool suppressed = false;
    for (int k : kept) {
      if (iou(boxes[idx], boxes[k], mode) > threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(idx);
  }
  return kept;
}

std::vector<Candidate> nms_candidates(const std::vector<Candidate>& cands,
                                      float threshold, IouMode mode) {
  std::vector<BoundingBox> boxes;
  boxes.reserve(cands.size());
  for (const Candidate& c : cands) boxes.push_back(c.box);
  std::vector<Candidate> out;
  for (int idx : nms_indices(boxes, threshold, mode)) out.push_back(cands[idx]);
  return out;
}

// Integer pixel rectangle covering a float box, rounded outward.
ImageBuffer crop_box(const ImageBuffer& img, const BoundingBox& box) {
  const int x1 = static_cast<int>(std::floor(box.x1));
  const int y1 = static_cast<int>(std::floor(box.y1));
  const int x2 = std::max(x1 + 1, static_cast<int>(std::ceil(box.x2)));
  const int y2 = std::max(y1 + 1, static_cast<int>(std::ceil(box.y2)));
  return crop_rect(img, x1, y1, x2, y2);
}

std::vector<Candidate> proposal_stage(const ImageBuffer& frame,
                                      const StageScorer& scorer,
                                      const CascadeConfig& config) {
  const int input = config.pyramid.stage1_input;
  const int stride = 2;
  const std::vector<float> scales =
      build_pyramid(frame.height, frame.width, config.pyramid);

  std::vector<Candidate> all;
  for (float scale : scales) {
    const int sh = std::max(input, static_cast<int>(std::round(frame.height * scale)));
    const int sw = std::max(input, static_cast<int>(std::round(frame.width * scale)));
    const ImageBuffer scaled = resize_bilinear(frame, sh, sw);

    std::vector<ImageBuffer> patches;
    std::vector<std::pair<int, int>> origins;
    for (int r = 0; r + input <= sh; r += stride) {
      for (int c = 0; c + input <= sw; c += stride) {
        patches.push_back(crop_rect(scaled, c, r, c + input, r + input));
        origins.emplace_back(r, c);
      }
    }
    const std::vector<StageScore> scores = scorer.score_batch(patches);

    std::vector<Candidate> level;
    for (size_t i = 0; i < scores.size(); ++i) {
      if (scores[i].p_face < config.stage_thresholds[0]) continue;
      const auto [r, c] = origins[i];
      BoundingBox window;
      window.x1 = c / scale;
      window.y1 = r / scale;
      window.x2 = (c + input) / scale;
      window.y2 = (r + input) / scale;
      window.confidence = scores[i].p_face;
      try {
        level.push_back({apply_box_regression(window, scores[i].box_offsets), {}});
      } catch (const DegenerateBoxError&) {
        // collapsed candidates are dropped, not fatal
      }
    }
    level = nms_candidates(level, config.nms_thresholds[0], config.nms_modes[0]);
    all.insert(all.end(), level.begin(), level.end());
  }
  return nms_candidates(all, config.nms_thresholds[0], config.nms_modes[0]);
}

std::vector<Candidate> refine_stage(const ImageBuffer& frame,
                                    const std::vector<Candidate>& cands,
                                    const StageScorer& scorer, float threshold,
                                    float nms_threshold, IouMode mode,
                                    bool want_landmarks) {
  const int input = scorer.input_size();
  std::vector<BoundingBox> squares;
  std::vector<ImageBuffer> patches;
  squares.reserve(cands.size());
  for (const Candidate& c : cands) {
    BoundingBox sq = square_pad(c.box);
    squares.push_back(sq);
    patches.push_back(resize_bilinear(crop_box(frame, sq), input, input));
  }
  const std::vector<StageScore> scores = scorer.score_batch(patches);

  std::vector<Candidate> out;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (scores[i].p_face < threshold) continue;
    BoundingBox sq = squares[i];
    sq.confidence = scores[i].p_face;
    Candidate cand;
    if (want_landmarks && scores[i].landmarks.has_value()) {
      // Landmarks are normalized to the pre-regression square patch.
      const auto& lm = *scores[i].landmarks;
      std::array<Eigen::Vector2f, 5> pts;
      for (int k = 0; k < 5; ++k) {
        pts[k].x() = sq.x1 + lm[k].x() * sq.width();
        pts[k].y() = sq.y1 + lm[k].y() * sq.height();
      }
      cand.landmarks = Landmarks::from_points(pts);
    }
    try {
      cand.box = apply_box_regression(sq, scores[i].box_offsets);
    } catch (const DegenerateBoxError&) {
      continue;
    }
    out.push_back(std::move(cand));
  }
  return nms_candidates(out, nms_threshold, mode);
}

}  // namespace

std::vector<Detection> detect_faces(const ImageBuffer& frame,
                                    const StageScorer& stage1,
                                    const StageScorer& stage2,
                                    const StageScorer& stage3,
                                    const CascadeConfig& config,
                                    CascadeTrace* trace) {
  const auto [work, scale] = dynamic_resize(frame, config.detector_input_cap);

  std::vector<Candidate> cands = proposal_stage(work, stage1, config);
  if (trace) trace->candidates_after_stage[0] = static_cast<int>(cands.size());
  cands = refine_stage(work, cands, stage2, config.stage_thresholds[1],
                       config.nms_thresholds[1], config.nms_modes[1], false);
  if (trace) trace->candidates_after_stage[1] = static_cast<int>(cands.size());
  cands = refine_stage(work, cands, stage3, config.stage_thresholds[2],
                       config.nms_thresholds[2], config.nms_modes[2], true);
  if (trace) trace->candidates_after_stage[2] = static_cast<int>(cands.size());

  const float inv = 1.0f / scale;
  std::vector<Detection> out;
  out.reserve(cands.size());
  for (Candidate& c : cands) {
    Detection det;
    det.box = c.box;
    det.box.x1 *= inv;
    det.box.y1 *= inv;
    det.box.x2 *= inv;
    det.box.y2 *= inv;
    det.box = clip_to_frame(det.box, frame.width, frame.height);
    if (!det.box.valid()) continue;
    auto pts = c.landmarks.points();
    for (auto& p : pts) {
      p *= inv;
      p.x() = std::clamp(p.x(), 0.0f, static_cast<float>(frame.width - 1));
      p.y() = std::clamp(p.y(), 0.0f, static_cast<float>(frame.height - 1));
    }
    det.landmarks = Landmarks::from_points(pts);
    out.push_back(std::move(det));
  }
  return out;
}

void save_detections(const std::string& video_id, const VideoDetections& dets,
                     const std::filesystem::path& path) {
  json frames = json::object();
  for (const auto& [frame_index, list] : dets) {
    json arr = json::array();
    for (const Detection& d : list) {
      json jd;
      jd["box"] = {d.box.x1, d.box.y1, d.box.x2, d.box.y2};
      jd["confidence"] = d.box.confidence;
      json lms = json::array();
      for (const auto& p : d.landmarks.points()) {
        lms.push_back({p.x(), p.y()});
      }
      jd["landmarks"] = std::move(lms);
      arr.push_back(std::move(jd));
    }
    frames[std::to_string(frame_index)] = std::move(arr);
  }
  json doc;
  doc["video_id"] = video_id;
  doc["frames"] = std::move(frames);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write detections: " + path.string());
  out << doc.dump(2) << "\n";
}

std::pair<std::string, VideoDetections> load_detections(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open detections: " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw DataError("detections parse error in " + path.string() + ": " + e.what());
  }
  try {
    VideoDetections dets;
    for (const auto& [key, arr] : doc.at("frames").items()) {
      std::vector<Detection> list;
      for (const json& jd : arr) {
        Detection d;
        const auto& b = jd.at("box");
        d.box.x1 = b.at(0).get<float>();
        d.box.y1 = b.at(1).get<float>();
        d.box.x2 = b.at(2).get<float>();
        d.box.y2 = b.at(3).get<float>();
        d.box.confidence = jd.at("confidence").get<float>();
        std::array<Eigen::Vector2f, 5> pts;
        const auto& lms = jd.at("landmarks");
        for (int k = 0; k < 5; ++k) {
          pts[k].x() = lms.at(k).at(0).get<float>();
          pts[k].y() = lms.at(k).at(1).get<float>();
        }
        d.landmarks = Landmarks::from_points(pts);
        list.push_back(std::move(d));
      }
      dets[std::stoi(key)] = std::move(list);
    }
    return {doc.at("video_id").get<std::string>(), std::move(dets)};
  } catch (const json::exception& e) {
    throw DataError("detections schema error in " + path.string() + ": " + e.what());
  }
}

}  // namespace facefake
