#include "facefake/preprocess.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <thread>

#include <json.hpp>

#include "facefake/png_io.hpp"

namespace facefake {

using nlohmann::json;

std::vector<int> sample_frames(int frame_count, const SamplingPlan& plan) {
  if (frame_count < 1) throw DataError("sample_frames requires frame_count >= 1");
  if (plan.frames_per_video < 1) {
    throw ConfigError("frames_per_video must be >= 1");
  }
  const int n = std::min(plan.frames_per_video, frame_count);
  std::vector<int> indices;
  if (n == 1) {
    indices.push_back(0);
    return indices;
  }
  indices.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double pos = static_cast<double>(i) * (frame_count - 1) / (n - 1);
    indices.push_back(static_cast<int>(std::lround(pos)));
  }
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  return indices;
}

namespace {

struct PixelRect {
  int x1, y1, x2, y2;
};

// Margin-expanded box, clipped to the frame, rounded outward.
PixelRect margin_rect(int frame_w, int frame_h, const BoundingBox& box,
                      float margin_fraction) {
  const float mx = 0.5f * margin_fraction * box.width();
  const float my = 0.5f * margin_fraction * box.height();
  const float ex1 = std::max(0.0f, box.x1 - mx);
  const float ey1 = std::max(0.0f, box.y1 - my);
  const float ex2 = std::min(static_cast<float>(frame_w), box.x2 + mx);
  const float ey2 = std::min(static_cast<float>(frame_h), box.y2 + my);
  PixelRect r;
  r.x1 = static_cast<int>(std::floor(ex1));
  r.y1 = static_cast<int>(std::floor(ey1));
  r.x2 = static_cast<int>(std::ceil(ex2));
  r.y2 = static_cast<int>(std::ceil(ey2));
  return r;
}

std::string frame_face_name(int frame_index, int face_index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06d_%d.png", frame_index, face_index);
  return buf;
}

}  // namespace

FaceCrop crop_with_margin(const ImageBuffer& frame, const BoundingBox& box,
                          float margin_fraction, const std::string& video_id,
                          int frame_index, Label label) {
  if (margin_fraction < 0) throw ConfigError("margin_fraction must be >= 0");
  if (box.x2 <= 0 || box.y2 <= 0 || box.x1 >= frame.width ||
      box.y1 >= frame.height) {
    throw DataError("face box lies entirely outside the frame");
  }
  const PixelRect r = margin_rect(frame.width, frame.height, box, margin_fraction);
  FaceCrop crop;
  crop.image = crop_rect(frame, r.x1, r.y1, r.x2, r.y2);
  crop.video_id = video_id;
  crop.frame_index = frame_index;
  crop.source_box = box;
  crop.margin_fraction = margin_fraction;
  crop.label = label;
  return crop;
}

FrameDirVideo::FrameDirVideo(std::filesystem::path dir) : dir_(std::move(dir)) {
  id_ = dir_.filename().string();
  std::ifstream in(dir_ / "meta.json");
  if (!in) throw DataError("missing meta.json in " + dir_.string());
  json meta;
  try {
    in >> meta;
    fps_ = meta.at("fps").get<double>();
    frame_count_ = meta.at("frame_count").get<int>();
  } catch (const json::exception& e) {
    throw DataError("bad meta.json in " + dir_.string() + ": " + e.what());
  }
  if (frame_count_ < 1) throw DataError("frame_count < 1 in " + dir_.string());
}

ImageBuffer FrameDirVideo::frame(int index) const {
  if (index < 0 || index >= frame_count_) {
    throw DataError("frame index " + std::to_string(index) + " out of range for " +
                    id_);
  }
  char name[16];
  std::snprintf(name, sizeof(name), "%06d.png", index);
  return read_png(dir_ / name);
}

std::vector<VideoListing> scan_input_dir(const std::filesystem::path& input_dir) {
  if (!std::filesystem::is_directory(input_dir)) {
    throw DataError("input dir does not exist: " + input_dir.string());
  }
  struct LabelRow {
    Label label;
    std::string original;
  };
  std::map<std::string, LabelRow> label_rows;
  const auto labels_path = input_dir / "labels.csv";
  if (std::filesystem::exists(labels_path)) {
    std::ifstream in(labels_path);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (first) {  // header
        first = false;
        continue;
      }
      if (line.empty()) continue;
      std::vector<std::string> cols;
      size_t start = 0;
      while (true) {
        const size_t comma = line.find(',', start);
        cols.push_back(line.substr(start, comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
      if (cols.size() < 2) throw DataError("bad labels.csv row: " + line);
      LabelRow row;
      row.label = label_from_string(cols[1]);
      if (cols.size() >= 3) row.original = cols[2];
      label_rows[cols[0]] = std::move(row);
    }
  }

  std::vector<VideoListing> out;
  for (const auto& entry : std::filesystem::directory_iterator(input_dir)) {
    if (!entry.is_directory()) continue;
    if (!std::filesystem::exists(entry.path() / "meta.json")) continue;
    VideoListing v;
    v.dir = entry.path();
    v.video_id = entry.path().filename().string();
    if (auto it = label_rows.find(v.video_id); it != label_rows.end()) {
      v.label = it->second.label;
      v.original_video_id = it->second.original;
    }
    out.push_back(std::move(v));
  }
  std::sort(out.begin(), out.end(), [](const VideoListing& a, const VideoListing& b) {
    return a.video_id < b.video_id;
  });
  return out;
}

namespace {

struct PerVideoOutput {
  std::vector<ManifestEntry> entries;
  std::vector<std::string> warnings;
  std::string error;  // non-empty on failure
  int crops = 0;
  int masks = 0;
};

PerVideoOutput process_video(const VideoListing& listing,
                             const std::map<std::string, const VideoListing*>& by_id,
                             const std::filesystem::path& detections_dir,
                             const std::filesystem::path& out_dir,
                             const MaterializeOptions& options) {
  PerVideoOutput out;
  const auto det_path = detections_dir / (listing.video_id + ".json");
  if (!std::filesystem::exists(det_path)) {
    out.error = "missing detections for " + listing.video_id;
    return out;
  }
  try {
    const auto [vid, detections] = load_detections(det_path);
    FrameDirVideo video(listing.dir);

    const VideoListing* paired = nullptr;
    if (listing.label == Label::kFake) {
      if (listing.original_video_id.empty()) {
        out.warnings.push_back(listing.video_id + ": fake without pairing, masks skipped");
      } else if (auto it = by_id.find(listing.original_video_id); it != by_id.end()) {
        paired = it->second;
      } else {
        out.warnings.push_back(listing.video_id + ": paired original " +
                               listing.original_video_id + " not in listing");
      }
    }
    std::optional<FrameDirVideo> paired_video;
    if (paired && options.write_masks) paired_video.emplace(paired->dir);

    const auto crops_dir = out_dir / "crops" / listing.video_id;
    std::filesystem::create_directories(crops_dir);
    std::filesystem::path masks_dir;
    if (paired_video) {
      masks_dir = out_dir / "masks" / listing.video_id;
      std::filesystem::create_directories(masks_dir);
    }

    for (const auto& [frame_index, dets] : detections) {
      if (dets.empty()) continue;
      const ImageBuffer frame = video.frame(frame_index);
      std::optional<ImageBuffer> real_frame;
      if (paired_video && frame_index < paired_video->frame_count()) {
        real_frame = paired_video->frame(frame_index);
      }
      for (size_t face = 0; face < dets.size(); ++face) {
        const FaceCrop crop =
            crop_with_margin(frame, dets[face].box, options.margin_fraction,
                             listing.video_id, frame_index, listing.label);
        const std::string name = frame_face_name(frame_index, static_cast<int>(face));
        write_png(crop.image, crops_dir / name);
        ++out.crops;

        ManifestEntry entry;
        entry.crop_path = "crops/" + listing.video_id + "/" + name;
        entry.video_id = listing.video_id;
        entry.frame_index = frame_index;
        entry.label = listing.label;
        entry.original_video_id = listing.original_video_id;
        out.entries.push_back(std::move(entry));

        if (real_frame && real_frame->height == frame.height &&
            real_frame->width == frame.width) {
          const PixelRect r = margin_rect(frame.width, frame.height,
                                          dets[face].box, options.margin_fraction);
          const ImageBuffer real_region =
              facefake::crop_rect(*real_frame, r.x1, r.y1, r.x2, r.y2);
          const ImageBuffer mask = ssim_map(real_region, crop.image, options.ssim);
          write_png(mask, masks_dir / name);
          ++out.masks;
        }
      }
    }
  } catch (const Error& e) {
    out.error = listing.video_id + ": " + e.what();
  }
  return out;
}

}  // namespace

MaterializeResult materialize_dataset(const std::vector<VideoListing>& videos,
                                      const std::filesystem::path& detections_dir,
                                      const std::filesystem::path& out_dir,
                                      const MaterializeOptions& options) {
  for (const VideoListing& v : videos) {
    if (v.label == Label::kUnknown) {
      throw DataError("materialize_dataset needs labeled videos (labels.csv); " +
                      v.video_id + " is unlabeled");
    }
  }
  std::filesystem::create_directories(out_dir);

  std::map<std::string, const VideoListing*> by_id;
  for (const VideoListing& v : videos) by_id[v.video_id] = &v;

  std::vector<PerVideoOutput> results(videos.size());
  const int workers = std::max(1, options.workers);
  std::atomic<size_t> cursor{0};
  auto run = [&]() {
    while (true) {
      const size_t i = cursor.fetch_add(1);
      if (i >= videos.size()) break;
      results[i] = process_video(videos[i], by_id, detections_dir, out_dir, options);
    }
  };
  if (workers == 1 || videos.size() <= 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(run);
    for (auto& th : pool) th.join();
  }

  MaterializeResult result;
  int ok = 0;
  std::set<std::string> real_ids;
  for (size_t i = 0; i < results.size(); ++i) {
    if (!results[i].error.empty()) {
      result.failed_videos.push_back(results[i].error);
      continue;
    }
    ++ok;
    if (videos[i].label == Label::kReal) real_ids.insert(videos[i].video_id);
  }
  if (!videos.empty() && ok == 0) {
    throw DataError("materialize_dataset: no video could be processed");
  }
  std::set<std::string> pairing_warned;
  for (size_t i = 0; i < results.size(); ++i) {
    PerVideoOutput& r = results[i];
    if (!r.error.empty()) continue;
    for (ManifestEntry& e : r.entries) {
      // Drop pairings whose real side produced no entries, keeping the
      // manifest referentially closed.
      if (e.label == Label::kFake && !e.original_video_id.empty() &&
          real_ids.count(e.original_video_id) == 0) {
        if (pairing_warned.insert(e.video_id).second) {
          r.warnings.push_back(e.video_id + ": pairing dropped, original " +
                               e.original_video_id + " yielded no crops");
        }
        e.original_video_id.clear();
      }
      result.manifest.entries.push_back(std::move(e));
    }
    result.crops_written += r.crops;
    result.masks_written += r.masks;
    for (std::string& w : r.warnings) result.warnings.push_back(std::move(w));
  }

  const auto violations = validate_manifest(result.manifest);
  if (!violations.empty()) {
    throw DataError("materialized manifest failed validation: " +
                    violations.front().code + " " + violations.front().detail);
  }
  save_manifest(result.manifest, out_dir / "manifest.json");
  return result;
}

}  // namespace facefake
