#include "facefake/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include <json.hpp>

#include "facefake/png_io.hpp"

namespace facefake {

namespace {

uint64_t mix(uint64_t a, uint64_t b) {
  // splitmix64 step over the combined value
  uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct FaceTrack {
  float cx0, cy0, vx, vy, phase;
  float rx, ry;
  float base_r, base_g, base_b;
};

FaceTrack sample_track(std::mt19937_64& rng, int w, int h, int frames) {
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  FaceTrack t;
  t.rx = 16.0f + 10.0f * unit(rng);
  t.ry = t.rx * (1.15f + 0.3f * unit(rng));
  const float mx = t.rx + 6.0f, my = t.ry + 6.0f;
  t.cx0 = mx + (w - 2 * mx) * unit(rng);
  t.cy0 = my + (h - 2 * my) * unit(rng);
  // drift that stays in frame across the clip
  const float span_x = (w - 2 * mx) * 0.4f;
  const float span_y = (h - 2 * my) * 0.4f;
  t.vx = (unit(rng) - 0.5f) * 2.0f * span_x / frames;
  t.vy = (unit(rng) - 0.5f) * 2.0f * span_y / frames;
  t.phase = unit(rng) * 6.28318f;
  t.base_r = 195.0f + 25.0f * unit(rng);
  t.base_g = 158.0f + 22.0f * unit(rng);
  t.base_b = 128.0f + 20.0f * unit(rng);
  return t;
}

struct FacePose {
  float cx, cy, rx, ry;
};

FacePose pose_at(const FaceTrack& t, int frame, int w, int h) {
  FacePose p;
  p.rx = t.rx;
  p.ry = t.ry;
  p.cx = t.cx0 + t.vx * frame + 2.5f * std::sin(0.31f * frame + t.phase);
  p.cy = t.cy0 + t.vy * frame + 2.0f * std::cos(0.27f * frame + t.phase);
  p.cx = std::clamp(p.cx, t.rx + 4.0f, w - t.rx - 4.0f);
  p.cy = std::clamp(p.cy, t.ry + 4.0f, h - t.ry - 4.0f);
  return p;
}

void fill_ellipse(ImageBuffer& img, float cx, float cy, float rx, float ry,
                  float r, float g, float b) {
  const int y0 = std::max(0, static_cast<int>(cy - ry));
  const int y1 = std::min(img.height - 1, static_cast<int>(cy + ry));
  const int x0 = std::max(0, static_cast<int>(cx - rx));
  const int x1 = std::min(img.width - 1, static_cast<int>(cx + rx));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const float dx = (x - cx) / rx;
      const float dy = (y - cy) / ry;
      if (dx * dx + dy * dy <= 1.0f) {
        img.at(y, x, 0) = r;
        img.at(y, x, 1) = g;
        img.at(y, x, 2) = b;
      }
    }
  }
}

ImageBuffer render_frame(const SynthOptions& o, const FaceTrack& track,
                         int frame, uint64_t noise_seed) {
  std::mt19937_64 rng(noise_seed);
  std::uniform_real_distribution<float> noise(-8.0f, 8.0f);
  std::uniform_real_distribution<float> skin_noise(-6.0f, 6.0f);

  ImageBuffer img(o.height, o.width, 3);
  for (int y = 0; y < o.height; ++y) {
    const float base = 34.0f + 22.0f * y / o.height;
    for (int x = 0; x < o.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        img.at(y, x, c) = std::clamp(base + noise(rng), 0.0f, 255.0f);
      }
    }
  }

  const FacePose p = pose_at(track, frame, o.width, o.height);
  const int y0 = std::max(0, static_cast<int>(p.cy - p.ry));
  const int y1 = std::min(o.height - 1, static_cast<int>(p.cy + p.ry));
  const int x0 = std::max(0, static_cast<int>(p.cx - p.rx));
  const int x1 = std::min(o.width - 1, static_cast<int>(p.cx + p.rx));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const float dx = (x - p.cx) / p.rx;
      const float dy = (y - p.cy) / p.ry;
      const float rho = dx * dx + dy * dy;
      if (rho > 1.0f) continue;
      const float shade = 1.0f - 0.22f * rho;
      const float n = skin_noise(rng);
      img.at(y, x, 0) = std::clamp(track.base_r * shade + n, 0.0f, 255.0f);
      img.at(y, x, 1) = std::clamp(track.base_g * shade + n, 0.0f, 255.0f);
      img.at(y, x, 2) = std::clamp(track.base_b * shade + n, 0.0f, 255.0f);
    }
  }
  // eyes and mouth
  fill_ellipse(img, p.cx - 0.38f * p.rx, p.cy - 0.28f * p.ry, 0.16f * p.rx,
               0.12f * p.ry, 55, 38, 35);
  fill_ellipse(img, p.cx + 0.38f * p.rx, p.cy - 0.28f * p.ry, 0.16f * p.rx,
               0.12f * p.ry, 55, 38, 35);
  fill_ellipse(img, p.cx, p.cy + 0.45f * p.ry, 0.40f * p.rx, 0.13f * p.ry, 120,
               55, 55);
  return img;
}

// Localized manipulation: box blur + boundary seam + mild color shift over
// the central face patch.
void apply_fake_artifact(ImageBuffer& img, const FacePose& p) {
  const int px0 = std::max(1, static_cast<int>(p.cx - 0.75f * p.rx));
  const int px1 = std::min(img.width - 2, static_cast<int>(p.cx + 0.75f * p.rx));
  const int py0 = std::max(1, static_cast<int>(p.cy - 0.65f * p.ry));
  const int py1 = std::min(img.height - 2, static_cast<int>(p.cy + 0.80f * p.ry));
  if (px1 <= px0 || py1 <= py0) return;

  const ImageBuffer src = img;
  const int rad = 2;
  for (int y = py0; y <= py1; ++y) {
    for (int x = px0; x <= px1; ++x) {
      for (int c = 0; c < 3; ++c) {
        float sum = 0;
        int count = 0;
        for (int yy = std::max(0, y - rad); yy <= std::min(img.height - 1, y + rad); ++yy) {
          for (int xx = std::max(0, x - rad); xx <= std::min(img.width - 1, x + rad); ++xx) {
            sum += src.at(yy, xx, c);
            ++count;
          }
        }
        float v = sum / count;
        if (c == 0) v += 10.0f;  // slight warm shift inside the swap region
        img.at(y, x, c) = std::clamp(v, 0.0f, 255.0f);
      }
    }
  }
  // seam along the patch boundary
  for (int x = px0; x <= px1; ++x) {
    for (int c = 0; c < 3; ++c) {
      img.at(py0, x, c) = std::clamp(img.at(py0, x, c) * 0.80f, 0.0f, 255.0f);
      img.at(py1, x, c) = std::clamp(img.at(py1, x, c) * 0.80f, 0.0f, 255.0f);
    }
  }
  for (int y = py0; y <= py1; ++y) {
    for (int c = 0; c < 3; ++c) {
      img.at(y, px0, c) = std::clamp(img.at(y, px0, c) * 0.80f, 0.0f, 255.0f);
      img.at(y, px1, c) = std::clamp(img.at(y, px1, c) * 0.80f, 0.0f, 255.0f);
    }
  }
}

void write_video(const std::filesystem::path& dir, const SynthOptions& o,
                 const FaceTrack& track, uint64_t video_key, bool fake) {
  std::filesystem::create_directories(dir);
  for (int f = 0; f < o.frames_per_video; ++f) {
    ImageBuffer frame = render_frame(o, track, f, mix(video_key, f));
    if (fake) apply_fake_artifact(frame, pose_at(track, f, o.width, o.height));
    char name[16];
    std::snprintf(name, sizeof(name), "%06d.png", f);
    write_png(frame, dir / name);
  }
  nlohmann::json meta;
  meta["fps"] = o.fps;
  meta["frame_count"] = o.frames_per_video;
  std::ofstream out(dir / "meta.json");
  out << meta.dump(2) << "\n";
}

}  // namespace

FacePatch render_face_patch(int size, float face_scale, float jitter_x,
                            float jitter_y, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  SynthOptions o;
  o.width = size;
  o.height = size;

  FaceTrack track;
  track.rx = 0.5f * face_scale * size * (0.95f + 0.1f * unit(rng));
  track.ry = 0.5f * face_scale * size;
  track.cx0 = 0.5f * size + jitter_x * size;
  track.cy0 = 0.5f * size + jitter_y * size;
  track.vx = track.vy = 0;
  track.phase = 0;
  track.base_r = 195.0f + 25.0f * unit(rng);
  track.base_g = 158.0f + 22.0f * unit(rng);
  track.base_b = 128.0f + 20.0f * unit(rng);

  ImageBuffer img(size, size, 3);
  std::uniform_real_distribution<float> noise(-8.0f, 8.0f);
  std::uniform_real_distribution<float> skin_noise(-6.0f, 6.0f);
  for (int y = 0; y < size; ++y) {
    const float base = 34.0f + 22.0f * y / size;
    for (int x = 0; x < size; ++x) {
      for (int c = 0; c < 3; ++c) {
        img.at(y, x, c) = std::clamp(base + noise(rng), 0.0f, 255.0f);
      }
    }
  }
  const float cx = track.cx0, cy = track.cy0;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const float dx = (x - cx) / track.rx;
      const float dy = (y - cy) / track.ry;
      const float rho = dx * dx + dy * dy;
      if (rho > 1.0f) continue;
      const float shade = 1.0f - 0.22f * rho;
      const float n = skin_noise(rng);
      img.at(y, x, 0) = std::clamp(track.base_r * shade + n, 0.0f, 255.0f);
      img.at(y, x, 1) = std::clamp(track.base_g * shade + n, 0.0f, 255.0f);
      img.at(y, x, 2) = std::clamp(track.base_b * shade + n, 0.0f, 255.0f);
    }
  }
  if (size >= 16) {
    fill_ellipse(img, cx - 0.38f * track.rx, cy - 0.28f * track.ry,
                 0.16f * track.rx, 0.12f * track.ry, 55, 38, 35);
    fill_ellipse(img, cx + 0.38f * track.rx, cy - 0.28f * track.ry,
                 0.16f * track.rx, 0.12f * track.ry, 55, 38, 35);
    fill_ellipse(img, cx, cy + 0.45f * track.ry, 0.40f * track.rx,
                 0.13f * track.ry, 120, 55, 55);
  }
  FacePatch patch;
  patch.image = std::move(img);
  patch.x1 = cx - track.rx;
  patch.y1 = cy - track.ry;
  patch.x2 = cx + track.rx;
  patch.y2 = cy + track.ry;
  return patch;
}

ImageBuffer render_background_patch(int size, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> noise(-8.0f, 8.0f);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  const float lo = 20.0f + 40.0f * unit(rng);
  const float slope = 30.0f * unit(rng);
  ImageBuffer img(size, size, 3);
  for (int y = 0; y < size; ++y) {
    const float base = lo + slope * y / size;
    for (int x = 0; x < size; ++x) {
      for (int c = 0; c < 3; ++c) {
        img.at(y, x, c) = std::clamp(base + noise(rng), 0.0f, 255.0f);
      }
    }
  }
  return img;
}

SynthSummary generate_synthetic_dataset(const std::filesystem::path& out_dir,
                                        const SynthOptions& o) {
  if (o.n_videos < 1) throw ConfigError("n_videos must be >= 1");
  if (o.frames_per_video < 1) throw ConfigError("frames_per_video must be >= 1");
  if (o.fake_fraction < 0 || o.fake_fraction > 1) {
    throw ConfigError("fake_fraction must lie in [0, 1]");
  }
  std::filesystem::create_directories(out_dir);

  const int n_fake = static_cast<int>(std::lround(o.n_videos * o.fake_fraction));
  const int n_real = o.n_videos - n_fake;

  SynthSummary summary;
  std::ofstream labels(out_dir / "labels.csv");
  if (!labels) throw DataError("cannot write labels.csv in " + out_dir.string());
  labels << "filename,label,original\n";

  std::vector<FaceTrack> tracks(n_real);
  std::vector<std::string> real_ids(n_real);
  char id[32];
  for (int i = 0; i < n_real; ++i) {
    std::mt19937_64 rng(mix(o.seed, 0x5ea1ULL + i));
    tracks[i] = sample_track(rng, o.width, o.height, o.frames_per_video);
    const int folder = i % o.n_folders;
    std::snprintf(id, sizeof(id), "%02d_real_%04d", folder, i);
    real_ids[i] = id;
    write_video(out_dir / id, o, tracks[i], mix(o.seed, 0xab1eULL + i), false);
    labels << id << ",REAL,\n";
    ++summary.real_videos;
    summary.frames_written += o.frames_per_video;
  }
  for (int j = 0; j < n_fake; ++j) {
    FaceTrack track;
    std::string original;
    uint64_t key;
    if (n_real > 0) {
      const int src = j % n_real;
      track = tracks[src];
      original = real_ids[src];
      key = mix(o.seed, 0xab1eULL + src);  // same noise stream as the original
    } else {
      std::mt19937_64 rng(mix(o.seed, 0xfa6eULL + j));
      track = sample_track(rng, o.width, o.height, o.frames_per_video);
      key = mix(o.seed, 0xcafeULL + j);
    }
    const int folder = n_real > 0 ? (j % n_real) % o.n_folders : j % o.n_folders;
    std::snprintf(id, sizeof(id), "%02d_fake_%04d", folder, j);
    write_video(out_dir / id, o, track, key, true);
    labels << id << ",FAKE," << original << "\n";
    ++summary.fake_videos;
    summary.frames_written += o.frames_per_video;
  }
  return summary;
}

}  // namespace facefake
