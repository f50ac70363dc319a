#include "facefake/manifest.hpp"

#include <fstream>
#include <unordered_set>

#include <json.hpp>

namespace facefake {

using nlohmann::json;

std::string label_to_string(Label label) {
  switch (label) {
    case Label::kReal: return "REAL";
    case Label::kFake: return "FAKE";
    case Label::kUnknown: return "UNKNOWN";
  }
  throw ConfigError("unhandled label value");
}

Label label_from_string(const std::string& s) {
  if (s == "REAL") return Label::kReal;
  if (s == "FAKE") return Label::kFake;
  if (s == "UNKNOWN") return Label::kUnknown;
  throw DataError("unknown label string: " + s);
}

std::vector<Violation> validate_manifest(const DatasetManifest& manifest) {
  std::vector<Violation> out;
  std::unordered_set<std::string> seen;
  std::unordered_set<std::string> real_videos;
  for (const ManifestEntry& e : manifest.entries) {
    if (e.label == Label::kReal) real_videos.insert(e.video_id);
  }
  for (const ManifestEntry& e : manifest.entries) {
    if (!seen.insert(e.crop_path).second) {
      out.push_back({"duplicate_crop_path", e.crop_path});
    }
    if (e.label == Label::kUnknown) {
      out.push_back({"unknown_label", e.crop_path});
    }
    if (e.frame_index < 0) {
      out.push_back({"negative_frame_index", e.crop_path});
    }
    if (e.label == Label::kFake && !e.original_video_id.empty() &&
        real_videos.count(e.original_video_id) == 0) {
      out.push_back({"missing_original",
                     e.video_id + " -> " + e.original_video_id});
    }
  }
  return out;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest: " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw DataError("manifest parse error in " + path.string() + ": " + e.what());
  }
  try {
    if (doc.at("version").get<int>() != 1) {
      throw DataError("unsupported manifest version in " + path.string());
    }
    DatasetManifest manifest;
    for (const json& je : doc.at("entries")) {
      ManifestEntry e;
      e.crop_path = je.at("crop_path").get<std::string>();
      e.video_id = je.at("video_id").get<std::string>();
      e.frame_index = je.at("frame_index").get<int>();
      e.label = label_from_string(je.at("label").get<std::string>());
      if (je.contains("original_video_id") && !je["original_video_id"].is_null()) {
        e.original_video_id = je["original_video_id"].get<std::string>();
      }
      manifest.entries.push_back(std::move(e));
    }
    return manifest;
  } catch (const json::exception& e) {
    throw DataError("manifest schema error in " + path.string() + ": " + e.what());
  }
}

void save_manifest(const DatasetManifest& manifest,
                   const std::filesystem::path& path) {
  json doc;
  doc["version"] = 1;
  json entries = json::array();
  for (const ManifestEntry& e : manifest.entries) {
    json je;
    je["crop_path"] = e.crop_path;
    je["video_id"] = e.video_id;
    je["frame_index"] = e.frame_index;
    je["label"] = label_to_string(e.label);
    if (!e.original_video_id.empty()) {
      je["original_video_id"] = e.original_video_id;
    }
    entries.push_back(std::move(je));
  }
  doc["entries"] = std::move(entries);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest: " + path.string());
  out << doc.dump(2) << "\n";
}

std::optional<int> folder_of(const std::string& video_id) {
  const auto sep = video_id.find('_');
  if (sep == std::string::npos || sep == 0) return std::nullopt;
  int value = 0;
  for (size_t i = 0; i < sep; ++i) {
    const char c = video_id[i];
    if (c < '0' || c > '9') return std::nullopt;
    value = value * 10 + (c - '0');
  }
  return value;
}

}  // namespace facefake
