#include "facefake/nn/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace facefake::nn {

using nlohmann::json;

namespace {
constexpr char kMagic[8] = {'F', 'F', 'T', 'E', 'N', '0', '0', '1'};
}

json backbone_to_json(const BackboneConfig& cfg) {
  json j;
  j["stem_channels"] = cfg.stem_channels;
  j["head_channels"] = cfg.head_channels;
  j["input_resolution"] = cfg.input_resolution;
  j["dropout"] = cfg.dropout;
  j["width_mult"] = cfg.width_mult;
  j["depth_mult"] = cfg.depth_mult;
  j["drop_connect_rate"] = cfg.drop_connect_rate;
  j["in_channels"] = cfg.in_channels;
  json stages = json::array();
  for (const StageSpec& s : cfg.stages) {
    stages.push_back({{"expansion", s.expansion},
                      {"channels_out", s.channels_out},
                      {"repeats", s.repeats},
                      {"stride", s.stride},
                      {"kernel", s.kernel},
                      {"se_ratio", s.se_ratio}});
  }
  j["stages"] = std::move(stages);
  return j;
}

BackboneConfig backbone_from_json(const json& j) {
  try {
    BackboneConfig cfg;
    cfg.stem_channels = j.at("stem_channels").get<int>();
    cfg.head_channels = j.at("head_channels").get<int>();
    cfg.input_resolution = j.at("input_resolution").get<int>();
    cfg.dropout = j.at("dropout").get<float>();
    cfg.width_mult = j.at("width_mult").get<float>();
    cfg.depth_mult = j.at("depth_mult").get<float>();
    cfg.drop_connect_rate = j.at("drop_connect_rate").get<float>();
    cfg.in_channels = j.at("in_channels").get<int>();
    cfg.stages.clear();
    for (const json& js : j.at("stages")) {
      StageSpec s;
      s.expansion = js.at("expansion").get<int>();
      s.channels_out = js.at("channels_out").get<int>();
      s.repeats = js.at("repeats").get<int>();
      s.stride = js.at("stride").get<int>();
      s.kernel = js.at("kernel").get<int>();
      s.se_ratio = js.at("se_ratio").get<float>();
      cfg.stages.push_back(s);
    }
    return cfg;
  } catch (const json::exception& e) {
    throw DataError(std::string("bad backbone JSON: ") + e.what());
  }
}

void save_tensor_archive(const TensorArchive& archive,
                         const std::filesystem::path& path) {
  json header;
  header["meta"] = archive.meta;
  json dir = json::array();
  uint64_t offset = 0;  // in floats
  for (const CheckpointTensor& t : archive.tensors) {
    dir.push_back({{"name", t.name},
                   {"shape", t.shape},
                   {"count", t.values.size()},
                   {"offset", offset}});
    offset += t.values.size();
  }
  header["tensors"] = std::move(dir);
  const std::string htext = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write archive: " + path.string());
  out.write(kMagic, sizeof(kMagic));
  const uint64_t hlen = htext.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(htext.data(), static_cast<std::streamsize>(htext.size()));
  for (const CheckpointTensor& t : archive.tensors) {
    out.write(reinterpret_cast<const char*>(t.values.data()),
              static_cast<std::streamsize>(t.values.size() * sizeof(float)));
  }
  if (!out) throw DataError("archive write failed: " + path.string());
}

TensorArchive load_tensor_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open archive: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError("not a tensor archive: " + path.string());
  }
  uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  if (!in || hlen > (1ULL << 30)) {
    throw DataError("corrupt archive header: " + path.string());
  }
  std::string htext(hlen, '\0');
  in.read(htext.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw DataError("truncated archive header: " + path.string());

  TensorArchive archive;
  try {
    json header = json::parse(htext);
    archive.meta = header.at("meta");
    for (const json& jt : header.at("tensors")) {
      CheckpointTensor t;
      t.name = jt.at("name").get<std::string>();
      t.shape = jt.at("shape").get<std::vector<int>>();
      t.values.resize(jt.at("count").get<size_t>());
      archive.tensors.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw DataError("corrupt archive header: " + std::string(e.what()));
  }
  for (CheckpointTensor& t : archive.tensors) {
    in.read(reinterpret_cast<char*>(t.values.data()),
            static_cast<std::streamsize>(t.values.size() * sizeof(float)));
  }
  if (!in) throw DataError("truncated archive data: " + path.string());
  return archive;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  TensorArchive archive;
  archive.meta = json{{"kind", "classifier"}, {"backbone", backbone_to_json(ckpt.backbone)}};
  archive.tensors = ckpt.tensors;
  save_tensor_archive(archive, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  TensorArchive archive = load_tensor_archive(path);
  Checkpoint ckpt;
  try {
    if (archive.meta.at("kind").get<std::string>() != "classifier") {
      throw DataError("archive is not a classifier checkpoint: " + path.string());
    }
    ckpt.backbone = backbone_from_json(archive.meta.at("backbone"));
  } catch (const json::exception& e) {
    throw DataError("corrupt checkpoint meta: " + std::string(e.what()));
  }
  ckpt.tensors = std::move(archive.tensors);
  return ckpt;
}

}  // namespace facefake::nn
