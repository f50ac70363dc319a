#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "facefake/nn/backbone.hpp"
#include "facefake/scaling.hpp"

namespace facefake::nn {

/// One serialized tensor: values flattened in float32 regardless of the
/// model's compute scalar.
struct CheckpointTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<float> values;
};

/// Raw container: a JSON meta header plus a tensor directory, followed by
/// little-endian float32 data. Shared by model checkpoints and stage-scorer
/// archives.
struct TensorArchive {
  nlohmann::json meta;
  std::vector<CheckpointTensor> tensors;
};

void save_tensor_archive(const TensorArchive& archive,
                         const std::filesystem::path& path);
TensorArchive load_tensor_archive(const std::filesystem::path& path);

/// Self-describing classifier checkpoint: the backbone plan plus every
/// parameter and running-statistics tensor.
struct Checkpoint {
  BackboneConfig backbone;
  std::vector<CheckpointTensor> tensors;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// BackboneConfig <-> JSON (shared by checkpoints and config files).
nlohmann::json backbone_to_json(const BackboneConfig& cfg);
BackboneConfig backbone_from_json(const nlohmann::json& j);

template <typename S>
CheckpointTensor tensor_from_param(const Param<S>& p) {
  CheckpointTensor t;
  t.name = p.name;
  t.shape = p.shape;
  t.values.resize(static_cast<size_t>(p.value.size()));
  for (Eigen::Index i = 0; i < p.value.size(); ++i) {
    t.values[static_cast<size_t>(i)] = static_cast<float>(p.value[i]);
  }
  return t;
}

template <typename S>
Checkpoint snapshot_model(EfficientNet<S>& model) {
  Checkpoint ckpt;
  ckpt.backbone = model.config();
  for (Param<S>* p : model.params()) ckpt.tensors.push_back(tensor_from_param(*p));
  for (Param<S>* p : model.buffers()) ckpt.tensors.push_back(tensor_from_param(*p));
  return ckpt;
}

/// Restores named tensors into params/buffers. Every archive tensor must
/// resolve with an exact shape match and every model tensor must be covered,
/// otherwise DataError.
template <typename S>
void restore_named_tensors(const std::vector<CheckpointTensor>& tensors,
                           const std::vector<Param<S>*>& targets) {
  std::map<std::string, Param<S>*> by_name;
  for (Param<S>* p : targets) by_name[p->name] = p;
  size_t matched = 0;
  for (const CheckpointTensor& t : tensors) {
    auto it = by_name.find(t.name);
    if (it == by_name.end()) {
      throw DataError("archive tensor has no home in the model: " + t.name);
    }
    Param<S>* p = it->second;
    if (p->shape != t.shape ||
        static_cast<size_t>(p->value.size()) != t.values.size()) {
      throw DataError("tensor shape mismatch for " + t.name);
    }
    for (size_t i = 0; i < t.values.size(); ++i) {
      p->value[static_cast<Eigen::Index>(i)] = static_cast<S>(t.values[i]);
    }
    ++matched;
  }
  if (matched != by_name.size()) {
    throw DataError("archive is missing model tensors");
  }
}

template <typename S>
void restore_model(EfficientNet<S>& model, const Checkpoint& ckpt) {
  std::vector<Param<S>*> targets = model.params();
  for (Param<S>* p : model.buffers()) targets.push_back(p);
  restore_named_tensors(ckpt.tensors, targets);
}

}  // namespace facefake::nn
