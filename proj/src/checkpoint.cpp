// Copyright 2026 The Urban Acoustics Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "urban/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <unordered_map>

#include "json.hpp"
#include "urban/audio_io.hpp"

namespace urban::nn {
namespace {

using nlohmann::json;

class Writer {
 public:
  void Bytes(const void* p, size_t n) {
    const auto* b = static_cast<const uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename U>
  void Le(U v) {
    for (size_t i = 0; i < sizeof(U); ++i) out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void F32(float f) { Le(std::bit_cast<uint32_t>(f)); }
  std::vector<uint8_t> Take() { return std::move(out_); }

 private:
  std::vector<uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const uint8_t> b) : b_(b) {}
  bool done() const { return pos_ == b_.size(); }
  std::span<const uint8_t> Bytes(size_t n) {
    if (b_.size() - pos_ < n) throw CheckpointError("checkpoint truncated");
    auto s = b_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  template <typename U>
  U Le() {
    auto s = Bytes(sizeof(U));
    U v = 0;
    for (size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(s[i]) << (8 * i));
    return v;
  }

 private:
  std::span<const uint8_t> b_;
  size_t pos_ = 0;
};

json ModelToJson(const ModelConfig& m) {
  json blocks = json::array();
  for (const auto& b : m.blocks)
    blocks.push_back({b.out_filters, b.kernel_h, b.kernel_w, b.pad_h, b.pad_w, b.stride_h, b.stride_w});
  return {{"in_channels", m.in_channels}, {"in_height", m.in_height}, {"in_width", m.in_width},
          {"blocks", blocks},           {"pool_h", m.pool_h},       {"pool_w", m.pool_w},
          {"hidden", m.hidden},         {"num_classes", m.num_classes},
          {"bn_momentum", m.batch_norm.momentum}, {"bn_eps", m.batch_norm.eps}};
}

ModelConfig ModelFromJson(const json& j) {
  ModelConfig m;
  m.in_channels = j.at("in_channels").get<int64_t>();
  m.in_height = j.at("in_height").get<int64_t>();
  m.in_width = j.at("in_width").get<int64_t>();
  m.blocks.clear();
  for (const auto& b : j.at("blocks")) {
    if (b.size() != 7) throw CheckpointError("malformed block entry in checkpoint metadata");
    m.blocks.push_back({b[0].get<int64_t>(), b[1].get<int64_t>(), b[2].get<int64_t>(), b[3].get<int64_t>(),
                        b[4].get<int64_t>(), b[5].get<int64_t>(), b[6].get<int64_t>()});
  }
  m.pool_h = j.at("pool_h").get<int64_t>();
  m.pool_w = j.at("pool_w").get<int64_t>();
  m.hidden = j.at("hidden").get<int64_t>();
  m.num_classes = j.at("num_classes").get<int64_t>();
  m.batch_norm.momentum = j.at("bn_momentum").get<double>();
  m.batch_norm.eps = j.at("bn_eps").get<double>();
  return m;
}

}  // namespace

std::vector<uint8_t> EncodeCheckpoint(const Checkpoint& ckpt) {
  ckpt.model.Validate();
  if (ckpt.model.num_classes > 255) throw CheckpointError("too many classes for the checkpoint format");
  Writer w;
  w.Bytes("USND", 4);
  w.Le<uint16_t>(kCheckpointVersion);
  w.Le<uint8_t>(static_cast<uint8_t>(ckpt.model.num_classes));
  const json meta = {{"seed", ckpt.meta.seed},
                     {"epoch", ckpt.meta.epoch},
                     {"class_ids", ckpt.meta.class_ids},
                     {"bn_stats_initialized", ckpt.meta.bn_stats_initialized},
                     {"model", ModelToJson(ckpt.model)},
                     {"config", ckpt.meta.settings}};
  const std::string text = meta.dump();
  w.Le<uint32_t>(static_cast<uint32_t>(text.size()));
  w.Bytes(text.data(), text.size());
  ckpt.params.ForEachTensor([&](const std::string& name, const Tensor<float>& t) {
    w.Le<uint16_t>(static_cast<uint16_t>(name.size()));
    w.Bytes(name.data(), name.size());
    w.Le<uint8_t>(static_cast<uint8_t>(t.rank()));
    for (int64_t d : t.shape()) w.Le<uint32_t>(static_cast<uint32_t>(d));
    for (float v : t.values()) w.F32(v);
  });
  return w.Take();
}

Checkpoint DecodeCheckpoint(std::span<const uint8_t> bytes) {
  Reader r(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "USND", 4) != 0)
    throw CheckpointError("not a checkpoint file (bad magic)");
  r.Bytes(4);
  const auto version = r.Le<uint16_t>();
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  const auto k = r.Le<uint8_t>();
  const auto meta_len = r.Le<uint32_t>();
  const auto meta_bytes = r.Bytes(meta_len);

  Checkpoint ckpt;
  try {
    const json meta = json::parse(meta_bytes.begin(), meta_bytes.end());
    ckpt.meta.seed = meta.at("seed").get<uint64_t>();
    ckpt.meta.epoch = meta.at("epoch").get<int64_t>();
    ckpt.meta.class_ids = meta.at("class_ids").get<std::vector<int>>();
    ckpt.meta.bn_stats_initialized = meta.at("bn_stats_initialized").get<bool>();
    ckpt.meta.settings = meta.at("config").get<std::map<std::string, std::string>>();
    ckpt.model = ModelFromJson(meta.at("model"));
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint metadata: ") + e.what());
  }
  if (ckpt.model.num_classes != k) throw CheckpointError("class count in header disagrees with metadata");
  if (!ckpt.meta.class_ids.empty() && static_cast<int64_t>(ckpt.meta.class_ids.size()) != k)
    throw CheckpointError("class list length disagrees with the class count");
  try {
    ckpt.params = ZeroParams<float>(ckpt.model);
  } catch (const ShapeError& e) {
    throw CheckpointError(std::string("invalid model config in checkpoint: ") + e.what());
  }

  std::unordered_map<std::string, Tensor<float>*> slots;
  ckpt.params.ForEachTensor([&](const std::string& name, Tensor<float>& t) { slots[name] = &t; });
  std::unordered_map<std::string, bool> seen;
  while (!r.done()) {
    const auto name_len = r.Le<uint16_t>();
    const auto nb = r.Bytes(name_len);
    const std::string name(nb.begin(), nb.end());
    const auto rank = r.Le<uint8_t>();
    Shape shape(rank);
    for (auto& d : shape) d = r.Le<uint32_t>();
    auto it = slots.find(name);
    if (it == slots.end()) throw CheckpointError("unexpected tensor '" + name + "' in checkpoint");
    if (seen[name]) throw CheckpointError("duplicate tensor '" + name + "' in checkpoint");
    if (shape != it->second->shape())
      throw CheckpointError("shape mismatch for '" + name + "': file has " + ShapeString(shape) +
                            ", config expects " + ShapeString(it->second->shape()));
    for (auto& v : it->second->values()) v = std::bit_cast<float>(r.Le<uint32_t>());
    seen[name] = true;
  }
  for (const auto& [name, _] : slots)
    if (!seen[name]) throw CheckpointError("checkpoint truncated: tensor '" + name + "' missing");
  return ckpt;
}

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = EncodeCheckpoint(ckpt);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::vector<uint8_t> bytes;
  try {
    bytes = audio::ReadFileBytes(path);
  } catch (const std::exception& e) {
    throw CheckpointError("cannot read checkpoint " + path.string() + ": " + e.what());
  }
  try {
    return DecodeCheckpoint(bytes);
  } catch (const CheckpointError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

}  // namespace urban::nn
