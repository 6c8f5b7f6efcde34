#pragma once

// Versioned single-file checkpoints.
//
// Layout (little-endian):
//   u32  format version
//   u64  header length in bytes
//   header: JSON {"model": ModelConfig, "tensors": [{name, kind, shape, offset, count}], "meta": {...}}
//   payload: float32 values, concatenated in index order

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

#include "coseg/harness/config.hpp"

namespace coseg::harness {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// In-memory copy of every parameter and buffer of a network.
template <class T>
struct StateSnapshot {
  std::vector<std::pair<std::string, Tensor<T>>> params;
  std::vector<std::pair<std::string, Tensor<T>>> buffers;
};

template <class T>
StateSnapshot<T> snapshot(const nn::Module<T>& m) {
  StateSnapshot<T> s;
  for (auto& [name, p] : m.named_parameters()) s.params.emplace_back(name, p->value());
  for (auto& [name, b] : m.named_buffers()) s.buffers.emplace_back(name, *b);
  return s;
}

template <class T>
void restore(nn::Module<T>& m, const StateSnapshot<T>& s) {
  auto params = m.named_parameters();
  auto buffers = m.named_buffers();
  if (params.size() != s.params.size() || buffers.size() != s.buffers.size())
    throw CheckpointError("state layout does not match the network");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].first != s.params[i].first || params[i].second->shape() != s.params[i].second.shape())
      throw CheckpointError("state mismatch at parameter " + params[i].first);
    params[i].second->mutable_value() = s.params[i].second;
  }
  for (std::size_t i = 0; i < buffers.size(); ++i) {
    if (buffers[i].first != s.buffers[i].first || buffers[i].second->shape() != s.buffers[i].second.shape())
      throw CheckpointError("state mismatch at buffer " + buffers[i].first);
    *buffers[i].second = s.buffers[i].second;
  }
}

template <class T>
void save_checkpoint(const std::filesystem::path& path, Network<T>& net, const json& meta = json::object()) {
  json index = json::array();
  std::vector<float> payload;
  auto add = [&](const std::string& name, const char* kind, const Tensor<T>& t) {
    const Shape s = t.shape();
    index.push_back({{"name", name},
                     {"kind", kind},
                     {"shape", {s.n, s.c, s.h, s.w}},
                     {"offset", payload.size()},
                     {"count", t.size()}});
    for (std::size_t i = 0; i < t.size(); ++i) payload.push_back(static_cast<float>(t[i]));
  };
  for (auto& [name, p] : net.named_parameters()) add(name, "param", p->value());
  for (auto& [name, b] : net.named_buffers()) add(name, "buffer", *b);
  const json header{{"model", model_to_json(net.config())}, {"tensors", index}, {"meta", meta}};
  const std::string text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
    const std::uint32_t version = kCheckpointVersion;
    const std::uint64_t len = text.size();
    out.write(reinterpret_cast<const char*>(&version), sizeof version);
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * sizeof(float)));
    if (!out) throw CheckpointError("failed writing checkpoint " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

struct CheckpointFile {
  ModelConfig model;
  json meta;
  json index;
  std::vector<float> payload;
};

inline CheckpointFile read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::uint32_t version = 0;
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  if (!in) throw CheckpointError("truncated checkpoint header: " + path.string());
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version) + " in " + path.string());
  if (len > (1ull << 30)) throw CheckpointError("implausible checkpoint header length in " + path.string());
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw CheckpointError("truncated checkpoint header: " + path.string());
  CheckpointFile f;
  try {
    const json header = json::parse(text);
    f.model = model_from_json(header.at("model"));
    f.index = header.at("tensors");
    f.meta = header.value("meta", json::object());
  } catch (const json::exception& e) {
    throw CheckpointError("malformed checkpoint header in " + path.string() + ": " + e.what());
  }
  std::size_t total = 0;
  for (const auto& e : f.index) total = std::max(total, e.at("offset").get<std::size_t>() + e.at("count").get<std::size_t>());
  f.payload.resize(total);
  in.read(reinterpret_cast<char*>(f.payload.data()), static_cast<std::streamsize>(total * sizeof(float)));
  if (!in) throw CheckpointError("truncated checkpoint payload: " + path.string());
  return f;
}

/// Copies checkpoint tensors into `net`; every parameter and buffer must be present with a matching shape.
template <class T>
void load_into(const CheckpointFile& f, Network<T>& net) {
  if (!(f.model == net.config())) throw CheckpointError("checkpoint model config does not match the network config");
  std::map<std::string, const json*> by_name;
  for (const auto& e : f.index) by_name[e.at("kind").get<std::string>() + ":" + e.at("name").get<std::string>()] = &e;
  auto fill = [&](const std::string& key, Tensor<T>& dst) {
    const auto it = by_name.find(key);
    if (it == by_name.end()) throw CheckpointError("checkpoint lacks tensor " + key);
    const json& e = *it->second;
    const auto dims = e.at("shape").get<std::vector<int>>();
    const Shape s{dims.at(0), dims.at(1), dims.at(2), dims.at(3)};
    if (s != dst.shape()) throw CheckpointError("shape mismatch for " + key + ": " + s.str() + " vs " + dst.shape().str());
    const auto off = e.at("offset").get<std::size_t>();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<T>(f.payload[off + i]);
  };
  for (auto& [name, p] : net.named_parameters()) fill("param:" + name, p->mutable_value());
  for (auto& [name, b] : net.named_buffers()) fill("buffer:" + name, *b);
  if (by_name.size() != net.named_parameters().size() + net.named_buffers().size())
    throw CheckpointError("checkpoint holds tensors the network does not have");
}

/// Builds a network from a checkpoint, optionally checking it against an expected model config.
template <class T>
std::unique_ptr<Network<T>> load_checkpoint(const std::filesystem::path& path, const ModelConfig* expected = nullptr) {
  const CheckpointFile f = read_checkpoint(path);
  if (expected && !(*expected == f.model))
    throw CheckpointError("checkpoint " + path.string() + " was trained with a different model config");
  auto net = std::make_unique<Network<T>>(f.model, 0);
  load_into(f, *net);
  net->eval();
  return net;
}

}  // namespace coseg::harness
