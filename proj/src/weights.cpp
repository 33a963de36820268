#include "specattn/weights.hpp"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "specattn/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "weight file io assumes a little-endian host");

namespace specattn {
namespace {

struct TensorRef {
  float* data;
  int64_t size;
  int64_t fan_in;   // 0 for gain vectors (initialized to one)
};

std::vector<TensorRef> tensor_list(const ModelConfig& cfg, Weights& w) {
  std::vector<TensorRef> out;
  auto add = [&out](auto& m, int64_t fan_in) {
    out.push_back({m.data(), static_cast<int64_t>(m.size()), fan_in});
  };
  add(w.token_embedding, cfg.d_model);
  for (LayerWeights& layer : w.layers) {
    add(layer.wq, cfg.d_model);
    add(layer.wk, cfg.d_model);
    add(layer.wv, cfg.d_model);
    add(layer.wo, cfg.q_dim());
    add(layer.attn_norm_gain, 0);
    add(layer.mlp_norm_gain, 0);
    add(layer.w_gate, cfg.d_model);
    add(layer.w_up, cfg.d_model);
    add(layer.w_down, cfg.mlp_hidden());
  }
  add(w.final_norm_gain, 0);
  return out;
}

Weights allocate(const ModelConfig& cfg) {
  Weights w;
  w.token_embedding.resize(cfg.vocab_size, cfg.d_model);
  w.layers.resize(cfg.n_layers);
  for (LayerWeights& layer : w.layers) {
    layer.wq.resize(cfg.d_model, cfg.q_dim());
    layer.wk.resize(cfg.d_model, cfg.kv_dim());
    layer.wv.resize(cfg.d_model, cfg.kv_dim());
    layer.wo.resize(cfg.q_dim(), cfg.d_model);
    layer.attn_norm_gain.resize(cfg.d_model);
    layer.mlp_norm_gain.resize(cfg.d_model);
    layer.w_gate.resize(cfg.d_model, cfg.mlp_hidden());
    layer.w_up.resize(cfg.d_model, cfg.mlp_hidden());
    layer.w_down.resize(cfg.mlp_hidden(), cfg.d_model);
  }
  w.final_norm_gain.resize(cfg.d_model);
  return w;
}

uint32_t crc32_of(const float* data, int64_t count, uint32_t crc) {
  return static_cast<uint32_t>(
      crc32(crc, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(count * 4)));
}

void write_u32(std::ofstream& out, uint32_t value) {
  out.write(reinterpret_cast<const char*>(&value), 4);
}

uint32_t read_u32(std::ifstream& in) {
  uint32_t value = 0;
  in.read(reinterpret_cast<char*>(&value), 4);
  return value;
}

}  // namespace

Weights init_weights(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  Weights w = allocate(cfg);
  const CounterRng root = CounterRng::seeded(seed);
  const std::vector<TensorRef> tensors = tensor_list(cfg, w);
  for (size_t i = 0; i < tensors.size(); ++i) {
    const TensorRef& t = tensors[i];
    if (t.fan_in == 0) {
      std::fill(t.data, t.data + t.size, 1.0f);
      continue;
    }
    CounterRng stream = root.derive(i);
    const double scale = 1.0 / std::sqrt(static_cast<double>(t.fan_in));
    for (int64_t j = 0; j < t.size; ++j) {
      t.data[j] = static_cast<float>(stream.normal() * scale);
    }
  }
  return w;
}

void save_weights(const std::filesystem::path& path, const ModelConfig& cfg,
                  const Weights& weights) {
  cfg.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw WeightFileError(WeightFileError::Code::kIo, "cannot open for writing: " + path.string());
  }
  out.write("SPECATTN", 8);
  write_u32(out, kWeightFormatVersion);
  const std::string header = to_json_string(cfg);
  write_u32(out, static_cast<uint32_t>(header.size()));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));

  uint32_t crc = static_cast<uint32_t>(crc32(0L, Z_NULL, 0));
  // tensor_list is non-const for init's sake; serialization does not mutate
  const std::vector<TensorRef> tensors = tensor_list(cfg, const_cast<Weights&>(weights));
  for (const TensorRef& t : tensors) {
    out.write(reinterpret_cast<const char*>(t.data), t.size * 4);
    crc = crc32_of(t.data, t.size, crc);
  }
  write_u32(out, crc);
  if (!out) {
    throw WeightFileError(WeightFileError::Code::kIo, "write failed: " + path.string());
  }
}

std::pair<ModelConfig, Weights> load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw WeightFileError(WeightFileError::Code::kIo, "cannot open: " + path.string());
  }
  char magic[8] = {};
  in.read(magic, 8);
  if (in.gcount() != 8 || std::memcmp(magic, "SPECATTN", 8) != 0) {
    throw WeightFileError(WeightFileError::Code::kBadMagic, "bad magic bytes");
  }
  const uint32_t version = read_u32(in);
  if (!in || version != kWeightFormatVersion) {
    throw WeightFileError(WeightFileError::Code::kBadVersion,
                          "unsupported version " + std::to_string(version));
  }
  const uint32_t header_len = read_u32(in);
  if (!in) {
    throw WeightFileError(WeightFileError::Code::kBadHeader, "missing header length");
  }
  std::string header(header_len, '\0');
  in.read(header.data(), header_len);
  if (in.gcount() != static_cast<std::streamsize>(header_len)) {
    throw WeightFileError(WeightFileError::Code::kBadHeader, "header shorter than declared");
  }
  ModelConfig cfg;
  try {
    cfg = config_from_json_string(header);
  } catch (const std::exception& e) {
    throw WeightFileError(WeightFileError::Code::kBadHeader,
                          std::string("invalid config header: ") + e.what());
  }

  Weights w = allocate(cfg);
  uint32_t crc = static_cast<uint32_t>(crc32(0L, Z_NULL, 0));
  const std::vector<TensorRef> tensors = tensor_list(cfg, w);
  for (const TensorRef& t : tensors) {
    in.read(reinterpret_cast<char*>(t.data), t.size * 4);
    if (in.gcount() != static_cast<std::streamsize>(t.size * 4)) {
      throw WeightFileError(WeightFileError::Code::kTruncated, "tensor data truncated");
    }
    crc = crc32_of(t.data, t.size, crc);
  }
  const uint32_t stored_crc = read_u32(in);
  if (!in) {
    throw WeightFileError(WeightFileError::Code::kTruncated, "missing checksum");
  }
  if (stored_crc != crc) {
    throw WeightFileError(WeightFileError::Code::kBadChecksum, "tensor checksum mismatch");
  }
  return {std::move(cfg), std::move(w)};
}

}  // namespace specattn
