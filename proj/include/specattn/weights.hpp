#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "specattn/config.hpp"

namespace specattn {

// Row-major float matrix; rows are tokens/keys so single-row views are
// contiguous.
using RowMatrixXf = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct LayerWeights {
  Eigen::MatrixXf wq;  // d_model x (n_q_heads * head_dim)
  Eigen::MatrixXf wk;  // d_model x (n_kv_heads * head_dim)
  Eigen::MatrixXf wv;  // d_model x (n_kv_heads * head_dim)
  Eigen::MatrixXf wo;  // (n_q_heads * head_dim) x d_model
  Eigen::VectorXf attn_norm_gain;  // d_model
  Eigen::VectorXf mlp_norm_gain;   // d_model
  Eigen::MatrixXf w_gate;  // d_model x mlp_hidden
  Eigen::MatrixXf w_up;    // d_model x mlp_hidden
  Eigen::MatrixXf w_down;  // mlp_hidden x d_model
};

struct Weights {
  // Also the tied output head: vocab logits = final_hidden * embedding^T.
  Eigen::MatrixXf token_embedding;  // vocab_size x d_model
  std::vector<LayerWeights> layers;
  Eigen::VectorXf final_norm_gain;  // d_model
};

// Deterministic initialization: projection entries ~ N(0, 1/fan_in) from a
// per-tensor counter-based stream (stream index = position in the serialized
// tensor order below); norm gains start at one.
Weights init_weights(const ModelConfig& config, uint64_t seed);

// Weight file errors, each distinguishable by code().
class WeightFileError : public std::runtime_error {
 public:
  enum class Code { kIo, kBadMagic, kBadVersion, kBadHeader, kTruncated, kBadChecksum };

  WeightFileError(Code code, const std::string& msg)
      : std::runtime_error("weight file: " + msg), code_(code) {}

  Code code() const { return code_; }

 private:
  Code code_;
};

// Binary format:
//   bytes 0..7   magic "SPECATTN"
//   bytes 8..11  format version, uint32 little-endian (currently 1)
//   bytes 12..15 JSON header length, uint32 little-endian
//   JSON-encoded ModelConfig
//   raw little-endian float32 tensors, in order: token_embedding, then per
//   layer wq, wk, wv, wo, attn_norm_gain, mlp_norm_gain, w_gate, w_up,
//   w_down, then final_norm_gain (row-major entry order per tensor)
//   CRC32 of all tensor bytes, uint32 little-endian
void save_weights(const std::filesystem::path& path, const ModelConfig& config,
                  const Weights& weights);
std::pair<ModelConfig, Weights> load_weights(const std::filesystem::path& path);

inline constexpr uint32_t kWeightFormatVersion = 1;

}  // namespace specattn
