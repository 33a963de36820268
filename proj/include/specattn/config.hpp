#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace specattn {

struct LayerKind {
  enum class Type { kDense, kBanded };

  Type type = Type::kDense;
  int64_t window = 0;  // banded only: maximum key lookback distance

  static LayerKind dense() { return {Type::kDense, 0}; }
  static LayerKind banded(int64_t w) { return {Type::kBanded, w}; }

  bool is_dense() const { return type == Type::kDense; }
  bool operator==(const LayerKind&) const = default;
};

struct ModelConfig {
  int64_t n_layers = 0;
  int64_t d_model = 0;
  int64_t n_q_heads = 0;
  int64_t n_kv_heads = 0;
  int64_t head_dim = 0;
  int64_t vocab_size = 0;
  int64_t max_context = 0;
  double rope_theta = 10000.0;
  std::vector<LayerKind> layer_kinds;
  double norm_eps = 1e-5;

  int64_t group_size() const { return n_q_heads / n_kv_heads; }
  int64_t q_dim() const { return n_q_heads * head_dim; }
  int64_t kv_dim() const { return n_kv_heads * head_dim; }
  int64_t mlp_hidden() const { return 4 * d_model; }

  // KV bytes of one token across all layers and KV heads (fp32 keys+values).
  int64_t kv_bytes_per_token() const {
    return 2 * n_layers * n_kv_heads * head_dim * 4;
  }

  // Throws std::invalid_argument describing the first violated constraint.
  void validate() const;

  // Default desk-scale model: 4 layers alternating dense and banded,
  // d_model 256, 8 query heads over 2 KV heads, vocab 256.
  static ModelConfig toy();

  bool operator==(const ModelConfig&) const = default;
};

std::string to_json_string(const ModelConfig& config);
ModelConfig config_from_json_string(const std::string& json_text);

}  // namespace specattn
