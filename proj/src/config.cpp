#include "specattn/config.hpp"

#include <nlohmann/json.hpp>

#include <stdexcept>

namespace specattn {

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("ModelConfig: " + msg); };

  if (n_layers < 1) fail("n_layers must be >= 1");
  if (d_model < 1) fail("d_model must be >= 1");
  if (n_q_heads < 1 || n_kv_heads < 1) fail("head counts must be >= 1");
  if (n_q_heads % n_kv_heads != 0) fail("n_q_heads must be a multiple of n_kv_heads");
  if (head_dim < 2) fail("head_dim must be >= 2");
  if (head_dim % 2 != 0) fail("head_dim must be even (rotary pairs)");
  if (n_q_heads * head_dim != d_model) fail("n_q_heads * head_dim must equal d_model");
  if (vocab_size < 2) fail("vocab_size must be >= 2");
  if (max_context < 1) fail("max_context must be >= 1");
  if (!(rope_theta > 0.0)) fail("rope_theta must be positive");
  if (!(norm_eps > 0.0)) fail("norm_eps must be positive");
  if (static_cast<int64_t>(layer_kinds.size()) != n_layers) {
    fail("layer_kinds must list one kind per layer");
  }
  for (size_t i = 0; i < layer_kinds.size(); ++i) {
    const LayerKind& kind = layer_kinds[i];
    if (!kind.is_dense() && (kind.window < 1 || kind.window > max_context)) {
      fail("banded window of layer " + std::to_string(i) + " must be in [1, max_context]");
    }
  }
}

ModelConfig ModelConfig::toy() {
  ModelConfig cfg;
  cfg.n_layers = 4;
  cfg.d_model = 256;
  cfg.n_q_heads = 8;
  cfg.n_kv_heads = 2;
  cfg.head_dim = 32;
  cfg.vocab_size = 256;
  cfg.max_context = 1024;
  cfg.rope_theta = 10000.0;
  cfg.norm_eps = 1e-5;
  cfg.layer_kinds = {LayerKind::dense(), LayerKind::banded(64), LayerKind::dense(),
                     LayerKind::banded(64)};
  return cfg;
}

std::string to_json_string(const ModelConfig& c) {
  nlohmann::json layers = nlohmann::json::array();
  for (const LayerKind& kind : c.layer_kinds) {
    if (kind.is_dense()) {
      layers.push_back({{"kind", "dense"}});
    } else {
      layers.push_back({{"kind", "banded"}, {"window", kind.window}});
    }
  }
  nlohmann::json j = {
      {"n_layers", c.n_layers},       {"d_model", c.d_model},
      {"n_q_heads", c.n_q_heads},     {"n_kv_heads", c.n_kv_heads},
      {"head_dim", c.head_dim},       {"vocab_size", c.vocab_size},
      {"max_context", c.max_context}, {"rope_theta", c.rope_theta},
      {"norm_eps", c.norm_eps},       {"layers", std::move(layers)},
  };
  return j.dump();
}

ModelConfig config_from_json_string(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);  // throws nlohmann::json::exception
  ModelConfig c;
  c.n_layers = j.at("n_layers").get<int64_t>();
  c.d_model = j.at("d_model").get<int64_t>();
  c.n_q_heads = j.at("n_q_heads").get<int64_t>();
  c.n_kv_heads = j.at("n_kv_heads").get<int64_t>();
  c.head_dim = j.at("head_dim").get<int64_t>();
  c.vocab_size = j.at("vocab_size").get<int64_t>();
  c.max_context = j.at("max_context").get<int64_t>();
  c.rope_theta = j.at("rope_theta").get<double>();
  c.norm_eps = j.at("norm_eps").get<double>();
  for (const auto& layer : j.at("layers")) {
    const std::string kind = layer.at("kind").get<std::string>();
    if (kind == "dense") {
      c.layer_kinds.push_back(LayerKind::dense());
    } else if (kind == "banded") {
      c.layer_kinds.push_back(LayerKind::banded(layer.at("window").get<int64_t>()));
    } else {
      throw std::invalid_argument("ModelConfig: unknown layer kind '" + kind + "'");
    }
  }
  c.validate();
  return c;
}

}  // namespace specattn
