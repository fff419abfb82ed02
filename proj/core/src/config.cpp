#include "ads/config.hpp"

#include <algorithm>
#include <cmath>

#include "ads/error.hpp"

namespace ads {

std::string to_string(Sharing s) {
  switch (s) {
    case Sharing::T2V: return "T2V";
    case Sharing::V2T: return "V2T";
    case Sharing::NONE: return "NONE";
  }
  return "?";
}

std::string to_string(BroadcastMode b) {
  return b == BroadcastMode::ALL_POSITIONS ? "ALL_POSITIONS"
                                           : "CLASS_TOKEN_ONLY";
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::ADS: return "ADS";
    case Variant::NO_SHARING: return "NO_SHARING";
    case Variant::V2T: return "V2T";
    case Variant::NO_ADAPTERS: return "NO_ADAPTERS";
    case Variant::LORA: return "LORA";
    case Variant::PROMPT: return "PROMPT";
  }
  return "?";
}

std::string to_string(Selection s) {
  return s == Selection::BEST_VAL_ACCURACY ? "best_val_accuracy" : "final";
}

Sharing sharing_from_string(const std::string& s) {
  if (s == "T2V") return Sharing::T2V;
  if (s == "V2T") return Sharing::V2T;
  if (s == "NONE") return Sharing::NONE;
  throw ConfigError("unknown sharing mode '" + s + "'");
}

BroadcastMode broadcast_from_string(const std::string& s) {
  if (s == "ALL_POSITIONS") return BroadcastMode::ALL_POSITIONS;
  if (s == "CLASS_TOKEN_ONLY") return BroadcastMode::CLASS_TOKEN_ONLY;
  throw ConfigError("unknown broadcast mode '" + s + "'");
}

Variant variant_from_string(const std::string& s) {
  if (s == "ADS") return Variant::ADS;
  if (s == "NO_SHARING") return Variant::NO_SHARING;
  if (s == "V2T") return Variant::V2T;
  if (s == "NO_ADAPTERS") return Variant::NO_ADAPTERS;
  if (s == "LORA") return Variant::LORA;
  if (s == "PROMPT") return Variant::PROMPT;
  throw ConfigError("unknown variant '" + s + "'");
}

Selection selection_from_string(const std::string& s) {
  if (s == "best_val_accuracy") return Selection::BEST_VAL_ACCURACY;
  if (s == "final") return Selection::FINAL;
  throw ConfigError("unknown selection rule '" + s + "'");
}

ModelConfig ModelConfig::toy() { return ModelConfig{}; }

ModelConfig ModelConfig::paper() {
  ModelConfig c;
  c.layers = 12;
  c.first_adapted = 7;
  c.patches = 196;
  c.patch_dim = 768;
  c.tokens = 77;
  c.vocab = 49408;
  c.vision_width = 768;
  c.text_width = 512;
  c.embed_dim = 512;
  c.heads = 8;
  c.mlp_ratio = 4;
  c.adapter_dim = 32;
  c.alpha = 0.005;
  c.gamma = 0.5;
  c.sharing = Sharing::T2V;
  c.broadcast = BroadcastMode::ALL_POSITIONS;
  c.lora_rank = 4;
  c.prompt_tokens = 8;
  return c;
}

void ModelConfig::validate() const {
  auto positive = [](int64_t v, const char* name) {
    if (v < 1) {
      throw ConfigError(std::string("model.") + name + " must be >= 1, got " +
                        std::to_string(v));
    }
  };
  positive(layers, "layers");
  positive(patches, "patches");
  positive(patch_dim, "patch_dim");
  positive(tokens, "tokens");
  positive(vocab, "vocab");
  positive(vision_width, "vision_width");
  positive(text_width, "text_width");
  positive(embed_dim, "embed_dim");
  positive(heads, "heads");
  positive(mlp_ratio, "mlp_ratio");
  positive(adapter_dim, "adapter_dim");
  if (first_adapted < 1 || first_adapted > layers) {
    throw ConfigError("model.first_adapted must lie in [1," +
                      std::to_string(layers) + "], got " +
                      std::to_string(first_adapted));
  }
  if (vision_width % heads != 0 || text_width % heads != 0) {
    throw ConfigError("model.heads must divide both tower widths");
  }
  if (!std::isfinite(alpha) || !std::isfinite(gamma)) {
    throw ConfigError("model.alpha and model.gamma must be finite");
  }
  if (lora_rank < 1 || lora_rank >= std::min(vision_width, text_width)) {
    throw ConfigError("model.lora_rank must lie in [1, min tower width), got " +
                      std::to_string(lora_rank));
  }
  if (prompt_tokens < 0) {
    throw ConfigError("model.prompt_tokens must be >= 0");
  }
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (learning_rate < 0.0 || !std::isfinite(learning_rate)) {
    throw ConfigError("train.learning_rate must be non-negative and finite");
  }
}

void PretrainConfig::validate() const {
  if (steps < 0) throw ConfigError("pretrain.steps must be >= 0");
  if (batch_size < 2) throw ConfigError("pretrain.batch_size must be >= 2");
  if (learning_rate < 0.0 || !std::isfinite(learning_rate)) {
    throw ConfigError("pretrain.learning_rate must be non-negative and finite");
  }
  if (temperature <= 0.0) throw ConfigError("pretrain.temperature must be > 0");
  if (pairs < 2) throw ConfigError("pretrain.pairs must be >= 2");
}

}  // namespace ads
