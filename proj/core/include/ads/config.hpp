#pragma once

#include <cstdint>
#include <string>

#include "ads/dtype.hpp"

namespace ads {

// Direction of adapter-state sharing between the towers.
enum class Sharing : uint8_t { T2V, V2T, NONE };

// Where the fused cross-modal vector is added in the guided tower.
enum class BroadcastMode : uint8_t { ALL_POSITIONS, CLASS_TOKEN_ONLY };

// Training variants covered by the ablation and PEFT comparisons.
enum class Variant : uint8_t { ADS, NO_SHARING, V2T, NO_ADAPTERS, LORA, PROMPT };

std::string to_string(Sharing s);
std::string to_string(BroadcastMode b);
std::string to_string(Variant v);
Sharing sharing_from_string(const std::string& s);
BroadcastMode broadcast_from_string(const std::string& s);
Variant variant_from_string(const std::string& s);

// Every architectural hyperparameter of the dual tower plus the adapter
// sharing mechanism. Defaults are the toy preset.
struct ModelConfig {
  int64_t layers = 6;         // L, transformer blocks per tower
  int64_t first_adapted = 4;  // K, first layer carrying adapters (1-based)
  int64_t patches = 16;       // m
  int64_t patch_dim = 32;     // raw feature size of one patch
  int64_t tokens = 16;        // n, fixed token count
  int64_t vocab = 64;
  int64_t vision_width = 64;  // d_v
  int64_t text_width = 48;    // d_t
  int64_t embed_dim = 32;     // d, shared projection width
  int64_t heads = 4;
  int64_t mlp_ratio = 2;
  int64_t adapter_dim = 8;
  double alpha = 1.0;         // adapter retention factor
  double gamma = 0.5;         // shared-information retention factor
  Sharing sharing = Sharing::T2V;
  BroadcastMode broadcast = BroadcastMode::ALL_POSITIONS;
  int64_t lora_rank = 4;
  int64_t prompt_tokens = 8;
  Dtype dtype = Dtype::F32;
  uint64_t seed = 0;

  int64_t adapted_layers() const { return layers - first_adapted + 1; }
  int64_t mlp_hidden(int64_t width) const { return width * mlp_ratio; }

  static ModelConfig toy();
  // CLIP ViT-B/16-shaped preset with the published hyperparameters:
  // adapters in layers 7-12, dim 32, alpha 0.005, gamma 0.5.
  static ModelConfig paper();

  void validate() const;  // throws ConfigError
};

enum class Selection : uint8_t { BEST_VAL_ACCURACY, FINAL };

std::string to_string(Selection s);
Selection selection_from_string(const std::string& s);

struct TrainConfig {
  int64_t epochs = 20;
  int64_t batch_size = 16;
  double learning_rate = 0.0015;
  uint64_t seed = 0;
  Variant variant = Variant::ADS;
  bool train_projections = true;
  Selection selection = Selection::BEST_VAL_ACCURACY;

  void validate() const;
};

// Contrastive warm-up of the backbone; stands in for a pretrained dual
// encoder so the frozen towers carry usable cross-modal alignment.
struct PretrainConfig {
  int64_t steps = 500;
  int64_t batch_size = 32;
  double learning_rate = 0.05;
  double temperature = 0.1;
  int64_t pairs = 1024;
  uint64_t seed = 0;

  void validate() const;
};

}  // namespace ads
