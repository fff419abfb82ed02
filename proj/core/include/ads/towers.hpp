#pragma once

#include <span>

#include "ads/block.hpp"
#include "ads/config.hpp"

namespace ads {

struct TowerActivations {
  // layer_inputs[i] is the sequence fed to block i (0-based); the last entry
  // is the final block's output.
  std::vector<Tensor> layer_inputs;
  Tensor features;  // H, [1 x d]
};

// L-layer patch tower. Row 0 of the sequence is the learnable class token;
// its final state, layernormed and projected, is the image embedding.
class VisionTower {
 public:
  static VisionTower init(const ModelConfig& cfg, Rng rng);

  // [m x patch_dim] -> [m+1 x d_v], class token prepended, positions added.
  Tensor embed(const Tensor& patches) const;
  const TransformerBlock& block(int64_t i) const { return blocks_[i]; }
  int64_t layer_count() const { return static_cast<int64_t>(blocks_.size()); }
  // Final layernorm on the pooled row, then projection into the shared space.
  Tensor head(const Tensor& x_last, int64_t pool_row) const;

  TowerActivations forward(const Tensor& patches) const;

  void collect_tensors(std::vector<NamedTensor>& out) const;

 private:
  int64_t patch_count_ = 0;
  int64_t patch_dim_ = 0;
  Tensor patch_proj_;  // [patch_dim x d_v], no bias (conv-style embedding)
  Tensor class_token_;  // [1 x d_v]
  Tensor pos_embed_;    // [m+1 x d_v]
  std::vector<TransformerBlock> blocks_;
  LayerNormParams ln_final_;
  Tensor proj_;  // [d_v x d], no bias
};

// L-layer token tower pooled at the fixed final position (sequences are
// fixed-length, so no end-of-text bookkeeping).
class TextTower {
 public:
  static TextTower init(const ModelConfig& cfg, Rng rng);

  // Token ids -> [n x d_t] with positions added. Ids must be < vocab.
  Tensor embed(std::span<const int64_t> tokens) const;
  const TransformerBlock& block(int64_t i) const { return blocks_[i]; }
  int64_t layer_count() const { return static_cast<int64_t>(blocks_.size()); }
  Tensor head(const Tensor& x_last, int64_t pool_row) const;

  TowerActivations forward(std::span<const int64_t> tokens) const;

  void collect_tensors(std::vector<NamedTensor>& out) const;

 private:
  int64_t vocab_ = 0;
  int64_t tokens_ = 0;
  Tensor embed_table_;  // [vocab x d_t]
  Tensor pos_embed_;    // [n x d_t]
  std::vector<TransformerBlock> blocks_;
  LayerNormParams ln_final_;
  Tensor proj_;  // [d_t x d]
};

// The frozen dual encoder shared by every variant.
struct Backbone {
  ModelConfig cfg;
  VisionTower vision;
  TextTower text;

  static Backbone init(const ModelConfig& cfg);

  // Deep copy with fresh storage, so several models can share one
  // pretrained backbone without aliasing parameters.
  Backbone clone() const;

  std::vector<NamedTensor> named_tensors() const;
  void set_requires_grad(bool v) const;
};

}  // namespace ads
