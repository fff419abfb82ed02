#include "ads/towers.hpp"

#include <cmath>

namespace ads {

namespace {

Tensor init_table(Shape shape, int64_t fan, Dtype dt, Rng rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan));
  return Tensor::uniform(std::move(shape), rng, -bound, bound, dt);
}

}  // namespace

VisionTower VisionTower::init(const ModelConfig& cfg, Rng rng) {
  VisionTower t;
  t.patch_count_ = cfg.patches;
  t.patch_dim_ = cfg.patch_dim;
  t.patch_proj_ = init_table({cfg.patch_dim, cfg.vision_width}, cfg.patch_dim,
                             cfg.dtype, rng.split("patch_proj"));
  t.class_token_ = init_table({1, cfg.vision_width}, cfg.vision_width,
                              cfg.dtype, rng.split("class_token"));
  t.pos_embed_ = init_table({cfg.patches + 1, cfg.vision_width},
                            cfg.vision_width, cfg.dtype, rng.split("pos"));
  t.blocks_.reserve(cfg.layers);
  for (int64_t i = 0; i < cfg.layers; ++i) {
    t.blocks_.push_back(TransformerBlock::init(
        cfg.vision_width, cfg.heads, cfg.mlp_ratio, cfg.dtype,
        rng.split("block" + std::to_string(i))));
  }
  t.ln_final_ = LayerNormParams::init(cfg.vision_width, cfg.dtype);
  t.proj_ = init_table({cfg.vision_width, cfg.embed_dim}, cfg.vision_width,
                       cfg.dtype, rng.split("proj"));
  return t;
}

Tensor VisionTower::embed(const Tensor& patches) const {
  if (patches.rows() != patch_count_ || patches.cols() != patch_dim_) {
    throw InputError("patch grid " + shape_to_string(patches.shape()) +
                     " does not match configured [" +
                     std::to_string(patch_count_) + "," +
                     std::to_string(patch_dim_) + "]");
  }
  const Tensor projected = matmul(patches, patch_proj_);
  const Tensor parts[] = {class_token_, projected};
  return add(concat_rows(parts), pos_embed_);
}

Tensor VisionTower::head(const Tensor& x_last, int64_t pool_row) const {
  const Tensor pooled = slice_rows(x_last, pool_row, 1);
  return matmul(layernorm(pooled, ln_final_.gain, ln_final_.bias), proj_);
}

TowerActivations VisionTower::forward(const Tensor& patches) const {
  TowerActivations acts;
  Tensor x = embed(patches);
  acts.layer_inputs.push_back(x);
  for (const TransformerBlock& b : blocks_) {
    x = b.forward(x);
    acts.layer_inputs.push_back(x);
  }
  acts.features = head(x, 0);
  return acts;
}

void VisionTower::collect_tensors(std::vector<NamedTensor>& out) const {
  collect(out, "vision.patch_proj", patch_proj_);
  collect(out, "vision.class_token", class_token_);
  collect(out, "vision.pos_embed", pos_embed_);
  for (size_t i = 0; i < blocks_.size(); ++i) {
    blocks_[i].collect_tensors("vision.block" + std::to_string(i), out);
  }
  collect(out, "vision.ln_final.gain", ln_final_.gain);
  collect(out, "vision.ln_final.bias", ln_final_.bias);
  collect(out, "vision.proj", proj_);
}

TextTower TextTower::init(const ModelConfig& cfg, Rng rng) {
  TextTower t;
  t.vocab_ = cfg.vocab;
  t.tokens_ = cfg.tokens;
  t.embed_table_ = init_table({cfg.vocab, cfg.text_width}, cfg.text_width,
                              cfg.dtype, rng.split("embed"));
  t.pos_embed_ = init_table({cfg.tokens, cfg.text_width}, cfg.text_width,
                            cfg.dtype, rng.split("pos"));
  t.blocks_.reserve(cfg.layers);
  for (int64_t i = 0; i < cfg.layers; ++i) {
    t.blocks_.push_back(TransformerBlock::init(
        cfg.text_width, cfg.heads, cfg.mlp_ratio, cfg.dtype,
        rng.split("block" + std::to_string(i))));
  }
  t.ln_final_ = LayerNormParams::init(cfg.text_width, cfg.dtype);
  t.proj_ = init_table({cfg.text_width, cfg.embed_dim}, cfg.text_width,
                       cfg.dtype, rng.split("proj"));
  return t;
}

Tensor TextTower::embed(std::span<const int64_t> tokens) const {
  if (static_cast<int64_t>(tokens.size()) != tokens_) {
    throw InputError("expected " + std::to_string(tokens_) + " tokens, got " +
                     std::to_string(tokens.size()));
  }
  return add(embed_rows(embed_table_, tokens), pos_embed_);
}

Tensor TextTower::head(const Tensor& x_last, int64_t pool_row) const {
  const Tensor pooled = slice_rows(x_last, pool_row, 1);
  return matmul(layernorm(pooled, ln_final_.gain, ln_final_.bias), proj_);
}

TowerActivations TextTower::forward(std::span<const int64_t> tokens) const {
  TowerActivations acts;
  Tensor x = embed(tokens);
  acts.layer_inputs.push_back(x);
  for (const TransformerBlock& b : blocks_) {
    x = b.forward(x);
    acts.layer_inputs.push_back(x);
  }
  acts.features = head(x, tokens_ - 1);
  return acts;
}

void TextTower::collect_tensors(std::vector<NamedTensor>& out) const {
  collect(out, "text.embed", embed_table_);
  collect(out, "text.pos_embed", pos_embed_);
  for (size_t i = 0; i < blocks_.size(); ++i) {
    blocks_[i].collect_tensors("text.block" + std::to_string(i), out);
  }
  collect(out, "text.ln_final.gain", ln_final_.gain);
  collect(out, "text.ln_final.bias", ln_final_.bias);
  collect(out, "text.proj", proj_);
}

Backbone Backbone::init(const ModelConfig& cfg) {
  cfg.validate();
  const Rng rng(cfg.seed);
  Backbone b{cfg, VisionTower::init(cfg, rng.split("vision")),
             TextTower::init(cfg, rng.split("text"))};
  return b;
}

Backbone Backbone::clone() const {
  Backbone copy = Backbone::init(cfg);
  auto src = named_tensors();
  auto dst = copy.named_tensors();
  for (size_t i = 0; i < src.size(); ++i) {
    dst[i].tensor.copy_values_from(src[i].tensor);
  }
  return copy;
}

std::vector<NamedTensor> Backbone::named_tensors() const {
  std::vector<NamedTensor> out;
  vision.collect_tensors(out);
  text.collect_tensors(out);
  return out;
}

void Backbone::set_requires_grad(bool v) const {
  for (const NamedTensor& nt : named_tensors()) {
    nt.tensor.set_requires_grad(v);
  }
}

}  // namespace ads
