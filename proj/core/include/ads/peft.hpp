#pragma once

#include "ads/model.hpp"

namespace ads {

// Low-rank reparameterization of the frozen q/v projections in every block
// of both towers: effective weight = W_frozen + s * (A * B), s = 1/rank.
// B starts at zero, so a fresh LoRA model equals the frozen backbone.
struct LoraPair {
  Tensor a;  // [width x r]
  Tensor b;  // [r x width], zero-initialized

  static LoraPair init(int64_t width, int64_t rank, Dtype dt, Rng rng);
};

class LoraModel : public Model {
 public:
  LoraModel(const ModelConfig& cfg, const Backbone& pretrained,
            uint64_t head_seed, bool train_projections);

  Variant variant() const override { return Variant::LORA; }
  const ModelConfig& config() const override { return cfg_; }
  const Backbone& backbone() const override { return backbone_; }
  bool train_projections() const override { return train_projections_; }

  Tensor logits(const Sample& sample,
                ForwardDiagnostics* diag = nullptr) const override;

  std::vector<NamedTensor> named_tensors() const override;
  std::vector<NamedTensor> named_trainable() const override;

  double lora_scale() const { return scale_; }

 private:
  ModelConfig cfg_;
  bool train_projections_;
  Backbone backbone_;
  // One q/v pair per block, index = 0-based block.
  std::vector<LoraPair> text_q_, text_v_, vision_q_, vision_v_;
  double scale_;
  LinearParams clf_;
};

// Shallow prompt tuning: p learnable virtual tokens prepended to each
// tower's layer-1 input; pooling rows shift by p. p = 0 degenerates to the
// frozen backbone plus classifier.
class PromptModel : public Model {
 public:
  PromptModel(const ModelConfig& cfg, const Backbone& pretrained,
              uint64_t head_seed, bool train_projections);

  Variant variant() const override { return Variant::PROMPT; }
  const ModelConfig& config() const override { return cfg_; }
  const Backbone& backbone() const override { return backbone_; }
  bool train_projections() const override { return train_projections_; }

  Tensor logits(const Sample& sample,
                ForwardDiagnostics* diag = nullptr) const override;

  std::vector<NamedTensor> named_tensors() const override;
  std::vector<NamedTensor> named_trainable() const override;

 private:
  ModelConfig cfg_;
  bool train_projections_;
  Backbone backbone_;
  Tensor prompt_text_;    // [p x d_t], undefined when p == 0
  Tensor prompt_vision_;  // [p x d_v]
  LinearParams clf_;
};

}  // namespace ads
