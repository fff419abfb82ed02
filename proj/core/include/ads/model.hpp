#pragma once

#include <memory>

#include "ads/adapter.hpp"
#include "ads/data.hpp"
#include "ads/towers.hpp"

namespace ads {

// Per-forward observability for the sharing mechanism.
struct ForwardDiagnostics {
  struct LayerAttention {
    int64_t layer;                 // absolute 1-based guided layer index
    std::vector<double> weights;   // length L-K+1, sums to 1
  };
  struct AdapterNorm {
    char tower;  // 'T' or 'V'
    int64_t layer;
    double norm;  // L2 norm of the adapter output
  };
  std::vector<LayerAttention> attention;
  std::vector<AdapterNorm> adapter_norms;
};

// Common surface for every trainable variant. A model owns its own deep
// copy of the backbone, so several variants can be trained from one
// pretrained checkpoint without interference.
class Model {
 public:
  virtual ~Model() = default;

  virtual Variant variant() const = 0;
  virtual const ModelConfig& config() const = 0;
  virtual const Backbone& backbone() const = 0;
  virtual bool train_projections() const = 0;

  // Two-class logits, [1 x 2]. Builds a graph when recording is enabled.
  virtual Tensor logits(const Sample& sample,
                        ForwardDiagnostics* diag = nullptr) const = 0;

  // Every parameter of the model (backbone + heads), stable name order.
  virtual std::vector<NamedTensor> named_tensors() const = 0;

  // Trainable parameters that actually participate in this variant's
  // forward pass (e.g. sharing parameters drop out when gamma is 0).
  virtual std::vector<NamedTensor> named_trainable() const = 0;
  std::vector<Tensor> trainable() const;
};

// The adapter-state sharing model and its structural ablations
// (ADS, NO_SHARING, V2T, NO_ADAPTERS).
class AdsModel : public Model {
 public:
  AdsModel(Variant variant, const ModelConfig& cfg, const Backbone& pretrained,
           uint64_t head_seed, bool train_projections);

  Variant variant() const override { return variant_; }
  const ModelConfig& config() const override { return cfg_; }
  const Backbone& backbone() const override { return backbone_; }
  bool train_projections() const override { return train_projections_; }

  Tensor logits(const Sample& sample,
                ForwardDiagnostics* diag = nullptr) const override;

  std::vector<NamedTensor> named_tensors() const override;
  std::vector<NamedTensor> named_trainable() const override;

  Sharing effective_sharing() const { return sharing_; }
  bool adapters_enabled() const { return adapters_enabled_; }

 private:
  Tensor text_pass(std::span<const int64_t> tokens, StateQueue* fill,
                   const StateQueue* consume, ForwardDiagnostics* diag) const;
  Tensor vision_pass(const Tensor& patches, StateQueue* fill,
                     const StateQueue* consume, ForwardDiagnostics* diag) const;

  Variant variant_;
  ModelConfig cfg_;
  Sharing sharing_;        // resolved from the variant
  bool adapters_enabled_;
  bool train_projections_;
  Backbone backbone_;
  std::vector<Adapter> text_adapters_;    // layers K..L
  std::vector<Adapter> vision_adapters_;  // layers K..L
  SharingParams share_;                   // defined iff sharing_ != NONE
  bool has_share_ = false;
  LinearParams clf_;
};

// Applies the frozen-backbone training contract: tower weights frozen,
// heads (adapters, sharing, LoRA, prompts, classifier) trainable, the
// shared-space projections trainable iff the model asks for it.
void freeze_backbone(const Model& model);

std::unique_ptr<Model> make_model(Variant variant, const ModelConfig& cfg,
                                  const Backbone& pretrained,
                                  uint64_t head_seed,
                                  bool train_projections = true);

// Sample adapters shared across models.
Tensor patches_tensor(const Sample& sample, const ModelConfig& cfg);
std::vector<int64_t> token_ids(const Sample& sample);

}  // namespace ads
