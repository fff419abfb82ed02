#include "ads/model.hpp"

#include <cmath>

#include "ads/peft.hpp"

namespace ads {

namespace {

double tensor_l2_norm(const Tensor& t) {
  double ss = 0.0;
  for (int64_t i = 0; i < t.numel(); ++i) {
    const double v = t.value_at(i);
    ss += v * v;
  }
  return std::sqrt(ss);
}

}  // namespace

std::vector<Tensor> Model::trainable() const {
  std::vector<Tensor> out;
  for (const NamedTensor& nt : named_trainable()) out.push_back(nt.tensor);
  return out;
}

Tensor patches_tensor(const Sample& sample, const ModelConfig& cfg) {
  const int64_t expected = cfg.patches * cfg.patch_dim;
  if (static_cast<int64_t>(sample.patches.size()) != expected) {
    throw InputError("sample holds " + std::to_string(sample.patches.size()) +
                     " patch values, model expects " + std::to_string(expected));
  }
  Tensor t = Tensor::zeros({cfg.patches, cfg.patch_dim}, cfg.dtype);
  if (cfg.dtype == Dtype::F32) {
    auto d = t.data_mut<float>();
    std::copy(sample.patches.begin(), sample.patches.end(), d.begin());
  } else {
    auto d = t.data_mut<double>();
    for (size_t i = 0; i < sample.patches.size(); ++i) d[i] = sample.patches[i];
  }
  return t;
}

std::vector<int64_t> token_ids(const Sample& sample) {
  return {sample.tokens.begin(), sample.tokens.end()};
}

AdsModel::AdsModel(Variant variant, const ModelConfig& cfg,
                   const Backbone& pretrained, uint64_t head_seed,
                   bool train_projections)
    : variant_(variant),
      cfg_(cfg),
      train_projections_(train_projections),
      backbone_(pretrained.clone()) {
  cfg_.validate();
  switch (variant) {
    case Variant::ADS: sharing_ = cfg.sharing; adapters_enabled_ = true; break;
    case Variant::V2T: sharing_ = Sharing::V2T; adapters_enabled_ = true; break;
    case Variant::NO_SHARING:
      sharing_ = Sharing::NONE;
      adapters_enabled_ = true;
      break;
    case Variant::NO_ADAPTERS:
      sharing_ = Sharing::NONE;
      adapters_enabled_ = false;
      break;
    default:
      throw UsageError("AdsModel does not implement variant " +
                       to_string(variant));
  }
  cfg_.sharing = sharing_;

  const Rng head(head_seed);
  if (adapters_enabled_) {
    for (int64_t layer = cfg_.first_adapted; layer <= cfg_.layers; ++layer) {
      text_adapters_.push_back(
          Adapter::init(cfg_.text_width, cfg_.adapter_dim, cfg_.dtype,
                        head.split("adapter.text." + std::to_string(layer))));
      vision_adapters_.push_back(
          Adapter::init(cfg_.vision_width, cfg_.adapter_dim, cfg_.dtype,
                        head.split("adapter.vision." + std::to_string(layer))));
    }
  }
  if (sharing_ != Sharing::NONE) {
    const int64_t src = sharing_ == Sharing::T2V ? cfg_.text_width
                                                 : cfg_.vision_width;
    const int64_t dst = sharing_ == Sharing::T2V ? cfg_.vision_width
                                                 : cfg_.text_width;
    share_ = SharingParams::init(src, dst, cfg_.dtype, head.split("share"));
    has_share_ = true;
  }
  clf_ = LinearParams::init(2 * cfg_.embed_dim, 2, cfg_.dtype,
                            head.split("clf"));
  freeze_backbone(*this);
}

Tensor AdsModel::text_pass(std::span<const int64_t> tokens, StateQueue* fill,
                           const StateQueue* consume,
                           ForwardDiagnostics* diag) const {
  const int64_t pool_row = cfg_.tokens - 1;
  Tensor x = backbone_.text.embed(tokens);
  for (int64_t i = 0; i < cfg_.layers; ++i) {
    const int64_t layer = i + 1;
    Tensor base = backbone_.text.block(i).forward(x);
    if (adapters_enabled_ && layer >= cfg_.first_adapted) {
      const Adapter& ad = text_adapters_[layer - cfg_.first_adapted];
      const Tensor a = ad.forward(x);
      const Tensor pooled = slice_rows(a, pool_row, 1);
      if (fill) fill->push(pooled);
      if (cfg_.alpha != 0.0) base = add(base, scale(a, cfg_.alpha));
      if (consume && cfg_.gamma != 0.0) {
        const Tensor att = state_attention(*consume, share_.w, pooled);
        const Tensor fused =
            scale(matmul(fuse_states(*consume, att), share_.p_f), cfg_.gamma);
        base = cfg_.broadcast == BroadcastMode::ALL_POSITIONS
                   ? add_rowvec(base, fused)
                   : add_at_row(base, pool_row, fused);
        if (diag) diag->attention.push_back({layer, att.to_vector()});
      }
      if (diag) diag->adapter_norms.push_back({'T', layer, tensor_l2_norm(a)});
    }
    x = base;
  }
  return backbone_.text.head(x, pool_row);
}

Tensor AdsModel::vision_pass(const Tensor& patches, StateQueue* fill,
                             const StateQueue* consume,
                             ForwardDiagnostics* diag) const {
  const int64_t pool_row = 0;  // class token
  Tensor x = backbone_.vision.embed(patches);
  for (int64_t i = 0; i < cfg_.layers; ++i) {
    const int64_t layer = i + 1;
    Tensor base = backbone_.vision.block(i).forward(x);
    if (adapters_enabled_ && layer >= cfg_.first_adapted) {
      const Adapter& ad = vision_adapters_[layer - cfg_.first_adapted];
      const Tensor a = ad.forward(x);
      const Tensor pooled = slice_rows(a, pool_row, 1);
      if (fill) fill->push(pooled);
      if (cfg_.alpha != 0.0) base = add(base, scale(a, cfg_.alpha));
      if (consume && cfg_.gamma != 0.0) {
        const Tensor att = state_attention(*consume, share_.w, pooled);
        const Tensor fused =
            scale(matmul(fuse_states(*consume, att), share_.p_f), cfg_.gamma);
        base = cfg_.broadcast == BroadcastMode::ALL_POSITIONS
                   ? add_rowvec(base, fused)
                   : add_at_row(base, pool_row, fused);
        if (diag) diag->attention.push_back({layer, att.to_vector()});
      }
      if (diag) diag->adapter_norms.push_back({'V', layer, tensor_l2_norm(a)});
    }
    x = base;
  }
  return backbone_.vision.head(x, pool_row);
}

Tensor AdsModel::logits(const Sample& sample, ForwardDiagnostics* diag) const {
  const Tensor patches = patches_tensor(sample, cfg_);
  const std::vector<int64_t> tokens = token_ids(sample);
  Tensor ht, hv;
  if (sharing_ == Sharing::T2V) {
    StateQueue queue(cfg_.adapted_layers());
    ht = text_pass(tokens, &queue, nullptr, diag);
    hv = vision_pass(patches, nullptr, &queue, diag);
  } else if (sharing_ == Sharing::V2T) {
    StateQueue queue(cfg_.adapted_layers());
    hv = vision_pass(patches, &queue, nullptr, diag);
    ht = text_pass(tokens, nullptr, &queue, diag);
  } else {
    ht = text_pass(tokens, nullptr, nullptr, diag);
    hv = vision_pass(patches, nullptr, nullptr, diag);
  }
  const Tensor parts[] = {ht, hv};
  return clf_.forward(concat_cols(parts));
}

std::vector<NamedTensor> AdsModel::named_tensors() const {
  std::vector<NamedTensor> out = backbone_.named_tensors();
  for (size_t i = 0; i < text_adapters_.size(); ++i) {
    const int64_t layer = cfg_.first_adapted + static_cast<int64_t>(i);
    text_adapters_[i].collect_tensors(
        "adapter.text." + std::to_string(layer), out);
  }
  for (size_t i = 0; i < vision_adapters_.size(); ++i) {
    const int64_t layer = cfg_.first_adapted + static_cast<int64_t>(i);
    vision_adapters_[i].collect_tensors(
        "adapter.vision." + std::to_string(layer), out);
  }
  if (has_share_) share_.collect_tensors(out);
  collect(out, "clf.w", clf_.w);
  collect(out, "clf.b", clf_.b);
  return out;
}

std::vector<NamedTensor> AdsModel::named_trainable() const {
  std::vector<NamedTensor> out;
  for (const NamedTensor& nt : named_tensors()) {
    if (!nt.tensor.requires_grad()) continue;
    // Sharing parameters drop out of the graph entirely when gamma is 0;
    // adapters drop out when alpha is 0 and nothing consumes their states.
    if (nt.name.rfind("share.", 0) == 0 && cfg_.gamma == 0.0) continue;
    if (nt.name.rfind("adapter.", 0) == 0 && cfg_.alpha == 0.0 &&
        sharing_ == Sharing::NONE) {
      continue;
    }
    out.push_back(nt);
  }
  return out;
}

void freeze_backbone(const Model& model) {
  for (const NamedTensor& nt : model.named_tensors()) {
    const bool is_backbone = nt.name.rfind("vision.", 0) == 0 ||
                             nt.name.rfind("text.", 0) == 0;
    const bool is_projection =
        nt.name == "vision.proj" || nt.name == "text.proj";
    if (is_projection) {
      nt.tensor.set_requires_grad(model.train_projections());
    } else {
      nt.tensor.set_requires_grad(!is_backbone);
    }
  }
}

std::unique_ptr<Model> make_model(Variant variant, const ModelConfig& cfg,
                                  const Backbone& pretrained,
                                  uint64_t head_seed, bool train_projections) {
  switch (variant) {
    case Variant::LORA:
      return std::make_unique<LoraModel>(cfg, pretrained, head_seed,
                                         train_projections);
    case Variant::PROMPT:
      return std::make_unique<PromptModel>(cfg, pretrained, head_seed,
                                           train_projections);
    default:
      return std::make_unique<AdsModel>(variant, cfg, pretrained, head_seed,
                                        train_projections);
  }
}

}  // namespace ads
