#include "ads/peft.hpp"

#include <cmath>

namespace ads {

LoraPair LoraPair::init(int64_t width, int64_t rank, Dtype dt, Rng rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(width));
  return {Tensor::uniform({width, rank}, rng.split("a"), -bound, bound, dt),
          Tensor::zeros({rank, width}, dt)};
}

LoraModel::LoraModel(const ModelConfig& cfg, const Backbone& pretrained,
                     uint64_t head_seed, bool train_projections)
    : cfg_(cfg),
      train_projections_(train_projections),
      backbone_(pretrained.clone()),
      scale_(1.0 / static_cast<double>(cfg.lora_rank)) {
  cfg_.validate();
  cfg_.sharing = Sharing::NONE;
  const Rng head(head_seed);
  for (int64_t i = 0; i < cfg_.layers; ++i) {
    const std::string layer = std::to_string(i + 1);
    text_q_.push_back(LoraPair::init(cfg_.text_width, cfg_.lora_rank,
                                     cfg_.dtype,
                                     head.split("lora.text." + layer + ".q")));
    text_v_.push_back(LoraPair::init(cfg_.text_width, cfg_.lora_rank,
                                     cfg_.dtype,
                                     head.split("lora.text." + layer + ".v")));
    vision_q_.push_back(
        LoraPair::init(cfg_.vision_width, cfg_.lora_rank, cfg_.dtype,
                       head.split("lora.vision." + layer + ".q")));
    vision_v_.push_back(
        LoraPair::init(cfg_.vision_width, cfg_.lora_rank, cfg_.dtype,
                       head.split("lora.vision." + layer + ".v")));
  }
  clf_ = LinearParams::init(2 * cfg_.embed_dim, 2, cfg_.dtype,
                            head.split("clf"));
  freeze_backbone(*this);
}

Tensor LoraModel::logits(const Sample& sample, ForwardDiagnostics*) const {
  auto delta = [this](const LoraPair* pair) {
    return [this, pair](const Tensor& h) {
      return scale(matmul(matmul(h, pair->a), pair->b), scale_);
    };
  };

  const std::vector<int64_t> tokens = token_ids(sample);
  Tensor xt = backbone_.text.embed(tokens);
  for (int64_t i = 0; i < cfg_.layers; ++i) {
    ProjectionDeltas d;
    d.q = delta(&text_q_[i]);
    d.v = delta(&text_v_[i]);
    xt = backbone_.text.block(i).forward(xt, &d);
  }
  const Tensor ht = backbone_.text.head(xt, cfg_.tokens - 1);

  Tensor xv = backbone_.vision.embed(patches_tensor(sample, cfg_));
  for (int64_t i = 0; i < cfg_.layers; ++i) {
    ProjectionDeltas d;
    d.q = delta(&vision_q_[i]);
    d.v = delta(&vision_v_[i]);
    xv = backbone_.vision.block(i).forward(xv, &d);
  }
  const Tensor hv = backbone_.vision.head(xv, 0);

  const Tensor parts[] = {ht, hv};
  return clf_.forward(concat_cols(parts));
}

std::vector<NamedTensor> LoraModel::named_tensors() const {
  std::vector<NamedTensor> out = backbone_.named_tensors();
  for (int64_t i = 0; i < cfg_.layers; ++i) {
    const std::string layer = std::to_string(i + 1);
    collect(out, "lora.text." + layer + ".q.a", text_q_[i].a);
    collect(out, "lora.text." + layer + ".q.b", text_q_[i].b);
    collect(out, "lora.text." + layer + ".v.a", text_v_[i].a);
    collect(out, "lora.text." + layer + ".v.b", text_v_[i].b);
    collect(out, "lora.vision." + layer + ".q.a", vision_q_[i].a);
    collect(out, "lora.vision." + layer + ".q.b", vision_q_[i].b);
    collect(out, "lora.vision." + layer + ".v.a", vision_v_[i].a);
    collect(out, "lora.vision." + layer + ".v.b", vision_v_[i].b);
  }
  collect(out, "clf.w", clf_.w);
  collect(out, "clf.b", clf_.b);
  return out;
}

std::vector<NamedTensor> LoraModel::named_trainable() const {
  std::vector<NamedTensor> out;
  for (const NamedTensor& nt : named_tensors()) {
    if (nt.tensor.requires_grad()) out.push_back(nt);
  }
  return out;
}

PromptModel::PromptModel(const ModelConfig& cfg, const Backbone& pretrained,
                         uint64_t head_seed, bool train_projections)
    : cfg_(cfg),
      train_projections_(train_projections),
      backbone_(pretrained.clone()) {
  cfg_.validate();
  cfg_.sharing = Sharing::NONE;
  const Rng head(head_seed);
  if (cfg_.prompt_tokens > 0) {
    const double bt = 1.0 / std::sqrt(static_cast<double>(cfg_.text_width));
    const double bv = 1.0 / std::sqrt(static_cast<double>(cfg_.vision_width));
    prompt_text_ = Tensor::uniform({cfg_.prompt_tokens, cfg_.text_width},
                                   head.split("prompt.text"), -bt, bt,
                                   cfg_.dtype);
    prompt_vision_ = Tensor::uniform({cfg_.prompt_tokens, cfg_.vision_width},
                                     head.split("prompt.vision"), -bv, bv,
                                     cfg_.dtype);
  }
  clf_ = LinearParams::init(2 * cfg_.embed_dim, 2, cfg_.dtype,
                            head.split("clf"));
  freeze_backbone(*this);
}

Tensor PromptModel::logits(const Sample& sample, ForwardDiagnostics*) const {
  const int64_t p = cfg_.prompt_tokens;

  const std::vector<int64_t> tokens = token_ids(sample);
  Tensor xt = backbone_.text.embed(tokens);
  if (p > 0) {
    const Tensor parts[] = {prompt_text_, xt};
    xt = concat_rows(parts);
  }
  for (int64_t i = 0; i < cfg_.layers; ++i) {
    xt = backbone_.text.block(i).forward(xt);
  }
  const Tensor ht = backbone_.text.head(xt, p + cfg_.tokens - 1);

  Tensor xv = backbone_.vision.embed(patches_tensor(sample, cfg_));
  if (p > 0) {
    const Tensor parts[] = {prompt_vision_, xv};
    xv = concat_rows(parts);
  }
  for (int64_t i = 0; i < cfg_.layers; ++i) {
    xv = backbone_.vision.block(i).forward(xv);
  }
  const Tensor hv = backbone_.vision.head(xv, p);

  const Tensor parts[] = {ht, hv};
  return clf_.forward(concat_cols(parts));
}

std::vector<NamedTensor> PromptModel::named_tensors() const {
  std::vector<NamedTensor> out = backbone_.named_tensors();
  if (cfg_.prompt_tokens > 0) {
    collect(out, "prompt.text", prompt_text_);
    collect(out, "prompt.vision", prompt_vision_);
  }
  collect(out, "clf.w", clf_.w);
  collect(out, "clf.b", clf_.b);
  return out;
}

std::vector<NamedTensor> PromptModel::named_trainable() const {
  std::vector<NamedTensor> out;
  for (const NamedTensor& nt : named_tensors()) {
    if (nt.tensor.requires_grad()) out.push_back(nt);
  }
  return out;
}

}  // namespace ads
