#pragma once

#include <functional>

#include "ads/ops.hpp"
#include "ads/params.hpp"
#include "ads/rng.hpp"

namespace ads {

struct LayerNormParams {
  Tensor gain;
  Tensor bias;
  static LayerNormParams init(int64_t width, Dtype dt);
};

struct LinearParams {
  Tensor w;
  Tensor b;
  // Weights uniform in +-1/sqrt(fan_in), biases zero.
  static LinearParams init(int64_t fan_in, int64_t fan_out, Dtype dt, Rng rng);
  Tensor forward(const Tensor& x) const { return linear(x, w, b); }
};

// Optional low-rank additions to the q/v projections; the hook receives the
// post-layernorm block input and returns a delta of the projection's shape.
struct ProjectionDeltas {
  std::function<Tensor(const Tensor&)> q;
  std::function<Tensor(const Tensor&)> v;
};

// Pre-LN transformer block: x + attn(ln1(x)), then + mlp(ln2(.)).
// Zeroing every projection weight makes the block an exact identity.
class TransformerBlock {
 public:
  static TransformerBlock init(int64_t width, int64_t heads, int64_t mlp_ratio,
                               Dtype dt, Rng rng);

  Tensor forward(const Tensor& x,
                 const ProjectionDeltas* deltas = nullptr) const;

  int64_t width() const { return width_; }
  void collect_tensors(const std::string& prefix,
                       std::vector<NamedTensor>& out) const;

 private:
  int64_t width_ = 0;
  int64_t heads_ = 0;
  LayerNormParams ln1_, ln2_;
  LinearParams q_, k_, v_, out_;
  LinearParams mlp1_, mlp2_;
};

}  // namespace ads
