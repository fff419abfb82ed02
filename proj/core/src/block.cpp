#include "ads/block.hpp"

#include <cmath>

namespace ads {

LayerNormParams LayerNormParams::init(int64_t width, Dtype dt) {
  return {Tensor::full({width}, 1.0, dt), Tensor::zeros({width}, dt)};
}

LinearParams LinearParams::init(int64_t fan_in, int64_t fan_out, Dtype dt,
                                Rng rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  return {Tensor::uniform({fan_in, fan_out}, rng, -bound, bound, dt),
          Tensor::zeros({fan_out}, dt)};
}

TransformerBlock TransformerBlock::init(int64_t width, int64_t heads,
                                        int64_t mlp_ratio, Dtype dt, Rng rng) {
  TransformerBlock b;
  b.width_ = width;
  b.heads_ = heads;
  b.ln1_ = LayerNormParams::init(width, dt);
  b.ln2_ = LayerNormParams::init(width, dt);
  b.q_ = LinearParams::init(width, width, dt, rng.split("q"));
  b.k_ = LinearParams::init(width, width, dt, rng.split("k"));
  b.v_ = LinearParams::init(width, width, dt, rng.split("v"));
  b.out_ = LinearParams::init(width, width, dt, rng.split("out"));
  const int64_t hidden = width * mlp_ratio;
  b.mlp1_ = LinearParams::init(width, hidden, dt, rng.split("mlp1"));
  b.mlp2_ = LinearParams::init(hidden, width, dt, rng.split("mlp2"));
  return b;
}

Tensor TransformerBlock::forward(const Tensor& x,
                                 const ProjectionDeltas* deltas) const {
  const Tensor h = layernorm(x, ln1_.gain, ln1_.bias);
  Tensor q = q_.forward(h);
  Tensor k = k_.forward(h);
  Tensor v = v_.forward(h);
  if (deltas && deltas->q) q = add(q, deltas->q(h));
  if (deltas && deltas->v) v = add(v, deltas->v(h));

  const int64_t head_dim = width_ / heads_;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(head_dim));
  std::vector<Tensor> head_outs;
  head_outs.reserve(heads_);
  for (int64_t hd = 0; hd < heads_; ++hd) {
    const Tensor qh = slice_cols(q, hd * head_dim, head_dim);
    const Tensor kh = slice_cols(k, hd * head_dim, head_dim);
    const Tensor vh = slice_cols(v, hd * head_dim, head_dim);
    const Tensor scores = scale(matmul(qh, transpose(kh)), inv_sqrt_d);
    const Tensor att = softmax(scores, 1);
    head_outs.push_back(matmul(att, vh));
  }
  const Tensor merged = concat_cols(head_outs);
  Tensor y = add(x, out_.forward(merged));

  const Tensor h2 = layernorm(y, ln2_.gain, ln2_.bias);
  const Tensor m = mlp2_.forward(gelu(mlp1_.forward(h2)));
  return add(y, m);
}

void TransformerBlock::collect_tensors(const std::string& prefix,
                                       std::vector<NamedTensor>& out) const {
  collect(out, prefix + ".ln1.gain", ln1_.gain);
  collect(out, prefix + ".ln1.bias", ln1_.bias);
  collect(out, prefix + ".q.w", q_.w);
  collect(out, prefix + ".q.b", q_.b);
  collect(out, prefix + ".k.w", k_.w);
  collect(out, prefix + ".k.b", k_.b);
  collect(out, prefix + ".v.w", v_.w);
  collect(out, prefix + ".v.b", v_.b);
  collect(out, prefix + ".out.w", out_.w);
  collect(out, prefix + ".out.b", out_.b);
  collect(out, prefix + ".ln2.gain", ln2_.gain);
  collect(out, prefix + ".ln2.bias", ln2_.bias);
  collect(out, prefix + ".mlp1.w", mlp1_.w);
  collect(out, prefix + ".mlp1.b", mlp1_.b);
  collect(out, prefix + ".mlp2.w", mlp2_.w);
  collect(out, prefix + ".mlp2.b", mlp2_.b);
}

}  // namespace ads
