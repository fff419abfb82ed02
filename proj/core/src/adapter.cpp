#include "ads/adapter.hpp"

#include <cmath>

namespace ads {

Adapter Adapter::init(int64_t width, int64_t dim, Dtype dt, Rng rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(width));
  Adapter a;
  a.down_w = Tensor::uniform({width, dim}, rng, -bound, bound, dt);
  a.down_b = Tensor::zeros({dim}, dt);
  a.up_w = Tensor::zeros({dim, width}, dt);
  a.up_b = Tensor::zeros({width}, dt);
  return a;
}

Tensor Adapter::forward(const Tensor& h) const {
  if (h.cols() != width()) {
    throw ShapeError("adapter width " + std::to_string(width()) +
                     " does not match input " + shape_to_string(h.shape()));
  }
  return linear(relu(linear(h, down_w, down_b)), up_w, up_b);
}

void Adapter::collect_tensors(const std::string& prefix,
                              std::vector<NamedTensor>& out) const {
  collect(out, prefix + ".down.w", down_w);
  collect(out, prefix + ".down.b", down_b);
  collect(out, prefix + ".up.w", up_w);
  collect(out, prefix + ".up.b", up_b);
}

StateQueue::StateQueue(int64_t expected_rows) : expected_(expected_rows) {
  if (expected_rows < 1) {
    throw UsageError("state queue needs at least one adapted layer");
  }
  rows_.reserve(static_cast<size_t>(expected_rows));
}

void StateQueue::push(const Tensor& pooled_row) {
  if (full()) {
    throw UsageError("state queue already holds " +
                     std::to_string(expected_) + " rows");
  }
  if (pooled_row.rows() != 1) {
    throw ShapeError("state queue rows must be [1 x width], got " +
                     shape_to_string(pooled_row.shape()));
  }
  if (!rows_.empty() && rows_.front().cols() != pooled_row.cols()) {
    throw ShapeError("state queue rows disagree on width");
  }
  rows_.push_back(pooled_row);
}

Tensor StateQueue::matrix() const {
  if (!full()) {
    throw UsageError("state queue read before the guiding tower filled it (" +
                     std::to_string(rows_.size()) + " of " +
                     std::to_string(expected_) + " rows)");
  }
  if (!cached_matrix_.defined()) {
    cached_matrix_ = concat_rows(rows_);
  }
  return cached_matrix_;
}

SharingParams SharingParams::init(int64_t src_width, int64_t dst_width,
                                  Dtype dt, Rng rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(src_width));
  SharingParams p;
  p.w = Tensor::uniform({src_width, dst_width}, rng.split("w"), -bound, bound, dt);
  p.p_f = Tensor::uniform({src_width, dst_width}, rng.split("p_f"), -bound,
                          bound, dt);
  return p;
}

void SharingParams::collect_tensors(std::vector<NamedTensor>& out) const {
  collect(out, "share.w", w);
  collect(out, "share.p_f", p_f);
}

Tensor state_attention(const StateQueue& queue, const Tensor& w,
                       const Tensor& pooled_state) {
  const Tensor q = queue.matrix();
  const Tensor scores = matmul(matmul(q, w), transpose(pooled_state));
  return softmax(scores, 0);
}

Tensor fuse_states(const StateQueue& queue, const Tensor& att) {
  const Tensor q = queue.matrix();
  if (att.rows() != q.rows() || att.cols() != 1) {
    throw ShapeError("attention shape " + shape_to_string(att.shape()) +
                     " does not match queue rows " + std::to_string(q.rows()));
  }
  return matmul(transpose(att), q);
}

}  // namespace ads
