#pragma once

#include "ads/ops.hpp"
#include "ads/params.hpp"
#include "ads/rng.hpp"

namespace ads {

// Bottleneck adapter applied per position in parallel to a frozen block:
// A(h) = W_up(relu(W_down h + b_down)) + b_up. The up projection and its
// bias start at zero, so a fresh adapter is the zero map and training
// begins from the frozen-backbone solution.
struct Adapter {
  Tensor down_w;  // [width x dim]
  Tensor down_b;  // [dim]
  Tensor up_w;    // [dim x width], zero-initialized
  Tensor up_b;    // [width], zero-initialized

  static Adapter init(int64_t width, int64_t dim, Dtype dt, Rng rng);

  Tensor forward(const Tensor& h) const;
  int64_t width() const { return down_w.shape()[0]; }

  void collect_tensors(const std::string& prefix,
                       std::vector<NamedTensor>& out) const;
};

// Ordered matrix of pooled adapter states from the guiding tower, one row
// per adapted layer (K..L). Filled completely by the guiding tower before
// any guided layer reads it; local to a single forward pass.
class StateQueue {
 public:
  explicit StateQueue(int64_t expected_rows);

  void push(const Tensor& pooled_row);  // [1 x width]
  bool full() const { return static_cast<int64_t>(rows_.size()) == expected_; }
  int64_t size() const { return static_cast<int64_t>(rows_.size()); }
  int64_t expected() const { return expected_; }
  const Tensor& row(int64_t i) const { return rows_[i]; }

  // All rows as one [expected x width] matrix. Throws UsageError if the
  // queue has not been fully populated yet.
  Tensor matrix() const;

 private:
  int64_t expected_;
  std::vector<Tensor> rows_;
  mutable Tensor cached_matrix_;
};

// Parameters of the cross-tower sharing mechanism. `w` scores queue rows
// against the guided tower's pooled adapter state; `p_f` maps the fused
// guiding-tower vector into the guided tower's width.
struct SharingParams {
  Tensor w;    // [src_width x dst_width]
  Tensor p_f;  // [src_width x dst_width]

  static SharingParams init(int64_t src_width, int64_t dst_width, Dtype dt,
                            Rng rng);

  void collect_tensors(std::vector<NamedTensor>& out) const;
};

// Att = softmax(Q W s^T) over the queue rows; returns a [rows x 1] column
// of positive weights summing to 1.
Tensor state_attention(const StateQueue& queue, const Tensor& w,
                       const Tensor& pooled_state);

// f = sum_i Att_i Q_i, the attention-weighted mixture of queue rows, [1 x width].
Tensor fuse_states(const StateQueue& queue, const Tensor& att);

}  // namespace ads
