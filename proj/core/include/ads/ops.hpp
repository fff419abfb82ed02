#pragma once

#include <span>
#include <vector>

#include "ads/tape.hpp"
#include "ads/tensor.hpp"

namespace ads {

// Differentiable tensor operations. Every function allocates a fresh output
// (inputs are never mutated) and, while recording is enabled and any input
// requires grad, appends a backward record to the current thread's tape.
// Binary ops require matching shapes and dtypes.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& a, double c);

// Standard matrix product, a:[r,k] x b:[k,c] -> [r,c].
// Backward: dA = dC * B^T, dB = A^T * dC.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor relu(const Tensor& a);
// Exact Gaussian-CDF form: 0.5 * x * (1 + erf(x / sqrt(2))).
Tensor gelu(const Tensor& a);

// Max-subtracted exponentials normalized along `axis` (0 = down columns,
// 1 = across rows). Rank-1 input is treated as a single row. Non-finite
// input raises NumericError.
Tensor softmax(const Tensor& a, int axis);

// Normalizes the last axis of each row: (x - mean) / sqrt(var + eps) * gain
// + bias. A constant row yields zeros (variance floored by eps).
inline constexpr double kLayerNormEps = 1e-5;
Tensor layernorm(const Tensor& x, const Tensor& gain, const Tensor& bias);

// x:[r,c] + v broadcast to every row (v has c elements).
Tensor add_rowvec(const Tensor& x, const Tensor& v);
// x with v (c elements) added to row `row` only.
Tensor add_at_row(const Tensor& x, int64_t row, const Tensor& v);

// Gathers rows of `table` by id. Ids must be < table rows.
Tensor embed_rows(const Tensor& table, std::span<const int64_t> ids);

Tensor slice_rows(const Tensor& x, int64_t start, int64_t count);
Tensor slice_cols(const Tensor& x, int64_t start, int64_t count);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor concat_cols(std::span<const Tensor> parts);

Tensor sum(const Tensor& x);   // -> scalar [1]
Tensor mean(const Tensor& x);  // -> scalar [1]

// Mean over the batch of -log softmax(logits)[label]. logits:[B,C], labels
// in [0, C). Out-of-range labels raise InputError.
Tensor cross_entropy_logits(const Tensor& logits, std::span<const int64_t> labels);

// Rows rescaled to unit L2 norm (norm floored at 1e-12).
Tensor l2normalize_rows(const Tensor& x);

// matmul(x, w) + b broadcast per row.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

}  // namespace ads
