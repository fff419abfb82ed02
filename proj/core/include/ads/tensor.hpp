#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ads/dtype.hpp"
#include "ads/error.hpp"
#include "ads/rng.hpp"

namespace ads {

using Shape = std::vector<int64_t>;

std::string shape_to_string(const Shape& s);
int64_t shape_numel(const Shape& s);

namespace detail {

struct TensorImpl {
  Shape shape;
  Dtype dtype = Dtype::F32;
  std::vector<float> f32;
  std::vector<double> f64;
  bool requires_grad = false;
  std::shared_ptr<TensorImpl> grad;  // same shape/dtype, materialized lazily
};

}  // namespace detail

// Dense row-major tensor with value semantics over a shared payload.
// Copying a Tensor copies the handle; clone() copies the data. A tensor is
// immutable once built by an op; only parameter updates and gradient
// accumulation write through existing handles.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, Dtype dt, bool requires_grad = false);
  static Tensor full(Shape shape, double value, Dtype dt,
                     bool requires_grad = false);
  // Convenience for literals in tests and oracles.
  static Tensor from_values(Shape shape, std::vector<double> values,
                            Dtype dt = Dtype::F64, bool requires_grad = false);
  static Tensor uniform(Shape shape, Rng rng, double lo, double hi, Dtype dt,
                        bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  int64_t numel() const;
  int64_t rank() const { return static_cast<int64_t>(impl_->shape.size()); }
  // 2-D accessors; rank-1 tensors are treated as a single row.
  int64_t rows() const;
  int64_t cols() const;
  Dtype dtype() const { return impl_->dtype; }

  bool requires_grad() const { return impl_ && impl_->requires_grad; }
  void set_requires_grad(bool v) const;

  // Typed payload views. Dtype must match. A Tensor is a handle to shared
  // storage, so mutators are const on the handle; ops still never write
  // through their inputs.
  template <class T>
  std::span<const T> data() const;
  template <class T>
  std::span<T> data_mut() const;

  const std::byte* raw_data() const;
  size_t raw_size_bytes() const { return numel() * dtype_size(dtype()); }

  // Element access in double regardless of storage dtype (not a hot path).
  double value_at(int64_t flat) const;
  void set_value_at(int64_t flat, double v) const;
  double at(int64_t r, int64_t c) const;
  std::vector<double> to_vector() const;
  double item() const;  // numel()==1 only

  void fill(double v) const;
  // Copies values from another tensor of identical shape; dtypes may differ.
  void copy_values_from(const Tensor& other) const;

  // Gradient accumulator. grad() is undefined until materialized.
  bool has_grad() const { return impl_ && impl_->grad != nullptr; }
  Tensor grad() const;
  Tensor materialized_grad() const;  // allocates zeros on first use
  void zero_grad() const;            // drops the accumulator

  Tensor clone() const;  // deep copy of values; detached, no grad
  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

  // Identity of the underlying node; used only for diagnostics.
  const void* node_id() const { return impl_.get(); }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl)
      : impl_(std::move(impl)) {}

  static Tensor wrap(std::shared_ptr<detail::TensorImpl> impl) {
    return Tensor(std::move(impl));
  }

  std::shared_ptr<detail::TensorImpl> impl_;
};

}  // namespace ads
