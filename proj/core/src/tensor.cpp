#include "ads/tensor.hpp"

#include <cassert>

namespace ads {

std::string shape_to_string(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  out += "]";
  return out;
}

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (const int64_t d : s) n *= d;
  return n;
}

namespace {

std::shared_ptr<detail::TensorImpl> make_impl(Shape shape, Dtype dt,
                                              bool requires_grad) {
  for (const int64_t d : shape) {
    if (d <= 0) {
      throw ShapeError("tensor extents must be positive, got " +
                       shape_to_string(shape));
    }
  }
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->dtype = dt;
  impl->requires_grad = requires_grad;
  const int64_t n = shape_numel(shape);
  impl->shape = std::move(shape);
  if (dt == Dtype::F32) {
    impl->f32.assign(static_cast<size_t>(n), 0.0f);
  } else {
    impl->f64.assign(static_cast<size_t>(n), 0.0);
  }
  return impl;
}

}  // namespace

Tensor Tensor::zeros(Shape shape, Dtype dt, bool requires_grad) {
  return wrap(make_impl(std::move(shape), dt, requires_grad));
}

Tensor Tensor::full(Shape shape, double value, Dtype dt, bool requires_grad) {
  Tensor t = zeros(std::move(shape), dt, requires_grad);
  t.fill(value);
  return t;
}

Tensor Tensor::from_values(Shape shape, std::vector<double> values, Dtype dt,
                           bool requires_grad) {
  Tensor t = zeros(std::move(shape), dt, requires_grad);
  if (static_cast<int64_t>(values.size()) != t.numel()) {
    throw ShapeError("value count " + std::to_string(values.size()) +
                     " does not match shape " + shape_to_string(t.shape()));
  }
  for (int64_t i = 0; i < t.numel(); ++i) t.set_value_at(i, values[i]);
  return t;
}

Tensor Tensor::uniform(Shape shape, Rng rng, double lo, double hi, Dtype dt,
                       bool requires_grad) {
  Tensor t = zeros(std::move(shape), dt, requires_grad);
  for (int64_t i = 0; i < t.numel(); ++i) {
    t.set_value_at(i, rng.uniform(lo, hi));
  }
  return t;
}

int64_t Tensor::numel() const { return shape_numel(impl_->shape); }

int64_t Tensor::rows() const {
  if (rank() == 1) return 1;
  if (rank() == 2) return impl_->shape[0];
  throw ShapeError("rows() requires rank <= 2, shape is " +
                   shape_to_string(impl_->shape));
}

int64_t Tensor::cols() const {
  if (rank() == 1) return impl_->shape[0];
  if (rank() == 2) return impl_->shape[1];
  throw ShapeError("cols() requires rank <= 2, shape is " +
                   shape_to_string(impl_->shape));
}

void Tensor::set_requires_grad(bool v) const {
  impl_->requires_grad = v;
  if (!v) impl_->grad.reset();
}

template <class T>
std::span<const T> Tensor::data() const {
  if constexpr (std::is_same_v<T, float>) {
    if (impl_->dtype != Dtype::F32) throw UsageError("tensor is not f32");
    return std::span<const T>(impl_->f32);
  } else {
    if (impl_->dtype != Dtype::F64) throw UsageError("tensor is not f64");
    return std::span<const T>(impl_->f64);
  }
}

template <class T>
std::span<T> Tensor::data_mut() const {
  if constexpr (std::is_same_v<T, float>) {
    if (impl_->dtype != Dtype::F32) throw UsageError("tensor is not f32");
    return std::span<T>(impl_->f32);
  } else {
    if (impl_->dtype != Dtype::F64) throw UsageError("tensor is not f64");
    return std::span<T>(impl_->f64);
  }
}

template std::span<const float> Tensor::data<float>() const;
template std::span<const double> Tensor::data<double>() const;
template std::span<float> Tensor::data_mut<float>() const;
template std::span<double> Tensor::data_mut<double>() const;

const std::byte* Tensor::raw_data() const {
  if (impl_->dtype == Dtype::F32) {
    return reinterpret_cast<const std::byte*>(impl_->f32.data());
  }
  return reinterpret_cast<const std::byte*>(impl_->f64.data());
}

double Tensor::value_at(int64_t flat) const {
  assert(flat >= 0 && flat < numel());
  return impl_->dtype == Dtype::F32
             ? static_cast<double>(impl_->f32[static_cast<size_t>(flat)])
             : impl_->f64[static_cast<size_t>(flat)];
}

void Tensor::set_value_at(int64_t flat, double v) const {
  assert(flat >= 0 && flat < numel());
  if (impl_->dtype == Dtype::F32) {
    impl_->f32[static_cast<size_t>(flat)] = static_cast<float>(v);
  } else {
    impl_->f64[static_cast<size_t>(flat)] = v;
  }
}

double Tensor::at(int64_t r, int64_t c) const { return value_at(r * cols() + c); }

std::vector<double> Tensor::to_vector() const {
  std::vector<double> out(static_cast<size_t>(numel()));
  for (int64_t i = 0; i < numel(); ++i) out[static_cast<size_t>(i)] = value_at(i);
  return out;
}

double Tensor::item() const {
  if (numel() != 1) {
    throw UsageError("item() requires a scalar tensor, shape is " +
                     shape_to_string(impl_->shape));
  }
  return value_at(0);
}

void Tensor::fill(double v) const {
  if (impl_->dtype == Dtype::F32) {
    std::fill(impl_->f32.begin(), impl_->f32.end(), static_cast<float>(v));
  } else {
    std::fill(impl_->f64.begin(), impl_->f64.end(), v);
  }
}

void Tensor::copy_values_from(const Tensor& other) const {
  if (other.shape() != shape()) {
    throw ShapeError("copy_values_from shape mismatch: " +
                     shape_to_string(shape()) + " vs " +
                     shape_to_string(other.shape()));
  }
  if (dtype() == other.dtype()) {
    if (dtype() == Dtype::F32) {
      impl_->f32 = other.impl_->f32;
    } else {
      impl_->f64 = other.impl_->f64;
    }
    return;
  }
  for (int64_t i = 0; i < numel(); ++i) set_value_at(i, other.value_at(i));
}

Tensor Tensor::grad() const {
  if (!impl_->grad) return Tensor{};
  return wrap(impl_->grad);
}

Tensor Tensor::materialized_grad() const {
  if (!impl_->grad) {
    impl_->grad = make_impl(impl_->shape, impl_->dtype, false);
  }
  return wrap(impl_->grad);
}

void Tensor::zero_grad() const { impl_->grad.reset(); }

Tensor Tensor::clone() const {
  Tensor t = zeros(impl_->shape, impl_->dtype, false);
  t.impl_->f32 = impl_->f32;
  t.impl_->f64 = impl_->f64;
  return t;
}

}  // namespace ads
