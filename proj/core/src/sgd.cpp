#include "ads/sgd.hpp"

#include <cmath>

#include "ads/error.hpp"

namespace ads {

SgdOptimizer::SgdOptimizer(double learning_rate, std::vector<Tensor> parameters)
    : learning_rate_(learning_rate), parameters_(std::move(parameters)) {
  if (learning_rate_ < 0.0 || !std::isfinite(learning_rate_)) {
    throw ConfigError("learning rate must be non-negative and finite");
  }
}

void SgdOptimizer::step() {
  for (Tensor& p : parameters_) {
    if (!p.has_grad()) {
      throw UsageError("sgd step: parameter of shape " +
                       shape_to_string(p.shape()) + " has no gradient");
    }
  }
  for (Tensor& p : parameters_) {
    const Tensor g = p.grad();
    if (p.dtype() == Dtype::F32) {
      auto pd = p.data_mut<float>();
      auto gd = g.data<float>();
      const float lr = static_cast<float>(learning_rate_);
      for (size_t i = 0; i < pd.size(); ++i) pd[i] -= lr * gd[i];
    } else {
      auto pd = p.data_mut<double>();
      auto gd = g.data<double>();
      for (size_t i = 0; i < pd.size(); ++i) pd[i] -= learning_rate_ * gd[i];
    }
  }
  zero_grad();
}

void SgdOptimizer::zero_grad() {
  for (Tensor& p : parameters_) p.zero_grad();
}

}  // namespace ads
