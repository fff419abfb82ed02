#pragma once

#include <vector>

#include "ads/tensor.hpp"

namespace ads {

// Plain stochastic gradient descent: p <- p - lr * grad(p), no momentum,
// no weight decay, no schedule. Gradients are cleared after each step.
class SgdOptimizer {
 public:
  SgdOptimizer(double learning_rate, std::vector<Tensor> parameters);

  void step();
  void zero_grad();

  double learning_rate() const { return learning_rate_; }
  const std::vector<Tensor>& parameters() const { return parameters_; }

 private:
  double learning_rate_;
  std::vector<Tensor> parameters_;
};

}  // namespace ads
