#pragma once

#include <string>
#include <vector>

#include "ads/tensor.hpp"

namespace ads {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

inline void collect(std::vector<NamedTensor>& out, const std::string& name,
                    const Tensor& t) {
  out.push_back({name, t});
}

// Sum of element counts over tensors with requires_grad set.
int64_t count_trainable(const std::vector<NamedTensor>& tensors);

// Concatenated SHA-256 over the raw payloads of all non-trainable tensors,
// in name order. Used to prove the frozen backbone never moves.
std::string frozen_fingerprint(const std::vector<NamedTensor>& tensors);

}  // namespace ads
