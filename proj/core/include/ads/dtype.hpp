#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "ads/error.hpp"

namespace ads {

enum class Dtype : uint8_t { F32 = 0, F64 = 1 };

inline size_t dtype_size(Dtype dt) {
  return dt == Dtype::F32 ? sizeof(float) : sizeof(double);
}

inline const char* dtype_name(Dtype dt) {
  return dt == Dtype::F32 ? "f32" : "f64";
}

inline Dtype dtype_from_name(const std::string& s) {
  if (s == "f32") return Dtype::F32;
  if (s == "f64") return Dtype::F64;
  throw ConfigError("unknown dtype '" + s + "' (expected f32 or f64)");
}

}  // namespace ads
