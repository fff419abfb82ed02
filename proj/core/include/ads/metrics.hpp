#pragma once

#include <array>
#include <cstdint>

namespace ads {

using Confusion = std::array<std::array<int64_t, 2>, 2>;  // [true][predicted]

// Macro metrics are unweighted means over both classes; any 0/0 inside a
// per-class precision, recall, or F1 counts as 0.
struct Metrics {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  Confusion confusion{};
};

Metrics metrics_from_confusion(const Confusion& confusion);

}  // namespace ads
