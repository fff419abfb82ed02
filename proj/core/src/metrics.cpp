#include "ads/metrics.hpp"

namespace ads {

Metrics metrics_from_confusion(const Confusion& confusion) {
  Metrics m;
  m.confusion = confusion;
  const int64_t total = confusion[0][0] + confusion[0][1] + confusion[1][0] +
                        confusion[1][1];
  const int64_t correct = confusion[0][0] + confusion[1][1];
  m.accuracy = total > 0 ? static_cast<double>(correct) / total : 0.0;

  double f1_sum = 0.0;
  for (int c = 0; c < 2; ++c) {
    const int64_t tp = confusion[c][c];
    const int64_t predicted = confusion[0][c] + confusion[1][c];
    const int64_t actual = confusion[c][0] + confusion[c][1];
    const double precision =
        predicted > 0 ? static_cast<double>(tp) / predicted : 0.0;
    const double recall = actual > 0 ? static_cast<double>(tp) / actual : 0.0;
    const double f1 = (precision + recall) > 0.0
                          ? 2.0 * precision * recall / (precision + recall)
                          : 0.0;
    m.macro_precision += 0.5 * precision;
    m.macro_recall += 0.5 * recall;
    f1_sum += 0.5 * f1;
  }
  m.macro_f1 = f1_sum;
  return m;
}

}  // namespace ads
