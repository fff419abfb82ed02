#pragma once

#include <functional>
#include <vector>

#include "ads/tensor.hpp"

namespace ads {

// Per-thread record of executed operations. Each record stores the op name,
// its input/output handles, and a closure that pushes the output gradient
// back to the inputs. Records are appended in execution order, so every
// record's inputs precede it; backward() walks the list once in reverse.
class Tape {
 public:
  struct Record {
    const char* op;
    std::vector<Tensor> inputs;
    Tensor output;
    std::function<void()> backward;
  };

  static Tape& current();

  // False inside a NoGradGuard scope. Ops skip recording (and their outputs
  // do not require grad) while recording is off.
  static bool recording();

  void record(const char* op, std::vector<Tensor> inputs, Tensor output,
              std::function<void()> backward_fn);

  size_t size() const { return records_.size(); }
  const std::vector<Record>& records() const { return records_; }
  void clear() { records_.clear(); }

 private:
  std::vector<Record> records_;
};

// Disables recording for the current thread while alive. Nesting is allowed.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

// Reverse-mode sweep from a scalar loss. Seeds d loss / d loss = 1, then
// replays the current thread's tape in reverse, accumulating gradients into
// every requires_grad tensor reachable from the loss. The tape is cleared
// afterwards. Throws UsageError if loss is not a recorded scalar.
void backward(const Tensor& loss);

}  // namespace ads
