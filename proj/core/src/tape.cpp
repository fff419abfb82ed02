#include "ads/tape.hpp"

namespace ads {

namespace {
thread_local Tape g_tape;
thread_local int g_no_grad_depth = 0;
}  // namespace

Tape& Tape::current() { return g_tape; }

bool Tape::recording() { return g_no_grad_depth == 0; }

void Tape::record(const char* op, std::vector<Tensor> inputs, Tensor output,
                  std::function<void()> backward_fn) {
  records_.push_back(
      Record{op, std::move(inputs), std::move(output), std::move(backward_fn)});
}

NoGradGuard::NoGradGuard() { ++g_no_grad_depth; }
NoGradGuard::~NoGradGuard() { --g_no_grad_depth; }

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw UsageError("backward() requires a scalar loss tensor");
  }
  if (!loss.requires_grad()) {
    throw UsageError(
        "backward() requires a loss produced through recorded operations");
  }
  Tensor seed = loss.materialized_grad();
  seed.fill(1.0);

  auto& tape = Tape::current();
  const auto& records = tape.records();
  for (auto it = records.rbegin(); it != records.rend(); ++it) {
    // Skip branches that the loss does not depend on.
    if (!it->output.has_grad()) continue;
    it->backward();
  }
  tape.clear();
}

}  // namespace ads
