#include "legnn/tape.hpp"

#include <sstream>

namespace legnn {

namespace {
thread_local Tape* g_current_tape = nullptr;
}

void GradientMap::accumulate(std::size_t id, const Tensor& g) {
  auto it = grads_.find(id);
  if (it == grads_.end()) {
    grads_.emplace(id, g.clone());
    return;
  }
  Tensor& acc = it->second;
  if (acc.rows() != g.rows() || acc.cols() != g.cols()) {
    std::ostringstream os;
    os << "gradient accumulation shape mismatch: " << acc.rows() << "x"
       << acc.cols() << " vs " << g.rows() << "x" << g.cols();
    throw DimensionError(os.str());
  }
  auto dst = acc.values_mut();
  auto src = g.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

Tape::Scope::Scope(Tape& tape) : previous_(g_current_tape) {
  g_current_tape = &tape;
}

Tape::Scope::~Scope() { g_current_tape = previous_; }

Tape* Tape::current() { return g_current_tape; }

GradientMap Tape::backward(const Tensor& loss) {
  if (loss.rows() != 1 || loss.cols() != 1) {
    std::ostringstream os;
    os << "backward: loss must be scalar, got " << loss.rows() << "x"
       << loss.cols();
    throw ContractError(os.str());
  }
  GradientMap grads;
  grads.accumulate(loss.id(), Tensor::full(1, 1, 1.0));
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
    if (!grads.has_id(it->output)) continue;  // op not on a path to the loss
    it->backward(grads.get_id(it->output), grads);
  }
  clear();
  return grads;
}

}  // namespace legnn
