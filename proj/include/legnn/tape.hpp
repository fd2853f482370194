#ifndef LEGNN_TAPE_HPP
#define LEGNN_TAPE_HPP

#include <cstddef>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "legnn/tensor.hpp"

namespace legnn {

// Gradients keyed by tensor identity. Tensors never reached by the backward
// sweep read as zero.
class GradientMap {
 public:
  bool has(const Tensor& t) const { return grads_.count(t.id()) > 0; }

  // Gradient of `t`; zeros of t's shape when absent.
  Tensor get(const Tensor& t) const {
    auto it = grads_.find(t.id());
    if (it != grads_.end()) return it->second;
    return Tensor::zeros(t.rows(), t.cols());
  }

  void accumulate(std::size_t id, const Tensor& g);
  std::size_t size() const { return grads_.size(); }

  bool has_id(std::size_t id) const { return grads_.count(id) > 0; }
  const Tensor& get_id(std::size_t id) const { return grads_.at(id); }

 private:
  std::unordered_map<std::size_t, Tensor> grads_;
};

// One recorded primitive: which tensors went in and out, and how to push the
// upstream gradient back through it.
struct TapeOp {
  const char* kind;
  std::vector<std::size_t> inputs;
  std::size_t output;
  std::function<void(const Tensor& upstream, GradientMap& sink)> backward;
};

// Ordered record of the primitives executed under a Scope. Ops append in
// execution order, so the record is already topologically sorted and the
// reverse sweep visits consumers before producers.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Installs a tape as the recording target for the current thread.
  class Scope {
   public:
    explicit Scope(Tape& tape);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Tape* previous_;
  };

  static Tape* current();

  void record(TapeOp op) { ops_.push_back(std::move(op)); }
  std::size_t size() const { return ops_.size(); }
  bool empty() const { return ops_.empty(); }
  void clear() { ops_.clear(); }

  // Reverse sweep from a scalar loss. Populates gradients for every
  // requires-grad tensor reachable from it, then clears the record so the
  // tape is ready for the next step.
  GradientMap backward(const Tensor& loss);

 private:
  std::vector<TapeOp> ops_;
};

}  // namespace legnn

#endif  // LEGNN_TAPE_HPP
