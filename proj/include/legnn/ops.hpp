#ifndef LEGNN_OPS_HPP
#define LEGNN_OPS_HPP

#include <functional>
#include <span>

#include "legnn/rng.hpp"
#include "legnn/tape.hpp"
#include "legnn/tensor.hpp"

namespace legnn {

enum class ActivationKind { relu, elu, leaky_relu, sigmoid };

struct Activation {
  ActivationKind kind = ActivationKind::relu;
  double slope = 0.2;  // leaky_relu only; must be > 0

  static Activation relu() { return {ActivationKind::relu, 0.0}; }
  static Activation elu() { return {ActivationKind::elu, 0.0}; }
  static Activation leaky_relu(double slope) { return {ActivationKind::leaky_relu, slope}; }
  static Activation sigmoid() { return {ActivationKind::sigmoid, 0.0}; }
};

// Every op below records itself on Tape::current() (when one is installed and
// some input requires grad) and propagates requires_grad to its output.

Tensor matmul(const Tensor& a, const Tensor& b);

// Sparse x dense with a constant sparse operand; gradient flows to d only.
Tensor spmm(const SparseMatrix& s, const Tensor& d);

// Sparse x dense where the stored values come from `values` (nnz x 1), so
// gradient flows to both the values and the dense operand. This is the path
// that lets attention weights be learned.
Tensor spmm_values(const SparseMatrix& pattern, const Tensor& values, const Tensor& d);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& t, double factor);
Tensor elementwise_mul(const Tensor& a, const Tensor& b);

// t (r x c) + bias (1 x c) broadcast over rows: the one permitted broadcast.
Tensor add_row_vector(const Tensor& t, const Tensor& bias);

Tensor apply_activation(const Tensor& t, const Activation& act);

// Row-wise softmax with max subtraction; rows sum to 1 even for logits of
// magnitude ~1e3.
Tensor softmax_rows(const Tensor& t);

// ln(max(x, floor)) elementwise; gradient is 0 where the clamp engaged.
Tensor log_clamped(const Tensor& t, double floor = 1e-12);

Tensor sum_all(const Tensor& t);  // 1x1

Tensor slice_rows(const Tensor& t, std::size_t begin, std::size_t end);
Tensor concat_rows(const Tensor& a, const Tensor& b);

// Inverted dropout: keeps entries with prob 1-p and scales kept ones by
// 1/(1-p); the realized mask is recorded on the tape. p == 0 is the identity.
Tensor dropout(const Tensor& t, double p, Rng& rng);

// For each stored entry (r, c) of the pattern, scores[r] + scores[c].
// Output is nnz x 1; scores must be (pattern.rows()) x 1 and the pattern
// square. Used to form raw attention logits per edge.
Tensor edge_score_sum(const Tensor& scores, const SparseMatrix& pattern);

// Softmax of edge values within each row segment of the pattern: afterwards
// the entries of any non-empty row sum to 1. Values are nnz x 1.
Tensor edge_softmax(const Tensor& edge_values, const SparseMatrix& pattern);

// Central-difference gradient audit. Evaluates f twice to reject
// non-deterministic functions (e.g. dropout left enabled), then compares
// analytic gradients of every parameter against (f(x+h)-f(x-h))/2h.
// Returns max over entries of |analytic-numeric|/max(|analytic|,|numeric|,1e-8).
double grad_check(const std::function<Tensor()>& f, std::span<Tensor> params,
                  double step = 1e-5);

}  // namespace legnn

#endif  // LEGNN_OPS_HPP
