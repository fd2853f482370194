#ifndef LEGNN_TENSOR_HPP
#define LEGNN_TENSOR_HPP

#include <cstddef>
#include <initializer_list>
#include <memory>
#include <span>
#include <vector>

#include "legnn/errors.hpp"

namespace legnn {

// Toggles entry-by-entry finiteness validation of freshly built tensors.
// On by default; the cost is irrelevant at the scales this engine targets.
void set_debug_checks(bool enabled);
bool debug_checks_enabled();

// Dense row-major matrix of doubles. Values are treated as immutable once
// the tensor has entered a computation; the mutating accessors exist for
// parameter updates between optimizer steps and for finite-difference
// probing. Copies share storage, so identity (id()) follows the payload.
class Tensor {
 public:
  Tensor();  // 0x0
  Tensor(std::size_t rows, std::size_t cols);  // zero-filled
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> values);
  Tensor(std::size_t rows, std::size_t cols, std::initializer_list<double> values);

  static Tensor zeros(std::size_t rows, std::size_t cols);
  static Tensor full(std::size_t rows, std::size_t cols, double value);
  static Tensor identity(std::size_t n);

  std::size_t rows() const { return storage_->rows; }
  std::size_t cols() const { return storage_->cols; }
  std::size_t size() const { return storage_->values.size(); }
  bool empty() const { return size() == 0; }

  double at(std::size_t r, std::size_t c) const;
  void set(std::size_t r, std::size_t c, double v);

  std::span<const double> values() const { return storage_->values; }
  std::span<double> values_mut() { return storage_->values; }

  // Unique identity of the underlying payload; gradient accumulators and the
  // tape key on this.
  std::size_t id() const { return storage_->id; }
  bool same_storage(const Tensor& other) const { return storage_ == other.storage_; }

  bool requires_grad() const { return storage_->requires_grad; }
  Tensor& set_requires_grad(bool v) {
    storage_->requires_grad = v;
    return *this;
  }

  // Deep copy with a fresh identity.
  Tensor clone() const;

  bool all_finite() const;
  void throw_if_not_finite(const char* where) const;

 private:
  struct Storage {
    std::size_t id;
    std::size_t rows, cols;
    std::vector<double> values;
    bool requires_grad = false;
  };
  std::shared_ptr<Storage> storage_;
};

// Compressed sparse row matrix. Construction validates the CSR invariants:
// offsets monotone with offsets[0] == 0 and offsets[rows] == nnz, column
// indices in range and strictly increasing within each row.
class SparseMatrix {
 public:
  SparseMatrix(std::size_t rows, std::size_t cols,
               std::vector<std::size_t> row_offsets,
               std::vector<std::size_t> col_indices,
               std::vector<double> values);

  static SparseMatrix identity(std::size_t n);
  // Builds from (row, col, value) triplets; duplicates of the same entry are
  // rejected as corrupt input.
  static SparseMatrix from_triplets(
      std::size_t rows, std::size_t cols,
      std::vector<std::tuple<std::size_t, std::size_t, double>> triplets);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }

  std::span<const std::size_t> row_offsets() const { return row_offsets_; }
  std::span<const std::size_t> col_indices() const { return col_indices_; }
  std::span<const double> values() const { return values_; }

  // Structure copy with all stored values replaced.
  SparseMatrix with_values(std::vector<double> values) const;

  SparseMatrix transpose() const;
  Tensor to_dense() const;

 private:
  SparseMatrix() = default;
  void validate() const;

  std::size_t rows_ = 0, cols_ = 0;
  std::vector<std::size_t> row_offsets_;
  std::vector<std::size_t> col_indices_;
  std::vector<double> values_;
};

}  // namespace legnn

#endif  // LEGNN_TENSOR_HPP
