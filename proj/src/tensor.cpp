#include "legnn/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <tuple>

namespace legnn {

namespace {
std::atomic<std::size_t> g_next_id{1};
bool g_debug_checks = true;
}  // namespace

void set_debug_checks(bool enabled) { g_debug_checks = enabled; }
bool debug_checks_enabled() { return g_debug_checks; }

Tensor::Tensor() : Tensor(0, 0) {}

Tensor::Tensor(std::size_t rows, std::size_t cols)
    : storage_(std::make_shared<Storage>()) {
  storage_->id = g_next_id.fetch_add(1);
  storage_->rows = rows;
  storage_->cols = cols;
  storage_->values.assign(rows * cols, 0.0);
}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> values)
    : storage_(std::make_shared<Storage>()) {
  if (values.size() != rows * cols) {
    std::ostringstream os;
    os << "tensor init: " << values.size() << " values for shape " << rows
       << "x" << cols;
    throw DimensionError(os.str());
  }
  storage_->id = g_next_id.fetch_add(1);
  storage_->rows = rows;
  storage_->cols = cols;
  storage_->values = std::move(values);
  if (g_debug_checks) throw_if_not_finite("tensor init");
}

Tensor::Tensor(std::size_t rows, std::size_t cols,
               std::initializer_list<double> values)
    : Tensor(rows, cols, std::vector<double>(values)) {}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols) {
  return Tensor(rows, cols);
}

Tensor Tensor::full(std::size_t rows, std::size_t cols, double value) {
  Tensor t(rows, cols);
  std::fill(t.storage_->values.begin(), t.storage_->values.end(), value);
  if (g_debug_checks) t.throw_if_not_finite("tensor full");
  return t;
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t(n, n);
  for (std::size_t i = 0; i < n; ++i) t.storage_->values[i * n + i] = 1.0;
  return t;
}

double Tensor::at(std::size_t r, std::size_t c) const {
  if (r >= rows() || c >= cols()) {
    std::ostringstream os;
    os << "tensor at(" << r << "," << c << ") out of range for " << rows()
       << "x" << cols();
    throw DimensionError(os.str());
  }
  return storage_->values[r * cols() + c];
}

void Tensor::set(std::size_t r, std::size_t c, double v) {
  if (r >= rows() || c >= cols()) {
    std::ostringstream os;
    os << "tensor set(" << r << "," << c << ") out of range for " << rows()
       << "x" << cols();
    throw DimensionError(os.str());
  }
  storage_->values[r * cols() + c] = v;
}

Tensor Tensor::clone() const {
  Tensor t(rows(), cols(), std::vector<double>(storage_->values));
  t.storage_->requires_grad = storage_->requires_grad;
  return t;
}

bool Tensor::all_finite() const {
  for (double v : storage_->values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Tensor::throw_if_not_finite(const char* where) const {
  if (!all_finite()) {
    std::ostringstream os;
    os << where << ": non-finite entry in " << rows() << "x" << cols()
       << " tensor";
    throw ContractError(os.str());
  }
}

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols,
                           std::vector<std::size_t> row_offsets,
                           std::vector<std::size_t> col_indices,
                           std::vector<double> values) {
  rows_ = rows;
  cols_ = cols;
  row_offsets_ = std::move(row_offsets);
  col_indices_ = std::move(col_indices);
  values_ = std::move(values);
  validate();
}

void SparseMatrix::validate() const {
  if (row_offsets_.size() != rows_ + 1) {
    throw CorruptMatrixError("csr: row offset array must have rows+1 entries");
  }
  if (row_offsets_.front() != 0) {
    throw CorruptMatrixError("csr: first row offset must be 0");
  }
  if (col_indices_.size() != values_.size()) {
    throw CorruptMatrixError("csr: column index and value arrays differ in length");
  }
  if (row_offsets_.back() != values_.size()) {
    throw CorruptMatrixError("csr: last row offset must equal stored value count");
  }
  for (std::size_t r = 0; r < rows_; ++r) {
    if (row_offsets_[r] > row_offsets_[r + 1]) {
      throw CorruptMatrixError("csr: row offsets must be non-decreasing");
    }
    for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
      if (col_indices_[k] >= cols_) {
        std::ostringstream os;
        os << "csr: column index " << col_indices_[k] << " out of bounds for "
           << cols_ << " columns";
        throw CorruptMatrixError(os.str());
      }
      if (k > row_offsets_[r] && col_indices_[k - 1] >= col_indices_[k]) {
        throw CorruptMatrixError("csr: column indices must be strictly increasing per row");
      }
    }
  }
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<std::size_t> offsets(n + 1), cols(n);
  std::vector<double> vals(n, 1.0);
  for (std::size_t i = 0; i <= n; ++i) offsets[i] = i;
  for (std::size_t i = 0; i < n; ++i) cols[i] = i;
  return SparseMatrix(n, n, std::move(offsets), std::move(cols), std::move(vals));
}

SparseMatrix SparseMatrix::from_triplets(
    std::size_t rows, std::size_t cols,
    std::vector<std::tuple<std::size_t, std::size_t, double>> triplets) {
  std::sort(triplets.begin(), triplets.end(),
            [](const auto& a, const auto& b) {
              return std::tie(std::get<0>(a), std::get<1>(a)) <
                     std::tie(std::get<0>(b), std::get<1>(b));
            });
  std::vector<std::size_t> offsets(rows + 1, 0), col_idx;
  std::vector<double> vals;
  col_idx.reserve(triplets.size());
  vals.reserve(triplets.size());
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    const auto& [r, c, v] = triplets[i];
    if (r >= rows || c >= cols) {
      throw CorruptMatrixError("from_triplets: entry out of bounds");
    }
    if (i > 0 && r == std::get<0>(triplets[i - 1]) &&
        c == std::get<1>(triplets[i - 1])) {
      throw CorruptMatrixError("from_triplets: duplicate entry");
    }
    offsets[r + 1]++;
    col_idx.push_back(c);
    vals.push_back(v);
  }
  for (std::size_t r = 0; r < rows; ++r) offsets[r + 1] += offsets[r];
  return SparseMatrix(rows, cols, std::move(offsets), std::move(col_idx),
                      std::move(vals));
}

SparseMatrix SparseMatrix::with_values(std::vector<double> values) const {
  if (values.size() != values_.size()) {
    throw DimensionError("with_values: value count must match nnz");
  }
  SparseMatrix m;
  m.rows_ = rows_;
  m.cols_ = cols_;
  m.row_offsets_ = row_offsets_;
  m.col_indices_ = col_indices_;
  m.values_ = std::move(values);
  return m;
}

SparseMatrix SparseMatrix::transpose() const {
  std::vector<std::size_t> offsets(cols_ + 1, 0);
  for (std::size_t c : col_indices_) offsets[c + 1]++;
  for (std::size_t c = 0; c < cols_; ++c) offsets[c + 1] += offsets[c];
  std::vector<std::size_t> col_idx(nnz());
  std::vector<double> vals(nnz());
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
      const std::size_t pos = cursor[col_indices_[k]]++;
      col_idx[pos] = r;  // rows visited in order, so columns stay sorted
      vals[pos] = values_[k];
    }
  }
  SparseMatrix m;
  m.rows_ = cols_;
  m.cols_ = rows_;
  m.row_offsets_ = std::move(offsets);
  m.col_indices_ = std::move(col_idx);
  m.values_ = std::move(vals);
  return m;
}

Tensor SparseMatrix::to_dense() const {
  Tensor d(rows_, cols_);
  auto out = d.values_mut();
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
      out[r * cols_ + col_indices_[k]] = values_[k];
    }
  }
  return d;
}

}  // namespace legnn
