#ifndef LEGNN_ERRORS_HPP
#define LEGNN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace legnn {

// Base for all library errors. `code()` is a stable machine-parsable tag
// the CLI prints on failure.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

// Incompatible tensor/matrix shapes.
struct DimensionError : Error {
  explicit DimensionError(const std::string& what) : Error("E_DIM", what) {}
};

// Sparse matrix violates CSR invariants (offsets, column bounds, ordering).
struct CorruptMatrixError : Error {
  explicit CorruptMatrixError(const std::string& what) : Error("E_CORRUPT", what) {}
};

// Caller violated an API precondition.
struct ContractError : Error {
  explicit ContractError(const std::string& what) : Error("E_CONTRACT", what) {}
};

// Malformed dataset or config file; message names file and line.
struct FormatError : Error {
  explicit FormatError(const std::string& what) : Error("E_FORMAT", what) {}
};

// Request exceeds what the input admits (e.g. more cross-label edges
// than distinct pairs exist).
struct CapacityError : Error {
  explicit CapacityError(const std::string& what) : Error("E_CAPACITY", what) {}
};

// Quantity is mathematically undefined for this input.
struct UndefinedValueError : Error {
  explicit UndefinedValueError(const std::string& what) : Error("E_UNDEFINED", what) {}
};

// Bad CLI arguments or experiment config.
struct UsageError : Error {
  explicit UsageError(const std::string& what) : Error("E_USAGE", what) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error("E_IO", what) {}
};

}  // namespace legnn

#endif  // LEGNN_ERRORS_HPP
