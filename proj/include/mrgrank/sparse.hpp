#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mrgrank {

using Index = std::uint32_t;

struct Triplet {
  Index row;
  Index col;
  double value;
};

/// Compressed sparse row matrix with sorted column indices per row.
///
/// Explicit zeros are kept when a caller inserts them; the transition matrix
/// relies on that to keep its sparsity pattern independent of the priors.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(std::size_t rows, std::size_t cols);

  /// Duplicate (row, col) pairs are summed. Entries keep insertion-independent
  /// order, so identical triplet multisets give bit-identical matrices.
  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols,
                                    std::vector<Triplet> triplets);

  /// Builds directly from CSR arrays; validates shape and ordering.
  static SparseMatrix from_csr(std::size_t rows, std::size_t cols,
                               std::vector<std::size_t> row_ptr,
                               std::vector<Index> col_idx,
                               std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return col_.size(); }

  double at(std::size_t row, std::size_t col) const;
  bool contains(std::size_t row, std::size_t col) const;

  std::span<const Index> row_indices(std::size_t row) const {
    return {col_.data() + row_ptr_[row], col_.data() + row_ptr_[row + 1]};
  }
  std::span<const double> row_values(std::size_t row) const {
    return {val_.data() + row_ptr_[row], val_.data() + row_ptr_[row + 1]};
  }
  std::span<double> row_values_mut(std::size_t row) {
    return {val_.data() + row_ptr_[row], val_.data() + row_ptr_[row + 1]};
  }
  std::size_t row_begin(std::size_t row) const { return row_ptr_[row]; }

  double row_sum(std::size_t row) const;
  SparseMatrix transposed() const;
  bool is_symmetric(double tol = 0.0) const;

  const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
  const std::vector<Index>& col_idx() const { return col_; }
  const std::vector<double>& values() const { return val_; }

  friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<Index> col_;
  std::vector<double> val_;
};

}  // namespace mrgrank
