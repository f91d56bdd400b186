#include "mrgrank/sparse.hpp"

#include <algorithm>
#include <cmath>

#include "mrgrank/error.hpp"

namespace mrgrank {

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), row_ptr_(rows + 1, 0) {}

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols,
                                         std::vector<Triplet> triplets) {
  for (const auto& t : triplets) {
    if (t.row >= rows || t.col >= cols) {
      throw Error(ErrorCode::OutOfRange, "triplet outside matrix bounds");
    }
  }
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  SparseMatrix m(rows, cols);
  m.col_.reserve(triplets.size());
  m.val_.reserve(triplets.size());
  for (std::size_t k = 0; k < triplets.size();) {
    const Triplet& head = triplets[k];
    // Equal keys are adjacent after sorting, but their relative order came
    // from the caller; sum them in sorted-value order for reproducibility.
    std::size_t end = k + 1;
    while (end < triplets.size() && triplets[end].row == head.row &&
           triplets[end].col == head.col) {
      ++end;
    }
    double sum = 0.0;
    if (end - k == 1) {
      sum = head.value;
    } else {
      std::vector<double> parts;
      parts.reserve(end - k);
      for (std::size_t q = k; q < end; ++q) parts.push_back(triplets[q].value);
      std::sort(parts.begin(), parts.end());
      for (double p : parts) sum += p;
    }
    m.col_.push_back(head.col);
    m.val_.push_back(sum);
    ++m.row_ptr_[head.row + 1];
    k = end;
  }
  for (std::size_t r = 0; r < rows; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
  return m;
}

SparseMatrix SparseMatrix::from_csr(std::size_t rows, std::size_t cols,
                                    std::vector<std::size_t> row_ptr,
                                    std::vector<Index> col_idx,
                                    std::vector<double> values) {
  if (row_ptr.size() != rows + 1 || row_ptr.front() != 0 ||
      row_ptr.back() != col_idx.size() || col_idx.size() != values.size()) {
    throw Error(ErrorCode::InvalidArgument, "inconsistent CSR arrays");
  }
  for (std::size_t r = 0; r < rows; ++r) {
    if (row_ptr[r] > row_ptr[r + 1]) {
      throw Error(ErrorCode::InvalidArgument, "row pointers not monotone");
    }
    for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
      if (col_idx[k] >= cols || (k > row_ptr[r] && col_idx[k] <= col_idx[k - 1])) {
        throw Error(ErrorCode::InvalidArgument, "CSR columns unsorted or out of range");
      }
    }
  }
  SparseMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.row_ptr_ = std::move(row_ptr);
  m.col_ = std::move(col_idx);
  m.val_ = std::move(values);
  return m;
}

double SparseMatrix::at(std::size_t row, std::size_t col) const {
  auto idx = row_indices(row);
  auto it = std::lower_bound(idx.begin(), idx.end(), static_cast<Index>(col));
  if (it == idx.end() || *it != col) return 0.0;
  return val_[row_ptr_[row] + static_cast<std::size_t>(it - idx.begin())];
}

bool SparseMatrix::contains(std::size_t row, std::size_t col) const {
  auto idx = row_indices(row);
  return std::binary_search(idx.begin(), idx.end(), static_cast<Index>(col));
}

double SparseMatrix::row_sum(std::size_t row) const {
  double s = 0.0;
  for (double v : row_values(row)) s += v;
  return s;
}

SparseMatrix SparseMatrix::transposed() const {
  SparseMatrix t(cols_, rows_);
  t.col_.resize(nnz());
  t.val_.resize(nnz());
  for (Index c : col_) ++t.row_ptr_[c + 1];
  for (std::size_t r = 0; r < cols_; ++r) t.row_ptr_[r + 1] += t.row_ptr_[r];
  std::vector<std::size_t> fill(t.row_ptr_.begin(), t.row_ptr_.end() - 1);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      const std::size_t slot = fill[col_[k]]++;
      t.col_[slot] = static_cast<Index>(r);
      t.val_[slot] = val_[k];
    }
  }
  return t;
}

bool SparseMatrix::is_symmetric(double tol) const {
  if (rows_ != cols_) return false;
  for (std::size_t r = 0; r < rows_; ++r) {
    auto idx = row_indices(r);
    auto vals = row_values(r);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (std::abs(at(idx[k], r) - vals[k]) > tol) return false;
    }
  }
  return true;
}

}  // namespace mrgrank
