#pragma once

#include <cstddef>
#include <vector>

#include "geann/numeric/tensor.hpp"

namespace geann::numeric {

/// Compressed sparse row matrix used as a constant operand (aggregation,
/// row selection, broadcasting).
struct CsrMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::size_t> col_idx;
  std::vector<double> values;

  std::size_t nnz() const noexcept { return values.size(); }

  /// Out-of-order triplets are sorted; duplicates are summed.
  struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
  };
  static CsrMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets);

  /// Row i of the result picks row `picks[i]` of the operand.
  static CsrMatrix selection(std::size_t source_rows, const std::vector<std::size_t>& picks);

  /// kron(this, I_replicas): each (i,j) entry acts on rows i*replicas+f <- j*replicas+f.
  CsrMatrix replicated(std::size_t replicas) const;

  Tensor to_dense() const;
};

}  // namespace geann::numeric
