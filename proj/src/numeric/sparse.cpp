#include "geann/numeric/sparse.hpp"

#include <algorithm>

namespace geann::numeric {

CsrMatrix CsrMatrix::from_triplets(std::size_t rows, std::size_t cols,
                                   std::vector<Triplet> triplets) {
  for (const auto& t : triplets) {
    if (t.row >= rows || t.col >= cols) {
      throw ShapeError("csr", "triplet (" + std::to_string(t.row) + "," + std::to_string(t.col) +
                                  ") outside " + std::to_string(rows) + "x" + std::to_string(cols));
    }
  }
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  CsrMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.row_ptr.assign(rows + 1, 0);
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    const auto& t = triplets[i];
    if (!m.col_idx.empty() && i > 0 && triplets[i - 1].row == t.row &&
        triplets[i - 1].col == t.col) {
      m.values.back() += t.value;
      continue;
    }
    m.col_idx.push_back(t.col);
    m.values.push_back(t.value);
    ++m.row_ptr[t.row + 1];
  }
  for (std::size_t r = 0; r < rows; ++r) m.row_ptr[r + 1] += m.row_ptr[r];
  return m;
}

CsrMatrix CsrMatrix::selection(std::size_t source_rows, const std::vector<std::size_t>& picks) {
  CsrMatrix m;
  m.rows = picks.size();
  m.cols = source_rows;
  m.row_ptr.resize(picks.size() + 1);
  m.col_idx.reserve(picks.size());
  m.values.assign(picks.size(), 1.0);
  for (std::size_t i = 0; i < picks.size(); ++i) {
    if (picks[i] >= source_rows) {
      throw ShapeError("selection", "row " + std::to_string(picks[i]) + " out of range " +
                                        std::to_string(source_rows));
    }
    m.col_idx.push_back(picks[i]);
    m.row_ptr[i + 1] = i + 1;
  }
  return m;
}

CsrMatrix CsrMatrix::replicated(std::size_t replicas) const {
  CsrMatrix m;
  m.rows = rows * replicas;
  m.cols = cols * replicas;
  m.row_ptr.assign(m.rows + 1, 0);
  m.col_idx.reserve(nnz() * replicas);
  m.values.reserve(nnz() * replicas);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t f = 0; f < replicas; ++f) {
      for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
        m.col_idx.push_back(col_idx[p] * replicas + f);
        m.values.push_back(values[p]);
      }
      m.row_ptr[i * replicas + f + 1] = m.col_idx.size();
    }
  }
  return m;
}

Tensor CsrMatrix::to_dense() const {
  Tensor d = Tensor::matrix(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) d(i, col_idx[p]) += values[p];
  }
  return d;
}

}  // namespace geann::numeric
