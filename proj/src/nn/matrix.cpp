#include "romo/nn/matrix.hpp"

#include <algorithm>
#include <cmath>

namespace romo {

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

Matrix Matrix::from_rows(const std::vector<Vector>& rows) {
  if (rows.empty()) return {};
  Matrix out(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require(rows[r].size() == out.cols(), "Matrix::from_rows: ragged rows");
    std::copy(rows[r].begin(), rows[r].end(), out.row(r).begin());
  }
  return out;
}

Matrix Matrix::row_vector(std::span<const double> values) {
  Matrix out(1, values.size());
  std::copy(values.begin(), values.end(), out.data());
  return out;
}

Matrix Matrix::transposed() const {
  Matrix out(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) out.data_[c * rows_ + r] = data_[r * cols_ + c];
  }
  return out;
}

Matrix Matrix::columns(std::size_t first, std::size_t count) const {
  require(first + count <= cols_, "Matrix::columns: range out of bounds");
  Matrix out(rows_, count);
  for (std::size_t r = 0; r < rows_; ++r) {
    const auto src = row(r).subspan(first, count);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

Matrix Matrix::hconcat(std::initializer_list<const Matrix*> parts) {
  std::size_t rows = 0;
  std::size_t cols = 0;
  bool first = true;
  for (const Matrix* p : parts) {
    if (first) rows = p->rows();
    require(p->rows() == rows, "Matrix::hconcat: row count mismatch");
    cols += p->cols();
    first = false;
  }
  Matrix out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    auto dst = out.row(r).begin();
    for (const Matrix* p : parts) dst = std::copy(p->row(r).begin(), p->row(r).end(), dst);
  }
  return out;
}

}  // namespace romo
