#include "dn/gf2.hpp"

#include "dn/error.hpp"

namespace dn {

bool Gf2Matrix::is_zero() const {
  for (uint64_t w : bits_)
    if (w) return false;
  return true;
}

int Gf2Matrix::rank() const {
  Gf2Matrix m = *this;
  int rank = 0;
  for (int col = 0; col < m.cols_ && rank < m.rows_; ++col) {
    int pivot = -1;
    for (int r = rank; r < m.rows_; ++r) {
      if (m.get(r, col)) {
        pivot = r;
        break;
      }
    }
    if (pivot < 0) continue;
    m.swap_rows(rank, pivot);
    for (int r = 0; r < m.rows_; ++r) {
      if (r != rank && m.get(r, col)) m.xor_row(r, rank);
    }
    ++rank;
  }
  return rank;
}

Gf2Matrix Gf2Matrix::multiply(const Gf2Matrix& rhs) const {
  if (cols_ != rhs.rows_) fail(ErrorCode::InvalidArgument, "gf2 multiply: inner dimensions differ");
  Gf2Matrix out(rows_, rhs.cols_);
  for (int i = 0; i < rows_; ++i) {
    for (int k = 0; k < cols_; ++k) {
      if (!get(i, k)) continue;
      uint64_t* dst = &out.bits_[std::size_t(i) * out.words_per_row_];
      const uint64_t* src = &rhs.bits_[std::size_t(k) * rhs.words_per_row_];
      for (int w = 0; w < out.words_per_row_; ++w) dst[w] ^= src[w];
    }
  }
  return out;
}

} // namespace dn
