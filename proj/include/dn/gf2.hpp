#pragma once

#include <cstdint>
#include <vector>

namespace dn {

// Dense matrix over GF(2), rows packed into 64-bit words.
class Gf2Matrix {
public:
  Gf2Matrix() = default;
  Gf2Matrix(int rows, int cols)
      : rows_(rows), cols_(cols), words_per_row_((cols + 63) / 64), bits_(std::size_t(rows) * words_per_row_, 0) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  bool get(int i, int j) const { return (word(i, j) >> (j & 63)) & 1u; }
  void set(int i, int j, bool v) {
    uint64_t mask = uint64_t(1) << (j & 63);
    if (v)
      word(i, j) |= mask;
    else
      word(i, j) &= ~mask;
  }
  void toggle(int i, int j) { word(i, j) ^= uint64_t(1) << (j & 63); }

  void xor_row(int dst, int src) {
    uint64_t* d = &bits_[std::size_t(dst) * words_per_row_];
    const uint64_t* s = &bits_[std::size_t(src) * words_per_row_];
    for (int w = 0; w < words_per_row_; ++w) d[w] ^= s[w];
  }
  void swap_rows(int a, int b) {
    if (a == b) return;
    uint64_t* pa = &bits_[std::size_t(a) * words_per_row_];
    uint64_t* pb = &bits_[std::size_t(b) * words_per_row_];
    for (int w = 0; w < words_per_row_; ++w) std::swap(pa[w], pb[w]);
  }

  bool is_zero() const;
  int rank() const;
  Gf2Matrix multiply(const Gf2Matrix& rhs) const;

  bool operator==(const Gf2Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && bits_ == o.bits_;
  }

private:
  uint64_t& word(int i, int j) { return bits_[std::size_t(i) * words_per_row_ + (j >> 6)]; }
  const uint64_t& word(int i, int j) const { return bits_[std::size_t(i) * words_per_row_ + (j >> 6)]; }

  int rows_ = 0;
  int cols_ = 0;
  int words_per_row_ = 0;
  std::vector<uint64_t> bits_;
};

} // namespace dn
