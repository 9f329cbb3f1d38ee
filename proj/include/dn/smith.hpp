#pragma once

#include <cstdint>
#include <vector>

namespace dn {

// Dense integer matrix, small sizes only; entries are checked 64-bit.
struct IntMatrix {
  IntMatrix() = default;
  IntMatrix(int rows, int cols) : rows(rows), cols(cols), data(std::size_t(rows) * cols, 0) {}

  int rows = 0;
  int cols = 0;
  std::vector<int64_t> data;

  int64_t& at(int i, int j) { return data[std::size_t(i) * cols + j]; }
  int64_t at(int i, int j) const { return data[std::size_t(i) * cols + j]; }

  bool operator==(const IntMatrix& o) const { return rows == o.rows && cols == o.cols && data == o.data; }
};

struct SmithResult {
  std::vector<int64_t> invariant_factors; // nonneg, each divides the next, zeros trimmed
  int rank = 0;                           // count of nonzero invariant factors
};

// Exact Smith normal form; throws Error(Overflow) if any intermediate exceeds int64.
SmithResult smith_normal_form(IntMatrix a);

// Rank over Q, from the SNF.
int rational_rank(const IntMatrix& a);

// Checked arithmetic helpers (shared with the integer boundary assembly).
int64_t checked_add(int64_t a, int64_t b);
int64_t checked_mul(int64_t a, int64_t b);

} // namespace dn
