#include "dn/smith.hpp"

#include <algorithm>
#include <cstdlib>

#include "dn/error.hpp"

namespace dn {

int64_t checked_add(int64_t a, int64_t b) {
  int64_t out;
  if (__builtin_add_overflow(a, b, &out)) fail(ErrorCode::Overflow, "integer overflow in add");
  return out;
}

int64_t checked_mul(int64_t a, int64_t b) {
  int64_t out;
  if (__builtin_mul_overflow(a, b, &out)) fail(ErrorCode::Overflow, "integer overflow in mul");
  return out;
}

namespace {

int64_t checked_neg(int64_t a) {
  if (a == INT64_MIN) fail(ErrorCode::Overflow, "integer overflow in negate");
  return -a;
}

// Position of a nonzero entry of minimal |value| in the lower-right block starting at (t, t).
bool find_pivot(const IntMatrix& m, int t, int& pi, int& pj) {
  int64_t best = 0;
  bool found = false;
  for (int i = t; i < m.rows; ++i) {
    for (int j = t; j < m.cols; ++j) {
      int64_t v = m.at(i, j);
      if (v == 0) continue;
      int64_t av = v < 0 ? checked_neg(v) : v;
      if (!found || av < best) {
        best = av;
        pi = i;
        pj = j;
        found = true;
      }
    }
  }
  return found;
}

void swap_rows(IntMatrix& m, int a, int b) {
  if (a == b) return;
  for (int j = 0; j < m.cols; ++j) std::swap(m.at(a, j), m.at(b, j));
}

void swap_cols(IntMatrix& m, int a, int b) {
  if (a == b) return;
  for (int i = 0; i < m.rows; ++i) std::swap(m.at(i, a), m.at(i, b));
}

// row[dst] += q * row[src]
void add_row(IntMatrix& m, int dst, int src, int64_t q) {
  for (int j = 0; j < m.cols; ++j) m.at(dst, j) = checked_add(m.at(dst, j), checked_mul(q, m.at(src, j)));
}

void add_col(IntMatrix& m, int dst, int src, int64_t q) {
  for (int i = 0; i < m.rows; ++i) m.at(i, dst) = checked_add(m.at(i, dst), checked_mul(q, m.at(i, src)));
}

} // namespace

SmithResult smith_normal_form(IntMatrix m) {
  SmithResult res;
  int t = 0;
  int nmin = std::min(m.rows, m.cols);
  while (t < nmin) {
    int pi = 0, pj = 0;
    if (!find_pivot(m, t, pi, pj)) break;
    swap_rows(m, t, pi);
    swap_cols(m, t, pj);

    // Reduce the pivot row/column until the pivot divides everything it meets.
    bool clean = false;
    while (!clean) {
      clean = true;
      for (int i = t + 1; i < m.rows; ++i) {
        if (m.at(i, t) == 0) continue;
        int64_t q = m.at(i, t) / m.at(t, t);
        add_row(m, i, t, checked_neg(q));
        if (m.at(i, t) != 0) {
          swap_rows(m, t, i);
          clean = false;
        }
      }
      for (int j = t + 1; j < m.cols; ++j) {
        if (m.at(t, j) == 0) continue;
        int64_t q = m.at(t, j) / m.at(t, t);
        add_col(m, j, t, checked_neg(q));
        if (m.at(t, j) != 0) {
          swap_cols(m, t, j);
          clean = false;
        }
      }
      if (!clean) continue;
      // Pivot must also divide the remaining block; if not, fold the offending row in and retry.
      for (int i = t + 1; i < m.rows && clean; ++i) {
        for (int j = t + 1; j < m.cols && clean; ++j) {
          if (m.at(i, j) % m.at(t, t) != 0) {
            add_row(m, t, i, 1);
            clean = false;
          }
        }
      }
    }
    if (m.at(t, t) < 0) {
      for (int j = t; j < m.cols; ++j) m.at(t, j) = checked_neg(m.at(t, j));
    }
    ++t;
  }
  for (int i = 0; i < t; ++i) res.invariant_factors.push_back(m.at(i, i));
  res.rank = t;
  return res;
}

int rational_rank(const IntMatrix& a) { return smith_normal_form(a).rank; }

} // namespace dn
