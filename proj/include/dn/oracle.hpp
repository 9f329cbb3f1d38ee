#pragma once

#include <vector>

#include "dn/geometry.hpp"

namespace dn {

// Independent exhaustive check of the solver: scans the full product grid of
// ordered parameter pairs for local minima of the stationarity residual, polishes
// each candidate, and merges the polished zeros in ambient space.
struct OracleResult {
  int count = 0;       // merged distinct solutions (meaningful when !degenerate_family)
  long f_count = 0;    // verified critical points of (x, xi1, xi2) -> <x, f(xi1)-f(xi2)>
  bool degenerate_family = false;
  std::vector<std::pair<Vec, Vec>> representatives; // canonical endpoint pairs
  std::vector<double> lengths;
};

// Supported for intrinsic dimension 1 and 2 only (the grid has density^(2n) cells).
OracleResult brute_force_oracle(const Immersion& imm, int grid_density);

} // namespace dn
