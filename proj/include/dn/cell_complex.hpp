#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dn/gf2.hpp"
#include "dn/smith.hpp"

namespace dn {

// Finite cell complex with GF(2) boundary maps and optional integer lifts.
// boundaries_z2[d-1] is the map C_d -> C_{d-1}, shape cell_counts[d-1] x cell_counts[d].
struct CellComplex {
  int top_dim = 0;
  std::vector<int> cell_counts;
  std::vector<Gf2Matrix> boundaries_z2;
  std::vector<IntMatrix> boundaries_z; // empty when absent
  std::vector<std::vector<std::string>> labels;
  std::string name;

  const Gf2Matrix& boundary_z2(int d) const { return boundaries_z2[d - 1]; }
  const IntMatrix& boundary_z(int d) const { return boundaries_z[d - 1]; }
  bool has_integer_boundaries() const { return !boundaries_z.empty(); }
  int total_cells() const;
};

// Builders (minimal CW structures).
CellComplex point_complex();
CellComplex interval_complex();
CellComplex sphere_complex(int n);
CellComplex torus_complex(int n);      // n-fold product of sphere_complex(1)
CellComplex surface_complex(int g);    // closed orientable genus-g surface
CellComplex projective_complex(int n); // real projective space, one cell per dimension

// Parses "point", "interval", "sphere(2)", "torus(3)", "surface(1)", "projective(2)",
// and "product(A,B)" recursively.
CellComplex parse_named_complex(const std::string& text);

// Throws Error(InvalidComplex) when shapes are inconsistent.
void validate_complex(const CellComplex& c);

// True when every consecutive GF(2) (and integer, if present) boundary pair composes to zero.
bool verify_boundary_squared(const CellComplex& c);

std::vector<int> betti_z2(const CellComplex& c);
int betti_z2_total(const CellComplex& c);

// Betti numbers over Q; requires integer boundaries.
std::vector<int> betti_rational(const CellComplex& c);

// torsion[d] = number of invariant factors > 1 of the (d+1)-boundary; requires integer boundaries.
std::vector<int> torsion_generators(const CellComplex& c);

// Product complex; integer boundaries are carried through (with the usual sign) when both inputs
// have them.
CellComplex product_complex(const CellComplex& a, const CellComplex& b);

// Cell structure on (S^N x M x M) / (x,y,z) ~ (-x,z,y): one generator s^k x a_i x a_j per
// 0 <= k <= N and ordered cell pair (a_i, a_j), with
//   d(s^k x a_i x a_j) = s^k x d(a_i x a_j) + s^(k-1) x (a_i x a_j + a_j x a_i),  s^(-1) = 0.
CellComplex involution_quotient_complex(const CellComplex& m, int N);

// Homology dimensions of the involution quotient graded by the sphere-cell index k, valid only
// when every boundary of m vanishes over GF(2) (the differential then preserves the grading).
std::vector<int> sphere_graded_quotient_homology(const CellComplex& m, int N);

nlohmann::ordered_json complex_to_json(const CellComplex& c);
CellComplex complex_from_json(const nlohmann::ordered_json& j);

} // namespace dn
