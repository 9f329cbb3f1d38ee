#pragma once

#include "dn/geometry.hpp"

namespace dn {

// Identification between 1-jets over the sphere and co-oriented contact elements
// of Euclidean space: (u, q, p) with |q| = 1 and p ⊥ q corresponds to the
// hyperplane element at u·q + p co-oriented by q.
struct ContactElement {
  Vec base;     // point in R^{n+1}
  Vec conormal; // unit vector
};

struct J1Point {
  double u = 0; // function value = <x, conormal>
  Vec q;        // sphere point = conormal
  Vec p;        // covector part, orthogonal to q
};

ContactElement j1_sphere_chart(double u, const Vec& q, const Vec& p);
J1Point j1_sphere_chart_inverse(const Vec& x, const Vec& conormal);

} // namespace dn
