#include "dn/j1_chart.hpp"

#include <cmath>

#include "dn/error.hpp"

namespace dn {

namespace {

void check_unit(const Vec& q) {
  if (std::abs(q.norm() - 1.0) > 1e-12)
    fail(ErrorCode::InvalidCotangentVector, "conormal must be a unit vector");
}

} // namespace

ContactElement j1_sphere_chart(double u, const Vec& q, const Vec& p) {
  if (q.size() != p.size())
    fail(ErrorCode::InvalidArgument, "q and p must have the same dimension");
  check_unit(q);
  if (std::abs(p.dot(q)) > 1e-12)
    fail(ErrorCode::InvalidCotangentVector, "covector part must be orthogonal to q");
  ContactElement el;
  el.base = u * q + p;
  el.conormal = q;
  return el;
}

J1Point j1_sphere_chart_inverse(const Vec& x, const Vec& conormal) {
  if (x.size() != conormal.size())
    fail(ErrorCode::InvalidArgument, "point and conormal must have the same dimension");
  check_unit(conormal);
  J1Point pt;
  pt.u = x.dot(conormal);
  pt.q = conormal;
  pt.p = x - pt.u * conormal;
  return pt;
}

} // namespace dn
