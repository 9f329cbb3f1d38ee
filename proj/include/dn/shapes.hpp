#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dn/geometry.hpp"

namespace dn {

struct PerturbationSpec {
  double amplitude = 0.0;
  int frequency = 1;
  uint64_t seed = 0;

  bool operator==(const PerturbationSpec&) const = default;
};

struct ShapeSpec {
  enum class Kind { Ellipsoid, TorusOfRevolution, CliffordTorus, TubeAroundSphere, RoundSphere };
  Kind kind = Kind::Ellipsoid;
  std::vector<double> semiaxes;                // ellipsoid
  double big_radius = 0.0, small_radius = 0.0; // torus of revolution
  double r1 = 0.0, r2 = 0.0;                   // flat torus in R^4
  int n = 0, k = 0;                            // tube / sphere dimensions
  double radius = 0.0;                         // tube fiber radius / sphere radius
  std::optional<PerturbationSpec> perturbation;
  bool flip = false;

  bool operator==(const ShapeSpec&) const = default;
};

// Grammar: "ellipsoid(1,1.3,1.7)", "torusrev(R=1,r=0.5)", "clifford(r1=1,r2=1)",
// "tube(n=1,k=1,r=0.5)", "sphere(n=2,r=1)", with optional "+perturb(a=...,w=...,seed=...)"
// and "+flip" suffixes. Arguments may be positional or keyed.
ShapeSpec parse_shape(const std::string& text);
std::string shape_to_string(const ShapeSpec& spec);

Immersion build_shape(const ShapeSpec& spec);

// Unit-sphere atlas shared by the shape builders: dimension 1 is one periodic chart
// t -> (cos t, sin t); dimension >= 2 is two stereographic caps with box domains
// [-1.5, 1.5]^d and the pole coordinate last, glued by u -> u/|u|^2.
struct SphereChart {
  Vec lo, hi;
  std::vector<uint8_t> periodic;
  std::function<Jet(const Vec&)> jet;
};
std::vector<SphereChart> sphere_atlas(int d);
Vec sphere_chart_transition(int d, const Vec& u);

// Fixed trigonometric polynomial on an m-dimensional chart box, frequencies 1..omega
// per coordinate. Coefficients are drawn uniformly from [-1,1] by the seed, then damped
// geometrically in the harmonic number so the lowest harmonic dominates: restricted to
// a critical circle this leaves a single leading harmonic, which splits the circle into
// the minimal pair of critical points instead of a frequency-dependent zoo.
struct TrigPoly {
  int m = 0;
  int omega = 0;
  double scale = 0.0;
  std::vector<double> cos_coeff, sin_coeff; // index i*omega + (k-1)

  double value(const Vec& x) const;
  void eval(const Vec& x, double& p, Vec& grad, Vec& hess_diag) const;
};
TrigPoly make_trig_poly(int m, int omega, uint64_t seed);

} // namespace dn
