#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace dn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Two-jet of a parametric map at one chart point.
struct Jet {
  Vec point;                // ambient, size m
  Mat jacobian;             // m x n
  std::vector<Mat> hessian; // one n x n block per ambient coordinate
};

// Unit co-orientation field with derivatives (codimension-1 shapes).
struct NormalJet {
  Vec normal;
  Mat d_normal;
  std::vector<Mat> d2_normal;
};

struct Chart {
  Vec lo, hi;                    // seeding/grid box
  std::vector<uint8_t> periodic; // per coordinate; periodic coordinates have period 2*pi
  std::function<Jet(const Vec&)> jet;
  std::function<NormalJet(const Vec&)> normal_jet; // set when an analytic normal field exists
  std::function<Vec(const Vec&)> unit_normal;      // 0-jet fallback (perturbed charts)
  // Equivalent representation of the same ambient point, possibly in another chart.
  // Identity near the chart center; set on atlases whose charts prefer a partner
  // representation far from the center (e.g. cap pairs). Iterative consumers call it
  // to keep wandering iterates in well-conditioned coordinates.
  std::function<std::pair<int, Vec>(const Vec&)> rehome;
};

// Parametric immersion given by an atlas of charts with analytic two-jets. Charts of
// multi-chart atlases overlap; consumers deduplicate in ambient space.
class Immersion {
public:
  int intrinsic_dim = 0;
  int ambient_dim = 0;
  bool co_oriented = false; // codimension 1 with a consistent unit normal field
  bool flipped = false;     // global co-orientation flip
  std::string name;
  std::vector<Chart> charts;

  int codim() const { return ambient_dim - intrinsic_dim; }

  // Wraps periodic coordinates into [lo, lo + 2*pi).
  Vec wrap(int chart, Vec xi) const;

  // True when every non-periodic coordinate lies in the chart's evaluable region
  // (the seeding box inflated by a factor of two about its center).
  bool in_eval_domain(int chart, const Vec& xi) const;

  // Evaluates the two-jet; throws Error(OutOfDomain) outside the evaluable region.
  Jet jet_at(int chart, const Vec& xi) const;

  // Unit co-orientation vector; throws Error(Unsupported) unless codim == 1.
  Vec co_orientation(int chart, const Vec& xi) const;

  // Co-orientation with derivatives; throws Error(Unsupported) when no analytic field exists.
  NormalJet co_orientation_jet(int chart, const Vec& xi) const;

  // Orthonormal basis of the normal space, m x codim.
  Mat normal_frame(int chart, const Vec& xi) const;

  // Max pairwise ambient distance over a fixed coarse sample; cached.
  double diameter_estimate() const;

  // Rank check of the jacobian over a sample grid; throws on rank deficiency.
  void validate_rank(int samples_per_axis = 5) const;

  Immersion with_flipped_co_orientation() const {
    Immersion copy = *this;
    copy.flipped = !flipped;
    return copy;
  }

private:
  mutable double cached_diameter_ = -1.0;
};

// Exact two-jet of v/|v| from the two-jet of a nowhere-zero field v.
NormalJet normalize_jet(const Vec& v, const Mat& dv, const std::vector<Mat>& d2v);

// Generalized cross product of the columns of an m x (m-1) matrix (cofactor expansion).
Vec cofactor_normal(const Mat& j);

} // namespace dn
