#include "dn/geometry.hpp"

#include <cmath>

#include "dn/error.hpp"

namespace dn {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

Vec Immersion::wrap(int chart, Vec xi) const {
  const Chart& ch = charts.at(chart);
  for (int i = 0; i < xi.size(); ++i) {
    if (!ch.periodic[i]) continue;
    double lo = ch.lo[i];
    double t = std::fmod(xi[i] - lo, kTwoPi);
    if (t < 0) t += kTwoPi;
    xi[i] = lo + t;
  }
  return xi;
}

bool Immersion::in_eval_domain(int chart, const Vec& xi) const {
  const Chart& ch = charts.at(chart);
  for (int i = 0; i < xi.size(); ++i) {
    if (ch.periodic[i]) continue;
    double half = 0.5 * (ch.hi[i] - ch.lo[i]);
    double center = 0.5 * (ch.hi[i] + ch.lo[i]);
    if (std::abs(xi[i] - center) > 2.0 * half) return false;
  }
  return true;
}

Jet Immersion::jet_at(int chart, const Vec& xi) const {
  const Chart& ch = charts.at(chart);
  if (xi.size() != ch.lo.size()) fail(ErrorCode::InvalidArgument, "chart point has wrong dimension");
  if (!in_eval_domain(chart, xi)) fail(ErrorCode::OutOfDomain, "chart point outside evaluable region");
  return ch.jet(wrap(chart, xi));
}

Vec Immersion::co_orientation(int chart, const Vec& xi) const {
  if (codim() != 1) fail(ErrorCode::Unsupported, "co-orientation needs codimension 1");
  const Chart& ch = charts.at(chart);
  if (!in_eval_domain(chart, xi)) fail(ErrorCode::OutOfDomain, "chart point outside evaluable region");
  Vec nu;
  Vec w = wrap(chart, xi);
  if (ch.unit_normal) {
    nu = ch.unit_normal(w);
  } else if (ch.normal_jet) {
    nu = ch.normal_jet(w).normal;
  } else {
    fail(ErrorCode::Unsupported, "chart has no normal field");
  }
  return flipped ? Vec(-nu) : nu;
}

NormalJet Immersion::co_orientation_jet(int chart, const Vec& xi) const {
  if (codim() != 1) fail(ErrorCode::Unsupported, "co-orientation needs codimension 1");
  const Chart& ch = charts.at(chart);
  if (!ch.normal_jet) fail(ErrorCode::Unsupported, "chart has no analytic normal field");
  if (!in_eval_domain(chart, xi)) fail(ErrorCode::OutOfDomain, "chart point outside evaluable region");
  NormalJet nj = ch.normal_jet(wrap(chart, xi));
  if (flipped) {
    nj.normal = -nj.normal;
    nj.d_normal = -nj.d_normal;
    for (Mat& h : nj.d2_normal) h = -h;
  }
  return nj;
}

Mat Immersion::normal_frame(int chart, const Vec& xi) const {
  int k = codim();
  if (k < 1) fail(ErrorCode::Unsupported, "normal frame needs positive codimension");
  if (k == 1) {
    Vec nu = co_orientation(chart, xi);
    Mat frame(ambient_dim, 1);
    frame.col(0) = nu;
    return frame;
  }
  Jet j = jet_at(chart, xi);
  Eigen::JacobiSVD<Mat> svd(j.jacobian, Eigen::ComputeFullU);
  return svd.matrixU().rightCols(k);
}

double Immersion::diameter_estimate() const {
  if (cached_diameter_ >= 0) return cached_diameter_;
  std::vector<Vec> pts;
  for (int c = 0; c < int(charts.size()); ++c) {
    const Chart& ch = charts[c];
    int n = int(ch.lo.size());
    int per_axis = n <= 2 ? 12 : 6;
    int total = 1;
    for (int i = 0; i < n; ++i) total *= per_axis;
    for (int t = 0; t < total; ++t) {
      Vec xi(n);
      int rem = t;
      for (int i = 0; i < n; ++i) {
        int idx = rem % per_axis;
        rem /= per_axis;
        double span = ch.hi[i] - ch.lo[i];
        xi[i] = ch.periodic[i] ? ch.lo[i] + span * idx / per_axis
                               : ch.lo[i] + span * (idx + 0.5) / per_axis;
      }
      pts.push_back(ch.jet(wrap(c, xi)).point);
    }
  }
  double best = 0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) best = std::max(best, (pts[i] - pts[j]).norm());
  cached_diameter_ = best;
  return best;
}

void Immersion::validate_rank(int samples_per_axis) const {
  for (int c = 0; c < int(charts.size()); ++c) {
    const Chart& ch = charts[c];
    int n = int(ch.lo.size());
    int total = 1;
    for (int i = 0; i < n; ++i) total *= samples_per_axis;
    for (int t = 0; t < total; ++t) {
      Vec xi(n);
      int rem = t;
      for (int i = 0; i < n; ++i) {
        int idx = rem % samples_per_axis;
        rem /= samples_per_axis;
        double span = ch.hi[i] - ch.lo[i];
        xi[i] = ch.lo[i] + span * (idx + 0.5) / samples_per_axis;
      }
      Jet j = ch.jet(wrap(c, xi));
      Eigen::JacobiSVD<Mat> svd(j.jacobian);
      const auto& sv = svd.singularValues();
      if (sv.size() < intrinsic_dim || sv[intrinsic_dim - 1] <= 1e-9 * sv[0])
        fail(ErrorCode::AmplitudeTooLarge,
             "immersion is rank-deficient at a sample point of chart " + std::to_string(c));
    }
  }
}

NormalJet normalize_jet(const Vec& v, const Mat& dv, const std::vector<Mat>& d2v) {
  int n = int(dv.cols());
  double rho = v.norm();
  if (rho <= 0) fail(ErrorCode::DegeneratePoint, "cannot normalize a zero vector");
  Vec rho_d(n);
  for (int a = 0; a < n; ++a) rho_d[a] = v.dot(dv.col(a)) / rho;
  Mat rho_dd(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      double vab = 0;
      for (int i = 0; i < v.size(); ++i) vab += v[i] * d2v[i](a, b);
      rho_dd(a, b) = (dv.col(a).dot(dv.col(b)) + vab - rho_d[a] * rho_d[b]) / rho;
    }
  NormalJet out;
  out.normal = v / rho;
  out.d_normal.resize(v.size(), n);
  for (int a = 0; a < n; ++a) out.d_normal.col(a) = dv.col(a) / rho - v * (rho_d[a] / (rho * rho));
  out.d2_normal.assign(v.size(), Mat::Zero(n, n));
  double r2 = rho * rho, r3 = r2 * rho;
  for (int i = 0; i < v.size(); ++i)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        out.d2_normal[i](a, b) = d2v[i](a, b) / rho -
                                 (dv(i, a) * rho_d[b] + dv(i, b) * rho_d[a] + v[i] * rho_dd(a, b)) / r2 +
                                 2.0 * v[i] * rho_d[a] * rho_d[b] / r3;
  return out;
}

Vec cofactor_normal(const Mat& j) {
  int m = int(j.rows());
  if (j.cols() != m - 1) fail(ErrorCode::InvalidArgument, "cofactor normal needs an m x (m-1) matrix");
  Vec out(m);
  Mat minor(m - 1, m - 1);
  for (int i = 0; i < m; ++i) {
    int r = 0;
    for (int row = 0; row < m; ++row) {
      if (row == i) continue;
      minor.row(r++) = j.row(row);
    }
    out[i] = ((i % 2) ? -1.0 : 1.0) * minor.determinant();
  }
  return out;
}

} // namespace dn
