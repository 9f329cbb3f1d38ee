#include "dn/shapes.hpp"

#include <charconv>
#include <cmath>
#include <random>

#include "dn/error.hpp"

namespace dn {

namespace {

Jet circle_jet(double t) {
  double c = std::cos(t), s = std::sin(t);
  Jet j;
  j.point = Vec(2);
  j.point << c, s;
  j.jacobian = Mat(2, 1);
  j.jacobian << -s, c;
  j.hessian = {Mat::Constant(1, 1, -c), Mat::Constant(1, 1, -s)};
  return j;
}

// Stereographic cap: u in R^d -> (2u, sign*(1-|u|^2)) / (1+|u|^2).
Jet cap_jet(int d, double sign, const Vec& u) {
  double s = u.squaredNorm();
  double w = 1.0 + s;
  double w2 = w * w, w3 = w2 * w;
  Jet j;
  j.point = Vec(d + 1);
  j.point.head(d) = 2.0 * u / w;
  j.point[d] = sign * (1.0 - s) / w;
  j.jacobian = Mat::Zero(d + 1, d);
  for (int a = 0; a < d; ++a) {
    for (int i = 0; i < d; ++i) j.jacobian(i, a) = -4.0 * u[i] * u[a] / w2;
    j.jacobian(a, a) += 2.0 / w;
    j.jacobian(d, a) = -sign * 4.0 * u[a] / w2;
  }
  j.hessian.assign(d + 1, Mat::Zero(d, d));
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) {
      for (int i = 0; i < d; ++i) j.hessian[i](a, b) = 16.0 * u[i] * u[a] * u[b] / w3;
      j.hessian[a](a, b) += -4.0 * u[b] / w2;
      j.hessian[b](a, b) += -4.0 * u[a] / w2;
      if (a == b)
        for (int i = 0; i < d; ++i) j.hessian[i](a, b) += -4.0 * u[i] / w2;
      j.hessian[d](a, b) = sign * (16.0 * u[a] * u[b] / w3 - (a == b ? 4.0 / w2 : 0.0));
    }
  }
  return j;
}

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kCapBox = 1.5;

} // namespace

std::vector<SphereChart> sphere_atlas(int d) {
  if (d < 1) fail(ErrorCode::InvalidArgument, "sphere atlas needs dimension >= 1");
  std::vector<SphereChart> charts;
  if (d == 1) {
    SphereChart c;
    c.lo = Vec::Zero(1);
    c.hi = Vec::Constant(1, kTwoPi);
    c.periodic = {1};
    c.jet = [](const Vec& t) { return circle_jet(t[0]); };
    charts.push_back(std::move(c));
    return charts;
  }
  for (double sign : {1.0, -1.0}) {
    SphereChart c;
    c.lo = Vec::Constant(d, -kCapBox);
    c.hi = Vec::Constant(d, kCapBox);
    c.periodic.assign(d, 0);
    c.jet = [d, sign](const Vec& u) { return cap_jet(d, sign, u); };
    charts.push_back(std::move(c));
  }
  return charts;
}

Vec sphere_chart_transition(int d, const Vec& u) {
  if (d == 1) return u;
  double s = u.squaredNorm();
  if (s <= 0) fail(ErrorCode::OutOfDomain, "cap transition undefined at the pole");
  return u / s;
}

double TrigPoly::value(const Vec& x) const {
  double p = 0;
  for (int i = 0; i < m; ++i)
    for (int k = 1; k <= omega; ++k) {
      double a = cos_coeff[std::size_t(i) * omega + (k - 1)];
      double b = sin_coeff[std::size_t(i) * omega + (k - 1)];
      p += a * std::cos(k * x[i]) + b * std::sin(k * x[i]);
    }
  return scale * p;
}

void TrigPoly::eval(const Vec& x, double& p, Vec& grad, Vec& hess_diag) const {
  p = 0;
  grad = Vec::Zero(m);
  hess_diag = Vec::Zero(m);
  for (int i = 0; i < m; ++i) {
    for (int k = 1; k <= omega; ++k) {
      double a = cos_coeff[std::size_t(i) * omega + (k - 1)];
      double b = sin_coeff[std::size_t(i) * omega + (k - 1)];
      double ck = std::cos(k * x[i]), sk = std::sin(k * x[i]);
      p += a * ck + b * sk;
      grad[i] += k * (-a * sk + b * ck);
      hess_diag[i] += double(k) * k * (-a * ck - b * sk);
    }
  }
  p *= scale;
  grad *= scale;
  hess_diag *= scale;
}

TrigPoly make_trig_poly(int m, int omega, uint64_t seed) {
  if (m < 1 || omega < 1) fail(ErrorCode::InvalidArgument, "trig polynomial needs m >= 1, omega >= 1");
  constexpr double kHarmonicDecay = 0.1;
  TrigPoly p;
  p.m = m;
  p.omega = omega;
  double weight_sum = 0;
  for (int k = 1; k <= omega; ++k) weight_sum += std::pow(kHarmonicDecay, k - 1);
  p.scale = 1.0 / (2.0 * m * weight_sum); // |value| <= 1 whatever the draw
  p.cos_coeff.resize(std::size_t(m) * omega);
  p.sin_coeff.resize(std::size_t(m) * omega);
  std::mt19937_64 rng(seed);
  auto unit = [&rng]() { return 2.0 * ((rng() >> 11) * 0x1.0p-53) - 1.0; };
  for (int i = 0; i < m; ++i)
    for (int k = 1; k <= omega; ++k) {
      double damp = std::pow(kHarmonicDecay, k - 1);
      p.cos_coeff[std::size_t(i) * omega + (k - 1)] = damp * unit();
      p.sin_coeff[std::size_t(i) * omega + (k - 1)] = damp * unit();
    }
  return p;
}

namespace {

Immersion build_ellipsoid(const std::vector<double>& axes, const std::string& name) {
  if (axes.size() < 2) fail(ErrorCode::InvalidArgument, "ellipsoid needs at least two semiaxes");
  for (double a : axes)
    if (!(a > 0)) fail(ErrorCode::InvalidArgument, "ellipsoid semiaxes must be positive");
  int m = int(axes.size());
  int n = m - 1;
  Vec diag(m), inv_diag(m);
  for (int i = 0; i < m; ++i) {
    diag[i] = axes[i];
    inv_diag[i] = 1.0 / axes[i];
  }
  Immersion imm;
  imm.intrinsic_dim = n;
  imm.ambient_dim = m;
  imm.co_oriented = true;
  imm.name = name;
  for (const SphereChart& sc : sphere_atlas(n)) {
    Chart ch;
    ch.lo = sc.lo;
    ch.hi = sc.hi;
    ch.periodic = sc.periodic;
    auto sphere_jet = sc.jet;
    ch.jet = [sphere_jet, diag, m](const Vec& xi) {
      Jet q = sphere_jet(xi);
      Jet j;
      j.point = diag.asDiagonal() * q.point;
      j.jacobian = diag.asDiagonal() * q.jacobian;
      j.hessian.resize(m);
      for (int i = 0; i < m; ++i) j.hessian[i] = diag[i] * q.hessian[i];
      return j;
    };
    ch.normal_jet = [sphere_jet, inv_diag, m](const Vec& xi) {
      Jet q = sphere_jet(xi);
      Vec raw = inv_diag.asDiagonal() * q.point;
      Mat draw = inv_diag.asDiagonal() * q.jacobian;
      std::vector<Mat> d2raw(m);
      for (int i = 0; i < m; ++i) d2raw[i] = inv_diag[i] * q.hessian[i];
      return normalize_jet(raw, draw, d2raw);
    };
    auto nj = ch.normal_jet;
    ch.unit_normal = [nj](const Vec& xi) { return nj(xi).normal; };
    imm.charts.push_back(std::move(ch));
  }
  // The two caps prefer each other's coordinates past the comfort radius: u/|u|^2
  // lands the same ambient point near the partner's center.
  if (imm.charts.size() == 2) {
    for (int c = 0; c < 2; ++c) {
      imm.charts[c].rehome = [c](const Vec& u) -> std::pair<int, Vec> {
        double s = u.squaredNorm();
        if (s <= 2.25) return {c, u};
        return {1 - c, Vec(u / s)};
      };
    }
  }
  return imm;
}

Immersion build_torus_of_revolution(double R, double r) {
  if (!(R > r && r > 0)) fail(ErrorCode::InvalidArgument, "torus of revolution needs R > r > 0");
  Immersion imm;
  imm.intrinsic_dim = 2;
  imm.ambient_dim = 3;
  imm.co_oriented = true;
  Chart ch;
  ch.lo = Vec::Zero(2);
  ch.hi = Vec::Constant(2, kTwoPi);
  ch.periodic = {1, 1};
  ch.jet = [R, r](const Vec& xi) {
    double ct = std::cos(xi[0]), st = std::sin(xi[0]);
    double cp = std::cos(xi[1]), sp = std::sin(xi[1]);
    double A = R + r * cp;
    Jet j;
    j.point = Vec(3);
    j.point << A * ct, A * st, r * sp;
    j.jacobian = Mat(3, 2);
    j.jacobian << -A * st, -r * sp * ct, A * ct, -r * sp * st, 0.0, r * cp;
    j.hessian.assign(3, Mat(2, 2));
    j.hessian[0] << -A * ct, r * sp * st, r * sp * st, -r * cp * ct;
    j.hessian[1] << -A * st, -r * sp * ct, -r * sp * ct, -r * cp * st;
    j.hessian[2] << 0.0, 0.0, 0.0, -r * sp;
    return j;
  };
  ch.normal_jet = [](const Vec& xi) {
    double ct = std::cos(xi[0]), st = std::sin(xi[0]);
    double cp = std::cos(xi[1]), sp = std::sin(xi[1]);
    NormalJet nj;
    nj.normal = Vec(3);
    nj.normal << cp * ct, cp * st, sp;
    nj.d_normal = Mat(3, 2);
    nj.d_normal << -cp * st, -sp * ct, cp * ct, -sp * st, 0.0, cp;
    nj.d2_normal.assign(3, Mat(2, 2));
    nj.d2_normal[0] << -cp * ct, sp * st, sp * st, -cp * ct;
    nj.d2_normal[1] << -cp * st, -sp * ct, -sp * ct, -cp * st;
    nj.d2_normal[2] << 0.0, 0.0, 0.0, -sp;
    return nj;
  };
  auto nj = ch.normal_jet;
  ch.unit_normal = [nj](const Vec& xi) { return nj(xi).normal; };
  imm.charts.push_back(std::move(ch));
  return imm;
}

Immersion build_clifford_torus(double r1, double r2) {
  if (!(r1 > 0 && r2 > 0)) fail(ErrorCode::InvalidArgument, "flat torus radii must be positive");
  Immersion imm;
  imm.intrinsic_dim = 2;
  imm.ambient_dim = 4;
  imm.co_oriented = false;
  Chart ch;
  ch.lo = Vec::Zero(2);
  ch.hi = Vec::Constant(2, kTwoPi);
  ch.periodic = {1, 1};
  ch.jet = [r1, r2](const Vec& xi) {
    double c1 = std::cos(xi[0]), s1 = std::sin(xi[0]);
    double c2 = std::cos(xi[1]), s2 = std::sin(xi[1]);
    Jet j;
    j.point = Vec(4);
    j.point << r1 * c1, r1 * s1, r2 * c2, r2 * s2;
    j.jacobian = Mat::Zero(4, 2);
    j.jacobian(0, 0) = -r1 * s1;
    j.jacobian(1, 0) = r1 * c1;
    j.jacobian(2, 1) = -r2 * s2;
    j.jacobian(3, 1) = r2 * c2;
    j.hessian.assign(4, Mat::Zero(2, 2));
    j.hessian[0](0, 0) = -r1 * c1;
    j.hessian[1](0, 0) = -r1 * s1;
    j.hessian[2](1, 1) = -r2 * c2;
    j.hessian[3](1, 1) = -r2 * s2;
    return j;
  };
  imm.charts.push_back(std::move(ch));
  return imm;
}

// Tube point with coefficients (alpha, beta): (alpha + beta*w_r) q  ⊕  beta*w_e, where
// w = (w_r, w_e) is the fiber sphere point. The map itself uses (1, rho); its unit normal
// field is the same expression with (0, 1).
Jet tube_combination(const Jet& q, const Jet& w, double alpha, double beta, int n, int k) {
  int m = n + k + 1;
  double wr = w.point[0];
  Jet j;
  j.point = Vec(m);
  j.point.head(n + 1) = (alpha + beta * wr) * q.point;
  j.point.tail(k) = beta * w.point.tail(k);
  j.jacobian = Mat::Zero(m, n + k);
  j.jacobian.topLeftCorner(n + 1, n) = (alpha + beta * wr) * q.jacobian;
  for (int b = 0; b < k; ++b) {
    j.jacobian.col(n + b).head(n + 1) = beta * w.jacobian(0, b) * q.point;
    j.jacobian.col(n + b).tail(k) = beta * w.jacobian.col(b).tail(k);
  }
  j.hessian.assign(m, Mat::Zero(n + k, n + k));
  for (int i = 0; i <= n; ++i) {
    Mat& h = j.hessian[i];
    h.topLeftCorner(n, n) = (alpha + beta * wr) * q.hessian[i];
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < k; ++b) {
        double v = beta * w.jacobian(0, b) * q.jacobian(i, a);
        h(a, n + b) = v;
        h(n + b, a) = v;
      }
    h.bottomRightCorner(k, k) = beta * q.point[i] * w.hessian[0];
  }
  for (int e = 0; e < k; ++e) j.hessian[n + 1 + e].bottomRightCorner(k, k) = beta * w.hessian[e + 1];
  return j;
}

Immersion build_tube(int n, int k, double rho) {
  if (n < 1 || k < 1) fail(ErrorCode::InvalidArgument, "tube needs n >= 1 and k >= 1");
  if (!(rho > 0 && rho < 1)) fail(ErrorCode::InvalidArgument, "tube radius must lie in (0,1)");
  Immersion imm;
  imm.intrinsic_dim = n + k;
  imm.ambient_dim = n + k + 1;
  imm.co_oriented = true;
  for (const SphereChart& core : sphere_atlas(n)) {
    for (const SphereChart& fiber : sphere_atlas(k)) {
      Chart ch;
      ch.lo = Vec(n + k);
      ch.hi = Vec(n + k);
      ch.lo.head(n) = core.lo;
      ch.lo.tail(k) = fiber.lo;
      ch.hi.head(n) = core.hi;
      ch.hi.tail(k) = fiber.hi;
      ch.periodic = core.periodic;
      ch.periodic.insert(ch.periodic.end(), fiber.periodic.begin(), fiber.periodic.end());
      auto core_jet = core.jet;
      auto fiber_jet = fiber.jet;
      ch.jet = [core_jet, fiber_jet, rho, n, k](const Vec& xi) {
        Jet q = core_jet(xi.head(n));
        Jet w = fiber_jet(xi.tail(k));
        return tube_combination(q, w, 1.0, rho, n, k);
      };
      ch.normal_jet = [core_jet, fiber_jet, n, k](const Vec& xi) {
        Jet q = core_jet(xi.head(n));
        Jet w = fiber_jet(xi.tail(k));
        Jet nu = tube_combination(q, w, 0.0, 1.0, n, k);
        NormalJet nj;
        nj.normal = std::move(nu.point);
        nj.d_normal = std::move(nu.jacobian);
        nj.d2_normal = std::move(nu.hessian);
        return nj;
      };
      auto nj = ch.normal_jet;
      ch.unit_normal = [nj](const Vec& xi) { return nj(xi).normal; };
      imm.charts.push_back(std::move(ch));
    }
  }
  return imm;
}

Chart perturb_chart(const Chart& base, double amplitude, const TrigPoly& poly, int m, int n) {
  Chart out;
  out.lo = base.lo;
  out.hi = base.hi;
  out.periodic = base.periodic;
  out.rehome = base.rehome; // a parameter-space identification, independent of the embedding
  auto base_jet = base.jet;
  auto base_nj = base.normal_jet;
  out.jet = [base_jet, base_nj, poly, amplitude, m, n](const Vec& xi) {
    Jet j = base_jet(xi);
    NormalJet nj = base_nj(xi);
    double p;
    Vec s_d, ph;
    poly.eval(xi, p, s_d, ph); // the displacement profile lives on the chart box
    Mat s_dd = Mat::Zero(n, n);
    s_dd.diagonal() = ph;
    Jet out_jet;
    out_jet.point = j.point + amplitude * p * nj.normal;
    out_jet.jacobian = j.jacobian + amplitude * (nj.normal * s_d.transpose() + p * nj.d_normal);
    out_jet.hessian.resize(m);
    for (int i = 0; i < m; ++i) {
      Mat h = j.hessian[i] + amplitude * (s_dd * nj.normal[i] + p * nj.d2_normal[i]);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          h(a, b) += amplitude * (s_d[a] * nj.d_normal(i, b) + s_d[b] * nj.d_normal(i, a));
      out_jet.hessian[i] = std::move(h);
    }
    return out_jet;
  };
  auto pert_jet = out.jet;
  out.unit_normal = [pert_jet, base_nj](const Vec& xi) {
    Vec raw = cofactor_normal(pert_jet(xi).jacobian);
    double len = raw.norm();
    if (len <= 0) fail(ErrorCode::DegeneratePoint, "degenerate tangent space");
    Vec ref = base_nj(xi).normal;
    return Vec((raw.dot(ref) >= 0 ? 1.0 : -1.0) * raw / len);
  };
  return out;
}

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Peak of |P(xi)| * rho(S(xi)) over a sample grid of the unperturbed atlas, S being
// the shape operator. Displacing by a*P*nu keeps the tangent map injective wherever
// a*|P|*rho(S) < 1, so this caps the admissible amplitude.
double curvature_load(const Immersion& base, const TrigPoly& poly, int samples_per_axis) {
  int n = base.intrinsic_dim;
  double worst = 0;
  for (const Chart& ch : base.charts) {
    int total = 1;
    for (int i = 0; i < n; ++i) total *= samples_per_axis;
    for (int t = 0; t < total; ++t) {
      Vec xi(n);
      int rem = t;
      for (int i = 0; i < n; ++i) {
        int idx = rem % samples_per_axis;
        rem /= samples_per_axis;
        xi[i] = ch.lo[i] + (ch.hi[i] - ch.lo[i]) * (idx + 0.5) / samples_per_axis;
      }
      Jet j = ch.jet(xi);
      NormalJet nj = ch.normal_jet(xi);
      Mat metric = j.jacobian.transpose() * j.jacobian;
      Mat second = -j.jacobian.transpose() * nj.d_normal;
      second = 0.5 * (second + second.transpose());
      Eigen::GeneralizedSelfAdjointEigenSolver<Mat> eig(second, metric);
      double radius = eig.eigenvalues().cwiseAbs().maxCoeff();
      worst = std::max(worst, std::abs(poly.value(xi)) * radius);
    }
  }
  return worst;
}

void validate_spec(const ShapeSpec& spec) {
  switch (spec.kind) {
    case ShapeSpec::Kind::Ellipsoid:
      if (spec.semiaxes.size() < 2)
        fail(ErrorCode::InvalidArgument, "ellipsoid needs at least two semiaxes");
      for (double a : spec.semiaxes)
        if (!(a > 0)) fail(ErrorCode::InvalidArgument, "ellipsoid semiaxes must be positive");
      break;
    case ShapeSpec::Kind::RoundSphere:
      if (spec.n < 1) fail(ErrorCode::InvalidArgument, "sphere needs n >= 1");
      if (!(spec.radius > 0)) fail(ErrorCode::InvalidArgument, "sphere radius must be positive");
      break;
    case ShapeSpec::Kind::TorusOfRevolution:
      if (!(spec.big_radius > spec.small_radius && spec.small_radius > 0))
        fail(ErrorCode::InvalidArgument, "torus of revolution needs R > r > 0");
      break;
    case ShapeSpec::Kind::CliffordTorus:
      if (!(spec.r1 > 0 && spec.r2 > 0))
        fail(ErrorCode::InvalidArgument, "flat torus radii must be positive");
      break;
    case ShapeSpec::Kind::TubeAroundSphere:
      if (spec.n < 1 || spec.k < 1) fail(ErrorCode::InvalidArgument, "tube needs n >= 1 and k >= 1");
      if (!(spec.radius > 0 && spec.radius < 1))
        fail(ErrorCode::InvalidArgument, "tube radius must lie in (0,1)");
      break;
  }
  if (spec.perturbation) {
    if (spec.perturbation->amplitude < 0)
      fail(ErrorCode::InvalidArgument, "perturbation amplitude must be >= 0");
    if (spec.perturbation->frequency < 1)
      fail(ErrorCode::InvalidArgument, "perturbation frequency must be >= 1");
  }
}

} // namespace

Immersion build_shape(const ShapeSpec& spec) {
  validate_spec(spec);
  Immersion imm;
  switch (spec.kind) {
    case ShapeSpec::Kind::Ellipsoid:
      imm = build_ellipsoid(spec.semiaxes, "");
      break;
    case ShapeSpec::Kind::RoundSphere:
      imm = build_ellipsoid(std::vector<double>(std::size_t(spec.n) + 1, spec.radius), "");
      break;
    case ShapeSpec::Kind::TorusOfRevolution:
      imm = build_torus_of_revolution(spec.big_radius, spec.small_radius);
      break;
    case ShapeSpec::Kind::CliffordTorus:
      imm = build_clifford_torus(spec.r1, spec.r2);
      break;
    case ShapeSpec::Kind::TubeAroundSphere:
      imm = build_tube(spec.n, spec.k, spec.radius);
      break;
  }
  if (spec.perturbation) {
    const PerturbationSpec& ps = *spec.perturbation;
    if (imm.codim() != 1) fail(ErrorCode::Unsupported, "perturbation needs a codimension-1 shape");
    for (const Chart& ch : imm.charts)
      if (!ch.normal_jet) fail(ErrorCode::Unsupported, "perturbation needs analytic normal jets");
    if (imm.charts.size() != 1)
      fail(ErrorCode::Unsupported,
           "perturbation profile is defined on the chart box, so the atlas must be a "
           "single global chart");
    TrigPoly poly = make_trig_poly(imm.intrinsic_dim, ps.frequency, ps.seed);
    if (ps.amplitude > 0) {
      int samples = imm.intrinsic_dim <= 2 ? 16 : (imm.intrinsic_dim == 3 ? 8 : 6);
      double load = ps.amplitude * curvature_load(imm, poly, samples);
      if (load >= 1.0)
        fail(ErrorCode::AmplitudeTooLarge,
             "amplitude " + format_double(ps.amplitude) +
                 " cannot keep the map an immersion: a*|P|*curvature peaks at " +
                 format_double(load) + ", needs < 1");
    }
    std::vector<Chart> perturbed;
    perturbed.reserve(imm.charts.size());
    for (const Chart& ch : imm.charts)
      perturbed.push_back(perturb_chart(ch, ps.amplitude, poly, imm.ambient_dim, imm.intrinsic_dim));
    imm.charts = std::move(perturbed);
  }
  imm.flipped = spec.flip;
  imm.name = shape_to_string(spec);
  imm.validate_rank();
  return imm;
}

namespace {

struct ArgList {
  std::vector<std::pair<std::string, double>> items; // key may be empty (positional)

  double get(std::size_t pos, const std::string& key) const {
    for (const auto& [k, v] : items)
      if (k == key) return v;
    if (pos < items.size() && items[pos].first.empty()) return items[pos].second;
    fail(ErrorCode::InvalidArgument, "missing shape argument '" + key + "'");
  }
  bool has(std::size_t pos, const std::string& key) const {
    for (const auto& [k, v] : items)
      if (k == key) return true;
    return pos < items.size() && items[pos].first.empty();
  }
};

double parse_number(const std::string& s) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used]))) ++used;
    if (used != s.size()) fail(ErrorCode::InvalidArgument, "bad number '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    fail(ErrorCode::InvalidArgument, "bad number '" + s + "'");
  }
}

std::string strip(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

// "name(arg,arg,...)" -> name + args; "name" alone gives empty args.
void split_call(const std::string& text, std::string& name, ArgList& args) {
  std::string t = strip(text);
  std::size_t open = t.find('(');
  if (open == std::string::npos) {
    name = t;
    return;
  }
  if (t.back() != ')') fail(ErrorCode::InvalidArgument, "malformed shape term '" + text + "'");
  name = strip(t.substr(0, open));
  std::string inner = t.substr(open + 1, t.size() - open - 2);
  std::size_t start = 0;
  while (start <= inner.size() && !inner.empty()) {
    std::size_t comma = inner.find(',', start);
    std::string piece = strip(inner.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (!piece.empty()) {
      std::size_t eq = piece.find('=');
      if (eq == std::string::npos)
        args.items.emplace_back("", parse_number(piece));
      else
        args.items.emplace_back(strip(piece.substr(0, eq)), parse_number(strip(piece.substr(eq + 1))));
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
}

} // namespace

ShapeSpec parse_shape(const std::string& text) {
  // Split into '+'-separated terms: base shape, then modifiers.
  std::vector<std::string> terms;
  int depth = 0;
  std::string cur;
  for (char c : text) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == '+' && depth == 0) {
      terms.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  terms.push_back(cur);
  if (terms.empty() || strip(terms[0]).empty()) fail(ErrorCode::InvalidArgument, "empty shape string");

  std::string name;
  ArgList args;
  split_call(terms[0], name, args);
  ShapeSpec spec;
  if (name == "ellipsoid") {
    spec.kind = ShapeSpec::Kind::Ellipsoid;
    for (const auto& [k, v] : args.items) {
      if (!k.empty()) fail(ErrorCode::InvalidArgument, "ellipsoid takes positional semiaxes");
      spec.semiaxes.push_back(v);
    }
  } else if (name == "torusrev") {
    spec.kind = ShapeSpec::Kind::TorusOfRevolution;
    spec.big_radius = args.get(0, "R");
    spec.small_radius = args.get(1, "r");
  } else if (name == "clifford") {
    spec.kind = ShapeSpec::Kind::CliffordTorus;
    spec.r1 = args.get(0, "r1");
    spec.r2 = args.get(1, "r2");
  } else if (name == "tube") {
    spec.kind = ShapeSpec::Kind::TubeAroundSphere;
    spec.n = int(args.get(0, "n"));
    spec.k = int(args.get(1, "k"));
    spec.radius = args.get(2, "r");
  } else if (name == "sphere") {
    spec.kind = ShapeSpec::Kind::RoundSphere;
    spec.n = int(args.get(0, "n"));
    spec.radius = args.get(1, "r");
  } else {
    fail(ErrorCode::InvalidArgument, "unknown shape '" + name + "'");
  }

  for (std::size_t t = 1; t < terms.size(); ++t) {
    std::string mod_name;
    ArgList mod_args;
    split_call(terms[t], mod_name, mod_args);
    if (mod_name == "flip") {
      spec.flip = true;
    } else if (mod_name == "perturb") {
      PerturbationSpec ps;
      ps.amplitude = mod_args.get(0, "a");
      ps.frequency = int(mod_args.get(1, "w"));
      double seed = mod_args.get(2, "seed");
      if (seed < 0 || seed != std::floor(seed))
        fail(ErrorCode::InvalidArgument, "perturbation seed must be a nonnegative integer");
      ps.seed = uint64_t(seed);
      spec.perturbation = ps;
    } else {
      fail(ErrorCode::InvalidArgument, "unknown shape modifier '" + mod_name + "'");
    }
  }
  validate_spec(spec);
  return spec;
}

std::string shape_to_string(const ShapeSpec& spec) {
  std::string s;
  switch (spec.kind) {
    case ShapeSpec::Kind::Ellipsoid: {
      s = "ellipsoid(";
      for (std::size_t i = 0; i < spec.semiaxes.size(); ++i) {
        if (i) s += ",";
        s += format_double(spec.semiaxes[i]);
      }
      s += ")";
      break;
    }
    case ShapeSpec::Kind::TorusOfRevolution:
      s = "torusrev(R=" + format_double(spec.big_radius) + ",r=" + format_double(spec.small_radius) + ")";
      break;
    case ShapeSpec::Kind::CliffordTorus:
      s = "clifford(r1=" + format_double(spec.r1) + ",r2=" + format_double(spec.r2) + ")";
      break;
    case ShapeSpec::Kind::TubeAroundSphere:
      s = "tube(n=" + std::to_string(spec.n) + ",k=" + std::to_string(spec.k) +
          ",r=" + format_double(spec.radius) + ")";
      break;
    case ShapeSpec::Kind::RoundSphere:
      s = "sphere(n=" + std::to_string(spec.n) + ",r=" + format_double(spec.radius) + ")";
      break;
  }
  if (spec.perturbation) {
    s += "+perturb(a=" + format_double(spec.perturbation->amplitude) +
         ",w=" + std::to_string(spec.perturbation->frequency) +
         ",seed=" + std::to_string(spec.perturbation->seed) + ")";
  }
  if (spec.flip) s += "+flip";
  return s;
}

} // namespace dn
