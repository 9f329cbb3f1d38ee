#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "dn/error.hpp"
#include "dn/geometry.hpp"
#include "dn/j1_chart.hpp"
#include "dn/shapes.hpp"

using namespace dn;

namespace {

Vec random_xi(const Chart& ch, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Vec xi(ch.lo.size());
  for (int i = 0; i < xi.size(); ++i) xi[i] = ch.lo[i] + (ch.hi[i] - ch.lo[i]) * u01(rng);
  return xi;
}

// max relative error of the analytic jacobian/hessian against central differences
void check_jet_fd(const Immersion& imm, int chart, const Vec& xi, double& jac_err,
                  double& hess_err) {
  const double h = 1e-5;
  Jet j = imm.jet_at(chart, xi);
  int n = int(xi.size());
  for (int a = 0; a < n; ++a) {
    Vec xp = xi, xm = xi;
    xp[a] += h;
    xm[a] -= h;
    Vec fd = (imm.jet_at(chart, xp).point - imm.jet_at(chart, xm).point) / (2 * h);
    double scale = std::max(1.0, j.jacobian.col(a).norm());
    jac_err = std::max(jac_err, (fd - j.jacobian.col(a)).norm() / scale);
  }
  for (int b = 0; b < n; ++b) {
    Vec xp = xi, xm = xi;
    xp[b] += h;
    xm[b] -= h;
    Mat fd = (imm.jet_at(chart, xp).jacobian - imm.jet_at(chart, xm).jacobian) / (2 * h);
    for (int i = 0; i < imm.ambient_dim; ++i)
      for (int a = 0; a < n; ++a) {
        double scale = std::max(1.0, std::abs(j.hessian[i](a, b)));
        hess_err = std::max(hess_err, std::abs(fd(i, a) - j.hessian[i](a, b)) / scale);
      }
  }
}

const char* kShapeTexts[] = {
    "ellipsoid(1,1.3,1.7)",
    "torusrev(R=1,r=0.5)",
    "clifford(r1=1,r2=1)",
    "tube(n=1,k=1,r=0.5)",
    "sphere(n=2,r=1)",
    "tube(n=1,k=1,r=0.5)+perturb(a=0.01,w=3,seed=42)",
    "ellipsoid(1,1.3)+perturb(a=0.01,w=3,seed=7)",
};

} // namespace

TEST_CASE("jets match central differences at 100 random points per shape") {
  for (const char* text : kShapeTexts) {
    CAPTURE(text);
    Immersion imm = build_shape(parse_shape(text));
    std::mt19937_64 rng(2024);
    double jac_err = 0, hess_err = 0;
    for (int t = 0; t < 100; ++t) {
      int c = t % int(imm.charts.size());
      check_jet_fd(imm, c, random_xi(imm.charts[c], rng), jac_err, hess_err);
    }
    CHECK(jac_err < 1e-6);
    CHECK(hess_err < 1e-4);
  }
}

TEST_CASE("analytic normal jets match central differences") {
  for (const char* text : {"ellipsoid(1,1.3,1.7)", "torusrev(R=1,r=0.5)", "tube(n=1,k=1,r=0.5)"}) {
    CAPTURE(text);
    Immersion imm = build_shape(parse_shape(text));
    std::mt19937_64 rng(99);
    const double h = 1e-5;
    double d1_err = 0, d2_err = 0;
    for (int t = 0; t < 40; ++t) {
      int c = t % int(imm.charts.size());
      Vec xi = random_xi(imm.charts[c], rng);
      NormalJet nj = imm.co_orientation_jet(c, xi);
      CHECK(std::abs(nj.normal.norm() - 1.0) < 1e-12);
      for (int a = 0; a < imm.intrinsic_dim; ++a) {
        Vec xp = xi, xm = xi;
        xp[a] += h;
        xm[a] -= h;
        Vec fd = (imm.co_orientation_jet(c, xp).normal - imm.co_orientation_jet(c, xm).normal) /
                 (2 * h);
        d1_err = std::max(d1_err, (fd - nj.d_normal.col(a)).norm());
        Mat fdd = (imm.co_orientation_jet(c, xp).d_normal - imm.co_orientation_jet(c, xm).d_normal) /
                  (2 * h);
        for (int i = 0; i < imm.ambient_dim; ++i)
          for (int b = 0; b < imm.intrinsic_dim; ++b)
            d2_err = std::max(d2_err, std::abs(fdd(i, b) - nj.d2_normal[i](b, a)));
      }
    }
    CHECK(d1_err < 1e-6);
    CHECK(d2_err < 1e-4);
  }
}

TEST_CASE("normal frames are unit and tangent-orthogonal") {
  for (const char* text : kShapeTexts) {
    CAPTURE(text);
    Immersion imm = build_shape(parse_shape(text));
    std::mt19937_64 rng(7);
    for (int t = 0; t < 30; ++t) {
      int c = t % int(imm.charts.size());
      Vec xi = random_xi(imm.charts[c], rng);
      Mat frame = imm.normal_frame(c, xi);
      Jet j = imm.jet_at(c, xi);
      REQUIRE(frame.cols() == imm.codim());
      for (int v = 0; v < frame.cols(); ++v) {
        CHECK(std::abs(frame.col(v).norm() - 1.0) < 1e-12);
        CHECK((j.jacobian.transpose() * frame.col(v)).cwiseAbs().maxCoeff() < 1e-10);
        for (int w = v + 1; w < frame.cols(); ++w)
          CHECK(std::abs(frame.col(v).dot(frame.col(w))) < 1e-10);
      }
    }
  }
}

TEST_CASE("co-orientation reference directions") {
  Immersion ell = build_shape(parse_shape("ellipsoid(1,1.3,1.7)"));
  Vec pole = ell.jet_at(0, Vec::Zero(2)).point;
  CHECK(std::abs(pole[0]) < 1e-15);
  CHECK(pole[2] == doctest::Approx(1.7));
  Vec nu = ell.co_orientation(0, Vec::Zero(2));
  CHECK((nu - Vec(Eigen::Vector3d(0, 0, 1))).norm() < 1e-12);

  Immersion flipped = build_shape(parse_shape("ellipsoid(1,1.3,1.7)+flip"));
  CHECK((flipped.co_orientation(0, Vec::Zero(2)) + nu).norm() < 1e-12);

  Immersion tube = build_shape(parse_shape("tube(n=1,k=1,r=0.5)"));
  Vec outer = tube.jet_at(0, Vec::Zero(2)).point;
  CHECK((outer - Vec(Eigen::Vector3d(1.5, 0, 0))).norm() < 1e-12);
  CHECK((tube.co_orientation(0, Vec::Zero(2)) - Vec(Eigen::Vector3d(1, 0, 0))).norm() < 1e-12);

  Immersion torus = build_shape(parse_shape("torusrev(R=1,r=0.5)"));
  Vec ang(2);
  ang << 0.7, 1.1;
  Vec expect(3);
  expect << std::cos(1.1) * std::cos(0.7), std::cos(1.1) * std::sin(0.7), std::sin(1.1);
  CHECK((torus.co_orientation(0, ang) - expect).norm() < 1e-12);

  Immersion cliff = build_shape(parse_shape("clifford(r1=1,r2=1)"));
  CHECK_THROWS_AS(cliff.co_orientation(0, Vec::Zero(2)), Error);
  CHECK_FALSE(cliff.co_oriented);
}

TEST_CASE("stereographic caps agree on the overlap") {
  for (int d : {2, 3}) {
    CAPTURE(d);
    std::vector<SphereChart> atlas = sphere_atlas(d);
    REQUIRE(atlas.size() == 2);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int t = 0; t < 50; ++t) {
      Vec u(d);
      for (int i = 0; i < d; ++i) u[i] = 2 * u01(rng) - 1;
      double target = 0.7 + 0.7 * u01(rng);
      u *= target / u.norm();
      Vec v = sphere_chart_transition(d, u);
      CHECK((atlas[0].jet(u).point - atlas[1].jet(v).point).norm() < 1e-12);
    }
  }
  CHECK_THROWS_AS(sphere_chart_transition(2, Vec::Zero(2)), Error);
}

TEST_CASE("ellipsoid charts cover the same surface") {
  Immersion ell = build_shape(parse_shape("ellipsoid(1,1.3,1.7)"));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    Vec u(2);
    u << 2 * u01(rng) - 1, 2 * u01(rng) - 1;
    u *= (0.8 + 0.5 * u01(rng)) / u.norm();
    Vec v = sphere_chart_transition(2, u);
    CHECK((ell.jet_at(0, u).point - ell.jet_at(1, v).point).norm() < 1e-12);
  }
}

TEST_CASE("every tube point sits at fiber-radius distance from the core sphere") {
  for (const char* text : {"tube(n=1,k=1,r=0.5)", "tube(n=2,k=1,r=0.5)", "tube(n=1,k=2,r=0.5)"}) {
    CAPTURE(text);
    ShapeSpec spec = parse_shape(text);
    Immersion tube = build_shape(spec);
    std::mt19937_64 rng(13);
    for (int t = 0; t < 200; ++t) {
      int c = t % int(tube.charts.size());
      Vec p = tube.jet_at(c, random_xi(tube.charts[c], rng)).point;
      double core = p.head(spec.n + 1).norm();
      double dist = std::hypot(core - 1.0, p.tail(spec.k).norm());
      CHECK(std::abs(dist - spec.radius) < 1e-12);
    }
  }
}

TEST_CASE("perturbation with zero amplitude is the identity") {
  Immersion base = build_shape(parse_shape("tube(n=1,k=1,r=0.5)"));
  Immersion zero = build_shape(parse_shape("tube(n=1,k=1,r=0.5)+perturb(a=0,w=3,seed=42)"));
  std::mt19937_64 rng(1);
  for (int t = 0; t < 100; ++t) {
    Vec xi = random_xi(base.charts[0], rng);
    Jet a = base.jet_at(0, xi);
    Jet b = zero.jet_at(0, xi);
    CHECK((a.point.array() == b.point.array()).all());
    CHECK((a.jacobian.array() == b.jacobian.array()).all());
  }
}

TEST_CASE("perturbation is deterministic in the seed") {
  TrigPoly p1 = make_trig_poly(3, 3, 42);
  TrigPoly p2 = make_trig_poly(3, 3, 42);
  CHECK(p1.cos_coeff == p2.cos_coeff);
  CHECK(p1.sin_coeff == p2.sin_coeff);
  CHECK(make_trig_poly(3, 3, 43).cos_coeff != p1.cos_coeff);
  for (double c : p1.cos_coeff) CHECK(std::abs(c) <= 1.0);

  Immersion a = build_shape(parse_shape("tube(n=1,k=1,r=0.5)+perturb(a=0.01,w=3,seed=42)"));
  Immersion b = build_shape(parse_shape("tube(n=1,k=1,r=0.5)+perturb(a=0.01,w=3,seed=42)"));
  std::mt19937_64 rng(2);
  for (int t = 0; t < 100; ++t) {
    Vec xi = random_xi(a.charts[0], rng);
    CHECK((a.jet_at(0, xi).point.array() == b.jet_at(0, xi).point.array()).all());
  }
}

TEST_CASE("trig poly gradient and diagonal hessian match differences") {
  TrigPoly poly = make_trig_poly(3, 3, 42);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u01(-2.0, 2.0);
  const double h = 1e-6;
  for (int t = 0; t < 20; ++t) {
    Vec x(3);
    for (int i = 0; i < 3; ++i) x[i] = u01(rng);
    double p;
    Vec grad, hd;
    poly.eval(x, p, grad, hd);
    CHECK(p == doctest::Approx(poly.value(x)).epsilon(1e-14));
    for (int i = 0; i < 3; ++i) {
      Vec xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      CHECK(std::abs((poly.value(xp) - poly.value(xm)) / (2 * h) - grad[i]) < 1e-6);
      CHECK(std::abs((poly.value(xp) - 2 * p + poly.value(xm)) / (h * h) - hd[i]) < 1e-3);
    }
  }
}

TEST_CASE("perturbed tube keeps full rank on a dense grid") {
  Immersion imm = build_shape(parse_shape("tube(n=1,k=1,r=0.5)+perturb(a=0.01,w=3,seed=42)"));
  imm.validate_rank(64); // throws on any rank-deficient sample
}

TEST_CASE("oversized amplitude is rejected") {
  CHECK_THROWS_AS(build_shape(parse_shape("tube(n=1,k=1,r=0.5)+perturb(a=10,w=3,seed=42)")),
                  Error);
  try {
    build_shape(parse_shape("tube(n=1,k=1,r=0.5)+perturb(a=10,w=3,seed=42)"));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AmplitudeTooLarge);
  }
}

TEST_CASE("shape text parsing") {
  ShapeSpec tube = parse_shape("tube(n=1,k=1,r=0.5)+perturb(a=0.01,w=3,seed=42)");
  CHECK(tube.kind == ShapeSpec::Kind::TubeAroundSphere);
  CHECK(tube.n == 1);
  CHECK(tube.k == 1);
  CHECK(tube.radius == 0.5);
  REQUIRE(tube.perturbation.has_value());
  CHECK(tube.perturbation->amplitude == 0.01);
  CHECK(tube.perturbation->frequency == 3);
  CHECK(tube.perturbation->seed == 42);

  ShapeSpec ell = parse_shape(" ellipsoid( 1, 1.3 ,1.7 ) ");
  CHECK(ell.semiaxes == std::vector<double>{1, 1.3, 1.7});

  ShapeSpec tr = parse_shape("torusrev(R=1,r=0.5)");
  CHECK(tr.big_radius == 1.0);
  CHECK(tr.small_radius == 0.5);

  ShapeSpec fl = parse_shape("sphere(n=2,r=1)+flip");
  CHECK(fl.flip);

  for (const char* text : kShapeTexts) {
    ShapeSpec spec = parse_shape(text);
    CHECK(parse_shape(shape_to_string(spec)) == spec);
  }

  CHECK_THROWS_AS(parse_shape("cube(1)"), Error);
  CHECK_THROWS_AS(parse_shape("tube(n=0,k=1,r=0.5)"), Error);
  CHECK_THROWS_AS(parse_shape("torusrev(R=0.5,r=1)"), Error);
  CHECK_THROWS_AS(parse_shape("ellipsoid(1)"), Error);
  CHECK_THROWS_AS(parse_shape("ellipsoid(1,1.3,-1)"), Error);
  CHECK_THROWS_AS(parse_shape("tube(n=1,k=1,r=0.5)+perturb(a=-1,w=3,seed=1)"), Error);
  CHECK_THROWS_AS(parse_shape("tube(n=1,k=1,r=0.5)+perturb(a=0.01,w=0,seed=1)"), Error);
}

TEST_CASE("sphere-jet chart of contact elements") {
  SUBCASE("reference values") {
    Vec q(3), p(3);
    q << 0, 0, 1;
    p << 0, 0, 0;
    ContactElement ce = j1_sphere_chart(0.0, q, p);
    CHECK(ce.base.norm() == 0.0);
    CHECK((ce.conormal - q).norm() == 0.0);

    Vec e1(3);
    e1 << 1, 0, 0;
    ContactElement ce2 = j1_sphere_chart(1.0, e1, Vec::Zero(3));
    CHECK((ce2.base - e1).norm() < 1e-15);
    CHECK((ce2.conormal - e1).norm() == 0.0);

    Vec q3(3), p3(3);
    q3 << 0, 1, 0;
    p3 << 1, 0, 0;
    ContactElement ce3 = j1_sphere_chart(-1.0, q3, p3);
    Vec expect(3);
    expect << 1, -1, 0;
    CHECK((ce3.base - expect).norm() < 1e-15);
  }

  SUBCASE("roundtrip on 1000 random triples") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int t = 0; t < 1000; ++t) {
      int m = 3 + (t % 3); // ambient dimensions 3,4,5
      Vec q(m), y(m);
      for (int i = 0; i < m; ++i) {
        q[i] = gauss(rng);
        y[i] = gauss(rng);
      }
      q.normalize();
      Vec p = y - q * q.dot(y);
      double u = gauss(rng);
      ContactElement ce = j1_sphere_chart(u, q, p);
      J1Point back = j1_sphere_chart_inverse(ce.base, ce.conormal);
      CHECK(std::abs(back.u - u) < 1e-12);
      CHECK((back.q - q).norm() < 1e-12);
      CHECK((back.p - p).norm() < 1e-12);
    }
  }

  SUBCASE("invalid inputs") {
    Vec q(3), p(3);
    q << 0, 0, 1;
    p << 0, 0, 0.5; // not orthogonal to q
    CHECK_THROWS_AS(j1_sphere_chart(0.0, q, p), Error);
    Vec q2(3);
    q2 << 0, 0, 2; // not unit
    CHECK_THROWS_AS(j1_sphere_chart(0.0, q2, Vec::Zero(3)), Error);
    try {
      j1_sphere_chart(0.0, q, p);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvalidCotangentVector);
    }
  }
}

TEST_CASE("out-of-domain evaluation is rejected") {
  Immersion ell = build_shape(parse_shape("ellipsoid(1,1.3,1.7)"));
  Vec far(2);
  far << 5.0, 0.0; // beyond the doubled cap box
  CHECK_THROWS_AS(ell.jet_at(0, far), Error);
  Vec edge(2);
  edge << 2.9, 0.0; // inside the doubled box
  CHECK_NOTHROW(ell.jet_at(0, edge));
}
