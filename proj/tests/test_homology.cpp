#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cstdint>
#include <vector>

#include "dn/bounds.hpp"
#include "dn/cell_complex.hpp"
#include "dn/error.hpp"
#include "dn/gf2.hpp"
#include "dn/smith.hpp"

using namespace dn;

TEST_CASE("gf2 matrix basics") {
  Gf2Matrix id(5, 5);
  for (int i = 0; i < 5; ++i) id.set(i, i, true);
  CHECK(id.rank() == 5);
  CHECK_FALSE(id.is_zero());
  CHECK(Gf2Matrix(3, 7).is_zero());

  // rows: 1101, 0110, 1011 -> row3 = row1 + row2, rank 2
  Gf2Matrix a(3, 4);
  int bits[3][4] = {{1, 1, 0, 1}, {0, 1, 1, 0}, {1, 0, 1, 1}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) a.set(i, j, bits[i][j]);
  CHECK(a.rank() == 2);

  Gf2Matrix id4(4, 4);
  for (int i = 0; i < 4; ++i) id4.set(i, i, true);
  CHECK(a.multiply(id4) == a);

  // wide matrix exercises the multi-word rows
  Gf2Matrix w(2, 130);
  w.set(0, 0, true);
  w.set(0, 129, true);
  w.set(1, 64, true);
  CHECK(w.rank() == 2);
  w.xor_row(1, 0);
  CHECK(w.get(1, 0));
  CHECK(w.get(1, 129));
  CHECK(w.get(1, 64));
  CHECK(w.rank() == 2);
}

TEST_CASE("smith normal form hand values") {
  auto snf = [](std::vector<std::vector<int64_t>> rows) {
    IntMatrix m(int(rows.size()), int(rows[0].size()));
    for (int i = 0; i < m.rows; ++i)
      for (int j = 0; j < m.cols; ++j) m.at(i, j) = rows[i][j];
    return smith_normal_form(m);
  };

  SUBCASE("diag(2,3) -> 1,6") {
    SmithResult r = snf({{2, 0}, {0, 3}});
    CHECK(r.invariant_factors == std::vector<int64_t>{1, 6});
    CHECK(r.rank == 2);
  }
  SUBCASE("[[1,2],[3,4]] -> 1,2") {
    SmithResult r = snf({{1, 2}, {3, 4}});
    CHECK(r.invariant_factors == std::vector<int64_t>{1, 2});
  }
  SUBCASE("rank-deficient [[2,2],[2,2]] -> 2") {
    SmithResult r = snf({{2, 2}, {2, 2}});
    CHECK(r.invariant_factors == std::vector<int64_t>{2});
    CHECK(r.rank == 1);
  }
  SUBCASE("zero matrix") {
    SmithResult r = snf({{0, 0}, {0, 0}});
    CHECK(r.invariant_factors.empty());
    CHECK(r.rank == 0);
  }
  SUBCASE("negative entries") {
    SmithResult r = snf({{-5}});
    CHECK(r.invariant_factors == std::vector<int64_t>{5});
  }
  SUBCASE("rational rank") {
    IntMatrix m(2, 3);
    m.at(0, 0) = 1;
    m.at(0, 1) = 2;
    m.at(0, 2) = 3;
    m.at(1, 0) = 2;
    m.at(1, 1) = 4;
    m.at(1, 2) = 6;
    CHECK(rational_rank(m) == 1);
  }
}

TEST_CASE("checked arithmetic overflow") {
  CHECK(checked_add(1, 2) == 3);
  CHECK(checked_mul(-4, 5) == -20);
  CHECK_THROWS_AS(checked_add(INT64_MAX, 1), Error);
  CHECK_THROWS_AS(checked_mul(int64_t(1) << 40, int64_t(1) << 40), Error);
  try {
    checked_mul(INT64_MAX, 2);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Overflow);
  }
}

TEST_CASE("builder betti numbers") {
  auto betti_of = [](const CellComplex& c) { return betti_z2(c); };

  CHECK(betti_of(point_complex()) == std::vector<int>{1});
  CHECK(betti_of(interval_complex()) == std::vector<int>{1, 0});
  CHECK(betti_of(sphere_complex(0)) == std::vector<int>{2});
  CHECK(betti_of(sphere_complex(1)) == std::vector<int>{1, 1});
  CHECK(betti_of(sphere_complex(3)) == std::vector<int>{1, 0, 0, 1});
  CHECK(betti_of(torus_complex(2)) == std::vector<int>{1, 2, 1});
  CHECK(betti_of(torus_complex(3)) == std::vector<int>{1, 3, 3, 1});
  CHECK(betti_of(surface_complex(0)) == std::vector<int>{1, 0, 1});
  CHECK(betti_of(surface_complex(1)) == std::vector<int>{1, 2, 1});
  CHECK(betti_of(surface_complex(2)) == std::vector<int>{1, 4, 1});
  CHECK(betti_of(projective_complex(2)) == std::vector<int>{1, 1, 1});
  CHECK(betti_of(projective_complex(4)) == std::vector<int>{1, 1, 1, 1, 1});
  CHECK(betti_z2_total(torus_complex(2)) == 4);

  for (const CellComplex& c :
       {point_complex(), interval_complex(), sphere_complex(2), torus_complex(3),
        surface_complex(2), projective_complex(3)}) {
    validate_complex(c);
    CHECK(verify_boundary_squared(c));
  }
}

TEST_CASE("integer boundaries reduce to the gf2 ones") {
  CellComplex c = projective_complex(3);
  REQUIRE(c.has_integer_boundaries());
  for (int d = 1; d <= c.top_dim; ++d) {
    const IntMatrix& bz = c.boundary_z(d);
    const Gf2Matrix& b2 = c.boundary_z2(d);
    for (int i = 0; i < bz.rows; ++i)
      for (int j = 0; j < bz.cols; ++j)
        CHECK(((bz.at(i, j) % 2 + 2) % 2 == 1) == b2.get(i, j));
  }
}

TEST_CASE("torsion via smith normal form") {
  CHECK(betti_rational(projective_complex(2)) == std::vector<int>{1, 0, 0});
  CHECK(torsion_generators(projective_complex(2)) == std::vector<int>{0, 1, 0});
  CHECK(betti_rational(projective_complex(3)) == std::vector<int>{1, 0, 0, 1});
  CHECK(torsion_generators(projective_complex(3)) == std::vector<int>{0, 1, 0, 0});
  CHECK(betti_rational(torus_complex(2)) == std::vector<int>{1, 2, 1});
  CHECK(torsion_generators(torus_complex(2)) == std::vector<int>{0, 0, 0});
}

TEST_CASE("products and kuenneth") {
  CellComplex t2 = product_complex(sphere_complex(1), sphere_complex(1));
  CHECK(betti_z2(t2) == std::vector<int>{1, 2, 1});
  CHECK(verify_boundary_squared(t2));

  CellComplex pxs = product_complex(projective_complex(2), sphere_complex(1));
  CHECK(betti_z2(pxs) == std::vector<int>{1, 2, 2, 1});
  CHECK(verify_boundary_squared(pxs));
  REQUIRE(pxs.has_integer_boundaries());

  // trivial-bundle totals: B(b x projective(k)) = (k+1) B(b), B(b x sphere(k)) = 2 B(b)
  CellComplex base = torus_complex(2);
  long long Bb = betti_z2_total(base);
  CHECK(betti_z2_total(product_complex(base, projective_complex(2))) == 3 * Bb);
  CHECK(betti_z2_total(product_complex(base, sphere_complex(2))) == 2 * Bb);
}

TEST_CASE("involution quotient identity, 28 cases") {
  auto start = std::chrono::steady_clock::now();
  std::vector<CellComplex> cases = {point_complex(),     interval_complex(),
                                    sphere_complex(1),   sphere_complex(2),
                                    torus_complex(2),    surface_complex(2),
                                    projective_complex(2)};
  for (const CellComplex& m : cases) {
    long long B = betti_z2_total(m);
    for (int N = 1; N <= 4; ++N) {
      CellComplex q = involution_quotient_complex(m, N);
      validate_complex(q);
      CHECK(verify_boundary_squared(q));
      CHECK(betti_z2_total(q) == B * B + N * B);
    }
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(secs < 5.0);
}

TEST_CASE("graded quotient homology when boundaries vanish") {
  CHECK(sphere_graded_quotient_homology(sphere_complex(1), 3) ==
        std::vector<int>{3, 2, 2, 3});
  CHECK(sphere_graded_quotient_homology(torus_complex(2), 2) == std::vector<int>{10, 4, 10});
}

TEST_CASE("named complex parsing") {
  CHECK(betti_z2_total(parse_named_complex("torus(2)")) == 4);
  CHECK(betti_z2_total(parse_named_complex("product(sphere(1),sphere(1))")) == 4);
  CHECK(betti_z2_total(parse_named_complex("product(torus(2),projective(1))")) == 8);
  CHECK(betti_z2_total(parse_named_complex("point")) == 1);
  CHECK_THROWS_AS(parse_named_complex("klein_bottle"), Error);
  CHECK_THROWS_AS(parse_named_complex("sphere(-1)"), Error);
}

TEST_CASE("complex json roundtrip") {
  for (const CellComplex& c : {projective_complex(3), torus_complex(2), surface_complex(1)}) {
    CellComplex back = complex_from_json(complex_to_json(c));
    CHECK(back.name == c.name);
    CHECK(back.cell_counts == c.cell_counts);
    CHECK(betti_z2(back) == betti_z2(c));
    CHECK(back.has_integer_boundaries() == c.has_integer_boundaries());
    if (c.has_integer_boundaries())
      CHECK(torsion_generators(back) == torsion_generators(c));
    CHECK(verify_boundary_squared(back));
  }
  nlohmann::ordered_json bad = {{"top_dim", 1}};
  CHECK_THROWS_AS(complex_from_json(bad), Error);
}

TEST_CASE("bound value arithmetic") {
  CHECK(make_half(7) == BoundValue{7, 2});
  CHECK(make_half(8) == BoundValue{4, 1});
  CHECK(BoundValue{7, 2}.ceil() == 4);
  CHECK(BoundValue{-7, 2}.ceil() == -3);
  CHECK(BoundValue{7, 2}.as_double() == doctest::Approx(3.5));
  nlohmann::ordered_json j = bound_value_to_json(BoundValue{7, 2});
  CHECK(j["num"] == 7);
  CHECK(j["den"] == 2);
  CHECK(j["ceil"] == 4);
}

TEST_CASE("critical point bounds from betti data") {
  CriticalPointBounds cp = chekanov_bounds({1, 2, 1}, {0, 0, 0}, {});
  CHECK(cp.morse == BoundValue{4, 1});
  CHECK(cp.field == BoundValue{4, 1});
  CHECK_FALSE(cp.cup.has_value());

  // real projective plane over the integers: rational betti (1,0,0), one torsion generator
  CriticalPointBounds rp = chekanov_bounds({1, 0, 0}, {0, 1, 0}, 2);
  CHECK(rp.morse == BoundValue{3, 1});
  CHECK(rp.field == BoundValue{1, 1});
  REQUIRE(rp.cup.has_value());
  CHECK(*rp.cup == BoundValue{3, 1});
}

TEST_CASE("diameter bound closed forms") {
  for (int n = 1; n <= 10; ++n) {
    // sphere: B = 2
    CHECK(diameter_bound(2, n) == make_half(4 + (n - 1) * 2));
    CHECK(diameter_bound(2, n).ceil() == n + 1);
    // n-torus: B = 2^n
    int64_t B = int64_t(1) << n;
    CHECK(diameter_bound(B, n).ceil() == (int64_t(1) << (2 * n - 1)) + (n - 1) * (int64_t(1) << (n - 1)));
    // projective space: B = n + 1
    CHECK(diameter_bound(n + 1, n).ceil() == int64_t(n) * (n + 1));
  }
  for (int g = 0; g <= 10; ++g) {
    int64_t B = 2 * g + 2;
    CHECK(diameter_bound(B, 2).ceil() == 2 * g * g + 5 * g + 3);
  }
  // betti totals straight from the builders
  CHECK(diameter_bound(betti_z2_total(torus_complex(2)), 2).ceil() == 10);
  CHECK(diameter_bound(betti_z2_total(sphere_complex(2)), 2).ceil() == 3);
}

TEST_CASE("wavefront bounds") {
  WavefrontBounds wb = wavefront_bounds(2, 2, {});
  CHECK(wb.total == make_half(4 + 2));
  CHECK(wb.passing == BoundValue{2, 1});
  CHECK(wb.counterpassing == BoundValue{8, 1});
  CHECK(wb.b_lambda_used == 4);
  CHECK(wb.b_lambda_substituted);
  CHECK(wb.total_quotient == make_half(16 + 2 * 4));
  CHECK_FALSE(wb.warnings.empty()); // quotient bound 12 exceeds passing+counterpassing 10

  WavefrontBounds explicit_l = wavefront_bounds(2, 2, 4);
  CHECK_FALSE(explicit_l.b_lambda_substituted);
  CHECK(explicit_l.total_quotient == wb.total_quotient);

  // split bounds always sum to 2 B^2 + (n-1) B
  for (int64_t B = 1; B <= 6; ++B)
    for (int n = 1; n <= 4; ++n) {
      WavefrontBounds w = wavefront_bounds(B, n, {});
      CHECK(w.passing.num + w.counterpassing.num == 2 * B * B + (n - 1) * B);
    }
}

TEST_CASE("self-intersection bounds") {
  CHECK(selfintersection_bound(10, 4) == make_half(6));
  CHECK(selfintersection_bound(4, 10) == make_half(6));
  CHECK(selfintersection_bound_trivial_bundle(2, 4, 8) == make_half(2 * 16 - 8));
}
