#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace dn {

// Exact bound value num/den with den in {1,2}.
struct BoundValue {
  int64_t num = 0;
  int den = 1;

  int64_t ceil() const { return den == 1 ? num : (num >= 0 ? (num + 1) / 2 : num / 2); }
  double as_double() const { return double(num) / den; }
  bool operator==(const BoundValue& o) const { return num == o.num && den == o.den; }
};

BoundValue make_half(int64_t twice_value); // value twice_value/2, reduced

struct CriticalPointBounds {
  BoundValue morse; // sum of Betti numbers plus twice the torsion generator count
  BoundValue field; // sum of the supplied Betti numbers
  std::optional<BoundValue> cup; // cup_length + 1 when supplied
};

// Lower bounds for critical points of a generic function from Betti/torsion data.
CriticalPointBounds chekanov_bounds(const std::vector<int>& betti, const std::vector<int>& torsion,
                                    std::optional<int> cup_length);

// Lower bound on double normals of a generic closed immersed n-manifold with total Z2 Betti
// number B: half of (B^2 + (n-1)B).
BoundValue diameter_bound(int64_t B, int n);

// Lower bound on self-intersection points of a wave front: half of |B_front - B_legendrian|.
BoundValue selfintersection_bound(int64_t B_front, int64_t B_legendrian);

// Trivial-bundle variant: half of (B_base * B_fiber^2 - B_legendrian).
BoundValue selfintersection_bound_trivial_bundle(int64_t B_base, int64_t B_fiber, int64_t B_legendrian);

struct WavefrontBounds {
  BoundValue total;            // half of (B_L^2 + (n-1) B_L)
  BoundValue passing;          // B_L^2 - B_L
  BoundValue counterpassing;   // B_L^2 + n B_L
  BoundValue total_quotient;   // half of (B_Lambda^2 + n B_Lambda)
  int64_t b_lambda_used = 0;
  bool b_lambda_substituted = false; // true when B_Lambda defaulted to 2 B_L
  std::vector<std::string> warnings;
};

// Diameter bounds for a co-oriented front of a Legendrian lift with total Betti number B_L,
// front in R^(n+1). B_Lambda is the total Betti number of the lift's unit-normal-bundle
// quotient; when absent it defaults to 2*B_L with a flag.
WavefrontBounds wavefront_bounds(int64_t B_L, int n, std::optional<int64_t> B_Lambda);

nlohmann::ordered_json bound_value_to_json(const BoundValue& v);

} // namespace dn
