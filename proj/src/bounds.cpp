#include "dn/bounds.hpp"

#include <cstdlib>

#include <nlohmann/json.hpp>

#include "dn/error.hpp"
#include "dn/smith.hpp"

namespace dn {

BoundValue make_half(int64_t twice_value) {
  if (twice_value % 2 == 0) return {twice_value / 2, 1};
  return {twice_value, 2};
}

CriticalPointBounds chekanov_bounds(const std::vector<int>& betti, const std::vector<int>& torsion,
                                    std::optional<int> cup_length) {
  if (betti.size() != torsion.size())
    fail(ErrorCode::InvalidArgument, "betti and torsion vectors must have equal length");
  for (int b : betti)
    if (b < 0) fail(ErrorCode::InvalidArgument, "negative Betti number");
  for (int q : torsion)
    if (q < 0) fail(ErrorCode::InvalidArgument, "negative torsion count");
  CriticalPointBounds out;
  int64_t morse = 0, field = 0;
  for (std::size_t i = 0; i < betti.size(); ++i) {
    morse = checked_add(morse, checked_add(betti[i], checked_mul(2, torsion[i])));
    field = checked_add(field, betti[i]);
  }
  out.morse = {morse, 1};
  out.field = {field, 1};
  if (cup_length) {
    if (*cup_length < 0) fail(ErrorCode::InvalidArgument, "negative cup length");
    out.cup = BoundValue{*cup_length + 1, 1};
  }
  return out;
}

BoundValue diameter_bound(int64_t B, int n) {
  if (B < 0 || n < 0) fail(ErrorCode::InvalidArgument, "diameter bound needs B >= 0, n >= 0");
  return make_half(checked_add(checked_mul(B, B), checked_mul(n - 1, B)));
}

BoundValue selfintersection_bound(int64_t B_front, int64_t B_legendrian) {
  if (B_front < 0 || B_legendrian < 0) fail(ErrorCode::InvalidArgument, "Betti numbers must be >= 0");
  int64_t diff = checked_add(B_front, -B_legendrian);
  return make_half(diff < 0 ? -diff : diff);
}

BoundValue selfintersection_bound_trivial_bundle(int64_t B_base, int64_t B_fiber, int64_t B_legendrian) {
  if (B_base < 0 || B_fiber < 0 || B_legendrian < 0)
    fail(ErrorCode::InvalidArgument, "Betti numbers must be >= 0");
  return make_half(checked_add(checked_mul(B_base, checked_mul(B_fiber, B_fiber)), -B_legendrian));
}

WavefrontBounds wavefront_bounds(int64_t B_L, int n, std::optional<int64_t> B_Lambda) {
  if (B_L < 0 || n < 0) fail(ErrorCode::InvalidArgument, "wavefront bounds need B_L >= 0, n >= 0");
  WavefrontBounds out;
  out.total = make_half(checked_add(checked_mul(B_L, B_L), checked_mul(n - 1, B_L)));
  out.passing = {checked_add(checked_mul(B_L, B_L), -B_L), 1};
  out.counterpassing = {checked_add(checked_mul(B_L, B_L), checked_mul(n, B_L)), 1};
  if (B_Lambda) {
    if (*B_Lambda < 0) fail(ErrorCode::InvalidArgument, "B_Lambda must be >= 0");
    out.b_lambda_used = *B_Lambda;
  } else {
    out.b_lambda_used = checked_mul(2, B_L);
    out.b_lambda_substituted = true;
    out.warnings.push_back("B_Lambda defaulted to 2*B_L (trivialized unit normal bundle)");
  }
  out.total_quotient =
      make_half(checked_add(checked_mul(out.b_lambda_used, out.b_lambda_used), checked_mul(n, out.b_lambda_used)));
  // Exact comparison of total_quotient (num/den) against passing + counterpassing (integers).
  int64_t split_sum = checked_add(out.passing.num, out.counterpassing.num);
  if (out.total_quotient.num > checked_mul(split_sum, out.total_quotient.den))
    out.warnings.push_back("combined lower bound exceeds the sum of the passing and counterpassing bounds");
  return out;
}

nlohmann::ordered_json bound_value_to_json(const BoundValue& v) {
  return nlohmann::ordered_json{{"num", v.num}, {"den", v.den}, {"ceil", v.ceil()}};
}

} // namespace dn
