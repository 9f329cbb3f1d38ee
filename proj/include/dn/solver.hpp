#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dn/geometry.hpp"

namespace dn {

enum class DiameterClass { Passing, Counterpassing, Unclassified };
std::string to_string(DiameterClass c);

// A segment between two distinct surface points, perpendicular to the tangent
// space at both endpoints. Stored in canonical orientation: endpoints ordered
// lexicographically in ambient coordinates, quotienting the swap involution.
struct DoubleNormal {
  int chart1 = 0, chart2 = 0;
  Vec xi1, xi2;
  Vec p1, p2;
  double length = 0;
  double residual_norm = 0;
  int morse_index = -1; // -1 = not computed
  bool nondegenerate = false;
  DiameterClass cls = DiameterClass::Unclassified;
};

struct SolverConfig {
  int seed_count = 20000;
  uint64_t rng_seed = 0;
  int newton_max_iter = 50;
  double tau_res = 1e-10;
  double dedup_radius = 1e-4;
  std::optional<double> diagonal_exclusion; // default: 1e-3 x shape diameter estimate
  double degeneracy_eta = 1e-6;             // degenerate when |lambda|_min < eta * |lambda|_max

  void validate() const;
  double resolve_diagonal_exclusion(const Immersion& imm) const;
};

// A connected group of degenerate critical solutions at one critical value:
// the numerical trace of a positive-dimensional critical family.
struct BottCluster {
  int member_count = 0;
  double critical_value = 0; // g = 1/2 length^2, averaged over members
  double mean_length = 0;
  DoubleNormal representative;
};

struct SolveDiagnostics {
  int seeds_total = 0;
  int converged = 0;
  int diverged = 0;
  int deduplicated = 0;
  int excluded_diagonal = 0;
  bool divergence_warning = false; // more than 90% of refined seeds diverged
};

struct SolveResult {
  std::vector<DoubleNormal> diameters; // nondegenerate, deduplicated
  std::vector<BottCluster> bott_clusters;
  SolveDiagnostics diagnostics;
};

// Stationarity conditions: [J(xi1)^T d; J(xi2)^T d] with d = f(xi1) - f(xi2).
// Vanishes exactly at double normals (and on the diagonal).
Vec critical_residual(const Immersion& imm, int chart1, const Vec& xi1, int chart2, const Vec& xi2);

// Residual plus its analytic 2n x 2n Jacobian, assembled from the two-jets.
void residual_system(const Immersion& imm, int chart1, const Vec& xi1, int chart2, const Vec& xi2,
                     Vec& residual, Mat& jacobian);

struct RefineOutcome {
  enum class Status { Converged, Diverged, ExcludedDiagonal };
  Status status = Status::Diverged;
  int chart1 = 0, chart2 = 0;
  Vec xi1, xi2;
  double residual_norm = 0;
  int iterations = 0;
  std::vector<double> residual_history; // residual norm before each iteration
};

// Damped Newton on the residual (SVD least-squares step, step halving).
RefineOutcome newton_refine(const Immersion& imm, int chart1, Vec xi1, int chart2, Vec xi2,
                            const SolverConfig& cfg);

// Multi-start search: seed, refine, canonicalize, deduplicate, split by degeneracy,
// cluster the degenerate remainder. Deterministic for fixed config.
SolveResult find_double_normals(const Immersion& imm, const SolverConfig& cfg);

// Co-orientation comparison along the segment: sign of <nu1,u><nu2,u>, u = (p1-p2)/l.
// Unclassified when the shape carries no co-orientation. Throws
// Error(InconsistentDoubleNormal) when a normal is nearly orthogonal to the segment.
DiameterClass classify_passing(const Immersion& imm, const DoubleNormal& dn);

// Symmetric Hessian of g(xi1,xi2) = 1/2 |f(xi1)-f(xi2)|^2 at the solution.
Mat morse_hessian(const Immersion& imm, const DoubleNormal& dn);

struct MorseData {
  int index = 0;
  bool nondegenerate = false;
};
MorseData morse_data(const Immersion& imm, const DoubleNormal& dn, double eta);

// Wraps periodic coordinates and orders endpoints lexicographically.
void canonicalize_double_normal(const Immersion& imm, DoubleNormal& dn);

// Order-insensitive distance between endpoint sets: min over the two matchings
// of the larger endpoint displacement.
double endpoint_set_distance(const DoubleNormal& a, const DoubleNormal& b);

// Groups degenerate solutions by critical value (1e-6 relative) and chains them
// by proximity into connected clusters.
std::vector<BottCluster> cluster_degenerate_solutions(std::vector<DoubleNormal> degenerate,
                                                      const Immersion& imm,
                                                      const SolverConfig& cfg);

struct BottSummary {
  int cluster_count = 0;
  std::vector<int> sizes;
  std::vector<double> critical_values;
};
BottSummary detect_bott_families(const SolveResult& result);

nlohmann::ordered_json solver_config_to_json(const SolverConfig& cfg, const Immersion& imm);
nlohmann::ordered_json solve_result_to_json(const Immersion& imm, const SolverConfig& cfg,
                                            const SolveResult& result);
std::string solve_result_to_csv(const SolveResult& result);

} // namespace dn
