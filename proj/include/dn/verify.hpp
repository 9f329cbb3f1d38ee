#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dn/bounds.hpp"
#include "dn/shapes.hpp"
#include "dn/solver.hpp"

namespace dn {

// Flat key=value run configuration; '#' starts a comment. CLI flags override file values.
struct RunConfig {
  ShapeSpec shape;
  std::string shape_text;      // canonical form
  std::string homology_source; // named complex, e.g. "torus(2)"
  SolverConfig solver;
  std::string out_dir = "out";
  std::vector<std::string> formats = {"json"};

  static RunConfig from_text(const std::string& text);
  static RunConfig from_file(const std::string& path);
  void apply_override(const std::string& key, const std::string& value);
};

// Declared shape/complex pairings; anything else is rejected, never guessed.
std::vector<std::string> compatible_complexes(const ShapeSpec& spec);
void check_compatibility(const RunConfig& cfg);

uint64_t fnv1a(const std::string& text);
std::string canonical_config_text(const RunConfig& cfg);
std::string config_hash_hex(const RunConfig& cfg);

enum class Verdict { Satisfied, Violated, NotApplicable };
std::string to_string(Verdict v);

struct BoundCheck {
  std::string theorem;  // report key, e.g. "3.1"
  std::string quantity; // observed count it constrains: total / passing / counterpassing
  BoundValue value;
  nlohmann::ordered_json inputs;
  long observed = 0;
  Verdict verdict = Verdict::NotApplicable;
  bool sharp = false;
  std::vector<std::string> warnings;
};

struct ObservedCounts {
  long total = 0;
  long passing = 0;
  long counterpassing = 0;
  int bott_clusters = 0;
};
ObservedCounts observed_from_result(const SolveResult& result);
ObservedCounts observed_from_solve_json(const nlohmann::ordered_json& j);

struct VerificationReport {
  std::string shape;
  std::string config_hash;
  std::string homology_source;
  std::vector<int> betti;
  int betti_total = 0;
  ObservedCounts observed;
  std::vector<BoundCheck> checks;
  SolveDiagnostics diagnostics;

  bool any_violated() const;
  bool all_satisfied_or_inapplicable() const;
};

VerificationReport make_report(const RunConfig& cfg, int intrinsic_dim,
                               const ObservedCounts& observed, const SolveDiagnostics& diag);

nlohmann::ordered_json report_to_json(const VerificationReport& r);
std::string report_to_markdown(const VerificationReport& r);
std::string report_to_csv(const VerificationReport& r);

// Write-temp-then-rename; creates parent directories.
void atomic_write_file(const std::string& path, const std::string& content);

// CLI drivers; return the process exit code (0 ok, 1 violation, 3 solver budget).
// Invalid input surfaces as Error and is mapped to exit 2 by the caller.
int run_solve_command(const RunConfig& cfg);
int run_verify_command(const RunConfig& cfg);
int run_report_command(const RunConfig& cfg, const std::string& solve_json_path);

} // namespace dn
