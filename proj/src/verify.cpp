#include "dn/verify.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dn/cell_complex.hpp"
#include "dn/error.hpp"

namespace dn {

namespace {

std::string strip(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string strip_spaces(const std::string& s) {
  std::string out;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
  return out;
}

long long parse_int(const std::string& key, const std::string& s) {
  long long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    fail(ErrorCode::InvalidConfig, "bad integer for '" + key + "': '" + s + "'");
  return v;
}

double parse_real(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) fail(ErrorCode::InvalidConfig, "bad number for '" + key + "'");
    return v;
  } catch (const std::logic_error&) {
    fail(ErrorCode::InvalidConfig, "bad number for '" + key + "': '" + s + "'");
  }
}

std::string format_real(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t comma = s.find(',', start);
    std::string piece = strip(s.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (!piece.empty()) out.push_back(piece);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

} // namespace

void RunConfig::apply_override(const std::string& key, const std::string& value) {
  if (key == "shape") {
    shape = parse_shape(value);
    shape_text = shape_to_string(shape);
  } else if (key == "homology") {
    homology_source = strip_spaces(value);
  } else if (key == "out") {
    out_dir = value;
  } else if (key == "formats") {
    formats = split_csv(value);
    if (formats.empty()) fail(ErrorCode::InvalidConfig, "formats must not be empty");
    for (const std::string& f : formats)
      if (f != "json" && f != "csv" && f != "md")
        fail(ErrorCode::InvalidConfig, "unknown format '" + f + "'");
  } else if (key == "seed_count") {
    long long v = parse_int(key, value);
    if (v < 1 || v > (1LL << 31)) fail(ErrorCode::InvalidConfig, "seed_count out of range");
    solver.seed_count = int(v);
  } else if (key == "rng_seed") {
    solver.rng_seed = uint64_t(parse_int(key, value));
  } else if (key == "newton_max_iter") {
    long long v = parse_int(key, value);
    if (v < 1 || v > 100000) fail(ErrorCode::InvalidConfig, "newton_max_iter out of range");
    solver.newton_max_iter = int(v);
  } else if (key == "tau_res") {
    solver.tau_res = parse_real(key, value);
  } else if (key == "dedup_radius") {
    solver.dedup_radius = parse_real(key, value);
  } else if (key == "diagonal_exclusion") {
    solver.diagonal_exclusion = parse_real(key, value);
  } else if (key == "degeneracy_eta") {
    solver.degeneracy_eta = parse_real(key, value);
  } else {
    fail(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
  }
}

RunConfig RunConfig::from_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = strip(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::InvalidConfig, "line " + std::to_string(lineno) + ": expected key=value");
    cfg.apply_override(strip(line.substr(0, eq)), strip(line.substr(eq + 1)));
  }
  if (cfg.shape_text.empty()) fail(ErrorCode::InvalidConfig, "config is missing 'shape'");
  cfg.solver.validate();
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::InvalidConfig, "cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str());
}

std::vector<std::string> compatible_complexes(const ShapeSpec& spec) {
  switch (spec.kind) {
    case ShapeSpec::Kind::Ellipsoid:
      return {"sphere(" + std::to_string(int(spec.semiaxes.size()) - 1) + ")"};
    case ShapeSpec::Kind::RoundSphere:
      return {"sphere(" + std::to_string(spec.n) + ")"};
    case ShapeSpec::Kind::TorusOfRevolution:
    case ShapeSpec::Kind::CliffordTorus:
      return {"torus(2)"};
    case ShapeSpec::Kind::TubeAroundSphere: {
      std::vector<std::string> out = {"product(sphere(" + std::to_string(spec.n) + "),sphere(" +
                                      std::to_string(spec.k) + "))"};
      if (spec.n == 1 && spec.k == 1) out.push_back("torus(2)");
      return out;
    }
  }
  return {};
}

void check_compatibility(const RunConfig& cfg) {
  if (cfg.homology_source.empty())
    fail(ErrorCode::InvalidConfig, "config is missing 'homology'");
  std::vector<std::string> allowed = compatible_complexes(cfg.shape);
  if (std::find(allowed.begin(), allowed.end(), cfg.homology_source) == allowed.end()) {
    std::string list;
    for (const std::string& a : allowed) list += (list.empty() ? "" : ", ") + a;
    fail(ErrorCode::InvalidConfig, "homology source '" + cfg.homology_source +
                                       "' is not declared compatible with shape '" + cfg.shape_text +
                                       "' (expected one of: " + list + ")");
  }
}

uint64_t fnv1a(const std::string& text) {
  uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string canonical_config_text(const RunConfig& cfg) {
  std::string t;
  t += "shape=" + cfg.shape_text + "\n";
  t += "homology=" + cfg.homology_source + "\n";
  t += "seed_count=" + std::to_string(cfg.solver.seed_count) + "\n";
  t += "rng_seed=" + std::to_string(cfg.solver.rng_seed) + "\n";
  t += "newton_max_iter=" + std::to_string(cfg.solver.newton_max_iter) + "\n";
  t += "tau_res=" + format_real(cfg.solver.tau_res) + "\n";
  t += "dedup_radius=" + format_real(cfg.solver.dedup_radius) + "\n";
  t += "diagonal_exclusion=";
  t += cfg.solver.diagonal_exclusion ? format_real(*cfg.solver.diagonal_exclusion) : "auto";
  t += "\n";
  t += "degeneracy_eta=" + format_real(cfg.solver.degeneracy_eta) + "\n";
  return t;
}

std::string config_hash_hex(const RunConfig& cfg) {
  uint64_t h = fnv1a(canonical_config_text(cfg));
  char buf[17];
  auto res = std::to_chars(buf, buf + sizeof(buf), h, 16);
  std::string hex(buf, res.ptr);
  return std::string(16 - hex.size(), '0') + hex;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Satisfied: return "SATISFIED";
    case Verdict::Violated: return "VIOLATED";
    case Verdict::NotApplicable: return "NOT-APPLICABLE";
  }
  return "NOT-APPLICABLE";
}

ObservedCounts observed_from_result(const SolveResult& result) {
  ObservedCounts oc;
  oc.total = long(result.diameters.size());
  for (const DoubleNormal& dn : result.diameters) {
    if (dn.cls == DiameterClass::Passing) ++oc.passing;
    if (dn.cls == DiameterClass::Counterpassing) ++oc.counterpassing;
  }
  oc.bott_clusters = int(result.bott_clusters.size());
  return oc;
}

ObservedCounts observed_from_solve_json(const nlohmann::ordered_json& j) {
  ObservedCounts oc;
  try {
    const auto& diameters = j.at("diameters");
    oc.total = long(diameters.size());
    for (const auto& d : diameters) {
      std::string cls = d.at("class").get<std::string>();
      if (cls == "passing") ++oc.passing;
      if (cls == "counterpassing") ++oc.counterpassing;
    }
    oc.bott_clusters = int(j.at("bott_clusters").size());
  } catch (const nlohmann::ordered_json::exception& e) {
    fail(ErrorCode::InvalidConfig, std::string("malformed solve result: ") + e.what());
  }
  return oc;
}

namespace {

SolveDiagnostics diagnostics_from_solve_json(const nlohmann::ordered_json& j) {
  SolveDiagnostics d;
  try {
    const auto& dj = j.at("diagnostics");
    d.seeds_total = dj.at("seeds_total").get<int>();
    d.converged = dj.at("converged").get<int>();
    d.diverged = dj.at("diverged").get<int>();
    d.deduplicated = dj.at("deduplicated").get<int>();
    d.excluded_diagonal = dj.at("excluded_diagonal").get<int>();
    d.divergence_warning = dj.at("divergence_warning").get<bool>();
  } catch (const nlohmann::ordered_json::exception& e) {
    fail(ErrorCode::InvalidConfig, std::string("malformed solve result: ") + e.what());
  }
  return d;
}

BoundCheck make_check(const std::string& theorem, const std::string& quantity, BoundValue value,
                      nlohmann::ordered_json inputs, long observed, bool applicable,
                      std::vector<std::string> warnings = {}) {
  BoundCheck c;
  c.theorem = theorem;
  c.quantity = quantity;
  c.value = value;
  c.inputs = std::move(inputs);
  c.observed = observed;
  c.warnings = std::move(warnings);
  if (!applicable) {
    c.verdict = Verdict::NotApplicable;
  } else {
    c.verdict = observed >= value.ceil() ? Verdict::Satisfied : Verdict::Violated;
    c.sharp = c.verdict == Verdict::Satisfied && observed == value.ceil();
  }
  return c;
}

} // namespace

VerificationReport make_report(const RunConfig& cfg, int intrinsic_dim,
                               const ObservedCounts& observed, const SolveDiagnostics& diag) {
  VerificationReport r;
  r.shape = cfg.shape_text;
  r.config_hash = config_hash_hex(cfg);
  r.homology_source = cfg.homology_source;
  CellComplex complex = parse_named_complex(cfg.homology_source);
  r.betti = betti_z2(complex);
  r.betti_total = betti_z2_total(complex);
  r.observed = observed;
  r.diagnostics = diag;

  // Counts of isolated critical points are compared against the bounds only for
  // generic configurations; degenerate families void the Morse-count reading.
  bool generic = observed.bott_clusters == 0;

  int64_t B = r.betti_total;
  r.checks.push_back(make_check("3.1", "total", diameter_bound(B, intrinsic_dim),
                                {{"B", B}, {"n", intrinsic_dim}}, observed.total, generic));

  if (cfg.shape.kind == ShapeSpec::Kind::TubeAroundSphere) {
    // The tube is the embedded wave front of its core sphere; the front bounds
    // apply with the core's total Betti number and the front dimension.
    int64_t B_L = 2;
    int front_n = cfg.shape.n + cfg.shape.k;
    WavefrontBounds wb = wavefront_bounds(B_L, front_n, std::nullopt);
    nlohmann::ordered_json front_inputs = {{"B_L", B_L}, {"n", front_n}};
    r.checks.push_back(make_check("4.1", "total", wb.total, front_inputs, observed.total, generic));
    r.checks.push_back(
        make_check("4.4a", "passing", wb.passing, front_inputs, observed.passing, generic));
    r.checks.push_back(make_check("4.4b", "counterpassing", wb.counterpassing, front_inputs,
                                  observed.counterpassing, generic));
    nlohmann::ordered_json quot_inputs = front_inputs;
    quot_inputs["B_Lambda"] = wb.b_lambda_used;
    quot_inputs["B_Lambda_substituted"] = wb.b_lambda_substituted;
    bool exceeds = false;
    for (const std::string& w : wb.warnings)
      if (w.find("exceeds") != std::string::npos) exceeds = true;
    r.checks.push_back(make_check("4.4c", "total", wb.total_quotient, quot_inputs, observed.total,
                                  generic && !exceeds, wb.warnings));
  }
  return r;
}

bool VerificationReport::any_violated() const {
  for (const BoundCheck& c : checks)
    if (c.verdict == Verdict::Violated) return true;
  return false;
}

bool VerificationReport::all_satisfied_or_inapplicable() const {
  return !any_violated();
}

nlohmann::ordered_json report_to_json(const VerificationReport& r) {
  nlohmann::ordered_json j;
  j["shape"] = r.shape;
  j["config_hash"] = r.config_hash;
  nlohmann::ordered_json hom;
  hom["source"] = r.homology_source;
  hom["betti"] = r.betti;
  hom["B"] = r.betti_total;
  j["homology"] = hom;
  nlohmann::ordered_json obs;
  obs["total"] = r.observed.total;
  obs["passing"] = r.observed.passing;
  obs["counterpassing"] = r.observed.counterpassing;
  obs["bott_clusters"] = r.observed.bott_clusters;
  j["observed"] = obs;
  nlohmann::ordered_json bounds = nlohmann::ordered_json::array();
  for (const BoundCheck& c : r.checks) {
    nlohmann::ordered_json cj;
    cj["theorem"] = c.theorem;
    cj["quantity"] = c.quantity;
    cj["value"] = bound_value_to_json(c.value);
    cj["inputs"] = c.inputs;
    cj["observed"] = c.observed;
    cj["verdict"] = to_string(c.verdict);
    cj["sharp"] = c.sharp;
    cj["warnings"] = c.warnings;
    bounds.push_back(std::move(cj));
  }
  j["bounds"] = bounds;
  nlohmann::ordered_json diag;
  diag["seeds_total"] = r.diagnostics.seeds_total;
  diag["converged"] = r.diagnostics.converged;
  diag["diverged"] = r.diagnostics.diverged;
  diag["deduplicated"] = r.diagnostics.deduplicated;
  diag["excluded_diagonal"] = r.diagnostics.excluded_diagonal;
  diag["divergence_warning"] = r.diagnostics.divergence_warning;
  j["diagnostics"] = diag;
  j["all_satisfied"] = r.all_satisfied_or_inapplicable();
  return j;
}

namespace {

std::string bound_value_text(const BoundValue& v) {
  if (v.den == 1) return std::to_string(v.num);
  return std::to_string(v.num) + "/2 (>= " + std::to_string(v.ceil()) + ")";
}

} // namespace

std::string report_to_markdown(const VerificationReport& r) {
  std::string md;
  md += "# Diameter verification: " + r.shape + "\n\n";
  md += "- homology source: `" + r.homology_source + "` (B = " + std::to_string(r.betti_total) + ")\n";
  md += "- config hash: `" + r.config_hash + "`\n";
  md += "- observed: " + std::to_string(r.observed.total) + " total, " +
        std::to_string(r.observed.passing) + " passing, " +
        std::to_string(r.observed.counterpassing) + " counterpassing, " +
        std::to_string(r.observed.bott_clusters) + " degenerate cluster(s)\n\n";
  md += "| bound | quantity | value | observed | verdict | sharp |\n";
  md += "|-------|----------|-------|----------|---------|-------|\n";
  for (const BoundCheck& c : r.checks) {
    md += "| " + c.theorem + " | " + c.quantity + " | " + bound_value_text(c.value) + " | " +
          std::to_string(c.observed) + " | " + to_string(c.verdict) + " | " +
          (c.sharp ? "yes" : "no") + " |\n";
  }
  bool any_warn = false;
  for (const BoundCheck& c : r.checks)
    if (!c.warnings.empty()) any_warn = true;
  if (any_warn) {
    md += "\nWarnings:\n";
    for (const BoundCheck& c : r.checks)
      for (const std::string& w : c.warnings) md += "- [" + c.theorem + "] " + w + "\n";
  }
  md += "\nSolver: " + std::to_string(r.diagnostics.converged) + " converged / " +
        std::to_string(r.diagnostics.diverged) + " diverged / " +
        std::to_string(r.diagnostics.deduplicated) + " deduplicated / " +
        std::to_string(r.diagnostics.excluded_diagonal) + " near-diagonal.\n";
  return md;
}

std::string report_to_csv(const VerificationReport& r) {
  std::string out = "theorem,quantity,bound,observed,verdict,sharp\n";
  for (const BoundCheck& c : r.checks) {
    out += c.theorem + "," + c.quantity + "," + std::to_string(c.value.ceil()) + "," +
           std::to_string(c.observed) + "," + to_string(c.verdict) + "," +
           (c.sharp ? "true" : "false") + "\n";
  }
  return out;
}

void atomic_write_file(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  fs::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::InvalidArgument, "cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) fail(ErrorCode::InvalidArgument, "short write to '" + tmp.string() + "'");
  }
  fs::rename(tmp, p);
}

namespace {

bool wants(const RunConfig& cfg, const std::string& fmt) {
  return std::find(cfg.formats.begin(), cfg.formats.end(), fmt) != cfg.formats.end();
}

void write_solve_outputs(const RunConfig& cfg, const Immersion& imm, const SolveResult& result) {
  nlohmann::ordered_json sj = solve_result_to_json(imm, cfg.solver, result);
  atomic_write_file(cfg.out_dir + "/solve.json", sj.dump(2) + "\n");
  if (wants(cfg, "csv"))
    atomic_write_file(cfg.out_dir + "/diameters.csv", solve_result_to_csv(result));
}

void write_report_outputs(const RunConfig& cfg, const VerificationReport& report) {
  atomic_write_file(cfg.out_dir + "/report.json", report_to_json(report).dump(2) + "\n");
  if (wants(cfg, "md")) atomic_write_file(cfg.out_dir + "/report.md", report_to_markdown(report));
  if (wants(cfg, "csv")) atomic_write_file(cfg.out_dir + "/report.csv", report_to_csv(report));
}

} // namespace

int run_solve_command(const RunConfig& cfg) {
  Immersion imm = build_shape(cfg.shape);
  SolveResult result = find_double_normals(imm, cfg.solver);
  write_solve_outputs(cfg, imm, result);
  return result.diagnostics.divergence_warning ? 3 : 0;
}

int run_verify_command(const RunConfig& cfg) {
  check_compatibility(cfg);
  Immersion imm = build_shape(cfg.shape);
  SolveResult result = find_double_normals(imm, cfg.solver);
  write_solve_outputs(cfg, imm, result);
  VerificationReport report =
      make_report(cfg, imm.intrinsic_dim, observed_from_result(result), result.diagnostics);
  write_report_outputs(cfg, report);
  if (result.diagnostics.divergence_warning) return 3;
  return report.any_violated() ? 1 : 0;
}

int run_report_command(const RunConfig& cfg, const std::string& solve_json_path) {
  check_compatibility(cfg);
  std::ifstream in(solve_json_path);
  if (!in) fail(ErrorCode::InvalidConfig, "cannot read solve result '" + solve_json_path + "'");
  nlohmann::ordered_json sj;
  try {
    sj = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::ordered_json::exception& e) {
    fail(ErrorCode::InvalidConfig, std::string("malformed solve result: ") + e.what());
  }
  if (sj.contains("shape") && sj["shape"].get<std::string>() != cfg.shape_text)
    fail(ErrorCode::InvalidConfig, "solve result shape does not match the config shape");
  Immersion imm = build_shape(cfg.shape);
  SolveDiagnostics diag = diagnostics_from_solve_json(sj);
  VerificationReport report =
      make_report(cfg, imm.intrinsic_dim, observed_from_solve_json(sj), diag);
  write_report_outputs(cfg, report);
  if (diag.divergence_warning) return 3;
  return report.any_violated() ? 1 : 0;
}

} // namespace dn
