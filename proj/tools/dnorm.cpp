#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dn/bounds.hpp"
#include "dn/cell_complex.hpp"
#include "dn/error.hpp"
#include "dn/verify.hpp"

namespace {

dn::CellComplex load_complex(const std::string& arg) {
  namespace fs = std::filesystem;
  bool looks_like_file = arg.size() > 5 && arg.substr(arg.size() - 5) == ".json";
  if (looks_like_file || fs::exists(arg)) {
    std::ifstream in(arg);
    if (!in) dn::fail(dn::ErrorCode::InvalidComplex, "cannot read complex file '" + arg + "'");
    nlohmann::ordered_json j;
    try {
      j = nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::ordered_json::exception& e) {
      dn::fail(dn::ErrorCode::InvalidComplex, std::string("malformed complex file: ") + e.what());
    }
    return dn::complex_from_json(j);
  }
  return dn::parse_named_complex(arg);
}

int cmd_homology(const std::string& arg, std::optional<int> quotient) {
  dn::CellComplex c = load_complex(arg);
  dn::validate_complex(c);
  std::vector<int> betti = dn::betti_z2(c);
  long long B = dn::betti_z2_total(c);
  std::cout << "complex: " << (c.name.empty() ? arg : c.name) << "\n";
  std::cout << "betti_z2:";
  for (int b : betti) std::cout << " " << b;
  std::cout << "\nB: " << B << "\n";
  if (c.has_integer_boundaries()) {
    std::vector<int> bq = dn::betti_rational(c);
    std::vector<int> tq = dn::torsion_generators(c);
    std::cout << "betti_q:";
    for (int b : bq) std::cout << " " << b;
    std::cout << "\ntorsion:";
    for (int t : tq) std::cout << " " << t;
    std::cout << "\n";
  }
  if (quotient) {
    int N = *quotient;
    dn::CellComplex q = dn::involution_quotient_complex(c, N);
    long long total = dn::betti_z2_total(q);
    long long expect = B * B + N * B;
    std::cout << "quotient N=" << N << ": total_betti " << total << "\n";
    std::cout << "identity B^2+N*B = " << expect << ": " << (total == expect ? "PASS" : "FAIL")
              << "\n";
    if (total != expect) return 1;
  }
  return 0;
}

struct BoundsArgs {
  std::string complex_name;
  int n = 0;
  std::optional<int> cup_length;
  std::optional<int> front_bl;
  std::optional<int> front_n;
  std::optional<long long> b_lambda;
  std::optional<long long> self_e;
  std::optional<long long> self_lambda;
  std::optional<long long> self_base;
  std::optional<long long> self_fiber;
  std::string out_dir;
};

nlohmann::ordered_json bound_entry(const std::string& theorem, const std::string& quantity,
                                   const dn::BoundValue& value, nlohmann::ordered_json inputs,
                                   std::vector<std::string> warnings = {}) {
  nlohmann::ordered_json e;
  e["theorem"] = theorem;
  e["quantity"] = quantity;
  e["value"] = dn::bound_value_to_json(value);
  e["inputs"] = std::move(inputs);
  e["warnings"] = warnings;
  return e;
}

int cmd_bounds(const BoundsArgs& args) {
  dn::CellComplex c = load_complex(args.complex_name);
  dn::validate_complex(c);
  std::vector<int> betti = dn::betti_z2(c);
  long long B = dn::betti_z2_total(c);

  nlohmann::ordered_json entries = nlohmann::ordered_json::array();

  std::vector<int> morse_betti = betti;
  std::vector<int> torsion(betti.size(), 0);
  if (c.has_integer_boundaries()) {
    morse_betti = dn::betti_rational(c);
    torsion = dn::torsion_generators(c);
  }
  dn::CriticalPointBounds cp = dn::chekanov_bounds(morse_betti, torsion, args.cup_length);
  entries.push_back(
      bound_entry("1.1", "morse", cp.morse, {{"betti", morse_betti}, {"torsion", torsion}}));
  entries.push_back(bound_entry("1.1", "field", dn::chekanov_bounds(betti, torsion, {}).field,
                                {{"betti", betti}}));
  if (cp.cup)
    entries.push_back(bound_entry("1.1", "cup", *cp.cup, {{"cup_length", *args.cup_length}}));

  entries.push_back(
      bound_entry("3.1", "total", dn::diameter_bound(B, args.n), {{"B", B}, {"n", args.n}}));

  if (args.front_bl && args.front_n) {
    std::optional<int64_t> bl;
    if (args.b_lambda) bl = *args.b_lambda;
    dn::WavefrontBounds wb = dn::wavefront_bounds(*args.front_bl, *args.front_n, bl);
    nlohmann::ordered_json in = {{"B_L", *args.front_bl}, {"n", *args.front_n}};
    entries.push_back(bound_entry("4.1", "total", wb.total, in));
    entries.push_back(bound_entry("4.4a", "passing", wb.passing, in));
    entries.push_back(bound_entry("4.4b", "counterpassing", wb.counterpassing, in));
    nlohmann::ordered_json qin = in;
    qin["B_Lambda"] = wb.b_lambda_used;
    qin["B_Lambda_substituted"] = wb.b_lambda_substituted;
    entries.push_back(bound_entry("4.4c", "total", wb.total_quotient, qin, wb.warnings));
  }
  if (args.self_e && args.self_lambda) {
    entries.push_back(bound_entry("2.1", "self-intersections",
                                  dn::selfintersection_bound(*args.self_e, *args.self_lambda),
                                  {{"B_E", *args.self_e}, {"B_Lambda", *args.self_lambda}}));
  }
  if (args.self_base && args.self_fiber && args.self_lambda) {
    entries.push_back(bound_entry(
        "2.2", "self-intersections",
        dn::selfintersection_bound_trivial_bundle(*args.self_base, *args.self_fiber,
                                                  *args.self_lambda),
        {{"B_M", *args.self_base}, {"B_W", *args.self_fiber}, {"B_Lambda", *args.self_lambda}}));
  }

  std::cout << "complex: " << args.complex_name << "  B = " << B << "\n";
  for (const auto& e : entries) {
    std::cout << "[" << e["theorem"].get<std::string>() << "] " << e["quantity"].get<std::string>()
              << " >= " << e["value"]["ceil"].get<long long>();
    for (const auto& w : e["warnings"]) std::cout << "  (warning: " << w.get<std::string>() << ")";
    std::cout << "\n";
  }
  if (!args.out_dir.empty()) {
    nlohmann::ordered_json doc;
    doc["complex"] = args.complex_name;
    doc["B"] = B;
    doc["bounds"] = entries;
    dn::atomic_write_file(args.out_dir + "/bounds.json", doc.dump(2) + "\n");
    std::cout << "wrote " << args.out_dir << "/bounds.json\n";
  }
  return 0;
}

struct RunArgs {
  std::string config_path;
  std::string solve_json; // report only
  std::string out_dir;
  std::vector<std::string> formats;
  unsigned long long seed = 0;
  bool seed_given = false;
  std::vector<std::string> overrides;
};

void add_run_options(CLI::App* sub, RunArgs& args) {
  sub->add_option("--config", args.config_path, "key=value run configuration file")->required();
  sub->add_option("--out", args.out_dir, "output directory (overrides config)");
  sub->add_option("--format", args.formats, "output formats: json, csv, md (repeatable)");
  sub->add_option("--seed", args.seed, "override the solver rng seed");
  sub->add_option("--set", args.overrides, "override any config key (key=value, repeatable)");
}

dn::RunConfig load_run_config(const RunArgs& args) {
  dn::RunConfig cfg = dn::RunConfig::from_file(args.config_path);
  for (const std::string& kv : args.overrides) {
    std::size_t eq = kv.find('=');
    if (eq == std::string::npos)
      dn::fail(dn::ErrorCode::InvalidConfig, "--set expects key=value, got '" + kv + "'");
    cfg.apply_override(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  if (!args.formats.empty()) {
    cfg.formats.clear();
    for (const std::string& f : args.formats) cfg.apply_override("formats", f);
  }
  if (args.seed_given) cfg.solver.rng_seed = args.seed;
  cfg.solver.validate();
  return cfg;
}

void print_verify_summary(const dn::RunConfig& cfg) {
  std::ifstream in(cfg.out_dir + "/report.json");
  if (!in) return;
  nlohmann::ordered_json j = nlohmann::ordered_json::parse(in, nullptr, false);
  if (j.is_discarded()) return;
  std::cout << "shape: " << j["shape"].get<std::string>() << "\n";
  const auto& obs = j["observed"];
  std::cout << "observed: " << obs["total"] << " total, " << obs["passing"] << " passing, "
            << obs["counterpassing"] << " counterpassing, " << obs["bott_clusters"]
            << " degenerate cluster(s)\n";
  for (const auto& b : j["bounds"]) {
    std::cout << "[" << b["theorem"].get<std::string>() << "] " << b["quantity"].get<std::string>()
              << " >= " << b["value"]["ceil"] << "  observed " << b["observed"] << "  "
              << b["verdict"].get<std::string>() << (b["sharp"].get<bool>() ? " (sharp)" : "")
              << "\n";
  }
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"double-normal finder and topological bound verifier"};
  app.require_subcommand(1);

  std::string hom_arg;
  int hom_quotient_val = 0;
  CLI::App* hom = app.add_subcommand("homology", "Betti/torsion numbers of a cell complex");
  hom->add_option("complex", hom_arg, "named complex or JSON file")->required();
  hom->add_option("--quotient", hom_quotient_val,
                  "also build the sphere-bundle quotient with this N and check its total");

  BoundsArgs bargs;
  CLI::App* bnd = app.add_subcommand("bounds", "evaluate the closed-form lower bounds");
  bnd->add_option("--complex", bargs.complex_name, "named complex or JSON file")->required();
  bnd->add_option("--n", bargs.n, "manifold dimension")->required();
  int cup = 0, fbl = 0, fn = 0;
  long long blam = 0, se = 0, sl = 0, sb = 0, sf = 0;
  bnd->add_option("--cup-length", cup, "cup length input for the third bound");
  bnd->add_option("--front-bl", fbl, "total Betti number of the front's source manifold");
  bnd->add_option("--front-n", fn, "front dimension");
  bnd->add_option("--b-lambda", blam, "total Betti number of the conormal quotient");
  bnd->add_option("--self-e", se, "total Betti number of the fiber-square bundle");
  bnd->add_option("--self-lambda", sl, "total Betti number of the Legendrian");
  bnd->add_option("--self-base", sb, "base total Betti number (trivial bundle variant)");
  bnd->add_option("--self-fiber", sf, "fiber total Betti number (trivial bundle variant)");
  bnd->add_option("--out", bargs.out_dir, "directory for bounds.json");

  RunArgs sargs, vargs, rargs;
  CLI::App* slv = app.add_subcommand("solve", "find all double normals of the configured shape");
  CLI::App* ver = app.add_subcommand("verify", "solve and compare counts against the bounds");
  CLI::App* rep =
      app.add_subcommand("report", "re-derive a verification report from a solve result");
  add_run_options(slv, sargs);
  add_run_options(ver, vargs);
  add_run_options(rep, rargs);
  rep->add_option("--solve", rargs.solve_json, "path to an existing solve.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  sargs.seed_given = slv->count("--seed") > 0;
  vargs.seed_given = ver->count("--seed") > 0;
  rargs.seed_given = rep->count("--seed") > 0;

  try {
    if (*hom) {
      std::optional<int> q;
      if (hom->count("--quotient")) q = hom_quotient_val;
      return cmd_homology(hom_arg, q);
    }
    if (*bnd) {
      if (bnd->count("--cup-length")) bargs.cup_length = cup;
      if (bnd->count("--front-bl")) bargs.front_bl = fbl;
      if (bnd->count("--front-n")) bargs.front_n = fn;
      if (bnd->count("--b-lambda")) bargs.b_lambda = blam;
      if (bnd->count("--self-e")) bargs.self_e = se;
      if (bnd->count("--self-lambda")) bargs.self_lambda = sl;
      if (bnd->count("--self-base")) bargs.self_base = sb;
      if (bnd->count("--self-fiber")) bargs.self_fiber = sf;
      return cmd_bounds(bargs);
    }
    if (*slv) {
      dn::RunConfig cfg = load_run_config(sargs);
      int code = dn::run_solve_command(cfg);
      std::cout << "wrote " << cfg.out_dir << "/solve.json\n";
      return code;
    }
    if (*ver) {
      dn::RunConfig cfg = load_run_config(vargs);
      int code = dn::run_verify_command(cfg);
      print_verify_summary(cfg);
      return code;
    }
    if (*rep) {
      dn::RunConfig cfg = load_run_config(rargs);
      int code = dn::run_report_command(cfg, rargs.solve_json);
      print_verify_summary(cfg);
      return code;
    }
  } catch (const dn::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
