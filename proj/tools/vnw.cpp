// vnw: build, verify, certify and probe double Moutard potentials.
//
// Exit codes: 0 ok, 1 claim failure, 2 mathematical precondition,
// 3 configuration, 4 inconclusive certificate, 5 solver stagnation.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "vnw/errors.hpp"
#include "vnw/io.hpp"
#include "vnw/positivity.hpp"
#include "vnw/spectral.hpp"

namespace {

using namespace vnw;
using nlohmann::json;

enum Exit { kOk = 0, kClaim = 1, kMath = 2, kConfig = 3, kInconclusive = 4, kSolver = 5 };

struct RunConfig {
  std::string example;
  std::string family;
  std::string package;
  std::string out = ".";
  std::string C = "-12";
  double k = 1.0;
  double L = 30.0;
  double h = 0.1;
  double sample_L = 10.0;
  double sample_h = 0.5;
  double residual_L = 20.0;
  std::vector<double> residual_h{0.2, 0.1, 0.05};
  double window_center = 1.0;
  double window_half_width = 0.05;
  std::string inner = "ldlt";
  bool free_potential = false;
  bool dump_fields = false;
  std::vector<double> radii{50, 100, 200, 400};
  std::vector<double> tails{25, 50, 100};
  double gram_L = 50.0;
  int threads = 0;
  int max_m = 2;
  bool as_json = false;
  double tol_angle = 5.0;
  double tol_order_min = 1.6;
  double tol_order_max = 2.4;
  double tol_decay = 3.0;
  double tol_tail_min = 0.125;
  double tol_tail_max = 0.5;
  double tol_gram_det = 0.01;
  double tol_min_spacing = 1e-4;
  double tol_top_spacing = 0.25;
  double tol_solve = 1e-8;
  std::string config;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Error report on stderr as one JSON line.
int fail(int code, const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << '\n';
  return code;
}

std::string path_in(const RunConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out);
  return (std::filesystem::path(cfg.out) / name).string();
}

json stamped(json j) {
  j["timestamp"] = utc_timestamp();
  return j;
}

void validate(const RunConfig& cfg) {
  for (double t : {cfg.tol_angle, cfg.tol_order_min, cfg.tol_order_max, cfg.tol_decay, cfg.tol_tail_min,
                   cfg.tol_tail_max, cfg.tol_gram_det, cfg.tol_min_spacing, cfg.tol_top_spacing, cfg.tol_solve}) {
    if (!(t > 0)) throw ConfigError("tolerances must be positive");
  }
  if (cfg.tol_min_spacing > cfg.tol_top_spacing) throw ConfigError("--tol-min-spacing exceeds --tol-top-spacing");
  if (!(cfg.k > 0)) throw ConfigError("k must be positive");
  if (cfg.inner != "ldlt" && cfg.inner != "minres") throw ConfigError("--inner must be ldlt or minres");
  try {
    parse_rational(cfg.C);
  } catch (const FormatError&) {
    throw ConfigError("C must be rational, got '" + cfg.C + "'");
  }
}

json parse_inline_or_file(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\n");
  if (first != std::string::npos && (text[first] == '{' || text[first] == '[')) {
    try {
      return json::parse(text);
    } catch (const json::parse_error& e) {
      throw FormatError(e.what());
    }
  }
  return read_json_file(text);
}

// The package named by --package, --family or --example paper (the default).
PotentialPackage load_package(const RunConfig& cfg) {
  if (!cfg.package.empty()) {
    PotentialPackage pkg = package_from_json(read_json_file(cfg.package));
    return pkg;
  }
  const Rational C = parse_rational(cfg.C);
  if (!cfg.family.empty()) {
    const FamilySpec spec = parse_family(parse_inline_or_file(cfg.family));
    if (cfg.k != spec.k) throw IncompatibleWavenumber("--k disagrees with the family members");
    return double_potential(combine_family(spec.omega1), combine_family(spec.omega2), C);
  }
  if (!cfg.example.empty() && cfg.example != "paper") throw ConfigError("unknown example '" + cfg.example + "'");
  if (cfg.k != 1.0) throw ConfigError("the explicit example has k = 1");
  return double_potential(builtin_omega1(), builtin_omega2(), C);
}

CertifyOptions certify_options(const RunConfig& cfg) {
  CertifyOptions o;
  o.min_spacing = cfg.tol_min_spacing;
  o.top_spacing = cfg.tol_top_spacing;
  o.threads = cfg.threads;
  return o;
}

void print_certificate(const PositivityCertificate& cert) {
  std::cout << "C = " << cert.C.get_str() << ": " << (cert.certified ? "certified" : "failed") << '\n'
            << "  R0 = " << cert.outer_radius << ", outer margin = " << cert.outer_margin << '\n'
            << "  h = " << cert.grid_spacing << " (top " << cert.top_spacing << "), L = " << cert.lipschitz_bound
            << ", inner margin = " << cert.inner_margin << ", cells = " << cert.cell_count << '\n';
  if (cert.witness) {
    std::cout << "  witness (" << cert.witness->first << ", " << cert.witness->second
              << "), Q = " << cert.witness_value << '\n';
  }
}

int cmd_build(const RunConfig& cfg) {
  const PotentialPackage pkg = load_package(cfg);
  json j = package_to_json(pkg);
  write_json_file(path_in(cfg, "package.json"), stamped(j));
  write_fields_csv(path_in(cfg, "samples.csv"), PackageFields(pkg), GridSpec(cfg.sample_L, cfg.sample_h));
  const int top = pkg.P.max_total_degree();
  std::cout << "Q(0,0) = " << pkg.Q.eval(0, 0) << '\n'
            << "Q: " << pkg.Q.size() << " terms, P: " << pkg.P.size() << " terms\n"
            << "P leading (degree " << top << "): " << pkg.P.homogeneous_part(top).to_string() << '\n';
  return kOk;
}

int cmd_verify(const RunConfig& cfg) {
  if (cfg.package.empty()) throw ConfigError("verify needs --package");
  const PotentialPackage pkg = load_package(cfg);
  bool all = true;
  for (const auto& check : verify_package(pkg)) {
    std::cout << (check.passed ? "PASS " : "FAIL ") << check.name << '\n';
    all = all && check.passed;
  }
  return all ? kOk : kClaim;
}

int cmd_certify(const RunConfig& cfg) {
  const PotentialPackage pkg = load_package(cfg);
  const PositivityCertificate cert = certify(pkg.Q, pkg.C, certify_options(cfg));
  json j = cert;
  write_json_file(path_in(cfg, "certificate.json"), stamped(j));
  print_certificate(cert);
  return cert.certified ? kOk : kClaim;
}

int cmd_threshold(const RunConfig& cfg) {
  QFamily family = builtin_q_family();
  if (!cfg.family.empty()) {
    const FamilySpec spec = parse_family(parse_inline_or_file(cfg.family));
    const RingElement w1 = combine_family(spec.omega1);
    const RingElement w2 = combine_family(spec.omega2);
    family = [w1, w2](const Rational& C) { return theta_exact(w1, w2, kappa_from_C(C)).Q; };
  }
  const ThresholdResult r = threshold_C(family, certify_options(cfg));
  json path = json::array();
  for (const auto& step : r.path) path.push_back({{"C", rational_to_string(step.C)}, {"verdict", step.verdict}});
  json j{{"C_star", rational_to_string(r.C_star)},
         {"path", path},
         {"monotone", r.monotone},
         {"at_threshold", r.at_threshold},
         {"above", r.above},
         {"below", r.below}};
  write_json_file(path_in(cfg, "threshold.json"), stamped(j));
  std::cout << "search path:";
  for (const auto& step : r.path) std::cout << ' ' << step.C.get_str() << ':' << step.verdict;
  std::cout << "\nC* = " << r.C_star.get_str() << (r.monotone ? " (monotone)" : " (NOT monotone)") << '\n';
  print_certificate(r.at_threshold);
  return r.monotone ? kOk : kClaim;
}

int cmd_spectrum(const RunConfig& cfg) {
  const PotentialPackage pkg = load_package(cfg);
  const PositivityCertificate cert = certify(pkg.Q, pkg.C, certify_options(cfg));
  require_certificate(pkg, &cert);

  const ResidualStudy residuals = residual_orders(pkg, cfg.residual_L, cfg.residual_h, &cert);
  SpectrumOptions options;
  options.eigen.center = cfg.window_center;
  options.eigen.half_width = cfg.window_half_width;
  options.eigen.solve_tol = cfg.tol_solve;
  options.eigen.inner = cfg.inner == "minres" ? InnerSolver::kMinres : InnerSolver::kDirectLdlt;
  options.angle_threshold_deg = cfg.tol_angle;
  options.free_potential = cfg.free_potential;
  const GridSpec grid(cfg.L, cfg.h);
  const SpectrumSummary s = spectrum(pkg, grid, &cert, options);

  bool orders_ok = true;
  for (double o : residuals.order) orders_ok = orders_ok && o >= cfg.tol_order_min && o <= cfg.tol_order_max;
  const bool passed = s.passed && orders_ok;
  json j{{"C", rational_to_string(pkg.C)},
         {"L", cfg.L},
         {"h", cfg.h},
         {"free_potential", cfg.free_potential},
         {"residual_study", residuals},
         {"spectrum", s},
         {"orders_ok", orders_ok},
         {"passed", passed}};
  write_json_file(path_in(cfg, "spectrum.json"), stamped(j));
  {
    std::ofstream csv(path_in(cfg, "eigenvalues.csv"));
    csv.precision(17);
    csv << "index,value,residual,psi_overlap\n";
    std::vector<double> overlap(s.eigen.pairs.size(), 0.0);
    for (std::size_t k = 0; k < s.correlated.indices.size(); ++k) overlap[s.correlated.indices[k]] = s.correlated.overlaps[k];
    for (std::size_t i = 0; i < s.eigen.pairs.size(); ++i) {
      csv << i << ',' << s.eigen.pairs[i].value << ',' << s.eigen.pairs[i].residual << ',' << overlap[i] << '\n';
    }
  }
  if (cfg.dump_fields) write_fields_csv(path_in(cfg, "fields.csv"), PackageFields(pkg), grid);

  std::cout << "residuals:";
  for (std::size_t i = 0; i < residuals.h.size(); ++i) std::cout << " h=" << residuals.h[i] << ":" << residuals.residual[i];
  std::cout << "\norders:";
  for (double o : residuals.order) std::cout << ' ' << o;
  std::cout << "\nwindow (" << cfg.window_center - cfg.window_half_width << ", "
            << cfg.window_center + cfg.window_half_width << "): " << s.eigen.window_count << " eigenvalues\n"
            << "correlated subspace: " << s.correlated.indices.size() << " vectors, angle "
            << s.correlated.angle_deg << " deg, eigenvalues in [" << s.correlated.min_value << ", "
            << s.correlated.max_value << "]\n"
            << "whole window angle " << s.window_angle_deg << " deg, best pair angle "
            << s.best_pair_angle_deg << " deg\n"
            << (passed ? "PASS" : "FAIL") << '\n';
  return passed ? kOk : kClaim;
}

int cmd_decay(const RunConfig& cfg) {
  const PotentialPackage pkg = load_package(cfg);
  const PositivityCertificate cert = certify(pkg.Q, pkg.C, certify_options(cfg));
  require_certificate(pkg, &cert);
  const PackageFields fields(pkg);
  const DecayStudy d = decay_study(fields, cfg.radii);
  const auto t1 = l2_tail(fields.psi1_field(), cfg.tails);
  const auto t2 = l2_tail(fields.psi2_field(), cfg.tails);
  const Eigen::Matrix2d G = gram_matrix(fields.psi1_field(), fields.psi2_field(), cfg.gram_L);
  const Eigen::Matrix2d N = normalized(G);

  bool ok = d.factor_U <= cfg.tol_decay && d.factor_psi1 <= cfg.tol_decay && d.factor_psi2 <= cfg.tol_decay;
  ok = ok && strictly_increasing(d.U_next) && strictly_increasing(d.psi1_next) && strictly_increasing(d.psi2_next);
  std::vector<double> ratios1, ratios2;
  for (std::size_t i = 0; i + 1 < t1.size(); ++i) {
    ratios1.push_back(t1[i + 1] / t1[i]);
    ratios2.push_back(t2[i + 1] / t2[i]);
    ok = ok && ratios1.back() >= cfg.tol_tail_min && ratios1.back() <= cfg.tol_tail_max;
  }
  ok = ok && N.determinant() > cfg.tol_gram_det;

  json j{{"C", rational_to_string(pkg.C)},
         {"decay", d},
         {"tails", {{"R", cfg.tails}, {"psi1", t1}, {"psi2", t2}, {"psi1_ratio", ratios1}, {"psi2_ratio", ratios2}}},
         {"gram", {{"L", cfg.gram_L},
                   {"matrix", {{G(0, 0), G(0, 1)}, {G(1, 0), G(1, 1)}}},
                   {"normalized_det", N.determinant()}}},
         {"passed", ok}};
  write_json_file(path_in(cfg, "decay.json"), stamped(j));
  {
    std::ofstream csv(path_in(cfg, "decay.csv"));
    csv.precision(17);
    csv << "r,r_U,r2_psi1,r3_psi2,r2_U,r3_psi1,r4_psi2\n";
    for (std::size_t i = 0; i < d.radii.size(); ++i) {
      csv << d.radii[i] << ',' << d.U[i] << ',' << d.psi1[i] << ',' << d.psi2[i] << ',' << d.U_next[i] << ','
          << d.psi1_next[i] << ',' << d.psi2_next[i] << '\n';
    }
  }
  std::cout << "r      r|U|        r^2|psi1|   r^3|psi2|\n";
  for (std::size_t i = 0; i < d.radii.size(); ++i) {
    std::cout << d.radii[i] << "  " << d.U[i] << "  " << d.psi1[i] << "  " << d.psi2[i] << '\n';
  }
  std::cout << "variation factors: " << d.factor_U << ' ' << d.factor_psi1 << ' ' << d.factor_psi2 << '\n'
            << "psi1 annulus ratios:";
  for (double r : ratios1) std::cout << ' ' << r;
  std::cout << "\nnormalized Gram determinant: " << N.determinant() << '\n' << (ok ? "PASS" : "FAIL") << '\n';
  return ok ? kOk : kClaim;
}

int cmd_family_list(const RunConfig& cfg) {
  const std::complex<double> roots[] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  json list = json::array();
  for (const auto& lambda : roots) {
    for (int m = 0; m <= cfg.max_m; ++m) {
      for (const Part part : {Part::kReal, Part::kImag}) {
        const RingElement f = family_exact(lambda, m, part);
        json entry{{"lambda", {lambda.real(), lambda.imag()}},
                   {"m", m},
                   {"part", part == Part::kReal ? "re" : "im"},
                   {"k", 1.0},
                   {"terms", f.size()},
                   {"element", f}};
        if (cfg.as_json) {
          list.push_back(entry);
        } else {
          std::cout << "lambda=(" << lambda.real() << "," << lambda.imag() << ") m=" << m << ' '
                    << (part == Part::kReal ? "re" : "im") << ": " << f.to_string() << '\n';
        }
      }
    }
  }
  if (cfg.as_json) std::cout << list.dump(2) << '\n';
  return kOk;
}

// Fills options absent from the command line from the JSON config file.
void apply_config(CLI::App* sub, const std::string& path) {
  const json j = read_json_file(path);
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  for (const auto& [key, value] : j.items()) {
    std::string name = "--" + key;
    std::replace(name.begin(), name.end(), '_', '-');
    CLI::Option* opt = nullptr;
    try {
      opt = sub->get_option(name);
    } catch (const CLI::OptionNotFound&) {
      throw ConfigError("unknown config key '" + key + "' for " + sub->get_name());
    }
    if (opt->count() > 0 || name == "--config") continue;
    auto as_text = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    if (value.is_array()) {
      for (const auto& v : value) opt->add_result(as_text(v));
    } else if (value.is_boolean()) {
      if (value.get<bool>()) opt->add_result("true");
    } else {
      opt->add_result(as_text(value));
    }
    opt->run_callback();
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Double Moutard potentials with an embedded eigenvalue"};
  app.set_help_flag("--help", "print help");
  app.require_subcommand(1);
  RunConfig cfg;

  auto source = [&](CLI::App* sub) {
    sub->add_option("--example", cfg.example, "built-in example name");
    sub->add_option("--family", cfg.family, "family descriptor: inline JSON or a file");
    sub->add_option("--package", cfg.package, "package JSON written by build");
    sub->add_option("--C", cfg.C, "integration constant (rational)");
    sub->add_option("--k", cfg.k, "wavenumber");
  };
  auto common = [&](CLI::App* sub) {
    sub->add_option("--out", cfg.out, "output directory");
    sub->add_option("--config", cfg.config, "JSON config; flags override it");
    sub->add_option("--threads", cfg.threads, "worker threads (0: all)");
    sub->add_option("--tol-min-spacing", cfg.tol_min_spacing, "smallest certificate cell");
    sub->add_option("--tol-top-spacing", cfg.tol_top_spacing, "initial certificate cell");
  };

  CLI::App* build = app.add_subcommand("build", "construct a package and write package.json, samples.csv");
  source(build);
  common(build);
  build->add_option("--L", cfg.sample_L, "half width of the sample grid");
  build->add_option("--h", cfg.sample_h, "spacing of the sample grid");

  CLI::App* verify = app.add_subcommand("verify", "run the exact identity suite on a package");
  verify->add_option("--package", cfg.package, "package JSON")->required();
  verify->add_option("--config", cfg.config, "JSON config");

  CLI::App* cert = app.add_subcommand("certify", "certify that Q has no zeros");
  source(cert);
  common(cert);

  CLI::App* threshold = app.add_subcommand("threshold", "search the largest certified integer C");
  threshold->add_option("--family", cfg.family, "family descriptor: inline JSON or a file");
  common(threshold);

  CLI::App* spec = app.add_subcommand("spectrum", "eigenpairs near E on a Dirichlet square");
  source(spec);
  common(spec);
  spec->add_option("--L", cfg.L, "half width");
  spec->add_option("--h", cfg.h, "grid spacing");
  spec->add_option("--residual-L", cfg.residual_L, "half width for the residual study");
  spec->add_option("--residual-h", cfg.residual_h, "spacings for the residual study");
  spec->add_option("--window-center", cfg.window_center, "window center");
  spec->add_option("--window-half-width", cfg.window_half_width, "window half width");
  spec->add_option("--inner", cfg.inner, "inner solver: ldlt or minres");
  spec->add_flag("--free", cfg.free_potential, "replace U_hat by 0 (control)");
  spec->add_flag("--dump-fields", cfg.dump_fields, "write fields.csv on the grid");
  spec->add_option("--tol-angle", cfg.tol_angle, "subspace angle threshold (degrees)");
  spec->add_option("--tol-order-min", cfg.tol_order_min, "lowest accepted residual order");
  spec->add_option("--tol-order-max", cfg.tol_order_max, "highest accepted residual order");
  spec->add_option("--tol-solve", cfg.tol_solve, "relative inner solve residual");

  CLI::App* decay = app.add_subcommand("decay", "decay profiles, L2 tails and Gram matrix");
  source(decay);
  common(decay);
  decay->add_option("--radii", cfg.radii, "circle radii (>= 10)");
  decay->add_option("--tails", cfg.tails, "annulus inner radii");
  decay->add_option("--gram-L", cfg.gram_L, "half width for the Gram matrix");
  decay->add_option("--tol-decay", cfg.tol_decay, "largest accepted max/min of a normalized sup");
  decay->add_option("--tol-tail-min", cfg.tol_tail_min, "lowest accepted annulus ratio");
  decay->add_option("--tol-tail-max", cfg.tol_tail_max, "highest accepted annulus ratio");
  decay->add_option("--tol-gram-det", cfg.tol_gram_det, "lowest accepted normalized Gram determinant");

  CLI::App* family = app.add_subcommand("family-list", "list exact family members");
  family->add_option("--max-m", cfg.max_m, "largest m");
  family->add_flag("--json", cfg.as_json, "print JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return fail(kConfig, "config", e.what());
  }

  CLI::App* active = app.get_subcommands().front();
  try {
    if (!cfg.config.empty()) apply_config(active, cfg.config);
    validate(cfg);
    const std::string name = active->get_name();
    if (name == "build") return cmd_build(cfg);
    if (name == "verify") return cmd_verify(cfg);
    if (name == "certify") return cmd_certify(cfg);
    if (name == "threshold") return cmd_threshold(cfg);
    if (name == "spectrum") return cmd_spectrum(cfg);
    if (name == "decay") return cmd_decay(cfg);
    return cmd_family_list(cfg);
  } catch (const ConfigError& e) {
    return fail(kConfig, "config", e.what());
  } catch (const CLI::ParseError& e) {
    return fail(kConfig, "config", e.what());
  } catch (const FormatError& e) {
    return fail(kConfig, "format", e.what());
  } catch (const ParameterError& e) {
    return fail(kConfig, "parameter", e.what());
  } catch (const IncompatibleWavenumber& e) {
    return fail(kConfig, "incompatible_wavenumber", e.what());
  } catch (const InconclusiveError& e) {
    return fail(kInconclusive, "inconclusive", e.what());
  } catch (const SolverStagnation& e) {
    return fail(kSolver, "solver_stagnation", e.what());
  } catch (const Error& e) {
    return fail(kMath, "precondition", e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(kConfig, "format", e.what());
  }
}
