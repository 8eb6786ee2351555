#include "magnify/cli.hpp"

#include "magnify/certify.hpp"
#include "magnify/magnification.hpp"
#include "magnify/polymap.hpp"
#include "magnify/report.hpp"
#include "magnify/sampling.hpp"
#include "magnify/solver.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace magnify::cli {

namespace {

struct RunConfig {
  std::string command;
  std::string map;
  std::string point;
  std::string mode;
  int order = 2;
  std::string target;
  double delta0 = 1e-2;
  double ratio = 0.5;
  int levels = 8;
  std::optional<int> samples;  // command-specific default
  int targets = 1000;
  std::uint64_t seed = 42;
  double tol = 1e-12;
  int max_iter = 100;
  double kappa = 0.5;
  double scale = 0.1;
  std::optional<double> a_bound;
  double margin_tol = 1e-6;
  double radius = 0.1;
  double collision_tol = 1e-10;
  std::string property = "contraction";
  double lo = 1.0 / 64.0;
  double hi = 1.0;
  int count = 49;
  std::string out;
  std::string csv;
  std::string series;
  std::string config;
  bool normalize = false;
};

int default_samples(const RunConfig& c) {
  if (c.command == "expand") return 64;
  if (c.command == "certify") return c.mode == "quadratic" ? 512 : 10000;
  if (c.command == "falsify") return 2000;
  if (c.command == "sweep") return 10000;
  return 512;
}

std::string format_number(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

Vector parse_point(const std::string& text, const char* what) {
  std::vector<double> values;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw UsageError(std::string(what) + ": cannot parse '" + item + "'");
    }
    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
    if (used != item.size() || !std::isfinite(v)) throw UsageError(std::string(what) + ": cannot parse '" + item + "'");
    values.push_back(v);
  }
  if (values.empty()) throw UsageError(std::string(what) + " is empty");
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::string dashed(std::string key) {
  for (char& c : key) {
    if (c == '_') c = '-';
  }
  return "--" + key;
}

// Config files win over flags; a notice is logged when both are given and differ.
class ConfigMerge {
 public:
  ConfigMerge(const Json& file, const CLI::App& app) : file_(file), app_(app) {}

  template <class T>
  void take(const char* key, T& field) {
    seen_.push_back(key);
    if (!file_.contains(key)) return;
    T value;
    try {
      value = file_.at(key).get<T>();
    } catch (const std::exception&) {
      throw UsageError(std::string("config: wrong type for '") + key + "'");
    }
    const CLI::Option* opt = app_.get_option_no_throw(dashed(key));
    if (opt != nullptr && opt->count() > 0 && !(value == field)) {
      std::cerr << "notice: config file value for '" << key << "' overrides " << dashed(key) << "\n";
    }
    field = value;
  }

  template <class T>
  void take(const char* key, std::optional<T>& field) {
    T value = field.value_or(T{});
    const bool present = file_.contains(key);
    take(key, value);
    if (present) field = value;
  }

  void take_vector(const char* key, std::string& field) {
    if (file_.contains(key) && file_.at(key).is_array()) {
      std::string joined;
      for (const auto& v : file_.at(key)) {
        if (!v.is_number()) throw UsageError(std::string("config: '") + key + "' must hold numbers");
        joined += (joined.empty() ? "" : ",") + format_number(v.get<double>());
      }
      Json copy = file_;
      copy[key] = joined;
      ConfigMerge(copy, app_).take(key, field);
      seen_.push_back(key);
      return;
    }
    take(key, field);
  }

  void reject_unknown() const {
    for (const auto& [key, value] : file_.items()) {
      if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) {
        throw UsageError("config: unknown key '" + key + "'");
      }
    }
  }

 private:
  const Json& file_;
  const CLI::App& app_;
  std::vector<std::string> seen_;
};

void merge_config_file(RunConfig& c, const CLI::App& app) {
  std::ifstream in(c.config);
  if (!in) throw UsageError("cannot read config file '" + c.config + "'");
  Json file;
  try {
    file = Json::parse(in);
  } catch (const std::exception& e) {
    throw UsageError("config file is not valid JSON: " + std::string(e.what()));
  }
  if (!file.is_object()) throw UsageError("config file must hold a JSON object");
  ConfigMerge m(file, app);
  m.take("map", c.map);
  m.take_vector("point", c.point);
  m.take("mode", c.mode);
  m.take("order", c.order);
  m.take_vector("target", c.target);
  m.take("delta0", c.delta0);
  m.take("ratio", c.ratio);
  m.take("levels", c.levels);
  m.take("samples", c.samples);
  m.take("targets", c.targets);
  m.take("seed", c.seed);
  m.take("tol", c.tol);
  m.take("max_iter", c.max_iter);
  m.take("kappa", c.kappa);
  m.take("scale", c.scale);
  m.take("a_bound", c.a_bound);
  m.take("margin_tol", c.margin_tol);
  m.take("radius", c.radius);
  m.take("collision_tol", c.collision_tol);
  m.take("property", c.property);
  m.take("lo", c.lo);
  m.take("hi", c.hi);
  m.take("count", c.count);
  m.take("out", c.out);
  m.take("csv", c.csv);
  m.take("series", c.series);
  m.take("normalize", c.normalize);
  m.reject_unknown();
}

void require(bool ok, const std::string& message) {
  if (!ok) throw UsageError(message);
}

void validate(RunConfig& c) {
  require(!c.map.empty(), "--map is required");
  require(!c.point.empty(), "--point is required");
  if (c.mode.empty()) c.mode = c.command == "invert" ? "auto" : "first";
  if (c.command == "certify") require(c.mode == "first" || c.mode == "quadratic", "--mode must be first or quadratic");
  if (c.command == "invert") {
    require(c.mode == "auto" || c.mode == "regular" || c.mode == "degenerate",
            "--mode must be auto, regular or degenerate");
    require(!c.target.empty(), "--target is required for invert");
  }
  if (c.command == "sweep") require(c.property == "contraction" || c.property == "coverage",
                                    "--property must be contraction or coverage");
  require(c.order >= 1 && c.order <= 3, "--order must be 1, 2 or 3");
  require(c.delta0 > 0.0, "--delta0 must be positive");
  require(c.ratio > 0.0 && c.ratio < 1.0, "--ratio must lie in (0, 1)");
  require(c.levels >= 3, "--levels must be at least 3");
  if (!c.samples) c.samples = default_samples(c);
  require(*c.samples > 0, "--samples must be positive");
  if (c.command == "falsify") require(*c.samples >= 1000, "--samples must be at least 1000 for falsify");
  if (c.command == "certify" && c.mode == "first") require(*c.samples >= 100, "--samples must be at least 100");
  if (c.command == "sweep") require(*c.samples >= 100, "--samples must be at least 100");
  require(c.targets >= 100, "--targets must be at least 100");
  require(c.tol > 0.0, "--tol must be positive");
  require(c.max_iter > 0, "--max-iter must be positive");
  require(c.kappa > 0.0, "--kappa must be positive");
  require(c.scale > 0.0, "--scale must be positive");
  require(!c.a_bound || *c.a_bound > 0.0, "--a-bound must be positive");
  require(c.margin_tol > 0.0, "--margin-tol must be positive");
  require(c.radius > 0.0, "--radius must be positive");
  require(c.collision_tol > 0.0, "--collision-tol must be positive");
  require(c.lo > 0.0 && c.hi > c.lo, "--lo and --hi must satisfy 0 < lo < hi");
  require(c.count >= 4, "--count must be at least 4");
  require(c.csv.empty() == c.series.empty(), "--csv and --series must be given together");
}

Json config_echo(const RunConfig& c) {
  Json out;
  out["map"] = c.map;
  out["point"] = c.point;
  out["seed"] = c.seed;
  out["samples"] = *c.samples;
  out["tol"] = c.tol;
  out["ladder"] = {{"delta0", c.delta0}, {"ratio", c.ratio}, {"levels", c.levels}};
  if (c.command == "expand") out["order"] = c.order;
  if (c.command == "certify" || c.command == "invert") out["mode"] = c.mode;
  if (c.command == "invert") {
    out["target"] = c.target;
  }
  if (c.command == "certify" || c.command == "invert" || c.command == "sweep") {
    out["targets"] = c.targets;
    out["kappa"] = c.kappa;
    out["scale"] = c.scale;
    out["a_bound"] = c.a_bound ? Json(*c.a_bound) : Json(nullptr);
    out["margin_tol"] = c.margin_tol;
    out["max_iter"] = c.max_iter;
  }
  if (c.command == "falsify") {
    out["radius"] = c.radius;
    out["collision_tol"] = c.collision_tol;
  }
  if (c.command == "sweep") {
    out["property"] = c.property;
    out["lo"] = c.lo;
    out["hi"] = c.hi;
    out["count"] = c.count;
  }
  out["out"] = c.out.empty() ? Json(nullptr) : Json(c.out);
  out["csv"] = c.csv.empty() ? Json(nullptr) : Json(c.csv);
  out["series"] = c.series.empty() ? Json(nullptr) : Json(c.series);
  return out;
}

struct Outcome {
  int exit_code = 1;
  std::string status;
  std::string message;
  Json results = Json::object();
  Json series = Json::object();
};

QuadraticOptions quadratic_options(const RunConfig& c) {
  QuadraticOptions q;
  q.regularity.samples = *c.samples;
  q.regularity.seed = c.seed;
  q.ladder = DeltaLadder(c.delta0, c.ratio, c.levels);
  q.scale = c.scale;
  if (c.a_bound) q.a_bound = *c.a_bound;
  q.margin_tol = c.margin_tol;
  q.coverage_targets = c.targets;
  q.solve.tol = c.tol;
  q.solve.max_iter = c.max_iter;
  q.solve.seed = c.seed;
  q.seed = c.seed;
  return q;
}

Outcome run_expand(const RunConfig& c, const PolynomialMap& map, const Vector& x) {
  const Evaluator f = map.evaluator();
  const DeltaLadder ladder(c.delta0, c.ratio, c.levels);
  const Expansion exact = exact_expansion(map, x, c.order);
  const Expansion fit = fit_expansion(f, x, c.order, FitOptions{ladder, *c.samples, c.seed});
  const auto directions = antipodal_sphere_points(map.dimension(), *c.samples, c.seed);
  const RemainderSlope slope = remainder_slope(f, fit, ladder, directions);
  Outcome o;
  o.exit_code = 0;
  o.status = "completed";
  o.message = slope.saturated ? "remainder saturated at the noise floor"
                              : "remainder log-log slope " + format_number(*slope.slope);
  o.results["exact"] = to_json(exact);
  o.results["fit"] = to_json(fit);
  o.results["coefficient_error"] = coefficient_error(fit, exact);
  o.results["remainder"] = to_json(slope);
  o.series["remainder"] = series(slope.profile);
  return o;
}

Outcome run_certify(const RunConfig& c, const PolynomialMap& map, const Vector& x) {
  const Evaluator f = map.evaluator();
  Outcome o;
  if (c.mode == "first") {
    FirstOrderOptions opts;
    opts.pairs_per_radius = *c.samples;
    opts.kappa = c.kappa;
    opts.coverage_targets = c.targets;
    opts.solve.tol = c.tol;
    opts.solve.max_iter = c.max_iter;
    opts.seed = c.seed;
    const FirstOrderCertificate cert = certify_first_order(f, exact_expansion(map, x, 1), opts);
    o.results["certificate"] = to_json(cert);
    std::vector<std::pair<double, double>> modulus;
    for (const auto& m : cert.modulus) modulus.emplace_back(m.radius, m.omega);
    o.series["modulus"] = series(modulus);
    o.status = to_string(cert.status);
    o.message = cert.reason;
    o.exit_code = cert.status == CertificateStatus::refused ? 1 : 0;
    return o;
  }
  const QuadraticCertificate cert = certify_quadratic(f, exact_expansion(map, x, 2), quadratic_options(c));
  o.results["certificate"] = to_json(cert);
  if (cert.remainder && cert.failed_stage != 1 && cert.failed_stage != 2) {
    o.series["remainder"] = series(cert.remainder->profile);
  }
  o.status = to_string(cert.status);
  o.message = cert.reason;
  o.exit_code = cert.usable() ? 0 : 1;
  return o;
}

Outcome run_invert(const RunConfig& c, const PolynomialMap& map, const Vector& x) {
  const Evaluator f = map.evaluator();
  const Vector target = parse_point(c.target, "--target");
  require_dimension(target.size(), map.dimension(), "--target");
  Outcome o;
  std::string mode = c.mode;
  if (mode == "auto") {
    const Expansion e = exact_expansion(map, x, 2);
    const double tol_l = 1e-8 * (1.0 + e.quadratic->norm());
    mode = e.linear.norm() <= tol_l ? "degenerate" : "regular";
  }
  o.results["method"] = mode;
  InverseSolution sol;
  if (mode == "regular") {
    sol = invert_regular(f, exact_jacobian(map, x), x, target, {c.tol, c.max_iter});
  } else {
    const QuadraticCertificate cert = certify_quadratic(f, exact_expansion(map, x, 2), quadratic_options(c));
    o.results["certificate"] = to_json(cert);
    if (!cert.usable()) {
      o.results["solution"] = nullptr;
      o.status = "refused";
      o.message = "quadratic certificate refused: " + cert.reason;
      o.exit_code = 1;
      return o;
    }
    sol = invert_degenerate(f, x, cert, target, {c.tol, c.max_iter, 8, c.seed});
  }
  o.results["solution"] = to_json(sol);
  o.status = to_string(sol.status);
  o.message = sol.message;
  if (sol.within_certified_range && !*sol.within_certified_range) {
    o.message += (o.message.empty() ? "" : "; ") + std::string("target lies outside the certified range");
  }
  o.exit_code = sol.converged() ? 0 : 1;
  return o;
}

Outcome run_sweep(const RunConfig& c, const PolynomialMap& map, const Vector& x) {
  const Evaluator f = map.evaluator();
  Outcome o;
  ScaleProperty property;
  if (c.property == "contraction") {
    property = contraction_property(f, x, exact_jacobian(map, x), *c.samples, c.kappa, c.seed);
  } else {
    const Expansion e = exact_expansion(map, x, 2);
    RegularityOptions r;
    r.seed = c.seed;
    const RegularityReport report = regularity_margin(*e.quadratic, r);
    o.results["regularity"] = to_json(report);
    if (!(report.c_hat > 0.0)) {
      o.status = "refused";
      o.message = "c_hat vanishes; no quadratic coverage to sweep";
      o.exit_code = 1;
      return o;
    }
    property = quadratic_coverage_property(f, x, *e.quadratic, report.c_hat, c.targets,
                                           {c.tol, c.max_iter, 8, c.seed}, c.seed);
  }
  const auto ladder = ascending_ladder(c.lo, c.hi, c.count);
  const SweepResult sweep = scale_sweep(property, ladder);
  o.results["sweep"] = to_json(sweep);
  std::vector<std::pair<double, double>> points;
  for (const auto& e : sweep.transcript) points.emplace_back(e.scale, e.value);
  o.series["sweep"] = series(points);
  if (sweep.largest_passing) {
    o.status = "passed";
    o.message = "largest passing scale " + format_number(*sweep.largest_passing);
    o.exit_code = 0;
  } else {
    o.status = "no_passing_scale";
    o.message = "no passing scale";
    o.exit_code = 1;
  }
  return o;
}

Outcome run_falsify(const RunConfig& c, const PolynomialMap& map, const Vector& x) {
  FalsifyOptions opts;
  opts.radius = c.radius;
  opts.samples = *c.samples;
  opts.collision_tol = c.collision_tol;
  opts.seed = c.seed;
  const InjectivityAudit audit = falsify_injectivity(map.evaluator(), x, opts);
  Outcome o;
  o.results["audit"] = to_json(audit);
  o.status = audit.clean ? "clean" : "collision";
  o.message = audit.clean ? "no collision found"
                          : std::to_string(audit.collisions.size()) + " collision witnesses found";
  o.exit_code = audit.clean ? 0 : 1;
  return o;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write '" + path + "'");
  out << content;
  if (!out) throw UsageError("cannot write '" + path + "'");
}

void add_common(CLI::App* sub, RunConfig& c) {
  sub->add_option("--map", c.map, "polynomial map file");
  sub->add_option("--point", c.point, "base point, comma-separated");
  sub->add_option("--delta0", c.delta0, "largest ladder scale");
  sub->add_option("--ratio", c.ratio, "ladder ratio in (0, 1)");
  sub->add_option("--levels", c.levels, "ladder levels");
  sub->add_option("--samples", c.samples, "primary sample count");
  sub->add_option("--seed", c.seed, "random seed");
  sub->add_option("--tol", c.tol, "solver residual tolerance");
  sub->add_option("--out", c.out, "JSON report path (stdout if absent)");
  sub->add_option("--csv", c.csv, "CSV output path");
  sub->add_option("--series", c.series, "series written to --csv");
  sub->add_option("--config", c.config, "JSON config file; its values win over flags");
  sub->add_flag("--normalize", c.normalize, "omit timings for byte-stable reports");
}

void add_certificate_options(CLI::App* sub, RunConfig& c) {
  sub->add_option("--targets", c.targets, "coverage spot-check targets");
  sub->add_option("--kappa", c.kappa, "contraction threshold");
  sub->add_option("--scale", c.scale, "quadratic scale d-bar");
  sub->add_option("--a-bound", c.a_bound, "bound a on base offsets");
  sub->add_option("--margin-tol", c.margin_tol, "minimum transversality margin");
  sub->add_option("--max-iter", c.max_iter, "solver iteration cap");
}

}  // namespace

int run(const std::vector<std::string>& args) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  RunConfig c;
  CLI::App app{"dilation expansions, invertibility certificates and local inversion", "magnify"};
  app.require_subcommand(1);
  auto* expand = app.add_subcommand("expand", "exact and fitted expansions with remainder diagnostics");
  auto* certify = app.add_subcommand("certify", "first-order or quadratic invertibility certificate");
  auto* invert = app.add_subcommand("invert", "local inversion at a target");
  auto* sweep = app.add_subcommand("sweep", "largest passing scale of a property");
  auto* falsify = app.add_subcommand("falsify", "search for injectivity counterexamples");
  for (auto* sub : {expand, certify, invert, sweep, falsify}) add_common(sub, c);
  expand->add_option("--order", c.order, "expansion order 1..3");
  for (auto* sub : {certify, invert, sweep}) add_certificate_options(sub, c);
  certify->add_option("--mode", c.mode, "first | quadratic");
  invert->add_option("--mode", c.mode, "auto | regular | degenerate");
  invert->add_option("--target", c.target, "target point, comma-separated");
  sweep->add_option("--property", c.property, "contraction | coverage");
  sweep->add_option("--lo", c.lo, "smallest scale");
  sweep->add_option("--hi", c.hi, "largest scale");
  sweep->add_option("--count", c.count, "number of scales");
  falsify->add_option("--radius", c.radius, "search radius");
  falsify->add_option("--collision-tol", c.collision_tol, "collision tolerance");

  PolynomialMap map = PolynomialMap::identity(1);
  Vector x;
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    CLI::App* sub = app.get_subcommands().front();
    c.command = sub->get_name();
    if (!c.config.empty()) merge_config_file(c, *sub);
    validate(c);
    map = load_map(c.map);
    x = parse_point(c.point, "--point");
    require_dimension(x.size(), map.dimension(), "--point");
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 2;
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  const double load_seconds = std::chrono::duration<double>(clock::now() - start).count();

  Outcome outcome;
  try {
    if (c.command == "expand") outcome = run_expand(c, map, x);
    if (c.command == "certify") outcome = run_certify(c, map, x);
    if (c.command == "invert") outcome = run_invert(c, map, x);
    if (c.command == "sweep") outcome = run_sweep(c, map, x);
    if (c.command == "falsify") outcome = run_falsify(c, map, x);
  } catch (const std::exception& e) {
    outcome = Outcome{};
    outcome.status = "error";
    outcome.message = e.what();
    outcome.results = {{"error", e.what()}};
  }
  const double total_seconds = std::chrono::duration<double>(clock::now() - start).count();

  Json report;
  report["tool"] = {{"name", "magnify"}, {"version", kToolVersion}};
  report["command"] = c.command;
  report["config"] = config_echo(c);
  report["map"] = {{"dimension", map.dimension()}, {"total_degree", map.total_degree()}, {"text", print_map(map)}};
  report["outcome"] = {{"exit_code", outcome.exit_code}, {"status", outcome.status}, {"message", outcome.message}};
  report["results"] = outcome.results;
  report["series"] = outcome.series;
  if (c.normalize) {
    report["timings"] = {{"normalized", true}};
  } else {
    report["timings"] = {{"normalized", false}, {"load_seconds", load_seconds}, {"total_seconds", total_seconds}};
  }

  try {
    const std::string text = dump_report(report);
    if (c.out.empty()) {
      std::cout << text;
    } else {
      write_file(c.out, text);
    }
    if (!c.csv.empty()) {
      std::ostringstream csv;
      emit_csv(report, c.series, csv);
      write_file(c.csv, csv.str());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  if (!c.out.empty()) std::cerr << c.command << ": " << outcome.status << " (" << outcome.message << ")\n";
  return outcome.exit_code;
}

}  // namespace magnify::cli
