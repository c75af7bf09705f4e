#include "lowmach/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#ifndef LOWMACH_BUILD_STAMP
#define LOWMACH_BUILD_STAMP "unknown"
#endif

namespace lowmach {

using nlohmann::json;

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"simulate",          "sweep",          "verify-operators",
                                              "example42",         "limit-convergence", "acoustic-decay",
                                              "validate-model",    "linearized-probe"};
  return names;
}

std::string build_stamp() { return std::string("lowmach 0.1.0 (") + LOWMACH_BUILD_STAMP + ")"; }

namespace {

// ---------------------------------------------------------------------------
// Reading validated values out of the merged configuration

json::json_pointer pointer_of(const std::string& dotted) {
  std::string p;
  std::stringstream ss(dotted);
  std::string part;
  while (std::getline(ss, part, '.')) p += "/" + part;
  return json::json_pointer(p);
}

std::string show(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

struct Range {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool lo_open = false;
  bool hi_open = false;

  bool contains(double x) const {
    return (lo_open ? x > lo : x >= lo) && (hi_open ? x < hi : x <= hi);
  }
  std::string text() const {
    return std::string(lo_open ? "(" : "[") + show(lo) + ", " + show(hi) + (hi_open ? ")" : "]");
  }
};

constexpr Range kAny{};
constexpr Range kPositive{0.0, std::numeric_limits<double>::infinity(), true, false};
constexpr Range kNonnegative{0.0, std::numeric_limits<double>::infinity(), false, false};
constexpr Range kEps{0.0, 1.0, true, false};
constexpr Range kUnit{0.0, 1.0, false, false};

class Reader {
 public:
  Reader(const json& root, std::vector<std::string>& errors) : root_(root), errors_(errors) {}

  double number(const std::string& path, Range r = kAny) {
    const json* v = find(path);
    if (!v) return 0.0;
    if (!v->is_number()) {
      error(path, "expected a number");
      return 0.0;
    }
    const double x = v->get<double>();
    if (!std::isfinite(x) || !r.contains(x)) error(path, "must lie in " + r.text() + ", got " + show(x));
    return x;
  }

  int integer(const std::string& path, Range r = kAny) {
    const json* v = find(path);
    if (!v) return 0;
    if (!v->is_number_integer()) {
      error(path, "expected an integer");
      return 0;
    }
    const auto x = v->get<long long>();
    if (!r.contains(static_cast<double>(x))) error(path, "must lie in " + r.text() + ", got " + std::to_string(x));
    return static_cast<int>(x);
  }

  std::uint64_t seed(const std::string& path) {
    const json* v = find(path);
    if (!v) return 0;
    if (!v->is_number_unsigned()) {
      error(path, "expected a nonnegative integer");
      return 0;
    }
    return v->get<std::uint64_t>();
  }

  bool boolean(const std::string& path) {
    const json* v = find(path);
    if (!v) return false;
    if (!v->is_boolean()) {
      error(path, "expected true or false");
      return false;
    }
    return v->get<bool>();
  }

  std::string string(const std::string& path, const std::vector<std::string>& allowed = {}) {
    const json* v = find(path);
    if (!v) return {};
    if (!v->is_string()) {
      error(path, "expected a string");
      return {};
    }
    auto s = v->get<std::string>();
    if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), s) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      error(path, "unknown value '" + s + "' (expected one of: " + list + ")");
    }
    return s;
  }

  std::vector<double> numbers(const std::string& path, Range r = kAny) {
    std::vector<double> out;
    const json* v = find(path);
    if (!v) return out;
    if (!v->is_array() || v->empty()) {
      error(path, "expected a non-empty list of numbers");
      return out;
    }
    for (std::size_t i = 0; i < v->size(); ++i) {
      const json& x = (*v)[i];
      const std::string item = path + "[" + std::to_string(i) + "]";
      if (!x.is_number()) {
        error(item, "expected a number");
        continue;
      }
      const double d = x.get<double>();
      if (!std::isfinite(d) || !r.contains(d)) error(item, "must lie in " + r.text() + ", got " + show(d));
      out.push_back(d);
    }
    return out;
  }

  std::vector<int> integers(const std::string& path, Range r = kAny) {
    std::vector<int> out;
    const json* v = find(path);
    if (!v) return out;
    if (!v->is_array() || v->empty()) {
      error(path, "expected a non-empty list of integers");
      return out;
    }
    for (std::size_t i = 0; i < v->size(); ++i) {
      const json& x = (*v)[i];
      const std::string item = path + "[" + std::to_string(i) + "]";
      if (!x.is_number_integer() || !r.contains(x.get<double>())) {
        error(item, "expected an integer in " + r.text());
        continue;
      }
      out.push_back(x.get<int>());
    }
    return out;
  }

  std::vector<std::string> strings(const std::string& path, const std::vector<std::string>& allowed) {
    std::vector<std::string> out;
    const json* v = find(path);
    if (!v) return out;
    if (!v->is_array()) {
      error(path, "expected a list of strings");
      return out;
    }
    for (std::size_t i = 0; i < v->size(); ++i) {
      const json& x = (*v)[i];
      const std::string item = path + "[" + std::to_string(i) + "]";
      if (!x.is_string() || std::find(allowed.begin(), allowed.end(), x.get<std::string>()) == allowed.end()) {
        error(item, "expected one of the supported formats");
        continue;
      }
      out.push_back(x.get<std::string>());
    }
    return out;
  }

  void error(const std::string& path, const std::string& message) { errors_.push_back(path + ": " + message); }

  /// Reports every leaf of the configuration that no reader touched.
  void report_unknown_keys() { walk(root_, ""); }

 private:
  const json* find(const std::string& path) {
    seen_.insert(path);
    const auto ptr = pointer_of(path);
    if (!root_.contains(ptr)) {
      error(path, "missing value");
      return nullptr;
    }
    return &root_.at(ptr);
  }

  void walk(const json& node, const std::string& prefix) {
    if (!prefix.empty() && seen_.count(prefix)) return;
    if (node.is_object()) {
      for (auto it = node.begin(); it != node.end(); ++it)
        walk(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key());
      return;
    }
    if (!prefix.empty()) errors_.push_back(prefix + ": unknown key");
  }

  const json& root_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

// ---------------------------------------------------------------------------
// Block serializers

json law_json(const MaterialLaw& law) { return {{"coefficient", law.coefficient}, {"exponent", law.exponent}}; }

json gas_json(const PerfectGas& g) {
  return {{"preset", "perfect-gas"},
          {"R", g.R},
          {"C_V", g.C_V},
          {"alpha", g.alpha},
          {"conductivity", law_json(g.conductivity)},
          {"shear_viscosity", law_json(g.shear_viscosity)},
          {"bulk_viscosity", law_json(g.bulk_viscosity)}};
}

MaterialLaw read_law(Reader& r, const std::string& path, Range coefficient_range) {
  MaterialLaw law;
  law.coefficient = r.number(path + ".coefficient", coefficient_range);
  law.exponent = r.number(path + ".exponent");
  return law;
}

PerfectGas read_gas(Reader& r) {
  PerfectGas g;
  r.string("model.preset", {"perfect-gas"});
  g.R = r.number("model.R", kPositive);
  g.C_V = r.number("model.C_V", kPositive);
  g.alpha = r.number("model.alpha", kNonnegative);
  g.conductivity = read_law(r, "model.conductivity", kPositive);
  g.shear_viscosity = read_law(r, "model.shear_viscosity", kPositive);
  g.bulk_viscosity = read_law(r, "model.bulk_viscosity", kAny);
  if (g.shear_viscosity.coefficient > 0.0 && g.bulk_viscosity.coefficient + g.shear_viscosity.coefficient <= 0.0)
    r.error("model.bulk_viscosity.coefficient", "bulk plus shear viscosity must be positive");
  return g;
}

int read_points(Reader& r, const std::string& path) {
  const int n = r.integer(path, {8.0, 8192.0});
  if (n % 2 != 0) r.error(path, "must be even, got " + std::to_string(n));
  return n;
}

json stepper_json(Scheme scheme, double safety, double dt_max, double t_end) {
  return {{"scheme", to_string(scheme)}, {"safety", safety}, {"dt_max", dt_max}, {"t_end", t_end}};
}

Scheme read_scheme(Reader& r) {
  const std::string s = r.string("stepper.scheme", {"erk4", "ars443"});
  return s == "ars443" ? Scheme::imex_ars443 : Scheme::erk4_exponential;
}

void check_band(Reader& r, int band, int points) {
  if (band > points / 3) r.error("data.band", "must not exceed points / 3 = " + std::to_string(points / 3));
}

// ---------------------------------------------------------------------------
// Per-experiment blocks

json to_json(const OperatorSuiteConfig& c) {
  return {{"grid", {{"dim", c.dim}, {"points", c.points}}}, {"data", {{"seed", c.seed}, {"samples", c.samples}}}};
}

OperatorSuiteConfig read_operator_suite(Reader& r) {
  OperatorSuiteConfig c;
  c.dim = r.integer("grid.dim", {1, 3});
  c.points = read_points(r, "grid.points");
  c.seed = r.seed("data.seed");
  c.samples = r.integer("data.samples", {100, 1e6});
  return c;
}

json to_json(const Example42Config& c) {
  return {{"grid", {{"dim", c.dim}, {"points", c.points}}},
          {"model", {{"beta", c.beta}}},
          {"params", {{"eps", c.eps_list}}},
          {"stepper", {{"t_end", c.t_end}, {"step_fraction", c.step_fraction}}},
          {"data", {{"seed", c.seed}, {"band", c.band}}},
          {"options", {{"uniformity_ratio", c.uniformity_ratio}}}};
}

Example42Config read_example42(Reader& r) {
  Example42Config c;
  c.dim = r.integer("grid.dim", {1, 3});
  c.points = read_points(r, "grid.points");
  c.beta = r.number("model.beta", {1.0, std::numeric_limits<double>::infinity(), true, false});
  c.eps_list = r.numbers("params.eps", kEps);
  c.t_end = r.number("stepper.t_end", kPositive);
  c.step_fraction = r.number("stepper.step_fraction", kPositive);
  c.seed = r.seed("data.seed");
  c.band = r.integer("data.band", {1, 1e6});
  check_band(r, c.band, c.points);
  c.uniformity_ratio = r.number("options.uniformity_ratio", {1.0, 1e300});
  return c;
}

json to_json(const SweepConfig& c) {
  return {{"grid", {{"dim", c.dim}, {"points", c.points}}},
          {"model", gas_json(c.gas)},
          {"params", {{"eps", c.eps_list}, {"mu", c.mu_list}, {"kappa", c.kappa_list}}},
          {"stepper", stepper_json(c.scheme, c.safety, c.dt_max, c.t_end)},
          {"data", {{"seed", c.seed}, {"band", c.band}, {"m0", c.m0}, {"s", c.s}}},
          {"options", {{"ratio_threshold", c.ratio_threshold}}}};
}

SweepConfig read_sweep(Reader& r) {
  SweepConfig c;
  c.dim = r.integer("grid.dim", {1, 3});
  c.points = read_points(r, "grid.points");
  c.gas = read_gas(r);
  c.eps_list = r.numbers("params.eps", kEps);
  c.mu_list = r.numbers("params.mu", kUnit);
  c.kappa_list = r.numbers("params.kappa", kUnit);
  c.scheme = read_scheme(r);
  c.safety = r.number("stepper.safety", {0.0, 1.0, true, false});
  c.dt_max = r.number("stepper.dt_max", kPositive);
  c.t_end = r.number("stepper.t_end", kNonnegative);
  c.seed = r.seed("data.seed");
  c.band = r.integer("data.band", {1, 1e6});
  check_band(r, c.band, c.points);
  c.m0 = r.number("data.m0", kNonnegative);
  c.s = r.number("data.s", kNonnegative);
  c.ratio_threshold = r.number("options.ratio_threshold", {1.0, 1e300});
  return c;
}

json to_json(const SimulateConfig& c) {
  return {{"grid", {{"dim", c.dim}, {"points", c.points}}},
          {"model", gas_json(c.gas)},
          {"params", {{"eps", c.eps}, {"mu", c.mu}, {"kappa", c.kappa}}},
          {"stepper", stepper_json(c.scheme, c.safety, c.dt_max, c.t_end)},
          {"data", {{"seed", c.seed}, {"band", c.band}, {"m0", c.m0}, {"s", c.s}}}};
}

SimulateConfig read_simulate(Reader& r) {
  SimulateConfig c;
  c.dim = r.integer("grid.dim", {1, 3});
  c.points = read_points(r, "grid.points");
  c.gas = read_gas(r);
  c.eps = r.number("params.eps", kEps);
  c.mu = r.number("params.mu", kUnit);
  c.kappa = r.number("params.kappa", kUnit);
  c.scheme = read_scheme(r);
  c.safety = r.number("stepper.safety", {0.0, 1.0, true, false});
  c.dt_max = r.number("stepper.dt_max", kPositive);
  c.t_end = r.number("stepper.t_end", kNonnegative);
  c.seed = r.seed("data.seed");
  c.band = r.integer("data.band", {1, 1e6});
  check_band(r, c.band, c.points);
  c.m0 = r.number("data.m0", kNonnegative);
  c.s = r.number("data.s", kNonnegative);
  return c;
}

json to_json(const LimitConfig& c) {
  return {{"grid", {{"dim", c.dim}, {"points", c.points}}},
          {"model", gas_json(c.gas)},
          {"params", {{"eps", c.eps_list}, {"mu", c.mu}, {"kappa", c.kappa}}},
          {"stepper", {{"dt", c.dt}, {"t_end", c.t_end}}},
          {"data",
           {{"seed", c.seed},
            {"band", c.band},
            {"theta_amplitude", c.theta_amplitude},
            {"velocity_amplitude", c.velocity_amplitude},
            {"well_prepared", true}}},
          {"options", {{"s_prime", c.s_prime}, {"window_fraction", c.window_fraction}, {"contraction", c.contraction}}}};
}

LimitConfig read_limit(Reader& r) {
  LimitConfig c;
  c.dim = r.integer("grid.dim", {1, 3});
  c.points = read_points(r, "grid.points");
  c.gas = read_gas(r);
  c.eps_list = r.numbers("params.eps", kEps);
  c.mu = r.number("params.mu", kUnit);
  c.kappa = r.number("params.kappa", kUnit);
  c.dt = r.number("stepper.dt", kPositive);
  c.t_end = r.number("stepper.t_end", kPositive);
  c.seed = r.seed("data.seed");
  c.band = r.integer("data.band", {1, 1e6});
  check_band(r, c.band, c.points);
  c.theta_amplitude = r.number("data.theta_amplitude", kNonnegative);
  c.velocity_amplitude = r.number("data.velocity_amplitude", kNonnegative);
  if (!r.boolean("data.well_prepared"))
    r.error("data.well_prepared", "the convergence driver only supports well-prepared data");
  c.s_prime = r.number("options.s_prime", kNonnegative);
  c.window_fraction = r.number("options.window_fraction", {0.0, 0.5, true, false});
  c.contraction = r.number("options.contraction", kPositive);
  return c;
}

json to_json(const AcousticConfig& c) {
  return {{"grid", {{"dims", c.dims}, {"points_1d", c.points_1d}, {"points_2d", c.points_2d}, {"length", c.box_length}}},
          {"params", {{"eps", c.eps_list}}},
          {"stepper", {{"safety", c.safety}, {"t_end_over_eps", c.t_end_over_eps}, {"samples", c.samples}}},
          {"data",
           {{"window_radius", c.window_radius}, {"pulse_radius", c.pulse_radius}, {"bump_amplitude", c.bump_amplitude}}},
          {"options", {{"decay_threshold", c.decay_threshold}}}};
}

AcousticConfig read_acoustic(Reader& r) {
  AcousticConfig c;
  c.dims = r.integers("grid.dims", {1, 2});
  c.points_1d = read_points(r, "grid.points_1d");
  c.points_2d = read_points(r, "grid.points_2d");
  c.box_length = r.number("grid.length", kPositive);
  c.eps_list = r.numbers("params.eps", kEps);
  c.safety = r.number("stepper.safety", {0.0, 1.0, true, false});
  c.t_end_over_eps = r.number("stepper.t_end_over_eps", kPositive);
  c.samples = r.integer("stepper.samples", {1, 1e7});
  c.window_radius = r.number("data.window_radius", kPositive);
  c.pulse_radius = r.number("data.pulse_radius", kPositive);
  c.bump_amplitude = r.number("data.bump_amplitude", {-1.0, 1e300, true, false});
  c.decay_threshold = r.number("options.decay_threshold", kPositive);
  if (c.pulse_radius > 0.125 * c.box_length)
    r.error("data.pulse_radius", "pulse must lie in the central quarter of the box");
  if (!c.eps_list.empty()) {
    const double eps_min = *std::min_element(c.eps_list.begin(), c.eps_list.end());
    const double a_min = std::min(1.0, 1.0 + c.bump_amplitude);
    if (c.t_end_over_eps * eps_min >= 0.5 * c.box_length * eps_min * std::sqrt(std::max(a_min, 0.0)))
      r.error("stepper.t_end_over_eps", "final time must stay below half the box transit time");
  }
  return c;
}

json to_json(const LinearizedConfig& c) {
  return {{"grid", {{"dim", c.dim}, {"points", c.points}}},
          {"model", gas_json(c.gas)},
          {"params", {{"eps", c.eps_list}, {"mu", c.mu}, {"kappa", c.kappa}}},
          {"stepper", {{"t_end", c.t_end}}},
          {"data", {{"seed", c.seed}, {"band", c.band}, {"coefficient_amplitude", c.coefficient_amplitude}}},
          {"options",
           {{"growth_ratio", c.growth_ratio}, {"coercivity_samples", c.coercivity_samples}, {"coercivity_k1_min", c.coercivity_k1_min}}}};
}

LinearizedConfig read_linearized(Reader& r) {
  LinearizedConfig c;
  c.dim = r.integer("grid.dim", {1, 3});
  c.points = read_points(r, "grid.points");
  c.gas = read_gas(r);
  c.eps_list = r.numbers("params.eps", kEps);
  c.mu = r.number("params.mu", kUnit);
  c.kappa = r.number("params.kappa", kUnit);
  c.t_end = r.number("stepper.t_end", kPositive);
  c.seed = r.seed("data.seed");
  c.band = r.integer("data.band", {1, 1e6});
  check_band(r, c.band, c.points);
  c.coefficient_amplitude = r.number("data.coefficient_amplitude", kNonnegative);
  c.growth_ratio = r.number("options.growth_ratio", {1.0, 1e300});
  c.coercivity_samples = r.integer("options.coercivity_samples", {1, 1e6});
  c.coercivity_k1_min = r.number("options.coercivity_k1_min", kAny);
  return c;
}

json to_json(const ValidateModelConfig& c) {
  return {{"model", gas_json(c.gas)},
          {"options",
           {{"samples", c.samples},
            {"theta_min", c.box.theta_min},
            {"theta_max", c.box.theta_max},
            {"wp_min", c.box.wp_min},
            {"wp_max", c.box.wp_max}}}};
}

ValidateModelConfig read_validate(Reader& r) {
  ValidateModelConfig c;
  c.gas = read_gas(r);
  c.samples = r.integer("options.samples", {100, 1e5});
  c.box.theta_min = r.number("options.theta_min");
  c.box.theta_max = r.number("options.theta_max");
  c.box.wp_min = r.number("options.wp_min");
  c.box.wp_max = r.number("options.wp_max");
  if (!(c.box.theta_min < c.box.theta_max)) r.error("options.theta_max", "must exceed options.theta_min");
  if (!(c.box.wp_min < c.box.wp_max)) r.error("options.wp_max", "must exceed options.wp_min");
  return c;
}

// Reads the experiment block from `rc.echo`; throws when invalid.
template <class Read>
auto read_checked(const RunConfig& rc, Read read) {
  std::vector<std::string> errors;
  Reader r(rc.echo, errors);
  auto c = read(r);
  if (!errors.empty()) throw std::invalid_argument(errors.front());
  return c;
}

std::vector<std::string> validate_block(const std::string& experiment, const json& merged) {
  std::vector<std::string> errors;
  Reader r(merged, errors);
  r.string("experiment", experiment_names());
  r.strings("output.formats", {"csv", "json", "svg"});
  r.string("output.directory");
  if (experiment == "verify-operators") read_operator_suite(r);
  else if (experiment == "example42") read_example42(r);
  else if (experiment == "sweep") read_sweep(r);
  else if (experiment == "simulate") read_simulate(r);
  else if (experiment == "limit-convergence") read_limit(r);
  else if (experiment == "acoustic-decay") read_acoustic(r);
  else if (experiment == "linearized-probe") read_linearized(r);
  else if (experiment == "validate-model") read_validate(r);
  r.report_unknown_keys();
  return errors;
}

std::string line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return std::to_string(line) + ":" + std::to_string(column);
}

std::string available_experiments() {
  std::string s;
  for (const auto& n : experiment_names()) s += (s.empty() ? "" : ", ") + n;
  return s;
}

json parse_override_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return text;
  }
}

}  // namespace

json default_config(const std::string& experiment) {
  json j;
  if (experiment == "verify-operators") j = to_json(OperatorSuiteConfig{});
  else if (experiment == "example42") j = to_json(Example42Config{});
  else if (experiment == "sweep") j = to_json(SweepConfig{});
  else if (experiment == "simulate") j = to_json(SimulateConfig{});
  else if (experiment == "limit-convergence") j = to_json(LimitConfig{});
  else if (experiment == "acoustic-decay") j = to_json(AcousticConfig{});
  else if (experiment == "linearized-probe") j = to_json(LinearizedConfig{});
  else if (experiment == "validate-model") j = to_json(ValidateModelConfig{});
  else throw std::invalid_argument("unknown experiment '" + experiment + "' (available: " + available_experiments() + ")");
  j["experiment"] = experiment;
  j["output"] = {{"directory", experiment}, {"formats", {"csv", "json", "svg"}}};
  return j;
}

ConfigResult parse_config(const std::string& text, const std::string& experiment,
                          const std::vector<std::pair<std::string, std::string>>& overrides) {
  ConfigResult result;
  json user = json::object();
  const bool blank = text.find_first_not_of(" \t\r\n") == std::string::npos;
  if (!blank) {
    try {
      user = json::parse(text);
    } catch (const json::parse_error& e) {
      std::string what = e.what();
      const auto pos = what.find("error: ");
      result.errors.push_back(line_column(text, e.byte) + ": syntax error: " +
                              (pos == std::string::npos ? what : what.substr(pos + 7)));
      return result;
    }
    if (!user.is_object()) {
      result.errors.push_back("1:1: syntax error: configuration must be a JSON object");
      return result;
    }
  }

  std::string name = experiment;
  if (user.contains("experiment")) {
    if (!user["experiment"].is_string()) {
      result.errors.push_back("experiment: expected a string");
      return result;
    }
    const std::string given = user["experiment"].get<std::string>();
    if (name.empty()) name = given;
    else if (given != name)
      result.errors.push_back("experiment: config names '" + given + "' but the command runs '" + name + "'");
  }
  if (name.empty()) {
    result.errors.push_back("experiment: missing value (available: " + available_experiments() + ")");
    return result;
  }
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    result.errors.push_back("experiment: unknown experiment '" + name + "' (available: " + available_experiments() + ")");
    return result;
  }

  json merged = default_config(name);
  merged.merge_patch(user);
  merged["experiment"] = name;
  for (const auto& [key, value] : overrides) {
    if (key.empty() || key.front() == '.' || key.back() == '.') {
      result.errors.push_back(key + ": malformed override key");
      continue;
    }
    merged[pointer_of(key)] = parse_override_value(value);
  }

  auto errors = validate_block(name, merged);
  result.errors.insert(result.errors.end(), errors.begin(), errors.end());
  if (!result.errors.empty()) return result;

  RunConfig rc;
  rc.experiment = name;
  rc.echo = merged;
  rc.formats = merged["output"]["formats"].get<std::vector<std::string>>();
  std::filesystem::path dir = merged["output"]["directory"].get<std::string>();
  if (dir.is_relative()) {
    const char* root = std::getenv(kOutputRootVariable);
    dir = std::filesystem::path(root && *root ? root : "results") / dir;
  }
  rc.output_directory = dir;
  result.config = std::move(rc);
  return result;
}

OperatorSuiteConfig operator_suite_config(const RunConfig& rc) { return read_checked(rc, read_operator_suite); }
Example42Config example42_config(const RunConfig& rc) { return read_checked(rc, read_example42); }
SweepConfig sweep_config(const RunConfig& rc) { return read_checked(rc, read_sweep); }
LimitConfig limit_config(const RunConfig& rc) { return read_checked(rc, read_limit); }
AcousticConfig acoustic_config(const RunConfig& rc) { return read_checked(rc, read_acoustic); }
LinearizedConfig linearized_config(const RunConfig& rc) { return read_checked(rc, read_linearized); }
SimulateConfig simulate_config(const RunConfig& rc) { return read_checked(rc, read_simulate); }
ValidateModelConfig validate_model_config(const RunConfig& rc) { return read_checked(rc, read_validate); }

ExperimentReport run_experiment(const RunConfig& rc) {
  const std::string& e = rc.experiment;
  if (e == "verify-operators") return run_operator_suite(operator_suite_config(rc));
  if (e == "example42") return run_example42(example42_config(rc));
  if (e == "sweep") return run_uniform_sweep(sweep_config(rc));
  if (e == "simulate") return run_simulation(simulate_config(rc));
  if (e == "limit-convergence") return run_limit_convergence(limit_config(rc));
  if (e == "acoustic-decay") return run_acoustic_decay(acoustic_config(rc));
  if (e == "linearized-probe") return run_linearized_probe(linearized_config(rc));
  if (e == "validate-model") {
    const auto c = validate_model_config(rc);
    return run_validate_model(c.gas, c.box, c.samples);
  }
  throw std::invalid_argument("unknown experiment '" + e + "'");
}

// ---------------------------------------------------------------------------
// Writers

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string to_csv(const std::vector<std::string>& columns, const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
  out += "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + format_number(row[i]);
    out += "\n";
  }
  return out;
}

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> parts;
    std::string cell;
    std::stringstream ss(s);
    while (std::getline(ss, cell, ',')) parts.push_back(cell);
    if (!s.empty() && s.back() == ',') parts.emplace_back();
    return parts;
  };
  if (!std::getline(in, line)) return t;
  t.columns = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    for (const auto& cell : split(line)) {
      if (cell == "nan") row.push_back(std::numeric_limits<double>::quiet_NaN());
      else if (cell == "inf") row.push_back(std::numeric_limits<double>::infinity());
      else if (cell == "-inf") row.push_back(-std::numeric_limits<double>::infinity());
      else row.push_back(std::stod(cell));
    }
    if (row.size() != t.columns.size()) throw std::runtime_error("CSV row width does not match the header");
    t.rows.push_back(std::move(row));
  }
  return t;
}

namespace {

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

json summary_json(const ExperimentReport& report, const RunConfig& rc) {
  json checks = json::array();
  for (const auto& c : report.checks)
    checks.push_back({{"name", c.name},
                      {"passed", c.passed},
                      {"value", finite_or_null(c.value)},
                      {"threshold", finite_or_null(c.threshold)},
                      {"detail", c.detail}});
  json metrics = json::object();
  for (const auto& [k, v] : report.metrics) metrics[k] = finite_or_null(v);
  json timings = {{"runtime_seconds", report.runtime_seconds}};
  for (const auto& [k, v] : report.timings) timings[k] = v;
  return {{"experiment", report.name},
          {"passed", report.passed()},
          {"checks", checks},
          {"metrics", metrics},
          {"config", rc.echo},
          {"build", build_stamp()},
          {"timings", timings}};
}

namespace {

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  bool log = false;

  double map(double v) const { return log ? std::log10(v) : v; }
  double unit(double v) const { return (map(v) - lo) / (hi - lo); }
};

Axis make_axis(const std::vector<const std::vector<double>*>& data, bool log) {
  Axis a;
  a.log = log;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto* d : data)
    for (double v : *d) {
      if (!std::isfinite(v) || (log && v <= 0.0)) continue;
      lo = std::min(lo, a.map(v));
      hi = std::max(hi, a.map(v));
    }
  if (!std::isfinite(lo)) {
    lo = 0.0;
    hi = 1.0;
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  a.lo = lo;
  a.hi = hi;
  return a;
}

}  // namespace

std::string render_svg(const Plot& plot) {
  const double width = 640, height = 420, left = 80, right = 170, top = 40, bottom = 60;
  const double pw = width - left - right, ph = height - top - bottom;
  std::vector<const std::vector<double>*> xs, ys;
  for (const auto& s : plot.series) {
    xs.push_back(&s.x);
    ys.push_back(&s.y);
  }
  const Axis ax = make_axis(xs, plot.log_x);
  const Axis ay = make_axis(ys, plot.log_y);
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << left + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
     << escape_xml(plot.title) << "</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = i / 4.0;
    const double vx = ax.lo + fx * (ax.hi - ax.lo);
    const double vy = ay.lo + fx * (ay.hi - ay.lo);
    char bx[32], by[32];
    std::snprintf(bx, sizeof bx, "%.3g", ax.log ? std::pow(10.0, vx) : vx);
    std::snprintf(by, sizeof by, "%.3g", ay.log ? std::pow(10.0, vy) : vy);
    const double px = left + fx * pw;
    const double py = top + ph - fx * ph;
    os << "<line x1=\"" << px << "\" y1=\"" << top + ph << "\" x2=\"" << px << "\" y2=\"" << top + ph + 5
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << px << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">" << bx << "</text>\n";
    os << "<line x1=\"" << left - 5 << "\" y1=\"" << py << "\" x2=\"" << left << "\" y2=\"" << py
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << left - 8 << "\" y=\"" << py + 4 << "\" text-anchor=\"end\">" << by << "</text>\n";
  }
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 15 << "\" text-anchor=\"middle\">"
     << escape_xml(plot.x_label + (plot.log_x ? " (log)" : "")) << "</text>\n";
  os << "<text transform=\"translate(18," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << escape_xml(plot.y_label + (plot.log_y ? " (log)" : "")) << "</text>\n";
  for (std::size_t k = 0; k < plot.series.size(); ++k) {
    const auto& s = plot.series[k];
    const char* color = colors[k % 8];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if ((ax.log && s.x[i] <= 0.0) || (ay.log && s.y[i] <= 0.0)) continue;
      os << left + ax.unit(s.x[i]) * pw << "," << top + ph - ay.unit(s.y[i]) * ph << " ";
    }
    os << "\"/>\n";
    const double ly = top + 10 + 18.0 * static_cast<double>(k);
    os << "<line x1=\"" << left + pw + 10 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 30 << "\" y2=\"" << ly
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << left + pw + 35 << "\" y=\"" << ly + 4 << "\">" << escape_xml(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::vector<std::filesystem::path> write_report(const ExperimentReport& report, const RunConfig& rc) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(rc.output_directory, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + rc.output_directory.string() + ": " + ec.message());
  std::vector<fs::path> written;
  auto emit = [&](const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
    if (!out) throw std::runtime_error("cannot write " + p.string());
    written.push_back(p);
  };
  auto wants = [&](const char* f) { return std::find(rc.formats.begin(), rc.formats.end(), f) != rc.formats.end(); };
  const fs::path base = rc.output_directory / report.name;
  if (wants("csv")) emit(base.string() + ".csv", to_csv(report.columns, report.rows));
  if (wants("svg"))
    for (const auto& plot : report.plots) emit(rc.output_directory / (plot.file_stem + ".svg"), render_svg(plot));
  if (wants("json")) {
    json summary = summary_json(report, rc);
    json outputs = json::array();
    for (const auto& p : written) outputs.push_back(p.filename().string());
    summary["outputs"] = outputs;
    emit(base.string() + ".json", summary.dump(2) + "\n");
  }
  return written;
}

}  // namespace lowmach
