// Command-line front end: one subcommand per experiment driver.
//
// Exit codes: 0 when every check passes, 1 when a property check fails,
// 2 for usage or configuration errors.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "lowmach/io.hpp"

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;

struct Options {
  std::string config_path;
  std::uint64_t seed = 0;
  int points = 0;
  std::string preset;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// "--section.key value" and "--section.key=value" pairs left over by CLI11.
bool collect_overrides(const std::vector<std::string>& extras,
                       std::vector<std::pair<std::string, std::string>>& out, std::string& problem) {
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& token = extras[i];
    if (token.rfind("--", 0) != 0 || token.find('.') == std::string::npos) {
      problem = "unrecognized argument '" + token + "'";
      return false;
    }
    std::string key = token.substr(2);
    const auto eq = key.find('=');
    if (eq != std::string::npos) {
      out.emplace_back(key.substr(0, eq), key.substr(eq + 1));
      continue;
    }
    if (i + 1 >= extras.size()) {
      problem = "missing value for '" + token + "'";
      return false;
    }
    out.emplace_back(key, extras[++i]);
  }
  return true;
}

void print_report(const lowmach::ExperimentReport& report) {
  for (const auto& c : report.checks)
    std::printf("[%s] %-28s value %-12.6g threshold %-10.4g %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(),
                c.value, c.threshold, c.detail.c_str());
  std::printf("%s: %s in %.2f s\n", report.name.c_str(), report.passed() ? "PASS" : "FAIL",
              report.runtime_seconds);
}

int run(const std::string& experiment, const Options& opts, CLI::App& sub) {
  std::vector<std::pair<std::string, std::string>> overrides;
  std::string problem;
  if (!collect_overrides(sub.remaining(), overrides, problem)) {
    std::cerr << "error: " << problem << "\n" << sub.help();
    return kUsage;
  }
  if (sub.count("--seed")) overrides.insert(overrides.begin(), {"data.seed", std::to_string(opts.seed)});
  if (sub.count("--n")) overrides.insert(overrides.begin(), {"grid.points", std::to_string(opts.points)});
  if (!opts.preset.empty()) overrides.insert(overrides.begin(), {"model.preset", "\"" + opts.preset + "\""});

  std::string text;
  try {
    if (!opts.config_path.empty()) text = read_file(opts.config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  const auto parsed = lowmach::parse_config(text, experiment, overrides);
  if (!parsed.config) {
    std::cerr << "configuration errors:\n";
    for (const auto& e : parsed.errors) std::cerr << "  " << e << "\n";
    return kUsage;
  }
  const lowmach::RunConfig& rc = *parsed.config;
  lowmach::ExperimentReport report;
  try {
    report = lowmach::run_experiment(rc);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return kFail;
  }
  print_report(report);
  try {
    for (const auto& p : lowmach::write_report(report, rc)) std::printf("wrote %s\n", p.string().c_str());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return report.passed() ? kPass : kFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-Mach-number simulation and verification laboratory"};
  app.set_version_flag("--version", lowmach::build_stamp());
  app.require_subcommand(0, 1);

  const std::vector<std::pair<std::string, std::string>> commands{
      {"simulate", "Integrate the fluctuation system for one parameter triple"},
      {"sweep", "Composite norms over an (eps, mu, kappa) grid"},
      {"verify-operators", "Mollifier, Bessel-multiplier and commutator property suite"},
      {"example42", "Energy identities of the constant-coefficient example system"},
      {"limit-convergence", "Convergence to the limit system for well-prepared data"},
      {"acoustic-decay", "Local energy decay of the variable-coefficient wave equation"},
      {"validate-model", "Check the structural assumptions of a coefficient set"},
      {"linearized-probe", "Growth of the linearized system with frozen coefficients"}};

  std::vector<Options> options(commands.size());
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    CLI::App* sub = app.add_subcommand(commands[i].first, commands[i].second);
    sub->allow_extras();
    sub->add_option("--config", options[i].config_path, "JSON configuration file");
    sub->add_option("--seed", options[i].seed, "Random seed (data.seed)");
    sub->add_option("--n", options[i].points, "Grid points per direction (grid.points)");
    if (commands[i].first == "validate-model")
      sub->add_option("--preset", options[i].preset, "Coefficient set (model.preset)");
    sub->footer("Any configuration key can be overridden with --section.key value.\n"
                "Relative output directories are resolved under $" +
                std::string(lowmach::kOutputRootVariable) + " (default: results).");
    subs.push_back(sub);
  }

  if (argc < 2) {
    std::cerr << app.help();
    return kUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  for (std::size_t i = 0; i < subs.size(); ++i)
    if (subs[i]->parsed()) return run(commands[i].first, options[i], *subs[i]);
  std::cerr << app.help();
  return kUsage;
}
