#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lowmach/experiments.hpp"

namespace lowmach {

/// Names accepted in the "experiment" key, in CLI order.
const std::vector<std::string>& experiment_names();

/// A validated run description. `echo` is the complete configuration with all
/// defaults filled in; feeding it back reproduces the run.
struct RunConfig {
  std::string experiment;
  nlohmann::json echo;
  std::filesystem::path output_directory;
  std::vector<std::string> formats;
};

struct ConfigResult {
  std::optional<RunConfig> config;
  /// Every problem found, each prefixed by a key path or a line:column.
  std::vector<std::string> errors;
};

/// Full default configuration of one experiment.
nlohmann::json default_config(const std::string& experiment);

/// Parses JSON text (may be empty), merges it over the defaults of
/// `experiment` (or of its "experiment" key when `experiment` is empty),
/// applies "section.key" overrides and validates everything.
ConfigResult parse_config(const std::string& text, const std::string& experiment = {},
                          const std::vector<std::pair<std::string, std::string>>& overrides = {});

OperatorSuiteConfig operator_suite_config(const RunConfig& rc);
Example42Config example42_config(const RunConfig& rc);
SweepConfig sweep_config(const RunConfig& rc);
LimitConfig limit_config(const RunConfig& rc);
AcousticConfig acoustic_config(const RunConfig& rc);
LinearizedConfig linearized_config(const RunConfig& rc);
SimulateConfig simulate_config(const RunConfig& rc);
struct ValidateModelConfig {
  PerfectGas gas;
  SampleBox box;
  int samples = 100;
};
ValidateModelConfig validate_model_config(const RunConfig& rc);

/// Runs the experiment named in the config.
ExperimentReport run_experiment(const RunConfig& rc);

/// Version plus `git describe` output captured at configure time.
std::string build_stamp();

/// Environment variable naming the root directory for relative output paths.
inline constexpr const char* kOutputRootVariable = "LOWMACH_OUTPUT_ROOT";

/// Formats with 17 significant digits.
std::string format_number(double x);

std::string to_csv(const std::vector<std::string>& columns, const std::vector<std::vector<double>>& rows);
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};
CsvTable parse_csv(const std::string& text);

nlohmann::json summary_json(const ExperimentReport& report, const RunConfig& rc);

std::string render_svg(const Plot& plot);

/// Writes <name>.csv, <name>.json and one SVG per plot into the output
/// directory; returns the written paths. Throws std::runtime_error when the
/// directory cannot be written.
std::vector<std::filesystem::path> write_report(const ExperimentReport& report, const RunConfig& rc);

}  // namespace lowmach
