#include <doctest.h>

#include <cstdlib>
#include <stdexcept>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "lowmach/io.hpp"

using namespace lowmach;

namespace {

bool has_error(const ConfigResult& r, const std::string& prefix) {
  for (const auto& e : r.errors)
    if (e.rfind(prefix, 0) == 0) return true;
  return false;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_SUITE("cli_io") {
  TEST_CASE("every experiment has a valid default configuration") {
    for (const auto& name : experiment_names()) {
      const auto r = parse_config("", name);
      REQUIRE_MESSAGE(r.config, name);
      CHECK(r.errors.empty());
      CHECK(r.config->experiment == name);
    }
  }

  TEST_CASE("minimal configuration") {
    const auto r = parse_config(R"({"experiment": "simulate", "params": {"eps": 0.2}})");
    REQUIRE(r.config);
    const auto c = simulate_config(*r.config);
    CHECK(c.eps == 0.2);
    CHECK(c.points == SimulateConfig{}.points);
  }

  TEST_CASE("eps equal to zero is reported at its key path") {
    const auto r = parse_config(R"({"params": {"eps": 0.0}})", "simulate");
    CHECK_FALSE(r.config);
    REQUIRE(r.errors.size() == 1);
    CHECK(r.errors[0].rfind("params.eps: ", 0) == 0);
  }

  TEST_CASE("unknown experiment lists the valid names") {
    const auto r = parse_config(R"({"experiment": "nope"})");
    REQUIRE(r.errors.size() == 1);
    for (const auto& name : experiment_names()) CHECK(r.errors[0].find(name) != std::string::npos);
    CHECK(has_error(parse_config(""), "experiment: missing value"));
  }

  TEST_CASE("syntax errors carry line and column") {
    const auto r = parse_config("{\n  \"params\": {\"eps\": 0.1,}\n}", "simulate");
    REQUIRE(r.errors.size() == 1);
    CHECK(r.errors[0].rfind("2:", 0) == 0);
    CHECK(r.errors[0].find("syntax error") != std::string::npos);
    CHECK(has_error(parse_config("[1, 2]", "simulate"), "1:1: "));
  }

  TEST_CASE("all semantic errors are collected") {
    const auto r = parse_config(R"({"params": {"eps": 2.0, "mu": -1.0}, "grid": {"points": 31}, "bogus": 1})",
                                "simulate");
    CHECK_FALSE(r.config);
    CHECK(has_error(r, "params.eps: "));
    CHECK(has_error(r, "params.mu: "));
    CHECK(has_error(r, "grid.points: "));
    CHECK(has_error(r, "bogus: unknown key"));
    CHECK(r.errors.size() == 4);
  }

  TEST_CASE("dotted overrides") {
    const auto r = parse_config(R"({"params": {"eps": 0.2}})", "simulate",
                                {{"params.eps", "0.3"}, {"stepper.scheme", "ars443"}, {"data.seed", "7"}});
    REQUIRE(r.config);
    const auto c = simulate_config(*r.config);
    CHECK(c.eps == 0.3);
    CHECK(c.scheme == Scheme::imex_ars443);
    CHECK(c.seed == 7u);
    CHECK(has_error(parse_config("", "simulate", {{"params.nothing", "1"}}), "params.nothing: unknown key"));
    CHECK(has_error(parse_config("", "simulate", {{"params.eps", "abc"}}), "params.eps: expected a number"));
    CHECK(has_error(parse_config("", "simulate", {{".eps", "1"}}), ".eps: malformed"));
  }

  TEST_CASE("output root from the environment") {
    ::setenv(kOutputRootVariable, "/tmp/lowmach-root", 1);
    const auto r = parse_config("", "sweep");
    REQUIRE(r.config);
    CHECK(r.config->output_directory == std::filesystem::path("/tmp/lowmach-root/sweep"));
    const auto abs = parse_config(R"({"output": {"directory": "/tmp/elsewhere"}})", "sweep");
    REQUIRE(abs.config);
    CHECK(abs.config->output_directory == std::filesystem::path("/tmp/elsewhere"));
  }

  TEST_CASE("config echo reproduces the run") {
    const auto first = parse_config(R"({"params": {"eps": [0.3, 0.15]}})", "sweep", {{"grid.points", "32"}});
    REQUIRE(first.config);
    const auto again = parse_config(first.config->echo.dump(), "");
    REQUIRE(again.config);
    CHECK(again.config->echo == first.config->echo);
    const auto a = sweep_config(*first.config), b = sweep_config(*again.config);
    CHECK(a.eps_list == b.eps_list);
    CHECK(a.points == 32);
    CHECK(b.points == 32);
  }

  TEST_CASE("numbers use seventeen significant digits") {
    CHECK(format_number(0.1) == "0.10000000000000001");
    CHECK(format_number(1.0) == "1");
    CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_number(std::numeric_limits<double>::quiet_NaN()) == "nan");
    for (double x : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300}) CHECK(std::stod(format_number(x)) == x);
  }

  TEST_CASE("CSV round trip is byte identical") {
    const std::vector<std::string> columns{"a", "b", "c"};
    const std::vector<std::vector<double>> rows{{0.1, 1.0 / 3.0, -7.0}, {1e-300, 2.0, std::numeric_limits<double>::infinity()}};
    const std::string text = to_csv(columns, rows);
    const CsvTable t = parse_csv(text);
    CHECK(t.columns == columns);
    CHECK(to_csv(t.columns, t.rows) == text);
    CHECK(to_csv(columns, {}) == "a,b,c\n");
    CHECK(parse_csv("a,b,c\n").rows.empty());
    CHECK_THROWS_AS(parse_csv("a,b\n1\n"), std::runtime_error);
  }

  TEST_CASE("summary and written files") {
    const auto dir = std::filesystem::temp_directory_path() / "lowmach_io_test";
    std::filesystem::remove_all(dir);
    auto r = parse_config("", "validate-model", {{"output.directory", "\"" + dir.string() + "\""}});
    REQUIRE(r.config);
    ExperimentReport report;
    report.name = "demo";
    report.columns = {"x", "y"};
    report.rows = {{1.0, 2.0}, {2.0, 4.0}};
    report.add_check("ok", true, 1.0, 2.0);
    report.metrics = {{"m", 3.0}};
    report.timings = {{"part", 0.5}};
    report.runtime_seconds = 1.5;
    report.plots.push_back({"demo_plot", "title", "x", "y", false, true, {{"s", {1.0, 2.0}, {2.0, 4.0}}}});

    const auto j = summary_json(report, *r.config);
    CHECK(j["passed"] == true);
    CHECK(j["config"] == r.config->echo);
    CHECK(j["build"].get<std::string>().find("lowmach") != std::string::npos);
    CHECK(j["timings"]["runtime_seconds"] == 1.5);
    CHECK(j["timings"]["part"] == 0.5);
    CHECK(j["checks"][0]["name"] == "ok");

    const auto written = write_report(report, *r.config);
    CHECK(written.size() == 3);
    CHECK(read_file(dir / "demo.csv") == "x,y\n1,2\n2,4\n");
    CHECK(read_file(dir / "demo_plot.svg").rfind("<svg", 0) == 0);
    const auto back = nlohmann::json::parse(read_file(dir / "demo.json"));
    CHECK(back["outputs"].size() == 2);
    std::filesystem::remove_all(dir);

    // A regular file where the directory should be.
    const auto blocker = std::filesystem::temp_directory_path() / "lowmach_io_blocker";
    std::ofstream(blocker) << "x";
    r.config->output_directory = blocker / "sub";
    CHECK_THROWS_AS(write_report(report, *r.config), std::runtime_error);
    std::filesystem::remove(blocker);
  }

  TEST_CASE("empty report writes a header-only table") {
    ExperimentReport report;
    report.name = "empty";
    report.columns = {"eps", "value"};
    CHECK(to_csv(report.columns, report.rows) == "eps,value\n");
    CHECK(report.passed());
  }
}
