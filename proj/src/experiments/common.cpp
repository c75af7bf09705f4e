#include "common.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "lowmach/experiments.hpp"

namespace lowmach {

bool ExperimentReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

CheckResult& ExperimentReport::add_check(std::string check_name, bool ok, double value, double threshold,
                                         std::string detail) {
  checks.push_back({std::move(check_name), ok, value, threshold, std::move(detail)});
  return checks.back();
}

const CheckResult* ExperimentReport::find_check(const std::string& check_name) const {
  for (const auto& c : checks)
    if (c.name == check_name) return &c;
  return nullptr;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("slope fit needs two or more points");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace detail {

std::vector<std::uint64_t> sub_seeds(std::uint64_t seed, std::size_t count) {
  std::mt19937_64 gen(seed);
  std::vector<std::uint64_t> out(count);
  for (auto& s : out) s = gen();
  return out;
}

FlowState random_flow_state(const GridPtr& grid, std::uint64_t seed, int band) {
  const auto seeds = sub_seeds(seed, static_cast<std::size_t>(grid->dim()) + 2);
  std::vector<Field> v;
  for (int i = 0; i < grid->dim(); ++i)
    v.push_back(random_band_limited_field(seeds[static_cast<std::size_t>(i) + 1], grid, band, 0.0, 1.0));
  return {random_band_limited_field(seeds[0], grid, band, 0.0, 1.0), std::move(v),
          random_band_limited_field(seeds.back(), grid, band, 0.0, 1.0)};
}

FlowState scaled(const FlowState& u, double s) { return FlowState::unpack(lowmach::scaled(u.pack(), s)); }

FlowState normalized(const FlowState& u, const ParamTriple& a, double s, double m0) {
  const double n = initial_norm(u, a, s);
  if (n == 0.0) return u;
  return scaled(u, m0 / n);
}

double mean_of(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

}  // namespace detail
}  // namespace lowmach
