#pragma once

#include <chrono>
#include <cstdint>
#include <vector>

#include "lowmach/experiments.hpp"
#include "lowmach/norms.hpp"

namespace lowmach::detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

/// Deterministic stream of sub-seeds derived from one master seed.
std::vector<std::uint64_t> sub_seeds(std::uint64_t seed, std::size_t count);

/// Random band-limited (p, v, theta), every component with unit L2 norm.
FlowState random_flow_state(const GridPtr& grid, std::uint64_t seed, int band);

FlowState scaled(const FlowState& u, double s);

/// Rescales u so that its initial-data norm for `a` equals m0.
FlowState normalized(const FlowState& u, const ParamTriple& a, double s, double m0);

double mean_of(const std::vector<double>& x);

}  // namespace lowmach::detail
