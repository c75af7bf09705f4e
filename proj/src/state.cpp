#include "lowmach/state.hpp"

#include <algorithm>
#include <stdexcept>

namespace lowmach {

Bundle& axpy(Bundle& y, double a, const Bundle& x) {
  if (y.size() != x.size()) throw std::invalid_argument("bundle size mismatch");
  for (std::size_t c = 0; c < y.size(); ++c) {
    require_same_grid(y[c], x[c]);
    auto dst = y[c].coeffs();
    auto src = x[c].coeffs();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += a * src[i];
  }
  return y;
}

Bundle add(const Bundle& a, const Bundle& b) {
  Bundle out = a;
  return axpy(out, 1.0, b);
}

Bundle scaled(const Bundle& a, double s) {
  Bundle out = a;
  for (auto& f : out) f *= s;
  return out;
}

Bundle zeros_like(const Bundle& a) {
  Bundle out;
  out.reserve(a.size());
  for (const auto& f : a) out.emplace_back(f.grid_ptr());
  return out;
}

double max_abs(const Bundle& b) {
  double m = 0.0;
  for (const auto& f : b) m = std::max(m, f.max_abs());
  return m;
}

namespace {

template <class Head, class Tail>
Bundle pack_three(const Head& first, const std::vector<Field>& v, const Tail& last) {
  Bundle b;
  b.reserve(v.size() + 2);
  b.push_back(first);
  for (const auto& f : v) b.push_back(f);
  b.push_back(last);
  return b;
}

void check_three(const Bundle& b) {
  if (b.empty()) throw std::invalid_argument("empty bundle");
  const auto d = static_cast<std::size_t>(b[0].grid().dim());
  if (b.size() != d + 2) throw std::invalid_argument("bundle does not hold (scalar, vector, scalar)");
}

}  // namespace

FlowState FlowState::zero(const GridPtr& grid) {
  return {Field(grid), std::vector<Field>(static_cast<std::size_t>(grid->dim()), Field(grid)), Field(grid)};
}

Bundle FlowState::pack() const { return pack_three(p, v, theta); }

FlowState FlowState::unpack(const Bundle& b) {
  check_three(b);
  return {b.front(), std::vector<Field>(b.begin() + 1, b.end() - 1), b.back()};
}

Bundle PrimitiveState::pack() const { return pack_three(P, v, T); }

PrimitiveState PrimitiveState::unpack(const Bundle& b) {
  check_three(b);
  return {b.front(), std::vector<Field>(b.begin() + 1, b.end() - 1), b.back()};
}

Bundle SymmetrizedState::pack() const { return pack_three(rho, v, theta); }

SymmetrizedState SymmetrizedState::unpack(const Bundle& b) {
  check_three(b);
  return {b.front(), std::vector<Field>(b.begin() + 1, b.end() - 1), b.back()};
}

Bundle LimitState::pack() const {
  Bundle b = v;
  b.push_back(theta);
  return b;
}

LimitState LimitState::unpack(const Bundle& b) {
  if (b.empty() || b.size() != static_cast<std::size_t>(b[0].grid().dim()) + 1)
    throw std::invalid_argument("bundle does not hold (vector, scalar)");
  return {std::vector<Field>(b.begin(), b.end() - 1), b.back()};
}

}  // namespace lowmach
