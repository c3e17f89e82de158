#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "rba/physics/problem.hpp"

namespace rba::phys {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Latin hypercube sample: one point per 1/n stratum in every dimension's
/// marginal, deterministic for a given seed.
std::vector<Point2> sample_latin_hypercube(int n, const std::array<Interval, 2>& bounds,
                                           std::uint64_t seed);

/// Evenly spaced n_a x n_b grid over the closed box, row-major (first axis
/// outer). A single-axis grid uses n_b = 1 and a degenerate second interval.
std::vector<Point2> sample_uniform_grid(int n_a, int n_b, const std::array<Interval, 2>& bounds);

/// Uniform grid truncated to exactly `total` points: the per-axis count is
/// ceil(sqrt(total)) and the row-major tail is dropped.
std::vector<Point2> sample_uniform_grid_total(int total, const std::array<Interval, 2>& bounds,
                                              int* per_axis = nullptr);

}  // namespace rba::phys
