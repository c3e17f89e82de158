#include "rba/physics/sampling.hpp"

#include <cmath>
#include <numeric>

#include "rba/common/error.hpp"
#include "rba/common/rng.hpp"

namespace rba::phys {

std::vector<Point2> sample_latin_hypercube(int n, const std::array<Interval, 2>& bounds,
                                           std::uint64_t seed) {
  require(n >= 1, "latin hypercube: n must be positive");
  for (const auto& b : bounds) require(b.hi > b.lo, "latin hypercube: empty bounds");
  Rng rng(seed);

  std::vector<std::vector<double>> coords(2, std::vector<double>(n));
  for (int d = 0; d < 2; ++d) {
    std::vector<int> strata(n);
    std::iota(strata.begin(), strata.end(), 0);
    rng.shuffle(strata);
    for (int i = 0; i < n; ++i) {
      double u = (strata[i] + rng.uniform01()) / n;
      coords[d][i] = bounds[d].lo + (bounds[d].hi - bounds[d].lo) * u;
    }
  }
  std::vector<Point2> pts(n);
  for (int i = 0; i < n; ++i) pts[i] = {coords[0][i], coords[1][i]};
  return pts;
}

std::vector<Point2> sample_uniform_grid(int n_a, int n_b, const std::array<Interval, 2>& bounds) {
  require(n_a >= 1 && n_b >= 1, "uniform grid: counts must be positive");
  auto coord = [](const Interval& iv, int i, int n) {
    return n == 1 ? iv.lo : iv.lo + (iv.hi - iv.lo) * i / (n - 1);
  };
  std::vector<Point2> pts;
  pts.reserve(static_cast<std::size_t>(n_a) * n_b);
  for (int i = 0; i < n_a; ++i)
    for (int j = 0; j < n_b; ++j)
      pts.push_back({coord(bounds[0], i, n_a), coord(bounds[1], j, n_b)});
  return pts;
}

std::vector<Point2> sample_uniform_grid_total(int total, const std::array<Interval, 2>& bounds,
                                              int* per_axis) {
  require(total >= 1, "uniform grid: total must be positive");
  int n = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(total))));
  if (per_axis) *per_axis = n;
  auto pts = sample_uniform_grid(n, n, bounds);
  pts.resize(total);
  return pts;
}

}  // namespace rba::phys
