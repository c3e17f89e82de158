#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rba/physics/rba.hpp"

namespace rba::diag {

struct WeightStats {
  double max = 0.0;
  double mean = 0.0;
  std::vector<std::int64_t> histogram;  // 64 bins over [0, upper bound]
};

WeightStats weight_stats(const phys::RbaState& rba);

/// Elementwise prefix minimum.
std::vector<double> running_min(std::span<const double> series);

}  // namespace rba::diag
