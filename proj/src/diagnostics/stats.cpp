#include "rba/diagnostics/stats.hpp"

#include <algorithm>

namespace rba::diag {

WeightStats weight_stats(const phys::RbaState& rba) {
  WeightStats s;
  s.histogram.assign(64, 0);
  s.max = rba.max();
  s.mean = rba.mean();
  const double upper = rba.upper_bound();
  for (double l : rba.lambda()) {
    int bin = static_cast<int>(l / upper * 64.0);
    bin = std::clamp(bin, 0, 63);
    ++s.histogram[bin];
  }
  return s;
}

std::vector<double> running_min(std::span<const double> series) {
  std::vector<double> out;
  out.reserve(series.size());
  double best = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    best = i == 0 ? series[i] : std::min(best, series[i]);
    out.push_back(best);
  }
  return out;
}

}  // namespace rba::diag
