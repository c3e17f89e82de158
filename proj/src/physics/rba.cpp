#include "rba/physics/rba.hpp"

#include <cmath>

#include "rba/common/error.hpp"

namespace rba::phys {

RbaState::RbaState(std::size_t n, const RbaConfig& cfg) : lambda_(n, 0.0), cfg_(cfg) {
  require(cfg.gamma > 0.0 && cfg.gamma < 1.0, "rba: gamma must lie in (0, 1)");
  require(cfg.eta_star > 0.0, "rba: eta* must be positive");
  require(cfg.c >= 0.0, "rba: c must be non-negative");
}

void RbaState::update(std::span<const double> residuals) {
  require(residuals.size() == lambda_.size(), "rba: residual count mismatch");
  double max_abs = 0.0;
  for (double r : residuals) max_abs = std::max(max_abs, std::fabs(r));

  if (max_abs < 1e-30) {
    for (double& l : lambda_) l = cfg_.gamma * l + cfg_.c;
    return;
  }
  const double scale = cfg_.eta_star / max_abs;
  for (std::size_t i = 0; i < lambda_.size(); ++i)
    lambda_[i] = cfg_.gamma * lambda_[i] + scale * std::fabs(residuals[i]) + cfg_.c;
}

double RbaState::max() const {
  double m = 0.0;
  for (double l : lambda_) m = std::max(m, l);
  return m;
}

double RbaState::mean() const {
  if (lambda_.empty()) return 0.0;
  double s = 0.0;
  for (double l : lambda_) s += l;
  return s / static_cast<double>(lambda_.size());
}

}  // namespace rba::phys
