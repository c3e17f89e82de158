#pragma once

#include <span>
#include <vector>

namespace rba::phys {

struct RbaConfig {
  bool enabled = true;
  double gamma = 0.999;
  double eta_star = 0.01;
  double c = 0.0;
  bool update_during_lbfgs = true;
};

/// Per-collocation-point multipliers, updated as an exponentially decayed
/// record of normalized residual magnitude:
///   lambda_i <- gamma * lambda_i + eta* |r_i| / max_j |r_j|,  then + c.
/// Starting from zero the multipliers stay in (0, eta*/(1-gamma) + c].
class RbaState {
 public:
  RbaState() = default;
  RbaState(std::size_t n, const RbaConfig& cfg);

  /// One update from this iteration's residual vector. When every residual
  /// magnitude is below 1e-30 the ratio term is skipped (no 0/0).
  void update(std::span<const double> residuals);

  std::span<const double> lambda() const { return lambda_; }
  std::vector<double>& mutable_lambda() { return lambda_; }
  const RbaConfig& config() const { return cfg_; }
  double upper_bound() const { return cfg_.eta_star / (1.0 - cfg_.gamma) + cfg_.c; }

  double max() const;
  double mean() const;

 private:
  std::vector<double> lambda_;
  RbaConfig cfg_;
};

}  // namespace rba::phys
