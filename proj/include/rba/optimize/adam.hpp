#pragma once

#include <cmath>
#include <cstdint>

#include "rba/autodiff/tape.hpp"

namespace rba::opt {

/// lr(k) = lr0 * decay_rate^(k / decay_step), continuous exponent by
/// default; staircase mode floors the exponent.
struct LrSchedule {
  double lr0 = 1e-3;
  double decay_rate = 1.0;
  int decay_step = 1;
  bool staircase = false;
};

double lr_at(const LrSchedule& schedule, std::int64_t k);

/// Standard Adam with bias correction.
struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  LrSchedule schedule;
};

class AdamState {
 public:
  AdamState() = default;
  AdamState(const ad::ParamSet& params, const AdamConfig& cfg);

  /// One update; the learning rate is taken from the schedule at the current
  /// step count (0 for the first call). Throws on non-finite gradients.
  void step(ad::ParamSet& params, const ad::ParamGradient& grad);

  std::int64_t step_count() const { return step_; }
  const AdamConfig& config() const { return cfg_; }
  ad::ParamGradient& moments1() { return m_; }
  ad::ParamGradient& moments2() { return v_; }
  void set_step_count(std::int64_t s) { step_ = s; }

 private:
  AdamConfig cfg_;
  ad::ParamGradient m_, v_;
  std::int64_t step_ = 0;
};

}  // namespace rba::opt
