#include "rba/optimize/adam.hpp"

#include "rba/common/error.hpp"

namespace rba::opt {

double lr_at(const LrSchedule& schedule, std::int64_t k) {
  require(k >= 0, "lr_at: negative iteration");
  double exponent = static_cast<double>(k) / schedule.decay_step;
  if (schedule.staircase) exponent = std::floor(exponent);
  return schedule.lr0 * std::pow(schedule.decay_rate, exponent);
}

AdamState::AdamState(const ad::ParamSet& params, const AdamConfig& cfg)
    : cfg_(cfg),
      m_(ad::ParamGradient::zeros_like(params)),
      v_(ad::ParamGradient::zeros_like(params)) {}

void AdamState::step(ad::ParamSet& params, const ad::ParamGradient& grad) {
  const double lr = lr_at(cfg_.schedule, step_);
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));

  for (std::size_t t = 0; t < params.tensors.size(); ++t) {
    auto& p = params.tensors[t].v;
    const auto& g = grad.tensors[t].v;
    auto& m = m_.tensors[t].v;
    auto& v = v_.tensors[t].v;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (!std::isfinite(g[i]))
        fail("adam: non-finite gradient in tensor " + params.tensors[t].name);
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
    }
  }
}

}  // namespace rba::opt
