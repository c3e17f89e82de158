#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "rba/optimize/adam.hpp"
#include "rba/optimize/lbfgs.hpp"
#include "rba/physics/evaluator.hpp"
#include "rba/physics/rba.hpp"

namespace rba::opt {

struct TrainConfig {
  std::int64_t adam_iters = 0;
  AdamConfig adam;
  std::int64_t lbfgs_iters = 0;
  Lbfgs::Config lbfgs;
  phys::RbaConfig rba;
  phys::LossWeights weights;
  std::int64_t metric_every = 100;
};

struct MetricRow {
  std::int64_t iteration = 0;
  double total = 0.0, residual_term = 0.0, ic_term = 0.0, bc_term = 0.0;
  double rel_l2 = 0.0;
  double lr = 0.0;  // 0 during L-BFGS
  double lambda_max = 0.0, lambda_mean = 0.0;
};

struct TrainHooks {
  /// Relative L2 of the current parameters against the reference field;
  /// called at metric cadence. Optional.
  std::function<double()> rel_l2;
  std::function<void(const MetricRow&)> on_metric;
  /// Called after each iteration with the iteration index just finished;
  /// diagnostics and checkpoint cadences hang off this.
  std::function<void(std::int64_t)> after_iteration;
};

struct TrainStatus {
  bool aborted = false;            // non-finite loss or gradient
  std::int64_t iterations_done = 0;
  double final_loss = 0.0;
};

std::vector<double> flatten(const ad::ParamSet& params);
void unflatten(std::span<const double> flat, ad::ParamSet& params);
std::vector<double> flatten_grad(const ad::ParamGradient& grad);

/// Runs the full training loop: per iteration, evaluate the residuals at the
/// current parameters, update the multipliers, form the composite loss with
/// the fresh multipliers, and take one optimizer step. The Adam phase runs
/// first, then L-BFGS outer iterations with the multipliers frozen during
/// each line search. Fully deterministic for fixed inputs.
class Trainer {
 public:
  Trainer(net::NetworkParams& net, phys::Evaluator& eval, const TrainConfig& cfg);

  /// Runs until the configured budget is exhausted (or abort).
  TrainStatus run(const TrainHooks& hooks);

  std::int64_t iteration() const { return iteration_; }
  void set_iteration(std::int64_t k) { iteration_ = k; }
  AdamState& adam() { return adam_; }
  Lbfgs& lbfgs() { return lbfgs_; }
  phys::RbaState& rba() { return rba_; }
  const phys::LossTerms& last_terms() const { return last_terms_; }
  const TrainConfig& config() const { return cfg_; }
  std::span<const double> lambda_for_loss() const;

 private:
  MetricRow make_row(std::int64_t k, const phys::LossTerms& terms, double lr,
                     const TrainHooks& hooks);
  bool grad_finite(const ad::ParamGradient& g) const;

  net::NetworkParams& net_;
  phys::Evaluator& eval_;
  TrainConfig cfg_;
  AdamState adam_;
  Lbfgs lbfgs_;
  phys::RbaState rba_;
  std::vector<double> unit_lambda_;
  ad::ParamGradient grad_;
  phys::LossTerms last_terms_;
  std::int64_t iteration_ = 0;
};

}  // namespace rba::opt
