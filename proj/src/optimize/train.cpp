#include "rba/optimize/train.hpp"

#include <cmath>

#include "rba/common/error.hpp"

namespace rba::opt {

std::vector<double> flatten(const ad::ParamSet& params) {
  std::vector<double> flat;
  flat.reserve(params.scalar_count());
  for (const auto& t : params.tensors) flat.insert(flat.end(), t.v.begin(), t.v.end());
  return flat;
}

void unflatten(std::span<const double> flat, ad::ParamSet& params) {
  std::size_t k = 0;
  for (auto& t : params.tensors) {
    std::copy(flat.begin() + k, flat.begin() + k + t.v.size(), t.v.begin());
    k += t.v.size();
  }
  require(k == flat.size(), "unflatten: length mismatch");
}

std::vector<double> flatten_grad(const ad::ParamGradient& grad) {
  std::vector<double> flat;
  flat.reserve(grad.scalar_count());
  for (const auto& t : grad.tensors) flat.insert(flat.end(), t.v.begin(), t.v.end());
  return flat;
}

Trainer::Trainer(net::NetworkParams& net, phys::Evaluator& eval, const TrainConfig& cfg)
    : net_(net),
      eval_(eval),
      cfg_(cfg),
      adam_(net.params, cfg.adam),
      lbfgs_(net.params.scalar_count(), cfg.lbfgs),
      rba_(eval.n_interior(), cfg.rba),
      unit_lambda_(eval.n_interior(), 1.0),
      grad_(ad::ParamGradient::zeros_like(net.params)) {}

std::span<const double> Trainer::lambda_for_loss() const {
  return cfg_.rba.enabled ? rba_.lambda() : std::span<const double>(unit_lambda_);
}

bool Trainer::grad_finite(const ad::ParamGradient& g) const {
  for (const auto& t : g.tensors)
    for (double x : t.v)
      if (!std::isfinite(x)) return false;
  return true;
}

MetricRow Trainer::make_row(std::int64_t k, const phys::LossTerms& terms, double lr,
                            const TrainHooks& hooks) {
  MetricRow row;
  row.iteration = k;
  row.total = terms.total;
  row.residual_term = terms.residual;
  row.ic_term = terms.ic;
  row.bc_term = terms.bc;
  row.rel_l2 = hooks.rel_l2 ? hooks.rel_l2() : std::nan("");
  row.lr = lr;
  row.lambda_max = cfg_.rba.enabled ? rba_.max() : 1.0;
  row.lambda_mean = cfg_.rba.enabled ? rba_.mean() : 1.0;
  return row;
}

TrainStatus Trainer::run(const TrainHooks& hooks) {
  TrainStatus status;
  const std::int64_t total_iters = cfg_.adam_iters + cfg_.lbfgs_iters;

  auto emit_metric = [&](std::int64_t k, const phys::LossTerms& terms, double lr) {
    if (hooks.on_metric) hooks.on_metric(make_row(k, terms, lr, hooks));
  };

  if (iteration_ == 0) {
    last_terms_ = eval_.loss_only(lambda_for_loss(), cfg_.weights);
    emit_metric(0, last_terms_, lr_at(cfg_.adam.schedule, 0));
  }

  // Adam phase.
  while (iteration_ < cfg_.adam_iters) {
    const std::int64_t k = iteration_ + 1;
    auto residuals = eval_.forward_residuals();
    if (cfg_.rba.enabled) rba_.update(residuals);
    last_terms_ = eval_.backward_loss(lambda_for_loss(), cfg_.weights, grad_);
    if (!std::isfinite(last_terms_.total) || !grad_finite(grad_)) {
      status.aborted = true;
      status.iterations_done = iteration_;
      status.final_loss = last_terms_.total;
      return status;
    }
    const double lr = lr_at(cfg_.adam.schedule, adam_.step_count());
    adam_.step(net_.params, grad_);
    iteration_ = k;
    if (cfg_.metric_every > 0 && (k % cfg_.metric_every == 0 || k == total_iters)) {
      const auto terms = eval_.loss_only(lambda_for_loss(), cfg_.weights);
      emit_metric(k, terms, lr);
    }
    if (hooks.after_iteration) hooks.after_iteration(k);
  }

  // L-BFGS phase: multipliers update once per outer iteration and stay
  // frozen through the line search, so every trial sees the same objective.
  if (iteration_ < total_iters) {
    std::vector<double> x = flatten(net_.params);
    std::vector<double> g(x.size());

    auto objective = [&](std::span<const double> xs, std::span<double> gs) -> double {
      unflatten(xs, net_.params);
      const auto terms = eval_.loss_and_grad(lambda_for_loss(), cfg_.weights, grad_);
      auto flat = flatten_grad(grad_);
      std::copy(flat.begin(), flat.end(), gs.begin());
      return terms.total;
    };

    while (iteration_ < total_iters) {
      const std::int64_t k = iteration_ + 1;
      auto residuals = eval_.forward_residuals();
      if (cfg_.rba.enabled && cfg_.rba.update_during_lbfgs) rba_.update(residuals);
      last_terms_ = eval_.backward_loss(lambda_for_loss(), cfg_.weights, grad_);
      if (!std::isfinite(last_terms_.total) || !grad_finite(grad_)) {
        unflatten(x, net_.params);
        status.aborted = true;
        status.iterations_done = iteration_;
        status.final_loss = last_terms_.total;
        return status;
      }
      auto gflat = flatten_grad(grad_);
      std::copy(gflat.begin(), gflat.end(), g.begin());

      auto step = lbfgs_.step(x, last_terms_.total, g, objective);
      unflatten(x, net_.params);
      if (step.moved) {
        last_terms_.total = step.f;
      }
      iteration_ = k;
      if (cfg_.metric_every > 0 && (k % cfg_.metric_every == 0 || k == total_iters)) {
        const auto terms = eval_.loss_only(lambda_for_loss(), cfg_.weights);
        emit_metric(k, terms, 0.0);
      }
      if (hooks.after_iteration) hooks.after_iteration(k);
    }
  }

  status.iterations_done = iteration_;
  status.final_loss = last_terms_.total;
  return status;
}

}  // namespace rba::opt
