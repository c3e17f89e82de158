#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rba/common/rng.hpp"
#include "rba/network/forward.hpp"
#include "rba/optimize/train.hpp"
#include "rba/physics/sampling.hpp"

using namespace rba;
using ad::ParamGradient;
using ad::ParamSet;

TEST_CASE("learning-rate schedule") {
  opt::LrSchedule s{1e-3, 0.9, 5000, false};
  CHECK(opt::lr_at(s, 0) == 1e-3);
  CHECK(opt::lr_at(s, 5000) == doctest::Approx(0.9e-3).epsilon(1e-14));
  CHECK(opt::lr_at(s, 10000) == doctest::Approx(0.81e-3).epsilon(1e-14));
  CHECK(opt::lr_at(s, 2500) == doctest::Approx(1e-3 * std::sqrt(0.9)).epsilon(1e-14));

  opt::LrSchedule stair{1e-3, 0.9, 5000, true};
  CHECK(opt::lr_at(stair, 2500) == 1e-3);
  CHECK(opt::lr_at(stair, 5000) == doctest::Approx(0.9e-3));
}

TEST_CASE("adam steps") {
  ParamSet params;
  const int w = params.add("w", 1, 1);
  params.tensors[w].v[0] = 1.0;
  opt::AdamConfig cfg;
  cfg.schedule = {1e-2, 1.0, 1, false};

  SUBCASE("zero gradient leaves parameters unchanged") {
    opt::AdamState adam(params, cfg);
    ParamGradient g = ParamGradient::zeros_like(params);
    adam.step(params, g);
    CHECK(params.tensors[w].v[0] == 1.0);
    CHECK(adam.step_count() == 1);
  }

  SUBCASE("first step is -lr * g / (|g| + eps)") {
    opt::AdamState adam(params, cfg);
    ParamGradient g = ParamGradient::zeros_like(params);
    g.tensors[w].v[0] = -3.7;
    adam.step(params, g);
    const double expect = 1.0 - 1e-2 * (-3.7) / (std::fabs(-3.7) + 1e-8);
    CHECK(params.tensors[w].v[0] == doctest::Approx(expect).epsilon(1e-15));
  }

  SUBCASE("two steps with a constant gradient follow the hand recurrence") {
    opt::AdamState adam(params, cfg);
    ParamGradient g = ParamGradient::zeros_like(params);
    const double grad = 0.8;
    g.tensors[w].v[0] = grad;

    double m = 0.0, v = 0.0, x = 1.0;
    for (int k = 1; k <= 2; ++k) {
      m = 0.9 * m + 0.1 * grad;
      v = 0.999 * v + 0.001 * grad * grad;
      const double mh = m / (1.0 - std::pow(0.9, k));
      const double vh = v / (1.0 - std::pow(0.999, k));
      x -= 1e-2 * mh / (std::sqrt(vh) + 1e-8);
      adam.step(params, g);
      CHECK(params.tensors[w].v[0] == doctest::Approx(x).epsilon(1e-15));
    }
  }

  SUBCASE("non-finite gradient aborts the step") {
    opt::AdamState adam(params, cfg);
    ParamGradient g = ParamGradient::zeros_like(params);
    g.tensors[w].v[0] = std::nan("");
    CHECK_THROWS_AS(adam.step(params, g), Error);
  }
}

TEST_CASE("lbfgs on the scalar quadratic w^2/2") {
  opt::Lbfgs lbfgs(1, {});
  std::vector<double> x = {5.0};
  std::vector<double> g = {5.0};
  auto objective = [](std::span<const double> xs, std::span<double> gs) {
    gs[0] = xs[0];
    return 0.5 * xs[0] * xs[0];
  };
  double f = 12.5;
  int iters = 0;
  for (; iters < 3; ++iters) {
    auto r = lbfgs.step(x, f, g, objective);
    f = r.f;
    if (std::fabs(x[0]) < 1e-8) break;
  }
  CHECK(std::fabs(x[0]) < 1e-8);
  CHECK(iters < 3);
}

TEST_CASE("lbfgs on 2-d Rosenbrock") {
  auto objective = [](std::span<const double> x, std::span<double> g) {
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    g[0] = -2.0 * a - 400.0 * x[0] * b;
    g[1] = 200.0 * b;
    return a * a + 100.0 * b * b;
  };
  std::vector<double> x = {-1.2, 1.0};
  std::vector<double> g(2);
  double f = objective(x, g);
  opt::Lbfgs lbfgs(2, {});
  int iters = 0;
  for (; iters < 100 && f > 1e-10; ++iters) {
    auto r = lbfgs.step(x, f, g, objective);
    f = r.f;
    if (r.converged) break;
  }
  CHECK(f < 1e-10);
  CHECK(iters < 100);
}

TEST_CASE("lbfgs with zero gradient reports convergence without moving") {
  opt::Lbfgs lbfgs(2, {});
  std::vector<double> x = {1.0, -2.0};
  std::vector<double> g = {0.0, 0.0};
  auto objective = [](std::span<const double>, std::span<double> gs) {
    gs[0] = gs[1] = 0.0;
    return 3.0;
  };
  auto r = lbfgs.step(x, 3.0, g, objective);
  CHECK(r.converged);
  CHECK(!r.moved);
  CHECK(x[0] == 1.0);
  CHECK(x[1] == -2.0);
}

namespace {

struct ToySetup {
  net::NetworkParams network;
  phys::CollocationSet colloc;
  phys::ProblemConfig problem;

  ToySetup() : network(net::xavier_init({2, 4, 1, 1, false}, 13)) {
    colloc.interior = {{0.25, -0.5}, {0.75, 0.5}};
    problem.kind = phys::ProblemKind::allen_cahn;
  }
};

}  // namespace

TEST_CASE("train for zero iterations leaves the initialization untouched") {
  ToySetup toy;
  auto before = opt::flatten(toy.network.params);
  phys::Evaluator eval(toy.network, toy.problem, toy.colloc);
  opt::TrainConfig cfg;
  cfg.adam_iters = 0;
  cfg.metric_every = 1;
  opt::Trainer trainer(toy.network, eval, cfg);
  std::vector<opt::MetricRow> log;
  opt::TrainHooks hooks;
  hooks.on_metric = [&](const opt::MetricRow& row) { log.push_back(row); };
  auto status = trainer.run(hooks);
  CHECK(!status.aborted);
  CHECK(status.iterations_done == 0);
  CHECK(opt::flatten(toy.network.params) == before);
  REQUIRE(log.size() == 1);  // the initial row
  CHECK(log[0].iteration == 0);
  CHECK(log[0].residual_term == 0.0);  // multipliers start at zero
}

TEST_CASE("one training iteration matches a hand-executed trace") {
  ToySetup toy;
  auto params0 = toy.network.params;  // copy of the initialization

  phys::Evaluator eval(toy.network, toy.problem, toy.colloc);
  opt::TrainConfig cfg;
  cfg.adam_iters = 1;
  cfg.adam.schedule = {1e-3, 1.0, 1, false};
  cfg.metric_every = 1;
  opt::Trainer trainer(toy.network, eval, cfg);

  // Independent trace. Residuals at the two points via single-point jets:
  auto residual_at = [](const net::NetworkParams& nw, double t, double x) {
    const double pt[] = {t, x};
    const ad::Jet2 jt = net::forward_point_jet(nw, {}, pt, 0);
    const ad::Jet2 jx = net::forward_point_jet(nw, {}, pt, 1);
    return phys::allen_cahn_residual(jt.v, jt.d1, jx.d2);
  };
  const double r0 = residual_at(toy.network, 0.25, -0.5);
  const double r1 = residual_at(toy.network, 0.75, 0.5);
  // Multiplier update from zero: lambda = eta* |r| / max|r|.
  const double rmax = std::max(std::fabs(r0), std::fabs(r1));
  const double l0 = 0.01 * std::fabs(r0) / rmax;
  const double l1 = 0.01 * std::fabs(r1) / rmax;
  const double expected_loss = 0.5 * (l0 * r0 * l0 * r0 + l1 * r1 * l1 * r1);

  // Loss gradient by central differences over every parameter.
  auto loss_of = [&](net::NetworkParams& nw) {
    const double a0 = l0 * residual_at(nw, 0.25, -0.5);
    const double a1 = l1 * residual_at(nw, 0.75, 0.5);
    return 0.5 * (a0 * a0 + a1 * a1);
  };
  net::NetworkParams probe = toy.network;
  std::vector<std::vector<double>> fd_grad;
  for (auto& tensor : probe.params.tensors) {
    fd_grad.emplace_back();
    for (auto& wv : tensor.v) {
      const double h = 1e-6, w0 = wv;
      wv = w0 + h;
      const double fp = loss_of(probe);
      wv = w0 - h;
      const double fm = loss_of(probe);
      wv = w0;
      fd_grad.back().push_back((fp - fm) / (2.0 * h));
    }
  }

  // Adam first step from the recurrence.
  std::vector<std::vector<double>> expect;
  for (std::size_t t = 0; t < params0.tensors.size(); ++t) {
    expect.emplace_back();
    for (std::size_t i = 0; i < params0.tensors[t].v.size(); ++i) {
      const double gg = fd_grad[t][i];
      const double mh = gg;  // bias-corrected first moment after one step
      const double vh = gg * gg;
      expect.back().push_back(params0.tensors[t].v[i] -
                              1e-3 * mh / (std::sqrt(vh) + 1e-8));
    }
  }

  std::vector<opt::MetricRow> log;
  opt::TrainHooks hooks;
  hooks.on_metric = [&](const opt::MetricRow& row) { log.push_back(row); };
  auto status = trainer.run(hooks);
  CHECK(!status.aborted);
  CHECK(trainer.rba().lambda()[0] == doctest::Approx(l0).epsilon(1e-14));
  CHECK(trainer.rba().lambda()[1] == doctest::Approx(l1).epsilon(1e-14));
  CHECK(status.final_loss == doctest::Approx(expected_loss).epsilon(1e-12));

  for (std::size_t t = 0; t < expect.size(); ++t)
    for (std::size_t i = 0; i < expect[t].size(); ++i)
      CHECK(toy.network.params.tensors[t].v[i] ==
            doctest::Approx(expect[t][i]).epsilon(1e-8));
}

TEST_CASE("training runs are bit-deterministic") {
  auto run_once = [] {
    ToySetup toy;
    phys::Evaluator eval(toy.network, toy.problem, toy.colloc);
    opt::TrainConfig cfg;
    cfg.adam_iters = 25;
    cfg.lbfgs_iters = 5;
    cfg.adam.schedule = {1e-3, 0.9, 10, false};
    cfg.weights = {0.0, 0.0};
    cfg.metric_every = 1;
    opt::Trainer trainer(toy.network, eval, cfg);
    std::vector<opt::MetricRow> log;
    opt::TrainHooks hooks;
    hooks.on_metric = [&](const opt::MetricRow& row) { log.push_back(row); };
    trainer.run(hooks);
    return std::make_pair(log, opt::flatten(toy.network.params));
  };
  auto [log1, x1] = run_once();
  auto [log2, x2] = run_once();
  CHECK(x1 == x2);
  REQUIRE(log1.size() == log2.size());
  for (std::size_t i = 0; i < log1.size(); ++i) {
    CHECK(log1[i].total == log2[i].total);
    CHECK(log1[i].lambda_max == log2[i].lambda_max);
    const bool rel_match = log1[i].rel_l2 == log2[i].rel_l2 ||
                           (std::isnan(log1[i].rel_l2) && std::isnan(log2[i].rel_l2));
    CHECK(rel_match);
  }
}

TEST_CASE("multipliers stay frozen through the L-BFGS phase when disabled") {
  ToySetup toy;
  phys::Evaluator eval(toy.network, toy.problem, toy.colloc);
  opt::TrainConfig cfg;
  cfg.adam_iters = 5;
  cfg.lbfgs_iters = 10;
  cfg.adam.schedule = {1e-3, 1.0, 1, false};
  cfg.rba.update_during_lbfgs = false;
  cfg.metric_every = 0;
  opt::Trainer trainer(toy.network, eval, cfg);

  std::vector<double> lambda_after_adam;
  opt::TrainHooks hooks;
  hooks.after_iteration = [&](std::int64_t k) {
    if (k == 5) lambda_after_adam.assign(trainer.rba().lambda().begin(), trainer.rba().lambda().end());
    if (k > 5) {
      REQUIRE(!lambda_after_adam.empty());
      for (std::size_t i = 0; i < lambda_after_adam.size(); ++i)
        CHECK(trainer.rba().lambda()[i] == lambda_after_adam[i]);
    }
  };
  auto status = trainer.run(hooks);
  CHECK(!status.aborted);
  CHECK(status.iterations_done == 15);
}

TEST_CASE("training loss decreases on a small Helmholtz problem") {
  net::Architecture arch{2, 16, 2, 1, false};
  auto network = net::xavier_init(arch, 3);
  phys::ProblemConfig problem;
  problem.kind = phys::ProblemKind::helmholtz;
  problem.helmholtz = {1, 1, 1.0};
  phys::CollocationSet colloc;
  const std::array<phys::Interval, 2> square{{{-1.0, 1.0}, {-1.0, 1.0}}};
  colloc.interior = phys::sample_uniform_grid(9, 9, square);
  for (int i = 0; i < 20; ++i) {
    const double s = -1.0 + 2.0 * i / 19.0;
    for (auto p : {phys::Point2{-1.0, s}, phys::Point2{1.0, s}, phys::Point2{s, -1.0},
                   phys::Point2{s, 1.0}}) {
      colloc.bc_points.push_back(p);
      colloc.bc_values.push_back(0.0);
    }
  }
  phys::Evaluator eval(network, problem, colloc);
  opt::TrainConfig cfg;
  cfg.adam_iters = 1500;
  cfg.adam.schedule = {3e-3, 0.9, 500, false};
  cfg.weights = {0.0, 100.0};
  cfg.metric_every = 1500;
  opt::Trainer trainer(network, eval, cfg);
  std::vector<opt::MetricRow> log;
  opt::TrainHooks hooks;
  hooks.on_metric = [&](const opt::MetricRow& row) { log.push_back(row); };
  auto status = trainer.run(hooks);
  CHECK(!status.aborted);
  REQUIRE(log.size() >= 2);
  CHECK(log.back().total < 0.05 * log.front().total);
}
