#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "rba/common/rng.hpp"
#include "rba/network/forward.hpp"
#include "rba/physics/evaluator.hpp"
#include "rba/physics/rba.hpp"
#include "rba/physics/sampling.hpp"
#include "rba/oracle/metrics.hpp"

using namespace rba;
using phys::CollocationSet;
using phys::Point2;

namespace {

constexpr double kPi = 3.14159265358979323846;

/// A network whose output is identically `c`: one affine stage, zero
/// weights, bias c.
net::NetworkParams constant_network(double c) {
  net::Architecture arch{2, 0, 0, 1, false};
  auto network = net::xavier_init(arch, 0);
  std::fill(network.params.tensors[network.w[0]].v.begin(),
            network.params.tensors[network.w[0]].v.end(), 0.0);
  network.params.tensors[network.b[0]].v[0] = c;
  return network;
}

}  // namespace

TEST_CASE("Allen-Cahn initial condition") {
  CHECK(phys::allen_cahn_ic(0.0) == 0.0);
  CHECK(phys::allen_cahn_ic(1.0) == doctest::Approx(-1.0));
  CHECK(phys::allen_cahn_ic(0.5) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("Allen-Cahn residual on constant fields") {
  // Constant u solves the PDE iff 5u^3 - 5u = 0.
  CHECK(phys::allen_cahn_residual(1.0, 0.0, 0.0) == 0.0);
  CHECK(phys::allen_cahn_residual(0.0, 0.0, 0.0) == 0.0);
  CHECK(phys::allen_cahn_residual(0.5, 0.0, 0.0) == doctest::Approx(-1.875));

  // The same values through the full evaluator pipeline.
  for (double c : {1.0, 0.0, 0.5}) {
    auto network = constant_network(c);
    CollocationSet colloc;
    colloc.interior = {{0.3, -0.2}, {0.9, 0.7}};
    phys::ProblemConfig problem;
    problem.kind = phys::ProblemKind::allen_cahn;
    phys::Evaluator eval(network, problem, colloc);
    auto r = eval.forward_residuals();
    const double expect = phys::allen_cahn_residual(c, 0.0, 0.0);
    for (double ri : r) CHECK(ri == doctest::Approx(expect).epsilon(1e-14));
  }
}

TEST_CASE("Helmholtz forcing") {
  CHECK(phys::helmholtz_forcing(0.0, 0.3, 1, 4, 1.0) == 0.0);
  CHECK(phys::helmholtz_forcing(0.3, 0.0, 1, 4, 1.0) == doctest::Approx(0.0).epsilon(1e-12));

  // a1=1, a2=4, k=1 at (0.5, 0.125): both sines are 1, q = 1 - 17 pi^2.
  const double q = phys::helmholtz_forcing(0.5, 0.125, 1, 4, 1.0);
  CHECK(q == doctest::Approx(1.0 - 17.0 * kPi * kPi).epsilon(1e-14));

  Rng rng(4);
  for (int i = 0; i < 10; ++i) {
    const double x = rng.uniform(-1, 1), y = rng.uniform(-1, 1);
    CHECK(phys::helmholtz_forcing(-x, y, 1, 4, 1.0) ==
          doctest::Approx(-phys::helmholtz_forcing(x, y, 1, 4, 1.0)));
    CHECK(phys::helmholtz_forcing(-x, y, 3, 2, 1.0) ==
          doctest::Approx(-phys::helmholtz_forcing(x, y, 3, 2, 1.0)));
  }
}

TEST_CASE("Helmholtz residual of the exact solution vanishes (k=1)") {
  const phys::HelmholtzSpec spec{1, 4, 1.0};
  Rng rng(6);
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.uniform(-1, 1), y = rng.uniform(-1, 1);
    // Analytic jets of sin(a1 pi x) sin(a2 pi y).
    auto u = [&](ad::Jet2 xj, ad::Jet2 yj) { return sin(xj * (spec.a1 * kPi)) * sin(yj * (spec.a2 * kPi)); };
    const ad::Jet2 ux = u(ad::Jet2::variable(x), ad::Jet2::constant(y));
    const ad::Jet2 uy = u(ad::Jet2::constant(x), ad::Jet2::variable(y));
    const double r = phys::helmholtz_residual(ux.v, ux.d2, uy.d2, x, y, spec);
    CHECK(std::fabs(r) <= 1e-10);
  }
}

TEST_CASE("Helmholtz residual of the zero field is minus the forcing") {
  const phys::HelmholtzSpec spec{1, 4, 1.0};
  CHECK(phys::helmholtz_residual(0, 0, 0, 0.0, 0.77, spec) == 0.0);
  CHECK(phys::helmholtz_residual(0, 0, 0, 0.5, 0.125, spec) ==
        doctest::Approx(17.0 * kPi * kPi - 1.0));

  auto network = constant_network(0.0);
  CollocationSet colloc;
  colloc.interior = {{0.5, 0.125}, {0.0, 0.77}};
  phys::ProblemConfig problem;
  problem.kind = phys::ProblemKind::helmholtz;
  problem.helmholtz = spec;
  phys::Evaluator eval(network, problem, colloc);
  auto r = eval.forward_residuals();
  CHECK(r[0] == doctest::Approx(17.0 * kPi * kPi - 1.0));
  CHECK(r[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("RBA update arithmetic") {
  phys::RbaConfig cfg;  // gamma 0.999, eta* 0.01, c 0
  phys::RbaState state(2, cfg);
  const double r[] = {2.0, -4.0};
  state.update(r);
  CHECK(state.lambda()[0] == doctest::Approx(0.005).epsilon(1e-15));
  CHECK(state.lambda()[1] == doctest::Approx(0.01).epsilon(1e-15));

  SUBCASE("zero residuals decay without the ratio term") {
    const double z[] = {0.0, 0.0};
    const double l0 = state.lambda()[0], l1 = state.lambda()[1];
    state.update(z);
    CHECK(state.lambda()[0] == doctest::Approx(0.999 * l0));
    CHECK(state.lambda()[1] == doctest::Approx(0.999 * l1));
  }
}

TEST_CASE("RBA converges to eta*/(1-gamma) under a constant maximal residual") {
  phys::RbaConfig cfg;
  phys::RbaState state(2, cfg);
  const double r[] = {3.0, 1.5};
  const double bound = state.upper_bound();
  CHECK(bound == doctest::Approx(10.0));

  double lambda0 = 0.0;
  for (int k = 1; k <= 20000; ++k) {
    state.update(r);
    // Geometric approach: |lambda_k - limit| <= lambda_0 gamma^k + tol.
    const double limit = 10.0;
    const double gap = std::fabs(state.lambda()[0] - limit);
    const double decay_budget = 10.0 * std::pow(cfg.gamma, k) + 1e-9;
    CHECK(gap <= decay_budget);
    (void)lambda0;
  }
  CHECK(state.lambda()[0] == doctest::Approx(10.0).epsilon(1e-8));
  CHECK(state.lambda()[1] == doctest::Approx(5.0).epsilon(1e-8));  // ratio 0.5
}

TEST_CASE("RBA stays in (0, bound] over randomized updates") {
  phys::RbaConfig cfg;
  phys::RbaState state(100, cfg);
  Rng rng(17);
  std::vector<double> r(100);
  const double bound = state.upper_bound() + 1e-12;
  for (int k = 0; k < 10000; ++k) {
    for (auto& x : r) x = rng.uniform(-5, 5);
    state.update(r);
    for (double l : state.lambda()) {
      CHECK(l > 0.0);
      CHECK(l <= bound);
    }
  }
}

TEST_CASE("composite loss") {
  net::Architecture arch{2, 8, 2, 1, false};
  auto network = net::xavier_init(arch, 23);
  CollocationSet colloc;
  Rng rng(2);
  for (int i = 0; i < 7; ++i) colloc.interior.push_back({rng.uniform(0, 1), rng.uniform(-1, 1)});
  for (int i = 0; i < 5; ++i) {
    const double x = rng.uniform(-1, 1);
    colloc.ic_points.push_back({0.0, x});
    colloc.ic_values.push_back(phys::allen_cahn_ic(x));
  }
  phys::ProblemConfig problem;
  problem.kind = phys::ProblemKind::allen_cahn;
  phys::Evaluator eval(network, problem, colloc, 3);  // uneven chunks on purpose

  SUBCASE("exactly solving network gives zero loss for any multipliers") {
    auto zero_net = constant_network(0.0);
    CollocationSet interior_only;
    interior_only.interior = colloc.interior;
    phys::Evaluator ev(zero_net, problem, interior_only);
    ev.forward_residuals();
    std::vector<double> lambda = {7.0, 0.1, 3.0, 9.9, 2.5, 0.4, 1.0};
    auto terms = ev.loss_only(lambda, {});
    CHECK(terms.total == 0.0);
  }

  SUBCASE("unit multipliers reduce to the vanilla loss, bit-identically") {
    auto r = eval.forward_residuals();
    std::vector<double> unit(colloc.interior.size(), 1.0);
    phys::LossWeights w{100.0, 0.0};
    ad::ParamGradient grad = ad::ParamGradient::zeros_like(network.params);
    auto terms = eval.backward_loss(unit, w, grad);

    double vanilla_r = 0.0;
    for (double ri : r) vanilla_r += ri * ri;
    vanilla_r /= static_cast<double>(r.size());
    double vanilla_ic = 0.0;
    for (std::size_t i = 0; i < colloc.ic_points.size(); ++i) {
      const double pts[] = {0.0, colloc.ic_points[i].b};
      const double d = net::forward_point(network, {}, pts) - colloc.ic_values[i];
      vanilla_ic += d * d;
    }
    vanilla_ic /= static_cast<double>(colloc.ic_points.size());
    CHECK(terms.residual == vanilla_r);
    CHECK(terms.ic == doctest::Approx(vanilla_ic).epsilon(1e-15));
    CHECK(terms.total == vanilla_r + 100.0 * terms.ic);
  }

  SUBCASE("two-point residual tail arithmetic") {
    CollocationSet two;
    two.interior = {colloc.interior[0], colloc.interior[1]};
    phys::Evaluator ev(network, problem, two);
    auto r = ev.forward_residuals();
    std::vector<double> lambda = {0.5, 1.0};
    auto terms = ev.loss_only(lambda, {});
    const double expect = (0.25 * r[0] * r[0] + r[1] * r[1]) / 2.0;
    CHECK(terms.residual == doctest::Approx(expect).epsilon(1e-15));
    CHECK(terms.total == terms.residual);
  }

  SUBCASE("gradients are invariant to when the multiplier update runs") {
    phys::RbaState rba(colloc.interior.size(), {});
    auto r = eval.forward_residuals();
    rba.update(r);
    std::vector<double> snapshot(rba.lambda().begin(), rba.lambda().end());

    ad::ParamGradient g1 = ad::ParamGradient::zeros_like(network.params);
    auto t1 = eval.backward_loss(snapshot, {100.0, 0.0}, g1);

    rba.update(r);  // deferred extra update must not affect the loss above
    ad::ParamGradient g2 = ad::ParamGradient::zeros_like(network.params);
    eval.forward_residuals();
    auto t2 = eval.backward_loss(snapshot, {100.0, 0.0}, g2);

    CHECK(t1.total == t2.total);
    for (std::size_t t = 0; t < g1.tensors.size(); ++t)
      for (std::size_t i = 0; i < g1.tensors[t].v.size(); ++i)
        CHECK(g1.tensors[t].v[i] == g2.tensors[t].v[i]);
  }

  SUBCASE("lambda length mismatch is rejected") {
    eval.forward_residuals();
    std::vector<double> wrong(3, 1.0);
    ad::ParamGradient grad = ad::ParamGradient::zeros_like(network.params);
    CHECK_THROWS_AS(eval.backward_loss(wrong, {}, grad), Error);
  }
}

TEST_CASE("evaluator gradient matches finite differences with IC and BC terms") {
  net::Architecture arch{2, 8, 2, 1, false};
  auto network = net::xavier_init(arch, 77);
  CollocationSet colloc;
  Rng rng(9);
  for (int i = 0; i < 5; ++i) colloc.interior.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1)});
  for (int i = 0; i < 3; ++i) {
    colloc.bc_points.push_back({1.0, rng.uniform(-1, 1)});
    colloc.bc_values.push_back(0.0);
  }
  phys::ProblemConfig problem;
  problem.kind = phys::ProblemKind::helmholtz;
  phys::Evaluator eval(network, problem, colloc, 2);

  std::vector<double> lambda = {0.3, 1.2, 0.8, 2.0, 0.5};
  phys::LossWeights w{0.0, 100.0};
  ad::ParamGradient grad = ad::ParamGradient::zeros_like(network.params);
  auto terms = eval.loss_and_grad(lambda, w, grad);
  CHECK(terms.bc > 0.0);

  for (int probe = 0; probe < 25; ++probe) {
    const std::size_t t = rng.below(network.params.tensors.size());
    auto& tensor = network.params.tensors[t];
    const std::size_t i = rng.below(tensor.v.size());
    const double h = 1e-6, w0 = tensor.v[i];
    tensor.v[i] = w0 + h;
    const double fp = eval.loss_only(lambda, w).total;
    tensor.v[i] = w0 - h;
    const double fm = eval.loss_only(lambda, w).total;
    tensor.v[i] = w0;
    const double fd = (fp - fm) / (2.0 * h);
    CHECK(grad.tensors[t].v[i] ==
          doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("latin hypercube sampling") {
  const std::array<phys::Interval, 2> bounds{{{0.0, 1.0}, {-1.0, 1.0}}};
  auto pts = phys::sample_latin_hypercube(4, bounds, 123);
  REQUIRE(pts.size() == 4);

  // One point per quarter-stratum in each marginal.
  std::set<int> strata_a, strata_b;
  for (const auto& p : pts) {
    CHECK(p.a >= 0.0);
    CHECK(p.a < 1.0);
    CHECK(p.b >= -1.0);
    CHECK(p.b < 1.0);
    strata_a.insert(static_cast<int>(p.a * 4.0));
    strata_b.insert(static_cast<int>((p.b + 1.0) / 2.0 * 4.0));
  }
  CHECK(strata_a.size() == 4);
  CHECK(strata_b.size() == 4);

  auto again = phys::sample_latin_hypercube(4, bounds, 123);
  for (int i = 0; i < 4; ++i) {
    CHECK(pts[i].a == again[i].a);
    CHECK(pts[i].b == again[i].b);
  }
  auto different = phys::sample_latin_hypercube(4, bounds, 124);
  bool all_same = true;
  for (int i = 0; i < 4; ++i) all_same = all_same && pts[i].a == different[i].a;
  CHECK(!all_same);
}

TEST_CASE("uniform grid sampling") {
  const std::array<phys::Interval, 2> square{{{-1.0, 1.0}, {-1.0, 1.0}}};
  auto pts = phys::sample_uniform_grid(3, 3, square);
  REQUIRE(pts.size() == 9);
  int corners = 0;
  for (const auto& p : pts)
    if (std::fabs(p.a) == 1.0 && std::fabs(p.b) == 1.0) ++corners;
  CHECK(corners == 4);
  CHECK(pts[1].b - pts[0].b == doctest::Approx(1.0));  // spacing 2/(n-1)

  int per_axis = 0;
  auto big = phys::sample_uniform_grid_total(1201, square, &per_axis);
  CHECK(per_axis == 35);
  CHECK(big.size() == 1201);
  // Row-major truncation: the first 35 points share the first x coordinate.
  for (int i = 0; i < 35; ++i) CHECK(big[i].a == -1.0);
}
