#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rba/common/rng.hpp"
#include "rba/network/embedding.hpp"
#include "rba/network/forward.hpp"
#include "rba/network/network.hpp"
#include "rba/physics/problem.hpp"

using namespace rba;
using ad::ChannelLayout;
using ad::Tape;

TEST_CASE("xavier init is deterministic with zero biases and the right variance") {
  net::Architecture arch{128, 128, 2, 1, false};
  auto a = net::xavier_init(arch, 77);
  auto b = net::xavier_init(arch, 77);
  for (std::size_t t = 0; t < a.params.tensors.size(); ++t)
    for (std::size_t i = 0; i < a.params.tensors[t].v.size(); ++i)
      CHECK(a.params.tensors[t].v[i] == b.params.tensors[t].v[i]);

  for (int bias : a.b)
    for (double v : a.params.tensors[bias].v) CHECK(v == 0.0);

  const auto& w1 = a.params.tensors[a.w[1]];  // 128 x 128 hidden layer
  REQUIRE(w1.rows == 128);
  REQUIRE(w1.cols == 128);
  double mean = 0.0, var = 0.0;
  for (double v : w1.v) mean += v;
  mean /= static_cast<double>(w1.v.size());
  for (double v : w1.v) var += (v - mean) * (v - mean);
  var /= static_cast<double>(w1.v.size());
  const double expect = 2.0 / 256.0;
  CHECK(var > 0.8 * expect);
  CHECK(var < 1.2 * expect);
}

TEST_CASE("xavier init rejects zero-width layers") {
  CHECK_THROWS_AS(net::xavier_init({0, 8, 1, 1, false}, 1), Error);
  CHECK_THROWS_AS(net::xavier_init({2, 0, 1, 1, false}, 1), Error);
}

TEST_CASE("mlp forward basics") {
  SUBCASE("all-zero parameters give zero output") {
    net::Architecture arch{2, 8, 3, 1, false};
    auto network = net::xavier_init(arch, 9);
    for (auto& t : network.params.tensors) std::fill(t.v.begin(), t.v.end(), 0.0);
    const double x[] = {0.4, -1.7};
    CHECK(net::forward_point(network, {}, x) == 0.0);
  }
  SUBCASE("single linear layer: w=2, b=1, x=3 -> 7") {
    net::Architecture arch{1, 0, 0, 1, false};
    auto network = net::xavier_init(arch, 9);
    network.params.tensors[network.w[0]].v[0] = 2.0;
    network.params.tensors[network.b[0]].v[0] = 1.0;
    const double x = 3.0;
    CHECK(net::forward_point(network, {}, std::span<const double>(&x, 1)) == 7.0);
  }
}

TEST_CASE("jet forward agrees with the scalar forward on the value channel") {
  net::Architecture arch{2, 16, 3, 1, true};
  auto network = net::xavier_init(arch, 21);
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const double x[] = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const double scalar = net::forward_point(network, {}, x);
    const ad::Jet2 jet = net::jet_eval(network, x, i % 2);
    CHECK(jet.v == scalar);  // bit identity
  }
}

TEST_CASE("modified MLP mixing") {
  SUBCASE("U == V collapses every hidden layer to tanh(U)") {
    net::Architecture arch{2, 8, 3, 1, true};
    auto network = net::xavier_init(arch, 5);
    // Copy the U encoder into V.
    network.params.tensors[network.wv].v = network.params.tensors[network.wu].v;
    network.params.tensors[network.bv].v = network.params.tensors[network.bu].v;

    const double x[] = {0.3, -0.8};
    const double out = net::forward_point(network, {}, x);

    // Expected: output affine applied to tanh(U), independent of hidden weights.
    std::vector<double> u(8, 0.0);
    const auto& wu = network.params.tensors[network.wu];
    const auto& bu = network.params.tensors[network.bu];
    for (int r = 0; r < 8; ++r) {
      double s = bu.v[r];
      for (int c = 0; c < 2; ++c) s += wu.v[r * 2 + c] * x[c];
      u[r] = std::tanh(std::tanh(s));
    }
    const auto& wo = network.params.tensors[network.w.back()];
    const auto& bo = network.params.tensors[network.b.back()];
    double expect = bo.v[0];
    for (int c = 0; c < 8; ++c) expect += wo.v[c] * u[c];
    CHECK(out == doctest::Approx(expect).epsilon(1e-14));

    // Perturbing a hidden weight must not change the output.
    network.params.tensors[network.w[1]].v[3] += 0.5;
    CHECK(net::forward_point(network, {}, x) == out);
  }

  SUBCASE("mixing endpoints: z=0 gives U, z=1 gives V") {
    // Exercise the recorded mix graph directly with controlled leaves.
    ad::ParamSet params;
    Tape tape(&params);
    const int width = 4;
    auto fill = [&](int node, std::initializer_list<double> vals) {
      int i = 0;
      for (double v : vals) tape.leaf_data(node).at(0, 0, i++) = v;
    };
    const int u = tape.leaf(ChannelLayout::scalar(), 1, width);
    const int v = tape.leaf(ChannelLayout::scalar(), 1, width);
    const int z = tape.leaf(ChannelLayout::scalar(), 1, width);
    fill(u, {1.0, 2.0, 3.0, 4.0});
    fill(v, {-1.0, -2.0, -3.0, -4.0});

    const int vu[] = {v, u};
    const double pm[] = {1.0, -1.0};
    const int diff = tape.lincomb(vu, pm);
    const int mixed_terms[] = {u, tape.mul(z, diff)};
    const double ones[] = {1.0, 1.0};
    const int mixed = tape.lincomb(mixed_terms, ones);

    fill(z, {0.0, 0.0, 0.0, 0.0});
    tape.forward();
    for (int i = 0; i < width; ++i) CHECK(tape.value(mixed).at(0, 0, i) == tape.value(u).at(0, 0, i));

    fill(z, {1.0, 1.0, 1.0, 1.0});
    tape.forward();
    for (int i = 0; i < width; ++i) CHECK(tape.value(mixed).at(0, 0, i) == tape.value(v).at(0, 0, i));
  }

  SUBCASE("modified forward without encoders is an error") {
    net::Architecture arch{2, 8, 2, 1, false};
    auto network = net::xavier_init(arch, 5);
    network.arch.modified = true;  // encoders never allocated
    const double x[] = {0.1, 0.2};
    CHECK_THROWS_AS(net::forward_point(network, {}, x), Error);
  }
}

TEST_CASE("1d Fourier features") {
  auto v0 = net::fourier_embed_1d(0.0, 1, 2.0);
  REQUIRE(v0.size() == 3);
  CHECK(v0[0] == 1.0);
  CHECK(v0[1] == 1.0);
  CHECK(v0[2] == 0.0);

  auto v1 = net::fourier_embed_1d(0.5, 1, 2.0);
  CHECK(v1[0] == 1.0);
  CHECK(v1[1] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(v1[2] == doctest::Approx(1.0));

  CHECK(net::fourier_embed_1d(0.77, 0, 2.0) == std::vector<double>{1.0});

  Rng rng(8);
  for (int i = 0; i < 10; ++i) {
    const double x = rng.uniform(-3, 3);
    auto a = net::fourier_embed_1d(x, 7, 2.0);
    auto b = net::fourier_embed_1d(x + 2.0, 7, 2.0);
    for (std::size_t j = 0; j < a.size(); ++j) CHECK(a[j] == doctest::Approx(b[j]).epsilon(1e-12));
  }
}

TEST_CASE("truncated 2d Fourier features") {
  auto v = net::fourier_embed_2d_truncated(0.0, 0.0, 1, 1, 2.0, 2.0);
  REQUIRE(v.size() == 3);
  CHECK(v[0] == 1.0);  // cos cos
  CHECK(v[1] == 0.0);  // cos sin
  CHECK(v[2] == 0.0);  // sin cos

  CHECK(net::fourier_embed_2d_truncated(0.2, -0.4, 5, 5, 2.0, 2.0).size() == 75);
  CHECK(net::fourier_embed_2d_full(0.2, -0.4, 5, 5, 2.0, 2.0).size() == 100);

  Rng rng(12);
  for (int i = 0; i < 10; ++i) {
    const double x = rng.uniform(-2, 2), y = rng.uniform(-2, 2);
    auto a = net::fourier_embed_2d_truncated(x, y, 3, 4, 2.0, 2.0);
    auto bx = net::fourier_embed_2d_truncated(x + 2.0, y, 3, 4, 2.0, 2.0);
    auto by = net::fourier_embed_2d_truncated(x, y + 2.0, 3, 4, 2.0, 2.0);
    for (std::size_t j = 0; j < a.size(); ++j) {
      CHECK(a[j] == doctest::Approx(bx[j]).epsilon(1e-12));
      CHECK(a[j] == doctest::Approx(by[j]).epsilon(1e-12));
    }
  }
}

TEST_CASE("embedded Allen-Cahn network is exactly periodic in x") {
  net::EmbeddingConfig embed;
  embed.kind = net::EmbeddingKind::fourier1d;
  embed.m = 10;
  embed.period_x = 2.0;
  embed.embedded_axes = {1};

  net::Architecture arch{embed.feature_count(2), 32, 2, 1, false};
  auto network = net::xavier_init(arch, 31);

  Rng rng(14);
  for (int i = 0; i < 20; ++i) {
    const double t = rng.uniform(0, 1), x = rng.uniform(-1, 1);
    const double a[] = {t, x};
    const double b[] = {t, x + 2.0};
    const double ua = net::forward_point(network, embed, a);
    const double ub = net::forward_point(network, embed, b);
    CHECK(ua == doctest::Approx(ub).epsilon(1e-14));
  }
}

TEST_CASE("ADF wrap annihilates the boundary and reduces to u_nn at the center") {
  net::Architecture arch{2, 16, 2, 1, false};
  auto network = net::xavier_init(arch, 44);

  CHECK(phys::helmholtz_adf_phi(1.0, 0.3) == 0.0);
  CHECK(phys::helmholtz_adf_phi(0.0, 0.0) == 1.0);

  ad::ParamSet& params = network.params;
  auto wrapped_value = [&](double x, double y) {
    Tape tape(&params);
    const int leaf = tape.leaf(ChannelLayout::scalar(), 1, 2);
    tape.leaf_data(leaf).at(0, 0, 0) = x;
    tape.leaf_data(leaf).at(0, 0, 1) = y;
    const int u = net::record_forward(tape, network, leaf);
    const int phi = tape.leaf(ChannelLayout::scalar(), 1, 1);
    tape.leaf_data(phi).at(0, 0, 0) = phys::helmholtz_adf_phi(x, y);
    const int wrapped = net::adf_wrap(tape, u, phi);
    tape.forward();
    return tape.value(wrapped).data[0];
  };

  Rng rng(10);
  for (int i = 0; i < 25; ++i) {
    const double s = rng.uniform(-1, 1);
    CHECK(wrapped_value(1.0, s) == 0.0);
    CHECK(wrapped_value(-1.0, s) == 0.0);
    CHECK(wrapped_value(s, 1.0) == 0.0);
    CHECK(wrapped_value(s, -1.0) == 0.0);
  }

  const double x0[] = {0.0, 0.0};
  CHECK(wrapped_value(0.0, 0.0) == net::forward_point(network, {}, x0));
}

TEST_CASE("second derivative of the ADF-wrapped output matches finite differences") {
  net::Architecture arch{2, 12, 2, 1, false};
  auto network = net::xavier_init(arch, 51);

  auto wrapped_jet = [&](double x, double y) {
    Tape tape(&network.params);
    const ChannelLayout layout = ChannelLayout::jet2();
    const int leaf = tape.leaf(layout, 1, 2);
    auto& data = tape.leaf_data(leaf);
    data.at(0, 0, 0) = x;
    data.at(0, 0, 1) = y;
    data.at(1, 0, 0) = 1.0;  // differentiate in x
    const int u = net::record_forward(tape, network, leaf);
    const int phi = tape.leaf(layout, 1, 1);
    const ad::Jet2 pj = phys::helmholtz_adf_phi_jet(x, y, 0);
    tape.leaf_data(phi).at(0, 0, 0) = pj.v;
    tape.leaf_data(phi).at(1, 0, 0) = pj.d1;
    tape.leaf_data(phi).at(2, 0, 0) = pj.d2;
    const int wrapped = net::adf_wrap(tape, u, phi);
    tape.forward();
    const auto& o = tape.value(wrapped);
    return ad::Jet2{o.at(0, 0, 0), o.at(1, 0, 0), o.at(2, 0, 0)};
  };

  const double x = 0.31, y = -0.54, h = 1e-4;
  const ad::Jet2 jet = wrapped_jet(x, y);
  const double fp = wrapped_jet(x + h, y).v;
  const double f0 = jet.v;
  const double fm = wrapped_jet(x - h, y).v;
  CHECK(jet.d1 == doctest::Approx((fp - fm) / (2 * h)).epsilon(1e-7));
  CHECK(jet.d2 == doctest::Approx((fp - 2 * f0 + fm) / (h * h)).epsilon(1e-5));
}
