#include "rba/network/network.hpp"

#include <cmath>

#include "rba/common/error.hpp"
#include "rba/common/rng.hpp"
#include "rba/network/forward.hpp"

namespace rba::net {

NetworkParams xavier_init(const Architecture& arch, std::uint64_t seed) {
  require(arch.input_dim > 0 && arch.output_dim > 0, "architecture: zero-width layer");
  require(arch.width > 0 || arch.hidden_layers == 0, "architecture: zero-width layer");
  require(arch.hidden_layers >= 0, "architecture: negative layer count");

  NetworkParams net;
  net.arch = arch;
  Rng rng(seed);

  auto add_affine = [&](const std::string& prefix, int fan_in, int fan_out, int& w_idx,
                        int& b_idx) {
    w_idx = net.params.add(prefix + ".w", fan_out, fan_in);
    b_idx = net.params.add(prefix + ".b", fan_out, 1);
    const double std_dev = std::sqrt(2.0 / (fan_in + fan_out));
    for (double& v : net.params.tensors[w_idx].v) v = std_dev * rng.normal();
  };

  int in_dim = arch.input_dim;
  for (int l = 0; l < arch.hidden_layers; ++l) {
    int w_idx, b_idx;
    add_affine("layer" + std::to_string(l), in_dim, arch.width, w_idx, b_idx);
    net.w.push_back(w_idx);
    net.b.push_back(b_idx);
    in_dim = arch.width;
  }
  int w_idx, b_idx;
  add_affine("out", in_dim, arch.output_dim, w_idx, b_idx);
  net.w.push_back(w_idx);
  net.b.push_back(b_idx);

  if (arch.modified) {
    add_affine("enc_u", arch.input_dim, arch.width, net.wu, net.bu);
    add_affine("enc_v", arch.input_dim, arch.width, net.wv, net.bv);
  }
  return net;
}

int record_forward(ad::Tape& tape, const NetworkParams& net, int input_node) {
  const int hidden = net.arch.hidden_layers;
  if (!net.arch.modified) {
    int a = input_node;
    for (int l = 0; l < hidden; ++l) a = tape.tanh_act(tape.affine(a, net.w[l], net.b[l], l), l);
    return tape.affine(a, net.w[hidden], net.b[hidden], hidden);
  }

  require(net.wu >= 0 && net.wv >= 0, "modified MLP without encoder parameters");
  const int u = tape.tanh_act(tape.affine(input_node, net.wu, net.bu, -2), -2);
  const int v = tape.tanh_act(tape.affine(input_node, net.wv, net.bv, -3), -3);
  // (1 - z) .* U + z .* V  ==  U + z .* (V - U)
  const int vu[] = {v, u};
  const double pm[] = {1.0, -1.0};
  const int v_minus_u = tape.lincomb(vu, pm);
  int a = input_node;
  for (int l = 0; l < hidden; ++l) {
    const int z = tape.affine(a, net.w[l], net.b[l], l);
    const int mixed[] = {u, tape.mul(z, v_minus_u)};
    const double ones[] = {1.0, 1.0};
    a = tape.tanh_act(tape.lincomb(mixed, ones), l);
  }
  return tape.affine(a, net.w[hidden], net.b[hidden], hidden);
}

int adf_wrap(ad::Tape& tape, int u_nn, int phi_leaf, int g_leaf) {
  const int prod = tape.mul(u_nn, phi_leaf);
  if (g_leaf < 0) return prod;
  const int terms[] = {prod, g_leaf};
  const double ones[] = {1.0, 1.0};
  return tape.lincomb(terms, ones);
}

namespace {

int record_point(ad::Tape& tape, const NetworkParams& net, const EmbeddingConfig& embed,
                 std::span<const double> x, ad::ChannelLayout layout, int direction) {
  const int features = embed.feature_count(static_cast<int>(x.size()));
  require(features == net.arch.input_dim, "forward: input width mismatch");
  const int leaf = tape.leaf(layout, 1, features);
  const int dirs[] = {direction};
  embed_point_jets(embed, x, layout, std::span<const int>(dirs, static_cast<std::size_t>(layout.ndir)),
                   tape.leaf_data(leaf), 0);
  return record_forward(tape, net, leaf);
}

}  // namespace

double forward_point(const NetworkParams& net, const EmbeddingConfig& embed,
                     std::span<const double> x) {
  ad::Tape tape(&net.params);
  const int out = record_point(tape, net, embed, x, ad::ChannelLayout::scalar(), -1);
  tape.forward();
  return tape.value(out).data[0];
}

ad::Jet2 forward_point_jet(const NetworkParams& net, const EmbeddingConfig& embed,
                           std::span<const double> x, int direction) {
  require(direction >= 0 && direction < static_cast<int>(x.size()),
          "forward_point_jet: bad direction");
  ad::Tape tape(&net.params);
  tape.set_check_finite(true);
  const int out = record_point(tape, net, embed, x, ad::ChannelLayout::jet2(), direction);
  tape.forward();
  const ad::JetBatch& o = tape.value(out);
  return {o.at(0, 0, 0), o.at(1, 0, 0), o.at(2, 0, 0)};
}

ad::Jet2 jet_eval(const NetworkParams& net, std::span<const double> input, int direction) {
  return forward_point_jet(net, EmbeddingConfig{}, input, direction);
}

}  // namespace rba::net
