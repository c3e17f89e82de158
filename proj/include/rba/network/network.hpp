#pragma once

#include <cstdint>
#include <vector>

#include "rba/autodiff/jet.hpp"
#include "rba/autodiff/tape.hpp"

namespace rba::net {

struct Architecture {
  int input_dim = 0;
  int width = 0;
  int hidden_layers = 0;
  int output_dim = 1;
  bool modified = false;  // U/V input encoders mixed into every hidden layer

  bool operator==(const Architecture&) const = default;
};

/// Layer weights and biases, plus the U/V encoder parameters when the
/// modified MLP is active. Tensor order inside `params` is fixed so that
/// checkpoints and gradients stay aligned.
struct NetworkParams {
  Architecture arch;
  ad::ParamSet params;
  std::vector<int> w, b;            // hidden_layers + 1 affine stages
  int wu = -1, bu = -1, wv = -1, bv = -1;
};

/// Weights from normal(0, 2/(fan_in+fan_out)), biases zero. Deterministic for
/// a given seed.
NetworkParams xavier_init(const Architecture& arch, std::uint64_t seed);

/// Records the network forward pass on `tape`, starting from the node holding
/// the (embedded) input features. Returns the output node. Standard MLP:
/// affine+tanh chain with an affine-only head. Modified MLP: U and V are
/// computed once from the input, then each hidden layer mixes
/// (1 - z) .* U + z .* V right before its activation.
int record_forward(ad::Tape& tape, const NetworkParams& net, int input_node);

/// Hard boundary-condition wrap u = g + phi .* u_nn, recorded on the tape so
/// input derivatives of the product stay exact. `phi` and `g` are constant
/// leaves shaped like the output node; a negative `g_leaf` means g == 0.
int adf_wrap(ad::Tape& tape, int u_nn, int phi_leaf, int g_leaf = -1);

/// Single-point evaluation returning value and first/second derivatives of
/// the output with respect to input coordinate `direction` (no embedding).
ad::Jet2 jet_eval(const NetworkParams& net, std::span<const double> input, int direction);

}  // namespace rba::net
