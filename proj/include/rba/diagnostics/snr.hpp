#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rba/network/network.hpp"
#include "rba/physics/evaluator.hpp"

namespace rba::diag {

/// Per-layer gradient statistics at one diagnostic iteration: Frobenius
/// norms of the across-batch mean and standard deviation of the loss
/// gradient, each normalized by the layer's weight norm, and their ratio.
struct SnrRecord {
  std::int64_t iteration = 0;
  std::vector<std::string> layer;
  std::vector<double> mu_norm;
  std::vector<double> sigma_norm;
  std::vector<double> snr;  // +inf sentinel when sigma_norm == 0
};

/// Contiguous batch boundaries: n_batches batches of floor(n/n_batches)
/// points, remainder assigned to the last batch.
std::vector<std::size_t> batch_bounds(std::size_t n_points, int n_batches);

/// Statistics core over explicit per-batch gradients. `layer_tensors` names
/// the weight tensors reported (one row per tensor). Population std by
/// default; `sample_std` divides by n-1 instead.
SnrRecord snr_from_batch_gradients(std::int64_t iteration, const net::NetworkParams& net,
                                   std::span<const ad::ParamGradient> batch_grads,
                                   std::span<const int> layer_tensors,
                                   bool sample_std = false);

/// Full diagnostic: per-batch composite-loss gradients over the evaluator's
/// interior chunks (one batch per chunk; IC/BC terms are common to every
/// batch), reduced to per-layer statistics. Training state is untouched.
/// Reported layers are the hidden weight matrices; `all_layers` adds the
/// encoders and the output stage.
SnrRecord layer_snr(std::int64_t iteration, const net::NetworkParams& net,
                    phys::Evaluator& eval, std::span<const double> lambda,
                    const phys::LossWeights& weights, bool sample_std = false,
                    bool all_layers = false);

}  // namespace rba::diag
