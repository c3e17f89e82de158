#include "rba/diagnostics/snr.hpp"

#include <cmath>
#include <limits>

#include "rba/common/error.hpp"

namespace rba::diag {

std::vector<std::size_t> batch_bounds(std::size_t n_points, int n_batches) {
  require(n_batches >= 1, "snr: need at least one batch");
  require(n_points >= static_cast<std::size_t>(n_batches), "snr: more batches than points");
  const std::size_t base = n_points / n_batches;
  std::vector<std::size_t> bounds(n_batches + 1, 0);
  for (int i = 1; i < n_batches; ++i) bounds[i] = i * base;
  bounds[n_batches] = n_points;
  return bounds;
}

SnrRecord snr_from_batch_gradients(std::int64_t iteration, const net::NetworkParams& net,
                                   std::span<const ad::ParamGradient> batch_grads,
                                   std::span<const int> layer_tensors, bool sample_std) {
  require(batch_grads.size() >= 2, "snr: need at least two batches");
  const double nb = static_cast<double>(batch_grads.size());
  const double std_div = sample_std ? nb - 1.0 : nb;

  SnrRecord rec;
  rec.iteration = iteration;
  for (int t : layer_tensors) {
    const ad::Tensor& w = net.params.tensors[t];
    double w_sq = 0.0;
    for (double v : w.v) w_sq += v * v;
    const double w_norm = std::sqrt(w_sq);

    double mu_sq = 0.0, sigma_sq = 0.0;
    for (std::size_t i = 0; i < w.v.size(); ++i) {
      double mean = 0.0;
      for (const auto& g : batch_grads) mean += g.tensors[t].v[i];
      mean /= nb;
      double var = 0.0;
      for (const auto& g : batch_grads) {
        const double d = g.tensors[t].v[i] - mean;
        var += d * d;
      }
      mu_sq += mean * mean;
      sigma_sq += var / std_div;
    }
    rec.layer.push_back(w.name);
    const double mu = std::sqrt(mu_sq) / w_norm;
    const double sigma = std::sqrt(sigma_sq) / w_norm;
    rec.mu_norm.push_back(mu);
    rec.sigma_norm.push_back(sigma);
    rec.snr.push_back(sigma > 0.0 ? mu / sigma : std::numeric_limits<double>::infinity());
  }
  return rec;
}

SnrRecord layer_snr(std::int64_t iteration, const net::NetworkParams& net,
                    phys::Evaluator& eval, std::span<const double> lambda,
                    const phys::LossWeights& weights, bool sample_std, bool all_layers) {
  eval.forward_residuals();

  ad::ParamGradient shared = ad::ParamGradient::zeros_like(net.params);
  eval.icbc_grad(weights, shared);

  const int n_batches = eval.interior_chunk_count();
  std::vector<ad::ParamGradient> grads;
  grads.reserve(n_batches);
  for (int c = 0; c < n_batches; ++c) {
    ad::ParamGradient g = shared;
    eval.chunk_residual_grad(c, lambda, g);
    grads.push_back(std::move(g));
  }

  std::vector<int> layers(net.w.begin(), net.w.end() - 1);  // hidden stages
  if (all_layers) {
    layers.push_back(net.w.back());
    if (net.arch.modified) {
      layers.push_back(net.wu);
      layers.push_back(net.wv);
    }
  }
  return snr_from_batch_gradients(iteration, net, grads, layers, sample_std);
}

}  // namespace rba::diag
