#pragma once

#include <memory>
#include <span>
#include <vector>

#include "rba/autodiff/tape.hpp"
#include "rba/network/embedding.hpp"
#include "rba/network/network.hpp"
#include "rba/physics/problem.hpp"

namespace rba::phys {

struct LossWeights {
  double lambda_ic = 0.0;
  double lambda_bc = 0.0;
};

struct LossTerms {
  double total = 0.0;
  double residual = 0.0;  // mean((lambda_i r_i)^2)
  double ic = 0.0;        // mean squared IC mismatch, unweighted
  double bc = 0.0;        // mean squared BC mismatch, unweighted
};

/// Wiring of one benchmark problem.
struct ProblemConfig {
  ProblemKind kind = ProblemKind::helmholtz;
  HelmholtzSpec helmholtz;
  net::EmbeddingConfig embedding;
  bool adf = false;         // hard Dirichlet wrap u = phi * u_nn (Helmholtz)
  double time_scale = 1.0;  // Allen-Cahn: t is fed to the network as t * time_scale
};

/// Composite-loss evaluation over a fixed collocation set, organized as
/// contiguous point chunks each holding a retained forward tape. Chunks are
/// evaluated in order and reduced sequentially, so results do not depend on
/// anything but the inputs. Borrows `net` and keeps pointers into it: the
/// caller owns parameter storage and may mutate values (not shapes) freely
/// between calls.
class Evaluator {
 public:
  Evaluator(const net::NetworkParams& net, const ProblemConfig& problem,
            const CollocationSet& colloc, std::size_t chunk_points = 256);
  /// Explicit interior chunk boundaries (ascending, starting at 0 and ending
  /// at the interior count); IC/BC points use the default chunking.
  Evaluator(const net::NetworkParams& net, const ProblemConfig& problem,
            const CollocationSet& colloc, std::span<const std::size_t> interior_bounds);
  ~Evaluator();
  Evaluator(const Evaluator&) = delete;
  Evaluator& operator=(const Evaluator&) = delete;

  /// Phase A: forward every chunk at the current parameter values; returns
  /// the interior residual vector (valid until the next phase A).
  std::span<const double> forward_residuals();

  /// Phase B: composite loss and parameter gradient for the multipliers
  /// `lambda` (length n_interior), reusing phase A's forward state. `grad`
  /// is zeroed first.
  LossTerms backward_loss(std::span<const double> lambda, const LossWeights& weights,
                          ad::ParamGradient& grad);

  /// Phases A and B with lambda held fixed (line-search objective).
  LossTerms loss_and_grad(std::span<const double> lambda, const LossWeights& weights,
                          ad::ParamGradient& grad);

  /// Loss value only (forward + closed-form tail, no sweep).
  LossTerms loss_only(std::span<const double> lambda, const LossWeights& weights);

  /// Gradient of the residual term restricted to interior chunk `c`,
  /// mean((lambda_i r_i)^2 over the chunk), added into `grad` (not zeroed).
  /// Requires a current phase A state.
  void chunk_residual_grad(int c, std::span<const double> lambda, ad::ParamGradient& grad);

  /// Gradient of lambda_ic L_ic + lambda_bc L_bc, added into `grad`.
  /// Requires a current phase A state.
  void icbc_grad(const LossWeights& weights, ad::ParamGradient& grad);

  /// Scalar predictions (with any hard-constraint wrap applied).
  std::vector<double> predict(std::span<const Point2> pts);

  int interior_chunk_count() const;
  std::pair<std::size_t, std::size_t> interior_chunk_range(int c) const;
  std::size_t n_interior() const;
  const CollocationSet& colloc() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace rba::phys
