#include "rba/physics/evaluator.hpp"

#include <cmath>

#include "rba/common/error.hpp"

namespace rba::phys {

using ad::ChannelLayout;
using ad::JetBatch;
using ad::ParamGradient;
using ad::Tape;

namespace {

/// Direction layout of the interior jet pass: Allen-Cahn needs u_t and u_xx,
/// Helmholtz needs u_xx and u_yy. Direction index == raw coordinate index.
ChannelLayout interior_layout(ProblemKind kind) {
  if (kind == ProblemKind::allen_cahn) return {2, {1, 2}};
  return {2, {2, 2}};
}

struct ChunkTape {
  std::unique_ptr<Tape> tape;
  std::size_t begin = 0, end = 0;  // point range in the owning set
  int input = -1;                  // embedded leaf
  int out = -1;                    // network output (wrapped if ADF)
  int residual = -1;               // interior chunks only
  int phi = -1;                    // ADF multiplier leaf, if any
};

}  // namespace

struct Evaluator::Impl {
  const net::NetworkParams* net = nullptr;
  ProblemConfig problem;
  CollocationSet colloc;
  ChannelLayout jet_layout;

  std::vector<ChunkTape> interior;
  std::vector<ChunkTape> ic;
  std::vector<ChunkTape> bc;

  std::vector<double> residuals;      // phase A output, all interior points
  std::vector<double> ic_pred;        // phase A forward values at IC points
  std::vector<double> bc_pred;
  bool phase_a_valid = false;

  ad::AdjointArena arena;
  std::vector<double> seed_scratch;

  // prediction tape, rebuilt lazily for a fixed batch size
  std::unique_ptr<Tape> predict_tape;
  int predict_leaf = -1, predict_phi = -1, predict_out = -1;
  int predict_batch = 0;

  std::array<double, 2> coords(const Point2& p) const {
    if (problem.kind == ProblemKind::allen_cahn) return {p.a * problem.time_scale, p.b};
    return {p.a, p.b};
  }

  void fill_input_leaf(Tape& tape, int leaf, ChannelLayout layout,
                       std::span<const Point2> pts) const {
    JetBatch& data = tape.leaf_data(leaf);
    const int dirs[] = {0, 1};
    for (std::size_t i = 0; i < pts.size(); ++i) {
      auto c = coords(pts[i]);
      net::embed_point_jets(problem.embedding, c, layout,
                            std::span<const int>(dirs, static_cast<std::size_t>(layout.ndir)),
                            data, static_cast<int>(i));
    }
  }

  void fill_phi_leaf(Tape& tape, int leaf, ChannelLayout layout,
                     std::span<const Point2> pts) const {
    JetBatch& data = tape.leaf_data(leaf);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (int d = 0; d < layout.ndir || d == 0; ++d) {
        ad::Jet2 p = helmholtz_adf_phi_jet(pts[i].a, pts[i].b, layout.ndir > 0 ? d : -1);
        data.at(0, static_cast<int>(i), 0) = p.v;
        if (layout.ndir > 0) {
          data.at(layout.d1(d), static_cast<int>(i), 0) = p.d1;
          if (layout.order[d] == 2) data.at(layout.d2(d), static_cast<int>(i), 0) = p.d2;
        }
        if (layout.ndir == 0) break;
      }
    }
  }

  /// Records input -> network -> (ADF wrap) on a fresh tape.
  ChunkTape make_net_tape(std::span<const Point2> pts, std::size_t begin, ChannelLayout layout,
                          bool wrap_adf) const {
    ChunkTape ct;
    ct.begin = begin;
    ct.end = begin + pts.size();
    ct.tape = std::make_unique<Tape>(&net->params);
    Tape& t = *ct.tape;
    const int features = problem.embedding.feature_count(2);
    ct.input = t.leaf(layout, static_cast<int>(pts.size()), features);
    fill_input_leaf(t, ct.input, layout, pts);
    ct.out = net::record_forward(t, *net, ct.input);
    if (wrap_adf) {
      ct.phi = t.leaf(layout, static_cast<int>(pts.size()), 1);
      fill_phi_leaf(t, ct.phi, layout, pts);
      ct.out = net::adf_wrap(t, ct.out, ct.phi);
    }
    return ct;
  }

  /// Adds the residual assembly to an interior chunk tape.
  void record_residual(ChunkTape& ct) const {
    Tape& t = *ct.tape;
    const ChannelLayout& l = jet_layout;
    const int u = t.channel(ct.out, 0);
    if (problem.kind == ProblemKind::allen_cahn) {
      const int ut = t.channel(ct.out, l.d1(0));
      const int uxx = t.channel(ct.out, l.d2(1));
      const int u3 = t.mul(t.mul(u, u), u);
      // r = s u_t - 1e-4 u_xx + 5 u^3 - 5 u   (s undoes the input time scale)
      const int xs[] = {ut, uxx, u3, u};
      const double cs[] = {problem.time_scale, -1e-4, 5.0, -5.0};
      ct.residual = t.lincomb(xs, cs);
    } else {
      const int uxx = t.channel(ct.out, l.d2(0));
      const int uyy = t.channel(ct.out, l.d2(1));
      const int n = static_cast<int>(ct.end - ct.begin);
      const int q = t.leaf(ChannelLayout::scalar(), n, 1);
      JetBatch& qd = t.leaf_data(q);
      for (int i = 0; i < n; ++i) {
        const Point2& p = colloc.interior[ct.begin + i];
        qd.at(0, i, 0) =
            helmholtz_forcing(p.a, p.b, problem.helmholtz.a1, problem.helmholtz.a2,
                              problem.helmholtz.k);
      }
      const double k2 = problem.helmholtz.k * problem.helmholtz.k;
      const int xs[] = {uxx, uyy, u, q};
      const double cs[] = {1.0, 1.0, k2, -1.0};
      ct.residual = t.lincomb(xs, cs);
    }
  }

  const Point2* interior_ptr(std::size_t i) const { return &colloc.interior[i]; }
};

Evaluator::Evaluator(const net::NetworkParams& net, const ProblemConfig& problem,
                     const CollocationSet& colloc, std::size_t chunk_points)
    : impl_(std::make_unique<Impl>()) {
  require(chunk_points >= 1, "evaluator: chunk size must be positive");
  require(!colloc.interior.empty(), "evaluator: no interior points");
  require(colloc.ic_points.size() == colloc.ic_values.size(),
          "evaluator: IC point/value count mismatch");
  require(colloc.bc_points.size() == colloc.bc_values.size(),
          "evaluator: BC point/value count mismatch");
  require(!problem.adf || problem.kind == ProblemKind::helmholtz,
          "evaluator: ADF wrap is a Helmholtz configuration");

  impl_->net = &net;
  impl_->problem = problem;
  impl_->colloc = colloc;
  impl_->jet_layout = interior_layout(problem.kind);

  auto chunked = [&](const std::vector<Point2>& pts, ChannelLayout layout, bool adf,
                     bool residual, std::vector<ChunkTape>& out_chunks) {
    for (std::size_t begin = 0; begin < pts.size(); begin += chunk_points) {
      const std::size_t n = std::min(chunk_points, pts.size() - begin);
      ChunkTape ct = impl_->make_net_tape(std::span(pts).subspan(begin, n), begin, layout, adf);
      if (residual) impl_->record_residual(ct);
      out_chunks.push_back(std::move(ct));
    }
  };
  chunked(colloc.interior, impl_->jet_layout, problem.adf, true, impl_->interior);
  chunked(colloc.ic_points, ChannelLayout::scalar(), problem.adf, false, impl_->ic);
  chunked(colloc.bc_points, ChannelLayout::scalar(), problem.adf, false, impl_->bc);

  impl_->residuals.resize(colloc.interior.size());
  impl_->ic_pred.resize(colloc.ic_points.size());
  impl_->bc_pred.resize(colloc.bc_points.size());
}

Evaluator::~Evaluator() = default;

std::span<const double> Evaluator::forward_residuals() {
  for (auto& ct : impl_->interior) {
    ct.tape->forward();
    const JetBatch& r = ct.tape->value(ct.residual);
    std::copy(r.data.begin(), r.data.end(), impl_->residuals.begin() + ct.begin);
  }
  auto run_scalar = [](std::vector<ChunkTape>& chunks, std::vector<double>& out) {
    for (auto& ct : chunks) {
      ct.tape->forward();
      const JetBatch& u = ct.tape->value(ct.out);
      std::copy(u.data.begin(), u.data.end(), out.begin() + ct.begin);
    }
  };
  run_scalar(impl_->ic, impl_->ic_pred);
  run_scalar(impl_->bc, impl_->bc_pred);
  impl_->phase_a_valid = true;
  return impl_->residuals;
}

namespace {

/// Fixed-order loss tail: value of each term plus the seed vector factory.
struct Tail {
  double l_res = 0.0, l_ic = 0.0, l_bc = 0.0;
};

Tail tail_terms(const Evaluator& ev, const std::vector<double>& residuals,
                std::span<const double> lambda, const std::vector<double>& ic_pred,
                const std::vector<double>& bc_pred, const CollocationSet& colloc) {
  (void)ev;
  Tail t;
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    const double lr = lambda[i] * residuals[i];
    t.l_res += lr * lr;
  }
  t.l_res /= static_cast<double>(residuals.size());
  for (std::size_t i = 0; i < ic_pred.size(); ++i) {
    const double d = ic_pred[i] - colloc.ic_values[i];
    t.l_ic += d * d;
  }
  if (!ic_pred.empty()) t.l_ic /= static_cast<double>(ic_pred.size());
  for (std::size_t i = 0; i < bc_pred.size(); ++i) {
    const double d = bc_pred[i] - colloc.bc_values[i];
    t.l_bc += d * d;
  }
  if (!bc_pred.empty()) t.l_bc /= static_cast<double>(bc_pred.size());
  return t;
}

}  // namespace

LossTerms Evaluator::backward_loss(std::span<const double> lambda, const LossWeights& weights,
                                   ParamGradient& grad) {
  Impl& im = *impl_;
  require(im.phase_a_valid, "backward_loss: no forward state");
  require(lambda.size() == im.residuals.size(), "backward_loss: lambda length mismatch");
  require(weights.lambda_ic >= 0.0 && weights.lambda_bc >= 0.0,
          "loss weights must be non-negative");
  grad.zero();

  const Tail tail =
      tail_terms(*this, im.residuals, lambda, im.ic_pred, im.bc_pred, im.colloc);

  const double n_r = static_cast<double>(im.residuals.size());
  for (auto& ct : im.interior) {
    im.seed_scratch.assign(ct.end - ct.begin, 0.0);
    for (std::size_t i = ct.begin; i < ct.end; ++i) {
      const double l = lambda[i];
      im.seed_scratch[i - ct.begin] = 2.0 * l * l * im.residuals[i] / n_r;
    }
    ct.tape->backward(ct.residual, im.seed_scratch, grad, im.arena);
  }
  icbc_grad(weights, grad);

  LossTerms out;
  out.residual = tail.l_res;
  out.ic = tail.l_ic;
  out.bc = tail.l_bc;
  out.total = tail.l_res + weights.lambda_ic * tail.l_ic + weights.lambda_bc * tail.l_bc;
  return out;
}

LossTerms Evaluator::loss_and_grad(std::span<const double> lambda, const LossWeights& weights,
                                   ParamGradient& grad) {
  forward_residuals();
  return backward_loss(lambda, weights, grad);
}

LossTerms Evaluator::loss_only(std::span<const double> lambda, const LossWeights& weights) {
  Impl& im = *impl_;
  forward_residuals();
  const Tail tail =
      tail_terms(*this, im.residuals, lambda, im.ic_pred, im.bc_pred, im.colloc);
  LossTerms out;
  out.residual = tail.l_res;
  out.ic = tail.l_ic;
  out.bc = tail.l_bc;
  out.total = tail.l_res + weights.lambda_ic * tail.l_ic + weights.lambda_bc * tail.l_bc;
  return out;
}

void Evaluator::chunk_residual_grad(int c, std::span<const double> lambda,
                                    ParamGradient& grad) {
  Impl& im = *impl_;
  require(im.phase_a_valid, "chunk_residual_grad: no forward state");
  ChunkTape& ct = im.interior.at(c);
  const double n = static_cast<double>(ct.end - ct.begin);
  im.seed_scratch.assign(ct.end - ct.begin, 0.0);
  for (std::size_t i = ct.begin; i < ct.end; ++i) {
    const double l = lambda[i];
    im.seed_scratch[i - ct.begin] = 2.0 * l * l * im.residuals[i] / n;
  }
  ct.tape->backward(ct.residual, im.seed_scratch, grad, im.arena);
}

void Evaluator::icbc_grad(const LossWeights& weights, ParamGradient& grad) {
  Impl& im = *impl_;
  require(im.phase_a_valid, "icbc_grad: no forward state");
  auto sweep = [&](std::vector<ChunkTape>& chunks, const std::vector<double>& pred,
                   const std::vector<double>& target, double weight) {
    if (weight == 0.0 || pred.empty()) return;
    const double n = static_cast<double>(pred.size());
    for (auto& ct : chunks) {
      im.seed_scratch.assign(ct.end - ct.begin, 0.0);
      for (std::size_t i = ct.begin; i < ct.end; ++i)
        im.seed_scratch[i - ct.begin] = weight * 2.0 * (pred[i] - target[i]) / n;
      ct.tape->backward(ct.out, im.seed_scratch, grad, im.arena);
    }
  };
  sweep(im.ic, im.ic_pred, im.colloc.ic_values, weights.lambda_ic);
  sweep(im.bc, im.bc_pred, im.colloc.bc_values, weights.lambda_bc);
}

std::vector<double> Evaluator::predict(std::span<const Point2> pts) {
  Impl& im = *impl_;
  const int batch = 2048;
  if (!im.predict_tape || im.predict_batch != batch) {
    im.predict_batch = batch;
    im.predict_tape = std::make_unique<Tape>(&im.net->params);
    Tape& t = *im.predict_tape;
    const int features = im.problem.embedding.feature_count(2);
    im.predict_leaf = t.leaf(ChannelLayout::scalar(), batch, features);
    int out = net::record_forward(t, *im.net, im.predict_leaf);
    if (im.problem.adf) {
      im.predict_phi = t.leaf(ChannelLayout::scalar(), batch, 1);
      out = net::adf_wrap(t, out, im.predict_phi);
    }
    im.predict_out = out;
  }
  Tape& t = *im.predict_tape;
  std::vector<double> out(pts.size());
  for (std::size_t begin = 0; begin < pts.size(); begin += batch) {
    const std::size_t n = std::min<std::size_t>(batch, pts.size() - begin);
    JetBatch& leaf = t.leaf_data(im.predict_leaf);
    for (std::size_t i = 0; i < n; ++i) {
      auto c = im.coords(pts[begin + i]);
      net::embed_point_jets(im.problem.embedding, c, ChannelLayout::scalar(), {}, leaf,
                            static_cast<int>(i));
    }
    if (im.problem.adf) {
      JetBatch& phi = t.leaf_data(im.predict_phi);
      for (std::size_t i = 0; i < n; ++i)
        phi.at(0, static_cast<int>(i), 0) = helmholtz_adf_phi(pts[begin + i].a, pts[begin + i].b);
    }
    t.forward();
    const JetBatch& o = t.value(im.predict_out);
    for (std::size_t i = 0; i < n; ++i) out[begin + i] = o.data[i];
  }
  return out;
}

int Evaluator::interior_chunk_count() const { return static_cast<int>(impl_->interior.size()); }

std::pair<std::size_t, std::size_t> Evaluator::interior_chunk_range(int c) const {
  const ChunkTape& ct = impl_->interior.at(c);
  return {ct.begin, ct.end};
}

std::size_t Evaluator::n_interior() const { return impl_->colloc.interior.size(); }

const CollocationSet& Evaluator::colloc() const { return impl_->colloc; }

}  // namespace rba::phys
