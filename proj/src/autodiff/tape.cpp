#include "rba/autodiff/tape.hpp"

#include <cmath>
#include <cstring>

#include "rba/common/blas.hpp"

namespace rba::ad {

namespace {

bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// construction

int Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::leaf(ChannelLayout layout, int rows, int cols, bool constant) {
  Node n;
  n.kind = OpKind::leaf;
  n.layout = layout;
  n.rows = rows;
  n.cols = cols;
  n.const_leaf = constant;
  n.needs_grad = false;
  n.out.resize(layout, rows, cols);
  return push(n);
}

int Tape::affine(int x, int w_param, int b_param, int tag) {
  const Node& in = nodes_.at(x);
  const Tensor& w = params_->tensors.at(w_param);
  require(w.cols == in.cols, "affine: weight cols " + std::to_string(w.cols) +
                                 " != input width " + std::to_string(in.cols));
  if (b_param >= 0)
    require(params_->tensors.at(b_param).rows == w.rows, "affine: bias shape mismatch");
  Node n;
  n.kind = OpKind::affine;
  n.layout = in.layout;
  n.rows = in.rows;
  n.cols = w.rows;
  n.args[0] = x;
  n.nargs = 1;
  n.w_param = w_param;
  n.b_param = b_param;
  n.tag = tag;
  n.needs_grad = true;
  n.out.resize(n.layout, n.rows, n.cols);
  return push(n);
}

int Tape::tanh_act(int x, int tag) {
  const Node& in = nodes_.at(x);
  Node n;
  n.kind = OpKind::tanh_act;
  n.layout = in.layout;
  n.rows = in.rows;
  n.cols = in.cols;
  n.args[0] = x;
  n.nargs = 1;
  n.tag = tag;
  n.needs_grad = in.needs_grad;
  n.out.resize(n.layout, n.rows, n.cols);
  return push(n);
}

int Tape::mul(int a, int b) {
  const Node& na = nodes_.at(a);
  const Node& nb = nodes_.at(b);
  require(na.layout == nb.layout && na.rows == nb.rows && na.cols == nb.cols,
          "mul: operand shape mismatch");
  Node n;
  n.kind = OpKind::mul;
  n.layout = na.layout;
  n.rows = na.rows;
  n.cols = na.cols;
  n.args[0] = a;
  n.args[1] = b;
  n.nargs = 2;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  n.out.resize(n.layout, n.rows, n.cols);
  return push(n);
}

int Tape::lincomb(std::span<const int> xs, std::span<const double> coefs) {
  require(!xs.empty() && xs.size() == coefs.size(), "lincomb: operand/coef count mismatch");
  const Node& first = nodes_.at(xs[0]);
  Node n;
  n.kind = OpKind::lincomb;
  n.layout = first.layout;
  n.rows = first.rows;
  n.cols = first.cols;
  for (int x : xs) {
    const Node& nx = nodes_.at(x);
    require(nx.layout == n.layout && nx.rows == n.rows && nx.cols == n.cols,
            "lincomb: operand shape mismatch");
    n.needs_grad = n.needs_grad || nx.needs_grad;
    if (n.nargs < 4)
      n.args[n.nargs++] = x;
    else
      n.extra_args.push_back(x);
  }
  n.coefs.assign(coefs.begin(), coefs.end());
  n.out.resize(n.layout, n.rows, n.cols);
  return push(n);
}

int Tape::channel(int x, int chan) {
  const Node& in = nodes_.at(x);
  require(chan >= 0 && chan < in.layout.channels(), "channel: index out of range");
  Node n;
  n.kind = OpKind::channel;
  n.layout = ChannelLayout::scalar();
  n.rows = in.rows;
  n.cols = in.cols;
  n.args[0] = x;
  n.nargs = 1;
  n.sel_channel = chan;
  n.needs_grad = in.needs_grad;
  n.out.resize(n.layout, n.rows, n.cols);
  return push(n);
}

int Tape::square(int x) {
  const Node& in = nodes_.at(x);
  require(in.layout.channels() == 1, "square: scalar batches only");
  Node n;
  n.kind = OpKind::square;
  n.layout = in.layout;
  n.rows = in.rows;
  n.cols = in.cols;
  n.args[0] = x;
  n.nargs = 1;
  n.needs_grad = in.needs_grad;
  n.out.resize(n.layout, n.rows, n.cols);
  return push(n);
}

int Tape::abs(int x) {
  const Node& in = nodes_.at(x);
  require(in.layout.channels() == 1, "abs: scalar batches only");
  Node n;
  n.kind = OpKind::abs;
  n.layout = in.layout;
  n.rows = in.rows;
  n.cols = in.cols;
  n.args[0] = x;
  n.nargs = 1;
  n.needs_grad = in.needs_grad;
  n.out.resize(n.layout, n.rows, n.cols);
  return push(n);
}

int Tape::sum(int x) {
  const Node& in = nodes_.at(x);
  require(in.layout.channels() == 1, "sum: scalar batches only");
  Node n;
  n.kind = OpKind::sum;
  n.layout = ChannelLayout::scalar();
  n.rows = 1;
  n.cols = 1;
  n.args[0] = x;
  n.nargs = 1;
  n.needs_grad = in.needs_grad;
  n.out.resize(n.layout, 1, 1);
  return push(n);
}

int Tape::mean(int x) {
  const Node& in = nodes_.at(x);
  require(in.layout.channels() == 1, "mean: scalar batches only");
  Node n;
  n.kind = OpKind::mean;
  n.layout = ChannelLayout::scalar();
  n.rows = 1;
  n.cols = 1;
  n.args[0] = x;
  n.nargs = 1;
  n.needs_grad = in.needs_grad;
  n.out.resize(n.layout, 1, 1);
  return push(n);
}

JetBatch& Tape::leaf_data(int node) {
  Node& n = nodes_.at(node);
  require(n.kind == OpKind::leaf, "leaf_data: not a leaf");
  return n.out;
}

// ---------------------------------------------------------------------------
// forward

void Tape::check_node(const Node& n) const {
  if (!all_finite(n.out.data))
    fail("non-finite value in forward evaluation (node tag " + std::to_string(n.tag) + ")");
}

void Tape::eval(Node& n) {
  const std::size_t blk = n.out.block();
  switch (n.kind) {
    case OpKind::leaf:
      return;
    case OpKind::affine: {
      const JetBatch& x = nodes_[n.args[0]].out;
      const Tensor& w = params_->tensors[n.w_param];
      const int c = n.layout.channels();
      // One GEMM per channel, all sharing the weight matrix. Keeping the
      // value channel's GEMM shape equal to the scalar pass makes jet and
      // scalar forwards bit-identical on the value channel.
      for (int ch = 0; ch < c; ++ch)
        gemm(false, true, n.rows, n.cols, x.cols, 1.0, x.chan(ch), x.cols, w.v.data(),
             w.cols, 0.0, n.out.chan(ch), n.cols);
      if (n.b_param >= 0) {
        const Tensor& b = params_->tensors[n.b_param];
        double* v = n.out.chan(0);
        for (int r = 0; r < n.rows; ++r)
          for (int j = 0; j < n.cols; ++j) v[static_cast<std::size_t>(r) * n.cols + j] += b.v[j];
      }
      return;
    }
    case OpKind::tanh_act: {
      const JetBatch& x = nodes_[n.args[0]].out;
      const double* xv = x.chan(0);
      double* ov = n.out.chan(0);
      for (std::size_t i = 0; i < blk; ++i) ov[i] = std::tanh(xv[i]);
      for (int d = 0; d < n.layout.ndir; ++d) {
        const double* x1 = x.chan(n.layout.d1(d));
        double* o1 = n.out.chan(n.layout.d1(d));
        if (n.layout.order[d] == 1) {
          for (std::size_t i = 0; i < blk; ++i) {
            double t = ov[i];
            o1[i] = (1.0 - t * t) * x1[i];
          }
        } else {
          const double* x2 = x.chan(n.layout.d2(d));
          double* o2 = n.out.chan(n.layout.d2(d));
          for (std::size_t i = 0; i < blk; ++i) {
            double t = ov[i];
            double t1 = 1.0 - t * t;
            double t2 = -2.0 * t * t1;
            o1[i] = t1 * x1[i];
            o2[i] = t2 * x1[i] * x1[i] + t1 * x2[i];
          }
        }
      }
      return;
    }
    case OpKind::mul: {
      const JetBatch& a = nodes_[n.args[0]].out;
      const JetBatch& b = nodes_[n.args[1]].out;
      const double* av = a.chan(0);
      const double* bv = b.chan(0);
      double* ov = n.out.chan(0);
      for (std::size_t i = 0; i < blk; ++i) ov[i] = av[i] * bv[i];
      for (int d = 0; d < n.layout.ndir; ++d) {
        const double* a1 = a.chan(n.layout.d1(d));
        const double* b1 = b.chan(n.layout.d1(d));
        double* o1 = n.out.chan(n.layout.d1(d));
        if (n.layout.order[d] == 1) {
          for (std::size_t i = 0; i < blk; ++i) o1[i] = a1[i] * bv[i] + av[i] * b1[i];
        } else {
          const double* a2 = a.chan(n.layout.d2(d));
          const double* b2 = b.chan(n.layout.d2(d));
          double* o2 = n.out.chan(n.layout.d2(d));
          for (std::size_t i = 0; i < blk; ++i) {
            o1[i] = a1[i] * bv[i] + av[i] * b1[i];
            o2[i] = a2[i] * bv[i] + 2.0 * a1[i] * b1[i] + av[i] * b2[i];
          }
        }
      }
      return;
    }
    case OpKind::lincomb: {
      std::fill(n.out.data.begin(), n.out.data.end(), 0.0);
      int k = 0;
      auto accumulate = [&](int arg) {
        const JetBatch& x = nodes_[arg].out;
        const double c = n.coefs[k++];
        for (std::size_t i = 0; i < n.out.data.size(); ++i) n.out.data[i] += c * x.data[i];
      };
      for (int i = 0; i < n.nargs; ++i) accumulate(n.args[i]);
      for (int arg : n.extra_args) accumulate(arg);
      return;
    }
    case OpKind::channel: {
      const JetBatch& x = nodes_[n.args[0]].out;
      std::memcpy(n.out.data.data(), x.chan(n.sel_channel), blk * sizeof(double));
      return;
    }
    case OpKind::square: {
      const JetBatch& x = nodes_[n.args[0]].out;
      for (std::size_t i = 0; i < blk; ++i) n.out.data[i] = x.data[i] * x.data[i];
      return;
    }
    case OpKind::abs: {
      const JetBatch& x = nodes_[n.args[0]].out;
      for (std::size_t i = 0; i < blk; ++i) n.out.data[i] = std::fabs(x.data[i]);
      return;
    }
    case OpKind::sum:
    case OpKind::mean: {
      const JetBatch& x = nodes_[n.args[0]].out;
      double s = 0.0;
      for (double xi : x.data) s += xi;
      n.out.data[0] = n.kind == OpKind::mean ? s / static_cast<double>(x.data.size()) : s;
      return;
    }
  }
}

void Tape::forward() {
  for (auto& n : nodes_) {
    eval(n);
    if (check_finite_ && n.kind != OpKind::leaf) check_node(n);
  }
}

// ---------------------------------------------------------------------------
// backward

void AdjointArena::prepare(const Tape& tape) {
  const int count = tape.node_count();
  if (static_cast<int>(buffers_.size()) < count) buffers_.resize(count);
  touched_.assign(count, 0);
}

void AdjointArena::touch(int node) { touched_[node] = 1; }

namespace {

/// Ensures the adjoint buffer for `node` exists and is zeroed on first touch.
JetBatch& touch_adj(AdjointArena& arena, const Node& n, int node) {
  JetBatch& a = arena.adj(node);
  if (!arena.touched(node)) {
    if (a.layout == n.layout && a.rows == n.rows && a.cols == n.cols)
      std::fill(a.data.begin(), a.data.end(), 0.0);
    else
      a.resize(n.layout, n.rows, n.cols);
    arena.touch(node);
  }
  return a;
}

}  // namespace

void Tape::backward(int root, std::span<const double> seed, ParamGradient& grad,
                    AdjointArena& arena) const {
  arena.prepare(*this);
  const Node& rn = nodes_.at(root);
  require(seed.size() == rn.out.data.size(), "backward: seed length mismatch");
  JetBatch& radj = touch_adj(arena, rn, root);
  std::copy(seed.begin(), seed.end(), radj.data.begin());

  for (int id = root; id >= 0; --id) {
    const Node& n = nodes_[id];
    if (!arena.touched(id) || !n.needs_grad) continue;
    const JetBatch& nadj = arena.adj(id);
    const std::size_t blk = n.out.block();

    auto arg_needs = [&](int arg) { return nodes_[arg].needs_grad; };

    switch (n.kind) {
      case OpKind::leaf:
        break;
      case OpKind::affine: {
        const Node& xn = nodes_[n.args[0]];
        const Tensor& w = params_->tensors[n.w_param];
        const int c = n.layout.channels();
        if (arg_needs(n.args[0])) {
          JetBatch& xadj = touch_adj(arena, xn, n.args[0]);
          // xadj += nadj * W
          gemm(false, false, c * n.rows, xn.cols, n.cols, 1.0, nadj.data.data(), n.cols,
               w.v.data(), w.cols, 1.0, xadj.data.data(), xn.cols);
        }
        // dW += nadj^T * x (stacked channels sum automatically)
        Tensor& gw = grad.tensors[n.w_param];
        gemm(true, false, n.cols, xn.cols, c * n.rows, 1.0, nadj.data.data(), n.cols,
             xn.out.data.data(), xn.cols, 1.0, gw.v.data(), gw.cols);
        if (n.b_param >= 0) {
          Tensor& gb = grad.tensors[n.b_param];
          const double* av = nadj.chan(0);
          for (int r = 0; r < n.rows; ++r)
            for (int j = 0; j < n.cols; ++j) gb.v[j] += av[static_cast<std::size_t>(r) * n.cols + j];
        }
        break;
      }
      case OpKind::tanh_act: {
        if (!arg_needs(n.args[0])) break;
        const Node& xn = nodes_[n.args[0]];
        JetBatch& xadj = touch_adj(arena, xn, n.args[0]);
        const double* ov = n.out.chan(0);
        const double* gv = nadj.chan(0);
        double* xav = xadj.chan(0);
        for (std::size_t i = 0; i < blk; ++i) {
          double t = ov[i];
          xav[i] += gv[i] * (1.0 - t * t);
        }
        for (int d = 0; d < n.layout.ndir; ++d) {
          const double* x1 = xn.out.chan(n.layout.d1(d));
          const double* g1 = nadj.chan(n.layout.d1(d));
          double* xa1 = xadj.chan(n.layout.d1(d));
          if (n.layout.order[d] == 1) {
            for (std::size_t i = 0; i < blk; ++i) {
              double t = ov[i];
              double t1 = 1.0 - t * t;
              double t2 = -2.0 * t * t1;
              xav[i] += g1[i] * t2 * x1[i];
              xa1[i] += g1[i] * t1;
            }
          } else {
            const double* x2 = xn.out.chan(n.layout.d2(d));
            const double* g2 = nadj.chan(n.layout.d2(d));
            double* xa2 = xadj.chan(n.layout.d2(d));
            for (std::size_t i = 0; i < blk; ++i) {
              double t = ov[i];
              double t1 = 1.0 - t * t;
              double t2 = -2.0 * t * t1;
              double t3 = -2.0 * (t1 * t1 + t * t2);
              xav[i] += g1[i] * t2 * x1[i] + g2[i] * (t3 * x1[i] * x1[i] + t2 * x2[i]);
              xa1[i] += g1[i] * t1 + g2[i] * 2.0 * t2 * x1[i];
              xa2[i] += g2[i] * t1;
            }
          }
        }
        break;
      }
      case OpKind::mul: {
        const Node& an = nodes_[n.args[0]];
        const Node& bn = nodes_[n.args[1]];
        const bool need_a = arg_needs(n.args[0]);
        const bool need_b = arg_needs(n.args[1]);
        if (!need_a && !need_b) break;
        JetBatch* aadj = need_a ? &touch_adj(arena, an, n.args[0]) : nullptr;
        JetBatch* badj = need_b ? &touch_adj(arena, bn, n.args[1]) : nullptr;
        const double* av = an.out.chan(0);
        const double* bv = bn.out.chan(0);
        const double* gv = nadj.chan(0);
        if (need_a) {
          double* p = aadj->chan(0);
          for (std::size_t i = 0; i < blk; ++i) p[i] += gv[i] * bv[i];
        }
        if (need_b) {
          double* p = badj->chan(0);
          for (std::size_t i = 0; i < blk; ++i) p[i] += gv[i] * av[i];
        }
        for (int d = 0; d < n.layout.ndir; ++d) {
          const int c1 = n.layout.d1(d);
          const double* a1 = an.out.chan(c1);
          const double* b1 = bn.out.chan(c1);
          const double* g1 = nadj.chan(c1);
          if (n.layout.order[d] == 1) {
            if (need_a) {
              double* pav = aadj->chan(0);
              double* pa1 = aadj->chan(c1);
              for (std::size_t i = 0; i < blk; ++i) {
                pav[i] += g1[i] * b1[i];
                pa1[i] += g1[i] * bv[i];
              }
            }
            if (need_b) {
              double* pbv = badj->chan(0);
              double* pb1 = badj->chan(c1);
              for (std::size_t i = 0; i < blk; ++i) {
                pbv[i] += g1[i] * a1[i];
                pb1[i] += g1[i] * av[i];
              }
            }
          } else {
            const int c2 = n.layout.d2(d);
            const double* a2 = an.out.chan(c2);
            const double* b2 = bn.out.chan(c2);
            const double* g2 = nadj.chan(c2);
            if (need_a) {
              double* pav = aadj->chan(0);
              double* pa1 = aadj->chan(c1);
              double* pa2 = aadj->chan(c2);
              for (std::size_t i = 0; i < blk; ++i) {
                pav[i] += g1[i] * b1[i] + g2[i] * b2[i];
                pa1[i] += g1[i] * bv[i] + 2.0 * g2[i] * b1[i];
                pa2[i] += g2[i] * bv[i];
              }
            }
            if (need_b) {
              double* pbv = badj->chan(0);
              double* pb1 = badj->chan(c1);
              double* pb2 = badj->chan(c2);
              for (std::size_t i = 0; i < blk; ++i) {
                pbv[i] += g1[i] * a1[i] + g2[i] * a2[i];
                pb1[i] += g1[i] * av[i] + 2.0 * g2[i] * a1[i];
                pb2[i] += g2[i] * av[i];
              }
            }
          }
        }
        break;
      }
      case OpKind::lincomb: {
        int k = 0;
        auto propagate = [&](int arg) {
          const double c = n.coefs[k++];
          if (!arg_needs(arg)) return;
          JetBatch& xadj = touch_adj(arena, nodes_[arg], arg);
          for (std::size_t i = 0; i < nadj.data.size(); ++i) xadj.data[i] += c * nadj.data[i];
        };
        for (int i = 0; i < n.nargs; ++i) propagate(n.args[i]);
        for (int arg : n.extra_args) propagate(arg);
        break;
      }
      case OpKind::channel: {
        if (!arg_needs(n.args[0])) break;
        const Node& xn = nodes_[n.args[0]];
        JetBatch& xadj = touch_adj(arena, xn, n.args[0]);
        double* dst = xadj.chan(n.sel_channel);
        for (std::size_t i = 0; i < blk; ++i) dst[i] += nadj.data[i];
        break;
      }
      case OpKind::square: {
        if (!arg_needs(n.args[0])) break;
        const Node& xn = nodes_[n.args[0]];
        JetBatch& xadj = touch_adj(arena, xn, n.args[0]);
        for (std::size_t i = 0; i < blk; ++i) xadj.data[i] += 2.0 * xn.out.data[i] * nadj.data[i];
        break;
      }
      case OpKind::abs: {
        if (!arg_needs(n.args[0])) break;
        const Node& xn = nodes_[n.args[0]];
        JetBatch& xadj = touch_adj(arena, xn, n.args[0]);
        for (std::size_t i = 0; i < blk; ++i) {
          double x = xn.out.data[i];
          double s = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
          xadj.data[i] += s * nadj.data[i];
        }
        break;
      }
      case OpKind::sum:
      case OpKind::mean: {
        if (!arg_needs(n.args[0])) break;
        const Node& xn = nodes_[n.args[0]];
        JetBatch& xadj = touch_adj(arena, xn, n.args[0]);
        double g = nadj.data[0];
        if (n.kind == OpKind::mean) g /= static_cast<double>(xn.out.data.size());
        for (std::size_t i = 0; i < xadj.data.size(); ++i) xadj.data[i] += g;
        break;
      }
    }
  }
}

double grad_params(const ParamSet& params, const std::function<int(Tape&)>& build,
                   ParamGradient& grad) {
  Tape tape(&params);
  int root = build(tape);
  tape.forward();
  const JetBatch& out = tape.value(root);
  require(out.data.size() == 1, "grad_params: closure must end in a scalar");
  double loss = out.data[0];
  require(std::isfinite(loss), "grad_params: non-finite loss");
  AdjointArena arena;
  const double seed = 1.0;
  tape.backward(root, std::span<const double>(&seed, 1), grad, arena);
  return loss;
}

}  // namespace rba::ad
