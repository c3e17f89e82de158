#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rba/common/error.hpp"

namespace rba::ad {

/// Channel layout of a batched jet buffer. Channel 0 is always the value;
/// each direction contributes a d1 channel and, at order 2, a d2 channel,
/// in direction order. A plain scalar batch has no directions.
struct ChannelLayout {
  int ndir = 0;
  std::array<int, 2> order{0, 0};  // 1 or 2 per direction

  static ChannelLayout scalar() { return {}; }
  static ChannelLayout jet2() { return {1, {2, 0}}; }

  int channels() const {
    int c = 1;
    for (int d = 0; d < ndir; ++d) c += order[d];
    return c;
  }
  int d1(int dir) const {
    int c = 1;
    for (int d = 0; d < dir; ++d) c += order[d];
    return c;
  }
  int d2(int dir) const { return order[dir] == 2 ? d1(dir) + 1 : -1; }

  bool operator==(const ChannelLayout&) const = default;
};

/// Dense batched jet buffer, stored channel-major: channels() contiguous
/// blocks of rows*cols doubles, each row-major.
struct JetBatch {
  ChannelLayout layout;
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  void resize(ChannelLayout l, int r, int c) {
    layout = l;
    rows = r;
    cols = c;
    data.assign(static_cast<std::size_t>(l.channels()) * r * c, 0.0);
  }
  std::size_t block() const { return static_cast<std::size_t>(rows) * cols; }
  double* chan(int c) { return data.data() + c * block(); }
  const double* chan(int c) const { return data.data() + c * block(); }
  double& at(int c, int r, int j) { return data[c * block() + static_cast<std::size_t>(r) * cols + j]; }
  double at(int c, int r, int j) const { return data[c * block() + static_cast<std::size_t>(r) * cols + j]; }
};

/// Named parameter tensor (row-major). Biases use cols = 1.
struct Tensor {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  std::size_t size() const { return v.size(); }
};

/// The full trainable parameter set of a model, in a fixed order.
struct ParamSet {
  std::vector<Tensor> tensors;

  int add(std::string name, int rows, int cols) {
    Tensor t;
    t.name = std::move(name);
    t.rows = rows;
    t.cols = cols;
    t.v.assign(static_cast<std::size_t>(rows) * cols, 0.0);
    tensors.push_back(std::move(t));
    return static_cast<int>(tensors.size()) - 1;
  }
  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += t.size();
    return n;
  }
};

/// Gradient arrays mirroring a ParamSet's shapes.
struct ParamGradient {
  std::vector<Tensor> tensors;

  static ParamGradient zeros_like(const ParamSet& p) {
    ParamGradient g;
    g.tensors = p.tensors;
    g.zero();
    return g;
  }
  void zero() {
    for (auto& t : tensors) std::fill(t.v.begin(), t.v.end(), 0.0);
  }
  void axpy(double a, const ParamGradient& other) {
    for (std::size_t i = 0; i < tensors.size(); ++i)
      for (std::size_t j = 0; j < tensors[i].v.size(); ++j)
        tensors[i].v[j] += a * other.tensors[i].v[j];
  }
  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += t.size();
    return n;
  }
};

enum class OpKind { leaf, affine, tanh_act, mul, lincomb, channel, square, abs, sum, mean };

struct Node {
  OpKind kind = OpKind::leaf;
  ChannelLayout layout;
  int rows = 0, cols = 0;
  std::array<int, 4> args{-1, -1, -1, -1};
  int nargs = 0;
  int w_param = -1, b_param = -1;  // affine
  std::vector<double> coefs;       // lincomb
  std::vector<int> extra_args;     // lincomb with > 4 operands
  int sel_channel = -1;            // channel
  int tag = -1;                    // caller label, reported on numeric failure
  bool needs_grad = false;         // gradient reaches parameters through here
  bool const_leaf = false;
  JetBatch out;
};

class Tape;

/// Reusable adjoint buffers shared across tapes: one backward sweep is live
/// at a time, so a single arena serves every chunk.
class AdjointArena {
 public:
  void prepare(const Tape& tape);
  JetBatch& adj(int node) { return buffers_[node]; }
  bool touched(int node) const { return touched_[node] != 0; }
  void touch(int node);

 private:
  std::vector<JetBatch> buffers_;
  std::vector<char> touched_;
};

/// Reverse-mode tape over batched jet values. Nodes are recorded in
/// evaluation order (operands always precede their consumers); forward()
/// re-evaluates the whole program against the current parameter values and
/// backward() walks it once in reverse.
class Tape {
 public:
  explicit Tape(const ParamSet* params) : params_(params) {}

  // -- graph construction ----------------------------------------------
  int leaf(ChannelLayout layout, int rows, int cols, bool constant = true);
  int affine(int x, int w_param, int b_param, int tag = -1);
  int tanh_act(int x, int tag = -1);
  int mul(int a, int b);
  int lincomb(std::span<const int> xs, std::span<const double> coefs);
  int channel(int x, int chan);
  int square(int x);
  int abs(int x);
  int sum(int x);
  int mean(int x);

  // -- execution ----------------------------------------------------------
  /// Recompute every node. Throws on non-finite values when check_finite().
  void forward();
  /// Seed the adjoint of `root` with `seed` (full buffer length) and sweep.
  /// Parameter gradients are accumulated into `grad`.
  void backward(int root, std::span<const double> seed, ParamGradient& grad,
                AdjointArena& arena) const;

  JetBatch& leaf_data(int node);
  const JetBatch& value(int node) const { return nodes_[node].out; }
  const Node& node(int i) const { return nodes_[i]; }
  int node_count() const { return static_cast<int>(nodes_.size()); }
  const ParamSet& params() const { return *params_; }

  void set_check_finite(bool on) { check_finite_ = on; }
  bool check_finite() const { return check_finite_; }

 private:
  int push(Node n);
  void eval(Node& n);
  void check_node(const Node& n) const;

  const ParamSet* params_ = nullptr;
  std::vector<Node> nodes_;
  bool check_finite_ = false;

  friend class AdjointArena;
};

/// Evaluates `build` on a fresh tape over `params`, then sweeps backward from
/// the returned scalar root. Returns the loss value; gradient lands in `grad`.
double grad_params(const ParamSet& params,
                   const std::function<int(Tape&)>& build, ParamGradient& grad);

}  // namespace rba::ad
