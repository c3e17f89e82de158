#include "rba/network/embedding.hpp"

#include <cmath>

#include "rba/common/error.hpp"

namespace rba::net {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

using ad::Jet2;

void check(const EmbeddingConfig& cfg) {
  switch (cfg.kind) {
    case EmbeddingKind::none:
      return;
    case EmbeddingKind::fourier1d:
      require(cfg.period_x > 0.0, "fourier1d: period must be positive");
      require(cfg.m >= 0, "fourier1d: m must be non-negative");
      require(cfg.embedded_axes.size() == 1, "fourier1d embeds exactly one axis");
      return;
    case EmbeddingKind::fourier2d_truncated:
    case EmbeddingKind::fourier2d_full:
      require(cfg.period_x > 0.0 && cfg.period_y > 0.0, "fourier2d: periods must be positive");
      require(cfg.n >= 1 && cfg.m >= 1, "fourier2d: n, m must be at least 1");
      require(cfg.embedded_axes.size() == 2, "fourier2d embeds exactly two axes");
      return;
  }
}

/// Shared feature recipe over any arithmetic type with sin/cos.
template <typename T, typename Out>
void features_1d(const T& x, int m, double period, Out&& emit) {
  using std::sin, std::cos;
  const double w = kTwoPi / period;
  emit(T{} + 1.0);
  for (int i = 1; i <= m; ++i) {
    emit(cos(x * (i * w)));
    emit(sin(x * (i * w)));
  }
}

template <typename T, typename Out>
void features_2d(const T& x, const T& y, int n, int m, double px, double py, bool full,
                 Out&& emit) {
  using std::sin, std::cos;
  const double wx = kTwoPi / px;
  const double wy = kTwoPi / py;
  const int blocks = full ? 4 : 3;
  for (int blk = 0; blk < blocks; ++blk)
    for (int i = 1; i <= n; ++i)
      for (int j = 1; j <= m; ++j) {
        T fx = (blk == 0 || blk == 1) ? cos(x * (i * wx)) : sin(x * (i * wx));
        T fy = (blk == 0 || blk == 2) ? cos(y * (j * wy)) : sin(y * (j * wy));
        emit(fx * fy);
      }
}

template <typename T, typename Out>
void features(const EmbeddingConfig& cfg, std::span<const T> x, Out&& emit) {
  for (std::size_t a = 0; a < x.size(); ++a) {
    bool embedded = false;
    for (int e : cfg.embedded_axes) embedded |= (e == static_cast<int>(a));
    if (!embedded) emit(x[a]);
  }
  switch (cfg.kind) {
    case EmbeddingKind::none:
      return;
    case EmbeddingKind::fourier1d:
      features_1d(x[cfg.embedded_axes[0]], cfg.m, cfg.period_x, emit);
      return;
    case EmbeddingKind::fourier2d_truncated:
    case EmbeddingKind::fourier2d_full:
      features_2d(x[cfg.embedded_axes[0]], x[cfg.embedded_axes[1]], cfg.n, cfg.m,
                  cfg.period_x, cfg.period_y, cfg.kind == EmbeddingKind::fourier2d_full,
                  emit);
      return;
  }
}

}  // namespace

int EmbeddingConfig::feature_count(int raw_dim) const {
  int passthrough = raw_dim - static_cast<int>(embedded_axes.size());
  switch (kind) {
    case EmbeddingKind::none:
      return raw_dim;
    case EmbeddingKind::fourier1d:
      return passthrough + 2 * m + 1;
    case EmbeddingKind::fourier2d_truncated:
      return passthrough + 3 * n * m;
    case EmbeddingKind::fourier2d_full:
      return passthrough + 4 * n * m;
  }
  return raw_dim;
}

std::vector<double> fourier_embed_1d(double x, int m, double period) {
  require(period > 0.0, "fourier1d: period must be positive");
  std::vector<double> out;
  out.reserve(2 * m + 1);
  features_1d(x, m, period, [&](double f) { out.push_back(f); });
  return out;
}

std::vector<double> fourier_embed_2d_truncated(double x, double y, int n, int m,
                                               double period_x, double period_y) {
  require(period_x > 0.0 && period_y > 0.0, "fourier2d: periods must be positive");
  require(n >= 1 && m >= 1, "fourier2d: n, m must be at least 1");
  std::vector<double> out;
  out.reserve(3 * n * m);
  features_2d(x, y, n, m, period_x, period_y, false, [&](double f) { out.push_back(f); });
  return out;
}

std::vector<double> fourier_embed_2d_full(double x, double y, int n, int m, double period_x,
                                          double period_y) {
  require(period_x > 0.0 && period_y > 0.0, "fourier2d: periods must be positive");
  require(n >= 1 && m >= 1, "fourier2d: n, m must be at least 1");
  std::vector<double> out;
  out.reserve(4 * n * m);
  features_2d(x, y, n, m, period_x, period_y, true, [&](double f) { out.push_back(f); });
  return out;
}

void embed_point(const EmbeddingConfig& cfg, std::span<const double> x,
                 std::span<double> out) {
  check(cfg);
  std::size_t k = 0;
  features<double>(cfg, x, [&](double f) { out[k++] = f; });
  require(k == out.size(), "embed_point: feature count mismatch");
}

void embed_point_jets(const EmbeddingConfig& cfg, std::span<const double> x,
                      const ad::ChannelLayout& layout, std::span<const int> dirs,
                      ad::JetBatch& leaf, int row) {
  check(cfg);
  require(static_cast<int>(dirs.size()) == layout.ndir, "embed_point_jets: direction count");
  // One pass per direction; the value channel is identical across passes.
  for (int d = 0; d < layout.ndir || d == 0; ++d) {
    std::vector<Jet2> xj(x.size());
    for (std::size_t a = 0; a < x.size(); ++a)
      xj[a] = (layout.ndir > 0 && static_cast<int>(a) == dirs[d]) ? Jet2::variable(x[a])
                                                                  : Jet2::constant(x[a]);
    int col = 0;
    features<Jet2>(cfg, std::span<const Jet2>(xj), [&](const Jet2& f) {
      leaf.at(0, row, col) = f.v;
      if (layout.ndir > 0) {
        leaf.at(layout.d1(d), row, col) = f.d1;
        if (layout.order[d] == 2) leaf.at(layout.d2(d), row, col) = f.d2;
      }
      ++col;
    });
    if (layout.ndir == 0) break;
  }
}

}  // namespace rba::net
