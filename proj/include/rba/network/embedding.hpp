#pragma once

#include <span>
#include <vector>

#include "rba/autodiff/jet.hpp"
#include "rba/autodiff/tape.hpp"

namespace rba::net {

enum class EmbeddingKind { none, fourier1d, fourier2d_truncated, fourier2d_full };

/// Trigonometric input expansion. Feature layout is fixed: pass-through axes
/// first (in original coordinate order), then the embedding block.
///
///   fourier1d            [1, cos(wx), sin(wx), ..., cos(m wx), sin(m wx)],
///                        w = 2*pi/period_x, 2m+1 features of embedded_axes[0].
///   fourier2d_truncated  blocks {cos cos}, {cos sin}, {sin cos} over
///                        i = 1..n (x harmonics), j = 1..m (y harmonics),
///                        ordered block-major then i then j; 3nm features.
///   fourier2d_full       as above plus the {sin sin} block; 4nm features.
struct EmbeddingConfig {
  EmbeddingKind kind = EmbeddingKind::none;
  int m = 0;
  int n = 0;
  double period_x = 2.0;
  double period_y = 2.0;
  std::vector<int> embedded_axes;

  int feature_count(int raw_dim) const;
  bool operator==(const EmbeddingConfig&) const = default;
};

/// One-dimensional Fourier features of a scalar coordinate; length 2m+1.
std::vector<double> fourier_embed_1d(double x, int m, double period);

/// Truncated two-dimensional Fourier features (no sin*sin block); length 3nm.
std::vector<double> fourier_embed_2d_truncated(double x, double y, int n, int m,
                                               double period_x, double period_y);

/// Full four-block two-dimensional Fourier features; length 4nm.
std::vector<double> fourier_embed_2d_full(double x, double y, int n, int m, double period_x,
                                          double period_y);

/// Embeds a raw coordinate vector into network features.
void embed_point(const EmbeddingConfig& cfg, std::span<const double> x,
                 std::span<double> out);

/// Fills one row of a batched jet leaf with the embedded features of `x` and
/// their derivatives along each direction in `dirs` (raw coordinate indices,
/// one per layout direction).
void embed_point_jets(const EmbeddingConfig& cfg, std::span<const double> x,
                      const ad::ChannelLayout& layout, std::span<const int> dirs,
                      ad::JetBatch& leaf, int row);

}  // namespace rba::net
