#pragma once

#include <span>

#include "rba/network/embedding.hpp"
#include "rba/network/network.hpp"

namespace rba::net {

/// Scalar forward pass of one point (no input derivatives).
double forward_point(const NetworkParams& net, const EmbeddingConfig& embed,
                     std::span<const double> x);

/// Jet forward pass of one point: value plus first and second derivatives of
/// the output with respect to raw input coordinate `direction`. Non-finite
/// intermediates raise an evaluation failure naming the layer.
ad::Jet2 forward_point_jet(const NetworkParams& net, const EmbeddingConfig& embed,
                           std::span<const double> x, int direction);

}  // namespace rba::net
