#pragma once

#include <functional>
#include <span>

#include "rba/oracle/metrics.hpp"

namespace rba::oracle {

/// Pseudo-spectral Allen-Cahn reference: Fourier collocation in x on the
/// periodic interval [-1, 1) with 2/3-rule dealiasing of the cubic term, and
/// fourth-order exponential time differencing (ETDRK4) in t. The linear part
/// (1e-4 u_xx + 5u) is integrated exactly; phi-function coefficients come
/// from a contour integral for stability at small h L.
///
/// Sampling: nearest time step for each requested t, trigonometric
/// interpolation for each requested x. Throws on blow-up (|u| > 10).
ReferenceField allen_cahn_reference(int n_modes, double dt, std::span<const double> t_samples,
                                    std::span<const double> x_samples,
                                    const std::function<double(double)>& ic = {});

/// Default evaluation grid: 201 times on [0, 1], the n-point spectral grid
/// x_j = -1 + 2j/n in space.
std::vector<double> spectral_grid(int n);

}  // namespace rba::oracle
