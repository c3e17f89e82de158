#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rba/autodiff/jet.hpp"

namespace rba::phys {

enum class ProblemKind { allen_cahn, helmholtz };

struct HelmholtzSpec {
  int a1 = 1;
  int a2 = 4;
  double k = 1.0;
};

/// A 2-d domain point: (t, x) for Allen-Cahn, (x, y) for Helmholtz.
struct Point2 {
  double a = 0.0;
  double b = 0.0;
};

/// Interior residual points plus initial/boundary points with targets.
struct CollocationSet {
  std::vector<Point2> interior;
  std::vector<Point2> ic_points;
  std::vector<double> ic_values;
  std::vector<Point2> bc_points;
  std::vector<double> bc_values;

  std::size_t n_interior() const { return interior.size(); }
};

/// u(0, x) = x^2 cos(pi x).
double allen_cahn_ic(double x);

/// r = u_t - 1e-4 u_xx + 5 u^3 - 5 u, from the output jets of the two
/// coordinate directions (value channels must agree).
double allen_cahn_residual(double u, double u_t, double u_xx);

/// Forcing that makes sin(a1 pi x) sin(a2 pi y) the solution; evaluated as
/// the three displayed terms.
double helmholtz_forcing(double x, double y, int a1, int a2, double k);

/// r = u_xx + u_yy + k^2 u - q(x, y).
double helmholtz_residual(double u, double u_xx, double u_yy, double x, double y,
                          const HelmholtzSpec& spec);

/// Composite distance function for the Helmholtz square, zero on all four
/// edges: phi = (x^2 - 1)(y^2 - 1). Jet version follows the product rule per
/// direction (0 = x, 1 = y).
double helmholtz_adf_phi(double x, double y);
ad::Jet2 helmholtz_adf_phi_jet(double x, double y, int direction);

}  // namespace rba::phys
