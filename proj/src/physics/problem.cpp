#include "rba/physics/problem.hpp"

#include <cmath>

namespace rba::phys {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double allen_cahn_ic(double x) { return x * x * std::cos(kPi * x); }

double allen_cahn_residual(double u, double u_t, double u_xx) {
  return u_t - 1e-4 * u_xx + 5.0 * u * u * u - 5.0 * u;
}

double helmholtz_forcing(double x, double y, int a1, int a2, double k) {
  const double sx = std::sin(a1 * kPi * x);
  const double sy = std::sin(a2 * kPi * y);
  return -(a1 * kPi) * (a1 * kPi) * sx * sy - (a2 * kPi) * (a2 * kPi) * sx * sy +
         k * sx * sy;
}

double helmholtz_residual(double u, double u_xx, double u_yy, double x, double y,
                          const HelmholtzSpec& spec) {
  return u_xx + u_yy + spec.k * spec.k * u - helmholtz_forcing(x, y, spec.a1, spec.a2, spec.k);
}

double helmholtz_adf_phi(double x, double y) { return (x * x - 1.0) * (y * y - 1.0); }

ad::Jet2 helmholtz_adf_phi_jet(double x, double y, int direction) {
  using ad::Jet2;
  Jet2 xj = direction == 0 ? Jet2::variable(x) : Jet2::constant(x);
  Jet2 yj = direction == 1 ? Jet2::variable(y) : Jet2::constant(y);
  return (xj * xj - 1.0) * (yj * yj - 1.0);
}

}  // namespace rba::phys
