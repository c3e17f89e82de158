#include "rba/oracle/metrics.hpp"

#include <cmath>

#include "rba/common/error.hpp"

namespace rba::oracle {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double helmholtz_exact(double x, double y, int a1, int a2) {
  return std::sin(a1 * kPi * x) * std::sin(a2 * kPi * y);
}

double relative_l2(std::span<const double> predicted, std::span<const double> exact) {
  require(predicted.size() == exact.size(), "relative_l2: field size mismatch");
  double err = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    const double d = exact[i] - predicted[i];
    err += d * d;
    ref += exact[i] * exact[i];
  }
  require(ref > 0.0, "relative_l2: exact field has zero norm");
  return std::sqrt(err / ref);
}

std::vector<double> linspace(double lo, double hi, int n) {
  require(n >= 1, "linspace: need at least one sample");
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
  return v;
}

}  // namespace rba::oracle
