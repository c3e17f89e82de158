#pragma once

#include <span>
#include <string>
#include <vector>

namespace rba::oracle {

/// Ground-truth samples on a tensor grid, row-major over axis_a x axis_b.
struct ReferenceField {
  std::vector<double> axis_a;  // t (Allen-Cahn) or x (Helmholtz)
  std::vector<double> axis_b;  // x or y
  std::vector<double> values;
  std::string provenance;

  std::size_t size() const { return values.size(); }
};

/// u(x, y) = sin(a1 pi x) sin(a2 pi y).
double helmholtz_exact(double x, double y, int a1, int a2);

/// ||exact - predicted||_2 / ||exact||_2 over flattened fields.
double relative_l2(std::span<const double> predicted, std::span<const double> exact);

std::vector<double> linspace(double lo, double hi, int n);

}  // namespace rba::oracle
