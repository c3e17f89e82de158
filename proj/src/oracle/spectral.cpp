#include "rba/oracle/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <vector>

#include "rba/common/error.hpp"
#include "rba/physics/problem.hpp"

namespace rba::oracle {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDiffusion = 1e-4;

struct FftPlans {
  int n;
  std::vector<double> real;
  std::vector<std::complex<double>> spec;
  fftw_plan fwd, inv;

  explicit FftPlans(int n_) : n(n_), real(n_), spec(n_ / 2 + 1) {
    fwd = fftw_plan_dft_r2c_1d(n, real.data(), reinterpret_cast<fftw_complex*>(spec.data()),
                               FFTW_ESTIMATE);
    inv = fftw_plan_dft_c2r_1d(n, reinterpret_cast<fftw_complex*>(spec.data()), real.data(),
                               FFTW_ESTIMATE);
  }
  ~FftPlans() {
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(inv);
  }

  /// real -> spec (unnormalized).
  void forward(std::span<const double> u, std::span<std::complex<double>> out) {
    std::copy(u.begin(), u.end(), real.begin());
    fftw_execute(fwd);
    std::copy(spec.begin(), spec.end(), out.begin());
  }
  /// spec -> real, normalized by 1/n.
  void inverse(std::span<const std::complex<double>> in, std::span<double> u) {
    std::copy(in.begin(), in.end(), spec.begin());
    fftw_execute(inv);
    for (int i = 0; i < n; ++i) u[i] = real[i] / n;
  }
};

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

/// phi-function coefficients via a 32-point contour around each h*L value.
struct EtdCoefs {
  std::vector<double> e, e2, q, f1, f2, f3;
};

EtdCoefs etd_coefficients(std::span<const double> lin, double h) {
  const int m = 32;
  const int n = static_cast<int>(lin.size());
  EtdCoefs c;
  c.e.resize(n);
  c.e2.resize(n);
  c.q.resize(n);
  c.f1.resize(n);
  c.f2.resize(n);
  c.f3.resize(n);
  for (int i = 0; i < n; ++i) {
    const double hl = h * lin[i];
    c.e[i] = std::exp(hl);
    c.e2[i] = std::exp(0.5 * hl);
    std::complex<double> q{}, f1{}, f2{}, f3{};
    for (int j = 0; j < m; ++j) {
      const double theta = kPi * (j + 0.5) / m;
      const std::complex<double> z = hl + std::polar(1.0, theta);
      const std::complex<double> ez = std::exp(z);
      const std::complex<double> z2 = z * z, z3 = z2 * z;
      q += (std::exp(0.5 * z) - 1.0) / z;
      f1 += (-4.0 - z + ez * (4.0 - 3.0 * z + z2)) / z3;
      f2 += (2.0 + z + ez * (-2.0 + z)) / z3;
      f3 += (-4.0 - 3.0 * z - z2 + ez * (4.0 - z)) / z3;
    }
    // The contour points cover the upper half circle; conjugate symmetry
    // makes the mean real.
    c.q[i] = h * q.real() / m;
    c.f1[i] = h * f1.real() / m;
    c.f2[i] = h * f2.real() / m;
    c.f3[i] = h * f3.real() / m;
  }
  return c;
}

}  // namespace

std::vector<double> spectral_grid(int n) {
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = -1.0 + 2.0 * i / n;
  return x;
}

ReferenceField allen_cahn_reference(int n_modes, double dt, std::span<const double> t_samples,
                                    std::span<const double> x_samples,
                                    const std::function<double(double)>& ic) {
  require(power_of_two(n_modes) && n_modes >= 128, "spectral: n_modes must be a power of two >= 128");
  require(dt > 0.0 && dt <= 1e-4, "spectral: dt must lie in (0, 1e-4]");
  require(!t_samples.empty(), "spectral: no time samples");
  for (std::size_t i = 1; i < t_samples.size(); ++i)
    require(t_samples[i] > t_samples[i - 1], "spectral: time samples must increase");
  require(t_samples.front() >= 0.0, "spectral: time samples must be non-negative");

  const int n = n_modes;
  const int nc = n / 2 + 1;
  const auto u0_of = ic ? ic : phys::allen_cahn_ic;

  // Wavenumbers k_m = pi m on the length-2 interval; linear symbol of
  // 1e-4 d_xx + 5.
  std::vector<double> lin(nc);
  for (int m = 0; m < nc; ++m) {
    const double k = kPi * m;
    lin[m] = -kDiffusion * k * k + 5.0;
  }
  const EtdCoefs coef = etd_coefficients(lin, dt);

  // 2/3-rule mask for the cubic nonlinearity.
  std::vector<double> dealias(nc, 1.0);
  for (int m = 0; m < nc; ++m)
    if (m > n / 3) dealias[m] = 0.0;

  FftPlans fft(n);
  const auto grid = spectral_grid(n);
  std::vector<double> u(n);
  for (int i = 0; i < n; ++i) u[i] = u0_of(grid[i]);

  std::vector<std::complex<double>> v(nc), nv(nc), na(nc), nb(nc), nvc(nc), a(nc), b(nc), c(nc);
  fft.forward(u, v);

  std::vector<double> work(n);
  auto nonlinear = [&](std::span<const std::complex<double>> spec,
                       std::span<std::complex<double>> out) {
    fft.inverse(spec, work);
    for (int i = 0; i < n; ++i) {
      require(std::fabs(work[i]) <= 10.0, "spectral: solution blow-up");
      work[i] = -5.0 * work[i] * work[i] * work[i];
    }
    fft.forward(work, out);
    for (int m = 0; m < nc; ++m) out[m] *= dealias[m];
  };

  // Output rows: per recorded time, interpolation-ready spectra.
  std::vector<std::vector<std::complex<double>>> recorded;
  recorded.reserve(t_samples.size());
  std::size_t next_sample = 0;
  double t = 0.0;
  auto record_due = [&]() {
    while (next_sample < t_samples.size() && t_samples[next_sample] <= t + 0.5 * dt) {
      recorded.emplace_back(v);
      ++next_sample;
    }
  };
  record_due();

  const double t_end = t_samples.back();
  const long steps = std::lround(std::ceil((t_end - 1e-12) / dt));
  for (long s = 0; s < steps && next_sample < t_samples.size(); ++s) {
    nonlinear(v, nv);
    for (int m = 0; m < nc; ++m) a[m] = coef.e2[m] * v[m] + coef.q[m] * nv[m];
    nonlinear(a, na);
    for (int m = 0; m < nc; ++m) b[m] = coef.e2[m] * v[m] + coef.q[m] * na[m];
    nonlinear(b, nb);
    for (int m = 0; m < nc; ++m) c[m] = coef.e2[m] * a[m] + coef.q[m] * (2.0 * nb[m] - nv[m]);
    nonlinear(c, nvc);
    for (int m = 0; m < nc; ++m)
      v[m] = coef.e[m] * v[m] + coef.f1[m] * nv[m] + 2.0 * coef.f2[m] * (na[m] + nb[m]) +
             coef.f3[m] * nvc[m];
    t = (s + 1) * dt;
    record_due();
  }
  require(next_sample == t_samples.size(), "spectral: integration ended before last sample");

  // Trigonometric interpolation of each recorded slice onto x_samples.
  ReferenceField field;
  field.axis_a.assign(t_samples.begin(), t_samples.end());
  field.axis_b.assign(x_samples.begin(), x_samples.end());
  field.values.resize(t_samples.size() * x_samples.size());
  field.provenance = "spectral(etdrk4, n=" + std::to_string(n) + ", dt=" + std::to_string(dt) + ")";

  const bool native_grid = [&] {
    if (static_cast<int>(x_samples.size()) != n) return false;
    for (int i = 0; i < n; ++i)
      if (std::fabs(x_samples[i] - grid[i]) > 1e-14) return false;
    return true;
  }();

  for (std::size_t ti = 0; ti < recorded.size(); ++ti) {
    const auto& spec = recorded[ti];
    double* row = field.values.data() + ti * x_samples.size();
    if (native_grid) {
      fft.inverse(spec, std::span<double>(row, n));
      continue;
    }
    for (std::size_t xi = 0; xi < x_samples.size(); ++xi) {
      const double phase_base = x_samples[xi] + 1.0;
      double s = spec[0].real();
      for (int m = 1; m < nc - 1; ++m) {
        const double ph = kPi * m * phase_base;
        s += 2.0 * (spec[m].real() * std::cos(ph) - spec[m].imag() * std::sin(ph));
      }
      s += spec[nc - 1].real() * std::cos(kPi * (nc - 1) * phase_base);
      row[xi] = s / n;
    }
  }
  return field;
}

}  // namespace rba::oracle
