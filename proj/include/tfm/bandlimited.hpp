#pragma once

#include <functional>

#include <Eigen/Dense>

#include "tfm/params.hpp"
#include "tfm/pswf.hpp"
#include "tfm/quadrature.hpp"

namespace tfm {

/// Expansion f(t) = sum_n coeffs[n] psi_n(c, t) against the basis with
/// `params`.
struct BandlimitedFunction {
  SlepianParams params;
  Eigen::VectorXd coeffs;
};

using RealFunction = std::function<double(double)>;

struct ProjectionOptions {
  double center = 0.0;
  // In units of T; the integration window starts at [center - T, center + T].
  double initial_half_width = 1.0;
  double max_half_width = 20.0;
  double marginal_tol = 1e-12;
  // Tails larger than this after reaching the cap are an error.
  double max_tail = 1e-8;
  // Extensions of psi_n carry rounding of order eps / lambda_n, which puts a
  // floor under the achievable relative accuracy; 1e-10 sits above it.
  AdaptiveOptions quadrature{1e-13, 1e-10, 20000};
};

struct ProjectionReport {
  double half_width = 0.0;
  double tail_estimate = 0.0;
  bool converged = false;
  double input_energy = 0.0;     // int f^2 over the same window
  double captured_energy = 0.0;  // sum f_n^2
  double discarded_energy = 0.0; // input - captured, floored at 0
};

/// f_n = int f(t) psi_n(t) dt over the real line, for every extendable n.
/// For f outside the bandlimited span this is the orthogonal projection onto
/// span{psi_0 .. psi_{n_max}}.
BandlimitedFunction project(const RealFunction& f, const ProlateBasis& basis,
                            const ProjectionOptions& options = {}, ProjectionReport* report = nullptr);

/// sum_n g_n psi_n(t).
double synthesize(const BandlimitedFunction& g, const ProlateBasis& basis, double t);

struct BandEnergyOptions {
  double center = 0.0;
  double initial_half_width = 8.0;
  // Both discretization errors are driven below this fraction of the energy.
  double tolerance = 1e-10;
  long max_samples = 1L << 16;
};

struct BandEnergyResult {
  double fraction = 0.0;
  double total_energy = 0.0;
  double half_width = 0.0;
  double step = 0.0;
  double time_tail = 0.0;    // relative energy in the outer half of the window
  double aliasing = 0.0;     // relative spectral energy near the Nyquist edge
  bool requirements_met = false;
};

/// Fraction of the energy of f whose Fourier transform lies in [-omega, omega],
/// using a sampled transform on a grid refined until both the time truncation
/// and the aliasing estimate fall below `tolerance` or the sample cap is hit.
BandEnergyResult band_energy_fraction(const RealFunction& f, double omega,
                                      const BandEnergyOptions& options = {});

}  // namespace tfm
