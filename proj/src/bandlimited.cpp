#include "tfm/bandlimited.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <vector>

#include <fftw3.h>

#include "tfm/error.hpp"

namespace tfm {

BandlimitedFunction project(const RealFunction& f, const ProlateBasis& basis, const ProjectionOptions& options,
                            ProjectionReport* report) {
  const int count = basis.extendable_count();
  const double T = basis.params().T();
  const VectorIntegrand integrand = [&](double t) {
    Eigen::VectorXd out(count + 1);
    const double value = f(t);
    if (!std::isfinite(value)) throw_numerical("projected function returned a non-finite value");
    out.head(count) = value * basis.eval_all(t, count);
    out[count] = value * value;
    return out;
  };
  WholeLineOptions whole;
  whole.center = options.center;
  whole.initial_half_width = options.initial_half_width * T;
  whole.max_half_width = options.max_half_width * T;
  whole.marginal_tol = options.marginal_tol;
  whole.inner = options.quadrature;
  const WholeLineResult result = integrate_whole_line(integrand, count + 1, whole);
  const double tail = result.converged ? result.last_marginal : std::max(result.last_marginal, options.marginal_tol);
  if (!result.converged && result.last_marginal > options.max_tail) {
    throw ConvergenceError("projection tail did not converge: last shell contributes " +
                               std::to_string(result.last_marginal) + " at half width " +
                               std::to_string(result.half_width),
                           result.last_marginal);
  }

  BandlimitedFunction g{basis.params(), Eigen::VectorXd::Zero(basis.size())};
  g.coeffs.head(count) = result.value.head(count);
  if (report != nullptr) {
    report->half_width = result.half_width;
    report->tail_estimate = tail;
    report->converged = result.converged;
    report->input_energy = result.value[count];
    report->captured_energy = g.coeffs.squaredNorm();
    report->discarded_energy = std::max(0.0, report->input_energy - report->captured_energy);
  }
  return g;
}

double synthesize(const BandlimitedFunction& g, const ProlateBasis& basis, double t) {
  if (!(g.params == basis.params())) throw_invalid("coefficient vector was built for a different basis");
  const Eigen::Index count = g.coeffs.size();
  if (count > basis.size()) throw_invalid("more coefficients than basis functions");
  // Trailing zero coefficients may sit on indices that cannot be extended.
  Eigen::Index used = count;
  while (used > 0 && g.coeffs[used - 1] == 0.0) --used;
  if (used == 0) return 0.0;
  if (used > basis.extendable_count()) throw_numerical("coefficient on an index below the eigenvalue floor");
  return g.coeffs.head(used).dot(basis.eval_all(t, static_cast<int>(used)));
}

namespace {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

// r[d] = sum_k x[k] x[k + d] for d = 0 .. n-1.
std::vector<double> autocorrelation(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::size_t size = 1;
  while (size < 2 * n) size <<= 1;
  std::vector<double> buffer(size, 0.0);
  std::copy(x.begin(), x.end(), buffer.begin());
  std::vector<std::complex<double>> spectrum(size / 2 + 1);
  auto* spec = reinterpret_cast<fftw_complex*>(spectrum.data());
  fftw_plan forward;
  fftw_plan backward;
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    forward = fftw_plan_dft_r2c_1d(static_cast<int>(size), buffer.data(), spec, FFTW_ESTIMATE);
    backward = fftw_plan_dft_c2r_1d(static_cast<int>(size), spec, buffer.data(), FFTW_ESTIMATE);
  }
  fftw_execute(forward);
  for (auto& s : spectrum) s = std::norm(s);
  fftw_execute(backward);
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
  }
  std::vector<double> r(n);
  for (std::size_t d = 0; d < n; ++d) r[d] = buffer[d] / static_cast<double>(size);
  return r;
}

// Energy of the sampled signal inside |w| <= omega:
// h^2 sum_{k,l} f_k f_l sin(omega (k-l) h) / (pi (k-l) h).
double low_pass_energy(const std::vector<double>& r, double h, double omega) {
  double sum = r[0] * omega / std::numbers::pi;
  for (std::size_t d = 1; d < r.size(); ++d) {
    const double x = static_cast<double>(d) * h;
    sum += 2.0 * r[d] * std::sin(omega * x) / (std::numbers::pi * x);
  }
  return h * h * sum;
}

}  // namespace

BandEnergyResult band_energy_fraction(const RealFunction& f, double omega, const BandEnergyOptions& options) {
  if (!(omega > 0.0)) throw_invalid("bandwidth must be positive");
  if (!(options.initial_half_width > 0.0)) throw_invalid("initial half width must be positive");
  BandEnergyResult out;
  double A = options.initial_half_width;
  double h = std::numbers::pi / (4.0 * omega);
  while (true) {
    const long half_count = static_cast<long>(std::ceil(A / h));
    const long samples = 2 * half_count + 1;
    std::vector<double> values(samples);
    double total = 0.0;
    double outer = 0.0;
    for (long k = 0; k < samples; ++k) {
      const double offset = static_cast<double>(k - half_count) * h;
      const double v = f(options.center + offset);
      if (!std::isfinite(v)) throw_numerical("band_energy_fraction: non-finite sample");
      values[k] = v;
      total += v * v;
      if (std::abs(offset) >= 0.5 * A) outer += v * v;
    }
    total *= h;
    outer *= h;
    if (!(total > 0.0)) {
      throw_invalid("band_energy_fraction: function has no energy on the sampled window");
    }
    const std::vector<double> r = autocorrelation(values);
    const double nyquist = std::numbers::pi / h;
    // Real signals have symmetric spectra, so the outer band is counted twice
    // by the difference of the two low-pass energies.
    const double near_nyquist = total - low_pass_energy(r, h, 0.5 * nyquist);
    out.total_energy = total;
    out.half_width = A;
    out.step = h;
    out.time_tail = outer / total;
    out.aliasing = std::max(0.0, near_nyquist / total);
    out.fraction = std::clamp(low_pass_energy(r, h, omega) / total, 0.0, 1.0);
    out.requirements_met = out.time_tail < options.tolerance && out.aliasing < options.tolerance;
    if (out.requirements_met) break;
    if (2 * samples > options.max_samples) break;
    if (out.time_tail >= options.tolerance) {
      A *= 2.0;
    } else {
      h *= 0.5;
    }
  }
  return out;
}

}  // namespace tfm
