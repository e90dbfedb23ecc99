#include "tfm/superres.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tfm/error.hpp"
#include "tfm/quadrature.hpp"

namespace tfm {

namespace {

constexpr double kPi = std::numbers::pi;

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) throw_invalid(std::string(name) + " must be finite");
}

// Projection of the Gaussian profile computed in the Fourier domain. The
// extended psi_n has transform (1/lambda_n) sum_j w_j psi_n(z_j) e^{-i w z_j}
// on [-Omega, Omega], so by Parseval
//   <psi^{(k)}(. - s), psi_n> = (1/lambda_n) sum_j w_j psi_n(z_j) g_k(z_j - s),
//   g_k(u) = (1/pi) int_0^Omega w^k Psihat(w) cos(w u + k pi/2) dw,
// with Psihat(w) = (8 pi sigma^2)^{1/4} exp(-sigma^2 w^2). This is a fixed
// rule, hence smooth in s, which the finite-difference Fisher matrix needs.
Eigen::VectorXd gaussian_coefficients(double sigma, const ProlateBasis& basis, double shift, int k) {
  const double omega = basis.params().omega();
  const auto nodes = basis.nodes();
  const auto weights = basis.weights();
  double reach = 0.0;
  for (double z : nodes) reach = std::max(reach, std::abs(z - shift));
  const int order = 64 + static_cast<int>(std::ceil(1.5 * omega * reach));
  const QuadratureRule rule = gauss_legendre(order, 0.0, omega);
  const double amp = std::pow(8.0 * kPi * sigma * sigma, 0.25);

  std::vector<double> scaled(rule.nodes.size());
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    const double w = rule.nodes[q];
    scaled[q] = rule.weights[q] * std::pow(w, k) * amp * std::exp(-sigma * sigma * w * w) / kPi;
  }
  const int N = static_cast<int>(nodes.size());
  Eigen::VectorXd g(N);
  for (int j = 0; j < N; ++j) {
    const double u = nodes[j] - shift;
    double acc = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const double x = rule.nodes[q] * u;
      double trig = 0.0;
      switch (k % 4) {
        case 0: trig = std::cos(x); break;
        case 1: trig = -std::sin(x); break;
        case 2: trig = -std::cos(x); break;
        default: trig = std::sin(x); break;
      }
      acc += scaled[q] * trig;
    }
    g[j] = acc * weights[j];
  }
  const int count = basis.extendable_count();
  Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(basis.size());
  for (int n = 0; n < count; ++n) coeffs[n] = basis.samples().col(n).dot(g) / basis.lambda(n);
  return coeffs;
}

double stencil(const RealFunction& f, double t, double h, int k) {
  switch (k) {
    case 0: return f(t);
    case 1: return (f(t + h) - f(t - h)) / (2.0 * h);
    case 2: return (f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h);
    case 3: return (f(t + 2.0 * h) - 2.0 * f(t + h) + 2.0 * f(t - h) - f(t - 2.0 * h)) / (2.0 * h * h * h);
    default: throw_invalid("finite-difference derivatives are only provided up to order 3");
  }
}

Eigen::VectorXd custom_coefficients(const TwoPulseModel& model, const ProlateBasis& basis, double shift, int k) {
  ProjectionOptions opts;
  opts.center = shift;
  auto project_with = [&](double h) {
    const RealFunction f = [&, h](double t) { return stencil(model.psf, t - shift, h, k); };
    return project(f, basis, opts).coeffs;
  };
  if (k == 0) return project_with(0.0);
  const double h = model.fd_step > 0.0 ? model.fd_step : model.scale / 100.0;
  const Eigen::VectorXd coarse = project_with(h);
  const Eigen::VectorXd fine = project_with(0.5 * h);
  const double scale = std::max(fine.norm(), 1e-300);
  const double noise = (fine - coarse).norm() / scale;
  if (noise > model.fd_tolerance) {
    throw_numerical("finite-difference derivative of order " + std::to_string(k) + " is unstable (relative change " +
                    std::to_string(noise) + " between step h and h/2); adjust fd_step");
  }
  // Both stencils are second order; one Richardson step removes h^2.
  return (4.0 * fine - coarse) / 3.0;
}

}  // namespace

double gaussian_psf_value(double sigma, double t) {
  return std::pow(2.0 * kPi * sigma * sigma, -0.25) * std::exp(-t * t / (4.0 * sigma * sigma));
}

TwoPulseModel TwoPulseModel::gaussian_psf(double sigma, double tau, double tau0, double nu) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw_invalid("sigma must be positive and finite");
  TwoPulseModel m;
  m.psf = [sigma](double t) { return gaussian_psf_value(sigma, t); };
  m.scale = sigma;
  m.gaussian = true;
  m.tau = tau;
  m.tau0 = tau0;
  m.nu = nu;
  m.validate();
  return m;
}

TwoPulseModel TwoPulseModel::custom(RealFunction psf, double scale, double tau, double tau0, double nu) {
  TwoPulseModel m;
  m.psf = std::move(psf);
  m.scale = scale;
  m.tau = tau;
  m.tau0 = tau0;
  m.nu = nu;
  m.validate();
  WholeLineOptions opts;
  opts.initial_half_width = scale;
  opts.max_half_width = 1000.0 * scale;
  const auto& f = m.psf;
  const WholeLineResult norm = integrate_whole_line(
      [&f](double t) {
        const double v = f(t);
        return Eigen::VectorXd::Constant(1, v * v);
      },
      1, opts);
  if (!norm.converged) throw_invalid("point-spread function is not square-integrable within 1000 widths");
  if (std::abs(norm.value[0] - 1.0) > 1e-9) {
    throw_invalid("point-spread function must have unit norm (found " + std::to_string(norm.value[0]) + ")");
  }
  return m;
}

void TwoPulseModel::validate() const {
  if (!psf) throw_invalid("two-pulse model has no point-spread function");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw_invalid("psf width scale must be positive and finite");
  require_finite(tau, "tau");
  require_finite(tau0, "tau0");
  if (!(nu >= 0.0 && nu <= 1.0)) throw_invalid("relative intensity nu must lie in [0, 1]");
  if (fd_step < 0.0) throw_invalid("fd_step must be non-negative");
}

double default_sigma(const SlepianParams& params, double kappa) {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw_invalid("kappa must be positive and finite");
  return params.T() / std::sqrt(2.0 * params.c() * kappa);
}

Eigen::VectorXd shifted_psf_coefficients(const TwoPulseModel& model, const ProlateBasis& basis, double shift,
                                         int derivative) {
  if (derivative < 0) throw_invalid("derivative order must be non-negative");
  if (model.gaussian) return gaussian_coefficients(model.scale, basis, shift, derivative);
  return custom_coefficients(model, basis, shift, derivative);
}

ProbeState probe_from_model(const TwoPulseModel& model, const ProlateBasis& basis, ProbeReport* report) {
  model.validate();
  ProbeState probe;
  probe.weights = Eigen::Vector2d(model.nu, 1.0 - model.nu);
  probe.modes.resize(2, basis.size());
  double retained[2];
  const double shifts[2] = {model.tau0 + 0.5 * model.tau, model.tau0 - 0.5 * model.tau};
  for (int r = 0; r < 2; ++r) {
    const Eigen::VectorXd coeffs = shifted_psf_coefficients(model, basis, shifts[r]);
    retained[r] = coeffs.squaredNorm();
    if (!(retained[r] > 1e-12)) throw_numerical("pulse has no energy inside the bandlimited span");
    probe.modes.row(r) = coeffs.transpose() / std::sqrt(retained[r]);
  }
  probe.orthogonal = false;
  if (report != nullptr) {
    report->retained_plus = retained[0];
    report->retained_minus = retained[1];
  }
  return probe;
}

DerivativeBasis gamma_modes(const TwoPulseModel& model, const ProlateBasis& basis, int n_derivs) {
  model.validate();
  if (n_derivs != kDerivativeModes - 1) {
    throw_invalid("the measurement uses exactly four derivative modes (n_derivs = 3)");
  }
  DerivativeBasis db;
  db.params = basis.params();
  db.gamma.resize(n_derivs + 1, basis.size());
  for (int k = 0; k <= n_derivs; ++k) {
    db.gamma.row(k) = shifted_psf_coefficients(model, basis, model.tau0, k).transpose();
  }
  return db;
}

DerivativeBasis gram_schmidt(const DerivativeBasis& gamma) {
  const Eigen::Index rows = gamma.gamma.rows();
  if (rows == 0) throw_invalid("no gamma modes to orthonormalize");
  DerivativeBasis out = gamma;
  out.phi = Eigen::MatrixXd::Zero(rows, gamma.gamma.cols());
  out.transform = Eigen::MatrixXd::Zero(rows, rows);
  for (Eigen::Index k = 0; k < rows; ++k) {
    Eigen::RowVectorXd v = gamma.gamma.row(k);
    Eigen::RowVectorXd t = Eigen::RowVectorXd::Zero(rows);
    t[k] = 1.0;
    const double original = v.norm();
    if (!(original > 0.0)) throw RankDeficiencyError("gamma mode " + std::to_string(k) + " is zero", static_cast<int>(k));
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index j = 0; j < k; ++j) {
        const double r = out.phi.row(j).dot(v);
        v -= r * out.phi.row(j);
        t -= r * out.transform.row(j);
      }
    }
    const double norm = v.norm();
    // Relative residual 1e-7 corresponds to a Gram determinant ratio of 1e-14.
    if (norm < 1e-7 * original) {
      throw RankDeficiencyError("gamma mode " + std::to_string(k) + " is linearly dependent on the previous modes",
                                static_cast<int>(k));
    }
    out.phi.row(k) = v / norm;
    out.transform.row(k) = t / norm;
  }
  return out;
}

void check_constraints(const MeasurementDesign& design) {
  const auto& C = design.C;
  if (std::abs(C(0, 0)) > kConstraintTolerance || std::abs(C(1, 0)) > kConstraintTolerance) {
    throw_invalid("design must satisfy C00 = C10 = 0");
  }
  const std::pair<int, int> nonzero[] = {{0, 1}, {1, 1}, {0, 2}, {1, 2}};
  for (auto [j, k] : nonzero) {
    if (std::abs(C(j, k)) <= kConstraintTolerance) {
      throw_invalid("design entry C" + std::to_string(j) + std::to_string(k) + " must be nonzero");
    }
  }
}

MeasurementDesign design_from_sphere(double r1, double phi1, double r2, double phi2, const FreeEntries& free) {
  if (!(r1 > 0.0) || !(r2 > 0.0) || !std::isfinite(r1) || !std::isfinite(r2)) {
    throw_invalid("sphere radii must be positive and finite");
  }
  for (double phi : {phi1, phi2}) {
    require_finite(phi, "sphere angle");
    const double lattice = phi / (0.5 * kPi);
    if (std::abs(lattice - std::round(lattice)) * 0.5 * kPi <= 1e-12) {
      throw_invalid("sphere angles must avoid multiples of pi/2 so that no coefficient vanishes");
    }
  }
  MeasurementDesign d;
  d.C(0, 1) = r1 * std::sin(phi1);
  d.C(1, 1) = r1 * std::cos(phi1);
  d.C(0, 2) = r2 * std::sin(phi2);
  d.C(1, 2) = r2 * std::cos(phi2);
  d.C(0, 3) = free.c03;
  d.C(1, 3) = free.c13;
  for (int k = 0; k < 4; ++k) d.C(2, k) = free.row2[k];
  d.sphere = SphereParams{r1, phi1, r2, phi2};
  return d;
}

Povm optimal_povm(const MeasurementDesign& design, const DerivativeBasis& dbasis) {
  check_constraints(design);
  if (!dbasis.orthonormalized()) throw_invalid("derivative basis has not been orthonormalized");
  const Eigen::MatrixXd pi = design.C * dbasis.phi;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(pi * pi.transpose());
  const double top = solver.eigenvalues()[2];
  if (top > 1.0 + 1e-9) {
    const Eigen::VectorXd dir = pi.transpose() * solver.eigenvectors().col(2) / std::sqrt(top);
    throw PovmValidityError("design gives POVM elements summing above the identity (top eigenvalue " +
                                std::to_string(top) + ")",
                            top, std::vector<double>(dir.data(), dir.data() + dir.size()));
  }
  if (solver.eigenvalues()[0] <= 1e-12) throw_invalid("design rows are linearly dependent");
  Povm povm;
  for (int j = 0; j < 3; ++j) povm.elements.push_back(projector(pi.row(j).transpose()));
  povm.validate();
  return povm;
}

double efficiency_factor(const MeasurementDesign& design) {
  const auto& C = design.C;
  const double denom = C(0, 1) * C(0, 1) + C(1, 1) * C(1, 1);
  if (!(denom > 0.0)) throw_invalid("efficiency factor needs C01^2 + C11^2 > 0");
  const double cross = C(0, 1) * C(1, 2) - C(1, 1) * C(0, 2);
  return cross * cross / denom;
}

MeasurementDesign time_limited_design(const MeasurementDesign& design, const DerivativeBasis& dbasis,
                                      std::span<const double> weights) {
  if (!dbasis.orthonormalized()) throw_invalid("derivative basis has not been orthonormalized");
  const int dim = dbasis.dimension();
  if (static_cast<int>(weights.size()) < dim) throw_invalid("fewer index weights than basis coefficients");
  const Eigen::Map<const Eigen::VectorXd> w(weights.data(), dim);
  const Eigen::MatrixXd pi = design.C * dbasis.phi;
  MeasurementDesign out = design;
  out.C = pi * w.asDiagonal() * dbasis.phi.transpose();
  out.time_limited = true;
  return out;
}

MeasurementDesign time_limited_design(const MeasurementDesign& design, const DerivativeBasis& dbasis,
                                      const ProlateBasis& basis) {
  if (!(dbasis.params == basis.params()) || dbasis.dimension() > basis.size()) {
    throw_invalid("derivative basis and prolate basis do not match");
  }
  return time_limited_design(design, dbasis, basis.lambdas());
}

EfficiencyBounds efficiency_bounds(const DerivativeBasis& dbasis, const ProlateBasis& basis) {
  if (!dbasis.orthonormalized()) throw_invalid("derivative basis has not been orthonormalized");
  if (!(dbasis.params == basis.params()) || dbasis.dimension() > basis.size()) {
    throw_invalid("derivative basis and prolate basis do not match");
  }
  const Eigen::Map<const Eigen::VectorXd> lam(basis.lambdas().data(), dbasis.dimension());
  EfficiencyBounds b;
  b.bound_phi2 = dbasis.phi.row(2).array().square().matrix().dot(lam);
  b.bound_lambda0 = basis.lambda(0);
  if (b.bound_phi2 > b.bound_lambda0 + 1e-12) {
    throw_numerical("bound chain violated: sum Phi_2n^2 lambda_n exceeds lambda_0");
  }
  return b;
}

Regime parse_regime(const std::string& name) {
  if (name == "ideal") return Regime::kIdeal;
  if (name == "limited") return Regime::kLimited;
  if (name == "truncated") return Regime::kTruncated;
  throw_invalid("unknown regime '" + name + "' (expected ideal, limited or truncated)");
}

const char* regime_name(Regime regime) {
  switch (regime) {
    case Regime::kIdeal: return "ideal";
    case Regime::kLimited: return "limited";
    case Regime::kTruncated: return "truncated";
  }
  return "unknown";
}

ProbabilityModel superres_probability_model(const TwoPulseModel& model, const Povm& povm, const ProlateBasis& basis,
                                            Regime regime, Decomposition decomposition) {
  // The basis is captured by reference and must outlive the returned model.
  return [model, povm, &basis, regime, decomposition](const Eigen::VectorXd& theta) {
    if (theta.size() != 3) throw_invalid("superresolution parameters are (tau, tau0, nu)");
    TwoPulseModel m = model;
    m.tau = theta[0];
    m.tau0 = theta[1];
    m.nu = theta[2];
    ProbeState probe = probe_from_model(m, basis);
    if (decomposition == Decomposition::kEigen) probe = eigendecompose(probe);
    switch (regime) {
      case Regime::kIdeal: return probabilities_ideal(probe, povm);
      case Regime::kLimited: return probabilities_limited(probe, povm, basis);
      case Regime::kTruncated: return probabilities_truncated(probe, povm, basis.params().c());
    }
    throw_invalid("unknown regime");
  };
}

FisherMatrix superres_fisher(const TwoPulseModel& model, const Povm& povm, const ProlateBasis& basis,
                             const SuperresFisherOptions& options) {
  model.validate();
  if (std::abs(model.tau) < options.tau_floor * model.scale) {
    throw_invalid("separation tau = " + std::to_string(model.tau) + " is below the floor " +
                  std::to_string(options.tau_floor * model.scale) + ": parameters are not identifiable there");
  }
  FisherOptions fo = options.fisher;
  if (fo.labels.empty()) fo.labels = {"tau", "tau0", "nu"};
  const Eigen::Vector3d theta(model.tau, model.tau0, model.nu);
  return fisher_matrix(superres_probability_model(model, povm, basis, options.regime, options.decomposition), theta,
                       fo);
}

SuperresResult evaluate_superres(const SuperresConfig& config) {
  const SlepianParams params = SlepianParams::from_c(config.c, config.T);
  const ProlateBasis basis = build_resolvable_basis(params, config.quad_order);
  SuperresResult out;
  out.sigma = config.sigma ? *config.sigma : default_sigma(params, config.kappa);
  out.tau = config.tau ? *config.tau : out.sigma;
  out.basis_size = basis.size();

  const TwoPulseModel model = TwoPulseModel::gaussian_psf(out.sigma, out.tau, config.tau0, config.nu);
  const DerivativeBasis db = gram_schmidt(gamma_modes(model, basis));
  const MeasurementDesign design =
      design_from_sphere(config.design.r1, config.design.phi1, config.design.r2, config.design.phi2, config.free);
  const Povm povm = optimal_povm(design, db);

  out.A_ideal = efficiency_factor(design);
  out.A_limited = efficiency_factor(time_limited_design(design, db, basis));
  out.bounds = efficiency_bounds(db, basis);

  ProbeReport report;
  const ProbeState probe = probe_from_model(model, basis, &report);
  out.retained_energy = std::min(report.retained_plus, report.retained_minus);
  switch (config.regime) {
    case Regime::kIdeal: out.probabilities = probabilities_ideal(probe, povm); break;
    case Regime::kLimited: out.probabilities = probabilities_limited(probe, povm, basis); break;
    case Regime::kTruncated: out.probabilities = probabilities_truncated(probe, povm, config.c); break;
  }

  SuperresFisherOptions fo;
  fo.regime = config.regime;
  fo.tau_floor = config.tau_floor;
  out.fisher = superres_fisher(model, povm, basis, fo);
  try {
    out.crb = crb(out.fisher);
  } catch (const SingularMatrixError&) {
    out.singular = true;
  }
  return out;
}

}  // namespace tfm
