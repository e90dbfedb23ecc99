#pragma once

#include <array>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tfm/bandlimited.hpp"
#include "tfm/metrology.hpp"
#include "tfm/pswf.hpp"

namespace tfm {

/// Two incoherent copies of a real amplitude profile psf, displaced to
/// tau0 +- tau/2, with intensities nu and 1 - nu.
struct TwoPulseModel {
  RealFunction psf;
  // Width scale of the profile (sigma for the Gaussian). Sets the tau floor
  // and the default finite-difference step for custom profiles.
  double scale = 1.0;
  // Set for the analytic Gaussian; custom profiles go through quadrature.
  bool gaussian = false;
  double tau = 0.0;
  double tau0 = 0.0;
  double nu = 0.5;
  // Finite-difference step for derivatives of custom profiles (0: scale / 100).
  double fd_step = 0.0;
  // Relative disagreement between step h and h/2 that is still accepted.
  double fd_tolerance = 1e-4;

  /// (2 pi sigma^2)^{-1/4} exp(-t^2 / (4 sigma^2)): unit norm, intensity
  /// variance sigma^2.
  static TwoPulseModel gaussian_psf(double sigma, double tau, double tau0 = 0.0, double nu = 0.5);

  /// User profile. Checked for unit norm on the whole line.
  static TwoPulseModel custom(RealFunction psf, double scale, double tau, double tau0 = 0.0, double nu = 0.5);

  void validate() const;
};

/// T / sqrt(2 c kappa).
double default_sigma(const SlepianParams& params, double kappa = 0.5);

/// Unit-norm Gaussian profile value.
double gaussian_psf_value(double sigma, double t);

/// PSWF coefficients of d^k/dt^k psf(t - shift).
Eigen::VectorXd shifted_psf_coefficients(const TwoPulseModel& model, const ProlateBasis& basis, double shift,
                                         int derivative = 0);

struct ProbeReport {
  // Fraction of |Psi_+|^2 and |Psi_-|^2 captured by the basis.
  double retained_plus = 0.0;
  double retained_minus = 0.0;
};

/// Weights (nu, 1 - nu) over the projected, renormalized pulses Psi_+ and
/// Psi_-. Rows are generally not orthogonal.
ProbeState probe_from_model(const TwoPulseModel& model, const ProlateBasis& basis, ProbeReport* report = nullptr);

/// Gamma_k = d^k/dt^k psf(t - tau0) and their Gram-Schmidt orthonormalization
/// Phi = transform * Gamma (rows are coefficient vectors).
struct DerivativeBasis {
  SlepianParams params = SlepianParams::from_c(1.0);
  Eigen::MatrixXd gamma;
  Eigen::MatrixXd phi;
  Eigen::MatrixXd transform;

  int dimension() const noexcept { return static_cast<int>(gamma.cols()); }
  bool orthonormalized() const noexcept { return phi.rows() > 0; }
};

inline constexpr int kDerivativeModes = 4;

DerivativeBasis gamma_modes(const TwoPulseModel& model, const ProlateBasis& basis, int n_derivs = 3);

/// Modified Gram-Schmidt (with one reorthogonalization pass) over the gamma
/// rows. Throws RankDeficiencyError naming the first dependent row.
DerivativeBasis gram_schmidt(const DerivativeBasis& gamma);

struct SphereParams {
  double r1 = 1.0;
  double phi1 = 0.0;
  double r2 = 1.0;
  double phi2 = 0.0;
};

/// Entries of C that the efficiency factor does not depend on.
struct FreeEntries {
  double c03 = 0.0;
  double c13 = 0.0;
  std::array<double, 4> row2{0.0, 0.0, 0.0, 0.0};
};

/// C_jk: |pi_j> = sum_k C_jk |Phi_k>.
struct MeasurementDesign {
  Eigen::Matrix<double, 3, 4> C = Eigen::Matrix<double, 3, 4>::Zero();
  std::optional<SphereParams> sphere;
  bool time_limited = false;
};

inline constexpr double kConstraintTolerance = 1e-12;

/// C00 = C10 = 0 and C01, C11, C02, C12 nonzero.
void check_constraints(const MeasurementDesign& design);

MeasurementDesign design_from_sphere(double r1, double phi1, double r2, double phi2, const FreeEntries& free = {});

/// Three rank-one projectors onto C Phi. Throws PovmValidityError when
/// sum_j |pi_j><pi_j| exceeds the identity and kInvalidArgument when the
/// three vectors are linearly dependent.
Povm optimal_povm(const MeasurementDesign& design, const DerivativeBasis& dbasis);

/// (C01 C12 - C11 C02)^2 / (C01^2 + C11^2).
double efficiency_factor(const MeasurementDesign& design);

/// C~_jk = sum_n Phi_kn lambda_n pi_jn.
MeasurementDesign time_limited_design(const MeasurementDesign& design, const DerivativeBasis& dbasis,
                                      const ProlateBasis& basis);

/// Same substitution with arbitrary per-index weights in place of lambda_n.
MeasurementDesign time_limited_design(const MeasurementDesign& design, const DerivativeBasis& dbasis,
                                      std::span<const double> weights);

struct EfficiencyBounds {
  double bound_phi2 = 0.0;     // sum_n Phi_2n^2 lambda_n
  double bound_lambda0 = 0.0;  // lambda_0
};

EfficiencyBounds efficiency_bounds(const DerivativeBasis& dbasis, const ProlateBasis& basis);

enum class Regime { kIdeal, kLimited, kTruncated };

Regime parse_regime(const std::string& name);
const char* regime_name(Regime regime);

enum class Decomposition { kNatural, kEigen };

struct SuperresFisherOptions {
  Regime regime = Regime::kLimited;
  Decomposition decomposition = Decomposition::kNatural;
  // Separations below tau_floor * scale are refused.
  double tau_floor = 1e-4;
  FisherOptions fisher;
};

/// Probabilities as a function of (tau, tau0, nu).
ProbabilityModel superres_probability_model(const TwoPulseModel& model, const Povm& povm, const ProlateBasis& basis,
                                            Regime regime, Decomposition decomposition = Decomposition::kNatural);

/// Fisher matrix over (tau, tau0, nu) at the model's parameters.
FisherMatrix superres_fisher(const TwoPulseModel& model, const Povm& povm, const ProlateBasis& basis,
                             const SuperresFisherOptions& options = {});

/// One point of a superresolution sweep.
struct SuperresConfig {
  double c = 5.0;
  double T = 1.0;
  std::optional<double> tau;  // unset: tau = sigma
  double tau0 = 0.0;
  double nu = 0.5;
  std::optional<double> sigma;  // unset: default_sigma(c, T, kappa)
  double kappa = 0.5;
  SphereParams design{1.0, std::numbers::pi / 4, 1.0, 3 * std::numbers::pi / 4};
  FreeEntries free{0.0, 0.0, {1.0, 0.0, 0.0, 0.0}};
  Regime regime = Regime::kLimited;
  int quad_order = 0;
  double tau_floor = 1e-4;
};

struct SuperresResult {
  double sigma = 0.0;
  double tau = 0.0;
  int basis_size = 0;
  double retained_energy = 0.0;  // min over the two pulses
  double A_ideal = 0.0;
  double A_limited = 0.0;
  EfficiencyBounds bounds;
  Eigen::VectorXd probabilities;
  FisherMatrix fisher;
  std::vector<double> crb;  // empty when F is singular
  bool singular = false;
};

SuperresResult evaluate_superres(const SuperresConfig& config);

}  // namespace tfm
