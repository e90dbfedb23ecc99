#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tfm/params.hpp"

namespace tfm {

/// Eigenvalues below this are too small to divide by; the corresponding
/// eigenfunctions are kept in the basis but cannot be extended off the grid.
inline constexpr double kEigenvalueFloor = 1e-13;

/// sin(omega (t - z)) / (pi (t - z)), with the analytic limit omega / pi on
/// the diagonal.
double sinc_kernel(double t, double z, double omega);

/// Smallest admissible Nyström order for the requested index range:
/// max(4 n_max, ceil(4c), 64).
int default_quad_order(double c, int n_max);

/// ceil(2c / pi): the number of eigenvalues close to one.
int plunge_index(double c);

/// Prolate spheroidal wave functions on [-T, T] computed by Nyström
/// discretization of the sinc-kernel integral equation.
///
/// The basis is immutable once built and may be shared between threads.
/// Samples are stored at the Gauss-Legendre nodes with the normalization
/// sum_j w_j psi_n(z_j)^2 = lambda_n, which makes the extended functions
/// unit-norm on the whole line.
class ProlateBasis {
 public:
  const SlepianParams& params() const noexcept { return params_; }
  int n_max() const noexcept { return static_cast<int>(lambdas_.size()) - 1; }
  int size() const noexcept { return static_cast<int>(lambdas_.size()); }
  int quad_order() const noexcept { return static_cast<int>(nodes_.size()); }

  std::span<const double> nodes() const noexcept { return nodes_; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::span<const double> lambdas() const noexcept { return lambdas_; }
  double lambda(int n) const;

  /// Column n holds psi_n at the quadrature nodes.
  const Eigen::MatrixXd& samples() const noexcept { return samples_; }

  /// Whether psi_n can be evaluated away from the nodes (lambda_n above the floor).
  bool extendable(int n) const;

  /// psi_n(t) for any real t through the Nyström extension
  /// psi_n(t) = (1/lambda_n) sum_j w_j K(t, z_j) psi_n(z_j).
  double eval(int n, double t) const;

  /// psi_0(t) ... psi_{count-1}(t) in one pass over the nodes. `count`
  /// defaults to every extendable index.
  Eigen::VectorXd eval_all(double t, int count = -1) const;

  /// d psi_n / dt at t.
  double eval_derivative(int n, double t) const;

  /// Number of leading indices above the extension floor.
  int extendable_count() const noexcept { return extendable_count_; }

  /// Label of the sign convention applied to the eigenvectors.
  static constexpr const char* kSignConvention = "psi_n(0)>0 for even n; psi_n'(0)>0 for odd n";

  /// Reassemble a basis from stored data (deserialization). Validates shapes
  /// and eigenvalue ordering but does not recompute anything.
  static ProlateBasis from_parts(const SlepianParams& params, std::vector<double> nodes,
                                 std::vector<double> weights, std::vector<double> lambdas,
                                 Eigen::MatrixXd samples);

 private:
  ProlateBasis(const SlepianParams& params, std::vector<double> nodes, std::vector<double> weights,
               std::vector<double> lambdas, Eigen::MatrixXd samples);

  Eigen::VectorXd kernel_row(double t) const;

  SlepianParams params_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
  std::vector<double> lambdas_;
  Eigen::MatrixXd samples_;
  // samples_ columns pre-multiplied by w_j / lambda_n, for the extension.
  Eigen::MatrixXd extension_;
  int extendable_count_ = 0;

  friend ProlateBasis build_basis(const SlepianParams&, int, int);
};

/// Solve the integral equation for psi_0 ... psi_{n_max}. quad_order = 0
/// selects default_quad_order. Throws kInvalidArgument for an order below
/// the minimum and kNumerical when n_max reaches eigenvalues that are not
/// distinguishable from zero.
ProlateBasis build_basis(const SlepianParams& params, int n_max, int quad_order = 0);

/// Basis holding every index whose eigenvalue clears kEigenvalueFloor.
ProlateBasis build_resolvable_basis(const SlepianParams& params, int quad_order = 0);

inline double eval_psi(const ProlateBasis& basis, int n, double t) { return basis.eval(n, t); }

struct Lambda0Point {
  double c;
  double lambda0;
};

/// Largest eigenvalue for each c (T = 1; the value depends on c only).
std::vector<Lambda0Point> lambda0_curve(std::span<const double> c_grid);

/// Whole-line Gram matrix of psi_0 ... psi_{count-1}, evaluated in the
/// Fourier domain: the extension has transform
/// (1/lambda_n) sum_j w_j psi_n(z_j) exp(-i w z_j) on [-Omega, Omega],
/// integrated there with `omega_order` Gauss-Legendre points (0 = auto).
Eigen::MatrixXd whole_line_gram(const ProlateBasis& basis, int count, int omega_order = 0);

/// Window Gram matrix int_{-T}^{T} psi_n psi_m, with the extended functions
/// sampled on an independent Gauss-Legendre rule of `order` points.
Eigen::MatrixXd window_gram(const ProlateBasis& basis, int count, int order);

/// |int_{-T}^{T} K(t, z) psi_n(z) dz - lambda_n psi_n(t)| with the integral
/// taken on an independent rule of `order` points.
double integral_equation_residual(const ProlateBasis& basis, int n, double t, int order);

}  // namespace tfm
