#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace tfm {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre rule of the given order mapped onto [a, b]. Nodes are
/// returned in increasing order.
QuadratureRule gauss_legendre(int order, double a = -1.0, double b = 1.0);

struct AdaptiveOptions {
  double abs_tol = 1e-14;
  double rel_tol = 1e-12;
  int max_intervals = 20000;
};

struct IntegralResult {
  double value = 0.0;
  double error = 0.0;
  int intervals = 0;
  bool converged = false;
};

struct VectorIntegralResult {
  Eigen::VectorXd value;
  double error = 0.0;  // max-norm error estimate
  int intervals = 0;
  bool converged = false;
};

using VectorIntegrand = std::function<Eigen::VectorXd(double)>;

/// Globally adaptive Gauss-Kronrod (7/15) integration of a vector-valued
/// integrand; every component shares the same subdivision.
VectorIntegralResult integrate(const VectorIntegrand& f, int dim, double a, double b,
                               const AdaptiveOptions& options = {});

IntegralResult integrate(const std::function<double(double)>& f, double a, double b,
                         const AdaptiveOptions& options = {});

struct WholeLineOptions {
  double center = 0.0;
  double initial_half_width = 1.0;
  double max_half_width = 20.0;
  // Growth stops once the newest pair of shells contributes less than this.
  double marginal_tol = 1e-12;
  AdaptiveOptions inner;
};

struct WholeLineResult {
  Eigen::VectorXd value;
  double half_width = 0.0;
  double last_marginal = 0.0;  // max-norm of the last shell pair added
  double quadrature_error = 0.0;
  bool converged = false;
};

/// Integral over the real line by integrating [center - A, center + A] and
/// doubling A until the added shells fall below `marginal_tol`, or the cap
/// is reached (then `converged` is false and `last_marginal` says how far
/// off the tail still is).
WholeLineResult integrate_whole_line(const VectorIntegrand& f, int dim,
                                     const WholeLineOptions& options = {});

}  // namespace tfm
