#include "tfm/pswf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "tfm/quadrature.hpp"

namespace tfm {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Adjacent eigenvalues closer than this are treated as one cluster whose
// eigenvectors are re-resolved with the commuting differential operator.
constexpr double kClusterGap = 1e-3;

double sinc_kernel_derivative(double t, double z, double omega) {
  const double d = t - z;
  const double x = omega * d;
  if (std::abs(x) < 1e-3) {
    return omega / kPi * (-omega * x / 3.0 + omega * x * x * x / 30.0);
  }
  return (omega * std::cos(x) * d - std::sin(x)) / (kPi * d * d);
}

struct NystromSolution {
  QuadratureRule rule;           // on [-1, 1]
  Eigen::MatrixXd matrix;        // sqrt(w_i) K(x_i, x_j) sqrt(w_j), bandwidth c
  Eigen::VectorXd eigenvalues;   // descending
  Eigen::MatrixXd eigenvectors;  // matching columns, unit 2-norm
};

NystromSolution solve_nystrom(double c, int order) {
  NystromSolution sol;
  sol.rule = gauss_legendre(order);
  const auto& x = sol.rule.nodes;
  const auto& w = sol.rule.weights;
  sol.matrix.resize(order, order);
  for (int i = 0; i < order; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double a = std::sqrt(w[i] * w[j]) * sinc_kernel(x[i], x[j], c);
      sol.matrix(i, j) = a;
      sol.matrix(j, i) = a;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sol.matrix);
  if (solver.info() != Eigen::Success) throw_numerical("symmetric eigensolver failed to converge");
  sol.eigenvalues = solver.eigenvalues().reverse();
  sol.eigenvectors = solver.eigenvectors().rowwise().reverse();
  return sol;
}

// Applies the commuting operator -d/dx (1 - x^2) d/dx + c^2 x^2 to columns of
// orthonormal-Legendre coefficients. In that basis it is k(k+1) on the
// diagonal plus c^2 times the square of the Jacobi matrix of x.
Eigen::MatrixXd apply_prolate_operator(const Eigen::MatrixXd& coeffs, double c) {
  const Eigen::Index n = coeffs.rows();
  auto jacobi = [n](const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(b.rows(), b.cols());
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k > 0) {
        const double a = k / std::sqrt(4.0 * k * k - 1.0);
        out.row(k) += a * b.row(k - 1);
      }
      if (k + 1 < n) {
        const double a = (k + 1) / std::sqrt(4.0 * (k + 1) * (k + 1) - 1.0);
        out.row(k) += a * b.row(k + 1);
      }
    }
    return out;
  };
  Eigen::MatrixXd result = c * c * jacobi(jacobi(coeffs));
  for (Eigen::Index k = 0; k < n; ++k) result.row(k) += static_cast<double>(k * (k + 1)) * coeffs.row(k);
  return result;
}

// Rows: orthonormal Legendre polynomials; columns: sqrt(w_j)-weighted nodes.
// Orthogonal up to rounding because the Gauss rule is exact to degree 2N-1.
Eigen::MatrixXd legendre_transform(const QuadratureRule& rule) {
  const int n = static_cast<int>(rule.nodes.size());
  Eigen::MatrixXd p(n, n);
  for (int j = 0; j < n; ++j) {
    const double x = rule.nodes[j];
    const double sw = std::sqrt(rule.weights[j]);
    double prev = 1.0 / std::sqrt(2.0);
    p(0, j) = sw * prev;
    if (n == 1) continue;
    double cur = std::sqrt(1.5) * x;
    p(1, j) = sw * cur;
    for (int k = 1; k + 1 < n; ++k) {
      const double a_next = (k + 1) / std::sqrt(4.0 * (k + 1) * (k + 1) - 1.0);
      const double a_cur = k / std::sqrt(4.0 * k * k - 1.0);
      const double next = (x * cur - a_cur * prev) / a_next;
      prev = cur;
      cur = next;
      p(k + 1, j) = sw * cur;
    }
  }
  return p;
}

// Within clusters of nearly equal eigenvalues the eigensolver returns an
// arbitrary orthonormal mixture. The prolate differential operator shares the
// eigenfunctions but has a well separated spectrum, so diagonalizing it on
// each cluster's span recovers the individual functions.
void resolve_clusters(NystromSolution& sol, double c, int last_index, int limit) {
  std::vector<std::pair<int, int>> groups;
  int start = 0;
  for (int i = 1; i <= limit; ++i) {
    if (i == limit || sol.eigenvalues[i - 1] - sol.eigenvalues[i] >= kClusterGap) {
      groups.emplace_back(start, i);
      if (i > last_index) break;
      start = i;
    }
  }
  Eigen::MatrixXd transform;
  for (auto [begin, end] : groups) {
    const int m = end - begin;
    if (m < 2) continue;
    if (transform.size() == 0) transform = legendre_transform(sol.rule);
    Eigen::MatrixXd block = sol.eigenvectors.middleCols(begin, m);
    Eigen::MatrixXd coeffs = transform * block;
    Eigen::MatrixXd projected = coeffs.transpose() * apply_prolate_operator(coeffs, c);
    projected = 0.5 * (projected + projected.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(projected);
    if (solver.info() != Eigen::Success) throw_numerical("cluster refinement eigensolver failed");
    const Eigen::VectorXd& chi = solver.eigenvalues();
    for (int k = 0; k + 1 < m; ++k) {
      if (chi[k + 1] - chi[k] < 1e-8 * std::max(1.0, std::abs(chi[k + 1]))) {
        throw_numerical("degenerate eigenvalue cluster at index " + std::to_string(begin + k) +
                        ": the eigenfunctions cannot be separated");
      }
    }
    block = block * solver.eigenvectors();
    for (int k = 0; k < m; ++k) {
      sol.eigenvectors.col(begin + k) = block.col(k);
      sol.eigenvalues[begin + k] = block.col(k).dot(sol.matrix * block.col(k));
    }
  }
}

int distinguishable_count(const NystromSolution& sol) {
  const double threshold = sol.eigenvalues.size() * kEps * std::max(1.0, sol.eigenvalues[0]);
  int count = 0;
  while (count < sol.eigenvalues.size() && sol.eigenvalues[count] > threshold) ++count;
  return count;
}

ProlateBasis assemble(const SlepianParams& params, NystromSolution& sol, int n_max);

}  // namespace

double sinc_kernel(double t, double z, double omega) {
  const double d = t - z;
  const double x = omega * d;
  if (std::abs(x) < 1e-4) {
    const double x2 = x * x;
    return omega / kPi * (1.0 - x2 / 6.0 + x2 * x2 / 120.0);
  }
  return std::sin(x) / (kPi * d);
}

int default_quad_order(double c, int n_max) {
  return std::max({4 * n_max, static_cast<int>(std::ceil(4.0 * c)), 64});
}

int plunge_index(double c) {
  if (!(c > 0.0)) throw_invalid("Slepian frequency c must be positive");
  return static_cast<int>(std::ceil(2.0 * c / kPi));
}

ProlateBasis::ProlateBasis(const SlepianParams& params, std::vector<double> nodes,
                           std::vector<double> weights, std::vector<double> lambdas,
                           Eigen::MatrixXd samples)
    : params_(params),
      nodes_(std::move(nodes)),
      weights_(std::move(weights)),
      lambdas_(std::move(lambdas)),
      samples_(std::move(samples)) {
  extendable_count_ = 0;
  while (extendable_count_ < size() && lambdas_[extendable_count_] >= kEigenvalueFloor) ++extendable_count_;
  extension_.resize(quad_order(), extendable_count_);
  for (int n = 0; n < extendable_count_; ++n) {
    for (int j = 0; j < quad_order(); ++j) {
      extension_(j, n) = weights_[j] * samples_(j, n) / lambdas_[n];
    }
  }
}

ProlateBasis ProlateBasis::from_parts(const SlepianParams& params, std::vector<double> nodes,
                                      std::vector<double> weights, std::vector<double> lambdas,
                                      Eigen::MatrixXd samples) {
  if (nodes.empty() || nodes.size() != weights.size()) throw_invalid("nodes and weights must be non-empty and equally long");
  if (lambdas.empty()) throw_invalid("basis needs at least one eigenvalue");
  if (samples.rows() != static_cast<Eigen::Index>(nodes.size()) ||
      samples.cols() != static_cast<Eigen::Index>(lambdas.size())) {
    throw_invalid("sample matrix shape does not match nodes x eigenvalues");
  }
  for (std::size_t n = 0; n < lambdas.size(); ++n) {
    if (!(lambdas[n] > 0.0 && lambdas[n] <= 1.0)) throw_invalid("eigenvalues must lie in (0, 1]");
    if (n > 0 && lambdas[n] > lambdas[n - 1]) throw_invalid("eigenvalues must be non-increasing");
  }
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    if (std::abs(nodes[j]) > params.T() * (1.0 + 1e-12) || !(weights[j] > 0.0)) {
      throw_invalid("quadrature nodes must lie in [-T, T] with positive weights");
    }
  }
  return ProlateBasis(params, std::move(nodes), std::move(weights), std::move(lambdas), std::move(samples));
}

double ProlateBasis::lambda(int n) const {
  if (n < 0 || n >= size()) throw_invalid("eigenvalue index " + std::to_string(n) + " out of range");
  return lambdas_[n];
}

bool ProlateBasis::extendable(int n) const { return n >= 0 && n < extendable_count_; }

Eigen::VectorXd ProlateBasis::kernel_row(double t) const {
  Eigen::VectorXd k(quad_order());
  const double omega = params_.omega();
  for (int j = 0; j < quad_order(); ++j) k[j] = sinc_kernel(t, nodes_[j], omega);
  return k;
}

double ProlateBasis::eval(int n, double t) const {
  if (n < 0 || n >= size()) throw_invalid("eigenfunction index " + std::to_string(n) + " out of range");
  if (!extendable(n)) {
    throw_numerical("psi_" + std::to_string(n) + " has eigenvalue below the floor and cannot be extended");
  }
  return kernel_row(t).dot(extension_.col(n));
}

Eigen::VectorXd ProlateBasis::eval_all(double t, int count) const {
  if (count < 0) count = extendable_count_;
  if (count > extendable_count_) throw_numerical("requested more eigenfunctions than can be extended");
  return extension_.leftCols(count).transpose() * kernel_row(t);
}

double ProlateBasis::eval_derivative(int n, double t) const {
  if (!extendable(n)) throw_numerical("psi_" + std::to_string(n) + " cannot be extended");
  const double omega = params_.omega();
  double sum = 0.0;
  for (int j = 0; j < quad_order(); ++j) sum += sinc_kernel_derivative(t, nodes_[j], omega) * extension_(j, n);
  return sum;
}

namespace {

ProlateBasis assemble(const SlepianParams& params, NystromSolution& sol, int n_max) {
  const int order = static_cast<int>(sol.rule.nodes.size());
  const int resolvable = distinguishable_count(sol);
  if (n_max >= resolvable) {
    throw_numerical("n_max = " + std::to_string(n_max) + " exceeds the " + std::to_string(resolvable) +
                    " eigenvalues distinguishable from zero at quad_order " + std::to_string(order));
  }
  resolve_clusters(sol, params.c(), n_max, resolvable);

  const double c = params.c();
  const double T = params.T();
  std::vector<double> lambdas(n_max + 1);
  for (int n = 0; n <= n_max; ++n) {
    // The true spectrum lies strictly inside (0, 1); values at or above one
    // are rounding in the plateau.
    double lam = std::min(sol.eigenvalues[n], std::nextafter(1.0, 0.0));
    if (n > 0) lam = std::min(lam, lambdas[n - 1]);
    lambdas[n] = lam;
  }

  std::vector<double> nodes(order);
  std::vector<double> weights(order);
  for (int j = 0; j < order; ++j) {
    nodes[j] = T * sol.rule.nodes[j];
    weights[j] = T * sol.rule.weights[j];
  }

  Eigen::MatrixXd samples(order, n_max + 1);
  for (int n = 0; n <= n_max; ++n) {
    const auto u = sol.eigenvectors.col(n);
    // Parity-based sign: value (even n) or slope (odd n) at the origin,
    // computed in the scaled variable where only the sign matters.
    double probe = 0.0;
    for (int j = 0; j < order; ++j) {
      const double sw = std::sqrt(sol.rule.weights[j]);
      probe += sw * u[j] *
               (n % 2 == 0 ? sinc_kernel(0.0, sol.rule.nodes[j], c) : sinc_kernel_derivative(0.0, sol.rule.nodes[j], c));
    }
    const double sign = probe < 0.0 ? -1.0 : 1.0;
    const double scale = sign * std::sqrt(lambdas[n]);
    for (int j = 0; j < order; ++j) samples(j, n) = scale * u[j] / std::sqrt(weights[j]);
  }
  return ProlateBasis::from_parts(params, std::move(nodes), std::move(weights), std::move(lambdas), std::move(samples));
}

}  // namespace

ProlateBasis build_basis(const SlepianParams& params, int n_max, int quad_order) {
  if (n_max < 0) throw_invalid("n_max must be non-negative");
  const int minimum = default_quad_order(params.c(), n_max);
  const int order = quad_order == 0 ? minimum : quad_order;
  if (order < minimum) {
    throw_invalid("quad_order " + std::to_string(order) + " is below the minimum " + std::to_string(minimum) +
                  " for c = " + std::to_string(params.c()) + ", n_max = " + std::to_string(n_max));
  }
  NystromSolution sol = solve_nystrom(params.c(), order);
  return assemble(params, sol, n_max);
}

ProlateBasis build_resolvable_basis(const SlepianParams& params, int quad_order) {
  int order = quad_order == 0 ? default_quad_order(params.c(), 0) : quad_order;
  while (true) {
    NystromSolution sol = solve_nystrom(params.c(), order);
    int count = 0;
    while (count < sol.eigenvalues.size() && sol.eigenvalues[count] >= kEigenvalueFloor) ++count;
    if (count == 0) throw_numerical("no eigenvalue above the floor");
    const int n_max = count - 1;
    if (quad_order == 0 && default_quad_order(params.c(), n_max) > order) {
      order = default_quad_order(params.c(), n_max);
      continue;
    }
    if (order < default_quad_order(params.c(), n_max)) {
      throw_invalid("quad_order " + std::to_string(order) + " is too small for the resolvable range");
    }
    return assemble(params, sol, n_max);
  }
}

std::vector<Lambda0Point> lambda0_curve(std::span<const double> c_grid) {
  std::vector<Lambda0Point> out;
  out.reserve(c_grid.size());
  for (double c : c_grid) {
    const ProlateBasis basis = build_basis(SlepianParams::from_c(c), 0);
    out.push_back({c, basis.lambda(0)});
  }
  return out;
}

Eigen::MatrixXd whole_line_gram(const ProlateBasis& basis, int count, int omega_order) {
  if (count < 1 || count > basis.extendable_count()) throw_invalid("whole_line_gram: count out of range");
  const double omega = basis.params().omega();
  const int order = omega_order > 0 ? omega_order
                                    : std::max(64, basis.quad_order() + 2 * static_cast<int>(std::ceil(basis.params().c())));
  const QuadratureRule rule = gauss_legendre(order, -omega, omega);
  const auto z = basis.nodes();
  const auto w = basis.weights();
  Eigen::MatrixXd cos_part(order, basis.quad_order());
  Eigen::MatrixXd sin_part(order, basis.quad_order());
  for (int q = 0; q < order; ++q) {
    for (int j = 0; j < basis.quad_order(); ++j) {
      cos_part(q, j) = std::cos(rule.nodes[q] * z[j]) * w[j];
      sin_part(q, j) = std::sin(rule.nodes[q] * z[j]) * w[j];
    }
  }
  Eigen::MatrixXd scaled = basis.samples().leftCols(count);
  for (int n = 0; n < count; ++n) scaled.col(n) /= basis.lambda(n);
  const Eigen::MatrixXd re = cos_part * scaled;
  const Eigen::MatrixXd im = sin_part * scaled;
  const Eigen::VectorXd wq = Eigen::Map<const Eigen::VectorXd>(rule.weights.data(), order);
  Eigen::MatrixXd gram = re.transpose() * wq.asDiagonal() * re + im.transpose() * wq.asDiagonal() * im;
  return gram / (2.0 * kPi);
}

Eigen::MatrixXd window_gram(const ProlateBasis& basis, int count, int order) {
  if (count < 1 || count > basis.extendable_count()) throw_invalid("window_gram: count out of range");
  const double T = basis.params().T();
  const QuadratureRule rule = gauss_legendre(order, -T, T);
  Eigen::MatrixXd values(count, order);
  for (int q = 0; q < order; ++q) values.col(q) = basis.eval_all(rule.nodes[q], count);
  const Eigen::VectorXd wq = Eigen::Map<const Eigen::VectorXd>(rule.weights.data(), order);
  return values * wq.asDiagonal() * values.transpose();
}

double integral_equation_residual(const ProlateBasis& basis, int n, double t, int order) {
  const double T = basis.params().T();
  const double omega = basis.params().omega();
  const QuadratureRule rule = gauss_legendre(order, -T, T);
  double integral = 0.0;
  for (int q = 0; q < order; ++q) {
    integral += rule.weights[q] * sinc_kernel(t, rule.nodes[q], omega) * basis.eval(n, rule.nodes[q]);
  }
  return std::abs(integral - basis.lambda(n) * basis.eval(n, t));
}

}  // namespace tfm
