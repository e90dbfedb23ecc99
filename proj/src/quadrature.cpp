#include "tfm/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>

#include "tfm/error.hpp"

namespace tfm {

QuadratureRule gauss_legendre(int order, double a, double b) {
  if (order < 1) throw_invalid("Gauss-Legendre order must be positive");
  QuadratureRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  const int n = order;
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  if (n == 1) {
    rule.nodes[0] = mid;
    rule.weights[0] = b - a;
    return rule;
  }
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Tricomi initial guess, then Newton on P_n.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node for the weight.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = mid - half * x;
    rule.nodes[n - 1 - i] = mid + half * x;
    rule.weights[i] = half * w;
    rule.weights[n - 1 - i] = half * w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = mid;
  return rule;
}

namespace {

// QUADPACK qk15 abscissae and weights.
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a;
  double b;
  Eigen::VectorXd value;
  double error;
  bool operator<(const Segment& other) const { return error < other.error; }
};

Segment gauss_kronrod(const VectorIntegrand& f, int dim, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  Eigen::VectorXd fc = f(center);
  if (fc.size() != dim) throw_invalid("integrand returned a vector of the wrong size");
  Eigen::VectorXd kronrod = kWgk[7] * fc;
  Eigen::VectorXd gauss = kWg[3] * fc;
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    Eigen::VectorXd sum = f(center - dx) + f(center + dx);
    kronrod += kWgk[j] * sum;
    if (j % 2 == 1) gauss += kWg[j / 2] * sum;
  }
  kronrod *= half;
  gauss *= half;
  const double err = (kronrod - gauss).cwiseAbs().maxCoeff();
  return Segment{a, b, std::move(kronrod), err};
}

}  // namespace

VectorIntegralResult integrate(const VectorIntegrand& f, int dim, double a, double b,
                               const AdaptiveOptions& options) {
  if (dim < 1) throw_invalid("integrand dimension must be positive");
  VectorIntegralResult result;
  if (a == b) {
    result.value = Eigen::VectorXd::Zero(dim);
    result.converged = true;
    return result;
  }
  std::priority_queue<Segment> heap;
  Segment first = gauss_kronrod(f, dim, a, b);
  Eigen::VectorXd total = first.value;
  double total_err = first.error;
  heap.push(std::move(first));
  int intervals = 1;
  auto target = [&] {
    return std::max(options.abs_tol, options.rel_tol * total.cwiseAbs().maxCoeff());
  };
  while (total_err > target() && intervals < options.max_intervals) {
    Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) {
      // Interval cannot be split further in double precision.
      heap.push(std::move(worst));
      break;
    }
    Segment left = gauss_kronrod(f, dim, worst.a, mid);
    Segment right = gauss_kronrod(f, dim, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(std::move(left));
    heap.push(std::move(right));
    ++intervals;
  }
  // Re-sum to shed the drift accumulated by incremental updates.
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
  double err = 0.0;
  while (!heap.empty()) {
    sum += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  result.value = std::move(sum);
  result.error = err;
  result.intervals = intervals;
  result.converged = err <= std::max(options.abs_tol, options.rel_tol * result.value.cwiseAbs().maxCoeff());
  return result;
}

IntegralResult integrate(const std::function<double(double)>& f, double a, double b,
                         const AdaptiveOptions& options) {
  auto r = integrate(
      [&f](double t) {
        Eigen::VectorXd v(1);
        v[0] = f(t);
        return v;
      },
      1, a, b, options);
  return IntegralResult{r.value[0], r.error, r.intervals, r.converged};
}

WholeLineResult integrate_whole_line(const VectorIntegrand& f, int dim,
                                     const WholeLineOptions& options) {
  if (!(options.initial_half_width > 0.0)) throw_invalid("initial half width must be positive");
  if (options.max_half_width < options.initial_half_width) {
    throw_invalid("maximum half width is smaller than the initial half width");
  }
  const double c = options.center;
  double A = options.initial_half_width;
  auto core = integrate(f, dim, c - A, c + A, options.inner);
  WholeLineResult result;
  result.value = core.value;
  result.quadrature_error = core.error;
  result.last_marginal = core.value.cwiseAbs().maxCoeff();
  while (A < options.max_half_width * (1.0 - 1e-12)) {
    // Double, but land exactly on the cap for the last shell.
    const double next = std::min(2.0 * A, options.max_half_width);
    // Shells are judged against the running total, not their own (small) size.
    AdaptiveOptions shell_opts = options.inner;
    shell_opts.abs_tol = std::max(shell_opts.abs_tol, shell_opts.rel_tol * result.value.cwiseAbs().maxCoeff());
    auto right = integrate(f, dim, c + A, c + next, shell_opts);
    auto left = integrate(f, dim, c - next, c - A, shell_opts);
    Eigen::VectorXd shell = right.value + left.value;
    result.value += shell;
    result.quadrature_error += right.error + left.error;
    A = next;
    // Use the larger one-sided piece: the two sides can cancel for odd integrands.
    result.last_marginal = std::max(right.value.cwiseAbs().maxCoeff(), left.value.cwiseAbs().maxCoeff());
    if (result.last_marginal < options.marginal_tol) {
      result.converged = true;
      break;
    }
  }
  result.half_width = A;
  return result;
}

}  // namespace tfm
