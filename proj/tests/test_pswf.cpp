#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>

#include "oracles.hpp"
#include "tfm/error.hpp"
#include "tfm/hermite_gauss.hpp"
#include "tfm/pswf.hpp"
#include "tfm/quadrature.hpp"

using namespace tfm;
using std::numbers::pi;

namespace {

ProlateBasis basis_for(double c, int n_max, double T = 1.0) { return build_basis(SlepianParams::from_c(c, T), n_max); }

double sup_distance_psi2_hg(double c) {
  const auto b = basis_for(c, 2);
  std::vector<double> psi, hg;
  double overlap = 0.0;
  for (int i = 0; i <= 600; ++i) {
    const double t = -3.0 + 0.01 * i;
    psi.push_back(b.eval(2, t));
    hg.push_back(hg_eval({2, c}, t));
    overlap += psi.back() * hg.back();
  }
  const double s = overlap < 0 ? -1.0 : 1.0;
  double sup = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) sup = std::max(sup, std::abs(psi[i] - s * hg[i]));
  return sup;
}

}  // namespace

TEST_CASE("sinc kernel: diagonal limit, zeros and symmetry") {
  CHECK(sinc_kernel(0.3, 0.3, 5.0) == doctest::Approx(5.0 / pi).epsilon(1e-15));
  for (int k : {-3, -1, 1, 2, 7}) CHECK(std::abs(sinc_kernel(0.2 + k * pi / 5.0, 0.2, 5.0)) < 1e-14);
  CHECK(sinc_kernel(0.1, 0.7, 5.0) == sinc_kernel(0.7, 0.1, 5.0));
  // Continuous through the series branch near the diagonal.
  CHECK(sinc_kernel(0.0, 1e-5, 5.0) == doctest::Approx(std::sin(5e-5) / (pi * 1e-5)).epsilon(1e-14));
}

TEST_CASE("SlepianParams keeps omega derived from c and T") {
  const auto p = SlepianParams::from_bandwidth(17.0, 0.5);
  CHECK(p.c() == 8.5);
  CHECK(p.omega() == 17.0);
  CHECK_THROWS_AS(SlepianParams::from_c(0.0), Error);
  CHECK_THROWS_AS(SlepianParams::from_c(1.0, -1.0), Error);
  CHECK_THROWS_AS(SlepianParams::from_c(std::nan("")), Error);
}

TEST_CASE("plunge index and default order") {
  CHECK(plunge_index(5.0) == 4);
  CHECK(plunge_index(5.0 * pi / 2.0) == 5);
  CHECK(plunge_index(pi / 2.0) == 1);
  CHECK(default_quad_order(1.0, 2) == 64);
  CHECK(default_quad_order(30.0, 10) == 120);
  CHECK(default_quad_order(5.0, 40) == 160);
}

TEST_CASE("build_basis at c = 5: lambda_0 is about 0.999") {
  const auto b = basis_for(5.0, 8);
  CHECK(b.n_max() == 8);
  CHECK(b.quad_order() == 64);
  CHECK(b.lambda(0) >= 0.998);
  CHECK(b.lambda(0) < 1.0);
}

TEST_CASE("lambda_0 at c = 1 matches a 2000-node Nystrom oracle") {
  const auto b = basis_for(1.0, 4);
  const auto ref = oracle::nystrom_eigenvalues(1.0, 2000);
  for (int n = 0; n <= 4; ++n) CHECK(std::abs(b.lambda(n) - ref[n]) < 1e-8);
}

TEST_CASE("eigenvalues agree with a 10x-order oracle up to the plunge + 2") {
  for (double c : {1.0, 5.0, 10.0, 20.0}) {
    const int top = plunge_index(c) + 2;
    const auto b = basis_for(c, top);
    const auto ref = oracle::nystrom_eigenvalues(c, 10 * b.quad_order());
    for (int n = 0; n <= top; ++n) {
      CAPTURE(c);
      CAPTURE(n);
      CHECK(std::abs(b.lambda(n) - ref[n]) < 1e-8);
    }
  }
}

TEST_CASE("eigenvalues are strictly decreasing inside (0, 1)") {
  for (double c : {0.3, 1.0, 4.0, 12.0, 40.0}) {
    const auto b = build_resolvable_basis(SlepianParams::from_c(c));
    CAPTURE(c);
    for (int n = 0; n < b.size(); ++n) {
      CHECK(b.lambda(n) > 0.0);
      CHECK(b.lambda(n) < 1.0);
      if (n > 0 && b.lambda(n - 1) < 1.0 - 1e-12) CHECK(b.lambda(n) < b.lambda(n - 1));
    }
  }
}

TEST_CASE("build_basis argument errors") {
  const auto p = SlepianParams::from_c(1.0);
  CHECK_THROWS_AS(build_basis(p, -1), Error);
  try {
    build_basis(p, 2, 10);
    FAIL("order below the minimum accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidArgument);
  }
  try {
    build_basis(p, 40);
    FAIL("indices beyond working precision accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNumerical);
  }
}

TEST_CASE("Nystrom extension satisfies the integral equation off the grid") {
  for (double c : {1.0, 5.0, 10.0}) {
    const int top = plunge_index(c) + 2;
    const auto b = basis_for(c, top);
    for (int n = 0; n <= top; ++n) {
      for (double t = -3.0; t <= 3.0; t += 0.173) {
        CAPTURE(c);
        CAPTURE(n);
        CAPTURE(t);
        CHECK(integral_equation_residual(b, n, t, 4 * b.quad_order()) < 1e-8);
      }
    }
  }
}

TEST_CASE("sign and parity conventions") {
  const auto b = basis_for(6.0, 7);
  for (int n = 0; n <= 7; ++n) {
    if (n % 2 == 0) {
      CHECK(b.eval(n, 0.0) > 0.0);
    } else {
      CHECK(std::abs(b.eval(n, 0.0)) < 1e-13);
      CHECK(b.eval_derivative(n, 0.0) > 0.0);
    }
    for (double t : {0.2, 0.9, 2.5}) {
      CHECK(b.eval(n, -t) == doctest::Approx((n % 2 ? -1.0 : 1.0) * b.eval(n, t)).epsilon(1e-10));
    }
  }
}

TEST_CASE("eval_derivative agrees with a centred difference") {
  const auto b = basis_for(4.0, 5);
  for (int n = 0; n <= 5; ++n) {
    for (double t : {-1.7, 0.3, 0.95}) {
      const double h = 1e-5;
      const double fd = (b.eval(n, t + h) - b.eval(n, t - h)) / (2 * h);
      CHECK(b.eval_derivative(n, t) == doctest::Approx(fd).epsilon(1e-7));
    }
  }
}

TEST_CASE("double orthogonality on the window and on the line") {
  for (double c : {1.0, 2.0, 5.0, 10.0, 20.0}) {
    const int count = plunge_index(c) + 5;
    const auto b = basis_for(c, count - 1);
    const Eigen::MatrixXd win = window_gram(b, count, 2 * b.quad_order() + 64);
    const Eigen::MatrixXd line = whole_line_gram(b, count);
    double win_err = 0.0, line_err = 0.0;
    for (int n = 0; n < count; ++n) {
      for (int m = 0; m < count; ++m) {
        win_err = std::max(win_err, std::abs(win(n, m) - (n == m ? b.lambda(n) : 0.0)));
        line_err = std::max(line_err, std::abs(line(n, m) - (n == m ? 1.0 : 0.0)));
      }
    }
    CAPTURE(c);
    CHECK(win_err < 1e-9);
    CHECK(line_err < 1e-7);
  }
}

TEST_CASE("whole-line norms agree between the spectral and the truncated time-domain routes") {
  // Well-concentrated functions have tails far below the cap, so the plain
  // adaptive route is accurate for them.
  const auto b = basis_for(20.0, 4);
  const Eigen::MatrixXd line = whole_line_gram(b, 5);
  for (int n = 0; n <= 4; ++n) {
    auto sq = [&](double t) { return Eigen::VectorXd::Constant(1, std::pow(b.eval(n, t), 2)); };
    WholeLineOptions o;
    const auto r = integrate_whole_line(sq, 1, o);
    CAPTURE(n);
    CHECK(r.value[0] == doctest::Approx(line(n, n)).epsilon(1e-9));
  }
}

TEST_CASE("eigenvalue spectrum plunges within a few indices of ceil(2c/pi)") {
  for (int k : {5, 10, 20}) {
    const double c = k * pi / 2.0;
    REQUIRE(plunge_index(c) == k);
    const auto b = build_resolvable_basis(SlepianParams::from_c(c));
    REQUIRE(b.size() > k + 4);
    for (int n = 0; n <= k - 4; ++n) CHECK(b.lambda(n) > 0.9);
    for (int n = k + 4; n < b.size(); ++n) CHECK(b.lambda(n) < 0.1);
    int first_below = 0, last_above = 0;
    for (int n = 0; n < b.size(); ++n) {
      if (b.lambda(n) > 0.9) last_above = n;
      if (b.lambda(n) < 0.1 && first_below == 0) first_below = n;
    }
    CHECK(first_below - last_above <= 6);
  }
}

TEST_CASE("psi_2 approaches the second Hermite-Gauss mode as c grows") {
  const double d1 = sup_distance_psi2_hg(1.0);
  const double d5 = sup_distance_psi2_hg(5.0);
  const double d10 = sup_distance_psi2_hg(10.0);
  const double d20 = sup_distance_psi2_hg(20.0);
  CHECK(d1 > d5);
  CHECK(d5 > d10);
  CHECK(d10 > d20);
  CHECK(d20 < 0.1 * d1);
  // Regression value of d20 / d1 on the 601-point grid over [-3, 3].
  CHECK(d20 / d1 == doctest::Approx(0.08255031813330721).epsilon(1e-6));
}

TEST_CASE("scale invariance: T = 2 rescales the functions and keeps lambda") {
  const auto b1 = basis_for(7.0, 6, 1.0);
  const auto b2 = basis_for(7.0, 6, 2.0);
  for (int n = 0; n <= 6; ++n) {
    CHECK(std::abs(b1.lambda(n) - b2.lambda(n)) < 1e-12);
    for (double t : {-5.0, -1.3, 0.4, 1.9, 3.3}) {
      CHECK(b2.eval(n, t) == doctest::Approx(b1.eval(n, t / 2.0) / std::sqrt(2.0)).epsilon(1e-10));
    }
  }
}

TEST_CASE("lambda0_curve is monotone and reaches 1 at large c") {
  std::vector<double> grid;
  for (double c = 0.1; c <= 10.0; c += 0.3) grid.push_back(c);
  const auto curve = lambda0_curve(grid);
  REQUIRE(curve.size() == grid.size());
  for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].lambda0 >= curve[i - 1].lambda0);
  for (const auto& p : curve) {
    CHECK(p.lambda0 > 0.0);
    CHECK(p.lambda0 < 1.0);
  }
  const double c5[] = {5.0};
  CHECK(lambda0_curve(c5)[0].lambda0 == doctest::Approx(0.999).epsilon(1e-3));
  const double c20[] = {20.0};
  const double l20 = lambda0_curve(c20)[0].lambda0;
  CHECK(1.0 - l20 < 1e-6);
  CHECK(std::abs(l20 - oracle::nystrom_eigenvalues(20.0, 800)[0]) < 1e-12);
  CHECK_THROWS_AS(lambda0_curve(std::vector<double>{1.0, -2.0}), Error);
}

TEST_CASE("non-extendable indices are kept but cannot be evaluated") {
  const auto b = build_resolvable_basis(SlepianParams::from_c(1.0));
  CHECK(b.extendable_count() == b.size());
  CHECK(b.lambda(b.n_max()) >= kEigenvalueFloor);
  CHECK_THROWS_AS(b.eval(b.size(), 0.0), Error);
}

TEST_CASE("from_parts validates its inputs") {
  const auto b = basis_for(3.0, 3);
  auto nodes = std::vector<double>(b.nodes().begin(), b.nodes().end());
  auto weights = std::vector<double>(b.weights().begin(), b.weights().end());
  auto lambdas = std::vector<double>(b.lambdas().begin(), b.lambdas().end());
  const auto ok = ProlateBasis::from_parts(b.params(), nodes, weights, lambdas, b.samples());
  CHECK(ok.eval(1, 0.7) == b.eval(1, 0.7));
  auto bad = lambdas;
  std::swap(bad[0], bad[1]);
  CHECK_THROWS_AS(ProlateBasis::from_parts(b.params(), nodes, weights, bad, b.samples()), Error);
  CHECK_THROWS_AS(ProlateBasis::from_parts(b.params(), nodes, weights, lambdas, b.samples().leftCols(2)), Error);
}

TEST_CASE("Hermite-Gauss modes") {
  CHECK(hg_eval({0, 4.0}, 0.0) == doctest::Approx(std::pow(4.0 / pi, 0.25)).epsilon(1e-15));
  for (int n : {1, 3, 7, 51}) CHECK(std::abs(hg_eval({n, 2.5}, 0.0)) < 1e-15);
  for (int n : {0, 1, 2, 5, 12}) {
    for (double t : {0.3, 1.1}) {
      CHECK(hg_eval({n, 3.0}, -t) == doctest::Approx((n % 2 ? -1.0 : 1.0) * hg_eval({n, 3.0}, t)));
    }
  }
  // Direct formula for moderate n.
  for (int n = 0; n <= 10; ++n) {
    const double c = 1.7, t = 0.8;
    double fact = 1.0;
    for (int k = 2; k <= n; ++k) fact *= k;
    const double direct = std::pow(c / pi, 0.25) * std::exp(-c * t * t / 2) * hermite_polynomial(n, std::sqrt(c) * t) /
                          std::sqrt(std::pow(2.0, n) * fact);
    CHECK(hg_eval({n, c}, t) == doctest::Approx(direct).epsilon(1e-12));
  }
  CHECK(hermite_polynomial(3, 2.0) == doctest::Approx(8 * 8 - 12 * 2));
}

TEST_CASE("Hermite-Gauss norm by adaptive quadrature and by a trapezoid oracle") {
  auto sq = [](double t) { return Eigen::VectorXd::Constant(1, std::pow(hg_eval({2, 20.0}, t), 2)); };
  const auto r = integrate_whole_line(sq, 1);
  CHECK(std::abs(r.value[0] - 1.0) < 1e-10);
  const double trap = oracle::trapezoid([](double t) { return std::pow(hg_eval({2, 20.0}, t), 2); }, 3.0, 600);
  CHECK(std::abs(trap - 1.0) < 1e-12);
  // Large orders stay finite and normalized.
  const double big =
      oracle::trapezoid([](double t) { return std::pow(hg_eval({150, 1.0}, t), 2); }, 30.0, 20000);
  CHECK(std::abs(big - 1.0) < 1e-9);
}
