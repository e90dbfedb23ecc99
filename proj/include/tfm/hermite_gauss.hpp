#pragma once

namespace tfm {

/// Hermite-Gauss mode of order n whose intensity has variance 1/(2c).
struct HermiteGaussMode {
  int n = 0;
  double c = 1.0;
};

/// (c/pi)^{1/4} exp(-c t^2 / 2) H_n(sqrt(c) t) / sqrt(2^n n!).
///
/// Runs the recurrence for the normalized Hermite functions and carries the
/// Gaussian factor as a separate logarithm, so neither the polynomial nor
/// the normalization overflows for large n or |t|.
double hg_eval(const HermiteGaussMode& mode, double t);

/// Physicists' Hermite polynomial H_n(x) by three-term recurrence.
double hermite_polynomial(int n, double x);

}  // namespace tfm
