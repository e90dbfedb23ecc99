#include "tfm/hermite_gauss.hpp"

#include <cmath>
#include <numbers>

#include "tfm/error.hpp"

namespace tfm {

double hermite_polynomial(int n, double x) {
  if (n < 0) throw_invalid("Hermite order must be non-negative");
  double prev = 1.0;
  if (n == 0) return prev;
  double cur = 2.0 * x;
  for (int k = 1; k < n; ++k) {
    const double next = 2.0 * x * cur - 2.0 * k * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

double hg_eval(const HermiteGaussMode& mode, double t) {
  if (mode.n < 0) throw_invalid("Hermite-Gauss order must be non-negative");
  if (!(mode.c > 0.0)) throw_invalid("Hermite-Gauss mode needs c > 0");
  const double x = std::sqrt(mode.c) * t;
  // h_k = H_k(x) / sqrt(2^k k!) scaled by exp(log_scale).
  double log_scale = 0.0;
  double prev = 1.0;
  double cur = std::sqrt(2.0) * x;
  if (mode.n == 0) {
    cur = prev;
  } else {
    for (int k = 1; k < mode.n; ++k) {
      const double next = std::sqrt(2.0 / (k + 1)) * x * cur - std::sqrt(static_cast<double>(k) / (k + 1)) * prev;
      prev = cur;
      cur = next;
      const double mag = std::abs(cur);
      if (mag > 1e150) {
        prev /= mag;
        cur /= mag;
        log_scale += std::log(mag);
      }
    }
  }
  if (cur == 0.0) return 0.0;
  const double log_value = 0.25 * std::log(mode.c / std::numbers::pi) - 0.5 * x * x + log_scale + std::log(std::abs(cur));
  return std::copysign(std::exp(log_value), cur);
}

}  // namespace tfm
