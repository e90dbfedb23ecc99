#pragma once

#include <cmath>
#include <string>

#include "tfm/error.hpp"

namespace tfm {

/// Time-bandwidth configuration. Only c and T are stored; the bandwidth is
/// always derived as c / T so the three can never disagree.
class SlepianParams {
 public:
  static SlepianParams from_c(double c, double T = 1.0) { return SlepianParams(c, T); }

  static SlepianParams from_bandwidth(double omega, double T) {
    if (!(omega > 0.0) || !std::isfinite(omega)) {
      throw_invalid("bandwidth must be positive and finite");
    }
    return SlepianParams(omega * T, T);
  }

  double c() const noexcept { return c_; }
  double T() const noexcept { return T_; }
  double omega() const noexcept { return c_ / T_; }

  friend bool operator==(const SlepianParams&, const SlepianParams&) = default;

 private:
  SlepianParams(double c, double T) : c_(c), T_(T) {
    if (!(c > 0.0) || !std::isfinite(c)) throw_invalid("Slepian frequency c must be positive and finite");
    if (!(T > 0.0) || !std::isfinite(T)) throw_invalid("half-window T must be positive and finite");
  }

  double c_;
  double T_;
};

}  // namespace tfm
