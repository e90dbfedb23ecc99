#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tfm/pswf.hpp"

namespace tfm {

/// Convex decomposition sum_k weights[k] |Psi_k><Psi_k| of a probe state;
/// row k of `modes` holds the PSWF coefficients of Psi_k.
struct ProbeState {
  Eigen::VectorXd weights;
  Eigen::MatrixXd modes;
  bool orthogonal = false;

  /// Checks weights (non-negative, summing to one), row norms and, if
  /// `orthogonal`, the Gram matrix of the rows.
  void validate() const;
  int dimension() const noexcept { return static_cast<int>(modes.cols()); }
};

/// One POVM element sum_l multipliers[l] |pi_l><pi_l|; row l of `vectors`
/// holds the coefficients of pi_l.
struct PovmElement {
  std::vector<double> multipliers;
  Eigen::MatrixXd vectors;
};

/// Elements 0 .. d-1. The leakage element 1 - sum_i Pi_i is implicit and is
/// always reported as the last probability.
struct Povm {
  std::vector<PovmElement> elements;

  void validate() const;
  int dimension() const;
  int outcome_count() const noexcept { return static_cast<int>(elements.size()) + 1; }
  /// Largest eigenvalue of sum_i Pi_i on the spanned subspace.
  double completeness_top_eigenvalue() const;
};

/// Rank-one projector element onto a single coefficient vector.
PovmElement projector(const Eigen::VectorXd& vector);

inline constexpr double kProbabilityClip = 1e-10;

/// p_i = sum_{k,l} rho_k Pi_il |<pi_il|Psi_k>|^2, p_d = 1 - sum p_i.
Eigen::VectorXd probabilities_ideal(const ProbeState& probe, const Povm& povm);

/// Band- and time-limited measurement: lambda_n(c) enters inside the
/// squared overlap for the monitored elements; the leakage element absorbs
/// the rest.
Eigen::VectorXd probabilities_limited(const ProbeState& probe, const Povm& povm, const ProlateBasis& basis);

/// Overlap sums cut at n = ceil(2c/pi).
Eigen::VectorXd probabilities_truncated(const ProbeState& probe, const Povm& povm, double c);

/// Same formula with an arbitrary per-index weight inside the overlap.
Eigen::VectorXd probabilities_weighted(const ProbeState& probe, const Povm& povm, std::span<const double> weights);

/// Pi_i -> Xi_T Pi_i Xi_T in coefficient space: pi_iln -> pi_iln lambda_n.
Povm time_limit_povm(const Povm& povm, const ProlateBasis& basis);

/// Orthogonal decomposition (eigendecomposition) of the same density operator.
ProbeState eigendecompose(const ProbeState& probe, double tolerance = 1e-14);

/// Parameter vector -> full probability vector, leakage outcome last. Must
/// be safe to call concurrently.
using ProbabilityModel = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct FisherOptions {
  std::vector<double> steps;  // empty: 1e-5 (1 + |theta_n|)
  double p_floor = 1e-12;
  bool include_leakage = true;
  bool richardson = true;
  std::vector<std::string> labels;
};

struct FisherMatrix {
  Eigen::MatrixXd matrix;
  std::vector<std::string> labels;
  std::vector<double> steps;
  std::vector<int> excluded_outcomes;
};

/// F_nm = sum_j (1/p_j) dp_j/dtheta_n dp_j/dtheta_m with central differences
/// (one Richardson step by default). Outcomes with p_j below p_floor are
/// skipped and listed in `excluded_outcomes`.
FisherMatrix fisher_matrix(const ProbabilityModel& model, const Eigen::VectorXd& theta,
                           const FisherOptions& options = {});

/// sqrt((F^{-1})_nn). Throws SingularMatrixError carrying the null direction
/// when the condition number exceeds `condition_cap`.
std::vector<double> crb(const FisherMatrix& fisher, double condition_cap = 1e12);

}  // namespace tfm
