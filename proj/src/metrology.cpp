#include "tfm/metrology.hpp"

#include <algorithm>
#include <cmath>

#include "tfm/error.hpp"

namespace tfm {

namespace {

constexpr double kNormSlack = 1e-9;

void check_probabilities(Eigen::VectorXd& p) {
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] < -kProbabilityClip) {
      if (i + 1 == p.size()) {
        throw_numerical("leakage probability " + std::to_string(p[i]) + " is negative: the POVM is over-complete");
      }
      throw_numerical("negative probability " + std::to_string(p[i]) + " for outcome " + std::to_string(i));
    }
    if (p[i] < 0.0) p[i] = 0.0;
  }
}

}  // namespace

void ProbeState::validate() const {
  if (weights.size() == 0) throw_invalid("probe state has no components");
  if (weights.size() != modes.rows()) throw_invalid("probe weights and mode rows differ in count");
  if ((weights.array() < 0.0).any()) throw_invalid("probe weights must be non-negative");
  if (std::abs(weights.sum() - 1.0) > 1e-12) throw_invalid("probe weights must sum to one");
  for (Eigen::Index k = 0; k < modes.rows(); ++k) {
    if (modes.row(k).squaredNorm() > 1.0 + kNormSlack) {
      throw_invalid("probe component " + std::to_string(k) + " has norm above one");
    }
  }
  if (orthogonal) {
    const Eigen::MatrixXd gram = modes * modes.transpose();
    if ((gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() > kNormSlack) {
      throw_invalid("probe components flagged orthogonal are not orthonormal");
    }
  }
}

PovmElement projector(const Eigen::VectorXd& vector) {
  PovmElement e;
  e.multipliers = {1.0};
  e.vectors = vector.transpose();
  return e;
}

int Povm::dimension() const {
  if (elements.empty()) return 0;
  return static_cast<int>(elements.front().vectors.cols());
}

double Povm::completeness_top_eigenvalue() const {
  int rows = 0;
  for (const auto& e : elements) rows += static_cast<int>(e.vectors.rows());
  if (rows == 0) return 0.0;
  Eigen::MatrixXd stacked(rows, dimension());
  int r = 0;
  for (const auto& e : elements) {
    for (Eigen::Index l = 0; l < e.vectors.rows(); ++l) {
      stacked.row(r++) = std::sqrt(std::max(0.0, e.multipliers[l])) * e.vectors.row(l);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(stacked * stacked.transpose());
  return solver.eigenvalues().maxCoeff();
}

void Povm::validate() const {
  if (elements.empty()) throw_invalid("POVM needs at least one monitored element");
  const int dim = dimension();
  int rows = 0;
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const auto& e = elements[i];
    if (static_cast<Eigen::Index>(e.multipliers.size()) != e.vectors.rows()) {
      throw_invalid("POVM element " + std::to_string(i) + ": multiplier count differs from vector count");
    }
    if (e.vectors.cols() != dim) throw_invalid("POVM elements use different coefficient dimensions");
    for (std::size_t l = 0; l < e.multipliers.size(); ++l) {
      if (!(e.multipliers[l] >= 0.0)) throw_invalid("POVM multipliers must be non-negative");
      if (e.vectors.row(static_cast<Eigen::Index>(l)).squaredNorm() > 1.0 + kNormSlack) {
        throw_invalid("POVM vector (" + std::to_string(i) + ", " + std::to_string(l) + ") has norm above one");
      }
    }
    rows += static_cast<int>(e.vectors.rows());
  }
  Eigen::MatrixXd stacked(rows, dim);
  int r = 0;
  for (const auto& e : elements) {
    for (Eigen::Index l = 0; l < e.vectors.rows(); ++l) {
      stacked.row(r++) = std::sqrt(e.multipliers[l]) * e.vectors.row(l);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(stacked * stacked.transpose());
  const Eigen::Index top = rows - 1;
  const double mu = solver.eigenvalues()[top];
  if (mu > 1.0 + kNormSlack) {
    Eigen::VectorXd dir = stacked.transpose() * solver.eigenvectors().col(top) / std::sqrt(mu);
    throw PovmValidityError("POVM elements sum above the identity (top eigenvalue " + std::to_string(mu) + ")", mu,
                            std::vector<double>(dir.data(), dir.data() + dir.size()));
  }
}

Eigen::VectorXd probabilities_weighted(const ProbeState& probe, const Povm& povm, std::span<const double> weights) {
  probe.validate();
  povm.validate();
  const int dim = probe.dimension();
  if (povm.dimension() != dim) {
    throw_invalid("probe and POVM use different coefficient dimensions (" + std::to_string(dim) + " vs " +
                  std::to_string(povm.dimension()) + ")");
  }
  if (static_cast<int>(weights.size()) < dim) throw_invalid("fewer index weights than coefficients");
  const Eigen::Map<const Eigen::VectorXd> w(weights.data(), dim);
  Eigen::VectorXd p(povm.outcome_count());
  double captured = 0.0;
  for (std::size_t i = 0; i < povm.elements.size(); ++i) {
    const auto& e = povm.elements[i];
    // overlaps(l, k) = sum_n pi_iln w_n Psi_kn
    const Eigen::MatrixXd overlaps = (e.vectors * w.asDiagonal()) * probe.modes.transpose();
    double pi = 0.0;
    for (Eigen::Index l = 0; l < overlaps.rows(); ++l) {
      pi += e.multipliers[l] * overlaps.row(l).array().square().matrix().dot(probe.weights);
    }
    p[static_cast<Eigen::Index>(i)] = pi;
    captured += pi;
  }
  p[p.size() - 1] = 1.0 - captured;
  check_probabilities(p);
  return p;
}

Eigen::VectorXd probabilities_ideal(const ProbeState& probe, const Povm& povm) {
  const std::vector<double> ones(probe.dimension(), 1.0);
  return probabilities_weighted(probe, povm, ones);
}

Eigen::VectorXd probabilities_limited(const ProbeState& probe, const Povm& povm, const ProlateBasis& basis) {
  if (probe.dimension() > basis.size()) throw_invalid("probe has more coefficients than the basis");
  return probabilities_weighted(probe, povm, basis.lambdas());
}

Eigen::VectorXd probabilities_truncated(const ProbeState& probe, const Povm& povm, double c) {
  const int cut = plunge_index(c);
  std::vector<double> mask(probe.dimension(), 0.0);
  for (int n = 0; n < probe.dimension() && n <= cut; ++n) mask[n] = 1.0;
  return probabilities_weighted(probe, povm, mask);
}

Povm time_limit_povm(const Povm& povm, const ProlateBasis& basis) {
  povm.validate();
  if (povm.dimension() > basis.size()) throw_invalid("POVM has more coefficients than the basis");
  const Eigen::Map<const Eigen::VectorXd> lam(basis.lambdas().data(), povm.dimension());
  Povm out = povm;
  for (auto& e : out.elements) e.vectors = e.vectors * lam.asDiagonal();
  return out;
}

ProbeState eigendecompose(const ProbeState& probe, double tolerance) {
  probe.validate();
  const Eigen::VectorXd root = probe.weights.cwiseSqrt();
  const Eigen::MatrixXd scaled = root.asDiagonal() * probe.modes;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(scaled * scaled.transpose());
  const Eigen::VectorXd& s = solver.eigenvalues();
  const double trace = s.sum();
  if (!(trace > 0.0)) throw_invalid("probe state has zero trace");
  std::vector<int> kept;
  for (Eigen::Index i = s.size() - 1; i >= 0; --i) {
    if (s[i] > tolerance * s.maxCoeff()) kept.push_back(static_cast<int>(i));
  }
  ProbeState out;
  out.weights.resize(static_cast<Eigen::Index>(kept.size()));
  out.modes.resize(static_cast<Eigen::Index>(kept.size()), probe.modes.cols());
  const double norm = std::sqrt(trace);
  for (std::size_t r = 0; r < kept.size(); ++r) {
    const int i = kept[r];
    const auto r_idx = static_cast<Eigen::Index>(r);
    out.weights[r_idx] = s[i] / trace;
    out.modes.row(r_idx) = norm * (scaled.transpose() * solver.eigenvectors().col(i)).transpose() / std::sqrt(s[i]);
  }
  out.weights /= out.weights.sum();
  out.orthogonal = std::abs(trace - 1.0) < 1e-9;
  return out;
}

namespace {

Eigen::VectorXd evaluate_model(const ProbabilityModel& model, const Eigen::VectorXd& theta, Eigen::Index expected) {
  Eigen::VectorXd p;
  try {
    p = model(theta);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw_numerical(std::string("probability model failed: ") + e.what());
  }
  if (expected >= 0 && p.size() != expected) throw_numerical("probability model changed its outcome count");
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    if (!std::isfinite(p[j]) || p[j] < -kProbabilityClip || p[j] > 1.0 + kProbabilityClip) {
      throw_numerical("probability model left [0, 1] at a finite-difference point; reduce the step size");
    }
  }
  return p;
}

}  // namespace

FisherMatrix fisher_matrix(const ProbabilityModel& model, const Eigen::VectorXd& theta, const FisherOptions& options) {
  const Eigen::Index params = theta.size();
  if (params == 0) throw_invalid("fisher_matrix needs at least one parameter");
  if (!options.steps.empty() && static_cast<Eigen::Index>(options.steps.size()) != params) {
    throw_invalid("one step size per parameter is required");
  }
  FisherMatrix out;
  out.steps.resize(params);
  for (Eigen::Index n = 0; n < params; ++n) {
    const double h = options.steps.empty() ? 1e-5 * (1.0 + std::abs(theta[n])) : options.steps[n];
    if (!(h > 0.0)) throw_invalid("finite-difference steps must be positive");
    out.steps[n] = h;
  }
  if (!options.labels.empty()) {
    if (static_cast<Eigen::Index>(options.labels.size()) != params) throw_invalid("one label per parameter is required");
    out.labels = options.labels;
  } else {
    for (Eigen::Index n = 0; n < params; ++n) out.labels.push_back("theta" + std::to_string(n));
  }

  const Eigen::VectorXd p0 = evaluate_model(model, theta, -1);
  const Eigen::Index outcomes = p0.size();
  Eigen::MatrixXd derivative(params, outcomes);
  for (Eigen::Index n = 0; n < params; ++n) {
    auto central = [&](double h) {
      Eigen::VectorXd plus = theta;
      Eigen::VectorXd minus = theta;
      plus[n] += h;
      minus[n] -= h;
      return Eigen::VectorXd((evaluate_model(model, plus, outcomes) - evaluate_model(model, minus, outcomes)) / (2.0 * h));
    };
    const double h = out.steps[n];
    Eigen::VectorXd d = central(h);
    if (options.richardson) d = (4.0 * central(0.5 * h) - d) / 3.0;
    derivative.row(n) = d.transpose();
  }

  out.matrix = Eigen::MatrixXd::Zero(params, params);
  for (Eigen::Index j = 0; j < outcomes; ++j) {
    const bool leakage = j + 1 == outcomes;
    if ((leakage && !options.include_leakage) || p0[j] < options.p_floor) {
      out.excluded_outcomes.push_back(static_cast<int>(j));
      continue;
    }
    out.matrix += derivative.col(j) * derivative.col(j).transpose() / p0[j];
  }
  out.matrix = 0.5 * (out.matrix + out.matrix.transpose()).eval();
  return out;
}

std::vector<double> crb(const FisherMatrix& fisher, double condition_cap) {
  const Eigen::MatrixXd& F = fisher.matrix;
  if (F.rows() == 0 || F.rows() != F.cols()) throw_invalid("Fisher matrix must be square and non-empty");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(F);
  const Eigen::VectorXd& ev = solver.eigenvalues();
  const double top = ev.maxCoeff();
  if (!(top > 0.0) || ev[0] <= top / condition_cap) {
    Eigen::VectorXd null = solver.eigenvectors().col(0);
    throw SingularMatrixError("Fisher matrix is singular (eigenvalues " + std::to_string(ev[0]) + " .. " +
                                  std::to_string(top) + "): parameters are not identifiable",
                              std::vector<double>(null.data(), null.data() + null.size()));
  }
  std::vector<double> bounds(F.rows());
  for (Eigen::Index n = 0; n < F.rows(); ++n) {
    double inv = 0.0;
    for (Eigen::Index k = 0; k < F.rows(); ++k) inv += solver.eigenvectors()(n, k) * solver.eigenvectors()(n, k) / ev[k];
    bounds[n] = std::sqrt(inv);
  }
  return bounds;
}

}  // namespace tfm
