#include "tfm/tfm.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <new>
#include <string>

#include "tfm/error.hpp"
#include "tfm/hermite_gauss.hpp"
#include "tfm/pswf.hpp"
#include "tfm/serialize.hpp"
#include "tfm/superres.hpp"

struct tfm_basis {
  tfm::ProlateBasis basis;
};

namespace {

thread_local std::string last_error;

tfm_status fail(tfm_status status, const std::string& message) {
  last_error = message;
  return status;
}

template <typename F>
tfm_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return TFM_OK;
  } catch (const tfm::Error& e) {
    return fail(static_cast<tfm_status>(static_cast<int>(e.code())), e.what());
  } catch (const std::bad_alloc&) {
    return fail(TFM_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(TFM_ERR_INTERNAL, e.what());
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

int tfm_abi_version(void) { return TFM_ABI_VERSION; }

const char* tfm_version_string(void) { return "1.0.0"; }

const char* tfm_last_error(void) { return last_error.c_str(); }

tfm_status tfm_basis_create(double c, double T, int n_max, int quad_order, tfm_basis** out) {
  if (out == nullptr) return fail(TFM_ERR_INVALID, "output handle pointer is null");
  *out = nullptr;
  return guarded([&] {
    const auto params = tfm::SlepianParams::from_c(c, T);
    const int order = quad_order > 0 ? quad_order : 0;
    *out = new tfm_basis{n_max < 0 ? tfm::build_resolvable_basis(params, order)
                                   : tfm::build_basis(params, n_max, order)};
  });
}

void tfm_basis_destroy(tfm_basis* basis) { delete basis; }

tfm_status tfm_basis_get_info(const tfm_basis* basis, tfm_basis_info* out) {
  if (basis == nullptr || out == nullptr) return fail(TFM_ERR_INVALID, "null argument");
  const auto& b = basis->basis;
  *out = tfm_basis_info{b.params().c(), b.params().T(), b.n_max(), b.quad_order(), b.extendable_count()};
  last_error.clear();
  return TFM_OK;
}

tfm_status tfm_basis_lambdas(const tfm_basis* basis, double* out, size_t capacity, size_t* written) {
  if (basis == nullptr || (out == nullptr && capacity > 0)) return fail(TFM_ERR_INVALID, "null argument");
  const auto lam = basis->basis.lambdas();
  const size_t n = std::min(capacity, lam.size());
  for (size_t i = 0; i < n; ++i) out[i] = lam[i];
  if (written != nullptr) *written = n;
  last_error.clear();
  return TFM_OK;
}

tfm_status tfm_basis_eval(const tfm_basis* basis, int n, double t, double* out) {
  if (basis == nullptr || out == nullptr) return fail(TFM_ERR_INVALID, "null argument");
  return guarded([&] { *out = basis->basis.eval(n, t); });
}

tfm_status tfm_basis_save_json(const tfm_basis* basis, const char* path) {
  if (basis == nullptr || path == nullptr) return fail(TFM_ERR_INVALID, "null argument");
  return guarded([&] { tfm::save_basis(basis->basis, path); });
}

tfm_status tfm_basis_load_json(const char* path, tfm_basis** out) {
  if (path == nullptr || out == nullptr) return fail(TFM_ERR_INVALID, "null argument");
  *out = nullptr;
  return guarded([&] { *out = new tfm_basis{tfm::load_basis(path)}; });
}

tfm_status tfm_basis_to_json(const tfm_basis* basis, char** out) {
  if (basis == nullptr || out == nullptr) return fail(TFM_ERR_INVALID, "null argument");
  *out = nullptr;
  return guarded([&] { *out = copy_string(tfm::basis_to_json(basis->basis)); });
}

void tfm_free_string(char* s) { std::free(s); }

double tfm_hg_eval(int n, double c, double t) {
  if (n < 0 || !(c > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return tfm::hg_eval(tfm::HermiteGaussMode{n, c}, t);
}

int tfm_plunge_index(double c) {
  if (!(c > 0.0)) return -1;
  return tfm::plunge_index(c);
}

tfm_status tfm_lambda0_curve(const double* c_values, size_t count, double* lambda0_out) {
  if (count > 0 && (c_values == nullptr || lambda0_out == nullptr)) return fail(TFM_ERR_INVALID, "null argument");
  return guarded([&] {
    const auto curve = tfm::lambda0_curve(std::span<const double>(c_values, count));
    for (size_t i = 0; i < count; ++i) lambda0_out[i] = curve[i].lambda0;
  });
}

void tfm_superres_config_init(tfm_superres_config* config) {
  if (config == nullptr) return;
  const tfm::SuperresConfig d;
  *config = tfm_superres_config{};
  config->c = d.c;
  config->T = d.T;
  config->has_tau = 0;
  config->tau = 0.0;
  config->tau0 = d.tau0;
  config->nu = d.nu;
  config->has_sigma = 0;
  config->sigma = 0.0;
  config->kappa = d.kappa;
  config->r1 = d.design.r1;
  config->phi1 = d.design.phi1;
  config->r2 = d.design.r2;
  config->phi2 = d.design.phi2;
  config->c03 = d.free.c03;
  config->c13 = d.free.c13;
  for (int k = 0; k < 4; ++k) config->row2[k] = d.free.row2[k];
  config->regime = TFM_REGIME_LIMITED;
  config->quad_order = d.quad_order;
  config->tau_floor = d.tau_floor;
}

tfm_status tfm_superres_evaluate(const tfm_superres_config* config, tfm_superres_result* out) {
  if (config == nullptr || out == nullptr) return fail(TFM_ERR_INVALID, "null argument");
  return guarded([&] {
    tfm::SuperresConfig cfg;
    cfg.c = config->c;
    cfg.T = config->T;
    if (config->has_tau) cfg.tau = config->tau;
    cfg.tau0 = config->tau0;
    cfg.nu = config->nu;
    if (config->has_sigma) cfg.sigma = config->sigma;
    cfg.kappa = config->kappa;
    cfg.design = tfm::SphereParams{config->r1, config->phi1, config->r2, config->phi2};
    cfg.free.c03 = config->c03;
    cfg.free.c13 = config->c13;
    for (int k = 0; k < 4; ++k) cfg.free.row2[k] = config->row2[k];
    switch (config->regime) {
      case TFM_REGIME_IDEAL: cfg.regime = tfm::Regime::kIdeal; break;
      case TFM_REGIME_LIMITED: cfg.regime = tfm::Regime::kLimited; break;
      case TFM_REGIME_TRUNCATED: cfg.regime = tfm::Regime::kTruncated; break;
      default: tfm::throw_invalid("unknown regime value " + std::to_string(static_cast<int>(config->regime)));
    }
    cfg.quad_order = config->quad_order;
    cfg.tau_floor = config->tau_floor;

    const tfm::SuperresResult r = tfm::evaluate_superres(cfg);
    tfm_superres_result res{};
    res.sigma = r.sigma;
    res.tau = r.tau;
    res.basis_size = r.basis_size;
    res.retained_energy = r.retained_energy;
    res.A_ideal = r.A_ideal;
    res.A_limited = r.A_limited;
    res.bound_phi2 = r.bounds.bound_phi2;
    res.bound_lambda0 = r.bounds.bound_lambda0;
    for (int i = 0; i < 4; ++i) res.probabilities[i] = r.probabilities[i];
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) res.fisher[3 * i + j] = r.fisher.matrix(i, j);
      res.fisher_steps[i] = r.fisher.steps[static_cast<size_t>(i)];
      res.crb[i] = r.singular ? std::numeric_limits<double>::quiet_NaN() : r.crb[static_cast<size_t>(i)];
    }
    res.singular = r.singular ? 1 : 0;
    *out = res;
  });
}

}  // extern "C"
