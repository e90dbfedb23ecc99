/* C interface to the tfm library. All functions are thread-safe; a basis
 * handle may be shared between threads once created. On failure a function
 * returns a nonzero tfm_status and tfm_last_error() describes the problem
 * (per calling thread). */
#ifndef TFM_TFM_H
#define TFM_TFM_H

#include <stddef.h>

#if defined(TFM_BUILDING_LIBRARY)
#define TFM_API __attribute__((visibility("default")))
#else
#define TFM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

#define TFM_ABI_VERSION 1

typedef enum tfm_status {
  TFM_OK = 0,
  TFM_ERR_INVALID = 2,   /* bad argument or configuration */
  TFM_ERR_NUMERICAL = 3, /* convergence, singular matrix, ... */
  TFM_ERR_IO = 4,
  TFM_ERR_INTERNAL = 5
} tfm_status;

typedef enum tfm_regime {
  TFM_REGIME_IDEAL = 0,
  TFM_REGIME_LIMITED = 1,
  TFM_REGIME_TRUNCATED = 2
} tfm_regime;

typedef struct tfm_basis tfm_basis;

TFM_API int tfm_abi_version(void);
TFM_API const char* tfm_version_string(void);
TFM_API const char* tfm_last_error(void);

/* n_max < 0 keeps every index whose eigenvalue is above 1e-13;
 * quad_order <= 0 picks the default order. */
TFM_API tfm_status tfm_basis_create(double c, double T, int n_max, int quad_order, tfm_basis** out);
TFM_API void tfm_basis_destroy(tfm_basis* basis);

typedef struct tfm_basis_info {
  double c;
  double T;
  int n_max;
  int quad_order;
  int extendable_count;
} tfm_basis_info;

TFM_API tfm_status tfm_basis_get_info(const tfm_basis* basis, tfm_basis_info* out);
/* Copies min(capacity, n_max + 1) eigenvalues; *written receives the count. */
TFM_API tfm_status tfm_basis_lambdas(const tfm_basis* basis, double* out, size_t capacity, size_t* written);
TFM_API tfm_status tfm_basis_eval(const tfm_basis* basis, int n, double t, double* out);
TFM_API tfm_status tfm_basis_save_json(const tfm_basis* basis, const char* path);
TFM_API tfm_status tfm_basis_load_json(const char* path, tfm_basis** out);
/* *out is allocated by the library; release with tfm_free_string. */
TFM_API tfm_status tfm_basis_to_json(const tfm_basis* basis, char** out);
TFM_API void tfm_free_string(char* s);

TFM_API double tfm_hg_eval(int n, double c, double t);
TFM_API int tfm_plunge_index(double c);
TFM_API tfm_status tfm_lambda0_curve(const double* c_values, size_t count, double* lambda0_out);

typedef struct tfm_superres_config {
  double c;
  double T;
  int has_tau; /* 0: tau = sigma */
  double tau;
  double tau0;
  double nu;
  int has_sigma; /* 0: sigma = T / sqrt(2 c kappa) */
  double sigma;
  double kappa;
  double r1, phi1, r2, phi2;
  double c03, c13;
  double row2[4];
  tfm_regime regime;
  int quad_order;
  double tau_floor; /* in units of sigma */
} tfm_superres_config;

typedef struct tfm_superres_result {
  double sigma;
  double tau;
  int basis_size;
  double retained_energy;
  double A_ideal;
  double A_limited;
  double bound_phi2;
  double bound_lambda0;
  double probabilities[4]; /* outcomes 0..2, leakage last */
  double fisher[9];        /* row-major over (tau, tau0, nu) */
  double fisher_steps[3];
  int singular;            /* crb is NaN when set */
  double crb[3];
} tfm_superres_result;

TFM_API void tfm_superres_config_init(tfm_superres_config* config);
TFM_API tfm_status tfm_superres_evaluate(const tfm_superres_config* config, tfm_superres_result* out);

#ifdef __cplusplus
}
#endif

#endif
