#ifndef FREEWAYLAB_H
#define FREEWAYLAB_H

#ifdef __cplusplus
extern "C" {
#endif

#if defined(FWL_BUILDING)
#define FWL_API __attribute__((visibility("default")))
#else
#define FWL_API
#endif

typedef enum fwl_status {
  FWL_OK = 0,
  FWL_ERR_ARGUMENT = 1,
  FWL_ERR_DOMAIN = 2,
  FWL_ERR_PRECONDITION = 3,
  FWL_ERR_NO_CONVERGENCE = 4,
  FWL_ERR_NUMERICAL = 5,
  FWL_ERR_EXISTENCE = 6,
  FWL_ERR_DEGENERATE = 7,
  FWL_ERR_IO = 8,
  FWL_ERR_INTERNAL = 9
} fwl_status;

typedef struct fwl_model fwl_model;
typedef struct fwl_orbit fwl_orbit;

typedef struct fwl_pcb_params {
  double m, c_w, f0, f1, t0, t1, delta, mu;
} fwl_pcb_params;

/* L <= 0 picks the truncation length from the decay rates; core_h is in units of delta */
typedef struct fwl_numerics {
  double L;
  double core_h;
  int degree;
  int refine;
  double tol;
  int max_iter;
} fwl_numerics;

typedef struct fwl_spectral_options {
  double kernel_tol;
  double gamma0;
  double k_max;
  int k_points;
  double re_min, re_max, im_max;
} fwl_spectral_options;

FWL_API const char* fwl_version(void);
FWL_API const char* fwl_status_name(fwl_status s);
/* message of the last failed call on this thread */
FWL_API const char* fwl_last_error(void);
/* releases strings returned through char** out-parameters */
FWL_API void fwl_free(void* p);

FWL_API void fwl_pcb_default_params(fwl_pcb_params* out);
FWL_API void fwl_default_numerics(fwl_numerics* out);
FWL_API void fwl_default_spectral_options(fwl_spectral_options* out);

FWL_API fwl_status fwl_model_create_pcb(const fwl_pcb_params* p, fwl_model** out);
FWL_API void fwl_model_free(fwl_model* m);

/* All reports are JSON objects with sorted keys and 17 significant digits. */
FWL_API fwl_status fwl_model_check(const fwl_model* m, int n_grid, char** json);
FWL_API fwl_status fwl_rho_scan(const fwl_model* m, double a, double b, int n, char** json);
FWL_API fwl_status fwl_fast_sl_spectrum(const fwl_model* m, double s, int n, double L, char** json);

/* root_index counts admissible roots of rho from the left */
FWL_API fwl_status fwl_connect_freeway(const fwl_model* m, int root_index, const fwl_numerics* num,
                                       fwl_orbit** out);
/* toll-road orbit at mu_fold + dmu on the toll-road side of the continued fold */
FWL_API fwl_status fwl_connect_tollroad(const fwl_model* m, double dmu, fwl_orbit** out);
FWL_API void fwl_orbit_free(fwl_orbit* o);

FWL_API fwl_status fwl_orbit_info(const fwl_orbit* o, char** json);
FWL_API int fwl_orbit_nodes(const fwl_orbit* o);
FWL_API int fwl_orbit_dim(const fwl_orbit* o);
/* z: nodes; u, v: nodes * dim, row-major; v may be NULL */
FWL_API fwl_status fwl_orbit_copy(const fwl_orbit* o, double* z, double* u, double* v);

FWL_API fwl_status fwl_spectrum(const fwl_orbit* o, const fwl_spectral_options* opts, char** json);
FWL_API fwl_status fwl_coercivity(const fwl_orbit* o, const fwl_spectral_options* opts, char** json);
FWL_API fwl_status fwl_energy_dress(const fwl_orbit* o, int d, double R, double ell, const double* eps, int n_eps,
                                    char** json);
FWL_API fwl_status fwl_bifurcate(const fwl_model* m, const double* ladder, int n_ladder, char** json);

/* re-serializes any JSON text in the canonical form used by the reports */
FWL_API fwl_status fwl_json_canonical(const char* text, char** out);

#ifdef __cplusplus
}
#endif

#endif
