#ifndef HEMOREDUCE_H
#define HEMOREDUCE_H

/* C interface to the hemoreduce pipeline. All functions return an hr_status;
   a failing call stores a message retrievable from the handle it was given. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define HR_API __declspec(dllexport)
#else
#define HR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hr_status {
  HR_OK = 0,
  HR_ERR_INVALID_ARGUMENT,
  HR_ERR_NON_POSITIVE_DIMENSION,
  HR_ERR_RESOLUTION_TOO_COARSE,
  HR_ERR_H_OUT_OF_RANGE,
  HR_ERR_UNSTABLE_DT,
  HR_ERR_POISSON_NO_CONVERGENCE,
  HR_ERR_NO_STEADY_STATE,
  HR_ERR_LENGTH_MISMATCH,
  HR_ERR_ALREADY_HOMOGENIZED,
  HR_ERR_MISSING_INLET_VALUES,
  HR_ERR_NOT_SYMMETRIC,
  HR_ERR_RANK_DEFICIENT,
  HR_ERR_BASIS_MISMATCH,
  HR_ERR_SINGULAR_PRESSURE_SYSTEM,
  HR_ERR_BLOW_UP,
  HR_ERR_POWER_ITERATION_NO_CONVERGENCE,
  HR_ERR_SINGULAR_NORMAL_EQUATIONS,
  HR_ERR_HORIZON_TOO_SHORT,
  HR_ERR_ZERO_REFERENCE_NORM,
  HR_ERR_MISSING_PHASE,
  HR_ERR_BAD_MAGIC,
  HR_ERR_TRUNCATED_PAYLOAD,
  HR_ERR_VERSION_MISMATCH,
  HR_ERR_IO_FAILURE,
  HR_ERR_CONFIG,
  HR_ERR_MISSING_ARTIFACT,
  HR_ERR_NULL_HANDLE,
  HR_ERR_UNKNOWN
} hr_status;

typedef struct hr_pipeline hr_pipeline;
typedef struct hr_snapshots hr_snapshots;

HR_API const char* hr_version(void);
HR_API const char* hr_status_name(hr_status status);
/* Process exit code for a status: 0 ok, 2 config, 3 missing upstream artifact, 1 otherwise. */
HR_API int hr_exit_code(hr_status status);

/* config_path may be NULL for the built-in defaults. On failure *out is NULL
   and, when err_buf is non-NULL, the message is copied into it. */
HR_API hr_status hr_pipeline_create(const char* config_path, hr_pipeline** out, char* err_buf,
                                    size_t err_len);
HR_API void hr_pipeline_destroy(hr_pipeline* p);
HR_API const char* hr_pipeline_last_error(const hr_pipeline* p);

HR_API hr_status hr_pipeline_set_output(hr_pipeline* p, const char* dir);
HR_API hr_status hr_pipeline_set_train_seed(hr_pipeline* p, uint64_t seed);
/* Progress lines go to stderr when enabled (default off). */
HR_API hr_status hr_pipeline_set_verbose(hr_pipeline* p, int enabled);
/* Canonical JSON of the effective configuration; valid until the next call on p. */
HR_API const char* hr_pipeline_config_json(hr_pipeline* p);

HR_API hr_status hr_generate(hr_pipeline* p);
HR_API hr_status hr_pod(hr_pipeline* p);
/* method: "galerkin" or "esn". */
HR_API hr_status hr_rom(hr_pipeline* p, const char* method);
HR_API hr_status hr_evaluate(hr_pipeline* p);

/* After hr_evaluate: aggregates of a percent error series. quantity is
   "e_U", "e_p" or "e_wss". Any output pointer may be NULL. Before
   hr_evaluate this returns HR_ERR_MISSING_ARTIFACT. */
HR_API hr_status hr_error_summary(const hr_pipeline* p, const char* method, const char* quantity,
                                  double* max, double* mean, double* drift_ratio);
/* After hr_evaluate: FOM seconds and the online speedup of a method. */
HR_API hr_status hr_speedup(const hr_pipeline* p, const char* method, double* fom_seconds,
                            double* online_seconds, double* speedup);

/* Read-only access to a snapshot file. */
HR_API hr_status hr_snapshots_open(const char* path, hr_snapshots** out, char* err_buf, size_t err_len);
HR_API void hr_snapshots_destroy(hr_snapshots* s);
HR_API hr_status hr_snapshots_shape(const hr_snapshots* s, size_t* rows, size_t* cols);
/* Copies column-major data; len must be at least rows * cols. */
HR_API hr_status hr_snapshots_copy(const hr_snapshots* s, double* buf, size_t len);
HR_API hr_status hr_snapshots_times(const hr_snapshots* s, double* buf, size_t len);

#ifdef __cplusplus
}
#endif

#endif
