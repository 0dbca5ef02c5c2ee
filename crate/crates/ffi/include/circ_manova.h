/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef CIRC_MANOVA_H
#define CIRC_MANOVA_H

#include <stddef.h>
#include <stdint.h>

typedef enum CmStatus {
  CM_STATUS_OK = 0,
  CM_STATUS_NULL_POINTER = 1,
  // Bad data: dimensions, sample sizes, non-finite values.
  CM_STATUS_INVALID_INPUT = 2,
  CM_STATUS_INVALID_PARAMETERS = 3,
  // Design or parity the requested routine does not handle.
  CM_STATUS_UNSUPPORTED = 4,
  // Singular scatter or degenerate estimates.
  CM_STATUS_DEGENERATE = 5,
  CM_STATUS_CONFIG = 6,
  // Loss of precision or an internal numerical failure.
  CM_STATUS_NUMERIC = 7,
  CM_STATUS_PANIC = 8,
} CmStatus;

typedef enum CmMethod {
  // Closed form for odd q, inversion otherwise.
  CM_METHOD_EXACT = 0,
  CM_METHOD_EGIG = 1,
  CM_METHOD_CF_INVERSION = 2,
  CM_METHOD_ASYMPTOTIC = 3,
} CmMethod;

typedef enum CmCompetitor {
  CM_COMPETITOR_FUJIKOSHI = 0,
  CM_COMPETITOR_SCHOTT = 1,
  CM_COMPETITOR_CHEN_QIN = 2,
  CM_COMPETITOR_ZHANG = 3,
} CmCompetitor;

// Null law of Λ for fixed (n, q, p).
typedef struct CmNullLaw CmNullLaw;

// Grouped p-variate observations.
typedef struct CmSample CmSample;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failing call on this thread, or NULL.
// The pointer stays valid until the next failing call on the same thread.
const char *cm_last_error_message(void);

// Builds a sample from `n_groups` groups; group k has `sizes[k]` rows of
// `p` values, stored row-major and concatenated in `data`.
//
// # Safety
// `sizes` must point to `n_groups` values, `data` to Σ sizes[k]·p values,
// and `out` to writable storage for one handle.
enum CmStatus cm_sample_new(uintptr_t p,
                            uintptr_t n_groups,
                            const uintptr_t *sizes,
                            const double *data,
                            struct CmSample **out);

// # Safety
// `sample` must come from `cm_sample_new` and not be freed twice.
void cm_sample_free(struct CmSample *sample);

// Λ and W = −log Λ.
//
// # Safety
// `sample` must be a live handle; the out pointers must be writable.
enum CmStatus cm_lrt(const struct CmSample *sample, double *out_lambda, double *out_w);

// LRT statistic and p-value under the given null representation.
//
// # Safety
// As for `cm_lrt`.
enum CmStatus cm_lrt_test(const struct CmSample *sample,
                          enum CmMethod method,
                          double *out_lambda,
                          double *out_p_value);

// # Safety
// `out` must be writable.
enum CmStatus cm_null_law_new(uintptr_t n,
                              uintptr_t q,
                              uintptr_t p,
                              enum CmMethod method,
                              struct CmNullLaw **out);

// # Safety
// `law` must come from `cm_null_law_new` and not be freed twice.
void cm_null_law_free(struct CmNullLaw *law);

// P(Λ ≤ z).
//
// # Safety
// `law` must be a live handle and `out` writable.
enum CmStatus cm_null_law_cdf(const struct CmNullLaw *law, double z, double *out);

// Λ_α with P(Λ ≤ Λ_α) = α.
//
// # Safety
// `law` must be a live handle and `out` writable.
enum CmStatus cm_null_law_quantile(const struct CmNullLaw *law, double alpha, double *out);

// Competitor statistic and its asymptotic p-value.
//
// # Safety
// `sample` must be a live handle; the out pointers must be writable.
enum CmStatus cm_competitor(const struct CmSample *sample,
                            enum CmCompetitor test,
                            double *out_statistic,
                            double *out_p_value);

// Runs a key=value simulation config and returns the table (CSV unless the
// config asks otherwise) as a string released with `cm_string_free`.
//
// # Safety
// `config` must be a NUL-terminated string; `out` must be writable.
enum CmStatus cm_simulate(const char *config, uint64_t seed, char **out);

// # Safety
// `s` must come from this library and not be freed twice.
void cm_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CIRC_MANOVA_H */
