#ifndef EXPWEIGHT_H
#define EXPWEIGHT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible function.
typedef enum EwStatus {
  EW_STATUS_OK = 0,
  EW_STATUS_NULL_POINTER = 1,
  EW_STATUS_INVALID_ARGUMENT = 2,
  EW_STATUS_DIMENSION = 3,
  EW_STATUS_NOT_ORDERED = 4,
  EW_STATUS_CONFIG = 5,
  EW_STATUS_IO = 6,
  EW_STATUS_BUFFER_TOO_SMALL = 7,
  EW_STATUS_PANIC = 8,
} EwStatus;

// Opaque ordered multiplier family.
typedef struct EwFamily EwFamily;

// Opaque prior weights for one family and one beta.
typedef struct EwPriors EwPriors;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failing call on this thread; empty if none.
const char *ew_last_error(void);

// Library version as a static NUL-terminated string.
const char *ew_version(void);

// Tikhonov family `h_k = 1 / (1 + alpha lambda_k)` over an ascending spectrum.
//
// # Safety
// `eigenvalues` and `alphas` must point to `n` and `m` readable doubles; `out` must be writable.
enum EwStatus ew_family_tikhonov(const double *eigenvalues,
                                 uintptr_t n,
                                 const double *alphas,
                                 uintptr_t m,
                                 struct EwFamily **out);

// Pinsker family `h_k = (1 - alpha lambda_k)_+`.
//
// # Safety
// As for [`ew_family_tikhonov`].
enum EwStatus ew_family_pinsker(const double *eigenvalues,
                                uintptr_t n,
                                const double *alphas,
                                uintptr_t m,
                                struct EwFamily **out);

// Spectral cut-off family with strictly ascending cut points in `[0, n]`.
//
// # Safety
// `cuts` must point to `m` readable values; `out` must be writable.
enum EwStatus ew_family_cutoff(uintptr_t n,
                               const uintptr_t *cuts,
                               uintptr_t m,
                               struct EwFamily **out);

// Landweber family after `counts[j]` iterations of size `step`.
//
// # Safety
// `eigenvalues` and `counts` must point to `n` and `m` readable values; `out` must be writable.
enum EwStatus ew_family_landweber(const double *eigenvalues,
                                  uintptr_t n,
                                  double step,
                                  const uint32_t *counts,
                                  uintptr_t m,
                                  struct EwFamily **out);

// Custom family from `m` members of dimension `n`, row-major.
//
// # Safety
// `values` must point to `m * n` readable doubles; `out` must be writable.
enum EwStatus ew_family_custom(const double *values,
                               uintptr_t m,
                               uintptr_t n,
                               struct EwFamily **out);

// Releases a family. Null is ignored.
//
// # Safety
// `family` must come from an `ew_family_*` constructor and not be used afterwards.
void ew_family_free(struct EwFamily *family);

// Number of members, or 0 for a null handle.
//
// # Safety
// `family` must be null or a live handle.
uintptr_t ew_family_len(const struct EwFamily *family);

// Dimension `n`, or 0 for a null handle.
//
// # Safety
// `family` must be null or a live handle.
uintptr_t ew_family_dim(const struct EwFamily *family);

// Copies member `index` (0-based, family order) into `out[0..n]`.
//
// # Safety
// `family` must be live; `out` must point to `len` writable doubles.
enum EwStatus ew_family_member(const struct EwFamily *family,
                               uintptr_t index,
                               double *out,
                               uintptr_t len);

// Prior weights of `family` at temperature `beta`.
//
// # Safety
// `family` must be live; `out` must be writable.
enum EwStatus ew_priors_new(const struct EwFamily *family, double beta, struct EwPriors **out);

// Releases priors. Null is ignored.
//
// # Safety
// `priors` must come from [`ew_priors_new`] and not be used afterwards.
void ew_priors_free(struct EwPriors *priors);

// Copies the prior weights into `out[0..|H|]`.
//
// # Safety
// `priors` must be live; `out` must point to `len` writable doubles.
enum EwStatus ew_priors_weights(const struct EwPriors *priors, double *out, uintptr_t len);

// Largest relative residual of the prior telescoping identity.
//
// # Safety
// Both handles must be live; `out` must be writable.
enum EwStatus ew_prior_identity_residual(const struct EwPriors *priors,
                                         const struct EwFamily *family,
                                         double *out);

// Unbiased risk estimate of the linear estimate `h Y`.
//
// # Safety
// `y` and `h` must point to `n` readable doubles; `out` must be writable.
enum EwStatus ew_ure(const double *y, const double *h, uintptr_t n, double sigma, double *out);

// Exact risk `||(1 - h) mu||^2 + sigma^2 ||h||^2`.
//
// # Safety
// `h` and `mu` must point to `n` readable doubles; `out` must be writable.
enum EwStatus ew_exact_risk(const double *h,
                            const double *mu,
                            uintptr_t n,
                            double sigma,
                            double *out);

// Oracle risk over the family and the index attaining it.
//
// # Safety
// `family` must be live; `mu` must point to `n` readable doubles; outputs must be writable.
enum EwStatus ew_oracle(const struct EwFamily *family,
                        const double *mu,
                        uintptr_t n,
                        double sigma,
                        double *out_risk,
                        uintptr_t *out_index);

// Index of the URE-minimizing member.
//
// # Safety
// `family` must be live; `y` must point to `n` readable doubles; `out_index` must be writable.
enum EwStatus ew_ure_minimizer(const struct EwFamily *family,
                               const double *y,
                               uintptr_t n,
                               double sigma,
                               uintptr_t *out_index);

// Exponentially weighted aggregate at `y`.
//
// Writes the estimate into `out_estimate[0..n]`. `out_weights` (length
// `weights_len >= |H|`), `out_divergence` and `out_weighted_ure` may be null.
//
// # Safety
// Handles must be live and built for the same family; pointers must be valid for their lengths.
enum EwStatus ew_aggregate(const struct EwFamily *family,
                           const struct EwPriors *priors,
                           const double *y,
                           uintptr_t n,
                           double sigma,
                           double *out_estimate,
                           double *out_weights,
                           uintptr_t weights_len,
                           double *out_divergence,
                           double *out_weighted_ure);

// Runs a Monte Carlo scenario given as JSON (the same fields as a
// `[[scenario]]` config block) and returns the risk report as JSON.
//
// The report string is owned by the caller and released with [`ew_string_free`].
//
// # Safety
// `scenario_json` must be a NUL-terminated string; `out_report` must be writable.
enum EwStatus ew_run_scenario_json(const char *scenario_json, char **out_report);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be used afterwards.
void ew_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EXPWEIGHT_H */
