#ifndef SPECBAYES_H
#define SPECBAYES_H

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes shared by every fallible function.
 */
typedef enum SbStatus {
  SB_STATUS_OK = 0,
  SB_STATUS_NULL_POINTER = 1,
  SB_STATUS_INVALID_ARGUMENT = 2,
  SB_STATUS_LENGTH_MISMATCH = 3,
  SB_STATUS_OUT_OF_BOUNDS = 4,
  SB_STATUS_GRID_MISMATCH = 5,
  SB_STATUS_ROLE_CONFLICT = 6,
  SB_STATUS_NOT_POSITIVE_DEFINITE = 7,
  SB_STATUS_DEGENERATE = 8,
  SB_STATUS_METHOD_SCOPE = 9,
  SB_STATUS_IO = 10,
  SB_STATUS_PARSE = 11,
  SB_STATUS_PANIC = 12,
} SbStatus;

typedef enum SbRole {
  SB_ROLE_ILLUMINATION = 0,
  SB_ROLE_REFLECTANCE = 1,
  SB_ROLE_SENSITIVITY = 2,
} SbRole;

/**
 * Opaque Gaussian belief (mean and precision).
 */
typedef struct SbBelief SbBelief;

/**
 * Opaque `I × J × K` observation tensor.
 */
typedef struct SbObservations SbObservations;

/**
 * Opaque family of spectra sharing one role and grid.
 */
typedef struct SbSpectrumSet SbSpectrumSet;

/**
 * Wavelength sampling: `count` samples from `start_nm` every `step_nm`.
 */
typedef struct SbGrid {
  double start_nm;
  double step_nm;
  size_t count;
} SbGrid;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *sb_version(void);

/**
 * Message for the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *sb_last_error_message(void);

/**
 * Builds a set from `members` spectra stored back to back in `values`
 * (`members * grid.count` doubles).
 *
 * # Safety
 * `values` must point to that many readable doubles and `out` must be
 * writable.
 */
enum SbStatus sb_spectrum_set_new(enum SbRole role,
                                  struct SbGrid grid,
                                  const double *values,
                                  size_t members,
                                  struct SbSpectrumSet **out);

/**
 * Loads a dataset manifest resampled onto `grid`. Illumination and
 * sensitivity members are peak-normalized, as in the command-line tool.
 *
 * # Safety
 * `manifest_path` must be a NUL-terminated UTF-8 path and `out` writable.
 */
enum SbStatus sb_spectrum_set_load(const char *manifest_path,
                                   struct SbGrid grid,
                                   struct SbSpectrumSet **out);

/**
 * Number of members, or 0 for NULL.
 *
 * # Safety
 * `set` must be NULL or a live handle.
 */
size_t sb_spectrum_set_len(const struct SbSpectrumSet *set);

/**
 * Copies member `index` into `out` (`len` must equal the grid count).
 *
 * # Safety
 * `set` must be a live handle and `out` must hold `len` doubles.
 */
enum SbStatus sb_spectrum_set_member(const struct SbSpectrumSet *set,
                                     size_t index,
                                     double *out,
                                     size_t len);

/**
 * # Safety
 * `set` must be NULL or a handle not yet freed.
 */
void sb_spectrum_set_free(struct SbSpectrumSet *set);

/**
 * Wraps a row-major `I × J × K` tensor.
 *
 * # Safety
 * `extents` must hold 3 values, `values` their product, `out` writable.
 */
enum SbStatus sb_observations_new(const size_t *extents,
                                  const double *values,
                                  size_t len,
                                  struct SbObservations **out);

/**
 * Renders pixels from one set per role, passed in any order. `sigma` 0
 * disables noise; otherwise noise is seeded by `seed`.
 *
 * # Safety
 * All handles must be live and `out` writable.
 */
enum SbStatus sb_observations_render(const struct SbSpectrumSet *a,
                                     const struct SbSpectrumSet *b,
                                     const struct SbSpectrumSet *c,
                                     double sigma,
                                     uint64_t seed,
                                     struct SbObservations **out);

/**
 * # Safety
 * `obs` must be a live handle and `out` must hold 3 values.
 */
enum SbStatus sb_observations_extents(const struct SbObservations *obs, size_t *out);

/**
 * Copies the row-major tensor into `out`.
 *
 * # Safety
 * `obs` must be a live handle and `out` must hold `len` doubles.
 */
enum SbStatus sb_observations_values(const struct SbObservations *obs, double *out, size_t len);

/**
 * # Safety
 * `obs` must be NULL or a handle not yet freed.
 */
void sb_observations_free(struct SbObservations *obs);

/**
 * Gaussian belief from a mean of length `dim` and a row-major
 * `dim × dim` precision. Fails unless the precision is symmetric positive
 * definite.
 *
 * # Safety
 * `mean` must hold `dim` doubles, `precision` `dim * dim`, `out` writable.
 */
enum SbStatus sb_belief_new(const double *mean,
                            const double *precision,
                            size_t dim,
                            struct SbBelief **out);

/**
 * Zero-mean prior with precision `alpha I + gamma D2ᵀD2` on `grid`.
 *
 * # Safety
 * `out` must be writable.
 */
enum SbStatus sb_belief_flat_prior(struct SbGrid grid,
                                   double alpha,
                                   double gamma,
                                   struct SbBelief **out);

/**
 * Dimension, or 0 for NULL.
 *
 * # Safety
 * `belief` must be NULL or a live handle.
 */
size_t sb_belief_dim(const struct SbBelief *belief);

/**
 * # Safety
 * `belief` must be a live handle and `out` must hold `len` doubles.
 */
enum SbStatus sb_belief_mean(const struct SbBelief *belief, double *out, size_t len);

/**
 * Row-major precision matrix.
 *
 * # Safety
 * `belief` must be a live handle and `out` must hold `len` doubles.
 */
enum SbStatus sb_belief_precision(const struct SbBelief *belief, double *out, size_t len);

/**
 * # Safety
 * `belief` must be NULL or a handle not yet freed.
 */
void sb_belief_free(struct SbBelief *belief);

/**
 * Least-squares estimate of member `index` of the `target` family.
 * Writes the max-normalized spectrum to `out` (`len` = grid count).
 *
 * # Safety
 * Handles must be live and `out` must hold `len` doubles.
 */
enum SbStatus sb_estimate_lsq(enum SbRole target,
                              size_t index,
                              const struct SbSpectrumSet *known_a,
                              const struct SbSpectrumSet *known_b,
                              const struct SbObservations *obs,
                              double *out,
                              size_t len);

/**
 * Bayesian estimate with noise precision `beta`. Writes the max-normalized
 * posterior mean to `out`; when `posterior` is not NULL it receives a new
 * handle to the unnormalized posterior.
 *
 * # Safety
 * Handles must be live, `out` must hold `len` doubles and `posterior`
 * must be NULL or writable.
 */
enum SbStatus sb_estimate_bayes(enum SbRole target,
                                size_t index,
                                const struct SbSpectrumSet *known_a,
                                const struct SbSpectrumSet *known_b,
                                const struct SbObservations *obs,
                                double beta,
                                const struct SbBelief *prior,
                                double *out,
                                size_t len,
                                struct SbBelief **posterior);

/**
 * Basis-constrained sensitivity estimate of channel `index` from known
 * illumination and reflectance. `basis` is row-major `grid count × components`.
 *
 * # Safety
 * Handles must be live; `mean` and `out` must hold `len` doubles and
 * `basis` `len * components`.
 */
enum SbStatus sb_estimate_jiang(size_t index,
                                const struct SbSpectrumSet *illumination,
                                const struct SbSpectrumSet *reflectance,
                                const struct SbObservations *obs,
                                const double *mean,
                                const double *basis,
                                size_t components,
                                double *out,
                                size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPECBAYES_H */
