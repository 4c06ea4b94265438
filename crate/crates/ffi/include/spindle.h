#ifndef SPINDLE_H
#define SPINDLE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  SPINDLE_BODY_KIND_BALL = 0,
  SPINDLE_BODY_KIND_ELLIPSOID = 1,
} SpindleBodyKind;

typedef enum {
  SPINDLE_MODE_ORACLE = 0,
  SPINDLE_MODE_HULL_FILTERED = 1,
} SpindleMode;

typedef enum {
  SPINDLE_SIDE_MINUS = 0,
  SPINDLE_SIDE_PLUS = 1,
} SpindleSide;

typedef enum {
  SPINDLE_STATUS_OK = 0,
  SPINDLE_STATUS_NULL_POINTER = 1,
  SPINDLE_STATUS_DOMAIN = 2,
  SPINDLE_STATUS_DEGENERATE = 3,
  SPINDLE_STATUS_INFEASIBLE = 4,
  SPINDLE_STATUS_HYPOTHESIS = 5,
  SPINDLE_STATUS_GATE = 6,
  SPINDLE_STATUS_IO = 7,
  SPINDLE_STATUS_PANIC = 8,
  SPINDLE_STATUS_BUFFER_TOO_SMALL = 9,
  SPINDLE_STATUS_CONFIG = 10,
  SPINDLE_STATUS_VALIDATION = 11,
} SpindleStatus;

/**
 * Facets of a sample's ball-polytope, with a membership structure.
 */
typedef struct SpindleHull SpindleHull;

/**
 * A point sample together with its body and radius.
 */
typedef struct SpindleSample SpindleSample;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *spindle_version(void);

/**
 * Static description of a status code.
 */
const char *spindle_status_message(SpindleStatus status);

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `cap`), and stores the full length plus one in `needed`.
 *
 * # Safety
 * `buf` must have `cap` writable bytes; `needed` may be null.
 */
SpindleStatus spindle_last_error(char *buf, size_t cap, size_t *needed);

/**
 * Volume `κ_d` of the unit ball and measure `ω_d` of the unit sphere.
 *
 * # Safety
 * `kappa` and `omega` must be valid for writes.
 */
SpindleStatus spindle_unit_ball_constants(size_t d, double *kappa, double *omega);

/**
 * `eta π^{d-1} κ_d / κ_{d-1}`, the facet-count limit for the ball.
 *
 * # Safety
 * `out` must be valid for writes.
 */
SpindleStatus spindle_facet_count_limit(size_t d, double eta, double *out);

/**
 * Draws `n` uniform points from a centered ball or ellipsoid in `d ∈ {2, 3}`.
 *
 * # Safety
 * `axes` must hold `d` values; `out` must be valid for writes.
 */
SpindleStatus spindle_sample_new(size_t d,
                                 SpindleBodyKind kind,
                                 const double *axes,
                                 double r,
                                 size_t n,
                                 uint64_t seed,
                                 SpindleSample **out);

/**
 * Wraps `n` caller points (row-major, `n * d` values) that lie in the body.
 *
 * # Safety
 * `coords` must hold `n * d` values, `axes` `d` values; `out` must be
 * valid for writes.
 */
SpindleStatus spindle_sample_from_points(size_t d,
                                         const double *coords,
                                         size_t n,
                                         SpindleBodyKind kind,
                                         const double *axes,
                                         double r,
                                         SpindleSample **out);

/**
 * Releases a sample. Null is ignored.
 *
 * # Safety
 * `sample` must come from a `spindle_sample_*` constructor and not be used
 * afterwards.
 */
void spindle_sample_free(SpindleSample *sample);

/**
 * Number of points in the sample.
 *
 * # Safety
 * `sample` must be a live handle; `out` valid for writes.
 */
SpindleStatus spindle_sample_len(const SpindleSample *sample, size_t *out);

/**
 * Copies the coordinates (row-major) into `buf` with room for `cap`
 * values; `needed` receives `n * d`.
 *
 * # Safety
 * `buf` must have `cap` writable values; `needed` valid for writes.
 */
SpindleStatus spindle_sample_points(const SpindleSample *sample,
                                    double *buf,
                                    size_t cap,
                                    size_t *needed);

/**
 * Enumerates the facets of the sample's ball-polytope.
 *
 * # Safety
 * `sample` must be a live handle; `out` valid for writes.
 */
SpindleStatus spindle_enumerate_facets(const SpindleSample *sample,
                                       SpindleMode mode,
                                       SpindleHull **out);

/**
 * Releases a hull. Null is ignored.
 *
 * # Safety
 * `hull` must come from [`spindle_enumerate_facets`] and not be used
 * afterwards.
 */
void spindle_hull_free(SpindleHull *hull);

/**
 * Number of facets.
 *
 * # Safety
 * `hull` must be a live handle; `out` valid for writes.
 */
SpindleStatus spindle_hull_facet_count(const SpindleHull *hull, size_t *out);

/**
 * The sample indices (`d` of them) spanning facet `i`, its side, and the
 * center of its supporting sphere (`d` values).
 *
 * # Safety
 * `indices` and `center` must have `cap` writable elements; `side_out`
 * valid for writes. `center` may be null.
 */
SpindleStatus spindle_hull_facet(const SpindleHull *hull,
                                 size_t i,
                                 size_t *indices,
                                 double *center,
                                 size_t cap,
                                 SpindleSide *side_out);

/**
 * Whether `z` (`d` values) lies in the ball-polytope.
 *
 * # Safety
 * `z` must hold `d` values; `out` valid for writes.
 */
SpindleStatus spindle_hull_contains(const SpindleHull *hull, const double *z, bool *out);

/**
 * Indices of the sample points that are vertices of the ball-polytope,
 * ascending. `count` receives the number of vertices.
 *
 * # Safety
 * `buf` must have `cap` writable elements; `count` valid for writes.
 */
SpindleStatus spindle_count_vertices(const SpindleSample *sample,
                                     size_t *buf,
                                     size_t cap,
                                     size_t *count);

/**
 * Probability that `d` uniform points of the body admit a radius-`r`
 * sphere through them, from `trials ≥ 100` seeded draws.
 *
 * # Safety
 * `axes` must hold `d` values; `eta` and `stderr` valid for writes.
 */
SpindleStatus spindle_estimate_eta(size_t d,
                                   SpindleBodyKind kind,
                                   const double *axes,
                                   double r,
                                   uint64_t trials,
                                   uint64_t seed,
                                   double *eta,
                                   double *stderr);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPINDLE_H */
