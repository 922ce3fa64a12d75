#ifndef INSDVL_H
#define INSDVL_H

/* Generated by cbindgen. Do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every fallible call.
 */
typedef enum InsdvlStatus {
  INSDVL_STATUS_OK = 0,
  INSDVL_STATUS_NULL_POINTER = 1,
  INSDVL_STATUS_INVALID_ARGUMENT = 2,
  INSDVL_STATUS_SINGULAR_MATRIX = 3,
  INSDVL_STATUS_NON_FINITE = 4,
  INSDVL_STATUS_LARGE_ANGLE = 5,
  INSDVL_STATUS_INTERNAL = 6,
} InsdvlStatus;

/**
 * Filter measurement set.
 */
typedef enum InsdvlMode {
  /**
   * DVL velocity updates only.
   */
  INSDVL_MODE_BASELINE = 0,
  /**
   * DVL velocity plus DVL-derived acceleration updates.
   */
  INSDVL_MODE_ACCELERATION = 1,
} InsdvlMode;

/**
 * Opaque filter handle.
 */
typedef struct InsdvlFilter InsdvlFilter;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static description of a status code.
 */
const char *insdvl_status_message(enum InsdvlStatus status);

/**
 * Copy the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length without the NUL.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t insdvl_last_error(char *buf, size_t len);

/**
 * Create a filter with default tuning.
 *
 * `latitude` is in radians, `velocity` the NED velocity (3 doubles), `attitude` the body-to-NED
 * rotation in row-major order (9 doubles).
 *
 * # Safety
 * Pointers must be valid for the stated lengths; `out` receives the handle.
 */
enum InsdvlStatus insdvl_filter_new(enum InsdvlMode mode,
                                    double time,
                                    double latitude,
                                    const double *velocity,
                                    const double *attitude,
                                    struct InsdvlFilter **out);

/**
 * Release a filter. Null is ignored.
 *
 * # Safety
 * `h` must be null or a handle from [`insdvl_filter_new`] not yet freed.
 */
void insdvl_filter_free(struct InsdvlFilter *h);

/**
 * Mechanize one IMU interval of length `dt` seconds.
 *
 * # Safety
 * `h` must be a live handle; `specific_force` and `angular_rate` point to 3 doubles.
 */
enum InsdvlStatus insdvl_filter_propagate(struct InsdvlFilter *h,
                                          const double *specific_force,
                                          const double *angular_rate,
                                          double dt);

/**
 * Process a DVL-frame velocity at the current filter time.
 *
 * # Safety
 * `h` must be a live handle; `velocity` points to 3 doubles.
 */
enum InsdvlStatus insdvl_filter_dvl_update(struct InsdvlFilter *h, const double *velocity);

/**
 * Current filter time (s).
 *
 * # Safety
 * `h` must be a live handle; `out` points to 1 double.
 */
enum InsdvlStatus insdvl_filter_time(const struct InsdvlFilter *h, double *out);

/**
 * NED velocity estimate (3 doubles).
 *
 * # Safety
 * `h` must be a live handle; `out` points to 3 doubles.
 */
enum InsdvlStatus insdvl_filter_velocity(const struct InsdvlFilter *h, double *out);

/**
 * Body-to-NED rotation estimate, row-major (9 doubles).
 *
 * # Safety
 * `h` must be a live handle; `out` points to 9 doubles.
 */
enum InsdvlStatus insdvl_filter_attitude(const struct InsdvlFilter *h, double *out);

/**
 * Accelerometer then gyro bias estimates (6 doubles).
 *
 * # Safety
 * `h` must be a live handle; `out` points to 6 doubles.
 */
enum InsdvlStatus insdvl_filter_bias(const struct InsdvlFilter *h, double *out);

/**
 * Error-state standard deviations in the order δv, φ, b_a, b_g (12 doubles).
 *
 * # Safety
 * `h` must be a live handle; `out` points to 12 doubles.
 */
enum InsdvlStatus insdvl_filter_sigmas(const struct InsdvlFilter *h, double *out);

/**
 * Least-squares DVL-frame velocity from 4 beam velocities for a Janus
 * array at `pitch` radians.
 *
 * # Safety
 * `beams` points to 4 doubles, `out` to 3.
 */
enum InsdvlStatus insdvl_ls_velocity(double pitch, const double *beams, double *out);

/**
 * Constant-acceleration estimate from `n` velocity samples: `times` holds
 * `n` doubles, `velocities` holds `3n` doubles (x, y, z per sample).
 *
 * # Safety
 * Pointers must be valid for the stated lengths; `out` points to 3 doubles.
 */
enum InsdvlStatus insdvl_extract_acceleration(const double *times,
                                              const double *velocities,
                                              size_t n,
                                              double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INSDVL_H */
