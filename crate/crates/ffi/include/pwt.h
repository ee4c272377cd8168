#ifndef PWT_H
#define PWT_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of every fallible call.
 */
typedef enum PwtStatus {
  PWT_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  PWT_STATUS_NULL_POINTER = 1,
  /**
   * Malformed configuration, invalid arguments or unreadable files.
   */
  PWT_STATUS_INVALID_INPUT = 2,
  /**
   * A numerical method failed to converge or met a pathological profile.
   */
  PWT_STATUS_NUMERICAL = 3,
  /**
   * The caller's buffer is too small.
   */
  PWT_STATUS_BUFFER_TOO_SMALL = 4,
  /**
   * An internal panic was caught at the boundary.
   */
  PWT_STATUS_PANIC = 5,
} PwtStatus;

/**
 * A parsed run configuration.
 */
typedef struct PwtConfig PwtConfig;

/**
 * A computed spectrum.
 */
typedef struct PwtSpectrum PwtSpectrum;

/**
 * Outcome of the perfect-wave-transfer test.
 */
typedef struct PwtVerdict {
  /**
   * 1 if the model transfers perfectly, 0 otherwise.
   */
  int32_t is_pwt;
  /**
   * Transfer time; NaN unless `is_pwt`.
   */
  double period;
  /**
   * Offset c of the labelling m_n = n + c.
   */
  int64_t c_shift;
} PwtVerdict;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last error on this thread, or null if the last call
 * succeeded. Valid until the next call into this library on the same thread.
 */
const char *pwt_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pwt_version(void);

/**
 * Parse a TOML run configuration. Relative paths resolve against the
 * working directory.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PwtStatus pwt_config_from_toml(const char *toml, struct PwtConfig **out);

/**
 * Load a TOML run configuration from a file. Relative paths inside it
 * resolve against the file's directory.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PwtStatus pwt_config_load(const char *path, struct PwtConfig **out);

/**
 * Release a configuration. Null is ignored.
 *
 * # Safety
 * `cfg` must come from `pwt_config_*` and not be used afterwards.
 */
void pwt_config_free(struct PwtConfig *cfg);

/**
 * Solve for the lowest `n_max + 1` eigenvalues of the configured model.
 *
 * # Safety
 * `cfg` must be a live configuration and `out` a valid pointer.
 */
enum PwtStatus pwt_solve(const struct PwtConfig *cfg, size_t n_max, struct PwtSpectrum **out);

/**
 * Number of levels held by a spectrum (0 for null).
 *
 * # Safety
 * `s` must be null or a live spectrum.
 */
size_t pwt_spectrum_len(const struct PwtSpectrum *s);

/**
 * Conformal velocity v0 of the solved model (NaN for null).
 *
 * # Safety
 * `s` must be null or a live spectrum.
 */
double pwt_spectrum_v0(const struct PwtSpectrum *s);

/**
 * Copy the energies E_n = sqrt(lambda_n) into `buf`, which must hold
 * `pwt_spectrum_len` values.
 *
 * # Safety
 * `s` must be a live spectrum and `buf` valid for `len` writes.
 */
enum PwtStatus pwt_spectrum_energies(const struct PwtSpectrum *s, double *buf, size_t len);

/**
 * Copy the eigenvalues lambda_n into `buf`, which must hold
 * `pwt_spectrum_len` values.
 *
 * # Safety
 * `s` must be a live spectrum and `buf` valid for `len` writes.
 */
enum PwtStatus pwt_spectrum_lambdas(const struct PwtSpectrum *s, double *buf, size_t len);

/**
 * Release a spectrum. Null is ignored.
 *
 * # Safety
 * `s` must come from `pwt_solve` and not be used afterwards.
 */
void pwt_spectrum_free(struct PwtSpectrum *s);

/**
 * Decide perfect wave transfer for the configured model using
 * `numeric.n_max`, `numeric.eps_spec` and `numeric.eps_parity`.
 *
 * # Safety
 * `cfg` must be a live configuration and `out` a valid pointer.
 */
enum PwtStatus pwt_check(const struct PwtConfig *cfg, struct PwtVerdict *out);

/**
 * Run a pipeline and write its artifacts. `command` (for example
 * "check-pwt") and `out_dir` may be null to keep the configured values.
 *
 * # Safety
 * `cfg` must be a live configuration; string arguments must be null or
 * NUL-terminated.
 */
enum PwtStatus pwt_run(const struct PwtConfig *cfg, const char *command, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PWT_H */
