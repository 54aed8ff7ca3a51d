#ifndef SECTOR_DIRAC_H
#define SECTOR_DIRAC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of every fallible call.
 */
typedef enum SdStatus {
  SD_STATUS_OK = 0,
  SD_STATUS_INVALID_ARGUMENT = 1,
  SD_STATUS_OUT_OF_DOMAIN = 2,
  SD_STATUS_OVERFLOW = 3,
  SD_STATUS_PRECONDITION = 4,
  SD_STATUS_CONFIGURATION = 5,
  SD_STATUS_INVALID_GEOMETRY = 6,
  SD_STATUS_NON_CONVERGENCE = 7,
  SD_STATUS_PARSE = 8,
  SD_STATUS_IO = 9,
  SD_STATUS_NULL_POINTER = 10,
  SD_STATUS_PANIC = 11,
} SdStatus;

typedef enum SdFiberClass {
  SD_FIBER_CLASS_SELF_ADJOINT = 0,
  SD_FIBER_CLASS_DEFICIENCY_ONE = 1,
} SdFiberClass;

/**
 * Opaque assembled sector operator.
 */
typedef struct SdAssembly SdAssembly;

/**
 * Opaque sector of half-aperture ω.
 */
typedef struct SdGeometry SdGeometry;

/**
 * Opaque spectral report.
 */
typedef struct SdSpectrum SdSpectrum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length without the NUL.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t sd_last_error_message(char *buf, size_t len);

/**
 * # Safety
 * `out_geom` must be a valid pointer.
 */
enum SdStatus sd_geometry_new(double omega, struct SdGeometry **out_geom);

/**
 * # Safety
 * `geom` must come from [`sd_geometry_new`] and not be freed twice.
 */
void sd_geometry_free(struct SdGeometry *geom);

/**
 * # Safety
 * Pointers must be valid.
 */
enum SdStatus sd_geometry_lambda(const struct SdGeometry *geom, int64_t kappa, double *out_lambda);

/**
 * # Safety
 * Pointers must be valid.
 */
enum SdStatus sd_classify_fiber(const struct SdGeometry *geom,
                                int64_t kappa,
                                enum SdFiberClass *out_class);

/**
 * # Safety
 * `out_value` must be valid.
 */
enum SdStatus sd_bessel_k(double nu, double r, double *out_value);

/**
 * Weyl quotient of the probe family selected by the sign of `mass`.
 *
 * # Safety
 * `out_quotient` must be valid.
 */
enum SdStatus sd_weyl_quotient(uint32_t n, double mass, double lambda, double *out_quotient);

/**
 * Phase of the scaled extension parameter.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SdStatus sd_scaled_gamma(const struct SdGeometry *geom,
                              double phase,
                              double alpha,
                              double *out_phase);

/**
 * Writes 1 when γ = e^{i·phase} is charge-conjugation admissible, else 0.
 *
 * # Safety
 * `out_flag` must be valid.
 */
enum SdStatus sd_charge_conj_admissible(double phase, int32_t *out_flag);

/**
 * Classifies a polygon given as a JSON array of [x, y] pairs. `out_count`
 * receives 0 for a self-adjoint operator, otherwise the number of
 * extension parameters (one per reflex corner, a heuristic count).
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out_count` must be valid.
 */
enum SdStatus sd_polygon_classify(const char *json, size_t *out_count);

/**
 * Assembles the sector operator on a uniform radial grid. `has_gamma`
 * selects whether `gamma_phase` is used; it is required iff ω > π/2.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SdStatus sd_assembly_new(const struct SdGeometry *geom,
                              double mass,
                              int32_t has_gamma,
                              double gamma_phase,
                              size_t n_modes,
                              double r_min,
                              double r_max,
                              size_t n_r,
                              struct SdAssembly **out_asm);

/**
 * # Safety
 * `asm` must come from [`sd_assembly_new`] and not be freed twice.
 */
void sd_assembly_free(struct SdAssembly *asm);

/**
 * # Safety
 * Pointers must be valid.
 */
enum SdStatus sd_assembly_dim(const struct SdAssembly *asm, size_t *out_dim);

/**
 * The `k` eigenvalues nearest 0. A report whose residuals miss the bound
 * is still returned, together with [`SdStatus::NonConvergence`].
 *
 * # Safety
 * Pointers must be valid.
 */
enum SdStatus sd_spectrum_solve(const struct SdAssembly *asm,
                                size_t k,
                                struct SdSpectrum **out_spec);

/**
 * # Safety
 * `spec` must come from [`sd_spectrum_solve`] and not be freed twice.
 */
void sd_spectrum_free(struct SdSpectrum *spec);

/**
 * # Safety
 * Pointers must be valid.
 */
enum SdStatus sd_spectrum_len(const struct SdSpectrum *spec, size_t *out_len);

/**
 * Copies up to `len` ascending eigenvalues into `buf`.
 *
 * # Safety
 * `buf` must point to `len` writable doubles.
 */
enum SdStatus sd_spectrum_values(const struct SdSpectrum *spec, double *buf, size_t len);

/**
 * # Safety
 * Pointers must be valid.
 */
enum SdStatus sd_spectrum_min_abs(const struct SdSpectrum *spec, double *out_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SECTOR_DIRAC_H */
