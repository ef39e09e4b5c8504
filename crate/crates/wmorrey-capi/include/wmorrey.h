#ifndef WMORREY_H
#define WMORREY_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define WM_OK 0

#define WM_ERR_RUNTIME 1

#define WM_ERR_INVALID 2

#define WM_ERR_COST_GUARD 3

#define WM_ERR_DEGENERATE 4

#define WM_ERR_NULL_ARGUMENT 5

/**
 * Opaque ball-family handle.
 */
typedef struct WmFamily WmFamily;

/**
 * Opaque sampled-function handle.
 */
typedef struct WmFunction WmFunction;

/**
 * Opaque lattice handle.
 */
typedef struct WmGrid WmGrid;

/**
 * Opaque weight handle.
 */
typedef struct WmWeight WmWeight;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message behind the most recent failure on this thread, or null. Free the
 * returned string with `wm_string_free`.
 */
char *wm_last_error_message(void);

/**
 * Frees a string allocated by this library.
 *
 * # Safety
 * `s` must have been returned by a `wm_*` function and not freed before.
 */
void wm_string_free(char *s);

/**
 * Creates an offset lattice over `[-half_extent, half_extent]^n`;
 * `half_extent / spacing` must be a power of two. Null on error.
 */
struct WmGrid *wm_grid_new(uint32_t n, double half_extent, double spacing);

/**
 * # Safety
 * `grid` must be a live handle from `wm_grid_new`.
 */
void wm_grid_free(struct WmGrid *grid);

/**
 * Sample count of the grid, 0 for null.
 *
 * # Safety
 * `grid` must be null or a live handle.
 */
size_t wm_grid_sample_count(const struct WmGrid *grid);

/**
 * Builds a function from one value per lattice sample (canonical index
 * order). Null on length mismatch or non-finite values.
 *
 * # Safety
 * `grid` must be a live handle; `values` must point to `len` readable
 * doubles.
 */
struct WmFunction *wm_function_new(const struct WmGrid *grid, const double *values, size_t len);

/**
 * # Safety
 * `f` must be a live handle from this library.
 */
void wm_function_free(struct WmFunction *f);

/**
 * # Safety
 * `f` must be null or a live handle.
 */
size_t wm_function_len(const struct WmFunction *f);

/**
 * Value at a sample index; NaN when out of range.
 *
 * # Safety
 * `f` must be null or a live handle.
 */
double wm_function_value(const struct WmFunction *f, size_t index);

/**
 * Writes `<base>.json` and `<base>.f64` (8-byte little-endian floats).
 *
 * # Safety
 * `f`, `name`, and `base_path` must be live/valid.
 */
int32_t wm_function_export(const struct WmFunction *f, const char *name, const char *base_path);

/**
 * Reads a `<base>.json` / `<base>.f64` pair. Null on error.
 *
 * # Safety
 * `base_path` must be a valid C string.
 */
struct WmFunction *wm_function_import(const char *base_path);

/**
 * Parses a weight from its JSON form, e.g.
 * `{"kind":"power","c":1.0,"terms":[{"anchor":[0.0,0.0],"alpha":0.5}]}`.
 *
 * # Safety
 * `json` must be a valid C string.
 */
struct WmWeight *wm_weight_from_json(const char *json);

/**
 * # Safety
 * `w` must be a live handle.
 */
void wm_weight_free(struct WmWeight *w);

/**
 * Samples a weight on a grid; null when the weight is singular on a sample.
 *
 * # Safety
 * `w` and `grid` must be live handles.
 */
struct WmFunction *wm_weight_sample(const struct WmWeight *w, const struct WmGrid *grid);

/**
 * Dyadic ball family over a center sublattice of the given stride.
 *
 * # Safety
 * `grid` must be a live handle.
 */
struct WmFamily *wm_family_dyadic(const struct WmGrid *grid, size_t stride);

/**
 * Origin-centered dyadic ladder only.
 *
 * # Safety
 * `grid` must be a live handle.
 */
struct WmFamily *wm_family_origin(const struct WmGrid *grid);

/**
 * # Safety
 * `fam` must be a live handle.
 */
void wm_family_free(struct WmFamily *fam);

/**
 * # Safety
 * `fam` must be null or a live handle.
 */
size_t wm_family_len(const struct WmFamily *fam);

/**
 * Midpoint-rule integral over the open ball with center `(cx, cy)` and
 * radius `r` (pass `cy = 0` in one dimension).
 *
 * # Safety
 * `f` must be a live handle; `out` must be writable.
 */
int32_t wm_integrate_ball(const struct WmFunction *f, double cx, double cy, double r, double *out);

/**
 * Integral over the whole cube.
 *
 * # Safety
 * `f` must be a live handle; `out` must be writable.
 */
int32_t wm_integrate_domain(const struct WmFunction *f, double *out);

/**
 * `(int |f|^p w)^{1/p}` over the cube; `w` may be null for Lebesgue.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
int32_t wm_lp_norm(const struct WmFunction *f, const struct WmFunction *w, double p, double *out);

/**
 * Weak norm `sup_lambda lambda w({|f| > lambda})^{1/p}`.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
int32_t wm_weak_lp_norm(const struct WmFunction *f,
                        const struct WmFunction *w,
                        double p,
                        double *out);

/**
 * Morrey norm over the family: `max_F (w(B)^{-kappa} int_B |f|^p w)^{1/p}`.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
int32_t wm_morrey_norm(const struct WmFunction *f,
                       const struct WmFunction *w,
                       double p,
                       double kappa,
                       const struct WmFamily *family,
                       double *out);

/**
 * Weak Morrey norm over the family.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
int32_t wm_weak_morrey_norm(const struct WmFunction *f,
                            const struct WmFunction *w,
                            double p,
                            double kappa,
                            const struct WmFamily *family,
                            double *out);

/**
 * Max mean oscillation over the family.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
int32_t wm_bmo_norm(const struct WmFunction *f, const struct WmFamily *family, double *out);

/**
 * Luxemburg norm on the ball `B((cx, cy), r)` for a Young function given
 * in JSON, e.g. `{"kind":"phi"}` or `{"kind":"power","p":2.0}`; `w` may be
 * null for the Lebesgue average.
 *
 * # Safety
 * Handles must be live, strings valid, `out` writable.
 */
int32_t wm_luxemburg_norm(const struct WmFunction *f,
                          const char *young_json,
                          double cx,
                          double cy,
                          double r,
                          const struct WmFunction *w,
                          double *out);

/**
 * A_p characteristic of a weight over the family (A_1 form at p = 1).
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
int32_t wm_ap_characteristic(const struct WmWeight *w,
                             double p,
                             const struct WmGrid *grid,
                             const struct WmFamily *family,
                             double *out);

/**
 * Stability probe of an A_p characteristic on the origin ladder:
 * `out_value` gets the base characteristic, `out_stable` 1 or 0.
 *
 * # Safety
 * Handles must be live; out pointers writable.
 */
int32_t wm_ap_stability(const struct WmWeight *w,
                        double p,
                        const struct WmGrid *grid,
                        double *out_value,
                        int32_t *out_stable);

/**
 * Runs a full verification config (same JSON schema as the CLI) and
 * returns the report as a JSON string; null on error. Free the result with
 * `wm_string_free`.
 *
 * # Safety
 * `config_json` must be a valid C string.
 */
char *wm_run_verification(const char *config_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WMORREY_H */
