#ifndef DROPLET_H
#define DROPLET_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every fallible call. `Ok` is zero.
 */
typedef enum DropletStatus {
  DROPLET_STATUS_OK = 0,
  DROPLET_STATUS_NULL_POINTER = 1,
  DROPLET_STATUS_INVALID_ARGUMENT = 2,
  DROPLET_STATUS_INVALID_DOMAIN = 3,
  DROPLET_STATUS_OUT_OF_DOMAIN = 4,
  DROPLET_STATUS_OUT_OF_RANGE = 5,
  DROPLET_STATUS_INVALID_LAW = 6,
  DROPLET_STATUS_ILL_CONDITIONED = 7,
  DROPLET_STATUS_TOPOLOGY_CHANGE = 8,
  DROPLET_STATUS_SEARCH_FAILURE = 9,
  DROPLET_STATUS_FILLET_TOO_LARGE = 10,
  DROPLET_STATUS_CONFIG = 11,
  DROPLET_STATUS_IO = 12,
  /*
   The output buffer is too small; the required size was written.
   */
  DROPLET_STATUS_BUFFER_TOO_SMALL = 13,
  DROPLET_STATUS_PANIC = 99,
} DropletStatus;

/*
 Opaque closed curve.
 */
typedef struct DropletCurve DropletCurve;

/*
 Opaque mobility law.
 */
typedef struct DropletLaw DropletLaw;

/*
 Opaque solved torsion problem.
 */
typedef struct DropletSolution DropletSolution;

/*
 Outcome of a counterexample run.
 */
typedef struct DropletReport {
  double x0;
  double x1;
  /*
   Predicted initial slope of the gap.
   */
  double gap_rate;
  /*
   NaN when no slope could be fitted.
   */
  double fitted_slope;
  double slope_relative_error;
  /*
   0 broken, 1 not broken, 2 inconclusive.
   */
  int32_t verdict;
  /*
   NaN unless the verdict is "broken".
   */
  double t_star;
  /*
   1 when all three certificates agree.
   */
  int32_t agree;
  /*
   1 when the run stopped before `t_end`.
   */
  int32_t truncated;
  size_t steps;
} DropletReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Copies the calling thread's last error message into `buf` as a
 NUL-terminated string, truncating to `cap - 1` bytes. Returns the full
 message length in bytes, excluding the terminator.

 # Safety
 `buf` must be null or valid for `cap` bytes.
 */
size_t droplet_last_error(char *buf, size_t cap);

/*
 Builds a curve from `n` interleaved `x, y` pairs, reordering to
 counterclockwise if needed.

 # Safety
 `xy` must be valid for `2 * n` reads and `out` for one write.
 */
enum DropletStatus droplet_curve_from_points(const double *xy, size_t n, struct DropletCurve **out);

/*
 # Safety
 `out` must be valid for one write.
 */
enum DropletStatus droplet_curve_disk(double radius, size_t n, struct DropletCurve **out);

/*
 Equilateral triangle with base `[-a, a]` on `y = 0` and corner fillets of
 radius `fillet` (0 for sharp corners).

 # Safety
 `out` must be valid for one write.
 */
enum DropletStatus droplet_curve_rounded_triangle(double a,
                                                  double fillet,
                                                  size_t n,
                                                  struct DropletCurve **out);

/*
 # Safety
 `curve` must be null or a handle from this library.
 */
void droplet_curve_free(struct DropletCurve *curve);

/*
 Marker count, or 0 for a null handle.

 # Safety
 `curve` must be null or a live handle.
 */
size_t droplet_curve_len(const struct DropletCurve *curve);

/*
 Interleaved `x, y` coordinates; `*len` receives `2 * N`.

 # Safety
 `curve` must be a live handle, `buf` null or valid for `cap` writes,
 `len` valid for one write.
 */
enum DropletStatus droplet_curve_points(const struct DropletCurve *curve,
                                        double *buf,
                                        size_t cap,
                                        size_t *len);

/*
 # Safety
 `curve` must be a live handle and `out` valid for one write.
 */
enum DropletStatus droplet_curve_area(const struct DropletCurve *curve, double *out);

/*
 Writes 1 to `*out` if the polygon is convex at the default tolerance.

 # Safety
 `curve` must be a live handle and `out` valid for one write.
 */
enum DropletStatus droplet_curve_is_convex(const struct DropletCurve *curve, int32_t *out);

/*
 Parses a law name such as `p2`, `p3`, `p:2.5` or `linear`.

 # Safety
 `name` must be a NUL-terminated string and `out` valid for one write.
 */
enum DropletStatus droplet_law_parse(const char *name, struct DropletLaw **out);

/*
 # Safety
 `law` must be null or a handle from this library.
 */
void droplet_law_free(struct DropletLaw *law);

/*
 `F(r)` for `r > 0`.

 # Safety
 `law` must be a live handle and `out` valid for one write.
 */
enum DropletStatus droplet_law_velocity(const struct DropletLaw *law, double r, double *out);

/*
 Solves the torsion problem on `curve` with default solver settings.

 # Safety
 `curve` must be a live handle and `out` valid for one write.
 */
enum DropletStatus droplet_solve(const struct DropletCurve *curve, struct DropletSolution **out);

/*
 # Safety
 `solution` must be null or a handle from this library.
 */
void droplet_solution_free(struct DropletSolution *solution);

/*
 `M = ∫w`.

 # Safety
 `solution` must be a live handle and `out` valid for one write.
 */
enum DropletStatus droplet_solution_mass(const struct DropletSolution *solution, double *out);

/*
 `λ = 1/M`.

 # Safety
 `solution` must be a live handle and `out` valid for one write.
 */
enum DropletStatus droplet_solution_lambda(const struct DropletSolution *solution, double *out);

/*
 `|Du|` at every marker; `*len` receives `N`.

 # Safety
 `solution` must be a live handle, `buf` null or valid for `cap` writes,
 `len` valid for one write.
 */
enum DropletStatus droplet_solution_gradient(const struct DropletSolution *solution,
                                             double *buf,
                                             size_t cap,
                                             size_t *len);

/*
 Evolves `curve` to `t_end` with steps of at most `dt_max` and writes the
 final curve. `marker_count` of 0 keeps the input count.

 # Safety
 `curve` and `law` must be live handles and `out` valid for one write.
 */
enum DropletStatus droplet_evolve(const struct DropletCurve *curve,
                                  const struct DropletLaw *law,
                                  double dt_max,
                                  double t_end,
                                  size_t marker_count,
                                  struct DropletCurve **out);

/*
 Runs the convexity-breaking experiment on the rounded triangle.
 `pair_x0`/`pair_x1` of NaN let the pair be chosen automatically.

 # Safety
 `law` must be a live handle and `out` valid for one write.
 */
enum DropletStatus droplet_counterexample(const struct DropletLaw *law,
                                          double a,
                                          double fillet,
                                          size_t marker_count,
                                          double dt_max,
                                          double t_end,
                                          double pair_x0,
                                          double pair_x1,
                                          struct DropletReport *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DROPLET_H */
