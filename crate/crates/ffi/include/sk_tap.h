#ifndef SK_TAP_H
#define SK_TAP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define SK_TAP_SCHEME_BANACH 0

#define SK_TAP_SCHEME_TWO_STEP 1

#define SK_TAP_SCHEME_EPSILON_BANACH 2

#define SK_TAP_ONSAGER_LIMITING_Q 0

#define SK_TAP_ONSAGER_EMPIRICAL_QN 1

#define SK_TAP_SHAPE_FULL_CUBE 0

#define SK_TAP_SHAPE_CORNERS 1

#define SK_TAP_RUN_CONVERGED 0

#define SK_TAP_RUN_MAX_ITERS 1

#define SK_TAP_RUN_DIVERGED 2

/**
 * Result codes.
 */
typedef enum SkTapStatus {
  SkTapStatus_Ok = 0,
  SkTapStatus_NullPointer = 1,
  SkTapStatus_InvalidArgument = 2,
  SkTapStatus_LengthMismatch = 3,
  SkTapStatus_NoConvergence = 4,
  SkTapStatus_OutsideHypercube = 5,
  SkTapStatus_DegenerateFactor = 6,
  SkTapStatus_TooLarge = 7,
  SkTapStatus_BufferTooSmall = 8,
  SkTapStatus_Internal = 9,
} SkTapStatus;

/**
 * A disorder sample with its model parameters.
 */
typedef struct SkTapModel SkTapModel;

/**
 * Final state and diagnostics of one run.
 */
typedef struct SkTapOutcome SkTapOutcome;

typedef struct SkTapRunSummary {
  /**
   * One of `SK_TAP_RUN_*`.
   */
  uint32_t status;
  bool converged;
  size_t iterations;
  double mse_final;
  double mae_final;
  double plefka;
  /**
   * NaN when the final state leaves the hypercube.
   */
  double tap_fe;
  bool inside_cube;
} SkTapRunSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *sk_tap_version(void);

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length without the NUL, or 0
 * if there is none.
 */
size_t sk_tap_last_error(char *buf, size_t len);

/**
 * Order parameter `q` and RS free energy at `(beta, h)`.
 */
enum SkTapStatus sk_tap_order_parameter(double beta, double h, double *q_out, double *rs_fe_out);

/**
 * `−2β − β²(1−q)`.
 */
double sk_tap_semicircle_edge(double beta, double q);

/**
 * Samples couplings for `n` spins from `seed` and solves for `q`.
 */
enum SkTapStatus sk_tap_model_new(size_t n,
                                  double beta,
                                  double h,
                                  uint32_t onsager_mode,
                                  uint64_t seed,
                                  struct SkTapModel **out);

void sk_tap_model_free(struct SkTapModel *model);

/**
 * Number of spins, 0 for NULL.
 */
size_t sk_tap_model_n(const struct SkTapModel *model);

/**
 * Limiting order parameter, NaN for NULL.
 */
double sk_tap_model_q(const struct SkTapModel *model);

/**
 * Fills `out[0..n]` with a random start of the given shape.
 */
enum SkTapStatus sk_tap_uniform_start(size_t n,
                                      uint64_t seed,
                                      uint32_t shape,
                                      double *out,
                                      size_t len);

/**
 * Iterates from `start` (length n; ignored by the two-step scheme's default
 * initialization) and stores the result in `*out`.
 */
enum SkTapStatus sk_tap_run(const struct SkTapModel *model,
                            uint32_t scheme,
                            double epsilon,
                            size_t max_iters,
                            double mae_target,
                            const double *start,
                            size_t len,
                            struct SkTapOutcome **out);

void sk_tap_outcome_free(struct SkTapOutcome *outcome);

enum SkTapStatus sk_tap_outcome_summary(const struct SkTapOutcome *outcome,
                                        struct SkTapRunSummary *out);

/**
 * Copies the final magnetization into `out[0..n]`.
 */
enum SkTapStatus sk_tap_outcome_magnetization(const struct SkTapOutcome *outcome,
                                              double *out,
                                              size_t len);

/**
 * Per-spin TAP free energy of `m`.
 */
enum SkTapStatus sk_tap_free_energy(const struct SkTapModel *model,
                                    const double *m,
                                    size_t len,
                                    double *out);

/**
 * `(β²/N) Σ (1 − m_i²)²`.
 */
enum SkTapStatus sk_tap_plefka(const struct SkTapModel *model,
                               const double *m,
                               size_t len,
                               double *out);

/**
 * Sorted Jacobian eigenvalues at `m` into `eigenvalues[0..n]`; the fraction
 * below −1 into `*repulsion` if it is not NULL.
 */
enum SkTapStatus sk_tap_jacobian_spectrum(const struct SkTapModel *model,
                                          const double *m,
                                          size_t len,
                                          double *eigenvalues,
                                          size_t eigenvalues_len,
                                          double *repulsion);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SK_TAP_H */
