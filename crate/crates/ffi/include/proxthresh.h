#ifndef PROXTHRESH_H
#define PROXTHRESH_H

#include <stddef.h>
#include <stdint.h>

/**
 * Result codes.
 */
typedef enum PtStatus {
  PT_STATUS_OK = 0,
  PT_STATUS_NULL_POINTER = 1,
  PT_STATUS_INVALID_CONFIG = 2,
  PT_STATUS_DIMENSION_MISMATCH = 3,
  PT_STATUS_NUMERICAL = 4,
  PT_STATUS_PANIC = 5,
} PtStatus;

/**
 * Opaque separable regularizer.
 */
typedef struct PtRegularizer PtRegularizer;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next call into this library from the same thread.
 */
const char *pt_last_error_message(void);

/**
 * Soft thresholding of `x` with respect to `gamma [d_lower, d_upper]`.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum PtStatus pt_soft_threshold(double d_lower,
                                double d_upper,
                                double gamma,
                                double x,
                                double *out);

/**
 * `prox_{gamma eta |.|^r}(mu)`.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum PtStatus pt_prox_power(double gamma, double eta, double r, double mu, double *out);

/**
 * Builds a regularizer from the TOML family format.
 *
 * # Safety
 * `toml` must be a NUL-terminated string; `out` must be valid for one write.
 */
enum PtStatus pt_regularizer_from_toml(const char *toml, struct PtRegularizer **out);

/**
 * `dimension` copies of `omega |.| + eta |.|^r`.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum PtStatus pt_regularizer_elastic_net(size_t dimension,
                                         double omega,
                                         double eta,
                                         double r,
                                         struct PtRegularizer **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `reg` must come from this library and not be used afterwards.
 */
void pt_regularizer_free(struct PtRegularizer *reg);

/**
 * Number of coordinates, or 0 for a null handle.
 *
 * # Safety
 * `reg` must be null or a live handle.
 */
size_t pt_regularizer_dim(const struct PtRegularizer *reg);

/**
 * Exact prox of `gamma g_k` at `x`.
 *
 * # Safety
 * `reg` must be a live handle; `out` must be valid for one write.
 */
enum PtStatus pt_prox_scalar(const struct PtRegularizer *reg,
                             size_t coordinate,
                             double gamma,
                             double x,
                             double *out);

/**
 * Exact componentwise prox of `gamma G` at `w`, written to `out`.
 *
 * # Safety
 * `w` and `out` must hold `len` doubles.
 */
enum PtStatus pt_prox_separable(const struct PtRegularizer *reg,
                                double gamma,
                                const double *w,
                                size_t len,
                                double *out);

/**
 * Fits `(1/n) sum_i (<u, x_i> - y_i)^2 + lambda G(u)` on row-major
 * features `x` (`n x dim`) and outputs `y`. A `tolerance` of 0 runs all
 * `max_iters` steps. `objective` may be null.
 *
 * # Safety
 * `x` must hold `n * dim` doubles, `y` must hold `n`, and `coefficients`
 * must hold `dim`.
 */
enum PtStatus pt_fit_precomputed(const struct PtRegularizer *reg,
                                 const double *x,
                                 const double *y,
                                 size_t n,
                                 size_t dim,
                                 double lambda,
                                 size_t max_iters,
                                 double tolerance,
                                 double *coefficients,
                                 double *objective);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PROXTHRESH_H */
