/* C interface to the rcp compressive sensing diagnostics library. */

#ifndef RCP_H
#define RCP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible entry point.
 */
typedef enum RcpStatus {
  RcpStatus_Ok = 0,
  /**
   * A required pointer argument was null.
   */
  RcpStatus_NullPointer = 1,
  RcpStatus_InvalidArgument = 2,
  RcpStatus_NumericFailure = 3,
  RcpStatus_CapacityExceeded = 4,
  RcpStatus_DomainError = 5,
  RcpStatus_DegenerateSample = 6,
  RcpStatus_IoError = 7,
  RcpStatus_ParseError = 8,
  RcpStatus_SerializeError = 9,
} RcpStatus;

/**
 * Opaque measurement-matrix handle.
 */
typedef struct RcpMatrix RcpMatrix;

/**
 * Scalar summary of one signal pair under a measurement matrix.
 */
typedef struct RcpPairSummary {
  /**
   * Energy-imbalance ratio, always >= 1.
   */
  double xi;
  double cos_alpha;
  double cos_beta;
  double delta_u;
  double delta_v;
  double delta_max;
} RcpPairSummary;

/**
 * A closed interval bound.
 */
typedef struct RcpInterval {
  double lower;
  double upper;
} RcpInterval;

/**
 * Outcome of a statistical test.
 */
typedef struct RcpTestOutcome {
  double statistic;
  double critical_value;
  /**
   * 1 when the test passes (fails to reject), 0 otherwise.
   */
  int32_t pass;
} RcpTestOutcome;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message on this thread into `buf` (NUL-terminated,
 * truncated to `len` bytes) and returns the full message length excluding
 * the terminator. `buf` may be null to query the length.
 */
uintptr_t rcp_last_error(char *buf, uintptr_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rcp_version(void);

/**
 * Creates an M x N Gaussian measurement matrix (entry variance 1/M).
 */
enum RcpStatus rcp_matrix_gaussian(uintptr_t m, uintptr_t n, uint64_t seed, struct RcpMatrix **out);

/**
 * Creates a matrix from `rows * cols` row-major doubles.
 */
enum RcpStatus rcp_matrix_from_data(uintptr_t rows,
                                    uintptr_t cols,
                                    const double *data,
                                    struct RcpMatrix **out);

/**
 * Row count of a matrix handle; 0 for null.
 */
uintptr_t rcp_matrix_rows(const struct RcpMatrix *matrix);

/**
 * Column count of a matrix handle; 0 for null.
 */
uintptr_t rcp_matrix_cols(const struct RcpMatrix *matrix);

/**
 * Releases a matrix handle. Null is a no-op.
 */
void rcp_matrix_free(struct RcpMatrix *matrix);

/**
 * Exact restricted isometry constant at sparsity `k` (enumerates all
 * supports; fails with `CapacityExceeded` past the enumeration cap).
 */
enum RcpStatus rcp_ric_exact(const struct RcpMatrix *matrix, uintptr_t k, double *out_delta);

/**
 * Monte-Carlo lower bound of the restricted isometry constant.
 */
enum RcpStatus rcp_ric_monte_carlo(const struct RcpMatrix *matrix,
                                   uintptr_t k,
                                   uintptr_t trials,
                                   uint64_t seed,
                                   double *out_delta);

/**
 * Angle and isometry summary of the pair `(x_u, x_v)`, both of length
 * `len` equal to the matrix column count.
 */
enum RcpStatus rcp_pair_geometry(const struct RcpMatrix *matrix,
                                 const double *x_u,
                                 const double *x_v,
                                 uintptr_t len,
                                 struct RcpPairSummary *out);

/**
 * Sign-robust JL angle envelope for the given constants.
 */
enum RcpStatus rcp_jl_envelope(double xi,
                               double cos_alpha,
                               double delta_max,
                               double epsilon,
                               struct RcpInterval *out);

/**
 * Symmetric angle envelope for disjoint-support pairs.
 */
enum RcpStatus rcp_orthogonal_envelope(double delta_k,
                                       double delta_max,
                                       double xi,
                                       struct RcpInterval *out);

/**
 * Runs a Wishart eigenvalue campaign and a Kolmogorov-Smirnov normality
 * test of the transformed statistic at the given significance level.
 */
enum RcpStatus rcp_wishart_ks(uintptr_t m,
                              uintptr_t n,
                              uintptr_t supp_size,
                              uintptr_t trials,
                              uint64_t seed,
                              double significance,
                              struct RcpTestOutcome *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RCP_H */
