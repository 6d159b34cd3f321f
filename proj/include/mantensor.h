/* C interface to the manifold-valued tensor approximation library.
 *
 * All functions return MT_OK or an error status; mt_last_error() describes
 * the most recent failure on the calling thread. Objects returned through
 * out-parameters are owned by the caller and released with the matching
 * _free function. Passing NULL where an object is required yields
 * MT_ERR_INVALID_ARGUMENT.
 */
#ifndef MANTENSOR_H
#define MANTENSOR_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mt_status {
  MT_OK = 0,
  MT_ERR_INVALID_ARGUMENT = 1,
  MT_ERR_DIMENSION_MISMATCH = 2,
  MT_ERR_CUT_LOCUS = 3,
  MT_ERR_NOT_CONVERGED = 4,
  MT_ERR_CURVATURE_TOO_LARGE = 5,
  MT_ERR_NOT_POSITIVE_DEFINITE = 6,
  MT_ERR_DIVERGED = 7,
  MT_ERR_NO_STABLE_STEP = 8,
  MT_ERR_IO = 9,
  MT_ERR_BAD_MAGIC = 10,
  MT_ERR_SHAPE_MISMATCH = 11,
  MT_ERR_INVARIANT_VIOLATION = 12,
  MT_ERR_NUMERIC = 13,
  MT_ERR_UNKNOWN = 14
} mt_status;

typedef enum mt_manifold_kind {
  MT_MANIFOLD_EUCLIDEAN = 0,
  MT_MANIFOLD_SPHERE = 1,
  MT_MANIFOLD_SPD = 2
} mt_manifold_kind;

typedef struct mt_tensor mt_tensor;
typedef struct mt_point mt_point;
typedef struct mt_report mt_report;
typedef struct mt_approx_result mt_approx_result;

const char* mt_version(void);

/* Message for the last failing call on this thread; empty string if none. */
const char* mt_last_error(void);

/* 1 means validation-style failures (bad input, bad file); 2 means numeric
 * failures (divergence, cut locus, indefinite systems); 0 otherwise. */
int mt_status_class(mt_status s);

void mt_set_max_threads(int n);
int mt_max_threads(void);

/* ---- tensors ---------------------------------------------------------- */

/* param is the intrinsic dimension for euclidean/sphere and the matrix size
 * n for spd. coords holds num_entries * embedding_dim doubles, entries
 * row-major over the shape, coordinates contiguous per entry. */
mt_status mt_tensor_new(mt_manifold_kind kind, int param, const int* shape,
                        int order, const double* coords, mt_tensor** out);
void mt_tensor_free(mt_tensor* t);

mt_status mt_tensor_kind(const mt_tensor* t, mt_manifold_kind* out);
mt_status mt_tensor_dim(const mt_tensor* t, int* out);
mt_status mt_tensor_embedding_dim(const mt_tensor* t, int* out);
mt_status mt_tensor_order(const mt_tensor* t, int* out);
mt_status mt_tensor_shape(const mt_tensor* t, int* buf, int buf_len);
mt_status mt_tensor_num_entries(const mt_tensor* t, int64_t* out);
/* buf receives num_entries * embedding_dim doubles. */
mt_status mt_tensor_coords(const mt_tensor* t, double* buf, int64_t buf_len);
mt_status mt_tensor_entry_point(const mt_tensor* t, int64_t index,
                                mt_point** out);

mt_status mt_generate_sphere1d(int n, double noise_var, uint64_t seed,
                               mt_tensor** out);
mt_status mt_generate_spd1d(int n, double tau_var, double noise_var,
                            uint64_t seed, mt_tensor** out);

mt_status mt_read_mvt(const char* path, int repair, mt_tensor** out);
mt_status mt_write_mvt(const char* path, const mt_tensor* t);

mt_status mt_ingest_spd_image(const char* path, int x_dim, int y_dim,
                              int z_dim, int x0, int x1, int y0, int y1,
                              int z0, int z1, double clamp_rel,
                              mt_tensor** out);

/* ---- base points ------------------------------------------------------ */

void mt_point_free(mt_point* p);
mt_status mt_point_embedding_dim(const mt_point* p, int* out);
mt_status mt_point_coords(const mt_point* p, double* buf, int buf_len);

mt_status mt_barycentre(const mt_tensor* t, double tol, int max_iter,
                        mt_point** out, int* iterations, double* grad_norm,
                        int* hemisphere_warning);
mt_status mt_nearest_data_barycentre(const mt_tensor* t, mt_point** out);

/* ---- approximation ---------------------------------------------------- */

typedef struct mt_approx_options {
  const char* method;     /* "thosvd", "cc" or "mc" */
  const int* rank;        /* multilinear rank tuple; NULL keeps detected */
  int rank_len;
  double mc_step;         /* <= 0 autotunes */
  double mc_grad_tol_rel; /* <= 0 uses 1e-2 */
  int mc_max_iter;        /* <= 0 uses 1000 */
} mt_approx_options;

mt_status mt_approximate(const mt_tensor* t, const mt_point* base,
                         const mt_approx_options* opt, mt_approx_result** out);
void mt_approx_result_free(mt_approx_result* r);

/* One-row report for the fitted approximation. */
mt_status mt_approx_result_report(const mt_approx_result* r, mt_report** out);
/* Core coefficients as a euclidean tensor of the kept ranks. */
mt_status mt_approx_result_core(const mt_approx_result* r, mt_tensor** out);

/* ranks is num_ranks tuples of rank_len ints, flattened row-major. */
mt_status mt_rank_sweep(const mt_tensor* t, const mt_point* base,
                        const mt_approx_options* opt, const int* ranks,
                        int rank_len, int num_ranks, mt_report** out);

/* Times the pipeline per rank tuple (single-threaded, median of repeats)
 * and attaches the timing to otherwise sweep-identical rows. */
mt_status mt_benchmark(const mt_tensor* t, const mt_point* base,
                       const mt_approx_options* opt, const int* ranks,
                       int rank_len, int num_ranks, int repeats,
                       mt_report** out);

/* ---- reports ---------------------------------------------------------- */

void mt_report_free(mt_report* r);
mt_status mt_report_num_rows(const mt_report* r, int* out);
/* Pointer stays valid until the report is freed. */
mt_status mt_report_row_method(const mt_report* r, int row, const char** out);
mt_status mt_report_row_rank(const mt_report* r, int row, int* buf,
                             int buf_len, int* out_len);
mt_status mt_report_row_eps_rel(const mt_report* r, int row, double* out);
mt_status mt_report_row_lower_bound(const mt_report* r, int row, double* out);
/* has receives 0 when the field is absent; out is untouched then. */
mt_status mt_report_row_delta_rel(const mt_report* r, int row, double* out,
                                  int* has);
mt_status mt_report_row_time_s(const mt_report* r, int row, double* out,
                               int* has);
mt_status mt_report_row_iters(const mt_report* r, int row, int64_t* out,
                              int* has);

/* CSV bytes as written to file; release with mt_string_free. */
mt_status mt_report_to_csv(const mt_report* r, char** out);
void mt_string_free(char* s);

mt_status mt_report_write_csv(const char* path, const mt_report* r);
mt_status mt_report_read_csv(const char* path, mt_report** out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* MANTENSOR_H */
