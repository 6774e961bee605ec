/* leadlag: two-stage lead-lag detection for financial time series.
 *
 * C API over the C++ core. All pointers returned through out-parameters are
 * owned by the caller and released with the matching *_free function. Every
 * function returns a leadlag_status; on failure, leadlag_last_error() gives
 * a thread-local human-readable message.
 */
#ifndef LEADLAG_H
#define LEADLAG_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum leadlag_status {
    LEADLAG_OK = 0,
    LEADLAG_PARTIAL = 1,      /* stopped at the unit limit; resumable */
    LEADLAG_ERR_INVALID = 2,  /* bad arguments or config domain violation */
    LEADLAG_ERR_DATA = 3,     /* missing or malformed input data */
    LEADLAG_ERR_STATE = 4,    /* ordering violation, digest mismatch, lock held */
    LEADLAG_ERR_IO = 5,
    LEADLAG_ERR_INTERNAL = 6
} leadlag_status;

typedef struct leadlag_config leadlag_config; /* opaque */

const char* leadlag_version(void);

/* Thread-local message for the most recent failure in this thread. */
const char* leadlag_last_error(void);

void leadlag_string_free(char* s);

/* ---- configuration ------------------------------------------------------ */

leadlag_status leadlag_config_load(const char* path, leadlag_config** out);
leadlag_status leadlag_config_parse(const char* text, leadlag_config** out);
leadlag_status leadlag_config_default(const char* data_root, leadlag_config** out);
void leadlag_config_free(leadlag_config* cfg);

/* Canonical serialized form; round-trips through leadlag_config_parse. */
leadlag_status leadlag_config_dump(const leadlag_config* cfg, char** text);
leadlag_status leadlag_config_set_workers(leadlag_config* cfg, int workers);
leadlag_status leadlag_config_set_output_dir(leadlag_config* cfg, const char* dir);

/* ---- pipeline ------------------------------------------------------------ */

/* Generate a synthetic fixture tree from a JSON spec file. seed_override 0
 * keeps the spec's seed. manifest_json (optional) receives the manifest. */
leadlag_status leadlag_synth_generate(const char* spec_path, const char* out_root,
                                      uint64_t seed_override, char** manifest_json);

/* Ingestion dry-run: JSON report of parsed symbols, exclusions, diagnostics.
 * granularity is one of "1min", "5min", "15min", "daily". */
leadlag_status leadlag_ingest_validate(const leadlag_config* cfg,
                                       const char* granularity, char** report_json);

/* max_units < 0 runs to completion; otherwise the stage stops after that many
 * newly processed units and returns LEADLAG_PARTIAL (resume to continue). */
leadlag_status leadlag_run_stage1(const leadlag_config* cfg, const char* run_id,
                                  int resume, long max_units);
leadlag_status leadlag_run_stage2(const leadlag_config* cfg, const char* run_id,
                                  int resume, long max_units);

leadlag_status leadlag_write_reports(const leadlag_config* cfg, const char* run_id);

/* pair: "LEADER,FOLLOWER" or NULL; granularity label or NULL for all. */
leadlag_status leadlag_emit_plots(const leadlag_config* cfg, const char* run_id,
                                  int top_n, const char* pair,
                                  const char* granularity);

/* ---- kernels on raw arrays ----------------------------------------------- */

/* Cross-correlation of (a_t, b_{t+l}) for l in [-max_lag, max_lag]; values_out
 * must hold 2*max_lag+1 doubles. NaN marks zero-variance windows. */
leadlag_status leadlag_ccf(const double* a, const double* b, size_t n,
                           int max_lag, double* values_out, double* band_out);

/* positive_only != 0 restricts the search to lags >= 1. */
leadlag_status leadlag_optimal_lag(const double* values, int max_lag, double band,
                                   int positive_only, int* lag_out,
                                   double* value_out, int* significant_out);

/* band < 0 disables the Sakoe-Chiba constraint. */
leadlag_status leadlag_dtw(const double* a, size_t na, const double* b, size_t nb,
                           long band, double* out);

leadlag_status leadlag_pearson(const double* a, const double* b, size_t n,
                               double* out);
leadlag_status leadlag_kendall_tau(const double* a, const double* b, size_t n,
                                   double* out);

/* Granger test of cause -> effect with BIC order selection up to max_order. */
leadlag_status leadlag_granger(const double* cause, const double* effect, size_t n,
                               int max_order, int* order_out, double* f_out,
                               double* p_out);

/* OLS of follower_t on leader_{t-lag} (Eq.7-style). Any out pointer may be
 * NULL. */
leadlag_status leadlag_lag_regression(const double* leader, const double* follower,
                                      size_t n, int lag, double* alpha_out,
                                      double* beta_out, double* r2_out,
                                      double* beta_pvalue_out);

leadlag_status leadlag_f_cdf(double x, int df_num, int df_den, double* out);
leadlag_status leadlag_t_cdf(double x, int df, double* out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* LEADLAG_H */
