#ifndef RICCI_LAB_H
#define RICCI_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every call.
 */
typedef enum RlStatus {
  RL_STATUS_OK = 0,
  RL_STATUS_NULL_ARGUMENT = 1,
  RL_STATUS_INVALID_UTF8 = 2,
  RL_STATUS_PARSE_ERROR = 3,
  RL_STATUS_RANGE_ERROR = 4,
  RL_STATUS_INVALID_INPUT = 5,
  RL_STATUS_NUMERICAL_ERROR = 6,
  RL_STATUS_IO_ERROR = 7,
  RL_STATUS_OUT_OF_RANGE = 8,
  RL_STATUS_BUFFER_TOO_SMALL = 9,
  RL_STATUS_PANIC = 10,
} RlStatus;

/**
 * How a run ended.
 */
typedef enum RlStopReason {
  RL_STOP_REASON_TIME_REACHED = 0,
  RL_STOP_REASON_PINCH_DETECTED = 1,
  RL_STOP_REASON_NUMERICAL_FAILURE = 2,
} RlStopReason;

/**
 * Opaque recorded flow.
 */
typedef struct RlHistory RlHistory;

/**
 * Headline monitor values of a history.
 */
typedef struct RlSummary {
  double k_bar;
  double lambda0;
  double t_total;
  double shi_ratio_max;
  double shi_ratio_h_max;
  double rm_ratio_max;
  double taming_max_early;
  double taming_max_late;
  double beta_needed_max;
  double shig_ratio_max;
  double delta_observed;
  size_t snapshots;
} RlSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *rl_version(void);

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next call on the same thread.
 */
const char *rl_last_error_message(void);

/**
 * Parse `config_text` and run the scenario. On success `*out` owns a new
 * handle.
 *
 * # Safety
 * `config_text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum RlStatus rl_run_config(const char *config_text, struct RlHistory **out);

/**
 * Release a handle. NULL is ignored.
 *
 * # Safety
 * `h` must come from `rl_run_config` and not be used afterwards.
 */
void rl_history_free(struct RlHistory *h);

/**
 * Number of recorded snapshots.
 *
 * # Safety
 * `h` must be a live handle and `out` a valid pointer.
 */
enum RlStatus rl_history_len(const struct RlHistory *h, size_t *out);

/**
 * Time of snapshot `index`.
 *
 * # Safety
 * `h` must be a live handle and `out` a valid pointer.
 */
enum RlStatus rl_history_time(const struct RlHistory *h, size_t index, double *out);

/**
 * Copy the warping function of snapshot `index` into `buf`. `*len` holds
 * the capacity on entry and the node count on return; a short buffer
 * yields `BufferTooSmall` with `*len` set to the size needed.
 *
 * # Safety
 * `h` must be a live handle, `len` valid, and `buf` valid for `*len` doubles.
 */
enum RlStatus rl_history_warp(const struct RlHistory *h, size_t index, double *buf, size_t *len);

/**
 * How the run ended.
 *
 * # Safety
 * `h` must be a live handle and `out` a valid pointer.
 */
enum RlStatus rl_history_stop_reason(const struct RlHistory *h, enum RlStopReason *out);

/**
 * Evaluate the monitors with the run's own constants.
 *
 * # Safety
 * `h` must be a live handle and `out` a valid pointer.
 */
enum RlStatus rl_history_summary(const struct RlHistory *h, struct RlSummary *out);

/**
 * Copy series.csv into `buf` as a NUL-terminated string. `*len` holds the
 * capacity on entry and the size needed, including the NUL, on return.
 *
 * # Safety
 * `h` must be a live handle, `len` valid, and `buf` valid for `*len` bytes.
 */
enum RlStatus rl_history_series_csv(const struct RlHistory *h, char *buf, size_t *len);

/**
 * Write series.csv, snapshots.csv and report.txt into `dir`.
 *
 * # Safety
 * `h` must be a live handle and `dir` a NUL-terminated path.
 */
enum RlStatus rl_history_write_outputs(const struct RlHistory *h, const char *dir);

/**
 * Barrier arithmetic margins for dimension `n` and horizon `theta1`.
 *
 * # Safety
 * `margin_c` and `margin_d` must be valid pointers.
 */
enum RlStatus rl_lemma_a_margins(size_t n, double theta1, double *margin_c, double *margin_d);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RICCI_LAB_H */
