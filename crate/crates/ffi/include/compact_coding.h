#ifndef COMPACT_CODING_H
#define COMPACT_CODING_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every `ccq_` function.
 */
typedef enum CcqStatus {
  CCQ_STATUS_OK = 0,
  CCQ_STATUS_NULL_POINTER = 1,
  CCQ_STATUS_INVALID_UTF8 = 2,
  CCQ_STATUS_CONFIG = 3,
  CCQ_STATUS_RUNTIME = 4,
  CCQ_STATUS_OUT_OF_RANGE = 5,
  CCQ_STATUS_PANIC = 6,
} CcqStatus;

/**
 * Protocol family of a result row.
 */
typedef enum CcqProtocol {
  CCQ_PROTOCOL_THREE_STAGE = 0,
  CCQ_PROTOCOL_SINGLE_STAGE = 1,
} CcqProtocol;

/**
 * Opaque experiment configuration.
 */
typedef struct CcqConfig CcqConfig;

/**
 * Opaque set of per-trial result rows.
 */
typedef struct CcqResults CcqResults;

/**
 * Numeric view of one result row.
 */
typedef struct CcqRow {
  size_t trial_id;
  enum CcqProtocol protocol;
  size_t symbols_sent;
  double ber_total;
  double ber_intensity;
  double ber_time;
  double ber_phase;
  double erasure_rate;
  double bits_per_pulse;
  bool eve_detected;
  bool aborted;
  double mean_photons_at_bob;
  uint64_t seed;
} CcqRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next `ccq_` call on the same thread.
 */
const char *ccq_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ccq_version(void);

/**
 * Default configuration.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage.
 */
enum CcqStatus ccq_config_default(struct CcqConfig **out);

/**
 * Parses a TOML configuration document.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` writable.
 */
enum CcqStatus ccq_config_from_toml(const char *toml, struct CcqConfig **out);

/**
 * Releases a configuration. Null is accepted.
 *
 * # Safety
 * `cfg` must come from this library and not be used afterwards.
 */
void ccq_config_free(struct CcqConfig *cfg);

/**
 * Sets the master seed.
 *
 * # Safety
 * `cfg` must be a live configuration handle.
 */
enum CcqStatus ccq_config_set_seed(struct CcqConfig *cfg, uint64_t seed);

/**
 * Sets the number of trials.
 *
 * # Safety
 * `cfg` must be a live configuration handle.
 */
enum CcqStatus ccq_config_set_trials(struct CcqConfig *cfg, size_t trials);

/**
 * Sets a numeric field by dotted path, e.g. `channel.eta`.
 *
 * # Safety
 * `cfg` must be a live configuration handle and `path` NUL-terminated.
 */
enum CcqStatus ccq_config_set_param(struct CcqConfig *cfg, const char *path, double value);

/**
 * Checks the configuration without running it.
 *
 * # Safety
 * `cfg` must be a live configuration handle.
 */
enum CcqStatus ccq_config_validate(const struct CcqConfig *cfg);

/**
 * Runs all trials of the configuration.
 *
 * # Safety
 * `cfg` must be a live configuration handle and `out` writable.
 */
enum CcqStatus ccq_run(const struct CcqConfig *cfg, struct CcqResults **out);

/**
 * Releases a result set. Null is accepted.
 *
 * # Safety
 * `res` must come from this library and not be used afterwards.
 */
void ccq_results_free(struct CcqResults *res);

/**
 * Number of rows in a result set; 0 for null.
 *
 * # Safety
 * `res` must be null or a live result handle.
 */
size_t ccq_results_len(const struct CcqResults *res);

/**
 * Copies row `index` into `out`.
 *
 * # Safety
 * `res` must be a live result handle and `out` writable.
 */
enum CcqStatus ccq_results_row(const struct CcqResults *res, size_t index, struct CcqRow *out);

/**
 * Renders the rows as CSV. Release the string with [`ccq_string_free`].
 *
 * # Safety
 * `res` must be a live result handle and `out` writable.
 */
enum CcqStatus ccq_results_to_csv(const struct CcqResults *res, char **out);

/**
 * Renders the rows as JSON. Release the string with [`ccq_string_free`].
 *
 * # Safety
 * `res` must be a live result handle and `out` writable.
 */
enum CcqStatus ccq_results_to_json(const struct CcqResults *res, char **out);

/**
 * Releases a string returned by this library. Null is accepted.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void ccq_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COMPACT_CODING_H */
