#ifndef TWOWAY_QKD_H
#define TWOWAY_QKD_H

/* Generated by cbindgen from twoway-qkd-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Success.
 */
#define TWQ_OK 0

/**
 * A required pointer was null.
 */
#define TWQ_ERR_NULL 1

/**
 * A string argument was not valid UTF-8.
 */
#define TWQ_ERR_UTF8 2

/**
 * A key, value, or numeric parameter was rejected; details via
 * `twq_last_error`.
 */
#define TWQ_ERR_ARG 3

/**
 * A file operation failed; details via `twq_last_error`.
 */
#define TWQ_ERR_IO 4

/**
 * Session verdict: the closing hashes agreed.
 */
#define TWQ_VERDICT_ACCEPTED 0

/**
 * Session verdict: the closing hashes disagreed.
 */
#define TWQ_VERDICT_HASH_MISMATCH 1

/**
 * Session verdict: an authentication round failed the integrity condition.
 */
#define TWQ_VERDICT_AUTH_FAILURE 2

/**
 * Session verdict: the session ended with no key material.
 */
#define TWQ_VERDICT_ABORTED 3

/**
 * Opaque configuration handle: session parameters and adversary selection,
 * keyed exactly like the config file format.
 */
typedef struct TwqConfig TwqConfig;

/**
 * Opaque handle to one completed session.
 */
typedef struct TwqTranscript TwqTranscript;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a configuration with the documented defaults. Free with
 * `twq_config_free`. Returns null only on allocation failure.
 */
struct TwqConfig *twq_config_new(void);

/**
 * Assigns one configuration key (`N`, `c`, `mu`, `t`, `seed`, `attack`,
 * ...), validating the value range.
 *
 * # Safety
 * `cfg` must be a live handle from `twq_config_new`; `key` and `value` must
 * be NUL-terminated strings.
 */
int32_t twq_config_set(struct TwqConfig *cfg, const char *key, const char *value);

/**
 * Releases a configuration handle; null is ignored.
 *
 * # Safety
 * `cfg` must be null or a live handle from `twq_config_new`.
 */
void twq_config_free(struct TwqConfig *cfg);

/**
 * Runs one full session under the configured adversary and stores a new
 * transcript handle in `out`. Free the transcript with
 * `twq_transcript_free`.
 *
 * # Safety
 * `cfg` must be a live configuration handle; `out` must point to writable
 * memory for one pointer.
 */
int32_t twq_run(const struct TwqConfig *cfg, struct TwqTranscript **out);

/**
 * Releases a transcript handle; null is ignored.
 *
 * # Safety
 * `transcript` must be null or a live handle from `twq_run`.
 */
void twq_transcript_free(struct TwqTranscript *transcript);

/**
 * The session verdict as a `TWQ_VERDICT_*` value, or -1 on a null handle.
 *
 * # Safety
 * `transcript` must be null or a live handle from `twq_run`.
 */
int32_t twq_transcript_verdict(const struct TwqTranscript *transcript);

/**
 * The sifted error rate, or NaN when the session produced no key or the
 * handle is null.
 *
 * # Safety
 * `transcript` must be null or a live handle from `twq_run`.
 */
double twq_transcript_qber(const struct TwqTranscript *transcript);

/**
 * Sifted bits per executed round, or NaN on a null handle.
 *
 * # Safety
 * `transcript` must be null or a live handle from `twq_run`.
 */
double twq_transcript_sift_rate(const struct TwqTranscript *transcript);

/**
 * Number of executed rounds; 0 on a null handle.
 *
 * # Safety
 * `transcript` must be null or a live handle from `twq_run`.
 */
uint64_t twq_transcript_rounds(const struct TwqTranscript *transcript);

/**
 * Number of sifted key bits; 0 on a null handle.
 *
 * # Safety
 * `transcript` must be null or a live handle from `twq_run`.
 */
uint64_t twq_transcript_key_bits(const struct TwqTranscript *transcript);

/**
 * Writes the full round-by-round transcript file to `path`.
 *
 * # Safety
 * `transcript` must be a live handle from `twq_run`; `path` must be a
 * NUL-terminated string.
 */
int32_t twq_transcript_save(const struct TwqTranscript *transcript, const char *path);

/**
 * Writes the `key = value` summary block to `path`.
 *
 * # Safety
 * `transcript` must be a live handle from `twq_run`; `path` must be a
 * NUL-terminated string.
 */
int32_t twq_transcript_save_summary(const struct TwqTranscript *transcript, const char *path);

/**
 * Optimal estimation fidelity for `n` identically polarized photons.
 */
double twq_fidelity_bound(uint64_t n);

/**
 * The eavesdropper information bound at unit return-leg intensity.
 */
double twq_critical_info(void);

/**
 * Stores the critical mean photon number `1 / ((1 - eta) eta t)` in `out`.
 *
 * # Safety
 * `out` must point to writable memory for one double.
 */
int32_t twq_critical_mu(double eta, double t, double *out);

/**
 * Stores the overall eavesdropper information bound for a beam-splitting
 * attack at `(mu, eta, t)` in `out`, evaluated to series tolerance `tol`.
 *
 * # Safety
 * `out` must point to writable memory for one double.
 */
int32_t twq_eve_info(double mu, double eta, double t, double tol, double *out);

/**
 * Copies the current thread's last error message into `buf` (truncated to
 * `cap - 1` bytes, always NUL-terminated when `cap > 0`) and returns the
 * full message length in bytes. Returns 0 when no error is pending.
 *
 * # Safety
 * `buf` must be null or point to `cap` writable bytes.
 */
size_t twq_last_error(char *buf, size_t cap);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TWOWAY_QKD_H */
