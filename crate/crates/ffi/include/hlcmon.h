/* C interface to the hlcmon simulator and runtime monitor. */

#ifndef HLCMON_H
#define HLCMON_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes for fallible entry points.
 */
typedef enum HmStatus {
  HM_STATUS_OK = 0,
  HM_STATUS_INVALID_ARGUMENT = 1,
  HM_STATUS_IO = 2,
  HM_STATUS_PARSE = 3,
  HM_STATUS_SIMULATION = 4,
  HM_STATUS_MONITOR = 5,
  HM_STATUS_ORACLE = 6,
  HM_STATUS_PANICKED = 7,
} HmStatus;

/**
 * An instrumentation trace held as its report stream.
 */
typedef struct HmTrace HmTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static string.
 */
const char *hm_version(void);

/**
 * Message for the most recent failure on this thread. Valid until the next
 * failing call from the same thread.
 */
const char *hm_last_error_message(void);

/**
 * Simulate a scenario described by key=value text (the scenario file
 * format) and capture its report stream. Null on failure.
 *
 * # Safety
 * `config_text` must be a valid nul-terminated string or null.
 */
struct HmTrace *hm_trace_from_scenario(const char *config_text);

/**
 * Load a JSONL trace file. Null on failure.
 *
 * # Safety
 * `path` must be a valid nul-terminated string or null.
 */
struct HmTrace *hm_trace_load(const char *path);

/**
 * Write the trace as JSONL.
 *
 * # Safety
 * `trace` must come from this library and be live; `path` must be a valid
 * nul-terminated string.
 */
enum HmStatus hm_trace_save(const struct HmTrace *trace, const char *path);

/**
 * Number of report records in the trace.
 *
 * # Safety
 * `trace` must come from this library and be live, or null.
 */
uint64_t hm_trace_report_count(const struct HmTrace *trace);

/**
 * Release a trace handle. Null is ignored.
 *
 * # Safety
 * `trace` must come from this library and not be used afterwards.
 */
void hm_trace_free(struct HmTrace *trace);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void hm_string_free(char *s);

/**
 * HLC update for a local or send event at physical tick `pt`.
 *
 * # Safety
 * `out_l` and `out_c` must be valid writable pointers or null.
 */
enum HmStatus hm_hlc_advance_local(uint64_t l,
                                   uint32_t c,
                                   uint64_t pt,
                                   uint64_t *out_l,
                                   uint32_t *out_c);

/**
 * HLC update for a receive event carrying timestamp (msg_l, msg_c).
 *
 * # Safety
 * `out_l` and `out_c` must be valid writable pointers or null.
 */
enum HmStatus hm_hlc_advance_receive(uint64_t l,
                                     uint32_t c,
                                     uint64_t msg_l,
                                     uint32_t msg_c,
                                     uint64_t pt,
                                     uint64_t *out_l,
                                     uint32_t *out_c);

/**
 * Strict lexicographic HLC order: true iff (a_l, a_c) < (b_l, b_c).
 */
bool hm_hlc_less(uint64_t a_l, uint32_t a_c, uint64_t b_l, uint32_t b_c);

/**
 * Monitor a trace window by window. On success, `*out_json` receives a JSON
 * array of per-window reports (verdict, witness, timings); release it with
 * `hm_string_free`.
 *
 * `predicate` uses the CLI syntax (`conj`, `exactly:K`, `atleast:K`,
 * `sumeq:K`, `sumgeq:K`, `pairwise`, `cnf:PATH`). `solver_command` may be
 * null to use the default resolution (HLCMON_SOLVER, z3, bundled solver);
 * `overlap` and `period` of zero select the defaults.
 *
 * # Safety
 * `trace` must come from this library and be live; string arguments must be
 * valid nul-terminated strings (or null where documented); `out_json` must
 * be a valid pointer.
 */
enum HmStatus hm_monitor(const struct HmTrace *trace,
                         uint64_t epsilon,
                         const char *predicate,
                         uint64_t period,
                         uint64_t overlap,
                         bool combine,
                         const char *solver_command,
                         uint64_t timeout_secs,
                         char **out_json);

/**
 * Brute-force search for a valid snapshot on a small trace (at most 4
 * processes and a 40-tick horizon; the search is exhaustive). On success,
 * `*out_json` receives the witness in snapshot JSON form, or `null` when no
 * valid snapshot exists; release it with `hm_string_free`.
 *
 * # Safety
 * As for `hm_monitor`.
 */
enum HmStatus hm_oracle(const struct HmTrace *trace,
                        uint64_t epsilon,
                        const char *predicate,
                        char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HLCMON_H */
