#ifndef EHUB_H
#define EHUB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum EhubStatus {
  EHUB_STATUS_OK = 0,
  EHUB_STATUS_NULL_POINTER = 1,
  EHUB_STATUS_INVALID_UTF8 = 2,
  EHUB_STATUS_INVALID_ARGUMENT = 3,
  EHUB_STATUS_PARSE_ERROR = 4,
  EHUB_STATUS_VALIDATION_ERROR = 5,
  EHUB_STATUS_UNKNOWN_EDGE = 6,
  EHUB_STATUS_NO_ROUTE = 7,
  EHUB_STATUS_SYNTAX_ERROR = 8,
  EHUB_STATUS_UNKNOWN_RELATION = 9,
  EHUB_STATUS_NOT_READ_ONLY = 10,
  EHUB_STATUS_NO_DATA_YET = 11,
  EHUB_STATUS_STORE_ERROR = 12,
  EHUB_STATUS_IO_ERROR = 13,
  EHUB_STATUS_PANIC = 99,
} EhubStatus;

/**
 * ROUGE variant selector.
 */
typedef enum EhubRouge {
  EHUB_ROUGE_ONE = 1,
  EHUB_ROUGE_TWO = 2,
  EHUB_ROUGE_L = 3,
} EhubRouge;

/**
 * Embedded datastore.
 */
typedef struct EhubDatastore EhubDatastore;

/**
 * Road network.
 */
typedef struct EhubNetwork EhubNetwork;

/**
 * Network plus station fleet and energy model, ready to answer routes.
 */
typedef struct EhubRouter EhubRouter;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *ehub_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ehub_version(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void ehub_string_free(char *s);

/**
 * Writes a `rows × cols` synthetic grid in the JSON-lines network format.
 *
 * # Safety
 * `out_jsonl` must be a valid pointer.
 */
enum EhubStatus ehub_grid_generate(size_t rows, size_t cols, uint64_t seed, char **out_jsonl);

/**
 * Parses a JSON-lines network.
 *
 * # Safety
 * `jsonl` must be a NUL-terminated string, `out` a valid pointer.
 */
enum EhubStatus ehub_network_from_jsonl(const char *jsonl, struct EhubNetwork **out);

/**
 * # Safety
 * `network` must be NULL or a handle from this library.
 */
void ehub_network_free(struct EhubNetwork *network);

/**
 * # Safety
 * `network` must be a valid handle, `out` a valid pointer.
 */
enum EhubStatus ehub_network_edge_count(const struct EhubNetwork *network, size_t *out);

/**
 * Builds a router over a copy of `network`. `stations_json` is a JSON array
 * of stations; `traffic_json` is NULL for free flow or a JSON array of edge
 * traffic records.
 *
 * # Safety
 * Pointers must be valid; string arguments NUL-terminated.
 */
enum EhubStatus ehub_router_new(const struct EhubNetwork *network,
                                const char *stations_json,
                                const char *traffic_json,
                                struct EhubRouter **out);

/**
 * # Safety
 * `router` must be NULL or a handle from this library.
 */
void ehub_router_free(struct EhubRouter *router);

/**
 * Solves a route request (JSON) and writes the plan as JSON.
 *
 * # Safety
 * Pointers must be valid; `request_json` NUL-terminated.
 */
enum EhubStatus ehub_router_solve(const struct EhubRouter *router,
                                  const char *request_json,
                                  char **out_plan_json);

/**
 * Opens an in-memory datastore with the schema created.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum EhubStatus ehub_datastore_new(struct EhubDatastore **out);

/**
 * # Safety
 * `store` must be NULL or a handle from this library.
 */
void ehub_datastore_free(struct EhubDatastore *store);

/**
 * Loads `online_demo.jsonl`, `stations.jsonl` and `user_paths.jsonl` from
 * `dir` where present.
 *
 * # Safety
 * `store` must be a valid handle, `dir` NUL-terminated.
 */
enum EhubStatus ehub_datastore_seed_dir(const struct EhubDatastore *store, const char *dir);

/**
 * Runs one read-only SELECT and writes `{"columns": [...], "rows": [[...]]}`.
 *
 * # Safety
 * Pointers must be valid; `sql` NUL-terminated.
 */
enum EhubStatus ehub_datastore_query(const struct EhubDatastore *store,
                                     const char *sql,
                                     char **out_json);

/**
 * Hex SHA-256 over all table contents.
 *
 * # Safety
 * Pointers must be valid.
 */
enum EhubStatus ehub_datastore_checksum(const struct EhubDatastore *store, char **out_hex);

/**
 * BLEU over orders `1..=n` of two SQL strings.
 *
 * # Safety
 * String arguments NUL-terminated, `out` valid.
 */
enum EhubStatus ehub_metric_bleu(const char *pred, const char *gold, uint32_t n, double *out);

/**
 * ROUGE-1, ROUGE-2 or ROUGE-L F1 of two SQL strings.
 *
 * # Safety
 * String arguments NUL-terminated, `out` valid.
 */
enum EhubStatus ehub_metric_rouge(const char *pred,
                                  const char *gold,
                                  enum EhubRouge variant,
                                  double *out);

/**
 * Clause-level component-match F1.
 *
 * # Safety
 * String arguments NUL-terminated, `out` valid.
 */
enum EhubStatus ehub_metric_component_f1(const char *pred, const char *gold, double *out);

/**
 * Whether `pred` returns the same result as `gold` on `store`.
 *
 * # Safety
 * Pointers must be valid; strings NUL-terminated.
 */
enum EhubStatus ehub_metric_execution_match(const struct EhubDatastore *store,
                                            const char *pred,
                                            const char *gold,
                                            bool *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EHUB_H */
