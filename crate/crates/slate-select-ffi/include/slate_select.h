/* C interface for the slate-select library.
 *
 * Select small representative opinion slates from binary approval matrices,
 * check them for justified representation, and score them.
 *
 * Every fallible function returns a SlateStatus. On any non-OK status,
 * slate_last_error() returns a human-readable message that stays valid until
 * the next failing call on the same thread.
 *
 * This header is maintained by hand and kept in sync with the Rust exports
 * by the library's test suite.
 */

#ifndef SLATE_SELECT_H
#define SLATE_SELECT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum SlateStatus {
  SLATE_STATUS_OK = 0,
  SLATE_STATUS_NULL_ARGUMENT = 1,
  SLATE_STATUS_INVALID_UTF8 = 2,
  SLATE_STATUS_PARSE_ERROR = 3,
  SLATE_STATUS_INVALID_ARGUMENT = 4,
  SLATE_STATUS_RUNTIME_ERROR = 5,
  SLATE_STATUS_BUFFER_TOO_SMALL = 6,
} SlateStatus;

/* Opaque handle over a loaded instance. */
typedef struct SlateInstance SlateInstance;

/* Metric values for one slate. median_u and consensus are NaN when the
 * instance carries no group partition. */
typedef struct SlateMetrics {
  double u_all;
  double median_u;
  double consensus;
  double coverage_gap;
  double redundancy;
  double redundancy_epsilon;
} SlateMetrics;

/* Library version as a static string. */
const char *slate_version(void);

/* Message from the most recent failing call on this thread, or NULL when the
 * last call succeeded. */
const char *slate_last_error(void);

/* Parses an instance from canonical JSON. On success writes a handle that
 * must be released with slate_instance_free. */
SlateStatus slate_instance_from_json(const char *json,
                                     SlateInstance **out_instance);

/* Builds an instance from a dense row-major 0/1 cell buffer of length
 * n_users * n_opinions. Cells other than 0 and 1 are rejected. */
SlateStatus slate_instance_from_dense(size_t n_users,
                                      size_t n_opinions,
                                      const uint8_t *cells,
                                      size_t k_default,
                                      SlateInstance **out_instance);

/* Releases an instance handle. NULL is ignored. */
void slate_instance_free(SlateInstance *instance);

/* Number of users, or 0 for a NULL handle. */
size_t slate_instance_users(const SlateInstance *instance);

/* Number of candidate opinions, or 0 for a NULL handle. */
size_t slate_instance_opinions(const SlateInstance *instance);

/* Runs a selection rule ("random", "engagement", "bridging", "diversity",
 * "jr", "bjr", "diverse-bjr") and writes the selected opinion indices into
 * out_opinions. On entry *out_len is the buffer capacity; on exit it is the
 * slate length. When the buffer is too small the required length is still
 * written and SLATE_STATUS_BUFFER_TOO_SMALL is returned. epsilon is the
 * neighborhood radius used by the diversity-aware rules; trials is the
 * feasibility-probe trial count used by the assignment-based rules. */
SlateStatus slate_select_opinions(const SlateInstance *instance,
                                  const char *rule,
                                  size_t k,
                                  uint64_t seed,
                                  double epsilon,
                                  uint32_t trials,
                                  size_t *out_opinions,
                                  size_t *out_len);

/* Scores a slate of n_opinions opinion indices. epsilon is the neighborhood
 * radius used by the redundancy metric. */
SlateStatus slate_compute_metrics(const SlateInstance *instance,
                                  const size_t *opinions,
                                  size_t n_opinions,
                                  double epsilon,
                                  SlateMetrics *out_metrics);

/* Checks a slate for justified representation: writes 1 when no cohesive
 * opinion group large enough to deserve a seat is left entirely
 * unrepresented, else 0. */
SlateStatus slate_check_jr(const SlateInstance *instance,
                           const size_t *opinions,
                           size_t n_opinions,
                           int *out_satisfied);

#ifdef __cplusplus
}
#endif

#endif /* SLATE_SELECT_H */
