#ifndef TREEGROWTH_H
#define TREEGROWTH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes; the non-zero values match the command-line exit codes.
typedef enum TgStatus {
  TG_STATUS_OK = 0,
  TG_STATUS_DOMAIN = 1,
  TG_STATUS_PARSE = 2,
  TG_STATUS_BUDGET = 3,
  TG_STATUS_NULL_ARGUMENT = 4,
  TG_STATUS_BUFFER_TOO_SMALL = 5,
  TG_STATUS_PANIC = 6,
} TgStatus;

// An opaque group handle.
typedef struct TgGroup TgGroup;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Parses a JSON configuration and builds a validated group.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum TgStatus tg_group_from_config_json(const char *json, struct TgGroup **out);

// Releases a handle. Null is ignored.
//
// # Safety
// `group` must come from [`tg_group_from_config_json`] and not be used again.
void tg_group_free(struct TgGroup *group);

// Validates a configuration without keeping the group. On failure the
// last error names the failing checks.
//
// # Safety
// `json` must be a NUL-terminated string.
enum TgStatus tg_validate_config_json(const char *json);

// Tree degree and number of distinct level classes.
//
// # Safety
// All pointers must be valid.
enum TgStatus tg_group_shape(const struct TgGroup *group, size_t *degree, size_t *levels);

// Writes `|Ω(0)|, …, |Ω(max_radius)|` at a level class. `written` receives
// the number of values, also when the buffer is too small.
//
// # Safety
// `out` must have room for `out_len` values; `written` must be valid.
enum TgStatus tg_sphere_sizes(const struct TgGroup *group,
                              size_t level,
                              uint32_t max_radius,
                              uint64_t *out,
                              size_t out_len,
                              size_t *written);

// Writes `|I_k ∩ Ω(n)|` for `n = 0..=max_radius` at a level class.
//
// # Safety
// As for [`tg_sphere_sizes`].
enum TgStatus tg_incompressible_counts(const struct TgGroup *group,
                                       size_t level,
                                       uint32_t max_radius,
                                       uint32_t k,
                                       uint64_t *out,
                                       size_t out_len,
                                       size_t *written);

// The message of the last failing call on this thread, or null. The
// pointer stays valid until the next failing call on this thread.
const char *tg_last_error(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TREEGROWTH_H */
