#ifndef SOFTBODY_H
#define SOFTBODY_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum SoftbodyStatus {
  SOFTBODY_STATUS_OK = 0,
  SOFTBODY_STATUS_NULL_ARGUMENT = 1,
  SOFTBODY_STATUS_INVALID_UTF8 = 2,
  SOFTBODY_STATUS_BUFFER_TOO_SMALL = 3,
  SOFTBODY_STATUS_OUT_OF_RANGE = 4,
  SOFTBODY_STATUS_UNKNOWN_SCENARIO = 5,
  SOFTBODY_STATUS_UNKNOWN_INTEGRATOR = 6,
  SOFTBODY_STATUS_UNKNOWN_PARAM = 7,
  SOFTBODY_STATUS_INVALID_PARAMS = 8,
  SOFTBODY_STATUS_INVALID_SPEC = 9,
  SOFTBODY_STATUS_INVALID_BODY = 10,
  SOFTBODY_STATUS_CORRUPT_SNAPSHOT = 11,
  SOFTBODY_STATUS_NON_FINITE_STATE = 12,
  SOFTBODY_STATUS_NO_DRAG = 13,
  SOFTBODY_STATUS_IO = 14,
  /**
   * Any other engine error; the message carries its code.
   */
  SOFTBODY_STATUS_ENGINE = 15,
  SOFTBODY_STATUS_PANIC = 16,
} SoftbodyStatus;

/**
 * Which per-particle vector [`softbody_session_copy`] reads.
 */
typedef enum SoftbodyField {
  SOFTBODY_FIELD_POSITION = 0,
  SOFTBODY_FIELD_VELOCITY = 1,
} SoftbodyField;

/**
 * Opaque simulation handle.
 */
typedef struct SoftbodySession SoftbodySession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or NULL if none.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *softbody_last_error(void);

/**
 * Builds a session from a built-in scenario name or a scenario JSON file path.
 *
 * # Safety
 * `scenario` must be a NUL-terminated string; `out` must be writable.
 */
enum SoftbodyStatus softbody_session_new(const char *scenario, struct SoftbodySession **out);

/**
 * Rebuilds a session from a snapshot produced by [`softbody_session_snapshot`].
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum SoftbodyStatus softbody_session_restore(const char *json, struct SoftbodySession **out);

/**
 * Releases a session. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and must not be used afterwards.
 */
void softbody_session_free(struct SoftbodySession *s);

/**
 * Advances `n` fixed steps. On failure the session holds the last good state
 * and the clock tells how many steps completed.
 *
 * # Safety
 * `s` must be a live session handle.
 */
enum SoftbodyStatus softbody_session_step(struct SoftbodySession *s, uint64_t n);

/**
 * Sets a named parameter, e.g. `dt`, `ks.structural`, `gravity.y`.
 *
 * # Safety
 * `s` must be a live session handle; `name` a NUL-terminated string.
 */
enum SoftbodyStatus softbody_session_set_param(struct SoftbodySession *s,
                                               const char *name,
                                               double value);

/**
 * Reads a named parameter.
 *
 * # Safety
 * `s` must be a live session handle; `name` a NUL-terminated string; `value` writable.
 */
enum SoftbodyStatus softbody_session_get_param(struct SoftbodySession *s,
                                               const char *name,
                                               double *value);

/**
 * Selects `euler`, `midpoint`, `feynman` or `rk4`.
 *
 * # Safety
 * `s` must be a live session handle; `id` a NUL-terminated string.
 */
enum SoftbodyStatus softbody_session_set_integrator(struct SoftbodySession *s, const char *id);

/**
 * Current step count and simulated time. Either output may be NULL.
 *
 * # Safety
 * `s` must be a live session handle; non-NULL outputs must be writable.
 */
enum SoftbodyStatus softbody_session_clock(struct SoftbodySession *s, uint64_t *step, double *t);

/**
 * Number of bodies in the session.
 *
 * # Safety
 * `s` must be a live session handle; `count` writable.
 */
enum SoftbodyStatus softbody_session_body_count(struct SoftbodySession *s, size_t *count);

/**
 * Number of particles in body `body`.
 *
 * # Safety
 * `s` must be a live session handle; `count` writable.
 */
enum SoftbodyStatus softbody_session_particle_count(struct SoftbodySession *s,
                                                    size_t body,
                                                    size_t *count);

/**
 * Copies one vector per particle of body `body` into `buf` as x,y,z triples.
 * `len` is the capacity of `buf` in doubles and must be at least three times
 * the particle count.
 *
 * # Safety
 * `s` must be a live session handle; `buf` must point to `len` writable doubles.
 */
enum SoftbodyStatus softbody_session_copy(struct SoftbodySession *s,
                                          size_t body,
                                          enum SoftbodyField field,
                                          double *buf,
                                          size_t len);

/**
 * Grabs the enabled particle nearest to (x, y, z). Either output may be NULL.
 *
 * # Safety
 * `s` must be a live session handle; non-NULL outputs must be writable.
 */
enum SoftbodyStatus softbody_session_drag_start(struct SoftbodySession *s,
                                                double x,
                                                double y,
                                                double z,
                                                size_t *body,
                                                size_t *particle);

/**
 * Moves the anchor of the drag started with [`softbody_session_drag_start`].
 *
 * # Safety
 * `s` must be a live session handle.
 */
enum SoftbodyStatus softbody_session_drag_move(struct SoftbodySession *s,
                                               double x,
                                               double y,
                                               double z);

/**
 * Releases the interactive drag, if any.
 *
 * # Safety
 * `s` must be a live session handle.
 */
enum SoftbodyStatus softbody_session_drag_end(struct SoftbodySession *s);

/**
 * Serializes the full session state as JSON into a new string owned by the
 * caller; release it with [`softbody_string_free`].
 *
 * # Safety
 * `s` must be a live session handle; `json` writable.
 */
enum SoftbodyStatus softbody_session_snapshot(struct SoftbodySession *s, char **json);

/**
 * Lists every parameter with its current value as a JSON array of
 * `{"name", "value"}` objects; release it with [`softbody_string_free`].
 *
 * # Safety
 * `s` must be a live session handle; `json` writable.
 */
enum SoftbodyStatus softbody_session_params(struct SoftbodySession *s, char **json);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `p` must come from this library and must not be used afterwards.
 */
void softbody_string_free(char *p);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SOFTBODY_H */
