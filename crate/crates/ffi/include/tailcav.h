#ifndef TAILCAV_H
#define TAILCAV_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a library call.
 */
typedef enum TcStatus {
  TC_STATUS_OK = 0,
  TC_STATUS_NULL_POINTER = 1,
  TC_STATUS_INVALID_UTF8 = 2,
  /**
   * The game spec failed validation.
   */
  TC_STATUS_INVALID_SPEC = 3,
  /**
   * The payoff family has no value oracle.
   */
  TC_STATUS_NO_ORACLE = 4,
  /**
   * A belief, grid, descriptor or parameter was rejected.
   */
  TC_STATUS_INVALID_ARGUMENT = 5,
  /**
   * The output buffer is too small.
   */
  TC_STATUS_BUFFER_TOO_SMALL = 6,
  TC_STATUS_INTERNAL = 7,
  TC_STATUS_PANIC = 8,
} TcStatus;

/**
 * A sampled concave envelope.
 */
typedef struct TcEnvelope TcEnvelope;

/**
 * A game spec with its payoff.
 */
typedef struct TcGame TcGame;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until
 * the next failing call on the same thread.
 */
const char *tc_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *tc_version(void);

/**
 * Parses a game file (spec plus `payoff` object) from JSON.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum TcStatus tc_game_from_json(const char *json, struct TcGame **out);

/**
 * # Safety
 * `game` must come from [`tc_game_from_json`] and not be freed twice.
 */
void tc_game_free(struct TcGame *game);

/**
 * # Safety
 * `game` must be a live handle; `out` must be writable.
 */
enum TcStatus tc_game_num_states(const struct TcGame *game, size_t *out);

/**
 * Value `u(p)` of the non-revealing game; `p` has `len` coordinates.
 *
 * # Safety
 * `game` must be a live handle, `p` must point to `len` doubles and `out`
 * must be writable.
 */
enum TcStatus tc_nr_value(const struct TcGame *game, const double *p, size_t len, double *out);

/**
 * Envelope of `u` sampled on a grid of spacing `mesh` plus the kinks of
 * `u`.
 *
 * # Safety
 * `game` must be a live handle; `out` must be writable.
 */
enum TcStatus tc_envelope_from_game(const struct TcGame *game,
                                    double mesh,
                                    struct TcEnvelope **out);

/**
 * Envelope of `n` samples; `points` is `n × k` row-major.
 *
 * # Safety
 * `points` must hold `n·k` doubles, `values` `n` doubles; `out` must be
 * writable.
 */
enum TcStatus tc_envelope_from_samples(const double *points,
                                       const double *values,
                                       size_t n,
                                       size_t k,
                                       struct TcEnvelope **out);

/**
 * # Safety
 * `env` must be a live handle, `p` must point to `len` doubles and `out`
 * must be writable.
 */
enum TcStatus tc_envelope_eval(const struct TcEnvelope *env,
                               const double *p,
                               size_t len,
                               double *out);

/**
 * Decomposition of `p` achieving the envelope value. Writes up to
 * `capacity` points (each `len` doubles, row-major, into `points`) and
 * their weights; `count` receives the number of points, also when the
 * buffers are too small.
 *
 * # Safety
 * `points` must hold `capacity·len` doubles and `weights` `capacity`
 * doubles; `env`, `p` and `count` as in [`tc_envelope_eval`].
 */
enum TcStatus tc_envelope_split(const struct TcEnvelope *env,
                                const double *p,
                                size_t len,
                                double *points,
                                double *weights,
                                size_t capacity,
                                size_t *count);

/**
 * # Safety
 * `env` must come from an envelope constructor and not be freed twice.
 */
void tc_envelope_free(struct TcEnvelope *env);

/**
 * `(cav u)(p)` for the game, sampled at spacing `mesh`.
 *
 * # Safety
 * As [`tc_nr_value`].
 */
enum TcStatus tc_cav_value(const struct TcGame *game,
                           const double *p,
                           size_t len,
                           double mesh,
                           double *out);

/**
 * Value of the `rows × cols` matrix game `entries` (row-major, row player
 * maximizes). `row_strategy` and `col_strategy` may be null.
 *
 * # Safety
 * `entries` must hold `rows·cols` doubles; non-null strategy buffers must
 * hold `rows` and `cols` doubles.
 */
enum TcStatus tc_matrix_value(const double *entries,
                              size_t rows,
                              size_t cols,
                              double *value,
                              double *row_strategy,
                              double *col_strategy);

/**
 * Non-revealing value of the `ℓ`/`r` example at `p = P(k1)`; NaN outside
 * `[0, 1]`.
 */
double tc_u_example1(double p);

/**
 * Monte Carlo estimate for a strategy pair given as JSON descriptors.
 * `options` is a JSON object with the simulation config fields plus
 * `mesh` and `epsilon`; null means defaults. The summary JSON is written
 * to `out` and must be released with [`tc_string_free`].
 *
 * # Safety
 * `game` must be a live handle, string arguments NUL-terminated (or null
 * for `options`), `out` writable.
 */
enum TcStatus tc_simulate(const struct TcGame *game,
                          const char *sigma,
                          const char *tau,
                          const char *options,
                          char **out);

/**
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void tc_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TAILCAV_H */
