#ifndef SIGNAL_LAB_H
#define SIGNAL_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SlStatus {
  SL_STATUS_OK = 0,
  SL_STATUS_NULL_POINTER = 1,
  SL_STATUS_INVALID_UTF8 = 2,
  SL_STATUS_IO = 3,
  SL_STATUS_SCENARIO = 4,
  SL_STATUS_INVALID_INPUT = 5,
  SL_STATUS_UNKNOWN_CONTROLLER = 6,
  SL_STATUS_CHECKPOINT = 7,
  SL_STATUS_INTERNAL = 8,
  SL_STATUS_PANIC = 9,
} SlStatus;

/**
 * A learned controller and its network weights.
 */
typedef struct SlModel SlModel;

/**
 * A parsed scenario with its road network.
 */
typedef struct SlScenario SlScenario;

/**
 * Summary of one (controller, seed, noise) cell.
 */
typedef struct SlCell {
  uint64_t episodes;
  double att_mean;
  double att_std;
  double throughput_mean;
  double stops_mean;
} SlCell;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (always NUL
 * terminated when `len > 0`) and returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t sl_last_error(char *buf, size_t len);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SlStatus sl_scenario_load(const char *path, struct SlScenario **out);

/**
 * # Safety
 * `sc` must come from [`sl_scenario_load`] and not be used afterwards.
 */
void sl_scenario_free(struct SlScenario *sc);

/**
 * Episode length in seconds, 0 for a null handle.
 *
 * # Safety
 * `sc` must be null or a live scenario handle.
 */
uint32_t sl_scenario_episode_length(const struct SlScenario *sc);

/**
 * Runs one cell: learned controllers train for `rounds`, rule-based ones
 * run a single episode.
 *
 * # Safety
 * Pointers must be valid; strings NUL-terminated.
 */
enum SlStatus sl_run_cell(const struct SlScenario *sc,
                          const char *controller,
                          uint64_t seed,
                          const char *noise_kind,
                          double noise_scale,
                          size_t rounds,
                          struct SlCell *out);

/**
 * Trains a learned controller (`fuzzylight` or `fuzzy_cycle`).
 *
 * # Safety
 * Pointers must be valid; strings NUL-terminated.
 */
enum SlStatus sl_model_train(const struct SlScenario *sc,
                             const char *controller,
                             uint64_t seed,
                             const char *noise_kind,
                             double noise_scale,
                             size_t rounds,
                             struct SlModel **out);

/**
 * Frozen evaluation of `model` over `count` episodes of `sc`.
 *
 * # Safety
 * Pointers must be valid; strings NUL-terminated.
 */
enum SlStatus sl_model_evaluate(struct SlModel *model,
                                const struct SlScenario *sc,
                                uint64_t seed,
                                const char *noise_kind,
                                double noise_scale,
                                size_t count,
                                struct SlCell *out);

/**
 * # Safety
 * `model` must be a live handle and `path` NUL-terminated.
 */
enum SlStatus sl_model_save(const struct SlModel *model, const char *path);

/**
 * Loads weights saved by [`sl_model_save`] into `model`.
 *
 * # Safety
 * `model` must be a live handle and `path` NUL-terminated.
 */
enum SlStatus sl_model_load_weights(struct SlModel *model, const char *path);

/**
 * # Safety
 * `model` must come from [`sl_model_train`] and not be used afterwards.
 */
void sl_model_free(struct SlModel *model);

/**
 * Green seconds for actor output `h`, reference `refer` and exploration
 * offset `eps`, clipped to `[low, high]`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum SlStatus sl_defuzzify_duration(double h,
                                    double refer,
                                    double eps,
                                    uint32_t low,
                                    uint32_t high,
                                    uint32_t *out);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum SlStatus sl_throughput_rate(uint32_t xi, uint32_t xj, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SIGNAL_LAB_H */
