#ifndef ABSYNTH_H
#define ABSYNTH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AbsStatus {
  ABS_STATUS_OK = 0,
  ABS_STATUS_NULL_ARGUMENT = 1,
  ABS_STATUS_INVALID_UTF8 = 2,
  ABS_STATUS_INVALID_ARGUMENT = 3,
  ABS_STATUS_MISSING_FILE = 4,
  ABS_STATUS_PARSE = 5,
  ABS_STATUS_SCHEMA_MISMATCH = 6,
  ABS_STATUS_REJECTED = 7,
  ABS_STATUS_IO = 8,
  ABS_STATUS_PANIC = 9,
} AbsStatus;

typedef enum AbsNumericScore {
  ABS_NUMERIC_SCORE_CORRECT = 0,
  ABS_NUMERIC_SCORE_INCORRECT = 1,
  ABS_NUMERIC_SCORE_UNPARSABLE = 2,
} AbsNumericScore;

/**
 * Opaque handle to a loaded or generated manifest.
 */
typedef struct AbsManifest AbsManifest;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *absynth_last_error(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, freed at most once.
 */
void absynth_string_free(char *s);

/**
 * Loads a manifest file written by `absynth gen`.
 *
 * # Safety
 * `path` must be a valid C string and `out` a writable pointer.
 */
enum AbsStatus absynth_manifest_load(const char *path, struct AbsManifest **out);

/**
 * Parses manifest JSON lines held in memory.
 *
 * # Safety
 * `jsonl` must be a valid C string and `out` a writable pointer.
 */
enum AbsStatus absynth_manifest_parse(const char *jsonl, struct AbsManifest **out);

/**
 * # Safety
 * `manifest` must be null or a handle from this library, freed at most once.
 */
void absynth_manifest_free(struct AbsManifest *manifest);

/**
 * Number of records; 0 for a null handle.
 *
 * # Safety
 * `manifest` must be null or a live handle.
 */
size_t absynth_manifest_len(const struct AbsManifest *manifest);

/**
 * JSON for record `index`; free the result with [`absynth_string_free`].
 *
 * # Safety
 * `manifest` must be a live handle and `out` a writable pointer.
 */
enum AbsStatus absynth_manifest_record_json(const struct AbsManifest *manifest,
                                            size_t index,
                                            char **out);

/**
 * Whole manifest as JSON lines; free the result with [`absynth_string_free`].
 *
 * # Safety
 * `manifest` must be a live handle and `out` a writable pointer.
 */
enum AbsStatus absynth_manifest_to_jsonl(const struct AbsManifest *manifest, char **out);

/**
 * Generates `count` gated images of one scenario in memory.
 *
 * # Safety
 * `scenario` must be a valid C string and `out` a writable pointer.
 */
enum AbsStatus absynth_generate(const char *scenario_name,
                                size_t count,
                                uint64_t seed,
                                struct AbsManifest **out);

/**
 * SVG for candidate image `index` of a scenario, as `absynth gen` would
 * draw it for the same seed.
 *
 * # Safety
 * `scenario` must be a valid C string and `out` a writable pointer.
 */
enum AbsStatus absynth_render_svg(const char *scenario_name,
                                  uint64_t seed,
                                  size_t index,
                                  char **out);

/**
 * Scores a free-text numeric answer against gold values, with the 5%
 * tolerance when `tolerant` is true.
 *
 * # Safety
 * `pred` and each of the `gold_len` strings in `gold` must be valid C strings.
 */
enum AbsStatus absynth_score_numeric(const char *pred,
                                     const char *const *gold,
                                     size_t gold_len,
                                     bool tolerant,
                                     enum AbsNumericScore *out);

/**
 * # Safety
 * As [`absynth_score_numeric`].
 */
enum AbsStatus absynth_score_phrase(const char *pred,
                                    const char *const *gold,
                                    size_t gold_len,
                                    bool *out);

/**
 * Rouge-L F1 between two sentences.
 *
 * # Safety
 * `pred` and `gold` must be valid C strings; `out` writable.
 */
enum AbsStatus absynth_score_sentence(const char *pred, const char *gold, double *out);

/**
 * Landmark coverage rate of a free-text route against the gold sequence.
 *
 * # Safety
 * As [`absynth_score_numeric`].
 */
enum AbsStatus absynth_score_landmarks(const char *pred,
                                       const char *const *gold,
                                       size_t gold_len,
                                       bool greedy,
                                       double *out);

/**
 * Scores prediction JSON lines (`{"id", "raw_response"}`) against a
 * manifest and returns the report as JSON.
 *
 * # Safety
 * `manifest` must be a live handle, `predictions_jsonl` a valid C string and
 * `out` writable.
 */
enum AbsStatus absynth_evaluate(const struct AbsManifest *manifest,
                                const char *predictions_jsonl,
                                char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ABSYNTH_H */
