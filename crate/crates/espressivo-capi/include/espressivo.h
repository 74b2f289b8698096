/* C interface to the espressivo expressive-performance renderer. */

#ifndef ESPRESSIVO_H
#define ESPRESSIVO_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible call.
 */
typedef enum EsprStatus {
  /**
   * Success.
   */
  ESPR_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  ESPR_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  ESPR_STATUS_INVALID_UTF8 = 2,
  /**
   * Input bytes or text failed to parse.
   */
  ESPR_STATUS_PARSE = 3,
  /**
   * A file could not be read.
   */
  ESPR_STATUS_IO = 4,
  /**
   * The requested expressive term is not in the model.
   */
  ESPR_STATUS_UNKNOWN_TERM = 5,
  /**
   * Inputs were structurally valid but unusable (bad lengths, ranges).
   */
  ESPR_STATUS_INVALID_ARGUMENT = 6,
} EsprStatus;

/**
 * Opaque mono 16 kHz audio buffer.
 */
typedef struct EsprAudio EsprAudio;

/**
 * Opaque fitted expression model.
 */
typedef struct EsprModel EsprModel;

/**
 * Opaque parsed score.
 */
typedef struct EsprScore EsprScore;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string; never freed by the caller.
 */
const char *espr_version(void);

/**
 * Message describing the most recent failure on this thread, or null if
 * none. The pointer stays valid until the next failing call on the same
 * thread; do not free it.
 */
const char *espr_last_error(void);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `s` must be a pointer previously returned by one of the `*_json`,
 * `*_name` or similar string-returning functions here, not yet freed.
 */
void espr_string_free(char *s);

/**
 * Release a byte buffer returned by this library.
 *
 * # Safety
 * `(ptr, len)` must be exactly the pair produced by a byte-returning
 * function here, not yet freed.
 */
void espr_bytes_free(uint8_t *ptr, size_t len);

/**
 * Parse a Standard MIDI File into a score handle.
 *
 * # Safety
 * `bytes` must point to `len` readable bytes; `out_score` must be a valid
 * destination pointer.
 */
enum EsprStatus espr_score_parse_midi(const uint8_t *bytes,
                                      size_t len,
                                      struct EsprScore **out_score);

/**
 * Parse a MusicXML document into a score handle.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string; `out_score` must be a
 * valid destination pointer.
 */
enum EsprStatus espr_score_parse_musicxml(const char *text, struct EsprScore **out_score);

/**
 * Parse the canonical JSON score document into a score handle.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string; `out_score` must be a
 * valid destination pointer.
 */
enum EsprStatus espr_score_from_json(const char *text, struct EsprScore **out_score);

/**
 * Serialize a score as its canonical JSON document. Returns null on
 * error; free the result with `espr_string_free`.
 *
 * # Safety
 * `score` must be a live score handle.
 */
char *espr_score_to_json(const struct EsprScore *score);

/**
 * Serialize a score as a format-0 Standard MIDI File.
 *
 * # Safety
 * `score` must be a live score handle; `out_bytes`/`out_len` must be
 * valid destination pointers. Free the buffer with `espr_bytes_free`.
 */
enum EsprStatus espr_score_to_midi(const struct EsprScore *score,
                                   uint8_t **out_bytes,
                                   size_t *out_len);

/**
 * Number of notes in a score; 0 for a null handle.
 *
 * # Safety
 * `score` must be null or a live score handle.
 */
size_t espr_score_note_count(const struct EsprScore *score);

/**
 * Release a score handle.
 *
 * # Safety
 * `score` must be null or a live score handle, not yet freed.
 */
void espr_score_free(struct EsprScore *score);

/**
 * Load an expression model from its JSON document bytes.
 *
 * # Safety
 * `bytes` must point to `len` readable bytes; `out_model` must be a valid
 * destination pointer.
 */
enum EsprStatus espr_model_load(const uint8_t *bytes, size_t len, struct EsprModel **out_model);

/**
 * Serialize a model as its JSON document.
 *
 * # Safety
 * `model` must be a live model handle; `out_bytes`/`out_len` must be
 * valid destination pointers. Free the buffer with `espr_bytes_free`.
 */
enum EsprStatus espr_model_save(const struct EsprModel *model,
                                uint8_t **out_bytes,
                                size_t *out_len);

/**
 * Fit a model from a corpus manifest on disk (entry paths resolve
 * against the manifest's directory).
 *
 * # Safety
 * `manifest_path` must be a valid NUL-terminated path string;
 * `out_model` must be a valid destination pointer.
 */
enum EsprStatus espr_model_fit_manifest(const char *manifest_path, struct EsprModel **out_model);

/**
 * Number of expressive terms in a model; 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live model handle.
 */
size_t espr_model_emt_count(const struct EsprModel *model);

/**
 * Name of the expressive term at `index` (lexical order), or null when
 * out of range. Free with `espr_string_free`.
 *
 * # Safety
 * `model` must be a live model handle.
 */
char *espr_model_emt_name(const struct EsprModel *model, size_t index);

/**
 * Release a model handle.
 *
 * # Safety
 * `model` must be null or a live model handle, not yet freed.
 */
void espr_model_free(struct EsprModel *model);

/**
 * Render a score under an expressive term. The seed fully determines the
 * output. `out_modified_score` and `out_params_json` may be null when the
 * rewritten score or the sampled controls are not wanted; the params JSON
 * carries the timing plan and the per-note controls.
 *
 * # Safety
 * `score` and `model` must be live handles, `emt` a valid NUL-terminated
 * string, `out_audio` a valid destination pointer, and the two optional
 * outputs null or valid destination pointers.
 */
enum EsprStatus espr_render(const struct EsprScore *score,
                            const struct EsprModel *model,
                            const char *emt,
                            uint64_t seed,
                            struct EsprAudio **out_audio,
                            struct EsprScore **out_modified_score,
                            char **out_params_json);

/**
 * Number of samples in a buffer; 0 for a null handle.
 *
 * # Safety
 * `audio` must be null or a live audio handle.
 */
size_t espr_audio_len(const struct EsprAudio *audio);

/**
 * Sample rate in Hz; 0 for a null handle.
 *
 * # Safety
 * `audio` must be null or a live audio handle.
 */
uint32_t espr_audio_sample_rate(const struct EsprAudio *audio);

/**
 * Borrowed view of the samples in [-1, 1]; valid while the handle lives.
 *
 * # Safety
 * `audio` must be a live audio handle; the pointer must not outlive it.
 */
const double *espr_audio_samples(const struct EsprAudio *audio);

/**
 * Encode a buffer as a 16-bit mono RIFF/WAVE file.
 *
 * # Safety
 * `audio` must be a live audio handle; `out_bytes`/`out_len` must be
 * valid destination pointers. Free the buffer with `espr_bytes_free`.
 */
enum EsprStatus espr_audio_to_wav(const struct EsprAudio *audio,
                                  uint8_t **out_bytes,
                                  size_t *out_len);

/**
 * Decode a RIFF/WAVE file (PCM 16-bit mono; other rates are resampled).
 *
 * # Safety
 * `bytes` must point to `len` readable bytes; `out_audio` must be a
 * valid destination pointer.
 */
enum EsprStatus espr_audio_from_wav(const uint8_t *bytes, size_t len, struct EsprAudio **out_audio);

/**
 * Release an audio handle.
 *
 * # Safety
 * `audio` must be null or a live audio handle, not yet freed.
 */
void espr_audio_free(struct EsprAudio *audio);

/**
 * Extract the feature document (versioned JSON) for a score-aligned
 * buffer. Returns null on error; free with `espr_string_free`.
 *
 * # Safety
 * `score` and `audio` must be live handles.
 */
char *espr_extract_features_json(const struct EsprScore *score, const struct EsprAudio *audio);

/**
 * Rank the model's expressive terms for a feature document. The
 * recording is min-max normalized before scoring. Returns a JSON array
 * of `{"emt", "log_likelihood"}` objects, best first, or null on error;
 * free with `espr_string_free`.
 *
 * # Safety
 * `features_json` must be a valid NUL-terminated string and `model` a
 * live model handle.
 */
char *espr_classify_json(const char *features_json, const struct EsprModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ESPRESSIVO_H */
