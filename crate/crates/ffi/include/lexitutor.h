#ifndef LEXITUTOR_H
#define LEXITUTOR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/*
 Result code of every fallible call.
 */
typedef enum LtStatus {
  LT_STATUS_OK = 0,
  LT_STATUS_NULL_ARGUMENT = 1,
  LT_STATUS_INVALID_UTF8 = 2,
  LT_STATUS_NOT_FOUND = 3,
  LT_STATUS_INVALID_LEVEL = 4,
  LT_STATUS_INVALID_CONFIG = 5,
  LT_STATUS_EMPTY_SEED = 6,
  LT_STATUS_FORMAT_ERROR = 7,
  LT_STATUS_CORRUPT_CHECKPOINT = 8,
  LT_STATUS_IO_ERROR = 9,
  LT_STATUS_SHAPE_ERROR = 10,
  LT_STATUS_BUFFER_TOO_SMALL = 11,
  LT_STATUS_INTERNAL = 12,
} LtStatus;

typedef enum LtStrategy {
  LT_STRATEGY_GREEDY = 0,
  LT_STRATEGY_SAMPLE = 1,
} LtStrategy;

/*
 A loaded, immutable model. Safe to share between threads for reading.
 */
typedef struct LtModel LtModel;

/*
 Options for [`lt_generate`]. Start from [`lt_generate_options_default`].
 */
typedef struct LtGenerateOptions {
  uint32_t num_words;
  /*
   One of the `LtStrategy` values.
   */
  uint32_t strategy;
  /*
   Sampling temperature, > 0.
   */
  double temperature;
  /*
   When false, sampling seeds from OS entropy.
   */
  bool has_rng_seed;
  uint64_t rng_seed;
} LtGenerateOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *lt_version(void);

/*
 Message of the last failed call on this thread, or NULL. Valid until the
 next call into this library on the same thread.
 */
const char *lt_last_error(void);

/*
 Loads a checkpoint. On success `*out` owns a model to be released with
 [`lt_model_free`].

 # Safety
 `path` must be NULL or a NUL-terminated string; `out` must be NULL or
 writable.
 */
enum LtStatus lt_model_load(const char *path, struct LtModel **out);

/*
 Releases a model. NULL is ignored.

 # Safety
 `model` must come from [`lt_model_load`] and not be used afterwards.
 */
void lt_model_free(struct LtModel *model);

/*
 Trainable parameter count, or 0 for NULL.

 # Safety
 `model` must be NULL or a live model.
 */
size_t lt_model_parameter_count(const struct LtModel *model);

/*
 Vocabulary size including the reserved entries, or 0 for NULL.

 # Safety
 `model` must be NULL or a live model.
 */
size_t lt_model_vocab_size(const struct LtModel *model);

/*
 Context window length, or 0 for NULL.

 # Safety
 `model` must be NULL or a live model.
 */
size_t lt_model_window(const struct LtModel *model);

/*
 Level name recorded in the checkpoint as a static string, or NULL.

 # Safety
 `model` must be NULL or a live model.
 */
const char *lt_model_level(const struct LtModel *model);

/*
 Five greedy words, temperature 1, no fixed seed.
 */
struct LtGenerateOptions lt_generate_options_default(void);

/*
 Continues `seed_text`. `*out_words` receives the generated words joined by
 single spaces; `out_full_text`, if not NULL, receives the cleaned seed
 followed by the words. `options` may be NULL for the defaults.

 # Safety
 Pointers must be NULL or valid; `model` must be live.
 */
enum LtStatus lt_generate(const struct LtModel *model,
                          const char *seed_text,
                          const struct LtGenerateOptions *options,
                          char **out_words,
                          char **out_full_text);

/*
 Writes the next-word distribution for `context` (exactly `window` ids)
 into `out_probs`, which must hold at least `vocab_size` floats.

 # Safety
 `context` must point to `context_len` ids and `out_probs` to `out_len`
 writable floats.
 */
enum LtStatus lt_predict_next(const struct LtModel *model,
                              const size_t *context,
                              size_t context_len,
                              float *out_probs,
                              size_t out_len);

/*
 Id of `word` in the model vocabulary, or the oov id (1).

 # Safety
 `model` and `word` must be NULL or valid.
 */
enum LtStatus lt_model_word_id(const struct LtModel *model, const char *word, size_t *out_id);

/*
 Lowercases, strips punctuation and normalizes whitespace, as applied to
 corpus lines and seed texts.

 # Safety
 `text` must be NULL or NUL-terminated; `out` must be NULL or writable.
 */
enum LtStatus lt_clean_text(const char *text, char **out);

/*
 Frees a string returned by this library. NULL is ignored.

 # Safety
 `s` must come from this library and not be freed twice.
 */
void lt_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LEXITUTOR_H */
