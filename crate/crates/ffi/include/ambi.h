#ifndef AMBI_H
#define AMBI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum AmbiStatus {
  AMBI_STATUS_OK = 0,
  AMBI_STATUS_NULL_POINTER = 1,
  AMBI_STATUS_INVALID_ARGUMENT = 2,
  AMBI_STATUS_CONFIG = 3,
  AMBI_STATUS_DATA = 4,
  AMBI_STATUS_IO = 5,
  AMBI_STATUS_CHECKPOINT = 6,
  AMBI_STATUS_PANIC = 7,
} AmbiStatus;

typedef enum AmbiAttentionSite {
  AMBI_ATTENTION_SITE_AUDIO_SELF = 0,
  AMBI_ATTENTION_SITE_TEXT_SELF = 1,
  AMBI_ATTENTION_SITE_TEXT_HOP = 2,
  AMBI_ATTENTION_SITE_AUDIO_HOP = 3,
} AmbiAttentionSite;

// A loaded classifier with its feature settings.
typedef struct AmbiModel AmbiModel;

// One classification result.
typedef struct AmbiPrediction AmbiPrediction;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer is
// valid until the next failing call on the same thread.
const char *ambi_last_error_message(void);

// Library version, a static NUL-terminated string.
const char *ambi_version(void);

// Loads `checkpoint_path` and its JSON sidecar. `embeddings_path` may be
// null; it overrides the table recorded for dense-text checkpoints.
//
// # Safety
// String arguments must be null or NUL-terminated; `out` must be writable.
enum AmbiStatus ambi_model_load(const char *checkpoint_path,
                                const char *embeddings_path,
                                struct AmbiModel **out);

// # Safety
// `model` must be null or a handle from [`ambi_model_load`] not yet freed.
void ambi_model_free(struct AmbiModel *model);

// Snake-case variant name, owned by the model; null for a null handle.
//
// # Safety
// `model` must be null or a live handle.
const char *ambi_model_variant(const struct AmbiModel *model);

// Whether predictions need a transcript.
//
// # Safety
// `model` must be null or a live handle.
bool ambi_model_uses_text(const struct AmbiModel *model);

// Number of trainable scalars; 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
size_t ambi_model_num_parameters(const struct AmbiModel *model);

// Classifies a WAV file. `transcript` may be null for audio-only models.
//
// # Safety
// `model` must be a live handle, strings NUL-terminated or null, `out`
// writable.
enum AmbiStatus ambi_model_predict_wav(const struct AmbiModel *model,
                                       const char *wav_path,
                                       const char *transcript,
                                       struct AmbiPrediction **out);

// Classifies `len` mono samples in [-1, 1] at `sample_rate` Hz.
//
// # Safety
// `samples` must point to `len` readable doubles; other pointers as for
// [`ambi_model_predict_wav`].
enum AmbiStatus ambi_model_predict_samples(const struct AmbiModel *model,
                                           const double *samples,
                                           size_t len,
                                           uint32_t sample_rate,
                                           const char *transcript,
                                           struct AmbiPrediction **out);

// # Safety
// `prediction` must be null or a handle not yet freed.
void ambi_prediction_free(struct AmbiPrediction *prediction);

// Predicted class index in 0..7, or -1 for a null handle.
//
// # Safety
// `prediction` must be null or a live handle.
int32_t ambi_prediction_label(const struct AmbiPrediction *prediction);

// Copies the seven class probabilities into `out`, which must hold
// `capacity >= 7` doubles.
//
// # Safety
// `out` must point to `capacity` writable doubles.
enum AmbiStatus ambi_prediction_probabilities(const struct AmbiPrediction *prediction,
                                              double *out,
                                              size_t capacity);

// Valid (unpadded) steps of the audio and text inputs; text is 0 for
// audio-only models.
//
// # Safety
// `prediction` must be a live handle; the outputs must be writable or null.
enum AmbiStatus ambi_prediction_valid_lengths(const struct AmbiPrediction *prediction,
                                              size_t *audio,
                                              size_t *text);

// Number of attention distributions; 0 for a null handle.
//
// # Safety
// `prediction` must be null or a live handle.
size_t ambi_prediction_attention_count(const struct AmbiPrediction *prediction);

// Borrows attention distribution `index`: its site and weights over the
// valid steps. The weights stay valid until the prediction is freed.
//
// # Safety
// `prediction` must be a live handle and all outputs writable.
enum AmbiStatus ambi_prediction_attention(const struct AmbiPrediction *prediction,
                                          size_t index,
                                          enum AmbiAttentionSite *site,
                                          const double **weights,
                                          size_t *len);

// Short name of class `index` ("S", "YN", ...), or null out of range.
const char *ambi_label_name(size_t index);

// Splits a precomposed Hangul syllable into onset, nucleus and coda
// indices. The coda is -1 for open syllables; otherwise 0..27.
//
// # Safety
// The outputs must be writable.
enum AmbiStatus ambi_decompose_hangul(uint32_t codepoint,
                                      int32_t *onset,
                                      int32_t *nucleus,
                                      int32_t *coda);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AMBI_H */
