#ifndef SYNCFORGE_H
#define SYNCFORGE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum SfStatus {
  SF_STATUS_OK = 0,
  SF_STATUS_INVALID_ARGUMENT = 1,
  SF_STATUS_NUMERIC = 2,
  SF_STATUS_STATE = 3,
  SF_STATUS_FORMAT = 4,
  SF_STATUS_IO = 5,
  SF_STATUS_COLLECTION_FAILURE = 6,
  SF_STATUS_NOT_FOUND = 7,
  SF_STATUS_NULL_POINTER = 8,
  SF_STATUS_PANIC = 9,
} SfStatus;

/**
 * Trained extreme learning machine.
 */
typedef struct SfModel SfModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread ("" after a success).
 * Valid until the next call on the same thread.
 */
const char *sf_last_error_message(void);

/**
 * Library version, static storage.
 */
const char *sf_version(void);

/**
 * Loads a model file written by `syncforge train` or [`sf_model_save`].
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum SfStatus sf_model_load(const char *path, struct SfModel **out);

/**
 * # Safety
 * `model` must come from this library; `path` must be NUL-terminated.
 */
enum SfStatus sf_model_save(const struct SfModel *model, const char *path);

/**
 * Releases a model. Null is ignored.
 *
 * # Safety
 * `model` must come from this library and not be used afterwards.
 */
void sf_model_free(struct SfModel *model);

/**
 * Output width K, hidden width N_h and expected input length.
 *
 * # Safety
 * `model` must come from this library; output pointers may be null.
 */
enum SfStatus sf_model_dims(const struct SfModel *model, size_t *k, size_t *n_h, size_t *input_dim);

/**
 * Estimated timing index from a prepared (normalized) feature vector.
 *
 * # Safety
 * `features` must point to `len` doubles and `out_sto` be writable.
 */
enum SfStatus sf_model_estimate_sto(const struct SfModel *model,
                                    const double *features,
                                    size_t len,
                                    size_t *out_sto);

/**
 * Estimated timing index from a raw receive window of `len` complex
 * samples; features are extracted as during training (S&C metric for
 * metric-input models).
 *
 * # Safety
 * `re` and `im` must each point to `len` doubles; `out_sto` must be writable.
 */
enum SfStatus sf_model_estimate_sto_window(const struct SfModel *model,
                                           size_t n,
                                           size_t cp_len,
                                           const double *re,
                                           const double *im,
                                           size_t len,
                                           size_t *out_sto);

/**
 * Schmidl & Cox timing metric at the first `K = N + L_c` lags of a window.
 *
 * # Safety
 * `re`/`im` must point to `len` doubles; `out` must hold `out_len >= K`.
 */
enum SfStatus sf_sc_metric(size_t n,
                           size_t cp_len,
                           const double *re,
                           const double *im,
                           size_t len,
                           double *out,
                           size_t out_len);

/**
 * Trains a fresh ELM (N_h = 8K, plain pseudoinverse when `ridge` is 0) on a
 * dataset written by `syncforge gen`.
 *
 * # Safety
 * `dataset_path` must be NUL-terminated and `out` writable.
 */
enum SfStatus sf_train_dataset(const char *dataset_path,
                               uint64_t seed,
                               double ridge,
                               struct SfModel **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SYNCFORGE_H */
