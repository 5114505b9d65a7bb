#ifndef TCF_H
#define TCF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TcfMode {
  TCF_MODE_JOINT = 0,
  TCF_MODE_FROZEN_EXTERNAL = 1,
  TCF_MODE_FINETUNED_EXTERNAL = 2,
} TcfMode;

// Result code of every fallible call.
typedef enum TcfStatus {
  TCF_STATUS_OK = 0,
  TCF_STATUS_IO = 1,
  TCF_STATUS_PARSE = 2,
  TCF_STATUS_INTEGRITY = 3,
  TCF_STATUS_LOOKUP = 4,
  TCF_STATUS_DEGENERATE_SPLIT = 5,
  TCF_STATUS_DIMENSION = 6,
  TCF_STATUS_FORMAT = 7,
  TCF_STATUS_UNSUPPORTED_VERSION = 8,
  TCF_STATUS_NO_PREDICTION = 9,
  TCF_STATUS_INVALID_ARGUMENT = 10,
  TCF_STATUS_NULL_POINTER = 11,
  TCF_STATUS_UTF8 = 12,
  TCF_STATUS_PANIC = 13,
} TcfStatus;

// A knowledge base with its binarized matrix.
typedef struct TcfKb TcfKb;

typedef struct TcfModel TcfModel;

typedef struct TcfSplit TcfSplit;

// Training settings. Start from [`tcf_train_config_default`].
typedef struct TcfTrainConfig {
  uint32_t epochs;
  uint32_t batch_size;
  uint32_t dim;
  double l2_weight;
  double learning_rate;
  double adam_beta1;
  double adam_beta2;
  double adam_epsilon;
  double init_std;
  uint64_t seed;
  // A [`TcfMode`] value.
  uint32_t mode;
  // Nonzero to penalize language embeddings only.
  uint8_t languages_only_penalty;
  // Nonzero for a per-column bias.
  uint8_t bias;
  // Nonzero to centre the fine-tuning prior at zero instead of the external vectors.
  uint8_t zero_prior;
} TcfTrainConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer is
// valid until the next failing call on the same thread.
const char *tcf_last_error_message(void);

struct TcfTrainConfig tcf_train_config_default(void);

// Loads a long-format KB file.
//
// # Safety
// `path` must be a valid C string and `out` a writable pointer.
enum TcfStatus tcf_kb_load(const char *path, struct TcfKb **out);

// Applies the value, coverage and branch-size filters, producing a new KB.
//
// # Safety
// `kb` must come from this library and `out` must be writable.
enum TcfStatus tcf_kb_filter(const struct TcfKb *kb,
                             uint32_t min_value_count,
                             uint32_t min_features_per_language,
                             uint32_t min_branch_size,
                             struct TcfKb **out);

// Number of languages, or 0 for a null handle.
//
// # Safety
// `kb` must be null or come from this library.
uintptr_t tcf_kb_n_languages(const struct TcfKb *kb);

// # Safety
// `kb` must be null or come from this library.
uintptr_t tcf_kb_n_features(const struct TcfKb *kb);

// Number of binary columns after binarization.
//
// # Safety
// `kb` must be null or come from this library.
uintptr_t tcf_kb_n_columns(const struct TcfKb *kb);

// # Safety
// `kb` must be null or come from this library, and not be used afterwards.
void tcf_kb_free(struct TcfKb *kb);

// Holds out the genus `branch`.
//
// # Safety
// `kb` must come from this library, `branch` must be a valid C string and
// `out` must be writable.
enum TcfStatus tcf_split_new(const struct TcfKb *kb,
                             const char *branch,
                             double in_branch_fraction,
                             double eval_fraction,
                             uint64_t seed,
                             struct TcfSplit **out);

// # Safety
// `split` must be null or come from this library.
uintptr_t tcf_split_n_train(const struct TcfSplit *split);

// # Safety
// `split` must be null or come from this library.
uintptr_t tcf_split_n_eval(const struct TcfSplit *split);

// # Safety
// `split` must be null or come from this library, and not be used afterwards.
void tcf_split_free(struct TcfSplit *split);

// Trains on the split's training cells. `embeddings_path` may be null
// unless `config.mode` uses external embeddings.
//
// # Safety
// Handles must come from this library, `config` must be readable,
// `embeddings_path` null or a valid C string, `out` writable.
enum TcfStatus tcf_model_train(const struct TcfKb *kb,
                               const struct TcfSplit *split,
                               const struct TcfTrainConfig *config,
                               const char *embeddings_path,
                               struct TcfModel **out);

// # Safety
// `model` must come from this library and `path` be a valid C string.
enum TcfStatus tcf_model_save(const struct TcfModel *model, const char *path);

// # Safety
// `path` must be a valid C string and `out` writable.
enum TcfStatus tcf_model_load(const char *path, struct TcfModel **out);

// Decodes the most probable value of one cell into `out_value`.
//
// # Safety
// Handles must come from this library, ids must be valid C strings and
// `out_value` writable.
enum TcfStatus tcf_model_predict(const struct TcfModel *model,
                                 const struct TcfKb *kb,
                                 const char *language_id,
                                 const char *feature_id,
                                 uint32_t *out_value);

// Micro-F1 over the split's evaluation cells.
//
// # Safety
// Handles must come from this library and `out_f1` be writable.
enum TcfStatus tcf_model_evaluate(const struct TcfModel *model,
                                  const struct TcfKb *kb,
                                  const struct TcfSplit *split,
                                  double *out_f1);

// # Safety
// `model` must be null or come from this library, and not be used afterwards.
void tcf_model_free(struct TcfModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TCF_H */
