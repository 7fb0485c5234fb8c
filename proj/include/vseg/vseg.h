/* C interface to the vessel segmentation library (libvesselseg). */
#ifndef VSEG_VSEG_H
#define VSEG_VSEG_H

#include <stddef.h>

#if defined(_WIN32)
#define VSEG_API __declspec(dllexport)
#else
#define VSEG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vseg_status {
  VSEG_OK = 0,
  VSEG_ERR_MALFORMED_HEADER = 1,
  VSEG_ERR_UNSUPPORTED_MAXVAL = 2,
  VSEG_ERR_TRUNCATED_DATA = 3,
  VSEG_ERR_IO_FAILURE = 4,
  VSEG_ERR_NOT_A_MASK = 5,
  VSEG_ERR_DEGENERATE_DATASET = 6,
  VSEG_ERR_DEGENERATE_RANGE = 7,
  VSEG_ERR_INVALID_GAMMA = 8,
  VSEG_ERR_PATCH_LARGER_THAN_IMAGE = 9,
  VSEG_ERR_STRIDE_EXCEEDS_PATCH = 10,
  VSEG_ERR_MISSING_PREDICTION = 11,
  VSEG_ERR_SHAPE_MISMATCH = 12,
  VSEG_ERR_ODD_SPATIAL_DIMS = 13,
  VSEG_ERR_CHANNEL_MISMATCH = 14,
  VSEG_ERR_INDIVISIBLE_INPUT = 15,
  VSEG_ERR_BAD_MAGIC = 16,
  VSEG_ERR_VERSION_MISMATCH = 17,
  VSEG_ERR_NUMERIC_ABORT = 18,
  VSEG_ERR_TOO_FEW_PATCHES = 19,
  VSEG_ERR_DIM_MISMATCH = 20,
  VSEG_ERR_EMPTY_FOV = 21,
  VSEG_ERR_SINGLE_CLASS = 22,
  VSEG_ERR_BAD_K = 23,
  VSEG_ERR_EMPTY_DATASET = 24,
  VSEG_ERR_LAYOUT = 25,
  VSEG_ERR_UNKNOWN_KEY = 26,
  VSEG_ERR_INVALID_VALUE = 27,
  VSEG_ERR_INVALID_ARGUMENT = 28,
  VSEG_ERR_INTERNAL = 99
} vseg_status;

typedef struct vseg_config vseg_config;
typedef struct vseg_model vseg_model;

/* Receives one progress line (no trailing newline). */
typedef void (*vseg_log_fn)(const char* line, void* user);

VSEG_API const char* vseg_version(void);

/* Message of the last failed call on this thread; "" after success. */
VSEG_API const char* vseg_last_error(void);
VSEG_API const char* vseg_status_name(vseg_status status);
/* Process exit code for a status: 0 ok, 1 usage, 2 data, 3 numeric abort. */
VSEG_API int vseg_status_exit_code(vseg_status status);

/* Configuration, all keys at their defaults until set. */
VSEG_API vseg_status vseg_config_create(vseg_config** out);
VSEG_API void vseg_config_destroy(vseg_config* cfg);
VSEG_API vseg_status vseg_config_set(vseg_config* cfg, const char* key, const char* value);
VSEG_API vseg_status vseg_config_load(vseg_config* cfg, const char* path);
VSEG_API vseg_status vseg_config_check(const vseg_config* cfg);
/* Copies the value (NUL-terminated) into buf when it fits; *needed gets the
   length including the terminator. buf may be NULL to query the size. */
VSEG_API vseg_status vseg_config_get(const vseg_config* cfg, const char* key, char* buf, size_t cap, size_t* needed);
/* Effective configuration as `key = value` lines, same buffer contract. */
VSEG_API vseg_status vseg_config_dump(const vseg_config* cfg, char* buf, size_t cap, size_t* needed);

/* Pipeline commands. log may be NULL. */
VSEG_API vseg_status vseg_preprocess(const vseg_config* cfg, const char* dataset_dir, const char* out_dir,
                                     vseg_log_fn log, void* user);
VSEG_API vseg_status vseg_train(const vseg_config* cfg, const char* dataset_dir, const char* out_dir,
                                vseg_log_fn log, void* user);
/* inputs: .ppm files or directories; stats_path may be NULL (stats.txt next
   to the checkpoint). */
VSEG_API vseg_status vseg_predict(const vseg_config* cfg, const char* checkpoint, const char* const* inputs,
                                  size_t n_inputs, const char* stats_path, const char* out_dir, vseg_log_fn log,
                                  void* user);
VSEG_API vseg_status vseg_evaluate(const vseg_config* cfg, const char* pred_dir, const char* gt_dir,
                                   const char* fov_dir, const char* out_dir, vseg_log_fn log, void* user);
/* strata_path may be NULL; k = 0 uses crossval.k. */
VSEG_API vseg_status vseg_crossval(const vseg_config* cfg, const char* dataset_dir, const char* strata_path, int k,
                                   const char* out_dir, vseg_log_fn log, void* user);
VSEG_API vseg_status vseg_synth(const vseg_config* cfg, const char* out_dir, vseg_log_fn log, void* user);

/* Trained models. */
VSEG_API vseg_status vseg_model_load(const char* path, vseg_model** out);
VSEG_API void vseg_model_destroy(vseg_model* model);
VSEG_API size_t vseg_model_parameter_count(const vseg_model* model);
/* Vessel probabilities for a preprocessed row-major image in [0,1], using
   the infer.* settings of cfg. prob receives width*height values. */
VSEG_API vseg_status vseg_model_predict(const vseg_model* model, const vseg_config* cfg, const double* gray,
                                        int width, int height, double* prob);

#ifdef __cplusplus
}
#endif

#endif
