/* Copyright 2026 The VoxTrack Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the VoxTrack point-cloud single-object tracker.
 *
 * All objects are opaque handles created and destroyed by this library.
 * Every fallible call returns a vxt_status; on failure a description is
 * available from vxt_last_error() on the calling thread until the next call
 * on that thread. Handles are not internally synchronized: a model may be
 * shared read-only across threads, everything else needs external locking.
 */
#ifndef VOXTRACK_VOXTRACK_H_
#define VOXTRACK_VOXTRACK_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(VXT_BUILDING_LIBRARY)
#define VXT_API __declspec(dllexport)
#else
#define VXT_API __declspec(dllimport)
#endif
#else
#define VXT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vxt_status {
  VXT_OK = 0,
  VXT_ERR_INVALID_ARGUMENT = 1,
  VXT_ERR_CONFIG = 2,
  VXT_ERR_SHAPE = 3,
  VXT_ERR_IO = 4,
  VXT_ERR_FORMAT = 5,
  VXT_ERR_NUMERIC = 6,
  VXT_ERR_USAGE = 7,
  VXT_ERR_INTERNAL = 8
} vxt_status;

typedef struct vxt_config vxt_config;
typedef struct vxt_model vxt_model;
typedef struct vxt_dataset vxt_dataset;

/* LiDAR frame, z up. l runs along the heading, w across it. */
typedef struct vxt_box {
  double x, y, z;
  double w, h, l;
  double yaw;
} vxt_box;

typedef struct vxt_train_summary {
  int32_t epochs;
  int64_t steps;
  double final_loss;
  uint64_t skipped_pairs;
} vxt_train_summary;

typedef struct vxt_eval_summary {
  int32_t sequences;
  int32_t frames;
  double success;   /* percent */
  double precision; /* percent */
  double mean_iou;
  double mean_error; /* meters */
  int32_t fallbacks;
} vxt_eval_summary;

typedef struct vxt_bench_summary {
  int32_t frames_per_rep;
  int32_t reps;
  double median_fps;
  double min_fps;
  double max_fps;
} vxt_bench_summary;

VXT_API const char* vxt_version(void);
VXT_API const char* vxt_status_name(vxt_status status);
VXT_API const char* vxt_last_error(void);

/* --- configuration ------------------------------------------------------ */

/* `path` may be NULL for built-in defaults. */
VXT_API vxt_status vxt_config_load(const char* path, vxt_config** out);
/* Dotted key, JSON value (bare words are taken as strings). The whole
 * configuration is re-validated; on failure it is left unchanged. */
VXT_API vxt_status vxt_config_set(vxt_config* cfg, const char* key, const char* value);
/* Writes the effective configuration as JSON. `needed` receives the size
 * including the terminator; `buf` may be NULL when `cap` is 0. */
VXT_API vxt_status vxt_config_dump(const vxt_config* cfg, char* buf, size_t cap, size_t* needed);
VXT_API void vxt_config_free(vxt_config* cfg);

/* --- datasets ----------------------------------------------------------- */

/* Directory of sequence folders, as written by vxt_synth. */
VXT_API vxt_status vxt_dataset_open(const char* dir, vxt_dataset** out);
/* KITTI tracking layout under `root`; `sequences` is a comma-separated list
 * such as "0000,0001". Tracks of `category` become one sequence each. */
VXT_API vxt_status vxt_dataset_open_kitti(const char* root, const char* sequences,
                                          const char* category, vxt_dataset** out);
VXT_API size_t vxt_dataset_size(const vxt_dataset* ds);
/* Name of sequence `index`, or NULL when out of range. */
VXT_API const char* vxt_dataset_name(const vxt_dataset* ds, size_t index);
/* Writes every sequence under `dir` in the native layout. */
VXT_API vxt_status vxt_dataset_save(const vxt_dataset* ds, const char* dir);
VXT_API void vxt_dataset_free(vxt_dataset* ds);

/* Generates the configured synthetic dataset into `out_dir`. */
VXT_API vxt_status vxt_synth(const vxt_config* cfg, const char* out_dir);

/* --- models ------------------------------------------------------------- */

/* Fresh parameters from the configured init seed. */
VXT_API vxt_status vxt_model_create(const vxt_config* cfg, vxt_model** out);
VXT_API vxt_status vxt_model_load(const char* path, vxt_model** out);
VXT_API vxt_status vxt_model_save(const vxt_model* model, const char* path);
/* Turns the model into the constant-position baseline. */
VXT_API vxt_status vxt_model_zero_output(vxt_model* model);
VXT_API void vxt_model_free(vxt_model* model);

/* Trains in place with cfg's train section. The model's architecture is
 * kept; cfg's model section is ignored. `summary` may be NULL. */
VXT_API vxt_status vxt_train(const vxt_config* cfg, const vxt_dataset* ds, vxt_model* model,
                             vxt_train_summary* summary);

/* One prediction file per sequence, `<pred_dir>/<name>.txt`, with lines
 * "frame x y z w h l yaw fallback" for frames 1..T-1. `fallbacks` may be NULL. */
VXT_API vxt_status vxt_track(const vxt_model* model, const vxt_dataset* ds, const char* pred_dir,
                             int32_t* fallbacks);

/* Success/Precision against ground truth plus robustness buckets, written
 * as line-delimited JSON to `report_path` (NULL skips the file). */
VXT_API vxt_status vxt_eval(const vxt_config* cfg, const vxt_dataset* ds, const char* pred_dir,
                            const char* report_path, vxt_eval_summary* summary);

/* Frames per second of the single-frame tracking step on a synthetic
 * sequence, using cfg's bench and synth sections. */
VXT_API vxt_status vxt_bench(const vxt_config* cfg, const vxt_model* model,
                             const char* report_path, vxt_bench_summary* summary);

/* --- single calls ------------------------------------------------------- */

/* Points are packed xyz triples. `fallback` may be NULL. */
VXT_API vxt_status vxt_track_step(const vxt_model* model, const vxt_box* box,
                                  const double* prev_xyz, size_t prev_count,
                                  const double* cur_xyz, size_t cur_count, vxt_box* out,
                                  int32_t* fallback);
VXT_API vxt_status vxt_iou3d(const vxt_box* a, const vxt_box* b, double* out);

#ifdef __cplusplus
}
#endif

#endif /* VOXTRACK_VOXTRACK_H_ */
