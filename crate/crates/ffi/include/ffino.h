#ifndef FFINO_H
#define FFINO_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result codes.
 */
typedef enum FfinoStatus {
  FFINO_STATUS_OK = 0,
  FFINO_STATUS_NULL_POINTER = 1,
  FFINO_STATUS_INVALID_ARGUMENT = 2,
  FFINO_STATUS_IO = 3,
  FFINO_STATUS_FORMAT = 4,
  FFINO_STATUS_NUMERICAL = 5,
  FFINO_STATUS_PANIC = 6,
} FfinoStatus;

/*
 Loaded dataset.
 */
typedef struct FfinoDataset FfinoDataset;

/*
 Loaded single-precision model.
 */
typedef struct FfinoModel32 FfinoModel32;

/*
 Curve coefficients, same meaning as the library's `RelPermCoeffs`.
 */
typedef struct FfinoRelPerm {
  double krw_max;
  double krg_max;
  double swi;
  double sgr;
  double m;
  double n;
} FfinoRelPerm;

/*
 Field metrics for one `steps × h × w` series.
 */
typedef struct FfinoMetrics {
  double r2;
  double rmse;
  double ssim;
  double mre;
  /*
   Nonzero when no cell of the reference reaches the AOI threshold.
   */
  int32_t empty_aoi;
} FfinoMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the most recent failure on this thread, or null. The pointer
 stays valid until the next failing call on the same thread.
 */
const char *ffino_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *ffino_version(void);

/*
 Water and gas relative permeability at water saturation `sw`.

 # Safety
 `coeffs`, `krw` and `krg` must be valid pointers.
 */
enum FfinoStatus ffino_mbc_eval(const struct FfinoRelPerm *coeffs,
                                double sw,
                                double *krw,
                                double *krg);

/*
 Shock-front gas saturation and front speed with the default viscosities.

 # Safety
 All pointers must be valid.
 */
enum FfinoStatus ffino_welge_front(const struct FfinoRelPerm *coeffs,
                                   double *s_front,
                                   double *slope);

/*
 Opens an FDS1 dataset file.

 # Safety
 `path` must be a NUL-terminated string and `handle` a valid pointer.
 */
enum FfinoStatus ffino_dataset_open(const char *path, struct FfinoDataset **handle);

/*
 Sample count and grid shape (`nr`, `nz`, report steps).

 # Safety
 `ds` must come from [`ffino_dataset_open`]; outputs may be null.
 */
enum FfinoStatus ffino_dataset_info(const struct FfinoDataset *ds,
                                    uintptr_t *samples,
                                    uintptr_t *nr,
                                    uintptr_t *nz,
                                    uintptr_t *steps);

/*
 # Safety
 `ds` must come from [`ffino_dataset_open`] or be null.
 */
void ffino_dataset_free(struct FfinoDataset *ds);

/*
 Loads an FCK1 checkpoint in single precision.

 # Safety
 `path` must be a NUL-terminated string and `handle` a valid pointer.
 */
enum FfinoStatus ffino_model_load(const char *path, struct FfinoModel32 **handle);

/*
 # Safety
 `model` must come from [`ffino_model_load`]; `count` must be valid.
 */
enum FfinoStatus ffino_model_param_count(const struct FfinoModel32 *model, uintptr_t *count);

/*
 Predicts every report step of dataset sample `index` in physical units
 into `buf`, laid out `[step][r][z]`. `len` must equal steps·nr·nz.

 # Safety
 Handles must be live; `buf` must hold `len` doubles.
 */
enum FfinoStatus ffino_model_predict(const struct FfinoModel32 *model,
                                     const struct FfinoDataset *ds,
                                     uintptr_t index,
                                     double *buf,
                                     uintptr_t len);

/*
 # Safety
 `model` must come from [`ffino_model_load`] or be null.
 */
void ffino_model_free(struct FfinoModel32 *model);

/*
 Scores `y_hat` against `y` (each `steps·h·w` values). `threshold` is the
 AOI cut-off on `y`.

 # Safety
 `y` and `y_hat` must hold `steps·h·w` doubles; `result` must be valid.
 */
enum FfinoStatus ffino_metrics(const double *y,
                               const double *y_hat,
                               uintptr_t steps,
                               uintptr_t h,
                               uintptr_t w,
                               double threshold,
                               struct FfinoMetrics *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FFINO_H */
