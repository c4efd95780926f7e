#ifndef POLYMOT_H
#define POLYMOT_H

#include <stddef.h>
#include <stdint.h>

typedef enum PmStatus {
  PM_STATUS_OK = 0,
  PM_STATUS_NULL_POINTER = 1,
  PM_STATUS_INVALID_ARGUMENT = 2,
  PM_STATUS_CONFIG = 3,
  PM_STATUS_NON_FINITE = 4,
  PM_STATUS_OUT_OF_ORDER_FRAME = 5,
  PM_STATUS_INDEX_OUT_OF_RANGE = 6,
  PM_STATUS_IO = 7,
  PM_STATUS_INTERNAL = 8,
  PM_STATUS_PANIC = 9,
} PmStatus;

/*
 Opaque tracker handle.
 */
typedef struct PmTracker PmTracker;

/*
 Oriented box: center, size (`w`, `l`, `h`) and yaw about +z.
 */
typedef struct PmBox {
  double x;
  double y;
  double z;
  double w;
  double l;
  double h;
  double yaw;
} PmBox;

typedef struct PmDetection {
  struct PmBox bbox;
  double vx;
  double vy;
  /*
   Nonzero when `vx`, `vy` carry a measured velocity.
   */
  uint8_t has_velocity;
  double score;
  /*
   NUL-terminated UTF-8 category name.
   */
  const char *category;
} PmDetection;

typedef struct PmTrackedBox {
  uint64_t id;
  struct PmBox bbox;
  double vx;
  double vy;
  double score;
} PmTrackedBox;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread. Valid until the next
 failing call on the same thread. Empty when nothing failed yet.
 */
const char *pm_last_error_message(void);

/*
 Creates a tracker. `config_toml` may be NULL for the default profile.

 # Safety
 `config_toml` is NULL or a NUL-terminated string; `out` is writable.
 */
enum PmStatus pm_tracker_new(const char *config_toml, struct PmTracker **out);

/*
 # Safety
 `tracker` is NULL or came from [`pm_tracker_new`] and was not freed.
 */
void pm_tracker_free(struct PmTracker *tracker);

/*
 Feeds one frame. Timestamps are seconds and must increase strictly.
 `detections` may be NULL when `count` is 0.

 # Safety
 `tracker` is a live handle; `detections` points to `count` elements
 whose `category` strings are valid for the duration of the call.
 */
enum PmStatus pm_tracker_step(struct PmTracker *tracker,
                              double timestamp,
                              const struct PmDetection *detections,
                              uintptr_t count);

/*
 Number of boxes reported by the last successful step.

 # Safety
 `tracker` is NULL or a live handle.
 */
uintptr_t pm_tracker_output_count(const struct PmTracker *tracker);

/*
 # Safety
 `tracker` is a live handle; `out` is writable.
 */
enum PmStatus pm_tracker_output(const struct PmTracker *tracker,
                                uintptr_t index,
                                struct PmTrackedBox *out);

/*
 Category of output box `index`, owned by the tracker until its next step.
 NULL when the index is out of range.

 # Safety
 `tracker` is NULL or a live handle.
 */
const char *pm_tracker_output_category(const struct PmTracker *tracker, uintptr_t index);

/*
 # Safety
 `a` and `b` are readable; `out` is writable.
 */
enum PmStatus pm_iou_bev(const struct PmBox *a, const struct PmBox *b, double *out);

/*
 # Safety
 `a` and `b` are readable; `out` is writable.
 */
enum PmStatus pm_giou_bev(const struct PmBox *a, const struct PmBox *b, double *out);

/*
 # Safety
 `a` and `b` are readable; `out` is writable.
 */
enum PmStatus pm_giou_3d(const struct PmBox *a, const struct PmBox *b, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POLYMOT_H */
