#ifndef CROSSGUARD_H
#define CROSSGUARD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CgStatus {
  CG_STATUS_OK = 0,
  CG_STATUS_NULL_POINTER = 1,
  CG_STATUS_INVALID_ARGUMENT = 2,
  CG_STATUS_PARSE_ERROR = 3,
  CG_STATUS_IO_ERROR = 4,
  CG_STATUS_CODEC_ERROR = 5,
  CG_STATUS_BUFFER_TOO_SMALL = 6,
  CG_STATUS_PANIC = 99,
} CgStatus;

typedef enum CgPhase {
  CG_PHASE_WAITING = 0,
  CG_PHASE_IDENTIFY_CROSSING_INTENT = 1,
  CG_PHASE_IDENTIFY_HAZARD = 2,
  CG_PHASE_REACT_TO_HAZARD = 3,
  CG_PHASE_CROSSING = 4,
  CG_PHASE_POST_INTERACTION = 5,
} CgPhase;

typedef enum CgIntervalKind {
  CG_INTERVAL_KIND_EMPTY = 0,
  CG_INTERVAL_KIND_BOUNDED = 1,
  CG_INTERVAL_KIND_ALWAYS_INSIDE = 2,
} CgIntervalKind;

typedef enum CgHazardTag {
  CG_HAZARD_TAG_SAFE = 0,
  CG_HAZARD_TAG_IMMINENT = 1,
  CG_HAZARD_TAG_ACTIVE = 2,
} CgHazardTag;

/**
 * Opaque scenario handle.
 */
typedef struct CgScenario CgScenario;

/**
 * Opaque simulation handle; keeps the trace produced so far.
 */
typedef struct CgSimulation CgSimulation;

/**
 * `min_ped_vehicle_distance` is meaningful only when `has_min_distance` is set.
 */
typedef struct CgMetrics {
  uint64_t pedestrian_wait_ticks;
  bool crossing_completed;
  uint32_t denm_count;
  double denm_delivery_ratio;
  bool has_min_distance;
  double min_ped_vehicle_distance;
  uint32_t violations;
} CgMetrics;

/**
 * Zone of danger: anchor point plus left, right, upper and lower extents (m).
 */
typedef struct CgZod {
  double anchor_x;
  double anchor_y;
  double ll;
  double rl;
  double uw;
  double lw;
} CgZod;

/**
 * Position (m), speed (m/s) and heading (rad, 0 = +x, counter-clockwise).
 */
typedef struct CgState {
  double x;
  double y;
  double speed;
  double heading;
} CgState;

/**
 * `entry` and `exit` are meaningful only for `Bounded`.
 */
typedef struct CgInterval {
  enum CgIntervalKind kind;
  double entry;
  double exit;
} CgInterval;

/**
 * `station_type` uses the on-air station type codes.
 */
typedef struct CgCam {
  uint32_t station_id;
  uint8_t station_type;
  double latitude;
  double longitude;
  double speed;
  double heading;
  uint64_t generation_tick;
} CgCam;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message on this thread, or null. Valid until the next failing call.
 */
const char *cg_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cg_version(void);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CgStatus cg_scenario_load(const char *path, struct CgScenario **out);

/**
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CgStatus cg_scenario_parse(const char *text, struct CgScenario **out);

/**
 * # Safety
 * `scenario` must come from `cg_scenario_load` or `cg_scenario_parse`.
 */
enum CgStatus cg_scenario_set_seed(struct CgScenario *scenario, uint64_t seed);

/**
 * # Safety
 * `scenario` must be null or a live handle; it is invalid afterwards.
 */
void cg_scenario_free(struct CgScenario *scenario);

/**
 * Runs a scenario to completion.
 *
 * # Safety
 * `scenario` must be a live handle and `out` a valid pointer.
 */
enum CgStatus cg_run(const struct CgScenario *scenario, struct CgMetrics *out);

/**
 * # Safety
 * `scenario` must be a live handle and `out` a valid pointer. The
 * simulation keeps its own copy of the scenario.
 */
enum CgStatus cg_simulation_new(const struct CgScenario *scenario, struct CgSimulation **out);

/**
 * Advances one tick. `finished` is set once the run has ended; stepping a
 * finished simulation does nothing.
 *
 * # Safety
 * `sim` must be a live handle; `finished` may be null.
 */
enum CgStatus cg_simulation_step(struct CgSimulation *sim, bool *finished);

/**
 * # Safety
 * `sim` must be a live handle and `tick` a valid pointer.
 */
enum CgStatus cg_simulation_tick(const struct CgSimulation *sim, uint64_t *tick);

/**
 * # Safety
 * `sim` must be a live handle and `phase` a valid pointer.
 */
enum CgStatus cg_simulation_phase(const struct CgSimulation *sim, enum CgPhase *phase);

/**
 * Metrics over the ticks run so far.
 *
 * # Safety
 * `sim` must be a live handle and `out` a valid pointer.
 */
enum CgStatus cg_simulation_metrics(const struct CgSimulation *sim, struct CgMetrics *out);

/**
 * Writes the trace so far as JSON lines.
 *
 * # Safety
 * `sim` must be a live handle and `path` a NUL-terminated string.
 */
enum CgStatus cg_simulation_write_trace(const struct CgSimulation *sim, const char *path);

/**
 * # Safety
 * `sim` must be null or a live handle; it is invalid afterwards.
 */
void cg_simulation_free(struct CgSimulation *sim);

/**
 * Time window (s, relative to now) during which the state's straight-line
 * path lies inside the zone.
 *
 * # Safety
 * All pointers must be valid.
 */
enum CgStatus cg_incursion_interval(const struct CgZod *zod,
                                    const struct CgState *state,
                                    struct CgInterval *out);

/**
 * # Safety
 * `interval` and `out` must be valid pointers.
 */
enum CgStatus cg_classify(const struct CgInterval *interval,
                          double threshold,
                          enum CgHazardTag *out);

/**
 * Encodes a CAM into `buf`. `written` receives the encoded length; with
 * `BufferTooSmall` it receives the length needed.
 *
 * # Safety
 * `cam` and `written` must be valid; `buf` must hold `capacity` bytes (may be
 * null when `capacity` is 0).
 */
enum CgStatus cg_cam_encode(const struct CgCam *cam,
                            uint8_t *buf,
                            size_t capacity,
                            size_t *written);

/**
 * # Safety
 * `buf` must hold `len` bytes and `out` must be valid.
 */
enum CgStatus cg_cam_decode(const uint8_t *buf, size_t len, struct CgCam *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CROSSGUARD_H */
