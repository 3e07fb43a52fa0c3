#ifndef VORTGEO_H
#define VORTGEO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum VgStatus {
  VG_STATUS_OK = 0,
  VG_STATUS_NULL_POINTER = 1,
  VG_STATUS_INVALID_ARGUMENT = 2,
  VG_STATUS_INVALID_GRID = 3,
  VG_STATUS_GRID_MISMATCH = 4,
  VG_STATUS_NON_FINITE = 5,
  VG_STATUS_CFL = 6,
  VG_STATUS_COVER_INFEASIBLE = 7,
  VG_STATUS_INSUFFICIENT_SNAPSHOTS = 8,
  VG_STATUS_IO = 9,
  VG_STATUS_FORMAT = 10,
  VG_STATUS_CONFIG = 11,
  VG_STATUS_OUT_OF_RANGE = 12,
  VG_STATUS_PANIC = 13,
} VgStatus;

// Vorticity (or any vector) field on a grid.
typedef struct VgField VgField;

// Grid resolution, box length and viscosity.
typedef struct VgGrid VgGrid;

// Stored snapshots of a run.
typedef struct VgTrajectory VgTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// Valid until the next call on the same thread.
const char *vg_last_error(void);

// Library version as a static string.
const char *vg_version(void);

// Releases a string returned by this library.
//
// # Safety
// `s` must come from this library and not be freed twice.
void vg_string_free(char *s);

// # Safety
// `out` must be a valid pointer.
enum VgStatus vg_grid_new(size_t n, double box_length, double viscosity, struct VgGrid **out);

// # Safety
// `grid` must come from `vg_grid_new` and not be freed twice.
void vg_grid_free(struct VgGrid *grid);

// Points per axis; zero for a null handle.
//
// # Safety
// `grid` must be null or a live handle.
size_t vg_grid_n(const struct VgGrid *grid);

// Generates an initial vorticity field. `scenario_json` is an object such as
// `{"kind": "burgers_tube", "radius": 0.5, "circulation": 1, "axis": "z"}`.
//
// # Safety
// Pointers must be valid; `scenario_json` NUL-terminated.
enum VgStatus vg_scenario_generate(const struct VgGrid *grid,
                                   const char *scenario_json,
                                   double amplitude,
                                   struct VgField **out);

// Builds a field from three arrays of `n³` values in grid order.
//
// # Safety
// Each component pointer must reference `len` readable doubles.
enum VgStatus vg_field_from_components(const struct VgGrid *grid,
                                       const double *x,
                                       const double *y,
                                       const double *z,
                                       size_t len,
                                       struct VgField **out);

// # Safety
// `field` must come from this library and not be freed twice.
void vg_field_free(struct VgField *field);

// Copies component `c` (0, 1 or 2) into `buf`, which holds `len` doubles.
//
// # Safety
// `buf` must reference `len` writable doubles.
enum VgStatus vg_field_component(const struct VgField *field, size_t c, double *buf, size_t len);

// `‖ω‖∞`.
//
// # Safety
// Pointers must be valid.
enum VgStatus vg_field_max_norm(const struct VgField *field, double *out);

// # Safety
// Pointers must be valid; `path` NUL-terminated.
enum VgStatus vg_snapshot_save(const struct VgField *field, double time, const char *path);

// Reads a snapshot; also returns its grid through `grid_out` when non-null.
//
// # Safety
// Pointers must be valid; `path` NUL-terminated.
enum VgStatus vg_snapshot_load(const char *path,
                               struct VgField **field_out,
                               double *time_out,
                               struct VgGrid **grid_out);

// Integrates from `omega0` to `t_end` with snapshots every `snapshot_every`.
//
// # Safety
// Pointers must be valid.
enum VgStatus vg_run(const struct VgField *omega0,
                     double t_end,
                     double snapshot_every,
                     struct VgTrajectory **out);

// Loads a run written by `vg_experiment_run` or the CLI.
//
// # Safety
// Pointers must be valid; `path` NUL-terminated.
enum VgStatus vg_trajectory_load(const char *path, struct VgTrajectory **out);

// # Safety
// `traj` must come from this library and not be freed twice.
void vg_trajectory_free(struct VgTrajectory *traj);

// Number of stored snapshots; zero for a null handle.
//
// # Safety
// `traj` must be null or a live handle.
size_t vg_trajectory_len(const struct VgTrajectory *traj);

// Time and a copy of snapshot `index`; `field_out` may be null.
//
// # Safety
// Pointers must be valid.
enum VgStatus vg_trajectory_snapshot(const struct VgTrajectory *traj,
                                     size_t index,
                                     double *time_out,
                                     struct VgField **field_out);

// `h(δ)` for `δ ∈ (0, 1)`.
//
// # Safety
// `out` must be valid.
enum VgStatus vg_h_delta(double delta, double *out);

// Walk-on-spheres harmonic measure of `count` intervals `[a, b] ⊂ [−1, 1]`
// (stored as `a0, b0, a1, b1, …`) seen from `(x, y)` in the unit disk.
//
// # Safety
// `intervals` must reference `2 * count` doubles; outputs must be valid.
enum VgStatus vg_harmonic_measure(const double *intervals,
                                  size_t count,
                                  double x,
                                  double y,
                                  size_t walkers,
                                  uint64_t seed,
                                  double *estimate,
                                  double *stderr);

// Criticality record of one field as JSON.
//
// # Safety
// Pointers must be valid; release the string with `vg_string_free`.
enum VgStatus vg_criticality_json(const struct VgField *field, double c1, char **out);

// Windowed sparseness report of a run as JSON.
//
// # Safety
// Pointers must be valid; release the string with `vg_string_free`.
enum VgStatus vg_regularity_json(const struct VgTrajectory *traj,
                                 double delta,
                                 double d0,
                                 size_t n_dir,
                                 char **out);

// Multi-scale stretching report at time `t` as JSON. `scales` holds
// `scale_count` cover radii as fractions of the macro radius; with zero
// the admissible dyadic scales are used.
//
// # Safety
// Pointers must be valid; release the string with `vg_string_free`.
enum VgStatus vg_cascade_json(const struct VgTrajectory *traj,
                              double t,
                              size_t k1,
                              size_t k2,
                              double constant,
                              const double *scales,
                              size_t scale_count,
                              uint64_t seed,
                              char **out);

// Runs a TOML experiment configuration into `out_dir`.
//
// # Safety
// Strings must be valid and NUL-terminated.
enum VgStatus vg_experiment_run(const char *config_path, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VORTGEO_H */
