#ifndef VEMMD_H
#define VEMMD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes of every exported function.
typedef enum VemmdStatus {
  VEMMD_STATUS_OK = 0,
  VEMMD_STATUS_NULL_POINTER = 1,
  VEMMD_STATUS_INVALID_ARGUMENT = 2,
  VEMMD_STATUS_INVALID_MESH = 3,
  VEMMD_STATUS_SOLVER_FAILURE = 4,
  VEMMD_STATUS_IO = 5,
  // A Rust panic was caught at the boundary.
  VEMMD_STATUS_INTERNAL = 6,
} VemmdStatus;

// A polygonal mesh.
typedef struct VemmdMesh VemmdMesh;

// A time-stepping run on a mesh.
typedef struct VemmdSimulation VemmdSimulation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null if there was none.
// The pointer stays valid until the next failing call on the same thread.
const char *vemmd_last_error_message(void);

// Forgets the last error of this thread.
void vemmd_clear_last_error(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void vemmd_string_free(char *s);

// Generates a unit-square mesh. `family` is one of `triangular`, `square`,
// `voronoi_structured`, `voronoi_random`, `concave`.
//
// # Safety
// `family` must be a NUL-terminated string and `out` a valid pointer.
enum VemmdStatus vemmd_mesh_generate(const char *family,
                                     size_t n,
                                     uint64_t seed,
                                     struct VemmdMesh **out);

// Builds a mesh from its JSON form (`{"vertices": [[x, y], ...], "cells": [[i, j, k, ...], ...]}`).
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum VemmdStatus vemmd_mesh_from_json(const char *json, struct VemmdMesh **out);

// JSON form of the mesh; release with [`vemmd_string_free`].
//
// # Safety
// `mesh` must be a live handle and `out` a valid pointer.
enum VemmdStatus vemmd_mesh_to_json(const struct VemmdMesh *mesh, char **out);

// Vertex, edge and cell counts and the mesh size `h`. Any output pointer may be null.
//
// # Safety
// `mesh` must be a live handle; non-null outputs must be valid.
enum VemmdStatus vemmd_mesh_info(const struct VemmdMesh *mesh,
                                 size_t *num_vertices,
                                 size_t *num_edges,
                                 size_t *num_cells,
                                 double *h);

// Area and centroid of cell `cell`.
//
// # Safety
// `mesh` must be a live handle; outputs must be valid.
enum VemmdStatus vemmd_mesh_cell(const struct VemmdMesh *mesh,
                                 size_t cell,
                                 double *area,
                                 double *cx,
                                 double *cy);

// Releases a mesh. Null is ignored.
//
// # Safety
// `mesh` must come from this library and not have been freed.
void vemmd_mesh_free(struct VemmdMesh *mesh);

// Starts a run of the named problem (`ex1`, `ex2`, `ex3-t1` .. `ex3-t4`) on a
// copy of `mesh`, solving the initial Darcy system. A mesh of the unit square
// is mapped onto the problem's domain; any other mesh is used as given. A
// nonpositive `final_time` selects the problem's own.
//
// # Safety
// `mesh` must be a live handle, `problem` a NUL-terminated string and `out` valid.
enum VemmdStatus vemmd_simulation_new(const struct VemmdMesh *mesh,
                                      const char *problem,
                                      double tau,
                                      double final_time,
                                      struct VemmdSimulation **out);

// Advances one time step; fails with `INVALID_ARGUMENT` once the run is finished.
//
// # Safety
// `sim` must be a live handle.
enum VemmdStatus vemmd_simulation_step(struct VemmdSimulation *sim);

// Current time and whether the final time has been reached. Either output may be null.
//
// # Safety
// `sim` must be a live handle; non-null outputs must be valid.
enum VemmdStatus vemmd_simulation_time(const struct VemmdSimulation *sim,
                                       double *t,
                                       bool *finished);

// Writes the cell averages of the concentration into `values`, which must
// hold exactly as many entries as the mesh has cells.
//
// # Safety
// `sim` must be a live handle and `values` point to `len` writable doubles.
enum VemmdStatus vemmd_simulation_concentration(const struct VemmdSimulation *sim,
                                                double *values,
                                                size_t len);

// Releases a simulation. Null is ignored.
//
// # Safety
// `sim` must come from this library and not have been freed.
void vemmd_simulation_free(struct VemmdSimulation *sim);

// Observed order `log(err_coarse / err_fine) / log(h_ratio)`.
//
// # Safety
// `order` must be a valid pointer.
enum VemmdStatus vemmd_compute_order(double err_coarse,
                                     double err_fine,
                                     double h_ratio,
                                     double *order);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VEMMD_H */
