//! C interface to the `vemmd` solver.
//!
//! Every function returns a [`VemmdStatus`]; on failure the message is kept
//! per thread and read with [`vemmd_last_error_message`]. Meshes and
//! simulations are opaque handles owned by the caller and released with the
//! matching `_free` function. Strings returned by the library are released
//! with [`vemmd_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use vemmd::harness::{cell_fields, compute_order};
use vemmd::mesh::{generate, MeshFamily, Point, PolyMesh};
use vemmd::problems::by_name;
use vemmd::solver::{Simulation, SimulationConfig};
use vemmd::VemError;

/// Result codes of every exported function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VemmdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidMesh = 3,
    SolverFailure = 4,
    Io = 5,
    /// A Rust panic was caught at the boundary.
    Internal = 6,
}

/// A polygonal mesh.
pub struct VemmdMesh {
    mesh: PolyMesh,
}

/// A time-stepping run on a mesh.
pub struct VemmdSimulation {
    sim: Simulation,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs were replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &VemError) -> VemmdStatus {
    match e {
        VemError::Mesh(_) | VemError::Json(_) | VemError::DegenerateGeometry(_) | VemError::DegenerateCell { .. } => {
            VemmdStatus::InvalidMesh
        }
        VemError::Solver { .. } | VemError::IncompatibleSources { .. } | VemError::Step { .. } => VemmdStatus::SolverFailure,
        VemError::Io { .. } => VemmdStatus::Io,
        _ => VemmdStatus::InvalidArgument,
    }
}

/// Runs `f`, turning errors and panics into a status plus the last-error message.
fn guard(f: impl FnOnce() -> Result<(), (VemmdStatus, String)>) -> VemmdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VemmdStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            VemmdStatus::Internal
        }
    }
}

fn vem(e: VemError) -> (VemmdStatus, String) {
    let mut msg = e.to_string();
    let mut src = std::error::Error::source(&e);
    while let Some(s) = src {
        msg.push_str(": ");
        msg.push_str(&s.to_string());
        src = s.source();
    }
    (status_of(&e), msg)
}

fn null(name: &str) -> (VemmdStatus, String) {
    (VemmdStatus::NullPointer, format!("`{name}` is null"))
}

unsafe fn read_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, (VemmdStatus, String)> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (VemmdStatus::InvalidArgument, format!("`{name}` is not UTF-8")))
}

unsafe fn out_ref<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, (VemmdStatus, String)> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn in_ref<'a, T>(p: *const T, name: &str) -> Result<&'a T, (VemmdStatus, String)> {
    p.as_ref().ok_or_else(|| null(name))
}

/// Message of the last failed call on this thread, or null if there was none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn vemmd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Forgets the last error of this thread.
#[no_mangle]
pub extern "C" fn vemmd_clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn vemmd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Generates a unit-square mesh. `family` is one of `triangular`, `square`,
/// `voronoi_structured`, `voronoi_random`, `concave`.
///
/// # Safety
/// `family` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vemmd_mesh_generate(
    family: *const c_char,
    n: usize,
    seed: u64,
    out: *mut *mut VemmdMesh,
) -> VemmdStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let family: MeshFamily = read_str(family, "family")?.parse().map_err(vem)?;
        let mesh = generate(family, n, seed).map_err(vem)?;
        *out = Box::into_raw(Box::new(VemmdMesh { mesh }));
        Ok(())
    })
}

/// Builds a mesh from its JSON form (`{"vertices": [[x, y], ...], "cells": [[i, j, k, ...], ...]}`).
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vemmd_mesh_from_json(json: *const c_char, out: *mut *mut VemmdMesh) -> VemmdStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let mesh = PolyMesh::from_json(read_str(json, "json")?).map_err(vem)?;
        *out = Box::into_raw(Box::new(VemmdMesh { mesh }));
        Ok(())
    })
}

/// JSON form of the mesh; release with [`vemmd_string_free`].
///
/// # Safety
/// `mesh` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vemmd_mesh_to_json(mesh: *const VemmdMesh, out: *mut *mut c_char) -> VemmdStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let text = in_ref(mesh, "mesh")?.mesh.to_json();
        *out = CString::new(text).map_err(|e| (VemmdStatus::Internal, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// Vertex, edge and cell counts and the mesh size `h`. Any output pointer may be null.
///
/// # Safety
/// `mesh` must be a live handle; non-null outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn vemmd_mesh_info(
    mesh: *const VemmdMesh,
    num_vertices: *mut usize,
    num_edges: *mut usize,
    num_cells: *mut usize,
    h: *mut f64,
) -> VemmdStatus {
    guard(|| {
        let m = &in_ref(mesh, "mesh")?.mesh;
        if let Some(v) = num_vertices.as_mut() {
            *v = m.vertices().len();
        }
        if let Some(v) = num_edges.as_mut() {
            *v = m.num_edges();
        }
        if let Some(v) = num_cells.as_mut() {
            *v = m.num_cells();
        }
        if let Some(v) = h.as_mut() {
            *v = m.h();
        }
        Ok(())
    })
}

/// Area and centroid of cell `cell`.
///
/// # Safety
/// `mesh` must be a live handle; outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn vemmd_mesh_cell(
    mesh: *const VemmdMesh,
    cell: usize,
    area: *mut f64,
    cx: *mut f64,
    cy: *mut f64,
) -> VemmdStatus {
    guard(|| {
        let m = &in_ref(mesh, "mesh")?.mesh;
        if cell >= m.num_cells() {
            return Err((VemmdStatus::InvalidArgument, format!("cell {cell} out of range ({} cells)", m.num_cells())));
        }
        let g = m.geometry(cell);
        *out_ref(area, "area")? = g.area;
        *out_ref(cx, "cx")? = g.centroid.x;
        *out_ref(cy, "cy")? = g.centroid.y;
        Ok(())
    })
}

/// Releases a mesh. Null is ignored.
///
/// # Safety
/// `mesh` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn vemmd_mesh_free(mesh: *mut VemmdMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Starts a run of the named problem (`ex1`, `ex2`, `ex3-t1` .. `ex3-t4`) on a
/// copy of `mesh`, solving the initial Darcy system. A mesh of the unit square
/// is mapped onto the problem's domain; any other mesh is used as given. A
/// nonpositive `final_time` selects the problem's own.
///
/// # Safety
/// `mesh` must be a live handle, `problem` a NUL-terminated string and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn vemmd_simulation_new(
    mesh: *const VemmdMesh,
    problem: *const c_char,
    tau: f64,
    final_time: f64,
    out: *mut *mut VemmdSimulation,
) -> VemmdStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let mesh = &in_ref(mesh, "mesh")?.mesh;
        let spec = by_name(read_str(problem, "problem")?).map_err(vem)?;
        let (lo, hi) = mesh.bounding_box();
        let unit = lo == Point::origin() && hi == Point::new(1.0, 1.0);
        let mesh = if unit && spec.side != 1.0 { mesh.scaled(spec.side, spec.origin) } else { mesh.clone() };
        let t_end = if final_time > 0.0 { final_time } else { spec.final_time };
        let sim = Simulation::new(mesh, spec, SimulationConfig::new(tau, t_end)).map_err(vem)?;
        *out = Box::into_raw(Box::new(VemmdSimulation { sim }));
        Ok(())
    })
}

/// Advances one time step; fails with `INVALID_ARGUMENT` once the run is finished.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn vemmd_simulation_step(sim: *mut VemmdSimulation) -> VemmdStatus {
    guard(|| {
        let s = &mut out_ref(sim, "sim")?.sim;
        if s.is_finished() {
            return Err((VemmdStatus::InvalidArgument, "simulation already reached its final time".into()));
        }
        s.step().map_err(vem)?;
        Ok(())
    })
}

/// Current time and whether the final time has been reached. Either output may be null.
///
/// # Safety
/// `sim` must be a live handle; non-null outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn vemmd_simulation_time(sim: *const VemmdSimulation, t: *mut f64, finished: *mut bool) -> VemmdStatus {
    guard(|| {
        let s = &in_ref(sim, "sim")?.sim;
        if let Some(t) = t.as_mut() {
            *t = s.state().t;
        }
        if let Some(f) = finished.as_mut() {
            *f = s.is_finished();
        }
        Ok(())
    })
}

/// Writes the cell averages of the concentration into `values`, which must
/// hold exactly as many entries as the mesh has cells.
///
/// # Safety
/// `sim` must be a live handle and `values` point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn vemmd_simulation_concentration(
    sim: *const VemmdSimulation,
    values: *mut f64,
    len: usize,
) -> VemmdStatus {
    guard(|| {
        let s = &in_ref(sim, "sim")?.sim;
        if values.is_null() {
            return Err(null("values"));
        }
        let n = s.mesh.num_cells();
        if len != n {
            return Err((VemmdStatus::InvalidArgument, format!("buffer holds {len} values, mesh has {n} cells")));
        }
        let f = cell_fields(&s.projectors, s.state());
        std::slice::from_raw_parts_mut(values, len).copy_from_slice(&f.c);
        Ok(())
    })
}

/// Releases a simulation. Null is ignored.
///
/// # Safety
/// `sim` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn vemmd_simulation_free(sim: *mut VemmdSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Observed order `log(err_coarse / err_fine) / log(h_ratio)`.
///
/// # Safety
/// `order` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vemmd_compute_order(err_coarse: f64, err_fine: f64, h_ratio: f64, order: *mut f64) -> VemmdStatus {
    guard(|| {
        let out = out_ref(order, "order")?;
        *out = compute_order(err_coarse, err_fine, h_ratio).ok_or_else(|| {
            (VemmdStatus::InvalidArgument, "errors must be positive and the mesh ratio positive and not 1".to_string())
        })?;
        Ok(())
    })
}
