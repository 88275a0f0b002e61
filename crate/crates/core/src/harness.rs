//! Error measures, convergence studies and field export.

use std::fmt::Write as _;
use std::path::Path;

use log::info;
use rayon::prelude::*;

use crate::error::{Result, VemError};
use crate::mesh::{MeshFamily, PolyMesh};
use crate::problems::{ExactSolution, ProblemSpec};
use crate::projectors::ProjectorSet;
use crate::solver::{run, SimulationConfig};
use crate::spaces::SolutionState;

/// L² errors of `Π₀u_h`, `p_h` and `Π₁c_h`, absolute and relative to the
/// norm of the exact field (relative falls back to absolute for a zero field).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub abs_u: f64,
    pub abs_p: f64,
    pub abs_c: f64,
    pub rel_u: f64,
    pub rel_p: f64,
    pub rel_c: f64,
}

fn relative(err: f64, norm: f64) -> f64 {
    if norm > 0.0 {
        err / norm
    } else {
        err
    }
}

pub fn compute_errors(projectors: &ProjectorSet, state: &SolutionState, exact: &ExactSolution) -> ErrorNorms {
    let t = state.t;
    let sums = projectors
        .cells
        .par_iter()
        .enumerate()
        .map(|(k, cell)| {
            let u0 = cell.project_velocity(&cell.gather(&state.u));
            let pc = cell.project_concentration(&cell.gather(&state.c));
            let mut s = [0.0; 6];
            for (x, w) in cell.data_quad.iter() {
                let ue = exact.u(x, t);
                let pe = exact.p(x, t);
                let ce = exact.c(x, t);
                s[0] += w * (ue - u0).norm_squared();
                s[1] += w * (pe - state.p[k]).powi(2);
                s[2] += w * (ce - cell.eval_p1(&pc, x)).powi(2);
                s[3] += w * ue.norm_squared();
                s[4] += w * pe * pe;
                s[5] += w * ce * ce;
            }
            s
        })
        .reduce(|| [0.0; 6], |a, b| std::array::from_fn(|i| a[i] + b[i]));
    let [eu, ep, ec, nu, np, nc] = sums.map(f64::sqrt);
    ErrorNorms { abs_u: eu, abs_p: ep, abs_c: ec, rel_u: relative(eu, nu), rel_p: relative(ep, np), rel_c: relative(ec, nc) }
}

/// `log(e_c / e_f) / log(h_ratio)`; `None` unless both errors are positive.
pub fn compute_order(err_coarse: f64, err_fine: f64, h_ratio: f64) -> Option<f64> {
    if err_coarse > 0.0 && err_fine > 0.0 && h_ratio > 0.0 && h_ratio != 1.0 {
        Some((err_coarse / err_fine).ln() / h_ratio.ln())
    } else {
        None
    }
}

/// One level of a convergence table (relative errors).
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub n: usize,
    pub h: f64,
    pub tau: f64,
    pub err_u: f64,
    pub order_u: Option<f64>,
    pub err_p: f64,
    pub order_p: Option<f64>,
    pub err_c: f64,
    pub order_c: Option<f64>,
    pub absolute: ErrorNorms,
    /// Largest local conservation defect over all Darcy solves of the level.
    pub conservation_defect: f64,
}

/// Coarsest subdivision and time step of a convergence table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub n_first: usize,
    pub tau_first: f64,
}

impl Schedule {
    /// Final time, five coarsest steps.
    pub fn final_time(&self) -> f64 {
        5.0 * self.tau_first
    }

    pub fn level(&self, level: usize) -> (usize, f64) {
        (self.n_first << level, self.tau_first / (1u64 << level) as f64)
    }
}

/// Table-driven schedule of the manufactured problems.
pub fn schedule(problem: &str, family: MeshFamily) -> Result<Schedule> {
    use MeshFamily::*;
    let (n_first, tau_first) = match (problem, family) {
        ("ex1", Triangular) => (2, 0.001),
        ("ex1", Square) => (4, 0.002),
        ("ex1", _) => (2, 0.002),
        ("ex2", Triangular) => (4, 0.0005),
        ("ex2", Square) => (4, 0.002),
        ("ex2", _) => (2, 0.002),
        _ => return Err(VemError::InvalidArgument(format!("no convergence schedule for `{problem}`"))),
    };
    Ok(Schedule { n_first, tau_first })
}

/// Result of one convergence level before orders are filled in.
fn run_level(problem: &ProblemSpec, family: MeshFamily, sched: Schedule, level: usize, seed: u64) -> Result<ErrorRow> {
    let exact = problem
        .exact
        .clone()
        .ok_or_else(|| VemError::InvalidArgument(format!("{} has no exact solution", problem.name)))?;
    let (n, tau) = sched.level(level);
    let mesh = problem.mesh(family, n, seed)?;
    let h = mesh.h();
    let config = SimulationConfig::new(tau, sched.final_time());
    let projectors = ProjectorSet::new(&mesh, 0)?;
    let out = run(mesh, problem.clone(), config)?;
    let e = compute_errors(&projectors, out.final_state(), &exact);
    info!(
        "{} {family} n={n}: h={h:.6} τ={tau} err_u={:.6} err_p={:.6} err_c={:.6}",
        problem.name, e.rel_u, e.rel_p, e.rel_c
    );
    Ok(ErrorRow {
        n,
        h,
        tau,
        err_u: e.rel_u,
        order_u: None,
        err_p: e.rel_p,
        order_p: None,
        err_c: e.rel_c,
        order_c: None,
        absolute: e,
        conservation_defect: out.max_conservation_defect(),
    })
}

/// Runs `levels` refinements (in parallel) and fills in the orders.
pub fn run_convergence(problem: &ProblemSpec, family: MeshFamily, levels: usize, seed: u64) -> Result<Vec<ErrorRow>> {
    let sched = schedule(&problem.name, family)?;
    let mut rows =
        (0..levels).into_par_iter().map(|l| run_level(problem, family, sched, l, seed)).collect::<Result<Vec<_>>>()?;
    for i in 1..rows.len() {
        let ratio = rows[i - 1].h / rows[i].h;
        let (c, f) = (rows[i - 1].clone(), &mut rows[i]);
        f.order_u = compute_order(c.err_u, f.err_u, ratio);
        f.order_p = compute_order(c.err_p, f.err_p, ratio);
        f.order_c = compute_order(c.err_c, f.err_c, ratio);
    }
    Ok(rows)
}

fn fmt_order(o: Option<f64>) -> String {
    o.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"))
}

/// Convergence table as CSV, missing orders written as `-`.
pub fn rows_to_csv(rows: &[ErrorRow]) -> String {
    let mut s = String::from("h,tau,err_u,order_u,err_p,order_p,err_c,order_c\n");
    for r in rows {
        writeln!(
            s,
            "{:.6},{},{:.6},{},{:.6},{},{:.6},{}",
            r.h,
            r.tau,
            r.err_u,
            fmt_order(r.order_u),
            r.err_p,
            fmt_order(r.order_p),
            r.err_c,
            fmt_order(r.order_c)
        )
        .unwrap();
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Vtk,
}

impl std::str::FromStr for ExportFormat {
    type Err = VemError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "vtk" => Ok(ExportFormat::Vtk),
            _ => Err(VemError::InvalidArgument(format!("unknown export format `{s}` (csv or vtk)"))),
        }
    }
}

impl ExportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::Csv => "csv",
            ExportFormat::Vtk => "vtk",
        }
    }
}

/// Per-cell values written by [`export_fields`].
#[derive(Debug, Clone, PartialEq)]
pub struct CellFields {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `Π₁c_h` at the centroid.
    pub c: Vec<f64>,
    pub p: Vec<f64>,
    pub ux: Vec<f64>,
    pub uy: Vec<f64>,
}

pub fn cell_fields(projectors: &ProjectorSet, state: &SolutionState) -> CellFields {
    let n = projectors.len();
    let mut f = CellFields {
        x: Vec::with_capacity(n),
        y: Vec::with_capacity(n),
        c: Vec::with_capacity(n),
        p: state.p.clone(),
        ux: Vec::with_capacity(n),
        uy: Vec::with_capacity(n),
    };
    for cell in &projectors.cells {
        f.x.push(cell.centroid.x);
        f.y.push(cell.centroid.y);
        f.c.push(cell.project_concentration(&cell.gather(&state.c))[0]);
        let u = cell.project_velocity(&cell.gather(&state.u));
        f.ux.push(u.x);
        f.uy.push(u.y);
    }
    f
}

pub fn fields_to_csv(f: &CellFields) -> String {
    let mut s = String::from("x,y,c,p,ux,uy\n");
    for k in 0..f.x.len() {
        writeln!(s, "{},{},{},{},{},{}", f.x[k], f.y[k], f.c[k], f.p[k], f.ux[k], f.uy[k]).unwrap();
    }
    s
}

pub fn fields_to_vtk(mesh: &PolyMesh, f: &CellFields, t: f64) -> String {
    let mut s = String::new();
    writeln!(s, "# vtk DataFile Version 3.0\nvemmd t={t}\nASCII\nDATASET UNSTRUCTURED_GRID").unwrap();
    writeln!(s, "POINTS {} double", mesh.vertices().len()).unwrap();
    for v in mesh.vertices() {
        writeln!(s, "{} {} 0", v.x, v.y).unwrap();
    }
    let size: usize = mesh.cells().iter().map(|c| c.len() + 1).sum();
    writeln!(s, "CELLS {} {size}", mesh.num_cells()).unwrap();
    for c in mesh.cells() {
        let ids: Vec<String> = c.iter().map(|i| i.to_string()).collect();
        writeln!(s, "{} {}", c.len(), ids.join(" ")).unwrap();
    }
    writeln!(s, "CELL_TYPES {}", mesh.num_cells()).unwrap();
    for _ in mesh.cells() {
        s.push_str("7\n");
    }
    writeln!(s, "CELL_DATA {}", mesh.num_cells()).unwrap();
    for (name, vals) in [("c", &f.c), ("p", &f.p)] {
        writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default").unwrap();
        for v in vals {
            writeln!(s, "{v}").unwrap();
        }
    }
    s.push_str("VECTORS u double\n");
    for k in 0..f.ux.len() {
        writeln!(s, "{} {} 0", f.ux[k], f.uy[k]).unwrap();
    }
    s
}

/// Writes cell data of `state` to `path`.
pub fn export_fields(
    mesh: &PolyMesh,
    projectors: &ProjectorSet,
    state: &SolutionState,
    path: &Path,
    format: ExportFormat,
) -> Result<()> {
    let f = cell_fields(projectors, state);
    let text = match format {
        ExportFormat::Csv => fields_to_csv(&f),
        ExportFormat::Vtk => fields_to_vtk(mesh, &f, state.t),
    };
    std::fs::write(path, text).map_err(|source| VemError::Io { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate;
    use crate::problems::example1;

    #[test]
    fn orders() {
        assert!((compute_order(0.503730, 0.265467, 2.0).unwrap() - 0.9241).abs() < 5e-5);
        assert_eq!(compute_order(0.3, 0.3, 2.0), Some(0.0));
        assert_eq!(compute_order(0.4, 0.1, 2.0), Some(2.0));
        assert_eq!(compute_order(0.0, 0.1, 2.0), None);
        assert_eq!(compute_order(0.2, 0.1, 2.0), Some(1.0));
    }

    #[test]
    fn zero_fields_have_zero_error() {
        let m = generate(MeshFamily::Square, 3, 0).unwrap();
        let ps = ProjectorSet::new(&m, 0).unwrap();
        let s = SolutionState { t: 0.0, u: vec![0.0; m.num_edges()], p: vec![0.0; 9], c: vec![0.0; m.num_edges()] };
        let e = compute_errors(&ps, &s, &example1().exact.unwrap());
        assert_eq!((e.abs_u, e.abs_p, e.abs_c), (0.0, 0.0, 0.0));
        assert_eq!((e.rel_u, e.rel_p, e.rel_c), (0.0, 0.0, 0.0));
    }

    #[test]
    fn schedules() {
        let s = schedule("ex1", MeshFamily::Square).unwrap();
        assert_eq!(s.level(0), (4, 0.002));
        assert_eq!(s.level(4), (64, 0.000125));
        assert_eq!(s.final_time(), 0.01);
        assert_eq!(schedule("ex1", MeshFamily::Triangular).unwrap().final_time(), 0.005);
        assert!(schedule("ex3-t1", MeshFamily::Square).is_err());
    }

    #[test]
    fn csv_rows() {
        let m = generate(MeshFamily::Square, 2, 0).unwrap();
        let ps = ProjectorSet::new(&m, 0).unwrap();
        let s = SolutionState { t: 0.0, u: vec![0.0; m.num_edges()], p: vec![1.5; 4], c: vec![0.25; m.num_edges()] };
        let text = fields_to_csv(&cell_fields(&ps, &s));
        assert_eq!(text.lines().count(), 5);
        assert!(text.lines().nth(1).unwrap().starts_with("0.25,0.25,0.25,1.5,0,0"));
        let vtk = fields_to_vtk(&m, &cell_fields(&ps, &s), 0.0);
        assert!(vtk.contains("CELLS 4 20") && vtk.contains("CELL_TYPES 4"));
    }
}
