//! Global assembly and the decoupled backward Euler time loop.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use log::{debug, info, warn};
use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Result, VemError};
use crate::forms::{self, cell_mean};
use crate::mesh::PolyMesh;
use crate::problems::{BoundSources, ProblemSpec};
use crate::projectors::{ProjectorSet, CONSISTENCY_DEGREE, DATA_DEGREE};
use crate::spaces::{apply_velocity_bc, interpolate_concentration, DofMap, SolutionState, VelocityBoundary};

/// Relative tolerance of the source compatibility check.
pub const COMPATIBILITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub tau: f64,
    pub final_time: f64,
    /// Polynomial degree; only 0 is implemented.
    pub k: usize,
    /// Largest accepted relative residual of a linear solve.
    pub solver_tol: f64,
    pub consistency_degree: usize,
    pub data_degree: usize,
    /// Keep every `output_every`-th state; 0 keeps only the first and last.
    pub output_every: usize,
}

impl SimulationConfig {
    pub fn new(tau: f64, final_time: f64) -> Self {
        SimulationConfig {
            tau,
            final_time,
            k: 0,
            solver_tol: 1e-10,
            consistency_degree: CONSISTENCY_DEGREE,
            data_degree: DATA_DEGREE,
            output_every: 0,
        }
    }

    /// Number of steps `N = round(T / τ)`; warns when `T` is not a multiple of `τ`.
    pub fn num_steps(&self) -> Result<usize> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(VemError::InvalidArgument(format!("time step must be positive, got {}", self.tau)));
        }
        if !(self.final_time >= 0.0 && self.final_time.is_finite()) {
            return Err(VemError::InvalidArgument(format!("final time must be nonnegative, got {}", self.final_time)));
        }
        let n = (self.final_time / self.tau).round();
        if (n * self.tau - self.final_time).abs() >= 1e-9 * self.tau {
            warn!("final time {} is not a multiple of τ = {}; using T = {}", self.final_time, self.tau, n * self.tau);
        }
        Ok(n as usize)
    }
}

/// Sparse system assembled from triplets; duplicates are summed.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub dim: usize,
    pub triplets: Vec<(usize, usize, f64)>,
    pub rhs: Vec<f64>,
    pub solution: Vec<f64>,
    /// `‖b - A x‖ / ‖b‖`, or the absolute residual when `b = 0`.
    pub residual: f64,
}

impl LinearSystem {
    pub fn new(dim: usize, triplets: Vec<(usize, usize, f64)>, rhs: Vec<f64>) -> Self {
        LinearSystem { dim, triplets, rhs, solution: Vec::new(), residual: f64::NAN }
    }

    /// `‖b - A x‖ / ‖b‖`, or the absolute residual when `b = 0`.
    pub fn relative_residual(&self, x: &[f64]) -> f64 {
        let norm_b = norm(&self.rhs);
        norm(&self.residual_of(x)) / if norm_b > 0.0 { norm_b } else { 1.0 }
    }

    fn residual_of(&self, x: &[f64]) -> Vec<f64> {
        let mut r = self.rhs.clone();
        for &(i, j, v) in &self.triplets {
            r[i] -= v * x[j];
        }
        r
    }

    /// Sparse LU factorization of the assembled matrix.
    pub fn factor(&self, system: &'static str) -> Result<Factorization> {
        let fail = |reason: String| VemError::Solver { system, reason };
        let start = std::time::Instant::now();
        let trips: Vec<Triplet<usize, usize, f64>> =
            self.triplets.iter().map(|&(i, j, v)| Triplet::new(i, j, v)).collect();
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(self.dim, self.dim, &trips)
            .map_err(|e| fail(format!("{e:?}")))?;
        let assembled = start.elapsed();
        let lu = a.sp_lu().map_err(|e| fail(format!("factorization: {e:?}")))?;
        debug!("{system}: dim {}, nnz {}, assembly {assembled:?}, factorization {:?}", self.dim, a.compute_nnz(), start.elapsed() - assembled);
        Ok(Factorization { dim: self.dim, lu })
    }

    /// Sparse LU solve followed by iterative refinement while the residual is too large.
    pub fn solve(&mut self, system: &'static str, tol: f64) -> Result<&[f64]> {
        let f = self.factor(system)?;
        let x = refine(self, f.solve(&self.rhs), tol, |r| f.solve(r));
        let res = self.relative_residual(&x);
        if !(res <= tol) {
            return Err(VemError::Solver { system, reason: format!("relative residual {res:e} exceeds tolerance {tol:e}") });
        }
        self.solution = x;
        self.residual = res;
        Ok(&self.solution)
    }
}

/// Factors of a [`LinearSystem`] matrix.
pub struct Factorization {
    dim: usize,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl Factorization {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut col = Col::<f64>::from_fn(self.dim, |i| b[i]);
        self.lu.solve_in_place(col.as_mut());
        (0..self.dim).map(|i| col[i]).collect()
    }
}

const REFINEMENT_STEPS: usize = 3;

/// Local (row, column, value) contributions of one cell.
type Triplets = Vec<(usize, usize, f64)>;

/// Corrects `x` by `apply(b - A x)` until the residual meets `tol`.
fn refine(system: &LinearSystem, mut x: Vec<f64>, tol: f64, apply: impl Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
    for _ in 0..REFINEMENT_STEPS {
        if system.relative_residual(&x) <= tol {
            break;
        }
        let dx = apply(&system.residual_of(&x));
        for (xi, d) in x.iter_mut().zip(dx) {
            *xi += d;
        }
    }
    x
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn push_local(out: &mut Vec<(usize, usize, f64)>, rows: &[usize], cols: &[usize], m: &DMatrix<f64>) {
    for (i, &r) in rows.iter().enumerate() {
        for (j, &c) in cols.iter().enumerate() {
            out.push((r, c, m[(i, j)]));
        }
    }
}

/// Velocity, pressure and solve diagnostics of one Darcy solve.
#[derive(Debug, Clone, PartialEq)]
pub struct DarcySolution {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub multiplier: f64,
    pub residual: f64,
    /// Largest `|∫_K div u_h - ∫_K G|` over cells.
    pub conservation_defect: f64,
}

/// Solves the mixed Darcy system at time `t` with concentration DOFs `c`.
#[allow(clippy::too_many_arguments)]
pub fn solve_darcy(
    mesh: &PolyMesh,
    projectors: &ProjectorSet,
    dofs: &DofMap,
    problem: &ProblemSpec,
    sources: &BoundSources,
    c: &[f64],
    t: f64,
    bc: &VelocityBoundary,
    tol: f64,
) -> Result<DarcySolution> {
    let nc = mesh.num_cells();
    let g: Vec<f64> = (0..nc).into_par_iter().map(|k| sources.g_integral(mesh, k, t)).collect();
    let edge_fluxes: Vec<f64> = match bc {
        VelocityBoundary::NoFlow => Vec::new(),
        VelocityBoundary::Prescribed(_) => mesh
            .boundary_edges()
            .iter()
            .map(|&e| {
                let edge = &mesh.edges()[e];
                let k = edge.cells.0;
                let sign = mesh.cell_edges(k).iter().find(|ce| ce.edge == e).map_or(1.0, |ce| ce.sign);
                sign * edge.length * bc.value(e)
            })
            .collect(),
    };
    let total: f64 = g.iter().sum::<f64>() - edge_fluxes.iter().sum::<f64>();
    let scale: f64 = g.iter().chain(&edge_fluxes).map(|x| x.abs()).sum();
    if total.abs() > COMPATIBILITY_TOL * scale.max(f64::MIN_POSITIVE) && total.abs() > 0.0 {
        return Err(VemError::IncompatibleSources { time: t, integral: total, tolerance: COMPATIBILITY_TOL * scale });
    }

    let coeffs = &problem.coefficients;
    let gravity = coeffs.gravity.as_ref();
    let locals: Vec<(Triplets, Vec<(usize, f64)>)> = (0..nc)
        .into_par_iter()
        .map(|k| {
            let cell = projectors.cell(k);
            let c_local = cell.gather(c);
            let a = forms::local_darcy(cell, &c_local, |x, ck| (coeffs.inverse_mobility)(x, ck));
            let b = forms::local_div(cell);
            let mut trips = Vec::with_capacity(cell.num_dofs() * (cell.num_dofs() + 2) + 2);
            push_local(&mut trips, &cell.edges, &cell.edges, &a);
            let pk = dofs.pressure(k);
            for (i, &e) in cell.edges.iter().enumerate() {
                trips.push((pk, e, b[i]));
                trips.push((e, pk, b[i]));
            }
            trips.push((pk, dofs.multiplier(), cell.area));
            trips.push((dofs.multiplier(), pk, cell.area));
            let f = forms::darcy_rhs(cell, &c_local, gravity);
            let mut rhs: Vec<(usize, f64)> = cell.edges.iter().zip(f.iter()).map(|(&e, &v)| (e, v)).collect();
            rhs.push((pk, -g[k]));
            (trips, rhs)
        })
        .collect();
    let mut rhs = vec![0.0; dofs.darcy_dim()];
    let mut triplets = Vec::new();
    for (t_local, r_local) in locals {
        triplets.extend(t_local);
        for (i, v) in r_local {
            rhs[i] += v;
        }
    }
    let triplets = apply_velocity_bc(dofs, triplets, &mut rhs, bc);
    let areas: Vec<f64> = projectors.cells.iter().map(|c| c.area).collect();
    let system = LinearSystem::new(dofs.darcy_dim(), triplets, rhs);
    let (x, residual) = solve_bordered(&system, dofs, &areas, tol)?;
    let u = x[..dofs.num_edges].to_vec();
    let p = x[dofs.num_edges..dofs.num_edges + nc].to_vec();
    let multiplier = x[dofs.multiplier()];
    let conservation_defect = (0..nc)
        .map(|k| {
            let cell = projectors.cell(k);
            (cell.divergence(&cell.gather(&u)) * cell.area - g[k]).abs()
        })
        .fold(0.0, f64::max);
    Ok(DarcySolution { u, p, multiplier, residual, conservation_defect })
}

/// Solves the Darcy system bordered by the zero-mean row without factoring the
/// dense border. Summing the divergence rows gives the multiplier, since the
/// interior fluxes cancel and boundary rows are already eliminated. The rest
/// is solved with the first cell pressure pinned, then shifted to meet the
/// mean constraint. Refinement runs against the full bordered system, whose
/// residual is returned.
fn solve_bordered(full: &LinearSystem, dofs: &DofMap, areas: &[f64], tol: f64) -> Result<(Vec<f64>, f64)> {
    let pin = dofs.pressure(0);
    let border = dofs.multiplier();
    let total_area: f64 = areas.iter().sum();
    let reduced = |i: usize| if i < pin { i } else { i - 1 };
    let triplets = full
        .triplets
        .iter()
        .filter(|&&(i, j, _)| i != pin && j != pin && i != border && j != border)
        .map(|&(i, j, v)| (reduced(i), reduced(j), v))
        .collect();
    let factors = LinearSystem::new(dofs.darcy_dim() - 2, triplets, Vec::new()).factor("darcy")?;
    let apply = |b: &[f64]| -> Vec<f64> {
        let lambda = (0..dofs.num_cells).map(|k| b[dofs.pressure(k)]).sum::<f64>() / total_area;
        let rhs: Vec<f64> = (0..border)
            .filter(|&i| i != pin)
            .map(|i| if i > pin { b[i] - areas[i - pin] * lambda } else { b[i] })
            .collect();
        let y = factors.solve(&rhs);
        let mut x = Vec::with_capacity(dofs.darcy_dim());
        x.extend_from_slice(&y[..pin]);
        x.push(0.0);
        x.extend_from_slice(&y[pin..]);
        let shift = ((0..dofs.num_cells).map(|k| areas[k] * x[dofs.pressure(k)]).sum::<f64>() - b[border]) / total_area;
        for k in 0..dofs.num_cells {
            x[dofs.pressure(k)] -= shift;
        }
        x.push(lambda);
        x
    };
    let x = refine(full, apply(&full.rhs), tol, apply);
    let residual = full.relative_residual(&x);
    if !(residual <= tol) {
        return Err(VemError::Solver {
            system: "darcy",
            reason: format!("relative residual {residual:e} of the bordered system exceeds tolerance {tol:e}"),
        });
    }
    Ok((x, residual))
}

/// Cached time-independent transport data.
#[derive(Debug, Clone)]
pub struct TransportCache {
    pub mass: Vec<DMatrix<f64>>,
    pub porosity_means: Vec<f64>,
}

impl TransportCache {
    pub fn new(projectors: &ProjectorSet, problem: &ProblemSpec) -> Self {
        let phi = &problem.coefficients.porosity;
        let (mass, porosity_means) = projectors
            .cells
            .par_iter()
            .map(|cell| (forms::local_mass(cell, |x| phi(x)), cell_mean(cell, |x| phi(x))))
            .unzip();
        TransportCache { mass, porosity_means }
    }
}

/// One backward Euler transport step from `c_prev` to `t_next` with lagged velocity `u`.
#[allow(clippy::too_many_arguments)]
pub fn solve_transport(
    projectors: &ProjectorSet,
    dofs: &DofMap,
    problem: &ProblemSpec,
    sources: &BoundSources,
    cache: &TransportCache,
    u: &[f64],
    c_prev: &[f64],
    t_next: f64,
    tau: f64,
    tol: f64,
) -> Result<(Vec<f64>, f64)> {
    let disp = problem.coefficients.dispersion;
    let locals: Vec<(Triplets, Vec<f64>)> = (0..projectors.len())
        .into_par_iter()
        .map(|k| {
            let cell = projectors.cell(k);
            let u_local = cell.gather(u);
            let c_local = cell.gather(c_prev);
            let m = &cache.mass[k];
            let d = forms::local_diffusion(cell, &u_local, cache.porosity_means[k], &disp);
            let th = forms::local_convection(cell, &u_local, |x| sources.q_sum(k, x, t_next));
            let lhs = m / tau + th + d;
            let mut trips = Vec::with_capacity(cell.num_dofs() * cell.num_dofs());
            push_local(&mut trips, &cell.edges, &cell.edges, &lhs);
            let load = forms::transport_rhs(cell, |x| sources.transport_load(k, x, t_next));
            let rhs = m * nalgebra::DVector::from_vec(c_local) / tau + load;
            (trips, rhs.iter().copied().collect())
        })
        .collect();
    let mut rhs = vec![0.0; dofs.concentration_dim()];
    let mut triplets = Vec::new();
    for (k, (t_local, r_local)) in locals.into_iter().enumerate() {
        triplets.extend(t_local);
        for (&e, v) in projectors.cell(k).edges.iter().zip(r_local) {
            rhs[e] += v;
        }
    }
    let mut system = LinearSystem::new(dofs.concentration_dim(), triplets, rhs);
    system.solve("transport", tol)?;
    Ok((system.solution, system.residual))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    pub step: usize,
    pub t: f64,
    pub darcy_residual: f64,
    /// NaN for the initial Darcy solve.
    pub transport_residual: f64,
    pub conservation_defect: f64,
}

/// Time stepper holding the mesh, cached operators and the current state.
pub struct Simulation {
    pub mesh: PolyMesh,
    pub problem: ProblemSpec,
    pub config: SimulationConfig,
    pub projectors: ProjectorSet,
    pub dofs: DofMap,
    pub sources: BoundSources,
    pub cache: TransportCache,
    pub bc: VelocityBoundary,
    pub num_steps: usize,
    step: usize,
    state: SolutionState,
    diagnostics: Vec<StepDiagnostics>,
}

impl Simulation {
    /// Interpolates `c₀` and solves for the initial velocity and pressure.
    pub fn new(mesh: PolyMesh, problem: ProblemSpec, config: SimulationConfig) -> Result<Self> {
        let num_steps = config.num_steps()?;
        let projectors = ProjectorSet::with_degrees(&mesh, config.k, config.consistency_degree, config.data_degree)?;
        let dofs = DofMap::new(&mesh);
        let sources = problem.sources.bind(&mesh)?;
        let cache = TransportCache::new(&projectors, &problem);
        let c0 = &problem.initial_concentration;
        let c = interpolate_concentration(&mesh, |x, _| c0(x), 0.0);
        info!(
            "{}: {} cells, {} edges, h = {:.6}, τ = {}, N = {}",
            problem.name,
            mesh.num_cells(),
            mesh.num_edges(),
            mesh.h(),
            config.tau,
            num_steps
        );
        let bc = VelocityBoundary::NoFlow;
        let darcy = solve_darcy(&mesh, &projectors, &dofs, &problem, &sources, &c, 0.0, &bc, config.solver_tol)
            .map_err(|e| VemError::Step { step: 0, source: Box::new(e) })?;
        let diag = StepDiagnostics {
            step: 0,
            t: 0.0,
            darcy_residual: darcy.residual,
            transport_residual: f64::NAN,
            conservation_defect: darcy.conservation_defect,
        };
        let state = SolutionState { t: 0.0, u: darcy.u, p: darcy.p, c };
        Ok(Simulation {
            mesh,
            problem,
            config,
            projectors,
            dofs,
            sources,
            cache,
            bc,
            num_steps,
            step: 0,
            state,
            diagnostics: vec![diag],
        })
    }

    pub fn state(&self) -> &SolutionState {
        &self.state
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.num_steps
    }

    pub fn diagnostics(&self) -> &[StepDiagnostics] {
        &self.diagnostics
    }

    /// Transport to `t_{n+1}` with `u^n`, then Darcy at `t_{n+1}` with `c^{n+1}`.
    pub fn step(&mut self) -> Result<&SolutionState> {
        let n = self.step + 1;
        let wrap = |e: VemError| VemError::Step { step: n, source: Box::new(e) };
        let t_next = n as f64 * self.config.tau;
        let tol = self.config.solver_tol;
        let (c, transport_residual) = solve_transport(
            &self.projectors,
            &self.dofs,
            &self.problem,
            &self.sources,
            &self.cache,
            &self.state.u,
            &self.state.c,
            t_next,
            self.config.tau,
            tol,
        )
        .map_err(wrap)?;
        let darcy = solve_darcy(
            &self.mesh,
            &self.projectors,
            &self.dofs,
            &self.problem,
            &self.sources,
            &c,
            t_next,
            &self.bc,
            tol,
        )
        .map_err(wrap)?;
        debug!(
            "step {n}: t = {t_next}, darcy residual {:e}, transport residual {:e}, conservation defect {:e}",
            darcy.residual, transport_residual, darcy.conservation_defect
        );
        self.diagnostics.push(StepDiagnostics {
            step: n,
            t: t_next,
            darcy_residual: darcy.residual,
            transport_residual,
            conservation_defect: darcy.conservation_defect,
        });
        self.state = SolutionState { t: t_next, u: darcy.u, p: darcy.p, c };
        self.step = n;
        Ok(&self.state)
    }
}

/// States kept by [`run`] and the per-step diagnostics.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub states: Vec<SolutionState>,
    pub diagnostics: Vec<StepDiagnostics>,
    pub h: f64,
}

impl RunOutput {
    pub fn final_state(&self) -> &SolutionState {
        self.states.last().expect("a run keeps at least the initial state")
    }

    pub fn max_conservation_defect(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.conservation_defect).fold(0.0, f64::max)
    }
}

/// Runs the full time loop.
pub fn run(mesh: PolyMesh, problem: ProblemSpec, config: SimulationConfig) -> Result<RunOutput> {
    let every = config.output_every;
    let h = mesh.h();
    let mut sim = Simulation::new(mesh, problem, config)?;
    let mut states = vec![sim.state().clone()];
    let total = sim.num_steps;
    while !sim.is_finished() {
        let n = sim.step_index() + 1;
        let s = sim.step()?;
        if n == total || (every > 0 && n % every == 0) {
            states.push(s.clone());
        }
    }
    let max_darcy = sim.diagnostics().iter().map(|d| d.darcy_residual).fold(0.0, f64::max);
    info!(
        "{}: finished {} steps, max Darcy residual {:e}, max conservation defect {:e}",
        sim.problem.name,
        sim.num_steps,
        max_darcy,
        sim.diagnostics().iter().map(|d| d.conservation_defect).fold(0.0, f64::max)
    );
    Ok(RunOutput { states, diagnostics: sim.diagnostics, h })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate, MeshFamily};
    use crate::problems::{example1, Sources};
    use std::sync::Arc;

    fn quiet(c0: f64) -> ProblemSpec {
        let mut p = example1();
        p.sources = Sources::None;
        p.exact = None;
        p.initial_concentration = Arc::new(move |_| c0);
        p
    }

    #[test]
    fn step_count() {
        assert_eq!(SimulationConfig::new(0.1, 1.0).num_steps().unwrap(), 10);
        assert_eq!(SimulationConfig::new(0.3, 1.0).num_steps().unwrap(), 3);
        assert_eq!(SimulationConfig::new(0.1, 0.0).num_steps().unwrap(), 0);
        assert!(SimulationConfig::new(0.0, 1.0).num_steps().is_err());
    }

    #[test]
    fn zero_steps_returns_initial_state() {
        let m = generate(MeshFamily::Square, 2, 0).unwrap();
        let out = run(m, example1(), SimulationConfig::new(0.1, 0.0)).unwrap();
        assert_eq!(out.states.len(), 1);
        assert_eq!(out.states[0].t, 0.0);
    }

    #[test]
    fn homogeneous_darcy_is_zero() {
        let m = generate(MeshFamily::VoronoiRandom, 4, 1).unwrap();
        let p = quiet(0.3);
        let ps = ProjectorSet::new(&m, 0).unwrap();
        let d = DofMap::new(&m);
        let s = p.sources.bind(&m).unwrap();
        let sol = solve_darcy(&m, &ps, &d, &p, &s, &vec![0.3; m.num_edges()], 0.0, &VelocityBoundary::NoFlow, 1e-10)
            .unwrap();
        assert!(sol.u.iter().chain(&sol.p).all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn constant_concentration_is_preserved() {
        let m = generate(MeshFamily::Concave, 3, 0).unwrap();
        let out = run(m, quiet(0.7), SimulationConfig::new(0.05, 0.2)).unwrap();
        assert!(out.final_state().c.iter().all(|c| (c - 0.7).abs() < 1e-12));
    }

    #[test]
    fn conservation_on_example1() {
        let m = generate(MeshFamily::Square, 4, 0).unwrap();
        let out = run(m, example1(), SimulationConfig::new(0.002, 0.004)).unwrap();
        assert!(out.max_conservation_defect() < 1e-10);
        assert_eq!(out.diagnostics.len(), 3);
    }
}
