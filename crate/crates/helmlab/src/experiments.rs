//! Seeded, reproducible benchmark harness.
//!
//! Every run is described by a serializable [`RunSpec`]; a (spec, seed)
//! pair fully determines the sample set, the initialization, and therefore
//! the result row, so any row can be reproduced from the seed manifest the
//! CLI writes next to the results. Independent runs execute on the rayon
//! pool and rows are returned in deterministic order. Wall-clock columns
//! are the only non-reproducible output.

use crate::evaluation::{
    accuracy, direction_report, relative_modulus_l2, DirectionReport, EvalGrid,
};
use crate::lbfgs::{minimize, LbfgsConfig, LbfgsError, OptTrace};
use crate::network::{
    auto_lambda, forward, init_params, loss_and_grad, Activation, NetParams, NetSpec,
    NetworkError,
};
use crate::problems::{random_directions, sample, HelmholtzProblem, ProblemError, RectDomain};
use crate::pwpum::{
    assemble, rebase_from_network, solve, solve_wt, uniform_basis, PWSolution, PwpumError,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Pwpum(#[from] PwpumError),
    #[error(transparent)]
    Lbfgs(#[from] LbfgsError),
    #[error(transparent)]
    Eval(#[from] crate::evaluation::EvalError),
}

fn default_order() -> u32 {
    1
}

fn default_kd_domain() -> [f64; 4] {
    [0.0, 1.0, -0.5, 0.5]
}

fn default_ud_domain() -> [f64; 4] {
    [-1.0, 1.0, -1.0, 1.0]
}

/// Problem description as it appears in config files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    /// circular wave J_order(kr) e^{i·order·θ}
    Circular {
        k: f64,
        #[serde(default = "default_order")]
        order: u32,
        #[serde(default = "default_kd_domain")]
        domain: [f64; 4],
    },
    /// sum of `directions` random plane waves drawn from `direction_seed`
    Waves {
        k: f64,
        directions: usize,
        #[serde(default)]
        direction_seed: u64,
        #[serde(default = "default_ud_domain")]
        domain: [f64; 4],
    },
    /// sum of explicitly given plane waves
    WavesExplicit {
        k: f64,
        wavevectors: Vec<[f64; 2]>,
        #[serde(default = "default_ud_domain")]
        domain: [f64; 4],
    },
}

impl ProblemSpec {
    pub fn k(&self) -> f64 {
        match self {
            ProblemSpec::Circular { k, .. }
            | ProblemSpec::Waves { k, .. }
            | ProblemSpec::WavesExplicit { k, .. } => *k,
        }
    }

    pub fn build(&self) -> Result<HelmholtzProblem, ProblemError> {
        match self {
            ProblemSpec::Circular { k, order, domain } => Ok(HelmholtzProblem::circular(
                RectDomain::new(domain[0], domain[1], domain[2], domain[3]),
                *k,
                *order,
            )),
            ProblemSpec::Waves {
                k,
                directions,
                direction_seed,
                domain,
            } => HelmholtzProblem::plane_wave_mix(
                RectDomain::new(domain[0], domain[1], domain[2], domain[3]),
                *k,
                random_directions(*directions, *k, *direction_seed),
            ),
            ProblemSpec::WavesExplicit {
                k,
                wavevectors,
                domain,
            } => HelmholtzProblem::plane_wave_mix(
                RectDomain::new(domain[0], domain[1], domain[2], domain[3]),
                *k,
                wavevectors.clone(),
            ),
        }
    }

    pub fn label(&self) -> String {
        match self {
            ProblemSpec::Circular { k, order, .. } => format!("circular-k{k}-o{order}"),
            ProblemSpec::Waves {
                k,
                directions,
                direction_seed,
                ..
            } => format!("waves-k{k}-d{directions}-s{direction_seed}"),
            ProblemSpec::WavesExplicit { k, wavevectors, .. } => {
                format!("waves-k{k}-explicit{}", wavevectors.len())
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    /// tanh-activation network
    Tann,
    /// sine-activation network
    Siren,
    /// plane-wave-activation network
    Pwnn,
    /// plane-wave Trefftz method, uniform directions
    Pwpum,
    /// plane-wave Trefftz method with one learned basis rotation
    PwpumWt,
    /// plane-wave Trefftz method on directions learned by a trained
    /// plane-wave network
    PwpumOd,
}

impl SolverKind {
    pub fn is_neural(self) -> bool {
        matches!(self, SolverKind::Tann | SolverKind::Siren | SolverKind::Pwnn)
    }

    pub fn activation(self) -> Option<Activation> {
        match self {
            SolverKind::Tann => Some(Activation::Tanh),
            SolverKind::Siren => Some(Activation::Sin),
            SolverKind::Pwnn | SolverKind::PwpumOd => Some(Activation::ExpI),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SolverKind::Tann => "tann",
            SolverKind::Siren => "siren",
            SolverKind::Pwnn => "pwnn",
            SolverKind::Pwpum => "pwpum",
            SolverKind::PwpumWt => "pwpum-wt",
            SolverKind::PwpumOd => "pwpum-od",
        }
    }
}

fn default_layers() -> usize {
    1
}

fn default_quad_ppw() -> f64 {
    10.0
}

fn default_alpha_grid() -> usize {
    32
}

fn default_refine_tol() -> f64 {
    1e-6
}

fn default_grid() -> [usize; 2] {
    [100, 100]
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

/// Everything one run needs, in the on-disk configuration form. Unknown
/// keys are rejected when deserializing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub problem: ProblemSpec,
    pub solver: SolverKind,
    #[serde(default = "default_layers")]
    pub layers: usize,
    pub units: usize,
    pub n_interior: usize,
    pub n_per_edge: usize,
    /// boundary weight; omitted = balance the two loss terms at the start
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub optimizer: LbfgsConfig,
    #[serde(default = "default_quad_ppw")]
    pub quad_ppw: f64,
    /// Tikhonov weight; omitted = 1e-12·‖M‖₁
    #[serde(default)]
    pub regularization: Option<f64>,
    #[serde(default = "default_alpha_grid")]
    pub alpha_grid: usize,
    #[serde(default = "default_refine_tol")]
    pub refine_tol: f64,
    /// evaluation grid (rows, cols)
    #[serde(default = "default_grid")]
    pub grid: [usize; 2],
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
}

/// One (spec, seed) outcome; everything the result tables need.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub solver: String,
    pub problem: String,
    pub k: f64,
    pub layers: usize,
    pub units: usize,
    pub n_interior: usize,
    pub n_boundary: usize,
    pub seed: u64,
    pub lambda: f64,
    pub epsilon: f64,
    pub accuracy: f64,
    pub iterations: usize,
    pub termination: String,
    pub condition_estimate: Option<f64>,
    pub direction_mean_err_deg: Option<f64>,
    pub direction_max_err_deg: Option<f64>,
    pub wall_ms: f64,
    pub error: Option<String>,
}

impl ResultRow {
    fn failed(spec: &RunSpec, seed: u64, err: String) -> Self {
        ResultRow {
            solver: spec.solver.label().to_string(),
            problem: spec.problem.label(),
            k: spec.problem.k(),
            layers: spec.layers,
            units: spec.units,
            n_interior: spec.n_interior,
            n_boundary: 4 * spec.n_per_edge,
            seed,
            lambda: f64::NAN,
            epsilon: f64::NAN,
            accuracy: f64::NAN,
            iterations: 0,
            termination: String::new(),
            condition_estimate: None,
            direction_mean_err_deg: None,
            direction_max_err_deg: None,
            wall_ms: 0.0,
            error: Some(err),
        }
    }

    /// Identical up to the wall-clock column.
    pub fn same_outcome(&self, other: &ResultRow) -> bool {
        let mut a = self.clone();
        let mut b = other.clone();
        a.wall_ms = 0.0;
        b.wall_ms = 0.0;
        a == b
    }
}

/// Full outcome of one run, including artifacts the CLI can dump.
pub struct RunArtifacts {
    pub row: ResultRow,
    pub trace: Option<OptTrace>,
    pub net: Option<(NetSpec, NetParams)>,
    pub solution: Option<PWSolution>,
    pub direction_report: Option<DirectionReport>,
}

/// Execute one (spec, seed) run. Failures are recorded in the row's error
/// column, never panicked or propagated, so sweeps continue past them.
pub fn run_single(spec: &RunSpec, seed: u64) -> RunArtifacts {
    let started = Instant::now();
    match run_single_inner(spec, seed) {
        Ok(mut artifacts) => {
            artifacts.row.wall_ms = started.elapsed().as_secs_f64() * 1e3;
            artifacts
        }
        Err(err) => RunArtifacts {
            row: ResultRow::failed(spec, seed, err.to_string()),
            trace: None,
            net: None,
            solution: None,
            direction_report: None,
        },
    }
}

fn run_single_inner(spec: &RunSpec, seed: u64) -> Result<RunArtifacts, ExperimentError> {
    let problem = spec.problem.build()?;
    let grid = EvalGrid::cell_centered(&problem.domain, spec.grid[0], spec.grid[1]);
    let true_waves = match &problem.exact {
        crate::problems::ExactSolution::PlaneWaveMix { wavevectors } => Some(wavevectors.clone()),
        _ => None,
    };

    let mut row = ResultRow {
        solver: spec.solver.label().to_string(),
        problem: spec.problem.label(),
        k: problem.k,
        layers: spec.layers,
        units: spec.units,
        n_interior: spec.n_interior,
        n_boundary: 4 * spec.n_per_edge,
        seed,
        lambda: 0.0,
        epsilon: f64::NAN,
        accuracy: f64::NAN,
        iterations: 0,
        termination: String::new(),
        condition_estimate: None,
        direction_mean_err_deg: None,
        direction_max_err_deg: None,
        wall_ms: 0.0,
        error: None,
    };

    match spec.solver {
        SolverKind::Tann | SolverKind::Siren | SolverKind::Pwnn => {
            let (net_spec, params, trace, lambda) = train_network(spec, &problem, seed)?;
            row.lambda = lambda;
            row.iterations = trace.iterations();
            row.termination = trace.termination.to_string();
            row.epsilon =
                relative_modulus_l2(|x| forward(&net_spec, &params, x), &problem, &grid)?;
            row.accuracy = accuracy(row.epsilon);
            let report = true_waves.as_ref().and_then(|waves| {
                (spec.layers == 1 && spec.solver == SolverKind::Pwnn)
                    .then(|| direction_report(&params.first_layer_rows(), waves, problem.k))
            });
            if let Some(r) = &report {
                row.direction_mean_err_deg = Some(r.mean_error_deg);
                row.direction_max_err_deg = Some(r.max_error_deg);
            }
            Ok(RunArtifacts {
                row,
                trace: Some(trace),
                net: Some((net_spec, params)),
                solution: None,
                direction_report: report,
            })
        }
        SolverKind::Pwpum => {
            let basis = uniform_basis(spec.units, problem.k);
            let system = assemble(&basis, &problem, spec.quad_ppw)?;
            let reg = spec
                .regularization
                .unwrap_or_else(|| system.default_regularization());
            let outcome = solve(&system, reg);
            row.condition_estimate = Some(system.condition_estimate);
            let solution = PWSolution {
                basis,
                coefficients: outcome.coefficients,
                alpha: 0.0,
            };
            row.epsilon = relative_modulus_l2(|x| solution.evaluate(x), &problem, &grid)?;
            row.accuracy = accuracy(row.epsilon);
            Ok(RunArtifacts {
                row,
                trace: None,
                net: None,
                solution: Some(solution),
                direction_report: None,
            })
        }
        SolverKind::PwpumWt => {
            let solution = solve_wt(
                &problem,
                spec.units,
                spec.quad_ppw,
                spec.alpha_grid,
                spec.refine_tol,
            )?;
            row.epsilon = relative_modulus_l2(|x| solution.evaluate(x), &problem, &grid)?;
            row.accuracy = accuracy(row.epsilon);
            Ok(RunArtifacts {
                row,
                trace: None,
                net: None,
                solution: Some(solution),
                direction_report: None,
            })
        }
        SolverKind::PwpumOd => {
            // train the plane-wave network, then rebase its directions
            let mut net_run = spec.clone();
            net_run.solver = SolverKind::Pwnn;
            net_run.layers = 1;
            let (_, params, trace, lambda) = train_network(&net_run, &problem, seed)?;
            row.lambda = lambda;
            row.iterations = trace.iterations();
            row.termination = trace.termination.to_string();
            let artifacts = rebased_solve(spec, &problem, &params, &grid, row, true_waves)?;
            Ok(RunArtifacts {
                trace: Some(trace),
                ..artifacts
            })
        }
    }
}

/// Plane-wave solve on the directions of an already trained one-layer
/// plane-wave network.
fn rebased_solve(
    spec: &RunSpec,
    problem: &HelmholtzProblem,
    params: &NetParams,
    grid: &EvalGrid,
    mut row: ResultRow,
    true_waves: Option<Vec<[f64; 2]>>,
) -> Result<RunArtifacts, ExperimentError> {
    let basis = rebase_from_network(params, problem.k)?;
    let system = assemble(&basis, problem, spec.quad_ppw)?;
    let reg = spec
        .regularization
        .unwrap_or_else(|| system.default_regularization());
    let outcome = solve(&system, reg);
    row.condition_estimate = Some(system.condition_estimate);
    let report = true_waves
        .as_ref()
        .map(|waves| direction_report(&basis.wavevectors, waves, problem.k));
    if let Some(r) = &report {
        row.direction_mean_err_deg = Some(r.mean_error_deg);
        row.direction_max_err_deg = Some(r.max_error_deg);
    }
    let solution = PWSolution {
        basis,
        coefficients: outcome.coefficients,
        alpha: 0.0,
    };
    row.epsilon = relative_modulus_l2(|x| solution.evaluate(x), problem, grid)?;
    row.accuracy = accuracy(row.epsilon);
    Ok(RunArtifacts {
        row,
        trace: None,
        net: None,
        solution: Some(solution),
        direction_report: report,
    })
}

fn train_network(
    spec: &RunSpec,
    problem: &HelmholtzProblem,
    seed: u64,
) -> Result<(NetSpec, NetParams, OptTrace, f64), ExperimentError> {
    let activation = spec
        .solver
        .activation()
        .expect("train_network called for a non-neural solver");
    let net_spec = NetSpec::new(spec.layers, spec.units, activation);
    let samples = sample(problem, spec.n_interior, spec.n_per_edge, seed);
    let params0 = init_params(&net_spec, seed, problem.k);
    let lambda = match spec.lambda {
        Some(l) => l,
        None => auto_lambda(&net_spec, &params0, &samples, problem)?,
    };
    // validate once so the closure below cannot fail
    loss_and_grad(&net_spec, &params0, &samples, problem, lambda)?;
    let objective = |theta: &[f64]| {
        let params = NetParams::unflatten(&net_spec, theta).expect("parameter length is fixed");
        loss_and_grad(&net_spec, &params, &samples, problem, lambda)
            .expect("samples validated before training")
    };
    let (theta, trace) = minimize(objective, &params0.flatten(), &spec.optimizer)?;
    let params = NetParams::unflatten(&net_spec, &theta).expect("parameter length is fixed");
    Ok((net_spec, params, trace, lambda))
}

/// Run the same spec over its seed list, in parallel, rows in seed order.
pub fn run_seeds(spec: &RunSpec) -> Vec<RunArtifacts> {
    spec.seeds
        .par_iter()
        .map(|&seed| run_single(spec, seed))
        .collect()
}

/// Median of the finite values; NaN when none are.
pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Mean and sample standard deviation of the finite values.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    if v.len() == 1 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    (mean, var.sqrt())
}

/// Aggregated cell of a sweep table.
#[derive(Clone, Debug, Serialize)]
pub struct SummaryRow {
    pub solver: String,
    pub layers: usize,
    pub units: usize,
    pub n_interior: usize,
    pub n_boundary: usize,
    pub runs: usize,
    pub median_epsilon: f64,
    pub mean_epsilon: f64,
    pub std_epsilon: f64,
    pub best_epsilon: f64,
}

fn summarize(rows: &[ResultRow]) -> SummaryRow {
    let eps: Vec<f64> = rows
        .iter()
        .filter(|r| r.error.is_none())
        .map(|r| r.epsilon)
        .collect();
    let (mean, std) = mean_std(&eps);
    let first = &rows[0];
    SummaryRow {
        solver: first.solver.clone(),
        layers: first.layers,
        units: first.units,
        n_interior: first.n_interior,
        n_boundary: first.n_boundary,
        runs: eps.len(),
        median_epsilon: median(&eps),
        mean_epsilon: mean,
        std_epsilon: std,
        best_epsilon: eps.iter().copied().fold(f64::INFINITY, f64::min),
    }
}

/// Architecture sweep on the circular-wave problem: every (solver, layers,
/// units) cell over the seed list. Sampling defaults follow the
/// wavenumber: N_f = 5k², 5k boundary points per edge.
pub struct KdSweep {
    pub k: f64,
    pub order: u32,
    pub solvers: Vec<SolverKind>,
    pub layers_list: Vec<usize>,
    pub units_list: Vec<usize>,
    pub seeds: Vec<u64>,
    pub n_interior: Option<usize>,
    pub n_per_edge: Option<usize>,
    pub lambda: Option<f64>,
    pub optimizer: LbfgsConfig,
    pub grid: [usize; 2],
}

impl KdSweep {
    pub fn default_n_interior(k: f64) -> usize {
        (5.0 * k * k).round() as usize
    }

    pub fn default_n_per_edge(k: f64) -> usize {
        (5.0 * k).round() as usize
    }

    fn cell_spec(&self, solver: SolverKind, layers: usize, units: usize) -> RunSpec {
        RunSpec {
            problem: ProblemSpec::Circular {
                k: self.k,
                order: self.order,
                domain: default_kd_domain(),
            },
            solver,
            layers,
            units,
            n_interior: self.n_interior.unwrap_or(Self::default_n_interior(self.k)),
            n_per_edge: self.n_per_edge.unwrap_or(Self::default_n_per_edge(self.k)),
            lambda: self.lambda,
            optimizer: self.optimizer,
            quad_ppw: default_quad_ppw(),
            regularization: None,
            alpha_grid: default_alpha_grid(),
            refine_tol: default_refine_tol(),
            grid: self.grid,
            seeds: self.seeds.clone(),
        }
    }
}

pub fn run_kd_sweep(sweep: &KdSweep) -> (Vec<ResultRow>, Vec<SummaryRow>) {
    let mut cells = Vec::new();
    for &solver in &sweep.solvers {
        for &layers in &sweep.layers_list {
            for &units in &sweep.units_list {
                cells.push(sweep.cell_spec(solver, layers, units));
            }
        }
    }
    let per_cell: Vec<Vec<ResultRow>> = cells
        .par_iter()
        .map(|spec| {
            spec.seeds
                .par_iter()
                .map(|&seed| run_single(spec, seed).row)
                .collect()
        })
        .collect();
    let summaries = per_cell.iter().map(|rows| summarize(rows)).collect();
    (per_cell.into_iter().flatten().collect(), summaries)
}

/// Sampling sweep at a fixed architecture: every (N_f, n_per_edge) cell,
/// `repetitions` random interior sample sets each (seeds base..base+reps).
pub struct DataSweep {
    pub k: f64,
    pub order: u32,
    pub solver: SolverKind,
    pub layers: usize,
    pub units: usize,
    pub n_interior_list: Vec<usize>,
    pub n_per_edge_list: Vec<usize>,
    pub repetitions: usize,
    pub base_seed: u64,
    pub lambda: Option<f64>,
    pub optimizer: LbfgsConfig,
    pub grid: [usize; 2],
}

pub fn run_data_sweep(sweep: &DataSweep) -> (Vec<ResultRow>, Vec<SummaryRow>) {
    let seeds: Vec<u64> = (0..sweep.repetitions)
        .map(|r| sweep.base_seed + r as u64)
        .collect();
    let mut cells = Vec::new();
    for &n_per_edge in &sweep.n_per_edge_list {
        for &n_interior in &sweep.n_interior_list {
            cells.push(RunSpec {
                problem: ProblemSpec::Circular {
                    k: sweep.k,
                    order: sweep.order,
                    domain: default_kd_domain(),
                },
                solver: sweep.solver,
                layers: sweep.layers,
                units: sweep.units,
                n_interior,
                n_per_edge,
                lambda: sweep.lambda,
                optimizer: sweep.optimizer,
                quad_ppw: default_quad_ppw(),
                regularization: None,
                alpha_grid: default_alpha_grid(),
                refine_tol: default_refine_tol(),
                grid: sweep.grid,
                seeds: seeds.clone(),
            });
        }
    }
    let per_cell: Vec<Vec<ResultRow>> = cells
        .par_iter()
        .map(|spec| {
            spec.seeds
                .par_iter()
                .map(|&seed| run_single(spec, seed).row)
                .collect()
        })
        .collect();
    let summaries = per_cell.iter().map(|rows| summarize(rows)).collect();
    (per_cell.into_iter().flatten().collect(), summaries)
}

/// Four-method comparison on the circular-wave problem: the plain and
/// wave-tracking Trefftz solves (deterministic), the plane-wave network
/// over the seed list, and the Trefftz solve rebased onto each trained
/// network's directions.
pub struct PwpumCompare {
    pub k: f64,
    pub order: u32,
    pub units_list: Vec<usize>,
    pub seeds: Vec<u64>,
    pub n_interior: usize,
    pub n_per_edge: usize,
    pub lambda: Option<f64>,
    pub optimizer: LbfgsConfig,
    pub quad_ppw: f64,
    pub alpha_grid: usize,
    pub refine_tol: f64,
    pub grid: [usize; 2],
}

pub fn run_pwpum_compare(compare: &PwpumCompare) -> (Vec<ResultRow>, Vec<SummaryRow>) {
    let spec_for = |solver: SolverKind, units: usize| RunSpec {
        problem: ProblemSpec::Circular {
            k: compare.k,
            order: compare.order,
            domain: default_kd_domain(),
        },
        solver,
        layers: 1,
        units,
        n_interior: compare.n_interior,
        n_per_edge: compare.n_per_edge,
        lambda: compare.lambda,
        optimizer: compare.optimizer,
        quad_ppw: compare.quad_ppw,
        regularization: None,
        alpha_grid: compare.alpha_grid,
        refine_tol: compare.refine_tol,
        grid: compare.grid,
        seeds: compare.seeds.clone(),
    };

    enum Work {
        Deterministic(RunSpec),
        Seeded(RunSpec, u64),
    }
    let mut work = Vec::new();
    for &units in &compare.units_list {
        work.push(Work::Deterministic(spec_for(SolverKind::Pwpum, units)));
        work.push(Work::Deterministic(spec_for(SolverKind::PwpumWt, units)));
        for &seed in &compare.seeds {
            work.push(Work::Seeded(spec_for(SolverKind::Pwnn, units), seed));
        }
    }
    let per_item: Vec<Vec<ResultRow>> = work
        .par_iter()
        .map(|item| match item {
            Work::Deterministic(spec) => vec![run_single(spec, spec.seeds[0]).row],
            Work::Seeded(spec, seed) => {
                // the rebased solve reuses the trained network
                let artifacts = run_single(spec, *seed);
                let mut rows = vec![artifacts.row.clone()];
                if let (Some((_, params)), Ok(problem)) = (&artifacts.net, spec.problem.build())
                {
                    let grid =
                        EvalGrid::cell_centered(&problem.domain, spec.grid[0], spec.grid[1]);
                    let mut od_spec = spec.clone();
                    od_spec.solver = SolverKind::PwpumOd;
                    let mut od_row = artifacts.row.clone();
                    od_row.solver = SolverKind::PwpumOd.label().to_string();
                    match rebased_solve(&od_spec, &problem, params, &grid, od_row, None) {
                        Ok(od) => rows.push(od.row),
                        Err(err) => rows.push(ResultRow::failed(&od_spec, *seed, err.to_string())),
                    }
                }
                rows
            }
        })
        .collect();
    let rows: Vec<ResultRow> = per_item.into_iter().flatten().collect();
    // summaries per (solver, units)
    let mut summaries = Vec::new();
    for &units in &compare.units_list {
        for solver in [
            SolverKind::Pwpum,
            SolverKind::PwpumWt,
            SolverKind::Pwnn,
            SolverKind::PwpumOd,
        ] {
            let cell: Vec<ResultRow> = rows
                .iter()
                .filter(|r| r.units == units && r.solver == solver.label())
                .cloned()
                .collect();
            if !cell.is_empty() {
                summaries.push(summarize(&cell));
            }
        }
    }
    (rows, summaries)
}

/// Random-direction benchmark: `trials` independent exact solutions with
/// `directions` plane waves each, solved by the plain and wave-tracking
/// Trefftz methods and the plane-wave network (which also reports how well
/// its learned directions match the truth).
pub struct UdBench {
    pub k: f64,
    pub directions: usize,
    pub units: usize,
    pub trials: usize,
    pub base_seed: u64,
    pub n_interior: usize,
    pub n_per_edge: usize,
    pub lambda: Option<f64>,
    pub optimizer: LbfgsConfig,
    pub quad_ppw: f64,
    pub alpha_grid: usize,
    pub refine_tol: f64,
    pub grid: [usize; 2],
}

pub struct UdBenchOutcome {
    pub rows: Vec<ResultRow>,
    pub summaries: Vec<SummaryRow>,
    pub reports: Vec<(u64, DirectionReport)>,
    /// artifacts of the network runs, trial order (for rebasing pipelines)
    pub net_artifacts: Vec<RunArtifacts>,
}

pub fn run_ud_bench(bench: &UdBench) -> UdBenchOutcome {
    let spec_for = |solver: SolverKind, trial: usize| RunSpec {
        problem: ProblemSpec::Waves {
            k: bench.k,
            directions: bench.directions,
            direction_seed: bench.base_seed + trial as u64,
            domain: default_ud_domain(),
        },
        solver,
        layers: 1,
        units: bench.units,
        n_interior: bench.n_interior,
        n_per_edge: bench.n_per_edge,
        lambda: bench.lambda,
        optimizer: bench.optimizer,
        quad_ppw: bench.quad_ppw,
        regularization: None,
        alpha_grid: bench.alpha_grid,
        refine_tol: bench.refine_tol,
        grid: bench.grid,
        seeds: vec![bench.base_seed + trial as u64],
    };
    let trials: Vec<usize> = (0..bench.trials).collect();
    type TrialOutcome = (Vec<ResultRow>, Option<(u64, DirectionReport)>, RunArtifacts);
    let per_trial: Vec<TrialOutcome> = trials
        .par_iter()
        .map(|&trial| {
            let seed = bench.base_seed + trial as u64;
            let pwpum = run_single(&spec_for(SolverKind::Pwpum, trial), seed).row;
            let wt = run_single(&spec_for(SolverKind::PwpumWt, trial), seed).row;
            let net = run_single(&spec_for(SolverKind::Pwnn, trial), seed);
            let report = net.direction_report.clone().map(|r| (seed, r));
            (vec![pwpum, wt, net.row.clone()], report, net)
        })
        .collect();
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    let mut net_artifacts = Vec::new();
    for (r, report, net) in per_trial {
        rows.extend(r);
        if let Some(rep) = report {
            reports.push(rep);
        }
        net_artifacts.push(net);
    }
    let mut summaries = Vec::new();
    for solver in [SolverKind::Pwpum, SolverKind::PwpumWt, SolverKind::Pwnn] {
        let cell: Vec<ResultRow> = rows
            .iter()
            .filter(|r| r.solver == solver.label())
            .cloned()
            .collect();
        if !cell.is_empty() {
            summaries.push(summarize(&cell));
        }
    }
    UdBenchOutcome {
        rows,
        summaries,
        reports,
        net_artifacts,
    }
}
