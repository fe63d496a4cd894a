//! Fully connected scalar fields `h(x; θ): R² → C` with a complex output
//! layer, their Helmholtz and impedance residuals, and exact loss gradients.
//!
//! Hidden transforms are real affine maps; only the output layer carries
//! complex weights and bias. With the plane-wave activation `e^{ix}` the
//! one-hidden-layer field is `Σ s_i e^{i(w_i·x + b_i)}`, a sum of plane
//! waves with learned amplitudes and directions; hidden signals become
//! complex after the first such activation and the real hidden weights act
//! on them unchanged.
//!
//! Residuals need `Δh` and `∇h·n`, obtained from second-order jets: one
//! forward pass per coordinate axis for the Laplacian, one pass seeded
//! along the normal for the boundary operator. The training gradient is
//! reverse-accumulated through those same jet passes, so its cost is a
//! small constant times one loss evaluation regardless of the parameter
//! count. Gradient terms are reduced over fixed-size point chunks and then
//! summed in chunk order, which keeps results bit-identical for any worker
//! count.

use crate::jets::{complex_sin_cos, complex_tanh, exp_i, jet_seed, jet_seed_directional, Jet2};
use crate::problems::{HelmholtzProblem, SampleSet};
use crate::rng::XorShift64Star;
use crate::specfun::{Cplx, I};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("sample set has no {0} points")]
    EmptySampleSet(&'static str),
    #[error("parameter vector has length {got}, spec requires {expected}")]
    BadParameterLength { expected: usize, got: usize },
    #[error(transparent)]
    Problem(#[from] crate::problems::ProblemError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Sin,
    ExpI,
}

/// Architecture description: 2 inputs, 1 complex output, `hidden_layers`
/// hidden layers of `units_per_layer` units each.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetSpec {
    pub input_dim: usize,
    pub output_dim: usize,
    pub hidden_layers: usize,
    pub units_per_layer: usize,
    pub activation: Activation,
}

impl NetSpec {
    pub fn new(hidden_layers: usize, units_per_layer: usize, activation: Activation) -> Self {
        assert!(hidden_layers >= 1 && units_per_layer >= 1);
        Self {
            input_dim: 2,
            output_dim: 1,
            hidden_layers,
            units_per_layer,
            activation,
        }
    }

    /// Total number of real parameters; complex entries count twice.
    pub fn param_count(&self) -> usize {
        let u = self.units_per_layer;
        let mut p = u * (self.input_dim + 1);
        p += (self.hidden_layers - 1) * u * (u + 1);
        p + 2 * (u + 1)
    }
}

/// Real affine map, row-major weights.
#[derive(Clone, Debug, PartialEq)]
pub struct RealAffine {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
}

/// Full parameter set: real hidden transforms, complex output transform.
#[derive(Clone, Debug, PartialEq)]
pub struct NetParams {
    pub hidden: Vec<RealAffine>,
    pub output_weights: Vec<Cplx>,
    pub output_bias: Cplx,
}

impl NetParams {
    /// Flattened real view. Layout: each hidden layer's weights (row-major)
    /// then its bias; then the output weights as (re, im) pairs, then the
    /// output bias as (re, im).
    pub fn flatten(&self) -> Vec<f64> {
        let mut theta = Vec::new();
        for layer in &self.hidden {
            theta.extend_from_slice(&layer.weights);
            theta.extend_from_slice(&layer.bias);
        }
        for w in &self.output_weights {
            theta.push(w.re);
            theta.push(w.im);
        }
        theta.push(self.output_bias.re);
        theta.push(self.output_bias.im);
        theta
    }

    pub fn unflatten(spec: &NetSpec, theta: &[f64]) -> Result<Self, NetworkError> {
        let expected = spec.param_count();
        if theta.len() != expected {
            return Err(NetworkError::BadParameterLength {
                expected,
                got: theta.len(),
            });
        }
        let u = spec.units_per_layer;
        let mut hidden = Vec::with_capacity(spec.hidden_layers);
        let mut off = 0;
        for l in 0..spec.hidden_layers {
            let cols = if l == 0 { spec.input_dim } else { u };
            let weights = theta[off..off + u * cols].to_vec();
            off += u * cols;
            let bias = theta[off..off + u].to_vec();
            off += u;
            hidden.push(RealAffine {
                weights,
                bias,
                rows: u,
                cols,
            });
        }
        let mut output_weights = Vec::with_capacity(u);
        for _ in 0..u {
            output_weights.push(Cplx::new(theta[off], theta[off + 1]));
            off += 2;
        }
        let output_bias = Cplx::new(theta[off], theta[off + 1]);
        Ok(Self {
            hidden,
            output_weights,
            output_bias,
        })
    }

    /// First-layer rows as 2D vectors (the learned wavevectors of a
    /// plane-wave-activation network).
    pub fn first_layer_rows(&self) -> Vec<[f64; 2]> {
        let layer = &self.hidden[0];
        assert_eq!(layer.cols, 2);
        (0..layer.rows)
            .map(|i| [layer.weights[2 * i], layer.weights[2 * i + 1]])
            .collect()
    }
}

/// Deterministic initialization. Tanh and Sin layers draw uniform
/// Glorot-bounded weights (Sin scales the first layer by k so the initial
/// frequencies span the wavenumber); the plane-wave activation seeds
/// first-layer rows as k(cos φ, sin φ) with uniform angles φ, so training
/// starts from plane waves at the physical wavenumber. Biases start at
/// zero everywhere.
pub fn init_params(spec: &NetSpec, seed: u64, k: f64) -> NetParams {
    let mut rng = XorShift64Star::with_stream(seed, 3);
    let u = spec.units_per_layer;
    let mut hidden = Vec::with_capacity(spec.hidden_layers);
    for l in 0..spec.hidden_layers {
        let cols = if l == 0 { spec.input_dim } else { u };
        let mut weights = Vec::with_capacity(u * cols);
        match (spec.activation, l) {
            (Activation::ExpI, 0) => {
                // equiangular directions (the classical uniform plane-wave
                // basis) under a seeded global rotation: the circle is
                // covered evenly from the start and training only has to
                // refine directions, never to cross a coverage gap
                let rotation = rng.uniform_in(0.0, 2.0 * std::f64::consts::PI);
                for i in 0..u {
                    let phi = rotation + 2.0 * std::f64::consts::PI * i as f64 / u as f64;
                    weights.push(k * phi.cos());
                    weights.push(k * phi.sin());
                }
            }
            (Activation::ExpI, _) => {
                for _ in 0..u * cols {
                    weights.push(rng.uniform_in(-0.1, 0.1));
                }
            }
            (Activation::Tanh | Activation::Sin, _) => {
                let bound = (6.0 / (cols + u) as f64).sqrt();
                let scale = if l == 0 && spec.activation == Activation::Sin {
                    k
                } else {
                    1.0
                };
                for _ in 0..u * cols {
                    weights.push(scale * rng.uniform_in(-bound, bound));
                }
            }
        }
        hidden.push(RealAffine {
            weights,
            bias: vec![0.0; u],
            rows: u,
            cols,
        });
    }
    let out_bound = match spec.activation {
        Activation::ExpI => 0.1,
        _ => (6.0 / (u + 1) as f64).sqrt(),
    };
    let output_weights = (0..u)
        .map(|_| {
            let re = rng.uniform_in(-out_bound, out_bound);
            let im = rng.uniform_in(-out_bound, out_bound);
            Cplx::new(re, im)
        })
        .collect();
    NetParams {
        hidden,
        output_weights,
        output_bias: Cplx::ZERO,
    }
}

#[inline]
fn act_value(act: Activation, z: Cplx) -> Cplx {
    match act {
        Activation::Tanh => complex_tanh(z),
        Activation::Sin => complex_sin_cos(z).0,
        Activation::ExpI => exp_i(z),
    }
}

/// Value and first three derivatives of the activation at z.
#[inline]
fn act_derivs(act: Activation, z: Cplx) -> (Cplx, Cplx, Cplx, Cplx) {
    match act {
        Activation::Tanh => {
            let t = complex_tanh(z);
            let s = Cplx::ONE - t * t;
            (t, s, -2.0 * t * s, 2.0 * s * (3.0 * t * t - Cplx::ONE))
        }
        Activation::Sin => {
            let (s, c) = complex_sin_cos(z);
            (s, c, -s, -c)
        }
        Activation::ExpI => {
            let e = exp_i(z);
            (e, I * e, -e, -I * e)
        }
    }
}

/// Plain field evaluation h(x; θ).
pub fn forward(spec: &NetSpec, params: &NetParams, x: [f64; 2]) -> Cplx {
    let u = spec.units_per_layer;
    let mut signal: Vec<Cplx> = Vec::with_capacity(u);
    let mut next: Vec<Cplx> = vec![Cplx::ZERO; u];
    for (l, layer) in params.hidden.iter().enumerate() {
        for i in 0..layer.rows {
            let mut z = Cplx::new(layer.bias[i], 0.0);
            if l == 0 {
                z += layer.weights[2 * i] * x[0] + layer.weights[2 * i + 1] * x[1];
            } else {
                for j in 0..layer.cols {
                    z += layer.weights[i * layer.cols + j] * signal[j];
                }
            }
            next[i] = act_value(spec.activation, z);
        }
        signal.clear();
        signal.extend_from_slice(&next);
    }
    let mut out = params.output_bias;
    for i in 0..u {
        out += params.output_weights[i] * signal[i];
    }
    out
}

/// Scratch buffers for one jet pass (per worker, reused across points).
struct Workspace {
    pre: Vec<Vec<Jet2>>,
    act: Vec<Vec<Jet2>>,
}

impl Workspace {
    fn new(spec: &NetSpec) -> Self {
        let layer = vec![Jet2::zero(); spec.units_per_layer];
        Self {
            pre: vec![layer.clone(); spec.hidden_layers],
            act: vec![layer; spec.hidden_layers],
        }
    }
}

/// Forward pass on jets, recording pre- and post-activation values.
fn forward_jets(spec: &NetSpec, params: &NetParams, x: [Jet2; 2], ws: &mut Workspace) -> Jet2 {
    for l in 0..spec.hidden_layers {
        let layer = &params.hidden[l];
        for i in 0..layer.rows {
            let mut z = Jet2::constant_re(layer.bias[i]);
            if l == 0 {
                z = z + x[0] * layer.weights[2 * i] + x[1] * layer.weights[2 * i + 1];
            } else {
                let row = &layer.weights[i * layer.cols..(i + 1) * layer.cols];
                for (j, &w) in row.iter().enumerate() {
                    z = z + ws.act[l - 1][j] * w;
                }
            }
            ws.pre[l][i] = z;
            let (f, f1, f2, _) = act_derivs(spec.activation, z.v);
            ws.act[l][i] = z.compose(f, f1, f2);
        }
    }
    let last = spec.hidden_layers - 1;
    let mut out = Jet2::constant(params.output_bias);
    for i in 0..spec.units_per_layer {
        out = out + ws.act[last][i] * params.output_weights[i];
    }
    out
}

/// Reverse accumulation through one recorded jet pass. `out_adj` holds the
/// loss adjoints of the output jet's (v, d, dd) channels, each stored as
/// ∂L/∂Re + i ∂L/∂Im; holomorphic steps propagate adjoints with conjugated
/// local derivatives. Parameter gradients are added to `grad` (flattened
/// layout).
fn backward_jets(
    spec: &NetSpec,
    params: &NetParams,
    x: [Jet2; 2],
    ws: &Workspace,
    out_adj: Jet2,
    grad: &mut [f64],
    adj: &mut Vec<Jet2>,
    adj_prev: &mut Vec<Jet2>,
) {
    let u = spec.units_per_layer;
    let last = spec.hidden_layers - 1;
    // offsets of each hidden layer's block in the flattened layout
    let mut offsets = Vec::with_capacity(spec.hidden_layers + 1);
    let mut off = 0;
    for layer in &params.hidden {
        offsets.push(off);
        off += layer.rows * (layer.cols + 1);
    }
    let out_off = off;

    // output layer
    adj.clear();
    for i in 0..u {
        let s = params.output_weights[i];
        let a = ws.act[last][i];
        adj.push(Jet2::new(
            s.conj() * out_adj.v,
            s.conj() * out_adj.d,
            s.conj() * out_adj.dd,
        ));
        let gs = out_adj.v * a.v.conj() + out_adj.d * a.d.conj() + out_adj.dd * a.dd.conj();
        grad[out_off + 2 * i] += gs.re;
        grad[out_off + 2 * i + 1] += gs.im;
    }
    grad[out_off + 2 * u] += out_adj.v.re;
    grad[out_off + 2 * u + 1] += out_adj.v.im;

    for l in (0..spec.hidden_layers).rev() {
        let layer = &params.hidden[l];
        // activation backward: adjoint of act -> adjoint of pre
        for i in 0..u {
            let pre = ws.pre[l][i];
            let (_, f1, f2, f3) = act_derivs(spec.activation, pre.v);
            let a = adj[i];
            adj[i] = Jet2::new(
                f1.conj() * a.v
                    + (f2 * pre.d).conj() * a.d
                    + (f3 * pre.d * pre.d + f2 * pre.dd).conj() * a.dd,
                f1.conj() * a.d + (2.0 * f2 * pre.d).conj() * a.dd,
                f1.conj() * a.dd,
            );
        }
        // affine backward: weight/bias gradients plus adjoint of the inputs
        let w_off = offsets[l];
        let b_off = w_off + layer.rows * layer.cols;
        if l == 0 {
            for i in 0..layer.rows {
                let a = adj[i];
                let g0 = a.v * x[0].v.conj() + a.d * x[0].d.conj() + a.dd * x[0].dd.conj();
                let g1 = a.v * x[1].v.conj() + a.d * x[1].d.conj() + a.dd * x[1].dd.conj();
                grad[w_off + 2 * i] += g0.re;
                grad[w_off + 2 * i + 1] += g1.re;
                grad[b_off + i] += a.v.re;
            }
        } else {
            adj_prev.clear();
            adj_prev.resize(layer.cols, Jet2::zero());
            for i in 0..layer.rows {
                let a = adj[i];
                let row = &layer.weights[i * layer.cols..(i + 1) * layer.cols];
                for (j, &w) in row.iter().enumerate() {
                    let inp = ws.act[l - 1][j];
                    let g = a.v * inp.v.conj() + a.d * inp.d.conj() + a.dd * inp.dd.conj();
                    grad[w_off + i * layer.cols + j] += g.re;
                    let p = &mut adj_prev[j];
                    p.v += w * a.v;
                    p.d += w * a.d;
                    p.dd += w * a.dd;
                }
                grad[b_off + i] += a.v.re;
            }
            std::mem::swap(adj, adj_prev);
        }
    }
}

/// Δh(x) + k²h(x), the Laplacian taken by two jet passes.
pub fn helmholtz_residual(spec: &NetSpec, params: &NetParams, x: [f64; 2], k: f64) -> Cplx {
    let mut ws = Workspace::new(spec);
    let p0 = forward_jets(spec, params, jet_seed(x, 0), &mut ws);
    let p1 = forward_jets(spec, params, jet_seed(x, 1), &mut ws);
    p0.dd + p1.dd + k * k * p0.v
}

/// ∇h(x)·n + ik h(x) − g, the impedance residual, via one directional pass.
pub fn boundary_residual(
    spec: &NetSpec,
    params: &NetParams,
    x: [f64; 2],
    normal: [f64; 2],
    k: f64,
    g_value: Cplx,
) -> Cplx {
    let mut ws = Workspace::new(spec);
    let out = forward_jets(spec, params, jet_seed_directional(x, normal), &mut ws);
    out.d + I * k * out.v - g_value
}

/// Interior and boundary residuals over a whole sample set.
#[derive(Clone, Debug)]
pub struct ResidualBatch {
    pub interior: Vec<Cplx>,
    pub boundary: Vec<Cplx>,
}

impl ResidualBatch {
    /// Mean squared modulus of the interior residuals.
    pub fn interior_term(&self) -> f64 {
        mean_sq(&self.interior)
    }

    /// Mean squared modulus of the boundary residuals.
    pub fn boundary_term(&self) -> f64 {
        mean_sq(&self.boundary)
    }
}

fn mean_sq(v: &[Cplx]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.iter().map(|r| r.norm_sqr()).sum::<f64>() / v.len() as f64
}

pub fn residual_batch(
    spec: &NetSpec,
    params: &NetParams,
    samples: &SampleSet,
    problem: &HelmholtzProblem,
) -> Result<ResidualBatch, NetworkError> {
    let interior = samples
        .interior
        .iter()
        .map(|&x| helmholtz_residual(spec, params, x, problem.k))
        .collect();
    let boundary = samples
        .boundary
        .iter()
        .map(|&(x, n)| {
            let g = problem.boundary_g(x, n)?;
            Ok(boundary_residual(spec, params, x, n, problem.k, g))
        })
        .collect::<Result<_, NetworkError>>()?;
    Ok(ResidualBatch { interior, boundary })
}

/// Boundary weight that makes the two loss terms equal at the initial
/// parameters, floored at 1 (a network whose initial field already solves
/// the PDE exactly, as a plane-wave net at the exact wavenumber does, would
/// otherwise get a vanishing boundary weight and nothing to optimize).
pub fn auto_lambda(
    spec: &NetSpec,
    params: &NetParams,
    samples: &SampleSet,
    problem: &HelmholtzProblem,
) -> Result<f64, NetworkError> {
    let batch = residual_batch(spec, params, samples, problem)?;
    let ratio = batch.interior_term() / batch.boundary_term().max(f64::EPSILON);
    Ok(ratio.max(1.0))
}

// Fixed chunk size for gradient reduction; chunk boundaries must not depend
// on the worker count or results would not be reproducible.
const CHUNK: usize = 64;

/// Loss
/// `M(θ) = (1/N_f) Σ |Δh + k²h|² + λ (1/N_g) Σ |∂h/∂n + ikh − g|²`
/// and its exact gradient with respect to the flattened parameters.
pub fn loss_and_grad(
    spec: &NetSpec,
    params: &NetParams,
    samples: &SampleSet,
    problem: &HelmholtzProblem,
    lambda: f64,
) -> Result<(f64, Vec<f64>), NetworkError> {
    if samples.interior.is_empty() {
        return Err(NetworkError::EmptySampleSet("interior"));
    }
    if samples.boundary.is_empty() {
        return Err(NetworkError::EmptySampleSet("boundary"));
    }
    let n_params = spec.param_count();
    let k = problem.k;
    let w_f = 1.0 / samples.n_interior() as f64;
    let w_g = lambda / samples.n_boundary() as f64;

    let g_values: Vec<Cplx> = samples
        .boundary
        .iter()
        .map(|&(x, n)| problem.boundary_g(x, n))
        .collect::<Result<_, _>>()?;

    enum Task {
        Interior(usize, usize),
        Boundary(usize, usize),
    }
    let mut tasks = Vec::new();
    let mut i = 0;
    while i < samples.interior.len() {
        tasks.push(Task::Interior(i, (i + CHUNK).min(samples.interior.len())));
        i += CHUNK;
    }
    let mut i = 0;
    while i < samples.boundary.len() {
        tasks.push(Task::Boundary(i, (i + CHUNK).min(samples.boundary.len())));
        i += CHUNK;
    }

    let partials: Vec<(f64, Vec<f64>)> = tasks
        .par_iter()
        .map(|task| {
            let mut ws0 = Workspace::new(spec);
            let mut ws1 = Workspace::new(spec);
            let mut adj = Vec::with_capacity(spec.units_per_layer);
            let mut adj_prev = Vec::with_capacity(spec.units_per_layer);
            let mut grad = vec![0.0; n_params];
            let mut loss = 0.0;
            match *task {
                Task::Interior(lo, hi) => {
                    for &x in &samples.interior[lo..hi] {
                        let s0 = jet_seed(x, 0);
                        let s1 = jet_seed(x, 1);
                        let p0 = forward_jets(spec, params, s0, &mut ws0);
                        let p1 = forward_jets(spec, params, s1, &mut ws1);
                        let r = p0.dd + p1.dd + k * k * p0.v;
                        loss += w_f * r.norm_sqr();
                        let ar = 2.0 * w_f * r;
                        backward_jets(
                            spec,
                            params,
                            s0,
                            &ws0,
                            Jet2::new(k * k * ar, Cplx::ZERO, ar),
                            &mut grad,
                            &mut adj,
                            &mut adj_prev,
                        );
                        backward_jets(
                            spec,
                            params,
                            s1,
                            &ws1,
                            Jet2::new(Cplx::ZERO, Cplx::ZERO, ar),
                            &mut grad,
                            &mut adj,
                            &mut adj_prev,
                        );
                    }
                }
                Task::Boundary(lo, hi) => {
                    for (idx, &(x, n)) in samples.boundary[lo..hi].iter().enumerate() {
                        let seed = jet_seed_directional(x, n);
                        let out = forward_jets(spec, params, seed, &mut ws0);
                        let r = out.d + I * k * out.v - g_values[lo + idx];
                        loss += w_g * r.norm_sqr();
                        let ar = 2.0 * w_g * r;
                        backward_jets(
                            spec,
                            params,
                            seed,
                            &ws0,
                            Jet2::new(-I * k * ar, ar, Cplx::ZERO),
                            &mut grad,
                            &mut adj,
                            &mut adj_prev,
                        );
                    }
                }
            }
            (loss, grad)
        })
        .collect();

    let mut loss = 0.0;
    let mut grad = vec![0.0; n_params];
    for (l, g) in partials {
        loss += l;
        for (acc, v) in grad.iter_mut().zip(g) {
            *acc += v;
        }
    }
    Ok((loss, grad))
}
