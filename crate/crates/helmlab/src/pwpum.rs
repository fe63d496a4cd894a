//! Plane-wave Trefftz discretization on one rectangular element.
//!
//! The ansatz `u(x; β) = Σ s_i e^{i k_i·x}` with `‖k_i‖ = k` satisfies the
//! Helmholtz equation exactly (the Trefftz property), so only the impedance
//! boundary condition is matched, weakly, against the plane waves
//! themselves as test functions. That reduces to a complex linear system
//! `M β = G` with boundary-integral entries
//!
//! ```text
//!   M_ij = ∫_∂Ω (∂e^{i k_j·x}/∂n + ik e^{i k_j·x}) e^{-i k_i·x} dS
//!   G_i  = ∫_∂Ω g e^{-i k_i·x} dS
//! ```
//!
//! assembled by composite Gauss-Legendre quadrature on the edges (rows are
//! test indices, columns trial indices). Plane-wave bases are notoriously
//! ill-conditioned once the basis size approaches 2k·diam, so the solve is
//! a regularized least squares (Householder QR on the Tikhonov-augmented
//! system) and the assembled system carries a one-norm condition estimate.
//!
//! The wave-tracking variant rotates the whole equiangular basis by one
//! learned angle α, found by a coarse scan plus golden-section refinement
//! of the boundary misfit over one period 2π/d₁ of the basis symmetry.

use crate::jets::exp_i;
use crate::network::NetParams;
use crate::problems::{HelmholtzProblem, ProblemError};
use crate::specfun::{Cplx, I};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PwpumError {
    #[error("quadrature density {0} is below 1 point per wavelength")]
    QuadratureTooCoarse(f64),
    #[error("basis vector {index} has norm {norm}, expected {expected}")]
    OffShellBasis { index: usize, norm: f64, expected: f64 },
    #[error("first-layer row {0} has near-zero norm, direction undefined")]
    ZeroNormRow(usize),
    #[error("direction rebasing needs a one-hidden-layer network, got {0} layers")]
    MultiLayerNetwork(usize),
    #[error("wave tracking needs at least 8 coarse angles, got {0}")]
    AlphaGridTooCoarse(usize),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// Plane-wave basis: wavevectors of common norm k.
#[derive(Clone, Debug, PartialEq)]
pub struct PWBasis {
    pub wavevectors: Vec<[f64; 2]>,
    pub k: f64,
}

impl PWBasis {
    pub fn new(wavevectors: Vec<[f64; 2]>, k: f64) -> Result<Self, PwpumError> {
        for (index, w) in wavevectors.iter().enumerate() {
            let norm = (w[0] * w[0] + w[1] * w[1]).sqrt();
            if (norm - k).abs() > 1e-12 * k.max(1.0) {
                return Err(PwpumError::OffShellBasis {
                    index,
                    norm,
                    expected: k,
                });
            }
        }
        Ok(Self { wavevectors, k })
    }

    pub fn len(&self) -> usize {
        self.wavevectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wavevectors.is_empty()
    }

    /// Basis with every wavevector rotated by α (clockwise for positive α,
    /// matching the wave-tracking rotation convention).
    pub fn rotated(&self, alpha: f64) -> PWBasis {
        let (sin_a, cos_a) = alpha.sin_cos();
        PWBasis {
            wavevectors: self
                .wavevectors
                .iter()
                .map(|w| rotate(*w, sin_a, cos_a))
                .collect(),
            k: self.k,
        }
    }
}

#[inline]
fn rotate(w: [f64; 2], sin_a: f64, cos_a: f64) -> [f64; 2] {
    [cos_a * w[0] + sin_a * w[1], -sin_a * w[0] + cos_a * w[1]]
}

/// Equiangular basis k_i = (k cos(2πi/d₁), k sin(2πi/d₁)), i = 1..d₁.
pub fn uniform_basis(d1: usize, k: f64) -> PWBasis {
    assert!(d1 >= 1);
    let wavevectors = (1..=d1)
        .map(|i| {
            let angle = 2.0 * PI * i as f64 / d1 as f64;
            [k * angle.cos(), k * angle.sin()]
        })
        .collect();
    PWBasis { wavevectors, k }
}

/// Plane-wave field with complex coefficients and an optional basis
/// rotation (0 for the plain method).
#[derive(Clone, Debug)]
pub struct PWSolution {
    pub basis: PWBasis,
    pub coefficients: Vec<Cplx>,
    pub alpha: f64,
}

impl PWSolution {
    pub fn rotated_wavevectors(&self) -> Vec<[f64; 2]> {
        self.basis.rotated(self.alpha).wavevectors
    }

    /// u(x) = Σ s_i e^{i k_i(α)·x}
    pub fn evaluate(&self, x: [f64; 2]) -> Cplx {
        let (sin_a, cos_a) = self.alpha.sin_cos();
        let mut sum = Cplx::ZERO;
        for (w, s) in self.basis.wavevectors.iter().zip(&self.coefficients) {
            let kv = rotate(*w, sin_a, cos_a);
            sum += s * exp_i(Cplx::new(kv[0] * x[0] + kv[1] * x[1], 0.0));
        }
        sum
    }
}

/// Assembled boundary system M β = G.
#[derive(Clone, Debug)]
pub struct AssembledSystem {
    /// row-major d₁×d₁, row = test index, column = trial index
    pub matrix: Vec<Cplx>,
    pub rhs: Vec<Cplx>,
    pub dim: usize,
    /// one-norm estimate of cond(M)
    pub condition_estimate: f64,
}

impl AssembledSystem {
    /// Default Tikhonov weight, 1e-12 · ‖M‖₁.
    pub fn default_regularization(&self) -> f64 {
        1e-12 * one_norm(&self.matrix, self.dim)
    }
}

fn one_norm(matrix: &[Cplx], dim: usize) -> f64 {
    let mut best = 0.0f64;
    for j in 0..dim {
        let mut col = 0.0;
        for i in 0..dim {
            col += matrix[i * dim + j].norm();
        }
        best = best.max(col);
    }
    best
}

// 10-point Gauss-Legendre panels; the density argument sets how many panels
// each edge gets.
const PANEL_ORDER: usize = 10;

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on the
/// Legendre polynomial.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 2..=n {
        let next = ((2 * k - 1) as f64 * x * p - (k - 1) as f64 * p_prev) / k as f64;
        p_prev = p;
        p = next;
    }
    let d = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, d)
}

fn panels_for_edge(len: f64, k: f64, quad_ppw: f64) -> usize {
    // integrands oscillate with frequencies up to 2k, wavelength π/k
    let target_points = quad_ppw * len * k / PI;
    ((target_points / PANEL_ORDER as f64).ceil() as usize).max(1)
}

/// Visit the quadrature nodes of every edge: (point, outward normal, weight).
fn for_each_quad_node<F>(
    problem: &HelmholtzProblem,
    quad_ppw: f64,
    mut visit: F,
) -> Result<(), PwpumError>
where
    F: FnMut([f64; 2], [f64; 2], f64) -> Result<(), PwpumError>,
{
    if quad_ppw < 1.0 {
        return Err(PwpumError::QuadratureTooCoarse(quad_ppw));
    }
    let (nodes, weights) = gauss_legendre(PANEL_ORDER);
    for (start, end, normal) in problem.domain.edges() {
        let len = ((end[0] - start[0]).powi(2) + (end[1] - start[1]).powi(2)).sqrt();
        let panels = panels_for_edge(len, problem.k, quad_ppw);
        let panel_len = len / panels as f64;
        for p in 0..panels {
            let t0 = p as f64 / panels as f64;
            for (node, weight) in nodes.iter().zip(&weights) {
                // map [-1, 1] to the panel
                let t = t0 + (node + 1.0) / 2.0 / panels as f64;
                let x = [
                    start[0] + t * (end[0] - start[0]),
                    start[1] + t * (end[1] - start[1]),
                ];
                visit(x, normal, weight * panel_len / 2.0)?;
            }
        }
    }
    Ok(())
}

/// Assemble the boundary system for a basis by edge-wise composite
/// Gauss-Legendre quadrature.
pub fn assemble(
    basis: &PWBasis,
    problem: &HelmholtzProblem,
    quad_ppw: f64,
) -> Result<AssembledSystem, PwpumError> {
    let d = basis.len();
    let k = problem.k;
    let mut matrix = vec![Cplx::ZERO; d * d];
    let mut rhs = vec![Cplx::ZERO; d];
    let mut waves = vec![Cplx::ZERO; d];
    let mut trial = vec![Cplx::ZERO; d];
    for_each_quad_node(problem, quad_ppw, |x, n, w| {
        for (j, kv) in basis.wavevectors.iter().enumerate() {
            let e = exp_i(Cplx::new(kv[0] * x[0] + kv[1] * x[1], 0.0));
            waves[j] = e;
            trial[j] = I * (kv[0] * n[0] + kv[1] * n[1] + k) * e * w;
        }
        let g = problem.boundary_g(x, n)?;
        for i in 0..d {
            let test = waves[i].conj();
            let row = &mut matrix[i * d..(i + 1) * d];
            for (m, t) in row.iter_mut().zip(&trial) {
                *m += test * t;
            }
            rhs[i] += test * g * w;
        }
        Ok(())
    })?;
    let condition_estimate = condition_one_norm(&matrix, d);
    Ok(AssembledSystem {
        matrix,
        rhs,
        dim: d,
        condition_estimate,
    })
}

/// cond₁(M) = ‖M‖₁ ‖M⁻¹‖₁ with the inverse taken column by column through
/// the QR factorization; infinite when M is numerically singular.
fn condition_one_norm(matrix: &[Cplx], dim: usize) -> f64 {
    let qr = ComplexQr::factor(matrix.to_vec(), dim, dim);
    if qr.min_r_diag() == 0.0 {
        return f64::INFINITY;
    }
    let mut inv_norm = 0.0f64;
    let mut e = vec![Cplx::ZERO; dim];
    for j in 0..dim {
        e[j] = Cplx::ONE;
        let col = qr.solve(&e);
        e[j] = Cplx::ZERO;
        let sum: f64 = col.iter().map(|c| c.norm()).sum();
        inv_norm = inv_norm.max(sum);
    }
    one_norm(matrix, dim) * inv_norm
}

/// Result of the regularized least-squares solve.
#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub coefficients: Vec<Cplx>,
    /// ‖M β − G‖₂ of the returned coefficients
    pub residual_norm: f64,
    /// condition estimate exceeded 1e14; the coefficients are still
    /// returned but should be treated with suspicion
    pub ill_conditioned: bool,
}

/// Solve min ‖Mβ − G‖² + reg·‖β‖² by Householder QR on the augmented
/// matrix [M; √reg·I].
pub fn solve(system: &AssembledSystem, regularization: f64) -> SolveOutcome {
    let d = system.dim;
    let coefficients = if regularization > 0.0 {
        let sqrt_reg = regularization.sqrt();
        let mut a = vec![Cplx::ZERO; 2 * d * d];
        a[..d * d].copy_from_slice(&system.matrix);
        for i in 0..d {
            a[(d + i) * d + i] = Cplx::new(sqrt_reg, 0.0);
        }
        let mut b = vec![Cplx::ZERO; 2 * d];
        b[..d].copy_from_slice(&system.rhs);
        ComplexQr::factor(a, 2 * d, d).solve(&b)
    } else {
        ComplexQr::factor(system.matrix.clone(), d, d).solve(&system.rhs)
    };
    let mut residual = 0.0;
    for i in 0..d {
        let mut row = -system.rhs[i];
        for j in 0..d {
            row += system.matrix[i * d + j] * coefficients[j];
        }
        residual += row.norm_sqr();
    }
    SolveOutcome {
        coefficients,
        residual_norm: residual.sqrt(),
        ill_conditioned: system.condition_estimate > 1e14,
    }
}

/// Householder QR of a complex rows×cols matrix (rows ≥ cols), reflectors
/// stored below the diagonal.
struct ComplexQr {
    rows: usize,
    cols: usize,
    data: Vec<Cplx>,
    v_head: Vec<Cplx>,
    tau: Vec<f64>,
}

impl ComplexQr {
    fn factor(mut a: Vec<Cplx>, rows: usize, cols: usize) -> Self {
        assert!(rows >= cols && a.len() == rows * cols);
        let mut v_head = vec![Cplx::ZERO; cols];
        let mut tau = vec![0.0; cols];
        for k in 0..cols {
            let mut sigma2 = 0.0;
            for i in k..rows {
                sigma2 += a[i * cols + k].norm_sqr();
            }
            let sigma = sigma2.sqrt();
            if sigma == 0.0 {
                a[k * cols + k] = Cplx::ZERO;
                continue;
            }
            let x0 = a[k * cols + k];
            let phase = if x0 == Cplx::ZERO { Cplx::ONE } else { x0 / x0.norm() };
            let alpha = -phase * sigma;
            // v = x - α e₁; v^H x = σ² + σ|x₀| is real and positive
            let head = x0 - alpha;
            let t = 1.0 / (sigma2 + sigma * x0.norm());
            v_head[k] = head;
            tau[k] = t;
            for c in (k + 1)..cols {
                let mut w = head.conj() * a[k * cols + c];
                for i in (k + 1)..rows {
                    w += a[i * cols + k].conj() * a[i * cols + c];
                }
                w *= t;
                a[k * cols + c] -= w * head;
                for i in (k + 1)..rows {
                    let v = a[i * cols + k];
                    a[i * cols + c] -= w * v;
                }
            }
            a[k * cols + k] = alpha;
        }
        Self {
            rows,
            cols,
            data: a,
            v_head,
            tau,
        }
    }

    fn min_r_diag(&self) -> f64 {
        (0..self.cols)
            .map(|k| self.data[k * self.cols + k].norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Least-squares solve; columns with a vanished pivot contribute zero.
    fn solve(&self, b: &[Cplx]) -> Vec<Cplx> {
        assert_eq!(b.len(), self.rows);
        let mut y = b.to_vec();
        for k in 0..self.cols {
            if self.tau[k] == 0.0 {
                continue;
            }
            let mut w = self.v_head[k].conj() * y[k];
            for i in (k + 1)..self.rows {
                w += self.data[i * self.cols + k].conj() * y[i];
            }
            w *= self.tau[k];
            y[k] -= w * self.v_head[k];
            for i in (k + 1)..self.rows {
                y[i] -= w * self.data[i * self.cols + k];
            }
        }
        let mut z = vec![Cplx::ZERO; self.cols];
        for k in (0..self.cols).rev() {
            let rkk = self.data[k * self.cols + k];
            if rkk.norm() == 0.0 {
                continue;
            }
            let mut sum = y[k];
            for c in (k + 1)..self.cols {
                sum -= self.data[k * self.cols + c] * z[c];
            }
            z[k] = sum / rkk;
        }
        z
    }
}

/// Boundary misfit ∫_∂Ω |∂u/∂n + iku − g|² dS of a plane-wave field, by
/// the same quadrature rule used for assembly.
pub fn boundary_misfit(
    problem: &HelmholtzProblem,
    basis: &PWBasis,
    coefficients: &[Cplx],
    quad_ppw: f64,
) -> Result<f64, PwpumError> {
    let k = problem.k;
    let mut total = 0.0;
    for_each_quad_node(problem, quad_ppw, |x, n, w| {
        let mut trace = Cplx::ZERO;
        for (kv, s) in basis.wavevectors.iter().zip(coefficients) {
            let e = exp_i(Cplx::new(kv[0] * x[0] + kv[1] * x[1], 0.0));
            trace += s * I * (kv[0] * n[0] + kv[1] * n[1] + k) * e;
        }
        let g = problem.boundary_g(x, n)?;
        total += w * (trace - g).norm_sqr();
        Ok(())
    })?;
    Ok(total)
}

/// Wave tracking: search the basis rotation α over one symmetry period
/// [0, 2π/d₁) for the smallest boundary misfit. A coarse grid of
/// `alpha_grid` samples brackets the minimum (each sample is a full
/// assemble-and-solve of the rotated basis; the interior equation holds
/// identically for every α, so only the boundary misfit drives the
/// search), then golden-section refinement narrows it below `refine_tol`.
/// The unrotated solution is kept unless rotation strictly improves the
/// misfit, so wave tracking never does worse than the plain method.
pub fn solve_wt(
    problem: &HelmholtzProblem,
    d1: usize,
    quad_ppw: f64,
    alpha_grid: usize,
    refine_tol: f64,
) -> Result<PWSolution, PwpumError> {
    if alpha_grid < 8 {
        return Err(PwpumError::AlphaGridTooCoarse(alpha_grid));
    }
    let base = uniform_basis(d1, problem.k);
    let period = 2.0 * PI / d1 as f64;

    let solve_at = |alpha: f64| -> Result<(Vec<Cplx>, f64), PwpumError> {
        let rotated = base.rotated(alpha);
        let system = assemble(&rotated, problem, quad_ppw)?;
        let outcome = solve(&system, system.default_regularization());
        let misfit = boundary_misfit(problem, &rotated, &outcome.coefficients, quad_ppw)?;
        Ok((outcome.coefficients, misfit))
    };

    let mut best: Option<(f64, f64, Vec<Cplx>)> = None; // (misfit, alpha, coeffs)
    let mut baseline_misfit = f64::INFINITY;
    let mut baseline_coeffs = Vec::new();
    let mut coarse = Vec::with_capacity(alpha_grid);
    for t in 0..alpha_grid {
        let alpha = t as f64 * period / alpha_grid as f64;
        let (coeffs, misfit) = solve_at(alpha)?;
        if t == 0 {
            baseline_misfit = misfit;
            baseline_coeffs = coeffs.clone();
        }
        if best.as_ref().map_or(true, |(m, _, _)| misfit < *m) {
            best = Some((misfit, alpha, coeffs));
        }
        coarse.push(misfit);
    }
    let best_t = coarse
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0;
    let step = period / alpha_grid as f64;
    let center = best_t as f64 * step;
    let (mut lo, mut hi) = (center - step, center + step);
    let gr = (5.0f64.sqrt() - 1.0) / 2.0;
    let probe = |alpha: f64, best: &mut Option<(f64, f64, Vec<Cplx>)>| -> Result<f64, PwpumError> {
        let (coeffs, misfit) = solve_at(alpha)?;
        if best.as_ref().map_or(true, |(m, _, _)| misfit < *m) {
            *best = Some((misfit, alpha, coeffs));
        }
        Ok(misfit)
    };
    let mut c = hi - gr * (hi - lo);
    let mut d = lo + gr * (hi - lo);
    let mut fc = probe(c, &mut best)?;
    let mut fd = probe(d, &mut best)?;
    while hi - lo > refine_tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - gr * (hi - lo);
            fc = probe(c, &mut best)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + gr * (hi - lo);
            fd = probe(d, &mut best)?;
        }
    }

    let (best_misfit, alpha, coefficients) = best.unwrap();
    if best_misfit >= baseline_misfit * (1.0 - 1e-12) {
        // rotation bought nothing measurable; keep the plain basis
        return Ok(PWSolution {
            basis: base,
            coefficients: baseline_coeffs,
            alpha: 0.0,
        });
    }
    let alpha = alpha.rem_euclid(period);
    Ok(PWSolution {
        basis: base,
        coefficients,
        alpha,
    })
}

/// Basis of directions learned by a one-hidden-layer plane-wave network:
/// each first-layer row is renormalized to the exact wavenumber,
/// k_i = k w_i / ‖w_i‖.
pub fn rebase_from_network(params: &NetParams, k: f64) -> Result<PWBasis, PwpumError> {
    if params.hidden.len() != 1 {
        return Err(PwpumError::MultiLayerNetwork(params.hidden.len()));
    }
    let rows = params.first_layer_rows();
    let mut wavevectors = Vec::with_capacity(rows.len());
    for (i, w) in rows.iter().enumerate() {
        let norm = (w[0] * w[0] + w[1] * w[1]).sqrt();
        if norm < 1e-10 {
            return Err(PwpumError::ZeroNormRow(i));
        }
        wavevectors.push([k * w[0] / norm, k * w[1] / norm]);
    }
    Ok(PWBasis { wavevectors, k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::{relative_modulus_l2, EvalGrid};
    use crate::network::{init_params, forward, Activation, NetSpec};
    use crate::problems::{HelmholtzProblem, RectDomain};
    use crate::rng::XorShift64Star;
    use approx::assert_abs_diff_eq;

    fn square() -> RectDomain {
        RectDomain::new(-1.0, 1.0, -1.0, 1.0)
    }

    #[test]
    fn gauss_legendre_known_rules() {
        let (n2, w2) = gauss_legendre(2);
        assert_abs_diff_eq!(n2[1], 1.0 / 3.0f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(w2[0], 1.0, epsilon = 1e-15);
        let (n3, w3) = gauss_legendre(3);
        assert_abs_diff_eq!(n3[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w3[1], 8.0 / 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(n3[2], (3.0f64 / 5.0).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn gauss_legendre_polynomial_exactness() {
        // an n-point rule integrates monomials up to degree 2n-1 exactly
        let n = PANEL_ORDER;
        let (nodes, weights) = gauss_legendre(n);
        for p in 0..2 * n {
            let quad: f64 = nodes
                .iter()
                .zip(&weights)
                .map(|(x, w)| w * x.powi(p as i32))
                .sum();
            let exact = if p % 2 == 0 { 2.0 / (p as f64 + 1.0) } else { 0.0 };
            assert_abs_diff_eq!(quad, exact, epsilon = 1e-13);
        }
    }

    #[test]
    fn uniform_basis_angles() {
        let b = uniform_basis(4, 1.0);
        let expected = [[0.0, 1.0], [-1.0, 0.0], [0.0, -1.0], [1.0, 0.0]];
        for (got, want) in b.wavevectors.iter().zip(expected) {
            assert_abs_diff_eq!(got[0], want[0], epsilon = 1e-15);
            assert_abs_diff_eq!(got[1], want[1], epsilon = 1e-15);
        }
        let single = uniform_basis(1, 3.0);
        assert_abs_diff_eq!(single.wavevectors[0][0], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(single.wavevectors[0][1], 0.0, epsilon = 1e-14);
        for w in uniform_basis(19, 10.0).wavevectors {
            assert_abs_diff_eq!((w[0] * w[0] + w[1] * w[1]).sqrt(), 10.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn basis_validation() {
        assert!(PWBasis::new(vec![[3.0, 0.0]], 3.0).is_ok());
        assert!(matches!(
            PWBasis::new(vec![[3.0, 0.1]], 3.0),
            Err(PwpumError::OffShellBasis { .. })
        ));
    }

    #[test]
    fn trefftz_annihilation() {
        // second-order finite differences of the basis plane waves
        let k = 10.0;
        let basis = uniform_basis(7, k);
        let h = 1e-5;
        let mut rng = XorShift64Star::new(9);
        for kv in &basis.wavevectors {
            let f = |x: [f64; 2]| exp_i(Cplx::new(kv[0] * x[0] + kv[1] * x[1], 0.0));
            for _ in 0..5 {
                let x = [rng.uniform_in(-1.0, 1.0), rng.uniform_in(-1.0, 1.0)];
                let lap = (f([x[0] + h, x[1]])
                    + f([x[0] - h, x[1]])
                    + f([x[0], x[1] + h])
                    + f([x[0], x[1] - h])
                    - 4.0 * f(x))
                    / (h * h);
                let residual = lap + k * k * f(x);
                // FD truncation dominates; well below 1e-10·k² per unit field
                assert!(residual.norm() <= 1e-5 * k * k);
            }
        }
    }

    /// Closed-form segment integral of e^{iδ·x} as the assembly oracle.
    fn closed_form_entry(
        domain: &RectDomain,
        k: f64,
        ki: [f64; 2],
        kj: [f64; 2],
    ) -> Cplx {
        let delta = [kj[0] - ki[0], kj[1] - ki[1]];
        let mut total = Cplx::ZERO;
        for (a, b, n) in domain.edges() {
            let seg = [b[0] - a[0], b[1] - a[1]];
            let len = (seg[0] * seg[0] + seg[1] * seg[1]).sqrt();
            let phase_a = exp_i(Cplx::new(delta[0] * a[0] + delta[1] * a[1], 0.0));
            let q = delta[0] * seg[0] + delta[1] * seg[1];
            let phi = if q.abs() < 1e-14 {
                Cplx::ONE
            } else {
                (exp_i(Cplx::new(q, 0.0)) - Cplx::ONE) / (I * q)
            };
            let factor = I * (kj[0] * n[0] + kj[1] * n[1] + k);
            total += factor * len * phase_a * phi;
        }
        total
    }

    #[test]
    fn assembly_matches_closed_form() {
        let k = 4.0;
        let problem =
            HelmholtzProblem::plane_wave_mix(square(), k, vec![[k, 0.0]]).unwrap();
        let basis = uniform_basis(5, k);
        let system = assemble(&basis, &problem, 12.0).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let oracle = closed_form_entry(
                    &square(),
                    k,
                    basis.wavevectors[i],
                    basis.wavevectors[j],
                );
                let got = system.matrix[i * 5 + j];
                assert!(
                    (got - oracle).norm() < 1e-9 * oracle.norm().max(1.0),
                    "entry ({i},{j}): {got} vs {oracle}"
                );
            }
        }
    }

    #[test]
    fn zero_boundary_data_gives_zero_rhs() {
        // empty plane-wave mix => u* ≡ 0 => g ≡ 0
        let k = 4.0;
        let problem = HelmholtzProblem::plane_wave_mix(square(), k, vec![]).unwrap();
        let basis = uniform_basis(6, k);
        let system = assemble(&basis, &problem, 10.0).unwrap();
        for v in &system.rhs {
            assert!(v.norm() < 1e-14);
        }
    }

    #[test]
    fn assembly_self_convergence() {
        let k = 10.0;
        let problem = HelmholtzProblem::circular(
            RectDomain::new(0.0, 1.0, -0.5, 0.5),
            k,
            1,
        );
        let basis = uniform_basis(19, k);
        let coarse = assemble(&basis, &problem, 10.0).unwrap();
        let fine = assemble(&basis, &problem, 20.0).unwrap();
        for (a, b) in coarse.matrix.iter().zip(&fine.matrix) {
            assert!((a - b).norm() <= 1e-10 * b.norm().max(1.0));
        }
    }

    #[test]
    fn rejects_coarse_quadrature() {
        let k = 4.0;
        let problem = HelmholtzProblem::plane_wave_mix(square(), k, vec![[k, 0.0]]).unwrap();
        assert!(matches!(
            assemble(&uniform_basis(4, k), &problem, 0.5),
            Err(PwpumError::QuadratureTooCoarse(_))
        ));
    }

    #[test]
    fn identity_solve() {
        let d = 4;
        let mut matrix = vec![Cplx::ZERO; d * d];
        for i in 0..d {
            matrix[i * d + i] = Cplx::ONE;
        }
        let mut rhs = vec![Cplx::ZERO; d];
        rhs[0] = Cplx::ONE;
        let system = AssembledSystem {
            matrix,
            rhs,
            dim: d,
            condition_estimate: 1.0,
        };
        let outcome = solve(&system, 0.0);
        assert!((outcome.coefficients[0] - Cplx::ONE).norm() < 1e-14);
        for c in &outcome.coefficients[1..] {
            assert!(c.norm() < 1e-14);
        }
        assert!(outcome.residual_norm < 1e-14);
        assert!(!outcome.ill_conditioned);
    }

    #[test]
    fn solve_satisfies_regularized_normal_equations() {
        let k = 5.0;
        let problem = HelmholtzProblem::plane_wave_mix(
            square(),
            k,
            crate::problems::random_directions(3, k, 2),
        )
        .unwrap();
        let basis = uniform_basis(9, k);
        let system = assemble(&basis, &problem, 10.0).unwrap();
        let reg = system.default_regularization();
        let beta = solve(&system, reg).coefficients;
        // residual of (M^H M + reg I) β = M^H G
        let d = system.dim;
        let mut lhs = vec![Cplx::ZERO; d];
        let mut rhs = vec![Cplx::ZERO; d];
        for i in 0..d {
            let mut mb = Cplx::ZERO;
            for j in 0..d {
                mb += system.matrix[i * d + j] * beta[j];
            }
            for j in 0..d {
                let mh = system.matrix[i * d + j].conj();
                lhs[j] += mh * mb;
                rhs[j] += mh * system.rhs[i];
            }
        }
        let mut err = 0.0;
        let mut scale = 0.0;
        for j in 0..d {
            lhs[j] += reg * beta[j];
            err += (lhs[j] - rhs[j]).norm_sqr();
            scale += rhs[j].norm_sqr();
        }
        assert!(err.sqrt() <= 1e-10 * scale.sqrt());
    }

    #[test]
    fn exact_recovery_when_solution_in_span() {
        // the exact solution is one of the basis plane waves
        let k = 5.0;
        let basis = uniform_basis(8, k);
        let wave = basis.wavevectors[2];
        let problem = HelmholtzProblem::plane_wave_mix(square(), k, vec![wave]).unwrap();
        let system = assemble(&basis, &problem, 10.0).unwrap();
        let outcome = solve(&system, system.default_regularization());
        let solution = PWSolution {
            basis,
            coefficients: outcome.coefficients,
            alpha: 0.0,
        };
        let grid = EvalGrid::cell_centered(&problem.domain, 50, 50);
        let eps = relative_modulus_l2(|x| solution.evaluate(x), &problem, &grid).unwrap();
        assert!(eps <= 1e-8, "eps = {eps}");
    }

    #[test]
    fn evaluate_rotational_symmetry() {
        // rotating the equiangular basis by its period permutes it
        let d1 = 6;
        let basis = uniform_basis(d1, 2.0);
        let period = 2.0 * PI / d1 as f64;
        let rotated = basis.rotated(period).wavevectors;
        for w in &rotated {
            let matched = basis
                .wavevectors
                .iter()
                .any(|v| ((v[0] - w[0]).powi(2) + (v[1] - w[1]).powi(2)).sqrt() < 1e-9);
            assert!(matched, "{w:?} not in the original set");
        }
        // single-unit evaluation sanity
        let sol = PWSolution {
            basis: uniform_basis(1, 2.0),
            coefficients: vec![Cplx::ONE],
            alpha: 0.0,
        };
        assert!((sol.evaluate([0.0, 0.0]) - Cplx::ONE).norm() < 1e-15);
    }

    #[test]
    fn matches_network_one_layer_form() {
        // a one-hidden-layer plane-wave network is the same field once the
        // phase biases are absorbed into the coefficients
        let k = 5.0;
        let spec = NetSpec::new(1, 6, Activation::ExpI);
        let mut params = init_params(&spec, 3, k);
        let mut rng = XorShift64Star::new(8);
        for b in &mut params.hidden[0].bias {
            *b = rng.uniform_in(-1.0, 1.0);
        }
        let basis = PWBasis::new(params.first_layer_rows(), k).unwrap();
        let coefficients: Vec<Cplx> = params
            .output_weights
            .iter()
            .zip(&params.hidden[0].bias)
            .map(|(s, b)| s * exp_i(Cplx::new(*b, 0.0)))
            .collect();
        let solution = PWSolution {
            basis,
            coefficients,
            alpha: 0.0,
        };
        for _ in 0..100 {
            let x = [rng.uniform_in(-1.0, 1.0), rng.uniform_in(-1.0, 1.0)];
            let net = forward(&spec, &params, x);
            let pw = solution.evaluate(x);
            assert!((net - pw).norm() < 1e-12);
        }
    }

    #[test]
    fn wave_tracking_recovers_rotation() {
        // single plane wave at an angle not in the uniform basis
        let k = 5.0;
        let d1 = 8;
        let offset = 0.21; // radians off the nearest basis angle
        let base_angle = 2.0 * PI / d1 as f64; // basis angle for i = 1
        let phi = base_angle + offset;
        let problem = HelmholtzProblem::plane_wave_mix(
            square(),
            k,
            vec![[k * phi.cos(), k * phi.sin()]],
        )
        .unwrap();
        let tol = 1e-4;
        let solution = solve_wt(&problem, d1, 10.0, 16, tol).unwrap();
        // dense-scan oracle over the period
        let base = uniform_basis(d1, k);
        let period = 2.0 * PI / d1 as f64;
        let mut best = (f64::INFINITY, 0.0);
        for t in 0..400 {
            let alpha = t as f64 * period / 400.0;
            let rotated = base.rotated(alpha);
            let system = assemble(&rotated, &problem, 10.0).unwrap();
            let outcome = solve(&system, system.default_regularization());
            let misfit =
                boundary_misfit(&problem, &rotated, &outcome.coefficients, 10.0).unwrap();
            if misfit < best.0 {
                best = (misfit, alpha);
            }
        }
        let diff = (solution.alpha - best.1).rem_euclid(period);
        let diff = diff.min(period - diff);
        assert!(
            diff <= period / 400.0 + tol,
            "alpha {} vs dense-scan {}",
            solution.alpha,
            best.1
        );
        // the clockwise rotation must line a basis angle up with φ
        let aligned = solution
            .rotated_wavevectors()
            .iter()
            .map(|w| {
                let a = (w[1].atan2(w[0]) - phi).rem_euclid(2.0 * PI);
                a.min(2.0 * PI - a)
            })
            .fold(f64::INFINITY, f64::min);
        assert!(aligned < 1e-2, "nearest rotated angle {aligned} rad away");
        // and the recovered field is essentially exact
        let grid = EvalGrid::cell_centered(&problem.domain, 40, 40);
        let eps = relative_modulus_l2(|x| solution.evaluate(x), &problem, &grid).unwrap();
        assert!(eps < 1e-6, "eps = {eps}");
    }

    #[test]
    fn wave_tracking_keeps_baseline_when_exact_in_basis() {
        let k = 5.0;
        let d1 = 8;
        let basis = uniform_basis(d1, k);
        let problem =
            HelmholtzProblem::plane_wave_mix(square(), k, vec![basis.wavevectors[4]]).unwrap();
        let solution = solve_wt(&problem, d1, 10.0, 16, 1e-4).unwrap();
        assert_eq!(solution.alpha, 0.0);
        let grid = EvalGrid::cell_centered(&problem.domain, 40, 40);
        let eps = relative_modulus_l2(|x| solution.evaluate(x), &problem, &grid).unwrap();
        let plain_system = assemble(&basis, &problem, 10.0).unwrap();
        let plain = PWSolution {
            basis,
            coefficients: solve(&plain_system, plain_system.default_regularization())
                .coefficients,
            alpha: 0.0,
        };
        let eps_plain = relative_modulus_l2(|x| plain.evaluate(x), &problem, &grid).unwrap();
        assert!(eps <= eps_plain * (1.0 + 1e-9));
    }

    #[test]
    fn rebase_normalizes_rows() {
        let k = 3.0;
        let spec = NetSpec::new(1, 2, Activation::ExpI);
        let mut params = init_params(&spec, 0, k);
        params.hidden[0].weights = vec![2.0 * k, 0.0, 0.0, k];
        let basis = rebase_from_network(&params, k).unwrap();
        assert_abs_diff_eq!(basis.wavevectors[0][0], k, epsilon = 1e-14);
        assert_abs_diff_eq!(basis.wavevectors[0][1], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(basis.wavevectors[1][1], k, epsilon = 1e-14);

        params.hidden[0].weights = vec![0.0, 0.0, 0.0, k];
        assert!(matches!(
            rebase_from_network(&params, k),
            Err(PwpumError::ZeroNormRow(0))
        ));

        let deep = init_params(&NetSpec::new(2, 2, Activation::ExpI), 0, k);
        assert!(matches!(
            rebase_from_network(&deep, k),
            Err(PwpumError::MultiLayerNetwork(2))
        ));
    }
}
