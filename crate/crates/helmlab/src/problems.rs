//! Benchmark problem definitions: rectangular domains, exact solutions with
//! derived impedance boundary data, and collocation sampling.
//!
//! Two families of exact solutions are provided. The circular wave
//! `u(x) = J_ξ(kr) e^{iξθ}` exercises a solution that contains plane-wave
//! components in every direction; the plane-wave mix `u(x) = Σ e^{i k_i·x}`
//! with `||k_i|| = k` contains only a finite, generally unknown, set of
//! directions. Both satisfy `Δu + k²u = 0` exactly, and the boundary data
//! is derived as `g = ∂u/∂n + iku`.

use crate::rng::XorShift64Star;
use crate::specfun::{bessel_j, bessel_j_prime, Cplx, I};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("point ({0}, {1}) lies outside the domain")]
    OutsideDomain(f64, f64),
    #[error("wavevector ({0}, {1}) does not have norm k = {2}")]
    WavevectorOffShell(f64, f64, f64),
    #[error(transparent)]
    SpecFun(#[from] crate::specfun::SpecFunError),
}

/// Axis-aligned rectangle; each edge carries a constant outward unit normal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RectDomain {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl RectDomain {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        assert!(x_min < x_max && y_min < y_max, "degenerate rectangle");
        Self {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn contains(&self, x: [f64; 2], tol: f64) -> bool {
        x[0] >= self.x_min - tol
            && x[0] <= self.x_max + tol
            && x[1] >= self.y_min - tol
            && x[1] <= self.y_max + tol
    }

    /// Edges as (start, end, outward normal), counterclockwise from the
    /// bottom edge.
    pub fn edges(&self) -> [([f64; 2], [f64; 2], [f64; 2]); 4] {
        [
            ([self.x_min, self.y_min], [self.x_max, self.y_min], [0.0, -1.0]),
            ([self.x_max, self.y_min], [self.x_max, self.y_max], [1.0, 0.0]),
            ([self.x_max, self.y_max], [self.x_min, self.y_max], [0.0, 1.0]),
            ([self.x_min, self.y_max], [self.x_min, self.y_min], [-1.0, 0.0]),
        ]
    }
}

/// Exact solution attached to a problem.
#[derive(Clone, Debug, PartialEq)]
pub enum ExactSolution {
    /// `J_order(kr) e^{i·order·θ}` in polar coordinates about the origin.
    Circular { order: u32 },
    /// `Σ_i e^{i k_i·x}` with every `||k_i|| = k` and unit coefficients.
    PlaneWaveMix { wavevectors: Vec<[f64; 2]> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct HelmholtzProblem {
    pub domain: RectDomain,
    pub k: f64,
    pub exact: ExactSolution,
}

impl HelmholtzProblem {
    pub fn circular(domain: RectDomain, k: f64, order: u32) -> Self {
        assert!(k > 0.0);
        Self {
            domain,
            k,
            exact: ExactSolution::Circular { order },
        }
    }

    /// Plane-wave mix; every wavevector must sit on the circle of radius k.
    pub fn plane_wave_mix(
        domain: RectDomain,
        k: f64,
        wavevectors: Vec<[f64; 2]>,
    ) -> Result<Self, ProblemError> {
        assert!(k > 0.0);
        for w in &wavevectors {
            let norm = (w[0] * w[0] + w[1] * w[1]).sqrt();
            if (norm - k).abs() > 1e-12 * k.max(1.0) {
                return Err(ProblemError::WavevectorOffShell(w[0], w[1], k));
            }
        }
        Ok(Self {
            domain,
            k,
            exact: ExactSolution::PlaneWaveMix { wavevectors },
        })
    }

    fn check_inside(&self, x: [f64; 2]) -> Result<(), ProblemError> {
        if self.domain.contains(x, 1e-9) {
            Ok(())
        } else {
            Err(ProblemError::OutsideDomain(x[0], x[1]))
        }
    }

    /// Exact solution value.
    pub fn exact_value(&self, x: [f64; 2]) -> Result<Cplx, ProblemError> {
        self.check_inside(x)?;
        match &self.exact {
            ExactSolution::Circular { order } => {
                let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                if r == 0.0 {
                    return Ok(if *order == 0 { Cplx::ONE } else { Cplx::ZERO });
                }
                let theta = x[1].atan2(x[0]);
                let radial = bessel_j(*order, self.k * r)?;
                Ok(radial * crate::jets::exp_i(Cplx::new(*order as f64 * theta, 0.0)))
            }
            ExactSolution::PlaneWaveMix { wavevectors } => {
                let mut sum = Cplx::ZERO;
                for w in wavevectors {
                    sum += crate::jets::exp_i(Cplx::new(w[0] * x[0] + w[1] * x[1], 0.0));
                }
                Ok(sum)
            }
        }
    }

    /// Cartesian gradient (∂u/∂x, ∂u/∂y) of the exact solution.
    pub fn exact_gradient(&self, x: [f64; 2]) -> Result<(Cplx, Cplx), ProblemError> {
        self.check_inside(x)?;
        match &self.exact {
            ExactSolution::Circular { order } => {
                let nu = *order;
                let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                if r == 0.0 {
                    // Series limit: u ~ (k/2)^ν (x + iy)^ν / ν!, so the
                    // gradient at the origin vanishes except for ν = 1.
                    return Ok(match nu {
                        1 => (Cplx::new(0.5 * self.k, 0.0), Cplx::new(0.0, 0.5 * self.k)),
                        _ => (Cplx::ZERO, Cplx::ZERO),
                    });
                }
                let theta = x[1].atan2(x[0]);
                let (sin_t, cos_t) = theta.sin_cos();
                let phase = crate::jets::exp_i(Cplx::new(nu as f64 * theta, 0.0));
                let radial = bessel_j(nu, self.k * r)?;
                let radial_d = self.k * bessel_j_prime(nu, self.k * r)?;
                // ∂u/∂x = e^{iνθ} (J' k cosθ - iν J sinθ / r)
                // ∂u/∂y = e^{iνθ} (J' k sinθ + iν J cosθ / r)
                let angular = I * (nu as f64) * radial / r;
                Ok((
                    phase * (radial_d * cos_t - angular * sin_t),
                    phase * (radial_d * sin_t + angular * cos_t),
                ))
            }
            ExactSolution::PlaneWaveMix { wavevectors } => {
                let mut gx = Cplx::ZERO;
                let mut gy = Cplx::ZERO;
                for w in wavevectors {
                    let e = crate::jets::exp_i(Cplx::new(w[0] * x[0] + w[1] * x[1], 0.0));
                    gx += I * w[0] * e;
                    gy += I * w[1] * e;
                }
                Ok((gx, gy))
            }
        }
    }

    /// Boundary data g = ∂u/∂n + iku derived from the exact solution.
    pub fn boundary_g(&self, x: [f64; 2], normal: [f64; 2]) -> Result<Cplx, ProblemError> {
        let (gx, gy) = self.exact_gradient(x)?;
        let u = self.exact_value(x)?;
        Ok(gx * normal[0] + gy * normal[1] + I * self.k * u)
    }
}

/// Collocation points: random interior samples and equispaced boundary
/// samples (with outward normals), all reproducible from the seed.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    pub interior: Vec<[f64; 2]>,
    pub boundary: Vec<([f64; 2], [f64; 2])>,
    pub seed: u64,
}

impl SampleSet {
    pub fn n_interior(&self) -> usize {
        self.interior.len()
    }

    pub fn n_boundary(&self) -> usize {
        self.boundary.len()
    }
}

/// Draw `n_interior` i.i.d. uniform interior points and place
/// `n_per_edge` equispaced points on each edge with a half-cell offset, so
/// corners (where the outward normal is ambiguous) are never sampled.
pub fn sample(problem: &HelmholtzProblem, n_interior: usize, n_per_edge: usize, seed: u64) -> SampleSet {
    assert!(n_per_edge >= 1);
    let dom = &problem.domain;
    let mut rng = XorShift64Star::with_stream(seed, 1);
    let mut interior = Vec::with_capacity(n_interior);
    for _ in 0..n_interior {
        let x = rng.uniform_in(dom.x_min, dom.x_max);
        let y = rng.uniform_in(dom.y_min, dom.y_max);
        interior.push([x, y]);
    }
    let mut boundary = Vec::with_capacity(4 * n_per_edge);
    for (start, end, normal) in dom.edges() {
        for j in 0..n_per_edge {
            let t = (j as f64 + 0.5) / n_per_edge as f64;
            let p = [
                start[0] + t * (end[0] - start[0]),
                start[1] + t * (end[1] - start[1]),
            ];
            boundary.push((p, normal));
        }
    }
    SampleSet {
        interior,
        boundary,
        seed,
    }
}

/// `d` wavevectors of norm exactly `k` with i.i.d. uniform angles.
pub fn random_directions(d: usize, k: f64, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = XorShift64Star::with_stream(seed, 2);
    (0..d)
        .map(|_| {
            let phi = rng.uniform_in(0.0, 2.0 * std::f64::consts::PI);
            [k * phi.cos(), k * phi.sin()]
        })
        .collect()
}
