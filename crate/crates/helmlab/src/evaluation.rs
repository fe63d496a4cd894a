//! Error metrics, direction-recovery reports, and field extraction.
//!
//! The primary error metric compares solution *moduli* on a uniform test
//! grid: ε = ‖(|u*| − |u_h|)‖₂ / ‖|u*|‖₂, with Accuracy = −log₁₀ ε. Being
//! modulus-based it is blind to a global phase of the numerical solution.
//! A phase-sensitive complex relative L² error is available as a secondary
//! diagnostic.

use crate::problems::{HelmholtzProblem, ProblemError};
use crate::specfun::Cplx;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("exact solution vanishes identically on the grid")]
    ZeroExactSolution,
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// Uniform cell-centered grid over a rectangle, row-major with x varying
/// fastest. Cell centers keep every point strictly interior, where the
/// exact solutions and their normals are unambiguous.
#[derive(Clone, Debug)]
pub struct EvalGrid {
    pub rows: usize,
    pub cols: usize,
    pub points: Vec<[f64; 2]>,
}

impl EvalGrid {
    pub fn cell_centered(domain: &crate::problems::RectDomain, rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1);
        let dx = domain.width() / cols as f64;
        let dy = domain.height() / rows as f64;
        let mut points = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let y = domain.y_min + (r as f64 + 0.5) * dy;
            for c in 0..cols {
                let x = domain.x_min + (c as f64 + 0.5) * dx;
                points.push([x, y]);
            }
        }
        Self { rows, cols, points }
    }

    /// The default 100×100 (10000-point) test grid for a problem's domain.
    pub fn default_for(problem: &HelmholtzProblem) -> Self {
        Self::cell_centered(&problem.domain, 100, 100)
    }
}

/// Relative modulus-L2 error ε of a numerical field against the exact
/// solution on the grid.
pub fn relative_modulus_l2<F>(
    u_h: F,
    problem: &HelmholtzProblem,
    grid: &EvalGrid,
) -> Result<f64, EvalError>
where
    F: Fn([f64; 2]) -> Cplx,
{
    let mut num = 0.0;
    let mut den = 0.0;
    for &x in &grid.points {
        let exact = problem.exact_value(x)?.norm();
        let approx = u_h(x).norm();
        num += (exact - approx) * (exact - approx);
        den += exact * exact;
    }
    if den == 0.0 {
        return Err(EvalError::ZeroExactSolution);
    }
    Ok((num / den).sqrt())
}

/// Phase-sensitive diagnostic: ‖u* − u_h‖₂ / ‖u*‖₂ on the grid. Not the
/// primary metric (which compares moduli only); useful for spotting global
/// phase drift.
pub fn complex_relative_l2<F>(
    u_h: F,
    problem: &HelmholtzProblem,
    grid: &EvalGrid,
) -> Result<f64, EvalError>
where
    F: Fn([f64; 2]) -> Cplx,
{
    let mut num = 0.0;
    let mut den = 0.0;
    for &x in &grid.points {
        let exact = problem.exact_value(x)?;
        num += (exact - u_h(x)).norm_sqr();
        den += exact.norm_sqr();
    }
    if den == 0.0 {
        return Err(EvalError::ZeroExactSolution);
    }
    Ok((num / den).sqrt())
}

/// Accuracy = −log₁₀ ε; +∞ when ε is exactly zero.
pub fn accuracy(epsilon: f64) -> f64 {
    assert!(epsilon >= 0.0);
    if epsilon == 0.0 {
        f64::INFINITY
    } else {
        -epsilon.log10()
    }
}

/// One matched (true, learned) direction pair; angles in radians, error in
/// degrees.
#[derive(Clone, Debug, Serialize)]
pub struct DirectionMatch {
    pub true_angle: f64,
    pub learned_angle: f64,
    pub error_deg: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DirectionReport {
    pub matches: Vec<DirectionMatch>,
    pub mean_error_deg: f64,
    pub max_error_deg: f64,
    /// learned directions left unmatched (angles, radians)
    pub unmatched_learned: Vec<f64>,
    /// learned wavevector norms divided by k
    pub amplitudes: Vec<f64>,
}

fn angle_of(v: [f64; 2]) -> f64 {
    v[1].atan2(v[0])
}

fn angular_distance(a: f64, b: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let d = (a - b).rem_euclid(two_pi);
    d.min(two_pi - d)
}

/// Greedy nearest-angle matching of learned directions against the true
/// ones: repeatedly pair the globally closest unmatched (true, learned)
/// couple. Ties break on index order, so the report is deterministic.
pub fn direction_report(
    learned: &[[f64; 2]],
    true_wavevectors: &[[f64; 2]],
    k: f64,
) -> DirectionReport {
    assert!(!learned.is_empty() && !true_wavevectors.is_empty());
    let learned_angles: Vec<f64> = learned.iter().map(|v| angle_of(*v)).collect();
    let true_angles: Vec<f64> = true_wavevectors.iter().map(|v| angle_of(*v)).collect();
    let mut used_learned = vec![false; learned_angles.len()];
    let mut used_true = vec![false; true_angles.len()];
    let mut matches = Vec::new();
    let pairs = learned_angles.len().min(true_angles.len());
    for _ in 0..pairs {
        let mut best: Option<(f64, usize, usize)> = None;
        for (ti, &ta) in true_angles.iter().enumerate() {
            if used_true[ti] {
                continue;
            }
            for (li, &la) in learned_angles.iter().enumerate() {
                if used_learned[li] {
                    continue;
                }
                let d = angular_distance(ta, la);
                if best.map_or(true, |(bd, _, _)| d < bd) {
                    best = Some((d, ti, li));
                }
            }
        }
        let (d, ti, li) = best.unwrap();
        used_true[ti] = true;
        used_learned[li] = true;
        matches.push(DirectionMatch {
            true_angle: true_angles[ti],
            learned_angle: learned_angles[li],
            error_deg: d.to_degrees(),
        });
    }
    let mean_error_deg = matches.iter().map(|m| m.error_deg).sum::<f64>() / matches.len() as f64;
    let max_error_deg = matches.iter().map(|m| m.error_deg).fold(0.0, f64::max);
    let unmatched_learned = learned_angles
        .iter()
        .zip(&used_learned)
        .filter(|(_, used)| !**used)
        .map(|(a, _)| *a)
        .collect();
    let amplitudes = learned
        .iter()
        .map(|v| (v[0] * v[0] + v[1] * v[1]).sqrt() / k)
        .collect();
    DirectionReport {
        matches,
        mean_error_deg,
        max_error_deg,
        unmatched_learned,
        amplitudes,
    }
}

/// Real- and imaginary-part grids of a field, row-major, plot-ready.
pub fn field_grids<F>(u: F, grid: &EvalGrid) -> (Vec<f64>, Vec<f64>)
where
    F: Fn([f64; 2]) -> Cplx,
{
    let mut re = Vec::with_capacity(grid.points.len());
    let mut im = Vec::with_capacity(grid.points.len());
    for &x in &grid.points {
        let v = u(x);
        re.push(v.re);
        im.push(v.im);
    }
    (re, im)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::exp_i;
    use crate::problems::{random_directions, HelmholtzProblem, RectDomain};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn test_problem() -> HelmholtzProblem {
        let k = 5.0;
        HelmholtzProblem::plane_wave_mix(
            RectDomain::new(-1.0, 1.0, -1.0, 1.0),
            k,
            random_directions(3, k, 8),
        )
        .unwrap()
    }

    #[test]
    fn grid_shape_and_interiority() {
        let p = test_problem();
        let grid = EvalGrid::default_for(&p);
        assert_eq!(grid.points.len(), 10_000);
        assert_eq!(grid.rows * grid.cols, grid.points.len());
        for &x in &grid.points {
            assert!(x[0] > -1.0 && x[0] < 1.0 && x[1] > -1.0 && x[1] < 1.0);
        }
        // row-major with x fastest
        assert!(grid.points[1][0] > grid.points[0][0]);
        assert_eq!(grid.points[1][1], grid.points[0][1]);
    }

    #[test]
    fn epsilon_zero_for_exact_field() {
        let p = test_problem();
        let grid = EvalGrid::cell_centered(&p.domain, 20, 20);
        let eps = relative_modulus_l2(|x| p.exact_value(x).unwrap(), &p, &grid).unwrap();
        assert_eq!(eps, 0.0);
        assert_eq!(accuracy(eps), f64::INFINITY);
    }

    #[test]
    fn epsilon_ignores_global_phase() {
        let p = test_problem();
        let grid = EvalGrid::cell_centered(&p.domain, 20, 20);
        let phase = exp_i(Cplx::new(1.234, 0.0));
        let eps =
            relative_modulus_l2(|x| p.exact_value(x).unwrap() * phase, &p, &grid).unwrap();
        assert!(eps < 1e-15);
        // while the phase-sensitive diagnostic sees it
        let c = complex_relative_l2(|x| p.exact_value(x).unwrap() * phase, &p, &grid).unwrap();
        assert!(c > 0.5);
    }

    #[test]
    fn epsilon_scaling_is_exact() {
        let p = test_problem();
        let grid = EvalGrid::cell_centered(&p.domain, 20, 20);
        let eps =
            relative_modulus_l2(|x| p.exact_value(x).unwrap() * 1.1, &p, &grid).unwrap();
        assert_abs_diff_eq!(eps, 0.1, epsilon = 1e-12);
    }

    #[test]
    fn accuracy_values() {
        assert_abs_diff_eq!(accuracy(1e-3), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(accuracy(2.3e-4), 3.638, epsilon = 1e-3);
        assert_abs_diff_eq!(accuracy(1.0), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn direction_report_identical_and_rotated() {
        let k = 5.0;
        let dirs = random_directions(8, k, 3);
        let report = direction_report(&dirs, &dirs, k);
        assert_eq!(report.matches.len(), 8);
        assert_abs_diff_eq!(report.max_error_deg, 0.0, epsilon = 1e-12);
        assert!(report.unmatched_learned.is_empty());
        for a in &report.amplitudes {
            assert_abs_diff_eq!(*a, 1.0, epsilon = 1e-12);
        }

        // uniform 2 degree rotation
        let two_deg = 2.0f64.to_radians();
        let rotated: Vec<[f64; 2]> = dirs
            .iter()
            .map(|v| {
                let a = v[1].atan2(v[0]) + two_deg;
                [k * a.cos(), k * a.sin()]
            })
            .collect();
        let report = direction_report(&rotated, &dirs, k);
        assert_abs_diff_eq!(report.max_error_deg, 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(report.mean_error_deg, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn direction_report_extra_learned_are_unmatched() {
        let k = 2.0;
        let true_dirs = vec![[k, 0.0]];
        let learned = vec![[0.0, k], [k, 0.0], [0.0, -k]];
        let report = direction_report(&learned, &true_dirs, k);
        assert_eq!(report.matches.len(), 1);
        assert_abs_diff_eq!(report.matches[0].error_deg, 0.0, epsilon = 1e-12);
        assert_eq!(report.unmatched_learned.len(), 2);
    }

    #[test]
    fn field_grid_values() {
        let p = test_problem();
        let grid = EvalGrid::cell_centered(&p.domain, 5, 7);
        let (re, im) = field_grids(|_| Cplx::ONE, &grid);
        assert_eq!(re.len(), 35);
        assert!(re.iter().all(|&v| v == 1.0));
        assert!(im.iter().all(|&v| v == 0.0));
        let (re, im) = field_grids(|x| p.exact_value(x).unwrap(), &grid);
        for (i, &x) in grid.points.iter().enumerate() {
            let v = p.exact_value(x).unwrap();
            assert_eq!(re[i], v.re);
            assert_eq!(im[i], v.im);
        }
    }

    proptest! {
        /// ε is exactly invariant under a unit-modulus rescaling of u_h and
        /// scale-covariant under real positive rescaling of the exact field.
        #[test]
        fn epsilon_invariances(phi in 0.0..(2.0 * std::f64::consts::PI), c in 0.1f64..4.0) {
            let p = test_problem();
            let grid = EvalGrid::cell_centered(&p.domain, 8, 8);
            let phase = exp_i(Cplx::new(phi, 0.0));
            let base = relative_modulus_l2(|x| p.exact_value(x).unwrap(), &p, &grid).unwrap();
            let rotated = relative_modulus_l2(|x| p.exact_value(x).unwrap() * phase, &p, &grid).unwrap();
            prop_assert!((base - rotated).abs() < 1e-12);
            let scaled = relative_modulus_l2(|x| p.exact_value(x).unwrap() * c, &p, &grid).unwrap();
            prop_assert!((scaled - (c - 1.0).abs()).abs() < 1e-9);
        }
    }
}
