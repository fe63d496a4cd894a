//! Limited-memory BFGS with a strong Wolfe line search.
//!
//! Two-loop recursion over the most recent `m` curvature pairs, initial
//! Hessian scaling γ = s·y / y·y, and a bracket-and-zoom line search with
//! cubic interpolation. Every accepted step satisfies the Armijo condition,
//! so the recorded loss sequence is non-increasing. A run stops on the
//! gradient tolerance, the iteration cap, or when the line search cannot
//! make progress (recorded, not an error — in double precision that is the
//! usual way a well-converged run ends, since the default gradient
//! tolerance of 2e-16 is rarely attainable).

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LbfgsConfig {
    /// number of stored curvature pairs
    pub memory: usize,
    pub max_iter: usize,
    /// stop when the gradient infinity norm drops below this
    pub grad_tol_inf: f64,
    pub wolfe_c1: f64,
    pub wolfe_c2: f64,
    pub max_line_search_steps: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self {
            memory: 50,
            max_iter: 50_000,
            grad_tol_inf: 2e-16,
            wolfe_c1: 1e-4,
            wolfe_c2: 0.9,
            max_line_search_steps: 40,
        }
    }
}

impl LbfgsConfig {
    pub fn validate(&self) -> Result<(), LbfgsError> {
        if !(self.wolfe_c1 > 0.0 && self.wolfe_c1 < self.wolfe_c2 && self.wolfe_c2 < 1.0) {
            return Err(LbfgsError::BadConfig("requires 0 < c1 < c2 < 1".to_string()));
        }
        if self.memory == 0 {
            return Err(LbfgsError::BadConfig("memory must be >= 1".to_string()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradTol,
    MaxIter,
    LineSearchFail,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Termination::GradTol => "grad_tol",
            Termination::MaxIter => "max_iter",
            Termination::LineSearchFail => "line_search_fail",
        };
        f.write_str(s)
    }
}

/// Per-iteration record of a minimization run. Entry 0 describes the
/// starting point (step length 0); entry i the state after step i.
#[derive(Clone, Debug)]
pub struct OptTrace {
    pub loss: Vec<f64>,
    pub grad_inf_norm: Vec<f64>,
    pub step_lengths: Vec<f64>,
    pub termination: Termination,
}

impl OptTrace {
    pub fn iterations(&self) -> usize {
        self.loss.len() - 1
    }

    pub fn final_loss(&self) -> f64 {
        *self.loss.last().unwrap()
    }
}

#[derive(Debug, Error)]
pub enum LbfgsError {
    #[error("objective returned a non-finite {what} at iteration {iteration}")]
    NonFinite { what: &'static str, iteration: usize },
    #[error("invalid configuration: {0}")]
    BadConfig(String),
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Two-loop recursion: returns -H·grad where H is the inverse Hessian
/// approximation built from the stored (s, y, 1/s·y) triples, with initial
/// scaling γ = s·y / y·y from the most recent pair.
pub fn two_loop_direction(history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>, grad: &[f64]) -> Vec<f64> {
    let mut q: Vec<f64> = grad.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let alpha = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= alpha * yi;
        }
        alphas.push(alpha);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), alpha) in history.iter().zip(alphas.iter().rev()) {
        let beta = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (alpha - beta) * si;
        }
    }
    for qi in q.iter_mut() {
        *qi = -*qi;
    }
    q
}

/// Minimize `objective` from `theta0`. The objective maps parameters to
/// (loss, gradient); both must be finite wherever the search evaluates
/// them.
pub fn minimize<F>(
    mut objective: F,
    theta0: &[f64],
    config: &LbfgsConfig,
) -> Result<(Vec<f64>, OptTrace), LbfgsError>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    config.validate()?;
    let mut theta = theta0.to_vec();
    let (mut f, mut grad) = objective(&theta);
    check_finite(f, &grad, 0)?;

    let mut trace = OptTrace {
        loss: vec![f],
        grad_inf_norm: vec![inf_norm(&grad)],
        step_lengths: vec![0.0],
        termination: Termination::MaxIter,
    };
    if inf_norm(&grad) <= config.grad_tol_inf {
        trace.termination = Termination::GradTol;
        return Ok((theta, trace));
    }

    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(config.memory);

    for iteration in 1..=config.max_iter {
        let mut direction = two_loop_direction(&history, &grad);
        let mut gtd = dot(&grad, &direction);
        if !gtd.is_finite() || gtd >= 0.0 {
            // curvature information went bad; restart from steepest descent
            history.clear();
            direction = grad.iter().map(|g| -g).collect();
            gtd = dot(&grad, &direction);
        }
        let t0 = if history.is_empty() {
            1.0 / (1.0 + norm2(&grad))
        } else {
            1.0
        };

        let mut ls = line_search(
            &mut objective,
            &theta,
            &direction,
            f,
            gtd,
            t0,
            config,
            iteration,
        )?;
        if ls.is_none() && !history.is_empty() {
            // stale curvature can make the quasi-Newton direction
            // unsearchable; retry once from steepest descent
            history.clear();
            direction = grad.iter().map(|g| -g).collect();
            gtd = dot(&grad, &direction);
            ls = line_search(
                &mut objective,
                &theta,
                &direction,
                f,
                gtd,
                1.0 / (1.0 + norm2(&grad)),
                config,
                iteration,
            )?;
        }
        let Some((t, f_new, grad_new)) = ls else {
            trace.termination = Termination::LineSearchFail;
            return Ok((theta, trace));
        };

        let s: Vec<f64> = direction.iter().map(|d| t * d).collect();
        let y: Vec<f64> = grad_new.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm2(&s) * norm2(&y) {
            if history.len() == config.memory {
                history.pop_front();
            }
            history.push_back((s.clone(), y, 1.0 / sy));
        }
        for (ti, si) in theta.iter_mut().zip(&s) {
            *ti += si;
        }
        f = f_new;
        grad = grad_new;
        trace.loss.push(f);
        trace.grad_inf_norm.push(inf_norm(&grad));
        trace.step_lengths.push(t);
        if inf_norm(&grad) <= config.grad_tol_inf {
            trace.termination = Termination::GradTol;
            return Ok((theta, trace));
        }
    }
    trace.termination = Termination::MaxIter;
    Ok((theta, trace))
}

fn check_finite(f: f64, grad: &[f64], iteration: usize) -> Result<(), LbfgsError> {
    if !f.is_finite() {
        return Err(LbfgsError::NonFinite {
            what: "loss",
            iteration,
        });
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(LbfgsError::NonFinite {
            what: "gradient",
            iteration,
        });
    }
    Ok(())
}

/// Minimizer of the cubic Hermite interpolant through (x1, f1, g1) and
/// (x2, f2, g2), clamped to the given bounds.
fn cubic_interpolate(x1: f64, f1: f64, g1: f64, x2: f64, f2: f64, g2: f64, bounds: (f64, f64)) -> f64 {
    let (lo, hi) = bounds;
    let d1 = g1 + g2 - 3.0 * (f1 - f2) / (x1 - x2);
    let d2_sq = d1 * d1 - g1 * g2;
    if d2_sq >= 0.0 {
        let d2 = d2_sq.sqrt();
        let min_pos = if x1 <= x2 {
            x2 - (x2 - x1) * ((g2 + d2 - d1) / (g2 - g1 + 2.0 * d2))
        } else {
            x1 - (x1 - x2) * ((g1 + d2 - d1) / (g1 - g2 + 2.0 * d2))
        };
        if min_pos.is_finite() {
            min_pos.clamp(lo, hi)
        } else {
            0.5 * (lo + hi)
        }
    } else {
        0.5 * (lo + hi)
    }
}

/// Strong Wolfe line search (bracket then zoom). `Ok(None)` means no
/// acceptable step was found within the evaluation budget.
#[allow(clippy::too_many_arguments)]
fn line_search<F>(
    objective: &mut F,
    theta: &[f64],
    direction: &[f64],
    f0: f64,
    gtd0: f64,
    t0: f64,
    config: &LbfgsConfig,
    iteration: usize,
) -> Result<Option<(f64, f64, Vec<f64>)>, LbfgsError>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let c1 = config.wolfe_c1;
    let c2 = config.wolfe_c2;
    let mut evals = 0usize;
    let mut probe = |t: f64, evals: &mut usize| -> Result<(f64, Vec<f64>, f64), LbfgsError> {
        *evals += 1;
        let point: Vec<f64> = theta.iter().zip(direction).map(|(x, d)| x + t * d).collect();
        let (f, g) = objective(&point);
        check_finite(f, &g, iteration)?;
        let gtd = dot(&g, direction);
        Ok((f, g, gtd))
    };

    // Bracketing phase.
    let mut t_prev = 0.0;
    let mut f_prev = f0;
    let mut gtd_prev = gtd0;
    let mut t = t0;
    let mut bracket = None;
    while evals < config.max_line_search_steps {
        let (f_t, g_t, gtd_t) = probe(t, &mut evals)?;
        if f_t > f0 + c1 * t * gtd0 || (evals > 1 && f_t >= f_prev) {
            bracket = Some((t_prev, f_prev, gtd_prev, None, t, f_t, gtd_t));
            break;
        }
        if gtd_t.abs() <= -c2 * gtd0 {
            return Ok(Some((t, f_t, g_t)));
        }
        if gtd_t >= 0.0 {
            bracket = Some((t, f_t, gtd_t, Some(g_t), t_prev, f_prev, gtd_prev));
            break;
        }
        // extrapolate
        let t_next = cubic_interpolate(
            t_prev,
            f_prev,
            gtd_prev,
            t,
            f_t,
            gtd_t,
            (t + 0.01 * (t - t_prev), 10.0 * t),
        );
        t_prev = t;
        f_prev = f_t;
        gtd_prev = gtd_t;
        t = t_next;
    }
    let Some((mut lo, mut f_lo, mut gtd_lo, mut g_lo, mut hi, mut f_hi, mut gtd_hi)) = bracket
    else {
        return Ok(None); // budget exhausted while bracketing
    };

    // Zoom phase.
    let mut insufficient_progress = false;
    while evals < config.max_line_search_steps {
        if (hi - lo).abs() * inf_norm(direction) < 1e-18 {
            break;
        }
        let mut t = cubic_interpolate(lo, f_lo, gtd_lo, hi, f_hi, gtd_hi, (lo.min(hi), lo.max(hi)));
        // keep trials a fixed fraction away from the bracket ends
        let span = (hi - lo).abs();
        let margin = 0.1 * span;
        let near_edge = (t - lo.min(hi)).min(lo.max(hi) - t) < margin;
        if near_edge {
            if insufficient_progress || t <= lo.min(hi) || t >= lo.max(hi) {
                t = if (t - lo.min(hi)) < (lo.max(hi) - t) {
                    lo.min(hi) + margin
                } else {
                    lo.max(hi) - margin
                };
                insufficient_progress = false;
            } else {
                insufficient_progress = true;
            }
        } else {
            insufficient_progress = false;
        }
        let (f_t, g_t, gtd_t) = probe(t, &mut evals)?;
        if f_t > f0 + c1 * t * gtd0 || f_t >= f_lo {
            hi = t;
            f_hi = f_t;
            gtd_hi = gtd_t;
        } else {
            if gtd_t.abs() <= -c2 * gtd0 {
                return Ok(Some((t, f_t, g_t)));
            }
            if gtd_t * (hi - lo) >= 0.0 {
                hi = lo;
                f_hi = f_lo;
                gtd_hi = gtd_lo;
            }
            lo = t;
            f_lo = f_t;
            gtd_lo = gtd_t;
            g_lo = Some(g_t);
        }
    }
    // Fall back to the best Armijo point seen inside the bracket, if any.
    if lo > 0.0 && f_lo <= f0 + c1 * lo * gtd0 {
        if let Some(g) = g_lo {
            return Ok(Some((lo, f_lo, g)));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Tiny Gaussian elimination, test-side oracle for quadratic minimizers.
    fn solve_linear(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = a.to_vec();
        let mut rhs = b.to_vec();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
                .unwrap();
            m.swap(col, pivot);
            rhs.swap(col, pivot);
            for row in col + 1..n {
                let factor = m[row][col] / m[col][col];
                for c in col..n {
                    m[row][c] -= factor * m[col][c];
                }
                rhs[row] -= factor * rhs[col];
            }
        }
        let mut x = vec![0.0; n];
        for row in (0..n).rev() {
            let mut sum = rhs[row];
            for c in row + 1..n {
                sum -= m[row][c] * x[c];
            }
            x[row] = sum / m[row][row];
        }
        x
    }

    fn quadratic_problem(n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        // A = B^T B + I with a fixed pseudorandom B, b fixed
        let mut rng = crate::rng::XorShift64Star::new(17);
        let b_mat: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.uniform_in(-1.0, 1.0)).collect())
            .collect();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    a[i][j] += b_mat[l][i] * b_mat[l][j];
                }
            }
            a[i][i] += 1.0;
        }
        let rhs: Vec<f64> = (0..n).map(|_| rng.uniform_in(-2.0, 2.0)).collect();
        (a, rhs)
    }

    fn quadratic_objective<'a>(
        a: &'a [Vec<f64>],
        b: &'a [f64],
    ) -> impl Fn(&[f64]) -> (f64, Vec<f64>) + 'a {
        move |theta: &[f64]| {
            let n = b.len();
            let mut ax = vec![0.0; n];
            for i in 0..n {
                for j in 0..n {
                    ax[i] += a[i][j] * theta[j];
                }
            }
            let grad: Vec<f64> = ax.iter().zip(b).map(|(axi, bi)| axi - bi).collect();
            let f = 0.5 * dot(theta, &ax) - dot(b, theta);
            (f, grad)
        }
    }

    fn rosenbrock(x: &[f64]) -> (f64, Vec<f64>) {
        let f = (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let g = vec![
            -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]),
            200.0 * (x[1] - x[0] * x[0]),
        ];
        (f, g)
    }

    #[test]
    fn quadratic_converges_to_linear_solve() {
        let n = 10;
        let (a, b) = quadratic_problem(n);
        let expected = solve_linear(&a, &b);
        let config = LbfgsConfig {
            grad_tol_inf: 1e-10,
            max_iter: 50,
            ..LbfgsConfig::default()
        };
        let (theta, trace) = minimize(quadratic_objective(&a, &b), &vec![0.0; n], &config).unwrap();
        assert_eq!(trace.termination, Termination::GradTol);
        assert!(trace.iterations() <= 50);
        for (t, e) in theta.iter().zip(&expected) {
            assert_abs_diff_eq!(t, e, epsilon = 1e-8);
        }
    }

    #[test]
    fn rosenbrock_converges() {
        let config = LbfgsConfig {
            grad_tol_inf: 1e-10,
            max_iter: 200,
            ..LbfgsConfig::default()
        };
        let (theta, trace) = minimize(rosenbrock, &[-1.2, 1.0], &config).unwrap();
        assert!(trace.iterations() <= 200);
        assert!((theta[0] - 1.0).abs() < 1e-6 && (theta[1] - 1.0).abs() < 1e-6);
        assert!(*trace.grad_inf_norm.last().unwrap() <= 1e-10);
    }

    #[test]
    fn starts_at_minimum() {
        let objective = |x: &[f64]| (dot(x, x), x.iter().map(|v| 2.0 * v).collect());
        let (theta, trace) =
            minimize(objective, &[0.0, 0.0, 0.0], &LbfgsConfig::default()).unwrap();
        assert_eq!(theta, vec![0.0; 3]);
        assert_eq!(trace.termination, Termination::GradTol);
        assert_eq!(trace.iterations(), 0);
    }

    #[test]
    fn monotone_descent() {
        let (a, b) = quadratic_problem(6);
        let config = LbfgsConfig {
            grad_tol_inf: 1e-12,
            max_iter: 100,
            ..LbfgsConfig::default()
        };
        let (_, trace) = minimize(quadratic_objective(&a, &b), &vec![1.0; 6], &config).unwrap();
        for w in trace.loss.windows(2) {
            assert!(w[1] <= w[0], "loss increased: {} -> {}", w[0], w[1]);
        }
        let (_, trace) = minimize(rosenbrock, &[-1.2, 1.0], &config).unwrap();
        for w in trace.loss.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    /// With full memory on a quadratic and exact line steps, the two-loop
    /// direction after n updates reproduces the Newton direction.
    #[test]
    fn two_loop_matches_newton_after_n_exact_steps() {
        let n = 6;
        let (a, b) = quadratic_problem(n);
        let objective = quadratic_objective(&a, &b);
        let mut theta = vec![0.0; n];
        let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
        let (_, mut grad) = objective(&theta);
        for _ in 0..n {
            let d = two_loop_direction(&history, &grad);
            // exact line step for a quadratic: t* = -g·d / (d·A d)
            let mut ad = vec![0.0; n];
            for i in 0..n {
                for j in 0..n {
                    ad[i] += a[i][j] * d[j];
                }
            }
            let t = -dot(&grad, &d) / dot(&d, &ad);
            let s: Vec<f64> = d.iter().map(|di| t * di).collect();
            for (ti, si) in theta.iter_mut().zip(&s) {
                *ti += si;
            }
            let (_, grad_new) = objective(&theta);
            let y: Vec<f64> = grad_new.iter().zip(&grad).map(|(p, q)| p - q).collect();
            let sy = dot(&s, &y);
            history.push_back((s, y, 1.0 / sy));
            grad = grad_new;
        }
        let newton = solve_linear(&a, &grad.iter().map(|g| -g).collect::<Vec<_>>());
        let d = two_loop_direction(&history, &grad);
        let scale = newton.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-30);
        for (di, ni) in d.iter().zip(&newton) {
            assert!((di - ni).abs() / scale < 1e-8, "two-loop {di} vs newton {ni}");
        }
    }

    #[test]
    fn non_finite_objective_is_an_error() {
        let objective = |x: &[f64]| {
            let f = if x[0] < -0.25 {
                f64::NAN
            } else {
                x[0] * x[0] + x[0]
            };
            (f, vec![2.0 * x[0] + 1.0])
        };
        let err = minimize(objective, &[0.0], &LbfgsConfig::default()).unwrap_err();
        assert!(matches!(err, LbfgsError::NonFinite { .. }));
    }

    #[test]
    fn bad_config_rejected() {
        let config = LbfgsConfig {
            wolfe_c1: 0.95,
            wolfe_c2: 0.9,
            ..LbfgsConfig::default()
        };
        assert!(matches!(
            minimize(|x: &[f64]| (x[0] * x[0], vec![2.0 * x[0]]), &[1.0], &config),
            Err(LbfgsError::BadConfig(_))
        ));
    }
}
