//! Convergence of the plane-wave Trefftz method on the circular-wave
//! problem: relative modulus-L2 error against basis size, with the
//! condition estimate of the boundary system.
//!
//! ```bash
//! cargo run --release --example plane_wave_convergence
//! ```

use helmlab::evaluation::{accuracy, relative_modulus_l2, EvalGrid};
use helmlab::problems::{HelmholtzProblem, RectDomain};
use helmlab::pwpum::{assemble, solve, uniform_basis, PWSolution};

fn main() {
    let k = 10.0;
    let problem = HelmholtzProblem::circular(RectDomain::new(0.0, 1.0, -0.5, 0.5), k, 1);
    let grid = EvalGrid::default_for(&problem);

    println!("circular wave, k = {k}, order 1, domain [0,1] x [-0.5,0.5]");
    println!("{:>6} {:>12} {:>10} {:>12}", "units", "epsilon", "accuracy", "cond(M)");
    for units in (5..=19).step_by(2).chain([21, 25, 31]) {
        let basis = uniform_basis(units, k);
        let system = assemble(&basis, &problem, 10.0).expect("assembly");
        let outcome = solve(&system, system.default_regularization());
        let solution = PWSolution {
            basis,
            coefficients: outcome.coefficients,
            alpha: 0.0,
        };
        let eps = relative_modulus_l2(|x| solution.evaluate(x), &problem, &grid)
            .expect("error metric");
        let flag = if outcome.ill_conditioned { " (ill-conditioned)" } else { "" };
        println!(
            "{units:>6} {eps:>12.3e} {:>10.2} {:>12.2e}{flag}",
            accuracy(eps),
            system.condition_estimate
        );
    }

    let k = 100.0;
    let problem = HelmholtzProblem::circular(RectDomain::new(0.0, 1.0, -0.5, 0.5), k, 1);
    let grid = EvalGrid::default_for(&problem);
    println!("\ncircular wave, k = {k}");
    println!("{:>6} {:>12} {:>10} {:>12}", "units", "epsilon", "accuracy", "cond(M)");
    for units in [100, 105, 110, 115, 120, 125] {
        let basis = uniform_basis(units, k);
        let system = assemble(&basis, &problem, 10.0).expect("assembly");
        let outcome = solve(&system, system.default_regularization());
        let solution = PWSolution {
            basis,
            coefficients: outcome.coefficients,
            alpha: 0.0,
        };
        let eps = relative_modulus_l2(|x| solution.evaluate(x), &problem, &grid)
            .expect("error metric");
        let flag = if outcome.ill_conditioned { " (ill-conditioned)" } else { "" };
        println!(
            "{units:>6} {eps:>12.3e} {:>10.2} {:>12.2e}{flag}",
            accuracy(eps),
            system.condition_estimate
        );
    }
}
