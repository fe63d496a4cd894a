use helmlab::experiments::*;
use helmlab::lbfgs::LbfgsConfig;
use std::time::Instant;

fn main() {
    // single unit, single wave
    print!("d=1 units=1 k=5: ");
    for seed in 0..10 {
        let spec = RunSpec {
            problem: ProblemSpec::Waves { k: 5.0, directions: 1, direction_seed: seed, domain: [-1.0, 1.0, -1.0, 1.0] },
            solver: SolverKind::Pwnn, layers: 1, units: 1,
            n_interior: 500, n_per_edge: 50, lambda: None,
            optimizer: LbfgsConfig { max_iter: 50000, ..Default::default() },
            quad_ppw: 10.0, regularization: None, alpha_grid: 16, refine_tol: 1e-5,
            grid: [50, 50], seeds: vec![seed],
        };
        let a = run_single(&spec, seed);
        print!("{:.0e} ", a.row.epsilon);
    }
    println!();
    // KD k=5 L1 U20 (paper cell 6.9e-6)
    print!("kd k=5 L1 U20: ");
    for seed in 0..5 {
        let t = Instant::now();
        let spec = RunSpec {
            problem: ProblemSpec::Circular { k: 5.0, order: 1, domain: [0.0, 1.0, -0.5, 0.5] },
            solver: SolverKind::Pwnn, layers: 1, units: 20,
            n_interior: 125, n_per_edge: 25, lambda: None,
            optimizer: LbfgsConfig { max_iter: 50000, ..Default::default() },
            quad_ppw: 10.0, regularization: None, alpha_grid: 16, refine_tol: 1e-5,
            grid: [100, 100], seeds: vec![seed],
        };
        let a = run_single(&spec, seed);
        print!("{:.1e}({},{:.0}s) ", a.row.epsilon, a.row.iterations, t.elapsed().as_secs_f64());
    }
    println!();
    // KD k=20 L1 U40 (paper cell 7.9e-7)
    print!("kd k=20 L1 U40: ");
    for seed in 0..2 {
        let t = Instant::now();
        let spec = RunSpec {
            problem: ProblemSpec::Circular { k: 20.0, order: 1, domain: [0.0, 1.0, -0.5, 0.5] },
            solver: SolverKind::Pwnn, layers: 1, units: 40,
            n_interior: 2000, n_per_edge: 100, lambda: None,
            optimizer: LbfgsConfig { max_iter: 50000, ..Default::default() },
            quad_ppw: 10.0, regularization: None, alpha_grid: 16, refine_tol: 1e-5,
            grid: [100, 100], seeds: vec![seed],
        };
        let a = run_single(&spec, seed);
        print!("{:.1e}({},{:.0}s) ", a.row.epsilon, a.row.iterations, t.elapsed().as_secs_f64());
    }
    println!();
}
