//! Solving your own problem: build `K`, `f` and `w`, solve, and exchange
//! the instance through CSV files that the `ssn-l1` binary can read.

use ndarray::{array, Array1};
use ssn_l1::derivative::rule_of_thumb_gamma;
use ssn_l1::harness::{load_instance, solve_with};
use ssn_l1::problems::InstanceBundle;
use ssn_l1::{certify, LinearMap, Problem, SolveOptions, SolverKind, Weights};

fn main() -> ssn_l1::Result<()> {
    // A small overdetermined system with a two-sparse answer.
    let k = array![
        [1.0, 0.2, 0.0, 0.1],
        [0.0, 1.0, 0.3, 0.0],
        [0.4, 0.0, 1.0, 0.2],
        [0.0, 0.1, 0.0, 1.0],
        [0.5, 0.5, 0.5, 0.5],
    ];
    let u_true = array![2.0, 0.0, -1.0, 0.0];
    let f = k.dot(&u_true);
    let w = Weights::constant(4, 0.05)?;
    let k = LinearMap::dense(k);

    // The library default γ = 1/‖K‖² is safe for ISTA but can make the
    // Newton iteration cycle between sign patterns, as it does here.
    let p = Problem::with_default_gamma(k.clone(), f.clone(), w.clone())?;
    let report = solve_with(&p, SolverKind::Ssn, &SolveOptions::default())?;
    println!("gamma = {:.4}: {:?} {:?}", p.gamma(), report.status, report.warnings);

    // γ = 1/λ_min(K^T K) is a better choice for the Newton method.
    let all: Vec<usize> = (0..4).collect();
    let p = p.with_gamma(rule_of_thumb_gamma(&k, &all)?)?;
    let report = solve_with(&p, SolverKind::Ssn, &SolveOptions::default())?;
    println!("gamma = {:.4}: {:?} after {} iterations", p.gamma(), report.status, report.iterations);
    println!("u = {:.6}", report.solution);
    println!("gap = {:.3e}", certify(&p, report.solution.view())?.gap);

    let dir = std::env::temp_dir().join("ssn-l1-custom-problem");
    InstanceBundle::from_problem(&p, Some(u_true.view())).write_csv_dir(&dir)?;
    println!("wrote {} (try: ssn-l1 solve --instance {})", dir.display(), dir.display());

    let back = load_instance(&dir)?.to_problem()?;
    let again = solve_with(&back, SolverKind::ActiveSet, &SolveOptions::default())?;
    let diff: Array1<f64> = &again.solution - &report.solution;
    println!("re-read and solved with the active-set form: |difference| = {:.2e}", diff.dot(&diff).sqrt());
    Ok(())
}
