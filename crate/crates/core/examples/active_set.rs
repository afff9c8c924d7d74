//! The Newton iteration written as a primal active-set method: each step
//! solves an equality-constrained least-squares problem on the current
//! sign pattern. Both forms produce the same iterates.

use ndarray::Array1;
use ssn_l1::{
    active_inactive, make_instance, solve_active_set, solve_ssn, ExperimentSpec, SolveOptions, StopRule,
};

fn main() -> ssn_l1::Result<()> {
    let (p, _) = make_instance(&ExperimentSpec::inverse_integration(300))?;
    let u0 = Array1::zeros(300);
    let opts = SolveOptions {
        stop_rule: StopRule::SignStabilization,
        ..SolveOptions::default()
    };

    let newton = solve_ssn(&p, u0.view(), &opts)?;
    let a0 = active_inactive(&p, u0.view())?;
    let active = solve_active_set(&p, &a0, &opts)?;

    println!("  n  |A| newton  |A| active-set  Psi newton    Psi active-set");
    for (a, b) in newton.records.iter().skip(1).zip(&active.records) {
        println!(
            "{:>3}  {:>10}  {:>14}  {:.6e}  {:.6e}",
            a.n, a.active_size, b.active_size, a.objective, b.objective
        );
    }
    let diff = &newton.solution - &active.solution;
    println!(
        "newton: {} steps, active set: {} solves, |difference| = {:.2e}",
        newton.iterations,
        active.iterations,
        diff.dot(&diff).sqrt()
    );
    Ok(())
}
