//! Iterated soft-thresholding next to the Newton method on the same
//! instance. ISTA needs many thousands of steps on ill-conditioned
//! operators; the Newton method a handful.
//!
//!     cargo run --release --example ista_baseline -- [n] [max ISTA iterations]

use ndarray::Array1;
use ssn_l1::{make_instance, solve_ista, solve_ssn, ExperimentSpec, SolveOptions, StopRule};

fn main() -> ssn_l1::Result<()> {
    let mut args = std::env::args().skip(1);
    let n = args.next().map_or(200, |s| s.parse().expect("n"));
    let cap = args.next().map_or(20_000, |s| s.parse().expect("iterations"));
    let (p, _) = make_instance(&ExperimentSpec::inverse_integration(n))?;
    let u0 = Array1::zeros(n);

    let opts = SolveOptions {
        stop_rule: StopRule::ResidualNorm,
        residual_tol: 1e-8,
        ..SolveOptions::default()
    };
    let ssn = solve_ssn(&p, u0.view(), &opts)?;
    let ista = solve_ista(&p, u0.view(), &SolveOptions { max_iters: cap, ..opts })?;
    for w in &ista.warnings {
        println!("ista: {w}");
    }
    for (name, r) in [("ssn", &ssn), ("ista", &ista)] {
        println!(
            "{name:>4}: {:?}, {} iterations, {:.3e} s, Psi = {:.8e}, |r| = {:.2e}",
            r.status,
            r.iterations,
            r.wall_time,
            r.final_objective(),
            r.final_residual()
        );
    }
    // ISTA's objective gap after k steps.
    for k in [10, 100, 1000, 10_000] {
        if let Some(rec) = ista.records.get(k) {
            println!("  ista n = {k:>5}: Psi - Psi_ssn = {:.3e}", rec.objective - ssn.final_objective());
        }
    }
    Ok(())
}
