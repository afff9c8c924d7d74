//! Inverse integration: recover a few narrow plateaus from their noisy
//! running integral and print the iteration table.
//!
//!     cargo run --release --example inverse_integration -- [n] [seed]

use ssn_l1::harness::{render, run_experiment, OutputFormat};
use ssn_l1::{ExperimentSpec, RunConfig};

fn main() -> ssn_l1::Result<()> {
    let mut args = std::env::args().skip(1);
    let n = args.next().map_or(500, |s| s.parse().expect("n"));
    let seed = args.next().map_or(1, |s| s.parse().expect("seed"));

    let mut cfg = RunConfig::experiment(ExperimentSpec::inverse_integration(n).with_seed(seed));
    cfg.certify = true;
    let outcome = run_experiment(&cfg)?;
    print!("{}", render(&outcome, OutputFormat::Table)?);

    let u = &outcome.report.solution;
    let support = u.iter().filter(|&&x| x != 0.0).count();
    println!("{support} of {n} coefficients are nonzero");
    Ok(())
}
