//! Sparse spikes from a few orthonormal Gaussian measurements.
//!
//!     cargo run --release --example compressed_sensing -- [n] [m] [seed]
//!
//! `-- 8192 512` runs the full-size problem (a few seconds).

use ssn_l1::harness::{render, run_experiment, OutputFormat};
use ssn_l1::{ExperimentSpec, RunConfig};

fn main() -> ssn_l1::Result<()> {
    let mut args = std::env::args().skip(1);
    let n = args.next().map_or(1024, |s| s.parse().expect("n"));
    let m = args.next().map_or(64, |s| s.parse().expect("m"));
    let seed = args.next().map_or(1, |s| s.parse().expect("seed"));
    let spec = ExperimentSpec::compressed_sensing(n, m).with_seed(seed);
    let spikes = spec.spikes();

    let outcome = run_experiment(&RunConfig::experiment(spec))?;
    print!("{}", render(&outcome, OutputFormat::Table)?);

    let truth = outcome.truth.as_ref().expect("experiments keep the ground truth");
    let u = &outcome.report.solution;
    let hits = truth.u_true.iter().zip(u).filter(|(t, x)| **t != 0.0 && **x != 0.0).count();
    let extra = truth.u_true.iter().zip(u).filter(|(t, x)| **t == 0.0 && **x != 0.0).count();
    println!("{hits} of {spikes} spikes found, {extra} spurious coefficients");
    Ok(())
}
