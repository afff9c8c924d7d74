//! Wall time against problem size for the Newton method on the inverse
//! integration problem, with the fitted exponent of `t ~ N^β`.
//!
//!     cargo run --release --example scaling -- [ssn|active-set|ista]

use ssn_l1::harness::DEFAULT_SCALING_SIZES;
use ssn_l1::{run_scaling, ExperimentSpec, RunConfig, SolverKind};

fn main() -> ssn_l1::Result<()> {
    let solver: SolverKind = std::env::args().nth(1).map_or(Ok(SolverKind::Ssn), |s| s.parse())?;
    let mut cfg = RunConfig::scaling(ExperimentSpec::inverse_integration(500), &DEFAULT_SCALING_SIZES);
    cfg.solver = solver;
    if solver == SolverKind::Ista {
        cfg.options.max_iters = 2000;
        cfg.timing_repeats = 1;
    }
    let result = run_scaling(&cfg, &DEFAULT_SCALING_SIZES)?;
    print!("{}", result.format_table());
    Ok(())
}
