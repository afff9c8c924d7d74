//! Duality-gap certificates: a solver output is certified, a perturbed
//! point and the zero vector are not.

use ndarray::Array1;
use ssn_l1::{certify, make_instance, solve_ssn, DualCertificate, ExperimentSpec, SolveOptions};

fn show(label: &str, c: &DualCertificate) {
    let tol = c.default_gap_tolerance();
    println!(
        "{label:>10}: gap {:.3e}  margin {:.3e}  complementarity {:.3e}  dual scale {:.3}  certified {}",
        c.gap,
        c.feasibility_margin,
        c.complementarity_violation,
        c.dual_scale,
        c.certifies(tol)
    );
}

fn main() -> ssn_l1::Result<()> {
    let (p, _) = make_instance(&ExperimentSpec::compressed_sensing(512, 48))?;
    let report = solve_ssn(&p, Array1::zeros(512).view(), &SolveOptions::default())?;
    let u = report.solution;
    show("solution", &certify(&p, u.view())?);

    let mut nudged = u.clone();
    let k = u.iter().position(|&x| x != 0.0).unwrap_or(0);
    nudged[k] += 0.1;
    show("perturbed", &certify(&p, nudged.view())?);
    show("zero", &certify(&p, Array1::zeros(512).view())?);
    Ok(())
}
