//! Deblurring in the Haar basis: ℓ¹ on the wavelet coefficients against
//! classical ℓ² (Tikhonov) regularization over a range of weights.
//!
//!     cargo run --release --example haar_deblur -- [n] [seed]

use ndarray::Array1;
use ssn_l1::problems::l2_reconstruction;
use ssn_l1::{make_instance, solve_ssn, ExperimentSpec, SolveOptions, StopRule};

fn dist(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    let d = a - b;
    d.dot(&d).sqrt()
}

fn main() -> ssn_l1::Result<()> {
    let mut args = std::env::args().skip(1);
    let n = args.next().map_or(1024, |s| s.parse().expect("n"));
    let seed = args.next().map_or(1, |s| s.parse().expect("seed"));
    let spec = ExperimentSpec::haar_deblur(n).with_seed(seed);
    let (p, truth) = make_instance(&spec)?;

    let opts = SolveOptions {
        stop_rule: StopRule::ResidualNorm,
        ..SolveOptions::default()
    };
    let l1 = solve_ssn(&p, Array1::zeros(n).view(), &opts)?;
    println!(
        "l1, w = {}: {:?} after {} iterations, {} nonzero coefficients, error {:.3}",
        spec.w_value,
        l1.status,
        l1.iterations,
        l1.solution.iter().filter(|&&x| x != 0.0).count(),
        dist(&l1.solution, &truth.u_true)
    );

    println!("l2 reconstructions:");
    for e in -12..=4 {
        let w = 10f64.powf(e as f64 / 4.0);
        let (q, _) = make_instance(&spec.clone().with_w(w))?;
        let c = l2_reconstruction(&q)?;
        println!("  w = {w:.3e}: error {:.3}", dist(&c, &truth.u_true));
    }
    println!("|u_true| = {:.3}", truth.u_true.dot(&truth.u_true).sqrt());
    Ok(())
}
