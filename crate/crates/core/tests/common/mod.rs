//! Shared test helpers: random tiny instances and a brute-force minimizer.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ssn_l1::derivative::rule_of_thumb_gamma;
use ssn_l1::{LinearMap, Problem, Weights};

/// Gaussian-ish `2n × n` instance; `K` is injective with probability one.
pub fn tiny_instance(seed: u64, n: usize) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = 2 * n;
    let k = Array2::from_shape_fn((m, n), |_| rng.random_range(-1.0..1.0));
    let f: Array1<f64> = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
    let w: Array1<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    let k = LinearMap::dense(k);
    let all: Vec<usize> = (0..n).collect();
    let gamma = rule_of_thumb_gamma(&k, &all).unwrap();
    Problem::new(k, f, Weights::new(w).unwrap(), gamma).unwrap()
}

fn to_dmatrix(p: &Problem) -> DMatrix<f64> {
    let k = p.operator().to_dense();
    DMatrix::from_fn(k.nrows(), k.ncols(), |i, j| k[[i, j]])
}

/// Minimizer by enumerating all `3^n` sign patterns `s`.
///
/// For each pattern, `u_A` solves `(K^T K)_AA u_A = (K^T f − s w)_A` and
/// `u_I = 0`. The pattern is accepted when `sign(u_A) = s_A` and
/// `|K^T(Ku − f)|_k ≤ w_k` on `I`; these are exactly the optimality
/// conditions, so with injective `K` exactly one pattern passes.
pub fn oracle_minimizer(p: &Problem) -> Array1<f64> {
    let k = to_dmatrix(p);
    let n = k.ncols();
    assert!(n <= 10, "oracle is exponential in n");
    let f = DVector::from_iterator(p.data().len(), p.data().iter().copied());
    let w: Vec<f64> = p.weights().values().to_vec();
    let normal = k.transpose() * &k;
    let ktf = k.transpose() * &f;
    let mut best: Option<(f64, DVector<f64>)> = None;
    let mut signs = vec![-1i8; n];
    for code in 0..3usize.pow(n as u32) {
        let mut c = code;
        for s in signs.iter_mut() {
            *s = (c % 3) as i8 - 1;
            c /= 3;
        }
        let idx: Vec<usize> = (0..n).filter(|&i| signs[i] != 0).collect();
        let mut u = DVector::zeros(n);
        if !idx.is_empty() {
            let block = DMatrix::from_fn(idx.len(), idx.len(), |a, b| normal[(idx[a], idx[b])]);
            let rhs = DVector::from_iterator(idx.len(), idx.iter().map(|&i| ktf[i] - f64::from(signs[i]) * w[i]));
            let Some(ua) = block.lu().solve(&rhs) else { continue };
            if idx.iter().zip(ua.iter()).any(|(&i, &v)| f64::from(signs[i]) * v <= 0.0) {
                continue;
            }
            for (&i, &v) in idx.iter().zip(ua.iter()) {
                u[i] = v;
            }
        }
        let grad = &normal * &u - &ktf;
        let tol = 1e-10 * (1.0 + ktf.amax());
        if (0..n).any(|i| signs[i] == 0 && grad[i].abs() > w[i] + tol) {
            continue;
        }
        let misfit = &k * &u - &f;
        let psi = 0.5 * misfit.norm_squared() + u.iter().zip(&w).map(|(x, w)| w * x.abs()).sum::<f64>();
        if best.as_ref().is_none_or(|(b, _)| psi < *b) {
            best = Some((psi, u));
        }
    }
    let (_, u) = best.expect("some sign pattern satisfies the optimality conditions");
    u.iter().copied().collect()
}

pub fn distance(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    let d = a - b;
    d.dot(&d).sqrt()
}
