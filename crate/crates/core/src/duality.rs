//! Dual problem and optimality certificates.
//!
//! Writing the penalty as `F(u) = Σ w_k |u_k|` and the misfit as
//! `G(y) = ½‖y − f‖²`, the dual problem is
//!
//! ```text
//! maximize −F*(K^T p) − G*(−p) = −½‖p‖² + ⟨p, f⟩   subject to |K^T p|_k ≤ w_k.
//! ```
//!
//! At the minimizer the dual solution is `p = f − Ku`, so a certificate
//! is built from that point without solving the dual problem.

use ndarray::{Array1, ArrayView1, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Result};
use crate::prox::{objective, Problem};

/// Value of a conjugate function that may be `+∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConjugateValue {
    Finite(f64),
    /// `+∞`; `index` is the first coordinate with `|q_k| > w_k`.
    Infeasible { index: usize, excess: f64 },
}

impl ConjugateValue {
    pub fn is_finite(&self) -> bool {
        matches!(self, ConjugateValue::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            ConjugateValue::Finite(v) => Some(v),
            ConjugateValue::Infeasible { .. } => None,
        }
    }
}

/// Conjugate of the weighted ℓ¹ norm: the indicator of `{|q_k| ≤ w_k}`.
pub fn conjugate_f(q: ArrayView1<f64>, w: ArrayView1<f64>) -> Result<ConjugateValue> {
    check_len("conjugate_f", w.len(), q.len())?;
    for (k, (&q, &w)) in q.iter().zip(w.iter()).enumerate() {
        if q.abs() > w {
            return Ok(ConjugateValue::Infeasible { index: k, excess: q.abs() - w });
        }
    }
    Ok(ConjugateValue::Finite(0.0))
}

/// Conjugate of `½‖y − f‖²`: `½‖q‖² + ⟨q, f⟩`.
pub fn conjugate_g(q: ArrayView1<f64>, f: ArrayView1<f64>) -> Result<f64> {
    check_len("conjugate_g", f.len(), q.len())?;
    Ok(0.5 * q.dot(&q) + q.dot(&f))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    /// `p = f − Ku`.
    pub p: Array1<f64>,
    /// Factor `θ ∈ (0, 1]` with `θp` dual feasible; 1 when `p` is feasible.
    pub dual_scale: f64,
    /// Dual objective at `θp`.
    pub dual_objective: f64,
    pub primal_objective: f64,
    /// `Ψ(u) − D(θp) ≥ 0` up to roundoff.
    pub gap: f64,
    /// `min_k (w_k − |(K^T p)_k|)`, negative when `p` itself is infeasible.
    pub feasibility_margin: f64,
    /// `max_k` of `|((K^T p)_k − w_k) u_k⁺|` and `|((K^T p)_k + w_k) u_k⁻|`.
    pub complementarity_violation: f64,
}

impl DualCertificate {
    /// Gap bound used for converged runs: `max(1e-8, 1e-6 (1 + |Ψ|))`.
    pub fn default_gap_tolerance(&self) -> f64 {
        f64::max(1e-8, 1e-6 * (1.0 + self.primal_objective.abs()))
    }

    pub fn certifies(&self, gap_tol: f64) -> bool {
        self.gap <= gap_tol && self.feasibility_margin >= -1e-10 && self.complementarity_violation <= 1e-8
    }
}

/// Optimality certificate for `u`. Never fails on a dimensionally
/// consistent input; infeasibility shows up in the margin.
pub fn certify(p: &Problem, u: ArrayView1<f64>) -> Result<DualCertificate> {
    let primal = objective(p, u)?;
    let f = p.data();
    let k = p.operator();
    let dual_p = &f - &k.apply_unchecked(u);
    let ktp = k.adjoint_unchecked(dual_p.view());
    let w = p.weights().values();

    let mut margin = f64::INFINITY;
    let mut scale = 1.0f64;
    let mut violation = 0.0f64;
    Zip::from(&ktp).and(w).and(&u).for_each(|&q, &w, &u| {
        margin = margin.min(w - q.abs());
        if q.abs() > w {
            scale = scale.min(w / q.abs());
        }
        let plus = u.max(0.0);
        let minus = (-u).max(0.0);
        violation = violation.max(((q - w) * plus).abs()).max(((q + w) * minus).abs());
    });
    let scaled = &dual_p * scale;
    let dual = -conjugate_g((-&scaled).view(), f)?;
    Ok(DualCertificate {
        p: dual_p,
        dual_scale: scale,
        dual_objective: dual,
        primal_objective: primal,
        gap: primal - dual,
        feasibility_margin: margin,
        complementarity_violation: violation,
    })
}

/// Coordinatewise residual of
/// `u − max{0, u − γ(K^T(Ku − f) + w)} − min{0, u − γ(K^T(Ku − f) − w)}`.
pub fn semismooth_reformulation_residual(p: &Problem, u: ArrayView1<f64>) -> Result<Array1<f64>> {
    p.check_point(u)?;
    let k = p.operator();
    let misfit = k.apply_unchecked(u) - p.data();
    let grad = k.adjoint_unchecked(misfit.view());
    let gamma = p.gamma();
    let mut r = u.to_owned();
    Zip::from(&mut r)
        .and(&grad)
        .and(p.weights().values())
        .for_each(|r, &g, &w| {
            let x = *r;
            *r = x - (x - gamma * (g + w)).max(0.0) - (x - gamma * (g - w)).min(0.0);
        });
    Ok(r)
}

/// Norm of [`semismooth_reformulation_residual`].
pub fn semismooth_reformulation_check(p: &Problem, u: ArrayView1<f64>) -> Result<f64> {
    let r = semismooth_reformulation_residual(p, u)?;
    Ok(r.dot(&r).sqrt())
}

/// Coordinatewise complementarity system for a pair `(u_k, q_k = (K^T p)_k)`:
/// `q − w ≤ 0`, `−q − w ≤ 0`, `(q − w)u⁺ = 0`, `(q + w)u⁻ = 0`.
pub fn complementarity_holds(u: f64, q: f64, w: f64, tol: f64) -> bool {
    let plus = u.max(0.0);
    let minus = (-u).max(0.0);
    q - w <= tol && -q - w <= tol && ((q - w) * plus).abs() <= tol && ((q + w) * minus).abs() <= tol
}

/// `u − max{0, u + γ(q − w)} − min{0, u + γ(q + w)}` for one coordinate.
pub fn max_min_residual(u: f64, q: f64, w: f64, gamma: f64) -> f64 {
    u - (u + gamma * (q - w)).max(0.0) - (u + gamma * (q + w)).min(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::LinearMap;
    use crate::prox::{optimality_residual, Weights};
    use crate::solvers::{solve_ssn, SolveOptions};
    use ndarray::{array, Array2};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn conjugate_f_values() {
        let w = array![1.0, 2.0];
        assert_eq!(conjugate_f(array![0.0, 0.0].view(), w.view()).unwrap(), ConjugateValue::Finite(0.0));
        assert_eq!(conjugate_f(array![-1.0, 2.0].view(), w.view()).unwrap(), ConjugateValue::Finite(0.0));
        assert!(matches!(
            conjugate_f(array![0.0, 2.5].view(), w.view()).unwrap(),
            ConjugateValue::Infeasible { index: 1, .. }
        ));
        assert!(conjugate_f(array![0.0].view(), w.view()).is_err());
    }

    #[test]
    fn conjugate_g_values() {
        assert_eq!(conjugate_g(array![0.0].view(), array![3.0].view()).unwrap(), 0.0);
        assert_eq!(conjugate_g(array![1.0].view(), array![1.0].view()).unwrap(), 1.5);
    }

    #[test]
    fn conjugate_g_matches_slice_supremum() {
        // sup_h ⟨q, h⟩ − ½‖h − f‖², scanned along the line h = f + t q.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let q: Array1<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let f: Array1<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let best = (0..=40_000)
                .map(|i| {
                    let t = -1.0 + 4.0 * i as f64 / 40_000.0;
                    let h = &f + &(&q * t);
                    let d = &h - &f;
                    q.dot(&h) - 0.5 * d.dot(&d)
                })
                .fold(f64::NEG_INFINITY, f64::max);
            let exact = conjugate_g(q.view(), f.view()).unwrap();
            assert!((best - exact).abs() < 1e-6 * (1.0 + exact.abs()));
            assert!(best <= exact + 1e-12);
        }
    }

    fn random_problem(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Problem {
        let k = LinearMap::dense(Array2::from_shape_fn((m, n), |_| rng.random_range(-1.0..1.0)));
        let f: Array1<f64> = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
        let w: Array1<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
        let all: Vec<usize> = (0..n).collect();
        let gamma = crate::derivative::rule_of_thumb_gamma(&k, &all).unwrap();
        Problem::new(k, f, Weights::new(w).unwrap(), gamma).unwrap()
    }

    #[test]
    fn zero_problem_has_zero_gap() {
        let p = Problem::new(LinearMap::identity(3), Array1::zeros(3), Weights::constant(3, 1.0).unwrap(), 1.0).unwrap();
        let c = certify(&p, Array1::zeros(3).view()).unwrap();
        assert_eq!(c.gap, 0.0);
        assert_eq!(c.feasibility_margin, 1.0);
    }

    #[test]
    fn certificate_at_solution_and_away() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let p = random_problem(&mut rng, 12, 6);
            let rep = solve_ssn(&p, Array1::zeros(6).view(), &SolveOptions::default()).unwrap();
            assert!(rep.converged());
            let c = certify(&p, rep.solution.view()).unwrap();
            assert!(c.gap <= 1e-8, "gap {}", c.gap);
            assert!(c.feasibility_margin >= -1e-10);
            assert!(c.complementarity_violation <= 1e-10);

            let far: Array1<f64> = (0..6).map(|_| rng.random_range(-3.0..3.0)).collect();
            let cf = certify(&p, far.view()).unwrap();
            let psi_bar = objective(&p, rep.solution.view()).unwrap();
            assert!(cf.gap > 0.0);
            assert!(cf.gap >= cf.primal_objective - psi_bar - 1e-10);
            assert!(cf.dual_objective <= psi_bar + 1e-10);
        }
    }

    #[test]
    fn reformulation_matches_prox_residual_elementwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let p = random_problem(&mut rng, 7, 5);
            let u: Array1<f64> = (0..5).map(|_| rng.random_range(-3.0..3.0)).collect();
            let a = semismooth_reformulation_residual(&p, u.view()).unwrap();
            let b = optimality_residual(&p, u.view()).unwrap();
            assert!((&a - &b).iter().all(|d| d.abs() <= 1e-12));
        }
        let z = Problem::new(LinearMap::identity(2), Array1::zeros(2), Weights::constant(2, 1.0).unwrap(), 1.0).unwrap();
        assert_eq!(semismooth_reformulation_check(&z, Array1::zeros(2).view()).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn weak_duality(seed in 0u64..10_000, scale in 0.0f64..5.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_problem(&mut rng, 6, 4);
            let u: Array1<f64> = (0..4).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
            let c = certify(&p, u.view()).unwrap();
            prop_assert!(c.gap >= -1e-10);
            prop_assert!(c.dual_scale > 0.0 && c.dual_scale <= 1.0);
        }

        #[test]
        fn complementarity_iff_max_min(
            ui in 0usize..5, qi in 0usize..7, w in 0.25f64..2.0, gamma in 0.1f64..10.0,
        ) {
            // Coordinates drawn from a grid that hits the equality cases.
            let u = [-1.0, -0.5, 0.0, 0.5, 1.0][ui];
            let q = [-1.5 * w, -w, -0.3 * w, 0.0, 0.3 * w, w, 1.5 * w][qi];
            let comp = complementarity_holds(u, q, w, 1e-12);
            let eq = max_min_residual(u, q, w, gamma).abs() <= 1e-12;
            prop_assert_eq!(comp, eq);
        }
    }
}
