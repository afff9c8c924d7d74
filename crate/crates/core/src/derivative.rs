//! Generalized (Newton) derivatives of the thresholding map and of the
//! fixed-point residual `F(u) = u − S_{γw}(u − γK^T(Ku − f))`.
//!
//! For soft-thresholding the derivative is the 0/1 mask of coordinates
//! strictly above their threshold. Composing it with the affine inner map
//! `u ↦ (I − γK^T K)u + γK^T f` gives, after splitting `K^T K` along the
//! active set `A` and inactive set `I`,
//!
//! ```text
//!        ┌ γ M_AA   γ M_AI ┐
//! G(u) = │                 │
//!        └   0       I_I   ┘
//! ```
//!
//! which is block upper-triangular: a Newton step sets `δu_I = −r_I` and
//! solves one SPD system with `M_AA`.
//!
//! The mask is a valid generalized derivative in sequence spaces only
//! because thresholds are bounded away from zero: near any point, just
//! finitely many coordinates sit close to a threshold. The seemingly
//! natural derivative of `max(0, ·)` has no such property in infinite
//! dimensions. That failure needs infinitely many coordinates, so it has
//! no finite-dimensional counterpart to test here.

use ndarray::{Array1, Array2, ArrayView1, Zip};

use crate::error::{check_len, Error, Result};
use crate::linalg::{self, Cholesky};
use crate::operators::LinearMap;
use crate::prox::{ActiveSet, Problem};

/// `1` where `|u_k| > t_k`, `0` otherwise (ties give `0`).
pub fn generalized_derivative_mask(u: ArrayView1<f64>, thresholds: ArrayView1<f64>) -> Result<Array1<f64>> {
    check_len("generalized_derivative_mask", u.len(), thresholds.len())?;
    Ok(Zip::from(&u)
        .and(&thresholds)
        .map_collect(|&x, &t| if x.abs() > t { 1.0 } else { 0.0 }))
}

/// `1/λ_min(M_AA)` for the columns `active` of `K`.
///
/// Choosing `γ` near this value works well in practice; much smaller
/// values make the Newton iteration prone to cycling between sign
/// patterns. Passing all indices gives `1/λ_min(K^T K)`, an upper bound
/// over every subset.
pub fn rule_of_thumb_gamma(k: &LinearMap, active: &[usize]) -> Result<f64> {
    let block = k.normal_submatrix(active, active)?.materialize();
    let (lo, _) = linalg::symmetric_eigen_range(&block);
    if !(lo > 0.0) {
        return Err(Error::InvalidParameter("selected columns of K are linearly dependent".into()));
    }
    Ok(1.0 / lo)
}

/// The Newton matrix `G(u)` for a fixed active set, with `M_AA` factorized.
#[derive(Debug, Clone)]
pub struct NewtonSystem<'a> {
    problem: &'a Problem,
    active_set: ActiveSet,
    active: Vec<usize>,
    inactive: Vec<usize>,
    normal_block: Array2<f64>,
    factor: Cholesky,
}

impl<'a> NewtonSystem<'a> {
    /// Materializes `M_AA = (K^T K)[A, A]` and factorizes it. Fails with
    /// [`Error::SingularSystem`](crate::Error::SingularSystem) when the
    /// active columns of `K` are numerically dependent.
    pub fn build(problem: &'a Problem, active_set: &ActiveSet) -> Result<Self> {
        check_len("newton system active set", problem.dim(), active_set.dim())?;
        let active = active_set.active();
        let inactive = active_set.inactive();
        let normal_block = problem
            .operator()
            .normal_submatrix(&active, &active)?
            .materialize();
        let factor = Cholesky::factor(&normal_block)?;
        Ok(NewtonSystem {
            problem,
            active_set: active_set.clone(),
            active,
            inactive,
            normal_block,
            factor,
        })
    }

    pub fn active_set(&self) -> &ActiveSet {
        &self.active_set
    }

    /// `M_AA`.
    pub fn normal_block(&self) -> &Array2<f64> {
        &self.normal_block
    }

    pub fn active_len(&self) -> usize {
        self.active.len()
    }

    /// Restricts `(K^T K x)` to `A`. `x` is a full-length vector; applying
    /// it to a vector supported on `I` gives `M_AI x_I` without forming `M_AI`.
    fn normal_on_active(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let k = self.problem.operator();
        let full = k.adjoint_unchecked(k.apply_unchecked(x).view());
        self.active.iter().map(|&i| full[i]).collect()
    }

    /// `G(u) h`.
    pub fn apply(&self, h: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.problem.check_point(h)?;
        let gamma = self.problem.gamma();
        let mut out = h.to_owned();
        if !self.active.is_empty() {
            let on_active = self.normal_on_active(h);
            for (&i, v) in self.active.iter().zip(on_active.iter()) {
                out[i] = gamma * v;
            }
        }
        Ok(out)
    }

    /// Solves `G(u) δu = −r` by block back-substitution:
    /// `δu_I = −r_I`, then `γ M_AA δu_A = −r_A − γ M_AI δu_I`.
    pub fn solve_step(&self, r: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.problem.check_point(r)?;
        let gamma = self.problem.gamma();
        let mut step = Array1::zeros(r.len());
        for &i in &self.inactive {
            step[i] = -r[i];
        }
        if self.active.is_empty() {
            return Ok(step);
        }
        let mut rhs: Array1<f64> = self.active.iter().map(|&i| -r[i]).collect();
        if self.inactive.iter().any(|&i| step[i] != 0.0) {
            rhs.scaled_add(-gamma, &self.normal_on_active(step.view()));
        }
        let delta = self.factor.solve(rhs.view()) / gamma;
        for (&i, &d) in self.active.iter().zip(delta.iter()) {
            step[i] = d;
        }
        Ok(step)
    }

    /// Solves `M_AA x = b` on the active block.
    pub fn solve_active(&self, b: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_len("active block rhs", self.active.len(), b.len())?;
        Ok(self.factor.solve(b))
    }

    /// Condition number of `M_AA` (1 for an empty active set).
    pub fn condition_number(&self) -> f64 {
        linalg::condition_number(&self.normal_block)
    }

    /// Upper bound `‖M_AA⁻¹‖(1/γ + ‖M_AI‖) + 1` on `‖G(u)⁻¹‖`, evaluated
    /// with dense norms of the materialized blocks. Equals 1 when `A` is empty.
    pub fn norm_bound(&self) -> f64 {
        if self.active.is_empty() {
            return 1.0;
        }
        let (lambda_min, _) = linalg::symmetric_eigen_range(&self.normal_block);
        let off_diag = if self.inactive.is_empty() {
            0.0
        } else {
            let block = self
                .problem
                .operator()
                .normal_submatrix(&self.active, &self.inactive)
                .expect("indices come from the active set")
                .materialize();
            linalg::spectral_norm(&block)
        };
        (1.0 / lambda_min) * (1.0 / self.problem.gamma() + off_diag) + 1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::LinearMap;
    use crate::problems::integration_operator;
    use crate::prox::{optimality_residual, Weights};
    use crate::Error;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn problem(k: LinearMap, f: Array1<f64>, w: f64, gamma: f64) -> Problem {
        let n = k.domain_dim();
        Problem::new(k, f, Weights::constant(n, w).unwrap(), gamma).unwrap()
    }

    fn dense_g(sys: &NewtonSystem, n: usize) -> Array2<f64> {
        let mut g = Array2::zeros((n, n));
        for j in 0..n {
            let mut e = Array1::zeros(n);
            e[j] = 1.0;
            g.column_mut(j).assign(&sys.apply(e.view()).unwrap());
        }
        g
    }

    #[test]
    fn mask_values() {
        let t = array![1.0, 1.0];
        assert_eq!(generalized_derivative_mask(array![2.0, 0.5].view(), t.view()).unwrap(), array![1.0, 0.0]);
        assert_eq!(generalized_derivative_mask(array![-1.0, 1.0].view(), t.view()).unwrap(), array![0.0, 0.0]);
        assert_eq!(generalized_derivative_mask(array![0.0, 0.0].view(), t.view()).unwrap(), array![0.0, 0.0]);
        assert!(generalized_derivative_mask(array![0.0].view(), t.view()).is_err());
    }

    #[test]
    fn empty_active_set_gives_negated_residual() {
        let p = problem(integration_operator(5), Array1::ones(5), 0.1, 1.0);
        let sys = NewtonSystem::build(&p, &ActiveSet::empty(5)).unwrap();
        let r = array![1.0, -2.0, 3.0, 0.0, 0.5];
        assert_eq!(sys.solve_step(r.view()).unwrap(), -&r);
        assert_eq!(sys.solve_step(Array1::zeros(5).view()).unwrap(), Array1::<f64>::zeros(5));
        assert_eq!(sys.norm_bound(), 1.0);
        assert_eq!(sys.condition_number(), 1.0);
    }

    #[test]
    fn identity_operator_blocks() {
        let p = problem(LinearMap::identity(3), Array1::zeros(3), 1.0, 1.0);
        let a = ActiveSet::from_sets(3, &[0], &[2]).unwrap();
        let sys = NewtonSystem::build(&p, &a).unwrap();
        assert_eq!(sys.normal_block(), &Array2::<f64>::eye(2));
        let r = array![2.0, 3.0, -4.0];
        assert_eq!(sys.solve_step(r.view()).unwrap(), array![-2.0, -3.0, 4.0]);

        let single = ActiveSet::from_sets(3, &[0], &[]).unwrap();
        let sys = NewtonSystem::build(&p, &single).unwrap();
        assert!((sys.norm_bound() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn integration_block_matches_dense_product() {
        let k = integration_operator(6);
        let d = k.to_dense();
        let ktk = d.t().dot(&d);
        let p = problem(k, Array1::zeros(6), 0.1, 1.0);
        let a = ActiveSet::from_sets(6, &[1], &[4]).unwrap();
        let sys = NewtonSystem::build(&p, &a).unwrap();
        let idx = [1, 4];
        for i in 0..2 {
            for j in 0..2 {
                assert!((sys.normal_block()[[i, j]] - ktk[[idx[i], idx[j]]]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn two_by_two_hand_inverse() {
        // K = diag(1, 2), γ = 1, A = {0, 1}: G = diag(1, 4), δu = −(r0, r1/4).
        let p = problem(LinearMap::diag(&[1.0, 2.0]), Array1::zeros(2), 1.0, 1.0);
        let a = ActiveSet::from_sets(2, &[0, 1], &[]).unwrap();
        let sys = NewtonSystem::build(&p, &a).unwrap();
        let step = sys.solve_step(array![2.0, 8.0].view()).unwrap();
        assert!((step[0] + 2.0).abs() < 1e-15);
        assert!((step[1] + 2.0).abs() < 1e-15);

        // Mixed: A = {1}, I = {0}; with K = [[1, 1], [0, 1]] the off-diagonal block is nonzero.
        let k = LinearMap::dense(array![[1.0, 1.0], [0.0, 1.0]]);
        let p = problem(k, Array1::zeros(2), 1.0, 0.5);
        let a = ActiveSet::from_sets(2, &[1], &[]).unwrap();
        let sys = NewtonSystem::build(&p, &a).unwrap();
        // K^T K = [[1, 1], [1, 2]]; G = [[1, 0], [γ·1, γ·2]] (row 1 active).
        // δu_0 = −r_0;  γ·2·δu_1 = −r_1 − γ·1·δu_0.
        let r = array![3.0, 1.0];
        let step = sys.solve_step(r.view()).unwrap();
        assert_eq!(step[0], -3.0);
        assert!((step[1] - (-1.0 + 0.5 * 3.0) / 1.0).abs() < 1e-15);
    }

    #[test]
    fn singular_block_is_reported() {
        let k = LinearMap::dense(array![[1.0, 1.0], [1.0, 1.0]]);
        let p = problem(k, Array1::zeros(2), 1.0, 1.0);
        let a = ActiveSet::from_sets(2, &[0, 1], &[]).unwrap();
        assert!(matches!(NewtonSystem::build(&p, &a), Err(Error::SingularSystem { .. })));
    }

    #[test]
    fn block_solve_satisfies_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let k = LinearMap::dense(Array2::from_shape_fn((12, 9), |_| rng.random_range(-1.0..1.0)));
            let p = problem(k, Array1::zeros(12), 0.5, 0.3);
            let signs: Vec<i8> = (0..9).map(|_| rng.random_range(-1..=1)).collect();
            let sys = NewtonSystem::build(&p, &ActiveSet::from_signs(signs)).unwrap();
            let r: Array1<f64> = (0..9).map(|_| rng.random_range(-5.0..5.0)).collect();
            let step = sys.solve_step(r.view()).unwrap();
            let check = sys.apply(step.view()).unwrap() + &r;
            let scale = 1.0 + r.dot(&r).sqrt();
            assert!(check.iter().all(|c| c.abs() <= 1e-10 * scale), "{check}");
        }
    }

    #[test]
    fn norm_bound_dominates_inverse_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let k = LinearMap::dense(Array2::from_shape_fn((5, 5), |_| rng.random_range(-1.0..1.0)));
            let p = problem(k, Array1::zeros(5), 0.5, rng.random_range(0.1..2.0));
            let signs: Vec<i8> = (0..5).map(|_| rng.random_range(-1..=1)).collect();
            let sys = NewtonSystem::build(&p, &ActiveSet::from_signs(signs)).unwrap();
            let g = dense_g(&sys, 5);
            let inv = linalg::to_nalgebra(&g).try_inverse().unwrap();
            let inv_norm = inv.singular_values().max();
            assert!(sys.norm_bound() >= inv_norm * (1.0 - 1e-12), "{} < {}", sys.norm_bound(), inv_norm);
        }
    }

    #[test]
    fn active_block_is_positive_definite_for_injective_k() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let k = LinearMap::dense(Array2::from_shape_fn((10, 7), |_| rng.random_range(-1.0..1.0)));
            let p = problem(k, Array1::zeros(10), 0.5, 1.0);
            let signs: Vec<i8> = (0..7).map(|_| rng.random_range(-1..=1)).collect();
            let sys = NewtonSystem::build(&p, &ActiveSet::from_signs(signs)).unwrap();
            let (lo, _) = linalg::symmetric_eigen_range(sys.normal_block());
            assert!(sys.active_len() == 0 || lo > 0.0);
            assert!(sys.active_len() <= 7);
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        // Away from threshold crossings F is affine, so G(u)h equals the
        // difference quotient up to roundoff.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut checked = 0;
        while checked < 20 {
            let k = LinearMap::dense(Array2::from_shape_fn((8, 6), |_| rng.random_range(-1.0..1.0)));
            let f: Array1<f64> = (0..8).map(|_| rng.random_range(-2.0..2.0)).collect();
            let p = problem(k, f, 0.3, 0.2);
            let u: Array1<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let margin = crate::prox::boundary_margin(&p, u.view()).unwrap();
            if margin < 1e-3 {
                continue;
            }
            let h: Array1<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let h = &h / h.dot(&h).sqrt();
            let eps = 0.5 * margin;
            let a = crate::prox::active_inactive(&p, u.view()).unwrap();
            let sys = NewtonSystem::build(&p, &a).unwrap();
            let fu = optimality_residual(&p, u.view()).unwrap();
            let fuh = optimality_residual(&p, (&u + &(&h * eps)).view()).unwrap();
            let fd = (fuh - fu) / eps;
            let gh = sys.apply(h.view()).unwrap();
            assert!((&fd - &gh).iter().all(|d| d.abs() < 1e-6), "{fd} vs {gh}");
            checked += 1;
        }
    }
}
