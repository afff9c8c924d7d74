//! Soft-thresholding, the objective, the fixed-point residual and the
//! active/inactive partition. Every solver in the crate is built from
//! these pieces.
//!
//! For a problem `min ½‖Ku − f‖² + Σ w_k |u_k|` and any `γ > 0`, the
//! minimizer is the unique zero of
//!
//! ```text
//! F(u) = u − S_{γw}(u − γ K^T (K u − f)),
//! ```
//!
//! where `S_t(x)_k = max(0, |x_k| − t_k) sign(x_k)`. The shifted point
//! `v = u − γ K^T (K u − f)` also defines the active set
//! `A = {k : |v_k| > γ w_k}`; ties `|v_k| = γ w_k` count as inactive.

use ndarray::{Array1, ArrayView1, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::operators::LinearMap;

/// Positive penalty weights `w_k ≥ w0 > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    w: Array1<f64>,
    w0: f64,
}

impl Weights {
    /// Weights with `w0 = min_k w_k`.
    pub fn new(w: Array1<f64>) -> Result<Self> {
        let w0 = w.iter().copied().fold(f64::INFINITY, f64::min);
        Self::with_lower_bound(w, if w0.is_finite() { w0 } else { 1.0 })
    }

    pub fn with_lower_bound(w: Array1<f64>, w0: f64) -> Result<Self> {
        if !(w0 > 0.0 && w0.is_finite()) {
            return Err(Error::InvalidParameter(format!("weight lower bound must be positive, got {w0}")));
        }
        if let Some((k, v)) = w.iter().enumerate().find(|(_, &v)| !(v >= w0 && v.is_finite())) {
            return Err(Error::InvalidParameter(format!("weight w[{k}] = {v} is below w0 = {w0}")));
        }
        Ok(Weights { w, w0 })
    }

    pub fn constant(n: usize, value: f64) -> Result<Self> {
        Self::new(Array1::from_elem(n, value))
    }

    pub fn values(&self) -> ArrayView1<'_, f64> {
        self.w.view()
    }

    pub fn lower_bound(&self) -> f64 {
        self.w0
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

/// One instance of `min ½‖Ku − f‖² + Σ w_k |u_k|`, together with the
/// parameter `γ > 0` used by the fixed-point map.
#[derive(Debug, Clone)]
pub struct Problem {
    k: LinearMap,
    f: Array1<f64>,
    w: Weights,
    gamma: f64,
}

impl Problem {
    pub fn new(k: LinearMap, f: Array1<f64>, w: Weights, gamma: f64) -> Result<Self> {
        check_len("problem data f", k.range_dim(), f.len())?;
        check_len("problem weights", k.domain_dim(), w.len())?;
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
        }
        Ok(Problem { k, f, w, gamma })
    }

    /// Like [`Problem::new`] with `γ = 1/‖K‖²` from the power-iteration estimate.
    ///
    /// This is the largest step for which soft-thresholding is guaranteed to
    /// descend. The Newton solvers usually do better with a larger value such
    /// as [`crate::derivative::rule_of_thumb_gamma`]; with small `γ` they can
    /// cycle between sign patterns.
    pub fn with_default_gamma(k: LinearMap, f: Array1<f64>, w: Weights) -> Result<Self> {
        let norm = k.operator_norm_estimate();
        if norm == 0.0 {
            return Err(Error::InvalidParameter("operator is zero".into()));
        }
        Self::new(k, f, w, 1.0 / (norm * norm))
    }

    /// The same instance with a different `γ`.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.k.clone(), self.f.clone(), self.w.clone(), gamma)
    }

    pub fn operator(&self) -> &LinearMap {
        &self.k
    }

    pub fn data(&self) -> ArrayView1<'_, f64> {
        self.f.view()
    }

    pub fn weights(&self) -> &Weights {
        &self.w
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Number of unknowns.
    pub fn dim(&self) -> usize {
        self.k.domain_dim()
    }

    pub(crate) fn check_point(&self, u: ArrayView1<f64>) -> Result<()> {
        check_len("iterate", self.dim(), u.len())
    }

    /// Misfit `Ku − f`, gradient `K^T(Ku − f)` and the shifted point.
    pub(crate) fn evaluate(&self, u: ArrayView1<f64>) -> Evaluation {
        let misfit = self.k.apply_unchecked(u) - &self.f;
        let gradient = self.k.adjoint_unchecked(misfit.view());
        let shifted = &u - &(&gradient * self.gamma);
        Evaluation {
            misfit,
            gradient,
            shifted,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Evaluation {
    pub misfit: Array1<f64>,
    pub gradient: Array1<f64>,
    pub shifted: Array1<f64>,
}

impl Evaluation {
    pub fn objective(&self, p: &Problem, u: ArrayView1<f64>) -> f64 {
        0.5 * self.misfit.dot(&self.misfit) + penalty(p.w.values(), u)
    }

    /// `u − S_{γw}(v)`.
    pub fn residual(&self, p: &Problem, u: ArrayView1<f64>) -> Array1<f64> {
        let mut r = u.to_owned();
        Zip::from(&mut r)
            .and(&self.shifted)
            .and(p.w.values())
            .for_each(|r, &v, &w| *r -= shrink(v, p.gamma * w));
        r
    }

    pub fn active_set(&self, p: &Problem) -> ActiveSet {
        let signs = Zip::from(&self.shifted)
            .and(p.w.values())
            .map_collect(|&v, &w| {
                let t = p.gamma * w;
                if v > t {
                    1
                } else if v < -t {
                    -1
                } else {
                    0
                }
            });
        ActiveSet::from_signs(signs.to_vec())
    }
}

fn penalty(w: ArrayView1<f64>, u: ArrayView1<f64>) -> f64 {
    w.iter().zip(u.iter()).map(|(w, u)| w * u.abs()).sum()
}

/// Scalar soft-thresholding `max(0, |x| − t) sign(x)`.
#[inline]
pub fn shrink(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Coordinatewise soft-thresholding with positive thresholds.
pub fn soft_threshold(u: ArrayView1<f64>, thresholds: ArrayView1<f64>) -> Result<Array1<f64>> {
    check_len("soft_threshold", u.len(), thresholds.len())?;
    if let Some(t) = thresholds.iter().find(|&&t| !(t > 0.0)) {
        return Err(Error::InvalidParameter(format!("threshold must be positive, got {t}")));
    }
    Ok(Zip::from(&u).and(&thresholds).map_collect(|&x, &t| shrink(x, t)))
}

/// `Ψ(u) = ½‖Ku − f‖² + Σ w_k |u_k|`.
pub fn objective(p: &Problem, u: ArrayView1<f64>) -> Result<f64> {
    p.check_point(u)?;
    let misfit = p.k.apply_unchecked(u) - &p.f;
    Ok(0.5 * misfit.dot(&misfit) + penalty(p.w.values(), u))
}

/// The fixed-point residual `F(u) = u − S_{γw}(u − γK^T(Ku − f))`,
/// which vanishes exactly at the minimizer.
pub fn optimality_residual(p: &Problem, u: ArrayView1<f64>) -> Result<Array1<f64>> {
    p.check_point(u)?;
    Ok(p.evaluate(u).residual(p, u))
}

/// Active/inactive partition of the shifted point `u − γK^T(Ku − f)`.
pub fn active_inactive(p: &Problem, u: ArrayView1<f64>) -> Result<ActiveSet> {
    p.check_point(u)?;
    Ok(p.evaluate(u).active_set(p))
}

/// Radius of a ball around `u` on which the active set and signs cannot change.
///
/// With `d = min_k | |v_k| − γw_k |` the smallest distance of the shifted
/// point to a threshold, a perturbation `h` moves `v` by
/// `(I − γK^T K)h`, whose sup-norm is at most `max(1, γ‖K‖² − 1)‖h‖`.
/// The returned radius is `d` divided by that factor, with `‖K‖` taken
/// from the power-iteration estimate inflated by 1%.
pub fn boundary_margin(p: &Problem, u: ArrayView1<f64>) -> Result<f64> {
    p.check_point(u)?;
    let ev = p.evaluate(u);
    let d = Zip::from(&ev.shifted)
        .and(p.w.values())
        .fold(f64::INFINITY, |acc, &v, &w| acc.min((v.abs() - p.gamma * w).abs()));
    let norm = 1.01 * p.k.operator_norm_estimate();
    let lipschitz = (p.gamma * norm * norm - 1.0).max(1.0);
    Ok(d / lipschitz)
}

/// Partition of the index set into `A⁺`, `A⁻` and the inactive rest,
/// stored as a sign vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActiveSet {
    signs: Vec<i8>,
}

impl ActiveSet {
    /// All indices inactive.
    pub fn empty(n: usize) -> Self {
        ActiveSet { signs: vec![0; n] }
    }

    /// Entries must lie in `{-1, 0, 1}`; anything positive is read as
    /// `+1` and anything negative as `-1`.
    pub fn from_signs(signs: Vec<i8>) -> Self {
        ActiveSet {
            signs: signs.into_iter().map(|s| s.signum()).collect(),
        }
    }

    pub fn from_sets(n: usize, plus: &[usize], minus: &[usize]) -> Result<Self> {
        let mut signs = vec![0i8; n];
        for (set, s) in [(plus, 1i8), (minus, -1i8)] {
            for &k in set {
                if k >= n {
                    return Err(Error::IndexOutOfRange { index: k, bound: n });
                }
                if signs[k] != 0 {
                    return Err(Error::InvalidParameter(format!("index {k} listed twice in the active set")));
                }
                signs[k] = s;
            }
        }
        Ok(ActiveSet { signs })
    }

    /// Signs of a vector's nonzero entries.
    pub fn from_support(u: ArrayView1<f64>) -> Self {
        ActiveSet {
            signs: u
                .iter()
                .map(|&x| if x > 0.0 { 1 } else if x < 0.0 { -1 } else { 0 })
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.signs.len()
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn plus(&self) -> Vec<usize> {
        self.indices_where(|s| s > 0)
    }

    pub fn minus(&self) -> Vec<usize> {
        self.indices_where(|s| s < 0)
    }

    /// `A = A⁺ ∪ A⁻`, sorted.
    pub fn active(&self) -> Vec<usize> {
        self.indices_where(|s| s != 0)
    }

    pub fn inactive(&self) -> Vec<usize> {
        self.indices_where(|s| s == 0)
    }

    /// `|A|`.
    pub fn len(&self) -> usize {
        self.signs.iter().filter(|&&s| s != 0).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn indices_where(&self, pred: impl Fn(i8) -> bool) -> Vec<usize> {
        self.signs
            .iter()
            .enumerate()
            .filter(|(_, &s)| pred(s))
            .map(|(k, _)| k)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn scalar_problem(k: f64, f: f64, w: f64, gamma: f64) -> Problem {
        Problem::new(
            LinearMap::dense(array![[k]]),
            array![f],
            Weights::constant(1, w).unwrap(),
            gamma,
        )
        .unwrap()
    }

    #[test]
    fn soft_threshold_values() {
        let t = array![1.0, 1.0, 1.0];
        assert_eq!(soft_threshold(array![2.0, -3.0, 0.5].view(), t.view()).unwrap(), array![1.0, -2.0, 0.0]);
        assert_eq!(soft_threshold(Array1::zeros(3).view(), t.view()).unwrap(), Array1::<f64>::zeros(3));
        assert_eq!(
            soft_threshold(array![1.0, 1.0].view(), array![1.0, 1.0].view()).unwrap(),
            array![0.0, 0.0]
        );
        assert!(soft_threshold(array![1.0].view(), array![0.0].view()).is_err());
        assert!(soft_threshold(array![1.0, 2.0].view(), array![1.0].view()).is_err());
    }

    #[test]
    fn weights_validation() {
        assert!(Weights::new(array![1.0, 0.0]).is_err());
        assert!(Weights::new(array![1.0, -1.0]).is_err());
        assert!(Weights::with_lower_bound(array![1.0, 2.0], 1.5).is_err());
        let w = Weights::with_lower_bound(array![1.0, 2.0], 0.5).unwrap();
        assert_eq!(w.lower_bound(), 0.5);
        assert_eq!(Weights::new(array![3.0, 2.0]).unwrap().lower_bound(), 2.0);
    }

    #[test]
    fn problem_validation() {
        let k = LinearMap::identity(2);
        let w = Weights::constant(2, 1.0).unwrap();
        assert!(Problem::new(k.clone(), array![1.0], w.clone(), 1.0).is_err());
        assert!(Problem::new(k.clone(), array![1.0, 2.0], w.clone(), 0.0).is_err());
        assert!(Problem::new(k, array![1.0, 2.0], Weights::constant(3, 1.0).unwrap(), 1.0).is_err());
    }

    #[test]
    fn objective_values() {
        let p = Problem::new(LinearMap::identity(3), Array1::zeros(3), Weights::constant(3, 1.0).unwrap(), 1.0).unwrap();
        assert_eq!(objective(&p, Array1::zeros(3).view()).unwrap(), 0.0);
        let q = scalar_problem(1.0, 2.0, 1.0, 1.0);
        assert_eq!(objective(&q, array![1.0].view()).unwrap(), 1.5);
        assert!(objective(&q, array![1.0, 2.0].view()).is_err());
    }

    #[test]
    fn residual_formula_identity_operator() {
        // K = I, f = 0: r = u − S_{γw}((1 − γ)u).
        let gamma = 0.3;
        let p = Problem::new(LinearMap::identity(4), Array1::zeros(4), Weights::new(array![0.1, 0.2, 0.3, 0.4]).unwrap(), gamma).unwrap();
        let u = array![1.0, -2.0, 0.05, 0.7];
        let r = optimality_residual(&p, u.view()).unwrap();
        for k in 0..4 {
            let expected = u[k] - shrink((1.0 - gamma) * u[k], gamma * p.weights().values()[k]);
            assert!((r[k] - expected).abs() <= 1e-15);
        }
    }

    #[test]
    fn scalar_shrinkage_solution_has_zero_residual() {
        // K = I, γ = 1: ū = S_w(f) = 9.
        let p = scalar_problem(1.0, 10.0, 1.0, 1.0);
        assert_eq!(optimality_residual(&p, array![9.0].view()).unwrap(), array![0.0]);
        assert_ne!(optimality_residual(&p, array![8.0].view()).unwrap()[0], 0.0);
    }

    #[test]
    fn active_sets() {
        let p = Problem::new(LinearMap::identity(3), Array1::zeros(3), Weights::constant(3, 1.0).unwrap(), 1.0).unwrap();
        assert!(active_inactive(&p, Array1::zeros(3).view()).unwrap().is_empty());

        let q = Problem::new(LinearMap::identity(2), array![3.0, 0.5], Weights::constant(2, 1.0).unwrap(), 1.0).unwrap();
        let a = active_inactive(&q, Array1::zeros(2).view()).unwrap();
        assert_eq!(a.plus(), vec![0]);
        assert_eq!(a.inactive(), vec![1]);

        // v = f = γw exactly → inactive; v = -f → A⁻.
        let b = Problem::new(LinearMap::identity(2), array![1.0, -1.5], Weights::constant(2, 1.0).unwrap(), 1.0).unwrap();
        let a = active_inactive(&b, Array1::zeros(2).view()).unwrap();
        assert_eq!(a.inactive(), vec![0]);
        assert_eq!(a.minus(), vec![1]);
    }

    #[test]
    fn active_set_constructors() {
        let a = ActiveSet::from_sets(5, &[3, 0], &[2]).unwrap();
        assert_eq!(a.signs(), &[1, 0, -1, 1, 0]);
        assert_eq!(a.plus(), vec![0, 3]);
        assert_eq!(a.active(), vec![0, 2, 3]);
        assert_eq!(a.inactive(), vec![1, 4]);
        assert_eq!(a.len(), 3);
        assert!(ActiveSet::from_sets(3, &[1], &[1]).is_err());
        assert!(ActiveSet::from_sets(3, &[3], &[]).is_err());
        assert_eq!(ActiveSet::from_support(array![0.0, -2.0, 1e-300].view()).signs(), &[0, -1, 1]);
    }

    #[test]
    fn boundary_margin_zero_on_threshold() {
        let p = Problem::new(LinearMap::identity(2), array![1.0, 3.0], Weights::constant(2, 1.0).unwrap(), 1.0).unwrap();
        assert_eq!(boundary_margin(&p, Array1::zeros(2).view()).unwrap(), 0.0);
    }

    /// Brute-force minimizer of `½(x − v)² + t|x|` by ternary search.
    fn prox_brute(v: f64, t: f64) -> f64 {
        let (mut lo, mut hi) = (-100.0f64, 100.0f64);
        let g = |x: f64| 0.5 * (x - v) * (x - v) + t * x.abs();
        for _ in 0..300 {
            let a = lo + (hi - lo) / 3.0;
            let b = hi - (hi - lo) / 3.0;
            if g(a) < g(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        0.5 * (lo + hi)
    }

    proptest! {
        #[test]
        fn soft_threshold_is_the_prox(v in -50.0f64..50.0, t in 0.01f64..20.0) {
            let s = shrink(v, t);
            // Ternary search only resolves x to about sqrt(ulp(g)).
            prop_assert!((s - prox_brute(v, t)).abs() < 1e-5);
        }

        #[test]
        fn soft_threshold_is_nonexpansive(
            a in proptest::collection::vec(-10.0f64..10.0, 6),
            b in proptest::collection::vec(-10.0f64..10.0, 6),
            t in proptest::collection::vec(0.01f64..5.0, 6),
        ) {
            let (a, b, t) = (Array1::from(a), Array1::from(b), Array1::from(t));
            let sa = soft_threshold(a.view(), t.view()).unwrap();
            let sb = soft_threshold(b.view(), t.view()).unwrap();
            let lhs = (&sa - &sb).mapv(|x| x * x).sum().sqrt();
            let rhs = (&a - &b).mapv(|x| x * x).sum().sqrt();
            prop_assert!(lhs <= rhs + 1e-12);
        }
    }
}
