//! Iterative solvers sharing one options/report contract:
//!
//! * [`solve_ssn`]: semismooth Newton on `F(u) = 0` using the block
//!   derivative from [`crate::derivative`];
//! * [`solve_active_set`]: the same iteration written as a primal
//!   active-set method, started from a sign pattern instead of a point;
//! * [`solve_ista`]: iterated soft-thresholding, the fixed-point
//!   iteration of `u = S_{γw}(u − γK^T(Ku − f))`.
//!
//! Records are numbered from `n = 0`, the starting point. Only local
//! convergence is guaranteed for the Newton-type methods and the residual
//! norm need not decrease monotonically, so neither is asserted here.

use std::collections::HashSet;
use std::time::Instant;

use ndarray::{Array1, ArrayView1, Zip};
use serde::{Deserialize, Serialize};

use crate::derivative::NewtonSystem;
use crate::error::{check_len, Error, Result};
use crate::linalg;
use crate::prox::{shrink, ActiveSet, Problem};

/// Above this size the condition number of `M_AA` is not computed.
pub const CONDITION_MAX_ACTIVE: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopRule {
    /// `‖F(uⁿ)‖ ≤ ε`.
    ResidualNorm,
    /// Sign pattern unchanged between consecutive iterates. For ISTA this
    /// is replaced by `‖uⁿ⁺¹ − uⁿ‖ ≤ ε`.
    SignStabilization,
    /// Whichever of the two fires first.
    Both,
}

impl StopRule {
    fn residual(self) -> bool {
        matches!(self, StopRule::ResidualNorm | StopRule::Both)
    }

    fn signs(self) -> bool {
        matches!(self, StopRule::SignStabilization | StopRule::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub max_iters: usize,
    pub residual_tol: f64,
    pub stop_rule: StopRule,
    /// Record `cond(M_AA)` for every Newton system (costly).
    pub record_condition: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_iters: 100,
            residual_tol: 1e-10,
            stop_rule: StopRule::Both,
            record_condition: false,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
        }
        if !(self.residual_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "residual tolerance must be positive, got {}",
                self.residual_tol
            )));
        }
        Ok(())
    }
}

/// One row of an iteration table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub n: usize,
    /// `Ψ(uⁿ)`.
    pub objective: f64,
    /// `‖F(uⁿ)‖` with the problem's `γ`.
    pub residual_norm: f64,
    /// `|A|` at `uⁿ`.
    pub active_size: usize,
    /// `cond(M_AA)` of the system solved from this row, if recorded.
    pub condition: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Converged,
    MaxIters,
    SingularSystem,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Residual,
    SignsStable,
    StepNorm,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub solution: Array1<f64>,
    pub records: Vec<IterationRecord>,
    pub status: Status,
    /// Which rule fired, for [`Status::Converged`].
    pub stop_reason: Option<StopReason>,
    /// A sign pattern recurred without meeting the stop rule.
    pub cycling: bool,
    /// Number of updates (Newton steps, linear solves or thresholding steps).
    pub iterations: usize,
    /// The `γ` actually used by the iteration.
    pub gamma: f64,
    pub wall_time: f64,
    pub warnings: Vec<String>,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }

    pub fn final_record(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    pub fn final_residual(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.residual_norm)
    }

    /// `‖F(u)‖/γ` at the last record, comparable across different `γ`.
    pub fn final_scaled_residual(&self) -> f64 {
        self.final_residual() / self.gamma
    }

    pub fn final_objective(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.objective)
    }
}

fn norm(v: &Array1<f64>) -> f64 {
    v.dot(v).sqrt()
}

/// Objective, residual norm and `|A|` at `u`; `cond(M_AA)` when
/// `opts.record_condition` is set and `|A| ≤ 2000`.
pub fn compute_report_row(p: &Problem, u: ArrayView1<f64>, n: usize, opts: &SolveOptions) -> Result<IterationRecord> {
    p.check_point(u)?;
    let ev = p.evaluate(u);
    let active = ev.active_set(p);
    let condition = if opts.record_condition && active.len() <= CONDITION_MAX_ACTIVE {
        let idx = active.active();
        let block = p.operator().normal_submatrix(&idx, &idx)?.materialize();
        Some(linalg::condition_number(&block))
    } else {
        None
    };
    Ok(IterationRecord {
        n,
        objective: ev.objective(p, u),
        residual_norm: norm(&ev.residual(p, u)),
        active_size: active.len(),
        condition,
    })
}

struct CycleGuard {
    seen: HashSet<ActiveSet>,
}

impl CycleGuard {
    fn new() -> Self {
        CycleGuard { seen: HashSet::new() }
    }

    /// Records `pattern`; returns true if it was seen before.
    fn repeat(&mut self, pattern: &ActiveSet) -> bool {
        !self.seen.insert(pattern.clone())
    }
}

/// Semismooth Newton iteration.
///
/// Each step computes `A`, `I` and `r = F(uⁿ)` at the current point,
/// stops if the stop rule is met, and otherwise solves `G(uⁿ) δu = −r`
/// and sets `uⁿ⁺¹ = uⁿ + δu`. The update zeroes `uⁿ⁺¹` on `I` exactly.
pub fn solve_ssn(p: &Problem, u0: ArrayView1<f64>, opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate()?;
    p.check_point(u0)?;
    let start = Instant::now();
    let mut u = u0.to_owned();
    let mut records = Vec::new();
    let mut guard = CycleGuard::new();
    let mut previous: Option<ActiveSet> = None;
    let mut status = Status::MaxIters;
    let mut stop_reason = None;
    let mut cycling = false;
    let mut warnings = Vec::new();
    let mut n = 0;
    loop {
        let ev = p.evaluate(u.view());
        let active = ev.active_set(p);
        let r = ev.residual(p, u.view());
        let rnorm = norm(&r);
        records.push(IterationRecord {
            n,
            objective: ev.objective(p, u.view()),
            residual_norm: rnorm,
            active_size: active.len(),
            condition: None,
        });
        if opts.stop_rule.residual() && rnorm <= opts.residual_tol {
            status = Status::Converged;
            stop_reason = Some(StopReason::Residual);
            break;
        }
        if opts.stop_rule.signs() && previous.as_ref() == Some(&active) {
            status = Status::Converged;
            stop_reason = Some(StopReason::SignsStable);
            break;
        }
        if n >= opts.max_iters {
            break;
        }
        let repeated = guard.repeat(&active);
        if repeated && previous.as_ref() != Some(&active) {
            cycling = true;
            warnings.push(format!("sign pattern recurred at n = {n}; iterates would cycle"));
            break;
        }
        let system = match NewtonSystem::build(p, &active) {
            Ok(s) => s,
            Err(Error::SingularSystem { pivot, position, .. }) => {
                status = Status::SingularSystem;
                warnings.push(format!(
                    "M_AA singular at n = {n} (|A| = {}, pivot {pivot:.3e} at {position})",
                    active.len()
                ));
                break;
            }
            Err(e) => return Err(e),
        };
        if opts.record_condition && system.active_len() <= CONDITION_MAX_ACTIVE {
            records.last_mut().expect("pushed above").condition = Some(system.condition_number());
        }
        let step = system.solve_step(r.view())?;
        u += &step;
        previous = Some(active);
        n += 1;
    }
    Ok(SolveReport {
        solution: u,
        records,
        status,
        stop_reason,
        cycling,
        iterations: n,
        gamma: p.gamma(),
        wall_time: start.elapsed().as_secs_f64(),
        warnings,
    })
}

/// One active-set update: `u_I = 0` and `M_AA u_A = (K^T f − s w)_A`,
/// where `s` are the signs of `a`.
pub fn active_set_update<'a>(p: &'a Problem, a: &ActiveSet, ktf: ArrayView1<f64>) -> Result<(Array1<f64>, NewtonSystem<'a>)> {
    check_len("active set", p.dim(), a.dim())?;
    let system = NewtonSystem::build(p, a)?;
    let idx = a.active();
    let w = p.weights().values();
    let rhs: Array1<f64> = idx
        .iter()
        .map(|&k| ktf[k] - f64::from(a.signs()[k]) * w[k])
        .collect();
    let mut u = Array1::zeros(p.dim());
    if !idx.is_empty() {
        let ua = system.solve_active(rhs.view())?;
        for (&k, &v) in idx.iter().zip(ua.iter()) {
            u[k] = v;
        }
    }
    Ok((u, system))
}

/// Primal active-set form of the Newton iteration, started from a sign
/// pattern `a0`. Iterate `uⁿ` solves the equality-constrained problem on
/// `Aₙ`; the next pattern is read off `uⁿ − γK^T(Kuⁿ − f)`.
pub fn solve_active_set(p: &Problem, a0: &ActiveSet, opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate()?;
    check_len("initial active set", p.dim(), a0.dim())?;
    let start = Instant::now();
    let ktf = p.operator().adjoint_unchecked(p.data());
    let mut signs = a0.clone();
    let mut u = Array1::zeros(p.dim());
    let mut records = Vec::new();
    let mut guard = CycleGuard::new();
    let mut status = Status::MaxIters;
    let mut stop_reason = None;
    let mut cycling = false;
    let mut warnings = Vec::new();
    let mut solves = 0;
    for n in 0.. {
        let system = match active_set_update(p, &signs, ktf.view()) {
            Ok((next, system)) => {
                u = next;
                system
            }
            Err(Error::SingularSystem { pivot, position, .. }) => {
                status = Status::SingularSystem;
                warnings.push(format!(
                    "M_AA singular at n = {n} (|A| = {}, pivot {pivot:.3e} at {position})",
                    signs.len()
                ));
                break;
            }
            Err(e) => return Err(e),
        };
        solves += 1;
        let ev = p.evaluate(u.view());
        let next = ev.active_set(p);
        let rnorm = norm(&ev.residual(p, u.view()));
        let condition = (opts.record_condition && system.active_len() <= CONDITION_MAX_ACTIVE)
            .then(|| system.condition_number());
        records.push(IterationRecord {
            n,
            objective: ev.objective(p, u.view()),
            residual_norm: rnorm,
            active_size: signs.len(),
            condition,
        });
        if opts.stop_rule.signs() && next == signs {
            status = Status::Converged;
            stop_reason = Some(StopReason::SignsStable);
            break;
        }
        if opts.stop_rule.residual() && rnorm <= opts.residual_tol {
            status = Status::Converged;
            stop_reason = Some(StopReason::Residual);
            break;
        }
        if solves >= opts.max_iters {
            break;
        }
        guard.repeat(&signs);
        if next != signs && guard.seen.contains(&next) {
            cycling = true;
            warnings.push(format!("sign pattern recurred after n = {n}; iterates would cycle"));
            break;
        }
        signs = next;
    }
    Ok(SolveReport {
        solution: u,
        records,
        status,
        stop_reason,
        cycling,
        iterations: solves,
        gamma: p.gamma(),
        wall_time: start.elapsed().as_secs_f64(),
        warnings,
    })
}

/// Iterated soft-thresholding `uⁿ⁺¹ = S_{γ'w}(uⁿ − γ'K^T(Kuⁿ − f))`.
///
/// The step `γ'` is the problem's `γ` capped at `1.9/‖K‖²`, which keeps
/// the objective non-increasing. Residual norms in the records always use
/// the problem's `γ`, so they are comparable with the Newton solvers.
pub fn solve_ista(p: &Problem, u0: ArrayView1<f64>, opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate()?;
    p.check_point(u0)?;
    let start = Instant::now();
    let mut warnings = Vec::new();
    let lipschitz = {
        let nrm = p.operator().operator_norm_estimate();
        nrm * nrm
    };
    let mut step_gamma = p.gamma();
    if lipschitz > 0.0 && p.gamma() * lipschitz >= 1.9 {
        step_gamma = 1.9 / lipschitz;
        warnings.push(format!(
            "step size reduced from gamma = {:.4e} to {:.4e} (gamma·‖K^T K‖ must stay below 2)",
            p.gamma(),
            step_gamma
        ));
    }
    let w = p.weights().values();
    let mut u = u0.to_owned();
    let mut records = Vec::new();
    let mut status = Status::MaxIters;
    let mut stop_reason = None;
    let mut n = 0;
    loop {
        let ev = p.evaluate(u.view());
        let rnorm = norm(&ev.residual(p, u.view()));
        records.push(IterationRecord {
            n,
            objective: ev.objective(p, u.view()),
            residual_norm: rnorm,
            active_size: ev.active_set(p).len(),
            condition: None,
        });
        if opts.stop_rule.residual() && rnorm <= opts.residual_tol {
            status = Status::Converged;
            stop_reason = Some(StopReason::Residual);
            break;
        }
        let mut next = u.clone();
        Zip::from(&mut next)
            .and(&ev.gradient)
            .and(w)
            .for_each(|x, &g, &w| *x = shrink(*x - step_gamma * g, step_gamma * w));
        let moved = norm(&(&next - &u));
        if opts.stop_rule.signs() && moved <= opts.residual_tol {
            status = Status::Converged;
            stop_reason = Some(StopReason::StepNorm);
            break;
        }
        if n >= opts.max_iters {
            break;
        }
        u = next;
        n += 1;
    }
    Ok(SolveReport {
        solution: u,
        records,
        status,
        stop_reason,
        cycling: false,
        iterations: n,
        gamma: step_gamma,
        wall_time: start.elapsed().as_secs_f64(),
        warnings,
    })
}
