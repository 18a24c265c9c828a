//! Exact solver for `argmin_{w in Omega} <cost, w> + D_psi(w, prior)`.
//!
//! From the KKT conditions every active coordinate has the form
//! `w(i,j) = max(eps, prior(i,j) * exp(eta(j) * (lambda - cost(i,j))))`
//! and inactive coordinates are pinned at `eps`, so the whole problem reduces
//! to finding the scalar multiplier `lambda` at which the total mass is one.
//! The total mass is nondecreasing in `lambda`; the root is located by a
//! bracketed search that takes Newton steps on the log-mass when they stay
//! inside the bracket and bisects otherwise.

use super::{compensated_sum, ActiveSet, WeightMatrix};
use crate::error::{OomdError, Result};

/// Stop once `|g(lambda)|` drops below this.
pub const MASS_TOLERANCE: f64 = 1e-12;
/// Stop once the multiplier bracket is narrower than this.
pub const BRACKET_TOLERANCE: f64 = 1e-14;
/// Hard cap on root-finding iterations.
pub const MAX_ITERATIONS: usize = 200;
const MAX_EXPANSIONS: usize = 200;

/// One truncated-simplex mirror-descent subproblem.
#[derive(Debug, Clone, Copy)]
pub struct OmdProblem<'a> {
    /// Reference point; strictly positive, need not sum to one.
    pub prior: &'a WeightMatrix,
    /// Row-major per-coordinate linear cost, same shape as `prior`.
    pub cost: &'a [f64],
    pub active: &'a ActiveSet,
    /// Lower bound on active coordinates and pinned value of inactive ones.
    pub floor: f64,
    /// Learning rate per column.
    pub eta: &'a [f64],
}

impl OmdProblem<'_> {
    pub fn validate(&self) -> Result<()> {
        let (k, m) = (self.prior.rows(), self.prior.cols());
        if self.cost.len() != k * m {
            return Err(OomdError::DimensionMismatch(format!(
                "cost has {} entries, prior is {k}x{m}",
                self.cost.len()
            )));
        }
        if self.eta.len() != m || self.active.grid_len() != m {
            return Err(OomdError::DimensionMismatch(format!(
                "{} learning rates / {} active flags for {m} columns",
                self.eta.len(),
                self.active.grid_len()
            )));
        }
        if k == 0 || m == 0 {
            return Err(OomdError::EmptyExpertSet);
        }
        if self.eta.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(OomdError::NonFinite("learning rates"));
        }
        if self.cost.iter().any(|c| !c.is_finite()) {
            return Err(OomdError::NonFinite("cost"));
        }
        let fill = self.floor * (k * m) as f64;
        if !(self.floor > 0.0) || !(fill < 1.0) {
            return Err(OomdError::InfeasibleFloor(fill));
        }
        self.prior.check_positive()
    }

    /// The active set actually used by the solver: an empty set is replaced by
    /// the column with the smallest learning rate.
    fn effective_active(&self) -> std::borrow::Cow<'_, ActiveSet> {
        if self.active.is_empty() {
            let smallest = self
                .eta
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(c, _)| c)
                .unwrap_or(0);
            log::warn!("empty active set; falling back to column {}", smallest + 1);
            let mut s = ActiveSet::empty(self.active.grid_len());
            s.insert(smallest);
            std::borrow::Cow::Owned(s)
        } else {
            std::borrow::Cow::Borrowed(self.active)
        }
    }
}

/// Solver output with diagnostics.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub weights: WeightMatrix,
    /// Multiplier of the sum-to-one constraint.
    pub multiplier: f64,
    /// Root-finding iterations (excluding bracket expansion).
    pub iterations: usize,
    pub bracket_width: f64,
    /// `g` at the returned multiplier, before the final renormalization.
    pub residual_mass: f64,
}

/// `g(lambda)`: total mass of the KKT-form point at `lambda`, minus one.
pub fn excess_mass(problem: &OmdProblem<'_>, lambda: f64) -> f64 {
    let active = problem.effective_active();
    let m = problem.prior.cols();
    let prior = problem.prior.as_slice();
    let mut total = 0.0;
    for (k, &p) in prior.iter().enumerate() {
        let c = k % m;
        total += if active.contains(c) {
            let e = problem.eta[c];
            (p * (e * (lambda - problem.cost[k])).exp()).max(problem.floor)
        } else {
            problem.floor
        };
    }
    total - 1.0
}

struct LogMass<'p> {
    /// `ln prior - eta * cost` for active coordinates.
    base: Vec<f64>,
    eta: Vec<f64>,
    ln_floor: f64,
    /// `ln` of the mass the active coordinates must hold.
    ln_target: f64,
    scratch: &'p mut Vec<f64>,
}

impl LogMass<'_> {
    /// Returns `(ln S_active - ln target, d/dlambda of it)`.
    ///
    /// Clamped coordinates contribute `eps` each without an `exp`, and terms
    /// more than `e^60` below the largest are dropped.
    fn eval(&mut self, lambda: f64) -> (f64, f64) {
        let mut mx = self.ln_floor;
        self.scratch.clear();
        for (b, e) in self.base.iter().zip(&self.eta) {
            let v = b + e * lambda;
            mx = mx.max(v);
            self.scratch.push(v);
        }
        if !mx.is_finite() {
            return (mx, f64::INFINITY);
        }
        let cut = mx - 60.0;
        let mut clamped = 0usize;
        let mut s = 0.0;
        let mut ds = 0.0;
        for (v, e) in self.scratch.iter().zip(&self.eta) {
            if *v <= self.ln_floor {
                clamped += 1;
            } else if *v > cut {
                let x = (v - mx).exp();
                s += x;
                ds += e * x;
            }
        }
        if clamped > 0 && self.ln_floor > cut {
            s += clamped as f64 * (self.ln_floor - mx).exp();
        }
        (mx + s.ln() - self.ln_target, ds / s)
    }
}

/// Solves the truncated-simplex step and returns only the weights.
pub fn solve_truncated_omd(problem: &OmdProblem<'_>) -> Result<WeightMatrix> {
    solve_truncated_omd_with_report(problem).map(|r| r.weights)
}

pub fn solve_truncated_omd_with_report(problem: &OmdProblem<'_>) -> Result<SolveReport> {
    problem.validate()?;
    let active = problem.effective_active();
    let (k_rows, m) = (problem.prior.rows(), problem.prior.cols());
    let n = k_rows * m;
    let floor = problem.floor;
    let prior = problem.prior.as_slice();

    let n_active = k_rows * active.len();
    let n_inactive = n - n_active;
    let target = 1.0 - floor * n_inactive as f64;

    let mut base = Vec::with_capacity(n_active);
    let mut etas = Vec::with_capacity(n_active);
    let mut index = Vec::with_capacity(n_active);
    let mut cmin = f64::INFINITY;
    let mut cmax = f64::NEG_INFINITY;
    let mut eta_min = f64::INFINITY;
    for k in 0..n {
        let c = k % m;
        if active.contains(c) {
            let e = problem.eta[c];
            base.push(prior[k].ln() - e * problem.cost[k]);
            etas.push(e);
            index.push(k);
            cmin = cmin.min(problem.cost[k]);
            cmax = cmax.max(problem.cost[k]);
            eta_min = eta_min.min(e);
        }
    }

    let mut scratch = Vec::with_capacity(n_active);
    let mut lm = LogMass {
        base,
        eta: etas,
        ln_floor: floor.ln(),
        ln_target: target.ln(),
        scratch: &mut scratch,
    };

    // At the root the largest unclamped term holds between
    // (1 - n eps) / n_active and the target, which pins the multiplier
    // between the smallest per-coordinate crossing points of those levels.
    // Rounding can leave either end marginally on the wrong side; the
    // expansion below repairs that. The wide cost-spread bracket is used
    // only if the crossing points are not finite.
    let ln_share = ((1.0 - floor * n as f64) / n_active as f64).ln();
    let (mut lo, mut hi) = (f64::INFINITY, f64::INFINITY);
    for (b, e) in lm.base.iter().zip(&lm.eta) {
        lo = lo.min((ln_share - b) / e);
        hi = hi.min((lm.ln_target - b) / e);
    }
    let (mut f_lo, _) = lm.eval(lo);
    let (mut f_hi, mut d_hi) = lm.eval(hi);
    if !(lo.is_finite() && hi.is_finite()) {
        let spread = (1.0 / floor).ln() / eta_min;
        lo = cmin - spread;
        hi = cmax + spread;
        f_lo = lm.eval(lo).0;
        (f_hi, d_hi) = lm.eval(hi);
    }
    let mut expansions = 0;
    while !(f_lo <= 0.0 && f_hi >= 0.0) {
        if expansions == MAX_EXPANSIONS || !lo.is_finite() || !hi.is_finite() {
            return Err(OomdError::BracketFailure(expansions));
        }
        let width = hi - lo;
        if f_lo >= 0.0 {
            lo -= width;
            f_lo = lm.eval(lo).0;
        }
        if f_hi <= 0.0 {
            hi += width;
            (f_hi, d_hi) = lm.eval(hi);
        }
        expansions += 1;
    }

    // Newton on the convex log-mass from the right end, safeguarded by the
    // bracket.
    let mut lambda = hi;
    let (mut f, mut df) = (f_hi, d_hi);
    let mut step_old = hi - lo;
    let mut step = step_old;
    let mut iterations = 0;
    loop {
        if mass_gap(f, target) <= MASS_TOLERANCE {
            break;
        }
        if f > 0.0 {
            hi = lambda;
        } else {
            lo = lambda;
        }
        if hi - lo <= BRACKET_TOLERANCE || iterations == MAX_ITERATIONS {
            break;
        }
        iterations += 1;
        let newton_ok = df > 0.0
            && ((lambda - hi) * df - f) * ((lambda - lo) * df - f) < 0.0
            && (2.0 * f).abs() <= (step_old * df).abs();
        let next = if newton_ok {
            step_old = step;
            step = f / df;
            lambda - step
        } else {
            step_old = step;
            step = 0.5 * (hi - lo);
            lo + step
        };
        if next == lambda || next <= lo || next >= hi {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            lambda = mid;
        } else {
            lambda = next;
        }
        (f, df) = lm.eval(lambda);
    }
    let residual_mass = target * f.exp_m1();

    // Materialize, then renormalize the unclamped active mass. With very
    // large learning rates the multiplier cannot resolve the mass of the
    // steepest coordinates, so the rescale can push entries under the floor;
    // those are clamped and the rest rescaled again until none drop.
    let mut data = vec![floor; n];
    let mut free = Vec::with_capacity(index.len());
    for (slot, &k) in index.iter().enumerate() {
        let v = lm.base[slot] + lm.eta[slot] * lambda;
        if v > lm.ln_floor {
            let w = v.exp();
            if w > floor {
                data[k] = w;
                free.push(k);
            }
        }
    }
    while !free.is_empty() {
        let free_total = compensated_sum(free.iter().map(|&k| data[k]));
        let want = 1.0 - floor * (n - free.len()) as f64;
        let scale = want / free_total;
        let before = free.len();
        free.retain(|&k| {
            let keep = data[k] * scale > floor;
            if !keep {
                data[k] = floor;
            }
            keep
        });
        if free.len() == before {
            for &k in &free {
                data[k] *= scale;
            }
            break;
        }
    }

    Ok(SolveReport {
        weights: WeightMatrix::new(problem.prior.ids().to_vec(), m, data)?,
        multiplier: lambda,
        iterations,
        bracket_width: hi - lo,
        residual_mass,
    })
}

fn mass_gap(log_ratio: f64, target: f64) -> f64 {
    (target * log_ratio.exp_m1()).abs()
}

/// Largest KKT stationarity violation of `solution` for `problem`, plus the
/// simplex-sum violation `|sum w - 1|`.
///
/// The multiplier is recovered from the interior coordinate with the largest
/// learning rate. Clamped coordinates count as violations only when their
/// unconstrained value would exceed the floor.
pub fn kkt_residual(solution: &WeightMatrix, problem: &OmdProblem<'_>) -> Result<f64> {
    problem.validate()?;
    let (k_rows, m) = (problem.prior.rows(), problem.prior.cols());
    if solution.rows() != k_rows || solution.cols() != m {
        return Err(OomdError::DimensionMismatch("solution shape".into()));
    }
    let active = problem.effective_active();
    let floor = problem.floor;
    let clamp_tol = floor * 1e-9 + 1e-300;
    let w = solution.as_slice();
    let prior = problem.prior.as_slice();

    let mut best: Option<(f64, usize)> = None;
    for (k, &v) in w.iter().enumerate() {
        let c = k % m;
        if !v.is_finite() {
            return Err(OomdError::Infeasible(format!("non-finite entry at {k}")));
        }
        if active.contains(c) {
            if v < floor - 1e-12 {
                return Err(OomdError::Infeasible(format!(
                    "active coordinate {k} below floor: {v}"
                )));
            }
            if v > floor + clamp_tol && best.map_or(true, |(e, _)| problem.eta[c] > e) {
                best = Some((problem.eta[c], k));
            }
        } else if (v - floor).abs() > 1e-12 {
            return Err(OomdError::Infeasible(format!(
                "inactive coordinate {k} not pinned at floor: {v}"
            )));
        }
    }

    let sum_violation = (compensated_sum(w.iter().copied()) - 1.0).abs();
    let Some((_, k_ref)) = best else {
        return Ok(sum_violation);
    };
    let eta_ref = problem.eta[k_ref % m];
    let lambda = problem.cost[k_ref] + (w[k_ref] / prior[k_ref]).ln() / eta_ref;

    let mut worst: f64 = 0.0;
    for (k, &v) in w.iter().enumerate() {
        let c = k % m;
        if !active.contains(c) {
            continue;
        }
        let e = problem.eta[c];
        let stationarity = e * (problem.cost[k] - lambda) + (v / prior[k]).ln();
        let violation = if v > floor + clamp_tol {
            stationarity.abs()
        } else {
            // ln(unconstrained / floor) must be <= 0.
            let unconstrained = prior[k].ln() + e * (lambda - problem.cost[k]);
            (unconstrained - floor.ln()).max(0.0)
        };
        worst = worst.max(violation);
    }
    Ok(worst + sum_violation)
}
