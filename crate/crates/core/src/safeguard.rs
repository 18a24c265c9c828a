//! Per-learning-rate penalty ledger and the exclusion rule.
//!
//! Whenever `32 eta(j) |r(i)| > 1` the weighted residual `w(i,j) r(i)` is
//! charged to column `j`. A column stays active while its cumulative penalty
//! is at most the threshold `U`.

use crate::error::{OomdError, Result};
use crate::simplex::{ActiveSet, WeightMatrix};
use crate::ExpertId;

/// True iff `32 * eta * |r| > 1`.
pub fn instability_indicator(eta: f64, residual: f64) -> bool {
    32.0 * eta * residual.abs() > 1.0
}

/// Prediction errors `r(i) = loss(i) - m(i)` keyed by expert.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualVector {
    ids: Vec<ExpertId>,
    values: Vec<f64>,
}

impl ResidualVector {
    pub fn new(ids: Vec<ExpertId>, values: Vec<f64>) -> Result<Self> {
        if ids.len() != values.len() {
            return Err(OomdError::DimensionMismatch(format!(
                "{} ids, {} residuals",
                ids.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(OomdError::NonFinite("residual"));
        }
        Ok(Self { ids, values })
    }

    pub fn from_loss(ids: &[ExpertId], loss: &[f64], prediction: &[f64]) -> Result<Self> {
        if loss.len() != prediction.len() {
            return Err(OomdError::DimensionMismatch("loss vs prediction".into()));
        }
        let values = loss.iter().zip(prediction).map(|(l, m)| l - m).collect();
        Self::new(ids.to_vec(), values)
    }

    pub fn ids(&self) -> &[ExpertId] {
        &self.ids
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `max_i |r(i)|`, zero for an empty vector.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdMode {
    /// `U = 1` forever.
    Fixed,
    /// `U <- max(U, ||r||_inf)` after every round.
    Dynamic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyLedger {
    penalties: Vec<f64>,
    threshold: f64,
    mode: ThresholdMode,
    permanent_exclusion: bool,
    excluded: Vec<bool>,
}

impl PenaltyLedger {
    pub fn new(m: usize, mode: ThresholdMode, initial_threshold: f64) -> Self {
        let threshold = match mode {
            ThresholdMode::Fixed => 1.0,
            ThresholdMode::Dynamic => initial_threshold,
        };
        Self {
            penalties: vec![0.0; m],
            threshold,
            mode,
            permanent_exclusion: false,
            excluded: vec![false; m],
        }
    }

    /// Once a column crosses the threshold it never re-enters.
    pub fn with_permanent_exclusion(mut self, on: bool) -> Self {
        self.permanent_exclusion = on;
        self
    }

    pub fn penalties(&self) -> &[f64] {
        &self.penalties
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn mode(&self) -> ThresholdMode {
        self.mode
    }

    pub fn total(&self) -> f64 {
        self.penalties.iter().sum()
    }

    /// `L(j) += sum_i 1[32 eta(j) |r(i)| > 1] w(i,j) r(i)` for every column,
    /// excluded ones included.
    pub fn update_penalties(
        &mut self,
        weights: &WeightMatrix,
        residual: &ResidualVector,
        eta: &[f64],
    ) -> Result<()> {
        if weights.ids() != residual.ids() {
            return Err(OomdError::DimensionMismatch(
                "weights and residual cover different experts".into(),
            ));
        }
        if weights.cols() != self.penalties.len() || eta.len() != self.penalties.len() {
            return Err(OomdError::DimensionMismatch(format!(
                "ledger has {} columns, weights {}, grid {}",
                self.penalties.len(),
                weights.cols(),
                eta.len()
            )));
        }
        for (row, &r) in residual.values().iter().enumerate() {
            if r == 0.0 {
                continue;
            }
            let w = weights.row(row);
            for (c, (&e, pen)) in eta.iter().zip(self.penalties.iter_mut()).enumerate() {
                if instability_indicator(e, r) {
                    *pen += w[c] * r;
                }
            }
        }
        if self.permanent_exclusion {
            for (x, &l) in self.excluded.iter_mut().zip(&self.penalties) {
                *x |= l > self.threshold;
            }
        }
        Ok(())
    }

    /// `{ j : L(j) <= U }`.
    pub fn active_set(&self) -> ActiveSet {
        ActiveSet::from_mask(
            self.penalties
                .iter()
                .zip(&self.excluded)
                .map(|(&l, &x)| !x && l <= self.threshold)
                .collect(),
        )
    }

    /// `U <- max(U, ||r||_inf)` in dynamic mode; no-op otherwise.
    pub fn update_threshold(&mut self, residual: &ResidualVector) {
        if self.mode == ThresholdMode::Dynamic {
            self.threshold = self.threshold.max(residual.sup_norm());
        }
    }
}
