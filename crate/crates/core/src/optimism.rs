//! Loss predictors for the optimistic step.

use std::collections::HashMap;

use crate::error::{OomdError, Result};
use crate::ExpertId;

/// A source of prediction vectors `m_t`.
///
/// `predict` returns the decision-time vector. `finalize` is called once the
/// losses are known and returns the full vector used for residuals.
pub trait Optimism: Send {
    fn predict(&mut self, experts: &[ExpertId]) -> Vec<f64>;
    fn finalize(
        &mut self,
        experts: &[ExpertId],
        loss: &[f64],
        played: &[f64],
    ) -> Result<Vec<f64>>;
}

/// `m_t = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroOptimism;

impl Optimism for ZeroOptimism {
    fn predict(&mut self, experts: &[ExpertId]) -> Vec<f64> {
        vec![0.0; experts.len()]
    }

    fn finalize(&mut self, experts: &[ExpertId], loss: &[f64], played: &[f64]) -> Result<Vec<f64>> {
        check_shapes(experts, loss, played)?;
        Ok(vec![0.0; experts.len()])
    }
}

/// The same prediction vector every round, by position.
#[derive(Debug, Clone)]
pub struct FixedOptimism {
    values: Vec<f64>,
}

impl FixedOptimism {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }
}

impl Optimism for FixedOptimism {
    fn predict(&mut self, experts: &[ExpertId]) -> Vec<f64> {
        (0..experts.len())
            .map(|i| self.values.get(i).copied().unwrap_or(0.0))
            .collect()
    }

    fn finalize(&mut self, experts: &[ExpertId], loss: &[f64], played: &[f64]) -> Result<Vec<f64>> {
        check_shapes(experts, loss, played)?;
        Ok(self.predict(experts))
    }
}

/// Exponential moving average of each expert's own losses, centered by the
/// learner's played loss.
///
/// Continuing experts use `m'_t(i) = (1-c) m'_{t-1}(i) + c l_{t-1}(i)`;
/// experts seen for the first time start at the running average of the
/// learner's own loss `m~_t = (1-c) m~_{t-1} + c <l_{t-1}, p_{t-1}>`,
/// `m~_1 = 0`; experts absent last round keep their value. The full vector is
/// `m_t = m'_t + <l_t - m'_t, p_t>`, a constant shift of `m'_t`.
#[derive(Debug, Clone)]
pub struct EmaOptimism {
    coef: f64,
    surrogate: HashMap<ExpertId, f64>,
    baseline: f64,
}

impl Default for EmaOptimism {
    fn default() -> Self {
        Self::new(0.5)
    }
}

impl EmaOptimism {
    pub fn new(coef: f64) -> Self {
        Self {
            coef,
            surrogate: HashMap::new(),
            baseline: 0.0,
        }
    }

    /// Current `m~_t`.
    pub fn baseline(&self) -> f64 {
        self.baseline
    }

    pub fn surrogate(&self, id: ExpertId) -> Option<f64> {
        self.surrogate.get(&id).copied()
    }
}

impl Optimism for EmaOptimism {
    fn predict(&mut self, experts: &[ExpertId]) -> Vec<f64> {
        experts
            .iter()
            .map(|id| *self.surrogate.entry(*id).or_insert(self.baseline))
            .collect()
    }

    fn finalize(&mut self, experts: &[ExpertId], loss: &[f64], played: &[f64]) -> Result<Vec<f64>> {
        check_shapes(experts, loss, played)?;
        let mut decision = Vec::with_capacity(experts.len());
        for id in experts {
            decision.push(
                *self
                    .surrogate
                    .get(id)
                    .ok_or(OomdError::UnknownExpert(*id))?,
            );
        }
        let shift: f64 = played
            .iter()
            .zip(loss.iter().zip(&decision))
            .map(|(p, (l, m))| p * (l - m))
            .sum();
        let learner_loss: f64 = played.iter().zip(loss).map(|(p, l)| p * l).sum();
        let c = self.coef;
        for ((id, l), m) in experts.iter().zip(loss).zip(&decision) {
            self.surrogate.insert(*id, (1.0 - c) * m + c * l);
        }
        self.baseline = (1.0 - c) * self.baseline + c * learner_loss;
        Ok(decision.iter().map(|m| m + shift).collect())
    }
}

fn check_shapes(experts: &[ExpertId], loss: &[f64], played: &[f64]) -> Result<()> {
    if loss.len() != experts.len() || played.len() != experts.len() {
        return Err(OomdError::DimensionMismatch("optimism inputs".into()));
    }
    if loss.iter().any(|v| !v.is_finite()) {
        return Err(OomdError::NonFinite("loss"));
    }
    let total: f64 = played.iter().sum();
    if played.iter().any(|&p| !(p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
        return Err(OomdError::NotADistribution(format!("sum = {total}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<ExpertId> {
        (0..n as u64).map(ExpertId).collect()
    }

    #[test]
    fn first_round_predicts_zero() {
        let mut o = EmaOptimism::default();
        assert_eq!(o.predict(&ids(4)), vec![0.0; 4]);
    }

    #[test]
    fn exact_surrogate_needs_no_shift() {
        let mut o = EmaOptimism::default();
        o.predict(&ids(2));
        let m = o.finalize(&ids(2), &[0.0, 0.0], &[0.3, 0.7]).unwrap();
        assert_eq!(m, vec![0.0, 0.0]);
    }

    #[test]
    fn single_expert_residual_vanishes() {
        let mut o = EmaOptimism::default();
        o.surrogate.insert(ExpertId(0), 0.2);
        assert_eq!(o.predict(&ids(1)), vec![0.2]);
        let m = o.finalize(&ids(1), &[0.6], &[1.0]).unwrap();
        assert!((m[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn two_expert_hand_computation() {
        let mut o = EmaOptimism::default();
        o.predict(&ids(2));
        let m = o.finalize(&ids(2), &[1.0, 0.0], &[0.5, 0.5]).unwrap();
        assert_eq!(m, vec![0.5, 0.5]);
        let r: Vec<f64> = [1.0, 0.0].iter().zip(&m).map(|(l, m)| l - m).collect();
        assert_eq!(r, vec![0.5, -0.5]);
    }

    #[test]
    fn converges_geometrically_to_constant_loss() {
        let mut o = EmaOptimism::default();
        let c = 0.7;
        let start = o.predict(&ids(1))[0];
        for t in 1..=30 {
            let m = o.predict(&ids(1))[0];
            let expect = c + (start - c) * 0.5f64.powi(t - 1);
            assert!((m - expect).abs() < 1e-15, "t={t}");
            o.finalize(&ids(1), &[c], &[1.0]).unwrap();
        }
    }

    #[test]
    fn new_expert_starts_from_learner_average() {
        let mut o = EmaOptimism::default();
        let mut mt = 0.0f64;
        for t in 1..=6 {
            o.predict(&ids(2));
            o.finalize(&ids(2), &[0.5, 0.5], &[0.4, 0.6]).unwrap();
            mt = 0.5 * mt + 0.5 * 0.5;
            let fresh = o.predict(&[ExpertId(100 + t)])[0];
            assert!((fresh - mt).abs() < 1e-15);
            assert!(fresh > 0.0 && fresh <= 0.5);
        }
    }

    #[test]
    fn absent_expert_keeps_value() {
        let mut o = EmaOptimism::default();
        o.predict(&ids(2));
        o.finalize(&ids(2), &[0.8, 0.2], &[0.5, 0.5]).unwrap();
        let v1 = o.surrogate(ExpertId(1)).unwrap();
        o.predict(&ids(1));
        o.finalize(&ids(1), &[0.0], &[1.0]).unwrap();
        assert_eq!(o.surrogate(ExpertId(1)).unwrap(), v1);
    }

    #[test]
    fn residuals_are_centered() {
        let mut o = EmaOptimism::default();
        let losses = [[0.1, 0.9, 0.4], [0.3, 0.2, 0.8], [0.9, 0.1, 0.5]];
        let p = [0.2, 0.5, 0.3];
        for l in losses {
            o.predict(&ids(3));
            let m = o.finalize(&ids(3), &l, &p).unwrap();
            let centered: f64 = (0..3).map(|i| p[i] * (l[i] - m[i])).sum();
            assert!(centered.abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_non_distribution() {
        let mut o = EmaOptimism::default();
        o.predict(&ids(2));
        assert!(o.finalize(&ids(2), &[0.0, 0.0], &[0.5, 0.6]).is_err());
        assert!(ZeroOptimism.finalize(&ids(2), &[0.0, 0.0], &[1.5, -0.5]).is_err());
    }

    #[test]
    fn zero_and_fixed() {
        let mut z = ZeroOptimism;
        assert_eq!(z.finalize(&ids(2), &[0.4, 0.6], &[0.5, 0.5]).unwrap(), vec![0.0, 0.0]);
        let mut f = FixedOptimism::new(vec![0.0, 0.5]);
        assert_eq!(f.predict(&ids(2)), vec![0.0, 0.5]);
        assert_eq!(f.finalize(&ids(2), &[1.0, 0.5], &[0.5, 0.5]).unwrap(), vec![0.0, 0.5]);
    }
}
