//! Loss clipping for unknown loss ranges.
//!
//! The running scale `B_t = max(B_{t-1}, ||l_t - m_t||_inf)` (with
//! `B_0 = B0`) shrinks each round's prediction error by `B_{t-1} / B_t`, so
//! the wrapped learner never sees an error larger than its committed range
//! `B~`. When `B_t` outgrows `B~` the range is raised to `max(R B~, B_t)` and
//! the inner learner is rebuilt from scratch, after it has consumed the
//! clipped loss of that round.

use crate::error::{OomdError, Result};
use crate::learner::{OnlineLearner, RoundOutput};
use crate::ExpertId;

#[derive(Debug, Clone, PartialEq)]
pub struct ClipState {
    b_tilde: f64,
    b_running: f64,
    b0: f64,
    rate: f64,
    restarts: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClipOutcome {
    pub surrogate: Vec<f64>,
    pub restart: bool,
    /// `B_{t-1}`, the bound on `||surrogate - m||_inf`.
    pub previous_scale: f64,
}

impl ClipState {
    pub fn new(b0: f64, rate: f64) -> Result<Self> {
        if !(b0 > 0.0 && b0.is_finite()) || !(rate >= 1.0 && rate.is_finite()) {
            return Err(OomdError::Config(format!(
                "clipping needs B0 > 0 and R >= 1, got B0 = {b0}, R = {rate}"
            )));
        }
        Ok(Self {
            b_tilde: b0,
            b_running: b0,
            b0,
            rate,
            restarts: 0,
        })
    }

    /// Committed range `B~`.
    pub fn scale(&self) -> f64 {
        self.b_tilde
    }

    /// Running maximum error `B_t`.
    pub fn running(&self) -> f64 {
        self.b_running
    }

    pub fn initial_scale(&self) -> f64 {
        self.b0
    }

    pub fn restarts(&self) -> usize {
        self.restarts
    }

    pub fn clip_loss(&mut self, loss: &[f64], prediction: &[f64]) -> Result<ClipOutcome> {
        if loss.len() != prediction.len() {
            return Err(OomdError::DimensionMismatch("loss vs prediction".into()));
        }
        if loss.iter().chain(prediction).any(|v| !v.is_finite()) {
            return Err(OomdError::NonFinite("loss"));
        }
        let err = loss
            .iter()
            .zip(prediction)
            .fold(0.0f64, |a, (l, m)| a.max((l - m).abs()));
        let prev = self.b_running;
        let cur = prev.max(err);
        let surrogate = if cur == 0.0 {
            prediction.to_vec()
        } else {
            let ratio = prev / cur;
            loss.iter()
                .zip(prediction)
                .map(|(l, m)| m + ratio * (l - m))
                .collect()
        };
        self.b_running = cur;
        let restart = cur > self.b_tilde;
        if restart {
            self.b_tilde = (self.rate * self.b_tilde).max(cur);
            self.restarts += 1;
        }
        Ok(ClipOutcome {
            surrogate,
            restart,
            previous_scale: prev,
        })
    }
}

/// Wraps a learner built by `factory(range, experts)` with loss clipping.
/// On a restart the new instance is built for the experts of the round that
/// triggered it.
///
/// With `normalize` set, losses and predictions are divided by the committed
/// range before they reach the inner learner, for learners that assume
/// losses in `[0, 1]`.
pub struct ClippedLearner<L, F> {
    state: ClipState,
    inner: L,
    factory: F,
    normalize: bool,
    in_round: bool,
    experts: Vec<ExpertId>,
}

impl<L, F> ClippedLearner<L, F>
where
    L: OnlineLearner,
    F: FnMut(f64, &[ExpertId]) -> Result<L>,
{
    pub fn new(
        mut factory: F,
        experts: &[ExpertId],
        b0: f64,
        rate: f64,
        normalize: bool,
    ) -> Result<Self> {
        let state = ClipState::new(b0, rate)?;
        let inner = factory(state.scale(), experts)?;
        Ok(Self {
            state,
            inner,
            factory,
            normalize,
            in_round: false,
            experts: experts.to_vec(),
        })
    }

    pub fn inner(&self) -> &L {
        &self.inner
    }

    /// Mutable access between rounds, e.g. to remove experts.
    pub fn inner_mut(&mut self) -> &mut L {
        &mut self.inner
    }

    pub fn state(&self) -> &ClipState {
        &self.state
    }

    fn divisor(&self) -> f64 {
        if self.normalize {
            self.state.scale()
        } else {
            1.0
        }
    }
}

impl<L, F> OnlineLearner for ClippedLearner<L, F>
where
    L: OnlineLearner,
    F: FnMut(f64, &[ExpertId]) -> Result<L>,
{
    fn begin_round(&mut self, experts: &[ExpertId], prediction: &[f64]) -> Result<RoundOutput> {
        let d = self.divisor();
        let scaled: Vec<f64> = prediction.iter().map(|m| m / d).collect();
        let out = self.inner.begin_round(experts, &scaled)?;
        self.in_round = true;
        self.experts.clear();
        self.experts.extend_from_slice(experts);
        Ok(out)
    }

    fn end_round(&mut self, loss: &[f64], prediction: &[f64]) -> Result<()> {
        if !self.in_round {
            return Err(OomdError::Protocol("end_round without begin_round"));
        }
        let d = self.divisor();
        let outcome = self.state.clip_loss(loss, prediction)?;
        let fed: Vec<f64> = outcome.surrogate.iter().map(|l| l / d).collect();
        let m: Vec<f64> = prediction.iter().map(|m| m / d).collect();
        self.inner.end_round(&fed, &m)?;
        self.in_round = false;
        if outcome.restart {
            log::debug!("loss scale grew to {:.3e}; restarting", self.state.scale());
            self.inner = (self.factory)(self.state.scale(), &self.experts)?;
        }
        Ok(())
    }
}
