//! Per-round protocol for fixed and dynamic expert pools.
//!
//! Each round runs two truncated-simplex solves from the same prior over the
//! same decision set: an optimistic step with the predicted loss, whose
//! column-marginal over the active set is played, and a loss step with the
//! observed loss plus the second-order correction `32 eta(j) (l - m)^2`,
//! which becomes the next prior.
//!
//! In the dynamic mode the stored weights are unnormalized. Rows of experts
//! present this round are normalized by their total `W_t`, updated, and
//! scaled back by `W_t`; rows of absent experts are left untouched.

use std::collections::{HashMap, HashSet};

use crate::error::{OomdError, Result};
use crate::safeguard::{PenaltyLedger, ResidualVector, ThresholdMode};
use crate::simplex::{
    compensated_sum, solve_truncated_omd, ActiveSet, LearningRateGrid, OmdProblem, WeightMatrix,
};
use crate::ExpertId;

/// Stored weights never drop below this.
pub const WEIGHT_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolMode {
    /// The same experts every round; weights normalized, `eps = 1/(K M T^3)`.
    Fixed,
    /// Experts may arrive and leave; weights unnormalized,
    /// `eps_t = 1/(64 W_t T^2)`.
    Dynamic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub horizon: usize,
    /// Grid size `M`; `None` uses `ceil(log2 T^2)`.
    pub grid_size: Option<usize>,
    /// Drop grid points with `eta` above this (single-layer MsMwC).
    pub max_eta: Option<f64>,
    /// Initial exclusion threshold `U_1` (dynamic threshold only).
    pub initial_threshold: f64,
    pub pool: PoolMode,
    pub threshold: ThresholdMode,
    pub safeguard_enabled: bool,
    /// When off, every prediction passed in is replaced by zero.
    pub optimism_enabled: bool,
    pub permanent_exclusion: bool,
    /// Exponent of `T` in the dynamic-pool floor `1/(64 W_t T^p)`.
    pub dynamic_floor_exponent: i32,
}

impl LearnerConfig {
    /// Experimental defaults: `M = 40`, `U_1 = 1`, fixed pool.
    pub fn new(horizon: usize) -> Self {
        Self {
            horizon,
            grid_size: Some(40),
            max_eta: None,
            initial_threshold: 1.0,
            pool: PoolMode::Fixed,
            threshold: ThresholdMode::Fixed,
            safeguard_enabled: true,
            optimism_enabled: true,
            permanent_exclusion: false,
            dynamic_floor_exponent: 2,
        }
    }

    /// Fixed pool with the theoretical grid size `ceil(log2 T^2)`.
    pub fn theoretical(horizon: usize) -> Self {
        Self {
            grid_size: None,
            ..Self::new(horizon)
        }
    }

    /// Dynamic pool with dynamic threshold.
    pub fn dynamic(horizon: usize) -> Self {
        Self {
            pool: PoolMode::Dynamic,
            threshold: ThresholdMode::Dynamic,
            ..Self::new(horizon)
        }
    }

    pub fn with_grid_size(mut self, m: Option<usize>) -> Self {
        self.grid_size = m;
        self
    }
}

/// What the learner plays in a round.
#[derive(Debug, Clone)]
pub struct RoundOutput {
    pub experts: Vec<ExpertId>,
    /// Distribution over `experts`.
    pub prediction: Vec<f64>,
    /// Normalized optimistic weights over (expert x grid column).
    pub optimistic_weights: WeightMatrix,
    pub active: ActiveSet,
    pub floor: f64,
}

impl RoundOutput {
    /// Number of violated decision-set constraints: the simplex sum (1e-9),
    /// active floors (1e-12 slack) and pinned inactive coordinates.
    pub fn feasibility_violations(&self) -> usize {
        let w = &self.optimistic_weights;
        let mut bad = usize::from((w.total() - 1.0).abs() > 1e-9);
        let m = w.cols();
        for (k, &v) in w.as_slice().iter().enumerate() {
            let ok = if self.active.contains(k % m) {
                v >= self.floor * (1.0 - 1e-12)
            } else {
                v == self.floor
            };
            bad += usize::from(!ok);
        }
        bad
    }
}

/// Interface shared by learners and wrappers around them.
pub trait OnlineLearner {
    /// Plays a distribution over `experts` given decision-time predictions.
    fn begin_round(&mut self, experts: &[ExpertId], prediction: &[f64]) -> Result<RoundOutput>;
    /// Consumes the observed losses and the full prediction vector.
    fn end_round(&mut self, loss: &[f64], prediction: &[f64]) -> Result<()>;
}

#[derive(Debug, Clone)]
struct Pending {
    experts: Vec<ExpertId>,
    rows: Vec<usize>,
    prior: WeightMatrix,
    active: ActiveSet,
    floor: f64,
    total_weight: f64,
    optimistic: WeightMatrix,
}

#[derive(Debug, Clone)]
pub struct Learner {
    config: LearnerConfig,
    grid: LearningRateGrid,
    ids: Vec<ExpertId>,
    index: HashMap<ExpertId, usize>,
    /// Row-major stored weights `w'`, one row per id in `ids`.
    weights: Vec<f64>,
    seen: HashSet<ExpertId>,
    removed: HashSet<ExpertId>,
    ledger: PenaltyLedger,
    round: usize,
    total_weight: f64,
    floor: f64,
    weight_decreases: usize,
    pending: Option<Pending>,
}

impl Learner {
    pub fn new(config: LearnerConfig, experts: &[ExpertId]) -> Result<Self> {
        if experts.is_empty() {
            return Err(OomdError::EmptyExpertSet);
        }
        let mut grid = LearningRateGrid::new(config.horizon, config.grid_size)?;
        if let Some(cap) = config.max_eta {
            grid = grid.truncated(cap);
        }
        let m = grid.len();
        let ledger = PenaltyLedger::new(m, config.threshold, config.initial_threshold)
            .with_permanent_exclusion(config.permanent_exclusion);
        let mut learner = Self {
            config,
            grid,
            ids: Vec::new(),
            index: HashMap::new(),
            weights: Vec::new(),
            seen: HashSet::new(),
            removed: HashSet::new(),
            ledger,
            round: 0,
            total_weight: 0.0,
            floor: 0.0,
            weight_decreases: 0,
            pending: None,
        };
        for &id in experts {
            learner.insert_expert(id)?;
        }
        if learner.config.pool == PoolMode::Fixed {
            let total = compensated_sum(learner.weights.iter().copied());
            for w in &mut learner.weights {
                *w /= total;
            }
            let k = experts.len() as f64;
            let t = learner.config.horizon as f64;
            learner.floor = 1.0 / (k * m as f64 * t.powi(3));
        }
        learner.total_weight = compensated_sum(learner.weights.iter().copied());
        Ok(learner)
    }

    fn insert_expert(&mut self, id: ExpertId) -> Result<()> {
        if self.removed.contains(&id) {
            return Err(OomdError::ReusedExpertId(id));
        }
        if self.index.contains_key(&id) {
            return Err(OomdError::DuplicateExpert(id));
        }
        self.index.insert(id, self.ids.len());
        self.ids.push(id);
        self.seen.insert(id);
        self.weights.extend(self.grid.etas().iter().map(|e| e * e));
        Ok(())
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }

    pub fn grid(&self) -> &LearningRateGrid {
        &self.grid
    }

    pub fn ledger(&self) -> &PenaltyLedger {
        &self.ledger
    }

    /// Completed rounds.
    pub fn round(&self) -> usize {
        self.round
    }

    /// `W_t` of the most recent round (or of the initial weights).
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// Floor used in the most recent round.
    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// Rounds in which `W_t` fell below `W_{t-1}` by more than rounding.
    pub fn weight_decreases(&self) -> usize {
        self.weight_decreases
    }

    pub fn experts(&self) -> &[ExpertId] {
        &self.ids
    }

    /// Stored weights `w'` of all currently held experts.
    pub fn stored_weights(&self) -> WeightMatrix {
        WeightMatrix::new(self.ids.clone(), self.grid.len(), self.weights.clone())
            .expect("stored weights are consistent")
    }

    /// Total stored weight `sum_j w'(i,j)` of every held expert.
    pub fn row_masses(&self) -> Vec<(ExpertId, f64)> {
        let m = self.grid.len();
        self.ids
            .iter()
            .enumerate()
            .map(|(r, &id)| (id, compensated_sum(self.weights[r * m..(r + 1) * m].iter().copied())))
            .collect()
    }

    /// Active set the next round would use.
    pub fn active_set(&self) -> ActiveSet {
        if self.config.safeguard_enabled {
            self.ledger.active_set()
        } else {
            ActiveSet::full(self.grid.len())
        }
    }

    /// Largest learning rate in `active`.
    pub fn max_active_eta(&self, active: &ActiveSet) -> f64 {
        active
            .members()
            .map(|c| self.grid.eta(c))
            .fold(0.0, f64::max)
    }

    fn rows_for(&mut self, experts: &[ExpertId]) -> Result<Vec<usize>> {
        let mut uniq = HashSet::with_capacity(experts.len());
        for &id in experts {
            if !uniq.insert(id) {
                return Err(OomdError::DuplicateExpert(id));
            }
        }
        match self.config.pool {
            PoolMode::Fixed => {
                if experts != self.ids.as_slice() {
                    return Err(OomdError::Config(
                        "a fixed pool must present the same experts every round".into(),
                    ));
                }
                Ok((0..experts.len()).collect())
            }
            PoolMode::Dynamic => {
                let mut rows = Vec::with_capacity(experts.len());
                for &id in experts {
                    if !self.index.contains_key(&id) {
                        self.insert_expert(id)?;
                    }
                    rows.push(self.index[&id]);
                }
                Ok(rows)
            }
        }
    }

    fn effective_prediction<'a>(&self, m: &'a [f64], zeros: &'a [f64]) -> &'a [f64] {
        if self.config.optimism_enabled {
            m
        } else {
            zeros
        }
    }

    /// Removes experts from a dynamic pool. Returns the removed stored mass.
    pub fn remove_experts(&mut self, ids: &[ExpertId]) -> Result<f64> {
        if self.config.pool != PoolMode::Dynamic {
            return Err(OomdError::Config("experts can only be removed from a dynamic pool".into()));
        }
        if self.pending.is_some() {
            return Err(OomdError::Protocol("cannot remove experts mid-round"));
        }
        for id in ids {
            if !self.index.contains_key(id) {
                return Err(OomdError::UnknownExpert(*id));
            }
        }
        let drop: HashSet<ExpertId> = ids.iter().copied().collect();
        if drop.len() >= self.ids.len() {
            return Err(OomdError::EmptyExpertSet);
        }
        let m = self.grid.len();
        let mut removed_mass = 0.0;
        let mut ids_new = Vec::with_capacity(self.ids.len() - drop.len());
        let mut weights_new = Vec::with_capacity(ids_new.capacity() * m);
        for (r, &id) in self.ids.iter().enumerate() {
            let row = &self.weights[r * m..(r + 1) * m];
            if drop.contains(&id) {
                removed_mass += compensated_sum(row.iter().copied());
                self.removed.insert(id);
            } else {
                ids_new.push(id);
                weights_new.extend_from_slice(row);
            }
        }
        self.ids = ids_new;
        self.weights = weights_new;
        self.index = self.ids.iter().enumerate().map(|(r, &id)| (id, r)).collect();
        if removed_mass > self.total_weight * 1e-6 {
            log::warn!(
                "removing {} experts drops {removed_mass:.3e} of W = {:.3e}; total weight may decrease",
                ids.len(),
                self.total_weight
            );
        }
        Ok(removed_mass)
    }
}

impl OnlineLearner for Learner {
    fn begin_round(&mut self, experts: &[ExpertId], prediction: &[f64]) -> Result<RoundOutput> {
        if self.pending.is_some() {
            return Err(OomdError::Protocol("begin_round called twice"));
        }
        if experts.is_empty() {
            return Err(OomdError::EmptyExpertSet);
        }
        if prediction.len() != experts.len() {
            return Err(OomdError::DimensionMismatch("prediction length".into()));
        }
        if prediction.iter().any(|v| !v.is_finite()) {
            return Err(OomdError::NonFinite("prediction"));
        }
        let rows = self.rows_for(experts)?;
        let m = self.grid.len();

        let mut prior_data = Vec::with_capacity(rows.len() * m);
        for &r in &rows {
            prior_data.extend_from_slice(&self.weights[r * m..(r + 1) * m]);
        }
        let total = compensated_sum(prior_data.iter().copied());
        if self.round > 0 && total < self.total_weight * (1.0 - 1e-12) {
            self.weight_decreases += 1;
            log::warn!(
                "total weight decreased from {:.6e} to {:.6e}",
                self.total_weight,
                total
            );
        }
        for v in &mut prior_data {
            *v = (*v / total).max(WEIGHT_FLOOR);
        }
        let prior = WeightMatrix::new(experts.to_vec(), m, prior_data)?;

        let floor = match self.config.pool {
            PoolMode::Fixed => self.floor,
            PoolMode::Dynamic => {
                let t = self.config.horizon as f64;
                1.0 / (64.0 * total * t.powi(self.config.dynamic_floor_exponent))
            }
        };
        let active = self.active_set();

        let zeros = vec![0.0; experts.len()];
        let m_used = self.effective_prediction(prediction, &zeros);
        let mut cost = Vec::with_capacity(experts.len() * m);
        for &mi in m_used {
            cost.extend(std::iter::repeat(mi).take(m));
        }
        let optimistic = solve_truncated_omd(&OmdProblem {
            prior: &prior,
            cost: &cost,
            active: &active,
            floor,
            eta: self.grid.etas(),
        })?;

        let mut marginal: Vec<f64> = (0..experts.len())
            .map(|r| compensated_sum(active.members().map(|c| optimistic.get(r, c))))
            .collect();
        let z = compensated_sum(marginal.iter().copied());
        for p in &mut marginal {
            *p /= z;
        }

        self.total_weight = total;
        self.floor = floor;
        self.pending = Some(Pending {
            experts: experts.to_vec(),
            rows,
            prior,
            active: active.clone(),
            floor,
            total_weight: total,
            optimistic: optimistic.clone(),
        });
        Ok(RoundOutput {
            experts: experts.to_vec(),
            prediction: marginal,
            optimistic_weights: optimistic,
            active,
            floor,
        })
    }

    fn end_round(&mut self, loss: &[f64], prediction: &[f64]) -> Result<()> {
        let pending = self
            .pending
            .take()
            .ok_or(OomdError::Protocol("end_round without begin_round"))?;
        let k = pending.experts.len();
        if loss.len() != k || prediction.len() != k {
            self.pending = Some(pending);
            return Err(OomdError::DimensionMismatch("loss/prediction length".into()));
        }
        if loss.iter().chain(prediction).any(|v| !v.is_finite()) {
            self.pending = Some(pending);
            return Err(OomdError::NonFinite("loss"));
        }
        let m = self.grid.len();
        let zeros = vec![0.0; k];
        let m_used = self.effective_prediction(prediction, &zeros).to_vec();

        let etas = self.grid.etas();
        let mut cost = Vec::with_capacity(k * m);
        for (l, mi) in loss.iter().zip(&m_used) {
            let r = l - mi;
            cost.extend(etas.iter().map(|e| l + 32.0 * e * r * r));
        }
        let next = solve_truncated_omd(&OmdProblem {
            prior: &pending.prior,
            cost: &cost,
            active: &pending.active,
            floor: pending.floor,
            eta: etas,
        })?;

        for (row_in_round, &r) in pending.rows.iter().enumerate() {
            let src = next.row(row_in_round);
            let dst = &mut self.weights[r * m..(r + 1) * m];
            for (d, s) in dst.iter_mut().zip(src) {
                *d = (pending.total_weight * s).max(WEIGHT_FLOOR);
            }
        }

        let residual = ResidualVector::from_loss(&pending.experts, loss, &m_used)?;
        if self.config.safeguard_enabled {
            self.ledger
                .update_penalties(&pending.optimistic, &residual, self.grid.etas())?;
        }
        self.ledger.update_threshold(&residual);
        self.round += 1;
        Ok(())
    }
}
