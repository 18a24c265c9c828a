//! Evaluation quantities computed from completed runs.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::env::Scenario;
use crate::error::{OomdError, Result};

/// Default tolerance above the best expert's loss for adaptation lag.
pub const LAG_DELTA: f64 = 0.05;
/// Default number of consecutive rounds that must stay within tolerance.
pub const LAG_WINDOW: usize = 5;

/// One CSV row. Field order is the column order.
///
/// Summary rows have `round = -1`, `trial` set to the number of trials,
/// `cum_loss` and `regret` holding means of the final values, `inst_loss`
/// the standard error of the final cumulative loss, `best_inst_loss` the
/// standard error of the final regret, and `elapsed_us` the mean time per
/// round. The remaining columns hold means of their final values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub trial: u64,
    pub round: i64,
    pub variant: String,
    pub scenario: String,
    pub inst_loss: f64,
    pub cum_loss: f64,
    pub best_inst_loss: f64,
    pub regret: f64,
    pub max_active_eta: f64,
    pub num_active: usize,
    pub sum_penalty: f64,
    pub elapsed_us: u64,
}

impl RoundRecord {
    pub fn is_summary(&self) -> bool {
        self.round < 0
    }
}

/// Consecutive intervals covering `0..horizon`.
pub type Partition = Vec<Range<usize>>;

pub fn validate_partition(segments: &[Range<usize>], horizon: usize) -> Result<()> {
    let mut next = 0;
    for s in segments {
        if s.start != next || s.end <= s.start {
            return Err(OomdError::InvalidPartition(format!(
                "segment {s:?} does not continue at {next}"
            )));
        }
        next = s.end;
    }
    if next != horizon {
        return Err(OomdError::InvalidPartition(format!(
            "segments end at {next}, horizon is {horizon}"
        )));
    }
    Ok(())
}

/// Fixed-length segments, the last one possibly shorter.
pub fn uniform_partition(horizon: usize, len: usize) -> Partition {
    let len = len.max(1);
    (0..horizon)
        .step_by(len)
        .map(|s| s..(s + len).min(horizon))
        .collect()
}

/// Natural comparator segments for a scenario: one per drift period for
/// abrupt drift, one per round for incremental drift, a single segment
/// otherwise.
pub fn scenario_partition(scenario: Scenario, horizon: usize, drift_period: usize) -> Partition {
    match scenario {
        Scenario::Abrupt => uniform_partition(horizon, drift_period),
        Scenario::Incremental => uniform_partition(horizon, 1),
        Scenario::Corruption | Scenario::Adversarial => uniform_partition(horizon, horizon),
    }
}

/// Expert with the least summed loss in each segment; ties go to the lower
/// index.
pub fn segment_comparators(losses: &[Vec<f64>], segments: &[Range<usize>]) -> Result<Vec<usize>> {
    validate_partition(segments, losses.len())?;
    let k = losses.first().map_or(0, Vec::len);
    if k == 0 || losses.iter().any(|r| r.len() != k) {
        return Err(OomdError::DimensionMismatch("ragged or empty loss grid".into()));
    }
    Ok(segments
        .iter()
        .map(|seg| {
            let mut sums = vec![0.0; k];
            for row in &losses[seg.clone()] {
                for (s, l) in sums.iter_mut().zip(row) {
                    *s += l;
                }
            }
            let mut best = 0;
            for i in 1..k {
                if sums[i] < sums[best] {
                    best = i;
                }
            }
            best
        })
        .collect())
}

/// Expands per-segment comparators to one per round.
pub fn per_round(segments: &[Range<usize>], comparators: &[usize]) -> Vec<usize> {
    segments
        .iter()
        .zip(comparators)
        .flat_map(|(s, &c)| std::iter::repeat(c).take(s.len()))
        .collect()
}

/// `sum_t (<l_t, p_t> - l_t(u_t))` from the learner's per-round losses.
pub fn dynamic_regret(inst_loss: &[f64], losses: &[Vec<f64>], comparators: &[usize]) -> Result<f64> {
    if inst_loss.len() != losses.len() || comparators.len() != losses.len() {
        return Err(OomdError::DimensionMismatch(format!(
            "{} learner losses, {} loss rows, {} comparators",
            inst_loss.len(),
            losses.len(),
            comparators.len()
        )));
    }
    let mut acc = 0.0;
    for ((l, row), &u) in inst_loss.iter().zip(losses).zip(comparators) {
        let cl = row
            .get(u)
            .ok_or_else(|| OomdError::DimensionMismatch(format!("comparator {u} out of range")))?;
        acc += l - cl;
    }
    Ok(acc)
}

/// `sum_t ||u_t - u_{t-1}||_1` for point-mass comparators, with `u_0 = 0`.
pub fn path_length(comparators: &[usize]) -> f64 {
    if comparators.is_empty() {
        return 0.0;
    }
    let switches = comparators.windows(2).filter(|w| w[0] != w[1]).count();
    1.0 + 2.0 * switches as f64
}

/// Rounds after `drift` until the learner's loss stays within `delta` of
/// the best expert's for `window` consecutive rounds. `inst` and `best` are
/// per-round series ending where the measurement stops; if the condition is
/// never met the remaining length `inst.len() - drift` is returned.
pub fn adaptation_lag(inst: &[f64], best: &[f64], drift: usize, delta: f64, window: usize) -> usize {
    let n = inst.len().min(best.len());
    let remainder = n.saturating_sub(drift);
    let window = window.max(1);
    let ok: Vec<bool> = (drift..n).map(|t| inst[t] <= best[t] + delta).collect();
    let mut run = 0;
    for (i, &good) in ok.iter().enumerate() {
        run = if good { run + 1 } else { 0 };
        if run == window {
            return i + 1 - window;
        }
    }
    remainder
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation; zero for fewer than two values.
pub fn stddev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

pub fn stderr(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    stddev(xs) / (xs.len() as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
