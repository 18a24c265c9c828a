//! Seeded loss streams.
//!
//! Experts are points on a circle and the concept `theta_t` is an angle; an
//! expert's loss is its circular distance to the concept divided by 180, so
//! losses lie in `[0, 1]`. Drift moves the concept.
//!
//! Random draws come from `ChaCha8Rng::seed_from_u64(seed)` with the stream
//! number set to the scenario index, in this order:
//!
//! * abrupt: `theta_1`, then one fresh angle at every round `1 + k * period`;
//! * incremental: `theta_1` only;
//! * corruption: per round, a coin `u < prob`, followed by an angle if the
//!   coin came up;
//! * adversarial: no draws.
//!
//! Angles are `gen_range(0.0..360.0)` and coins are `gen::<f64>()`. The
//! optional noise uses stream `16 + scenario index`, one `gen::<f64>()` per
//! loss entry in row-major order.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{OomdError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    Abrupt,
    Incremental,
    Corruption,
    Adversarial,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::Abrupt,
        Scenario::Incremental,
        Scenario::Corruption,
        Scenario::Adversarial,
    ];

    /// The three drift scenarios, without the adversarial instance.
    pub const DRIFT: [Scenario; 3] = [Scenario::Abrupt, Scenario::Incremental, Scenario::Corruption];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Abrupt => "abrupt",
            Scenario::Incremental => "incremental",
            Scenario::Corruption => "corruption",
            Scenario::Adversarial => "adversarial",
        }
    }

    fn index(self) -> u64 {
        match self {
            Scenario::Abrupt => 0,
            Scenario::Incremental => 1,
            Scenario::Corruption => 2,
            Scenario::Adversarial => 3,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = OomdError;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|v| v.name() == s.trim())
            .ok_or_else(|| OomdError::Config(format!("unknown scenario `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftConfig {
    pub scenario: Scenario,
    pub experts: usize,
    pub horizon: usize,
    pub seed: u64,
    /// Rounds between concept changes (abrupt).
    pub drift_period: usize,
    /// Degrees per round (incremental).
    pub drift_rate: f64,
    pub corruption_prob: f64,
    /// Half-width of uniform noise added to each loss, then clamped to
    /// `[0, 1]`. Zero disables it.
    pub noise: f64,
}

impl DriftConfig {
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            experts: 100,
            horizon: 400,
            seed: 0,
            drift_period: 100,
            drift_rate: 1.0,
            corruption_prob: 0.1,
            noise: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.experts == 0 || self.horizon == 0 {
            return Err(OomdError::Config("experts and horizon must be positive".into()));
        }
        if self.drift_period == 0 {
            return Err(OomdError::Config("drift period must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.corruption_prob) {
            return Err(OomdError::Config("corruption probability outside [0, 1]".into()));
        }
        if !self.drift_rate.is_finite() || !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(OomdError::Config("drift rate and noise must be finite".into()));
        }
        Ok(())
    }
}

/// `angle(i) = 360 i / K` for `i = 0..K`.
pub fn expert_angles(k: usize) -> Vec<f64> {
    (0..k).map(|i| 360.0 * i as f64 / k as f64).collect()
}

/// Distance on the circle in degrees, in `[0, 180]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

pub fn angular_loss(theta: f64, angle: f64) -> f64 {
    circular_distance(theta, angle) / 180.0
}

/// Mean direction of `angles`, in `[0, 360)`. Returns `None` when the
/// resultant vanishes.
pub fn circular_mean(angles: &[f64]) -> Option<f64> {
    let (s, c) = angles.iter().fold((0.0, 0.0), |(s, c), a| {
        let r = a.to_radians();
        (s + r.sin(), c + r.cos())
    });
    if s.hypot(c) <= 1e-12 * angles.len().max(1) as f64 {
        return None;
    }
    Some(s.atan2(c).to_degrees().rem_euclid(360.0))
}

/// Theorem-style adversarial round: `l = (1, 0.5)`, `m = (0, 0.5)`.
pub fn adversarial_round(_t: usize) -> ([f64; 2], [f64; 2]) {
    ([1.0, 0.5], [0.0, 0.5])
}

/// A fully generated stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Stream {
    pub scenario: Scenario,
    pub seed: u64,
    /// Concept angle per round (zero for the adversarial instance).
    pub theta: Vec<f64>,
    /// `losses[t][i]`, rounds 0-based.
    pub losses: Vec<Vec<f64>>,
}

impl Stream {
    pub fn horizon(&self) -> usize {
        self.losses.len()
    }

    pub fn experts(&self) -> usize {
        self.losses.first().map_or(0, Vec::len)
    }

    /// Prediction fixed by the scenario, if any.
    pub fn fixed_prediction(&self) -> Option<Vec<f64>> {
        match self.scenario {
            Scenario::Adversarial => Some(adversarial_round(0).1.to_vec()),
            _ => None,
        }
    }

    /// Writes the stream as text: one `#` header line, then
    /// `t,theta,l_1,...,l_K` per round with 1-based `t`.
    pub fn export<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# oomd-stream v1 scenario={} experts={} horizon={} seed={}",
            self.scenario,
            self.experts(),
            self.horizon(),
            self.seed
        )?;
        for (t, (theta, row)) in self.theta.iter().zip(&self.losses).enumerate() {
            write!(out, "{},{:?}", t + 1, theta)?;
            for l in row {
                write!(out, ",{l:?}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn import<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let (_, header) = lines.next().ok_or(OomdError::StreamFormat {
            line: 1,
            msg: "empty input".into(),
        })?;
        let header = header?;
        let bad = |line: usize, msg: &str| OomdError::StreamFormat {
            line,
            msg: msg.to_string(),
        };
        let fields = header
            .strip_prefix("# oomd-stream v1")
            .ok_or_else(|| bad(1, "missing header"))?;
        let (mut scenario, mut experts, mut horizon, mut seed) = (None, None, None, None);
        for kv in fields.split_whitespace() {
            let (k, v) = kv.split_once('=').ok_or_else(|| bad(1, "malformed header field"))?;
            match k {
                "scenario" => scenario = Some(v.parse::<Scenario>().map_err(|_| bad(1, "unknown scenario"))?),
                "experts" => experts = v.parse::<usize>().ok(),
                "horizon" => horizon = v.parse::<usize>().ok(),
                "seed" => seed = v.parse::<u64>().ok(),
                _ => {}
            }
        }
        let (scenario, experts, horizon) = match (scenario, experts, horizon) {
            (Some(s), Some(k), Some(t)) => (s, k, t),
            _ => return Err(bad(1, "header needs scenario, experts and horizon")),
        };
        let mut theta = Vec::with_capacity(horizon);
        let mut losses = Vec::with_capacity(horizon);
        for (idx, line) in lines {
            let line = line?;
            let no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let t: usize = parts
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| bad(no, "bad round index"))?;
            if t != losses.len() + 1 {
                return Err(bad(no, "rounds out of order"));
            }
            let th: f64 = parts
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| bad(no, "bad angle"))?;
            let row = parts
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad(no, "bad loss entry"))?;
            if row.len() != experts {
                return Err(bad(no, "wrong number of losses"));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(bad(no, "non-finite loss"));
            }
            theta.push(th);
            losses.push(row);
        }
        if losses.len() != horizon {
            return Err(bad(horizon + 1, "stream shorter than its header"));
        }
        Ok(Self {
            scenario,
            seed: seed.unwrap_or(0),
            theta,
            losses,
        })
    }
}

/// Concept trajectory `theta_1..theta_T` for a drift scenario.
pub fn concept_trajectory(cfg: &DriftConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(cfg.scenario.index());
    let t_max = cfg.horizon;
    let theta = match cfg.scenario {
        Scenario::Abrupt => {
            let mut out = Vec::with_capacity(t_max);
            let mut cur = 0.0;
            for t in 0..t_max {
                if t % cfg.drift_period == 0 {
                    cur = rng.gen_range(0.0..360.0);
                }
                out.push(cur);
            }
            out
        }
        Scenario::Incremental => {
            let start: f64 = rng.gen_range(0.0..360.0);
            (0..t_max)
                .map(|t| (start + cfg.drift_rate * t as f64).rem_euclid(360.0))
                .collect()
        }
        Scenario::Corruption => (0..t_max)
            .map(|_| {
                if rng.gen::<f64>() < cfg.corruption_prob {
                    rng.gen_range(0.0..360.0)
                } else {
                    0.0
                }
            })
            .collect(),
        Scenario::Adversarial => vec![0.0; t_max],
    };
    Ok(theta)
}

/// Generates the whole stream. The adversarial scenario always has two
/// experts and ignores `cfg.experts`.
pub fn generate(cfg: &DriftConfig) -> Result<Stream> {
    let theta = concept_trajectory(cfg)?;
    let mut losses: Vec<Vec<f64>> = match cfg.scenario {
        Scenario::Adversarial => (1..=cfg.horizon)
            .map(|t| adversarial_round(t).0.to_vec())
            .collect(),
        _ => {
            let angles = expert_angles(cfg.experts);
            theta
                .iter()
                .map(|&th| angles.iter().map(|&a| angular_loss(th, a)).collect())
                .collect()
        }
    };
    if cfg.noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(16 + cfg.scenario.index());
        for row in &mut losses {
            for l in row.iter_mut() {
                let u: f64 = rng.gen();
                *l = (*l + cfg.noise * (2.0 * u - 1.0)).clamp(0.0, 1.0);
            }
        }
    }
    Ok(Stream {
        scenario: cfg.scenario,
        seed: cfg.seed,
        theta,
        losses,
    })
}

/// Schedule for the growing expert pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolSchedule {
    pub chunk_len: usize,
    pub max_pool: usize,
}

impl Default for PoolSchedule {
    fn default() -> Self {
        Self {
            chunk_len: 10,
            max_pool: 100,
        }
    }
}

impl PoolSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.chunk_len == 0 || self.max_pool < 2 {
            return Err(OomdError::Config("need chunk_len >= 1 and max_pool >= 2".into()));
        }
        Ok(())
    }
}

/// Window, in chunks, of the expert created once `chunk_count = k 2^n`
/// chunks (k odd) are complete: `2^(n+1)`, or `2^n` when `k = 1`.
pub fn window_chunks(chunk_count: usize) -> Result<usize> {
    if chunk_count == 0 {
        return Err(OomdError::Config("chunk count must be positive".into()));
    }
    let n = chunk_count.trailing_zeros();
    let k = chunk_count >> n;
    Ok(if k == 1 { 1 << n } else { 1 << (n + 1) })
}

/// Windows of the experts created at chunk boundaries `1..=chunk_count`.
pub fn pool_schedule_events(schedule: &PoolSchedule, chunk_count: usize) -> Result<Vec<usize>> {
    schedule.validate()?;
    (1..=chunk_count).map(window_chunks).collect()
}

/// Angle of an expert trained on the `window` chunks ending after round
/// `end` (exclusive, 0-based): the circular mean of the concept over those
/// rounds. Falls back to the most recent concept when the mean is undefined.
pub fn trained_angle(theta: &[f64], end: usize, window_rounds: usize) -> f64 {
    let start = end.saturating_sub(window_rounds);
    let slice = &theta[start..end];
    circular_mean(slice).unwrap_or_else(|| slice.last().copied().unwrap_or(0.0))
}
