//! Multi-trial experiment runner.
//!
//! Trials run on a rayon pool (capped by `OMS_THREADS` when set) and are
//! written in `(variant, trial)` order regardless of scheduling. Every trial
//! is checked for feasibility of the played distributions and, when all
//! residuals stay within `[-1, 1]`, for bounded penalties.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{make_variant, Variant, VariantSpec};
use crate::clip::ClippedLearner;
use crate::env::{
    angular_loss, generate, trained_angle, window_chunks, DriftConfig, PoolSchedule, Scenario,
    Stream,
};
use crate::error::{OomdError, Result};
use crate::learner::{Learner, LearnerConfig, OnlineLearner};
use crate::metrics::{
    adaptation_lag, mean, median, per_round, scenario_partition, segment_comparators, stddev,
    stderr, RoundRecord, LAG_DELTA, LAG_WINDOW,
};
use crate::optimism::{FixedOptimism, Optimism};
use crate::ExpertId;

/// Bound on each final penalty when residuals stay in `[-1, 1]`.
pub const PENALTY_BOUND: f64 = 2.1;
/// Tolerance on the total mass of a played distribution.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "OMS_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub variants: Vec<Variant>,
    pub trials: usize,
    pub horizon: usize,
    pub experts: usize,
    /// Grid size; `None` means 40, or `ceil(log2 T^2)` on the adversarial
    /// instance.
    pub m_override: Option<usize>,
    pub seed_base: u64,
    pub out_path: Option<PathBuf>,
    pub dynamic_pool: bool,
    /// Record per-round wall time. Off keeps output byte-reproducible.
    pub timing: bool,
    pub drift_period: usize,
    pub drift_rate: f64,
    pub corruption_prob: f64,
    pub noise: f64,
    pub pool: PoolSchedule,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::Abrupt,
            variants: vec![Variant::Proposed, Variant::Msmwc],
            trials: 50,
            horizon: 400,
            experts: 100,
            m_override: None,
            seed_base: 0,
            out_path: None,
            dynamic_pool: false,
            timing: false,
            drift_period: 100,
            drift_rate: 1.0,
            corruption_prob: 0.1,
            noise: 0.0,
            pool: PoolSchedule::default(),
            threads: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(OomdError::Config("trials must be at least 1".into()));
        }
        if self.variants.is_empty() {
            return Err(OomdError::Config("no variants selected".into()));
        }
        if self.horizon < 2 {
            return Err(OomdError::HorizonTooShort(self.horizon));
        }
        if self.dynamic_pool && self.scenario == Scenario::Adversarial {
            return Err(OomdError::Config(
                "the dynamic pool needs a drift scenario".into(),
            ));
        }
        self.pool.validate()?;
        self.drift(0).validate()
    }

    pub fn drift(&self, trial: u64) -> DriftConfig {
        DriftConfig {
            scenario: self.scenario,
            experts: self.experts,
            horizon: self.horizon,
            seed: self.seed_base.wrapping_add(trial),
            drift_period: self.drift_period,
            drift_rate: self.drift_rate,
            corruption_prob: self.corruption_prob,
            noise: self.noise,
        }
    }

    pub fn grid_size(&self) -> Option<usize> {
        match (self.m_override, self.scenario) {
            (Some(m), _) => Some(m),
            (None, Scenario::Adversarial) => None,
            (None, _) => Some(40),
        }
    }

    pub fn learner_config(&self) -> LearnerConfig {
        let base = if self.dynamic_pool {
            LearnerConfig::dynamic(self.horizon)
        } else {
            LearnerConfig::new(self.horizon)
        };
        base.with_grid_size(self.grid_size())
    }
}

/// Everything measured in one trial of one variant.
#[derive(Debug, Clone)]
pub struct TrialResult {
    pub trial: u64,
    pub variant: Variant,
    pub records: Vec<RoundRecord>,
    /// `L_{T+1}(j)` for every grid point.
    pub final_penalties: Vec<f64>,
    pub grid_len: usize,
    /// Rounds whose played distribution broke a feasibility invariant.
    pub feasibility_violations: usize,
    /// Largest `||l_t - m_t||_inf` seen.
    pub max_residual: f64,
    /// Rounds in which `W_t` decreased.
    pub weight_decreases: usize,
    pub max_pool: usize,
    pub reused_ids: usize,
    pub restarts: usize,
    /// Committed clipping range after each round.
    pub clip_scale: Vec<f64>,
}

impl TrialResult {
    pub fn cum_loss(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.cum_loss)
    }

    pub fn regret(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.regret)
    }

    pub fn penalty_violations(&self) -> usize {
        if self.max_residual > 1.0 + 1e-12 {
            return 0;
        }
        let per = self
            .final_penalties
            .iter()
            .filter(|&&l| l > PENALTY_BOUND)
            .count();
        let total: f64 = self.final_penalties.iter().sum();
        per + usize::from(total > PENALTY_BOUND * self.grid_len as f64)
    }

    /// Mean adaptation lag over concept changes at multiples of `period`,
    /// each measured up to the next change.
    pub fn mean_lag(&self, period: usize) -> f64 {
        let inst: Vec<f64> = self.records.iter().map(|r| r.inst_loss).collect();
        let best: Vec<f64> = self.records.iter().map(|r| r.best_inst_loss).collect();
        let lags: Vec<f64> = (period..inst.len())
            .step_by(period.max(1))
            .map(|d| {
                let end = (d + period).min(inst.len());
                adaptation_lag(&inst[..end], &best[..end], d, LAG_DELTA, LAG_WINDOW) as f64
            })
            .collect();
        mean(&lags)
    }

    /// Fraction of rounds with an active learning rate of at least `eta`.
    pub fn fraction_eta_at_least(&self, eta: f64) -> f64 {
        let n = self.records.iter().filter(|r| r.max_active_eta >= eta).count();
        n as f64 / self.records.len().max(1) as f64
    }
}

type Factory = Box<dyn FnMut(f64, &[ExpertId]) -> Result<Learner> + Send>;
type Wrapped = ClippedLearner<Learner, Factory>;

fn build(spec: VariantSpec, experts: &[ExpertId], horizon: usize) -> Result<Wrapped> {
    let factory: Factory = Box::new(move |_, e: &[ExpertId]| make_variant(&spec, e));
    let t = horizon as f64;
    ClippedLearner::new(factory, experts, t, t, false)
}

fn optimism_for(variant: Variant, stream: &Stream) -> Box<dyn Optimism> {
    match stream.fixed_prediction() {
        Some(m) if variant.uses_optimism() => Box::new(FixedOptimism::new(m)),
        _ => variant.optimism(),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Tracker {
    cum_loss: f64,
    cum_comparator: f64,
    violations: usize,
    max_residual: f64,
    records: Vec<RoundRecord>,
    clip_scale: Vec<f64>,
}

impl Tracker {
    fn new(horizon: usize) -> Self {
        Self {
            cum_loss: 0.0,
            cum_comparator: 0.0,
            violations: 0,
            max_residual: 0.0,
            records: Vec::with_capacity(horizon),
            clip_scale: Vec::with_capacity(horizon),
        }
    }
}

/// Plays one round and appends its record.
#[allow(clippy::too_many_arguments)]
fn play_round(
    learner: &mut Wrapped,
    optimism: &mut dyn Optimism,
    experts: &[ExpertId],
    loss: &[f64],
    comparator_loss: f64,
    round: usize,
    ctx: (&str, &str, u64, bool),
    tr: &mut Tracker,
) -> Result<()> {
    let (variant, scenario, trial, timing) = ctx;
    let start = Instant::now();
    let decision = optimism.predict(experts);
    let out = learner.begin_round(experts, &decision)?;
    let p = &out.prediction;
    let full = optimism.finalize(experts, loss, p)?;
    learner.end_round(loss, &full)?;
    let elapsed = start.elapsed().as_micros() as u64;

    let mass: f64 = p.iter().sum();
    if out.feasibility_violations() > 0 || (mass - 1.0).abs() > MASS_TOLERANCE {
        tr.violations += 1;
    }
    let residual = loss
        .iter()
        .zip(&full)
        .fold(0.0f64, |a, (l, m)| a.max((l - m).abs()));
    tr.max_residual = tr.max_residual.max(residual);
    let inst = dot(loss, p);
    tr.cum_loss += inst;
    tr.cum_comparator += comparator_loss;
    let inner = learner.inner();
    tr.records.push(RoundRecord {
        trial,
        round: round as i64 + 1,
        variant: variant.to_string(),
        scenario: scenario.to_string(),
        inst_loss: inst,
        cum_loss: tr.cum_loss,
        best_inst_loss: loss.iter().cloned().fold(f64::INFINITY, f64::min),
        regret: tr.cum_loss - tr.cum_comparator,
        max_active_eta: inner.max_active_eta(&out.active),
        num_active: out.active.len(),
        sum_penalty: inner.ledger().total(),
        elapsed_us: if timing { elapsed } else { 0 },
    });
    tr.clip_scale.push(learner.state().scale());
    Ok(())
}

fn finish(
    trial: u64,
    variant: Variant,
    learner: &Wrapped,
    tr: Tracker,
    max_pool: usize,
    reused_ids: usize,
) -> TrialResult {
    let inner = learner.inner();
    TrialResult {
        trial,
        variant,
        records: tr.records,
        final_penalties: inner.ledger().penalties().to_vec(),
        grid_len: inner.grid().len(),
        feasibility_violations: tr.violations,
        max_residual: tr.max_residual,
        weight_decreases: inner.weight_decreases(),
        max_pool,
        reused_ids,
        restarts: learner.state().restarts(),
        clip_scale: tr.clip_scale,
    }
}

/// Runs one variant over a fixed-pool stream. Regret is measured against
/// the scenario's natural comparator segments.
pub fn run_on_stream(
    cfg: &RunConfig,
    variant: Variant,
    trial: u64,
    stream: &Stream,
) -> Result<TrialResult> {
    let k = stream.experts();
    let experts: Vec<ExpertId> = (0..k as u64).map(ExpertId).collect();
    let spec = VariantSpec::new(variant, cfg.learner_config());
    let horizon = stream.horizon();
    let mut learner = build(spec, &experts, cfg.horizon)?;
    let mut optimism = optimism_for(variant, stream);
    let segments = scenario_partition(stream.scenario, horizon, cfg.drift_period);
    let comps = per_round(&segments, &segment_comparators(&stream.losses, &segments)?);
    let mut tr = Tracker::new(horizon);
    let name = variant.name();
    let scen = stream.scenario.name();
    for (t, loss) in stream.losses.iter().enumerate() {
        play_round(
            &mut learner,
            optimism.as_mut(),
            &experts,
            loss,
            loss[comps[t]],
            t,
            (name, scen, trial, cfg.timing),
            &mut tr,
        )?;
    }
    Ok(finish(trial, variant, &learner, tr, k, 0))
}

/// Runs one variant with the growing expert pool: one expert is trained per
/// completed chunk, and the expert holding the least stored weight is
/// pruned whenever the pool would exceed its cap. The pool starts with one
/// untrained expert at angle zero. Regret is measured against the best
/// expert available in each round.
pub fn run_dynamic_pool(cfg: &RunConfig, variant: Variant, trial: u64) -> Result<TrialResult> {
    let drift = cfg.drift(trial);
    let stream = generate(&drift)?;
    let theta = &stream.theta;
    let schedule = cfg.pool;
    let mut pool: Vec<(ExpertId, f64)> = vec![(ExpertId(0), 0.0)];
    let mut next_id = 1u64;
    let mut ever: HashSet<ExpertId> = HashSet::from([ExpertId(0)]);
    let mut reused = 0;
    let mut max_pool = 1;
    let spec = VariantSpec::new(variant, cfg.learner_config());
    let ids: Vec<ExpertId> = pool.iter().map(|e| e.0).collect();
    let mut learner = build(spec, &ids, cfg.horizon)?;
    let mut optimism = variant.optimism();
    let mut tr = Tracker::new(cfg.horizon);
    let name = variant.name();
    let scen = stream.scenario.name();
    for t in 0..cfg.horizon {
        let ids: Vec<ExpertId> = pool.iter().map(|e| e.0).collect();
        let loss: Vec<f64> = pool.iter().map(|e| angular_loss(theta[t], e.1)).collect();
        let best = loss.iter().cloned().fold(f64::INFINITY, f64::min);
        play_round(
            &mut learner,
            optimism.as_mut(),
            &ids,
            &loss,
            best,
            t,
            (name, scen, trial, cfg.timing),
            &mut tr,
        )?;
        let done = t + 1;
        if done % schedule.chunk_len != 0 || done == cfg.horizon {
            continue;
        }
        let chunks = done / schedule.chunk_len;
        let window = window_chunks(chunks)? * schedule.chunk_len;
        let id = ExpertId(next_id);
        next_id += 1;
        if !ever.insert(id) {
            reused += 1;
        }
        if pool.len() + 1 > schedule.max_pool {
            let masses = learner.inner().row_masses();
            let victim = masses
                .iter()
                .filter(|(i, _)| pool.iter().any(|e| e.0 == *i))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                .map(|e| e.0)
                .ok_or(OomdError::EmptyExpertSet)?;
            learner.inner_mut().remove_experts(&[victim])?;
            pool.retain(|e| e.0 != victim);
        }
        pool.push((id, trained_angle(theta, done, window)));
        max_pool = max_pool.max(pool.len());
    }
    Ok(finish(trial, variant, &learner, tr, max_pool, reused))
}

pub fn run_trial(cfg: &RunConfig, variant: Variant, trial: u64) -> Result<TrialResult> {
    if cfg.dynamic_pool {
        run_dynamic_pool(cfg, variant, trial)
    } else {
        run_on_stream(cfg, variant, trial, &generate(&cfg.drift(trial))?)
    }
}

fn thread_pool(requested: Option<usize>) -> Result<rayon::ThreadPool> {
    let env_cap = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0);
    let n = match (requested, env_cap) {
        (Some(r), Some(c)) => r.min(c),
        (Some(r), None) => r,
        (None, Some(c)) => c,
        (None, None) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| OomdError::Config(format!("thread pool: {e}")))
}

/// Runs `work` over `items` on the configured pool, keeping input order.
fn parallel<T, R, F>(threads: Option<usize>, items: &[T], work: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    let pool = thread_pool(threads)?;
    pool.install(|| items.par_iter().map(&work).collect())
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    /// Trials ordered by variant (as configured), then trial index.
    pub trials: Vec<TrialResult>,
    /// One summary row per variant.
    pub summaries: Vec<RoundRecord>,
}

impl RunOutput {
    pub fn of(&self, variant: Variant) -> impl Iterator<Item = &TrialResult> {
        self.trials.iter().filter(move |t| t.variant == variant)
    }

    /// Counts of broken invariants over all trials: infeasible rounds,
    /// penalty bound violations, total-weight decreases (dynamic pool only),
    /// oversized pools and reused ids.
    pub fn invariant_report(&self, cfg: &RunConfig) -> Vec<(&'static str, usize)> {
        let sum = |f: &dyn Fn(&TrialResult) -> usize| self.trials.iter().map(f).sum::<usize>();
        let mut out = vec![
            ("infeasible rounds", sum(&|t| t.feasibility_violations)),
            ("penalty bound", sum(&|t| t.penalty_violations())),
        ];
        if cfg.dynamic_pool {
            out.push(("total weight decreases", sum(&|t| t.weight_decreases)));
            out.push((
                "pool over cap",
                sum(&|t| usize::from(t.max_pool > cfg.pool.max_pool)),
            ));
            out.push(("reused ids", sum(&|t| t.reused_ids)));
        }
        out
    }

    pub fn check_invariants(&self, cfg: &RunConfig) -> Result<()> {
        let bad: Vec<String> = self
            .invariant_report(cfg)
            .into_iter()
            .filter(|(_, n)| *n > 0)
            .map(|(what, n)| format!("{what}: {n}"))
            .collect();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(OomdError::Invariant(bad.join(", ")))
        }
    }
}

pub fn summarize(variant: Variant, scenario: Scenario, trials: &[&TrialResult]) -> RoundRecord {
    let last = |f: &dyn Fn(&RoundRecord) -> f64| -> Vec<f64> {
        trials
            .iter()
            .filter_map(|t| t.records.last())
            .map(f)
            .collect()
    };
    let cum = last(&|r| r.cum_loss);
    let reg = last(&|r| r.regret);
    let rounds: usize = trials.iter().map(|t| t.records.len()).sum();
    let micros: u64 = trials
        .iter()
        .flat_map(|t| &t.records)
        .map(|r| r.elapsed_us)
        .sum();
    RoundRecord {
        trial: trials.len() as u64,
        round: -1,
        variant: variant.name().to_string(),
        scenario: scenario.name().to_string(),
        inst_loss: stderr(&cum),
        cum_loss: mean(&cum),
        best_inst_loss: stderr(&reg),
        regret: mean(&reg),
        max_active_eta: mean(&last(&|r| r.max_active_eta)),
        num_active: mean(&last(&|r| r.num_active as f64)).round() as usize,
        sum_penalty: mean(&last(&|r| r.sum_penalty)),
        elapsed_us: if rounds == 0 { 0 } else { micros / rounds as u64 },
    }
}

/// Runs every configured trial, checks invariants and writes the CSV if an
/// output path is set. Invariant failures are returned as errors after the
/// CSV has been written.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    let out = run_unchecked(cfg)?;
    if let Some(path) = &cfg.out_path {
        write_records(path, out.trials.iter().flat_map(|t| &t.records).chain(&out.summaries))?;
    }
    out.check_invariants(cfg)?;
    Ok(out)
}

/// Runs every trial without checking invariants or writing output.
pub fn run_unchecked(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let jobs: Vec<(Variant, u64)> = cfg
        .variants
        .iter()
        .flat_map(|&v| (0..cfg.trials as u64).map(move |t| (v, t)))
        .collect();
    let trials = parallel(cfg.threads, &jobs, |&(v, t)| run_trial(cfg, v, t))?;
    let summaries = cfg
        .variants
        .iter()
        .map(|&v| {
            let ts: Vec<&TrialResult> = trials.iter().filter(|t| t.variant == v).collect();
            summarize(v, cfg.scenario, &ts)
        })
        .collect();
    Ok(RunOutput { trials, summaries })
}

/// Replays an imported stream with every configured variant.
pub fn replay(cfg: &RunConfig, stream: &Stream) -> Result<RunOutput> {
    let mut cfg = cfg.clone();
    cfg.scenario = stream.scenario;
    cfg.horizon = stream.horizon();
    cfg.experts = stream.experts();
    cfg.trials = 1;
    cfg.dynamic_pool = false;
    cfg.validate()?;
    let trials = parallel(cfg.threads, &cfg.variants, |&v| {
        run_on_stream(&cfg, v, stream.seed, stream)
    })?;
    let summaries = trials
        .iter()
        .map(|t| summarize(t.variant, stream.scenario, &[t]))
        .collect();
    let out = RunOutput { trials, summaries };
    if let Some(path) = &cfg.out_path {
        write_records(path, out.trials.iter().flat_map(|t| &t.records).chain(&out.summaries))?;
    }
    out.check_invariants(&cfg)?;
    Ok(out)
}

/// Writes serializable rows to `path` through a temporary file in the same
/// directory, so a failed run never leaves a truncated CSV behind.
pub fn write_records<'a, T, I>(path: &Path, rows: I) -> Result<()>
where
    T: Serialize + 'a,
    I: IntoIterator<Item = &'a T>,
{
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir)?;
    let tmp = tempfile::NamedTempFile::new_in(&dir)?;
    {
        let mut w = csv::Writer::from_writer(std::io::BufWriter::new(tmp.as_file()));
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| OomdError::Io(e.error))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub scenario: String,
    pub variant: String,
    pub m: usize,
    pub trials: usize,
    pub mean_cum_loss: f64,
    pub stddev_cum_loss: f64,
}

/// Mean and spread of the final cumulative loss for each grid size, per
/// scenario and variant.
pub fn sensitivity_sweep(
    cfg: &RunConfig,
    scenarios: &[Scenario],
    m_values: &[usize],
) -> Result<Vec<SweepRow>> {
    if m_values.is_empty() || scenarios.is_empty() {
        return Err(OomdError::Config("sweep needs grid sizes and scenarios".into()));
    }
    let mut rows = Vec::new();
    for &scenario in scenarios {
        for &m in m_values {
            let mut c = cfg.clone();
            c.scenario = scenario;
            c.m_override = Some(m);
            c.out_path = None;
            let out = run_unchecked(&c)?;
            out.check_invariants(&c)?;
            for &v in &c.variants {
                let cum: Vec<f64> = out.of(v).map(TrialResult::cum_loss).collect();
                rows.push(SweepRow {
                    scenario: scenario.name().to_string(),
                    variant: v.name().to_string(),
                    m,
                    trials: cum.len(),
                    mean_cum_loss: mean(&cum),
                    stddev_cum_loss: stddev(&cum),
                });
            }
        }
    }
    if let Some(path) = &cfg.out_path {
        write_records(path, &rows)?;
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub variant: String,
    pub experts: usize,
    pub m: usize,
    pub rounds: usize,
    pub median_us: f64,
    pub mean_us: f64,
}

/// Per-round wall time for each variant and expert count, measured
/// sequentially on the abrupt stream with `warmup` leading rounds dropped.
pub fn scaling_bench(
    cfg: &RunConfig,
    k_values: &[usize],
    m: usize,
    warmup: usize,
) -> Result<Vec<ScalingRow>> {
    if k_values.is_empty() || k_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(OomdError::Config("expert counts must be increasing".into()));
    }
    if warmup >= cfg.horizon {
        return Err(OomdError::Config("warmup must be shorter than the horizon".into()));
    }
    let mut rows = Vec::new();
    for &k in k_values {
        for &v in &cfg.variants {
            let mut c = cfg.clone();
            c.experts = k;
            c.m_override = Some(m);
            c.timing = true;
            c.dynamic_pool = false;
            let mut times = Vec::new();
            for trial in 0..cfg.trials as u64 {
                let stream = generate(&c.drift(trial))?;
                let res = run_on_stream(&c, v, trial, &stream)?;
                times.extend(res.records[warmup..].iter().map(|r| r.elapsed_us as f64));
            }
            rows.push(ScalingRow {
                variant: v.name().to_string(),
                experts: k,
                m,
                rounds: times.len(),
                median_us: median(&times),
                mean_us: mean(&times),
            });
        }
    }
    if let Some(path) = &cfg.out_path {
        write_records(path, &rows)?;
    }
    Ok(rows)
}

/// Writes a generated stream in the text exchange format.
pub fn export_stream(cfg: &DriftConfig, mut out: impl Write) -> Result<()> {
    generate(cfg)?.export(&mut out)?;
    out.flush()?;
    Ok(())
}
