//! Cross-workload calibration: quasi-random sweep, geometric-mean
//! shortlisting and multi-seed final selection by benchmark score.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{run_trial, runtime_fraction, TrialRecord, TrialSpec};
use crate::optim::{naive_config, scheduled_config, Algorithm, OptimizerConfig};
use crate::rng;
use crate::schedule::ScheduleSpec;
use crate::scoring::{benchmark_scores, geometric_mean_cost, ScoreReport, Time, TimeTable};
use crate::workloads::{RegularizerKnobs, Workload, WorkloadId};

const PRIMES: [u32; 10] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HyperParam {
    BaseLr,
    Warmup,
    WeightDecay,
    OneMinusBeta1,
    OneMinusBeta2,
    Dropout,
    LabelSmoothing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scale", rename_all = "snake_case")]
pub enum Scale {
    Log { lo: f64, hi: f64 },
    Discrete { values: Vec<f64> },
}

impl Scale {
    /// Maps `u ∈ [0, 1)` into the dimension.
    pub fn map(&self, u: f64) -> f64 {
        match self {
            Scale::Log { lo, hi } => (lo.ln() + u * (hi.ln() - lo.ln())).exp().clamp(*lo, *hi),
            Scale::Discrete { values } => {
                let i = ((u * values.len() as f64) as usize).min(values.len() - 1);
                values[i]
            }
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        match self {
            Scale::Log { lo, hi } => (*lo..=*hi).contains(&x),
            Scale::Discrete { values } => values.contains(&x),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Scale::Log { lo, hi } if *lo > 0.0 && lo < hi && hi.is_finite() => Ok(()),
            Scale::Discrete { values } if !values.is_empty() => Ok(()),
            other => Err(Error::InvalidConfig(format!("bad search dimension {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub param: HyperParam,
    #[serde(flatten)]
    pub scale: Scale,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpacePreset {
    /// Log-scale learning rate, decay and momenta plus discrete warmup and
    /// regularizers.
    #[default]
    Broad,
    /// Optimizer defaults kept; discrete grid over decay, regularizers and
    /// warmup only.
    Regularization,
}

impl FromStr for SpacePreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "broad" => Ok(SpacePreset::Broad),
            "regularization" => Ok(SpacePreset::Regularization),
            other => Err(Error::InvalidConfig(format!("unknown search space preset `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub dimensions: Vec<Dimension>,
}

impl SearchSpace {
    /// Active dimensions for `alg`. The base learning rate is searched only
    /// for the baselines; momentum dimensions only where the algorithm has
    /// the corresponding parameter.
    pub fn for_algorithm(alg: Algorithm) -> Self {
        Self::preset(alg, SpacePreset::Broad)
    }

    pub fn preset(alg: Algorithm, preset: SpacePreset) -> Self {
        let log = |param, lo, hi| Dimension { param, scale: Scale::Log { lo, hi } };
        let discrete = |param, values: &[f64]| Dimension {
            param,
            scale: Scale::Discrete { values: values.to_vec() },
        };
        let mut dims = Vec::new();
        match preset {
            SpacePreset::Broad => {
                if alg.tunes_base_lr() {
                    dims.push(log(HyperParam::BaseLr, 1e-4, 5e-2));
                }
                dims.push(discrete(HyperParam::Warmup, &[0.02, 0.05, 0.1]));
                dims.push(log(HyperParam::WeightDecay, 1e-5, 0.5));
                if alg.has_beta1() {
                    dims.push(log(HyperParam::OneMinusBeta1, 1e-3, 1.0));
                }
                if alg.has_beta2() {
                    dims.push(log(HyperParam::OneMinusBeta2, 1e-3, 1.0));
                }
                dims.push(discrete(HyperParam::Dropout, &[0.0, 0.1]));
                dims.push(discrete(HyperParam::LabelSmoothing, &[0.0, 0.2]));
            }
            SpacePreset::Regularization => {
                dims.push(discrete(
                    HyperParam::WeightDecay,
                    &[1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7],
                ));
                dims.push(discrete(HyperParam::Dropout, &[0.0, 0.1]));
                dims.push(discrete(HyperParam::LabelSmoothing, &[0.0, 0.1, 0.2]));
                dims.push(discrete(HyperParam::Warmup, &[0.02, 0.05, 0.1]));
            }
        }
        Self { dimensions: dims }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimensions.len() > PRIMES.len() {
            return Err(Error::InvalidConfig("too many search dimensions".into()));
        }
        self.dimensions.iter().try_for_each(|d| d.scale.validate())
    }

    pub fn has(&self, p: HyperParam) -> bool {
        self.dimensions.iter().any(|d| d.param == p)
    }
}

/// Radical inverse of `i` in base `b` (van der Corput).
pub fn radical_inverse(mut i: u64, b: u32) -> f64 {
    let b = u64::from(b);
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += (i % b) as f64 * f;
        i /= b;
        f *= inv;
    }
    out
}

/// One sampled configuration; inactive dimensions hold `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigPoint {
    pub index: usize,
    pub values: BTreeMap<HyperParam, f64>,
}

impl ConfigPoint {
    pub fn get(&self, p: HyperParam) -> Option<f64> {
        self.values.get(&p).copied()
    }

    /// The trial this point describes on `workload` at horizon `alpha`.
    pub fn trial_spec(&self, alg: Algorithm, alpha: f64, workload: &Workload, seed: u64) -> TrialSpec {
        let mut config = scheduled_config(alg);
        if let Some(lr) = self.get(HyperParam::BaseLr) {
            config.set_base_lr(lr);
        }
        if let Some(x) = self.get(HyperParam::OneMinusBeta1) {
            config.set_beta1(1.0 - x);
        }
        if let Some(x) = self.get(HyperParam::OneMinusBeta2) {
            config.set_beta2(1.0 - x);
        }
        let knobs = RegularizerKnobs {
            dropout: self.get(HyperParam::Dropout).unwrap_or(0.0),
            label_smoothing: self.get(HyperParam::LabelSmoothing).unwrap_or(0.0),
        }
        .masked(workload.supports);
        TrialSpec {
            config,
            schedule: ScheduleSpec::warmup_cosine(self.get(HyperParam::Warmup).unwrap_or(0.05), alpha),
            weight_decay: self.get(HyperParam::WeightDecay).unwrap_or(0.0),
            knobs,
            workload: workload.id,
            seed,
        }
    }
}

/// `n` scrambled Halton points, indices `1..=n` of the sequence. The
/// scramble is a per-dimension random shift modulo 1 drawn from
/// `stream_seed`.
pub fn sample(space: &SearchSpace, n: usize, stream_seed: u64) -> Result<Vec<ConfigPoint>> {
    space.validate()?;
    if n == 0 {
        return Err(Error::InvalidConfig("need at least one search point".into()));
    }
    let mut r = rng::rng(rng::derive(stream_seed, 0x4A17));
    let shifts: Vec<f64> = space.dimensions.iter().map(|_| r.random::<f64>()).collect();
    Ok((0..n)
        .map(|k| {
            let values = space
                .dimensions
                .iter()
                .enumerate()
                .map(|(d, dim)| {
                    let u = (radical_inverse(k as u64 + 1, PRIMES[d]) + shifts[d]).fract();
                    (dim.param, dim.scale.map(u))
                })
                .collect();
            ConfigPoint { index: k, values }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPlan {
    pub algorithms: Vec<Algorithm>,
    pub horizons: Vec<f64>,
    pub points: usize,
    pub final_seeds: usize,
    pub shortlist_size: usize,
    pub stream_seed: u64,
    pub tau_max: f64,
    #[serde(default)]
    pub preset: SpacePreset,
}

impl CalibrationPlan {
    pub fn desk(algorithms: Vec<Algorithm>) -> Self {
        Self {
            algorithms,
            horizons: vec![0.33, 0.5, 0.66],
            points: 32,
            final_seeds: 5,
            shortlist_size: 3,
            stream_seed: 0,
            tau_max: crate::scoring::DEFAULT_TAU_MAX,
            preset: SpacePreset::Broad,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            return Err(Error::InvalidConfig("no algorithms to calibrate".into()));
        }
        if self.horizons.is_empty() {
            return Err(Error::InvalidConfig("no horizons".into()));
        }
        for &h in &self.horizons {
            ScheduleSpec::warmup_cosine(0.05, h).validate()?;
        }
        if self.points == 0 || self.shortlist_size == 0 || self.final_seeds == 0 {
            return Err(Error::InvalidConfig(
                "points, shortlist size and seeds must all be at least 1".into(),
            ));
        }
        if self.points < self.shortlist_size {
            return Err(Error::InvalidConfig(format!(
                "{} points cannot fill a shortlist of {}",
                self.points, self.shortlist_size
            )));
        }
        crate::scoring::check_tau_max(self.tau_max)
    }

    /// Seed of the sweep; also the first of the final seeds.
    pub fn sweep_seed(&self) -> u64 {
        rng::derive(self.stream_seed, 0x5EED)
    }

    pub fn final_seed_list(&self) -> Vec<u64> {
        let mut seeds = vec![self.sweep_seed()];
        seeds.extend((1..self.final_seeds as u64).map(|j| rng::derive(self.stream_seed, 0x5EED + j)));
        seeds
    }

    pub fn points_for(&self, alg: Algorithm) -> Result<Vec<ConfigPoint>> {
        // Each algorithm draws from its own stream so adding an algorithm to
        // the plan does not move another's points.
        let seed = rng::derive(self.stream_seed, alg as u64 + 1);
        sample(&SearchSpace::preset(alg, self.preset), self.points, seed)
    }
}

/// One (algorithm, point, horizon) cell of the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub algorithm: Algorithm,
    pub horizon: f64,
    pub point: ConfigPoint,
    /// One record per workload, suite order.
    pub records: Vec<TrialRecord>,
}

/// Label of a sampled configuration, e.g. `prodigy@0.50#7`.
pub fn point_label(alg: Algorithm, horizon: f64, index: usize) -> String {
    format!("{alg}@{horizon:.2}#{index}")
}

impl SweepEntry {
    pub fn label(&self) -> String {
        point_label(self.algorithm, self.horizon, self.point.index)
    }

    pub fn steps(&self) -> Vec<Time> {
        self.records.iter().map(|r| r.steps_to_target.map(|s| s as f64).into()).collect()
    }
}

fn run_all(specs: &[TrialSpec]) -> Result<Vec<TrialRecord>> {
    specs.par_iter().map(run_trial).collect()
}

/// Runs every point of every algorithm at every horizon on every workload
/// with the sweep seed.
pub fn sweep(plan: &CalibrationPlan, suite: &[Workload]) -> Result<Vec<SweepEntry>> {
    plan.validate()?;
    let seed = plan.sweep_seed();
    let mut cells = Vec::new();
    for &alg in &plan.algorithms {
        for point in plan.points_for(alg)? {
            for &h in &plan.horizons {
                cells.push((alg, h, point.clone()));
            }
        }
    }
    let specs: Vec<TrialSpec> = cells
        .iter()
        .flat_map(|(alg, h, p)| suite.iter().map(move |w| p.trial_spec(*alg, *h, w, seed)))
        .collect();
    let mut records = run_all(&specs)?.into_iter();
    Ok(cells
        .into_iter()
        .map(|(algorithm, horizon, point)| SweepEntry {
            algorithm,
            horizon,
            point,
            records: records.by_ref().take(suite.len()).collect(),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortlistEntry {
    pub point: ConfigPoint,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shortlist {
    pub algorithm: Algorithm,
    pub horizon: f64,
    pub entries: Vec<ShortlistEntry>,
    /// Fewer than `k` points reached any target.
    pub flagged: bool,
}

/// Ranks `(index, cost, viable)` triples; ties break by index.
pub fn rank_costs(costs: &[(usize, f64)], k: usize) -> Vec<usize> {
    let mut order: Vec<(usize, f64)> = costs.to_vec();
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    order.into_iter().take(k).map(|(i, _)| i).collect()
}

/// Top-`k` points per (algorithm, horizon) by geometric-mean cost.
pub fn shortlist(entries: &[SweepEntry], suite: &[Workload], k: usize) -> Result<Vec<Shortlist>> {
    let t_max: Vec<f64> = suite.iter().map(|w| w.t_max as f64).collect();
    let mut groups: BTreeMap<(Algorithm, u64), Vec<&SweepEntry>> = BTreeMap::new();
    for e in entries {
        groups.entry((e.algorithm, e.horizon.to_bits())).or_default().push(e);
    }
    let mut out = Vec::new();
    for ((algorithm, hbits), group) in groups {
        let mut costed = Vec::with_capacity(group.len());
        let mut viable = 0;
        for e in &group {
            let steps = e.steps();
            if steps.iter().any(|t| t.is_reached()) {
                viable += 1;
            }
            costed.push((e.point.index, geometric_mean_cost(&steps, &t_max)?));
        }
        let chosen = rank_costs(&costed, k);
        let entries = chosen
            .iter()
            .map(|&idx| {
                let (e, cost) = group
                    .iter()
                    .zip(&costed)
                    .find(|(e, _)| e.point.index == idx)
                    .map(|(e, c)| (*e, c.1))
                    .expect("ranked index exists");
                ShortlistEntry { point: e.point.clone(), cost }
            })
            .collect();
        out.push(Shortlist { algorithm, horizon: f64::from_bits(hbits), entries, flagged: viable < k });
    }
    Ok(out)
}

/// Lower median over seeds with misses as `+∞`; a majority of misses is a
/// miss.
pub fn aggregate_seeds(steps: &[Option<u64>]) -> Option<u64> {
    let misses = steps.iter().filter(|s| s.is_none()).count();
    if steps.is_empty() || 2 * misses > steps.len() {
        return None;
    }
    let mut v: Vec<u64> = steps.iter().map(|s| s.unwrap_or(u64::MAX)).collect();
    v.sort_unstable();
    let m = v[(v.len() - 1) / 2];
    (m != u64::MAX).then_some(m)
}

/// A fully specified configuration, applied identically on every workload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub label: String,
    pub algorithm: Algorithm,
    /// `None` for an unscheduled (constant multiplier) configuration.
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<ConfigPoint>,
    /// The trial template (workload and seed are filled in per run).
    pub template: TrialSpec,
}

impl Candidate {
    pub fn from_point(alg: Algorithm, horizon: f64, point: &ConfigPoint) -> Self {
        // Knob masking depends on the workload, so the template is built on
        // the most permissive workload and re-masked per run.
        let wl = Workload::new(WorkloadId::Mlp);
        Self {
            label: point_label(alg, horizon, point.index),
            algorithm: alg,
            horizon: Some(horizon),
            point: Some(point.clone()),
            template: point.trial_spec(alg, horizon, &wl, 0),
        }
    }

    /// Literature defaults, no schedule and no regularization.
    pub fn naive(alg: Algorithm) -> Self {
        Self {
            label: format!("{alg} naive"),
            algorithm: alg,
            horizon: None,
            point: None,
            template: TrialSpec {
                config: naive_config(alg),
                schedule: ScheduleSpec::constant(),
                weight_decay: 0.0,
                knobs: RegularizerKnobs::NONE,
                workload: WorkloadId::Quadratic,
                seed: 0,
            },
        }
    }

    pub fn custom(label: String, config: OptimizerConfig, schedule: ScheduleSpec, weight_decay: f64) -> Self {
        let alg = config.algorithm();
        Self {
            label,
            algorithm: alg,
            horizon: matches!(schedule.shape, crate::schedule::ScheduleShape::WarmupCosine)
                .then_some(schedule.horizon_fraction),
            point: None,
            template: TrialSpec {
                config,
                schedule,
                weight_decay,
                knobs: RegularizerKnobs::NONE,
                workload: WorkloadId::Quadratic,
                seed: 0,
            },
        }
    }

    pub fn spec(&self, workload: &Workload, seed: u64) -> TrialSpec {
        TrialSpec {
            knobs: self.template.knobs.masked(workload.supports),
            workload: workload.id,
            seed,
            ..self.template.clone()
        }
    }
}

/// A freshly run trial and the candidate that first asked for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledRecord {
    pub label: String,
    pub record: TrialRecord,
}

/// Seed-aggregated outcome of one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub candidate: Candidate,
    /// `steps[w][j]`: steps to target on workload `w` with seed `j`.
    pub steps: Vec<Vec<Option<u64>>>,
    pub aggregated: Vec<Option<u64>>,
    pub runtime_fraction: BTreeMap<String, Time>,
}

/// Runs each candidate with every seed on every workload. Records already
/// present in `known` (by spec digest) are reused instead of re-run.
pub fn evaluate(
    candidates: &[Candidate],
    suite: &[Workload],
    seeds: &[u64],
    known: &BTreeMap<String, TrialRecord>,
) -> Result<(Vec<Evaluation>, Vec<LabeledRecord>)> {
    let mut fresh: Vec<(&str, TrialSpec)> = Vec::new();
    let mut queued = std::collections::BTreeSet::new();
    for c in candidates {
        for w in suite {
            for &s in seeds {
                let spec = c.spec(w, s);
                let d = spec.digest();
                if !known.contains_key(&d) && queued.insert(d) {
                    fresh.push((&c.label, spec));
                }
            }
        }
    }
    let new_records: Vec<LabeledRecord> = fresh
        .par_iter()
        .map(|(label, s)| Ok(LabeledRecord { label: label.to_string(), record: run_trial(s)? }))
        .collect::<Result<_>>()?;
    let by_digest: BTreeMap<&str, &TrialRecord> = known
        .iter()
        .map(|(k, v)| (k.as_str(), v))
        .chain(new_records.iter().map(|r| (r.record.spec_digest.as_str(), &r.record)))
        .collect();

    let mut evals = Vec::with_capacity(candidates.len());
    for c in candidates {
        let mut steps = Vec::with_capacity(suite.len());
        let mut aggregated = Vec::with_capacity(suite.len());
        let mut fractions = BTreeMap::new();
        for w in suite {
            let per_seed: Vec<Option<u64>> = seeds
                .iter()
                .map(|&s| by_digest[c.spec(w, s).digest().as_str()].steps_to_target)
                .collect();
            let agg = aggregate_seeds(&per_seed);
            fractions.insert(w.name().to_string(), runtime_fraction(agg, w.t_max));
            steps.push(per_seed);
            aggregated.push(agg);
        }
        evals.push(Evaluation { candidate: c.clone(), steps, aggregated, runtime_fraction: fractions });
    }
    Ok((evals, new_records))
}

/// Runtime-fraction table over evaluated candidates.
pub fn pool_table(evals: &[Evaluation], suite: &[Workload]) -> Result<TimeTable> {
    let workloads: Vec<String> = suite.iter().map(|w| w.name().to_string()).collect();
    let times = evals
        .iter()
        .map(|e| {
            e.aggregated
                .iter()
                .zip(suite)
                .map(|(a, w)| runtime_fraction(*a, w.t_max))
                .collect()
        })
        .collect();
    TimeTable::new(evals.iter().map(|e| e.candidate.label.clone()).collect(), workloads, times)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Winner {
    pub algorithm: Algorithm,
    pub horizon: f64,
    pub label: String,
    pub score: f64,
    pub candidate: Candidate,
    pub runtime_fraction: BTreeMap<String, Time>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub plan: CalibrationPlan,
    pub seeds: Vec<u64>,
    pub shortlists: Vec<Shortlist>,
    /// Scores of every shortlisted candidate, scored jointly.
    pub candidate_pool: ScoreReport,
    pub winners: Vec<Winner>,
    /// Winners plus the naive defaults of each calibrated algorithm.
    pub final_pool: ScoreReport,
}

impl CalibrationReport {
    pub fn winner(&self, alg: Algorithm, horizon: f64) -> Option<&Winner> {
        self.winners.iter().find(|w| w.algorithm == alg && w.horizon == horizon)
    }
}

/// Everything the pipeline produced.
#[derive(Debug, Clone)]
pub struct CalibrationOutput {
    pub report: CalibrationReport,
    pub sweep: Vec<SweepEntry>,
    /// Every trial record run after the sweep.
    pub final_records: Vec<LabeledRecord>,
}

/// Re-runs shortlisted configs with the final seeds, scores them jointly
/// and keeps the best per (algorithm, horizon).
pub fn finalize(
    plan: &CalibrationPlan,
    shortlists: &[Shortlist],
    suite: &[Workload],
    known: &BTreeMap<String, TrialRecord>,
) -> Result<(Vec<Winner>, ScoreReport, Vec<Evaluation>, Vec<LabeledRecord>)> {
    if shortlists.iter().all(|s| s.entries.is_empty()) {
        return Err(Error::Empty("shortlists".into()));
    }
    let candidates: Vec<Candidate> = shortlists
        .iter()
        .flat_map(|s| s.entries.iter().map(move |e| Candidate::from_point(s.algorithm, s.horizon, &e.point)))
        .collect();
    let seeds = plan.final_seed_list();
    let (evals, records) = evaluate(&candidates, suite, &seeds, known)?;
    let table = pool_table(&evals, suite)?;
    let scores = benchmark_scores(&table, plan.tau_max)?;
    let report = ScoreReport::build(&table, plan.tau_max)?;

    let mut winners: Vec<Winner> = Vec::new();
    for s in shortlists {
        let best = evals
            .iter()
            .zip(&scores)
            .filter(|(e, _)| e.candidate.algorithm == s.algorithm && e.candidate.horizon == Some(s.horizon))
            // Strictly greater keeps the earlier (cheaper) shortlist entry on ties.
            .fold(None::<(&Evaluation, f64)>, |acc, (e, &sc)| match acc {
                Some((_, best)) if sc <= best => acc,
                _ => Some((e, sc)),
            });
        if let Some((e, score)) = best {
            winners.push(Winner {
                algorithm: s.algorithm,
                horizon: s.horizon,
                label: e.candidate.label.clone(),
                score,
                candidate: e.candidate.clone(),
                runtime_fraction: e.runtime_fraction.clone(),
            });
        }
    }
    Ok((winners, report, evals, records))
}

/// Sweep, shortlist, finalize, then score the winners against the naive
/// defaults of the same algorithms.
pub fn calibrate(plan: &CalibrationPlan, suite: &[Workload]) -> Result<CalibrationOutput> {
    plan.validate()?;
    let sweep_entries = sweep(plan, suite)?;
    let shortlists = shortlist(&sweep_entries, suite, plan.shortlist_size)?;
    let known: BTreeMap<String, TrialRecord> = sweep_entries
        .iter()
        .flat_map(|e| e.records.iter().map(|r| (r.spec_digest.clone(), r.clone())))
        .collect();
    let (winners, candidate_pool, _, mut final_records) = finalize(plan, &shortlists, suite, &known)?;

    let mut pool: Vec<Candidate> = winners.iter().map(|w| w.candidate.clone()).collect();
    pool.extend(plan.algorithms.iter().map(|&a| Candidate::naive(a)));
    let seeds = plan.final_seed_list();
    let mut known = known;
    known.extend(final_records.iter().map(|r| (r.record.spec_digest.clone(), r.record.clone())));
    let (evals, naive_records) = evaluate(&pool, suite, &seeds, &known)?;
    final_records.extend(naive_records);
    let final_pool = ScoreReport::build(&pool_table(&evals, suite)?, plan.tau_max)?;

    Ok(CalibrationOutput {
        report: CalibrationReport {
            plan: plan.clone(),
            seeds,
            shortlists,
            candidate_pool,
            winners,
            final_pool,
        },
        sweep: sweep_entries,
        final_records,
    })
}

impl fmt::Display for CalibrationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<28} {:>6} {:>8}", "config", "score", "reached")?;
        for a in &self.final_pool.algorithms {
            writeln!(f, "{:<28} {:>6.3} {:>8}", a.algorithm, a.score, a.reached_count)?;
        }
        Ok(())
    }
}
