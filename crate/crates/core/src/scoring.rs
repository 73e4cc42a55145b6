//! Time-to-target scoring: runtime ratios, performance profiles, the
//! area-under-profile benchmark score and the geometric-mean search cost.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const DEFAULT_TAU_MAX: f64 = 4.0;
pub const UNREACHED_LITERAL: &str = "UNREACHED";

/// A time-to-target (steps or runtime fraction) or a miss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Time {
    Reached(f64),
    Unreached,
}

impl Time {
    pub fn value(self) -> Option<f64> {
        match self {
            Time::Reached(t) => Some(t),
            Time::Unreached => None,
        }
    }

    pub fn is_reached(self) -> bool {
        matches!(self, Time::Reached(_))
    }
}

impl From<Option<f64>> for Time {
    fn from(t: Option<f64>) -> Self {
        t.map_or(Time::Unreached, Time::Reached)
    }
}

impl fmt::Display for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Time::Reached(t) => write!(f, "{t}"),
            Time::Unreached => f.write_str(UNREACHED_LITERAL),
        }
    }
}

impl FromStr for Time {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == UNREACHED_LITERAL {
            return Ok(Time::Unreached);
        }
        match s.parse::<f64>() {
            Ok(t) if t.is_finite() && t > 0.0 => Ok(Time::Reached(t)),
            _ => Err(format!("expected a positive real or {UNREACHED_LITERAL}, got `{s}`")),
        }
    }
}

impl Serialize for Time {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Time::Reached(t) => s.serialize_f64(*t),
            Time::Unreached => s.serialize_str(UNREACHED_LITERAL),
        }
    }
}

impl<'de> Deserialize<'de> for Time {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(t) if t.is_finite() && t > 0.0 => Ok(Time::Reached(t)),
            Raw::Num(t) => Err(serde::de::Error::custom(format!("time {t} must be positive"))),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Algorithm × workload matrix of times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeTable {
    pub algorithms: Vec<String>,
    pub workloads: Vec<String>,
    /// `times[s][w]`.
    pub times: Vec<Vec<Time>>,
}

impl TimeTable {
    pub fn new(algorithms: Vec<String>, workloads: Vec<String>, times: Vec<Vec<Time>>) -> Result<Self> {
        if algorithms.is_empty() || workloads.is_empty() {
            return Err(Error::Empty("time table".into()));
        }
        if times.len() != algorithms.len() {
            return Err(Error::LengthMismatch { expected: algorithms.len(), got: times.len() });
        }
        for row in &times {
            if row.len() != workloads.len() {
                return Err(Error::LengthMismatch { expected: workloads.len(), got: row.len() });
            }
            for t in row {
                if let Time::Reached(v) = t {
                    if !(v.is_finite() && *v > 0.0) {
                        return Err(Error::InvalidConfig(format!("time {v} must be positive")));
                    }
                }
            }
        }
        Ok(Self { algorithms, workloads, times })
    }

    pub fn n_algorithms(&self) -> usize {
        self.algorithms.len()
    }

    pub fn n_workloads(&self) -> usize {
        self.workloads.len()
    }

    pub fn index_of(&self, algorithm: &str) -> Option<usize> {
        self.algorithms.iter().position(|a| a == algorithm)
    }

    pub fn reached_count(&self, s: usize) -> usize {
        self.times[s].iter().filter(|t| t.is_reached()).count()
    }

    /// Per-workload fastest time; `None` when nobody reached the target.
    pub fn column_min(&self, w: usize) -> Option<f64> {
        self.times
            .iter()
            .filter_map(|row| row[w].value())
            .fold(None, |acc, t| Some(acc.map_or(t, |m: f64| m.min(t))))
    }

    /// `r[s][w] = t[s][w] / min_s' t[s'][w]`; misses map to `+∞`.
    pub fn ratios(&self) -> Vec<Vec<f64>> {
        let mins: Vec<Option<f64>> = (0..self.n_workloads()).map(|w| self.column_min(w)).collect();
        self.times
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&mins)
                    .map(|(t, m)| match (t, m) {
                        (Time::Reached(t), Some(m)) => t / m,
                        _ => f64::INFINITY,
                    })
                    .collect()
            })
            .collect()
    }

    /// Parses the `algorithm,workload,fraction` exchange format. Every
    /// (algorithm, workload) cell must appear exactly once.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim() == "algorithm,workload,fraction" => {}
            Some((i, h)) => {
                return Err(Error::MalformedTable {
                    line: i + 1,
                    msg: format!("expected header `algorithm,workload,fraction`, got `{h}`"),
                })
            }
            None => return Err(Error::Empty("time table CSV".into())),
        }
        let mut algorithms: Vec<String> = Vec::new();
        let mut workloads: Vec<String> = Vec::new();
        let mut cells: HashMap<(usize, usize), Time> = HashMap::new();
        for (i, line) in lines {
            let line_no = i + 1;
            let fields: Vec<&str> = line.trim().split(',').collect();
            if fields.len() != 3 {
                return Err(Error::MalformedTable {
                    line: line_no,
                    msg: format!("expected 3 fields, got {}", fields.len()),
                });
            }
            let (alg, wl) = (fields[0].trim(), fields[1].trim());
            if alg.is_empty() || wl.is_empty() {
                return Err(Error::MalformedTable { line: line_no, msg: "empty name".into() });
            }
            let time: Time = fields[2]
                .trim()
                .parse()
                .map_err(|msg| Error::MalformedTable { line: line_no, msg })?;
            let s = intern(&mut algorithms, alg);
            let w = intern(&mut workloads, wl);
            if cells.insert((s, w), time).is_some() {
                return Err(Error::MalformedTable {
                    line: line_no,
                    msg: format!("duplicate cell ({alg}, {wl})"),
                });
            }
        }
        if algorithms.is_empty() {
            return Err(Error::Empty("time table CSV has no rows".into()));
        }
        let mut times = vec![vec![Time::Unreached; workloads.len()]; algorithms.len()];
        for (s, row) in times.iter_mut().enumerate() {
            for (w, cell) in row.iter_mut().enumerate() {
                *cell = *cells.get(&(s, w)).ok_or_else(|| Error::MalformedTable {
                    line: 0,
                    msg: format!("missing cell ({}, {})", algorithms[s], workloads[w]),
                })?;
            }
        }
        Self::new(algorithms, workloads, times)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("algorithm,workload,fraction\n");
        for (s, row) in self.times.iter().enumerate() {
            for (w, t) in row.iter().enumerate() {
                out.push_str(&format!("{},{},{}\n", self.algorithms[s], self.workloads[w], t));
            }
        }
        out
    }
}

fn intern(list: &mut Vec<String>, name: &str) -> usize {
    match list.iter().position(|x| x == name) {
        Some(i) => i,
        None => {
            list.push(name.to_string());
            list.len() - 1
        }
    }
}

/// Right-continuous step function `p(τ)` on `[1, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceProfile {
    pub algorithm: String,
    /// `(τ, p)` pairs with strictly increasing `τ`, starting at `τ = 1`;
    /// `p` holds from its `τ` up to the next breakpoint.
    pub breakpoints: Vec<(f64, f64)>,
}

impl PerformanceProfile {
    pub fn value(&self, tau: f64) -> f64 {
        self.breakpoints
            .iter()
            .take_while(|(t, _)| *t <= tau)
            .last()
            .map_or(0.0, |(_, p)| *p)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau,p\n");
        for (t, p) in &self.breakpoints {
            out.push_str(&format!("{t},{p}\n"));
        }
        out
    }
}

/// Profile of algorithm index `s`. The denominator is every workload in
/// the table, including ones nobody reached.
pub fn profile(tbl: &TimeTable, s: usize) -> Result<PerformanceProfile> {
    if s >= tbl.n_algorithms() {
        return Err(Error::UnknownAlgorithm(format!("row {s}")));
    }
    let ratios = tbl.ratios();
    Ok(profile_from_ratios(&tbl.algorithms[s], &ratios[s]))
}

pub fn profiles(tbl: &TimeTable) -> Vec<PerformanceProfile> {
    let ratios = tbl.ratios();
    tbl.algorithms
        .iter()
        .zip(&ratios)
        .map(|(a, r)| profile_from_ratios(a, r))
        .collect()
}

fn profile_from_ratios(algorithm: &str, ratios: &[f64]) -> PerformanceProfile {
    let n = ratios.len() as f64;
    let mut finite: Vec<f64> = ratios.iter().copied().filter(|r| r.is_finite()).collect();
    finite.sort_by(f64::total_cmp);
    let mut breakpoints = vec![(1.0, 0.0)];
    for (i, &r) in finite.iter().enumerate() {
        let p = (i + 1) as f64 / n;
        let last = breakpoints.last_mut().expect("nonempty");
        if r <= last.0 {
            last.1 = p;
        } else {
            breakpoints.push((r, p));
        }
    }
    PerformanceProfile { algorithm: algorithm.to_string(), breakpoints }
}

/// `(1/(τ_max − 1))·∫₁^τ_max p(τ) dτ`, integrated exactly over the steps.
pub fn benchmark_score(profile: &PerformanceProfile, tau_max: f64) -> Result<f64> {
    check_tau_max(tau_max)?;
    let bp = &profile.breakpoints;
    let mut area = 0.0;
    for (i, &(tau, p)) in bp.iter().enumerate() {
        if tau >= tau_max {
            break;
        }
        let next = bp.get(i + 1).map_or(tau_max, |b| b.0.min(tau_max));
        area += p * (next - tau);
    }
    Ok(area / (tau_max - 1.0))
}

pub fn benchmark_scores(tbl: &TimeTable, tau_max: f64) -> Result<Vec<f64>> {
    profiles(tbl).iter().map(|p| benchmark_score(p, tau_max)).collect()
}

pub fn check_tau_max(tau_max: f64) -> Result<()> {
    if !(tau_max > 1.0 && tau_max.is_finite()) {
        return Err(Error::InvalidConfig(format!("tau_max = {tau_max} must exceed 1")));
    }
    Ok(())
}

/// Geometric mean of per-workload times, misses capped at `2·t_max` of
/// their workload.
pub fn geometric_mean_cost(times: &[Time], t_max: &[f64]) -> Result<f64> {
    if times.is_empty() {
        return Err(Error::Empty("geometric mean of no times".into()));
    }
    if times.len() != t_max.len() {
        return Err(Error::LengthMismatch { expected: times.len(), got: t_max.len() });
    }
    let log_sum: f64 = times
        .iter()
        .zip(t_max)
        .map(|(t, cap)| match t {
            Time::Reached(v) => v.ln(),
            Time::Unreached => (2.0 * cap).ln(),
        })
        .sum();
    Ok((log_sum / times.len() as f64).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmScore {
    pub algorithm: String,
    pub score: f64,
    pub reached_count: usize,
    pub runtime_fraction: BTreeMap<String, Time>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub pool: Vec<String>,
    pub tau_max: f64,
    pub algorithms: Vec<AlgorithmScore>,
}

impl ScoreReport {
    pub fn build(tbl: &TimeTable, tau_max: f64) -> Result<Self> {
        let scores = benchmark_scores(tbl, tau_max)?;
        let algorithms = tbl
            .algorithms
            .iter()
            .enumerate()
            .map(|(s, name)| AlgorithmScore {
                algorithm: name.clone(),
                score: scores[s],
                reached_count: tbl.reached_count(s),
                runtime_fraction: tbl
                    .workloads
                    .iter()
                    .cloned()
                    .zip(tbl.times[s].iter().copied())
                    .collect(),
            })
            .collect();
        Ok(Self { pool: tbl.algorithms.clone(), tau_max, algorithms })
    }

    pub fn get(&self, algorithm: &str) -> Option<&AlgorithmScore> {
        self.algorithms.iter().find(|a| a.algorithm == algorithm)
    }
}
