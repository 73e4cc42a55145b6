//! Artifact persistence: run manifests, stamped JSON files, atomic writes
//! and re-scoring of stored records.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::calibration::aggregate_seeds;
use crate::error::{Error, Result};
use crate::harness::{runtime_fraction, TrialRecord, TrialSpec};
use crate::scoring::{Time, TimeTable};
use crate::workloads::{Workload, WorkloadDescriptor};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const OUT_ENV: &str = "LRFBENCH_OUT";
pub const DEFAULT_OUT: &str = "lrfbench-out";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn suite_descriptors(suite: &[Workload]) -> Vec<WorkloadDescriptor> {
    suite.iter().map(Workload::descriptor).collect()
}

/// Digest of the suite definition: names, budgets, targets and dimensions.
pub fn suite_digest(suite: &[Workload]) -> String {
    let bytes = serde_json::to_vec(&suite_descriptors(suite)).expect("descriptors serialize");
    sha256_hex(&bytes)
}

/// Provenance of one CLI invocation. `timestamp` is informational and is
/// left out of [`RunManifest::digest`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Normalized command line; output location and parallelism are not
    /// part of it since they cannot change results.
    pub command: Vec<String>,
    pub suite_digest: String,
    pub tool_version: String,
    pub stream_seeds: Vec<u64>,
    pub timestamp: u64,
    pub digest: String,
}

#[derive(Serialize)]
struct ManifestKey<'a> {
    command: &'a [String],
    suite_digest: &'a str,
    tool_version: &'a str,
    stream_seeds: &'a [u64],
}

impl RunManifest {
    pub fn new(command: Vec<String>, suite: &[Workload], stream_seeds: Vec<u64>) -> Self {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        let mut m = Self {
            command,
            suite_digest: suite_digest(suite),
            tool_version: TOOL_VERSION.to_string(),
            stream_seeds,
            timestamp,
            digest: String::new(),
        };
        m.digest = m.compute_digest();
        m
    }

    pub fn compute_digest(&self) -> String {
        let key = ManifestKey {
            command: &self.command,
            suite_digest: &self.suite_digest,
            tool_version: &self.tool_version,
            stream_seeds: &self.stream_seeds,
        };
        sha256_hex(&serde_json::to_vec(&key).expect("manifest serializes"))
    }

    /// The stored digest matches the content.
    pub fn verify(&self) -> bool {
        self.digest == self.compute_digest()
    }

    pub fn stamp<T>(&self, payload: T) -> Stamped<T> {
        Stamped { manifest_digest: self.digest.clone(), payload }
    }
}

/// Any output artifact, tagged with the digest of the manifest it was
/// produced under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stamped<T> {
    pub manifest_digest: String,
    pub payload: T,
}

/// A trial record as stored on disk, with the configuration label it is
/// grouped under when re-scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordFile {
    pub label: String,
    pub record: TrialRecord,
}

/// Label for a stand-alone trial: algorithm plus a short digest of every
/// setting except workload and seed.
pub fn config_label(spec: &TrialSpec) -> String {
    let key = (&spec.config, &spec.schedule, spec.weight_decay, &spec.knobs);
    let d = sha256_hex(&serde_json::to_vec(&key).expect("spec serializes"));
    format!("{}-{}", spec.algorithm(), &d[..10])
}

pub fn record_file_name(label: &str, rec: &TrialRecord) -> String {
    let safe: String = label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect();
    format!("{safe}__{}__{}.json", rec.spec.workload, &rec.spec_digest[..12])
}

/// `explicit`, else `$LRFBENCH_OUT`, else `./lrfbench-out`.
pub fn output_dir(explicit: Option<&Path>) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(DEFAULT_OUT),
    }
}

/// Writes through a temporary sibling and renames it into place, so
/// readers never observe a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidConfig(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    atomic_write(path, to_json(value)?.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Every stamped record file under `dir` (recursively), sorted by path.
/// Other JSON files are skipped.
pub fn load_records(dir: &Path) -> Result<Vec<RecordFile>> {
    let mut paths = Vec::new();
    collect_json(dir, &mut paths)?;
    paths.sort();
    let mut out = Vec::new();
    for p in paths {
        let text = fs::read_to_string(&p)?;
        if let Ok(s) = serde_json::from_str::<Stamped<RecordFile>>(&text) {
            out.push(s.payload);
        }
    }
    if out.is_empty() {
        return Err(Error::Empty(format!("no trial records under {}", dir.display())));
    }
    Ok(out)
}

fn collect_json(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in fs::read_dir(dir)? {
        let p = entry?.path();
        if p.is_dir() {
            collect_json(&p, out)?;
        } else if p.extension().is_some_and(|e| e == "json") {
            out.push(p);
        }
    }
    Ok(())
}

/// Runtime-fraction table from stored records: one row per label, one
/// column per workload seen. Seeds are combined by the lower median with
/// misses counted as infinite; a (label, workload) pair with no record is
/// unreached.
pub fn records_table(records: &[RecordFile]) -> Result<TimeTable> {
    if records.is_empty() {
        return Err(Error::Empty("records".into()));
    }
    let mut cells: BTreeMap<(&str, String), (u64, Vec<Option<u64>>)> = BTreeMap::new();
    let mut workloads: Vec<String> = Vec::new();
    let mut labels: Vec<&str> = Vec::new();
    for r in records {
        let w = r.record.spec.workload.to_string();
        if !workloads.contains(&w) {
            workloads.push(w.clone());
        }
        if !labels.contains(&r.label.as_str()) {
            labels.push(&r.label);
        }
        cells
            .entry((&r.label, w))
            .or_insert((r.record.t_max, Vec::new()))
            .1
            .push(r.record.steps_to_target);
    }
    workloads.sort_by_key(|w| w.parse::<crate::workloads::WorkloadId>().map_or(usize::MAX, |id| id.index()));
    let times = labels
        .iter()
        .map(|&l| {
            workloads
                .iter()
                .map(|w| match cells.get(&(l, w.clone())) {
                    Some((t_max, steps)) => runtime_fraction(aggregate_seeds(steps), *t_max),
                    None => Time::Unreached,
                })
                .collect()
        })
        .collect();
    TimeTable::new(labels.iter().map(|l| l.to_string()).collect(), workloads, times)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workloads::suite;

    #[test]
    fn manifest_digest_ignores_timestamp() {
        let s = suite();
        let a = RunManifest::new(vec!["run".into()], &s, vec![1]);
        let mut b = a.clone();
        b.timestamp += 1000;
        assert_eq!(a.compute_digest(), b.compute_digest());
        assert!(b.verify());
        b.stream_seeds = vec![2];
        assert!(!b.verify());
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = std::env::temp_dir().join(format!("lrfbench-io-{}", std::process::id()));
        let p = dir.join("x.json");
        atomic_write(&p, b"one").unwrap();
        atomic_write(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(&dir).unwrap().count(), 1);
        fs::remove_dir_all(&dir).unwrap();
    }
}
