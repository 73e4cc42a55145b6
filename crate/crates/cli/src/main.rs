use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use lrfbench::calibration::{calibrate, CalibrationPlan, CalibrationReport, SpacePreset};
use lrfbench::harness::{run_trial, TrialSpec};
use lrfbench::io::{
    self, config_label, record_file_name, RecordFile, RunManifest, MANIFEST_FILE,
};
use lrfbench::optim::{naive_config, scheduled_config, Algorithm, OptimizerConfig};
use lrfbench::schedule::ScheduleSpec;
use lrfbench::scoring::{profiles, ScoreReport, TimeTable, DEFAULT_TAU_MAX};
use lrfbench::workloads::{
    derive_targets, suite, OracleBudget, RegularizerKnobs, Workload, WorkloadId, FROZEN_TARGETS,
};

#[derive(Parser)]
#[command(name = "lrfbench", version, about = "Learning-rate-free optimizer benchmark")]
struct Cli {
    /// Worker threads for the trial pool (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trial per requested workload.
    Run(RunArgs),
    /// Quasi-random calibration search with multi-seed final selection.
    Search(SearchArgs),
    /// Score stored records or an external time table.
    Score(ScoreArgs),
    /// Print the workload suite; optionally re-derive its targets.
    Suite(SuiteArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    algo: Algorithm,
    /// Workload name, or `all`.
    #[arg(long)]
    workload: WorkloadSel,
    /// Horizon fraction for a warmup-cosine schedule; omit for a constant
    /// multiplier.
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    warmup: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON file with optimizer hyperparameters and trial settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    /// Comma-separated algorithms.
    #[arg(long, value_delimiter = ',', required = true)]
    algo: Vec<Algorithm>,
    #[arg(long, value_delimiter = ',', default_value = "0.33,0.5,0.66")]
    horizons: Vec<f64>,
    #[arg(long, default_value_t = 32)]
    points: usize,
    #[arg(long, default_value_t = 5)]
    seeds: usize,
    #[arg(long, default_value_t = 3)]
    shortlist: usize,
    #[arg(long, default_value_t = DEFAULT_TAU_MAX)]
    tau_max: f64,
    #[arg(long, default_value_t = 0)]
    stream_seed: u64,
    /// `broad` or `regularization`.
    #[arg(long, default_value = "broad")]
    preset: SpacePreset,
    /// Restrict the suite (comma-separated workload names).
    #[arg(long, value_delimiter = ',')]
    workloads: Vec<WorkloadId>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = true, multiple = false, id = "input")]
struct ScoreInput {
    /// Directory of stored trial records.
    #[arg(long)]
    records: Option<PathBuf>,
    /// CSV time table with header `algorithm,workload,fraction`.
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    #[command(flatten)]
    input: ScoreInput,
    #[arg(long, default_value_t = DEFAULT_TAU_MAX)]
    tau_max: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SuiteArgs {
    /// Re-run the target oracle and compare with the frozen targets.
    #[arg(long)]
    derive_targets: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Optional overrides read from `--config`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    optimizer: Option<OptimizerConfig>,
    weight_decay: Option<f64>,
    warmup: Option<f64>,
    #[serde(default)]
    dropout: f64,
    #[serde(default)]
    label_smoothing: f64,
}

#[derive(Serialize)]
struct SearchOutput<'a> {
    stream_seed: u64,
    suite_digest: &'a str,
    report: &'a CalibrationReport,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    let res = match cli.cmd {
        Command::Run(a) => cmd_run(a),
        Command::Search(a) => cmd_search(a),
        Command::Score(a) => cmd_score(a),
        Command::Suite(a) => cmd_suite(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct WorkloadSel(Option<WorkloadId>);

impl std::str::FromStr for WorkloadSel {
    type Err = lrfbench::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "all" {
            return Ok(Self(None));
        }
        s.parse().map(|w| Self(Some(w)))
    }
}

impl std::fmt::Display for WorkloadSel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.0 {
            Some(w) => write!(f, "{w}"),
            None => f.write_str("all"),
        }
    }
}

impl WorkloadSel {
    fn workloads(self) -> Vec<Workload> {
        match self.0 {
            Some(w) => vec![Workload::new(w)],
            None => suite(),
        }
    }
}

fn write_records(
    dir: &Path,
    manifest: &RunManifest,
    records: impl IntoIterator<Item = RecordFile>,
) -> Result<usize> {
    let mut n = 0;
    for rf in records {
        let path = dir.join(record_file_name(&rf.label, &rf.record));
        io::write_json(&path, &manifest.stamp(rf))?;
        n += 1;
    }
    Ok(n)
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let cfg: RunConfig = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("malformed config {}", p.display()))?
        }
        None => RunConfig::default(),
    };
    let config = match cfg.optimizer {
        Some(c) if c.algorithm() != a.algo => {
            bail!("config is for {} but --algo is {}", c.algorithm(), a.algo)
        }
        Some(c) => c,
        None if a.horizon.is_some() => scheduled_config(a.algo),
        None => naive_config(a.algo),
    };
    let schedule = match a.horizon {
        Some(h) => ScheduleSpec::warmup_cosine(cfg.warmup.unwrap_or(a.warmup), h),
        None => ScheduleSpec::constant(),
    };
    let workloads = a.workload.workloads();

    let mut command = vec![
        "run".to_string(),
        format!("--algo={}", a.algo),
        format!("--workload={}", a.workload),
        format!("--seed={}", a.seed),
        format!("--schedule={}", serde_json::to_string(&schedule)?),
        format!("--optimizer={}", serde_json::to_string(&config)?),
    ];
    command.push(format!("--weight-decay={}", cfg.weight_decay.unwrap_or(0.0)));
    command.push(format!("--dropout={}", cfg.dropout));
    command.push(format!("--label-smoothing={}", cfg.label_smoothing));
    let full = suite();
    let manifest = RunManifest::new(command, &full, vec![a.seed]);
    let out = io::output_dir(a.out.as_deref());

    let mut files = Vec::new();
    for w in &workloads {
        let spec = TrialSpec {
            config: config.clone(),
            schedule,
            weight_decay: cfg.weight_decay.unwrap_or(0.0),
            knobs: RegularizerKnobs { dropout: cfg.dropout, label_smoothing: cfg.label_smoothing },
            workload: w.id,
            seed: a.seed,
        };
        let record = run_trial(&spec)?;
        println!(
            "{} {}: steps_to_target={} final_metric={:.6} target={:.6}{}",
            a.algo,
            w.id,
            record.steps_to_target.map_or("UNREACHED".to_string(), |s| s.to_string()),
            record.final_metric,
            record.target,
            if record.aborted { " (aborted)" } else { "" }
        );
        files.push(RecordFile { label: config_label(&spec), record });
    }
    io::write_json(&out.join(MANIFEST_FILE), &manifest)?;
    let n = write_records(&out.join("records"), &manifest, files)?;
    println!("wrote {n} record(s) to {}", out.join("records").display());
    Ok(())
}

fn cmd_search(a: SearchArgs) -> Result<()> {
    let plan = CalibrationPlan {
        algorithms: a.algo.clone(),
        horizons: a.horizons.clone(),
        points: a.points,
        final_seeds: a.seeds,
        shortlist_size: a.shortlist,
        stream_seed: a.stream_seed,
        tau_max: a.tau_max,
        preset: a.preset,
    };
    plan.validate()?;
    let workloads = if a.workloads.is_empty() {
        suite()
    } else {
        a.workloads.iter().map(|&w| Workload::new(w)).collect()
    };
    let command = vec!["search".to_string(), serde_json::to_string(&plan)?, {
        let names: Vec<&str> = workloads.iter().map(Workload::name).collect();
        format!("--workloads={}", names.join(","))
    }];
    let manifest = RunManifest::new(command, &workloads, vec![plan.stream_seed]);
    let out = io::output_dir(a.out.as_deref());

    let result = calibrate(&plan, &workloads)?;
    let report = &result.report;
    print!("{report}");
    for s in report.shortlists.iter().filter(|s| s.flagged) {
        eprintln!(
            "warning: fewer than {} viable points for {} at horizon {}",
            plan.shortlist_size, s.algorithm, s.horizon
        );
    }

    io::write_json(&out.join(MANIFEST_FILE), &manifest)?;
    let sweep = result.sweep.iter().flat_map(|e| {
        let label = e.label();
        e.records.iter().map(move |r| RecordFile { label: label.clone(), record: r.clone() })
    });
    let n_sweep = write_records(&out.join("records").join("sweep"), &manifest, sweep)?;
    let fin = result
        .final_records
        .iter()
        .map(|r| RecordFile { label: r.label.clone(), record: r.record.clone() });
    let n_final = write_records(&out.join("records").join("final"), &manifest, fin)?;
    let body = SearchOutput {
        stream_seed: plan.stream_seed,
        suite_digest: &manifest.suite_digest,
        report,
    };
    io::write_json(&out.join("calibration_report.json"), &manifest.stamp(body))?;
    println!(
        "wrote calibration report and {} record(s) to {}",
        n_sweep + n_final,
        out.display()
    );
    Ok(())
}

fn cmd_score(a: ScoreArgs) -> Result<()> {
    let table = match (&a.input.records, &a.input.table) {
        (Some(dir), _) => io::records_table(&io::load_records(dir)?)?,
        (None, Some(csv)) => {
            let text = fs::read_to_string(csv).with_context(|| format!("reading {}", csv.display()))?;
            TimeTable::from_csv(&text)?
        }
        (None, None) => unreachable!("clap enforces one input"),
    };
    let report = ScoreReport::build(&table, a.tau_max)?;
    // The table content, not its location, identifies the run.
    let command = vec![
        "score".to_string(),
        format!("--tau-max={}", a.tau_max),
        format!("--table-digest={}", io::sha256_hex(table.to_csv().as_bytes())),
    ];
    let manifest = RunManifest::new(command, &suite(), vec![]);
    let out = io::output_dir(a.out.as_deref());

    println!("{:<32} {:>7} {:>8}", "algorithm", "score", "reached");
    for s in &report.algorithms {
        println!("{:<32} {:>7.4} {:>5}/{}", s.algorithm, s.score, s.reached_count, table.n_workloads());
    }
    io::write_json(&out.join(MANIFEST_FILE), &manifest)?;
    io::write_json(&out.join("score_report.json"), &manifest.stamp(&report))?;
    io::atomic_write(&out.join("time_table.csv"), table.to_csv().as_bytes())?;
    for p in profiles(&table) {
        let name = format!("{}.csv", sanitize(&p.algorithm));
        io::atomic_write(&out.join("profiles").join(name), p.to_csv().as_bytes())?;
    }
    println!("wrote score report to {}", out.display());
    Ok(())
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.@#".contains(c) { c } else { '_' })
        .collect()
}

fn cmd_suite(a: SuiteArgs) -> Result<()> {
    let workloads = suite();
    let manifest = RunManifest::new(vec!["suite".to_string()], &workloads, vec![]);
    #[derive(Serialize)]
    struct SuiteListing<'a> {
        suite_digest: &'a str,
        workloads: Vec<lrfbench::workloads::WorkloadDescriptor>,
    }
    let listing = SuiteListing {
        suite_digest: &manifest.suite_digest,
        workloads: io::suite_descriptors(&workloads),
    };
    print!("{}", io::to_json(&listing)?);
    if a.derive_targets {
        let derivation = derive_targets(&OracleBudget::default())?;
        let mut mismatch = false;
        for (run, frozen) in derivation.runs.iter().zip(FROZEN_TARGETS) {
            let same = run.target == frozen;
            mismatch |= !same;
            eprintln!(
                "{:<20} derived {:.6} frozen {:.6} (best lr {}, seed {}){}",
                run.workload,
                run.target,
                frozen,
                run.best_lr,
                run.best_seed,
                if same { "" } else { "  MISMATCH" }
            );
        }
        let out = io::output_dir(a.out.as_deref());
        io::write_json(&out.join(MANIFEST_FILE), &manifest)?;
        io::write_json(&out.join("targets.json"), &manifest.stamp(&derivation))?;
        if mismatch {
            bail!("derived targets differ from the frozen suite targets");
        }
    }
    Ok(())
}
