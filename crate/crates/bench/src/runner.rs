//! Campaign execution and the raw result files.
//!
//! An output directory holds
//! * `runs.jsonl`: one [`ReplicateRecord`] per line, wall-clock times removed,
//!   in campaign order, so reruns with the same seed are byte-identical;
//! * `timings.jsonl`: one [`TimingRecord`] per line;
//! * `summary.csv`: one [`SummaryRow`] per experiment.
//!
//! Lines are appended as replicates finish and the files are rewritten in
//! canonical order at the end. Rerunning into the same directory skips
//! replicates that already succeeded.

use std::collections::{HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use aego::qmc;
use aego::strategies::{run_accelerated_ego, run_constant_liar, run_ego, RunFailure, StageTiming};
use aego::{Design, RunRecord, SeededRng};
use serde::{Deserialize, Serialize};

use crate::campaign::{Campaign, Experiment, StrategyName};
use crate::error::{BenchError, IoContext, Result};
use crate::summary::{self, SummaryRow};

pub const RUNS_FILE: &str = "runs.jsonl";
pub const TIMINGS_FILE: &str = "timings.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Failed,
}

/// One replicate of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub id: String,
    pub spec_id: String,
    pub replicate: usize,
    pub seed: u64,
    pub function: String,
    pub strategy: StrategyName,
    pub q: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool_size: Option<usize>,
    pub initial_size: usize,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Missing only when the run never started, e.g. the initial design failed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record: Option<RunRecord>,
}

impl ReplicateRecord {
    pub fn is_ok(&self) -> bool {
        self.status == Status::Ok
    }
}

/// Wall-clock measurements of one replicate, kept apart from the raw records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub id: String,
    pub fit_secs: f64,
    pub select_secs: f64,
    pub eval_secs: f64,
    pub stages: Vec<StageTiming>,
}

impl TimingRecord {
    /// Model fitting plus batch selection.
    pub fn selection_secs(&self) -> f64 {
        self.fit_secs + self.select_secs
    }

    pub fn total_secs(&self) -> f64 {
        self.fit_secs + self.select_secs + self.eval_secs
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub out_dir: PathBuf,
    /// Replicates run concurrently; at least 1.
    pub parallelism: usize,
    /// Overrides the campaign's base seed.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct CampaignOutcome {
    /// All replicates in campaign order.
    pub replicates: Vec<ReplicateRecord>,
    pub timings: Vec<TimingRecord>,
    pub summary: Vec<SummaryRow>,
    /// Replicates taken over from an earlier run.
    pub resumed: usize,
}

impl CampaignOutcome {
    pub fn failed(&self) -> usize {
        self.replicates.iter().filter(|r| !r.is_ok()).count()
    }

    pub fn timing(&self, id: &str) -> Option<&TimingRecord> {
        self.timings.iter().find(|t| t.id == id)
    }
}

/// A finished replicate's `runs.jsonl` line and optional `timings.jsonl` line.
type Lines = (String, Option<String>);

struct Job<'a> {
    order: usize,
    experiment: &'a Experiment,
    replicate: usize,
    seed: u64,
}

/// Runs one replicate: seeded initial design, then the strategy.
pub fn run_replicate(exp: &Experiment, replicate: usize, seed: u64) -> (ReplicateRecord, Option<TimingRecord>) {
    let mut rec = ReplicateRecord {
        id: exp.replicate_id(replicate),
        spec_id: exp.id.clone(),
        replicate,
        seed,
        function: exp.function.clone(),
        strategy: exp.strategy,
        q: exp.q,
        pool_size: exp.pool_size(),
        initial_size: exp.initial_size,
        status: Status::Ok,
        error: None,
        record: None,
    };
    let run = start(exp, seed).map(|(objective, design, rng)| {
        let result = match exp.strategy {
            StrategyName::Ego => run_ego(&objective, &design, &exp.stop, &exp.options, &rng),
            StrategyName::Accelerated => {
                let pool = exp.pool.as_ref().expect("accelerated experiments carry a pool");
                run_accelerated_ego(&objective, &design, pool, exp.q, &exp.stop, &exp.options, &rng)
            }
            StrategyName::ConstantLiar => {
                run_constant_liar(&objective, &design, exp.q, exp.lie, &exp.stop, &exp.options, &rng)
            }
        };
        result
    });
    let mut record = match run {
        Ok(Ok(r)) => r,
        Ok(Err(RunFailure { error, record })) => {
            rec.status = Status::Failed;
            rec.error = Some(error.to_string());
            *record
        }
        Err(e) => {
            rec.status = Status::Failed;
            rec.error = Some(e.to_string());
            return (rec, None);
        }
    };
    let timing = record.totals.timing.map(|t| TimingRecord {
        id: rec.id.clone(),
        fit_secs: t.fit_secs,
        select_secs: t.select_secs,
        eval_secs: t.eval_secs,
        stages: record.stages.iter().map(|s| s.timing.unwrap_or_default()).collect(),
    });
    record.strip_timings();
    rec.record = Some(record);
    (rec, timing)
}

fn start(exp: &Experiment, seed: u64) -> Result<(aego::Objective, Design, SeededRng)> {
    let rng = SeededRng::new(seed);
    let objective = exp.objective()?;
    let init = qmc::lhs_initial_design(exp.initial_size, &exp.domain, &mut rng.split(0))?;
    let design = Design::evaluate(&exp.domain, init.points(), &objective)?;
    Ok((objective, design, rng))
}

/// Append-only sink; one writer at a time.
struct Sink {
    path: PathBuf,
    file: Mutex<File>,
}

impl Sink {
    fn open(path: PathBuf) -> Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(&path).at(&path)?;
        Ok(Sink {
            path,
            file: Mutex::new(file),
        })
    }

    fn append(&self, line: &str) -> Result<()> {
        let mut f = self.file.lock().unwrap();
        writeln!(f, "{line}").and_then(|_| f.flush()).at(&self.path)
    }
}

fn to_line<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("records serialize")
}

/// Reads a JSON-lines file, skipping a torn final line left by an interrupted run.
fn read_lines<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<(String, T)>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let file = File::open(path).at(path)?;
    let lines: Vec<String> = BufReader::new(file).lines().collect::<std::io::Result<_>>().at(path)?;
    let mut out = Vec::new();
    let last = lines.len();
    for (i, line) in lines.into_iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(v) => out.push((line, v)),
            Err(_) if i + 1 == last => log::warn!("{}: ignoring incomplete last line", path.display()),
            Err(e) => {
                return Err(BenchError::Record {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(out)
}

pub fn read_runs(dir: &Path) -> Result<Vec<ReplicateRecord>> {
    Ok(read_lines(&dir.join(RUNS_FILE))?.into_iter().map(|(_, r)| r).collect())
}

pub fn read_timings(dir: &Path) -> Result<Vec<TimingRecord>> {
    Ok(read_lines(&dir.join(TIMINGS_FILE))?
        .into_iter()
        .map(|(_, r)| r)
        .collect())
}

fn rewrite(path: &Path, lines: &[String]) -> Result<()> {
    let tmp = path.with_extension("jsonl.tmp");
    let mut text = String::new();
    for l in lines {
        text.push_str(l);
        text.push('\n');
    }
    fs::write(&tmp, text).at(&tmp)?;
    fs::rename(&tmp, path).at(path)
}

/// Runs every replicate of `campaign` not already completed in `cfg.out_dir`.
/// Failed replicates are recorded and do not stop the campaign.
pub fn run_campaign(campaign: &Campaign, cfg: &RunConfig) -> Result<CampaignOutcome> {
    let experiments = campaign.resolve()?;
    let base_seed = cfg.seed.unwrap_or(campaign.base_seed);
    fs::create_dir_all(&cfg.out_dir).at(&cfg.out_dir)?;
    let runs_path = cfg.out_dir.join(RUNS_FILE);
    let timings_path = cfg.out_dir.join(TIMINGS_FILE);

    let mut jobs = Vec::new();
    for exp in &experiments {
        for r in 0..exp.repetitions {
            jobs.push(Job {
                order: jobs.len(),
                experiment: exp,
                replicate: r,
                seed: base_seed.wrapping_add(r as u64),
            });
        }
    }

    // completed replicates from an earlier run with the same seed
    let wanted: HashMap<String, u64> = jobs
        .iter()
        .map(|j| (j.experiment.replicate_id(j.replicate), j.seed))
        .collect();
    let mut done: HashMap<String, String> = HashMap::new();
    for (line, r) in read_lines::<ReplicateRecord>(&runs_path)? {
        if r.is_ok() && wanted.get(&r.id) == Some(&r.seed) {
            done.insert(r.id, line);
        }
    }
    let mut done_timings: HashMap<String, String> = HashMap::new();
    for (line, t) in read_lines::<TimingRecord>(&timings_path)? {
        if done.contains_key(&t.id) {
            done_timings.insert(t.id, line);
        }
    }
    let resumed = done.len();
    if resumed > 0 {
        log::info!("resuming: {resumed} replicates already complete");
    }

    let runs_sink = Sink::open(runs_path.clone())?;
    let timings_sink = Sink::open(timings_path.clone())?;
    let pending: Vec<&Job> = jobs
        .iter()
        .filter(|j| !done.contains_key(&j.experiment.replicate_id(j.replicate)))
        .collect();
    let results: Mutex<Vec<Option<Lines>>> = Mutex::new(vec![None; jobs.len()]);
    let next = AtomicUsize::new(0);
    let sink_error: Mutex<Option<BenchError>> = Mutex::new(None);

    let worker = || loop {
        let i = next.fetch_add(1, Ordering::SeqCst);
        let Some(job) = pending.get(i) else { break };
        let (rec, timing) = run_replicate(job.experiment, job.replicate, job.seed);
        match &rec.error {
            Some(e) => log::warn!("{} failed: {e}", rec.id),
            None => log::info!(
                "{} done: {} stages, best {}",
                rec.id,
                rec.record.as_ref().map_or(0, |r| r.stages.len()),
                rec.record.as_ref().map_or(f64::NAN, |r| r.best_value)
            ),
        }
        let run_line = to_line(&rec);
        let timing_line = timing.as_ref().map(to_line);
        let appended = runs_sink
            .append(&run_line)
            .and_then(|_| timing_line.as_deref().map_or(Ok(()), |l| timings_sink.append(l)));
        if let Err(e) = appended {
            sink_error.lock().unwrap().get_or_insert(e);
        }
        results.lock().unwrap()[job.order] = Some((run_line, timing_line));
    };
    let threads = cfg.parallelism.max(1).min(pending.len().max(1));
    std::thread::scope(|s| {
        for _ in 1..threads {
            s.spawn(worker);
        }
        worker();
    });
    if let Some(e) = sink_error.into_inner().unwrap() {
        return Err(e);
    }
    drop(runs_sink);
    drop(timings_sink);

    let results = results.into_inner().unwrap();
    let mut run_lines = Vec::with_capacity(jobs.len());
    let mut timing_lines = Vec::new();
    for (job, res) in jobs.iter().zip(results) {
        let id = job.experiment.replicate_id(job.replicate);
        match res {
            Some((run, timing)) => {
                run_lines.push(run);
                timing_lines.extend(timing);
            }
            None => {
                run_lines.push(done.remove(&id).expect("skipped replicates were complete"));
                timing_lines.extend(done_timings.remove(&id));
            }
        }
    }
    rewrite(&runs_path, &run_lines)?;
    rewrite(&timings_path, &timing_lines)?;

    let replicates: Vec<ReplicateRecord> = run_lines
        .iter()
        .map(|l| serde_json::from_str(l).expect("lines were written from records"))
        .collect();
    let timings: Vec<TimingRecord> = timing_lines
        .iter()
        .map(|l| serde_json::from_str(l).expect("lines were written from records"))
        .collect();
    let summary = summary::summarize(&replicates, &timings);
    summary::write_csv(&cfg.out_dir.join(SUMMARY_FILE), &summary)?;
    Ok(CampaignOutcome {
        replicates,
        timings,
        summary,
        resumed,
    })
}

/// Recomputes `summary.csv` from the raw files in `dir`.
pub fn summarize_dir(dir: &Path) -> Result<Vec<SummaryRow>> {
    let runs = read_runs(dir)?;
    let timings = read_timings(dir)?;
    // keep the last line per id in case an interrupted run left duplicates
    let mut seen = HashSet::new();
    let mut latest: Vec<ReplicateRecord> = runs.into_iter().rev().filter(|r| seen.insert(r.id.clone())).collect();
    latest.reverse();
    let rows = summary::summarize(&latest, &timings);
    summary::write_csv(&dir.join(SUMMARY_FILE), &rows)?;
    Ok(rows)
}
