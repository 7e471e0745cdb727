//! Per-experiment statistics over the replicates of a campaign.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use aego::strategies::StopReason;
use serde::{Deserialize, Serialize};

use crate::campaign::StrategyName;
use crate::error::{IoContext, Result};
use crate::runner::{ReplicateRecord, TimingRecord};

/// Mean and sample standard deviation; the deviation is 0 for fewer than two values.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn mean_sd(xs: &[f64]) -> Option<MeanSd> {
    (!xs.is_empty()).then(|| MeanSd {
        mean: mean(xs),
        sd: sample_sd(xs),
    })
}

/// Statistics over the successful replicates of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub spec_id: String,
    pub function: String,
    pub strategy: StrategyName,
    pub q: usize,
    pub pool_size: Option<usize>,
    pub initial_size: usize,
    /// Successful replicates.
    pub replicates: usize,
    pub failed: usize,
    /// Successful replicates that met their target gap.
    pub reached: usize,
    pub stages: Option<MeanSd>,
    pub stages_median: Option<f64>,
    pub evaluations: Option<MeanSd>,
    pub best: Option<MeanSd>,
    pub fit_secs: Option<MeanSd>,
    pub select_secs: Option<MeanSd>,
    /// Fit plus selection.
    pub selection_secs: Option<MeanSd>,
    pub total_secs: Option<MeanSd>,
}

pub const CSV_HEADER: &str = "spec_id,function,strategy,q,pool_size,initial_size,replicates,failed,reached,\
stages_mean,stages_sd,stages_median,evaluations_mean,evaluations_sd,best_mean,best_sd,\
fit_secs_mean,fit_secs_sd,select_secs_mean,select_secs_sd,selection_secs_mean,selection_secs_sd,\
total_secs_mean,total_secs_sd";

/// One row per experiment, in order of first appearance. Timings are joined by
/// replicate id; timing columns only cover replicates that have a timing record.
pub fn summarize(records: &[ReplicateRecord], timings: &[TimingRecord]) -> Vec<SummaryRow> {
    let by_id: HashMap<&str, &TimingRecord> = timings.iter().map(|t| (t.id.as_str(), t)).collect();
    let mut order: Vec<&str> = Vec::new();
    let mut groups: HashMap<&str, Vec<&ReplicateRecord>> = HashMap::new();
    for r in records {
        let g = groups.entry(r.spec_id.as_str()).or_default();
        if g.is_empty() {
            order.push(r.spec_id.as_str());
        }
        g.push(r);
    }
    order
        .into_iter()
        .map(|spec| {
            let group = &groups[spec];
            let first = group[0];
            let ok: Vec<_> = group
                .iter()
                .filter(|r| r.is_ok())
                .filter_map(|r| r.record.as_ref().map(|rec| (r, rec)))
                .collect();
            let col = |f: &dyn Fn(&aego::RunRecord) -> f64| ok.iter().map(|(_, rec)| f(rec)).collect::<Vec<f64>>();
            let stages = col(&|r| r.stages.len() as f64);
            let evaluations = col(&|r| r.totals.evaluations as f64);
            let best = col(&|r| r.best_value);
            let t: Vec<&TimingRecord> = ok
                .iter()
                .filter_map(|(r, _)| by_id.get(r.id.as_str()).copied())
                .collect();
            let tcol = |f: &dyn Fn(&TimingRecord) -> f64| t.iter().map(|x| f(x)).collect::<Vec<f64>>();
            SummaryRow {
                spec_id: spec.to_string(),
                function: first.function.clone(),
                strategy: first.strategy,
                q: first.q,
                pool_size: first.pool_size,
                initial_size: first.initial_size,
                replicates: ok.len(),
                failed: group.len() - ok.len(),
                reached: ok
                    .iter()
                    .filter(|(_, r)| r.stop_reason == StopReason::TargetReached)
                    .count(),
                stages: mean_sd(&stages),
                stages_median: (!stages.is_empty()).then(|| median(&stages)),
                evaluations: mean_sd(&evaluations),
                best: mean_sd(&best),
                fit_secs: mean_sd(&tcol(&|x| x.fit_secs)),
                select_secs: mean_sd(&tcol(&|x| x.select_secs)),
                selection_secs: mean_sd(&tcol(&|x| x.selection_secs())),
                total_secs: mean_sd(&tcol(&|x| x.total_secs())),
            }
        })
        .collect()
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn pair(out: &mut String, v: Option<MeanSd>) {
    let _ = write!(out, ",{},{}", opt(v.map(|m| m.mean)), opt(v.map(|m| m.sd)));
}

impl SummaryRow {
    /// CSV line in [`CSV_HEADER`] order. Floats use the shortest representation
    /// that parses back to the same value; missing statistics are empty.
    pub fn csv_line(&self) -> String {
        let mut s = format!(
            "{},{},{},{},{},{},{},{},{}",
            self.spec_id,
            self.function,
            self.strategy.as_str(),
            self.q,
            opt(self.pool_size),
            self.initial_size,
            self.replicates,
            self.failed,
            self.reached
        );
        pair(&mut s, self.stages);
        let _ = write!(s, ",{}", opt(self.stages_median));
        for v in [
            self.evaluations,
            self.best,
            self.fit_secs,
            self.select_secs,
            self.selection_secs,
            self.total_secs,
        ] {
            pair(&mut s, v);
        }
        s
    }
}

pub fn write_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut text = String::from(CSV_HEADER);
    text.push('\n');
    for r in rows {
        text.push_str(&r.csv_line());
        text.push('\n');
    }
    std::fs::write(path, text).at(path)
}
