//! Sequential loops: serial EGO, accelerated EGO and Constant Liar.
//!
//! Every stage refits the Kriging model by maximum likelihood, selects a
//! batch, evaluates it and appends it to the design. The per-stage random
//! streams are children of the run's [`SeededRng`], so a run is a pure
//! function of its inputs and seed.

use std::io::Write;
use std::time::Instant;

use log::debug;
use serde::{Deserialize, Serialize};

use crate::acquisition::{maximize_ei_ranked, EiCandidate, EiContext, MaximizeOptions};
use crate::design::{Design, Origin};
use crate::domain::Point;
use crate::error::{Error, Result};
use crate::kriging::{self, FitOptions, KernelFamily, KrigingModel};
use crate::objective::{EvalError, Objective};
use crate::qmc::{self, CandidatePool};
use crate::rng::SeededRng;
use crate::sir;

// child stream labels within a stage
const FIT_STREAM: u64 = 0;
const MAXIMIZE_STREAM: u64 = 1;
const SHIFT_STREAM: u64 = 2;
const RESAMPLE_STREAM: u64 = 3;
const LIE_STREAM_BASE: u64 = 100;

/// Consecutive duplicate maximizers tolerated by the Constant Liar inner loop.
pub const LIAR_RETRIES: usize = 3;

/// `|best - minimum| < epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetGap {
    pub minimum: f64,
    pub epsilon: f64,
}

/// Any-of combination of stopping conditions, checked before every stage.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetGap>,
    /// Total evaluations, initial design included.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_evaluations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_stages: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    TargetReached,
    BudgetExhausted,
    MaxStages,
    Failed,
}

impl StopRule {
    pub fn new() -> Self {
        StopRule::default()
    }

    pub fn target_gap(mut self, minimum: f64, epsilon: f64) -> Self {
        self.target = Some(TargetGap { minimum, epsilon });
        self
    }

    pub fn max_evaluations(mut self, n: usize) -> Self {
        self.max_evaluations = Some(n);
        self
    }

    pub fn max_stages(mut self, n: usize) -> Self {
        self.max_stages = Some(n);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.target.is_none() && self.max_evaluations.is_none() && self.max_stages.is_none() {
            return Err(Error::InvalidArgument(
                "a stop rule needs at least one condition".into(),
            ));
        }
        if let Some(t) = self.target {
            if !(t.epsilon > 0.0 && t.minimum.is_finite()) {
                return Err(Error::InvalidArgument(format!("invalid target gap {t:?}")));
            }
        }
        Ok(())
    }

    fn check(&self, best: f64, evaluations: usize, stages: usize) -> Option<StopReason> {
        if let Some(t) = self.target {
            if (best - t.minimum).abs() < t.epsilon {
                return Some(StopReason::TargetReached);
            }
        }
        if self.max_evaluations.is_some_and(|m| evaluations >= m) {
            return Some(StopReason::BudgetExhausted);
        }
        if self.max_stages.is_some_and(|m| stages >= m) {
            return Some(StopReason::MaxStages);
        }
        None
    }
}

/// The response assigned to pending points by Constant Liar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lie {
    Min,
    Max,
    Value(f64),
}

impl Lie {
    pub fn value(&self, responses: &[f64]) -> f64 {
        match self {
            Lie::Min => responses.iter().cloned().fold(f64::INFINITY, f64::min),
            Lie::Max => responses.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            Lie::Value(c) => *c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StrategyKind {
    Ego,
    Accelerated { q: usize, pool_size: usize },
    ConstantLiar { q: usize, lie: Lie },
}

impl StrategyKind {
    pub fn batch_size(&self) -> usize {
        match self {
            StrategyKind::Ego => 1,
            StrategyKind::Accelerated { q, .. } | StrategyKind::ConstantLiar { q, .. } => *q,
        }
    }
}

/// Model-fitting and acquisition settings shared by all strategies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StrategyOptions {
    pub kernel: KernelFamily,
    pub restarts: usize,
    pub mle_evals: Option<usize>,
    /// Seed the likelihood search with the previous stage's lengthscales too.
    pub warm_start: bool,
    pub maximize: MaximizeOptions,
    /// Evaluate the points of a batch concurrently.
    pub parallel_evaluations: bool,
}

impl Default for StrategyOptions {
    fn default() -> Self {
        StrategyOptions {
            kernel: KernelFamily::Gaussian,
            restarts: 10,
            mle_evals: None,
            warm_start: true,
            maximize: MaximizeOptions::default(),
            parallel_evaluations: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StageTiming {
    /// Likelihood maximization.
    pub fit_secs: f64,
    /// Batch selection given the fitted model.
    pub select_secs: f64,
    pub eval_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageResult {
    pub stage: usize,
    pub lengthscales: Vec<f64>,
    pub argmax: Point,
    pub argmax_ei: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub resampled: Vec<Point>,
    /// Normalized weights of the resampled points at the time of the draw.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub resample_weights: Vec<f64>,
    #[serde(default)]
    pub degenerate_weights: bool,
    /// Largest EI over the randomized pool.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool_max_ei: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lie: Option<f64>,
    /// Evaluated batch, in append order.
    pub points: Vec<Point>,
    pub responses: Vec<f64>,
    pub best: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<StageTiming>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RunTiming {
    pub fit_secs: f64,
    pub select_secs: f64,
    pub eval_secs: f64,
}

impl RunTiming {
    /// Model fitting plus batch selection.
    pub fn selection_secs(&self) -> f64 {
        self.fit_secs + self.select_secs
    }

    pub fn total_secs(&self) -> f64 {
        self.fit_secs + self.select_secs + self.eval_secs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub stages: usize,
    pub evaluations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<RunTiming>,
}

/// Full trace of one strategy run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub objective: String,
    pub strategy: StrategyKind,
    pub options: StrategyOptions,
    pub stop: StopRule,
    pub seed: u64,
    pub initial: Design,
    pub stages: Vec<StageResult>,
    pub stop_reason: StopReason,
    pub totals: Totals,
    pub best_value: f64,
    pub best_point: Point,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunRecord {
    /// Removes every wall-clock measurement, leaving only seed-determined data.
    pub fn strip_timings(&mut self) {
        self.totals.timing = None;
        for s in &mut self.stages {
            s.timing = None;
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    /// One row per stage: stage, batch size, argmax EI, best so far and timings.
    pub fn write_stage_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "stage,batch_size,argmax_ei,best,degenerate_weights,fit_secs,select_secs,eval_secs"
        )?;
        for s in &self.stages {
            let t = s.timing.unwrap_or_default();
            writeln!(
                out,
                "{},{},{:?},{:?},{},{:?},{:?},{:?}",
                s.stage,
                s.points.len(),
                s.argmax_ei,
                s.best,
                s.degenerate_weights,
                t.fit_secs,
                t.select_secs,
                t.eval_secs
            )?;
        }
        Ok(())
    }
}

/// A failed run: the error plus the trace up to the failure.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{error}")]
pub struct RunFailure {
    pub error: Error,
    pub record: Box<RunRecord>,
}

struct Selection {
    argmax: EiCandidate,
    resampled: Vec<sir::Draw>,
    degenerate_weights: bool,
    pool_max_ei: Option<f64>,
    lie: Option<f64>,
    /// points to evaluate with their origin, in append order
    batch: Vec<(Point, Origin)>,
}

struct StageInput<'a> {
    model: &'a KrigingModel,
    design: &'a Design,
    batch: usize,
    rng: &'a SeededRng,
    opts: &'a StrategyOptions,
}

fn first_new(candidates: Vec<EiCandidate>, design: &Design, tries: usize) -> Result<EiCandidate> {
    let available = candidates.len();
    candidates
        .into_iter()
        .take(tries)
        .find(|c| design.find_duplicate(&c.point).is_none())
        .ok_or(Error::PoolExhausted {
            requested: 1,
            available: available.saturating_sub(tries),
        })
}

fn select_ego(input: &StageInput<'_>) -> Result<Selection> {
    let ctx = EiContext::new(input.model);
    let ranked = maximize_ei_ranked(&ctx, &mut input.rng.split(MAXIMIZE_STREAM), &input.opts.maximize, &[]);
    let argmax = first_new(ranked, input.design, usize::MAX)?;
    Ok(Selection {
        batch: vec![(argmax.point.clone(), Origin::Argmax)],
        argmax,
        resampled: Vec::new(),
        degenerate_weights: false,
        pool_max_ei: None,
        lie: None,
    })
}

fn select_accelerated(input: &StageInput<'_>, pool: &CandidatePool) -> Result<Selection> {
    let ctx = EiContext::new(input.model);
    let shifted = qmc::random_shift(pool, &mut input.rng.split(SHIFT_STREAM));
    // the randomized pool is part of the scan set, so EI(argmax) >= max pool EI
    let ranked = maximize_ei_ranked(
        &ctx,
        &mut input.rng.split(MAXIMIZE_STREAM),
        &input.opts.maximize,
        &shifted.points,
    );
    let argmax = first_new(ranked, input.design, usize::MAX)?;
    let mut batch = vec![(argmax.point.clone(), Origin::Argmax)];
    let weighted = sir::weigh(&shifted, &ctx);
    let pool_max_ei = weighted.raw.iter().cloned().fold(0.0, f64::max);
    let (resampled, degenerate) = if input.batch > 1 {
        let mut exclusions = input.design.points().to_vec();
        exclusions.push(argmax.point.clone());
        let draws = sir::resample(
            &weighted,
            input.batch - 1,
            &mut input.rng.split(RESAMPLE_STREAM),
            &exclusions,
            input.design.domain(),
        )?;
        batch.extend(draws.iter().map(|d| (d.point.clone(), Origin::Resampled)));
        (draws, weighted.degenerate)
    } else {
        (Vec::new(), false)
    };
    Ok(Selection {
        argmax,
        resampled,
        degenerate_weights: degenerate,
        pool_max_ei: Some(pool_max_ei),
        lie: None,
        batch,
    })
}

fn select_constant_liar(input: &StageInput<'_>, lie: Lie) -> Result<Selection> {
    let lie_value = lie.value(input.design.responses());
    let lengthscales = input.model.kernel().lengthscales.clone();
    let mut augmented = input.design.clone();
    let mut model = input.model.clone();
    let mut batch = Vec::with_capacity(input.batch);
    let mut first: Option<EiCandidate> = None;
    for j in 0..input.batch {
        let ctx = EiContext::new(&model);
        let ranked = maximize_ei_ranked(
            &ctx,
            &mut input.rng.split(LIE_STREAM_BASE + j as u64),
            &input.opts.maximize,
            &[],
        );
        let pick = first_new(ranked, &augmented, LIAR_RETRIES)?;
        batch.push((pick.point.clone(), Origin::LiarReplaced));
        if j + 1 < input.batch {
            augmented.push(pick.point.clone(), lie_value, Origin::LiarReplaced)?;
            // same correlation parameters, refactorized with the lie appended
            model = KrigingModel::with_lengthscales(&augmented, input.opts.kernel, &lengthscales)?;
        }
        first.get_or_insert(pick);
    }
    Ok(Selection {
        argmax: first.expect("batch size is at least one"),
        resampled: Vec::new(),
        degenerate_weights: false,
        pool_max_ei: None,
        lie: Some(lie_value),
        batch,
    })
}

/// Evaluates a batch, one thread per point when `parallel`, results in input order.
fn evaluate_batch(objective: &Objective, points: &[Point], parallel: bool) -> Vec<std::result::Result<f64, EvalError>> {
    if parallel && points.len() > 1 {
        std::thread::scope(|scope| {
            let handles: Vec<_> = points
                .iter()
                .map(|p| scope.spawn(move || objective.evaluate(p)))
                .collect();
            handles
                .into_iter()
                .map(|h| {
                    h.join()
                        .unwrap_or_else(|_| Err(EvalError::Other("objective panicked".into())))
                })
                .collect()
        })
    } else {
        points.iter().map(|p| objective.evaluate(p)).collect()
    }
}

fn drive<F>(
    objective: &Objective,
    initial: &Design,
    kind: StrategyKind,
    stop: &StopRule,
    opts: &StrategyOptions,
    rng: &SeededRng,
    mut select: F,
) -> std::result::Result<RunRecord, RunFailure>
where
    F: FnMut(&StageInput<'_>) -> Result<Selection>,
{
    let batch_size = kind.batch_size();
    let mut record = RunRecord {
        objective: objective.name().to_string(),
        strategy: kind,
        options: opts.clone(),
        stop: stop.clone(),
        seed: rng.seed(),
        initial: initial.clone(),
        stages: Vec::new(),
        stop_reason: StopReason::Failed,
        totals: Totals {
            stages: 0,
            evaluations: initial.len(),
            timing: Some(RunTiming::default()),
        },
        best_value: initial.best_value().unwrap_or(f64::NAN),
        best_point: initial.best().map(|(p, _)| p.clone()).unwrap_or(Point::new(Vec::new())),
        error: None,
    };
    let fail = |mut record: RunRecord, error: Error| {
        record.stop_reason = StopReason::Failed;
        record.error = Some(error.to_string());
        Err(RunFailure {
            error,
            record: Box::new(record),
        })
    };

    if let Err(e) = stop.validate() {
        return fail(record, e);
    }
    if objective.dim() != initial.domain().dim() {
        let e = Error::DimensionMismatch {
            expected: initial.domain().dim(),
            got: objective.dim(),
        };
        return fail(record, e);
    }
    if initial.is_empty() {
        return fail(record, Error::TooFewPoints { needed: 2, have: 0 });
    }

    let mut design = initial.clone();
    let mut warm: Option<Vec<f64>> = None;
    let mut timing = RunTiming::default();
    loop {
        let best = design.best_value().expect("design is not empty");
        if let Some(reason) = stop.check(best, design.len(), record.stages.len()) {
            record.stop_reason = reason;
            break;
        }
        let stage = record.stages.len() + 1;
        let batch = match stop.max_evaluations {
            Some(m) => batch_size.min(m - design.len()),
            None => batch_size,
        };
        let stage_rng = rng.split(stage as u64);

        let t0 = Instant::now();
        let fit_opts = FitOptions {
            family: opts.kernel,
            restarts: opts.restarts,
            max_evals: opts.mle_evals,
            warm_start: if opts.warm_start { warm.clone() } else { None },
        };
        let model = match kriging::fit(&design, &fit_opts, &mut stage_rng.split(FIT_STREAM)) {
            Ok(m) => m,
            Err(e) => return fail(record, e),
        };
        let fit_secs = t0.elapsed().as_secs_f64();
        warm = Some(model.kernel().lengthscales.clone());

        let t1 = Instant::now();
        let input = StageInput {
            model: &model,
            design: &design,
            batch,
            rng: &stage_rng,
            opts,
        };
        let selection = match select(&input) {
            Ok(s) => s,
            Err(e) => return fail(record, e),
        };
        let select_secs = t1.elapsed().as_secs_f64();

        let t2 = Instant::now();
        let points: Vec<Point> = selection.batch.iter().map(|(p, _)| p.clone()).collect();
        let results = evaluate_batch(objective, &points, opts.parallel_evaluations);
        let eval_secs = t2.elapsed().as_secs_f64();
        record.totals.evaluations += points.len();

        let mut responses = Vec::with_capacity(points.len());
        for r in results {
            match r {
                Ok(y) => responses.push(y),
                Err(e) => return fail(record, e.into()),
            }
        }
        for ((p, origin), y) in selection.batch.iter().zip(&responses) {
            if let Err(e) = design.push(p.clone(), *y, *origin) {
                return fail(record, e);
            }
        }

        let best = design.best_value().expect("design is not empty");
        debug!("stage {stage}: batch {} best {best}", points.len());
        timing.fit_secs += fit_secs;
        timing.select_secs += select_secs;
        timing.eval_secs += eval_secs;
        record.stages.push(StageResult {
            stage,
            lengthscales: model.kernel().lengthscales.clone(),
            argmax: selection.argmax.point,
            argmax_ei: selection.argmax.ei,
            resample_weights: selection.resampled.iter().map(|d| d.weight).collect(),
            resampled: selection.resampled.into_iter().map(|d| d.point).collect(),
            degenerate_weights: selection.degenerate_weights,
            pool_max_ei: selection.pool_max_ei,
            lie: selection.lie,
            points,
            responses,
            best,
            timing: Some(StageTiming {
                fit_secs,
                select_secs,
                eval_secs,
            }),
        });
        record.totals.stages = record.stages.len();
        record.totals.timing = Some(timing);
        let (p, y) = design.best().expect("design is not empty");
        record.best_point = p.clone();
        record.best_value = y;
    }
    Ok(record)
}

/// Serial EGO: one EI maximizer per stage.
pub fn run_ego(
    objective: &Objective,
    initial: &Design,
    stop: &StopRule,
    opts: &StrategyOptions,
    rng: &SeededRng,
) -> std::result::Result<RunRecord, RunFailure> {
    drive(objective, initial, StrategyKind::Ego, stop, opts, rng, select_ego)
}

/// Accelerated EGO: per stage the EI maximizer plus `q - 1` points resampled
/// from a fresh random shift of `pool` with EI-proportional weights.
/// With `q = 1` this is serial EGO.
pub fn run_accelerated_ego(
    objective: &Objective,
    initial: &Design,
    pool: &CandidatePool,
    q: usize,
    stop: &StopRule,
    opts: &StrategyOptions,
    rng: &SeededRng,
) -> std::result::Result<RunRecord, RunFailure> {
    let kind = StrategyKind::Accelerated {
        q,
        pool_size: pool.len(),
    };
    if q == 1 {
        return drive(objective, initial, kind, stop, opts, rng, select_ego);
    }
    let check = if q == 0 {
        Err(Error::InvalidArgument("batch size must be at least 1".into()))
    } else if pool.len() < q {
        Err(Error::PoolExhausted {
            requested: q,
            available: pool.len(),
        })
    } else if pool.domain() != initial.domain() {
        Err(Error::InvalidArgument(
            "pool and design live in different domains".into(),
        ))
    } else {
        Ok(())
    };
    if let Err(e) = check {
        return drive(objective, initial, kind, stop, opts, rng, |_| Err(e.clone()));
    }
    drive(objective, initial, kind, stop, opts, rng, |input| {
        select_accelerated(input, pool)
    })
}

/// Constant Liar: `q` sequential EI maximizations per stage, each pending
/// point temporarily given the response `lie` with the stage's lengthscales
/// held fixed.
pub fn run_constant_liar(
    objective: &Objective,
    initial: &Design,
    q: usize,
    lie: Lie,
    stop: &StopRule,
    opts: &StrategyOptions,
    rng: &SeededRng,
) -> std::result::Result<RunRecord, RunFailure> {
    let kind = StrategyKind::ConstantLiar { q, lie };
    if q == 0 {
        let e = Error::InvalidArgument("batch size must be at least 1".into());
        return drive(objective, initial, kind, stop, opts, rng, |_| Err(e.clone()));
    }
    drive(objective, initial, kind, stop, opts, rng, |input| {
        select_constant_liar(input, lie)
    })
}
