//! Acceptance criteria, run in sequence so that the timing comparison is not
//! disturbed by other tests. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Pass criterion ids (`C1`, `C4`, ...) as arguments to
//! run a subset.

use std::collections::BTreeSet;
use std::path::Path;
use std::time::Instant;

use aego::acquisition::{expected_improvement, EiContext};
use aego::kriging::{self, FitOptions};
use aego::qmc::{self, CandidatePool, Generator};
use aego::sir::{self, WeightedPool};
use aego::{testfns, Design, Domain, Point, SeededRng};
use aego_bench::runner::{run_campaign, RunConfig};
use aego_bench::{Campaign, CampaignOutcome, SummaryRow};
use anyhow::{bail, ensure, Context, Result};
use rand::Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Result<Verdict> {
    Ok(Verdict { pass, detail })
}

fn campaign(reps: usize, experiments: &[String]) -> Campaign {
    let mut text = format!("base_seed = 0\nrepetitions = {reps}\n");
    for e in experiments {
        text.push_str("\n[[experiment]]\n");
        text.push_str(e);
        text.push('\n');
    }
    Campaign::from_toml_str(&text).expect("acceptance campaigns are valid")
}

fn run_in(c: &Campaign, dir: &Path, parallelism: usize) -> Result<CampaignOutcome> {
    let out = run_campaign(
        c,
        &RunConfig {
            out_dir: dir.to_path_buf(),
            parallelism,
            seed: None,
        },
    )?;
    if let Some(r) = out.replicates.iter().find(|r| !r.is_ok()) {
        bail!("replicate {} failed: {}", r.id, r.error.as_deref().unwrap_or("?"));
    }
    Ok(out)
}

fn run(c: &Campaign) -> Result<CampaignOutcome> {
    let dir = tempfile::tempdir()?;
    run_in(c, dir.path(), 1)
}

fn row<'a>(out: &'a CampaignOutcome, id: &str) -> &'a SummaryRow {
    out.summary
        .iter()
        .find(|r| r.spec_id == id)
        .expect("summary row exists")
}

fn median_of(r: &SummaryRow) -> f64 {
    r.stages_median.unwrap_or(f64::NAN)
}

fn mean_of(r: &SummaryRow) -> f64 {
    r.stages.map_or(f64::NAN, |s| s.mean)
}

fn target_run(id: &str, function: &str, strategy: &str, q: usize, eps: f64, cap: usize, extra: &str) -> String {
    format!(
        "id = \"{id}\"\nfunction = \"{function}\"\nstrategy = \"{strategy}\"\nq = {q}\nepsilon = {eps:e}\nmax_stages = {cap}\n{extra}"
    )
}

fn branin_convergence() -> Result<Verdict> {
    let c = campaign(
        25,
        &[
            target_run("ego", "branin", "ego", 1, 1e-2, 150, "initial_size = 21"),
            target_run(
                "acc12",
                "branin",
                "accelerated",
                12,
                1e-2,
                80,
                "initial_size = 21\npool_size = 100",
            ),
        ],
    );
    let out = run(&c)?;
    let (ego, acc) = (row(&out, "ego"), row(&out, "acc12"));
    verdict(
        median_of(ego) <= 25.0 && median_of(acc) <= 5.0,
        format!(
            "EGO median {} (mean {:.2}, limit 25); accelerated q=12 median {} (mean {:.2}, limit 5); reached {}/25 and {}/25",
            median_of(ego),
            mean_of(ego),
            median_of(acc),
            mean_of(acc),
            ego.reached,
            acc.reached
        ),
    )
}

fn pool_size_insensitivity() -> Result<Verdict> {
    let exps: Vec<String> = [50, 100, 150]
        .iter()
        .map(|m| {
            target_run(
                &format!("m{m}"),
                "ackley2",
                "accelerated",
                5,
                1e-2,
                80,
                &format!("initial_size = 21\npool_size = {m}\nkernel = \"matern52\""),
            )
        })
        .collect();
    let out = run(&campaign(25, &exps))?;
    let medians: Vec<f64> = out.summary.iter().map(median_of).collect();
    let spread = medians.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - medians.iter().cloned().fold(f64::INFINITY, f64::min);
    let means: Vec<String> = out.summary.iter().map(|r| format!("{:.2}", mean_of(r))).collect();
    verdict(
        spread <= 3.0,
        format!(
            "medians {medians:?} for m = 50, 100, 150 (means {}); spread {spread} (limit 3)",
            means.join(", ")
        ),
    )
}

fn batch_speedup() -> Result<Verdict> {
    let c = campaign(
        25,
        &[
            target_run("ego", "sin2", "ego", 1, 1e-2, 150, ""),
            target_run("acc4", "sin2", "accelerated", 4, 1e-2, 80, ""),
        ],
    );
    let out = run(&c)?;
    let (ego, acc) = (row(&out, "ego"), row(&out, "acc4"));
    let ratio = mean_of(ego) / mean_of(acc);
    verdict(
        (1.5..=4.0).contains(&ratio),
        format!(
            "mean stages EGO {:.2} / accelerated q=4 {:.2} = {ratio:.2} (range [1.5, 4]); reached {}/25 and {}/25",
            mean_of(ego),
            mean_of(acc),
            ego.reached,
            acc.reached
        ),
    )
}

fn selection_cost() -> Result<Verdict> {
    // 65 initial points plus 80 updates: exactly 10 stages of 8
    let common = "function = \"hartmann6\"\nq = 8\ninitial_size = 65\nmax_updates = 80";
    let c = campaign(
        3,
        &[
            format!("id = \"cl8\"\nstrategy = \"constant-liar\"\n{common}"),
            format!("id = \"acc8\"\nstrategy = \"accelerated\"\npool_size = 300\n{common}"),
        ],
    );
    let out = run(&c)?;
    let (mut cl, mut acc) = ((0.0, 0.0), (0.0, 0.0));
    for r in &out.replicates {
        let stages = r.record.as_ref().map_or(0, |x| x.stages.len());
        ensure!(stages == 10, "{} ran {stages} stages instead of 10", r.id);
        let t = out.timing(&r.id).context("missing timing record")?;
        let slot = if r.spec_id == "cl8" { &mut cl } else { &mut acc };
        slot.0 += t.select_secs;
        slot.1 += t.selection_secs();
    }
    let ratio = cl.0 / acc.0;
    verdict(
        ratio >= 2.0,
        format!(
            "batch selection CL(min) {:.2} s vs accelerated {:.2} s over 3 shared seeds: ratio {ratio:.2} (limit 2); \
             including the likelihood fit {:.2} s vs {:.2} s: ratio {:.2}",
            cl.0,
            acc.0,
            cl.1,
            acc.1,
            cl.1 / acc.1
        ),
    )
}

fn high_dimensional() -> Result<Verdict> {
    let c = campaign(
        5,
        &[
            "id = \"acc10\"\nfunction = \"ackley10\"\nstrategy = \"accelerated\"\nq = 10\ninitial_size = 100\n\
           pool_size = 750\nmax_updates = 150\nkernel = \"matern52\""
                .to_string(),
        ],
    );
    let out = run(&c)?;
    let mut monotone = true;
    let mut finals = Vec::new();
    for r in &out.replicates {
        let rec = r.record.as_ref().context("missing record")?;
        let mut best = rec.initial.best_value().context("empty design")?;
        for s in &rec.stages {
            monotone &= s.best <= best;
            best = s.best;
        }
        ensure!(
            rec.totals.evaluations == 250,
            "{} used {} evaluations",
            r.id,
            rec.totals.evaluations
        );
        finals.push(rec.best_value);
    }
    let best = row(&out, "acc10").best.context("no statistics")?;
    verdict(
        best.mean <= 3.0 && monotone,
        format!(
            "mean best {:.3} (sd {:.3}, limit 3.0) after 250 runs; finals {:?}; best-so-far monotone: {monotone}",
            best.mean,
            best.sd,
            finals.iter().map(|v| (v * 1000.0).round() / 1000.0).collect::<Vec<_>>()
        ),
    )
}

fn property_suites() -> Result<Verdict> {
    let mut notes = Vec::new();

    // kriging: interpolation and nonnegative variance on 50 random designs
    let mut rng = SeededRng::new(2024);
    for trial in 0..50 {
        let s = 1 + trial % 3;
        let n = 5 + (trial * 7) % 20;
        let d = Domain::unit(s);
        let pts = qmc::lhs_initial_design(n, &d, &mut rng)?;
        let freq: Vec<f64> = (0..s).map(|_| rng.random_range(1.0..6.0)).collect();
        let y: Vec<f64> = pts
            .points()
            .iter()
            .map(|p| p.iter().zip(&freq).map(|(v, f)| (f * v).sin()).sum())
            .collect();
        let range =
            y.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - y.iter().cloned().fold(f64::INFINITY, f64::min);
        let design = Design::from_data(&d, pts.points().to_vec(), y)?;
        let m = kriging::fit(&design, &FitOptions::default(), &mut rng)?;
        for (p, yi) in design.points().iter().zip(design.responses()) {
            let pr = m.predict(p);
            ensure!((pr.mean - yi).abs() <= 1e-6 * range, "design {trial}: no interpolation");
            ensure!(pr.sd <= 1e-5 * m.sigma2().sqrt(), "design {trial}: variance at data");
        }
        for _ in 0..200 {
            let u: Vec<f64> = (0..s).map(|_| rng.random()).collect();
            ensure!(
                m.predict_unit_raw(&u).1 >= -1e-9 * m.sigma2(),
                "design {trial}: negative variance"
            );
        }
        if trial == 0 {
            // EI: nonnegative everywhere, zero at the data
            let ctx = EiContext::new(&m);
            ensure!(ctx.ei_batch(m.points()).iter().all(|e| *e >= 0.0 && *e <= 1e-8 * range));
            for _ in 0..10_000 {
                ensure!(ctx.ei_unit(&[rng.random::<f64>()]) >= 0.0, "negative EI");
            }
        }
    }
    notes.push("kriging 50/50");
    let spot = expected_improvement(1.0, 0.0, 1.0, 1e-10);
    ensure!((spot - 1.0833155).abs() < 1e-7, "EI spot value {spot}");
    notes.push("EI spot 1.0833155");

    // random shift: closure, the three wrap cases and the grid permutation
    ensure!(qmc::wrap_coordinate(1.25, 0.0, 1.0) == 0.25);
    ensure!(qmc::wrap_coordinate(-0.25, 0.0, 1.0) == 0.75);
    ensure!(qmc::wrap_coordinate(0.5, 0.0, 1.0) == 0.5);
    let dom = Domain::new(vec![-5.0, 0.0], vec![10.0, 15.0])?;
    let pool = qmc::sobol_pool(200, &dom)?;
    for _ in 0..200 {
        ensure!(
            qmc::random_shift(&pool, &mut rng)
                .points
                .iter()
                .all(|p| dom.contains(p)),
            "shift leaves the box"
        );
    }
    let grid: Vec<Point> = (1..=8).map(|i| Point::new(vec![i as f64 / 8.0])).collect();
    let gpool = CandidatePool::new(&Domain::unit(1), grid.clone(), Generator::External)?;
    let original: BTreeSet<u64> = grid.iter().map(|p| p[0].to_bits()).collect();
    for j in 0..8 {
        let shifted = qmc::shift_pool(&gpool, &[j as f64 / 8.0])?;
        ensure!(
            shifted.points.iter().map(|p| p[0].to_bits()).collect::<BTreeSet<_>>() == original,
            "grid shift {j}"
        );
    }
    notes.push("shift wrap + grid m=8");

    // resampling: chi-square on the first draw and distinct draws
    let unit = Domain::unit(1);
    let weights = [0.5, 0.3, 0.2];
    let wp = WeightedPool::from_raw(
        (0..3).map(|i| Point::new(vec![(i as f64 + 0.5) / 3.0])).collect(),
        weights.to_vec(),
    );
    let mut counts = [0usize; 3];
    let draws = 100_000;
    for _ in 0..draws {
        counts[sir::resample(&wp, 1, &mut rng, &[], &unit)?[0].index] += 1;
    }
    let chi2: f64 = counts
        .iter()
        .zip(weights)
        .map(|(c, w)| (*c as f64 - w * draws as f64).powi(2) / (w * draws as f64))
        .sum();
    // two degrees of freedom: the survival function is exp(-x/2)
    let p = (-0.5 * chi2).exp();
    ensure!(p > 0.001, "chi-square {chi2:.3}, p = {p:.2e}");
    let big = WeightedPool::from_raw(
        (0..40).map(|i| Point::new(vec![(i as f64 + 0.5) / 40.0])).collect(),
        (0..40).map(|i| 1.0 + (i % 5) as f64).collect(),
    );
    for _ in 0..1000 {
        let picks: BTreeSet<usize> = sir::resample(&big, 12, &mut rng, &[], &unit)?
            .iter()
            .map(|d| d.index)
            .collect();
        ensure!(picks.len() == 12, "repeated draw");
    }
    notes.push("SIR chi-square p > 0.001 + distinct draws");

    // published optima
    for (name, value, tol) in [
        ("branin", 0.397887, 1e-5),
        ("goldprice", -3.129126, 1e-5),
        ("hartmann3", -3.86278, 1e-4),
        ("hartmann6", -3.32237, 1e-4),
        ("trid12", -352.0, 1e-6),
    ] {
        let f = testfns::lookup(name)?;
        ensure!(f.minimum == value, "{name} catalog minimum {}", f.minimum);
        for m in &f.minimizers {
            let got = f.eval(m);
            ensure!((got - value).abs() < tol, "{name}: {got} vs {value}");
        }
    }
    notes.push("catalog optima");
    verdict(true, notes.join(", "))
}

fn determinism() -> Result<Verdict> {
    let c = campaign(
        4,
        &[
            target_run("branin-acc8", "branin", "accelerated", 8, 1e-2, 20, ""),
            target_run("sixcamel-cl4", "sixcamel", "constant-liar", 4, 1e-3, 6, ""),
            target_run("sin2-ego", "sin2", "ego", 1, 1e-2, 8, ""),
        ],
    );
    let dirs = [tempfile::tempdir()?, tempfile::tempdir()?, tempfile::tempdir()?];
    let mut texts = Vec::new();
    for (dir, parallelism) in dirs.iter().zip([1, 8, 1]) {
        run_in(&c, dir.path(), parallelism)?;
        texts.push(std::fs::read(dir.path().join(aego_bench::runner::RUNS_FILE))?);
    }
    verdict(
        texts[0] == texts[1] && texts[0] == texts[2],
        format!(
            "runs.jsonl of 12 replicates ({} bytes) at parallelism 1, 8 and 1 again: identical = {}",
            texts[0].len(),
            texts[0] == texts[1] && texts[0] == texts[2]
        ),
    )
}

type Criterion = (&'static str, &'static str, fn() -> Result<Verdict>);

fn main() {
    let criteria: [Criterion; 7] = [
        ("C1", "Branin convergence", branin_convergence),
        ("C2", "pool-size insensitivity", pool_size_insensitivity),
        ("C3", "batch speedup", batch_speedup),
        ("C4", "selection-cost ratio", selection_cost),
        ("C5", "high-dimensional sanity", high_dimensional),
        ("C6", "property suites", property_suites),
        ("C7", "determinism", determinism),
    ];
    let wanted: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (id, name, check) in criteria {
        if !wanted.is_empty() && !wanted.iter().any(|w| w.eq_ignore_ascii_case(id)) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let (pass, detail) = match check() {
            Ok(v) => (v.pass, v.detail),
            Err(e) => (false, format!("error: {e:#}")),
        };
        failed += usize::from(!pass);
        println!(
            "{} {id} {name}: {detail} [{:.1} s]",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {}/{ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
