//! Expected improvement and its maximization over the domain.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::domain::{Domain, Point};
use crate::kriging::KrigingModel;
use crate::qmc;
use crate::rng::SeededRng;
use crate::simplex::{self, SimplexOptions};
use rand::Rng;

/// Standard normal density.
pub fn normal_pdf(u: f64) -> f64 {
    (-0.5 * u * u).exp() / (2.0 * PI).sqrt()
}

/// Standard normal distribution function, through `erfc` so that the lower
/// tail keeps full relative precision.
pub fn normal_cdf(u: f64) -> f64 {
    0.5 * libm::erfc(-u * FRAC_1_SQRT_2)
}

/// EI of a Gaussian prediction `(mean, sd)` below `best`.
///
/// When `sd < sd_eps` the deterministic limit `max(best - mean, 0)` is used.
pub fn expected_improvement(best: f64, mean: f64, sd: f64, sd_eps: f64) -> f64 {
    let gain = best - mean;
    if sd < sd_eps || sd == 0.0 {
        return gain.max(0.0);
    }
    let u = gain / sd;
    (gain * normal_cdf(u) + sd * normal_pdf(u)).max(0.0)
}

/// A fitted model together with the incumbent minimum.
#[derive(Debug, Clone, Copy)]
pub struct EiContext<'a> {
    model: &'a KrigingModel,
    best_y: f64,
    sd_eps: f64,
}

impl<'a> EiContext<'a> {
    pub fn new(model: &'a KrigingModel) -> Self {
        EiContext {
            model,
            best_y: model.best_response(),
            sd_eps: 1e-10 * model.sigma2().sqrt(),
        }
    }

    pub fn model(&self) -> &'a KrigingModel {
        self.model
    }

    pub fn best_y(&self) -> f64 {
        self.best_y
    }

    pub fn domain(&self) -> &'a Domain {
        self.model.domain()
    }

    pub fn ei(&self, x: &[f64]) -> f64 {
        self.ei_unit(&self.domain().to_unit(x))
    }

    pub fn ei_unit(&self, u: &[f64]) -> f64 {
        let p = self.model.predict_unit(u);
        expected_improvement(self.best_y, p.mean, p.sd, self.sd_eps)
    }

    pub fn ei_batch(&self, xs: &[Point]) -> Vec<f64> {
        xs.iter().map(|x| self.ei(x)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaximizeOptions {
    /// Scan points per dimension.
    pub scan_per_dim: usize,
    /// Number of best scan points refined by a local simplex search.
    pub local_starts: usize,
    /// Evaluation budget per local search; `None` means `30 (s + 1)`.
    pub local_evals: Option<usize>,
    /// Design points with the lowest responses whose neighbourhoods are
    /// added to the scan set.
    pub incumbents: usize,
    /// Points per incumbent and per neighbourhood scale.
    pub cloud_size: usize,
}

/// Half-widths, in unit coordinates, of the incumbent neighbourhoods.
const CLOUD_SCALES: [f64; 3] = [1e-1, 1e-2, 1e-3];
const SCAN_STEP: f64 = 0.02;

impl Default for MaximizeOptions {
    fn default() -> Self {
        MaximizeOptions {
            scan_per_dim: 512,
            local_starts: 5,
            local_evals: None,
            incumbents: 3,
            cloud_size: 16,
        }
    }
}

/// A candidate maximizer and its EI.
#[derive(Debug, Clone, PartialEq)]
pub struct EiCandidate {
    pub point: Point,
    pub ei: f64,
}

/// Maximizes EI over the domain.
///
/// The scan set is a randomly shifted Sobol set of `scan_per_dim * s` points,
/// then uniform clouds around the best design points at several scales (EI
/// peaks next to the incumbent can be far narrower than the Sobol spacing),
/// then `extra` (e.g. a candidate pool). The best `local_starts` scan points
/// seed bounded simplex searches whose initial size follows the scale the
/// start came from. Candidates are returned best first, pairwise distinct;
/// the first one dominates every scan point and every local-search terminus.
pub fn maximize_ei_ranked(
    ctx: &EiContext<'_>,
    rng: &mut SeededRng,
    opts: &MaximizeOptions,
    extra: &[Point],
) -> Vec<EiCandidate> {
    let domain = ctx.domain();
    let s = domain.dim();
    let unit = Domain::unit(s);

    // scan points in unit coordinates with the step of their local search
    let mut scan: Vec<(Vec<f64>, f64)> = Vec::with_capacity(opts.scan_per_dim * s + extra.len());
    if opts.scan_per_dim > 0 {
        let base = qmc::sobol_pool(opts.scan_per_dim * s, &unit).expect("dimension checked by the model");
        scan.extend(
            qmc::random_shift(&base, rng)
                .points
                .into_iter()
                .map(|p| (p.into_inner(), SCAN_STEP)),
        );
    }
    let model = ctx.model();
    let mut by_response: Vec<usize> = (0..model.len()).collect();
    by_response.sort_by(|&i, &j| model.responses()[i].total_cmp(&model.responses()[j]));
    for &i in by_response.iter().take(opts.incumbents) {
        let centre = domain.to_unit(&model.points()[i]);
        for h in CLOUD_SCALES {
            for _ in 0..opts.cloud_size {
                let u = centre
                    .iter()
                    .map(|c| (c + h * (2.0 * rng.random::<f64>() - 1.0)).clamp(0.0, 1.0))
                    .collect();
                scan.push((u, h / 2.0));
            }
        }
    }
    scan.extend(extra.iter().map(|p| (domain.to_unit(p), SCAN_STEP)));
    if scan.is_empty() {
        scan.push((vec![0.5; s], SCAN_STEP));
    }
    let values: Vec<f64> = scan.iter().map(|(u, _)| ctx.ei_unit(u)).collect();

    // stable sort keeps the lowest index first among ties
    let mut order: Vec<usize> = (0..scan.len()).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));

    let mut found: Vec<(Vec<f64>, f64)> = Vec::new();
    let (lo, hi) = (vec![0.0; s], vec![1.0; s]);
    for &i in order.iter().take(opts.local_starts) {
        let local = SimplexOptions {
            max_evals: opts.local_evals.unwrap_or(30 * (s + 1)),
            f_tol: 1e-12,
            x_tol: 1e-9,
            initial_step: scan[i].1,
        };
        let r = simplex::minimize(|u| -ctx.ei_unit(u), &scan[i].0, &lo, &hi, &local);
        found.push((r.x, -r.f));
    }
    for &i in order.iter().take(opts.local_starts.max(1) + 8) {
        found.push((scan[i].0.clone(), values[i]));
    }
    found.sort_by(|a, b| b.1.total_cmp(&a.1));

    let mut out: Vec<EiCandidate> = Vec::new();
    for (u, ei) in found {
        let x = domain.from_unit(&u);
        if out.iter().any(|c| domain.is_duplicate(&c.point, &x)) {
            continue;
        }
        out.push(EiCandidate {
            point: Point::new(x),
            ei,
        });
    }
    out
}

/// The EI maximizer; see [`maximize_ei_ranked`].
pub fn maximize_ei(ctx: &EiContext<'_>, rng: &mut SeededRng, opts: &MaximizeOptions, extra: &[Point]) -> EiCandidate {
    maximize_ei_ranked(ctx, rng, opts, extra)
        .into_iter()
        .next()
        .expect("scan set is never empty")
}
