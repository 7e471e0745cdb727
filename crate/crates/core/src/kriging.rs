//! Ordinary Kriging: constant trend plus a stationary Gaussian process.
//!
//! Inputs are unit-scaled with the design's domain and responses are
//! standardized before fitting; every value reported by [`KrigingModel`] is in
//! original units.

use std::f64::consts::PI;

use log::debug;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::design::Design;
use crate::domain::{Domain, Point};
use crate::error::{Error, Result};
use crate::qmc;
use crate::rng::SeededRng;
use crate::simplex::{self, SimplexOptions};

pub const THETA_MIN: f64 = 1e-3;
pub const THETA_MAX: f64 = 1e3;
pub const JITTER_START: f64 = 1e-10;
pub const JITTER_MAX: f64 = 1e-4;
/// Relative floor of the process variance, as a fraction of `range(y)^2`.
pub const SIGMA2_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    #[default]
    Gaussian,
    Matern52,
}

/// Anisotropic stationary correlation with lengthscales in unit-scaled coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub family: KernelFamily,
    pub lengthscales: Vec<f64>,
    pub nugget: f64,
}

impl Kernel {
    pub fn new(family: KernelFamily, lengthscales: Vec<f64>, nugget: f64) -> Self {
        Kernel {
            family,
            lengthscales,
            nugget,
        }
    }

    /// Correlation between two unit-scaled points. Coincident points get `1 + nugget`.
    pub fn correlation(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut q = 0.0;
        let mut same = true;
        for ((x, y), t) in a.iter().zip(b).zip(&self.lengthscales) {
            let d = x - y;
            same &= d == 0.0;
            q += (d / t) * (d / t);
        }
        if same {
            return 1.0 + self.nugget;
        }
        match self.family {
            KernelFamily::Gaussian => (-q).exp(),
            KernelFamily::Matern52 => {
                let r = 5f64.sqrt() * q.sqrt();
                (1.0 + r + r * r / 3.0) * (-r).exp()
            }
        }
    }

    fn matrix(&self, x: &[Vec<f64>]) -> DMatrix<f64> {
        let n = x.len();
        let mut r = DMatrix::zeros(n, n);
        for i in 0..n {
            r[(i, i)] = 1.0 + self.nugget;
            for j in 0..i {
                let c = self.correlation(&x[i], &x[j]);
                r[(i, j)] = c;
                r[(j, i)] = c;
            }
        }
        r
    }
}

/// Quantities of the concentrated likelihood at fixed correlation parameters.
struct Profile {
    lower: DMatrix<f64>,
    /// `L^-1 1`
    ones_solved: DVector<f64>,
    /// `1' R^-1 1`
    ones_quad: f64,
    /// `R^-1 (y - 1 beta)`
    alpha: DVector<f64>,
    beta: f64,
    sigma2: f64,
    log_likelihood: f64,
}

fn profile(x: &[Vec<f64>], y: &[f64], kernel: &Kernel, sigma2_floor: f64) -> Option<Profile> {
    let n = y.len();
    let chol = kernel.matrix(x).cholesky()?;
    let lower = chol.unpack();
    let ones = DVector::from_element(n, 1.0);
    let ones_solved = lower.solve_lower_triangular(&ones)?;
    let y_solved = lower.solve_lower_triangular(&DVector::from_column_slice(y))?;
    let ones_quad = ones_solved.dot(&ones_solved);
    let beta = ones_solved.dot(&y_solved) / ones_quad;
    let resid = &y_solved - &ones_solved * beta;
    let sigma2 = (resid.dot(&resid) / n as f64).max(sigma2_floor);
    let alpha = lower.transpose().solve_upper_triangular(&resid)?;
    let log_det: f64 = 2.0 * lower.diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let nf = n as f64;
    let log_likelihood = -0.5 * nf * sigma2.ln() - 0.5 * log_det - 0.5 * nf * ((2.0 * PI).ln() + 1.0);
    if !(log_likelihood.is_finite() && beta.is_finite()) {
        return None;
    }
    Some(Profile {
        lower,
        ones_solved,
        ones_quad,
        alpha,
        beta,
        sigma2,
        log_likelihood,
    })
}

/// Profile with nugget escalation from [`JITTER_START`] up to [`JITTER_MAX`].
fn profile_with_jitter(
    x: &[Vec<f64>],
    y: &[f64],
    family: KernelFamily,
    lengthscales: &[f64],
    sigma2_floor: f64,
) -> Result<(Kernel, Profile)> {
    let mut nugget = JITTER_START;
    loop {
        let kernel = Kernel::new(family, lengthscales.to_vec(), nugget);
        if let Some(p) = profile(x, y, &kernel, sigma2_floor) {
            return Ok((kernel, p));
        }
        if nugget >= JITTER_MAX {
            return Err(Error::SingularCorrelation { nugget });
        }
        nugget *= 10.0;
        debug!("correlation factorization failed, raising nugget to {nugget:e}");
    }
}

fn variance_floor(y: &[f64]) -> f64 {
    let (lo, hi) = y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let range = hi - lo;
    if range > 0.0 {
        SIGMA2_FLOOR * range * range
    } else {
        SIGMA2_FLOOR
    }
}

/// Concentrated Gaussian log-likelihood of the design under `kernel`, in
/// original response units, using the kernel's nugget as given.
pub fn log_likelihood(design: &Design, kernel: &Kernel) -> Result<f64> {
    check_kernel(kernel, design.domain().dim())?;
    let x = design.unit_points();
    let y = design.responses();
    profile(&x, y, kernel, variance_floor(y))
        .map(|p| p.log_likelihood)
        .ok_or(Error::SingularCorrelation { nugget: kernel.nugget })
}

fn check_kernel(kernel: &Kernel, dim: usize) -> Result<()> {
    if kernel.lengthscales.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: kernel.lengthscales.len(),
        });
    }
    if kernel.lengthscales.iter().any(|t| !t.is_finite() || *t <= 0.0) || kernel.nugget.is_nan() || kernel.nugget < 0.0
    {
        return Err(Error::InvalidArgument(format!("invalid kernel parameters {kernel:?}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub family: KernelFamily,
    /// Number of space-filling starting points of the likelihood search.
    pub restarts: usize,
    /// Evaluation budget of each local simplex search; `None` means `40 (s + 1)`.
    pub max_evals: Option<usize>,
    /// Extra starting point, e.g. the lengthscales of the previous stage.
    pub warm_start: Option<Vec<f64>>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            family: KernelFamily::Gaussian,
            restarts: 10,
            max_evals: None,
            warm_start: None,
        }
    }
}

/// Predictive mean and standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub sd: f64,
}

/// A fitted ordinary-Kriging surrogate. Immutable after construction.
#[derive(Debug, Clone)]
pub struct KrigingModel {
    domain: Domain,
    points: Vec<Point>,
    responses: Vec<f64>,
    x_unit: Vec<Vec<f64>>,
    kernel: Kernel,
    y_center: f64,
    y_scale: f64,
    lower: DMatrix<f64>,
    ones_solved: DVector<f64>,
    ones_quad: f64,
    alpha: DVector<f64>,
    /// trend and process variance in standardized units
    beta_std: f64,
    sigma2_std: f64,
    log_likelihood_std: f64,
}

fn standardize(y: &[f64]) -> (f64, f64, Vec<f64>) {
    let n = y.len() as f64;
    let center = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - center) * (v - center)).sum::<f64>() / n;
    let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
    let z = y.iter().map(|v| (v - center) / scale).collect();
    (center, scale, z)
}

/// Maximum-likelihood fit of the correlation lengthscales followed by the
/// closed-form trend and variance estimates.
pub fn fit(design: &Design, opts: &FitOptions, rng: &mut SeededRng) -> Result<KrigingModel> {
    let n = design.len();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, have: n });
    }
    let s = design.domain().dim();
    let x = design.unit_points();
    let (_, _, z) = standardize(design.responses());
    let floor = variance_floor(&z);

    let lo = vec![THETA_MIN.log10(); s];
    let hi = vec![THETA_MAX.log10(); s];
    let objective = |log_theta: &[f64]| -> f64 {
        let theta: Vec<f64> = log_theta.iter().map(|v| 10f64.powf(*v)).collect();
        match profile_with_jitter(&x, &z, opts.family, &theta, floor) {
            Ok((_, p)) => -p.log_likelihood,
            Err(_) => f64::INFINITY,
        }
    };

    let mut starts: Vec<Vec<f64>> = Vec::new();
    if let Some(w) = &opts.warm_start {
        if w.len() == s && w.iter().all(|t| *t > 0.0) {
            starts.push(w.iter().map(|t| t.clamp(THETA_MIN, THETA_MAX).log10()).collect());
        }
    }
    match opts.restarts {
        0 => {}
        1 => starts.push(vec![0.0; s]),
        r => {
            let box_ = Domain::new(lo.clone(), hi.clone())?;
            let lhs = qmc::lhs_initial_design(r, &box_, rng)?;
            starts.extend(lhs.points().iter().map(|p| p.to_vec()));
        }
    }
    if starts.is_empty() {
        starts.push(vec![0.0; s]);
    }

    let simplex_opts = SimplexOptions {
        max_evals: opts.max_evals.unwrap_or(40 * (s + 1)),
        f_tol: 1e-9,
        x_tol: 1e-4,
        initial_step: 0.05,
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in &starts {
        let r = simplex::minimize(objective, start, &lo, &hi, &simplex_opts);
        if best.as_ref().is_none_or(|(f, _)| r.f < *f) {
            best = Some((r.f, r.x));
        }
    }
    let (f, log_theta) = best.expect("at least one start");
    if !f.is_finite() {
        return Err(Error::SingularCorrelation { nugget: JITTER_MAX });
    }
    let theta: Vec<f64> = log_theta.iter().map(|v| 10f64.powf(*v)).collect();
    debug!("kriging fit n={n} theta={theta:?} -loglik={f}");
    KrigingModel::with_lengthscales(design, opts.family, &theta)
}

impl KrigingModel {
    /// Builds the model at fixed lengthscales, escalating the nugget as needed.
    pub fn with_lengthscales(design: &Design, family: KernelFamily, lengthscales: &[f64]) -> Result<Self> {
        check_kernel(&Kernel::new(family, lengthscales.to_vec(), 0.0), design.domain().dim())?;
        if design.len() < 2 {
            return Err(Error::TooFewPoints {
                needed: 2,
                have: design.len(),
            });
        }
        let x = design.unit_points();
        let (center, scale, z) = standardize(design.responses());
        let (kernel, p) = profile_with_jitter(&x, &z, family, lengthscales, variance_floor(&z))?;
        Ok(Self::assemble(design, x, kernel, center, scale, p))
    }

    /// Builds the model with exactly the given kernel, nugget included.
    pub fn with_kernel(design: &Design, kernel: &Kernel) -> Result<Self> {
        check_kernel(kernel, design.domain().dim())?;
        if design.len() < 2 {
            return Err(Error::TooFewPoints {
                needed: 2,
                have: design.len(),
            });
        }
        let x = design.unit_points();
        let (center, scale, z) = standardize(design.responses());
        let p =
            profile(&x, &z, kernel, variance_floor(&z)).ok_or(Error::SingularCorrelation { nugget: kernel.nugget })?;
        Ok(Self::assemble(design, x, kernel.clone(), center, scale, p))
    }

    fn assemble(
        design: &Design,
        x_unit: Vec<Vec<f64>>,
        kernel: Kernel,
        y_center: f64,
        y_scale: f64,
        p: Profile,
    ) -> Self {
        KrigingModel {
            domain: design.domain().clone(),
            points: design.points().to_vec(),
            responses: design.responses().to_vec(),
            x_unit,
            kernel,
            y_center,
            y_scale,
            lower: p.lower,
            ones_solved: p.ones_solved,
            ones_quad: p.ones_quad,
            alpha: p.alpha,
            beta_std: p.beta,
            sigma2_std: p.sigma2,
            log_likelihood_std: p.log_likelihood,
        }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    /// Smallest training response.
    pub fn best_response(&self) -> f64 {
        self.responses.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Generalized-least-squares trend estimate.
    pub fn beta(&self) -> f64 {
        self.y_center + self.y_scale * self.beta_std
    }

    /// Process variance estimate.
    pub fn sigma2(&self) -> f64 {
        self.y_scale * self.y_scale * self.sigma2_std
    }

    /// Concentrated log-likelihood at the fitted parameters, in original units.
    pub fn log_likelihood(&self) -> f64 {
        self.log_likelihood_std - self.len() as f64 * self.y_scale.ln()
    }

    /// Lower Cholesky factor of the (jittered) correlation matrix.
    pub fn cholesky_factor(&self) -> &DMatrix<f64> {
        &self.lower
    }

    /// Predictive mean and unclipped variance at a unit-scaled point.
    pub fn predict_unit_raw(&self, u: &[f64]) -> (f64, f64) {
        let n = self.x_unit.len();
        let r = DVector::from_iterator(n, self.x_unit.iter().map(|xi| self.kernel.correlation(xi, u)));
        let mean_std = self.beta_std + r.dot(&self.alpha);
        let v = self
            .lower
            .solve_lower_triangular(&r)
            .expect("factor has a nonzero diagonal");
        let u1 = 1.0 - self.ones_solved.dot(&v);
        let var_std = self.sigma2_std * (1.0 - v.dot(&v) + u1 * u1 / self.ones_quad);
        (
            self.y_center + self.y_scale * mean_std,
            self.y_scale * self.y_scale * var_std,
        )
    }

    pub fn predict_unit(&self, u: &[f64]) -> Prediction {
        let (mean, var) = self.predict_unit_raw(u);
        Prediction {
            mean,
            sd: var.max(0.0).sqrt(),
        }
    }

    /// Prediction at a point in domain coordinates.
    pub fn predict(&self, x: &[f64]) -> Prediction {
        self.predict_unit(&self.domain.to_unit(x))
    }

    pub fn to_dump(&self) -> ModelDump {
        ModelDump {
            kernel: self.kernel.clone(),
            beta: self.beta(),
            sigma2: self.sigma2(),
            domain: self.domain.clone(),
            points: self.points.clone(),
            responses: self.responses.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_dump())?)
    }

    /// Rebuilds a model from its dump; the factorization is recomputed with
    /// the stored kernel, so predictions match the original.
    pub fn from_dump(dump: &ModelDump) -> Result<Self> {
        let design = Design::from_data(&dump.domain, dump.points.clone(), dump.responses.clone())?;
        Self::with_kernel(&design, &dump.kernel)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Self::from_dump(&serde_json::from_str(json)?)
    }
}

/// Serialized form of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDump {
    pub kernel: Kernel,
    pub beta: f64,
    pub sigma2: f64,
    pub domain: Domain,
    pub points: Vec<Point>,
    pub responses: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn design_1d(xs: &[f64], ys: &[f64]) -> Design {
        Design::from_data(
            &Domain::unit(1),
            xs.iter().map(|&v| Point::new(vec![v])).collect(),
            ys.to_vec(),
        )
        .unwrap()
    }

    fn random_design(rng: &mut SeededRng, n: usize, s: usize) -> Design {
        let d = Domain::cube(s, -2.0, 3.0).unwrap();
        let pts = qmc::lhs_initial_design(n, &d, rng).unwrap();
        let ys = pts
            .points()
            .iter()
            .map(|p| {
                p.iter()
                    .enumerate()
                    .map(|(k, v)| ((k + 1) as f64 * v).sin() + 0.1 * v * v)
                    .sum()
            })
            .collect();
        Design::from_data(&d, pts.points().to_vec(), ys).unwrap()
    }

    #[test]
    fn kernel_shapes() {
        let g = Kernel::new(KernelFamily::Gaussian, vec![0.5, 2.0], 0.0);
        assert_eq!(g.correlation(&[0.1, 0.2], &[0.1, 0.2]), 1.0);
        let expected = (-((0.2f64 / 0.5).powi(2) + (0.4f64 / 2.0).powi(2))).exp();
        assert!((g.correlation(&[0.1, 0.2], &[0.3, 0.6]) - expected).abs() < 1e-15);
        assert_eq!(
            g.correlation(&[0.3, 0.6], &[0.1, 0.2]),
            g.correlation(&[0.1, 0.2], &[0.3, 0.6])
        );
        let m = Kernel::new(KernelFamily::Matern52, vec![1.0], 1e-3);
        assert_eq!(m.correlation(&[0.4], &[0.4]), 1.0 + 1e-3);
        let r = 5f64.sqrt() * 0.5;
        assert!((m.correlation(&[0.0], &[0.5]) - (1.0 + r + r * r / 3.0) * (-r).exp()).abs() < 1e-15);
    }

    #[test]
    fn too_few_points() {
        let d = design_1d(&[0.5], &[1.0]);
        assert_eq!(
            fit(&d, &FitOptions::default(), &mut SeededRng::new(0)).unwrap_err(),
            Error::TooFewPoints { needed: 2, have: 1 }
        );
    }

    #[test]
    fn constant_data_floors_variance() {
        let d = design_1d(&[0.0, 1.0], &[0.0, 0.0]);
        let m = fit(&d, &FitOptions::default(), &mut SeededRng::new(0)).unwrap();
        assert_eq!(m.beta(), 0.0);
        assert!(m.sigma2() > 0.0 && m.sigma2() <= 1e-12);
        let p = m.predict(&[0.5]);
        assert_eq!(p.mean, 0.0);
        assert!(p.sd.is_finite());
    }

    #[test]
    fn two_point_symmetry() {
        let d = design_1d(&[0.2, 0.8], &[1.0, 4.0]);
        for theta in [0.05, 0.3, 2.0] {
            let m = KrigingModel::with_lengthscales(&d, KernelFamily::Gaussian, &[theta]).unwrap();
            assert!((m.predict(&[0.5]).mean - 2.5).abs() < 1e-9);
        }
    }

    #[test]
    fn reverts_to_prior_far_from_data() {
        let d = Design::from_data(
            &Domain::unit(1),
            vec![Point::new(vec![0.0]), Point::new(vec![0.02]), Point::new(vec![0.05])],
            vec![1.0, 2.0, 0.5],
        )
        .unwrap();
        let m = KrigingModel::with_lengthscales(&d, KernelFamily::Gaussian, &[0.01]).unwrap();
        let p = m.predict(&[1.0]);
        assert!((p.mean - m.beta()).abs() < 1e-12);
        assert!(p.sd >= m.sigma2().sqrt());
    }

    #[test]
    fn interpolates_training_points() {
        let mut rng = SeededRng::new(3);
        for trial in 0..10 {
            let s = 1 + trial % 3;
            let d = random_design(&mut rng, 8 + 2 * trial, s);
            let m = fit(&d, &FitOptions::default(), &mut rng).unwrap();
            let range = d.responses().iter().cloned().fold(f64::MIN, f64::max)
                - d.responses().iter().cloned().fold(f64::MAX, f64::min);
            for (p, y) in d.points().iter().zip(d.responses()) {
                let pr = m.predict(p);
                assert!((pr.mean - y).abs() <= 1e-6 * range, "{} vs {}", pr.mean, y);
                assert!(pr.sd <= 1e-5 * m.sigma2().sqrt());
            }
        }
    }

    #[test]
    fn variance_matches_bordered_system() {
        let mut rng = SeededRng::new(8);
        let d = random_design(&mut rng, 12, 2);
        let m = KrigingModel::with_lengthscales(&d, KernelFamily::Gaussian, &[0.3, 0.5]).unwrap();
        let x = d.unit_points();
        let n = x.len();
        let mut big = DMatrix::zeros(n + 1, n + 1);
        for i in 0..n {
            big[(0, i + 1)] = 1.0;
            big[(i + 1, 0)] = 1.0;
            for j in 0..n {
                big[(i + 1, j + 1)] = m.kernel().correlation(&x[i], &x[j]);
            }
        }
        let inv = big.try_inverse().unwrap();
        for _ in 0..50 {
            let u = vec![rng.random::<f64>(), rng.random::<f64>()];
            let mut b = DVector::zeros(n + 1);
            b[0] = 1.0;
            for i in 0..n {
                b[i + 1] = m.kernel().correlation(&x[i], &u);
            }
            let expected = m.sigma2() * (1.0 - (b.transpose() * &inv * &b)[(0, 0)]);
            let (_, var) = m.predict_unit_raw(&u);
            assert!((var - expected).abs() <= 1e-8 * m.sigma2(), "{var} vs {expected}");
        }
    }

    #[test]
    fn mean_matches_blup_formula() {
        let mut rng = SeededRng::new(9);
        let d = random_design(&mut rng, 10, 2);
        let m = KrigingModel::with_lengthscales(&d, KernelFamily::Matern52, &[0.4, 0.7]).unwrap();
        let x = d.unit_points();
        let n = x.len();
        let r = DMatrix::from_fn(n, n, |i, j| m.kernel().correlation(&x[i], &x[j]));
        let rinv = r.try_inverse().unwrap();
        let ones = DVector::from_element(n, 1.0);
        let y = DVector::from_column_slice(d.responses());
        let beta = (ones.transpose() * &rinv * &y)[(0, 0)] / (ones.transpose() * &rinv * &ones)[(0, 0)];
        assert!((beta - m.beta()).abs() < 1e-8);
        let resid = &y - &ones * beta;
        let sigma2 = (resid.transpose() * &rinv * &resid)[(0, 0)] / n as f64;
        assert!((sigma2 - m.sigma2()).abs() < 1e-8 * sigma2);
        let u = [0.37, 0.81];
        let rv = DVector::from_iterator(n, x.iter().map(|xi| m.kernel().correlation(xi, &u)));
        let mean = beta + (rv.transpose() * &rinv * &resid)[(0, 0)];
        assert!((mean - m.predict_unit(&u).mean).abs() < 1e-8);
    }

    #[test]
    fn dump_round_trip() {
        let mut rng = SeededRng::new(4);
        let d = random_design(&mut rng, 15, 3);
        let m = fit(&d, &FitOptions::default(), &mut rng).unwrap();
        let back = KrigingModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back.kernel(), m.kernel());
        for _ in 0..100 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..3.0)).collect();
            let (a, b) = (m.predict(&x), back.predict(&x));
            assert!((a.mean - b.mean).abs() <= 1e-10 * (1.0 + a.mean.abs()));
            assert!((a.sd - b.sd).abs() <= 1e-10 * (1.0 + a.sd));
        }
    }

    #[test]
    fn refit_is_bit_identical() {
        let mut rng = SeededRng::new(5);
        let d = random_design(&mut rng, 14, 2);
        let a = fit(&d, &FitOptions::default(), &mut SeededRng::new(77)).unwrap();
        let b = fit(&d, &FitOptions::default(), &mut SeededRng::new(77)).unwrap();
        assert_eq!(a.kernel(), b.kernel());
        assert_eq!(a.beta().to_bits(), b.beta().to_bits());
        let x = [0.1, 0.2];
        assert_eq!(a.predict(&x), b.predict(&x));
    }

    #[test]
    fn rejects_bad_kernels() {
        let d = design_1d(&[0.0, 0.5, 1.0], &[1.0, 2.0, 3.0]);
        assert!(log_likelihood(&d, &Kernel::new(KernelFamily::Gaussian, vec![0.0], 0.0)).is_err());
        assert!(log_likelihood(&d, &Kernel::new(KernelFamily::Gaussian, vec![1.0, 1.0], 0.0)).is_err());
    }

    #[test]
    fn near_duplicates_stay_factorizable() {
        // two points closer than the kernel can resolve
        let d = design_1d(&[0.5, 0.5 + 1e-7, 0.9], &[1.0, 1.0, 2.0]);
        let m = KrigingModel::with_lengthscales(&d, KernelFamily::Gaussian, &[10.0]).unwrap();
        assert!(m.kernel().nugget >= JITTER_START && m.kernel().nugget <= JITTER_MAX);
        let p = m.predict(&[0.7]);
        assert!(p.mean.is_finite() && p.sd.is_finite());
    }
}
