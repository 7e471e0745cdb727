//! Benchmark functions with their domains and published optima.

use std::f64::consts::{E, PI};
use std::sync::Arc;

use crate::domain::{Domain, Point};
use crate::error::{Error, Result};
use crate::objective::Objective;

type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A catalog entry.
#[derive(Clone)]
pub struct TestFunction {
    pub name: String,
    pub domain: Domain,
    /// Published global minimum value.
    pub minimum: f64,
    pub minimizers: Vec<Point>,
    /// Initial-design size used by the benchmark setup.
    pub initial_size: usize,
    /// Sobol pool size used by the benchmark setup.
    pub pool_size: usize,
    eval: Evaluator,
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("minimum", &self.minimum)
            .finish()
    }
}

impl TestFunction {
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    /// A fresh objective with its own evaluation ledger.
    pub fn objective(&self) -> Objective {
        let f = self.eval.clone();
        Objective::new(self.name.clone(), self.dim(), move |x| f(x)).with_known_minimum(self.minimum)
    }
}

pub fn branin(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    let t = b - 5.1 / (4.0 * PI * PI) * a * a + 5.0 / PI * a - 6.0;
    t * t + 10.0 * (1.0 - 1.0 / (8.0 * PI)) * a.cos() + 10.0
}

pub fn six_camel(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    let a2 = a * a;
    let b2 = b * b;
    4.0 * a2 - 2.1 * a2 * a2 + a2 * a2 * a2 / 3.0 + a * b - 4.0 * b2 + 4.0 * b2 * b2
}

/// Logarithmic rescaling of Goldstein-Price.
pub fn gold_price(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    let p = 1.0 + (a + b + 1.0).powi(2) * (19.0 - 14.0 * a + 3.0 * a * a - 14.0 * b + 6.0 * a * b + 3.0 * b * b);
    let q =
        30.0 + (2.0 * a - 3.0 * b).powi(2) * (18.0 - 32.0 * a + 12.0 * a * a + 48.0 * b - 36.0 * a * b + 27.0 * b * b);
    ((p * q).ln() - 8.693) / 2.427
}

pub fn sin2(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    1.0 + a.sin().powi(2) + b.sin().powi(2) - 0.1 * (-a * a - b * b).exp()
}

const HARTMANN_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];

const HARTMANN3_A: [[f64; 3]; 4] = [
    [3.0, 10.0, 30.0],
    [0.1, 10.0, 35.0],
    [3.0, 10.0, 30.0],
    [0.1, 10.0, 35.0],
];

const HARTMANN3_P: [[f64; 3]; 4] = [
    [3689.0, 1170.0, 2673.0],
    [4699.0, 4387.0, 7470.0],
    [1091.0, 8732.0, 5547.0],
    [381.0, 5743.0, 8828.0],
];

const HARTMANN6_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];

const HARTMANN6_P: [[f64; 6]; 4] = [
    [1312.0, 1696.0, 5569.0, 124.0, 8283.0, 5886.0],
    [2329.0, 4135.0, 8307.0, 3736.0, 1004.0, 9991.0],
    [2348.0, 1451.0, 3522.0, 2883.0, 3047.0, 6650.0],
    [4047.0, 8828.0, 8732.0, 5743.0, 1091.0, 381.0],
];

fn hartmann<const S: usize>(x: &[f64], a: &[[f64; S]; 4], p: &[[f64; S]; 4]) -> f64 {
    -(0..4)
        .map(|i| {
            let inner: f64 = (0..S).map(|j| a[i][j] * (x[j] - 1e-4 * p[i][j]).powi(2)).sum();
            HARTMANN_ALPHA[i] * (-inner).exp()
        })
        .sum::<f64>()
}

pub fn hartmann3(x: &[f64]) -> f64 {
    hartmann(x, &HARTMANN3_A, &HARTMANN3_P)
}

pub fn hartmann6(x: &[f64]) -> f64 {
    hartmann(x, &HARTMANN6_A, &HARTMANN6_P)
}

/// Ackley with `a = 20`, `b = 0.2`, `c = 2 pi`.
pub fn ackley(x: &[f64]) -> f64 {
    let s = x.len() as f64;
    let sq: f64 = x.iter().map(|v| v * v).sum::<f64>() / s;
    let cs: f64 = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / s;
    -20.0 * (-0.2 * sq.sqrt()).exp() - cs.exp() + 20.0 + E
}

pub fn levy(x: &[f64]) -> f64 {
    let w: Vec<f64> = x.iter().map(|v| 1.0 + (v - 1.0) / 4.0).collect();
    let s = w.len();
    let head = (PI * w[0]).sin().powi(2);
    let body: f64 = w[..s - 1]
        .iter()
        .map(|wi| (wi - 1.0).powi(2) * (1.0 + 10.0 * (PI * wi + 1.0).sin().powi(2)))
        .sum();
    let tail = (w[s - 1] - 1.0).powi(2) * (1.0 + (2.0 * PI * w[s - 1]).sin().powi(2));
    head + body + tail
}

pub fn trid(x: &[f64]) -> f64 {
    let sq: f64 = x.iter().map(|v| (v - 1.0).powi(2)).sum();
    let cross: f64 = x.windows(2).map(|w| w[0] * w[1]).sum();
    sq - cross
}

/// Names accepted by [`lookup`]; `ackley`, `levy` and `trid` take a dimension suffix.
pub const CATALOG: [&str; 9] = [
    "branin",
    "sixcamel",
    "goldprice",
    "sin2",
    "hartmann3",
    "hartmann6",
    "ackley10",
    "levy10",
    "trid12",
];

fn entry(
    name: &str,
    domain: Domain,
    minimum: f64,
    minimizers: Vec<Vec<f64>>,
    sizes: (usize, usize),
    eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
) -> TestFunction {
    TestFunction {
        name: name.to_string(),
        domain,
        minimum,
        minimizers: minimizers.into_iter().map(Point::new).collect(),
        initial_size: sizes.0,
        pool_size: sizes.1,
        eval: Arc::new(eval),
    }
}

fn split_dim(name: &str, family: &str) -> Option<usize> {
    name.strip_prefix(family)
        .and_then(|d| d.parse().ok())
        .filter(|d| *d >= 1)
}

/// Pool size for parametric families outside the published table.
fn scaled_sizes(s: usize) -> (usize, usize) {
    (10 * s, crate::qmc::default_pool_size(s))
}

/// Looks up a catalog function by name, e.g. `branin`, `hartmann6`,
/// `ackley10` or `trid12`. `ackley2` is the two-dimensional toy on
/// `[-2, 2]^2`; other Ackley dimensions use `[-5.12, 5.12]^s`.
pub fn lookup(name: &str) -> Result<TestFunction> {
    let name = name.to_ascii_lowercase();
    let f = match name.as_str() {
        "branin" => entry(
            "branin",
            Domain::new(vec![-5.0, 0.0], vec![10.0, 15.0])?,
            0.397887,
            vec![vec![-PI, 12.275], vec![PI, 2.275], vec![9.42478, 2.475]],
            (21, 100),
            branin,
        ),
        "sixcamel" => entry(
            "sixcamel",
            Domain::new(vec![-2.0, -1.0], vec![2.0, 1.0])?,
            -1.0316,
            vec![vec![0.0898, -0.7126], vec![-0.0898, 0.7126]],
            (21, 100),
            six_camel,
        ),
        "goldprice" => entry(
            "goldprice",
            Domain::cube(2, -2.0, 2.0)?,
            -3.129126,
            vec![vec![0.0, -1.0]],
            (21, 100),
            gold_price,
        ),
        "sin2" => entry(
            "sin2",
            Domain::cube(2, -5.0, 5.0)?,
            0.9,
            vec![vec![0.0, 0.0]],
            (21, 100),
            sin2,
        ),
        "hartmann3" => entry(
            "hartmann3",
            Domain::unit(3),
            -3.86278,
            vec![vec![0.1146, 0.5556, 0.8525]],
            (35, 150),
            hartmann3,
        ),
        "hartmann6" => entry(
            "hartmann6",
            Domain::unit(6),
            -3.32237,
            vec![vec![0.2017, 0.1500, 0.4769, 0.2753, 0.3117, 0.6573]],
            (65, 300),
            hartmann6,
        ),
        _ => {
            if let Some(s) = split_dim(&name, "ackley") {
                let (domain, sizes) = if s == 2 {
                    (Domain::cube(2, -2.0, 2.0)?, (21, 100))
                } else if s == 10 {
                    (Domain::cube(s, -5.12, 5.12)?, (100, 750))
                } else {
                    (Domain::cube(s, -5.12, 5.12)?, scaled_sizes(s))
                };
                entry(&name, domain, 0.0, vec![vec![0.0; s]], sizes, ackley)
            } else if let Some(s) = split_dim(&name, "levy") {
                let sizes = if s == 10 { (100, 750) } else { scaled_sizes(s) };
                entry(
                    &name,
                    Domain::cube(s, -10.0, 10.0)?,
                    0.0,
                    vec![vec![1.0; s]],
                    sizes,
                    levy,
                )
            } else if let Some(s) = split_dim(&name, "trid").filter(|s| *s >= 2) {
                let sf = s as f64;
                let bound = sf * sf;
                let minimizer = (1..=s).map(|i| (i * (s + 1 - i)) as f64).collect();
                let sizes = if s == 12 { (120, 1000) } else { scaled_sizes(s) };
                entry(
                    &name,
                    Domain::cube(s, -bound, bound)?,
                    -sf * (sf + 4.0) * (sf - 1.0) / 6.0,
                    vec![minimizer],
                    sizes,
                    trid,
                )
            } else {
                return Err(Error::UnknownFunction(name));
            }
        }
    };
    Ok(f)
}
