//! Sampling/importance resampling of batch points with EI-proportional weights.

use log::info;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::acquisition::EiContext;
use crate::domain::{Domain, Point};
use crate::error::{Error, Result};
use crate::qmc::ShiftedPool;
use crate::rng::SeededRng;

/// Sum of raw weights below `WEIGHT_FLOOR * m` triggers the uniform fallback.
pub const WEIGHT_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedPool {
    pub points: Vec<Point>,
    /// Normalized resampling weights.
    pub weights: Vec<f64>,
    /// EI values before normalization.
    pub raw: Vec<f64>,
    /// Set when the raw weights summed below the floor and uniform weights were used.
    pub degenerate: bool,
}

impl WeightedPool {
    /// Normalizes nonnegative raw weights, falling back to uniform weights
    /// when their sum underflows.
    pub fn from_raw(points: Vec<Point>, raw: Vec<f64>) -> Self {
        let m = raw.len();
        let total: f64 = raw.iter().sum();
        let degenerate = total.is_nan() || total < WEIGHT_FLOOR * m as f64;
        let weights = if degenerate {
            info!("EI vanishes over the pool, resampling uniformly");
            vec![1.0 / m as f64; m]
        } else {
            raw.iter().map(|w| w / total).collect()
        };
        WeightedPool {
            points,
            weights,
            raw,
            degenerate,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// EI-weighted view of a shifted pool.
pub fn weigh(pool: &ShiftedPool, ctx: &EiContext<'_>) -> WeightedPool {
    let raw = ctx.ei_batch(&pool.points);
    WeightedPool::from_raw(pool.points.clone(), raw)
}

/// A resampled point with its pool index and normalized weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub index: usize,
    pub point: Point,
    pub weight: f64,
}

/// Draws `count` distinct points without replacement.
///
/// Each draw inverts the cumulative distribution of the remaining weights.
/// Points within the duplicate tolerance of an exclusion or of an earlier
/// draw are not admissible. Once the remaining weight is exhausted the draw
/// continues uniformly over the admissible points.
pub fn resample(
    wp: &WeightedPool,
    count: usize,
    rng: &mut SeededRng,
    exclusions: &[Point],
    domain: &Domain,
) -> Result<Vec<Draw>> {
    let mut admissible: Vec<bool> = wp
        .points
        .iter()
        .map(|p| !exclusions.iter().any(|e| domain.is_duplicate(e, p)))
        .collect();
    let available = admissible.iter().filter(|a| **a).count();
    if available < count {
        return Err(Error::PoolExhausted {
            requested: count,
            available,
        });
    }

    let mut out = Vec::with_capacity(count);
    let mut cumulative = vec![0.0; wp.len()];
    while out.len() < count {
        let mut acc = 0.0;
        for (i, c) in cumulative.iter_mut().enumerate() {
            if admissible[i] {
                acc += wp.weights[i];
            }
            *c = acc;
        }
        let pick = if acc > 0.0 {
            let u = rng.random::<f64>() * acc;
            // first admissible index whose cumulative weight exceeds u
            let mut i = cumulative.partition_point(|c| *c <= u).min(wp.len() - 1);
            while !(admissible[i] && wp.weights[i] > 0.0) {
                i = if i == 0 { wp.len() - 1 } else { i - 1 };
            }
            i
        } else {
            let left: Vec<usize> = (0..wp.len()).filter(|&i| admissible[i]).collect();
            if left.is_empty() {
                return Err(Error::PoolExhausted {
                    requested: count,
                    available: out.len(),
                });
            }
            left[rng.random_range(0..left.len())]
        };
        let point = wp.points[pick].clone();
        for (i, p) in wp.points.iter().enumerate() {
            if admissible[i] && domain.is_duplicate(p, &point) {
                admissible[i] = false;
            }
        }
        out.push(Draw {
            index: pick,
            point,
            weight: wp.weights[pick],
        });
    }
    Ok(out)
}
