//! Candidate pools: Sobol points, maximin Latin hypercubes and random shifts.

use std::io::{BufRead, Write};
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Domain, Point};
use crate::error::{Error, Result};
use crate::rng::SeededRng;

const JOE_KUO: &str = include_str!("../data/new-joe-kuo-6.64");
const BITS: usize = 32;

/// Number of iterations of the maximin swap phase of [`lhs_initial_design`].
pub const LHS_SWAP_ITERATIONS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    Sobol,
    Lhs,
    External,
}

/// A finite set of points inside a domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePool {
    domain: Domain,
    points: Vec<Point>,
    generator: Generator,
}

impl CandidatePool {
    pub fn new(domain: &Domain, points: Vec<Point>, generator: Generator) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("a pool needs at least one point".into()));
        }
        for p in &points {
            domain.check(p)?;
        }
        Ok(CandidatePool {
            domain: domain.clone(),
            points,
            generator,
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn generator(&self) -> Generator {
        self.generator
    }

    /// Writes one point per line, comma separated, with round-trip precision.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for p in &self.points {
            let row: Vec<String> = p.iter().map(|v| format!("{v:?}")).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Reads a pool written by [`CandidatePool::write_csv`] or produced by an
    /// external design generator. Blank lines and `#` comments are skipped.
    pub fn read_csv<R: BufRead>(input: R, domain: &Domain) -> Result<Self> {
        let mut points = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let coords = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            if coords.len() != domain.dim() {
                return Err(Error::Parse(format!(
                    "line {}: expected {} columns, found {}",
                    lineno + 1,
                    domain.dim(),
                    coords.len()
                )));
            }
            points.push(Point::new(coords));
        }
        CandidatePool::new(domain, points, Generator::External)
    }
}

/// A pool after a random shift, with the shift vector kept for audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftedPool {
    pub points: Vec<Point>,
    /// The uniform draw `Δ` in domain coordinates; the applied offset is `Δ - lower`.
    pub shift: Vec<f64>,
}

impl ShiftedPool {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

struct SobolTable {
    // directions[d][k] is the k-th direction number of dimension d, left aligned in 32 bits
    directions: Vec<[u32; BITS]>,
}

fn sobol_table() -> &'static SobolTable {
    static TABLE: OnceLock<SobolTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut directions = Vec::new();
        let mut first = [0u32; BITS];
        for (k, v) in first.iter_mut().enumerate() {
            *v = 1 << (31 - k);
        }
        directions.push(first);

        for line in JOE_KUO.lines().skip(1) {
            let fields: Vec<u32> = line
                .split_whitespace()
                .map(|f| f.parse().expect("direction table is well formed"))
                .collect();
            if fields.is_empty() {
                continue;
            }
            let (degree, coeffs) = (fields[1] as usize, fields[2]);
            let m = &fields[3..3 + degree];
            let mut v = [0u32; BITS];
            for k in 0..degree.min(BITS) {
                v[k] = m[k] << (31 - k);
            }
            for k in degree..BITS {
                v[k] = v[k - degree] ^ (v[k - degree] >> degree);
                for j in 1..degree {
                    if (coeffs >> (degree - 1 - j)) & 1 == 1 {
                        v[k] ^= v[k - j];
                    }
                }
            }
            directions.push(v);
        }
        SobolTable { directions }
    })
}

/// Largest dimension supported by the bundled direction numbers.
pub fn sobol_max_dim() -> usize {
    sobol_table().directions.len()
}

/// The `index`-th point (natural order) of the unit-cube Sobol sequence.
pub fn sobol_point(index: u64, dim: usize) -> Result<Vec<f64>> {
    let table = sobol_table();
    if dim > table.directions.len() {
        return Err(Error::DimensionUnsupported {
            dim,
            max: table.directions.len(),
        });
    }
    if index >= 1 << BITS {
        return Err(Error::InvalidArgument(format!("Sobol index {index} exceeds 2^32 - 1")));
    }
    let scale = 1.0 / (1u64 << BITS) as f64;
    Ok(table.directions[..dim]
        .iter()
        .map(|v| {
            let mut acc = 0u32;
            let mut i = index;
            let mut k = 0;
            while i != 0 {
                if i & 1 == 1 {
                    acc ^= v[k];
                }
                i >>= 1;
                k += 1;
            }
            acc as f64 * scale
        })
        .collect())
}

/// First `m` Sobol points after the origin, mapped into `domain`.
pub fn sobol_pool(m: usize, domain: &Domain) -> Result<CandidatePool> {
    if m == 0 {
        return Err(Error::InvalidArgument("pool size must be at least 1".into()));
    }
    let points = (1..=m as u64)
        .map(|i| sobol_point(i, domain.dim()).map(|u| Point::new(domain.from_unit(&u))))
        .collect::<Result<Vec<_>>>()?;
    CandidatePool::new(domain, points, Generator::Sobol)
}

/// Default pool size for dimension `s`, inside the recommended `[50 s, 100 s]`.
pub fn default_pool_size(dim: usize) -> usize {
    75 * dim
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Random coordinate swaps that are kept only when they strictly increase the
/// minimum pairwise distance. Returns the squared minimum distance before and
/// after the swap phase.
pub(crate) fn maximin_swaps(rows: &mut [Vec<f64>], iterations: usize, rng: &mut SeededRng) -> (f64, f64) {
    let n = rows.len();
    if n < 3 {
        let d = if n == 2 {
            squared_distance(&rows[0], &rows[1])
        } else {
            f64::INFINITY
        };
        return (d, d);
    }
    let s = rows[0].len();
    let mut dist = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = squared_distance(&rows[i], &rows[j]);
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    let closest = |dist: &[Vec<f64>]| {
        let mut best = (f64::INFINITY, 0, 1);
        for (i, row) in dist.iter().enumerate() {
            for (j, &d) in row.iter().enumerate().skip(i + 1) {
                if d < best.0 {
                    best = (d, i, j);
                }
            }
        }
        best
    };

    let (initial, mut a, mut b) = closest(&dist);
    let mut current = initial;
    let mut row_i = vec![0.0; n];
    let mut row_j = vec![0.0; n];
    for _ in 0..iterations {
        // move one endpoint of the closest pair
        let i = if rng.random::<bool>() { a } else { b };
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let k = rng.random_range(0..s);
        let (xi, xj) = (rows[i][k], rows[j][k]);
        for l in 0..n {
            let xl = rows[l][k];
            row_i[l] = dist[i][l] - (xi - xl).powi(2) + (xj - xl).powi(2);
            row_j[l] = dist[j][l] - (xj - xl).powi(2) + (xi - xl).powi(2);
        }
        row_i[i] = 0.0;
        row_j[j] = 0.0;
        row_i[j] = dist[i][j];
        row_j[i] = dist[i][j];

        let mut trial_min = f64::INFINITY;
        for p in 0..n {
            for q in p + 1..n {
                let d = if p == i || q == i {
                    row_i[if p == i { q } else { p }]
                } else if p == j || q == j {
                    row_j[if p == j { q } else { p }]
                } else {
                    dist[p][q]
                };
                trial_min = trial_min.min(d);
            }
        }
        if trial_min > current {
            rows[i][k] = xj;
            rows[j][k] = xi;
            for l in 0..n {
                if l != i && l != j {
                    dist[i][l] = row_i[l];
                    dist[l][i] = row_i[l];
                    dist[j][l] = row_j[l];
                    dist[l][j] = row_j[l];
                }
            }
            // exact recomputation avoids drift from the incremental updates
            for l in 0..n {
                if l != i {
                    let d = squared_distance(&rows[i], &rows[l]);
                    dist[i][l] = d;
                    dist[l][i] = d;
                }
                if l != j {
                    let d = squared_distance(&rows[j], &rows[l]);
                    dist[j][l] = d;
                    dist[l][j] = d;
                }
            }
            let (d, na, nb) = closest(&dist);
            current = d;
            a = na;
            b = nb;
        }
    }
    (initial, current)
}

/// Seeded Latin hypercube of `n` points, improved towards maximin distance.
pub fn lhs_initial_design(n: usize, domain: &Domain, rng: &mut SeededRng) -> Result<CandidatePool> {
    if n < 2 {
        return Err(Error::InvalidArgument(
            "a Latin hypercube needs at least 2 points".into(),
        ));
    }
    let s = domain.dim();
    let mut rows = vec![vec![0.0; s]; n];
    let mut strata: Vec<usize> = (0..n).collect();
    for k in 0..s {
        strata.shuffle(rng);
        for (row, &cell) in rows.iter_mut().zip(&strata) {
            row[k] = (cell as f64 + rng.random::<f64>()) / n as f64;
        }
    }
    maximin_swaps(&mut rows, LHS_SWAP_ITERATIONS, rng);
    let points = rows.iter().map(|u| Point::new(domain.from_unit(u))).collect();
    CandidatePool::new(domain, points, Generator::Lhs)
}

/// Modular wrap of a shifted coordinate back into `[a, b]`.
///
/// Values above `b` re-enter from `a`, values below `a` re-enter from `b`;
/// values in the closed interval are left untouched.
pub fn wrap_coordinate(shifted: f64, a: f64, b: f64) -> f64 {
    let wrapped = if shifted > b {
        a + (shifted - b)
    } else if shifted < a {
        b - (a - shifted)
    } else {
        shifted
    };
    wrapped.clamp(a, b)
}

/// Adds `offset` to `z` and wraps the result into `[a, b]`.
pub fn shift_coordinate(z: f64, offset: f64, a: f64, b: f64) -> f64 {
    wrap_coordinate(z + offset, a, b)
}

/// Applies the shift `delta` (a point of the domain) to every pool point.
///
/// The offset added along coordinate `k` is `delta[k] - lower[k]`, so
/// `delta = lower` is the identity and a uniform `delta` is a uniform shift
/// modulo the box period.
pub fn shift_pool(pool: &CandidatePool, delta: &[f64]) -> Result<ShiftedPool> {
    let domain = pool.domain();
    domain.check(delta)?;
    let (lo, hi) = (domain.lower(), domain.upper());
    let points = pool
        .points()
        .iter()
        .map(|p| {
            Point::new(
                p.iter()
                    .enumerate()
                    .map(|(k, z)| shift_coordinate(*z, delta[k] - lo[k], lo[k], hi[k]))
                    .collect(),
            )
        })
        .collect();
    Ok(ShiftedPool {
        points,
        shift: delta.to_vec(),
    })
}

/// Random shift with `Δ ~ U(D)`.
pub fn random_shift(pool: &CandidatePool, rng: &mut SeededRng) -> ShiftedPool {
    let domain = pool.domain();
    let delta: Vec<f64> = (0..domain.dim())
        .map(|k| domain.lower()[k] + rng.random::<f64>() * domain.width(k))
        .collect();
    shift_pool(pool, &delta).expect("uniform shift lies in the domain")
}
