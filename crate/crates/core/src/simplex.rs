//! Box-constrained Nelder-Mead minimizer.
//!
//! Trial points are projected onto the box before evaluation, which keeps the
//! simplex feasible without penalty terms.

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_evals: usize,
    /// Stop when the spread of function values over the simplex falls below this.
    pub f_tol: f64,
    /// Stop when every vertex is within this max-norm distance of the best one.
    pub x_tol: f64,
    /// Initial edge length as a fraction of each box width.
    pub initial_step: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            max_evals: 400,
            f_tol: 1e-10,
            x_tol: 1e-8,
            initial_step: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for (v, (a, b)) in x.iter_mut().zip(lower.iter().zip(upper)) {
        *v = v.clamp(*a, *b);
    }
}

/// Minimizes `f` over `[lower, upper]` starting at `x0`.
///
/// Non-finite objective values are treated as `+inf`.
pub fn minimize<F>(mut f: F, x0: &[f64], lower: &[f64], upper: &[f64], opts: &SimplexOptions) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut start = x0.to_vec();
    project(&mut start, lower, upper);
    let mut verts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    verts.push(start.clone());
    for k in 0..n {
        let mut v = start.clone();
        let step = opts.initial_step * (upper[k] - lower[k]);
        // step towards the interior when at or near the upper face
        if v[k] + step <= upper[k] {
            v[k] += step;
        } else {
            v[k] -= step;
        }
        project(&mut v, lower, upper);
        verts.push(v);
    }
    let mut vals: Vec<f64> = verts.iter().map(|v| eval(v, &mut evals)).collect();

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut order: Vec<usize> = (0..=n).collect();
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];

    while evals < opts.max_evals {
        order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
        let (best, worst, second) = (order[0], order[n], order[n.saturating_sub(1)]);

        let spread = vals[worst] - vals[best];
        let size = verts
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&verts[best])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if (spread.is_finite() && spread <= opts.f_tol * (1.0 + vals[best].abs())) || size <= opts.x_tol {
            break;
        }

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &i in &order[..n] {
            for (c, v) in centroid.iter_mut().zip(&verts[i]) {
                *c += v / n as f64;
            }
        }

        let point_along = |t: f64, out: &mut Vec<f64>| {
            for k in 0..n {
                out[k] = centroid[k] + t * (verts[worst][k] - centroid[k]);
            }
            project(out, lower, upper);
        };

        point_along(-alpha, &mut trial);
        let f_r = eval(&trial, &mut evals);
        if f_r < vals[best] {
            let reflected = trial.clone();
            point_along(-gamma, &mut trial);
            let f_e = eval(&trial, &mut evals);
            if f_e < f_r {
                verts[worst].copy_from_slice(&trial);
                vals[worst] = f_e;
            } else {
                verts[worst] = reflected;
                vals[worst] = f_r;
            }
            continue;
        }
        if f_r < vals[second] {
            verts[worst].copy_from_slice(&trial);
            vals[worst] = f_r;
            continue;
        }
        // contraction, outside or inside
        let (t, bound) = if f_r < vals[worst] {
            (-rho, f_r)
        } else {
            (rho, vals[worst])
        };
        point_along(t, &mut trial);
        let f_c = eval(&trial, &mut evals);
        if f_c < bound {
            verts[worst].copy_from_slice(&trial);
            vals[worst] = f_c;
            continue;
        }
        // shrink towards the best vertex
        let anchor = verts[best].clone();
        for &i in &order[1..] {
            for k in 0..n {
                verts[i][k] = anchor[k] + sigma * (verts[i][k] - anchor[k]);
            }
            vals[i] = eval(&verts[i], &mut evals);
        }
    }

    let best = (0..=n).min_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap_or(0);
    SimplexResult {
        x: verts.swap_remove(best),
        f: vals[best],
        evals,
    }
}
