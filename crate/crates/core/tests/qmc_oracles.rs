use std::collections::BTreeSet;

use aego::qmc::{self, CandidatePool, Generator};
use aego::{Domain, Point, SeededRng};
use rand::Rng;

fn key(row: &[f64]) -> Vec<u64> {
    row.iter().map(|v| v.to_bits()).collect()
}

#[test]
fn sobol_matches_reference_generator() {
    // first 32 points of scipy's unscrambled Sobol in 21 dimensions (Joe-Kuo
    // direction numbers), emitted in Gray-code order: compare as sets
    let text = include_str!("fixtures/scipy_sobol_21d_32.csv");
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(|v| v.trim().parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 32);
    assert!(rows[0].iter().all(|v| *v == 0.0));
    let expected: BTreeSet<Vec<u64>> = rows[1..].iter().map(|r| key(r)).collect();

    let pool = qmc::sobol_pool(31, &Domain::unit(21)).unwrap();
    let got: BTreeSet<Vec<u64>> = pool.points().iter().map(|p| key(p)).collect();
    assert_eq!(got, expected);
}

#[test]
fn sobol_supports_table_dimensions() {
    assert!(qmc::sobol_max_dim() >= 21);
    let pool = qmc::sobol_pool(1000, &Domain::unit(12)).unwrap();
    for p in pool.points() {
        assert!(p.iter().all(|v| *v > 0.0 && *v < 1.0));
    }
}

/// Exact star discrepancy of a 2-D point set, evaluated at every critical box.
fn star_discrepancy_2d(points: &[[f64; 2]]) -> f64 {
    let m = points.len() as f64;
    let mut xs: Vec<f64> = points.iter().map(|p| p[0]).chain([1.0]).collect();
    let mut ys: Vec<f64> = points.iter().map(|p| p[1]).chain([1.0]).collect();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let mut worst: f64 = 0.0;
    for &x in &xs {
        for &y in &ys {
            let vol = x * y;
            let open = points.iter().filter(|p| p[0] < x && p[1] < y).count() as f64;
            let closed = points.iter().filter(|p| p[0] <= x && p[1] <= y).count() as f64;
            worst = worst.max(vol - open / m).max(closed / m - vol);
        }
    }
    worst
}

#[test]
fn sobol_discrepancy_beats_random_pools() {
    let m = 64;
    let pool = qmc::sobol_pool(m, &Domain::unit(2)).unwrap();
    let sobol: Vec<[f64; 2]> = pool.points().iter().map(|p| [p[0], p[1]]).collect();
    let d_sobol = star_discrepancy_2d(&sobol);

    let mut rng = SeededRng::new(2024);
    let mean_random = (0..100)
        .map(|_| {
            let pts: Vec<[f64; 2]> = (0..m).map(|_| [rng.random(), rng.random()]).collect();
            star_discrepancy_2d(&pts)
        })
        .sum::<f64>()
        / 100.0;
    assert!(d_sobol < mean_random, "{d_sobol} vs {mean_random}");
}

#[test]
fn grid_shift_is_a_permutation() {
    let m = 8;
    let d = Domain::unit(1);
    let grid: Vec<Point> = (1..=m).map(|i| Point::new(vec![i as f64 / m as f64])).collect();
    let pool = CandidatePool::new(&d, grid.clone(), Generator::External).unwrap();
    let original: BTreeSet<u64> = grid.iter().map(|p| p[0].to_bits()).collect();
    for j in 0..m {
        let shifted = qmc::shift_pool(&pool, &[j as f64 / m as f64]).unwrap();
        let got: BTreeSet<u64> = shifted.points.iter().map(|p| p[0].to_bits()).collect();
        assert_eq!(got, original, "shift {j}/{m}");
    }
}

#[test]
fn grid_shift_permutes_each_axis_of_a_box() {
    let m = 8;
    let d = Domain::new(vec![-2.0, 0.0], vec![2.0, 4.0]).unwrap();
    let grid: Vec<Point> = (1..=m)
        .map(|i| Point::new(d.from_unit(&[i as f64 / m as f64, (m + 1 - i) as f64 / m as f64])))
        .collect();
    let pool = CandidatePool::new(&d, grid, Generator::External).unwrap();
    let axis = |pts: &[Point], k: usize| -> BTreeSet<u64> { pts.iter().map(|p| p[k].to_bits()).collect() };
    for j in 0..m {
        let delta = d.from_unit(&[j as f64 / m as f64, (m - j) as f64 / m as f64]);
        let shifted = qmc::shift_pool(&pool, &delta).unwrap();
        for k in 0..2 {
            assert_eq!(axis(&shifted.points, k), axis(pool.points(), k));
        }
    }
}

#[test]
fn lhs_designs_match_table_sizes() {
    for name in aego::testfns::CATALOG {
        let f = aego::testfns::lookup(name).unwrap();
        let pool = qmc::lhs_initial_design(f.initial_size, &f.domain, &mut SeededRng::new(1)).unwrap();
        assert_eq!(pool.len(), f.initial_size);
        for k in 0..f.dim() {
            let strata: BTreeSet<usize> = pool
                .points()
                .iter()
                .map(|p| ((f.domain.to_unit(p)[k] * f.initial_size as f64) as usize).min(f.initial_size - 1))
                .collect();
            assert_eq!(strata.len(), f.initial_size, "{name} axis {k}");
        }
    }
}
