#![allow(dead_code)]

use mmot::lp::LinearProgram;
use mmot::measures::{convex_order_check, DiscreteMeasure};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Random pair `mu ≤_c nu` built by collapsing contiguous groups of `nu`'s
/// atoms onto one or two points with the group's mass and mean.
pub fn random_ordered_pair<R: Rng>(rng: &mut R, n_nu: usize) -> (DiscreteMeasure, DiscreteMeasure) {
    let mut positions: Vec<i32> = Vec::new();
    while positions.len() < n_nu {
        let p = rng.gen_range(-12..=12);
        if !positions.contains(&p) {
            positions.push(p);
        }
    }
    positions.sort_unstable();
    let raw: Vec<f64> = (0..n_nu).map(|_| rng.gen_range(1..=6) as f64).collect();
    let total: f64 = raw.iter().sum();
    let nu_atoms: Vec<(f64, f64)> = positions.iter().zip(&raw).map(|(&p, &w)| (p as f64 * 0.25, w / total)).collect();

    let mut mu_atoms = Vec::new();
    let mut start = 0;
    while start < n_nu {
        let len = rng.gen_range(1..=(n_nu - start).min(4));
        let group = &nu_atoms[start..start + len];
        let m: f64 = group.iter().map(|a| a.1).sum();
        let b = group.iter().map(|a| a.0 * a.1).sum::<f64>() / m;
        let spread = group.last().unwrap().0 - group[0].0;
        let split = len >= 3 && rng.gen_bool(0.5);
        let candidate = if split {
            let delta = spread * rng.gen_range(0.05..0.2);
            vec![(b - delta, 0.5 * m), (b + delta, 0.5 * m)]
        } else {
            vec![(b, m)]
        };
        let group_nu = DiscreteMeasure::new(group.iter().copied()).unwrap();
        let cand = DiscreteMeasure::new(candidate.iter().copied()).unwrap();
        if convex_order_check(&cand, &group_nu, 1e-12).unwrap().ordered {
            mu_atoms.extend(candidate);
        } else {
            mu_atoms.push((b, m));
        }
        start += len;
    }
    (DiscreteMeasure::new(mu_atoms).unwrap(), DiscreteMeasure::new(nu_atoms).unwrap())
}

/// Minimum of `c·x` over `{A x = b, x ≥ 0}` by enumerating every column set
/// with full column rank; `None` if no basic solution is feasible.
pub fn vertex_enumeration_min(lp: &LinearProgram) -> Option<f64> {
    let n = lp.n_vars;
    let m = lp.rows.len();
    assert!(n <= 16, "exhaustive enumeration is for tiny programs");
    let mut a = DMatrix::<f64>::zeros(m, n);
    for (r, row) in lp.rows.iter().enumerate() {
        for (&j, &v) in row.indices.iter().zip(&row.coefs) {
            a[(r, j)] += v;
        }
    }
    let b = DVector::from_iterator(m, lp.rows.iter().map(|r| r.rhs));
    let mut best: Option<f64> = None;
    for mask in 1u32..(1 << n) {
        let cols: Vec<usize> = (0..n).filter(|j| mask >> j & 1 == 1).collect();
        if cols.len() > m {
            continue;
        }
        let sub = a.select_columns(&cols);
        let svd = sub.clone().svd(true, true);
        let smax = svd.singular_values.max();
        if svd.singular_values.min() <= 1e-10 * smax.max(1.0) {
            continue;
        }
        let xs = svd.solve(&b, 1e-12).unwrap();
        if (&sub * &xs - &b).amax() > 1e-9 || xs.iter().any(|&v| v < -1e-12) {
            continue;
        }
        let value: f64 = cols.iter().zip(xs.iter()).map(|(&j, &v)| lp.objective[j] * v).sum();
        best = Some(best.map_or(value, |bv: f64| bv.min(value)));
    }
    best
}
