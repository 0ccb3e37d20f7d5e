mod common;

use mmot::cost::CostSpec;
use mmot::geometry::extreme_points_of;
use mmot::measures::{convex_order_check, potential_eval, DiscreteMeasure, GridPoint};
use mmot::mmot::{gauge_normalize, recover_dual, solve_primal, MmotProblem};
use mmot::structure::irreducible_components;
use mmot::transforms::{lower_convex_envelope, lower_convex_envelope_1d, TransformBundle};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ordered_pair(seed: u64, n_nu: usize) -> (DiscreteMeasure, DiscreteMeasure) {
    common::random_ordered_pair(&mut ChaCha8Rng::seed_from_u64(seed), n_nu)
}

fn atoms() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-5.0f64..5.0, 0.01f64..1.0), 1..8)
}

/// Value of `min Σ λ_k v_k` over supports of at most three points whose hull
/// contains `q`, in the plane.
fn brute_envelope_2d(points: &[[f64; 2]], values: &[f64], q: [f64; 2]) -> Option<f64> {
    let n = points.len();
    let mut best: Option<f64> = None;
    let mut consider = |v: f64| best = Some(best.map_or(v, |b: f64| b.min(v)));
    for i in 0..n {
        if points[i] == q {
            consider(values[i]);
        }
        for j in i + 1..n {
            let (a, b) = (points[i], points[j]);
            let d = [b[0] - a[0], b[1] - a[1]];
            let len2 = d[0] * d[0] + d[1] * d[1];
            let t = ((q[0] - a[0]) * d[0] + (q[1] - a[1]) * d[1]) / len2;
            let off = (a[0] + t * d[0] - q[0]).abs() + (a[1] + t * d[1] - q[1]).abs();
            if off <= 1e-12 && (-1e-12..=1.0 + 1e-12).contains(&t) {
                consider((1.0 - t) * values[i] + t * values[j]);
            }
            for k in j + 1..n {
                let c = points[k];
                let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
                if det.abs() < 1e-12 {
                    continue;
                }
                let l1 = ((q[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (q[1] - a[1])) / det;
                let l2 = ((b[0] - a[0]) * (q[1] - a[1]) - (q[0] - a[0]) * (b[1] - a[1])) / det;
                let l0 = 1.0 - l1 - l2;
                if l0 >= -1e-12 && l1 >= -1e-12 && l2 >= -1e-12 {
                    consider(l0 * values[i] + l1 * values[j] + l2 * values[k]);
                }
            }
        }
    }
    best
}

/// Whether `p` is a convex combination of at most four of `others`.
fn in_hull_caratheodory(p: &[f64; 3], others: &[[f64; 3]]) -> bool {
    let n = others.len();
    for mask in 1u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|j| mask >> j & 1 == 1).collect();
        if idx.len() > 4 {
            continue;
        }
        let mut a = DMatrix::<f64>::zeros(4, idx.len());
        for (c, &j) in idx.iter().enumerate() {
            for r in 0..3 {
                a[(r, c)] = others[j][r];
            }
            a[(3, c)] = 1.0;
        }
        let b = DVector::from_vec(vec![p[0], p[1], p[2], 1.0]);
        let lambda = a.clone().svd(true, true).solve(&b, 1e-12).unwrap();
        if (&a * &lambda - &b).amax() <= 1e-9 && lambda.iter().all(|&l| l >= -1e-9) {
            return true;
        }
    }
    false
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn potential_is_lipschitz_and_convex(a in atoms(), x in -8.0f64..8.0, y in -8.0f64..8.0) {
        let m = DiscreteMeasure::new(a).unwrap();
        let (ux, uy) = (potential_eval(&m, x).unwrap(), potential_eval(&m, y).unwrap());
        prop_assert!((ux - uy).abs() <= m.mass() * (x - y).abs() + 1e-12);
        let mid = potential_eval(&m, 0.5 * (x + y)).unwrap();
        prop_assert!(mid <= 0.5 * (ux + uy) + 1e-12);
    }

    #[test]
    fn convex_order_is_antisymmetric(seed in any::<u64>(), k in 2usize..8) {
        let (mu, nu) = ordered_pair(seed, k);
        prop_assert!(convex_order_check(&mu, &nu, 1e-9).unwrap().ordered);
        if convex_order_check(&nu, &mu, 1e-9).unwrap().ordered {
            prop_assert!(mu.max_atom_diff(&nu) <= 1e-9);
        }
    }

    #[test]
    fn decomposition_ignores_atom_order(seed in any::<u64>(), k in 2usize..9, shuffle in any::<u64>()) {
        let (mu, nu) = ordered_pair(seed, k);
        let mut rng = ChaCha8Rng::seed_from_u64(shuffle);
        let mut mu_atoms = mu.atoms().to_vec();
        let mut nu_atoms = nu.atoms().to_vec();
        rand::seq::SliceRandom::shuffle(mu_atoms.as_mut_slice(), &mut rng);
        rand::seq::SliceRandom::shuffle(nu_atoms.as_mut_slice(), &mut rng);
        let a = irreducible_components(&mu, &nu).unwrap();
        let b = irreducible_components(&DiscreteMeasure::new(mu_atoms).unwrap(), &DiscreteMeasure::new(nu_atoms).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn scaling_the_cost_keeps_the_basis(seed in any::<u64>(), k in 2usize..6, table_seed in any::<u64>()) {
        let (mu, nu) = ordered_pair(seed, k);
        let mut rng = ChaCha8Rng::seed_from_u64(table_seed);
        let table: Vec<Vec<f64>> = (0..mu.len())
            .map(|_| (0..nu.len()).map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0)).collect())
            .collect();
        let base = MmotProblem::new(vec![mu], vec![nu], CostSpec::Table { table: table.clone() }).unwrap();
        let s1 = solve_primal(&base).unwrap();
        for lambda in [2.0, 4.0] {
            let scaled = table.iter().map(|r| r.iter().map(|v| lambda * v).collect()).collect();
            let s = solve_primal(&base.with_cost(CostSpec::Table { table: scaled }).unwrap()).unwrap();
            prop_assert_eq!(&s.solution.basis, &s1.solution.basis);
            prop_assert!((s.value - lambda * s1.value).abs() <= 1e-12 * (1.0 + s.value.abs()));
        }
    }

    #[test]
    fn solving_is_deterministic(seed in any::<u64>(), k in 2usize..8) {
        let (mu, nu) = ordered_pair(seed, k);
        let p = MmotProblem::new(vec![mu], vec![nu], CostSpec::euclidean_neg()).unwrap();
        let a = solve_primal(&p).unwrap();
        let b = solve_primal(&p).unwrap();
        prop_assert_eq!(a.plan, b.plan);
        prop_assert_eq!(a.solution, b.solution);
    }

    #[test]
    fn hull_envelope_matches_lp(vals in prop::collection::vec(-3.0f64..3.0, 2..9), q in 0.0f64..1.0) {
        let n = vals.len();
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let pts: Vec<GridPoint> = xs.iter().map(|&x| GridPoint(vec![x])).collect();
        let a = lower_convex_envelope_1d(&xs, &vals, q).unwrap();
        let b = lower_convex_envelope(&pts, &vals, &[q]).unwrap();
        prop_assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
    }

    #[test]
    fn planar_envelope_matches_small_supports(
        coords in prop::collection::vec((-2i32..=2, -2i32..=2), 5),
        vals in prop::collection::vec(-3.0f64..3.0, 5),
        w in prop::collection::vec(0.01f64..1.0, 5),
    ) {
        let mut pts: Vec<[f64; 2]> = Vec::new();
        let mut values = Vec::new();
        for ((cx, cy), v) in coords.iter().zip(&vals) {
            let p = [*cx as f64, *cy as f64];
            if !pts.contains(&p) {
                pts.push(p);
                values.push(*v);
            }
        }
        let total: f64 = w[..pts.len()].iter().sum();
        let q = [0, 1].map(|c| pts.iter().zip(&w).map(|(p, wi)| p[c] * wi).sum::<f64>() / total);
        let grid: Vec<GridPoint> = pts.iter().map(|p| GridPoint(p.to_vec())).collect();
        let lp = lower_convex_envelope(&grid, &values, &q).unwrap();
        let brute = brute_envelope_2d(&pts, &values, q).unwrap();
        prop_assert!((lp - brute).abs() <= 1e-9, "{lp} vs {brute}");
    }

    #[test]
    fn extreme_points_match_caratheodory(coords in prop::collection::vec((0i32..4, 0i32..4, 0i32..4), 6)) {
        let mut pts: Vec<[f64; 3]> = Vec::new();
        for (a, b, c) in coords {
            let p = [a as f64, b as f64, c as f64];
            if !pts.contains(&p) {
                pts.push(p);
            }
        }
        let grid: Vec<GridPoint> = pts.iter().map(|p| GridPoint(p.to_vec())).collect();
        let fast = extreme_points_of(&grid);
        let brute: Vec<usize> = (0..pts.len())
            .filter(|&i| {
                let others: Vec<[f64; 3]> = pts.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, p)| *p).collect();
                !in_hull_caratheodory(&pts[i], &others)
            })
            .collect();
        prop_assert_eq!(fast, brute);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn transform_bundle_inequalities_hold(seed in any::<u64>(), k1 in 2usize..5, k2 in 2usize..5, cost_kind in 0usize..3) {
        let (mu1, nu1) = ordered_pair(seed, k1);
        let (mu2, nu2) = ordered_pair(seed.wrapping_add(1), k2);
        let cost = match cost_kind {
            0 => CostSpec::euclidean_neg(),
            1 => CostSpec::euclidean_pos(),
            _ => CostSpec::NegProductPair { i: 0, j: 1 },
        };
        let p = MmotProblem::new(vec![mu1, mu2], vec![nu1, nu2], cost).unwrap();
        let primal = solve_primal(&p).unwrap();
        let dual = gauge_normalize(&recover_dual(&p, &primal).unwrap(), &p);
        let bundle = TransformBundle::build(&p, &dual).unwrap();
        let inv = bundle.invariants(&p);
        prop_assert!(inv.affine_over_beta <= 1e-8, "{inv:?}");
        prop_assert!(inv.beta_over_psi <= 1e-8, "{inv:?}");
    }
}
