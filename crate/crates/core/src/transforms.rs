//! Martingale Legendre transforms on grids.
//!
//! For a terminal potential `G(y) = Σ g_i(y_i)` the transform at `x` is the
//! largest `a` such that some affine function `a + b·(y - x)` stays below
//! `G(y) + c(x, y)` on the y grid. By LP duality `a` is the lower convex
//! envelope of `G + c(x, ·)` evaluated at `x`, and the slope `b` is the
//! multiplier of the barycenter rows; [`martingale_legendre`] solves that
//! envelope LP once per grid point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{solve_lp, LinearProgram, LpStatus};
use crate::measures::{GridPoint, JointPlan};
use crate::mmot::{DualTriple, MmotProblem, ProductGrid};

/// Optimal value and multipliers of the envelope LP
/// `min Σ λ_j v_j  s.t.  Σ λ_j = 1,  Σ λ_j (y_j - q) = 0,  λ ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopePoint {
    pub value: f64,
    /// Intercept of the supporting affine function at `q` (equals `value`).
    pub intercept: f64,
    /// Multipliers of the barycenter rows: a supporting slope at `q`.
    pub slope: Vec<f64>,
    /// The optimal basis is degenerate, so the slope may not be unique.
    pub ambiguous: bool,
}

/// Lower convex envelope of `(points[j], values[j])` at `query`, with a
/// supporting slope.
pub fn envelope_lp(points: &[GridPoint], values: &[f64], query: &[f64]) -> Result<EnvelopePoint> {
    let mut lp = LinearProgram::with_objective(values.to_vec());
    lp.add_row((0..points.len()).map(|j| (j, 1.0)), 1.0);
    for (k, &q) in query.iter().enumerate() {
        lp.add_row(points.iter().enumerate().map(|(j, p)| (j, p.0[k] - q)), 0.0);
    }
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => {
            let mut slope = sol.dual[1..].to_vec();
            if sol.degenerate {
                if let Some(b) = min_norm_slope(points, values, query, sol.objective_value) {
                    slope = b;
                }
            }
            Ok(EnvelopePoint {
                value: sol.objective_value,
                intercept: sol.objective_value,
                slope,
                ambiguous: sol.degenerate,
            })
        }
        LpStatus::Infeasible => Err(Error::OutsideHull(query.to_vec())),
        LpStatus::Unbounded => Err(Error::Unbounded),
    }
}

/// Among slopes `b` with `value + b·(y_j - q) ≤ v_j` for all `j`, the one of
/// least l1 norm. Used when the envelope basis is degenerate.
fn min_norm_slope(points: &[GridPoint], values: &[f64], query: &[f64], value: f64) -> Option<Vec<f64>> {
    let d = query.len();
    let n = points.len();
    let mut obj = vec![1.0; 2 * d];
    obj.extend(std::iter::repeat_n(0.0, n));
    let mut lp = LinearProgram::with_objective(obj);
    for (j, p) in points.iter().enumerate() {
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(2 * d + 1);
        for (k, &q) in query.iter().enumerate() {
            let dk = p.0[k] - q;
            row.push((2 * k, dk));
            row.push((2 * k + 1, -dk));
        }
        row.push((2 * d + j, 1.0));
        lp.add_row(row, values[j] - value);
    }
    let sol = solve_lp(&lp).ok()?;
    (sol.status == LpStatus::Optimal).then(|| (0..d).map(|k| sol.primal[2 * k] - sol.primal[2 * k + 1]).collect())
}

/// `min Σ λ_j v_j` over convex weights with barycenter `query`.
pub fn lower_convex_envelope(points: &[GridPoint], values: &[f64], query: &[f64]) -> Result<f64> {
    Ok(envelope_lp(points, values, query)?.value)
}

/// One-dimensional envelope through the sorted lower hull.
pub fn lower_convex_envelope_1d(points: &[f64], values: &[f64], query: f64) -> Result<f64> {
    let mut pts: Vec<(f64, f64)> = points.iter().copied().zip(values.iter().copied()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup_by(|a, b| a.0 == b.0);
    let (Some(first), Some(last)) = (pts.first(), pts.last()) else {
        return Err(Error::OutsideHull(vec![query]));
    };
    if query < first.0 || query > last.0 {
        return Err(Error::OutsideHull(vec![query]));
    }
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for p in pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // drop b when it lies on or above the chord a-p
            if (b.1 - a.1) * (p.0 - a.0) >= (p.1 - a.1) * (b.0 - a.0) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let k = hull.partition_point(|h| h.0 < query);
    if k < hull.len() && hull[k].0 == query {
        return Ok(hull[k].1);
    }
    let (a, b) = (hull[k - 1], hull[k]);
    let t = (query - a.0) / (b.0 - a.0);
    Ok(a.1 + t * (b.1 - a.1))
}

/// `Σ_i g_i(y_i)` on the whole y grid.
fn g_plus(problem: &MmotProblem, g: &[Vec<f64>]) -> Vec<f64> {
    (0..problem.y_grid().len())
        .map(|yj| problem.y_multi(yj).iter().enumerate().map(|(i, &b)| g[i][b]).sum())
        .collect()
}

/// `(α, γ)` on the x grid together with an ambiguity flag per point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegendrePair {
    pub alpha: Vec<f64>,
    pub gamma: Vec<Vec<f64>>,
    pub gamma_ambiguous: Vec<bool>,
}

/// Martingale Legendre transform of `Σ g_i` with respect to the problem's
/// cost, tabulated on the x grid.
pub fn martingale_legendre(problem: &MmotProblem, g: &[Vec<f64>]) -> Result<LegendrePair> {
    let gp = g_plus(problem, g);
    let ys = problem.y_grid().points();
    let per_x: Vec<Result<EnvelopePoint>> = problem
        .x_grid()
        .points()
        .par_iter()
        .enumerate()
        .map(|(xi, x)| {
            let values: Vec<f64> = gp.iter().enumerate().map(|(yj, v)| v + problem.cost_at(xi, yj)).collect();
            envelope_lp(ys, &values, &x.0).map_err(|e| match e {
                Error::OutsideHull(_) => Error::DegenerateSupport(x.0.clone()),
                other => other,
            })
        })
        .collect();
    let mut out = LegendrePair {
        alpha: Vec::with_capacity(per_x.len()),
        gamma: Vec::with_capacity(per_x.len()),
        gamma_ambiguous: Vec::with_capacity(per_x.len()),
    };
    for r in per_x {
        let e = r?;
        out.alpha.push(e.value);
        out.gamma.push(e.slope);
        out.gamma_ambiguous.push(e.ambiguous);
    }
    Ok(out)
}

/// `β(y) = max_x [α(x) + γ(x)·(y - x) - c(x, y)]` on the y grid.
pub fn inverse_martingale_legendre(problem: &MmotProblem, alpha: &[f64], gamma: &[Vec<f64>]) -> Vec<f64> {
    let xs = problem.x_grid().points();
    problem
        .y_grid()
        .points()
        .par_iter()
        .enumerate()
        .map(|(yj, y)| {
            xs.iter()
                .enumerate()
                .map(|(xi, x)| {
                    let lin: f64 = gamma[xi].iter().zip(y.0.iter().zip(&x.0)).map(|(b, (a, c))| b * (a - c)).sum();
                    alpha[xi] + lin - problem.cost_at(xi, yj)
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Direction of the successive coordinate transforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordinateTransform {
    /// `φ_j(x_j) = min [α(x) - Σ_{i<j} φ_i(x_i) - Σ_{i>j} f_i(x_i)]`
    Inf,
    /// `ψ_j(y_j) = max [β(y) - Σ_{i<j} ψ_i(y_i) - Σ_{i>j} g_i(y_i)]`
    Sup,
}

/// Successive coordinate Legendre transforms of `target` (tabulated on
/// `grid`) seeded with the per-coordinate potentials `seeds`.
pub fn coordinate_legendre(mode: CoordinateTransform, target: &[f64], seeds: &[Vec<f64>], grid: &ProductGrid) -> Vec<Vec<f64>> {
    let d = grid.axes().len();
    let multi: Vec<Vec<usize>> = (0..grid.len()).map(|k| grid.multi_index(k)).collect();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(d);
    for j in 0..d {
        let init = match mode {
            CoordinateTransform::Inf => f64::INFINITY,
            CoordinateTransform::Sup => f64::NEG_INFINITY,
        };
        let mut cur = vec![init; grid.axes()[j].len()];
        for (k, idx) in multi.iter().enumerate() {
            let mut v = target[k];
            for (i, &a) in idx.iter().enumerate() {
                if i < j {
                    v -= out[i][a];
                } else if i > j {
                    v -= seeds[i][a];
                }
            }
            let slot = &mut cur[idx[j]];
            *slot = match mode {
                CoordinateTransform::Inf => slot.min(v),
                CoordinateTransform::Sup => slot.max(v),
            };
        }
        out.push(cur);
    }
    out
}

/// `α, γ, β, φ, ψ` derived from a dual triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformBundle {
    pub alpha: Vec<f64>,
    pub gamma: Vec<Vec<f64>>,
    pub gamma_ambiguous: Vec<bool>,
    pub beta: Vec<f64>,
    pub phi: Vec<Vec<f64>>,
    pub psi: Vec<Vec<f64>>,
}

impl TransformBundle {
    pub fn build(problem: &MmotProblem, dual: &DualTriple) -> Result<Self> {
        let pair = martingale_legendre(problem, &dual.g)?;
        let beta = inverse_martingale_legendre(problem, &pair.alpha, &pair.gamma);
        let phi = coordinate_legendre(CoordinateTransform::Inf, &pair.alpha, &dual.f, problem.x_grid());
        let psi = coordinate_legendre(CoordinateTransform::Sup, &beta, &dual.g, problem.y_grid());
        Ok(Self {
            alpha: pair.alpha,
            gamma: pair.gamma,
            gamma_ambiguous: pair.gamma_ambiguous,
            beta,
            phi,
            psi,
        })
    }

    /// Largest violations of the defining inequalities.
    pub fn invariants(&self, problem: &MmotProblem) -> BundleInvariants {
        let xs = problem.x_grid().points();
        let ys = problem.y_grid().points();
        let mut affine_over_beta: f64 = 0.0;
        for (xi, x) in xs.iter().enumerate() {
            for (yj, y) in ys.iter().enumerate() {
                let lin: f64 = self.gamma[xi].iter().zip(y.0.iter().zip(&x.0)).map(|(b, (a, c))| b * (a - c)).sum();
                affine_over_beta =
                    affine_over_beta.max(self.alpha[xi] + lin - problem.cost_at(xi, yj) - self.beta[yj]);
            }
        }
        let phi_over_alpha = (0..xs.len())
            .map(|xi| {
                let s: f64 = problem.x_multi(xi).iter().enumerate().map(|(i, &a)| self.phi[i][a]).sum();
                s - self.alpha[xi]
            })
            .fold(0.0, f64::max);
        let beta_over_psi = (0..ys.len())
            .map(|yj| {
                let s: f64 = problem.y_multi(yj).iter().enumerate().map(|(i, &b)| self.psi[i][b]).sum();
                self.beta[yj] - s
            })
            .fold(0.0, f64::max);
        BundleInvariants {
            affine_over_beta,
            phi_over_alpha,
            beta_over_psi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BundleInvariants {
    /// `max [α(x) + γ(x)·(y - x) - c(x, y) - β(y)]`
    pub affine_over_beta: f64,
    /// `max [Σ φ_i(x_i) - α(x)]`
    pub phi_over_alpha: f64,
    /// `max [β(y) - Σ ψ_i(y_i)]`
    pub beta_over_psi: f64,
}

impl BundleInvariants {
    pub fn passes(&self, tol: f64) -> bool {
        self.affine_over_beta <= tol && self.phi_over_alpha <= tol && self.beta_over_psi <= tol
    }
}

/// `H(x, y) = conv[c(x, ·) + Σ g_i](y)` for grid point `xi`.
pub fn envelope_h(problem: &MmotProblem, g: &[Vec<f64>], xi: usize, y: &[f64]) -> Result<f64> {
    let gp = g_plus(problem, g);
    let values: Vec<f64> = gp.iter().enumerate().map(|(yj, v)| v + problem.cost_at(xi, yj)).collect();
    lower_convex_envelope(problem.y_grid().points(), &values, y)
}

/// The four copula-optimality assertions with their largest residuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CopulaReport {
    /// `max [Σ f_i - α]` over the x grid.
    pub f_below_alpha: f64,
    /// `max |Σ f_i - α|` over `supp π¹`.
    pub f_equals_alpha_on_support: f64,
    /// `max [β - Σ g_i]` over the y grid.
    pub g_above_beta: f64,
    /// `max |Σ g_i - β|` over `supp π²`.
    pub g_equals_beta_on_support: f64,
    pub passed: [bool; 4],
}

impl CopulaReport {
    pub fn all_passed(&self) -> bool {
        self.passed.iter().all(|&b| b)
    }
}

/// Checks that the copulas of `plan` solve the transport duals with costs
/// `α` and `β`.
pub fn verify_copula_optimality(
    problem: &MmotProblem,
    dual: &DualTriple,
    plan: &JointPlan,
    bundle: &TransformBundle,
    tol: f64,
) -> CopulaReport {
    let xm = plan.x_masses();
    let ym = plan.y_masses();
    let mut r = [0.0f64; 4];
    for (xi, &alpha) in bundle.alpha.iter().enumerate() {
        let diff = dual.f_sum(problem, xi) - alpha;
        r[0] = r[0].max(diff);
        if xm[xi] > 0.0 {
            r[1] = r[1].max(diff.abs());
        }
    }
    for (yj, &beta) in bundle.beta.iter().enumerate() {
        let diff = beta - dual.g_sum(problem, yj);
        r[2] = r[2].max(diff);
        if ym[yj] > 0.0 {
            r[3] = r[3].max(diff.abs());
        }
    }
    CopulaReport {
        f_below_alpha: r[0],
        f_equals_alpha_on_support: r[1],
        g_above_beta: r[2],
        g_equals_beta_on_support: r[3],
        passed: r.map(|v| v <= tol),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CostSpec;
    use crate::measures::DiscreteMeasure;

    fn pts(v: &[f64]) -> Vec<GridPoint> {
        v.iter().map(|&x| GridPoint(vec![x])).collect()
    }

    #[test]
    fn chord_midpoint() {
        let p = pts(&[-1.0, 0.0, 1.0]);
        let v = [1.0, 2.0, 1.0];
        assert!((lower_convex_envelope(&p, &v, &[0.0]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(lower_convex_envelope_1d(&[-1.0, 0.0, 1.0], &v, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn convex_values_are_their_own_envelope() {
        let xs: Vec<f64> = (-4..=4).map(|k| k as f64 * 0.5).collect();
        let v: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let p = pts(&xs);
        for (x, fx) in xs.iter().zip(&v) {
            assert!((lower_convex_envelope(&p, &v, &[*x]).unwrap() - fx).abs() < 1e-12);
            assert!((lower_convex_envelope_1d(&xs, &v, *x).unwrap() - fx).abs() < 1e-12);
        }
    }

    #[test]
    fn outside_hull_is_an_error() {
        let p = pts(&[0.0, 1.0]);
        assert!(matches!(lower_convex_envelope(&p, &[0.0, 0.0], &[2.0]), Err(Error::OutsideHull(_))));
        assert!(matches!(lower_convex_envelope_1d(&[0.0, 1.0], &[0.0, 0.0], -0.5), Err(Error::OutsideHull(_))));
    }

    #[test]
    fn legendre_of_half_square() {
        // g(y) = y²/2 on {-1, 0, 1}, zero cost, x = 0: the y = 0 row forces a ≤ 0.
        let nu = DiscreteMeasure::new([(-1.0, 0.25), (0.0, 0.5), (1.0, 0.25)]).unwrap();
        let p = MmotProblem::new(
            vec![DiscreteMeasure::dirac(0.0)],
            vec![nu],
            CostSpec::Table {
                table: vec![vec![0.0; 3]],
            },
        )
        .unwrap();
        let g = vec![vec![0.5, 0.0, 0.5]];
        let pair = martingale_legendre(&p, &g).unwrap();
        assert!(pair.alpha[0].abs() < 1e-12);
        assert!(pair.gamma[0][0].abs() < 1e-12);
        let beta = inverse_martingale_legendre(&p, &pair.alpha, &pair.gamma);
        for (b, gv) in beta.iter().zip(&g[0]) {
            assert!(*b <= gv + 1e-12);
        }
    }

    #[test]
    fn coordinate_legendre_one_dimension_is_identity() {
        let grid = ProductGrid::new(vec![vec![0.0, 1.0, 2.0]]);
        let alpha = vec![3.0, -1.0, 0.5];
        let phi = coordinate_legendre(CoordinateTransform::Inf, &alpha, &[vec![0.0; 3]], &grid);
        assert_eq!(phi, vec![alpha.clone()]);
        let psi = coordinate_legendre(CoordinateTransform::Sup, &alpha, &[vec![0.0; 3]], &grid);
        assert_eq!(psi, vec![alpha]);
    }

    #[test]
    fn coordinate_legendre_separable() {
        let a0 = [1.0, 2.0];
        let a1 = [0.5, -1.0, 4.0];
        let grid = ProductGrid::new(vec![vec![0.0, 1.0], vec![0.0, 1.0, 2.0]]);
        let alpha: Vec<f64> = (0..grid.len())
            .map(|k| {
                let m = grid.multi_index(k);
                a0[m[0]] + a1[m[1]]
            })
            .collect();
        let f = vec![vec![0.0, 1.0], vec![0.0, -2.0, 3.0]];
        let phi = coordinate_legendre(CoordinateTransform::Inf, &alpha, &f, &grid);
        for (k, a) in alpha.iter().enumerate() {
            let m = grid.multi_index(k);
            assert!((phi[0][m[0]] + phi[1][m[1]] - a).abs() < 1e-12);
        }
        for (row, seeds) in phi.iter().zip(&f) {
            for (p, s) in row.iter().zip(seeds) {
                assert!(p >= s);
            }
        }
    }
}
