//! Worked instances with closed-form or independently computed claims.
//!
//! * `ex2_4`: a four-point conditional for `c = -‖x - y‖₂` from a single point.
//! * `ex2_5`: a two-dimensional value equal to a one-dimensional value for a
//!   cost reading only the first coordinate.
//! * `ex2_7`: a max-norm cost under which every martingale plan is optimal.
//! * `ex2_8`: `c = -y₁y₂` pushing all terminal mass onto the diagonal.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cost::CostSpec;
use crate::error::{Error, Result};
use crate::geometry::{check_conditional_extremality, check_graph_structure, three_point_structure_1d, twist_check, NOISE_FLOOR};
use crate::lp::solve_lp;
use crate::measures::{copulas_of, discretize_density, disintegrate, DensitySpec, DiscreteMeasure, JointPlan};
use crate::mmot::{
    build_lp, certify, constraint_residual, gauge_normalize, product_plan, recover_dual, solve_primal, DualTriple,
    MmotProblem, NormalizedChi, PrimalSolution,
};
use crate::scenario::Assertion;
use crate::transforms::{verify_copula_optimality, TransformBundle};

const CLAIM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Example {
    Ex2_4,
    Ex2_5,
    Ex2_7,
    Ex2_8,
}

impl Example {
    pub const ALL: [Example; 4] = [Example::Ex2_4, Example::Ex2_5, Example::Ex2_7, Example::Ex2_8];

    pub fn default_n(self) -> usize {
        match self {
            Example::Ex2_4 => 1,
            Example::Ex2_5 => 12,
            Example::Ex2_7 | Example::Ex2_8 => 8,
        }
    }

    /// Largest accepted grid parameter.
    pub fn max_n(self) -> usize {
        match self {
            Example::Ex2_4 => 1,
            Example::Ex2_5 | Example::Ex2_8 => 12,
            Example::Ex2_7 => 16,
        }
    }
}

impl fmt::Display for Example {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Example::Ex2_4 => "ex2_4",
            Example::Ex2_5 => "ex2_5",
            Example::Ex2_7 => "ex2_7",
            Example::Ex2_8 => "ex2_8",
        })
    }
}

impl FromStr for Example {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Example::ALL
            .into_iter()
            .find(|e| e.to_string() == s)
            .ok_or_else(|| Error::Parse(format!("unknown example {s:?}; expected one of ex2_4, ex2_5, ex2_7, ex2_8")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reproduction {
    pub example: Example,
    pub n: usize,
    pub value: f64,
    pub claims: Vec<Assertion>,
    /// Diagnostics that are reported but not asserted.
    pub info: Value,
    pub passed: bool,
}

impl Reproduction {
    fn new(example: Example, n: usize, value: f64, claims: Vec<Assertion>, info: Value) -> Self {
        let passed = claims.iter().all(|c| c.passed);
        Self {
            example,
            n,
            value,
            claims,
            info,
            passed,
        }
    }
}

/// Runs `example` at grid parameter `n` (`None` for the default), checking
/// value and certificate claims at `tol` (default `1e-8`).
pub fn reproduce(example: Example, n: Option<usize>, tol: Option<f64>) -> Result<Reproduction> {
    let tol = tol.unwrap_or(CLAIM_TOL);
    let n = check_n(example, n)?;
    match example {
        Example::Ex2_4 => ex2_4(tol),
        Example::Ex2_5 => ex2_5(n, tol),
        Example::Ex2_7 => ex2_7(n, tol),
        Example::Ex2_8 => ex2_8(n, tol),
    }
}

fn check_n(example: Example, n: Option<usize>) -> Result<usize> {
    let n = n.unwrap_or_else(|| example.default_n());
    let min_n = if example == Example::Ex2_4 { 1 } else { 2 };
    if n < min_n || n > example.max_n() {
        return Err(Error::InvalidProblem(format!(
            "{example} accepts n in [{min_n}, {}], got {n}",
            example.max_n()
        )));
    }
    if example == Example::Ex2_5 && !n.is_multiple_of(2) {
        return Err(Error::InvalidProblem(format!("ex2_5 needs an even n for aligned grids, got {n}")));
    }
    Ok(n)
}

/// The main problem solved by `example` at grid parameter `n`.
pub fn example_problem(example: Example, n: Option<usize>) -> Result<MmotProblem> {
    let n = check_n(example, n)?;
    match example {
        Example::Ex2_4 => ex2_4_problem(),
        Example::Ex2_5 => Ok(ex2_5_problems(n)?.2),
        Example::Ex2_7 => ex2_7_problem(n),
        Example::Ex2_8 => ex2_8_problem(n),
    }
}

fn uniform(lo: f64, hi: f64, cells: usize) -> Result<DiscreteMeasure> {
    discretize_density(&DensitySpec::uniform(lo, hi), cells)
}

fn certificate_claims(problem: &MmotProblem, primal: &PrimalSolution, tol: f64, claims: &mut Vec<Assertion>) -> Result<DualTriple> {
    let dual = recover_dual(problem, primal)?;
    let cert = certify(problem, &dual, &primal.plan);
    claims.push(Assertion::at_most("dual_pointwise_violation", cert.max_violation, tol));
    claims.push(Assertion::at_most("dual_support_residual", cert.max_support_residual, tol));
    claims.push(Assertion::at_most("duality_gap", cert.gap.abs(), tol));
    Ok(dual)
}

fn copula_claims(
    problem: &MmotProblem,
    dual: &DualTriple,
    plan: &JointPlan,
    tol: f64,
    claims: &mut Vec<Assertion>,
) -> Result<TransformBundle> {
    let bundle = TransformBundle::build(problem, dual)?;
    let r = verify_copula_optimality(problem, dual, plan, &bundle, tol);
    claims.push(Assertion::at_most("f_below_alpha", r.f_below_alpha, tol));
    claims.push(Assertion::at_most("f_equals_alpha_on_support", r.f_equals_alpha_on_support, tol));
    claims.push(Assertion::at_most("g_above_beta", r.g_above_beta, tol));
    claims.push(Assertion::at_most("g_equals_beta_on_support", r.g_equals_beta_on_support, tol));
    Ok(bundle)
}

/// The quadratic certificate `f_i = x²/2`, `g_i = y²/2 + 1/4`, `h_i = x_i`
/// for `c = -‖x - y‖₂`: `-‖x-y‖²/2 - 1/2 ≤ -‖x - y‖` with equality on the
/// unit sphere.
pub fn quadratic_certificate(problem: &MmotProblem) -> DualTriple {
    let d = problem.dim();
    let f = problem.mus().iter().map(|m| m.positions().map(|x| 0.5 * x * x).collect()).collect();
    let g = problem
        .nus()
        .iter()
        .map(|m| m.positions().map(|y| 0.5 * y * y + 0.5 / d as f64).collect())
        .collect();
    let h = problem.x_grid().points().iter().map(|x| x.0.clone()).collect();
    DualTriple { f, g, h }
}

fn ex2_4_problem() -> Result<MmotProblem> {
    let nu = DiscreteMeasure::new([(-1.0, 0.25), (0.0, 0.5), (1.0, 0.25)])?;
    MmotProblem::new(vec![DiscreteMeasure::dirac(0.0); 2], vec![nu.clone(), nu], CostSpec::euclidean_neg())
}

fn ex2_4(tol: f64) -> Result<Reproduction> {
    let problem = ex2_4_problem()?;
    let primal = solve_primal(&problem)?;
    let mut claims = vec![Assertion::at_most("value_equals_minus_one", (primal.value + 1.0).abs(), tol)];
    certificate_claims(&problem, &primal, tol, &mut claims)?;
    let ex = check_conditional_extremality(&primal.plan, NOISE_FLOOR);
    let support = ex.records.first().map_or(0, |r| r.support_size);
    claims.push(Assertion::at_least("conditional_support_size", support as f64, 4.0));
    claims.push(Assertion::at_most("conditional_support_size_max", support as f64, 4.0));
    claims.push(Assertion::at_least("extreme_fraction", ex.worst_fraction, 1.0));
    let on_circle = disintegrate(&primal.plan)
        .iter()
        .flat_map(|c| c.atoms.iter().map(|&(j, _)| problem.y_grid().points()[j].0.iter().map(|v| v * v).sum::<f64>()))
        .map(|r2| (r2 - 1.0).abs())
        .fold(0.0, f64::max);
    claims.push(Assertion::at_most("support_on_unit_circle", on_circle, 1e-12));

    let cert = quadratic_certificate(&problem);
    let c = certify(&problem, &cert, &primal.plan);
    let (mut tight, mut min_off) = (0.0f64, f64::INFINITY);
    for xi in 0..problem.x_grid().len() {
        for (yj, y) in problem.y_grid().points().iter().enumerate() {
            let dist = y.0.iter().zip(&problem.x_grid().points()[xi].0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let slack = cert.slack(&problem, xi, yj);
            if (dist - 1.0).abs() < 1e-12 {
                tight = tight.max(slack.abs());
            } else {
                min_off = min_off.min(slack);
            }
        }
    }
    claims.push(Assertion::at_most("certificate_violation", c.max_violation, tol));
    claims.push(Assertion::at_most("certificate_value_gap", (cert.objective(&problem) - primal.value).abs(), tol));
    claims.push(Assertion::at_most("certificate_tight_on_unit_sphere", tight, tol));
    claims.push(Assertion::at_least("certificate_slack_off_unit_sphere", min_off, tol));
    let info = json!({ "plan": primal.plan, "quadratic_certificate": cert });
    Ok(Reproduction::new(Example::Ex2_4, 1, primal.value, claims, info))
}

/// Per-x conditionals of a one-dimensional plan as `(nu atom, weight)` lists
/// indexed by mu atom.
fn conditionals_1d(plan: &JointPlan, n_mu: usize) -> Vec<Vec<(usize, f64)>> {
    let mut out = vec![Vec::new(); n_mu];
    for c in disintegrate(plan) {
        out[c.x_index] = c.atoms;
    }
    out
}

/// The two-dimensional plan that moves one coordinate at a time:
/// `π_x = ½ κ(x₁) ⊗ δ_{x₂} + ½ δ_{x₁} ⊗ κ(x₂)` with `κ(a) = 2 π*_a - δ_a`,
/// over the product first copula `μ₁ ⊗ μ₂`.
pub fn one_coordinate_plan(problem: &MmotProblem, one_d: &JointPlan) -> Result<JointPlan> {
    let mu = &problem.mus()[0];
    let nu = &problem.nus()[0];
    let conds = conditionals_1d(one_d, mu.len());
    let mut kappa: Vec<Vec<(usize, f64)>> = Vec::with_capacity(mu.len());
    for (k, x) in mu.positions().enumerate() {
        let stay = nu
            .index_of(x)
            .ok_or_else(|| Error::InvalidProblem(format!("mu atom {x} is not a nu atom; grids are not aligned")))?;
        let mut row: Vec<(usize, f64)> = conds[k].iter().map(|&(j, w)| (j, 2.0 * w)).collect();
        match row.iter_mut().find(|a| a.0 == stay) {
            Some(a) => a.1 -= 1.0,
            None => row.push((stay, -1.0)),
        }
        if row.iter().any(|a| a.1 < -1e-12) {
            return Err(Error::InvalidPlan(format!("conditional at {x} keeps less than half its mass in place")));
        }
        row.retain(|a| a.1 > 1e-15);
        kappa.push(row);
    }
    let stay_index: Vec<usize> = mu.positions().map(|x| nu.index_of(x).expect("checked above")).collect();
    let mu_w: Vec<f64> = mu.weights().collect();
    let mut entries = Vec::new();
    for a in 0..mu.len() {
        for b in 0..mu.len() {
            let xi = problem.x_grid().flat_index(&[a, b]);
            let px = mu_w[a] * mu_w[b];
            for &(j, w) in &kappa[a] {
                entries.push((xi, problem.y_grid().flat_index(&[j, stay_index[b]]), 0.5 * px * w));
            }
            for &(j, w) in &kappa[b] {
                entries.push((xi, problem.y_grid().flat_index(&[stay_index[a], j]), 0.5 * px * w));
            }
        }
    }
    JointPlan::new(2, problem.x_grid().points().to_vec(), problem.y_grid().points().to_vec(), entries)
}

/// The one-dimensional problem, the Euclidean two-dimensional problem and
/// the two-dimensional problem with cost `|x₁ - y₁|`.
fn ex2_5_problems(n: usize) -> Result<(MmotProblem, MmotProblem, MmotProblem)> {
    let mu = uniform(-0.5, 0.5, n)?;
    let nu = uniform(-1.0, 1.0, 2 * n)?;
    let one = MmotProblem::new(vec![mu.clone()], vec![nu.clone()], CostSpec::PosNorm { p: 2.0 })?;
    let base = MmotProblem::new(vec![mu.clone(), mu], vec![nu.clone(), nu], CostSpec::euclidean_pos())?;
    let table: Vec<Vec<f64>> = base
        .x_grid()
        .points()
        .iter()
        .map(|x| base.y_grid().points().iter().map(|y| (x.0[0] - y.0[0]).abs()).collect())
        .collect();
    let problem = base.with_cost(CostSpec::Table { table })?;
    Ok((one, base, problem))
}

fn ex2_5(n: usize, tol: f64) -> Result<Reproduction> {
    let (one, base, problem) = ex2_5_problems(n)?;
    let one_sol = solve_primal(&one)?;
    let p1 = one_sol.value;
    let primal = solve_primal(&problem)?;
    let constructed = one_coordinate_plan(&problem, &one_sol.plan)?;
    let constructed_cost = problem.plan_cost(&constructed);

    let mut claims = vec![
        Assertion::at_most("constructed_plan_feasible", constraint_residual(&problem, &constructed), 1e-9),
        Assertion::at_least("value_at_least_one_dim_value", primal.value - p1, -tol),
        Assertion::at_most("value_at_most_constructed_cost", primal.value - constructed_cost, tol),
        Assertion::at_most("bounds_agree", (constructed_cost - p1).abs(), tol),
    ];
    let dual = certificate_claims(&problem, &primal, tol, &mut claims)?;
    let normalized = gauge_normalize(&dual, &problem);
    claims.push(Assertion::at_most(
        "normalization_keeps_objective",
        (normalized.objective(&problem) - dual.objective(&problem)).abs(),
        1e-12,
    ));
    copula_claims(&problem, &dual, &primal.plan, tol, &mut claims)?;

    // Euclidean cost of the same marginals, for comparison only.
    let euclid = solve_primal(&base)?;
    let three_point = match three_point_structure_1d(&one_sol.plan, 1e-9) {
        Ok(t) => json!({ "passed": t.passed, "t_minus_trend": t.t_minus_trend, "t_plus_trend": t.t_plus_trend }),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let info = json!({
        "one_dim_value": p1,
        "constructed_cost": constructed_cost,
        "euclidean_value": euclid.value,
        "euclidean_lower_bound": std::f64::consts::SQRT_2 * p1,
        "constructed_euclidean_cost": base.plan_cost(&constructed),
        "one_dim_three_point": three_point,
    });
    Ok(Reproduction::new(Example::Ex2_5, n, primal.value, claims, info))
}

/// `max_norm_signed(+1)` instance whose value is `Σ w (100 - x²)/10` over μ₁.
pub fn ex2_7_problem(n: usize) -> Result<MmotProblem> {
    let mu = uniform(-0.5, 0.5, n)?;
    MmotProblem::new(
        vec![mu.clone(), mu],
        vec![DiscreteMeasure::new([(-10.0, 0.5), (10.0, 0.5)])?, uniform(-1.0, 1.0, 2 * n)?],
        CostSpec::MaxNormSigned { sign: 1.0 },
    )
}

fn ex2_7(n: usize, tol: f64) -> Result<Reproduction> {
    let problem = ex2_7_problem(n)?;
    let expected = problem.mus()[0].integrate(|x| (100.0 - x * x) / 10.0);
    let primal = solve_primal(&problem)?;
    let mut claims = vec![Assertion::at_most("value_closed_form", (primal.value - expected).abs(), tol)];
    certificate_claims(&problem, &primal, tol, &mut claims)?;

    // other vertices of the feasible polytope, reached with random objectives
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut lp = build_lp(&problem);
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        lp.objective = (0..problem.n_vars()).map(|_| rng.gen::<f64>()).collect();
        let sol = solve_lp(&lp)?;
        let plan = problem.plan_from_weights(&sol.primal.iter().map(|&w| w.max(0.0)).collect::<Vec<_>>())?;
        worst = worst.max((problem.plan_cost(&plan) - expected).abs());
    }
    claims.push(Assertion::at_most("other_vertices_attain_value", worst, tol));

    // first coordinate: the two-point coupling; second: an optimum of |x - y|
    // that keeps half of each atom in place
    let c1: Vec<(usize, usize, f64)> = problem.mus()[0]
        .atoms()
        .iter()
        .enumerate()
        .flat_map(|(k, &(x, w))| [(k, 0, w * (10.0 - x) / 20.0), (k, 1, w * (10.0 + x) / 20.0)])
        .collect();
    let one = MmotProblem::new(vec![problem.mus()[1].clone()], vec![problem.nus()[1].clone()], CostSpec::PosNorm { p: 2.0 })?;
    let c2: Vec<(usize, usize, f64)> = solve_primal(&one)?.plan.entries().collect();
    let staying = product_plan(&problem, &[c1, c2])?;
    let staying_cost = problem.plan_cost(&staying);
    let ex_lp = check_conditional_extremality(&primal.plan, NOISE_FLOOR);
    let ex_staying = check_conditional_extremality(&staying, NOISE_FLOOR);
    claims.push(Assertion::at_most("constructed_plan_feasible", constraint_residual(&problem, &staying), 1e-9));
    claims.push(Assertion::at_most("constructed_plan_attains_value", (staying_cost - expected).abs(), tol));
    claims.push(Assertion::at_least("constructed_plan_non_extreme_mass", ex_staying.violating_mass, 0.01));
    claims.push(Assertion::at_least(
        "geometries_differ",
        (ex_lp.mass_weighted_fraction - ex_staying.mass_weighted_fraction).abs(),
        0.01,
    ));
    let info = json!({
        "expected": expected,
        "lp_extreme_fraction": ex_lp.mass_weighted_fraction,
        "constructed_extreme_fraction": ex_staying.mass_weighted_fraction,
    });
    Ok(Reproduction::new(Example::Ex2_7, n, primal.value, claims, info))
}

fn ex2_8_problem(n: usize) -> Result<MmotProblem> {
    let mu = uniform(-0.5, 0.5, n)?;
    let nu = uniform(-1.0, 1.0, 2 * n)?;
    MmotProblem::new(vec![mu.clone(), mu], vec![nu.clone(), nu], CostSpec::NegProductPair { i: 0, j: 1 })
}

fn ex2_8(n: usize, tol: f64) -> Result<Reproduction> {
    let problem = ex2_8_problem(n)?;
    let primal = solve_primal(&problem)?;
    let expected = -problem.nus()[0].integrate(|y| y * y);
    let (_, pi2) = copulas_of(&primal.plan);
    let diagonal: f64 = pi2.atoms().iter().filter(|(p, _)| (p.0[0] - p.0[1]).abs() < 1e-12).map(|a| a.1).sum();
    let mut claims = vec![
        Assertion::at_most("value_closed_form", (primal.value - expected).abs(), tol),
        Assertion::at_most("terminal_mass_off_diagonal", (1.0 - diagonal).abs(), tol),
    ];
    let graph = check_graph_structure(&primal.plan, &[0], 1e-6);
    claims.push(Assertion::at_most("graph_violating_mass", graph.max_violating_mass, 1e-6));
    let axes: Vec<Vec<f64>> = problem.nus().iter().map(|m| m.positions().collect()).collect();
    let twist = twist_check(problem.cost(), &[0], &[0.0, 0.0], &[axes[0][0]], &axes, 1e-6)?;
    claims.push(Assertion::holds("twist_condition", twist));
    let dual = certificate_claims(&problem, &primal, tol, &mut claims)?;
    let bundle = copula_claims(&problem, &dual, &primal.plan, tol, &mut claims)?;
    let ym = primal.plan.y_masses();
    let psi_gap = (0..problem.y_grid().len())
        .filter(|&yj| ym[yj] > 0.0)
        .map(|yj| {
            let s: f64 = problem.y_multi(yj).iter().enumerate().map(|(i, &b)| bundle.psi[i][b]).sum();
            (s - bundle.beta[yj]).abs()
        })
        .fold(0.0, f64::max);
    claims.push(Assertion::at_most("psi_sum_equals_beta_on_support", psi_gap, tol));
    let info = json!({ "expected": expected, "diagonal_mass": diagonal });
    Ok(Reproduction::new(Example::Ex2_8, n, primal.value, claims, info))
}

/// Normalized `χ` on a fixed compact set across grid refinements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiRefinement {
    pub probe_points: Vec<f64>,
    /// `(n, max over the probe points of normalized χ_n)`
    pub maxima: Vec<(usize, f64)>,
    /// `10 (max χ_{n₀} + 1)` for the coarsest `n₀`.
    pub bound: f64,
    pub passed: bool,
}

/// One-dimensional family `μ = U(-½, ½)` on `n` cells, `ν = U(-1, 1)` on
/// `2n` cells, `c = |x - y|`, probed at `{-½, -¼, 0, ¼, ½}`.
pub fn chi_refinement(ns: &[usize]) -> Result<ChiRefinement> {
    let probe_points = vec![-0.5, -0.25, 0.0, 0.25, 0.5];
    let mut maxima = Vec::with_capacity(ns.len());
    for &n in ns {
        let problem = MmotProblem::new(vec![uniform(-0.5, 0.5, n)?], vec![uniform(-1.0, 1.0, 2 * n)?], CostSpec::PosNorm { p: 2.0 })?;
        let primal = solve_primal(&problem)?;
        let dual = gauge_normalize(&recover_dual(&problem, &primal)?, &problem);
        let chi = NormalizedChi::new(&dual, &problem);
        let m = probe_points.iter().map(|&y| chi.eval(&dual, &problem, &[y])).fold(f64::NEG_INFINITY, f64::max);
        maxima.push((n, m));
    }
    let bound = maxima.first().map_or(f64::INFINITY, |m| 10.0 * (m.1 + 1.0));
    let passed = maxima.iter().all(|m| m.1 <= bound);
    Ok(ChiRefinement {
        probe_points,
        maxima,
        bound,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for e in Example::ALL {
            assert_eq!(e.to_string().parse::<Example>().unwrap(), e);
        }
        assert!("ex2_6".parse::<Example>().is_err());
    }

    #[test]
    fn four_point_instance() {
        let r = reproduce(Example::Ex2_4, None, None).unwrap();
        assert!(r.passed, "{:#?}", r.claims);
    }

    #[test]
    fn out_of_range_n() {
        assert!(reproduce(Example::Ex2_8, Some(40), None).is_err());
        assert!(reproduce(Example::Ex2_5, Some(3), None).is_err());
    }
}
