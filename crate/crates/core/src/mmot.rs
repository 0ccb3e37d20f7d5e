//! The discrete multi-martingale transport problem.
//!
//! Variables are plan weights `π(x, y)` on `X × Y` where `X = ⊗ supp μ_i`
//! and `Y = ⊗ supp ν_i`. Rows fix every one-dimensional marginal and
//! impose `Σ_y π(x, y)(y_i - x_i) = 0` for each `x` and coordinate `i`.
//! Row multipliers of an optimal basis give the dual triple `(f, g, h)`:
//! `f_i` from the μ rows, `-g_i` from the ν rows and `h_i(x)` from the
//! martingale rows, so dual feasibility is exactly
//! `Σ f_i(x_i) - Σ g_i(y_i) + h(x)·(y - x) ≤ c(x, y)`.

use serde::{Deserialize, Serialize};

use crate::cost::CostSpec;
use crate::error::{Error, Result};
use crate::lp::{solve_lp, LinearProgram, LpSolution, LpStatus};
use crate::measures::{convex_order_check, DiscreteMeasure, GridPoint, JointPlan, DEFAULT_ORDER_TOL};

/// Tolerance for dual certification.
pub const CERTIFY_TOL: f64 = 1e-8;

/// Cartesian product of one-dimensional atom lists, first axis slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductGrid {
    axes: Vec<Vec<f64>>,
    points: Vec<GridPoint>,
}

impl ProductGrid {
    pub fn new(axes: Vec<Vec<f64>>) -> Self {
        let len: usize = axes.iter().map(Vec::len).product();
        let mut points = Vec::with_capacity(len);
        let mut idx = vec![0usize; axes.len()];
        for _ in 0..len {
            points.push(GridPoint(idx.iter().zip(&axes).map(|(&k, a)| a[k]).collect()));
            for ax in (0..axes.len()).rev() {
                idx[ax] += 1;
                if idx[ax] < axes[ax].len() {
                    break;
                }
                idx[ax] = 0;
            }
        }
        Self { axes, points }
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn points(&self) -> &[GridPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Per-axis atom indices of grid point `k`.
    pub fn multi_index(&self, mut k: usize) -> Vec<usize> {
        let mut out = vec![0; self.axes.len()];
        for ax in (0..self.axes.len()).rev() {
            let n = self.axes[ax].len();
            out[ax] = k % n;
            k /= n;
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.axes)
            .fold(0, |acc, (&k, a)| acc * a.len() + k)
    }
}

/// `d` convex-ordered marginal pairs and a cost.
#[derive(Debug, Clone)]
pub struct MmotProblem {
    mus: Vec<DiscreteMeasure>,
    nus: Vec<DiscreteMeasure>,
    cost: CostSpec,
    x_grid: ProductGrid,
    y_grid: ProductGrid,
    /// Per x index, per coordinate: atom index into `mus[i]`.
    x_multi: Vec<Vec<usize>>,
    y_multi: Vec<Vec<usize>>,
}

impl MmotProblem {
    pub fn new(mus: Vec<DiscreteMeasure>, nus: Vec<DiscreteMeasure>, cost: CostSpec) -> Result<Self> {
        let d = mus.len();
        if d == 0 || nus.len() != d {
            return Err(Error::InvalidProblem(format!(
                "need the same positive number of initial and terminal marginals, got {} and {}",
                mus.len(),
                nus.len()
            )));
        }
        for (i, (mu, nu)) in mus.iter().zip(&nus).enumerate() {
            if (mu.mass() - 1.0).abs() > DEFAULT_ORDER_TOL {
                return Err(Error::InvalidProblem(format!("marginal mu_{i} has mass {}", mu.mass())));
            }
            let check = convex_order_check(mu, nu, DEFAULT_ORDER_TOL)?;
            if !check.ordered {
                return Err(Error::NotInConvexOrder(format!("coordinate {i}: {:?}", check.witness)));
            }
        }
        let x_grid = ProductGrid::new(mus.iter().map(|m| m.positions().collect()).collect());
        let y_grid = ProductGrid::new(nus.iter().map(|m| m.positions().collect()).collect());
        cost.validate(d, x_grid.len(), y_grid.len())?;
        let x_multi = (0..x_grid.len()).map(|k| x_grid.multi_index(k)).collect();
        let y_multi = (0..y_grid.len()).map(|k| y_grid.multi_index(k)).collect();
        Ok(Self {
            mus,
            nus,
            cost,
            x_grid,
            y_grid,
            x_multi,
            y_multi,
        })
    }

    pub fn dim(&self) -> usize {
        self.mus.len()
    }

    pub fn mus(&self) -> &[DiscreteMeasure] {
        &self.mus
    }

    pub fn nus(&self) -> &[DiscreteMeasure] {
        &self.nus
    }

    pub fn cost(&self) -> &CostSpec {
        &self.cost
    }

    pub fn x_grid(&self) -> &ProductGrid {
        &self.x_grid
    }

    pub fn y_grid(&self) -> &ProductGrid {
        &self.y_grid
    }

    pub fn x_multi(&self, xi: usize) -> &[usize] {
        &self.x_multi[xi]
    }

    pub fn y_multi(&self, yj: usize) -> &[usize] {
        &self.y_multi[yj]
    }

    pub fn n_vars(&self) -> usize {
        self.x_grid.len() * self.y_grid.len()
    }

    pub fn var_index(&self, xi: usize, yj: usize) -> usize {
        xi * self.y_grid.len() + yj
    }

    pub fn cost_at(&self, xi: usize, yj: usize) -> f64 {
        self.cost
            .eval(xi, &self.x_grid.points[xi].0, yj, &self.y_grid.points[yj].0)
    }

    /// Same marginals, different cost.
    pub fn with_cost(&self, cost: CostSpec) -> Result<Self> {
        Self::new(self.mus.clone(), self.nus.clone(), cost)
    }

    /// Wraps LP weights as a plan on this problem's grids.
    pub fn plan_from_weights(&self, weights: &[f64]) -> Result<JointPlan> {
        let ny = self.y_grid.len();
        let entries = weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(v, &w)| (v / ny, v % ny, w));
        JointPlan::new(
            self.dim(),
            self.x_grid.points.clone(),
            self.y_grid.points.clone(),
            entries,
        )
    }

    /// `Σ c·π`.
    pub fn plan_cost(&self, plan: &JointPlan) -> f64 {
        plan.entries().map(|(i, j, w)| w * self.cost_at(i, j)).sum()
    }
}

/// What each LP row of [`build_lp`] constrains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowRole {
    Mu { coord: usize, atom: usize },
    Nu { coord: usize, atom: usize },
    Martingale { x: usize, coord: usize },
}

/// Row layout of [`build_lp`]: all μ blocks, then ν blocks, then
/// martingale rows. Every marginal block after the first omits its last
/// atom; those rows are implied by total mass.
pub fn row_layout(problem: &MmotProblem) -> Vec<RowRole> {
    let d = problem.dim();
    let mut roles = Vec::new();
    for coord in 0..d {
        let n = problem.mus[coord].len();
        let keep = if coord == 0 { n } else { n - 1 };
        roles.extend((0..keep).map(|atom| RowRole::Mu { coord, atom }));
    }
    for coord in 0..d {
        let n = problem.nus[coord].len();
        roles.extend((0..n - 1).map(|atom| RowRole::Nu { coord, atom }));
    }
    for x in 0..problem.x_grid.len() {
        roles.extend((0..d).map(|coord| RowRole::Martingale { x, coord }));
    }
    roles
}

fn assemble(problem: &MmotProblem, objective: Vec<f64>) -> LinearProgram {
    let nx = problem.x_grid.len();
    let ny = problem.y_grid.len();
    let mut lp = LinearProgram::with_objective(objective);
    for role in row_layout(problem) {
        match role {
            RowRole::Mu { coord, atom } => {
                let terms = (0..nx)
                    .filter(|&xi| problem.x_multi[xi][coord] == atom)
                    .flat_map(|xi| (0..ny).map(move |yj| (xi * ny + yj, 1.0)));
                lp.add_row(terms, problem.mus[coord].atoms()[atom].1);
            }
            RowRole::Nu { coord, atom } => {
                let terms = (0..ny)
                    .filter(|&yj| problem.y_multi[yj][coord] == atom)
                    .flat_map(|yj| (0..nx).map(move |xi| (xi * ny + yj, 1.0)));
                lp.add_row(terms, problem.nus[coord].atoms()[atom].1);
            }
            RowRole::Martingale { x, coord } => {
                let xc = problem.x_grid.points[x].0[coord];
                let terms = (0..ny).map(|yj| (x * ny + yj, problem.y_grid.points[yj].0[coord] - xc));
                lp.add_row(terms, 0.0);
            }
        }
    }
    lp
}

/// The primal LP over plan weights (variable `xi·|Y| + yj`).
pub fn build_lp(problem: &MmotProblem) -> LinearProgram {
    let nx = problem.x_grid.len();
    let ny = problem.y_grid.len();
    let mut objective = Vec::with_capacity(nx * ny);
    for xi in 0..nx {
        for yj in 0..ny {
            objective.push(problem.cost_at(xi, yj));
        }
    }
    assemble(problem, objective)
}

/// Residuals of `plan` against every marginal and martingale constraint,
/// including the rows that [`build_lp`] omits.
pub fn constraint_residual(problem: &MmotProblem, plan: &JointPlan) -> f64 {
    let d = problem.dim();
    let mut worst: f64 = 0.0;
    let xm = plan.x_masses();
    let ym = plan.y_masses();
    for coord in 0..d {
        let mut mu_acc = vec![0.0; problem.mus[coord].len()];
        for (xi, w) in xm.iter().enumerate() {
            mu_acc[problem.x_multi[xi][coord]] += w;
        }
        for (acc, (_, w)) in mu_acc.iter().zip(problem.mus[coord].atoms()) {
            worst = worst.max((acc - w).abs());
        }
        let mut nu_acc = vec![0.0; problem.nus[coord].len()];
        for (yj, w) in ym.iter().enumerate() {
            nu_acc[problem.y_multi[yj][coord]] += w;
        }
        for (acc, (_, w)) in nu_acc.iter().zip(problem.nus[coord].atoms()) {
            worst = worst.max((acc - w).abs());
        }
    }
    let mut mart = vec![vec![0.0; d]; problem.x_grid.len()];
    for (xi, yj, w) in plan.entries() {
        let (x, y) = (&problem.x_grid.points[xi].0, &problem.y_grid.points[yj].0);
        for k in 0..d {
            mart[xi][k] += w * (y[k] - x[k]);
        }
    }
    for row in mart {
        for v in row {
            worst = worst.max(v.abs());
        }
    }
    worst
}

/// LP weights at or below this are dropped from the optimal plan.
pub const PRIMAL_ZERO_TOL: f64 = 1e-13;

/// An optimal plan together with the LP it came from.
#[derive(Debug, Clone)]
pub struct PrimalSolution {
    pub plan: JointPlan,
    pub value: f64,
    pub lp: LinearProgram,
    pub solution: LpSolution,
}

pub fn solve_primal(problem: &MmotProblem) -> Result<PrimalSolution> {
    let lp = build_lp(problem);
    let solution = solve_lp(&lp)?;
    match solution.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(Error::Infeasible {
                residual: solution.objective_value,
            })
        }
        LpStatus::Unbounded => return Err(Error::Unbounded),
    }
    // basic variables that are zero up to round-off are not support
    let weights: Vec<f64> = solution
        .primal
        .iter()
        .map(|&w| if w <= PRIMAL_ZERO_TOL { 0.0 } else { w })
        .collect();
    let plan = problem.plan_from_weights(&weights)?;
    let value = solution.objective_value;
    Ok(PrimalSolution {
        plan,
        value,
        lp,
        solution,
    })
}

/// Dual potentials `f_i` on μ_i atoms, `g_i` on ν_i atoms and the vector
/// field `h` on the x grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualTriple {
    pub f: Vec<Vec<f64>>,
    pub g: Vec<Vec<f64>>,
    pub h: Vec<Vec<f64>>,
}

impl DualTriple {
    /// `Σ_i f_i(x_i)` at x index `xi`.
    pub fn f_sum(&self, problem: &MmotProblem, xi: usize) -> f64 {
        problem.x_multi(xi).iter().enumerate().map(|(i, &a)| self.f[i][a]).sum()
    }

    /// `Σ_i g_i(y_i)` at y index `yj`.
    pub fn g_sum(&self, problem: &MmotProblem, yj: usize) -> f64 {
        problem.y_multi(yj).iter().enumerate().map(|(i, &b)| self.g[i][b]).sum()
    }

    /// `Σ_i (∫ f_i dμ_i - ∫ g_i dν_i)`.
    pub fn objective(&self, problem: &MmotProblem) -> f64 {
        let mut v = 0.0;
        for i in 0..problem.dim() {
            v += problem.mus()[i].weights().zip(&self.f[i]).map(|(w, f)| w * f).sum::<f64>();
            v -= problem.nus()[i].weights().zip(&self.g[i]).map(|(w, g)| w * g).sum::<f64>();
        }
        v
    }

    /// `c(x, y) - [Σ f_i(x_i) - Σ g_i(y_i) + h(x)·(y - x)]`; nonnegative
    /// everywhere for a feasible triple.
    pub fn slack(&self, problem: &MmotProblem, xi: usize, yj: usize) -> f64 {
        let x = &problem.x_grid().points()[xi].0;
        let y = &problem.y_grid().points()[yj].0;
        let hy: f64 = self.h[xi].iter().zip(y.iter().zip(x)).map(|(h, (a, b))| h * (a - b)).sum();
        problem.cost_at(xi, yj) - (self.f_sum(problem, xi) - self.g_sum(problem, yj) + hy)
    }

    pub fn is_finite(&self) -> bool {
        self.f.iter().chain(&self.g).chain(&self.h).flatten().all(|v| v.is_finite())
    }
}

/// Residuals of a dual triple against the grid and a plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// `max (−slack)` over all grid pairs.
    pub max_violation: f64,
    /// `max |slack|` over the plan's support.
    pub max_support_residual: f64,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
}

impl Certificate {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_violation <= tol && self.max_support_residual <= tol && self.gap.abs() <= tol
    }
}

/// Exhaustively checks `dual` on every grid pair and on `plan`'s support.
pub fn certify(problem: &MmotProblem, dual: &DualTriple, plan: &JointPlan) -> Certificate {
    let mut max_violation: f64 = 0.0;
    for xi in 0..problem.x_grid().len() {
        for yj in 0..problem.y_grid().len() {
            max_violation = max_violation.max(-dual.slack(problem, xi, yj));
        }
    }
    let max_support_residual = plan
        .entries()
        .map(|(i, j, _)| dual.slack(problem, i, j).abs())
        .fold(0.0, f64::max);
    let primal_value = problem.plan_cost(plan);
    let dual_value = dual.objective(problem);
    Certificate {
        max_violation,
        max_support_residual,
        primal_value,
        dual_value,
        gap: primal_value - dual_value,
    }
}

/// Reads the dual triple off the optimal basis without certifying it.
pub fn dual_from_multipliers(problem: &MmotProblem, multipliers: &[f64]) -> DualTriple {
    let d = problem.dim();
    let mut f: Vec<Vec<f64>> = problem.mus().iter().map(|m| vec![0.0; m.len()]).collect();
    let mut g: Vec<Vec<f64>> = problem.nus().iter().map(|m| vec![0.0; m.len()]).collect();
    let mut h = vec![vec![0.0; d]; problem.x_grid().len()];
    for (role, &y) in row_layout(problem).iter().zip(multipliers) {
        match *role {
            RowRole::Mu { coord, atom } => f[coord][atom] = y,
            RowRole::Nu { coord, atom } => g[coord][atom] = -y,
            RowRole::Martingale { x, coord } => h[x][coord] = y,
        }
    }
    DualTriple { f, g, h }
}

/// Recovers and certifies the dual triple of an optimal solve.
pub fn recover_dual(problem: &MmotProblem, primal: &PrimalSolution) -> Result<DualTriple> {
    let dual = dual_from_multipliers(problem, &primal.solution.dual);
    if !dual.is_finite() {
        return Err(Error::UncertifiedDual("non-finite multipliers".into()));
    }
    let cert = certify(problem, &dual, &primal.plan);
    if !cert.passes(CERTIFY_TOL) {
        return Err(Error::UncertifiedDual(format!(
            "violation {:e}, support residual {:e}, gap {:e}",
            cert.max_violation, cert.max_support_residual, cert.gap
        )));
    }
    Ok(dual)
}

/// Shifts constants so that `∫ f_i dμ_i = 0` for every `i` and
/// `∫ g_i dν_i = 0` for `i ≥ 2`; `g_1` absorbs the balance so the
/// pointwise form and the dual objective are unchanged.
pub fn gauge_normalize(dual: &DualTriple, problem: &MmotProblem) -> DualTriple {
    let d = problem.dim();
    let f_shift: Vec<f64> = (0..d)
        .map(|i| -problem.mus()[i].weights().zip(&dual.f[i]).map(|(w, f)| w * f).sum::<f64>())
        .collect();
    let mut g_shift: Vec<f64> = (0..d)
        .map(|i| -problem.nus()[i].weights().zip(&dual.g[i]).map(|(w, g)| w * g).sum::<f64>())
        .collect();
    g_shift[0] = f_shift.iter().sum::<f64>() - g_shift[1..].iter().sum::<f64>();
    let mut out = dual.clone();
    for i in 0..d {
        out.f[i].iter_mut().for_each(|v| *v += f_shift[i]);
        out.g[i].iter_mut().for_each(|v| *v += g_shift[i]);
    }
    out
}

/// `P(c) - D(c)` from one solve and its recovered multipliers.
pub fn duality_gap(problem: &MmotProblem) -> Result<f64> {
    let primal = solve_primal(problem)?;
    let dual = dual_from_multipliers(problem, &primal.solution.dual);
    Ok(primal.value - dual.objective(problem))
}

/// A one-dimensional martingale coupling of `(mu, nu)` as a list of
/// `(mu atom, nu atom, weight)`, found by an LP feasibility solve.
pub fn martingale_coupling_1d(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Vec<(usize, usize, f64)>> {
    let problem = MmotProblem::new(
        vec![mu.clone()],
        vec![nu.clone()],
        CostSpec::Table {
            table: vec![vec![0.0; nu.len()]; mu.len()],
        },
    )?;
    let lp = assemble(&problem, vec![0.0; problem.n_vars()]);
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Infeasible {
            residual: sol.objective_value,
        });
    }
    let ny = nu.len();
    Ok(sol
        .primal
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(v, &w)| (v / ny, v % ny, w))
        .collect())
}

/// Product of per-coordinate martingale couplings `π_i`, given as
/// `(mu atom, nu atom, weight)` lists.
pub fn product_plan(problem: &MmotProblem, couplings: &[Vec<(usize, usize, f64)>]) -> Result<JointPlan> {
    let d = problem.dim();
    if couplings.len() != d {
        return Err(Error::InvalidProblem(format!("need {d} couplings, got {}", couplings.len())));
    }
    let mut entries = Vec::new();
    let mut idx = vec![0usize; d];
    if couplings.iter().any(Vec::is_empty) {
        return Err(Error::InvalidPlan("empty coupling".into()));
    }
    loop {
        let mut xm = Vec::with_capacity(d);
        let mut ym = Vec::with_capacity(d);
        let mut w = 1.0;
        for (i, &k) in idx.iter().enumerate() {
            let (a, b, p) = couplings[i][k];
            xm.push(a);
            ym.push(b);
            w *= p;
        }
        entries.push((problem.x_grid().flat_index(&xm), problem.y_grid().flat_index(&ym), w));
        let mut ax = d;
        loop {
            if ax == 0 {
                return JointPlan::new(
                    d,
                    problem.x_grid().points().to_vec(),
                    problem.y_grid().points().to_vec(),
                    entries,
                );
            }
            ax -= 1;
            idx[ax] += 1;
            if idx[ax] < couplings[ax].len() {
                break;
            }
            idx[ax] = 0;
        }
    }
}

/// `⊗_i π_i` for LP-found one-dimensional martingale couplings `π_i`.
pub fn product_feasible_plan(problem: &MmotProblem) -> Result<JointPlan> {
    let couplings = problem
        .mus()
        .iter()
        .zip(problem.nus())
        .map(|(mu, nu)| martingale_coupling_1d(mu, nu))
        .collect::<Result<Vec<_>>>()?;
    product_plan(problem, &couplings)
}

/// `χ(y) = max_x [Σ f_i(x_i) + h(x)·(y - x)]`, a convex function of `y`.
pub fn chi_from_dual(dual: &DualTriple, problem: &MmotProblem, y: &[f64]) -> f64 {
    chi_argmax(dual, problem, y).1
}

fn chi_argmax(dual: &DualTriple, problem: &MmotProblem, y: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (xi, x) in problem.x_grid().points().iter().enumerate() {
        let v = dual.f_sum(problem, xi)
            + dual.h[xi].iter().zip(y.iter().zip(&x.0)).map(|(h, (a, b))| h * (a - b)).sum::<f64>();
        if v > best.1 {
            best = (xi, v);
        }
    }
    best
}

/// `χ` minus its supporting affine function at an anchor, so that the
/// result vanishes at the anchor with zero as a subgradient there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedChi {
    pub anchor_index: usize,
    pub anchor: Vec<f64>,
    /// Value of `χ` at the anchor.
    pub offset: f64,
    /// Gradient of the active affine piece at the anchor.
    pub slope: Vec<f64>,
}

impl NormalizedChi {
    /// Anchors at the x-grid point nearest the vector of μ means.
    pub fn new(dual: &DualTriple, problem: &MmotProblem) -> Self {
        let means: Vec<f64> = problem.mus().iter().map(DiscreteMeasure::mean).collect();
        let anchor_index = problem
            .x_grid()
            .points()
            .iter()
            .enumerate()
            .map(|(k, p)| (k, p.0.iter().zip(&means).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|t| t.0)
            .unwrap_or(0);
        let anchor = problem.x_grid().points()[anchor_index].0.clone();
        let (active, offset) = chi_argmax(dual, problem, &anchor);
        Self {
            anchor_index,
            anchor,
            offset,
            slope: dual.h[active].clone(),
        }
    }

    pub fn eval(&self, dual: &DualTriple, problem: &MmotProblem, y: &[f64]) -> f64 {
        let affine = self.offset
            + self.slope.iter().zip(y.iter().zip(&self.anchor)).map(|(s, (a, b))| s * (a - b)).sum::<f64>();
        chi_from_dual(dual, problem, y) - affine
    }
}
