//! Structural checks on computed plans: extreme points of conditional
//! supports, the staying decomposition, graph structure with the twist
//! condition, and three-point conditionals in one dimension.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::CostSpec;
use crate::error::{Error, Result};
use crate::lp::{solve_lp, LinearProgram, LpStatus};
use crate::measures::{copulas_of, disintegrate, measure_min, GridPoint, JointPlan, ATOM_MATCH_TOL};

/// Feasibility tolerance of the convex-combination test.
pub const HULL_TOL: f64 = 1e-9;
/// Default floor below which conditional atoms are ignored.
pub const NOISE_FLOOR: f64 = 1e-6;
/// Slack allowed in `π ≥ D_#(π¹ ∧ π²)`.
pub const DOMINANCE_TOL: f64 = 1e-10;
/// Matching tolerance for the S-coordinates in the graph check.
pub const GROUP_MATCH_TOL: f64 = 1e-9;

fn csv_point(p: &[f64]) -> String {
    p.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(";")
}

fn to_csv<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Whether `p` is a convex combination of `others`.
fn in_hull(p: &GridPoint, others: &[&GridPoint]) -> bool {
    if others.is_empty() {
        return false;
    }
    let mut lp = LinearProgram::new(others.len());
    lp.add_row((0..others.len()).map(|j| (j, 1.0)), 1.0);
    for k in 0..p.dim() {
        lp.add_row(others.iter().enumerate().map(|(j, q)| (j, q.0[k])), p.0[k]);
    }
    matches!(solve_lp(&lp), Ok(s) if s.status == LpStatus::Optimal)
}

/// Indices of the points that are not convex combinations of the others
/// (points coinciding with the probe are excluded from the combination).
pub fn extreme_points_of(points: &[GridPoint]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            let others: Vec<&GridPoint> = points.iter().filter(|q| !q.matches(&points[i])).collect();
            !in_hull(&points[i], &others)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalExtremality {
    pub x_index: usize,
    pub x: GridPoint,
    pub mass: f64,
    /// Atoms kept after the noise floor.
    pub support_size: usize,
    pub non_extreme_points: Vec<GridPoint>,
    /// Conditional weight on extreme atoms over kept weight.
    pub extreme_fraction_of_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremalityReport {
    pub floor: f64,
    pub records: Vec<ConditionalExtremality>,
    pub worst_fraction: f64,
    /// `Σ_x mass(x) · (1 - extreme_fraction(x))`
    pub violating_mass: f64,
    /// `violating_mass` relative to the total mass of the plan.
    pub mass_weighted_fraction: f64,
}

#[derive(Serialize)]
struct ExtremalityRow {
    x_index: usize,
    x: String,
    mass: f64,
    support_size: usize,
    non_extreme: usize,
    extreme_fraction: f64,
}

impl ExtremalityReport {
    pub fn passes(&self, bar: f64) -> bool {
        self.mass_weighted_fraction >= bar
    }

    pub fn to_csv(&self) -> Result<String> {
        to_csv(self.records.iter().map(|r| ExtremalityRow {
            x_index: r.x_index,
            x: csv_point(&r.x.0),
            mass: r.mass,
            support_size: r.support_size,
            non_extreme: r.non_extreme_points.len(),
            extreme_fraction: r.extreme_fraction_of_mass,
        }))
    }
}

/// Compares every conditional's support with its extreme points, ignoring
/// atoms of conditional weight below `floor`.
pub fn check_conditional_extremality(plan: &JointPlan, floor: f64) -> ExtremalityReport {
    let y_grid = plan.y_grid();
    let records: Vec<ConditionalExtremality> = disintegrate(plan)
        .into_par_iter()
        .map(|c| {
            let kept: Vec<(usize, f64)> = c.atoms.iter().copied().filter(|a| a.1 >= floor).collect();
            let pts: Vec<GridPoint> = kept.iter().map(|a| y_grid[a.0].clone()).collect();
            let ext = extreme_points_of(&pts);
            let total: f64 = kept.iter().map(|a| a.1).sum();
            let on_ext: f64 = ext.iter().map(|&k| kept[k].1).sum();
            let non_extreme = (0..pts.len()).filter(|k| !ext.contains(k)).map(|k| pts[k].clone()).collect();
            ConditionalExtremality {
                x_index: c.x_index,
                x: c.x,
                mass: c.mass,
                support_size: kept.len(),
                non_extreme_points: non_extreme,
                extreme_fraction_of_mass: if total > 0.0 { (on_ext / total).min(1.0) } else { 1.0 },
            }
        })
        .collect();
    let worst_fraction = records.iter().map(|r| r.extreme_fraction_of_mass).fold(1.0, f64::min);
    let violating_mass: f64 = records.iter().map(|r| r.mass * (1.0 - r.extreme_fraction_of_mass)).sum();
    let total: f64 = records.iter().map(|r| r.mass).sum();
    ExtremalityReport {
        floor,
        records,
        worst_fraction,
        violating_mass,
        mass_weighted_fraction: if total > 0.0 { 1.0 - violating_mass / total } else { 1.0 },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StayingReport {
    /// Mass of `π¹ ∧ π²`.
    pub diagonal_part: f64,
    /// `π - D_#(π¹ ∧ π²)` on the plan's grids, clipped at zero.
    pub residual_plan: JointPlan,
    /// Most negative entry of the unclipped residual (zero if none).
    pub min_residual: f64,
    pub dominance_ok: bool,
}

#[derive(Serialize)]
struct StayingRow {
    x_index: usize,
    x: String,
    plan_diagonal: f64,
    staying: f64,
    residual: f64,
}

impl StayingReport {
    pub fn to_csv(&self, plan: &JointPlan) -> Result<String> {
        let (pi1, pi2) = copulas_of(plan);
        let m = measure_min(&pi1, &pi2);
        let rows = plan.x_grid().iter().enumerate().filter_map(|(i, x)| {
            let j = plan.y_grid().iter().position(|y| y.matches(x))?;
            Some(StayingRow {
                x_index: i,
                x: csv_point(&x.0),
                plan_diagonal: plan.weight(i, j),
                staying: m.weight_at(x),
                residual: self.residual_plan.weight(i, j),
            })
        });
        to_csv(rows)
    }
}

/// Splits `π` into the diagonal piece `D_#(π¹ ∧ π²)` and the residual.
pub fn staying_decomposition(plan: &JointPlan) -> StayingReport {
    let (pi1, pi2) = copulas_of(plan);
    let m = measure_min(&pi1, &pi2);
    let mut entries: Vec<(usize, usize, f64)> = plan.entries().collect();
    let mut min_residual: f64 = 0.0;
    for (i, x) in plan.x_grid().iter().enumerate() {
        let w = m.weight_at(x);
        if w <= 0.0 {
            continue;
        }
        let Some(j) = plan.y_grid().iter().position(|y| y.matches(x)) else {
            continue;
        };
        match entries.iter_mut().find(|e| e.0 == i && e.1 == j) {
            Some(e) => e.2 -= w,
            None => entries.push((i, j, -w)),
        }
    }
    for e in &mut entries {
        min_residual = min_residual.min(e.2);
        if e.2.abs() <= 1e-14 {
            e.2 = 0.0;
        }
    }
    let residual_plan = JointPlan::unnormalized(
        plan.dim(),
        plan.x_grid().to_vec(),
        plan.y_grid().to_vec(),
        entries.into_iter().map(|(i, j, w)| (i, j, w.max(0.0))),
    )
    .expect("residual lives on the plan's grids");
    StayingReport {
        diagonal_part: m.mass(),
        residual_plan,
        min_residual,
        dominance_ok: min_residual >= -DOMINANCE_TOL,
    }
}

fn central_difference(cost: &CostSpec, x: &[f64], y: &[f64], i: usize, h: f64) -> Result<f64> {
    let mut yp = y.to_vec();
    let mut ym = y.to_vec();
    yp[i] += h;
    ym[i] -= h;
    Ok((cost.eval_point(x, &yp)? - cost.eval_point(x, &ym)?) / (2.0 * h))
}

/// `(∂c/∂y_i)_{i ∈ S}` at `(x, y)` by central differences, cross-checked
/// between two step sizes.
pub fn partial_gradient(cost: &CostSpec, s: &[usize], x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    s.iter()
        .map(|&i| {
            let g1 = central_difference(cost, x, y, i, 1e-6)?;
            let g2 = central_difference(cost, x, y, i, 1e-7)?;
            // one-sided quotients expose kinks that symmetric ones average away
            let c0 = cost.eval_point(x, y)?;
            let mut yh = y.to_vec();
            yh[i] += 1e-7;
            let fwd = (cost.eval_point(x, &yh)? - c0) / 1e-7;
            let scale = 1e-4 * g1.abs().max(1.0);
            if (g1 - g2).abs() > scale || (fwd - g2).abs() > scale {
                return Err(Error::KinkEncountered(y.to_vec()));
            }
            Ok(g1)
        })
        .collect()
}

/// Whether `y_{S^c} ↦ (∂c/∂y_i)(x, y)_{i ∈ S}` is one-to-one over the grid
/// assignments of the complement coordinates (`y_axes[k]` for `k ∉ S`),
/// with `y_s` fixing the coordinates in `S`.
pub fn twist_check(cost: &CostSpec, s: &[usize], x: &[f64], y_s: &[f64], y_axes: &[Vec<f64>], tol: f64) -> Result<bool> {
    let d = x.len();
    if !cost.is_analytic() {
        return Err(Error::NotDifferentiable);
    }
    if s.len() != y_s.len() || s.iter().any(|&i| i >= d) || y_axes.len() != d {
        return Err(Error::InvalidProblem("twist probe does not match the dimension".into()));
    }
    let comp: Vec<usize> = (0..d).filter(|k| !s.contains(k)).collect();
    let mut grads: Vec<Vec<f64>> = Vec::new();
    let mut idx = vec![0usize; comp.len()];
    loop {
        let mut y = vec![0.0; d];
        for (&i, &v) in s.iter().zip(y_s) {
            y[i] = v;
        }
        for (&k, &a) in comp.iter().zip(&idx) {
            y[k] = y_axes[k][a];
        }
        grads.push(partial_gradient(cost, s, x, &y)?);
        // odometer over the complement grid
        let mut pos = comp.len();
        loop {
            if pos == 0 {
                return Ok(pairwise_distinct(&grads, tol));
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < y_axes[comp[pos]].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

fn pairwise_distinct(v: &[Vec<f64>], tol: f64) -> bool {
    for a in 0..v.len() {
        for b in a + 1..v.len() {
            let dist = v[a].iter().zip(&v[b]).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            if dist <= tol {
                return false;
            }
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphViolation {
    pub x_index: usize,
    pub x: GridPoint,
    /// The shared S-coordinates.
    pub y_s: Vec<f64>,
    /// Distinct complement coordinates found for `y_s`.
    pub branches: Vec<Vec<f64>>,
    /// Conditional mass off the heaviest branch.
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphReport {
    pub s: Vec<usize>,
    pub tol: f64,
    pub violations: Vec<GraphViolation>,
    pub max_violating_mass: f64,
    pub passed: bool,
}

#[derive(Serialize)]
struct GraphRow {
    x_index: usize,
    x: String,
    y_s: String,
    branches: usize,
    mass: f64,
}

impl GraphReport {
    pub fn to_csv(&self) -> Result<String> {
        to_csv(self.violations.iter().map(|v| GraphRow {
            x_index: v.x_index,
            x: csv_point(&v.x.0),
            y_s: csv_point(&v.y_s),
            branches: v.branches.len(),
            mass: v.mass,
        }))
    }
}

/// S-coordinates with the complement coordinates and weights seen there.
type Group = (Vec<f64>, Vec<(Vec<f64>, f64)>);

/// Checks that each conditional's complement coordinates are a function of
/// its S-coordinates.
pub fn check_graph_structure(plan: &JointPlan, s: &[usize], tol: f64) -> GraphReport {
    let y_grid = plan.y_grid();
    let d = plan.dim();
    let comp: Vec<usize> = (0..d).filter(|k| !s.contains(k)).collect();
    let project = |p: &GridPoint, axes: &[usize]| -> Vec<f64> { axes.iter().map(|&k| p.0[k]).collect() };
    let mut violations = Vec::new();
    for c in disintegrate(plan) {
        let mut groups: Vec<Group> = Vec::new();
        for &(j, w) in &c.atoms {
            let ys = project(&y_grid[j], s);
            let yc = project(&y_grid[j], &comp);
            let close = |a: &[f64], b: &[f64], t: f64| a.iter().zip(b).all(|(p, q)| (p - q).abs() <= t);
            let g = match groups.iter_mut().position(|g| close(&g.0, &ys, GROUP_MATCH_TOL)) {
                Some(k) => &mut groups[k].1,
                None => {
                    groups.push((ys, Vec::new()));
                    &mut groups.last_mut().expect("just pushed").1
                }
            };
            match g.iter_mut().find(|b| close(&b.0, &yc, tol)) {
                Some(b) => b.1 += w,
                None => g.push((yc, w)),
            }
        }
        for (ys, branches) in groups {
            if branches.len() < 2 {
                continue;
            }
            let total: f64 = branches.iter().map(|b| b.1).sum();
            let heaviest = branches.iter().map(|b| b.1).fold(0.0, f64::max);
            violations.push(GraphViolation {
                x_index: c.x_index,
                x: c.x.clone(),
                y_s: ys,
                branches: branches.into_iter().map(|b| b.0).collect(),
                mass: total - heaviest,
            });
        }
    }
    let max_violating_mass = violations.iter().map(|v| v.mass).fold(0.0, f64::max);
    GraphReport {
        s: s.to_vec(),
        tol,
        passed: max_violating_mass <= tol,
        violations,
        max_violating_mass,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Constant,
    Increasing,
    Decreasing,
    Mixed,
}

fn trend(v: &[f64]) -> Trend {
    let (mut up, mut down) = (false, false);
    for w in v.windows(2) {
        if w[1] > w[0] + ATOM_MATCH_TOL {
            up = true;
        } else if w[1] < w[0] - ATOM_MATCH_TOL {
            down = true;
        }
    }
    match (up, down) {
        (false, false) => Trend::Constant,
        (true, false) => Trend::Increasing,
        (false, true) => Trend::Decreasing,
        (true, true) => Trend::Mixed,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreePointRecord {
    pub x_index: usize,
    pub x: f64,
    pub mass: f64,
    pub t_minus: f64,
    pub t_plus: f64,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    pub stay_weight: f64,
    /// `|λ⁻ + λ⁺ + stay - 1|`
    pub weight_residual: f64,
    /// `|λ⁻ T⁻ + λ⁺ T⁺ + stay·x - x|`
    pub barycenter_residual: f64,
    /// Largest deviation from `λ^± = |T^∓ - x| / (T⁺ - T⁻) · (1 - stay)`.
    pub formula_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreePointStructure {
    pub records: Vec<ThreePointRecord>,
    /// Trends of `T⁻` and `T⁺` in `x` over conditionals that move mass.
    pub t_minus_trend: Trend,
    pub t_plus_trend: Trend,
    pub passed: bool,
}

impl ThreePointStructure {
    pub fn to_csv(&self) -> Result<String> {
        to_csv(self.records.iter())
    }
}

/// Reads each one-dimensional conditional as `λ⁻ δ_{T⁻} + stay δ_x + λ⁺ δ_{T⁺}`,
/// ignoring atoms of conditional weight below `floor`.
pub fn three_point_structure_1d(plan: &JointPlan, floor: f64) -> Result<ThreePointStructure> {
    if plan.dim() != 1 {
        return Err(Error::InvalidPlan(format!("three-point structure needs d = 1, got {}", plan.dim())));
    }
    let y_grid = plan.y_grid();
    let mut records = Vec::new();
    for c in disintegrate(plan) {
        let x = c.x.0[0];
        let kept: Vec<(f64, f64)> = c.atoms.iter().filter(|a| a.1 >= floor).map(|a| (y_grid[a.0].0[0], a.1)).collect();
        let total: f64 = kept.iter().map(|a| a.1).sum();
        let stay: Vec<_> = kept.iter().filter(|a| (a.0 - x).abs() <= ATOM_MATCH_TOL).collect();
        let left: Vec<_> = kept.iter().filter(|a| a.0 < x - ATOM_MATCH_TOL).collect();
        let right: Vec<_> = kept.iter().filter(|a| a.0 > x + ATOM_MATCH_TOL).collect();
        if left.len() > 1 || right.len() > 1 {
            return Err(Error::NotThreePoint {
                x,
                atoms: kept.len(),
            });
        }
        let stay_weight = stay.first().map_or(0.0, |a| a.1) / total;
        let (t_minus, lambda_minus) = left.first().map_or((x, 0.0), |a| (a.0, a.1 / total));
        let (t_plus, lambda_plus) = right.first().map_or((x, 0.0), |a| (a.0, a.1 / total));
        let formula_residual = if t_plus > t_minus {
            let moving = 1.0 - stay_weight;
            let lm = (t_plus - x) / (t_plus - t_minus) * moving;
            let lp = (x - t_minus) / (t_plus - t_minus) * moving;
            (lm - lambda_minus).abs().max((lp - lambda_plus).abs())
        } else {
            0.0
        };
        records.push(ThreePointRecord {
            x_index: c.x_index,
            x,
            mass: c.mass,
            t_minus,
            t_plus,
            lambda_minus,
            lambda_plus,
            stay_weight,
            weight_residual: (lambda_minus + lambda_plus + stay_weight - 1.0).abs(),
            barycenter_residual: (lambda_minus * t_minus + lambda_plus * t_plus + stay_weight * x - x).abs(),
            formula_residual,
        });
    }
    let moving: Vec<&ThreePointRecord> = records.iter().filter(|r| r.t_plus > r.t_minus).collect();
    let passed = records
        .iter()
        .all(|r| r.weight_residual <= 1e-8 && r.barycenter_residual <= 1e-8 && r.formula_residual <= 1e-6);
    Ok(ThreePointStructure {
        t_minus_trend: trend(&moving.iter().map(|r| r.t_minus).collect::<Vec<_>>()),
        t_plus_trend: trend(&moving.iter().map(|r| r.t_plus).collect::<Vec<_>>()),
        records,
        passed,
    })
}
