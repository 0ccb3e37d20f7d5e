//! Finite atomic measures on the line and on product grids.
//!
//! [`DiscreteMeasure`] carries the one-dimensional marginals together with
//! their potential functions `u(x) = Σ w_j |x - a_j|`. [`JointPlan`] is a
//! sparse nonnegative measure on `X × Y` where both grids are lists of
//! [`GridPoint`]s.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coordinates closer than this are treated as the same atom.
pub const ATOM_MATCH_TOL: f64 = 1e-12;

/// Default tolerance for mass, mean and potential comparisons.
pub const DEFAULT_ORDER_TOL: f64 = 1e-9;

/// A finite atomic measure on the real line.
///
/// Positions are strictly increasing and every stored weight is positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct DiscreteMeasure {
    atoms: Vec<(f64, f64)>,
    mass: f64,
    mean: f64,
}

impl DiscreteMeasure {
    /// Builds a measure from `(position, weight)` pairs in any order.
    ///
    /// Zero weights are dropped and coincident positions are merged.
    pub fn new(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut raw: Vec<(f64, f64)> = Vec::new();
        for (x, w) in atoms {
            if !x.is_finite() || !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidWeight {
                    position: x,
                    weight: w,
                });
            }
            if w > 0.0 {
                raw.push((x, w));
            }
        }
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        for (x, w) in raw {
            match merged.last_mut() {
                Some(last) if (x - last.0).abs() <= ATOM_MATCH_TOL => last.1 += w,
                _ => merged.push((x, w)),
            }
        }
        Ok(Self::from_sorted(merged))
    }

    fn from_sorted(atoms: Vec<(f64, f64)>) -> Self {
        let mass: f64 = atoms.iter().map(|a| a.1).sum();
        let first: f64 = atoms.iter().map(|a| a.0 * a.1).sum();
        let mean = if mass > 0.0 { first / mass } else { 0.0 };
        Self { atoms, mass, mean }
    }

    /// The zero measure.
    pub fn zero() -> Self {
        Self::from_sorted(Vec::new())
    }

    /// Unit point mass at `x`.
    pub fn dirac(x: f64) -> Self {
        Self::from_sorted(vec![(x, 1.0)])
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms.iter().map(|a| a.0)
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms.iter().map(|a| a.1)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// First moment divided by mass (zero for the zero measure).
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Weight of the atom at `x`, matched within [`ATOM_MATCH_TOL`].
    pub fn weight_at(&self, x: f64) -> f64 {
        self.index_of(x).map_or(0.0, |i| self.atoms[i].1)
    }

    pub fn index_of(&self, x: f64) -> Option<usize> {
        let i = self.atoms.partition_point(|a| a.0 < x - ATOM_MATCH_TOL);
        (i < self.atoms.len() && (self.atoms[i].0 - x).abs() <= ATOM_MATCH_TOL).then_some(i)
    }

    /// `∫ f dμ`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.atoms.iter().map(|&(x, w)| w * f(x)).sum()
    }

    /// Potential function `u(x) = Σ w_j |x - a_j|`.
    ///
    /// The empty measure has no potential; see [`potential_eval`].
    pub fn potential(&self, x: f64) -> f64 {
        self.atoms.iter().map(|&(a, w)| w * (x - a).abs()).sum()
    }

    /// Restriction to positions satisfying `keep`.
    pub fn restrict(&self, keep: impl Fn(f64) -> bool) -> Self {
        Self::from_sorted(self.atoms.iter().copied().filter(|a| keep(a.0)).collect())
    }

    /// Atomwise sum.
    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.atoms.iter().chain(other.atoms.iter()).copied())
            .expect("sum of valid measures is valid")
    }

    /// Largest atomwise weight difference against `other`.
    pub fn max_atom_diff(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        for &(x, w) in &self.atoms {
            worst = worst.max((w - other.weight_at(x)).abs());
        }
        for &(x, w) in &other.atoms {
            if self.index_of(x).is_none() {
                worst = worst.max(w);
            }
        }
        worst
    }
}

impl TryFrom<Vec<[f64; 2]>> for DiscreteMeasure {
    type Error = Error;

    fn try_from(value: Vec<[f64; 2]>) -> Result<Self> {
        Self::new(value.into_iter().map(|[x, w]| (x, w)))
    }
}

impl From<DiscreteMeasure> for Vec<[f64; 2]> {
    fn from(m: DiscreteMeasure) -> Self {
        m.atoms.into_iter().map(|(x, w)| [x, w]).collect()
    }
}

/// `u_m(x) = ∫ |x - y| dm(y)`.
pub fn potential_eval(m: &DiscreteMeasure, x: f64) -> Result<f64> {
    if m.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    Ok(m.potential(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderViolation {
    Mass,
    Mean,
    Potential,
}

/// Where and by how much `u_mu ≤ u_nu` (or the mass/mean identity) fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderWitness {
    pub kind: OrderViolation,
    /// Evaluation point for potential violations.
    pub point: Option<f64>,
    /// Positive size of the violation.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderCheck {
    pub ordered: bool,
    pub witness: Option<OrderWitness>,
}

/// Tests `mu ≤_c nu`.
///
/// `u_mu - u_nu` is piecewise linear with kinks at the atoms of either
/// measure and vanishes at infinity once mass and mean agree, so checking
/// the atoms is exhaustive.
pub fn convex_order_check(mu: &DiscreteMeasure, nu: &DiscreteMeasure, tol: f64) -> Result<OrderCheck> {
    if mu.is_empty() || nu.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    let mass_gap = (mu.mass() - nu.mass()).abs();
    if mass_gap > tol {
        return Ok(OrderCheck {
            ordered: false,
            witness: Some(OrderWitness {
                kind: OrderViolation::Mass,
                point: None,
                gap: mass_gap,
            }),
        });
    }
    let mean_gap = (mu.mean() * mu.mass() - nu.mean() * nu.mass()).abs();
    if mean_gap > tol {
        return Ok(OrderCheck {
            ordered: false,
            witness: Some(OrderWitness {
                kind: OrderViolation::Mean,
                point: None,
                gap: mean_gap,
            }),
        });
    }
    let mut worst: Option<(f64, f64)> = None;
    for x in mu.positions().chain(nu.positions()) {
        let gap = mu.potential(x) - nu.potential(x);
        if gap > tol && worst.is_none_or(|(_, g)| gap > g) {
            worst = Some((x, gap));
        }
    }
    Ok(match worst {
        None => OrderCheck {
            ordered: true,
            witness: None,
        },
        Some((x, gap)) => OrderCheck {
            ordered: false,
            witness: Some(OrderWitness {
                kind: OrderViolation::Potential,
                point: Some(x),
                gap,
            }),
        },
    })
}

/// A point of `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GridPoint(pub Vec<f64>);

impl GridPoint {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    /// Lexicographic order with coordinates within [`ATOM_MATCH_TOL`]
    /// treated as equal.
    pub fn cmp_tol(&self, other: &Self) -> Ordering {
        for (a, b) in self.0.iter().zip(&other.0) {
            if (a - b).abs() > ATOM_MATCH_TOL {
                return a.total_cmp(b);
            }
        }
        self.0.len().cmp(&other.0.len())
    }

    pub fn matches(&self, other: &Self) -> bool {
        self.cmp_tol(other) == Ordering::Equal
    }
}

impl From<Vec<f64>> for GridPoint {
    fn from(v: Vec<f64>) -> Self {
        GridPoint(v)
    }
}

/// Finite nonnegative measure on `R^d`, atoms kept in lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeasure {
    atoms: Vec<(GridPoint, f64)>,
}

impl GridMeasure {
    pub fn new(atoms: impl IntoIterator<Item = (GridPoint, f64)>) -> Self {
        let mut raw: Vec<(GridPoint, f64)> = atoms.into_iter().filter(|a| a.1 > 0.0).collect();
        raw.sort_by(|a, b| a.0.cmp_tol(&b.0));
        let mut merged: Vec<(GridPoint, f64)> = Vec::with_capacity(raw.len());
        for (p, w) in raw {
            match merged.last_mut() {
                Some(last) if last.0.matches(&p) => last.1 += w,
                _ => merged.push((p, w)),
            }
        }
        Self { atoms: merged }
    }

    pub fn atoms(&self) -> &[(GridPoint, f64)] {
        &self.atoms
    }

    pub fn mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn weight_at(&self, p: &GridPoint) -> f64 {
        self.atoms
            .binary_search_by(|a| a.0.cmp_tol(p))
            .map_or(0.0, |i| self.atoms[i].1)
    }

    /// One-dimensional marginal along `axis`.
    pub fn marginal(&self, axis: usize) -> DiscreteMeasure {
        DiscreteMeasure::new(self.atoms.iter().map(|(p, w)| (p.0[axis], *w)))
            .expect("marginal of a valid grid measure is valid")
    }
}

/// Atomwise minimum `a ∧ b`.
pub fn measure_min(a: &GridMeasure, b: &GridMeasure) -> GridMeasure {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.atoms.len() && j < b.atoms.len() {
        match a.atoms[i].0.cmp_tol(&b.atoms[j].0) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                out.push((a.atoms[i].0.clone(), a.atoms[i].1.min(b.atoms[j].1)));
                i += 1;
                j += 1;
            }
        }
    }
    GridMeasure::new(out)
}

/// Sparse nonnegative measure on `x_grid × y_grid`.
///
/// Probability plans are built with [`JointPlan::new`]; sub-plans such as
/// residuals and diagonal pieces use [`JointPlan::unnormalized`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PlanRepr", into = "PlanRepr")]
pub struct JointPlan {
    dim: usize,
    x_grid: Vec<GridPoint>,
    y_grid: Vec<GridPoint>,
    entries: BTreeMap<(usize, usize), f64>,
}

#[derive(Serialize, Deserialize)]
struct PlanRepr {
    dim: usize,
    x_grid: Vec<GridPoint>,
    y_grid: Vec<GridPoint>,
    entries: Vec<(usize, usize, f64)>,
}

impl TryFrom<PlanRepr> for JointPlan {
    type Error = Error;

    fn try_from(r: PlanRepr) -> Result<Self> {
        JointPlan::unnormalized(r.dim, r.x_grid, r.y_grid, r.entries)
    }
}

impl From<JointPlan> for PlanRepr {
    fn from(p: JointPlan) -> Self {
        PlanRepr {
            dim: p.dim,
            x_grid: p.x_grid,
            y_grid: p.y_grid,
            entries: p.entries.into_iter().map(|((i, j), w)| (i, j, w)).collect(),
        }
    }
}

/// Mass tolerance for probability plans.
pub const PLAN_MASS_TOL: f64 = 1e-9;

/// One conditional law `π_x` of a plan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conditional {
    pub x_index: usize,
    pub x: GridPoint,
    pub mass: f64,
    /// `(y_index, conditional weight)`, weights summing to one.
    pub atoms: Vec<(usize, f64)>,
}

impl Conditional {
    /// `Σ_y π_x(y) y`.
    pub fn barycenter(&self, y_grid: &[GridPoint]) -> Vec<f64> {
        let mut b = vec![0.0; self.x.dim()];
        for &(j, w) in &self.atoms {
            for (bk, yk) in b.iter_mut().zip(&y_grid[j].0) {
                *bk += w * yk;
            }
        }
        b
    }
}

impl JointPlan {
    /// A probability plan; total mass must be one within [`PLAN_MASS_TOL`].
    pub fn new(
        dim: usize,
        x_grid: Vec<GridPoint>,
        y_grid: Vec<GridPoint>,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let plan = Self::unnormalized(dim, x_grid, y_grid, entries)?;
        let mass = plan.mass();
        if (mass - 1.0).abs() > PLAN_MASS_TOL {
            return Err(Error::InvalidPlan(format!("total mass {mass} differs from 1")));
        }
        Ok(plan)
    }

    /// A nonnegative measure on the product grid with no mass constraint.
    /// Nonpositive entries are dropped; repeated cells are summed.
    pub fn unnormalized(
        dim: usize,
        x_grid: Vec<GridPoint>,
        y_grid: Vec<GridPoint>,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        if let Some(p) = x_grid.iter().chain(&y_grid).find(|p| p.dim() != dim) {
            return Err(Error::InvalidPlan(format!(
                "grid point {:?} does not have dimension {dim}",
                p.0
            )));
        }
        let mut map = BTreeMap::new();
        for (i, j, w) in entries {
            if i >= x_grid.len() || j >= y_grid.len() {
                return Err(Error::InvalidPlan(format!("entry ({i}, {j}) out of range")));
            }
            if !w.is_finite() {
                return Err(Error::InvalidPlan(format!("non-finite weight at ({i}, {j})")));
            }
            if w > 0.0 {
                *map.entry((i, j)).or_insert(0.0) += w;
            }
        }
        Ok(Self {
            dim,
            x_grid,
            y_grid,
            entries: map,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn x_grid(&self) -> &[GridPoint] {
        &self.x_grid
    }

    pub fn y_grid(&self) -> &[GridPoint] {
        &self.y_grid
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries.iter().map(|(&(i, j), &w)| (i, j, w))
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.entries.get(&(i, j)).copied().unwrap_or(0.0)
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn mass(&self) -> f64 {
        self.entries.values().sum()
    }

    /// `∫ f(x, y) dπ` with grid indices passed alongside the points.
    pub fn integrate(&self, f: impl Fn(usize, &GridPoint, usize, &GridPoint) -> f64) -> f64 {
        self.entries
            .iter()
            .map(|(&(i, j), &w)| w * f(i, &self.x_grid[i], j, &self.y_grid[j]))
            .sum()
    }

    /// Total weight per x index (`π¹` as a dense vector over `x_grid`).
    pub fn x_masses(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.x_grid.len()];
        for (&(i, _), &w) in &self.entries {
            m[i] += w;
        }
        m
    }

    /// Total weight per y index.
    pub fn y_masses(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.y_grid.len()];
        for (&(_, j), &w) in &self.entries {
            m[j] += w;
        }
        m
    }

    /// Multiplies every entry by `s > 0`.
    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for w in out.entries.values_mut() {
            *w *= s;
        }
        out
    }
}

/// The d-copulas `π¹ = Law(X)` and `π² = Law(Y)`.
pub fn copulas_of(plan: &JointPlan) -> (GridMeasure, GridMeasure) {
    let pi1 = plan
        .x_masses()
        .into_iter()
        .enumerate()
        .map(|(i, w)| (plan.x_grid[i].clone(), w));
    let pi2 = plan
        .y_masses()
        .into_iter()
        .enumerate()
        .map(|(j, w)| (plan.y_grid[j].clone(), w));
    (GridMeasure::new(pi1), GridMeasure::new(pi2))
}

/// Disintegration with respect to `π¹`: one normalized conditional per
/// x index carrying positive mass, in x-index order.
pub fn disintegrate(plan: &JointPlan) -> Vec<Conditional> {
    let mut out: Vec<Conditional> = Vec::new();
    for (&(i, j), &w) in &plan.entries {
        match out.last_mut() {
            Some(c) if c.x_index == i => {
                c.mass += w;
                c.atoms.push((j, w));
            }
            _ => out.push(Conditional {
                x_index: i,
                x: plan.x_grid[i].clone(),
                mass: w,
                atoms: vec![(j, w)],
            }),
        }
    }
    for c in &mut out {
        for a in &mut c.atoms {
            a.1 /= c.mass;
        }
    }
    out
}

/// `D_# m` with `D(x) = (x, x)`: a plan whose grids are both the atoms of `m`.
pub fn diagonal_pushforward(m: &GridMeasure) -> JointPlan {
    let dim = m.atoms.first().map_or(0, |a| a.0.dim());
    let pts: Vec<GridPoint> = m.atoms.iter().map(|a| a.0.clone()).collect();
    let entries: Vec<_> = m.atoms.iter().enumerate().map(|(k, a)| (k, k, a.1)).collect();
    JointPlan::unnormalized(dim, pts.clone(), pts, entries).expect("diagonal of a grid measure is a valid plan")
}

/// Densities that [`discretize_density`] can coarse-grain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensitySpec {
    /// Uniform probability density on `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
    /// Piecewise-constant density with `values.len()` equal pieces on
    /// `[lo, hi]`; renormalized to unit mass.
    Table { lo: f64, hi: f64, values: Vec<f64> },
}

impl DensitySpec {
    pub fn uniform(lo: f64, hi: f64) -> Self {
        DensitySpec::Uniform { lo, hi }
    }

    fn bounds(&self) -> (f64, f64) {
        match self {
            DensitySpec::Uniform { lo, hi } | DensitySpec::Table { lo, hi, .. } => (*lo, *hi),
        }
    }

    /// Mass and first moment on `[a, b] ⊂ [lo, hi]` (unnormalized for tables).
    fn moments(&self, a: f64, b: f64) -> (f64, f64) {
        match self {
            DensitySpec::Uniform { lo, hi } => {
                let m = (b - a) / (hi - lo);
                (m, m * 0.5 * (a + b))
            }
            DensitySpec::Table { lo, hi, values } => {
                let width = (hi - lo) / values.len() as f64;
                let (mut m0, mut m1) = (0.0, 0.0);
                for (k, &v) in values.iter().enumerate() {
                    let s = lo + k as f64 * width;
                    let e = if k + 1 == values.len() { *hi } else { s + width };
                    let (l, r) = (a.max(s), b.min(e));
                    if r > l && v > 0.0 {
                        m0 += v * (r - l);
                        m1 += v * 0.5 * (r * r - l * l);
                    }
                }
                (m0, m1)
            }
        }
    }
}

/// Coarse-grains a density into `n_cells` equal cells, one atom per cell at
/// the cell's barycenter carrying the cell's mass.
pub fn discretize_density(spec: &DensitySpec, n_cells: usize) -> Result<DiscreteMeasure> {
    let (lo, hi) = spec.bounds();
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidInterval { lo, hi });
    }
    if n_cells == 0 {
        return Err(Error::InvalidDensity("n_cells must be at least 1".into()));
    }
    if let DensitySpec::Table { values, .. } = spec {
        if values.is_empty() || values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidDensity("table values must be finite and nonnegative".into()));
        }
        if values.iter().all(|v| *v == 0.0) {
            return Err(Error::InvalidDensity("table has zero mass".into()));
        }
    }
    let (total, _) = spec.moments(lo, hi);
    let width = (hi - lo) / n_cells as f64;
    let mut atoms = Vec::with_capacity(n_cells);
    for k in 0..n_cells {
        let a = lo + k as f64 * width;
        let b = if k + 1 == n_cells { hi } else { lo + (k + 1) as f64 * width };
        let (m0, m1) = spec.moments(a, b);
        if m0 > 0.0 {
            atoms.push((m1 / m0, m0 / total));
        }
    }
    DiscreteMeasure::new(atoms)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(atoms: &[(f64, f64)]) -> DiscreteMeasure {
        DiscreteMeasure::new(atoms.iter().copied()).unwrap()
    }

    fn gp(c: &[f64]) -> GridPoint {
        GridPoint(c.to_vec())
    }

    #[test]
    fn potential_examples() {
        assert_eq!(potential_eval(&m(&[(-1.0, 0.5), (1.0, 0.5)]), 0.0).unwrap(), 1.0);
        assert_eq!(potential_eval(&DiscreteMeasure::dirac(0.0), 2.0).unwrap(), 2.0);
        // independent summation: 1/4 * 2 + 1/2 * 0 + 1/4 * 2
        let expected = 0.25 * 2.0 + 0.5 * 0.0 + 0.25 * 2.0;
        assert_eq!(potential_eval(&m(&[(-2.0, 0.25), (0.0, 0.5), (2.0, 0.25)]), 0.0).unwrap(), expected);
        assert!(matches!(potential_eval(&DiscreteMeasure::zero(), 0.0), Err(Error::EmptyMeasure)));
    }

    #[test]
    fn construction_drops_zero_weights_and_merges() {
        let mu = m(&[(1.0, 0.25), (0.0, 0.0), (-1.0, 0.5), (1.0, 0.25)]);
        assert_eq!(mu.atoms(), &[(-1.0, 0.5), (1.0, 0.5)]);
        assert_eq!(mu.mass(), 1.0);
        assert_eq!(mu.mean(), 0.0);
        assert!(DiscreteMeasure::new([(0.0, -1.0)]).is_err());
        assert!(DiscreteMeasure::new([(f64::NAN, 1.0)]).is_err());
    }

    #[test]
    fn convex_order_examples() {
        let delta0 = DiscreteMeasure::dirac(0.0);
        let pm1 = m(&[(-1.0, 0.5), (1.0, 0.5)]);
        assert!(convex_order_check(&delta0, &pm1, 1e-9).unwrap().ordered);

        let rev = convex_order_check(&pm1, &delta0, 1e-9).unwrap();
        assert!(!rev.ordered);
        let w = rev.witness.unwrap();
        assert_eq!(w.kind, OrderViolation::Potential);
        assert_eq!(w.point, Some(0.0));
        assert!((w.gap - 1.0).abs() < 1e-15);

        let shifted = m(&[(-1.0, 0.5), (2.0, 0.5)]);
        let r = convex_order_check(&delta0, &shifted, 1e-9).unwrap();
        assert!(!r.ordered);
        assert_eq!(r.witness.unwrap().kind, OrderViolation::Mean);

        assert!(convex_order_check(&DiscreteMeasure::zero(), &delta0, 1e-9).is_err());
    }

    #[test]
    fn copulas_and_disintegration() {
        let plan = JointPlan::new(
            2,
            vec![gp(&[0.0, 0.0])],
            vec![gp(&[-1.0, -1.0]), gp(&[1.0, 1.0])],
            [(0, 0, 0.5), (0, 1, 0.5)],
        )
        .unwrap();
        let (pi1, pi2) = copulas_of(&plan);
        assert_eq!(pi1.atoms(), &[(gp(&[0.0, 0.0]), 1.0)]);
        assert_eq!(pi2.atoms(), &[(gp(&[-1.0, -1.0]), 0.5), (gp(&[1.0, 1.0]), 0.5)]);

        let conds = disintegrate(&plan);
        assert_eq!(conds.len(), 1);
        assert_eq!(conds[0].barycenter(plan.y_grid()), vec![0.0, 0.0]);

        let pts = vec![gp(&[0.0]), gp(&[1.0])];
        let id = JointPlan::new(1, pts.clone(), pts, [(0, 0, 0.3), (1, 1, 0.7)]).unwrap();
        for c in disintegrate(&id) {
            assert_eq!(c.atoms, vec![(c.x_index, 1.0)]);
        }
    }

    #[test]
    fn plan_rejects_bad_mass_and_indices() {
        let pts = vec![gp(&[0.0])];
        assert!(JointPlan::new(1, pts.clone(), pts.clone(), [(0, 0, 0.5)]).is_err());
        assert!(JointPlan::new(1, pts.clone(), pts.clone(), [(0, 1, 1.0)]).is_err());
        assert!(JointPlan::new(2, pts.clone(), pts, [(0, 0, 1.0)]).is_err());
    }

    #[test]
    fn min_examples() {
        let (p, q, r) = (gp(&[0.0, 1.0]), gp(&[1.0, 1.0]), gp(&[2.0, 0.0]));
        let a = GridMeasure::new([(p.clone(), 0.5), (q.clone(), 0.5)]);
        let b = GridMeasure::new([(p.clone(), 0.25), (r.clone(), 0.75)]);
        assert_eq!(measure_min(&a, &a), a);
        assert_eq!(measure_min(&a, &b).atoms(), &[(p, 0.25)]);
        let c = GridMeasure::new([(r, 1.0)]);
        assert!(measure_min(&a, &c).is_empty());
    }

    #[test]
    fn diagonal_examples() {
        let d = diagonal_pushforward(&GridMeasure::new([(gp(&[0.0]), 1.0)]));
        assert_eq!(d.entries().collect::<Vec<_>>(), vec![(0, 0, 1.0)]);
        assert_eq!(d.x_grid()[0], d.y_grid()[0]);
        let z = diagonal_pushforward(&GridMeasure::new([]));
        assert_eq!(z.support_len(), 0);
        let m = GridMeasure::new([(gp(&[0.0, 1.0]), 0.2), (gp(&[3.0, 1.0]), 0.7)]);
        assert!((diagonal_pushforward(&m).mass() - 0.9).abs() < 1e-15);
    }

    #[test]
    fn discretize_examples() {
        let a = discretize_density(&DensitySpec::uniform(-0.5, 0.5), 2).unwrap();
        assert_eq!(a.atoms(), &[(-0.25, 0.5), (0.25, 0.5)]);
        let b = discretize_density(&DensitySpec::uniform(-1.0, 1.0), 4).unwrap();
        assert_eq!(b.atoms(), &[(-0.75, 0.25), (-0.25, 0.25), (0.25, 0.25), (0.75, 0.25)]);
        assert!(discretize_density(&DensitySpec::uniform(1.0, 1.0), 3).is_err());
        assert!(discretize_density(&DensitySpec::uniform(0.0, 1.0), 0).is_err());
    }

    #[test]
    fn discretize_table_keeps_mean() {
        let spec = DensitySpec::Table {
            lo: 0.0,
            hi: 3.0,
            values: vec![1.0, 2.0, 3.0],
        };
        // density 1,2,3 on unit pieces, total 6; mean = (0.5 + 3 + 7.5) / 6
        let mean = (0.5 * 1.0 + 1.5 * 2.0 + 2.5 * 3.0) / 6.0;
        for n in [1, 2, 5, 7] {
            let d = discretize_density(&spec, n).unwrap();
            assert!((d.mass() - 1.0).abs() < 1e-12);
            assert!((d.mean() - mean).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn measure_json_shape() {
        let mu = m(&[(-1.0, 0.5), (1.0, 0.5)]);
        let s = serde_json::to_string(&mu).unwrap();
        assert_eq!(s, "[[-1.0,0.5],[1.0,0.5]]");
        let back: DiscreteMeasure = serde_json::from_str(&s).unwrap();
        assert_eq!(back, mu);
        let plan = JointPlan::new(1, vec![gp(&[0.0])], vec![gp(&[-1.0]), gp(&[1.0])], [(0, 0, 0.5), (0, 1, 0.5)]).unwrap();
        let v = serde_json::to_value(&plan).unwrap();
        assert_eq!(v["entries"], serde_json::json!([[0, 0, 0.5], [0, 1, 0.5]]));
        assert_eq!(v["dim"], 1);
    }
}
