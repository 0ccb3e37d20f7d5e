//! Equality-form linear programs `min c·x  s.t.  A x = b, x ≥ 0`.
//!
//! [`solve_lp`] is a two-phase revised simplex with an explicit dense basis
//! inverse, refactorized periodically. Columns are priced with Dantzig's
//! rule; after a run of degenerate pivots the solver switches to Bland's
//! rule until the objective moves again, which rules out cycling.
//! Rank-deficient row sets are handled in phase one: artificials that cannot
//! be pivoted out mark redundant rows and stay basic at zero.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest pivot element accepted in the ratio test.
const PIVOT_TOL: f64 = 1e-9;
/// Feasibility slack allowed in the first pass of the ratio test.
const HARRIS_TOL: f64 = 1e-11;
/// Artificials are driven out on entries above this magnitude.
const DRIVE_OUT_TOL: f64 = 1e-10;
/// Relative reduced-cost tolerance (scaled by the largest |c_j|).
const OPT_TOL_REL: f64 = 1e-10;
/// Phase-one objective above which the program is declared infeasible.
const FEAS_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 64;
const DEGENERATE_RUN_FOR_BLAND: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseRow {
    pub indices: Vec<usize>,
    pub coefs: Vec<f64>,
    pub rhs: f64,
}

impl SparseRow {
    pub fn dot(&self, x: &[f64]) -> f64 {
        self.indices.iter().zip(&self.coefs).map(|(&j, &a)| a * x[j]).sum()
    }
}

/// `min objective·x` subject to `rows` as equalities and `x ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub n_vars: usize,
    pub objective: Vec<f64>,
    pub rows: Vec<SparseRow>,
}

impl LinearProgram {
    pub fn new(n_vars: usize) -> Self {
        Self {
            n_vars,
            objective: vec![0.0; n_vars],
            rows: Vec::new(),
        }
    }

    pub fn with_objective(objective: Vec<f64>) -> Self {
        Self {
            n_vars: objective.len(),
            objective,
            rows: Vec::new(),
        }
    }

    /// Appends `Σ coef·x_index = rhs`. Zero coefficients are skipped and
    /// repeated indices summed.
    pub fn add_row(&mut self, terms: impl IntoIterator<Item = (usize, f64)>, rhs: f64) {
        let mut pairs: Vec<(usize, f64)> = terms.into_iter().filter(|t| t.1 != 0.0).collect();
        pairs.sort_by_key(|t| t.0);
        let mut indices: Vec<usize> = Vec::with_capacity(pairs.len());
        let mut coefs: Vec<f64> = Vec::with_capacity(pairs.len());
        for (j, a) in pairs {
            if indices.last() == Some(&j) {
                *coefs.last_mut().unwrap() += a;
            } else {
                indices.push(j);
                coefs.push(a);
            }
        }
        self.rows.push(SparseRow { indices, coefs, rhs });
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.objective.len() != self.n_vars {
            return Err(Error::InvalidLp(format!(
                "objective has {} entries for {} variables",
                self.objective.len(),
                self.n_vars
            )));
        }
        if let Some(j) = self.objective.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidLp(format!("objective entry {j} is not finite")));
        }
        for (r, row) in self.rows.iter().enumerate() {
            if row.indices.len() != row.coefs.len() {
                return Err(Error::InvalidLp(format!("row {r} has mismatched index/coef lengths")));
            }
            if row.indices.iter().any(|&j| j >= self.n_vars) {
                return Err(Error::InvalidLp(format!("row {r} references a variable out of range")));
            }
            if !row.rhs.is_finite() || row.coefs.iter().any(|a| !a.is_finite()) {
                return Err(Error::InvalidLp(format!("row {r} has a non-finite entry")));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    /// One multiplier per row: `A^T dual ≤ c` at optimality.
    pub dual: Vec<f64>,
    pub objective_value: f64,
    /// Basic variable per row; indices `≥ n_vars` are artificials left on
    /// redundant rows.
    pub basis: Vec<usize>,
    pub iterations: usize,
    /// Some basic variable sits at zero, so the dual vector may not be
    /// the only optimal one.
    pub degenerate: bool,
}

struct Simplex<'a> {
    lp: &'a LinearProgram,
    m: usize,
    n: usize,
    col_start: Vec<usize>,
    col_rows: Vec<usize>,
    col_vals: Vec<f64>,
    b: Vec<f64>,
    flip: Vec<bool>,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    iterations: usize,
    max_iterations: usize,
    since_refactor: usize,
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
}

impl<'a> Simplex<'a> {
    fn new(lp: &'a LinearProgram) -> Self {
        let m = lp.rows.len();
        let n = lp.n_vars;
        let flip: Vec<bool> = lp.rows.iter().map(|r| r.rhs < 0.0).collect();
        let b: Vec<f64> = lp.rows.iter().map(|r| r.rhs.abs()).collect();

        let mut counts = vec![0usize; n + 1];
        for row in &lp.rows {
            for &j in &row.indices {
                counts[j + 1] += 1;
            }
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let col_start = counts.clone();
        let mut fill = counts;
        let nnz = col_start[n];
        let mut col_rows = vec![0; nnz];
        let mut col_vals = vec![0.0; nnz];
        for (r, row) in lp.rows.iter().enumerate() {
            let s = if flip[r] { -1.0 } else { 1.0 };
            for (&j, &a) in row.indices.iter().zip(&row.coefs) {
                col_rows[fill[j]] = r;
                col_vals[fill[j]] = s * a;
                fill[j] += 1;
            }
        }

        let mut binv = vec![0.0; m * m];
        for r in 0..m {
            binv[r * m + r] = 1.0;
        }
        let mut in_basis = vec![false; n + m];
        for r in 0..m {
            in_basis[n + r] = true;
        }
        Self {
            lp,
            m,
            n,
            col_start,
            col_rows,
            col_vals,
            xb: b.clone(),
            b,
            flip,
            basis: (n..n + m).collect(),
            in_basis,
            binv,
            iterations: 0,
            max_iterations: 50 * (n + m).max(1),
            since_refactor: 0,
        }
    }

    fn column(&self, j: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.col_start[j], self.col_start[j + 1]);
        (&self.col_rows[s..e], &self.col_vals[s..e])
    }

    /// `B^{-1} A_j`.
    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        if j >= self.n {
            let k = j - self.n;
            return (0..m).map(|r| self.binv[r * m + k]).collect();
        }
        let (rows, vals) = self.column(j);
        (0..m)
            .map(|r| {
                let bi = &self.binv[r * m..(r + 1) * m];
                rows.iter().zip(vals).map(|(&k, &v)| bi[k] * v).sum()
            })
            .collect()
    }

    /// `c_B^T B^{-1}`.
    fn duals(&self, cost: &dyn Fn(usize) -> f64) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for r in 0..m {
            let cb = cost(self.basis[r]);
            if cb != 0.0 {
                let bi = &self.binv[r * m..(r + 1) * m];
                for (yk, bk) in y.iter_mut().zip(bi) {
                    *yk += cb * bk;
                }
            }
        }
        y
    }

    fn reduced_cost(&self, j: usize, cj: f64, y: &[f64]) -> f64 {
        let (rows, vals) = self.column(j);
        cj - rows.iter().zip(vals).map(|(&k, &v)| y[k] * v).sum::<f64>()
    }

    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        self.since_refactor = 0;
        if m == 0 {
            return Ok(());
        }
        let mut bmat = DMatrix::<f64>::zeros(m, m);
        for (c, &j) in self.basis.iter().enumerate() {
            if j >= self.n {
                bmat[(j - self.n, c)] = 1.0;
            } else {
                let (rows, vals) = self.column(j);
                for (&r, &v) in rows.iter().zip(vals) {
                    bmat[(r, c)] = v;
                }
            }
        }
        let inv = bmat
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::InvalidLp("basis matrix became singular".into()))?;
        for r in 0..m {
            for k in 0..m {
                self.binv[r * m + k] = inv[(r, k)];
            }
        }
        for r in 0..m {
            let bi = &self.binv[r * m..(r + 1) * m];
            let v: f64 = bi.iter().zip(&self.b).map(|(a, b)| a * b).sum();
            self.xb[r] = if v < 0.0 && v > -FEAS_TOL { 0.0 } else { v };
        }
        Ok(())
    }

    fn pivot(&mut self, r: usize, j: usize, alpha: &[f64]) {
        let m = self.m;
        let piv = alpha[r];
        let theta = self.xb[r] / piv;
        for (i, a) in alpha.iter().enumerate() {
            if i != r && *a != 0.0 {
                self.xb[i] -= theta * a;
            }
        }
        self.xb[r] = theta;

        let (head, rest) = self.binv.split_at_mut(r * m);
        let (prow, tail) = rest.split_at_mut(m);
        for v in prow.iter_mut() {
            *v /= piv;
        }
        for (i, a) in alpha.iter().enumerate() {
            if i == r || *a == 0.0 {
                continue;
            }
            let row = if i < r {
                &mut head[i * m..(i + 1) * m]
            } else {
                &mut tail[(i - r - 1) * m..(i - r) * m]
            };
            for (v, p) in row.iter_mut().zip(prow.iter()) {
                *v -= a * p;
            }
        }

        self.in_basis[self.basis[r]] = false;
        self.in_basis[j] = true;
        self.basis[r] = j;
        self.iterations += 1;
        self.since_refactor += 1;
    }

    /// Returns the leaving row, or `None` if the column is unbounded.
    ///
    /// Two passes: the first bounds the step with every basic value relaxed
    /// by `HARRIS_TOL`, the second picks among rows within that bound the
    /// largest pivot element (Dantzig mode) or the smallest basic index
    /// among exact minimizers (Bland mode).
    fn ratio_test(&self, alpha: &[f64], bland: bool) -> Option<usize> {
        let amax = alpha.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let piv_tol = PIVOT_TOL.max(1e-7 * amax);
        if bland {
            let mut best: Option<(usize, f64)> = None;
            for (r, &a) in alpha.iter().enumerate() {
                if a <= piv_tol {
                    continue;
                }
                let theta = self.xb[r].max(0.0) / a;
                let better = match best {
                    None => true,
                    Some((br, bt)) => {
                        theta < bt - 1e-12 * (1.0 + bt.abs())
                            || ((theta - bt).abs() <= 1e-12 * (1.0 + bt.abs()) && self.basis[r] < self.basis[br])
                    }
                };
                if better {
                    best = Some((r, theta));
                }
            }
            return best.map(|b| b.0);
        }
        let mut bound = f64::INFINITY;
        for (r, &a) in alpha.iter().enumerate() {
            if a > piv_tol {
                bound = bound.min((self.xb[r].max(0.0) + HARRIS_TOL) / a);
            }
        }
        if !bound.is_finite() {
            return None;
        }
        let mut best: Option<usize> = None;
        for (r, &a) in alpha.iter().enumerate() {
            if a > piv_tol && self.xb[r].max(0.0) / a <= bound && best.is_none_or(|b| a > alpha[b]) {
                best = Some(r);
            }
        }
        best
    }

    fn run_phase(&mut self, phase: u8, cost: &dyn Fn(usize) -> f64, allow_artificial: bool) -> Result<PhaseOutcome> {
        let cmax = (0..self.n).map(|j| cost(j).abs()).fold(0.0, f64::max).max(if phase == 1 { 1.0 } else { 0.0 });
        let opt_tol = OPT_TOL_REL * cmax;
        let mut degenerate_run = 0usize;
        let mut confirmed = false;
        loop {
            if self.iterations >= self.max_iterations {
                let objective: f64 = self.basis.iter().zip(&self.xb).map(|(&j, &x)| cost(j) * x).sum();
                return Err(Error::IterationLimit {
                    iterations: self.iterations,
                    phase,
                    objective,
                });
            }
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
            let y = self.duals(cost);
            let bland = degenerate_run >= DEGENERATE_RUN_FOR_BLAND;
            let limit = if allow_artificial { self.n + self.m } else { self.n };
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..limit {
                if self.in_basis[j] {
                    continue;
                }
                let d = if j < self.n {
                    self.reduced_cost(j, cost(j), &y)
                } else {
                    cost(j) - y[j - self.n]
                };
                if d < -opt_tol && entering.is_none_or(|(_, bd)| d < bd) {
                    entering = Some((j, d));
                    if bland {
                        break;
                    }
                }
            }
            let Some((j, _)) = entering else {
                if confirmed || self.since_refactor == 0 {
                    return Ok(PhaseOutcome::Optimal);
                }
                self.refactor()?;
                confirmed = true;
                continue;
            };
            confirmed = false;
            let alpha = self.ftran(j);
            let Some(r) = self.ratio_test(&alpha, bland) else {
                if self.since_refactor == 0 {
                    return Ok(PhaseOutcome::Unbounded);
                }
                self.refactor()?;
                continue;
            };
            let step = self.xb[r].max(0.0) / alpha[r];
            if step <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, j, &alpha);
        }
    }

    fn drive_out_artificials(&mut self) -> Result<()> {
        let m = self.m;
        for r in 0..m {
            if self.basis[r] < self.n {
                continue;
            }
            let rho: Vec<f64> = self.binv[r * m..(r + 1) * m].to_vec();
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.n {
                if self.in_basis[j] {
                    continue;
                }
                let (rows, vals) = self.column(j);
                let v: f64 = rows.iter().zip(vals).map(|(&k, &a)| rho[k] * a).sum();
                if v.abs() > DRIVE_OUT_TOL && best.is_none_or(|(_, bv)| v.abs() > bv) {
                    best = Some((j, v.abs()));
                }
            }
            if let Some((j, _)) = best {
                let alpha = self.ftran(j);
                self.pivot(r, j, &alpha);
            }
        }
        self.refactor()
    }

    fn solve(mut self) -> Result<LpSolution> {
        let n = self.n;
        let phase1 = |j: usize| if j >= n { 1.0 } else { 0.0 };
        self.run_phase(1, &phase1, false)?;
        self.refactor()?;
        let infeas: f64 = self
            .basis
            .iter()
            .zip(&self.xb)
            .filter(|(&j, _)| j >= n)
            .map(|(_, &x)| x.abs())
            .sum();
        let scale = 1.0 + self.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if infeas > FEAS_TOL * scale {
            return Ok(self.finish(LpStatus::Infeasible, infeas));
        }
        self.drive_out_artificials()?;

        let obj = &self.lp.objective;
        let phase2 = |j: usize| if j >= n { 0.0 } else { obj[j] };
        let outcome = self.run_phase(2, &phase2, false)?;
        self.refactor()?;
        let status = match outcome {
            PhaseOutcome::Optimal => LpStatus::Optimal,
            PhaseOutcome::Unbounded => LpStatus::Unbounded,
        };
        Ok(self.finish(status, 0.0))
    }

    fn finish(self, status: LpStatus, infeas: f64) -> LpSolution {
        let n = self.n;
        let obj = &self.lp.objective;
        let mut primal = vec![0.0; n];
        for (&j, &x) in self.basis.iter().zip(&self.xb) {
            if j < n {
                primal[j] = x.max(0.0);
            }
        }
        let cost = |j: usize| if j >= n { 0.0 } else { obj[j] };
        let mut dual = self.duals(&cost);
        for (y, &f) in dual.iter_mut().zip(&self.flip) {
            if f {
                *y = -*y;
            }
        }
        let degenerate = self.xb.iter().any(|x| x.abs() <= 1e-12);
        let objective_value = match status {
            LpStatus::Optimal => self.lp.objective_value(&primal),
            LpStatus::Infeasible => infeas,
            LpStatus::Unbounded => f64::NEG_INFINITY,
        };
        LpSolution {
            status,
            primal,
            dual,
            objective_value,
            basis: self.basis,
            iterations: self.iterations,
            degenerate,
        }
    }
}

/// Solves `lp` to a vertex optimum with dual multipliers.
///
/// Deterministic: the same input always produces the same pivot sequence.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    Simplex::new(lp).solve()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    /// `max |A x - b|` together with any negative `x_j`.
    pub max_primal_residual: f64,
    /// `max (A^T y - c)_j`.
    pub max_dual_violation: f64,
    /// `max |x_j (c_j - A_j^T y)|`.
    pub max_cs_gap: f64,
    /// `|c·x - b·y|`.
    pub duality_gap: f64,
    pub passed: bool,
}

/// Recomputes every optimality residual of `sol` directly from `lp`.
pub fn check_kkt(lp: &LinearProgram, sol: &LpSolution, tol: f64) -> KktReport {
    let x = &sol.primal;
    let y = &sol.dual;
    let mut primal: f64 = x.iter().fold(0.0, |a, &v| a.max(-v));
    for row in &lp.rows {
        primal = primal.max((row.dot(x) - row.rhs).abs());
    }
    let mut aty = vec![0.0; lp.n_vars];
    for (row, &yr) in lp.rows.iter().zip(y) {
        for (&j, &a) in row.indices.iter().zip(&row.coefs) {
            aty[j] += a * yr;
        }
    }
    let mut dual: f64 = 0.0;
    let mut cs: f64 = 0.0;
    for j in 0..lp.n_vars {
        let d = lp.objective[j] - aty[j];
        dual = dual.max(-d);
        cs = cs.max((x[j] * d).abs());
    }
    let by: f64 = lp.rows.iter().zip(y).map(|(r, v)| r.rhs * v).sum();
    let gap = (lp.objective_value(x) - by).abs();
    KktReport {
        max_primal_residual: primal,
        max_dual_violation: dual,
        max_cs_gap: cs,
        duality_gap: gap,
        passed: primal <= tol && dual <= tol && cs <= tol,
    }
}

/// Plain-text dump, one statement per line:
///
/// ```text
/// # comment
/// vars <n>
/// obj <c_0> <c_1> ... <c_{n-1}>
/// row <rhs> <j>:<a_j> <j>:<a_j> ...
/// ```
///
/// Every `row` line is the equality `Σ a_j x_j = rhs`; all variables are
/// nonnegative and the objective is minimized.
pub fn write_lp_dump(lp: &LinearProgram) -> String {
    let mut out = String::new();
    out.push_str("# equality-form LP: minimize obj.x subject to rows, x >= 0\n");
    let _ = writeln!(out, "vars {}", lp.n_vars);
    out.push_str("obj");
    for c in &lp.objective {
        let _ = write!(out, " {c:?}");
    }
    out.push('\n');
    for row in &lp.rows {
        let _ = write!(out, "row {:?}", row.rhs);
        for (j, a) in row.indices.iter().zip(&row.coefs) {
            let _ = write!(out, " {j}:{a:?}");
        }
        out.push('\n');
    }
    out
}

pub fn parse_lp_dump(text: &str) -> Result<LinearProgram> {
    let num = |s: &str, line: usize| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::Parse(format!("line {line}: bad number {s:?}")))
    };
    let mut lp: Option<LinearProgram> = None;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut parts = t.split_whitespace();
        match parts.next() {
            Some("vars") => {
                let n = parts
                    .next()
                    .and_then(|s| s.parse::<usize>().ok())
                    .ok_or_else(|| Error::Parse(format!("line {line}: vars needs a count")))?;
                lp = Some(LinearProgram::new(n));
            }
            Some("obj") => {
                let p = lp.as_mut().ok_or_else(|| Error::Parse(format!("line {line}: obj before vars")))?;
                let c = parts.map(|s| num(s, line)).collect::<Result<Vec<_>>>()?;
                if c.len() != p.n_vars {
                    return Err(Error::Parse(format!("line {line}: obj has {} entries, expected {}", c.len(), p.n_vars)));
                }
                p.objective = c;
            }
            Some("row") => {
                let p = lp.as_mut().ok_or_else(|| Error::Parse(format!("line {line}: row before vars")))?;
                let rhs = num(parts.next().ok_or_else(|| Error::Parse(format!("line {line}: row needs rhs")))?, line)?;
                let mut terms = Vec::new();
                for tok in parts {
                    let (j, a) = tok
                        .split_once(':')
                        .ok_or_else(|| Error::Parse(format!("line {line}: bad term {tok:?}")))?;
                    let j = j
                        .parse::<usize>()
                        .map_err(|_| Error::Parse(format!("line {line}: bad index {j:?}")))?;
                    terms.push((j, num(a, line)?));
                }
                p.add_row(terms, rhs);
            }
            Some(other) => return Err(Error::Parse(format!("line {line}: unknown statement {other:?}"))),
            None => {}
        }
    }
    let lp = lp.ok_or_else(|| Error::Parse("missing vars statement".into()))?;
    lp.validate()?;
    Ok(lp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn transport_2x2() -> LinearProgram {
        // x00 x01 x10 x11
        let mut lp = LinearProgram::with_objective(vec![0.0, 1.0, 1.0, 0.0]);
        lp.add_row([(0, 1.0), (1, 1.0)], 0.5);
        lp.add_row([(2, 1.0), (3, 1.0)], 0.5);
        lp.add_row([(0, 1.0), (2, 1.0)], 0.5);
        lp.add_row([(1, 1.0), (3, 1.0)], 0.5);
        lp
    }

    #[test]
    fn single_equality() {
        let mut lp = LinearProgram::with_objective(vec![1.0]);
        lp.add_row([(0, 1.0)], 1.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value - 1.0).abs() < 1e-12);
        assert!((s.dual[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn transport_two_by_two() {
        let lp = transport_2x2();
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!(s.objective_value.abs() < 1e-12);
        assert!((s.primal[0] - 0.5).abs() < 1e-12 && (s.primal[3] - 0.5).abs() < 1e-12);
        let k = check_kkt(&lp, &s, 1e-10);
        assert!(k.passed, "{k:?}");
    }

    #[test]
    fn redundant_duplicate_row() {
        let mut lp = transport_2x2();
        lp.add_row([(0, 1.0), (1, 1.0)], 0.5);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!(s.objective_value.abs() < 1e-12);
        assert!(check_kkt(&lp, &s, 1e-10).passed);
    }

    #[test]
    fn kkt_sees_perturbation() {
        let lp = transport_2x2();
        let mut s = solve_lp(&lp).unwrap();
        s.primal[0] += 1e-3;
        let k = check_kkt(&lp, &s, 1e-10);
        assert!((k.max_primal_residual - 1e-3).abs() < 1e-12);
        assert!(!k.passed);
    }

    #[test]
    fn kkt_zero_lp() {
        let lp = LinearProgram::new(3);
        let s = solve_lp(&lp).unwrap();
        let k = check_kkt(&lp, &s, 0.0);
        assert_eq!((k.max_primal_residual, k.max_dual_violation, k.max_cs_gap), (0.0, 0.0, 0.0));
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::with_objective(vec![1.0, 1.0]);
        lp.add_row([(0, 1.0), (1, 1.0)], -1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);

        let mut lp = LinearProgram::with_objective(vec![-1.0, 0.0]);
        lp.add_row([(0, 1.0), (1, -1.0)], 0.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn negative_rhs_duals_keep_sign() {
        // min x0 + 2 x1 s.t. -x0 - x1 = -1  ->  x0 = 1, y = -1
        let mut lp = LinearProgram::with_objective(vec![1.0, 2.0]);
        lp.add_row([(0, -1.0), (1, -1.0)], -1.0);
        let s = solve_lp(&lp).unwrap();
        assert!((s.dual[0] + 1.0).abs() < 1e-12);
        assert!(check_kkt(&lp, &s, 1e-12).passed);
    }

    #[test]
    fn rejects_bad_index() {
        let mut lp = LinearProgram::new(1);
        lp.add_row([(3, 1.0)], 1.0);
        assert!(matches!(solve_lp(&lp), Err(Error::InvalidLp(_))));
    }

    #[test]
    fn dump_round_trip() {
        let mut lp = transport_2x2();
        lp.objective[1] = 0.1 + 0.2;
        let text = write_lp_dump(&lp);
        assert_eq!(parse_lp_dump(&text).unwrap(), lp);
        assert!(parse_lp_dump("vars 2\nobj 1\n").is_err());
        assert!(parse_lp_dump("row 1 0:1\n").is_err());
    }
}
