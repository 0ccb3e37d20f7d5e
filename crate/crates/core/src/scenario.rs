//! Scenario files: a problem, an ordered pipeline of stages and tolerance
//! overrides. Running a scenario produces a [`ScenarioReport`] whose
//! assertions decide the exit status.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cost::CostSpec;
use crate::error::{Error, Result};
use crate::geometry::{check_conditional_extremality, check_graph_structure, staying_decomposition, three_point_structure_1d};
use crate::lp::{check_kkt, write_lp_dump};
use crate::measures::{discretize_density, DensitySpec, DiscreteMeasure};
use crate::mmot::{
    build_lp, certify, constraint_residual, gauge_normalize, recover_dual, solve_primal, DualTriple, MmotProblem,
    NormalizedChi, PrimalSolution,
};
use crate::transforms::{verify_copula_optimality, TransformBundle};

/// A marginal given either as atoms or as a density to discretize.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MarginalSpec {
    Atoms(DiscreteMeasure),
    Density { density: DensitySpec, cells: usize },
}

impl MarginalSpec {
    pub fn build(&self) -> Result<DiscreteMeasure> {
        match self {
            MarginalSpec::Atoms(m) => Ok(m.clone()),
            MarginalSpec::Density { density, cells } => discretize_density(density, *cells),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marginals {
    pub mu: Vec<MarginalSpec>,
    pub nu: Vec<MarginalSpec>,
}

/// Problem file contents: `{d, marginals: {mu, nu}, cost: {kind, ...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub d: usize,
    pub marginals: Marginals,
    pub cost: CostSpec,
}

impl ProblemSpec {
    pub fn build(&self) -> Result<MmotProblem> {
        if self.marginals.mu.len() != self.d || self.marginals.nu.len() != self.d {
            return Err(Error::InvalidProblem(format!(
                "d = {} but {} mu and {} nu marginals given",
                self.d,
                self.marginals.mu.len(),
                self.marginals.nu.len()
            )));
        }
        let mus = self.marginals.mu.iter().map(MarginalSpec::build).collect::<Result<Vec<_>>>()?;
        let nus = self.marginals.nu.iter().map(MarginalSpec::build).collect::<Result<Vec<_>>>()?;
        MmotProblem::new(mus, nus, self.cost.clone())
    }
}

/// Pipeline stages, written in scenario files as `"solve"`, `"graph(0)"`, ...
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stage {
    Solve,
    Dual,
    Normalize,
    Transforms,
    CopulaCheck,
    Extremality,
    Staying,
    /// Graph structure over the zero-based coordinate set `S`.
    Graph(Vec<usize>),
    ThreePoint,
    ChiProbe,
}

impl Stage {
    fn requires(&self) -> Option<&'static str> {
        match self {
            Stage::Solve => None,
            Stage::Dual | Stage::Extremality | Stage::Staying | Stage::Graph(_) | Stage::ThreePoint => Some("solve"),
            Stage::Normalize | Stage::Transforms | Stage::ChiProbe => Some("dual"),
            Stage::CopulaCheck => Some("transforms"),
        }
    }

    fn key(&self) -> &'static str {
        match self {
            Stage::Solve => "solve",
            Stage::Dual => "dual",
            Stage::Normalize => "normalize",
            Stage::Transforms => "transforms",
            Stage::CopulaCheck => "copula_check",
            Stage::Extremality => "extremality",
            Stage::Staying => "staying",
            Stage::Graph(_) => "graph",
            Stage::ThreePoint => "three_point",
            Stage::ChiProbe => "chi_probe",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stage::Graph(s) => {
                let inner: Vec<String> = s.iter().map(usize::to_string).collect();
                write!(f, "graph({})", inner.join(","))
            }
            other => f.write_str(other.key()),
        }
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(inner) = s.strip_prefix("graph(").and_then(|r| r.strip_suffix(')')) {
            let set = inner
                .split(',')
                .map(|t| t.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::Parse(format!("bad coordinate set in stage {s:?}")))?;
            return Ok(Stage::Graph(set));
        }
        Ok(match s {
            "solve" => Stage::Solve,
            "dual" => Stage::Dual,
            "normalize" => Stage::Normalize,
            "transforms" => Stage::Transforms,
            "copula_check" => Stage::CopulaCheck,
            "extremality" => Stage::Extremality,
            "staying" => Stage::Staying,
            "three_point" => Stage::ThreePoint,
            "chi_probe" => Stage::ChiProbe,
            _ => return Err(Error::Parse(format!("unknown stage {s:?}"))),
        })
    }
}

impl Serialize for Stage {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Stage {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Tolerances used by the stages; every field can be overridden by name.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Dual certificates, KKT residuals, copula and bundle checks.
    pub certify: f64,
    /// Row residual of the returned plan.
    pub residual: f64,
    /// Conditional atoms below this weight are ignored by extremality.
    pub noise_floor: f64,
    /// Required mass-weighted extreme fraction.
    pub extremality_bar: f64,
    /// Complement-coordinate separation and violating mass in the graph check.
    pub graph: f64,
    /// Conditional atoms below this weight are ignored by the three-point reader.
    pub three_point_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            certify: 1e-8,
            residual: 1e-9,
            noise_floor: 1e-6,
            extremality_bar: 0.99,
            graph: 1e-6,
            three_point_floor: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn with_overrides(mut self, overrides: &BTreeMap<String, f64>) -> Result<Self> {
        for (k, &v) in overrides {
            let slot = match k.as_str() {
                "certify" => &mut self.certify,
                "residual" => &mut self.residual,
                "noise_floor" => &mut self.noise_floor,
                "extremality_bar" => &mut self.extremality_bar,
                "graph" => &mut self.graph,
                "three_point_floor" => &mut self.three_point_floor,
                _ => return Err(Error::Parse(format!("unknown tolerance {k:?}"))),
            };
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Parse(format!("tolerance {k} must be a nonnegative number")));
            }
            *slot = v;
        }
        Ok(self)
    }
}

/// Inline problem or a path relative to the scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemRef {
    File { file: PathBuf },
    Inline(ProblemSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub problem: ProblemRef,
    pub pipeline: Vec<Stage>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("{origin}: line {} column {}: {e}", e.line(), e.column())))
}

impl Scenario {
    /// Parses a scenario, or a bare problem file (which gets the pipeline
    /// `solve, dual`).
    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let value: Value = parse_json(text, origin)?;
        let scenario = if value.get("pipeline").is_some() {
            parse_json::<Scenario>(text, origin)?
        } else {
            let problem: ProblemSpec = parse_json(text, origin)?;
            let name = Path::new(origin)
                .file_stem()
                .map_or_else(|| "problem".to_string(), |s| s.to_string_lossy().into_owned());
            Scenario {
                name,
                problem: ProblemRef::Inline(problem),
                pipeline: vec![Stage::Solve, Stage::Dual],
                tolerances: BTreeMap::new(),
            }
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut s = Self::from_json(&text, &path.display().to_string())?;
        if let ProblemRef::File { file } = &mut s.problem {
            if file.is_relative() {
                if let Some(dir) = path.parent() {
                    *file = dir.join(&*file);
                }
            }
        }
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::Parse(format!("scenario name {:?} is not a plain file name", self.name)));
        }
        let mut seen: Vec<&'static str> = Vec::new();
        for stage in &self.pipeline {
            if let Some(req) = stage.requires() {
                if !seen.contains(&req) {
                    return Err(Error::Parse(format!("stage {stage} requires an earlier {req} stage")));
                }
            }
            seen.push(stage.key());
        }
        Tolerances::default().with_overrides(&self.tolerances)?;
        Ok(())
    }

    pub fn problem_spec(&self) -> Result<ProblemSpec> {
        match &self.problem {
            ProblemRef::Inline(p) => Ok(p.clone()),
            ProblemRef::File { file } => {
                let text = std::fs::read_to_string(file)?;
                parse_json(&text, &file.display().to_string())
            }
        }
    }
}

/// One checked claim with its measured value and threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub value: f64,
    /// `"<="` or `">="`.
    pub relation: String,
    pub bound: f64,
    pub passed: bool,
}

impl Assertion {
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        // adding zero turns a -0.0 from max-folds into 0.0
        let value = value + 0.0;
        Self {
            name: name.into(),
            value,
            relation: "<=".into(),
            bound,
            passed: value <= bound,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        let value = value + 0.0;
        Self {
            name: name.into(),
            value,
            relation: ">=".into(),
            bound,
            passed: value >= bound,
        }
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            relation: ">=".into(),
            bound: 1.0,
            passed: ok,
        }
    }
}

impl fmt::Display for Assertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "ok  " } else { "FAIL" };
        write!(f, "{tag} {}: {:.6e} {} {:.6e}", self.name, self.value, self.relation, self.bound)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: String,
    pub assertions: Vec<Assertion>,
    pub detail: Value,
    /// Error raised by the stage, if any; a stage with an error fails.
    pub error: Option<String>,
}

impl StageReport {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.assertions.iter().all(|a| a.passed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub name: String,
    pub version: String,
    pub tolerances: Tolerances,
    pub value: Option<f64>,
    pub gap: Option<f64>,
    pub stages: Vec<StageReport>,
    pub passed: bool,
    /// CSV tables keyed by file name; written next to the JSON report.
    #[serde(skip)]
    pub tables: BTreeMap<String, String>,
}

impl ScenarioReport {
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for s in &self.stages {
            if let Some(e) = &s.error {
                out.push(format!("{}: {e}", s.stage));
            }
            out.extend(s.assertions.iter().filter(|a| !a.passed).map(|a| format!("{}: {a}", s.stage)));
        }
        out
    }

    /// Writes `report.json` and the CSV tables into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        std::fs::write(dir.join("report.json"), json)?;
        for (name, body) in &self.tables {
            std::fs::write(dir.join(name), body)?;
        }
        Ok(())
    }
}

#[derive(Default)]
struct State {
    primal: Option<PrimalSolution>,
    dual: Option<DualTriple>,
    bundle: Option<TransformBundle>,
}

/// Runs `scenario` with an optional global tolerance override and LP dump
/// path. Problem and parse errors are returned as `Err`; stage failures
/// are recorded in the report.
pub fn run_scenario(scenario: &Scenario, tol: Option<f64>, dump_lp: Option<&Path>) -> Result<ScenarioReport> {
    let mut tols = Tolerances::default().with_overrides(&scenario.tolerances)?;
    if let Some(t) = tol {
        tols.certify = t;
    }
    let problem = scenario.problem_spec()?.build()?;
    if let Some(path) = dump_lp {
        std::fs::write(path, write_lp_dump(&build_lp(&problem)))?;
    }
    let mut state = State::default();
    let mut report = ScenarioReport {
        name: scenario.name.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        tolerances: tols,
        value: None,
        gap: None,
        stages: Vec::new(),
        passed: true,
        tables: BTreeMap::new(),
    };
    for stage in &scenario.pipeline {
        let mut sr = StageReport {
            stage: stage.to_string(),
            assertions: Vec::new(),
            detail: Value::Null,
            error: None,
        };
        if let Err(e) = run_stage(stage, &problem, &tols, &mut state, &mut sr, &mut report) {
            sr.error = Some(e.to_string());
        }
        let ok = sr.passed();
        report.stages.push(sr);
        if !ok {
            report.passed = false;
            // later stages may depend on this one
            if state.primal.is_none() || matches!(stage, Stage::Dual | Stage::Transforms) {
                break;
            }
        }
    }
    Ok(report)
}

fn run_stage(
    stage: &Stage,
    problem: &MmotProblem,
    tols: &Tolerances,
    state: &mut State,
    sr: &mut StageReport,
    report: &mut ScenarioReport,
) -> Result<()> {
    let need = |what: &str| Error::InvalidProblem(format!("stage {stage} needs {what}"));
    match stage {
        Stage::Solve => {
            let primal = solve_primal(problem)?;
            let residual = constraint_residual(problem, &primal.plan);
            let kkt = check_kkt(&primal.lp, &primal.solution, tols.certify);
            sr.assertions.push(Assertion::at_most("row_residual", residual, tols.residual));
            sr.assertions.push(Assertion::at_most("kkt_primal_residual", kkt.max_primal_residual, tols.certify));
            sr.assertions.push(Assertion::at_most("kkt_dual_violation", kkt.max_dual_violation, tols.certify));
            sr.assertions.push(Assertion::at_most("kkt_complementary_slackness", kkt.max_cs_gap, tols.certify));
            report.value = Some(primal.value);
            sr.detail = json!({
                "value": primal.value,
                "n_vars": problem.n_vars(),
                "n_rows": primal.lp.n_rows(),
                "iterations": primal.solution.iterations,
                "plan": primal.plan,
            });
            report.tables.insert("plan.csv".into(), plan_csv(&primal)?);
            state.primal = Some(primal);
        }
        Stage::Dual => {
            let primal = state.primal.as_ref().ok_or_else(|| need("a solution"))?;
            let dual = recover_dual(problem, primal)?;
            let cert = certify(problem, &dual, &primal.plan);
            sr.assertions.push(Assertion::at_most("pointwise_violation", cert.max_violation, tols.certify));
            sr.assertions.push(Assertion::at_most("support_residual", cert.max_support_residual, tols.certify));
            sr.assertions.push(Assertion::at_most("duality_gap", cert.gap.abs(), tols.certify));
            report.gap = Some(cert.gap);
            sr.detail = json!({ "certificate": cert, "dual": dual });
            state.dual = Some(dual);
        }
        Stage::Normalize => {
            let dual = state.dual.as_ref().ok_or_else(|| need("a dual"))?;
            let normalized = gauge_normalize(dual, problem);
            let before = dual.objective(problem);
            let after = normalized.objective(problem);
            let f_means = normalized
                .f
                .iter()
                .zip(problem.mus())
                .map(|(f, mu)| mu.weights().zip(f).map(|(w, v)| w * v).sum::<f64>().abs())
                .fold(0.0, f64::max);
            sr.assertions.push(Assertion::at_most("objective_shift", (after - before).abs(), 1e-12 * (1.0 + before.abs())));
            sr.assertions.push(Assertion::at_most("f_means", f_means, 1e-12));
            let cert = state.primal.as_ref().map(|p| certify(problem, &normalized, &p.plan));
            if let Some(c) = &cert {
                sr.assertions.push(Assertion::at_most("pointwise_violation", c.max_violation, tols.certify));
            }
            sr.detail = json!({ "dual": normalized });
            state.dual = Some(normalized);
        }
        Stage::Transforms => {
            let dual = state.dual.as_ref().ok_or_else(|| need("a dual"))?;
            let bundle = TransformBundle::build(problem, dual)?;
            let inv = bundle.invariants(problem);
            sr.assertions.push(Assertion::at_most("affine_over_beta", inv.affine_over_beta, tols.certify));
            sr.assertions.push(Assertion::at_most("phi_over_alpha", inv.phi_over_alpha, tols.certify));
            sr.assertions.push(Assertion::at_most("beta_over_psi", inv.beta_over_psi, tols.certify));
            let ambiguous = bundle.gamma_ambiguous.iter().filter(|&&b| b).count();
            sr.detail = json!({ "bundle": bundle, "gamma_ambiguous_points": ambiguous });
            state.bundle = Some(bundle);
        }
        Stage::CopulaCheck => {
            let primal = state.primal.as_ref().ok_or_else(|| need("a solution"))?;
            let dual = state.dual.as_ref().ok_or_else(|| need("a dual"))?;
            let bundle = state.bundle.as_ref().ok_or_else(|| need("transforms"))?;
            let r = verify_copula_optimality(problem, dual, &primal.plan, bundle, tols.certify);
            sr.assertions.push(Assertion::at_most("f_below_alpha", r.f_below_alpha, tols.certify));
            sr.assertions.push(Assertion::at_most("f_equals_alpha_on_support", r.f_equals_alpha_on_support, tols.certify));
            sr.assertions.push(Assertion::at_most("g_above_beta", r.g_above_beta, tols.certify));
            sr.assertions.push(Assertion::at_most("g_equals_beta_on_support", r.g_equals_beta_on_support, tols.certify));
            sr.detail = serde_json::to_value(r)?;
        }
        Stage::Extremality => {
            let primal = state.primal.as_ref().ok_or_else(|| need("a solution"))?;
            let r = check_conditional_extremality(&primal.plan, tols.noise_floor);
            sr.assertions.push(Assertion::at_least("extreme_fraction_of_mass", r.mass_weighted_fraction, tols.extremality_bar));
            report.tables.insert("extremality.csv".into(), r.to_csv()?);
            sr.detail = json!({
                "worst_fraction": r.worst_fraction,
                "violating_mass": r.violating_mass,
                "mass_weighted_fraction": r.mass_weighted_fraction,
            });
        }
        Stage::Staying => {
            let primal = state.primal.as_ref().ok_or_else(|| need("a solution"))?;
            let r = staying_decomposition(&primal.plan);
            sr.assertions.push(Assertion::holds("dominance", r.dominance_ok));
            report.tables.insert("staying.csv".into(), r.to_csv(&primal.plan)?);
            let residual_mass = r.residual_plan.mass();
            let mut detail = json!({
                "diagonal_part": r.diagonal_part,
                "min_residual": r.min_residual,
                "residual_mass": residual_mass,
            });
            if residual_mass > 0.0 {
                let ex = check_conditional_extremality(&r.residual_plan.scaled(1.0 / residual_mass), tols.noise_floor);
                detail["residual_extreme_fraction"] = json!(ex.mass_weighted_fraction);
            }
            sr.detail = detail;
        }
        Stage::Graph(s) => {
            let primal = state.primal.as_ref().ok_or_else(|| need("a solution"))?;
            if s.iter().any(|&i| i >= problem.dim()) {
                return Err(Error::InvalidProblem(format!("graph coordinates {s:?} out of range")));
            }
            let r = check_graph_structure(&primal.plan, s, tols.graph);
            sr.assertions.push(Assertion::at_most("violating_mass", r.max_violating_mass, tols.graph));
            report.tables.insert("graph.csv".into(), r.to_csv()?);
            sr.detail = json!({ "violations": r.violations.len() });
        }
        Stage::ThreePoint => {
            let primal = state.primal.as_ref().ok_or_else(|| need("a solution"))?;
            let r = three_point_structure_1d(&primal.plan, tols.three_point_floor)?;
            sr.assertions.push(Assertion::holds("three_point", r.passed));
            report.tables.insert("three_point.csv".into(), r.to_csv()?);
            sr.detail = json!({ "t_minus_trend": r.t_minus_trend, "t_plus_trend": r.t_plus_trend });
        }
        Stage::ChiProbe => {
            let dual = state.dual.as_ref().ok_or_else(|| need("a dual"))?;
            let r = chi_probe(problem, dual)?;
            sr.assertions.push(Assertion::at_most("lower_sandwich", r.lower_violation, tols.certify));
            sr.assertions.push(Assertion::at_most("upper_sandwich", r.upper_violation, tols.certify));
            sr.assertions.push(Assertion::at_least("normalized_min", r.normalized_min, -tols.certify));
            sr.detail = serde_json::to_value(r)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct PlanRow {
    x_index: usize,
    y_index: usize,
    x: String,
    y: String,
    weight: f64,
}

fn plan_csv(primal: &PrimalSolution) -> Result<String> {
    let plan = &primal.plan;
    let pt = |p: &[f64]| p.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(";");
    let mut w = csv::Writer::from_writer(Vec::new());
    for (i, j, weight) in plan.entries() {
        w.serialize(PlanRow {
            x_index: i,
            y_index: j,
            x: pt(&plan.x_grid()[i].0),
            y: pt(&plan.y_grid()[j].0),
            weight,
        })
        .map_err(|e| Error::Parse(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Sandwich residuals and normalized values of `χ` on the x grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiProbe {
    /// `max_x [Σ f_i(x_i) - χ(x)]` over the x grid.
    pub lower_violation: f64,
    /// `max_y [χ(y) - max_x c(x, y) - Σ g_i(y_i)]` over the y grid.
    pub upper_violation: f64,
    pub normalization: NormalizedChi,
    /// `min` and `max` of normalized `χ` over the x grid.
    pub normalized_min: f64,
    pub normalized_max: f64,
}

pub fn chi_probe(problem: &MmotProblem, dual: &DualTriple) -> Result<ChiProbe> {
    use crate::mmot::chi_from_dual;
    let xs = problem.x_grid().points();
    let ys = problem.y_grid().points();
    let lower_violation = xs
        .iter()
        .enumerate()
        .map(|(xi, x)| dual.f_sum(problem, xi) - chi_from_dual(dual, problem, &x.0))
        .fold(0.0, f64::max);
    let upper_violation = ys
        .iter()
        .enumerate()
        .map(|(yj, y)| {
            let c_max = (0..xs.len()).map(|xi| problem.cost_at(xi, yj)).fold(f64::NEG_INFINITY, f64::max);
            chi_from_dual(dual, problem, &y.0) - c_max - dual.g_sum(problem, yj)
        })
        .fold(0.0, f64::max);
    let normalization = NormalizedChi::new(dual, problem);
    let vals: Vec<f64> = xs.iter().map(|x| normalization.eval(dual, problem, &x.0)).collect();
    Ok(ChiProbe {
        lower_violation,
        upper_violation,
        normalized_min: vals.iter().copied().fold(f64::INFINITY, f64::min),
        normalized_max: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        normalization,
    })
}
