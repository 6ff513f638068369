//! Scenario files: parsing, validation, dispatch and run reports.

pub mod examples;
pub mod suite;
pub mod sweep;

use crate::generate::{planted_g_only, planted_orthonormal, random_orthonormal, rng};
use crate::hardy::CoeffVec;
use crate::model_space::{build_model_space, verify_kernel_adjoint, TOL_MODEL};
use crate::near_invariance::{
    compute_defect, kernel_of, verify_inner_symbol, verify_invertible_factors, verify_phi_zero,
    verify_theta_star, DefectReport, SubCheck, TheoremCheck, VerifyOptions,
};
use crate::operators::{brown_halmos_check, build_perturbed_with, gram_deviation, Orthonormality, TOL_ORTHO};
use crate::representation::{
    build_frame_auto, default_depth, rank_one_complement_analysis, rank_one_inner_kernel,
    rank_one_invertible_kernel, rank_one_theta_star_analysis, represent_subspace, ThetaStarCase,
    TOL_EQUALITY,
};
use crate::subspace::{RankPolicy, Subspace, GAP_RATIO_LIMIT};
use crate::symbols::{LaurentMatrixSymbol, DEFAULT_GRID, DEFAULT_INNER_TOL, DEFAULT_INVERTIBILITY_MARGIN};
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::Instant;

/// Interior-window tolerance for the Brown–Halmos comparison.
pub const TOL_BROWN_HALMOS: f64 = 1e-10;
/// Headroom degrees required beyond the total bandwidth.
pub const HEADROOM: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolClass {
    Zero,
    Inner,
    InvertibleFactors,
    ThetaStar,
    Raw,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    DefectTheorem,
    Representation,
    ModelSpace,
    AdjointKernel,
    ComplementAnalysis,
    InnerKernel,
    InvertibleKernel,
    ThetaStarAnalysis,
    BrownHalmos,
}

impl CheckName {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::DefectTheorem => "defect_theorem",
            Self::Representation => "representation",
            Self::ModelSpace => "model_space",
            Self::AdjointKernel => "adjoint_kernel",
            Self::ComplementAnalysis => "complement_analysis",
            Self::InnerKernel => "inner_kernel",
            Self::InvertibleKernel => "invertible_kernel",
            Self::ThetaStarAnalysis => "theta_star_analysis",
            Self::BrownHalmos => "brown_halmos",
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    #[serde(rename = "G", default)]
    pub g: Vec<CoeffVec>,
    #[serde(rename = "H", default)]
    pub h: Vec<CoeffVec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerateKind {
    /// Independent orthonormal families `G` and `H`.
    RandomOrthonormal,
    /// Orthonormal `G`, `H` with a planted kernel of dimension `rank`.
    PlantedOrthonormal,
    /// Orthonormal `G = −P`, `H = T_Φ P`.
    PlantedGOnly,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generate {
    pub kind: GenerateKind,
    pub rank: usize,
    pub degree: usize,
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contain: Option<f64>,
}

/// Expected values checked after the requested checks have run.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defect_dim: Option<usize>,
    /// The defect space equals the part of this span orthogonal to the kernel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defect_span: Option<Vec<CoeffVec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_contains: Option<Vec<CoeffVec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case: Option<ThetaStarCase>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subcase: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_zero: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<CoeffVec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g0: Option<CoeffVec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_space_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<bool>,
}

impl Expect {
    fn is_empty(&self) -> bool {
        self.kernel_dim.is_none()
            && self.defect_dim.is_none()
            && self.defect_span.is_none()
            && self.kernel_contains.is_none()
            && self.case.is_none()
            && self.subcase.is_none()
            && self.r.is_none()
            && self.p.is_none()
            && self.k_zero.is_none()
            && self.g.is_none()
            && self.g0.is_none()
            && self.model_space_dim.is_none()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub symbol_class: SymbolClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol: Option<LaurentMatrixSymbol>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1: Option<LaurentMatrixSymbol>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f2: Option<LaurentMatrixSymbol>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<LaurentMatrixSymbol>,
    #[serde(default)]
    pub perturbation: Perturbation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generate: Option<Generate>,
    #[serde(default)]
    pub orthonormality: Orthonormality,
    pub checks: Vec<CheckName>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Expect::is_empty")]
    pub expect: Expect,
}

/// Failure before any check runs.
#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
}

impl ScenarioError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parse(_) => 2,
            Self::Validation(_) => 3,
        }
    }
}

fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Validation(msg.into())
}

/// Command-line overrides.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct RunOptions {
    pub tol_rank: Option<f64>,
    pub tol_contain: Option<f64>,
    pub seed: Option<u64>,
    #[serde(skip)]
    pub timings: bool,
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    serde_json::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Parse(format!("{}: {e}", path.display())))?;
    parse_scenario(&text)
}

/// A validated scenario with its operator symbol and perturbation resolved.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub scenario: Scenario,
    /// Symbol of the unperturbed Toeplitz operator.
    pub phi: LaurentMatrixSymbol,
    pub g: Vec<CoeffVec>,
    pub h: Vec<CoeffVec>,
    pub opts: VerifyOptions,
    pub seed: Option<u64>,
}

impl Prepared {
    pub fn policy(&self) -> RankPolicy {
        self.opts.policy
    }

    pub fn m(&self) -> usize {
        self.scenario.m
    }

    pub fn n(&self) -> usize {
        self.scenario.n
    }

    pub fn rank(&self) -> usize {
        self.g.len()
    }

    fn symbol(&self) -> &LaurentMatrixSymbol {
        self.scenario.symbol.as_ref().expect("validated")
    }
}

fn fit(v: &CoeffVec, m: usize, n: usize, what: &str) -> Result<CoeffVec, ScenarioError> {
    if v.m() != m {
        return Err(invalid(format!("{what}: {} components, expected {m}", v.m())));
    }
    if v.n() > n && v.degree(0.0).is_some_and(|d| d >= n) {
        return Err(invalid(format!("{what}: degree exceeds N − 1 = {}", n - 1)));
    }
    Ok(v.resized(n))
}

fn check_symbol_size(s: &LaurentMatrixSymbol, m: usize, what: &str) -> Result<(), ScenarioError> {
    if s.m() != m {
        return Err(invalid(format!("{what}: size {} but m = {m}", s.m())));
    }
    Ok(())
}

fn require_inner(s: &LaurentMatrixSymbol, what: &str) -> Result<(), ScenarioError> {
    if !s.is_analytic() {
        return Err(invalid(format!("{what} must be analytic")));
    }
    let c = s.is_inner(DEFAULT_GRID, DEFAULT_INNER_TOL);
    if !c.inner {
        return Err(invalid(format!("{what} is not inner (deviation {:.3e})", c.deviation)));
    }
    Ok(())
}

fn require_invertible(s: &LaurentMatrixSymbol, what: &str) -> Result<(), ScenarioError> {
    if !s.is_analytic() {
        return Err(invalid(format!("{what} must be analytic")));
    }
    let c = s
        .is_invertible_analytic(256, DEFAULT_INVERTIBILITY_MARGIN)
        .map_err(|e| invalid(format!("{what}: {e}")))?;
    if !c.invertible {
        return Err(invalid(format!("{what} is not invertible on the closed disk (min |det| {:.3e})", c.min_abs_det)));
    }
    Ok(())
}

fn positive(x: Option<f64>, what: &str) -> Result<(), ScenarioError> {
    if let Some(v) = x {
        if !(v.is_finite() && v > 0.0) {
            return Err(invalid(format!("{what} must be positive and finite")));
        }
    }
    Ok(())
}

/// Validates a scenario and resolves its symbol and perturbation.
pub fn validate(s: &Scenario, ro: &RunOptions) -> Result<Prepared, ScenarioError> {
    let (m, n) = (s.m, s.n);
    if m == 0 {
        return Err(invalid("m must be at least 1"));
    }
    if s.checks.is_empty() {
        return Err(invalid("no checks requested"));
    }
    for (i, c) in s.checks.iter().enumerate() {
        if s.checks[..i].contains(c) {
            return Err(invalid(format!("check {} listed twice", c.as_str())));
        }
    }
    positive(s.tolerances.rank, "tolerances.rank")?;
    positive(s.tolerances.contain, "tolerances.contain")?;
    positive(ro.tol_rank, "--tol-rank")?;
    positive(ro.tol_contain, "--tol-contain")?;
    for (sym, what) in [(&s.symbol, "symbol"), (&s.f1, "f1"), (&s.f2, "f2"), (&s.psi, "psi")] {
        if let Some(x) = sym {
            check_symbol_size(x, m, what)?;
        }
    }
    let phi = match s.symbol_class {
        SymbolClass::Zero => {
            if s.symbol.as_ref().is_some_and(|x| !x.is_zero()) {
                return Err(invalid("symbol_class zero with a nonzero symbol"));
            }
            LaurentMatrixSymbol::zero(m)
        }
        SymbolClass::Inner | SymbolClass::ThetaStar => {
            let th = s.symbol.as_ref().ok_or_else(|| invalid("inner symbol missing"))?;
            require_inner(th, "symbol")?;
            if s.symbol_class == SymbolClass::Inner { th.clone() } else { th.adjoint() }
        }
        SymbolClass::InvertibleFactors => {
            let f1 = s.f1.as_ref().ok_or_else(|| invalid("f1 missing"))?;
            let f2 = s.f2.as_ref().ok_or_else(|| invalid("f2 missing"))?;
            require_invertible(f1, "f1")?;
            require_invertible(f2, "f2")?;
            f1.adjoint().multiply(f2).map_err(|e| invalid(e.to_string()))?
        }
        SymbolClass::Raw => s.symbol.clone().ok_or_else(|| invalid("raw symbol missing"))?,
    };
    let mut total = phi.bandwidth();
    if s.checks.contains(&CheckName::BrownHalmos) {
        let psi = s.psi.as_ref().ok_or_else(|| invalid("brown_halmos needs psi"))?;
        let sym = s.symbol.as_ref().ok_or_else(|| invalid("brown_halmos needs symbol"))?;
        total = total.max(psi.bandwidth() + sym.bandwidth());
    }
    if n <= total + HEADROOM {
        return Err(invalid(format!("N = {n} must exceed total bandwidth {total} + {HEADROOM}")));
    }
    let seed = ro.seed.or(s.seed);
    let (g, h) = match (&s.generate, s.perturbation.g.is_empty() && s.perturbation.h.is_empty()) {
        (Some(_), false) => return Err(invalid("give either perturbation or generate, not both")),
        (Some(gen), true) => {
            let seed = seed.ok_or_else(|| invalid("generated perturbations need a seed"))?;
            generate(gen, &phi, m, n, seed)?
        }
        (None, _) => {
            let g = s
                .perturbation
                .g
                .iter()
                .enumerate()
                .map(|(i, v)| fit(v, m, n, &format!("G[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            let h = s
                .perturbation
                .h
                .iter()
                .enumerate()
                .map(|(i, v)| fit(v, m, n, &format!("H[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            (g, h)
        }
    };
    if g.len() != h.len() {
        return Err(invalid(format!("{} G vectors but {} H vectors", g.len(), h.len())));
    }
    if gram_deviation(&g) > TOL_ORTHO {
        return Err(invalid("G family is not orthonormal"));
    }
    if s.orthonormality == Orthonormality::Both && gram_deviation(&h) > TOL_ORTHO {
        return Err(invalid("H family is not orthonormal"));
    }
    let rank_one = g.len() == 1;
    for c in &s.checks {
        let ok = match c {
            CheckName::DefectTheorem | CheckName::Representation | CheckName::BrownHalmos => true,
            CheckName::ModelSpace => matches!(s.symbol_class, SymbolClass::Inner | SymbolClass::ThetaStar),
            CheckName::AdjointKernel => {
                s.symbol_class == SymbolClass::Raw && s.symbol.as_ref().is_some_and(|x| x.is_analytic() && x.is_diagonal())
            }
            CheckName::ComplementAnalysis => s.symbol_class == SymbolClass::Zero && rank_one,
            CheckName::InnerKernel => s.symbol_class == SymbolClass::Inner && rank_one,
            CheckName::InvertibleKernel => s.symbol_class == SymbolClass::InvertibleFactors && rank_one,
            CheckName::ThetaStarAnalysis => s.symbol_class == SymbolClass::ThetaStar && rank_one,
        };
        if !ok {
            return Err(invalid(format!("check {} does not apply to this scenario", c.as_str())));
        }
    }
    let e = &s.expect;
    let needs = [
        (e.g.is_some() || e.g0.is_some() || e.k_zero.is_some(), CheckName::ComplementAnalysis, "g, g0, k_zero"),
        (e.case.is_some(), CheckName::ThetaStarAnalysis, "case"),
        (e.subcase.is_some(), CheckName::InnerKernel, "subcase"),
        (e.counterexample.is_some(), CheckName::BrownHalmos, "counterexample"),
    ];
    for (used, check, what) in needs {
        if used && !s.checks.contains(&check) {
            return Err(invalid(format!("expectation {what} needs check {}", check.as_str())));
        }
    }
    if e.model_space_dim.is_some() && !matches!(s.symbol_class, SymbolClass::Inner | SymbolClass::ThetaStar) {
        return Err(invalid("model_space_dim expectation needs an inner symbol"));
    }
    for v in e.defect_span.iter().chain(&e.kernel_contains).flatten() {
        fit(v, m, n, "expected vector")?;
    }
    for (v, rows) in [(&e.g, 1usize), (&e.g0, 0)] {
        if let Some(v) = v {
            if rows == 1 && v.m() != 1 {
                return Err(invalid("expected g must be scalar"));
            }
        }
    }
    let tol_rel = ro.tol_rank.or(s.tolerances.rank);
    let opts = VerifyOptions {
        policy: RankPolicy { tol_rel },
        orthonormality: s.orthonormality,
        tol_contain: ro.tol_contain.or(s.tolerances.contain),
    };
    Ok(Prepared {
        scenario: s.clone(),
        phi,
        g,
        h,
        opts,
        seed,
    })
}

fn generate(
    gen: &Generate,
    phi: &LaurentMatrixSymbol,
    m: usize,
    n: usize,
    seed: u64,
) -> Result<(Vec<CoeffVec>, Vec<CoeffVec>), ScenarioError> {
    if gen.degree == 0 || gen.degree + phi.bandwidth() > n {
        return Err(invalid(format!("generate.degree must be in 1..={}", n.saturating_sub(phi.bandwidth()))));
    }
    if gen.rank == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let mut r = rng(seed);
    let out = match gen.kind {
        GenerateKind::RandomOrthonormal => {
            let both = random_orthonormal(&mut r, 2 * gen.rank, m, n, gen.degree).map_err(|e| invalid(e.to_string()))?;
            let (g, h) = both.split_at(gen.rank);
            (g.to_vec(), h.to_vec())
        }
        GenerateKind::PlantedOrthonormal => {
            let p = planted_orthonormal(&mut r, phi, n, gen.rank, gen.degree).map_err(|e| invalid(e.to_string()))?;
            (p.g, p.h)
        }
        GenerateKind::PlantedGOnly => {
            let p = planted_g_only(&mut r, phi, n, gen.rank, gen.degree).map_err(|e| invalid(e.to_string()))?;
            (p.g, p.h)
        }
    };
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
    Inconclusive,
}

impl Status {
    pub fn ok(self) -> bool {
        matches!(self, Self::Pass | Self::Skipped)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Pass => "pass",
            Self::Fail => "fail",
            Self::Skipped => "skipped",
            Self::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_gap: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub subchecks: Vec<SubCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
    pub detail: serde_json::Value,
}

impl CheckOutcome {
    fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            status: Status::Pass,
            sigma_gap: None,
            subchecks: Vec::new(),
            error: None,
            timing_ms: None,
            detail: serde_json::Value::Null,
        }
    }

    fn failed(name: &str, err: impl std::fmt::Display) -> Self {
        Self {
            status: Status::Fail,
            error: Some(err.to_string()),
            ..Self::new(name)
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Environment {
    pub tol_rank: Option<f64>,
    pub tol_contain: Option<f64>,
    pub seed: Option<u64>,
    pub version: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub status: Status,
    pub checks: Vec<CheckOutcome>,
    pub environment: Environment,
}

impl RunReport {
    /// 0 when every check passed or was skipped, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.checks.iter().all(|c| c.status.ok()) { 0 } else { 1 }
    }

    /// Plain-text table derived from the JSON fields.
    pub fn text(&self) -> String {
        let mut out = format!("scenario {}: {}\n", self.scenario, self.status.as_str());
        for c in &self.checks {
            let gap = c
                .sigma_gap
                .map_or(String::from("-"), |g| format!("{:.2e}/{:.2e}", g[0], g[1]));
            out.push_str(&format!("  {:<22} {:<12} sigma_gap {}", c.name, c.status.as_str(), gap));
            if let Some(e) = &c.error {
                out.push_str(&format!("  error: {e}"));
            }
            out.push('\n');
            for s in c.subchecks.iter().filter(|s| !s.passed) {
                out.push_str(&format!("    {} = {:.3e} > {:.1e}\n", s.name, s.value, s.tol));
            }
        }
        out
    }
}

fn status_of(passed: bool, gap_ratio: f64) -> Status {
    if gap_ratio > GAP_RATIO_LIMIT {
        Status::Inconclusive
    } else if passed {
        Status::Pass
    } else {
        Status::Fail
    }
}

struct Ctx<'a> {
    p: &'a Prepared,
    kernel: Option<Subspace>,
    defect: Option<DefectReport>,
    rp: Option<(usize, usize)>,
    case: Option<ThetaStarCase>,
    subcase: Option<String>,
    complement: Option<(CoeffVec, Option<CoeffVec>, f64)>,
    counterexample: Option<bool>,
}

impl Ctx<'_> {
    fn kernel(&mut self) -> crate::Result<Subspace> {
        if self.kernel.is_none() {
            let p = self.p;
            let t = build_perturbed_with(&p.phi, p.n(), &p.g, &p.h, p.opts.orthonormality)?;
            self.kernel = Some(kernel_of(&t, &p.policy()).subspace);
        }
        Ok(self.kernel.clone().expect("set above"))
    }

    fn defect(&mut self) -> crate::Result<DefectReport> {
        if self.defect.is_none() {
            let k = self.kernel()?;
            self.defect = Some(compute_defect(&k, &self.p.policy()));
        }
        Ok(self.defect.clone().expect("set above"))
    }

    fn rp(&mut self) -> crate::Result<(usize, usize)> {
        if self.rp.is_none() {
            let k = self.kernel()?;
            let f = build_frame_auto(&k, &self.p.policy())?;
            self.rp = Some((f.r(), f.p()));
        }
        Ok(self.rp.expect("set above"))
    }
}

fn theorem_outcome(name: &str, tc: &TheoremCheck) -> CheckOutcome {
    let j = tc.json();
    CheckOutcome {
        status: status_of(tc.passed(), tc.report.gap_ratio),
        sigma_gap: Some(tc.report.sigma_gap()),
        subchecks: tc.extra.clone(),
        detail: serde_json::to_value(&j).expect("serializable"),
        ..CheckOutcome::new(name)
    }
}

fn run_check(ctx: &mut Ctx, check: CheckName) -> crate::Result<CheckOutcome> {
    let p = ctx.p;
    let name = check.as_str();
    let (m, n) = (p.m(), p.n());
    let policy = p.policy();
    let s = &p.scenario;
    let out = match check {
        CheckName::DefectTheorem => {
            let tc = match s.symbol_class {
                SymbolClass::Zero => Some(verify_phi_zero(m, n, &p.g, &p.h, &p.opts)?),
                SymbolClass::Inner => Some(verify_inner_symbol(p.symbol(), &p.g, &p.h, n, &p.opts)?),
                SymbolClass::InvertibleFactors => Some(verify_invertible_factors(
                    s.f1.as_ref().expect("validated"),
                    s.f2.as_ref().expect("validated"),
                    &p.g,
                    &p.h,
                    n,
                    &p.opts,
                )?),
                SymbolClass::ThetaStar => Some(verify_theta_star(p.symbol(), &p.g, &p.h, n, &p.opts)?),
                SymbolClass::Raw => None,
            };
            match tc {
                Some(tc) => {
                    ctx.kernel = Some(tc.kernel.clone());
                    ctx.defect = Some(tc.report.clone());
                    theorem_outcome(name, &tc)
                }
                None => {
                    let d = ctx.defect()?;
                    CheckOutcome {
                        status: status_of(true, d.gap_ratio),
                        sigma_gap: Some(d.sigma_gap()),
                        detail: serde_json::to_value(d.json()).expect("serializable"),
                        ..CheckOutcome::new(name)
                    }
                }
            }
        }
        CheckName::Representation => {
            let k = ctx.kernel()?;
            let rep = represent_subspace(&k, &policy, default_depth(n))?;
            ctx.rp = Some((rep.r, rep.p));
            CheckOutcome {
                status: status_of(rep.passed(), k.cut().gap_ratio()),
                sigma_gap: Some(k.cut().sigma_gap()),
                detail: serde_json::to_value(&rep).expect("serializable"),
                ..CheckOutcome::new(name)
            }
        }
        CheckName::ModelSpace => {
            let ms = build_model_space(p.symbol(), n, &policy)?;
            let rep = ms.report();
            let subchecks = vec![
                SubCheck::le("projection_mismatch", rep.projection_mismatch, TOL_MODEL),
                SubCheck::le("orthogonality", rep.orthogonality, TOL_MODEL),
            ];
            CheckOutcome {
                status: status_of(subchecks.iter().all(|c| c.passed), ms.as_subspace().cut().gap_ratio()),
                sigma_gap: Some(ms.as_subspace().cut().sigma_gap()),
                subchecks,
                detail: serde_json::to_value(&rep).expect("serializable"),
                ..CheckOutcome::new(name)
            }
        }
        CheckName::AdjointKernel => {
            let rep = verify_kernel_adjoint(p.symbol(), n, &policy)?;
            CheckOutcome {
                status: status_of(rep.passed(TOL_EQUALITY), rep.gap_ratio),
                sigma_gap: Some(rep.sigma_gap),
                detail: serde_json::to_value(&rep).expect("serializable"),
                ..CheckOutcome::new(name)
            }
        }
        CheckName::ComplementAnalysis => {
            let rep = rank_one_complement_analysis(&p.g[0], &policy)?;
            ctx.rp = Some((rep.representation.r, rep.representation.p));
            ctx.complement = Some((rep.g.clone(), rep.g0.clone(), rep.k_norm_max));
            CheckOutcome {
                status: if rep.passed() { Status::Pass } else { Status::Fail },
                subchecks: rep.checks.clone(),
                detail: serde_json::to_value(&rep).expect("serializable"),
                ..CheckOutcome::new(name)
            }
        }
        CheckName::InnerKernel => {
            let rep = rank_one_inner_kernel(p.symbol(), &p.g[0], &p.h[0], n, &policy)?;
            ctx.subcase = Some(rep.subcase.clone());
            CheckOutcome {
                status: status_of(rep.passed(), rep.gap_ratio),
                sigma_gap: Some(rep.sigma_gap),
                subchecks: rep.checks.clone(),
                detail: serde_json::to_value(&rep).expect("serializable"),
                ..CheckOutcome::new(name)
            }
        }
        CheckName::InvertibleKernel => {
            let rep = rank_one_invertible_kernel(
                s.f1.as_ref().expect("validated"),
                s.f2.as_ref().expect("validated"),
                &p.g[0],
                &p.h[0],
                n,
                &policy,
            )?;
            CheckOutcome {
                status: status_of(rep.passed(), rep.gap_ratio),
                sigma_gap: Some(rep.sigma_gap),
                subchecks: rep.checks.clone(),
                detail: serde_json::to_value(&rep).expect("serializable"),
                ..CheckOutcome::new(name)
            }
        }
        CheckName::ThetaStarAnalysis => {
            let rep = rank_one_theta_star_analysis(p.symbol(), &p.g[0], &p.h[0], n, &policy)?;
            ctx.case = Some(rep.case);
            CheckOutcome {
                status: status_of(rep.passed(), rep.gap_ratio),
                sigma_gap: Some(rep.sigma_gap),
                subchecks: rep.checks.clone(),
                detail: serde_json::to_value(&rep).expect("serializable"),
                ..CheckOutcome::new(name)
            }
        }
        CheckName::BrownHalmos => {
            let psi = s.psi.as_ref().expect("validated");
            let rep = brown_halmos_check(psi, p.symbol(), n)?;
            let counter = s.expect.counterexample == Some(true);
            let (status, subchecks) = if counter {
                let c = vec![
                    SubCheck::le("hypothesis_fails", if rep.hypothesis_met { 1.0 } else { 0.0 }, 0.0),
                    SubCheck::le("product_max", rep.product_max, 1e-12),
                    SubCheck::le("symbol_product_zero", if rep.symbol_product_zero { 0.0 } else { 1.0 }, 0.0),
                ];
                ctx.counterexample = Some(c.iter().all(|x| x.passed));
                (if c.iter().all(|x| x.passed) { Status::Pass } else { Status::Fail }, c)
            } else if rep.hypothesis_met {
                let c = vec![SubCheck::le("deviation", rep.deviation, TOL_BROWN_HALMOS)];
                (if c[0].passed { Status::Pass } else { Status::Fail }, c)
            } else {
                (Status::Skipped, Vec::new())
            };
            CheckOutcome {
                status,
                subchecks,
                detail: serde_json::to_value(&rep).expect("serializable"),
                ..CheckOutcome::new(name)
            }
        }
    };
    Ok(out)
}

fn eq_check(name: &str, got: usize, want: usize) -> SubCheck {
    SubCheck {
        name: format!("{name} (got {got}, want {want})"),
        value: (got as f64 - want as f64).abs(),
        tol: 0.0,
        passed: got == want,
    }
}

fn expectations(ctx: &mut Ctx) -> crate::Result<Vec<SubCheck>> {
    let p = ctx.p;
    let e = &p.scenario.expect;
    let (m, n) = (p.m(), p.n());
    let policy = p.policy();
    let mut out = Vec::new();
    if let Some(want) = e.kernel_dim {
        out.push(eq_check("kernel_dim", ctx.kernel()?.dim(), want));
    }
    if let Some(want) = e.defect_dim {
        out.push(eq_check("defect_dim", ctx.defect()?.defect_dim, want));
    }
    if let Some(vs) = &e.defect_span {
        let k = ctx.kernel()?;
        let d = ctx.defect()?;
        let perp: Vec<CoeffVec> = vs
            .iter()
            .map(|v| {
                let v = v.resized(n);
                Ok(&v - &k.project(&v)?)
            })
            .collect::<crate::Result<_>>()?;
        let span = Subspace::span_of(m, n, &perp, &policy)?;
        let eq = span.equals(&d.defect_basis, f64::INFINITY)?;
        let r = if span.dim() == d.defect_basis.dim() { eq.residual } else { f64::INFINITY };
        out.push(SubCheck::le("defect_span_equality", r, 1e-8));
    }
    if let Some(vs) = &e.kernel_contains {
        let k = ctx.kernel()?;
        let worst = vs
            .iter()
            .map(|v| {
                let v = v.resized(n);
                k.distance(&v.to_dvector()) / v.norm().max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max);
        out.push(SubCheck::le("kernel_contains", worst, TOL_EQUALITY));
    }
    if let Some(want) = e.case {
        let got = ctx.case;
        out.push(SubCheck {
            name: format!("case (got {got:?}, want {want:?})"),
            value: if got == Some(want) { 0.0 } else { 1.0 },
            tol: 0.0,
            passed: got == Some(want),
        });
    }
    if let Some(want) = &e.subcase {
        let got = ctx.subcase.clone().unwrap_or_default();
        out.push(SubCheck {
            name: format!("subcase (got {got}, want {want})"),
            value: if &got == want { 0.0 } else { 1.0 },
            tol: 0.0,
            passed: &got == want,
        });
    }
    if e.r.is_some() || e.p.is_some() {
        let (r, pp) = ctx.rp()?;
        if let Some(want) = e.r {
            out.push(eq_check("r", r, want));
        }
        if let Some(want) = e.p {
            out.push(eq_check("p", pp, want));
        }
    }
    if let Some((g, g0, kmax)) = ctx.complement.clone() {
        if let Some(want) = &e.g {
            out.push(SubCheck::le("g", g.max_abs_diff(&want.resized(n)), 1e-10));
        }
        if let Some(want) = &e.g0 {
            let d = match &g0 {
                Some(g0) if g0.m() == want.m() => g0.max_abs_diff(&want.resized(n)),
                None if want.norm() == 0.0 => 0.0,
                _ => f64::INFINITY,
            };
            out.push(SubCheck::le("g0", d, 1e-10));
        }
        if e.k_zero == Some(true) {
            out.push(SubCheck::le("k_zero", kmax, 1e-8));
        }
    }
    if let Some(want) = e.model_space_dim {
        let ms = build_model_space(p.symbol(), n, &policy)?;
        out.push(eq_check("model_space_dim", ms.dim(), want));
    }
    Ok(out)
}

/// Runs every requested check of a validated scenario.
pub fn run_prepared(p: &Prepared, ro: &RunOptions) -> RunReport {
    let mut ctx = Ctx {
        p,
        kernel: None,
        defect: None,
        rp: None,
        case: None,
        subcase: None,
        complement: None,
        counterexample: None,
    };
    let mut checks = Vec::new();
    for &c in &p.scenario.checks {
        let t0 = Instant::now();
        let mut out = run_check(&mut ctx, c).unwrap_or_else(|e| CheckOutcome::failed(c.as_str(), e));
        if ro.timings {
            out.timing_ms = Some(t0.elapsed().as_secs_f64() * 1e3);
        }
        checks.push(out);
    }
    if !p.scenario.expect.is_empty() {
        let t0 = Instant::now();
        let mut out = match expectations(&mut ctx) {
            Ok(subchecks) => CheckOutcome {
                status: if subchecks.iter().all(|c| c.passed) { Status::Pass } else { Status::Fail },
                subchecks,
                ..CheckOutcome::new("expect")
            },
            Err(e) => CheckOutcome::failed("expect", e),
        };
        if ro.timings {
            out.timing_ms = Some(t0.elapsed().as_secs_f64() * 1e3);
        }
        checks.push(out);
    }
    let status = if checks.iter().all(|c| c.status.ok()) {
        Status::Pass
    } else if checks.iter().any(|c| c.status == Status::Fail) {
        Status::Fail
    } else {
        Status::Inconclusive
    };
    RunReport {
        scenario: p.scenario.name.clone(),
        status,
        checks,
        environment: Environment {
            tol_rank: p.opts.policy.tol_rel,
            tol_contain: p.opts.tol_contain,
            seed: p.seed,
            version: env!("CARGO_PKG_VERSION"),
        },
    }
}

/// Parses, validates and runs one scenario.
pub fn run_scenario(path: &Path, ro: &RunOptions) -> Result<RunReport, ScenarioError> {
    let s = load_scenario(path)?;
    let p = validate(&s, ro)?;
    Ok(run_prepared(&p, ro))
}
