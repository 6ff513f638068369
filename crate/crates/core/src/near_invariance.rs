//! Near backward-shift invariance: defect measurement and defect-space predictions.

use crate::error::{Error, Result};
use crate::hardy::CoeffVec;
use crate::model_space::{build_model_space, decompose_against_theta};
use crate::operators::{build_perturbed_with, build_toeplitz, Orthonormality, PerturbedToeplitz};
use crate::subspace::{Nullspace, RankCut, RankPolicy, Subspace, TOL_CONTAIN};
use crate::symbols::{
    LaurentMatrixSymbol, DEFAULT_GRID, DEFAULT_INNER_TOL, DEFAULT_INVERTIBILITY_MARGIN,
};
use serde::Serialize;

/// Looser containment tolerance for predictions built from series inversion.
pub const TOL_CONTAIN_SERIES: f64 = 1e-6;

/// Computed defect of a subspace, optionally compared against a predicted space.
#[derive(Clone, Debug)]
pub struct DefectReport {
    pub subspace_dim: usize,
    pub slice_dim: usize,
    pub defect_dim: usize,
    pub defect_basis: Subspace,
    pub cut: RankCut,
    /// Worst gap ratio among the kernel, slice and defect rank cuts.
    pub gap_ratio: f64,
    pub orthogonality: f64,
    pub predicted: Option<Subspace>,
    /// Dimension of the span of the predicted vectors themselves.
    pub predicted_dim: Option<usize>,
    pub containment_residual: Option<f64>,
    pub kernel_residual_max: Option<f64>,
}

/// Serialized form of [`DefectReport`].
#[derive(Clone, Debug, Serialize)]
pub struct DefectReportJson {
    pub subspace_dim: usize,
    pub slice_dim: usize,
    pub defect_dim: usize,
    pub sigma_gap: [f64; 2],
    pub containment_residual: Option<f64>,
    pub predicted_dim: Option<usize>,
    pub kernel_residual_max: Option<f64>,
    pub gap_ratio: f64,
    pub inconclusive: bool,
}

impl DefectReport {
    pub fn sigma_gap(&self) -> [f64; 2] {
        self.cut.sigma_gap()
    }

    pub fn inconclusive(&self) -> bool {
        self.gap_ratio > crate::subspace::GAP_RATIO_LIMIT
    }

    pub fn json(&self) -> DefectReportJson {
        DefectReportJson {
            subspace_dim: self.subspace_dim,
            slice_dim: self.slice_dim,
            defect_dim: self.defect_dim,
            sigma_gap: self.sigma_gap(),
            containment_residual: self.containment_residual,
            predicted_dim: self.predicted_dim,
            kernel_residual_max: self.kernel_residual_max,
            gap_ratio: self.gap_ratio,
            inconclusive: self.inconclusive(),
        }
    }
}

/// Smallest `F` with `S*F ∈ M ⊕ F` for every `F ∈ M` vanishing at the origin.
pub fn compute_defect(m: &Subspace, policy: &RankPolicy) -> DefectReport {
    let slice = m.zero_at_origin_slice(policy);
    let (mm, n) = (m.m(), m.n());
    let residuals: Vec<CoeffVec> = slice
        .vectors()
        .iter()
        .map(|f| {
            let s = f.backward_shift();
            let p = m.project(&s).expect("shared shape");
            &s - &p
        })
        .collect();
    let defect_basis = if residuals.is_empty() {
        Subspace::zero(mm, n)
    } else {
        Subspace::span_of(mm, n, &residuals, policy).expect("shared shape")
    };
    let cut = defect_basis.cut();
    let gap_ratio = [m.cut(), slice.cut(), cut]
        .iter()
        .map(RankCut::gap_ratio)
        .fold(0.0, f64::max);
    DefectReport {
        subspace_dim: m.dim(),
        slice_dim: slice.dim(),
        defect_dim: defect_basis.dim(),
        orthogonality: defect_basis.max_cross_inner(m),
        defect_basis,
        cut,
        gap_ratio,
        predicted: None,
        predicted_dim: None,
        containment_residual: None,
        kernel_residual_max: None,
    }
}

/// Compares the computed defect with `span(predicted)`.
///
/// The defect is orthogonal to `M`, so it is tested against the part of the
/// predicted span orthogonal to `M`; this is `S*F ∈ M + span(predicted)`.
pub fn attach_prediction(
    report: &mut DefectReport,
    m: &Subspace,
    predicted: &[CoeffVec],
    policy: &RankPolicy,
) -> Result<()> {
    let (mm, n) = (m.m(), m.n());
    let raw = Subspace::span_of(mm, n, predicted, policy)?;
    let perp: Vec<CoeffVec> = raw
        .vectors()
        .iter()
        .map(|v| Ok(v - &m.project(v)?))
        .collect::<Result<_>>()?;
    let effective = if perp.is_empty() {
        Subspace::zero(mm, n)
    } else {
        Subspace::span_of(mm, n, &perp, policy)?
    };
    let c = report.defect_basis.is_contained_in(&effective, f64::INFINITY)?;
    report.predicted_dim = Some(raw.dim());
    report.predicted = Some(raw);
    report.containment_residual = Some(c.residual);
    Ok(())
}

/// Exact kernel among polynomials of degree `< N`.
pub fn kernel_of(t: &PerturbedToeplitz, policy: &RankPolicy) -> Nullspace {
    Subspace::nullspace(t.m(), t.n(), &t.kernel_matrix(), policy)
}

/// Options shared by the theorem verifiers.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct VerifyOptions {
    pub policy: RankPolicy,
    pub orthonormality: Orthonormality,
    /// `None` picks the theorem's default tolerance.
    pub tol_contain: Option<f64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            policy: RankPolicy::default(),
            orthonormality: Orthonormality::Both,
            tol_contain: None,
        }
    }
}

/// A named numeric sub-check.
#[derive(Clone, Debug, Serialize)]
pub struct SubCheck {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub passed: bool,
}

impl SubCheck {
    pub fn le(name: &str, value: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tol,
            passed: value <= tol,
        }
    }
}

/// Outcome of verifying one defect-space theorem on one scenario.
#[derive(Clone, Debug)]
pub struct TheoremCheck {
    pub theorem: &'static str,
    pub kernel: Subspace,
    pub report: DefectReport,
    pub bound: usize,
    pub tol_contain: f64,
    pub extra: Vec<SubCheck>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoremCheckJson {
    pub theorem: &'static str,
    pub kernel_dim: usize,
    pub bound: usize,
    pub within_bound: bool,
    pub contained: bool,
    pub tol_contain: f64,
    pub defect: DefectReportJson,
    pub extra: Vec<SubCheck>,
    pub passed: bool,
}

impl TheoremCheck {
    pub fn within_bound(&self) -> bool {
        self.report.defect_dim <= self.bound
    }

    pub fn contained(&self) -> bool {
        self.report
            .containment_residual
            .is_some_and(|r| r <= self.tol_contain)
    }

    pub fn inconclusive(&self) -> bool {
        self.report.inconclusive()
    }

    pub fn passed(&self) -> bool {
        self.within_bound()
            && self.contained()
            && !self.inconclusive()
            && self.extra.iter().all(|c| c.passed)
    }

    pub fn json(&self) -> TheoremCheckJson {
        TheoremCheckJson {
            theorem: self.theorem,
            kernel_dim: self.kernel.dim(),
            bound: self.bound,
            within_bound: self.within_bound(),
            contained: self.contained(),
            tol_contain: self.tol_contain,
            defect: self.report.json(),
            extra: self.extra.clone(),
            passed: self.passed(),
        }
    }
}

fn run(
    theorem: &'static str,
    t: &PerturbedToeplitz,
    predicted: &[CoeffVec],
    bound: usize,
    tol_contain: f64,
    opts: &VerifyOptions,
) -> Result<TheoremCheck> {
    let ns = kernel_of(t, &opts.policy);
    let mut report = compute_defect(&ns.subspace, &opts.policy);
    report.kernel_residual_max = Some(ns.max_residual());
    attach_prediction(&mut report, &ns.subspace, predicted, &opts.policy)?;
    let audit = 10.0 * ns.subspace.tol().max(f64::EPSILON);
    let extra = vec![SubCheck::le("kernel_residual_audit", ns.max_residual(), audit)];
    Ok(TheoremCheck {
        theorem,
        kernel: ns.subspace,
        report,
        bound,
        tol_contain,
        extra,
    })
}

fn max_diff(a: &[CoeffVec], b: &[CoeffVec]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.max_abs_diff(y))
        .fold(0.0, f64::max)
}

fn span_equality(a: &[CoeffVec], b: &[CoeffVec], m: usize, n: usize, policy: &RankPolicy) -> Result<f64> {
    let sa = Subspace::span_of(m, n, a, policy)?;
    let sb = Subspace::span_of(m, n, b, policy)?;
    let e = sa.equals(&sb, f64::INFINITY)?;
    Ok(if sa.dim() == sb.dim() { e.residual } else { f64::INFINITY })
}

fn shape_of(g: &[CoeffVec], m: usize, n: usize) -> Result<()> {
    for v in g {
        if v.m() != m || v.n() != n {
            return Err(Error::ShapeMismatch {
                m,
                n,
                got_m: v.m(),
                got_n: v.n(),
            });
        }
    }
    Ok(())
}

/// `Φ = 0`: the defect lies in `span{G_i}`.
pub fn verify_phi_zero(
    m: usize,
    n: usize,
    g: &[CoeffVec],
    h: &[CoeffVec],
    opts: &VerifyOptions,
) -> Result<TheoremCheck> {
    shape_of(g, m, n)?;
    let zero = LaurentMatrixSymbol::zero(m);
    let t = build_perturbed_with(&zero, n, g, h, opts.orthonormality)?;
    let mut chk = run("phi_zero", &t, g, g.len(), opts.tol_contain.unwrap_or(TOL_CONTAIN), opts)?;
    let hspan = Subspace::span_of(m, n, h, &opts.policy)?;
    if hspan.dim() == h.len() {
        let expect = Subspace::span_of(m, n, g, &opts.policy)?.complement();
        let e = chk.kernel.equals(&expect, f64::INFINITY)?;
        let r = if chk.kernel.dim() == expect.dim() { e.residual } else { f64::INFINITY };
        chk.extra.push(SubCheck::le("kernel_is_complement_of_g", r, TOL_CONTAIN));
    }
    Ok(chk)
}

/// `Φ = Θ` inner: the defect lies in `span{S*(T_{Θ*} H_i)}`.
pub fn verify_inner_symbol(
    theta: &LaurentMatrixSymbol,
    g: &[CoeffVec],
    h: &[CoeffVec],
    n: usize,
    opts: &VerifyOptions,
) -> Result<TheoremCheck> {
    let chk = theta.is_inner(DEFAULT_GRID, DEFAULT_INNER_TOL);
    if !theta.is_analytic() || !chk.inner {
        return Err(Error::NotInner(chk.deviation));
    }
    let m = theta.m();
    shape_of(h, m, n)?;
    let star = theta.adjoint();
    let predicted: Vec<CoeffVec> = h
        .iter()
        .map(|hi| Ok(star.apply(hi, n)?.backward_shift()))
        .collect::<Result<_>>()?;
    let alternate: Vec<CoeffVec> = h
        .iter()
        .map(|hi| star.apply(&hi.backward_shift(), n))
        .collect::<Result<_>>()?;
    let t = build_perturbed_with(theta, n, g, h, opts.orthonormality)?;
    let mut out = run("inner_symbol", &t, &predicted, g.len(), opts.tol_contain.unwrap_or(TOL_CONTAIN_SERIES), opts)?;
    out.extra.push(SubCheck::le("alternate_form", max_diff(&predicted, &alternate), 1e-12));
    Ok(out)
}

/// Solves `Φ V = U` for analytic `Φ` by forward substitution on Taylor coefficients.
pub(crate) fn divide_analytic(phi: &LaurentMatrixSymbol, u: &CoeffVec) -> Result<CoeffVec> {
    let m = phi.m();
    let a0 = phi.coeff(0).try_inverse().ok_or(Error::SingularConstantTerm)?;
    let d = phi.max_power();
    let mut v = CoeffVec::zeros(m, u.n());
    for j in 0..u.n() {
        let mut rhs = nalgebra::DVector::from_iterator(m, (0..m).map(|i| u.get(i, j)));
        for t in 1..=j.min(d) {
            if let Some(at) = phi.coeff_ref(t as i64) {
                let prev = nalgebra::DVector::from_iterator(m, (0..m).map(|i| v.get(i, j - t)));
                rhs -= at * prev;
            }
        }
        let x = &a0 * rhs;
        for i in 0..m {
            v.set(i, j, x[i]);
        }
    }
    Ok(v)
}

/// Solves `T_{Ψ} X = H` for co-analytic `Ψ` on degrees `< N`.
pub(crate) fn solve_coanalytic(psi: &LaurentMatrixSymbol, h: &CoeffVec) -> Result<CoeffVec> {
    let t = build_toeplitz(psi, h.n())?;
    let lu = t.matrix().clone().lu();
    let x = lu.solve(&h.to_dvector()).ok_or(Error::SingularConstantTerm)?;
    Ok(CoeffVec::from_dvector(h.m(), h.n(), &x))
}

/// `Φ = F₁* F₂` with invertible analytic factors: the defect lies in
/// `span{F₂^{-1} T_{F₁*^{-1}} S* H_i}`.
pub fn verify_invertible_factors(
    f1: &LaurentMatrixSymbol,
    f2: &LaurentMatrixSymbol,
    g: &[CoeffVec],
    h: &[CoeffVec],
    n: usize,
    opts: &VerifyOptions,
) -> Result<TheoremCheck> {
    for f in [f1, f2] {
        let c = f.is_invertible_analytic(256, DEFAULT_INVERTIBILITY_MARGIN)?;
        if !c.invertible {
            return Err(Error::NotInvertible(c.min_abs_det));
        }
    }
    let m = f1.m();
    shape_of(h, m, n)?;
    let phi = f1.adjoint().multiply(f2)?;
    let f1_inv_star = f1.invert_analytic(n)?.inverse.adjoint();
    let f2_inv = f2.invert_analytic(n)?.inverse;
    let predicted: Vec<CoeffVec> = h
        .iter()
        .map(|hi| f2_inv.apply(&f1_inv_star.apply(&hi.backward_shift(), n)?, n))
        .collect::<Result<_>>()?;
    let alternate: Vec<CoeffVec> = h
        .iter()
        .map(|hi| f2_inv.apply(&f1_inv_star.apply(hi, n)?.backward_shift(), n))
        .collect::<Result<_>>()?;
    let t = build_perturbed_with(&phi, n, g, h, opts.orthonormality)?;
    let mut out = run(
        "invertible_factors",
        &t,
        &predicted,
        g.len(),
        opts.tol_contain.unwrap_or(TOL_CONTAIN_SERIES),
        opts,
    )?;
    out.extra.push(SubCheck::le("alternate_form", max_diff(&predicted, &alternate), 1e-10));
    let id = LaurentMatrixSymbol::identity(m);
    if *f1 == id {
        // Φ analytic invertible: T_{Φ^{-1}} S* H_i, and the quotient S*H / Φ
        let quotient: Vec<CoeffVec> = h
            .iter()
            .map(|hi| divide_analytic(f2, &hi.backward_shift()))
            .collect::<Result<_>>()?;
        out.extra.push(SubCheck::le("analytic_inverse_form", max_diff(&predicted, &quotient), 1e-10));
        out.extra.push(SubCheck::le(
            "quotient_span",
            span_equality(&predicted, &quotient, m, n, &opts.policy)?,
            TOL_CONTAIN,
        ));
    }
    if *f2 == id {
        // Φ* analytic invertible: S*(T_{Φ^{-1}} H_i)
        let solved: Vec<CoeffVec> = h
            .iter()
            .map(|hi| Ok(solve_coanalytic(&phi, hi)?.backward_shift()))
            .collect::<Result<_>>()?;
        out.extra.push(SubCheck::le("coanalytic_inverse_form", max_diff(&predicted, &solved), 1e-10));
    }
    Ok(out)
}

/// `Φ = Θ*`: the defect lies in `span{Θ S* H_i} ∪ {P_{K_Θ} G_j : G_j ∉ ΘH²}`.
pub fn verify_theta_star(
    theta: &LaurentMatrixSymbol,
    g: &[CoeffVec],
    h: &[CoeffVec],
    n: usize,
    opts: &VerifyOptions,
) -> Result<TheoremCheck> {
    let ms = build_model_space(theta, n, &opts.policy)?;
    let m = theta.m();
    shape_of(g, m, n)?;
    shape_of(h, m, n)?;
    let mut predicted: Vec<CoeffVec> = h
        .iter()
        .map(|hi| theta.apply(&hi.backward_shift(), n))
        .collect::<Result<_>>()?;
    let mut l = 0;
    for gj in g {
        let dec = decompose_against_theta(gj, &ms)?;
        if !dec.in_range {
            l += 1;
            predicted.push(dec.g_zeta);
        }
    }
    let t = build_perturbed_with(&theta.adjoint(), n, g, h, opts.orthonormality)?;
    let mut out = run(
        "theta_star",
        &t,
        &predicted,
        g.len() + l,
        opts.tol_contain.unwrap_or(TOL_CONTAIN),
        opts,
    )?;
    out.extra.push(SubCheck::le("l_count", l as f64, g.len() as f64));
    Ok(out)
}
