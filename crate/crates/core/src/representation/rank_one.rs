//! Rank-one perturbations: explicit kernels and coordinates.

use super::{
    build_frame, build_frame_auto, default_depth, extract_coordinates, summarize, Coordinates,
    RepresentationFrame, RepresentationReport,
};
use crate::error::{Error, Result};
use crate::hardy::CoeffVec;
use crate::model_space::{build_model_space, decompose_against_theta};
use crate::near_invariance::{compute_defect, divide_analytic, kernel_of, solve_coanalytic, SubCheck};
use crate::operators::{build_perturbed_with, Orthonormality};
use crate::subspace::{RankPolicy, Subspace, TOL_CONTAIN};
use crate::symbols::{LaurentMatrixSymbol, DEFAULT_GRID, DEFAULT_INNER_TOL, DEFAULT_INVERTIBILITY_MARGIN};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Unit-norm tolerance for `G`.
pub const TOL_UNIT: f64 = 1e-8;
/// `|criterion| ≤ TOL_CRITERION` selects the nontrivial-kernel branch.
pub const TOL_CRITERION: f64 = 1e-8;
/// Subspace equality tolerance against the dense kernel.
pub const TOL_EQUALITY: f64 = 1e-6;
const MAX_SAMPLES: usize = 24;

fn check_unit(g: &CoeffVec) -> Result<()> {
    let dev = (g.norm() - 1.0).abs();
    if dev > TOL_UNIT {
        return Err(Error::Hypothesis(format!("‖G‖ = 1 required (deviation {dev:.3e})")));
    }
    Ok(())
}

fn check_shift_nonzero(h: &CoeffVec) -> Result<()> {
    if h.backward_shift().norm() <= TOL_UNIT * h.norm().max(1.0) {
        return Err(Error::Hypothesis("S*H = 0".into()));
    }
    Ok(())
}

fn check_inner(theta: &LaurentMatrixSymbol) -> Result<()> {
    if !theta.is_analytic() {
        return Err(Error::NotAnalytic);
    }
    let c = theta.is_inner(DEFAULT_GRID, DEFAULT_INNER_TOL);
    if !c.inner {
        return Err(Error::NotInner(c.deviation));
    }
    Ok(())
}

fn check_shape(v: &CoeffVec, m: usize, n: usize) -> Result<()> {
    if v.m() != m || v.n() != n {
        return Err(Error::ShapeMismatch {
            m,
            n,
            got_m: v.m(),
            got_n: v.n(),
        });
    }
    Ok(())
}

/// `Σ_{i,j} a_i[j + s] · conj(b_i[j])`, that is `⟨a, z^s b⟩`.
pub(crate) fn shifted_ip(a: &CoeffVec, b: &CoeffVec, s: usize) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..b.n() {
        if j + s >= a.n() {
            break;
        }
        for i in 0..a.m().min(b.m()) {
            acc += a.get(i, j + s) * b.get(i, j).conj();
        }
    }
    acc
}

/// Coefficients of `P(z̄^s Σ_t a_t conj(b_t))` for two vector functions.
fn cross_projection(a: &CoeffVec, b: &CoeffVec, s: usize, out_n: usize) -> CoeffVec {
    CoeffVec::from_fn(1, out_n, |_, k| shifted_ip(a, b, k + s))
}

fn sample_members(m: &Subspace) -> Vec<CoeffVec> {
    let vs = m.vectors();
    if vs.len() <= MAX_SAMPLES {
        return vs;
    }
    let step = vs.len() as f64 / MAX_SAMPLES as f64;
    (0..MAX_SAMPLES).map(|k| vs[(k as f64 * step) as usize].clone()).collect()
}

fn coords_of(frame: &RepresentationFrame, samples: &[CoeffVec]) -> Result<Vec<Coordinates>> {
    samples.iter().map(|f| extract_coordinates(f, frame)).collect()
}

/// Analysis of `M = H² ⊖ ⟨G⟩`.
#[derive(Clone, Debug, Serialize)]
pub struct ComplementReport {
    pub r: usize,
    /// Columns of `F₀`.
    pub w: Vec<CoeffVec>,
    /// `P(F₀^* G)`, one row per column of `F₀`.
    pub g0: Option<CoeffVec>,
    /// `P(z̄|G|²)`.
    pub g: CoeffVec,
    pub kernel_equality: f64,
    /// Largest `|⟨K₀, z^n G₀⟩ + ⟨k₁, z^n g⟩| / ‖F‖` per `n`.
    pub membership_residuals: Vec<f64>,
    /// Largest `‖k₁‖ / ‖F‖` over the sampled members.
    pub k_norm_max: f64,
    pub representation: RepresentationReport,
    pub checks: Vec<SubCheck>,
}

impl ComplementReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed) && self.representation.passed()
    }
}

/// `Φ = 0` with the single unit vector `G`: builds `F₀`, `G₀`, `g` and checks the coordinate constraint.
pub fn rank_one_complement_analysis(g: &CoeffVec, policy: &RankPolicy) -> Result<ComplementReport> {
    check_unit(g)?;
    let (mm, n) = (g.m(), g.n());
    let gspan = Subspace::span_of(mm, n, std::slice::from_ref(g), policy)?;
    let m = gspan.complement();
    let t = build_perturbed_with(
        &LaurentMatrixSymbol::zero(mm),
        n,
        std::slice::from_ref(g),
        std::slice::from_ref(g),
        Orthonormality::GOnly,
    )?;
    let ker = kernel_of(&t, policy);
    let kernel_equality = m.equals(&ker.subspace, f64::INFINITY)?.residual;
    let frame = build_frame(&m, &gspan, policy)?;
    let r = frame.r();
    let g0 = (r > 0).then(|| {
        let rows: Vec<Vec<C64>> = frame
            .w()
            .iter()
            .map(|w| cross_projection(g, w, 0, n).component(0))
            .collect();
        CoeffVec::from_components(&rows, n).expect("rows share length")
    });
    let gfun = cross_projection(g, g, 1, n);
    // The frame's E₁ is G up to a unimodular factor; the constraint uses E₁ itself.
    let e1 = &frame.e()[0];
    let g0_e: Vec<CoeffVec> = frame.w().iter().map(|w| cross_projection(e1, w, 0, n)).collect();
    let g_e = cross_projection(e1, e1, 1, n);
    let samples = sample_members(&m);
    let coords = coords_of(&frame, &samples)?;
    let depth = default_depth(n);
    let membership_residuals = (0..=depth)
        .map(|s| {
            coords
                .iter()
                .map(|c| {
                    let mut v = shifted_ip(&c.k[0], &g_e, s);
                    if let Some(k0) = &c.k0 {
                        for (i, g0i) in g0_e.iter().enumerate() {
                            let row = CoeffVec::from_components(&[k0.component(i)], k0.n()).expect("row");
                            v += shifted_ip(&row, g0i, s);
                        }
                    }
                    v.norm() / c.source_norm
                })
                .fold(0.0, f64::max)
        })
        .collect::<Vec<_>>();
    let k_norm_max = coords.iter().map(|c| c.k[0].norm() / c.source_norm).fold(0.0, f64::max);
    let representation = summarize(&frame, &coords, depth, "complement");
    let checks = vec![
        SubCheck::le("kernel_equality", kernel_equality, TOL_EQUALITY),
        SubCheck::le(
            "membership_constraint",
            membership_residuals.iter().copied().fold(0.0, f64::max),
            TOL_EQUALITY,
        ),
    ];
    Ok(ComplementReport {
        r,
        w: frame.w().to_vec(),
        g0,
        g: gfun,
        kernel_equality,
        membership_residuals,
        k_norm_max,
        representation,
        checks,
    })
}

/// Analysis of `T_Θ + ⟨·, G⟩H` with inner `Θ`.
#[derive(Clone, Debug, Serialize)]
pub struct InnerKernelReport {
    #[serde(with = "crate::json::c64_pair")]
    pub criterion: C64,
    pub h_in_theta_range: bool,
    pub predicted_dim: usize,
    pub kernel_dim: usize,
    pub equality_residual: f64,
    pub sigma_gap: [f64; 2],
    pub gap_ratio: f64,
    /// `"trivial"`, `"a0_nonzero"` or `"a0_zero"`.
    pub subcase: String,
    /// `‖S*K₀‖ / ‖F‖` in the `a0_nonzero` subcase: `K₀` is constant and there is no `k`.
    pub coordinate_residual: Option<f64>,
    pub representation: Option<RepresentationReport>,
    pub checks: Vec<SubCheck>,
}

impl InnerKernelReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed) && self.representation.as_ref().map_or(true, |r| r.passed())
    }
}

/// Kernel of `T_Θ + ⟨·, G⟩H`: `span{T_{Θ*}H}` when `1 + ⟨T_{Θ*}H, G⟩ = 0` and `H ∈ ΘH²`, else `{0}`.
pub fn rank_one_inner_kernel(
    theta: &LaurentMatrixSymbol,
    g: &CoeffVec,
    h: &CoeffVec,
    n: usize,
    policy: &RankPolicy,
) -> Result<InnerKernelReport> {
    check_inner(theta)?;
    let mm = theta.m();
    check_shape(g, mm, n)?;
    check_shape(h, mm, n)?;
    check_unit(g)?;
    check_shift_nonzero(h)?;
    let ms = build_model_space(theta, n, policy)?;
    let v = theta.adjoint().apply(h, n)?;
    let criterion = C64::new(1.0, 0.0) + v.inner_product(g)?;
    let h_in_theta_range = decompose_against_theta(h, &ms)?.in_range;
    let nontrivial = criterion.norm() <= TOL_CRITERION && h_in_theta_range && v.norm() > 0.0;
    let predicted = if nontrivial {
        Subspace::span_of(mm, n, std::slice::from_ref(&v), policy)?
    } else {
        Subspace::zero(mm, n)
    };
    let t = build_perturbed_with(theta, n, std::slice::from_ref(g), std::slice::from_ref(h), Orthonormality::GOnly)?;
    let ker = kernel_of(&t, policy);
    let eq = predicted.equals(&ker.subspace, TOL_EQUALITY)?;
    let equality_residual = if predicted.dim() == ker.subspace.dim() { eq.residual } else { f64::INFINITY };
    let mut checks = vec![SubCheck::le("kernel_equality", equality_residual, TOL_EQUALITY)];
    let a0 = v.eval_at_zero().iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let (subcase, coordinate_residual, representation) = if !nontrivial {
        ("trivial".to_string(), None, None)
    } else {
        let frame = build_frame_auto(&predicted, policy)?;
        let co = extract_coordinates(&v, &frame)?;
        let rep = summarize(&frame, std::slice::from_ref(&co), default_depth(n), "inner_kernel");
        if a0 > TOL_UNIT * v.norm() {
            let res = co.k0.as_ref().map_or(f64::INFINITY, |k0| k0.backward_shift().norm() / co.source_norm);
            let res = res + co.k.iter().map(CoeffVec::norm).sum::<f64>() / co.source_norm;
            checks.push(SubCheck::le("k0_constant_k_zero", res, TOL_EQUALITY));
            ("a0_nonzero".to_string(), Some(res), Some(rep))
        } else {
            let sv = v.backward_shift();
            let res = (&v - &sv.shift_by(1)).norm() / v.norm();
            checks.push(SubCheck::le("shift_frame_identity", res, TOL_EQUALITY));
            checks.push(SubCheck::le("no_w_part", frame.r() as f64, 0.0));
            ("a0_zero".to_string(), Some(res), Some(rep))
        }
    };
    Ok(InnerKernelReport {
        criterion,
        h_in_theta_range,
        predicted_dim: predicted.dim(),
        kernel_dim: ker.subspace.dim(),
        equality_residual,
        sigma_gap: ker.subspace.cut().sigma_gap(),
        gap_ratio: ker.subspace.cut().gap_ratio(),
        subcase,
        coordinate_residual,
        representation,
        checks,
    })
}

/// Analysis of `T_{F₁* F₂} + ⟨·, G⟩H` with invertible analytic factors.
#[derive(Clone, Debug, Serialize)]
pub struct InvertibleKernelReport {
    pub candidate: CoeffVec,
    #[serde(with = "crate::json::c64_pair")]
    pub criterion: C64,
    /// Largest coefficient difference between the two computation orders.
    pub order_cross_check: f64,
    pub inversion_residual: f64,
    pub predicted_dim: usize,
    pub kernel_dim: usize,
    pub equality_residual: f64,
    pub sigma_gap: [f64; 2],
    pub gap_ratio: f64,
    pub checks: Vec<SubCheck>,
}

impl InvertibleKernelReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Kernel of `T_{F₁* F₂} + ⟨·, G⟩H`: `span{V}` with `V = F₂^{-1} T_{F₁*^{-1}} H` when `1 + ⟨V, G⟩ = 0`.
pub fn rank_one_invertible_kernel(
    f1: &LaurentMatrixSymbol,
    f2: &LaurentMatrixSymbol,
    g: &CoeffVec,
    h: &CoeffVec,
    n: usize,
    policy: &RankPolicy,
) -> Result<InvertibleKernelReport> {
    for f in [f1, f2] {
        let c = f.is_invertible_analytic(256, DEFAULT_INVERTIBILITY_MARGIN)?;
        if !c.invertible {
            return Err(Error::NotInvertible(c.min_abs_det));
        }
    }
    let mm = f1.m();
    check_shape(g, mm, n)?;
    check_shape(h, mm, n)?;
    check_unit(g)?;
    let inv1 = f1.invert_analytic(n)?;
    let inv2 = f2.invert_analytic(n)?;
    let a = inv1.inverse.adjoint().apply(h, n)?;
    let candidate = inv2.inverse.apply(&a, n)?;
    let a_alt = solve_coanalytic(&f1.adjoint(), h)?;
    let v_alt = divide_analytic(f2, &a_alt)?;
    let order_cross_check = candidate.max_abs_diff(&v_alt);
    let criterion = C64::new(1.0, 0.0) + candidate.inner_product(g)?;
    let predicted = if criterion.norm() <= TOL_CRITERION {
        Subspace::span_of(mm, n, std::slice::from_ref(&candidate), policy)?
    } else {
        Subspace::zero(mm, n)
    };
    let phi = f1.adjoint().multiply(f2)?;
    let t = build_perturbed_with(&phi, n, std::slice::from_ref(g), std::slice::from_ref(h), Orthonormality::GOnly)?;
    let ker = kernel_of(&t, policy);
    let eq = predicted.equals(&ker.subspace, TOL_EQUALITY)?;
    let equality_residual = if predicted.dim() == ker.subspace.dim() { eq.residual } else { f64::INFINITY };
    let scale = candidate.norm().max(1.0);
    let checks = vec![
        SubCheck::le("order_cross_check", order_cross_check / scale, 1e-10),
        SubCheck::le("kernel_equality", equality_residual, TOL_EQUALITY),
    ];
    Ok(InvertibleKernelReport {
        candidate,
        criterion,
        order_cross_check,
        inversion_residual: inv1.residual.max(inv2.residual),
        predicted_dim: predicted.dim(),
        kernel_dim: ker.subspace.dim(),
        equality_residual,
        sigma_gap: ker.subspace.cut().sigma_gap(),
        gap_ratio: ker.subspace.cut().gap_ratio(),
        checks,
    })
}

/// Which of the four `Φ = Θ*` cases applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaStarCase {
    /// `G ∈ ΘH²`, `v_Θ = 0`: `M = K_Θ ⊕ ⟨ΘH⟩`.
    InRangeCritical,
    /// `G ∈ ΘH²`, `v_Θ ≠ 0`: `M = K_Θ`.
    InRangeRegular,
    /// `G ∉ ΘH²`, `v_Θ = 0`: `M = N ⊖ ⟨G_ζ⟩`.
    OutsideCritical,
    /// `G ∉ ΘH²`, `v_Θ ≠ 0`: `M = N ⊖ ⟨G_ζ + (v̄_Θ/‖H‖²) ΘH⟩`.
    OutsideRegular,
}

/// Analysis of `T_{Θ*} + ⟨·, G⟩H`.
#[derive(Clone, Debug, Serialize)]
pub struct ThetaStarReport {
    pub case: ThetaStarCase,
    #[serde(with = "crate::json::c64_pair")]
    pub v_theta: C64,
    pub g_zeta_norm: f64,
    pub model_space_dim: usize,
    pub predicted_dim: usize,
    pub kernel_dim: usize,
    pub equality_residual: f64,
    pub sigma_gap: [f64; 2],
    pub gap_ratio: f64,
    /// Largest `‖formula − P_M(k₀⊗e_i)‖` for the explicit projection.
    pub projection_formula_residual: f64,
    /// Containment of the computed defect in `span{ΘS*H, G_ζ}` modulo `M`.
    pub defect_containment: f64,
    pub defect_dim: usize,
    pub representation: RepresentationReport,
    pub checks: Vec<SubCheck>,
}

impl ThetaStarReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed) && self.representation.passed()
    }
}

/// Kernel of `T_{Θ*} + ⟨·, G⟩H` by the four-way dispatch on `G ∈ ΘH²` and `v_Θ = 1 + ⟨ΘH, G_Θ⟩`.
pub fn rank_one_theta_star_analysis(
    theta: &LaurentMatrixSymbol,
    g: &CoeffVec,
    h: &CoeffVec,
    n: usize,
    policy: &RankPolicy,
) -> Result<ThetaStarReport> {
    check_inner(theta)?;
    let mm = theta.m();
    check_shape(g, mm, n)?;
    check_shape(h, mm, n)?;
    check_unit(g)?;
    check_shift_nonzero(h)?;
    let ms = build_model_space(theta, n, policy)?;
    let d = theta.max_power();
    let th_full = theta.apply(h, n + d)?;
    let th = th_full.resized(n);
    if (th_full.norm_sq() - th.norm_sq()).abs() > TOL_UNIT * th_full.norm_sq() {
        return Err(Error::Hypothesis(format!("ΘH needs degree < N = {n}")));
    }
    let dec = decompose_against_theta(g, &ms)?;
    let v_theta = C64::new(1.0, 0.0) + th.inner_product(&dec.g_theta)?;
    let critical = v_theta.norm() <= TOL_CRITERION;
    let case = match (dec.in_range, critical) {
        (true, true) => ThetaStarCase::InRangeCritical,
        (true, false) => ThetaStarCase::InRangeRegular,
        (false, true) => ThetaStarCase::OutsideCritical,
        (false, false) => ThetaStarCase::OutsideRegular,
    };
    let k = ms.as_subspace();
    let th_span = Subspace::span_of(mm, n, std::slice::from_ref(&th), policy)?;
    let big_n = k.sum(&th_span, policy)?;
    let hn2 = h.norm_sq();
    let rho = v_theta.conj() / hn2;
    let r_vec = match case {
        ThetaStarCase::OutsideCritical => Some(dec.g_zeta.clone()),
        ThetaStarCase::OutsideRegular => {
            let mut r = dec.g_zeta.clone();
            r.axpy(rho, &th);
            Some(r)
        }
        _ => None,
    };
    let predicted = match case {
        ThetaStarCase::InRangeCritical => big_n.clone(),
        ThetaStarCase::InRangeRegular => k.clone(),
        _ => {
            let r = r_vec.as_ref().expect("outside cases carry R");
            let rs = Subspace::span_of(mm, n, std::slice::from_ref(r), policy)?;
            big_n.ortho_complement_within(&rs)?
        }
    };
    let t = build_perturbed_with(
        &theta.adjoint(),
        n,
        std::slice::from_ref(g),
        std::slice::from_ref(h),
        Orthonormality::GOnly,
    )?;
    let ker = kernel_of(&t, policy);
    let eq = predicted.equals(&ker.subspace, TOL_EQUALITY)?;
    let equality_residual = if predicted.dim() == ker.subspace.dim() { eq.residual } else { f64::INFINITY };

    let theta0_star = theta.coeff(0).adjoint();
    let th_n2 = th.norm_sq();
    let mut projection_formula_residual: f64 = 0.0;
    for i in 0..mm {
        let e = CoeffVec::k0(mm, n, i);
        let col = CoeffVec::from_fn(mm, 1, |r, _| theta0_star[(r, i)]);
        let mut p = &e - &theta.apply(&col, n)?;
        if case != ThetaStarCase::InRangeRegular {
            p.axpy(e.inner_product(&th)? / th_n2, &th);
        }
        if let Some(r) = &r_vec {
            p.axpy(-(e.inner_product(r)? / r.norm_sq()), r);
        }
        let truth = ker.subspace.project(&e)?;
        projection_formula_residual = projection_formula_residual.max((&p - &truth).norm());
    }

    let defect = compute_defect(&ker.subspace, policy);
    let mut predicted_defect = vec![theta.apply(&h.backward_shift(), n)?];
    if !dec.in_range {
        predicted_defect.push(dec.g_zeta.clone());
    }
    let perp: Vec<CoeffVec> = predicted_defect
        .iter()
        .map(|v| Ok(v - &ker.subspace.project(v)?))
        .collect::<Result<_>>()?;
    let predicted_span = Subspace::span_of(mm, n, &perp, policy)?;
    let defect_containment = defect.defect_basis.is_contained_in(&predicted_span, f64::INFINITY)?.residual;

    let frame = build_frame_auto(&ker.subspace, policy)?;
    let coords = coords_of(&frame, &sample_members(&ker.subspace))?;
    let representation = summarize(&frame, &coords, default_depth(n), &format!("{case:?}"));
    let bound = if dec.in_range { 1 } else { 2 };
    let checks = vec![
        SubCheck::le("kernel_equality", equality_residual, TOL_EQUALITY),
        SubCheck::le("projection_formula", projection_formula_residual, TOL_EQUALITY),
        SubCheck::le("defect_containment", defect_containment, TOL_CONTAIN.max(TOL_EQUALITY)),
        SubCheck::le("defect_bound", defect.defect_dim as f64, bound as f64),
    ];
    Ok(ThetaStarReport {
        case,
        v_theta,
        g_zeta_norm: dec.g_zeta.norm(),
        model_space_dim: ms.dim(),
        predicted_dim: predicted.dim(),
        kernel_dim: ker.subspace.dim(),
        equality_residual,
        sigma_gap: ker.subspace.cut().sigma_gap(),
        gap_ratio: ker.subspace.cut().gap_ratio(),
        projection_formula_residual,
        defect_containment,
        defect_dim: defect.defect_dim,
        representation,
        checks,
    })
}
