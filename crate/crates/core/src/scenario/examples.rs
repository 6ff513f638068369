//! Builders for the bundled worked-example scenarios.

use super::{CheckName, Expect, Perturbation, Scenario, SymbolClass};
use crate::hardy::CoeffVec;
use crate::operators::Orthonormality;
use crate::representation::ThetaStarCase;
use crate::symbols::LaurentMatrixSymbol;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use std::path::Path;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn vecs(comps: &[&[f64]], n: usize) -> CoeffVec {
    let cs: Vec<Vec<C64>> = comps.iter().map(|v| v.iter().map(|&x| c(x)).collect()).collect();
    CoeffVec::from_components(&cs, n).expect("valid coefficients")
}

fn unit(v: CoeffVec) -> CoeffVec {
    let nv = v.norm();
    v.scale(c(1.0 / nv))
}

fn base(name: &str, description: &str, m: usize, n: usize, class: SymbolClass) -> Scenario {
    Scenario {
        name: name.into(),
        description: Some(description.into()),
        m,
        n,
        symbol_class: class,
        symbol: None,
        f1: None,
        f2: None,
        psi: None,
        perturbation: Perturbation::default(),
        generate: None,
        orthonormality: Orthonormality::Both,
        checks: Vec::new(),
        tolerances: Default::default(),
        seed: None,
        expect: Expect::default(),
    }
}

/// `G = k₀ ⊗ e₁` in `H²(C³)`.
pub fn example_2_4_i() -> Scenario {
    let (m, n) = (3, 16);
    let g = CoeffVec::k0(m, n, 0);
    let mut s = base("example_2_4_i", "complement of the first constant direction", m, n, SymbolClass::Zero);
    s.perturbation = Perturbation { g: vec![g.clone()], h: vec![g.clone()] };
    s.checks = vec![CheckName::DefectTheorem, CheckName::Representation, CheckName::ComplementAnalysis];
    s.expect = Expect {
        kernel_dim: Some(m * n - 1),
        defect_dim: Some(1),
        defect_span: Some(vec![g]),
        r: Some(m - 1),
        p: Some(1),
        k_zero: None,
        g: Some(CoeffVec::zeros(1, n)),
        g0: Some(CoeffVec::zeros(m - 1, n)),
        ..Expect::default()
    };
    s
}

/// `G = (z, z²)/√2`, a normalized column of inner functions.
pub fn example_2_4_ii() -> Scenario {
    let (m, n) = (2, 16);
    let g = unit(vecs(&[&[0.0, 1.0], &[0.0, 0.0, 1.0]], n));
    let mut s = base("example_2_4_ii", "complement of a normalized column of inner functions", m, n, SymbolClass::Zero);
    s.perturbation = Perturbation { g: vec![g.clone()], h: vec![g.clone()] };
    s.checks = vec![CheckName::DefectTheorem, CheckName::Representation, CheckName::ComplementAnalysis];
    s.expect = Expect {
        kernel_dim: Some(m * n - 1),
        defect_dim: Some(1),
        defect_span: Some(vec![g]),
        r: Some(m),
        p: Some(1),
        g: Some(CoeffVec::zeros(1, n)),
        ..Expect::default()
    };
    s
}

/// `G = ((1 + z³)/√2, 0)`.
pub fn example_2_4_iii() -> Scenario {
    let (m, n, k) = (2, 16, 3);
    let r = 1.0 / 2f64.sqrt();
    let mut gc = vec![0.0; k + 1];
    gc[0] = r;
    gc[k] = r;
    let g = vecs(&[&gc, &[0.0]], n);
    let mut want_g = vec![0.0; k];
    want_g[k - 1] = 0.5;
    let mut want_g0 = vec![0.0; k + 1];
    want_g0[k] = 0.5;
    let mut s = base("example_2_4_iii", "complement of a binomial direction", m, n, SymbolClass::Zero);
    s.perturbation = Perturbation { g: vec![g.clone()], h: vec![g.clone()] };
    s.checks = vec![CheckName::DefectTheorem, CheckName::Representation, CheckName::ComplementAnalysis];
    s.expect = Expect {
        kernel_dim: Some(m * n - 1),
        defect_dim: Some(1),
        defect_span: Some(vec![g]),
        r: Some(m),
        p: Some(1),
        g: Some(CoeffVec::scalar(&want_g, n)),
        g0: Some(vecs(&[&want_g0, &[0.0]], n)),
        ..Expect::default()
    };
    s
}

/// `G` a normalized pair of reproducing kernels at `α = 1/2`.
pub fn example_2_4_iv() -> Scenario {
    let (m, n, alpha) = (2, 64, 0.5f64);
    let ka: Vec<f64> = (0..n).map(|j| alpha.powi(j as i32)).collect();
    let g = unit(vecs(&[&ka, &ka], n));
    let want_g: Vec<f64> = (0..n).map(|j| alpha.powi(j as i32 + 1)).collect();
    let mut s = base("example_2_4_iv", "complement of a reproducing-kernel direction", m, n, SymbolClass::Zero);
    s.perturbation = Perturbation { g: vec![g.clone()], h: vec![g.clone()] };
    s.checks = vec![CheckName::DefectTheorem, CheckName::Representation, CheckName::ComplementAnalysis];
    s.expect = Expect {
        kernel_dim: Some(m * n - 1),
        defect_dim: Some(0),
        r: Some(m),
        p: Some(1),
        k_zero: Some(true),
        g: Some(CoeffVec::scalar(&want_g, n)),
        g0: Some(CoeffVec::zeros(m, n)),
        ..Expect::default()
    };
    s
}

/// The polynomial `P` used by the inner-symbol example; `P(0) = 0`, `‖P‖ = 1`.
pub fn example_3_2_p(n: usize) -> CoeffVec {
    unit(vecs(&[&[0.0, 1.0, 0.5], &[0.0, 0.3, 0.0, -0.2]], n))
}

/// `Θ = z^p I₂`, `G = −P`, `H = z^p P`.
pub fn example_3_2_with(p: usize, n: usize) -> Scenario {
    let m = 2;
    let pv = example_3_2_p(n);
    let h = pv.shift_by(p);
    let mut s = base("example_3_2", "inner symbol with a one-dimensional kernel", m, n, SymbolClass::Inner);
    s.symbol = Some(LaurentMatrixSymbol::monomial(m, p as i64));
    s.perturbation = Perturbation { g: vec![-&pv], h: vec![h.clone()] };
    s.checks = vec![
        CheckName::DefectTheorem,
        CheckName::Representation,
        CheckName::InnerKernel,
        CheckName::ModelSpace,
    ];
    s.expect = Expect {
        kernel_dim: Some(1),
        defect_dim: Some(1),
        defect_span: Some(vec![h.backward_shift_by(p + 1)]),
        kernel_contains: Some(vec![pv]),
        subcase: Some("a0_zero".into()),
        model_space_dim: Some(m * p),
        ..Expect::default()
    };
    s
}

pub fn example_3_2() -> Scenario {
    example_3_2_with(2, 32)
}

fn g_zeta(n: usize, s: usize) -> CoeffVec {
    let mut first = vec![0.0; s];
    first[s - 1] = 1.0;
    unit(vecs(&[&first, &[1.0]], n))
}

/// `Θ = z^s I₂` with `v_Θ = 0`.
pub fn example_5_3_case_1_with(s_pow: usize, n: usize) -> Scenario {
    let m = 2;
    let r2 = 2f64.sqrt();
    let h = vecs(&[&[r2, -r2], &[0.0]], n);
    let mut g = g_zeta(n, s_pow).scale(c(3f64.sqrt() / 2.0));
    g.axpy(c(-0.25), &h.shift_by(s_pow));
    let mut s = base(
        "example_5_3_case_1",
        "adjoint of an inner symbol, G outside the range, critical case",
        m,
        n,
        SymbolClass::ThetaStar,
    );
    s.symbol = Some(LaurentMatrixSymbol::monomial(m, s_pow as i64));
    s.perturbation = Perturbation { g: vec![g], h: vec![h] };
    s.orthonormality = Orthonormality::GOnly;
    s.checks = vec![
        CheckName::DefectTheorem,
        CheckName::Representation,
        CheckName::ThetaStarAnalysis,
        CheckName::ModelSpace,
    ];
    s.expect = Expect {
        case: Some(ThetaStarCase::OutsideCritical),
        model_space_dim: Some(m * s_pow),
        ..Expect::default()
    };
    s
}

pub fn example_5_3_case_1() -> Scenario {
    example_5_3_case_1_with(2, 16)
}

/// `Θ = z^s I₂` with `v_Θ ≠ 0`.
pub fn example_5_3_case_2_with(s_pow: usize, n: usize) -> Scenario {
    let m = 2;
    let r = 1.0 / 2f64.sqrt();
    let h = vecs(&[&[r, -r], &[0.0]], n);
    let mut g = g_zeta(n, s_pow).scale(c(0.8));
    g.axpy(c(0.6), &CoeffVec::monomial(m, n, 0, s_pow));
    let mut s = base(
        "example_5_3_case_2",
        "adjoint of an inner symbol, G outside the range, regular case",
        m,
        n,
        SymbolClass::ThetaStar,
    );
    s.symbol = Some(LaurentMatrixSymbol::monomial(m, s_pow as i64));
    s.perturbation = Perturbation { g: vec![g], h: vec![h] };
    s.checks = vec![
        CheckName::DefectTheorem,
        CheckName::Representation,
        CheckName::ThetaStarAnalysis,
        CheckName::ModelSpace,
    ];
    s.expect = Expect {
        case: Some(ThetaStarCase::OutsideRegular),
        model_space_dim: Some(m * s_pow),
        ..Expect::default()
    };
    s
}

pub fn example_5_3_case_2() -> Scenario {
    example_5_3_case_2_with(2, 16)
}

/// `Ψ = diag(z, 0)`, `Φ = diag(0, z̄)`: the product vanishes without the hypothesis.
pub fn counterexample_2_14() -> Scenario {
    let (m, n) = (2, 8);
    let e11 = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(0.0)]);
    let e22 = DMatrix::from_row_slice(2, 2, &[c(0.0), c(0.0), c(0.0), c(1.0)]);
    let mut s = base("counterexample_2_14", "Toeplitz product that vanishes although neither factor qualifies", m, n, SymbolClass::Raw);
    s.psi = Some(LaurentMatrixSymbol::new(m, [(1, e11)]).expect("finite"));
    s.symbol = Some(LaurentMatrixSymbol::new(m, [(-1, e22)]).expect("finite"));
    s.checks = vec![CheckName::BrownHalmos];
    s.expect.counterexample = Some(true);
    s
}

/// Every bundled example, in a fixed order.
pub fn all() -> Vec<Scenario> {
    vec![
        example_2_4_i(),
        example_2_4_ii(),
        example_2_4_iii(),
        example_2_4_iv(),
        example_3_2(),
        example_5_3_case_1(),
        example_5_3_case_2(),
        counterexample_2_14(),
    ]
}

pub fn to_json(s: &Scenario) -> String {
    let mut out = serde_json::to_string_pretty(s).expect("serializable");
    out.push('\n');
    out
}

/// Writes every bundled example as `<name>.json` into `dir`.
pub fn write_all(dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for s in all() {
        std::fs::write(dir.join(format!("{}.json", s.name)), to_json(&s))?;
    }
    Ok(())
}
