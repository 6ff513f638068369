//! One-parameter sweeps of a scenario, emitted as CSV rows.

use super::{validate, Prepared, RunOptions, Scenario, ScenarioError, SymbolClass};
use crate::model_space::build_model_space;
use crate::near_invariance::{
    compute_defect, kernel_of, verify_inner_symbol, verify_invertible_factors, verify_phi_zero, verify_theta_star,
};
use crate::operators::build_perturbed_with;
use crate::symbols::LaurentMatrixSymbol;
use serde::Serialize;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SweepParam {
    /// Truncation degree.
    N,
    /// Power of an inner monomial symbol `z^p I`.
    P,
    /// Power of `Θ = z^s I` under the adjoint class.
    S,
    /// Rank of the perturbation.
    #[serde(rename = "n")]
    Rank,
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "N" => Ok(Self::N),
            "p" => Ok(Self::P),
            "s" => Ok(Self::S),
            "n" => Ok(Self::Rank),
            _ => Err(format!("unknown sweep parameter {s:?}; expected N, p, s or n")),
        }
    }
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::N => "N",
            Self::P => "p",
            Self::S => "s",
            Self::Rank => "n",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub param: &'static str,
    pub value: usize,
    pub kernel_dim: usize,
    pub defect_dim: usize,
    pub bound: Option<usize>,
    pub containment_residual: Option<f64>,
    pub kernel_residual_max: Option<f64>,
    pub sigma_last_kept: Option<f64>,
    pub sigma_first_dropped: Option<f64>,
    pub sigma_gap_ratio: f64,
    pub model_space_dim: Option<usize>,
}

fn inapplicable(param: SweepParam, why: &str) -> ScenarioError {
    ScenarioError::Validation(format!("sweep parameter {} does not apply: {why}", param.as_str()))
}

/// Power `k` when the symbol is `z^k I`.
fn monomial_power(s: &Scenario) -> Option<usize> {
    let sym = s.symbol.as_ref()?;
    let mut terms = sym.terms();
    let (k, mat) = terms.next()?;
    if terms.next().is_some() || k < 0 {
        return None;
    }
    let id = nalgebra::DMatrix::identity(s.m, s.m);
    ((mat - id).iter().all(|c| c.norm() < 1e-14)).then_some(k as usize)
}

/// The scenario with `param` set to `value`.
pub fn with_param(base: &Scenario, param: SweepParam, value: usize) -> Result<Scenario, ScenarioError> {
    let mut s = base.clone();
    match param {
        SweepParam::N => {
            s.n = value;
            let resize = |v: &crate::CoeffVec| {
                if v.degree(0.0).is_some_and(|d| d >= value) {
                    Err(inapplicable(param, "a perturbation vector has degree ≥ N"))
                } else {
                    Ok(v.resized(value))
                }
            };
            s.perturbation.g = s.perturbation.g.iter().map(resize).collect::<Result<_, _>>()?;
            s.perturbation.h = s.perturbation.h.iter().map(resize).collect::<Result<_, _>>()?;
            for vs in [&mut s.expect.defect_span, &mut s.expect.kernel_contains].into_iter().flatten() {
                *vs = vs.iter().map(resize).collect::<Result<_, _>>()?;
            }
            for v in [&mut s.expect.g, &mut s.expect.g0].into_iter().flatten() {
                *v = resize(v)?;
            }
        }
        SweepParam::P | SweepParam::S => {
            let class = if param == SweepParam::P { SymbolClass::Inner } else { SymbolClass::ThetaStar };
            if s.symbol_class != class {
                return Err(inapplicable(param, "wrong symbol class"));
            }
            let k = monomial_power(&s).ok_or_else(|| inapplicable(param, "symbol is not z^k I"))?;
            if value == 0 {
                return Err(inapplicable(param, "the power must be positive"));
            }
            s.symbol = Some(LaurentMatrixSymbol::monomial(s.m, value as i64));
            if param == SweepParam::P {
                // H = z^k P is carried to z^p P.
                let mut h = Vec::with_capacity(s.perturbation.h.len());
                for v in &s.perturbation.h {
                    let low = (0..k.min(v.n())).any(|j| (0..s.m).any(|i| v.get(i, j).norm() > 0.0));
                    if low {
                        return Err(inapplicable(param, "H is not divisible by the symbol"));
                    }
                    let core = v.backward_shift_by(k);
                    if core.degree(0.0).is_some_and(|d| d + value >= s.n) {
                        return Err(inapplicable(param, "z^p H exceeds the truncation"));
                    }
                    h.push(core.shift_by(value));
                }
                s.perturbation.h = h;
                if let Some(vs) = &mut s.expect.defect_span {
                    *vs = s.perturbation.h.iter().map(|v| v.backward_shift_by(value + 1)).collect();
                }
            }
            if s.expect.model_space_dim.is_some() {
                s.expect.model_space_dim = Some(s.m * value);
            }
        }
        SweepParam::Rank => match &mut s.generate {
            Some(g) => g.rank = value,
            None => {
                if value > s.perturbation.g.len() {
                    return Err(inapplicable(param, "rank exceeds the given perturbation"));
                }
                s.perturbation.g.truncate(value);
                s.perturbation.h.truncate(value);
            }
        },
    }
    Ok(s)
}

fn row(p: &Prepared, param: SweepParam, value: usize) -> crate::Result<SweepRow> {
    let s = &p.scenario;
    let n = p.n();
    let tc = match s.symbol_class {
        SymbolClass::Zero => Some(verify_phi_zero(p.m(), n, &p.g, &p.h, &p.opts)?),
        SymbolClass::Inner => Some(verify_inner_symbol(s.symbol.as_ref().expect("validated"), &p.g, &p.h, n, &p.opts)?),
        SymbolClass::InvertibleFactors => Some(verify_invertible_factors(
            s.f1.as_ref().expect("validated"),
            s.f2.as_ref().expect("validated"),
            &p.g,
            &p.h,
            n,
            &p.opts,
        )?),
        SymbolClass::ThetaStar => Some(verify_theta_star(s.symbol.as_ref().expect("validated"), &p.g, &p.h, n, &p.opts)?),
        SymbolClass::Raw => None,
    };
    let (kernel_dim, report, bound) = match tc {
        Some(tc) => (tc.kernel.dim(), tc.report, Some(tc.bound)),
        None => {
            let t = build_perturbed_with(&p.phi, n, &p.g, &p.h, p.opts.orthonormality)?;
            let ns = kernel_of(&t, &p.policy());
            let mut d = compute_defect(&ns.subspace, &p.policy());
            d.kernel_residual_max = Some(ns.max_residual());
            (ns.subspace.dim(), d, None)
        }
    };
    let model_space_dim = match s.symbol_class {
        SymbolClass::Inner | SymbolClass::ThetaStar => {
            Some(build_model_space(s.symbol.as_ref().expect("validated"), n, &p.policy())?.dim())
        }
        _ => None,
    };
    Ok(SweepRow {
        param: param.as_str(),
        value,
        kernel_dim,
        defect_dim: report.defect_dim,
        bound,
        containment_residual: report.containment_residual,
        kernel_residual_max: report.kernel_residual_max,
        sigma_last_kept: report.cut.last_kept,
        sigma_first_dropped: report.cut.first_dropped,
        sigma_gap_ratio: report.gap_ratio,
        model_space_dim,
    })
}

/// Runs the defect computation of `base` once per value.
pub fn sweep(base: &Scenario, param: SweepParam, values: &[usize], ro: &RunOptions) -> Result<Vec<SweepRow>, ScenarioError> {
    if values.is_empty() {
        return Err(ScenarioError::Validation("no sweep values".into()));
    }
    let prepared = values
        .iter()
        .map(|&v| validate(&with_param(base, param, v)?, ro))
        .collect::<Result<Vec<_>, _>>()?;
    values
        .iter()
        .zip(&prepared)
        .map(|(&v, p)| row(p, param, v).map_err(|e| ScenarioError::Validation(e.to_string())))
        .collect()
}

pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8")
}
