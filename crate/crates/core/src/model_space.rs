//! Model spaces `K_Θ = H² ⊖ ΘH²` for inner polynomial symbols.

use crate::error::{Error, Result};
use crate::hardy::CoeffVec;
use crate::operators::build_toeplitz;
use crate::subspace::{RankPolicy, Subspace};
use crate::symbols::{
    diagonal_inner_part, diagonal_outer_part, LaurentMatrixSymbol, DEFAULT_GRID, DEFAULT_INNER_TOL,
};
use serde::Serialize;

/// Agreement required between the formula and subspace projections.
pub const TOL_MODEL: f64 = 1e-8;
/// `G ∈ ΘH²` when `‖P_{K_Θ} G‖ < TOL_RANGE · ‖G‖`.
pub const TOL_RANGE: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct ModelSpace {
    theta: LaurentMatrixSymbol,
    n: usize,
    as_subspace: Subspace,
    range_subspace: Subspace,
    boundary_dim: usize,
    projection_mismatch: f64,
}

/// `G = G_ζ + G_Θ` with `G_ζ ∈ K_Θ`, `G_Θ ∈ ΘH²`.
#[derive(Clone, Debug)]
pub struct ThetaDecomposition {
    pub g_zeta: CoeffVec,
    pub g_theta: CoeffVec,
    pub in_range: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ModelSpaceReport {
    pub dim: usize,
    pub range_dim: usize,
    pub boundary_dim: usize,
    pub orthogonality: f64,
    pub projection_mismatch: f64,
}

/// Builds `K_Θ` and `ΘH²` on degrees `< N`, cross-checking both projections.
pub fn build_model_space(theta: &LaurentMatrixSymbol, n: usize, policy: &RankPolicy) -> Result<ModelSpace> {
    if !theta.is_analytic() {
        return Err(Error::NotAnalytic);
    }
    let chk = theta.is_inner(DEFAULT_GRID, DEFAULT_INNER_TOL);
    if !chk.inner {
        return Err(Error::NotInner(chk.deviation));
    }
    let m = theta.m();
    let d = theta.max_power();
    let star = build_toeplitz(&theta.adjoint(), n)?;
    let as_subspace = Subspace::nullspace(m, n, star.matrix(), policy).subspace;
    let gens: Vec<CoeffVec> = (0..n - d)
        .flat_map(|j| (0..m).map(move |i| (i, j)))
        .map(|(i, j)| theta.apply(&CoeffVec::monomial(m, n, i, j), n))
        .collect::<Result<_>>()?;
    let range_subspace = Subspace::span_of(m, n, &gens, policy)?;
    let boundary_dim = (m * n).saturating_sub(as_subspace.dim() + range_subspace.dim());
    let mut ms = ModelSpace {
        theta: theta.clone(),
        n,
        as_subspace,
        range_subspace,
        boundary_dim,
        projection_mismatch: 0.0,
    };
    let mut mismatch: f64 = 0.0;
    for j in 0..n - d {
        for i in 0..m {
            let probe = CoeffVec::monomial(m, n, i, j);
            let a = ms.project_formula(&probe)?;
            let b = ms.as_subspace.project(&probe)?;
            mismatch = mismatch.max(a.max_abs_diff(&b));
        }
    }
    ms.projection_mismatch = mismatch;
    if mismatch > TOL_MODEL {
        return Err(Error::ModelSpaceMismatch(mismatch));
    }
    Ok(ms)
}

impl ModelSpace {
    pub fn theta(&self) -> &LaurentMatrixSymbol {
        &self.theta
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn as_subspace(&self) -> &Subspace {
        &self.as_subspace
    }

    pub fn range_subspace(&self) -> &Subspace {
        &self.range_subspace
    }

    pub fn dim(&self) -> usize {
        self.as_subspace.dim()
    }

    /// Ambient directions claimed by neither `K_Θ` nor the interior range.
    pub fn boundary_dim(&self) -> usize {
        self.boundary_dim
    }

    pub fn projection_mismatch(&self) -> f64 {
        self.projection_mismatch
    }

    /// `F − Θ P_+(Θ* F)` truncated to degrees `< N`.
    pub fn project_formula(&self, f: &CoeffVec) -> Result<CoeffVec> {
        let inner = self.theta.adjoint().apply(f, self.n)?;
        let back = self.theta.apply(&inner, self.n)?;
        Ok(f - &back)
    }

    pub fn report(&self) -> ModelSpaceReport {
        ModelSpaceReport {
            dim: self.dim(),
            range_dim: self.range_subspace.dim(),
            boundary_dim: self.boundary_dim,
            orthogonality: self.as_subspace.max_cross_inner(&self.range_subspace),
            projection_mismatch: self.projection_mismatch,
        }
    }
}

/// `P_{K_Θ} F` by the multiplier formula.
pub fn project_onto_model(f: &CoeffVec, ms: &ModelSpace) -> Result<CoeffVec> {
    ms.project_formula(f)
}

/// Splits `G` into its model-space and `ΘH²` parts.
pub fn decompose_against_theta(g: &CoeffVec, ms: &ModelSpace) -> Result<ThetaDecomposition> {
    let g_zeta = project_onto_model(g, ms)?;
    let g_theta = g - &g_zeta;
    let in_range = g_zeta.norm() < TOL_RANGE * g.norm().max(f64::MIN_POSITIVE);
    Ok(ThetaDecomposition {
        g_zeta,
        g_theta,
        in_range,
    })
}

/// True when `F ∈ ΘH²` by the same threshold as the decomposition.
pub fn in_theta_range(f: &CoeffVec, ms: &ModelSpace) -> Result<bool> {
    Ok(decompose_against_theta(f, ms)?.in_range)
}

/// `Ker T_{Φ*}` against `K_Θ` for the inner part `Θ` of a diagonal analytic `Φ`.
#[derive(Clone, Debug, Serialize)]
pub struct AdjointKernelReport {
    pub kernel_dim: usize,
    pub model_space_dim: usize,
    pub equality_residual: f64,
    pub sigma_gap: [f64; 2],
    pub gap_ratio: f64,
    /// Nullity of the compressed `T_{Ψ*}` for the outer part `Ψ`.
    pub outer_nullity: usize,
    pub outer_sigma_min: f64,
}

impl AdjointKernelReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.kernel_dim == self.model_space_dim && self.equality_residual <= tol && self.outer_nullity == 0
    }
}

/// Kernel of the co-analytic compression of a diagonal analytic symbol, compared with `K_Θ`.
pub fn verify_kernel_adjoint(phi: &LaurentMatrixSymbol, n: usize, policy: &RankPolicy) -> Result<AdjointKernelReport> {
    if !phi.is_analytic() {
        return Err(Error::NotAnalytic);
    }
    let m = phi.m();
    let theta = diagonal_inner_part(phi, n)?;
    let ms = build_model_space(&theta, n, policy)?;
    let t = build_toeplitz(&phi.adjoint(), n)?;
    let ker = Subspace::nullspace(m, n, t.matrix(), policy).subspace;
    let eq = ker.equals(ms.as_subspace(), f64::INFINITY)?;
    let equality_residual = if ker.dim() == ms.dim() { eq.residual } else { f64::INFINITY };
    let psi = diagonal_outer_part(phi)?;
    let tp = build_toeplitz(&psi.adjoint(), n)?;
    let outer = Subspace::nullspace(m, n, tp.matrix(), policy);
    let sv = tp.matrix().singular_values();
    Ok(AdjointKernelReport {
        kernel_dim: ker.dim(),
        model_space_dim: ms.dim(),
        equality_residual,
        sigma_gap: ker.cut().sigma_gap(),
        gap_ratio: ker.cut().gap_ratio(),
        outer_nullity: outer.subspace.dim(),
        outer_sigma_min: sv.min(),
    })
}
