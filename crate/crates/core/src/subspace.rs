//! Numerical subspaces of the truncated ambient `C^{mN}` with orthonormal bases.

use crate::error::{Error, Result};
use crate::hardy::CoeffVec;
use crate::linalg::{left_svd, orthonormality_deviation, right_svd};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::Serialize;

/// Default containment tolerance for `is_contained` and equality.
pub const TOL_CONTAIN: f64 = 1e-8;
/// Principal-angle tolerance on `1 - cos θ` for intersections.
pub const TOL_INT: f64 = 1e-8;
/// Borderline rank cuts above this gap ratio are inconclusive.
pub const GAP_RATIO_LIMIT: f64 = 1e-3;

/// Rank decision rule: `σ ≤ tol_rel · max(σ_max, 1)` is treated as zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[derive(Default)]
pub struct RankPolicy {
    /// `None` means `1e-10 · max(rows, cols)`.
    pub tol_rel: Option<f64>,
}


impl RankPolicy {
    pub fn with_tol(tol_rel: f64) -> Self {
        Self {
            tol_rel: Some(tol_rel),
        }
    }

    pub fn threshold(&self, rows: usize, cols: usize, sigma_max: f64) -> f64 {
        let rel = self
            .tol_rel
            .unwrap_or(1e-10 * rows.max(cols).max(1) as f64);
        rel * sigma_max.max(1.0)
    }

    /// Applies the rule to descending singular values.
    pub fn cut(&self, rows: usize, cols: usize, sigma: &[f64]) -> RankCut {
        let smax = sigma.first().copied().unwrap_or(0.0);
        let threshold = self.threshold(rows, cols, smax);
        let rank = sigma.iter().take_while(|&&s| s > threshold).count();
        RankCut {
            rank,
            last_kept: rank.checked_sub(1).map(|i| sigma[i]),
            first_dropped: sigma.get(rank).copied(),
            threshold,
        }
    }
}

/// Where a rank rule cut a singular spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RankCut {
    pub rank: usize,
    pub last_kept: Option<f64>,
    pub first_dropped: Option<f64>,
    pub threshold: f64,
}

impl RankCut {
    /// `first dropped / last kept`; small means a clean cut.
    pub fn gap_ratio(&self) -> f64 {
        match (self.last_kept, self.first_dropped) {
            (Some(k), Some(d)) => d / k,
            (Some(k), None) => self.threshold / k,
            (None, _) => 0.0,
        }
    }

    pub fn is_conclusive(&self) -> bool {
        self.gap_ratio() <= GAP_RATIO_LIMIT
    }

    /// `[last kept σ, first dropped σ]`, zeros standing in for absent values.
    pub fn sigma_gap(&self) -> [f64; 2] {
        [self.last_kept.unwrap_or(0.0), self.first_dropped.unwrap_or(0.0)]
    }

    fn exact(rank: usize) -> Self {
        Self {
            rank,
            last_kept: None,
            first_dropped: None,
            threshold: 0.0,
        }
    }

    /// Combines two cuts, keeping the worse gap.
    pub fn worst(a: Self, b: Self) -> Self {
        if b.gap_ratio() > a.gap_ratio() { b } else { a }
    }
}

/// Outcome of a containment or equality test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Containment {
    pub contained: bool,
    pub residual: f64,
}

/// Subspace of truncated `H²(C^m)` with an orthonormal basis matrix of shape `mN × r`.
#[derive(Clone, Debug)]
pub struct Subspace {
    m: usize,
    n: usize,
    basis: DMatrix<C64>,
    tol: f64,
    cut: RankCut,
}

/// Nullspace together with the per-vector residuals `‖A v‖`.
#[derive(Clone, Debug)]
pub struct Nullspace {
    pub subspace: Subspace,
    pub residuals: Vec<f64>,
}

impl Nullspace {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

impl Subspace {
    pub fn zero(m: usize, n: usize) -> Self {
        Self {
            m,
            n,
            basis: DMatrix::zeros(m * n, 0),
            tol: 0.0,
            cut: RankCut::exact(0),
        }
    }

    pub fn full(m: usize, n: usize) -> Self {
        Self {
            m,
            n,
            basis: DMatrix::identity(m * n, m * n),
            tol: 0.0,
            cut: RankCut::exact(m * n),
        }
    }

    /// Wraps a basis already known to be orthonormal (validated at 1e-10).
    pub fn from_orthonormal(m: usize, n: usize, basis: DMatrix<C64>) -> Result<Self> {
        if basis.nrows() != m * n {
            return Err(Error::SizeMismatch(format!(
                "basis has {} rows, ambient is {}",
                basis.nrows(),
                m * n
            )));
        }
        let dev = orthonormality_deviation(&basis);
        if dev > 1e-10 {
            return Err(Error::NotOrthonormal {
                family: "subspace basis",
                deviation: dev,
            });
        }
        let r = basis.ncols();
        Ok(Self {
            m,
            n,
            basis,
            tol: 0.0,
            cut: RankCut::exact(r),
        })
    }

    /// Column span of an `mN × k` matrix.
    pub fn span_matrix(m: usize, n: usize, a: &DMatrix<C64>, policy: &RankPolicy) -> Self {
        assert_eq!(a.nrows(), m * n, "column length must be mN");
        let svd = left_svd(a);
        let cut = policy.cut(a.nrows(), a.ncols(), &svd.sigma);
        Self {
            m,
            n,
            basis: svd.u.columns(0, cut.rank).into_owned(),
            tol: cut.threshold,
            cut,
        }
    }

    /// Span of a list of vectors; an all-zero list gives the zero subspace.
    pub fn span_of(m: usize, n: usize, vectors: &[CoeffVec], policy: &RankPolicy) -> Result<Self> {
        for v in vectors {
            if v.m() != m || v.n() != n {
                return Err(Error::ShapeMismatch {
                    m,
                    n,
                    got_m: v.m(),
                    got_n: v.n(),
                });
            }
        }
        if vectors.is_empty() {
            return Ok(Self::zero(m, n));
        }
        let a = DMatrix::from_fn(m * n, vectors.len(), |r, c| vectors[c].as_slice()[r]);
        Ok(Self::span_matrix(m, n, &a, policy))
    }

    /// Right nullspace of `a`, whose columns index the ambient `C^{mN}`.
    pub fn nullspace(m: usize, n: usize, a: &DMatrix<C64>, policy: &RankPolicy) -> Nullspace {
        assert_eq!(a.ncols(), m * n, "operator width must be mN");
        let svd = right_svd(a);
        let cut = policy.cut(a.nrows(), a.ncols(), &svd.sigma);
        let dim = m * n - cut.rank;
        let basis = svd.v.columns(cut.rank, dim).into_owned();
        let residuals = (0..dim).map(|k| (a * basis.column(k)).norm()).collect();
        Nullspace {
            subspace: Self {
                m,
                n,
                basis,
                tol: cut.threshold,
                cut,
            },
            residuals,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ambient_dim(&self) -> usize {
        self.m * self.n
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<C64> {
        &self.basis
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn cut(&self) -> RankCut {
        self.cut
    }

    pub fn vector(&self, k: usize) -> CoeffVec {
        CoeffVec::from_slice(self.m, self.n, self.basis.column(k).as_slice())
    }

    pub fn vectors(&self) -> Vec<CoeffVec> {
        (0..self.dim()).map(|k| self.vector(k)).collect()
    }

    fn check_ambient(&self, other: &Self) -> Result<()> {
        if self.m != other.m || self.n != other.n {
            return Err(Error::ShapeMismatch {
                m: self.m,
                n: self.n,
                got_m: other.m,
                got_n: other.n,
            });
        }
        Ok(())
    }

    pub fn project_vec(&self, v: &DVector<C64>) -> DVector<C64> {
        &self.basis * (self.basis.adjoint() * v)
    }

    /// Orthogonal projection `basis · basis^H · F`.
    pub fn project(&self, f: &CoeffVec) -> Result<CoeffVec> {
        if f.m() != self.m || f.n() != self.n {
            return Err(Error::ShapeMismatch {
                m: self.m,
                n: self.n,
                got_m: f.m(),
                got_n: f.n(),
            });
        }
        Ok(CoeffVec::from_dvector(self.m, self.n, &self.project_vec(&f.to_dvector())))
    }

    /// Distance from `v` to the subspace.
    pub fn distance(&self, v: &DVector<C64>) -> f64 {
        (v - self.project_vec(v)).norm()
    }

    /// Orthocomplement within the full truncated ambient.
    pub fn complement(&self) -> Self {
        let total = self.ambient_dim();
        let r = self.dim();
        if r == 0 {
            return Self::full(self.m, self.n);
        }
        let svd = right_svd(&self.basis.adjoint());
        Self {
            m: self.m,
            n: self.n,
            basis: svd.v.columns(r, total - r).into_owned(),
            tol: 0.0,
            cut: RankCut::exact(total - r),
        }
    }

    /// `self ⊖ a` for `a ⊆ self`.
    pub fn ortho_complement_within(&self, a: &Self) -> Result<Self> {
        self.check_ambient(a)?;
        let c = a.is_contained_in(self, TOL_CONTAIN)?;
        if !c.contained {
            return Err(Error::NotContained(c.residual));
        }
        let r = self.dim();
        let k = a.dim();
        if k == 0 {
            return Ok(self.clone());
        }
        if r <= k {
            return Ok(Self::zero(self.m, self.n));
        }
        let coeffs = self.basis.adjoint() * &a.basis;
        let svd = right_svd(&coeffs.adjoint());
        let y = svd.v.columns(k, r - k).into_owned();
        Ok(Self {
            m: self.m,
            n: self.n,
            basis: &self.basis * y,
            tol: self.tol,
            cut: RankCut::exact(r - k),
        })
    }

    /// Intersection from principal angles: directions with `1 - cos θ ≤ TOL_INT`.
    pub fn intersect(&self, other: &Self) -> Result<Self> {
        self.check_ambient(other)?;
        if self.dim() == 0 || other.dim() == 0 {
            return Ok(Self::zero(self.m, self.n));
        }
        let cross = self.basis.adjoint() * &other.basis;
        let svd = left_svd(&cross);
        let keep = svd.sigma.iter().take_while(|&&s| 1.0 - s <= TOL_INT).count();
        Ok(Self {
            m: self.m,
            n: self.n,
            basis: &self.basis * svd.u.columns(0, keep),
            tol: TOL_INT,
            cut: RankCut::exact(keep),
        })
    }

    /// `self + other`.
    pub fn sum(&self, other: &Self, policy: &RankPolicy) -> Result<Self> {
        self.check_ambient(other)?;
        let mut a = DMatrix::zeros(self.ambient_dim(), self.dim() + other.dim());
        a.columns_mut(0, self.dim()).copy_from(&self.basis);
        a.columns_mut(self.dim(), other.dim()).copy_from(&other.basis);
        Ok(Self::span_matrix(self.m, self.n, &a, policy))
    }

    /// Max over basis vectors `v` of `‖v − P_B v‖`.
    pub fn is_contained_in(&self, b: &Self, tol: f64) -> Result<Containment> {
        self.check_ambient(b)?;
        let residual = if self.dim() == 0 {
            0.0
        } else {
            let p = &b.basis * (b.basis.adjoint() * &self.basis);
            (0..self.dim())
                .map(|k| (self.basis.column(k) - p.column(k)).norm())
                .fold(0.0, f64::max)
        };
        Ok(Containment {
            contained: residual <= tol,
            residual,
        })
    }

    /// Mutual containment.
    pub fn equals(&self, other: &Self, tol: f64) -> Result<Containment> {
        let a = self.is_contained_in(other, tol)?;
        let b = other.is_contained_in(self, tol)?;
        let residual = a.residual.max(b.residual);
        Ok(Containment {
            contained: a.contained && b.contained && self.dim() == other.dim(),
            residual,
        })
    }

    /// `{F ∈ self : F(0) = 0}`.
    pub fn zero_at_origin_slice(&self, policy: &RankPolicy) -> Self {
        let r = self.dim();
        if r == 0 {
            return self.clone();
        }
        let z = self.basis.rows(0, self.m).into_owned();
        let svd = right_svd(&z);
        let cut = policy.cut(z.nrows(), z.ncols(), &svd.sigma);
        let y = svd.v.columns(cut.rank, r - cut.rank);
        Self {
            m: self.m,
            n: self.n,
            basis: &self.basis * y,
            tol: cut.threshold,
            cut,
        }
    }

    /// Largest `|⟨u, v⟩|` between basis vectors of two subspaces.
    pub fn max_cross_inner(&self, other: &Self) -> f64 {
        if self.dim() == 0 || other.dim() == 0 {
            return 0.0;
        }
        (self.basis.adjoint() * &other.basis)
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    pub fn report(&self) -> SubspaceReport {
        SubspaceReport {
            dim: self.dim(),
            sigma_gap: self.cut.sigma_gap(),
            basis: self.vectors(),
        }
    }
}

/// Free-function form of [`Subspace::is_contained_in`].
pub fn is_contained(a: &Subspace, b: &Subspace, tol: f64) -> Result<Containment> {
    a.is_contained_in(b, tol)
}

/// Serialized subspace summary.
#[derive(Clone, Debug, Serialize)]
pub struct SubspaceReport {
    pub dim: usize,
    pub sigma_gap: [f64; 2],
    pub basis: Vec<CoeffVec>,
}
