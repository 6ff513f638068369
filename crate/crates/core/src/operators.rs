//! Finite compressions of block Toeplitz operators and their finite-rank perturbations.

use crate::error::{Error, Result};
use crate::hardy::CoeffVec;
use crate::linalg::orthonormality_deviation;
use crate::symbols::LaurentMatrixSymbol;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Gram-matrix tolerance for orthonormal families.
pub const TOL_ORTHO: f64 = 1e-8;

/// Block matrix of `T_Φ` on degrees `[0, N)`.
#[derive(Clone, Debug)]
pub struct ToeplitzCompression {
    symbol: LaurentMatrixSymbol,
    n: usize,
    matrix: DMatrix<C64>,
    interior: usize,
}

fn block_toeplitz(symbol: &LaurentMatrixSymbol, rows: usize, cols: usize) -> DMatrix<C64> {
    let m = symbol.m();
    let mut a = DMatrix::zeros(m * rows, m * cols);
    for (k, blk) in symbol.terms() {
        for t in 0..cols {
            let j = t as i64 + k;
            if j < 0 || j >= rows as i64 {
                continue;
            }
            a.view_mut((j as usize * m, t * m), (m, m)).copy_from(blk);
        }
    }
    a
}

/// Compression of `T_Φ` to degrees `< N`; requires `N > d`.
pub fn build_toeplitz(symbol: &LaurentMatrixSymbol, n: usize) -> Result<ToeplitzCompression> {
    let d = symbol.bandwidth();
    if n <= d {
        return Err(Error::TruncationTooSmall { n, d });
    }
    Ok(ToeplitzCompression {
        symbol: symbol.clone(),
        n,
        matrix: block_toeplitz(symbol, n, n),
        interior: n - d,
    })
}

impl ToeplitzCompression {
    pub fn symbol(&self) -> &LaurentMatrixSymbol {
        &self.symbol
    }

    pub fn m(&self) -> usize {
        self.symbol.m()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Square `mN × mN` compression.
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// Degrees `[0, interior)` where the compression matches the true operator.
    pub fn interior(&self) -> usize {
        self.interior
    }

    /// Number of output degrees needed to hold `T_Φ p` exactly for `deg p < N`.
    pub fn extended_rows(&self) -> usize {
        self.n + self.symbol.max_power()
    }

    /// `m(N + d₊) × mN` matrix of `T_Φ` restricted to polynomials of degree `< N`.
    pub fn extended_matrix(&self) -> DMatrix<C64> {
        block_toeplitz(&self.symbol, self.extended_rows(), self.n)
    }

    /// `P_N T_Φ F`.
    pub fn apply(&self, f: &CoeffVec) -> Result<CoeffVec> {
        self.symbol.apply(f, self.n)
    }
}

/// How strictly the perturbation families are validated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Orthonormality {
    /// Both `{G_i}` and `{H_i}` orthonormal.
    #[default]
    Both,
    /// Only `{G_i}` orthonormal; `H_i` arbitrary.
    GOnly,
}

/// `T_n = T_Φ + Σ ⟨·, G_i⟩ H_i` on degrees `< N`.
#[derive(Clone, Debug)]
pub struct PerturbedToeplitz {
    base: ToeplitzCompression,
    g: Vec<CoeffVec>,
    h: Vec<CoeffVec>,
    matrix: DMatrix<C64>,
    probe_residual: f64,
}

fn family_matrix(vs: &[CoeffVec], rows: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows, vs.len(), |r, c| {
        vs[c].as_slice().get(r).copied().unwrap_or(C64::new(0.0, 0.0))
    })
}

/// `max |(F^H F − I)_{ij}|` for a family of vectors.
pub fn gram_deviation(vs: &[CoeffVec]) -> f64 {
    if vs.is_empty() {
        return 0.0;
    }
    orthonormality_deviation(&family_matrix(vs, vs[0].len()))
}

/// Strict build: both families orthonormal within [`TOL_ORTHO`].
pub fn build_perturbed(
    symbol: &LaurentMatrixSymbol,
    n: usize,
    g: &[CoeffVec],
    h: &[CoeffVec],
) -> Result<PerturbedToeplitz> {
    build_perturbed_with(symbol, n, g, h, Orthonormality::Both)
}

pub fn build_perturbed_with(
    symbol: &LaurentMatrixSymbol,
    n: usize,
    g: &[CoeffVec],
    h: &[CoeffVec],
    mode: Orthonormality,
) -> Result<PerturbedToeplitz> {
    let base = build_toeplitz(symbol, n)?;
    let m = symbol.m();
    if g.len() != h.len() {
        return Err(Error::SizeMismatch(format!(
            "{} G vectors but {} H vectors",
            g.len(),
            h.len()
        )));
    }
    for v in g.iter().chain(h) {
        if v.m() != m || v.n() != n {
            return Err(Error::ShapeMismatch {
                m,
                n,
                got_m: v.m(),
                got_n: v.n(),
            });
        }
    }
    let dg = gram_deviation(g);
    if dg > TOL_ORTHO {
        return Err(Error::NotOrthonormal {
            family: "G",
            deviation: dg,
        });
    }
    if mode == Orthonormality::Both {
        let dh = gram_deviation(h);
        if dh > TOL_ORTHO {
            return Err(Error::NotOrthonormal {
                family: "H",
                deviation: dh,
            });
        }
    }
    let mut matrix = base.matrix.clone();
    if !g.is_empty() {
        matrix += family_matrix(h, m * n) * family_matrix(g, m * n).adjoint();
    }
    let mut t = PerturbedToeplitz {
        base,
        g: g.to_vec(),
        h: h.to_vec(),
        matrix,
        probe_residual: 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let probe = CoeffVec::from_fn(m, n, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let by_matrix = CoeffVec::from_dvector(m, n, &(&t.matrix * probe.to_dvector()));
    let by_form = t.apply(&probe)?;
    let scale = 1.0 + t.matrix.norm() * probe.norm();
    t.probe_residual = by_matrix.max_abs_diff(&by_form) / scale;
    if t.probe_residual > 1e-12 {
        return Err(Error::Hypothesis(format!(
            "matrix and functional forms disagree ({:.3e})",
            t.probe_residual
        )));
    }
    Ok(t)
}

impl PerturbedToeplitz {
    pub fn base(&self) -> &ToeplitzCompression {
        &self.base
    }

    pub fn rank(&self) -> usize {
        self.g.len()
    }

    pub fn g(&self) -> &[CoeffVec] {
        &self.g
    }

    pub fn h(&self) -> &[CoeffVec] {
        &self.h
    }

    pub fn m(&self) -> usize {
        self.base.m()
    }

    pub fn n(&self) -> usize {
        self.base.n
    }

    /// Square `mN × mN` matrix `T_Φ + Σ H_i G_i^H`.
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn probe_residual(&self) -> f64 {
        self.probe_residual
    }

    /// Rectangular matrix whose nullspace is exactly the kernel among polynomials of degree `< N`.
    pub fn kernel_matrix(&self) -> DMatrix<C64> {
        let mut a = self.base.extended_matrix();
        if !self.g.is_empty() {
            let rows = a.nrows();
            let mn = self.m() * self.n();
            a += family_matrix(&self.h, rows) * family_matrix(&self.g, mn).adjoint();
        }
        a
    }

    /// `T_Φ F + Σ ⟨F, G_i⟩ H_i`.
    pub fn apply(&self, f: &CoeffVec) -> Result<CoeffVec> {
        let mut out = self.base.apply(f)?;
        for (g, h) in self.g.iter().zip(&self.h) {
            out.axpy(f.inner_product(g)?, h);
        }
        Ok(out)
    }

    /// `‖T_n F‖` computed without truncating the image.
    pub fn residual(&self, f: &CoeffVec) -> Result<f64> {
        let rows = self.base.extended_rows();
        let mut out = self.base.symbol.apply(f, rows)?;
        for (g, h) in self.g.iter().zip(&self.h) {
            out.axpy(f.inner_product(g)?, &h.resized(rows));
        }
        Ok(out.norm())
    }
}

/// Modified Gram–Schmidt (two passes); dependent vectors are dropped.
pub fn orthonormalize(vs: &[CoeffVec], drop_tol: f64) -> Vec<CoeffVec> {
    let mut out: Vec<CoeffVec> = Vec::new();
    for v in vs {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &out {
                let c = w.inner_product(q).expect("shared shape");
                w.axpy(-c, q);
            }
        }
        let nrm = w.norm();
        if nrm > drop_tol {
            out.push(w.scale(C64::new(1.0 / nrm, 0.0)));
        }
    }
    out
}

/// Interior-window comparison of `T_Ψ T_Φ` with `T_{ΨΦ}`.
#[derive(Clone, Debug, Serialize)]
pub struct BrownHalmosReport {
    pub hypothesis_met: bool,
    pub window: usize,
    pub deviation: f64,
    pub product_max: f64,
    pub symbol_product_zero: bool,
}

/// Compares the compressed product against the compressed symbol product.
pub fn brown_halmos_check(
    psi: &LaurentMatrixSymbol,
    phi: &LaurentMatrixSymbol,
    n: usize,
) -> Result<BrownHalmosReport> {
    let dp = psi.bandwidth();
    let df = phi.bandwidth();
    if n <= dp + df {
        return Err(Error::TruncationTooSmall { n, d: dp + df });
    }
    let prod = psi.multiply(phi)?;
    let tp = build_toeplitz(psi, n)?;
    let tf = build_toeplitz(phi, n)?;
    let tpf = build_toeplitz(&prod, n)?;
    let composed = tp.matrix() * tf.matrix();
    let w = psi.m() * (n - dp - df);
    let diff = composed.view((0, 0), (w, w)) - tpf.matrix().view((0, 0), (w, w));
    let deviation = diff.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let product_max = composed
        .view((0, 0), (w, w))
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max);
    Ok(BrownHalmosReport {
        hypothesis_met: psi.is_coanalytic() || phi.is_analytic(),
        window: n - dp - df,
        deviation,
        product_max,
        symbol_product_zero: prod.is_zero(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subspace::{RankPolicy, Subspace};

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn random_symbol(m: usize, lo: i64, hi: i64, seed: u64) -> LaurentMatrixSymbol {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let terms: Vec<_> = (lo..=hi)
            .map(|k| {
                (
                    k,
                    DMatrix::from_fn(m, m, |_, _| {
                        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                    }),
                )
            })
            .collect();
        LaurentMatrixSymbol::new(m, terms).unwrap()
    }

    #[test]
    fn zero_symbol_gives_zero_matrix() {
        let t = build_toeplitz(&LaurentMatrixSymbol::zero(2), 3).unwrap();
        assert!(t.matrix().iter().all(|x| *x == c(0.0)));
    }

    #[test]
    fn shift_is_lower_shift_matrix() {
        let t = build_toeplitz(&LaurentMatrixSymbol::shift(1), 3).unwrap();
        let expect = DMatrix::from_row_slice(
            3,
            3,
            &[c(0.0), c(0.0), c(0.0), c(1.0), c(0.0), c(0.0), c(0.0), c(1.0), c(0.0)],
        );
        assert_eq!(t.matrix(), &expect);
        assert_eq!(t.interior(), 2);
    }

    #[test]
    fn coshift_is_adjoint_of_shift() {
        let z = LaurentMatrixSymbol::shift(2);
        let a = build_toeplitz(&z.adjoint(), 4).unwrap();
        let b = build_toeplitz(&z, 4).unwrap();
        assert_eq!(a.matrix(), &b.matrix().adjoint());
    }

    #[test]
    fn rejects_small_truncation() {
        let z = LaurentMatrixSymbol::monomial(1, 3);
        assert!(matches!(build_toeplitz(&z, 3), Err(Error::TruncationTooSmall { .. })));
    }

    #[test]
    fn block_structure() {
        let s = random_symbol(2, -2, 1, 3);
        let t = build_toeplitz(&s, 6).unwrap();
        for j in 0..6 {
            for k in 0..6 {
                let blk = t.matrix().view((2 * j, 2 * k), (2, 2)).into_owned();
                assert_eq!(blk, s.coeff(j as i64 - k as i64));
            }
        }
    }

    #[test]
    fn adjoint_identity_is_exact() {
        let s = random_symbol(3, -2, 3, 7);
        let a = build_toeplitz(&s, 8).unwrap();
        let b = build_toeplitz(&s.adjoint(), 8).unwrap();
        assert_eq!(&a.matrix().adjoint(), b.matrix());
    }

    #[test]
    fn unperturbed_matches_base() {
        let s = random_symbol(2, -1, 1, 2);
        let t = build_perturbed(&s, 5, &[], &[]).unwrap();
        assert_eq!(t.matrix(), build_toeplitz(&s, 5).unwrap().matrix());
    }

    #[test]
    fn rank_one_at_origin() {
        let e = CoeffVec::k0(1, 3, 0);
        let t = build_perturbed(&LaurentMatrixSymbol::zero(1), 3, &[e.clone()], &[e]).unwrap();
        let nonzero: Vec<_> = t.matrix().iter().filter(|x| **x != c(0.0)).collect();
        assert_eq!(nonzero, vec![&c(1.0)]);
        assert_eq!(t.matrix()[(0, 0)], c(1.0));
    }

    #[test]
    fn z_squared_with_rank_one_sends_one_to_z() {
        let one = CoeffVec::scalar(&[1.0], 4);
        let z = CoeffVec::scalar(&[0.0, 1.0], 4);
        let t = build_perturbed(&LaurentMatrixSymbol::monomial(1, 2), 4, &[one.clone()], &[z.clone()])
            .unwrap();
        // P(z²·1) lies outside the truncation only for N ≤ 2
        let expect = CoeffVec::scalar(&[0.0, 1.0, 1.0], 4);
        assert_eq!(t.apply(&one).unwrap(), expect);
        let t3 = build_perturbed(&LaurentMatrixSymbol::monomial(1, 2), 3, &[one.resized(3)], &[z.resized(3)])
            .unwrap();
        assert_eq!(t3.apply(&one.resized(3)).unwrap(), CoeffVec::scalar(&[0.0, 1.0, 1.0], 3));
    }

    #[test]
    fn rejects_non_orthonormal_family() {
        let a = CoeffVec::scalar(&[1.0, 1.0], 3);
        let b = CoeffVec::scalar(&[1.0], 3);
        let err = build_perturbed(&LaurentMatrixSymbol::zero(1), 3, &[a], &[b]).unwrap_err();
        assert!(matches!(err, Error::NotOrthonormal { family: "G", .. }));
        let g = CoeffVec::scalar(&[1.0], 3);
        let h = CoeffVec::scalar(&[2.0], 3);
        assert!(build_perturbed(&LaurentMatrixSymbol::zero(1), 3, &[g.clone()], &[h.clone()]).is_err());
        assert!(build_perturbed_with(&LaurentMatrixSymbol::zero(1), 3, &[g], &[h], Orthonormality::GOnly).is_ok());
    }

    #[test]
    fn rejects_shape_mismatch() {
        let g = CoeffVec::scalar(&[1.0], 3);
        let h = CoeffVec::k0(2, 3, 0);
        assert!(matches!(
            build_perturbed(&LaurentMatrixSymbol::zero(1), 3, &[g], &[h]),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn perturbation_has_rank_n() {
        let s = random_symbol(2, -1, 2, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut rnd = || CoeffVec::from_fn(2, 6, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let g = orthonormalize(&[rnd(), rnd(), rnd()], 1e-10);
        let h = orthonormalize(&[rnd(), rnd(), rnd()], 1e-10);
        let t = build_perturbed(&s, 6, &g, &h).unwrap();
        let diff = t.matrix() - t.base().matrix();
        let svd = crate::linalg::left_svd(&diff);
        let cut = RankPolicy::default().cut(12, 12, &svd.sigma);
        assert_eq!(cut.rank, 3);
        assert!(t.probe_residual() < 1e-15);
    }

    #[test]
    fn analytic_apply_is_exact_multiplication_inside_window() {
        let s = random_symbol(2, 0, 2, 9);
        let t = build_toeplitz(&s, 8).unwrap();
        let f = CoeffVec::from_fn(2, 8, |i, j| if j < 6 { C64::new(i as f64 + 1.0, j as f64) } else { c(0.0) });
        let full = s.apply(&f, 10).unwrap();
        assert_eq!(t.apply(&f).unwrap(), full.resized(8));
        assert!(full.resized(8).norm() > 0.0 && (full.norm() - full.resized(8).norm()).abs() < 1e-12);
    }

    #[test]
    fn coshift_commutes_with_constant_symbol() {
        let s = random_symbol(3, 0, 0, 4);
        let n = 6;
        let a = build_toeplitz(&LaurentMatrixSymbol::shift(3).adjoint(), n).unwrap();
        let b = build_toeplitz(&s, n).unwrap();
        let lhs = a.matrix() * b.matrix();
        let rhs = b.matrix() * a.matrix();
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn brown_halmos_coanalytic_left_factor() {
        let phi = random_symbol(2, -2, 2, 8);
        let r = brown_halmos_check(&LaurentMatrixSymbol::shift(2).adjoint(), &phi, 10).unwrap();
        assert!(r.hypothesis_met);
        assert!(r.deviation < 1e-12);
    }

    #[test]
    fn brown_halmos_counterexample() {
        let mut a = DMatrix::zeros(3, 3);
        a[(0, 0)] = c(1.0);
        let mut b = DMatrix::zeros(3, 3);
        b[(1, 1)] = c(1.0);
        let psi = LaurentMatrixSymbol::new(3, [(1, a)]).unwrap();
        let phi = LaurentMatrixSymbol::new(3, [(-1, b)]).unwrap();
        let r = brown_halmos_check(&psi, &phi, 6).unwrap();
        assert!(!r.hypothesis_met);
        assert!(r.symbol_product_zero);
        assert_eq!(r.product_max, 0.0);
        assert_eq!(r.deviation, 0.0);
    }

    #[test]
    fn brown_halmos_identity() {
        let id = LaurentMatrixSymbol::identity(2);
        assert_eq!(brown_halmos_check(&id, &id, 3).unwrap().deviation, 0.0);
    }

    #[test]
    fn kernel_matrix_detects_spurious_square_kernel() {
        // z·1 leaves the window at N = 1, so the square compression of z is zero
        let t = build_perturbed(&LaurentMatrixSymbol::shift(1), 2, &[], &[]).unwrap();
        let sq = Subspace::nullspace(1, 2, t.matrix(), &RankPolicy::default());
        let ex = Subspace::nullspace(1, 2, &t.kernel_matrix(), &RankPolicy::default());
        assert_eq!(sq.subspace.dim(), 1);
        assert_eq!(ex.subspace.dim(), 0);
    }
}
