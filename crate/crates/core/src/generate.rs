//! Seeded random scenario data.

use crate::error::{Error, Result};
use crate::hardy::CoeffVec;
use crate::operators::orthonormalize;
use crate::symbols::LaurentMatrixSymbol;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn unit(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Random vector supported on degrees `< degree`.
pub fn random_poly_vec(rng: &mut ChaCha8Rng, m: usize, n: usize, degree: usize) -> CoeffVec {
    CoeffVec::from_fn(m, n, |_, j| if j < degree { unit(rng) } else { C64::new(0.0, 0.0) })
}

/// `count` orthonormal vectors supported on degrees `< degree`.
pub fn random_orthonormal(
    rng: &mut ChaCha8Rng,
    count: usize,
    m: usize,
    n: usize,
    degree: usize,
) -> Result<Vec<CoeffVec>> {
    if count > m * degree.min(n) {
        return Err(Error::SizeMismatch(format!(
            "cannot fit {count} orthonormal vectors in degree < {degree}"
        )));
    }
    let raw: Vec<CoeffVec> = (0..count).map(|_| random_poly_vec(rng, m, n, degree)).collect();
    let out = orthonormalize(&raw, 1e-8);
    if out.len() != count {
        return Err(Error::Hypothesis("random family was degenerate".into()));
    }
    Ok(out)
}

/// Random `m × m` symbol with powers `lo..=hi`.
pub fn random_symbol(rng: &mut ChaCha8Rng, m: usize, lo: i64, hi: i64) -> LaurentMatrixSymbol {
    let terms: Vec<_> = (lo..=hi)
        .map(|k| (k, DMatrix::from_fn(m, m, |_, _| unit(rng))))
        .collect();
    LaurentMatrixSymbol::new(m, terms).expect("finite entries")
}

/// Perturbation data whose kernel contains a prescribed polynomial family.
#[derive(Clone, Debug)]
pub struct Planted {
    pub g: Vec<CoeffVec>,
    pub h: Vec<CoeffVec>,
    pub planted: Vec<CoeffVec>,
}

fn images(phi: &LaurentMatrixSymbol, p: &[CoeffVec], n: usize) -> Result<Vec<CoeffVec>> {
    let d = phi.max_power();
    p.iter()
        .map(|pi| {
            let full = phi.apply(pi, n + d)?;
            if full.resized(n).norm() < full.norm() * (1.0 - 1e-15) - 1e-15 {
                return Err(Error::Hypothesis("planted image exceeds the truncation".into()));
            }
            Ok(full.resized(n))
        })
        .collect()
}

/// Orthonormal `G` and `H` with `T_Φ P + Σ ⟨P, G_i⟩ H_i = 0` for an orthonormal family `P`.
///
/// With `A = T_Φ P = QR`, take `H = Q` and `G = −P R^H + P⊥ (I − R R^H)^{1/2}`;
/// this needs `‖T_Φ P‖ ≤ 1`.
pub fn planted_orthonormal(
    rng: &mut ChaCha8Rng,
    phi: &LaurentMatrixSymbol,
    n: usize,
    count: usize,
    degree: usize,
) -> Result<Planted> {
    let m = phi.m();
    if degree + phi.max_power() > n {
        return Err(Error::TruncationTooSmall { n, d: degree + phi.max_power() });
    }
    let both = random_orthonormal(rng, 2 * count, m, n, degree.max(1))?;
    let (p, perp) = both.split_at(count);
    let a = images(phi, p, n)?;
    let amat = DMatrix::from_fn(m * n, count, |r, c| a[c].as_slice()[r]);
    let qr = amat.qr();
    let q = qr.q();
    let r = qr.r();
    let rrh = &r * r.adjoint();
    let eig = nalgebra::SymmetricEigen::new(DMatrix::<C64>::identity(count, count) - &rrh);
    if eig.eigenvalues.iter().any(|&l| l < -1e-12) {
        return Err(Error::Hypothesis(format!(
            "planted family needs ‖T_Φ P‖ ≤ 1 (got {:.4})",
            (1.0 - eig.eigenvalues.min()).sqrt()
        )));
    }
    let sqrt_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::new(l.max(0.0).sqrt(), 0.0)));
    let y = &eig.eigenvectors * sqrt_diag * eig.eigenvectors.adjoint();
    let x = -r.adjoint();
    let g: Vec<CoeffVec> = (0..count)
        .map(|i| {
            let mut gi = CoeffVec::zeros(m, n);
            for k in 0..count {
                gi.axpy(x[(k, i)], &p[k]);
                gi.axpy(y[(k, i)], &perp[k]);
            }
            gi
        })
        .collect();
    let h: Vec<CoeffVec> = (0..count)
        .map(|i| CoeffVec::from_slice(m, n, q.column(i).as_slice()))
        .collect();
    Ok(Planted {
        g,
        h,
        planted: p.to_vec(),
    })
}

/// `G = −P` orthonormal and `H_i = T_Φ P_i` (not normalized).
pub fn planted_g_only(
    rng: &mut ChaCha8Rng,
    phi: &LaurentMatrixSymbol,
    n: usize,
    count: usize,
    degree: usize,
) -> Result<Planted> {
    let m = phi.m();
    if degree + phi.max_power() > n {
        return Err(Error::TruncationTooSmall { n, d: degree + phi.max_power() });
    }
    let p = random_orthonormal(rng, count, m, n, degree.max(1))?;
    let h = images(phi, &p, n)?;
    let g = p.iter().map(|x| -x).collect();
    Ok(Planted { g, h, planted: p })
}
