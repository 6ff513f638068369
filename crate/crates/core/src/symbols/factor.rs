//! Scalar inner–outer factorization of polynomials with no zeros on the circle.

use super::LaurentMatrixSymbol;
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::f64::consts::PI;

/// Roots closer than this to the unit circle are refused.
pub const EPS_CIRCLE: f64 = 1e-6;

const RECON_GRID: usize = 512;

/// `p = θ ψ` with `θ = u z^k Π b_α` inner and `ψ` outer, `ψ(0) > 0`.
#[derive(Clone, Debug, Serialize)]
pub struct ScalarInnerOuterFactorization {
    pub z_power: usize,
    #[serde(with = "crate::json::cvec")]
    pub zeros: Vec<C64>,
    #[serde(serialize_with = "ser_c64")]
    pub unimodular: C64,
    #[serde(with = "crate::json::cvec")]
    pub outer: Vec<C64>,
    pub residual: f64,
    pub inner_deviation: f64,
}

fn ser_c64<S: serde::Serializer>(c: &C64, s: S) -> std::result::Result<S::Ok, S::Error> {
    crate::json::pair(*c).serialize(s)
}

fn horner(p: &[C64], z: C64) -> C64 {
    p.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * z + c)
}

fn derivative(p: &[C64]) -> Vec<C64> {
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(j, c)| c * j as f64)
        .collect()
}

fn poly_mul(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Strips exactly-negligible top coefficients and returns (low-order zero count, trimmed).
fn normalize(p: &[C64]) -> Result<(usize, Vec<C64>)> {
    let scale = p.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::ZeroPolynomial);
    }
    let tiny = 1e-14 * scale;
    let hi = p.iter().rposition(|c| c.norm() > tiny).expect("nonzero");
    let lo = p.iter().position(|c| c.norm() > tiny).expect("nonzero");
    Ok((lo, p[lo..=hi].to_vec()))
}

/// Roots of `Σ p_j z^j` from companion-matrix eigenvalues, Newton-polished.
pub fn polynomial_roots(p: &[C64]) -> Result<Vec<C64>> {
    let (k, q) = normalize(p)?;
    let mut roots = vec![C64::new(0.0, 0.0); k];
    let deg = q.len() - 1;
    if deg == 0 {
        return Ok(roots);
    }
    let lead = q[deg];
    let mut comp = DMatrix::<C64>::zeros(deg, deg);
    for i in 1..deg {
        comp[(i, i - 1)] = C64::new(1.0, 0.0);
    }
    for i in 0..deg {
        comp[(i, deg - 1)] = -q[i] / lead;
    }
    let eig = comp
        .schur()
        .eigenvalues()
        .ok_or(Error::Eigen)?;
    let dq = derivative(&q);
    for mut r in eig.iter().copied() {
        for _ in 0..4 {
            let d = horner(&dq, r);
            if d.norm() == 0.0 {
                break;
            }
            let step = horner(&q, r) / d;
            if !step.re.is_finite() || !step.im.is_finite() {
                break;
            }
            r -= step;
        }
        roots.push(r);
    }
    Ok(roots)
}

/// Taylor coefficients (degrees `< r`) of `b_α = (|α|/α)(α - z)/(1 - ᾱ z)`.
pub fn blaschke_taylor(alpha: C64, r: usize) -> Vec<C64> {
    let a = alpha.norm();
    let u = a / alpha;
    let s = a * a - 1.0;
    let mut out = Vec::with_capacity(r);
    if r > 0 {
        out.push(C64::new(a, 0.0));
    }
    let mut pow = C64::new(1.0, 0.0);
    for _ in 1..r {
        out.push(u * pow * s);
        pow *= alpha.conj();
    }
    out
}

impl ScalarInnerOuterFactorization {
    /// `θ(z)`.
    pub fn inner_eval(&self, z: C64) -> C64 {
        let mut v = self.unimodular * z.powi(self.z_power as i32);
        for &a in &self.zeros {
            v *= (a.norm() / a) * (a - z) / (C64::new(1.0, 0.0) - a.conj() * z);
        }
        v
    }

    pub fn outer_eval(&self, z: C64) -> C64 {
        horner(&self.outer, z)
    }

    /// Taylor coefficients of `θ` for degrees `< r`.
    pub fn inner_taylor(&self, r: usize) -> Vec<C64> {
        let mut acc = vec![C64::new(0.0, 0.0); r];
        if self.z_power < r {
            acc[self.z_power] = self.unimodular;
        }
        for &a in &self.zeros {
            let b = blaschke_taylor(a, r);
            let full = poly_mul(&acc, &b);
            acc.copy_from_slice(&full[..r]);
        }
        acc
    }

    /// True when the inner part is a monomial, so its Taylor series is finite.
    pub fn inner_is_polynomial(&self) -> bool {
        self.zeros.is_empty()
    }
}

/// Canonical factorization of a scalar polynomial.
pub fn scalar_inner_outer(p: &[C64]) -> Result<ScalarInnerOuterFactorization> {
    let (_, trimmed) = normalize(p)?;
    let lead = *trimmed.last().expect("nonempty");
    let roots = polynomial_roots(p)?;
    let one = C64::new(1.0, 0.0);
    let mut z_power = 0;
    let mut zeros = Vec::new();
    let mut outer = vec![lead];
    for r in roots {
        let a = r.norm();
        if (a - 1.0).abs() < EPS_CIRCLE {
            return Err(Error::RootOnCircle { re: r.re, im: r.im });
        }
        if a < 1e-12 {
            z_power += 1;
        } else if a < 1.0 {
            // z - α = -(α/|α|) b_α(z) (1 - ᾱ z)
            zeros.push(r);
            outer = poly_mul(&outer, &[-(r / a), (r / a) * r.conj()]);
        } else {
            outer = poly_mul(&outer, &[-r, one]);
        }
    }
    let o0 = outer[0];
    let unimodular = o0 / o0.norm();
    for c in outer.iter_mut() {
        *c /= unimodular;
    }
    outer[0] = C64::new(outer[0].re, 0.0);
    let mut fac = ScalarInnerOuterFactorization {
        z_power,
        zeros,
        unimodular,
        outer,
        residual: 0.0,
        inner_deviation: 0.0,
    };
    let mut pmax: f64 = 0.0;
    let mut err: f64 = 0.0;
    let mut dev: f64 = 0.0;
    for t in 0..RECON_GRID {
        let z = C64::from_polar(1.0, 2.0 * PI * t as f64 / RECON_GRID as f64);
        let pz = horner(p, z);
        let th = fac.inner_eval(z);
        pmax = pmax.max(pz.norm());
        err = err.max((th * fac.outer_eval(z) - pz).norm());
        dev = dev.max((th.norm() - 1.0).abs());
    }
    fac.residual = err / pmax;
    fac.inner_deviation = dev;
    Ok(fac)
}

/// Entrywise factorization of an analytic diagonal symbol.
pub fn diagonal_factorization(phi: &LaurentMatrixSymbol) -> Result<Vec<ScalarInnerOuterFactorization>> {
    phi.diagonal_entries()?
        .iter()
        .map(|p| scalar_inner_outer(p))
        .collect()
}

/// `diag(θ_1, …, θ_m)` with Blaschke factors expanded to degrees `< r`.
pub fn diagonal_inner_part(phi: &LaurentMatrixSymbol, r: usize) -> Result<LaurentMatrixSymbol> {
    let facs = diagonal_factorization(phi)?;
    let polys: Vec<Vec<C64>> = facs.iter().map(|f| f.inner_taylor(r)).collect();
    LaurentMatrixSymbol::diagonal(&polys)
}

/// `diag(ψ_1, …, ψ_m)`.
pub fn diagonal_outer_part(phi: &LaurentMatrixSymbol) -> Result<LaurentMatrixSymbol> {
    let facs = diagonal_factorization(phi)?;
    let polys: Vec<Vec<C64>> = facs.iter().map(|f| f.outer.clone()).collect();
    LaurentMatrixSymbol::diagonal(&polys)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn companion_roots_of_two_plus_z() {
        let r = polynomial_roots(&[c(2.0), c(1.0)]).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0] - c(-2.0)).norm() < 1e-14);
    }

    #[test]
    fn roots_of_cubic_reproduce_polynomial() {
        let roots_in = [C64::new(0.3, -0.2), c(-1.7), C64::new(0.0, 2.5)];
        let mut p = vec![c(1.0)];
        for r in roots_in {
            p = poly_mul(&p, &[-r, c(1.0)]);
        }
        let mut got = polynomial_roots(&p).unwrap();
        got.sort_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap());
        for (g, e) in got.iter().zip(roots_in) {
            assert!((g - e).norm() < 1e-12, "{g} vs {e}");
        }
    }

    #[test]
    fn monomial_is_purely_inner() {
        let f = scalar_inner_outer(&[c(0.0), c(0.0), c(0.0), c(1.0)]).unwrap();
        assert_eq!(f.z_power, 3);
        assert!(f.zeros.is_empty());
        assert_eq!(f.outer, vec![c(1.0)]);
        assert_eq!(f.unimodular, c(1.0));
    }

    #[test]
    fn two_plus_z_is_outer() {
        let f = scalar_inner_outer(&[c(2.0), c(1.0)]).unwrap();
        assert_eq!(f.z_power, 0);
        assert!(f.zeros.is_empty());
        assert!((f.unimodular - c(1.0)).norm() < 1e-14);
        assert!((f.outer[0] - c(2.0)).norm() < 1e-13);
        assert!((f.outer[1] - c(1.0)).norm() < 1e-13);
        assert!(f.residual < 1e-12);
    }

    #[test]
    fn z_times_z_minus_half() {
        let f = scalar_inner_outer(&[c(0.0), c(-0.5), c(1.0)]).unwrap();
        assert_eq!(f.z_power, 1);
        assert_eq!(f.zeros.len(), 1);
        assert!((f.zeros[0] - c(0.5)).norm() < 1e-14);
        // inner -z(1/2 - z)/(1 - z/2), outer 1 - z/2
        assert!((f.unimodular - c(-1.0)).norm() < 1e-14);
        assert!((f.outer[0] - c(1.0)).norm() < 1e-14);
        assert!((f.outer[1] - c(-0.5)).norm() < 1e-14);
        assert!(f.residual < 1e-10);
        assert!(f.inner_deviation < 1e-12);
        let z = C64::new(0.3, 0.1);
        let inner = -z * (c(0.5) - z) / (c(1.0) - z / 2.0);
        assert!((f.inner_eval(z) - inner).norm() < 1e-14);
    }

    #[test]
    fn refuses_roots_on_circle() {
        assert!(matches!(
            scalar_inner_outer(&[c(-1.0), c(1.0)]),
            Err(Error::RootOnCircle { .. })
        ));
        assert!(matches!(scalar_inner_outer(&[c(0.0)]), Err(Error::ZeroPolynomial)));
    }

    #[test]
    fn blaschke_taylor_matches_power_series() {
        let a = C64::new(-0.2, 0.6);
        let coeffs = blaschke_taylor(a, 60);
        let z = C64::new(0.4, -0.3);
        let series: C64 = coeffs.iter().enumerate().map(|(j, x)| x * z.powi(j as i32)).sum();
        let exact = (a.norm() / a) * (a - z) / (c(1.0) - a.conj() * z);
        assert!((series - exact).norm() < 1e-14);
    }

    #[test]
    fn diagonal_inner_part_examples() {
        let zp = LaurentMatrixSymbol::monomial(3, 2);
        assert_eq!(diagonal_inner_part(&zp, 8).unwrap(), zp);
        let id = LaurentMatrixSymbol::identity(2);
        assert_eq!(diagonal_inner_part(&id, 8).unwrap(), id);
        let phi = LaurentMatrixSymbol::diagonal(&[vec![c(2.0), c(1.0)], vec![c(0.0), c(1.0)]]).unwrap();
        let th = diagonal_inner_part(&phi, 8).unwrap();
        let expect = LaurentMatrixSymbol::diagonal_monomials(&[0, 1]);
        let diff = th.add(&expect.scale(c(-1.0))).unwrap();
        assert!(diff.coeff_norm() < 1e-13);
    }

    #[test]
    fn diagonal_inner_part_rejects_non_diagonal() {
        let mut a = DMatrix::<C64>::identity(2, 2);
        a[(0, 1)] = c(1.0);
        let s = LaurentMatrixSymbol::constant(a).unwrap();
        assert!(matches!(diagonal_inner_part(&s, 4), Err(Error::NotDiagonal)));
    }
}
