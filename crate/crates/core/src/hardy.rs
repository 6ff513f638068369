//! Truncated coefficient model of `H²(C^m)` and `L²(T, C^m)`.
//!
//! A [`CoeffVec`] holds the Taylor coefficients of an `m`-component function
//! up to degree `N - 1`. Storage is degree-major, so the block for degree `j`
//! is contiguous; only the `(component, degree)` indexing is part of the
//! contract.

use crate::error::{Error, Result};
use crate::json;
use nalgebra::DVector;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::ops::{Add, Mul, Neg, Sub};

/// Truncated element of `H²(C^m)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffVec {
    m: usize,
    n: usize,
    data: Vec<C64>,
}

impl CoeffVec {
    /// Builds from degree-major flat data (`data[j * m + i]`).
    pub fn new(m: usize, n: usize, data: Vec<C64>) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::SizeMismatch("m and N must be positive".into()));
        }
        if data.len() != m * n {
            return Err(Error::SizeMismatch(format!(
                "expected {} coefficients, got {}",
                m * n,
                data.len()
            )));
        }
        if data.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("CoeffVec"));
        }
        Ok(Self { m, n, data })
    }

    pub fn zeros(m: usize, n: usize) -> Self {
        assert!(m > 0 && n > 0, "m and N must be positive");
        Self {
            m,
            n,
            data: vec![C64::new(0.0, 0.0); m * n],
        }
    }

    /// `e_i ⊗ z^j`.
    pub fn monomial(m: usize, n: usize, i: usize, j: usize) -> Self {
        let mut v = Self::zeros(m, n);
        v.set(i, j, C64::new(1.0, 0.0));
        v
    }

    /// The reproducing kernel at the origin in component `i`.
    pub fn k0(m: usize, n: usize, i: usize) -> Self {
        Self::monomial(m, n, i, 0)
    }

    pub fn from_fn(m: usize, n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut v = Self::zeros(m, n);
        for j in 0..n {
            for i in 0..m {
                v.data[j * m + i] = f(i, j);
            }
        }
        v
    }

    /// Builds from per-component coefficient lists, zero-padding each to `n`.
    pub fn from_components(comps: &[Vec<C64>], n: usize) -> Result<Self> {
        let m = comps.len();
        if m == 0 || n == 0 {
            return Err(Error::SizeMismatch("empty CoeffVec".into()));
        }
        let mut v = Self::zeros(m, n);
        for (i, c) in comps.iter().enumerate() {
            if c.len() > n {
                return Err(Error::SizeMismatch(format!(
                    "component {i} has degree {} but N = {n}",
                    c.len() - 1
                )));
            }
            for (j, x) in c.iter().enumerate() {
                v.data[j * m + i] = *x;
            }
        }
        if v.data.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("CoeffVec"));
        }
        Ok(v)
    }

    /// Scalar polynomial (m = 1) from real coefficients.
    pub fn scalar(coeffs: &[f64], n: usize) -> Self {
        let c: Vec<C64> = coeffs.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_components(&[c], n).expect("valid scalar polynomial")
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[j * self.m + i]
    }

    pub fn set(&mut self, i: usize, j: usize, c: C64) {
        self.data[j * self.m + i] = c;
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn component(&self, i: usize) -> Vec<C64> {
        (0..self.n).map(|j| self.get(i, j)).collect()
    }

    pub fn components(&self) -> Vec<Vec<C64>> {
        (0..self.m).map(|i| self.component(i)).collect()
    }

    pub fn to_dvector(&self) -> DVector<C64> {
        DVector::from_column_slice(&self.data)
    }

    pub fn from_dvector(m: usize, n: usize, v: &DVector<C64>) -> Self {
        assert_eq!(v.len(), m * n, "flat length mismatch");
        Self {
            m,
            n,
            data: v.iter().copied().collect(),
        }
    }

    pub fn from_slice(m: usize, n: usize, v: &[C64]) -> Self {
        assert_eq!(v.len(), m * n, "flat length mismatch");
        Self {
            m,
            n,
            data: v.to_vec(),
        }
    }

    pub fn same_shape(&self, other: &Self) -> Result<()> {
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

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `⟨self, other⟩`, conjugate-linear in `other`.
    pub fn inner_product(&self, other: &Self) -> Result<C64> {
        self.same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b.conj())
            .sum())
    }

    /// `S F = zF`; also returns the norm of the dropped top coefficient block.
    pub fn forward_shift(&self) -> (Self, f64) {
        let m = self.m;
        let mut out = Self::zeros(m, self.n);
        out.data[m..].copy_from_slice(&self.data[..m * (self.n - 1)]);
        let dropped = self.data[m * (self.n - 1)..]
            .iter()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt();
        (out, dropped)
    }

    /// `S* F = (F - F(0)) / z`.
    pub fn backward_shift(&self) -> Self {
        let m = self.m;
        let mut out = Self::zeros(m, self.n);
        out.data[..m * (self.n - 1)].copy_from_slice(&self.data[m..]);
        out
    }

    /// `(S*)^k F`.
    pub fn backward_shift_by(&self, k: usize) -> Self {
        let m = self.m;
        let mut out = Self::zeros(m, self.n);
        if k < self.n {
            out.data[..m * (self.n - k)].copy_from_slice(&self.data[m * k..]);
        }
        out
    }

    /// `z^k F`, dropping degrees beyond `N - 1`.
    pub fn shift_by(&self, k: usize) -> Self {
        let m = self.m;
        let mut out = Self::zeros(m, self.n);
        if k < self.n {
            out.data[m * k..].copy_from_slice(&self.data[..m * (self.n - k)]);
        }
        out
    }

    pub fn eval_at_zero(&self) -> Vec<C64> {
        self.data[..self.m].to_vec()
    }

    /// Value at a point of the closed disk (Horner per component).
    pub fn eval(&self, z: C64) -> Vec<C64> {
        (0..self.m)
            .map(|i| {
                (0..self.n)
                    .rev()
                    .fold(C64::new(0.0, 0.0), |acc, j| acc * z + self.get(i, j))
            })
            .collect()
    }

    /// Truncates or zero-pads to a new `N`.
    pub fn resized(&self, n: usize) -> Self {
        let mut out = Self::zeros(self.m, n);
        let keep = self.m * n.min(self.n);
        out.data[..keep].copy_from_slice(&self.data[..keep]);
        out
    }

    /// Degree of the highest nonzero coefficient, or `None` for zero.
    pub fn degree(&self, tol: f64) -> Option<usize> {
        (0..self.n)
            .rev()
            .find(|&j| (0..self.m).any(|i| self.get(i, j).norm() > tol))
    }

    /// Multiplies by a scalar function `k` (an m = 1 vector), truncating to `n`.
    pub fn scalar_mul(&self, k: &CoeffVec, n: usize) -> Self {
        assert_eq!(k.m, 1, "multiplier must be scalar");
        let mut out = Self::zeros(self.m, n);
        for a in 0..k.n.min(n) {
            let c = k.data[a];
            if c == C64::new(0.0, 0.0) {
                continue;
            }
            for b in 0..self.n.min(n - a) {
                for i in 0..self.m {
                    out.data[(a + b) * self.m + i] += c * self.data[b * self.m + i];
                }
            }
        }
        out
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            m: self.m,
            n: self.n,
            data: self.data.iter().map(|x| x * c).collect(),
        }
    }

    pub fn axpy(&mut self, c: C64, x: &Self) {
        assert!(self.m == x.m && self.n == x.n, "shape mismatch in axpy");
        for (a, b) in self.data.iter_mut().zip(&x.data) {
            *a += c * b;
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert!(self.m == other.m && self.n == other.n);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// `⟨F, G⟩`, conjugate-linear in `G`.
pub fn inner_product(f: &CoeffVec, g: &CoeffVec) -> Result<C64> {
    f.inner_product(g)
}

impl Add for &CoeffVec {
    type Output = CoeffVec;
    fn add(self, rhs: &CoeffVec) -> CoeffVec {
        let mut out = self.clone();
        out.axpy(C64::new(1.0, 0.0), rhs);
        out
    }
}

impl Sub for &CoeffVec {
    type Output = CoeffVec;
    fn sub(self, rhs: &CoeffVec) -> CoeffVec {
        let mut out = self.clone();
        out.axpy(C64::new(-1.0, 0.0), rhs);
        out
    }
}

impl Neg for &CoeffVec {
    type Output = CoeffVec;
    fn neg(self) -> CoeffVec {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul<C64> for &CoeffVec {
    type Output = CoeffVec;
    fn mul(self, c: C64) -> CoeffVec {
        self.scale(c)
    }
}

impl Mul<f64> for &CoeffVec {
    type Output = CoeffVec;
    fn mul(self, c: f64) -> CoeffVec {
        self.scale(C64::new(c, 0.0))
    }
}

#[derive(Serialize, Deserialize)]
struct CoeffVecJson {
    m: usize,
    #[serde(rename = "N")]
    n: usize,
    coeffs: Vec<Vec<[f64; 2]>>,
}

impl Serialize for CoeffVec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CoeffVecJson {
            m: self.m,
            n: self.n,
            coeffs: (0..self.m)
                .map(|i| self.component(i).into_iter().map(json::pair).collect())
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CoeffVec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = CoeffVecJson::deserialize(d)?;
        if raw.coeffs.len() != raw.m {
            return Err(D::Error::custom(format!(
                "expected {} components, got {}",
                raw.m,
                raw.coeffs.len()
            )));
        }
        let comps = raw
            .coeffs
            .into_iter()
            .map(|c| {
                c.into_iter()
                    .map(json::check_finite::<D::Error>)
                    .collect::<std::result::Result<Vec<_>, _>>()
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        CoeffVec::from_components(&comps, raw.n).map_err(D::Error::custom)
    }
}

/// Truncated element of `L²(T, C^m)` with Fourier indices in `[-N, N)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentVec {
    m: usize,
    n: usize,
    data: Vec<C64>,
}

impl LaurentVec {
    pub fn zeros(m: usize, n: usize) -> Self {
        assert!(m > 0 && n > 0, "m and N must be positive");
        Self {
            m,
            n,
            data: vec![C64::new(0.0, 0.0); 2 * m * n],
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn idx(&self, i: usize, j: i64) -> usize {
        let n = self.n as i64;
        assert!((-n..n).contains(&j), "Fourier index {j} outside [-{n}, {n})");
        (j + n) as usize * self.m + i
    }

    pub fn get(&self, i: usize, j: i64) -> C64 {
        self.data[self.idx(i, j)]
    }

    pub fn set(&mut self, i: usize, j: i64, c: C64) {
        let k = self.idx(i, j);
        self.data[k] = c;
    }

    pub fn from_analytic(f: &CoeffVec) -> Self {
        let mut out = Self::zeros(f.m, f.n);
        let off = f.m * f.n;
        out.data[off..].copy_from_slice(&f.data);
        out
    }

    /// Componentwise Riesz projection: keeps indices `j ≥ 0`.
    pub fn riesz_project(&self) -> CoeffVec {
        let off = self.m * self.n;
        CoeffVec {
            m: self.m,
            n: self.n,
            data: self.data[off..].to_vec(),
        }
    }

    /// The strictly negative part, lying in the conjugate of `H²₀`.
    pub fn coanalytic_part(&self) -> Self {
        let mut out = self.clone();
        let off = self.m * self.n;
        out.data[off..].fill(C64::new(0.0, 0.0));
        out
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// Componentwise Riesz projection `P_m`.
pub fn riesz_project(f: &LaurentVec) -> CoeffVec {
    f.riesz_project()
}
