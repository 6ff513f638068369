//! Matrix trigonometric polynomial symbols `Φ(e^{iθ}) = Σ_k Φ_k e^{ikθ}`.

mod factor;

pub use factor::{
    blaschke_taylor, diagonal_factorization, diagonal_inner_part, diagonal_outer_part,
    polynomial_roots, scalar_inner_outer, ScalarInnerOuterFactorization, EPS_CIRCLE,
};

use crate::error::{Error, Result};
use crate::hardy::CoeffVec;
use crate::json;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeMap;
use std::f64::consts::PI;

pub const DEFAULT_GRID: usize = 2048;
pub const DEFAULT_INNER_TOL: f64 = 1e-8;
pub const DEFAULT_INVERTIBILITY_MARGIN: f64 = 1e-3;

/// `Φ = Σ_k Φ_k z^k` with `Φ_k ∈ C^{m×m}`; zero coefficients are not stored.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentMatrixSymbol {
    m: usize,
    terms: BTreeMap<i64, DMatrix<C64>>,
}

/// Result of the grid isometry test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InnerCheck {
    pub inner: bool,
    pub deviation: f64,
}

/// Result of the closed-disk determinant test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InvertibilityCheck {
    pub invertible: bool,
    pub min_abs_det: f64,
}

/// Truncated Taylor inverse and its reconstruction residual.
#[derive(Clone, Debug)]
pub struct AnalyticInverse {
    pub inverse: LaurentMatrixSymbol,
    pub residual: f64,
}

impl LaurentMatrixSymbol {
    pub fn new(m: usize, terms: impl IntoIterator<Item = (i64, DMatrix<C64>)>) -> Result<Self> {
        if m == 0 {
            return Err(Error::SizeMismatch("symbol size must be positive".into()));
        }
        let mut out = Self::zero(m);
        for (k, mat) in terms {
            if mat.nrows() != m || mat.ncols() != m {
                return Err(Error::SizeMismatch(format!(
                    "coefficient at power {k} is {}x{}, expected {m}x{m}",
                    mat.nrows(),
                    mat.ncols()
                )));
            }
            if mat.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                return Err(Error::NonFinite("symbol coefficient"));
            }
            out.add_term(k, &mat);
        }
        Ok(out)
    }

    pub fn zero(m: usize) -> Self {
        Self {
            m,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(mat: DMatrix<C64>) -> Result<Self> {
        let m = mat.nrows();
        Self::new(m, [(0, mat)])
    }

    pub fn identity(m: usize) -> Self {
        Self::monomial(m, 0)
    }

    /// `z^k I`.
    pub fn monomial(m: usize, k: i64) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(k, DMatrix::identity(m, m));
        Self { m, terms }
    }

    /// The diagonal shift symbol `diag(z, …, z)`.
    pub fn shift(m: usize) -> Self {
        Self::monomial(m, 1)
    }

    /// `diag(p_1, …, p_m)` from analytic polynomial coefficient lists.
    pub fn diagonal(polys: &[Vec<C64>]) -> Result<Self> {
        let m = polys.len();
        let mut terms: Vec<(i64, DMatrix<C64>)> = Vec::new();
        let deg = polys.iter().map(Vec::len).max().unwrap_or(0);
        for k in 0..deg {
            let mut mat = DMatrix::zeros(m, m);
            for (i, p) in polys.iter().enumerate() {
                if let Some(c) = p.get(k) {
                    mat[(i, i)] = *c;
                }
            }
            terms.push((k as i64, mat));
        }
        Self::new(m, terms)
    }

    /// `diag(z^{s_1}, …, z^{s_m})`.
    pub fn diagonal_monomials(powers: &[i64]) -> Self {
        let m = powers.len();
        let mut out = Self::zero(m);
        for (i, &s) in powers.iter().enumerate() {
            let mut mat = DMatrix::zeros(m, m);
            mat[(i, i)] = C64::new(1.0, 0.0);
            out.add_term(s, &mat);
        }
        out
    }

    /// Scalar (m = 1) Laurent polynomial from `(power, coefficient)` pairs.
    pub fn scalar(terms: &[(i64, C64)]) -> Self {
        let mut out = Self::zero(1);
        for &(k, c) in terms {
            out.add_term(k, &DMatrix::from_element(1, 1, c));
        }
        out
    }

    fn add_term(&mut self, k: i64, mat: &DMatrix<C64>) {
        let zero = C64::new(0.0, 0.0);
        let entry = self
            .terms
            .entry(k)
            .or_insert_with(|| DMatrix::zeros(self.m, self.m));
        *entry += mat;
        if entry.iter().all(|c| *c == zero) {
            self.terms.remove(&k);
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &DMatrix<C64>)> {
        self.terms.iter().map(|(k, v)| (*k, v))
    }

    pub fn coeff(&self, k: i64) -> DMatrix<C64> {
        self.terms
            .get(&k)
            .cloned()
            .unwrap_or_else(|| DMatrix::zeros(self.m, self.m))
    }

    pub fn coeff_ref(&self, k: i64) -> Option<&DMatrix<C64>> {
        self.terms.get(&k)
    }

    /// Largest `|k|` with `Φ_k ≠ 0`.
    pub fn bandwidth(&self) -> usize {
        self.terms.keys().map(|k| k.unsigned_abs() as usize).max().unwrap_or(0)
    }

    /// Largest positive power present (0 if none).
    pub fn max_power(&self) -> usize {
        self.terms.keys().next_back().map_or(0, |&k| k.max(0) as usize)
    }

    /// Largest negative power magnitude present (0 if none).
    pub fn min_power(&self) -> usize {
        self.terms.keys().next().map_or(0, |&k| (-k).max(0) as usize)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_analytic(&self) -> bool {
        self.terms.keys().all(|&k| k >= 0)
    }

    pub fn is_coanalytic(&self) -> bool {
        self.terms.keys().all(|&k| k <= 0)
    }

    pub fn is_diagonal(&self) -> bool {
        self.terms.values().all(|mat| {
            (0..self.m).all(|i| (0..self.m).all(|j| i == j || mat[(i, j)] == C64::new(0.0, 0.0)))
        })
    }

    /// Sum of Frobenius norms of the coefficients; bounds the sup norm on the circle.
    pub fn coeff_norm(&self) -> f64 {
        self.terms.values().map(|m| m.norm()).sum()
    }

    pub fn multiply(&self, other: &Self) -> Result<Self> {
        if self.m != other.m {
            return Err(Error::SizeMismatch(format!(
                "symbol sizes {} and {}",
                self.m, other.m
            )));
        }
        let mut out = Self::zero(self.m);
        for (a, ma) in &self.terms {
            for (b, mb) in &other.terms {
                out.add_term(a + b, &(ma * mb));
            }
        }
        Ok(out)
    }

    /// `(Φ*)_k = (Φ_{-k})^H`.
    pub fn adjoint(&self) -> Self {
        Self {
            m: self.m,
            terms: self.terms.iter().map(|(k, v)| (-k, v.adjoint())).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.m != other.m {
            return Err(Error::SizeMismatch(format!(
                "symbol sizes {} and {}",
                self.m, other.m
            )));
        }
        let mut out = self.clone();
        for (k, v) in &other.terms {
            out.add_term(*k, v);
        }
        Ok(out)
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = Self::zero(self.m);
        for (k, v) in &self.terms {
            out.add_term(*k, &(v * c));
        }
        out
    }

    /// Value at a nonzero point `z` (negative powers use `z^{-1}`).
    pub fn eval(&self, z: C64) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.m, self.m);
        for (k, v) in &self.terms {
            out += v * z.powi(*k as i32);
        }
        out
    }

    fn boundary_grid(&self, grid_size: usize) -> impl Iterator<Item = C64> {
        let g = grid_size.max(4 * (2 * self.bandwidth() + 1));
        (0..g).map(move |t| C64::from_polar(1.0, 2.0 * PI * t as f64 / g as f64))
    }

    /// Grid test of `Θ(e^{iθ})^H Θ(e^{iθ}) = I`; the deviation is the largest Frobenius error.
    pub fn is_inner(&self, grid_size: usize, tol: f64) -> InnerCheck {
        let id = DMatrix::<C64>::identity(self.m, self.m);
        let deviation = if self.is_analytic() {
            self.boundary_grid(grid_size)
                .map(|z| {
                    let v = self.eval(z);
                    (v.adjoint() * v - &id).norm()
                })
                .fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        InnerCheck {
            inner: deviation <= tol,
            deviation,
        }
    }

    /// Minimum of `|det Φ(z)|` over a radial × angular sample of the closed disk.
    pub fn is_invertible_analytic(&self, grid_size: usize, margin: f64) -> Result<InvertibilityCheck> {
        if !self.is_analytic() {
            return Err(Error::NotAnalytic);
        }
        let radial = 16;
        let mut min_abs_det = self.eval(C64::new(0.0, 0.0)).determinant().norm();
        for r in 1..=radial {
            let rho = r as f64 / radial as f64;
            for z in self.boundary_grid(grid_size) {
                let d = self.eval(z * rho).determinant().norm();
                min_abs_det = min_abs_det.min(d);
            }
        }
        Ok(InvertibilityCheck {
            invertible: min_abs_det >= margin,
            min_abs_det,
        })
    }

    /// Taylor coefficients `B_0 … B_K` of `Φ(z)^{-1}`.
    pub fn invert_analytic(&self, k: usize) -> Result<AnalyticInverse> {
        if !self.is_analytic() {
            return Err(Error::NotAnalytic);
        }
        let a0_inv = self
            .coeff(0)
            .try_inverse()
            .ok_or(Error::SingularConstantTerm)?;
        if !a0_inv.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
            return Err(Error::SingularConstantTerm);
        }
        let d = self.max_power();
        let mut b: Vec<DMatrix<C64>> = vec![a0_inv.clone()];
        for j in 1..=k {
            let mut acc = DMatrix::zeros(self.m, self.m);
            for t in 1..=j.min(d) {
                if let Some(at) = self.terms.get(&(t as i64)) {
                    acc += at * &b[j - t];
                }
            }
            b.push(-(&a0_inv * acc));
        }
        let inverse = Self::new(self.m, b.iter().cloned().enumerate().map(|(j, v)| (j as i64, v)))?;
        let product = self.multiply(&inverse)?;
        let id = DMatrix::<C64>::identity(self.m, self.m);
        let residual = (0..=k.saturating_sub(d))
            .map(|j| {
                let pj = product.coeff(j as i64);
                if j == 0 { (pj - &id).norm() } else { pj.norm() }
            })
            .fold(0.0, f64::max);
        let scale = self.coeff_norm().max(1.0) * b.iter().map(|x| x.norm()).fold(1.0, f64::max);
        if residual > 1e-10 * scale {
            return Err(Error::InversionResidual(residual));
        }
        Ok(AnalyticInverse { inverse, residual })
    }

    /// `P_+(Φ F)` truncated to degrees `< out_n`.
    pub fn apply(&self, f: &CoeffVec, out_n: usize) -> Result<CoeffVec> {
        if f.m() != self.m {
            return Err(Error::SizeMismatch(format!(
                "symbol size {} vs vector components {}",
                self.m,
                f.m()
            )));
        }
        let m = self.m;
        let mut out = vec![C64::new(0.0, 0.0); m * out_n];
        let src = f.as_slice();
        for (&k, mat) in &self.terms {
            for t in 0..f.n() {
                let j = t as i64 + k;
                if j < 0 || j >= out_n as i64 {
                    continue;
                }
                let j = j as usize;
                for r in 0..m {
                    let mut acc = C64::new(0.0, 0.0);
                    for c in 0..m {
                        acc += mat[(r, c)] * src[t * m + c];
                    }
                    out[j * m + r] += acc;
                }
            }
        }
        CoeffVec::new(m, out_n, out)
    }

    /// Diagonal entries as ascending coefficient lists, if the symbol is analytic and diagonal.
    pub fn diagonal_entries(&self) -> Result<Vec<Vec<C64>>> {
        if !self.is_diagonal() {
            return Err(Error::NotDiagonal);
        }
        if !self.is_analytic() {
            return Err(Error::NotAnalytic);
        }
        let d = self.max_power();
        Ok((0..self.m)
            .map(|i| (0..=d).map(|k| self.coeff(k as i64)[(i, i)]).collect())
            .collect())
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    power: i64,
    #[serde(with = "json::cmat")]
    matrix: DMatrix<C64>,
}

#[derive(Serialize, Deserialize)]
struct SymbolJson {
    m: usize,
    terms: Vec<TermJson>,
}

impl Serialize for LaurentMatrixSymbol {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SymbolJson {
            m: self.m,
            terms: self
                .terms
                .iter()
                .map(|(k, v)| TermJson {
                    power: *k,
                    matrix: v.clone(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LaurentMatrixSymbol {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = SymbolJson::deserialize(d)?;
        Self::new(raw.m, raw.terms.into_iter().map(|t| (t.power, t.matrix))).map_err(D::Error::custom)
    }
}
