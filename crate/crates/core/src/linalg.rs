//! Dense SVD helpers with descending singular values and full right factors.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

/// Singular values (descending) and the full `cols × cols` right factor `V`.
pub struct RightSvd {
    pub sigma: Vec<f64>,
    pub v: DMatrix<C64>,
}

/// Singular values (descending) and the thin left factor `U`.
pub struct LeftSvd {
    pub sigma: Vec<f64>,
    pub u: DMatrix<C64>,
}

fn to_faer(a: &DMatrix<C64>) -> faer::Mat<C64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_faer(a: faer::MatRef<'_, C64>) -> DMatrix<C64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn svd_of(a: &DMatrix<C64>, thin: bool) -> faer::linalg::solvers::Svd<C64> {
    let f = to_faer(a);
    let out = if thin { f.thin_svd() } else { f.svd() };
    out.expect("SVD converged")
}

fn sigma_of(svd: &faer::linalg::solvers::Svd<C64>) -> Vec<f64> {
    svd.S().column_vector().iter().map(|s| s.re).collect()
}

/// Dense product through faer's blocked kernels.
pub fn matmul(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let c = to_faer(a) * to_faer(b);
    from_faer(c.as_ref())
}

/// SVD exposing every right singular vector.
pub fn right_svd(a: &DMatrix<C64>) -> RightSvd {
    let (r, c) = a.shape();
    if c == 0 {
        return RightSvd {
            sigma: Vec::new(),
            v: DMatrix::zeros(0, 0),
        };
    }
    if r == 0 {
        return RightSvd {
            sigma: vec![0.0; c],
            v: DMatrix::identity(c, c),
        };
    }
    let svd = svd_of(a, false);
    let mut sigma = sigma_of(&svd);
    sigma.resize(c, 0.0);
    RightSvd {
        sigma,
        v: from_faer(svd.V()),
    }
}

/// Thin SVD exposing the left singular vectors.
pub fn left_svd(a: &DMatrix<C64>) -> LeftSvd {
    let (r, c) = a.shape();
    if r == 0 || c == 0 {
        return LeftSvd {
            sigma: Vec::new(),
            u: DMatrix::zeros(r, 0),
        };
    }
    let svd = svd_of(a, true);
    LeftSvd {
        sigma: sigma_of(&svd),
        u: from_faer(svd.U()),
    }
}

/// `max |(Q^H Q - I)_{ij}|`.
pub fn orthonormality_deviation(q: &DMatrix<C64>) -> f64 {
    let g = q.adjoint() * q;
    let mut dev: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((g[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    dev
}

/// Minimum-norm least-squares solve via SVD.
pub fn lstsq(a: &DMatrix<C64>, b: &DVector<C64>, rcond: f64) -> DVector<C64> {
    if a.ncols() == 0 {
        return DVector::zeros(0);
    }
    let svd = svd_of(a, true);
    let sigma = sigma_of(&svd);
    let u = from_faer(svd.U());
    let v = from_faer(svd.V());
    let eps = rcond * sigma.first().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    let mut y = u.adjoint() * b;
    for (k, s) in sigma.iter().enumerate() {
        y[k] = if *s > eps { y[k] / C64::new(*s, 0.0) } else { C64::new(0.0, 0.0) };
    }
    v * y
}
