//! Coordinates of a nearly backward-shift invariant subspace.
//!
//! Every `F ∈ M` is written as `F = F₀K₀ + Σ_j z k_j E_j` where the columns of
//! `F₀` span `M ⊖ (M ∩ zH²)` and `E` is an orthonormal defect frame.

pub mod rank_one;

use crate::error::{Error, Result};
use crate::hardy::CoeffVec;
use crate::linalg::matmul;
use crate::near_invariance::compute_defect;
use crate::subspace::{RankPolicy, Subspace};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;

pub use rank_one::*;

/// Relative tolerance for the isometry and reconstruction identities.
pub const TOL_REP: f64 = 1e-8;
/// Gram–Schmidt drops residuals below this norm.
pub const GS_DROP: f64 = 1e-10;
/// Membership tolerance for the shifted coordinate data.
pub const TOL_INVARIANCE: f64 = 1e-6;
/// Frame containment tolerance for the supplied defect space.
const TOL_FRAME: f64 = 1e-6;
/// Coefficients kept beyond the truncation degree.
const EXTRA_STEPS: usize = 9;
/// Cap on doublings when summing the coordinate Gram series.
const MAX_DOUBLINGS: usize = 24;

/// `W`, `F₀` and `E` for one subspace.
#[derive(Clone, Debug)]
pub struct RepresentationFrame {
    m_space: Subspace,
    w: Vec<CoeffVec>,
    w_source: Vec<usize>,
    e: Vec<CoeffVec>,
    slice_dim: usize,
    /// `[W*Q; E*T] X^n` for `n < keep`, with `Q` the basis of `M`.
    rows: Vec<DMatrix<C64>>,
    /// `X^keep`.
    x_keep: DMatrix<C64>,
    /// `Σ_n X^{n*} C*C X^n` over all `n`.
    gram: DMatrix<C64>,
}

/// Default invariance depth.
pub fn default_depth(n: usize) -> usize {
    8.min(n / 2)
}

/// Builds the frame from `M` and a space containing its defect.
pub fn build_frame(m: &Subspace, defect: &Subspace, policy: &RankPolicy) -> Result<RepresentationFrame> {
    let (mm, n) = (m.m(), m.n());
    if defect.m() != mm || defect.n() != n {
        return Err(Error::ShapeMismatch {
            m: mm,
            n,
            got_m: defect.m(),
            got_n: defect.n(),
        });
    }
    let mut w: Vec<CoeffVec> = Vec::new();
    let mut w_source = Vec::new();
    for i in 0..mm {
        let mut v = m.project(&CoeffVec::k0(mm, n, i))?;
        for _ in 0..2 {
            for q in &w {
                let c = v.inner_product(q)?;
                v.axpy(-c, q);
            }
        }
        let nv = v.norm();
        if nv >= GS_DROP {
            w.push(v.scale(C64::new(1.0 / nv, 0.0)));
            w_source.push(i);
        }
    }
    let perp: Vec<CoeffVec> = defect
        .vectors()
        .iter()
        .map(|v| Ok(v - &m.project(v)?))
        .collect::<Result<_>>()?;
    let e_space = if perp.is_empty() {
        Subspace::zero(mm, n)
    } else {
        Subspace::span_of(mm, n, &perp, policy)?
    };
    let computed = compute_defect(m, policy);
    let c = computed.defect_basis.is_contained_in(&e_space, TOL_FRAME)?;
    if !c.contained {
        return Err(Error::NotContained(c.residual));
    }
    let e = e_space.vectors();
    let (rows, x_keep, gram) = step_operators(m, &w, &e);
    Ok(RepresentationFrame {
        m_space: m.clone(),
        w,
        w_source,
        e,
        slice_dim: m.zero_at_origin_slice(policy).dim(),
        rows,
        x_keep,
        gram,
    })
}

fn columns(vs: &[CoeffVec], len: usize) -> DMatrix<C64> {
    DMatrix::from_fn(len, vs.len(), |i, k| vs[k].as_slice()[i])
}

/// One step of the peeling recursion in the coordinates of `M`.
///
/// With `T = S*(I − WW*)Q` the step is `c ↦ Xc`, `X = Q*T`, and it emits
/// `a = W*Q c` and `b = E*T c`.
fn step_operators(m: &Subspace, w: &[CoeffVec], e: &[CoeffVec]) -> (Vec<DMatrix<C64>>, DMatrix<C64>, DMatrix<C64>) {
    let (mm, n) = (m.m(), m.n());
    let len = mm * n;
    let q = m.basis();
    let d = q.ncols();
    let wm = columns(w, len);
    let em = columns(e, len);
    let am = wm.adjoint() * q;
    let y = q - &wm * &am;
    let mut t = DMatrix::zeros(len, d);
    if len > mm {
        t.rows_mut(0, len - mm).copy_from(&y.rows(mm, len - mm));
    }
    let x = matmul(&q.adjoint(), &t);
    let bm = em.adjoint() * &t;
    let mut c = DMatrix::zeros(w.len() + e.len(), d);
    c.rows_mut(0, w.len()).copy_from(&am);
    c.rows_mut(w.len(), e.len()).copy_from(&bm);

    let keep = n + EXTRA_STEPS;
    let mut rows = Vec::with_capacity(keep);
    let mut cur = c.clone();
    let mut x_keep = DMatrix::identity(d, d);
    for _ in 0..keep {
        let next = &cur * &x;
        rows.push(std::mem::replace(&mut cur, next));
        x_keep = matmul(&x_keep, &x);
    }

    let mut gram = c.adjoint() * &c;
    let mut xk = x;
    for _ in 0..MAX_DOUBLINGS {
        if xk.norm() < 1e-15 {
            break;
        }
        gram += matmul(&xk.adjoint(), &matmul(&gram, &xk));
        xk = matmul(&xk, &xk);
    }
    (rows, x_keep, gram)
}

/// Frame whose defect space is the computed one.
pub fn build_frame_auto(m: &Subspace, policy: &RankPolicy) -> Result<RepresentationFrame> {
    let d = compute_defect(m, policy);
    build_frame(m, &d.defect_basis, policy)
}

impl RepresentationFrame {
    pub fn subspace(&self) -> &Subspace {
        &self.m_space
    }

    pub fn r(&self) -> usize {
        self.w.len()
    }

    pub fn p(&self) -> usize {
        self.e.len()
    }

    pub fn w(&self) -> &[CoeffVec] {
        &self.w
    }

    /// Index `i` of the `k₀⊗e_i` each column of `W` came from.
    pub fn w_source(&self) -> &[usize] {
        &self.w_source
    }

    pub fn e(&self) -> &[CoeffVec] {
        &self.e
    }

    pub fn vanishing_case(&self) -> bool {
        self.w.is_empty()
    }

    /// `dim M − dim(M ∩ zH²) − r`; zero for a consistent frame.
    pub fn rank_defect(&self) -> i64 {
        self.m_space.dim() as i64 - self.slice_dim as i64 - self.r() as i64
    }

    /// Taylor coefficient `j` of `F₀` as an `m×r` matrix.
    pub fn f0_coeff(&self, j: usize) -> DMatrix<C64> {
        let mm = self.m_space.m();
        DMatrix::from_fn(mm, self.r(), |i, k| {
            if j < self.w[k].n() {
                self.w[k].get(i, j)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// Largest deviation from orthonormality of `W ∪ E`, plus `max |⟨W, zE⟩|`.
    pub fn orthogonality(&self) -> f64 {
        let all: Vec<&CoeffVec> = self.w.iter().chain(&self.e).collect();
        let mut dev: f64 = 0.0;
        for (a, x) in all.iter().enumerate() {
            for (b, y) in all.iter().enumerate() {
                let t = if a == b { 1.0 } else { 0.0 };
                let ip = x.inner_product(y).expect("shared shape");
                dev = dev.max((ip - C64::new(t, 0.0)).norm());
            }
        }
        dev
    }

    fn membership_residual(&self, v: &CoeffVec) -> f64 {
        self.m_space.distance(&v.resized(self.m_space.n()).to_dvector())
    }
}

/// `(K₀, k₁…k_p)` for one vector.
#[derive(Clone, Debug)]
pub struct Coordinates {
    pub k0: Option<CoeffVec>,
    pub k: Vec<CoeffVec>,
    pub source_norm: f64,
    pub steps: usize,
    /// Norm of the unresolved remainder after the last step.
    pub tail_norm: f64,
    pub isometry_residual: f64,
    pub reconstruction_residual: f64,
}

impl Coordinates {
    pub fn len(&self) -> usize {
        self.steps
    }

    pub fn is_empty(&self) -> bool {
        self.steps == 0
    }

    /// `‖K₀‖² + Σ‖k_j‖²`.
    pub fn norm_sq(&self) -> f64 {
        self.k0.as_ref().map_or(0.0, CoeffVec::norm_sq) + self.k.iter().map(CoeffVec::norm_sq).sum::<f64>()
    }

    /// Componentwise `(S*)^n`.
    pub fn backward_shift_by(&self, n: usize) -> Self {
        Self {
            k0: self.k0.as_ref().map(|v| v.backward_shift_by(n)),
            k: self.k.iter().map(|v| v.backward_shift_by(n)).collect(),
            ..self.clone()
        }
    }
}

/// `F₀K₀ + Σ z k_j E_j`, truncated to degree `< out_n`.
pub fn reassemble(frame: &RepresentationFrame, k0: Option<&CoeffVec>, k: &[CoeffVec], out_n: usize) -> CoeffVec {
    let mm = frame.m_space.m();
    let mut out = CoeffVec::zeros(mm, out_n);
    if let Some(k0) = k0 {
        for (i, w) in frame.w.iter().enumerate() {
            let c = CoeffVec::from_components(&[k0.component(i)], k0.n()).expect("one component");
            out = &out + &w.resized(out_n).scalar_mul(&c, out_n);
        }
    }
    for (e, kj) in frame.e.iter().zip(k) {
        let ze = e.resized(out_n).shift_by(1);
        out = &out + &ze.scalar_mul(kj, out_n);
    }
    out
}

/// Recovers the coordinates of `F ∈ M` by peeling `W`-parts and defect parts.
///
/// Step `n` splits `G_n = W a_n + F_n` with `F_n(0) = 0` and then
/// `S*F_n = G_{n+1} + E b_n`; `K₀` and `k_j` collect `a_n` and `b_n`.
/// The first `N + 9` coefficients are kept, which fixes every reassembled
/// Taylor coefficient of degree `< N` after up to eight backward shifts.
/// The isometry uses the full series through the precomputed Gram sum.
pub fn extract_coordinates(f: &CoeffVec, frame: &RepresentationFrame) -> Result<Coordinates> {
    let m = &frame.m_space;
    let (mm, n) = (m.m(), m.n());
    if f.m() != mm || f.n() != n {
        return Err(Error::ShapeMismatch {
            m: mm,
            n,
            got_m: f.m(),
            got_n: f.n(),
        });
    }
    let fnorm = f.norm();
    let (r, p) = (frame.r(), frame.p());
    let keep = frame.rows.len();
    if fnorm == 0.0 {
        return Ok(Coordinates {
            k0: (r > 0).then(|| CoeffVec::zeros(r, keep)),
            k: vec![CoeffVec::zeros(1, keep); p],
            source_norm: 0.0,
            steps: keep,
            tail_norm: 0.0,
            isometry_residual: 0.0,
            reconstruction_residual: 0.0,
        });
    }
    let fv = f.to_dvector();
    let outside = m.distance(&fv) / fnorm;
    if outside > TOL_REP {
        return Err(Error::NotInSubspace(outside));
    }
    let c0 = m.basis().adjoint() * &fv;
    let seq: Vec<_> = frame.rows.iter().map(|row| row * &c0).collect();
    let k0 = (r > 0).then(|| CoeffVec::from_fn(r, keep, |i, j| seq[j][i]));
    let k: Vec<CoeffVec> = (0..p).map(|t| CoeffVec::from_fn(1, keep, |_, j| seq[j][r + t])).collect();
    let back = reassemble(frame, k0.as_ref(), &k, n);
    let reconstruction_residual = (f - &back).norm() / fnorm;
    let series = (c0.adjoint() * &frame.gram * &c0)[(0, 0)].re;
    let coords = Coordinates {
        k0,
        k,
        source_norm: fnorm,
        steps: keep,
        tail_norm: (&frame.x_keep * &c0).norm(),
        isometry_residual: (fnorm * fnorm - series).abs() / (fnorm * fnorm),
        reconstruction_residual,
    };
    if reconstruction_residual > TOL_REP {
        return Err(Error::FrameDeficient(reconstruction_residual));
    }
    Ok(coords)
}

/// Largest relative membership residual of the reassembled `(S*)^n` data, per `n`.
#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    pub depth: usize,
    pub residuals: Vec<f64>,
}

impl InvarianceReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn passed(&self, tol: f64) -> bool {
        self.max_residual() <= tol
    }
}

/// Shifts each coordinate tuple `n = 1…depth` times and tests the reassembled vector against `M`.
///
/// Membership is measured on Taylor coefficients of degree `< N`; depths past
/// eight leave the kept coefficients short.
pub fn check_coordinate_space_invariance(
    frame: &RepresentationFrame,
    coords: &[Coordinates],
    depth: usize,
) -> InvarianceReport {
    let n = frame.m_space.n();
    let residuals = (1..=depth)
        .map(|s| {
            coords
                .iter()
                .filter(|c| c.source_norm > 0.0)
                .map(|c| {
                    let sh = c.backward_shift_by(s);
                    let v = reassemble(frame, sh.k0.as_ref(), &sh.k, n);
                    frame.membership_residual(&v) / c.source_norm
                })
                .fold(0.0, f64::max)
        })
        .collect();
    InvarianceReport { depth, residuals }
}

/// Representation summary for a subspace.
#[derive(Clone, Debug, Serialize)]
pub struct RepresentationReport {
    pub r: usize,
    pub p: usize,
    pub vanishing_case: bool,
    pub isometry_residual_max: f64,
    pub reconstruction_residual_max: f64,
    pub invariance_residuals: Vec<f64>,
    pub case: String,
}

impl RepresentationReport {
    pub fn passed(&self) -> bool {
        self.isometry_residual_max <= TOL_REP
            && self.reconstruction_residual_max <= TOL_REP
            && self.invariance_residuals.iter().all(|&r| r <= TOL_INVARIANCE)
    }
}

/// Builds the frame from the computed defect and checks every basis vector of `M`.
pub fn represent_subspace(m: &Subspace, policy: &RankPolicy, depth: usize) -> Result<RepresentationReport> {
    let frame = build_frame_auto(m, policy)?;
    let coords: Vec<Coordinates> = m
        .vectors()
        .iter()
        .map(|f| extract_coordinates(f, &frame))
        .collect::<Result<_>>()?;
    Ok(summarize(&frame, &coords, depth, "generic"))
}

pub(crate) fn summarize(frame: &RepresentationFrame, coords: &[Coordinates], depth: usize, case: &str) -> RepresentationReport {
    let inv = check_coordinate_space_invariance(frame, coords, depth);
    RepresentationReport {
        r: frame.r(),
        p: frame.p(),
        vanishing_case: frame.vanishing_case(),
        isometry_residual_max: coords.iter().map(|c| c.isometry_residual).fold(0.0, f64::max),
        reconstruction_residual_max: coords.iter().map(|c| c.reconstruction_residual).fold(0.0, f64::max),
        invariance_residuals: inv.residuals,
        case: case.into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn span(vs: &[CoeffVec]) -> Subspace {
        Subspace::span_of(vs[0].m(), vs[0].n(), vs, &RankPolicy::default()).unwrap()
    }

    #[test]
    fn constants_give_one_column() {
        let m = span(&[CoeffVec::k0(1, 8, 0)]);
        let f = build_frame(&m, &Subspace::zero(1, 8), &RankPolicy::default()).unwrap();
        assert_eq!(f.r(), 1);
        assert!(!f.vanishing_case());
        assert!((f.w()[0].get(0, 0).norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn span_of_z_is_vanishing_case() {
        let m = span(&[CoeffVec::monomial(1, 8, 0, 1)]);
        let f = build_frame_auto(&m, &RankPolicy::default()).unwrap();
        assert_eq!(f.r(), 0);
        assert!(f.vanishing_case());
        assert_eq!(f.p(), 1);
        let co = extract_coordinates(&CoeffVec::monomial(1, 8, 0, 1), &f).unwrap();
        assert!(co.isometry_residual < 1e-12);
        assert!(co.k[0].get(0, 0).norm() > 0.99);
    }

    #[test]
    fn first_component_complement() {
        let (mm, n) = (3, 10);
        let g = CoeffVec::k0(mm, n, 0);
        let m = span(&[g]).complement();
        let f = build_frame_auto(&m, &RankPolicy::default()).unwrap();
        assert_eq!(f.r(), 2);
        assert_eq!(f.w_source(), &[1, 2]);
        let f0 = f.f0_coeff(0);
        assert!(f0.row(0).iter().all(|x| x.norm() < 1e-12));
        assert!((f0[(1, 0)].norm() - 1.0).abs() < 1e-12);
        assert!((f0[(2, 1)].norm() - 1.0).abs() < 1e-12);
        assert_eq!(f.rank_defect(), 0);
    }

    #[test]
    fn frame_column_has_constant_coordinate() {
        let n = 12;
        let g = CoeffVec::from_components(&[vec![c(0.6), c(0.0), c(0.8)], vec![c(0.0)]], n).unwrap();
        let m = span(&[g]).complement();
        let frame = build_frame_auto(&m, &RankPolicy::default()).unwrap();
        for (i, w) in frame.w().iter().enumerate() {
            let co = extract_coordinates(w, &frame).unwrap();
            let k0 = co.k0.as_ref().unwrap();
            for j in 0..k0.n() {
                for t in 0..frame.r() {
                    let want = if j == 0 && t == i { 1.0 } else { 0.0 };
                    assert!((k0.get(t, j) - c(want)).norm() < 1e-12);
                }
            }
            assert!(co.k.iter().all(|k| k.norm() < 1e-12));
        }
    }

    #[test]
    fn vector_outside_subspace_is_rejected() {
        let n = 8;
        let g = CoeffVec::scalar(&[1.0], n);
        let m = span(&[g.clone()]).complement();
        let frame = build_frame_auto(&m, &RankPolicy::default()).unwrap();
        assert!(matches!(extract_coordinates(&g, &frame), Err(Error::NotInSubspace(_))));
    }

    #[test]
    fn insufficient_defect_frame_is_rejected() {
        let n = 8;
        let m = span(&[CoeffVec::monomial(1, n, 0, 1)]);
        assert!(matches!(
            build_frame(&m, &Subspace::zero(1, n), &RankPolicy::default()),
            Err(Error::NotContained(_))
        ));
    }

    #[test]
    fn model_space_members_are_invariant() {
        let n = 16;
        let m = span(&[
            CoeffVec::scalar(&[1.0], n),
            CoeffVec::scalar(&[0.0, 1.0], n),
            CoeffVec::scalar(&[0.0, 0.0, 1.0], n),
        ]);
        let rep = represent_subspace(&m, &RankPolicy::default(), default_depth(n)).unwrap();
        assert_eq!(rep.p, 0);
        assert!(rep.passed(), "{rep:?}");
    }

    #[test]
    fn binomial_complement_coordinates() {
        let (k, n) = (3, 16);
        let s = 1.0 / 2f64.sqrt();
        let mut gc = vec![0.0; k + 1];
        gc[0] = s;
        gc[k] = s;
        let g = CoeffVec::scalar(&gc, n);
        let m = span(&[g]).complement();
        let frame = build_frame_auto(&m, &RankPolicy::default()).unwrap();
        let mut fc = vec![0.0; k + 1];
        fc[0] = 1.0;
        fc[k] = -1.0;
        let co = extract_coordinates(&CoeffVec::scalar(&fc, n), &frame).unwrap();
        let k0 = co.k0.as_ref().unwrap();
        assert!((k0.get(0, 0).norm() - 2f64.sqrt()).abs() < 1e-12);
        assert!((0..k0.n()).skip(1).all(|j| k0.get(0, j).norm() < 1e-12));
        assert!(co.k.iter().all(|k| k.norm() < 1e-12));
    }
}
