use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use tklab::generate::{planted_orthonormal, random_orthonormal, random_poly_vec, random_symbol, rng};
use tklab::model_space::{build_model_space, decompose_against_theta, project_onto_model};
use tklab::near_invariance::{compute_defect, kernel_of, verify_phi_zero, VerifyOptions};
use tklab::operators::{build_perturbed, build_toeplitz};
use tklab::representation::{
    build_frame_auto, check_coordinate_space_invariance, default_depth, extract_coordinates,
    rank_one_theta_star_analysis, TOL_INVARIANCE,
};
use tklab::symbols::scalar_inner_outer;
use tklab::{CoeffVec, LaurentMatrixSymbol, LaurentVec, RankPolicy, Subspace, C64};

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn unitary(seed: u64, k: usize) -> DMatrix<C64> {
    let mut r = rng(seed);
    let a = DMatrix::from_fn(k, k, |_, _| C64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5));
    a.qr().q()
}

fn combine(u: &DMatrix<C64>, vs: &[CoeffVec]) -> Vec<CoeffVec> {
    (0..vs.len())
        .map(|i| {
            let mut out = CoeffVec::zeros(vs[0].m(), vs[0].n());
            for (k, v) in vs.iter().enumerate() {
                out.axpy(u[(i, k)], v);
            }
            out
        })
        .collect()
}

fn unit(v: CoeffVec) -> CoeffVec {
    let nv = v.norm();
    v.scale(c(1.0 / nv))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn shifts_are_contractions(seed in any::<u64>(), m in 1usize..4, n in 2usize..20) {
        let f = random_poly_vec(&mut rng(seed), m, n, n);
        prop_assert!(f.backward_shift().norm() <= f.norm() + 1e-15);
        prop_assert!(f.forward_shift().0.norm() <= f.norm() + 1e-15);
    }

    #[test]
    fn forward_undoes_backward_on_the_vanishing_slice(seed in any::<u64>(), m in 1usize..4, n in 3usize..20) {
        let mut f = random_poly_vec(&mut rng(seed), m, n, n - 1);
        for i in 0..m {
            f.set(i, 0, c(0.0));
        }
        prop_assert_eq!(f.backward_shift().forward_shift().0, f);
    }

    #[test]
    fn riesz_projection_is_idempotent_and_contractive(seed in any::<u64>(), m in 1usize..4, n in 1usize..12) {
        let mut r = rng(seed);
        let mut l = LaurentVec::zeros(m, n);
        for i in 0..m {
            for j in -(n as i64)..n as i64 {
                l.set(i, j, C64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5));
            }
        }
        let p = l.riesz_project();
        prop_assert!(p.norm() <= l.norm() + 1e-15);
        prop_assert_eq!(LaurentVec::from_analytic(&p).riesz_project(), p);
    }

    #[test]
    fn inner_product_is_positive_definite(seed in any::<u64>(), m in 1usize..4, n in 1usize..16) {
        let f = random_poly_vec(&mut rng(seed), m, n, n);
        let ip = f.inner_product(&f).unwrap();
        prop_assert!(ip.im.abs() < 1e-15 && ip.re > 0.0);
        let z = CoeffVec::zeros(m, n);
        prop_assert_eq!(z.inner_product(&z).unwrap(), c(0.0));
    }

    #[test]
    fn symbol_multiplication_is_associative_with_unit(seed in any::<u64>(), m in 1usize..4) {
        let mut r = rng(seed);
        let a = random_symbol(&mut r, m, -1, 1);
        let b = random_symbol(&mut r, m, 0, 2);
        let d = random_symbol(&mut r, m, -2, 0);
        let left = a.multiply(&b).unwrap().multiply(&d).unwrap();
        let right = a.multiply(&b.multiply(&d).unwrap()).unwrap();
        let diff = left.add(&right.scale(c(-1.0))).unwrap();
        prop_assert!(diff.coeff_norm() < 1e-12);
        let id = LaurentMatrixSymbol::identity(m);
        prop_assert_eq!(id.multiply(&a).unwrap(), a.clone());
        prop_assert_eq!(a.multiply(&id).unwrap(), a);
    }

    #[test]
    fn analytic_inverse_reconstructs(seed in any::<u64>(), m in 1usize..4) {
        let mut r = rng(seed);
        let tail = random_symbol(&mut r, m, 1, 2).scale(c(0.2 / m as f64));
        let a = LaurentMatrixSymbol::identity(m).scale(c(2.0)).add(&tail).unwrap();
        prop_assert!(a.is_invertible_analytic(256, 1e-3).unwrap().invertible);
        let inv = a.invert_analytic(24).unwrap();
        prop_assert!(inv.residual < 1e-10 * a.coeff_norm().max(1.0));
    }

    #[test]
    fn factorization_is_inner_times_outer(seed in any::<u64>(), deg in 1usize..6) {
        let mut r = rng(seed);
        // Roots at modulus ≤ 0.8 or ≥ 1.25 keep clear of the circle.
        let mut p = vec![c(1.0)];
        for _ in 0..deg {
            let rad = if r.random::<bool>() { 0.8 * r.random::<f64>() } else { 1.25 + r.random::<f64>() };
            let root = C64::from_polar(rad, std::f64::consts::TAU * r.random::<f64>());
            let mut next = vec![c(0.0); p.len() + 1];
            for (j, x) in p.iter().enumerate() {
                next[j + 1] += x;
                next[j] -= x * root;
            }
            p = next;
        }
        let f = scalar_inner_outer(&p).unwrap();
        prop_assert!(f.residual < 1e-8);
        prop_assert!(f.inner_deviation < 1e-8);
    }

    #[test]
    fn product_of_inner_symbols_is_inner(seed in any::<u64>(), m in 1usize..4, k in 0i64..3) {
        let u = LaurentMatrixSymbol::constant(unitary(seed, m)).unwrap();
        let theta = LaurentMatrixSymbol::monomial(m, k);
        let prod = theta.multiply(&u).unwrap().multiply(&LaurentMatrixSymbol::shift(m)).unwrap();
        prop_assert!(u.is_inner(256, 1e-8).inner);
        prop_assert!(prod.is_inner(256, 1e-8).inner);
    }

    #[test]
    fn compression_adjoint_identity(seed in any::<u64>(), m in 1usize..3, n in 4usize..12) {
        let phi = random_symbol(&mut rng(seed), m, -2, 2);
        let a = build_toeplitz(&phi, n).unwrap();
        let b = build_toeplitz(&phi.adjoint(), n).unwrap();
        prop_assert!((a.matrix().adjoint() - b.matrix()).norm() < 1e-14);
    }

    #[test]
    fn perturbation_has_exact_rank(seed in any::<u64>(), m in 1usize..3, k in 1usize..4) {
        let n = 12;
        let mut r = rng(seed);
        let phi = random_symbol(&mut r, m, -1, 1);
        let both = random_orthonormal(&mut r, 2 * k, m, n, 6).unwrap();
        let t = build_perturbed(&phi, n, &both[..k], &both[k..]).unwrap();
        let diff = t.matrix() - t.base().matrix();
        let sv = diff.singular_values();
        let rank = sv.iter().filter(|&&s| s > 1e-10).count();
        prop_assert_eq!(rank, k);
    }

    #[test]
    fn subspace_operations_are_consistent(seed in any::<u64>(), m in 1usize..3, k in 1usize..6) {
        let n = 8;
        let p = RankPolicy::default();
        let mut r = rng(seed);
        let vs: Vec<CoeffVec> = (0..k).map(|_| random_poly_vec(&mut r, m, n, n)).collect();
        let ws: Vec<CoeffVec> = (0..k + 2).map(|_| random_poly_vec(&mut r, m, n, n)).collect();
        let a = Subspace::span_of(m, n, &vs, &p).unwrap();
        prop_assert_eq!(a.dim() + a.complement().dim(), m * n);
        let f = random_poly_vec(&mut r, m, n, n);
        let pf = a.project(&f).unwrap();
        prop_assert!(a.project(&pf).unwrap().max_abs_diff(&pf) < 1e-12);
        let slice = a.zero_at_origin_slice(&p);
        prop_assert!(slice.is_contained_in(&a, 1e-8).unwrap().contained);
        for v in slice.vectors() {
            prop_assert!(v.eval_at_zero().iter().map(|x| x.norm()).fold(0.0, f64::max) < 1e-10);
        }
        let b = Subspace::span_of(m, n, &[vs.clone(), ws].concat(), &p).unwrap();
        let i = a.intersect(&b).unwrap();
        prop_assert!(i.is_contained_in(&a, 1e-8).unwrap().contained);
        prop_assert!(i.is_contained_in(&b, 1e-8).unwrap().contained);
        let full = Subspace::full(m, n);
        prop_assert!(a.is_contained_in(&b, 1e-8).unwrap().contained);
        prop_assert!(b.is_contained_in(&full, 1e-8).unwrap().contained);
        prop_assert!(a.is_contained_in(&full, 2e-8).unwrap().contained);
    }

    #[test]
    fn model_projection_is_self_adjoint(seed in any::<u64>(), s in 1i64..4) {
        let (m, n) = (2, 12);
        let theta = LaurentMatrixSymbol::diagonal_monomials(&[s, 1]);
        let ms = build_model_space(&theta, n, &RankPolicy::default()).unwrap();
        let mut r = rng(seed);
        let f = random_poly_vec(&mut r, m, n, n);
        let g = random_poly_vec(&mut r, m, n, n);
        let pf = project_onto_model(&f, &ms).unwrap();
        let pg = project_onto_model(&g, &ms).unwrap();
        prop_assert!(project_onto_model(&pf, &ms).unwrap().max_abs_diff(&pf) < 1e-12);
        let lhs = pf.inner_product(&g).unwrap();
        let rhs = f.inner_product(&pg).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-8);
        let d = decompose_against_theta(&g, &ms).unwrap();
        prop_assert!((g.norm_sq() - d.g_zeta.norm_sq() - d.g_theta.norm_sq()).abs() < 1e-8);
    }

    #[test]
    fn model_spaces_have_no_defect(s1 in 1i64..4, s2 in 0i64..4) {
        let theta = LaurentMatrixSymbol::diagonal_monomials(&[s1, s2]);
        let ms = build_model_space(&theta, 12, &RankPolicy::default()).unwrap();
        prop_assert_eq!(ms.dim(), (s1 + s2) as usize);
        prop_assert_eq!(compute_defect(ms.as_subspace(), &RankPolicy::default()).defect_dim, 0);
    }

    #[test]
    fn complement_defect_is_bounded(seed in any::<u64>(), m in 1usize..4, k in 1usize..4) {
        let n = 10;
        let g = random_orthonormal(&mut rng(seed), k, m, n, n - 4).unwrap();
        let mspace = Subspace::span_of(m, n, &g, &RankPolicy::default()).unwrap().complement();
        prop_assert!(compute_defect(&mspace, &RankPolicy::default()).defect_dim <= k);
        let chk = verify_phi_zero(m, n, &g, &g, &VerifyOptions::default()).unwrap();
        prop_assert!(chk.passed());
    }

    #[test]
    fn defect_is_invariant_under_joint_unitary_recombination(seed in any::<u64>(), k in 1usize..4) {
        let (m, n) = (2, 12);
        let mut r = rng(seed);
        let phi = LaurentMatrixSymbol::monomial(m, 1);
        let pl = planted_orthonormal(&mut r, &phi, n, k, 4).unwrap();
        let u = unitary(seed ^ 0x5eed, k);
        let (g2, h2) = (combine(&u, &pl.g), combine(&u, &pl.h));
        let p = RankPolicy::default();
        let k1 = kernel_of(&build_perturbed(&phi, n, &pl.g, &pl.h).unwrap(), &p).subspace;
        let k2 = kernel_of(&build_perturbed(&phi, n, &g2, &h2).unwrap(), &p).subspace;
        let d1 = compute_defect(&k1, &p).defect_basis;
        let d2 = compute_defect(&k2, &p).defect_basis;
        prop_assert_eq!(d1.dim(), d2.dim());
        prop_assert!(d1.equals(&d2, 1e-8).unwrap().contained);
    }

    #[test]
    fn coordinates_are_isometric_and_reconstruct(seed in any::<u64>(), m in 1usize..3, k in 1usize..3) {
        let n = 10;
        let mut r = rng(seed);
        let g = random_orthonormal(&mut r, k, m, n, n - 4).unwrap();
        let mspace = Subspace::span_of(m, n, &g, &RankPolicy::default()).unwrap().complement();
        let frame = build_frame_auto(&mspace, &RankPolicy::default()).unwrap();
        let f = mspace.project(&random_poly_vec(&mut r, m, n, n)).unwrap();
        let co = extract_coordinates(&f, &frame).unwrap();
        prop_assert!(co.isometry_residual < 1e-8);
        prop_assert!(co.reconstruction_residual < 1e-8);
        let inv = check_coordinate_space_invariance(&frame, &[co], default_depth(n));
        prop_assert!(inv.passed(TOL_INVARIANCE), "{:?}", inv.residuals);
    }

    #[test]
    fn theta_star_dispatch_is_total(seed in any::<u64>(), s in 1i64..3, in_range in any::<bool>()) {
        let (m, n) = (2, 14);
        let mut r = rng(seed);
        let theta = LaurentMatrixSymbol::monomial(m, s);
        let h = unit(random_poly_vec(&mut r, m, n, 3));
        let core = random_poly_vec(&mut r, m, n, 3);
        let g = if in_range { unit(core.shift_by(s as usize)) } else { unit(core) };
        let rep = rank_one_theta_star_analysis(&theta, &g, &h, n, &RankPolicy::default()).unwrap();
        prop_assert!(rep.equality_residual < 1e-6, "{:?}", rep.case);
    }
}

#[test]
fn unit_floor_applies_to_small_matrices() {
    let p = RankPolicy::default();
    assert_eq!(p.threshold(2, 2, 1e-3), 2e-10);
}

#[test]
fn base_symbol_is_kept_in_perturbation() {
    let s = LaurentMatrixSymbol::scalar(&[(1, c(1.0))]);
    let t = build_perturbed(&s, 6, &[], &[]).unwrap();
    assert_eq!(t.matrix(), t.base().matrix());
    assert_eq!(tklab::operators::gram_deviation(&[]), 0.0);
    let _ = DMatrix::<C64>::zeros(0, 0);
}
