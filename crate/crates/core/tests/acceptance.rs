use num_complex::Complex64 as C64;
use std::time::Instant;
use tklab::generate::{random_orthonormal, random_symbol, rng};
use tklab::model_space::verify_kernel_adjoint;
use tklab::near_invariance::{
    verify_inner_symbol, verify_invertible_factors, verify_phi_zero, verify_theta_star, TheoremCheck, VerifyOptions,
};
use tklab::operators::{brown_halmos_check, orthonormalize, Orthonormality};
use tklab::representation::{default_depth, represent_subspace};
use tklab::scenario::examples::{counterexample_2_14, example_3_2, example_5_3_case_1, example_5_3_case_2};
use tklab::scenario::sweep::{sweep, SweepParam};
use tklab::scenario::{parse_scenario, run_prepared, validate, RunOptions, RunReport, Scenario, Status};
use tklab::subspace::{RankPolicy, Subspace};
use tklab::symbols::{blaschke_taylor, LaurentMatrixSymbol};
use tklab::CoeffVec;

const GAP_LIMIT: f64 = 1e-3;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Kernels and gap ratios collected for the later criteria.
#[derive(Default)]
struct Ledger {
    kernels: Vec<(String, Subspace)>,
    gaps: Vec<(String, f64, bool)>,
}

impl Ledger {
    fn record(&mut self, label: String, tc: &TheoremCheck) {
        self.gaps.push((label.clone(), tc.report.gap_ratio, tc.inconclusive()));
        self.kernels.push((label, tc.kernel.clone()));
    }
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(failures: Vec<String>, summary: String) -> Outcome {
    if failures.is_empty() {
        Outcome { passed: true, detail: summary }
    } else {
        let shown: Vec<_> = failures.iter().take(3).cloned().collect();
        Outcome {
            passed: false,
            detail: format!("{summary}; {} failing: {}", failures.len(), shown.join("; ")),
        }
    }
}

fn run_in_memory(s: &Scenario) -> RunReport {
    let ro = RunOptions::default();
    let p = validate(s, &ro).expect("bundled scenario validates");
    run_prepared(&p, &ro)
}

fn subcheck(r: &RunReport, name: &str) -> Option<f64> {
    r.checks
        .iter()
        .flat_map(|c| &c.subchecks)
        .find(|s| s.name == name)
        .map(|s| s.value)
}

fn theorem_failure(label: &str, tc: &TheoremCheck, bound: usize) -> Option<String> {
    let res = tc.report.containment_residual.unwrap_or(f64::INFINITY);
    let bad = tc.report.defect_dim > bound || !tc.passed();
    bad.then(|| format!("{label}: defect {} (≤{bound}), containment {res:.2e}", tc.report.defect_dim))
}

/// `G = −P`, `H = T_Φ P` for an orthonormal family `P` vanishing at the origin.
fn planted_at_zero(seed: u64, phi: &LaurentMatrixSymbol, rank: usize, n: usize) -> (Vec<CoeffVec>, Vec<CoeffVec>, Vec<CoeffVec>) {
    let degree = n - phi.max_power() - 2;
    let q = random_orthonormal(&mut rng(seed), rank, phi.m(), n, degree).unwrap();
    let p: Vec<CoeffVec> = q.iter().map(|v| v.shift_by(1)).collect();
    let g = p.iter().map(|v| -v).collect();
    let h = p.iter().map(|v| phi.apply(v, n).unwrap()).collect();
    (g, h, p)
}

/// The planted family must lie in the computed kernel.
fn planted_missing(label: &str, tc: &TheoremCheck, planted: &[CoeffVec]) -> Option<String> {
    if planted.is_empty() {
        return None;
    }
    let p = Subspace::span_of(tc.kernel.m(), tc.kernel.n(), planted, &RankPolicy::default()).unwrap();
    let c = p.is_contained_in(&tc.kernel, 1e-8).unwrap();
    (!c.contained).then(|| format!("{label}: planted family outside the kernel ({:.2e})", c.residual))
}

fn criterion_1(led: &mut Ledger) -> Outcome {
    let mut fails = Vec::new();
    let mut worst: f64 = 0.0;
    for seed in 0..50u64 {
        let m = 1 + (seed % 4) as usize;
        let n = 12 + 4 * ((seed / 4) % 3) as usize;
        let rank = 1 + (seed % 3) as usize;
        let mut r = rng(1000 + seed);
        let g = random_orthonormal(&mut r, rank, m, n, n - 4).unwrap();
        let h = random_orthonormal(&mut r, rank, m, n, n - 4).unwrap();
        let opts = VerifyOptions {
            tol_contain: Some(1e-8),
            ..VerifyOptions::default()
        };
        let tc = verify_phi_zero(m, n, &g, &h, &opts).unwrap();
        let label = format!("phi_zero seed {seed} m={m} N={n} n={rank}");
        worst = worst.max(tc.report.containment_residual.unwrap_or(f64::INFINITY));
        fails.extend(theorem_failure(&label, &tc, rank));
        led.record(label, &tc);
    }
    outcome(fails, format!("50 scenarios, worst containment {worst:.2e}"))
}

fn truncated_blaschke(alphas: &[C64], r: usize) -> LaurentMatrixSymbol {
    let polys: Vec<Vec<C64>> = alphas.iter().map(|&a| blaschke_taylor(a, r)).collect();
    LaurentMatrixSymbol::diagonal(&polys).unwrap()
}

fn criterion_2(led: &mut Ledger) -> Outcome {
    let mut thetas: Vec<(String, LaurentMatrixSymbol, usize)> = (1..=4)
        .map(|p| (format!("z^{p} I"), LaurentMatrixSymbol::monomial(2, p), 24))
        .collect();
    thetas.push(("diag(z^2, z^3)".into(), LaurentMatrixSymbol::diagonal_monomials(&[2, 3]), 24));
    thetas.push((
        "diag(b_0.3, b_-0.4i)".into(),
        truncated_blaschke(&[c(0.3), C64::new(0.0, -0.4)], 30),
        40,
    ));
    let mut fails = Vec::new();
    let mut worst: f64 = 0.0;
    let mut nontrivial = 0;
    for (k, (name, theta, n)) in thetas.iter().enumerate() {
        for rank in 1..=2 {
            for planted in [false, true] {
                let mut r = rng(2000 + 10 * k as u64 + rank as u64 + 5 * planted as u64);
                let (g, h, p) = if planted {
                    planted_at_zero(2100 + 10 * k as u64 + rank as u64, theta, rank, *n)
                } else {
                    let g = random_orthonormal(&mut r, rank, 2, *n, n - 4).unwrap();
                    (g, random_orthonormal(&mut r, rank, 2, *n, n - 4).unwrap(), vec![])
                };
                let tc = verify_inner_symbol(theta, &g, &h, *n, &VerifyOptions::default()).unwrap();
                let label = format!("inner {name} n={rank} planted={planted}");
                worst = worst.max(tc.report.containment_residual.unwrap_or(f64::INFINITY));
                fails.extend(theorem_failure(&label, &tc, rank));
                fails.extend(planted_missing(&label, &tc, &p));
                nontrivial += usize::from(tc.report.defect_dim > 0);
                led.record(label, &tc);
            }
        }
    }
    let rep = run_in_memory(&example_3_2());
    let eq = subcheck(&rep, "defect_span_equality").unwrap_or(f64::INFINITY);
    if rep.status != Status::Pass || eq >= 1e-8 {
        fails.push(format!("example 3.2 status {} equality {eq:.2e}", rep.status.as_str()));
    }
    outcome(
        fails,
        format!(
            "{} symbols, {nontrivial} nonzero defects, worst containment {worst:.2e}, example equality {eq:.2e}",
            thetas.len()
        ),
    )
}

fn criterion_3(led: &mut Ledger) -> Outcome {
    let factors = [
        ("I", LaurentMatrixSymbol::identity(2)),
        ("(2+z)I", LaurentMatrixSymbol::diagonal(&[vec![c(2.0), c(1.0)], vec![c(2.0), c(1.0)]]).unwrap()),
        (
            "diag(3+z, 2+z^2)",
            LaurentMatrixSymbol::diagonal(&[vec![c(3.0), c(1.0)], vec![c(2.0), c(0.0), c(1.0)]]).unwrap(),
        ),
    ];
    let n = 32;
    let mut fails = Vec::new();
    let mut worst: f64 = 0.0;
    let mut special = 0;
    let mut nontrivial = 0;
    for (a, (n1, f1)) in factors.iter().enumerate() {
        for (b, (n2, f2)) in factors.iter().enumerate() {
            for (rank, planted) in [(1, false), (2, false), (1, true), (2, true)] {
                let mut r = rng(3000 + 100 * a as u64 + 10 * b as u64 + rank as u64 + 5 * planted as u64);
                let phi = f1.adjoint().multiply(f2).unwrap();
                let (g, h, p, opts) = if planted {
                    let (g, h, p) = planted_at_zero(3500 + 100 * a as u64 + 10 * b as u64 + rank as u64, &phi, rank, n);
                    let opts = VerifyOptions {
                        orthonormality: Orthonormality::GOnly,
                        ..VerifyOptions::default()
                    };
                    (g, h, p, opts)
                } else {
                    let g = random_orthonormal(&mut r, rank, 2, n, n - 4).unwrap();
                    let h = random_orthonormal(&mut r, rank, 2, n, n - 4).unwrap();
                    (g, h, vec![], VerifyOptions::default())
                };
                let tc = verify_invertible_factors(f1, f2, &g, &h, n, &opts).unwrap();
                let label = format!("factors {n1} * {n2} n={rank} planted={planted}");
                fails.extend(planted_missing(&label, &tc, &p));
                nontrivial += usize::from(tc.report.defect_dim > 0);
                if a == 0 && !tc.extra.iter().any(|s| s.name == "analytic_inverse_form") {
                    fails.push(format!("{label}: special-case forms missing"));
                }
                if a == 0 {
                    special += 1;
                }
                worst = worst.max(tc.report.containment_residual.unwrap_or(f64::INFINITY));
                fails.extend(theorem_failure(&label, &tc, rank));
                led.record(label, &tc);
            }
        }
    }
    outcome(
        fails,
        format!("9 pairs at N={n}, {special} runs with F1 = I, {nontrivial} nonzero defects, worst containment {worst:.2e}"),
    )
}

/// `count` orthonormal members of `ΘH²`.
fn in_range(theta: &LaurentMatrixSymbol, seed: u64, count: usize, n: usize) -> Vec<CoeffVec> {
    let mut r = rng(seed);
    let d = theta.max_power();
    let q = random_orthonormal(&mut r, count, theta.m(), n, n - d - 2).unwrap();
    let img: Vec<CoeffVec> = q.iter().map(|v| theta.apply(v, n).unwrap()).collect();
    orthonormalize(&img, 1e-10)
}

fn criterion_4(led: &mut Ledger) -> Outcome {
    let mut thetas: Vec<(String, LaurentMatrixSymbol)> =
        (1..=3).map(|s| (format!("z^{s} I"), LaurentMatrixSymbol::monomial(2, s))).collect();
    thetas.push(("diag(z, z^2)".into(), LaurentMatrixSymbol::diagonal_monomials(&[1, 2])));
    thetas.push(("diag(z^3, 1)".into(), LaurentMatrixSymbol::diagonal_monomials(&[3, 0])));
    let n = 20;
    let mut fails = Vec::new();
    let (mut inside, mut outside) = (0, 0);
    let mut worst: f64 = 0.0;
    for (k, (name, theta)) in thetas.iter().enumerate() {
        for rank in 1..=2 {
            for branch in ["in_range", "outside"] {
                let seed = 4000 + 100 * k as u64 + 10 * rank as u64 + (branch == "outside") as u64;
                let g = if branch == "in_range" {
                    in_range(theta, seed, rank, n)
                } else {
                    random_orthonormal(&mut rng(seed), rank, 2, n, n - 4).unwrap()
                };
                let h = random_orthonormal(&mut rng(seed + 5), rank, 2, n, n - 4).unwrap();
                let tc = verify_theta_star(theta, &g, &h, n, &VerifyOptions::default()).unwrap();
                let l = tc.bound - rank;
                if l == 0 {
                    inside += 1;
                } else {
                    outside += 1;
                }
                let label = format!("theta_star {name} n={rank} {branch} l={l}");
                worst = worst.max(tc.report.containment_residual.unwrap_or(f64::INFINITY));
                fails.extend(theorem_failure(&label, &tc, tc.bound));
                led.record(label, &tc);
            }
        }
    }
    if inside == 0 || outside == 0 {
        fails.push(format!("membership branches not both exercised ({inside} in range, {outside} outside)"));
    }
    for s in [example_5_3_case_1(), example_5_3_case_2()] {
        let rep = run_in_memory(&s);
        let eq = rep
            .checks
            .iter()
            .find(|c| c.name == "theta_star_analysis")
            .and_then(|c| c.detail.get("equality_residual"))
            .and_then(serde_json::Value::as_f64)
            .unwrap_or(f64::INFINITY);
        if rep.status != Status::Pass || eq >= 1e-6 {
            fails.push(format!("{} status {} equality {eq:.2e}", s.name, rep.status.as_str()));
        }
    }
    outcome(
        fails,
        format!("{inside} in-range and {outside} outside runs, worst containment {worst:.2e}, both example cases"),
    )
}

fn criterion_5(led: &Ledger) -> Outcome {
    let policy = RankPolicy::default();
    let mut fails = Vec::new();
    let (mut iso, mut rec, mut inv): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut count = 0;
    for (label, k) in &led.kernels {
        if k.dim() == 0 {
            continue;
        }
        count += 1;
        match represent_subspace(k, &policy, default_depth(k.n())) {
            Ok(rep) => {
                iso = iso.max(rep.isometry_residual_max);
                rec = rec.max(rep.reconstruction_residual_max);
                let i = rep.invariance_residuals.iter().copied().fold(0.0, f64::max);
                inv = inv.max(i);
                if !rep.passed() {
                    fails.push(format!(
                        "{label}: isometry {:.2e} reconstruction {:.2e} invariance {i:.2e}",
                        rep.isometry_residual_max, rep.reconstruction_residual_max
                    ));
                }
            }
            Err(e) => fails.push(format!("{label}: {e}")),
        }
    }
    outcome(
        fails,
        format!("{count} kernels, isometry {iso:.2e}, reconstruction {rec:.2e}, invariance {inv:.2e}"),
    )
}

fn criterion_6() -> Outcome {
    let mut fails = Vec::new();
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let mut r = rng(6000 + seed);
        let m = 1 + (seed % 3) as usize;
        let (psi, phi) = if seed % 2 == 0 {
            (random_symbol(&mut r, m, -2, 0), random_symbol(&mut r, m, -2, 2))
        } else {
            (random_symbol(&mut r, m, -2, 2), random_symbol(&mut r, m, 0, 2))
        };
        let rep = brown_halmos_check(&psi, &phi, 24).unwrap();
        worst = worst.max(rep.deviation);
        if !rep.hypothesis_met || rep.deviation >= 1e-10 {
            fails.push(format!("pair {seed}: deviation {:.2e}", rep.deviation));
        }
    }
    let s = counterexample_2_14();
    let rep = brown_halmos_check(s.psi.as_ref().unwrap(), s.symbol.as_ref().unwrap(), s.n).unwrap();
    if rep.hypothesis_met || rep.product_max > 1e-12 || !rep.symbol_product_zero {
        fails.push(format!("counterexample: product {:.2e}", rep.product_max));
    }
    if run_in_memory(&s).status != Status::Pass {
        fails.push("counterexample scenario did not pass".into());
    }
    outcome(
        fails,
        format!("20 pairs, worst deviation {worst:.2e}, counterexample product {:.1e}", rep.product_max),
    )
}

fn criterion_7() -> Outcome {
    let symbols = [
        ("diag(z-0.5, (z-2)(z+0.3i))", vec![vec![c(-0.5), c(1.0)], vec![C64::new(0.0, -0.6), C64::new(-2.0, 0.3), c(1.0)]]),
        ("diag(z^2, 3+z)", vec![vec![c(0.0), c(0.0), c(1.0)], vec![c(3.0), c(1.0)]]),
        ("(z-0.4)(z+0.6)", vec![vec![c(-0.24), c(0.2), c(1.0)]]),
        (
            "diag(z(z-0.2i), 2+z, z-0.7)",
            vec![vec![c(0.0), C64::new(0.0, -0.2), c(1.0)], vec![c(2.0), c(1.0)], vec![c(-0.7), c(1.0)]],
        ),
    ];
    let mut fails = Vec::new();
    let mut worst: f64 = 0.0;
    for (name, polys) in &symbols {
        let phi = LaurentMatrixSymbol::diagonal(polys).unwrap();
        let rep = verify_kernel_adjoint(&phi, 64, &RankPolicy::default()).unwrap();
        worst = worst.max(rep.equality_residual);
        if !rep.passed(1e-6) {
            fails.push(format!(
                "{name}: kernel {} vs model {} residual {:.2e} outer nullity {}",
                rep.kernel_dim, rep.model_space_dim, rep.equality_residual, rep.outer_nullity
            ));
        }
    }
    outcome(fails, format!("{} symbols at N=64, worst equality {worst:.2e}, outer parts injective", symbols.len()))
}

fn criterion_8(led: &Ledger) -> Outcome {
    let mut fails = Vec::new();
    for (label, gap, flagged) in &led.gaps {
        if (*gap > GAP_LIMIT) != *flagged {
            fails.push(format!("{label}: gap {gap:.2e} flagged {flagged}"));
        }
    }
    let worst = led.gaps.iter().map(|g| g.1).fold(0.0, f64::max);
    // singular values of c(1 + z/2) straddle the rank threshold
    let s = parse_scenario(
        r#"{"name": "clustered_spectrum", "m": 1, "N": 16, "symbol_class": "raw",
            "symbol": {"m": 1, "terms": [
                {"power": 0, "matrix": [[[1.6e-9, 0.0]]]},
                {"power": 1, "matrix": [[[8e-10, 0.0]]]}]},
            "checks": ["defect_theorem"]}"#,
    )
    .unwrap();
    let rep = run_in_memory(&s);
    let flagged = rep.checks.iter().any(|c| c.status == Status::Inconclusive);
    if !flagged || rep.exit_code() == 0 {
        fails.push(format!("clustered spectrum not flagged ({})", rep.status.as_str()));
    }
    outcome(
        fails,
        format!("{} theorem checks consistent, worst conclusive gap {worst:.2e}, clustered case inconclusive", led.gaps.len()),
    )
}

fn criterion_9() -> Outcome {
    let rows = sweep(&example_3_2(), SweepParam::N, &[8, 16, 32, 64], &RunOptions::default()).unwrap();
    let res: Vec<f64> = rows.iter().map(|r| r.containment_residual.unwrap_or(f64::INFINITY)).collect();
    let monotone = res.windows(2).all(|w| w[1] <= w[0].max(1e-13));
    let last = *res.last().unwrap();
    let shown: Vec<String> = res.iter().map(|r| format!("{r:.1e}")).collect();
    let summary = format!("residuals {}", shown.join(" "));
    let fails = if monotone && last < 1e-10 { vec![] } else { vec!["not converging".into()] };
    outcome(fails, summary)
}

fn main() {
    let mut led = Ledger::default();
    let mut results: Vec<(usize, &str, Outcome, f64)> = Vec::new();
    let mut timed = |id, name, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        results.push((id, name, o, t.elapsed().as_secs_f64()));
    };
    timed(1, "defect for zero symbol", &mut || criterion_1(&mut led));
    timed(2, "defect for inner symbol", &mut || criterion_2(&mut led));
    timed(3, "defect for invertible factors", &mut || criterion_3(&mut led));
    timed(4, "defect for adjoint of inner", &mut || criterion_4(&mut led));
    timed(5, "representation of every kernel", &mut || criterion_5(&led));
    timed(6, "Toeplitz products", &mut criterion_6);
    timed(7, "adjoint kernel is a model space", &mut criterion_7);
    timed(8, "sigma-gap flagging", &mut || criterion_8(&led));
    timed(9, "truncation convergence", &mut criterion_9);
    let mut failed = 0;
    for (id, name, o, secs) in &results {
        let tag = if o.passed { "PASS" } else { "FAIL" };
        failed += usize::from(!o.passed);
        println!("{tag} {id} {name}: {} ({secs:.1}s)", o.detail);
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
