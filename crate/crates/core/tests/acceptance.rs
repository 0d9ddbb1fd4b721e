//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines are always visible.

use std::time::{Duration, Instant};

use centralab::adcalc::{
    ad_lift, centralizer, multiplier_lift, randomized_set_centralizer, symmetrized_ad_kernel, Side,
};
use centralab::certify::{
    ad_nilpotent_vanish_check, certify_smiley, fuglede_check, lemma21_suite, lemma22_check, random_element,
};
use centralab::decomp::random::{ginibre, haar_unitary, seeded_rng};
use centralab::decomp::{
    jordan_chevalley, random_derogatory, random_generic, random_nilpotent, random_normal, random_spectral_of_type,
};
use centralab::numlin::{c64, matrix_unit, subspace_equal, vectorize, ComplexMatrix, ToleranceConfig};
use centralab::shiftlab::{
    c2_dimension_table, c2_structure_check, c2c2_dimension_table, diag_progression_check, shift_truncation,
    truncated_smiley, STRUCTURE_TOL,
};
use num_complex::Complex64;
use rand::Rng;

struct Outcome {
    ok: bool,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome {
        ok: true,
        detail: detail.into(),
    }
}

fn fail(detail: impl Into<String>) -> Outcome {
    Outcome {
        ok: false,
        detail: detail.into(),
    }
}

fn tol() -> ToleranceConfig {
    ToleranceConfig::default()
}

/// Commutator by explicit index sums, independent of nalgebra's products.
fn commutator_oracle(a: &ComplexMatrix, x: &ComplexMatrix) -> ComplexMatrix {
    let n = a.nrows();
    ComplexMatrix::from_fn(n, n, |i, j| {
        let mut s = Complex64::new(0.0, 0.0);
        for p in 0..n {
            s += a[(i, p)] * x[(p, j)] - x[(i, p)] * a[(p, j)];
        }
        s
    })
}

fn lift_correctness() -> Outcome {
    let mut rng = seeded_rng(1001);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.gen_range(2..=6);
        let a = ginibre(&mut rng, n) * c64(rng.gen_range(0.1..10.0), 0.0);
        let x = ginibre(&mut rng, n);
        let lifted = ad_lift(&a).unwrap().matrix() * vectorize(&x);
        let direct = vectorize(&commutator_oracle(&a, &x));
        let rel = (lifted - direct).norm() / (1.0 + a.norm() * x.norm());
        worst = worst.max(rel);
    }
    let detail = format!("200 pairs, worst relative error {worst:.2e} (bound 1e-12)");
    if worst <= 1e-12 {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn lemma21() -> Outcome {
    let t = tol();
    let mut worst: f64 = 0.0;
    for seed in 0..50u64 {
        let n = 3 + (seed as usize % 4);
        let a = random_normal(n, 2000 + seed).unwrap();
        let r = match lemma21_suite(&a, 4, &t) {
            Ok(r) => r,
            Err(e) => return fail(format!("seed {seed}: {e}")),
        };
        let d1 = r.dims[0].1;
        if r.dims.iter().any(|&(_, d)| d != d1) {
            return fail(format!("seed {seed}: dims differ {:?}", r.dims));
        }
        worst = worst.max(r.residual);
    }
    let detail = format!("50 normal matrices, s ≤ 4, worst mutual containment residual {worst:.2e} (bound 1e-8)");
    if worst <= 1e-8 {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn classical_smiley() -> Outcome {
    let t = tol();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for idx in 0..100u64 {
        let n = 2 + (idx as usize % 4);
        let seed = 3000 + idx;
        let a = match idx % 3 {
            0 => random_generic(n, seed),
            1 => random_derogatory(n, seed).unwrap(),
            _ => random_nilpotent(n, seed).unwrap(),
        };
        for s in 1..=3 {
            let c = match certify_smiley(&a, s, s, &t) {
                Ok(c) => c,
                Err(e) => return fail(format!("instance {idx}, s = {s}: {e}")),
            };
            count += 1;
            worst = worst.max(c.residual_pol);
            if !c.is_proper || !c.is_smiley {
                return fail(format!("instance {idx}, s = {s}: not proper (residual {:.2e})", c.residual_pol));
            }
        }
    }
    let detail = format!("{count} certificates proper, worst residual_pol {worst:.2e} (bound 1e-7)");
    if worst <= 1e-7 {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn type_m_smiley() -> Outcome {
    let t = tol();
    let mut worst: f64 = 0.0;
    let mut rows = 0;
    let mut instances = 0;
    for idx in 0..30u64 {
        let m = 1 + (idx as usize % 2);
        let sizes: Vec<usize> = (m + 1..=6).collect();
        let n = sizes[(idx as usize / 2) % sizes.len()];
        let (a, truth) = random_spectral_of_type(n, m, 4000 + idx, 20.0).unwrap();
        assert_eq!(truth.m, m);
        instances += 1;
        let l = 2 * m + 1;
        for k in 1..=l {
            let c = match certify_smiley(&a, k, l, &t) {
                Ok(c) => c,
                Err(e) => return fail(format!("instance {idx} (n={n}, m={m}), k={k}: {e}")),
            };
            rows += 1;
            worst = worst.max(c.residual_vn);
            if !c.is_smiley {
                return fail(format!(
                    "instance {idx} (n={n}, m={m}), (k,l)=({k},{l}): residual_vn {:.2e}",
                    c.residual_vn
                ));
            }
        }
    }
    let detail = format!(
        "{instances} type-m instances, {rows} rows with k ≤ l = 2m+1, worst residual_vn {worst:.2e} (bound 1e-7)"
    );
    if worst <= 1e-7 {
        pass(detail)
    } else {
        fail(detail)
    }
}

/// Lifted multiplier built column by column from matrix units.
fn multiplier_oracle(a: &ComplexMatrix, side: Side) -> ComplexMatrix {
    let n = a.nrows();
    let mut out = ComplexMatrix::zeros(n * n, n * n);
    for j in 0..n {
        for i in 0..n {
            let e = matrix_unit(n, i, j);
            let img = match side {
                Side::Left => a * e,
                Side::Right => e * a,
            };
            out.set_column(j * n + i, &vectorize(&img));
        }
    }
    out
}

fn ad_identities() -> Outcome {
    let t = tol();
    let mut worst_expansion: f64 = 0.0;
    for n in 2..=5 {
        let j = shift_truncation(n).unwrap();
        let r = match ad_nilpotent_vanish_check(&j, n - 1, &t) {
            Ok(r) => r,
            Err(e) => return fail(format!("J_{n}: {e}")),
        };
        if !r.holds || !r.sharp {
            return fail(format!("J_{n}: {r:?}"));
        }
        worst_expansion = worst_expansion.max(r.expansion_residual);
    }

    let mut rng = seeded_rng(5005);
    for _ in 0..20 {
        let n = rng.gen_range(2..=5);
        let a = ginibre(&mut rng, n);
        let left = multiplier_lift(&a, Side::Left).unwrap();
        let right = multiplier_lift(&a, Side::Right).unwrap();
        if left.matrix() != &multiplier_oracle(&a, Side::Left) || right.matrix() != &multiplier_oracle(&a, Side::Right) {
            return fail("multiplier lift differs from its matrix-unit construction");
        }
        if ad_lift(&a).unwrap().matrix() != &(left.matrix() - right.matrix()) {
            return fail("ad_lift differs from L − R");
        }
    }

    let mut worst_22: f64 = 0.0;
    let mut worst_fuglede: f64 = 0.0;
    for seed in 0..50u64 {
        let n = 2 + (seed as usize % 4);
        let mut rng = seeded_rng(6000 + seed);
        // self-adjoint with deliberately repeated eigenvalues
        let u = haar_unitary(&mut rng, n);
        let values: Vec<f64> = (0..n).map(|_| rng.gen_range(0..3) as f64 - 1.0).collect();
        let h = &u * centralab::numlin::real_diag(&values) * u.adjoint();
        let x = random_element(&centralizer(&h, 1, &t).unwrap(), seed);
        match lemma22_check(&h, &x, &t) {
            Ok(r) if r.holds => worst_22 = worst_22.max(r.residual / r.bound),
            Ok(r) => return fail(format!("Re/Im identity draw {seed}: {r:?}")),
            Err(e) => return fail(format!("Re/Im identity draw {seed}: {e}")),
        }
        let a = random_normal(n, 7000 + seed).unwrap();
        let x = random_element(&centralizer(&a, 1, &t).unwrap(), seed);
        match fuglede_check(&a, &x, &t) {
            Ok(r) if r.holds => worst_fuglede = worst_fuglede.max(r.residual / r.bound),
            Ok(r) => return fail(format!("Fuglede draw {seed}: {r:?}")),
            Err(e) => return fail(format!("Fuglede draw {seed}: {e}")),
        }
    }
    let detail = format!(
        "J_2..J_5 vanish (worst expansion mismatch {worst_expansion:.2e}, bound 1e-10), ad = L − R exact, \
         50+50 lemma draws (worst residual/bound {worst_22:.2e}, {worst_fuglede:.2e})"
    );
    if worst_expansion <= 1e-10 {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn jordan_round_trip() -> Outcome {
    let t = tol();
    let mut worst_s: f64 = 0.0;
    let mut worst_proj: f64 = 0.0;
    for idx in 0..50u64 {
        let m = idx as usize % 3;
        let n = (m + 1 + (idx as usize / 3) % 4).max(2);
        let (a, truth) = random_spectral_of_type(n, m, 8000 + idx, 20.0).unwrap();
        let d = match jordan_chevalley(&a, &t) {
            Ok(d) => d,
            Err(e) => return fail(format!("instance {idx}: {e}")),
        };
        let err = (&d.s - &truth.s).norm() / (1.0 + a.norm());
        worst_s = worst_s.max(err);
        if d.m != truth.m {
            return fail(format!("instance {idx} (n={n}): m = {} but truth is {}", d.m, truth.m));
        }
        let r = d.residuals(&a);
        let proj = r.idempotence.max(r.orthogonality).max(r.resolution_of_identity);
        worst_proj = worst_proj.max(proj);
        if err > 1e-7 || proj > 1e-9 {
            return fail(format!("instance {idx} (n={n}, m={m}): S error {err:.2e}, projector residual {proj:.2e}"));
        }
    }
    pass(format!(
        "50 pairs, worst ‖S − S_truth‖/(1+‖A‖) {worst_s:.2e} (bound 1e-7), m exact, worst projector residual {worst_proj:.2e} (bound 1e-9)"
    ))
}

fn shift_structure() -> Outcome {
    let t = tol();
    let mut worst: f64 = 0.0;
    for n in 6..=12 {
        let r = match c2_structure_check(n, &t) {
            Ok(r) => r,
            Err(e) => return fail(format!("n = {n}: {e}")),
        };
        worst = worst.max(r.interior_residual);
        if !r.holds || r.interior_residual > STRUCTURE_TOL {
            return fail(format!("n = {n}: {r:?}"));
        }
    }
    for n in 4..=12 {
        let p = diag_progression_check(n, &t).unwrap();
        if !(p.holds && p.identity.conditions_hold && p.linear.conditions_hold && !p.squares.conditions_hold) {
            return fail(format!("diagonal progression n = {n}: {p:?}"));
        }
    }
    for n in 2..=8 {
        match truncated_smiley(n, 2, 2, &t) {
            Ok(c) if c.is_proper => {}
            Ok(c) => return fail(format!("truncated_smiley({n}, 2, 2) not proper: {c:?}")),
            Err(e) => return fail(format!("truncated_smiley({n}, 2, 2): {e}")),
        }
    }
    let c2 = c2_dimension_table(&(6..=12).collect::<Vec<_>>(), &t).unwrap();
    let c2c2 = c2c2_dimension_table(&(4..=10).collect::<Vec<_>>(), &t).unwrap();
    pass(format!(
        "interior residual {worst:.2e} (bound 1e-8); progressions as expected; truncated_smiley proper for n ≤ 8; \
         dim C_2(J_n) {c2:?}; dim C_2(C_2(J_n)) {c2c2:?} (recorded only)"
    ))
}

fn cross_validation() -> Outcome {
    let t = tol();
    let mut worst: f64 = 0.0;
    for idx in 0..30u64 {
        let n = 2 + (idx as usize % 3);
        let seed = 9000 + idx;
        let a = match idx % 3 {
            0 => random_generic(n, seed),
            1 => random_derogatory(n, seed).unwrap(),
            _ => random_nilpotent(n, seed).unwrap(),
        };
        let l = 1 + (idx as usize % 3);
        let k = 1 + (idx as usize / 3) % 3;
        let span = centralizer(&a, l, &t).unwrap();
        let exact = symmetrized_ad_kernel(&span, k, &t, 200_000).unwrap();
        let sampled = randomized_set_centralizer(&span, k, &t, 4, seed).unwrap();
        let eq = subspace_equal(&exact, &sampled, &t).unwrap();
        worst = worst.max(eq.residual);
        if exact.dim() != sampled.dim() || eq.residual > 1e-8 {
            return fail(format!(
                "instance {idx}: polarized dim {} vs randomized dim {}, residual {:.2e}",
                exact.dim(),
                sampled.dim(),
                eq.residual
            ));
        }
    }
    pass(format!("30 instances agree, worst mutual containment residual {worst:.2e} (bound 1e-8)"))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        r#"{"family": "random-type-m", "sizes": [3, 4, 5], "m": 1, "kl_grid": [[1, 3], [2, 3], [3, 3], [2, 2]], "seeds": [11, 12, 13]}"#,
    )
    .unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "8", "1"] {
        let out = dir.path().join(format!("report-{}.json", outputs.len()));
        let code = centralab::cli::dispatch([
            "centralab",
            "batch",
            "--config",
            config.to_str().unwrap(),
            "--threads",
            threads,
            "--seed",
            "77",
            "--output",
            out.to_str().unwrap(),
        ]);
        if code != 0 {
            return fail(format!("batch with {threads} threads exited with {code}"));
        }
        outputs.push(std::fs::read(&out).unwrap());
    }
    if outputs.windows(2).all(|w| w[0] == w[1]) {
        pass(format!("3 batch runs (threads 1, 8, 1) produced identical {}-byte reports", outputs[0].len()))
    } else {
        fail("reports differ between runs")
    }
}

fn main() {
    type Criterion = (&'static str, Duration, fn() -> Outcome);
    let criteria: [Criterion; 9] = [
        ("lift correctness", Duration::from_secs(5), lift_correctness),
        ("C_s(A) = C_1(A) for normal A", Duration::from_secs(30), lemma21),
        ("classical Smiley: proper (s,s)-type", Duration::from_secs(600), classical_smiley),
        ("type-m Smiley for l = 2m+1, k ≤ l", Duration::from_secs(600), type_m_smiley),
        ("nilpotent vanishing, multipliers, Re/Im and Fuglede", Duration::from_secs(10), ad_identities),
        ("Jordan–Chevalley round trip", Duration::from_secs(30), jordan_round_trip),
        ("truncated shift structure", Duration::from_secs(300), shift_structure),
        ("polarized vs randomized set centralizer", Duration::from_secs(300), cross_validation),
        ("batch determinism across thread counts", Duration::from_secs(600), determinism),
    ];
    let mut failures = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= *limit;
        let ok = outcome.ok && in_time;
        if !ok {
            failures += 1;
        }
        println!(
            "{} criterion {}: {name}: {} [{:.2}s, limit {}s]",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            outcome.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
