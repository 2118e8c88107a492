//! End-to-end acceptance criteria. Each criterion prints one PASS/FAIL line
//! with its measured runtime; the test fails if any criterion does.

use std::time::{Duration, Instant};

use dflab::axioms::{
    check_partition_decoherence, check_strong_positivity, check_weak_positivity, validate_df,
};
use dflab::bell::{check_behavior_consistency, Behavior};
use dflab::compose::{check_composability, tensor, DEFAULT_DIM_CAP};
use dflab::lemma1::{
    lemma1_df, lemma1_epsilon, lemma1_witness_value_factorized, run_lemma1, LAMBDA_SEARCH_MAX,
};
use dflab::matrix::ComplexMatrix;
use dflab::maximality::{is_nonneg_hermitian, nondecohering_property_partition, verify_lemma2};
use dflab::quantum::{contraction_check, dv_closed_form, dv_family, quantum_df};
use dflab::sample::{
    random_nonneg_df, random_quantum_model, random_sp_df, random_unit_vector, seeded,
};
use dflab::space::{Factor, HistorySpace, Partition};
use dflab::{
    CheckOptions, DecoherenceFunctional, DecoherenceMode, Strategy, Tolerances, ValidationLevel,
    Verdict,
};
use rand::Rng;
use std::sync::Arc;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn opts() -> CheckOptions {
    CheckOptions::default()
}

/// Independent oracle: `(1/2) ε (1 − ε(1 + λ²))` for one extra copy.
fn two_copy_closed_form(lambda: f64, eps: f64) -> f64 {
    0.5 * eps * (1.0 - eps * (1.0 + lambda * lambda))
}

fn criterion_1() -> Outcome {
    let lambda = 2.0;
    let eps = 1.0 / (2f64.powf(1.5) + 1.0);
    let r = run_lemma1(1, Some(lambda), None, &opts()).map_err(err)?;
    ensure(
        (r.params.epsilon - eps).abs() < 1e-15,
        "ε differs from 1/(2^{3/2}+1)",
    )?;
    ensure(
        r.single_copy.level >= ValidationLevel::WeaklyPositive,
        "single copy not weakly positive",
    )?;
    let weak = r
        .single_copy
        .weak_positivity
        .as_ref()
        .ok_or("no weak check")?;
    ensure(
        weak.strategy == Strategy::BruteForce && weak.vectors_checked == 15,
        "single copy not fully enumerated",
    )?;
    let two = r
        .n_plus_one_brute_force
        .as_ref()
        .ok_or("no 2-copy enumeration")?;
    ensure(two.verdict == Verdict::Fail, "D⊗D passes positivity")?;
    let oracle = two_copy_closed_form(lambda, eps);
    ensure(
        (r.witness_value - (-0.039967)).abs() <= 1e-6,
        format!("witness value {}", r.witness_value),
    )?;
    ensure(
        (r.witness_value - oracle).abs() <= 1e-10,
        "closed form disagrees with oracle",
    )?;
    ensure(
        (r.witness_value_dense.ok_or("no dense value")? - oracle).abs() <= 1e-10,
        "dense value disagrees",
    )?;
    Ok(format!("witness value {:.9e}", r.witness_value))
}

fn criterion_2() -> Outcome {
    let (lambda, eps) = (4.0, 1.0 / 33.0);
    let r = run_lemma1(2, Some(lambda), Some(eps), &opts()).map_err(err)?;
    ensure(r.n_copy_verdict.passed(), "block check on D⊗D fails")?;
    let d = lemma1_df(lambda, eps, &Tolerances::default()).map_err(err)?;
    let blocks = check_composability(&d, 2, Strategy::BlockReduced, &opts()).map_err(err)?;
    let brute = check_composability(&d, 2, Strategy::BruteForce, &opts()).map_err(err)?;
    ensure(
        blocks.passed() && brute.passed(),
        "block-reduced and brute-force verdicts do not both pass",
    )?;
    let full = r
        .n_copy_brute_force
        .as_ref()
        .ok_or("no 16-history enumeration")?;
    ensure(
        full.verdict == Verdict::Pass && full.vectors_checked == (1 << 16) - 1,
        "16×16 enumeration incomplete",
    )?;
    // (1/66)² (1 − 65/33)
    let expected = -32.0 / 143_748.0;
    ensure(
        (r.witness_value - (-2.226e-4)).abs() <= 1e-7,
        format!("closed form {}", r.witness_value),
    )?;
    ensure(
        (r.witness_value_numeric - (-2.226e-4)).abs() <= 1e-7,
        "factorized value off",
    )?;
    ensure(
        (r.witness_value - expected).abs() <= 1e-15,
        "closed form differs from exact rational",
    )?;
    ensure(
        (r.witness_value_numeric - expected).abs() <= 1e-15,
        "factorized differs from exact rational",
    )?;
    Ok(format!("witness value {:.9e}", r.witness_value))
}

fn criterion_3() -> Outcome {
    let r = run_lemma1(3, None, None, &opts()).map_err(err)?;
    ensure(r.params.lambda <= LAMBDA_SEARCH_MAX, "λ beyond search cap")?;
    ensure(r.n_copy_verdict.passed(), "block checks fail")?;
    ensure(r.witness_value < -r.tolerances.pos, "witness not negative")?;
    let fact = lemma1_witness_value_factorized(r.params.lambda, r.params.epsilon, 3);
    ensure(
        (r.witness_value - fact).abs() <= 1e-10,
        "closed form and factorized disagree",
    )?;
    ensure(r.lemma_holds, "lemma does not hold")?;
    Ok(format!(
        "λ = {}, ε = {:.6e}, witness {:.6e} ({:?})",
        r.params.lambda, r.params.epsilon, r.witness_value, r.n_copy_verdict.verdict
    ))
}

fn criterion_4() -> Outcome {
    let d = lemma1_df(2.0, 0.261204, &Tolerances::default()).map_err(err)?;
    let r = verify_lemma2(&d, &opts()).map_err(err)?;
    ensure(
        (r.min_eigenvalue - (-0.130602)).abs() <= 1e-9,
        format!("min eigenvalue {}", r.min_eigenvalue),
    )?;
    ensure(
        (r.lhs - (-0.0326505)).abs() <= 1e-9,
        format!("lhs {}", r.lhs),
    )?;
    ensure(
        (r.rhs - (-0.0326505)).abs() <= 1e-9,
        format!("rhs {}", r.rhs),
    )?;
    ensure((r.lhs - r.rhs).abs() <= 1e-10 && r.matched, "identity off")?;
    ensure(r.product_dim == 32, "product is not 32×32")?;
    ensure(
        r.witness == vec![0, 10, 20, 30],
        "witness is not Σ_a |a⟩|a,0⟩",
    )?;
    ensure(
        r.witness_check.verdict == Verdict::Fail
            && r.witness_check.witness.as_deref() == Some(&r.witness[..]),
        "positivity check on the constructed witness does not fail",
    )?;
    ensure(
        r.block_check
            .as_ref()
            .is_some_and(|b| b.verdict == Verdict::Fail),
        "block scan passes",
    )?;
    Ok(format!("lhs = rhs = {:.10}", r.lhs))
}

fn criterion_5() -> Outcome {
    let tol = Tolerances::default();
    let mut rng = seeded(5);
    let shapes = [(2, 2), (2, 3), (3, 2), (2, 4), (4, 2)];
    let mut worst_eig = f64::INFINITY;
    let mut worst_dev = 0.0_f64;
    for k in 0..100 {
        let (da, db) = shapes[k % shapes.len()];
        let model = random_quantum_model(&mut rng, da, db, 2, &tol).map_err(err)?;
        let d = quantum_df(&model, DEFAULT_DIM_CAP, &tol).map_err(err)?;
        let s = check_strong_positivity(&d, &tol).map_err(err)?;
        worst_eig = worst_eig.min(s.min_eigenvalue);
        let beh = Behavior::from_model(&model, &tol).map_err(err)?;
        let r = check_behavior_consistency(&d, &beh, DecoherenceMode::Strong, &tol).map_err(err)?;
        worst_dev = worst_dev.max(r.worst_deviation);
        ensure(r.passed, format!("model {k} fails consistency"))?;
    }
    ensure(worst_eig >= -1e-10, format!("min eigenvalue {worst_eig:e}"))?;
    ensure(worst_dev <= 1e-10, format!("worst deviation {worst_dev:e}"))?;
    Ok(format!(
        "min eigenvalue {worst_eig:.3e}, worst deviation {worst_dev:.3e}"
    ))
}

fn criterion_6() -> Outcome {
    let tol = Tolerances::default();
    let mut rng = seeded(6);
    let (mut worst_form, mut worst_contr) = (0.0_f64, 0.0_f64);
    for _ in 0..50 {
        let m = rng.random_range(2..=6);
        let v = random_unit_vector(&mut rng, m);
        let d = dv_family(&v, &tol).map_err(err)?;
        let c = dv_closed_form(&v, &tol).map_err(err)?;
        worst_form = worst_form.max(d.matrix().max_abs_diff(&c).map_err(err)?);
        worst_contr = worst_contr.max(contraction_check(&v, &tol).map_err(err)?.max_deviation);
    }
    ensure(
        worst_form <= 1e-12,
        format!("closed form deviation {worst_form:e}"),
    )?;
    ensure(
        worst_contr <= 1e-12,
        format!("contraction deviation {worst_contr:e}"),
    )?;
    Ok(format!(
        "closed form {worst_form:.1e}, contraction {worst_contr:.1e}"
    ))
}

fn criterion_7() -> Outcome {
    let tol = Tolerances::default();
    let space = Arc::new(
        HistorySpace::factored(vec![Factor::new("x", 2), Factor::new("y", 2)]).map_err(err)?,
    );
    let pairs: Vec<(usize, usize)> = (0..4)
        .flat_map(|i| (i + 1..4).map(move |j| (i, j)))
        .collect();
    let mut violating = 0;
    // off-diagonal magnitudes: present (0.05), below tolerance (1e-12) or absent
    for present in 0u32..(1 << pairs.len()) {
        for tiny in [false, true] {
            let mut m = vec![0.0; 16];
            for i in 0..4 {
                m[i * 4 + i] = 0.25;
            }
            for (k, &(i, j)) in pairs.iter().enumerate() {
                let v = if present >> k & 1 == 1 {
                    0.05
                } else if tiny {
                    1e-12
                } else {
                    0.0
                };
                m[i * 4 + j] = v;
                m[j * 4 + i] = v;
            }
            let d = DecoherenceFunctional::from_matrix(
                ComplexMatrix::from_real(4, &m).map_err(err)?,
                space.clone(),
                false,
                &tol,
            )
            .map_err(err)?;
            let r = nondecohering_property_partition(&d, &tol).map_err(err)?;
            match (present != 0, r) {
                (true, Some(r)) => {
                    violating += 1;
                    ensure(
                        r.cross_term.re > tol.eq,
                        "reported cross term below tolerance",
                    )?;
                    let rep = check_partition_decoherence(
                        &d,
                        &r.partition,
                        DecoherenceMode::Strong,
                        &tol,
                    )
                    .map_err(err)?;
                    ensure(
                        rep.max_off_diagonal > tol.eq,
                        "reported partition decoheres",
                    )?;
                }
                (false, None) => {
                    for k in 0..2 {
                        let p = Partition::by_property(&space, k).map_err(err)?;
                        let rep =
                            check_partition_decoherence(&d, &p, DecoherenceMode::Strong, &tol)
                                .map_err(err)?;
                        ensure(
                            rep.verdict,
                            "diagonal DF fails to decohere a property partition",
                        )?;
                    }
                }
                (true, None) => return Err(format!("pattern {present:06b} not detected")),
                (false, Some(_)) => return Err("diagonal pattern reported as violating".into()),
            }
        }
    }
    Ok(format!(
        "{} patterns, {violating} violating",
        2 * (1 << pairs.len())
    ))
}

fn criterion_8() -> Outcome {
    let tol = Tolerances::default();
    let mut rng = seeded(8);
    let mut worst = f64::INFINITY;
    for _ in 0..200 {
        let (n1, n2) = (rng.random_range(2..=8), rng.random_range(2..=8));
        let a = random_sp_df(&mut rng, n1, &tol).map_err(err)?;
        let b = random_sp_df(&mut rng, n2, &tol).map_err(err)?;
        let t = tensor(&a, &b, DEFAULT_DIM_CAP).map_err(err)?;
        worst = worst.min(
            check_strong_positivity(&t, &tol)
                .map_err(err)?
                .min_eigenvalue,
        );
    }
    ensure(
        worst >= -1e-10,
        format!("SP product with eigenvalue {worst:e}"),
    )?;
    for _ in 0..200 {
        let (n1, n2) = (rng.random_range(2..=4), rng.random_range(2..=4));
        let a = random_nonneg_df(&mut rng, n1, &tol).map_err(err)?;
        let b = random_nonneg_df(&mut rng, n2, &tol).map_err(err)?;
        let t = tensor(&a, &b, DEFAULT_DIM_CAP).map_err(err)?;
        ensure(
            is_nonneg_hermitian(t.matrix(), tol.eq),
            "product left the non-negative class",
        )?;
        let r = check_weak_positivity(&t, Strategy::BruteForce, &opts()).map_err(err)?;
        ensure(
            r.verdict == Verdict::Pass,
            "non-negative product fails positivity",
        )?;
    }
    Ok(format!("min SP product eigenvalue {worst:.3e}"))
}

fn criterion_9() -> Outcome {
    let tol = Tolerances::default();
    let mut compared = 0;
    for lambda in [1.5, 2.0, 3.0, 4.0, 8.0] {
        for k in 1..=5 {
            let eps = k as f64 / 5.0 / (1.0 + lambda);
            let d = lemma1_df(lambda, eps, &tol).map_err(err)?;
            for n in [1, 2] {
                let b = check_composability(&d, n, Strategy::BlockReduced, &opts()).map_err(err)?;
                let f = check_composability(&d, n, Strategy::BruteForce, &opts()).map_err(err)?;
                ensure(
                    b.passed() == f.passed(),
                    format!("λ={lambda} ε={eps} n={n}: verdicts differ"),
                )?;
                compared += 1;
            }
        }
    }
    // keep the grid honest: it must contain both verdicts
    let d = lemma1_df(2.0, lemma1_epsilon(2.0, 1), &tol).map_err(err)?;
    ensure(
        !check_composability(&d, 2, Strategy::BruteForce, &opts())
            .map_err(err)?
            .passed(),
        "no failing case",
    )?;
    ensure(
        validate_df(&d, &opts()).map_err(err)?.level == ValidationLevel::WeaklyPositive,
        "grid DF invalid",
    )?;
    Ok(format!("{compared} verdict pairs agree"))
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 9] = [
        (
            "1 one copy composes, two do not",
            criterion_1,
            Duration::from_secs(1),
        ),
        (
            "2 two copies compose, three do not",
            criterion_2,
            Duration::from_secs(10),
        ),
        (
            "3 λ search for three copies",
            criterion_3,
            Duration::from_secs(60),
        ),
        (
            "4 quantum partner breaks positivity",
            criterion_4,
            Duration::from_secs(1),
        ),
        (
            "5 quantum DFs are PSD and reproduce tr(ρEF)",
            criterion_5,
            Duration::from_secs(60),
        ),
        (
            "6 D_v closed form and contraction",
            criterion_6,
            Duration::from_secs(60),
        ),
        (
            "7 non-negative DFs decohere only if diagonal",
            criterion_7,
            Duration::from_secs(60),
        ),
        (
            "8 tensor closure of PSD and non-negative DFs",
            criterion_8,
            Duration::from_secs(60),
        ),
        (
            "9 block-reduced and brute-force verdicts agree",
            criterion_9,
            Duration::from_secs(60),
        ),
    ];
    let mut failures = Vec::new();
    for (name, run, limit) in criteria {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let result = result.and_then(|msg| {
            if elapsed <= limit {
                Ok(msg)
            } else {
                Err(format!("took {elapsed:?}, limit {limit:?}"))
            }
        });
        match result {
            Ok(msg) => println!(
                "PASS criterion {name} [{:.3}s]: {msg}",
                elapsed.as_secs_f64()
            ),
            Err(msg) => {
                println!(
                    "FAIL criterion {name} [{:.3}s]: {msg}",
                    elapsed.as_secs_f64()
                );
                failures.push(name);
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
