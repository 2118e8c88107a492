//! A four-history DF that survives `n` copies of itself but not `n + 1`.
//!
//! `D = ½ εA ⊗ |0⟩⟨0| + ½ (𝕀 − εA) ⊗ |1⟩⟨1|` with `A = [[1, λ], [λ, 1]]`,
//! over histories `(a, b) ∈ {0,1}²` at flat index `2a + b`. The second
//! property selects the block, so `D` is block diagonal on `{0, 2}` and
//! `{1, 3}`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::axioms::{
    check_weak_positivity, validate_df, CheckOptions, PositivityReport, Strategy, ValidationReport,
    Verdict,
};
use crate::compose::{product_form, tensor_power, DEFAULT_DIM_CAP};
use crate::df::DecoherenceFunctional;
use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, C64};
use crate::scan::{self, MAX_SCAN_DIM};
use crate::space::{Event, Factor, HistorySpace};
use crate::tol::Tolerances;

/// Upper end of the default λ search.
pub const LAMBDA_SEARCH_MAX: f64 = 1_048_576.0;

/// Largest `(n+1)`-copy dimension evaluated on a dense matrix.
const DENSE_WITNESS_DIM: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Params {
    pub lambda: f64,
    pub epsilon: f64,
    pub n: usize,
}

impl Lemma1Params {
    pub fn new(lambda: f64, epsilon: f64, n: usize) -> Result<Self> {
        check_bounds(lambda, epsilon)?;
        if n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        Ok(Self { lambda, epsilon, n })
    }
}

fn check_bounds(lambda: f64, epsilon: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda = {lambda} must exceed 1"
        )));
    }
    let max_eps = 1.0 / (1.0 + lambda);
    // one ulp of slack so ε = 1/(1+λ) computed elsewhere is accepted
    if !(epsilon > 0.0 && epsilon <= max_eps * (1.0 + f64::EPSILON)) {
        return Err(Error::InvalidParameter(format!(
            "epsilon = {epsilon} must lie in (0, 1/(1+lambda)] = (0, {max_eps}]"
        )));
    }
    Ok(())
}

/// The 4×4 matrix for any `(λ, ε)`, without parameter checks.
pub fn lemma1_matrix(lambda: f64, epsilon: f64) -> ComplexMatrix {
    let block = |b: usize, a: usize, a2: usize| -> f64 {
        let ea = epsilon * if a == a2 { 1.0 } else { lambda };
        let id = if a == a2 { 1.0 } else { 0.0 };
        if b == 0 {
            0.5 * ea
        } else {
            0.5 * (id - ea)
        }
    };
    ComplexMatrix::from_fn(4, |i, j| {
        let (a, b) = (i / 2, i % 2);
        let (a2, b2) = (j / 2, j % 2);
        C64::new(if b == b2 { block(b, a, a2) } else { 0.0 }, 0.0)
    })
}

pub fn lemma1_space() -> Arc<HistorySpace> {
    Arc::new(
        HistorySpace::factored(vec![Factor::new("a", 2), Factor::new("b", 2)]).expect("2x2 space"),
    )
}

pub fn lemma1_df(lambda: f64, epsilon: f64, tol: &Tolerances) -> Result<DecoherenceFunctional> {
    check_bounds(lambda, epsilon)?;
    DecoherenceFunctional::from_matrix(lemma1_matrix(lambda, epsilon), lemma1_space(), true, tol)
}

/// `ε = 1/(λ^{n+½} + 1)`, small enough for the `(n+1)`-copy witness to go
/// negative.
pub fn lemma1_epsilon(lambda: f64, n: usize) -> f64 {
    1.0 / (lambda.powf(n as f64 + 0.5) + 1.0)
}

/// `|V⟩ = |0,0⟩^{⊗n}|0,1⟩ + |1,0⟩^{⊗n}|1,1⟩` on `D^{⊗(n+1)}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lemma1Witness {
    pub n: usize,
    /// Per-copy history indices of the two histories in the event.
    pub tuples: [Vec<usize>; 2],
}

impl Lemma1Witness {
    pub fn new(n: usize) -> Self {
        let mut first = vec![0; n];
        first.push(1);
        let mut second = vec![2; n];
        second.push(3);
        Self {
            n,
            tuples: [first, second],
        }
    }

    /// Flat indices in `D^{⊗(n+1)}`, or `None` once `4^{n+1}` overflows.
    pub fn flat_indices(&self) -> Option<[usize; 2]> {
        let flat = |t: &[usize]| {
            t.iter()
                .try_fold(0usize, |acc, &d| acc.checked_mul(4)?.checked_add(d))
        };
        Some([flat(&self.tuples[0])?, flat(&self.tuples[1])?])
    }

    pub fn to_event(&self, space: &Arc<HistorySpace>) -> Result<Event> {
        let idx = self.flat_indices().ok_or(Error::DimensionCap {
            dim: usize::MAX,
            cap: space.size(),
        })?;
        Event::from_indices(space, &idx)
    }
}

pub fn lemma1_witness(n: usize) -> Lemma1Witness {
    Lemma1Witness::new(n)
}

/// `<V|D^{⊗(n+1)}|V> = (ε/2)ⁿ · [1 − ε(1 + λ^{n+1})]`.
pub fn lemma1_witness_value(lambda: f64, epsilon: f64, n: usize) -> f64 {
    (epsilon / 2.0).powi(n as i32) * (1.0 - epsilon * (1.0 + lambda.powi(n as i32 + 1)))
}

/// The same quantity evaluated copy by copy from the 4×4 entries.
pub fn lemma1_witness_value_factorized(lambda: f64, epsilon: f64, n: usize) -> f64 {
    let d =
        DecoherenceFunctional::raw(lemma1_matrix(lambda, epsilon), lemma1_space()).expect("4x4");
    let w = Lemma1Witness::new(n);
    product_form(&d, &w.tuples).expect("tuples in range").re
}

/// `1 − ‖A‖^{n₁} · ‖B^{⊗n₂} − 𝕀‖` with `B = 𝕀 − εA`, from the exact 2×2
/// spectra (`A`: `1 ± λ`; `B`: `1 − ε(1 ± λ)`). A positive value is a lower
/// bound on `<W̃|A^{⊗n₁} ⊗ B^{⊗n₂}|W̃>` over normalized binary `W̃`, which
/// holds because `A = 𝕀 + Ã` with `Ã` entrywise non-negative.
pub fn norm_bound(lambda: f64, epsilon: f64, n1: usize, n2: usize) -> f64 {
    let norm_a = 1.0 + lambda;
    let low = 1.0 - epsilon * (1.0 + lambda);
    let high = 1.0 - epsilon * (1.0 - lambda);
    let dev = (0..=n2)
        .map(|j| (low.powi(j as i32) * high.powi((n2 - j) as i32) - 1.0).abs())
        .fold(0.0, f64::max);
    1.0 - norm_a.powi(n1 as i32) * dev
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockCheckMode {
    /// Try the norm certificate first, enumerate only when it fails.
    CertificateFirst,
    EnumerateOnly,
}

/// `A^{⊗n₁} ⊗ B^{⊗n₂}` as a real `2ⁿ` matrix (block scalars dropped).
pub fn lemma1_block(lambda: f64, epsilon: f64, n1: usize, n2: usize) -> ComplexMatrix {
    let a = ComplexMatrix::from_rows(&[&[1.0, lambda], &[lambda, 1.0]]).expect("2x2");
    let b = ComplexMatrix::from_rows(&[
        &[1.0 - epsilon, -epsilon * lambda],
        &[-epsilon * lambda, 1.0 - epsilon],
    ])
    .expect("2x2");
    let mut m = ComplexMatrix::identity(1);
    for _ in 0..n1 {
        m = m.kron(&a);
    }
    for _ in 0..n2 {
        m = m.kron(&b);
    }
    m
}

/// Weak positivity of `D^{⊗n}` through its blocks `A^{⊗n₁} ⊗ B^{⊗n₂}`,
/// `n₂ = 1..=n` (the `n₂ = 0` block has non-negative entries). Permuted
/// arrangements of the same `(n₁, n₂)` are equivalent under a relabelling of
/// histories and are not repeated.
pub fn block_positivity_check(
    lambda: f64,
    epsilon: f64,
    n: usize,
    mode: BlockCheckMode,
    opts: &CheckOptions,
) -> Result<PositivityReport> {
    check_bounds(lambda, epsilon)?;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let mut enumerated = false;
    let mut checked = 0u64;
    for n2 in 1..=n {
        let n1 = n - n2;
        if mode == BlockCheckMode::CertificateFirst && norm_bound(lambda, epsilon, n1, n2) > 0.0 {
            continue;
        }
        let dim = 1usize
            .checked_shl(n as u32)
            .filter(|&d| d <= MAX_SCAN_DIM)
            .ok_or(Error::DimensionCap {
                dim: 1usize.checked_shl(n as u32).unwrap_or(usize::MAX),
                cap: MAX_SCAN_DIM,
            })?;
        enumerated = true;
        let block = lemma1_block(lambda, epsilon, n1, n2);
        let out = scan::scan_binary_forms(&block.real_parts(), dim, &opts.scan())?;
        checked += out.vectors_checked;
        if let Some(v) = out.violation {
            let mut r = PositivityReport {
                verdict: Verdict::Fail,
                witness: Some(v.indices),
                witness_value: Some(v.value),
                vectors_checked: checked,
                strategy: Strategy::BlockReduced,
                witness_block: None,
            };
            r.witness_block = Some(vec![n1, n2]);
            return Ok(r);
        }
    }
    Ok(if enumerated {
        PositivityReport {
            verdict: Verdict::Pass,
            witness: None,
            witness_value: None,
            vectors_checked: checked,
            strategy: Strategy::BlockReduced,
            witness_block: None,
        }
    } else {
        PositivityReport {
            verdict: Verdict::Certified,
            witness: None,
            witness_value: None,
            vectors_checked: 0,
            strategy: Strategy::NormBound,
            witness_block: None,
        }
    })
}

/// Doubles λ from `lambda0` until `ε = lemma1_epsilon(λ, n)` gives a passing
/// `n`-copy block check and a negative `(n+1)`-copy witness.
pub fn find_lambda(
    n: usize,
    lambda0: f64,
    lambda_max: f64,
    opts: &CheckOptions,
) -> Result<Lemma1Params> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let mut lambda = lambda0;
    while lambda <= lambda_max {
        let epsilon = lemma1_epsilon(lambda, n);
        let blocks =
            block_positivity_check(lambda, epsilon, n, BlockCheckMode::CertificateFirst, opts);
        let ok = matches!(&blocks, Ok(r) if r.passed());
        if ok && lemma1_witness_value(lambda, epsilon, n) < -opts.tol.pos {
            return Lemma1Params::new(lambda, epsilon, n);
        }
        lambda *= 2.0;
    }
    Err(Error::SearchExhausted { limit: lambda_max })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Lemma1Report {
    pub params: Lemma1Params,
    pub tolerances: Tolerances,
    /// Axiom checks on the single-copy DF.
    pub single_copy: ValidationReport,
    /// Block-reduced verdict for `D^{⊗n}`.
    pub n_copy_verdict: PositivityReport,
    /// Full enumeration of `D^{⊗n}` when it has at most 16 histories.
    pub n_copy_brute_force: Option<PositivityReport>,
    /// Full enumeration of `D^{⊗(n+1)}` when it has at most 16 histories.
    pub n_plus_one_brute_force: Option<PositivityReport>,
    pub witness: Lemma1Witness,
    pub witness_flat_indices: Option<[usize; 2]>,
    /// Closed form.
    pub witness_value: f64,
    /// Copy-by-copy evaluation.
    pub witness_value_numeric: f64,
    /// Evaluation on the materialized `(n+1)`-copy matrix, when small enough.
    pub witness_value_dense: Option<f64>,
    pub lemma_holds: bool,
}

/// Runs the whole experiment. Without `lambda` the value comes from
/// [`find_lambda`]; without `epsilon` it is [`lemma1_epsilon`].
pub fn run_lemma1(
    n: usize,
    lambda: Option<f64>,
    epsilon: Option<f64>,
    opts: &CheckOptions,
) -> Result<Lemma1Report> {
    let params = match (lambda, epsilon) {
        (Some(l), e) => Lemma1Params::new(l, e.unwrap_or_else(|| lemma1_epsilon(l, n)), n)?,
        (None, None) => find_lambda(n, 2.0, LAMBDA_SEARCH_MAX, opts)?,
        (None, Some(_)) => return Err(Error::InvalidParameter("--eps requires --lambda".into())),
    };
    let Lemma1Params { lambda, epsilon, n } = params;
    let tol = opts.tol;
    let d = lemma1_df(lambda, epsilon, &tol)?;
    let single_copy = validate_df(&d, opts)?;
    let n_copy_verdict =
        block_positivity_check(lambda, epsilon, n, BlockCheckMode::CertificateFirst, opts)?;

    let brute = |copies: usize| -> Result<Option<PositivityReport>> {
        if 4usize.pow(copies as u32) > 16 {
            return Ok(None);
        }
        let p = tensor_power(&d, copies, DEFAULT_DIM_CAP)?;
        Ok(Some(check_weak_positivity(&p, Strategy::BruteForce, opts)?))
    };
    let n_copy_brute_force = if n <= 2 { brute(n)? } else { None };
    let n_plus_one_brute_force = if n < 2 { brute(n + 1)? } else { None };

    let witness = Lemma1Witness::new(n);
    let witness_value = lemma1_witness_value(lambda, epsilon, n);
    let witness_value_numeric = product_form(&d, &witness.tuples)?.re;
    let witness_value_dense = match 4usize.checked_pow(n as u32 + 1) {
        Some(dim) if dim <= DENSE_WITNESS_DIM => {
            let p = tensor_power(&d, n + 1, DEFAULT_DIM_CAP)?;
            let w = witness.to_event(p.space())?;
            Some(p.evaluate(&w, &w)?.re)
        }
        _ => None,
    };
    let lemma_holds =
        n_copy_verdict.passed() && lemma1_witness_value(lambda, epsilon, n) < -tol.pos;
    Ok(Lemma1Report {
        params,
        tolerances: tol,
        single_copy,
        n_copy_verdict,
        n_copy_brute_force,
        n_plus_one_brute_force,
        witness_flat_indices: witness.flat_indices(),
        witness,
        witness_value,
        witness_value_numeric,
        witness_value_dense,
        lemma_holds,
    })
}
