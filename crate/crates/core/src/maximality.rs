//! Composition against explicit partners: the quantum partner that exposes
//! any non-PSD DF, and the class of non-negative Hermitian matrices.

use serde::{Deserialize, Serialize};

use crate::axioms::{
    cell_matrix, check_strong_positivity, check_weak_positivity, check_witness, CheckOptions,
    PositivityReport, Strategy,
};
use crate::compose::{detect_blocks, tensor};
use crate::df::{DecoherenceFunctional, DfJson};
use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, C64};
use crate::quantum::{conjugate, contraction_witness_indices, dv_family};
use crate::scan::{self, ScanOptions, MAX_SCAN_DIM};
use crate::space::{Event, Partition};
use crate::tol::Tolerances;

/// Largest input dimension for which the `2m²` composition is materialized.
pub const MAX_PARTNER_INPUT_DIM: usize = 45;

/// Minimal eigenpair, eigenvector phase-canonical.
pub fn min_eig_witness(df: &DecoherenceFunctional, tol: &Tolerances) -> Result<(f64, Vec<C64>)> {
    let s = check_strong_positivity(df, tol)?;
    Ok((s.min_eigenvalue, s.min_eigenvector))
}

/// `D′ = D_{|v*⟩}` for the minimal eigenvector `v` of `D`, and the binary
/// witness `Σ_a |a⟩|a,0⟩` on the product space.
pub fn counterexample_partner(
    df: &DecoherenceFunctional,
    tol: &Tolerances,
) -> Result<(DecoherenceFunctional, Vec<usize>)> {
    let (min, v) = min_eig_witness(df, tol)?;
    if min >= -tol.pos {
        return Err(Error::AlreadyStronglyPositive);
    }
    let partner = dv_family(&conjugate(&v), tol)?;
    Ok((partner, contraction_witness_indices(df.dim())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Lemma2Report {
    pub tolerances: Tolerances,
    pub input_dim: usize,
    pub min_eigenvalue: f64,
    pub v: Vec<C64>,
    pub partner: DfJson,
    /// Histories of the witness event on the `2m²` product space.
    pub witness: Vec<usize>,
    pub product_dim: usize,
    /// `⟨w|D ⊗ D′|w⟩` on the materialized product.
    pub lhs: f64,
    /// `(1/m)⟨v|D|v⟩`
    pub rhs: f64,
    pub matched: bool,
    pub violated: bool,
    /// Positivity evaluated on exactly the constructed witness.
    pub witness_check: PositivityReport,
    /// Independent block-reduced scan of the product, when its blocks fit.
    pub block_check: Option<PositivityReport>,
}

/// Builds the partner, materializes `D ⊗ D′` and evaluates both sides of
/// `⟨w|D ⊗ D_{v*}|w⟩ = (1/m)⟨v|D|v⟩`.
pub fn verify_lemma2(df: &DecoherenceFunctional, opts: &CheckOptions) -> Result<Lemma2Report> {
    let tol = &opts.tol;
    let m = df.dim();
    if m > MAX_PARTNER_INPUT_DIM {
        return Err(Error::DimensionCap {
            dim: 2 * m * m,
            cap: 2 * MAX_PARTNER_INPUT_DIM * MAX_PARTNER_INPUT_DIM,
        });
    }
    let (min_eigenvalue, v) = min_eig_witness(df, tol)?;
    let (partner, witness) = counterexample_partner(df, tol)?;
    let product = tensor(df, &partner, usize::MAX)?;
    let event = Event::from_indices(product.space(), &witness)?;
    let lhs = product.evaluate(&event, &event)?.re;
    let rhs = df.matrix().quadratic_form(&v)?.re / m as f64;
    let witness_check = check_witness(&product, &event, tol)?;
    let blocks = detect_blocks(&product, tol.eq)?;
    let block_check = if blocks.max_block_dim() <= MAX_SCAN_DIM {
        Some(check_weak_positivity(
            &product,
            Strategy::BlockReduced,
            opts,
        )?)
    } else {
        None
    };
    Ok(Lemma2Report {
        tolerances: *tol,
        input_dim: m,
        min_eigenvalue,
        v,
        partner: partner.to_json(),
        product_dim: product.dim(),
        witness,
        lhs,
        rhs,
        matched: (lhs - rhs).abs() <= tol.eq,
        violated: lhs < -tol.pos,
        witness_check,
        block_check,
    })
}

/// Hermitian with every entry real and non-negative, within `tol`.
pub fn is_nonneg_hermitian(m: &ComplexMatrix, tol: f64) -> bool {
    m.hermiticity_deviation() <= tol && m.is_real_nonnegative(tol)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NondecoheringProperty {
    pub property: usize,
    pub partition: Partition,
    /// Property values `(b_k, c_k)` of the offending history pair.
    pub pair: (usize, usize),
    /// `D(A_{b_k}|A_{c_k})`
    pub cross_term: C64,
}

/// For `D` with non-negative entries, finds a single-property partition
/// that fails to decohere. The first off-diagonal entry above `tol`
/// (row-major) fixes the history pair; the first property on which the two
/// histories differ is used. Returns `None` exactly when `D` is diagonal.
pub fn nondecohering_property_partition(
    df: &DecoherenceFunctional,
    tol: &Tolerances,
) -> Result<Option<NondecoheringProperty>> {
    if df.space().factors().is_none() {
        return Err(Error::Unfactored);
    }
    if !is_nonneg_hermitian(df.matrix(), tol.eq) {
        return Err(Error::NotInClassP);
    }
    let n = df.dim();
    let m = df.matrix();
    let Some((b, c)) = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .find(|&(i, j)| i != j && m.get(i, j).norm() > tol.eq)
    else {
        return Ok(None);
    };
    let hb = df.space().decode(b)?;
    let hc = df.space().decode(c)?;
    let property = hb
        .iter()
        .zip(&hc)
        .position(|(x, y)| x != y)
        .expect("distinct histories differ in some property");
    let partition = Partition::by_property(df.space(), property)?;
    let pair = (hb[property], hc[property]);
    let cross_term = cell_matrix(df, &partition)[pair.0][pair.1];
    Ok(Some(NondecoheringProperty {
        property,
        partition,
        pair,
        cross_term,
    }))
}

/// Exponents `k` of the partner grid `t, s ∈ {2^k}`.
pub const PNN_GRID: std::ops::RangeInclusive<i32> = -6..=12;
pub const PNN_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PnnViolation {
    pub t: f64,
    pub s: f64,
    /// Histories of `M ⊗ [[1, t], [t, s]]` in the violating binary vector.
    pub witness: Vec<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PnnSearchReport {
    pub tolerances: Tolerances,
    pub violation: Option<PnnViolation>,
    pub vectors_checked: u64,
    pub budget_exhausted: bool,
}

/// Grid search for a 2×2 partner `[[1, t], [t, s]]` with `M ⊗ partner`
/// negative on some binary vector. `t` is the outer loop, `s` the inner,
/// both ascending; the first hit in that order is reported. An empty result
/// is evidence only.
pub fn pnn_violation_search(m: &ComplexMatrix, opts: &CheckOptions) -> Result<PnnSearchReport> {
    let tol = &opts.tol;
    let deviation = m.hermiticity_deviation();
    if deviation > tol.eq {
        return Err(Error::NotHermitian { deviation });
    }
    if is_nonneg_hermitian(m, tol.eq) {
        return Err(Error::InClassP);
    }
    let dim = 2 * m.dim();
    if dim > MAX_SCAN_DIM {
        return Err(Error::DimensionCap {
            dim,
            cap: MAX_SCAN_DIM,
        });
    }
    let grid: Vec<f64> = PNN_GRID.map(|k| 2f64.powi(k)).collect();
    let mut checked = 0u64;
    for &t in &grid {
        for &s in &grid {
            let partner = ComplexMatrix::from_rows(&[&[1.0, t], &[t, s]])?;
            let product = m.kron(&partner);
            let scan_opts = ScanOptions {
                tol: tol.pos,
                budget: Some(PNN_BUDGET - checked),
                workers: opts.workers,
            };
            let out = match scan::scan_binary_forms(&product.real_parts(), dim, &scan_opts) {
                Ok(out) => out,
                Err(Error::BudgetExhausted { .. }) => {
                    return Ok(PnnSearchReport {
                        tolerances: *tol,
                        violation: None,
                        vectors_checked: PNN_BUDGET,
                        budget_exhausted: true,
                    })
                }
                Err(e) => return Err(e),
            };
            checked += out.vectors_checked;
            if let Some(v) = out.violation {
                return Ok(PnnSearchReport {
                    tolerances: *tol,
                    violation: Some(PnnViolation {
                        t,
                        s,
                        witness: v.indices,
                        value: v.value,
                    }),
                    vectors_checked: checked,
                    budget_exhausted: false,
                });
            }
        }
    }
    Ok(PnnSearchReport {
        tolerances: *tol,
        violation: None,
        vectors_checked: checked,
        budget_exhausted: false,
    })
}
