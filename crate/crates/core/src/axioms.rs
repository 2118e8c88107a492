//! Executable DF axioms in matrix form: hermiticity, normalization, weak
//! positivity over binary vectors, decoherence of partitions, and strong
//! positivity (PSD) via the spectrum.

use serde::{Deserialize, Serialize};

use crate::compose::{detect_blocks, BlockStructure};
use crate::df::{DecoherenceFunctional, ValidationLevel};
use crate::error::{Error, Result};
use crate::matrix::{vec_norm, C64};
use crate::scan::{self, ScanOptions, MAX_SCAN_DIM};
use crate::space::{same_space, Event, HistorySpace, Partition};
use crate::tol::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    Fail,
    Certified,
}

impl Verdict {
    pub fn is_fail(self) -> bool {
        self == Verdict::Fail
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    BruteForce,
    BlockReduced,
    NormBound,
    /// A single caller-supplied binary vector was evaluated.
    SuppliedWitness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PositivityReport {
    pub verdict: Verdict,
    /// Indices of the histories in the witness event.
    pub witness: Option<Vec<usize>>,
    pub witness_value: Option<f64>,
    pub vectors_checked: u64,
    pub strategy: Strategy,
    /// Block type vector of the failing block, for block-reduced tensor checks.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness_block: Option<Vec<usize>>,
}

impl PositivityReport {
    pub(crate) fn pass(strategy: Strategy, vectors_checked: u64) -> Self {
        Self {
            verdict: Verdict::Pass,
            witness: None,
            witness_value: None,
            vectors_checked,
            strategy,
            witness_block: None,
        }
    }

    pub(crate) fn certified(strategy: Strategy) -> Self {
        Self {
            verdict: Verdict::Certified,
            ..Self::pass(strategy, 0)
        }
    }

    pub(crate) fn fail(
        strategy: Strategy,
        witness: Vec<usize>,
        value: f64,
        vectors_checked: u64,
    ) -> Self {
        Self {
            verdict: Verdict::Fail,
            witness: Some(witness),
            witness_value: Some(value),
            vectors_checked,
            strategy,
            witness_block: None,
        }
    }

    pub fn passed(&self) -> bool {
        !self.verdict.is_fail()
    }

    pub fn witness_event(&self, space: &std::sync::Arc<HistorySpace>) -> Option<Result<Event>> {
        self.witness.as_ref().map(|w| Event::from_indices(space, w))
    }
}

/// Knobs shared by the positivity checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    pub tol: Tolerances,
    pub budget: Option<u64>,
    pub workers: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            tol: Tolerances::default(),
            budget: None,
            workers: 1,
        }
    }
}

impl CheckOptions {
    pub(crate) fn scan(&self) -> ScanOptions {
        ScanOptions {
            tol: self.tol.pos,
            budget: self.budget,
            workers: self.workers,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HermiticityReport {
    pub ok: bool,
    pub max_deviation: f64,
}

pub fn check_hermiticity(df: &DecoherenceFunctional, tol: f64) -> HermiticityReport {
    let max_deviation = df.matrix().hermiticity_deviation();
    HermiticityReport {
        ok: max_deviation <= tol,
        max_deviation,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NormalizationReport {
    pub ok: bool,
    /// `<Ω|D|Ω>`
    pub value: C64,
}

pub fn check_normalization(df: &DecoherenceFunctional, tol: f64) -> NormalizationReport {
    let value = df.total();
    NormalizationReport {
        ok: (value - C64::new(1.0, 0.0)).norm() <= tol,
        value,
    }
}

/// `<u|D|u> ≥ 0` for every binary `u`, using the requested strategy.
///
/// `BlockReduced` detects the block structure from the sparsity pattern;
/// `NormBound` certifies through the spectrum and errors out when the
/// matrix is not PSD.
pub fn check_weak_positivity(
    df: &DecoherenceFunctional,
    strategy: Strategy,
    opts: &CheckOptions,
) -> Result<PositivityReport> {
    df.require(ValidationLevel::Hermitian)?;
    match strategy {
        Strategy::BruteForce => brute_force(df, opts),
        Strategy::BlockReduced => {
            let blocks = detect_blocks(df, opts.tol.eq)?;
            block_reduced(df, &blocks, opts)
        }
        Strategy::NormBound => {
            let spectral = check_strong_positivity(df, &opts.tol)?;
            if spectral.is_sp {
                Ok(PositivityReport::certified(Strategy::NormBound))
            } else {
                Err(Error::StrategyInapplicable(format!(
                    "no spectral certificate: minimal eigenvalue {:e}",
                    spectral.min_eigenvalue
                )))
            }
        }
        Strategy::SuppliedWitness => Err(Error::StrategyInapplicable(
            "use check_witness to evaluate a supplied vector".into(),
        )),
    }
}

/// Block-reduced check against a declared structure, verified first.
pub fn check_weak_positivity_with_blocks(
    df: &DecoherenceFunctional,
    blocks: &BlockStructure,
    opts: &CheckOptions,
) -> Result<PositivityReport> {
    df.require(ValidationLevel::Hermitian)?;
    blocks.verify(df.matrix(), opts.tol.eq)?;
    block_reduced(df, blocks, opts)
}

fn brute_force(df: &DecoherenceFunctional, opts: &CheckOptions) -> Result<PositivityReport> {
    let dim = df.dim();
    if dim > MAX_SCAN_DIM {
        return Err(Error::DimensionCap {
            dim,
            cap: MAX_SCAN_DIM,
        });
    }
    let re = df.matrix().real_parts();
    let out = scan::scan_binary_forms(&re, dim, &opts.scan())?;
    Ok(match out.violation {
        Some(v) => PositivityReport::fail(
            Strategy::BruteForce,
            v.indices,
            v.value,
            out.vectors_checked,
        ),
        None => PositivityReport::pass(Strategy::BruteForce, out.vectors_checked),
    })
}

/// Blocks are scanned in order; the witness is the lowest-order violator
/// of the first failing block.
fn block_reduced(
    df: &DecoherenceFunctional,
    blocks: &BlockStructure,
    opts: &CheckOptions,
) -> Result<PositivityReport> {
    if let Some(big) = blocks
        .blocks()
        .iter()
        .find(|b| b.indices.len() > MAX_SCAN_DIM)
    {
        return Err(Error::DimensionCap {
            dim: big.indices.len(),
            cap: MAX_SCAN_DIM,
        });
    }
    let mut checked = 0u64;
    for block in blocks.blocks() {
        let sub = df.matrix().submatrix(&block.indices);
        if sub.is_real_nonnegative(0.0) {
            continue;
        }
        let re = sub.real_parts();
        let mut scan_opts = opts.scan();
        scan_opts.budget = opts.budget.map(|b| b.saturating_sub(checked));
        let out = scan::scan_binary_forms(&re, sub.dim(), &scan_opts).map_err(|e| match e {
            Error::BudgetExhausted { .. } => Error::BudgetExhausted {
                budget: opts.budget.unwrap_or(0),
            },
            e => e,
        })?;
        checked += out.vectors_checked;
        if let Some(v) = out.violation {
            let witness = v.indices.iter().map(|&k| block.indices[k]).collect();
            return Ok(PositivityReport::fail(
                Strategy::BlockReduced,
                witness,
                v.value,
                checked,
            ));
        }
    }
    Ok(PositivityReport::pass(Strategy::BlockReduced, checked))
}

/// Evaluates `<w|D|w>` for one supplied event; `Fail` iff it is below `−tol`.
pub fn check_witness(
    df: &DecoherenceFunctional,
    witness: &Event,
    tol: &Tolerances,
) -> Result<PositivityReport> {
    df.require(ValidationLevel::Hermitian)?;
    if !same_space(witness.space(), df.space()) {
        return Err(Error::SpaceMismatch);
    }
    let value = df.evaluate(witness, witness)?.re;
    Ok(if value < -tol.pos {
        PositivityReport::fail(Strategy::SuppliedWitness, witness.indices(), value, 1)
    } else {
        PositivityReport::pass(Strategy::SuppliedWitness, 1)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SpectralReport {
    pub min_eigenvalue: f64,
    pub min_eigenvector: Vec<C64>,
    pub is_sp: bool,
    /// `‖D v − λ v‖`
    pub residual: f64,
}

/// Minimal eigenpair of a Hermitian-validated DF.
pub fn check_strong_positivity(
    df: &DecoherenceFunctional,
    tol: &Tolerances,
) -> Result<SpectralReport> {
    df.require(ValidationLevel::Hermitian)?;
    let eig = df.matrix().hermitian_eigen()?;
    let min_eigenvalue = eig.values[0];
    let v = eig.vectors[0].clone();
    let dv = df.matrix().apply(&v)?;
    let diff: Vec<C64> = dv
        .iter()
        .zip(&v)
        .map(|(a, b)| a - b * min_eigenvalue)
        .collect();
    let residual = vec_norm(&diff);
    let bound = tol.spec * df.matrix().frobenius_norm().max(f64::MIN_POSITIVE);
    if residual > bound {
        return Err(Error::EigenResidual { residual, bound });
    }
    Ok(SpectralReport {
        min_eigenvalue,
        min_eigenvector: v,
        is_sp: min_eigenvalue >= -tol.pos,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecoherenceMode {
    Weak,
    Strong,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DecoherenceReport {
    pub mode: DecoherenceMode,
    pub verdict: bool,
    /// `Re D(A_k|A_k)`, present when the cross terms vanish.
    pub probabilities: Option<Vec<f64>>,
    /// Largest `|Re D(A_k|A_j)|` (weak) or `|D(A_k|A_j)|` (strong), `k ≠ j`.
    pub max_off_diagonal: f64,
}

/// Cell-aggregated matrix `C[k][j] = D(A_k|A_j)`.
pub(crate) fn cell_matrix(df: &DecoherenceFunctional, partition: &Partition) -> Vec<Vec<C64>> {
    let owner = partition.cell_of();
    let k = partition.len();
    let mut c = vec![vec![C64::new(0.0, 0.0); k]; k];
    let m = df.matrix();
    for i in 0..df.dim() {
        let ci = &mut c[owner[i]];
        for (j, &z) in m.row(i).iter().enumerate() {
            ci[owner[j]] += z;
        }
    }
    c
}

pub fn check_partition_decoherence(
    df: &DecoherenceFunctional,
    partition: &Partition,
    mode: DecoherenceMode,
    tol: &Tolerances,
) -> Result<DecoherenceReport> {
    if !same_space(partition.space(), df.space()) {
        return Err(Error::SpaceMismatch);
    }
    let c = cell_matrix(df, partition);
    let mut max_off_diagonal = 0.0_f64;
    for (k, row) in c.iter().enumerate() {
        for (j, z) in row.iter().enumerate() {
            if k != j {
                let size = match mode {
                    DecoherenceMode::Weak => z.re.abs(),
                    DecoherenceMode::Strong => z.norm(),
                };
                max_off_diagonal = max_off_diagonal.max(size);
            }
        }
    }
    let decoheres = max_off_diagonal <= tol.eq;
    let probabilities: Option<Vec<f64>> =
        decoheres.then(|| (0..c.len()).map(|k| c[k][k].re).collect());
    let verdict = probabilities.as_ref().is_some_and(|p| {
        p.iter().all(|&x| x >= -tol.pos) && (p.iter().sum::<f64>() - 1.0).abs() <= tol.eq
    });
    Ok(DecoherenceReport {
        mode,
        verdict,
        probabilities,
        max_off_diagonal,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ValidationReport {
    pub hermiticity: HermiticityReport,
    pub normalization: NormalizationReport,
    pub weak_positivity: Option<PositivityReport>,
    pub strong_positivity: Option<SpectralReport>,
    pub level: ValidationLevel,
}

/// Dimension up to which `validate_df` prefers plain enumeration over
/// block reduction.
const PREFER_BRUTE_FORCE_DIM: usize = 20;

/// Runs hermiticity, normalization, weak positivity and strong positivity,
/// reporting the highest level reached.
///
/// Weak positivity picks its strategy by size: brute force up to 20
/// histories, then block reduction when every block fits the scanner, then
/// a spectral certificate.
pub fn validate_df(df: &DecoherenceFunctional, opts: &CheckOptions) -> Result<ValidationReport> {
    let hermiticity = check_hermiticity(df, opts.tol.eq);
    let normalization = check_normalization(df, opts.tol.eq);
    if !hermiticity.ok {
        return Ok(ValidationReport {
            hermiticity,
            normalization,
            weak_positivity: None,
            strong_positivity: None,
            level: ValidationLevel::Raw,
        });
    }
    let herm = if df.level() >= ValidationLevel::Hermitian {
        df.clone()
    } else {
        df.clone().with_level(ValidationLevel::Hermitian)
    };
    let strong = check_strong_positivity(&herm, &opts.tol)?;
    let weak = if herm.dim() <= PREFER_BRUTE_FORCE_DIM {
        check_weak_positivity(&herm, Strategy::BruteForce, opts)?
    } else {
        let blocks = detect_blocks(&herm, opts.tol.eq)?;
        if blocks.max_block_dim() <= MAX_SCAN_DIM {
            block_reduced(&herm, &blocks, opts)?
        } else if strong.is_sp {
            PositivityReport::certified(Strategy::NormBound)
        } else {
            return Err(Error::DimensionCap {
                dim: blocks.max_block_dim(),
                cap: MAX_SCAN_DIM,
            });
        }
    };

    let mut level = ValidationLevel::Hermitian;
    if normalization.ok {
        level = ValidationLevel::Normalized;
        if weak.passed() {
            level = ValidationLevel::WeaklyPositive;
            if strong.is_sp {
                level = ValidationLevel::StronglyPositive;
            }
        }
    }
    Ok(ValidationReport {
        hermiticity,
        normalization,
        weak_positivity: Some(weak),
        strong_positivity: Some(strong),
        level,
    })
}

/// Validates and returns the DF carrying the level it reached.
pub fn into_validated(
    df: DecoherenceFunctional,
    opts: &CheckOptions,
) -> Result<(DecoherenceFunctional, ValidationReport)> {
    let report = validate_df(&df, opts)?;
    let level = report.level;
    Ok((df.with_level(level), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lemma1::lemma1_df;
    use crate::matrix::ComplexMatrix;
    use std::sync::Arc;

    const EPS: f64 = 0.261204;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn herm(m: ComplexMatrix) -> DecoherenceFunctional {
        let s = Arc::new(HistorySpace::indexed(m.dim()).unwrap());
        DecoherenceFunctional::from_matrix(m, s, false, &tol()).unwrap()
    }

    #[test]
    fn hermiticity_examples() {
        let sym = herm(ComplexMatrix::from_rows(&[&[1.0, 0.3], &[0.3, 2.0]]).unwrap());
        assert!(check_hermiticity(&sym, 1e-10).ok);
        let m = ComplexMatrix::new(
            2,
            vec![
                C64::new(0.0, 0.0),
                C64::new(0.0, 1.0),
                C64::new(0.0, 1.0),
                C64::new(0.0, 0.0),
            ],
        )
        .unwrap();
        let raw =
            DecoherenceFunctional::raw(m, Arc::new(HistorySpace::indexed(2).unwrap())).unwrap();
        let r = check_hermiticity(&raw, 1e-10);
        assert!(!r.ok);
        assert!((r.max_deviation - 2.0).abs() < 1e-15);
    }

    #[test]
    fn normalization_examples() {
        let d = herm(ComplexMatrix::diagonal(&[0.5, 0.5]));
        assert!(check_normalization(&d, 1e-10).ok);
        let twice = herm(ComplexMatrix::diagonal(&[1.0, 1.0]));
        let r = check_normalization(&twice, 1e-10);
        assert!(!r.ok);
        assert_eq!(r.value.re, 2.0);
        for (l, e) in [(1.5, 0.4), (2.0, EPS), (8.0, 1.0 / 9.0)] {
            assert!(check_normalization(&lemma1_df(l, e, &tol()).unwrap(), 1e-10).ok);
        }
    }

    #[test]
    fn lemma1_weakly_positive_by_enumeration() {
        let d = lemma1_df(2.0, EPS, &tol()).unwrap();
        let r = check_weak_positivity(&d, Strategy::BruteForce, &CheckOptions::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.vectors_checked, 15);
    }

    #[test]
    fn psd_matrix_passes_every_strategy() {
        let d = herm(
            ComplexMatrix::from_rows(&[&[0.4, 0.1, 0.0], &[0.1, 0.3, -0.05], &[0.0, -0.05, 0.3]])
                .unwrap(),
        );
        for s in [
            Strategy::BruteForce,
            Strategy::BlockReduced,
            Strategy::NormBound,
        ] {
            assert!(check_weak_positivity(&d, s, &CheckOptions::default())
                .unwrap()
                .passed());
        }
    }

    #[test]
    fn norm_bound_refuses_non_psd() {
        let d = lemma1_df(2.0, EPS, &tol()).unwrap();
        assert!(matches!(
            check_weak_positivity(&d, Strategy::NormBound, &CheckOptions::default()),
            Err(Error::StrategyInapplicable(_))
        ));
    }

    #[test]
    fn declared_blocks_are_verified() {
        let d = lemma1_df(2.0, EPS, &tol()).unwrap();
        let wrong =
            BlockStructure::new(4, vec![("x".into(), vec![0, 1]), ("y".into(), vec![2, 3])])
                .unwrap();
        assert!(matches!(
            check_weak_positivity_with_blocks(&d, &wrong, &CheckOptions::default()),
            Err(Error::BlockStructureViolated { .. })
        ));
        let right = BlockStructure::new(
            4,
            vec![("b0".into(), vec![0, 2]), ("b1".into(), vec![1, 3])],
        )
        .unwrap();
        assert!(
            check_weak_positivity_with_blocks(&d, &right, &CheckOptions::default())
                .unwrap()
                .passed()
        );
    }

    #[test]
    fn lemma1_spectrum() {
        let d = lemma1_df(2.0, EPS, &tol()).unwrap();
        let r = check_strong_positivity(&d, &tol()).unwrap();
        assert!((r.min_eigenvalue - EPS * (1.0 - 2.0) / 2.0).abs() < 1e-12);
        assert!(!r.is_sp);
        // flat order (a,b) -> 2a+b puts the b=0 block on indices 0 and 2
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let expected = [s, 0.0, -s, 0.0];
        for (z, e) in r.min_eigenvector.iter().zip(expected) {
            assert!((z - C64::new(e, 0.0)).norm() < 1e-10);
        }
        let diag = herm(ComplexMatrix::diagonal(&[0.3, 0.7]));
        let r = check_strong_positivity(&diag, &tol()).unwrap();
        assert!((r.min_eigenvalue - 0.3).abs() < 1e-14 && r.is_sp);
    }

    #[test]
    fn lemma1_partitions_strongly_decohere() {
        let d = lemma1_df(2.0, EPS, &tol()).unwrap();
        let by_a = Partition::by_property(d.space(), 0).unwrap();
        let r = check_partition_decoherence(&d, &by_a, DecoherenceMode::Strong, &tol()).unwrap();
        assert!(r.verdict);
        let p = r.probabilities.unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);

        let by_b = Partition::by_property(d.space(), 1).unwrap();
        let r = check_partition_decoherence(&d, &by_b, DecoherenceMode::Strong, &tol()).unwrap();
        assert!(r.verdict);
        assert!((r.probabilities.unwrap()[0] - 0.783612).abs() < 1e-12);
    }

    #[test]
    fn weak_mode_sees_only_real_parts() {
        let m = ComplexMatrix::new(
            2,
            vec![
                C64::new(0.5, 0.0),
                C64::new(0.1, 0.2),
                C64::new(0.1, -0.2),
                C64::new(0.3, 0.0),
            ],
        )
        .unwrap();
        let d = herm(m);
        let singles = Partition::singletons(d.space());
        let r = check_partition_decoherence(&d, &singles, DecoherenceMode::Weak, &tol()).unwrap();
        assert!(!r.verdict);
        assert!((r.max_off_diagonal - 0.1).abs() < 1e-15);

        let m = ComplexMatrix::new(
            2,
            vec![
                C64::new(0.5, 0.0),
                C64::new(0.0, 0.2),
                C64::new(0.0, -0.2),
                C64::new(0.5, 0.0),
            ],
        )
        .unwrap();
        let d = herm(m);
        let weak = check_partition_decoherence(&d, &singles_of(&d), DecoherenceMode::Weak, &tol())
            .unwrap();
        let strong =
            check_partition_decoherence(&d, &singles_of(&d), DecoherenceMode::Strong, &tol())
                .unwrap();
        assert!(weak.verdict && !strong.verdict);
    }

    fn singles_of(d: &DecoherenceFunctional) -> Partition {
        Partition::singletons(d.space())
    }

    #[test]
    fn validate_examples() {
        let classical = DecoherenceFunctional::classical(&[0.25; 4], &tol()).unwrap();
        let r = validate_df(&classical, &CheckOptions::default()).unwrap();
        assert_eq!(r.level, ValidationLevel::StronglyPositive);

        let l1 = lemma1_df(2.0, EPS, &tol()).unwrap();
        let (l1, r) = into_validated(l1, &CheckOptions::default()).unwrap();
        assert_eq!(r.level, ValidationLevel::WeaklyPositive);
        assert_eq!(l1.level(), ValidationLevel::WeaklyPositive);

        let zeros = herm(ComplexMatrix::zeros(3));
        let r = validate_df(&zeros, &CheckOptions::default()).unwrap();
        assert!(!r.normalization.ok);
        assert_eq!(r.level, ValidationLevel::Hermitian);
    }

    #[test]
    fn supplied_witness() {
        let d = lemma1_df(2.0, EPS, &tol()).unwrap();
        let w = Event::from_indices(d.space(), &[1, 3]).unwrap();
        let r = check_witness(&d, &w, &tol()).unwrap();
        assert!(r.passed());
        let w = Event::from_indices(d.space(), &[0, 2]).unwrap();
        assert!(check_witness(&d, &w, &tol()).unwrap().passed());
    }
}
