//! The product rule `D₁₂ = D₁ ⊗ D₂` and n-fold composability checks.

use serde::{Deserialize, Serialize};

use crate::axioms::{check_strong_positivity, CheckOptions, PositivityReport, Strategy, Verdict};
use crate::df::{DecoherenceFunctional, ValidationLevel};
use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, C64};
use crate::scan::{self, MAX_SCAN_DIM};
use crate::space::decode_mixed_radix;
use std::sync::Arc;

/// Largest dimension that is ever materialized densely.
pub const DEFAULT_DIM_CAP: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub label: String,
    pub indices: Vec<usize>,
}

/// A partition of matrix indices such that every cross-block entry vanishes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockStructure {
    dim: usize,
    blocks: Vec<Block>,
}

impl BlockStructure {
    pub fn new(dim: usize, blocks: Vec<(String, Vec<usize>)>) -> Result<Self> {
        let mut seen = vec![false; dim];
        let mut out = Vec::with_capacity(blocks.len());
        for (label, mut indices) in blocks {
            indices.sort_unstable();
            for &i in &indices {
                if i >= dim {
                    return Err(Error::IndexOutOfRange {
                        index: i,
                        size: dim,
                    });
                }
                if seen[i] {
                    return Err(Error::InvalidPartition);
                }
                seen[i] = true;
            }
            out.push(Block { label, indices });
        }
        if !seen.iter().all(|&s| s) {
            return Err(Error::InvalidPartition);
        }
        Ok(Self { dim, blocks: out })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn max_block_dim(&self) -> usize {
        self.blocks
            .iter()
            .map(|b| b.indices.len())
            .max()
            .unwrap_or(0)
    }

    /// Checks that all cross-block entries are at most `tol` in magnitude.
    pub fn verify(&self, m: &ComplexMatrix, tol: f64) -> Result<()> {
        if m.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: m.dim(),
            });
        }
        let owner = self.owner();
        for i in 0..self.dim {
            for (j, z) in m.row(i).iter().enumerate() {
                if owner[i] != owner[j] && z.norm() > tol {
                    return Err(Error::BlockStructureViolated {
                        row: i,
                        col: j,
                        magnitude: z.norm(),
                    });
                }
            }
        }
        Ok(())
    }

    fn owner(&self) -> Vec<usize> {
        let mut owner = vec![0; self.dim];
        for (k, b) in self.blocks.iter().enumerate() {
            for &i in &b.indices {
                owner[i] = k;
            }
        }
        owner
    }

    pub fn submatrices(&self, m: &ComplexMatrix) -> Vec<ComplexMatrix> {
        self.blocks
            .iter()
            .map(|b| m.submatrix(&b.indices))
            .collect()
    }

    /// Places each block back at its indices, zeros elsewhere.
    pub fn reassemble(&self, blocks: &[ComplexMatrix]) -> Result<ComplexMatrix> {
        let mut entries = vec![C64::new(0.0, 0.0); self.dim * self.dim];
        for (b, sub) in self.blocks.iter().zip(blocks) {
            if sub.dim() != b.indices.len() {
                return Err(Error::DimensionMismatch {
                    expected: b.indices.len(),
                    actual: sub.dim(),
                });
            }
            for (p, &i) in b.indices.iter().enumerate() {
                for (q, &j) in b.indices.iter().enumerate() {
                    entries[i * self.dim + j] = sub.get(p, q);
                }
            }
        }
        ComplexMatrix::new(self.dim, entries)
    }
}

/// Connected components of the graph with an edge wherever `|D_ij| > tol`,
/// ordered by smallest index.
pub fn detect_blocks(df: &DecoherenceFunctional, tol: f64) -> Result<BlockStructure> {
    df.require(ValidationLevel::Hermitian)?;
    Ok(blocks_of_matrix(df.matrix(), tol))
}

pub(crate) fn blocks_of_matrix(m: &ComplexMatrix, tol: f64) -> BlockStructure {
    let n = m.dim();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if m.get(i, j).norm() > tol || m.get(j, i).norm() > tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut root_to_block: Vec<Option<usize>> = vec![None; n];
    let mut blocks: Vec<Block> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        let k = *root_to_block[r].get_or_insert_with(|| {
            blocks.push(Block {
                label: format!("block{}", blocks.len()),
                indices: Vec::new(),
            });
            blocks.len() - 1
        });
        blocks[k].indices.push(i);
    }
    BlockStructure { dim: n, blocks }
}

/// `D₁ ⊗ D₂` on `Ω₁ × Ω₂`.
pub fn tensor(
    d1: &DecoherenceFunctional,
    d2: &DecoherenceFunctional,
    cap: usize,
) -> Result<DecoherenceFunctional> {
    d1.require(ValidationLevel::Hermitian)?;
    d2.require(ValidationLevel::Hermitian)?;
    let dim = d1.dim().saturating_mul(d2.dim());
    if dim > cap {
        return Err(Error::DimensionCap { dim, cap });
    }
    let space = Arc::new(d1.space().product(d2.space()));
    let level = d1.level().min(d2.level()).min(ValidationLevel::Normalized);
    Ok(DecoherenceFunctional::raw(d1.matrix().kron(d2.matrix()), space)?.with_level(level))
}

/// `D^{⊗n}`; `n = 0` gives the singleton DF `[1]`.
pub fn tensor_power(
    d: &DecoherenceFunctional,
    n: usize,
    cap: usize,
) -> Result<DecoherenceFunctional> {
    d.require(ValidationLevel::Hermitian)?;
    if n == 0 {
        return Ok(DecoherenceFunctional::singleton());
    }
    let dim = checked_pow(d.dim(), n)
        .filter(|&x| x <= cap)
        .ok_or(Error::DimensionCap {
            dim: checked_pow(d.dim(), n).unwrap_or(usize::MAX),
            cap,
        })?;
    debug_assert!(dim <= cap);
    let mut acc = d.clone();
    for _ in 1..n {
        acc = tensor(&acc, d, cap)?;
    }
    Ok(acc)
}

fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    (0..exp).try_fold(1usize, |acc, _| acc.checked_mul(base))
}

/// `<V|D^{⊗k}|V>` for `|V⟩ = Σ_p |tuples[p]⟩`, evaluated copy by copy
/// without building the k-fold matrix. Each tuple lists one history index
/// of `D` per copy.
pub fn product_form(d: &DecoherenceFunctional, tuples: &[Vec<usize>]) -> Result<C64> {
    let copies = tuples.first().map_or(0, |t| t.len());
    if tuples.iter().any(|t| t.len() != copies) {
        return Err(Error::InvalidParameter("tuples of unequal length".into()));
    }
    let m = d.matrix();
    let mut acc = C64::new(0.0, 0.0);
    for p in tuples {
        for q in tuples {
            let mut term = C64::new(1.0, 0.0);
            for (&i, &j) in p.iter().zip(q) {
                if i >= m.dim() || j >= m.dim() {
                    return Err(Error::IndexOutOfRange {
                        index: i.max(j),
                        size: m.dim(),
                    });
                }
                term *= m.get(i, j);
            }
            acc += term;
        }
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ComposabilityReport {
    pub n: usize,
    pub strategy: Strategy,
    pub verdict: Verdict,
    pub witness_block: Option<Vec<usize>>,
    pub witness_indices: Option<Vec<usize>>,
    pub witness_value: Option<f64>,
}

impl ComposabilityReport {
    fn from_positivity(n: usize, r: PositivityReport) -> Self {
        Self {
            n,
            strategy: r.strategy,
            verdict: r.verdict,
            witness_block: r.witness_block,
            witness_indices: r.witness,
            witness_value: r.witness_value,
        }
    }

    pub fn passed(&self) -> bool {
        !self.verdict.is_fail()
    }
}

/// Weak-positivity verdict for `D^{⊗n}`.
///
/// `BlockReduced` never materializes `D^{⊗n}`: blocks of the power are
/// tensor products of blocks of `D`, and since permuting tensor factors maps
/// binary vectors to binary vectors, one representative per block type
/// `(n₁, n₂, …)` suffices. Types are visited in ascending lexicographic
/// order; witness indices refer to `D^{⊗n}` with the factors arranged in
/// block order.
pub fn check_composability(
    d: &DecoherenceFunctional,
    n: usize,
    strategy: Strategy,
    opts: &CheckOptions,
) -> Result<ComposabilityReport> {
    d.require(ValidationLevel::Hermitian)?;
    if n == 0 {
        return Err(Error::InvalidParameter("composability needs n ≥ 1".into()));
    }
    let report = match strategy {
        Strategy::BruteForce => {
            let dim = checked_pow(d.dim(), n).unwrap_or(usize::MAX);
            if dim > MAX_SCAN_DIM {
                return Err(Error::StrategyInapplicable(format!(
                    "brute force over 2^{dim} vectors exceeds the 2^{MAX_SCAN_DIM} limit"
                )));
            }
            let power = tensor_power(d, n, DEFAULT_DIM_CAP)?;
            crate::axioms::check_weak_positivity(&power, Strategy::BruteForce, opts)?
        }
        Strategy::BlockReduced => block_reduced_power(d, n, opts)?,
        Strategy::NormBound => {
            let spectral = check_strong_positivity(d, &opts.tol)?;
            if !spectral.is_sp {
                return Err(Error::StrategyInapplicable(
                    "no spectral certificate for a matrix with negative eigenvalues".into(),
                ));
            }
            PositivityReport::certified(Strategy::NormBound)
        }
        Strategy::SuppliedWitness => {
            return Err(Error::StrategyInapplicable(
                "composability needs a search strategy".into(),
            ))
        }
    };
    Ok(ComposabilityReport::from_positivity(n, report))
}

/// All `(n₁..n_k)` with `Σ nᵢ = n`, ascending lexicographically.
pub fn block_types(k: usize, n: usize) -> Vec<Vec<usize>> {
    fn rec(k: usize, n: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 1 {
            prefix.push(n);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=n {
            prefix.push(first);
            rec(k - 1, n - first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if k > 0 {
        rec(k, n, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

fn block_reduced_power(
    d: &DecoherenceFunctional,
    n: usize,
    opts: &CheckOptions,
) -> Result<PositivityReport> {
    let blocks = detect_blocks(d, opts.tol.eq)?;
    let subs = blocks.submatrices(d.matrix());
    let nonneg: Vec<bool> = subs.iter().map(|s| s.is_real_nonnegative(0.0)).collect();
    let mut checked = 0u64;
    for ty in block_types(blocks.len(), n) {
        let seq: Vec<usize> = ty
            .iter()
            .enumerate()
            .flat_map(|(b, &c)| std::iter::repeat_n(b, c))
            .collect();
        // products of entrywise non-negative blocks cannot go negative
        if seq.iter().all(|&b| nonneg[b]) {
            continue;
        }
        let dims: Vec<usize> = seq.iter().map(|&b| subs[b].dim()).collect();
        let block_dim = dims.iter().product::<usize>();
        if block_dim > MAX_SCAN_DIM {
            return Err(Error::DimensionCap {
                dim: block_dim,
                cap: MAX_SCAN_DIM,
            });
        }
        let mut kron = subs[seq[0]].clone();
        for &b in &seq[1..] {
            kron = kron.kron(&subs[b]);
        }
        let mut scan_opts = opts.scan();
        scan_opts.budget = opts.budget.map(|b| b.saturating_sub(checked));
        let out = scan::scan_binary_forms(&kron.real_parts(), block_dim, &scan_opts)?;
        checked += out.vectors_checked;
        if let Some(v) = out.violation {
            let witness = v
                .indices
                .iter()
                .map(|&local| {
                    let digits = decode_mixed_radix(local, dims.iter().copied());
                    seq.iter().zip(digits).fold(0usize, |acc, (&b, dgt)| {
                        acc * d.dim() + blocks.blocks()[b].indices[dgt]
                    })
                })
                .collect();
            let mut report =
                PositivityReport::fail(Strategy::BlockReduced, witness, v.value, checked);
            report.witness_block = Some(ty);
            return Ok(report);
        }
    }
    Ok(PositivityReport::pass(Strategy::BlockReduced, checked))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axioms::check_weak_positivity;
    use crate::lemma1::{lemma1_df, lemma1_epsilon};
    use crate::tol::Tolerances;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn classical_product() {
        let h = DecoherenceFunctional::classical(&[0.5, 0.5], &tol()).unwrap();
        let p = tensor(&h, &h, DEFAULT_DIM_CAP).unwrap();
        assert_eq!(p.matrix(), &ComplexMatrix::diagonal(&[0.25; 4]));
        assert_eq!(p.level(), ValidationLevel::Normalized);
    }

    #[test]
    fn singleton_is_the_identity() {
        let d = lemma1_df(2.0, 0.2, &tol()).unwrap();
        let p = tensor(&d, &DecoherenceFunctional::singleton(), DEFAULT_DIM_CAP).unwrap();
        assert_eq!(p.matrix(), d.matrix());
        assert_eq!(
            tensor_power(&d, 1, DEFAULT_DIM_CAP).unwrap().matrix(),
            d.matrix()
        );
        let p0 = tensor_power(&d, 0, DEFAULT_DIM_CAP).unwrap();
        assert_eq!(p0.dim(), 1);
        assert_eq!(p0.matrix().get(0, 0), C64::new(1.0, 0.0));
    }

    #[test]
    fn power_shape_and_normalization() {
        let d = lemma1_df(3.0, 0.2, &tol()).unwrap();
        let p = tensor_power(&d, 2, DEFAULT_DIM_CAP).unwrap();
        assert_eq!(p.dim(), 16);
        assert!((p.total() - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(matches!(
            tensor_power(&d, 7, DEFAULT_DIM_CAP),
            Err(Error::DimensionCap { .. })
        ));
    }

    #[test]
    fn block_detection_examples() {
        let d = lemma1_df(2.0, 0.261204, &tol()).unwrap();
        let b = detect_blocks(&d, 1e-10).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b.blocks()[0].indices, vec![0, 2]);
        assert_eq!(b.blocks()[1].indices, vec![1, 3]);
        assert_eq!(
            b.reassemble(&b.submatrices(d.matrix())).unwrap(),
            *d.matrix()
        );

        let s = Arc::new(crate::space::HistorySpace::indexed(3).unwrap());
        let dense = DecoherenceFunctional::from_matrix(
            ComplexMatrix::from_real(3, &[0.2, 0.05, 0.05, 0.05, 0.1, 0.05, 0.05, 0.05, 0.2])
                .unwrap(),
            s,
            false,
            &tol(),
        )
        .unwrap();
        assert_eq!(detect_blocks(&dense, 1e-10).unwrap().len(), 1);
        let diag = DecoherenceFunctional::classical(&[0.1, 0.2, 0.3, 0.4], &tol()).unwrap();
        assert_eq!(detect_blocks(&diag, 1e-10).unwrap().len(), 4);
    }

    #[test]
    fn block_types_are_lexicographic() {
        assert_eq!(block_types(2, 2), vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
        assert_eq!(block_types(3, 1).len(), 3);
    }

    #[test]
    fn lemma1_composability_examples() {
        let opts = CheckOptions::default();
        let d = lemma1_df(2.0, lemma1_epsilon(2.0, 1), &tol()).unwrap();
        for s in [Strategy::BruteForce, Strategy::BlockReduced] {
            assert!(check_composability(&d, 1, s, &opts).unwrap().passed());
            assert!(!check_composability(&d, 2, s, &opts).unwrap().passed());
        }

        let d = lemma1_df(4.0, 1.0 / 33.0, &tol()).unwrap();
        assert!(check_composability(&d, 2, Strategy::BlockReduced, &opts)
            .unwrap()
            .passed());
        let r = check_composability(&d, 3, Strategy::BlockReduced, &opts).unwrap();
        assert!(!r.passed());
        assert!(r.witness_value.unwrap() < 0.0);
    }

    #[test]
    fn block_witness_maps_back_to_the_power() {
        let opts = CheckOptions::default();
        let d = lemma1_df(2.0, lemma1_epsilon(2.0, 1), &tol()).unwrap();
        let r = check_composability(&d, 2, Strategy::BlockReduced, &opts).unwrap();
        let power = tensor_power(&d, 2, DEFAULT_DIM_CAP).unwrap();
        let w = r.witness_indices.unwrap();
        let value = power.evaluate_indices(&w, &w).re;
        assert!((value - r.witness_value.unwrap()).abs() < 1e-12);
        let full = check_weak_positivity(&power, Strategy::BlockReduced, &opts).unwrap();
        assert!(!full.passed());
    }

    #[test]
    fn product_form_matches_dense() {
        let d = lemma1_df(2.0, 0.2, &tol()).unwrap();
        let power = tensor_power(&d, 2, DEFAULT_DIM_CAP).unwrap();
        let tuples = vec![vec![0, 1], vec![2, 3]];
        let dense = power.evaluate_indices(&[1, 11], &[1, 11]);
        assert!((product_form(&d, &tuples).unwrap() - dense).norm() < 1e-14);
    }
}
