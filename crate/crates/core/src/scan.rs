//! Exhaustive scan of `uᵀ R u` over binary vectors `u`.
//!
//! A vector is read as an integer with history 0 as the most significant
//! bit. The space is cut into chunks of `2^CHUNK_BITS` consecutive integers;
//! inside a chunk the low bits are walked in Gray-code order so each step
//! costs `O(dim)`. Chunks are handed out in ascending order, and the reported
//! violator is the smallest integer among the violators of the first chunk
//! that has any, so the answer does not depend on the worker count.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Largest dimension accepted for exhaustive enumeration.
pub const MAX_SCAN_DIM: usize = 30;
const CHUNK_BITS: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    pub tol: f64,
    /// Max number of non-empty vectors to visit.
    pub budget: Option<u64>,
    pub workers: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            tol: crate::tol::TOL_POS,
            budget: None,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// Indicator read as an integer, history 0 most significant.
    pub mask: u64,
    pub indices: Vec<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanOutcome {
    pub violation: Option<Violation>,
    pub vectors_checked: u64,
}

pub fn mask_to_indices(mask: u64, dim: usize) -> Vec<usize> {
    (0..dim)
        .filter(|&i| mask >> (dim - 1 - i) & 1 == 1)
        .collect()
}

pub fn indices_to_mask(indices: &[usize], dim: usize) -> u64 {
    indices.iter().fold(0, |m, &i| m | 1 << (dim - 1 - i))
}

/// `uᵀ R u` for the index set `indices`, summed directly.
pub fn binary_form(re: &[f64], dim: usize, indices: &[usize]) -> f64 {
    let mut acc = 0.0;
    for &i in indices {
        for &j in indices {
            acc += re[i * dim + j];
        }
    }
    acc
}

/// Finds the lowest-order binary vector with `uᵀ R u < −tol`, if any.
/// `re` is the row-major real part of a Hermitian matrix.
pub fn scan_binary_forms(re: &[f64], dim: usize, opts: &ScanOptions) -> Result<ScanOutcome> {
    if dim == 0 || dim > MAX_SCAN_DIM {
        return Err(Error::DimensionCap {
            dim,
            cap: MAX_SCAN_DIM,
        });
    }
    debug_assert_eq!(re.len(), dim * dim);
    let low_bits = dim.min(CHUNK_BITS);
    let high_bits = dim - low_bits;
    let chunk_len = 1u64 << low_bits;
    let total_chunks = 1u64 << high_bits;

    let allowed_chunks = match opts.budget {
        // chunk c finishes after (c+1)·chunk_len − 1 non-empty vectors
        Some(b) => ((b.saturating_add(1)) / chunk_len).min(total_chunks),
        None => total_chunks,
    };

    let kernel = ChunkKernel {
        re,
        dim,
        low_bits,
        high_bits,
        tol: opts.tol,
    };

    let first_hit = if opts.workers <= 1 || allowed_chunks <= 1 {
        (0..allowed_chunks).find_map(|c| kernel.run(c).map(|low| (c, low)))
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.workers)
            .build()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let batch = (opts.workers as u64) * 4;
        pool.install(|| {
            let mut start = 0;
            while start < allowed_chunks {
                let end = (start + batch).min(allowed_chunks);
                let hit = (start..end)
                    .into_par_iter()
                    .filter_map(|c| kernel.run(c).map(|low| (c, low)))
                    .min_by_key(|&(c, _)| c);
                if hit.is_some() {
                    return hit;
                }
                start = end;
            }
            None
        })
    };

    match first_hit {
        Some((c, low)) => {
            let mask = (c << low_bits) | low;
            let indices = mask_to_indices(mask, dim);
            let value = binary_form(re, dim, &indices);
            Ok(ScanOutcome {
                violation: Some(Violation {
                    mask,
                    indices,
                    value,
                }),
                vectors_checked: (c + 1) * chunk_len - 1,
            })
        }
        None if allowed_chunks < total_chunks => Err(Error::BudgetExhausted {
            budget: opts.budget.unwrap_or(0),
        }),
        None => Ok(ScanOutcome {
            violation: None,
            vectors_checked: (total_chunks * chunk_len) - 1,
        }),
    }
}

struct ChunkKernel<'a> {
    re: &'a [f64],
    dim: usize,
    low_bits: usize,
    high_bits: usize,
    tol: f64,
}

impl ChunkKernel<'_> {
    /// Smallest low-bit pattern in chunk `c` whose form is below `−tol`.
    fn run(&self, c: u64) -> Option<u64> {
        let dim = self.dim;
        let re = self.re;
        let mut ru = vec![0.0; dim];
        let mut set = vec![false; dim];
        for i in 0..self.high_bits {
            if c >> (self.high_bits - 1 - i) & 1 == 1 {
                set[i] = true;
                for (r, &x) in ru.iter_mut().zip(&re[i * dim..(i + 1) * dim]) {
                    // R is symmetric, so row i doubles as column i
                    *r += x;
                }
            }
        }
        let mut f: f64 = (0..self.high_bits).filter(|&i| set[i]).map(|i| ru[i]).sum();
        let mut best: Option<u64> = None;
        if c != 0 && f < -self.tol {
            best = Some(0);
        }
        let mut gray = 0u64;
        for t in 1..(1u64 << self.low_bits) {
            let bit = t.trailing_zeros() as usize;
            gray ^= 1 << bit;
            let h = dim - 1 - bit;
            let row = &re[h * dim..(h + 1) * dim];
            if set[h] {
                f += row[h] - 2.0 * ru[h];
                for (r, &x) in ru.iter_mut().zip(row) {
                    *r -= x;
                }
            } else {
                f += row[h] + 2.0 * ru[h];
                for (r, &x) in ru.iter_mut().zip(row) {
                    *r += x;
                }
            }
            set[h] = !set[h];
            if f < -self.tol && best.is_none_or(|b| gray < b) {
                best = Some(gray);
            }
        }
        best
    }
}
