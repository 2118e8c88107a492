//! Seeded random DFs, vectors and quantum models.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::axioms::{check_strong_positivity, check_weak_positivity, CheckOptions, Strategy};
use crate::df::DecoherenceFunctional;
use crate::error::{Error, Result};
use crate::matrix::{vec_norm, ComplexMatrix, C64};
use crate::quantum::{ProjectorFamily, QuantumModel};
use crate::space::HistorySpace;
use crate::tol::Tolerances;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-distributed complex unit vector.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..m).map(|_| gaussian(rng)).collect();
        let n = vec_norm(&v);
        if n > 1e-6 {
            return v.into_iter().map(|z| z / n).collect();
        }
    }
}

fn ginibre<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, |_, _| gaussian(rng))
}

/// `G G†` rescaled to total 1: a PSD DF on an indexed space.
pub fn random_sp_df<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    tol: &Tolerances,
) -> Result<DecoherenceFunctional> {
    loop {
        let g = ginibre(rng, dim);
        let m = g.matmul(&g.adjoint())?;
        let total = m.total().re;
        if total > 1e-3 {
            return normalized(m.scale(C64::new(1.0 / total, 0.0)), tol);
        }
    }
}

/// Symmetric matrix with entries uniform in `[0, 1)`, about half of the
/// off-diagonal pairs zeroed, rescaled to total 1.
pub fn random_nonneg_df<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    tol: &Tolerances,
) -> Result<DecoherenceFunctional> {
    let mut m = vec![0.0; dim * dim];
    for i in 0..dim {
        m[i * dim + i] = rng.random::<f64>() + 0.01;
        for j in i + 1..dim {
            if rng.random_bool(0.5) {
                let v = rng.random::<f64>();
                m[i * dim + j] = v;
                m[j * dim + i] = v;
            }
        }
    }
    let total: f64 = m.iter().sum();
    let m: Vec<f64> = m.into_iter().map(|v| v / total).collect();
    normalized(ComplexMatrix::from_real(dim, &m)?, tol)
}

fn normalized(m: ComplexMatrix, tol: &Tolerances) -> Result<DecoherenceFunctional> {
    let m = m.scale(C64::new(1.0 / m.total().re, 0.0));
    let space = Arc::new(HistorySpace::indexed(m.dim())?);
    DecoherenceFunctional::from_matrix(m, space, true, tol)
}

/// Weakly positive but not PSD: a classical diagonal plus a scaled
/// Hermitian perturbation with zero total. The scale is put just inside the
/// weak-positivity threshold (found by bisection with the brute-force
/// scanner); draws whose result is still PSD are rejected.
pub fn random_weak_non_sp_df<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    opts: &CheckOptions,
) -> Result<DecoherenceFunctional> {
    if dim < 2 {
        return Err(Error::InvalidParameter(
            "need at least two histories".into(),
        ));
    }
    let tol = &opts.tol;
    for _ in 0..1000 {
        let p: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() + 0.05).collect();
        let sum: f64 = p.iter().sum();
        let base = ComplexMatrix::diagonal(&p.iter().map(|x| x / sum).collect::<Vec<_>>());
        let g = ginibre(rng, dim);
        let h = g.add(&g.adjoint())?;
        let mean = h.total() / (dim * dim) as f64;
        let h = h.sub(&ComplexMatrix::from_fn(dim, |_, _| mean))?;
        let at = |s: f64| -> Result<DecoherenceFunctional> {
            normalized(base.add(&h.scale(C64::new(s, 0.0)))?, tol)
        };
        let weakly_positive = |s: f64| -> Result<bool> {
            Ok(check_weak_positivity(&at(s)?, Strategy::BruteForce, opts)?.passed())
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        while hi < 1e3 && weakly_positive(hi)? {
            hi *= 2.0;
        }
        if hi >= 1e3 {
            continue;
        }
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if weakly_positive(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let df = at(0.95 * lo)?;
        let spec = check_strong_positivity(&df, tol)?;
        if spec.min_eigenvalue < -1e-6 && weakly_positive(0.95 * lo)? {
            return Ok(df);
        }
    }
    Err(Error::SearchExhausted { limit: 1000.0 })
}

/// Density matrix `G G† / tr(G G†)`.
pub fn random_density_matrix<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let g = ginibre(rng, dim);
    let m = g.matmul(&g.adjoint()).expect("square");
    let tr = m.trace().re;
    m.scale(C64::new(1.0 / tr, 0.0))
}

/// Two-outcome measurement `{P, 𝕀 − P}` with `P` a random projector of
/// rank between 1 and `dim − 1`.
pub fn random_binary_measurement<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> [ComplexMatrix; 2] {
    let g = DMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
    let q = g.qr().q();
    let rank = rng.random_range(1..dim);
    let p = ComplexMatrix::from_fn(dim, |i, j| {
        (0..rank).map(|k| q[(i, k)] * q[(j, k)].conj()).sum()
    });
    let rest = ComplexMatrix::identity(dim).sub(&p).expect("same size");
    [p, rest]
}

/// State on `C^{dA} ⊗ C^{dB}` with `settings` two-outcome measurements per
/// party, acting as `P ⊗ 𝕀` for Alice and `𝕀 ⊗ P` for Bob so the two sides
/// commute by construction.
pub fn random_quantum_model<R: Rng + ?Sized>(
    rng: &mut R,
    dim_a: usize,
    dim_b: usize,
    settings: usize,
    tol: &Tolerances,
) -> Result<QuantumModel> {
    if dim_a < 2 || dim_b < 2 {
        return Err(Error::InvalidParameter(
            "each party needs dimension ≥ 2".into(),
        ));
    }
    let id_a = ComplexMatrix::identity(dim_a);
    let id_b = ComplexMatrix::identity(dim_b);
    let rho = random_density_matrix(rng, dim_a * dim_b);
    let alice = (0..settings)
        .map(|x| {
            let ps = random_binary_measurement(rng, dim_a).map(|p| p.kron(&id_b));
            ProjectorFamily::new(format!("E{}", x + 1), ps.to_vec(), tol)
        })
        .collect::<Result<Vec<_>>>()?;
    let bob = (0..settings)
        .map(|y| {
            let ps = random_binary_measurement(rng, dim_b).map(|p| id_a.kron(&p));
            ProjectorFamily::new(format!("F{}", y + 1), ps.to_vec(), tol)
        })
        .collect::<Result<Vec<_>>>()?;
    QuantumModel::new(rho, alice, bob, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axioms::validate_df;
    use crate::df::ValidationLevel;

    #[test]
    fn generators_are_deterministic() {
        let a = random_unit_vector(&mut seeded(7), 4);
        let b = random_unit_vector(&mut seeded(7), 4);
        assert_eq!(a, b);
        assert!((vec_norm(&a) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn weak_non_sp_generator() {
        let opts = CheckOptions::default();
        let mut rng = seeded(11);
        for dim in [2, 3, 5, 8] {
            let d = random_weak_non_sp_df(&mut rng, dim, &opts).unwrap();
            let r = validate_df(&d, &opts).unwrap();
            assert_eq!(r.level, ValidationLevel::WeaklyPositive, "dim {dim}");
        }
    }

    #[test]
    fn sp_and_nonneg_generators() {
        let tol = Tolerances::default();
        let mut rng = seeded(3);
        let d = random_sp_df(&mut rng, 6, &tol).unwrap();
        assert!(check_strong_positivity(&d, &tol).unwrap().is_sp);
        let d = random_nonneg_df(&mut rng, 6, &tol).unwrap();
        assert!(d.matrix().is_real_nonnegative(0.0));
        assert!((d.total().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn measurement_is_complete() {
        let mut rng = seeded(5);
        let [p, q] = random_binary_measurement(&mut rng, 4);
        let tol = Tolerances::default();
        assert!(ProjectorFamily::new("E", vec![p, q], &tol).is_ok());
    }
}
