//! Quantum decoherence functionals built from a state and projective
//! measurements, plus the two-setting family `D_|v⟩`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::df::DecoherenceFunctional;
use crate::error::{Error, Result};
use crate::matrix::{vec_norm, ComplexMatrix, C64};
use crate::space::{Factor, HistorySpace};
use crate::tol::Tolerances;

/// One measurement setting: projectors summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorFamily {
    label: String,
    projectors: Vec<ComplexMatrix>,
}

impl ProjectorFamily {
    pub fn new(
        label: impl Into<String>,
        projectors: Vec<ComplexMatrix>,
        tol: &Tolerances,
    ) -> Result<Self> {
        let label = label.into();
        let first = projectors
            .first()
            .ok_or_else(|| Error::InvalidParameter(format!("setting {label} has no projectors")))?;
        let dim = first.dim();
        let mut sum = ComplexMatrix::zeros(dim);
        for (k, p) in projectors.iter().enumerate() {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: p.dim(),
                });
            }
            let herm = p.hermiticity_deviation();
            let idem = p.matmul(p)?.max_abs_diff(p)?;
            if herm > tol.eq || idem > tol.eq {
                return Err(Error::InvalidParameter(format!(
                    "{label}[{k}] is not an orthogonal projector (|P−P†| = {herm:e}, |P²−P| = {idem:e})"
                )));
            }
            sum = sum.add(p)?;
        }
        let dev = sum.max_abs_diff(&ComplexMatrix::identity(dim))?;
        if dev > tol.eq {
            return Err(Error::InvalidParameter(format!(
                "projectors of {label} sum to the identity only within {dev:e}"
            )));
        }
        Ok(Self { label, projectors })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn projectors(&self) -> &[ComplexMatrix] {
        &self.projectors
    }

    pub fn outcomes(&self) -> usize {
        self.projectors.len()
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].dim()
    }
}

/// A density matrix with Alice's and Bob's measurement settings; every
/// Alice projector commutes with every Bob projector.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumModel {
    rho: ComplexMatrix,
    alice: Vec<ProjectorFamily>,
    bob: Vec<ProjectorFamily>,
}

impl QuantumModel {
    pub fn new(
        rho: ComplexMatrix,
        alice: Vec<ProjectorFamily>,
        bob: Vec<ProjectorFamily>,
        tol: &Tolerances,
    ) -> Result<Self> {
        let dim = rho.dim();
        let herm = rho.hermiticity_deviation();
        if herm > tol.eq {
            return Err(Error::NotHermitian { deviation: herm });
        }
        let tr = rho.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > tol.eq {
            return Err(Error::InvalidParameter(format!("state has trace {tr}")));
        }
        let min = rho.hermitian_eigen()?.values[0];
        if min < -tol.pos {
            return Err(Error::InvalidParameter(format!(
                "state has eigenvalue {min:e}"
            )));
        }
        if alice.is_empty() || bob.is_empty() {
            return Err(Error::InvalidParameter(
                "both parties need at least one setting".into(),
            ));
        }
        for fam in alice.iter().chain(&bob) {
            if fam.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: fam.dim(),
                });
            }
        }
        for e_fam in &alice {
            for (a, e) in e_fam.projectors().iter().enumerate() {
                for f_fam in &bob {
                    for (b, f) in f_fam.projectors().iter().enumerate() {
                        let comm = e.matmul(f)?.max_abs_diff(&f.matmul(e)?)?;
                        if comm > tol.eq {
                            return Err(Error::InvalidParameter(format!(
                                "[{}[{a}], {}[{b}]] has norm {comm:e}",
                                e_fam.label(),
                                f_fam.label()
                            )));
                        }
                    }
                }
            }
        }
        Ok(Self { rho, alice, bob })
    }

    pub fn hilbert_dim(&self) -> usize {
        self.rho.dim()
    }

    pub fn rho(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub fn alice(&self) -> &[ProjectorFamily] {
        &self.alice
    }

    pub fn bob(&self) -> &[ProjectorFamily] {
        &self.bob
    }

    /// `tr(ρ E(x,a) F(y,b))`
    pub fn joint_probability(&self, x: usize, y: usize, a: usize, b: usize) -> Result<f64> {
        let e = &self
            .alice
            .get(x)
            .ok_or(Error::IndexOutOfRange {
                index: x,
                size: self.alice.len(),
            })?
            .projectors;
        let f = &self
            .bob
            .get(y)
            .ok_or(Error::IndexOutOfRange {
                index: y,
                size: self.bob.len(),
            })?
            .projectors;
        let e = e.get(a).ok_or(Error::IndexOutOfRange {
            index: a,
            size: e.len(),
        })?;
        let f = f.get(b).ok_or(Error::IndexOutOfRange {
            index: b,
            size: f.len(),
        })?;
        Ok(self.rho.matmul(e)?.matmul(f)?.trace().re)
    }

    /// Histories `(a₁..a_m, b₁..b_m')`, one property per setting.
    pub fn history_space(&self) -> Result<HistorySpace> {
        let factors = self
            .alice
            .iter()
            .enumerate()
            .map(|(x, f)| Factor::new(format!("a{}", x + 1), f.outcomes()))
            .chain(
                self.bob
                    .iter()
                    .enumerate()
                    .map(|(y, f)| Factor::new(format!("b{}", y + 1), f.outcomes())),
            )
            .collect();
        HistorySpace::factored(factors)
    }

    pub fn to_json(&self) -> QuantumModelJson {
        let fam = |fs: &[ProjectorFamily]| -> Vec<Vec<Vec<[f64; 2]>>> {
            fs.iter()
                .map(|f| f.projectors.iter().map(entries_json).collect())
                .collect()
        };
        QuantumModelJson {
            dim: self.hilbert_dim(),
            rho: entries_json(&self.rho),
            alice: fam(&self.alice),
            bob: fam(&self.bob),
        }
    }

    pub fn from_json(json: &QuantumModelJson, tol: &Tolerances) -> Result<Self> {
        let mat = |e: &[[f64; 2]]| {
            ComplexMatrix::new(json.dim, e.iter().map(|&[r, i]| C64::new(r, i)).collect())
        };
        let fams = |side: &str, fs: &[Vec<Vec<[f64; 2]>>]| -> Result<Vec<ProjectorFamily>> {
            fs.iter()
                .enumerate()
                .map(|(k, ps)| {
                    let ps = ps.iter().map(|p| mat(p)).collect::<Result<Vec<_>>>()?;
                    ProjectorFamily::new(format!("{side}{}", k + 1), ps, tol)
                })
                .collect()
        };
        Self::new(
            mat(&json.rho)?,
            fams("E", &json.alice)?,
            fams("F", &json.bob)?,
            tol,
        )
    }
}

fn entries_json(m: &ComplexMatrix) -> Vec<[f64; 2]> {
    m.entries().iter().map(|z| [z.re, z.im]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumModelJson {
    pub dim: usize,
    pub rho: Vec<[f64; 2]>,
    pub alice: Vec<Vec<Vec<[f64; 2]>>>,
    pub bob: Vec<Vec<Vec<[f64; 2]>>>,
}

/// `D(ω|ω′) = tr{E(ā)F(b̄) ρ F(b̄′)† E(ā′)†}` with `E(ā) = E(1,a₁)⋯E(m,a_m)`
/// and `F(b̄) = F(1,b₁)⋯F(m,b_m)`, factors in ascending setting order.
pub fn quantum_df(
    model: &QuantumModel,
    cap: usize,
    tol: &Tolerances,
) -> Result<DecoherenceFunctional> {
    let space = Arc::new(model.history_space()?);
    let n = space.size();
    if n > cap {
        return Err(Error::DimensionCap { dim: n, cap });
    }
    let families: Vec<&ProjectorFamily> = model.alice.iter().chain(&model.bob).collect();
    let h = model.hilbert_dim();
    let mut chains = Vec::with_capacity(n);
    let mut weighted = Vec::with_capacity(n);
    for omega in 0..n {
        let values = space.decode(omega)?;
        let mut k = ComplexMatrix::identity(h);
        for (fam, &v) in families.iter().zip(&values) {
            k = k.matmul(&fam.projectors[v])?;
        }
        weighted.push(k.matmul(&model.rho)?);
        chains.push(k);
    }
    // tr(X Y†) = Σ_ij X_ij conj(Y_ij)
    let mut entries = vec![C64::new(0.0, 0.0); n * n];
    for (w, x) in weighted.iter().enumerate() {
        for (w2, y) in chains.iter().enumerate() {
            entries[w * n + w2] = x
                .entries()
                .iter()
                .zip(y.entries())
                .map(|(p, q)| p * q.conj())
                .sum();
        }
    }
    DecoherenceFunctional::from_matrix(ComplexMatrix::new(n, entries)?, space, true, tol)
}

fn check_unit(v: &[C64], tol: &Tolerances) -> Result<()> {
    if v.len() < 2 {
        return Err(Error::InvalidParameter(
            "vector needs at least two components".into(),
        ));
    }
    let norm = vec_norm(v);
    if (norm - 1.0).abs() > tol.eq {
        return Err(Error::InvalidParameter(format!(
            "vector has norm {norm}, expected 1"
        )));
    }
    Ok(())
}

/// History space `(a, b)`, `a < m`, `b ∈ {0, 1}`, flat index `2a + b`.
pub fn dv_space(m: usize) -> Arc<HistorySpace> {
    Arc::new(
        HistorySpace::factored(vec![Factor::new("a", m), Factor::new("b", 2)])
            .expect("m x 2 space"),
    )
}

/// `F₀ = (1/m) Σ_{jk} |j⟩⟨k|`
pub fn uniform_projector(m: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(m, |_, _| C64::new(1.0 / m as f64, 0.0))
}

/// `D_|v⟩(a,b|a′,b′) = ⟨v|E_{a′} F_{b′} F_b E_a|v⟩` with `E_a = |a⟩⟨a|`,
/// `F₀` the projector onto the uniform vector and `F₁ = 𝕀 − F₀`.
///
/// Computed from the operator products; [`dv_closed_form`] is kept as a
/// separate check.
pub fn dv_family(v: &[C64], tol: &Tolerances) -> Result<DecoherenceFunctional> {
    check_unit(v, tol)?;
    let m = v.len();
    let f0 = uniform_projector(m);
    let f1 = ComplexMatrix::identity(m).sub(&f0)?;
    let fams = ProjectorFamily::new("F", vec![f0, f1], tol)?;
    let es: Vec<ComplexMatrix> = (0..m)
        .map(|a| {
            ComplexMatrix::from_fn(m, |i, j| {
                C64::new(if i == a && j == a { 1.0 } else { 0.0 }, 0.0)
            })
        })
        .collect();
    let es = ProjectorFamily::new("E", es, tol)?;
    // x_{ab} = F_b E_a |v⟩, and the entry is ⟨x_{a′b′}|x_{ab}⟩
    let mut xs = Vec::with_capacity(2 * m);
    for e in es.projectors() {
        let ev = e.apply(v)?;
        for f in fams.projectors() {
            xs.push(f.apply(&ev)?);
        }
    }
    let n = 2 * m;
    let matrix = ComplexMatrix::from_fn(n, |i, j| {
        xs[j].iter().zip(&xs[i]).map(|(p, q)| p.conj() * q).sum()
    });
    DecoherenceFunctional::from_matrix(matrix, dv_space(m), true, tol)
}

/// `(1/m)|v⟩⟨v| ⊗ |0⟩⟨0| + (Σ_a |⟨v|a⟩|² |a⟩⟨a| − (1/m)|v⟩⟨v|) ⊗ |1⟩⟨1|`
pub fn dv_closed_form(v: &[C64], tol: &Tolerances) -> Result<ComplexMatrix> {
    check_unit(v, tol)?;
    let m = v.len();
    let inv_m = 1.0 / m as f64;
    let vv = ComplexMatrix::outer(v, v)?.scale(C64::new(inv_m, 0.0));
    let probs: Vec<f64> = v.iter().map(|z| z.norm_sqr()).collect();
    let second = ComplexMatrix::diagonal(&probs).sub(&vv)?;
    let p0 = ComplexMatrix::diagonal(&[1.0, 0.0]);
    let p1 = ComplexMatrix::diagonal(&[0.0, 1.0]);
    vv.kron(&p0).add(&second.kron(&p1))
}

pub fn conjugate(v: &[C64]) -> Vec<C64> {
    v.iter().map(|z| z.conj()).collect()
}

/// Bipartite witness `|w⟩ = Σ_a |a⟩_A |a,0⟩_B` on `m · 2m` histories; its
/// nonzero components sit at flat indices `a·2m + 2a`.
pub fn contraction_witness_indices(m: usize) -> Vec<usize> {
    (0..m).map(|a| a * 2 * m + 2 * a).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionCheck {
    /// `tr_B{|w⟩⟨w| (𝕀_A ⊗ D_|v⟩)}`
    pub result: ComplexMatrix,
    /// `(1/m)|v*⟩⟨v*|`
    pub expected: ComplexMatrix,
    pub max_deviation: f64,
    pub matches: bool,
}

/// Evaluates the partial trace explicitly on the `2m²`-dimensional space
/// and compares it with `(1/m)|v*⟩⟨v*|`.
pub fn contraction_check(v: &[C64], tol: &Tolerances) -> Result<ContractionCheck> {
    let m = v.len();
    let dv = dv_family(v, tol)?;
    let nb = 2 * m;
    let n = m * nb;
    let mut w = vec![C64::new(0.0, 0.0); n];
    for i in contraction_witness_indices(m) {
        w[i] = C64::new(1.0, 0.0);
    }
    let op = ComplexMatrix::identity(m).kron(dv.matrix());
    let ww = ComplexMatrix::outer(&w, &w)?;
    let prod = ww.matmul(&op)?;
    let result = ComplexMatrix::from_fn(m, |i, j| {
        (0..nb)
            .map(|beta| prod.get(i * nb + beta, j * nb + beta))
            .sum()
    });
    let vs = conjugate(v);
    let expected = ComplexMatrix::outer(&vs, &vs)?.scale(C64::new(1.0 / m as f64, 0.0));
    let max_deviation = result.max_abs_diff(&expected)?;
    Ok(ContractionCheck {
        result,
        expected,
        max_deviation,
        matches: max_deviation <= tol.eq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axioms::{check_partition_decoherence, check_strong_positivity, DecoherenceMode};
    use crate::compose::DEFAULT_DIM_CAP;
    use crate::space::Partition;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn basis_projectors(d: usize) -> Vec<ComplexMatrix> {
        (0..d)
            .map(|a| ComplexMatrix::from_fn(d, |i, j| c(if i == a && j == a { 1.0 } else { 0.0 })))
            .collect()
    }

    #[test]
    fn dv_example_m2() {
        let v = [c(1.0), c(0.0)];
        let d = dv_family(&v, &tol()).unwrap();
        let expected = ComplexMatrix::diagonal(&[0.5, 0.5, 0.0, 0.0]);
        assert!(d.matrix().max_abs_diff(&expected).unwrap() < 1e-15);
        assert!(
            dv_closed_form(&v, &tol())
                .unwrap()
                .max_abs_diff(&expected)
                .unwrap()
                < 1e-15
        );
        assert!((d.total() - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn dv_uniform_vector_blocks() {
        let m = 3;
        let s = 1.0 / (m as f64).sqrt();
        let v = vec![c(s); m];
        let closed = dv_closed_form(&v, &tol()).unwrap();
        for a in 0..m {
            for a2 in 0..m {
                let first = 1.0 / m as f64 * s * s;
                assert!((closed.get(2 * a, 2 * a2) - c(first)).norm() < 1e-15);
                let second = if a == a2 { 1.0 / m as f64 } else { 0.0 } - first;
                assert!((closed.get(2 * a + 1, 2 * a2 + 1) - c(second)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn dv_rejects_unnormalized() {
        assert!(dv_family(&[c(1.0), c(1.0)], &tol()).is_err());
    }

    #[test]
    fn contraction_example() {
        let r = contraction_check(&[c(1.0), c(0.0)], &tol()).unwrap();
        assert!(r.matches);
        assert!(
            r.result
                .max_abs_diff(&ComplexMatrix::diagonal(&[0.5, 0.0]))
                .unwrap()
                < 1e-15
        );
    }

    #[test]
    fn contraction_real_vector_is_rank_one() {
        let v = [c(0.6), c(0.0), c(-0.8)];
        let r = contraction_check(&v, &tol()).unwrap();
        assert!(r.matches);
        assert!(r.result.hermiticity_deviation() < 1e-15);
        assert!((r.result.trace() - c(1.0 / 3.0)).norm() < 1e-15);
        let eig = r.result.hermitian_eigen().unwrap();
        assert!(eig.values[0].abs() < 1e-14 && eig.values[1].abs() < 1e-14);
    }

    #[test]
    fn product_state_gives_diagonal_df() {
        // |0⟩|1⟩ on C²⊗C², computational-basis measurements on each side
        let id2 = ComplexMatrix::identity(2);
        let alice: Vec<ComplexMatrix> = basis_projectors(2).iter().map(|p| p.kron(&id2)).collect();
        let bob: Vec<ComplexMatrix> = basis_projectors(2).iter().map(|p| id2.kron(p)).collect();
        let rho = ComplexMatrix::diagonal(&[0.0, 1.0, 0.0, 0.0]);
        let model = QuantumModel::new(
            rho,
            vec![ProjectorFamily::new("E1", alice, &tol()).unwrap()],
            vec![ProjectorFamily::new("F1", bob, &tol()).unwrap()],
            &tol(),
        )
        .unwrap();
        let d = quantum_df(&model, DEFAULT_DIM_CAP, &tol()).unwrap();
        assert!(
            d.matrix()
                .max_abs_diff(&ComplexMatrix::diagonal(&[0.0, 1.0, 0.0, 0.0]))
                .unwrap()
                < 1e-15
        );
        assert!((model.joint_probability(0, 0, 0, 1).unwrap() - 1.0).abs() < 1e-15);
        let spec = check_strong_positivity(&d, &tol()).unwrap();
        assert!(spec.is_sp);
        let p = Partition::singletons(d.space());
        assert!(
            check_partition_decoherence(&d, &p, DecoherenceMode::Strong, &tol())
                .unwrap()
                .verdict
        );
    }

    #[test]
    fn non_commuting_sides_are_rejected() {
        let z = basis_projectors(2);
        let h = 0.5;
        let x = vec![
            ComplexMatrix::from_rows(&[&[h, h], &[h, h]]).unwrap(),
            ComplexMatrix::from_rows(&[&[h, -h], &[-h, h]]).unwrap(),
        ];
        let r = QuantumModel::new(
            ComplexMatrix::diagonal(&[1.0, 0.0]),
            vec![ProjectorFamily::new("E1", z, &tol()).unwrap()],
            vec![ProjectorFamily::new("F1", x, &tol()).unwrap()],
            &tol(),
        );
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn projector_family_checks() {
        let bad = vec![
            ComplexMatrix::diagonal(&[1.0, 0.0]),
            ComplexMatrix::diagonal(&[1.0, 1.0]),
        ];
        assert!(ProjectorFamily::new("E", bad, &tol()).is_err());
        let not_idempotent = vec![
            ComplexMatrix::diagonal(&[0.5, 0.5]),
            ComplexMatrix::diagonal(&[0.5, 0.5]),
        ];
        assert!(ProjectorFamily::new("E", not_idempotent, &tol()).is_err());
    }
}
