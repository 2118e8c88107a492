//! The decoherence functional in matrix representation.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, C64};
use crate::space::{same_space, Event, Factor, HistorySpace};
use crate::tol::Tolerances;

/// How far a DF has been checked. Levels only go up through explicit
/// validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ValidationLevel {
    Raw,
    Hermitian,
    Normalized,
    WeaklyPositive,
    StronglyPositive,
}

impl fmt::Display for ValidationLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// `D(A|B) = <A|D|B>` over a finite history space.
#[derive(Debug, Clone)]
pub struct DecoherenceFunctional {
    space: Arc<HistorySpace>,
    matrix: ComplexMatrix,
    level: ValidationLevel,
}

impl DecoherenceFunctional {
    /// Wraps a matrix without any axiom check.
    pub fn raw(matrix: ComplexMatrix, space: Arc<HistorySpace>) -> Result<Self> {
        if matrix.dim() != space.size() {
            return Err(Error::DimensionMismatch {
                expected: space.size(),
                actual: matrix.dim(),
            });
        }
        Ok(Self {
            space,
            matrix,
            level: ValidationLevel::Raw,
        })
    }

    /// Checks `D = D†` (and `<Ω|D|Ω> = 1` when asked).
    pub fn from_matrix(
        matrix: ComplexMatrix,
        space: Arc<HistorySpace>,
        require_normalized: bool,
        tol: &Tolerances,
    ) -> Result<Self> {
        let mut df = Self::raw(matrix, space)?;
        let deviation = df.matrix.hermiticity_deviation();
        if deviation > tol.eq {
            return Err(Error::NotHermitian { deviation });
        }
        df.level = ValidationLevel::Hermitian;
        let total = df.matrix.total();
        if (total - C64::new(1.0, 0.0)).norm() <= tol.eq {
            df.level = ValidationLevel::Normalized;
        } else if require_normalized {
            return Err(Error::NotNormalized { value: total.re });
        }
        Ok(df)
    }

    /// `diag(p)` over an indexed space.
    pub fn classical(probabilities: &[f64], tol: &Tolerances) -> Result<Self> {
        let space = Arc::new(HistorySpace::indexed(probabilities.len())?);
        Self::from_matrix(ComplexMatrix::diagonal(probabilities), space, true, tol)
    }

    /// The DF `[1]` on the one-history space.
    pub fn singleton() -> Self {
        Self {
            space: Arc::new(HistorySpace::singleton()),
            matrix: ComplexMatrix::identity(1),
            level: ValidationLevel::StronglyPositive,
        }
    }

    pub fn space(&self) -> &Arc<HistorySpace> {
        &self.space
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn level(&self) -> ValidationLevel {
        self.level
    }

    pub(crate) fn with_level(mut self, level: ValidationLevel) -> Self {
        self.level = level;
        self
    }

    pub(crate) fn require(&self, level: ValidationLevel) -> Result<()> {
        if self.level < level {
            return Err(Error::ValidationLevel {
                required: level.to_string(),
                actual: self.level.to_string(),
            });
        }
        Ok(())
    }

    /// `D(A|B) = indicator(A)ᵀ · D · indicator(B)`.
    pub fn evaluate(&self, a: &Event, b: &Event) -> Result<C64> {
        if !same_space(a.space(), &self.space) || !same_space(b.space(), &self.space) {
            return Err(Error::SpaceMismatch);
        }
        Ok(self.evaluate_indices(&a.indices(), &b.indices()))
    }

    pub(crate) fn evaluate_indices(&self, a: &[usize], b: &[usize]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for &i in a {
            let row = self.matrix.row(i);
            for &j in b {
                acc += row[j];
            }
        }
        acc
    }

    /// `<Ω|D|Ω>`
    pub fn total(&self) -> C64 {
        self.matrix.total()
    }

    pub fn to_json(&self) -> DfJson {
        DfJson {
            dim: self.dim(),
            labels: self.space.labels().to_vec(),
            factors: self
                .space
                .factors()
                .map(|fs| fs.iter().map(|f| (f.name.clone(), f.cardinality)).collect()),
            entries: self.matrix.entries().iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("DF JSON serializes")
    }

    /// Parses the JSON format; the result is Hermitian-checked but not
    /// required to be normalized.
    pub fn from_json(json: &DfJson, tol: &Tolerances) -> Result<Self> {
        let (matrix, space) = json.parts()?;
        Self::from_matrix(matrix, space, false, tol)
    }

    pub fn from_json_str(text: &str, tol: &Tolerances) -> Result<Self> {
        let json: DfJson =
            serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        Self::from_json(&json, tol)
    }
}

/// On-disk DF format: entries are row-major `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DfJson {
    pub dim: usize,
    pub labels: Vec<String>,
    pub factors: Option<Vec<(String, usize)>>,
    pub entries: Vec<[f64; 2]>,
}

impl DfJson {
    pub fn parts(&self) -> Result<(ComplexMatrix, Arc<HistorySpace>)> {
        if self.labels.len() != self.dim {
            return Err(Error::Malformed(format!(
                "{} labels for dim {}",
                self.labels.len(),
                self.dim
            )));
        }
        let factors = self
            .factors
            .as_ref()
            .map(|fs| fs.iter().map(|(n, c)| Factor::new(n.clone(), *c)).collect());
        let space = Arc::new(HistorySpace::new(self.labels.clone(), factors)?);
        let matrix = ComplexMatrix::new(
            self.dim,
            self.entries
                .iter()
                .map(|&[re, im]| C64::new(re, im))
                .collect(),
        )?;
        Ok((matrix, space))
    }
}
