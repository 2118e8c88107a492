//! Finite history spaces, events (subsets as indicator vectors) and
//! partitions.

use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Separator used when labelling histories of a product space.
pub const PRODUCT_SEPARATOR: &str = "⋈";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factor {
    pub name: String,
    pub cardinality: usize,
}

impl Factor {
    pub fn new(name: impl Into<String>, cardinality: usize) -> Self {
        Self {
            name: name.into(),
            cardinality,
        }
    }
}

/// A finite, labelled set of histories.
///
/// When `factors` is present, history `i` is the mixed-radix encoding of a
/// tuple of property values with the first factor most significant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistorySpace {
    labels: Vec<String>,
    factors: Option<Vec<Factor>>,
}

impl HistorySpace {
    pub fn new(labels: Vec<String>, factors: Option<Vec<Factor>>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptySpace);
        }
        let mut seen = HashSet::with_capacity(labels.len());
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
        if let Some(fs) = &factors {
            let product = fs
                .iter()
                .try_fold(1usize, |acc, f| acc.checked_mul(f.cardinality))
                .unwrap_or(usize::MAX);
            if product != labels.len() || fs.iter().any(|f| f.cardinality == 0) {
                return Err(Error::FactorMismatch {
                    product,
                    size: labels.len(),
                });
            }
        }
        Ok(Self { labels, factors })
    }

    /// Histories labelled `"0"`, `"1"`, ...
    pub fn indexed(size: usize) -> Result<Self> {
        Self::new((0..size).map(|i| i.to_string()).collect(), None)
    }

    /// All tuples of the given properties, labelled like `"(0,1)"`.
    pub fn factored(factors: Vec<Factor>) -> Result<Self> {
        let size = factors
            .iter()
            .try_fold(1usize, |acc, f| acc.checked_mul(f.cardinality))
            .ok_or(Error::FactorMismatch {
                product: usize::MAX,
                size: 0,
            })?;
        let labels = (0..size)
            .map(|i| {
                let digits = decode_mixed_radix(i, factors.iter().map(|f| f.cardinality));
                let parts: Vec<String> = digits.iter().map(|d| d.to_string()).collect();
                format!("({})", parts.join(","))
            })
            .collect();
        Self::new(labels, Some(factors))
    }

    /// The one-history space carrying the trivial DF `[1]`.
    pub fn singleton() -> Self {
        Self {
            labels: vec!["*".to_string()],
            factors: Some(Vec::new()),
        }
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn factors(&self) -> Option<&[Factor]> {
        self.factors.as_deref()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Property values of history `index`.
    pub fn decode(&self, index: usize) -> Result<Vec<usize>> {
        let fs = self.factors.as_ref().ok_or(Error::Unfactored)?;
        if index >= self.size() {
            return Err(Error::IndexOutOfRange {
                index,
                size: self.size(),
            });
        }
        Ok(decode_mixed_radix(index, fs.iter().map(|f| f.cardinality)))
    }

    /// Flat index of a property tuple.
    pub fn encode(&self, values: &[usize]) -> Result<usize> {
        let fs = self.factors.as_ref().ok_or(Error::Unfactored)?;
        if values.len() != fs.len() {
            return Err(Error::DimensionMismatch {
                expected: fs.len(),
                actual: values.len(),
            });
        }
        let mut index = 0;
        for (v, f) in values.iter().zip(fs) {
            if *v >= f.cardinality {
                return Err(Error::IndexOutOfRange {
                    index: *v,
                    size: f.cardinality,
                });
            }
            index = index * f.cardinality + v;
        }
        Ok(index)
    }

    /// `Ω₁ × Ω₂` with `index(i, j) = i·|Ω₂| + j`.
    ///
    /// Factor lists are concatenated; an unfactored operand contributes a
    /// single factor named `"omega"` spanning all of its histories.
    pub fn product(&self, other: &Self) -> Self {
        let mut labels = Vec::with_capacity(self.size() * other.size());
        for a in &self.labels {
            for b in &other.labels {
                labels.push(format!("{a}{PRODUCT_SEPARATOR}{b}"));
            }
        }
        let factors = match (&self.factors, &other.factors) {
            (None, None) => None,
            _ => {
                let mut fs = self.factor_list();
                fs.extend(other.factor_list());
                Some(fs)
            }
        };
        Self { labels, factors }
    }

    fn factor_list(&self) -> Vec<Factor> {
        match &self.factors {
            Some(fs) => fs.clone(),
            None => vec![Factor::new("omega", self.size())],
        }
    }
}

pub(crate) fn decode_mixed_radix(
    mut index: usize,
    radices: impl DoubleEndedIterator<Item = usize> + ExactSizeIterator,
) -> Vec<usize> {
    let mut digits = vec![0; radices.len()];
    for (slot, r) in digits.iter_mut().rev().zip(radices.rev()) {
        *slot = index % r;
        index /= r;
    }
    digits
}

pub(crate) fn same_space(a: &Arc<HistorySpace>, b: &Arc<HistorySpace>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// A subset of a history space.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    space: Arc<HistorySpace>,
    indicator: Vec<bool>,
}

impl Event {
    pub fn from_indicator(space: &Arc<HistorySpace>, indicator: Vec<bool>) -> Result<Self> {
        if indicator.len() != space.size() {
            return Err(Error::DimensionMismatch {
                expected: space.size(),
                actual: indicator.len(),
            });
        }
        Ok(Self {
            space: Arc::clone(space),
            indicator,
        })
    }

    /// From a 0/1 vector; any other value is rejected.
    pub fn from_binary(space: &Arc<HistorySpace>, values: &[u8]) -> Result<Self> {
        if values.iter().any(|&v| v > 1) {
            return Err(Error::NonBinaryIndicator);
        }
        Self::from_indicator(space, values.iter().map(|&v| v == 1).collect())
    }

    pub fn from_indices(space: &Arc<HistorySpace>, indices: &[usize]) -> Result<Self> {
        let mut indicator = vec![false; space.size()];
        for &i in indices {
            if i >= space.size() {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    size: space.size(),
                });
            }
            indicator[i] = true;
        }
        Ok(Self {
            space: Arc::clone(space),
            indicator,
        })
    }

    pub fn empty(space: &Arc<HistorySpace>) -> Self {
        Self {
            space: Arc::clone(space),
            indicator: vec![false; space.size()],
        }
    }

    pub fn full(space: &Arc<HistorySpace>) -> Self {
        Self {
            space: Arc::clone(space),
            indicator: vec![true; space.size()],
        }
    }

    pub fn space(&self) -> &Arc<HistorySpace> {
        &self.space
    }

    pub fn indicator(&self) -> &[bool] {
        &self.indicator
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indicator.get(index).copied().unwrap_or(false)
    }

    pub fn indices(&self) -> Vec<usize> {
        self.indicator
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    pub fn weight(&self) -> usize {
        self.indicator.iter().filter(|&&b| b).count()
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.indicator
            .iter()
            .zip(&other.indicator)
            .all(|(&a, &b)| !(a && b))
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        if !same_space(&self.space, &other.space) {
            return Err(Error::SpaceMismatch);
        }
        Ok(Self {
            space: Arc::clone(&self.space),
            indicator: self
                .indicator
                .iter()
                .zip(&other.indicator)
                .map(|(&a, &b)| a || b)
                .collect(),
        })
    }

    /// `A₁ × A₂` on the product space.
    pub fn product(&self, other: &Self, space: &Arc<HistorySpace>) -> Result<Self> {
        let n2 = other.space.size();
        if space.size() != self.space.size() * n2 {
            return Err(Error::DimensionMismatch {
                expected: self.space.size() * n2,
                actual: space.size(),
            });
        }
        let mut indicator = vec![false; space.size()];
        for i in self.indices() {
            for j in other.indices() {
                indicator[i * n2 + j] = true;
            }
        }
        Self::from_indicator(space, indicator)
    }
}

/// Disjoint events covering the whole history space.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    space: Arc<HistorySpace>,
    cells: Vec<Event>,
}

impl Partition {
    pub fn new(space: &Arc<HistorySpace>, cells: Vec<Event>) -> Result<Self> {
        let mut covered = vec![false; space.size()];
        for cell in &cells {
            if !same_space(cell.space(), space) {
                return Err(Error::SpaceMismatch);
            }
            for i in cell.indices() {
                if covered[i] {
                    return Err(Error::InvalidPartition);
                }
                covered[i] = true;
            }
        }
        if !covered.iter().all(|&c| c) {
            return Err(Error::InvalidPartition);
        }
        Ok(Self {
            space: Arc::clone(space),
            cells,
        })
    }

    /// Builds a partition from a cell label per history; cells are ordered
    /// by label value and empty labels in `0..num_cells` give empty cells.
    pub fn from_labels(
        space: &Arc<HistorySpace>,
        num_cells: usize,
        label: impl Fn(usize) -> usize,
    ) -> Result<Self> {
        let mut indicators = vec![vec![false; space.size()]; num_cells];
        for (i, _) in space.labels().iter().enumerate() {
            let k = label(i);
            if k >= num_cells {
                return Err(Error::IndexOutOfRange {
                    index: k,
                    size: num_cells,
                });
            }
            indicators[k][i] = true;
        }
        let cells = indicators
            .into_iter()
            .map(|ind| Event::from_indicator(space, ind))
            .collect::<Result<Vec<_>>>()?;
        Self::new(space, cells)
    }

    /// `{A_a}`: histories grouped by the value of property `k`.
    pub fn by_property(space: &Arc<HistorySpace>, k: usize) -> Result<Self> {
        let fs = space.factors().ok_or(Error::Unfactored)?;
        let card = fs
            .get(k)
            .ok_or(Error::IndexOutOfRange {
                index: k,
                size: fs.len(),
            })?
            .cardinality;
        let decoded: Vec<Vec<usize>> = (0..space.size())
            .map(|i| space.decode(i))
            .collect::<Result<_>>()?;
        Self::from_labels(space, card, |i| decoded[i][k])
    }

    pub fn singletons(space: &Arc<HistorySpace>) -> Self {
        let cells = (0..space.size())
            .map(|i| Event::from_indices(space, &[i]).expect("index in range"))
            .collect();
        Self {
            space: Arc::clone(space),
            cells,
        }
    }

    pub fn space(&self) -> &Arc<HistorySpace> {
        &self.space
    }

    pub fn cells(&self) -> &[Event] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Cell index of each history.
    pub fn cell_of(&self) -> Vec<usize> {
        let mut owner = vec![0; self.space.size()];
        for (k, cell) in self.cells.iter().enumerate() {
            for i in cell.indices() {
                owner[i] = k;
            }
        }
        owner
    }
}
