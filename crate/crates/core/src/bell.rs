//! Bipartite Bell scenarios: histories `(a₁..a_m, b₁..b_m)`, behaviors
//! `P(a,b|x,y)`, and the partitions a DF must decohere to reproduce them.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::axioms::{cell_matrix, DecoherenceMode};
use crate::compose::DEFAULT_DIM_CAP;
use crate::df::DecoherenceFunctional;
use crate::error::{Error, Result};
use crate::quantum::QuantumModel;
use crate::space::{same_space, Factor, HistorySpace, Partition};
use crate::tol::Tolerances;

/// `P(a,b|x,y)` for `m` settings and `d` outcomes per party; all indices
/// 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Behavior {
    pub m: usize,
    pub d: usize,
    /// Indexed `[x][y][a][b]`.
    #[serde(rename = "P")]
    pub p: Vec<Vec<Vec<Vec<f64>>>>,
}

impl Behavior {
    pub fn new(m: usize, d: usize, p: Vec<Vec<Vec<Vec<f64>>>>, tol: &Tolerances) -> Result<Self> {
        let b = Self { m, d, p };
        b.validate(tol)?;
        Ok(b)
    }

    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        let (m, d) = (self.m, self.d);
        if m == 0 || d < 2 {
            return Err(Error::InvalidParameter(format!(
                "need m ≥ 1 and d ≥ 2, got m={m} d={d}"
            )));
        }
        let shape_ok = self.p.len() == m
            && self.p.iter().all(|row| {
                row.len() == m
                    && row
                        .iter()
                        .all(|t| t.len() == d && t.iter().all(|r| r.len() == d))
            });
        if !shape_ok {
            return Err(Error::Malformed(format!(
                "behavior table is not {m}×{m}×{d}×{d}"
            )));
        }
        for x in 0..m {
            for y in 0..m {
                let t = &self.p[x][y];
                if let Some(v) = t
                    .iter()
                    .flatten()
                    .find(|&&v| !v.is_finite() || v < -tol.pos)
                {
                    return Err(Error::InvalidParameter(format!(
                        "P(·,·|{x},{y}) has entry {v}"
                    )));
                }
                let sum: f64 = t.iter().flatten().sum();
                if (sum - 1.0).abs() > tol.eq {
                    return Err(Error::InvalidParameter(format!(
                        "P(·,·|{x},{y}) sums to {sum}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.p[x][y][a][b]
    }

    /// `P(a,b|x,y) = tr(ρ E(x,a) F(y,b))`; both parties need `m` settings
    /// with `d` outcomes each.
    pub fn from_model(model: &QuantumModel, tol: &Tolerances) -> Result<Self> {
        let m = model.alice().len();
        let d = model.alice()[0].outcomes();
        let uniform = model.bob().len() == m
            && model
                .alice()
                .iter()
                .chain(model.bob())
                .all(|f| f.outcomes() == d);
        if !uniform {
            return Err(Error::InvalidParameter(
                "behavior tables need the same number of settings and outcomes on both sides"
                    .into(),
            ));
        }
        let mut p = vec![vec![vec![vec![0.0; d]; d]; m]; m];
        for (x, px) in p.iter_mut().enumerate() {
            for (y, pxy) in px.iter_mut().enumerate() {
                for (a, row) in pxy.iter_mut().enumerate() {
                    for (b, v) in row.iter_mut().enumerate() {
                        *v = model.joint_probability(x, y, a, b)?;
                    }
                }
            }
        }
        Self::new(m, d, p, tol)
    }

    /// Largest violation of `Σ_b P(a,b|x,y) = Σ_b P(a,b|x,y′)` and its
    /// mirror image for Bob's marginals.
    pub fn no_signaling_deviation(&self) -> f64 {
        let (m, d) = (self.m, self.d);
        let alice = |x: usize, y: usize, a: usize| -> f64 { self.p[x][y][a].iter().sum() };
        let bob =
            |x: usize, y: usize, b: usize| -> f64 { (0..d).map(|a| self.p[x][y][a][b]).sum() };
        let mut worst = 0.0_f64;
        for x in 0..m {
            for y in 0..m {
                for k in 0..d {
                    worst = worst.max((alice(x, y, k) - alice(x, 0, k)).abs());
                    worst = worst.max((bob(x, y, k) - bob(0, y, k)).abs());
                }
            }
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BellSpace {
    m: usize,
    d: usize,
    space: Arc<HistorySpace>,
}

impl BellSpace {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn space(&self) -> &Arc<HistorySpace> {
        &self.space
    }

    /// Position of `a_x` in a history tuple.
    pub fn alice_property(&self, x: usize) -> usize {
        x
    }

    /// Position of `b_y` in a history tuple.
    pub fn bob_property(&self, y: usize) -> usize {
        self.m + y
    }

    fn check_setting(&self, s: usize) -> Result<()> {
        if s >= self.m {
            return Err(Error::IndexOutOfRange {
                index: s,
                size: self.m,
            });
        }
        Ok(())
    }
}

/// Properties `a₁..a_m` then `b₁..b_m`, each with `d` values.
pub fn bell_history_space(m: usize, d: usize) -> Result<BellSpace> {
    if m == 0 || d < 2 {
        return Err(Error::InvalidParameter(format!(
            "need m ≥ 1 and d ≥ 2, got m={m} d={d}"
        )));
    }
    let size = u32::try_from(2 * m)
        .ok()
        .and_then(|e| d.checked_pow(e))
        .filter(|&s| s <= DEFAULT_DIM_CAP)
        .ok_or(Error::DimensionCap {
            dim: usize::MAX,
            cap: DEFAULT_DIM_CAP,
        })?;
    let factors: Vec<Factor> = (1..=m)
        .map(|x| Factor::new(format!("a{x}"), d))
        .chain((1..=m).map(|y| Factor::new(format!("b{y}"), d)))
        .collect();
    let space = Arc::new(HistorySpace::factored(factors)?);
    debug_assert_eq!(space.size(), size);
    Ok(BellSpace { m, d, space })
}

/// Cell `a·d + b` holds the histories with `a_x = a` and `b_y = b`.
pub fn fixed_setting_partition(bell: &BellSpace, x: usize, y: usize) -> Result<Partition> {
    bell.check_setting(x)?;
    bell.check_setting(y)?;
    let d = bell.d;
    let (px, py) = (bell.alice_property(x), bell.bob_property(y));
    let decoded = decode_all(bell)?;
    Partition::from_labels(&bell.space, d * d, |i| decoded[i][px] * d + decoded[i][py])
}

/// Which party measures first in an adaptive run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// Alice measures `x`; Bob then measures `g(a)`.
    AliceFirst,
    /// Bob measures `y`; Alice then measures `g(b)`.
    BobFirst,
}

/// Cell `a·d + b` holds `{a_x = a, b_{g(a)} = b}` (Alice first) or
/// `{b_x = b, a_{g(b)} = a}` (Bob first, `x` is then Bob's setting).
pub fn adaptive_partition(
    bell: &BellSpace,
    side: Side,
    x: usize,
    g: &[usize],
) -> Result<Partition> {
    bell.check_setting(x)?;
    if g.len() != bell.d {
        return Err(Error::InvalidParameter(format!(
            "setting map has {} entries, expected {}",
            g.len(),
            bell.d
        )));
    }
    for &s in g {
        bell.check_setting(s)?;
    }
    let d = bell.d;
    let decoded = decode_all(bell)?;
    Partition::from_labels(&bell.space, d * d, |i| {
        let h = &decoded[i];
        match side {
            Side::AliceFirst => {
                let a = h[bell.alice_property(x)];
                a * d + h[bell.bob_property(g[a])]
            }
            Side::BobFirst => {
                let b = h[bell.bob_property(x)];
                h[bell.alice_property(g[b])] * d + b
            }
        }
    })
}

fn decode_all(bell: &BellSpace) -> Result<Vec<Vec<usize>>> {
    (0..bell.space.size())
        .map(|i| bell.space.decode(i))
        .collect()
}

/// All `m^d` maps `{0..d} → {0..m}`, first outcome most significant.
pub fn setting_maps(m: usize, d: usize) -> Vec<Vec<usize>> {
    let total = m.pow(d as u32);
    (0..total)
        .map(|mut k| {
            let mut g = vec![0; d];
            for slot in g.iter_mut().rev() {
                *slot = k % m;
                k /= m;
            }
            g
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "kind")]
pub enum PartitionSpec {
    Fixed {
        x: usize,
        y: usize,
    },
    Adaptive {
        side: Side,
        setting: usize,
        map: Vec<usize>,
    },
}

impl PartitionSpec {
    pub fn partition(&self, bell: &BellSpace) -> Result<Partition> {
        match self {
            PartitionSpec::Fixed { x, y } => fixed_setting_partition(bell, *x, *y),
            PartitionSpec::Adaptive { side, setting, map } => {
                adaptive_partition(bell, *side, *setting, map)
            }
        }
    }

    /// Behavior entry the diagonal of cell `(a, b)` must reproduce.
    pub fn expected(&self, behavior: &Behavior, a: usize, b: usize) -> f64 {
        match self {
            PartitionSpec::Fixed { x, y } => behavior.get(*x, *y, a, b),
            PartitionSpec::Adaptive {
                side: Side::AliceFirst,
                setting,
                map,
            } => behavior.get(*setting, map[a], a, b),
            PartitionSpec::Adaptive {
                side: Side::BobFirst,
                setting,
                map,
            } => behavior.get(map[b], *setting, a, b),
        }
    }

    fn is_constant_adaptive(&self) -> bool {
        matches!(self, PartitionSpec::Adaptive { map, .. } if map.iter().all(|&s| s == map[0]))
    }
}

/// The `m²` fixed-setting partitions followed by the `2·m·m^d` adaptive
/// ones (Alice first, then Bob first; settings ascending; maps in
/// [`setting_maps`] order).
pub fn all_partition_specs(m: usize, d: usize) -> Vec<PartitionSpec> {
    let mut specs: Vec<PartitionSpec> = (0..m)
        .flat_map(|x| (0..m).map(move |y| PartitionSpec::Fixed { x, y }))
        .collect();
    let maps = setting_maps(m, d);
    for side in [Side::AliceFirst, Side::BobFirst] {
        for setting in 0..m {
            for map in &maps {
                specs.push(PartitionSpec::Adaptive {
                    side,
                    setting,
                    map: map.clone(),
                });
            }
        }
    }
    specs
}

/// Specs actually imposed: constant maps reproduce a fixed-setting
/// partition and are dropped.
pub fn checked_partition_specs(m: usize, d: usize) -> Vec<PartitionSpec> {
    all_partition_specs(m, d)
        .into_iter()
        .filter(|s| !s.is_constant_adaptive())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PartitionCheck {
    pub spec: PartitionSpec,
    /// Largest cross term, `|Re D(A|B)|` (weak) or `|D(A|B)|` (strong).
    pub max_off_diagonal: f64,
    /// Largest `|D(A_ab|A_ab) − P|` over the cells.
    pub max_probability_deviation: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BellReport {
    pub tolerances: Tolerances,
    pub mode: DecoherenceMode,
    pub partitions: Vec<PartitionCheck>,
    pub worst_deviation: f64,
    pub passed: bool,
}

/// Every fixed-setting and one-step adaptive partition must decohere in
/// `mode` with diagonal equal to the behavior.
pub fn check_behavior_consistency(
    df: &DecoherenceFunctional,
    behavior: &Behavior,
    mode: DecoherenceMode,
    tol: &Tolerances,
) -> Result<BellReport> {
    behavior.validate(tol)?;
    let bell = bell_history_space(behavior.m, behavior.d)?;
    if !same_space(df.space(), bell.space()) {
        return Err(Error::SpaceMismatch);
    }
    let d = behavior.d;
    let partitions = checked_partition_specs(behavior.m, d)
        .into_iter()
        .map(|spec| {
            let c = cell_matrix(df, &spec.partition(&bell)?);
            let mut max_off_diagonal = 0.0_f64;
            let mut max_probability_deviation = 0.0_f64;
            for (k, row) in c.iter().enumerate() {
                for (j, z) in row.iter().enumerate() {
                    if k == j {
                        let dev = (z - spec.expected(behavior, k / d, k % d)).norm();
                        max_probability_deviation = max_probability_deviation.max(dev);
                    } else {
                        let size = match mode {
                            DecoherenceMode::Weak => z.re.abs(),
                            DecoherenceMode::Strong => z.norm(),
                        };
                        max_off_diagonal = max_off_diagonal.max(size);
                    }
                }
            }
            Ok(PartitionCheck {
                spec,
                max_off_diagonal,
                max_probability_deviation,
                passed: max_off_diagonal <= tol.eq && max_probability_deviation <= tol.eq,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let worst_deviation = partitions
        .iter()
        .map(|p| p.max_off_diagonal.max(p.max_probability_deviation))
        .fold(0.0, f64::max);
    let passed = partitions.iter().all(|p| p.passed);
    Ok(BellReport {
        tolerances: *tol,
        mode,
        partitions,
        worst_deviation,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{ComplexMatrix, C64};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn space_sizes() {
        assert_eq!(bell_history_space(1, 2).unwrap().space().size(), 4);
        assert_eq!(bell_history_space(2, 2).unwrap().space().size(), 16);
        assert_eq!(bell_history_space(2, 3).unwrap().space().size(), 81);
        assert!(bell_history_space(4, 4).is_err());
    }

    #[test]
    fn fixed_partitions() {
        let b = bell_history_space(1, 2).unwrap();
        let p = fixed_setting_partition(&b, 0, 0).unwrap();
        assert!(p.cells().iter().all(|c| c.weight() == 1));
        let b = bell_history_space(2, 2).unwrap();
        let p = fixed_setting_partition(&b, 0, 0).unwrap();
        assert_eq!(p.len(), 4);
        assert!(p.cells().iter().all(|c| c.weight() == 4));
        assert!(fixed_setting_partition(&b, 2, 0).is_err());
    }

    #[test]
    fn adaptive_partitions() {
        let b = bell_history_space(2, 2).unwrap();
        for y in 0..2 {
            assert_eq!(
                adaptive_partition(&b, Side::AliceFirst, 0, &[y, y]).unwrap(),
                fixed_setting_partition(&b, 0, y).unwrap()
            );
            assert_eq!(
                adaptive_partition(&b, Side::BobFirst, y, &[1, 1]).unwrap(),
                fixed_setting_partition(&b, 1, y).unwrap()
            );
        }
        let p = adaptive_partition(&b, Side::AliceFirst, 0, &[0, 1]).unwrap();
        assert_eq!(p.len(), 4);
        assert!(p.cells().iter().all(|c| c.weight() == 4));
        assert!(adaptive_partition(&b, Side::AliceFirst, 0, &[0]).is_err());
        assert!(adaptive_partition(&b, Side::AliceFirst, 0, &[0, 2]).is_err());
    }

    #[test]
    fn partition_counts() {
        for (m, d) in [(1, 2), (2, 2), (2, 3), (3, 2)] {
            let all = all_partition_specs(m, d);
            let adaptive = all.len() - m * m;
            assert_eq!(adaptive, 2 * m * m.pow(d as u32));
            assert_eq!(
                checked_partition_specs(m, d).len(),
                m * m + 2 * m * (m.pow(d as u32) - m)
            );
        }
    }

    fn product_behavior(pa: &[f64], pb: &[f64]) -> (DecoherenceFunctional, Behavior) {
        // classical product distribution where every setting reads the same bit
        let bell = bell_history_space(2, 2).unwrap();
        let n = bell.space().size();
        let mut diag = vec![0.0; n];
        for (i, slot) in diag.iter_mut().enumerate() {
            let h = bell.space().decode(i).unwrap();
            let consistent = h[0] == h[1] && h[2] == h[3];
            if consistent {
                *slot = pa[h[0]] * pb[h[2]];
            }
        }
        let df = DecoherenceFunctional::from_matrix(
            ComplexMatrix::diagonal(&diag),
            bell.space().clone(),
            true,
            &tol(),
        )
        .unwrap();
        let p = (0..2)
            .map(|_| {
                (0..2)
                    .map(|_| {
                        (0..2)
                            .map(|a| (0..2).map(|b| pa[a] * pb[b]).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        (df, Behavior::new(2, 2, p, &tol()).unwrap())
    }

    #[test]
    fn diagonal_df_reproduces_its_behavior() {
        let (df, beh) = product_behavior(&[0.3, 0.7], &[0.6, 0.4]);
        let r = check_behavior_consistency(&df, &beh, DecoherenceMode::Strong, &tol()).unwrap();
        assert!(r.passed, "{:?}", r.worst_deviation);
        assert!(beh.no_signaling_deviation() < 1e-15);
    }

    #[test]
    fn imaginary_perturbation_shows_up_as_cross_term() {
        let (df, beh) = product_behavior(&[0.3, 0.7], &[0.6, 0.4]);
        let mut m = df.matrix().entries().to_vec();
        let n = df.dim();
        let delta = 1e-3;
        // histories 0 = (0,0,0,0) and 15 = (1,1,1,1)
        m[15] += C64::new(0.0, delta);
        m[15 * n] += C64::new(0.0, -delta);
        let df2 = DecoherenceFunctional::from_matrix(
            ComplexMatrix::new(n, m).unwrap(),
            df.space().clone(),
            true,
            &tol(),
        )
        .unwrap();
        let r = check_behavior_consistency(&df2, &beh, DecoherenceMode::Strong, &tol()).unwrap();
        assert!(!r.passed);
        assert!((r.worst_deviation - delta).abs() < 1e-12);
        // purely imaginary cross terms are invisible to weak decoherence
        let r = check_behavior_consistency(&df2, &beh, DecoherenceMode::Weak, &tol()).unwrap();
        assert!(r.passed);
    }

    #[test]
    fn behavior_validation() {
        let bad = vec![vec![vec![vec![0.5, 0.5], vec![0.5, 0.5]]]];
        assert!(Behavior::new(1, 2, bad, &tol()).is_err());
        let short = vec![vec![vec![vec![1.0, 0.0]]]];
        assert!(matches!(
            Behavior::new(1, 2, short, &tol()),
            Err(Error::Malformed(_))
        ));
    }

    #[test]
    fn behavior_json_shape() {
        let (_, beh) = product_behavior(&[1.0, 0.0], &[0.0, 1.0]);
        let s = serde_json::to_string(&beh).unwrap();
        assert!(
            s.starts_with(r#"{"m":2,"d":2,"P":[[[[0.0,1.0],[0.0,0.0]]"#),
            "{s}"
        );
        let back: Behavior = serde_json::from_str(&s).unwrap();
        assert_eq!(back, beh);
    }
}
