use serde::{Deserialize, Serialize};

/// Absolute tolerance for scalar equalities.
pub const TOL_EQ: f64 = 1e-10;
/// Absolute tolerance for positivity verdicts.
pub const TOL_POS: f64 = 1e-10;
/// Relative tolerance for eigen residuals.
pub const TOL_SPEC: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Tolerances {
    pub eq: f64,
    pub pos: f64,
    pub spec: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eq: TOL_EQ,
            pos: TOL_POS,
            spec: TOL_SPEC,
        }
    }
}

impl Tolerances {
    /// Same value for the equality and positivity cutoffs.
    pub fn uniform(tol: f64) -> Self {
        Self {
            eq: tol,
            pos: tol,
            ..Self::default()
        }
    }
}
