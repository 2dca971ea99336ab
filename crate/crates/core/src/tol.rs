//! Numerical tolerances and iteration budgets shared by every analysis.

use serde::{Deserialize, Serialize};

/// Tolerances and budgets. Every report echoes the values it was run with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Entries with modulus `<= zero` count as structural zeros in
    /// invariance tests. Exactly `0.0` unless the caller opts in.
    pub zero: f64,
    /// Absolute merge/membership tolerance for spectral points.
    pub spec: f64,
    /// Relative residual tolerance for direct linear solves.
    pub lin: f64,
    /// Relative step below which a Gelfand trace counts as converged.
    pub gelfand: f64,
    /// Absolute tolerance for radius estimates and bisection width.
    pub radius: f64,
    /// Tail and residual tolerance for Neumann series.
    pub neumann: f64,
    /// Hard ceiling that declares a power sequence divergent.
    pub divergence_ceiling: f64,
    /// Smallest `ν` tried by the locally bounded radius bisection.
    pub lb_floor: f64,
    /// Default number of Gelfand terms `N`.
    pub terms: usize,
    /// Default Neumann term budget.
    pub max_terms: usize,
    /// Deepest dyadic index `2^k` reached by repeated squaring, for Gelfand
    /// traces and the locally bounded radius.
    pub dyadic_levels: u32,
    /// Default budget of generated seminorms for principal closures.
    pub closure_cap: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            zero: 0.0,
            spec: 1e-8,
            lin: 1e-10,
            gelfand: 1e-6,
            radius: 1e-4,
            neumann: 1e-8,
            divergence_ceiling: 1e12,
            lb_floor: 1e-6,
            terms: 200,
            max_terms: 1000,
            dyadic_levels: 48,
            closure_cap: 64,
        }
    }
}

impl Tolerances {
    pub fn zero_relaxed(&self) -> bool {
        self.zero > 0.0
    }
}
