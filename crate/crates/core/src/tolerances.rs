//! Numerical tolerances shared across the crate.
//!
//! The defaults are the tested contract; every field can be overridden by
//! building a custom [`Tolerances`] value.

/// Norm deviation accepted for a unit vector.
pub const TOL_NORM: f64 = 1e-12;
/// Entrywise asymmetry accepted when checking Hermiticity.
pub const TOL_HERMITIAN: f64 = 1e-10;
/// Eigenvalues closer than this are treated as one level.
pub const TOL_DEGENERATE: f64 = 1e-9;
/// Levels with occupation at or below this are considered empty.
pub const TOL_OCCUPATION: f64 = 1e-10;
/// An eigenvalue within this distance of the expected energy is neither
/// below nor above it.
pub const TOL_EQUALITY: f64 = 1e-9;
/// Closure tolerance for trajectories from exact spectral propagation.
pub const TOL_CLOSURE_ANALYTIC: f64 = 1e-8;
/// Closure tolerance for numerically integrated trajectories.
pub const TOL_CLOSURE_INTEGRATED: f64 = 1e-5;
/// Slack allowed when checking that a bound does not exceed the evolution time.
pub const TOL_BOUND: f64 = 1e-6;
/// Phases within this distance below 2pi are reported as 0.
pub const PHASE_SNAP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub norm: f64,
    pub hermitian: f64,
    pub degenerate: f64,
    pub occupation: f64,
    pub equality: f64,
    pub closure_analytic: f64,
    pub closure_integrated: f64,
    pub bound: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            norm: TOL_NORM,
            hermitian: TOL_HERMITIAN,
            degenerate: TOL_DEGENERATE,
            occupation: TOL_OCCUPATION,
            equality: TOL_EQUALITY,
            closure_analytic: TOL_CLOSURE_ANALYTIC,
            closure_integrated: TOL_CLOSURE_INTEGRATED,
            bound: TOL_BOUND,
        }
    }
}

impl Tolerances {
    /// Same tolerances with both closure thresholds replaced.
    pub fn with_closure(mut self, tol: f64) -> Self {
        self.closure_analytic = tol;
        self.closure_integrated = tol;
        self
    }
}
