//! Pieces shared by the segment-recurrence propagators.

use serde::{Deserialize, Serialize};

/// Initial data of a fundamental solution, with zero prehistory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InitialCondition {
    /// `x(0) = 1, x'(0) = 0`: the first fundamental solution `x1`.
    UnitDisplacement,
    /// `x(0) = 0, x'(0) = 1`: the second fundamental solution `x2`.
    UnitVelocity,
}

impl InitialCondition {
    pub fn state(self) -> (f64, f64) {
        match self {
            InitialCondition::UnitDisplacement => (1.0, 0.0),
            InitialCondition::UnitVelocity => (0.0, 1.0),
        }
    }
}

/// Relative discrepancy above which a recurrence chain is flagged degraded.
pub const GUARD_TOLERANCE: f64 = 1e-6;

/// RK4 substeps per segment for the guard integration.
pub(crate) const GUARD_SUBSTEPS: usize = 128;

/// Where a chain stopped being trustworthy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Degradation {
    pub segment: usize,
    pub discrepancy: f64,
}

/// Number of delay-length pieces needed to reach `horizon`.
pub(crate) fn pieces_for(horizon: f64, tau: f64) -> usize {
    ((horizon / tau).ceil() as usize).max(1)
}

pub(crate) fn state_scale((x, v): (f64, f64)) -> f64 {
    x.abs().max(v.abs())
}

/// Integrates `x'' = accel(s, x, x')` over `[0, len]` with classical RK4.
pub(crate) fn guard_rk4(
    start: (f64, f64),
    len: f64,
    steps: usize,
    accel: impl Fn(f64, f64, f64) -> f64,
) -> (f64, f64) {
    let h = len / steps as f64;
    let (mut x, mut v) = start;
    for k in 0..steps {
        let s = k as f64 * h;
        let k1x = v;
        let k1v = accel(s, x, v);
        let k2x = v + 0.5 * h * k1v;
        let k2v = accel(s + 0.5 * h, x + 0.5 * h * k1x, k2x);
        let k3x = v + 0.5 * h * k2v;
        let k3v = accel(s + 0.5 * h, x + 0.5 * h * k2x, k3x);
        let k4x = v + h * k3v;
        let k4v = accel(s + h, x + h * k3x, k4x);
        x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
    (x, v)
}
