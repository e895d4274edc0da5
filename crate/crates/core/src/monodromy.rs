//! One-period state-transition matrix, Floquet multipliers and verdicts.
//!
//! With `x1`, `x2` the fundamental solutions started from `(1, 0)` and
//! `(0, 1)`, the state map `(x, x')(0) -> (x, x')(period)` is
//!
//! ```text
//! M = | x1(w)   x2(w)  |
//!     | x1'(w)  x2'(w) |
//! ```
//!
//! Solutions with `x(t + w) = lambda x(t)` exist exactly for the roots of
//! `lambda^2 - tr(M) lambda + det(M) = 0`; `det(M)` is the Wronskian at `w`.

use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::eqmodel::EquationSpec;
use crate::error::{Error, Result};
use crate::steps::{integrate_fundamental, simulate_periods, StepSize};

/// Half-width of the band around `rho = 1` reported as marginal.
pub const MARGINAL_TOL: f64 = 1e-9;

/// Periods simulated by [`decay_estimate`].
pub const DECAY_PERIODS: usize = 30;
/// Largest relative residual accepted for the orbit fit.
pub const DECAY_FIT_TOL: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonodromyMatrix {
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
}

impl MonodromyMatrix {
    /// From the end states `(x1(w), x1'(w))` and `(x2(w), x2'(w))`.
    pub fn from_pair(x1: (f64, f64), x2: (f64, f64)) -> Result<Self> {
        let m = Self {
            m11: x1.0,
            m12: x2.0,
            m21: x1.1,
            m22: x2.1,
        };
        if m.entries().iter().all(|e| e.is_finite()) {
            Ok(m)
        } else {
            Err(Error::NonFinite { segment: 0 })
        }
    }

    pub fn entries(&self) -> [f64; 4] {
        [self.m11, self.m12, self.m21, self.m22]
    }

    pub fn trace(&self) -> f64 {
        self.m11 + self.m22
    }

    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn max_abs(&self) -> f64 {
        self.entries().iter().fold(0.0, |acc, e| acc.max(e.abs()))
    }

    /// `M v`, the state one period later.
    pub fn apply(&self, (x, v): (f64, f64)) -> (f64, f64) {
        (self.m11 * x + self.m12 * v, self.m21 * x + self.m22 * v)
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self {
            m11: self.m11 * o.m11 + self.m12 * o.m21,
            m12: self.m11 * o.m12 + self.m12 * o.m22,
            m21: self.m21 * o.m11 + self.m22 * o.m21,
            m22: self.m21 * o.m12 + self.m22 * o.m22,
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self {
            m11: 1.0,
            m12: 0.0,
            m21: 0.0,
            m22: 1.0,
        };
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }
}

/// Roots of `lambda^2 - tr lambda + det`, larger magnitude first.
///
/// Real roots avoid cancellation: the larger one is formed with the sign of
/// the trace and the smaller one as `det / larger`.
pub fn multipliers(m: &MonodromyMatrix) -> [Complex64; 2] {
    quadratic_roots(m.trace(), m.det())
}

pub(crate) fn quadratic_roots(tr: f64, det: f64) -> [Complex64; 2] {
    let half = 0.5 * tr;
    // (tr/2)^2 - det, formed with fma to limit rounding near double roots
    let disc = half.mul_add(half, -det);
    if disc >= 0.0 {
        let root = disc.sqrt();
        let big = if half >= 0.0 { half + root } else { half - root };
        let small = if big != 0.0 { det / big } else { 0.0 };
        let (l1, l2) = if small.abs() > big.abs() { (small, big) } else { (big, small) };
        [Complex64::new(l1, 0.0), Complex64::new(l2, 0.0)]
    } else {
        let im = (-disc).sqrt();
        [Complex64::new(half, im), Complex64::new(half, -im)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum StabilityClass {
    ExponentiallyStable,
    Marginal,
    Unstable,
}

impl StabilityClass {
    pub fn as_str(self) -> &'static str {
        match self {
            StabilityClass::ExponentiallyStable => "ExponentiallyStable",
            StabilityClass::Marginal => "Marginal",
            StabilityClass::Unstable => "Unstable",
        }
    }
}

impl std::fmt::Display for StabilityClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

fn complex_pair<S: Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

/// Multipliers with their spectral radius and classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityVerdict {
    #[serde(serialize_with = "complex_pair")]
    pub lambda1: Complex64,
    #[serde(serialize_with = "complex_pair")]
    pub lambda2: Complex64,
    pub rho: f64,
    pub class: StabilityClass,
    pub margin: f64,
}

impl StabilityVerdict {
    /// The dominant multiplier when it is real.
    pub fn dominant_real(&self) -> Option<f64> {
        (self.lambda1.im == 0.0).then_some(self.lambda1.re)
    }
}

/// Stable iff `rho < 1 - tol`, marginal iff `|rho - 1| <= tol`.
pub fn classify(lams: [Complex64; 2], tol: f64) -> StabilityVerdict {
    let [l1, l2] = if lams[1].norm() > lams[0].norm() { [lams[1], lams[0]] } else { lams };
    let rho = l1.norm();
    let class = if (rho - 1.0).abs() <= tol {
        StabilityClass::Marginal
    } else if rho < 1.0 {
        StabilityClass::ExponentiallyStable
    } else {
        StabilityClass::Unstable
    };
    StabilityVerdict {
        lambda1: l1,
        lambda2: l2,
        rho,
        class,
        margin: 1.0 - rho,
    }
}

pub fn verdict(m: &MonodromyMatrix) -> StabilityVerdict {
    classify(multipliers(m), MARGINAL_TOL)
}

/// Monodromy matrix from two integrated fundamental solutions.
pub fn monodromy_numeric(spec: &EquationSpec, h: StepSize) -> Result<MonodromyMatrix> {
    let (x1, x2) = integrate_fundamental(spec, h)?;
    MonodromyMatrix::from_pair(x1.final_state(), x2.final_state())
}

/// Unit-norm `(c1, c2)` with `M c = lambda c`: the initial state of a
/// solution satisfying `x(t + w) = lambda x(t)`.
pub fn floquet_initial_state(m: &MonodromyMatrix, lambda: f64) -> Result<(f64, f64)> {
    let from_row1 = (m.m12, lambda - m.m11);
    let from_row2 = (lambda - m.m22, m.m21);
    let norm = |c: (f64, f64)| c.0.hypot(c.1);
    let mut c = if norm(from_row1) >= norm(from_row2) { from_row1 } else { from_row2 };
    if norm(c) == 0.0 {
        // M = lambda I
        c = (1.0, 0.0);
    }
    let n = norm(c);
    c = (c.0 / n, c.1 / n);
    let lead = if c.0 != 0.0 { c.0 } else { c.1 };
    if lead < 0.0 {
        c = (-c.0, -c.1);
    }
    let mc = m.apply(c);
    let residual = (mc.0 - lambda * c.0).hypot(mc.1 - lambda * c.1);
    if residual > 1e-8 * m.max_abs().max(1.0) {
        return Err(Error::InvalidRequest(format!(
            "{lambda} is not a real multiplier (residual {residual:.3e})"
        )));
    }
    Ok(c)
}

/// Complex counterpart of [`floquet_initial_state`]: `c` with `M c = lambda c`,
/// unit norm. The real and imaginary parts of `c` start two real solutions
/// `xr`, `xi` with `(xr + i xi)(t + w) = lambda (xr + i xi)(t)`.
pub fn floquet_initial_state_complex(m: &MonodromyMatrix, lambda: Complex64) -> Result<(Complex64, Complex64)> {
    let from_row1 = (Complex64::new(m.m12, 0.0), lambda - m.m11);
    let from_row2 = (lambda - m.m22, Complex64::new(m.m21, 0.0));
    let norm = |c: (Complex64, Complex64)| c.0.norm().hypot(c.1.norm());
    let mut c = if norm(from_row1) >= norm(from_row2) { from_row1 } else { from_row2 };
    if norm(c) == 0.0 {
        c = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    }
    let n = norm(c);
    c = (c.0 / n, c.1 / n);
    let mc = (m.m11 * c.0 + m.m12 * c.1, m.m21 * c.0 + m.m22 * c.1);
    let residual = (mc.0 - lambda * c.0).norm().hypot((mc.1 - lambda * c.1).norm());
    if residual > 1e-8 * m.max_abs().max(1.0) {
        return Err(Error::InvalidRequest(format!(
            "{lambda} is not a multiplier (residual {residual:.3e})"
        )));
    }
    Ok(c)
}

/// Exponential rate `-ln(rho) / period`, when the multipliers decay.
pub fn decay_rate(verdict: &StabilityVerdict, period: f64) -> Option<f64> {
    (verdict.rho < 1.0 && verdict.rho > 0.0).then(|| -verdict.rho.ln() / period)
}

/// Geometric decay recovered from simulated period-boundary states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitFit {
    /// Spectral radius of the fitted two-term recurrence.
    pub rho: f64,
    /// Smallest `N` with `|state(k)| <= N rho^k` over both orbits.
    pub bound: f64,
    /// Relative residual of the recurrence fit.
    pub residual: f64,
    pub periods: usize,
}

/// Simulates the orbits of `(1, 0)` and `(0, 1)` and fits
/// `s(k+2) = T s(k+1) - D s(k)` by weighted least squares.
pub fn fit_orbit_decay(spec: &EquationSpec, periods: usize, h: StepSize) -> Result<OrbitFit> {
    if periods < 3 {
        return Err(Error::InvalidRequest("need at least 3 periods to fit".into()));
    }
    let orbits = [
        simulate_periods(spec, (1.0, 0.0), periods, h)?,
        simulate_periods(spec, (0.0, 1.0), periods, h)?,
    ];
    let norm = |s: (f64, f64)| s.0.hypot(s.1);

    // normal equations for (T, D)
    let (mut aa, mut ab, mut bb, mut ya, mut yb) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for orbit in &orbits {
        for k in 0..orbit.len() - 2 {
            let w = norm(orbit[k]).max(norm(orbit[k + 1]));
            if w == 0.0 {
                continue;
            }
            let (p, q, y) = (orbit[k + 1], orbit[k], orbit[k + 2]);
            for (pc, qc, yc) in [(p.0, q.0, y.0), (p.1, q.1, y.1)] {
                let (u, v, z) = (pc / w, -qc / w, yc / w);
                aa += u * u;
                ab += u * v;
                bb += v * v;
                ya += z * u;
                yb += z * v;
            }
        }
    }
    let det = aa * bb - ab * ab;
    if det == 0.0 {
        return Err(Error::InvalidRequest("orbit too degenerate to fit".into()));
    }
    let tr = (ya * bb - yb * ab) / det;
    let d = (aa * yb - ab * ya) / det;
    let (mut res2, mut tot2) = (0.0, 0.0);
    for orbit in &orbits {
        for k in 0..orbit.len() - 2 {
            let w = norm(orbit[k]).max(norm(orbit[k + 1]));
            if w == 0.0 {
                continue;
            }
            let (p, q, y) = (orbit[k + 1], orbit[k], orbit[k + 2]);
            for (pc, qc, yc) in [(p.0, q.0, y.0), (p.1, q.1, y.1)] {
                res2 += ((yc - tr * pc + d * qc) / w).powi(2);
                tot2 += (yc / w).powi(2);
            }
        }
    }
    let residual = (res2 / tot2.max(f64::MIN_POSITIVE)).sqrt();

    let rho = quadratic_roots(tr, d)[0].norm();
    let bound = orbits
        .iter()
        .flat_map(|o| o.iter().enumerate())
        .map(|(k, &s)| norm(s) / rho.powi(k as i32))
        .fold(0.0, f64::max);
    Ok(OrbitFit {
        rho,
        bound,
        residual,
        periods,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayEstimate {
    /// `-ln(rho) / period`; `None` when the multipliers do not decay.
    pub rate: Option<f64>,
    /// `rho^(1 / period)`, the contraction per unit time.
    pub per_unit_time: Option<f64>,
    pub fit: Option<OrbitFit>,
}

impl DecayEstimate {
    /// The orbit fit exists and its relative residual is within [`DECAY_FIT_TOL`].
    pub fn fit_holds(&self) -> bool {
        self.fit.as_ref().is_some_and(|f| f.residual <= DECAY_FIT_TOL)
    }
}

/// Decay rate from the verdict, checked against a simulated 30-period orbit.
pub fn decay_estimate(verdict: &StabilityVerdict, spec: &EquationSpec, h: StepSize) -> Result<DecayEstimate> {
    let rate = decay_rate(verdict, spec.period);
    let fit = match rate {
        Some(_) => Some(fit_orbit_decay(spec, DECAY_PERIODS, h)?),
        None => None,
    };
    let per_unit_time = rate.map(|r| (-r).exp());
    Ok(DecayEstimate {
        rate,
        per_unit_time,
        fit,
    })
}
