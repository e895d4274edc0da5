//! Period sweeps with stable-interval extraction, `(a, b)` plane scans and
//! D-subdivision boundaries of the delay-free-period (autonomous) equations.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::family::{Family, FamilyKind, Model, Path, Prepared};
use crate::monodromy::{StabilityClass, StabilityVerdict};
use crate::error::{Error, Result};

pub const DEFAULT_REFINE_TOL: f64 = 1e-4;
/// Largest grid a single sweep accepts.
pub const MAX_SAMPLES: usize = 10_000_000;
/// Half-width of the excluded band around `cos(mu tau) = 0`.
pub const POLE_GUARD: f64 = 1e-6;
/// Largest normalized crossing residual of an emitted boundary point.
pub const CROSSING_TOL: f64 = 1e-10;

/// One evaluated parameter value. A failed evaluation keeps its message.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub omega: f64,
    #[serde(flatten)]
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Verdict(StabilityVerdict),
    Failed(String),
}

impl Outcome {
    fn from_result(r: Result<StabilityVerdict>) -> Self {
        match r {
            Ok(v) => Outcome::Verdict(v),
            Err(e) => Outcome::Failed(e.to_string()),
        }
    }

    pub fn verdict(&self) -> Option<&StabilityVerdict> {
        match self {
            Outcome::Verdict(v) => Some(v),
            Outcome::Failed(_) => None,
        }
    }

    pub fn class(&self) -> Option<StabilityClass> {
        self.verdict().map(|v| v.class)
    }

    pub fn is_stable(&self) -> bool {
        self.class() == Some(StabilityClass::ExponentiallyStable)
    }

    /// `rho`, NaN on failure.
    pub fn rho(&self) -> f64 {
        self.verdict().map_or(f64::NAN, |v| v.rho)
    }

    /// Class name, or `Failed`.
    pub fn label(&self) -> &'static str {
        self.class().map_or("Failed", StabilityClass::as_str)
    }
}

/// A refined endpoint. `inside` is stable; `outside` is the nearest probed
/// value that is not.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Endpoint {
    pub value: f64,
    pub inside: f64,
    pub outside: Option<f64>,
    /// The boundary touches `rho = 1` without a clean crossing (a marginal
    /// or failed probe), so it was not refined further.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lower: Endpoint,
    pub upper: Endpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub samples: Vec<Sample>,
    pub intervals: Vec<Interval>,
    pub step: f64,
    pub refine_tol: f64,
}

impl SweepResult {
    pub fn failed(&self) -> usize {
        self.samples.iter().filter(|s| s.outcome.verdict().is_none()).count()
    }
}

fn grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::InvalidRequest(format!("bad range [{lo}, {hi}]")));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidRequest(format!("step must be positive, got {step}")));
    }
    let span = (hi - lo) / step;
    // tolerate a range that is a whole number of steps up to rounding
    let n = (span * (1.0 - 1e-12)).ceil().max(0.0);
    if n >= MAX_SAMPLES as f64 {
        return Err(Error::InvalidRequest(format!("{n} samples exceed the limit of {MAX_SAMPLES}")));
    }
    let n = n as usize;
    Ok((0..=n).map(|k| if k == n { hi } else { lo + k as f64 * step }).collect())
}

/// Evaluates `rho(omega)` on `lo, lo + step, ..., hi` and extracts maximal
/// runs of exponentially stable samples. Each boundary between a stable and
/// an unstable sample is bisected down to `refine_tol`.
pub fn sweep_omega(model: &Model, lo: f64, hi: f64, step: f64, refine_tol: f64, path: Path) -> Result<SweepResult> {
    if !(refine_tol > 0.0) {
        return Err(Error::InvalidRequest(format!("refine tolerance must be positive, got {refine_tol}")));
    }
    let omegas = grid(lo, hi, step)?;
    let prepared = model.prepare(path, hi)?;
    let probe = |omega: f64| Outcome::from_result(prepared.evaluate(omega).map(|e| e.verdict));
    let samples: Vec<Sample> = omegas
        .par_iter()
        .map(|&omega| Sample {
            omega,
            outcome: probe(omega),
        })
        .collect();

    let mut runs = Vec::new();
    let mut i = 0;
    while i < samples.len() {
        if samples[i].outcome.is_stable() {
            let start = i;
            while i + 1 < samples.len() && samples[i + 1].outcome.is_stable() {
                i += 1;
            }
            runs.push((start, i));
        }
        i += 1;
    }

    let intervals = runs
        .par_iter()
        .map(|&(s, e)| {
            let lower = refine(&prepared, &samples, s, s.checked_sub(1), refine_tol);
            let upper = refine(&prepared, &samples, e, Some(e + 1).filter(|&j| j < samples.len()), refine_tol);
            Interval {
                lo: lower.value,
                hi: upper.value,
                lower,
                upper,
            }
        })
        .collect();

    Ok(SweepResult {
        samples,
        intervals,
        step,
        refine_tol,
    })
}

fn refine(prepared: &Prepared, samples: &[Sample], inside: usize, outside: Option<usize>, tol: f64) -> Endpoint {
    let mut inner = samples[inside].omega;
    let Some(out) = outside else {
        // the run reaches the end of the range
        return Endpoint {
            value: inner,
            inside: inner,
            outside: None,
            degenerate: false,
        };
    };
    let mut outer = samples[out].omega;
    let mut degenerate = samples[out].outcome.class() != Some(StabilityClass::Unstable);
    if !degenerate {
        while (outer - inner).abs() > tol {
            let mid = 0.5 * (inner + outer);
            match prepared.evaluate(mid).map(|e| e.verdict.class) {
                Ok(StabilityClass::ExponentiallyStable) => inner = mid,
                Ok(StabilityClass::Unstable) => outer = mid,
                _ => {
                    outer = mid;
                    degenerate = true;
                    break;
                }
            }
        }
    }
    Endpoint {
        value: inner,
        inside: inner,
        outside: Some(outer),
        degenerate,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlaneCell {
    pub a: f64,
    pub b: f64,
    #[serde(flatten)]
    pub outcome: Outcome,
}

/// Verdicts on an `a`-by-`b` grid, `a` varying slowest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlaneScan {
    pub kind: FamilyKind,
    pub tau: f64,
    pub omega: f64,
    pub cells: Vec<PlaneCell>,
}

fn linspace((lo, hi): (f64, f64), n: usize) -> Result<Vec<f64>> {
    if n == 0 || !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::InvalidRequest(format!("bad grid [{lo}, {hi}] with {n} points")));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let d = (hi - lo) / (n - 1) as f64;
    Ok((0..n).map(|k| if k == n - 1 { hi } else { lo + k as f64 * d }).collect())
}

/// Scans one family over a rectangle of `(a, b)` at fixed `tau` and period.
/// Cells outside the analytic range fall back to the integrator.
pub fn sweep_plane(
    kind: FamilyKind,
    a_range: (f64, f64),
    b_range: (f64, f64),
    dims: (usize, usize),
    tau: f64,
    omega: f64,
    path: Path,
) -> Result<PlaneScan> {
    let a_values = linspace(a_range, dims.0)?;
    let b_values = linspace(b_range, dims.1)?;
    if dims.0.saturating_mul(dims.1) > MAX_SAMPLES {
        return Err(Error::InvalidRequest("plane grid too large".into()));
    }
    Family::new(kind, 0.0, 0.0, tau)?;
    let cells = a_values
        .iter()
        .flat_map(|&a| b_values.iter().map(move |&b| (a, b)))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(a, b)| {
            let result = Family::new(kind, a, b, tau)
                .and_then(|f| Model::Family(f).evaluate(omega, path))
                .map(|e| e.verdict);
            PlaneCell {
                a,
                b,
                outcome: Outcome::from_result(result),
            }
        })
        .collect();
    Ok(PlaneScan { kind, tau, omega, cells })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveFamily {
    DampedAutonomous,
    UndampedAutonomous,
}

/// A point where the characteristic function has the root `i mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub mu: f64,
    pub a: f64,
    pub b: f64,
    /// `|char(i mu)| / (1 + mu^2 + |a mu| + |b|)`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DSubdivisionCurve {
    pub family: CurveFamily,
    pub tau: f64,
    pub points: Vec<CurvePoint>,
}

/// Normalized value of `s^2 + a s + b e^{-s tau}` at `s = i mu`.
pub fn damped_residual(mu: f64, a: f64, b: f64, tau: f64) -> f64 {
    let s = Complex64::new(0.0, mu);
    let value = s * s + a * s + b * (-s * tau).exp();
    value.norm() / (1.0 + mu * mu + (a * mu).abs() + b.abs())
}

/// Normalized value of `s^2 + a + b e^{-s tau}` at `s = i mu`.
pub fn undamped_residual(mu: f64, a: f64, b: f64, tau: f64) -> f64 {
    let s = Complex64::new(0.0, mu);
    let value = s * s + a + b * (-s * tau).exp();
    value.norm() / (1.0 + mu * mu + a.abs() + b.abs())
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidRequest(format!("tau must be positive, got {tau}")))
    }
}

/// Crossing curve `a = mu tan(mu tau)`, `b = mu^2 / cos(mu tau)` for `n`
/// values of `mu` in `mu_range`, followed by `n` points of the line `b = 0`
/// over `a_line`. Values of `mu` near a pole of `tan` are skipped.
pub fn d_subdivision_damped(tau: f64, mu_range: (f64, f64), n: usize, a_line: (f64, f64)) -> Result<DSubdivisionCurve> {
    check_tau(tau)?;
    let mut points = Vec::new();
    for mu in linspace(mu_range, n)? {
        let c = (mu * tau).cos();
        let k = (mu * tau / std::f64::consts::PI - 0.5).round();
        let pole = (k + 0.5) * std::f64::consts::PI / tau;
        if (mu - pole).abs() <= POLE_GUARD || c == 0.0 {
            continue;
        }
        let a = mu * (mu * tau).tan();
        let b = mu * mu / c;
        points.push(CurvePoint {
            mu,
            a,
            b,
            residual: damped_residual(mu, a, b, tau),
        });
    }
    for a in linspace(a_line, n)? {
        points.push(CurvePoint {
            mu: 0.0,
            a,
            b: 0.0,
            residual: damped_residual(0.0, a, 0.0, tau),
        });
    }
    Ok(DSubdivisionCurve {
        family: CurveFamily::DampedAutonomous,
        tau,
        points,
    })
}

/// Boundaries of the undamped autonomous equation over `a_range`: the line
/// `b = 0` for `a >= 0` (root `i sqrt(a)`) and, for `k = 0..=k_max`, the
/// lines `b = (-1)^k ((k pi / tau)^2 - a)` with root `i k pi / tau`.
pub fn d_subdivision_undamped(tau: f64, a_range: (f64, f64), n: usize, k_max: usize) -> Result<DSubdivisionCurve> {
    check_tau(tau)?;
    let a_values = linspace(a_range, n)?;
    let mut points = Vec::new();
    for &a in a_values.iter().filter(|&&a| a >= 0.0) {
        let mu = a.sqrt();
        points.push(CurvePoint {
            mu,
            a,
            b: 0.0,
            residual: undamped_residual(mu, a, 0.0, tau),
        });
    }
    for k in 0..=k_max {
        let mu = k as f64 * std::f64::consts::PI / tau;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        for &a in &a_values {
            let b = sign * (mu * mu - a);
            points.push(CurvePoint {
                mu,
                a,
                b,
                residual: undamped_residual(mu, a, b, tau),
            });
        }
    }
    Ok(DSubdivisionCurve {
        family: CurveFamily::UndampedAutonomous,
        tau,
        points,
    })
}
