//! Equation instances: periodic coefficient and delay profiles, and the
//! structural checks that make the one-period map finite-dimensional.
//!
//! An [`EquationSpec`] describes
//!
//! ```text
//! x''(t) + a(t) x'(t) + sum_i b_i(t) x(t - tau_i(t)) = 0,   x(s) = 0 for s < 0
//! ```
//!
//! with every profile periodic in `t` with the same period. Profiles are
//! right-continuous: at a segment boundary the right-hand segment wins.

pub mod config;
pub use config::{CoefficientConfig, EquationConfig, TermConfig};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::poly;

/// Number of uniform grid points used (in addition to breakpoints) when
/// checking that no delayed argument reaches before the period start.
pub const ASSUMPTION_GRID: usize = 10_000;

/// Slack allowed in `t - tau(t) >= 0` to absorb rounding of interpolated knots.
const RETARDATION_SLACK: f64 = 1e-12;

/// Maximum polynomial degree of a coefficient segment.
pub const MAX_SEGMENT_DEGREE: usize = 3;

/// Reduces `t` into `[0, period)`.
#[inline]
pub fn wrap(t: f64, period: f64) -> f64 {
    let r = t.rem_euclid(period);
    // rem_euclid can round up to exactly `period`
    if r >= period {
        0.0
    } else {
        r
    }
}

/// Reduces `t` into `(0, period]` for left limits; `t <= 0` maps to 0.
#[inline]
fn wrap_left(t: f64, period: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let r = wrap(t, period);
    if r == 0.0 {
        period
    } else {
        r
    }
}

/// One piece of a coefficient profile: a polynomial in absolute time on
/// `[start, end)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    /// Ascending coefficients, at most cubic.
    pub poly: Vec<f64>,
}

/// Piecewise-polynomial periodic coefficient such as `a(t)` or `b_i(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientProfile {
    segments: Vec<Segment>,
    period: f64,
}

impl CoefficientProfile {
    /// Segments are stored as given; [`validate_spec`] reports tiling defects.
    pub fn new(segments: Vec<Segment>, period: f64) -> Self {
        Self { segments, period }
    }

    pub fn constant(value: f64, period: f64) -> Self {
        Self::new(
            vec![Segment {
                start: 0.0,
                end: period,
                poly: vec![value],
            }],
            period,
        )
    }

    /// Act-and-wait gain: zero on `[0, wait)`, `gain` on `[wait, period)`.
    pub fn act_and_wait(wait: f64, gain: f64, period: f64) -> Self {
        let mut segments = Vec::with_capacity(2);
        if wait > 0.0 {
            segments.push(Segment {
                start: 0.0,
                end: wait.min(period),
                poly: vec![0.0],
            });
        }
        if wait < period {
            segments.push(Segment {
                start: wait.max(0.0),
                end: period,
                poly: vec![gain],
            });
        }
        Self::new(segments, period)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// The value when the profile is one constant over the whole period.
    pub fn as_constant(&self) -> Option<f64> {
        let first = self.segments.first()?;
        let c0 = *first.poly.first().unwrap_or(&0.0);
        let all_const = self
            .segments
            .iter()
            .all(|s| poly::degree(&s.poly).unwrap_or(0) == 0 && *s.poly.first().unwrap_or(&0.0) == c0);
        all_const.then_some(c0)
    }

    fn segment_at(&self, tm: f64) -> Option<&Segment> {
        let idx = self.segments.partition_point(|s| s.start <= tm);
        idx.checked_sub(1).map(|i| &self.segments[i])
    }

    fn segment_left_of(&self, tm: f64) -> Option<&Segment> {
        let idx = self.segments.partition_point(|s| s.start < tm);
        match idx.checked_sub(1) {
            Some(i) => Some(&self.segments[i]),
            None => self.segments.first(),
        }
    }

    /// Right-continuous periodic evaluation.
    pub fn eval(&self, t: f64) -> f64 {
        let tm = wrap(t.max(0.0), self.period);
        self.segment_at(tm).map_or(0.0, |s| poly::eval(&s.poly, tm))
    }

    /// Left limit at `t`; equals [`eval`](Self::eval) away from segment boundaries.
    pub fn eval_left(&self, t: f64) -> f64 {
        let tm = wrap_left(t, self.period);
        self.segment_left_of(tm).map_or(0.0, |s| poly::eval(&s.poly, tm))
    }

    fn knots(&self) -> impl Iterator<Item = f64> + '_ {
        self.segments.iter().flat_map(|s| [s.start, s.end])
    }
}

/// Shape of a periodic delay profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DelayKind {
    Constant { tau: f64 },
    /// `tau(t) = t` on `[0, tau)`, then `tau` up to the period end.
    SaturatingRamp { tau: f64 },
    /// Linear interpolation through `(t, value)` knots covering `[0, period]`.
    /// Repeated knot times encode jumps (right-continuous).
    PiecewiseLinear { knots: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayProfile {
    kind: DelayKind,
    period: f64,
}

impl DelayProfile {
    pub fn new(kind: DelayKind, period: f64) -> Self {
        Self { kind, period }
    }

    pub fn constant(tau: f64, period: f64) -> Self {
        Self::new(DelayKind::Constant { tau }, period)
    }

    pub fn saturating_ramp(tau: f64, period: f64) -> Self {
        Self::new(DelayKind::SaturatingRamp { tau }, period)
    }

    pub fn kind(&self) -> &DelayKind {
        &self.kind
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Delay value at `t >= 0` with periodic wraparound (right-continuous).
    pub fn eval(&self, t: f64) -> f64 {
        self.eval_reduced(wrap(t.max(0.0), self.period), false)
    }

    /// Left limit at `t`.
    pub fn eval_left(&self, t: f64) -> f64 {
        self.eval_reduced(wrap_left(t, self.period), true)
    }

    fn eval_reduced(&self, tm: f64, left: bool) -> f64 {
        match &self.kind {
            DelayKind::Constant { tau } => *tau,
            DelayKind::SaturatingRamp { tau } => {
                if tm < *tau {
                    tm
                } else {
                    *tau
                }
            }
            DelayKind::PiecewiseLinear { knots } => interpolate_knots(knots, tm, left),
        }
    }

    fn knots(&self) -> Vec<f64> {
        match &self.kind {
            DelayKind::Constant { .. } => vec![],
            DelayKind::SaturatingRamp { tau } => vec![*tau],
            DelayKind::PiecewiseLinear { knots } => knots.iter().map(|k| k.0).collect(),
        }
    }
}

fn interpolate_knots(knots: &[(f64, f64)], tm: f64, left: bool) -> f64 {
    let Some(first) = knots.first() else {
        return 0.0;
    };
    if tm <= first.0 && !left {
        return first.1;
    }
    // Right-continuous: the last knot with time <= tm starts the active piece;
    // left limits use the last knot with time < tm.
    let idx = if left {
        knots.partition_point(|k| k.0 < tm)
    } else {
        knots.partition_point(|k| k.0 <= tm)
    };
    if idx == 0 {
        return first.1;
    }
    if idx >= knots.len() {
        return knots[knots.len() - 1].1;
    }
    let (t0, v0) = knots[idx - 1];
    let (t1, v1) = knots[idx];
    if t1 <= t0 {
        return if left { v0 } else { v1 };
    }
    let s = (tm - t0) / (t1 - t0);
    v0 + s * (v1 - v0)
}

/// One delayed term `b_i(t) x(t - tau_i(t))`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayTerm {
    pub coefficient: CoefficientProfile,
    pub delay: DelayProfile,
}

/// A periodic second-order delay equation with zero prehistory.
#[derive(Debug, Clone, PartialEq)]
pub struct EquationSpec {
    pub period: f64,
    pub damping: CoefficientProfile,
    pub terms: Vec<DelayTerm>,
}

impl EquationSpec {
    /// `x'' + a x' + b x(t - tau(t)) = 0` with the saturating-ramp delay.
    pub fn damped_ramp(a: f64, b: f64, tau: f64, period: f64) -> Self {
        Self {
            period,
            damping: CoefficientProfile::constant(a, period),
            terms: vec![DelayTerm {
                coefficient: CoefficientProfile::constant(b, period),
                delay: DelayProfile::saturating_ramp(tau, period),
            }],
        }
    }

    /// `x'' + a x + b x(t - tau(t)) = 0` with the saturating-ramp delay; the
    /// undelayed `a x` term is a zero-delay term.
    pub fn undamped_ramp(a: f64, b: f64, tau: f64, period: f64) -> Self {
        Self {
            period,
            damping: CoefficientProfile::constant(0.0, period),
            terms: vec![
                DelayTerm {
                    coefficient: CoefficientProfile::constant(a, period),
                    delay: DelayProfile::constant(0.0, period),
                },
                DelayTerm {
                    coefficient: CoefficientProfile::constant(b, period),
                    delay: DelayProfile::saturating_ramp(tau, period),
                },
            ],
        }
    }

    /// Act-and-wait control `x'' + a x' + B(t) x(t - tau) = 0` where the gain is
    /// idle on `[0, tau)`. The delay is written as a saturating ramp, which
    /// coincides with the constant delay wherever the gain is active.
    pub fn act_and_wait(a: f64, b: f64, tau: f64, period: f64) -> Self {
        Self {
            period,
            damping: CoefficientProfile::constant(a, period),
            terms: vec![DelayTerm {
                coefficient: CoefficientProfile::act_and_wait(tau, b, period),
                delay: DelayProfile::saturating_ramp(tau, period),
            }],
        }
    }

    /// Second derivative implied by the equation, given the current velocity
    /// and the delayed values of each term.
    pub(crate) fn accel(&self, t: f64, left: bool, v: f64, delayed: impl Iterator<Item = f64>) -> f64 {
        let a = if left {
            self.damping.eval_left(t)
        } else {
            self.damping.eval(t)
        };
        let forcing: f64 = self
            .terms
            .iter()
            .zip(delayed)
            .map(|(term, xd)| {
                let b = if left {
                    term.coefficient.eval_left(t)
                } else {
                    term.coefficient.eval(t)
                };
                b * xd
            })
            .sum();
        -a * v - forcing
    }
}

/// Which structural requirement a [`Violation`] breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Requirement {
    /// Positive finite period shared by every profile.
    Periodicity,
    /// Segments tile `[0, period)`; polynomials at most cubic; knots ordered.
    ProfileShape,
    /// `tau_i(t) >= 0`.
    NonnegativeDelay,
    /// `t - tau_i(t) >= 0` on `[0, period]`.
    Retardation,
    /// Ramp delays need `period >= tau`.
    RampFitsPeriod,
}

impl fmt::Display for Requirement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Requirement::Periodicity => "periodicity",
            Requirement::ProfileShape => "profile shape",
            Requirement::NonnegativeDelay => "nonnegative delay",
            Requirement::Retardation => "retardation t - tau(t) >= 0",
            Requirement::RampFitsPeriod => "ramp fits period",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub requirement: Requirement,
    /// Witness time, when the violation is pointwise.
    pub t: Option<f64>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.t {
            Some(t) => write!(f, "{} violated at t = {}: {}", self.requirement, t, self.detail),
            None => write!(f, "{} violated: {}", self.requirement, self.detail),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, requirement: Requirement, t: Option<f64>, detail: impl Into<String>) {
        self.violations.push(Violation {
            requirement,
            t,
            detail: detail.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "  - {v}")?;
        }
        Ok(())
    }
}

fn same_period(p: f64, q: f64) -> bool {
    (p - q).abs() <= 1e-12 * p.abs().max(q.abs()).max(1.0)
}

fn check_coefficient(name: &str, prof: &CoefficientProfile, period: f64, report: &mut ValidationReport) {
    if !same_period(prof.period, period) {
        report.push(
            Requirement::Periodicity,
            None,
            format!("{name} has period {} but the equation has {period}", prof.period),
        );
    }
    let segs = &prof.segments;
    if segs.is_empty() {
        report.push(Requirement::ProfileShape, None, format!("{name} has no segments"));
        return;
    }
    if segs[0].start != 0.0 {
        report.push(
            Requirement::ProfileShape,
            Some(0.0),
            format!("{name} starts at {} instead of 0", segs[0].start),
        );
    }
    for (i, s) in segs.iter().enumerate() {
        if !(s.end > s.start) {
            report.push(
                Requirement::ProfileShape,
                Some(s.start),
                format!("{name} segment {i} is empty or reversed"),
            );
        }
        if s.poly.len() > MAX_SEGMENT_DEGREE + 1 && poly::degree(&s.poly).unwrap_or(0) > MAX_SEGMENT_DEGREE {
            report.push(
                Requirement::ProfileShape,
                Some(s.start),
                format!("{name} segment {i} has degree above {MAX_SEGMENT_DEGREE}"),
            );
        }
        if s.poly.iter().any(|c| !c.is_finite()) {
            report.push(
                Requirement::ProfileShape,
                Some(s.start),
                format!("{name} segment {i} has a non-finite coefficient"),
            );
        }
        if let Some(next) = segs.get(i + 1) {
            if next.start != s.end {
                report.push(
                    Requirement::ProfileShape,
                    Some(s.end),
                    format!("{name} has a gap or overlap between segments {i} and {}", i + 1),
                );
            }
        }
    }
    let last_end = segs[segs.len() - 1].end;
    if !same_period(last_end, period) {
        report.push(
            Requirement::ProfileShape,
            Some(last_end),
            format!("{name} ends at {last_end} instead of the period {period}"),
        );
    }
}

fn check_delay(name: &str, prof: &DelayProfile, period: f64, report: &mut ValidationReport) {
    if !same_period(prof.period, period) {
        report.push(
            Requirement::Periodicity,
            None,
            format!("{name} has period {} but the equation has {period}", prof.period),
        );
    }
    match &prof.kind {
        DelayKind::Constant { tau } | DelayKind::SaturatingRamp { tau } => {
            if !tau.is_finite() || *tau < 0.0 {
                report.push(Requirement::NonnegativeDelay, None, format!("{name} has tau = {tau}"));
            }
            if let DelayKind::SaturatingRamp { tau } = &prof.kind {
                if period < *tau {
                    report.push(
                        Requirement::RampFitsPeriod,
                        None,
                        format!("{name}: period {period} < tau {tau} for ramp profile"),
                    );
                }
            }
        }
        DelayKind::PiecewiseLinear { knots } => {
            if knots.is_empty() {
                report.push(Requirement::ProfileShape, None, format!("{name} has no knots"));
                return;
            }
            if knots[0].0 != 0.0 {
                report.push(Requirement::ProfileShape, Some(knots[0].0), format!("{name} must start at t = 0"));
            }
            let last = knots[knots.len() - 1].0;
            if !same_period(last, period) {
                report.push(Requirement::ProfileShape, Some(last), format!("{name} must end at the period"));
            }
            if knots.windows(2).any(|w| w[1].0 < w[0].0) {
                report.push(Requirement::ProfileShape, None, format!("{name} knots are not sorted"));
            }
            if let Some(k) = knots.iter().find(|k| !k.0.is_finite() || !k.1.is_finite()) {
                report.push(Requirement::ProfileShape, Some(k.0), format!("{name} has a non-finite knot"));
            }
        }
    }
}

/// Checks every structural assumption. Violations are data: an empty report
/// means the spec can be propagated.
pub fn validate_spec(spec: &EquationSpec) -> ValidationReport {
    let mut report = ValidationReport::default();
    let period = spec.period;
    if !(period.is_finite() && period > 0.0) {
        report.push(Requirement::Periodicity, None, format!("period must be positive, got {period}"));
        return report;
    }
    check_coefficient("damping", &spec.damping, period, &mut report);
    for (i, term) in spec.terms.iter().enumerate() {
        check_coefficient(&format!("terms[{i}].coefficient"), &term.coefficient, period, &mut report);
        check_delay(&format!("terms[{i}].delay"), &term.delay, period, &mut report);
    }
    if !report.is_ok() {
        return report;
    }

    let mut probes = breakpoints(spec);
    probes.extend((0..=ASSUMPTION_GRID).map(|k| period * k as f64 / ASSUMPTION_GRID as f64));
    probes.sort_by(f64::total_cmp);
    for (i, term) in spec.terms.iter().enumerate() {
        let mut negative = None;
        let mut advanced = None;
        for &t in &probes {
            // Both one-sided values matter where the profile jumps.
            let mut values = [term.delay.eval(t), term.delay.eval(t)];
            if t > 0.0 {
                values[1] = term.delay.eval_left(t);
            }
            for tau in values {
                if negative.is_none() && tau < 0.0 {
                    negative = Some((t, tau));
                }
                if advanced.is_none() && t - tau < -RETARDATION_SLACK * t.max(1.0) {
                    advanced = Some((t, tau));
                }
            }
        }
        if let Some((t, tau)) = negative {
            report.push(Requirement::NonnegativeDelay, Some(t), format!("terms[{i}].delay = {tau}"));
        }
        if let Some((t, tau)) = advanced {
            report.push(
                Requirement::Retardation,
                Some(t),
                format!("terms[{i}]: t - tau(t) = {} < 0", t - tau),
            );
        }
    }
    report
}

/// Sorted, strictly increasing times in `[0, period]` where some profile may
/// change smoothness: every segment and delay knot, ramp ends, 0 and the period.
pub fn breakpoints(spec: &EquationSpec) -> Vec<f64> {
    let period = spec.period;
    let mut pts = vec![0.0, period];
    pts.extend(spec.damping.knots());
    for term in &spec.terms {
        pts.extend(term.coefficient.knots());
        pts.extend(term.delay.knots());
    }
    let mut pts: Vec<f64> = pts
        .into_iter()
        .filter(|t| t.is_finite() && *t >= 0.0 && *t <= period)
        .collect();
    pts.sort_by(f64::total_cmp);
    let tol = 1e-12 * period.max(1.0);
    let mut out: Vec<f64> = Vec::with_capacity(pts.len());
    for t in pts {
        match out.last() {
            Some(&last) if t - last <= tol => {}
            _ => out.push(t),
        }
    }
    // the last point is the period itself, even if a knot landed within tol
    if let Some(last) = out.last_mut() {
        *last = period;
    }
    out
}
