//! Method-of-steps integrator for any valid [`EquationSpec`].
//!
//! Classical fourth-order Runge–Kutta on a grid aligned with the spec's
//! breakpoints. Delayed values are read from the already committed part of
//! the trajectory through cubic Hermite interpolation; a delayed argument
//! that would reach into the step being taken forces the step to be halved.
//! Zero delays are undelayed terms and use the stage state directly.

use std::io::{self, Write};

use crate::eqmodel::{breakpoints, validate_spec, EquationSpec};
use crate::error::{Error, Result};
use crate::report::fmt_f64;

/// Steps per period when no step size is given.
pub const DEFAULT_STEPS_PER_PERIOD: usize = 4096;
/// Oracle step as a fraction of the period.
pub const ORACLE_STEP_FRACTION: f64 = 1e-5;
pub const ORACLE_MAX_STEPS: usize = 10_000_000;
/// Maximum number of halvings of a single step.
pub const MAX_REFINEMENTS: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    /// `period / 4096`.
    Default,
    Fixed(f64),
    /// `1e-5 * period`, at most ten million steps.
    Oracle,
}

impl StepSize {
    pub fn resolve(self, period: f64) -> f64 {
        match self {
            StepSize::Default => period / DEFAULT_STEPS_PER_PERIOD as f64,
            StepSize::Fixed(h) => h,
            StepSize::Oracle => {
                let steps = ((1.0 / ORACLE_STEP_FRACTION).ceil() as usize).min(ORACLE_MAX_STEPS);
                period / steps as f64
            }
        }
    }
}

/// Nodes of one solution over a period with Hermite dense output.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    t: Vec<f64>,
    x: Vec<f64>,
    v: Vec<f64>,
    /// `x''` at the left end of each interval (right limit).
    acc_start: Vec<f64>,
    /// `x''` at the right end of each interval (left limit).
    acc_end: Vec<f64>,
}

impl Trajectory {
    fn start(x0: f64, v0: f64) -> Self {
        Self {
            t: vec![0.0],
            x: vec![x0],
            v: vec![v0],
            ..Default::default()
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn positions(&self) -> &[f64] {
        &self.x
    }

    pub fn velocities(&self) -> &[f64] {
        &self.v
    }

    /// Last committed time.
    pub fn front(&self) -> f64 {
        self.t[self.t.len() - 1]
    }

    pub fn final_state(&self) -> (f64, f64) {
        let n = self.t.len() - 1;
        (self.x[n], self.v[n])
    }

    fn interval(&self, t: f64) -> usize {
        let i = self.t.partition_point(|&ti| ti <= t);
        i.saturating_sub(1).min(self.t.len().saturating_sub(2))
    }

    fn hermite_x(&self, i: usize, t: f64) -> f64 {
        let (t0, t1) = (self.t[i], self.t[i + 1]);
        hermite(t0, t1, self.x[i], self.x[i + 1], self.v[i], self.v[i + 1], t)
    }

    /// `(x(t), x'(t))` anywhere in `[0, front]`.
    pub fn eval(&self, t: f64) -> Result<(f64, f64)> {
        let end = self.front();
        if !(t >= 0.0 && t <= end) {
            return Err(Error::OutOfRange { t, end });
        }
        if self.t.len() == 1 {
            return Ok((self.x[0], self.v[0]));
        }
        let i = self.interval(t);
        let (t0, t1) = (self.t[i], self.t[i + 1]);
        let x = self.hermite_x(i, t);
        let v = hermite(t0, t1, self.v[i], self.v[i + 1], self.acc_start[i], self.acc_end[i], t);
        Ok((x, v))
    }

    /// CSV with header `t,x,x_prime`, one row per node.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,x,x_prime")?;
        for i in 0..self.t.len() {
            writeln!(out, "{},{},{}", fmt_f64(self.t[i]), fmt_f64(self.x[i]), fmt_f64(self.v[i]))?;
        }
        Ok(())
    }
}

fn hermite(t0: f64, t1: f64, y0: f64, y1: f64, d0: f64, d1: f64, t: f64) -> f64 {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

/// `x(t_delayed)` under zero prehistory: 0 before the start, interpolated
/// from committed nodes otherwise.
pub fn delayed_value(traj: &Trajectory, t_delayed: f64) -> Result<f64> {
    if t_delayed < 0.0 {
        return Ok(0.0);
    }
    let front = traj.front();
    if t_delayed > front {
        return Err(Error::Ordering { t_delayed, front });
    }
    if traj.t.len() == 1 {
        return Ok(traj.x[0]);
    }
    let i = traj.interval(t_delayed);
    if traj.t[i] == t_delayed {
        return Ok(traj.x[i]);
    }
    if traj.t[i + 1] == t_delayed {
        return Ok(traj.x[i + 1]);
    }
    Ok(traj.hermite_x(i, t_delayed))
}

struct Stepper<'a> {
    spec: &'a EquationSpec,
    traj: Trajectory,
    delayed: Vec<f64>,
}

impl Stepper<'_> {
    /// `x''` at stage time `s`, or `None` if a delayed argument is not yet
    /// committed.
    fn accel(&mut self, s: f64, left: bool, x: f64, v: f64) -> Result<Option<f64>> {
        let front = self.traj.front();
        let slack = 1e-12 * front.abs().max(1.0);
        for (slot, term) in self.delayed.iter_mut().zip(&self.spec.terms) {
            let tau = if left { term.delay.eval_left(s) } else { term.delay.eval(s) };
            if tau == 0.0 {
                *slot = x;
                continue;
            }
            let mut d = s - tau;
            if d < 0.0 && d >= -slack * s.abs().max(1.0) {
                d = 0.0;
            }
            if d > front {
                if d - front <= slack {
                    d = front;
                } else {
                    return Ok(None);
                }
            }
            *slot = delayed_value(&self.traj, d)?;
        }
        Ok(Some(self.spec.accel(s, left, v, self.delayed.iter().copied())))
    }

    fn step(&mut self, t0: f64, t1: f64, depth: u32) -> Result<()> {
        let h = t1 - t0;
        let (x0, v0) = self.traj.final_state();
        let mid = t0 + 0.5 * h;
        let attempt = (|| -> Result<Option<[f64; 8]>> {
            let Some(a1) = self.accel(t0, false, x0, v0)? else { return Ok(None) };
            let (x2, v2) = (x0 + 0.5 * h * v0, v0 + 0.5 * h * a1);
            let Some(a2) = self.accel(mid, false, x2, v2)? else { return Ok(None) };
            let (x3, v3) = (x0 + 0.5 * h * v2, v0 + 0.5 * h * a2);
            let Some(a3) = self.accel(mid, false, x3, v3)? else { return Ok(None) };
            let (x4, v4) = (x0 + h * v3, v0 + h * a3);
            let Some(a4) = self.accel(t1, true, x4, v4)? else { return Ok(None) };
            Ok(Some([a1, v2, a2, v3, a3, v4, a4, 0.0]))
        })()?;

        let Some([a1, v2, a2, v3, a3, v4, a4, _]) = attempt else {
            if depth >= MAX_REFINEMENTS {
                return Err(Error::Overlap { t: t0, refinements: depth });
            }
            self.step(t0, mid, depth + 1)?;
            return self.step(mid, t1, depth + 1);
        };

        let x1 = x0 + h / 6.0 * (v0 + 2.0 * v2 + 2.0 * v3 + v4);
        let v1 = v0 + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        if !(x1.is_finite() && v1.is_finite()) {
            return Err(Error::BlowUp { period: 0 });
        }
        self.traj.t.push(t1);
        self.traj.x.push(x1);
        self.traj.v.push(v1);
        self.traj.acc_start.push(a1);
        // with t1 committed every delayed argument at t1 is available
        let a_end = self.accel(t1, true, x1, v1)?.unwrap_or(a4);
        self.traj.acc_end.push(a_end);
        Ok(())
    }
}

/// Integrates one period from `(x(0), x'(0)) = init` with zero prehistory.
pub fn integrate(spec: &EquationSpec, init: (f64, f64), h: StepSize) -> Result<Trajectory> {
    let report = validate_spec(spec);
    if !report.is_ok() {
        return Err(Error::Invalid(report));
    }
    let h = h.resolve(spec.period);
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidRequest(format!("step size must be positive, got {h}")));
    }
    let bps = breakpoints(spec);
    let mut stepper = Stepper {
        spec,
        traj: Trajectory::start(init.0, init.1),
        delayed: vec![0.0; spec.terms.len()],
    };
    let total: usize = bps.windows(2).map(|w| ((w[1] - w[0]) / h).ceil().max(1.0) as usize).sum();
    stepper.traj.t.reserve(total);
    stepper.traj.x.reserve(total);
    stepper.traj.v.reserve(total);
    for w in bps.windows(2) {
        let (start, end) = (w[0], w[1]);
        let n = ((end - start) / h).ceil().max(1.0) as usize;
        let hs = (end - start) / n as f64;
        for k in 0..n {
            let t0 = stepper.traj.front();
            let t1 = if k + 1 == n { end } else { start + (k + 1) as f64 * hs };
            stepper.step(t0, t1, 0)?;
        }
    }
    Ok(stepper.traj)
}

/// Trajectories of `x1` (from `(1, 0)`) and `x2` (from `(0, 1)`).
pub fn integrate_fundamental(spec: &EquationSpec, h: StepSize) -> Result<(Trajectory, Trajectory)> {
    Ok((integrate(spec, (1.0, 0.0), h)?, integrate(spec, (0.0, 1.0), h)?))
}

/// States `(x(k period), x'(k period))` for `k = 0..=periods`.
///
/// Each period restarts from the previous end state: by periodicity and
/// retardation the state at a period boundary determines the next period.
pub fn simulate_periods(
    spec: &EquationSpec,
    init: (f64, f64),
    periods: usize,
    h: StepSize,
) -> Result<Vec<(f64, f64)>> {
    simulate_trajectories(spec, init, periods, h).map(|trajs| {
        std::iter::once(init)
            .chain(trajs.iter().map(Trajectory::final_state))
            .collect()
    })
}

/// Per-period trajectories, each on local time `[0, period]`.
pub fn simulate_trajectories(
    spec: &EquationSpec,
    init: (f64, f64),
    periods: usize,
    h: StepSize,
) -> Result<Vec<Trajectory>> {
    let mut out = Vec::with_capacity(periods);
    let mut state = init;
    for k in 0..periods {
        let traj = integrate(spec, state, h).map_err(|e| match e {
            Error::BlowUp { .. } => Error::BlowUp { period: k + 1 },
            other => other,
        })?;
        state = traj.final_state();
        if !(state.0.is_finite() && state.1.is_finite()) {
            return Err(Error::BlowUp { period: k + 1 });
        }
        out.push(traj);
    }
    Ok(out)
}
