//! Closed-form propagation of `x'' + a x + b x(t - tau(t)) = 0` (`a > 0`) with
//! the saturating-ramp delay.
//!
//! With `w = sqrt(a)` and local time `s` in `[0, tau]`, piece `n` is
//!
//! ```text
//! X_n(s) = P_n(s) cos(w s) + Q_n(s) sin(w s) + C_n,   deg P_n, deg Q_n <= n
//! ```
//!
//! where `C_n = (-b/a)^n C_0`. The polynomial parts come from solving
//! `R'' + 4a R = -b P_{n-1}' + 2 w b Q_{n-1}` for `R = P_n'` and recovering
//! `S = Q_n'` from `S = (-b P_{n-1} - R') / (2 w)`; the free constants match
//! value and slope with the previous piece.

use crate::chain::{
    guard_rk4, pieces_for, state_scale, Degradation, InitialCondition, GUARD_SUBSTEPS, GUARD_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::poly;

#[derive(Debug, Clone, PartialEq)]
pub struct UndampedSegment {
    pub n: usize,
    /// Coefficients of `P_n`, length `n + 1`.
    pub alpha: Vec<f64>,
    /// Coefficients of `Q_n`, length `n + 1`.
    pub beta: Vec<f64>,
    /// Constant part `C_n`.
    pub cn: f64,
    /// `C_0`, the constant of the first piece.
    pub c0: f64,
    pub a: f64,
    pub b: f64,
    pub tau: f64,
    /// `sqrt(a)`, computed once per chain.
    pub w: f64,
}

/// Intermediate arrays of one advance step, exposed for inspection.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Scratch {
    pub gamma: Vec<f64>,
    pub r: Vec<f64>,
    pub s: Vec<f64>,
}

impl UndampedSegment {
    /// First piece, `X_0(s) = A cos(w s) + B sin(w s) + C`.
    pub fn init(a: f64, b: f64, tau: f64, ic: InitialCondition) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::Unsupported(
                "undamped recurrence needs a > 0; use the numeric integrator".into(),
            ));
        }
        let w = a.sqrt();
        let (big_a, big_b, big_c) = match ic {
            InitialCondition::UnitVelocity => (0.0, 1.0 / w, 0.0),
            InitialCondition::UnitDisplacement => (b / a + 1.0, 0.0, -b / a),
        };
        Ok(Self {
            n: 0,
            alpha: vec![big_a],
            beta: vec![big_b],
            cn: big_c,
            c0: big_c,
            a,
            b,
            tau,
            w,
        })
    }

    pub fn state(&self, s: f64) -> (f64, f64) {
        let (sin, cos) = (self.w * s).sin_cos();
        let p = poly::eval(&self.alpha, s);
        let q = poly::eval(&self.beta, s);
        let dp = poly::eval_d1(&self.alpha, s);
        let dq = poly::eval_d1(&self.beta, s);
        let x = p * cos + q * sin + self.cn;
        let dx = (dp + q * self.w) * cos + (dq - p * self.w) * sin;
        (x, dx)
    }

    pub fn second_derivative(&self, s: f64) -> f64 {
        let (sin, cos) = (self.w * s).sin_cos();
        let w = self.w;
        let p = poly::eval(&self.alpha, s);
        let q = poly::eval(&self.beta, s);
        let dp = poly::eval_d1(&self.alpha, s);
        let dq = poly::eval_d1(&self.beta, s);
        let ddp = poly::eval_d2(&self.alpha, s);
        let ddq = poly::eval_d2(&self.beta, s);
        (ddp + 2.0 * dq * w - self.a * p) * cos + (ddq - 2.0 * dp * w - self.a * q) * sin
    }

    pub fn end_state(&self) -> (f64, f64) {
        self.state(self.tau)
    }

    pub fn advance(&self) -> Result<Self> {
        self.advance_with_scratch().map(|(seg, _)| seg)
    }

    /// Next piece, also returning the `gamma`, `r`, `s` arrays it solved.
    pub fn advance_with_scratch(&self) -> Result<(Self, Scratch)> {
        let n = self.n + 1;
        let (a, b, w) = (self.a, self.b, self.w);
        let pa = &self.alpha;
        let pb = &self.beta;

        let cn = (-b / a).powi(n as i32) * self.c0;

        // right-hand side -b P_{n-1}' + 2 w b Q_{n-1}
        let mut gamma = vec![0.0; n];
        for i in 0..n - 1 {
            gamma[i] = -b * pa[i + 1] * (i + 1) as f64 + 2.0 * w * b * pb[i];
        }
        gamma[n - 1] = 2.0 * w * b * pb[n - 1];

        // polynomial solution of R'' + 4a R = gamma, from the top down
        let four_a = 4.0 * a;
        let mut r = vec![0.0; n];
        r[n - 1] = gamma[n - 1] / four_a;
        if n >= 2 {
            r[n - 2] = gamma[n - 2] / four_a;
        }
        for k in (0..n.saturating_sub(2)).rev() {
            r[k] = (gamma[k] - r[k + 2] * ((k + 2) * (k + 1)) as f64) / four_a;
        }

        let two_w = 2.0 * w;
        let mut s = vec![0.0; n];
        for i in 0..n - 1 {
            s[i] = (-b * pa[i] - (i + 1) as f64 * r[i + 1]) / two_w;
        }
        s[n - 1] = -b * pa[n - 1] / two_w;

        let mut alpha = vec![0.0; n + 1];
        let mut beta = vec![0.0; n + 1];
        for i in 1..=n {
            alpha[i] = r[i - 1] / i as f64;
            beta[i] = s[i - 1] / i as f64;
        }

        let (x_end, dx_end) = self.end_state();
        alpha[0] = x_end - cn;
        beta[0] = (dx_end - alpha[1]) / w;

        if !cn.is_finite() || alpha.iter().chain(beta.iter()).any(|c| !c.is_finite()) {
            return Err(Error::NonFinite { segment: n });
        }
        let seg = Self {
            n,
            alpha,
            beta,
            cn,
            c0: self.c0,
            a,
            b,
            tau: self.tau,
            w,
        };
        Ok((seg, Scratch { gamma, r, s }))
    }
}

#[derive(Debug, Clone)]
pub struct UndampedChain {
    segments: Vec<UndampedSegment>,
    degraded: Option<Degradation>,
}

impl UndampedChain {
    pub fn build(a: f64, b: f64, tau: f64, horizon: f64, ic: InitialCondition) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::Unsupported(format!("tau must be positive, got {tau}")));
        }
        let first = UndampedSegment::init(a, b, tau, ic)?;
        let count = pieces_for(horizon, tau);
        let mut scale = state_scale(first.state(0.0)).max(state_scale(first.end_state()));
        let mut segments = Vec::with_capacity(count);
        segments.push(first);
        let mut degraded = None;
        while segments.len() < count {
            let prev = &segments[segments.len() - 1];
            let next = prev.advance()?;
            let discrepancy = guard_discrepancy(prev, &next, scale);
            if !(discrepancy <= GUARD_TOLERANCE) {
                degraded = Some(Degradation {
                    segment: next.n,
                    discrepancy,
                });
                break;
            }
            scale = scale.max(state_scale(next.end_state()));
            segments.push(next);
        }
        Ok(Self { segments, degraded })
    }

    pub fn segments(&self) -> &[UndampedSegment] {
        &self.segments
    }

    pub fn degraded(&self) -> Option<Degradation> {
        self.degraded
    }

    pub fn end(&self) -> f64 {
        self.segments.len() as f64 * self.segments[0].tau
    }

    pub fn eval(&self, t: f64) -> Result<(f64, f64)> {
        let tau = self.segments[0].tau;
        let end = self.end();
        if !(t >= 0.0 && t <= end) {
            return Err(Error::OutOfRange { t, end });
        }
        let n = ((t / tau).floor() as usize).min(self.segments.len() - 1);
        Ok(self.segments[n].state(t - n as f64 * tau))
    }

    pub fn eval_checked(&self, t: f64) -> Result<(f64, f64)> {
        if t > self.end() {
            if let Some(d) = self.degraded {
                return Err(Error::PrecisionLoss {
                    segment: d.segment,
                    discrepancy: d.discrepancy,
                });
            }
        }
        self.eval(t)
    }
}

fn guard_discrepancy(prev: &UndampedSegment, next: &UndampedSegment, scale: f64) -> f64 {
    let (a, b) = (next.a, next.b);
    let coarse = guard_rk4(next.state(0.0), next.tau, GUARD_SUBSTEPS, |s, x, _v| {
        -a * x - b * prev.state(s).0
    });
    let exact = next.end_state();
    let scale = scale.max(state_scale(exact)).max(f64::MIN_POSITIVE);
    (coarse.0 - exact.0).abs().max((coarse.1 - exact.1).abs()) / scale
}

pub fn propagate_to(a: f64, b: f64, tau: f64, omega: f64, ic: InitialCondition) -> Result<(f64, f64)> {
    if omega < tau {
        return Err(Error::InvalidRequest(format!("period {omega} < tau {tau}")));
    }
    UndampedChain::build(a, b, tau, omega, ic)?.eval_checked(omega)
}
