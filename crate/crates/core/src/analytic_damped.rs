//! Closed-form propagation of `x'' + a x' + b x(t - tau(t)) = 0` with the
//! saturating-ramp delay.
//!
//! The solution is followed one delay-length at a time. On the `n`-th piece,
//! with local time `s` in `[0, tau]`,
//!
//! ```text
//! X_n(s) = P_n(s) + Q_n(s) e^{-a s},   deg P_n <= n + 1,  deg Q_n <= n
//! ```
//!
//! and `X_n'' + a X_n' = -b X_{n-1}`, with `X_n` continuing `X_{n-1}` in value
//! and slope. During the ramp (`n = 0`) the delayed value is `x(0)`.

use crate::chain::{
    guard_rk4, pieces_for, state_scale, Degradation, InitialCondition, GUARD_SUBSTEPS, GUARD_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::poly;
use crate::wide::WideChain;

/// Coefficients of one piece `X_n = P_n + Q_n e^{-a s}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DampedSegment {
    pub n: usize,
    /// Coefficients of `P_n`, length `n + 2`.
    pub alpha: Vec<f64>,
    /// Coefficients of `Q_n`, length `n + 1`.
    pub beta: Vec<f64>,
    pub a: f64,
    pub b: f64,
    pub tau: f64,
}

impl DampedSegment {
    /// First piece, `X_0(s) = A + B s + C e^{-a s}`.
    pub fn init(a: f64, b: f64, tau: f64, ic: InitialCondition) -> Result<Self> {
        if a == 0.0 {
            return Err(Error::Unsupported(
                "damped recurrence needs a != 0; use the numeric integrator".into(),
            ));
        }
        let (big_a, big_b, big_c) = match ic {
            InitialCondition::UnitVelocity => (1.0 / a, 0.0, -1.0 / a),
            InitialCondition::UnitDisplacement => (1.0 + b / (a * a), -b / a, -b / (a * a)),
        };
        Ok(Self {
            n: 0,
            alpha: vec![big_a, big_b],
            beta: vec![big_c],
            a,
            b,
            tau,
        })
    }

    /// `(X_n(s), X_n'(s))`.
    pub fn state(&self, s: f64) -> (f64, f64) {
        let e = (-self.a * s).exp();
        let q = poly::eval(&self.beta, s);
        let x = poly::eval(&self.alpha, s) + q * e;
        let dx = poly::eval_d1(&self.alpha, s) + (poly::eval_d1(&self.beta, s) - self.a * q) * e;
        (x, dx)
    }

    /// `X_n''(s)` from the coefficient representation.
    pub fn second_derivative(&self, s: f64) -> f64 {
        let a = self.a;
        let e = (-a * s).exp();
        let q = poly::eval(&self.beta, s);
        let dq = poly::eval_d1(&self.beta, s);
        let ddq = poly::eval_d2(&self.beta, s);
        poly::eval_d2(&self.alpha, s) + (ddq - 2.0 * a * dq + a * a * q) * e
    }

    pub fn end_state(&self) -> (f64, f64) {
        self.state(self.tau)
    }

    /// Next piece of the chain.
    pub fn advance(&self) -> Result<Self> {
        let n = self.n + 1;
        let (a, b) = (self.a, self.b);
        let prev_alpha = &self.alpha;
        let prev_beta = &self.beta;

        let mut alpha = vec![0.0; n + 2];
        alpha[n + 1] = -b * prev_alpha[n] / (a * (n + 1) as f64);
        for k in (1..=n).rev() {
            let kf = k as f64;
            alpha[k] = (-b * prev_alpha[k - 1] - (kf + 1.0) * kf * alpha[k + 1]) / (a * kf);
        }

        let mut beta = vec![0.0; n + 1];
        beta[n] = b * prev_beta[n - 1] / (a * n as f64);
        for k in (1..n).rev() {
            let kf = k as f64;
            beta[k] = (b * prev_beta[k - 1] + (kf + 1.0) * kf * beta[k + 1]) / (a * kf);
        }

        let (x_end, dx_end) = self.end_state();
        beta[0] = (-dx_end + alpha[1] + beta[1]) / a;
        alpha[0] = x_end - beta[0];

        if alpha.iter().chain(beta.iter()).any(|c| !c.is_finite()) {
            return Err(Error::NonFinite { segment: n });
        }
        Ok(Self {
            n,
            alpha,
            beta,
            a,
            b,
            tau: self.tau,
        })
    }
}

/// Consecutive pieces `X_0, X_1, ..., X_N`.
#[derive(Debug, Clone)]
pub struct DampedChain {
    segments: Vec<DampedSegment>,
    degraded: Option<Degradation>,
    wide: Option<WideChain>,
}

impl DampedChain {
    /// Builds enough pieces to cover `[0, horizon]`. If the precision guard
    /// trips, the recurrence is rerun in extended precision; if that does not
    /// settle either, the chain stops before the offending piece and records it.
    pub fn build(a: f64, b: f64, tau: f64, horizon: f64, ic: InitialCondition) -> Result<Self> {
        let chain = Self::build_double(a, b, tau, horizon, ic)?;
        if chain.degraded.is_none() {
            return Ok(chain);
        }
        match WideChain::build_verified(a, b, tau, horizon, ic)? {
            Some(wide) => Ok(Self {
                segments: wide.rounded_segments(),
                degraded: None,
                wide: Some(wide),
            }),
            None => Ok(chain),
        }
    }

    /// The recurrence in double precision only, guarded.
    pub fn build_double(a: f64, b: f64, tau: f64, horizon: f64, ic: InitialCondition) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::Unsupported(format!("tau must be positive, got {tau}")));
        }
        let first = DampedSegment::init(a, b, tau, ic)?;
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
        Ok(Self {
            segments,
            degraded,
            wide: None,
        })
    }

    pub fn segments(&self) -> &[DampedSegment] {
        &self.segments
    }

    pub fn degraded(&self) -> Option<Degradation> {
        self.degraded
    }

    /// Working precision in bits when the chain runs in extended precision.
    pub fn extended_bits(&self) -> Option<usize> {
        self.wide.as_ref().map(WideChain::bits)
    }

    /// End of the trustworthy range.
    pub fn end(&self) -> f64 {
        let tau = self.segments[0].tau;
        self.segments.len() as f64 * tau
    }

    /// `(x(t), x'(t))` for `t` in `[0, end()]`.
    pub fn eval(&self, t: f64) -> Result<(f64, f64)> {
        let tau = self.segments[0].tau;
        let end = self.end();
        if !(t >= 0.0 && t <= end) {
            return Err(Error::OutOfRange { t, end });
        }
        let n = ((t / tau).floor() as usize).min(self.segments.len() - 1);
        let s = t - n as f64 * tau;
        match &self.wide {
            Some(wide) => wide.state(n, s),
            None => Ok(self.segments[n].state(s)),
        }
    }

    /// Like [`eval`](Self::eval) but reports a degraded chain as precision loss.
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

fn guard_discrepancy(prev: &DampedSegment, next: &DampedSegment, scale: f64) -> f64 {
    let (a, b) = (next.a, next.b);
    let coarse = guard_rk4(next.state(0.0), next.tau, GUARD_SUBSTEPS, |s, _x, v| {
        -a * v - b * prev.state(s).0
    });
    let exact = next.end_state();
    let scale = scale.max(state_scale(exact)).max(f64::MIN_POSITIVE);
    (coarse.0 - exact.0).abs().max((coarse.1 - exact.1).abs()) / scale
}

/// `(x(omega), x'(omega))` for the given fundamental solution.
pub fn propagate_to(a: f64, b: f64, tau: f64, omega: f64, ic: InitialCondition) -> Result<(f64, f64)> {
    if omega < tau {
        return Err(Error::InvalidRequest(format!("period {omega} < tau {tau}")));
    }
    DampedChain::build(a, b, tau, omega, ic)?.eval_checked(omega)
}
