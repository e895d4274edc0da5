//! Extended-precision twin of the damped recurrence.
//!
//! For small `a tau` the polynomial and exponential parts of each piece
//! cancel, and the cancellation grows by roughly an order of magnitude per
//! piece. The same recurrence run in a wider binary format keeps enough
//! digits; the working precision is raised until two precisions agree.

use astro_float::{BigFloat, Consts, RoundingMode, Sign};

use crate::analytic_damped::DampedSegment;
use crate::chain::{pieces_for, state_scale, InitialCondition};
use crate::error::{Error, Result};

const RM: RoundingMode = RoundingMode::ToEven;
/// Extra bits used to estimate the error of a working precision.
const CHECK_BITS: usize = 64;
const START_BITS: usize = 128;
pub(crate) const MAX_BITS: usize = 2048;
/// Agreement between two precisions required to accept a chain.
const AGREEMENT: f64 = 1e-13;

pub(crate) fn to_f64(x: &BigFloat) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.is_inf() {
        return if x.is_inf_pos() { f64::INFINITY } else { f64::NEG_INFINITY };
    }
    let Some((words, _, sign, e, _)) = x.as_raw_parts() else {
        return f64::NAN;
    };
    let Some(&top) = words.last() else {
        return 0.0;
    };
    // value = 0.top... * 2^e; split the scaling to stay inside f64 range
    let shift = e - 64;
    let half = shift / 2;
    let v = top as f64 * 2f64.powi(half) * 2f64.powi(shift - half);
    if sign == Sign::Neg {
        -v
    } else {
        v
    }
}

#[derive(Debug, Clone)]
struct Piece {
    alpha: Vec<BigFloat>,
    beta: Vec<BigFloat>,
}

/// A damped chain whose coefficients carry `bits` of precision.
#[derive(Debug, Clone)]
pub(crate) struct WideChain {
    bits: usize,
    a: BigFloat,
    b: BigFloat,
    tau: f64,
    a_f64: f64,
    b_f64: f64,
    pieces: Vec<Piece>,
}

struct Ctx {
    p: usize,
    cc: Consts,
}

impl Ctx {
    fn new(p: usize) -> Result<Self> {
        let cc = Consts::new().map_err(|e| Error::Unsupported(format!("extended precision unavailable: {e:?}")))?;
        Ok(Self { p, cc })
    }

    fn num(&self, v: f64) -> BigFloat {
        BigFloat::from_f64(v, self.p)
    }

    fn horner(&self, c: &[BigFloat], s: &BigFloat) -> BigFloat {
        let mut acc = BigFloat::from_f64(0.0, self.p);
        for ck in c.iter().rev() {
            acc = acc.mul(s, self.p, RM).add(ck, self.p, RM);
        }
        acc
    }

    fn horner_d1(&self, c: &[BigFloat], s: &BigFloat) -> BigFloat {
        let mut acc = BigFloat::from_f64(0.0, self.p);
        for (k, ck) in c.iter().enumerate().skip(1).rev() {
            let term = ck.mul(&self.num(k as f64), self.p, RM);
            acc = acc.mul(s, self.p, RM).add(&term, self.p, RM);
        }
        acc
    }
}

impl WideChain {
    fn build_at(a: f64, b: f64, tau: f64, pieces: usize, ic: InitialCondition, bits: usize) -> Result<Self> {
        let mut ctx = Ctx::new(bits)?;
        let p = bits;
        let (aw, bw) = (ctx.num(a), ctx.num(b));
        let one = ctx.num(1.0);
        let inv_a = one.div(&aw, p, RM);
        let b_over_a = bw.mul(&inv_a, p, RM);
        let first = match ic {
            InitialCondition::UnitVelocity => Piece {
                alpha: vec![inv_a.clone(), ctx.num(0.0)],
                beta: vec![inv_a.neg()],
            },
            InitialCondition::UnitDisplacement => {
                let c = b_over_a.mul(&inv_a, p, RM);
                Piece {
                    alpha: vec![one.add(&c, p, RM), b_over_a.neg()],
                    beta: vec![c.neg()],
                }
            }
        };
        let tau_w = ctx.num(tau);
        let e_tau = aw.mul(&tau_w, p, RM).neg().exp(p, RM, &mut ctx.cc);
        let mut chain = Self {
            bits,
            a: aw,
            b: bw,
            tau,
            a_f64: a,
            b_f64: b,
            pieces: vec![first],
        };
        while chain.pieces.len() < pieces {
            let next = chain.advance(&ctx, &tau_w, &e_tau)?;
            chain.pieces.push(next);
        }
        Ok(chain)
    }

    fn state_with(&self, ctx: &Ctx, piece: &Piece, s: &BigFloat, e: &BigFloat) -> (BigFloat, BigFloat) {
        let p = ctx.p;
        let q = ctx.horner(&piece.beta, s);
        let x = ctx.horner(&piece.alpha, s).add(&q.mul(e, p, RM), p, RM);
        let slope = ctx.horner_d1(&piece.beta, s).sub(&self.a.mul(&q, p, RM), p, RM);
        let dx = ctx.horner_d1(&piece.alpha, s).add(&slope.mul(e, p, RM), p, RM);
        (x, dx)
    }

    fn advance(&self, ctx: &Ctx, tau: &BigFloat, e_tau: &BigFloat) -> Result<Piece> {
        let p = ctx.p;
        let prev = self.pieces.last().expect("chain has a first piece");
        let n = self.pieces.len();
        let (a, b) = (&self.a, &self.b);

        let mut alpha = vec![ctx.num(0.0); n + 2];
        alpha[n + 1] = b
            .mul(&prev.alpha[n], p, RM)
            .neg()
            .div(&a.mul(&ctx.num((n + 1) as f64), p, RM), p, RM);
        for k in (1..=n).rev() {
            let kf = k as f64;
            let num = b
                .mul(&prev.alpha[k - 1], p, RM)
                .neg()
                .sub(&alpha[k + 1].mul(&ctx.num((kf + 1.0) * kf), p, RM), p, RM);
            alpha[k] = num.div(&a.mul(&ctx.num(kf), p, RM), p, RM);
        }

        let mut beta = vec![ctx.num(0.0); n + 1];
        beta[n] = b
            .mul(&prev.beta[n - 1], p, RM)
            .div(&a.mul(&ctx.num(n as f64), p, RM), p, RM);
        for k in (1..n).rev() {
            let kf = k as f64;
            let num = b
                .mul(&prev.beta[k - 1], p, RM)
                .add(&beta[k + 1].mul(&ctx.num((kf + 1.0) * kf), p, RM), p, RM);
            beta[k] = num.div(&a.mul(&ctx.num(kf), p, RM), p, RM);
        }

        let (x_end, dx_end) = self.state_with(ctx, prev, tau, e_tau);
        beta[0] = dx_end
            .neg()
            .add(&alpha[1], p, RM)
            .add(&beta[1], p, RM)
            .div(a, p, RM);
        alpha[0] = x_end.sub(&beta[0], p, RM);

        if alpha.iter().chain(beta.iter()).any(|c| c.is_nan() || c.is_inf()) {
            return Err(Error::NonFinite { segment: n });
        }
        Ok(Piece { alpha, beta })
    }

    /// Raises the precision until the chain agrees with a wider one at every
    /// piece end. `None` when even the widest precision does not settle.
    pub(crate) fn build_verified(a: f64, b: f64, tau: f64, horizon: f64, ic: InitialCondition) -> Result<Option<Self>> {
        let pieces = pieces_for(horizon, tau);
        let mut bits = START_BITS;
        while bits <= MAX_BITS {
            let low = Self::build_at(a, b, tau, pieces, ic, bits)?;
            let high = Self::build_at(a, b, tau, pieces, ic, bits + CHECK_BITS)?;
            let (el, eh) = (low.end_states()?, high.end_states()?);
            let scale = eh.iter().fold(f64::MIN_POSITIVE, |m, &s| m.max(state_scale(s)));
            let worst = el
                .iter()
                .zip(&eh)
                .map(|(l, h)| (l.0 - h.0).abs().max((l.1 - h.1).abs()))
                .fold(0.0, f64::max);
            if worst <= AGREEMENT * scale {
                return Ok(Some(high));
            }
            bits *= 2;
        }
        Ok(None)
    }

    pub(crate) fn bits(&self) -> usize {
        self.bits
    }

    fn end_states(&self) -> Result<Vec<(f64, f64)>> {
        let mut ctx = Ctx::new(self.bits)?;
        let s = ctx.num(self.tau);
        let e = self.a.mul(&s, self.bits, RM).neg().exp(self.bits, RM, &mut ctx.cc);
        Ok(self
            .pieces
            .iter()
            .map(|piece| {
                let (x, dx) = self.state_with(&ctx, piece, &s, &e);
                (to_f64(&x), to_f64(&dx))
            })
            .collect())
    }

    #[cfg(test)]
    pub(crate) fn len(&self) -> usize {
        self.pieces.len()
    }

    /// `(x, x')` at local time `s` of piece `n`.
    pub(crate) fn state(&self, n: usize, s: f64) -> Result<(f64, f64)> {
        let mut ctx = Ctx::new(self.bits)?;
        let sw = ctx.num(s);
        let e = self.a.mul(&sw, self.bits, RM).neg().exp(self.bits, RM, &mut ctx.cc);
        let (x, dx) = self.state_with(&ctx, &self.pieces[n], &sw, &e);
        Ok((to_f64(&x), to_f64(&dx)))
    }

    /// Coefficients rounded to double precision, for inspection.
    pub(crate) fn rounded_segments(&self) -> Vec<DampedSegment> {
        self.pieces
            .iter()
            .enumerate()
            .map(|(n, piece)| DampedSegment {
                n,
                alpha: piece.alpha.iter().map(to_f64).collect(),
                beta: piece.beta.iter().map(to_f64).collect(),
                a: self.a_f64,
                b: self.b_f64,
                tau: self.tau,
            })
            .collect()
    }
}
