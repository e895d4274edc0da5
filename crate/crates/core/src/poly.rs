//! Dense polynomials with ascending coefficients, evaluated by Horner's rule.

/// `c[0] + c[1] t + c[2] t^2 + ...`
#[inline]
pub fn eval(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * t + ci)
}

/// First derivative at `t`.
#[inline]
pub fn eval_d1(c: &[f64], t: f64) -> f64 {
    let mut acc = 0.0;
    for i in (1..c.len()).rev() {
        acc = acc * t + i as f64 * c[i];
    }
    acc
}

/// Second derivative at `t`.
#[inline]
pub fn eval_d2(c: &[f64], t: f64) -> f64 {
    let mut acc = 0.0;
    for i in (2..c.len()).rev() {
        acc = acc * t + (i * (i - 1)) as f64 * c[i];
    }
    acc
}

/// Index of the highest nonzero coefficient, `None` for the zero polynomial.
pub fn degree(c: &[f64]) -> Option<usize> {
    c.iter().rposition(|&x| x != 0.0)
}
