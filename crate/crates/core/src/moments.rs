//! Closed-form moments of the Kantorovich operator and the scales derived
//! from them.

use crate::error::{Error, Result};
use crate::operators::check_degree;
use crate::pq::PQContext;

/// Negative roundoff in the central moment below this magnitude is clamped.
pub const CENTRAL_CLAMP: f64 = 1e-12;

/// `K(1;x)`, `K(t;x)`, `K(t^2;x)` and `K((t-x)^2;x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSet {
    pub m0: f64,
    pub m1: f64,
    pub m2: f64,
    pub central2: f64,
}

fn check_unit(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain(format!("x = {x} is outside [0, 1]")))
    }
}

/// Coefficients of `K(t^2; x) = a x^2 + b x + c`, with `a = q [n-1] / [n]`.
/// The often-quoted `(q/p) [n-1] / [n]` is off by `1/p` when `p < 1`.
fn second_moment_coeffs(ctx: &PQContext, n: usize) -> (f64, f64, f64) {
    let (p, q) = (ctx.p(), ctx.q());
    let nn = ctx.int_at(n);
    let n1 = ctx.int_at(n - 1);
    let three = ctx.int_at(3);
    let pn = ctx.p_pow_at(n);
    let pn1 = ctx.p_pow_at(n - 1);
    let a = q * n1 / nn;
    let b = pn * (2.0 * q + p) / (three * nn) + pn1 / nn;
    let c = pn * pn / (three * nn * nn);
    (a, b, c)
}

/// `p^n / ([2] [n])`, the constant first-moment shift.
pub fn alpha_n(ctx: &PQContext, n: usize) -> Result<f64> {
    check_degree(ctx, n)?;
    Ok(ctx.p_pow_at(n) / (ctx.int_at(2) * ctx.int_at(n)))
}

pub fn moments_closed_form(ctx: &PQContext, n: usize, x: f64) -> Result<MomentSet> {
    check_degree(ctx, n)?;
    check_unit(x)?;
    let shift = alpha_n(ctx, n)?;
    let (a, b, c) = second_moment_coeffs(ctx, n);
    let m1 = x + shift;
    let m2 = a * x * x + b * x + c;
    Ok(MomentSet {
        m0: 1.0,
        m1,
        m2,
        central2: central_expanded(ctx, n, x),
    })
}

/// The central moment as the expanded quadratic in `x`.
fn central_expanded(ctx: &PQContext, n: usize, x: f64) -> f64 {
    let (a, b, c) = second_moment_coeffs(ctx, n);
    let shift = ctx.p_pow_at(n) / (ctx.int_at(2) * ctx.int_at(n));
    (a - 1.0) * x * x + (b - 2.0 * shift) * x + c
}

/// The central moment via linearity, `m2 - 2x m1 + x^2`.
pub fn central2_by_linearity(m: &MomentSet, x: f64) -> f64 {
    m.m2 - 2.0 * x * m.m1 + x * x * m.m0
}

fn clamped_sqrt(value: f64) -> Result<f64> {
    if value < -CENTRAL_CLAMP {
        return Err(Error::Consistency(format!(
            "central second moment {value} is negative beyond roundoff"
        )));
    }
    Ok(value.max(0.0).sqrt())
}

/// `sqrt(K((t-x)^2; x))`.
pub fn delta_n(ctx: &PQContext, n: usize, x: f64) -> Result<f64> {
    clamped_sqrt(moments_closed_form(ctx, n, x)?.central2)
}

/// `sqrt(K((t-x)^2; x) + p^{2n} / ([2]^2 [n]^2))`, the local-approximation scale.
pub fn delta_n_local(ctx: &PQContext, n: usize, x: f64) -> Result<f64> {
    let central = moments_closed_form(ctx, n, x)?.central2;
    let shift = alpha_n(ctx, n)?;
    let root = clamped_sqrt(central)?;
    Ok((root * root + shift * shift).sqrt())
}
