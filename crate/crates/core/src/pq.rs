//! (p,q)-calculus primitives.
//!
//! The (p,q)-integer is `[n] = (p^n - q^n) / (p - q)`; every other quantity
//! in this module (factorials, binomial coefficients, the Jackson-type
//! definite integral) is built on top of it. At `p = 1` everything reduces
//! to the corresponding q-calculus notion.

use crate::error::{Error, Result};
use crate::function::RealFunction;

/// The deformation parameters, restricted to `0 < q < p <= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PQParams {
    p: f64,
    q: f64,
}

impl PQParams {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p.is_finite() && q.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "p = {p}, q = {q} must be finite"
            )));
        }
        if !(0.0 < q && q < p && p <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "require 0 < q < p <= 1, got p = {p}, q = {q}"
            )));
        }
        Ok(Self { p, q })
    }

    #[inline]
    pub fn p(&self) -> f64 {
        self.p
    }

    #[inline]
    pub fn q(&self) -> f64 {
        self.q
    }
}

/// Double-double value `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Dd {
    pub(crate) hi: f64,
    pub(crate) lo: f64,
}

impl From<f64> for Dd {
    fn from(hi: f64) -> Self {
        Dd { hi, lo: 0.0 }
    }
}

impl Dd {
    pub(crate) const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub(crate) const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub(crate) fn value(self) -> f64 {
        self.hi + self.lo
    }

    fn renorm(hi: f64, lo: f64) -> Dd {
        let s = hi + lo;
        Dd {
            hi: s,
            lo: lo - (s - hi),
        }
    }

    pub(crate) fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    pub(crate) fn mul(self, x: f64) -> Dd {
        let prod = self.hi * x;
        let err = self.hi.mul_add(x, -prod) + self.lo * x;
        Dd::renorm(prod, err)
    }

    pub(crate) fn add(self, other: Dd) -> Dd {
        let s = self.hi + other.hi;
        let bb = s - self.hi;
        let err = (self.hi - (s - bb)) + (other.hi - bb);
        Dd::renorm(s, err + self.lo + other.lo)
    }
}

/// Parameters together with cached (p,q)-integers and powers.
///
/// Holds `[k]`, `p^k`, `q^k` and `ln [k]!` for `0 <= k <= n_max + 1`.
/// Immutable once built, so it can be shared freely between threads.
#[derive(Debug, Clone)]
pub struct PQContext {
    params: PQParams,
    n_max: usize,
    ints: Vec<f64>,
    p_pow: Vec<f64>,
    q_pow: Vec<f64>,
    ln_fact: Vec<Dd>,
}

impl PQContext {
    pub fn new(params: PQParams, n_max: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::InvalidParams("n_max must be positive".into()));
        }
        // Moment formulas read [3] even for n = 1.
        let len = (n_max + 2).max(4);
        let (p, q) = (params.p, params.q);

        // Powers and integers are carried as unevaluated double-double sums
        // and rounded once, so [k] stays within a few ulps for large k.
        let mut p_pow = Vec::with_capacity(len);
        let mut q_pow = Vec::with_capacity(len);
        let mut ints = Vec::with_capacity(len);
        let (mut pk, mut qk, mut int) = (Dd::ONE, Dd::ONE, Dd::ZERO);
        for _ in 0..len {
            p_pow.push(pk.value());
            q_pow.push(qk.value());
            ints.push(int.value());
            // [k+1] = q^k + p [k]: a sum of positive terms, no cancellation.
            int = int.mul(p).add(qk);
            pk = pk.mul(p);
            qk = qk.mul(q);
        }

        // ln [k]! is a long sum of logs; double-double keeps the binomial
        // difference of two such sums accurate.
        let mut ln_fact = Vec::with_capacity(len);
        ln_fact.push(Dd::ZERO);
        for k in 1..len {
            ln_fact.push(ln_fact[k - 1].add(Dd {
                hi: ints[k].ln(),
                lo: 0.0,
            }));
        }

        Ok(Self {
            params,
            n_max,
            ints,
            p_pow,
            q_pow,
            ln_fact,
        })
    }

    #[inline]
    pub fn params(&self) -> PQParams {
        self.params
    }

    #[inline]
    pub fn p(&self) -> f64 {
        self.params.p
    }

    #[inline]
    pub fn q(&self) -> f64 {
        self.params.q
    }

    #[inline]
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    fn check(&self, k: usize) -> Result<()> {
        if k > self.n_max + 1 {
            Err(Error::IndexOutOfRange {
                index: k,
                capacity: self.n_max + 1,
            })
        } else {
            Ok(())
        }
    }

    /// `p^k` from the cache.
    pub fn p_pow(&self, k: usize) -> Result<f64> {
        self.check(k)?;
        Ok(self.p_pow[k])
    }

    /// `q^k` from the cache.
    pub fn q_pow(&self, k: usize) -> Result<f64> {
        self.check(k)?;
        Ok(self.q_pow[k])
    }

    /// Unchecked cache accessors for hot loops that already validated `n`.
    #[inline]
    pub(crate) fn int_at(&self, k: usize) -> f64 {
        self.ints[k]
    }

    #[inline]
    pub(crate) fn p_pow_at(&self, k: usize) -> f64 {
        self.p_pow[k]
    }

    #[inline]
    pub(crate) fn q_pow_at(&self, k: usize) -> f64 {
        self.q_pow[k]
    }

    /// Natural log of the (p,q)-binomial coefficient, `0 <= k <= n <= n_max + 1`.
    pub fn ln_binomial(&self, n: usize, k: usize) -> Result<f64> {
        self.check(n)?;
        if k > n {
            return Err(Error::Domain(format!(
                "binomial index k = {k} exceeds n = {n}"
            )));
        }
        Ok(self.ln_binomial_dd(n, k).value())
    }

    /// Unchecked `ln [n k]` in double-double.
    #[inline]
    pub(crate) fn ln_binomial_dd(&self, n: usize, k: usize) -> Dd {
        self.ln_fact[n]
            .add(self.ln_fact[k].neg())
            .add(self.ln_fact[n - k].neg())
    }
}

/// The (p,q)-integer `[n]`.
pub fn pq_int(ctx: &PQContext, n: usize) -> Result<f64> {
    ctx.check(n)?;
    Ok(ctx.ints[n])
}

/// `[k]! = [k][k-1]...[1]`, with `[0]! = 1`.
pub fn pq_factorial(ctx: &PQContext, k: usize) -> Result<f64> {
    if k > ctx.n_max {
        return Err(Error::IndexOutOfRange {
            index: k,
            capacity: ctx.n_max,
        });
    }
    let value: f64 = ctx.ints[1..=k].iter().product();
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Overflow(format!("[{k}]! is not finite")))
    }
}

/// The (p,q)-binomial coefficient, evaluated as `prod_{i=1}^{k} [n-i+1] / [i]`
/// so that it stays finite well past the point where `[n]!` overflows.
pub fn pq_binomial(ctx: &PQContext, n: usize, k: i64) -> Result<f64> {
    if k < 0 || k as u64 > n as u64 {
        return Err(Error::Domain(format!(
            "binomial requires 0 <= k <= n, got n = {n}, k = {k}"
        )));
    }
    if n > ctx.n_max {
        return Err(Error::IndexOutOfRange {
            index: n,
            capacity: ctx.n_max,
        });
    }
    let k = (k as usize).min(n - k as usize);
    let value = (1..=k).fold(1.0, |acc, i| acc * ctx.ints[n - i + 1] / ctx.ints[i]);
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Overflow(format!(
            "binomial [{n} choose {k}] is not finite"
        )))
    }
}

/// `(x)^k_{p,q} = x (px) (p^2 x) ... (p^{k-1} x) = p^{k(k-1)/2} x^k`.
pub fn pq_rising_power(x: f64, k: u32, params: PQParams) -> f64 {
    let exponent = (k as f64) * (k as f64 - 1.0) / 2.0;
    params.p.powf(exponent) * x.powi(k as i32)
}

/// `(x + y)^n_{p,q} = prod_{s=0}^{n-1} (p^s x + q^s y)`.
pub fn pq_binomial_expansion(x: f64, y: f64, n: u32, params: PQParams) -> f64 {
    let (mut ps, mut qs) = (1.0, 1.0);
    let mut acc = 1.0;
    for _ in 0..n {
        acc *= ps * x + qs * y;
        ps *= params.p;
        qs *= params.q;
    }
    acc
}

/// Truncation controls for the (p,q)-integral series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralOptions {
    pub rtol: f64,
    pub max_terms: usize,
}

impl Default for IntegralOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-14,
            max_terms: 1_000_000,
        }
    }
}

impl IntegralOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.rtol.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "rtol must be positive, got {}",
                self.rtol
            )));
        }
        if self.max_terms == 0 {
            return Err(Error::InvalidParams("max_terms must be positive".into()));
        }
        Ok(())
    }
}

/// Number of consecutive sub-threshold terms required before stopping.
const QUIET_TERMS: usize = 3;

/// The (p,q)-definite integral `int_0^a f(t) d_{p,q} t`.
///
/// For `p > q` (the only case reachable through [`PQParams`]) this is
/// `(p - q) a sum_k q^k / p^{k+1} f(a q^k / p^{k+1})`. The first node is
/// `a / p`, so `f` must be defined slightly beyond `a`.
///
/// The series stops once `QUIET_TERMS` consecutive terms are below
/// `rtol * |partial sum|`; the remainder is then estimated from the ratio
/// of the last two terms as a geometric tail.
pub fn pq_integral_0a<F>(f: &F, a: f64, params: PQParams, opts: IntegralOptions) -> Result<f64>
where
    F: RealFunction + ?Sized,
{
    opts.validate()?;
    if !(a >= 0.0 && a.is_finite()) {
        return Err(Error::Domain(format!(
            "integral upper limit must be >= 0, got {a}"
        )));
    }
    if a == 0.0 {
        return Ok(0.0);
    }
    let (p, q) = (params.p, params.q);
    if p > q {
        jackson_series(f, a, p - q, q / p, 1.0 / p, opts)
    } else {
        // |p/q| < 1 branch: (q - p) a sum_k p^k / q^{k+1} f(a p^k / q^{k+1}).
        jackson_series(f, a, q - p, p / q, 1.0 / q, opts)
    }
}

#[derive(Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        self.comp += if self.sum.abs() >= x.abs() {
            (self.sum - t) + x
        } else {
            (x - t) + self.sum
        };
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `scale * a * sum_k first * ratio^k * f(a * first * ratio^k)`
fn jackson_series<F>(
    f: &F,
    a: f64,
    scale: f64,
    ratio: f64,
    first: f64,
    opts: IntegralOptions,
) -> Result<f64>
where
    F: RealFunction + ?Sized,
{
    // Neumaier summation: these sums are later differenced against each
    // other, so their rounding error would otherwise be amplified.
    let mut acc = Neumaier::default();
    let mut weight = first;
    let mut prev_term = 0.0;
    let mut quiet = 0;
    for _ in 0..opts.max_terms {
        let term = weight * f.eval(a * weight)?;
        acc.add(term);
        if term.abs() <= opts.rtol * acc.sum.abs() {
            quiet += 1;
        } else {
            quiet = 0;
        }
        if quiet >= QUIET_TERMS {
            let rho = term / prev_term;
            if rho > 0.0 && rho < 1.0 {
                acc.add(term * rho / (1.0 - rho));
            }
            return Ok(scale * a * acc.value());
        }
        prev_term = term;
        weight *= ratio;
    }
    Err(Error::NonConvergence {
        terms: opts.max_terms,
        partial: scale * a * acc.value(),
    })
}

/// `int_a^b f d_{p,q} t`, defined as `int_0^b - int_0^a`.
pub fn pq_integral_ab<F>(
    f: &F,
    a: f64,
    b: f64,
    params: PQParams,
    opts: IntegralOptions,
) -> Result<f64>
where
    F: RealFunction + ?Sized,
{
    if a.is_nan() || a < 0.0 {
        return Err(Error::Domain(format!("lower limit must be >= 0, got {a}")));
    }
    if a > b {
        return Err(Error::Domain(format!(
            "lower limit {a} exceeds upper limit {b}"
        )));
    }
    if a == b {
        return Ok(0.0);
    }
    Ok(pq_integral_0a(f, b, params, opts)? - pq_integral_0a(f, a, params, opts)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(p: f64, q: f64, n_max: usize) -> PQContext {
        PQContext::new(PQParams::new(p, q).unwrap(), n_max).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn params_reject_bad_orderings() {
        assert!(PQParams::new(0.9, 0.8).is_ok());
        assert!(PQParams::new(1.0, 0.5).is_ok());
        for (p, q) in [
            (0.8, 0.8),
            (0.8, 0.9),
            (1.1, 0.5),
            (0.5, 0.0),
            (0.5, -0.1),
            (f64::NAN, 0.1),
        ] {
            assert!(
                matches!(PQParams::new(p, q), Err(Error::InvalidParams(_))),
                "{p} {q}"
            );
        }
    }

    #[test]
    fn integers_small_values() {
        let c = ctx(0.9, 0.8, 10);
        assert_eq!(pq_int(&c, 0).unwrap(), 0.0);
        assert_eq!(pq_int(&c, 1).unwrap(), 1.0);
        assert!(rel(pq_int(&c, 2).unwrap(), 0.9 + 0.8) < 1e-15);
        let direct = (0.9f64.powi(3) - 0.8f64.powi(3)) / 0.1;
        assert!(rel(pq_int(&c, 3).unwrap(), 2.17) < 1e-14);
        assert!(rel(pq_int(&c, 3).unwrap(), direct) < 1e-13);
        assert!(matches!(pq_int(&c, 12), Err(Error::IndexOutOfRange { .. })));
        assert!(pq_int(&c, 11).is_ok());
    }

    #[test]
    fn q_integer_accumulates_without_drift() {
        // (1 - q^176) / (1 - q) for the double nearest 0.99, in exact rationals.
        let c = ctx(1.0, 0.99, 200);
        assert!((pq_int(&c, 176).unwrap() - 82.9472569110413).abs() < 2e-14);
    }

    #[test]
    fn integers_match_closed_form() {
        for (p, q) in [(0.9, 0.8), (0.99, 0.95), (1.0, 0.9), (0.6, 0.1)] {
            let c = ctx(p, q, 200);
            for n in 0..=201usize {
                let closed = (p.powi(n as i32) - q.powi(n as i32)) / (p - q);
                // The closed form itself loses ~eps * p^n / (p^n - q^n) / (p - q).
                assert!(
                    rel(pq_int(&c, n).unwrap(), closed) < 1e-11 || n == 0,
                    "{p} {q} {n}"
                );
            }
        }
    }

    #[test]
    fn recurrence_pair() {
        for (p, q) in [(0.9, 0.8), (0.99, 0.95), (1.0, 0.9), (0.999, 0.99)] {
            let c = ctx(p, q, 300);
            for k in 1..=300usize {
                let next = pq_int(&c, k + 1).unwrap();
                let pk = c.p_pow(k).unwrap();
                let qk = c.q_pow(k).unwrap();
                let cur = pq_int(&c, k).unwrap();
                assert!(rel(pk + q * cur, next) < 1e-13);
                assert!(rel(qk + p * cur, next) < 1e-13);
                assert!(next > 0.0);
            }
        }
    }

    #[test]
    fn integers_increase_at_p_one_and_decay_below() {
        let c = ctx(1.0, 0.9, 300);
        for k in 0..=300usize {
            assert!(pq_int(&c, k + 1).unwrap() > pq_int(&c, k).unwrap());
        }
        // for p < 1, [k] -> 0 like p^k / (p - q)
        let c = ctx(0.9, 0.8, 300);
        assert!(pq_int(&c, 300).unwrap() < pq_int(&c, 2).unwrap());
    }

    #[test]
    fn factorials() {
        let c = ctx(0.9, 0.8, 10);
        assert_eq!(pq_factorial(&c, 0).unwrap(), 1.0);
        assert!(rel(pq_factorial(&c, 2).unwrap(), 1.7) < 1e-15);
        assert!(rel(pq_factorial(&c, 3).unwrap(), 3.689) < 1e-14);
        assert!(pq_factorial(&c, 11).is_err());

        // p = 1, q close to 1 behaves like n!, which overflows by n = 171.
        let big = ctx(1.0, 0.999_999, 400);
        assert!(matches!(pq_factorial(&big, 400), Err(Error::Overflow(_))));
    }

    #[test]
    fn binomials() {
        let c = ctx(0.9, 0.8, 40);
        assert_eq!(pq_binomial(&c, 7, 0).unwrap(), 1.0);
        assert_eq!(pq_binomial(&c, 7, 7).unwrap(), 1.0);
        // [4] = p^3 + p^2 q + p q^2 + q^3 = 2.465
        let expected = (2.465 * 2.17) / 1.7;
        assert!(rel(pq_binomial(&c, 4, 2).unwrap(), expected) < 1e-13);
        assert!(pq_binomial(&c, 4, -1).is_err());
        assert!(pq_binomial(&c, 4, 5).is_err());

        // factorial quotient oracle
        for n in 0..=30usize {
            for k in 0..=n {
                let quotient = pq_factorial(&c, n).unwrap()
                    / (pq_factorial(&c, k).unwrap() * pq_factorial(&c, n - k).unwrap());
                let b = pq_binomial(&c, n, k as i64).unwrap();
                assert!(rel(b, quotient) < 1e-12, "{n} {k}");
                assert!(rel(c.ln_binomial(n, k).unwrap().exp(), b) < 1e-12);
            }
        }
    }

    #[test]
    fn binomial_stays_finite_past_factorial_overflow() {
        let c = ctx(1.0, 0.999_999, 500);
        assert!(pq_factorial(&c, 300).is_err());
        let mid = pq_binomial(&c, 300, 150).unwrap();
        assert!(mid.is_finite() && mid > 1e80);
    }

    #[test]
    fn rising_power() {
        let params = PQParams::new(0.9, 0.5).unwrap();
        assert_eq!(pq_rising_power(0.3, 0, params), 1.0);
        assert_eq!(pq_rising_power(0.3, 1, params), 0.3);
        assert!(rel(pq_rising_power(0.5, 3, params), 0.091125) < 1e-15);
    }

    #[test]
    fn binomial_expansion() {
        let params = PQParams::new(0.9, 0.8).unwrap();
        assert_eq!(pq_binomial_expansion(0.3, 0.7, 0, params), 1.0);
        assert_eq!(pq_binomial_expansion(1.0, -1.0, 2, params), 0.0);
        assert!(rel(pq_binomial_expansion(0.3, 0.7, 2, params), 0.83) < 1e-15);
    }

    #[test]
    fn integral_constant_and_zero_limit() {
        let one = |_: f64| 1.0;
        for (p, q) in [(0.9, 0.8), (1.0, 0.5), (0.999, 0.99)] {
            let params = PQParams::new(p, q).unwrap();
            let v = pq_integral_0a(&one, 1.0, params, IntegralOptions::default()).unwrap();
            assert!((v - 1.0).abs() < 1e-13, "{p} {q} {v}");
            assert_eq!(
                pq_integral_0a(&f64::sin, 0.0, params, IntegralOptions::default()).unwrap(),
                0.0
            );
        }
    }

    #[test]
    fn integral_linear_q_case() {
        let params = PQParams::new(1.0, 0.5).unwrap();
        let v = pq_integral_0a(&|t: f64| t, 1.0, params, IntegralOptions::default()).unwrap();
        assert!(rel(v, 1.0 / 1.5) < 1e-14);
    }

    #[test]
    fn integral_ab_cases() {
        let params = PQParams::new(0.9, 0.8).unwrap();
        let opts = IntegralOptions::default();
        let one = |_: f64| 1.0;
        assert_eq!(pq_integral_ab(&one, 0.4, 0.4, params, opts).unwrap(), 0.0);
        let v = pq_integral_ab(&one, 0.2, 0.7, params, opts).unwrap();
        assert!((v - 0.5).abs() < 1e-14);
        let sq = |t: f64| t * t;
        let v = pq_integral_ab(&sq, 0.2, 0.7, params, opts).unwrap();
        let expected = (0.7f64.powi(3) - 0.2f64.powi(3)) / (0.81 + 0.72 + 0.64);
        assert!(rel(v, expected) < 1e-12);
        assert!(matches!(
            pq_integral_ab(&one, 0.7, 0.2, params, opts),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn integral_reports_non_convergence() {
        let params = PQParams::new(1.0, 0.999).unwrap();
        let opts = IntegralOptions {
            rtol: 1e-14,
            max_terms: 100,
        };
        assert!(matches!(
            pq_integral_0a(&|_: f64| 1.0, 1.0, params, opts),
            Err(Error::NonConvergence { terms: 100, .. })
        ));
    }

    #[test]
    fn integral_propagates_function_errors() {
        let params = PQParams::new(0.9, 0.8).unwrap();
        let f = crate::function::FunctionSpec::tabulated("tab", vec![0.0, 1.0], vec![0.0, 1.0])
            .unwrap();
        // first node is a / p = 1.111 > 1
        assert!(matches!(
            pq_integral_0a(&f, 1.0, params, IntegralOptions::default()),
            Err(Error::FunctionDomain { .. })
        ));
    }
}
