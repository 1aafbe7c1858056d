//! The (p,q)-Bernstein-Kantorovich operator and its relatives.
//!
//! For a degree `n` the operator is
//!
//! ```text
//! K_n(f; x) = sum_k w_k(x) * mean_k(f)
//! mean_k(f) = [n] / (p^{n-k} q^k) * int_{lower_k}^{upper_k} f d_{p,q}t
//! ```
//!
//! where `w_k` are the (p,q)-Bernstein weights normalized by
//! `p^{n(n-1)/2}` and the cells `[lower_k, upper_k]` tile
//! `[0, [n+1]/[n]]`. The cell means do not depend on `x`, so
//! [`KantorovichOperator`] computes them once and then evaluates at any
//! number of points for the cost of one weight vector each.
//!
//! Individual cell integrals are only guaranteed nonnegative for
//! non-decreasing `f`; other functions are accepted and simply evaluated.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::function::RealFunction;
use crate::pq::{pq_integral_0a, Dd, IntegralOptions, PQContext};

/// Largest supported operator degree.
pub const MAX_DEGREE: usize = 500;

/// Smallest admissible `width / upper` over the cells. Cell integrals are
/// differences of two Jackson sums, so a cell this narrow already costs about
/// eight significant digits.
pub const MIN_RELATIVE_WIDTH: f64 = 1e-8;

/// `min_k (upper(k) - lower(k)) / upper(k) = q^n / [n+1]`, attained at `k = n`.
pub fn min_relative_width(ctx: &PQContext, n: usize) -> Result<f64> {
    check_degree(ctx, n)?;
    Ok(ctx.q_pow_at(n) / ctx.int_at(n + 1))
}

fn check_conditioning(n: usize, rel_width: f64) -> Result<()> {
    if rel_width < MIN_RELATIVE_WIDTH {
        Err(Error::IllConditioned {
            n,
            rel_width,
            min: MIN_RELATIVE_WIDTH,
        })
    } else {
        Ok(())
    }
}

pub(crate) fn check_degree(ctx: &PQContext, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("operator degree must be positive".into()));
    }
    if n > MAX_DEGREE {
        return Err(Error::Capacity { n, max: MAX_DEGREE });
    }
    if n > ctx.n_max() {
        return Err(Error::IndexOutOfRange {
            index: n,
            capacity: ctx.n_max(),
        });
    }
    Ok(())
}

fn check_unit(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain(format!("x = {x} is outside [0, 1]")))
    }
}

/// Normalized basis weights `w_k = b_{n,k}(x) / p^{n(n-1)/2}` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisWeights {
    pub n: usize,
    pub x: f64,
    pub w: Vec<f64>,
}

impl BasisWeights {
    pub fn sum(&self) -> f64 {
        self.w.iter().sum()
    }
}

/// Computes the weights in log space.
///
/// With `r = q/p` each weight factors as
/// `[n k] p^{-k(n-k)} x^k prod_{s<n-k} (1 - r^s x)`, which is the defining
/// product with the powers of `p` collected into one integer exponent.
/// Zero factors (`x = 0` for `k > 0`, `x = 1` for `k < n`) short-circuit to
/// an exact zero.
pub fn basis_weights(ctx: &PQContext, n: usize, x: f64) -> Result<BasisWeights> {
    check_degree(ctx, n)?;
    check_unit(x)?;
    let mut w = vec![0.0; n + 1];
    if x == 0.0 {
        w[0] = 1.0;
    } else if x == 1.0 {
        w[n] = 1.0;
    } else {
        let ln_p = ctx.p().ln();
        let ln_x = x.ln();

        // tail[j] = sum_{s<j} ln(1 - r^s x), accumulated in double-double
        // with r^s taken from the cached powers to avoid drift.
        let mut tail = Vec::with_capacity(n + 1);
        tail.push(Dd::ZERO);
        for s in 0..n {
            let rs = ctx.q_pow_at(s) / ctx.p_pow_at(s);
            tail.push(tail[s].add(Dd::from((-rs * x).ln_1p())));
        }

        for (k, wk) in w.iter_mut().enumerate() {
            let ln_w = ctx
                .ln_binomial_dd(n, k)
                .add(Dd::from(-((k * (n - k)) as f64) * ln_p))
                .add(Dd::from(k as f64 * ln_x))
                .add(tail[n - k]);
            *wk = ln_w.value().exp();
        }
    }
    Ok(BasisWeights { n, x, w })
}

/// Integration cell `[lower, upper]` attached to basis index `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KantorovichCell {
    pub k: usize,
    pub lower: f64,
    pub upper: f64,
}

impl KantorovichCell {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// `p^{n+1-j} [j] / [n]`; cell `k` spans endpoints `k` and `k + 1`.
#[inline]
fn endpoint(ctx: &PQContext, n: usize, j: usize) -> f64 {
    ctx.p_pow_at(n + 1 - j) * ctx.int_at(j) / ctx.int_at(n)
}

/// The `n + 1` integration cells. `upper(k)` and `lower(k + 1)` are the same
/// floating-point value, and the last cell ends at `[n+1]/[n]`.
///
/// Cells narrower than an ulp of their position collapse in floating point;
/// [`min_relative_width`] reports how close a degree is to that limit.
pub fn kantorovich_cells(ctx: &PQContext, n: usize) -> Result<Vec<KantorovichCell>> {
    check_degree(ctx, n)?;
    Ok((0..=n)
        .map(|k| KantorovichCell {
            k,
            lower: endpoint(ctx, n, k),
            upper: endpoint(ctx, n, k + 1),
        })
        .collect())
}

/// The operator for a fixed degree and function, with cell means precomputed.
#[derive(Debug, Clone)]
pub struct KantorovichOperator<'a> {
    ctx: &'a PQContext,
    n: usize,
    cells: Vec<KantorovichCell>,
    means: Vec<f64>,
}

impl<'a> KantorovichOperator<'a> {
    pub fn new<F>(ctx: &'a PQContext, n: usize, f: &F, opts: IntegralOptions) -> Result<Self>
    where
        F: RealFunction + ?Sized,
    {
        let cells = kantorovich_cells(ctx, n)?;
        check_conditioning(n, min_relative_width(ctx, n)?)?;
        // the series samples up to upper(n) / p
        let reach = cells[n].upper / ctx.p();
        if let Some((lo, hi)) = f.domain() {
            if lo > 0.0 || hi < reach {
                return Err(Error::Domain(format!(
                    "function domain [{lo}, {hi}] does not cover [0, {reach}] needed for n = {n}"
                )));
            }
        }

        let params = ctx.params();
        let mut partial = Vec::with_capacity(n + 2);
        partial.push(0.0);
        for cell in &cells {
            partial.push(pq_integral_0a(f, cell.upper, params, opts)?);
        }

        let scale = ctx.int_at(n);
        let means = (0..=n)
            .map(|k| {
                let integral = partial[k + 1] - partial[k];
                scale * integral / (ctx.p_pow_at(n - k) * ctx.q_pow_at(k))
            })
            .collect();

        Ok(Self {
            ctx,
            n,
            cells,
            means,
        })
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn cells(&self) -> &[KantorovichCell] {
        &self.cells
    }

    /// `[n] / (p^{n-k} q^k) * int_cell f`, the quantity each weight multiplies.
    pub fn cell_means(&self) -> &[f64] {
        &self.means
    }

    pub fn apply(&self, x: f64) -> Result<f64> {
        let weights = basis_weights(self.ctx, self.n, x)?;
        Ok(self.apply_weights(&weights))
    }

    pub fn apply_weights(&self, weights: &BasisWeights) -> f64 {
        debug_assert_eq!(weights.n, self.n);
        weights.w.iter().zip(&self.means).map(|(w, m)| w * m).sum()
    }

    /// Evaluates at every point in parallel; output order matches `xs`.
    /// On failure the smallest-index offending point is reported.
    pub fn eval_grid(&self, xs: &[f64]) -> Result<Vec<(f64, f64)>> {
        let results: Vec<Result<f64>> = xs.par_iter().map(|&x| self.apply(x)).collect();
        xs.iter()
            .zip(results)
            .map(|(&x, r)| {
                r.map(|v| (x, v)).map_err(|e| Error::AtPoint {
                    x,
                    source: Box::new(e),
                })
            })
            .collect()
    }
}

/// `K_n(f; x)` at a single point.
pub fn kantorovich_apply<F>(
    ctx: &PQContext,
    n: usize,
    f: &F,
    x: f64,
    opts: IntegralOptions,
) -> Result<f64>
where
    F: RealFunction + ?Sized,
{
    check_unit(x)?;
    KantorovichOperator::new(ctx, n, f, opts)?.apply(x)
}

/// `K_n(f; x)` over a grid, as `(x, K_n(f; x))` pairs.
pub fn kantorovich_eval_grid<F>(
    ctx: &PQContext,
    n: usize,
    f: &F,
    xs: &[f64],
    opts: IntegralOptions,
) -> Result<Vec<(f64, f64)>>
where
    F: RealFunction + ?Sized,
{
    KantorovichOperator::new(ctx, n, f, opts)?.eval_grid(xs)
}

/// The revised (p,q)-Bernstein operator
/// `sum_k w_k f(p^{n-k} [k] / [n])`.
pub fn pq_bernstein_apply<F>(ctx: &PQContext, n: usize, f: &F, x: f64) -> Result<f64>
where
    F: RealFunction + ?Sized,
{
    let weights = basis_weights(ctx, n, x)?;
    let nn = ctx.int_at(n);
    let mut acc = 0.0;
    for (k, w) in weights.w.iter().enumerate() {
        if *w == 0.0 {
            continue;
        }
        let node = ctx.p_pow_at(n - k) * ctx.int_at(k) / nn;
        acc += w * f.eval(node)?;
    }
    Ok(acc)
}

/// The q-Bernstein-Kantorovich operator with `[n+1]_q` normalization and
/// cells `[[k]_q/[n+1]_q, [k+1]_q/[n+1]_q]`.
///
/// Written independently of the (p,q) machinery above (own q-integers, own
/// Jackson integral, direct basis products) so that it can serve as a
/// cross-check at `p = 1`. Each cell term carries the `q^{-k}` factor that
/// makes `K(1; x) = 1`.
#[derive(Debug, Clone)]
pub struct QKantorovichOperator {
    n: usize,
    q: f64,
    means: Vec<f64>,
}

fn q_int(q: f64, k: usize) -> f64 {
    (1.0 - q.powi(k as i32)) / (1.0 - q)
}

/// `(1 - q) a sum_j q^j f(a q^j)`
fn jackson_q<F>(f: &F, a: f64, q: f64, opts: IntegralOptions) -> Result<f64>
where
    F: RealFunction + ?Sized,
{
    if a == 0.0 {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    let mut qj = 1.0;
    let mut prev = 0.0;
    let mut quiet = 0;
    for _ in 0..opts.max_terms {
        let term = qj * f.eval(a * qj)?;
        sum += term;
        quiet = if term.abs() <= opts.rtol * sum.abs() {
            quiet + 1
        } else {
            0
        };
        if quiet >= 3 {
            let rho = term / prev;
            if rho > 0.0 && rho < 1.0 {
                sum += term * rho / (1.0 - rho);
            }
            return Ok((1.0 - q) * a * sum);
        }
        prev = term;
        qj *= q;
    }
    Err(Error::NonConvergence {
        terms: opts.max_terms,
        partial: (1.0 - q) * a * sum,
    })
}

impl QKantorovichOperator {
    pub fn new<F>(n: usize, q: f64, f: &F, opts: IntegralOptions) -> Result<Self>
    where
        F: RealFunction + ?Sized,
    {
        opts.validate()?;
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidParams(format!(
                "q must lie in (0, 1), got {q}"
            )));
        }
        if n == 0 {
            return Err(Error::Domain("operator degree must be positive".into()));
        }
        if n > MAX_DEGREE {
            return Err(Error::Capacity { n, max: MAX_DEGREE });
        }
        if let Some((lo, hi)) = f.domain() {
            if lo > 0.0 || hi < 1.0 {
                return Err(Error::Domain(format!(
                    "function domain [{lo}, {hi}] does not cover [0, 1]"
                )));
            }
        }
        let scale = q_int(q, n + 1);
        check_conditioning(n, q.powi(n as i32) / scale)?;
        let mut partial = Vec::with_capacity(n + 2);
        for j in 0..=n + 1 {
            partial.push(jackson_q(f, q_int(q, j) / scale, q, opts)?);
        }
        let means = (0..=n)
            .map(|k| scale * (partial[k + 1] - partial[k]) / q.powi(k as i32))
            .collect();
        Ok(Self { n, q, means })
    }

    /// The q-Bernstein basis `[n k]_q x^k prod_{s<n-k} (1 - q^s x)`.
    pub fn basis(&self, x: f64) -> Result<Vec<f64>> {
        check_unit(x)?;
        let (n, q) = (self.n, self.q);
        let mut out = Vec::with_capacity(n + 1);
        let mut binom = 1.0;
        for k in 0..=n {
            if k > 0 {
                binom *= q_int(q, n - k + 1) / q_int(q, k);
            }
            let tail: f64 = (0..n - k).map(|s| 1.0 - q.powi(s as i32) * x).product();
            out.push(binom * x.powi(k as i32) * tail);
        }
        Ok(out)
    }

    pub fn apply(&self, x: f64) -> Result<f64> {
        Ok(self
            .basis(x)?
            .iter()
            .zip(&self.means)
            .map(|(b, m)| b * m)
            .sum())
    }
}

pub fn q_kantorovich_apply<F>(n: usize, q: f64, f: &F, x: f64, opts: IntegralOptions) -> Result<f64>
where
    F: RealFunction + ?Sized,
{
    check_unit(x)?;
    QKantorovichOperator::new(n, q, f, opts)?.apply(x)
}
