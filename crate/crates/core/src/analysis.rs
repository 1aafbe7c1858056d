//! Moduli of continuity, pointwise error bounds and the convergence harness.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::function::{FunctionSpec, RealFunction};
use crate::moments::{alpha_n, delta_n, delta_n_local};
use crate::operators::{KantorovichOperator, QKantorovichOperator, MAX_DEGREE};
use crate::pq::{IntegralOptions, PQContext, PQParams};

/// Smallest grid accepted by the modulus estimators.
pub const MIN_GRID: usize = 64;
/// Refinement stops once the grid has this many intervals.
pub const MAX_REFINED_INTERVALS: usize = 1 << 18;
/// Fewest grid steps per `delta` before refinement checks start.
const MIN_WINDOW: f64 = 64.0;
/// Multiplier applied to grid estimates of the modulus of continuity when
/// validating bounds; grid search can only underestimate the supremum.
pub const OMEGA_SAFETY: f64 = 1.05;
/// Grid used by the second-order modulus inside bound sweeps.
pub const MODULUS2_GRID: usize = 512;
/// Default constant for the local (second-order modulus) bound.
pub const DEFAULT_LOCAL_C: f64 = 4.0;

/// `m` equally spaced points on `[0, 1]`, endpoints included exactly.
pub fn uniform_grid(m: usize) -> Vec<f64> {
    match m {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..m).map(|i| i as f64 / (m - 1) as f64).collect(),
    }
}

fn check_interval(domain: (f64, f64)) -> Result<()> {
    let (a, b) = domain;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::Domain(format!("invalid interval [{a}, {b}]")));
    }
    Ok(())
}

fn sample<F: RealFunction + ?Sized>(
    f: &F,
    domain: (f64, f64),
    intervals: usize,
) -> Result<Vec<f64>> {
    let (a, b) = domain;
    (0..=intervals)
        .map(|i| {
            let t = if i == intervals {
                b
            } else {
                a + (b - a) * (i as f64 / intervals as f64)
            };
            f.eval(t)
        })
        .collect()
}

/// Largest `max - min` over all windows of `window + 1` consecutive samples.
fn max_window_oscillation(values: &[f64], window: usize) -> f64 {
    let mut maxq: VecDeque<usize> = VecDeque::new();
    let mut minq: VecDeque<usize> = VecDeque::new();
    let mut best = 0.0f64;
    for (i, &v) in values.iter().enumerate() {
        while maxq.back().is_some_and(|&j| values[j] <= v) {
            maxq.pop_back();
        }
        maxq.push_back(i);
        while minq.back().is_some_and(|&j| values[j] >= v) {
            minq.pop_back();
        }
        minq.push_back(i);
        let start = i.saturating_sub(window);
        while maxq.front().is_some_and(|&j| j < start) {
            maxq.pop_front();
        }
        while minq.front().is_some_and(|&j| j < start) {
            minq.pop_front();
        }
        best = best.max(values[maxq[0]] - values[minq[0]]);
    }
    best
}

fn window_for(delta: f64, h: f64) -> usize {
    // tolerate delta being an exact multiple of h up to roundoff
    (delta / h * (1.0 + 1e-12)).floor() as usize
}

fn check_delta(delta: f64, domain: (f64, f64)) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Domain(format!(
            "delta must be positive, got {delta}"
        )));
    }
    if delta > domain.1 - domain.0 {
        return Err(Error::Domain(format!(
            "delta = {delta} exceeds the length of [{}, {}]",
            domain.0, domain.1
        )));
    }
    Ok(())
}

/// Grid estimate of `sup_{|x-y| <= delta} |f(x) - f(y)|` using `grid_m`
/// equally spaced points.
pub fn modulus_continuity<F>(f: &F, delta: f64, domain: (f64, f64), grid_m: usize) -> Result<f64>
where
    F: RealFunction + ?Sized,
{
    check_interval(domain)?;
    check_delta(delta, domain)?;
    if grid_m < MIN_GRID {
        return Err(Error::Domain(format!(
            "grid must have at least {MIN_GRID} points"
        )));
    }
    let intervals = grid_m - 1;
    let values = sample(f, domain, intervals)?;
    let h = (domain.1 - domain.0) / intervals as f64;
    Ok(max_window_oscillation(&values, window_for(delta, h)))
}

/// Samples of `f` on successively doubled grids, reusable across many
/// `delta` values.
#[derive(Debug, Clone)]
pub struct ModulusEstimator {
    domain: (f64, f64),
    levels: Vec<Vec<f64>>,
}

impl ModulusEstimator {
    pub fn new<F>(f: &F, domain: (f64, f64), grid_m: usize) -> Result<Self>
    where
        F: RealFunction + ?Sized,
    {
        check_interval(domain)?;
        if grid_m < MIN_GRID {
            return Err(Error::Domain(format!(
                "grid must have at least {MIN_GRID} points"
            )));
        }
        let mut levels = Vec::new();
        let mut intervals = grid_m - 1;
        loop {
            levels.push(sample(f, domain, intervals)?);
            if intervals >= MAX_REFINED_INTERVALS {
                break;
            }
            intervals *= 2;
        }
        Ok(Self { domain, levels })
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    fn at_level(&self, level: usize, delta: f64) -> f64 {
        let values = &self.levels[level];
        let h = (self.domain.1 - self.domain.0) / (values.len() - 1) as f64;
        max_window_oscillation(values, window_for(delta, h))
    }

    /// Doubles the grid until the estimate changes by less than 1%, starting
    /// from the first grid that resolves `delta` with at least
    /// `MIN_WINDOW` steps.
    pub fn omega(&self, delta: f64) -> Result<f64> {
        check_delta(delta, self.domain)?;
        let length = self.domain.1 - self.domain.0;
        let start = self
            .levels
            .iter()
            .position(|v| delta / (length / (v.len() - 1) as f64) >= MIN_WINDOW)
            .unwrap_or(self.levels.len() - 1);
        let mut current = self.at_level(start, delta);
        for level in start + 1..self.levels.len() {
            let next = self.at_level(level, delta);
            if (next - current).abs() <= 0.01 * next.abs() {
                return Ok(next);
            }
            current = next;
        }
        Ok(current)
    }
}

/// Refined grid estimate of the modulus of continuity.
pub fn modulus_continuity_refined<F>(
    f: &F,
    delta: f64,
    domain: (f64, f64),
    grid_m: usize,
) -> Result<f64>
where
    F: RealFunction + ?Sized,
{
    ModulusEstimator::new(f, domain, grid_m)?.omega(delta)
}

/// Grid estimate of `sup_{0 < h <= h_max} |f(x+2h) - 2f(x+h) + f(x)|`.
///
/// Steps `h` run over multiples of the grid spacing up to `h_max`, plus
/// `h_max` itself.
pub fn modulus_2<F>(f: &F, h_max: f64, domain: (f64, f64), grid_m: usize) -> Result<f64>
where
    F: RealFunction + ?Sized,
{
    check_interval(domain)?;
    let (a, b) = domain;
    if h_max.is_nan() || h_max <= 0.0 || a + 2.0 * h_max > b {
        return Err(Error::Domain(format!(
            "second difference with h = {h_max} leaves [{a}, {b}]"
        )));
    }
    if grid_m < MIN_GRID {
        return Err(Error::Domain(format!(
            "grid must have at least {MIN_GRID} points"
        )));
    }
    let intervals = grid_m - 1;
    let step = (b - a) / intervals as f64;
    let values = sample(f, domain, intervals)?;
    let mut best = 0.0f64;

    let max_j = ((h_max / step) * (1.0 + 1e-12)).floor() as usize;
    for j in 1..=max_j.min(intervals / 2) {
        for i in 0..=intervals - 2 * j {
            let d = values[i + 2 * j] - 2.0 * values[i + j] + values[i];
            best = best.max(d.abs());
        }
    }

    for i in 0..=intervals {
        let x = a + step * i as f64;
        if x + 2.0 * h_max > b {
            break;
        }
        let d = f.eval(x + 2.0 * h_max)? - 2.0 * f.eval(x + h_max)? + f.eval(x)?;
        best = best.max(d.abs());
    }
    Ok(best)
}

/// Necessary-condition check of `|f(t) - f(x)| <= M |t - x|^alpha` on `[0, 1]`
/// over all pairs of a uniform grid with at least `sample_pairs` pairs.
pub fn lipschitz_check<F>(f: &F, m: f64, alpha: f64, sample_pairs: usize) -> Result<bool>
where
    F: RealFunction + ?Sized,
{
    if sample_pairs < 1000 {
        return Err(Error::Domain(format!(
            "need at least 1000 sample pairs, got {sample_pairs}"
        )));
    }
    if !(m > 0.0 && alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParams(format!(
            "require M > 0 and 0 < alpha <= 1, got M = {m}, alpha = {alpha}"
        )));
    }
    let mut points = 2;
    while points * (points - 1) / 2 < sample_pairs {
        points += 1;
    }
    let xs = uniform_grid(points);
    let values: Vec<f64> = xs.iter().map(|&x| f.eval(x)).collect::<Result<_>>()?;
    for i in 0..points {
        for j in i + 1..points {
            let lhs = (values[j] - values[i]).abs();
            let rhs = m * (xs[j] - xs[i]).powf(alpha);
            if lhs > rhs + 1e-12 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Generator of the parameter pair used at degree `n`.
#[derive(Clone)]
pub enum ParamSequence {
    /// `p_n = 1 - 1/(n+1)^2`, `q_n = 1 - 1/(n+1)`.
    Default,
    Constant(PQParams),
    Custom(Arc<dyn Fn(usize) -> (f64, f64) + Send + Sync>),
}

impl ParamSequence {
    pub fn params_at(&self, n: usize) -> Result<PQParams> {
        match self {
            ParamSequence::Default => {
                let m = (n + 1) as f64;
                PQParams::new(1.0 - 1.0 / (m * m), 1.0 - 1.0 / m)
            }
            ParamSequence::Constant(params) => Ok(*params),
            ParamSequence::Custom(g) => {
                let (p, q) = g(n);
                PQParams::new(p, q)
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ParamSequence::Default => "default",
            ParamSequence::Constant(_) => "constant",
            ParamSequence::Custom(_) => "custom",
        }
    }
}

impl fmt::Debug for ParamSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamSequence::Constant(params) => f.debug_tuple("Constant").field(params).finish(),
            other => f.write_str(other.kind()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceEntry {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub sup_error: f64,
    pub argmax: f64,
    /// `||K(e_m) - e_m||` over the grid for `e_m(t) = t^m`.
    pub e0_error: f64,
    pub e1_error: f64,
    pub e2_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub function: String,
    pub sequence: String,
    pub grid_size: usize,
    pub entries: Vec<ConvergenceEntry>,
}

fn sup_error<F>(op: &KantorovichOperator<'_>, f: &F, xs: &[f64]) -> Result<(f64, f64)>
where
    F: RealFunction + ?Sized,
{
    let mut best = (0.0, xs.first().copied().unwrap_or(0.0));
    for (x, k) in op.eval_grid(xs)? {
        let err = (k - f.eval(x)?).abs();
        if err > best.0 {
            best = (err, x);
        }
    }
    Ok(best)
}

fn check_grid(xs: &[f64]) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::Domain("empty evaluation grid".into()));
    }
    if let Some(x) = xs.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::Domain(format!("grid point {x} is outside [0, 1]")));
    }
    Ok(())
}

/// Sup-norm errors of `K_n` along a parameter sequence, together with the
/// three test-function errors. Degrees are processed in parallel and
/// reported in order.
pub fn korovkin_run(
    seq: &ParamSequence,
    f: &FunctionSpec,
    n_list: &[usize],
    x_grid: &[f64],
    opts: IntegralOptions,
) -> Result<ConvergenceReport> {
    if n_list.is_empty() {
        return Err(Error::Domain("empty degree list".into()));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain(
            "degree list must be strictly increasing".into(),
        ));
    }
    if let Some(&n) = n_list.iter().find(|&&n| n > MAX_DEGREE || n == 0) {
        return Err(Error::Capacity { n, max: MAX_DEGREE });
    }
    check_grid(x_grid)?;

    let entries = n_list
        .par_iter()
        .map(|&n| -> Result<ConvergenceEntry> {
            let params = seq.params_at(n)?;
            let ctx = PQContext::new(params, n)?;
            let op = KantorovichOperator::new(&ctx, n, f, opts)?;
            let (sup, argmax) = sup_error(&op, f, x_grid)?;
            let mut tests = [0.0; 3];
            for (m, slot) in tests.iter_mut().enumerate() {
                let e = [FunctionSpec::One, FunctionSpec::T, FunctionSpec::TSq][m].clone();
                let op = KantorovichOperator::new(&ctx, n, &e, opts)?;
                *slot = sup_error(&op, &e, x_grid)?.0;
            }
            Ok(ConvergenceEntry {
                n,
                p: params.p(),
                q: params.q(),
                sup_error: sup,
                argmax,
                e0_error: tests[0],
                e1_error: tests[1],
                e2_error: tests[2],
            })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    Ok(ConvergenceReport {
        function: f.name().to_string(),
        sequence: seq.kind().to_string(),
        grid_size: x_grid.len(),
        entries,
    })
}

/// Which pointwise estimate a [`BoundRow`] reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundKind {
    /// `2 omega(f, delta_n(x))`
    Modulus,
    /// `M delta_n(x)^alpha` for `f` in `Lip_M(alpha)`
    Lipschitz { m: f64, alpha: f64 },
    /// `C omega_2(f, delta_n_local(x)) + omega(f, alpha_n)`; informational.
    Local { c: f64 },
}

impl BoundKind {
    pub fn name(&self) -> &'static str {
        match self {
            BoundKind::Modulus => "thm32",
            BoundKind::Lipschitz { .. } => "thm33",
            BoundKind::Local { .. } => "thm34",
        }
    }

    /// Whether the bound is a proven inequality that should hold pointwise.
    pub fn is_validated(&self) -> bool {
        !matches!(self, BoundKind::Local { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundRow {
    pub x: f64,
    pub actual: f64,
    pub bound: f64,
    /// Same bound with every modulus measured on `[0, 1]` only.
    pub bound_unit: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub function: String,
    pub n: usize,
    pub p: f64,
    pub q: f64,
    /// Interval on which moduli were estimated for `bound`.
    pub omega_domain: (f64, f64),
    pub rows: Vec<BoundRow>,
}

impl BoundReport {
    pub fn min_slack(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.slack)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Evaluates one of the pointwise error bounds at every grid point.
///
/// Moduli are estimated on `[0, upper(n)/p]`, the full range sampled by the
/// operator, and for comparison on `[0, 1]`. The first-order modulus is
/// refined and scaled by [`OMEGA_SAFETY`].
pub fn bound_sweep(
    ctx: &PQContext,
    n: usize,
    f: &FunctionSpec,
    kind: BoundKind,
    xs: &[f64],
    opts: IntegralOptions,
) -> Result<BoundReport> {
    check_grid(xs)?;
    match kind {
        BoundKind::Lipschitz { m, alpha } if !(m > 0.0 && alpha > 0.0 && alpha <= 1.0) => {
            return Err(Error::InvalidParams(format!(
                "require M > 0 and 0 < alpha <= 1, got M = {m}, alpha = {alpha}"
            )))
        }
        BoundKind::Local { c } if c.is_nan() || c <= 0.0 => {
            return Err(Error::InvalidParams(format!("C must be positive, got {c}")))
        }
        _ => {}
    }
    let op = KantorovichOperator::new(ctx, n, f, opts)?;
    let reach = op.cells()[n].upper / ctx.p();
    let wide = (0.0, reach.max(1.0).min(f.domain().1));
    let unit = (0.0, 1.0);

    let needs_omega = !matches!(kind, BoundKind::Lipschitz { .. });
    let (omega_wide, omega_unit) = if needs_omega {
        (
            Some(ModulusEstimator::new(f, wide, 1025)?),
            Some(ModulusEstimator::new(f, unit, 1025)?),
        )
    } else {
        (None, None)
    };

    let values = op.eval_grid(xs)?;
    let rows = values
        .par_iter()
        .map(|&(x, k)| -> Result<BoundRow> {
            let actual = (k - f.eval(x)?).abs();
            let (bound, bound_unit) = match kind {
                BoundKind::Modulus => {
                    let d = delta_n(ctx, n, x)?;
                    if d == 0.0 {
                        (0.0, 0.0)
                    } else {
                        let w = omega_wide.as_ref().unwrap();
                        let u = omega_unit.as_ref().unwrap();
                        (
                            2.0 * OMEGA_SAFETY * w.omega(d.min(wide.1))?,
                            2.0 * OMEGA_SAFETY * u.omega(d.min(1.0))?,
                        )
                    }
                }
                BoundKind::Lipschitz { m, alpha } => {
                    let b = m * delta_n(ctx, n, x)?.powf(alpha);
                    (b, b)
                }
                BoundKind::Local { c } => {
                    let dl = delta_n_local(ctx, n, x)?;
                    let a = alpha_n(ctx, n)?;
                    let local = |dom: (f64, f64), est: &ModulusEstimator| -> Result<f64> {
                        let h = dl.min((dom.1 - dom.0) / 2.0);
                        Ok(c * modulus_2(f, h, dom, MODULUS2_GRID)? + est.omega(a.min(dom.1))?)
                    };
                    (
                        local(wide, omega_wide.as_ref().unwrap())?,
                        local(unit, omega_unit.as_ref().unwrap())?,
                    )
                }
            };
            Ok(BoundRow {
                x,
                actual,
                bound,
                bound_unit,
                slack: bound - actual,
            })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    Ok(BoundReport {
        kind,
        function: f.name().to_string(),
        n,
        p: ctx.p(),
        q: ctx.q(),
        omega_domain: wide,
        rows,
    })
}

/// `|K_n f(x) - f(x)|` against `2 omega(f, delta_n(x))`.
pub fn bound_thm32(
    ctx: &PQContext,
    n: usize,
    f: &FunctionSpec,
    x: f64,
    opts: IntegralOptions,
) -> Result<BoundRow> {
    Ok(bound_sweep(ctx, n, f, BoundKind::Modulus, &[x], opts)?.rows[0])
}

/// `|K_n f(x) - f(x)|` against `M delta_n(x)^alpha`.
pub fn bound_thm33(
    ctx: &PQContext,
    n: usize,
    m: f64,
    alpha: f64,
    f: &FunctionSpec,
    x: f64,
    opts: IntegralOptions,
) -> Result<BoundRow> {
    let kind = BoundKind::Lipschitz { m, alpha };
    Ok(bound_sweep(ctx, n, f, kind, &[x], opts)?.rows[0])
}

/// `|K_n f(x) - f(x)|` against `C omega_2(f, delta_n_local(x)) + omega(f, alpha_n)`.
pub fn bound_thm34(
    ctx: &PQContext,
    n: usize,
    f: &FunctionSpec,
    x: f64,
    c: f64,
    opts: IntegralOptions,
) -> Result<BoundRow> {
    Ok(bound_sweep(ctx, n, f, BoundKind::Local { c }, &[x], opts)?.rows[0])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecializationRow {
    pub n: usize,
    pub x: f64,
    /// The (p,q) operator at `p = 1`.
    pub pq_value: f64,
    /// The q-Kantorovich operator with `[n+1]_q` normalization.
    pub q_value: f64,
    pub difference: f64,
}

/// Compares the `p = 1` instance of the (p,q) operator with the separately
/// implemented q-Kantorovich operator on a grid.
pub fn specialization_discrepancy<F>(
    q: f64,
    n_list: &[usize],
    f: &F,
    xs: &[f64],
    opts: IntegralOptions,
) -> Result<Vec<SpecializationRow>>
where
    F: RealFunction + Sync + ?Sized,
{
    check_grid(xs)?;
    let params = PQParams::new(1.0, q)?;
    let mut rows = Vec::with_capacity(n_list.len() * xs.len());
    for &n in n_list {
        let ctx = PQContext::new(params, n)?;
        let pq_op = KantorovichOperator::new(&ctx, n, f, opts)?;
        let q_op = QKantorovichOperator::new(n, q, f, opts)?;
        for &x in xs {
            let pq_value = pq_op.apply(x)?;
            let q_value = q_op.apply(x)?;
            rows.push(SpecializationRow {
                n,
                x,
                pq_value,
                q_value,
                difference: pq_value - q_value,
            });
        }
    }
    Ok(rows)
}
