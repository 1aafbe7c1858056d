use pqk_core::analysis::{bound_sweep, korovkin_run, uniform_grid, BoundKind, ParamSequence};
use pqk_core::moments::{alpha_n, delta_n, delta_n_local, moments_closed_form};
use pqk_core::operators::kantorovich_cells;
use pqk_core::{FunctionSpec, KantorovichOperator, PQContext, PQParams, RealFunction};
use serde_json::json;

use crate::config::{Preset, RunConfig};
use crate::error::CliError;
use crate::report::Report;

/// Slack below this is treated as a violated bound in the summary.
pub const SLACK_TOLERANCE: f64 = 1e-12;

/// Rows per figure series.
pub const FIGURE_GRID: usize = 201;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FigureSeries {
    pub p: f64,
    pub q: f64,
    pub n: usize,
}

impl FigureSeries {
    pub fn label(&self) -> String {
        format!("p{}_q{}_n{}", self.p, self.q, self.n)
    }
}

/// Illustrative parameter sets for curve plots of `1 + sin(7x)`.
pub fn preset_series(preset: Preset) -> Vec<FigureSeries> {
    let pairs = [(0.75, 0.70), (0.85, 0.80), (0.95, 0.90), (0.999, 0.99)];
    let degrees = [10, 30, 100];
    match preset {
        Preset::Fig1 => pairs
            .iter()
            .map(|&(p, q)| FigureSeries { p, q, n: 30 })
            .collect(),
        Preset::Fig2 => pairs
            .iter()
            .map(|&(p, q)| FigureSeries { p, q, n: 100 })
            .collect(),
        Preset::Fig3 => degrees
            .iter()
            .map(|&n| FigureSeries {
                p: 0.95,
                q: 0.90,
                n,
            })
            .collect(),
        Preset::Fig4 => degrees
            .iter()
            .map(|&n| FigureSeries {
                p: 0.999,
                q: 0.99,
                n,
            })
            .collect(),
    }
}

/// Tabulated functions must cover every node the operator samples.
fn require_reach(f: &FunctionSpec, params: PQParams, n: usize) -> Result<(), CliError> {
    if !matches!(f, FunctionSpec::Tabulated(_)) {
        return Ok(());
    }
    let ctx = PQContext::new(params, n)?;
    let reach = kantorovich_cells(&ctx, n)?[n].upper / params.p();
    let (lo, hi) = f.domain();
    if lo > 0.0 || hi < reach {
        return Err(CliError::Input(format!(
            "table `{}` covers [{lo}, {hi}] but n = {n} needs [0, {reach}]",
            f.name()
        )));
    }
    Ok(())
}

fn base_report(config: &RunConfig, columns: Vec<&'static str>) -> Report {
    let mut report = Report::new(config.command, columns);
    report
        .param("p", config.params.p())
        .param("q", config.params.q())
        .param("grid", config.grid)
        .param("rtol", config.integral.rtol)
        .param("max_terms", config.integral.max_terms);
    report
}

pub fn execute(config: &RunConfig) -> Result<Report, CliError> {
    match config.command {
        "moments" => cmd_moments(config),
        "eval" => cmd_eval(config),
        "converge" => cmd_converge(config),
        "bounds" => cmd_bounds(config),
        "figure" => cmd_figure(config),
        other => Err(CliError::Validation(format!("unknown command {other}"))),
    }
}

pub fn cmd_moments(config: &RunConfig) -> Result<Report, CliError> {
    let n = config.n;
    let ctx = PQContext::new(config.params, n)?;
    let mut report = base_report(
        config,
        vec![
            "x",
            "m0",
            "m1",
            "m2",
            "central2",
            "delta_n",
            "delta_n_local",
            "alpha_n",
        ],
    );
    report.param("n", n);
    let alpha = alpha_n(&ctx, n)?;
    for x in uniform_grid(config.grid) {
        let m = moments_closed_form(&ctx, n, x)?;
        report.push(vec![
            x.into(),
            m.m0.into(),
            m.m1.into(),
            m.m2.into(),
            m.central2.into(),
            delta_n(&ctx, n, x)?.into(),
            delta_n_local(&ctx, n, x)?.into(),
            alpha.into(),
        ]);
    }
    Ok(report)
}

pub fn cmd_eval(config: &RunConfig) -> Result<Report, CliError> {
    let n = config.n;
    let f = &config.function;
    require_reach(f, config.params, n)?;
    let ctx = PQContext::new(config.params, n)?;
    let op = KantorovichOperator::new(&ctx, n, f, config.integral)?;
    let mut report = base_report(config, vec!["x", "f", "K"]);
    report.param("n", n).param("fn", f.name());
    for (x, k) in op.eval_grid(&uniform_grid(config.grid))? {
        report.push(vec![x.into(), f.eval(x)?.into(), k.into()]);
    }
    Ok(report)
}

pub fn cmd_converge(config: &RunConfig) -> Result<Report, CliError> {
    let seq = config.sequence();
    let f = &config.function;
    for &n in &config.n_list {
        require_reach(f, seq.params_at(n)?, n)?;
    }
    let result = korovkin_run(
        &seq,
        f,
        &config.n_list,
        &uniform_grid(config.grid),
        config.integral,
    )?;
    let mut report = base_report(
        config,
        vec![
            "n",
            "p",
            "q",
            "sup_error",
            "argmax",
            "e0_error",
            "e1_error",
            "e2_error",
        ],
    );
    report
        .param("fn", f.name())
        .param("seq", seq.kind())
        .param("n_list", json!(config.n_list));
    if matches!(seq, ParamSequence::Default) {
        report.meta("sequence", "p_n = 1 - 1/(n+1)^2, q_n = 1 - 1/(n+1)");
    }
    for e in result.entries {
        report.push(vec![
            e.n.into(),
            e.p.into(),
            e.q.into(),
            e.sup_error.into(),
            e.argmax.into(),
            e.e0_error.into(),
            e.e1_error.into(),
            e.e2_error.into(),
        ]);
    }
    Ok(report)
}

pub fn cmd_bounds(config: &RunConfig) -> Result<Report, CliError> {
    let n = config.n;
    let f = &config.function;
    require_reach(f, config.params, n)?;
    let ctx = PQContext::new(config.params, n)?;
    let sweep = bound_sweep(
        &ctx,
        n,
        f,
        config.bound,
        &uniform_grid(config.grid),
        config.integral,
    )?;
    let mut report = base_report(
        config,
        vec!["x", "actual", "bound", "bound_unit", "slack", "theorem"],
    );
    report
        .param("n", n)
        .param("fn", f.name())
        .param("theorem", config.bound.name());
    match config.bound {
        BoundKind::Lipschitz { m, alpha } => {
            report.param("M", m).param("alpha", alpha);
        }
        BoundKind::Local { c } => {
            report.param("C", c);
        }
        BoundKind::Modulus => {}
    }
    let min_slack = sweep.min_slack();
    let validated = config.bound.is_validated();
    report
        .meta(
            "omega_domain",
            json!([sweep.omega_domain.0, sweep.omega_domain.1]),
        )
        .meta("min_slack", min_slack)
        .meta("validated", validated);
    if validated {
        report.meta("holds", min_slack >= -SLACK_TOLERANCE);
    }
    for row in &sweep.rows {
        report.push(vec![
            row.x.into(),
            row.actual.into(),
            row.bound.into(),
            row.bound_unit.into(),
            row.slack.into(),
            config.bound.name().into(),
        ]);
    }
    Ok(report)
}

pub fn cmd_figure(config: &RunConfig) -> Result<Report, CliError> {
    let preset = config
        .preset
        .ok_or_else(|| CliError::Validation("figure requires --preset".into()))?;
    let series = preset_series(preset);
    let f = FunctionSpec::Sin7;
    let xs = uniform_grid(FIGURE_GRID);

    let mut report = Report::new(config.command, vec!["series", "x", "f", "K"]);
    report
        .param("preset", preset.name())
        .param("fn", f.name())
        .param("grid", FIGURE_GRID)
        .param("rtol", config.integral.rtol)
        .param("max_terms", config.integral.max_terms)
        .meta(
            "series",
            json!(series
                .iter()
                .map(|s| json!({"label": s.label(), "p": s.p, "q": s.q, "n": s.n}))
                .collect::<Vec<_>>()),
        )
        .meta(
            "note",
            "illustrative implementation presets, not published parameter values",
        );

    for s in &series {
        let params = PQParams::new(s.p, s.q).map_err(|e| CliError::Validation(e.to_string()))?;
        let ctx = PQContext::new(params, s.n)?;
        let op = KantorovichOperator::new(&ctx, s.n, &f, config.integral)?;
        let label = s.label();
        for (x, k) in op.eval_grid(&xs)? {
            report.push(vec![
                label.as_str().into(),
                x.into(),
                f.eval(x)?.into(),
                k.into(),
            ]);
        }
    }
    Ok(report)
}
