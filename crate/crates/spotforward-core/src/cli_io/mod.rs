//! Command-line front end: config loading, quote statistics and CSV/JSON output.

pub mod config;
pub mod format;
pub mod stats;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

pub use config::{Config, TwoVenue, DEFAULT_CONFIG};
pub use format::{fmt_num, key_values, Table};
pub use stats::{annualized_ratio, quantile_sorted, read_quotes, wedge_stats, QuoteRow, WedgeStats};

use crate::core_model::{CostProcess, DemandCurve, TimeGrid};
use crate::deterministic_engine::solve_paths;
use crate::equilibrium_calibration::{
    clear_market, parity_report, sweep, CalibrationResult, ParitySystem, SweepRow, IRRELEVANT_AT_ZERO,
};
use crate::error::{Error, Result};
use crate::jump_regime::solve_jump;
use crate::picard_phi::run_picard;

/// Sweep targets used when `--targets` is absent.
pub const DEFAULT_TARGETS: [f64; 6] = [0.004, 0.002, 0.0011, 0.0001, -0.002, -0.003];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "spotforward", version, about = "Spot/forward equilibrium with quadratic trading costs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Configuration file (`key = value` lines); defaults to the built-in two-venue set.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: OutputFormat,
    /// Number of grid steps (overrides `grid.n_steps`).
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Comma-separated wedge targets.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub targets: Option<String>,
    /// Quotes CSV for `stats`.
    #[arg(long, global = true)]
    pub quotes: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Deterministic venue quote and coefficient paths.
    Benchmark,
    /// Regime-switching coefficients and conditional terminal values.
    Jump,
    /// Spot parity residual and forward wedge between the two venues.
    Wedge,
    /// Implied stress parameters for one target wedge.
    Calibrate,
    /// Implied stress parameters for a list of targets.
    Sweep,
    /// Perturbation iteration for small risk aversion.
    Picard,
    /// Per-tenor statistics of the annualized forward ratio.
    Stats,
}

fn parse_targets(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .map_err(|_| Error::invalid("targets", &format!("'{t}' is not a number")))
        })
        .collect()
}

fn load_config(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default_config(),
    };
    if let Some(n) = cli.grid {
        cfg.set("grid.n_steps", &n.to_string());
    }
    Ok(cfg)
}

fn emit<T: Serialize>(format: OutputFormat, value: &T, csv: impl FnOnce() -> String) -> Result<String> {
    match format {
        OutputFormat::Csv => Ok(csv()),
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
    }
}

fn calibration_row(t: &mut Table, r: &CalibrationResult) {
    t.push(vec![
        fmt_num(r.target),
        fmt_num(r.lambda_implied),
        fmt_num(r.stress_probability),
        r.c_stress_implied.map(fmt_num).unwrap_or_else(|| IRRELEVANT_AT_ZERO.to_string()),
        fmt_num(r.parity_residual),
        fmt_num(r.wedge_residual),
        r.converged.to_string(),
        if r.multiple_roots { "multiple roots, smallest lambda".into() } else { String::new() },
    ]);
}

const SWEEP_HEADER: [&str; 8] = [
    "target_wedge",
    "lambda_implied",
    "stress_prob_T",
    "c_stress_implied",
    "parity_residual",
    "wedge_residual",
    "converged",
    "note",
];

fn sweep_table(rows: &[SweepRow]) -> Table {
    let mut t = Table::new(&SWEEP_HEADER);
    for row in rows {
        match (&row.result, &row.error) {
            (Some(r), _) => calibration_row(&mut t, r),
            (None, e) => {
                let mut cells = vec![fmt_num(row.target)];
                cells.extend(std::iter::repeat_n(String::new(), 5));
                cells.push("false".into());
                cells.push(e.clone().unwrap_or_default());
                t.push(cells);
            }
        }
    }
    t
}

fn benchmark(cli: &Cli, cfg: &Config) -> Result<String> {
    let model = cfg.model()?;
    let cost = cfg.cost_path()?;
    let grid = TimeGrid::uniform(model.params.horizon_t, cfg.n_steps()?)?;
    let clearing = clear_market(&model, &grid)?;
    let paths = solve_paths(&cost, model.supply.m_rate, model.params.rho, clearing.quantity, &grid)?;
    let q = crate::equilibrium_calibration::venue_quote(&model, clearing.quantity, &grid)?;
    let value = json!({ "quote": q, "clearing": clearing, "paths": paths });
    emit(cli.format, &value, || {
        let mut s = key_values(&[
            ("forward", q.forward),
            ("spot0", q.spot0),
            ("premium", q.premium),
            ("p0", q.p0),
            ("delta0", q.delta0),
            ("expected_beta_T", q.expected_beta_t),
            ("quantity", q.quantity),
        ])
        .to_csv();
        s.push('\n');
        let mut t = Table::new(&["t", "P", "Lambda", "delta", "H", "Q", "mu", "q", "q_tilde", "c"]);
        for i in 0..grid.len() {
            t.push_nums(&[
                grid.knots[i],
                paths.p[i],
                paths.lambda[i],
                paths.delta[i],
                paths.h[i],
                paths.inventory[i],
                paths.mu[i],
                paths.q[i],
                paths.q_tilde[i],
                paths.c[i],
            ]);
        }
        s.push_str(&t.to_csv());
        s
    })
}

fn jump(cli: &Cli, cfg: &Config) -> Result<String> {
    let model = cfg.model()?;
    let (c_normal, c_stress, lambda) = match model.cost {
        CostProcess::RegimeSwitch { c_normal, c_stress, lambda } => (c_normal, c_stress, lambda),
        // fall back to the offshore venue of the two-venue keys
        CostProcess::Constant { .. } => match cfg.two_venue() {
            Ok(TwoVenue { offshore: CostProcess::RegimeSwitch { c_normal, c_stress, lambda }, .. }) => {
                (c_normal, c_stress, lambda)
            }
            _ => return Err(Error::Config("jump needs cost.kind = regime_switch or offshore.* keys".into())),
        },
    };
    let grid = TimeGrid::uniform(model.params.horizon_t, cfg.n_steps()?)?;
    let j = solve_jump(c_normal, c_stress, lambda, model.supply.m_rate, model.params.rho, &grid)?;
    let curve = j.conditional_beta_curve();
    let summary = [
        ("p_normal0", j.p_normal[0]),
        ("delta_normal0", j.delta_normal[0]),
        ("expected_alpha_T", j.expected_alpha()),
        ("expected_beta_T", crate::jump_regime::expected_beta(&j)),
        ("expected_beta_T_compensator", j.expected_beta_compensator()),
        ("beta_T_no_jump", curve.1),
    ];
    let value = json!({
        "summary": summary.iter().map(|(k, v)| (k.to_string(), *v)).collect::<std::collections::BTreeMap<_, _>>(),
        "coefficients": j,
        "conditional_beta_by_jump_time": curve.0,
    });
    emit(cli.format, &value, || {
        let mut s = key_values(&summary).to_csv();
        s.push('\n');
        let mut t = Table::new(&["t", "P_normal", "P_stress", "delta_normal", "delta_stress", "beta_T_given_jump_at_t"]);
        for i in 0..grid.len() {
            t.push_nums(&[grid.knots[i], j.p_normal[i], j.p_stress[i], j.delta_normal[i], j.delta_stress[i], curve.0[i]]);
        }
        s.push_str(&t.to_csv());
        s
    })
}

fn wedge(cli: &Cli, cfg: &Config) -> Result<String> {
    let tv = cfg.two_venue()?;
    let grid = TimeGrid::uniform(tv.params.horizon_t, tv.n_steps)?;
    let r = parity_report(&tv.params, &tv.onshore, &tv.offshore, &tv.supply, tv.d_bar, &grid)?;
    emit(cli.format, &r, || {
        key_values(&[
            ("d_bar", tv.d_bar),
            ("parity_residual", r.residual),
            ("parity_residual_closed", r.residual_closed),
            ("forward_wedge", r.wedge),
            ("forward_wedge_closed", r.wedge_closed),
            ("forward_onshore", r.onshore.forward),
            ("forward_offshore", r.offshore.forward),
            ("spot_onshore", r.onshore.spot0),
            ("spot_offshore", r.offshore.spot0),
        ])
        .to_csv()
    })
}

fn calibrate_cmd(cli: &Cli, cfg: &Config) -> Result<String> {
    let targets = match &cli.targets {
        Some(s) => parse_targets(s)?,
        None => return Err(Error::invalid("targets", "calibrate needs --targets <x>")),
    };
    if targets.len() != 1 {
        return Err(Error::invalid("targets", "calibrate takes exactly one target; use sweep for several"));
    }
    let setup = cfg.calibration_setup()?;
    let opts = cfg.calibration_options()?;
    if !(setup.c_normal < setup.c_y) {
        return Err(Error::invalid("offshore.c_normal", "calibration requires c_normal < onshore cost"));
    }
    let r = ParitySystem::new(setup)?.calibrate(targets[0], &opts)?;
    emit(cli.format, &r, || {
        let mut t = Table::new(&SWEEP_HEADER);
        calibration_row(&mut t, &r);
        t.to_csv()
    })
}

fn sweep_cmd(cli: &Cli, cfg: &Config) -> Result<String> {
    let targets = match &cli.targets {
        Some(s) => parse_targets(s)?,
        None => DEFAULT_TARGETS.to_vec(),
    };
    let setup = cfg.calibration_setup()?;
    let opts = cfg.calibration_options()?;
    let rows = sweep(&targets, &setup, &opts)?;
    emit(cli.format, &rows, || sweep_table(&rows).to_csv())
}

fn picard_cmd(cli: &Cli, cfg: &Config) -> Result<String> {
    let model = cfg.model()?;
    let cost = cfg.cost_path()?;
    let grid = TimeGrid::uniform(model.params.horizon_t, cfg.n_steps()?)?;
    let s = match model.params.demand {
        DemandCurve::Constant { d_bar } => d_bar,
        DemandCurve::Affine { .. } => clear_market(&model, &grid)?.quantity,
    };
    let bench = solve_paths(&cost, model.supply.m_rate, model.params.rho, s, &grid)?;
    let sigma = vec![cfg.sigma_bar()?; grid.len()];
    let (max_iter, tol, _) = cfg.picard_settings()?;
    let (state, report) = run_picard(&bench, &sigma, model.params.phi, max_iter, tol)?;
    let value = json!({ "report": report, "mu_hat_sup": crate::numerics::sup_norm(&state.hat_mu) });
    emit(cli.format, &value, || {
        let mut t = Table::new(&["iteration", "diff_norm", "ratio"]);
        for (k, d) in report.iterate_norms.iter().enumerate() {
            let ratio = if k == 0 { String::new() } else { report.ratios.get(k - 1).map(|r| fmt_num(*r)).unwrap_or_default() };
            t.push(vec![(k + 1).to_string(), fmt_num(*d), ratio]);
        }
        t.to_csv()
    })
}

fn stats_cmd(cli: &Cli) -> Result<String> {
    let path = cli
        .quotes
        .as_ref()
        .ok_or_else(|| Error::invalid("quotes", "stats needs --quotes <path>"))?;
    let file = std::fs::File::open(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let rows = read_quotes(file)?;
    let (stats, warnings) = wedge_stats(&rows)?;
    for w in &warnings {
        log::warn!("{w}");
    }
    emit(cli.format, &stats, || {
        let mut t = Table::new(&["tenor_months", "count", "mean", "std", "q25", "median", "q75", "spot_log_ratio_mean"]);
        for s in &stats {
            t.push(vec![
                s.tenor_months.to_string(),
                s.count.to_string(),
                fmt_num(s.mean),
                fmt_num(s.std),
                fmt_num(s.q25),
                fmt_num(s.median),
                fmt_num(s.q75),
                fmt_num(s.spot_log_ratio_mean),
            ]);
        }
        t.to_csv()
    })
}

fn execute(cli: &Cli) -> Result<String> {
    if cli.command == Command::Stats {
        return stats_cmd(cli);
    }
    let cfg = load_config(cli)?;
    match cli.command {
        Command::Benchmark => benchmark(cli, &cfg),
        Command::Jump => jump(cli, &cfg),
        Command::Wedge => wedge(cli, &cfg),
        Command::Calibrate => calibrate_cmd(cli, &cfg),
        Command::Sweep => sweep_cmd(cli, &cfg),
        Command::Picard => picard_cmd(cli, &cfg),
        Command::Stats => unreachable!(),
    }
}

fn error_json(e: &Error, code: i32) -> String {
    json!({ "error": e.kind(), "message": e.to_string(), "exit_code": code }).to_string()
}

/// Runs the CLI with explicit output streams and returns the exit status.
pub fn run_cli_with<I, S>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    let err = Error::Config(text.lines().next().unwrap_or("usage error").to_string());
                    let _ = writeln!(stderr, "{}", error_json(&err, 1));
                    1
                }
            };
        }
    };
    let result = execute(&cli).and_then(|text| match &cli.out {
        Some(p) => std::fs::write(p, &text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => match stdout.write_all(text.as_bytes()) {
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
            r => r.map_err(Error::from),
        },
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            let code = if e.is_solver_failure() { 2 } else { 1 };
            log::error!("{e}");
            let _ = writeln!(stderr, "{}", error_json(&e, code));
            code
        }
    }
}

/// Initialises logging from `SPOTFORWARD_LOG` and runs the CLI on the process streams.
pub fn run_cli<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("SPOTFORWARD_LOG", "warn")).try_init();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_cli_with(argv, &mut stdout.lock(), &mut stderr.lock())
}
