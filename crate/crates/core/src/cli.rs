//! Command-line front end.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 on data or numeric
//! errors. A human-readable summary goes to standard output; `--out` receives
//! the machine-readable document.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::asymptotics::chi2_test;
use crate::diagnostics::{ResidualTransform, Statistic};
use crate::error::{Error, Result};
use crate::estimate::fit_var;
use crate::io::{default_header, read_csv, write_csv, write_csv_to};
use crate::montecarlo::{mc_test, thread_pool, Innovations, McConfig};
use crate::study::{render_table, run_study, StudyConfig, StudyMethod};
use crate::varma::{catalog, simulate, ModelSpec, CATALOG_NAMES};

pub const TOOL: &str = "mvport";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(
    name = "mvport",
    version,
    about = "Portmanteau diagnostics for fitted vector autoregressions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a VARMA model to CSV.
    Simulate(SimulateArgs),
    /// Fit a VAR(p) by least squares.
    Fit(FitArgs),
    /// Portmanteau test of a VAR(p) fit.
    Test(TestArgs),
    /// Empirical size of the D statistic (a·χ²_b and Monte-Carlo).
    SizeStudy(SizeStudyArgs),
    /// Empirical power of D against the modified Q statistic.
    PowerStudy(PowerStudyArgs),
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    /// Catalog name (phi1..phi4, model1..model8) or a JSON model file.
    #[arg(long)]
    model: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct FitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    order: usize,
    #[arg(long)]
    no_intercept: bool,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum StatArg {
    Gv,
    Q,
    Qtilde,
}

impl From<StatArg> for Statistic {
    fn from(s: StatArg) -> Self {
        match s {
            StatArg::Gv => Statistic::Gv,
            StatArg::Q => Statistic::QClassic,
            StatArg::Qtilde => Statistic::QModified,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum MethodArg {
    Mc,
    Chi2,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum TransformArg {
    None,
    Square,
    Abs,
}

impl From<TransformArg> for ResidualTransform {
    fn from(t: TransformArg) -> Self {
        match t {
            TransformArg::None => ResidualTransform::Identity,
            TransformArg::Square => ResidualTransform::Square,
            TransformArg::Abs => ResidualTransform::Abs,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum InnovationsArg {
    Gaussian,
    Bootstrap,
}

impl From<InnovationsArg> for Innovations {
    fn from(i: InnovationsArg) -> Self {
        match i {
            InnovationsArg::Gaussian => Innovations::Gaussian,
            InnovationsArg::Bootstrap => Innovations::Bootstrap,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum StudyMethodArg {
    Chi2,
    Mc,
    Both,
}

impl From<StudyMethodArg> for StudyMethod {
    fn from(m: StudyMethodArg) -> Self {
        match m {
            StudyMethodArg::Chi2 => StudyMethod::Chi2,
            StudyMethodArg::Mc => StudyMethod::Mc,
            StudyMethodArg::Both => StudyMethod::Both,
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct TestArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    order: usize,
    /// Comma-separated lags, e.g. 5,10,15.
    #[arg(long, value_delimiter = ',', required = true)]
    lags: Vec<usize>,
    #[arg(long, value_enum, default_value_t = StatArg::Gv)]
    stat: StatArg,
    #[arg(long, value_enum, default_value_t = MethodArg::Mc)]
    method: MethodArg,
    #[arg(long, default_value_t = 999)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = TransformArg::None)]
    transform: TransformArg,
    #[arg(long, value_enum, default_value_t = InnovationsArg::Gaussian)]
    innovations: InnovationsArg,
    #[arg(long)]
    no_intercept: bool,
    #[arg(long, default_value_t = 1)]
    #[serde(skip)]
    workers: usize,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct StudyCommon {
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    lags: Vec<usize>,
    #[arg(long, default_value_t = 500)]
    trials: usize,
    #[arg(long, default_value_t = 199)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Nominal level; a test rejects when its p-value is at most this.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 1)]
    #[serde(skip)]
    workers: usize,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct SizeStudyArgs {
    #[arg(long, value_delimiter = ',', default_value = "phi1,phi2,phi3,phi4")]
    phi: Vec<String>,
    #[arg(long, value_enum, default_value_t = StudyMethodArg::Both)]
    method: StudyMethodArg,
    #[arg(long, default_value_t = 1)]
    fit_order: usize,
    #[command(flatten)]
    #[serde(flatten)]
    common: StudyCommon,
}

#[derive(Debug, Args, Serialize)]
struct PowerStudyArgs {
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "model1,model2,model3,model4,model5,model6,model7,model8"
    )]
    model: Vec<String>,
    #[arg(long, default_value_t = 1)]
    fit_order: usize,
    #[command(flatten)]
    #[serde(flatten)]
    common: StudyCommon,
}

/// Invocation details that do not influence any reported number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeInfo {
    pub argv: Vec<String>,
    pub workers: usize,
    pub out: Option<String>,
    pub elapsed_ms: u128,
}

/// The machine-readable output of every command. Everything except
/// `runtime` is a deterministic function of `command`, `seed`, `settings`
/// and the input data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Master seed; `null` for commands without randomness.
    pub seed: Option<u64>,
    pub settings: serde_json::Value,
    pub report: serde_json::Value,
    pub runtime: RuntimeInfo,
}

impl ReportDocument {
    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

struct Output {
    command: &'static str,
    seed: Option<u64>,
    settings: serde_json::Value,
    report: Option<serde_json::Value>,
    workers: usize,
    out: Option<PathBuf>,
    summary: String,
}

fn load_model(name: &str) -> Result<ModelSpec> {
    if CATALOG_NAMES.contains(&name) {
        return catalog(name);
    }
    let path = Path::new(name);
    if !path.exists() {
        return Err(Error::UnknownModel(name.to_string()));
    }
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: name.to_string(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}

fn cmd_simulate(args: SimulateArgs) -> Result<Output> {
    let spec = load_model(&args.model)?;
    let series = simulate(
        &spec,
        args.n,
        crate::montecarlo::SeedState::from_u64(args.seed),
    )?;
    let header = default_header(spec.k);
    let summary = match &args.out {
        Some(path) => {
            write_csv(path, &header, series.values())?;
            format!(
                "simulated {} observations of {} (k = {}) with seed {} to {}\n",
                args.n,
                args.model,
                spec.k,
                args.seed,
                path.display()
            )
        }
        None => {
            let mut buf = Vec::new();
            write_csv_to(&mut buf, &header, series.values())?;
            String::from_utf8(buf).expect("csv output is utf-8")
        }
    };
    Ok(Output {
        command: "simulate",
        seed: Some(args.seed),
        settings: serde_json::to_value(&args)?,
        report: None,
        workers: 1,
        out: None,
        summary,
    })
}

fn cmd_fit(args: FitArgs) -> Result<Output> {
    let series = read_csv(&args.input)?.into_series();
    let fit = fit_var(&series, args.order, !args.no_intercept)?;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "VAR({}) fit, n = {}, n_eff = {}, k = {}{}",
        fit.order,
        series.n(),
        fit.n_eff(),
        fit.k(),
        if fit.with_intercept {
            ""
        } else {
            ", no intercept"
        }
    );
    if fit.with_intercept {
        let _ = writeln!(s, "intercept: {}", fmt_row(&fit.intercept));
    }
    for (i, phi) in fit.phi_hat.iter().enumerate() {
        let _ = writeln!(s, "Phi{}:", i + 1);
        for r in 0..phi.rows() {
            let _ = writeln!(s, "  {}", fmt_row(phi.row(r)));
        }
    }
    let _ = writeln!(s, "residual covariance:");
    for r in 0..fit.gamma0_hat.rows() {
        let _ = writeln!(s, "  {}", fmt_row(fit.gamma0_hat.row(r)));
    }
    Ok(Output {
        command: "fit",
        seed: None,
        settings: serde_json::to_value(&args)?,
        report: Some(serde_json::to_value(&fit)?),
        workers: 1,
        out: args.out,
        summary: s,
    })
}

fn fmt_row(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:>10.4}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn fmt_stat(v: f64) -> String {
    if v.is_finite() {
        format!("{v:>12.4}")
    } else {
        format!("{:>12}", "inf")
    }
}

fn cmd_test(args: TestArgs) -> Result<Output> {
    let series = read_csv(&args.input)?.into_series();
    let statistic = Statistic::from(args.stat);
    let transform = ResidualTransform::from(args.transform);
    let with_intercept = !args.no_intercept;
    let mut s = String::new();
    let (report, seed) = match args.method {
        MethodArg::Chi2 => {
            let r = chi2_test(
                &series,
                args.order,
                statistic,
                &args.lags,
                transform,
                with_intercept,
            )?;
            let _ = writeln!(
                s,
                "{} statistic, VAR({}) fit, n = {}, n_eff = {}, chi-square approximation",
                statistic.label(),
                r.order,
                r.n,
                r.n_eff
            );
            let _ = writeln!(
                s,
                "{:>5} {:>12} {:>10} {:>10} {:>10}",
                "lag", "statistic", "a", "b", "p-value"
            );
            for l in &r.lags {
                let _ = writeln!(
                    s,
                    "{:>5} {} {:>10.4} {:>10.4} {:>10.4}",
                    l.lag,
                    fmt_stat(l.observed),
                    l.a,
                    l.b,
                    l.p_value
                );
            }
            (serde_json::to_value(&r)?, None)
        }
        MethodArg::Mc => {
            let config = McConfig {
                replicates: args.reps,
                master_seed: args.seed,
                innovations: args.innovations.into(),
                transform,
                statistic,
                lags: args.lags.clone(),
                workers: args.workers,
                with_intercept,
            };
            let r = mc_test(&series, args.order, &config)?;
            let _ = writeln!(
                s,
                "{} statistic, VAR({}) fit, n = {}, n_eff = {}, Monte-Carlo test with {} replicates, seed {}",
                statistic.label(),
                r.order,
                r.n,
                r.n_eff,
                r.replicates,
                r.seed
            );
            let _ = writeln!(
                s,
                "{:>5} {:>12} {:>10} {:>10} {:>8}",
                "lag", "statistic", "p-value", "margin", "non-pd"
            );
            for l in &r.lags {
                let _ = writeln!(
                    s,
                    "{:>5} {} {:>10.4} {:>10.4} {:>8}",
                    l.lag,
                    fmt_stat(l.observed),
                    l.p_hat,
                    l.margin_of_error,
                    l.non_pd_replicates
                );
            }
            (serde_json::to_value(&r)?, Some(args.seed))
        }
    };
    Ok(Output {
        command: "test",
        seed,
        settings: serde_json::to_value(&args)?,
        report: Some(report),
        workers: args.workers,
        out: args.out,
        summary: s,
    })
}

fn run_study_command(
    command: &'static str,
    cfg: StudyConfig,
    settings: serde_json::Value,
    common: &StudyCommon,
) -> Result<Output> {
    let report = thread_pool(common.workers)?.install(|| run_study(&cfg))?;
    Ok(Output {
        command,
        seed: Some(cfg.seed),
        settings,
        summary: render_table(&report),
        report: Some(serde_json::to_value(&report)?),
        workers: common.workers,
        out: common.out.clone(),
    })
}

fn study_config(mut cfg: StudyConfig, common: &StudyCommon, fit_order: usize) -> StudyConfig {
    cfg.trials = common.trials;
    cfg.reps = common.reps;
    cfg.seed = common.seed;
    cfg.alpha = common.alpha;
    cfg.fit_order = fit_order;
    cfg
}

fn cmd_size_study(mut args: SizeStudyArgs) -> Result<Output> {
    if args.common.n.is_empty() {
        args.common.n = vec![100, 200, 500];
    }
    if args.common.lags.is_empty() {
        args.common.lags = vec![5, 10, 15, 20, 25, 30];
    }
    let mut cfg = StudyConfig::size(
        args.phi.clone(),
        args.common.n.clone(),
        args.common.lags.clone(),
    );
    cfg.method = args.method.into();
    let cfg = study_config(cfg, &args.common, args.fit_order);
    run_study_command(
        "size-study",
        cfg,
        serde_json::to_value(&args)?,
        &args.common,
    )
}

fn cmd_power_study(mut args: PowerStudyArgs) -> Result<Output> {
    if args.common.n.is_empty() {
        args.common.n = vec![50, 100, 200];
    }
    if args.common.lags.is_empty() {
        args.common.lags = vec![5, 10, 15, 20, 30];
    }
    let cfg = StudyConfig::power(
        args.model.clone(),
        args.common.n.clone(),
        args.common.lags.clone(),
    );
    let cfg = study_config(cfg, &args.common, args.fit_order);
    run_study_command(
        "power-study",
        cfg,
        serde_json::to_value(&args)?,
        &args.common,
    )
}

fn is_usage_error(e: &Error) -> bool {
    matches!(e, Error::InvalidConfig(_) | Error::UnknownModel(_))
}

fn execute(argv: &[String], start: Instant) -> std::result::Result<(), (i32, String)> {
    let cli = Cli::try_parse_from(argv).map_err(|e| {
        let code = if e.use_stderr() { 1 } else { 0 };
        (code, e.render().to_string())
    })?;
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Test(a) => cmd_test(a),
        Command::SizeStudy(a) => cmd_size_study(a),
        Command::PowerStudy(a) => cmd_power_study(a),
    };
    let output = result.map_err(|e| {
        (
            if is_usage_error(&e) { 1 } else { 2 },
            format!("error: {e}\n"),
        )
    })?;
    print!("{}", output.summary);
    if let (Some(report), Some(path)) = (output.report, &output.out) {
        let doc = ReportDocument {
            tool: TOOL.into(),
            version: VERSION.into(),
            command: output.command.into(),
            seed: output.seed,
            settings: output.settings,
            report,
            runtime: RuntimeInfo {
                argv: argv.to_vec(),
                workers: output.workers,
                out: Some(path.display().to_string()),
                elapsed_ms: start.elapsed().as_millis(),
            },
        };
        let text = doc.to_json().map_err(|e| (2, format!("error: {e}\n")))?;
        std::fs::write(path, text).map_err(|e| (2, format!("error: {}: {e}\n", path.display())))?;
    }
    Ok(())
}

/// Runs the command line `argv` (program name first) and returns the exit
/// status.
pub fn run(argv: &[String]) -> i32 {
    let start = Instant::now();
    match execute(argv, start) {
        Ok(()) => 0,
        Err((code, message)) => {
            if code == 0 {
                print!("{message}");
            } else {
                eprint!("{message}");
            }
            let _ = std::io::stdout().flush();
            code
        }
    }
}
