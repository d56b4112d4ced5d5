//! Size and power experiments: repeated simulation from catalog models,
//! VAR fitting, and rejection counting at a nominal level.
//!
//! Every trial draws its data and its Monte-Carlo replicates from seeds
//! derived from `(master seed, model, n, trial)`, so each cell of the table
//! is reproducible on its own and independent of the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{ab_params, approx_pvalue, AbSource};
use crate::diagnostics::{statistics_for_lags, ResidualTransform, Statistic};
use crate::error::{Error, Result};
use crate::estimate::fit_var;
use crate::montecarlo::{
    derive_seed, mc_run, sub_master, validate_lags, Innovations, McRunSpec, MAX_ATTEMPTS,
    MIN_REPLICATES,
};
use crate::varma::{catalog, simulate, ModelSpec, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    /// `D_m` under the null, `a·χ²_b` and/or Monte-Carlo p-values.
    Size,
    /// `D_m` against `Q̃_m` under misspecification, Monte-Carlo p-values.
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyMethod {
    Chi2,
    Mc,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub kind: StudyKind,
    pub models: Vec<String>,
    pub ns: Vec<usize>,
    pub lags: Vec<usize>,
    pub trials: usize,
    pub reps: usize,
    pub seed: u64,
    pub fit_order: usize,
    pub method: StudyMethod,
    /// Reject when the p-value is at most this level.
    pub alpha: f64,
}

impl StudyConfig {
    pub fn size(models: Vec<String>, ns: Vec<usize>, lags: Vec<usize>) -> Self {
        StudyConfig {
            kind: StudyKind::Size,
            models,
            ns,
            lags,
            trials: 500,
            reps: 199,
            seed: 1,
            fit_order: 1,
            method: StudyMethod::Both,
            alpha: 0.05,
        }
    }

    pub fn power(models: Vec<String>, ns: Vec<usize>, lags: Vec<usize>) -> Self {
        StudyConfig {
            kind: StudyKind::Power,
            method: StudyMethod::Mc,
            ..StudyConfig::size(models, ns, lags)
        }
    }

    /// Column labels of one `n` group.
    pub fn columns(&self) -> Vec<&'static str> {
        match (self.kind, self.method) {
            (StudyKind::Power, _) => vec!["D", "Q~"],
            (StudyKind::Size, StudyMethod::Chi2) => vec!["aChi2_b"],
            (StudyKind::Size, StudyMethod::Mc) => vec!["MC"],
            (StudyKind::Size, StudyMethod::Both) => vec!["aChi2_b", "MC"],
        }
    }

    fn uses_chi2(&self) -> bool {
        self.kind == StudyKind::Size && self.method != StudyMethod::Mc
    }

    fn uses_mc(&self) -> bool {
        self.kind == StudyKind::Power || self.method != StudyMethod::Chi2
    }

    fn mc_stats(&self) -> &'static [Statistic] {
        match self.kind {
            StudyKind::Size => &[Statistic::Gv],
            StudyKind::Power => &[Statistic::Gv, Statistic::QModified],
        }
    }

    fn validate(&self) -> Result<Vec<ModelSpec>> {
        validate_lags(&self.lags)?;
        if self.models.is_empty() || self.ns.is_empty() {
            return Err(Error::InvalidConfig(
                "no models or sample sizes given".into(),
            ));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.uses_mc() && self.reps < MIN_REPLICATES {
            return Err(Error::InvalidConfig(format!(
                "at least {MIN_REPLICATES} replicates required, got {}",
                self.reps
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "level {} not in (0, 1)",
                self.alpha
            )));
        }
        if self.uses_chi2() && self.lags[0] <= self.fit_order {
            return Err(Error::DegenerateDf(format!(
                "every lag must exceed the fitted order {}",
                self.fit_order
            )));
        }
        self.models.iter().map(|m| catalog(m)).collect()
    }
}

/// Rejection rates of one `(model, n, lag)` cell, in percent, in the order
/// of [`StudyConfig::columns`]. `None` marks a lag too large for `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyCell {
    pub model: String,
    pub n: usize,
    pub lag: usize,
    pub rates: Option<Vec<f64>>,
    /// Trials that entered the rates.
    pub trials_used: usize,
    /// Trials whose fitted VAR was not stationary and so could not be
    /// simulated; excluded from every column.
    pub nonstationary_fits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub columns: Vec<String>,
    pub cells: Vec<StudyCell>,
}

impl StudyReport {
    pub fn cell(&self, model: &str, n: usize, lag: usize) -> Option<&StudyCell> {
        self.cells
            .iter()
            .find(|c| c.model == model && c.n == n && c.lag == lag)
    }
}

/// FNV-1a; a stable label for a model name.
fn name_label(name: &str) -> u64 {
    name.bytes().fold(0xCBF2_9CE4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01B3)
    })
}

/// Rejection counts of one trial: `chi2[lag]` and `mc[stat][lag]`.
struct TrialOutcome {
    chi2: Vec<bool>,
    mc: Vec<Vec<bool>>,
}

fn simulate_trial(
    spec: &ModelSpec,
    n: usize,
    fit_order: usize,
    master: u64,
    trial: usize,
) -> Result<Series> {
    let mut last = None;
    for attempt in 0..MAX_ATTEMPTS {
        let series = simulate(spec, n, derive_seed(master, trial as u64, attempt))?;
        match fit_var(&series, fit_order, true) {
            Ok(_) => return Ok(series),
            Err(e) => last = Some(e),
        }
    }
    Err(Error::ReplicateFailure {
        replicate: trial,
        attempts: MAX_ATTEMPTS,
        reason: last.map(|e| e.to_string()).unwrap_or_default(),
    })
}

fn run_trial(
    cfg: &StudyConfig,
    spec: &ModelSpec,
    n: usize,
    lags: &[usize],
    cell_master: u64,
    trial: usize,
) -> Result<Option<TrialOutcome>> {
    let series = simulate_trial(spec, n, cfg.fit_order, sub_master(cell_master, 0), trial)?;
    let mc = if cfg.uses_mc() {
        let run = McRunSpec {
            order: cfg.fit_order,
            with_intercept: true,
            innovations: Innovations::Gaussian,
            transform: ResidualTransform::Identity,
            lags,
            stats: cfg.mc_stats(),
            replicates: cfg.reps,
            master_seed: sub_master(sub_master(cell_master, 1), trial as u64),
        };
        match mc_run(&series, &run) {
            Ok(r) => r
                .results
                .iter()
                .map(|s| s.lags.iter().map(|l| l.p_hat <= cfg.alpha).collect())
                .collect(),
            Err(Error::InvalidModel(_)) => return Ok(None),
            Err(e) => return Err(e),
        }
    } else {
        vec![]
    };
    let chi2 = if cfg.uses_chi2() {
        let fit = fit_var(&series, cfg.fit_order, true)?;
        let d = statistics_for_lags(&fit.residuals, lags, &[Statistic::Gv])?.remove(0);
        lags.iter()
            .zip(d)
            .map(|(&m, v)| {
                let ab = ab_params(AbSource::Closed {
                    k: fit.k(),
                    m,
                    p: cfg.fit_order,
                    q: 0,
                })?;
                Ok(approx_pvalue(v.value, ab) <= cfg.alpha)
            })
            .collect::<Result<_>>()?
    } else {
        vec![]
    };
    Ok(Some(TrialOutcome { chi2, mc }))
}

/// Runs the study on the current rayon pool.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyReport> {
    let specs = cfg.validate()?;
    let mut cells = Vec::new();
    for (name, spec) in cfg.models.iter().zip(&specs) {
        let k = spec.k;
        for &n in &cfg.ns {
            let n_eff = n.saturating_sub(cfg.fit_order);
            let lags: Vec<usize> = cfg
                .lags
                .iter()
                .copied()
                .filter(|&m| n_eff > (m + 1) * k)
                .collect();
            let cell_master = sub_master(sub_master(cfg.seed, name_label(name)), n as u64);
            let outcomes: Vec<Option<TrialOutcome>> = if lags.is_empty() {
                vec![]
            } else {
                (0..cfg.trials)
                    .into_par_iter()
                    .map(|t| run_trial(cfg, spec, n, &lags, cell_master, t))
                    .collect::<Result<_>>()?
            };
            let used: Vec<&TrialOutcome> = outcomes.iter().flatten().collect();
            let nonstationary = outcomes.len() - used.len();
            let rate = |hits: usize| 100.0 * hits as f64 / used.len() as f64;
            for &lag in &cfg.lags {
                let rates = lags
                    .iter()
                    .position(|&m| m == lag)
                    .filter(|_| !used.is_empty())
                    .map(|li| {
                        let mut r = Vec::new();
                        if cfg.uses_chi2() {
                            r.push(rate(used.iter().filter(|o| o.chi2[li]).count()));
                        }
                        if cfg.uses_mc() {
                            for si in 0..cfg.mc_stats().len() {
                                r.push(rate(used.iter().filter(|o| o.mc[si][li]).count()));
                            }
                        }
                        r
                    });
                cells.push(StudyCell {
                    model: name.clone(),
                    n,
                    lag,
                    trials_used: if rates.is_some() { used.len() } else { 0 },
                    nonstationary_fits: if rates.is_some() { nonstationary } else { 0 },
                    rates,
                });
            }
        }
    }
    Ok(StudyReport {
        config: cfg.clone(),
        columns: cfg.columns().iter().map(|c| c.to_string()).collect(),
        cells,
    })
}

/// Plain-text table: one block of rows per model, one column group per `n`.
pub fn render_table(report: &StudyReport) -> String {
    let cfg = &report.config;
    let decimals = if cfg.kind == StudyKind::Size { 1 } else { 0 };
    let width = 8;
    let group = report.columns.len() * width;
    let mut out = String::new();
    out.push_str(&format!("{:<8}{:>4} ", "", ""));
    for n in &cfg.ns {
        out.push_str(&format!(" |{:^group$}", format!("n={n}")));
    }
    out.push('\n');
    out.push_str(&format!("{:<8}{:>4} ", "model", "m"));
    for _ in &cfg.ns {
        out.push_str(" |");
        for c in &report.columns {
            out.push_str(&format!("{c:>width$}"));
        }
    }
    out.push('\n');
    for model in &cfg.models {
        for &lag in &cfg.lags {
            out.push_str(&format!("{model:<8}{lag:>4} "));
            for &n in &cfg.ns {
                out.push_str(" |");
                match report.cell(model, n, lag).and_then(|c| c.rates.as_ref()) {
                    Some(rates) => {
                        for r in rates {
                            out.push_str(&format!("{r:>width$.decimals$}"));
                        }
                    }
                    None => {
                        for _ in &report.columns {
                            out.push_str(&format!("{:>width$}", "NA"));
                        }
                    }
                }
            }
            out.push('\n');
        }
    }
    let excluded: usize = report
        .cells
        .iter()
        .filter(|c| c.lag == cfg.lags[0])
        .map(|c| c.nonstationary_fits)
        .sum();
    out.push_str(&format!(
        "rejection rate in percent at level {}; {} trials per cell, {} Monte-Carlo replicates",
        cfg.alpha, cfg.trials, cfg.reps
    ));
    if excluded > 0 {
        out.push_str(&format!(
            "; {excluded} trials with non-stationary fits excluded"
        ));
    }
    out.push('\n');
    out
}
