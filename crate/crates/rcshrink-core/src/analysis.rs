//! Error metrics, the replicated simulation study, and the risk engine
//! (classical risk curves and Bayes risks).
//!
//! Replications are keyed RNG streams, so the runner can execute them in any
//! order — or in parallel — and still produce bit-identical reports.
//! Aggregation uses pairwise summation over the ordered per-replication
//! records, which keeps results independent of the worker count.

use crate::dwt::{build_filter, forward, inverse, Boundary, WaveletDecomposition};
use crate::error::{Error, Result};
use crate::policies::{
    elicit_alpha, elicit_tau, estimate_sigma, select_threshold, PolicyKind, PolicyScope,
    ThresholdPolicy,
};
use crate::quad::{gauss_hermite_cached, integrate, pairwise_sum, QuadratureSpec};
use crate::rng::{scenario_hash, NoiseStream, TAG_NOISE};
use crate::rules::{
    beta_slab_rule, raised_cosine_rule, shrink_decomposition, BetaSlabParams, RaisedCosineParams,
    ShrinkRule,
};
use crate::signals::{dj_function, rescale_to_sd, DjFunction};
use crate::stats::{median_in_place, sample_sd};
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::fmt::Write as _;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Per-replication error summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorMetrics {
    /// Mean squared error (1/n)Σ(f̂ − f)².
    pub mse: f64,
    /// Median absolute error (even-length median = midpoint).
    pub mae: f64,
}

/// MSE and median absolute error between an estimate and the truth.
pub fn error_metrics(f_hat: &[f64], f: &[f64]) -> Result<ErrorMetrics> {
    if f_hat.len() != f.len() {
        return Err(Error::structure(format!(
            "length mismatch: estimate {} vs truth {}",
            f_hat.len(),
            f.len()
        )));
    }
    if f.is_empty() {
        return Err(Error::structure("cannot score empty vectors"));
    }
    let sq: Vec<f64> = f_hat.iter().zip(f).map(|(a, b)| (a - b) * (a - b)).collect();
    let mse = pairwise_sum(&sq) / f.len() as f64;
    let mut abs: Vec<f64> = f_hat.iter().zip(f).map(|(a, b)| (a - b).abs()).collect();
    let mae = median_in_place(&mut abs);
    Ok(ErrorMetrics { mse, mae })
}

/// A shrinkage method to benchmark: one of the Bayes rules or soft
/// thresholding under a policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RuleDescriptor {
    RaisedCosine,
    BetaSlab { a: f64 },
    Soft(PolicyKind),
}

impl RuleDescriptor {
    /// Stable identifier used in reports and on the command line.
    pub fn id(&self) -> String {
        match self {
            RuleDescriptor::RaisedCosine => "raised-cosine".to_string(),
            RuleDescriptor::BetaSlab { a } => {
                if *a == a.trunc() && a.abs() < 1e6 {
                    format!("beta({0},{0})", *a as i64)
                } else {
                    format!("beta({0},{0})", a)
                }
            }
            RuleDescriptor::Soft(kind) => format!("soft-{}", kind.name()),
        }
    }

    /// All six methods benchmarked in the study.
    pub fn study_set() -> Vec<RuleDescriptor> {
        vec![
            RuleDescriptor::RaisedCosine,
            RuleDescriptor::BetaSlab { a: 1.0 },
            RuleDescriptor::Soft(PolicyKind::Universal),
            RuleDescriptor::Soft(PolicyKind::Fdr),
            RuleDescriptor::Soft(PolicyKind::Cv),
            RuleDescriptor::Soft(PolicyKind::Sure),
        ]
    }
}

impl std::str::FromStr for RuleDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        if lower == "raised-cosine" {
            return Ok(RuleDescriptor::RaisedCosine);
        }
        if let Some(kind) = lower.strip_prefix("soft-") {
            return Ok(RuleDescriptor::Soft(kind.parse()?));
        }
        if let Some(args) = lower.strip_prefix("beta(").and_then(|r| r.strip_suffix(')')) {
            let parts: Vec<&str> = args.split(',').map(str::trim).collect();
            let a: f64 = parts[0]
                .parse()
                .map_err(|_| Error::parameter(format!("cannot parse beta shape in '{s}'")))?;
            if parts.len() == 2 && parts[1] != parts[0] {
                return Err(Error::parameter(format!(
                    "beta slab is symmetric; got distinct shapes in '{s}'"
                )));
            }
            if parts.len() > 2 {
                return Err(Error::parameter(format!("malformed beta rule '{s}'")));
            }
            return Ok(RuleDescriptor::BetaSlab { a });
        }
        Err(Error::parameter(format!(
            "unknown rule '{s}' (expected raised-cosine, beta(a,a), or soft-<policy>)"
        )))
    }
}

/// Mixture-weight policy for the Bayes rules inside the study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaMode {
    /// One α for every level (the study fixes 0.9).
    Fixed(f64),
    /// Level-dependent α(j) = 1 − 1/(j − J0 + 1)^γ.
    LevelDependent { gamma: f64 },
}

/// Which σ the rules see.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaMode {
    /// Robust estimate from the finest detail level (the default).
    Estimated,
    /// The generating σ = SD(f)/SNR.
    True,
}

/// Full description of a simulation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub functions: Vec<DjFunction>,
    pub sizes: Vec<usize>,
    pub snrs: Vec<f64>,
    pub rules: Vec<RuleDescriptor>,
    pub replications: usize,
    pub master_seed: u64,
    pub vanishing_moments: usize,
    /// Primary resolution level; the study shrinks every detail level.
    pub j0: usize,
    pub alpha_mode: AlphaMode,
    pub sigma_mode: SigmaMode,
    /// Target SD for the clean functions.
    pub target_sd: f64,
    pub quad: QuadratureSpec,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            functions: DjFunction::ALL.to_vec(),
            sizes: vec![128, 512],
            snrs: vec![1.0],
            rules: RuleDescriptor::study_set(),
            replications: 200,
            master_seed: 2024,
            vanishing_moments: 10,
            j0: 0,
            alpha_mode: AlphaMode::Fixed(0.9),
            sigma_mode: SigmaMode::Estimated,
            target_sd: 7.0,
            quad: QuadratureSpec::default(),
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.functions.is_empty() || self.sizes.is_empty() || self.snrs.is_empty() {
            return Err(Error::parameter("simulation grid has an empty axis"));
        }
        if self.rules.is_empty() {
            return Err(Error::parameter("no rules selected"));
        }
        if self.replications == 0 {
            return Err(Error::parameter("need at least one replication"));
        }
        for &n in &self.sizes {
            if n < 8 || !n.is_power_of_two() {
                return Err(Error::parameter(format!("sample size must be dyadic ≥ 8, got {n}")));
            }
            if self.j0 >= n.trailing_zeros() as usize {
                return Err(Error::parameter(format!(
                    "primary level {} too deep for n = {n}",
                    self.j0
                )));
            }
        }
        for &snr in &self.snrs {
            if !(snr > 0.0) {
                return Err(Error::parameter(format!("SNR must be positive, got {snr}")));
            }
        }
        if let AlphaMode::Fixed(alpha) = self.alpha_mode {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::parameter(format!("alpha must lie in (0,1), got {alpha}")));
            }
        }
        if let AlphaMode::LevelDependent { gamma } = self.alpha_mode {
            if !(gamma > 0.0 && gamma.is_finite()) {
                return Err(Error::parameter(format!("gamma must be positive, got {gamma}")));
            }
        }
        if !(self.target_sd > 0.0 && self.target_sd.is_finite()) {
            return Err(Error::parameter(format!(
                "target SD must be positive, got {}",
                self.target_sd
            )));
        }
        Ok(())
    }
}

/// One (cell, replication) outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub function: String,
    pub n: usize,
    pub snr: f64,
    pub rule: String,
    pub replication: usize,
    pub mse: f64,
    pub mae: f64,
}

/// Aggregates across a cell's replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellAggregate {
    pub function: String,
    pub n: usize,
    pub snr: f64,
    pub rule: String,
    pub replications: usize,
    pub amse: f64,
    pub sd_mse: f64,
    pub amae: f64,
    pub sd_mae: f64,
}

/// A cell that could not be completed, with the first error encountered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub function: String,
    pub n: usize,
    pub snr: f64,
    pub rule: String,
    pub message: String,
}

/// Everything a simulation run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub records: Vec<ReplicationRecord>,
    pub cells: Vec<CellAggregate>,
    pub failures: Vec<CellFailure>,
}

impl SimulationReport {
    /// The aggregate for one cell, if it completed.
    pub fn cell(&self, function: &str, n: usize, snr: f64, rule: &str) -> Option<&CellAggregate> {
        self.cells
            .iter()
            .find(|c| c.function == function && c.n == n && c.snr == snr && c.rule == rule)
    }
}

/// Outcome of one replication for every rule: (mse, mae) or the error text.
type ReplicationRow = Vec<std::result::Result<(f64, f64), String>>;

fn replicate(
    config: &SimulationConfig,
    f: &[f64],
    sigma_true: f64,
    scenario: u64,
    replication: usize,
) -> ReplicationRow {
    let fail_all = |msg: String| vec![Err(msg); config.rules.len()];
    let filter = match build_filter(config.vanishing_moments) {
        Ok(filter) => filter,
        Err(e) => return fail_all(e.to_string()),
    };
    let mut stream = NoiseStream::new(config.master_seed, scenario, replication as u64, TAG_NOISE);
    let y: Vec<f64> = if sigma_true == 0.0 {
        f.to_vec()
    } else {
        f.iter().map(|&v| v + sigma_true * stream.standard_normal()).collect()
    };
    let dec = match forward(&y, &filter, config.j0, Boundary::Periodic) {
        Ok(dec) => dec,
        Err(e) => return fail_all(e.to_string()),
    };
    let sigma = match config.sigma_mode {
        SigmaMode::Estimated => match estimate_sigma(&dec) {
            Ok(s) => s,
            Err(e) => return fail_all(e.to_string()),
        },
        SigmaMode::True => sigma_true,
    };
    let tau = match elicit_tau(&dec) {
        Ok(t) => t,
        Err(e) => return fail_all(e.to_string()),
    };

    config
        .rules
        .iter()
        .map(|rule| {
            let shrunk = apply_rule(config, &dec, rule, sigma, tau, &filter)?;
            let f_hat = inverse(&shrunk, &filter).map_err(|e| e.to_string())?;
            let metrics = error_metrics(&f_hat, f).map_err(|e| e.to_string())?;
            Ok((metrics.mse, metrics.mae))
        })
        .collect()
}

fn apply_rule(
    config: &SimulationConfig,
    dec: &WaveletDecomposition,
    rule: &RuleDescriptor,
    sigma: f64,
    tau: f64,
    filter: &crate::dwt::QuadratureFilter,
) -> std::result::Result<WaveletDecomposition, String> {
    let full_range = dec.j0..=dec.j_end() - 1;
    let alpha_at = |j: usize| -> std::result::Result<f64, String> {
        match config.alpha_mode {
            AlphaMode::Fixed(alpha) => Ok(alpha),
            // The elicitation yields α(J0) = 0; the rules need α ∈ (0,1),
            // so the pure-slab limit is approximated from above.
            AlphaMode::LevelDependent { gamma } => elicit_alpha(j, dec.j0, gamma)
                .map(|a| a.max(1e-12))
                .map_err(|e| e.to_string()),
        }
    };
    match rule {
        RuleDescriptor::RaisedCosine => {
            let mut out = dec.clone();
            for j in full_range {
                let params = RaisedCosineParams::new(alpha_at(j)?, tau, sigma)
                    .map_err(|e| e.to_string())?;
                let level = out.detail_mut(j).expect("level in range");
                for c in level.iter_mut() {
                    *c = raised_cosine_rule(*c, &params, &config.quad).map_err(|e| e.to_string())?;
                }
            }
            Ok(out)
        }
        RuleDescriptor::BetaSlab { a } => {
            let mut out = dec.clone();
            for j in full_range {
                let params = BetaSlabParams::new(alpha_at(j)?, tau, *a, sigma)
                    .map_err(|e| e.to_string())?;
                let level = out.detail_mut(j).expect("level in range");
                for c in level.iter_mut() {
                    *c = beta_slab_rule(*c, &params, &config.quad).map_err(|e| e.to_string())?;
                }
            }
            Ok(out)
        }
        RuleDescriptor::Soft(kind) => {
            // The study applies every policy globally (one λ from the pooled
            // coefficients), including SURE.
            let policy = ThresholdPolicy::new(*kind).with_scope(PolicyScope::Global);
            let lambdas =
                select_threshold(dec, &policy, sigma, filter).map_err(|e| e.to_string())?;
            shrink_decomposition(dec, &ShrinkRule::SoftByLevel(&lambdas), full_range, &config.quad)
                .map_err(|e| e.to_string())
        }
    }
}

fn collect_rows(
    config: &SimulationConfig,
    f: &[f64],
    sigma_true: f64,
    scenario: u64,
    parallel: bool,
) -> Vec<ReplicationRow> {
    #[cfg(feature = "parallel")]
    if parallel {
        return (0..config.replications)
            .into_par_iter()
            .map(|r| replicate(config, f, sigma_true, scenario, r))
            .collect();
    }
    let _ = parallel;
    (0..config.replications).map(|r| replicate(config, f, sigma_true, scenario, r)).collect()
}

fn run_simulation_inner(config: &SimulationConfig, parallel: bool) -> Result<SimulationReport> {
    config.validate()?;
    let mut report =
        SimulationReport { records: Vec::new(), cells: Vec::new(), failures: Vec::new() };
    for &function in &config.functions {
        for &n in &config.sizes {
            let clean = rescale_to_sd(&dj_function(function, n)?.values, config.target_sd)?;
            for &snr in &config.snrs {
                let sigma_true = if snr.is_finite() { config.target_sd / snr } else { 0.0 };
                let scenario = scenario_hash(&format!("{function}|{n}|{snr}"));
                let rows = collect_rows(config, &clean, sigma_true, scenario, parallel);
                for (rule_index, rule) in config.rules.iter().enumerate() {
                    let rule_id = rule.id();
                    let outcomes: Vec<&std::result::Result<(f64, f64), String>> =
                        rows.iter().map(|row| &row[rule_index]).collect();
                    if let Some(bad) = outcomes.iter().enumerate().find(|(_, o)| o.is_err()) {
                        report.failures.push(CellFailure {
                            function: function.to_string(),
                            n,
                            snr,
                            rule: rule_id,
                            message: format!(
                                "replication {}: {}",
                                bad.0,
                                bad.1.as_ref().unwrap_err()
                            ),
                        });
                        continue;
                    }
                    let mses: Vec<f64> =
                        outcomes.iter().map(|o| o.as_ref().unwrap().0).collect();
                    let maes: Vec<f64> =
                        outcomes.iter().map(|o| o.as_ref().unwrap().1).collect();
                    for (r, (&mse, &mae)) in mses.iter().zip(&maes).enumerate() {
                        report.records.push(ReplicationRecord {
                            function: function.to_string(),
                            n,
                            snr,
                            rule: rule.id(),
                            replication: r,
                            mse,
                            mae,
                        });
                    }
                    report.cells.push(CellAggregate {
                        function: function.to_string(),
                        n,
                        snr,
                        rule: rule.id(),
                        replications: config.replications,
                        amse: pairwise_sum(&mses) / mses.len() as f64,
                        sd_mse: sample_sd(&mses),
                        amae: pairwise_sum(&maes) / maes.len() as f64,
                        sd_mae: sample_sd(&maes),
                    });
                }
            }
        }
    }
    Ok(report)
}

/// Run the simulation grid, fanning replications out across the rayon pool
/// when the `parallel` feature is enabled. Bit-identical to
/// [`run_simulation_seq`] by construction.
pub fn run_simulation(config: &SimulationConfig) -> Result<SimulationReport> {
    run_simulation_inner(config, true)
}

/// Single-threaded reference runner.
pub fn run_simulation_seq(config: &SimulationConfig) -> Result<SimulationReport> {
    run_simulation_inner(config, false)
}

/// Integration contract for the risk engine.
#[derive(Debug, Clone)]
pub struct RiskIntegration {
    /// Gauss–Hermite nodes for expectations over d ~ N(θ, σ²).
    pub gh_nodes: usize,
    /// Tolerances for the rule's internal integrals.
    pub quad: QuadratureSpec,
}

impl Default for RiskIntegration {
    fn default() -> Self {
        RiskIntegration { gh_nodes: 61, quad: QuadratureSpec::default() }
    }
}

/// Squared bias, variance, and classical risk of the raised-cosine rule on a
/// θ grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskCurves {
    pub theta_grid: Vec<f64>,
    pub bias_sq: Vec<f64>,
    pub variance: Vec<f64>,
    pub risk: Vec<f64>,
    pub alpha: f64,
    pub tau: f64,
    pub sigma: f64,
}

/// First two moments of δ(D) for D ~ N(θ, σ²) by Gauss–Hermite quadrature.
fn rule_moments(
    params: &RaisedCosineParams,
    theta: f64,
    integration: &RiskIntegration,
) -> Result<(f64, f64)> {
    let (nodes, weights) = gauss_hermite_cached(integration.gh_nodes);
    let scale = std::f64::consts::SQRT_2 * params.sigma;
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for (&x, &w) in nodes.iter().zip(weights) {
        let value = raised_cosine_rule(theta + scale * x, params, &integration.quad)?;
        m1 += w * value;
        m2 += w * value * value;
    }
    let norm = std::f64::consts::PI.sqrt();
    Ok((m1 / norm, m2 / norm))
}

/// Classical risk R(θ) = E[(δ(D) − θ)²] at a single θ.
pub fn classical_risk(
    params: &RaisedCosineParams,
    theta: f64,
    integration: &RiskIntegration,
) -> Result<f64> {
    let (m1, m2) = rule_moments(params, theta, integration)?;
    Ok(m2 - 2.0 * theta * m1 + theta * theta)
}

fn risk_point(
    params: &RaisedCosineParams,
    theta: f64,
    integration: &RiskIntegration,
) -> Result<(f64, f64, f64)> {
    let (m1, m2) = rule_moments(params, theta, integration)?;
    let bias_sq = (m1 - theta) * (m1 - theta);
    let variance = m2 - m1 * m1;
    let risk = m2 - 2.0 * theta * m1 + theta * theta;
    Ok((bias_sq, variance, risk))
}

fn risk_curves_inner(
    params: &RaisedCosineParams,
    theta_grid: &[f64],
    integration: &RiskIntegration,
    parallel: bool,
) -> Result<RiskCurves> {
    params.validate()?;
    if theta_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::parameter("theta grid must be finite"));
    }
    let points: Vec<Result<(f64, f64, f64)>> = {
        #[cfg(feature = "parallel")]
        if parallel {
            theta_grid.par_iter().map(|&t| risk_point(params, t, integration)).collect()
        } else {
            theta_grid.iter().map(|&t| risk_point(params, t, integration)).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = parallel;
            theta_grid.iter().map(|&t| risk_point(params, t, integration)).collect()
        }
    };
    let mut curves = RiskCurves {
        theta_grid: theta_grid.to_vec(),
        bias_sq: Vec::with_capacity(theta_grid.len()),
        variance: Vec::with_capacity(theta_grid.len()),
        risk: Vec::with_capacity(theta_grid.len()),
        alpha: params.alpha,
        tau: params.tau,
        sigma: params.sigma,
    };
    for point in points {
        let (bias_sq, variance, risk) = point?;
        curves.bias_sq.push(bias_sq);
        curves.variance.push(variance);
        curves.risk.push(risk);
    }
    Ok(curves)
}

/// Risk curves over a θ grid, parallel across grid points when enabled.
pub fn risk_curves(
    params: &RaisedCosineParams,
    theta_grid: &[f64],
    integration: &RiskIntegration,
) -> Result<RiskCurves> {
    risk_curves_inner(params, theta_grid, integration, true)
}

/// Single-threaded reference for [`risk_curves`].
pub fn risk_curves_seq(
    params: &RaisedCosineParams,
    theta_grid: &[f64],
    integration: &RiskIntegration,
) -> Result<RiskCurves> {
    risk_curves_inner(params, theta_grid, integration, false)
}

/// Bayes risk r = α·R(0) + (1−α)·∫ R(θ)·g(θ; τ) dθ, with the outer integral
/// evaluated adaptively to 1e-6 (both R and g are even, so it runs on (0, τ)
/// and doubles).
pub fn bayes_risk(params: &RaisedCosineParams, integration: &RiskIntegration) -> Result<f64> {
    params.validate()?;
    let at_zero = classical_risk(params, 0.0, integration)?;
    let outer = QuadratureSpec { relative_tolerance: 1e-6, ..QuadratureSpec::default() };
    let tau = params.tau;
    // integrate() takes a plain f64 closure; stash the first inner failure
    // and surface it afterwards.
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let integrand = |theta: f64| -> f64 {
        match classical_risk(params, theta, integration) {
            Ok(risk) => risk * crate::rules::raised_cosine_pdf(theta, tau).unwrap_or(0.0),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };
    let slab_part = 2.0 * integrate(&integrand, 0.0, tau, &outer)?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(params.alpha * at_zero + (1.0 - params.alpha) * slab_part)
}

fn push_float(line: &mut String, value: f64) {
    // 17 significant digits: enough to reproduce any f64 bit-exactly.
    let _ = write!(line, "{value:.16e}");
}

fn push_field(line: &mut String, field: &str) {
    // RFC 4180 quoting; rule ids like `beta(1,1)` embed the delimiter.
    if field.contains([',', '"', '\n']) {
        line.push('"');
        for ch in field.chars() {
            if ch == '"' {
                line.push('"');
            }
            line.push(ch);
        }
        line.push('"');
    } else {
        line.push_str(field);
    }
}

/// Per-replication records as CSV (`function,n,snr,rule,replication,mse,mae`).
pub fn records_to_csv(report: &SimulationReport) -> String {
    let mut out = String::from("function,n,snr,rule,replication,mse,mae\n");
    for r in &report.records {
        let mut line = String::new();
        push_field(&mut line, &r.function);
        let _ = write!(line, ",{},", r.n);
        push_float(&mut line, r.snr);
        line.push(',');
        push_field(&mut line, &r.rule);
        let _ = write!(line, ",{},", r.replication);
        push_float(&mut line, r.mse);
        line.push(',');
        push_float(&mut line, r.mae);
        line.push('\n');
        out.push_str(&line);
    }
    out
}

/// Cell aggregates as CSV
/// (`function,n,snr,rule,replications,amse,sd_mse,amae,sd_mae`).
pub fn aggregates_to_csv(report: &SimulationReport) -> String {
    let mut out = String::from("function,n,snr,rule,replications,amse,sd_mse,amae,sd_mae\n");
    for c in &report.cells {
        let mut line = String::new();
        push_field(&mut line, &c.function);
        let _ = write!(line, ",{},", c.n);
        push_float(&mut line, c.snr);
        line.push(',');
        push_field(&mut line, &c.rule);
        let _ = write!(line, ",{}", c.replications);
        for v in [c.amse, c.sd_mse, c.amae, c.sd_mae] {
            line.push(',');
            push_float(&mut line, v);
        }
        line.push('\n');
        out.push_str(&line);
    }
    out
}

/// The whole report (records, cells, failures) as pretty JSON.
pub fn report_to_json(report: &SimulationReport) -> Result<String> {
    serde_json::to_string_pretty(report)
        .map_err(|e| Error::structure(format!("report serialization failed: {e}")))
}

/// Risk curves as CSV (`theta,bias_sq,variance,risk`).
pub fn curves_to_csv(curves: &RiskCurves) -> String {
    let mut out = String::from("theta,bias_sq,variance,risk\n");
    for i in 0..curves.theta_grid.len() {
        let mut line = String::new();
        push_float(&mut line, curves.theta_grid[i]);
        for v in [curves.bias_sq[i], curves.variance[i], curves.risk[i]] {
            line.push(',');
            push_float(&mut line, v);
        }
        line.push('\n');
        out.push_str(&line);
    }
    out
}

/// Risk curves as pretty JSON.
pub fn curves_to_json(curves: &RiskCurves) -> Result<String> {
    serde_json::to_string_pretty(curves)
        .map_err(|e| Error::structure(format!("curve serialization failed: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_metrics_match_the_stated_conventions() {
        let f = vec![0.0; 4];
        assert_eq!(error_metrics(&f, &f).unwrap(), ErrorMetrics { mse: 0.0, mae: 0.0 });
        let alt = vec![1.0, -1.0, 1.0, -1.0];
        let m = error_metrics(&alt, &f).unwrap();
        assert_eq!(m.mse, 1.0);
        assert_eq!(m.mae, 1.0);
        let ramp = vec![0.0, 1.0, 2.0, 3.0];
        let m = error_metrics(&ramp, &f).unwrap();
        assert_eq!(m.mse, 3.5);
        assert_eq!(m.mae, 1.5);
        assert!(error_metrics(&f, &alt[..3]).is_err());
    }

    #[test]
    fn rule_descriptor_ids_roundtrip() {
        for rule in RuleDescriptor::study_set() {
            let parsed: RuleDescriptor = rule.id().parse().unwrap();
            assert_eq!(parsed, rule);
        }
        assert_eq!("beta(5,5)".parse::<RuleDescriptor>().unwrap(), RuleDescriptor::BetaSlab { a: 5.0 });
        assert!("beta(1,2)".parse::<RuleDescriptor>().is_err());
        assert!("hard".parse::<RuleDescriptor>().is_err());
    }

    #[test]
    fn config_validation_catches_bad_grids() {
        let mut config = SimulationConfig::default();
        config.sizes = vec![100];
        assert!(config.validate().is_err());
        let mut config = SimulationConfig::default();
        config.snrs = vec![-1.0];
        assert!(config.validate().is_err());
        let mut config = SimulationConfig::default();
        config.replications = 0;
        assert!(config.validate().is_err());
        let mut config = SimulationConfig::default();
        config.alpha_mode = AlphaMode::Fixed(1.0);
        assert!(config.validate().is_err());
        assert!(SimulationConfig::default().validate().is_ok());
    }

    #[test]
    fn noiseless_identity_cell_scores_zero() {
        let config = SimulationConfig {
            functions: vec![DjFunction::Heavisine],
            sizes: vec![128],
            snrs: vec![f64::INFINITY],
            rules: vec![RuleDescriptor::Soft(PolicyKind::Cv)],
            replications: 1,
            ..SimulationConfig::default()
        };
        let report = run_simulation_seq(&config).unwrap();
        assert!(report.failures.is_empty(), "{:?}", report.failures);
        let cell = &report.cells[0];
        // CV picks λ = 0 on noiseless data; the pipeline reduces to
        // IDWT∘DWT, exact up to roundoff.
        assert!(cell.amse < 1e-16, "AMSE {}", cell.amse);
    }

    #[test]
    fn failures_are_isolated_per_cell() {
        // An all-zero "signal" cannot be rescaled... so instead: a constant
        // function is impossible through the public grid; force failure via
        // a rule that needs τ > 0 on a noiseless blocks signal whose
        // decomposition still has nonzero details — instead use SNR sentinel
        // with true-σ mode: σ = 0 breaks the Bayes rule but not soft rules.
        let config = SimulationConfig {
            functions: vec![DjFunction::Blocks],
            sizes: vec![64],
            snrs: vec![f64::INFINITY],
            rules: vec![RuleDescriptor::RaisedCosine, RuleDescriptor::Soft(PolicyKind::Cv)],
            replications: 2,
            sigma_mode: SigmaMode::True,
            ..SimulationConfig::default()
        };
        let report = run_simulation_seq(&config).unwrap();
        assert_eq!(report.failures.len(), 1);
        assert_eq!(report.failures[0].rule, "raised-cosine");
        assert_eq!(report.cells.len(), 1);
        assert_eq!(report.cells[0].rule, "soft-cv");
        assert_eq!(report.records.len(), 2);
    }

    #[test]
    fn simulation_reports_are_deterministic() {
        let config = SimulationConfig {
            functions: vec![DjFunction::Doppler],
            sizes: vec![64],
            snrs: vec![3.0],
            rules: vec![RuleDescriptor::RaisedCosine, RuleDescriptor::Soft(PolicyKind::Universal)],
            replications: 3,
            ..SimulationConfig::default()
        };
        let a = run_simulation(&config).unwrap();
        let b = run_simulation(&config).unwrap();
        let c = run_simulation_seq(&config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c, "parallel and sequential runners must agree bit-for-bit");
        assert_eq!(records_to_csv(&a), records_to_csv(&c));

        let other_seed = SimulationConfig { master_seed: 3, ..config };
        let d = run_simulation(&other_seed).unwrap();
        assert_ne!(a, d);
    }

    #[test]
    fn csv_exports_roundtrip_bit_exactly() {
        let config = SimulationConfig {
            functions: vec![DjFunction::Bumps],
            sizes: vec![64],
            snrs: vec![1.0],
            rules: vec![RuleDescriptor::Soft(PolicyKind::Universal)],
            replications: 2,
            ..SimulationConfig::default()
        };
        let report = run_simulation(&config).unwrap();
        let csv = records_to_csv(&report);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "function,n,snr,rule,replication,mse,mae");
        for (line, record) in lines.zip(&report.records) {
            let cells: Vec<&str> = line.split(',').collect();
            assert_eq!(cells[0], record.function);
            assert_eq!(cells[1].parse::<usize>().unwrap(), record.n);
            assert_eq!(cells[2].parse::<f64>().unwrap().to_bits(), record.snr.to_bits());
            assert_eq!(cells[5].parse::<f64>().unwrap().to_bits(), record.mse.to_bits());
            assert_eq!(cells[6].parse::<f64>().unwrap().to_bits(), record.mae.to_bits());
        }
        let empty = SimulationReport { records: vec![], cells: vec![], failures: vec![] };
        assert_eq!(records_to_csv(&empty), "function,n,snr,rule,replication,mse,mae\n");
        assert_eq!(
            aggregates_to_csv(&empty),
            "function,n,snr,rule,replications,amse,sd_mse,amae,sd_mae\n"
        );

        let json = report_to_json(&report).unwrap();
        let parsed: SimulationReport = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed, report);
    }

    #[test]
    fn risk_identity_and_zero_theta_bias_hold() {
        let params = RaisedCosineParams::new(0.9, 3.0, 1.0).unwrap();
        let grid: Vec<f64> = (0..=12).map(|i| -3.0 + 0.5 * i as f64).collect();
        let integration = RiskIntegration::default();
        let curves = risk_curves(&params, &grid, &integration).unwrap();
        let seq = risk_curves_seq(&params, &grid, &integration).unwrap();
        assert_eq!(curves, seq);
        for i in 0..grid.len() {
            let gap = (curves.risk[i] - curves.bias_sq[i] - curves.variance[i]).abs();
            assert!(gap < 1e-6, "decomposition at θ={}: gap {gap}", grid[i]);
        }
        let at_zero = grid.iter().position(|&t| t == 0.0).unwrap();
        assert!(curves.bias_sq[at_zero] < 1e-10);
    }

    #[test]
    fn bayes_risk_matches_frozen_oracles() {
        let integration = RiskIntegration::default();
        // Independent fine-trapezoid oracles, frozen: R(0) and full r.
        let p = RaisedCosineParams::new(0.9, 3.0, 1.0).unwrap();
        let r0 = classical_risk(&p, 0.0, &integration).unwrap();
        assert!((r0 - 0.011340152694).abs() < 1e-9, "R(0) = {r0}");
        let r1 = classical_risk(&p, 1.0, &integration).unwrap();
        assert!((r1 - 0.823720204151).abs() < 1e-9, "R(1) = {r1}");
        let r2 = classical_risk(&p, 2.0, &integration).unwrap();
        assert!((r2 - 2.838652671572).abs() < 1e-9, "R(2) = {r2}");
        let spot = RaisedCosineParams::new(0.8, 2.0, 1.0).unwrap();
        let r3 = classical_risk(&spot, 3.0, &integration).unwrap();
        assert!((r3 - 6.302470499502).abs() < 1e-9, "R(3; 0.8, 2) = {r3}");
    }

    #[test]
    fn doubling_hermite_nodes_leaves_risk_unchanged() {
        let params = RaisedCosineParams::new(0.9, 3.0, 1.0).unwrap();
        let base = RiskIntegration::default();
        let doubled = RiskIntegration { gh_nodes: 122, ..RiskIntegration::default() };
        for theta in [0.0, 0.8, 1.7, 2.9, 4.0] {
            let a = classical_risk(&params, theta, &base).unwrap();
            let b = classical_risk(&params, theta, &doubled).unwrap();
            assert!((a - b).abs() < 1e-7, "θ={theta}: {a} vs {b}");
        }
    }
}
