//! Command-line front end for the shrinkage toolkit.
//!
//! Five subcommands wire the library into file-based workflows: `testfun`
//! samples the benchmark signals, `denoise` runs the full elicit-shrink
//! pipeline on one column of a delimited file, `simulate` produces the
//! replicated AMSE/AMAE study, and `risk`/`bayes-risk` tabulate the risk
//! engine. Every run prints its resolved configuration to standard error as
//! one line of JSON, writes output files atomically (temp file + rename),
//! and maps failures onto a stable exit-code contract: 0 success, 1 usage,
//! 2 data, 3 numerical.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rcshrink_core::analysis::{
    aggregates_to_csv, bayes_risk, curves_to_csv, curves_to_json, records_to_csv, report_to_json,
    risk_curves, run_simulation, AlphaMode, RiskIntegration, RuleDescriptor, SigmaMode,
    SimulationConfig,
};
use rcshrink_core::dwt::{build_filter, forward, inverse, Boundary};
use rcshrink_core::error::{Error, Result};
use rcshrink_core::policies::{
    elicit_alpha, elicit_tau, estimate_sigma, select_threshold, PolicyKind, ThresholdPolicy,
};
use rcshrink_core::quad::QuadratureSpec;
use rcshrink_core::rules::{shrink_decomposition, BetaSlabParams, RaisedCosineParams, ShrinkRule};
use rcshrink_core::signals::{
    add_gaussian_noise, dj_function, estimate_snr, load_series, rescale_to_sd, to_dyadic,
    ColumnSelector, DjFunction, DyadicPolicy,
};
use serde_json::json;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

/// Worker-pool size knob. Reports are bit-identical at any setting; the
/// variable only controls how replications fan out across threads.
const THREADS_VAR: &str = "RCSHRINK_THREADS";

#[derive(Parser)]
#[command(
    name = "rcshrink",
    version,
    about = "Wavelet denoising under a raised-cosine spike-and-slab prior",
    after_help = "Set RCSHRINK_THREADS to pin the worker-pool size; outputs are \
                  bit-identical at any thread count."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a Donoho-Johnstone test function into a CSV, optionally with noise
    Testfun(TestfunArgs),
    /// Denoise one column of a delimited file by wavelet shrinkage
    Denoise(DenoiseArgs),
    /// Run the replicated AMSE/AMAE simulation study over a scenario grid
    Simulate(SimulateArgs),
    /// Tabulate bias, variance, and risk of the raised-cosine rule on a theta grid
    Risk(RiskArgs),
    /// Print the Bayes risk (prior-averaged risk) of the raised-cosine rule
    BayesRisk(BayesRiskArgs),
}

#[derive(Args)]
struct TestfunArgs {
    /// Test function: bumps, blocks, doppler, or heavisine
    #[arg(long)]
    name: DjFunction,
    /// Dyadic sample count
    #[arg(long)]
    n: usize,
    /// Target population SD of the clean signal
    #[arg(long, default_value_t = 7.0)]
    sd: f64,
    /// Also sample y = f + sigma*z at this signal-to-noise ratio
    #[arg(long)]
    snr: Option<f64>,
    /// Master seed for the noise stream
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// Output CSV (columns x,f and, with --snr, y)
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

/// Shrinkage rules exposed on the `denoise` command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CliRule {
    /// Posterior mean under the raised-cosine slab
    RaisedCosine,
    /// Posterior mean under the symmetric beta(a,a) slab
    Beta,
    /// Beta slab with a = 1: uniform on (-tau, tau)
    UniformSlab,
    /// Soft thresholding with lambda chosen by --policy
    Soft,
}

impl CliRule {
    fn name(self) -> &'static str {
        match self {
            CliRule::RaisedCosine => "raised-cosine",
            CliRule::Beta => "beta",
            CliRule::UniformSlab => "uniform-slab",
            CliRule::Soft => "soft",
        }
    }
}

#[derive(Args)]
struct DenoiseArgs {
    /// Input series: CSV or whitespace-delimited text
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Column holding the series: zero-based index or header name
    #[arg(long, default_value = "0")]
    column: String,
    /// Shrinkage rule
    #[arg(long, value_enum, default_value_t = CliRule::RaisedCosine)]
    rule: CliRule,
    /// Beta-slab shape (only with --rule beta; a = 1 is the uniform slab)
    #[arg(long)]
    a: Option<f64>,
    /// Threshold policy for --rule soft: universal, fdr, cv, or sure
    #[arg(long, default_value = "universal")]
    policy: PolicyKind,
    /// False discovery rate for --policy fdr
    #[arg(long, default_value_t = 0.05)]
    q: f64,
    /// Mixture weight alpha shared by every level
    #[arg(long, default_value_t = 0.9, conflicts_with = "gamma")]
    alpha: f64,
    /// Level-dependent alpha(j) = 1 - 1/(j - J0 + 1)^gamma instead of --alpha
    #[arg(long)]
    gamma: Option<f64>,
    /// Noise scale; estimated from the finest detail level when omitted
    #[arg(long)]
    sigma: Option<f64>,
    /// Daubechies vanishing moments (1 = Haar, up to 10)
    #[arg(long, default_value_t = 10)]
    wavelet: usize,
    /// Primary resolution level J0; scaling coefficients below it pass through
    #[arg(long, default_value_t = 3)]
    j0: usize,
    /// Non-dyadic input handling: error, truncate, or reflect-pad
    #[arg(long, default_value = "error")]
    dyadic: DyadicPolicy,
    /// Denoised series (CSV, columns i,y,fhat)
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// JSON diagnostics: sigma_hat, tau_hat, snr_hat, coefficients by level
    #[arg(long, value_name = "FILE")]
    diagnostics: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Test functions (comma-separated); all four when omitted
    #[arg(long, value_delimiter = ',')]
    functions: Vec<DjFunction>,
    /// Dyadic sample sizes (comma-separated)
    #[arg(long, value_delimiter = ',', default_values_t = [128, 512])]
    sizes: Vec<usize>,
    /// Signal-to-noise ratios (comma-separated; inf = noiseless)
    #[arg(long, value_delimiter = ',', default_values_t = [1.0])]
    snrs: Vec<f64>,
    /// Rule to benchmark (repeatable): raised-cosine, beta(a), or
    /// soft-{universal,fdr,cv,sure}; the full six-method study when omitted
    #[arg(long = "rules", value_name = "RULE")]
    rules: Vec<RuleDescriptor>,
    /// Replications per cell
    #[arg(long, default_value_t = 200)]
    replications: usize,
    /// Master seed
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// Daubechies vanishing moments
    #[arg(long, default_value_t = 10)]
    wavelet: usize,
    /// Primary resolution level
    #[arg(long, default_value_t = 0)]
    j0: usize,
    /// Fixed mixture weight for the Bayes rules
    #[arg(long, default_value_t = 0.9, conflicts_with = "gamma")]
    alpha: f64,
    /// Level-dependent alpha via gamma instead of the fixed weight
    #[arg(long)]
    gamma: Option<f64>,
    /// Hand the rules the generating sigma instead of the finest-level estimate
    #[arg(long)]
    true_sigma: bool,
    /// Target SD of the clean signals
    #[arg(long, default_value_t = 7.0)]
    sd: f64,
    /// Per-cell aggregate table (CSV)
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Full report as JSON: records, aggregates, and per-cell failures
    #[arg(long, value_name = "FILE")]
    json: Option<PathBuf>,
    /// Per-replication records (CSV)
    #[arg(long, value_name = "FILE")]
    records: Option<PathBuf>,
}

#[derive(Args)]
struct RiskArgs {
    /// Mixture weight alpha
    #[arg(long, default_value_t = 0.9)]
    alpha: f64,
    /// Slab half-width tau
    #[arg(long, default_value_t = 3.0)]
    tau: f64,
    /// Noise scale sigma
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Grid start
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    theta_min: f64,
    /// Grid end; tau when omitted
    #[arg(long, allow_negative_numbers = true)]
    theta_max: Option<f64>,
    /// Grid points
    #[arg(long, default_value_t = 61)]
    points: usize,
    /// Curves as CSV (theta,bias_sq,variance,risk); stdout when no output is given
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Curves as JSON
    #[arg(long, value_name = "FILE")]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct BayesRiskArgs {
    /// Mixture weight alpha
    #[arg(long)]
    alpha: f64,
    /// Slab half-width tau
    #[arg(long)]
    tau: f64,
    /// Noise scale sigma
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let threads = match worker_threads() {
        Ok(threads) => threads,
        Err(e) => {
            eprintln!("rcshrink: {e}");
            return 1;
        }
    };
    let outcome = match &cli.command {
        Command::Testfun(args) => run_testfun(args, threads),
        Command::Denoise(args) => run_denoise(args, threads),
        Command::Simulate(args) => run_simulate(args, threads),
        Command::Risk(args) => run_risk(args, threads),
        Command::BayesRisk(args) => run_bayes_risk(args, threads),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("rcshrink: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parameter(_) => 1,
        Error::Structure(_) | Error::Data(_) => 2,
        Error::Numerical { .. } => 3,
    }
}

/// Read and validate RCSHRINK_THREADS, sizing the global worker pool when
/// the parallel feature is compiled in.
fn worker_threads() -> Result<Option<usize>> {
    let raw = match std::env::var(THREADS_VAR) {
        Ok(raw) => raw,
        Err(std::env::VarError::NotPresent) => return Ok(None),
        Err(e) => return Err(Error::parameter(format!("{THREADS_VAR}: {e}"))),
    };
    let threads: usize = raw.trim().parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        Error::parameter(format!("{THREADS_VAR} must be a positive integer, got '{raw}'"))
    })?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::parameter(format!("cannot size the worker pool: {e}")))?;
    Ok(Some(threads))
}

/// The stable single-line JSON audit record on standard error.
fn audit(record: serde_json::Value) {
    eprintln!("{record}");
}

/// Write a file atomically: temp file in the target directory, then rename.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(parent) if !parent.as_os_str().is_empty() => parent,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| Error::data(format!("cannot create a temp file in {}: {e}", dir.display())))?;
    tmp.write_all(contents.as_bytes())
        .map_err(|e| Error::data(format!("cannot write {}: {e}", path.display())))?;
    tmp.persist(path).map_err(|e| Error::data(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

/// 17 significant digits, matching the library's CSV serializers.
fn push_float(line: &mut String, value: f64) {
    let _ = write!(line, "{value:.16e}");
}

fn path_json(path: &Path) -> serde_json::Value {
    json!(path.display().to_string())
}

fn run_testfun(args: &TestfunArgs, threads: Option<usize>) -> Result<()> {
    audit(json!({
        "subcommand": "testfun",
        "name": args.name.name(),
        "n": args.n,
        "sd": args.sd,
        "snr": args.snr,
        "seed": args.seed,
        "out": path_json(&args.out),
        "threads": threads,
    }));
    let f = rescale_to_sd(&dj_function(args.name, args.n)?.values, args.sd)?;
    let noisy = match args.snr {
        Some(snr) => Some(add_gaussian_noise(&f, snr, args.seed)?),
        None => None,
    };
    let mut out = String::from(if noisy.is_some() { "x,f,y\n" } else { "x,f\n" });
    for (i, &v) in f.iter().enumerate() {
        let mut line = String::new();
        push_float(&mut line, (i + 1) as f64 / args.n as f64);
        line.push(',');
        push_float(&mut line, v);
        if let Some(sample) = &noisy {
            line.push(',');
            push_float(&mut line, sample.y[i]);
        }
        line.push('\n');
        out.push_str(&line);
    }
    write_atomic(&args.out, &out)
}

fn parse_column(spec: &str) -> ColumnSelector {
    match spec.parse::<usize>() {
        Ok(index) => ColumnSelector::Index(index),
        Err(_) => ColumnSelector::Name(spec.to_string()),
    }
}

fn run_denoise(args: &DenoiseArgs, threads: Option<usize>) -> Result<()> {
    let a = match (args.rule, args.a) {
        (CliRule::Beta, a) => a.unwrap_or(1.0),
        (_, Some(_)) => {
            return Err(Error::parameter("--a only applies to --rule beta".to_string()))
        }
        (CliRule::UniformSlab, None) => 1.0,
        _ => f64::NAN, // unused by the other rules
    };
    if let Some(sigma) = args.sigma {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::parameter(format!("--sigma must be positive, got {sigma}")));
        }
    }
    let mut config = json!({
        "subcommand": "denoise",
        "in": path_json(&args.input),
        "column": args.column,
        "rule": args.rule.name(),
        "sigma": args.sigma,
        "wavelet": args.wavelet,
        "j0": args.j0,
        "dyadic": format!("{:?}", args.dyadic).to_lowercase(),
        "out": path_json(&args.out),
        "diagnostics": args.diagnostics.as_deref().map(path_json),
        "threads": threads,
    });
    let extra = config.as_object_mut().expect("audit record is an object");
    match args.rule {
        CliRule::Soft => {
            extra.insert("policy".into(), json!(args.policy.name()));
            if args.policy == PolicyKind::Fdr {
                extra.insert("q".into(), json!(args.q));
            }
        }
        _ => {
            match args.gamma {
                Some(gamma) => extra.insert("gamma".into(), json!(gamma)),
                None => extra.insert("alpha".into(), json!(args.alpha)),
            };
            if args.rule != CliRule::RaisedCosine {
                extra.insert("a".into(), json!(a));
            }
        }
    }
    audit(config);

    let series = load_series(&args.input, &parse_column(&args.column))?;
    let adjusted = to_dyadic(&series, args.dyadic)?;
    let filter = build_filter(args.wavelet)?;
    let dec = forward(&adjusted.values, &filter, args.j0, Boundary::Periodic)?;
    let sigma = match args.sigma {
        Some(sigma) => sigma,
        None => estimate_sigma(&dec)?,
    };
    let tau = elicit_tau(&dec)?;
    if args.rule != CliRule::Soft {
        if tau == 0.0 {
            return Err(Error::data(
                "degenerate signal: every detail coefficient is zero (tau_hat = 0)".to_string(),
            ));
        }
        if sigma == 0.0 {
            return Err(Error::data(
                "degenerate signal: estimated noise scale is zero; pass --sigma or use --rule soft"
                    .to_string(),
            ));
        }
    }

    let quad = QuadratureSpec::default();
    let levels = dec.j0..=dec.j_end() - 1;
    let mut thresholds: Option<BTreeMap<usize, f64>> = None;
    let mut alpha_by_level: Option<BTreeMap<usize, f64>> = None;
    let shrunk = if args.rule == CliRule::Soft {
        let mut policy = ThresholdPolicy::new(args.policy);
        policy.q = args.q;
        let lambdas = select_threshold(&dec, &policy, sigma, &filter)?;
        let shrunk =
            shrink_decomposition(&dec, &ShrinkRule::SoftByLevel(&lambdas), levels, &quad)?;
        thresholds = Some(lambdas);
        shrunk
    } else {
        let mut alphas = BTreeMap::new();
        let mut shrunk = dec.clone();
        for j in levels {
            let alpha = match args.gamma {
                // The elicitation pins alpha(J0) to 0; the rules need alpha
                // in (0,1), so the pure-slab limit is approximated from above.
                Some(gamma) => elicit_alpha(j, dec.j0, gamma)?.max(1e-12),
                None => args.alpha,
            };
            alphas.insert(j, alpha);
            let rule = match args.rule {
                CliRule::RaisedCosine => {
                    ShrinkRule::RaisedCosine(RaisedCosineParams::new(alpha, tau, sigma)?)
                }
                _ => ShrinkRule::BetaSlab(BetaSlabParams::new(alpha, tau, a, sigma)?),
            };
            shrunk = shrink_decomposition(&shrunk, &rule, j..=j, &quad)?;
        }
        alpha_by_level = Some(alphas);
        shrunk
    };

    let f_hat = inverse(&shrunk, &filter)?;
    let y_kept = adjusted.crop(&adjusted.values);
    let f_kept = adjusted.crop(&f_hat);
    let mut out = String::from("i,y,fhat\n");
    for (i, (&y, &fh)) in y_kept.iter().zip(f_kept).enumerate() {
        let mut line = format!("{},", i + 1);
        push_float(&mut line, y);
        line.push(',');
        push_float(&mut line, fh);
        line.push('\n');
        out.push_str(&line);
    }
    write_atomic(&args.out, &out)?;

    if let Some(diag_path) = &args.diagnostics {
        let snr_hat = if sigma > 0.0 { Some(estimate_snr(f_kept, sigma)?) } else { None };
        let by_level: Vec<serde_json::Value> = (dec.j0..dec.j_end())
            .map(|j| {
                json!({
                    "level": j,
                    "count": dec.details[j - dec.j0].len(),
                    "empirical": dec.details[j - dec.j0],
                    "shrunk": shrunk.details[j - dec.j0],
                })
            })
            .collect();
        let diag = json!({
            "rule": args.rule.name(),
            "sigma_hat": sigma,
            "sigma_source": if args.sigma.is_some() { "given" } else { "estimated" },
            "tau_hat": tau,
            "snr_hat": snr_hat,
            "n": dec.n,
            "original_len": adjusted.original_len,
            "wavelet": args.wavelet,
            "j0": args.j0,
            "alpha_by_level": alpha_by_level,
            "thresholds_by_level": thresholds,
            "levels": by_level,
        });
        let mut text = serde_json::to_string_pretty(&diag)
            .map_err(|e| Error::structure(format!("diagnostics serialization failed: {e}")))?;
        text.push('\n');
        write_atomic(diag_path, &text)?;
    }
    Ok(())
}

fn run_simulate(args: &SimulateArgs, threads: Option<usize>) -> Result<()> {
    let functions = if args.functions.is_empty() {
        DjFunction::ALL.to_vec()
    } else {
        args.functions.clone()
    };
    let rules =
        if args.rules.is_empty() { RuleDescriptor::study_set() } else { args.rules.clone() };
    let alpha_mode = match args.gamma {
        Some(gamma) => AlphaMode::LevelDependent { gamma },
        None => AlphaMode::Fixed(args.alpha),
    };
    let config = SimulationConfig {
        functions,
        sizes: args.sizes.clone(),
        snrs: args.snrs.clone(),
        rules,
        replications: args.replications,
        master_seed: args.seed,
        vanishing_moments: args.wavelet,
        j0: args.j0,
        alpha_mode,
        sigma_mode: if args.true_sigma { SigmaMode::True } else { SigmaMode::Estimated },
        target_sd: args.sd,
        quad: QuadratureSpec::default(),
    };
    audit(json!({
        "subcommand": "simulate",
        "functions": config.functions.iter().map(|f| f.name()).collect::<Vec<_>>(),
        "sizes": config.sizes,
        "snrs": config.snrs,
        "rules": config.rules.iter().map(|r| r.id()).collect::<Vec<_>>(),
        "replications": config.replications,
        "seed": config.master_seed,
        "wavelet": config.vanishing_moments,
        "j0": config.j0,
        "alpha": match config.alpha_mode {
            AlphaMode::Fixed(alpha) => json!(alpha),
            AlphaMode::LevelDependent { gamma } => json!({ "gamma": gamma }),
        },
        "sigma_mode": match config.sigma_mode {
            SigmaMode::Estimated => "estimated",
            SigmaMode::True => "true",
        },
        "sd": config.target_sd,
        "out": path_json(&args.out),
        "json": args.json.as_deref().map(path_json),
        "records": args.records.as_deref().map(path_json),
        "threads": threads,
    }));
    let report = run_simulation(&config)?;
    if !report.failures.is_empty() {
        eprintln!(
            "rcshrink: {} cell(s) failed and were left out of the aggregates (first: {} n={} snr={} {}: {})",
            report.failures.len(),
            report.failures[0].function,
            report.failures[0].n,
            report.failures[0].snr,
            report.failures[0].rule,
            report.failures[0].message,
        );
    }
    write_atomic(&args.out, &aggregates_to_csv(&report))?;
    if let Some(path) = &args.json {
        write_atomic(path, &report_to_json(&report)?)?;
    }
    if let Some(path) = &args.records {
        write_atomic(path, &records_to_csv(&report))?;
    }
    Ok(())
}

fn linspace(from: f64, to: f64, points: usize) -> Result<Vec<f64>> {
    if points == 0 {
        return Err(Error::parameter("the theta grid needs at least one point".to_string()));
    }
    if !(to >= from) || !from.is_finite() || !to.is_finite() {
        return Err(Error::parameter(format!("invalid theta grid [{from}, {to}]")));
    }
    if points == 1 {
        return Ok(vec![from]);
    }
    let step = (to - from) / (points - 1) as f64;
    Ok((0..points).map(|i| from + step * i as f64).collect())
}

fn run_risk(args: &RiskArgs, threads: Option<usize>) -> Result<()> {
    let theta_max = args.theta_max.unwrap_or(args.tau);
    audit(json!({
        "subcommand": "risk",
        "alpha": args.alpha,
        "tau": args.tau,
        "sigma": args.sigma,
        "theta_min": args.theta_min,
        "theta_max": theta_max,
        "points": args.points,
        "out": args.out.as_deref().map(path_json),
        "json": args.json.as_deref().map(path_json),
        "threads": threads,
    }));
    let params = RaisedCosineParams::new(args.alpha, args.tau, args.sigma)?;
    let grid = linspace(args.theta_min, theta_max, args.points)?;
    let curves = risk_curves(&params, &grid, &RiskIntegration::default())?;
    if args.out.is_none() && args.json.is_none() {
        print!("{}", curves_to_csv(&curves));
        return Ok(());
    }
    if let Some(path) = &args.out {
        write_atomic(path, &curves_to_csv(&curves))?;
    }
    if let Some(path) = &args.json {
        write_atomic(path, &curves_to_json(&curves)?)?;
    }
    Ok(())
}

fn run_bayes_risk(args: &BayesRiskArgs, threads: Option<usize>) -> Result<()> {
    audit(json!({
        "subcommand": "bayes-risk",
        "alpha": args.alpha,
        "tau": args.tau,
        "sigma": args.sigma,
        "threads": threads,
    }));
    let params = RaisedCosineParams::new(args.alpha, args.tau, args.sigma)?;
    let risk = bayes_risk(&params, &RiskIntegration::default())?;
    println!("{risk:.9}");
    Ok(())
}
