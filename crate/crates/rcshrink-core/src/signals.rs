//! Donoho–Johnstone test functions, the SNR noise model, and ingestion of
//! user-supplied series (delimited text, dyadic-length adjustment).

use crate::error::{Error, Result};
use crate::rng::{NoiseStream, TAG_NOISE};
use crate::stats::population_sd;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// Jump locations shared by Bumps and Blocks.
const DJ_X: [f64; 11] = [0.1, 0.13, 0.15, 0.23, 0.25, 0.40, 0.44, 0.65, 0.76, 0.78, 0.81];
/// Bump heights.
const BUMPS_H: [f64; 11] = [4.0, 5.0, 3.0, 4.0, 5.0, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2];
/// Bump widths.
const BUMPS_W: [f64; 11] =
    [0.005, 0.005, 0.006, 0.01, 0.01, 0.03, 0.01, 0.01, 0.005, 0.008, 0.005];
/// Block step heights.
const BLOCKS_H: [f64; 11] = [4.0, -5.0, 3.0, -4.0, 5.0, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2];

/// sgn with sgn(0) = 0, the convention used by Blocks and HeaviSine.
fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// The four Donoho–Johnstone test functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DjFunction {
    Bumps,
    Blocks,
    Doppler,
    Heavisine,
}

impl DjFunction {
    pub const ALL: [DjFunction; 4] =
        [DjFunction::Bumps, DjFunction::Blocks, DjFunction::Doppler, DjFunction::Heavisine];

    pub fn name(self) -> &'static str {
        match self {
            DjFunction::Bumps => "bumps",
            DjFunction::Blocks => "blocks",
            DjFunction::Doppler => "doppler",
            DjFunction::Heavisine => "heavisine",
        }
    }

    /// Pointwise evaluation at x ∈ (0, 1].
    pub fn evaluate(self, x: f64) -> f64 {
        match self {
            DjFunction::Bumps => DJ_X
                .iter()
                .zip(&BUMPS_H)
                .zip(&BUMPS_W)
                .map(|((&xj, &hj), &wj)| {
                    let t = (x - xj) / wj;
                    hj * (1.0 + t.abs()).powi(-4)
                })
                .sum(),
            DjFunction::Blocks => DJ_X
                .iter()
                .zip(&BLOCKS_H)
                .map(|(&xj, &hj)| hj * (1.0 + sgn(x - xj)) / 2.0)
                .sum(),
            DjFunction::Doppler => {
                (x * (1.0 - x)).sqrt()
                    * (2.0 * std::f64::consts::PI * 1.05 / (x + 0.05)).sin()
            }
            DjFunction::Heavisine => {
                4.0 * (4.0 * std::f64::consts::PI * x).sin() - sgn(x - 0.3) - sgn(0.72 - x)
            }
        }
    }
}

impl fmt::Display for DjFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DjFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bumps" => Ok(DjFunction::Bumps),
            "blocks" => Ok(DjFunction::Blocks),
            "doppler" => Ok(DjFunction::Doppler),
            "heavisine" => Ok(DjFunction::Heavisine),
            other => Err(Error::parameter(format!(
                "unknown test function '{other}' (expected bumps, blocks, doppler, or heavisine)"
            ))),
        }
    }
}

/// A sampled test function, possibly rescaled to a target SD.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    pub name: DjFunction,
    /// Samples at x_i = i/n, i = 1..=n.
    pub values: Vec<f64>,
    /// Target population SD if the samples were rescaled.
    pub rescaled_sd: Option<f64>,
}

/// Sample a test function on the grid x_i = i/n, i = 1..=n (unscaled).
pub fn dj_function(name: DjFunction, n: usize) -> Result<TestFunction> {
    if n < 8 || !n.is_power_of_two() {
        return Err(Error::parameter(format!("sample size must be dyadic and ≥ 8, got {n}")));
    }
    let values = (1..=n).map(|i| name.evaluate(i as f64 / n as f64)).collect();
    Ok(TestFunction { name, values, rescaled_sd: None })
}

/// Scale a signal so its population SD equals the target.
pub fn rescale_to_sd(f: &[f64], target: f64) -> Result<Vec<f64>> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::parameter(format!("target SD must be positive, got {target}")));
    }
    if f.is_empty() {
        return Err(Error::structure("cannot rescale an empty signal"));
    }
    let sd = population_sd(f);
    if sd == 0.0 {
        return Err(Error::data("degenerate signal: constant input has zero SD"));
    }
    let scale = target / sd;
    Ok(f.iter().map(|&v| v * scale).collect())
}

/// A clean signal with additive Gaussian noise at a given SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisySample {
    /// Observed series y = f + σ·z.
    pub y: Vec<f64>,
    /// Clean signal.
    pub f: Vec<f64>,
    /// σ = SD(f)/SNR (0 under the SNR = ∞ sentinel).
    pub sigma_true: f64,
    pub snr: f64,
    pub seed: u64,
}

/// Add IID Gaussian noise at σ = SD(f)/SNR from the deterministic stream
/// keyed by `seed`. `snr = ∞` is the noiseless sentinel (σ = 0, y = f).
pub fn add_gaussian_noise(f: &[f64], snr: f64, seed: u64) -> Result<NoisySample> {
    if !(snr > 0.0) {
        return Err(Error::parameter(format!("SNR must be positive, got {snr}")));
    }
    let sd = population_sd(f);
    if sd == 0.0 {
        return Err(Error::data("degenerate signal: SD(f) = 0, SNR model undefined"));
    }
    let sigma = if snr.is_finite() { sd / snr } else { 0.0 };
    let y = if sigma == 0.0 {
        f.to_vec()
    } else {
        let mut stream = NoiseStream::new(seed, 0, 0, TAG_NOISE);
        f.iter().map(|&v| v + sigma * stream.standard_normal()).collect()
    };
    Ok(NoisySample { y, f: f.to_vec(), sigma_true: sigma, snr, seed })
}

/// How to reach a dyadic length from an arbitrary one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DyadicPolicy {
    /// Refuse non-dyadic input.
    Error,
    /// Keep the longest dyadic prefix.
    Truncate,
    /// Mirror-extend the tail to the next dyadic length.
    ReflectPad,
}

impl FromStr for DyadicPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "error" => Ok(DyadicPolicy::Error),
            "truncate" => Ok(DyadicPolicy::Truncate),
            "reflect-pad" | "reflect" => Ok(DyadicPolicy::ReflectPad),
            other => Err(Error::parameter(format!(
                "unknown dyadic policy '{other}' (expected error, truncate, or reflect-pad)"
            ))),
        }
    }
}

/// A dyadic-length series plus the metadata needed to crop results back to
/// the original length.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicSeries {
    pub values: Vec<f64>,
    pub original_len: usize,
}

impl DyadicSeries {
    /// Crop a same-length result (e.g. the denoised series) back to the
    /// original input length.
    pub fn crop<'a>(&self, series: &'a [f64]) -> &'a [f64] {
        &series[..self.original_len.min(series.len())]
    }
}

/// Adjust a series to dyadic length under the given policy.
pub fn to_dyadic(v: &[f64], policy: DyadicPolicy) -> Result<DyadicSeries> {
    if v.is_empty() {
        return Err(Error::data("empty series"));
    }
    let n = v.len();
    if n.is_power_of_two() {
        return Ok(DyadicSeries { values: v.to_vec(), original_len: n });
    }
    match policy {
        DyadicPolicy::Error => {
            let below = prev_power_of_two(n);
            Err(Error::data(format!(
                "dyadic length required: got {n} (nearest are {below} and {})",
                below * 2
            )))
        }
        DyadicPolicy::Truncate => {
            let keep = prev_power_of_two(n);
            Ok(DyadicSeries { values: v[..keep].to_vec(), original_len: keep })
        }
        DyadicPolicy::ReflectPad => {
            let target = n.next_power_of_two();
            let mut values = v.to_vec();
            // Mirror the tail: padded[n + i] = v[n − 1 − i].
            values.extend((0..target - n).map(|i| v[n - 1 - i]));
            Ok(DyadicSeries { values, original_len: n })
        }
    }
}

fn prev_power_of_two(n: usize) -> usize {
    debug_assert!(n >= 1);
    1 << (usize::BITS - 1 - n.leading_zeros())
}

/// Which column of a delimited file holds the series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSelector {
    /// Zero-based column index.
    Index(usize),
    /// Header name (the file's first row must be a header).
    Name(String),
}

/// Read one numeric column from a delimited text file. The delimiter is
/// sniffed from the first non-empty line (comma vs whitespace), and a header
/// row is detected by attempting to parse the selected field.
pub fn load_series(path: impl AsRef<Path>, column: &ColumnSelector) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::data(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .peekable();

    let &(_, first) = lines
        .peek()
        .ok_or_else(|| Error::data(format!("{}: file holds no data", path.display())))?;
    let comma = first.contains(',');
    let split = |line: &str| -> Vec<String> {
        if comma {
            line.split(',').map(|s| s.trim().to_string()).collect()
        } else {
            line.split_whitespace().map(str::to_string).collect()
        }
    };

    let header = split(first);
    let index = match column {
        ColumnSelector::Index(i) => *i,
        ColumnSelector::Name(name) => {
            let found = header.iter().position(|h| h == name).ok_or_else(|| {
                Error::data(format!(
                    "{}: column '{name}' not found in header [{}]",
                    path.display(),
                    header.join(", ")
                ))
            })?;
            lines.next();
            found
        }
    };
    // With an index selector, skip the first row only if its target field
    // does not parse (i.e. it is a header).
    if matches!(column, ColumnSelector::Index(_)) {
        let parses = header.get(index).map(|c| c.parse::<f64>().is_ok()).unwrap_or(false);
        if !parses {
            lines.next();
        }
    }

    let mut values = Vec::new();
    for (row, line) in lines {
        let cells = split(line);
        let cell = cells.get(index).ok_or_else(|| {
            Error::data(format!(
                "{}: row {row} has {} columns, needed index {index}",
                path.display(),
                cells.len()
            ))
        })?;
        let value = cell.parse::<f64>().map_err(|_| {
            Error::data(format!(
                "{}: non-numeric value '{cell}' at row {row}, column {index}",
                path.display()
            ))
        })?;
        values.push(value);
    }
    if values.is_empty() {
        return Err(Error::data(format!("{}: selected column is empty", path.display())));
    }
    Ok(values)
}

/// ŜNR = SD(f̂)/σ̂, the inversion of the noise model's σ = SD(f)/SNR.
pub fn estimate_snr(f_hat: &[f64], sigma_hat: f64) -> Result<f64> {
    if sigma_hat == 0.0 {
        return Err(Error::data("degenerate: sigma_hat = 0, SNR undefined"));
    }
    if !(sigma_hat > 0.0 && sigma_hat.is_finite()) {
        return Err(Error::parameter(format!("sigma_hat must be positive, got {sigma_hat}")));
    }
    Ok(population_sd(f_hat) / sigma_hat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn heavisine_hits_the_closed_form_at_one_half() {
        let tf = dj_function(DjFunction::Heavisine, 64).unwrap();
        // x = 0.5 is grid point i = 32: 4·sin(2π) − sgn(0.2) − sgn(0.22) = −2.
        assert!((tf.values[31] - -2.0).abs() < 1e-12);
    }

    #[test]
    fn doppler_respects_its_envelope_near_zero() {
        let n = 1024;
        let tf = dj_function(DjFunction::Doppler, n).unwrap();
        let x = 1.0 / n as f64;
        assert!(tf.values[0].abs() <= (x * (1.0 - x)).sqrt() + 1e-15);
    }

    #[test]
    fn blocks_jumps_only_at_the_listed_locations() {
        let n = 2048;
        let tf = dj_function(DjFunction::Blocks, n).unwrap();
        let mut jump_grid_points = Vec::new();
        for i in 0..n - 1 {
            if (tf.values[i + 1] - tf.values[i]).abs() > 1e-12 {
                jump_grid_points.push((i + 2) as f64 / n as f64);
            }
        }
        // Every observed jump sits within one grid step of a listed x_j, and
        // every x_j produces at least one jump.
        for &x in &jump_grid_points {
            assert!(
                DJ_X.iter().any(|&xj| (x - xj).abs() <= 1.0 / n as f64 + 1e-12),
                "unexpected jump at x = {x}"
            );
        }
        for &xj in &DJ_X {
            assert!(
                jump_grid_points.iter().any(|&x| (x - xj).abs() <= 1.0 / n as f64 + 1e-12),
                "no jump found near x_j = {xj}"
            );
        }
    }

    #[test]
    fn dyadic_and_size_requirements_are_enforced() {
        assert!(dj_function(DjFunction::Bumps, 100).is_err());
        assert!(dj_function(DjFunction::Bumps, 4).is_err());
        assert!("squiggle".parse::<DjFunction>().is_err());
        assert_eq!("DOPPLER".parse::<DjFunction>().unwrap(), DjFunction::Doppler);
    }

    #[test]
    fn rescaling_reaches_the_target_sd_scale_free() {
        let f = dj_function(DjFunction::Bumps, 256).unwrap().values;
        let scaled = rescale_to_sd(&f, 7.0).unwrap();
        assert!((population_sd(&scaled) - 7.0).abs() < 1e-9);
        let same = rescale_to_sd(&scaled, population_sd(&scaled)).unwrap();
        for (a, b) in same.iter().zip(&scaled) {
            assert!((a - b).abs() < 1e-12);
        }
        let doubled: Vec<f64> = f.iter().map(|v| 2.0 * v).collect();
        let from_doubled = rescale_to_sd(&doubled, 7.0).unwrap();
        for (a, b) in from_doubled.iter().zip(&scaled) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(matches!(rescale_to_sd(&[1.0; 32], 7.0), Err(Error::Data(_))));
    }

    #[test]
    fn noise_injection_matches_the_snr_model() {
        let f = rescale_to_sd(&dj_function(DjFunction::Doppler, 1 << 16).unwrap().values, 7.0)
            .unwrap();
        let sample = add_gaussian_noise(&f, 3.0, 99).unwrap();
        assert!((sample.sigma_true - 7.0 / 3.0).abs() < 1e-12);
        let residual: Vec<f64> = sample.y.iter().zip(&f).map(|(y, f)| y - f).collect();
        let sd = population_sd(&residual);
        assert!(
            (sd / sample.sigma_true - 1.0).abs() < 0.02,
            "residual SD {sd} vs σ {}",
            sample.sigma_true
        );
        // Lag-1 autocorrelation sanity on the noise stream.
        let mean = residual.iter().sum::<f64>() / residual.len() as f64;
        let num: f64 =
            residual.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
        let den: f64 = residual.iter().map(|r| (r - mean) * (r - mean)).sum();
        assert!((num / den).abs() < 0.05);

        let again = add_gaussian_noise(&f, 3.0, 99).unwrap();
        assert_eq!(sample.y, again.y, "same seed must give bit-identical noise");
        let other = add_gaussian_noise(&f, 3.0, 100).unwrap();
        assert_ne!(sample.y, other.y);

        let clean = add_gaussian_noise(&f, f64::INFINITY, 1).unwrap();
        assert_eq!(clean.y, f);
        assert_eq!(clean.sigma_true, 0.0);
        assert!(add_gaussian_noise(&f, 0.0, 1).is_err());
        assert!(add_gaussian_noise(&f, -2.0, 1).is_err());
    }

    #[test]
    fn dyadic_adjustment_follows_the_policies() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert!(matches!(to_dyadic(&v, DyadicPolicy::Error), Err(Error::Data(_))));

        let trunc = to_dyadic(&v, DyadicPolicy::Truncate).unwrap();
        assert_eq!(trunc.values.len(), 512);
        assert_eq!(trunc.original_len, 512);
        assert_eq!(trunc.values[..], v[..512]);

        let padded = to_dyadic(&v, DyadicPolicy::ReflectPad).unwrap();
        assert_eq!(padded.values.len(), 1024);
        assert_eq!(padded.original_len, 1000);
        assert_eq!(padded.values[1000], v[999]);
        assert_eq!(padded.values[1023], v[976]);
        assert_eq!(padded.crop(&padded.values).len(), 1000);
        assert_eq!(padded.crop(&padded.values), &v[..]);

        let exact = to_dyadic(&v[..512], DyadicPolicy::Error).unwrap();
        assert_eq!(exact.values.len(), 512);
        assert!(to_dyadic(&[], DyadicPolicy::Truncate).is_err());
    }

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(content.as_bytes()).unwrap();
        file
    }

    #[test]
    fn load_series_handles_headers_delimiters_and_errors() {
        let csv = write_temp("t,value\n0,1.5\n1,-2.25\n2,3.0\n");
        let by_name = load_series(csv.path(), &ColumnSelector::Name("value".into())).unwrap();
        assert_eq!(by_name, vec![1.5, -2.25, 3.0]);
        let by_index = load_series(csv.path(), &ColumnSelector::Index(1)).unwrap();
        assert_eq!(by_index, by_name);

        let plain = write_temp("1.0\n2.0\n3.0\n4.0\n");
        assert_eq!(
            load_series(plain.path(), &ColumnSelector::Index(0)).unwrap(),
            vec![1.0, 2.0, 3.0, 4.0]
        );

        let spaces = write_temp("10 1.0\n20 2.0\n");
        assert_eq!(
            load_series(spaces.path(), &ColumnSelector::Index(1)).unwrap(),
            vec![1.0, 2.0]
        );

        let bad_cell = write_temp("v\n1.0\noops\n");
        let err = load_series(bad_cell.path(), &ColumnSelector::Index(0)).unwrap_err();
        assert!(err.to_string().contains("row 3"), "{err}");

        let missing = load_series(csv.path(), &ColumnSelector::Name("nope".into())).unwrap_err();
        assert!(missing.to_string().contains("nope"));

        let short_row = write_temp("a,b\n1,2\n3\n");
        assert!(load_series(short_row.path(), &ColumnSelector::Index(1)).is_err());

        let empty = write_temp("\n\n");
        assert!(load_series(empty.path(), &ColumnSelector::Index(0)).is_err());
        assert!(load_series("/nonexistent/path.csv", &ColumnSelector::Index(0)).is_err());
    }

    #[test]
    fn snr_estimate_inverts_the_noise_model() {
        let f = vec![7.0, -7.0, 7.0, -7.0];
        assert!((estimate_snr(&f, 7.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(estimate_snr(&f, 0.0), Err(Error::Data(_))));
        assert!(estimate_snr(&f, -1.0).is_err());
    }
}
