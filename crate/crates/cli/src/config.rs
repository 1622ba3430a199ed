//! Command-line surface and configuration resolution.
//!
//! Every numeric setting can come from a flag or from an optional key-value
//! config file (`key = value` per line, `#` comments); flags win. Values are
//! validated against the owning operation's preconditions before any
//! computation starts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use kme_core::EstimatorKindF64;

use crate::error::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(
    name = "kme",
    version,
    about = "Kernel mean embedding experiments: estimation, two-sample and independence tests, density estimation"
)]
pub struct Cli {
    /// Optional key-value config file; command-line flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed for all randomness.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory receiving results.csv and manifest.json.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit the requested estimators on a CSV dataset and report weight and
    /// covariance-selection summaries.
    Estimate(EstimateArgs),
    /// Mixture-of-Gaussians risk experiment with the exact loss oracle.
    SynthGauss(SynthGaussArgs),
    /// Density estimation quality on heavy-tailed synthetic data.
    SynthT(SynthTArgs),
    /// Permutation two-sample test on two CSV files, or a synthetic power
    /// curve when generators are given instead.
    TwoSample(TwoSampleArgs),
    /// HSIC independence power study on a CSV dataset with a label column.
    Hsic(HsicArgs),
    /// Density estimation by kernel mean matching on a CSV dataset.
    Kde(KdeArgs),
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    /// Input CSV file.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Treat the first row as a header.
    #[arg(long)]
    pub has_header: bool,
    /// Zero-based column to split out as labels before fitting.
    #[arg(long)]
    pub label_col: Option<usize>,
    /// Comma-separated estimator list.
    #[arg(long)]
    pub estimators: Option<String>,
}

#[derive(Args, Debug)]
pub struct SynthGaussArgs {
    /// Dimension, or comma-separated dimension sweep.
    #[arg(long)]
    pub d: Option<String>,
    /// Sample size, or comma-separated size sweep.
    #[arg(long)]
    pub n: Option<String>,
    /// Independent (specification, sample) copies per sweep point.
    #[arg(long)]
    pub copies: Option<usize>,
    #[arg(long)]
    pub estimators: Option<String>,
    /// Sweep a fixed isotropic corruption variance instead (multipliers of
    /// the median-heuristic theta^2); requires scalar --d and --n.
    #[arg(long)]
    pub sigma2_multipliers: Option<String>,
}

#[derive(Args, Debug)]
pub struct SynthTArgs {
    /// Dimension, or comma-separated dimension sweep.
    #[arg(long)]
    pub d: Option<String>,
    /// Training sample size, or comma-separated size sweep.
    #[arg(long)]
    pub n: Option<String>,
    /// Degrees of freedom of the t source.
    #[arg(long)]
    pub df: Option<f64>,
    #[arg(long)]
    pub copies: Option<usize>,
    /// Held-out evaluation points drawn from the same source.
    #[arg(long)]
    pub test_points: Option<usize>,
    #[arg(long)]
    pub estimators: Option<String>,
    /// Bandwidth multipliers around the median heuristic.
    #[arg(long)]
    pub bw_grid: Option<String>,
    /// Number of mixture prototypes.
    #[arg(long)]
    pub prototypes: Option<usize>,
}

#[derive(Args, Debug)]
pub struct TwoSampleArgs {
    /// First sample CSV (file mode).
    #[arg(long)]
    pub a: Option<PathBuf>,
    /// Second sample CSV (file mode).
    #[arg(long)]
    pub b: Option<PathBuf>,
    /// Treat the first row of each CSV as a header.
    #[arg(long)]
    pub has_header: bool,
    /// First generator (power mode): `normal:MEAN,SD`, `mog`, `mog-shared`.
    #[arg(long)]
    pub gen1: Option<String>,
    /// Second generator (power mode).
    #[arg(long)]
    pub gen2: Option<String>,
    /// Dimension sweep for power mode.
    #[arg(long)]
    pub d: Option<String>,
    /// Per-side sample size for power mode.
    #[arg(long)]
    pub n: Option<usize>,
    /// Independent trials per dimension in power mode.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Number of permutations.
    #[arg(long)]
    pub perms: Option<usize>,
    /// Test level.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub estimators: Option<String>,
}

#[derive(Args, Debug)]
pub struct HsicArgs {
    /// Input CSV file.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub has_header: bool,
    /// Zero-based column holding the dependent variable.
    #[arg(long)]
    pub label_col: Option<usize>,
    /// Comma-separated subsample fractions.
    #[arg(long)]
    pub eta: Option<String>,
    /// Comma-separated test levels.
    #[arg(long)]
    pub alpha: Option<String>,
    /// Independent repetitions per cell.
    #[arg(long)]
    pub repetitions: Option<usize>,
    #[arg(long)]
    pub perms: Option<usize>,
    #[arg(long)]
    pub estimators: Option<String>,
}

#[derive(Args, Debug)]
pub struct KdeArgs {
    /// Input CSV file.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub has_header: bool,
    /// Zero-based column to drop from the features before fitting.
    #[arg(long)]
    pub label_col: Option<usize>,
    #[arg(long)]
    pub estimators: Option<String>,
    /// Fraction of rows held out for the test score.
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Bandwidth multipliers around the median heuristic.
    #[arg(long)]
    pub bw_grid: Option<String>,
    #[arg(long)]
    pub prototypes: Option<usize>,
}

/// Parsed key-value config file.
#[derive(Debug, Default)]
pub struct ConfigFile {
    map: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut map = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "config line {}: expected `key = value`",
                    lineno + 1
                )));
            };
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self { map })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.map.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                CliError::Usage(format!("config key `{key}`: cannot parse `{raw}`"))
            }),
        }
    }

    pub fn get_string(&self, key: &str) -> Option<String> {
        self.map.get(key).cloned()
    }
}

pub fn resolve<T: FromStr>(
    flag: Option<T>,
    cfg: &ConfigFile,
    key: &str,
    default: T,
) -> CliResult<T> {
    match flag {
        Some(v) => Ok(v),
        None => Ok(cfg.get::<T>(key)?.unwrap_or(default)),
    }
}

pub fn resolve_opt<T: FromStr>(
    flag: Option<T>,
    cfg: &ConfigFile,
    key: &str,
) -> CliResult<Option<T>> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => cfg.get::<T>(key),
    }
}

pub fn resolve_string(
    flag: Option<String>,
    cfg: &ConfigFile,
    key: &str,
    default: &str,
) -> String {
    flag.or_else(|| cfg.get_string(key)).unwrap_or_else(|| default.to_string())
}

pub fn parse_usize_list(s: &str, what: &str) -> CliResult<Vec<usize>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("{what}: cannot parse `{p}`")))
        })
        .collect()
}

pub fn parse_f64_list(s: &str, what: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("{what}: cannot parse `{p}`")))
        })
        .collect()
}

pub fn parse_estimators(s: &str) -> CliResult<Vec<EstimatorKindF64>> {
    let kinds: CliResult<Vec<EstimatorKindF64>> = s
        .split(',')
        .map(|p| match p.trim() {
            "kme" => Ok(EstimatorKindF64::Kme),
            "skmse" => Ok(EstimatorKindF64::SKmse { lambda_grid: None }),
            "fkmse" => Ok(EstimatorKindF64::FKmse { lambda_grid: None }),
            "mkme" => Ok(EstimatorKindF64::Mkme),
            "mmkme" => Ok(EstimatorKindF64::Mmkme),
            "mkme-linear" => Ok(EstimatorKindF64::MkmeLinear),
            "mmkme-linear" => Ok(EstimatorKindF64::MmkmeLinear),
            other => Err(CliError::Usage(format!("unknown estimator `{other}`"))),
        })
        .collect();
    let kinds = kinds?;
    if kinds.is_empty() {
        return Err(CliError::Usage("empty estimator list".into()));
    }
    Ok(kinds)
}

pub const DEFAULT_ESTIMATORS: &str = "kme,skmse,fkmse,mkme,mmkme";
pub const DEFAULT_HSIC_ESTIMATORS: &str = "kme,mkme,mmkme";

/// Shared output settings after resolution.
#[derive(Debug, Clone, Serialize)]
pub struct CommonConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
}

pub fn resolve_common(cli_seed: Option<u64>, cli_out: Option<PathBuf>, cfg: &ConfigFile) -> CliResult<CommonConfig> {
    let seed = resolve(cli_seed, cfg, "seed", 0u64)?;
    let out_dir = match cli_out {
        Some(p) => p,
        None => cfg.get_string("out").map(PathBuf::from).unwrap_or_else(|| PathBuf::from(".")),
    };
    Ok(CommonConfig { seed, out_dir })
}

pub fn check(cond: bool, msg: &str) -> CliResult<()> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Usage(msg.to_string()))
    }
}
