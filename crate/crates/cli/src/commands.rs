//! Per-command resolution, validation, and execution.

use std::path::PathBuf;

use serde::Serialize;
use serde_json::{json, Value};

use kme_core::covariance::{
    default_isotropic_bounds, loocv_objective, select_diagonal_default, select_isotropic,
};
use kme_core::density::{self, KdeConfig};
use kme_core::estimators::{self, ShrinkageKind};
use kme_core::hsic::{self, PairedSample};
use kme_core::kernels::{median_heuristic, CorruptionModel};
use kme_core::mmd::{self, SyntheticDistribution};
use kme_core::synth::{self, RiskSweep, TSweep};
use kme_core::{DataMatrixF64, EstimatorKindF64};

use crate::config::*;
use crate::dataset::load_csv;
use crate::error::{CliError, CliResult};
use crate::output::{Cell, Table};

pub struct CommandOutput {
    pub config_echo: Value,
    pub table: Table,
    pub summary: Value,
}

fn config_value<T: Serialize>(v: &T) -> CliResult<Value> {
    serde_json::to_value(v).map_err(|e| CliError::Runtime(e.to_string()))
}

// ---------------------------------------------------------------------------
// estimate

#[derive(Debug, Serialize)]
struct EstimateConfig {
    input: PathBuf,
    has_header: bool,
    label_col: Option<usize>,
    estimators: String,
    seed: u64,
}

pub fn run_estimate(args: EstimateArgs, cfg: &ConfigFile, common: &CommonConfig) -> CliResult<CommandOutput> {
    let input = match args.input {
        Some(p) => p,
        None => cfg
            .get_string("input")
            .map(PathBuf::from)
            .ok_or_else(|| CliError::Usage("estimate: --input is required".into()))?,
    };
    let has_header = args.has_header || cfg.get::<bool>("has-header")?.unwrap_or(false);
    let label_col = resolve_opt(args.label_col, cfg, "label-col")?;
    let estimators_raw = resolve_string(args.estimators, cfg, "estimators", DEFAULT_ESTIMATORS);
    let kinds = parse_estimators(&estimators_raw)?;

    let resolved = EstimateConfig {
        input: input.clone(),
        has_header,
        label_col,
        estimators: estimators_raw,
        seed: common.seed,
    };

    let ds = load_csv(&input, has_header, label_col)?;
    let xs = &ds.matrix;
    let bw = median_heuristic(xs)?;

    let mut table = Table::new(vec![
        "estimator", "n", "d", "theta2", "score", "cov_kind", "cov_min", "cov_max", "lambda",
        "beta_min", "beta_max", "beta_sum",
    ]);
    for kind in &kinds {
        let (score, cov_kind, cov_min, cov_max, lambda) = match kind {
            EstimatorKindF64::Kme => {
                let s = loocv_objective(xs, bw, &CorruptionModel::Dirac)?;
                (s, "dirac", Cell::Empty, Cell::Empty, Cell::Empty)
            }
            EstimatorKindF64::SKmse { .. } | EstimatorKindF64::FKmse { .. } => {
                let sk = match kind {
                    EstimatorKindF64::SKmse { .. } => ShrinkageKind::Simple,
                    _ => ShrinkageKind::Flexible,
                };
                let grid = estimators::default_lambda_grid::<f64>();
                let (lambda, score) = estimators::shrinkage_select(xs, bw, sk, &grid)?;
                (score, "dirac", Cell::Empty, Cell::Empty, Cell::Float(lambda))
            }
            EstimatorKindF64::Mkme | EstimatorKindF64::MkmeLinear => {
                let sel = select_isotropic(xs, bw, default_isotropic_bounds(bw))?;
                let s2 = match sel.cov {
                    CorruptionModel::Isotropic(s) => s,
                    _ => unreachable!(),
                };
                (sel.value, "isotropic", Cell::Float(s2), Cell::Float(s2), Cell::Empty)
            }
            EstimatorKindF64::Mmkme | EstimatorKindF64::MmkmeLinear => {
                let sel = select_diagonal_default(xs, bw)?;
                let e = match sel.cov {
                    CorruptionModel::Diagonal(e) => e,
                    _ => unreachable!(),
                };
                let lo = e.iter().cloned().fold(f64::MAX, f64::min);
                let hi = e.iter().cloned().fold(f64::MIN, f64::max);
                (sel.value, "diagonal", Cell::Float(lo), Cell::Float(hi), Cell::Empty)
            }
        };
        let est = estimators::fit(kind, xs, bw)?;
        let beta_min = est.beta().iter().cloned().fold(f64::MAX, f64::min);
        let beta_max = est.beta().iter().cloned().fold(f64::MIN, f64::max);
        let beta_sum: f64 = est.beta().iter().sum();
        table.push(vec![
            Cell::Str(kind.name().to_string()),
            Cell::UInt(xs.n() as u64),
            Cell::UInt(xs.dim() as u64),
            Cell::Float(bw.theta2()),
            Cell::Float(score),
            Cell::Str(cov_kind.to_string()),
            cov_min,
            cov_max,
            lambda,
            Cell::Float(beta_min),
            Cell::Float(beta_max),
            Cell::Float(beta_sum),
        ]);
    }

    let summary = json!({ "dataset": ds.name, "n": xs.n(), "d": xs.dim(), "rows": table.rows.len() });
    Ok(CommandOutput { config_echo: config_value(&resolved)?, table, summary })
}

// ---------------------------------------------------------------------------
// synth-gauss

#[derive(Debug, Serialize)]
struct SynthGaussConfig {
    d: Vec<usize>,
    n: Vec<usize>,
    copies: usize,
    estimators: String,
    sigma2_multipliers: Option<Vec<f64>>,
    seed: u64,
}

pub fn run_synth_gauss(
    args: SynthGaussArgs,
    cfg: &ConfigFile,
    common: &CommonConfig,
) -> CliResult<CommandOutput> {
    let d_raw = resolve_string(args.d, cfg, "d", "5");
    let n_raw = resolve_string(args.n, cfg, "n", "50");
    let dims = parse_usize_list(&d_raw, "--d")?;
    let ns = parse_usize_list(&n_raw, "--n")?;
    let copies = resolve(args.copies, cfg, "copies", 30usize)?;
    let estimators_raw = resolve_string(args.estimators, cfg, "estimators", DEFAULT_ESTIMATORS);
    let kinds = parse_estimators(&estimators_raw)?;
    let multipliers = match args.sigma2_multipliers.or_else(|| cfg.get_string("sigma2-multipliers")) {
        Some(raw) => Some(parse_f64_list(&raw, "--sigma2-multipliers")?),
        None => None,
    };

    check(copies >= 1, "synth-gauss: --copies must be at least 1")?;
    check(!dims.is_empty() && dims.iter().all(|&d| d >= 1), "synth-gauss: --d must be positive")?;
    check(!ns.is_empty() && ns.iter().all(|&n| n >= 2), "synth-gauss: --n must be at least 2")?;
    if let Some(m) = &multipliers {
        check(
            m.iter().all(|v| *v >= 0.0 && v.is_finite()),
            "synth-gauss: sigma2 multipliers must be nonnegative",
        )?;
        check(
            dims.len() == 1 && ns.len() == 1,
            "synth-gauss: a sigma2 sweep needs scalar --d and --n",
        )?;
    }
    check(
        dims.len() == 1 || ns.len() == 1,
        "synth-gauss: only one of --d and --n may be a list",
    )?;

    let resolved = SynthGaussConfig {
        d: dims.clone(),
        n: ns.clone(),
        copies,
        estimators: estimators_raw,
        sigma2_multipliers: multipliers.clone(),
        seed: common.seed,
    };

    let sweep = if let Some(m) = multipliers {
        RiskSweep::IsotropicVariance { multipliers: m, d: dims[0], n: ns[0] }
    } else if dims.len() > 1 {
        RiskSweep::Dimension { dims: dims.clone(), n: ns[0] }
    } else {
        RiskSweep::SampleSize { ns: ns.clone(), d: dims[0] }
    };
    let rows = synth::risk_experiment(&sweep, copies, &kinds, common.seed)?;

    let mut table = Table::new(vec!["sweep", "value", "estimator", "mean_loss", "stderr", "copies"]);
    for row in &rows {
        table.push(vec![
            Cell::Str(row.sweep_name.to_string()),
            Cell::Float(row.sweep_value),
            Cell::Str(row.estimator.clone()),
            Cell::Float(row.report.mean),
            Cell::Float(row.report.stderr),
            Cell::UInt(copies as u64),
        ]);
    }
    let summary = json!({ "rows": table.rows.len() });
    Ok(CommandOutput { config_echo: config_value(&resolved)?, table, summary })
}

// ---------------------------------------------------------------------------
// synth-t

#[derive(Debug, Serialize)]
struct SynthTConfig {
    d: Vec<usize>,
    n: Vec<usize>,
    df: f64,
    copies: usize,
    test_points: usize,
    estimators: String,
    bw_grid: Vec<f64>,
    prototypes: usize,
    seed: u64,
}

pub fn run_synth_t(args: SynthTArgs, cfg: &ConfigFile, common: &CommonConfig) -> CliResult<CommandOutput> {
    let d_raw = resolve_string(args.d, cfg, "d", "10");
    let n_raw = resolve_string(args.n, cfg, "n", "100");
    let dims = parse_usize_list(&d_raw, "--d")?;
    let ns = parse_usize_list(&n_raw, "--n")?;
    let df = resolve(args.df, cfg, "df", 3.0f64)?;
    let copies = resolve(args.copies, cfg, "copies", 30usize)?;
    let test_points = resolve(args.test_points, cfg, "test-points", 1000usize)?;
    let estimators_raw = resolve_string(args.estimators, cfg, "estimators", DEFAULT_ESTIMATORS);
    let kinds = parse_estimators(&estimators_raw)?;
    let grid_raw = resolve_string(args.bw_grid, cfg, "bw-grid", "0.125,0.25,0.5,1,2,4,8");
    let bw_grid = parse_f64_list(&grid_raw, "--bw-grid")?;
    let prototypes = resolve(args.prototypes, cfg, "prototypes", 10usize)?;

    check(df > 0.0, "synth-t: --df must be positive")?;
    check(copies >= 1, "synth-t: --copies must be at least 1")?;
    check(test_points >= 1, "synth-t: --test-points must be at least 1")?;
    check(prototypes >= 1, "synth-t: --prototypes must be at least 1")?;
    check(
        bw_grid.iter().all(|v| *v > 0.0 && v.is_finite()),
        "synth-t: bandwidth multipliers must be positive",
    )?;
    check(!dims.is_empty() && dims.iter().all(|&d| d >= 1), "synth-t: --d must be positive")?;
    // the pipeline needs prototypes plus a validation fifth
    let min_n = (prototypes.max(3) * 5).div_ceil(4);
    check(
        ns.iter().all(|&n| n >= min_n),
        &format!("synth-t: --n must be at least {min_n} for {prototypes} prototypes"),
    )?;
    check(dims.len() == 1 || ns.len() == 1, "synth-t: only one of --d and --n may be a list")?;

    let resolved = SynthTConfig {
        d: dims.clone(),
        n: ns.clone(),
        df,
        copies,
        test_points,
        estimators: estimators_raw,
        bw_grid: bw_grid.clone(),
        prototypes,
        seed: common.seed,
    };

    let sweep = if dims.len() > 1 {
        TSweep::Dimension { dims: dims.clone(), n: ns[0] }
    } else {
        TSweep::SampleSize { ns: ns.clone(), d: dims[0] }
    };
    let kde_cfg = KdeConfig { prototypes, kmeans_iters: 100 };
    let rows =
        synth::t_nll_experiment(&sweep, df, copies, test_points, &kinds, &bw_grid, kde_cfg, common.seed)?;

    let mut table = Table::new(vec!["sweep", "value", "estimator", "mean_nll", "stderr", "copies"]);
    for row in &rows {
        table.push(vec![
            Cell::Str(row.sweep_name.to_string()),
            Cell::UInt(row.sweep_value as u64),
            Cell::Str(row.estimator.clone()),
            Cell::Float(row.mean_nll),
            Cell::Float(row.stderr),
            Cell::UInt(row.copies as u64),
        ]);
    }
    let summary = json!({ "rows": table.rows.len() });
    Ok(CommandOutput { config_echo: config_value(&resolved)?, table, summary })
}

// ---------------------------------------------------------------------------
// two-sample

#[derive(Debug, Serialize)]
struct TwoSampleConfig {
    a: Option<PathBuf>,
    b: Option<PathBuf>,
    has_header: bool,
    gen1: Option<String>,
    gen2: Option<String>,
    d: Option<Vec<usize>>,
    n: Option<usize>,
    trials: Option<usize>,
    perms: usize,
    alpha: f64,
    estimators: String,
    seed: u64,
}

fn parse_generator(s: &str) -> CliResult<SyntheticDistribution<f64>> {
    if let Some(rest) = s.strip_prefix("normal:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 2 {
            return Err(CliError::Usage(format!("generator `{s}`: expected normal:MEAN,SD")));
        }
        let mean: f64 = parts[0]
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("generator `{s}`: bad mean")))?;
        let sd: f64 = parts[1]
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("generator `{s}`: bad standard deviation")))?;
        if !sd.is_finite() || sd <= 0.0 {
            return Err(CliError::Usage(format!("generator `{s}`: sd must be positive")));
        }
        return Ok(SyntheticDistribution::Gaussian { mean, sd });
    }
    match s {
        "mog" => Ok(SyntheticDistribution::MixtureFresh),
        "mog-shared" => Ok(SyntheticDistribution::MixtureShared),
        other => Err(CliError::Usage(format!(
            "unknown generator `{other}` (expected normal:MEAN,SD, mog, or mog-shared)"
        ))),
    }
}

pub fn run_two_sample(
    args: TwoSampleArgs,
    cfg: &ConfigFile,
    common: &CommonConfig,
) -> CliResult<CommandOutput> {
    let a = args.a.or_else(|| cfg.get_string("a").map(PathBuf::from));
    let b = args.b.or_else(|| cfg.get_string("b").map(PathBuf::from));
    let has_header = args.has_header || cfg.get::<bool>("has-header")?.unwrap_or(false);
    let gen1 = args.gen1.or_else(|| cfg.get_string("gen1"));
    let gen2 = args.gen2.or_else(|| cfg.get_string("gen2"));
    let perms = resolve(args.perms, cfg, "perms", 1000usize)?;
    let alpha = resolve(args.alpha, cfg, "alpha", 0.05f64)?;
    let estimators_raw = resolve_string(args.estimators, cfg, "estimators", DEFAULT_ESTIMATORS);
    let kinds = parse_estimators(&estimators_raw)?;

    check(perms >= 1, "two-sample: --perms must be at least 1")?;
    check(alpha > 0.0 && alpha < 1.0, "two-sample: --alpha must lie in (0, 1)")?;

    let file_mode = a.is_some() || b.is_some();
    if file_mode {
        check(a.is_some() && b.is_some(), "two-sample: --a and --b must be given together")?;
    } else {
        check(
            gen1.is_some() && gen2.is_some(),
            "two-sample: give --a/--b for file mode or --gen1/--gen2 for power mode",
        )?;
    }

    if file_mode {
        let a = a.unwrap();
        let b = b.unwrap();
        let resolved = TwoSampleConfig {
            a: Some(a.clone()),
            b: Some(b.clone()),
            has_header,
            gen1: None,
            gen2: None,
            d: None,
            n: None,
            trials: None,
            perms,
            alpha,
            estimators: estimators_raw,
            seed: common.seed,
        };
        let s1 = load_csv(&a, has_header, None)?.matrix;
        let s2 = load_csv(&b, has_header, None)?.matrix;
        let pooled = s1.concat_rows(&s2)?;
        let bw = median_heuristic(&pooled)?;

        let mut table = Table::new(vec![
            "estimator", "n1", "n2", "d", "perms", "alpha", "statistic", "p_value", "rejected",
        ]);
        let mut results = Vec::new();
        for kind in &kinds {
            let r = mmd::two_sample_test(&s1, &s2, bw, kind, perms, alpha, common.seed)?;
            table.push(vec![
                Cell::Str(kind.name().to_string()),
                Cell::UInt(s1.n() as u64),
                Cell::UInt(s2.n() as u64),
                Cell::UInt(s1.dim() as u64),
                Cell::UInt(perms as u64),
                Cell::Float(alpha),
                Cell::Float(r.statistic),
                Cell::Float(r.p_value),
                Cell::Bool(r.rejected),
            ]);
            results.push(json!({
                "estimator": kind.name(),
                "statistic": r.statistic,
                "p_value": r.p_value,
                "rejected": r.rejected,
            }));
        }
        let summary = json!({ "mode": "test", "results": results });
        Ok(CommandOutput { config_echo: config_value(&resolved)?, table, summary })
    } else {
        let d_raw = resolve_string(args.d, cfg, "d", "1");
        let dims = parse_usize_list(&d_raw, "--d")?;
        let n = resolve(args.n, cfg, "n", 50usize)?;
        let trials = resolve(args.trials, cfg, "trials", 500usize)?;
        check(n >= 2, "two-sample: --n must be at least 2")?;
        check(trials >= 1, "two-sample: --trials must be at least 1")?;
        check(!dims.is_empty() && dims.iter().all(|&d| d >= 1), "two-sample: --d must be positive")?;
        let g1 = parse_generator(gen1.as_deref().unwrap())?;
        let g2 = parse_generator(gen2.as_deref().unwrap())?;

        let resolved = TwoSampleConfig {
            a: None,
            b: None,
            has_header,
            gen1,
            gen2,
            d: Some(dims.clone()),
            n: Some(n),
            trials: Some(trials),
            perms,
            alpha,
            estimators: estimators_raw,
            seed: common.seed,
        };
        let rows = mmd::power_curve(&g1, &g2, &dims, n, trials, &kinds, perms, alpha, common.seed)?;
        let mut table = Table::new(vec!["dim", "estimator", "trials", "rejections", "power"]);
        for row in &rows {
            table.push(vec![
                Cell::UInt(row.dim as u64),
                Cell::Str(row.estimator.clone()),
                Cell::UInt(row.trials as u64),
                Cell::UInt(row.rejections as u64),
                Cell::Float(row.power),
            ]);
        }
        let summary = json!({ "mode": "power", "rows": table.rows.len() });
        Ok(CommandOutput { config_echo: config_value(&resolved)?, table, summary })
    }
}

// ---------------------------------------------------------------------------
// hsic

#[derive(Debug, Serialize)]
struct HsicConfig {
    input: PathBuf,
    has_header: bool,
    label_col: usize,
    eta: Vec<f64>,
    alpha: Vec<f64>,
    repetitions: usize,
    perms: usize,
    estimators: String,
    seed: u64,
}

pub fn run_hsic(args: HsicArgs, cfg: &ConfigFile, common: &CommonConfig) -> CliResult<CommandOutput> {
    let input = match args.input {
        Some(p) => p,
        None => cfg
            .get_string("input")
            .map(PathBuf::from)
            .ok_or_else(|| CliError::Usage("hsic: --input is required".into()))?,
    };
    let has_header = args.has_header || cfg.get::<bool>("has-header")?.unwrap_or(false);
    let label_col = resolve_opt(args.label_col, cfg, "label-col")?
        .ok_or_else(|| CliError::Usage("hsic: --label-col is required".into()))?;
    let eta_raw = resolve_string(args.eta, cfg, "eta", "1.0");
    let etas = parse_f64_list(&eta_raw, "--eta")?;
    let alpha_raw = resolve_string(args.alpha, cfg, "alpha", "0.05");
    let alphas = parse_f64_list(&alpha_raw, "--alpha")?;
    let repetitions = resolve(args.repetitions, cfg, "repetitions", 200usize)?;
    let perms = resolve(args.perms, cfg, "perms", 2000usize)?;
    let estimators_raw =
        resolve_string(args.estimators, cfg, "estimators", DEFAULT_HSIC_ESTIMATORS);
    let kinds = parse_estimators(&estimators_raw)?;

    check(repetitions >= 1, "hsic: --repetitions must be at least 1")?;
    check(perms >= 1, "hsic: --perms must be at least 1")?;
    check(
        etas.iter().all(|e| *e > 0.0 && *e <= 1.0),
        "hsic: --eta fractions must lie in (0, 1]",
    )?;
    check(
        alphas.iter().all(|a| *a > 0.0 && *a < 1.0),
        "hsic: --alpha levels must lie in (0, 1)",
    )?;

    let resolved = HsicConfig {
        input: input.clone(),
        has_header,
        label_col,
        eta: etas.clone(),
        alpha: alphas.clone(),
        repetitions,
        perms,
        estimators: estimators_raw,
        seed: common.seed,
    };

    let ds = load_csv(&input, has_header, Some(label_col))?;
    let labels = ds.labels.expect("label column requested");
    let ys = DataMatrixF64::from_rows(&labels.iter().map(|v| vec![*v]).collect::<Vec<_>>())
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let pair = PairedSample::new(ds.matrix, ys).map_err(|e| CliError::Runtime(e.to_string()))?;

    let rows = hsic::power_study(&pair, &etas, &alphas, repetitions, perms, &kinds, common.seed)?;
    let mut table = Table::new(vec![
        "alpha", "eta", "estimator", "repetitions", "rejections", "power", "mean_statistic",
        "mean_p_value",
    ]);
    for row in &rows {
        table.push(vec![
            Cell::Float(row.alpha),
            Cell::Float(row.eta),
            Cell::Str(row.estimator.clone()),
            Cell::UInt(row.repetitions as u64),
            Cell::UInt(row.rejections as u64),
            Cell::Float(row.power),
            Cell::Float(row.mean_statistic),
            Cell::Float(row.mean_p_value),
        ]);
    }
    let summary = json!({ "dataset": ds.name, "rows": table.rows.len() });
    Ok(CommandOutput { config_echo: config_value(&resolved)?, table, summary })
}

// ---------------------------------------------------------------------------
// kde

#[derive(Debug, Serialize)]
struct KdeCmdConfig {
    input: PathBuf,
    has_header: bool,
    label_col: Option<usize>,
    estimators: String,
    test_fraction: f64,
    bw_grid: Vec<f64>,
    prototypes: usize,
    seed: u64,
}

pub fn run_kde(args: KdeArgs, cfg: &ConfigFile, common: &CommonConfig) -> CliResult<CommandOutput> {
    let input = match args.input {
        Some(p) => p,
        None => cfg
            .get_string("input")
            .map(PathBuf::from)
            .ok_or_else(|| CliError::Usage("kde: --input is required".into()))?,
    };
    let has_header = args.has_header || cfg.get::<bool>("has-header")?.unwrap_or(false);
    let label_col = resolve_opt(args.label_col, cfg, "label-col")?;
    let estimators_raw = resolve_string(args.estimators, cfg, "estimators", DEFAULT_ESTIMATORS);
    let kinds = parse_estimators(&estimators_raw)?;
    let test_fraction = resolve(args.test_fraction, cfg, "test-fraction", 0.3f64)?;
    let grid_raw = resolve_string(args.bw_grid, cfg, "bw-grid", "0.125,0.25,0.5,1,2,4,8");
    let bw_grid = parse_f64_list(&grid_raw, "--bw-grid")?;
    let prototypes = resolve(args.prototypes, cfg, "prototypes", 10usize)?;

    check(
        test_fraction > 0.0 && test_fraction < 1.0,
        "kde: --test-fraction must lie in (0, 1)",
    )?;
    check(prototypes >= 1, "kde: --prototypes must be at least 1")?;
    check(
        bw_grid.iter().all(|v| *v > 0.0 && v.is_finite()),
        "kde: bandwidth multipliers must be positive",
    )?;

    let resolved = KdeCmdConfig {
        input: input.clone(),
        has_header,
        label_col,
        estimators: estimators_raw,
        test_fraction,
        bw_grid: bw_grid.clone(),
        prototypes,
        seed: common.seed,
    };

    let ds = load_csv(&input, has_header, label_col)?;
    let kde_cfg = KdeConfig { prototypes, kmeans_iters: 100 };
    let mut table = Table::new(vec![
        "estimator", "train_n", "test_n", "prototypes", "bw_multiplier", "test_nll",
    ]);
    let mut results = Vec::new();
    for kind in &kinds {
        let report = density::kde_pipeline_with(
            &ds.matrix,
            kind,
            test_fraction,
            &bw_grid,
            kde_cfg,
            common.seed,
        )?;
        table.push(vec![
            Cell::Str(kind.name().to_string()),
            Cell::UInt(report.train_n as u64),
            Cell::UInt(report.test_n as u64),
            Cell::UInt(prototypes as u64),
            Cell::Float(report.multiplier),
            Cell::Float(report.test_nll),
        ]);
        results.push(json!({ "estimator": kind.name(), "test_nll": report.test_nll }));
    }
    let summary = json!({ "dataset": ds.name, "results": results });
    Ok(CommandOutput { config_echo: config_value(&resolved)?, table, summary })
}
