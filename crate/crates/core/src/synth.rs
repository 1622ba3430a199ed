//! Synthetic generators and the closed-form loss oracle: Gaussian mixtures
//! with Wishart covariances, multivariate-t samples, exact RKHS loss against
//! a known mixture, and the seeded experiment drivers built on them.

use rand::distributions::Distribution;
use rand_distr::ChiSquared;
use rayon::prelude::*;

use crate::data::DataMatrix;
use crate::density::{fit_density, nll, KdeConfig};
use crate::error::{Error, Result};
use crate::estimators::{self, EstimatorKind, MeanEstimate};
use crate::kernels::{median_heuristic, CorruptionModel};
use crate::linalg::{chol_logdet, chol_solve, cholesky_in_place};
use crate::rng::{derive_seed, standard_normal, substream, uniform};
use crate::scalar::Scalar;

/// Mixture weights shared by every generated specification.
pub const MOG_WEIGHTS: [f64; 4] = [0.05, 0.3, 0.4, 0.25];

/// Additive observation-noise variance folded into each component.
pub const MOG_NOISE_VARIANCE: f64 = 0.2;

/// A four-component Gaussian mixture with dense SPD covariances plus
/// isotropic observation noise.
#[derive(Debug, Clone, PartialEq)]
pub struct MoGSpec<S> {
    pis: [S; 4],
    means: DataMatrix<S>,
    /// dense `d x d` covariances, row-major, noise not included
    covariances: Vec<Vec<S>>,
    noise_var: S,
}

impl<S: Scalar> MoGSpec<S> {
    pub fn pis(&self) -> &[S; 4] {
        &self.pis
    }

    pub fn means(&self) -> &DataMatrix<S> {
        &self.means
    }

    pub fn covariances(&self) -> &[Vec<S>] {
        &self.covariances
    }

    pub fn noise_var(&self) -> S {
        self.noise_var
    }

    pub fn dim(&self) -> usize {
        self.means.dim()
    }

    /// Component covariance with the observation noise folded onto the
    /// diagonal.
    fn noisy_covariance(&self, c: usize) -> Vec<S> {
        let d = self.dim();
        let mut m = self.covariances[c].clone();
        for j in 0..d {
            m[j * d + j] += self.noise_var;
        }
        m
    }
}

/// Draws a mixture specification: component means uniform on `(-10, 10)^d`
/// and covariances from a Wishart with scale `2 I_d`. The degrees of freedom
/// are `max(7, d + 1)` so every draw stays positive definite.
pub fn sample_mog_spec<S: Scalar>(d: usize, seed: u64) -> Result<MoGSpec<S>> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    let mut mean_rng = substream(seed, "mog/means", 0);
    let mut flat = Vec::with_capacity(4 * d);
    for _ in 0..4 * d {
        flat.push(uniform::<S>(&mut mean_rng, -10.0, 10.0));
    }
    let means = DataMatrix::new(4, d, flat)?;

    let df = 7.max(d + 1);
    let sqrt2 = S::cast(2.0f64.sqrt());
    let mut covariances = Vec::with_capacity(4);
    for c in 0..4 {
        let mut rng = substream(seed, "mog/cov", c as u64);
        let mut m = vec![S::zero(); d * d];
        for _ in 0..df {
            let z: Vec<S> = (0..d).map(|_| sqrt2 * standard_normal::<S>(&mut rng)).collect();
            for i in 0..d {
                for j in 0..d {
                    m[i * d + j] += z[i] * z[j];
                }
            }
        }
        covariances.push(m);
    }
    let spec = MoGSpec {
        pis: [
            S::cast(MOG_WEIGHTS[0]),
            S::cast(MOG_WEIGHTS[1]),
            S::cast(MOG_WEIGHTS[2]),
            S::cast(MOG_WEIGHTS[3]),
        ],
        means,
        covariances,
        noise_var: S::cast(MOG_NOISE_VARIANCE),
    };
    // every noisy covariance must factor
    for c in 0..4 {
        let mut m = spec.noisy_covariance(c);
        cholesky_in_place(&mut m, d)?;
    }
    Ok(spec)
}

/// Draws `n` points from the mixture (component by weight, then a Gaussian
/// draw with the noise folded in).
pub fn sample_mog<S: Scalar>(spec: &MoGSpec<S>, n: usize, seed: u64) -> Result<DataMatrix<S>> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let d = spec.dim();
    let mut chols = Vec::with_capacity(4);
    for c in 0..4 {
        let mut m = spec.noisy_covariance(c);
        cholesky_in_place(&mut m, d)?;
        chols.push(m);
    }
    let mut rng = substream(seed, "mog/draw", 0);
    let mut flat = Vec::with_capacity(n * d);
    for _ in 0..n {
        let u: S = uniform(&mut rng, 0.0, 1.0);
        let mut c = 0usize;
        let mut acc = S::zero();
        for (k, pi) in spec.pis.iter().enumerate() {
            acc += *pi;
            if u < acc {
                c = k;
                break;
            }
            c = k;
        }
        let z: Vec<S> = (0..d).map(|_| standard_normal(&mut rng)).collect();
        let l = &chols[c];
        for i in 0..d {
            let mut v = spec.means.get(c, i);
            for (j, zj) in z.iter().enumerate().take(i + 1) {
                v += l[i * d + j] * *zj;
            }
            flat.push(v);
        }
    }
    DataMatrix::new(n, d, flat)
}

/// A multivariate-t source: scale Cholesky factor plus degrees of freedom.
#[derive(Debug, Clone)]
pub struct TSpec<S> {
    chol: Vec<S>,
    d: usize,
    df: f64,
}

/// Draws the random scale matrix `A^T A / d + I` for a t source.
pub fn sample_t_spec<S: Scalar>(d: usize, df: f64, seed: u64) -> Result<TSpec<S>> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    if !df.is_finite() || df <= 0.0 {
        return Err(Error::InvalidParameter(format!("degrees of freedom {df}")));
    }
    let mut rng = substream(seed, "t/scale", 0);
    let a: Vec<S> = (0..d * d).map(|_| standard_normal(&mut rng)).collect();
    let mut sigma = vec![S::zero(); d * d];
    let inv_d = S::one() / S::from_count(d);
    for i in 0..d {
        for j in 0..d {
            let mut acc = S::zero();
            for k in 0..d {
                acc += a[k * d + i] * a[k * d + j];
            }
            sigma[i * d + j] = acc * inv_d;
        }
        sigma[i * d + i] += S::one();
    }

    cholesky_in_place(&mut sigma, d)?;
    Ok(TSpec { chol: sigma, d, df })
}

/// Draws `n` points `L z sqrt(df / w)` with `z` standard normal and `w`
/// chi-square with the spec's degrees of freedom.
pub fn sample_t_from<S: Scalar>(spec: &TSpec<S>, n: usize, seed: u64) -> Result<DataMatrix<S>> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let d = spec.d;
    let chi = ChiSquared::new(spec.df).map_err(|_| {
        Error::InvalidParameter(format!("degrees of freedom {}", spec.df))
    })?;
    let mut rng = substream(seed, "t/draw", 0);
    let mut flat = Vec::with_capacity(n * d);
    for _ in 0..n {
        let z: Vec<S> = (0..d).map(|_| standard_normal(&mut rng)).collect();
        let w: f64 = chi.sample(&mut rng);
        let scale = S::cast((spec.df / w).sqrt());
        for i in 0..d {
            let mut v = S::zero();
            for (j, zj) in z.iter().enumerate().take(i + 1) {
                v += spec.chol[i * d + j] * *zj;
            }
            flat.push(v * scale);
        }
    }
    DataMatrix::new(n, d, flat)
}

/// One-call t sampler with a fresh random scale matrix derived from `seed`.
pub fn sample_t<S: Scalar>(d: usize, df: f64, n: usize, seed: u64) -> Result<DataMatrix<S>> {
    let spec = sample_t_spec(d, df, seed)?;
    sample_t_from(&spec, n, seed)
}

/// Dense-covariance counterpart of the marginalized kernel, used only by the
/// loss oracle. `m` must hold `cov_a + cov_b + theta^2 I` and gets factored
/// in place.
struct DenseMarginal<S> {
    chol: Vec<S>,
    d: usize,
    log_norm: S,
}

impl<S: Scalar> DenseMarginal<S> {
    fn new(mut m: Vec<S>, d: usize, theta2: S) -> Result<Self> {
        cholesky_in_place(&mut m, d)?;
        let logdet = chol_logdet(&m, d);
        let log_norm = (S::from_count(d) * theta2.ln() - logdet) * S::cast(0.5);
        Ok(Self { chol: m, d, log_norm })
    }

    fn eval(&self, x: &[S], y: &[S]) -> S {
        let diff: Vec<S> = x.iter().zip(y.iter()).map(|(a, b)| *a - *b).collect();
        let sol = chol_solve(&self.chol, self.d, &diff);
        let mut quad = S::zero();
        for (a, b) in diff.iter().zip(sol.iter()) {
            quad += *a * *b;
        }
        (self.log_norm - quad * S::cast(0.5)).exp()
    }
}

fn dense_sum<S: Scalar>(
    base: &[S],
    d: usize,
    extra_diag: &CorruptionModel<S>,
    theta2: S,
) -> Vec<S> {
    let mut m = base.to_vec();
    for j in 0..d {
        m[j * d + j] += extra_diag.variance(j) + theta2;
    }
    m
}

/// Exact squared RKHS distance between an estimate and the true kernel mean
/// of the mixture. The expectation terms use the dense-covariance
/// generalization of the marginalized kernel.
pub fn loss_against_mog<S: Scalar>(est: &MeanEstimate<S>, spec: &MoGSpec<S>) -> Result<S> {
    let d = spec.dim();
    if est.base().dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: est.base().dim() });
    }
    let theta2 = est.bandwidth().theta2();
    let two = S::cast(2.0);

    let self_term = est.inner_product(est)?;

    // cross terms: one corrupted estimate argument, one mixture component
    let mut cross = S::zero();
    for c in 0..4 {
        let m = dense_sum(&spec.noisy_covariance(c), d, est.corruption(), theta2);
        let kernel = DenseMarginal::new(m, d, theta2)?;
        let mut acc = S::zero();
        for (i, beta) in est.beta().iter().enumerate() {
            acc += *beta * kernel.eval(est.base().row(i), spec.means.row(c));
        }
        cross += spec.pis[c] * acc;
    }

    // mixture self term
    let mut mix = S::zero();
    for a in 0..4 {
        for b in 0..4 {
            let mut m = spec.noisy_covariance(a);
            let other = spec.noisy_covariance(b);
            for (mv, ov) in m.iter_mut().zip(other.iter()) {
                *mv += *ov;
            }
            for j in 0..d {
                m[j * d + j] += theta2;
            }
            let kernel = DenseMarginal::new(m, d, theta2)?;
            mix += spec.pis[a] * spec.pis[b] * kernel.eval(spec.means.row(a), spec.means.row(b));
        }
    }

    Ok(self_term - two * cross + mix)
}

/// Per-sweep-point loss summary over independent sample copies.
#[derive(Debug, Clone)]
pub struct RiskReport<S> {
    pub per_copy_losses: Vec<S>,
    pub mean: S,
    pub stderr: S,
}

impl<S: Scalar> RiskReport<S> {
    pub fn from_losses(losses: Vec<S>) -> Self {
        let m = losses.len();
        let mut mean = S::zero();
        for l in &losses {
            mean += *l;
        }
        mean /= S::from_count(m);
        let stderr = if m > 1 {
            let mut var = S::zero();
            for l in &losses {
                let diff = *l - mean;
                var += diff * diff;
            }
            (var / S::from_count(m - 1)).sqrt() / S::from_count(m).sqrt()
        } else {
            S::zero()
        };
        Self { per_copy_losses: losses, mean, stderr }
    }
}

/// What the risk experiment sweeps over.
#[derive(Debug, Clone)]
pub enum RiskSweep<S> {
    /// Vary the dimension at a fixed sample size.
    Dimension { dims: Vec<usize>, n: usize },
    /// Vary the sample size at a fixed dimension.
    SampleSize { ns: Vec<usize>, d: usize },
    /// Hold data fixed per copy and sweep a fixed isotropic corruption
    /// variance, expressed as multipliers of the median-heuristic bandwidth.
    IsotropicVariance { multipliers: Vec<S>, d: usize, n: usize },
}

/// One row of the risk table.
#[derive(Debug, Clone)]
pub struct RiskRow<S> {
    pub sweep_name: &'static str,
    pub sweep_value: f64,
    pub estimator: String,
    pub report: RiskReport<S>,
}

/// Average loss per sweep point and estimator, over `copies` independent
/// draws of (specification, sample).
pub fn risk_experiment<S: Scalar>(
    sweep: &RiskSweep<S>,
    copies: usize,
    estimators: &[EstimatorKind<S>],
    seed: u64,
) -> Result<Vec<RiskRow<S>>> {
    if copies == 0 {
        return Err(Error::InvalidParameter("need at least one copy".into()));
    }
    match sweep {
        RiskSweep::Dimension { dims, n } => {
            risk_points(dims.iter().map(|&d| (d, *n)), "d", copies, estimators, seed)
        }
        RiskSweep::SampleSize { ns, d } => {
            risk_points(ns.iter().map(|&n| (*d, n)), "n", copies, estimators, seed)
        }
        RiskSweep::IsotropicVariance { multipliers, d, n } => {
            if multipliers.is_empty() {
                return Err(Error::InvalidParameter("empty multiplier grid".into()));
            }
            let per_copy: Result<Vec<Vec<S>>> = (0..copies)
                .into_par_iter()
                .map(|ci| {
                    let key = ci as u64;
                    let spec = sample_mog_spec::<S>(*d, derive_seed(seed, "risk/spec", key))?;
                    let xs = sample_mog(&spec, *n, derive_seed(seed, "risk/sample", key))?;
                    let bw = median_heuristic(&xs)?;
                    let w = S::one() / S::from_count(*n);
                    multipliers
                        .iter()
                        .map(|&mult| {
                            let est = MeanEstimate::new(
                                xs.clone(),
                                vec![w; *n],
                                CorruptionModel::Isotropic(mult * bw.theta2()),
                                bw,
                            )?;
                            loss_against_mog(&est, &spec)
                        })
                        .collect()
                })
                .collect();
            let per_copy = per_copy?;
            let mut rows = Vec::new();
            for (mi, &mult) in multipliers.iter().enumerate() {
                let losses: Vec<S> = per_copy.iter().map(|c| c[mi]).collect();
                rows.push(RiskRow {
                    sweep_name: "sigma2_multiplier",
                    sweep_value: mult.as_f64(),
                    estimator: "mkme-fixed".to_string(),
                    report: RiskReport::from_losses(losses),
                });
            }
            Ok(rows)
        }
    }
}

fn risk_points<S: Scalar>(
    points: impl Iterator<Item = (usize, usize)>,
    sweep_name: &'static str,
    copies: usize,
    estimators: &[EstimatorKind<S>],
    seed: u64,
) -> Result<Vec<RiskRow<S>>> {
    if estimators.is_empty() {
        return Err(Error::InvalidParameter("empty estimator list".into()));
    }
    let mut rows = Vec::new();
    for (pi, (d, n)) in points.enumerate() {
        let per_copy: Result<Vec<Vec<S>>> = (0..copies)
            .into_par_iter()
            .map(|ci| {
                let key = ((pi as u64) << 32) | ci as u64;
                let spec = sample_mog_spec::<S>(d, derive_seed(seed, "risk/spec", key))?;
                let xs = sample_mog(&spec, n, derive_seed(seed, "risk/sample", key))?;
                let bw = median_heuristic(&xs)?;
                estimators
                    .iter()
                    .map(|kind| {
                        let est = estimators::fit(kind, &xs, bw)?;
                        loss_against_mog(&est, &spec)
                    })
                    .collect()
            })
            .collect();
        let per_copy = per_copy?;
        let value = if sweep_name == "d" { d as f64 } else { n as f64 };
        for (ei, kind) in estimators.iter().enumerate() {
            let losses: Vec<S> = per_copy.iter().map(|c| c[ei]).collect();
            rows.push(RiskRow {
                sweep_name,
                sweep_value: value,
                estimator: kind.name().to_string(),
                report: RiskReport::from_losses(losses),
            });
        }
    }
    Ok(rows)
}

/// What the t-distribution likelihood experiment sweeps over.
#[derive(Debug, Clone)]
pub enum TSweep {
    Dimension { dims: Vec<usize>, n: usize },
    SampleSize { ns: Vec<usize>, d: usize },
}

/// One row of the t-distribution likelihood table.
#[derive(Debug, Clone)]
pub struct TNllRow<S> {
    pub sweep_name: &'static str,
    pub sweep_value: usize,
    pub estimator: String,
    pub mean_nll: S,
    pub stderr: S,
    pub copies: usize,
}

/// Density-estimation quality on heavy-tailed data: train on a t sample,
/// fit the mixture density per estimator, and score held-out draws from the
/// same source. Averages over independent copies.
#[allow(clippy::too_many_arguments)]
pub fn t_nll_experiment<S: Scalar>(
    sweep: &TSweep,
    df: f64,
    copies: usize,
    test_points: usize,
    estimators: &[EstimatorKind<S>],
    bw_grid: &[S],
    cfg: KdeConfig,
    seed: u64,
) -> Result<Vec<TNllRow<S>>> {
    if copies == 0 {
        return Err(Error::InvalidParameter("need at least one copy".into()));
    }
    if test_points == 0 {
        return Err(Error::EmptySample);
    }
    if estimators.is_empty() {
        return Err(Error::InvalidParameter("empty estimator list".into()));
    }
    let points: Vec<(usize, usize, &'static str)> = match sweep {
        TSweep::Dimension { dims, n } => dims.iter().map(|&d| (d, *n, "d")).collect(),
        TSweep::SampleSize { ns, d } => ns.iter().map(|&n| (*d, n, "n")).collect(),
    };
    let mut rows = Vec::new();
    for (pi, &(d, n, name)) in points.iter().enumerate() {
        let per_copy: Result<Vec<Vec<S>>> = (0..copies)
            .into_par_iter()
            .map(|ci| {
                let key = ((pi as u64) << 32) | ci as u64;
                let tspec = sample_t_spec::<S>(d, df, derive_seed(seed, "t-nll/spec", key))?;
                let train = sample_t_from(&tspec, n, derive_seed(seed, "t-nll/train", key))?;
                let test =
                    sample_t_from(&tspec, test_points, derive_seed(seed, "t-nll/test", key))?;
                estimators
                    .iter()
                    .map(|kind| {
                        let fit = fit_density(
                            &train,
                            kind,
                            bw_grid,
                            cfg,
                            derive_seed(seed, "t-nll/fit", key),
                        )?;
                        nll(&fit.model, &test)
                    })
                    .collect()
            })
            .collect();
        let per_copy = per_copy?;
        let value = if name == "d" { d } else { n };
        for (ei, kind) in estimators.iter().enumerate() {
            let nlls: Vec<S> = per_copy.iter().map(|c| c[ei]).collect();
            let report = RiskReport::from_losses(nlls);
            rows.push(TNllRow {
                sweep_name: name,
                sweep_value: value,
                estimator: kind.name().to_string(),
                mean_nll: report.mean,
                stderr: report.stderr,
                copies,
            });
        }
    }
    Ok(rows)
}
