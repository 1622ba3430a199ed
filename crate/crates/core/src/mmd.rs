//! Maximum mean discrepancy statistics and the permutation two-sample test.
//!
//! The test pools both samples, reshuffles them `B` times with a seeded
//! generator, and recomputes the statistic on each split. Hyperparameters
//! (corruption covariances, shrinkage regularizers) are selected once on the
//! original samples and held fixed across permutations; the permuted halves
//! inherit the average of the two selected models.

use rayon::prelude::*;

use crate::covariance::{default_isotropic_bounds, select_diagonal_default, select_isotropic};
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::estimators::{shrinkage_select, EstimatorKind, ShrinkageKind};
use crate::kernels::{
    gram, marginal_gram, marginal_unchecked, median_heuristic, Bandwidth, CorruptionModel,
    GramKind, GramMatrix,
};
use crate::linalg::{cholesky_in_place, chol_solve};
use crate::rng::{derive_seed, substream};
use crate::scalar::Scalar;
use crate::synth::{sample_mog, sample_mog_spec};

/// Outcome of a permutation test.
#[derive(Debug, Clone)]
pub struct TestResult<S> {
    pub statistic: S,
    pub null_stats: Vec<S>,
    pub p_value: f64,
    pub rejected: bool,
    pub alpha: f64,
}

impl<S: Scalar> TestResult<S> {
    /// Builds the result from an observed statistic and its permutation
    /// null, using the add-one convention `p = (1 + #{null >= obs}) / (B + 1)`.
    pub fn from_null(statistic: S, null_stats: Vec<S>, alpha: f64) -> Result<Self> {
        if null_stats.is_empty() {
            return Err(Error::InvalidParameter("need at least one permutation".into()));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha {alpha}")));
        }
        let exceed = null_stats.iter().filter(|v| **v >= statistic).count();
        let p_value = (1 + exceed) as f64 / (null_stats.len() + 1) as f64;
        Ok(Self { statistic, null_stats, p_value, rejected: p_value < alpha, alpha })
    }
}

fn check_two_samples<S: Scalar>(s1: &DataMatrix<S>, s2: &DataMatrix<S>) -> Result<()> {
    if s1.dim() != s2.dim() {
        return Err(Error::DimensionMismatch { expected: s1.dim(), got: s2.dim() });
    }
    if s1.n() < 2 || s2.n() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: s1.n().min(s2.n()) });
    }
    Ok(())
}

/// Unbiased squared MMD: off-diagonal averages within each sample, full
/// average across. May be negative.
pub fn mmd2_unbiased<S: Scalar>(
    s1: &DataMatrix<S>,
    s2: &DataMatrix<S>,
    bw: Bandwidth<S>,
) -> Result<S> {
    mmd2_marginalized(s1, &CorruptionModel::Dirac, s2, &CorruptionModel::Dirac, bw)
}

/// Unbiased squared MMD with every kernel replaced by the marginalized one.
pub fn mmd2_marginalized<S: Scalar>(
    s1: &DataMatrix<S>,
    cov1: &CorruptionModel<S>,
    s2: &DataMatrix<S>,
    cov2: &CorruptionModel<S>,
    bw: Bandwidth<S>,
) -> Result<S> {
    check_two_samples(s1, s2)?;
    cov1.validate(s1.dim())?;
    cov2.validate(s2.dim())?;
    let t2 = bw.theta2();
    let m = s1.n();
    let n = s2.n();
    let mut within1 = S::zero();
    for i in 0..m {
        for j in 0..m {
            if i != j {
                within1 += marginal_unchecked(s1.row(i), cov1, s1.row(j), cov1, t2);
            }
        }
    }
    let mut within2 = S::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                within2 += marginal_unchecked(s2.row(i), cov2, s2.row(j), cov2, t2);
            }
        }
    }
    let mut cross = S::zero();
    for i in 0..m {
        for j in 0..n {
            cross += marginal_unchecked(s1.row(i), cov1, s2.row(j), cov2, t2);
        }
    }
    let mf = S::from_count(m);
    let nf = S::from_count(n);
    let two = S::cast(2.0);
    Ok(within1 / (mf * (mf - S::one()))
        + within2 / (nf * (nf - S::one()))
        - two * cross / (mf * nf))
}

/// Unbiased statistic read out of a precomputed pooled Gram matrix.
fn ustat_from_gram<S: Scalar>(g: &GramMatrix<S>, ia: &[usize], ib: &[usize]) -> S {
    let m = ia.len();
    let n = ib.len();
    let mut within1 = S::zero();
    for &i in ia {
        for &j in ia {
            if i != j {
                within1 += g.get(i, j);
            }
        }
    }
    let mut within2 = S::zero();
    for &i in ib {
        for &j in ib {
            if i != j {
                within2 += g.get(i, j);
            }
        }
    }
    let mut cross = S::zero();
    for &i in ia {
        for &j in ib {
            cross += g.get(i, j);
        }
    }
    let mf = S::from_count(m);
    let nf = S::from_count(n);
    let two = S::cast(2.0);
    within1 / (mf * (mf - S::one())) + within2 / (nf * (nf - S::one())) - two * cross / (mf * nf)
}

/// Squared RKHS distance between two weighted embeddings read out of a
/// pooled plain Gram matrix.
fn weighted_dist_from_gram<S: Scalar>(
    g: &GramMatrix<S>,
    ia: &[usize],
    ba: &[S],
    ib: &[usize],
    bb: &[S],
) -> S {
    let mut aa = S::zero();
    for (p, &i) in ia.iter().enumerate() {
        for (q, &j) in ia.iter().enumerate() {
            aa += ba[p] * ba[q] * g.get(i, j);
        }
    }
    let mut bbv = S::zero();
    for (p, &i) in ib.iter().enumerate() {
        for (q, &j) in ib.iter().enumerate() {
            bbv += bb[p] * bb[q] * g.get(i, j);
        }
    }
    let mut ab = S::zero();
    for (p, &i) in ia.iter().enumerate() {
        for (q, &j) in ib.iter().enumerate() {
            ab += ba[p] * bb[q] * g.get(i, j);
        }
    }
    aa + bbv - S::cast(2.0) * ab
}

fn shrinkage_weights_on_subset<S: Scalar>(
    g: &GramMatrix<S>,
    idx: &[usize],
    kind: ShrinkageKind,
    lambda: S,
) -> Result<Vec<S>> {
    let n = idx.len();
    let inv_n = S::one() / S::from_count(n);
    match kind {
        ShrinkageKind::Simple => Ok(vec![inv_n / (S::one() + lambda); n]),
        ShrinkageKind::Flexible => {
            let mut a = vec![S::zero(); n * n];
            for (p, &i) in idx.iter().enumerate() {
                for (q, &j) in idx.iter().enumerate() {
                    a[p * n + q] = g.get(i, j);
                }
            }
            let rhs: Vec<S> = (0..n)
                .map(|p| {
                    let mut acc = S::zero();
                    for q in 0..n {
                        acc += a[p * n + q];
                    }
                    acc * inv_n
                })
                .collect();
            let shift = S::from_count(n) * lambda;
            for p in 0..n {
                a[p * n + p] += shift;
            }
            cholesky_in_place(&mut a, n)?;
            Ok(chol_solve(&a, n, &rhs))
        }
    }
}

fn linear_weights_on_subset<S: Scalar>(
    k: &GramMatrix<S>,
    kp: &GramMatrix<S>,
    idx: &[usize],
    variance_sum: S,
    theta2: S,
) -> Result<Vec<S>> {
    let n = idx.len();
    let inv_n = S::one() / S::from_count(n);
    let two = S::cast(2.0);
    let mut a = vec![S::zero(); n * n];
    let mut t = vec![S::zero(); n];
    for (p, &i) in idx.iter().enumerate() {
        for (q, &j) in idx.iter().enumerate() {
            a[p * n + q] = k.get(i, j);
            t[p] += kp.get(i, j);
        }
        t[p] *= inv_n;
    }
    let ridge = S::cast(1e-10) * S::from_count(n);
    for p in 0..n {
        a[p * n + p] += ridge;
    }
    cholesky_in_place(&mut a, n)?;
    let z = chol_solve(&a, n, &t);
    let uniform = (two * theta2 + variance_sum) / (two * theta2);
    let slope = variance_sum / (two * theta2 * theta2);
    Ok((0..n).map(|p| uniform * inv_n - slope * z[p]).collect())
}

/// How permuted splits are scored, with hyperparameters frozen.
enum PermStatistic<S> {
    Ustat { gram: GramMatrix<S> },
    Shrinkage { gram: GramMatrix<S>, kind: ShrinkageKind, lambda: S },
    Linear { k: GramMatrix<S>, kp: GramMatrix<S>, variance_sum: S, theta2: S },
}

impl<S: Scalar> PermStatistic<S> {
    fn eval(&self, ia: &[usize], ib: &[usize]) -> Result<S> {
        match self {
            PermStatistic::Ustat { gram } => Ok(ustat_from_gram(gram, ia, ib)),
            PermStatistic::Shrinkage { gram, kind, lambda } => {
                let ba = shrinkage_weights_on_subset(gram, ia, *kind, *lambda)?;
                let bb = shrinkage_weights_on_subset(gram, ib, *kind, *lambda)?;
                Ok(weighted_dist_from_gram(gram, ia, &ba, ib, &bb))
            }
            PermStatistic::Linear { k, kp, variance_sum, theta2 } => {
                let ba = linear_weights_on_subset(k, kp, ia, *variance_sum, *theta2)?;
                let bb = linear_weights_on_subset(k, kp, ib, *variance_sum, *theta2)?;
                Ok(weighted_dist_from_gram(k, ia, &ba, ib, &bb))
            }
        }
    }
}

fn isotropic_of<S: Scalar>(cov: &CorruptionModel<S>) -> S {
    match cov {
        CorruptionModel::Isotropic(s) => *s,
        _ => S::zero(),
    }
}

fn diagonal_of<S: Scalar>(cov: &CorruptionModel<S>) -> Vec<S> {
    match cov {
        CorruptionModel::Diagonal(e) => e.clone(),
        _ => Vec::new(),
    }
}

/// Permutation two-sample test at level `alpha` with `b` permutations.
///
/// The observed statistic depends on the estimator kind: the plain unbiased
/// MMD for the empirical estimator, the marginalized MMD with per-sample
/// selected covariances for the marginalized kinds, and the squared RKHS
/// distance between the fitted weighted embeddings for the shrinkage and
/// linear kinds.
pub fn two_sample_test<S: Scalar>(
    s1: &DataMatrix<S>,
    s2: &DataMatrix<S>,
    bw: Bandwidth<S>,
    estimator: &EstimatorKind<S>,
    b: usize,
    alpha: f64,
    seed: u64,
) -> Result<TestResult<S>> {
    check_two_samples(s1, s2)?;
    if b == 0 {
        return Err(Error::InvalidParameter("need at least one permutation".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha {alpha}")));
    }
    let pooled = s1.concat_rows(s2)?;
    let m = s1.n();
    let total = pooled.n();

    let (observed, perm_stat) = match estimator {
        EstimatorKind::Kme => {
            let observed = mmd2_unbiased(s1, s2, bw)?;
            let g = gram(&pooled, &pooled, bw, GramKind::Rbf)?;
            (observed, PermStatistic::Ustat { gram: g })
        }
        EstimatorKind::Mkme | EstimatorKind::Mmkme => {
            let (cov1, cov2) = match estimator {
                EstimatorKind::Mkme => (
                    select_isotropic(s1, bw, default_isotropic_bounds(bw))?.cov,
                    select_isotropic(s2, bw, default_isotropic_bounds(bw))?.cov,
                ),
                _ => (
                    select_diagonal_default(s1, bw)?.cov,
                    select_diagonal_default(s2, bw)?.cov,
                ),
            };
            let observed = mmd2_marginalized(s1, &cov1, s2, &cov2, bw)?;
            let pooled_cov = cov1.average(&cov2)?;
            let g = marginal_gram(&pooled, &pooled_cov, &pooled, &pooled_cov, bw)?;
            (observed, PermStatistic::Ustat { gram: g })
        }
        EstimatorKind::SKmse { lambda_grid } | EstimatorKind::FKmse { lambda_grid } => {
            let kind = match estimator {
                EstimatorKind::SKmse { .. } => ShrinkageKind::Simple,
                _ => ShrinkageKind::Flexible,
            };
            let grid = match lambda_grid {
                Some(g) => g.clone(),
                None => crate::estimators::default_lambda_grid(),
            };
            let (l1, _) = shrinkage_select(s1, bw, kind, &grid)?;
            let (l2, _) = shrinkage_select(s2, bw, kind, &grid)?;
            let g = gram(&pooled, &pooled, bw, GramKind::Rbf)?;
            let ia: Vec<usize> = (0..m).collect();
            let ib: Vec<usize> = (m..total).collect();
            let ba = shrinkage_weights_on_subset(&g, &ia, kind, l1)?;
            let bb = shrinkage_weights_on_subset(&g, &ib, kind, l2)?;
            let observed = weighted_dist_from_gram(&g, &ia, &ba, &ib, &bb);
            let lambda = (l1 + l2) * S::cast(0.5);
            (observed, PermStatistic::Shrinkage { gram: g, kind, lambda })
        }
        EstimatorKind::MkmeLinear | EstimatorKind::MmkmeLinear => {
            let d = s1.dim();
            let (sum1, sum2) = match estimator {
                EstimatorKind::MkmeLinear => {
                    let c1 = select_isotropic(s1, bw, default_isotropic_bounds(bw))?.cov;
                    let c2 = select_isotropic(s2, bw, default_isotropic_bounds(bw))?.cov;
                    let df = S::from_count(d);
                    (df * isotropic_of(&c1), df * isotropic_of(&c2))
                }
                _ => {
                    let c1 = select_diagonal_default(s1, bw)?.cov;
                    let c2 = select_diagonal_default(s2, bw)?.cov;
                    let sum = |e: Vec<S>| {
                        let mut acc = S::zero();
                        for v in e {
                            acc += v;
                        }
                        acc
                    };
                    (sum(diagonal_of(&c1)), sum(diagonal_of(&c2)))
                }
            };
            let k = gram(&pooled, &pooled, bw, GramKind::Rbf)?;
            let kp = gram(&pooled, &pooled, bw, GramKind::KPrime)?;
            let ia: Vec<usize> = (0..m).collect();
            let ib: Vec<usize> = (m..total).collect();
            let theta2 = bw.theta2();
            let ba = linear_weights_on_subset(&k, &kp, &ia, sum1, theta2)?;
            let bb = linear_weights_on_subset(&k, &kp, &ib, sum2, theta2)?;
            let observed = weighted_dist_from_gram(&k, &ia, &ba, &ib, &bb);
            let variance_sum = (sum1 + sum2) * S::cast(0.5);
            (observed, PermStatistic::Linear { k, kp, variance_sum, theta2 })
        }
    };

    let null_stats: Result<Vec<S>> = (0..b)
        .into_par_iter()
        .map(|pi| {
            let mut rng = substream(seed, "two-sample/perm", pi as u64);
            let mut idx: Vec<usize> = (0..total).collect();
            fisher_yates(&mut idx, &mut rng);
            perm_stat.eval(&idx[..m], &idx[m..])
        })
        .collect();
    TestResult::from_null(observed, null_stats?, alpha)
}

pub(crate) fn fisher_yates(idx: &mut [usize], rng: &mut impl rand::Rng) {
    for i in (1..idx.len()).rev() {
        let j = rng.gen_range(0..=i);
        idx.swap(i, j);
    }
}

/// Data-generating processes for the synthetic power experiments.
#[derive(Debug, Clone)]
pub enum SyntheticDistribution<S> {
    /// Independent coordinates `N(mean, sd^2)`.
    Gaussian { mean: S, sd: S },
    /// A fresh random four-component Gaussian mixture per trial, shared by
    /// both sides that request it.
    MixtureShared,
    /// An independent random mixture per side per trial.
    MixtureFresh,
}

impl<S: Scalar> SyntheticDistribution<S> {
    fn sample(
        &self,
        d: usize,
        n: usize,
        seed: u64,
        side: &str,
        key: u64,
    ) -> Result<DataMatrix<S>> {
        match self {
            SyntheticDistribution::Gaussian { mean, sd } => {
                let mut rng = substream(seed, &format!("power/gauss/{side}"), key);
                let rows: Vec<Vec<S>> = (0..n)
                    .map(|_| {
                        (0..d)
                            .map(|_| *mean + *sd * crate::rng::standard_normal(&mut rng))
                            .collect()
                    })
                    .collect();
                DataMatrix::from_rows(&rows)
            }
            SyntheticDistribution::MixtureShared => {
                let spec = sample_mog_spec(d, derive_seed(seed, "power/shared-spec", key))?;
                sample_mog(&spec, n, derive_seed(seed, &format!("power/mog/{side}"), key))
            }
            SyntheticDistribution::MixtureFresh => {
                let spec = sample_mog_spec(
                    d,
                    derive_seed(seed, &format!("power/fresh-spec/{side}"), key),
                )?;
                sample_mog(&spec, n, derive_seed(seed, &format!("power/mog/{side}"), key))
            }
        }
    }
}

/// One cell of a power table.
#[derive(Debug, Clone)]
pub struct PowerRow {
    pub dim: usize,
    pub estimator: String,
    pub rejections: usize,
    pub trials: usize,
    pub power: f64,
}

/// Rejection rate of the two-sample test per dimension and estimator,
/// over seeded independent trials.
#[allow(clippy::too_many_arguments)]
pub fn power_curve<S: Scalar>(
    gen1: &SyntheticDistribution<S>,
    gen2: &SyntheticDistribution<S>,
    dims: &[usize],
    n: usize,
    trials: usize,
    estimators: &[EstimatorKind<S>],
    b: usize,
    alpha: f64,
    seed: u64,
) -> Result<Vec<PowerRow>> {
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    if dims.is_empty() || estimators.is_empty() {
        return Err(Error::InvalidParameter("empty sweep".into()));
    }
    let mut rows = Vec::new();
    for (di, &d) in dims.iter().enumerate() {
        let per_trial: Result<Vec<Vec<bool>>> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let key = ((di as u64) << 32) | t as u64;
                let s1 = gen1.sample(d, n, seed, "a", key)?;
                let s2 = gen2.sample(d, n, seed, "b", key)?;
                let pooled = s1.concat_rows(&s2)?;
                let bw = median_heuristic(&pooled)?;
                let test_seed = derive_seed(seed, "power/test", key);
                estimators
                    .iter()
                    .map(|est| {
                        two_sample_test(&s1, &s2, bw, est, b, alpha, test_seed)
                            .map(|r| r.rejected)
                    })
                    .collect()
            })
            .collect();
        let per_trial = per_trial?;
        for (ei, est) in estimators.iter().enumerate() {
            let rejections = per_trial.iter().filter(|row| row[ei]).count();
            rows.push(PowerRow {
                dim: d,
                estimator: est.name().to_string(),
                rejections,
                trials,
                power: rejections as f64 / trials as f64,
            });
        }
    }
    Ok(rows)
}
