//! Hilbert-Schmidt independence criterion in trace form, its marginalized
//! variant, and the permutation independence test.

use rayon::prelude::*;

use crate::covariance::{default_isotropic_bounds, select_diagonal_default, select_isotropic};
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::estimators::EstimatorKind;
use crate::kernels::{marginal_gram, median_heuristic, Bandwidth, CorruptionModel, GramMatrix};
use crate::mmd::{fisher_yates, TestResult};
use crate::rng::{derive_seed, substream};
use crate::scalar::Scalar;

/// Paired observations `(x_i, y_i)` with equal row counts.
#[derive(Debug, Clone)]
pub struct PairedSample<S> {
    xs: DataMatrix<S>,
    ys: DataMatrix<S>,
}

impl<S: Scalar> PairedSample<S> {
    pub fn new(xs: DataMatrix<S>, ys: DataMatrix<S>) -> Result<Self> {
        if xs.n() != ys.n() {
            return Err(Error::DimensionMismatch { expected: xs.n(), got: ys.n() });
        }
        if xs.n() < 2 {
            return Err(Error::TooFewSamples { needed: 2, got: xs.n() });
        }
        Ok(Self { xs, ys })
    }

    pub fn xs(&self) -> &DataMatrix<S> {
        &self.xs
    }

    pub fn ys(&self) -> &DataMatrix<S> {
        &self.ys
    }

    pub fn n(&self) -> usize {
        self.xs.n()
    }

    /// Joint row subsample, keeping pairs together.
    pub fn rows_subset(&self, idx: &[usize]) -> Self {
        Self { xs: self.xs.rows_subset(idx), ys: self.ys.rows_subset(idx) }
    }
}

/// Doubly centered copy of a square Gram matrix: `H G H` with
/// `H = I - (1/n) 1 1^T`.
fn center_square<S: Scalar>(g: &GramMatrix<S>) -> Vec<S> {
    let n = g.rows();
    let nf = S::from_count(n);
    let row_means: Vec<S> = (0..n).map(|i| g.row_sum(i) / nf).collect();
    let grand = {
        let mut acc = S::zero();
        for m in &row_means {
            acc += *m;
        }
        acc / nf
    };
    let mut out = vec![S::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = g.get(i, j) - row_means[i] - row_means[j] + grand;
        }
    }
    out
}

fn trace_product<S: Scalar>(a: &[S], b: &[S], n: usize) -> S {
    let mut acc = S::zero();
    for (x, y) in a.iter().zip(b.iter()) {
        acc += *x * *y;
    }
    acc / (S::from_count(n) * S::from_count(n))
}

/// `(1/n^2) tr(H K H . H Z H)` with marginalized Grams on both sides;
/// Dirac corruption gives the plain statistic.
pub fn hsic_statistic<S: Scalar>(
    p: &PairedSample<S>,
    bwx: Bandwidth<S>,
    bwy: Bandwidth<S>,
    covx: &CorruptionModel<S>,
    covy: &CorruptionModel<S>,
) -> Result<S> {
    let k = marginal_gram(&p.xs, covx, &p.xs, covx, bwx)?;
    let z = marginal_gram(&p.ys, covy, &p.ys, covy, bwy)?;
    let kc = center_square(&k);
    let zc = center_square(&z);
    Ok(trace_product(&kc, &zc, p.n()))
}

fn covariances_for<S: Scalar>(
    kind: &EstimatorKind<S>,
    p: &PairedSample<S>,
    bwx: Bandwidth<S>,
    bwy: Bandwidth<S>,
) -> Result<(CorruptionModel<S>, CorruptionModel<S>)> {
    match kind {
        EstimatorKind::Mkme => Ok((
            select_isotropic(&p.xs, bwx, default_isotropic_bounds(bwx))?.cov,
            select_isotropic(&p.ys, bwy, default_isotropic_bounds(bwy))?.cov,
        )),
        EstimatorKind::Mmkme => Ok((
            select_diagonal_default(&p.xs, bwx)?.cov,
            select_diagonal_default(&p.ys, bwy)?.cov,
        )),
        _ => Ok((CorruptionModel::Dirac, CorruptionModel::Dirac)),
    }
}

/// Permutation independence test: the null is built by permuting the label
/// rows only, with bandwidths and covariances selected once on the original
/// pairing and held fixed.
pub fn independence_test<S: Scalar>(
    p: &PairedSample<S>,
    b: usize,
    alpha: f64,
    estimator: &EstimatorKind<S>,
    seed: u64,
) -> Result<TestResult<S>> {
    if b == 0 {
        return Err(Error::InvalidParameter("need at least one permutation".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha {alpha}")));
    }
    let bwx = median_heuristic(&p.xs)?;
    let bwy = median_heuristic(&p.ys)?;
    let (covx, covy) = covariances_for(estimator, p, bwx, bwy)?;

    let n = p.n();
    let k = marginal_gram(&p.xs, &covx, &p.xs, &covx, bwx)?;
    let z = marginal_gram(&p.ys, &covy, &p.ys, &covy, bwy)?;
    let kc = center_square(&k);
    let zc = center_square(&z);
    let observed = trace_product(&kc, &zc, n);

    let null_stats: Vec<S> = (0..b)
        .into_par_iter()
        .map(|pi| {
            let mut rng = substream(seed, "hsic/perm", pi as u64);
            let mut idx: Vec<usize> = (0..n).collect();
            fisher_yates(&mut idx, &mut rng);
            let mut zp = vec![S::zero(); n * n];
            for i in 0..n {
                for j in 0..n {
                    zp[i * n + j] = z.get(idx[i], idx[j]);
                }
            }
            // re-center the permuted label Gram
            let nf = S::from_count(n);
            let mut row_means = vec![S::zero(); n];
            for i in 0..n {
                let mut acc = S::zero();
                for j in 0..n {
                    acc += zp[i * n + j];
                }
                row_means[i] = acc / nf;
            }
            let mut grand = S::zero();
            for m in &row_means {
                grand += *m;
            }
            grand /= nf;
            let mut acc = S::zero();
            for i in 0..n {
                for j in 0..n {
                    let centered = zp[i * n + j] - row_means[i] - row_means[j] + grand;
                    acc += kc[i * n + j] * centered;
                }
            }
            acc / (nf * nf)
        })
        .collect();
    TestResult::from_null(observed, null_stats, alpha)
}

/// One cell of the independence power table.
#[derive(Debug, Clone)]
pub struct HsicPowerRow {
    pub alpha: f64,
    pub eta: f64,
    pub estimator: String,
    pub rejections: usize,
    pub repetitions: usize,
    pub power: f64,
    pub mean_statistic: f64,
    pub mean_p_value: f64,
}

/// Rejection rate over seeded repetitions, at several subsample fractions
/// and test levels. Each repetition draws `ceil(eta * n)` pairs without
/// replacement; permutation p-values are shared across the `alphas`.
#[allow(clippy::too_many_arguments)]
pub fn power_study<S: Scalar>(
    p: &PairedSample<S>,
    etas: &[f64],
    alphas: &[f64],
    repetitions: usize,
    b: usize,
    estimators: &[EstimatorKind<S>],
    seed: u64,
) -> Result<Vec<HsicPowerRow>> {
    if repetitions == 0 {
        return Err(Error::InvalidParameter("need at least one repetition".into()));
    }
    if estimators.is_empty() || etas.is_empty() || alphas.is_empty() {
        return Err(Error::InvalidParameter("empty sweep".into()));
    }
    for &alpha in alphas {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha {alpha}")));
        }
    }
    let n = p.n();
    for &eta in etas {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::InvalidParameter(format!("subsample fraction {eta}")));
        }
        if ((eta * n as f64).ceil() as usize) < 2 {
            return Err(Error::TooFewSamples {
                needed: 2,
                got: (eta * n as f64).ceil() as usize,
            });
        }
    }

    let mut rows = Vec::new();
    for (ei, &eta) in etas.iter().enumerate() {
        let size = ((eta * n as f64).ceil() as usize).min(n);
        // per repetition and estimator: (statistic, p-value)
        let reps: Result<Vec<Vec<(f64, f64)>>> = (0..repetitions)
            .into_par_iter()
            .map(|r| {
                let key = ((ei as u64) << 32) | r as u64;
                let sub = if size == n {
                    p.clone()
                } else {
                    let mut idx: Vec<usize> = (0..n).collect();
                    let mut rng = substream(seed, "hsic/subsample", key);
                    fisher_yates(&mut idx, &mut rng);
                    p.rows_subset(&idx[..size])
                };
                let test_seed = derive_seed(seed, "hsic/test", key);
                estimators
                    .iter()
                    .map(|kind| {
                        independence_test(&sub, b, alphas[0], kind, test_seed)
                            .map(|t| (t.statistic.as_f64(), t.p_value))
                    })
                    .collect()
            })
            .collect();
        let reps = reps?;
        for &alpha in alphas {
            for (ki, kind) in estimators.iter().enumerate() {
                let rejections = reps.iter().filter(|row| row[ki].1 < alpha).count();
                let mean_statistic =
                    reps.iter().map(|row| row[ki].0).sum::<f64>() / repetitions as f64;
                let mean_p_value =
                    reps.iter().map(|row| row[ki].1).sum::<f64>() / repetitions as f64;
                rows.push(HsicPowerRow {
                    alpha,
                    eta,
                    estimator: kind.name().to_string(),
                    rejections,
                    repetitions,
                    power: rejections as f64 / repetitions as f64,
                    mean_statistic,
                    mean_p_value,
                });
            }
        }
    }
    Ok(rows)
}
