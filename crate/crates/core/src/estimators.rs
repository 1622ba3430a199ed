//! Kernel mean estimators: the empirical average, shrinkage baselines,
//! exact marginalized estimators, and their linear-form approximations.
//!
//! Every estimator is represented the same way: base points, a weight
//! vector, and a shared corruption covariance. The represented function is
//! `sum_i beta_i * E[k(x~_i, .)]` with `x~_i ~ N(x_i, cov)`, which makes
//! evaluation and inner products closed-form.

use crate::covariance::{
    default_isotropic_bounds, select_diagonal_default, select_isotropic, CovarianceFamily,
};
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::kernels::{
    gram, marginal_unchecked, Bandwidth, CorruptionModel, GramKind, GramMatrix,
};
use crate::linalg::{cholesky_in_place, chol_solve, mat_vec, spd_inverse};
use crate::scalar::Scalar;

/// A kernel mean estimate: weighted corrupted features anchored at a sample.
#[derive(Debug, Clone)]
pub struct MeanEstimate<S> {
    base: DataMatrix<S>,
    beta: Vec<S>,
    corruption: CorruptionModel<S>,
    bandwidth: Bandwidth<S>,
}

impl<S: Scalar> MeanEstimate<S> {
    pub fn new(
        base: DataMatrix<S>,
        beta: Vec<S>,
        corruption: CorruptionModel<S>,
        bandwidth: Bandwidth<S>,
    ) -> Result<Self> {
        if base.is_empty() {
            return Err(Error::EmptySample);
        }
        if beta.len() != base.n() {
            return Err(Error::DimensionMismatch { expected: base.n(), got: beta.len() });
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFiniteData);
        }
        corruption.validate(base.dim())?;
        Ok(Self { base, beta, corruption, bandwidth })
    }

    pub fn base(&self) -> &DataMatrix<S> {
        &self.base
    }

    pub fn beta(&self) -> &[S] {
        &self.beta
    }

    pub fn corruption(&self) -> &CorruptionModel<S> {
        &self.corruption
    }

    pub fn bandwidth(&self) -> Bandwidth<S> {
        self.bandwidth
    }

    /// Evaluates the estimated mean function at a point.
    pub fn evaluate_at(&self, y: &[S]) -> Result<S> {
        if y.len() != self.base.dim() {
            return Err(Error::DimensionMismatch { expected: self.base.dim(), got: y.len() });
        }
        let t2 = self.bandwidth.theta2();
        let dirac = CorruptionModel::Dirac;
        let mut acc = S::zero();
        for (i, b) in self.beta.iter().enumerate() {
            acc += *b * marginal_unchecked(self.base.row(i), &self.corruption, y, &dirac, t2);
        }
        Ok(acc)
    }

    /// RKHS inner product of two estimates sharing a bandwidth.
    pub fn inner_product(&self, other: &Self) -> Result<S> {
        if self.bandwidth.theta2() != other.bandwidth.theta2() {
            return Err(Error::InvalidParameter("bandwidth mismatch".into()));
        }
        if self.base.dim() != other.base.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.base.dim(),
                got: other.base.dim(),
            });
        }
        let t2 = self.bandwidth.theta2();
        let mut acc = S::zero();
        for (i, bi) in self.beta.iter().enumerate() {
            let xi = self.base.row(i);
            let mut inner = S::zero();
            for (j, bj) in other.beta.iter().enumerate() {
                inner += *bj
                    * marginal_unchecked(xi, &self.corruption, other.base.row(j), &other.corruption, t2);
            }
            acc += *bi * inner;
        }
        Ok(acc)
    }
}

/// Squared RKHS distance between two estimates.
///
/// When both estimates share the same base points the three quadratic forms
/// are combined pair by pair, which preserves precision when the estimates
/// nearly coincide.
pub fn rkhs_distance_sq<S: Scalar>(a: &MeanEstimate<S>, b: &MeanEstimate<S>) -> Result<S> {
    if a.bandwidth.theta2() != b.bandwidth.theta2() {
        return Err(Error::InvalidParameter("bandwidth mismatch".into()));
    }
    if a.base.dim() != b.base.dim() {
        return Err(Error::DimensionMismatch { expected: a.base.dim(), got: b.base.dim() });
    }
    if a.base == b.base {
        let t2 = a.bandwidth.theta2();
        let n = a.base.n();
        let mut acc = S::zero();
        for i in 0..n {
            let xi = a.base.row(i);
            for j in 0..n {
                let xj = a.base.row(j);
                let kaa = marginal_unchecked(xi, &a.corruption, xj, &a.corruption, t2);
                let kab = marginal_unchecked(xi, &a.corruption, xj, &b.corruption, t2);
                let kbb = marginal_unchecked(xi, &b.corruption, xj, &b.corruption, t2);
                let two = S::cast(2.0);
                acc += a.beta[i] * a.beta[j] * kaa - two * a.beta[i] * b.beta[j] * kab
                    + b.beta[i] * b.beta[j] * kbb;
            }
        }
        return Ok(acc);
    }
    let two = S::cast(2.0);
    Ok(a.inner_product(a)? - two * a.inner_product(b)? + b.inner_product(b)?)
}

/// Constant coefficient applied to the uniform component of the linear
/// weight formulas. `Unit` gives `(2 theta^2 + s) / (2 theta^2)` and
/// reduces to uniform weights at zero corruption; `Half` gives
/// `(theta^2 + s) / (2 theta^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UniformCoefficient {
    #[default]
    Unit,
    Half,
}

/// Shrinkage baseline family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShrinkageKind {
    /// Uniform weights scaled by `1 / (1 + lambda)`.
    Simple,
    /// Weights solving `(K + n lambda I) beta = K 1_n`.
    Flexible,
}

/// The estimator families the experiments compare.
#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorKind<S> {
    Kme,
    SKmse { lambda_grid: Option<Vec<S>> },
    FKmse { lambda_grid: Option<Vec<S>> },
    Mkme,
    Mmkme,
    MkmeLinear,
    MmkmeLinear,
}

impl<S: Scalar> EstimatorKind<S> {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Kme => "kme",
            EstimatorKind::SKmse { .. } => "skmse",
            EstimatorKind::FKmse { .. } => "fkmse",
            EstimatorKind::Mkme => "mkme",
            EstimatorKind::Mmkme => "mmkme",
            EstimatorKind::MkmeLinear => "mkme-linear",
            EstimatorKind::MmkmeLinear => "mmkme-linear",
        }
    }

    /// Covariance family searched by the marginalized kinds, if any.
    pub fn covariance_family(&self) -> Option<CovarianceFamily> {
        match self {
            EstimatorKind::Mkme | EstimatorKind::MkmeLinear => Some(CovarianceFamily::Isotropic),
            EstimatorKind::Mmkme | EstimatorKind::MmkmeLinear => Some(CovarianceFamily::Diagonal),
            _ => None,
        }
    }
}

/// The empirical kernel mean: uniform weights, no corruption.
pub fn fit_kme<S: Scalar>(xs: &DataMatrix<S>, bw: Bandwidth<S>) -> Result<MeanEstimate<S>> {
    if xs.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = xs.n();
    let w = S::one() / S::from_count(n);
    MeanEstimate::new(xs.clone(), vec![w; n], CorruptionModel::Dirac, bw)
}

/// Exact marginalized estimator: uniform weights over corrupted features,
/// with the corruption covariance chosen by leave-one-out cross validation.
pub fn fit_marginalized<S: Scalar>(
    xs: &DataMatrix<S>,
    bw: Bandwidth<S>,
    family: CovarianceFamily,
) -> Result<MeanEstimate<S>> {
    let score = match family {
        CovarianceFamily::Isotropic => select_isotropic(xs, bw, default_isotropic_bounds(bw))?,
        CovarianceFamily::Diagonal => select_diagonal_default(xs, bw)?,
    };
    let n = xs.n();
    let w = S::one() / S::from_count(n);
    MeanEstimate::new(xs.clone(), vec![w; n], score.cov, bw)
}

const GRAM_RIDGE: f64 = 1e-10;

fn linear_weights<S: Scalar>(
    xs: &DataMatrix<S>,
    bw: Bandwidth<S>,
    variance_sum: S,
    coeff: UniformCoefficient,
) -> Result<Vec<S>> {
    let n = xs.n();
    let t2 = bw.theta2();
    let inv_n = S::one() / S::from_count(n);
    if variance_sum == S::zero() && coeff == UniformCoefficient::Unit {
        return Ok(vec![inv_n; n]);
    }
    let k = gram(xs, xs, bw, GramKind::Rbf)?;
    let kp = gram(xs, xs, bw, GramKind::KPrime)?;
    // t = K' 1_n with 1_n = (1/n, ..., 1/n)
    let t: Vec<S> = (0..n).map(|i| kp.row_sum(i) * inv_n).collect();
    let mut a = k.as_slice().to_vec();
    let ridge = S::cast(GRAM_RIDGE) * S::from_count(n);
    for i in 0..n {
        a[i * n + i] += ridge;
    }
    cholesky_in_place(&mut a, n)?;
    let z = chol_solve(&a, n, &t);
    let two = S::cast(2.0);
    let uniform = match coeff {
        UniformCoefficient::Unit => (two * t2 + variance_sum) / (two * t2),
        UniformCoefficient::Half => (t2 + variance_sum) / (two * t2),
    };
    let slope = variance_sum / (two * t2 * t2);
    Ok((0..n).map(|i| uniform * inv_n - slope * z[i]).collect())
}

/// Linear-form approximation of the isotropic marginalized estimator.
pub fn fit_linear_mkme<S: Scalar>(
    xs: &DataMatrix<S>,
    bw: Bandwidth<S>,
    sigma2: S,
) -> Result<MeanEstimate<S>> {
    fit_linear_mkme_with(xs, bw, sigma2, UniformCoefficient::Unit)
}

pub fn fit_linear_mkme_with<S: Scalar>(
    xs: &DataMatrix<S>,
    bw: Bandwidth<S>,
    sigma2: S,
    coeff: UniformCoefficient,
) -> Result<MeanEstimate<S>> {
    if xs.is_empty() {
        return Err(Error::EmptySample);
    }
    if !sigma2.is_finite() || sigma2 < S::zero() {
        return Err(Error::InvalidParameter(format!("corruption variance {sigma2}")));
    }
    let s = S::from_count(xs.dim()) * sigma2;
    let beta = linear_weights(xs, bw, s, coeff)?;
    MeanEstimate::new(xs.clone(), beta, CorruptionModel::Dirac, bw)
}

/// Linear-form approximation of the diagonal marginalized estimator; the
/// per-coordinate variances enter only through their sum.
pub fn fit_linear_mmkme<S: Scalar>(
    xs: &DataMatrix<S>,
    bw: Bandwidth<S>,
    e: &[S],
) -> Result<MeanEstimate<S>> {
    fit_linear_mmkme_with(xs, bw, e, UniformCoefficient::Unit)
}

pub fn fit_linear_mmkme_with<S: Scalar>(
    xs: &DataMatrix<S>,
    bw: Bandwidth<S>,
    e: &[S],
    coeff: UniformCoefficient,
) -> Result<MeanEstimate<S>> {
    if xs.is_empty() {
        return Err(Error::EmptySample);
    }
    if e.len() != xs.dim() {
        return Err(Error::DimensionMismatch { expected: xs.dim(), got: e.len() });
    }
    if e.iter().any(|v| !v.is_finite() || *v < S::zero()) {
        return Err(Error::InvalidParameter("negative diagonal variance".into()));
    }
    let mut s = S::zero();
    for v in e {
        s += *v;
    }
    let beta = linear_weights(xs, bw, s, coeff)?;
    MeanEstimate::new(xs.clone(), beta, CorruptionModel::Dirac, bw)
}

/// Default regularization grid: 20 points log-spaced on `[1e-6, 1e2]`.
pub fn default_lambda_grid<S: Scalar>() -> Vec<S> {
    let lo = 1e-6f64.ln();
    let hi = 1e2f64.ln();
    (0..20)
        .map(|i| S::cast((lo + (hi - lo) * i as f64 / 19.0).exp()))
        .collect()
}

/// Leave-one-out score of every grid point and the index of the best one
/// (ties resolve to the smaller lambda).
pub fn shrinkage_scores<S: Scalar>(
    xs: &DataMatrix<S>,
    bw: Bandwidth<S>,
    kind: ShrinkageKind,
    grid: &[S],
) -> Result<Vec<S>> {
    let n = xs.n();
    if n < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: n });
    }
    if grid.is_empty() || grid.iter().any(|l| !l.is_finite() || *l <= S::zero()) {
        return Err(Error::InvalidParameter("lambda grid must be positive".into()));
    }
    let k = gram(xs, xs, bw, GramKind::Rbf)?;
    let row_sums: Vec<S> = (0..n).map(|i| k.row_sum(i)).collect();
    let total = k.total();
    let nm1 = S::from_count(n - 1);
    let two = S::cast(2.0);

    match kind {
        ShrinkageKind::Simple => Ok(grid
            .iter()
            .map(|&lambda| {
                let c = S::one() / (S::one() + lambda);
                let mut acc = S::zero();
                for rs in &row_sums {
                    let off = *rs - S::one();
                    let held = total - two * *rs + S::one();
                    acc += S::one() - two * c * off / nm1 + c * c * held / (nm1 * nm1);
                }
                acc / S::from_count(n)
            })
            .collect()),
        ShrinkageKind::Flexible => {
            let mut scores = Vec::with_capacity(grid.len());
            for &lambda in grid {
                // A = K + (n-1) lambda I is exactly the held-out system matrix
                // once row and column i are deleted, so one inverse serves all folds.
                let mut a = k.as_slice().to_vec();
                for i in 0..n {
                    a[i * n + i] += nm1 * lambda;
                }
                let c = spd_inverse(&a, n)?;
                let mut acc = S::zero();
                for i in 0..n {
                    let mut b = vec![S::zero(); n];
                    for j in 0..n {
                        if j != i {
                            b[j] = (row_sums[j] - k.get(j, i)) / nm1;
                        }
                    }
                    let u = mat_vec(&c, n, &b);
                    let cii = c[i * n + i];
                    let mut w = vec![S::zero(); n];
                    for j in 0..n {
                        if j != i {
                            w[j] = u[j] - c[j * n + i] * u[i] / cii;
                        }
                    }
                    let kw = mat_vec(k.as_slice(), n, &w);
                    let mut quad = S::zero();
                    let mut cross = S::zero();
                    for j in 0..n {
                        quad += w[j] * kw[j];
                        cross += w[j] * k.get(i, j);
                    }
                    acc += S::one() - two * cross + quad;
                }
                scores.push(acc / S::from_count(n));
            }
            Ok(scores)
        }
    }
}

/// Picks the grid lambda with the lowest leave-one-out score.
pub fn shrinkage_select<S: Scalar>(
    xs: &DataMatrix<S>,
    bw: Bandwidth<S>,
    kind: ShrinkageKind,
    grid: &[S],
) -> Result<(S, S)> {
    let scores = shrinkage_scores(xs, bw, kind, grid)?;
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&i, &j| grid[i].partial_cmp(&grid[j]).unwrap());
    let mut best = order[0];
    for &i in &order[1..] {
        if scores[i] < scores[best] {
            best = i;
        }
    }
    Ok((grid[best], scores[best]))
}

pub(crate) fn shrinkage_weights_for_lambda<S: Scalar>(
    k: &GramMatrix<S>,
    kind: ShrinkageKind,
    lambda: S,
) -> Result<Vec<S>> {
    let n = k.rows();
    let inv_n = S::one() / S::from_count(n);
    match kind {
        ShrinkageKind::Simple => Ok(vec![inv_n / (S::one() + lambda); n]),
        ShrinkageKind::Flexible => {
            let mut a = k.as_slice().to_vec();
            let shift = S::from_count(n) * lambda;
            for i in 0..n {
                a[i * n + i] += shift;
            }
            cholesky_in_place(&mut a, n)?;
            let rhs: Vec<S> = (0..n).map(|i| k.row_sum(i) * inv_n).collect();
            Ok(chol_solve(&a, n, &rhs))
        }
    }
}

/// Shrinkage baseline with the regularizer chosen from `grid` by
/// leave-one-out cross validation.
pub fn fit_shrinkage_with_grid<S: Scalar>(
    xs: &DataMatrix<S>,
    bw: Bandwidth<S>,
    kind: ShrinkageKind,
    grid: &[S],
) -> Result<MeanEstimate<S>> {
    let (lambda, _) = shrinkage_select(xs, bw, kind, grid)?;
    let k = gram(xs, xs, bw, GramKind::Rbf)?;
    let beta = shrinkage_weights_for_lambda(&k, kind, lambda)?;
    MeanEstimate::new(xs.clone(), beta, CorruptionModel::Dirac, bw)
}

pub fn fit_shrinkage<S: Scalar>(
    xs: &DataMatrix<S>,
    bw: Bandwidth<S>,
    kind: ShrinkageKind,
) -> Result<MeanEstimate<S>> {
    fit_shrinkage_with_grid(xs, bw, kind, &default_lambda_grid())
}

/// Fits any estimator kind with its default settings.
pub fn fit<S: Scalar>(
    kind: &EstimatorKind<S>,
    xs: &DataMatrix<S>,
    bw: Bandwidth<S>,
) -> Result<MeanEstimate<S>> {
    match kind {
        EstimatorKind::Kme => fit_kme(xs, bw),
        EstimatorKind::SKmse { lambda_grid } => match lambda_grid {
            Some(g) => fit_shrinkage_with_grid(xs, bw, ShrinkageKind::Simple, g),
            None => fit_shrinkage(xs, bw, ShrinkageKind::Simple),
        },
        EstimatorKind::FKmse { lambda_grid } => match lambda_grid {
            Some(g) => fit_shrinkage_with_grid(xs, bw, ShrinkageKind::Flexible, g),
            None => fit_shrinkage(xs, bw, ShrinkageKind::Flexible),
        },
        EstimatorKind::Mkme => fit_marginalized(xs, bw, CovarianceFamily::Isotropic),
        EstimatorKind::Mmkme => fit_marginalized(xs, bw, CovarianceFamily::Diagonal),
        EstimatorKind::MkmeLinear => {
            let score = select_isotropic(xs, bw, default_isotropic_bounds(bw))?;
            let sigma2 = match score.cov {
                CorruptionModel::Isotropic(s) => s,
                _ => unreachable!(),
            };
            fit_linear_mkme(xs, bw, sigma2)
        }
        EstimatorKind::MmkmeLinear => {
            let score = select_diagonal_default(xs, bw)?;
            let e = match score.cov {
                CorruptionModel::Diagonal(e) => e,
                _ => unreachable!(),
            };
            fit_linear_mmkme(xs, bw, &e)
        }
    }
}
