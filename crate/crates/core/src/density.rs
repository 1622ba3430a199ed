//! Density estimation by kernel mean matching: k-means Gaussian prototypes,
//! simplex-constrained weight fitting, likelihood scoring, and a bandwidth
//! search with early stopping.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::estimators::{self, EstimatorKind, MeanEstimate};
use crate::kernels::{marginal_unchecked, median_heuristic, Bandwidth, CorruptionModel};
use crate::optim::project_simplex;
use crate::rng::{derive_seed, substream};
use crate::scalar::Scalar;

/// Mixture of axis-aligned Gaussians: simplex weights, component means,
/// and per-component diagonal covariances.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture<S> {
    weights: Vec<S>,
    means: DataMatrix<S>,
    covariances: Vec<Vec<S>>,
}

impl<S: Scalar> GaussianMixture<S> {
    pub fn new(
        weights: Vec<S>,
        means: DataMatrix<S>,
        covariances: Vec<Vec<S>>,
    ) -> Result<Self> {
        let c = means.n();
        if weights.len() != c || covariances.len() != c {
            return Err(Error::InvalidParameter(
                "weights, means and covariances must have equal length".into(),
            ));
        }
        let mut total = S::zero();
        for w in &weights {
            if !w.is_finite() || *w < S::zero() {
                return Err(Error::InvalidParameter("negative mixture weight".into()));
            }
            total += *w;
        }
        if (total - S::one()).abs() > S::cast(1e-8) {
            return Err(Error::InvalidParameter(format!("weights sum to {total}")));
        }
        for cov in &covariances {
            if cov.len() != means.dim() {
                return Err(Error::DimensionMismatch { expected: means.dim(), got: cov.len() });
            }
            if cov.iter().any(|v| !v.is_finite() || *v < S::zero()) {
                return Err(Error::InvalidParameter("negative covariance entry".into()));
            }
        }
        Ok(Self { weights, means, covariances })
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn means(&self) -> &DataMatrix<S> {
        &self.means
    }

    pub fn covariances(&self) -> &[Vec<S>] {
        &self.covariances
    }

    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means.dim()
    }

    /// The same prototypes with new weights.
    pub fn with_weights(&self, weights: Vec<S>) -> Result<Self> {
        Self::new(weights, self.means.clone(), self.covariances.clone())
    }
}

const VARIANCE_RIDGE: f64 = 1e-6;

/// Lloyd's algorithm seeded by the k-means++ rule. Returns prototypes with
/// per-cluster means, ridge-floored diagonal variances, and cluster-fraction
/// weights.
pub fn kmeans<S: Scalar>(
    xs: &DataMatrix<S>,
    c: usize,
    iters: usize,
    seed: u64,
) -> Result<GaussianMixture<S>> {
    let n = xs.n();
    let d = xs.dim();
    if c == 0 {
        return Err(Error::InvalidParameter("need at least one cluster".into()));
    }
    if n < c {
        return Err(Error::TooFewSamples { needed: c, got: n });
    }
    let mut rng = substream(seed, "kmeans/init", 0);

    // k-means++ seeding
    let mut centers: Vec<Vec<S>> = Vec::with_capacity(c);
    let mut chosen = vec![false; n];
    let first = rng.gen_range(0..n);
    centers.push(xs.row(first).to_vec());
    chosen[first] = true;
    let mut min_d2: Vec<f64> = (0..n)
        .map(|i| crate::kernels::squared_distance(xs.row(i), &centers[0]).as_f64())
        .collect();
    while centers.len() < c {
        let total: f64 = min_d2.iter().sum();
        let next = if total > 0.0 {
            WeightedIndex::new(&min_d2).map_err(|_| Error::NonFiniteData)?.sample(&mut rng)
        } else {
            (0..n).find(|i| !chosen[*i]).unwrap_or(0)
        };
        chosen[next] = true;
        let center = xs.row(next).to_vec();
        for (i, slot) in min_d2.iter_mut().enumerate() {
            let d2 = crate::kernels::squared_distance(xs.row(i), &center).as_f64();
            if d2 < *slot {
                *slot = d2;
            }
        }
        centers.push(center);
    }

    let mut assignment = vec![0usize; n];
    for _ in 0..iters.max(1) {
        let mut changed = false;
        // assignment step; ties go to the lower cluster index
        for (i, slot) in assignment.iter_mut().enumerate() {
            let mut best = 0usize;
            let mut best_d = S::infinity();
            for (k, center) in centers.iter().enumerate() {
                let d2 = crate::kernels::squared_distance(xs.row(i), center);
                if d2 < best_d {
                    best_d = d2;
                    best = k;
                }
            }
            if *slot != best {
                *slot = best;
                changed = true;
            }
        }
        // reseed empty clusters at the farthest point of a cluster that can
        // spare one, so stealing never empties another cluster
        let mut counts = vec![0usize; c];
        for &a in &assignment {
            counts[a] += 1;
        }
        for k in 0..c {
            if counts[k] == 0 {
                let far = (0..n)
                    .filter(|&i| counts[assignment[i]] > 1)
                    .max_by(|&i, &j| {
                        let di = crate::kernels::squared_distance(xs.row(i), &centers[assignment[i]]);
                        let dj = crate::kernels::squared_distance(xs.row(j), &centers[assignment[j]]);
                        di.partial_cmp(&dj).unwrap()
                    })
                    .expect("an empty cluster implies another holds spare points");
                counts[assignment[far]] -= 1;
                assignment[far] = k;
                counts[k] = 1;
                centers[k] = xs.row(far).to_vec();
                changed = true;
            }
        }
        // update step
        let mut sums = vec![vec![S::zero(); d]; c];
        for (i, &a) in assignment.iter().enumerate() {
            for (j, slot) in sums[a].iter_mut().enumerate() {
                *slot += xs.get(i, j);
            }
        }
        for k in 0..c {
            let inv = S::one() / S::from_count(counts[k]);
            for j in 0..d {
                centers[k][j] = sums[k][j] * inv;
            }
        }
        if !changed {
            break;
        }
    }

    let mut counts = vec![0usize; c];
    for &a in &assignment {
        counts[a] += 1;
    }
    let ridge = S::cast(VARIANCE_RIDGE);
    let mut variances = vec![vec![ridge; d]; c];
    for (i, &k) in assignment.iter().enumerate() {
        for (j, slot) in variances[k].iter_mut().enumerate() {
            let diff = xs.get(i, j) - centers[k][j];
            *slot += diff * diff / S::from_count(counts[k]);
        }
    }
    let weights: Vec<S> = counts
        .iter()
        .map(|&cnt| S::from_count(cnt) / S::from_count(n))
        .collect();
    let mut flat = Vec::with_capacity(c * d);
    for center in &centers {
        flat.extend_from_slice(center);
    }
    GaussianMixture::new(weights, DataMatrix::new(c, d, flat)?, variances)
}

/// The quadratic program behind mixture matching: minimize
/// `a^T G a - 2 a^T h` over the simplex, where `G` couples prototype mean
/// embeddings and `h` couples them with the estimate.
fn matching_qp<S: Scalar>(
    est: &MeanEstimate<S>,
    protos: &GaussianMixture<S>,
) -> Result<(Vec<S>, Vec<S>)> {
    if est.base().dim() != protos.dim() {
        return Err(Error::DimensionMismatch { expected: est.base().dim(), got: protos.dim() });
    }
    let c = protos.components();
    let t2 = est.bandwidth().theta2();
    let covs: Vec<CorruptionModel<S>> = protos
        .covariances()
        .iter()
        .map(|v| CorruptionModel::Diagonal(v.clone()))
        .collect();
    let mut g = vec![S::zero(); c * c];
    for a in 0..c {
        for b in 0..c {
            g[a * c + b] = marginal_unchecked(
                protos.means().row(a),
                &covs[a],
                protos.means().row(b),
                &covs[b],
                t2,
            );
        }
    }
    let mut h = vec![S::zero(); c];
    for (a, hv) in h.iter_mut().enumerate() {
        let mut acc = S::zero();
        for (i, beta) in est.beta().iter().enumerate() {
            acc += *beta
                * marginal_unchecked(
                    est.base().row(i),
                    est.corruption(),
                    protos.means().row(a),
                    &covs[a],
                    t2,
                );
        }
        *hv = acc;
    }
    if g.iter().chain(h.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteObjective("matching quadratic program".into()));
    }
    Ok((g, h))
}

fn qp_objective<S: Scalar>(g: &[S], h: &[S], alpha: &[S]) -> S {
    let c = h.len();
    let mut quad = S::zero();
    let mut lin = S::zero();
    for a in 0..c {
        let mut row = S::zero();
        for b in 0..c {
            row += g[a * c + b] * alpha[b];
        }
        quad += alpha[a] * row;
        lin += h[a] * alpha[a];
    }
    quad - S::cast(2.0) * lin
}

/// Fits mixture weights so the prototype mixture's mean embedding is as
/// close as possible to `est` in the RKHS, by projected gradient descent
/// over the simplex.
pub fn match_mixture<S: Scalar>(
    est: &MeanEstimate<S>,
    protos: &GaussianMixture<S>,
) -> Result<GaussianMixture<S>> {
    let c = protos.components();
    let (g, h) = matching_qp(est, protos)?;
    if c == 1 {
        return protos.with_weights(vec![S::one()]);
    }
    // row-sum bound on the spectral norm fixes a safe step for the
    // gradient G a - h of the half-objective
    let mut rho = S::zero();
    for a in 0..c {
        let mut row = S::zero();
        for b in 0..c {
            row += g[a * c + b].abs();
        }
        rho = rho.max(row);
    }
    let step = S::one() / rho;
    let mut alpha = project_simplex(protos.weights());
    let mut obj = qp_objective(&g, &h, &alpha);
    for _ in 0..5000 {
        let mut trial = vec![S::zero(); c];
        for a in 0..c {
            let mut grad = -h[a];
            for b in 0..c {
                grad += g[a * c + b] * alpha[b];
            }
            trial[a] = alpha[a] - step * grad;
        }
        let next = project_simplex(&trial);
        let next_obj = qp_objective(&g, &h, &next);
        if next_obj <= obj {
            let gain = obj - next_obj;
            alpha = next;
            obj = next_obj;
            if gain < S::cast(1e-10) {
                break;
            }
        } else {
            break;
        }
    }
    protos.with_weights(alpha)
}

/// Squared RKHS distance between an estimate and a mixture's mean embedding.
pub fn embedding_distance_sq<S: Scalar>(
    est: &MeanEstimate<S>,
    mix: &GaussianMixture<S>,
) -> Result<S> {
    let (g, h) = matching_qp(est, mix)?;
    let self_term = est.inner_product(est)?;
    Ok(qp_objective(&g, &h, mix.weights()) + self_term)
}

/// Average negative log-likelihood of `test` under the mixture, evaluated
/// in log space.
pub fn nll<S: Scalar>(model: &GaussianMixture<S>, test: &DataMatrix<S>) -> Result<S> {
    if test.is_empty() {
        return Err(Error::EmptySample);
    }
    if test.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: test.dim() });
    }
    let d = model.dim();
    let c = model.components();
    let log_two_pi = S::cast((2.0 * std::f64::consts::PI).ln());
    let half = S::cast(0.5);
    // per-component constants
    let mut log_consts = Vec::with_capacity(c);
    for k in 0..c {
        let mut acc = S::zero();
        for j in 0..d {
            acc += (model.covariances[k][j].max(S::cast(1e-300))).ln() + log_two_pi;
        }
        log_consts.push(-half * acc);
    }
    let mut total = S::zero();
    for i in 0..test.n() {
        let x = test.row(i);
        let mut terms = Vec::with_capacity(c);
        for (k, log_const) in log_consts.iter().enumerate() {
            if model.weights[k] <= S::zero() {
                continue;
            }
            let mut quad = S::zero();
            for (j, xv) in x.iter().enumerate() {
                let diff = *xv - model.means.get(k, j);
                quad += diff * diff / model.covariances[k][j].max(S::cast(1e-300));
            }
            terms.push(model.weights[k].ln() + *log_const - half * quad);
        }
        let m = terms.iter().cloned().fold(S::neg_infinity(), S::max);
        let log_density = if m.is_finite() {
            let mut acc = S::zero();
            for t in &terms {
                acc += (*t - m).exp();
            }
            m + acc.ln()
        } else {
            m
        };
        total += log_density;
    }
    Ok(-total / S::from_count(test.n()))
}

/// Prototype and search configuration for the density pipeline.
#[derive(Debug, Clone, Copy)]
pub struct KdeConfig {
    pub prototypes: usize,
    pub kmeans_iters: usize,
}

impl Default for KdeConfig {
    fn default() -> Self {
        Self { prototypes: 10, kmeans_iters: 100 }
    }
}

/// Default multipliers applied to the median-heuristic squared bandwidth.
pub fn default_bw_multipliers<S: Scalar>() -> Vec<S> {
    [0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0].iter().map(|m| S::cast(*m)).collect()
}

/// A fitted density model together with the bandwidth multiplier that won
/// the validation search.
#[derive(Debug, Clone)]
pub struct DensityFit<S> {
    pub model: GaussianMixture<S>,
    pub multiplier: S,
    pub validation_nll: S,
}

/// Fits a mixture density to `train`: hold out a fifth for validation, walk
/// the bandwidth grid in order, and stop after the validation likelihood
/// worsens twice in a row. The best validated model is returned without
/// refitting.
pub fn fit_density<S: Scalar>(
    train: &DataMatrix<S>,
    estimator: &EstimatorKind<S>,
    bw_grid: &[S],
    cfg: KdeConfig,
    seed: u64,
) -> Result<DensityFit<S>> {
    if bw_grid.is_empty() || bw_grid.iter().any(|m| !m.is_finite() || *m <= S::zero()) {
        return Err(Error::InvalidParameter("bandwidth multipliers must be positive".into()));
    }
    let n = train.n();
    let val_size = n.div_ceil(5);
    let fit_size = n.saturating_sub(val_size);
    if val_size == 0 || fit_size < cfg.prototypes.max(3) {
        return Err(Error::TooFewSamples { needed: (5 * cfg.prototypes.max(3)).div_ceil(4), got: n });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = substream(seed, "density/val-split", 0);
    crate::mmd::fisher_yates(&mut idx, &mut rng);
    let val = train.rows_subset(&idx[..val_size]);
    let fit_set = train.rows_subset(&idx[val_size..]);

    let base = median_heuristic(train)?;
    let mut best: Option<DensityFit<S>> = None;
    let mut prev: Option<S> = None;
    let mut worsened = 0usize;
    for (gi, &mult) in bw_grid.iter().enumerate() {
        let bw = Bandwidth::new(base.theta2() * mult)?;
        let est = estimators::fit(estimator, &fit_set, bw)?;
        let protos = kmeans(
            &fit_set,
            cfg.prototypes,
            cfg.kmeans_iters,
            derive_seed(seed, "density/kmeans", gi as u64),
        )?;
        let model = match_mixture(&est, &protos)?;
        let proxy = nll(&model, &val)?;
        if best.as_ref().is_none_or(|b| proxy < b.validation_nll) {
            best = Some(DensityFit { model, multiplier: mult, validation_nll: proxy });
        }
        if let Some(p) = prev {
            if proxy > p {
                worsened += 1;
                if worsened >= 2 {
                    break;
                }
            } else {
                worsened = 0;
            }
        }
        prev = Some(proxy);
    }
    best.ok_or_else(|| Error::InvalidParameter("empty bandwidth grid".into()))
}

/// Report of one end-to-end density estimation run.
#[derive(Debug, Clone)]
pub struct KdeReport<S> {
    pub model: GaussianMixture<S>,
    pub test_nll: S,
    pub multiplier: S,
    pub train_n: usize,
    pub test_n: usize,
}

/// Splits off a seeded test fraction, fits the density on the remainder,
/// and scores the held-out negative log-likelihood.
pub fn kde_pipeline<S: Scalar>(
    xs: &DataMatrix<S>,
    estimator: &EstimatorKind<S>,
    test_fraction: f64,
    bw_grid: &[S],
    seed: u64,
) -> Result<KdeReport<S>> {
    kde_pipeline_with(xs, estimator, test_fraction, bw_grid, KdeConfig::default(), seed)
}

pub fn kde_pipeline_with<S: Scalar>(
    xs: &DataMatrix<S>,
    estimator: &EstimatorKind<S>,
    test_fraction: f64,
    bw_grid: &[S],
    cfg: KdeConfig,
    seed: u64,
) -> Result<KdeReport<S>> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!("test fraction {test_fraction}")));
    }
    let n = xs.n();
    let test_size = ((n as f64) * test_fraction).ceil() as usize;
    if test_size == 0 || test_size >= n {
        return Err(Error::InvalidParameter("degenerate train/test split".into()));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = substream(seed, "density/test-split", 0);
    crate::mmd::fisher_yates(&mut idx, &mut rng);
    let test = xs.rows_subset(&idx[..test_size]);
    let train = xs.rows_subset(&idx[test_size..]);
    let fit = fit_density(&train, estimator, bw_grid, cfg, seed)?;
    let test_nll = nll(&fit.model, &test)?;
    Ok(KdeReport {
        model: fit.model,
        test_nll,
        multiplier: fit.multiplier,
        train_n: train.n(),
        test_n: test.n(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn gaussian_sample(n: usize, d: usize, mean: f64, seed: u64) -> DataMatrix<f64> {
        let mut r = rng::substream(seed, "density/test-data", 0);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| mean + rng::standard_normal::<f64>(&mut r)).collect())
            .collect();
        DataMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn single_cluster_recovers_sample_moments() {
        let xs = gaussian_sample(200, 2, 1.5, 1);
        let gm = kmeans(&xs, 1, 50, 7).unwrap();
        assert_eq!(gm.weights(), &[1.0]);
        for j in 0..2 {
            let mean: f64 = (0..200).map(|i| xs.get(i, j)).sum::<f64>() / 200.0;
            assert!((gm.means().get(0, j) - mean).abs() < 1e-12);
            let var: f64 =
                (0..200).map(|i| (xs.get(i, j) - mean).powi(2)).sum::<f64>() / 200.0;
            assert!((gm.covariances()[0][j] - var - VARIANCE_RIDGE).abs() < 1e-10);
        }
    }

    #[test]
    fn one_cluster_per_point_floors_the_variance() {
        let xs = DataMatrix::from_rows(&[vec![0.0], vec![1.0], vec![5.0]]).unwrap();
        let gm = kmeans(&xs, 3, 50, 3).unwrap();
        let mut centers: Vec<f64> = (0..3).map(|k| gm.means().get(k, 0)).collect();
        centers.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(centers, vec![0.0, 1.0, 5.0]);
        for cov in gm.covariances() {
            assert_eq!(cov[0], VARIANCE_RIDGE);
        }
        for w in gm.weights() {
            assert!((w - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_blobs_are_found() {
        let mut rows = Vec::new();
        let mut r = rng::substream(9, "density/blobs", 0);
        for _ in 0..60 {
            rows.push(vec![rng::standard_normal::<f64>(&mut r) * 0.05]);
        }
        for _ in 0..60 {
            rows.push(vec![8.0 + rng::standard_normal::<f64>(&mut r) * 0.05]);
        }
        let xs = DataMatrix::from_rows(&rows).unwrap();
        let gm = kmeans(&xs, 2, 100, 11).unwrap();
        let mut centers: Vec<f64> = (0..2).map(|k| gm.means().get(k, 0)).collect();
        centers.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((centers[0] - 0.0).abs() < 0.1);
        assert!((centers[1] - 8.0).abs() < 0.1);
    }

    #[test]
    fn kmeans_rejects_more_clusters_than_points() {
        let xs = gaussian_sample(3, 1, 0.0, 2);
        assert!(kmeans(&xs, 4, 10, 1).is_err());
    }

    #[test]
    fn kmeans_survives_duplicate_heavy_data() {
        // duplicates force empty clusters and reseeding
        let rows: Vec<Vec<f64>> = vec![
            vec![0.0],
            vec![0.0],
            vec![0.0],
            vec![0.0],
            vec![5.0],
            vec![5.0],
        ];
        let xs = DataMatrix::from_rows(&rows).unwrap();
        for seed in 0..10 {
            let gm = kmeans(&xs, 4, 30, seed).unwrap();
            let total: f64 = gm.weights().iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            for k in 0..4 {
                assert!(gm.means().get(k, 0).is_finite());
                assert!(gm.covariances()[k][0].is_finite());
            }
        }
    }

    #[test]
    fn single_prototype_gets_all_the_weight() {
        let xs = gaussian_sample(30, 1, 0.0, 21);
        let bw = median_heuristic(&xs).unwrap();
        let est = estimators::fit_kme(&xs, bw).unwrap();
        let protos = kmeans(&xs, 1, 50, 5).unwrap();
        let fit = match_mixture(&est, &protos).unwrap();
        assert_eq!(fit.weights(), &[1.0]);
    }

    #[test]
    fn matching_recovers_an_exactly_representable_embedding() {
        // the estimate IS prototype zero's mean embedding
        let xs = gaussian_sample(40, 2, 0.0, 22);
        let bw = median_heuristic(&xs).unwrap();
        let protos = kmeans(&xs, 4, 100, 6).unwrap();
        let est = MeanEstimate::new(
            protos.means().rows_subset(&[0]),
            vec![1.0],
            CorruptionModel::Diagonal(protos.covariances()[0].clone()),
            bw,
        )
        .unwrap();
        let fit = match_mixture(&est, &protos).unwrap();
        // the 1e-10 improvement cutoff leaves a few-1e-6 of weight on the
        // runner-up prototype; the objective itself is optimal to ~1e-11
        assert!(fit.weights()[0] > 1.0 - 1e-5, "{:?}", fit.weights());
        let dist = embedding_distance_sq(&est, &fit).unwrap();
        assert!(dist.abs() < 1e-9);
    }

    #[test]
    fn matched_weights_beat_uniform_and_initial_weights() {
        let xs = gaussian_sample(60, 1, 0.0, 23);
        let bw = median_heuristic(&xs).unwrap();
        let est = estimators::fit_kme(&xs, bw).unwrap();
        let protos = kmeans(&xs, 5, 100, 8).unwrap();
        let fit = match_mixture(&est, &protos).unwrap();
        let fitted = embedding_distance_sq(&est, &fit).unwrap();
        let uniform = embedding_distance_sq(
            &est,
            &protos.with_weights(vec![0.2; 5]).unwrap(),
        )
        .unwrap();
        let initial = embedding_distance_sq(&est, &protos).unwrap();
        assert!(fitted <= uniform + 1e-12);
        assert!(fitted <= initial + 1e-12);
        let total: f64 = fit.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-10);
        assert!(fit.weights().iter().all(|w| *w >= 0.0));
    }

    #[test]
    fn matching_tracks_a_random_search_oracle() {
        let xs = gaussian_sample(50, 2, 0.0, 24);
        let bw = median_heuristic(&xs).unwrap();
        let est = estimators::fit_kme(&xs, bw).unwrap();
        let protos = kmeans(&xs, 5, 100, 12).unwrap();
        let (g, h) = matching_qp(&est, &protos).unwrap();
        let fit = match_mixture(&est, &protos).unwrap();
        let fitted = qp_objective(&g, &h, fit.weights());
        // random search over the simplex via exponential spacings
        let mut r = rng::substream(13, "density/random-search", 0);
        let mut best = f64::INFINITY;
        for _ in 0..20_000 {
            let mut a: Vec<f64> =
                (0..5).map(|_| -rng::uniform::<f64>(&mut r, 1e-12, 1.0).ln()).collect();
            let t: f64 = a.iter().sum();
            a.iter_mut().for_each(|v| *v /= t);
            best = best.min(qp_objective(&g, &h, &a));
        }
        assert!(fitted <= best + 1e-6, "pgd {fitted} vs random {best}");
    }

    #[test]
    fn nll_hand_value_for_standard_normal() {
        let model = GaussianMixture::new(
            vec![1.0],
            DataMatrix::from_rows(&[vec![0.0]]).unwrap(),
            vec![vec![1.0]],
        )
        .unwrap();
        let test = DataMatrix::from_rows(&[vec![0.0]]).unwrap();
        let v = nll(&model, &test).unwrap();
        let want = 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((v - want).abs() < 1e-12);
    }

    #[test]
    fn nll_is_invariant_to_duplication_and_relabeling() {
        let model = GaussianMixture::new(
            vec![0.3, 0.7],
            DataMatrix::from_rows(&[vec![0.0], vec![2.0]]).unwrap(),
            vec![vec![1.0], vec![0.5]],
        )
        .unwrap();
        let test = gaussian_sample(20, 1, 0.5, 31);
        let v = nll(&model, &test).unwrap();

        let doubled = test.concat_rows(&test).unwrap();
        assert!((nll(&model, &doubled).unwrap() - v).abs() < 1e-12);

        let relabeled = GaussianMixture::new(
            vec![0.7, 0.3],
            DataMatrix::from_rows(&[vec![2.0], vec![0.0]]).unwrap(),
            vec![vec![0.5], vec![1.0]],
        )
        .unwrap();
        assert!((nll(&relabeled, &test).unwrap() - v).abs() < 1e-12);
    }

    #[test]
    fn matching_model_beats_a_mis_scaled_one() {
        let test = gaussian_sample(1000, 1, 0.0, 32);
        let good = GaussianMixture::new(
            vec![1.0],
            DataMatrix::from_rows(&[vec![0.0]]).unwrap(),
            vec![vec![1.0]],
        )
        .unwrap();
        let bad = GaussianMixture::new(
            vec![1.0],
            DataMatrix::from_rows(&[vec![3.0]]).unwrap(),
            vec![vec![1.0]],
        )
        .unwrap();
        assert!(nll(&good, &test).unwrap() < nll(&bad, &test).unwrap());
    }

    #[test]
    fn pipeline_is_deterministic_and_reduces_for_single_multiplier() {
        let xs = gaussian_sample(80, 1, 0.0, 33);
        let kind = EstimatorKind::Kme;
        let cfg = KdeConfig { prototypes: 4, kmeans_iters: 50 };
        let a = kde_pipeline_with(&xs, &kind, 0.3, &[1.0], cfg, 5).unwrap();
        let b = kde_pipeline_with(&xs, &kind, 0.3, &[1.0], cfg, 5).unwrap();
        assert_eq!(a.test_nll, b.test_nll);
        assert_eq!(a.model, b.model);
        assert_eq!(a.multiplier, 1.0);

        let grid = default_bw_multipliers::<f64>();
        let c = kde_pipeline_with(&xs, &kind, 0.3, &grid, cfg, 5).unwrap();
        let d = kde_pipeline_with(&xs, &kind, 0.3, &grid, cfg, 5).unwrap();
        assert_eq!(c.test_nll, d.test_nll);
        assert!(c.test_nll.is_finite());
    }

    #[test]
    fn pipeline_rejects_bad_fractions() {
        let xs = gaussian_sample(40, 1, 0.0, 34);
        assert!(kde_pipeline(&xs, &EstimatorKind::Kme, 0.0, &[1.0], 1).is_err());
        assert!(kde_pipeline(&xs, &EstimatorKind::Kme, 1.0, &[1.0], 1).is_err());
        assert!(kde_pipeline(&xs, &EstimatorKind::Kme, 0.3, &[], 1).is_err());
        assert!(kde_pipeline(&xs, &EstimatorKind::Kme, 0.3, &[-1.0], 1).is_err());
    }
}
