//! Gaussian RBF kernel, its corruption-marginalized closed forms, Gram
//! matrices, and the median-heuristic bandwidth.
//!
//! The marginalized kernel of two Gaussian-corrupted points with centers
//! `x`, `y` and covariances `A`, `B` is
//!
//! ```text
//! theta^d / |A + B + theta^2 I|^(1/2) * exp(-1/2 (x-y)^T (A + B + theta^2 I)^(-1) (x-y))
//! ```
//!
//! Covariances are restricted to zero (Dirac), isotropic, or diagonal, so
//! determinants and inverses reduce to per-coordinate arithmetic. The
//! normalizer is accumulated in log space to stay stable in high dimension.

use rayon::prelude::*;

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Squared bandwidth of the RBF kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bandwidth<S> {
    theta2: S,
}

impl<S: Scalar> Bandwidth<S> {
    /// Wraps a squared bandwidth, which must be positive and finite.
    pub fn new(theta2: S) -> Result<Self> {
        if !theta2.is_finite() || theta2 <= S::zero() {
            return Err(Error::InvalidBandwidth(format!("theta^2 = {theta2}")));
        }
        Ok(Self { theta2 })
    }

    /// The squared bandwidth.
    pub fn theta2(&self) -> S {
        self.theta2
    }

    /// Scales the squared bandwidth by a positive multiplier.
    pub fn scaled(&self, multiplier: S) -> Result<Self> {
        Self::new(self.theta2 * multiplier)
    }
}

/// Corruption covariance shared by all points of a sample.
#[derive(Debug, Clone, PartialEq)]
pub enum CorruptionModel<S> {
    /// No corruption; the corrupted distribution is a point mass.
    Dirac,
    /// Covariance `sigma2 * I`.
    Isotropic(S),
    /// Covariance `diag(e_1, ..., e_d)`.
    Diagonal(Vec<S>),
}

impl<S: Scalar> CorruptionModel<S> {
    /// Checks entry signs and, for the diagonal case, the dimension.
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            CorruptionModel::Dirac => Ok(()),
            CorruptionModel::Isotropic(s) => {
                if *s >= S::zero() && s.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("corruption variance {s}")))
                }
            }
            CorruptionModel::Diagonal(e) => {
                if e.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: e.len() });
                }
                if e.iter().any(|v| !v.is_finite() || *v < S::zero()) {
                    return Err(Error::InvalidParameter("negative diagonal variance".into()));
                }
                Ok(())
            }
        }
    }

    /// Variance along coordinate `j`.
    pub fn variance(&self, j: usize) -> S {
        match self {
            CorruptionModel::Dirac => S::zero(),
            CorruptionModel::Isotropic(s) => *s,
            CorruptionModel::Diagonal(e) => e[j],
        }
    }

    pub fn is_dirac(&self) -> bool {
        matches!(self, CorruptionModel::Dirac)
    }

    /// Coordinate-wise average of two models of the same variant.
    pub fn average(&self, other: &Self) -> Result<Self> {
        let half = S::cast(0.5);
        match (self, other) {
            (CorruptionModel::Dirac, CorruptionModel::Dirac) => Ok(CorruptionModel::Dirac),
            (CorruptionModel::Isotropic(a), CorruptionModel::Isotropic(b)) => {
                Ok(CorruptionModel::Isotropic((*a + *b) * half))
            }
            (CorruptionModel::Diagonal(a), CorruptionModel::Diagonal(b)) => {
                if a.len() != b.len() {
                    return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
                }
                Ok(CorruptionModel::Diagonal(
                    a.iter().zip(b.iter()).map(|(x, y)| (*x + *y) * half).collect(),
                ))
            }
            _ => Err(Error::InvalidParameter("cannot average different corruption variants".into())),
        }
    }
}

/// Which kernel generated a Gram matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GramKind {
    Rbf,
    KPrime,
    Marginalized,
}

/// Dense `rows x cols` kernel matrix.
#[derive(Debug, Clone)]
pub struct GramMatrix<S> {
    data: Vec<S>,
    rows: usize,
    cols: usize,
    kind: GramKind,
}

impl<S: Scalar> GramMatrix<S> {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn kind(&self) -> GramKind {
        self.kind
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Sum of row `i`.
    pub fn row_sum(&self, i: usize) -> S {
        let mut acc = S::zero();
        for v in self.row(i) {
            acc += *v;
        }
        acc
    }

    /// Sum of all entries.
    pub fn total(&self) -> S {
        let mut acc = S::zero();
        for v in &self.data {
            acc += *v;
        }
        acc
    }

    pub(crate) fn from_fn(
        rows: usize,
        cols: usize,
        kind: GramKind,
        f: impl Fn(usize, usize) -> S + Sync,
    ) -> Self {
        let mut data = vec![S::zero(); rows * cols];
        if rows * cols >= 4096 {
            data.par_chunks_mut(cols).enumerate().for_each(|(i, row)| {
                for (j, slot) in row.iter_mut().enumerate() {
                    *slot = f(i, j);
                }
            });
        } else {
            for i in 0..rows {
                for j in 0..cols {
                    data[i * cols + j] = f(i, j);
                }
            }
        }
        Self { data, rows, cols, kind }
    }
}

fn check_dims<S: Scalar>(x: &[S], y: &[S]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    Ok(())
}

pub(crate) fn squared_distance<S: Scalar>(x: &[S], y: &[S]) -> S {
    let mut acc = S::zero();
    for (a, b) in x.iter().zip(y.iter()) {
        let diff = *a - *b;
        acc += diff * diff;
    }
    acc
}

pub(crate) fn rbf_unchecked<S: Scalar>(x: &[S], y: &[S], theta2: S) -> S {
    let half = S::cast(0.5);
    (-squared_distance(x, y) / theta2 * half).exp()
}

/// RBF kernel `exp(-||x-y||^2 / (2 theta^2))`.
pub fn rbf<S: Scalar>(x: &[S], y: &[S], bw: Bandwidth<S>) -> Result<S> {
    check_dims(x, y)?;
    Ok(rbf_unchecked(x, y, bw.theta2()))
}

pub(crate) fn k_prime_unchecked<S: Scalar>(x: &[S], y: &[S], theta2: S) -> S {
    let half = S::cast(0.5);
    let sq = squared_distance(x, y);
    (-sq / theta2 * half).exp() * sq
}

/// Auxiliary kernel `exp(-||x-y||^2 / (2 theta^2)) * ||x-y||^2`.
pub fn k_prime<S: Scalar>(x: &[S], y: &[S], bw: Bandwidth<S>) -> Result<S> {
    check_dims(x, y)?;
    Ok(k_prime_unchecked(x, y, bw.theta2()))
}

/// Shared closed form for the marginalized kernels; per-coordinate variance
/// sums come from the two corruption models.
pub(crate) fn marginal_unchecked<S: Scalar>(
    x: &[S],
    cov_x: &CorruptionModel<S>,
    y: &[S],
    cov_y: &CorruptionModel<S>,
    theta2: S,
) -> S {
    if cov_x.is_dirac() && cov_y.is_dirac() {
        return rbf_unchecked(x, y, theta2);
    }
    let half = S::cast(0.5);
    let log_theta2 = theta2.ln();
    let mut log_norm = S::zero();
    let mut quad = S::zero();
    for j in 0..x.len() {
        let denom = cov_x.variance(j) + cov_y.variance(j) + theta2;
        log_norm += log_theta2 - denom.ln();
        let diff = x[j] - y[j];
        quad += diff * diff / denom;
    }
    ((log_norm - quad) * half).exp()
}

/// Expected RBF kernel between a Gaussian-corrupted point and a fixed point:
/// `E[k(x~, y)]` with `x~ ~ N(x_center, cov)`.
pub fn marginal_single<S: Scalar>(
    x_center: &[S],
    cov: &CorruptionModel<S>,
    y: &[S],
    bw: Bandwidth<S>,
) -> Result<S> {
    check_dims(x_center, y)?;
    cov.validate(x_center.len())?;
    Ok(marginal_unchecked(x_center, cov, y, &CorruptionModel::Dirac, bw.theta2()))
}

/// Expected RBF kernel between two independently corrupted points.
/// Symmetric in its two `(point, cov)` arguments.
pub fn marginal_double<S: Scalar>(
    x: &[S],
    cov_x: &CorruptionModel<S>,
    y: &[S],
    cov_y: &CorruptionModel<S>,
    bw: Bandwidth<S>,
) -> Result<S> {
    check_dims(x, y)?;
    cov_x.validate(x.len())?;
    cov_y.validate(y.len())?;
    Ok(marginal_unchecked(x, cov_x, y, cov_y, bw.theta2()))
}

/// Gram matrix of the plain RBF or the auxiliary kernel.
pub fn gram<S: Scalar>(
    xs: &DataMatrix<S>,
    ys: &DataMatrix<S>,
    bw: Bandwidth<S>,
    kind: GramKind,
) -> Result<GramMatrix<S>> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::EmptySample);
    }
    if xs.dim() != ys.dim() {
        return Err(Error::DimensionMismatch { expected: xs.dim(), got: ys.dim() });
    }
    let theta2 = bw.theta2();
    match kind {
        GramKind::Rbf => Ok(GramMatrix::from_fn(xs.n(), ys.n(), kind, |i, j| {
            rbf_unchecked(xs.row(i), ys.row(j), theta2)
        })),
        GramKind::KPrime => Ok(GramMatrix::from_fn(xs.n(), ys.n(), kind, |i, j| {
            k_prime_unchecked(xs.row(i), ys.row(j), theta2)
        })),
        GramKind::Marginalized => Err(Error::InvalidParameter(
            "use marginal_gram for marginalized kernels".into(),
        )),
    }
}

/// Gram matrix of the marginalized kernel, with row-side corruption `cov`
/// and column-side corruption `cov2`.
pub fn marginal_gram<S: Scalar>(
    xs: &DataMatrix<S>,
    cov: &CorruptionModel<S>,
    ys: &DataMatrix<S>,
    cov2: &CorruptionModel<S>,
    bw: Bandwidth<S>,
) -> Result<GramMatrix<S>> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::EmptySample);
    }
    if xs.dim() != ys.dim() {
        return Err(Error::DimensionMismatch { expected: xs.dim(), got: ys.dim() });
    }
    cov.validate(xs.dim())?;
    cov2.validate(ys.dim())?;
    let theta2 = bw.theta2();
    Ok(GramMatrix::from_fn(xs.n(), ys.n(), GramKind::Marginalized, |i, j| {
        marginal_unchecked(xs.row(i), cov, ys.row(j), cov2, theta2)
    }))
}

/// Median of the pairwise squared distances over `i < j`, excluding the
/// zero self-distances. For an even count the lower middle element is taken,
/// which keeps the result reproducible across platforms.
pub fn median_heuristic<S: Scalar>(xs: &DataMatrix<S>) -> Result<Bandwidth<S>> {
    let n = xs.n();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            dists.push(squared_distance(xs.row(i), xs.row(j)));
        }
    }
    dists.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    let median = dists[(dists.len() - 1) / 2];
    if median <= S::zero() {
        return Err(Error::InvalidBandwidth(
            "median pairwise distance is zero".into(),
        ));
    }
    Bandwidth::new(median)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bw(theta2: f64) -> Bandwidth<f64> {
        Bandwidth::new(theta2).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn rbf_matches_hand_values() {
        let b = bw(1.0);
        assert_eq!(rbf(&[0.3, -1.0], &[0.3, -1.0], b).unwrap(), 1.0);
        // one-dimensional point at distance theta * sqrt(2) gives exponent -1
        let theta2: f64 = 2.3;
        let y = (2.0 * theta2).sqrt();
        let v = rbf(&[0.0], &[y], bw(theta2)).unwrap();
        assert!(close(v, (-1.0f64).exp(), 1e-12));
        let v2 = rbf(&[0.0, 0.0], &[1.0, 1.0], b).unwrap();
        assert!(close(v2, (-1.0f64).exp(), 1e-12));
    }

    #[test]
    fn rbf_rejects_dimension_mismatch() {
        assert!(rbf(&[0.0], &[0.0, 1.0], bw(1.0)).is_err());
    }

    #[test]
    fn k_prime_matches_hand_values() {
        assert_eq!(k_prime(&[1.0, 2.0], &[1.0, 2.0], bw(1.0)).unwrap(), 0.0);
        let v = k_prime(&[0.0], &[1.0], bw(1.0)).unwrap();
        assert!(close(v, (-0.5f64).exp(), 1e-12));
        let v2 = k_prime(&[0.0], &[2.0], bw(2.0)).unwrap();
        assert!(close(v2, 4.0 * (-1.0f64).exp(), 1e-12));
    }

    #[test]
    fn marginal_single_dirac_reduces_to_rbf() {
        let x = [0.4, -2.0, 1.5];
        let y = [1.0, 0.0, -0.5];
        let b = bw(0.7);
        let m = marginal_single(&x, &CorruptionModel::Dirac, &y, b).unwrap();
        assert_eq!(m, rbf(&x, &y, b).unwrap());
    }

    #[test]
    fn marginal_single_closed_form_values() {
        let b = bw(1.0);
        let iso = CorruptionModel::Isotropic(1.0);
        let v = marginal_single(&[0.0], &iso, &[0.0], b).unwrap();
        assert!(close(v, 1.0 / 2.0f64.sqrt(), 1e-12));
        let v2 = marginal_single(&[0.0], &iso, &[2.0], b).unwrap();
        assert!(close(v2, (-1.0f64).exp() / 2.0f64.sqrt(), 1e-6));
    }

    #[test]
    fn marginal_double_closed_form_values() {
        let b = bw(1.0);
        let half = CorruptionModel::Isotropic(0.5);
        let v = marginal_double(&[1.3], &half, &[1.3], &half, b).unwrap();
        assert!(close(v, 1.0 / 2.0f64.sqrt(), 1e-12));

        let ca = CorruptionModel::Diagonal(vec![1.0, 0.0]);
        let cb = CorruptionModel::Diagonal(vec![0.0, 1.0]);
        let v2 = marginal_double(&[0.2, -0.4], &ca, &[0.2, -0.4], &cb, b).unwrap();
        assert!(close(v2, 0.5, 1e-12));

        let both = marginal_double(
            &[0.1, 0.2],
            &CorruptionModel::Dirac,
            &[1.0, -1.0],
            &CorruptionModel::Dirac,
            b,
        )
        .unwrap();
        assert_eq!(both, rbf(&[0.1, 0.2], &[1.0, -1.0], b).unwrap());
    }

    /// Monte Carlo check of the single and double marginalized closed forms.
    #[test]
    fn marginal_matches_monte_carlo() {
        use rand::Rng;
        let mut rng = crate::rng::substream(11, "kernels/mc", 0);
        let b = bw(0.8);
        let x = [0.3, -0.7];
        let y = [1.1, 0.4];
        let sig_x: f64 = 0.6;
        let sig_y: f64 = 0.25;
        let draws = 400_000;
        let mut acc_single = 0.0;
        let mut acc_double = 0.0;
        for _ in 0..draws {
            let mut xt = [0.0; 2];
            let mut yt = [0.0; 2];
            for j in 0..2 {
                let zx: f64 = crate::rng::standard_normal(&mut rng);
                let zy: f64 = crate::rng::standard_normal(&mut rng);
                xt[j] = x[j] + sig_x.sqrt() * zx;
                yt[j] = y[j] + sig_y.sqrt() * zy;
            }
            acc_single += rbf(&xt, &y, b).unwrap();
            acc_double += rbf(&xt, &yt, b).unwrap();
            let _ = rng.gen::<u32>();
        }
        let mc_single = acc_single / draws as f64;
        let mc_double = acc_double / draws as f64;
        let cf_single =
            marginal_single(&x, &CorruptionModel::Isotropic(sig_x), &y, b).unwrap();
        let cf_double = marginal_double(
            &x,
            &CorruptionModel::Isotropic(sig_x),
            &y,
            &CorruptionModel::Isotropic(sig_y),
            b,
        )
        .unwrap();
        assert!(close(mc_single, cf_single, 1e-2), "{mc_single} vs {cf_single}");
        assert!(close(mc_double, cf_double, 1e-2), "{mc_double} vs {cf_double}");
    }

    #[test]
    fn marginal_stays_finite_in_high_dimension() {
        let d = 400;
        let x = vec![0.0; d];
        let y = vec![0.01; d];
        let v = marginal_double(
            &x,
            &CorruptionModel::Isotropic(3.0),
            &y,
            &CorruptionModel::Isotropic(5.0),
            bw(0.05),
        )
        .unwrap();
        assert!(v.is_finite());
        assert!(v >= 0.0);
    }

    #[test]
    fn gram_matches_entrywise_kernel() {
        let xs = DataMatrix::from_rows(&[vec![0.0, 0.0], vec![1.0, -1.0], vec![0.5, 2.0]])
            .unwrap();
        let b = bw(1.7);
        let g = gram(&xs, &xs, b, GramKind::Rbf).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = rbf(xs.row(i), xs.row(j), b).unwrap();
                assert_eq!(g.get(i, j), want);
                assert_eq!(g.get(i, j), g.get(j, i));
            }
        }
        assert_eq!(g.get(0, 0), 1.0);

        let single = DataMatrix::from_rows(&[vec![2.0]]).unwrap();
        let g1 = gram(&single, &single, b, GramKind::Rbf).unwrap();
        assert_eq!(g1.get(0, 0), 1.0);
    }

    #[test]
    fn gram_rejects_bad_inputs() {
        let xs = DataMatrix::from_rows(&[vec![0.0_f64]]).unwrap();
        let ys = DataMatrix::from_rows(&[vec![0.0_f64, 1.0]]).unwrap();
        assert!(gram(&xs, &ys, bw(1.0), GramKind::Rbf).is_err());
        let empty = DataMatrix::new(0, 1, vec![]).unwrap();
        assert!(gram(&empty, &xs, bw(1.0), GramKind::Rbf).is_err());
    }

    #[test]
    fn marginal_gram_reductions() {
        let xs = DataMatrix::from_rows(&[
            vec![0.0, 0.0],
            vec![1.0, 0.3],
            vec![-0.5, 0.6],
            vec![2.0, -1.0],
        ])
        .unwrap();
        let b = bw(1.3);
        let dirac = CorruptionModel::Dirac;
        let plain = gram(&xs, &xs, b, GramKind::Rbf).unwrap();
        let marg = marginal_gram(&xs, &dirac, &xs, &dirac, b).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(plain.get(i, j), marg.get(i, j));
            }
        }

        let iso = CorruptionModel::Isotropic(0.3);
        let q = marginal_gram(&xs, &iso, &xs, &iso, b).unwrap();
        let expected_diag = 1.3 / (2.0 * 0.3 + 1.3); // (theta^2/(2 sigma^2 + theta^2))^(d/2), d = 2
        for i in 0..4 {
            assert!(close(q.get(i, i), expected_diag, 1e-12));
            for j in 0..4 {
                let want =
                    marginal_double(xs.row(i), &iso, xs.row(j), &iso, b).unwrap();
                assert_eq!(q.get(i, j), want);
            }
        }
    }

    #[test]
    fn square_grams_are_positive_semidefinite() {
        let n = 120;
        let mut rng = crate::rng::substream(3, "kernels/psd", 0);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..3).map(|_| crate::rng::standard_normal(&mut rng)).collect())
            .collect();
        let xs = DataMatrix::from_rows(&rows).unwrap();
        let b = median_heuristic(&xs).unwrap();
        let floor = -1e-8 * n as f64;

        let g = gram(&xs, &xs, b, GramKind::Rbf).unwrap();
        let ev = crate::linalg::sym_eigenvalues(g.as_slice(), n);
        assert!(ev.iter().all(|v| *v >= floor), "rbf gram not PSD");

        let cov = CorruptionModel::Diagonal(vec![0.4, 0.1, 0.9]);
        let q = marginal_gram(&xs, &cov, &xs, &cov, b).unwrap();
        let evq = crate::linalg::sym_eigenvalues(q.as_slice(), n);
        assert!(evq.iter().all(|v| *v >= floor), "marginalized gram not PSD");
    }

    #[test]
    fn median_heuristic_hand_cases() {
        let two = DataMatrix::from_rows(&[vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(median_heuristic(&two).unwrap().theta2(), 25.0);

        let three = DataMatrix::from_rows(&[vec![0.0], vec![1.0], vec![3.0]]).unwrap();
        // pairwise squared distances {1, 4, 9}
        assert_eq!(median_heuristic(&three).unwrap().theta2(), 4.0);

        let one = DataMatrix::from_rows(&[vec![0.0]]).unwrap();
        assert!(median_heuristic(&one).is_err());

        let same = DataMatrix::from_rows(&[vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        assert!(median_heuristic(&same).is_err());
    }

    #[test]
    fn f32_instantiation_works() {
        let b = Bandwidth::<f32>::new(1.0).unwrap();
        let v = rbf(&[0.0f32, 0.0], &[1.0, 1.0], b).unwrap();
        assert!((v - (-1.0f32).exp()).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn rbf_lies_in_unit_interval(
            x in proptest::collection::vec(-5.0f64..5.0, 1..5),
            shift in proptest::collection::vec(-5.0f64..5.0, 1..5),
            theta2 in 0.5f64..100.0,
        ) {
            let d = x.len().min(shift.len());
            let y: Vec<f64> = x[..d].iter().zip(&shift[..d]).map(|(a, s)| a + s).collect();
            let v = rbf(&x[..d], &y, bw(theta2)).unwrap();
            prop_assert!(v > 0.0 && v <= 1.0);
            let same = shift[..d].iter().all(|s| *s == 0.0);
            prop_assert_eq!(v == 1.0, same);
        }

        #[test]
        fn marginal_double_is_symmetric(
            x in proptest::collection::vec(-10.0f64..10.0, 2..4),
            y in proptest::collection::vec(-10.0f64..10.0, 2..4),
            sa in 0.0f64..4.0,
            sb in 0.0f64..4.0,
            theta2 in 0.05f64..10.0,
        ) {
            let d = x.len().min(y.len());
            let ca = CorruptionModel::Isotropic(sa);
            let cb = CorruptionModel::Isotropic(sb);
            let b = bw(theta2);
            let v1 = marginal_double(&x[..d], &ca, &y[..d], &cb, b).unwrap();
            let v2 = marginal_double(&y[..d], &cb, &x[..d], &ca, b).unwrap();
            prop_assert_eq!(v1, v2);
        }

        #[test]
        fn marginal_double_shrinks_with_variance(
            point in proptest::collection::vec(-5.0f64..5.0, 1..4),
            theta2 in 0.05f64..10.0,
            s1 in 0.0f64..5.0,
            extra in 0.0f64..5.0,
        ) {
            let b = bw(theta2);
            let lo = CorruptionModel::Isotropic(s1);
            let hi = CorruptionModel::Isotropic(s1 + extra);
            let v_lo = marginal_double(&point, &lo, &point, &lo, b).unwrap();
            let v_hi = marginal_double(&point, &hi, &point, &hi, b).unwrap();
            prop_assert!(v_hi <= v_lo + 1e-15);
            // closed-form value at x = y
            let d = point.len() as i32;
            let want = (theta2 / (2.0 * s1 + theta2)).powi(d).sqrt();
            prop_assert!((v_lo - want).abs() < 1e-12);
        }

        #[test]
        fn median_heuristic_is_permutation_and_shift_invariant(
            rows in proptest::collection::vec(
                proptest::collection::vec(-20.0f64..20.0, 2),
                2..8,
            ),
            offset in -5.0f64..5.0,
        ) {
            let xs = DataMatrix::from_rows(&rows).unwrap();
            if let Ok(b) = median_heuristic(&xs) {
                let mut rev: Vec<Vec<f64>> = rows.clone();
                rev.reverse();
                let xs_rev = DataMatrix::from_rows(&rev).unwrap();
                prop_assert_eq!(median_heuristic(&xs_rev).unwrap().theta2(), b.theta2());

                let shifted: Vec<Vec<f64>> = rows
                    .iter()
                    .map(|r| r.iter().map(|v| v + offset).collect())
                    .collect();
                let xs_shift = DataMatrix::from_rows(&shifted).unwrap();
                let bs = median_heuristic(&xs_shift).unwrap().theta2();
                prop_assert!((bs - b.theta2()).abs() <= 1e-9 * (1.0 + b.theta2()));
            }
        }
    }
}
