//! Leave-one-out covariance selection for the marginalized estimators.
//!
//! The cross-validation score of a candidate corruption covariance is the
//! average squared RKHS distance between each point's (uncorrupted) feature
//! map and the corrupted mean estimated from the remaining points. With a
//! covariance shared across points it collapses to sums over two expected
//! kernel matrices:
//!
//! * `L`: the expectation over one corrupted argument,
//! * `Q`: the expectation over two corrupted arguments,
//!
//! giving an `O(n^2 d)` objective per candidate.

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::kernels::{Bandwidth, CorruptionModel};
use crate::optim::{minimize_scalar, nelder_mead, NelderMeadOptions, ScalarBracket};
use crate::scalar::Scalar;

/// Which covariance family a marginalized fit searches over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceFamily {
    Isotropic,
    Diagonal,
}

/// Outcome of a covariance search.
#[derive(Debug, Clone)]
pub struct LoocvScore<S> {
    pub value: S,
    pub cov: CorruptionModel<S>,
    pub evaluations: usize,
}

/// Precomputed pairwise distance tables reused across objective calls.
pub(crate) struct LoocvContext<S> {
    n: usize,
    d: usize,
    theta2: S,
    /// total squared distance per unordered pair, i < j
    pair_sqdist: Vec<S>,
    /// per-coordinate squared differences, laid out `[pair * d + k]`
    pair_dim_sqdiff: Vec<S>,
}

impl<S: Scalar> LoocvContext<S> {
    pub(crate) fn new(xs: &DataMatrix<S>, bw: Bandwidth<S>) -> Result<Self> {
        let n = xs.n();
        if n < 3 {
            return Err(Error::TooFewSamples { needed: 3, got: n });
        }
        let d = xs.dim();
        let pairs = n * (n - 1) / 2;
        let mut pair_sqdist = Vec::with_capacity(pairs);
        let mut pair_dim_sqdiff = Vec::with_capacity(pairs * d);
        for i in 0..n {
            let xi = xs.row(i);
            for j in (i + 1)..n {
                let xj = xs.row(j);
                let mut total = S::zero();
                for k in 0..d {
                    let diff = xi[k] - xj[k];
                    let sq = diff * diff;
                    pair_dim_sqdiff.push(sq);
                    total += sq;
                }
                pair_sqdist.push(total);
            }
        }
        Ok(Self { n, d, theta2: bw.theta2(), pair_sqdist, pair_dim_sqdiff })
    }

    /// LOOCV score for a shared isotropic covariance `sigma2 * I`.
    pub(crate) fn objective_isotropic(&self, sigma2: S) -> S {
        let t2 = self.theta2;
        let denom_l = sigma2 + t2;
        let denom_q = sigma2 + sigma2 + t2;
        let dd = S::from_count(self.d);
        let half = S::cast(0.5);
        let norm_l = (dd * half * (t2.ln() - denom_l.ln())).exp();
        let norm_q = (dd * half * (t2.ln() - denom_q.ln())).exp();

        let mut row_l = vec![S::zero(); self.n];
        let mut row_q = vec![S::zero(); self.n];
        let mut p = 0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let sq = self.pair_sqdist[p];
                let l = norm_l * (-(sq / denom_l) * half).exp();
                let q = norm_q * (-(sq / denom_q) * half).exp();
                row_l[i] += l;
                row_l[j] += l;
                row_q[i] += q;
                row_q[j] += q;
                p += 1;
            }
        }
        self.assemble(&row_l, &row_q, norm_q)
    }

    /// LOOCV score for a shared diagonal covariance.
    pub(crate) fn objective_diagonal(&self, e: &[S]) -> S {
        let t2 = self.theta2;
        let half = S::cast(0.5);
        let mut log_norm_l = S::zero();
        let mut log_norm_q = S::zero();
        let mut inv_l = Vec::with_capacity(self.d);
        let mut inv_q = Vec::with_capacity(self.d);
        for &ek in e {
            let dl = ek + t2;
            let dq = ek + ek + t2;
            log_norm_l += t2.ln() - dl.ln();
            log_norm_q += t2.ln() - dq.ln();
            inv_l.push(S::one() / dl);
            inv_q.push(S::one() / dq);
        }
        let norm_l = (log_norm_l * half).exp();
        let norm_q = (log_norm_q * half).exp();

        let mut row_l = vec![S::zero(); self.n];
        let mut row_q = vec![S::zero(); self.n];
        let mut p = 0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let sq = &self.pair_dim_sqdiff[p * self.d..(p + 1) * self.d];
                let mut quad_l = S::zero();
                let mut quad_q = S::zero();
                for k in 0..self.d {
                    quad_l += sq[k] * inv_l[k];
                    quad_q += sq[k] * inv_q[k];
                }
                let l = norm_l * (-quad_l * half).exp();
                let q = norm_q * (-quad_q * half).exp();
                row_l[i] += l;
                row_l[j] += l;
                row_q[i] += q;
                row_q[j] += q;
                p += 1;
            }
        }
        self.assemble(&row_l, &row_q, norm_q)
    }

    /// Combines per-row off-diagonal sums of L and Q into the score. For the
    /// RBF kernel every `k(x_i, x_i)` equals one.
    fn assemble(&self, row_l_off: &[S], row_q_off: &[S], norm_q: S) -> S {
        let n = self.n;
        let nm1 = S::from_count(n - 1);
        let two = S::cast(2.0);
        let mut total_q = S::from_count(n) * norm_q;
        for r in row_q_off {
            total_q += *r;
        }
        let mut acc = S::zero();
        for i in 0..n {
            let cross = row_l_off[i];
            let held_out_q = total_q - two * (row_q_off[i] + norm_q) + norm_q;
            acc += S::one() - two / nm1 * cross + held_out_q / (nm1 * nm1);
        }
        acc / S::from_count(n)
    }

    pub(crate) fn objective(&self, cov: &CorruptionModel<S>) -> Result<S> {
        cov.validate(self.d)?;
        Ok(match cov {
            CorruptionModel::Dirac => self.objective_isotropic(S::zero()),
            CorruptionModel::Isotropic(s) => self.objective_isotropic(*s),
            CorruptionModel::Diagonal(e) => self.objective_diagonal(e),
        })
    }
}

/// Cross-validation score of one shared corruption covariance.
pub fn loocv_objective<S: Scalar>(
    xs: &DataMatrix<S>,
    bw: Bandwidth<S>,
    cov: &CorruptionModel<S>,
) -> Result<S> {
    LoocvContext::new(xs, bw)?.objective(cov)
}

/// Default search interval for the isotropic variance. Beyond ten kernel
/// scales every marginalized kernel is nearly constant and the objective
/// degenerates.
pub fn default_isotropic_bounds<S: Scalar>(bw: Bandwidth<S>) -> (S, S) {
    (S::zero(), S::cast(10.0) * bw.theta2())
}

/// Minimizes the LOOCV score over `sigma2` in `[lo, hi]` by bounded scalar
/// search. Ties resolve to the smaller variance.
pub fn select_isotropic<S: Scalar>(
    xs: &DataMatrix<S>,
    bw: Bandwidth<S>,
    bounds: (S, S),
) -> Result<LoocvScore<S>> {
    let (lo, hi) = bounds;
    if !lo.is_finite() || lo < S::zero() {
        return Err(Error::InvalidParameter(format!("negative lower bound {lo}")));
    }
    let ctx = LoocvContext::new(xs, bw)?;
    let bracket = ScalarBracket::new(lo, hi, S::cast(1e-6) * (hi - lo), 200)?;
    let min = minimize_scalar(|s| ctx.objective_isotropic(s), bracket)?;
    Ok(LoocvScore {
        value: min.value,
        cov: CorruptionModel::Isotropic(min.x),
        evaluations: min.evaluations,
    })
}

const LOG_VARIANCE_FLOOR: f64 = 1e-12;

/// Minimizes the LOOCV score over a diagonal covariance by Nelder-Mead in
/// log-variance space, starting from `init` (which must be strictly
/// positive). The budget is `500 * d` objective calls.
pub fn select_diagonal<S: Scalar>(
    xs: &DataMatrix<S>,
    bw: Bandwidth<S>,
    init: &[S],
) -> Result<LoocvScore<S>> {
    let ctx = LoocvContext::new(xs, bw)?;
    let d = xs.dim();
    if init.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: init.len() });
    }
    if init.iter().any(|v| !v.is_finite() || *v <= S::zero()) {
        return Err(Error::InvalidParameter(
            "diagonal init must be strictly positive".into(),
        ));
    }
    let floor = S::cast(LOG_VARIANCE_FLOOR);
    let to_vars = |u: &[S]| -> Vec<S> { u.iter().map(|x| x.exp().max(floor)).collect() };
    let u0: Vec<S> = init.iter().map(|v| v.ln()).collect();
    if !ctx.objective_diagonal(&to_vars(&u0)).is_finite() {
        return Err(Error::NonFiniteObjective("diagonal init".into()));
    }
    let opts = NelderMeadOptions {
        init_step: S::cast(0.25),
        tol: S::cast(1e-8),
        max_evals: 500 * d,
    };
    let res = nelder_mead(|u| ctx.objective_diagonal(&to_vars(u)), &u0, opts)?;
    Ok(LoocvScore {
        value: res.value,
        cov: CorruptionModel::Diagonal(to_vars(&res.x)),
        evaluations: res.evaluations,
    })
}

/// Diagonal search seeded at the isotropic optimum, so the result can never
/// score worse than the isotropic one (the families are nested).
pub fn select_diagonal_default<S: Scalar>(
    xs: &DataMatrix<S>,
    bw: Bandwidth<S>,
) -> Result<LoocvScore<S>> {
    let iso = select_isotropic(xs, bw, default_isotropic_bounds(bw))?;
    let sigma2 = match iso.cov {
        CorruptionModel::Isotropic(s) => s,
        _ => unreachable!(),
    };
    let floor = S::cast(LOG_VARIANCE_FLOOR);
    let init = vec![sigma2.max(floor); xs.dim()];
    select_diagonal(xs, bw, &init)
}
