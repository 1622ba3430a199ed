//! Derivative-free optimization primitives: bounded scalar minimization,
//! Nelder-Mead, and Euclidean projection onto the probability simplex.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Search interval and budget for [`minimize_scalar`].
#[derive(Debug, Clone, Copy)]
pub struct ScalarBracket<S> {
    pub lo: S,
    pub hi: S,
    /// Absolute tolerance on the minimizer location.
    pub tol: S,
    pub max_evals: usize,
}

impl<S: Scalar> ScalarBracket<S> {
    pub fn new(lo: S, hi: S, tol: S, max_evals: usize) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(Error::InvalidParameter(format!("bracket [{lo}, {hi}]")));
        }
        if !tol.is_finite() || tol <= S::zero() {
            return Err(Error::InvalidParameter(format!("tolerance {tol}")));
        }
        if max_evals < 3 {
            return Err(Error::InvalidParameter("need at least 3 evaluations".into()));
        }
        Ok(Self { lo, hi, tol, max_evals })
    }
}

/// Result of a scalar or simplex search.
#[derive(Debug, Clone)]
pub struct ScalarMinimum<S> {
    pub x: S,
    pub value: S,
    pub evaluations: usize,
}

struct Tracker<S> {
    best_x: S,
    best_f: S,
    evals: usize,
}

impl<S: Scalar> Tracker<S> {
    fn observe(&mut self, x: S, f: S) {
        self.evals += 1;
        // ties resolve to the smaller argument
        if f < self.best_f || (f == self.best_f && x < self.best_x) {
            self.best_f = f;
            self.best_x = x;
        }
    }
}

/// Bounded scalar minimization by golden-section steps with parabolic
/// acceleration. Both endpoints are evaluated, so a monotone objective
/// returns the matching boundary. Never evaluates outside `[lo, hi]`.
pub fn minimize_scalar<S, F>(mut f: F, bracket: ScalarBracket<S>) -> Result<ScalarMinimum<S>>
where
    S: Scalar,
    F: FnMut(S) -> S,
{
    let ScalarBracket { lo, hi, tol, max_evals } = bracket;
    let mut eval = |x: S, t: &mut Tracker<S>| -> Result<S> {
        let v = f(x);
        if !v.is_finite() {
            return Err(Error::NonFiniteObjective(format!("{x}")));
        }
        t.observe(x, v);
        Ok(v)
    };

    let mut tracker = Tracker { best_x: hi, best_f: S::infinity(), evals: 0 };
    eval(lo, &mut tracker)?;
    eval(hi, &mut tracker)?;

    // Brent's method on the open interval.
    let golden = S::cast(0.381_966_011_250_105_2);
    let eps = S::cast(1e-15);
    let two = S::cast(2.0);
    let half = S::cast(0.5);

    let mut a = lo;
    let mut b = hi;
    let mut x = a + golden * (b - a);
    let mut w = x;
    let mut v = x;
    let mut fx = eval(x, &mut tracker)?;
    let mut fw = fx;
    let mut fv = fx;
    let mut d = S::zero();
    let mut e = S::zero();

    while tracker.evals < max_evals {
        let m = half * (a + b);
        let tol1 = tol * x.abs() + eps + tol;
        let tol2 = two * tol1;
        if (x - m).abs() <= tol2 - half * (b - a) {
            break;
        }

        let mut use_golden = true;
        if e.abs() > tol1 {
            // try a parabolic step through (v, w, x)
            let r = (x - w) * (fx - fv);
            let q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            let mut q2 = two * (q - r);
            if q2 > S::zero() {
                p = -p;
            } else {
                q2 = -q2;
            }
            let e_prev = e;
            e = d;
            if p.abs() < (half * q2 * e_prev).abs()
                && p > q2 * (a - x)
                && p < q2 * (b - x)
            {
                d = p / q2;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if x < m { tol1 } else { -tol1 };
                }
                use_golden = false;
            }
        }
        if use_golden {
            e = if x < m { b - x } else { a - x };
            d = golden * e;
        }

        let u = if d.abs() >= tol1 {
            x + d
        } else if d >= S::zero() {
            x + tol1
        } else {
            x - tol1
        };
        let u = u.clamp(a, b);
        let fu = eval(u, &mut tracker)?;

        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u >= x {
                b = u;
            } else {
                a = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }

    Ok(ScalarMinimum { x: tracker.best_x, value: tracker.best_f, evaluations: tracker.evals })
}

/// Options for [`nelder_mead`].
#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions<S> {
    /// Additive step used to build the initial simplex around the start point.
    pub init_step: S,
    /// Stop when the objective spread over the simplex falls below this.
    pub tol: S,
    pub max_evals: usize,
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult<S> {
    pub x: Vec<S>,
    pub value: S,
    pub evaluations: usize,
}

/// Nelder-Mead simplex search with the standard coefficients
/// (reflect 1, expand 2, contract 0.5, shrink 0.5). Ties are broken by
/// vertex order, so the trajectory is deterministic.
pub fn nelder_mead<S, F>(
    mut f: F,
    init: &[S],
    opts: NelderMeadOptions<S>,
) -> Result<NelderMeadResult<S>>
where
    S: Scalar,
    F: FnMut(&[S]) -> S,
{
    let p = init.len();
    if p == 0 {
        return Err(Error::InvalidParameter("empty start point".into()));
    }
    let mut evals = 0usize;
    let mut eval = |x: &[S], evals: &mut usize| -> S {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            S::infinity()
        }
    };

    let mut simplex: Vec<Vec<S>> = Vec::with_capacity(p + 1);
    simplex.push(init.to_vec());
    for i in 0..p {
        let mut v = init.to_vec();
        v[i] += opts.init_step;
        simplex.push(v);
    }
    let mut values: Vec<S> = simplex.iter().map(|v| eval(v, &mut evals)).collect();
    if !values[0].is_finite() {
        return Err(Error::NonFiniteObjective("initial point".into()));
    }

    let reflect = S::cast(1.0);
    let expand = S::cast(2.0);
    let contract = S::cast(0.5);
    let shrink = S::cast(0.5);

    loop {
        // stable sort keeps earlier vertices first on ties
        let mut order: Vec<usize> = (0..=p).collect();
        order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
        let reordered: Vec<Vec<S>> = order.iter().map(|&i| simplex[i].clone()).collect();
        let revalues: Vec<S> = order.iter().map(|&i| values[i]).collect();
        simplex = reordered;
        values = revalues;

        let spread = values[p] - values[0];
        if spread.abs() < opts.tol || evals >= opts.max_evals {
            break;
        }

        let mut centroid = vec![S::zero(); p];
        for vertex in simplex.iter().take(p) {
            for (c, v) in centroid.iter_mut().zip(vertex.iter()) {
                *c += *v;
            }
        }
        let inv = S::one() / S::from_count(p);
        centroid.iter_mut().for_each(|c| *c *= inv);

        let worst = simplex[p].clone();
        let xr: Vec<S> = centroid
            .iter()
            .zip(worst.iter())
            .map(|(c, w)| *c + reflect * (*c - *w))
            .collect();
        let fr = eval(&xr, &mut evals);

        if fr < values[0] {
            let xe: Vec<S> = centroid
                .iter()
                .zip(worst.iter())
                .map(|(c, w)| *c + expand * (*c - *w))
                .collect();
            let fe = eval(&xe, &mut evals);
            if fe < fr {
                simplex[p] = xe;
                values[p] = fe;
            } else {
                simplex[p] = xr;
                values[p] = fr;
            }
        } else if fr < values[p - 1] {
            simplex[p] = xr;
            values[p] = fr;
        } else if fr < values[p] {
            // outside contraction
            let xc: Vec<S> = centroid
                .iter()
                .zip(xr.iter())
                .map(|(c, r)| *c + contract * (*r - *c))
                .collect();
            let fc = eval(&xc, &mut evals);
            if fc <= fr {
                simplex[p] = xc;
                values[p] = fc;
            } else {
                shrink_simplex(&mut simplex, &mut values, shrink, &mut eval, &mut evals);
            }
        } else {
            // inside contraction
            let xc: Vec<S> = centroid
                .iter()
                .zip(worst.iter())
                .map(|(c, w)| *c - contract * (*c - *w))
                .collect();
            let fc = eval(&xc, &mut evals);
            if fc < values[p] {
                simplex[p] = xc;
                values[p] = fc;
            } else {
                shrink_simplex(&mut simplex, &mut values, shrink, &mut eval, &mut evals);
            }
        }
    }

    let mut best = 0;
    for i in 1..=p {
        if values[i] < values[best] {
            best = i;
        }
    }
    Ok(NelderMeadResult { x: simplex[best].clone(), value: values[best], evaluations: evals })
}

fn shrink_simplex<S: Scalar>(
    simplex: &mut [Vec<S>],
    values: &mut [S],
    shrink: S,
    eval: &mut impl FnMut(&[S], &mut usize) -> S,
    evals: &mut usize,
) {
    let best = simplex[0].clone();
    for i in 1..simplex.len() {
        for (v, b) in simplex[i].iter_mut().zip(best.iter()) {
            *v = *b + shrink * (*v - *b);
        }
        values[i] = eval(&simplex[i], evals);
    }
}

/// Euclidean projection onto `{a : a_i >= 0, sum a = 1}` by the
/// sort-and-threshold rule. Idempotent.
pub fn project_simplex<S: Scalar>(v: &[S]) -> Vec<S> {
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = S::zero();
    let mut tau = S::zero();
    let mut found = false;
    for (k, u) in sorted.iter().enumerate() {
        cumsum += *u;
        let t = (cumsum - S::one()) / S::from_count(k + 1);
        if *u - t > S::zero() {
            tau = t;
            found = true;
        } else {
            break;
        }
    }
    if !found {
        // all mass on the largest coordinate
        tau = sorted[0] - S::one();
    }
    v.iter().map(|u| (*u - tau).max(S::zero())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bracket(lo: f64, hi: f64) -> ScalarBracket<f64> {
        ScalarBracket::new(lo, hi, 1e-8, 200).unwrap()
    }

    #[test]
    fn quadratic_minimum_found() {
        let r = minimize_scalar(|x| (x - 2.0) * (x - 2.0), bracket(0.0, 5.0)).unwrap();
        assert!((r.x - 2.0).abs() < 1e-6);
        assert!(r.evaluations <= 200);
    }

    #[test]
    fn monotone_objective_returns_boundary() {
        let r = minimize_scalar(|x| x, bracket(0.0, 1.0)).unwrap();
        assert_eq!(r.x, 0.0);
    }

    #[test]
    fn constant_objective_returns_lower_bound() {
        let r = minimize_scalar(|_| 3.5, bracket(0.25, 2.0)).unwrap();
        assert_eq!(r.x, 0.25);
    }

    #[test]
    fn nonsmooth_objective_converges() {
        let b = ScalarBracket::new(0.0, 1.0, 1e-7, 200).unwrap();
        let r = minimize_scalar(|x: f64| (x - 0.3).abs(), b).unwrap();
        assert!((r.x - 0.3).abs() < 1e-5);
    }

    #[test]
    fn non_finite_objective_is_reported() {
        let r = minimize_scalar(
            |x: f64| if x > 0.5 { f64::NAN } else { x },
            bracket(0.0, 1.0),
        );
        assert!(matches!(r, Err(Error::NonFiniteObjective(_))));
    }

    #[test]
    fn invalid_brackets_are_rejected() {
        assert!(ScalarBracket::new(0.0, 0.0, 1e-6, 100).is_err());
        assert!(ScalarBracket::new(1.0, 0.0, 1e-6, 100).is_err());
        assert!(ScalarBracket::new(0.0, 1.0, 0.0, 100).is_err());
    }

    #[test]
    fn nelder_mead_minimizes_sphere() {
        let opts = NelderMeadOptions { init_step: 0.5, tol: 1e-12, max_evals: 4000 };
        let r = nelder_mead(
            |x: &[f64]| x.iter().map(|v| v * v).sum(),
            &[1.0, -2.0, 0.5],
            opts,
        )
        .unwrap();
        let norm: f64 = r.x.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm < 1e-4, "norm = {norm}");
    }

    #[test]
    fn nelder_mead_solves_rosenbrock() {
        let opts = NelderMeadOptions { init_step: 0.5, tol: 1e-12, max_evals: 2000 };
        let rosen = |x: &[f64]| {
            let a = 1.0 - x[0];
            let b = x[1] - x[0] * x[0];
            a * a + 100.0 * b * b
        };
        let r = nelder_mead(rosen, &[-1.2, 1.0], opts).unwrap();
        assert!(r.value < 1e-6, "f* = {}", r.value);
        assert!(r.evaluations <= 2000);
    }

    #[test]
    fn nelder_mead_constant_returns_start() {
        let opts = NelderMeadOptions { init_step: 0.25, tol: 1e-10, max_evals: 100 };
        let r = nelder_mead(|_: &[f64]| 7.0, &[0.3, 0.4], opts).unwrap();
        assert_eq!(r.value, 7.0);
        assert_eq!(r.x, vec![0.3, 0.4]);
    }

    #[test]
    fn nelder_mead_best_value_never_increases() {
        let mut trace: Vec<f64> = Vec::new();
        let opts = NelderMeadOptions { init_step: 0.7, tol: 1e-10, max_evals: 500 };
        let _ = nelder_mead(
            |x: &[f64]| {
                let v = (x[0] - 1.0).powi(2) + (x[1] + 2.0).powi(2) * 3.0;
                trace.push(v);
                v
            },
            &[4.0, 4.0],
            opts,
        )
        .unwrap();
        let mut best = f64::INFINITY;
        let mut bests = Vec::new();
        for v in trace {
            best = best.min(v);
            bests.push(best);
        }
        assert!(bests.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn simplex_projection_hand_cases() {
        assert_eq!(project_simplex(&[1.0, 0.0]), vec![1.0, 0.0]);
        assert_eq!(project_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
        let p = project_simplex(&[0.4f64, 0.4, 0.4]);
        for v in &p {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn simplex_projection_matches_grid_search() {
        // dense grid over the 2-simplex edge
        let targets = [[0.9, -0.3], [0.1, 0.5], [-2.0, -1.0], [0.6, 0.6]];
        for t in targets {
            let p = project_simplex(&t);
            let dist =
                |a: &[f64]| (a[0] - t[0]).powi(2) + (a[1] - t[1]).powi(2);
            let best_grid = (0..=10_000)
                .map(|i| {
                    let a = i as f64 / 10_000.0;
                    dist(&[a, 1.0 - a])
                })
                .fold(f64::INFINITY, f64::min);
            assert!(dist(&p) <= best_grid + 1e-7);
        }
    }

    proptest! {
        #[test]
        fn scalar_search_stays_inside_bracket(
            lo in -5.0f64..0.0,
            width in 0.1f64..10.0,
            center in -6.0f64..6.0,
        ) {
            let hi = lo + width;
            let b = ScalarBracket::new(lo, hi, 1e-6, 100).unwrap();
            let r = minimize_scalar(
                |x| {
                    assert!(x >= lo && x <= hi, "evaluated outside bracket");
                    (x - center) * (x - center)
                },
                b,
            )
            .unwrap();
            prop_assert!(r.x >= lo && r.x <= hi);
        }

        #[test]
        fn simplex_projection_is_valid_and_idempotent(
            v in proptest::collection::vec(-3.0f64..3.0, 1..6),
        ) {
            let p = project_simplex(&v);
            let total: f64 = p.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            prop_assert!(p.iter().all(|x| *x >= 0.0));
            let q = project_simplex(&p);
            for (a, b) in p.iter().zip(q.iter()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
