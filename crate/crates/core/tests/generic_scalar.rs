//! The numeric stack instantiated at single precision, end to end.

use kme_core::covariance::{default_isotropic_bounds, select_isotropic};
use kme_core::data::DataMatrix;
use kme_core::density::{kmeans, match_mixture, nll};
use kme_core::estimators::{fit, fit_kme, EstimatorKind};
use kme_core::hsic::{hsic_statistic, PairedSample};
use kme_core::kernels::{median_heuristic, CorruptionModel};
use kme_core::mmd::mmd2_unbiased;
use kme_core::rng::{standard_normal, substream};
use kme_core::synth::{loss_against_mog, sample_mog, sample_mog_spec};

fn sample_f32(n: usize, d: usize, seed: u64) -> DataMatrix<f32> {
    let mut r = substream(seed, "f32/data", 0);
    let rows: Vec<Vec<f32>> = (0..n)
        .map(|_| (0..d).map(|_| standard_normal::<f32>(&mut r)).collect())
        .collect();
    DataMatrix::from_rows(&rows).unwrap()
}

#[test]
fn single_precision_pipeline_runs() {
    let xs = sample_f32(20, 2, 1);
    let bw = median_heuristic(&xs).unwrap();

    let kme = fit_kme(&xs, bw).unwrap();
    assert!((kme.evaluate_at(&[0.0f32, 0.0]).unwrap()).is_finite());

    let sel = select_isotropic(&xs, bw, default_isotropic_bounds(bw)).unwrap();
    assert!(sel.value.is_finite());

    let mkme = fit(&EstimatorKind::<f32>::Mkme, &xs, bw).unwrap();
    assert!(mkme.inner_product(&kme).unwrap().is_finite());

    let ys = sample_f32(20, 2, 2);
    let stat = mmd2_unbiased(&xs, &ys, bw).unwrap();
    assert!(stat.is_finite());

    let pair = PairedSample::new(xs.clone(), ys.clone()).unwrap();
    let h = hsic_statistic(
        &pair,
        bw,
        median_heuristic(&ys).unwrap(),
        &CorruptionModel::Dirac,
        &CorruptionModel::Dirac,
    )
    .unwrap();
    assert!(h >= -1e-6);

    let protos = kmeans(&xs, 3, 50, 7).unwrap();
    let matched = match_mixture(&kme, &protos).unwrap();
    let score = nll(&matched, &ys).unwrap();
    assert!(score.is_finite());
}

#[test]
fn single_precision_tracks_double_precision() {
    // the same seeded draws narrow to f32, so the two pipelines see the
    // same data up to rounding
    let xs32 = sample_f32(15, 1, 3);
    let rows64: Vec<Vec<f64>> = (0..15).map(|i| vec![xs32.get(i, 0) as f64]).collect();
    let xs64 = DataMatrix::<f64>::from_rows(&rows64).unwrap();

    let bw32 = median_heuristic(&xs32).unwrap();
    let bw64 = median_heuristic(&xs64).unwrap();
    assert!((bw32.theta2() as f64 - bw64.theta2()).abs() < 1e-5);

    let e32 = fit_kme(&xs32, bw32).unwrap();
    let e64 = fit_kme(&xs64, bw64).unwrap();
    let v32 = e32.evaluate_at(&[0.25f32]).unwrap() as f64;
    let v64 = e64.evaluate_at(&[0.25f64]).unwrap();
    assert!((v32 - v64).abs() < 1e-5, "{v32} vs {v64}");
}

#[test]
fn synthetic_oracle_runs_in_single_precision() {
    let spec = sample_mog_spec::<f32>(2, 11).unwrap();
    let xs = sample_mog(&spec, 25, 12).unwrap();
    let bw = median_heuristic(&xs).unwrap();
    let est = fit_kme(&xs, bw).unwrap();
    let loss = loss_against_mog(&est, &spec).unwrap();
    assert!(loss.is_finite());
    assert!(loss > -1e-3);
}
