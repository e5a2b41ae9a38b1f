use nugget_gp::exact_exponential::{linear_model_profile_loglik, EquidistantSpec};
use nugget_gp::likelihood::{find_modes, profile_loglik_slope};
use nugget_gp::simulation::{run_study, AmplitudeConvention, SimConfig};
use nugget_gp::{
    fit_mle, profile_loglik, scan_profile, Dataset, Emulator, Family, FitOptions, FitStatus, Model, PointFlag,
};
use proptest::prelude::*;

fn sorted_points(raw: Vec<f64>) -> Vec<f64> {
    let mut p = raw;
    p.sort_by(f64::total_cmp);
    p.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    p
}

#[test]
fn exponential_profile_tracks_closed_form_on_grid() {
    let d = Model::Linear.dataset(15).unwrap();
    let p = scan_profile(&d, Family::Exponential, 0.0, 0.05, 50.0, 64).unwrap();
    // the two differ only by the mean term, which vanishes for this model
    let offsets: Vec<f64> = p
        .grid
        .iter()
        .zip(&p.values)
        .map(|(&psi, &l)| l - linear_model_profile_loglik(&EquidistantSpec::new(15, psi).unwrap()).unwrap())
        .collect();
    for o in &offsets {
        assert!((o - offsets[0]).abs() < 1e-9, "{o} vs {}", offsets[0]);
    }
}

#[test]
fn fit_then_predict_round_trip() {
    let d = Model::Sin.dataset(12).unwrap();
    let fit = fit_mle(&d, Family::Gaussian, 0.01, &FitOptions::default()).unwrap();
    assert_eq!(fit.status, FitStatus::Interior);
    let e = Emulator::from_fit(d.clone(), &fit).unwrap();
    for x in [0.04, 0.5, 0.77] {
        assert!((e.predict_interpolating(x) - Model::Sin.eval(x)).abs() < 0.05, "x={x}");
    }
}

#[test]
fn gaussian_scan_marks_unreliable_tail() {
    let d = Model::Sin.dataset(15).unwrap();
    let p = scan_profile(&d, Family::Gaussian, 0.0, 1e-3, 1e4, 200).unwrap();
    let first_bad = p.flags.iter().position(|&f| f == PointFlag::NotPd).expect("large psi is unusable");
    assert!(p.flags[first_bad..].iter().all(|&f| f == PointFlag::NotPd));
    // a nugget makes every point usable
    let p = scan_profile(&d, Family::Gaussian, 0.01, 1e-3, 1e4, 200).unwrap();
    assert!(p.flags.iter().all(|&f| f == PointFlag::Ok));
}

#[test]
fn modes_are_stationary_points() {
    let d = Model::Sin.dataset(7).unwrap();
    let p = scan_profile(&d, Family::Gaussian, 0.001, 1e-3, 1e4, 400).unwrap();
    let modes = find_modes(&d, &p);
    assert!(modes.len() >= 2);
    for m in modes {
        let s = profile_loglik_slope(&d, Family::Gaussian, 0.001, m.psi).unwrap();
        assert!(s.abs() < 1e-6, "slope {s} at {}", m.psi);
    }
}

#[test]
fn small_study_is_reproducible_across_runs() {
    let cfg = SimConfig::table1(0.01, 12, 5, AmplitudeConvention::StdDev);
    assert_eq!(run_study(&cfg).unwrap(), run_study(&cfg).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn profile_shifts_by_log_scale(raw in prop::collection::vec(0.0..1.0f64, 4..10), c in 0.1..20.0f64, psi in 0.01..2.0f64) {
        let pts = sorted_points(raw);
        prop_assume!(pts.len() >= 3);
        let y: Vec<f64> = pts.iter().map(|x| (5.0 * x).cos() + x).collect();
        let d = Dataset::new(pts, y).unwrap();
        let n = d.len() as f64;
        let a = profile_loglik(&d, Family::Exponential, 0.02, psi).unwrap();
        let b = profile_loglik(&d.map_y(|v| c * v + 3.0).unwrap(), Family::Exponential, 0.02, psi).unwrap();
        prop_assert!((b.loglik - (a.loglik - n * c.ln())).abs() <= 1e-9 * a.loglik.abs().max(1.0));
    }

    #[test]
    fn interpolating_model_hits_data(raw in prop::collection::vec(0.0..1.0f64, 3..12), nu in 0.0..0.3f64, psi in 0.01..1.0f64) {
        let pts = sorted_points(raw);
        prop_assume!(pts.len() >= 2);
        let y: Vec<f64> = pts.iter().map(|x| (7.0 * x).sin()).collect();
        let d = Dataset::new(pts, y).unwrap();
        let e = Emulator::new(d.clone(), nugget_gp::KernelSpec::new(Family::Exponential, psi, nu).unwrap(), 0.1).unwrap();
        for (&x, &y) in d.points().iter().zip(d.y()) {
            prop_assert!((e.predict_interpolating(x) - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn fitted_variance_is_positive(raw in prop::collection::vec(0.0..1.0f64, 4..12), seed in 0u64..1000) {
        let pts = sorted_points(raw);
        prop_assume!(pts.len() >= 3);
        let y: Vec<f64> = pts.iter().enumerate().map(|(i, x)| x * x + ((seed + i as u64) % 7) as f64 * 0.1).collect();
        let d = Dataset::new(pts, y).unwrap();
        prop_assume!(!d.is_constant());
        let fit = fit_mle(&d, Family::Gaussian, 0.01, &FitOptions::default()).unwrap();
        prop_assert!(fit.sigma2_hat > 0.0 && fit.psi_hat > 0.0);
        prop_assert!(fit.cond_at_psi_hat.value >= 1.0);
    }
}
