use proptest::prelude::*;

use heraldkit::fock::{herald_fock, BeamSplitterFock, TwoModeState};
use heraldkit::gaussian::{beamsplitter_matrix, input_covariance, loss_channel, propagate};
use heraldkit::heralding::output_squeezing;
use heraldkit::tomography::{mle_reconstruct, synthesize_homodyne, MleOptions};
use heraldkit::tradeoff::{
    best_tradeoff_w, constraint_residual, gps_point, w00_via_s, Branch, TradeoffPoint,
};
use heraldkit::{
    herald_onoff, Detector, FockDensityMatrix, HeraldSpec, LossBudget, Mode, PhaseGrid,
    SqueezingParameter,
};

fn sq(r: f64) -> SqueezingParameter {
    SqueezingParameter(r)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn beamsplitter_covariance_stays_physical(r1 in -1.5..1.5f64, r2 in -1.5..1.5f64, t in 0.0..=1.0f64) {
        let v = propagate(&input_covariance(sq(r1), sq(r2)), &beamsplitter_matrix(t).unwrap());
        prop_assert!(v.is_physical(1e-9));
        prop_assert!((v.determinant() - 1.0 / 16.0).abs() < 1e-9);
    }

    #[test]
    fn loss_keeps_covariance_physical(r in -1.5..1.5f64, t in 0.0..=1.0f64, l in 0.0..=1.0f64) {
        let v = propagate(&input_covariance(sq(r), sq(-r)), &beamsplitter_matrix(t).unwrap());
        let lossy = loss_channel(&v, Mode::Trigger, l).unwrap();
        prop_assert!(lossy.is_physical(1e-9));
    }

    #[test]
    fn click_probability_and_quality_bounds(
        r1 in -1.0..1.0f64, r2 in -1.0..1.0f64, t in 0.05..0.95f64,
        lt in 0.0..0.95f64, ls in 0.0..0.9f64, f in 0.0..0.2f64,
    ) {
        let spec = HeraldSpec::onoff(r1, r2, t).unwrap()
            .with_losses(LossBudget::new(lt, ls, f).unwrap()).unwrap();
        let Ok(out) = herald_onoff(&spec) else { return Ok(()) };
        prop_assert!(out.p_on > 0.0 && out.p_on < 1.0);
        prop_assert!((out.mixture.weight_sum() - 1.0).abs() < 1e-9);
        // no state beats the single-photon minimum
        prop_assert!(out.mixture.evaluate(0.0, 0.0) >= -1.0 / std::f64::consts::PI - 1e-12);
    }

    #[test]
    fn gps_curve_dominates_forward_points(r1 in 0.05..1.0f64, r2 in -1.0..0.0f64, t in 0.05..0.98f64) {
        let pt = TradeoffPoint::lossless(r1, r2, t).unwrap();
        prop_assert!(pt.w00 >= best_tradeoff_w(pt.p_on) - 1e-12);
    }

    #[test]
    fn optimal_family_closes_the_constraint(db in 0.3..5.0f64, p in 1e-4..0.5f64) {
        let r = SqueezingParameter::from_db(db).unwrap();
        let pt = gps_point(r, p, Branch::Primary).unwrap();
        prop_assert!((pt.s - 1.0).abs() < 1e-9);
        prop_assert!((pt.p_on - p).abs() < 1e-9);
        let (res, _) = constraint_residual(pt.r1, pt.r2, r, p);
        prop_assert!(res.abs() < 1e-9);
        let out = output_squeezing(pt.r1, pt.r2, pt.t).unwrap();
        prop_assert!((out.r() - r.r()).abs() < 1e-9);
    }

    #[test]
    fn quality_is_symmetric_in_s(p_off in 0.5..0.999f64, ls in -0.2..0.2f64) {
        let s = ls.exp();
        let (a, b) = (w00_via_s(p_off, s), w00_via_s(p_off, 1.0 / s));
        if let (Ok(a), Ok(b)) = (a, b) {
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!(a >= w00_via_s(p_off, 1.0).unwrap() - 1e-15);
        }
    }

    #[test]
    fn mirrored_branch_is_the_same_state(r1 in 0.05..0.8f64, r2 in -0.8..0.0f64, t in 0.05..0.95f64) {
        let a = herald_onoff(&HeraldSpec::onoff(r1, r2, t).unwrap()).unwrap();
        let b = herald_onoff(&HeraldSpec::onoff(r2, r1, 1.0 - t).unwrap()).unwrap();
        prop_assert!((a.p_on - b.p_on).abs() < 1e-12);
        let grid = PhaseGrid::new(4.0, 21).unwrap();
        prop_assert!(a.mixture.to_grid(&grid).max_abs_diff(&b.mixture.to_grid(&grid)).unwrap() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn fock_beamsplitter_preserves_trace(r1 in -0.5..0.5f64, r2 in -0.5..0.5f64, t in 0.0..=1.0f64) {
        let bs = BeamSplitterFock::new(t, 20).unwrap();
        prop_assert!(bs.unitarity_error() < 1e-10);
        let state = TwoModeState::squeezed_inputs(sq(r1), sq(r2), t, 32).unwrap();
        prop_assert!((state.trace() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn heralded_density_is_a_state(
        r1 in -0.5..0.5f64, r2 in -0.5..0.5f64, t in 0.1..0.9f64,
        lt in 0.0..0.9f64, ls in 0.0..0.9f64,
    ) {
        let state = TwoModeState::squeezed_inputs(sq(r1), sq(r2), t, 24).unwrap();
        let Ok((rho, p)) = herald_fock(&state, Detector::OnOff, LossBudget::new(lt, ls, 0.05).unwrap()) else {
            return Ok(());
        };
        prop_assert!(p > 0.0 && p < 1.0);
        prop_assert!((rho.trace() - 1.0).abs() < 1e-9);
        prop_assert!(FockDensityMatrix::new(rho.matrix().clone()).is_ok());
    }

    #[test]
    fn mle_likelihood_is_monotone(seed in 0u64..1000) {
        let psi = heraldkit::fock::squeezed_single_photon_fock(sq(0.2), 24).unwrap();
        let rho = FockDensityMatrix::from_pure(&psi).unwrap();
        let data = synthesize_homodyne(&rho, &[0.0, 1.0, 2.0], 300, seed).unwrap();
        let opts = MleOptions { truncation: 6, max_iter: 60, ..MleOptions::default() };
        let rec = mle_reconstruct(&data, &opts).unwrap();
        prop_assert!(rec.log_likelihood.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!((rec.rho.trace() - 1.0).abs() < 1e-9);
    }
}
