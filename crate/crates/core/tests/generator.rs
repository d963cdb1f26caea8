use std::f64::consts::PI;

use fiberqrng_core::generator::*;
use fiberqrng_core::modes::{ModeBasis, SpatialQubit};
use fiberqrng_core::StreamRng;
use num_complex::Complex64;
use proptest::prelude::*;

#[test]
fn splitting_ratio_is_conserved() {
    let mut rng = StreamRng::new(5, 0, 0);
    for _ in 0..10_000 {
        let phi = 40.0 * (rng.uniform() - 0.5);
        let p = sagnac_amplitudes(phi).port_powers();
        assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
        // |alpha|² = sin²(phi / 2).
        assert!((p[0] - (phi / 2.0).sin().powi(2)).abs() < 1e-12);
    }
}

#[test]
fn amplitudes_are_two_pi_periodic() {
    for k in 0..50 {
        let phi = 0.37 * k as f64;
        let (a, b) = (sagnac_amplitudes(phi), sagnac_amplitudes(phi + 2.0 * PI));
        assert!((a.alpha - b.alpha).norm() < 1e-12 && (a.beta - b.beta).norm() < 1e-12);
    }
}

/// Last sample before the drive switches off, where the rise has settled.
fn plateau(wf: &SwitchWaveform) -> [f64; 2] {
    let t_off = 0.5 * (120.0 + 45.0);
    let k = wf.t_ns.iter().rposition(|&t| t < t_off).unwrap();
    wf.port_powers[k]
}

#[test]
fn measured_edges_match_configuration() {
    let pulse = PulseSpec::default();
    let wf = switch_waveform(&DriveSpec::default(), &pulse).unwrap();
    let e = wf.measure_edges().unwrap();
    assert!((e.rise_ns - 5.2).abs() <= pulse.sample_period_ns, "rise {}", e.rise_ns);
    assert!((e.fall_ns - 2.4).abs() <= pulse.sample_period_ns, "fall {}", e.fall_ns);
    for p in &wf.port_powers {
        assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
    }
    // Idle routes to port 0, the drive pulse to port 1.
    assert!((wf.port_powers[0][0] - 1.0).abs() < 1e-12);
    assert!((plateau(&wf)[1] - 1.0).abs() < 1e-6);
}

#[test]
fn edges_hold_at_other_sample_periods() {
    for dt in [0.05, 0.25, 0.5] {
        let pulse = PulseSpec { sample_period_ns: dt, ..Default::default() };
        let drive = DriveSpec { rise_ns: 8.0, fall_ns: 3.0, ..Default::default() };
        let e = switch_waveform(&drive, &pulse).unwrap().measure_edges().unwrap();
        assert!((e.rise_ns - 8.0).abs() <= dt && (e.fall_ns - 3.0).abs() <= dt, "dt {dt}: {e:?}");
    }
}

#[test]
fn half_amplitude_drive_plateaus_at_one_half() {
    let drive = DriveSpec { phi_active: PI / 2.0, ..Default::default() };
    let wf = switch_waveform(&drive, &PulseSpec::default()).unwrap();
    let p = plateau(&wf);
    assert!((p[0] - 0.5).abs() < 1e-6 && (p[1] - 0.5).abs() < 1e-6, "{p:?}");
    let e = wf.measure_edges().unwrap();
    assert!((e.rise_ns - 5.2).abs() <= 0.1 && (e.fall_ns - 2.4).abs() <= 0.1, "{e:?}");
}

#[test]
fn port_powers_do_not_depend_on_phi_x() {
    for k in 0..20 {
        let phi_r = 0.31 * k as f64;
        let base = prepare_state(&SagnacSetting::new(phi_r, 0.0)).populations();
        for phi_x in [0.5, 1.7, -2.2, 3.0] {
            let p = prepare_state(&SagnacSetting::new(phi_r, phi_x)).populations();
            assert!((p[0] - base[0]).abs() < 1e-12 && (p[1] - base[1]).abs() < 1e-12);
        }
    }
}

#[test]
fn every_mub_state_is_reachable() {
    for m in ModeBasis::MUB_STATES {
        let target = m.qubit().unwrap();
        let q = prepare_state(&SagnacSetting::for_state(&target));
        assert!(q.fidelity(&target) > 1.0 - 1e-12, "{m:?}");
    }
}

proptest! {
    #[test]
    fn phi_x_period_leaves_state_unchanged(phi_r in -10.0..10.0f64, phi_x in -10.0..10.0f64) {
        let a = prepare_state(&SagnacSetting::new(phi_r, phi_x));
        let b = prepare_state(&SagnacSetting::new(phi_r, phi_x + 2.0 * PI));
        prop_assert!(a.fidelity(&b) > 1.0 - 1e-12);
    }

    #[test]
    fn any_bloch_point_is_reachable(theta in 0.0..PI, varphi in -PI..PI) {
        let target = SpatialQubit::new(
            Complex64::new((theta / 2.0).cos(), 0.0),
            Complex64::from_polar((theta / 2.0).sin(), varphi),
        ).unwrap();
        let q = prepare_state(&SagnacSetting::for_state(&target));
        prop_assert!(q.fidelity(&target) > 1.0 - 1e-10, "{:?}", q);
    }
}
