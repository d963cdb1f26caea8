use std::f64::consts::FRAC_1_SQRT_2;

use fiberqrng_core::detection::*;
use fiberqrng_core::modes::{ModeBasis, SpatialQubit};
use fiberqrng_core::StreamRng;
use num_complex::Complex64;
use proptest::prelude::*;

/// `|observed/n - p|` in units of the binomial standard deviation.
fn sigmas(count: u64, n: u64, p: f64) -> f64 {
    let sd = (p * (1.0 - p) / n as f64).sqrt();
    let f = count as f64 / n as f64;
    if sd == 0.0 {
        return if f == p { 0.0 } else { f64::INFINITY };
    }
    (f - p).abs() / sd
}

fn random_state(rng: &mut StreamRng) -> SpatialQubit {
    let theta = (1.0 - 2.0 * rng.uniform()).acos();
    let phi = 6.283 * rng.uniform();
    SpatialQubit::new(
        Complex64::new((theta / 2.0).cos(), 0.0),
        Complex64::from_polar((theta / 2.0).sin(), phi),
    )
    .unwrap()
}

fn random_channel(rng: &mut StreamRng) -> ChannelModel {
    let (la, lb) = (0.2 * rng.uniform(), 0.2 * rng.uniform());
    ChannelModel {
        mu: 0.1 + 30.0 * rng.uniform(),
        rx_loss_db: 6.0 * rng.uniform(),
        time_mux_loss: 0.5,
        det_efficiency: 0.05 + 0.95 * rng.uniform(),
        dark_prob: 0.01 * rng.uniform(),
        afterpulse_prob: 0.0,
        ..ChannelModel::default()
    }
    .with_leaks(la, lb)
}

#[test]
fn monte_carlo_matches_analytic_click_probabilities() {
    let mut draws = StreamRng::new(21, 0, 0);
    for draw in 0..20 {
        let state = random_state(&mut draws);
        let ch = random_channel(&mut draws);
        ch.validate().unwrap();
        let pc = ch.click_probabilities(&state);
        let mut rng = StreamRng::new(22, 0, draw);
        let n = 1_000_000u64;
        let (mut c0, mut c1, mut both) = (0u64, 0u64, 0u64);
        for _ in 0..n {
            let o = simulate_pulse(&state, &ch, &mut rng);
            c0 += o.click0 as u64;
            c1 += o.click1 as u64;
            both += (o.verdict == Verdict::DiscardedDouble) as u64;
        }
        assert!(sigmas(c0, n, pc[0]) < 4.0, "draw {draw}: gate 0");
        assert!(sigmas(c1, n, pc[1]) < 4.0, "draw {draw}: gate 1");
        assert!(sigmas(both, n, pc[0] * pc[1]) < 4.0, "draw {draw}: doubles");
    }
}

#[test]
fn balanced_state_gives_unbiased_bits() {
    let ch = ChannelModel::default();
    for (k, phi_x) in [0.0, 1.3, 2.9, -2.0].into_iter().enumerate() {
        let state = SpatialQubit::new(
            Complex64::new(FRAC_1_SQRT_2, 0.0),
            Complex64::from_polar(FRAC_1_SQRT_2, phi_x),
        )
        .unwrap();
        let mut rng = StreamRng::new(23, 0, k as u64);
        let (mut zeros, mut bits) = (0u64, 0u64);
        for _ in 0..1_000_000 {
            if let Some(b) = simulate_pulse(&state, &ch, &mut rng).verdict.bit() {
                bits += 1;
                zeros += !b as u64;
            }
        }
        assert!(sigmas(zeros, bits, 0.5) < 3.0, "phi_x {phi_x}: {zeros}/{bits}");
    }
}

#[test]
fn dark_counts_alone() {
    let ch = ChannelModel { mu: 0.0, dark_prob: 5e-5, ..ChannelModel::default() };
    let state = ModeBasis::LpPlus.qubit().unwrap();
    let mut rng = StreamRng::new(24, 0, 0);
    let n = 10_000_000u64;
    let (mut c0, mut c1) = (0u64, 0u64);
    for _ in 0..n {
        let o = simulate_pulse(&state, &ch, &mut rng);
        c0 += o.click0 as u64;
        c1 += o.click1 as u64;
    }
    assert!(sigmas(c0, n, 5e-5) < 3.0 && sigmas(c1, n, 5e-5) < 3.0, "{c0} {c1}");
}

#[test]
fn ideal_channel_maps_populations_to_gates() {
    let ch = ChannelModel::ideal();
    let mut draws = StreamRng::new(25, 0, 0);
    for _ in 0..20 {
        let s = random_state(&mut draws);
        let m = ch.mean_per_bin(&s);
        let p = s.populations();
        assert!((m[0] / (m[0] + m[1]) - p[0]).abs() < 1e-14);
    }
    // LP11a never lights the late gate.
    let mut rng = StreamRng::new(26, 0, 0);
    let a = ModeBasis::Lp11a.qubit().unwrap();
    let bright = ChannelModel { mu: 50.0, ..ch };
    assert!((0..100_000).all(|_| !simulate_pulse(&a, &bright, &mut rng).click1));
}

/// Verdict frequencies per pulse from explicit stepping and from skipping.
fn verdict_counts(det: &mut GatedDetector, pulses: u64, skip: bool, rng: &mut StreamRng) -> [u64; 4] {
    let mut c = [0u64; 4];
    let idx = |v: Verdict| match v {
        Verdict::Zero => 0,
        Verdict::One => 1,
        Verdict::DiscardedDouble => 2,
        Verdict::NoClick => 3,
    };
    if skip {
        let mut left = pulses;
        while left > 0 {
            let (used, hit) = det.next_click(left, rng);
            left -= used;
            match hit {
                Some((_, o)) => {
                    c[idx(o.verdict)] += 1;
                    c[3] += used - 1;
                }
                None => c[3] += used,
            }
        }
    } else {
        for _ in 0..pulses {
            c[idx(det.pulse(rng).1.verdict)] += 1;
        }
    }
    c
}

#[test]
fn skip_sampling_matches_explicit_stepping() {
    let ch = ChannelModel { mu: 3.0, afterpulse_prob: 0.3, dark_prob: 1e-3, ..ChannelModel::default() };
    for (k, state) in [ModeBasis::Lp11a, ModeBasis::LpPlus, ModeBasis::OamMinus].into_iter().enumerate() {
        let state = state.qubit().unwrap();
        let n = 2_000_000u64;
        let mut rng = StreamRng::new(27, 0, k as u64);
        let a = verdict_counts(&mut GatedDetector::new(&state, &ch), n, false, &mut rng);
        let b = verdict_counts(&mut GatedDetector::new(&state, &ch), n, true, &mut rng);
        for v in 0..4 {
            // Two independent estimates: the difference has twice the variance.
            let p = (a[v] + b[v]) as f64 / (2 * n) as f64;
            let sd = (2.0 * p * (1.0 - p) / n as f64).sqrt();
            let d = (a[v] as f64 - b[v] as f64).abs() / n as f64;
            assert!(d <= 4.0 * sd + 1e-12, "state {k} verdict {v}: {a:?} vs {b:?}");
        }
    }
}

#[test]
fn afterpulses_populate_the_dark_gate() {
    let ch = ChannelModel { afterpulse_prob: 0.2, ..ChannelModel::ideal() };
    let mut det = GatedDetector::new(&ModeBasis::Lp11a.qubit().unwrap(), &ch);
    let mut rng = StreamRng::new(28, 0, 0);
    let c = verdict_counts(&mut det, 5_000_000, true, &mut rng);
    // Every early click echoes into the late gate of the same pulse.
    let clicks = (c[0] + c[2]) as f64;
    assert!(c[1] == 0 && (c[2] as f64 / clicks - 0.2).abs() < 0.02, "{c:?}");
}

#[test]
fn mixture_components_click_in_proportion() {
    let ch = ChannelModel::default();
    let a = ModeBasis::Lp11a.qubit().unwrap();
    let b = ModeBasis::Lp11b.qubit().unwrap();
    let mut det = GatedDetector::mixture(&[(0.25, a), (0.75, b)], &ch);
    let mut rng = StreamRng::new(29, 0, 0);
    let (mut hits, mut from_a) = (0u64, 0u64);
    let mut left = 50_000_000u64;
    while left > 0 {
        let (used, hit) = det.next_click(left, &mut rng);
        left -= used;
        if let Some((k, _)) = hit {
            hits += 1;
            from_a += (k == 0) as u64;
        }
    }
    let pa = 0.25 * (1.0 - (1.0 - ch.click_probabilities(&a)[0]) * (1.0 - ch.click_probabilities(&a)[1]));
    let pb = 0.75 * (1.0 - (1.0 - ch.click_probabilities(&b)[0]) * (1.0 - ch.click_probabilities(&b)[1]));
    assert!(sigmas(from_a, hits, pa / (pa + pb)) < 4.0);
    assert!(sigmas(hits, 50_000_000, det.click_probability()) < 4.0);
}

#[test]
fn click_rate_scales_linearly_at_small_mu() {
    let s = ModeBasis::LpPlus.qubit().unwrap();
    let ch = ChannelModel { mu: 0.01, dark_prob: 0.0, ..ChannelModel::default() };
    let r1 = expected_click_rate(&s, &ch, 3e5).unwrap();
    let r2 = expected_click_rate(&s, &ChannelModel { mu: 0.02, ..ch }, 3e5).unwrap();
    assert!((r2 / r1 - 2.0).abs() < 0.04);
    let off = ChannelModel { det_efficiency: 0.0, dark_prob: 0.0, ..ch };
    assert_eq!(expected_click_rate(&s, &off, 3e5).unwrap(), 0.0);
}

proptest! {
    #[test]
    fn multiphoton_fraction_is_monotone_and_small_near_zero(mu in 1e-6..10.0f64) {
        let f = multiphoton_fraction(mu).unwrap();
        let g = multiphoton_fraction(mu * 1.01).unwrap();
        prop_assert!(f > 0.0 && g > f);
        // P(n >= 2) ≈ mu² / 2 for small mu.
        prop_assert!(f <= mu * mu / 2.0 + 1e-18);
        let cond = multiphoton_fraction_given_emission(mu).unwrap();
        prop_assert!(cond >= f && cond <= 1.0);
    }

    #[test]
    fn click_probabilities_are_probabilities(mu in 0.0..100.0f64, dark in 0.0..1.0f64, leak in 0.0..1.0f64) {
        let ch = ChannelModel { mu, dark_prob: dark, ..ChannelModel::default() }.with_leaks(leak, 1.0 - leak);
        let pc = ch.click_probabilities(&ModeBasis::OamPlus.qubit().unwrap());
        prop_assert!(pc.iter().all(|p| (0.0..=1.0).contains(p) && *p >= dark - 1e-15));
    }
}
