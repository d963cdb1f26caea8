//! Sagnac-loop state generator.
//!
//! The loop acts as a tunable beamsplitter: a phase `phi_r` between the
//! counter-propagating paths sets the path amplitudes
//! `alpha = (1 - e^{i phi_r}) / 2` and `beta = (1 + e^{i phi_r}) / 2`, and the
//! emitted path state is `alpha |0> + i beta |1>`. A second modulator adds
//! `phi_x` on path `|1>` and the lantern maps `|0> -> LP11a`, `|1> -> LP11b`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::SpatialQubit;

/// Path amplitudes at the loop output, before the `i` on path `|1>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SagnacAmplitudes {
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl SagnacAmplitudes {
    /// `(alpha, i beta)`: the emitted path state.
    pub fn path_state(&self) -> (Complex64, Complex64) {
        (self.alpha, Complex64::i() * self.beta)
    }

    /// Splitting ratio `(|alpha|², |beta|²)`.
    pub fn port_powers(&self) -> [f64; 2] {
        [self.alpha.norm_sqr(), self.beta.norm_sqr()]
    }
}

pub fn sagnac_amplitudes(phi_r: f64) -> SagnacAmplitudes {
    let e = Complex64::from_polar(1.0, phi_r);
    let one = Complex64::new(1.0, 0.0);
    SagnacAmplitudes {
        alpha: (one - e) * 0.5,
        beta: (one + e) * 0.5,
    }
}

/// Insertion losses of the transmitter, in dB.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossBudget {
    /// Two passes through the circulator.
    pub circulator_db: f64,
    pub loop_modulator_db: f64,
    pub phase_modulator_db: f64,
    pub lantern_db: f64,
    pub connectors_db: f64,
}

impl Default for LossBudget {
    fn default() -> Self {
        LossBudget {
            circulator_db: 3.0,
            loop_modulator_db: 3.0,
            phase_modulator_db: 3.0,
            lantern_db: 4.0,
            connectors_db: 1.0,
        }
    }
}

impl LossBudget {
    pub fn total_db(&self) -> f64 {
        self.circulator_db
            + self.loop_modulator_db
            + self.phase_modulator_db
            + self.lantern_db
            + self.connectors_db
    }

    pub fn transmittance(&self) -> f64 {
        10f64.powf(-self.total_db() / 10.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SagnacSetting {
    pub phi_r: f64,
    pub phi_x: f64,
    #[serde(default)]
    pub insertion_losses: LossBudget,
}

impl SagnacSetting {
    pub fn new(phi_r: f64, phi_x: f64) -> Self {
        SagnacSetting {
            phi_r,
            phi_x,
            insertion_losses: LossBudget::default(),
        }
    }

    /// Phases that prepare `target` (up to a global phase).
    pub fn for_state(target: &SpatialQubit) -> Self {
        let a = target.amp0.norm().min(1.0);
        // |alpha| = |sin(phi_r / 2)|.
        let phi_r = 2.0 * a.asin();
        let amps = sagnac_amplitudes(phi_r);
        let (p0, p1) = amps.path_state();
        let phi_x = if target.amp1.norm() < 1e-15 || p1.norm() < 1e-15 {
            0.0
        } else {
            let have = if p0.norm() < 1e-15 { p1.arg() } else { (p1 / p0).arg() };
            let want = if target.amp0.norm() < 1e-15 {
                target.amp1.arg()
            } else {
                (target.amp1 / target.amp0).arg()
            };
            (want - have).rem_euclid(2.0 * PI)
        };
        SagnacSetting::new(phi_r, phi_x)
    }
}

/// Lantern output for the given modulator settings, with the global phase
/// removed so that `amp0` is real and non-negative.
pub fn prepare_state(setting: &SagnacSetting) -> SpatialQubit {
    let (p0, p1) = sagnac_amplitudes(setting.phi_r).path_state();
    let amp1 = p1 * Complex64::from_polar(1.0, setting.phi_x);
    let q = SpatialQubit::normalized(p0, amp1)
        .expect("sagnac amplitudes always have unit norm");
    q.canonical()
}

/// Relative phase `arg(amp1 / amp0)` the loop alone produces at `phi_r`;
/// adding it to the target phase gives the `phi_x` to apply.
pub fn intrinsic_relative_phase(phi_r: f64) -> f64 {
    let (p0, p1) = sagnac_amplitudes(phi_r).path_state();
    (p1 / p0).arg()
}

/// Affine drive-voltage calibration `phi_r = slope * v + offset`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VoltageMap {
    pub slope_rad_per_volt: f64,
    pub offset_rad: f64,
}

impl Default for VoltageMap {
    fn default() -> Self {
        VoltageMap {
            slope_rad_per_volt: PI / 5.0,
            offset_rad: 0.0,
        }
    }
}

impl VoltageMap {
    pub fn phase(&self, volts: f64) -> f64 {
        self.slope_rad_per_volt * volts + self.offset_rad
    }

    pub fn volts(&self, phi_r: f64) -> f64 {
        (phi_r - self.offset_rad) / self.slope_rad_per_volt
    }
}

/// Electrical drive applied to the loop modulator.
///
/// `rise_ns` / `fall_ns` are the 10-90 % transition times of the routed
/// optical power, which is what a photodiode behind the second lantern
/// measures. The drive's single-pole time constants are derived from them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DriveSpec {
    pub phi_idle: f64,
    pub phi_active: f64,
    pub width_ns: f64,
    pub rise_ns: f64,
    pub fall_ns: f64,
}

impl Default for DriveSpec {
    fn default() -> Self {
        DriveSpec {
            phi_idle: PI,
            phi_active: 0.0,
            width_ns: 45.0,
            rise_ns: 5.2,
            fall_ns: 2.4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PulseSpec {
    pub optical_width_ns: f64,
    pub sample_period_ns: f64,
}

impl Default for PulseSpec {
    fn default() -> Self {
        PulseSpec {
            optical_width_ns: 120.0,
            sample_period_ns: 0.1,
        }
    }
}

pub const MAX_SAMPLE_PERIOD_NS: f64 = 0.5;

/// Sampled switching transient. Samples cover exactly the optical pulse;
/// outside it there is no light to route.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchWaveform {
    pub sample_period_ns: f64,
    pub t_ns: Vec<f64>,
    pub phi_r: Vec<f64>,
    pub port_powers: Vec<[f64; 2]>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeTimes {
    pub rise_ns: f64,
    pub fall_ns: f64,
}

fn port1_power(phi: f64) -> f64 {
    sagnac_amplitudes(phi).beta.norm_sqr()
}

/// Drive fraction `u` at which port-1 power crosses `frac` of its swing.
fn level_crossing(drive: &DriveSpec, frac: f64) -> Option<f64> {
    let lo = port1_power(drive.phi_idle);
    let hi = port1_power(drive.phi_active);
    let target = lo + frac * (hi - lo);
    let f = |u: f64| port1_power(drive.phi_idle + u * (drive.phi_active - drive.phi_idle)) - target;
    let (mut a, mut b) = (0.0, 1.0);
    let (fa, fb) = (f(a), f(b));
    if fa.signum() == fb.signum() {
        return None;
    }
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        if f(m).signum() == fa.signum() {
            a = m;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Single-pole time constants reproducing the configured optical edges.
pub fn drive_time_constants(drive: &DriveSpec) -> Result<(f64, f64)> {
    let swing = (port1_power(drive.phi_active) - port1_power(drive.phi_idle)).abs();
    let ln9 = 9f64.ln();
    if swing < 1e-9 {
        return Ok((drive.rise_ns / ln9, drive.fall_ns / ln9));
    }
    let (u10, u90) = match (level_crossing(drive, 0.1), level_crossing(drive, 0.9)) {
        (Some(a), Some(b)) if b > a => (a, b),
        _ => {
            return Err(Error::param(
                "port power is not monotonic across the drive swing",
            ))
        }
    };
    let tau_rise = drive.rise_ns / ((1.0 - u10) / (1.0 - u90)).ln();
    let tau_fall = drive.fall_ns / (u90 / u10).ln();
    Ok((tau_rise, tau_fall))
}

/// Drive pulse of `drive.width_ns` centred in the optical pulse, with
/// exponential edges.
pub fn switch_waveform(drive: &DriveSpec, pulse: &PulseSpec) -> Result<SwitchWaveform> {
    let dt = pulse.sample_period_ns;
    if !(dt > 0.0 && dt <= MAX_SAMPLE_PERIOD_NS) {
        return Err(Error::param(format!(
            "sample period {dt} ns must be in (0, {MAX_SAMPLE_PERIOD_NS}] ns"
        )));
    }
    let min_edge = drive.rise_ns.min(drive.fall_ns);
    if !(min_edge > 0.0) {
        return Err(Error::param("edge times must be positive"));
    }
    if dt > min_edge / 4.0 {
        return Err(Error::param(format!(
            "sample period {dt} ns is too coarse for a {min_edge} ns edge"
        )));
    }
    if !(pulse.optical_width_ns > 0.0) || drive.width_ns < 0.0 || drive.width_ns > pulse.optical_width_ns {
        return Err(Error::param("drive pulse must fit inside the optical pulse"));
    }
    let (tau_r, tau_f) = drive_time_constants(drive)?;
    let t_on = 0.5 * (pulse.optical_width_ns - drive.width_ns);
    let t_off = t_on + drive.width_ns;
    let u_off = 1.0 - (-(drive.width_ns) / tau_r).exp();
    let n = (pulse.optical_width_ns / dt).round() as usize + 1;
    let mut wf = SwitchWaveform {
        sample_period_ns: dt,
        t_ns: Vec::with_capacity(n),
        phi_r: Vec::with_capacity(n),
        port_powers: Vec::with_capacity(n),
    };
    for k in 0..n {
        let t = k as f64 * dt;
        let u = if t < t_on {
            0.0
        } else if t < t_off {
            1.0 - (-(t - t_on) / tau_r).exp()
        } else {
            u_off * (-(t - t_off) / tau_f).exp()
        };
        let phi = drive.phi_idle + u * (drive.phi_active - drive.phi_idle);
        wf.t_ns.push(t);
        wf.phi_r.push(phi);
        wf.port_powers.push(sagnac_amplitudes(phi).port_powers());
    }
    Ok(wf)
}

impl SwitchWaveform {
    /// 10-90 % rise and 90-10 % fall of port-1 power, linearly interpolated.
    pub fn measure_edges(&self) -> Option<EdgeTimes> {
        let p: Vec<f64> = self.port_powers.iter().map(|pp| pp[1]).collect();
        let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo < 1e-9 {
            return None;
        }
        let l10 = lo + 0.1 * (hi - lo);
        let l90 = lo + 0.9 * (hi - lo);
        let cross = |from: usize, level: f64, rising: bool| -> Option<(usize, f64)> {
            (from + 1..p.len()).find_map(|k| {
                let (a, b) = (p[k - 1], p[k]);
                let hit = if rising { a < level && b >= level } else { a > level && b <= level };
                hit.then(|| {
                    let frac = (level - a) / (b - a);
                    (k, self.t_ns[k - 1] + frac * (self.t_ns[k] - self.t_ns[k - 1]))
                })
            })
        };
        // Port 1 may start high (idle on port 1); measure whichever edge comes first.
        let rising_first = p[0] < 0.5 * (lo + hi);
        let (r10k, r10) = cross(0, if rising_first { l10 } else { l90 }, rising_first)?;
        let (r90k, r90) = cross(r10k - 1, if rising_first { l90 } else { l10 }, rising_first)?;
        let (f90k, f90) = cross(r90k, if rising_first { l90 } else { l10 }, !rising_first)?;
        let (_, f10) = cross(f90k - 1, if rising_first { l10 } else { l90 }, !rising_first)?;
        let (rise, fall) = if rising_first {
            (r90 - r10, f10 - f90)
        } else {
            (f10 - f90, r90 - r10)
        };
        Some(EdgeTimes {
            rise_ns: rise,
            fall_ns: fall,
        })
    }

    /// CSV with header `t_ns,phi_R,p_port0,p_port1`, 9 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t_ns,phi_R,p_port0,p_port1\n");
        for k in 0..self.t_ns.len() {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                sig9(self.t_ns[k]),
                sig9(self.phi_r[k]),
                sig9(self.port_powers[k][0]),
                sig9(self.port_powers[k][1])
            );
        }
        s
    }
}

/// Fixed-point rendering with nine significant digits.
pub fn sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_finite() { "0".into() } else { x.to_string() };
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-6..=12).contains(&mag) {
        return format!("{:.8e}", x);
    }
    let decimals = (8 - mag).max(0) as usize;
    format!("{:.*}", decimals, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::ModeBasis;

    #[test]
    fn endpoint_amplitudes() {
        let a = sagnac_amplitudes(0.0);
        assert!(a.alpha.norm() < 1e-15 && (a.beta - 1.0).norm() < 1e-15);
        let a = sagnac_amplitudes(PI);
        assert!((a.alpha - 1.0).norm() < 1e-15 && a.beta.norm() < 1e-15);
        let p = sagnac_amplitudes(PI / 2.0).port_powers();
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn default_transmitter_loss_is_14_db() {
        let b = LossBudget::default();
        assert_eq!(b.total_db(), 14.0);
        assert!((b.transmittance() - 0.039810717).abs() < 1e-8);
    }

    #[test]
    fn test_states() {
        for phi_x in [0.0, 1.0, 4.0] {
            let q = prepare_state(&SagnacSetting::new(PI, phi_x));
            assert!((q.amp0 - 1.0).norm() < 1e-15 && q.amp1.norm() < 1e-15);
        }
        let q = prepare_state(&SagnacSetting::new(0.0, 0.3));
        assert!(q.fidelity(&ModeBasis::Lp11b.qubit().unwrap()) > 1.0 - 1e-15);
    }

    #[test]
    fn oam_from_phase_oracle() {
        // amp1 / amp0 = e^{i phi_x} * i beta / alpha, and at phi_r = pi/2,
        // i beta / alpha = i (1 + i) / (1 - i) = -1. Relative phase +pi/2
        // therefore needs phi_x = pi/2 - pi.
        let phi_x = PI / 2.0 - PI;
        let plus = prepare_state(&SagnacSetting::new(PI / 2.0, phi_x));
        assert!(plus.fidelity(&ModeBasis::OamPlus.qubit().unwrap()) > 1.0 - 1e-14);
        let minus = prepare_state(&SagnacSetting::new(PI / 2.0, phi_x + PI));
        assert!(minus.fidelity(&ModeBasis::OamMinus.qubit().unwrap()) > 1.0 - 1e-14);
        assert!((intrinsic_relative_phase(PI / 2.0).abs() - PI).abs() < 1e-12);
    }

    #[test]
    fn voltage_map_roundtrip() {
        let m = VoltageMap { slope_rad_per_volt: 0.7, offset_rad: 0.2 };
        assert!((m.phase(m.volts(1.234)) - 1.234).abs() < 1e-12);
    }

    #[test]
    fn coarse_sampling_rejected() {
        let drive = DriveSpec::default();
        let pulse = PulseSpec { sample_period_ns: 0.6, ..Default::default() };
        assert!(switch_waveform(&drive, &pulse).is_err());
        let pulse = PulseSpec { sample_period_ns: 0.5, ..Default::default() };
        let drive = DriveSpec { rise_ns: 1.0, ..drive };
        assert!(switch_waveform(&drive, &pulse).is_err());
    }

    #[test]
    fn static_drive_is_flat() {
        let drive = DriveSpec { phi_active: PI, ..Default::default() };
        let wf = switch_waveform(&drive, &PulseSpec::default()).unwrap();
        assert!(wf.port_powers.iter().all(|p| (p[0] - 1.0).abs() < 1e-15));
        assert!(wf.measure_edges().is_none());
    }

    #[test]
    fn csv_format() {
        assert_eq!(sig9(45.1), "45.1000000");
        assert_eq!(sig9(0.5), "0.500000000");
        assert_eq!(sig9(0.0), "0");
        let wf = switch_waveform(&DriveSpec::default(), &PulseSpec::default()).unwrap();
        let csv = wf.to_csv();
        assert!(csv.starts_with("t_ns,phi_R,p_port0,p_port1\n0,3.14159265,1.00000000,"));
        assert_eq!(csv.lines().count(), wf.t_ns.len() + 1);
    }
}
