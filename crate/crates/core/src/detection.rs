//! Photon-level detection model.
//!
//! A weak coherent pulse of mean photon number `mu` leaves the generator,
//! loses `rx_loss_db` in the second lantern and a further `time_mux_loss`
//! fraction in the time-multiplexing stage, and is detected with efficiency
//! `det_efficiency`. The two lantern ports map to an early and a late gate of
//! the same gated detector. Lantern crosstalk is classical mixing of the
//! port populations. Per gate, a Poissonian mean `m` plus dark probability
//! `d` gives a click with probability `1 - e^{-m} + d - (1 - e^{-m}) d`.
//!
//! Afterpulsing is an optional echo: any click makes the following gate
//! click with probability `afterpulse_prob`. The late gate of pulse `k` is
//! followed by the early gate of pulse `k + 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::SpatialQubit;
use crate::rng::StreamRng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelModel {
    /// Mean photon number per gate at the generator output.
    pub mu: f64,
    /// Loss of the receiving lantern.
    pub rx_loss_db: f64,
    /// Fraction lost to time multiplexing onto a single detector.
    pub time_mux_loss: f64,
    pub det_efficiency: f64,
    /// Dark-count probability per gate.
    pub dark_prob: f64,
    /// `crosstalk[launched][detected]`; rows sum to one.
    pub crosstalk: [[f64; 2]; 2],
    pub afterpulse_prob: f64,
}

impl Default for ChannelModel {
    fn default() -> Self {
        ChannelModel {
            mu: 0.16,
            rx_loss_db: 4.0,
            time_mux_loss: 0.5,
            det_efficiency: 0.10,
            dark_prob: 5e-5,
            crosstalk: [[1.0 - 0.0027, 0.0027], [0.0087, 1.0 - 0.0087]],
            afterpulse_prob: 0.0,
        }
    }
}

fn unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::param(format!("{name} = {v} is outside [0, 1]")));
    }
    Ok(())
}

impl ChannelModel {
    /// Noise-free channel: identity crosstalk, no dark counts or afterpulses.
    pub fn ideal() -> Self {
        ChannelModel {
            crosstalk: [[1.0, 0.0], [0.0, 1.0]],
            dark_prob: 0.0,
            afterpulse_prob: 0.0,
            ..Default::default()
        }
    }

    pub fn with_leaks(self, leak_a: f64, leak_b: f64) -> Self {
        ChannelModel {
            crosstalk: [[1.0 - leak_a, leak_a], [leak_b, 1.0 - leak_b]],
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::param(format!("mu = {} must be non-negative", self.mu)));
        }
        if !(self.rx_loss_db >= 0.0 && self.rx_loss_db.is_finite()) {
            return Err(Error::param("rx_loss_db must be non-negative"));
        }
        unit("time_mux_loss", self.time_mux_loss)?;
        unit("det_efficiency", self.det_efficiency)?;
        unit("dark_prob", self.dark_prob)?;
        unit("afterpulse_prob", self.afterpulse_prob)?;
        for row in &self.crosstalk {
            unit("crosstalk", row[0])?;
            unit("crosstalk", row[1])?;
            if (row[0] + row[1] - 1.0).abs() > 1e-12 {
                return Err(Error::param("crosstalk rows must sum to 1"));
            }
        }
        Ok(())
    }

    /// End-to-end transmittance from generator output to a detection.
    pub fn transmittance(&self) -> f64 {
        10f64.powf(-self.rx_loss_db / 10.0) * (1.0 - self.time_mux_loss) * self.det_efficiency
    }

    /// Mean detected photon number in the early and late gate.
    pub fn mean_per_bin(&self, state: &SpatialQubit) -> [f64; 2] {
        let p = state.populations();
        let c = &self.crosstalk;
        let mixed = [
            p[0] * c[0][0] + p[1] * c[1][0],
            p[0] * c[0][1] + p[1] * c[1][1],
        ];
        let m = self.mu * self.transmittance();
        [m * mixed[0], m * mixed[1]]
    }

    pub fn click_probabilities(&self, state: &SpatialQubit) -> [f64; 2] {
        self.mean_per_bin(state).map(|m| {
            let s = -(-m).exp_m1();
            s + self.dark_prob - s * self.dark_prob
        })
    }

    /// Analytic `P(correct)` for the two test states, ignoring afterpulses:
    /// ratio of single clicks in the expected gate to all single clicks.
    pub fn test_probabilities(&self) -> [f64; 2] {
        let correct = |state: SpatialQubit, right: usize| {
            let pc = self.click_probabilities(&state);
            let single = [pc[0] * (1.0 - pc[1]), pc[1] * (1.0 - pc[0])];
            single[right] / (single[0] + single[1])
        };
        let a = SpatialQubit { amp0: 1.0.into(), amp1: 0.0.into() };
        let b = SpatialQubit { amp0: 0.0.into(), amp1: 1.0.into() };
        [correct(a, 0), correct(b, 1)]
    }

    /// Crosstalk leaks that reproduce the target test probabilities given
    /// every other parameter. Fails when dark counts alone already push a
    /// test probability below its target.
    pub fn calibrate_crosstalk(&self, target_a: f64, target_b: f64) -> Result<ChannelModel> {
        let solve = |which: usize, target: f64| -> Result<f64> {
            let p = |leak: f64| {
                let mut ch = *self;
                ch.crosstalk[which] = if which == 0 { [1.0 - leak, leak] } else { [leak, 1.0 - leak] };
                ch.test_probabilities()[which]
            };
            let best = p(0.0);
            if best < target {
                return Err(Error::param(format!(
                    "test probability {target} unreachable: {best:.5} with zero crosstalk"
                )));
            }
            let (mut lo, mut hi) = (0.0, 0.5);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if p(mid) > target { lo = mid } else { hi = mid }
            }
            Ok(0.5 * (lo + hi))
        };
        let la = solve(0, target_a)?;
        let lb = solve(1, target_b)?;
        Ok(self.with_leaks(la, lb))
    }
}

/// Probability of two or more photons in a Poissonian pulse, `P(n >= 2)`.
pub fn multiphoton_fraction(mu: f64) -> Result<f64> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::param(format!("mu = {mu} must be positive")));
    }
    // 1 - e^{-mu}(1 + mu), written to stay accurate for small mu.
    Ok(-(-mu).exp_m1() - mu * (-mu).exp())
}

/// `P(n >= 2 | n >= 1)` for a Poissonian pulse.
pub fn multiphoton_fraction_given_emission(mu: f64) -> Result<f64> {
    let multi = multiphoton_fraction(mu)?;
    Ok(multi / -(-mu).exp_m1())
}

/// Detector-rate budget: `rep_rate * P(exactly one gate clicks)`.
pub fn expected_click_rate(state: &SpatialQubit, channel: &ChannelModel, rep_rate_hz: f64) -> Result<f64> {
    if !(rep_rate_hz > 0.0) {
        return Err(Error::param("repetition rate must be positive"));
    }
    let pc = channel.click_probabilities(state);
    Ok(rep_rate_hz * (pc[0] * (1.0 - pc[1]) + pc[1] * (1.0 - pc[0])))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Zero,
    One,
    NoClick,
    DiscardedDouble,
}

impl Verdict {
    pub fn bit(self) -> Option<bool> {
        match self {
            Verdict::Zero => Some(false),
            Verdict::One => Some(true),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PulseOutcome {
    pub click0: bool,
    pub click1: bool,
    pub verdict: Verdict,
}

impl PulseOutcome {
    pub fn from_clicks(click0: bool, click1: bool) -> Self {
        let verdict = match (click0, click1) {
            (false, false) => Verdict::NoClick,
            (true, false) => Verdict::Zero,
            (false, true) => Verdict::One,
            (true, true) => Verdict::DiscardedDouble,
        };
        PulseOutcome { click0, click1, verdict }
    }
}

/// One pulse of `state` through `channel`, without afterpulse memory.
pub fn simulate_pulse(state: &SpatialQubit, channel: &ChannelModel, rng: &mut StreamRng) -> PulseOutcome {
    let pc = channel.click_probabilities(state);
    let c0 = rng.bernoulli(pc[0]);
    let c1 = rng.bernoulli(pc[1]);
    PulseOutcome::from_clicks(c0, c1)
}

#[derive(Clone, Copy, Debug)]
struct Component {
    weight: f64,
    pc: [f64; 2],
    /// `P(any natural click)` weighted by `weight`.
    any: f64,
    /// Cumulative `(only 0, only 1, both)` given a natural click.
    conditional: [f64; 2],
}

/// Gated detector carrying the afterpulse echo from one pulse to the next.
///
/// It is fed either with a fixed state or, for per-pulse mode selection,
/// with an i.i.d. mixture of states; [`next_click`](Self::next_click)
/// returns the mixture component that produced the click.
#[derive(Clone, Debug)]
pub struct GatedDetector {
    components: Vec<Component>,
    afterpulse: f64,
    pending_echo: bool,
    any: f64,
    /// `ln(1 - P(any natural click))`, for geometric skipping.
    ln_empty: f64,
}

impl GatedDetector {
    pub fn new(state: &SpatialQubit, channel: &ChannelModel) -> Self {
        Self::mixture(&[(1.0, *state)], channel)
    }

    /// Each pulse independently carries `states[k].1` with probability
    /// proportional to `states[k].0`.
    pub fn mixture(states: &[(f64, SpatialQubit)], channel: &ChannelModel) -> Self {
        let total: f64 = states.iter().map(|s| s.0).sum();
        let components: Vec<Component> = states
            .iter()
            .map(|(w, state)| {
                let pc = channel.click_probabilities(state);
                let (p0, p1) = (pc[0] * (1.0 - pc[1]), (1.0 - pc[0]) * pc[1]);
                let any = 1.0 - (1.0 - pc[0]) * (1.0 - pc[1]);
                let conditional = if any > 0.0 { [p0 / any, (p0 + p1) / any] } else { [0.0; 2] };
                Component { weight: w / total, pc, any: w / total * any, conditional }
            })
            .collect();
        let any: f64 = components.iter().map(|c| c.any).sum();
        GatedDetector {
            components,
            afterpulse: channel.afterpulse_prob,
            pending_echo: false,
            any,
            ln_empty: (-any).ln_1p(),
        }
    }

    /// Per-pulse probability of at least one natural (non-echo) click.
    pub fn click_probability(&self) -> f64 {
        self.any
    }

    fn echo(&self, clicked: bool, rng: &mut StreamRng) -> bool {
        clicked && self.afterpulse > 0.0 && rng.bernoulli(self.afterpulse)
    }

    fn finish(&mut self, c0: bool, c1_natural: bool, rng: &mut StreamRng) -> PulseOutcome {
        let c1 = c1_natural || self.echo(c0, rng);
        self.pending_echo = self.echo(c1, rng);
        PulseOutcome::from_clicks(c0, c1)
    }

    fn pick(&self, mut u: f64, by_click: bool) -> usize {
        for (k, c) in self.components.iter().enumerate() {
            let w = if by_click { c.any } else { c.weight };
            if u < w {
                return k;
            }
            u -= w;
        }
        self.components.len() - 1
    }

    /// Simulates exactly one pulse.
    pub fn pulse(&mut self, rng: &mut StreamRng) -> (usize, PulseOutcome) {
        let k = if self.components.len() == 1 { 0 } else { self.pick(rng.uniform(), false) };
        let pc = self.components[k].pc;
        let c0 = std::mem::take(&mut self.pending_echo) | rng.bernoulli(pc[0]);
        let c1 = rng.bernoulli(pc[1]);
        (k, self.finish(c0, c1, rng))
    }

    /// Advances to the next pulse with at least one click, spending at most
    /// `budget` pulses. Returns the number of pulses used (including the
    /// clicking one) and the component and outcome of the clicking pulse,
    /// or `(budget, None)` if nothing clicked within the budget.
    /// Distributionally identical to calling [`pulse`](Self::pulse)
    /// repeatedly.
    pub fn next_click(&mut self, budget: u64, rng: &mut StreamRng) -> (u64, Option<(usize, PulseOutcome)>) {
        if budget == 0 {
            return (0, None);
        }
        if self.pending_echo {
            return (1, Some(self.pulse(rng)));
        }
        if self.any <= 0.0 {
            return (budget, None);
        }
        let skip = (rng.uniform_open0().ln() / self.ln_empty).floor();
        if skip >= budget as f64 {
            return (budget, None);
        }
        let k = if self.components.len() == 1 { 0 } else { self.pick(rng.uniform() * self.any, true) };
        let cond = self.components[k].conditional;
        let u = rng.uniform();
        let (c0, c1) = if u < cond[0] {
            (true, false)
        } else if u < cond[1] {
            (false, true)
        } else {
            (true, true)
        };
        (skip as u64 + 1, Some((k, self.finish(c0, c1, rng))))
    }
}
