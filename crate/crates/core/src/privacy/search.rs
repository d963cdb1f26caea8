//! Explicit strategy search, a lower bound on the guessing probability
//! that is independent of the SDP solver.
//!
//! Every feasible strategy is a convex mixture of atoms `(e, P)`: guess `e`
//! with POVM element `P = M_{0,e} / q_e`. Extremal elements are `0`, `I`
//! and rank-one projectors `|n⟩⟨n|`, so each atom contributes a point
//! `(p_a, p_b, value)`:
//!
//! * `|n⟩⟨n|`, `n = (cos θ/2, e^{iϕ} sin θ/2)`:
//!   `(cos² θ/2, cos² θ/2, |⟨φ|n⟩|²)` for guess 0 and the same test point
//!   with `1 - |⟨φ|n⟩|²` for guess 1, which is the antipodal projector;
//! * `I` with guess 0: `(1, 0, 1)`, `0` with guess 1: `(0, 1, 1)`.
//!
//! The search mixes at most three atoms (a basic solution of the three
//! linear constraints), solves for the weights exactly, keeps only
//! non-negative solutions and hill-climbs the projector angles.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

use crate::rng::{domain, StreamRng};

use super::ObservedStats;

#[derive(Clone, Copy, Debug, PartialEq)]
enum Atom {
    Projector { theta: f64, varphi: f64 },
    Identity,
    Zero,
}

fn point(atom: Atom, phi_x: f64) -> [f64; 3] {
    match atom {
        Atom::Projector { theta, varphi } => {
            let t = (theta / 2.0).cos().powi(2);
            let value = 0.5 * (1.0 + theta.sin() * (varphi - phi_x).cos());
            [t, t, value]
        }
        Atom::Identity => [1.0, 0.0, 1.0],
        Atom::Zero => [0.0, 1.0, 1.0],
    }
}

/// Value of the best mixture of `atoms` reproducing `(pa, pb)`, if any.
fn mixture_value(atoms: &[Atom], pa: f64, pb: f64, phi_x: f64) -> Option<f64> {
    let pts: Vec<[f64; 3]> = atoms.iter().map(|&a| point(a, phi_x)).collect();
    let feasible = |w: &[f64]| w.iter().all(|&x| x >= 0.0);
    let mut best: Option<f64> = None;
    let mut consider = |v: f64| best = Some(best.map_or(v, |b: f64| b.max(v)));
    match pts.len() {
        1 => {
            let p = pts[0];
            if (p[0] - pa).abs() < 1e-15 && (p[1] - pb).abs() < 1e-15 {
                consider(p[2]);
            }
        }
        2 => {
            // w p1 + (1 - w) p2 = target in both coordinates.
            let (p, q) = (pts[0], pts[1]);
            for c in 0..2 {
                let target = [pa, pb][c];
                let d = p[c] - q[c];
                if d.abs() < 1e-14 {
                    continue;
                }
                let w = (target - q[c]) / d;
                let other = 1 - c;
                let resid = w * p[other] + (1.0 - w) * q[other] - [pa, pb][other];
                if feasible(&[w, 1.0 - w]) && resid.abs() < 1e-15 {
                    consider(w * p[2] + (1.0 - w) * q[2]);
                }
            }
        }
        3 => {
            let m = Matrix3::new(
                pts[0][0], pts[1][0], pts[2][0],
                pts[0][1], pts[1][1], pts[2][1],
                1.0, 1.0, 1.0,
            );
            if m.determinant().abs() > 1e-12 {
                if let Some(w) = m.lu().solve(&Vector3::new(pa, pb, 1.0)) {
                    if feasible(w.as_slice()) {
                        consider(w.iter().zip(&pts).map(|(wi, p)| wi * p[2]).sum());
                    }
                }
            }
        }
        _ => {}
    }
    best
}

fn random_projector(rng: &mut StreamRng) -> Atom {
    Atom::Projector {
        theta: (1.0 - 2.0 * rng.uniform()).acos(),
        varphi: 2.0 * PI * rng.uniform(),
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    pub starts: usize,
    pub steps: usize,
    pub seed: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { starts: 72, steps: 600, seed: 1 }
    }
}

/// Best guessing probability found by explicit strategies; a lower bound
/// on the true optimum whenever it returns `Some`.
pub fn search_guessing(stats: &ObservedStats, phi_x: f64, options: &SearchOptions) -> Option<f64> {
    let (pa, pb) = (stats.p_correct_a, stats.p_correct_b);
    let mut rng = StreamRng::new(options.seed, domain::TESTING, 0xbf);
    let mut best: Option<f64> = None;
    let shapes: [&[Option<Atom>]; 9] = [
        &[None, None, Some(Atom::Identity)],
        &[None, None, Some(Atom::Zero)],
        &[None, Some(Atom::Identity), Some(Atom::Zero)],
        &[None, Some(Atom::Identity)],
        &[None, Some(Atom::Zero)],
        &[None, None, None],
        &[None, None],
        &[None],
        &[Some(Atom::Identity), Some(Atom::Zero)],
    ];
    let lo = (pa.min(pb) - 0.05).max(0.0);
    for start in 0..options.starts {
        let shape = shapes[start % shapes.len()];
        let sample = |rng: &mut StreamRng| -> Vec<Atom> {
            shape
                .iter()
                .map(|a| {
                    a.unwrap_or_else(|| match rng.uniform() {
                        // Poles are the extremal test points.
                        u if u < 0.1 => Atom::Projector { theta: 0.0, varphi: phi_x },
                        u if u < 0.2 => Atom::Projector { theta: PI, varphi: phi_x },
                        u if u < 0.6 => {
                            let t = lo + (1.0 - lo) * rng.uniform();
                            Atom::Projector { theta: 2.0 * t.sqrt().acos(), varphi: 2.0 * PI * rng.uniform() }
                        }
                        _ => random_projector(rng),
                    })
                })
                .collect()
        };
        let mut atoms = sample(&mut rng);
        let mut value = mixture_value(&atoms, pa, pb, phi_x);
        let projectors: Vec<usize> =
            (0..atoms.len()).filter(|&i| matches!(atoms[i], Atom::Projector { .. })).collect();
        let mut scale = 0.5;
        for step in 0..options.steps {
            if value.is_none() {
                // Infeasible starts are redrawn rather than walked.
                atoms = sample(&mut rng);
                value = mixture_value(&atoms, pa, pb, phi_x);
                continue;
            }
            if projectors.is_empty() {
                break;
            }
            let mut trial = atoms.clone();
            let pick = projectors[step % projectors.len()];
            if let Atom::Projector { theta, varphi } = &mut trial[pick] {
                *theta = (*theta + scale * (rng.uniform() - 0.5)).clamp(0.0, PI);
                *varphi += scale * (rng.uniform() - 0.5);
            }
            match mixture_value(&trial, pa, pb, phi_x) {
                Some(v) if value.is_none_or(|cur| v > cur) => {
                    atoms = trial;
                    value = Some(v);
                    scale = (scale * 1.5).min(1.0);
                }
                _ => scale = (scale * 0.97).max(1e-12),
            }
        }
        if let Some(v) = value {
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
    }
    best
}
