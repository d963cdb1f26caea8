//! Guessing-probability bound and private fraction.
//!
//! The adversary's strategy is a family of 2×2 operators `M_{b,e}` for
//! outcome `b` and guess `e`. With test states `ω_a = |0⟩⟨0|`,
//! `ω_b = |1⟩⟨1|` and generation state `ρ = |φ⟩⟨φ|`,
//! `|φ⟩ = (|0⟩ + e^{iφx}|1⟩)/√2`, the bound is
//!
//! ```text
//! maximise   Σ_e Tr[ρ M_{e,e}]
//! subject to Σ_e Tr[ω_a M_{0,e}] = p_a
//!            Σ_e Tr[ω_b M_{1,e}] = p_b
//!            Σ_b M_{b,e} = q_e I,  q_e ≥ 0,  Σ_e q_e = 1
//!            M_{b,e} ⪰ 0
//! ```
//!
//! Complex Hermitian blocks are embedded as real symmetric 4×4 blocks
//! `[[Re, -Im], [Im, Re]]`, for which `Tr[HK] = ½ Tr[emb(H) emb(K)]`. The
//! weights `q` live in a 2×2 block whose diagonal is `q`.
//!
//! The reported `p_guess` is a rigorous dual bound: the solver's dual
//! objective corrected by the most negative eigenvalue of each slack block
//! times a bound on that block's trace. It stays valid when the solver
//! stops early.

pub mod sdp;
pub mod search;

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use sdp::{Block, Constraint, SdpProblem, SolverOptions};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservedStats {
    pub p_correct_a: f64,
    pub p_correct_b: f64,
    #[serde(default)]
    pub multiphoton_fraction: f64,
}

impl ObservedStats {
    pub fn new(p_correct_a: f64, p_correct_b: f64, multiphoton_fraction: f64) -> Result<Self> {
        let s = ObservedStats { p_correct_a, p_correct_b, multiphoton_fraction };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("p_correct_a", self.p_correct_a),
            ("p_correct_b", self.p_correct_b),
            ("multiphoton_fraction", self.multiphoton_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Lower interval endpoints, the adversary-favourable reading of
    /// `p ± half_width`.
    pub fn worst_case(&self, half_width_a: f64, half_width_b: f64) -> Result<Self> {
        if half_width_a < 0.0 || half_width_b < 0.0 {
            return Err(Error::param("interval half widths must be non-negative"));
        }
        ObservedStats::new(
            (self.p_correct_a - half_width_a).max(0.0),
            (self.p_correct_b - half_width_b).max(0.0),
            self.multiphoton_fraction,
        )
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyMode {
    None,
    #[default]
    LinearDiscount,
    PublishedTarget,
}

impl PenaltyMode {
    pub fn name(self) -> &'static str {
        match self {
            PenaltyMode::None => "none",
            PenaltyMode::LinearDiscount => "linear_discount",
            PenaltyMode::PublishedTarget => "published_target",
        }
    }
}

impl std::str::FromStr for PenaltyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(PenaltyMode::None),
            "linear_discount" => Ok(PenaltyMode::LinearDiscount),
            "published_target" => Ok(PenaltyMode::PublishedTarget),
            other => Err(Error::param(format!("unknown penalty mode {other:?}"))),
        }
    }
}

/// Published run: `p_guess = 0.64687` certified as 60.52 % private bits.
pub const PUBLISHED_P_GUESS: f64 = 0.64687;
pub const PUBLISHED_PRIVATE_FRACTION: f64 = 0.6052;

/// Fraction of bits that may be counted as private.
///
/// * `None`: `h_min`.
/// * `LinearDiscount`: `(1 - f) h_min`, every multiphoton event assumed
///   fully known to the adversary.
/// * `PublishedTarget`: `h_min` scaled by the published ratio
///   `0.6052 / -log2(0.64687)`, reproducing the published figure for its
///   inputs.
pub fn private_fraction(h_min: f64, multiphoton_fraction: f64, mode: PenaltyMode) -> Result<f64> {
    if !(0.0..=1.0).contains(&h_min) {
        return Err(Error::param(format!("h_min = {h_min} is outside [0, 1]")));
    }
    if !(0.0..=1.0).contains(&multiphoton_fraction) {
        return Err(Error::param("multiphoton fraction is outside [0, 1]"));
    }
    let f = match mode {
        PenaltyMode::None => h_min,
        PenaltyMode::LinearDiscount => (1.0 - multiphoton_fraction) * h_min,
        PenaltyMode::PublishedTarget => h_min * PUBLISHED_PRIVATE_FRACTION / -PUBLISHED_P_GUESS.log2(),
    };
    Ok(f.clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Solver dual objective before the eigenvalue correction.
    pub raw_dual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrivacyCertificate {
    /// Safe (dual) upper bound on the guessing probability.
    pub p_guess: f64,
    /// Value of the primal iterate, a lower bound up to its residual.
    pub primal_value: f64,
    pub duality_gap: f64,
    pub h_min: f64,
    pub private_fraction: f64,
    pub penalty_mode: PenaltyMode,
    pub inputs: ObservedStats,
    pub diagnostics: SolverDiagnostics,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuessingOptions {
    pub phi_x: f64,
    pub penalty_mode: PenaltyMode,
    pub solver: SolverOptions,
}

impl Default for GuessingOptions {
    fn default() -> Self {
        GuessingOptions {
            phi_x: 0.0,
            penalty_mode: PenaltyMode::default(),
            solver: SolverOptions::default(),
        }
    }
}

/// `[[Re, -Im], [Im, Re]]`.
pub fn embed(h: &[[Complex64; 2]; 2]) -> Block {
    let mut m = Block::zeros(4, 4);
    for r in 0..2 {
        for c in 0..2 {
            m[(r, c)] = h[r][c].re;
            m[(r + 2, c + 2)] = h[r][c].re;
            m[(r + 2, c)] = h[r][c].im;
            m[(r, c + 2)] = -h[r][c].im;
        }
    }
    m
}

/// Hermitian operator recovered from a (not necessarily structured) real
/// 4×4 block.
pub fn unembed(x: &Block) -> [[Complex64; 2]; 2] {
    let mut h = [[Complex64::new(0.0, 0.0); 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            let re = 0.5 * (x[(r, c)] + x[(r + 2, c + 2)]);
            let im = 0.5 * (x[(r + 2, c)] - x[(r, c + 2)]);
            h[r][c] = Complex64::new(re, im);
        }
    }
    h
}

fn projector(v: [Complex64; 2]) -> [[Complex64; 2]; 2] {
    [
        [v[0] * v[0].conj(), v[0] * v[1].conj()],
        [v[1] * v[0].conj(), v[1] * v[1].conj()],
    ]
}

/// Block index of `M_{b,e}`.
const fn blk(b: usize, e: usize) -> usize {
    2 * b + e
}
const LP: usize = 4;

fn unit(n: usize, i: usize, j: usize) -> Block {
    let mut m = Block::zeros(n, n);
    if i == j {
        m[(i, i)] = 1.0;
    } else {
        m[(i, j)] = 0.5;
        m[(j, i)] = 0.5;
    }
    m
}

/// Builds the embedded real SDP (as a minimisation of `-p_guess`).
///
/// Constraint order is completeness, `Σ q = 1`, then the two test rows, so
/// that [`SdpProblem::without_dependent_constraints`] drops a test row when
/// it is implied by the others.
pub fn guessing_problem(stats: &ObservedStats, phi_x: f64) -> SdpProblem {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let phi = [h, h * Complex64::from_polar(1.0, phi_x)];
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let rho = embed(&projector(phi));
    let omega_a = embed(&projector([one, zero]));
    let omega_b = embed(&projector([zero, one]));

    let mut objective = vec![Block::zeros(4, 4); 4];
    objective.push(Block::zeros(2, 2));
    for e in 0..2 {
        objective[blk(e, e)] = &rho * -0.5;
    }

    let mut constraints = Vec::with_capacity(23);
    for e in 0..2 {
        for k in 0..4 {
            for l in k..4 {
                let mut terms: Vec<(usize, Block)> = (0..2).map(|b| (blk(b, e), unit(4, k, l))).collect();
                if k == l {
                    terms.push((LP, unit(2, e, e) * -1.0));
                }
                constraints.push(Constraint { terms, rhs: 0.0 });
            }
        }
    }
    constraints.push(Constraint { terms: vec![(LP, Block::identity(2, 2))], rhs: 1.0 });
    constraints.push(Constraint {
        terms: (0..2).map(|e| (blk(0, e), &omega_a * 0.5)).collect(),
        rhs: stats.p_correct_a,
    });
    constraints.push(Constraint {
        terms: (0..2).map(|e| (blk(1, e), &omega_b * 0.5)).collect(),
        rhs: stats.p_correct_b,
    });

    SdpProblem {
        block_sizes: vec![4, 4, 4, 4, 2],
        objective,
        constraints,
    }
}

/// Real coordinates of the embedding kept by each block after facial
/// reduction.
///
/// A test probability of exactly 0 or 1 forces a diagonal entry of some
/// `M_{b,e}` to vanish (e.g. `p_a = 1` gives `⟨0|M_{1,e}|0⟩ = 0`), so the
/// PSD block lives on a face and the primal has no interior point. Such
/// blocks are restricted to the span of the surviving basis vector; `|0⟩`
/// sits at real coordinates `{0, 2}` and `|1⟩` at `{1, 3}`.
fn faces(stats: &ObservedStats) -> [[bool; 2]; 2] {
    // allowed[b][j]: may M_{b,e} have support on |j⟩?
    let mut allowed = [[true; 2]; 2];
    let (pa, pb) = (stats.p_correct_a, stats.p_correct_b);
    if pa == 1.0 {
        allowed[1][0] = false;
    }
    if pa == 0.0 {
        allowed[0][0] = false;
    }
    if pb == 1.0 {
        allowed[0][1] = false;
    }
    if pb == 0.0 {
        allowed[1][1] = false;
    }
    allowed
}

fn reduced_problem(stats: &ObservedStats, phi_x: f64) -> (SdpProblem, Vec<f64>) {
    let full = guessing_problem(stats, phi_x);
    let allowed = faces(stats);
    let mut bases: Vec<Option<Block>> = vec![None; 5];
    for b in 0..2 {
        if allowed[b] == [true, true] {
            continue;
        }
        let coords: Vec<usize> = (0..4).filter(|&c| allowed[b][c % 2]).collect();
        let mut v = Block::zeros(4, coords.len());
        for (j, &c) in coords.iter().enumerate() {
            v[(c, j)] = 1.0;
        }
        for e in 0..2 {
            bases[blk(b, e)] = Some(v.clone());
        }
    }
    let (reduced, map) = full.restrict(&bases);
    // Completeness gives tr X_{b,e} ≤ 4 q_e ≤ 4 and tr X_LP = 1.
    let mut trace = vec![0.0; reduced.block_sizes.len()];
    for (k, r) in map.iter().enumerate() {
        if let Some(r) = r {
            trace[*r] = if k == LP { 1.0 } else { 4.0 };
        }
    }
    (reduced.without_dependent_constraints(), trace)
}

/// Bounds the guessing probability for `stats`; see the module docs.
pub fn solve_guessing_with(stats: &ObservedStats, options: &GuessingOptions) -> Result<PrivacyCertificate> {
    stats.validate()?;
    let (problem, trace) = reduced_problem(stats, options.phi_x);
    let sol = sdp::solve(&problem, &options.solver)?;
    let dual = -problem.safe_dual_bound(&sol.y, &trace);
    let primal = -sol.primal_objective;
    let p_guess = dual.min(1.0);
    let h_min = -p_guess.log2();
    let pf = private_fraction(h_min.clamp(0.0, 1.0), stats.multiphoton_fraction, options.penalty_mode)?;
    Ok(PrivacyCertificate {
        p_guess,
        primal_value: primal,
        duality_gap: (p_guess - primal).max(0.0),
        h_min,
        private_fraction: pf,
        penalty_mode: options.penalty_mode,
        inputs: *stats,
        diagnostics: SolverDiagnostics {
            iterations: sol.iterations,
            primal_residual: sol.primal_residual,
            dual_residual: sol.dual_residual,
            raw_dual: -sol.dual_objective,
        },
    })
}

pub fn solve_guessing(stats: &ObservedStats) -> Result<PrivacyCertificate> {
    solve_guessing_with(stats, &GuessingOptions::default())
}
