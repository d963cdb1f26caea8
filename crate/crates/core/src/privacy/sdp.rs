//! Small dense semidefinite programs.
//!
//! Primal: minimise `⟨C, X⟩` subject to `⟨A_i, X⟩ = b_i` and `X ⪰ 0`, with
//! `X` block diagonal. Dual: maximise `bᵀy` subject to `C - Σ y_i A_i = Z ⪰ 0`.
//!
//! The solver is an infeasible primal-dual path-following method with the
//! HKM search direction and Mehrotra's predictor-corrector. Each iteration
//! forms the Schur complement `M_ij = tr(A_i X A_j Z⁻¹)` and solves it by
//! Cholesky. Problems here have a few dozen constraints and blocks of size
//! at most 4, so everything is dense.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Block = DMatrix<f64>;

/// One equality constraint: the blocks of `A_i` that are nonzero, and `b_i`.
#[derive(Clone, Debug)]
pub struct Constraint {
    pub terms: Vec<(usize, Block)>,
    pub rhs: f64,
}

#[derive(Clone, Debug)]
pub struct SdpProblem {
    pub block_sizes: Vec<usize>,
    pub objective: Vec<Block>,
    pub constraints: Vec<Constraint>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Relative primal and dual residual target.
    pub feasibility_tol: f64,
    /// Relative duality gap target.
    pub gap_tol: f64,
    /// Looser thresholds accepted when progress stalls; the best iterate
    /// seen is returned.
    pub fallback_feasibility_tol: f64,
    pub fallback_gap_tol: f64,
    pub step_fraction: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iterations: 100,
            feasibility_tol: 1e-10,
            gap_tol: 1e-10,
            fallback_feasibility_tol: 1e-9,
            fallback_gap_tol: 1e-7,
            step_fraction: 0.95,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub x: Vec<Block>,
    pub y: DVector<f64>,
    pub z: Vec<Block>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

fn inner(a: &[Block], b: &[Block]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn norm(a: &[Block]) -> f64 {
    inner(a, a).sqrt()
}

fn symmetrize(m: &Block) -> Block {
    (m + m.transpose()) * 0.5
}

impl SdpProblem {
    pub fn validate(&self) -> Result<()> {
        if self.objective.len() != self.block_sizes.len() {
            return Err(Error::param("objective has the wrong number of blocks"));
        }
        let shape_ok = |k: usize, m: &Block| {
            k < self.block_sizes.len() && m.nrows() == self.block_sizes[k] && m.ncols() == self.block_sizes[k]
        };
        for (k, c) in self.objective.iter().enumerate() {
            if !shape_ok(k, c) {
                return Err(Error::param(format!("objective block {k} has the wrong shape")));
            }
        }
        for (i, con) in self.constraints.iter().enumerate() {
            for (k, a) in &con.terms {
                if !shape_ok(*k, a) {
                    return Err(Error::param(format!("constraint {i} block {k} has the wrong shape")));
                }
            }
        }
        Ok(())
    }

    fn apply(&self, x: &[Block]) -> DVector<f64> {
        DVector::from_iterator(
            self.constraints.len(),
            self.constraints
                .iter()
                .map(|c| c.terms.iter().map(|(k, a)| a.dot(&x[*k])).sum::<f64>()),
        )
    }

    fn adjoint(&self, y: &DVector<f64>) -> Vec<Block> {
        let mut out: Vec<Block> = self.block_sizes.iter().map(|&n| Block::zeros(n, n)).collect();
        for (c, &yi) in self.constraints.iter().zip(y.iter()) {
            for (k, a) in &c.terms {
                out[*k] += a * yi;
            }
        }
        out
    }

    fn rhs(&self) -> DVector<f64> {
        DVector::from_iterator(self.constraints.len(), self.constraints.iter().map(|c| c.rhs))
    }

    /// `bᵀy`.
    pub fn dual_value(&self, y: &DVector<f64>) -> f64 {
        self.rhs().dot(y)
    }

    /// `C - Aᵀy`.
    pub fn dual_slack(&self, y: &DVector<f64>) -> Vec<Block> {
        let aty = self.adjoint(y);
        self.objective.iter().zip(&aty).map(|(c, a)| symmetrize(&(c - a))).collect()
    }
}

impl SdpProblem {
    /// Restricts block `k` to `X_k = V_k Y_k V_kᵀ` for each `Some(V_k)`. A
    /// basis with no columns removes the block. Returns the reduced problem
    /// and, per original block, its index in the reduced problem.
    pub fn restrict(&self, bases: &[Option<Block>]) -> (SdpProblem, Vec<Option<usize>>) {
        let mut map = Vec::with_capacity(self.block_sizes.len());
        let mut sizes = Vec::new();
        for (k, &n) in self.block_sizes.iter().enumerate() {
            let dim = bases.get(k).and_then(|b| b.as_ref()).map_or(n, |v| v.ncols());
            if dim == 0 {
                map.push(None);
            } else {
                map.push(Some(sizes.len()));
                sizes.push(dim);
            }
        }
        let reduce = |k: usize, m: &Block| match bases.get(k).and_then(|b| b.as_ref()) {
            Some(v) => symmetrize(&(v.transpose() * m * v)),
            None => m.clone(),
        };
        let objective = self
            .objective
            .iter()
            .enumerate()
            .filter(|(k, _)| map[*k].is_some())
            .map(|(k, c)| reduce(k, c))
            .collect();
        let constraints = self
            .constraints
            .iter()
            .map(|con| Constraint {
                terms: con
                    .terms
                    .iter()
                    .filter_map(|(k, a)| map[*k].map(|r| (r, reduce(*k, a))))
                    .filter(|(_, a)| a.norm() > 0.0)
                    .collect(),
                rhs: con.rhs,
            })
            .collect();
        (SdpProblem { block_sizes: sizes, objective, constraints }, map)
    }

    /// Drops constraints that are linearly dependent on earlier ones
    /// (modified Gram-Schmidt on the flattened `A_i`). Dependent rows of a
    /// feasible problem carry no information, and keeping them would make
    /// the Schur complement singular.
    pub fn without_dependent_constraints(&self) -> SdpProblem {
        let flat = |c: &Constraint| -> DVector<f64> {
            let mut offsets = vec![0usize];
            for n in &self.block_sizes {
                offsets.push(offsets.last().unwrap() + n * n);
            }
            let mut v = DVector::zeros(*offsets.last().unwrap());
            for (k, a) in &c.terms {
                for (i, x) in a.iter().enumerate() {
                    v[offsets[*k] + i] += x;
                }
            }
            v
        };
        let mut basis: Vec<DVector<f64>> = Vec::new();
        let mut kept = Vec::new();
        for c in &self.constraints {
            let v = flat(c);
            let scale = v.norm();
            let mut r = v;
            for q in &basis {
                let d = q.dot(&r);
                r -= q * d;
            }
            let rn = r.norm();
            if scale > 0.0 && rn > 1e-10 * scale {
                basis.push(r / rn);
                kept.push(c.clone());
            }
        }
        SdpProblem {
            block_sizes: self.block_sizes.clone(),
            objective: self.objective.clone(),
            constraints: kept,
        }
    }

    /// Rigorous lower bound on the primal optimum from any `y`, given
    /// `tr(X_k) ≤ trace_bounds[k]` for every feasible `X`:
    /// `⟨C, X⟩ = bᵀy + ⟨Z, X⟩ ≥ bᵀy + Σ_k T_k min(0, λmin(Z_k))`.
    pub fn safe_dual_bound(&self, y: &DVector<f64>, trace_bounds: &[f64]) -> f64 {
        let z = self.dual_slack(y);
        let penalty: f64 = z
            .iter()
            .zip(trace_bounds)
            .map(|(zk, t)| t * zk.clone().symmetric_eigenvalues().min().min(0.0))
            .sum();
        self.dual_value(y) + penalty
    }
}

/// Largest `α ≤ 1 / fraction` with `X + α ΔX ⪰ 0`, scaled by `fraction`
/// and capped at 1.
fn step_length(x: &[Block], dx: &[Block], fraction: f64) -> Option<f64> {
    let mut alpha_max = f64::INFINITY;
    for (xk, dk) in x.iter().zip(dx) {
        let li = xk.clone().cholesky()?.l().try_inverse()?;
        let s = symmetrize(&(&li * dk * li.transpose()));
        let lmin = s.symmetric_eigenvalues().min();
        if lmin < 0.0 {
            alpha_max = alpha_max.min(-1.0 / lmin);
        }
    }
    Some((fraction * alpha_max).min(1.0))
}

#[derive(Clone, Copy)]
struct IterStats {
    pres: f64,
    dres: f64,
    gap: f64,
    pobj: f64,
    dobj: f64,
    iter: usize,
}

impl IterStats {
    fn merit(&self) -> f64 {
        self.pres.max(self.dres).max(self.gap)
    }

    fn meets(&self, feas: f64, gap: f64) -> bool {
        self.pres <= feas && self.dres <= feas && self.gap <= gap
    }
}

enum SchurSolver {
    Cholesky(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::linalg::FullPivLU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl SchurSolver {
    fn solve(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        let x = match self {
            SchurSolver::Cholesky(ch) => ch.solve(rhs),
            SchurSolver::Lu(lu) => lu.solve(rhs)?,
        };
        x.iter().all(|v| v.is_finite()).then_some(x)
    }
}

struct Direction {
    dx: Vec<Block>,
    dy: DVector<f64>,
    dz: Vec<Block>,
}

pub fn solve(problem: &SdpProblem, options: &SolverOptions) -> Result<SdpSolution> {
    problem.validate()?;
    let m = problem.constraints.len();
    let n_total: usize = problem.block_sizes.iter().sum();
    let b = problem.rhs();
    let c = &problem.objective;
    let b_scale = 1.0 + b.norm();
    let c_scale = 1.0 + norm(c);

    let mut x: Vec<Block> = problem.block_sizes.iter().map(|&n| Block::identity(n, n)).collect();
    let mut z = x.clone();
    let mut y = DVector::zeros(m);

    let mut best: Option<(IterStats, Vec<Block>, DVector<f64>, Vec<Block>)> = None;
    for iter in 0..=options.max_iterations {
        let rp = &b - problem.apply(&x);
        let aty = problem.adjoint(&y);
        let rd: Vec<Block> = c
            .iter()
            .zip(&z)
            .zip(&aty)
            .map(|((ck, zk), ak)| ck - zk - ak)
            .collect();
        let pobj = inner(c, &x);
        let dobj = b.dot(&y);
        let stats = IterStats {
            pres: rp.norm() / b_scale,
            dres: norm(&rd) / c_scale,
            gap: (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
            pobj,
            dobj,
            iter,
        };
        if best.as_ref().is_none_or(|b| stats.merit() < b.0.merit()) {
            best = Some((stats, x.clone(), y.clone(), z.clone()));
        }
        if stats.meets(options.feasibility_tol, options.gap_tol) || iter == options.max_iterations {
            break;
        }

        let mu = inner(&x, &z) / n_total as f64;
        let zinv: Vec<Block> = match z.iter().map(|zk| zk.clone().cholesky().map(|ch| ch.inverse())).collect() {
            Some(v) => v,
            None => break,
        };

        // Schur complement M_ij = Σ_k tr(A_ik X_k A_jk Z_k⁻¹).
        let p: Vec<Vec<(usize, Block)>> = problem
            .constraints
            .iter()
            .map(|con| {
                con.terms
                    .iter()
                    .map(|(k, a)| (*k, &x[*k] * a * &zinv[*k]))
                    .collect()
            })
            .collect();
        let mut schur = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let mut s = 0.0;
                for (ki, ai) in &problem.constraints[i].terms {
                    for (kj, pj) in &p[j] {
                        if ki == kj {
                            s += ai.dot(pj);
                        }
                    }
                }
                schur[(i, j)] = s;
                schur[(j, i)] = s;
            }
        }
        // Near the optimum the Schur matrix loses definiteness to rounding;
        // LU keeps the iteration going a little further.
        let solver = match schur.clone().cholesky() {
            Some(ch) => SchurSolver::Cholesky(ch),
            None => SchurSolver::Lu(schur.clone().full_piv_lu()),
        };

        let xrdz: Vec<Block> = x
            .iter()
            .zip(&rd)
            .zip(&zinv)
            .map(|((xk, rk), zi)| xk * rk * zi)
            .collect();
        let direction = |k_mats: &[Block]| -> Option<Direction> {
            // ΔX = K Z⁻¹ - X ΔZ Z⁻¹ with ΔZ = R_d - AᵀΔy.
            let kz: Vec<Block> = k_mats.iter().zip(&zinv).map(|(km, zi)| km * zi).collect();
            let base: Vec<Block> = kz.iter().zip(&xrdz).map(|(a, b)| a - b).collect();
            let rhs = &rp - problem.apply(&base);
            let dy = solver.solve(&rhs)?;
            let atdy = problem.adjoint(&dy);
            let dz: Vec<Block> = rd.iter().zip(&atdy).map(|(r, a)| symmetrize(&(r - a))).collect();
            let dx: Vec<Block> = base
                .iter()
                .zip(&x)
                .zip(&atdy)
                .zip(&zinv)
                .map(|(((bk, xk), ak), zi)| symmetrize(&(bk + xk * ak * zi)))
                .collect();
            Some(Direction { dx, dy, dz })
        };

        let xz: Vec<Block> = x.iter().zip(&z).map(|(a, b)| a * b).collect();
        let k_aff: Vec<Block> = xz.iter().map(|m| -m).collect();
        let Some(aff) = direction(&k_aff) else { break };
        let Some(ap) = step_length(&x, &aff.dx, 1.0) else { break };
        let Some(ad) = step_length(&z, &aff.dz, 1.0) else { break };
        let x_aff: Vec<Block> = x.iter().zip(&aff.dx).map(|(a, d)| a + d * ap).collect();
        let z_aff: Vec<Block> = z.iter().zip(&aff.dz).map(|(a, d)| a + d * ad).collect();
        let mu_aff = inner(&x_aff, &z_aff) / n_total as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        let k_corr: Vec<Block> = xz
            .iter()
            .zip(&aff.dx)
            .zip(&aff.dz)
            .map(|((m, dx), dz)| {
                let n = m.nrows();
                Block::identity(n, n) * (sigma * mu) - m - dx * dz
            })
            .collect();
        let Some(dir) = direction(&k_corr) else { break };
        let Some(ap) = step_length(&x, &dir.dx, options.step_fraction) else { break };
        let Some(ad) = step_length(&z, &dir.dz, options.step_fraction) else { break };
        if ap < 1e-14 && ad < 1e-14 {
            break;
        }
        for k in 0..x.len() {
            x[k] += &dir.dx[k] * ap;
            z[k] += &dir.dz[k] * ad;
        }
        y += &dir.dy * ad;
    }
    let (stats, x, y, z) = best.expect("at least one iteration runs");
    if !stats.meets(options.fallback_feasibility_tol, options.fallback_gap_tol) {
        return Err(Error::NonConvergence {
            iterations: stats.iter,
            primal_residual: stats.pres,
            dual_residual: stats.dres,
            gap: stats.gap,
        });
    }
    Ok(SdpSolution {
        x,
        y,
        z,
        primal_objective: stats.pobj,
        dual_objective: stats.dobj,
        iterations: stats.iter,
        primal_residual: stats.pres,
        dual_residual: stats.dres,
    })
}
