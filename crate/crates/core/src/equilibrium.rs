//! Maximal endemic equilibria.
//!
//! The map `Phi(g)_i = T_i / (gamma_i + T_i)`, `T = sum_j k_ij eta_j g_j mu_j`,
//! is order preserving on `[0, 1]^n` and `Phi(1) <= 1`, so iterating it from
//! the all-infected state decreases monotonically to the greatest fixed
//! point. Its fixed points are exactly the zeros of `F_eta`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{self, field_into};
use crate::error::{Error, Result};
use crate::model::{check_len, sup_norm, Profile, SisModel};
use crate::spectral::effective_reproduction_number;
use crate::stability::linearize;

pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
/// Fixed-point iteration stops once the sup-norm change drops below this.
pub const STEP_TOLERANCE: f64 = 1e-13;
pub const MAX_ITERATIONS: usize = 1_000_000;
/// Half-width of the band around `R_e = 1` in which results are flagged near-critical.
pub const NEAR_CRITICAL_BAND: f64 = 1e-6;
pub const MAX_BLOCKS: usize = 20;
const MAX_NEWTON_STEPS: usize = 50;
const MAX_DAMPING_HALVINGS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    FixedPoint,
    Ode,
    FixedPointPlusNewton,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult {
    pub g: Profile,
    /// `||F_eta(g)||_inf`.
    pub residual_sup: f64,
    pub iterations: usize,
    pub method: SolveMethod,
    /// `R_e(eta)` of the strategy the equilibrium was computed for.
    pub reproduction_number: f64,
    /// Set when `R_e(eta)` is within [`NEAR_CRITICAL_BAND`] of 1: the
    /// equilibrium may then be numerically indistinguishable from zero.
    pub near_critical: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub sup: f64,
    pub per_type: Vec<f64>,
}

/// The maximal equilibrium `g_eta` of the dynamics vaccinated by `eta`.
///
/// When `R_e(eta) <= 1` the maximal equilibrium is the disease-free state
/// and zero is returned directly. Otherwise the monotone iteration runs from
/// the all-ones profile and is polished by damped Newton steps if its
/// residual is not yet below [`RESIDUAL_TOLERANCE`].
pub fn maximal_equilibrium(model: &SisModel, eta: &Profile) -> Result<EquilibriumResult> {
    let n = model.n();
    check_len(n, eta.len())?;
    let re = effective_reproduction_number(model, eta)?;
    let near_critical = (re - 1.0).abs() < NEAR_CRITICAL_BAND;
    if re <= 1.0 {
        return Ok(EquilibriumResult {
            g: Profile::zeros(n),
            residual_sup: 0.0,
            iterations: 0,
            method: SolveMethod::FixedPoint,
            reproduction_number: re,
            near_critical,
        });
    }

    let (k, mu, gamma) = (model.kernel(), model.weights(), model.gamma());
    let a = DMatrix::from_fn(n, n, |i, j| k[(i, j)] * eta.values()[j] * mu[j]);
    let mut g = vec![1.0; n];
    let mut next = vec![0.0; n];
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut change = 0.0f64;
        for i in 0..n {
            let t: f64 = (0..n).map(|j| a[(i, j)] * g[j]).sum();
            next[i] = t / (gamma[i] + t);
            change = change.max((next[i] - g[i]).abs());
        }
        core::mem::swap(&mut g, &mut next);
        if change < STEP_TOLERANCE {
            break;
        }
    }

    let mut method = SolveMethod::FixedPoint;
    let mut residual = residual_sup(model, eta.values(), &g);
    if residual >= RESIDUAL_TOLERANCE {
        if let Some((polished, r)) = newton_polish(model, eta, g.clone(), residual) {
            g = polished;
            residual = r;
            method = SolveMethod::FixedPointPlusNewton;
        }
    }
    let g = Profile::clamped(g);
    if residual >= RESIDUAL_TOLERANCE {
        return Err(Error::EquilibriumNotConverged {
            best: g,
            residual,
            iterations,
        });
    }
    Ok(EquilibriumResult {
        g,
        residual_sup: residual,
        iterations,
        method,
        reproduction_number: re,
        near_critical,
    })
}

/// The maximal equilibrium as the long-time limit of the flow started from `1`.
pub fn maximal_equilibrium_ode(
    model: &SisModel,
    eta: &Profile,
    t_end: f64,
) -> Result<EquilibriumResult> {
    let re = effective_reproduction_number(model, eta)?;
    let dt = dynamics::default_step(model);
    let traj = dynamics::integrate(model, eta, &Profile::ones(model.n()), t_end, dt)?;
    let g = traj.final_state().clone();
    let residual = residual_sup(model, eta.values(), g.values());
    Ok(EquilibriumResult {
        g,
        residual_sup: residual,
        iterations: libm::ceil(t_end / dt) as usize,
        method: SolveMethod::Ode,
        reproduction_number: re,
        near_critical: (re - 1.0).abs() < NEAR_CRITICAL_BAND,
    })
}

pub fn verify_equilibrium(model: &SisModel, eta: &Profile, g: &Profile) -> Result<ResidualReport> {
    let per_type = dynamics::vaccinated_vector_field(model, eta, g)?;
    Ok(ResidualReport {
        sup: sup_norm(&per_type),
        per_type,
    })
}

/// All equilibria obtained by switching isolated blocks on or off.
///
/// Entry `mask` of the result carries the within-block maximal equilibrium
/// on every block whose bit is set in `mask` and zero elsewhere, so the first
/// entry is `0` and the last is the maximal equilibrium of the whole model.
pub fn block_equilibria(model: &SisModel, blocks: &[Vec<usize>]) -> Result<Vec<Profile>> {
    let n = model.n();
    if blocks.len() > MAX_BLOCKS {
        return Err(Error::TooManyBlocks {
            blocks: blocks.len(),
            max: MAX_BLOCKS,
        });
    }
    let owner = block_owner(n, blocks)?;
    let k = model.kernel();
    for col in 0..n {
        for row in 0..n {
            if owner[row] != owner[col] && k[(row, col)] != 0.0 {
                return Err(Error::BlocksNotIsolated {
                    row,
                    col,
                    value: k[(row, col)],
                });
            }
        }
    }

    let mut per_block = Vec::with_capacity(blocks.len());
    for block in blocks {
        let eta = Profile::indicator(n, block);
        per_block.push(maximal_equilibrium(model, &eta)?.g);
    }
    let mut out = Vec::with_capacity(1 << blocks.len());
    for mask in 0usize..(1 << blocks.len()) {
        let mut values = vec![0.0; n];
        for (b, block) in blocks.iter().enumerate() {
            if mask & (1 << b) != 0 {
                for &i in block {
                    values[i] = per_block[b].values()[i];
                }
            }
        }
        out.push(Profile::clamped(values));
    }
    Ok(out)
}

fn block_owner(n: usize, blocks: &[Vec<usize>]) -> Result<Vec<usize>> {
    let mut owner = vec![usize::MAX; n];
    for (b, block) in blocks.iter().enumerate() {
        if block.is_empty() {
            return Err(Error::InvalidParameter(alloc::format!(
                "block {b} is empty"
            )));
        }
        for &i in block {
            if i >= n {
                return Err(Error::InvalidParameter(alloc::format!(
                    "type index {i} out of range for {n} types"
                )));
            }
            if owner[i] != usize::MAX {
                return Err(Error::InvalidParameter(alloc::format!(
                    "type {i} belongs to more than one block"
                )));
            }
            owner[i] = b;
        }
    }
    if let Some(i) = owner.iter().position(|&b| b == usize::MAX) {
        return Err(Error::InvalidParameter(alloc::format!(
            "type {i} is in no block"
        )));
    }
    Ok(owner)
}

pub(crate) fn residual_sup(model: &SisModel, eta: &[f64], g: &[f64]) -> f64 {
    let mut f = vec![0.0; model.n()];
    field_into(model, Some(eta), g, &mut f);
    sup_norm(&f)
}

fn newton_polish(
    model: &SisModel,
    eta: &Profile,
    mut g: Vec<f64>,
    mut residual: f64,
) -> Option<(Vec<f64>, f64)> {
    let n = model.n();
    let mut f = vec![0.0; n];
    let mut improved = false;
    for _ in 0..MAX_NEWTON_STEPS {
        if residual < RESIDUAL_TOLERANCE * 1e-3 {
            break;
        }
        field_into(model, Some(eta.values()), &g, &mut f);
        let base = Profile::clamped(g.clone());
        let jacobian = linearize(model, eta, &base).ok()?.into_matrix();
        let rhs = DVector::from_iterator(n, f.iter().map(|v| -v));
        let delta = jacobian.lu().solve(&rhs)?;
        let mut damping = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_DAMPING_HALVINGS {
            let trial: Vec<f64> = g
                .iter()
                .zip(delta.iter())
                .map(|(g, d)| (g + damping * d).clamp(0.0, 1.0))
                .collect();
            let r = residual_sup(model, eta.values(), &trial);
            if r < residual {
                g = trial;
                residual = r;
                accepted = true;
                improved = true;
                break;
            }
            damping *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    improved.then_some((g, residual))
}
