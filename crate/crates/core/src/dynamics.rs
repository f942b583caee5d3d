//! SIS vector fields and fixed-step trajectories in `[0, 1]^n`.
//!
//! `F_eta(g)_i = (1 - g_i) sum_j k_ij eta_j g_j mu_j - gamma_i g_i`, with
//! `eta = 1` giving the unvaccinated field `F`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{check_len, clamp_unit, Profile, SisModel};

/// A step is retried at half size when clamping would move a state by more than this.
pub const CLAMP_LIMIT: f64 = 1e-10;
pub const MAX_HALVINGS: u32 = 20;
pub const MAX_SAVED_STATES: usize = 10_000;

/// Saved states of an integrated trajectory, starting at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<Profile>,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Profile] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &Profile {
        self.states
            .last()
            .expect("trajectory holds the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self
            .times
            .last()
            .expect("trajectory holds the initial time")
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &Profile)> {
        self.times.iter().copied().zip(&self.states)
    }
}

pub fn vector_field(model: &SisModel, g: &Profile) -> Result<Vec<f64>> {
    check_len(model.n(), g.len())?;
    let mut out = vec![0.0; model.n()];
    field_into(model, None, g.values(), &mut out);
    Ok(out)
}

pub fn vaccinated_vector_field(model: &SisModel, eta: &Profile, g: &Profile) -> Result<Vec<f64>> {
    check_len(model.n(), g.len())?;
    check_len(model.n(), eta.len())?;
    let mut out = vec![0.0; model.n()];
    field_into(model, Some(eta.values()), g.values(), &mut out);
    Ok(out)
}

pub(crate) fn field_into(model: &SisModel, eta: Option<&[f64]>, g: &[f64], out: &mut [f64]) {
    let (k, mu, gamma) = (model.kernel(), model.weights(), model.gamma());
    let n = model.n();
    for i in 0..n {
        let mut force = 0.0;
        for j in 0..n {
            let e = eta.map_or(1.0, |eta| eta[j]);
            force += k[(i, j)] * e * g[j] * mu[j];
        }
        out[i] = (1.0 - g[i]) * force - gamma[i] * g[i];
    }
}

/// `0.01 / max(gamma_i, sum_j k_ij mu_j)`.
pub fn default_step(model: &SisModel) -> f64 {
    let n = model.n();
    let mut rate = model.gamma().iter().copied().fold(0.0, f64::max);
    for i in 0..n {
        let row: f64 = (0..n)
            .map(|j| model.kernel()[(i, j)] * model.weights()[j])
            .sum();
        rate = rate.max(row);
    }
    0.01 / rate
}

/// `50 / min(gamma_i)`, the default horizon for convergence runs.
pub fn default_horizon(model: &SisModel) -> f64 {
    50.0 / model.gamma().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Classical RK4 with a fixed step no larger than `dt`, landing exactly on `t_end`.
///
/// States are clamped into `[0, 1]` after each step. If clamping would move
/// a state by more than [`CLAMP_LIMIT`], the step is redone as two half
/// steps, recursively, up to [`MAX_HALVINGS`] times. At most
/// [`MAX_SAVED_STATES`] states are kept (evenly decimated, always including
/// the first and the last).
pub fn integrate(
    model: &SisModel,
    eta: &Profile,
    u0: &Profile,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    let n = model.n();
    check_len(n, eta.len())?;
    check_len(n, u0.len())?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!(
            "t_end must be positive, got {t_end}"
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!(
            "dt must be positive, got {dt}"
        )));
    }

    let steps = libm::ceil(t_end / dt).max(1.0) as usize;
    let h = t_end / steps as f64;
    let stride = steps.div_ceil(MAX_SAVED_STATES - 1).max(1);

    let mut stepper = Rk4::new(model, eta.values());
    let mut u = u0.values().to_vec();
    let mut times = Vec::with_capacity(steps / stride + 2);
    let mut states = Vec::with_capacity(steps / stride + 2);
    times.push(0.0);
    states.push(u0.clone());
    for step in 1..=steps {
        let t0 = (step - 1) as f64 * h;
        u = stepper.advance(&u, t0, h, 0)?;
        if step % stride == 0 || step == steps {
            times.push(if step == steps {
                t_end
            } else {
                step as f64 * h
            });
            states.push(Profile::clamped(u.clone()));
        }
    }
    Ok(Trajectory { times, states })
}

struct Rk4<'a> {
    model: &'a SisModel,
    eta: &'a [f64],
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl<'a> Rk4<'a> {
    fn new(model: &'a SisModel, eta: &'a [f64]) -> Self {
        let n = model.n();
        Self {
            model,
            eta,
            k: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]],
            tmp: vec![0.0; n],
        }
    }

    fn raw_step(&mut self, u: &[f64], h: f64) -> Vec<f64> {
        let eta = Some(self.eta);
        field_into(self.model, eta, u, &mut self.k[0]);
        for (t, (u, k)) in self.tmp.iter_mut().zip(u.iter().zip(&self.k[0])) {
            *t = u + 0.5 * h * k;
        }
        field_into(self.model, eta, &self.tmp, &mut self.k[1]);
        for (t, (u, k)) in self.tmp.iter_mut().zip(u.iter().zip(&self.k[1])) {
            *t = u + 0.5 * h * k;
        }
        field_into(self.model, eta, &self.tmp, &mut self.k[2]);
        for (t, (u, k)) in self.tmp.iter_mut().zip(u.iter().zip(&self.k[2])) {
            *t = u + h * k;
        }
        field_into(self.model, eta, &self.tmp, &mut self.k[3]);
        let [k1, k2, k3, k4] = &self.k;
        (0..u.len())
            .map(|i| u[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect()
    }

    fn advance(&mut self, u: &[f64], t: f64, h: f64, halvings: u32) -> Result<Vec<f64>> {
        let mut next = self.raw_step(u, h);
        let overshoot = next.iter().fold(0.0f64, |acc, v| acc.max(-v).max(v - 1.0));
        if overshoot <= CLAMP_LIMIT {
            for v in &mut next {
                *v = clamp_unit(*v);
            }
            return Ok(next);
        }
        if halvings >= MAX_HALVINGS {
            return Err(Error::StepSizeUnderflow {
                t,
                dt: h,
                halvings,
                limit: CLAMP_LIMIT,
            });
        }
        let half = 0.5 * h;
        let mid = self.advance(u, t, half, halvings + 1)?;
        self.advance(&mid, t + half, half, halvings + 1)
    }
}
