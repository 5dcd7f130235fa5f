//! Euler-Maruyama trajectories with counter-addressable randomness,
//! burn-in toward the scheme's invariant law, and the closed-form
//! Ornstein-Uhlenbeck transition used as a diagnostic oracle.

use crate::models::Model;
use crate::rng::NoiseStream;
pub use crate::rng::noise_value;
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

const DIVERGENCE_NORM: f64 = 1e12;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("non-finite state at step {step}: {state:?}")]
    NonFinite { step: usize, state: Vec<f64> },
    #[error("trajectory diverged at step {step} (||theta|| > 1e12)")]
    Diverged { step: usize },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
}

/// One Euler-Maruyama run: the recorded states theta_0..theta_m, the raw
/// standard-normal draws xi_1..xi_m that produced them (before
/// multiplication by sigma), and full seed provenance. Replaying the
/// recursion over (states[0], noises) reconstructs the states bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub eta: f64,
    pub m: usize,
    pub dim: usize,
    /// (m + 1) x dim, row k = theta_k.
    states: Vec<f64>,
    /// m x dim, row k = xi_{k+1}.
    noises: Vec<f64>,
    pub seed: u64,
    pub rep_index: u64,
    pub burn_in: usize,
}

impl Trajectory {
    #[inline]
    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k * self.dim..(k + 1) * self.dim]
    }

    /// The draw xi_{k+1} consumed between theta_k and theta_{k+1}.
    #[inline]
    pub fn noise(&self, k: usize) -> &[f64] {
        &self.noises[k * self.dim..(k + 1) * self.dim]
    }

    /// Runs the recursion from `x0` with an explicit noise matrix
    /// (`m` rows of `dim` draws); used for hand-checked cases and
    /// reconstruction tests.
    pub fn from_noise_sequence(
        model: &Model,
        eta: f64,
        x0: &[f64],
        noises: Vec<f64>,
    ) -> Result<Self, SimError> {
        let dim = model.dim();
        assert_eq!(x0.len(), dim);
        assert_eq!(noises.len() % dim, 0);
        let m = noises.len() / dim;
        let mut states = Vec::with_capacity((m + 1) * dim);
        states.extend_from_slice(x0);
        let mut gbuf = vec![0.0; dim];
        let mut next = vec![0.0; dim];
        for k in 0..m {
            let (theta, xi) = (&states[k * dim..(k + 1) * dim], &noises[k * dim..(k + 1) * dim]);
            em_step_into(model, theta, eta, xi, &mut gbuf, &mut next);
            check_state(&next, k + 1)?;
            states.extend_from_slice(&next);
        }
        Ok(Self {
            eta,
            m,
            dim,
            states,
            noises,
            seed: 0,
            rep_index: 0,
            burn_in: 0,
        })
    }
}

#[inline]
fn check_state(state: &[f64], step: usize) -> Result<(), SimError> {
    let mut norm_sq = 0.0;
    for &v in state {
        if !v.is_finite() {
            return Err(SimError::NonFinite {
                step,
                state: state.to_vec(),
            });
        }
        norm_sq += v * v;
    }
    if norm_sq > DIVERGENCE_NORM * DIVERGENCE_NORM {
        return Err(SimError::Diverged { step });
    }
    Ok(())
}

/// In-place Euler-Maruyama step: out = theta + eta g(theta) + sqrt(eta) sigma xi.
#[inline]
pub fn em_step_into(
    model: &Model,
    theta: &[f64],
    eta: f64,
    xi: &[f64],
    gbuf: &mut [f64],
    out: &mut [f64],
) {
    model.drift_into(theta, gbuf);
    let sqrt_eta = eta.sqrt();
    let sigma = model.diffusion();
    let d = theta.len();
    for i in 0..d {
        let mut diffused = 0.0;
        for j in 0..d {
            diffused += sigma[(i, j)] * xi[j];
        }
        out[i] = theta[i] + eta * gbuf[i] + sqrt_eta * diffused;
    }
}

/// One Euler-Maruyama step; errors on a non-finite result.
pub fn em_step(
    theta: &DVector<f64>,
    eta: f64,
    model: &Model,
    xi: &DVector<f64>,
) -> Result<DVector<f64>, SimError> {
    if !(0.0..1.0).contains(&eta) || eta == 0.0 {
        return Err(SimError::InvalidParam(format!("eta must lie in (0,1), got {eta}")));
    }
    let d = model.dim();
    let mut gbuf = vec![0.0; d];
    let mut out = DVector::zeros(d);
    em_step_into(model, theta.as_slice(), eta, xi.as_slice(), &mut gbuf, out.as_mut_slice());
    for &v in out.iter() {
        if !v.is_finite() {
            return Err(SimError::NonFinite {
                step: 0,
                state: out.as_slice().to_vec(),
            });
        }
    }
    Ok(out)
}

/// Default chain length [eta^-2].
pub fn default_m(eta: f64) -> usize {
    (eta.powi(-2)).floor() as usize
}

/// Default burn-in of roughly ten relaxation times of the dissipative
/// drift, approximating theta_0 ~ pi_eta from the deterministic start 0.
pub fn default_burn_in(model: &Model, eta: f64) -> usize {
    let (k1, _) = model.dissipativity();
    (10.0 / (k1 * eta)).ceil() as usize
}

/// Runs `burn_in` unrecorded steps from x0 = 0 followed by `m` recorded
/// steps. A pure function of its arguments: identical inputs give
/// bit-identical trajectories regardless of scheduling.
pub fn simulate(
    model: &Model,
    eta: f64,
    m: usize,
    burn_in: usize,
    seed: u64,
    rep_index: u64,
) -> Result<Trajectory, SimError> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(SimError::InvalidParam(format!("eta must lie in (0,1), got {eta}")));
    }
    if m < 1 {
        return Err(SimError::InvalidParam("m must be >= 1".into()));
    }
    let dim = model.dim();
    let stream = NoiseStream::new(seed, rep_index);
    let mut current = vec![0.0; dim];
    let mut next = vec![0.0; dim];
    let mut gbuf = vec![0.0; dim];
    let mut xi = vec![0.0; dim];
    for step in 0..burn_in {
        stream.fill_step(step as u64, &mut xi);
        em_step_into(model, &current, eta, &xi, &mut gbuf, &mut next);
        check_state(&next, step)?;
        std::mem::swap(&mut current, &mut next);
    }
    let mut states = Vec::with_capacity((m + 1) * dim);
    let mut noises = Vec::with_capacity(m * dim);
    states.extend_from_slice(&current);
    for k in 0..m {
        let step = burn_in + k;
        stream.fill_step(step as u64, &mut xi);
        em_step_into(model, &current, eta, &xi, &mut gbuf, &mut next);
        check_state(&next, step)?;
        noises.extend_from_slice(&xi);
        states.extend_from_slice(&next);
        std::mem::swap(&mut current, &mut next);
    }
    Ok(Trajectory {
        eta,
        m,
        dim,
        states,
        noises,
        seed,
        rep_index,
        burn_in,
    })
}

/// Exact transition of the scalar Ornstein-Uhlenbeck diffusion
/// dX = -a X dt + s dB over time `delta_t`:
/// X' = e^(-a dt) X + xi sqrt(s^2 (1 - e^(-2 a dt)) / (2a)).
pub fn ou_exact_step(
    theta: &DVector<f64>,
    a: &DMatrix<f64>,
    sigma: &DMatrix<f64>,
    delta_t: f64,
    xi: &DVector<f64>,
) -> Result<DVector<f64>, SimError> {
    if theta.len() != 1 || a.nrows() != 1 || sigma.nrows() != 1 || xi.len() != 1 {
        return Err(SimError::InvalidParam(
            "the exact OU transition is implemented for scalar models only".into(),
        ));
    }
    if delta_t <= 0.0 {
        return Err(SimError::InvalidParam("delta_t must be positive".into()));
    }
    let (a, s) = (a[(0, 0)], sigma[(0, 0)]);
    let decay = (-a * delta_t).exp();
    let sd = (s * s * (1.0 - (-2.0 * a * delta_t).exp()) / (2.0 * a)).sqrt();
    Ok(DVector::from_element(1, decay * theta[0] + sd * xi[0]))
}
