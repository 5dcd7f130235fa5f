//! SDE model definitions: drift, constant diffusion, declared regularity
//! constants, and sampled diagnostics for the drift assumptions
//! (global Lipschitz continuity and dissipativity).

use crate::numerics::{solve_lyapunov, NumericsError};
use crate::rng;
use nalgebra::{DMatrix, DVector};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

pub type DriftFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
pub type JacobianFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("diffusion matrix is not invertible (|det| = {0:.3e} <= 1e-12)")]
    SingularDiffusion(f64),
    #[error("symmetric part of the drift matrix is not positive definite (min eigenvalue {0:.6e})")]
    NonPositiveDefiniteDrift(f64),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Exact facts about a model used as test oracles: the linear drift matrix
/// when the drift is linear, exact invariant means of registered
/// observables, and the stationary covariance from the Lyapunov solve.
#[derive(Debug, Clone)]
pub struct AnalyticFacts {
    pub linear_drift_matrix: Option<DMatrix<f64>>,
    pub invariant_mean_of: BTreeMap<String, f64>,
    pub stationary_covariance: Option<DMatrix<f64>>,
}

/// An SDE specification: drift g, constant invertible diffusion, and the
/// declared constants of the drift assumptions. Values are immutable after
/// construction and safe to share across replications; drift evaluation is
/// reentrant.
#[derive(Clone)]
pub struct Model {
    dim: usize,
    drift: DriftFn,
    drift_jacobian: Option<JacobianFn>,
    diffusion: DMatrix<f64>,
    lipschitz_l: f64,
    dissipativity_k1: f64,
    dissipativity_k2: f64,
    analytic: Option<AnalyticFacts>,
}

impl fmt::Debug for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Model")
            .field("dim", &self.dim)
            .field("lipschitz_l", &self.lipschitz_l)
            .field("k1", &self.dissipativity_k1)
            .field("k2", &self.dissipativity_k2)
            .finish()
    }
}

impl Model {
    pub fn new(
        dim: usize,
        drift: DriftFn,
        drift_jacobian: Option<JacobianFn>,
        diffusion: DMatrix<f64>,
        lipschitz_l: f64,
        k1: f64,
        k2: f64,
        analytic: Option<AnalyticFacts>,
    ) -> Result<Self, ModelError> {
        assert!(dim >= 1 && diffusion.nrows() == dim && diffusion.ncols() == dim);
        let det = diffusion.determinant();
        if det.abs() <= 1e-12 {
            return Err(ModelError::SingularDiffusion(det.abs()));
        }
        if lipschitz_l <= 0.0 || k1 <= 0.0 || k2 < 0.0 {
            return Err(ModelError::InvalidParam(format!(
                "constants must satisfy L > 0, K1 > 0, K2 >= 0 (got L={lipschitz_l}, K1={k1}, K2={k2})"
            )));
        }
        Ok(Self {
            dim,
            drift,
            drift_jacobian,
            diffusion,
            lipschitz_l,
            dissipativity_k1: k1,
            dissipativity_k2: k2,
            analytic,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn diffusion(&self) -> &DMatrix<f64> {
        &self.diffusion
    }

    pub fn lipschitz_l(&self) -> f64 {
        self.lipschitz_l
    }

    /// Declared constants (K1, K2) of the dissipativity assumption.
    pub fn dissipativity(&self) -> (f64, f64) {
        (self.dissipativity_k1, self.dissipativity_k2)
    }

    pub fn analytic(&self) -> Option<&AnalyticFacts> {
        self.analytic.as_ref()
    }

    pub fn drift_jacobian(&self) -> Option<&JacobianFn> {
        self.drift_jacobian.as_ref()
    }

    #[inline]
    pub fn drift_into(&self, x: &[f64], out: &mut [f64]) {
        (self.drift)(x, out);
    }

    pub fn drift(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim);
        (self.drift)(x.as_slice(), out.as_mut_slice());
        out
    }

    /// 1D drift shortcut used by the Stein quadrature solver.
    pub fn drift_1d(&self, x: f64) -> f64 {
        debug_assert_eq!(self.dim, 1);
        let mut out = [0.0];
        (self.drift)(&[x], &mut out);
        out[0]
    }

    /// 1D drift derivative; falls back to a central difference when no
    /// Jacobian handle was provided.
    pub fn drift_prime_1d(&self, x: f64) -> f64 {
        debug_assert_eq!(self.dim, 1);
        match &self.drift_jacobian {
            Some(jac) => jac(&[x])[(0, 0)],
            None => {
                let h = 1e-6 * (1.0 + x.abs());
                (self.drift_1d(x + h) - self.drift_1d(x - h)) / (2.0 * h)
            }
        }
    }
}

/// Builds the linear model g(x) = -A x with diffusion `sigma`. The declared
/// constants follow from the spectrum: L is the operator norm of A and
/// K1 = K2 = lambda_min(sym A), translating the squared dissipativity
/// -lambda ||dx||^2 into the unsquared form via the ||dx|| >< 1 case split.
pub fn make_linear_model(a: DMatrix<f64>, sigma: DMatrix<f64>) -> Result<Model, ModelError> {
    let d = a.nrows();
    assert!(a.is_square() && sigma.nrows() == d && sigma.ncols() == d);
    let sym = (&a + a.transpose()) * 0.5;
    let eig = sym.clone().symmetric_eigen();
    let lambda_min = eig.eigenvalues.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    if lambda_min <= 0.0 {
        return Err(ModelError::NonPositiveDefiniteDrift(lambda_min));
    }
    let op_norm = a
        .clone()
        .singular_values()
        .iter()
        .fold(0.0f64, |m, &v| m.max(v));
    let sigma_sq = &sigma * sigma.transpose();
    let cov = solve_lyapunov(&a, &sigma_sq)?;
    let cov = (&cov + cov.transpose()) * 0.5;

    let mut invariant_mean_of = BTreeMap::new();
    // pi of any linear observable vanishes; for the quadratic observables
    // registered by the harness pi(x^T M x) = tr(M Sigma_inf).
    invariant_mean_of.insert("x".to_string(), 0.0);
    invariant_mean_of.insert("x2".to_string(), cov.trace());

    let facts = AnalyticFacts {
        linear_drift_matrix: Some(a.clone()),
        invariant_mean_of,
        stationary_covariance: Some(cov),
    };
    let a_drift = a.clone();
    let drift: DriftFn = Arc::new(move |x: &[f64], out: &mut [f64]| {
        for i in 0..d {
            let mut acc = 0.0;
            for j in 0..d {
                acc -= a_drift[(i, j)] * x[j];
            }
            out[i] = acc;
        }
    });
    let a_jac = a.clone();
    let jacobian: JacobianFn = Arc::new(move |_x: &[f64]| -&a_jac);
    Model::new(
        d,
        drift,
        Some(jacobian),
        sigma,
        op_norm,
        lambda_min,
        lambda_min,
        Some(facts),
    )
}

/// Builds the 1D nonlinear model g(x) = -x + c tanh(x) with unit diffusion:
/// globally Lipschitz with L = 1 + c, dissipative with K1 = K2 = 1 - c
/// (g' <= -(1 - c) everywhere), and bounded second derivative.
pub fn make_tanh_model(c: f64) -> Result<Model, ModelError> {
    if !(0.0..1.0).contains(&c) {
        return Err(ModelError::InvalidParam(format!(
            "tanh mixing coefficient must lie in [0, 1), got {c}"
        )));
    }
    let drift: DriftFn = Arc::new(move |x: &[f64], out: &mut [f64]| {
        out[0] = -x[0] + c * x[0].tanh();
    });
    let jacobian: JacobianFn = Arc::new(move |x: &[f64]| {
        let t = x[0].tanh();
        DMatrix::from_element(1, 1, -1.0 + c * (1.0 - t * t))
    });
    Model::new(
        1,
        drift,
        Some(jacobian),
        DMatrix::identity(1, 1),
        1.0 + c,
        1.0 - c,
        1.0 - c,
        None,
    )
}

/// Samples `n_pairs` pairs (x, y) uniformly from the radius ball and
/// returns the worst margin of the dissipativity inequality,
/// min [ -K1 ||x-y|| + K2 - <g(x)-g(y), x-y> ]; a nonnegative value
/// certifies the assumption on the sample.
pub fn check_dissipativity(model: &Model, n_pairs: usize, radius: f64, seed: u64) -> f64 {
    assert!(n_pairs >= 1 && radius > 0.0);
    let (k1, k2) = model.dissipativity();
    let mut worst = f64::INFINITY;
    let mut gx = vec![0.0; model.dim()];
    let mut gy = vec![0.0; model.dim()];
    for pair in 0..n_pairs {
        let x = sample_ball(model.dim(), radius, seed, 2 * pair as u64);
        let y = sample_ball(model.dim(), radius, seed, 2 * pair as u64 + 1);
        model.drift_into(&x, &mut gx);
        model.drift_into(&y, &mut gy);
        let mut inner = 0.0;
        let mut dist_sq = 0.0;
        for i in 0..model.dim() {
            let dx = x[i] - y[i];
            inner += (gx[i] - gy[i]) * dx;
            dist_sq += dx * dx;
        }
        let dist = dist_sq.sqrt();
        worst = worst.min(-k1 * dist + k2 - inner);
    }
    worst
}

/// Sampled counterpart for the Lipschitz assumption: worst margin of
/// L ||x-y|| - ||g(x)-g(y)|| over the sampled pairs.
pub fn check_lipschitz(model: &Model, n_pairs: usize, radius: f64, seed: u64) -> f64 {
    assert!(n_pairs >= 1 && radius > 0.0);
    let l = model.lipschitz_l();
    let mut worst = f64::INFINITY;
    let mut gx = vec![0.0; model.dim()];
    let mut gy = vec![0.0; model.dim()];
    for pair in 0..n_pairs {
        let x = sample_ball(model.dim(), radius, seed, 2 * pair as u64);
        let y = sample_ball(model.dim(), radius, seed, 2 * pair as u64 + 1);
        model.drift_into(&x, &mut gx);
        model.drift_into(&y, &mut gy);
        let mut diff_sq = 0.0;
        let mut dist_sq = 0.0;
        for i in 0..model.dim() {
            diff_sq += (gx[i] - gy[i]).powi(2);
            dist_sq += (x[i] - y[i]).powi(2);
        }
        worst = worst.min(l * dist_sq.sqrt() - diff_sq.sqrt());
    }
    worst
}

/// Uniform draw from the d-ball of the given radius: normal direction times
/// U^(1/d)-scaled radius.
fn sample_ball(dim: usize, radius: f64, seed: u64, index: u64) -> Vec<f64> {
    let mut z: Vec<f64> = (0..dim)
        .map(|c| rng::noise_value(seed ^ 0x5ba1_ba11, index, 0, c as u64))
        .collect();
    let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    let u = rng::uniform_value(seed ^ 0x5ba1_ba11, index, 1, 0);
    let r = radius * u.powf(1.0 / dim as f64);
    for v in &mut z {
        *v *= r / norm;
    }
    z
}
