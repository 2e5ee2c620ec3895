//! Inner samplers for the rescaled RGO target (1-strongly log-concave,
//! 3-log-smooth), plus the unadjusted Langevin baseline.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::targets::{IsotropicGaussian, Potential};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerMethod {
    Mala,
    Ula,
    /// Exact draw; only valid when the target is Gaussian.
    ExactGaussian,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct InnerSamplerConfig {
    pub method: InnerMethod,
    pub step_size: f64,
    pub n_steps: usize,
    pub burn_in: usize,
}

impl InnerSamplerConfig {
    /// Calibrated MALA defaults for the rescaled target (see
    /// data/mala_calibration.csv).
    pub fn default_mala() -> Self {
        InnerSamplerConfig {
            method: InnerMethod::Mala,
            step_size: 0.05,
            n_steps: 500,
            burn_in: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0) || self.n_steps < 1 {
            return Err(Error::InvalidParameter(format!(
                "bad inner sampler config: step {}, n_steps {}",
                self.step_size, self.n_steps
            )));
        }
        Ok(())
    }
}

fn standard_normal_vec(dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

/// Log-density of the MALA proposal `N(to; from - step*grad f(from), 2*step*I)`
/// up to the (symmetric) normalization constant.
fn log_proposal(step: f64, from: &[f64], grad_from: &[f64], to: &[f64]) -> f64 {
    let mut sq = 0.0;
    for ((&t, &f), &g) in to.iter().zip(from).zip(grad_from) {
        let r = t - (f - step * g);
        sq += r * r;
    }
    -sq / (4.0 * step)
}

/// Exact MALA log acceptance ratio
/// `log pi(x') - log pi(x) + log q(x|x') - log q(x'|x)`.
pub fn mala_log_acceptance(
    target: &Potential,
    step: f64,
    x: &[f64],
    grad_x: &[f64],
    x_new: &[f64],
    grad_new: &[f64],
) -> f64 {
    target.eval(x) - target.eval(x_new) + log_proposal(step, x_new, grad_new, x)
        - log_proposal(step, x, grad_x, x_new)
}

/// Runs MALA from the target's mode hint; returns the final state, the
/// number of (f, grad-f) query pairs, and the acceptance rate.
pub fn mala_sample(
    target: &Potential,
    config: &InnerSamplerConfig,
    rng: &mut impl Rng,
) -> Result<(Vec<f64>, u64, f64)> {
    config.validate()?;
    let mut x = target
        .mode_hint
        .clone()
        .unwrap_or_else(|| vec![0.0; target.dim]);
    let mut grad = target.grad(&x);
    let step = config.step_size;
    let mut queries: u64 = 1;
    let mut accepted = 0usize;
    for _ in 0..config.n_steps {
        let noise = standard_normal_vec(target.dim, rng);
        let x_new: Vec<f64> = x
            .iter()
            .zip(&grad)
            .zip(&noise)
            .map(|((&xi, &gi), &ni)| xi - step * gi + (2.0 * step).sqrt() * ni)
            .collect();
        let grad_new = target.grad(&x_new);
        queries += 1;
        let log_a = mala_log_acceptance(target, step, &x, &grad, &x_new, &grad_new);
        if log_a >= 0.0 || rng.gen::<f64>().ln() < log_a {
            x = x_new;
            grad = grad_new;
            accepted += 1;
        }
    }
    Ok((x, queries, accepted as f64 / config.n_steps as f64))
}

/// Unadjusted Langevin chain `x' = x - step*grad f(x) + sqrt(2 step) xi`;
/// returns the full trajectory (initial point included) and the gradient
/// query count.
pub fn ula_chain(
    target: &Potential,
    step: f64,
    k_steps: usize,
    x0: Vec<f64>,
    rng: &mut impl Rng,
) -> Result<(Vec<Vec<f64>>, u64)> {
    if !(step > 0.0) || step * target.smoothness >= 1.0 {
        return Err(Error::Precondition(format!(
            "ULA needs 0 < step < 1/L, got step {step} with L {}",
            target.smoothness
        )));
    }
    if x0.len() != target.dim {
        return Err(Error::DimensionMismatch {
            expected: target.dim,
            got: x0.len(),
        });
    }
    let mut traj = Vec::with_capacity(k_steps + 1);
    traj.push(x0);
    for _ in 0..k_steps {
        let x = traj.last().unwrap();
        let grad = target.grad(x);
        let noise = standard_normal_vec(target.dim, rng);
        let next: Vec<f64> = x
            .iter()
            .zip(&grad)
            .zip(&noise)
            .map(|((&xi, &gi), &ni)| xi - step * gi + (2.0 * step).sqrt() * ni)
            .collect();
        traj.push(next);
    }
    Ok((traj, k_steps as u64))
}

/// Exact draw from an isotropic Gaussian (the zero-error inner sampler).
pub fn exact_gaussian_inner(gauss: &IsotropicGaussian, rng: &mut impl Rng) -> Vec<f64> {
    let sd = gauss.variance.sqrt();
    gauss
        .mean
        .iter()
        .map(|&m| m + sd * rng.sample::<f64, _>(StandardNormal))
        .collect()
}
