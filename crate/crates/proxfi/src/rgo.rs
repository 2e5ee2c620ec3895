//! Restricted Gaussian oracle: exact sampling from
//! `R_y(x) ∝ exp(-f(x) - ||x-y||^2/(2h))` via rejection, and the smoothed
//! approximate implementation (rescaled inner target + Gaussian smoothing).

use std::ops::AddAssign;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inner::{exact_gaussian_inner, mala_sample, ula_chain, InnerMethod, InnerSamplerConfig};
use crate::prox::{prox, verify_prox_optimality, ProxConfig};
use crate::targets::{IsotropicGaussian, Potential};

/// Query counts accumulated by samplers; merged additively across calls.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLedger {
    pub f_evals: u64,
    pub grad_evals: u64,
    pub prox_calls: u64,
    pub inner_steps: u64,
}

impl AddAssign for QueryLedger {
    fn add_assign(&mut self, rhs: QueryLedger) {
        self.f_evals += rhs.f_evals;
        self.grad_evals += rhs.grad_evals;
        self.prox_calls += rhs.prox_calls;
        self.inner_steps += rhs.inner_steps;
    }
}

#[derive(Clone, Debug, Default)]
pub struct RejectionStats {
    pub trials: u64,
    /// Filled when acceptance recording is enabled.
    pub acceptance_probability_trace: Option<Vec<f64>>,
    pub f_evals: u64,
    pub grad_evals: u64,
    pub prox_calls: u64,
}

impl RejectionStats {
    pub fn ledger(&self) -> QueryLedger {
        QueryLedger {
            f_evals: self.f_evals,
            grad_evals: self.grad_evals,
            prox_calls: self.prox_calls,
            inner_steps: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RgoExactConfig {
    /// Rejection-trial cap; reaching it indicts the certified constants.
    pub trial_cap: usize,
    pub prox: Option<ProxConfig>,
    pub record_acceptance: bool,
    /// Precomputed prox point for bulk draws at a fixed y; verified before
    /// use.
    pub mode: Option<Vec<f64>>,
}

impl Default for RgoExactConfig {
    fn default() -> Self {
        RgoExactConfig {
            trial_cap: 10_000,
            prox: None,
            record_acceptance: false,
            mode: None,
        }
    }
}

/// Log acceptance probability of a proposed point: the gap between the
/// smoothness lower envelope at the prox mode and f itself,
/// `f(x*) + <grad f(x*), x - x*> - (L/2)||x - x*||^2 - f(x)`.
pub fn acceptance_log_prob(
    potential: &Potential,
    x_star: &[f64],
    grad_star: &[f64],
    x: &[f64],
) -> f64 {
    let l = potential.smoothness;
    let mut lin = 0.0;
    let mut sq = 0.0;
    for ((&xs, &gs), &xi) in x_star.iter().zip(grad_star).zip(x) {
        lin += gs * (xi - xs);
        sq += (xi - xs) * (xi - xs);
    }
    potential.eval(x_star) + lin - 0.5 * l * sq - potential.eval(x)
}

/// Exact draw from `R_y` by rejection: propose from `N(x*, (1/h - L)^{-1} I)`
/// around the prox mode and accept against the smoothness envelope.
pub fn rgo_exact_with(
    potential: &Potential,
    h: f64,
    y: &[f64],
    config: &RgoExactConfig,
    rng: &mut impl Rng,
) -> Result<(Vec<f64>, RejectionStats)> {
    let l = potential.smoothness;
    if !(h > 0.0) || h * l >= 1.0 {
        return Err(Error::Precondition(format!(
            "rejection RGO needs 0 < h < 1/L; got h = {h}, L = {l}"
        )));
    }
    let prox_cfg = config.prox.unwrap_or_else(|| ProxConfig::default_for_step(h));
    let mut stats = RejectionStats {
        acceptance_probability_trace: config.record_acceptance.then(Vec::new),
        ..Default::default()
    };
    let x_star = match &config.mode {
        Some(m) => {
            let residual = verify_prox_optimality(potential, h, y, m);
            let tolerance = prox_cfg.grad_tolerance * 10.0;
            if residual > tolerance {
                return Err(Error::StaleMode {
                    residual,
                    tolerance,
                });
            }
            m.clone()
        }
        None => {
            stats.prox_calls = 1;
            prox(potential, h, y, &prox_cfg)?
        }
    };
    let grad_star = potential.grad(&x_star);
    stats.grad_evals += 1;
    stats.f_evals += 1; // f(x*), reused across trials
    let sd = (1.0 / h - l).recip().sqrt();

    loop {
        if stats.trials as usize >= config.trial_cap {
            return Err(Error::RunawayRejection {
                cap: config.trial_cap,
            });
        }
        stats.trials += 1;
        let x: Vec<f64> = x_star
            .iter()
            .map(|&m| m + sd * rng.sample::<f64, _>(StandardNormal))
            .collect();
        stats.f_evals += 1;
        let log_p = acceptance_log_prob(potential, &x_star, &grad_star, &x);
        if log_p > 1e-12 {
            return Err(Error::SmoothnessViolation { value: log_p.exp() });
        }
        let p = log_p.min(0.0).exp();
        if let Some(trace) = stats.acceptance_probability_trace.as_mut() {
            trace.push(p);
        }
        if rng.gen::<f64>() < p {
            return Ok((x, stats));
        }
    }
}

pub fn rgo_exact(
    potential: &Potential,
    h: f64,
    y: &[f64],
    rng: &mut impl Rng,
) -> Result<(Vec<f64>, RejectionStats)> {
    rgo_exact_with(potential, h, y, &RgoExactConfig::default(), rng)
}

/// Rescaled inner target `nu(u) ∝ exp(-f(m + u/sqrt(L)) - L||m + u/sqrt(L) - y||^2)`
/// for `m = prox_{f/(2L)}(y)`: 1-strongly log-concave, 3-log-smooth, mode at
/// the origin.
pub fn build_rescaled_target(
    potential: &Potential,
    smoothness: f64,
    y: &[f64],
    m: &[f64],
) -> Result<Potential> {
    let l = smoothness;
    if !(l > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "smoothness must be positive, got {l}"
        )));
    }
    let h = 1.0 / (2.0 * l);
    let residual = verify_prox_optimality(potential, h, y, m);
    let tolerance = 1e-7 / h;
    if residual > tolerance {
        return Err(Error::StaleMode {
            residual,
            tolerance,
        });
    }
    let dim = potential.dim;
    let sqrt_l = l.sqrt();
    let base = potential.clone();
    let m_own = m.to_vec();
    let y_own = y.to_vec();
    let to_x = move |u: &[f64], m: &[f64]| -> Vec<f64> {
        u.iter()
            .zip(m)
            .map(|(&ui, &mi)| mi + ui / sqrt_l)
            .collect()
    };

    let eval_base = base.clone();
    let (m_e, y_e) = (m_own.clone(), y_own.clone());
    let eval = Arc::new(move |u: &[f64]| {
        let x = to_x(u, &m_e);
        let sq: f64 = x.iter().zip(&y_e).map(|(a, b)| (a - b) * (a - b)).sum();
        eval_base.eval(&x) + l * sq
    });
    let grad = Arc::new(move |u: &[f64]| {
        let x: Vec<f64> = u
            .iter()
            .zip(&m_own)
            .map(|(&ui, &mi)| mi + ui / sqrt_l)
            .collect();
        let g = base.grad(&x);
        g.iter()
            .zip(&x)
            .zip(&y_own)
            .map(|((&gi, &xi), &yi)| (gi + 2.0 * l * (xi - yi)) / sqrt_l)
            .collect()
    });
    Ok(Potential::new(
        eval,
        grad,
        3.0,
        dim,
        1.0,
        Some(vec![0.0; dim]),
    ))
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SmoothedRgoConfig {
    /// Inner-sampler accuracy parameter (targets Renyi-3 error delta^2).
    pub delta: f64,
    /// Smoothing variance; `None` selects the default
    /// `(delta^2 + d sqrt(delta))^{1/4} / L`.
    pub smoothing_variance: Option<f64>,
    pub inner: InnerSamplerConfig,
}

impl SmoothedRgoConfig {
    pub fn validate(&self) -> Result<()> {
        // delta = 0 is allowed: the default smoothing variance degenerates
        // to 0 and the oracle is unsmoothed
        if !(self.delta >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must be nonnegative, got {}",
                self.delta
            )));
        }
        if let Some(t) = self.smoothing_variance {
            if t < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "smoothing variance must be nonnegative, got {t}"
                )));
            }
        }
        self.inner.validate()
    }
}

pub fn default_smoothing_variance(delta: f64, dim: usize, smoothness: f64) -> f64 {
    (delta * delta + dim as f64 * delta.sqrt()).powf(0.25) / smoothness
}

/// Heuristic accuracy for a target stationarity level epsilon.
pub fn default_delta(epsilon: f64, smoothness: f64, dim: usize) -> f64 {
    (epsilon * epsilon / smoothness).min(1.0 / (dim * dim) as f64) * 1e-2
}

/// One smoothed RGO draw at step size `h = 1/(2L)`: prox mode, inner sample
/// from the rescaled target, unscale, add `N(0, tI)` smoothing noise.
pub fn rgo_smoothed(
    potential: &Potential,
    smoothness: f64,
    y: &[f64],
    config: &SmoothedRgoConfig,
    rng: &mut impl Rng,
) -> Result<(Vec<f64>, QueryLedger)> {
    config.validate()?;
    let l = smoothness;
    let h = 1.0 / (2.0 * l);
    let mut ledger = QueryLedger {
        prox_calls: 1,
        ..Default::default()
    };
    let m = prox(potential, h, y, &ProxConfig::default_for_step(h))?;
    let nu = build_rescaled_target(potential, l, y, &m)?;

    let u = match config.inner.method {
        InnerMethod::Mala => {
            let (u, queries, _) = mala_sample(&nu, &config.inner, rng)?;
            ledger.inner_steps += config.inner.n_steps as u64;
            ledger.f_evals += queries;
            ledger.grad_evals += queries;
            u
        }
        InnerMethod::Ula => {
            let x0 = vec![0.0; nu.dim];
            let (traj, queries) =
                ula_chain(&nu, config.inner.step_size, config.inner.n_steps, x0, rng)?;
            ledger.inner_steps += queries;
            ledger.grad_evals += queries;
            traj.into_iter().last().unwrap()
        }
        InnerMethod::ExactGaussian => {
            // valid only when the base potential has constant curvature
            // (alpha = L), where the rescaled target is exactly N(0, 1/3)
            if (potential.strong_convexity - l).abs() > 1e-12 {
                return Err(Error::InvalidParameter(
                    "exact Gaussian inner sampling needs a Gaussian base target".into(),
                ));
            }
            ledger.inner_steps += 1;
            exact_gaussian_inner(&IsotropicGaussian::new(vec![0.0; nu.dim], 1.0 / 3.0), rng)
        }
    };

    let t = config
        .smoothing_variance
        .unwrap_or_else(|| default_smoothing_variance(config.delta, potential.dim, l));
    let sqrt_l = l.sqrt();
    let x: Vec<f64> = m
        .iter()
        .zip(&u)
        .map(|(&mi, &ui)| {
            let noise: f64 = if t > 0.0 {
                t.sqrt() * rng.sample::<f64, _>(StandardNormal)
            } else {
                0.0
            };
            mi + ui / sqrt_l + noise
        })
        .collect();
    Ok((x, ledger))
}
