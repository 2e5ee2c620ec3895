//! Proximal operator `prox_{hf}(y) = argmin_x { f(x) + ||x-y||^2 / (2h) }`
//! for `h < 1/L`, where the inner objective is `(1/h - L)`-strongly convex.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::targets::Potential;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProxMethod {
    GradientDescent,
    /// Newton iteration with a finite-difference second derivative, 1D only.
    DampedNewton1d,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ProxConfig {
    /// Stopping threshold on the inner objective's gradient norm.
    pub grad_tolerance: f64,
    pub max_iterations: usize,
    pub method: ProxMethod,
}

impl ProxConfig {
    /// Default tolerance 1e-10/h: tight enough that prox error is negligible
    /// against quadrature tolerances downstream.
    pub fn default_for_step(h: f64) -> Self {
        ProxConfig {
            grad_tolerance: 1e-10 / h,
            max_iterations: 10_000,
            method: ProxMethod::GradientDescent,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.grad_tolerance > 0.0) || self.max_iterations < 1 {
            return Err(Error::InvalidParameter(format!(
                "bad prox config: tolerance {}, max_iterations {}",
                self.grad_tolerance, self.max_iterations
            )));
        }
        Ok(())
    }
}

fn inner_grad(potential: &Potential, h: f64, y: &[f64], x: &[f64]) -> Vec<f64> {
    let mut g = potential.grad(x);
    for ((gi, xi), yi) in g.iter_mut().zip(x).zip(y) {
        *gi += (xi - yi) / h;
    }
    g
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Minimizes `f(x) + ||x-y||^2/(2h)` starting from `y`.
pub fn prox(potential: &Potential, h: f64, y: &[f64], config: &ProxConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let l = potential.smoothness;
    if !(h > 0.0) || h * l >= 1.0 {
        return Err(Error::Precondition(format!(
            "prox needs 0 < h < 1/L; got h = {h}, L = {l}"
        )));
    }
    if y.len() != potential.dim {
        return Err(Error::DimensionMismatch {
            expected: potential.dim,
            got: y.len(),
        });
    }

    let mut x = y.to_vec();
    match config.method {
        ProxMethod::GradientDescent => {
            // fixed step 2/(mu + M) with mu = 1/h - L, M = 1/h + L reduces to
            // step h; use 1/(1/h + L) for a monotone descent step
            let step = 1.0 / (1.0 / h + l);
            for _ in 0..config.max_iterations {
                let g = inner_grad(potential, h, y, &x);
                let gn = norm(&g);
                if gn <= config.grad_tolerance {
                    return Ok(x);
                }
                for (xi, gi) in x.iter_mut().zip(&g) {
                    *xi -= step * gi;
                }
            }
        }
        ProxMethod::DampedNewton1d => {
            if potential.dim != 1 {
                return Err(Error::InvalidParameter(
                    "damped Newton prox is 1D only".into(),
                ));
            }
            let fd = 1e-6;
            for _ in 0..config.max_iterations {
                let g = inner_grad(potential, h, y, &x)[0];
                if g.abs() <= config.grad_tolerance {
                    return Ok(x);
                }
                let gp = inner_grad(potential, h, y, &[x[0] + fd])[0];
                let gm = inner_grad(potential, h, y, &[x[0] - fd])[0];
                let hess = ((gp - gm) / (2.0 * fd)).max(1.0 / h - l);
                let step = (g / hess).clamp(-1.0 / (l * h.max(1.0)).max(1.0),
                                            1.0 / (l * h.max(1.0)).max(1.0));
                x[0] -= step;
            }
        }
    }
    let g = inner_grad(potential, h, y, &x);
    Err(Error::NonConvergence {
        iterations: config.max_iterations,
        grad_norm: norm(&g),
    })
}

/// Residual `||grad f(x*) + (x* - y)/h||` of a candidate prox point, for
/// independent checking.
pub fn verify_prox_optimality(potential: &Potential, h: f64, y: &[f64], x_star: &[f64]) -> f64 {
    norm(&inner_grad(potential, h, y, x_star))
}
