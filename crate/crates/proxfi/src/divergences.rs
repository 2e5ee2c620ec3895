//! KL, chi-square, Renyi, TV, and relative Fisher information between
//! densities: closed forms for Gaussians, trapezoid quadrature for grid
//! densities.
//!
//! Infinite divergences are returned as `f64::INFINITY`, a distinguished
//! signal value rather than an error, so parameter sweeps can record them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridDensity;
use crate::targets::IsotropicGaussian;

/// Node values below this are treated as numerically zero tail cells.
const TINY: f64 = 1e-300;
/// Exponent cap before a quadrature integrand is declared divergent.
const OVERFLOW_EXPONENT: f64 = 700.0;

/// Flat per-pair divergence summary.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub kl: f64,
    pub fi: f64,
    pub chi_sq: f64,
    pub renyi_2: f64,
    pub renyi_3: f64,
    pub tv: f64,
    /// Excluded tail mass plus normalization drift.
    pub quad_err: f64,
}

impl DivergenceReport {
    pub fn renyi(&self, q: u32) -> Option<f64> {
        match q {
            2 => Some(self.renyi_2),
            3 => Some(self.renyi_3),
            _ => None,
        }
    }
}

fn check_grids(rho: &GridDensity, pi: &GridDensity) -> Result<()> {
    if !rho.same_grid(pi) {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// Quadrature of `rho log(rho/pi)`. Returns exactly 0 when the value arrays
/// coincide bitwise.
pub fn kl_grid(rho: &GridDensity, pi: &GridDensity) -> Result<f64> {
    check_grids(rho, pi)?;
    if rho.values == pi.values {
        return Ok(0.0);
    }
    let mut s = 0.0;
    for (idx, (&r, &p)) in rho.values.iter().zip(&pi.values).enumerate() {
        if r < TINY {
            continue;
        }
        if p < TINY {
            return Ok(f64::INFINITY);
        }
        s += rho.weight(idx) * r * (r.ln() - p.ln());
    }
    Ok(s)
}

/// Quadrature of `rho ||grad log(rho/pi)||^2` with centered finite
/// differences of the two log-densities taken separately.
pub fn fi_grid(rho: &GridDensity, pi: &GridDensity) -> Result<f64> {
    check_grids(rho, pi)?;
    if rho.values == pi.values {
        return Ok(0.0);
    }
    let (val, _excluded) = fi_grid_with_excluded(rho, pi)?;
    Ok(val)
}

fn fi_grid_with_excluded(rho: &GridDensity, pi: &GridDensity) -> Result<(f64, f64)> {
    let mut s = 0.0;
    let mut excluded = 0.0;
    match rho.dim() {
        1 => {
            let n = rho.axes[0].n;
            let inv2d = 1.0 / (2.0 * rho.axes[0].spacing());
            for i in 0..n {
                let w = rho.weight(i);
                let r = rho.values[i];
                if r < TINY {
                    continue;
                }
                if i == 0 || i == n - 1 {
                    excluded += w * r;
                    continue;
                }
                let cells = [i - 1, i, i + 1];
                if cells
                    .iter()
                    .any(|&j| rho.values[j] < TINY || pi.values[j] < TINY)
                {
                    excluded += w * r;
                    continue;
                }
                let dlr = (rho.values[i + 1].ln() - rho.values[i - 1].ln()) * inv2d;
                let dlp = (pi.values[i + 1].ln() - pi.values[i - 1].ln()) * inv2d;
                let g = dlr - dlp;
                s += w * r * g * g;
            }
        }
        2 => {
            let (nx, ny) = (rho.axes[0].n, rho.axes[1].n);
            let invx = 1.0 / (2.0 * rho.axes[0].spacing());
            let invy = 1.0 / (2.0 * rho.axes[1].spacing());
            for i in 0..nx {
                for j in 0..ny {
                    let idx = i * ny + j;
                    let w = rho.weight(idx);
                    let r = rho.values[idx];
                    if r < TINY {
                        continue;
                    }
                    if i == 0 || i == nx - 1 || j == 0 || j == ny - 1 {
                        excluded += w * r;
                        continue;
                    }
                    let neigh = [idx - ny, idx + ny, idx - 1, idx + 1, idx];
                    if neigh
                        .iter()
                        .any(|&k| rho.values[k] < TINY || pi.values[k] < TINY)
                    {
                        excluded += w * r;
                        continue;
                    }
                    let gx = (rho.values[idx + ny].ln() - rho.values[idx - ny].ln()) * invx
                        - (pi.values[idx + ny].ln() - pi.values[idx - ny].ln()) * invx;
                    let gy = (rho.values[idx + 1].ln() - rho.values[idx - 1].ln()) * invy
                        - (pi.values[idx + 1].ln() - pi.values[idx - 1].ln()) * invy;
                    s += w * r * (gx * gx + gy * gy);
                }
            }
        }
        _ => unreachable!(),
    }
    Ok((s, excluded))
}

pub fn chi_sq_grid(rho: &GridDensity, pi: &GridDensity) -> Result<f64> {
    let r = renyi_grid(rho, pi, 2.0)?;
    if r.is_infinite() {
        return Ok(f64::INFINITY);
    }
    Ok(r.exp_m1())
}

/// Renyi divergence of order `q > 0`, `q != 1` by quadrature of
/// `rho^q / pi^(q-1)` in log space.
pub fn renyi_grid(rho: &GridDensity, pi: &GridDensity, q: f64) -> Result<f64> {
    check_grids(rho, pi)?;
    if !(q > 0.0) || q == 1.0 {
        return Err(Error::InvalidParameter(format!(
            "renyi order must be positive and != 1, got {q}"
        )));
    }
    if rho.values == pi.values {
        return Ok(0.0);
    }
    let mut s = 0.0;
    for (idx, (&r, &p)) in rho.values.iter().zip(&pi.values).enumerate() {
        if r < TINY {
            continue;
        }
        if p < TINY {
            return Ok(f64::INFINITY);
        }
        let e = q * r.ln() - (q - 1.0) * p.ln();
        if e > OVERFLOW_EXPONENT {
            return Ok(f64::INFINITY);
        }
        s += rho.weight(idx) * e.exp();
    }
    if s <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(s.ln() / (q - 1.0))
}

pub fn tv_grid(rho: &GridDensity, pi: &GridDensity) -> Result<f64> {
    check_grids(rho, pi)?;
    let mut s = 0.0;
    for (idx, (&r, &p)) in rho.values.iter().zip(&pi.values).enumerate() {
        s += rho.weight(idx) * (r - p).abs();
    }
    Ok(0.5 * s)
}

/// All divergences for one grid pair.
pub fn report(rho: &GridDensity, pi: &GridDensity) -> Result<DivergenceReport> {
    let kl = kl_grid(rho, pi)?;
    let (fi, excluded) = if rho.values == pi.values {
        (0.0, 0.0)
    } else {
        fi_grid_with_excluded(rho, pi)?
    };
    let chi_sq = chi_sq_grid(rho, pi)?;
    let renyi_2 = renyi_grid(rho, pi, 2.0)?;
    let renyi_3 = renyi_grid(rho, pi, 3.0)?;
    let tv = tv_grid(rho, pi)?;
    let quad_err = excluded + (rho.mass() - 1.0).abs() + (pi.mass() - 1.0).abs();
    Ok(DivergenceReport {
        kl,
        fi,
        chi_sq,
        renyi_2,
        renyi_3,
        tv,
        quad_err,
    })
}

/// Divergence selector for the analytic Gaussian oracle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DivergenceKind {
    Kl,
    Fi,
    ChiSq,
    Renyi(f64),
    Tv,
}

/// Exact divergence between isotropic Gaussians. Non-integrable
/// combinations return `f64::INFINITY`.
pub fn gaussian_closed_form(
    rho: &IsotropicGaussian,
    pi: &IsotropicGaussian,
    which: DivergenceKind,
) -> Result<f64> {
    if rho.dim() != pi.dim() {
        return Err(Error::DimensionMismatch {
            expected: pi.dim(),
            got: rho.dim(),
        });
    }
    let d = rho.dim() as f64;
    let (v1, v2) = (rho.variance, pi.variance);
    let dm_sq: f64 = rho
        .mean
        .iter()
        .zip(&pi.mean)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let value = match which {
        DivergenceKind::Kl => {
            0.5 * d * (v1 / v2 - 1.0 - (v1 / v2).ln()) + dm_sq / (2.0 * v2)
        }
        DivergenceKind::Fi => {
            let c = 1.0 / v2 - 1.0 / v1;
            dm_sq / (v2 * v2) + d * v1 * c * c
        }
        DivergenceKind::ChiSq => {
            let r2 = gaussian_closed_form(rho, pi, DivergenceKind::Renyi(2.0))?;
            if r2.is_infinite() {
                f64::INFINITY
            } else {
                r2.exp_m1()
            }
        }
        DivergenceKind::Renyi(q) => {
            if !(q > 0.0) || q == 1.0 {
                return Err(Error::InvalidParameter(format!("bad renyi order {q}")));
            }
            let a = q / v1 - (q - 1.0) / v2;
            if a <= 0.0 {
                return Ok(f64::INFINITY);
            }
            // per-axis log integral of rho^q pi^(1-q)
            let mut log_i = d
                * (-0.5 * q * v1.ln() + 0.5 * (q - 1.0) * v2.ln() - 0.5 * a.ln());
            for (m1, m2) in rho.mean.iter().zip(&pi.mean) {
                let b = q * m1 / v1 - (q - 1.0) * m2 / v2;
                let c = q * m1 * m1 / v1 - (q - 1.0) * m2 * m2 / v2;
                log_i += 0.5 * (b * b / a - c);
            }
            log_i / (q - 1.0)
        }
        DivergenceKind::Tv => {
            if rho.dim() != 1 {
                return Err(Error::InvalidParameter(
                    "analytic TV implemented in 1D only".into(),
                ));
            }
            gaussian_tv_1d(rho.mean[0], v1, pi.mean[0], v2)
        }
    };
    Ok(value)
}

fn phi(z: f64) -> f64 {
    0.5 * (1.0 + statrs::function::erf::erf(z / std::f64::consts::SQRT_2))
}

fn gaussian_cdf(x: f64, mean: f64, var: f64) -> f64 {
    phi((x - mean) / var.sqrt())
}

/// TV between 1D Gaussians via the density crossing points.
fn gaussian_tv_1d(m1: f64, v1: f64, m2: f64, v2: f64) -> f64 {
    if (v1 - v2).abs() < 1e-14 {
        // single crossing at the midpoint
        return 2.0 * phi((m1 - m2).abs() / (2.0 * v1.sqrt())) - 1.0;
    }
    // log rho - log pi = alpha x^2 + beta x + gamma
    let alpha = 0.5 / v2 - 0.5 / v1;
    let beta = m1 / v1 - m2 / v2;
    let gamma = m2 * m2 / (2.0 * v2) - m1 * m1 / (2.0 * v1) + 0.5 * (v2 / v1).ln();
    let disc = beta * beta - 4.0 * alpha * gamma;
    if disc <= 0.0 {
        // one density dominates everywhere except measure-zero points
        return 0.0;
    }
    let r = disc.sqrt();
    let mut x1 = (-beta - r) / (2.0 * alpha);
    let mut x2 = (-beta + r) / (2.0 * alpha);
    if x1 > x2 {
        std::mem::swap(&mut x1, &mut x2);
    }
    // signed rho-pi mass over (x1, x2), folded to TV
    let rho_mid = gaussian_cdf(x2, m1, v1) - gaussian_cdf(x1, m1, v1);
    let pi_mid = gaussian_cdf(x2, m2, v2) - gaussian_cdf(x1, m2, v2);
    (rho_mid - pi_mid).abs()
}

/// Both sides of the KL decomposition inequality
/// `KL(mu||pi) - KL(nu||pi) <= KL(mu||nu) + (2 + R2(nu||pi)) sqrt(chi2(mu||nu))`.
#[derive(Clone, Copy, Debug)]
pub struct KlDecomposition {
    pub lhs: f64,
    pub rhs: f64,
}

pub fn check_kl_decomposition(
    mu: &GridDensity,
    nu: &GridDensity,
    pi: &GridDensity,
) -> Result<KlDecomposition> {
    let lhs = kl_grid(mu, pi)? - kl_grid(nu, pi)?;
    let rhs = kl_grid(mu, nu)?
        + (2.0 + renyi_grid(nu, pi, 2.0)?) * chi_sq_grid(mu, nu)?.max(0.0).sqrt();
    Ok(KlDecomposition { lhs, rhs })
}

/// Same inequality evaluated with Gaussian closed forms.
pub fn check_kl_decomposition_gaussian(
    mu: &IsotropicGaussian,
    nu: &IsotropicGaussian,
    pi: &IsotropicGaussian,
) -> Result<KlDecomposition> {
    let lhs = gaussian_closed_form(mu, pi, DivergenceKind::Kl)?
        - gaussian_closed_form(nu, pi, DivergenceKind::Kl)?;
    let rhs = gaussian_closed_form(mu, nu, DivergenceKind::Kl)?
        + (2.0 + gaussian_closed_form(nu, pi, DivergenceKind::Renyi(2.0))?)
            * gaussian_closed_form(mu, nu, DivergenceKind::ChiSq)?.max(0.0).sqrt();
    Ok(KlDecomposition { lhs, rhs })
}

/// Renyi growth along the heat channel: actual `R_q(pi * N(0,t) || pi)` by
/// quadrature against the bound `(d / (2(q-1))) log(1/(1 - Lqt))` for a
/// log-concave, L-log-smooth density.
#[derive(Clone, Copy, Debug)]
pub struct RenyiAfterHeat {
    pub actual: f64,
    pub bound: f64,
}

pub fn check_renyi_after_heat(
    pi: &GridDensity,
    smoothness: f64,
    t: f64,
    q: u32,
) -> Result<RenyiAfterHeat> {
    if q < 2 {
        return Err(Error::InvalidParameter("heat-channel check needs q >= 2".into()));
    }
    let qf = q as f64;
    if t < 0.0 || t * smoothness * qf >= 1.0 {
        return Err(Error::Precondition(format!(
            "need 0 <= t < 1/(Lq); got t = {t}, L = {smoothness}, q = {q}"
        )));
    }
    let d = pi.dim() as f64;
    let bound = if t == 0.0 {
        0.0
    } else {
        d / (2.0 * (qf - 1.0)) * (1.0 / (1.0 - smoothness * qf * t)).ln()
    };
    let actual = if t == 0.0 {
        0.0
    } else {
        let smoothed = crate::grid_oracle::gaussian_channel(pi, t)?;
        renyi_grid(&smoothed, pi, qf)?
    };
    Ok(RenyiAfterHeat { actual, bound })
}
