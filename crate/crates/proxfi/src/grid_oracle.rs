//! Deterministic density-evolution oracle: evolves the law of the proximal
//! sampler on a 1D/2D grid. The forward channel convolves with a Gaussian
//! kernel; the backward channel applies the conditional
//! `R_y(x) ∝ exp(-f(x) - ||x-y||^2/(2h))` by quadrature. Both exploit the
//! Toeplitz structure of the uniform-grid Gaussian kernel, so a step is
//! O(n^2) time and O(n) memory in 1D.

use rayon::prelude::*;
use serde::Serialize;

use crate::divergences::{fi_grid, report, DivergenceReport};
use crate::error::{Error, Result};
use crate::grid::{GridAxis, GridDensity};
use crate::targets::Potential;

/// Mass drift allowed per channel application before a run is suspect.
pub const DRIFT_TOLERANCE: f64 = 1e-9;
/// Additive slack for inequality checks, absorbing discretization error.
pub const SLACK_TOLERANCE: f64 = 1e-6;

/// Gaussian kernel samples `exp(-(k*spacing)^2 / (2h))` for lags 0..n-1.
fn kernel_lags(ax: &GridAxis, h: f64) -> Vec<f64> {
    let d = ax.spacing();
    (0..ax.n)
        .map(|k| {
            let r = k as f64 * d;
            (-r * r / (2.0 * h)).exp()
        })
        .collect()
}

/// `out[i] = sum_j w_j t[|i-j|] src[j]` with trapezoid weights of `ax`.
fn toeplitz_1d(t: &[f64], ax: &GridAxis, src: &[f64]) -> Vec<f64> {
    let n = ax.n;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut s = 0.0;
            for j in 0..n {
                let lag = if i > j { i - j } else { j - i };
                s += ax.weight(j) * t[lag] * src[j];
            }
            s
        })
        .collect()
}

/// Separable kernel application on a 2D row-major array: integrate over the
/// source variable along axis 1, then axis 0.
fn toeplitz_2d(tx: &[f64], ty: &[f64], ax: &GridAxis, ay: &GridAxis, src: &[f64]) -> Vec<f64> {
    let (nx, ny) = (ax.n, ay.n);
    let tmp: Vec<f64> = (0..nx)
        .into_par_iter()
        .flat_map_iter(|i| {
            let row = &src[i * ny..(i + 1) * ny];
            let mut out = vec![0.0; ny];
            for (jj, o) in out.iter_mut().enumerate() {
                let mut s = 0.0;
                for (j, &v) in row.iter().enumerate() {
                    let lag = if jj > j { jj - j } else { j - jj };
                    s += ay.weight(j) * ty[lag] * v;
                }
                *o = s;
            }
            out.into_iter()
        })
        .collect();
    (0..nx)
        .into_par_iter()
        .flat_map_iter(|ii| {
            let mut out = vec![0.0; ny];
            for i in 0..nx {
                let lag = if ii > i { ii - i } else { i - ii };
                let c = ax.weight(i) * tx[lag];
                if c == 0.0 {
                    continue;
                }
                let row = &tmp[i * ny..(i + 1) * ny];
                for (o, &v) in out.iter_mut().zip(row) {
                    *o += c * v;
                }
            }
            out.into_iter()
        })
        .collect()
}

fn apply_kernels(kernels: &[Vec<f64>], axes: &[GridAxis], src: &[f64]) -> Vec<f64> {
    match axes.len() {
        1 => toeplitz_1d(&kernels[0], &axes[0], src),
        2 => toeplitz_2d(&kernels[0], &kernels[1], &axes[0], &axes[1], src),
        _ => unreachable!(),
    }
}

fn check_kernel_fits(axes: &[GridAxis], h: f64) -> Result<()> {
    for ax in axes {
        // 8 standard deviations each side keeps the discarded kernel tail
        // below 1e-12
        if 16.0 * h.sqrt() > ax.max - ax.min {
            return Err(Error::GridTooSmall(format!(
                "Gaussian kernel with variance {h} needs more span than [{}, {}]",
                ax.min, ax.max
            )));
        }
    }
    Ok(())
}

/// Forward channel `rho * N(0, hI)`, renormalized; also returns the mass
/// drift `|mass - 1|` before renormalization.
pub fn gaussian_channel_with_drift(rho: &GridDensity, h: f64) -> Result<(GridDensity, f64)> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "channel variance must be positive, got {h}"
        )));
    }
    check_kernel_fits(&rho.axes, h)?;
    let kernels: Vec<Vec<f64>> = rho.axes.iter().map(|ax| kernel_lags(ax, h)).collect();
    let norm = (2.0 * std::f64::consts::PI * h).sqrt().powi(rho.dim() as i32);
    let mut values = apply_kernels(&kernels, &rho.axes, &rho.values);
    for v in &mut values {
        *v /= norm;
    }
    let mut out = GridDensity {
        axes: rho.axes.clone(),
        values,
    };
    let drift = out.normalize();
    Ok((out, drift))
}

pub fn gaussian_channel(rho: &GridDensity, h: f64) -> Result<GridDensity> {
    gaussian_channel_with_drift(rho, h).map(|(g, _)| g)
}

/// Cached backward-channel kernel for one (potential, grid, h) triple.
///
/// `R_y(x) = g(x) K(x-y) / Z(y)` with `g = exp(-f)` (shifted by min f) and
/// `K` the Gaussian kernel; `Z` is the per-node quadrature normalizer. The
/// channel applied to a density over y is
/// `(rho R)(x) = g(x) * sum_y w_y K(x-y) rho(y)/Z(y)`.
pub struct RgoKernel {
    pub axes: Vec<GridAxis>,
    pub h: f64,
    g: Vec<f64>,
    kernels: Vec<Vec<f64>>,
    z: Vec<f64>,
}

impl RgoKernel {
    pub fn new(potential: &Potential, axes: Vec<GridAxis>, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "step size must be positive, got {h}"
            )));
        }
        if axes.len() != potential.dim {
            return Err(Error::DimensionMismatch {
                expected: potential.dim,
                got: axes.len(),
            });
        }
        check_kernel_fits(&axes, h)?;
        let probe = GridDensity {
            axes: axes.clone(),
            values: vec![0.0; axes.iter().map(|a| a.n).product()],
        };
        let mut fvals = Vec::with_capacity(probe.len());
        for idx in 0..probe.len() {
            fvals.push(potential.eval(&probe.coords(idx)));
        }
        let fmin = fvals.iter().cloned().fold(f64::INFINITY, f64::min);
        let g: Vec<f64> = fvals.iter().map(|&f| (fmin - f).exp()).collect();
        let kernels: Vec<Vec<f64>> = axes.iter().map(|ax| kernel_lags(ax, h)).collect();
        let z = apply_kernels(&kernels, &axes, &g);
        if z.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::GridTooSmall(
                "conditional normalizer underflowed at a grid node".into(),
            ));
        }
        Ok(RgoKernel {
            axes,
            h,
            g,
            kernels,
            z,
        })
    }

    /// Backward step applied to a density over y; returns the new density
    /// over x and the pre-normalization mass drift.
    pub fn apply(&self, rho_y: &GridDensity) -> Result<(GridDensity, f64)> {
        if rho_y.axes != self.axes {
            return Err(Error::GridMismatch);
        }
        let q: Vec<f64> = rho_y
            .values
            .iter()
            .zip(&self.z)
            .map(|(&r, &z)| r / z)
            .collect();
        let num = apply_kernels(&self.kernels, &self.axes, &q);
        let values: Vec<f64> = num.iter().zip(&self.g).map(|(&n, &g)| n * g).collect();
        let mut out = GridDensity {
            axes: self.axes.clone(),
            values,
        };
        let drift = out.normalize();
        Ok((out, drift))
    }

    /// Normalized conditional `R_y` for the grid node with flat index `j`
    /// (1D only); used to measure perturbation quality.
    fn conditional_column_1d(&self, j: usize) -> Vec<f64> {
        let t = &self.kernels[0];
        self.g
            .iter()
            .enumerate()
            .map(|(i, &g)| {
                let lag = if i > j { i - j } else { j - i };
                g * t[lag] / self.z[j]
            })
            .collect()
    }
}

/// Normalized conditional density `R_y` at an arbitrary point `y`, by direct
/// quadrature on the given axes.
pub fn conditional_density(
    potential: &Potential,
    h: f64,
    y: &[f64],
    axes: Vec<GridAxis>,
) -> Result<GridDensity> {
    if y.len() != potential.dim {
        return Err(Error::DimensionMismatch {
            expected: potential.dim,
            got: y.len(),
        });
    }
    let probe = GridDensity {
        axes: axes.clone(),
        values: vec![0.0; axes.iter().map(|a| a.n).product()],
    };
    let mut logs = Vec::with_capacity(probe.len());
    for idx in 0..probe.len() {
        let x = probe.coords(idx);
        let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        logs.push(-potential.eval(&x) - sq / (2.0 * h));
    }
    let lmax = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out = GridDensity {
        axes,
        values: logs.iter().map(|&l| (l - lmax).exp()).collect(),
    };
    out.normalize();
    Ok(out)
}

/// One-call backward step without kernel reuse.
pub fn rgo_channel(rho_y: &GridDensity, potential: &Potential, h: f64) -> Result<GridDensity> {
    let kernel = RgoKernel::new(potential, rho_y.axes.clone(), h)?;
    kernel.apply(rho_y).map(|(g, _)| g)
}

#[derive(Clone, Debug, Serialize)]
pub struct IterateRecord {
    pub k: usize,
    /// Divergences of the post-forward law vs the stationary y-marginal.
    pub y: DivergenceReport,
    /// Divergences of the post-backward law vs the target.
    pub x: DivergenceReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChannelTrace {
    pub h: f64,
    /// Divergences of the initial density vs the target.
    pub initial: DivergenceReport,
    pub iterates: Vec<IterateRecord>,
    /// Cumulative sum of per-iterate Fisher information (x laws, k = 1..K).
    pub fi_sum: f64,
    /// Divergences of the averaged density (mean of the K x-laws) vs target.
    pub averaged: DivergenceReport,
    /// Worst per-step mass drift before renormalization.
    pub max_drift: f64,
    /// For perturbed runs: measured `max_y chi^2(corrupted R_y || R_y)` over
    /// the effective support of every iterate's y-law.
    pub rgo_chi_sq: Option<f64>,
    #[serde(skip)]
    pub final_density: GridDensity,
    #[serde(skip)]
    pub averaged_density: GridDensity,
}

impl ChannelTrace {
    pub fn kl0(&self) -> f64 {
        self.initial.kl
    }

    /// Total-FI budget `KL0 / (h (1 - Lh/2))`.
    pub fn total_fi_bound(&self, smoothness: f64) -> f64 {
        self.kl0() / (self.h * (1.0 - smoothness * self.h / 2.0))
    }

    /// Averaged-iterate budget `KL0 / (h (1 - Lh/2) K)`.
    pub fn averaged_fi_bound(&self, smoothness: f64) -> f64 {
        self.total_fi_bound(smoothness) / self.iterates.len() as f64
    }

    /// One row per iterate, plus a k=0 row for the initial law; slack columns
    /// are filled when step checks are supplied.
    pub fn to_csv(&self, slacks: Option<&[StepSlack]>) -> String {
        let mut out = String::from(
            "k,kl_x,fi_x,kl_y,fi_y,chi_sq_x,renyi2_x,fwd_slack,bwd_fi_slack,bwd_kl_slack\n",
        );
        out.push_str(&format!(
            "0,{},{},,,{},{},,,\n",
            self.initial.kl, self.initial.fi, self.initial.chi_sq, self.initial.renyi_2
        ));
        for rec in &self.iterates {
            let slack = slacks.and_then(|s| s.iter().find(|s| s.k == rec.k));
            let (a, b, c) = match slack {
                Some(s) => (
                    s.forward.to_string(),
                    s.backward_fi.to_string(),
                    s.backward_kl.to_string(),
                ),
                None => (String::new(), String::new(), String::new()),
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                rec.k,
                rec.x.kl,
                rec.x.fi,
                rec.y.kl,
                rec.y.fi,
                rec.x.chi_sq,
                rec.x.renyi_2,
                a,
                b,
                c
            ));
        }
        out
    }
}

fn run_chain(
    rho0: &GridDensity,
    potential: &Potential,
    h: f64,
    k_iters: usize,
    eps_mix: f64,
) -> Result<ChannelTrace> {
    let l = potential.smoothness;
    if !(h > 0.0) || h * l >= 1.0 {
        return Err(Error::Precondition(format!(
            "chain needs 0 < h < 1/L; got h = {h}, L = {l}"
        )));
    }
    if k_iters == 0 {
        return Err(Error::InvalidParameter("chain needs K >= 1".into()));
    }
    if !(0.0..1.0).contains(&eps_mix) {
        return Err(Error::InvalidParameter(format!(
            "mixing weight must lie in [0, 1), got {eps_mix}"
        )));
    }
    if eps_mix > 0.0 && rho0.dim() != 1 {
        return Err(Error::InvalidParameter(
            "perturbed chains are supported in 1D only".into(),
        ));
    }
    let axes = rho0.axes.clone();
    let pi_x = GridDensity::from_potential(axes.clone(), potential)?;
    let (pi_y, _) = gaussian_channel_with_drift(&pi_x, h)?;
    let kernel = RgoKernel::new(potential, axes, h)?;

    let mut rho = rho0.clone();
    rho.normalize();
    let initial = report(&rho, &pi_x)?;

    let mut iterates = Vec::with_capacity(k_iters);
    let mut avg = vec![0.0; rho.len()];
    let mut fi_sum = 0.0;
    let mut max_drift: f64 = 0.0;
    let mut rgo_chi_sq: Option<f64> = if eps_mix > 0.0 { Some(0.0) } else { None };
    // chi^2(corrupted R_y || R_y) is step-independent; cache per y node
    let mut chi_cache: Vec<Option<f64>> = vec![None; rho.len()];
    let corruption_norm = (2.0 * std::f64::consts::PI * h).sqrt();

    for k in 1..=k_iters {
        let (rho_y, d_fwd) = gaussian_channel_with_drift(&rho, h)?;
        max_drift = max_drift.max(d_fwd);
        let y_rep = report(&rho_y, &pi_y)?;

        let (mut rho_x, d_bwd) = kernel.apply(&rho_y)?;
        max_drift = max_drift.max(d_bwd);

        if eps_mix > 0.0 {
            // corrupted conditional (1-e) R_y + e N(y, hI); at the channel
            // level the corruption term is another forward Gaussian step
            let (corrupt, _) = gaussian_channel_with_drift(&rho_y, h)?;
            for (v, &c) in rho_x.values.iter_mut().zip(&corrupt.values) {
                *v = (1.0 - eps_mix) * *v + eps_mix * c;
            }
            rho_x.normalize();

            // measure chi^2(corrupted || ideal) per y node over the y-law's
            // effective support
            let y_max = rho_y.values.iter().cloned().fold(0.0, f64::max);
            let ax = &rho_y.axes[0];
            let t = &kernel.kernels[0];
            for j in 0..rho_y.len() {
                if rho_y.values[j] < 1e-10 * y_max {
                    continue;
                }
                let chi = *chi_cache[j].get_or_insert_with(|| {
                    let r = kernel.conditional_column_1d(j);
                    let mut acc = 0.0;
                    for (i, &ri) in r.iter().enumerate() {
                        if ri < 1e-280 {
                            continue;
                        }
                        let lag = if i > j { i - j } else { j - i };
                        let ci = t[lag] / corruption_norm;
                        let diff = ci - ri;
                        acc += ax.weight(i) * diff * diff / ri;
                    }
                    eps_mix * eps_mix * acc
                });
                let cur = rgo_chi_sq.get_or_insert(0.0);
                *cur = cur.max(chi);
            }
        }

        let x_rep = report(&rho_x, &pi_x)?;
        fi_sum += x_rep.fi;
        for (a, &v) in avg.iter_mut().zip(&rho_x.values) {
            *a += v;
        }
        iterates.push(IterateRecord {
            k,
            y: y_rep,
            x: x_rep,
        });
        rho = rho_x;
    }

    let mut averaged_density = GridDensity {
        axes: rho.axes.clone(),
        values: avg.iter().map(|&v| v / k_iters as f64).collect(),
    };
    averaged_density.normalize();
    let averaged = report(&averaged_density, &pi_x)?;

    Ok(ChannelTrace {
        h,
        initial,
        iterates,
        fi_sum,
        averaged,
        max_drift,
        rgo_chi_sq,
        final_density: rho,
        averaged_density,
    })
}

/// Alternates forward and backward channels K times, recording divergence
/// reports of every iterate and of the averaged density.
pub fn run_ideal_chain(
    rho0: &GridDensity,
    potential: &Potential,
    h: f64,
    k_iters: usize,
) -> Result<ChannelTrace> {
    run_chain(rho0, potential, h, k_iters, 0.0)
}

/// Ideal chain with the backward conditional corrupted by an `eps_mix`
/// mixture with `N(y, hI)`; `eps_mix = 0` reproduces the ideal chain bitwise.
pub fn run_perturbed_chain(
    rho0: &GridDensity,
    potential: &Potential,
    h: f64,
    k_iters: usize,
    eps_mix: f64,
) -> Result<ChannelTrace> {
    run_chain(rho0, potential, h, k_iters, eps_mix)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct StepSlack {
    pub k: usize,
    /// `(KL_x(k-1) - KL_y(k)) - h(1-hL)/2 * FI_y(k)`
    pub forward: f64,
    /// `FI_y(k) - FI_x(k)`
    pub backward_fi: f64,
    /// `(2/h)(KL_y(k) - KL_x(k)) - FI_x(k)`
    pub backward_kl: f64,
}

impl StepSlack {
    pub fn pass(&self) -> bool {
        self.forward >= -SLACK_TOLERANCE
            && self.backward_fi >= -SLACK_TOLERANCE
            && self.backward_kl >= -SLACK_TOLERANCE
    }
}

/// Per-step slacks of the one-step inequalities: forward KL-drop vs Fisher
/// information, backward FI monotonicity, backward KL-drop bound.
pub fn check_step_inequalities(trace: &ChannelTrace, h: f64, smoothness: f64) -> Vec<StepSlack> {
    let mut out = Vec::with_capacity(trace.iterates.len());
    let mut prev_kl_x = trace.initial.kl;
    for rec in &trace.iterates {
        let forward = (prev_kl_x - rec.y.kl) - h * (1.0 - h * smoothness) / 2.0 * rec.y.fi;
        let backward_fi = rec.y.fi - rec.x.fi;
        let backward_kl = (2.0 / h) * (rec.y.kl - rec.x.kl) - rec.x.fi;
        out.push(StepSlack {
            k: rec.k,
            forward,
            backward_fi,
            backward_kl,
        });
        prev_kl_x = rec.x.kl;
    }
    out
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ChisqEnvelopePoint {
    pub k: usize,
    /// `max{chi^2(rho_k^X || pi^X), chi^2(rho_k^Y || pi^Y)}`
    pub measured: f64,
    /// `(1 + eps^2)^k (chi^2_0 + 1) - 1`
    pub bound: f64,
}

/// Checks the chi-square growth envelope of a (possibly perturbed) trace.
pub fn check_chisq_envelope(trace: &ChannelTrace) -> Vec<ChisqEnvelopePoint> {
    let eps_sq = trace.rgo_chi_sq.unwrap_or(0.0);
    let chi0 = trace.initial.chi_sq;
    trace
        .iterates
        .iter()
        .map(|rec| ChisqEnvelopePoint {
            k: rec.k,
            measured: rec.x.chi_sq.max(rec.y.chi_sq),
            bound: (1.0 + eps_sq).powi(rec.k as i32) * (chi0 + 1.0) - 1.0,
        })
        .collect()
}

/// One Euler-Maruyama density step: push `rho` through
/// `x' = x - eta grad f(x) + sqrt(2 eta) xi` at the law level (1D).
pub fn ula_density_step(rho: &GridDensity, potential: &Potential, eta: f64) -> Result<GridDensity> {
    if rho.dim() != 1 || potential.dim != 1 {
        return Err(Error::InvalidParameter(
            "ULA density evolution is 1D only".into(),
        ));
    }
    if !(eta > 0.0) || eta * potential.smoothness >= 1.0 {
        return Err(Error::Precondition(format!(
            "ULA step needs 0 < eta < 1/L, got {eta}"
        )));
    }
    let ax = rho.axes[0].clone();
    let nodes = ax.nodes();
    let norm = (4.0 * std::f64::consts::PI * eta).sqrt();
    // drifted means and weighted source masses
    let means: Vec<f64> = nodes
        .iter()
        .map(|&x| x - eta * potential.grad(&[x])[0])
        .collect();
    let src: Vec<f64> = (0..ax.n).map(|j| ax.weight(j) * rho.values[j]).collect();
    let values: Vec<f64> = (0..ax.n)
        .into_par_iter()
        .map(|i| {
            let xi = nodes[i];
            let mut s = 0.0;
            for (m, w) in means.iter().zip(&src) {
                let r = xi - m;
                s += w * (-r * r / (4.0 * eta)).exp();
            }
            s / norm
        })
        .collect();
    let mut out = GridDensity {
        axes: vec![ax],
        values,
    };
    out.normalize();
    Ok(out)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct KStarPoint {
    pub epsilon: f64,
    /// First K with `(1/K) sum_{k<=K} FI(rho_k || target) <= epsilon^2`, if
    /// reached within the iteration budget.
    pub k_star: Option<usize>,
    pub fi_at_k: f64,
}

/// Runs one chain and records, for each accuracy level, the first iteration
/// count at which the running mean of per-iterate Fisher informations drops
/// below `epsilon^2`; this mean is what the total-budget inequality controls
/// (the averaged *density* converges strictly faster, since its Fisher
/// information is quadratic in the deviation from the target). `epsilons`
/// must be strictly decreasing.
pub fn sweep_k_star(
    rho0: &GridDensity,
    potential: &Potential,
    h: f64,
    epsilons: &[f64],
    k_max: usize,
) -> Result<Vec<KStarPoint>> {
    if epsilons.is_empty() || epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter(
            "epsilon list must be nonempty and strictly decreasing".into(),
        ));
    }
    let l = potential.smoothness;
    if !(h > 0.0) || h * l >= 1.0 {
        return Err(Error::Precondition(format!(
            "chain needs 0 < h < 1/L; got h = {h}, L = {l}"
        )));
    }
    let axes = rho0.axes.clone();
    let pi_x = GridDensity::from_potential(axes.clone(), potential)?;
    let kernel = RgoKernel::new(potential, axes, h)?;
    let mut rho = rho0.clone();
    rho.normalize();

    let mut out = Vec::with_capacity(epsilons.len());
    let mut next = 0;
    let mut fi_sum = 0.0;
    for k in 1..=k_max {
        let (rho_y, _) = gaussian_channel_with_drift(&rho, h)?;
        let (rho_x, _) = kernel.apply(&rho_y)?;
        rho = rho_x;
        fi_sum += fi_grid(&rho, &pi_x)?;
        let fi = fi_sum / k as f64;
        while next < epsilons.len() && fi <= epsilons[next] * epsilons[next] {
            out.push(KStarPoint {
                epsilon: epsilons[next],
                k_star: Some(k),
                fi_at_k: fi,
            });
            next += 1;
        }
        if next == epsilons.len() {
            break;
        }
    }
    for &epsilon in &epsilons[next..] {
        out.push(KStarPoint {
            epsilon,
            k_star: None,
            fi_at_k: f64::NAN,
        });
    }
    Ok(out)
}
