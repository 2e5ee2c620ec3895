//! Target distributions `pi ∝ exp(-f)` with hand-coded derivatives and
//! certified log-smoothness constants.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A potential `f` defining the target `pi ∝ exp(-f)`.
///
/// Immutable after construction; evaluation has no side effects, so a
/// `Potential` is safe to share across threads.
#[derive(Clone)]
pub struct Potential {
    eval: ScalarFn,
    grad: VectorFn,
    /// Certified upper bound on the operator norm of the Hessian of `f`.
    pub smoothness: f64,
    pub dim: usize,
    /// Strong convexity constant of `f`; zero when non-log-concave.
    pub strong_convexity: f64,
    /// A known stationary point of `f`, when available.
    pub mode_hint: Option<Vec<f64>>,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential")
            .field("dim", &self.dim)
            .field("smoothness", &self.smoothness)
            .field("strong_convexity", &self.strong_convexity)
            .finish()
    }
}

impl Potential {
    pub fn new(
        eval: ScalarFn,
        grad: VectorFn,
        smoothness: f64,
        dim: usize,
        strong_convexity: f64,
        mode_hint: Option<Vec<f64>>,
    ) -> Self {
        Potential {
            eval,
            grad,
            smoothness,
            dim,
            strong_convexity,
            mode_hint,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim, "dimension mismatch in Potential::eval");
        (self.eval)(x)
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim, "dimension mismatch in Potential::grad");
        (self.grad)(x)
    }

    /// Checked variants returning hard errors on dimension mismatch.
    pub fn try_eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok((self.eval)(x))
    }

    /// Central finite-difference gradient, for invariant checks.
    pub fn fd_grad(&self, x: &[f64], eps: f64) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        let mut xp = x.to_vec();
        for i in 0..self.dim {
            xp[i] = x[i] + eps;
            let fp = self.eval(&xp);
            xp[i] = x[i] - eps;
            let fm = self.eval(&xp);
            xp[i] = x[i];
            g[i] = (fp - fm) / (2.0 * eps);
        }
        g
    }
}

/// Isotropic Gaussian parameters, used for analytic divergences and exact
/// inner sampling.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IsotropicGaussian {
    pub mean: Vec<f64>,
    pub variance: f64,
}

impl IsotropicGaussian {
    pub fn new(mean: Vec<f64>, variance: f64) -> Self {
        IsotropicGaussian { mean, variance }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let d = self.dim() as f64;
        let q: f64 = x
            .iter()
            .zip(&self.mean)
            .map(|(xi, mi)| (xi - mi) * (xi - mi))
            .sum();
        -q / (2.0 * self.variance) - 0.5 * d * (2.0 * std::f64::consts::PI * self.variance).ln()
    }
}

/// A named catalog target with optional analytic reference parameters.
#[derive(Clone, Debug)]
pub struct TargetCatalogEntry {
    pub name: String,
    pub potential: Potential,
    pub closed_form: Option<IsotropicGaussian>,
    /// Suggested 1D grid bounds covering the target's mass to ~10 effective
    /// standard deviations.
    pub bounds_hint: (f64, f64),
}

/// `f(x) = ||x - mean||^2 / (2 variance)`, so `L = alpha = 1/variance`.
pub fn make_gaussian(mean: Vec<f64>, variance: f64) -> Result<Potential> {
    if !(variance > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gaussian variance must be positive, got {variance}"
        )));
    }
    let dim = mean.len();
    if dim == 0 {
        return Err(Error::InvalidParameter("empty mean vector".into()));
    }
    let m = mean.clone();
    let m2 = mean.clone();
    let eval: ScalarFn = Arc::new(move |x: &[f64]| {
        x.iter()
            .zip(&m)
            .map(|(xi, mi)| (xi - mi) * (xi - mi))
            .sum::<f64>()
            / (2.0 * variance)
    });
    let grad: VectorFn = Arc::new(move |x: &[f64]| {
        x.iter().zip(&m2).map(|(xi, mi)| (xi - mi) / variance).collect()
    });
    Ok(Potential::new(
        eval,
        grad,
        1.0 / variance,
        dim,
        1.0 / variance,
        Some(mean),
    ))
}

/// Mixture of Gaussians with a common variance.
///
/// `f = -log sum_k w_k N(mean_k, variance)` including the normalizing
/// constant, so `exp(-f)` integrates to one. The certified smoothness is
/// `1/variance + D^2/variance^2` with `D` the largest pairwise mean
/// separation; this upper-bounds the Hessian norm of a Gaussian mixture
/// potential.
pub fn make_gaussian_mixture(
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    common_variance: f64,
) -> Result<Potential> {
    if weights.is_empty() || means.is_empty() {
        return Err(Error::InvalidParameter("empty mixture".into()));
    }
    if weights.len() != means.len() {
        return Err(Error::InvalidParameter(
            "weights and means length mismatch".into(),
        ));
    }
    if !(common_variance > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "mixture variance must be positive, got {common_variance}"
        )));
    }
    let sum: f64 = weights.iter().sum();
    if weights.iter().any(|w| *w <= 0.0) || (sum - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(
            "weights must be positive and sum to 1".into(),
        ));
    }
    let dim = means[0].len();
    if means.iter().any(|m| m.len() != dim) {
        return Err(Error::InvalidParameter(
            "mixture means have differing dimensions".into(),
        ));
    }

    let mut max_sep_sq: f64 = 0.0;
    for i in 0..means.len() {
        for j in (i + 1)..means.len() {
            let s: f64 = means[i]
                .iter()
                .zip(&means[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            max_sep_sq = max_sep_sq.max(s);
        }
    }
    let smoothness = 1.0 / common_variance + max_sep_sq / (common_variance * common_variance);

    let log_norm =
        0.5 * dim as f64 * (2.0 * std::f64::consts::PI * common_variance).ln();
    // log-sum-exp of the component log-weights at x
    let component_logs = move |x: &[f64], weights: &[f64], means: &[Vec<f64>]| -> Vec<f64> {
        weights
            .iter()
            .zip(means)
            .map(|(w, m)| {
                let q: f64 = x
                    .iter()
                    .zip(m)
                    .map(|(xi, mi)| (xi - mi) * (xi - mi))
                    .sum();
                w.ln() - q / (2.0 * common_variance)
            })
            .collect()
    };

    let w1 = weights.clone();
    let m1 = means.clone();
    let eval: ScalarFn = Arc::new(move |x: &[f64]| {
        let logs = component_logs(x, &w1, &m1);
        let lmax = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = lmax + logs.iter().map(|l| (l - lmax).exp()).sum::<f64>().ln();
        -(lse - log_norm)
    });

    let w2 = weights.clone();
    let m2 = means.clone();
    let grad: VectorFn = Arc::new(move |x: &[f64]| {
        let logs = component_logs(x, &w2, &m2);
        let lmax = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let resp: Vec<f64> = logs.iter().map(|l| (l - lmax).exp()).collect();
        let total: f64 = resp.iter().sum();
        let mut g = vec![0.0; x.len()];
        for (r, m) in resp.iter().zip(&m2) {
            let rk = r / total;
            for (gi, (xi, mi)) in g.iter_mut().zip(x.iter().zip(m)) {
                *gi += rk * (xi - mi) / common_variance;
            }
        }
        g
    });

    // Midpoint of the means, a reasonable centering hint for grid bounds.
    let mut center = vec![0.0; dim];
    for (w, m) in weights.iter().zip(&means) {
        for (c, mi) in center.iter_mut().zip(m) {
            *c += w * mi;
        }
    }

    Ok(Potential::new(eval, grad, smoothness, dim, 0.0, Some(center)))
}

/// 1D double well `f(x) = (x^2 - a)^2 / 4`, spliced to quadratic growth
/// beyond `clip_radius` so a finite smoothness constant exists.
pub fn make_double_well(a: f64, clip_radius: f64) -> Result<Potential> {
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "double-well parameter a must be positive, got {a}"
        )));
    }
    if !(clip_radius > a.sqrt()) {
        return Err(Error::InvalidParameter(format!(
            "clip_radius {clip_radius} must exceed the well location sqrt(a) = {}",
            a.sqrt()
        )));
    }
    // C^2 splice: beyond R, continue with the constant curvature f''(R).
    let r = clip_radius;
    let f_r = (r * r - a) * (r * r - a) / 4.0;
    let fp_r = r * (r * r - a);
    let fpp_r = 3.0 * r * r - a;
    // |f''| on [-R, R] is max(a at 0, 3R^2 - a at R); the splice keeps 3R^2 - a.
    let smoothness = a.max(fpp_r);

    let eval: ScalarFn = Arc::new(move |x: &[f64]| {
        let t = x[0].abs();
        if t <= r {
            let u = t * t - a;
            u * u / 4.0
        } else {
            let s = t - r;
            f_r + fp_r * s + 0.5 * fpp_r * s * s
        }
    });
    let grad: VectorFn = Arc::new(move |x: &[f64]| {
        let t = x[0];
        let at = t.abs();
        let g = if at <= r {
            t * (t * t - a)
        } else {
            let s = at - r;
            (fp_r + fpp_r * s) * t.signum()
        };
        vec![g]
    });

    Ok(Potential::new(
        eval,
        grad,
        smoothness,
        1,
        0.0,
        Some(vec![a.sqrt()]),
    ))
}

/// Parses a catalog name: `gaussian(mean,variance)`, `mixture2(m1,m2,variance)`
/// (equal weights), or `doublewell(a,clip_radius)`. 1D only.
pub fn catalog_entry(name: &str) -> Result<TargetCatalogEntry> {
    let trimmed = name.trim();
    let (head, args) = parse_call(trimmed)?;
    let entry = match head {
        "gaussian" => {
            expect_args(trimmed, &args, 2)?;
            let potential = make_gaussian(vec![args[0]], args[1])?;
            let sd = args[1].sqrt();
            TargetCatalogEntry {
                name: trimmed.to_string(),
                potential,
                closed_form: Some(IsotropicGaussian::new(vec![args[0]], args[1])),
                bounds_hint: (args[0] - 10.0 * sd, args[0] + 10.0 * sd),
            }
        }
        "mixture2" => {
            expect_args(trimmed, &args, 3)?;
            let potential = make_gaussian_mixture(
                vec![0.5, 0.5],
                vec![vec![args[0]], vec![args[1]]],
                args[2],
            )?;
            let sd = args[2].sqrt();
            TargetCatalogEntry {
                name: trimmed.to_string(),
                potential,
                closed_form: None,
                bounds_hint: (
                    args[0].min(args[1]) - 10.0 * sd,
                    args[0].max(args[1]) + 10.0 * sd,
                ),
            }
        }
        "doublewell" => {
            expect_args(trimmed, &args, 2)?;
            let potential = make_double_well(args[0], args[1])?;
            TargetCatalogEntry {
                name: trimmed.to_string(),
                potential,
                closed_form: None,
                bounds_hint: (-(args[1] + 1.0), args[1] + 1.0),
            }
        }
        other => {
            return Err(Error::Config(format!("unknown target {other:?} in {trimmed:?}")));
        }
    };
    Ok(entry)
}

fn parse_call(s: &str) -> Result<(&str, Vec<f64>)> {
    let open = s
        .find('(')
        .ok_or_else(|| Error::Config(format!("malformed target {s:?}: missing '('")))?;
    if !s.ends_with(')') {
        return Err(Error::Config(format!("malformed target {s:?}: missing ')'")));
    }
    let head = &s[..open];
    let inner = &s[open + 1..s.len() - 1];
    let mut args = Vec::new();
    for tok in inner.split(',') {
        let tok = tok.trim();
        let v: f64 = tok
            .parse()
            .map_err(|_| Error::Config(format!("bad numeric token {tok:?} in target {s:?}")))?;
        args.push(v);
    }
    Ok((head, args))
}

fn expect_args(name: &str, args: &[f64], n: usize) -> Result<()> {
    if args.len() != n {
        return Err(Error::Config(format!(
            "target {name:?} expects {n} arguments, got {}",
            args.len()
        )));
    }
    Ok(())
}
