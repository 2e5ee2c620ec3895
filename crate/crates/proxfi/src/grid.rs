//! Discretized probability densities on uniform 1D/2D grids with trapezoid
//! quadrature weights.

use crate::error::{Error, Result};
use crate::targets::Potential;

/// One uniform grid axis.
#[derive(Clone, Debug, PartialEq)]
pub struct GridAxis {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl GridAxis {
    pub fn new(min: f64, max: f64, n: usize) -> Result<Self> {
        if !(max > min) || n < 3 {
            return Err(Error::InvalidParameter(format!(
                "bad grid axis [{min}, {max}] with {n} points"
            )));
        }
        Ok(GridAxis { min, max, n })
    }

    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / (self.n - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.min + i as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Trapezoid quadrature weight of node `i`.
    pub fn weight(&self, i: usize) -> f64 {
        let d = self.spacing();
        if i == 0 || i == self.n - 1 {
            0.5 * d
        } else {
            d
        }
    }
}

/// A nonnegative density sampled at the nodes of a 1D or 2D uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridDensity {
    pub axes: Vec<GridAxis>,
    /// Row-major node values in density units.
    pub values: Vec<f64>,
}

impl GridDensity {
    pub fn from_fn_1d(axis: GridAxis, f: impl Fn(f64) -> f64) -> Self {
        let values = axis.nodes().iter().map(|&x| f(x)).collect();
        GridDensity {
            axes: vec![axis],
            values,
        }
    }

    pub fn from_fn_2d(ax: GridAxis, ay: GridAxis, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(ax.n * ay.n);
        for i in 0..ax.n {
            let x = ax.node(i);
            for j in 0..ay.n {
                values.push(f(x, ay.node(j)));
            }
        }
        GridDensity {
            axes: vec![ax, ay],
            values,
        }
    }

    /// Normalized density proportional to `exp(-f)` for a catalog potential.
    pub fn from_potential(axes: Vec<GridAxis>, potential: &Potential) -> Result<Self> {
        if axes.len() != potential.dim {
            return Err(Error::DimensionMismatch {
                expected: potential.dim,
                got: axes.len(),
            });
        }
        let mut g = match axes.len() {
            1 => {
                let ax = axes[0].clone();
                // subtract the min of f on the grid before exponentiating
                let fvals: Vec<f64> = ax.nodes().iter().map(|&x| potential.eval(&[x])).collect();
                let fmin = fvals.iter().cloned().fold(f64::INFINITY, f64::min);
                GridDensity {
                    axes,
                    values: fvals.iter().map(|&f| (fmin - f).exp()).collect(),
                }
            }
            2 => {
                let (ax, ay) = (axes[0].clone(), axes[1].clone());
                let mut fvals = Vec::with_capacity(ax.n * ay.n);
                for i in 0..ax.n {
                    for j in 0..ay.n {
                        fvals.push(potential.eval(&[ax.node(i), ay.node(j)]));
                    }
                }
                let fmin = fvals.iter().cloned().fold(f64::INFINITY, f64::min);
                GridDensity {
                    axes,
                    values: fvals.iter().map(|&f| (fmin - f).exp()).collect(),
                }
            }
            d => {
                return Err(Error::InvalidParameter(format!(
                    "grids support 1 or 2 dimensions, got {d}"
                )))
            }
        };
        g.normalize();
        Ok(g)
    }

    /// Normalized isotropic Gaussian on the given axes.
    pub fn gaussian(axes: Vec<GridAxis>, mean: &[f64], variance: f64) -> Result<Self> {
        let p = crate::targets::make_gaussian(mean.to_vec(), variance)?;
        Self::from_potential(axes, &p)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_grid(&self, other: &GridDensity) -> bool {
        self.axes == other.axes
    }

    /// Trapezoid quadrature weight of flat node index `idx`.
    pub fn weight(&self, idx: usize) -> f64 {
        match self.axes.len() {
            1 => self.axes[0].weight(idx),
            2 => {
                let ny = self.axes[1].n;
                self.axes[0].weight(idx / ny) * self.axes[1].weight(idx % ny)
            }
            _ => unreachable!(),
        }
    }

    /// Quadrature of `g` over the grid against this density's weights.
    pub fn integrate(&self, g: impl Fn(usize, f64) -> f64) -> f64 {
        let mut s = 0.0;
        for (idx, &v) in self.values.iter().enumerate() {
            s += self.weight(idx) * g(idx, v);
        }
        s
    }

    pub fn mass(&self) -> f64 {
        self.integrate(|_, v| v)
    }

    /// Rescales to unit mass; returns the drift `|mass - 1|` before rescaling.
    pub fn normalize(&mut self) -> f64 {
        let m = self.mass();
        let drift = (m - 1.0).abs();
        if m > 0.0 {
            for v in &mut self.values {
                *v /= m;
            }
        }
        drift
    }

    /// Mean along each axis.
    pub fn mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim()];
        for (idx, &v) in self.values.iter().enumerate() {
            let w = self.weight(idx) * v;
            for (a, c) in mean.iter_mut().zip(self.coords(idx)) {
                *a += w * c;
            }
        }
        mean
    }

    /// Marginal variance along each axis.
    pub fn variance(&self) -> Vec<f64> {
        let mean = self.mean();
        let mut var = vec![0.0; self.dim()];
        for (idx, &v) in self.values.iter().enumerate() {
            let w = self.weight(idx) * v;
            for ((a, c), m) in var.iter_mut().zip(self.coords(idx)).zip(&mean) {
                *a += w * (c - m) * (c - m);
            }
        }
        var
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        match self.axes.len() {
            1 => vec![self.axes[0].node(idx)],
            2 => {
                let ny = self.axes[1].n;
                vec![self.axes[0].node(idx / ny), self.axes[1].node(idx % ny)]
            }
            _ => unreachable!(),
        }
    }

    pub fn sup_diff(&self, other: &GridDensity) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Cumulative distribution at each node (1D only), for K-S statistics.
    pub fn cdf_1d(&self) -> Result<Vec<f64>> {
        if self.dim() != 1 {
            return Err(Error::InvalidParameter("cdf_1d requires a 1D grid".into()));
        }
        let d = self.axes[0].spacing();
        let mut cdf = Vec::with_capacity(self.values.len());
        let mut acc = 0.0;
        cdf.push(0.0);
        for w in self.values.windows(2) {
            acc += 0.5 * d * (w[0] + w[1]);
            cdf.push(acc);
        }
        let total = *cdf.last().unwrap();
        if total > 0.0 {
            for c in &mut cdf {
                *c /= total;
            }
        }
        Ok(cdf)
    }

    /// Kolmogorov-Smirnov distance between empirical samples and this 1D
    /// density's quadrature CDF.
    pub fn ks_distance(&self, samples: &[f64]) -> Result<f64> {
        let cdf = self.cdf_1d()?;
        let ax = &self.axes[0];
        let mut sorted = samples.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = sorted.len() as f64;
        let mut ks: f64 = 0.0;
        for (i, &s) in sorted.iter().enumerate() {
            // linear interpolation of the grid CDF at s
            let f = if s <= ax.min {
                0.0
            } else if s >= ax.max {
                1.0
            } else {
                let t = (s - ax.min) / ax.spacing();
                let j = t.floor() as usize;
                let frac = t - j as f64;
                cdf[j] + frac * (cdf[j + 1] - cdf[j])
            };
            let lo = i as f64 / n;
            let hi = (i + 1) as f64 / n;
            ks = ks.max((f - lo).abs()).max((f - hi).abs());
        }
        Ok(ks)
    }
}
