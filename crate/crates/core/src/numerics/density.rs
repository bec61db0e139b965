use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a normalized density.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Default number of bins for scalar hypothesis spaces.
pub const DEFAULT_BINS: usize = 100;

/// Points per axis of the causal-strength grid (0.00, 0.01, ..., 1.00).
pub const GRID_RESOLUTION: usize = 101;

/// Uniform binning of a closed interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Support1D {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl Support1D {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(Error::InvalidInput(format!(
                "support [{lo}, {hi}] must be finite with lo < hi"
            )));
        }
        if bins < 2 {
            return Err(Error::InvalidInput(format!(
                "support needs at least 2 bins, got {bins}"
            )));
        }
        Ok(Self { lo, hi, bins })
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.bin_width()
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.bins).map(move |i| self.center(i))
    }

    /// Bin holding `x`; `hi` itself belongs to the last bin.
    pub fn bin_of(&self, x: f64) -> Option<usize> {
        if !(self.lo..=self.hi).contains(&x) {
            return None;
        }
        let i = ((x - self.lo) / self.bin_width()).floor() as usize;
        Some(i.min(self.bins - 1))
    }
}

fn normalize(weights: &mut [f64]) -> Result<()> {
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidInput(
            "density weights must be finite and non-negative".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidInput("density has zero total mass".into()));
    }
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(())
}

fn check_normalized(masses: &[f64]) -> Result<()> {
    if masses.iter().any(|m| !m.is_finite() || *m < 0.0) {
        return Err(Error::InvalidInput(
            "density masses must be finite and non-negative".into(),
        ));
    }
    let total: f64 = masses.iter().sum();
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::InvalidInput(format!(
            "density masses sum to {total}, expected 1"
        )));
    }
    Ok(())
}

/// Probability mass on uniform bins of a bounded interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Density1D {
    support: Support1D,
    masses: Vec<f64>,
}

impl Density1D {
    /// Wraps already-normalized masses.
    pub fn new(lo: f64, hi: f64, masses: Vec<f64>) -> Result<Self> {
        let support = Support1D::new(lo, hi, masses.len())?;
        check_normalized(&masses)?;
        Ok(Self { support, masses })
    }

    /// Normalizes arbitrary non-negative weights onto `support`.
    pub fn from_weights(support: Support1D, mut weights: Vec<f64>) -> Result<Self> {
        if weights.len() != support.bins {
            return Err(Error::InvalidInput(format!(
                "{} weights for {} bins",
                weights.len(),
                support.bins
            )));
        }
        normalize(&mut weights)?;
        Ok(Self {
            support,
            masses: weights,
        })
    }

    pub fn uniform(support: Support1D) -> Self {
        let m = 1.0 / support.bins as f64;
        Self {
            support,
            masses: vec![m; support.bins],
        }
    }

    /// Beta(a, b) rescaled onto the support, discretized by CDF differences
    /// so densities that diverge at the endpoints stay finite.
    pub fn beta(support: Support1D, a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "beta shape parameters must be positive, got ({a}, {b})"
            )));
        }
        let n = support.bins;
        let cdf = |i: usize| -> f64 {
            match i {
                0 => 0.0,
                i if i == n => 1.0,
                i => statrs::function::beta::beta_reg(a, b, i as f64 / n as f64),
            }
        };
        let weights = (0..n).map(|i| (cdf(i + 1) - cdf(i)).max(0.0)).collect();
        Self::from_weights(support, weights)
    }

    pub fn support(&self) -> Support1D {
        self.support
    }

    pub fn lo(&self) -> f64 {
        self.support.lo
    }

    pub fn hi(&self) -> f64 {
        self.support.hi
    }

    pub fn bins(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn center(&self, i: usize) -> f64 {
        self.support.center(i)
    }

    /// Cumulative mass through the end of each bin.
    pub fn cdf(&self) -> Vec<f64> {
        self.masses
            .iter()
            .scan(0.0, |acc, m| {
                *acc += m;
                Some(*acc)
            })
            .collect()
    }

    pub fn mean(&self) -> f64 {
        self.masses.iter().enumerate().map(|(i, m)| m * self.center(i)).sum()
    }

    /// Center of the first bin whose cumulative mass reaches `q`.
    pub fn quantile(&self, q: f64) -> f64 {
        let cdf = self.cdf();
        let i = cdf.partition_point(|c| *c < q - MASS_TOLERANCE).min(self.bins() - 1);
        self.center(i)
    }

    pub fn mode_bin(&self) -> usize {
        argmax(&self.masses)
    }
}

/// Probability mass over an `n x n` grid of the unit square.
///
/// Cell `(i, j)` sits at `(w0, w1) = (i / (n - 1), j / (n - 1))`; masses are
/// stored row-major with `w0` as the row.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid2D {
    resolution: usize,
    masses: Vec<f64>,
}

impl DensityGrid2D {
    pub fn new(resolution: usize, masses: Vec<f64>) -> Result<Self> {
        Self::check_shape(resolution, masses.len())?;
        check_normalized(&masses)?;
        Ok(Self { resolution, masses })
    }

    pub fn from_weights(resolution: usize, mut weights: Vec<f64>) -> Result<Self> {
        Self::check_shape(resolution, weights.len())?;
        normalize(&mut weights)?;
        Ok(Self {
            resolution,
            masses: weights,
        })
    }

    pub fn uniform(resolution: usize) -> Self {
        let cells = resolution * resolution;
        Self {
            resolution,
            masses: vec![1.0 / cells as f64; cells],
        }
    }

    /// Normalized weights `f(w0, w1)` evaluated at every cell.
    pub fn from_fn(resolution: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let weights = (0..resolution * resolution)
            .map(|c| {
                let (i, j) = (c / resolution, c % resolution);
                f(axis_value(resolution, i), axis_value(resolution, j))
            })
            .collect();
        Self::from_weights(resolution, weights)
    }

    fn check_shape(resolution: usize, len: usize) -> Result<()> {
        if resolution < 2 || len != resolution * resolution {
            return Err(Error::InvalidInput(format!(
                "grid of resolution {resolution} cannot hold {len} cells"
            )));
        }
        Ok(())
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn mass(&self, i: usize, j: usize) -> f64 {
        self.masses[i * self.resolution + j]
    }

    pub fn axis_value(&self, i: usize) -> f64 {
        axis_value(self.resolution, i)
    }

    /// `(w0, w1)` coordinates of a flat cell index.
    pub fn cell_coords(&self, cell: usize) -> (f64, f64) {
        (
            self.axis_value(cell / self.resolution),
            self.axis_value(cell % self.resolution),
        )
    }

    /// Nearest grid index for a strength in `[0, 1]`.
    pub fn nearest_index(&self, w: f64) -> usize {
        nearest_index(self.resolution, w)
    }

    pub fn marginal_w0(&self) -> Vec<f64> {
        self.masses
            .chunks(self.resolution)
            .map(|row| row.iter().sum())
            .collect()
    }

    pub fn marginal_w1(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.resolution];
        for row in self.masses.chunks(self.resolution) {
            out.iter_mut().zip(row).for_each(|(o, m)| *o += m);
        }
        out
    }

    pub fn argmax(&self) -> (usize, usize) {
        let c = argmax(&self.masses);
        (c / self.resolution, c % self.resolution)
    }
}

pub(crate) fn axis_value(resolution: usize, i: usize) -> f64 {
    i as f64 / (resolution - 1) as f64
}

pub(crate) fn nearest_index(resolution: usize, w: f64) -> usize {
    let i = (w.clamp(0.0, 1.0) * (resolution - 1) as f64).round() as usize;
    i.min(resolution - 1)
}

fn argmax(xs: &[f64]) -> usize {
    xs.iter()
        .enumerate()
        .fold(
            (0, f64::NEG_INFINITY),
            |best, (i, &x)| {
                if x > best.1 {
                    (i, x)
                } else {
                    best
                }
            },
        )
        .0
}
