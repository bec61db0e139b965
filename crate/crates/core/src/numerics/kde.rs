//! Gaussian kernel density estimates evaluated on bounded bins.
//!
//! Kernel mass that falls outside the support is dropped and the remainder
//! renormalized, so estimates near the edges of `[lo, hi]` (or the unit
//! square) are not reflected.

use serde::{Deserialize, Serialize};

use super::density::{axis_value, Density1D, DensityGrid2D, Support1D};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bandwidth {
    /// Silverman's rule of thumb, never narrower than one bin.
    #[default]
    Auto,
    Fixed(f64),
}

impl Bandwidth {
    fn resolve(self, samples: impl ExactSizeIterator<Item = f64> + Clone, bin: f64) -> Result<f64> {
        match self {
            Bandwidth::Fixed(h) if h > 0.0 && h.is_finite() => Ok(h),
            Bandwidth::Fixed(h) => Err(Error::InvalidParameter(format!("bandwidth must be positive, got {h}"))),
            Bandwidth::Auto => Ok(silverman(samples).max(bin)),
        }
    }
}

/// `1.06 * sd * n^(-1/5)` with the sample standard deviation.
pub fn silverman(samples: impl ExactSizeIterator<Item = f64> + Clone) -> f64 {
    let n = samples.len();
    if n < 2 {
        return 0.0;
    }
    let mean = samples.clone().sum::<f64>() / n as f64;
    let var = samples.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    1.06 * var.sqrt() * (n as f64).powf(-0.2)
}

fn kernel_row(points: impl Iterator<Item = f64>, x: f64, h: f64) -> impl Iterator<Item = f64> {
    points.map(move |p| {
        let z = (p - x) / h;
        (-0.5 * z * z).exp()
    })
}

pub fn kde_1d(samples: &[f64], bandwidth: Bandwidth, support: Support1D) -> Result<Density1D> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("KDE needs at least one sample".into()));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("KDE samples must be finite".into()));
    }
    let h = bandwidth.resolve(samples.iter().copied(), support.bin_width())?;
    let mut weights = vec![0.0; support.bins];
    for &x in samples {
        for (w, k) in weights.iter_mut().zip(kernel_row(support.centers(), x, h)) {
            *w += k;
        }
    }
    if weights.iter().sum::<f64>() <= 0.0 {
        // Every sample sits many bandwidths outside the support; fall back
        // to the nearest edge bin rather than dividing by zero.
        for &x in samples {
            let i = if x < support.lo { 0 } else { support.bins - 1 };
            weights[i] += 1.0;
        }
    }
    Density1D::from_weights(support, weights)
}

/// Product-kernel estimate on the `resolution x resolution` unit-square grid.
pub fn kde_2d(samples: &[(f64, f64)], bandwidth: Bandwidth, resolution: usize) -> Result<DensityGrid2D> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("KDE needs at least one sample".into()));
    }
    if samples.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
        return Err(Error::InvalidInput("KDE samples must be finite".into()));
    }
    if resolution < 2 {
        return Err(Error::InvalidInput("grid needs at least 2 points per axis".into()));
    }
    let step = 1.0 / (resolution - 1) as f64;
    let h0 = bandwidth.resolve(samples.iter().map(|s| s.0), step)?;
    let h1 = bandwidth.resolve(samples.iter().map(|s| s.1), step)?;
    let axis = || (0..resolution).map(|i| axis_value(resolution, i));

    let mut weights = vec![0.0; resolution * resolution];
    let mut k1 = vec![0.0; resolution];
    for &(x0, x1) in samples {
        k1.iter_mut().zip(kernel_row(axis(), x1, h1)).for_each(|(k, v)| *k = v);
        for (row, a) in weights.chunks_mut(resolution).zip(kernel_row(axis(), x0, h0)) {
            if a < 1e-300 {
                continue;
            }
            row.iter_mut().zip(&k1).for_each(|(w, b)| *w += a * b);
        }
    }
    if weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::InvalidInput(
            "KDE samples lie entirely outside the unit square".into(),
        ));
    }
    DensityGrid2D::from_weights(resolution, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{RandomStream, GRID_RESOLUTION};

    fn unit(bins: usize) -> Support1D {
        Support1D::new(0.0, 1.0, bins).unwrap()
    }

    #[test]
    fn empty_samples_rejected() {
        assert!(kde_1d(&[], Bandwidth::Auto, unit(100)).is_err());
        assert!(kde_2d(&[], Bandwidth::Auto, GRID_RESOLUTION).is_err());
        assert!(kde_1d(&[0.5], Bandwidth::Fixed(0.0), unit(100)).is_err());
    }

    #[test]
    fn single_sample_is_symmetric() {
        let d = kde_1d(&[0.5], Bandwidth::Auto, unit(100)).unwrap();
        let m = d.masses();
        let asym = (0..50).map(|i| (m[i] - m[99 - i]).abs()).fold(0.0, f64::max);
        assert!(asym < 1e-9, "asymmetry {asym}");
        assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn identical_samples_peak_at_their_bin() {
        let d = kde_1d(&[0.731; 40], Bandwidth::Auto, unit(100)).unwrap();
        assert_eq!(d.mode_bin(), 73);
        let g = kde_2d(&[(0.3, 0.7); 25], Bandwidth::Auto, GRID_RESOLUTION).unwrap();
        assert_eq!(g.argmax(), (30, 70));
    }

    #[test]
    fn far_outside_samples_do_not_divide_by_zero() {
        let d = kde_1d(&[50.0], Bandwidth::Fixed(0.01), unit(10)).unwrap();
        assert_eq!(d.masses()[9], 1.0);
    }

    #[test]
    fn grid_estimate_is_normalized_and_non_negative() {
        let mut rng = RandomStream::new(11);
        let pts: Vec<_> = (0..300).map(|_| (rng.next_f64(), rng.next_f64().powi(3))).collect();
        let g = kde_2d(&pts, Bandwidth::Auto, GRID_RESOLUTION).unwrap();
        assert!((g.masses().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(g.masses().iter().all(|m| *m >= 0.0));
    }
}
