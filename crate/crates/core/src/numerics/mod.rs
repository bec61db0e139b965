//! Seeded randomness, elementary samplers, densities, kernel smoothing and
//! the statistics the rest of the crate is built on.

mod density;
mod kde;
mod rng;
mod sample;
mod stats;

pub use density::{Density1D, DensityGrid2D, Support1D, DEFAULT_BINS, GRID_RESOLUTION, MASS_TOLERANCE};
pub use kde::{kde_1d, kde_2d, silverman, Bandwidth};
pub use rng::{fork_seed, RandomStream};
pub use sample::{sample_binomial, sample_uniform_int, sample_uniform_real};
pub use stats::{
    ks_distance_1d, ks_distance_binned, mann_whitney_u, median, pearson_r, rmsd, MannWhitney, EXACT_MANN_WHITNEY_MAX,
};
