use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::Density1D;
use crate::error::{Error, Result};

/// Above this many pooled observations (or with ties) the U null
/// distribution is approximated by a normal.
pub const EXACT_MANN_WHITNEY_MAX: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// Rank-sum statistic for the first sample.
    pub u: f64,
    /// Two-sided p-value.
    pub p_value: f64,
}

/// Two-sided Mann-Whitney U test.
///
/// Small tie-free samples use the exact permutation distribution of U.
/// Otherwise the normal approximation with tie and continuity correction is
/// used.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("Mann-Whitney U needs two non-empty samples".into()));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::InvalidInput("Mann-Whitney U input contains NaN".into()));
    }
    let (n1, n2) = (a.len(), b.len());
    let n = n1 + n2;

    let mut pooled: Vec<(f64, bool)> = a
        .iter()
        .map(|&x| (x, true))
        .chain(b.iter().map(|&x| (x, false)))
        .collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));

    // Average ranks over tie groups.
    let mut rank_sum_a = 0.0;
    let mut tie_term = 0.0;
    let mut has_ties = false;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && pooled[j].0 == pooled[i].0 {
            j += 1;
        }
        let t = (j - i) as f64;
        let avg_rank = (i + j + 1) as f64 / 2.0;
        rank_sum_a += avg_rank * pooled[i..j].iter().filter(|p| p.1).count() as f64;
        if j - i > 1 {
            has_ties = true;
            tie_term += t * t * t - t;
        }
        i = j;
    }
    let (n1f, n2f, nf) = (n1 as f64, n2 as f64, n as f64);
    let u = rank_sum_a - n1f * (n1f + 1.0) / 2.0;

    let p_value = if !has_ties && n <= EXACT_MANN_WHITNEY_MAX {
        exact_p_value(n1, n2, u.round() as usize)
    } else {
        let mean = n1f * n2f / 2.0;
        let var = n1f * n2f / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
        if var <= 0.0 {
            1.0
        } else {
            let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
            erfc(z / std::f64::consts::SQRT_2).min(1.0)
        }
    };
    Ok(MannWhitney { u, p_value })
}

/// Number of orderings of `n1 + n2` distinct values giving each U value.
fn u_null_counts(n1: usize, n2: usize) -> Vec<u64> {
    // table[m][k] holds counts for sample sizes (m, k), indexed by U.
    let max_u = n1 * n2;
    let mut table = vec![vec![Vec::<u64>::new(); n2 + 1]; n1 + 1];
    for m in 0..=n1 {
        for k in 0..=n2 {
            let mut counts = vec![0u64; m * k + 1];
            if m == 0 || k == 0 {
                counts[0] = 1;
            } else {
                // Largest value belongs to the first sample (adds k to U) or not.
                for (u, c) in table[m - 1][k].iter().enumerate() {
                    counts[u + k] += c;
                }
                for (u, c) in table[m][k - 1].iter().enumerate() {
                    counts[u] += c;
                }
            }
            table[m][k] = counts;
        }
    }
    let out = std::mem::take(&mut table[n1][n2]);
    debug_assert_eq!(out.len(), max_u + 1);
    out
}

fn exact_p_value(n1: usize, n2: usize, u: usize) -> f64 {
    let counts = u_null_counts(n1, n2);
    let total: u64 = counts.iter().sum();
    let lower: u64 = counts[..=u].iter().sum();
    let upper: u64 = counts[u..].iter().sum();
    (2.0 * lower.min(upper) as f64 / total as f64).min(1.0)
}

/// Pearson product-moment correlation.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "pearson_r needs two equal-length samples of at least 2, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::UndefinedCorrelation("first"));
    }
    if syy == 0.0 {
        return Err(Error::UndefinedCorrelation("second"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Root-mean-squared elementwise deviation.
pub fn rmsd(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::InvalidInput(format!(
            "rmsd needs two equal-length non-empty samples, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let ss: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
    Ok((ss / x.len() as f64).sqrt())
}

/// Kolmogorov-Smirnov distance between binned samples and a binned
/// distribution on the same bins.
pub fn ks_distance_binned(sample_bins: &[usize], masses: &[f64]) -> Result<f64> {
    if sample_bins.is_empty() {
        return Err(Error::InvalidInput("KS distance needs samples".into()));
    }
    let mut counts = vec![0usize; masses.len()];
    for &b in sample_bins {
        *counts
            .get_mut(b)
            .ok_or_else(|| Error::InvalidInput(format!("sample bin {b} outside {} bins", masses.len())))? += 1;
    }
    let n = sample_bins.len() as f64;
    let (mut fe, mut fp, mut d) = (0.0, 0.0, 0.0f64);
    for (c, m) in counts.iter().zip(masses) {
        fe += *c as f64 / n;
        fp += m;
        d = d.max((fe - fp).abs());
    }
    Ok(d)
}

/// KS distance between scalar samples and a binned density.
pub fn ks_distance_1d(samples: &[f64], density: &Density1D) -> Result<f64> {
    let support = density.support();
    let bins = samples
        .iter()
        .map(|&x| {
            support
                .bin_of(x)
                .ok_or_else(|| Error::InvalidInput(format!("sample {x} outside [{}, {}]", support.lo, support.hi)))
        })
        .collect::<Result<Vec<_>>>()?;
    ks_distance_binned(&bins, density.masses())
}

pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidInput("median of an empty sample".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Ok(if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    })
}
