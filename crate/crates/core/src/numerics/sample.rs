use super::RandomStream;
use crate::error::{Error, Result};

/// Uniform integer on the closed range `[lo, hi]`.
pub fn sample_uniform_int(rng: &mut RandomStream, lo: i64, hi: i64) -> Result<i64> {
    if lo > hi {
        return Err(Error::InvalidRange { lo, hi });
    }
    Ok(rng.range_i64(lo, hi))
}

/// Uniform real on `[lo, hi]`; returns `lo` when the interval is a point.
pub fn sample_uniform_real(rng: &mut RandomStream, lo: f64, hi: f64) -> Result<f64> {
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(Error::InvalidInput(format!(
            "uniform interval [{lo}, {hi}] is empty or unbounded"
        )));
    }
    Ok((lo + (hi - lo) * rng.next_f64()).min(hi))
}

/// Binomial draw as a count of `n` Bernoulli successes.
///
/// The task likelihoods only ever use small `n` (at most a few dozen), where
/// summing Bernoulli trials is exact and cheap.
pub fn sample_binomial(rng: &mut RandomStream, n: u32, p: f64) -> Result<u32> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    Ok((0..n).filter(|_| rng.next_f64() < p).count() as u32)
}

#[cfg(test)]
mod tests {
    use super::*;

    const DRAWS: usize = 100_000;

    #[test]
    fn singleton_range() {
        let mut rng = RandomStream::new(1);
        for _ in 0..100 {
            assert_eq!(sample_uniform_int(&mut rng, 5, 5).unwrap(), 5);
        }
    }

    #[test]
    fn reversed_range_is_an_error() {
        let mut rng = RandomStream::new(1);
        assert!(matches!(
            sample_uniform_int(&mut rng, 3, 2),
            Err(Error::InvalidRange { lo: 3, hi: 2 })
        ));
    }

    #[test]
    fn uniform_int_frequencies_within_three_sigma() {
        let mut rng = RandomStream::new(2);
        let mut counts = [0usize; 80];
        for _ in 0..DRAWS {
            let v = sample_uniform_int(&mut rng, 1, 80).unwrap();
            counts[(v - 1) as usize] += 1;
        }
        let p = 1.0 / 80.0;
        let expected = DRAWS as f64 * p;
        let sigma = (DRAWS as f64 * p * (1.0 - p)).sqrt();
        for (i, &c) in counts.iter().enumerate() {
            assert!(
                (c as f64 - expected).abs() < 3.0 * sigma,
                "value {} drawn {c} times",
                i + 1
            );
        }
    }

    #[test]
    fn uniform_int_two_values_mean() {
        let mut rng = RandomStream::new(3);
        let sum: i64 = (0..DRAWS).map(|_| sample_uniform_int(&mut rng, 1, 2).unwrap()).sum();
        assert!((sum as f64 / DRAWS as f64 - 1.5).abs() < 0.01);
    }

    #[test]
    fn binomial_degenerate_cases() {
        let mut rng = RandomStream::new(4);
        for _ in 0..1000 {
            assert_eq!(sample_binomial(&mut rng, 10, 0.0).unwrap(), 0);
            assert_eq!(sample_binomial(&mut rng, 10, 1.0).unwrap(), 10);
        }
    }

    #[test]
    fn binomial_rejects_bad_probability() {
        let mut rng = RandomStream::new(4);
        assert!(matches!(
            sample_binomial(&mut rng, 10, 1.5),
            Err(Error::InvalidProbability(_))
        ));
        assert!(sample_binomial(&mut rng, 10, f64::NAN).is_err());
    }

    #[test]
    fn binomial_mean() {
        let mut rng = RandomStream::new(5);
        let sum: u64 = (0..DRAWS)
            .map(|_| sample_binomial(&mut rng, 10, 0.5).unwrap() as u64)
            .sum();
        // sd of the mean: sqrt(10 * 0.25 / 1e5) = 0.005, so 0.05 is 10 sigma.
        assert!((sum as f64 / DRAWS as f64 - 5.0).abs() < 0.05);
    }

    #[test]
    fn binomial_mirror_symmetry() {
        // k ~ Bin(n, p) and n - k' with k' ~ Bin(n, 1 - p) have the same law.
        let n = 10u32;
        let mut rng = RandomStream::new(6);
        let mut a = [0f64; 11];
        let mut b = [0f64; 11];
        for _ in 0..DRAWS {
            a[sample_binomial(&mut rng, n, 0.3).unwrap() as usize] += 1.0;
            b[(n - sample_binomial(&mut rng, n, 0.7).unwrap()) as usize] += 1.0;
        }
        // Two-sample chi-squared homogeneity test over cells with support.
        let mut chi2 = 0.0;
        let mut cells = 0;
        for k in 0..=10 {
            let total = a[k] + b[k];
            if total < 10.0 {
                continue;
            }
            let e = total / 2.0;
            chi2 += (a[k] - e).powi(2) / e + (b[k] - e).powi(2) / e;
            cells += 1;
        }
        let dof = (cells - 1) as f64;
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let p = 1.0 - ChiSquared::new(dof).unwrap().cdf(chi2);
        assert!(p > 0.01, "chi2 = {chi2}, p = {p}");
    }

    #[test]
    fn uniform_real_stays_in_interval() {
        let mut rng = RandomStream::new(8);
        for _ in 0..10_000 {
            let v = sample_uniform_real(&mut rng, 2.0, 3.5).unwrap();
            assert!((2.0..=3.5).contains(&v));
        }
        assert_eq!(sample_uniform_real(&mut rng, 4.0, 4.0).unwrap(), 4.0);
    }
}
