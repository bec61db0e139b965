//! Cross-checks against independent computations.

use num_bigint::BigInt;
use num_rational::BigRational;

use iterprior::agents::{Prior, SimulatedAgent};
use iterprior::bayes::{posterior_grid, prior_grid, PriorSpec};
use iterprior::chains::{detect_convergence, run_ensemble, EnsembleConfig};
use iterprior::likelihoods::{
    causal_log_likelihood, CausalDirection, CausalHypothesis, CausalObservation, Observation,
};
use iterprior::tasks::builtin_tasks;

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn choose(n: u32, k: u32) -> BigRational {
    let mut c = BigInt::from(1);
    for i in 0..k {
        c = c * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    BigRational::from_integer(c)
}

fn binomial_pmf(k: u32, n: u32, p: &BigRational) -> BigRational {
    let one = ratio(1, 1);
    let q = &one - p;
    let mut out = choose(n, k);
    for _ in 0..k {
        out *= p;
    }
    for _ in 0..n - k {
        out *= &q;
    }
    out
}

fn ln_exact(x: &BigRational) -> f64 {
    let num: f64 = x.numer().to_string().parse().unwrap();
    let den: f64 = x.denom().to_string().parse().unwrap();
    num.ln() - den.ln()
}

#[test]
fn causal_likelihood_matches_exact_rational_pmf() {
    let d = CausalObservation::new(8, 8, 4, 2).unwrap();
    let h = CausalHypothesis::new(0.25, 0.5).unwrap();
    let (w0, w1) = (ratio(1, 4), ratio(1, 2));
    let one = ratio(1, 1);
    let generative_plus = &one - (&one - &w0) * (&one - &w1);
    let preventive_plus = &w0 * (&one - &w1);
    for (dir, p_plus) in [
        (CausalDirection::Generative, generative_plus),
        (CausalDirection::Preventive, preventive_plus),
    ] {
        let exact = binomial_pmf(4, 8, &p_plus) * binomial_pmf(2, 8, &w0);
        let got = causal_log_likelihood(&d, &h, dir);
        assert!(
            (got - ln_exact(&exact)).abs() < 1e-9,
            "{dir}: {got} vs {}",
            ln_exact(&exact)
        );
    }
}

#[test]
fn simulated_agent_posterior_equals_the_bayes_grid() {
    let reg = builtin_tasks();
    for (name, dir) in [
        ("causal-generative", CausalDirection::Generative),
        ("causal-preventive", CausalDirection::Preventive),
    ] {
        let task = reg.lookup(name).unwrap();
        let prior = prior_grid(&PriorSpec::SparseStrong {
            alpha: 5.0,
            direction: dir,
        })
        .unwrap();
        let agent = SimulatedAgent::new(task, Prior::Causal(prior.clone())).unwrap();
        let obs = CausalObservation::new(16, 16, 11, 3).unwrap();
        let a = agent.posterior(&Observation::Causal(obs)).unwrap();
        let b = posterior_grid(&prior, &obs, dir).unwrap();
        let worst = a.iter().zip(b.masses()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-12, "{name}: {worst}");
    }
}

#[test]
fn uniform_lifespan_chains_converge_within_five_iterations() {
    // Each test rejects a true null 5% of the time, so some seeds report a
    // late iteration; this checks seed 0.
    let reg = builtin_tasks();
    let task = reg.lookup("lifespan-male").unwrap();
    let agent = SimulatedAgent::uniform(task).unwrap();
    let cfg = EnsembleConfig {
        n_chains: 100,
        n_iterations: 12,
        base_seed: 0,
        parallel: None,
    };
    let set = run_ensemble(task, &agent, &cfg, None).unwrap();
    assert_eq!(set.failed_count(), 0);
    let report = detect_convergence(&set, 0.05).unwrap();
    let first = report.first_converged_iteration.expect("converged");
    assert!(first <= 5, "first converged at {first}");
    // Seeded at the maximum, early hypotheses sit high.
    assert!(report.tests[0].rejected);
}
