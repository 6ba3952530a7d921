use rand::Rng;
use rand_distr::{Beta, Distribution};

use super::ModelError;
use crate::bernoulli::FlatState;
use crate::rng;

/// Monte Carlo estimate of the value of perfect information.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VpiEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// `E[max_i U_i | s] - max_i mu_i(s)` in closed form.
///
/// Utilities are independent Bernoulli variables with success probability
/// `mu_i(s)`, so `E[max_i U_i] = 1 - prod_i (1 - mu_i)`.
pub fn vpi_exact(state: &FlatState) -> f64 {
    let none = state.means().iter().map(|m| 1.0 - m).product::<f64>();
    (1.0 - none - state.best_mean()).max(0.0)
}

/// Monte Carlo value of perfect information: draws each arm's rate from its
/// Beta posterior and its utility from that rate.
///
/// `value / c` bounds the expected number of computations of an optimal
/// policy started in `state`.
pub fn vpi_bound(state: &FlatState, mc_samples: u64, seed: u64) -> Result<VpiEstimate, ModelError> {
    if mc_samples == 0 {
        return Err(ModelError::NoMonteCarloSamples);
    }
    let posteriors: Vec<Beta<f64>> = state
        .arms()
        .iter()
        .map(|a| Beta::new(a.successes as f64 + 1.0, a.failures as f64 + 1.0).expect("positive shape"))
        .collect();
    let mut r = rng::stream(seed, 0);
    let mut hits = 0u64;
    for _ in 0..mc_samples {
        let any = posteriors.iter().any(|b| {
            let theta = b.sample(&mut r);
            r.random::<f64>() < theta
        });
        hits += u64::from(any);
    }
    let n = mc_samples as f64;
    let p = hits as f64 / n;
    let se = if mc_samples > 1 { (p * (1.0 - p) / (n - 1.0)).sqrt() } else { 0.0 };
    Ok(VpiEstimate { value: p - state.best_mean(), std_error: se })
}
