//! Thermal-stability analysis on the lumped error-weight chain.
//!
//! Grouping equal-weight syndrome subspaces turns the random walk into a 1D
//! birth-death chain over weights 0..n_c with an absorber at n_c. The mean
//! absorption time from weight 0 has a closed first-step-analysis form; all
//! of its arithmetic lives in log space because the Boltzmann factors reach
//! e^{lambda n} with lambda n in the thousands at realistic scan corners.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bath::{
    ln_markov_rate_absorption, ln_markov_rate_emission, SpectralDensity,
};
use crate::logspace::{ln_binomial, ln_one_minus_exp, log_sum_exp};

#[derive(Debug, Error)]
pub enum StabilityError {
    #[error("chain needs n_c >= 1, got {0}")]
    EmptyChain(usize),
    #[error("chain needs N_e > n_c, got N_e = {n_e}, n_c = {n_c}")]
    TooFewErrors { n_e: u64, n_c: usize },
    #[error("barrier profile has {got} steps, chain needs {expected}")]
    BarrierLength { got: usize, expected: usize },
    #[error("forward rate vanished at weight {0}; hitting time is undefined")]
    VanishingForwardRate(usize),
    #[error(
        "dt = {dt} is inadmissible: max step probability {max_prob:.3e} exceeds 1; \
         use dt <= {suggested:.3e}"
    )]
    InadmissibleDt {
        dt: f64,
        max_prob: f64,
        suggested: f64,
    },
    #[error("the lower bound needs N_e >= 10 n_c, got N_e = {n_e}, n_c = {n_c}")]
    BoundPrecondition { n_e: u64, n_c: usize },
    #[error("Monte Carlo oracle needs at least 1000 trials, got {0}")]
    TooFewTrials(usize),
    #[error("constant-barrier form needs lambda > 0; got lambda = {0} (use hitting_time)")]
    DegenerateLambda(f64),
}

/// Energy-barrier steps Delta_w for w = 1..=n_c.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BarrierProfile {
    Constant(f64),
    PerLevel(Vec<f64>),
}

impl BarrierProfile {
    /// Delta_w, 1-based.
    pub fn step(&self, w: usize) -> f64 {
        match self {
            BarrierProfile::Constant(d) => *d,
            BarrierProfile::PerLevel(v) => v[w - 1],
        }
    }

    pub fn constant_value(&self) -> Option<f64> {
        match self {
            BarrierProfile::Constant(d) => Some(*d),
            BarrierProfile::PerLevel(v) => {
                let first = *v.first()?;
                v.iter().all(|d| *d == first).then_some(first)
            }
        }
    }
}

/// Microscopic rate convention behind the per-transition probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RateConvention {
    /// Absorption/emission rates from the bath spectral density; detailed
    /// balance is inherited from the KMS symmetry.
    #[default]
    Kms,
    /// Classical-limit alternative: attempt rate j(alpha Delta) downhill,
    /// Boltzmann-suppressed uphill.
    Boltzmann,
}

/// The lumped 1D birth-death chain over error weight.
#[derive(Debug, Clone)]
pub struct LumpedChain {
    /// Max correctable weight; the absorber sits at n_c.
    pub n_c: usize,
    /// Number of elementary error channels.
    pub n_e: u64,
    pub barriers: BarrierProfile,
    /// Penalty scale multiplying each barrier step.
    pub alpha: f64,
    pub density: SpectralDensity,
    pub temperature: f64,
    /// Discretization time; bookkeeping only, results are dt-independent.
    pub dt: f64,
    pub convention: RateConvention,
}

impl LumpedChain {
    pub fn validate(&self) -> Result<(), StabilityError> {
        if self.n_c == 0 {
            return Err(StabilityError::EmptyChain(self.n_c));
        }
        if self.n_e <= self.n_c as u64 {
            return Err(StabilityError::TooFewErrors {
                n_e: self.n_e,
                n_c: self.n_c,
            });
        }
        if let BarrierProfile::PerLevel(v) = &self.barriers {
            if v.len() != self.n_c {
                return Err(StabilityError::BarrierLength {
                    got: v.len(),
                    expected: self.n_c,
                });
            }
        }
        Ok(())
    }

    /// ln of the per-unit-time uphill rate for the step w -> w+1 (costs
    /// energy alpha Delta_{w+1}, an absorption event).
    fn ln_pi_up(&self, w: usize) -> f64 {
        let omega = self.alpha * self.barriers.step(w + 1);
        match self.convention {
            RateConvention::Kms => {
                ln_markov_rate_absorption(&self.density, self.temperature, omega)
            }
            RateConvention::Boltzmann => {
                (2.0 * self.density.value(omega)).ln() - omega / self.temperature
            }
        }
    }

    /// ln of the per-unit-time downhill rate for the step w -> w-1 (releases
    /// energy alpha Delta_w, an emission event).
    fn ln_pi_down(&self, w: usize) -> f64 {
        let omega = self.alpha * self.barriers.step(w);
        match self.convention {
            RateConvention::Kms => {
                ln_markov_rate_emission(&self.density, self.temperature, omega)
            }
            RateConvention::Boltzmann => (2.0 * self.density.value(omega)).ln(),
        }
    }

    /// ln of the lumped per-unit-time forward/backward rates
    /// (p_w, q_w without the dt factor).
    pub fn ln_transition_rates(&self, w: usize) -> (f64, f64) {
        assert!(w <= self.n_c, "weight {w} beyond chain length {}", self.n_c);
        let ln_p = ln_binomial(self.n_e, w as u64)
            + ((self.n_e - w as u64) as f64).ln()
            + self.ln_pi_up(w);
        let ln_q = if w == 0 {
            f64::NEG_INFINITY
        } else {
            ln_binomial(self.n_e, w as u64) + (w as f64).ln() + self.ln_pi_down(w)
        };
        (ln_p, ln_q)
    }

    /// Step probabilities (p_w, q_w) at this chain's dt. Overflows to
    /// infinity for parameter corners that only the log-space paths can
    /// represent; admissibility is the caller's concern (see
    /// [`LumpedChain::max_step_probability`]).
    pub fn transition_probs(&self, w: usize) -> (f64, f64) {
        let (ln_p, ln_q) = self.ln_transition_rates(w);
        (
            (ln_p + self.dt.ln()).exp(),
            (ln_q + self.dt.ln()).exp(),
        )
    }

    /// Largest total step probability p_w + q_w over the chain.
    pub fn max_step_probability(&self) -> f64 {
        (0..=self.n_c.saturating_sub(1))
            .map(|w| {
                let (p, q) = self.transition_probs(w);
                p + q
            })
            .fold(0.0, f64::max)
    }
}

/// Hitting-time outputs; `ln_eta0` is authoritative, `eta0` may round to
/// infinity.
#[derive(Debug, Clone)]
pub struct HittingTimeResult {
    pub ln_eta0: f64,
    pub eta0: f64,
    /// ln of the analytic lower bound, when the preconditions held.
    pub ln_bound: Option<f64>,
}

/// Mean absorption time from weight 0, first-step analysis:
///
/// eta_0 = sum_{k=1}^{n_c} (dt / p_{k-1}) (1 + sum_{n=1}^{n_c-k}
///         prod_{m=1}^{n} q_{m+k-1} / p_{m+k-1})
///
/// evaluated entirely in log space. The dt in the numerator cancels the dt
/// inside each p, so the result is discretization-independent.
pub fn hitting_time(chain: &LumpedChain) -> Result<f64, StabilityError> {
    chain.validate()?;
    let n_c = chain.n_c;
    let mut ln_p = Vec::with_capacity(n_c);
    let mut ln_q = Vec::with_capacity(n_c);
    for w in 0..n_c {
        let (p, q) = chain.ln_transition_rates(w);
        if p == f64::NEG_INFINITY || p.is_nan() {
            return Err(StabilityError::VanishingForwardRate(w));
        }
        ln_p.push(p + chain.dt.ln());
        ln_q.push(q + chain.dt.ln());
    }

    let mut outer_terms = Vec::with_capacity(n_c);
    for k in 1..=n_c {
        // ln(1 + sum_n exp(S_n)), S_n = sum_m ln(q/p) at indices m+k-1
        let mut inner = vec![0.0f64];
        let mut acc = 0.0f64;
        for n in 1..=(n_c - k) {
            let w = n + k - 1;
            acc += ln_q[w] - ln_p[w];
            inner.push(acc);
        }
        outer_terms.push(chain.dt.ln() - ln_p[k - 1] + log_sum_exp(&inner));
    }
    Ok(log_sum_exp(&outer_terms))
}

/// Constant-barrier specialization:
///
/// eta_0 = (1/pi) sum_{k=1}^{n_c} sum_{n=0}^{n_c-k} e^{lambda n} /
///         (C(N_e, n+k) (n+k)),   pi = j e^{-lambda} / (1 - e^{-lambda})
///
/// with lambda = alpha Delta / T. Must agree with [`hitting_time`] on a
/// constant profile; it is a different summation route over the same chain.
pub fn hitting_time_constant(chain: &LumpedChain, delta_bar: f64) -> Result<f64, StabilityError> {
    chain.validate()?;
    let lambda = chain.alpha * delta_bar / chain.temperature;
    if lambda <= 0.0 {
        return Err(StabilityError::DegenerateLambda(lambda));
    }
    let constant_chain = LumpedChain {
        barriers: BarrierProfile::Constant(delta_bar),
        ..chain.clone()
    };
    let ln_pi = constant_chain.ln_pi_up(0);
    let mut terms = Vec::with_capacity(chain.n_c * (chain.n_c + 1) / 2);
    for k in 1..=chain.n_c {
        for n in 0..=(chain.n_c - k) {
            let j = (n + k) as u64;
            terms.push(lambda * n as f64 - ln_binomial(chain.n_e, j) - (j as f64).ln());
        }
    }
    Ok(log_sum_exp(&terms) - ln_pi)
}

/// Analytic lower bound on the mean absorption time for a constant barrier:
///
/// ln eta_bound = -ln C(N_e, n_c) - ln j_Delta
///                + ln[(e^{lambda n_c} - 1) / (n_c (1 - e^{-lambda})) - 1]
///
/// where j_Delta = 2 J(alpha Delta). Requires N_e >= 10 n_c.
pub fn hitting_bound(chain: &LumpedChain, delta_bar: f64) -> Result<f64, StabilityError> {
    chain.validate()?;
    if chain.n_e < 10 * chain.n_c as u64 {
        return Err(StabilityError::BoundPrecondition {
            n_e: chain.n_e,
            n_c: chain.n_c,
        });
    }
    let lambda = chain.alpha * delta_bar / chain.temperature;
    if lambda <= 0.0 {
        return Err(StabilityError::DegenerateLambda(lambda));
    }
    let n_c = chain.n_c as f64;
    let ln_j = (2.0 * chain.density.value(chain.alpha * delta_bar)).ln();
    // bracket = (e^{lambda n_c} - 1)/(n_c (1 - e^{-lambda})) - 1, in logs
    let ln_num = lambda * n_c + ln_one_minus_exp(-lambda * n_c);
    let ln_den = n_c.ln() + ln_one_minus_exp(-lambda);
    let ln_ratio = ln_num - ln_den;
    if ln_ratio <= 0.0 {
        // bracket <= 0 cannot happen for lambda > 0, n_c >= 1; guard anyway
        return Err(StabilityError::DegenerateLambda(lambda));
    }
    let ln_bracket = ln_ratio + ln_one_minus_exp(-ln_ratio);
    Ok(-ln_binomial(chain.n_e, chain.n_c as u64) - ln_j + ln_bracket)
}

/// Large-lambda entropy approximation of the bound (natural logs):
///
/// ln eta_bound ~ lambda n_c - N_e H(n_c / N_e) - ln j_Delta - ln n_c.
pub fn hitting_bound_log_approx(chain: &LumpedChain, delta_bar: f64) -> f64 {
    let lambda = chain.alpha * delta_bar / chain.temperature;
    let p = chain.n_c as f64 / chain.n_e as f64;
    let entropy = -p * p.ln() - (1.0 - p) * (-p).ln_1p();
    let ln_j = (2.0 * chain.density.value(chain.alpha * delta_bar)).ln();
    lambda * chain.n_c as f64 - chain.n_e as f64 * entropy - ln_j - (chain.n_c as f64).ln()
}

/// Monte Carlo estimate of the mean absorption time.
#[derive(Debug, Clone)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub completed_trials: usize,
    /// True when some trials hit the step cap and were dropped.
    pub truncated: bool,
}

/// Simulates the discrete chain from w = 0 to absorption at n_c, `trials`
/// times. Trials use counter-based independent streams of one seed, so the
/// estimate is reproducible regardless of execution order; the total step
/// budget is 10^9 across trials.
pub fn mc_hitting_oracle(
    chain: &LumpedChain,
    trials: usize,
    seed: u64,
) -> Result<McEstimate, StabilityError> {
    chain.validate()?;
    if trials < 1000 {
        return Err(StabilityError::TooFewTrials(trials));
    }
    let max_prob = chain.max_step_probability();
    if !(max_prob <= 1.0) {
        return Err(StabilityError::InadmissibleDt {
            dt: chain.dt,
            max_prob,
            suggested: chain.dt / (2.0 * max_prob),
        });
    }
    let probs: Vec<(f64, f64)> = (0..chain.n_c).map(|w| chain.transition_probs(w)).collect();
    let step_cap: u64 = (1_000_000_000u64 / trials as u64).max(100_000);

    let outcomes: Vec<Option<u64>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            let mut w = 0usize;
            for step in 1..=step_cap {
                let (p, q) = probs[w];
                let u: f64 = rng.gen();
                if u < p {
                    w += 1;
                    if w == chain.n_c {
                        return Some(step);
                    }
                } else if u < p + q {
                    w -= 1;
                }
            }
            None
        })
        .collect();

    let completed: Vec<f64> = outcomes
        .iter()
        .flatten()
        .map(|steps| *steps as f64 * chain.dt)
        .collect();
    let truncated = completed.len() < trials;
    let n = completed.len().max(1) as f64;
    let mean = completed.iter().sum::<f64>() / n;
    let var = completed
        .iter()
        .map(|x| (x - mean) * (x - mean))
        .sum::<f64>()
        / (n - 1.0).max(1.0);
    Ok(McEstimate {
        mean,
        std_error: (var / n).sqrt(),
        completed_trials: completed.len(),
        truncated,
    })
}

/// Concatenated-code combinatorics for the scan engine.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcatenatedCodeParams {
    /// Physical qubits of the base code.
    pub base_n: u64,
    /// Distance of the base code.
    pub base_d: u64,
    /// Concatenation level t.
    pub level: u32,
    /// Overrides the distance-formula n_c = floor((d^t - 1)/2); the worked
    /// concatenated-Steane figures use 20 where the formula gives 40.
    #[serde(default)]
    pub n_c_override: Option<usize>,
}

impl ConcatenatedCodeParams {
    /// Elementary X/Z error channels for `n_l` logical qubits:
    /// 2 n^t per logical qubit.
    pub fn elementary_errors(&self, n_l: u64) -> u64 {
        2 * self.base_n.pow(self.level) * n_l
    }

    pub fn correctable_weight(&self) -> usize {
        self.n_c_override
            .unwrap_or(((self.base_d.pow(self.level) - 1) / 2) as usize)
    }
}

/// Barrier-step scaling class with the number of logical qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingClass {
    Log,
    Sqrt,
    Linear,
}

impl ScalingClass {
    pub fn delta_bar(&self, n_l: u64) -> f64 {
        match self {
            ScalingClass::Log => (n_l as f64).ln(),
            ScalingClass::Sqrt => (n_l as f64).sqrt(),
            ScalingClass::Linear => n_l as f64,
        }
    }
}

/// One scan grid point.
#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub n_l: u64,
    pub alpha: f64,
    pub temperature: f64,
    pub delta_bar: f64,
    pub ln_eta0: f64,
    pub ln_eta_bound: Option<f64>,
}

/// Scan configuration over (n_l, alpha, T).
#[derive(Debug, Clone)]
pub struct ScanGrid {
    pub params: ConcatenatedCodeParams,
    pub scaling: ScalingClass,
    pub alphas: Vec<f64>,
    pub temperatures: Vec<f64>,
    pub logical_qubits: Vec<u64>,
    pub density: SpectralDensity,
    pub convention: RateConvention,
}

/// Evaluates the closed-form hitting time and bound over the grid, in
/// parallel, rows ordered (n_l outer, alpha, T inner).
pub fn scan(grid: &ScanGrid) -> Result<Vec<ScanRow>, StabilityError> {
    let points: Vec<(u64, f64, f64)> = grid
        .logical_qubits
        .iter()
        .flat_map(|&n_l| {
            grid.alphas.iter().flat_map(move |&alpha| {
                grid.temperatures
                    .iter()
                    .map(move |&temp| (n_l, alpha, temp))
            })
        })
        .collect();

    points
        .into_par_iter()
        .map(|(n_l, alpha, temperature)| {
            let delta_bar = grid.scaling.delta_bar(n_l);
            let chain = LumpedChain {
                n_c: grid.params.correctable_weight(),
                n_e: grid.params.elementary_errors(n_l),
                barriers: BarrierProfile::Constant(delta_bar),
                alpha,
                density: grid.density.clone(),
                temperature,
                dt: 1.0,
                convention: grid.convention,
            };
            let ln_eta0 = hitting_time(&chain)?;
            let ln_eta_bound = hitting_bound(&chain, delta_bar).ok();
            Ok(ScanRow {
                n_l,
                alpha,
                temperature,
                delta_bar,
                ln_eta0,
                ln_eta_bound,
            })
        })
        .collect()
}

/// eta0 as a plain number when it fits in f64.
pub fn hitting_time_result(chain: &LumpedChain) -> Result<HittingTimeResult, StabilityError> {
    let ln_eta0 = hitting_time(chain)?;
    let ln_bound = match chain.barriers.constant_value() {
        Some(d) => hitting_bound(chain, d).ok(),
        None => None,
    };
    Ok(HittingTimeResult {
        ln_eta0,
        eta0: ln_eta0.exp(),
        ln_bound,
    })
}

#[cfg(test)]
mod tests;
