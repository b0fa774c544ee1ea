//! Bath spectral densities, thermal occupations, correlation functions, and
//! transition rates.
//!
//! Everything is in hbar = k_B = 1 units: energies and temperatures are
//! angular frequencies in MHz, times in microseconds, rates in 1/us.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logspace::ln_one_minus_exp;

/// Default relative tolerance for truncating Matsubara sums.
pub const DEFAULT_MATSUBARA_RTOL: f64 = 1e-8;

const MATSUBARA_CAP: usize = 2_000_000;

#[derive(Debug, Error)]
pub enum BathError {
    #[error(
        "cutoff {gamma} MHz is resonant with Matsubara frequency nu_{kappa} = {nu} MHz; \
         perturb the temperature (e.g. T = {suggested} MHz)"
    )]
    MatsubaraResonance {
        kappa: usize,
        nu: f64,
        gamma: f64,
        suggested: f64,
    },
    #[error("tabulated spectral density needs at least two strictly increasing positive points")]
    BadTable,
    #[error("temperature must be positive, got {0}")]
    NonPositiveTemperature(f64),
}

/// Bath spectral density J(omega), extended to negative frequencies as an odd
/// function.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectralDensity {
    /// Ohmic with Lorentz-Drude regularization:
    /// J(w) = 2 E_R gamma w / (w^2 + gamma^2).
    OhmicLorentzDrude {
        /// Reorganization energy E_R (MHz), overall coupling strength.
        reorganization_energy: f64,
        /// Cutoff rate gamma (MHz), inverse bath correlation time.
        cutoff: f64,
    },
    /// User-tabulated J on a positive omega grid; linear interpolation inside
    /// the grid, odd extension to omega < 0, and a Lorentz-like 1/omega tail
    /// beyond the last point.
    Tabulated { omegas: Vec<f64>, values: Vec<f64> },
}

impl SpectralDensity {
    pub fn ohmic(reorganization_energy: f64, cutoff: f64) -> Self {
        assert!(reorganization_energy >= 0.0 && cutoff > 0.0);
        SpectralDensity::OhmicLorentzDrude {
            reorganization_energy,
            cutoff,
        }
    }

    pub fn tabulated(omegas: Vec<f64>, values: Vec<f64>) -> Result<Self, BathError> {
        if omegas.len() < 2
            || omegas.len() != values.len()
            || omegas[0] <= 0.0
            || omegas.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(BathError::BadTable);
        }
        Ok(SpectralDensity::Tabulated { omegas, values })
    }

    /// J(omega); antisymmetric by construction.
    pub fn value(&self, omega: f64) -> f64 {
        match self {
            SpectralDensity::OhmicLorentzDrude {
                reorganization_energy,
                cutoff,
            } => 2.0 * reorganization_energy * cutoff * omega / (omega * omega + cutoff * cutoff),
            SpectralDensity::Tabulated { omegas, values } => {
                let sign = omega.signum();
                let w = omega.abs();
                if w == 0.0 {
                    return 0.0;
                }
                let v = if w <= omegas[0] {
                    values[0] * w / omegas[0]
                } else if w >= *omegas.last().unwrap() {
                    values.last().unwrap() * omegas.last().unwrap() / w
                } else {
                    let i = omegas.partition_point(|x| *x < w);
                    let (x0, x1) = (omegas[i - 1], omegas[i]);
                    let (y0, y1) = (values[i - 1], values[i]);
                    y0 + (y1 - y0) * (w - x0) / (x1 - x0)
                };
                sign * v
            }
        }
    }

    /// dJ/domega at omega = 0, used by the zero-frequency rate branch.
    pub fn slope_at_zero(&self) -> f64 {
        match self {
            SpectralDensity::OhmicLorentzDrude {
                reorganization_energy,
                cutoff,
            } => 2.0 * reorganization_energy / cutoff,
            SpectralDensity::Tabulated { omegas, values } => values[0] / omegas[0],
        }
    }

    /// Width of the omega ~ 0 branch of `markov_rate`.
    pub fn zero_frequency_tolerance(&self) -> f64 {
        match self {
            SpectralDensity::OhmicLorentzDrude { cutoff, .. } => 1e-9 * cutoff,
            SpectralDensity::Tabulated { omegas, .. } => 1e-9 * omegas[0],
        }
    }
}

/// Bose-Einstein occupation n(omega) = 1/(e^{omega/T} - 1).
///
/// Negative for omega < 0, satisfying n(-w) = -(n(w) + 1). The omega = 0
/// singularity is the caller's concern; use the zero-frequency branch of
/// [`markov_rate`] there.
pub fn bose_einstein(omega: f64, temperature: f64) -> f64 {
    assert!(temperature > 0.0, "temperature must be positive");
    assert!(omega != 0.0, "occupation diverges at omega = 0");
    1.0 / (omega / temperature).exp_m1()
}

/// Second-Markov (time-independent) transition rate at frequency `omega`:
/// 2 J(omega) [n(omega) + 1], with the continuous zero-frequency limit
/// 2 T J'(0) on |omega| below the density's tolerance.
///
/// Positive for every omega when T > 0; emission (omega > 0) exceeds
/// absorption (omega < 0) by the detailed-balance factor e^{omega/T}.
pub fn markov_rate(density: &SpectralDensity, temperature: f64, omega: f64) -> f64 {
    assert!(temperature > 0.0, "temperature must be positive");
    if omega.abs() <= density.zero_frequency_tolerance() {
        return 2.0 * temperature * density.slope_at_zero();
    }
    let x = omega / temperature;
    if x > 700.0 {
        // occupation underflows; n+1 -> 1
        return 2.0 * density.value(omega);
    }
    if x < -700.0 {
        // 2 J(w) n(w) with n(w) ~ e^{-|x|}
        return 2.0 * density.value(-omega) * x.exp();
    }
    2.0 * density.value(omega) * (bose_einstein(omega, temperature) + 1.0)
}

/// ln of the emission rate 2 J(omega0)(n(omega0)+1), omega0 > 0.
pub fn ln_markov_rate_emission(density: &SpectralDensity, temperature: f64, omega0: f64) -> f64 {
    assert!(omega0 >= 0.0);
    if omega0 <= density.zero_frequency_tolerance() {
        return (2.0 * temperature * density.slope_at_zero()).ln();
    }
    (2.0 * density.value(omega0)).ln() - ln_one_minus_exp(-omega0 / temperature)
}

/// ln of the absorption rate 2 J(omega0) n(omega0), omega0 > 0. Stays finite
/// in log space far beyond the f64 underflow of the rate itself.
pub fn ln_markov_rate_absorption(density: &SpectralDensity, temperature: f64, omega0: f64) -> f64 {
    assert!(omega0 >= 0.0);
    if omega0 <= density.zero_frequency_tolerance() {
        return (2.0 * temperature * density.slope_at_zero()).ln();
    }
    (2.0 * density.value(omega0)).ln() - omega0 / temperature
        - ln_one_minus_exp(-omega0 / temperature)
}

/// Classical exponentially decaying correlation, C(t) = A e^{-gamma t}.
pub fn correlation_classical(amplitude: f64, gamma: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    amplitude * (-gamma * t).exp()
}

/// kappa-th Matsubara frequency, 2 pi kappa T.
pub fn matsubara_frequency(kappa: usize, temperature: f64) -> f64 {
    std::f64::consts::TAU * kappa as f64 * temperature
}

fn check_resonance(gamma: f64, temperature: f64) -> Result<(), BathError> {
    let ratio = gamma / (std::f64::consts::TAU * temperature);
    let kappa = ratio.round();
    if kappa >= 1.0 {
        let nu = matsubara_frequency(kappa as usize, temperature);
        if (gamma - nu).abs() <= 1e-9 * gamma {
            return Err(BathError::MatsubaraResonance {
                kappa: kappa as usize,
                nu,
                gamma,
                suggested: gamma / (std::f64::consts::TAU * (kappa + 0.5)),
            });
        }
    }
    Ok(())
}

/// Quantum correlation function of the Lorentz-Drude bath, truncated at
/// `k_max` Matsubara terms:
///
/// C(t) = i 2 E_R gamma e^{-gamma t} / (e^{i gamma / T} - 1)
///        - sum_{kappa=1}^{k_max} 4 E_R gamma T nu_k / (gamma^2 - nu_k^2) e^{-nu_k t}.
///
/// The imaginary part is independent of `k_max` (the sum is real). The value
/// at t = 0 grows logarithmically with `k_max`; that divergence is a physical
/// property of the Drude cutoff, so pointwise use at t = 0 needs care.
pub fn correlation_quantum(
    e_r: f64,
    gamma: f64,
    temperature: f64,
    t: f64,
    k_max: usize,
) -> Result<Complex64, BathError> {
    debug_assert!(t >= 0.0);
    check_resonance(gamma, temperature)?;
    let theta = gamma / (2.0 * temperature);
    // i/(e^{2 i theta} - 1) = (cot(theta) - i)/2
    let resonant =
        e_r * gamma * (-gamma * t).exp() * Complex64::new(1.0 / theta.tan(), -1.0);
    let mut sum = 0.0;
    for kappa in 1..=k_max {
        let nu = matsubara_frequency(kappa, temperature);
        sum += 4.0 * e_r * gamma * temperature * nu / (gamma * gamma - nu * nu) * (-nu * t).exp();
    }
    Ok(resonant - sum)
}

/// Fully converged C(t) for t > 0: the 1/kappa part of the Matsubara tail is
/// summed in closed form (-(2 E_R gamma / pi) ln(1 - e^{-2 pi T t})) and the
/// remainder converges like 1/kappa^3 under the tail-magnitude criterion
/// `rel_tol`.
pub fn correlation_quantum_converged(
    e_r: f64,
    gamma: f64,
    temperature: f64,
    t: f64,
    rel_tol: f64,
) -> Result<Complex64, BathError> {
    assert!(t > 0.0, "converged correlation function needs t > 0");
    check_resonance(gamma, temperature)?;
    let theta = gamma / (2.0 * temperature);
    let resonant =
        e_r * gamma * (-gamma * t).exp() * Complex64::new(1.0 / theta.tan(), -1.0);
    let x = std::f64::consts::TAU * temperature * t;
    let log_part = -(2.0 * e_r * gamma / std::f64::consts::PI) * ln_one_minus_exp(-x);
    let mut remainder = 0.0;
    let mut kappa = 1usize;
    loop {
        let nu = matsubara_frequency(kappa, temperature);
        let term =
            4.0 * e_r * gamma.powi(3) * temperature * (-nu * t).exp() / (nu * (nu * nu - gamma * gamma));
        remainder += term;
        let scale = resonant.norm().max(log_part.abs()).max(remainder.abs());
        if kappa >= 8 && term.abs() <= rel_tol * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        if kappa >= MATSUBARA_CAP {
            break;
        }
        kappa += 1;
    }
    Ok(resonant + Complex64::new(log_part + remainder, 0.0))
}

/// Sign selecting between the gain-type (+) and loss-type (-) rate integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn apply(self, omega: f64) -> f64 {
        match self {
            Sign::Plus => omega,
            Sign::Minus => -omega,
        }
    }
}

/// Finite-time rate for the classical exponential bath under a sinusoidal
/// modulation at omega_j:
///
/// r(t) = 2 A (gamma - gamma e^{-gamma t} cos(omega_j t)
///              + omega_j e^{-gamma t} sin(omega_j t)) / (omega_j^2 + gamma^2).
///
/// The result is even in omega_j, so the gain and loss rates coincide for
/// every sign choice (the correlation function is real).
pub fn timedep_rate_classical(
    amplitude: f64,
    gamma: f64,
    omega_j: f64,
    t: f64,
    sign: Sign,
) -> f64 {
    debug_assert!(t >= 0.0);
    let w = sign.apply(omega_j);
    let e = (-gamma * t).exp();
    2.0 * amplitude * (gamma - gamma * e * (w * t).cos() + w * e * (w * t).sin())
        / (w * w + gamma * gamma)
}

/// One-sided rate integral 2 Re int_0^t C(tau) e^{i omega tau} d tau for the
/// Lorentz-Drude quantum bath, evaluated termwise in closed form with exactly
/// `k_max` Matsubara terms. Matches the quadrature of
/// [`correlation_quantum`] with the same `k_max` identically.
pub fn timedep_rate_ohmic_truncated(
    e_r: f64,
    gamma: f64,
    temperature: f64,
    omega_j: f64,
    t: f64,
    sign: Sign,
    k_max: usize,
) -> Result<f64, BathError> {
    check_resonance(gamma, temperature)?;
    let w = sign.apply(omega_j);
    let theta = gamma / (2.0 * temperature);
    let a0 = gamma * theta.cos() + w * theta.sin();
    let e = (-gamma * t).exp();
    let resonant = 2.0 * e_r * gamma / theta.sin()
        * (a0 - gamma * e * (w * t - theta).cos() + w * e * (w * t - theta).sin())
        / (w * w + gamma * gamma);
    let mut sum = 0.0;
    for kappa in 1..=k_max {
        let nu = matsubara_frequency(kappa, temperature);
        let en = (-nu * t).exp();
        sum += 8.0 * e_r * gamma * temperature * nu / (gamma * gamma - nu * nu)
            * (nu - nu * en * (w * t).cos() + w * en * (w * t).sin())
            / (w * w + nu * nu);
    }
    Ok(resonant - sum)
}

/// Fully converged one-sided rate for t >= 0. The constant part of each
/// Matsubara term is absorbed exactly into the second-Markov limit
/// 2 J(omega)(n(omega)+1); the leftover terms decay like e^{-nu_k t} and the
/// sum stops under the tail-magnitude criterion `rel_tol`.
pub fn timedep_rate_ohmic(
    e_r: f64,
    gamma: f64,
    temperature: f64,
    omega_j: f64,
    t: f64,
    sign: Sign,
    rel_tol: f64,
) -> Result<f64, BathError> {
    debug_assert!(t >= 0.0);
    check_resonance(gamma, temperature)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let w = sign.apply(omega_j);
    let density = SpectralDensity::ohmic(e_r, gamma);
    let limit = markov_rate(&density, temperature, w);

    let theta = gamma / (2.0 * temperature);
    let e = (-gamma * t).exp();
    let resonant_decaying = 2.0 * e_r * gamma / theta.sin()
        * (-gamma * e * (w * t - theta).cos() + w * e * (w * t - theta).sin())
        / (w * w + gamma * gamma);

    let mut sum = 0.0;
    let mut kappa = 1usize;
    loop {
        let nu = matsubara_frequency(kappa, temperature);
        let en = (-nu * t).exp();
        let term = 8.0 * e_r * gamma * temperature * nu / (gamma * gamma - nu * nu)
            * (-nu * en * (w * t).cos() + w * en * (w * t).sin())
            / (w * w + nu * nu);
        sum += term;
        let scale = limit.abs().max(resonant_decaying.abs()).max(sum.abs());
        if kappa >= 8 && term.abs() <= rel_tol * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        if kappa >= MATSUBARA_CAP {
            break;
        }
        kappa += 1;
    }
    Ok(limit + resonant_decaying - sum)
}
