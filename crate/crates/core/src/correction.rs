//! Classical master equation over correctable syndrome subspaces.
//!
//! With energy penalties in place, environment-induced transitions perform a
//! Markov random walk over syndrome subspaces. Transitions whose concatenated
//! error is uncorrectable drain population out of the tracked set (leakage),
//! so the total correctable population is monotone non-increasing and lower
//! bounds the computation's success probability. An optional cold reservoir
//! adds a second, strongly coupled rate channel: cooling-based correction.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bath::{self, SpectralDensity};
use crate::classify::TransitionClass;
use crate::code::{ErrorModel, StabilizerCode, Syndrome};
use crate::expm::expm;
use crate::graph::{varpi_of_syndromes, SyndromeGraph};

#[derive(Debug, Error)]
pub enum CorrectionError {
    #[error("EGP penalty must be non-negative, got alpha = {0}")]
    NegativePenalty(f64),
    #[error("cooling without energy penalties is ill-posed: alpha = 0 with a reservoir attached")]
    CoolingWithoutPenalty,
    #[error("temperature must be positive, got {0}")]
    NonPositiveTemperature(f64),
    #[error("graph has no correctable nodes")]
    NoCorrectableNodes,
    #[error("initial state has {got} entries, generator has {expected} states")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("initial populations must lie in [0, 1] with total <= 1")]
    BadInitialState,
    #[error(
        "population went negative beyond tolerance at t = {time} (min entry {value:.3e}); \
         reduce dt"
    )]
    NegativePopulation { time: f64, value: f64 },
    #[error("non-finite rate encountered at t = {0}")]
    NonFiniteRate(f64),
    #[error("time-dependent mode supports a constant logical energy and Ohmic baths only")]
    TimeDependentUnsupported,
    #[error(transparent)]
    Bath(#[from] bath::BathError),
}

/// Thermal environment: spectral density plus temperature (k_B T / hbar, MHz).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThermalBath {
    pub density: SpectralDensity,
    pub temperature: f64,
}

impl ThermalBath {
    pub fn new(density: SpectralDensity, temperature: f64) -> Result<Self, CorrectionError> {
        if temperature <= 0.0 {
            return Err(CorrectionError::NonPositiveTemperature(temperature));
        }
        Ok(Self {
            density,
            temperature,
        })
    }
}

/// Mean logical-subspace energy, constant or tabulated over time.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LogicalEnergy {
    Constant(f64),
    Tabulated { times: Vec<f64>, values: Vec<f64> },
}

impl LogicalEnergy {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            LogicalEnergy::Constant(v) => *v,
            LogicalEnergy::Tabulated { times, values } => {
                if times.is_empty() {
                    return 0.0;
                }
                let i = times.partition_point(|x| *x <= t);
                if i == 0 {
                    values[0]
                } else if i == times.len() {
                    *values.last().unwrap()
                } else {
                    let f = (t - times[i - 1]) / (times[i] - times[i - 1]);
                    values[i - 1] + f * (values[i] - values[i - 1])
                }
            }
        }
    }
}

/// Rate construction mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMode {
    /// Time-independent rates 2 J(w)[n(w)+1] (plus reservoir term).
    SecondMarkov,
    /// Finite-time rate integrals; transiently negative loss rates are kept
    /// (and counted) unless `clamp_negative_rates` is set.
    TimeDependent,
}

/// Full configuration of the correctable-subspace master equation.
#[derive(Debug, Clone)]
pub struct CorrectionConfig {
    /// EGP penalty alpha (MHz); each edge's frequency is 2 alpha varpi.
    pub alpha: f64,
    /// Mean logical energy offsetting uncorrectable-edge frequencies.
    pub epsilon_bar: LogicalEnergy,
    pub bath: ThermalBath,
    pub reservoir: Option<ThermalBath>,
    pub rate_mode: RateMode,
    /// Clamp transiently negative time-dependent rates to zero.
    pub clamp_negative_rates: bool,
    /// Matsubara tail tolerance for time-dependent rates.
    pub matsubara_rtol: f64,
}

impl CorrectionConfig {
    pub fn second_markov(
        alpha: f64,
        epsilon_bar: f64,
        bath: ThermalBath,
        reservoir: Option<ThermalBath>,
    ) -> Self {
        Self {
            alpha,
            epsilon_bar: LogicalEnergy::Constant(epsilon_bar),
            bath,
            reservoir,
            rate_mode: RateMode::SecondMarkov,
            clamp_negative_rates: false,
            matsubara_rtol: bath::DEFAULT_MATSUBARA_RTOL,
        }
    }
}

/// One directed transition of the generator.
#[derive(Debug, Clone)]
struct Transfer {
    source: usize,
    /// None when the concatenated error is uncorrectable (leakage).
    target: Option<usize>,
    /// Loss frequency seen by the bath channel.
    bath_omega: f64,
    /// Loss frequency seen by the reservoir channel (+epsilon offset on
    /// uncorrectable edges, against the bath's -epsilon in time-dependent
    /// mode; the second-Markov assignment uses +epsilon for both).
    reservoir_omega: f64,
}

#[derive(Debug, Clone)]
struct ConstantGenerator {
    /// Loss rate per transfer, aligned with `RateMatrix::transfers`.
    per_transfer: Vec<f64>,
    /// Total outflow per state (diagonal magnitude).
    outflow: Vec<f64>,
    /// Outflow across the correctable boundary per state.
    leakage: Vec<f64>,
}

/// Sparse generator of the master equation over tracked syndromes, plus the
/// data to re-evaluate it at any time in time-dependent mode.
#[derive(Debug, Clone)]
pub struct RateMatrix {
    /// Tracked syndromes, as graph node indices, ascending.
    node_of_state: Vec<usize>,
    state_of_node: Vec<Option<usize>>,
    transfers: Vec<Transfer>,
    config: CorrectionConfig,
    /// Present in second-Markov (and conservation) mode.
    constant: Option<ConstantGenerator>,
    /// (E_R, gamma) pairs captured for the time-dependent path.
    ohmic: Option<(f64, f64)>,
    reservoir_ohmic: Option<(f64, f64)>,
}

impl RateMatrix {
    pub fn dim(&self) -> usize {
        self.node_of_state.len()
    }

    /// Graph node indices of the tracked states, ascending.
    pub fn tracked_nodes(&self) -> &[usize] {
        &self.node_of_state
    }

    pub fn state_of_node(&self, node: usize) -> Option<usize> {
        self.state_of_node[node]
    }

    pub fn config(&self) -> &CorrectionConfig {
        &self.config
    }

    /// Leakage outflow per tracked state (constant-generator modes).
    pub fn leakage(&self) -> Option<&[f64]> {
        self.constant.as_ref().map(|c| c.leakage.as_slice())
    }

    /// Dense generator matrix G with dP/dt = G P (constant modes only).
    pub fn dense(&self) -> Option<DMatrix<f64>> {
        let c = self.constant.as_ref()?;
        let n = self.dim();
        let mut g = DMatrix::zeros(n, n);
        for (tr, &rate) in self.transfers.iter().zip(&c.per_transfer) {
            if let Some(dst) = tr.target {
                g[(dst, tr.source)] += rate;
            }
        }
        for (s, out) in c.outflow.iter().enumerate() {
            g[(s, s)] -= out;
        }
        Some(g)
    }

    /// Per-transfer loss rates at time `t`; the second value counts negative
    /// evaluations (time-dependent transients).
    fn loss_rates_at(&self, t: f64) -> Result<(Vec<f64>, usize), CorrectionError> {
        if let Some(c) = &self.constant {
            return Ok((c.per_transfer.clone(), 0));
        }
        let (e_r, gamma) = self.ohmic.ok_or(CorrectionError::TimeDependentUnsupported)?;
        let mut negatives = 0usize;
        let mut rates = Vec::with_capacity(self.transfers.len());
        // memoize by frequency bit pattern: edges share few distinct omegas
        let mut cache: HashMap<(u64, bool), f64> = HashMap::new();
        for tr in &self.transfers {
            let mut rate = match cache.entry((tr.bath_omega.to_bits(), false)) {
                std::collections::hash_map::Entry::Occupied(e) => *e.get(),
                std::collections::hash_map::Entry::Vacant(slot) => *slot.insert(
                    bath::timedep_rate_ohmic(
                        e_r,
                        gamma,
                        self.config.bath.temperature,
                        tr.bath_omega,
                        t,
                        bath::Sign::Minus,
                        self.config.matsubara_rtol,
                    )
                    .unwrap_or(f64::NAN),
                ),
            };
            if let Some((ke_r, kgamma)) = self.reservoir_ohmic {
                let res_temp = self.config.reservoir.as_ref().unwrap().temperature;
                rate += match cache.entry((tr.reservoir_omega.to_bits(), true)) {
                    std::collections::hash_map::Entry::Occupied(e) => *e.get(),
                    std::collections::hash_map::Entry::Vacant(slot) => *slot.insert(
                        bath::timedep_rate_ohmic(
                            ke_r,
                            kgamma,
                            res_temp,
                            tr.reservoir_omega,
                            t,
                            bath::Sign::Minus,
                            self.config.matsubara_rtol,
                        )
                        .unwrap_or(f64::NAN),
                    ),
                };
            }
            if !rate.is_finite() {
                return Err(CorrectionError::NonFiniteRate(t));
            }
            if rate < 0.0 {
                negatives += 1;
                if self.config.clamp_negative_rates {
                    rate = 0.0;
                }
            }
            rates.push(rate);
        }
        Ok((rates, negatives))
    }

    fn derivative(&self, losses: &[f64], p: &[f64], dp: &mut [f64]) {
        dp.iter_mut().for_each(|x| *x = 0.0);
        for (tr, &rate) in self.transfers.iter().zip(losses) {
            let flow = rate * p[tr.source];
            dp[tr.source] -= flow;
            if let Some(dst) = tr.target {
                dp[dst] += flow;
            }
        }
    }
}

/// gamma(omega) = 2 J(omega)[n(omega)+1] + 2 K(omega)[m(omega)+1].
fn cooled_rate(bath: &ThermalBath, reservoir: Option<&ThermalBath>, omega: f64) -> f64 {
    let mut rate = bath::markov_rate(&bath.density, bath.temperature, omega);
    if let Some(res) = reservoir {
        rate += bath::markov_rate(&res.density, res.temperature, omega);
    }
    rate
}

/// Frequency assignment for one edge: 2 alpha varpi, with the epsilon_bar
/// offset on uncorrectable edges. The first component carries the bath-loss
/// convention (-epsilon), the second the reservoir/second-Markov one
/// (+epsilon); the printed asymmetry between the two channels is reproduced,
/// not reconciled.
fn omega_assignment(alpha: f64, varpi: i32, uncorrectable: bool, epsilon: f64) -> (f64, f64) {
    let base = 2.0 * alpha * varpi as f64;
    if uncorrectable {
        (base - epsilon, base + epsilon)
    } else {
        (base, base)
    }
}

fn validate_config(config: &CorrectionConfig) -> Result<(), CorrectionError> {
    if config.alpha < 0.0 {
        return Err(CorrectionError::NegativePenalty(config.alpha));
    }
    if config.alpha == 0.0 && config.reservoir.is_some() {
        return Err(CorrectionError::CoolingWithoutPenalty);
    }
    if config.bath.temperature <= 0.0 {
        return Err(CorrectionError::NonPositiveTemperature(
            config.bath.temperature,
        ));
    }
    if let Some(res) = &config.reservoir {
        if res.temperature <= 0.0 {
            return Err(CorrectionError::NonPositiveTemperature(res.temperature));
        }
    }
    Ok(())
}

/// Builds the generator over the correctable nodes of `graph`.
pub fn build_rate_matrix(
    graph: &SyndromeGraph,
    config: CorrectionConfig,
) -> Result<RateMatrix, CorrectionError> {
    validate_config(&config)?;

    let mut state_of_node = vec![None; graph.nodes.len()];
    let mut node_of_state = Vec::new();
    for node in &graph.nodes {
        if node.correctable {
            state_of_node[node.index] = Some(node_of_state.len());
            node_of_state.push(node.index);
        }
    }
    if node_of_state.is_empty() {
        return Err(CorrectionError::NoCorrectableNodes);
    }

    let epsilon0 = config.epsilon_bar.at(0.0);
    let second_markov = config.rate_mode == RateMode::SecondMarkov;
    let transfers: Vec<Transfer> = graph
        .edges
        .iter()
        .map(|edge| {
            let uncorrectable = edge.class == TransitionClass::Uncorrectable;
            let (bath_omega, reservoir_omega) =
                omega_assignment(config.alpha, edge.varpi, uncorrectable, epsilon0);
            Transfer {
                source: state_of_node[edge.source].expect("edges start at correctable nodes"),
                target: if uncorrectable {
                    None
                } else {
                    Some(
                        state_of_node[edge.target]
                            .expect("correctable edge targets a tracked node"),
                    )
                },
                // the second-Markov assignment shifts both channels by
                // +epsilon on uncorrectable edges
                bath_omega: if second_markov {
                    reservoir_omega
                } else {
                    bath_omega
                },
                reservoir_omega,
            }
        })
        .collect();

    let constant = if second_markov {
        let mut per_transfer = Vec::with_capacity(transfers.len());
        let mut outflow = vec![0.0; node_of_state.len()];
        let mut leakage = vec![0.0; node_of_state.len()];
        for tr in &transfers {
            // the source pays gamma(-omega): uphill edges are Boltzmann
            // suppressed, downhill enhanced
            let rate = cooled_rate(&config.bath, config.reservoir.as_ref(), -tr.bath_omega);
            per_transfer.push(rate);
            outflow[tr.source] += rate;
            if tr.target.is_none() {
                leakage[tr.source] += rate;
            }
        }
        Some(ConstantGenerator {
            per_transfer,
            outflow,
            leakage,
        })
    } else {
        None
    };

    let ohmic = match &config.bath.density {
        SpectralDensity::OhmicLorentzDrude {
            reorganization_energy,
            cutoff,
        } => Some((*reorganization_energy, *cutoff)),
        SpectralDensity::Tabulated { .. } => None,
    };
    let reservoir_ohmic = config.reservoir.as_ref().and_then(|r| match &r.density {
        SpectralDensity::OhmicLorentzDrude {
            reorganization_energy,
            cutoff,
        } => Some((*reorganization_energy, *cutoff)),
        SpectralDensity::Tabulated { .. } => None,
    });
    if !second_markov {
        if ohmic.is_none()
            || (config.reservoir.is_some() && reservoir_ohmic.is_none())
            || matches!(config.epsilon_bar, LogicalEnergy::Tabulated { .. })
        {
            return Err(CorrectionError::TimeDependentUnsupported);
        }
    }

    Ok(RateMatrix {
        node_of_state,
        state_of_node,
        transfers,
        config,
        constant,
        ohmic,
        reservoir_ohmic,
    })
}

/// Closed validation harness: the random walk over *all* 2^(n-k) syndromes
/// with every edge treated as a real transition (no leakage). Its columns
/// sum to zero exactly, so total population is conserved; physics runs use
/// [`build_rate_matrix`] instead.
pub fn build_conservation_matrix(
    code: &StabilizerCode,
    model: &ErrorModel,
    alpha: f64,
    bath: &ThermalBath,
    reservoir: Option<&ThermalBath>,
) -> Result<RateMatrix, CorrectionError> {
    if alpha < 0.0 {
        return Err(CorrectionError::NegativePenalty(alpha));
    }
    if bath.temperature <= 0.0 {
        return Err(CorrectionError::NonPositiveTemperature(bath.temperature));
    }
    let g = code.num_generators();
    let dim = code.num_syndromes();
    let error_syndromes: Vec<Syndrome> = (0..model.len())
        .map(|j| code.syndrome(&model.operator(j, code.num_qubits())))
        .collect();

    let mut per_transfer = Vec::new();
    let mut outflow = vec![0.0; dim];
    let mut transfers = Vec::new();
    for s in 0..dim {
        let nu = Syndrome::new(s as u64, g);
        for sj in &error_syndromes {
            let varpi = varpi_of_syndromes(sj, &nu);
            let omega = 2.0 * alpha * varpi as f64;
            let rate = cooled_rate(bath, reservoir, -omega);
            let target = nu.xor(sj).as_index();
            per_transfer.push(rate);
            outflow[s] += rate;
            transfers.push(Transfer {
                source: s,
                target: Some(target),
                bath_omega: omega,
                reservoir_omega: omega,
            });
        }
    }

    Ok(RateMatrix {
        node_of_state: (0..dim).collect(),
        state_of_node: (0..dim).map(Some).collect(),
        transfers,
        config: CorrectionConfig::second_markov(alpha, 0.0, bath.clone(), reservoir.cloned()),
        constant: Some(ConstantGenerator {
            per_transfer,
            outflow,
            leakage: vec![0.0; dim],
        }),
        ohmic: None,
        reservoir_ohmic: None,
    })
}

/// Population over tracked syndromes at one instant.
#[derive(Debug, Clone)]
pub struct PopulationState {
    pub populations: Vec<f64>,
    pub time: f64,
}

impl PopulationState {
    /// All population in the codespace (tracked state 0).
    pub fn codespace(dim: usize) -> Self {
        let mut populations = vec![0.0; dim];
        populations[0] = 1.0;
        Self {
            populations,
            time: 0.0,
        }
    }
}

/// Total tracked population; the correctable-subspace probability.
pub fn correctable_population(state: &[f64]) -> f64 {
    state.iter().sum()
}

/// Integration method for the master equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    Rk4,
    /// Matrix-exponential checkpointing; constant-generator modes only.
    MatrixExponential,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Sampled population vectors, one per time.
    pub populations: Vec<Vec<f64>>,
    pub p_corr: Vec<f64>,
    /// Count of transiently negative rate evaluations encountered.
    pub negative_rate_events: usize,
}

/// Default step: min(0.01 / max outflow rate, horizon / 1e4).
pub fn default_dt(matrix: &RateMatrix, horizon: f64) -> f64 {
    let cap = horizon / 1e4;
    match &matrix.constant {
        Some(c) => {
            let max_rate = c.outflow.iter().copied().fold(0.0f64, f64::max);
            if max_rate > 0.0 {
                (0.01 / max_rate).min(cap)
            } else {
                cap
            }
        }
        None => cap,
    }
}

/// Integrates dP/dt = G(t) P from `initial`, sampling about `samples` points.
pub fn integrate(
    matrix: &RateMatrix,
    initial: &PopulationState,
    horizon: f64,
    dt: Option<f64>,
    method: Integrator,
    samples: usize,
) -> Result<Trajectory, CorrectionError> {
    let dim = matrix.dim();
    if initial.populations.len() != dim {
        return Err(CorrectionError::DimensionMismatch {
            got: initial.populations.len(),
            expected: dim,
        });
    }
    let total: f64 = initial.populations.iter().sum();
    if initial.populations.iter().any(|p| !(0.0..=1.0).contains(p)) || total > 1.0 + 1e-12 {
        return Err(CorrectionError::BadInitialState);
    }

    let dt = dt.unwrap_or_else(|| default_dt(matrix, horizon));
    let samples = samples.max(2);

    if method == Integrator::MatrixExponential && matrix.constant.is_some() {
        let g = matrix.dense().unwrap();
        let step = horizon / (samples - 1) as f64;
        let propagator = expm(&(g * step));
        let mut p = nalgebra::DVector::from_vec(initial.populations.clone());
        let mut out = Trajectory {
            times: Vec::with_capacity(samples),
            populations: Vec::with_capacity(samples),
            p_corr: Vec::with_capacity(samples),
            negative_rate_events: 0,
        };
        for i in 0..samples {
            if i > 0 {
                p = &propagator * p;
            }
            let t = initial.time + step * i as f64;
            check_positive(p.as_slice(), t)?;
            out.times.push(t);
            out.populations.push(p.as_slice().to_vec());
            out.p_corr.push(p.iter().sum());
        }
        return Ok(out);
    }
    integrate_rk4(matrix, initial, horizon, dt, samples)
}

fn check_positive(p: &[f64], t: f64) -> Result<(), CorrectionError> {
    const TOL: f64 = 1e-9;
    if let Some(min) = p.iter().copied().reduce(f64::min) {
        if min < -TOL {
            return Err(CorrectionError::NegativePopulation {
                time: t,
                value: min,
            });
        }
    }
    Ok(())
}

fn integrate_rk4(
    matrix: &RateMatrix,
    initial: &PopulationState,
    horizon: f64,
    dt: f64,
    samples: usize,
) -> Result<Trajectory, CorrectionError> {
    let dim = matrix.dim();
    let steps = (horizon / dt).ceil().max(1.0) as usize;
    let h = horizon / steps as f64;
    let sample_every = (steps / (samples - 1)).max(1);
    let time_dependent = matrix.constant.is_none();

    let mut p = initial.populations.clone();
    let mut out = Trajectory {
        times: vec![initial.time],
        populations: vec![p.clone()],
        p_corr: vec![correctable_population(&p)],
        negative_rate_events: 0,
    };

    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut stage = vec![0.0; dim];

    let (mut losses_here, neg) = matrix.loss_rates_at(initial.time)?;
    out.negative_rate_events += neg;
    let mut losses_mid = losses_here.clone();
    let mut losses_end = losses_here.clone();

    for i in 0..steps {
        let t = initial.time + i as f64 * h;
        if time_dependent {
            let (lm, nm) = matrix.loss_rates_at(t + 0.5 * h)?;
            let (le, ne) = matrix.loss_rates_at(t + h)?;
            losses_mid = lm;
            losses_end = le;
            out.negative_rate_events += nm + ne;
        }

        matrix.derivative(&losses_here, &p, &mut k1);
        for j in 0..dim {
            stage[j] = p[j] + 0.5 * h * k1[j];
        }
        matrix.derivative(&losses_mid, &stage, &mut k2);
        for j in 0..dim {
            stage[j] = p[j] + 0.5 * h * k2[j];
        }
        matrix.derivative(&losses_mid, &stage, &mut k3);
        for j in 0..dim {
            stage[j] = p[j] + h * k3[j];
        }
        matrix.derivative(&losses_end, &stage, &mut k4);
        for j in 0..dim {
            p[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if time_dependent {
            std::mem::swap(&mut losses_here, &mut losses_end);
        }

        check_positive(&p, t + h)?;
        if (i + 1) % sample_every == 0 || i + 1 == steps {
            out.times.push(t + h);
            out.populations.push(p.clone());
            out.p_corr.push(correctable_population(&p));
        }
    }
    Ok(out)
}

/// Effective occupation of the combined bath + reservoir channel seen at one
/// transition frequency: m + (J/K)(n - m).
///
/// Panics if the reservoir coupling `k_value` is zero.
pub fn effective_occupation(j_value: f64, k_value: f64, n_occ: f64, m_occ: f64) -> f64 {
    assert!(k_value != 0.0, "effective occupation needs K(omega) > 0");
    m_occ + (j_value / k_value) * (n_occ - m_occ)
}

/// Temperature reproducing occupation `n_eff` at frequency `omega`:
/// omega / ln((n_eff + 1)/n_eff). Returns 0.0 (the zero-temperature flag)
/// for n_eff <= 0.
pub fn effective_temperature(n_eff: f64, omega: f64) -> f64 {
    assert!(omega > 0.0);
    if n_eff <= 0.0 {
        return 0.0;
    }
    omega / ((n_eff + 1.0) / n_eff).ln()
}
