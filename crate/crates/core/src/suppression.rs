//! Control modulation functions and codespace leakage dynamics.
//!
//! Energy penalties multiply the dissipation kernel by a unit-modulus phase
//! e^{2 i alpha w_j tau}; decoupling pulse sequences multiply it by the
//! parity sign (-1)^{p(t) - p(t - tau)}. Both suppress the finite-time rate
//! integrals once the modulation outruns the bath correlation decay.

use num_complex::Complex64;
use thiserror::Error;

use crate::bath::{self, BathError};
use crate::quad::{self, QuadError};

#[derive(Debug, Error)]
pub enum SuppressionError {
    #[error(transparent)]
    Bath(#[from] BathError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("population left [0, 1] at t = {time}: P0 = {p0}, P1 = {p1}; reduce the step size")]
    PopulationEscaped { time: f64, p0: f64, p1: f64 },
    #[error("horizon and dt must be positive, got horizon = {horizon}, dt = {dt}")]
    BadGrid { horizon: f64, dt: f64 },
}

/// Parity trace of a decoupling pulse sequence as seen by one error channel:
/// the parity flips at each listed time (a pulse anticommuting with the
/// error).
#[derive(Debug, Clone, Default)]
pub struct DdSchedule {
    flips: Vec<f64>,
}

impl DdSchedule {
    /// No pulses: parity stays 0, modulation stays +1.
    pub fn free() -> Self {
        Self::default()
    }

    pub fn from_flip_times(mut flips: Vec<f64>) -> Self {
        flips.retain(|t| *t >= 0.0);
        flips.sort_by(f64::total_cmp);
        Self { flips }
    }

    /// Parity flips at period, 2*period, ... up to `horizon`.
    pub fn periodic(period: f64, horizon: f64) -> Self {
        assert!(period > 0.0);
        let count = (horizon / period).floor() as usize;
        Self {
            flips: (1..=count).map(|i| i as f64 * period).collect(),
        }
    }

    /// p(t): number of flips at or before `t`, mod 2.
    pub fn parity(&self, t: f64) -> u8 {
        (self.flips.partition_point(|f| *f <= t) % 2) as u8
    }
}

/// Accumulated penalty phase chi(t) as a piecewise-linear function, the
/// integral of the summed per-generator penalty schedule over the
/// anticommuting set of one error.
#[derive(Debug, Clone)]
pub struct PhaseTrace {
    knots: Vec<f64>,
    values: Vec<f64>,
    final_slope: f64,
}

/// Piecewise-constant penalty schedule alpha_m(t) for one generator.
#[derive(Debug, Clone)]
pub struct PenaltySchedule {
    /// Segment start times; the first must be 0.
    pub breakpoints: Vec<f64>,
    /// alpha on [breakpoints[i], breakpoints[i+1]); the last extends forever.
    pub values: Vec<f64>,
}

impl PenaltySchedule {
    pub fn constant(alpha: f64) -> Self {
        Self {
            breakpoints: vec![0.0],
            values: vec![alpha],
        }
    }
}

impl PhaseTrace {
    /// chi(t) = sum over anticommuting generators of int_0^t alpha_m(s) ds.
    pub fn from_schedules(schedules: &[PenaltySchedule], anticommuting: &[bool]) -> Self {
        assert_eq!(schedules.len(), anticommuting.len());
        let mut knots: Vec<f64> = vec![0.0];
        for (s, &active) in schedules.iter().zip(anticommuting) {
            if active {
                knots.extend_from_slice(&s.breakpoints);
            }
        }
        knots.sort_by(f64::total_cmp);
        knots.dedup();

        let slope_at = |t: f64| -> f64 {
            schedules
                .iter()
                .zip(anticommuting)
                .filter(|(_, active)| **active)
                .map(|(s, _)| {
                    let i = s.breakpoints.partition_point(|b| *b <= t);
                    if i == 0 {
                        0.0
                    } else {
                        s.values[i - 1]
                    }
                })
                .sum()
        };

        let mut values = vec![0.0];
        for w in knots.windows(2).collect::<Vec<_>>() {
            let slope = slope_at(w[0]);
            let last = *values.last().unwrap();
            values.push(last + slope * (w[1] - w[0]));
        }
        let final_slope = slope_at(*knots.last().unwrap());
        Self {
            knots,
            values,
            final_slope,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        assert!(t >= 0.0, "phase trace defined for t >= 0");
        let i = self.knots.partition_point(|k| *k <= t);
        if i == self.knots.len() {
            self.values[i - 1] + self.final_slope * (t - self.knots[i - 1])
        } else {
            // knots[i-1] <= t < knots[i]; linear between stored values
            let frac = (t - self.knots[i - 1]) / (self.knots[i] - self.knots[i - 1]);
            self.values[i - 1] + frac * (self.values[i] - self.values[i - 1])
        }
    }
}

/// Unit-modulus modulation m_j(t, tau) produced by the control.
#[derive(Debug, Clone)]
pub enum Modulation {
    /// Constant uniform penalty: m = e^{2 i alpha w_j tau}.
    Egp { alpha: f64, w_j: u32 },
    /// Time-dependent penalties through the accumulated phase:
    /// m = e^{2 i (chi(t) - chi(t - tau))}.
    EgpGeneral { chi: PhaseTrace },
    /// Pulse parity: m = (-1)^{p(t) - p(t - tau)}.
    Dd { schedule: DdSchedule },
}

impl Modulation {
    pub fn eval(&self, t: f64, tau: f64) -> Complex64 {
        match self {
            Modulation::Egp { alpha, w_j } => {
                Complex64::from_polar(1.0, 2.0 * alpha * tau * *w_j as f64)
            }
            Modulation::EgpGeneral { chi } => {
                assert!(tau <= t, "phase trace needs t - tau >= 0");
                Complex64::from_polar(1.0, 2.0 * (chi.eval(t) - chi.eval(t - tau)))
            }
            Modulation::Dd { schedule } => {
                assert!(tau <= t, "parity trace needs t - tau >= 0");
                if schedule.parity(t) == schedule.parity(t - tau) {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(-1.0, 0.0)
                }
            }
        }
    }

    /// Characteristic modulation frequency, for quadrature seeding.
    fn oscillation_scale(&self) -> Option<f64> {
        match self {
            Modulation::Egp { alpha, w_j } => Some(2.0 * alpha * *w_j as f64),
            Modulation::EgpGeneral { chi } => {
                let span = chi.knots.last().copied().unwrap_or(0.0).max(1e-12);
                let mean_slope = (chi.eval(span) - chi.values[0]) / span;
                Some(2.0 * mean_slope.abs().max(2.0 * chi.final_slope.abs()))
            }
            Modulation::Dd { .. } => None,
        }
    }
}

/// Bath correlation function handle for the rate integrals.
#[derive(Debug, Clone)]
pub enum Correlation {
    /// C(tau) = A e^{-gamma tau}.
    ClassicalExponential { amplitude: f64, gamma: f64 },
    /// Lorentz-Drude quantum correlation at temperature T.
    OhmicQuantum {
        e_r: f64,
        gamma: f64,
        temperature: f64,
        matsubara_rtol: f64,
    },
    /// User-tabulated C(tau) on an ascending tau >= 0 grid; linear
    /// interpolation, zero beyond the last point.
    Tabulated {
        taus: Vec<f64>,
        values: Vec<Complex64>,
    },
}

impl Correlation {
    pub fn eval(&self, tau: f64) -> Result<Complex64, BathError> {
        match self {
            Correlation::ClassicalExponential { amplitude, gamma } => Ok(Complex64::new(
                bath::correlation_classical(*amplitude, *gamma, tau),
                0.0,
            )),
            Correlation::OhmicQuantum {
                e_r,
                gamma,
                temperature,
                matsubara_rtol,
            } => {
                if tau == 0.0 {
                    // integrable endpoint; the quadrature never lands exactly
                    // on it with GK nodes, but guard anyway
                    return bath::correlation_quantum_converged(
                        *e_r,
                        *gamma,
                        *temperature,
                        1e-300,
                        *matsubara_rtol,
                    );
                }
                bath::correlation_quantum_converged(*e_r, *gamma, *temperature, tau, *matsubara_rtol)
            }
            Correlation::Tabulated { taus, values } => {
                if taus.is_empty() || tau > *taus.last().unwrap() {
                    return Ok(Complex64::new(0.0, 0.0));
                }
                let i = taus.partition_point(|x| *x < tau);
                if i == 0 {
                    return Ok(values[0]);
                }
                let f = (tau - taus[i - 1]) / (taus[i] - taus[i - 1]);
                Ok(values[i - 1] + (values[i] - values[i - 1]) * f)
            }
        }
    }

    fn decay_scale(&self) -> f64 {
        match self {
            Correlation::ClassicalExponential { gamma, .. } => *gamma,
            Correlation::OhmicQuantum { gamma, temperature, .. } => {
                gamma.max(std::f64::consts::TAU * temperature)
            }
            Correlation::Tabulated { taus, .. } => match taus.last() {
                Some(last) if *last > 0.0 => 4.0 / last,
                _ => 1.0,
            },
        }
    }
}

/// Finite-time leakage rates (gain r+, loss r-):
/// r± = 2 Re int_0^t C(tau) m^(*)(t, tau) d tau by adaptive quadrature.
///
/// For a decoupling modulation the integrands coincide identically (m is
/// real), so the two returned rates are the same f64 value.
pub fn leakage_rates(
    correlation: &Correlation,
    modulation: &Modulation,
    t: f64,
) -> Result<(f64, f64), SuppressionError> {
    assert!(t >= 0.0);
    if t == 0.0 {
        return Ok((0.0, 0.0));
    }
    let periods = match modulation.oscillation_scale() {
        Some(w) if w > 0.0 => (t * w / std::f64::consts::TAU).ceil() as usize * 2 + 1,
        _ => ((t * correlation.decay_scale()).ceil() as usize).clamp(1, 64),
    };
    let rel_tol = 1e-9;
    let run = |conjugate: bool| -> Result<f64, SuppressionError> {
        let mut bath_err = None;
        let q = quad::integrate(
            |tau| {
                let c = match correlation.eval(tau) {
                    Ok(c) => c,
                    Err(e) => {
                        bath_err = Some(e);
                        return 0.0;
                    }
                };
                let m = modulation.eval(t, tau);
                let m = if conjugate { m.conj() } else { m };
                2.0 * (c * m).re
            },
            0.0,
            t,
            rel_tol,
            1e-14,
            periods,
        )?;
        if let Some(e) = bath_err {
            return Err(e.into());
        }
        Ok(q.value)
    };
    if matches!(modulation, Modulation::Dd { .. }) {
        let r = run(false)?;
        return Ok((r, r));
    }
    Ok((run(false)?, run(true)?))
}

/// Two-level codespace trajectory from `p0_dynamics`.
#[derive(Debug, Clone)]
pub struct TwoLevelTrajectory {
    pub times: Vec<f64>,
    pub p0: Vec<f64>,
    pub p1: Vec<f64>,
}

/// Integrates the closed two-level system
///
/// dP0/dt = gain(t) P1 - loss(t) P0,  dP1/dt = -gain(t) P1 + loss(t) P0
///
/// with fixed-step RK4. `rates` returns the summed-over-errors
/// (gain, loss) pair at a given time.
pub fn p0_dynamics(
    mut rates: impl FnMut(f64) -> (f64, f64),
    p0_init: f64,
    p1_init: f64,
    horizon: f64,
    dt: f64,
) -> Result<TwoLevelTrajectory, SuppressionError> {
    if !(horizon > 0.0 && dt > 0.0) {
        return Err(SuppressionError::BadGrid { horizon, dt });
    }
    const EPS: f64 = 1e-9;
    let steps = (horizon / dt).ceil() as usize;
    let h = horizon / steps as f64;
    let mut p0 = p0_init;
    let mut p1 = p1_init;
    let mut out = TwoLevelTrajectory {
        times: Vec::with_capacity(steps + 1),
        p0: Vec::with_capacity(steps + 1),
        p1: Vec::with_capacity(steps + 1),
    };
    out.times.push(0.0);
    out.p0.push(p0);
    out.p1.push(p1);

    let deriv = |rate: (f64, f64), y: (f64, f64)| -> (f64, f64) {
        let flow = rate.0 * y.1 - rate.1 * y.0;
        (flow, -flow)
    };

    let mut rate_here = rates(0.0);
    for i in 0..steps {
        let t = i as f64 * h;
        let rate_mid = rates(t + 0.5 * h);
        let rate_end = rates(t + h);
        let y = (p0, p1);
        let k1 = deriv(rate_here, y);
        let k2 = deriv(rate_mid, (y.0 + 0.5 * h * k1.0, y.1 + 0.5 * h * k1.1));
        let k3 = deriv(rate_mid, (y.0 + 0.5 * h * k2.0, y.1 + 0.5 * h * k2.1));
        let k4 = deriv(rate_end, (y.0 + h * k3.0, y.1 + h * k3.1));
        p0 += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        p1 += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        rate_here = rate_end;
        if !(-EPS..=1.0 + EPS).contains(&p0) || !(-EPS..=1.0 + EPS).contains(&p1) {
            return Err(SuppressionError::PopulationEscaped {
                time: t + h,
                p0,
                p1,
            });
        }
        out.times.push(t + h);
        out.p0.push(p0);
        out.p1.push(p1);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn egp_modulation_examples() {
        let m = Modulation::Egp { alpha: 1.0, w_j: 3 };
        assert_eq!(m.eval(5.0, 0.0), Complex64::new(1.0, 0.0));
        let none = Modulation::Egp { alpha: 1.0, w_j: 0 };
        for tau in [0.0, 0.3, 2.0] {
            assert_eq!(none.eval(5.0, tau), Complex64::new(1.0, 0.0));
        }
        // alpha = 1, w = 3, tau = pi/6: phase = pi
        let v = m.eval(5.0, std::f64::consts::FRAC_PI_6);
        assert_abs_diff_eq!(v.re, -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn dd_modulation_examples() {
        let free = Modulation::Dd {
            schedule: DdSchedule::free(),
        };
        for tau in [0.0, 0.4, 1.0] {
            assert_eq!(free.eval(1.0, tau).re, 1.0);
        }
        let delta = 0.25;
        let m = Modulation::Dd {
            schedule: DdSchedule::periodic(delta, 10.0),
        };
        assert_eq!(m.eval(3.0, 0.0).re, 1.0);
        // shifting back by one period flips parity once
        assert_eq!(m.eval(3.0 + delta / 2.0, delta).re, -1.0);
    }

    #[test]
    #[should_panic(expected = "parity trace")]
    fn dd_rejects_tau_beyond_t() {
        let m = Modulation::Dd {
            schedule: DdSchedule::free(),
        };
        let _ = m.eval(1.0, 2.0);
    }

    #[test]
    fn general_egp_recovers_constant_penalty() {
        let alpha = 1.7;
        let schedules = vec![
            PenaltySchedule::constant(alpha),
            PenaltySchedule::constant(alpha),
            PenaltySchedule::constant(alpha),
        ];
        let chi = PhaseTrace::from_schedules(&schedules, &[true, false, true]);
        let general = Modulation::EgpGeneral { chi };
        let plain = Modulation::Egp { alpha, w_j: 2 };
        for (t, tau) in [(1.0, 0.3), (4.0, 2.5), (10.0, 0.01)] {
            let a = general.eval(t, tau);
            let b = plain.eval(t, tau);
            assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-12);
            assert_abs_diff_eq!(a.im, b.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn general_egp_zero_schedule_is_unity() {
        let chi = PhaseTrace::from_schedules(&[PenaltySchedule::constant(0.0)], &[true]);
        let m = Modulation::EgpGeneral { chi };
        for (t, tau) in [(1.0, 0.5), (8.0, 8.0)] {
            assert_eq!(m.eval(t, tau), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn general_egp_piecewise_phase_is_area_difference() {
        // alpha = 2 on [0, 1), alpha = 0.5 afterwards
        let schedule = PenaltySchedule {
            breakpoints: vec![0.0, 1.0],
            values: vec![2.0, 0.5],
        };
        let chi = PhaseTrace::from_schedules(&[schedule], &[true]);
        let (t, tau) = (3.0, 2.5);
        // chi(3) = 2*1 + 0.5*2 = 3; chi(0.5) = 1; phase = 2*(3 - 1) = 4
        let m = Modulation::EgpGeneral { chi };
        let v = m.eval(t, tau);
        assert_abs_diff_eq!(v.arg(), 4.0 - std::f64::consts::TAU, epsilon = 1e-12);
    }

    #[test]
    fn unit_modulus_everywhere() {
        let mods = [
            Modulation::Egp { alpha: 2.3, w_j: 2 },
            Modulation::EgpGeneral {
                chi: PhaseTrace::from_schedules(
                    &[
                        PenaltySchedule {
                            breakpoints: vec![0.0, 0.5, 2.0],
                            values: vec![1.0, 3.0, 0.2],
                        },
                        PenaltySchedule::constant(0.7),
                    ],
                    &[true, true],
                ),
            },
            Modulation::Dd {
                schedule: DdSchedule::periodic(0.1, 20.0),
            },
        ];
        for m in &mods {
            for i in 0..40 {
                let t = 0.1 + i as f64 * 0.25;
                for frac in [0.0, 0.3, 0.9, 1.0] {
                    let v = m.eval(t, t * frac);
                    assert_abs_diff_eq!(v.norm(), 1.0, epsilon = 1e-13);
                }
            }
        }
    }

    fn tabulated_correlation() -> Correlation {
        let taus: Vec<f64> = (0..200).map(|i| i as f64 * 0.02).collect();
        let values = taus
            .iter()
            .map(|t| Complex64::new((-2.0 * t).exp(), -0.3 * (-3.0 * t).exp()))
            .collect();
        Correlation::Tabulated { taus, values }
    }

    #[test]
    fn dd_rates_are_bit_identical_across_bath_models() {
        let baths = [
            Correlation::ClassicalExponential {
                amplitude: 1.0,
                gamma: 2.0,
            },
            Correlation::OhmicQuantum {
                e_r: 0.1,
                gamma: 3.0,
                temperature: 1.0,
                matsubara_rtol: 1e-10,
            },
            tabulated_correlation(),
        ];
        for corr in &baths {
            for schedule in [
                DdSchedule::free(),
                DdSchedule::periodic(0.05, 10.0),
                DdSchedule::from_flip_times(vec![0.013, 0.4, 0.62, 1.18, 2.0]),
            ] {
                let m = Modulation::Dd { schedule };
                for t in [0.3, 1.7] {
                    let (plus, minus) = leakage_rates(corr, &m, t).unwrap();
                    assert_eq!(plus.to_bits(), minus.to_bits());
                }
            }
        }
    }

    #[test]
    fn tabulated_correlation_interpolates_and_vanishes_beyond_grid() {
        let corr = tabulated_correlation();
        let mid = corr.eval(0.03).unwrap();
        assert_relative_eq!(
            mid.re,
            0.5 * ((-0.04f64).exp() + (-0.08f64).exp()),
            max_relative = 1e-12
        );
        assert_eq!(corr.eval(99.0).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn egp_with_classical_bath_matches_closed_form() {
        let (a, g) = (0.8, 2.0);
        let corr = Correlation::ClassicalExponential {
            amplitude: a,
            gamma: g,
        };
        for (alpha, w_j) in [(0.5, 1u32), (2.0, 3)] {
            let m = Modulation::Egp { alpha, w_j };
            let w = 2.0 * alpha * w_j as f64;
            for t in [0.2, 1.0, 4.0] {
                let (plus, minus) = leakage_rates(&corr, &m, t).unwrap();
                let expected = bath::timedep_rate_classical(a, g, w, t, bath::Sign::Plus);
                assert_relative_eq!(plus, expected, max_relative = 1e-8);
                assert_relative_eq!(minus, expected, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn unmodulated_classical_bath_is_elementary_integral() {
        let (a, g) = (1.3, 2.5);
        let corr = Correlation::ClassicalExponential {
            amplitude: a,
            gamma: g,
        };
        let m = Modulation::Egp { alpha: 0.0, w_j: 1 };
        for t in [0.1, 1.0, 3.0] {
            let (plus, _) = leakage_rates(&corr, &m, t).unwrap();
            assert_relative_eq!(
                plus,
                2.0 * a * (1.0 - (-g * t).exp()) / g,
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn egp_ohmic_rates_match_bath_module() {
        let (e_r, g, temp) = (0.1, 3.0, 1.0);
        let corr = Correlation::OhmicQuantum {
            e_r,
            gamma: g,
            temperature: temp,
            matsubara_rtol: 1e-11,
        };
        let m = Modulation::Egp { alpha: 2.0, w_j: 1 };
        for t in [0.4, 1.5] {
            let (plus, minus) = leakage_rates(&corr, &m, t).unwrap();
            let rp = bath::timedep_rate_ohmic(e_r, g, temp, 4.0, t, bath::Sign::Plus, 1e-11).unwrap();
            let rm = bath::timedep_rate_ohmic(e_r, g, temp, 4.0, t, bath::Sign::Minus, 1e-11).unwrap();
            assert_relative_eq!(plus, rp, max_relative = 1e-6);
            assert_relative_eq!(minus, rm, max_relative = 1e-6);
        }
    }

    #[test]
    fn zero_rates_keep_population_constant() {
        let traj = p0_dynamics(|_| (0.0, 0.0), 0.8, 0.2, 5.0, 0.01).unwrap();
        assert!(traj.p0.iter().all(|p| (p - 0.8).abs() < 1e-15));
        assert!(traj.p1.iter().all(|p| (p - 0.2).abs() < 1e-15));
    }

    #[test]
    fn symmetric_rates_relax_to_half() {
        let r = 0.7;
        let traj = p0_dynamics(|_| (r, r), 1.0, 0.0, 12.0, 0.002).unwrap();
        // analytic: P0(t) = 1/2 + 1/2 e^{-2 r t}
        for (t, p0) in traj.times.iter().zip(&traj.p0) {
            assert_abs_diff_eq!(*p0, 0.5 + 0.5 * (-2.0 * r * t).exp(), epsilon = 1e-9);
        }
        assert_abs_diff_eq!(*traj.p0.last().unwrap(), 0.5, epsilon = 1e-7);
    }

    #[test]
    fn population_sum_is_conserved() {
        let traj = p0_dynamics(
            |t| (0.3 + 0.1 * (t).sin().abs(), 0.5),
            1.0,
            0.0,
            20.0,
            0.01,
        )
        .unwrap();
        for (p0, p1) in traj.p0.iter().zip(&traj.p1) {
            assert_abs_diff_eq!(p0 + p1, 1.0, epsilon = 1e-9);
        }
    }

    // larger penalty => slower codespace decay, with the quantum bath of the
    // rate-figure parameters
    #[test]
    fn stronger_penalty_slows_leakage() {
        let (e_r, g, temp) = (0.1, 3.0, 1.0);
        let mut finals = Vec::new();
        for alpha in [1.0, 2.0, 4.0] {
            let w = 2.0 * alpha;
            let rates = |t: f64| {
                let gain =
                    bath::timedep_rate_ohmic(e_r, g, temp, w, t, bath::Sign::Plus, 1e-9).unwrap();
                let loss =
                    bath::timedep_rate_ohmic(e_r, g, temp, w, t, bath::Sign::Minus, 1e-9).unwrap();
                (gain, loss.max(0.0))
            };
            let traj = p0_dynamics(rates, 1.0, 0.0, 8.0, 0.004).unwrap();
            finals.push(*traj.p0.last().unwrap());
        }
        assert!(finals[0] < finals[1] && finals[1] < finals[2], "{finals:?}");
    }
}
