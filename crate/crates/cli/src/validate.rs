//! Dry-run config validation: schema plus physics sanity advisories. Never
//! executes a simulation; the report carries all findings.

use crate::config::{BathConfig, CorrelationConfig, RunConfig};

#[derive(Debug, PartialEq, Eq, Clone, Copy)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug)]
pub struct Finding {
    pub severity: Severity,
    pub message: String,
}

#[derive(Debug, Default)]
pub struct Report {
    pub findings: Vec<Finding>,
}

impl Report {
    fn error(&mut self, message: impl Into<String>) {
        self.findings.push(Finding {
            severity: Severity::Error,
            message: message.into(),
        });
    }

    fn warn(&mut self, message: impl Into<String>) {
        self.findings.push(Finding {
            severity: Severity::Warning,
            message: message.into(),
        });
    }

    pub fn passed(&self) -> bool {
        self.findings.iter().all(|f| f.severity != Severity::Error)
    }

    pub fn render(&self) -> String {
        if self.findings.is_empty() {
            return "PASS: no findings\n".to_string();
        }
        let mut out = String::new();
        for f in &self.findings {
            let tag = match f.severity {
                Severity::Error => "ERROR",
                Severity::Warning => "WARN",
            };
            out.push_str(&format!("{tag}: {}\n", f.message));
        }
        out.push_str(if self.passed() {
            "PASS with warnings\n"
        } else {
            "FAIL\n"
        });
        out
    }
}

fn check_markovianity(report: &mut Report, label: &str, e_r: f64, gamma: f64) {
    if e_r >= 0.1 * gamma {
        report.warn(format!(
            "{label}: E_R = {e_r} MHz is not small against gamma = {gamma} MHz; \
             the Markovian rate treatment needs E_R << gamma"
        ));
    }
}

fn check_bath(report: &mut Report, label: &str, bath: &BathConfig) {
    if bath.temperature_mhz <= 0.0 {
        report.error(format!("{label}: temperature must be positive"));
    }
    if bath.e_r_mhz < 0.0 || bath.gamma_mhz <= 0.0 {
        report.error(format!(
            "{label}: needs E_R >= 0 and gamma > 0 (got E_R = {}, gamma = {})",
            bath.e_r_mhz, bath.gamma_mhz
        ));
    }
    check_markovianity(report, label, bath.e_r_mhz, bath.gamma_mhz);
}

/// Validates a parsed config. Schema-level failures are produced by the
/// caller (they abort parsing); this layer adds physics checks.
pub fn validate(config: &RunConfig) -> Report {
    let mut report = Report::default();
    match config {
        RunConfig::Codes {} => {}
        RunConfig::Graph(c) => {
            if let Err(e) = c.code.build().map_err(|e| e.to_string()).and_then(|code| {
                c.error_model
                    .build(&code)
                    .map(|_| ())
                    .map_err(|e| e.to_string())
            }) {
                report.error(e);
            }
            if c.max_weight == 0 {
                report.error("max_weight must be >= 1");
            }
        }
        RunConfig::Rates(c) => {
            check_bath(&mut report, "bath", &c.bath);
            if c.alphas_mhz.is_empty() {
                report.error("alphas_mhz must not be empty");
            }
            if c.time.stop_us <= 0.0 || c.time.points < 2 {
                report.error("time grid needs stop_us > 0 and points >= 2");
            }
        }
        RunConfig::Suppress(c) => {
            match &c.correlation {
                CorrelationConfig::Classical { gamma_mhz, .. } => {
                    if *gamma_mhz <= 0.0 {
                        report.error("classical correlation needs gamma > 0");
                    }
                }
                CorrelationConfig::OhmicQuantum(b) => check_bath(&mut report, "bath", b),
            }
            if c.errors.is_empty() {
                report.error("suppress needs at least one error channel");
            }
            if c.horizon_us <= 0.0 || c.dt_us <= 0.0 {
                report.error("horizon_us and dt_us must be positive");
            }
            let total = c.p0_init + c.p1_init;
            if !(0.0..=1.0 + 1e-12).contains(&total)
                || c.p0_init < 0.0
                || c.p1_init < 0.0
            {
                report.error("initial populations must be in [0, 1] with total <= 1");
            }
        }
        RunConfig::Correct(c) => {
            match c.code.build() {
                Err(e) => report.error(e.to_string()),
                Ok(code) => {
                    if let Err(e) = c.error_model.build(&code) {
                        report.error(e.to_string());
                    }
                }
            }
            check_bath(&mut report, "bath", &c.bath);
            if let Some(res) = &c.reservoir {
                check_bath(&mut report, "reservoir", res);
                let alphas = c.alpha_mhz.values();
                if alphas.iter().any(|a| *a == 0.0) {
                    report.error("alpha = 0 with a reservoir: cooling without penalties is ill-posed");
                }
                if res.temperature_mhz >= c.bath.temperature_mhz {
                    report.warn(format!(
                        "reservoir temperature {} MHz is not below the bath temperature {} MHz; \
                         cooling needs m(omega) << n(omega)",
                        res.temperature_mhz, c.bath.temperature_mhz
                    ));
                }
                if res.e_r_mhz <= c.bath.e_r_mhz {
                    report.warn(format!(
                        "reservoir coupling E_R = {} MHz does not dominate the bath's {} MHz; \
                         cooling needs K(omega) >> J(omega)",
                        res.e_r_mhz, c.bath.e_r_mhz
                    ));
                }
            }
            if c.alpha_mhz.values().iter().any(|a| *a < 0.0) {
                report.error("alpha must be non-negative");
            }
            if c.horizon_us <= 0.0 {
                report.error("horizon_us must be positive");
            }
            if c.rate_mode == "time_dependent" && c.integrator != "rk4" {
                report.error("time_dependent rates require the rk4 integrator");
            }
        }
        RunConfig::Stability(c) => {
            if c.bath.gamma_mhz <= 0.0 || c.bath.e_r_mhz < 0.0 {
                report.error("stability bath needs gamma > 0 and E_R >= 0");
            }
            if c.temperatures_mhz.values().iter().any(|t| *t <= 0.0) {
                report.error("temperatures must be positive");
            }
            let n_c = c.concatenated.correctable_weight();
            if n_c == 0 {
                report.error("correctable weight n_c must be >= 1");
            }
            for n_l in c.logical_qubits.values() {
                if c.concatenated.elementary_errors(n_l) <= n_c as u64 {
                    report.error(format!("N_e must exceed n_c at n_l = {n_l}"));
                }
                if c.scaling.delta_bar(n_l) <= 0.0 {
                    report.error(format!(
                        "barrier step is not positive at n_l = {n_l} (log scaling needs n_l >= 2)"
                    ));
                }
            }
            // the second-Markov rates behind the chain assume a broad cutoff
            for alpha in c.alphas_mhz.values() {
                for n_l in c.logical_qubits.values() {
                    let omega = alpha * c.scaling.delta_bar(n_l);
                    if omega > c.bath.gamma_mhz {
                        report.warn(format!(
                            "barrier energy alpha*Delta = {omega:.2} MHz exceeds the cutoff \
                             gamma = {} MHz at n_l = {n_l}; rates sample the far tail of the \
                             spectral density",
                            c.bath.gamma_mhz
                        ));
                        break;
                    }
                }
            }
        }
    }
    report
}
