//! Per-mode execution: compute, then emit CSV/SVG plus a manifest.

use std::collections::HashMap;
use std::path::PathBuf;

use syndyn::bath::{self, Sign, SpectralDensity};
use syndyn::classify::classify;
use syndyn::code::registry;
use syndyn::correction::{
    build_conservation_matrix, build_rate_matrix, integrate, CorrectionConfig, Integrator,
    LogicalEnergy, PopulationState, RateMode, ThermalBath,
};
use syndyn::graph::{build_graph, export_dot, export_json};
use syndyn::stability::{scan, ScanGrid};
use syndyn::suppression::{
    leakage_rates, p0_dynamics, Correlation, DdSchedule, Modulation,
};

use crate::config::*;
use crate::error::CliError;
use crate::output::{line_chart, num, write_atomic, CsvTable, Series};

pub struct RunContext {
    pub run_dir: PathBuf,
    pub emit_svg: bool,
}

impl RunContext {
    fn emit(&self, name: &str, bytes: &[u8], files: &mut Vec<String>) -> Result<(), CliError> {
        write_atomic(&self.run_dir, name, bytes).map_err(CliError::Io)?;
        files.push(name.to_string());
        Ok(())
    }
}

pub fn execute(config: &RunConfig, ctx: &RunContext) -> Result<Vec<String>, CliError> {
    match config {
        RunConfig::Codes {} => run_codes(ctx),
        RunConfig::Graph(c) => run_graph(c, ctx),
        RunConfig::Rates(c) => run_rates(c, ctx),
        RunConfig::Suppress(c) => run_suppress(c, ctx),
        RunConfig::Correct(c) => run_correct(c, ctx),
        RunConfig::Stability(c) => run_stability(c, ctx),
    }
}

/// Registry table, also printed to stdout by the `codes` subcommand.
pub fn codes_table() -> String {
    let mut out = String::from("name        [[n,k,d]]    generators\n");
    for code in registry() {
        let d = code
            .declared_distance()
            .map(|d| d.to_string())
            .unwrap_or_else(|| "-".into());
        let gens: Vec<String> = code.generators().iter().map(|g| g.to_string()).collect();
        out.push_str(&format!(
            "{:<11} [[{},{},{}]]    {}\n",
            code.name(),
            code.num_qubits(),
            code.num_logical(),
            d,
            gens.join(" ")
        ));
    }
    out
}

fn run_codes(ctx: &RunContext) -> Result<Vec<String>, CliError> {
    let mut files = Vec::new();
    ctx.emit("codes.txt", codes_table().as_bytes(), &mut files)?;
    Ok(files)
}

fn run_graph(config: &GraphConfig, ctx: &RunContext) -> Result<Vec<String>, CliError> {
    let code = config.code.build().map_err(CliError::schema)?;
    let model = config.error_model.build(&code).map_err(CliError::schema)?;
    let table = classify(&code, &model, config.max_weight).map_err(CliError::schema)?;
    let graph = build_graph(&code, &model, &table).map_err(CliError::numerical)?;

    let mut files = Vec::new();
    let want = config.format.as_deref();
    if want.is_none() || want == Some("dot") {
        ctx.emit("graph.dot", export_dot(&graph, &model).as_bytes(), &mut files)?;
    }
    if want.is_none() || want == Some("json") {
        let text = export_json(&graph).map_err(CliError::numerical)?;
        ctx.emit("graph.json", text.as_bytes(), &mut files)?;
    }
    if let Some(other) = want {
        if other != "dot" && other != "json" {
            return Err(CliError::Schema(format!(
                "unknown graph format {other:?} (expected dot or json)"
            )));
        }
    }
    Ok(files)
}

fn run_rates(config: &RatesConfig, ctx: &RunContext) -> Result<Vec<String>, CliError> {
    let density = config.bath.density();
    let temp = config.bath.temperature_mhz;
    let mut csv = CsvTable::new(&[
        "alpha_mhz",
        "omega_mhz",
        "t_us",
        "r_plus",
        "r_minus",
        "markov_plus",
        "markov_minus",
    ]);
    let mut series: Vec<Series> = Vec::new();
    for &alpha in &config.alphas_mhz {
        let omega = 2.0 * alpha * config.w_j as f64;
        let markov_plus = bath::markov_rate(&density, temp, omega);
        let markov_minus = bath::markov_rate(&density, temp, -omega);
        let mut plus_points = Vec::new();
        let mut minus_points = Vec::new();
        for t in config.time.times() {
            let (rp, rm) = match config.matsubara_terms {
                Some(k) => (
                    bath::timedep_rate_ohmic_truncated(
                        config.bath.e_r_mhz,
                        config.bath.gamma_mhz,
                        temp,
                        omega,
                        t,
                        Sign::Plus,
                        k,
                    )
                    .map_err(CliError::numerical)?,
                    bath::timedep_rate_ohmic_truncated(
                        config.bath.e_r_mhz,
                        config.bath.gamma_mhz,
                        temp,
                        omega,
                        t,
                        Sign::Minus,
                        k,
                    )
                    .map_err(CliError::numerical)?,
                ),
                None => (
                    bath::timedep_rate_ohmic(
                        config.bath.e_r_mhz,
                        config.bath.gamma_mhz,
                        temp,
                        omega,
                        t,
                        Sign::Plus,
                        bath::DEFAULT_MATSUBARA_RTOL,
                    )
                    .map_err(CliError::numerical)?,
                    bath::timedep_rate_ohmic(
                        config.bath.e_r_mhz,
                        config.bath.gamma_mhz,
                        temp,
                        omega,
                        t,
                        Sign::Minus,
                        bath::DEFAULT_MATSUBARA_RTOL,
                    )
                    .map_err(CliError::numerical)?,
                ),
            };
            csv.row(&[
                num(alpha),
                num(omega),
                num(t),
                num(rp),
                num(rm),
                num(markov_plus),
                num(markov_minus),
            ]);
            plus_points.push((t, rp));
            minus_points.push((t, rm));
        }
        series.push(Series {
            label: format!("r+ (alpha={alpha})"),
            points: plus_points,
        });
        series.push(Series {
            label: format!("r- (alpha={alpha})"),
            points: minus_points,
        });
    }
    let mut files = Vec::new();
    ctx.emit("rates.csv", &csv.into_bytes(), &mut files)?;
    if ctx.emit_svg {
        let svg = line_chart("transition rates", "t (us)", "rate (1/us)", &series);
        ctx.emit("rates.svg", svg.as_bytes(), &mut files)?;
    }
    Ok(files)
}

fn build_modulation(spec: &ModulationConfig, horizon: f64) -> Modulation {
    match spec {
        ModulationConfig::None {} => Modulation::Egp { alpha: 0.0, w_j: 0 },
        ModulationConfig::Egp { alpha_mhz, w_j } => Modulation::Egp {
            alpha: *alpha_mhz,
            w_j: *w_j,
        },
        ModulationConfig::Dd { period_us } => Modulation::Dd {
            schedule: DdSchedule::periodic(*period_us, horizon),
        },
        ModulationConfig::DdExplicit { flip_times_us } => Modulation::Dd {
            schedule: DdSchedule::from_flip_times(flip_times_us.clone()),
        },
    }
}

fn run_suppress(config: &SuppressConfig, ctx: &RunContext) -> Result<Vec<String>, CliError> {
    if config.errors.is_empty() {
        return Err(CliError::Schema(
            "suppress needs at least one error channel".into(),
        ));
    }
    let correlation = match &config.correlation {
        CorrelationConfig::Classical {
            amplitude,
            gamma_mhz,
        } => Correlation::ClassicalExponential {
            amplitude: *amplitude,
            gamma: *gamma_mhz,
        },
        CorrelationConfig::OhmicQuantum(b) => Correlation::OhmicQuantum {
            e_r: b.e_r_mhz,
            gamma: b.gamma_mhz,
            temperature: b.temperature_mhz,
            matsubara_rtol: bath::DEFAULT_MATSUBARA_RTOL,
        },
    };
    let modulations: Vec<Modulation> = config
        .errors
        .iter()
        .map(|m| build_modulation(m, config.horizon_us))
        .collect();

    // memoize summed rates: RK4 revisits each time point
    let cache = std::cell::RefCell::new(HashMap::<u64, (Vec<(f64, f64)>, f64, f64)>::new());
    let rate_error = std::cell::RefCell::new(None::<CliError>);
    let rates_at = |t: f64| -> (Vec<(f64, f64)>, f64, f64) {
        cache
            .borrow_mut()
            .entry(t.to_bits())
            .or_insert_with(|| {
                let mut per = Vec::new();
                let mut gain = 0.0;
                let mut loss = 0.0;
                for m in &modulations {
                    match leakage_rates(&correlation, m, t) {
                        Ok((rp, rm)) => {
                            gain += rp;
                            loss += rm;
                            per.push((rp, rm));
                        }
                        Err(e) => {
                            rate_error
                                .borrow_mut()
                                .get_or_insert_with(|| CliError::numerical(e));
                            per.push((0.0, 0.0));
                        }
                    }
                }
                (per, gain, loss)
            })
            .clone()
    };

    let traj = p0_dynamics(
        |t| {
            let (_, gain, loss) = rates_at(t);
            (gain, loss)
        },
        config.p0_init,
        config.p1_init,
        config.horizon_us,
        config.dt_us,
    )
    .map_err(CliError::numerical)?;

    let mut header: Vec<String> = vec!["t_us".into()];
    for j in 1..=config.errors.len() {
        header.push(format!("r_plus_{j}"));
        header.push(format!("r_minus_{j}"));
    }
    header.push("p0".into());
    header.push("p1".into());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = CsvTable::new(&header_refs);
    let mut p0_series = Vec::new();
    for (i, t) in traj.times.iter().enumerate() {
        let (per, _, _) = rates_at(*t);
        let mut row = vec![num(*t)];
        for (rp, rm) in &per {
            row.push(num(*rp));
            row.push(num(*rm));
        }
        row.push(num(traj.p0[i]));
        row.push(num(traj.p1[i]));
        csv.row(&row);
        p0_series.push((*t, traj.p0[i]));
    }
    if let Some(e) = rate_error.into_inner() {
        return Err(e);
    }
    let mut files = Vec::new();
    ctx.emit("suppress.csv", &csv.into_bytes(), &mut files)?;
    if ctx.emit_svg {
        let svg = line_chart(
            "codespace population",
            "t (us)",
            "P0",
            &[Series {
                label: "P0".into(),
                points: p0_series,
            }],
        );
        ctx.emit("suppress.svg", svg.as_bytes(), &mut files)?;
    }
    Ok(files)
}

fn run_correct(config: &CorrectConfig, ctx: &RunContext) -> Result<Vec<String>, CliError> {
    let code = config.code.build().map_err(CliError::schema)?;
    let model = config.error_model.build(&code).map_err(CliError::schema)?;
    let table = classify(&code, &model, config.max_weight).map_err(CliError::schema)?;
    let graph = build_graph(&code, &model, &table).map_err(CliError::numerical)?;

    let rate_mode = match config.rate_mode.as_str() {
        "second_markov" => RateMode::SecondMarkov,
        "time_dependent" => RateMode::TimeDependent,
        other => {
            return Err(CliError::Schema(format!(
                "unknown rate_mode {other:?} (expected second_markov or time_dependent)"
            )))
        }
    };
    let integrator = match config.integrator.as_str() {
        "rk4" => Integrator::Rk4,
        "matrix_exponential" | "expm" => Integrator::MatrixExponential,
        other => {
            return Err(CliError::Schema(format!(
                "unknown integrator {other:?} (expected rk4 or matrix_exponential)"
            )))
        }
    };
    let conservation = match config.track.as_str() {
        "correctable" => false,
        "all" => true,
        other => {
            return Err(CliError::Schema(format!(
                "unknown track {other:?} (expected correctable or all)"
            )))
        }
    };
    let bath = ThermalBath::new(config.bath.density(), config.bath.temperature_mhz)
        .map_err(CliError::schema)?;
    let reservoir = config
        .reservoir
        .as_ref()
        .map(|r| ThermalBath::new(r.density(), r.temperature_mhz))
        .transpose()
        .map_err(CliError::schema)?;

    let mut header: Vec<String> = vec!["alpha_mhz".into(), "t_us".into(), "p_corr".into()];
    let mut tracked_for_header: Option<Vec<usize>> = None;
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut series: Vec<Series> = Vec::new();

    for alpha in config.alpha_mhz.values() {
        let matrix = if conservation {
            build_conservation_matrix(&code, &model, alpha, &bath, reservoir.as_ref())
                .map_err(CliError::numerical)?
        } else {
            let cc = CorrectionConfig {
                alpha,
                epsilon_bar: LogicalEnergy::Constant(config.epsilon_bar_mhz),
                bath: bath.clone(),
                reservoir: reservoir.clone(),
                rate_mode,
                clamp_negative_rates: config.clamp_negative_rates,
                matsubara_rtol: bath::DEFAULT_MATSUBARA_RTOL,
            };
            build_rate_matrix(&graph, cc).map_err(CliError::numerical)?
        };
        if config.per_syndrome && tracked_for_header.is_none() {
            let tracked = matrix.tracked_nodes().to_vec();
            for node in &tracked {
                header.push(format!("p_s{node}"));
            }
            tracked_for_header = Some(tracked);
        }
        let init = PopulationState::codespace(matrix.dim());
        let traj = integrate(
            &matrix,
            &init,
            config.horizon_us,
            config.dt_us,
            integrator,
            config.samples,
        )
        .map_err(CliError::numerical)?;
        let mut pts = Vec::new();
        for (i, t) in traj.times.iter().enumerate() {
            let mut row = vec![num(alpha), num(*t), num(traj.p_corr[i])];
            if config.per_syndrome {
                for v in &traj.populations[i] {
                    row.push(num(*v));
                }
            }
            rows.push(row);
            pts.push((*t, traj.p_corr[i]));
        }
        series.push(Series {
            label: format!("alpha={alpha}"),
            points: pts,
        });
    }

    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = CsvTable::new(&header_refs);
    for row in rows {
        csv.row(&row);
    }
    let mut files = Vec::new();
    ctx.emit("correct.csv", &csv.into_bytes(), &mut files)?;
    if ctx.emit_svg {
        let svg = line_chart("correctable population", "t (us)", "P_corr", &series);
        ctx.emit("correct.svg", svg.as_bytes(), &mut files)?;
    }
    Ok(files)
}

fn run_stability(config: &StabilityConfig, ctx: &RunContext) -> Result<Vec<String>, CliError> {
    let grid = ScanGrid {
        params: config.concatenated.clone(),
        scaling: config.scaling,
        alphas: config.alphas_mhz.values(),
        temperatures: config.temperatures_mhz.values(),
        logical_qubits: config.logical_qubits.values(),
        density: SpectralDensity::ohmic(config.bath.e_r_mhz, config.bath.gamma_mhz),
        convention: config.convention,
    };
    let rows = scan(&grid).map_err(CliError::numerical)?;

    let mut csv = CsvTable::new(&[
        "n_l",
        "alpha_mhz",
        "temperature_mhz",
        "delta_bar",
        "log_eta0",
        "log_eta_bound",
    ]);
    for row in &rows {
        csv.row(&[
            row.n_l.to_string(),
            num(row.alpha),
            num(row.temperature),
            num(row.delta_bar),
            num(row.ln_eta0),
            row.ln_eta_bound.map(num).unwrap_or_default(),
        ]);
    }
    let mut files = Vec::new();
    ctx.emit("stability.csv", &csv.into_bytes(), &mut files)?;

    if ctx.emit_svg {
        // one series per (temperature, alpha) pair, log eta0 vs n_l
        let mut series: Vec<Series> = Vec::new();
        for &temp in &grid.temperatures {
            for &alpha in &grid.alphas {
                let pts: Vec<(f64, f64)> = rows
                    .iter()
                    .filter(|r| r.temperature == temp && r.alpha == alpha)
                    .map(|r| (r.n_l as f64, r.ln_eta0))
                    .collect();
                if !pts.is_empty() {
                    series.push(Series {
                        label: format!("T={temp}, alpha={alpha}"),
                        points: pts,
                    });
                }
            }
        }
        let svg = line_chart("mean hitting time", "n_l", "ln eta0", &series);
        ctx.emit("stability.svg", svg.as_bytes(), &mut files)?;
    }
    Ok(files)
}
