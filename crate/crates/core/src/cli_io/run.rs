//! Dispatch of queued runs to the core modules.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use super::config::{Command, QueuedRun, RunConfig, System};
use crate::error::{QapError, Result};
use crate::particle::{
    classical_action_lagrangian, minimize_constant_lapse, phase_evolution, quantum_action_particle,
    stationary_particle, stationary_path, stationary_proper_time, straight_worldline, ParticleScenario,
};
use crate::stationarity::find_stationary_n;
use crate::string_action::{stationary_x0_solve, string_phase_evolution};
use crate::string_spectrum::{action_xi, com_energy, energy, normal_modes, OccupationVector};

pub const FORMAT_VERSION: u64 = 1;

/// Machine-readable description of a failure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorObject {
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
}

impl From<&QapError> for ErrorObject {
    fn from(e: &QapError) -> Self {
        ErrorObject { kind: e.kind().to_string(), message: e.to_string(), exit_code: e.exit_code() }
    }
}

impl ErrorObject {
    pub fn to_value(&self) -> Value {
        json!({ "kind": self.kind, "message": self.message, "exit_code": self.exit_code })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub index: usize,
    pub value: Option<f64>,
    pub outcome: std::result::Result<Value, ErrorObject>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    /// Grid sizes, tolerances and run identity.
    pub header: Map<String, Value>,
    pub sweep_parameter: Option<String>,
    /// Ordered by sweep index.
    pub records: Vec<RunRecord>,
}

impl RunOutput {
    /// Exit code of the first failed record, or 0.
    pub fn exit_code(&self) -> i32 {
        self.records
            .iter()
            .find_map(|r| r.outcome.as_ref().err().map(|e| e.exit_code))
            .unwrap_or(0)
    }
}

/// Executes every queued run of `config` on at most `workers` threads.
pub fn run(config: &RunConfig, workers: usize) -> Result<RunOutput> {
    let queued = config.queued_runs()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| QapError::Io(format!("cannot start worker pool: {e}")))?;
    let records: Vec<RunRecord> = pool.install(|| queued.par_iter().map(execute).collect());
    Ok(RunOutput {
        header: header(config),
        sweep_parameter: config.sweep.as_ref().filter(|_| config.command() == Command::Sweep).map(|s| s.parameter.clone()),
        records,
    })
}

fn execute(queued: &QueuedRun) -> RunRecord {
    let outcome = run_single(&queued.config).map_err(|e| ErrorObject::from(&e));
    RunRecord { index: queued.index, value: queued.value, outcome }
}

fn header(config: &RunConfig) -> Map<String, Value> {
    let mut h = Map::new();
    h.insert("format_version".into(), json!(FORMAT_VERSION));
    h.insert("system".into(), json!(config.system().as_str()));
    h.insert("command".into(), json!(config.command().as_str()));
    if let Some(sw) = config.sweep.as_ref() {
        h.insert("sweep.parameter".into(), json!(sw.parameter));
        h.insert("sweep.command".into(), json!(sw.command.as_str()));
        h.insert("sweep.count".into(), json!(sw.values.len()));
    }
    match config.system() {
        System::Particle => {
            if let Some(p) = &config.particle {
                h.insert("grid.tau_steps".into(), json!(p.tau_steps));
            }
        }
        System::String => {
            if let Some(s) = &config.string {
                h.insert("grid.sigma_points".into(), json!(s.sigma_points));
                h.insert("grid.tau_steps".into(), json!(s.tau_steps));
            }
            let opts = config.engine_options();
            h.insert("engine.mode".into(), json!(opts.mode.as_str()));
            h.insert("tolerances.gradient_tol".into(), json!(opts.gradient_tol));
            h.insert("tolerances.fd_step".into(), json!(opts.fd_step));
            h.insert("tolerances.max_iterations".into(), json!(opts.max_iterations));
            h.insert("occupations".into(), json!(config.occupations));
        }
    }
    h
}

/// Runs one concrete (non-sweep) configuration.
pub fn run_single(config: &RunConfig) -> Result<Value> {
    match config.system() {
        System::Particle => run_particle(config),
        System::String => run_string(config),
    }
}

fn particle_end(scenario: &ParticleScenario) -> (Vec<f64>, Vec<f64>) {
    let start = vec![0.0; scenario.dim_space + 1];
    let mut end = vec![scenario.x0_final];
    if scenario.x_spatial_final.is_empty() {
        end.extend(std::iter::repeat(0.0).take(scenario.dim_space));
    } else {
        end.extend(&scenario.x_spatial_final);
    }
    (start, end)
}

fn particle_proper_time(scenario: &ParticleScenario) -> Result<f64> {
    let st = stationary_particle(scenario)?;
    match st.t_star {
        Some(t) if t > 0.0 => Ok(t),
        _ => Err(QapError::DegenerateScale(
            "no interior stationary proper time (zero dispersion or zero x0_final)".into(),
        )),
    }
}

fn run_particle(config: &RunConfig) -> Result<Value> {
    let scenario = config.particle_scenario()?;
    let section = config.particle.as_ref().expect("validated");
    let steps = section.tau_steps;
    match config.command() {
        Command::Classical => {
            let (start, end) = particle_end(&scenario);
            let t = stationary_proper_time(&start, &end, &scenario)?;
            let found = minimize_constant_lapse(&start, &end, &scenario, steps)?;
            let (tau, path) = straight_worldline(&start, &end, steps);
            let action = classical_action_lagrangian(&tau, &path, &vec![t; tau.len()], &scenario)?;
            Ok(json!({
                "proper_time": t,
                "proper_time_numeric": found.argmin,
                "action_at_proper_time": action,
                "action_min": found.value,
                "evaluations": found.evaluations,
            }))
        }
        Command::Phase => {
            let t = particle_proper_time(&scenario)?;
            let path = stationary_path(&scenario, t, steps);
            let c = phase_evolution(&path, &scenario, section.epsilon, section.tau)?;
            Ok(json!({
                "proper_time": t,
                "p0": path.p0,
                "tau": section.tau,
                "epsilon": c.epsilon,
                "chi0_re": c.chi0.re,
                "chi0_im": c.chi0.im,
                "chi1_re": c.chi1.re,
                "chi1_im": c.chi1.im,
                "chi2_re": c.chi2.re,
                "chi2_im": c.chi2.im,
            }))
        }
        Command::Action => {
            let t = particle_proper_time(&scenario)?;
            let path = stationary_path(&scenario, t, steps);
            let a = quantum_action_particle(&path, &scenario, section.epsilon)?;
            Ok(json!({
                "proper_time": t,
                "p0": path.p0,
                "lambda": a.lambda,
                "plane_wave_phase": a.plane_wave_phase,
                "constraint_residual": a.constraint_residual,
                "r_coefficient": a.r_coefficient,
                "r": a.r(),
            }))
        }
        Command::Stationary => {
            let st = stationary_particle(&scenario)?;
            Ok(json!({
                "t_star": st.t_star,
                "p0_star": st.p0_star,
                "lambda_star": st.lambda_star,
                "lambda_closed_form": st.lambda_closed_form,
                "degenerate_dispersion": st.degenerate_dispersion,
                "evaluations": st.evaluations,
            }))
        }
        Command::Spectrum | Command::Sweep => Err(QapError::validation("command", "not a single particle run")),
    }
}

fn run_string(config: &RunConfig) -> Result<Value> {
    let scenario = config.string_scenario()?;
    let section = config.string.as_ref().expect("validated");
    let occ = OccupationVector::new(config.occupations.clone());
    match config.command() {
        Command::Action => {
            let sol = stationary_x0_solve(&scenario)?;
            let spectrum = normal_modes(&scenario)?;
            let e = energy(&spectrum, &occ)? + com_energy(&scenario);
            Ok(json!({
                "lambda_x0": sol.lambda_star,
                "quadratic_value": sol.quadratic_value,
                "p0": sol.field.p0,
                "kkt_route": sol.route.as_str(),
                "system_size": sol.system_size,
                "pivot_ratio": sol.pivot_ratio,
                "energy": e,
                "lambda_xi": action_xi(e),
                "total_action": sol.lambda_star + action_xi(e),
                "effective_action": sol.lambda_star + e,
            }))
        }
        Command::Phase => {
            let sol = stationary_x0_solve(&scenario)?;
            let ph = string_phase_evolution(&scenario, &sol.field, section.epsilon, section.tau)?;
            let diag: Vec<f64> = (0..scenario.sigma_points).map(|j| ph.chi2[(j, j)].im).collect();
            Ok(json!({
                "tau": section.tau,
                "epsilon": ph.epsilon,
                "chi0_re": ph.chi0.re,
                "chi0_im": ph.chi0.im,
                "chi1_re": ph.chi1.iter().map(|c| c.re).collect::<Vec<_>>(),
                "chi1_im": ph.chi1.iter().map(|c| c.im).collect::<Vec<_>>(),
                "chi2_diagonal_im": diag,
            }))
        }
        Command::Spectrum => {
            let spectrum = normal_modes(&scenario)?;
            let modes: Vec<Value> = spectrum
                .modes
                .iter()
                .map(|m| {
                    json!({
                        "k": m.id.k,
                        "family": m.id.family.as_str(),
                        "direction": m.id.direction,
                        "omega": m.omega,
                        "nyquist": m.nyquist,
                    })
                })
                .collect();
            let mut out = json!({
                "frequencies": spectrum.frequencies,
                "modes": modes,
                "zero_modes": spectrum.zero_modes,
                "dim_transverse": spectrum.dim_transverse,
            });
            if !config.occupations.is_empty() {
                out["energy"] = json!(energy(&spectrum, &occ)? + com_energy(&scenario));
            }
            Ok(out)
        }
        Command::Stationary => {
            let r = find_stationary_n(&scenario, &occ, config.engine_options())?;
            let p = &r.provenance;
            let (pos, neg, zero) = r.hessian_signature;
            Ok(json!({
                "n1_star": r.n1_star,
                "n2_star": r.n2_star,
                "lambda_star": r.lambda_star,
                "lambda_x0": r.lambda_x0,
                "energy": r.energy,
                "w_n": r.w_n,
                "hessian_signature": [pos, neg, zero],
                "converged": r.converged,
                "gradient_norm": r.gradient_norm,
                "trace": r.trace,
                "provenance": {
                    "sigma_points": p.sigma_points,
                    "tau_steps": p.tau_steps,
                    "gamma": p.gamma,
                    "mode": p.mode.as_str(),
                    "iterations": p.iterations,
                    "action_evaluations": p.action_evaluations,
                    "gradient_tol": p.gradient_tol,
                    "fd_step": p.fd_step,
                    "kkt_route": p.kkt_route.as_str(),
                    "initial_scale": p.initial_scale,
                    "sign_adjudicated": p.sign_adjudicated,
                },
            }))
        }
        Command::Classical | Command::Sweep => Err(QapError::validation("command", "not a single string run")),
    }
}

/// Sorted map view used by the CSV writer.
pub(crate) fn flatten(prefix: &str, value: &Value, out: &mut BTreeMap<String, Value>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        other => {
            out.insert(prefix.to_string(), other.clone());
        }
    }
}
