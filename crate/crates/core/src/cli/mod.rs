//! Config-driven runs: parsing, experiment dispatch, CSV and plot-script
//! output, and run manifests.

pub mod config;
pub mod output;
mod validate;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

pub use config::{parse_config, Experiment, PulseSection, RunConfig, SweepSection, Unit};
pub use output::{
    emit_manifest, emit_plot_script, emit_sweep_csv, emit_timeseries_csv, format_g, parse_sweep_csv,
    parse_timeseries_csv, read_sweep_csv, read_timeseries_csv, sweep_csv, timeseries_csv, FigureKind, Manifest,
    SWEEP_HEADER, TIMESERIES_HEADER,
};
pub use validate::{run_validation, Check};

use crate::algebra::DensityMatrix;
use crate::dynamics::{
    integrate, run_until_stable, steady_state_direct, Method, StabilityCriterion, SteadyObservables, DIRECT_DIM_LIMIT,
};
use crate::error::{Error, Result};
use crate::experiments::{
    conversion_efficiency, run_amplitude_study, run_coupling_sweep, run_detuning_sweep, run_pulse_study, SweepSpec,
};
use crate::model::DriveSchedule;
use crate::units::{to_mhz, to_ns};

pub const EXIT_SUCCESS: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Process exit code for an error: 2 for bad input, 3 for numerical
/// failures, 1 for anything else (such as an unwritable output directory).
pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        return EXIT_NUMERICAL;
    }
    match e {
        Error::Io { .. } => EXIT_FAILURE,
        _ => EXIT_CONFIG,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Sweep,
    Steady,
    Pulse,
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
            Command::Steady => "steady",
            Command::Pulse => "pulse",
            Command::Validate => "validate",
        }
    }

    /// Experiment run when no config file is given.
    pub fn default_experiment(self) -> Option<Experiment> {
        match self {
            Command::Simulate => Some(Experiment::Simulate),
            Command::Sweep => Some(Experiment::DetuningSweep),
            Command::Steady => Some(Experiment::SteadyState),
            Command::Pulse => Some(Experiment::PulseStudy),
            Command::Validate => None,
        }
    }

    pub fn accepts(self, e: Experiment) -> bool {
        matches!(
            (self, e),
            (Command::Simulate, Experiment::Simulate | Experiment::AmplitudeStudy)
                | (Command::Sweep, Experiment::DetuningSweep | Experiment::CouplingSweep)
                | (Command::Steady, Experiment::SteadyState)
                | (Command::Pulse, Experiment::PulseStudy)
        )
    }
}

/// Command-line settings that take precedence over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub truncation: Option<usize>,
    pub method: Option<Method>,
}

pub fn resolve(command: Command, config_text: Option<&str>, overrides: &Overrides) -> Result<RunConfig> {
    let mut cfg = match config_text {
        Some(text) => parse_config(text)?,
        None => {
            let e = command
                .default_experiment()
                .ok_or_else(|| Error::config("--config", format!("`{}` takes no config", command.name())))?;
            RunConfig::defaults(e)
        }
    };
    if !command.accepts(cfg.experiment) {
        return Err(Error::config(
            "experiment",
            format!("`{}` cannot be run by the `{}` command", cfg.experiment.name(), command.name()),
        ));
    }
    if let Some(n) = overrides.truncation {
        cfg = cfg.with_truncation(n)?;
    }
    if let Some(m) = overrides.method {
        cfg = cfg.with_method(m);
    }
    if let Some(dir) = &overrides.out {
        cfg = cfg.with_output_dir(dir);
    }
    cfg.integrator.validate(cfg.params.space().total_dim()).map_err(|e| Error::config("integrator", e.to_string()))?;
    if !matches!(cfg.experiment, Experiment::Simulate | Experiment::PulseStudy)
        && cfg.schedule != DriveSchedule::continuous(cfg.params.drive_amp)
    {
        return Err(Error::config("schedule.kind", format!("`{}` needs a continuous drive", cfg.experiment.name())));
    }
    Ok(cfg)
}

/// Files written and one-line summaries of a finished run.
#[derive(Clone, Debug, Default)]
pub struct RunReport {
    pub outputs: Vec<PathBuf>,
    pub summary: Vec<String>,
}

struct Writer<'a> {
    dir: &'a Path,
    report: RunReport,
}

impl Writer<'_> {
    fn timeseries(&mut self, name: &str, ts: &crate::dynamics::TimeSeries) -> Result<()> {
        let path = self.dir.join(name);
        emit_timeseries_csv(ts, &path)?;
        let script = emit_plot_script(&path, "timeseries")?;
        self.report.outputs.extend([path, script]);
        Ok(())
    }
}

fn short(x: f64) -> String {
    format_g(x, 6)
}

fn steady_json(s: &SteadyObservables) -> serde_json::Value {
    json!({ "n_a": s.n_a, "n_b": s.n_b, "n_c": s.n_c, "P_1": s.p1, "P_2": s.p2 })
}

/// Runs the configured experiment, writing CSVs, plot scripts and
/// `manifest.json` into the output directory.
pub fn run(command: Command, cfg: &RunConfig) -> Result<RunReport> {
    let start = Instant::now();
    let dir = cfg.output_dir.as_path();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut w = Writer { dir, report: RunReport::default() };
    let p = &cfg.params;
    let results = match cfg.experiment {
        Experiment::Simulate => {
            let ts = integrate(&DensityMatrix::ground(&p.space()), p, &cfg.schedule, cfg.t_end, &cfg.integrator)?;
            w.timeseries("timeseries.csv", &ts)?;
            let last = ts.records.last().copied().unwrap_or_default();
            w.report.summary.push(format!(
                "t = {} ns: n_a = {}, n_b = {}, n_c = {}, P_1 = {}, P_2 = {}",
                short(to_ns(cfg.t_end)),
                short(last.n_a),
                short(last.n_b),
                short(last.n_c),
                short(last.p1),
                short(last.p2)
            ));
            json!({ "samples": ts.len(), "final": last, "diagnostics": ts.diagnostics })
        }
        Experiment::AmplitudeStudy => {
            let amps = cfg.amplitudes.clone().unwrap_or_else(crate::experiments::default_amplitudes);
            let study = run_amplitude_study(&amps, p, &cfg.integrator)?;
            let mut runs = Vec::new();
            for r in &study.runs {
                let name = format!("amplitude_{}MHz.csv", short(to_mhz(r.amp)));
                w.timeseries(&name, &r.run.series)?;
                w.report.summary.push(format!(
                    "|Ω|/2π = {} MHz: n_b = {}, converged = {}",
                    short(to_mhz(r.amp)),
                    short(r.run.steady.n_b),
                    r.run.converged
                ));
                runs.push(json!({
                    "amp_mhz": to_mhz(r.amp),
                    "file": name,
                    "plateau": steady_json(&r.run.steady),
                    "converged": r.run.converged,
                    "settling_time_ns": r.run.settling_time.map(to_ns),
                }));
            }
            json!({ "runs": runs, "ordered": study.is_ordered() })
        }
        Experiment::DetuningSweep | Experiment::CouplingSweep => {
            let section = cfg.sweep.clone().ok_or_else(|| Error::config("sweep", "missing section"))?;
            let spec = SweepSpec::new(section.parameter, section.values, p.clone()).with_integrator(cfg.integrator);
            let points = if cfg.experiment == Experiment::DetuningSweep {
                run_detuning_sweep(&spec)?
            } else {
                run_coupling_sweep(&spec)?
            };
            let path = dir.join("sweep.csv");
            emit_sweep_csv(&points, spec.parameter, &path)?;
            let script = emit_plot_script(&path, "efficiency")?;
            w.report.outputs.extend([path, script]);
            if let Some(best) = crate::experiments::argmax(&points) {
                w.report.summary.push(format!(
                    "max T = {} at {}",
                    short(best.t),
                    crate::experiments::format_swept_value(spec.parameter, best.swept_value)
                ));
            }
            let unconverged = points.iter().filter(|q| !q.converged).count();
            w.report.summary.push(format!("{} points, {unconverged} not converged", points.len()));
            let mut resolved = spec.points()?;
            resolved.sort_by(|a, b| a.0.total_cmp(&b.0));
            let per_point: Vec<_> = resolved
                .into_iter()
                .zip(&points)
                .map(|((_, params, schedule), result)| json!({ "params": params, "schedule": schedule, "result": result }))
                .collect();
            json!({ "parameter": spec.parameter, "swept_unit": format!("{:?}", config::sweep_unit(spec.parameter)), "points": per_point })
        }
        Experiment::PulseStudy => {
            let ps = cfg.pulse.clone().ok_or_else(|| Error::config("pulse", "missing section"))?;
            let runs = run_pulse_study(&ps.widths, &ps.intervals, p, &cfg.schedule, &cfg.integrator)?;
            let mut out = Vec::new();
            for r in &runs {
                let name = format!("pulse_tw{}ns_tau{}ns.csv", short(to_ns(r.t_w)), short(to_ns(r.tau)));
                w.timeseries(&name, &r.series)?;
                w.report.summary.push(format!(
                    "t_w = {} ns, τ = {} ns: max n_b = {}, peaks = {}",
                    short(to_ns(r.t_w)),
                    short(to_ns(r.tau)),
                    short(r.max_n_b),
                    r.peaks
                ));
                out.push(json!({
                    "t_w_ns": to_ns(r.t_w),
                    "tau_ns": to_ns(r.tau),
                    "n_pulses": r.n_pulses,
                    "file": name,
                    "max_n_b": r.max_n_b,
                    "max_n_c": r.max_n_c,
                    "peaks": r.peaks,
                }));
            }
            json!({ "runs": out, "peak_separation_fraction": crate::experiments::PEAK_SEPARATION_FRACTION })
        }
        Experiment::SteadyState => {
            let (method, steady, converged) = if p.space().total_dim() <= DIRECT_DIM_LIMIT {
                let rho = steady_state_direct(p, p.drive_amp)?;
                ("direct", SteadyObservables::from_state(&rho)?, true)
            } else {
                let crit = StabilityCriterion::for_params(p);
                let rho0 = DensityMatrix::ground(&p.space());
                let run = run_until_stable(&rho0, p, &cfg.schedule, &cfg.integrator, &crit)?;
                w.timeseries("steady_trajectory.csv", &run.series)?;
                ("trajectory", run.steady, run.converged)
            };
            let t = if p.drive_amp > 0.0 {
                Some(conversion_efficiency(steady.n_b.max(0.0), steady.n_c.max(0.0), p)?)
            } else {
                None
            };
            w.report.summary.push(format!(
                "{method}: n_a = {}, n_b = {}, P_1 = {}, T = {}",
                short(steady.n_a),
                short(steady.n_b),
                short(steady.p1),
                t.map(short).unwrap_or_else(|| "undefined".into())
            ));
            let value = json!({ "method": method, "steady": steady_json(&steady), "T": t, "converged": converged });
            let path = dir.join("steady_state.json");
            let text = serde_json::to_string_pretty(&value).expect("steady state serializes") + "\n";
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            w.report.outputs.push(path);
            value
        }
    };
    let manifest_path = dir.join("manifest.json");
    let mut outputs: Vec<String> = w.report.outputs.iter().map(|p| p.display().to_string()).collect();
    outputs.push(manifest_path.display().to_string());
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: command.name(),
        config: cfg,
        resolved_toml: cfg.to_toml(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        outputs,
        results,
    };
    emit_manifest(&manifest, &manifest_path)?;
    w.report.outputs.push(manifest_path);
    Ok(w.report)
}
