//! Figure-level studies: amplitude study, efficiency sweeps over detuning or
//! coupling, square-pulse studies and the conversion efficiency.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::DensityMatrix;
use crate::dynamics::{
    integrate, run_until_stable, IntegratorConfig, Observable, StabilityCriterion, StableRun, SteadyObservables,
    TimeSeries,
};
use crate::error::{Error, Result};
use crate::model::{DividerParams, DriveKind, DriveSchedule};
use crate::units::{mhz, ns, to_mhz};

/// A local maximum counts as a separate peak only if the signal drops by at
/// least this fraction of the global maximum between it and its neighbours.
pub const PEAK_SEPARATION_FRACTION: f64 = 0.2;

/// `T = |(γ_b n_b ω_b + γ_c n_c ω_c) / (ω_a |Ω|² / (2 γ_a))|`.
pub fn conversion_efficiency(n_b_s: f64, n_c_s: f64, p: &DividerParams) -> Result<f64> {
    if !(p.drive_amp > 0.0) {
        return Err(Error::UndefinedEfficiency);
    }
    if !(n_b_s >= 0.0 && n_c_s >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "steady photon numbers must be non-negative, got {n_b_s}, {n_c_s}"
        )));
    }
    let output = p.gamma_b * n_b_s * p.omega_b + p.gamma_c * n_c_s * p.omega_c;
    let input = p.omega_a * p.drive_amp * p.drive_amp / (2.0 * p.gamma_a);
    Ok((output / input).abs())
}

/// Quantities a sweep can vary. Values are in rad/s for frequencies and
/// seconds for times.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// `Δ^(2) = ω_a − ω_1 − ω_2`, moving `ω_{1,2,b,c}` together.
    Delta2,
    /// `ω_1 = ω_2 = ω_b = ω_c`.
    QubitFrequency,
    /// `λ_1 = λ_2`.
    Lambda,
    DriveAmp,
    G3,
    /// Pulse width of a square train.
    PulseWidth,
    /// Interval between pulses of a square train.
    PulseInterval,
}

impl SweepParameter {
    pub const ALL: [SweepParameter; 7] = [
        Self::Delta2,
        Self::QubitFrequency,
        Self::Lambda,
        Self::DriveAmp,
        Self::G3,
        Self::PulseWidth,
        Self::PulseInterval,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Delta2 => "delta2",
            Self::QubitFrequency => "omega_q",
            Self::Lambda => "lambda",
            Self::DriveAmp => "drive_amp",
            Self::G3 => "g3",
            Self::PulseWidth => "t_w",
            Self::PulseInterval => "tau",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }

    /// True for parameters of the drive schedule rather than the model.
    pub fn is_schedule(self) -> bool {
        matches!(self, Self::PulseWidth | Self::PulseInterval)
    }

    pub fn apply(self, p: &DividerParams, s: &DriveSchedule, value: f64) -> Result<(DividerParams, DriveSchedule)> {
        let mut p = p.clone();
        let mut s = *s;
        match self {
            Self::Delta2 => p = p.with_delta2(value),
            Self::QubitFrequency => p = p.with_qubit_frequency(value),
            Self::Lambda => p = p.with_lambda(value),
            Self::DriveAmp => {
                p = p.with_drive_amp(value);
                s.amp = value;
            }
            Self::G3 => p.g3 = value,
            Self::PulseWidth | Self::PulseInterval => match &mut s.kind {
                DriveKind::SquareTrain { t_w, tau, .. } => {
                    if self == Self::PulseWidth {
                        *t_w = value;
                    } else {
                        *tau = value;
                    }
                }
                DriveKind::Continuous => {
                    return Err(Error::Sweep(format!("{} needs a square-train schedule", self.name())));
                }
            },
        }
        p.validate()?;
        s.validate()?;
        Ok((p, s))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub base: DividerParams,
    pub schedule: DriveSchedule,
    pub integrator: IntegratorConfig,
}

impl SweepSpec {
    pub fn new(parameter: SweepParameter, values: Vec<f64>, base: DividerParams) -> Self {
        let schedule = DriveSchedule::continuous(base.drive_amp);
        Self { parameter, values, base, schedule, integrator: sweep_integrator() }
    }

    pub fn with_integrator(mut self, cfg: IntegratorConfig) -> Self {
        self.integrator = cfg;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Sweep("no sweep values".into()));
        }
        if let Some(v) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Sweep(format!("non-finite sweep value {v}")));
        }
        if self.parameter.is_schedule() {
            return Err(Error::Sweep(format!(
                "{} changes the pulse train; efficiency sweeps need a continuous drive",
                self.parameter.name()
            )));
        }
        self.base.validate()?;
        self.schedule.validate()
    }

    /// Parameters and schedule of every point, in sweep order.
    pub fn points(&self) -> Result<Vec<(f64, DividerParams, DriveSchedule)>> {
        self.values
            .iter()
            .map(|&v| self.parameter.apply(&self.base, &self.schedule, v).map(|(p, s)| (v, p, s)))
            .collect()
    }
}

/// Adaptive stepping with tolerances far below the stability threshold and
/// 2 ns samples.
pub fn sweep_integrator() -> IntegratorConfig {
    IntegratorConfig::default()
        .with_method(crate::dynamics::Method::Rk45)
        .with_tolerances(1e-8, 1e-6)
        .with_sample_interval(ns(2.0))
}

/// `Δ^(2)/2π` from −80 to 80 MHz in 41 points, in rad/s.
pub fn default_detuning_grid() -> Vec<f64> {
    (0..41).map(|k| mhz(-80.0 + 4.0 * k as f64)).collect()
}

/// `λ/2π` from 0 to 10 MHz in 41 points, in rad/s.
pub fn default_coupling_grid() -> Vec<f64> {
    (0..41).map(|k| mhz(0.25 * k as f64)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyPoint {
    pub swept_value: f64,
    pub n_b_s: f64,
    pub n_c_s: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub converged: bool,
    /// Start of the first stable window, when one was found.
    pub settling_time: Option<f64>,
}

/// Steady state and efficiency of one parameter point, integrated from the
/// ground state until the stability detector fires.
pub fn efficiency_point(
    swept_value: f64,
    p: &DividerParams,
    s: &DriveSchedule,
    cfg: &IntegratorConfig,
) -> Result<EfficiencyPoint> {
    let run = run_until_stable(&DensityMatrix::ground(&p.space()), p, s, cfg, &StabilityCriterion::for_params(p))?;
    let n_b_s = run.steady.n_b.max(0.0);
    let n_c_s = run.steady.n_c.max(0.0);
    Ok(EfficiencyPoint {
        swept_value,
        n_b_s,
        n_c_s,
        t: conversion_efficiency(n_b_s, n_c_s, p)?,
        converged: run.converged,
        settling_time: run.settling_time,
    })
}

/// Runs every point of `spec` in parallel and returns them sorted by swept
/// value.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<EfficiencyPoint>> {
    spec.validate()?;
    let points = spec.points()?;
    let mut out = points
        .par_iter()
        .map(|(v, p, s)| efficiency_point(*v, p, s, &spec.integrator))
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.swept_value.total_cmp(&b.swept_value));
    Ok(out)
}

pub fn run_detuning_sweep(spec: &SweepSpec) -> Result<Vec<EfficiencyPoint>> {
    if !matches!(spec.parameter, SweepParameter::Delta2 | SweepParameter::QubitFrequency) {
        return Err(Error::Sweep(format!("detuning sweep cannot vary {}", spec.parameter.name())));
    }
    run_sweep(spec)
}

pub fn run_coupling_sweep(spec: &SweepSpec) -> Result<Vec<EfficiencyPoint>> {
    if spec.parameter != SweepParameter::Lambda {
        return Err(Error::Sweep(format!("coupling sweep cannot vary {}", spec.parameter.name())));
    }
    run_sweep(spec)
}

/// Indices of strict interior local maxima of `ys`.
pub fn local_maxima(ys: &[f64]) -> Vec<usize> {
    (1..ys.len().saturating_sub(1)).filter(|&i| ys[i] > ys[i - 1] && ys[i] > ys[i + 1]).collect()
}

/// Converged point with the largest efficiency.
pub fn argmax(points: &[EfficiencyPoint]) -> Option<&EfficiencyPoint> {
    points.iter().filter(|p| p.converged).max_by(|a, b| a.t.total_cmp(&b.t))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeRun {
    pub amp: f64,
    pub run: StableRun,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeStudy {
    pub runs: Vec<AmplitudeRun>,
}

impl AmplitudeStudy {
    pub fn plateaus(&self) -> Vec<(f64, SteadyObservables)> {
        self.runs.iter().map(|r| (r.amp, r.run.steady)).collect()
    }

    /// True when, sorted by amplitude, every plateau observable is strictly
    /// increasing.
    pub fn is_ordered(&self) -> bool {
        let mut plateaus = self.plateaus();
        plateaus.sort_by(|a, b| a.0.total_cmp(&b.0));
        plateaus.windows(2).all(|w| Observable::PHYSICAL.iter().all(|&o| w[1].1.get(o) > w[0].1.get(o)))
    }
}

/// `|Ω|/2π ∈ {2, 3, 4} MHz`, in rad/s.
pub fn default_amplitudes() -> Vec<f64> {
    vec![mhz(2.0), mhz(3.0), mhz(4.0)]
}

/// One continuous-drive trajectory per amplitude, each run until stable.
pub fn run_amplitude_study(amps: &[f64], base: &DividerParams, cfg: &IntegratorConfig) -> Result<AmplitudeStudy> {
    if amps.is_empty() {
        return Err(Error::Sweep("no amplitudes".into()));
    }
    let runs = amps
        .par_iter()
        .map(|&amp| {
            let p = base.clone().with_drive_amp(amp);
            let rho0 = DensityMatrix::ground(&p.space());
            let crit = StabilityCriterion::for_params(&p);
            run_until_stable(&rho0, &p, &DriveSchedule::continuous(amp), cfg, &crit).map(|run| AmplitudeRun { amp, run })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AmplitudeStudy { runs })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseRun {
    pub t_w: f64,
    pub tau: f64,
    pub n_pulses: usize,
    pub series: TimeSeries,
    pub max_n_b: f64,
    pub max_n_c: f64,
    /// Peaks of `n_b(t)` at [`PEAK_SEPARATION_FRACTION`].
    pub peaks: usize,
}

/// Time simulated after the last pulse edge: three `b`-resonator lifetimes.
pub fn pulse_tail(p: &DividerParams) -> f64 {
    if p.gamma_b > 0.0 {
        3.0 / p.gamma_b
    } else {
        ns(500.0)
    }
}

/// One trajectory per `(t_w, τ)` pair, sharing the pulse count and amplitude
/// of `template`.
pub fn run_pulse_study(
    widths: &[f64],
    intervals: &[f64],
    base: &DividerParams,
    template: &DriveSchedule,
    cfg: &IntegratorConfig,
) -> Result<Vec<PulseRun>> {
    let n_pulses = match template.kind {
        DriveKind::SquareTrain { n_pulses, .. } => n_pulses,
        DriveKind::Continuous => return Err(Error::InvalidSchedule("pulse study needs a square-train template".into())),
    };
    if widths.is_empty() || intervals.is_empty() {
        return Err(Error::Sweep("pulse study needs at least one width and one interval".into()));
    }
    let combos: Vec<(f64, f64)> = widths.iter().flat_map(|&w| intervals.iter().map(move |&t| (w, t))).collect();
    combos
        .par_iter()
        .map(|&(t_w, tau)| {
            let s = DriveSchedule::square_train(template.amp, t_w, tau, n_pulses);
            s.validate()?;
            let p = base.clone().with_drive_amp(template.amp);
            let t_end = s.last_edge() + pulse_tail(&p);
            let series = integrate(&DensityMatrix::ground(&p.space()), &p, &s, t_end, cfg)?;
            let nb = series.column(Observable::NB);
            let nc = series.column(Observable::NC);
            let max_n_b = nb.iter().copied().fold(0.0, f64::max);
            let max_n_c = nc.iter().copied().fold(0.0, f64::max);
            let peaks = count_peaks(&nb, PEAK_SEPARATION_FRACTION);
            Ok(PulseRun { t_w, tau, n_pulses, series, max_n_b, max_n_c, peaks })
        })
        .collect()
}

/// Counts peaks separated by drops of at least `fraction` of the global
/// maximum. A rise of the same size is needed before the next peak can
/// start, so ripples smaller than the threshold never add peaks.
pub fn count_peaks(ys: &[f64], fraction: f64) -> usize {
    let Some(&first) = ys.first() else { return 0 };
    let global = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let delta = fraction * (global - ys.iter().copied().fold(f64::INFINITY, f64::min));
    if !(delta > 0.0) {
        return 0;
    }
    let mut peaks = 0;
    let mut rising = false;
    let mut extreme = first;
    for &y in &ys[1..] {
        if rising {
            if y > extreme {
                extreme = y;
            } else if extreme - y >= delta {
                peaks += 1;
                rising = false;
                extreme = y;
            }
        } else if y < extreme {
            extreme = y;
        } else if y - extreme >= delta {
            rising = true;
            extreme = y;
        }
    }
    if rising {
        peaks += 1;
    }
    peaks
}

/// Human-readable label for a swept value.
pub fn format_swept_value(parameter: SweepParameter, v: f64) -> String {
    match parameter {
        SweepParameter::PulseWidth | SweepParameter::PulseInterval => format!("{} ns", v * 1e9),
        SweepParameter::QubitFrequency => format!("{} GHz", to_mhz(v) / 1e3),
        _ => format!("{} MHz", to_mhz(v)),
    }
}
