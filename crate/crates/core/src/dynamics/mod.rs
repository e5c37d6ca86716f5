//! Time evolution under the Lindblad master equation, observable recording
//! and steady-state extraction.
//!
//! Times are in seconds and every frequency in rad/s (`ħ = 1`).

mod generator;
mod lab;
mod propagate;
mod steady;

pub use generator::{lindblad_rhs, Generator};
pub use lab::{integrate_lab_frame, LabPropagator, LAB_DIM_LIMIT};
pub use propagate::{integrate, run_until_stable, Propagator, StabilityCriterion, StableRun};
pub use steady::{
    steady_state_direct, steady_state_from_trajectory, steady_state_of_generator, SteadyObservables,
    TrajectorySteadyState, DIRECT_DIM_LIMIT,
};

use serde::{Deserialize, Serialize};

use crate::algebra::{HilbertSpace, Matrix};
use crate::error::{Error, Result};
use crate::model::DividerOperators;
use crate::units::ns;

/// `|Tr ρ − 1|` above which integration is reported as diverged.
pub const TRACE_DRIFT_LIMIT: f64 = 1e-5;
/// Eigenvalues below `-POSITIVITY_LIMIT` are reported as a violation.
pub const POSITIVITY_LIMIT: f64 = 1e-6;
/// Largest dimension for which the exact-exponential stepper is allowed.
pub const EXPM_DIM_LIMIT: usize = crate::oracle::EXACT_DIM_LIMIT;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Classic fourth-order Runge-Kutta on a fixed grid.
    Rk4,
    /// Dormand-Prince 5(4) with error control.
    Rk45,
    /// Exact exponential of the vectorised generator per constant-drive span.
    Expm,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Rk4 => "rk4",
            Method::Rk45 => "rk45",
            Method::Expm => "expm",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "rk4" => Some(Method::Rk4),
            "rk45" => Some(Method::Rk45),
            "expm" => Some(Method::Expm),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PositivityCheck {
    Off,
    /// Cholesky factorisation of `ρ + ε I` at each sample.
    Cholesky,
    /// Full eigendecomposition at each sample; the smallest eigenvalue is
    /// stored in the series diagnostics.
    Eigenvalues,
}

impl PositivityCheck {
    pub fn name(self) -> &'static str {
        match self {
            PositivityCheck::Off => "off",
            PositivityCheck::Cholesky => "cholesky",
            PositivityCheck::Eigenvalues => "eigenvalues",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "off" => Some(Self::Off),
            "cholesky" => Some(Self::Cholesky),
            "eigenvalues" => Some(Self::Eigenvalues),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Step for `rk4`, initial step for `rk45`.
    pub dt: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub sample_interval: f64,
    pub positivity: PositivityCheck,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk4,
            dt: ns(0.1),
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            sample_interval: ns(1.0),
            positivity: PositivityCheck::Cholesky,
        }
    }
}

impl IntegratorConfig {
    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_sample_interval(mut self, dt: f64) -> Self {
        self.sample_interval = dt;
        self
    }

    pub fn with_positivity(mut self, check: PositivityCheck) -> Self {
        self.positivity = check;
        self
    }

    pub fn with_tolerances(mut self, abs_tol: f64, rel_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let positive = [
            ("dt", self.dt),
            ("abs_tol", self.abs_tol),
            ("rel_tol", self.rel_tol),
            ("sample_interval", self.sample_interval),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidIntegrator(format!("{name} must be positive, got {v}")));
            }
        }
        if self.method == Method::Expm && dim > EXPM_DIM_LIMIT {
            return Err(Error::DimensionGuard { dim, limit: EXPM_DIM_LIMIT });
        }
        Ok(())
    }
}

/// Observables recorded at one sample time.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub n_a: f64,
    pub n_b: f64,
    pub n_c: f64,
    pub p1: f64,
    pub p2: f64,
    pub trace: f64,
    pub purity: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Observable {
    NA,
    NB,
    NC,
    P1,
    P2,
    Trace,
    Purity,
}

impl Observable {
    pub const ALL: [Observable; 7] = [Self::NA, Self::NB, Self::NC, Self::P1, Self::P2, Self::Trace, Self::Purity];
    pub const PHYSICAL: [Observable; 5] = [Self::NA, Self::NB, Self::NC, Self::P1, Self::P2];

    pub fn name(self) -> &'static str {
        match self {
            Self::NA => "n_a",
            Self::NB => "n_b",
            Self::NC => "n_c",
            Self::P1 => "P_1",
            Self::P2 => "P_2",
            Self::Trace => "trace",
            Self::Purity => "purity",
        }
    }

    pub fn of(self, r: &Record) -> f64 {
        match self {
            Self::NA => r.n_a,
            Self::NB => r.n_b,
            Self::NC => r.n_c,
            Self::P1 => r.p1,
            Self::P2 => r.p2,
            Self::Trace => r.trace,
            Self::Purity => r.purity,
        }
    }
}

/// Numerical health of a run, collected alongside the samples.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub steps: usize,
    /// Largest `max |ρ − ρ†|` seen right before each re-Hermitisation.
    pub max_step_asymmetry: f64,
    /// Largest `max |ρ − ρ†|` of a recorded state.
    pub max_sample_asymmetry: f64,
    pub max_trace_error: f64,
    /// Smallest eigenvalue per sample, when computed.
    pub min_eigenvalues: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub records: Vec<Record>,
    pub diagnostics: Diagnostics,
}

impl TimeSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, t: f64, r: Record) {
        debug_assert!(self.times.last().is_none_or(|&last| t > last), "times must increase");
        self.times.push(t);
        self.records.push(r);
    }

    pub fn column(&self, obs: Observable) -> Vec<f64> {
        self.records.iter().map(|r| obs.of(r)).collect()
    }

    pub fn last(&self) -> Option<(f64, &Record)> {
        self.times.last().copied().zip(self.records.last())
    }

    pub fn span(&self) -> f64 {
        match (self.times.first(), self.times.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// Value of `obs` at the sample nearest to `t`.
    pub fn at(&self, obs: Observable, t: f64) -> Option<f64> {
        let i = self.times.partition_point(|&x| x < t);
        let best = [i.checked_sub(1), Some(i)]
            .into_iter()
            .flatten()
            .filter(|&k| k < self.len())
            .min_by(|&a, &b| (self.times[a] - t).abs().total_cmp(&(self.times[b] - t).abs()))?;
        Some(obs.of(&self.records[best]))
    }
}

/// Diagonal observables of the divider space, evaluated from populations.
#[derive(Clone, Debug)]
pub(crate) struct ObservableSet {
    diags: [Vec<f64>; 5],
}

impl ObservableSet {
    pub(crate) fn new(space: &HilbertSpace) -> Result<Self> {
        Ok(Self { diags: DividerOperators::new(space)?.observable_diagonals() })
    }

    pub(crate) fn record(&self, rho: &Matrix) -> Record {
        let pops: Vec<f64> = rho.diag().iter().map(|z| z.re).collect();
        let dot = |d: &Vec<f64>| d.iter().zip(&pops).map(|(a, b)| a * b).sum::<f64>();
        Record {
            n_a: dot(&self.diags[0]),
            n_b: dot(&self.diags[1]),
            n_c: dot(&self.diags[2]),
            p1: dot(&self.diags[3]),
            p2: dot(&self.diags[4]),
            trace: pops.iter().sum(),
            purity: rho.iter().map(|z| z.norm_sqr()).sum(),
        }
    }
}

/// Splits `(t, t_end]` at sample times (multiples of `sample_interval`) and
/// at drive boundaries. Returns `(time, is_sample)` in increasing order.
pub(crate) fn event_times(t: f64, t_end: f64, sample_interval: f64, boundaries: &[f64], min_step: f64) -> Vec<(f64, bool)> {
    let eps = 1e-6 * min_step;
    let mut events: Vec<(f64, bool)> = Vec::new();
    let mut k = (t / sample_interval).floor() as i64 + 1;
    loop {
        let ts = k as f64 * sample_interval;
        if ts > t_end + eps {
            break;
        }
        if ts > t + eps {
            events.push((ts.min(t_end), true));
        }
        k += 1;
    }
    for &b in boundaries {
        if b > t + eps && b < t_end - eps {
            events.push((b, false));
        }
    }
    if events.last().is_none_or(|&(x, _)| x < t_end - eps) && t_end > t + eps {
        events.push((t_end, false));
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, bool)> = Vec::with_capacity(events.len());
    for (x, s) in events {
        match merged.last_mut() {
            Some(last) if (x - last.0).abs() <= eps => {
                if s {
                    *last = (x, true);
                }
            }
            _ => merged.push((x, s)),
        }
    }
    merged
}
