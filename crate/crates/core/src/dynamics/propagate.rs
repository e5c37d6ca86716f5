use ndarray::Zip;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::generator::Generator;
use super::steady::{steady_state_from_trajectory, SteadyObservables};
use super::{event_times, IntegratorConfig, Method, ObservableSet, PositivityCheck, TimeSeries, POSITIVITY_LIMIT, TRACE_DRIFT_LIMIT};
use crate::algebra::{DensityMatrix, Matrix, ZERO};
use crate::algebra::hermitize_measured;
use crate::error::{Error, Result};
use crate::model::{collapse_terms_with, DividerOperators, DividerParams, DriveSchedule, LindbladTerm, RotatingHamiltonian};
use crate::oracle;

// Dormand-Prince 5(4) tableau.
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights minus embedded fourth-order weights
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// `out = y + a·x` in one pass.
fn combine(out: &mut Matrix, y: &Matrix, a: f64, x: &Matrix) {
    Zip::from(out).and(y).and(x).for_each(|o, &y, &x| *o = y + x * a);
}

/// Rotating-frame propagator. Holds the state between calls so a run can be
/// extended in chunks.
pub struct Propagator {
    gen: Generator,
    frozen: Vec<(f64, Generator)>,
    hamiltonian: RotatingHamiltonian,
    terms: Vec<LindbladTerm>,
    schedule: DriveSchedule,
    cfg: IntegratorConfig,
    obs: ObservableSet,
    rho: DensityMatrix,
    t: f64,
    h_adaptive: f64,
    /// Amplitude for which `k[0]` holds the derivative at the current state.
    fsal: Option<f64>,
    expm_cache: Vec<(f64, f64, Matrix)>,
    k: Vec<Matrix>,
    tmp: Matrix,
    scratch: Matrix,
    steps: usize,
    max_asym: f64,
}

impl Propagator {
    pub fn new(rho0: &DensityMatrix, p: &DividerParams, schedule: &DriveSchedule, cfg: &IntegratorConfig) -> Result<Self> {
        p.validate()?;
        schedule.validate()?;
        let space = p.space();
        if rho0.space() != &space {
            return Err(Error::SpaceMismatch { left: rho0.space().dims().to_vec(), right: space.dims().to_vec() });
        }
        cfg.validate(space.total_dim())?;
        let ops = DividerOperators::new(&space)?;
        let hamiltonian = RotatingHamiltonian::with_operators(p, &ops)?;
        let terms = collapse_terms_with(p, &ops)?;
        let gen = Generator::new(&hamiltonian.static_part, std::slice::from_ref(&hamiltonian.drive), &terms)?;
        let n = space.total_dim();
        let stages = match cfg.method {
            Method::Rk4 => 4,
            Method::Rk45 => 7,
            Method::Expm => 0,
        };
        let mut rho = rho0.clone();
        rho.hermitize();
        Ok(Self {
            gen,
            frozen: Vec::new(),
            hamiltonian,
            terms,
            schedule: *schedule,
            cfg: *cfg,
            obs: ObservableSet::new(&space)?,
            rho,
            t: 0.0,
            h_adaptive: cfg.dt,
            fsal: None,
            expm_cache: Vec::new(),
            k: (0..stages).map(|_| Matrix::zeros((n, n))).collect(),
            tmp: Matrix::zeros((n, n)),
            scratch: Matrix::zeros((n, n)),
            steps: 0,
            max_asym: 0.0,
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn generator(&self) -> &Generator {
        &self.gen
    }

    /// Integrates to `t_end`, appending samples to `series`. The first call
    /// records the initial state.
    pub fn advance_to(&mut self, t_end: f64, series: &mut TimeSeries) -> Result<()> {
        if series.is_empty() {
            self.sample(series)?;
        }
        let boundaries = self.schedule.boundaries();
        let min_step = self.cfg.dt.min(self.cfg.sample_interval);
        for (event, is_sample) in event_times(self.t, t_end, self.cfg.sample_interval, &boundaries, min_step) {
            let amp = self.schedule.segment_amplitude(self.t, event);
            match self.cfg.method {
                Method::Rk4 => self.rk4_segment(event, amp)?,
                Method::Rk45 => self.rk45_segment(event, amp)?,
                Method::Expm => self.expm_segment(event, amp)?,
            }
            self.t = event;
            if is_sample {
                self.sample(series)?;
            }
        }
        Ok(())
    }

    fn sample(&mut self, series: &mut TimeSeries) -> Result<()> {
        record_sample(&self.rho, self.t, &self.obs, self.cfg.positivity, series)
    }

    /// Copies step diagnostics into `series`.
    pub fn finalize(&self, series: &mut TimeSeries) {
        series.diagnostics.steps = self.steps;
        series.diagnostics.max_step_asymmetry = self.max_asym;
    }

    fn frozen_index(&mut self, amp: f64) -> usize {
        match self.frozen.iter().position(|(a, _)| *a == amp) {
            Some(i) => i,
            None => {
                let g = self.gen.frozen(&[C64::new(amp, 0.0)]);
                self.frozen.push((amp, g));
                self.frozen.len() - 1
            }
        }
    }

    fn finish_step(&mut self) -> Result<f64> {
        rehermitize(&mut self.rho, self.t)
    }

    fn rk4_segment(&mut self, t1: f64, amp: f64) -> Result<()> {
        let span = t1 - self.t;
        let n = ((span / self.cfg.dt) - 1e-9).ceil().max(1.0) as usize;
        let h = span / n as f64;
        let gi = self.frozen_index(amp);
        let gen = &self.frozen[gi].1;
        let coeffs: [C64; 0] = [];
        for _ in 0..n {
            let (k1, rest) = self.k.split_at_mut(1);
            let (k2, rest) = rest.split_at_mut(1);
            let (k3, k4) = rest.split_at_mut(1);
            let (k1, k2, k3, k4) = (&mut k1[0], &mut k2[0], &mut k3[0], &mut k4[0]);
            let y = self.rho.data();
            gen.apply_hermitian_into(y, &coeffs, k1, &mut self.scratch);
            combine(&mut self.tmp, y, h / 2.0, k1);
            gen.apply_hermitian_into(&self.tmp, &coeffs, k2, &mut self.scratch);
            combine(&mut self.tmp, y, h / 2.0, k2);
            gen.apply_hermitian_into(&self.tmp, &coeffs, k3, &mut self.scratch);
            combine(&mut self.tmp, y, h, k3);
            gen.apply_hermitian_into(&self.tmp, &coeffs, k4, &mut self.scratch);
            Zip::from(self.rho.data_mut()).and(&*k1).and(&*k2).and(&*k3).and(&*k4).for_each(|y, &a, &b, &c, &d| {
                *y += (a + d) * (h / 6.0) + (b + c) * (h / 3.0);
            });
            self.t += h;
            let asym = rehermitize(&mut self.rho, self.t)?;
            self.steps += 1;
            self.max_asym = self.max_asym.max(asym);
        }
        Ok(())
    }

    fn note_step(&mut self, asym: f64) {
        self.steps += 1;
        self.max_asym = self.max_asym.max(asym);
    }

    fn rk45_segment(&mut self, t1: f64, amp: f64) -> Result<()> {
        let gi = self.frozen_index(amp);
        let coeffs: [C64; 0] = [];
        let (atol, rtol) = (self.cfg.abs_tol, self.cfg.rel_tol);
        while self.t < t1 {
            let remaining = t1 - self.t;
            let h = self.h_adaptive.min(remaining);
            let gen = &self.frozen[gi].1;
            if self.fsal != Some(amp) {
                gen.apply_hermitian_into(self.rho.data(), &coeffs, &mut self.k[0], &mut self.scratch);
                self.fsal = Some(amp);
            }
            for s in 1..7 {
                let y = self.rho.data().as_slice().expect("standard layout");
                let out = self.tmp.as_slice_mut().expect("standard layout");
                out.copy_from_slice(y);
                for (j, &a) in DP_A[s].iter().enumerate().take(s) {
                    if a != 0.0 {
                        let kj = self.k[j].as_slice().expect("standard layout");
                        let f = h * a;
                        for (o, &x) in out.iter_mut().zip(kj) {
                            *o += x * f;
                        }
                    }
                }
                let (_, after) = self.k.split_at_mut(s);
                gen.apply_hermitian_into(&self.tmp, &coeffs, &mut after[0], &mut self.scratch);
            }
            // tmp holds the fifth-order solution and k[6] its derivative
            let y0 = self.rho.data().as_slice().expect("standard layout");
            let y5 = self.tmp.as_slice().expect("standard layout");
            let ks: Vec<&[C64]> = self.k.iter().map(|m| m.as_slice().expect("standard layout")).collect();
            let mut norm: f64 = 0.0;
            for idx in 0..y0.len() {
                let mut e = ZERO;
                for (j, &w) in DP_E.iter().enumerate() {
                    if w != 0.0 {
                        e += ks[j][idx] * w;
                    }
                }
                let e = (e * h).l1_norm();
                let sc = atol + rtol * y0[idx].l1_norm().max(y5[idx].l1_norm());
                norm = norm.max(e / sc);
            }
            if !norm.is_finite() {
                return Err(Error::IntegrationDiverged { time: self.t, trace_error: f64::NAN });
            }
            if norm <= 1.0 {
                std::mem::swap(self.rho.data_mut(), &mut self.tmp);
                self.k.swap(0, 6);
                self.t = if h >= remaining { t1 } else { self.t + h };
                let asym = self.finish_step()?;
                self.note_step(asym);
                let grow = if norm == 0.0 { 5.0 } else { (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0) };
                // only grow from a step that was not clipped by the segment end
                if h < remaining || grow < 1.0 {
                    self.h_adaptive = h * grow;
                }
            } else {
                self.h_adaptive = h * (0.9 * norm.powf(-0.2)).clamp(0.1, 1.0);
                if self.h_adaptive < 1e-9 * self.cfg.dt {
                    return Err(Error::IntegrationDiverged { time: self.t, trace_error: f64::NAN });
                }
            }
        }
        self.t = t1;
        Ok(())
    }

    fn expm_segment(&mut self, t1: f64, amp: f64) -> Result<()> {
        let h = t1 - self.t;
        let tol = 1e-9 * h;
        let pos = self.expm_cache.iter().position(|(ch, ca, _)| (ch - h).abs() <= tol && *ca == amp);
        let idx = match pos {
            Some(i) => i,
            None => {
                let lv = oracle::vectorized_generator(&self.hamiltonian.at(amp), &self.terms)?;
                self.expm_cache.push((h, amp, oracle::propagator(&lv, h)));
                self.expm_cache.len() - 1
            }
        };
        let next = oracle::apply_propagator(&self.expm_cache[idx].2, &self.rho)?;
        self.rho = next;
        self.t = t1;
        let asym = self.finish_step()?;
        self.note_step(asym);
        Ok(())
    }
}

/// Evolves `rho0` in the rotating frame, sampling observables every
/// `cfg.sample_interval` from `t = 0` to `t_end`.
pub fn integrate(
    rho0: &DensityMatrix,
    p: &DividerParams,
    s: &DriveSchedule,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<TimeSeries> {
    let mut prop = Propagator::new(rho0, p, s, cfg)?;
    let mut series = TimeSeries::new();
    prop.advance_to(t_end, &mut series)?;
    prop.finalize(&mut series);
    Ok(series)
}

/// Stability test over a trailing window: every observable must vary by
/// less than `tol` inside the last `window` seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityCriterion {
    pub window: f64,
    pub tol: f64,
    /// Give up (returning a non-converged run) past this time.
    pub t_max: f64,
}

impl StabilityCriterion {
    /// `window = max(10/γ_b, 10/κ_1)`, `tol = 1e-4`, `t_max = 8 · window`.
    pub fn for_params(p: &DividerParams) -> Self {
        let slow = p.gamma_b.min(p.kappa1);
        let window = if slow > 0.0 { 10.0 / slow } else { 2e-6 };
        Self { window, tol: 1e-4, t_max: 8.0 * window }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StableRun {
    pub series: TimeSeries,
    pub steady: SteadyObservables,
    pub converged: bool,
    /// Start of the first window that passed the stability test.
    pub settling_time: Option<f64>,
}

/// Integrates until the trailing-window stability test passes or
/// `criterion.t_max` is reached.
pub fn run_until_stable(
    rho0: &DensityMatrix,
    p: &DividerParams,
    s: &DriveSchedule,
    cfg: &IntegratorConfig,
    criterion: &StabilityCriterion,
) -> Result<StableRun> {
    let mut prop = Propagator::new(rho0, p, s, cfg)?;
    let mut series = TimeSeries::new();
    let stride = 0.25 * criterion.window;
    let mut target = (criterion.window + stride).max(s.last_edge() + criterion.window);
    loop {
        prop.advance_to(target, &mut series)?;
        let check = steady_state_from_trajectory(&series, criterion.window, criterion.tol)?;
        if check.converged || target >= criterion.t_max {
            prop.finalize(&mut series);
            let settling_time = check.converged.then_some(target - criterion.window);
            return Ok(StableRun { series, steady: check.values, converged: check.converged, settling_time });
        }
        target = (target + stride).min(criterion.t_max);
    }
}

/// Checks trace drift and positivity of `rho`, then appends its observables.
pub(super) fn record_sample(
    rho: &DensityMatrix,
    t: f64,
    obs: &ObservableSet,
    positivity: PositivityCheck,
    series: &mut TimeSeries,
) -> Result<()> {
    let rec = obs.record(rho.data());
    let trace_err = (rec.trace - 1.0).abs();
    let d = &mut series.diagnostics;
    d.max_trace_error = d.max_trace_error.max(trace_err);
    d.max_sample_asymmetry = d.max_sample_asymmetry.max(rho.hermiticity_error());
    if !(trace_err <= TRACE_DRIFT_LIMIT) {
        return Err(Error::IntegrationDiverged { time: t, trace_error: trace_err });
    }
    match positivity {
        PositivityCheck::Off => {}
        PositivityCheck::Cholesky => {
            if !rho.is_positive_within(POSITIVITY_LIMIT) {
                return Err(Error::PositivityViolation { time: t, min_eigenvalue: rho.min_eigenvalue() });
            }
        }
        PositivityCheck::Eigenvalues => {
            let min = rho.min_eigenvalue();
            d.min_eigenvalues.push(min);
            if min < -POSITIVITY_LIMIT {
                return Err(Error::PositivityViolation { time: t, min_eigenvalue: min });
            }
        }
    }
    series.push(t, rec);
    Ok(())
}

/// Re-Hermitises `rho` in place and returns the asymmetry it had.
pub(super) fn rehermitize(rho: &mut DensityMatrix, t: f64) -> Result<f64> {
    let asym = hermitize_measured(rho.data_mut());
    let tr: C64 = rho.data().diag().sum();
    if !asym.is_finite() || !tr.re.is_finite() {
        return Err(Error::IntegrationDiverged { time: t, trace_error: f64::NAN });
    }
    Ok(asym)
}
