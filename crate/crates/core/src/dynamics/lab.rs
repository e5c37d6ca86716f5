//! Lab-frame integration.
//!
//! The bare energies are split off as a diagonal `D` and integrated exactly
//! (integrating-factor RK4), so the step only has to resolve the slow
//! couplings, the dissipation and the detuned part of the pump.

use num_complex::Complex64 as C64;

use super::generator::Generator;
use super::propagate::{record_sample, rehermitize};
use super::{event_times, IntegratorConfig, Method, ObservableSet, TimeSeries};
use crate::algebra::{CsrMatrix, DensityMatrix, Matrix, Operator};
use crate::error::{Error, Result};
use crate::model::{collapse_terms_with, DividerOperators, DividerParams, DriveSchedule, LabHamiltonian};

pub const LAB_DIM_LIMIT: usize = 256;

pub struct LabPropagator {
    gen: Generator,
    lab: LabHamiltonian,
    diag: Vec<f64>,
    schedule: DriveSchedule,
    cfg: IntegratorConfig,
    obs: ObservableSet,
    rho: DensityMatrix,
    t: f64,
    steps: usize,
    max_asym: f64,
    k: [Matrix; 4],
    tmp: Matrix,
    scratch: Matrix,
}

impl LabPropagator {
    pub fn new(rho0: &DensityMatrix, p: &DividerParams, schedule: &DriveSchedule, cfg: &IntegratorConfig) -> Result<Self> {
        p.validate()?;
        schedule.validate()?;
        let space = p.space();
        let n = space.total_dim();
        if rho0.space() != &space {
            return Err(Error::SpaceMismatch { left: rho0.space().dims().to_vec(), right: space.dims().to_vec() });
        }
        if n > LAB_DIM_LIMIT {
            return Err(Error::DimensionGuard { dim: n, limit: LAB_DIM_LIMIT });
        }
        if cfg.method != Method::Rk4 {
            return Err(Error::InvalidIntegrator(format!(
                "lab-frame integration supports only rk4, got {}",
                cfg.method.name()
            )));
        }
        cfg.validate(n)?;
        let ops = DividerOperators::new(&space)?;
        let lab = LabHamiltonian::with_operators(p, &ops)?;
        let terms = collapse_terms_with(p, &ops)?;
        let csr = lab.static_part.to_csr();
        let diag: Vec<f64> = csr.diagonal().iter().map(|z| z.re).collect();
        let off = CsrMatrix::from_triplets(n, csr.triplets().filter(|&(i, j, _)| i != j).collect());
        let rest = Operator::from_sparse(space.clone(), off)?;
        let gen = Generator::new(&rest, &[lab.a.clone(), lab.a_dag.clone()], &terms)?;
        let mut rho = rho0.clone();
        rho.hermitize();
        let z = || Matrix::zeros((n, n));
        Ok(Self {
            gen,
            lab,
            diag,
            schedule: *schedule,
            cfg: *cfg,
            obs: ObservableSet::new(&space)?,
            rho,
            t: 0.0,
            steps: 0,
            max_asym: 0.0,
            k: [z(), z(), z(), z()],
            tmp: z(),
            scratch: z(),
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.rho
    }

    /// Full lab-frame right-hand side at time `t` with pump envelope `env`.
    pub fn rhs(&self, t: f64, env: f64, rho: &Matrix) -> Matrix {
        let mut out = self.gen.apply_hermitian(rho, &self.coeffs(t, env));
        let n = self.diag.len();
        for i in 0..n {
            for j in 0..n {
                out[[i, j]] += C64::new(0.0, -(self.diag[i] - self.diag[j])) * rho[[i, j]];
            }
        }
        out
    }

    fn coeffs(&self, t: f64, env: f64) -> [C64; 2] {
        let c = self.lab.drive_coefficient(t, env);
        [c, c.conj()]
    }

    /// `X_ij ← e^{−i (d_i − d_j) h} X_ij`.
    fn free(&self, x: &mut Matrix, h: f64) {
        let n = self.diag.len();
        let ph: Vec<C64> = self.diag.iter().map(|&d| C64::from_polar(1.0, -d * h)).collect();
        for i in 0..n {
            for j in 0..n {
                x[[i, j]] *= ph[i] * ph[j].conj();
            }
        }
    }

    pub fn advance_to(&mut self, t_end: f64, series: &mut TimeSeries) -> Result<()> {
        if series.is_empty() {
            record_sample(&self.rho, self.t, &self.obs, self.cfg.positivity, series)?;
        }
        let boundaries = self.schedule.boundaries();
        let min_step = self.cfg.dt.min(self.cfg.sample_interval);
        for (event, is_sample) in event_times(self.t, t_end, self.cfg.sample_interval, &boundaries, min_step) {
            let env = self.schedule.segment_amplitude(self.t, event);
            let span = event - self.t;
            let n = ((span / self.cfg.dt) - 1e-9).ceil().max(1.0) as usize;
            let h = span / n as f64;
            for _ in 0..n {
                self.step(h, env);
                self.steps += 1;
                self.t += h;
                let asym = rehermitize(&mut self.rho, self.t)?;
                self.max_asym = self.max_asym.max(asym);
            }
            self.t = event;
            if is_sample {
                record_sample(&self.rho, self.t, &self.obs, self.cfg.positivity, series)?;
            }
        }
        Ok(())
    }

    fn nonlinear(&mut self, t: f64, env: f64, which: usize) {
        let coeffs = self.coeffs(t, env);
        self.gen.apply_hermitian_into(&self.tmp, &coeffs, &mut self.k[which], &mut self.scratch);
    }

    fn step(&mut self, h: f64, env: f64) {
        let t = self.t;
        let hc = |x: f64| C64::new(x, 0.0);
        // k1 = N(t, y)
        self.tmp.assign(self.rho.data());
        self.nonlinear(t, env, 0);
        // k2 = N(t + h/2, E(h/2)(y + h/2 k1))
        self.tmp.assign(self.rho.data());
        self.tmp.scaled_add(hc(h / 2.0), &self.k[0]);
        let mut tmp = std::mem::take(&mut self.tmp);
        self.free(&mut tmp, h / 2.0);
        self.tmp = tmp;
        self.nonlinear(t + h / 2.0, env, 1);
        // k3 = N(t + h/2, E(h/2) y + h/2 k2)
        let mut ey_half = self.rho.data().clone();
        self.free(&mut ey_half, h / 2.0);
        self.tmp.assign(&ey_half);
        self.tmp.scaled_add(hc(h / 2.0), &self.k[1]);
        self.nonlinear(t + h / 2.0, env, 2);
        // k4 = N(t + h, E(h/2)(E(h/2) y + h k3))
        self.tmp.assign(&ey_half);
        self.tmp.scaled_add(hc(h), &self.k[2]);
        let mut tmp = std::mem::take(&mut self.tmp);
        self.free(&mut tmp, h / 2.0);
        self.tmp = tmp;
        self.nonlinear(t + h, env, 3);
        // y' = E(h/2)[E(h/2)(y + h/6 k1) + h/3 (k2 + k3)] + h/6 k4
        let mut acc = self.rho.data().clone();
        acc.scaled_add(hc(h / 6.0), &self.k[0]);
        self.free(&mut acc, h / 2.0);
        acc.scaled_add(hc(h / 3.0), &self.k[1]);
        acc.scaled_add(hc(h / 3.0), &self.k[2]);
        self.free(&mut acc, h / 2.0);
        acc.scaled_add(hc(h / 6.0), &self.k[3]);
        *self.rho.data_mut() = acc;
    }

    pub fn finalize(&self, series: &mut TimeSeries) {
        series.diagnostics.steps = self.steps;
        series.diagnostics.max_step_asymmetry = self.max_asym;
    }
}

/// Evolves `rho0` under the lab-frame Hamiltonian with the pump oscillating
/// at `ω_a`. Only `rk4` is supported.
pub fn integrate_lab_frame(
    rho0: &DensityMatrix,
    p: &DividerParams,
    s: &DriveSchedule,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<TimeSeries> {
    let mut prop = LabPropagator::new(rho0, p, s, cfg)?;
    let mut series = TimeSeries::new();
    prop.advance_to(t_end, &mut series)?;
    prop.finalize(&mut series);
    Ok(series)
}
