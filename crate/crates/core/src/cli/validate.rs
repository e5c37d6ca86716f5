use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::algebra::{embed, local_annihilator, DensityMatrix, HilbertSpace, Matrix, Operator};
use crate::dynamics::{
    integrate, integrate_lab_frame, lindblad_rhs, steady_state_direct, IntegratorConfig, Method, Observable,
};
use crate::error::Result;
use crate::model::{
    build_collapse_terms, build_lab_hamiltonian, build_rotating_hamiltonian, frame_generator, frame_unitary,
    DividerParams, DriveSchedule, LindbladTerm, Truncation,
};
use crate::oracle::decoupled_cavity_exact;
use crate::units::{mhz, ns};

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub error: f64,
    pub tolerance: f64,
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {} (error {:.3e}, tolerance {:.1e})", self.name, self.error, self.tolerance)
    }
}

fn check(name: &'static str, error: Result<f64>, tolerance: f64) -> Check {
    match error {
        Ok(e) => Check { name, passed: e <= tolerance, error: e, tolerance },
        Err(_) => Check { name, passed: false, error: f64::INFINITY, tolerance },
    }
}

fn max_abs(m: &Matrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn small(n: usize) -> DividerParams {
    DividerParams::fig2().with_truncation(n)
}

/// Hermitian, unit-trace matrix with deterministic pseudo-random entries.
fn scrambled_state(space: &HilbertSpace, seed: f64) -> Result<DensityMatrix> {
    let n = space.total_dim();
    let mut m = Matrix::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let k = (i * n + j) as f64 + seed;
            let z = C64::new((k * 0.7548776662).sin(), if i == j { 0.0 } else { (k * 0.5698402910).cos() });
            m[[i, j]] = z;
            m[[j, i]] = z.conj();
        }
    }
    let tr: C64 = (0..n).map(|i| m[[i, i]]).sum();
    m.mapv_inplace(|z| z / tr.re);
    DensityMatrix::from_raw(space.clone(), m)
}

fn vacuum_is_dark() -> Result<f64> {
    let p = small(3);
    let h = build_rotating_hamiltonian(&p, 0.0)?;
    let out = lindblad_rhs(&DensityMatrix::ground(&p.space()), &h, &build_collapse_terms(&p)?)?;
    Ok(max_abs(&out))
}

fn single_mode_decay() -> Result<f64> {
    let gamma = mhz(1.0);
    let s = HilbertSpace::new(vec![3])?;
    let a = embed(&s, 0, &local_annihilator(3)?)?;
    let terms = vec![LindbladTerm::new("a", a, gamma)?];
    let rho = DensityMatrix::basis_state(&s, &[1])?;
    let d = lindblad_rhs(&rho, &Operator::zeros(&s), &terms)?;
    let dn = d[[1, 1]].re + 2.0 * d[[2, 2]].re;
    Ok(((dn + gamma) / gamma).abs())
}

fn trace_preservation() -> Result<f64> {
    let p = small(2);
    let h = build_rotating_hamiltonian(&p, p.drive_amp)?;
    let terms = build_collapse_terms(&p)?;
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let rho = scrambled_state(&p.space(), seed as f64)?;
        let d = lindblad_rhs(&rho, &h, &terms)?;
        let tr: C64 = (0..d.nrows()).map(|i| d[[i, i]]).sum();
        worst = worst.max(tr.norm() / max_abs(&d));
    }
    Ok(worst)
}

fn frame_identity() -> Result<f64> {
    let p = small(3);
    let hr = build_rotating_hamiltonian(&p, p.drive_amp)?;
    let g = frame_generator(&p)?;
    let mut worst = 0.0f64;
    for k in 0..5 {
        let t = (k as f64 * 0.618_033_988_75).fract() * 1e-6;
        let u = frame_unitary(&p, t)?;
        let he = build_lab_hamiltonian(&p, t)?;
        let lhs = u.adjoint().mul(&he)?.mul(&u)?.sub(&g.scale(C64::new(p.omega_a, 0.0)))?;
        worst = worst.max(lhs.max_abs_diff(&hr)? / he.max_abs());
    }
    Ok(worst)
}

fn max_observable_gap(a: &crate::dynamics::TimeSeries, b: &crate::dynamics::TimeSeries) -> f64 {
    Observable::PHYSICAL
        .iter()
        .flat_map(|&o| a.column(o).into_iter().zip(b.column(o)).map(|(x, y)| (x - y).abs()))
        .fold(if a.len() == b.len() { 0.0 } else { f64::INFINITY }, f64::max)
}

fn rk4_matches_exact() -> Result<f64> {
    let p = small(2);
    let rho0 = DensityMatrix::ground(&p.space());
    let s = DriveSchedule::continuous(p.drive_amp);
    let cfg = IntegratorConfig::default().with_sample_interval(ns(5.0));
    let rk4 = integrate(&rho0, &p, &s, ns(100.0), &cfg)?;
    let exact = integrate(&rho0, &p, &s, ns(100.0), &cfg.with_method(Method::Expm))?;
    Ok(max_observable_gap(&rk4, &exact))
}

fn lab_matches_rotating() -> Result<f64> {
    let p = small(2);
    let rho0 = DensityMatrix::ground(&p.space());
    let s = DriveSchedule::continuous(p.drive_amp);
    let cfg = IntegratorConfig::default().with_dt(ns(0.01)).with_sample_interval(ns(2.0));
    let rot = integrate(&rho0, &p, &s, ns(40.0), &cfg)?;
    let lab = integrate_lab_frame(&rho0, &p, &s, ns(40.0), &cfg)?;
    Ok(max_observable_gap(&rot, &lab))
}

fn decoupled_cavity() -> Result<f64> {
    let mut p = DividerParams::fig2().with_truncation(Truncation { a: 14, b: 2, c: 2 });
    p.g3 = 0.0;
    p.lambda1 = 0.0;
    p.lambda2 = 0.0;
    let s = DriveSchedule::continuous(p.drive_amp);
    let cfg = IntegratorConfig::default().with_sample_interval(ns(10.0));
    let ts = integrate(&DensityMatrix::ground(&p.space()), &p, &s, ns(200.0), &cfg)?;
    Ok(ts
        .times
        .iter()
        .zip(ts.column(Observable::NA))
        .map(|(&t, n)| (n - decoupled_cavity_exact(&p, p.drive_amp, t)).abs())
        .fold(0.0, f64::max))
}

fn undriven_steady_state() -> Result<f64> {
    let p = small(2);
    let rho = steady_state_direct(&p, 0.0)?;
    Ok(rho.max_abs_diff(&DensityMatrix::ground(&p.space())))
}

/// Fast self-checks of the generator, integrators and steady-state solver
/// against closed forms and the exact propagator.
pub fn run_validation() -> Vec<Check> {
    vec![
        check("vacuum is a fixed point without drive", vacuum_is_dark(), 1e-6),
        check("single-mode decay rate", single_mode_decay(), 1e-12),
        check("generator preserves trace", trace_preservation(), 1e-12),
        check("frame change maps lab to rotating Hamiltonian", frame_identity(), 1e-10),
        check("rk4 agrees with the exact propagator", rk4_matches_exact(), 1e-7),
        check("lab frame agrees with rotating frame", lab_matches_rotating(), 1e-4),
        check("decoupled cavity follows the closed form", decoupled_cavity(), 1e-6),
        check("undriven steady state is the ground state", undriven_steady_state(), 1e-9),
    ]
}
