//! Steady states, from a trajectory's tail or from the kernel of the
//! generator.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::generator::Generator;
use super::{Observable, ObservableSet, Record, TimeSeries};
use crate::algebra::{from_nalgebra, to_nalgebra, DensityMatrix, Matrix, I, ONE, ZERO};
use crate::error::{Error, Result};
use crate::model::{build_collapse_terms, DividerParams, RotatingHamiltonian};

pub const DIRECT_DIM_LIMIT: usize = 128;

const GMRES_RESTART: usize = 80;
const GMRES_MAX_ITER: usize = 4000;
const GMRES_TOL: f64 = 1e-13;
/// Accepted `max |L(ρ)|` relative to the generator scale.
const RESIDUAL_LIMIT: f64 = 1e-9;
/// Two solves with different trace anchors must agree to this.
const UNIQUENESS_LIMIT: f64 = 1e-7;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SteadyObservables {
    pub n_a: f64,
    pub n_b: f64,
    pub n_c: f64,
    pub p1: f64,
    pub p2: f64,
}

impl SteadyObservables {
    pub fn from_record(r: &Record) -> Self {
        Self { n_a: r.n_a, n_b: r.n_b, n_c: r.n_c, p1: r.p1, p2: r.p2 }
    }

    pub fn from_state(rho: &DensityMatrix) -> Result<Self> {
        Ok(Self::from_record(&ObservableSet::new(rho.space())?.record(rho.data())))
    }

    pub fn get(&self, obs: Observable) -> f64 {
        match obs {
            Observable::NA => self.n_a,
            Observable::NB => self.n_b,
            Observable::NC => self.n_c,
            Observable::P1 => self.p1,
            Observable::P2 => self.p2,
            Observable::Trace => 1.0,
            Observable::Purity => f64::NAN,
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        Observable::PHYSICAL.iter().map(|&o| (self.get(o) - other.get(o)).abs()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySteadyState {
    /// Means over the trailing window.
    pub values: SteadyObservables,
    pub converged: bool,
    /// Largest `max − min` of any observable inside the window.
    pub spread: f64,
}

/// Averages the last `window` seconds of `series`; converged when every
/// observable varies by less than `tol` over that window.
pub fn steady_state_from_trajectory(series: &TimeSeries, window: f64, tol: f64) -> Result<TrajectorySteadyState> {
    let span = series.span();
    if series.is_empty() || !(window > 0.0) || window > span * (1.0 + 1e-12) {
        return Err(Error::WindowTooLong { window, span });
    }
    let (t_end, _) = series.last().expect("non-empty");
    let start = t_end - window * (1.0 + 1e-12);
    let idx: Vec<usize> = (0..series.len()).filter(|&i| series.times[i] >= start).collect();
    let mut means = [0.0; 5];
    let mut spread: f64 = 0.0;
    for (k, &obs) in Observable::PHYSICAL.iter().enumerate() {
        let vals: Vec<f64> = idx.iter().map(|&i| obs.of(&series.records[i])).collect();
        let (lo, hi) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        spread = spread.max(hi - lo);
        means[k] = vals.iter().sum::<f64>() / vals.len() as f64;
    }
    let values = SteadyObservables { n_a: means[0], n_b: means[1], n_c: means[2], p1: means[3], p2: means[4] };
    Ok(TrajectorySteadyState { values, converged: spread < tol, spread })
}

/// Stationary state of the rotating-frame generator at constant pump `amp`.
pub fn steady_state_direct(p: &DividerParams, amp: f64) -> Result<DensityMatrix> {
    p.validate()?;
    let space = p.space();
    let n = space.total_dim();
    if n > DIRECT_DIM_LIMIT {
        return Err(Error::DimensionGuard { dim: n, limit: DIRECT_DIM_LIMIT });
    }
    let h = RotatingHamiltonian::new(p)?;
    let gen = Generator::new(&h.static_part, std::slice::from_ref(&h.drive), &build_collapse_terms(p)?)?;
    steady_state_of_generator(&gen, &[C64::new(amp, 0.0)])
}

/// Unit-trace kernel element of `gen`. Fails with
/// [`Error::DegenerateSteadyState`] when the kernel is not one-dimensional.
pub fn steady_state_of_generator(gen: &Generator, coeffs: &[C64]) -> Result<DensityMatrix> {
    let n = gen.dim();
    if n > DIRECT_DIM_LIMIT {
        return Err(Error::DimensionGuard { dim: n, limit: DIRECT_DIM_LIMIT });
    }
    let scale = gen.norm_estimate(coeffs).max(f64::MIN_POSITIVE);
    let precond = SylvesterPreconditioner::new(gen, coeffs, scale);
    let solve = |anchor: &Matrix| -> Matrix {
        let op = |x: &Matrix| {
            let mut y = gen.apply(x, coeffs);
            y.mapv_inplace(|z| z / scale);
            let tr: C64 = x.diag().sum();
            y.scaled_add(tr, anchor);
            y
        };
        gmres(&op, &|r: &Matrix| precond.apply(r), anchor)
    };
    let mut anchor = Matrix::zeros((n, n));
    for i in 0..n {
        anchor[[i, i]] = C64::new(1.0 / n as f64, 0.0);
    }
    let x1 = solve(&anchor);
    let mut anchor2 = Matrix::zeros((n, n));
    anchor2[[0, 0]] = ONE;
    let x2 = solve(&anchor2);

    let residual = |x: &Matrix| gen.apply(x, coeffs).iter().map(|z| z.norm()).fold(0.0, f64::max) / scale;
    let r = residual(&x1).max(residual(&x2));
    let disagreement = (&x1 - &x2).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tr: C64 = x1.diag().sum();
    if !(r <= RESIDUAL_LIMIT) || !(disagreement <= UNIQUENESS_LIMIT) || !((tr - ONE).norm() <= 1e-8) {
        return Err(Error::DegenerateSteadyState { residual: r.max(disagreement) });
    }
    let mut rho = DensityMatrix::from_raw(gen.space().clone(), x1)?;
    rho.hermitize();
    Ok(rho)
}

/// Exact inverse of `X ↦ −i(K X − X K†)/s − σ X` through the Schur form
/// `K = Q T Q*`.
struct SylvesterPreconditioner {
    q: DMatrix<C64>,
    q_adj: DMatrix<C64>,
    t: DMatrix<C64>,
    sigma: f64,
}

impl SylvesterPreconditioner {
    fn new(gen: &Generator, coeffs: &[C64], scale: f64) -> Self {
        let k = gen.effective_hamiltonian(coeffs).mapv(|z| z / scale);
        let (q, t) = nalgebra::linalg::Schur::new(to_nalgebra(&k)).unpack();
        let min_rate = gen.rates().filter(|&r| r > 0.0).fold(f64::INFINITY, f64::min);
        let sigma = if min_rate.is_finite() { 0.5 * min_rate / scale } else { 1e-3 };
        let q_adj = q.adjoint();
        Self { q, q_adj, t, sigma }
    }

    fn apply(&self, r: &Matrix) -> Matrix {
        let n = self.t.nrows();
        let rp = &self.q_adj * to_nalgebra(r) * &self.q;
        let mut x = DMatrix::<C64>::zeros(n, n);
        let mut rhs = vec![ZERO; n];
        for j in (0..n).rev() {
            for (i, slot) in rhs.iter_mut().enumerate() {
                let mut acc = I * rp[(i, j)];
                for k in j + 1..n {
                    acc += self.t[(j, k)].conj() * x[(i, k)];
                }
                *slot = acc;
            }
            let shift = self.t[(j, j)].conj() + I * self.sigma;
            for i in (0..n).rev() {
                let mut acc = rhs[i];
                for k in i + 1..n {
                    acc -= self.t[(i, k)] * x[(k, j)];
                }
                x[(i, j)] = acc / (self.t[(i, i)] - shift);
            }
        }
        from_nalgebra(&(&self.q * x * &self.q_adj))
    }
}

fn dot(a: &Matrix, b: &Matrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &Matrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Right-preconditioned restarted GMRES for `A x = b`, starting from zero.
fn gmres(a: &dyn Fn(&Matrix) -> Matrix, m_inv: &dyn Fn(&Matrix) -> Matrix, b: &Matrix) -> Matrix {
    let b_norm = norm(b);
    let mut x = Matrix::zeros(b.raw_dim());
    if b_norm == 0.0 {
        return x;
    }
    let mut iters = 0;
    while iters < GMRES_MAX_ITER {
        let mut r = b - &a(&x);
        let beta = norm(&r);
        if beta <= GMRES_TOL * b_norm {
            break;
        }
        r.mapv_inplace(|z| z / beta);
        let mut basis = vec![r];
        let mut hess: Vec<Vec<C64>> = Vec::new();
        let mut rotations: Vec<(C64, C64)> = Vec::new();
        let mut g = vec![C64::new(beta, 0.0)];
        let mut inner = 0;
        while inner < GMRES_RESTART && iters < GMRES_MAX_ITER {
            let mut w = a(&m_inv(&basis[inner]));
            let mut col = vec![ZERO; inner + 2];
            // modified Gram-Schmidt, applied twice
            for _ in 0..2 {
                for (k, v) in basis.iter().enumerate() {
                    let h = dot(v, &w);
                    col[k] += h;
                    w.scaled_add(-h, v);
                }
            }
            let wn = norm(&w);
            col[inner + 1] = C64::new(wn, 0.0);
            for (k, &(c, s)) in rotations.iter().enumerate() {
                let (h0, h1) = (col[k], col[k + 1]);
                col[k] = c.conj() * h0 + s.conj() * h1;
                col[k + 1] = -s * h0 + c * h1;
            }
            let (h0, h1) = (col[inner], col[inner + 1]);
            let d = (h0.norm_sqr() + h1.norm_sqr()).sqrt();
            let (c, s) = if d == 0.0 { (ONE, ZERO) } else { (h0 / d, h1 / d) };
            col[inner] = C64::new(d, 0.0);
            col[inner + 1] = ZERO;
            let gk = g[inner];
            g[inner] = c.conj() * gk;
            g.push(-s * gk);
            rotations.push((c, s));
            hess.push(col);
            inner += 1;
            iters += 1;
            if g[inner].norm() <= GMRES_TOL * b_norm || wn == 0.0 {
                break;
            }
            w.mapv_inplace(|z| z / wn);
            basis.push(w);
        }
        let m = inner;
        let mut y = vec![ZERO; m];
        for i in (0..m).rev() {
            let mut acc = g[i];
            for k in i + 1..m {
                acc -= hess[k][i] * y[k];
            }
            y[i] = if hess[i][i] == ZERO { ZERO } else { acc / hess[i][i] };
        }
        let mut update = Matrix::zeros(b.raw_dim());
        for (k, yk) in y.iter().enumerate() {
            update.scaled_add(*yk, &basis[k]);
        }
        x += &m_inv(&update);
        if g[m].norm() <= GMRES_TOL * b_norm {
            let r = b - &a(&x);
            if norm(&r) <= 10.0 * GMRES_TOL * b_norm {
                break;
            }
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate, IntegratorConfig, Method};
    use crate::model::{DriveSchedule, Truncation};
    use crate::oracle;

    #[test]
    fn window_longer_than_run_is_an_error() {
        let mut s = TimeSeries::new();
        s.push(0.0, Record::default());
        s.push(1e-9, Record::default());
        assert!(matches!(steady_state_from_trajectory(&s, 2e-9, 1e-4), Err(Error::WindowTooLong { .. })));
        let ok = steady_state_from_trajectory(&s, 1e-9, 1e-4).unwrap();
        assert!(ok.converged);
    }

    #[test]
    fn trajectory_mean_and_spread() {
        let mut s = TimeSeries::new();
        for k in 0..11 {
            let r = Record { n_a: k as f64, ..Record::default() };
            s.push(k as f64, r);
        }
        let st = steady_state_from_trajectory(&s, 4.0, 0.5).unwrap();
        assert_eq!(st.values.n_a, 8.0);
        assert_eq!(st.spread, 4.0);
        assert!(!st.converged);
    }

    #[test]
    fn direct_solution_is_a_fixed_point_of_the_exact_propagator() {
        let p = DividerParams::fig2().with_truncation(Truncation::uniform(2));
        let rho = steady_state_direct(&p, p.drive_amp).unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-10);
        assert!(rho.min_eigenvalue() > -1e-10);
        let h = crate::model::build_rotating_hamiltonian(&p, p.drive_amp).unwrap();
        let lv = oracle::vectorized_generator(&h, &build_collapse_terms(&p).unwrap()).unwrap();
        let later = oracle::exact_propagate(&rho, &lv, 1e-6).unwrap();
        assert!(later.max_abs_diff(&rho) < 1e-9, "{}", later.max_abs_diff(&rho));
    }

    #[test]
    fn direct_agrees_with_long_integration() {
        let p = DividerParams::fig2().with_truncation(Truncation::uniform(2));
        let direct = SteadyObservables::from_state(&steady_state_direct(&p, p.drive_amp).unwrap()).unwrap();
        let cfg = IntegratorConfig::default().with_method(Method::Expm).with_sample_interval(1e-7);
        let series =
            integrate(&DensityMatrix::ground(&p.space()), &p, &DriveSchedule::continuous(p.drive_amp), 1e-5, &cfg)
                .unwrap();
        let tail = SteadyObservables::from_record(series.last().unwrap().1);
        assert!(direct.max_abs_diff(&tail) < 1e-8, "{direct:?} vs {tail:?}");
    }

    #[test]
    fn undamped_generator_is_degenerate() {
        let p = DividerParams {
            gamma_a: 0.0,
            gamma_b: 0.0,
            gamma_c: 0.0,
            kappa1: 0.0,
            kappa2: 0.0,
            ..DividerParams::fig2().with_truncation(Truncation::uniform(2))
        };
        assert!(matches!(steady_state_direct(&p, p.drive_amp), Err(Error::DegenerateSteadyState { .. })));
    }

    #[test]
    fn guard() {
        let p = DividerParams::fig2().with_truncation(Truncation::uniform(4));
        assert!(matches!(steady_state_direct(&p, 1.0), Err(Error::DimensionGuard { .. })));
    }
}
