//! End-to-end acceptance criteria. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails. Pass criterion numbers as arguments to
//! run a subset, e.g. `cargo test --release --test acceptance -- 2 3`.

use std::fmt::Write as _;
use std::time::Instant;

use freqdiv::algebra::DensityMatrix;
use freqdiv::dynamics::{
    integrate, integrate_lab_frame, run_until_stable, steady_state_direct, IntegratorConfig, Method, Observable,
    PositivityCheck, StabilityCriterion, SteadyObservables, TimeSeries,
};
use freqdiv::experiments::{
    argmax, default_amplitudes, default_detuning_grid, local_maxima, run_amplitude_study,
    run_coupling_sweep, run_detuning_sweep, run_pulse_study, sweep_integrator, EfficiencyPoint, SweepParameter,
    SweepSpec, PEAK_SEPARATION_FRACTION,
};
use freqdiv::model::{DividerParams, DriveSchedule, Truncation};
use freqdiv::oracle::{decoupled_cavity_exact, eq6_reference};
use freqdiv::units::{mhz, ns, to_mhz};

struct Outcome {
    pass: bool,
    detail: String,
    /// Trajectories with symmetric parameters, checked again by criterion 9.
    symmetric: Vec<(String, TimeSeries)>,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail, symmetric: Vec::new() }
    }
}

fn max_gap(a: &TimeSeries, b: &TimeSeries, observables: &[Observable]) -> f64 {
    assert_eq!(a.times, b.times, "sample grids differ");
    observables
        .iter()
        .flat_map(|&o| a.column(o).into_iter().zip(b.column(o)).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

fn ground(p: &DividerParams) -> DensityMatrix {
    DensityMatrix::ground(&p.space())
}

fn physicality() -> Outcome {
    let p = DividerParams::fig2().with_truncation(4);
    let s = DriveSchedule::continuous(p.drive_amp);
    let cfg = IntegratorConfig::default().with_positivity(PositivityCheck::Eigenvalues);
    let ts = match integrate(&ground(&p), &p, &s, ns(2000.0), &cfg) {
        Ok(ts) => ts,
        Err(e) => return Outcome::new(false, format!("integration failed: {e}")),
    };
    let d = &ts.diagnostics;
    let min_eig = d.min_eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let asym = d.max_step_asymmetry.max(d.max_sample_asymmetry);
    let pass = d.max_trace_error <= 1e-8 && asym <= 1e-10 && min_eig >= -1e-8 && d.min_eigenvalues.len() == ts.len();
    let detail = format!(
        "dim 256, {} steps, {} samples: max |Tr ρ − 1| = {:.2e}, max ‖ρ − ρ†‖ = {:.2e}, min eigenvalue = {:.2e}",
        d.steps,
        ts.len(),
        d.max_trace_error,
        asym,
        min_eig
    );
    Outcome { pass, detail, symmetric: vec![("physicality run".into(), ts)] }
}

fn oracle_equivalence() -> Outcome {
    let p = DividerParams::fig2().with_truncation(2);
    let s = DriveSchedule::continuous(p.drive_amp);
    let cfg = IntegratorConfig::default();
    let run = |m| integrate(&ground(&p), &p, &s, ns(500.0), &cfg.with_method(m));
    match (run(Method::Rk4), run(Method::Expm)) {
        (Ok(a), Ok(b)) => {
            let gap = max_gap(&a, &b, &Observable::PHYSICAL);
            Outcome::new(gap <= 1e-7, format!("dims [2,2,2,2,2], 500 ns: max observable gap {gap:.2e} (tol 1e-7)"))
        }
        (a, b) => Outcome::new(false, format!("integration failed: {:?} / {:?}", a.err(), b.err())),
    }
}

fn frame_equivalence() -> Outcome {
    let p = DividerParams::fig2().with_truncation(3);
    let s = DriveSchedule::continuous(p.drive_amp);
    let cfg = IntegratorConfig::default();
    let rot = integrate(&ground(&p), &p, &s, ns(200.0), &cfg);
    let lab = integrate_lab_frame(&ground(&p), &p, &s, ns(200.0), &cfg);
    match (rot, lab) {
        (Ok(a), Ok(b)) => {
            let gap = max_gap(&a, &b, &Observable::PHYSICAL);
            Outcome::new(gap <= 1e-4, format!("dims [2,2,3,3,3], 200 ns: max observable gap {gap:.2e} (tol 1e-4)"))
        }
        (a, b) => Outcome::new(false, format!("integration failed: {:?} / {:?}", a.err(), b.err())),
    }
}

fn decoupled_cavity() -> Outcome {
    let mut p = DividerParams::fig2().with_truncation(Truncation { a: 12, b: 2, c: 2 });
    p.g3 = 0.0;
    p.lambda1 = 0.0;
    p.lambda2 = 0.0;
    let s = DriveSchedule::continuous(p.drive_amp);
    let ts = match integrate(&ground(&p), &p, &s, ns(1000.0), &IntegratorConfig::default()) {
        Ok(ts) => ts,
        Err(e) => return Outcome::new(false, format!("integration failed: {e}")),
    };
    let mut csv = String::from("time_ns,n_a,closed_form,eq6_reference\n");
    let mut err = 0.0f64;
    for (&t, n) in ts.times.iter().zip(ts.column(Observable::NA)) {
        let exact = decoupled_cavity_exact(&p, p.drive_amp, t);
        err = err.max((n - exact).abs());
        let _ = writeln!(csv, "{},{n},{exact},{}", t * 1e9, eq6_reference(p.gamma_a, p.drive_amp, t));
    }
    let path = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("decoupled_cavity.csv");
    let written = std::fs::write(&path, csv).is_ok();
    let t_end = ns(1000.0);
    let detail = format!(
        "a=12, 1 μs: max |n_a − closed form| = {err:.2e} (tol 1e-4); at 1 μs closed form {:.4} vs semiclassical reference {:.4} (scale not asserted), curves in {}",
        decoupled_cavity_exact(&p, p.drive_amp, t_end),
        eq6_reference(p.gamma_a, p.drive_amp, t_end),
        path.display()
    );
    Outcome::new(err <= 1e-4 && written, detail)
}

/// At least one interior maximum followed by an interior minimum.
fn oscillates(ys: &[f64]) -> bool {
    let maxima = local_maxima(ys);
    let neg: Vec<f64> = ys.iter().map(|y| -y).collect();
    let minima = local_maxima(&neg);
    maxima.first().is_some_and(|&i| minima.iter().any(|&j| j > i))
}

fn amplitude_study() -> Outcome {
    let p = DividerParams::fig2().with_truncation(4);
    let cfg = sweep_integrator().with_sample_interval(ns(1.0));
    let study = match run_amplitude_study(&default_amplitudes(), &p, &cfg) {
        Ok(s) => s,
        Err(e) => return Outcome::new(false, format!("study failed: {e}")),
    };
    let ordered = study.is_ordered();
    let mut pass = ordered;
    let mut detail = format!("n_tr=4, plateaus strictly increasing in |Ω|: {ordered}");
    let mut symmetric = Vec::new();
    for r in &study.runs {
        let ts = &r.run.series;
        let starts_at_zero = Observable::PHYSICAL.iter().all(|&o| o.of(&ts.records[0]) == 0.0);
        let rises = Observable::PHYSICAL.iter().all(|&o| r.run.steady.get(o) > 0.0);
        let early: Vec<usize> = (0..ts.len()).filter(|&i| ts.times[i] < ns(100.0)).collect();
        let window = |o: Observable| early.iter().map(|&i| o.of(&ts.records[i])).collect::<Vec<_>>();
        let osc = [Observable::NA, Observable::P1, Observable::P2].iter().all(|&o| oscillates(&window(o)));
        pass &= starts_at_zero && rises && r.run.converged && osc;
        let s = r.run.steady;
        let _ = write!(
            detail,
            "; {} MHz: n_a {:.4}, n_b {:.4}, P {:.4}, from 0 {}, stable {} (by {:.2} μs), oscillates <100 ns {}",
            to_mhz(r.amp),
            s.n_a,
            s.n_b,
            s.p1,
            starts_at_zero,
            r.run.converged,
            r.run.settling_time.unwrap_or(f64::NAN) * 1e6,
            osc
        );
        symmetric.push((format!("amplitude {} MHz", to_mhz(r.amp)), r.run.series.clone()));
    }
    Outcome { pass, detail, symmetric }
}

fn t_at(points: &[EfficiencyPoint], v: f64) -> Option<f64> {
    points.iter().find(|q| (q.swept_value - v).abs() < 1e-3).map(|q| q.t)
}

fn detuning_sweep() -> Outcome {
    let p = DividerParams::fig2().with_truncation(4);
    let spec = SweepSpec::new(SweepParameter::Delta2, default_detuning_grid(), p);
    let points = match run_detuning_sweep(&spec) {
        Ok(pts) => pts,
        Err(e) => return Outcome::new(false, format!("sweep failed: {e}")),
    };
    let ts: Vec<f64> = points.iter().map(|q| q.t).collect();
    let peaks: Vec<f64> = local_maxima(&ts).into_iter().map(|i| to_mhz(points[i].swept_value)).collect();
    let flanked = peaks.iter().any(|&d| d < 0.0) && peaks.iter().any(|&d| d > 0.0);
    let t_max = ts.iter().copied().fold(0.0, f64::max);
    let (t0, t8) = (t_at(&points, 0.0).unwrap_or(f64::NAN), t_at(&points, mhz(8.0)).unwrap_or(f64::NAN));
    let tail = points
        .iter()
        .filter(|q| to_mhz(q.swept_value).abs() >= 50.0 - 1e-9)
        .map(|q| q.t)
        .fold(0.0, f64::max);
    let converged = points.iter().all(|q| q.converged);
    let pass = flanked && t8 > t0 && tail < 0.05 * t_max && converged;
    let detail = format!(
        "n_tr=4, 41 points: local maxima at {peaks:?} MHz, T(4.096 GHz) = {t8:.4} vs T(4.100 GHz) = {t0:.4}, \
         max T = {t_max:.4}, max T for |Δ| ≥ 50 MHz = {tail:.4} (limit {:.4}), all converged {converged}",
        0.05 * t_max
    );
    Outcome::new(pass, detail)
}

fn coupling_sweep() -> Outcome {
    let p = DividerParams::fig2().with_truncation(4);
    let mut grid = vec![0.0];
    grid.extend((0..=18).map(|k| mhz(1.0 + 0.5 * k as f64)));
    let spec = SweepSpec::new(SweepParameter::Lambda, grid, p);
    let points = match run_coupling_sweep(&spec) {
        Ok(pts) => pts,
        Err(e) => return Outcome::new(false, format!("sweep failed: {e}")),
    };
    let t0 = t_at(&points, 0.0).unwrap_or(f64::NAN);
    let in_range: Vec<EfficiencyPoint> = points.iter().filter(|q| q.swept_value >= mhz(1.0) - 1.0).cloned().collect();
    let best = argmax(&in_range).map(|q| to_mhz(q.swept_value));
    let pass = t0 == 0.0 && best.is_some_and(|b| (4.0..=8.0).contains(&b));
    let summary: Vec<String> =
        points.iter().map(|q| format!("{:.1}:{:.4}", to_mhz(q.swept_value), q.t)).collect();
    Outcome::new(pass, format!("n_tr=4: T(λ=0) = {t0}, argmax λ = {best:?} MHz; T(λ) = [{}]", summary.join(" ")))
}

fn pulses() -> Outcome {
    let p = DividerParams::fig5().with_truncation(4);
    let cfg = IntegratorConfig::default();
    let single = DriveSchedule::square_train(p.drive_amp, ns(50.0), 0.0, 1);
    let widths = [ns(50.0), ns(80.0), ns(110.0), ns(150.0)];
    let train = DriveSchedule::square_train(p.drive_amp, ns(50.0), 0.0, 3);
    let (a, b) = match (
        run_pulse_study(&widths, &[0.0], &p, &single, &cfg),
        run_pulse_study(&[ns(50.0)], &[ns(5.0), ns(30.0)], &p, &train, &cfg),
    ) {
        (Ok(a), Ok(b)) => (a, b),
        (a, b) => return Outcome::new(false, format!("pulse runs failed: {:?} / {:?}", a.err(), b.err())),
    };
    let maxima: Vec<f64> = a.iter().map(|r| r.max_n_b.max(r.max_n_c)).collect();
    let nondecreasing = maxima.windows(2).all(|w| w[1] >= w[0]);
    let levels_off = maxima[3] - maxima[2] < maxima[1] - maxima[0];
    let peaks = |tau: f64| b.iter().find(|r| (r.tau - tau).abs() < 1e-12).map(|r| r.peaks);
    let (p5, p30) = (peaks(ns(5.0)), peaks(ns(30.0)));
    let pass_a = nondecreasing && levels_off;
    let pass_b = p5 == Some(1) && p30 == Some(3);
    let detail = format!(
        "n_tr=4: (a) max n_b,c over t_w 50/80/110/150 ns = {:.4?}, nondecreasing {nondecreasing}, levels off {levels_off} → {}; \
         (b) peaks at {:.0}% separation: τ=5 ns {p5:?} (want 1), τ=30 ns {p30:?} (want 3) → {}",
        maxima,
        if pass_a { "PASS" } else { "FAIL" },
        PEAK_SEPARATION_FRACTION * 100.0,
        if pass_b { "PASS" } else { "FAIL" },
    );
    let symmetric = a
        .iter()
        .chain(&b)
        .map(|r| (format!("pulse t_w {} ns τ {} ns", r.t_w * 1e9, r.tau * 1e9), r.series.clone()))
        .collect();
    Outcome { pass: pass_a && pass_b, detail, symmetric }
}

fn symmetry(runs: &[(String, TimeSeries)]) -> Outcome {
    if runs.is_empty() {
        return Outcome::new(false, "no symmetric runs were produced (run criteria 1, 5 or 8 alongside 9)".into());
    }
    let mut worst = 0.0f64;
    let mut samples = 0;
    for (_, ts) in runs {
        samples += ts.len();
        for r in &ts.records {
            worst = worst.max((r.n_b - r.n_c).abs()).max((r.p1 - r.p2).abs());
        }
    }
    Outcome::new(
        worst <= 1e-9,
        format!("{} symmetric runs, {samples} samples: max |n_b − n_c|, |P_1 − P_2| = {worst:.2e} (tol 1e-9)", runs.len()),
    )
}

fn two_path_steady_state() -> Outcome {
    let p = DividerParams::fig2().with_truncation(3);
    let s = DriveSchedule::continuous(p.drive_amp);
    let traj = run_until_stable(&ground(&p), &p, &s, &sweep_integrator(), &StabilityCriterion::for_params(&p));
    let direct = steady_state_direct(&p, p.drive_amp).and_then(|rho| SteadyObservables::from_state(&rho));
    match (traj, direct) {
        (Ok(t), Ok(d)) => {
            let gap = (t.steady.n_b - d.n_b).abs();
            Outcome::new(
                gap <= 1e-3 && t.converged,
                format!("n_tr=3: trajectory n_b = {:.7}, direct n_b = {:.7}, gap {gap:.2e} (tol 1e-3)", t.steady.n_b, d.n_b),
            )
        }
        (a, b) => Outcome::new(false, format!("solve failed: {:?} / {:?}", a.err(), b.err())),
    }
}

fn main() {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |k: usize| selected.is_empty() || selected.contains(&k);
    let names = [
        "physicality",
        "oracle equivalence",
        "frame equivalence",
        "decoupled cavity",
        "amplitude ordering and plateaus",
        "detuning sweep structure",
        "coupling sweep structure",
        "pulse structure",
        "symmetry",
        "two-path steady state",
    ];
    let mut symmetric = Vec::new();
    let mut failed = Vec::new();
    for (k, name) in names.iter().enumerate().map(|(i, n)| (i + 1, n)) {
        if !wanted(k) {
            continue;
        }
        let start = Instant::now();
        let out = match k {
            1 => physicality(),
            2 => oracle_equivalence(),
            3 => frame_equivalence(),
            4 => decoupled_cavity(),
            5 => amplitude_study(),
            6 => detuning_sweep(),
            7 => coupling_sweep(),
            8 => pulses(),
            9 => symmetry(&symmetric),
            _ => two_path_steady_state(),
        };
        symmetric.extend(out.symmetric);
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        println!("{verdict} criterion {k} ({name}) [{:.1} s]: {}", start.elapsed().as_secs_f64(), out.detail);
        if !out.pass {
            failed.push(k);
        }
    }
    if !failed.is_empty() {
        println!("acceptance: criteria {failed:?} failed");
        std::process::exit(1);
    }
    println!("acceptance: all selected criteria passed");
}
