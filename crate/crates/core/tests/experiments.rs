use freqdiv::dynamics::{IntegratorConfig, Observable};
use freqdiv::experiments::{
    conversion_efficiency, count_peaks, run_amplitude_study, run_pulse_study, run_sweep, sweep_integrator,
    SweepParameter, SweepSpec, PEAK_SEPARATION_FRACTION,
};
use freqdiv::model::{DividerParams, DriveSchedule};
use freqdiv::units::{mhz, ns};

#[test]
fn sweeps_are_reproducible_and_sorted() {
    let p = DividerParams::fig2().with_truncation(2);
    let spec = SweepSpec::new(SweepParameter::Lambda, vec![mhz(6.0), 0.0, mhz(3.0)], p);
    let a = run_sweep(&spec).unwrap();
    let b = run_sweep(&spec).unwrap();
    assert_eq!(a, b);
    let swept: Vec<f64> = a.iter().map(|q| q.swept_value).collect();
    assert_eq!(swept, vec![0.0, mhz(3.0), mhz(6.0)]);
    assert_eq!((a[0].t, a[0].n_b_s, a[0].n_c_s), (0.0, 0.0, 0.0));
    assert!(a.iter().all(|q| q.converged));
    for q in &a[1..] {
        let want = conversion_efficiency(q.n_b_s, q.n_c_s, &spec.base).unwrap();
        assert_eq!(q.t, want);
        assert!(q.t > 0.0);
    }
}

#[test]
fn schedule_parameters_cannot_be_swept_for_efficiency() {
    let spec = SweepSpec::new(SweepParameter::PulseWidth, vec![ns(50.0)], DividerParams::fig2());
    assert!(run_sweep(&spec).is_err());
}

#[test]
fn small_amplitude_study_is_ordered() {
    let p = DividerParams::fig2().with_truncation(2);
    let study = run_amplitude_study(&[mhz(4.0), mhz(2.0), mhz(3.0)], &p, &sweep_integrator()).unwrap();
    assert!(study.is_ordered());
    assert!(study.runs.iter().all(|r| r.run.converged));
}

#[test]
fn peak_count_survives_grid_refinement() {
    let p = DividerParams::fig5().with_truncation(3);
    let template = DriveSchedule::square_train(p.drive_amp, ns(50.0), 0.0, 3);
    let coarse = IntegratorConfig::default();
    let fine = coarse.with_dt(ns(0.05)).with_sample_interval(ns(0.5));
    let intervals = [ns(5.0), ns(30.0)];
    let a = run_pulse_study(&[ns(50.0)], &intervals, &p, &template, &coarse).unwrap();
    let b = run_pulse_study(&[ns(50.0)], &intervals, &p, &template, &fine).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.tau, y.tau);
        for f in [0.05, 0.1, PEAK_SEPARATION_FRACTION] {
            let (nx, ny) = (x.series.column(Observable::NB), y.series.column(Observable::NB));
            assert_eq!(count_peaks(&nx, f), count_peaks(&ny, f), "τ = {} ns, fraction {f}", x.tau * 1e9);
        }
        assert_eq!(x.peaks, y.peaks);
    }
    assert_eq!(a[0].peaks, 1);
}
