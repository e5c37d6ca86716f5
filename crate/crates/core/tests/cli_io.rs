use std::fs;

use freqdiv::cli::{
    self, emit_plot_script, emit_sweep_csv, emit_timeseries_csv, format_g, parse_config, read_sweep_csv,
    read_timeseries_csv, Command, Experiment, Overrides, RunConfig,
};
use freqdiv::dynamics::{Record, TimeSeries};
use freqdiv::experiments::{EfficiencyPoint, SweepParameter};
use freqdiv::model::DividerParams;
use freqdiv::units::{ghz, mhz, to_mhz};
use freqdiv::Error;
use proptest::prelude::*;

fn point(v: f64, t: f64) -> EfficiencyPoint {
    EfficiencyPoint { swept_value: v, n_b_s: t / 2.0, n_c_s: t / 2.0, t, converged: true, settling_time: None }
}

fn wiggly_series(n: usize) -> TimeSeries {
    let mut ts = TimeSeries::new();
    for k in 0..n {
        let x = k as f64;
        ts.push(
            x * 1.7e-9,
            Record {
                n_a: (x * 0.3).sin().abs() / 3.0,
                n_b: 1e-7 * x * x,
                n_c: 1e-7 * x * x,
                p1: (x * 0.11).cos().powi(2) / 7.0,
                p2: (x * 0.11).cos().powi(2) / 7.0,
                trace: 1.0 - 1e-13 * x,
                purity: 1.0 / (1.0 + x / 3.0),
            },
        );
    }
    ts
}

#[test]
fn every_experiment_resolves_from_its_name_alone() {
    for e in Experiment::ALL {
        let cfg = parse_config(&format!("experiment = \"{}\"", e.name())).unwrap();
        assert_eq!(cfg, RunConfig::defaults(e));
        assert_eq!(parse_config(&cfg.to_toml()).unwrap(), cfg, "{}", e.name());
    }
    let cfg = parse_config("experiment = \"simulate\"").unwrap();
    let p = DividerParams::fig2();
    assert_eq!(cfg.params.omega_a, ghz(8.2));
    assert_eq!(cfg.params.g3, mhz(10.0));
    assert_eq!(cfg.params, p);
}

#[test]
fn full_config_parses_in_lab_units() {
    let text = r#"
experiment = "pulse-study"
output_dir = "runs/fig6"

[params]
omega_a = 8.2
omega_b = 4.096
omega_c = 4.096
omega_q1 = "4.096 GHz"
omega_q2 = "4096 MHz"
g3 = 10
lambda1 = 5
lambda2 = 5
gamma_a = 6
gamma_b = 1
gamma_c = 1
kappa1 = 3
kappa2 = 3
drive_amp = 7
n_tr = 4

[schedule]
kind = "square-train"
t_w = 50
tau = "0.03 us"
n_pulses = 3

[integrator]
method = "rk4"
dt = 0.1
sample_interval = 1
positivity = "off"

[pulse]
widths = [50]
intervals = [5, 30]
"#;
    let cfg = parse_config(text).unwrap();
    assert_eq!(cfg.params.omega_q1, ghz(4.096));
    assert!((cfg.params.omega_q2 - ghz(4.096)).abs() < 1e-3);
    assert_eq!(cfg.params.drive_amp, mhz(7.0));
    assert_eq!(cfg.schedule.amp, mhz(7.0));
    assert_eq!(cfg.params.truncation.a, 4);
    assert_eq!(cfg.pulse.as_ref().unwrap().intervals.len(), 2);
    assert_eq!(parse_config(&cfg.to_toml()).unwrap(), cfg);
}

#[test]
fn config_errors_carry_key_paths() {
    let cases = [
        ("experiment = \"simulate\"\n[integrator]\nabs_tol = \"tiny\"", "integrator.abs_tol"),
        ("experiment = \"simulate\"\n[params]\nkappa2 = -3", "params.kappa2"),
        ("experiment = \"simulate\"\n[run]\nt_end = 0", "run.t_end"),
        ("experiment = \"simulate\"\n[run]\nsteps = 10", "run.steps"),
        ("experiment = \"cooking\"", "experiment"),
        ("experiment = \"simulate\"\n[params]\nomega_a = 8.2.1", "<document>"),
        ("experiment = \"detuning-sweep\"\n[sweep]\nparameter = \"t_w\"\nvalues = [1]", "sweep.parameter"),
    ];
    for (text, path) in cases {
        match parse_config(text) {
            Err(Error::Config { path: p, .. }) => assert_eq!(p, path, "{text}"),
            other => panic!("{text}: expected a config error, got {other:?}"),
        }
    }
}

#[test]
fn empty_series_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    emit_timeseries_csv(&TimeSeries::new(), &path).unwrap();
    assert_eq!(fs::read_to_string(&path).unwrap(), "time_ns,n_a,n_b,n_c,P_1,P_2,trace,purity\n");
    assert!(read_timeseries_csv(&path).unwrap().is_empty());
}

#[test]
fn timeseries_round_trips_at_twelve_digits() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let ts = wiggly_series(300);
    emit_timeseries_csv(&ts, &a).unwrap();
    let back = read_timeseries_csv(&a).unwrap();
    assert_eq!(back.len(), ts.len());
    for (x, y) in ts.records.iter().zip(&back.records) {
        for (u, v) in [(x.n_a, y.n_a), (x.n_b, y.n_b), (x.p1, y.p1), (x.trace, y.trace), (x.purity, y.purity)] {
            assert_eq!(format_g(u, 12), format_g(v, 12));
        }
    }
    emit_timeseries_csv(&back, &b).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert!(fs::read_to_string(&a).unwrap().ends_with('\n'));
}

#[test]
fn single_zero_sweep_point() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    emit_sweep_csv(&[point(0.0, 0.0)], SweepParameter::Lambda, &path).unwrap();
    assert_eq!(fs::read_to_string(&path).unwrap(), "swept_value,n_b_s,n_c_s,T,converged\n0,0,0,0,true\n");
    assert!(emit_sweep_csv(&[], SweepParameter::Lambda, &path).is_err());
}

#[test]
fn sweep_columns_reparse() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let mut pts: Vec<_> = (0..9).map(|k| point(mhz(-8.0 + 2.0 * k as f64), 0.01 * k as f64 + 1.0 / 3.0)).collect();
    pts[4].converged = false;
    emit_sweep_csv(&pts, SweepParameter::Delta2, &path).unwrap();
    let back = read_sweep_csv(&path).unwrap();
    for (a, b) in pts.iter().zip(&back) {
        assert!((to_mhz(a.swept_value) - b.swept_value).abs() < 1e-10);
        assert!((a.t - b.t).abs() < 1e-12 && (a.n_b_s - b.n_b_s).abs() < 1e-12);
        assert_eq!(a.converged, b.converged);
    }
}

proptest! {
    #[test]
    fn sweep_rows_are_sorted(values in proptest::collection::vec(-100.0f64..100.0, 1..30)) {
        let pts: Vec<_> = values.iter().map(|&v| point(mhz(v), v.abs() / 100.0)).collect();
        let text = cli::sweep_csv(&pts, SweepParameter::Delta2);
        let swept: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
        prop_assert_eq!(swept.len(), values.len());
        prop_assert!(swept.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn plot_scripts_are_written_next_to_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("run.csv");
    emit_timeseries_csv(&wiggly_series(3), &csv).unwrap();
    let script = emit_plot_script(&csv, "timeseries").unwrap();
    assert_eq!(script, dir.path().join("run.gp"));
    let first = fs::read_to_string(&script).unwrap();
    assert!(first.contains("'run.csv' using 1:2") && first.contains("using 1:4"));
    emit_plot_script(&csv, "timeseries").unwrap();
    assert_eq!(first, fs::read_to_string(&script).unwrap());
    let ef = fs::read_to_string(emit_plot_script(&csv, "efficiency").unwrap()).unwrap();
    assert!(ef.contains("'swept_value':'T'"));
    assert!(matches!(emit_plot_script(&csv, "spectrogram"), Err(Error::UnknownFigureKind(_))));
    assert!(emit_plot_script(&dir.path().join("missing.csv"), "timeseries").is_err());
}

#[test]
fn identical_runs_write_identical_csvs_and_full_manifests() {
    let text = "experiment = \"simulate\"\n[params]\nn_tr = 2\n[run]\nt_end = 40";
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut csvs = Vec::new();
    for d in &dirs {
        let o = Overrides { out: Some(d.path().to_path_buf()), ..Overrides::default() };
        let cfg = cli::resolve(Command::Simulate, Some(text), &o).unwrap();
        let report = cli::run(Command::Simulate, &cfg).unwrap();
        assert_eq!(report.outputs.len(), 3);
        csvs.push(fs::read(d.path().join("timeseries.csv")).unwrap());
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(d.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["tool"], "freqdiv");
        assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
        assert!(manifest["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
        assert_eq!(manifest["config"]["params"]["g3"].as_f64().unwrap(), mhz(10.0));
        let echoed = parse_config(manifest["resolved_toml"].as_str().unwrap()).unwrap();
        assert_eq!(echoed, cfg);
    }
    assert_eq!(csvs[0], csvs[1]);
    let text = String::from_utf8(csvs.remove(0)).unwrap();
    assert_eq!(text.lines().nth(1).unwrap(), "0.0,0,0,0,0,0,1,1");
    assert_eq!(text.lines().count(), 42);
}

#[test]
fn sweep_run_writes_points_in_order_with_per_point_params() {
    let dir = tempfile::tempdir().unwrap();
    let text = "experiment = \"coupling-sweep\"\n[params]\nn_tr = 2\n[sweep]\nvalues = [4, 0, 2]";
    let o = Overrides { out: Some(dir.path().to_path_buf()), ..Overrides::default() };
    let cfg = cli::resolve(Command::Sweep, Some(text), &o).unwrap();
    cli::run(Command::Sweep, &cfg).unwrap();
    let rows = read_sweep_csv(&dir.path().join("sweep.csv")).unwrap();
    let swept: Vec<f64> = rows.iter().map(|r| r.swept_value).collect();
    assert_eq!(swept, vec![0.0, 2.0, 4.0]);
    assert_eq!(rows[0].t, 0.0);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    let points = manifest["results"]["points"].as_array().unwrap();
    assert_eq!(points.len(), 3);
    for p in points {
        let lambda = p["params"]["lambda1"].as_f64().unwrap();
        assert_eq!(lambda, p["result"]["swept_value"].as_f64().unwrap());
    }
    assert!(dir.path().join("sweep.gp").is_file());
}
