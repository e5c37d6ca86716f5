use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::dynamics::{Record, TimeSeries};
use crate::error::{Error, Result};
use crate::experiments::{EfficiencyPoint, SweepParameter};

use super::config::{sweep_unit, Unit};

pub const TIMESERIES_HEADER: &str = "time_ns,n_a,n_b,n_c,P_1,P_2,trace,purity";
pub const SWEEP_HEADER: &str = "swept_value,n_b_s,n_c_s,T,converged";

/// C's `%.{digits}g`: shortest of fixed and exponent notation with
/// `digits` significant digits, trailing zeros removed.
pub fn format_g(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let p = digits.max(1);
    let sci = format!("{:.*e}", p - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= p as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn format_time(t_ns: f64) -> String {
    let s = format_g(t_ns, 12);
    if s.contains(['.', 'e', 'n', 'i']) {
        s
    } else {
        s + ".0"
    }
}

pub fn timeseries_csv(ts: &TimeSeries) -> String {
    let mut out = String::with_capacity(64 * (ts.len() + 1));
    out.push_str(TIMESERIES_HEADER);
    out.push('\n');
    for (t, r) in ts.times.iter().zip(&ts.records) {
        let cols = [r.n_a, r.n_b, r.n_c, r.p1, r.p2, r.trace, r.purity];
        out.push_str(&format_time(t * 1e9));
        for c in cols {
            out.push(',');
            out.push_str(&format_g(c, 12));
        }
        out.push('\n');
    }
    out
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn emit_timeseries_csv(ts: &TimeSeries, path: &Path) -> Result<()> {
    write_file(path, &timeseries_csv(ts))
}

fn rows<'a>(text: &'a str, header: &str) -> Result<impl Iterator<Item = (usize, Vec<&'a str>)>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == header => {}
        Some(h) => return Err(Error::Csv { line: 1, message: format!("expected header `{header}`, found `{h}`") }),
        None => return Err(Error::Csv { line: 1, message: "empty file".into() }),
    }
    let width = header.split(',').count();
    let rows: Vec<_> = lines.enumerate().map(|(i, l)| (i + 2, l.split(',').collect::<Vec<_>>())).collect();
    if let Some((line, r)) = rows.iter().find(|(_, r)| r.len() != width) {
        return Err(Error::Csv { line: *line, message: format!("expected {width} columns, found {}", r.len()) });
    }
    Ok(rows.into_iter())
}

fn field(line: usize, s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Csv { line, message: format!("malformed number `{s}`") })
}

pub fn parse_timeseries_csv(text: &str) -> Result<TimeSeries> {
    let mut ts = TimeSeries::new();
    for (line, r) in rows(text, TIMESERIES_HEADER)? {
        let v = r.iter().map(|s| field(line, s)).collect::<Result<Vec<_>>>()?;
        let rec = Record { n_a: v[1], n_b: v[2], n_c: v[3], p1: v[4], p2: v[5], trace: v[6], purity: v[7] };
        ts.times.push(v[0] * 1e-9);
        ts.records.push(rec);
    }
    Ok(ts)
}

pub fn read_timeseries_csv(path: &Path) -> Result<TimeSeries> {
    parse_timeseries_csv(&read_file(path)?)
}

/// Sweep table with the swept value in lab units (MHz, GHz or ns),
/// sorted by swept value.
pub fn sweep_csv(points: &[EfficiencyPoint], parameter: SweepParameter) -> String {
    let unit = sweep_unit(parameter);
    let mut sorted: Vec<&EfficiencyPoint> = points.iter().collect();
    sorted.sort_by(|a, b| a.swept_value.total_cmp(&b.swept_value));
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for p in sorted {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            format_g(native(unit, p.swept_value), 12),
            format_g(p.n_b_s, 12),
            format_g(p.n_c_s, 12),
            format_g(p.t, 12),
            p.converged
        );
    }
    out
}

fn native(unit: Unit, v: f64) -> f64 {
    match unit {
        Unit::Ghz => crate::units::to_ghz(v),
        Unit::Mhz => crate::units::to_mhz(v),
        Unit::Ns => crate::units::to_ns(v),
    }
}

pub fn emit_sweep_csv(points: &[EfficiencyPoint], parameter: SweepParameter, path: &Path) -> Result<()> {
    if points.is_empty() {
        return Err(Error::Sweep("no sweep points to write".into()));
    }
    write_file(path, &sweep_csv(points, parameter))
}

/// Rows of a sweep table, with the swept value left in lab units.
pub fn parse_sweep_csv(text: &str) -> Result<Vec<EfficiencyPoint>> {
    rows(text, SWEEP_HEADER)?
        .map(|(line, r)| {
            let converged = match r[4] {
                "true" => true,
                "false" => false,
                other => return Err(Error::Csv { line, message: format!("expected true or false, found `{other}`") }),
            };
            Ok(EfficiencyPoint {
                swept_value: field(line, r[0])?,
                n_b_s: field(line, r[1])?,
                n_c_s: field(line, r[2])?,
                t: field(line, r[3])?,
                converged,
                settling_time: None,
            })
        })
        .collect()
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<EfficiencyPoint>> {
    parse_sweep_csv(&read_file(path)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FigureKind {
    Timeseries,
    Efficiency,
}

impl FigureKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "timeseries" => Ok(Self::Timeseries),
            "efficiency" => Ok(Self::Efficiency),
            other => Err(Error::UnknownFigureKind(other.to_string())),
        }
    }
}

/// Gnuplot script rendering `csv_name` to `png_name`.
pub fn plot_script(csv_name: &str, png_name: &str, kind: FigureKind) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set terminal pngcairo size 960,640\n");
    let _ = writeln!(s, "set output '{png_name}'");
    s.push_str("set key top left\n");
    s.push_str("set grid\n");
    match kind {
        FigureKind::Timeseries => {
            s.push_str("set xlabel 'time (ns)'\n");
            s.push_str("set ylabel 'photon number'\n");
            let _ = writeln!(
                s,
                "plot '{csv_name}' using 1:2 skip 1 with lines title 'n_a', \\\n     \
                 '' using 1:3 skip 1 with lines title 'n_b', \\\n     \
                 '' using 1:4 skip 1 with lines title 'n_c'"
            );
        }
        FigureKind::Efficiency => {
            s.push_str("set datafile columnheaders\n");
            s.push_str("set xlabel 'swept value'\n");
            s.push_str("set ylabel 'conversion efficiency T'\n");
            let _ = writeln!(s, "plot '{csv_name}' using 'swept_value':'T' with linespoints title 'T'");
        }
    }
    s
}

/// Writes the script next to `csv_path` with extension `.gp` and returns
/// its path.
pub fn emit_plot_script(csv_path: &Path, kind: &str) -> Result<PathBuf> {
    let kind = FigureKind::parse(kind)?;
    if !csv_path.is_file() {
        return Err(Error::io(csv_path, std::io::Error::new(std::io::ErrorKind::NotFound, "CSV file not found")));
    }
    let name = |ext: &str| csv_path.with_extension(ext).file_name().map(|n| n.to_string_lossy().into_owned());
    let csv_name = csv_path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let script = plot_script(&csv_name, &name("png").unwrap_or_default(), kind);
    let out = csv_path.with_extension("gp");
    write_file(&out, &script)?;
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a super::RunConfig,
    pub resolved_toml: String,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<String>,
    pub results: serde_json::Value,
}

pub fn emit_manifest(m: &Manifest, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(m).expect("manifest serializes");
    write_file(path, &(text + "\n"))
}
