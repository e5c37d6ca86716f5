use std::path::PathBuf;

use serde::Serialize;
use toml::{Table, Value};

use crate::dynamics::{IntegratorConfig, Method, PositivityCheck};
use crate::error::{Error, Result};
use crate::experiments::{
    default_amplitudes, default_coupling_grid, default_detuning_grid, sweep_integrator, SweepParameter,
};
use crate::model::{DividerParams, DriveKind, DriveSchedule, Truncation};
use crate::units::{ghz, mhz, ns, to_ghz, to_mhz, to_ns, TWO_PI};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Simulate,
    AmplitudeStudy,
    DetuningSweep,
    CouplingSweep,
    PulseStudy,
    SteadyState,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Self::Simulate,
        Self::AmplitudeStudy,
        Self::DetuningSweep,
        Self::CouplingSweep,
        Self::PulseStudy,
        Self::SteadyState,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::AmplitudeStudy => "amplitude-study",
            Self::DetuningSweep => "detuning-sweep",
            Self::CouplingSweep => "coupling-sweep",
            Self::PulseStudy => "pulse-study",
            Self::SteadyState => "steady-state",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }

    fn default_params(self) -> DividerParams {
        match self {
            Self::PulseStudy => DividerParams::fig5(),
            _ => DividerParams::fig2(),
        }
    }

    fn default_integrator(self) -> IntegratorConfig {
        match self {
            Self::Simulate | Self::PulseStudy => IntegratorConfig::default(),
            _ => sweep_integrator(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSection {
    pub parameter: SweepParameter,
    /// SI values: rad/s or seconds.
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PulseSection {
    pub widths: Vec<f64>,
    pub intervals: Vec<f64>,
}

/// Fully resolved run description. Every physical quantity is in SI units.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub output_dir: PathBuf,
    pub params: DividerParams,
    /// Its amplitude always equals `params.drive_amp`.
    pub schedule: DriveSchedule,
    pub integrator: IntegratorConfig,
    /// End time of a `simulate` run.
    pub t_end: f64,
    pub sweep: Option<SweepSection>,
    pub pulse: Option<PulseSection>,
    pub amplitudes: Option<Vec<f64>>,
}

impl RunConfig {
    /// Defaults for `experiment` with no further keys.
    pub fn defaults(experiment: Experiment) -> Self {
        let params = experiment.default_params();
        let schedule = match experiment {
            Experiment::PulseStudy => DriveSchedule::square_train(params.drive_amp, ns(50.0), ns(30.0), 3),
            _ => DriveSchedule::continuous(params.drive_amp),
        };
        let sweep = match experiment {
            Experiment::DetuningSweep => {
                Some(SweepSection { parameter: SweepParameter::Delta2, values: default_detuning_grid() })
            }
            Experiment::CouplingSweep => {
                Some(SweepSection { parameter: SweepParameter::Lambda, values: default_coupling_grid() })
            }
            _ => None,
        };
        let pulse = (experiment == Experiment::PulseStudy)
            .then(|| PulseSection { widths: vec![ns(50.0)], intervals: vec![ns(5.0), ns(30.0)] });
        let amplitudes = (experiment == Experiment::AmplitudeStudy).then(default_amplitudes);
        Self {
            experiment,
            output_dir: PathBuf::from("output"),
            params,
            schedule,
            integrator: experiment.default_integrator(),
            t_end: ns(2000.0),
            sweep,
            pulse,
            amplitudes,
        }
    }

    pub fn with_truncation(mut self, n: usize) -> Result<Self> {
        self.params.truncation = Truncation::uniform(n);
        self.params.validate().map_err(|e| Error::config("--truncation", e.to_string()))?;
        Ok(self)
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.integrator.method = method;
        self
    }

    pub fn with_output_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.output_dir = dir.into();
        self
    }

    /// Resolved config as TOML. Quantities that survive a round trip through
    /// 12 significant digits in lab units are written that way; the
    /// rest are written in SI units so that parsing the text gives back
    /// exactly this config.
    pub fn to_toml(&self) -> String {
        let mut root = Table::new();
        root.insert("experiment".into(), self.experiment.name().into());
        root.insert("output_dir".into(), self.output_dir.display().to_string().into());

        let p = &self.params;
        let mut params = Table::new();
        for (key, unit, v) in param_fields(p) {
            params.insert(key.into(), emit_quantity(v, unit));
        }
        let t = p.truncation;
        if t.is_uniform() {
            params.insert("n_tr".into(), (t.a as i64).into());
        } else {
            params.insert("n_tr_a".into(), (t.a as i64).into());
            params.insert("n_tr_b".into(), (t.b as i64).into());
            params.insert("n_tr_c".into(), (t.c as i64).into());
        }
        root.insert("params".into(), params.into());

        let mut schedule = Table::new();
        match self.schedule.kind {
            DriveKind::Continuous => {
                schedule.insert("kind".into(), "continuous".into());
            }
            DriveKind::SquareTrain { t_w, tau, n_pulses } => {
                schedule.insert("kind".into(), "square-train".into());
                schedule.insert("t_w".into(), emit_quantity(t_w, Unit::Ns));
                schedule.insert("tau".into(), emit_quantity(tau, Unit::Ns));
                schedule.insert("n_pulses".into(), (n_pulses as i64).into());
            }
        }
        root.insert("schedule".into(), schedule.into());

        let c = &self.integrator;
        let mut integrator = Table::new();
        integrator.insert("method".into(), c.method.name().into());
        integrator.insert("dt".into(), emit_quantity(c.dt, Unit::Ns));
        integrator.insert("abs_tol".into(), c.abs_tol.into());
        integrator.insert("rel_tol".into(), c.rel_tol.into());
        integrator.insert("sample_interval".into(), emit_quantity(c.sample_interval, Unit::Ns));
        integrator.insert("positivity".into(), c.positivity.name().into());
        root.insert("integrator".into(), integrator.into());

        let mut run = Table::new();
        run.insert("t_end".into(), emit_quantity(self.t_end, Unit::Ns));
        root.insert("run".into(), run.into());

        if let Some(s) = &self.sweep {
            let unit = sweep_unit(s.parameter);
            let mut sweep = Table::new();
            sweep.insert("parameter".into(), s.parameter.name().into());
            sweep.insert("values".into(), Value::Array(s.values.iter().map(|&v| emit_quantity(v, unit)).collect()));
            root.insert("sweep".into(), sweep.into());
        }
        if let Some(ps) = &self.pulse {
            let mut pulse = Table::new();
            let list = |xs: &[f64]| Value::Array(xs.iter().map(|&v| emit_quantity(v, Unit::Ns)).collect());
            pulse.insert("widths".into(), list(&ps.widths));
            pulse.insert("intervals".into(), list(&ps.intervals));
            root.insert("pulse".into(), pulse.into());
        }
        if let Some(amps) = &self.amplitudes {
            let mut amplitude = Table::new();
            amplitude.insert("amps".into(), Value::Array(amps.iter().map(|&v| emit_quantity(v, Unit::Mhz)).collect()));
            root.insert("amplitude".into(), amplitude.into());
        }
        toml::to_string(&root).expect("config tables always serialize")
    }
}

/// Native unit of a config quantity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Unit {
    /// `f/2π` in GHz.
    Ghz,
    /// `f/2π` in MHz.
    Mhz,
    Ns,
}

impl Unit {
    fn to_si(self, x: f64) -> f64 {
        match self {
            Unit::Ghz => ghz(x),
            Unit::Mhz => mhz(x),
            Unit::Ns => ns(x),
        }
    }

    fn from_si(self, v: f64) -> f64 {
        match self {
            Unit::Ghz => to_ghz(v),
            Unit::Mhz => to_mhz(v),
            Unit::Ns => to_ns(v),
        }
    }

    /// Explicit unit suffixes accepted in string values.
    fn suffix(self, x: f64, unit: &str) -> Option<f64> {
        let freq = |scale: f64| TWO_PI * x * scale;
        match (self, unit) {
            (Unit::Ghz | Unit::Mhz, "GHz") => Some(ghz(x)),
            (Unit::Ghz | Unit::Mhz, "MHz") => Some(mhz(x)),
            (Unit::Ghz | Unit::Mhz, "kHz") => Some(freq(1e3)),
            (Unit::Ghz | Unit::Mhz, "Hz") => Some(freq(1.0)),
            (Unit::Ghz | Unit::Mhz, "rad/s") => Some(x),
            (Unit::Ns, "ns") => Some(ns(x)),
            (Unit::Ns, "us" | "μs") => Some(x * 1e-6),
            (Unit::Ns, "ms") => Some(x * 1e-3),
            (Unit::Ns, "s") => Some(x),
            _ => None,
        }
    }

    fn accepted(self) -> &'static str {
        match self {
            Unit::Ghz | Unit::Mhz => "GHz, MHz, kHz, Hz or rad/s",
            Unit::Ns => "ns, us, ms or s",
        }
    }
}

pub fn sweep_unit(parameter: SweepParameter) -> Unit {
    match parameter {
        SweepParameter::QubitFrequency => Unit::Ghz,
        SweepParameter::PulseWidth | SweepParameter::PulseInterval => Unit::Ns,
        _ => Unit::Mhz,
    }
}

fn param_fields(p: &DividerParams) -> [(&'static str, Unit, f64); 15] {
    [
        ("omega_a", Unit::Ghz, p.omega_a),
        ("omega_b", Unit::Ghz, p.omega_b),
        ("omega_c", Unit::Ghz, p.omega_c),
        ("omega_q1", Unit::Ghz, p.omega_q1),
        ("omega_q2", Unit::Ghz, p.omega_q2),
        ("g3", Unit::Mhz, p.g3),
        ("g_e", Unit::Mhz, p.g_e),
        ("lambda1", Unit::Mhz, p.lambda1),
        ("lambda2", Unit::Mhz, p.lambda2),
        ("gamma_a", Unit::Mhz, p.gamma_a),
        ("gamma_b", Unit::Mhz, p.gamma_b),
        ("gamma_c", Unit::Mhz, p.gamma_c),
        ("kappa1", Unit::Mhz, p.kappa1),
        ("kappa2", Unit::Mhz, p.kappa2),
        ("drive_amp", Unit::Mhz, p.drive_amp),
    ]
}

fn set_param(p: &mut DividerParams, key: &str, v: f64) {
    let slot = match key {
        "omega_a" => &mut p.omega_a,
        "omega_b" => &mut p.omega_b,
        "omega_c" => &mut p.omega_c,
        "omega_q1" => &mut p.omega_q1,
        "omega_q2" => &mut p.omega_q2,
        "g3" => &mut p.g3,
        "g_e" => &mut p.g_e,
        "lambda1" => &mut p.lambda1,
        "lambda2" => &mut p.lambda2,
        "gamma_a" => &mut p.gamma_a,
        "gamma_b" => &mut p.gamma_b,
        "gamma_c" => &mut p.gamma_c,
        "kappa1" => &mut p.kappa1,
        "kappa2" => &mut p.kappa2,
        "drive_amp" => &mut p.drive_amp,
        _ => unreachable!("unknown parameter {key}"),
    };
    *slot = v;
}

fn emit_quantity(v: f64, unit: Unit) -> Value {
    let native = unit.from_si(v);
    if let Ok(short) = format!("{native:.11e}").parse::<f64>() {
        if unit.to_si(short) == v {
            return Value::Float(short);
        }
    }
    if unit.to_si(native) == v {
        return Value::Float(native);
    }
    let si = match unit {
        Unit::Ns => "s",
        _ => "rad/s",
    };
    Value::String(format!("{v:e} {si}"))
}

/// Keys of one table, removed as they are read so that leftovers can be
/// reported as unknown.
struct Keys {
    prefix: String,
    table: Table,
}

impl Keys {
    fn new(prefix: &str, table: Table) -> Self {
        Self { prefix: prefix.to_string(), table }
    }

    fn path(&self, key: &str) -> String {
        if self.prefix.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.prefix)
        }
    }

    fn take(&mut self, key: &str) -> Option<(String, Value)> {
        self.table.remove(key).map(|v| (self.path(key), v))
    }

    fn section(&mut self, key: &str) -> Result<Option<Keys>> {
        match self.take(key) {
            None => Ok(None),
            Some((path, Value::Table(t))) => Ok(Some(Keys::new(&path, t))),
            Some((path, _)) => Err(Error::config(path, "expected a table")),
        }
    }

    fn string(&mut self, key: &str) -> Result<Option<(String, String)>> {
        match self.take(key) {
            None => Ok(None),
            Some((path, Value::String(s))) => Ok(Some((path, s))),
            Some((path, v)) => Err(Error::config(path, format!("expected a string, found {}", v.type_str()))),
        }
    }

    fn quantity(&mut self, key: &str, unit: Unit) -> Result<Option<f64>> {
        self.take(key).map(|(path, v)| quantity(&path, &v, unit)).transpose()
    }

    fn quantities(&mut self, key: &str, unit: Unit) -> Result<Option<Vec<f64>>> {
        match self.take(key) {
            None => Ok(None),
            Some((path, Value::Array(items))) => items
                .iter()
                .enumerate()
                .map(|(i, v)| quantity(&format!("{path}[{i}]"), v, unit))
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some((path, v)) => Err(Error::config(path, format!("expected an array, found {}", v.type_str()))),
        }
    }

    fn real(&mut self, key: &str) -> Result<Option<f64>> {
        match self.take(key) {
            None => Ok(None),
            Some((path, v)) => number(&path, &v).map(Some),
        }
    }

    fn count(&mut self, key: &str) -> Result<Option<usize>> {
        match self.take(key) {
            None => Ok(None),
            Some((_, Value::Integer(n))) if n >= 0 => Ok(Some(n as usize)),
            Some((path, v)) => Err(Error::config(path, format!("expected a non-negative integer, found {v}"))),
        }
    }

    fn finish(self) -> Result<()> {
        match self.table.keys().next() {
            None => Ok(()),
            Some(k) => Err(Error::config(self.path(k), "unknown key")),
        }
    }
}

fn number(path: &str, v: &Value) -> Result<f64> {
    let x = match v {
        Value::Integer(n) => *n as f64,
        Value::Float(x) => *x,
        other => return Err(Error::config(path, format!("expected a number, found {}", other.type_str()))),
    };
    if !x.is_finite() {
        return Err(Error::config(path, format!("{x} is not finite")));
    }
    Ok(x)
}

/// A bare number in the native unit, or a string `"<number> <unit>"`.
fn quantity(path: &str, v: &Value, unit: Unit) -> Result<f64> {
    let Value::String(s) = v else {
        return number(path, v).map(|x| unit.to_si(x));
    };
    let mut parts = s.split_whitespace();
    let (Some(num), Some(suffix), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(Error::config(path, format!("malformed quantity `{s}`, expected `<number> <unit>`")));
    };
    let x: f64 = num.parse().map_err(|_| Error::config(path, format!("malformed number `{num}`")))?;
    if !x.is_finite() {
        return Err(Error::config(path, format!("{x} is not finite")));
    }
    unit.suffix(x, suffix)
        .ok_or_else(|| Error::config(path, format!("unknown unit `{suffix}`, expected {}", unit.accepted())))
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| Error::config("<document>", e.message()))?;
    let mut root = Keys::new("", root);

    let (path, name) = root.string("experiment")?.ok_or_else(|| Error::config("experiment", "missing required key"))?;
    let experiment = Experiment::parse(&name).ok_or_else(|| {
        let names: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
        Error::config(path, format!("unknown experiment `{name}`, expected one of {}", names.join(", ")))
    })?;
    let mut cfg = RunConfig::defaults(experiment);
    if let Some((_, dir)) = root.string("output_dir")? {
        cfg.output_dir = PathBuf::from(dir);
    }

    if let Some(mut sec) = root.section("params")? {
        let keys: Vec<_> = param_fields(&cfg.params).iter().map(|(k, u, _)| (*k, *u)).collect();
        for (key, unit) in keys {
            if let Some(v) = sec.quantity(key, unit)? {
                let path = sec.path(key);
                let is_rate = key.starts_with("gamma") || key.starts_with("kappa");
                if is_rate && v <= 0.0 {
                    return Err(Error::config(path, format!("damping rate must be positive, got {v}")));
                }
                if !is_rate && v < 0.0 {
                    return Err(Error::config(path, format!("must be non-negative, got {v}")));
                }
                set_param(&mut cfg.params, key, v);
            }
        }
        let levels = |sec: &mut Keys, key: &str| -> Result<Option<usize>> {
            let n = sec.count(key)?;
            if let Some(n) = n {
                if n < 2 {
                    return Err(Error::config(sec.path(key), format!("at least 2 levels are needed, got {n}")));
                }
            }
            Ok(n)
        };
        if let Some(n) = levels(&mut sec, "n_tr")? {
            cfg.params.truncation = Truncation::uniform(n);
        }
        if let Some(n) = levels(&mut sec, "n_tr_a")? {
            cfg.params.truncation.a = n;
        }
        if let Some(n) = levels(&mut sec, "n_tr_b")? {
            cfg.params.truncation.b = n;
        }
        if let Some(n) = levels(&mut sec, "n_tr_c")? {
            cfg.params.truncation.c = n;
        }
        sec.finish()?;
    }
    cfg.params.validate().map_err(|e| Error::config("params", e.to_string()))?;
    cfg.schedule.amp = cfg.params.drive_amp;

    if let Some(mut sec) = root.section("schedule")? {
        let kind = match sec.string("kind")? {
            None => None,
            Some((_, k)) if k == "continuous" => Some(false),
            Some((_, k)) if k == "square-train" => Some(true),
            Some((path, k)) => {
                return Err(Error::config(path, format!("unknown kind `{k}`, expected continuous or square-train")))
            }
        };
        let (mut t_w, mut tau, mut n) = match cfg.schedule.kind {
            DriveKind::SquareTrain { t_w, tau, n_pulses } => (t_w, tau, n_pulses),
            DriveKind::Continuous => (ns(50.0), 0.0, 1),
        };
        let train = kind.unwrap_or(matches!(cfg.schedule.kind, DriveKind::SquareTrain { .. }));
        let mut pulse_keys = Vec::new();
        if let Some(v) = sec.quantity("t_w", Unit::Ns)? {
            t_w = v;
            pulse_keys.push(sec.path("t_w"));
        }
        if let Some(v) = sec.quantity("tau", Unit::Ns)? {
            tau = v;
            pulse_keys.push(sec.path("tau"));
        }
        if let Some(v) = sec.count("n_pulses")? {
            n = v;
            pulse_keys.push(sec.path("n_pulses"));
        }
        if !train {
            if let Some(path) = pulse_keys.into_iter().next() {
                return Err(Error::config(path, "only valid for a square-train schedule"));
            }
        }
        sec.finish()?;
        cfg.schedule = if train {
            DriveSchedule::square_train(cfg.params.drive_amp, t_w, tau, n)
        } else {
            DriveSchedule::continuous(cfg.params.drive_amp)
        };
        cfg.schedule.validate().map_err(|e| Error::config("schedule", e.to_string()))?;
    }
    if experiment == Experiment::PulseStudy && cfg.schedule.kind == DriveKind::Continuous {
        return Err(Error::config("schedule.kind", "a pulse study needs a square-train schedule"));
    }

    if let Some(mut sec) = root.section("integrator")? {
        if let Some((path, m)) = sec.string("method")? {
            cfg.integrator.method = Method::parse(&m)
                .ok_or_else(|| Error::config(path, format!("unknown method `{m}`, expected rk4, rk45 or expm")))?;
        }
        if let Some(v) = sec.quantity("dt", Unit::Ns)? {
            cfg.integrator.dt = v;
        }
        if let Some(v) = sec.real("abs_tol")? {
            cfg.integrator.abs_tol = v;
        }
        if let Some(v) = sec.real("rel_tol")? {
            cfg.integrator.rel_tol = v;
        }
        if let Some(v) = sec.quantity("sample_interval", Unit::Ns)? {
            cfg.integrator.sample_interval = v;
        }
        if let Some((path, c)) = sec.string("positivity")? {
            cfg.integrator.positivity = PositivityCheck::parse(&c).ok_or_else(|| {
                Error::config(path, format!("unknown check `{c}`, expected off, cholesky or eigenvalues"))
            })?;
        }
        sec.finish()?;
    }
    cfg.integrator.validate(cfg.params.space().total_dim()).map_err(|e| Error::config("integrator", e.to_string()))?;

    if let Some(mut sec) = root.section("run")? {
        if let Some(v) = sec.quantity("t_end", Unit::Ns)? {
            if !(v > 0.0) {
                return Err(Error::config(sec.path("t_end"), format!("must be positive, got {v}")));
            }
            cfg.t_end = v;
        }
        sec.finish()?;
    }

    if let Some(mut sec) = root.section("sweep")? {
        let parameter = match sec.string("parameter")? {
            Some((path, name)) => SweepParameter::parse(&name).ok_or_else(|| {
                let names: Vec<_> = SweepParameter::ALL.iter().map(|p| p.name()).collect();
                Error::config(path, format!("unknown parameter `{name}`, expected one of {}", names.join(", ")))
            })?,
            None => cfg.sweep.as_ref().map(|s| s.parameter).ok_or_else(|| Error::config("sweep.parameter", "missing required key"))?,
        };
        let unit = sweep_unit(parameter);
        let values = sec.quantities("values", unit)?;
        let start = sec.quantity("start", unit)?;
        let stop = sec.quantity("stop", unit)?;
        let points = sec.count("points")?;
        let values = match (values, start, stop, points) {
            (Some(v), None, None, None) => v,
            (None, Some(a), Some(b), Some(n)) if n >= 2 => {
                let round = |v: f64| format!("{:.11e}", unit.from_si(v)).parse::<f64>().unwrap_or(f64::NAN);
                let (a, b) = (round(a), round(b));
                (0..n).map(|k| unit.to_si(a + (b - a) * k as f64 / (n - 1) as f64)).collect()
            }
            (None, Some(a), _, Some(1)) => vec![a],
            (None, None, None, None) => match &cfg.sweep {
                Some(s) if s.parameter == parameter => s.values.clone(),
                _ => return Err(Error::config(sec.path("values"), "missing required key")),
            },
            _ => return Err(Error::config(sec.path("values"), "give either `values` or all of `start`, `stop`, `points`")),
        };
        if values.is_empty() {
            return Err(Error::config(sec.path("values"), "at least one value is needed"));
        }
        if parameter.is_schedule() {
            return Err(Error::config(sec.path("parameter"), "efficiency sweeps need a continuous drive"));
        }
        sec.finish()?;
        cfg.sweep = Some(SweepSection { parameter, values });
    }
    if let Some(mut sec) = root.section("pulse")? {
        let mut ps = cfg.pulse.clone().unwrap_or(PulseSection { widths: vec![ns(50.0)], intervals: vec![0.0] });
        if let Some(v) = sec.quantities("widths", Unit::Ns)? {
            ps.widths = v;
        }
        if let Some(v) = sec.quantities("intervals", Unit::Ns)? {
            ps.intervals = v;
        }
        if ps.widths.is_empty() || ps.widths.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::config(sec.path("widths"), "needs at least one positive width"));
        }
        if ps.intervals.is_empty() || ps.intervals.iter().any(|&t| t < 0.0) {
            return Err(Error::config(sec.path("intervals"), "needs at least one non-negative interval"));
        }
        sec.finish()?;
        cfg.pulse = Some(ps);
    }
    if let Some(mut sec) = root.section("amplitude")? {
        if let Some(v) = sec.quantities("amps", Unit::Mhz)? {
            if v.is_empty() || v.iter().any(|&a| !(a > 0.0)) {
                return Err(Error::config(sec.path("amps"), "needs at least one positive amplitude"));
            }
            cfg.amplitudes = Some(v);
        }
        sec.finish()?;
    }
    root.finish()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn experiment_alone_gives_standard_defaults() {
        let cfg = parse_config("experiment = \"simulate\"").unwrap();
        assert_eq!(cfg.params, DividerParams::fig2());
        assert_eq!(cfg.schedule, DriveSchedule::continuous(mhz(4.0)));
        assert_eq!(cfg.integrator, IntegratorConfig::default());
        assert!(cfg.sweep.is_none() && cfg.pulse.is_none() && cfg.amplitudes.is_none());
    }

    #[test]
    fn missing_and_unknown_keys_name_their_path() {
        let e = parse_config("").unwrap_err().to_string();
        assert!(e.contains("`experiment`") && e.contains("missing"), "{e}");
        let e = parse_config("experiment = \"simulate\"\n[params]\ng4 = 1.0").unwrap_err().to_string();
        assert!(e.contains("`params.g4`") && e.contains("unknown key"), "{e}");
        let e = parse_config("experiment = \"simulate\"\ncolour = 1").unwrap_err().to_string();
        assert!(e.contains("`colour`"), "{e}");
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            ("[params]\ngamma_b = 0", "params.gamma_b"),
            ("[params]\ngamma_a = -1.0", "params.gamma_a"),
            ("[params]\ng3 = \"ten MHz\"", "params.g3"),
            ("[params]\ng3 = \"10 furlongs\"", "params.g3"),
            ("[params]\ng3 = true", "params.g3"),
            ("[params]\nn_tr = 1", "params.n_tr"),
            ("[integrator]\nmethod = \"euler\"", "integrator.method"),
            ("[schedule]\nkind = \"continuous\"\ntau = 3", "schedule.tau"),
            ("[sweep]\nparameter = \"lambda\"", "sweep.values"),
            ("[amplitude]\namps = [1, -2]", "amplitude.amps"),
        ];
        for (body, path) in bad {
            let e = parse_config(&format!("experiment = \"simulate\"\n{body}")).unwrap_err();
            assert!(matches!(e, Error::Config { .. }), "{body}: {e}");
            assert!(e.to_string().contains(&format!("`{path}")), "{body}: {e}");
        }
    }

    #[test]
    fn unit_strings_match_native_numbers() {
        let a = parse_config("experiment = \"simulate\"\n[params]\nomega_b = 4.1\ng3 = 10").unwrap();
        let raw = format!("{:e} rad/s", ghz(4.1));
        let b = parse_config(&format!("experiment = \"simulate\"\n[params]\nomega_b = \"{raw}\"\ng3 = \"10 MHz\"")).unwrap();
        assert_eq!(a.params, b.params);
        let c = parse_config("experiment = \"simulate\"\n[params]\ng3 = \"0.01 GHz\"").unwrap();
        assert!((c.params.g3 - mhz(10.0)).abs() < 1e-6);
    }

    #[test]
    fn resolved_config_round_trips() {
        let texts = [
            "experiment = \"simulate\"",
            "experiment = \"detuning-sweep\"",
            "experiment = \"coupling-sweep\"\n[sweep]\nstart = 0\nstop = 10\npoints = 7",
            "experiment = \"pulse-study\"\n[pulse]\nwidths = [50, 80, 110, 150]\nintervals = [0]",
            "experiment = \"amplitude-study\"\n[params]\nn_tr_a = 5\nomega_a = \"5.1234567891234e10 rad/s\"",
            "experiment = \"steady-state\"\n[integrator]\nmethod = \"rk45\"\ndt = \"0.05 ns\"",
        ];
        for text in texts {
            let cfg = parse_config(text).unwrap();
            let again = parse_config(&cfg.to_toml()).unwrap();
            assert_eq!(cfg, again, "{text}\n{}", cfg.to_toml());
        }
    }

    #[test]
    fn sweep_range_hits_typed_values() {
        let cfg = parse_config("experiment = \"coupling-sweep\"\n[sweep]\nstart = 0\nstop = 10\npoints = 5").unwrap();
        let s = cfg.sweep.unwrap();
        assert_eq!(s.parameter, SweepParameter::Lambda);
        assert_eq!(s.values, vec![0.0, mhz(2.5), mhz(5.0), mhz(7.5), mhz(10.0)]);
    }
}
