//! Flat `key = value` run configuration with per-experiment schemas.
//!
//! Every problem found while parsing is collected; nothing stops at the
//! first error. Values from `--set` overrides win over the file and are
//! remembered for the manifest.

use std::collections::BTreeMap;
use std::fmt;

use clap::ValueEnum;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Experiment kind; one CLI subcommand each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Constants,
    Operators,
    Projections,
    Reduce,
    Simulate,
    Regime,
    Fit,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Constants => "constants",
            Kind::Operators => "operators",
            Kind::Projections => "projections",
            Kind::Reduce => "reduce",
            Kind::Simulate => "simulate",
            Kind::Regime => "regime",
            Kind::Fit => "fit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueType {
    Float,
    Int,
    Bool,
    Choice(&'static [&'static str]),
    Text,
}

impl ValueType {
    fn describe(self) -> String {
        match self {
            ValueType::Float => "a number".into(),
            ValueType::Int => "a non-negative integer".into(),
            ValueType::Bool => "true or false".into(),
            ValueType::Choice(opts) => format!("one of {}", opts.join(", ")),
            ValueType::Text => "text".into(),
        }
    }
}

/// Range rule applied after type checking.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Range {
    Any,
    Positive,
    NonNegative,
    /// Open interval.
    Between(f64, f64),
    /// Even integer of at least this size.
    EvenAtLeast(i64),
    AtLeast(i64),
}

/// Default of a key. Some defaults depend on the `mode` key.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DefaultValue {
    None,
    Fixed(&'static str),
    ByMode { nonsymmetric: &'static str, symmetric: &'static str },
}

#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub name: &'static str,
    pub ty: ValueType,
    pub range: Range,
    pub default: DefaultValue,
    pub required: bool,
    pub doc: &'static str,
}

const fn key(name: &'static str, ty: ValueType, range: Range, default: DefaultValue, doc: &'static str) -> KeySpec {
    KeySpec { name, ty, range, default, required: false, doc }
}

const fn required(name: &'static str, ty: ValueType, range: Range, doc: &'static str) -> KeySpec {
    KeySpec { name, ty, range, default: DefaultValue::None, required: true, doc }
}

const MODES: &[&str] = &["nonsymmetric", "symmetric"];
const MODELS: &[&str] = &["nonsym", "sym", "book"];
const FITS: &[&str] = &["pure_log", "log_plus_loglog", "loglog_fixed_slope"];

use DefaultValue::{ByMode, Fixed};
use Range::{AtLeast, Between, EvenAtLeast, NonNegative, Positive};
use ValueType::{Bool, Choice, Float, Int, Text};

const PROFILE: [KeySpec; 2] = [
    key("profile_half_width", Float, Positive, Fixed("60"), "half width of the profile-solve box"),
    key("profile_n", Int, EvenAtLeast(16), Fixed("8192"), "nodes of the profile-solve box"),
];

const RUN: [KeySpec; 17] = [
    required("mode", Choice(MODES), Range::Any, "nonsymmetric or symmetric initial data"),
    key("c", Float, Between(0.0, 1.0), DefaultValue::None, "amplitude of the u soliton (nonsymmetric mode)"),
    required("omega", Float, Between(0.0, 1.0), "coupling constant"),
    key("sigma0", Float, Positive, Fixed("10"), "initial separation"),
    key("grid_half_width", Float, Positive, ByMode { nonsymmetric: "80", symmetric: "40" }, "half width of the periodic box"),
    key("grid_n", Int, EvenAtLeast(16), ByMode { nonsymmetric: "2048", symmetric: "512" }, "grid nodes"),
    key("dt", Float, Positive, ByMode { nonsymmetric: "1e-3", symmetric: "5e-3" }, "time step"),
    key("t_end_factor", Float, Positive, Fixed("8"), "run until t_end_factor times t0"),
    key("sample_every", Int, AtLeast(1), Fixed("1000"), "steps between tracked samples"),
    key("snapshot_every", Int, NonNegative, Fixed("0"), "samples between field snapshots; 0 keeps only the final state"),
    key("enforce_symmetry", Bool, Range::Any, ByMode { nonsymmetric: "false", symmetric: "true" }, "project onto u(x) = v(-x) every step"),
    key("dealias", Bool, Range::Any, Fixed("false"), "apply the 2/3 rule after linear substeps"),
    key("projection_half_width", Float, Positive, Fixed("80"), "half width of the projection grid (symmetric start)"),
    key("projection_n", Int, EvenAtLeast(16), Fixed("16384"), "nodes of the projection grid"),
    key("profile_half_width", Float, Positive, Fixed("60"), "half width of the profile-solve box"),
    key("profile_n", Int, EvenAtLeast(16), Fixed("8192"), "nodes of the profile-solve box"),
    key("max_steps", Int, AtLeast(1), Fixed("50000000"), "refuse runs longer than this many steps"),
];

const REGIME_TOL: [KeySpec; 7] = [
    key("slope_tol", Float, Positive, Fixed("0.15"), "relative tolerance on the fitted slope (nonsymmetric)"),
    key("loglog_min", Float, Range::Any, Fixed("0.25"), "lower bound of the log log coefficient (symmetric)"),
    key("loglog_max", Float, Range::Any, Fixed("0.75"), "upper bound of the log log coefficient (symmetric)"),
    key("mass_tol", Float, Positive, Fixed("1e-10"), "relative mass drift bound"),
    key("energy_tol", Float, Positive, Fixed("1e-6"), "relative energy drift bound"),
    key("symmetry_tol", Float, Positive, Fixed("1e-10"), "bound on sup |u(x) - v(-x)| (symmetric)"),
    key("intercept_tol", Float, Positive, DefaultValue::None, "intercept tolerance in decay lengths"),
];

/// Keys accepted by one experiment kind.
pub fn schema(kind: Kind) -> Vec<KeySpec> {
    let mut keys = match kind {
        Kind::Constants => vec![
            required("c", Float, Between(0.0, 1.0), "amplitude of the u soliton"),
            required("omega", Float, Between(0.0, 1.0), "coupling constant"),
        ],
        Kind::Operators => vec![
            key("grid_half_width", Float, Positive, Fixed("30"), "half width of the identity-check grid"),
            key("grid_n", Int, EvenAtLeast(16), Fixed("4096"), "nodes of the identity-check grid"),
            key("c", Float, Between(0.0, 1.0), Fixed("0.5"), "c of the L_c eigenvalue probe"),
            key("omega", Float, Between(0.0, 1.0), Fixed("0.28"), "omega of the L_c eigenvalue probe"),
            key("tolerance", Float, Positive, Fixed("1e-6"), "bound on identity residuals and eigenvalue errors"),
        ],
        Kind::Projections => vec![
            key("mode", Choice(MODES), Range::Any, Fixed("nonsymmetric"), "ansatz mode"),
            key("c", Float, Between(0.0, 1.0), DefaultValue::None, "amplitude of the u soliton (nonsymmetric mode)"),
            required("omega", Float, Between(0.0, 1.0), "coupling constant"),
            key("sigma_min", Float, Positive, Fixed("10"), "first separation"),
            key("sigma_max", Float, Positive, Fixed("14"), "last separation"),
            key("sigma_step", Float, Positive, Fixed("2"), "separation step"),
            key("grid_half_width", Float, Positive, Fixed("80"), "half width of the projection grid"),
            key("grid_n", Int, EvenAtLeast(16), Fixed("16384"), "nodes of the projection grid"),
            key("ratio_tol", Float, Positive, Fixed("0.1"), "bound on |a/a_predicted - 1|"),
        ],
        Kind::Reduce => vec![
            required("model", Choice(MODELS), Range::Any, "nonsym, sym or book"),
            key("c", Float, Between(0.0, 1.0), DefaultValue::None, "c of the nonsym model"),
            key("omega", Float, Between(0.0, 1.0), DefaultValue::None, "coupling; fixes alpha_c or alpha"),
            key("alpha", Float, Positive, DefaultValue::None, "interaction constant; overrides the value derived from omega"),
            key("c_gamma", Float, Range::Any, DefaultValue::None, "phase coupling of the book model"),
            key("c_sigma", Float, Range::Any, DefaultValue::None, "separation coupling of the book model"),
            key("t0", Float, Positive, DefaultValue::None, "start time"),
            key("t_end", Float, Positive, DefaultValue::None, "end time (default 100 t0, or 200 for book)"),
            key("rel_dt", Float, Positive, Fixed("1e-3"), "step as a fraction of t (nonsym, sym)"),
            key("dt", Float, Positive, Fixed("1e-3"), "fixed step (book)"),
            key("samples_per_segment", Int, AtLeast(2), Fixed("50"), "samples per doubling of t (nonsym, sym)"),
            key("sigma0", Float, Range::Any, DefaultValue::None, "initial separation"),
            key("beta0", Float, Range::Any, DefaultValue::None, "initial beta = sigma'/2"),
            key("gamma0", Float, Range::Any, Fixed("0"), "initial phase difference (book)"),
            key("sigma_dot0", Float, Range::Any, Fixed("0"), "initial sigma' (book)"),
            key("gamma_dot0", Float, Range::Any, Fixed("0"), "initial phase velocity (book)"),
            key("scan", Bool, Range::Any, Fixed("false"), "classify a grid of starts instead of one trajectory"),
        ],
        Kind::Simulate => RUN.to_vec(),
        Kind::Regime => RUN.iter().chain(REGIME_TOL.iter()).copied().collect(),
        Kind::Fit => vec![
            required("input", Text, Range::Any, "trajectory CSV with t and y columns"),
            key("model", Choice(FITS), Range::Any, Fixed("pure_log"), "fit model"),
            key("slope", Float, Range::Any, Fixed("1"), "fixed slope of loglog_fixed_slope"),
            key("t_min", Float, Range::Any, DefaultValue::None, "window start"),
            key("t_max", Float, Range::Any, DefaultValue::None, "window end"),
            key("expected_slope", Float, Range::Any, DefaultValue::None, "slope to check against"),
            key("slope_tol", Float, Positive, Fixed("0.15"), "relative slope tolerance"),
            key("loglog_min", Float, Range::Any, DefaultValue::None, "lower bound of the log log coefficient"),
            key("loglog_max", Float, Range::Any, DefaultValue::None, "upper bound of the log log coefficient"),
        ],
    };
    if matches!(kind, Kind::Constants | Kind::Projections) {
        keys.extend(PROFILE);
    }
    if kind == Kind::Operators {
        keys.extend(PROFILE);
    }
    keys
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Value {
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl Value {
    /// Canonical text used for hashing.
    fn canonical(&self) -> String {
        match self {
            Value::Float(v) => format!("{v:.16e}"),
            Value::Int(v) => v.to_string(),
            Value::Bool(v) => v.to_string(),
            Value::Text(v) => v.clone(),
        }
    }
}

/// Where a resolved value came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "from", rename_all = "snake_case")]
pub enum Source {
    Default,
    File { line: usize },
    Override { index: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Entry {
    pub value: Value,
    pub source: Source,
}

/// One problem found in the configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub location: Option<Source>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.location {
            Some(Source::File { line }) => write!(f, "line {line}: {}", self.message),
            Some(Source::Override { index }) => write!(f, "--set #{}: {}", index + 1, self.message),
            _ => write!(f, "{}", self.message),
        }
    }
}

#[derive(Debug, Clone, Error)]
#[error("{}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("\n"))]
pub struct ConfigErrors(pub Vec<Violation>);

/// Validated configuration of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kind: Kind,
    pub entries: BTreeMap<String, Entry>,
    /// Overrides as given on the command line.
    pub overrides: Vec<String>,
}

impl RunConfig {
    fn get(&self, name: &str) -> Option<&Value> {
        self.entries.get(name).map(|e| &e.value)
    }

    pub fn opt_f64(&self, name: &str) -> Option<f64> {
        match self.get(name) {
            Some(Value::Float(v)) => Some(*v),
            Some(Value::Int(v)) => Some(*v as f64),
            _ => None,
        }
    }

    /// Value of a key with a default or a checked requirement.
    pub fn f64(&self, name: &str) -> f64 {
        self.opt_f64(name)
            .unwrap_or_else(|| panic!("key {name} is validated before use"))
    }

    pub fn usize(&self, name: &str) -> usize {
        match self.get(name) {
            Some(Value::Int(v)) => *v as usize,
            _ => panic!("key {name} is validated before use"),
        }
    }

    pub fn bool(&self, name: &str) -> bool {
        matches!(self.get(name), Some(Value::Bool(true)))
    }

    pub fn text(&self, name: &str) -> &str {
        match self.get(name) {
            Some(Value::Text(v)) => v,
            _ => panic!("key {name} is validated before use"),
        }
    }

    /// `key = value` lines of the resolved configuration, sorted by key.
    pub fn canonical(&self) -> String {
        let mut out = format!("kind = {}\n", self.kind.name());
        for (k, e) in &self.entries {
            out.push_str(&format!("{k} = {}\n", e.value.canonical()));
        }
        out
    }

    /// SHA-256 of [`RunConfig::canonical`], hex encoded.
    pub fn hash(&self) -> String {
        hex_digest(self.canonical().as_bytes())
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn parse_value(spec: &KeySpec, raw: &str) -> Result<Value, String> {
    let bad = || format!("{} must be {}, got {raw:?}", spec.name, spec.ty.describe());
    let value = match spec.ty {
        Float => {
            let v: f64 = raw.parse().map_err(|_| bad())?;
            if !v.is_finite() {
                return Err(bad());
            }
            Value::Float(v)
        }
        Int => Value::Int(raw.parse::<u32>().map_err(|_| bad())? as i64),
        Bool => Value::Bool(raw.parse().map_err(|_| bad())?),
        Choice(opts) => {
            if !opts.contains(&raw) {
                return Err(bad());
            }
            Value::Text(raw.to_string())
        }
        Text => {
            if raw.is_empty() {
                return Err(bad());
            }
            Value::Text(raw.to_string())
        }
    };
    check_range(spec, &value)?;
    Ok(value)
}

fn check_range(spec: &KeySpec, value: &Value) -> Result<(), String> {
    let x = match value {
        Value::Float(v) => *v,
        Value::Int(v) => *v as f64,
        _ => return Ok(()),
    };
    let name = spec.name;
    match spec.range {
        Range::Any => Ok(()),
        Positive if x > 0.0 => Ok(()),
        Positive => Err(format!("{name} must be positive, got {x}")),
        NonNegative if x >= 0.0 => Ok(()),
        NonNegative => Err(format!("{name} must be non-negative, got {x}")),
        Between(lo, hi) if x > lo && x < hi => Ok(()),
        Between(lo, hi) => Err(format!("{name} must lie in ({lo}, {hi}), got {x}")),
        EvenAtLeast(m) if x as i64 >= m && (x as i64) % 2 == 0 => Ok(()),
        EvenAtLeast(m) => Err(format!("{name} must be an even integer >= {m}, got {x}")),
        AtLeast(m) if x as i64 >= m => Ok(()),
        AtLeast(m) => Err(format!("{name} must be >= {m}, got {x}")),
    }
}

fn split_pair(text: &str) -> Option<(&str, &str)> {
    let (k, v) = text.split_once('=')?;
    Some((k.trim(), v.trim()))
}

/// Parses and validates a configuration for `kind`.
///
/// `overrides` are `key=value` strings applied after the file.
pub fn parse_config(kind: Kind, text: &str, overrides: &[String]) -> Result<RunConfig, ConfigErrors> {
    let specs = schema(kind);
    let lookup = |name: &str| specs.iter().find(|s| s.name == name);
    let mut errors = Vec::new();
    let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
    let mut seen_in_file: BTreeMap<String, usize> = BTreeMap::new();

    let mut accept = |name: &str, raw: &str, source: Source, errors: &mut Vec<Violation>| {
        if name == "kind" {
            if raw != kind.name() {
                errors.push(Violation {
                    location: Some(source),
                    message: format!("kind {raw:?} does not match the subcommand {:?}", kind.name()),
                });
            }
            return;
        }
        let Some(spec) = lookup(name) else {
            errors.push(Violation {
                location: Some(source),
                message: format!("unknown key {name:?} for {}", kind.name()),
            });
            return;
        };
        match parse_value(spec, raw) {
            Ok(value) => {
                entries.insert(name.to_string(), Entry { value, source });
            }
            Err(message) => errors.push(Violation { location: Some(source), message }),
        }
    };

    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let location = Source::File { line };
        let Some((name, raw)) = split_pair(content) else {
            errors.push(Violation {
                location: Some(location),
                message: format!("expected `key = value`, got {content:?}"),
            });
            continue;
        };
        if name.is_empty() {
            errors.push(Violation { location: Some(location), message: "empty key".into() });
            continue;
        }
        if let Some(first) = seen_in_file.insert(name.to_string(), line) {
            errors.push(Violation {
                location: Some(location),
                message: format!("duplicate key {name:?} (first set on line {first})"),
            });
            continue;
        }
        accept(name, raw, location, &mut errors);
    }
    for (index, item) in overrides.iter().enumerate() {
        let location = Source::Override { index };
        match split_pair(item) {
            Some((name, raw)) if !name.is_empty() => accept(name, raw, location, &mut errors),
            _ => errors.push(Violation {
                location: Some(location),
                message: format!("expected key=value, got {item:?}"),
            }),
        }
    }

    let mode = match entries.get("mode").map(|e| &e.value) {
        Some(Value::Text(m)) => Some(m.clone()),
        _ => specs
            .iter()
            .find(|s| s.name == "mode")
            .and_then(|s| match s.default {
                Fixed(d) => Some(d.to_string()),
                _ => None,
            }),
    };
    let mut missing = Vec::new();
    for spec in &specs {
        if entries.contains_key(spec.name) {
            continue;
        }
        if spec.required {
            missing.push(spec.name);
            continue;
        }
        let default = match (spec.default, mode.as_deref()) {
            (Fixed(d), _) => Some(d),
            (ByMode { symmetric, .. }, Some("symmetric")) => Some(symmetric),
            (ByMode { nonsymmetric, .. }, Some(_)) => Some(nonsymmetric),
            _ => None,
        };
        if let Some(d) = default {
            let value = parse_value(spec, d).expect("built-in defaults are valid");
            entries.insert(spec.name.to_string(), Entry { value, source: Source::Default });
        }
    }
    if !missing.is_empty() {
        errors.push(Violation {
            location: None,
            message: format!("missing required keys: {}", missing.join(", ")),
        });
    }

    let config = RunConfig { kind, entries, overrides: overrides.to_vec() };
    if errors.is_empty() {
        cross_checks(&config, &mut errors);
    }
    if errors.is_empty() {
        Ok(config)
    } else {
        Err(ConfigErrors(errors))
    }
}

fn location(config: &RunConfig, name: &str) -> Option<Source> {
    config.entries.get(name).map(|e| e.source.clone()).filter(|s| *s != Source::Default)
}

/// Rules that involve more than one key.
fn cross_checks(config: &RunConfig, errors: &mut Vec<Violation>) {
    let mut fail = |name: &str, message: String| {
        errors.push(Violation { location: location(config, name), message });
    };
    let nonsymmetric = match config.kind {
        Kind::Constants => true,
        Kind::Projections | Kind::Simulate | Kind::Regime => config.text("mode") == "nonsymmetric",
        Kind::Reduce => config.text("model") == "nonsym" && config.opt_f64("omega").is_some(),
        Kind::Operators => true,
        Kind::Fit => false,
    };
    let has_mode = matches!(config.kind, Kind::Projections | Kind::Simulate | Kind::Regime);
    if has_mode && config.text("mode") == "symmetric" && config.opt_f64("c").is_some() {
        fail("c", "c is fixed to 1 in symmetric mode; remove the key".into());
    }
    if nonsymmetric {
        match (config.opt_f64("c"), config.opt_f64("omega")) {
            (Some(c), Some(omega)) => {
                let bound = 0.5 * c * (c + 1.0);
                if omega >= bound {
                    fail(
                        "omega",
                        format!("omega = {omega} must be below c(c+1)/2 = {bound} for c = {c}"),
                    );
                }
            }
            (None, _) if config.kind != Kind::Reduce => fail("c", "c is required in nonsymmetric mode".into()),
            _ => {}
        }
    }
    match config.kind {
        Kind::Projections => {
            if config.f64("sigma_max") < config.f64("sigma_min") {
                fail("sigma_max", "sigma_max must not be below sigma_min".into());
            }
        }
        Kind::Reduce => match config.text("model") {
            "nonsym" => {
                if config.opt_f64("c").is_none() {
                    fail("c", "model nonsym needs c".into());
                }
                if config.opt_f64("omega").is_none() && config.opt_f64("alpha").is_none() {
                    fail("omega", "model nonsym needs omega or alpha".into());
                }
            }
            "sym" => {
                if config.opt_f64("omega").is_none() && config.opt_f64("alpha").is_none() {
                    fail("omega", "model sym needs omega or alpha".into());
                }
            }
            _ => {
                if config.opt_f64("c_gamma").is_none() || config.opt_f64("c_sigma").is_none() {
                    fail("c_gamma", "model book needs c_gamma and c_sigma".into());
                }
            }
        },
        Kind::Regime => {
            if config.f64("loglog_max") < config.f64("loglog_min") {
                fail("loglog_max", "loglog_max must not be below loglog_min".into());
            }
        }
        Kind::Fit => {
            if let (Some(a), Some(b)) = (config.opt_f64("t_min"), config.opt_f64("t_max")) {
                if b <= a {
                    fail("t_max", "t_max must exceed t_min".into());
                }
            }
        }
        _ => {}
    }
}

/// Documentation table of the keys of one kind, for `--help` style output.
pub fn describe(kind: Kind) -> String {
    let mut out = String::new();
    for s in schema(kind) {
        let default = match s.default {
            DefaultValue::None if s.required => "required".to_string(),
            DefaultValue::None => "optional".to_string(),
            Fixed(d) => format!("default {d}"),
            ByMode { nonsymmetric, symmetric } => {
                format!("default {nonsymmetric} (nonsymmetric) / {symmetric} (symmetric)")
            }
        };
        out.push_str(&format!("{:<22} {:<10} {}: {}\n", s.name, default, s.ty.describe(), s.doc));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn admissible_pair_is_accepted() {
        let cfg = parse_config(Kind::Constants, "c = 0.5\nomega = 0.3\n", &[]).unwrap();
        assert_eq!(cfg.f64("c"), 0.5);
        assert_eq!(cfg.usize("profile_n"), 8192);
    }

    #[test]
    fn coupling_above_bound_cites_it() {
        let err = parse_config(Kind::Constants, "c = 0.5\nomega = 0.4\n", &[]).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("0.375"), "{text}");
        assert!(text.starts_with("line 2:"), "{text}");
    }

    #[test]
    fn empty_file_lists_missing_keys() {
        let err = parse_config(Kind::Constants, "", &[]).unwrap_err();
        assert_eq!(err.0.len(), 1);
        assert!(err.0[0].message.contains("c, omega"));
    }

    #[test]
    fn every_violation_is_reported_with_its_line() {
        let text = "# header\nc = abc\nbogus = 1\nomega = 0.3\nomega = 0.2\nprofile_n = 7\n";
        let err = parse_config(Kind::Constants, text, &[]).unwrap_err();
        let lines: Vec<_> = err.0.iter().map(|v| v.location.clone()).collect();
        assert!(lines.contains(&Some(Source::File { line: 2 })));
        assert!(lines.contains(&Some(Source::File { line: 3 })));
        assert!(lines.contains(&Some(Source::File { line: 5 })));
        assert!(lines.contains(&Some(Source::File { line: 6 })));
        assert!(err.0.iter().any(|v| v.message.contains("missing required keys: c")));
    }

    #[test]
    fn overrides_win_and_are_located() {
        let cfg = parse_config(Kind::Constants, "c = 0.5\nomega = 0.3\n", &["omega=0.2".into()]).unwrap();
        assert_eq!(cfg.f64("omega"), 0.2);
        assert_eq!(cfg.entries["omega"].source, Source::Override { index: 0 });
        let err = parse_config(Kind::Constants, "c = 0.5\nomega = 0.3\n", &["nope".into()]).unwrap_err();
        assert!(err.to_string().starts_with("--set #1"));
    }

    #[test]
    fn mode_dependent_defaults() {
        let sym = parse_config(Kind::Simulate, "mode = symmetric\nomega = 0.5\n", &[]).unwrap();
        assert_eq!(sym.usize("grid_n"), 512);
        assert!(sym.bool("enforce_symmetry"));
        let non = parse_config(Kind::Simulate, "mode = nonsymmetric\nc = 0.5\nomega = 0.3\n", &[]).unwrap();
        assert_eq!(non.usize("grid_n"), 2048);
        assert!(!non.bool("enforce_symmetry"));
        let err = parse_config(Kind::Simulate, "mode = nonsymmetric\nomega = 0.3\n", &[]).unwrap_err();
        assert!(err.to_string().contains("c is required"));
    }

    #[test]
    fn hash_depends_on_resolved_values_only() {
        let a = parse_config(Kind::Constants, "c = 0.5\nomega = 0.3\n", &[]).unwrap();
        let b = parse_config(Kind::Constants, "# same\nomega = 3e-1\nc=0.50\n", &[]).unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = parse_config(Kind::Constants, "c = 0.5\nomega = 0.3\nprofile_n = 4096\n", &[]).unwrap();
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn kind_key_must_match() {
        let err = parse_config(Kind::Constants, "kind = regime\nc = 0.5\nomega = 0.3\n", &[]).unwrap_err();
        assert!(err.to_string().contains("does not match"));
        assert!(parse_config(Kind::Constants, "kind = constants\nc = 0.5\nomega = 0.3\n", &[]).is_ok());
    }
}
