//! Typed parameter domains, the built-in Hadoop and Spark spaces, sampling,
//! validation and rendering of values.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::sample_range;

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("parameter `{name}`: {reason}")]
    InvalidSpec { name: String, reason: String },
    #[error("duplicate parameter name `{0}`")]
    Duplicate(String),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("value `{value}` is not in the domain of `{name}`")]
    OutOfDomain { name: String, value: String },
    #[error("cannot parse `{text}` for `{name}`: {reason}")]
    Parse { name: String, text: String, reason: String },
    #[error("invalid bounds for `{name}`: {reason}")]
    Bounds { name: String, reason: String },
    #[error("space file: {0}")]
    File(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = SpaceError> = std::result::Result<T, E>;

/// A single parameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Value::Int(v) => Some(v as f64),
            Value::Float(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{x}"),
            Value::Str(s) => f.write_str(s),
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Str(v.to_owned())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    IntRange { min: i64, max: i64, step: i64 },
    FloatRange { min: f64, max: f64, step: f64 },
    Boolean,
    Enum { values: Vec<String> },
}

/// Rounds away binary noise from `min + i·step` so grid points render as the
/// decimals a person would write.
fn tidy(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    let digits = 12 - v.abs().log10().ceil() as i32;
    let scale = 10f64.powi(digits.clamp(0, 300));
    let t = (v * scale).round() / scale;
    if t.is_finite() {
        t
    } else {
        v
    }
}

impl Domain {
    pub fn is_range(&self) -> bool {
        matches!(self, Domain::IntRange { .. } | Domain::FloatRange { .. })
    }

    /// `(min, max)` as reals for range domains.
    pub fn span(&self) -> Option<(f64, f64)> {
        match *self {
            Domain::IntRange { min, max, .. } => Some((min as f64, max as f64)),
            Domain::FloatRange { min, max, .. } => Some((min, max)),
            _ => None,
        }
    }

    pub fn contains(&self, value: &Value) -> bool {
        match (self, value) {
            (Domain::IntRange { min, max, .. }, Value::Int(v)) => min <= v && v <= max,
            (Domain::FloatRange { min, max, .. }, Value::Float(v)) => min <= v && v <= max,
            (Domain::Boolean, Value::Bool(_)) => true,
            (Domain::Enum { values }, Value::Str(s)) => values.iter().any(|v| v == s),
            _ => false,
        }
    }

    /// Converts a loosely-typed value (as read from a file) to the domain's
    /// value variant. Does not check membership.
    pub fn coerce(&self, value: Value) -> Option<Value> {
        match (self, value) {
            (Domain::IntRange { .. }, Value::Int(v)) => Some(Value::Int(v)),
            (Domain::IntRange { .. }, Value::Float(v)) if v.fract() == 0.0 => Some(Value::Int(v as i64)),
            (Domain::FloatRange { .. }, Value::Float(v)) => Some(Value::Float(v)),
            (Domain::FloatRange { .. }, Value::Int(v)) => Some(Value::Float(v as f64)),
            (Domain::Boolean, Value::Bool(b)) => Some(Value::Bool(b)),
            (Domain::Enum { .. }, Value::Str(s)) => Some(Value::Str(s)),
            _ => None,
        }
    }

    fn check(&self) -> std::result::Result<(), String> {
        match self {
            Domain::IntRange { min, max, step } => {
                if min > max {
                    return Err(format!("min {min} > max {max}"));
                }
                if *step <= 0 {
                    return Err(format!("step {step} must be positive"));
                }
            }
            Domain::FloatRange { min, max, step } => {
                if !(min.is_finite() && max.is_finite() && step.is_finite()) {
                    return Err("range bounds must be finite".into());
                }
                if min > max {
                    return Err(format!("min {min} > max {max}"));
                }
                if *step <= 0.0 {
                    return Err(format!("step {step} must be positive"));
                }
            }
            Domain::Boolean => {}
            Domain::Enum { values } => {
                if values.is_empty() {
                    return Err("enum needs at least one value".into());
                }
                let mut seen = HashSet::new();
                for v in values {
                    if !seen.insert(v) {
                        return Err(format!("enum value `{v}` repeated"));
                    }
                }
            }
        }
        Ok(())
    }

    fn kind(&self) -> &'static str {
        match self {
            Domain::IntRange { .. } => "int",
            Domain::FloatRange { .. } => "float",
            Domain::Boolean => "bool",
            Domain::Enum { .. } => "enum",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSpec {
    pub name: String,
    pub domain: Domain,
    pub default: Value,
    /// Participates in finer tuning.
    pub influential: bool,
    /// Overrides the computed increment during finer tuning.
    pub finer_step: Option<f64>,
    /// Appended when rendering, e.g. `"k"` for `32k`.
    pub unit_suffix: Option<String>,
    /// Held at the domain maximum instead of being refined during finer tuning.
    pub pin_max: bool,
}

impl ParameterSpec {
    fn new(name: &str, domain: Domain, default: Value) -> Self {
        Self {
            name: name.to_owned(),
            domain,
            default,
            influential: false,
            finer_step: None,
            unit_suffix: None,
            pin_max: false,
        }
    }

    pub fn int(name: &str, default: i64, min: i64, max: i64, step: i64) -> Self {
        Self::new(name, Domain::IntRange { min, max, step }, Value::Int(default))
    }

    pub fn float(name: &str, default: f64, min: f64, max: f64, step: f64) -> Self {
        Self::new(name, Domain::FloatRange { min, max, step }, Value::Float(default))
    }

    pub fn boolean(name: &str, default: bool) -> Self {
        Self::new(name, Domain::Boolean, Value::Bool(default))
    }

    pub fn enumeration(name: &str, default: &str, values: &[&str]) -> Self {
        let values = values.iter().map(|s| s.to_string()).collect();
        Self::new(name, Domain::Enum { values }, Value::Str(default.to_owned()))
    }

    pub fn influential(mut self) -> Self {
        self.influential = true;
        self
    }

    pub fn with_finer_step(mut self, step: f64) -> Self {
        self.finer_step = Some(step);
        self
    }

    pub fn with_suffix(mut self, suffix: &str) -> Self {
        self.unit_suffix = Some(suffix.to_owned());
        self
    }

    pub fn pinned_at_max(mut self) -> Self {
        self.pin_max = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| SpaceError::InvalidSpec { name: self.name.clone(), reason };
        if self.name.is_empty() {
            return Err(bad("empty name".into()));
        }
        self.domain.check().map_err(bad)?;
        if !self.domain.contains(&self.default) {
            return Err(bad(format!("default {} outside domain", self.default)));
        }
        if let Some(step) = self.finer_step {
            let (min, max) = self.domain.span().ok_or_else(|| bad("finer_step on a non-range domain".into()))?;
            if !(step > 0.0 && step <= max - min) {
                return Err(bad(format!("finer_step {step} not in (0, {}]", max - min)));
            }
            if matches!(self.domain, Domain::IntRange { .. }) && step.fract() != 0.0 {
                return Err(bad(format!("finer_step {step} must be integral")));
            }
        }
        if self.pin_max && !self.domain.is_range() {
            return Err(bad("pin_max requires a range domain".into()));
        }
        Ok(())
    }

    /// Domain maximum as a value (range domains only).
    pub fn max_value(&self) -> Option<Value> {
        match self.domain {
            Domain::IntRange { max, .. } => Some(Value::Int(max)),
            Domain::FloatRange { max, .. } => Some(Value::Float(max)),
            _ => None,
        }
    }

    pub fn min_value(&self) -> Option<Value> {
        match self.domain {
            Domain::IntRange { min, .. } => Some(Value::Int(min)),
            Domain::FloatRange { min, .. } => Some(Value::Float(min)),
            _ => None,
        }
    }
}

/// Grid points of a parameter: the stepped progression (with `max` appended)
/// for ranges, `[false, true]` for booleans, the value list for enums.
pub fn sample_values(spec: &ParameterSpec) -> Vec<Value> {
    match &spec.domain {
        Domain::IntRange { min, max, step } => sample_range(*min, *max, *step).into_iter().map(Value::Int).collect(),
        Domain::FloatRange { min, max, step } => {
            let points = sample_range(*min, *max, *step);
            let last = points.len() - 1;
            // Endpoints stay exact; interior points are tidied.
            points
                .into_iter()
                .enumerate()
                .map(|(i, v)| Value::Float(if i == 0 || i == last { v } else { tidy(v) }))
                .collect()
        }
        Domain::Boolean => vec![Value::Bool(false), Value::Bool(true)],
        Domain::Enum { values } => values.iter().cloned().map(Value::Str).collect(),
    }
}

/// Uniform draw from `[lo, hi]` (ranges) or from the whole domain (booleans and
/// enums, where the bounds are ignored).
pub fn random_value<R: Rng + ?Sized>(spec: &ParameterSpec, lo: &Value, hi: &Value, rng: &mut R) -> Result<Value> {
    let bounds_err = |reason: String| SpaceError::Bounds { name: spec.name.clone(), reason };
    match &spec.domain {
        Domain::IntRange { min, max, .. } => {
            let (Value::Int(lo), Value::Int(hi)) = (lo, hi) else {
                return Err(bounds_err("integer bounds expected".into()));
            };
            if lo > hi || lo < min || hi > max {
                return Err(bounds_err(format!("[{lo}, {hi}] not within [{min}, {max}]")));
            }
            Ok(Value::Int(rng.random_range(*lo..=*hi)))
        }
        Domain::FloatRange { min, max, .. } => {
            let (Some(lo), Some(hi)) = (lo.as_f64(), hi.as_f64()) else {
                return Err(bounds_err("numeric bounds expected".into()));
            };
            if lo > hi || lo < *min || hi > *max {
                return Err(bounds_err(format!("[{lo}, {hi}] not within [{min}, {max}]")));
            }
            if lo == hi {
                return Ok(Value::Float(lo));
            }
            Ok(Value::Float(rng.random_range(lo..=hi)))
        }
        Domain::Boolean => Ok(Value::Bool(rng.random_bool(0.5))),
        Domain::Enum { values } => {
            let i = rng.random_range(0..values.len());
            Ok(Value::Str(values[i].clone()))
        }
    }
}

/// Renders a value the way it is written into platform configuration.
pub fn render_value(spec: &ParameterSpec, value: &Value) -> Result<String> {
    if !spec.domain.contains(value) {
        return Err(SpaceError::OutOfDomain { name: spec.name.clone(), value: value.to_string() });
    }
    let mut s = value.to_string();
    if spec.domain.is_range() {
        if let Some(suffix) = &spec.unit_suffix {
            s.push_str(suffix);
        }
    }
    Ok(s)
}

/// Inverse of [`render_value`].
pub fn parse_value(spec: &ParameterSpec, text: &str) -> Result<Value> {
    let err =
        |reason: &str| SpaceError::Parse { name: spec.name.clone(), text: text.to_owned(), reason: reason.to_owned() };
    let body = match (&spec.unit_suffix, spec.domain.is_range()) {
        (Some(suffix), true) => text.strip_suffix(suffix.as_str()).unwrap_or(text),
        _ => text,
    };
    let value = match &spec.domain {
        Domain::IntRange { .. } => Value::Int(body.parse().map_err(|_| err("not an integer"))?),
        Domain::FloatRange { .. } => Value::Float(body.parse().map_err(|_| err("not a number"))?),
        Domain::Boolean => match body.to_ascii_lowercase().as_str() {
            "true" => Value::Bool(true),
            "false" => Value::Bool(false),
            _ => return Err(err("expected true or false")),
        },
        Domain::Enum { .. } => Value::Str(body.to_owned()),
    };
    if !spec.domain.contains(&value) {
        return Err(SpaceError::OutOfDomain { name: spec.name.clone(), value: text.to_owned() });
    }
    Ok(value)
}

/// One value per parameter.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Configuration {
    assignments: BTreeMap<String, Value>,
}

impl Configuration {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.assignments.get(name)
    }

    pub fn set(&mut self, name: impl Into<String>, value: Value) {
        self.assignments.insert(name.into(), value);
    }

    /// Copy with one assignment replaced.
    pub fn with(&self, name: &str, value: Value) -> Self {
        let mut c = self.clone();
        c.set(name, value);
        c
    }

    pub fn remove(&mut self, name: &str) -> Option<Value> {
        self.assignments.remove(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Value)> {
        self.assignments.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }
}

impl FromIterator<(String, Value)> for Configuration {
    fn from_iter<I: IntoIterator<Item = (String, Value)>>(iter: I) -> Self {
        Self { assignments: iter.into_iter().collect() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Missing(String),
    Unknown(String),
    OutOfDomain { name: String, value: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Missing(n) => write!(f, "{n}: missing parameter"),
            Violation::Unknown(n) => write!(f, "{n}: unknown parameter"),
            Violation::OutOfDomain { name, value } => write!(f, "{name}: {value} out of domain"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSpace {
    params: Vec<ParameterSpec>,
    platform_tag: String,
}

impl ParameterSpace {
    pub fn new(platform_tag: impl Into<String>, params: Vec<ParameterSpec>) -> Result<Self> {
        let mut seen = HashSet::new();
        for p in &params {
            p.validate()?;
            if !seen.insert(p.name.clone()) {
                return Err(SpaceError::Duplicate(p.name.clone()));
            }
        }
        Ok(Self { params, platform_tag: platform_tag.into() })
    }

    pub fn params(&self) -> &[ParameterSpec] {
        &self.params
    }

    pub fn platform_tag(&self) -> &str {
        &self.platform_tag
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn spec(&self, name: &str) -> Option<&ParameterSpec> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    pub fn require(&self, name: &str) -> Result<&ParameterSpec> {
        self.spec(name).ok_or_else(|| SpaceError::UnknownParameter(name.to_owned()))
    }

    pub fn defaults(&self) -> Configuration {
        self.params.iter().map(|p| (p.name.clone(), p.default.clone())).collect()
    }

    pub fn validate(&self, config: &Configuration) -> std::result::Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        for p in &self.params {
            match config.get(&p.name) {
                None => out.push(Violation::Missing(p.name.clone())),
                Some(v) if !p.domain.contains(v) => {
                    out.push(Violation::OutOfDomain { name: p.name.clone(), value: v.to_string() })
                }
                Some(_) => {}
            }
        }
        for (name, _) in config.iter() {
            if self.spec(name).is_none() {
                out.push(Violation::Unknown(name.to_owned()));
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    /// Rendered `name → string` view of a configuration, in the form written to
    /// logs and platform files.
    pub fn render(&self, config: &Configuration) -> Result<BTreeMap<String, String>> {
        config
            .iter()
            .map(|(name, v)| {
                let spec = self.require(name)?;
                Ok((name.to_owned(), render_value(spec, v)?))
            })
            .collect()
    }

    /// Inverse of [`render`](Self::render). Every parameter must be present.
    pub fn parse_rendered(&self, rendered: &BTreeMap<String, String>) -> Result<Configuration> {
        let mut config = Configuration::new();
        for (name, text) in rendered {
            let spec = self.require(name)?;
            config.set(name.clone(), parse_value(spec, text)?);
        }
        if let Err(v) = self.validate(&config) {
            return Err(SpaceError::File(v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")));
        }
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: SpaceFile = toml::from_str(text).map_err(|e| SpaceError::File(e.to_string()))?;
        let params = file.param.into_iter().map(ParamRecord::into_spec).collect::<Result<_>>()?;
        Self::new(file.platform, params)
    }

    /// Serializes to the parameter-space file format. Output depends only on
    /// the space, so repeated dumps are byte-identical.
    pub fn to_toml(&self) -> String {
        let file = SpaceFile {
            platform: self.platform_tag.clone(),
            param: self.params.iter().map(ParamRecord::from_spec).collect(),
        };
        toml::to_string(&file).expect("space serializes")
    }
}

#[derive(Serialize, Deserialize)]
struct SpaceFile {
    platform: String,
    #[serde(default)]
    param: Vec<ParamRecord>,
}

#[derive(Serialize, Deserialize)]
struct ParamRecord {
    name: String,
    #[serde(rename = "type")]
    kind: String,
    default: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    min: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    step: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    finer_step: Option<f64>,
    #[serde(default, skip_serializing_if = "is_false")]
    influential: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pin_max: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    unit_suffix: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<String>>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

impl ParamRecord {
    fn from_spec(p: &ParameterSpec) -> Self {
        let (min, max, step, values) = match &p.domain {
            Domain::IntRange { min, max, step } => {
                (Some(Value::Int(*min)), Some(Value::Int(*max)), Some(Value::Int(*step)), None)
            }
            Domain::FloatRange { min, max, step } => {
                (Some(Value::Float(*min)), Some(Value::Float(*max)), Some(Value::Float(*step)), None)
            }
            Domain::Boolean => (None, None, None, None),
            Domain::Enum { values } => (None, None, None, Some(values.clone())),
        };
        ParamRecord {
            name: p.name.clone(),
            kind: p.domain.kind().to_owned(),
            default: p.default.clone(),
            min,
            max,
            step,
            finer_step: p.finer_step,
            influential: p.influential,
            pin_max: p.pin_max,
            unit_suffix: p.unit_suffix.clone(),
            values,
        }
    }

    fn into_spec(self) -> Result<ParameterSpec> {
        let name = self.name;
        let bad = |reason: &str| SpaceError::InvalidSpec { name: name.clone(), reason: reason.into() };
        let num = |v: &Option<Value>, field: &str| -> Result<f64> {
            v.as_ref().and_then(Value::as_f64).ok_or_else(|| bad(&format!("`{field}` missing or not a number")))
        };
        let int = |v: &Option<Value>, field: &str| -> Result<i64> {
            match v {
                Some(Value::Int(i)) => Ok(*i),
                _ => Err(bad(&format!("`{field}` missing or not an integer"))),
            }
        };
        let domain = match self.kind.as_str() {
            "int" => Domain::IntRange {
                min: int(&self.min, "min")?,
                max: int(&self.max, "max")?,
                step: int(&self.step, "step")?,
            },
            "float" => Domain::FloatRange {
                min: num(&self.min, "min")?,
                max: num(&self.max, "max")?,
                step: num(&self.step, "step")?,
            },
            "bool" => Domain::Boolean,
            "enum" => Domain::Enum { values: self.values.clone().ok_or_else(|| bad("`values` missing"))? },
            other => return Err(bad(&format!("unknown type `{other}`"))),
        };
        let default = domain.coerce(self.default).ok_or_else(|| bad("default has the wrong type"))?;
        Ok(ParameterSpec {
            name: name.clone(),
            domain,
            default,
            influential: self.influential,
            finer_step: self.finer_step,
            unit_suffix: self.unit_suffix,
            pin_max: self.pin_max,
        })
    }
}

pub const HADOOP_MEMORY_MB: &str = "mapreduce.map.memory.mb";
pub const HADOOP_BLOCKSIZE: &str = "dfs.blocksize";
pub const HADOOP_MAP_TASKS_MAX: &str = "mapreduce.tasktracker.map.tasks.maximum";
pub const HADOOP_OUTPUT_COMPRESS: &str = "mapreduce.map.output.compress";
pub const HADOOP_REPLICATION: &str = "dfs.replication";
pub const SPARK_TASK_CPUS: &str = "spark.task.cpus";
pub const SPARK_STORAGE_FRACTION: &str = "spark.memory.storageFraction";
pub const SPARK_NETWORK_TIMEOUT: &str = "spark.network.timeout";
pub const SPARK_MEMORY_FRACTION: &str = "spark.memory.fraction";
pub const SPARK_SHUFFLE_BUFFER: &str = "spark.shuffle.file.buffer";
pub const SPARK_SCHEDULER_MODE: &str = "spark.scheduler.mode";

/// The twelve Hadoop MapReduce parameters. `dfs.blocksize` is in megabytes.
pub fn preset_hadoop() -> ParameterSpace {
    let params = vec![
        ParameterSpec::int(HADOOP_MEMORY_MB, 1024, 256, 3072, 256).influential().with_finer_step(32.0),
        ParameterSpec::int(HADOOP_BLOCKSIZE, 128, 32, 256, 32).influential().with_finer_step(8.0),
        ParameterSpec::int(HADOOP_MAP_TASKS_MAX, 2, 2, 128, 16),
        ParameterSpec::float("mapreduce.job.reduce.slowstart.completedmaps", 0.05, 0.025, 0.9, 0.125),
        ParameterSpec::boolean(HADOOP_OUTPUT_COMPRESS, false),
        ParameterSpec::int("mapreduce.job.reduces", 1, 1, 4, 1),
        ParameterSpec::int("mapreduce.task.io.sort.mb", 100, 32, 128, 32),
        ParameterSpec::int("mapreduce.job.maps", 2, 2, 32, 6),
        ParameterSpec::int("mapreduce.task.io.sort.factor", 10, 5, 80, 15),
        ParameterSpec::int(HADOOP_REPLICATION, 3, 1, 3, 1),
        ParameterSpec::int("mapreduce.tasktracker.reduce.tasks.maximum", 2, 2, 128, 16),
        ParameterSpec::int("mapreduce.job.jvm.numtasks", 1, 1, 1024, 128),
    ];
    ParameterSpace::new("hadoop", params).expect("hadoop preset is valid")
}

/// The eleven Spark parameters. `spark.shuffle.file.buffer` is in KiB and
/// `spark.storage.memoryMapThreshold` in MiB, rendered with `k`/`m` suffixes.
pub fn preset_spark() -> ParameterSpace {
    let params = vec![
        ParameterSpec::int(SPARK_TASK_CPUS, 1, 1, 5, 1).influential().pinned_at_max(),
        ParameterSpec::float(SPARK_STORAGE_FRACTION, 0.5, 0.25, 0.9, 0.1).influential().with_finer_step(0.25),
        ParameterSpec::int(SPARK_NETWORK_TIMEOUT, 120, 40, 200, 40).influential().with_finer_step(20.0),
        ParameterSpec::float(SPARK_MEMORY_FRACTION, 0.6, 0.25, 0.8, 0.1),
        ParameterSpec::int(SPARK_SHUFFLE_BUFFER, 32, 16, 512, 112).with_suffix("k"),
        ParameterSpec::int("spark.scheduler.listenerbus.eventqueue.capacity", 10000, 2500, 25000, 2500),
        ParameterSpec::int("spark.files.openCostInBytes", 4194304, 1048576, 16777216, 3145728),
        ParameterSpec::int("spark.storage.memoryMapThreshold", 2, 1, 5, 1).with_suffix("m"),
        ParameterSpec::int("spark.files.maxPartitionBytes", 134217728, 33554432, 1073741824, 100663296),
        ParameterSpec::int("spark.default.parallelism", 24, 4, 24, 4),
        ParameterSpec::enumeration(SPARK_SCHEDULER_MODE, "FIFO", &["FIFO", "FAIR"]),
    ];
    ParameterSpace::new("spark", params).expect("spark preset is valid")
}

/// Looks up a built-in space by name.
pub fn preset(name: &str) -> Option<ParameterSpace> {
    match name {
        "hadoop" => Some(preset_hadoop()),
        "spark" => Some(preset_spark()),
        _ => None,
    }
}
