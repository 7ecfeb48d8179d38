//! Configuration manager and performance evaluator.
//!
//! Search algorithms hand a [`Configuration`] to an [`Evaluator`] and get back
//! the measured execution time. Three evaluators are provided:
//!
//! * [`CommandEvaluator`] materializes templated config files, runs shell
//!   hooks and times the job command under a timeout.
//! * [`SyntheticEvaluator`] computes a separable quadratic cost model; it
//!   stands in for a cluster in tests and dry runs.
//! * [`ReplayEvaluator`] answers from recorded `(configuration, duration)` pairs.

use std::collections::{BTreeMap, HashMap};
use std::io;
use std::os::unix::process::CommandExt;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitStatus, Stdio};
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::param_space::{Configuration, Domain, ParameterSpace, SpaceError, Value};
use crate::run_log::{Event, LogRecord, Status};

#[derive(Debug, Error)]
pub enum EvalError {
    /// The evaluator could not be built (bad profile, model or template).
    #[error("setup: {0}")]
    Setup(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("replay lookup failed: no recorded result for {0}")]
    Lookup(String),
    #[error("{0}")]
    Failed(String),
    #[error("timed out after {0:?}")]
    Timeout(Duration),
    #[error("io: {0}")]
    Io(#[from] io::Error),
}

impl EvalError {
    /// Per-trial failures are recorded and the search continues; everything
    /// else aborts the run.
    pub fn is_trial_failure(&self) -> bool {
        matches!(self, EvalError::Failed(_) | EvalError::Timeout(_))
    }
}

impl From<SpaceError> for EvalError {
    fn from(e: SpaceError) -> Self {
        EvalError::InvalidConfig(e.to_string())
    }
}

pub trait Evaluator: Send + Sync {
    /// Applies `config`, runs the job and returns its wall-clock time.
    fn evaluate(&self, config: &Configuration) -> Result<Duration, EvalError>;

    /// Whether concurrent `evaluate` calls are allowed.
    fn parallel_safe(&self) -> bool {
        false
    }
}

impl<E: Evaluator + ?Sized> Evaluator for &E {
    fn evaluate(&self, config: &Configuration) -> Result<Duration, EvalError> {
        (**self).evaluate(config)
    }

    fn parallel_safe(&self) -> bool {
        (**self).parallel_safe()
    }
}

impl<E: Evaluator + ?Sized> Evaluator for Box<E> {
    fn evaluate(&self, config: &Configuration) -> Result<Duration, EvalError> {
        (**self).evaluate(config)
    }

    fn parallel_safe(&self) -> bool {
        (**self).parallel_safe()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Ok { duration_ms: u64 },
    Error(String),
    Timeout,
}

/// One evaluated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub index: usize,
    pub config: Configuration,
    pub outcome: Outcome,
    pub started_at: DateTime<Utc>,
    pub phase_tag: String,
}

impl Trial {
    pub fn duration_ms(&self) -> Option<u64> {
        match self.outcome {
            Outcome::Ok { duration_ms } => Some(duration_ms),
            _ => None,
        }
    }

    pub fn to_record(&self, space: &ParameterSpace, algorithm: &str) -> Result<LogRecord, SpaceError> {
        let (status, duration_ms, note) = match &self.outcome {
            Outcome::Ok { duration_ms } => (Status::Ok, Some(*duration_ms), String::new()),
            Outcome::Error(m) => (Status::Error, None, m.clone()),
            Outcome::Timeout => (Status::Timeout, None, String::new()),
        };
        Ok(LogRecord {
            algorithm: algorithm.to_owned(),
            config: Some(space.render(&self.config)?),
            duration_ms,
            event: Event::Trial,
            note,
            phase_tag: self.phase_tag.clone(),
            platform_tag: space.platform_tag().to_owned(),
            status: Some(status),
            ts: self.started_at,
        })
    }
}

/// Milliseconds, rounded, never below 1.
pub fn duration_to_ms(d: Duration) -> u64 {
    ((d.as_secs_f64() * 1000.0).round() as u64).max(1)
}

#[derive(Debug, Clone, PartialEq)]
enum Piece {
    Text(String),
    Param(String),
}

/// Text with `${parameter.name}` placeholders. `$${` produces a literal `${`.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pieces: Vec<Piece>,
}

impl Template {
    pub fn parse(text: &str) -> Result<Self, EvalError> {
        let mut pieces = Vec::new();
        let mut lit = String::new();
        let mut rest = text;
        while let Some(at) = rest.find('$') {
            lit.push_str(&rest[..at]);
            let tail = &rest[at..];
            if let Some(after) = tail.strip_prefix("$${") {
                lit.push_str("${");
                rest = after;
            } else if let Some(body) = tail.strip_prefix("${") {
                let end =
                    body.find('}').ok_or_else(|| EvalError::Setup(format!("unterminated placeholder in `{tail}`")))?;
                let name = body[..end].trim();
                if name.is_empty() {
                    return Err(EvalError::Setup("empty placeholder `${}`".into()));
                }
                if !lit.is_empty() {
                    pieces.push(Piece::Text(std::mem::take(&mut lit)));
                }
                pieces.push(Piece::Param(name.to_owned()));
                rest = &body[end + 1..];
            } else {
                lit.push('$');
                rest = &tail[1..];
            }
        }
        lit.push_str(rest);
        if !lit.is_empty() {
            pieces.push(Piece::Text(lit));
        }
        Ok(Self { pieces })
    }

    pub fn placeholders(&self) -> impl Iterator<Item = &str> {
        self.pieces.iter().filter_map(|p| match p {
            Piece::Param(n) => Some(n.as_str()),
            Piece::Text(_) => None,
        })
    }

    /// Fails before writing anything if a placeholder names an unknown parameter.
    pub fn check(&self, space: &ParameterSpace) -> Result<(), EvalError> {
        for name in self.placeholders() {
            if space.spec(name).is_none() {
                return Err(EvalError::Setup(format!("placeholder `${{{name}}}` names no parameter")));
            }
        }
        Ok(())
    }

    pub fn render(&self, values: &BTreeMap<String, String>) -> Result<String, EvalError> {
        let mut out = String::new();
        for p in &self.pieces {
            match p {
                Piece::Text(t) => out.push_str(t),
                Piece::Param(n) => out.push_str(
                    values.get(n).ok_or_else(|| EvalError::Setup(format!("unresolved placeholder `${{{n}}}`")))?,
                ),
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigTarget {
    pub template: PathBuf,
    pub output: PathBuf,
}

/// How to apply a configuration and run the job on one platform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformProfile {
    #[serde(default)]
    pub config_targets: Vec<ConfigTarget>,
    /// Rendered and appended to `run`, separated by a space.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arg_template: Option<String>,
    #[serde(default)]
    pub pre_run: Vec<String>,
    pub run: String,
    #[serde(default)]
    pub post_run: Vec<String>,
    pub timeout_ms: u64,
    /// Working directory for all commands. Relative paths in a profile file
    /// are resolved against the file's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workdir: Option<PathBuf>,
}

impl PlatformProfile {
    pub fn from_toml(text: &str) -> Result<Self, EvalError> {
        toml::from_str(text).map_err(|e| EvalError::Setup(format!("profile: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self, EvalError> {
        let mut p = Self::from_toml(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for t in &mut p.config_targets {
            resolve(&mut t.template);
            resolve(&mut t.output);
        }
        let mut wd = p.workdir.take().unwrap_or_else(|| PathBuf::from("."));
        resolve(&mut wd);
        p.workdir = Some(wd);
        Ok(p)
    }
}

enum Exit {
    Done(ExitStatus, Duration),
    TimedOut,
}

/// Runs `sh -c cmd` in its own process group. On timeout the whole group is
/// killed. The returned duration spans spawn to exit.
fn run_shell(cmd: &str, workdir: Option<&Path>, timeout: Duration) -> io::Result<Exit> {
    let mut command = Command::new("sh");
    command.arg("-c").arg(cmd).stdin(Stdio::null()).stdout(io::stderr()).stderr(Stdio::inherit()).process_group(0);
    if let Some(dir) = workdir {
        command.current_dir(dir);
    }
    let (tx, rx) = mpsc::channel();
    let start = Instant::now();
    let mut child = command.spawn()?;
    let pid = child.id() as libc::pid_t;
    let waiter = thread::spawn(move || {
        let status = child.wait();
        let _ = tx.send((status, Instant::now()));
    });
    match rx.recv_timeout(timeout) {
        Ok((status, end)) => {
            let _ = waiter.join();
            Ok(Exit::Done(status?, end - start))
        }
        Err(_) => {
            // SAFETY: kill(2) on our own child's process group.
            unsafe {
                libc::kill(-pid, libc::SIGKILL);
            }
            let _ = rx.recv();
            let _ = waiter.join();
            Ok(Exit::TimedOut)
        }
    }
}

fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    io::Write::write_all(&mut tmp, contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Drives a real (or stub) platform through shell commands.
pub struct CommandEvaluator {
    space: ParameterSpace,
    profile: PlatformProfile,
    targets: Vec<(Template, PathBuf)>,
    args: Option<Template>,
}

impl CommandEvaluator {
    pub fn new(space: ParameterSpace, profile: PlatformProfile) -> Result<Self, EvalError> {
        if profile.timeout_ms == 0 {
            return Err(EvalError::Setup("timeout must be positive".into()));
        }
        let mut targets = Vec::new();
        for t in &profile.config_targets {
            let text = std::fs::read_to_string(&t.template)
                .map_err(|e| EvalError::Setup(format!("template {}: {e}", t.template.display())))?;
            let tmpl = Template::parse(&text)?;
            tmpl.check(&space)?;
            targets.push((tmpl, t.output.clone()));
        }
        let args = profile.arg_template.as_deref().map(Template::parse).transpose()?;
        if let Some(a) = &args {
            a.check(&space)?;
        }
        Ok(Self { space, profile, targets, args })
    }

    fn timeout(&self) -> Duration {
        Duration::from_millis(self.profile.timeout_ms)
    }

    fn hook(&self, cmd: &str) -> Result<(), EvalError> {
        match run_shell(cmd, self.profile.workdir.as_deref(), self.timeout())? {
            Exit::Done(status, _) if status.success() => Ok(()),
            Exit::Done(status, _) => Err(EvalError::Failed(format!("`{cmd}` exited with {status}"))),
            Exit::TimedOut => Err(EvalError::Timeout(self.timeout())),
        }
    }

    fn post_run(&self) {
        for cmd in &self.profile.post_run {
            if let Err(e) = self.hook(cmd) {
                tracing::warn!(command = %cmd, error = %e, "post-run hook failed");
            }
        }
    }
}

impl Evaluator for CommandEvaluator {
    fn evaluate(&self, config: &Configuration) -> Result<Duration, EvalError> {
        self.space
            .validate(config)
            .map_err(|v| EvalError::InvalidConfig(v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")))?;
        let rendered = self.space.render(config)?;

        let mut files = Vec::with_capacity(self.targets.len());
        for (tmpl, out) in &self.targets {
            files.push((tmpl.render(&rendered)?, out));
        }
        let mut run = self.profile.run.clone();
        if let Some(args) = &self.args {
            run.push(' ');
            run.push_str(&args.render(&rendered)?);
        }
        for (text, out) in files {
            write_atomic(out, &text)?;
        }

        for cmd in &self.profile.pre_run {
            if let Err(e) = self.hook(cmd) {
                return Err(match e {
                    EvalError::Failed(m) => EvalError::Failed(format!("pre-run {m}")),
                    other => other,
                });
            }
        }

        let result = match run_shell(&run, self.profile.workdir.as_deref(), self.timeout())? {
            Exit::Done(status, elapsed) if status.success() => Ok(elapsed),
            Exit::Done(status, _) => Err(EvalError::Failed(format!("job exited with {status}"))),
            Exit::TimedOut => Err(EvalError::Timeout(self.timeout())),
        };
        self.post_run();
        result
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostTerm {
    pub weight: f64,
    pub optimum: Value,
}

/// Separable quadratic cost model:
/// `base_ms · (1 + Σ wᵢ·dᵢ²) + ε`, with `dᵢ` the range-normalized distance to
/// the optimum (0/1 mismatch for booleans and enums) and `ε ~ N(0, noise_sd)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub base_ms: u64,
    #[serde(default)]
    pub noise_sd: f64,
    #[serde(default)]
    pub seed: u64,
    pub terms: BTreeMap<String, CostTerm>,
}

impl CostModel {
    pub fn from_toml(text: &str) -> Result<Self, EvalError> {
        toml::from_str(text).map_err(|e| EvalError::Setup(format!("model: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("model serializes")
    }

    /// Optimum of every term, as a configuration.
    pub fn optimum(&self) -> Configuration {
        self.terms.iter().map(|(k, t)| (k.clone(), t.optimum.clone())).collect()
    }
}

pub struct SyntheticEvaluator {
    space: ParameterSpace,
    model: CostModel,
}

impl SyntheticEvaluator {
    pub fn new(space: ParameterSpace, mut model: CostModel) -> Result<Self, EvalError> {
        if model.base_ms == 0 {
            return Err(EvalError::Setup("base_ms must be positive".into()));
        }
        if !(model.noise_sd >= 0.0 && model.noise_sd.is_finite()) {
            return Err(EvalError::Setup("noise_sd must be a finite non-negative number".into()));
        }
        for name in model.terms.keys() {
            if space.spec(name).is_none() {
                return Err(EvalError::Setup(format!("model term `{name}` names no parameter")));
            }
        }
        for spec in space.params() {
            let term = model
                .terms
                .get_mut(&spec.name)
                .ok_or_else(|| EvalError::Setup(format!("model has no term for `{}`", spec.name)))?;
            if !(term.weight >= 0.0 && term.weight.is_finite()) {
                return Err(EvalError::Setup(format!("`{}`: weight must be >= 0", spec.name)));
            }
            let opt = spec
                .domain
                .coerce(term.optimum.clone())
                .filter(|v| spec.domain.contains(v))
                .ok_or_else(|| EvalError::Setup(format!("`{}`: optimum outside domain", spec.name)))?;
            term.optimum = opt;
        }
        Ok(Self { space, model })
    }

    pub fn model(&self) -> &CostModel {
        &self.model
    }

    /// Noise-free cost in milliseconds (unrounded).
    pub fn cost(&self, config: &Configuration) -> f64 {
        let mut penalty = 0.0;
        for spec in self.space.params() {
            let term = &self.model.terms[&spec.name];
            let Some(v) = config.get(&spec.name) else { continue };
            let d = match (&spec.domain, v.as_f64(), term.optimum.as_f64()) {
                (Domain::IntRange { .. } | Domain::FloatRange { .. }, Some(v), Some(o)) => {
                    let (min, max) = spec.domain.span().unwrap_or((0.0, 1.0));
                    if max > min {
                        (v - o) / (max - min)
                    } else {
                        0.0
                    }
                }
                _ => {
                    if *v == term.optimum {
                        0.0
                    } else {
                        1.0
                    }
                }
            };
            penalty += term.weight * d * d;
        }
        self.model.base_ms as f64 * (1.0 + penalty)
    }

    fn noise(&self, config: &Configuration) -> f64 {
        if self.model.noise_sd == 0.0 {
            return 0.0;
        }
        let mut h = Sha256::new();
        for (k, v) in config.iter() {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.to_string().as_bytes());
            h.update(b"\n");
        }
        let digest = h.finalize();
        let key = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
        let mut rng = ChaCha8Rng::seed_from_u64(self.model.seed ^ key);
        Normal::new(0.0, self.model.noise_sd).expect("valid sd").sample(&mut rng)
    }

    pub fn duration_ms(&self, config: &Configuration) -> u64 {
        (self.cost(config) + self.noise(config)).round().max(1.0) as u64
    }
}

impl Evaluator for SyntheticEvaluator {
    fn evaluate(&self, config: &Configuration) -> Result<Duration, EvalError> {
        self.space
            .validate(config)
            .map_err(|v| EvalError::InvalidConfig(v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")))?;
        Ok(Duration::from_millis(self.duration_ms(config)))
    }

    fn parallel_safe(&self) -> bool {
        true
    }
}

/// Closed-world lookup of recorded durations, keyed by rendered values.
pub struct ReplayEvaluator {
    space: ParameterSpace,
    table: HashMap<BTreeMap<String, String>, u64>,
}

impl ReplayEvaluator {
    pub fn new(space: ParameterSpace, records: Vec<(Configuration, u64)>) -> Result<Self, EvalError> {
        let mut table = HashMap::new();
        for (config, ms) in records {
            table.entry(space.render(&config)?).or_insert(ms);
        }
        Ok(Self { space, table })
    }

    /// Builds the table from the successful trials of a run log. Rendered
    /// values are normalized, so `TRUE` and `true` match.
    pub fn from_log(space: ParameterSpace, records: &[LogRecord]) -> Result<Self, EvalError> {
        let mut pairs = Vec::new();
        for r in records.iter().filter(|r| r.is_ok_trial()) {
            let rendered = r.config.as_ref().expect("checked trial has config");
            let config = space.parse_rendered(rendered)?;
            pairs.push((config, r.duration_ms.expect("ok trial has duration")));
        }
        Self::new(space, pairs)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl Evaluator for ReplayEvaluator {
    fn evaluate(&self, config: &Configuration) -> Result<Duration, EvalError> {
        let key = self.space.render(config)?;
        match self.table.get(&key) {
            Some(ms) => Ok(Duration::from_millis(*ms)),
            None => Err(EvalError::Lookup(key.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(","))),
        }
    }

    fn parallel_safe(&self) -> bool {
        true
    }
}
