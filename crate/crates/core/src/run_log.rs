//! Append-only JSON-lines log of a tuning run.
//!
//! Every line is one complete object with keys in lexicographic order, so the
//! files diff and grep well and a crash can only ever damage the final line.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("log write failed: {0}")]
    Write(#[source] std::io::Error),
    #[error("cannot read log {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("log contains no successful trial")]
    NoOkTrials,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Event {
    Trial,
    Phase,
    Round,
    RunStart,
    RunEnd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Error,
    Timeout,
}

mod ts_millis {
    use chrono::{DateTime, SecondsFormat, Utc};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ts: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&ts.to_rfc3339_opts(SecondsFormat::Millis, true))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let s = String::deserialize(d)?;
        DateTime::parse_from_rfc3339(&s).map(|t| t.with_timezone(&Utc)).map_err(serde::de::Error::custom)
    }
}

/// Current time truncated to the millisecond, the precision kept in the log.
pub fn now_millis() -> DateTime<Utc> {
    let now = Utc::now();
    DateTime::from_timestamp_millis(now.timestamp_millis()).unwrap_or(now)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub algorithm: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_ms: Option<u64>,
    pub event: Event,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
    #[serde(default)]
    pub phase_tag: String,
    #[serde(default)]
    pub platform_tag: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<Status>,
    #[serde(with = "ts_millis")]
    pub ts: DateTime<Utc>,
}

impl LogRecord {
    /// A non-trial event record.
    pub fn event(event: Event, algorithm: &str, platform_tag: &str, phase_tag: &str, note: String) -> Self {
        LogRecord {
            algorithm: algorithm.to_owned(),
            config: None,
            duration_ms: None,
            event,
            note,
            phase_tag: phase_tag.to_owned(),
            platform_tag: platform_tag.to_owned(),
            status: None,
            ts: now_millis(),
        }
    }

    pub fn check(&self) -> Result<(), LogError> {
        let bad = |m: &str| Err(LogError::InvalidRecord(m.to_owned()));
        match self.event {
            Event::Trial => {
                if self.config.is_none() {
                    return bad("trial without config");
                }
                match self.status {
                    None => return bad("trial without status"),
                    Some(Status::Ok) if self.duration_ms.is_none() => return bad("ok trial without duration"),
                    Some(Status::Error | Status::Timeout) if self.duration_ms.is_some() => {
                        return bad("failed trial with a duration")
                    }
                    _ => {}
                }
            }
            _ => {
                if self.config.is_some() || self.duration_ms.is_some() || self.status.is_some() {
                    return bad("trial fields on a non-trial event");
                }
            }
        }
        Ok(())
    }

    pub fn is_ok_trial(&self) -> bool {
        self.event == Event::Trial && self.status == Some(Status::Ok)
    }

    /// The serialized line, without the terminating newline.
    pub fn to_line(&self) -> String {
        // Round-tripping through `serde_json::Value` sorts the keys.
        let value = serde_json::to_value(self).expect("record serializes");
        serde_json::to_string(&value).expect("record serializes")
    }
}

pub trait LogSink: Send {
    fn append(&mut self, record: &LogRecord) -> Result<(), LogError>;
}

/// Writes one line per record and flushes after each.
pub struct JsonlWriter<W: Write + Send> {
    inner: W,
}

impl<W: Write + Send> JsonlWriter<W> {
    pub fn new(inner: W) -> Self {
        Self { inner }
    }

    pub fn into_inner(self) -> W {
        self.inner
    }
}

impl JsonlWriter<File> {
    pub fn open_append(path: &Path) -> Result<Self, LogError> {
        let file = OpenOptions::new().create(true).append(true).open(path).map_err(LogError::Write)?;
        Ok(Self::new(file))
    }
}

impl<W: Write + Send> LogSink for JsonlWriter<W> {
    fn append(&mut self, record: &LogRecord) -> Result<(), LogError> {
        record.check()?;
        let mut line = record.to_line();
        line.push('\n');
        // One write per line: with O_APPEND the line lands whole.
        self.inner.write_all(line.as_bytes()).map_err(LogError::Write)?;
        self.inner.flush().map_err(LogError::Write)
    }
}

/// In-memory sink, mostly for tests and embedding.
#[derive(Debug, Default, Clone)]
pub struct MemoryLog {
    pub records: Vec<LogRecord>,
}

impl LogSink for MemoryLog {
    fn append(&mut self, record: &LogRecord) -> Result<(), LogError> {
        record.check()?;
        self.records.push(record.clone());
        Ok(())
    }
}

impl<S: LogSink + ?Sized> LogSink for &mut S {
    fn append(&mut self, record: &LogRecord) -> Result<(), LogError> {
        (**self).append(record)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadWarning {
    /// 1-based line number.
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct LoadedLog {
    pub records: Vec<LogRecord>,
    pub warnings: Vec<LoadWarning>,
}

pub fn load(path: &Path) -> Result<LoadedLog, LogError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| LogError::Read { path: path.display().to_string(), source })?;
    Ok(parse(&text))
}

/// Parses log text. Malformed lines are skipped and reported.
pub fn parse(text: &str) -> LoadedLog {
    let mut out = LoadedLog::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<LogRecord>(line)
            .map_err(|e| e.to_string())
            .and_then(|r| r.check().map(|_| r).map_err(|e| e.to_string()));
        match parsed {
            Ok(r) => out.records.push(r),
            Err(message) => {
                tracing::warn!(line = i + 1, %message, "skipping malformed log line");
                out.warnings.push(LoadWarning { line: i + 1, message });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Best {
    pub config: BTreeMap<String, String>,
    pub duration_ms: u64,
    pub ts: DateTime<Utc>,
    pub phase_tag: String,
    /// Position in the record list.
    pub position: usize,
}

/// Fastest successful trial. Ties go to the earliest timestamp, then to the
/// earliest record.
pub fn best_of(records: &[LogRecord]) -> Result<Best, LogError> {
    records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.is_ok_trial())
        .min_by_key(|(i, r)| (r.duration_ms, r.ts, *i))
        .map(|(i, r)| Best {
            config: r.config.clone().unwrap_or_default(),
            duration_ms: r.duration_ms.unwrap_or_default(),
            ts: r.ts,
            phase_tag: r.phase_tag.clone(),
            position: i,
        })
        .ok_or(LogError::NoOkTrials)
}

/// Duration of the first successful trial whose configuration equals `defaults`.
pub fn baseline_ms(records: &[LogRecord], defaults: &BTreeMap<String, String>) -> Option<u64> {
    records.iter().find(|r| r.is_ok_trial() && r.config.as_ref() == Some(defaults)).and_then(|r| r.duration_ms)
}

/// Percentage reduction from `baseline_ms` to `best_ms`.
pub fn improvement_pct(baseline_ms: u64, best_ms: u64) -> f64 {
    (baseline_ms as f64 - best_ms as f64) / baseline_ms as f64 * 100.0
}

impl Best {
    pub fn describe(&self) -> String {
        format!("{} ms at {}", self.duration_ms, self.ts.to_rfc3339_opts(SecondsFormat::Millis, true))
    }
}
