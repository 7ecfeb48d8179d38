//! Bookkeeping shared by the search algorithms: trial numbering, the global
//! incumbent, log emission and (optionally parallel) batch evaluation.

use std::ops::Range;
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use chrono::{DateTime, Utc};
use thiserror::Error;

use crate::cmpe::{duration_to_ms, EvalError, Evaluator, Outcome, Trial};
use crate::param_space::{Configuration, ParameterSpace, SpaceError};
use crate::run_log::{now_millis, Event, LogError, LogRecord, LogSink};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("invalid options: {0}")]
    Options(String),
    #[error("grid has {size} configurations, above the limit of {limit}")]
    GridTooLarge { size: u128, limit: usize },
    #[error("no successful trial in {0}")]
    NoIncumbent(String),
    #[error("round {round}: only {successes} of the {needed} required trials succeeded")]
    Round { round: usize, successes: usize, needed: usize },
    #[error(transparent)]
    Evaluator(#[from] EvalError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSummary {
    pub tag: String,
    pub trials: usize,
    pub incumbent_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TunerResult {
    pub best_config: Configuration,
    pub best_time_ms: u64,
    pub trials: Vec<Trial>,
    pub phases: Vec<PhaseSummary>,
    /// Set when the search stopped early but still has an incumbent.
    pub warning: Option<String>,
}

impl TunerResult {
    /// Incumbent time after each trial (`None` until the first success).
    pub fn incumbent_trace(&self) -> Vec<Option<u64>> {
        let mut best: Option<u64> = None;
        self.trials
            .iter()
            .map(|t| {
                if let Some(ms) = t.duration_ms() {
                    best = Some(best.map_or(ms, |b| b.min(ms)));
                }
                best
            })
            .collect()
    }
}

type Stamped = (DateTime<Utc>, Result<Duration, EvalError>);

/// One tuning run: owns the trial list and funnels every record through the
/// single log sink.
pub struct Session<'a> {
    space: &'a ParameterSpace,
    evaluator: &'a dyn Evaluator,
    sink: &'a mut dyn LogSink,
    algorithm: String,
    max_parallel: usize,
    trials: Vec<Trial>,
    incumbent: Option<usize>,
    phases: Vec<PhaseSummary>,
    warning: Option<String>,
}

impl<'a> Session<'a> {
    pub fn new(
        space: &'a ParameterSpace,
        evaluator: &'a dyn Evaluator,
        sink: &'a mut dyn LogSink,
        algorithm: &str,
    ) -> Self {
        Self {
            space,
            evaluator,
            sink,
            algorithm: algorithm.to_owned(),
            max_parallel: 1,
            trials: Vec::new(),
            incumbent: None,
            phases: Vec::new(),
            warning: None,
        }
    }

    /// Upper bound on concurrent evaluations. Only honoured for evaluators
    /// that declare themselves parallel-safe.
    pub fn with_max_parallel(mut self, n: usize) -> Self {
        self.max_parallel = n.max(1);
        self
    }

    pub fn space(&self) -> &ParameterSpace {
        self.space
    }

    pub fn trials(&self) -> &[Trial] {
        &self.trials
    }

    pub fn incumbent(&self) -> Option<&Trial> {
        self.incumbent.map(|i| &self.trials[i])
    }

    pub fn incumbent_ms(&self) -> Option<u64> {
        self.incumbent().and_then(Trial::duration_ms)
    }

    pub fn set_warning(&mut self, w: String) {
        tracing::warn!("{w}");
        self.warning = Some(w);
    }

    pub fn log_event(&mut self, event: Event, phase_tag: &str, note: String) -> Result<(), SearchError> {
        let rec = LogRecord::event(event, &self.algorithm, self.space.platform_tag(), phase_tag, note);
        self.sink.append(&rec)?;
        Ok(())
    }

    pub fn start(&mut self, note: String) -> Result<(), SearchError> {
        self.log_event(Event::RunStart, "", note)
    }

    /// Closes a phase: records its summary and emits a phase (or round) event.
    pub fn end_phase(&mut self, event: Event, tag: &str, trials: usize, note: &str) -> Result<(), SearchError> {
        let incumbent_ms = self.incumbent_ms();
        self.phases.push(PhaseSummary { tag: tag.to_owned(), trials, incumbent_ms });
        let mut text = format!("trials={trials}");
        if let Some(ms) = incumbent_ms {
            text.push_str(&format!(" incumbent_ms={ms}"));
        }
        if !note.is_empty() {
            text.push(' ');
            text.push_str(note);
        }
        self.log_event(event, tag, text)
    }

    fn evaluate_all(&self, configs: &[Configuration]) -> Vec<Stamped> {
        let workers = self.max_parallel.min(configs.len());
        if workers <= 1 || !self.evaluator.parallel_safe() {
            return configs.iter().map(|c| (now_millis(), self.evaluator.evaluate(c))).collect();
        }
        // Indices and start stamps are taken under one lock so timestamps are
        // monotone in trial order.
        let next = Mutex::new(0usize);
        let results: Mutex<Vec<Option<Stamped>>> = Mutex::new((0..configs.len()).map(|_| None).collect());
        thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let (i, ts) = {
                        let mut n = next.lock().expect("lock");
                        if *n >= configs.len() {
                            break;
                        }
                        let i = *n;
                        *n += 1;
                        (i, now_millis())
                    };
                    let r = self.evaluator.evaluate(&configs[i]);
                    results.lock().expect("lock")[i] = Some((ts, r));
                });
            }
        });
        results.into_inner().expect("lock").into_iter().map(|r| r.expect("every index evaluated")).collect()
    }

    /// Evaluates `configs` in order (concurrently when allowed), logs each
    /// trial and updates the incumbent on strict improvement. Returns the
    /// range of trial indices produced.
    ///
    /// A non-trial evaluator error is logged as a failed trial and then aborts.
    pub fn evaluate_batch(&mut self, configs: &[Configuration], phase: &str) -> Result<Range<usize>, SearchError> {
        let first = self.trials.len();
        if self.max_parallel > 1 && self.evaluator.parallel_safe() {
            let results = self.evaluate_all(configs);
            for (config, (ts, r)) in configs.iter().zip(results) {
                self.record(config.clone(), ts, r, phase)?;
            }
        } else {
            for config in configs {
                let ts = now_millis();
                let r = self.evaluator.evaluate(config);
                self.record(config.clone(), ts, r, phase)?;
            }
        }
        Ok(first..self.trials.len())
    }

    fn record(
        &mut self,
        config: Configuration,
        started_at: DateTime<Utc>,
        result: Result<Duration, EvalError>,
        phase: &str,
    ) -> Result<(), SearchError> {
        let (outcome, fatal) = match result {
            Ok(d) => (Outcome::Ok { duration_ms: duration_to_ms(d) }, None),
            Err(EvalError::Timeout(_)) => (Outcome::Timeout, None),
            Err(e) if e.is_trial_failure() => (Outcome::Error(e.to_string()), None),
            Err(e) => (Outcome::Error(e.to_string()), Some(e)),
        };
        let trial = Trial { index: self.trials.len(), config, outcome, started_at, phase_tag: phase.to_owned() };
        let rec = trial.to_record(self.space, &self.algorithm);
        match rec {
            Ok(rec) => self.sink.append(&rec)?,
            Err(e) if fatal.is_none() => return Err(e.into()),
            // The config itself could not be rendered; the evaluator error says why.
            Err(_) => {}
        }
        if let Some(e) = fatal {
            return Err(e.into());
        }
        if let Some(ms) = trial.duration_ms() {
            if self.incumbent_ms().is_none_or(|best| ms < best) {
                self.incumbent = Some(trial.index);
            }
        }
        self.trials.push(trial);
        Ok(())
    }

    /// Emits the run-end event and assembles the result.
    pub fn finish(mut self) -> Result<TunerResult, SearchError> {
        let Some(idx) = self.incumbent else {
            self.log_event(Event::RunEnd, "", "no incumbent".into())?;
            return Err(SearchError::NoIncumbent("the run".into()));
        };
        let best = self.trials[idx].clone();
        let best_ms = best.duration_ms().expect("incumbent succeeded");
        let note = format!("trials={} best_ms={best_ms} best_trial={idx}", self.trials.len());
        self.log_event(Event::RunEnd, "", note)?;
        Ok(TunerResult {
            best_config: best.config,
            best_time_ms: best_ms,
            trials: self.trials,
            phases: self.phases,
            warning: self.warning,
        })
    }
}
