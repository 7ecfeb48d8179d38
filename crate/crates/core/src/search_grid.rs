//! Grid search with finer tuning.
//!
//! Phase one evaluates the cartesian product of the sampled grid. Phase two
//! re-centres a narrow window on the incumbent for each influential parameter,
//! samples it at the finer increment, pins every other parameter to its
//! incumbent value and evaluates that grid as well.

use std::collections::{BTreeMap, BTreeSet};

use crate::cmpe::Evaluator;
use crate::num::{finer_window, FinerWindow};
use crate::param_space::{
    sample_values, Configuration, Domain, ParameterSpace, ParameterSpec, Value, HADOOP_BLOCKSIZE, HADOOP_MAP_TASKS_MAX,
    HADOOP_MEMORY_MB, HADOOP_OUTPUT_COMPRESS, HADOOP_REPLICATION, SPARK_MEMORY_FRACTION, SPARK_NETWORK_TIMEOUT,
    SPARK_SCHEDULER_MODE, SPARK_SHUFFLE_BUFFER, SPARK_STORAGE_FRACTION, SPARK_TASK_CPUS,
};
use crate::run_log::{Event, LogSink};
use crate::session::{SearchError, Session, TunerResult};

pub const PHASE_GRID: &str = "grid";
pub const PHASE_FINER: &str = "finer";

/// Per-parameter candidate lists, in space order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrid {
    entries: Vec<(String, Vec<Value>)>,
}

impl ParamGrid {
    pub fn candidates(&self, name: &str) -> Option<&[Value]> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn entries(&self) -> &[(String, Vec<Value>)] {
        &self.entries
    }

    /// Number of configurations in the cartesian product.
    pub fn size(&self) -> u128 {
        self.entries.iter().map(|(_, v)| v.len() as u128).product()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GridOptions {
    /// Parameters enumerated by the grid.
    pub sweep: BTreeSet<String>,
    /// Values for every parameter not swept.
    pub fixed: BTreeMap<String, Value>,
    /// Influential parameters refined in the second phase.
    pub finer_params: Vec<String>,
    /// Refuse grids larger than this.
    pub max_trials: Option<usize>,
}

impl GridOptions {
    /// Sweeps `sweep`, fixes the rest at their defaults and refines every
    /// influential range parameter.
    pub fn sweeping(space: &ParameterSpace, sweep: &[&str]) -> Self {
        let sweep: BTreeSet<String> = sweep.iter().map(|s| s.to_string()).collect();
        let fixed = space
            .params()
            .iter()
            .filter(|p| !sweep.contains(&p.name))
            .map(|p| (p.name.clone(), p.default.clone()))
            .collect();
        let finer_params =
            space.params().iter().filter(|p| p.influential && p.domain.is_range()).map(|p| p.name.clone()).collect();
        Self { sweep, fixed, finer_params, max_trials: None }
    }

    pub fn sweep_all(space: &ParameterSpace) -> Self {
        let names: Vec<&str> = space.params().iter().map(|p| p.name.as_str()).collect();
        Self::sweeping(space, &names)
    }

    /// Moves `name` from the sweep to the fixed set.
    pub fn fix(mut self, name: &str, value: Value) -> Self {
        self.sweep.remove(name);
        self.fixed.insert(name.to_owned(), value);
        self
    }

    /// Hadoop phase-one sweep: memory, block size and map slots; replication 1
    /// and compressed map output; everything else at defaults.
    pub fn hadoop_preset(space: &ParameterSpace) -> Self {
        Self::sweeping(space, &[HADOOP_MEMORY_MB, HADOOP_BLOCKSIZE, HADOOP_MAP_TASKS_MAX])
            .fix(HADOOP_REPLICATION, Value::Int(1))
            .fix(HADOOP_OUTPUT_COMPRESS, Value::Bool(true))
    }

    /// Spark phase-one sweep over the five most sensitive parameters with the
    /// FAIR scheduler.
    pub fn spark_preset(space: &ParameterSpace) -> Self {
        Self::sweeping(
            space,
            &[
                SPARK_TASK_CPUS,
                SPARK_STORAGE_FRACTION,
                SPARK_NETWORK_TIMEOUT,
                SPARK_SHUFFLE_BUFFER,
                SPARK_MEMORY_FRACTION,
            ],
        )
        .fix(SPARK_SCHEDULER_MODE, Value::from("FAIR"))
    }

    /// The canned options for a built-in space, or [`sweep_all`](Self::sweep_all).
    pub fn preset_for(space: &ParameterSpace) -> Self {
        match space.platform_tag() {
            "hadoop" if space.spec(HADOOP_MEMORY_MB).is_some() => Self::hadoop_preset(space),
            "spark" if space.spec(SPARK_TASK_CPUS).is_some() => Self::spark_preset(space),
            _ => Self::sweep_all(space),
        }
    }

    pub fn validate(&self, space: &ParameterSpace) -> Result<(), SearchError> {
        let err = |m: String| Err(SearchError::Options(m));
        for name in self.sweep.iter().chain(self.fixed.keys()) {
            if space.spec(name).is_none() {
                return err(format!("unknown parameter `{name}`"));
            }
        }
        for p in space.params() {
            match (self.sweep.contains(&p.name), self.fixed.contains_key(&p.name)) {
                (true, true) => return err(format!("`{}` is both swept and fixed", p.name)),
                (false, false) => return err(format!("`{}` is neither swept nor fixed", p.name)),
                _ => {}
            }
        }
        for name in &self.finer_params {
            let Some(spec) = space.spec(name) else {
                return err(format!("unknown finer parameter `{name}`"));
            };
            if !spec.influential {
                return err(format!("finer parameter `{name}` is not influential"));
            }
            if !spec.domain.is_range() {
                return err(format!("finer parameter `{name}` is not numeric"));
            }
        }
        Ok(())
    }
}

pub fn build_grid(space: &ParameterSpace, options: &GridOptions) -> Result<ParamGrid, SearchError> {
    options.validate(space)?;
    let mut entries = Vec::with_capacity(space.len());
    for spec in space.params() {
        let values = if options.sweep.contains(&spec.name) {
            sample_values(spec)
        } else {
            let v =
                spec.domain.coerce(options.fixed[&spec.name].clone()).filter(|v| spec.domain.contains(v)).ok_or_else(
                    || crate::param_space::SpaceError::OutOfDomain {
                        name: spec.name.clone(),
                        value: options.fixed[&spec.name].to_string(),
                    },
                )?;
            vec![v]
        };
        entries.push((spec.name.clone(), values));
    }
    Ok(ParamGrid { entries })
}

/// Cartesian product in odometer order: the last parameter varies fastest.
pub fn enumerate(grid: &ParamGrid, max_trials: Option<usize>) -> Result<Vec<Configuration>, SearchError> {
    let size = grid.size();
    if let Some(limit) = max_trials {
        if size > limit as u128 {
            return Err(SearchError::GridTooLarge { size, limit });
        }
    }
    if grid.entries.iter().any(|(_, v)| v.is_empty()) {
        return Ok(Vec::new());
    }
    let mut out = Vec::with_capacity(size.min(1 << 20) as usize);
    let mut digits = vec![0usize; grid.entries.len()];
    loop {
        out.push(
            grid.entries.iter().zip(&digits).map(|((name, values), &d)| (name.clone(), values[d].clone())).collect(),
        );
        let mut pos = digits.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < grid.entries[pos].1.len() {
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// Best of one evaluated batch.
#[derive(Debug, Clone, PartialEq)]
pub struct GridOutcome {
    pub best_config: Configuration,
    pub best_time_ms: u64,
    pub trial_count: usize,
}

/// Evaluates every configuration. The batch best changes only on strict
/// improvement, so ties keep the earlier configuration; failed trials are
/// logged but never become best.
pub fn grid_search(
    session: &mut Session<'_>,
    configs: &[Configuration],
    phase: &str,
) -> Result<GridOutcome, SearchError> {
    if configs.is_empty() {
        return Err(SearchError::Options(format!("phase `{phase}` has no configurations")));
    }
    let range = session.evaluate_batch(configs, phase)?;
    let trials = &session.trials()[range.clone()];
    let mut best: Option<(usize, u64)> = None;
    for (i, t) in trials.iter().enumerate() {
        if let Some(ms) = t.duration_ms() {
            if best.is_none_or(|(_, b)| ms < b) {
                best = Some((i, ms));
            }
        }
    }
    let (i, ms) = best.ok_or_else(|| SearchError::NoIncumbent(format!("phase `{phase}`")))?;
    Ok(GridOutcome { best_config: trials[i].config.clone(), best_time_ms: ms, trial_count: range.len() })
}

/// Finer window for a range parameter, as reals.
///
/// `old_lower`/`old_upper` are the first and last phase-one candidates.
pub fn finer_window_for(
    spec: &ParameterSpec,
    best: f64,
    old_lower: f64,
    old_upper: f64,
) -> Result<FinerWindow<f64>, SearchError> {
    if !(old_lower <= best && best <= old_upper) {
        return Err(SearchError::Options(format!(
            "`{}`: best value {best} outside [{old_lower}, {old_upper}]",
            spec.name
        )));
    }
    match spec.domain {
        Domain::IntRange { min, max, .. } => {
            let w = finer_window::<i64>(
                best.round() as i64,
                old_lower.round() as i64,
                min,
                max,
                spec.finer_step.map(|s| s.round() as i64),
            );
            Ok(FinerWindow { lower: w.lower as f64, upper: w.upper as f64, increment: w.increment as f64 })
        }
        Domain::FloatRange { min, max, .. } => Ok(finer_window(best, old_lower, min, max, spec.finer_step)),
        _ => Err(SearchError::Options(format!("`{}`: finer tuning needs a numeric domain", spec.name))),
    }
}

fn window_values(spec: &ParameterSpec, w: &FinerWindow<f64>) -> Vec<Value> {
    match spec.domain {
        Domain::IntRange { .. } => {
            let w = FinerWindow { lower: w.lower as i64, upper: w.upper as i64, increment: w.increment as i64 };
            w.samples().into_iter().map(Value::Int).collect()
        }
        _ => {
            // Reuse the domain's tidy float grid by sampling a temporary spec.
            if w.is_point() {
                return vec![Value::Float(w.lower)];
            }
            let tmp = ParameterSpec::float(&spec.name, w.lower, w.lower, w.upper, w.increment);
            sample_values(&tmp)
        }
    }
}

/// Second-phase grid around `best`.
pub fn finer_grid(
    space: &ParameterSpace,
    phase_one: &ParamGrid,
    finer_params: &[String],
    best: &Configuration,
) -> Result<ParamGrid, SearchError> {
    let mut entries = Vec::with_capacity(space.len());
    for spec in space.params() {
        let best_v = best
            .get(&spec.name)
            .cloned()
            .ok_or_else(|| SearchError::Options(format!("incumbent lacks `{}`", spec.name)))?;
        let values = if !finer_params.contains(&spec.name) {
            vec![best_v]
        } else if spec.pin_max {
            vec![spec.max_value().expect("pin_max implies a range domain")]
        } else {
            let cands = phase_one.candidates(&spec.name).unwrap_or_default();
            let b = best_v.as_f64().expect("range value");
            let first = cands.first().and_then(Value::as_f64).unwrap_or(b);
            let last = cands.last().and_then(Value::as_f64).unwrap_or(b);
            // The incumbent may come from outside this grid (a baseline run).
            let w = finer_window_for(spec, b, first.min(b), last.max(b))?;
            window_values(spec, &w)
        };
        entries.push((spec.name.clone(), values));
    }
    Ok(ParamGrid { entries })
}

/// Runs both phases inside an existing session.
pub fn run_grid_finer(session: &mut Session<'_>, options: &GridOptions) -> Result<(), SearchError> {
    let space = session.space().clone();
    let grid = build_grid(&space, options)?;
    let configs = enumerate(&grid, options.max_trials)?;
    let outcome = grid_search(session, &configs, PHASE_GRID)?;
    session.end_phase(
        Event::Phase,
        PHASE_GRID,
        outcome.trial_count,
        &format!("phase_best_ms={}", outcome.best_time_ms),
    )?;

    if options.finer_params.is_empty() {
        return Ok(());
    }
    let incumbent = session.incumbent().expect("phase one succeeded").config.clone();
    let fine = finer_grid(&space, &grid, &options.finer_params, &incumbent)?;
    let configs = enumerate(&fine, options.max_trials)?;
    let outcome = grid_search(session, &configs, PHASE_FINER)?;
    session.end_phase(
        Event::Phase,
        PHASE_FINER,
        outcome.trial_count,
        &format!("phase_best_ms={}", outcome.best_time_ms),
    )?;
    Ok(())
}

/// Grid search with finer tuning as a standalone run.
pub fn tune_grid_finer(
    space: &ParameterSpace,
    evaluator: &dyn Evaluator,
    options: &GridOptions,
    sink: &mut dyn LogSink,
    max_parallel: usize,
) -> Result<TunerResult, SearchError> {
    let mut session = Session::new(space, evaluator, sink, "grid").with_max_parallel(max_parallel);
    session.start(String::new())?;
    run_grid_finer(&mut session, options)?;
    session.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::param_space::{preset_hadoop, preset_spark};

    #[test]
    fn hadoop_preset_grid() {
        let space = preset_hadoop();
        let grid = build_grid(&space, &GridOptions::hadoop_preset(&space)).unwrap();
        assert_eq!(grid.candidates(HADOOP_REPLICATION).unwrap(), [Value::Int(1)]);
        assert_eq!(grid.candidates(HADOOP_OUTPUT_COMPRESS).unwrap(), [Value::Bool(true)]);
        assert_eq!(grid.size(), 12 * 8 * 9);
        assert_eq!(enumerate(&grid, None).unwrap().len(), 864);
    }

    #[test]
    fn fully_pinned_grid_is_one_config() {
        let space = preset_spark();
        let grid = build_grid(&space, &GridOptions::sweeping(&space, &[])).unwrap();
        assert!(grid.entries().iter().all(|(_, v)| v.len() == 1));
        let configs = enumerate(&grid, None).unwrap();
        assert_eq!(configs, vec![space.defaults()]);
    }

    #[test]
    fn swept_boolean_has_both_values() {
        let space = preset_hadoop();
        let grid = build_grid(&space, &GridOptions::sweeping(&space, &[HADOOP_OUTPUT_COMPRESS])).unwrap();
        assert_eq!(grid.candidates(HADOOP_OUTPUT_COMPRESS).unwrap(), [Value::Bool(false), Value::Bool(true)]);
    }

    #[test]
    fn options_are_validated() {
        let space = preset_hadoop();
        let mut o = GridOptions::hadoop_preset(&space);
        o.fixed.insert(HADOOP_MEMORY_MB.into(), Value::Int(512));
        assert!(o.validate(&space).is_err());

        let mut o = GridOptions::hadoop_preset(&space);
        o.fixed.remove(HADOOP_REPLICATION);
        assert!(o.validate(&space).is_err());

        let mut o = GridOptions::hadoop_preset(&space);
        o.finer_params.push(HADOOP_OUTPUT_COMPRESS.into());
        assert!(o.validate(&space).is_err());

        let o = GridOptions::hadoop_preset(&space).fix(HADOOP_REPLICATION, Value::Int(7));
        assert!(build_grid(&space, &o).is_err());
    }

    #[test]
    fn enumerate_refuses_oversized_grids() {
        let space = preset_hadoop();
        let grid = build_grid(&space, &GridOptions::hadoop_preset(&space)).unwrap();
        let err = enumerate(&grid, Some(100)).unwrap_err();
        assert!(err.to_string().contains("864"));
    }

    #[test]
    fn finer_window_for_int_and_float() {
        let hadoop = preset_hadoop();
        let mem = hadoop.spec(HADOOP_MEMORY_MB).unwrap();
        let w = finer_window_for(mem, 512.0, 256.0, 3072.0).unwrap();
        assert_eq!((w.lower, w.upper, w.increment), (384.0, 640.0, 32.0));
        assert!(finer_window_for(mem, 100.0, 256.0, 3072.0).is_err());

        let spark = preset_spark();
        let frac = spark.spec(SPARK_STORAGE_FRACTION).unwrap();
        let w = finer_window_for(frac, 0.9, 0.25, 0.9).unwrap();
        let vals = window_values(frac, &w);
        assert_eq!(vals, vec![Value::Float(0.775), Value::Float(0.9)]);
    }

    #[test]
    fn finer_grid_pins_task_cpus_at_max() {
        let space = preset_spark();
        let opts = GridOptions::spark_preset(&space);
        let grid = build_grid(&space, &opts).unwrap();
        let best = space.defaults().with(SPARK_TASK_CPUS, Value::Int(3));
        let finer = vec![SPARK_TASK_CPUS.to_string(), SPARK_NETWORK_TIMEOUT.to_string()];
        let fine = finer_grid(&space, &grid, &finer, &best).unwrap();
        assert_eq!(fine.candidates(SPARK_TASK_CPUS).unwrap(), [Value::Int(5)]);
        // timeout 120, old lower 40 -> [100, 140] step 20
        assert_eq!(fine.candidates(SPARK_NETWORK_TIMEOUT).unwrap(), [100, 120, 140].map(Value::Int));
        assert_eq!(fine.candidates(SPARK_SCHEDULER_MODE).unwrap(), [Value::from("FIFO")]);
    }
}
