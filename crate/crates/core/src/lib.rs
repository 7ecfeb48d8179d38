//! Black-box configuration auto-tuning for batch data platforms.
//!
//! A [`ParameterSpace`] describes the knobs of a platform (built-in spaces for
//! Hadoop MapReduce and Spark are provided). An [`Evaluator`] applies a
//! [`Configuration`], runs the job and reports its wall-clock time. Two search
//! strategies drive the evaluator:
//!
//! * [`search_grid`]: exhaustive grid search followed by a finer pass around
//!   the incumbent on the most influential parameters.
//! * [`search_crs`]: controlled random search with top-k bound contraction.
//!
//! Every trial is appended to a JSON-lines [`run_log`], which is sufficient to
//! recover the best configuration after the fact.

pub mod cmpe;
pub mod num;
pub mod param_space;
pub mod run_log;
pub mod search_crs;
pub mod search_grid;
pub mod session;

pub use cmpe::{
    CommandEvaluator, CostModel, CostTerm, EvalError, Evaluator, Outcome, PlatformProfile, ReplayEvaluator,
    SyntheticEvaluator, Template, Trial,
};
pub use num::{finer_window, sample_range, variation, FinerWindow, Scalar};
pub use param_space::{
    parse_value, preset, preset_hadoop, preset_spark, random_value, render_value, sample_values, Configuration, Domain,
    ParameterSpace, ParameterSpec, SpaceError, Value, Violation,
};
pub use run_log::{best_of, JsonlWriter, LogError, LogRecord, LogSink, MemoryLog};
pub use search_crs::{contract_bounds, controlled_random_search, random_round, Bounds, CrsOptions};
pub use search_grid::{build_grid, enumerate, grid_search, tune_grid_finer, GridOptions, ParamGrid};
pub use session::{SearchError, Session, TunerResult};

/// Finer-tuning window over a real-valued parameter.
pub type RealWindow = FinerWindow<f64>;
/// Finer-tuning window over an integer parameter.
pub type IntWindow = FinerWindow<i64>;
