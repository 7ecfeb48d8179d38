//! `tunekit` command-line front end.
//!
//! Exit codes: 0 success, 1 invalid arguments, 2 evaluator or
//! infrastructure failure, 3 no successful trial.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value as Json};
use tunekit::run_log::{self, baseline_ms, improvement_pct, LogError};
use tunekit::search_crs::run_crs;
use tunekit::search_grid::run_grid_finer;
use tunekit::{
    parse_value, preset, Bounds, CommandEvaluator, CostModel, CrsOptions, EvalError, Evaluator, GridOptions,
    JsonlWriter, ParameterSpace, PlatformProfile, ReplayEvaluator, SearchError, Session, SyntheticEvaluator,
    TunerResult,
};

/// Directory for run logs when `--log` is not given.
const LOG_DIR_ENV: &str = "TUNEKIT_LOG_DIR";

#[derive(Parser)]
#[command(name = "tunekit", version, about = "Black-box configuration tuner for Hadoop and Spark jobs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Run a tuning search and report the best configuration.
    Tune(TuneArgs),
    /// Print the fastest successful trial in a run log.
    Best(BestArgs),
    /// Print a built-in parameter space in space-file format.
    Presets(PresetArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algorithm {
    Grid,
    Crs,
}

impl Algorithm {
    fn name(self) -> &'static str {
        match self {
            Algorithm::Grid => "grid",
            Algorithm::Crs => "crs",
        }
    }
}

#[derive(Args)]
#[command(group(ArgGroup::new("evaluator").required(true).args(["profile", "model", "replay"])))]
struct TuneArgs {
    #[arg(long, value_enum)]
    algorithm: Algorithm,
    /// `hadoop`, `spark` or a parameter-space file.
    #[arg(long)]
    space: String,
    /// Platform profile: run real jobs through shell commands.
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Synthetic cost model.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Run log to replay recorded timings from.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Run log to append to [default: $TUNEKIT_LOG_DIR/tunekit-<algorithm>.jsonl].
    #[arg(long)]
    log: Option<PathBuf>,
    /// Also write the JSON summary here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Evaluate the all-defaults configuration first.
    #[arg(long)]
    baseline: bool,
    /// Concurrent trials; only used when the evaluator allows it.
    #[arg(long, default_value_t = 1)]
    max_parallel: usize,
    /// Hold a parameter at a value, e.g. `dfs.replication=1`. Repeatable.
    #[arg(long = "fix", value_name = "NAME=VALUE")]
    fixes: Vec<String>,

    /// Parameters to sweep (grid); the rest stay at defaults.
    #[arg(long, value_delimiter = ',')]
    sweep: Vec<String>,
    /// Parameters refined in the finer pass (grid).
    #[arg(long, value_delimiter = ',', conflicts_with = "no_finer")]
    finer: Vec<String>,
    /// Skip the finer pass (grid).
    #[arg(long)]
    no_finer: bool,
    /// Refuse grids with more configurations than this (grid).
    #[arg(long)]
    max_trials: Option<usize>,

    /// Configurations drawn per round (crs).
    #[arg(long, default_value_t = 60)]
    round_size: usize,
    /// Survivors that define the next round's bounds (crs).
    #[arg(long, default_value_t = 6)]
    top_k: usize,
    /// Stop once a round improves the incumbent by no more than this fraction (crs).
    #[arg(long, default_value_t = 0.01)]
    threshold: f64,
    #[arg(long, default_value_t = 10)]
    max_rounds: usize,
    /// Shrink only influential parameters' bounds (crs).
    #[arg(long)]
    influential_only: bool,
}

#[derive(Args)]
struct BestArgs {
    #[arg(long)]
    log: PathBuf,
    /// Report improvement over this space's all-defaults trial, when logged.
    #[arg(long)]
    space: Option<String>,
}

#[derive(Args)]
struct PresetArgs {
    #[arg(long)]
    space: String,
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl fmt::Debug for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 1, error: error.into() }
}

fn infra(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 2, error: error.into() }
}

impl From<SearchError> for Failure {
    fn from(e: SearchError) -> Self {
        let code = match &e {
            SearchError::Options(_) | SearchError::GridTooLarge { .. } => 1,
            SearchError::NoIncumbent(_) | SearchError::Round { successes: 0, .. } => 3,
            _ => 2,
        };
        Failure { code, error: e.into() }
    }
}

type Result<T, E = Failure> = std::result::Result<T, E>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()))
        .init();

    let result = match cli.command {
        Command::Tune(args) => cmd_tune(args),
        Command::Best(args) => cmd_best(args),
        Command::Presets(args) => cmd_presets(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f:?}");
            ExitCode::from(f.code)
        }
    }
}

fn load_space(arg: &str) -> Result<ParameterSpace> {
    if let Some(space) = preset(arg) {
        return Ok(space);
    }
    let path = Path::new(arg);
    if !path.exists() {
        return Err(usage(anyhow!("`{arg}` is neither a preset (hadoop, spark) nor a space file")));
    }
    ParameterSpace::from_file(path).map_err(usage)
}

fn parse_fix(space: &ParameterSpace, text: &str) -> Result<(String, tunekit::Value)> {
    let (name, value) = text.split_once('=').ok_or_else(|| usage(anyhow!("--fix expects NAME=VALUE, got `{text}`")))?;
    let spec = space.require(name).map_err(usage)?;
    let value = parse_value(spec, value).map_err(usage)?;
    Ok((name.to_owned(), value))
}

fn build_evaluator(space: &ParameterSpace, args: &TuneArgs) -> Result<Box<dyn Evaluator>> {
    let setup = |e: EvalError| match e {
        EvalError::Io(_) => infra(e),
        _ => usage(e),
    };
    if let Some(path) = &args.model {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(usage)?;
        let model = CostModel::from_toml(&text).map_err(usage)?;
        return Ok(Box::new(SyntheticEvaluator::new(space.clone(), model).map_err(usage)?));
    }
    if let Some(path) = &args.replay {
        let log = run_log::load(path).map_err(usage)?;
        for w in &log.warnings {
            eprintln!("warning: replay line {}: {}", w.line, w.message);
        }
        return Ok(Box::new(ReplayEvaluator::from_log(space.clone(), &log.records).map_err(usage)?));
    }
    let path = args.profile.as_ref().expect("clap enforces one evaluator source");
    let profile = PlatformProfile::from_file(path).map_err(setup)?;
    Ok(Box::new(CommandEvaluator::new(space.clone(), profile).map_err(infra)?))
}

fn grid_options(space: &ParameterSpace, args: &TuneArgs, fixes: &[(String, tunekit::Value)]) -> GridOptions {
    let mut opts = if args.sweep.is_empty() {
        GridOptions::preset_for(space)
    } else {
        let names: Vec<&str> = args.sweep.iter().map(String::as_str).collect();
        GridOptions::sweeping(space, &names)
    };
    for (name, value) in fixes {
        opts = opts.fix(name, value.clone());
    }
    if args.no_finer {
        opts.finer_params.clear();
    } else if !args.finer.is_empty() {
        opts.finer_params = args.finer.clone();
    }
    opts.max_trials = args.max_trials;
    opts
}

fn crs_setup(
    space: &ParameterSpace,
    args: &TuneArgs,
    fixes: &[(String, tunekit::Value)],
) -> Result<(CrsOptions, Bounds)> {
    let opts = CrsOptions {
        round_size: args.round_size,
        top_k: args.top_k,
        threshold: args.threshold,
        max_rounds: args.max_rounds,
        seed: args.seed,
        scope: if args.influential_only {
            tunekit::search_crs::ContractScope::InfluentialOnly
        } else {
            tunekit::search_crs::ContractScope::All
        },
    };
    opts.validate()?;
    let mut bounds = match space.platform_tag() {
        "hadoop" if args.space == "hadoop" => Bounds::hadoop_preset(space)?,
        _ => Bounds::full(space),
    };
    for (name, value) in fixes {
        bounds = bounds.pin(space, name, value.clone())?;
    }
    Ok((opts, bounds))
}

fn default_log_path(algorithm: Algorithm) -> PathBuf {
    let dir = std::env::var_os(LOG_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
    dir.join(format!("tunekit-{}.jsonl", algorithm.name()))
}

fn cmd_tune(args: TuneArgs) -> Result<()> {
    let space = load_space(&args.space)?;
    let fixes = args.fixes.iter().map(|f| parse_fix(&space, f)).collect::<Result<Vec<_>>>()?;
    if args.max_parallel == 0 {
        return Err(usage(anyhow!("--max-parallel must be at least 1")));
    }
    let grid = (args.algorithm == Algorithm::Grid).then(|| grid_options(&space, &args, &fixes));
    if let Some(g) = &grid {
        g.validate(&space)?;
    }
    let crs = match args.algorithm {
        Algorithm::Crs => Some(crs_setup(&space, &args, &fixes)?),
        Algorithm::Grid => None,
    };
    let evaluator = build_evaluator(&space, &args)?;

    let log_path = args.log.clone().unwrap_or_else(|| default_log_path(args.algorithm));
    if let Some(dir) = log_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display())).map_err(infra)?;
    }
    let mut sink = JsonlWriter::open_append(&log_path).map_err(infra)?;

    let mut session =
        Session::new(&space, evaluator.as_ref(), &mut sink, args.algorithm.name()).with_max_parallel(args.max_parallel);
    session.start(format!("seed={} space={}", args.seed, args.space))?;
    let mut baseline = None;
    if args.baseline {
        let range = session.evaluate_batch(&[space.defaults()], "baseline")?;
        baseline = session.trials()[range].first().and_then(|t| t.duration_ms());
    }
    match (&grid, &crs) {
        (Some(opts), _) => run_grid_finer(&mut session, opts)?,
        (_, Some((opts, bounds))) => {
            run_crs(&mut session, opts, bounds)?;
        }
        _ => unreachable!(),
    }
    let result = session.finish()?;

    let summary = summary_json(&space, args.algorithm, &result, baseline)?;
    let text = format!("{}\n", serde_json::to_string_pretty(&summary).expect("json"));
    if let Some(out) = &args.out {
        std::fs::write(out, &text).with_context(|| format!("writing {}", out.display())).map_err(infra)?;
    }
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(text.as_bytes()).map_err(infra)?;

    eprintln!(
        "{}: {} trials, best {} ms{}; log {}",
        args.algorithm.name(),
        result.trials.len(),
        result.best_time_ms,
        baseline
            .map(|b| format!(" ({:.2}% faster than defaults)", improvement_pct(b, result.best_time_ms)))
            .unwrap_or_default(),
        log_path.display()
    );
    if let Some(w) = &result.warning {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn summary_json(
    space: &ParameterSpace,
    algorithm: Algorithm,
    result: &TunerResult,
    baseline: Option<u64>,
) -> Result<Json> {
    let rendered = space.render(&result.best_config).map_err(infra)?;
    let mut s = json!({
        "algorithm": algorithm.name(),
        "best_config": rendered,
        "best_time_ms": result.best_time_ms,
        "platform": space.platform_tag(),
        "trials": result.trials.len(),
    });
    if let Some(b) = baseline {
        s["baseline_ms"] = json!(b);
        s["improvement_pct"] = json!(round2(improvement_pct(b, result.best_time_ms)));
    }
    if let Some(w) = &result.warning {
        s["warning"] = json!(w);
    }
    Ok(s)
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

fn cmd_best(args: BestArgs) -> Result<()> {
    let loaded = run_log::load(&args.log).map_err(infra)?;
    for w in &loaded.warnings {
        eprintln!("warning: line {}: {}", w.line, w.message);
    }
    let best = match run_log::best_of(&loaded.records) {
        Ok(b) => b,
        Err(e @ LogError::NoOkTrials) => return Err(Failure { code: 3, error: e.into() }),
        Err(e) => return Err(infra(e)),
    };
    let mut s = json!({
        "best_config": best.config,
        "best_time_ms": best.duration_ms,
        "phase_tag": best.phase_tag,
    });
    if let Some(name) = &args.space {
        let space = load_space(name)?;
        let defaults: BTreeMap<String, String> = space.render(&space.defaults()).map_err(usage)?;
        if let Some(b) = baseline_ms(&loaded.records, &defaults) {
            s["baseline_ms"] = json!(b);
            s["improvement_pct"] = json!(round2(improvement_pct(b, best.duration_ms)));
        }
    }
    println!("{}", serde_json::to_string_pretty(&s).expect("json"));
    eprintln!("best: {}", best.describe());
    Ok(())
}

fn cmd_presets(args: PresetArgs) -> Result<()> {
    let space = preset(&args.space)
        .ok_or_else(|| usage(anyhow!("unknown preset `{}` (expected hadoop or spark)", args.space)))?;
    print!("{}", space.to_toml());
    Ok(())
}
