//! Controlled random search.
//!
//! Each round draws `round_size` configurations uniformly inside the current
//! bounds, keeps the `top_k` fastest, and shrinks every parameter's bounds to
//! the extrema of those survivors. The loop stops once a round improves the
//! incumbent by no more than `threshold` (relative), or after `max_rounds`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cmpe::Evaluator;
use crate::num::variation;
use crate::param_space::{
    random_value, Configuration, Domain, ParameterSpace, Value, HADOOP_BLOCKSIZE, HADOOP_REPLICATION,
};
use crate::run_log::{Event, LogSink};
use crate::session::{SearchError, Session, TunerResult};

#[derive(Debug, Clone, PartialEq)]
pub enum ParamBound {
    Range { lower: Value, upper: Value },
    Pinned(Value),
    Free,
}

/// Sampling region, one entry per parameter in space order.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    entries: Vec<(String, ParamBound)>,
}

impl Bounds {
    /// Whole domain of every parameter.
    pub fn full(space: &ParameterSpace) -> Self {
        let entries = space
            .params()
            .iter()
            .map(|p| {
                let b = match (p.min_value(), p.max_value()) {
                    (Some(lower), Some(upper)) => ParamBound::Range { lower, upper },
                    _ => ParamBound::Free,
                };
                (p.name.clone(), b)
            })
            .collect();
        Self { entries }
    }

    /// Every parameter collapsed onto `config`.
    pub fn point(space: &ParameterSpace, config: &Configuration) -> Result<Self, SearchError> {
        let mut b = Self::full(space);
        for p in space.params() {
            let v = config.get(&p.name).ok_or_else(|| SearchError::Options(format!("point lacks `{}`", p.name)))?;
            b = b.pin(space, &p.name, v.clone())?;
        }
        Ok(b)
    }

    /// Collapses one parameter to a single value.
    pub fn pin(mut self, space: &ParameterSpace, name: &str, value: Value) -> Result<Self, SearchError> {
        let spec = space.require(name)?;
        let value = spec
            .domain
            .coerce(value.clone())
            .filter(|v| spec.domain.contains(v))
            .ok_or_else(|| SearchError::Options(format!("`{name}`: {value} outside domain")))?;
        let bound = if spec.domain.is_range() {
            ParamBound::Range { lower: value.clone(), upper: value }
        } else {
            ParamBound::Pinned(value)
        };
        let slot = self.entries.iter_mut().find(|(n, _)| n == name).expect("space and bounds agree");
        slot.1 = bound;
        Ok(self)
    }

    /// Hadoop starting region with replication 1 and a 192 MB block size.
    pub fn hadoop_preset(space: &ParameterSpace) -> Result<Self, SearchError> {
        Self::full(space).pin(space, HADOOP_REPLICATION, Value::Int(1))?.pin(space, HADOOP_BLOCKSIZE, Value::Int(192))
    }

    pub fn get(&self, name: &str) -> Option<&ParamBound> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, b)| b)
    }

    pub fn entries(&self) -> &[(String, ParamBound)] {
        &self.entries
    }

    /// Numeric `(lower, upper)` of a range parameter.
    pub fn range(&self, name: &str) -> Option<(f64, f64)> {
        match self.get(name)? {
            ParamBound::Range { lower, upper } => Some((lower.as_f64()?, upper.as_f64()?)),
            _ => None,
        }
    }

    /// Every range interval of `self` lies inside the matching one of `outer`,
    /// and every value pinned in `outer` is pinned identically here.
    pub fn is_within(&self, outer: &Bounds) -> bool {
        self.entries.iter().zip(&outer.entries).all(|((_, inner), (_, outer))| match (inner, outer) {
            (ParamBound::Range { lower: a, upper: b }, ParamBound::Range { lower: c, upper: d }) => {
                match (a.as_f64(), b.as_f64(), c.as_f64(), d.as_f64()) {
                    (Some(a), Some(b), Some(c), Some(d)) => c <= a && a <= b && b <= d,
                    _ => false,
                }
            }
            (_, ParamBound::Free) => !matches!(inner, ParamBound::Range { .. }),
            (ParamBound::Pinned(x), ParamBound::Pinned(y)) => x == y,
            _ => false,
        })
    }

    pub fn contains(&self, config: &Configuration) -> bool {
        self.entries.iter().all(|(name, b)| match (b, config.get(name)) {
            (ParamBound::Range { lower, upper }, Some(v)) => match (lower.as_f64(), upper.as_f64(), v.as_f64()) {
                (Some(lo), Some(hi), Some(v)) => lo <= v && v <= hi,
                _ => false,
            },
            (ParamBound::Pinned(p), Some(v)) => p == v,
            (ParamBound::Free, Some(_)) => true,
            (_, None) => false,
        })
    }

    fn check(&self, space: &ParameterSpace) -> Result<(), SearchError> {
        if self.entries.len() != space.len() {
            return Err(SearchError::Options("bounds do not match the space".into()));
        }
        for ((name, b), spec) in self.entries.iter().zip(space.params()) {
            if *name != spec.name {
                return Err(SearchError::Options("bounds do not match the space".into()));
            }
            let ok = match b {
                ParamBound::Range { lower, upper } => {
                    spec.domain.contains(lower) && spec.domain.contains(upper) && lower.as_f64() <= upper.as_f64()
                }
                ParamBound::Pinned(v) => !spec.domain.is_range() && spec.domain.contains(v),
                ParamBound::Free => !spec.domain.is_range(),
            };
            if !ok {
                return Err(SearchError::Options(format!("invalid bound for `{name}`")));
            }
        }
        Ok(())
    }
}

/// Which parameters bound contraction applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ContractScope {
    #[default]
    All,
    /// Only influential parameters shrink; the rest keep their bounds.
    InfluentialOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrsOptions {
    pub round_size: usize,
    pub top_k: usize,
    /// Relative-improvement stopping threshold in (0, 1].
    pub threshold: f64,
    pub max_rounds: usize,
    pub seed: u64,
    pub scope: ContractScope,
}

impl Default for CrsOptions {
    fn default() -> Self {
        Self { round_size: 60, top_k: 6, threshold: 0.01, max_rounds: 10, seed: 0, scope: ContractScope::All }
    }
}

impl CrsOptions {
    pub fn validate(&self) -> Result<(), SearchError> {
        let err = |m: &str| Err(SearchError::Options(m.to_owned()));
        if self.round_size == 0 {
            return err("round size must be positive");
        }
        if self.top_k == 0 || self.top_k > self.round_size {
            return err("top-k must be in 1..=round size");
        }
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return err("threshold must be in (0, 1]");
        }
        if self.max_rounds == 0 {
            return err("max rounds must be at least 1");
        }
        Ok(())
    }
}

/// Draws one configuration inside `bounds`.
pub fn draw_config(
    space: &ParameterSpace,
    bounds: &Bounds,
    rng: &mut ChaCha8Rng,
) -> Result<Configuration, SearchError> {
    let mut config = Configuration::new();
    for (spec, (_, b)) in space.params().iter().zip(bounds.entries()) {
        let v = match b {
            ParamBound::Pinned(v) => v.clone(),
            ParamBound::Range { lower, upper } => random_value(spec, lower, upper, rng)?,
            ParamBound::Free => random_value(spec, &spec.default, &spec.default, rng)?,
        };
        config.set(spec.name.clone(), v);
    }
    Ok(config)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    pub configs: Vec<Configuration>,
    /// `(config, time)` of the successful trials, fastest first; ties by draw order.
    pub top_k: Vec<(Configuration, u64)>,
}

impl RoundOutcome {
    pub fn best(&self) -> &(Configuration, u64) {
        &self.top_k[0]
    }

    pub fn top_configs(&self) -> Vec<Configuration> {
        self.top_k.iter().map(|(c, _)| c.clone()).collect()
    }
}

/// One round: `round_size` draws, evaluated and logged, reduced to the `top_k`
/// fastest.
pub fn random_round(
    session: &mut Session<'_>,
    bounds: &Bounds,
    options: &CrsOptions,
    rng: &mut ChaCha8Rng,
    round: usize,
) -> Result<RoundOutcome, SearchError> {
    let space = session.space().clone();
    bounds.check(&space)?;
    let configs = (0..options.round_size).map(|_| draw_config(&space, bounds, rng)).collect::<Result<Vec<_>, _>>()?;
    let range = session.evaluate_batch(&configs, &round_tag(round))?;
    let mut ok: Vec<(usize, u64)> = session.trials()[range.clone()]
        .iter()
        .enumerate()
        .filter_map(|(i, t)| t.duration_ms().map(|ms| (i, ms)))
        .collect();
    if ok.len() < options.top_k {
        return Err(SearchError::Round { round, successes: ok.len(), needed: options.top_k });
    }
    ok.sort_by_key(|&(i, ms)| (ms, i));
    let top_k = ok[..options.top_k].iter().map(|&(i, ms)| (configs[i].clone(), ms)).collect();
    Ok(RoundOutcome { configs, top_k })
}

/// Bounds spanned by the survivors: min/max per range parameter; booleans and
/// enums are pinned when every survivor agrees and free otherwise.
pub fn contract_bounds(top_k: &[Configuration], space: &ParameterSpace, prev: &Bounds, scope: ContractScope) -> Bounds {
    assert!(!top_k.is_empty(), "contract_bounds needs at least one configuration");
    let entries = space
        .params()
        .iter()
        .zip(prev.entries())
        .map(|(spec, (name, prev_b))| {
            if scope == ContractScope::InfluentialOnly && !spec.influential {
                return (name.clone(), prev_b.clone());
            }
            let values = top_k.iter().map(|c| c.get(name).expect("complete configuration"));
            let b = match spec.domain {
                Domain::IntRange { .. } | Domain::FloatRange { .. } => {
                    let mut lower: Option<&Value> = None;
                    let mut upper: Option<&Value> = None;
                    for v in values {
                        if lower.is_none_or(|l| v.as_f64() < l.as_f64()) {
                            lower = Some(v);
                        }
                        if upper.is_none_or(|u| v.as_f64() > u.as_f64()) {
                            upper = Some(v);
                        }
                    }
                    ParamBound::Range {
                        lower: lower.cloned().expect("non-empty"),
                        upper: upper.cloned().expect("non-empty"),
                    }
                }
                _ => {
                    let first = top_k[0].get(name).expect("complete configuration");
                    if top_k.iter().all(|c| c.get(name) == Some(first)) {
                        ParamBound::Pinned(first.clone())
                    } else {
                        ParamBound::Free
                    }
                }
            };
            (name.clone(), b)
        })
        .collect();
    Bounds { entries }
}

pub fn round_tag(round: usize) -> String {
    format!("crs-round-{round}")
}

/// Per-round trace of a search.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundReport {
    pub round: usize,
    pub bounds: Bounds,
    pub round_best_ms: u64,
    pub incumbent_ms: u64,
    /// Relative improvement over the previous round's incumbent (absent for round 1).
    pub variation: Option<f64>,
}

/// Runs the search inside an existing session.
pub fn run_crs(
    session: &mut Session<'_>,
    options: &CrsOptions,
    initial: &Bounds,
) -> Result<Vec<RoundReport>, SearchError> {
    options.validate()?;
    let space = session.space().clone();
    initial.check(&space)?;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut reports = Vec::new();

    let mut bounds = initial.clone();
    let mut outcome = random_round(session, &bounds, options, &mut rng, 1)?;
    let incumbent = session.incumbent_ms().expect("round one succeeded");
    session.end_phase(
        Event::Round,
        &round_tag(1),
        options.round_size,
        &format!("round_best_ms={}", outcome.best().1),
    )?;
    reports.push(RoundReport {
        round: 1,
        bounds: bounds.clone(),
        round_best_ms: outcome.best().1,
        incumbent_ms: incumbent,
        variation: None,
    });

    for round in 2..=options.max_rounds {
        let before = session.incumbent_ms().expect("incumbent exists");
        bounds = contract_bounds(&outcome.top_configs(), &space, &bounds, options.scope);
        outcome = match random_round(session, &bounds, options, &mut rng, round) {
            Ok(o) => o,
            Err(e @ SearchError::Round { .. }) => {
                session.set_warning(format!("stopped early: {e}"));
                break;
            }
            Err(e) => return Err(e),
        };
        let after = session.incumbent_ms().expect("incumbent exists");
        let v = variation(before, after);
        session.end_phase(
            Event::Round,
            &round_tag(round),
            options.round_size,
            &format!("round_best_ms={} previous_incumbent_ms={before} variation={v:.6}", outcome.best().1),
        )?;
        reports.push(RoundReport {
            round,
            bounds: bounds.clone(),
            round_best_ms: outcome.best().1,
            incumbent_ms: after,
            variation: Some(v),
        });
        if v <= options.threshold {
            break;
        }
    }
    Ok(reports)
}

/// Controlled random search as a standalone run.
pub fn controlled_random_search(
    space: &ParameterSpace,
    evaluator: &dyn Evaluator,
    options: &CrsOptions,
    initial: &Bounds,
    sink: &mut dyn LogSink,
    max_parallel: usize,
) -> Result<(TunerResult, Vec<RoundReport>), SearchError> {
    let mut session = Session::new(space, evaluator, sink, "crs").with_max_parallel(max_parallel);
    session.start(format!("seed={}", options.seed))?;
    let rounds = run_crs(&mut session, options, initial)?;
    Ok((session.finish()?, rounds))
}
