use std::collections::BTreeMap;

use tunekit::run_log::{best_of, Event};
use tunekit::search_crs::{round_tag, ContractScope, ParamBound};
use tunekit::{
    controlled_random_search, preset_hadoop, preset_spark, Bounds, CostModel, CostTerm, CrsOptions, MemoryLog,
    ParameterSpace, SyntheticEvaluator, Value,
};

fn model(space: &ParameterSpace, optimum: &[(&str, Value)]) -> CostModel {
    let opt: BTreeMap<&str, Value> = optimum.iter().cloned().collect();
    let terms = space
        .params()
        .iter()
        .map(|p| {
            let o = opt.get(p.name.as_str()).cloned().unwrap_or_else(|| p.default.clone());
            (p.name.clone(), CostTerm { weight: 0.5, optimum: o })
        })
        .collect();
    CostModel { base_ms: 50_000, noise_sd: 0.0, seed: 0, terms }
}

fn hadoop_eval() -> (ParameterSpace, SyntheticEvaluator) {
    let space = preset_hadoop();
    let m = model(&space, &[("mapreduce.map.memory.mb", Value::Int(1700)), ("dfs.blocksize", Value::Int(200))]);
    (space.clone(), SyntheticEvaluator::new(space, m).unwrap())
}

fn opts(seed: u64) -> CrsOptions {
    CrsOptions { seed, ..CrsOptions::default() }
}

#[test]
fn same_seed_same_run() {
    let (space, ev) = hadoop_eval();
    let full = Bounds::full(&space);
    let mut la = MemoryLog::default();
    let mut lb = MemoryLog::default();
    let (a, ra) = controlled_random_search(&space, &ev, &opts(7), &full, &mut la, 1).unwrap();
    let (b, rb) = controlled_random_search(&space, &ev, &opts(7), &full, &mut lb, 1).unwrap();
    assert_eq!(a.best_config, b.best_config);
    assert_eq!(ra, rb);
    let cfgs = |l: &MemoryLog| l.records.iter().map(|r| r.config.clone()).collect::<Vec<_>>();
    assert_eq!(cfgs(&la), cfgs(&lb));

    let (c, _) = controlled_random_search(&space, &ev, &opts(8), &full, &mut MemoryLog::default(), 1).unwrap();
    assert_ne!(a.trials[0].config, c.trials[0].config);
}

#[test]
fn top_k_is_the_k_fastest_of_the_round() {
    let (space, ev) = hadoop_eval();
    let o = CrsOptions { max_rounds: 2, threshold: 1.0, ..opts(3) };
    let (r, rounds) =
        controlled_random_search(&space, &ev, &o, &Bounds::full(&space), &mut MemoryLog::default(), 1).unwrap();
    let mut first: Vec<_> =
        r.trials.iter().filter(|t| t.phase_tag == round_tag(1)).map(|t| (t.duration_ms().unwrap(), t.index)).collect();
    assert_eq!(first.len(), 60);
    first.sort();
    let survivors: Vec<_> = first[..6].iter().map(|&(_, i)| r.trials[i].config.clone()).collect();
    // round 2 bounds are exactly the extrema of those six
    for p in space.params() {
        if let Some((lo, hi)) = rounds[1].bounds.range(&p.name) {
            let vals: Vec<f64> = survivors.iter().map(|c| c.get(&p.name).unwrap().as_f64().unwrap()).collect();
            assert_eq!(lo, vals.iter().cloned().fold(f64::INFINITY, f64::min), "{}", p.name);
            assert_eq!(hi, vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max), "{}", p.name);
        }
    }
}

#[test]
fn threshold_one_stops_after_round_two() {
    let (space, ev) = hadoop_eval();
    let o = CrsOptions { threshold: 1.0, ..opts(1) };
    let (r, rounds) =
        controlled_random_search(&space, &ev, &o, &Bounds::full(&space), &mut MemoryLog::default(), 1).unwrap();
    assert_eq!(rounds.len(), 2);
    assert_eq!(r.trials.len(), 120);
}

#[test]
fn collapsed_bounds_at_optimum_stop_with_zero_variation() {
    let (space, ev) = hadoop_eval();
    let start = Bounds::point(&space, &ev.model().optimum()).unwrap();
    let (r, rounds) = controlled_random_search(&space, &ev, &opts(5), &start, &mut MemoryLog::default(), 1).unwrap();
    assert_eq!(rounds.len(), 2);
    assert_eq!(rounds[1].variation, Some(0.0));
    assert_eq!(r.best_time_ms, 50_000);
    assert!(r.trials.iter().all(|t| t.config == r.best_config));
}

#[test]
fn max_rounds_one_is_a_single_round() {
    let (space, ev) = hadoop_eval();
    let o = CrsOptions { max_rounds: 1, ..opts(2) };
    let (r, rounds) =
        controlled_random_search(&space, &ev, &o, &Bounds::full(&space), &mut MemoryLog::default(), 1).unwrap();
    assert_eq!(rounds.len(), 1);
    assert_eq!(r.trials.len(), 60);
}

#[test]
fn bounds_nest_and_incumbent_never_rises() {
    let space = preset_spark();
    let m = model(
        &space,
        &[("spark.network.timeout", Value::Int(150)), ("spark.memory.storageFraction", Value::Float(0.7))],
    );
    let ev = SyntheticEvaluator::new(space.clone(), m).unwrap();
    for seed in 0..5 {
        let o = CrsOptions { threshold: 0.001, ..opts(seed) };
        let (r, rounds) =
            controlled_random_search(&space, &ev, &o, &Bounds::full(&space), &mut MemoryLog::default(), 1).unwrap();
        for w in rounds.windows(2) {
            assert!(w[1].bounds.is_within(&w[0].bounds), "seed {seed} round {}", w[1].round);
            assert!(w[1].incumbent_ms <= w[0].incumbent_ms);
        }
        // every draw of a round lies inside that round's bounds
        for rep in &rounds {
            let tag = round_tag(rep.round);
            assert!(r.trials.iter().filter(|t| t.phase_tag == tag).all(|t| rep.bounds.contains(&t.config)));
        }
        let trace = r.incumbent_trace();
        assert!(trace.windows(2).all(|w| w[0].is_none() || w[1] <= w[0]));
    }
}

#[test]
fn k_equals_m_contracts_to_the_whole_round() {
    let (space, ev) = hadoop_eval();
    let o = CrsOptions { round_size: 20, top_k: 20, max_rounds: 2, threshold: 1.0, ..opts(11) };
    let mut log = MemoryLog::default();
    let (_, rounds) = controlled_random_search(&space, &ev, &o, &Bounds::full(&space), &mut log, 1).unwrap();
    let first: Vec<_> = log
        .records
        .iter()
        .filter(|r| r.event == Event::Trial && r.phase_tag == round_tag(1))
        .map(|r| space.parse_rendered(r.config.as_ref().unwrap()).unwrap())
        .collect();
    assert_eq!(first.len(), 20);
    for p in space.params() {
        match rounds[1].bounds.get(&p.name).unwrap() {
            ParamBound::Range { .. } => {
                let vals: Vec<f64> = first.iter().map(|c| c.get(&p.name).unwrap().as_f64().unwrap()).collect();
                let (lo, hi) = rounds[1].bounds.range(&p.name).unwrap();
                assert_eq!(lo, vals.iter().cloned().fold(f64::INFINITY, f64::min));
                assert_eq!(hi, vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
            }
            ParamBound::Pinned(v) => assert!(first.iter().all(|c| c.get(&p.name) == Some(v))),
            ParamBound::Free => {
                let distinct: std::collections::BTreeSet<String> =
                    first.iter().map(|c| c.get(&p.name).unwrap().to_string()).collect();
                assert!(distinct.len() > 1);
            }
        }
    }
}

#[test]
fn log_best_matches_result() {
    let (space, ev) = hadoop_eval();
    for seed in [0, 9] {
        let mut log = MemoryLog::default();
        let (r, _) = controlled_random_search(&space, &ev, &opts(seed), &Bounds::full(&space), &mut log, 4).unwrap();
        let b = best_of(&log.records).unwrap();
        assert_eq!(b.duration_ms, r.best_time_ms);
        assert_eq!(space.parse_rendered(&b.config).unwrap(), r.best_config);
    }
}

#[test]
fn influential_scope_leaves_other_ranges_alone() {
    let (space, ev) = hadoop_eval();
    let o = CrsOptions { scope: ContractScope::InfluentialOnly, max_rounds: 3, threshold: 0.001, ..opts(4) };
    let full = Bounds::full(&space);
    let (_, rounds) = controlled_random_search(&space, &ev, &o, &full, &mut MemoryLog::default(), 1).unwrap();
    let last = rounds.last().unwrap();
    for p in space.params().iter().filter(|p| !p.influential) {
        assert_eq!(last.bounds.get(&p.name), full.get(&p.name), "{}", p.name);
    }
}

#[test]
fn bad_options_are_rejected() {
    let (space, ev) = hadoop_eval();
    for o in [
        CrsOptions { top_k: 61, ..opts(0) },
        CrsOptions { threshold: 0.0, ..opts(0) },
        CrsOptions { max_rounds: 0, ..opts(0) },
    ] {
        assert!(controlled_random_search(&space, &ev, &o, &Bounds::full(&space), &mut MemoryLog::default(), 1).is_err());
    }
}
