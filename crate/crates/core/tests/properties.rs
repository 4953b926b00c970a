//! Search, oracle and heuristic agreement on seeded random tasks.

use rayon::prelude::*;
use samplan::experiments::{random_task, RandomTaskParams};
use samplan::heuristic::ff_h;
use samplan::model::{PlanningTask, SearchState, Semantics};
use samplan::oracle::oracle_solvable;
use samplan::search::{solve, validate_plan, visit_leaves, Certifier, SearchConfig, Verdict};
use std::collections::{HashSet, VecDeque};

const TASKS: u64 = 1000;

fn config(semantics: Semantics) -> SearchConfig {
    match semantics {
        Semantics::Strong => SearchConfig::strong(),
        Semantics::Weak => SearchConfig::weak(),
    }
    .with_pruning(false)
}

/// Search states reachable from the initial one, breadth first, at most `cap`.
fn reachable(task: &PlanningTask, cap: usize) -> Vec<SearchState> {
    let root = task.initial_search_state();
    let mut seen = HashSet::from([root.clone()]);
    let mut queue = VecDeque::from([root]);
    let mut out = Vec::new();
    while let Some(ss) = queue.pop_front() {
        out.push(ss.clone());
        if out.len() >= cap {
            break;
        }
        for a in task.applicable(&ss) {
            for o in 0..task.action(a).outcomes.len() {
                let next = task.successor(&ss, a, o);
                if seen.insert(next.clone()) {
                    queue.push_back(next);
                }
            }
        }
    }
    out
}

#[test]
fn search_agrees_with_oracle_in_both_modes() {
    let failures: Vec<String> = (0..TASKS)
        .into_par_iter()
        .flat_map_iter(|seed| {
            let task = random_task(seed, RandomTaskParams::default());
            let mut bad = Vec::new();
            for sem in [Semantics::Strong, Semantics::Weak] {
                let expected = oracle_solvable(&task, &task.initial_search_state(), sem).expect("small task");
                let r = solve(&task, &config(sem));
                match &r.verdict {
                    Verdict::Plan(plan) if expected => {
                        let report = validate_plan(&task, plan, sem, Certifier::Oracle { limit: 1_000_000 });
                        if !report.valid {
                            bad.push(format!("seed {seed} {sem}: invalid plan {:?}", report.violation));
                        }
                    }
                    Verdict::Unsolvable if !expected => {}
                    v => bad.push(format!("seed {seed} {sem}: oracle {expected}, search {:?}", v.kind())),
                }
            }
            bad
        })
        .collect();
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn strong_solvable_implies_weak_solvable() {
    (0..TASKS).into_par_iter().for_each(|seed| {
        let task = random_task(seed, RandomTaskParams::default());
        for ss in reachable(&task, 50) {
            if oracle_solvable(&task, &ss, Semantics::Strong).unwrap() {
                assert!(oracle_solvable(&task, &ss, Semantics::Weak).unwrap(), "seed {seed}");
            }
        }
    });
}

#[test]
fn planning_graph_dead_ends_are_unsolvable() {
    let checked: usize = (0..TASKS)
        .into_par_iter()
        .map(|seed| {
            let task = random_task(seed, RandomTaskParams::default());
            let mut n = 0;
            for ss in reachable(&task, 200) {
                if ff_h(&task, &ss).unwrap().value.is_none() {
                    n += 1;
                    assert!(!oracle_solvable(&task, &ss, Semantics::Weak).unwrap(), "seed {seed}: {ss:?}");
                }
            }
            n
        })
        .sum();
    assert!(checked > 0);
}

#[test]
fn fail_leaves_of_random_weak_plans() {
    // With pruning on, FAIL leaves are planning-graph dead ends or the
    // search is redone without pruning; either way they are unsolvable.
    let stats: Vec<(usize, usize)> = (0..TASKS)
        .into_par_iter()
        .map(|seed| {
            let task = random_task(seed, RandomTaskParams::default());
            let r = solve(&task, &SearchConfig::weak());
            let Some(plan) = r.verdict.plan() else { return (0, 0) };
            let (mut leaves, mut rpg_dead) = (0, 0);
            visit_leaves(&task, &task.initial_search_state(), plan, &mut |ss, leaf| {
                if *leaf == samplan::model::ActionTree::Fail {
                    leaves += 1;
                    assert!(!oracle_solvable(&task, ss, Semantics::Weak).unwrap(), "seed {seed}");
                    if ff_h(&task, ss).unwrap().value.is_none() {
                        rpg_dead += 1;
                    }
                }
            });
            (leaves, rpg_dead)
        })
        .collect();
    let leaves: usize = stats.iter().map(|s| s.0).sum();
    let dead: usize = stats.iter().map(|s| s.1).sum();
    eprintln!("random weak plans: {leaves} FAIL leaves, {dead} with infinite planning-graph value");
    assert!(leaves > 0);
}
