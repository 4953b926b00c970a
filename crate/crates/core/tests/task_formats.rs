//! The JSON and PDDL front ends agree, and printing round-trips.

use proptest::prelude::*;
use samplan::examples_data::*;
use samplan::experiments::{random_task, RandomTaskParams};
use samplan::model::{formula_to_dnf, DEFAULT_DNF_LIMIT};
use samplan::model::{PlanningTask, Semantics};
use samplan::oracle::oracle_solvable;
use samplan::task_io::{parse_pddl, print_pddl, read_task, write_task};
use std::collections::{BTreeMap, BTreeSet};

type Canonical = (
    BTreeMap<String, BTreeSet<String>>,
    BTreeMap<String, String>,
    BTreeSet<String>,
    Vec<(BTreeSet<BTreeSet<String>>, Vec<BTreeSet<String>>)>,
);

fn assert_same(a: &PlanningTask, b: &PlanningTask) {
    let (a, b) = (canonical(a), canonical(b));
    assert_eq!(a.0, b.0, "variables");
    assert_eq!(a.1, b.1, "initial state");
    assert_eq!(a.2, b.2, "goal");
    assert_eq!(a.3, b.3, "actions");
}

/// The task up to variable and action order and action names, with
/// preconditions in DNF.
fn canonical(task: &PlanningTask) -> Canonical {
    let vars = task.variables().iter().map(|v| (v.name.clone(), v.domain.iter().cloned().collect())).collect();
    let init = task
        .variables()
        .iter()
        .zip(task.initial().values())
        .map(|(v, &x)| (v.name.clone(), v.domain[x as usize].clone()))
        .collect();
    let goal = task.goal().iter().map(|f| task.fact_name(*f)).collect();
    let mut actions: Vec<_> = task
        .actions()
        .iter()
        .map(|a| {
            let dnf = formula_to_dnf(&a.precondition, task.variables(), DEFAULT_DNF_LIMIT).unwrap();
            let pre = dnf.iter().map(|c| c.iter().map(|f| task.fact_name(*f)).collect()).collect();
            let outs = a.outcomes.iter().map(|o| o.facts().iter().map(|f| task.fact_name(*f)).collect()).collect();
            (pre, outs)
        })
        .collect();
    actions.sort();
    (vars, init, goal, actions)
}

#[test]
fn pddl_and_json_customer_quote_are_the_same_task() {
    let from_pddl = parse_pddl(CUSTOMER_QUOTE_DOMAIN_PDDL, CUSTOMER_QUOTE_PROBLEM_PDDL).unwrap();
    assert_same(&from_pddl, &customer_quote_task());
}

#[test]
fn customer_quote_survives_pddl_and_json_printing() {
    let task = customer_quote_task();
    let (d, p) = print_pddl(&task).unwrap();
    assert_same(&parse_pddl(&d, &p).unwrap(), &task);
    assert_same(&read_task(&write_task(&task)).unwrap(), &task);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_tasks_round_trip(seed in any::<u64>()) {
        let task = random_task(seed, RandomTaskParams::default());
        let json = read_task(&write_task(&task)).unwrap();
        prop_assert_eq!(canonical(&json), canonical(&task));

        let (d, p) = print_pddl(&task).unwrap();
        let pddl = parse_pddl(&d, &p).unwrap();
        let root = task.initial_search_state();
        for sem in [Semantics::Strong, Semantics::Weak] {
            prop_assert_eq!(
                oracle_solvable(&pddl, &pddl.initial_search_state(), sem).unwrap(),
                oracle_solvable(&task, &root, sem).unwrap()
            );
        }
    }
}
