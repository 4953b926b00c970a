//! Process graphs compiled from searched plans are well formed and accept
//! exactly the successful executions of the plan.

use rayon::prelude::*;
use samplan::experiments::{random_task, RandomTaskParams};
use samplan::process::{from_json, plan_to_process, strip_failed, to_json};
use samplan::search::{solve, SearchConfig};

#[test]
fn random_plans_compile_to_equivalent_processes() {
    let compiled: usize = (0..1000u64)
        .into_par_iter()
        .map(|seed| {
            let task = random_task(seed, RandomTaskParams::default());
            let r = solve(&task, &SearchConfig::weak());
            let Some(plan) = r.verdict.plan() else { return 0 };
            let g = plan_to_process(&task, plan).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
            g.check_invariants().unwrap_or_else(|e| panic!("seed {seed}: {e}"));
            samplan::process::check_language(&task, plan, &g).unwrap_or_else(|e| panic!("seed {seed}: {e}"));

            let counts = g.kind_counts();
            let tasks = counts.get("task").copied().unwrap_or(0);
            assert!(tasks <= strip_failed(plan).unwrap().size(), "seed {seed}");
            assert_eq!(counts.get("and_split"), counts.get("and_join"), "seed {seed}");
            assert_eq!(from_json(&to_json(&g)).unwrap(), g);
            1
        })
        .sum();
    assert!(compiled > 100, "{compiled}");
}
