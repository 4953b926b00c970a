//! Solve the Customer Quote task and print the plan and its process graph.
//!
//! cargo run --example quickstart

use samplan::examples_data::customer_quote_task;
use samplan::process::{plan_to_process, to_dot};
use samplan::search::{solve, SearchConfig};

fn main() {
    let task = customer_quote_task();
    let result = solve(&task, &SearchConfig::default());
    println!("verdict: {:?} ({} plan)", result.verdict.kind(), result.semantics);
    println!("evaluations: {}, wall: {:.2} ms", result.stats.evaluations, result.stats.wall_time_ms);

    let Some(plan) = result.verdict.plan() else { return };
    println!("\n{}", plan.render(&task));
    let graph = plan_to_process(&task, plan).expect("plan compiles");
    println!("node kinds: {:?}", graph.kind_counts());
    println!("\n{}", to_dot(&graph));
}
