//! Strong planning first, weak planning when no strong plan exists.
//!
//! The Customer Quote task has no strong plan: every check can fail. The
//! second task shows the smallest weak plan, an action with one outcome
//! that reaches the goal and one that cannot.
//!
//! cargo run --example strong_then_weak

use samplan::examples_data::{customer_quote_task, one_action_task};
use samplan::model::PlanningTask;
use samplan::search::{solve, Mode, SearchConfig};

fn report(name: &str, task: &PlanningTask) {
    for mode in [Mode::Strong, Mode::Weak, Mode::Auto] {
        let r = solve(task, &SearchConfig { mode, ..Default::default() });
        let leaves = r.verdict.plan().map_or(0, |p| p.fail_leaves());
        println!(
            "{name:>14} {:>6}: {:>10} via {:<6} evaluations {:>4}, FAIL leaves {leaves}",
            format!("{mode:?}"),
            format!("{:?}", r.verdict.kind()),
            r.semantics,
            r.stats.evaluations
        );
    }
}

fn main() {
    report("customer quote", &customer_quote_task());
    let task = one_action_task();
    report("one action", &task);
    let weak = solve(&task, &SearchConfig::weak());
    println!("\n{}", weak.verdict.plan().expect("weak plan").render(&task));
}
