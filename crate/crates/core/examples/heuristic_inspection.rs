//! Relaxed planning graph values, relaxed plans and helpful actions.
//!
//! cargo run --example heuristic_inspection

use samplan::examples_data::{customer_quote_task, two_checks_task};
use samplan::heuristic::{FfHeuristic, Heuristic};
use samplan::model::PlanningTask;

fn show(task: &PlanningTask) {
    let mut h = FfHeuristic::new(task).expect("determinizable");
    let root = task.initial_search_state();
    let out = h.evaluate(&root);
    let rpg = h.rpg(&root);
    println!("h = {:?}, goal layer {:?}, {} layers", out.value, rpg.level, rpg.layers.len());
    let det = h.determinization().clone();
    for &i in &out.relaxed_plan {
        let e = &det.entries()[i];
        let a = task.action(e.action);
        println!("  relaxed plan: {} [{}]", a.name, task.assignment_name(&a.outcomes[e.outcome]));
    }
    for a in &out.helpful {
        println!("  helpful: {}", task.action(*a).name);
    }
    for a in task.applicable(&root) {
        for o in 0..task.action(a).outcomes.len() {
            let next = task.successor(&root, a, o);
            println!("  after {} [{}]: h = {:?}", task.action(a).name, o, h.evaluate(&next).value);
        }
    }
}

fn main() {
    println!("two checks:");
    show(&two_checks_task());
    println!("\ncustomer quote:");
    show(&customer_quote_task());
}
