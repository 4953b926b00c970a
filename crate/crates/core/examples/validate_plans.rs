//! Check plans against the strong and weak definitions, with different ways
//! of proving that FAIL leaves are hopeless.
//!
//! cargo run --example validate_plans

use samplan::examples_data::{customer_quote_task, customer_quote_weak_plan};
use samplan::model::{ActionTree, Semantics};
use samplan::search::{validate_plan, Certifier};

fn main() {
    let task = customer_quote_task();
    let plan = customer_quote_weak_plan(&task);
    let certifiers = [
        ("planning graph", Certifier::RpgInfinity),
        ("oracle", Certifier::Oracle { limit: 1_000_000 }),
        ("search", Certifier::Search { max_evaluations: 100_000 }),
    ];
    for (name, c) in &certifiers {
        let r = validate_plan(&task, &plan, Semantics::Weak, c.clone());
        println!("weak, {name}: valid={} ({} FAIL leaves)", r.valid, r.fail_leaves);
    }
    let r = validate_plan(&task, &plan, Semantics::Strong, Certifier::RpgInfinity);
    println!("strong: {:?}", r.violation);

    // Give up on the approval check's `notNecessary` outcome, which is solvable.
    let mut broken = plan.clone();
    if let ActionTree::Act { children, .. } = &mut broken {
        if let ActionTree::Act { children, .. } = &mut children[0] {
            if let ActionTree::Act { children, .. } = &mut children[0] {
                children[1] = ActionTree::Fail;
            }
        }
    }
    let r = validate_plan(&task, &broken, Semantics::Weak, Certifier::RpgInfinity);
    println!("broken plan: {:?}", r.violation);
}
