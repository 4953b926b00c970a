//! Define a business object in the native JSON format, leave one status
//! unspecified in the initial state, and plan for it.
//!
//! An unset variable satisfies neither an atom nor its negation, so with
//! `payment` unset the `not rejected` precondition of `Pay Invoice` blocks
//! and the goal becomes unreachable.
//!
//! cargo run --example custom_model

use samplan::process::plan_to_process;
use samplan::search::{solve, SearchConfig};
use samplan::task_io::{compile_bo, read_model_file, InitOverride};

const MODEL: &str = r#"{
  "objects": [{
    "id": "INV",
    "name": "Invoice",
    "variables": [
      {"name": "verified", "domain": ["no", "yes"], "initial": "no"},
      {"name": "payment", "domain": ["open", "paid", "rejected"], "initial": "open"}
    ],
    "actions": [
      {"name": "Verify Invoice", "pre": {"var": "verified", "val": "no"},
       "eff": [[{"var": "verified", "val": "yes"}], [{"var": "payment", "val": "rejected"}]]},
      {"name": "Pay Invoice", "pre": {"and": [{"var": "verified", "val": "yes"}, {"not": {"var": "payment", "val": "rejected"}}]},
       "eff": [[{"var": "payment", "val": "paid"}]]}
    ]
  }]
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let objects = read_model_file(MODEL)?;
    let goal = vec![("INV.payment".to_string(), "paid".to_string())];
    for overrides in [vec![], vec![InitOverride::Unset { var: "INV.payment".into() }]] {
        let task = compile_bo(&objects, &goal, &overrides, Default::default())?;
        let r = solve(&task, &SearchConfig::default());
        println!("overrides {overrides:?}: {:?} ({})", r.verdict.kind(), r.semantics);
        if let Some(plan) = r.verdict.plan() {
            println!("{}", plan.render(&task));
            println!("{:?}", plan_to_process(&task, plan)?.kind_counts());
        }
    }
    Ok(())
}
