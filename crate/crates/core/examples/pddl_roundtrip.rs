//! Parse a typed PDDL domain with `oneof` effects, print the grounded task
//! back as PDDL and parse it again.
//!
//! cargo run --example pddl_roundtrip -- [domain.pddl problem.pddl]

use samplan::examples_data::{CUSTOMER_QUOTE_DOMAIN_PDDL, CUSTOMER_QUOTE_PROBLEM_PDDL};
use samplan::search::{solve, SearchConfig};
use samplan::task_io::{parse_pddl, print_pddl};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (domain, problem) = match &args[..] {
        [d, p] => (std::fs::read_to_string(d)?, std::fs::read_to_string(p)?),
        _ => (CUSTOMER_QUOTE_DOMAIN_PDDL.to_string(), CUSTOMER_QUOTE_PROBLEM_PDDL.to_string()),
    };
    let task = parse_pddl(&domain, &problem)?;
    println!("{} variables, {} actions ({} nondeterministic)", task.variables().len(), task.actions().len(), task.nondeterministic().len());
    for v in task.variables() {
        println!("  {} ∈ {:?}", v.name, v.domain);
    }

    let (d2, p2) = print_pddl(&task)?;
    let again = parse_pddl(&d2, &p2)?;
    println!("reprinted task: {} variables, {} actions", again.variables().len(), again.actions().len());

    let a = solve(&task, &SearchConfig::weak());
    let b = solve(&again, &SearchConfig::weak());
    println!("plan sizes: {:?} / {:?}", a.verdict.plan().map(|p| p.size()), b.verdict.plan().map(|p| p.size()));
    println!("\n{d2}");
    Ok(())
}
