//! Solve conjoined goals over k independent copies of the Customer Quote
//! object (COM_k) and compare with the summed single-object effort (ACC_k).
//!
//! The per-object goal is the hardest goal solved in a generated CQ suite.
//!
//! cargo run --release --example cross_object_scaling -- [max_k]

use samplan::examples_data::customer_quote;
use samplan::experiments::{copies, generate, hardest_solved, run_suite, scaling, GeneratorSpec, SuiteConfig};
use samplan::search::SearchConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let max_k: usize = std::env::args().nth(1).map(|a| a.parse()).transpose()?.unwrap_or(14);
    let cq = customer_quote();
    let mut instances = Vec::new();
    for g in 1..=cq.variables.len() {
        instances.extend(generate(&GeneratorSpec::new(cq.clone(), g).with_samples(5).with_seed(1))?);
    }
    let (records, _) = run_suite(&instances, &[SuiteConfig::new("weak", SearchConfig::weak())]);
    let hardest = hardest_solved(&records).ok_or("no instance solved")?;
    let goal = instances.iter().find(|i| i.id == hardest.instance).expect("recorded instance").bundle.goal.clone();
    println!("m(CQ) = {} ({} evaluations): {goal:?}", hardest.instance, hardest.evaluations);

    let (objects, goals) = copies(&cq, &goal, max_k);
    println!("{:>3} {:>10} {:>10} {:>10} {:>14}", "k", "COM_k", "ACC_k", "ms", "verdict");
    for p in scaling(&objects, &goals, max_k, &SearchConfig::weak())? {
        println!("{:>3} {:>10} {:>10} {:>10.1} {:>14?}", p.k, p.com, p.acc, p.wall_ms, p.verdict);
    }
    Ok(())
}
