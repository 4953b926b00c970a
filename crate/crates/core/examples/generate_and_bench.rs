//! Generate goals over the Customer Quote object and compare FF against
//! blind search on an evaluation budget.
//!
//! cargo run --release --example generate_and_bench -- [samples] [seed]

use samplan::examples_data::customer_quote;
use samplan::experiments::{generate, run_suite, write_csv, GeneratorSpec, SuiteConfig};
use samplan::search::{HeuristicKind, Mode, SearchConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let samples: usize = args.next().map(|a| a.parse()).transpose()?.unwrap_or(5);
    let seed: u64 = args.next().map(|a| a.parse()).transpose()?.unwrap_or(1);
    let cq = customer_quote();
    let mut instances = Vec::new();
    for g in 1..=cq.variables.len() {
        instances.extend(generate(&GeneratorSpec::new(cq.clone(), g).with_samples(samples).with_seed(seed))?);
    }
    let budget = |h| SearchConfig { mode: Mode::Weak, heuristic: h, max_evaluations: Some(10_000), ..Default::default() };
    let configs = [SuiteConfig::new("ff", budget(HeuristicKind::Ff)), SuiteConfig::new("blind", budget(HeuristicKind::Blind))];
    let (records, agg) = run_suite(&instances, &configs);

    println!("{} instances", instances.len());
    for (name, by_size) in &agg.by_goal_size {
        for (g, c) in by_size {
            println!(
                "{name:>6} |G|={g}: {:>3}/{:<3} solved, mean evaluations {:>8.1}, nondeterministic share {:.2}",
                c.solved,
                c.instances,
                c.mean_evaluations_solved.unwrap_or(0.0),
                c.mean_nondet_fraction.unwrap_or(0.0)
            );
        }
    }
    let path = "bench_customer_quote.csv";
    write_csv(&records, std::fs::File::create(path)?)?;
    println!("records in {path}");
    Ok(())
}
