//! Cross-check search verdicts against exhaustive solvability on random tasks.
//!
//! cargo run --release --example oracle_agreement -- [tasks]

use samplan::experiments::{random_task, RandomTaskParams};
use samplan::model::Semantics;
use samplan::oracle::oracle_solvable;
use samplan::search::{solve, SearchConfig};

fn main() {
    let n: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1000);
    let (mut strong, mut weak, mut disagree) = (0, 0, 0);
    for seed in 0..n {
        let task = random_task(seed, RandomTaskParams::default());
        for sem in [Semantics::Strong, Semantics::Weak] {
            let config = match sem {
                Semantics::Strong => SearchConfig::strong(),
                Semantics::Weak => SearchConfig::weak(),
            }
            .with_pruning(false);
            let expected = oracle_solvable(&task, &task.initial_search_state(), sem).expect("small task");
            let found = solve(&task, &config).verdict.plan().is_some();
            if found != expected {
                disagree += 1;
                println!("seed {seed}, {sem}: oracle {expected}, search {found}");
            }
            match (sem, expected) {
                (Semantics::Strong, true) => strong += 1,
                (Semantics::Weak, true) => weak += 1,
                _ => {}
            }
        }
    }
    println!("{n} tasks: {strong} strongly solvable, {weak} weakly solvable, {disagree} disagreements");
}
