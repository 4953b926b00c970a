//! Compile a weak plan into a process graph and write it as JSON, DOT and BPMN XML.
//!
//! cargo run --example process_export -- [out_dir]

use samplan::examples_data::{customer_quote_task, customer_quote_weak_plan};
use samplan::process::{check_language, emit, merge_identical_subtrees, parallelize, split_checks, strip_failed, Format};
use std::path::PathBuf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "process_out".into()));
    let task = customer_quote_task();
    let plan = customer_quote_weak_plan(&task);

    let stripped = strip_failed(&plan)?;
    let flagged: Vec<&str> = stripped.flagged().iter().map(|a| task.action(*a).name.as_str()).collect();
    println!("may fail: {flagged:?}");
    let split = split_checks(&task, &stripped);
    println!("after split:    {:?}", split.kind_counts());
    let merged = merge_identical_subtrees(&split);
    println!("after merge:    {:?}", merged.kind_counts());
    let graph = parallelize(&merged, &task);
    println!("after parallel: {:?}", graph.kind_counts());
    check_language(&task, &plan, &graph)?;
    println!("graph executions match the plan's successful paths");

    std::fs::create_dir_all(&dir)?;
    for (f, ext) in [(Format::Json, "json"), (Format::Dot, "dot"), (Format::Bpmn, "bpmn")] {
        let path = dir.join(format!("customer_quote.{ext}"));
        std::fs::write(&path, emit(&graph, f))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
