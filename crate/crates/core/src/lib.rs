//! Planning for business-object models with nondeterministic actions.
//!
//! A task is a finite-domain state space where some actions have several
//! possible outcomes, each usable at most once along an execution. The
//! planner searches an AND-OR graph for a plan tree that reaches the goal on
//! at least one branch and only gives up on outcomes from which the goal is
//! provably unreachable, then compiles that tree into a process graph.
//!
//! ```
//! use samplan::examples_data::customer_quote_task;
//! use samplan::search::{solve, SearchConfig, Verdict};
//!
//! let task = customer_quote_task();
//! let result = solve(&task, &SearchConfig::weak());
//! assert!(matches!(result.verdict, Verdict::Plan(_)));
//! ```

pub mod examples_data;
pub mod experiments;
pub mod heuristic;
pub mod model;
pub mod oracle;
pub mod process;
pub mod search;
pub mod service;
pub mod task_io;
