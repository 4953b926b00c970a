//! Exhaustive solvability check for small tasks.
//!
//! Solvability is a function of the search state `(s, available)`. For a
//! fixed availability, a state is solvable iff it reaches, by deterministic
//! actions only, a goal state or a state where some available
//! nondeterministic action has good enough children. Children have strictly
//! fewer available actions, so the recursion is well founded.

use crate::model::{ActionId, PlanningTask, SearchState, Semantics};
use std::collections::{HashMap, HashSet, VecDeque};
use thiserror::Error;

pub const DEFAULT_ORACLE_LIMIT: usize = 2_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("more than {0} search states visited")]
    BoundExceeded(usize),
}

pub struct Oracle<'t> {
    task: &'t PlanningTask,
    semantics: Semantics,
    limit: usize,
    solvable: HashMap<SearchState, bool>,
    base: HashMap<SearchState, bool>,
    det: Vec<ActionId>,
}

impl<'t> Oracle<'t> {
    pub fn new(task: &'t PlanningTask, semantics: Semantics) -> Self {
        let det = (0..task.actions().len()).map(ActionId).filter(|&a| task.action(a).is_deterministic()).collect();
        Oracle { task, semantics, limit: DEFAULT_ORACLE_LIMIT, solvable: HashMap::new(), base: HashMap::new(), det }
    }

    pub fn with_limit(mut self, limit: usize) -> Self {
        self.limit = limit;
        self
    }

    pub fn semantics(&self) -> Semantics {
        self.semantics
    }

    fn check_bound(&self) -> Result<(), OracleError> {
        if self.solvable.len() + self.base.len() > self.limit {
            Err(OracleError::BoundExceeded(self.limit))
        } else {
            Ok(())
        }
    }

    /// Goal, or some available nondeterministic action whose outcomes qualify.
    fn base_good(&mut self, ss: &SearchState) -> Result<bool, OracleError> {
        if let Some(&b) = self.base.get(ss) {
            return Ok(b);
        }
        self.check_bound()?;
        let task = self.task;
        let mut good = task.goal_satisfied(&ss.state);
        if !good {
            for &a in task.nondeterministic() {
                if !task.is_applicable(ss, a) {
                    continue;
                }
                let n = task.action(a).outcomes.len();
                let ok = match self.semantics {
                    Semantics::Weak => {
                        let mut any = false;
                        for o in 0..n {
                            if self.solvable(&task.successor(ss, a, o))? {
                                any = true;
                                break;
                            }
                        }
                        any
                    }
                    Semantics::Strong => {
                        let mut all = true;
                        for o in 0..n {
                            if !self.solvable(&task.successor(ss, a, o))? {
                                all = false;
                                break;
                            }
                        }
                        all
                    }
                };
                if ok {
                    good = true;
                    break;
                }
            }
        }
        self.base.insert(ss.clone(), good);
        Ok(good)
    }

    /// Whether a plan exists for `ss` under the oracle's semantics.
    pub fn solvable(&mut self, ss: &SearchState) -> Result<bool, OracleError> {
        if let Some(&b) = self.solvable.get(ss) {
            return Ok(b);
        }
        let mut seen: HashSet<SearchState> = HashSet::new();
        let mut queue = VecDeque::from([ss.clone()]);
        seen.insert(ss.clone());
        let mut found = false;
        while let Some(cur) = queue.pop_front() {
            if self.solvable.get(&cur) == Some(&true) || self.base_good(&cur)? {
                found = true;
                break;
            }
            if self.solvable.get(&cur) == Some(&false) {
                continue;
            }
            for i in 0..self.det.len() {
                let a = self.det[i];
                if self.task.is_applicable(&cur, a) {
                    let next = self.task.successor(&cur, a, 0);
                    if seen.insert(next.clone()) {
                        if seen.len() > self.limit {
                            return Err(OracleError::BoundExceeded(self.limit));
                        }
                        queue.push_back(next);
                    }
                }
            }
        }
        if found {
            self.solvable.insert(ss.clone(), true);
        } else {
            // Nothing reachable from here is good, so nothing reachable is solvable.
            for s in seen {
                self.solvable.insert(s, false);
            }
        }
        self.check_bound()?;
        Ok(found)
    }
}

pub fn oracle_solvable(task: &PlanningTask, ss: &SearchState, semantics: Semantics) -> Result<bool, OracleError> {
    Oracle::new(task, semantics).solvable(ss)
}
