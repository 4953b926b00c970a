use super::{ActionId, ModelError, PlanningTask};
use std::fmt::Write;

/// A plan: actions branching on their outcomes, ending in STOP or FAIL leaves.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ActionTree {
    Stop,
    Fail,
    /// `children[i]` continues after outcome `i` of `action`.
    Act { action: ActionId, children: Vec<ActionTree> },
}

impl ActionTree {
    /// Checks the shape constraints: one child per outcome, and no
    /// nondeterministic action twice on a root-to-leaf path.
    pub fn check_structure(&self, task: &PlanningTask) -> Result<(), ModelError> {
        let mut used = Vec::new();
        self.check_rec(task, &mut used, &mut String::from("root"))
    }

    fn check_rec(&self, task: &PlanningTask, used: &mut Vec<ActionId>, path: &mut String) -> Result<(), ModelError> {
        let ActionTree::Act { action, children } = self else {
            return Ok(());
        };
        if action.0 >= task.actions().len() {
            return Err(ModelError::InvalidTree { path: path.clone(), reason: format!("unknown action #{}", action.0) });
        }
        let a = task.action(*action);
        if children.len() != a.outcomes.len() {
            return Err(ModelError::InvalidTree {
                path: path.clone(),
                reason: format!("`{}` has {} outcomes but {} children", a.name, a.outcomes.len(), children.len()),
            });
        }
        let nondet = !a.is_deterministic();
        if nondet {
            if used.contains(action) {
                return Err(ModelError::InvalidTree {
                    path: path.clone(),
                    reason: format!("nondeterministic action `{}` repeated on one path", a.name),
                });
            }
            used.push(*action);
        }
        for (i, child) in children.iter().enumerate() {
            let len = path.len();
            let _ = write!(path, "/{}#{}", a.name, i);
            child.check_rec(task, used, path)?;
            path.truncate(len);
        }
        if nondet {
            used.pop();
        }
        Ok(())
    }

    /// Number of action nodes.
    pub fn size(&self) -> usize {
        match self {
            ActionTree::Act { children, .. } => 1 + children.iter().map(ActionTree::size).sum::<usize>(),
            _ => 0,
        }
    }

    pub fn fail_leaves(&self) -> usize {
        match self {
            ActionTree::Fail => 1,
            ActionTree::Stop => 0,
            ActionTree::Act { children, .. } => children.iter().map(ActionTree::fail_leaves).sum(),
        }
    }

    pub fn stop_leaves(&self) -> usize {
        match self {
            ActionTree::Stop => 1,
            ActionTree::Fail => 0,
            ActionTree::Act { children, .. } => children.iter().map(ActionTree::stop_leaves).sum(),
        }
    }

    /// Fraction of action nodes whose action is nondeterministic.
    pub fn nondet_fraction(&self, task: &PlanningTask) -> f64 {
        fn count(t: &ActionTree, task: &PlanningTask, acc: &mut (usize, usize)) {
            if let ActionTree::Act { action, children } = t {
                acc.0 += 1;
                if !task.action(*action).is_deterministic() {
                    acc.1 += 1;
                }
                children.iter().for_each(|c| count(c, task, acc));
            }
        }
        let mut acc = (0, 0);
        count(self, task, &mut acc);
        if acc.0 == 0 {
            0.0
        } else {
            acc.1 as f64 / acc.0 as f64
        }
    }

    /// Indented text rendering with outcome labels.
    pub fn render(&self, task: &PlanningTask) -> String {
        let mut out = String::new();
        self.render_rec(task, 0, &mut out);
        out
    }

    fn render_rec(&self, task: &PlanningTask, indent: usize, out: &mut String) {
        let pad = "  ".repeat(indent);
        match self {
            ActionTree::Stop => {
                let _ = writeln!(out, "{pad}STOP");
            }
            ActionTree::Fail => {
                let _ = writeln!(out, "{pad}FAIL");
            }
            ActionTree::Act { action, children } => {
                let a = task.action(*action);
                let _ = writeln!(out, "{pad}{}", a.name);
                if children.len() == 1 {
                    children[0].render_rec(task, indent, out);
                } else {
                    for (i, c) in children.iter().enumerate() {
                        let _ = writeln!(out, "{pad}  [{}]", task.assignment_name(&a.outcomes[i]));
                        c.render_rec(task, indent + 2, out);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples_data::{customer_quote_task, one_action_task};
    use proptest::prelude::*;

    #[test]
    fn wrong_child_count_rejected() {
        let task = one_action_task();
        let t = ActionTree::Act { action: ActionId(0), children: vec![ActionTree::Stop] };
        assert!(t.check_structure(&task).is_err());
    }

    #[test]
    fn cq_weak_plan_is_well_formed() {
        let task = customer_quote_task();
        let plan = crate::examples_data::customer_quote_weak_plan(&task);
        plan.check_structure(&task).unwrap();
        assert_eq!(plan.fail_leaves(), 3);
        assert_eq!(plan.stop_leaves(), 2);
        assert_eq!(plan.size(), 12);
    }

    // Random trees over the one-action task's single nondeterministic action:
    // a path may use it at most once.
    fn arb_tree() -> impl Strategy<Value = ActionTree> {
        let leaf = prop_oneof![Just(ActionTree::Stop), Just(ActionTree::Fail)];
        leaf.prop_recursive(4, 16, 2, |inner| {
            (inner.clone(), inner).prop_map(|(a, b)| ActionTree::Act { action: ActionId(0), children: vec![a, b] })
        })
    }

    fn max_depth(t: &ActionTree) -> usize {
        match t {
            ActionTree::Act { children, .. } => 1 + children.iter().map(max_depth).max().unwrap_or(0),
            _ => 0,
        }
    }

    proptest! {
        #[test]
        fn repeated_nondet_on_path_rejected_iff_present(t in arb_tree()) {
            let task = one_action_task();
            let ok = t.check_structure(&task).is_ok();
            prop_assert_eq!(ok, max_depth(&t) <= 1);
        }
    }
}
