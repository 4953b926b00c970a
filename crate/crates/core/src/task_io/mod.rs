//! Loading and storing planning problems.
//!
//! Three routes produce a [`PlanningTask`]: compiling business objects plus a
//! problem ([`compile_bo`]), reading the native JSON task file ([`read_task`]),
//! and grounding a PDDL domain/problem pair ([`parse_pddl`]).

mod json;
mod pddl;

pub use json::{
    from_json,
    plan_from_doc, plan_from_json, plan_to_doc, plan_to_json, read_model_file, read_problem_file, read_task,
    read_task_file, write_task, write_task_file, ActDoc, ActionDoc, AtomDoc, BranchDoc, FormulaDoc, LeafDoc,
    ModelDocument, ObjectDoc, OverrideDoc, PlanDoc, ProblemDocument, UnsetDoc, VariableDoc,
};
pub use pddl::{parse_pddl, print_pddl};

use crate::model::{Action, Conjunction, Fact, Formula, ModelError, PartialAssignment, PlanningTask, Variable};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TaskIoError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{line}:{column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("unsupported PDDL construct: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },
}

impl TaskIoError {
    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        TaskIoError::Schema { path: path.into(), message: message.into() }
    }
}

/// A business object: status variables with initial values, and actions
/// whose effects are DNF formulas. Formulas use object-local variable indices.
#[derive(Clone, Debug, PartialEq)]
pub struct BusinessObject {
    pub id: String,
    pub name: String,
    pub variables: Vec<Variable>,
    pub actions: Vec<BoAction>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoAction {
    pub name: String,
    pub pre: Formula,
    /// Effect in DNF: one conjunction of atoms per disjunct.
    pub eff: Vec<Conjunction>,
}

impl BusinessObject {
    /// Display name of a variable once compiled into a task.
    pub fn qualified(&self, var: &str) -> String {
        if self.id.is_empty() {
            var.to_string()
        } else {
            format!("{}.{}", self.id, var)
        }
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    /// A copy under a different id, used to build multi-object instances.
    pub fn renamed(&self, id: &str) -> BusinessObject {
        let mut copy = self.clone();
        copy.id = id.to_string();
        copy.name = format!("{} ({})", self.name, id);
        for v in &mut copy.variables {
            v.owner = Some(id.to_string());
        }
        copy
    }
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionScope {
    /// Only actions of objects mentioned in the goal.
    BoRelevant,
    #[default]
    Full,
}

/// Initial-state change requested on top of the objects' declared initial values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InitOverride {
    Value { var: String, value: String },
    /// Leave the variable unspecified: atoms over it are false until set.
    Unset { var: String },
}

/// Objects plus one problem over them. Variable references are qualified
/// (`"CQ.archiving"`).
#[derive(Clone, Debug)]
pub struct ProblemBundle {
    pub objects: Arc<[BusinessObject]>,
    pub overrides: Vec<InitOverride>,
    pub goal: Vec<(String, String)>,
    pub scope: ActionScope,
}

impl ProblemBundle {
    pub fn new(objects: impl Into<Arc<[BusinessObject]>>, goal: Vec<(String, String)>) -> Self {
        ProblemBundle { objects: objects.into(), overrides: Vec::new(), goal, scope: ActionScope::Full }
    }

    pub fn with_scope(mut self, scope: ActionScope) -> Self {
        self.scope = scope;
        self
    }

    pub fn with_overrides(mut self, overrides: Vec<InitOverride>) -> Self {
        self.overrides = overrides;
        self
    }

    pub fn compile(&self) -> Result<PlanningTask, TaskIoError> {
        compile_bo(&self.objects, &self.goal, &self.overrides, self.scope)
    }
}

/// Loads a task from files: one JSON task file, a JSON model plus a JSON
/// problem, or a PDDL domain plus a PDDL problem.
pub fn load_task<P: AsRef<Path>>(paths: &[P]) -> Result<PlanningTask, TaskIoError> {
    let is_pddl = |p: &Path| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("pddl"));
    let read = |p: &P| {
        std::fs::read_to_string(p.as_ref())
            .map_err(|source| TaskIoError::File { path: p.as_ref().display().to_string(), source })
    };
    match paths {
        [task] => read_task(&read(task)?),
        [a, b] if is_pddl(a.as_ref()) && is_pddl(b.as_ref()) => parse_pddl(&read(a)?, &read(b)?),
        [model, problem] => {
            let objects = read_model_file(&read(model)?)?;
            let problem = read_problem_file(&read(problem)?)?;
            compile_bo(&objects, &problem.goal_pairs(), &problem.overrides()?, problem.scope)
        }
        _ => Err(TaskIoError::schema("inputs", "expected a task file, model and problem files, or a PDDL domain and problem")),
    }
}

/// Finds the object and local variable index behind a qualified name.
fn resolve(objects: &[BusinessObject], qualified: &str) -> Option<(usize, usize)> {
    objects.iter().enumerate().find_map(|(oi, o)| {
        let local = if o.id.is_empty() {
            qualified
        } else {
            qualified.strip_prefix(o.id.as_str())?.strip_prefix('.')?
        };
        o.variable_index(local).map(|vi| (oi, vi))
    })
}

fn shift_formula(f: &Formula, offset: usize) -> Formula {
    match f {
        Formula::Atom(a) => Formula::Atom(Fact::new(a.var.0 + offset, a.value)),
        Formula::Not(c) => Formula::not(shift_formula(c, offset)),
        Formula::And(cs) => Formula::And(cs.iter().map(|c| shift_formula(c, offset)).collect()),
        Formula::Or(cs) => Formula::Or(cs.iter().map(|c| shift_formula(c, offset)).collect()),
    }
}

/// Compiles business objects and a goal into a planning task.
///
/// Variables are the union of all objects' variables, in object order. Each
/// object action becomes one task action with one outcome per effect disjunct.
pub fn compile_bo(
    objects: &[BusinessObject],
    goal: &[(String, String)],
    overrides: &[InitOverride],
    scope: ActionScope,
) -> Result<PlanningTask, TaskIoError> {
    let mut offsets = Vec::with_capacity(objects.len());
    let mut variables = Vec::new();
    for o in objects {
        offsets.push(variables.len());
        for v in &o.variables {
            let mut v = v.clone();
            v.name = o.qualified(&v.name);
            v.owner = if o.id.is_empty() { None } else { Some(o.id.clone()) };
            variables.push(v);
        }
    }

    let lookup = |qualified: &str, path: &str| -> Result<(usize, usize), TaskIoError> {
        let (oi, vi) =
            resolve(objects, qualified).ok_or_else(|| TaskIoError::schema(path, format!("unknown variable `{qualified}`")))?;
        Ok((oi, offsets[oi] + vi))
    };

    for (i, ov) in overrides.iter().enumerate() {
        let path = format!("init_overrides[{i}]");
        match ov {
            InitOverride::Value { var, value } => {
                let (_, gi) = lookup(var, &path)?;
                let v = &mut variables[gi];
                v.initial = v
                    .value_index(value)
                    .ok_or_else(|| TaskIoError::schema(&path, format!("`{value}` is not a value of `{var}`")))?;
            }
            InitOverride::Unset { var } => {
                let (_, gi) = lookup(var, &path)?;
                variables[gi].start_unset();
            }
        }
    }

    let mut goal_facts = Vec::with_capacity(goal.len());
    let mut relevant = vec![false; objects.len()];
    for (i, (var, value)) in goal.iter().enumerate() {
        let path = format!("goal[{i}]");
        let (oi, gi) = lookup(var, &path)?;
        relevant[oi] = true;
        let idx = variables[gi]
            .value_index(value)
            .ok_or_else(|| TaskIoError::schema(&path, format!("`{value}` is not a value of `{var}`")))?;
        goal_facts.push(Fact::new(gi, idx));
    }

    // Names shared by several objects are qualified with the object id.
    let mut name_count: HashMap<&str, usize> = HashMap::new();
    for o in objects {
        for a in &o.actions {
            *name_count.entry(a.name.as_str()).or_insert(0) += 1;
        }
    }
    let mut actions = Vec::new();
    for (oi, o) in objects.iter().enumerate() {
        if scope == ActionScope::BoRelevant && !relevant[oi] {
            continue;
        }
        let offset = offsets[oi];
        for a in &o.actions {
            let mut outcomes: Vec<PartialAssignment> = Vec::with_capacity(a.eff.len());
            for conj in &a.eff {
                let facts = conj.iter().map(|f| Fact::new(f.var.0 + offset, f.value)).collect::<Vec<_>>();
                let pa = PartialAssignment::new(facts).map_err(|_| {
                    TaskIoError::schema(
                        format!("objects[{oi}].actions[{}]", a.name),
                        "effect disjunct assigns one variable two different values",
                    )
                })?;
                if outcomes.contains(&pa) {
                    log::warn!("{}: duplicate effect disjunct dropped", a.name);
                    continue;
                }
                outcomes.push(pa);
            }
            let name = if name_count[a.name.as_str()] > 1 && !o.id.is_empty() {
                format!("{} [{}]", a.name, o.id)
            } else {
                a.name.clone()
            };
            let mut action = Action::new(name, shift_formula(&a.pre, offset), outcomes);
            action.owner = if o.id.is_empty() { None } else { Some(o.id.clone()) };
            actions.push(action);
        }
    }
    Ok(PlanningTask::new(variables, actions, goal_facts)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples_data::{customer_quote, customer_quote_task};
    use crate::model::ActionId;

    #[test]
    fn cq_compiles_to_listing() {
        let task = customer_quote_task();
        assert_eq!(task.variables().len(), 7);
        let det: Vec<&str> = task.actions().iter().filter(|a| a.is_deterministic()).map(|a| a.name.as_str()).collect();
        assert_eq!(det, vec!["Submit CQ", "Mark CQ as Accepted", "Create Follow-Up for CQ", "Archive CQ"]);
        assert_eq!(task.nondeterministic().len(), 4);
        for &a in task.nondeterministic() {
            assert_eq!(task.action(a).outcomes.len(), 2);
        }
        assert_eq!(task.goal().len(), 2);
        assert_eq!(task.variable(task.var_by_name("CQ.approval").unwrap()).domain.len(), 5);
    }

    #[test]
    fn trivial_object_goal_true_initially() {
        let v = Variable::new("flag", &["off", "on"], "on").unwrap();
        let o = BusinessObject { id: "B".into(), name: "B".into(), variables: vec![v], actions: vec![] };
        let task = compile_bo(&[o], &[("B.flag".into(), "on".into())], &[], ActionScope::Full).unwrap();
        assert!(task.actions().is_empty());
        assert!(task.goal_satisfied(task.initial()));
    }

    #[test]
    fn scope_filters_actions() {
        let cq = customer_quote();
        let other = cq.renamed("CQ2");
        let objects = vec![cq, other];
        let goal = vec![("CQ.archiving".to_string(), "archived".to_string())];
        let full = compile_bo(&objects, &goal, &[], ActionScope::Full).unwrap();
        let rel = compile_bo(&objects, &goal, &[], ActionScope::BoRelevant).unwrap();
        assert_eq!(full.actions().len(), 16);
        assert_eq!(rel.actions().len(), 8);
        assert_eq!(rel.variables().len(), 14);
        assert!(rel.actions().iter().all(|a| a.owner.as_deref() == Some("CQ")));
        for a in rel.actions() {
            assert!(full.actions().contains(a));
            assert!(a.name.ends_with(" [CQ]"));
        }
        assert_eq!(full.actions()[8].name, "Check CQ Completeness [CQ2]");
    }

    #[test]
    fn unknown_goal_variable_is_an_error() {
        let err = compile_bo(&[customer_quote()], &[("CQ.nope".into(), "x".into())], &[], ActionScope::Full).unwrap_err();
        assert!(err.to_string().contains("goal[0]"), "{err}");
        let err = compile_bo(&[customer_quote()], &[("CQ.archiving".into(), "x".into())], &[], ActionScope::Full).unwrap_err();
        assert!(err.to_string().contains("not a value"), "{err}");
    }

    #[test]
    fn duplicate_disjuncts_deduplicated() {
        let mut o = customer_quote();
        let first = o.actions[0].eff[0].clone();
        o.actions[0].eff.push(first);
        let task = compile_bo(&[o], &[], &[], ActionScope::Full).unwrap();
        assert_eq!(task.action(ActionId(0)).outcomes.len(), 2);
    }

    #[test]
    fn contradictory_disjunct_rejected() {
        let mut o = customer_quote();
        o.actions[0].eff[0] = vec![Fact::new(1, 0), Fact::new(1, 1)];
        assert!(compile_bo(&[o], &[], &[], ActionScope::Full).is_err());
    }

    #[test]
    fn unset_override_uses_reserved_value() {
        let task = compile_bo(
            &[customer_quote()],
            &[("CQ.archiving".into(), "archived".into())],
            &[InitOverride::Unset { var: "CQ.approval".into() }],
            ActionScope::Full,
        )
        .unwrap();
        let appr = task.var_by_name("CQ.approval").unwrap();
        let var = task.variable(appr);
        assert!(var.is_unset(task.initial().get(appr)));
        // "Check CQ Approval Status" needs approval=notChecked, which is false while unset.
        let check = task.action_by_name("Check CQ Approval Status").unwrap();
        for f in task.action(check).precondition.atoms() {
            assert!(!var.is_unset(f.value));
        }
    }

    #[test]
    fn value_override_changes_initial_state() {
        let task = compile_bo(
            &[customer_quote()],
            &[],
            &[InitOverride::Value { var: "CQ.archiving".into(), value: "archived".into() }],
            ActionScope::Full,
        )
        .unwrap();
        assert!(task.initial().holds(task.fact("CQ.archiving", "archived").unwrap()));
    }
}
