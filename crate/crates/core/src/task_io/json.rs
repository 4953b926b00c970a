//! Native JSON format.
//!
//! Model files hold `{"objects": [...]}`; problem files hold
//! `{"goal": [...], "init_overrides": [...], "scope": ...}`. A task file is a
//! model file carrying the problem fields as well.

use super::{compile_bo, ActionScope, BoAction, BusinessObject, InitOverride, TaskIoError};
use crate::model::{ActionId, ActionTree, Fact, Formula, PlanningTask, Variable};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub objects: Vec<ObjectDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<Vec<AtomDoc>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub init_overrides: Vec<OverrideDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scope: Option<ActionScope>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectDoc {
    pub id: String,
    pub name: String,
    pub variables: Vec<VariableDoc>,
    #[serde(default)]
    pub actions: Vec<ActionDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableDoc {
    pub name: String,
    pub domain: Vec<String>,
    pub initial: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionDoc {
    pub name: String,
    #[serde(default = "FormulaDoc::top")]
    pub pre: FormulaDoc,
    pub eff: Vec<Vec<AtomDoc>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomDoc {
    pub var: String,
    pub val: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FormulaDoc {
    And(AndDoc),
    Or(OrDoc),
    Not(NotDoc),
    Atom(AtomDoc),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AndDoc {
    pub and: Vec<FormulaDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrDoc {
    pub or: Vec<FormulaDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NotDoc {
    pub not: Box<FormulaDoc>,
}

impl FormulaDoc {
    pub fn top() -> Self {
        FormulaDoc::And(AndDoc { and: Vec::new() })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OverrideDoc {
    Value(AtomDoc),
    Unset(UnsetDoc),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnsetDoc {
    pub var: String,
    pub unset: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDocument {
    pub goal: Vec<AtomDoc>,
    #[serde(default)]
    pub init_overrides: Vec<OverrideDoc>,
    #[serde(default)]
    pub scope: ActionScope,
}

impl ProblemDocument {
    pub fn goal_pairs(&self) -> Vec<(String, String)> {
        self.goal.iter().map(|a| (a.var.clone(), a.val.clone())).collect()
    }

    pub fn overrides(&self) -> Result<Vec<InitOverride>, TaskIoError> {
        convert_overrides(&self.init_overrides)
    }
}

fn convert_overrides(docs: &[OverrideDoc]) -> Result<Vec<InitOverride>, TaskIoError> {
    docs.iter()
        .enumerate()
        .map(|(i, o)| match o {
            OverrideDoc::Value(a) => Ok(InitOverride::Value { var: a.var.clone(), value: a.val.clone() }),
            OverrideDoc::Unset(u) if u.unset => Ok(InitOverride::Unset { var: u.var.clone() }),
            OverrideDoc::Unset(_) => Err(TaskIoError::schema(format!("init_overrides[{i}].unset"), "must be true")),
        })
        .collect()
}

/// Deserializes with the failing field path in the error.
pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T, TaskIoError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        TaskIoError::schema(if path.is_empty() { ".".to_string() } else { path }, e.into_inner().to_string())
    })
}

impl ObjectDoc {
    pub fn to_object(&self, path: &str) -> Result<BusinessObject, TaskIoError> {
        let mut variables = Vec::with_capacity(self.variables.len());
        for (i, v) in self.variables.iter().enumerate() {
            let vpath = format!("{path}.variables[{i}]");
            let domain: Vec<&str> = v.domain.iter().map(String::as_str).collect();
            if !v.domain.contains(&v.initial) {
                return Err(TaskIoError::schema(format!("{vpath}.initial"), format!("`{}` is not in the domain", v.initial)));
            }
            let mut var = Variable::new(v.name.clone(), &domain, &v.initial)
                .map_err(|e| TaskIoError::schema(&vpath, e.to_string()))?;
            if !self.id.is_empty() {
                var.owner = Some(self.id.clone());
            }
            if variables.iter().any(|w: &Variable| w.name == var.name) {
                return Err(TaskIoError::schema(vpath, format!("duplicate variable `{}`", var.name)));
            }
            variables.push(var);
        }
        let mut o = BusinessObject { id: self.id.clone(), name: self.name.clone(), variables, actions: Vec::new() };
        for (i, a) in self.actions.iter().enumerate() {
            let apath = format!("{path}.actions[{i}]");
            let pre = formula_from_doc(&o, &a.pre, &format!("{apath}.pre"))?;
            let mut eff = Vec::with_capacity(a.eff.len());
            for (j, conj) in a.eff.iter().enumerate() {
                let mut facts = Vec::with_capacity(conj.len());
                for (k, atom) in conj.iter().enumerate() {
                    facts.push(atom_from_doc(&o, atom, &format!("{apath}.eff[{j}][{k}]"))?);
                }
                facts.sort();
                eff.push(facts);
            }
            if eff.is_empty() {
                return Err(TaskIoError::schema(format!("{apath}.eff"), "an action needs at least one effect disjunct"));
            }
            o.actions.push(BoAction { name: a.name.clone(), pre, eff });
        }
        Ok(o)
    }

    pub fn from_object(o: &BusinessObject) -> ObjectDoc {
        let variables = o
            .variables
            .iter()
            .map(|v| VariableDoc {
                name: v.name.clone(),
                domain: v.declared_values().map(|x| v.domain[x as usize].clone()).collect(),
                initial: v.domain[if v.is_unset(v.initial) { 0 } else { v.initial as usize }].clone(),
            })
            .collect();
        let names: Vec<&str> = o.variables.iter().map(|v| v.name.as_str()).collect();
        let actions = o
            .actions
            .iter()
            .map(|a| ActionDoc {
                name: a.name.clone(),
                pre: formula_to_doc(&a.pre, &o.variables, &names),
                eff: a.eff.iter().map(|c| c.iter().map(|f| atom_to_doc(*f, &o.variables, &names)).collect()).collect(),
            })
            .collect();
        ObjectDoc { id: o.id.clone(), name: o.name.clone(), variables, actions }
    }
}

fn atom_from_doc(o: &BusinessObject, atom: &AtomDoc, path: &str) -> Result<Fact, TaskIoError> {
    let vi = o
        .variable_index(&atom.var)
        .ok_or_else(|| TaskIoError::schema(format!("{path}.var"), format!("unknown variable `{}`", atom.var)))?;
    let val = o.variables[vi]
        .value_index(&atom.val)
        .ok_or_else(|| TaskIoError::schema(format!("{path}.val"), format!("`{}` is not a value of `{}`", atom.val, atom.var)))?;
    Ok(Fact::new(vi, val))
}

fn formula_from_doc(o: &BusinessObject, doc: &FormulaDoc, path: &str) -> Result<Formula, TaskIoError> {
    Ok(match doc {
        FormulaDoc::Atom(a) => Formula::Atom(atom_from_doc(o, a, path)?),
        FormulaDoc::Not(n) => Formula::not(formula_from_doc(o, &n.not, &format!("{path}.not"))?),
        FormulaDoc::And(a) => Formula::And(
            a.and.iter().enumerate().map(|(i, c)| formula_from_doc(o, c, &format!("{path}.and[{i}]"))).collect::<Result<_, _>>()?,
        ),
        FormulaDoc::Or(a) => Formula::Or(
            a.or.iter().enumerate().map(|(i, c)| formula_from_doc(o, c, &format!("{path}.or[{i}]"))).collect::<Result<_, _>>()?,
        ),
    })
}

fn atom_to_doc(f: Fact, vars: &[Variable], names: &[&str]) -> AtomDoc {
    AtomDoc { var: names[f.var.0].to_string(), val: vars[f.var.0].domain[f.value as usize].clone() }
}

fn formula_to_doc(f: &Formula, vars: &[Variable], names: &[&str]) -> FormulaDoc {
    match f {
        Formula::Atom(a) => FormulaDoc::Atom(atom_to_doc(*a, vars, names)),
        Formula::Not(c) => FormulaDoc::Not(NotDoc { not: Box::new(formula_to_doc(c, vars, names)) }),
        Formula::And(cs) => FormulaDoc::And(AndDoc { and: cs.iter().map(|c| formula_to_doc(c, vars, names)).collect() }),
        Formula::Or(cs) => FormulaDoc::Or(OrDoc { or: cs.iter().map(|c| formula_to_doc(c, vars, names)).collect() }),
    }
}

impl ModelDocument {
    pub fn business_objects(&self) -> Result<Vec<BusinessObject>, TaskIoError> {
        let objects = self
            .objects
            .iter()
            .enumerate()
            .map(|(i, o)| o.to_object(&format!("objects[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        for (i, o) in objects.iter().enumerate() {
            if objects[..i].iter().any(|p| p.id == o.id) {
                return Err(TaskIoError::schema(format!("objects[{i}].id"), format!("duplicate object id `{}`", o.id)));
            }
        }
        Ok(objects)
    }
}

/// Parses a model file into business objects.
pub fn read_model_file(text: &str) -> Result<Vec<BusinessObject>, TaskIoError> {
    from_json::<ModelDocument>(text)?.business_objects()
}

pub fn read_problem_file(text: &str) -> Result<ProblemDocument, TaskIoError> {
    from_json(text)
}

/// Reads a task file: objects plus the problem fields, compiled into one task.
pub fn read_task(text: &str) -> Result<PlanningTask, TaskIoError> {
    let doc: ModelDocument = from_json(text)?;
    let objects = doc.business_objects()?;
    let goal: Vec<(String, String)> =
        doc.goal.as_deref().unwrap_or_default().iter().map(|a| (a.var.clone(), a.val.clone())).collect();
    let overrides = convert_overrides(&doc.init_overrides)?;
    compile_bo(&objects, &goal, &overrides, doc.scope.unwrap_or_default())
}

pub fn read_task_file(path: impl AsRef<Path>) -> Result<PlanningTask, TaskIoError> {
    read_task(&std::fs::read_to_string(path)?)
}

/// Splits a task back into per-owner objects. Falls back to a single
/// anonymous object when some action reads or writes another owner's variables.
fn task_objects(task: &PlanningTask) -> Vec<BusinessObject> {
    let mut owners: Vec<Option<String>> = Vec::new();
    for v in task.variables() {
        if !owners.contains(&v.owner) {
            owners.push(v.owner.clone());
        }
    }
    for a in task.actions() {
        if !owners.contains(&a.owner) {
            owners.push(a.owner.clone());
        }
    }
    let consistent = task.actions().iter().all(|a| {
        a.reads().iter().chain(a.writes().iter()).all(|v| task.variable(*v).owner == a.owner)
    });
    if !consistent {
        owners = vec![None];
    }
    let mut objects = Vec::new();
    for owner in &owners {
        let id = if consistent { owner.clone().unwrap_or_default() } else { String::new() };
        let global: Vec<usize> =
            (0..task.variables().len()).filter(|&i| !consistent || task.variables()[i].owner == *owner).collect();
        let local_of = |g: usize| global.iter().position(|&x| x == g).expect("variable of this object");
        let variables = global
            .iter()
            .map(|&g| {
                let mut v = task.variables()[g].clone();
                if !id.is_empty() {
                    v.name = v.name.strip_prefix(&format!("{id}.")).unwrap_or(&v.name).to_string();
                }
                v
            })
            .collect();
        let relocate = |f: Fact| Fact::new(local_of(f.var.0), f.value);
        let actions = task
            .actions()
            .iter()
            .filter(|a| !consistent || a.owner == *owner)
            .map(|a| BoAction {
                name: a.name.clone(),
                pre: map_formula(&a.precondition, &relocate),
                eff: a.outcomes.iter().map(|o| o.facts().iter().map(|f| relocate(*f)).collect()).collect(),
            })
            .collect();
        objects.push(BusinessObject { id: id.clone(), name: id, variables, actions });
    }
    objects
}

fn map_formula(f: &Formula, m: &dyn Fn(Fact) -> Fact) -> Formula {
    match f {
        Formula::Atom(a) => Formula::Atom(m(*a)),
        Formula::Not(c) => Formula::not(map_formula(c, m)),
        Formula::And(cs) => Formula::And(cs.iter().map(|c| map_formula(c, m)).collect()),
        Formula::Or(cs) => Formula::Or(cs.iter().map(|c| map_formula(c, m)).collect()),
    }
}

/// Serializes a task as a native task file.
pub fn write_task(task: &PlanningTask) -> String {
    let objects = task_objects(task);
    let goal = task
        .goal()
        .iter()
        .map(|f| {
            let v = task.variable(f.var);
            AtomDoc { var: v.name.clone(), val: v.domain[f.value as usize].clone() }
        })
        .collect();
    let init_overrides = task
        .variables()
        .iter()
        .filter(|v| v.is_unset(v.initial))
        .map(|v| OverrideDoc::Unset(UnsetDoc { var: v.name.clone(), unset: true }))
        .collect();
    let doc = ModelDocument {
        objects: objects.iter().map(ObjectDoc::from_object).collect(),
        goal: Some(goal),
        init_overrides,
        scope: Some(ActionScope::Full),
    };
    serde_json::to_string_pretty(&doc).expect("model documents always serialize")
}

pub fn write_task_file(path: impl AsRef<Path>, task: &PlanningTask) -> Result<(), TaskIoError> {
    std::fs::write(path, write_task(task))?;
    Ok(())
}

/// Plan file representation: `"STOP"`, `"FAIL"`, or an action with one branch per outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PlanDoc {
    Leaf(LeafDoc),
    Act(ActDoc),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LeafDoc {
    #[serde(rename = "STOP")]
    Stop,
    #[serde(rename = "FAIL")]
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActDoc {
    pub action: String,
    pub outcomes: Vec<BranchDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchDoc {
    /// Outcome label, informational.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub when: Option<String>,
    pub then: PlanDoc,
}

pub fn plan_to_doc(task: &PlanningTask, tree: &ActionTree) -> PlanDoc {
    match tree {
        ActionTree::Stop => PlanDoc::Leaf(LeafDoc::Stop),
        ActionTree::Fail => PlanDoc::Leaf(LeafDoc::Fail),
        ActionTree::Act { action, children } => {
            let a = task.action(*action);
            PlanDoc::Act(ActDoc {
                action: a.name.clone(),
                outcomes: children
                    .iter()
                    .enumerate()
                    .map(|(i, c)| BranchDoc { when: Some(task.assignment_name(&a.outcomes[i])), then: plan_to_doc(task, c) })
                    .collect(),
            })
        }
    }
}

pub fn plan_from_doc(task: &PlanningTask, doc: &PlanDoc, path: &str) -> Result<ActionTree, TaskIoError> {
    match doc {
        PlanDoc::Leaf(LeafDoc::Stop) => Ok(ActionTree::Stop),
        PlanDoc::Leaf(LeafDoc::Fail) => Ok(ActionTree::Fail),
        PlanDoc::Act(a) => {
            let id: ActionId = task
                .action_by_name(&a.action)
                .ok_or_else(|| TaskIoError::schema(format!("{path}.action"), format!("unknown action `{}`", a.action)))?;
            let children = a
                .outcomes
                .iter()
                .enumerate()
                .map(|(i, b)| plan_from_doc(task, &b.then, &format!("{path}.outcomes[{i}].then")))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(ActionTree::Act { action: id, children })
        }
    }
}

pub fn plan_to_json(task: &PlanningTask, tree: &ActionTree) -> String {
    serde_json::to_string_pretty(&plan_to_doc(task, tree)).expect("plans always serialize")
}

pub fn plan_from_json(task: &PlanningTask, text: &str) -> Result<ActionTree, TaskIoError> {
    let doc: PlanDoc = from_json(text)?;
    let tree = plan_from_doc(task, &doc, "plan")?;
    tree.check_structure(task)?;
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples_data::{customer_quote_task, customer_quote_weak_plan, CUSTOMER_QUOTE_JSON};
    use crate::model::Action;

    #[test]
    fn task_round_trip() {
        let task = customer_quote_task();
        let text = write_task(&task);
        assert_eq!(read_task(&text).unwrap(), task);
    }

    #[test]
    fn empty_task_round_trip() {
        let v = Variable::new("x", &["a", "b"], "b").unwrap();
        let task = PlanningTask::new(vec![v], vec![], vec![Fact::new(0, 0)]).unwrap();
        assert_eq!(read_task(&write_task(&task)).unwrap(), task);
    }

    #[test]
    fn unset_initial_round_trip() {
        let mut v = Variable::new("x", &["a", "b"], "b").unwrap();
        v.start_unset();
        let a = Action::new(
            "set",
            Formula::top(),
            vec![crate::model::PartialAssignment::new(vec![Fact::new(0, 0)]).unwrap()],
        );
        let task = PlanningTask::new(vec![v], vec![a], vec![Fact::new(0, 0)]).unwrap();
        assert_eq!(read_task(&write_task(&task)).unwrap(), task);
    }

    #[test]
    fn unknown_top_level_field_rejected_with_path() {
        let err = read_task(r#"{"objects": [], "extra": 1}"#).unwrap_err();
        assert!(err.to_string().contains("extra"), "{err}");
        let err = read_model_file(r#"{"objects": [{"id": "A", "name": "A", "variables": [{"name": "x", "domain": ["a"], "initial": "z"}]}]}"#)
            .unwrap_err();
        assert!(err.to_string().starts_with("objects[0].variables[0].initial"), "{err}");
        let err = read_model_file(r#"{"objects": [{"id": "A", "name": "A", "variables": 3}]}"#).unwrap_err();
        assert!(err.to_string().contains("objects[0].variables"), "{err}");
    }

    #[test]
    fn formula_atom_errors_carry_path() {
        let text = r#"{"objects": [{"id": "A", "name": "A",
            "variables": [{"name": "x", "domain": ["a", "b"], "initial": "a"}],
            "actions": [{"name": "go", "pre": {"and": [{"not": {"var": "x", "val": "q"}}]}, "eff": [[{"var": "x", "val": "b"}]]}]}]}"#;
        let err = read_model_file(text).unwrap_err();
        assert!(err.to_string().starts_with("objects[0].actions[0].pre.and[0].not.val"), "{err}");
    }

    #[test]
    fn shipped_model_parses() {
        let objects = read_model_file(CUSTOMER_QUOTE_JSON).unwrap();
        assert_eq!(objects.len(), 1);
        assert_eq!(objects[0].variables.len(), 7);
        assert_eq!(objects[0].actions.len(), 8);
    }

    #[test]
    fn plan_round_trip() {
        let task = customer_quote_task();
        let plan = customer_quote_weak_plan(&task);
        assert_eq!(plan_from_json(&task, &plan_to_json(&task, &plan)).unwrap(), plan);
    }

    #[test]
    fn problem_file_defaults() {
        let p = read_problem_file(r#"{"goal": [{"var": "CQ.archiving", "val": "archived"}], "init_overrides": [{"var": "CQ.approval", "unset": true}]}"#)
            .unwrap();
        assert_eq!(p.scope, ActionScope::Full);
        assert_eq!(p.overrides().unwrap(), vec![InitOverride::Unset { var: "CQ.approval".into() }]);
        assert!(read_problem_file(r#"{"goal": [], "scope": "partial"}"#).is_err());
    }
}
