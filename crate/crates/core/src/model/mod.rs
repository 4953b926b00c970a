//! Finite-domain planning model with nondeterministic actions.
//!
//! States are fixed-width arrays of value indices, one slot per variable.
//! Value names are interned once per task in each [`Variable`]'s domain, so
//! hashing and comparing states never touches strings.

mod formula;
mod tree;

pub use formula::{formula_to_dnf, Conjunction, Formula, DEFAULT_DNF_LIMIT};
pub use tree::ActionTree;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Display name of the reserved value used for variables whose initial value
/// is left unspecified.
pub const UNSET_VALUE: &str = "<unset>";

pub type ValueIdx = u16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("unknown variable index {0}")]
    UnknownVariable(usize),
    #[error("value index {value} is outside the domain of `{variable}`")]
    UnknownValue { variable: String, value: usize },
    #[error("variable `{0}` has an empty domain")]
    EmptyDomain(String),
    #[error("variable `{variable}` lists value `{value}` more than once")]
    DuplicateValue { variable: String, value: String },
    #[error("reserved value of `{0}` may not appear in formulas, outcomes or goals")]
    UnsetReferenced(String),
    #[error("action `{0}` has no outcomes")]
    NoOutcomes(String),
    #[error("variable `{variable}` is assigned two different values in one assignment")]
    Contradictory { variable: String },
    #[error("state has {found} slots but the task has {expected} variables")]
    StateArity { expected: usize, found: usize },
    #[error("formula expands to more than {limit} DNF conjuncts")]
    DnfTooLarge { limit: usize },
    #[error("invalid action tree at {path}: {reason}")]
    InvalidTree { path: String, reason: String },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VarId(pub usize);

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionId(pub usize);

/// The statement `var = value`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fact {
    pub var: VarId,
    pub value: ValueIdx,
}

impl Fact {
    pub fn new(var: usize, value: ValueIdx) -> Self {
        Fact { var: VarId(var), value }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub domain: Vec<String>,
    pub initial: ValueIdx,
    pub owner: Option<String>,
    /// Index of the reserved "unspecified" value, if this variable starts unset.
    pub unset: Option<ValueIdx>,
}

impl Variable {
    pub fn new<S: Into<String>>(name: S, domain: &[&str], initial: &str) -> Result<Self, ModelError> {
        let name = name.into();
        let domain: Vec<String> = domain.iter().map(|v| v.to_string()).collect();
        let initial = domain
            .iter()
            .position(|v| v == initial)
            .ok_or_else(|| ModelError::UnknownValue { variable: name.clone(), value: domain.len() })?;
        let var = Variable { name, domain, initial: initial as ValueIdx, owner: None, unset: None };
        var.validate()?;
        Ok(var)
    }

    pub fn with_owner(mut self, owner: &str) -> Self {
        self.owner = Some(owner.to_string());
        self
    }

    /// Makes the variable start in the reserved unset value. Atoms over the
    /// variable are false until some outcome assigns it.
    pub fn start_unset(&mut self) {
        let idx = match self.unset {
            Some(idx) => idx,
            None => {
                self.domain.push(UNSET_VALUE.to_string());
                let idx = (self.domain.len() - 1) as ValueIdx;
                self.unset = Some(idx);
                idx
            }
        };
        self.initial = idx;
    }

    pub fn value_index(&self, value: &str) -> Option<ValueIdx> {
        self.declared_values().find(|&v| self.domain[v as usize] == value)
    }

    /// Domain values that formulas, outcomes and goals may mention.
    pub fn declared_values(&self) -> impl Iterator<Item = ValueIdx> + '_ {
        (0..self.domain.len() as ValueIdx).filter(move |v| Some(*v) != self.unset)
    }

    pub fn is_unset(&self, value: ValueIdx) -> bool {
        self.unset == Some(value)
    }

    fn validate(&self) -> Result<(), ModelError> {
        if self.declared_values().next().is_none() {
            return Err(ModelError::EmptyDomain(self.name.clone()));
        }
        for (i, v) in self.domain.iter().enumerate() {
            if self.domain[..i].contains(v) {
                return Err(ModelError::DuplicateValue { variable: self.name.clone(), value: v.clone() });
            }
        }
        if self.initial as usize >= self.domain.len() {
            return Err(ModelError::UnknownValue { variable: self.name.clone(), value: self.initial as usize });
        }
        Ok(())
    }
}

/// Which plan definition applies: every outcome must reach the goal (strong),
/// or at least one must while the others are provably hopeless (weak).
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Semantics {
    Strong,
    Weak,
}

impl fmt::Display for Semantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Semantics::Strong => "strong",
            Semantics::Weak => "weak",
        })
    }
}

/// A partial variable assignment, kept sorted by variable.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct PartialAssignment(Vec<Fact>);

impl PartialAssignment {
    pub fn new(mut facts: Vec<Fact>) -> Result<Self, ModelError> {
        facts.sort();
        facts.dedup();
        if let Some(w) = facts.windows(2).find(|w| w[0].var == w[1].var) {
            return Err(ModelError::Contradictory { variable: format!("#{}", w[0].var.0) });
        }
        Ok(PartialAssignment(facts))
    }

    pub fn empty() -> Self {
        PartialAssignment(Vec::new())
    }

    pub fn facts(&self) -> &[Fact] {
        &self.0
    }

    pub fn get(&self, var: VarId) -> Option<ValueIdx> {
        self.0.binary_search_by_key(&var, |f| f.var).ok().map(|i| self.0[i].value)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }
}

/// A complete variable assignment.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State(Box<[ValueIdx]>);

impl State {
    pub fn from_values(values: Vec<ValueIdx>) -> Self {
        State(values.into_boxed_slice())
    }

    pub fn get(&self, var: VarId) -> ValueIdx {
        self.0[var.0]
    }

    pub fn holds(&self, fact: Fact) -> bool {
        self.0[fact.var.0] == fact.value
    }

    pub fn values(&self) -> &[ValueIdx] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `self ⊕ eff`: overwrite exactly the variables `eff` defines.
    pub fn apply(&self, eff: &PartialAssignment) -> State {
        let mut values = self.0.clone();
        for f in eff.facts() {
            values[f.var.0] = f.value;
        }
        State(values)
    }

    pub fn facts(&self) -> impl Iterator<Item = Fact> + '_ {
        self.0.iter().enumerate().map(|(i, &v)| Fact::new(i, v))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Action {
    pub name: String,
    pub owner: Option<String>,
    pub precondition: Formula,
    /// The possible outcomes; a single outcome makes the action deterministic.
    pub outcomes: Vec<PartialAssignment>,
}

impl Action {
    pub fn new<S: Into<String>>(name: S, precondition: Formula, outcomes: Vec<PartialAssignment>) -> Self {
        Action { name: name.into(), owner: None, precondition, outcomes }
    }

    pub fn is_deterministic(&self) -> bool {
        self.outcomes.len() == 1
    }

    /// Variables the action reads (precondition) and writes (any outcome).
    pub fn reads(&self) -> Vec<VarId> {
        let mut vars: Vec<VarId> = self.precondition.atoms().map(|f| f.var).collect();
        vars.sort();
        vars.dedup();
        vars
    }

    pub fn writes(&self) -> Vec<VarId> {
        let mut vars: Vec<VarId> = self.outcomes.iter().flat_map(|o| o.facts().iter().map(|f| f.var)).collect();
        vars.sort();
        vars.dedup();
        vars
    }
}

/// Set of still-available nondeterministic actions, indexed by nondeterministic slot.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Availability(FixedBitSet);

impl Availability {
    pub fn all(slots: usize) -> Self {
        let mut bits = FixedBitSet::with_capacity(slots);
        bits.insert_range(..);
        Availability(bits)
    }

    pub fn none(slots: usize) -> Self {
        Availability(FixedBitSet::with_capacity(slots))
    }

    pub fn contains(&self, slot: usize) -> bool {
        self.0.contains(slot)
    }

    pub fn without(&self, slot: usize) -> Self {
        let mut bits = self.0.clone();
        bits.set(slot, false);
        Availability(bits)
    }

    pub fn insert(&mut self, slot: usize) {
        self.0.insert(slot);
    }

    pub fn count(&self) -> usize {
        self.0.count_ones(..)
    }

    pub fn slots(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.ones()
    }

    pub fn is_subset(&self, other: &Availability) -> bool {
        self.0.is_subset(&other.0)
    }
}

/// A state paired with the nondeterministic actions not yet used on the path.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SearchState {
    pub state: State,
    pub available: Availability,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanningTask {
    variables: Vec<Variable>,
    actions: Vec<Action>,
    initial: State,
    goal: Vec<Fact>,
    nondet: Vec<ActionId>,
    nondet_slot: Vec<Option<usize>>,
}

impl PlanningTask {
    pub fn new(variables: Vec<Variable>, actions: Vec<Action>, goal: Vec<Fact>) -> Result<Self, ModelError> {
        for v in &variables {
            v.validate()?;
        }
        let initial = State::from_values(variables.iter().map(|v| v.initial).collect());
        let mut task = PlanningTask { variables, actions: Vec::new(), initial, goal: Vec::new(), nondet: Vec::new(), nondet_slot: Vec::new() };
        for f in &goal {
            task.check_fact(*f)?;
        }
        let mut goal = goal;
        goal.sort();
        goal.dedup();
        if let Some(w) = goal.windows(2).find(|w| w[0].var == w[1].var) {
            return Err(ModelError::Contradictory { variable: task.variables[w[0].var.0].name.clone() });
        }
        task.goal = goal;
        for a in &actions {
            if a.outcomes.is_empty() {
                return Err(ModelError::NoOutcomes(a.name.clone()));
            }
            for f in a.precondition.atoms() {
                task.check_fact(f)?;
            }
            for o in &a.outcomes {
                for f in o.facts() {
                    task.check_fact(*f)?;
                }
            }
        }
        for (i, a) in actions.iter().enumerate() {
            if a.is_deterministic() {
                task.nondet_slot.push(None);
            } else {
                task.nondet_slot.push(Some(task.nondet.len()));
                task.nondet.push(ActionId(i));
            }
        }
        task.actions = actions;
        Ok(task)
    }

    /// Replaces the initial state. Every slot must hold a value of its domain.
    pub fn with_initial(mut self, initial: State) -> Result<Self, ModelError> {
        if initial.len() != self.variables.len() {
            return Err(ModelError::StateArity { expected: self.variables.len(), found: initial.len() });
        }
        for (i, &v) in initial.values().iter().enumerate() {
            if v as usize >= self.variables[i].domain.len() {
                return Err(ModelError::UnknownValue { variable: self.variables[i].name.clone(), value: v as usize });
            }
            self.variables[i].initial = v;
        }
        self.initial = initial;
        Ok(self)
    }

    pub fn with_goal(mut self, goal: Vec<Fact>) -> Result<Self, ModelError> {
        let actions = std::mem::take(&mut self.actions);
        let vars = std::mem::take(&mut self.variables);
        let initial = self.initial.clone();
        PlanningTask::new(vars, actions, goal)?.with_initial(initial)
    }

    fn check_fact(&self, f: Fact) -> Result<(), ModelError> {
        let var = self.variables.get(f.var.0).ok_or(ModelError::UnknownVariable(f.var.0))?;
        if f.value as usize >= var.domain.len() {
            return Err(ModelError::UnknownValue { variable: var.name.clone(), value: f.value as usize });
        }
        if var.is_unset(f.value) {
            return Err(ModelError::UnsetReferenced(var.name.clone()));
        }
        Ok(())
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, var: VarId) -> &Variable {
        &self.variables[var.0]
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn action(&self, id: ActionId) -> &Action {
        &self.actions[id.0]
    }

    pub fn initial(&self) -> &State {
        &self.initial
    }

    pub fn goal(&self) -> &[Fact] {
        &self.goal
    }

    /// Nondeterministic actions, in slot order.
    pub fn nondeterministic(&self) -> &[ActionId] {
        &self.nondet
    }

    pub fn nondet_slot(&self, id: ActionId) -> Option<usize> {
        self.nondet_slot[id.0]
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name).map(VarId)
    }

    pub fn action_by_name(&self, name: &str) -> Option<ActionId> {
        self.actions.iter().position(|a| a.name == name).map(ActionId)
    }

    /// Looks up `var = value` by display names.
    pub fn fact(&self, var: &str, value: &str) -> Option<Fact> {
        let v = self.var_by_name(var)?;
        let idx = self.variables[v.0].value_index(value)?;
        Some(Fact { var: v, value: idx })
    }

    pub fn fact_name(&self, f: Fact) -> String {
        let var = &self.variables[f.var.0];
        format!("{}={}", var.name, var.domain[f.value as usize])
    }

    pub fn assignment_name(&self, eff: &PartialAssignment) -> String {
        eff.facts().iter().map(|f| self.fact_name(*f)).collect::<Vec<_>>().join(", ")
    }

    /// The initial search state: initial state with every nondeterministic action available.
    pub fn initial_search_state(&self) -> SearchState {
        SearchState { state: self.initial.clone(), available: Availability::all(self.nondet.len()) }
    }

    pub fn apply_outcome(&self, s: &State, eff: &PartialAssignment) -> Result<State, ModelError> {
        if s.len() != self.variables.len() {
            return Err(ModelError::StateArity { expected: self.variables.len(), found: s.len() });
        }
        for f in eff.facts() {
            self.check_fact(*f)?;
        }
        Ok(s.apply(eff))
    }

    pub fn eval_formula(&self, s: &State, phi: &Formula) -> bool {
        phi.holds(s, &self.variables)
    }

    pub fn goal_satisfied(&self, s: &State) -> bool {
        goal_satisfied(s, &self.goal)
    }

    /// Whether `action` may be applied in `ss`: its precondition holds and,
    /// if nondeterministic, it is still available.
    pub fn is_applicable(&self, ss: &SearchState, action: ActionId) -> bool {
        if let Some(slot) = self.nondet_slot[action.0] {
            if !ss.available.contains(slot) {
                return false;
            }
        }
        self.eval_formula(&ss.state, &self.actions[action.0].precondition)
    }

    pub fn applicable(&self, ss: &SearchState) -> Vec<ActionId> {
        (0..self.actions.len()).map(ActionId).filter(|&a| self.is_applicable(ss, a)).collect()
    }

    /// Search state reached by `action` with the given outcome; nondeterministic
    /// actions are consumed.
    pub fn successor(&self, ss: &SearchState, action: ActionId, outcome: usize) -> SearchState {
        let a = &self.actions[action.0];
        let available = match self.nondet_slot[action.0] {
            Some(slot) => ss.available.without(slot),
            None => ss.available.clone(),
        };
        SearchState { state: ss.state.apply(&a.outcomes[outcome]), available }
    }

    /// Number of distinct states, saturating.
    pub fn state_space_size(&self) -> u128 {
        self.variables.iter().fold(1u128, |acc, v| acc.saturating_mul(v.domain.len() as u128))
    }
}

pub fn goal_satisfied(s: &State, goal: &[Fact]) -> bool {
    goal.iter().all(|f| s.holds(*f))
}

impl fmt::Display for PlanningTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} variables, {} actions ({} nondeterministic), goal [{}]",
            self.variables.len(),
            self.actions.len(),
            self.nondet.len(),
            self.goal.iter().map(|g| self.fact_name(*g)).collect::<Vec<_>>().join(", ")
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples_data::customer_quote_task;
    use proptest::prelude::*;

    #[test]
    fn archiving_changes_only_archiving() {
        let task = customer_quote_task();
        let arch = task.fact("CQ.archiving", "archived").unwrap();
        let eff = PartialAssignment::new(vec![arch]).unwrap();
        let next = task.apply_outcome(task.initial(), &eff).unwrap();
        let diff: Vec<usize> = (0..next.len()).filter(|&i| next.values()[i] != task.initial().values()[i]).collect();
        assert_eq!(diff, vec![arch.var.0]);
        assert!(next.holds(arch));
    }

    #[test]
    fn empty_and_idempotent_outcomes() {
        let task = customer_quote_task();
        let s = task.initial().clone();
        assert_eq!(task.apply_outcome(&s, &PartialAssignment::empty()).unwrap(), s);
        let already = task.fact("CQ.archiving", "notArchived").unwrap();
        let eff = PartialAssignment::new(vec![already]).unwrap();
        assert_eq!(task.apply_outcome(&s, &eff).unwrap(), s);
    }

    #[test]
    fn outcome_with_bad_value_is_rejected() {
        let task = customer_quote_task();
        let eff = PartialAssignment::new(vec![Fact::new(0, 99)]).unwrap();
        assert!(matches!(task.apply_outcome(task.initial(), &eff), Err(ModelError::UnknownValue { .. })));
        let eff = PartialAssignment::new(vec![Fact::new(42, 0)]).unwrap();
        assert!(matches!(task.apply_outcome(task.initial(), &eff), Err(ModelError::UnknownVariable(42))));
    }

    #[test]
    fn conflicting_assignment_is_rejected() {
        assert!(PartialAssignment::new(vec![Fact::new(0, 0), Fact::new(0, 1)]).is_err());
        assert_eq!(PartialAssignment::new(vec![Fact::new(0, 1), Fact::new(0, 1)]).unwrap().len(), 1);
    }

    #[test]
    fn preconditions_at_initial_state() {
        let task = customer_quote_task();
        let submit = task.action_by_name("Submit CQ").unwrap();
        let check = task.action_by_name("Check CQ Completeness").unwrap();
        assert!(!task.eval_formula(task.initial(), &task.action(submit).precondition));
        assert!(task.eval_formula(task.initial(), &task.action(check).precondition));
        assert!(task.eval_formula(task.initial(), &Formula::top()));
    }

    #[test]
    fn goal_checks() {
        let task = customer_quote_task();
        assert!(!task.goal_satisfied(task.initial()));
        assert!(goal_satisfied(task.initial(), &[]));
    }

    #[test]
    fn cq_action_partition() {
        let task = customer_quote_task();
        assert_eq!(task.variables().len(), 7);
        assert_eq!(task.nondeterministic().len(), 4);
        assert_eq!(task.actions().iter().filter(|a| a.is_deterministic()).count(), 4);
    }

    #[test]
    fn unset_variable_makes_atoms_false() {
        let mut v = Variable::new("x", &["a", "b"], "a").unwrap();
        v.start_unset();
        let task = PlanningTask::new(vec![v], vec![], vec![]).unwrap();
        let s = task.initial().clone();
        assert!(!task.eval_formula(&s, &Formula::atom(Fact::new(0, 0))));
        assert!(!task.eval_formula(&s, &Formula::not(Formula::atom(Fact::new(0, 0)))));
        let unset = task.variable(VarId(0)).unset.unwrap();
        assert!(PlanningTask::new(task.variables().to_vec(), vec![], vec![Fact::new(0, unset)]).is_err());
    }

    #[test]
    fn goal_referencing_unknown_variable_fails() {
        let v = Variable::new("x", &["a", "b"], "a").unwrap();
        assert!(PlanningTask::new(vec![v], vec![], vec![Fact::new(3, 0)]).is_err());
    }

    fn small_state_and_effect() -> impl Strategy<Value = (Vec<u16>, Vec<(usize, u16)>)> {
        (1usize..8).prop_flat_map(|n| {
            (
                proptest::collection::vec(0u16..4, n),
                proptest::collection::vec((0..n, 0u16..4), 0..n),
            )
        })
    }

    proptest! {
        #[test]
        fn apply_agrees_with_effect_and_frame((values, eff) in small_state_and_effect()) {
            let s = State::from_values(values);
            let mut facts: Vec<Fact> = Vec::new();
            for (var, val) in eff {
                if !facts.iter().any(|f| f.var.0 == var) {
                    facts.push(Fact::new(var, val));
                }
            }
            let eff = PartialAssignment::new(facts).unwrap();
            let next = s.apply(&eff);
            for i in 0..s.len() {
                match eff.get(VarId(i)) {
                    Some(v) => prop_assert_eq!(next.get(VarId(i)), v),
                    None => prop_assert_eq!(next.get(VarId(i)), s.get(VarId(i))),
                }
            }
        }
    }
}
