use super::{Fact, ModelError, State, Variable};
use std::collections::HashSet;

pub const DEFAULT_DNF_LIMIT: usize = 4096;

/// A conjunction of positive facts, sorted by variable, one fact per variable.
pub type Conjunction = Vec<Fact>;

/// Propositional formula over atoms `x = c`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom(Fact),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

impl Formula {
    /// The empty conjunction.
    pub fn top() -> Self {
        Formula::And(Vec::new())
    }

    pub fn atom(f: Fact) -> Self {
        Formula::Atom(f)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(children: Vec<Formula>) -> Self {
        Formula::And(children)
    }

    pub fn or(children: Vec<Formula>) -> Self {
        Formula::Or(children)
    }

    pub fn atoms(&self) -> std::vec::IntoIter<Fact> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out.into_iter()
    }

    fn collect_atoms(&self, out: &mut Vec<Fact>) {
        match self {
            Formula::Atom(f) => out.push(*f),
            Formula::Not(c) => c.collect_atoms(out),
            Formula::And(cs) | Formula::Or(cs) => cs.iter().for_each(|c| c.collect_atoms(out)),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Atom(_) => 1,
            Formula::Not(c) => 1 + c.depth(),
            Formula::And(cs) | Formula::Or(cs) => 1 + cs.iter().map(Formula::depth).max().unwrap_or(0),
        }
    }

    /// Satisfaction `s ⊨ φ`. Negations are pushed down to atoms; a negated
    /// atom over a variable that is still unset is false, like the atom itself.
    pub fn holds(&self, s: &State, vars: &[Variable]) -> bool {
        self.eval(s, vars, true)
    }

    fn eval(&self, s: &State, vars: &[Variable], positive: bool) -> bool {
        match self {
            Formula::Atom(f) => {
                let v = s.get(f.var);
                if positive {
                    v == f.value
                } else {
                    v != f.value && !vars[f.var.0].is_unset(v)
                }
            }
            Formula::Not(c) => c.eval(s, vars, !positive),
            Formula::And(cs) => {
                if positive {
                    cs.iter().all(|c| c.eval(s, vars, true))
                } else {
                    cs.iter().any(|c| c.eval(s, vars, false))
                }
            }
            Formula::Or(cs) => {
                if positive {
                    cs.iter().any(|c| c.eval(s, vars, true))
                } else {
                    cs.iter().all(|c| c.eval(s, vars, false))
                }
            }
        }
    }
}

/// Rewrites `phi` as a disjunction of negation-free fact conjunctions.
///
/// `¬(x = c)` becomes the disjunction of `x = c'` over the other declared
/// values of `x`. Contradictory conjuncts are dropped and duplicates removed;
/// no further minimization happens.
pub fn formula_to_dnf(phi: &Formula, vars: &[Variable], limit: usize) -> Result<Vec<Conjunction>, ModelError> {
    dnf(phi, vars, true, limit)
}

fn dnf(phi: &Formula, vars: &[Variable], positive: bool, limit: usize) -> Result<Vec<Conjunction>, ModelError> {
    match phi {
        Formula::Atom(f) => {
            if positive {
                Ok(vec![vec![*f]])
            } else {
                let var = &vars[f.var.0];
                Ok(var.declared_values().filter(|&v| v != f.value).map(|v| vec![Fact { var: f.var, value: v }]).collect())
            }
        }
        Formula::Not(c) => dnf(c, vars, !positive, limit),
        Formula::And(cs) | Formula::Or(cs) => {
            let conjunctive = matches!(phi, Formula::And(_)) == positive;
            if conjunctive {
                let mut acc: Vec<Conjunction> = vec![Vec::new()];
                for c in cs {
                    let part = dnf(c, vars, positive, limit)?;
                    let mut next = Vec::new();
                    let mut seen = HashSet::new();
                    for a in &acc {
                        for b in &part {
                            if let Some(m) = merge(a, b) {
                                if seen.insert(m.clone()) {
                                    next.push(m);
                                    if next.len() > limit {
                                        return Err(ModelError::DnfTooLarge { limit });
                                    }
                                }
                            }
                        }
                    }
                    acc = next;
                    if acc.is_empty() {
                        break;
                    }
                }
                Ok(acc)
            } else {
                let mut out = Vec::new();
                let mut seen = HashSet::new();
                for c in cs {
                    for conj in dnf(c, vars, positive, limit)? {
                        if seen.insert(conj.clone()) {
                            out.push(conj);
                            if out.len() > limit {
                                return Err(ModelError::DnfTooLarge { limit });
                            }
                        }
                    }
                }
                Ok(out)
            }
        }
    }
}

/// Merges two sorted conjunctions; `None` if they disagree on a variable.
fn merge(a: &[Fact], b: &[Fact]) -> Option<Conjunction> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let (x, y) = (a[i], b[j]);
        if x.var < y.var {
            out.push(x);
            i += 1;
        } else if y.var < x.var {
            out.push(y);
            j += 1;
        } else if x.value == y.value {
            out.push(x);
            i += 1;
            j += 1;
        } else {
            return None;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples_data::customer_quote_task;
    use crate::model::PlanningTask;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn as_set(d: &[Conjunction]) -> BTreeSet<Vec<Fact>> {
        d.iter().cloned().collect()
    }

    #[test]
    fn cq_examples() {
        let task = customer_quote_task();
        let vars = task.variables();
        let nec = task.fact("CQ.approval", "necessary").unwrap();
        assert_eq!(formula_to_dnf(&Formula::atom(nec), vars, DEFAULT_DNF_LIMIT).unwrap(), vec![vec![nec]]);

        let archived = task.fact("CQ.archiving", "archived").unwrap();
        let not_archived = task.fact("CQ.archiving", "notArchived").unwrap();
        let neg = Formula::not(Formula::atom(archived));
        assert_eq!(formula_to_dnf(&neg, vars, DEFAULT_DNF_LIMIT).unwrap(), vec![vec![not_archived]]);

        let not_nec = task.fact("CQ.approval", "notNecessary").unwrap();
        let granted = task.fact("CQ.approval", "granted").unwrap();
        let phi = Formula::and(vec![Formula::or(vec![Formula::atom(not_nec), Formula::atom(granted)]), neg]);
        let got = formula_to_dnf(&phi, vars, DEFAULT_DNF_LIMIT).unwrap();
        let mut c1 = vec![not_nec, not_archived];
        let mut c2 = vec![granted, not_archived];
        c1.sort();
        c2.sort();
        assert_eq!(as_set(&got), as_set(&[c1, c2]));
        // truth-table cross-check over dom(approval) x dom(archiving)
        let appr = task.var_by_name("CQ.approval").unwrap();
        let arch = task.var_by_name("CQ.archiving").unwrap();
        for a in 0..5u16 {
            for b in 0..2u16 {
                let mut vals = task.initial().values().to_vec();
                vals[appr.0] = a;
                vals[arch.0] = b;
                let s = State::from_values(vals);
                let via_dnf = got.iter().any(|c| c.iter().all(|f| s.holds(*f)));
                assert_eq!(via_dnf, phi.holds(&s, vars));
            }
        }
    }

    #[test]
    fn contradictions_dropped_and_duplicates_merged() {
        let x = Variable::new("x", &["a", "b"], "a").unwrap();
        let vars = vec![x];
        let a = Formula::atom(Fact::new(0, 0));
        let b = Formula::atom(Fact::new(0, 1));
        assert!(formula_to_dnf(&Formula::and(vec![a.clone(), b.clone()]), &vars, 10).unwrap().is_empty());
        assert_eq!(formula_to_dnf(&Formula::or(vec![a.clone(), a.clone()]), &vars, 10).unwrap().len(), 1);
        assert_eq!(formula_to_dnf(&Formula::top(), &vars, 10).unwrap(), vec![Vec::<Fact>::new()]);
    }

    #[test]
    fn blow_up_guard() {
        let vars: Vec<Variable> = (0..12).map(|i| Variable::new(format!("v{i}"), &["a", "b"], "a").unwrap()).collect();
        let phi = Formula::and(
            (0..12)
                .map(|i| Formula::or(vec![Formula::atom(Fact::new(i, 0)), Formula::atom(Fact::new(i, 1))]))
                .collect(),
        );
        assert_eq!(formula_to_dnf(&phi, &vars, 1000), Err(ModelError::DnfTooLarge { limit: 1000 }));
        assert_eq!(formula_to_dnf(&phi, &vars, 4096).unwrap().len(), 4096);
    }

    fn arb_formula(nvars: usize, dom: u16) -> impl Strategy<Value = Formula> {
        let leaf = (0..nvars, 0..dom).prop_map(|(v, c)| Formula::atom(Fact::new(v, c)));
        leaf.prop_recursive(4, 24, 4, |inner| {
            prop_oneof![
                inner.clone().prop_map(Formula::not),
                proptest::collection::vec(inner.clone(), 0..4).prop_map(Formula::and),
                proptest::collection::vec(inner, 0..4).prop_map(Formula::or),
            ]
        })
    }

    fn all_states(task: &PlanningTask) -> Vec<State> {
        let mut out = vec![Vec::new()];
        for v in task.variables() {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    (0..v.domain.len() as u16).map(move |x| {
                        let mut p = prefix.clone();
                        p.push(x);
                        p
                    })
                })
                .collect();
        }
        out.into_iter().map(State::from_values).collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn dnf_is_equivalent_on_every_state(phi in arb_formula(4, 3), unset_first in any::<bool>()) {
            let mut vars: Vec<Variable> = (0..4).map(|i| Variable::new(format!("v{i}"), &["a", "b", "c"], "a").unwrap()).collect();
            if unset_first {
                vars[0].start_unset();
            }
            let task = PlanningTask::new(vars, vec![], vec![]).unwrap();
            let dnf = formula_to_dnf(&phi, task.variables(), DEFAULT_DNF_LIMIT).unwrap();
            for conj in &dnf {
                for w in conj.windows(2) {
                    prop_assert!(w[0].var < w[1].var);
                }
            }
            for s in all_states(&task) {
                let via_dnf = dnf.iter().any(|c| c.iter().all(|f| s.holds(*f)));
                prop_assert_eq!(via_dnf, task.eval_formula(&s, &phi));
            }
        }

        #[test]
        fn goal_is_conjunction_of_atoms(goal_vals in proptest::collection::vec(proptest::option::of(0u16..3), 4), state in proptest::collection::vec(0u16..3, 4)) {
            let vars: Vec<Variable> = (0..4).map(|i| Variable::new(format!("v{i}"), &["a", "b", "c"], "a").unwrap()).collect();
            let goal: Vec<Fact> = goal_vals.iter().enumerate().filter_map(|(i, v)| v.map(|v| Fact::new(i, v))).collect();
            let task = PlanningTask::new(vars, vec![], goal.clone()).unwrap();
            let s = State::from_values(state);
            let phi = Formula::and(goal.iter().map(|f| Formula::atom(*f)).collect());
            prop_assert_eq!(task.goal_satisfied(&s), task.eval_formula(&s, &phi));
        }
    }
}
