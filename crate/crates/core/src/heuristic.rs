//! Relaxed-planning-graph heuristic over the all-outcomes determinization.
//!
//! Every available outcome of every action becomes its own deterministic
//! entry, one per DNF branch of the action's precondition. The planning graph
//! is built with per-entry counters of unsatisfied precondition facts; a
//! relaxed plan is then extracted by backchaining from the goal.

use crate::model::{
    formula_to_dnf, ActionId, Availability, Conjunction, Fact, ModelError, PartialAssignment, PlanningTask, SearchState,
    State, DEFAULT_DNF_LIMIT,
};
use std::sync::Arc;

const UNREACHED: u32 = u32::MAX;

/// One outcome of one action under one DNF branch of its precondition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeterminizedAction {
    pub action: ActionId,
    pub outcome: usize,
    pub branch: usize,
    pub pre: Conjunction,
    pub eff: PartialAssignment,
}

/// The result of evaluating a search state.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HeuristicOutcome {
    /// `None` is a proven dead end.
    pub value: Option<u32>,
    /// Indices into the evaluator's determinization.
    pub relaxed_plan: Vec<usize>,
    pub helpful: Vec<ActionId>,
}

impl HeuristicOutcome {
    pub fn is_dead_end(&self) -> bool {
        self.value.is_none()
    }
}

/// Planning graph layers for one state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RpgResult {
    /// First layer containing the goal; `None` if a fixed point came first.
    pub level: Option<u32>,
    /// `layers[t]` is `F_t`, sorted.
    pub layers: Vec<Vec<Fact>>,
    /// First layer of each fact, by fact index; `None` if never reached.
    pub fact_level: Vec<Option<u32>>,
    /// Layer at which each determinized entry first becomes applicable.
    pub entry_level: Vec<Option<u32>>,
}

pub trait Heuristic {
    fn evaluate(&mut self, ss: &SearchState) -> HeuristicOutcome;
}

/// Static part of the determinization, shared by all evaluations on a task.
#[derive(Debug)]
pub struct Determinization {
    entries: Vec<DeterminizedAction>,
    slot: Vec<Option<usize>>,
    pre: Vec<Vec<u32>>,
    eff: Vec<Vec<u32>>,
    pre_index: Vec<Vec<u32>>,
    achievers: Vec<Vec<u32>>,
    unconditional: Vec<u32>,
    fact_offset: Vec<u32>,
    goal: Vec<u32>,
    is_goal: Vec<bool>,
}

impl Determinization {
    pub fn new(task: &PlanningTask) -> Result<Self, ModelError> {
        let mut fact_offset = Vec::with_capacity(task.variables().len());
        let mut n_facts = 0u32;
        for v in task.variables() {
            fact_offset.push(n_facts);
            n_facts += v.domain.len() as u32;
        }
        let fid = |f: Fact| fact_offset[f.var.0] + f.value as u32;
        let mut entries = Vec::new();
        for (ai, a) in task.actions().iter().enumerate() {
            let branches = formula_to_dnf(&a.precondition, task.variables(), DEFAULT_DNF_LIMIT)?;
            for (oi, o) in a.outcomes.iter().enumerate() {
                for (bi, b) in branches.iter().enumerate() {
                    entries.push(DeterminizedAction {
                        action: ActionId(ai),
                        outcome: oi,
                        branch: bi,
                        pre: b.clone(),
                        eff: o.clone(),
                    });
                }
            }
        }
        let mut pre_index = vec![Vec::new(); n_facts as usize];
        let mut achievers = vec![Vec::new(); n_facts as usize];
        let mut unconditional = Vec::new();
        let mut pre = Vec::with_capacity(entries.len());
        let mut eff = Vec::with_capacity(entries.len());
        for (ei, e) in entries.iter().enumerate() {
            let p: Vec<u32> = e.pre.iter().map(|f| fid(*f)).collect();
            let q: Vec<u32> = e.eff.facts().iter().map(|f| fid(*f)).collect();
            if p.is_empty() {
                unconditional.push(ei as u32);
            }
            for &f in &p {
                pre_index[f as usize].push(ei as u32);
            }
            for &f in &q {
                achievers[f as usize].push(ei as u32);
            }
            pre.push(p);
            eff.push(q);
        }
        let goal: Vec<u32> = task.goal().iter().map(|f| fid(*f)).collect();
        let mut is_goal = vec![false; n_facts as usize];
        for &g in &goal {
            is_goal[g as usize] = true;
        }
        let slot = entries.iter().map(|e| task.nondet_slot(e.action)).collect();
        Ok(Determinization { entries, slot, pre, eff, pre_index, achievers, unconditional, fact_offset, goal, is_goal })
    }

    pub fn entries(&self) -> &[DeterminizedAction] {
        &self.entries
    }

    pub fn num_facts(&self) -> usize {
        self.is_goal.len()
    }

    pub fn fact_index(&self, f: Fact) -> usize {
        (self.fact_offset[f.var.0] + f.value as u32) as usize
    }

    fn fact_of(&self, idx: u32) -> Fact {
        let var = self.fact_offset.partition_point(|&o| o <= idx) - 1;
        Fact::new(var, (idx - self.fact_offset[var]) as u16)
    }

    fn available(&self, entry: usize, avail: &Availability) -> bool {
        self.slot[entry].is_none_or(|s| avail.contains(s))
    }
}

/// Entries for the given availability: every deterministic action, and the
/// outcomes of available nondeterministic ones.
pub fn determinize(task: &PlanningTask, available: &Availability) -> Result<Vec<DeterminizedAction>, ModelError> {
    let det = Determinization::new(task)?;
    Ok((0..det.entries.len()).filter(|&e| det.available(e, available)).map(|e| det.entries[e].clone()).collect())
}

/// FF heuristic evaluator. Holds scratch buffers; create one per search.
pub struct FfHeuristic<'t> {
    task: &'t PlanningTask,
    det: Arc<Determinization>,
    fact_level: Vec<u32>,
    entry_level: Vec<u32>,
    counter: Vec<u32>,
    achieved_at: Vec<u32>,
    goals_at: Vec<Vec<u32>>,
}

impl<'t> FfHeuristic<'t> {
    pub fn new(task: &'t PlanningTask) -> Result<Self, ModelError> {
        Ok(Self::with_determinization(task, Arc::new(Determinization::new(task)?)))
    }

    pub fn with_determinization(task: &'t PlanningTask, det: Arc<Determinization>) -> Self {
        let (nf, ne) = (det.num_facts(), det.entries.len());
        FfHeuristic {
            task,
            det,
            fact_level: vec![UNREACHED; nf],
            entry_level: vec![UNREACHED; ne],
            counter: vec![0; ne],
            achieved_at: vec![UNREACHED; nf],
            goals_at: Vec::new(),
        }
    }

    pub fn determinization(&self) -> &Arc<Determinization> {
        &self.det
    }

    /// Fills `fact_level` and `entry_level`; returns the goal level.
    fn run(&mut self, state: &State, avail: &Availability) -> Option<u32> {
        let det = &*self.det;
        self.fact_level.fill(UNREACHED);
        self.entry_level.fill(UNREACHED);
        for (e, p) in det.pre.iter().enumerate() {
            self.counter[e] = p.len() as u32;
        }
        let mut new_facts: Vec<u32> = state.facts().map(|f| det.fact_index(f) as u32).collect();
        let mut open_goals = det.goal.len();
        for &f in &new_facts {
            self.fact_level[f as usize] = 0;
            if det.is_goal[f as usize] {
                open_goals -= 1;
            }
        }
        if open_goals == 0 {
            return Some(0);
        }
        let mut ready: Vec<u32> = det.unconditional.iter().copied().filter(|&e| det.available(e as usize, avail)).collect();
        let mut t = 0u32;
        loop {
            for &f in &new_facts {
                for &e in &det.pre_index[f as usize] {
                    let c = &mut self.counter[e as usize];
                    *c -= 1;
                    if *c == 0 && det.available(e as usize, avail) {
                        ready.push(e);
                    }
                }
            }
            let mut next = Vec::new();
            for e in ready.drain(..) {
                self.entry_level[e as usize] = t;
                for &f in &det.eff[e as usize] {
                    if self.fact_level[f as usize] == UNREACHED {
                        self.fact_level[f as usize] = t + 1;
                        next.push(f);
                        if det.is_goal[f as usize] {
                            open_goals -= 1;
                        }
                    }
                }
            }
            t += 1;
            if open_goals == 0 {
                return Some(t);
            }
            if next.is_empty() {
                return None;
            }
            new_facts = next;
        }
    }

    /// Builds the planning graph for `ss` and reports its layers.
    pub fn rpg(&mut self, ss: &SearchState) -> RpgResult {
        let level = self.run(&ss.state, &ss.available);
        let lvl = |x: u32| (x != UNREACHED).then_some(x);
        let fact_level: Vec<Option<u32>> = self.fact_level.iter().map(|&x| lvl(x)).collect();
        let entry_level = self.entry_level.iter().map(|&x| lvl(x)).collect();
        let last = level.unwrap_or_else(|| fact_level.iter().flatten().copied().max().unwrap_or(0));
        let layers = (0..=last)
            .map(|t| {
                (0..fact_level.len())
                    .filter(|&f| fact_level[f].is_some_and(|l| l <= t))
                    .map(|f| self.det.fact_of(f as u32))
                    .collect()
            })
            .collect();
        RpgResult { level, layers, fact_level, entry_level }
    }

    /// Backchains from the goal over the current graph.
    fn extract(&mut self, top: u32, state: &State, avail: &Availability) -> HeuristicOutcome {
        let det = &*self.det;
        if self.goals_at.len() <= top as usize {
            self.goals_at.resize(top as usize + 1, Vec::new());
        }
        self.achieved_at.fill(UNREACHED);
        for &g in &det.goal {
            let l = self.fact_level[g as usize];
            if l > 0 {
                self.goals_at[l as usize].push(g);
            }
        }
        let mut selected: Vec<u32> = Vec::new();
        for i in (1..=top).rev() {
            let goals = std::mem::take(&mut self.goals_at[i as usize]);
            for &g in &goals {
                if self.achieved_at[g as usize] <= i {
                    continue;
                }
                // First level is exactly i - 1 for any supporter of a fact first
                // reached at i; ties go to the lowest entry index.
                let e = *det.achievers[g as usize]
                    .iter()
                    .find(|&&e| self.entry_level[e as usize] == i - 1)
                    .expect("a fact at layer i has a supporter at layer i - 1");
                selected.push(e);
                for &f in &det.eff[e as usize] {
                    let a = &mut self.achieved_at[f as usize];
                    *a = (*a).min(i);
                }
                for &p in &det.pre[e as usize] {
                    let l = self.fact_level[p as usize];
                    if l > 0 && self.achieved_at[p as usize] > l {
                        self.goals_at[l as usize].push(p);
                    }
                }
            }
            let mut goals = goals;
            goals.clear();
            self.goals_at[i as usize] = goals;
        }
        let mut pairs: Vec<(ActionId, usize)> =
            selected.iter().map(|&e| (det.entries[e as usize].action, det.entries[e as usize].outcome)).collect();
        pairs.sort_unstable();
        pairs.dedup();
        let mut helpful: Vec<ActionId> = selected
            .iter()
            .filter(|&&e| self.entry_level[e as usize] == 0)
            .map(|&e| det.entries[e as usize].action)
            .collect();
        helpful.sort_unstable();
        helpful.dedup();
        let ss_ok = |a: ActionId| {
            self.task.nondet_slot(a).is_none_or(|s| avail.contains(s))
                && self.task.eval_formula(state, &self.task.action(a).precondition)
        };
        helpful.retain(|&a| ss_ok(a));
        let mut relaxed_plan: Vec<usize> = selected.iter().map(|&e| e as usize).collect();
        relaxed_plan.sort_unstable();
        relaxed_plan.dedup();
        HeuristicOutcome { value: Some(pairs.len() as u32), relaxed_plan, helpful }
    }
}

impl Heuristic for FfHeuristic<'_> {
    fn evaluate(&mut self, ss: &SearchState) -> HeuristicOutcome {
        match self.run(&ss.state, &ss.available) {
            None => HeuristicOutcome { value: None, ..Default::default() },
            Some(0) => HeuristicOutcome { value: Some(0), ..Default::default() },
            Some(top) => self.extract(top, &ss.state, &ss.available),
        }
    }
}

/// 0 on goal states and 1 elsewhere; every applicable action is helpful.
pub struct BlindHeuristic<'t> {
    task: &'t PlanningTask,
}

impl<'t> BlindHeuristic<'t> {
    pub fn new(task: &'t PlanningTask) -> Self {
        BlindHeuristic { task }
    }
}

impl Heuristic for BlindHeuristic<'_> {
    fn evaluate(&mut self, ss: &SearchState) -> HeuristicOutcome {
        let goal = self.task.goal_satisfied(&ss.state);
        HeuristicOutcome {
            value: Some(if goal { 0 } else { 1 }),
            relaxed_plan: Vec::new(),
            helpful: if goal { Vec::new() } else { self.task.applicable(ss) },
        }
    }
}

/// One-shot FF evaluation.
pub fn ff_h(task: &PlanningTask, ss: &SearchState) -> Result<HeuristicOutcome, ModelError> {
    Ok(FfHeuristic::new(task)?.evaluate(ss))
}

pub fn blind_h(task: &PlanningTask, ss: &SearchState) -> HeuristicOutcome {
    BlindHeuristic::new(task).evaluate(ss)
}

/// One-shot planning graph.
pub fn build_rpg(task: &PlanningTask, state: &State, available: &Availability) -> Result<RpgResult, ModelError> {
    let ss = SearchState { state: state.clone(), available: available.clone() };
    Ok(FfHeuristic::new(task)?.rpg(&ss))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples_data::{customer_quote_task, two_checks_task};
    use crate::model::VarId;
    use std::collections::BTreeSet;

    fn names(task: &PlanningTask, det: &Determinization, plan: &[usize]) -> BTreeSet<String> {
        plan.iter()
            .map(|&e| {
                let d = &det.entries()[e];
                format!("{}[{}]", task.action(d.action).name, task.assignment_name(&d.eff))
            })
            .collect()
    }

    fn set(state: &State, task: &PlanningTask, var: &str, val: &str) -> State {
        let f = task.fact(var, val).unwrap();
        state.apply(&PartialAssignment::new(vec![f]).unwrap())
    }

    #[test]
    fn two_checks_root() {
        let task = two_checks_task();
        let mut h = FfHeuristic::new(&task).unwrap();
        let root = task.initial_search_state();
        let rpg = h.rpg(&root);
        assert_eq!(rpg.level, Some(1));
        let out = h.evaluate(&root);
        assert_eq!(out.value, Some(2));
        let got = names(&task, h.determinization(), &out.relaxed_plan);
        assert_eq!(got, BTreeSet::from(["CheckComp[Comp=true]".to_string(), "CheckCons[Cons=true]".to_string()]));
        assert_eq!(out.helpful, vec![ActionId(0), ActionId(1)]);
    }

    #[test]
    fn two_checks_inner_nodes() {
        let task = two_checks_task();
        let mut h = FfHeuristic::new(&task).unwrap();
        let root = task.initial_search_state();
        let comp_ok = task.successor(&root, ActionId(0), 0);
        assert_eq!(h.evaluate(&comp_ok).value, Some(1));
        let both = task.successor(&comp_ok, ActionId(1), 0);
        assert_eq!(h.evaluate(&both).value, Some(0));
        assert!(h.evaluate(&both).helpful.is_empty());
        let comp_bad = task.successor(&root, ActionId(0), 1);
        assert_eq!(h.evaluate(&comp_bad).value, None);
        let cons_bad = task.successor(&comp_ok, ActionId(1), 1);
        assert_eq!(h.evaluate(&cons_bad).value, None);
    }

    #[test]
    fn cq_determinization_counts() {
        let task = customer_quote_task();
        let all = determinize(&task, &Availability::all(4)).unwrap();
        let sources: BTreeSet<(ActionId, usize)> = all.iter().map(|d| (d.action, d.outcome)).collect();
        assert_eq!(sources.len(), 12);
        let submit = task.action_by_name("Submit CQ").unwrap();
        assert_eq!(all.iter().filter(|d| d.action == submit).count(), 2);
        let none = determinize(&task, &Availability::none(4)).unwrap();
        assert!(none.iter().all(|d| task.action(d.action).is_deterministic()));
        assert_eq!(none.len(), 5);
    }

    #[test]
    fn cq_archive_only_goal() {
        let task = customer_quote_task();
        let arch = task.fact("CQ.archiving", "archived").unwrap();
        let task = task.with_goal(vec![arch]).unwrap();
        let mut h = FfHeuristic::new(&task).unwrap();
        let out = h.evaluate(&task.initial_search_state());
        assert_eq!(out.value, Some(1));
        assert_eq!(names(&task, h.determinization(), &out.relaxed_plan), BTreeSet::from(["Archive CQ[CQ.archiving=archived]".to_string()]));
        // brute force over single actions: archiving is the only one reaching the goal
        let ss = task.initial_search_state();
        let one_step: Vec<ActionId> = task
            .applicable(&ss)
            .into_iter()
            .filter(|&a| (0..task.action(a).outcomes.len()).any(|o| task.goal_satisfied(&task.successor(&ss, a, o).state)))
            .collect();
        assert_eq!(one_step, vec![task.action_by_name("Archive CQ").unwrap()]);
    }

    #[test]
    fn cq_initial_state() {
        let task = customer_quote_task();
        let mut h = FfHeuristic::new(&task).unwrap();
        let out = h.evaluate(&task.initial_search_state());
        assert_eq!(out.value, Some(7));
        let helpful: BTreeSet<&str> = out.helpful.iter().map(|&a| task.action(a).name.as_str()).collect();
        assert_eq!(helpful, BTreeSet::from(["Check CQ Completeness", "Check CQ Consistency", "Archive CQ"]));
    }

    #[test]
    fn cq_dead_end_after_failed_check() {
        let task = customer_quote_task();
        let root = task.initial_search_state();
        let check = task.action_by_name("Check CQ Completeness").unwrap();
        let bad = task.successor(&root, check, 1);
        assert_eq!(ff_h(&task, &bad).unwrap().value, None);
        // blind cannot tell
        assert_eq!(blind_h(&task, &bad).value, Some(1));
    }

    #[test]
    fn blind_values() {
        let task = customer_quote_task();
        let root = task.initial_search_state();
        let out = blind_h(&task, &root);
        assert_eq!(out.value, Some(1));
        assert_eq!(out.helpful, task.applicable(&root));
        let mut s = root.state.clone();
        s = set(&s, &task, "CQ.followUp", "documentCreated");
        s = set(&s, &task, "CQ.archiving", "archived");
        assert_eq!(blind_h(&task, &SearchState { state: s, available: root.available }).value, Some(0));
    }

    #[test]
    fn layers_grow_monotonically() {
        let task = customer_quote_task();
        let rpg = build_rpg(&task, task.initial(), &Availability::all(4)).unwrap();
        assert_eq!(rpg.level, Some(5));
        for w in rpg.layers.windows(2) {
            let a: BTreeSet<Fact> = w[0].iter().copied().collect();
            let b: BTreeSet<Fact> = w[1].iter().copied().collect();
            assert!(a.is_subset(&b));
        }
        assert_eq!(rpg.layers[0].len(), task.variables().len());
        assert!(rpg.layers[0].contains(&Fact { var: VarId(0), value: 0 }));
    }
}
