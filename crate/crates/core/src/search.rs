//! AND-OR forward search for strong and weak plans.
//!
//! OR nodes hold search states, AND nodes hold applied actions with one child
//! per outcome. Node statuses are aggregated bottom-up after every expansion;
//! the weak aggregate tolerates failed outcomes as long as one outcome is
//! solved and the rest are known to have failed.

use crate::heuristic::{BlindHeuristic, Determinization, FfHeuristic, Heuristic};
use crate::model::{ActionId, ActionTree, ModelError, PlanningTask, SearchState, Semantics, State};
use crate::oracle::{Oracle, OracleError};
use serde::{Deserialize, Serialize};
use std::fmt::Write;
use std::sync::Arc;
use std::time::{Duration, Instant};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Strong,
    Weak,
    /// Strong first under a short budget, then weak.
    Auto,
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeuristicKind {
    #[default]
    Ff,
    Blind,
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DuplicatePruning {
    /// Skip deterministic successors equal to an ancestor in state and availability.
    #[default]
    Direct,
    /// Compare states only. Unsound for weak planning; kept for demonstration.
    StateOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub mode: Mode,
    pub heuristic: HeuristicKind,
    pub weight: f64,
    pub helpful_pruning: bool,
    pub max_evaluations: Option<u64>,
    pub time_budget_ms: Option<u64>,
    /// Time given to the strong phase in auto mode.
    pub strong_phase_budget_ms: u64,
    pub max_nodes: Option<usize>,
    pub depth_ceiling: usize,
    pub duplicate_pruning: DuplicatePruning,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            mode: Mode::Auto,
            heuristic: HeuristicKind::Ff,
            weight: 5.0,
            helpful_pruning: true,
            max_evaluations: None,
            time_budget_ms: Some(60_000),
            strong_phase_budget_ms: 500,
            max_nodes: Some(5_000_000),
            depth_ceiling: 100_000,
            duplicate_pruning: DuplicatePruning::Direct,
        }
    }
}

impl SearchConfig {
    pub fn weak() -> Self {
        SearchConfig { mode: Mode::Weak, ..Default::default() }
    }

    pub fn strong() -> Self {
        SearchConfig { mode: Mode::Strong, ..Default::default() }
    }

    pub fn with_pruning(mut self, on: bool) -> Self {
        self.helpful_pruning = on;
        self
    }

    pub fn with_heuristic(mut self, h: HeuristicKind) -> Self {
        self.heuristic = h;
        self
    }

    pub fn with_max_evaluations(mut self, n: u64) -> Self {
        self.max_evaluations = Some(n);
        self
    }

    pub fn with_time_budget(mut self, d: Duration) -> Self {
        self.time_budget_ms = Some(d.as_millis() as u64);
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if !self.weight.is_finite() || self.weight < 1.0 {
            return Err(format!("weight must be a finite number ≥ 1, got {}", self.weight));
        }
        Ok(())
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Solved,
    Failed,
    Unknown,
}

/// Weak aggregate over an action's outcomes.
pub fn sam_aggregate(children: &[Status]) -> Status {
    if children.iter().all(|&s| s == Status::Failed) {
        Status::Failed
    } else if children.contains(&Status::Solved) && !children.contains(&Status::Unknown) {
        Status::Solved
    } else {
        Status::Unknown
    }
}

/// Strong aggregate over an action's outcomes.
pub fn and_aggregate(children: &[Status]) -> Status {
    if children.contains(&Status::Failed) {
        Status::Failed
    } else if children.iter().all(|&s| s == Status::Solved) {
        Status::Solved
    } else {
        Status::Unknown
    }
}

/// Aggregate over a state's applicable actions. No actions means failed.
pub fn or_aggregate(children: &[Status]) -> Status {
    if children.contains(&Status::Solved) {
        Status::Solved
    } else if children.iter().all(|&s| s == Status::Failed) {
        Status::Failed
    } else {
        Status::Unknown
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrId(pub u32);

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AndId(pub u32);

#[derive(Clone, Debug)]
pub struct OrNode {
    pub ss: SearchState,
    pub parent: Option<AndId>,
    pub status: Status,
    pub f: f64,
    pub h: Option<u32>,
    pub expanded: bool,
    pub children: Vec<AndId>,
    pub best: Option<AndId>,
    pub depth: u32,
    helpful: Vec<ActionId>,
}

#[derive(Clone, Debug)]
pub struct AndNode {
    pub action: ActionId,
    pub parent: OrId,
    pub children: Vec<OrId>,
    pub status: Status,
    pub f: f64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Plan(ActionTree),
    /// Proven: no plan exists under the phase's semantics.
    Unsolvable,
    /// The pruned search space was exhausted without a plan.
    ExhaustedUnknown,
    ResourceLimit,
}

impl Verdict {
    pub fn kind(&self) -> VerdictKind {
        match self {
            Verdict::Plan(_) => VerdictKind::Plan,
            Verdict::Unsolvable => VerdictKind::Unsolvable,
            Verdict::ExhaustedUnknown => VerdictKind::ExhaustedUnknown,
            Verdict::ResourceLimit => VerdictKind::ResourceLimit,
        }
    }

    pub fn plan(&self) -> Option<&ActionTree> {
        match self {
            Verdict::Plan(t) => Some(t),
            _ => None,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    Plan,
    Unsolvable,
    ExhaustedUnknown,
    ResourceLimit,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Limit {
    Evaluations,
    Time,
    Nodes,
    Depth,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    pub evaluations: u64,
    pub expansions: u64,
    pub nodes: u64,
    pub max_depth: u32,
    pub wall_time_ms: f64,
    pub failed_leaves: usize,
    /// Applicable actions dropped by helpful-action pruning.
    pub pruned_actions: u64,
}

impl SearchStats {
    fn absorb(&mut self, other: &SearchStats) {
        self.evaluations += other.evaluations;
        self.expansions += other.expansions;
        self.nodes += other.nodes;
        self.max_depth = self.max_depth.max(other.max_depth);
        self.pruned_actions += other.pruned_actions;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    pub verdict: Verdict,
    /// Semantics of the phase that produced the verdict.
    pub semantics: Semantics,
    pub stats: SearchStats,
    pub limit: Option<Limit>,
    /// Whether the pruned search was inconclusive and redone without pruning:
    /// it exhausted its space, or its plan had a FAIL leaf the planning graph
    /// could not prove dead.
    pub reran_unpruned: bool,
}

/// Budgets shared across phases.
#[derive(Clone, Copy)]
struct Budget {
    deadline: Option<Instant>,
    evaluations: Option<u64>,
}

/// One AND-OR search over a fixed semantics.
pub struct Search<'t> {
    task: &'t PlanningTask,
    semantics: Semantics,
    config: SearchConfig,
    heuristic: Box<dyn Heuristic + 't>,
    ors: Vec<OrNode>,
    ands: Vec<AndNode>,
    stats: SearchStats,
    pruned_any: bool,
}

impl<'t> Search<'t> {
    pub fn new(task: &'t PlanningTask, semantics: Semantics, config: &SearchConfig) -> Result<Self, ModelError> {
        Self::from_state(task, task.initial_search_state(), semantics, config)
    }

    pub fn from_state(
        task: &'t PlanningTask,
        root: SearchState,
        semantics: Semantics,
        config: &SearchConfig,
    ) -> Result<Self, ModelError> {
        let heuristic: Box<dyn Heuristic + 't> = match config.heuristic {
            HeuristicKind::Ff => Box::new(FfHeuristic::new(task)?),
            HeuristicKind::Blind => Box::new(BlindHeuristic::new(task)),
        };
        Ok(Self::with_heuristic(task, root, semantics, config, heuristic))
    }

    pub fn with_heuristic(
        task: &'t PlanningTask,
        root: SearchState,
        semantics: Semantics,
        config: &SearchConfig,
        heuristic: Box<dyn Heuristic + 't>,
    ) -> Self {
        let mut s = Search {
            task,
            semantics,
            config: config.clone(),
            heuristic,
            ors: Vec::new(),
            ands: Vec::new(),
            stats: SearchStats::default(),
            pruned_any: false,
        };
        s.new_or(root, None, 0);
        s
    }

    pub fn root(&self) -> OrId {
        OrId(0)
    }

    pub fn or_node(&self, id: OrId) -> &OrNode {
        &self.ors[id.0 as usize]
    }

    pub fn and_node(&self, id: AndId) -> &AndNode {
        &self.ands[id.0 as usize]
    }

    pub fn stats(&self) -> &SearchStats {
        &self.stats
    }

    pub fn semantics(&self) -> Semantics {
        self.semantics
    }

    /// Whether helpful-action pruning dropped any applicable action so far.
    pub fn pruned_any(&self) -> bool {
        self.pruned_any
    }

    fn new_or(&mut self, ss: SearchState, parent: Option<AndId>, depth: u32) -> OrId {
        let out = self.heuristic.evaluate(&ss);
        self.stats.evaluations += 1;
        self.stats.nodes += 1;
        self.stats.max_depth = self.stats.max_depth.max(depth);
        let (status, f) = match out.value {
            None => (Status::Failed, f64::INFINITY),
            Some(0) => (Status::Solved, 0.0),
            Some(h) => (Status::Unknown, self.config.weight * h as f64),
        };
        let helpful = if status == Status::Unknown { out.helpful } else { Vec::new() };
        self.ors.push(OrNode {
            ss,
            parent,
            status,
            f,
            h: out.value,
            expanded: false,
            children: Vec::new(),
            best: None,
            depth,
            helpful,
        });
        OrId(self.ors.len() as u32 - 1)
    }

    /// Whether `candidate` equals the content of `node` or of an ancestor
    /// reached through deterministic actions only. Ancestors above a
    /// nondeterministic edge have strictly more available actions.
    pub fn is_direct_duplicate(&self, node: OrId, candidate: &SearchState) -> bool {
        let mut cur = node;
        loop {
            let n = &self.ors[cur.0 as usize];
            match self.config.duplicate_pruning {
                DuplicatePruning::Direct => {
                    if n.ss == *candidate {
                        return true;
                    }
                }
                DuplicatePruning::StateOnly => {
                    if n.ss.state == candidate.state {
                        return true;
                    }
                }
            }
            let Some(p) = n.parent else { return false };
            let and = &self.ands[p.0 as usize];
            if self.config.duplicate_pruning == DuplicatePruning::Direct && !self.task.action(and.action).is_deterministic() {
                return false;
            }
            cur = and.parent;
        }
    }

    /// Follows best actions from the root down to an unexpanded open state.
    pub fn select_open_node(&self) -> Option<OrId> {
        let mut cur = self.root();
        loop {
            let n = &self.ors[cur.0 as usize];
            if n.status != Status::Unknown {
                return None;
            }
            if !n.expanded {
                return Some(cur);
            }
            let best = &self.ands[n.best?.0 as usize];
            cur = *best.children.iter().find(|&&c| self.ors[c.0 as usize].status == Status::Unknown)?;
        }
    }

    /// Expands an open state and propagates the new information to the root.
    pub fn expand(&mut self, id: OrId) {
        let task = self.task;
        let (ss, depth) = {
            let n = &mut self.ors[id.0 as usize];
            debug_assert!(!n.expanded && n.status == Status::Unknown);
            n.expanded = true;
            (n.ss.clone(), n.depth)
        };
        self.stats.expansions += 1;
        let helpful = std::mem::take(&mut self.ors[id.0 as usize].helpful);
        let mut actions = task.applicable(&ss);
        if self.config.helpful_pruning {
            let before = actions.len();
            actions.retain(|a| helpful.binary_search(a).is_ok());
            if actions.len() < before {
                self.pruned_any = true;
                self.stats.pruned_actions += (before - actions.len()) as u64;
            }
        }
        for a in actions {
            let deterministic = task.action(a).is_deterministic();
            if deterministic && self.is_direct_duplicate(id, &task.successor(&ss, a, 0)) {
                continue;
            }
            let and_id = AndId(self.ands.len() as u32);
            self.ands.push(AndNode { action: a, parent: id, children: Vec::new(), status: Status::Unknown, f: 0.0 });
            for o in 0..task.action(a).outcomes.len() {
                let child = self.new_or(task.successor(&ss, a, o), Some(and_id), depth + 1);
                self.ands[and_id.0 as usize].children.push(child);
            }
            self.update_and(and_id);
            self.ors[id.0 as usize].children.push(and_id);
        }
        self.update_or(id);
        self.propagate_from(id);
    }

    fn update_and(&mut self, id: AndId) -> bool {
        let n = &self.ands[id.0 as usize];
        let statuses: Vec<Status> = n.children.iter().map(|c| self.ors[c.0 as usize].status).collect();
        let status = match self.semantics {
            Semantics::Weak => sam_aggregate(&statuses),
            Semantics::Strong => and_aggregate(&statuses),
        };
        let f = match self.semantics {
            Semantics::Weak => n
                .children
                .iter()
                .map(|c| &self.ors[c.0 as usize])
                .filter(|c| c.status != Status::Failed)
                .map(|c| c.f)
                .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.max(x))))
                .unwrap_or(f64::INFINITY),
            Semantics::Strong => n
                .children
                .iter()
                .map(|c| {
                    let c = &self.ors[c.0 as usize];
                    if c.status == Status::Failed {
                        f64::INFINITY
                    } else {
                        c.f
                    }
                })
                .fold(0.0, f64::max),
        };
        let n = &mut self.ands[id.0 as usize];
        let changed = n.status != status || n.f != f;
        n.status = status;
        n.f = f;
        changed
    }

    fn update_or(&mut self, id: OrId) -> bool {
        let n = &self.ors[id.0 as usize];
        if !n.expanded {
            return false;
        }
        let statuses: Vec<Status> = n.children.iter().map(|c| self.ands[c.0 as usize].status).collect();
        let status = or_aggregate(&statuses);
        let mut best: Option<(AndId, f64)> = None;
        for &c in &n.children {
            let a = &self.ands[c.0 as usize];
            let f = if a.status == Status::Failed { f64::INFINITY } else { a.f };
            if best.is_none_or(|(_, bf)| f < bf) {
                best = Some((c, f));
            }
        }
        let f = best.map_or(f64::INFINITY, |(_, bf)| bf + 1.0);
        let n = &mut self.ors[id.0 as usize];
        let changed = n.status != status || n.f != f;
        n.status = status;
        n.f = f;
        n.best = best.map(|(c, _)| c);
        changed
    }

    fn propagate_from(&mut self, id: OrId) {
        let mut cur = id;
        while let Some(p) = self.ors[cur.0 as usize].parent {
            if !self.update_and(p) {
                break;
            }
            let up = self.ands[p.0 as usize].parent;
            if !self.update_or(up) {
                break;
            }
            cur = up;
        }
    }

    /// The solution subtree once the root is solved.
    pub fn extract_plan(&self) -> Option<ActionTree> {
        (self.ors[0].status == Status::Solved).then(|| self.extract_or(self.root()))
    }

    fn extract_or(&self, id: OrId) -> ActionTree {
        let n = &self.ors[id.0 as usize];
        if !n.expanded {
            return ActionTree::Stop;
        }
        let solved = |c: &AndId| self.ands[c.0 as usize].status == Status::Solved;
        let pick = n.best.filter(solved).or_else(|| n.children.iter().copied().find(solved)).expect("solved state has a solved action");
        let a = &self.ands[pick.0 as usize];
        let children = a
            .children
            .iter()
            .map(|&c| match self.ors[c.0 as usize].status {
                Status::Solved => self.extract_or(c),
                _ => ActionTree::Fail,
            })
            .collect();
        ActionTree::Act { action: a.action, children }
    }

    fn run(&mut self, budget: Budget) -> (Verdict, Option<Limit>) {
        let limit = loop {
            let Some(id) = self.select_open_node() else { break None };
            if self.ors[id.0 as usize].depth as usize >= self.config.depth_ceiling {
                log::error!(
                    "depth ceiling {} reached at node {} ({} nodes); aborting",
                    self.config.depth_ceiling,
                    id.0,
                    self.ors.len()
                );
                break Some(Limit::Depth);
            }
            self.expand(id);
            if budget.evaluations.is_some_and(|m| self.stats.evaluations >= m) {
                break Some(Limit::Evaluations);
            }
            if budget.deadline.is_some_and(|d| Instant::now() >= d) {
                break Some(Limit::Time);
            }
            if self.config.max_nodes.is_some_and(|m| self.ors.len() >= m) {
                break Some(Limit::Nodes);
            }
        };
        match self.ors[0].status {
            Status::Solved => {
                let plan = self.extract_plan().expect("root solved");
                self.stats.failed_leaves = plan.fail_leaves();
                (Verdict::Plan(plan), None)
            }
            Status::Failed => {
                if !self.pruned_any || self.ors[0].h.is_none() {
                    (Verdict::Unsolvable, None)
                } else {
                    (Verdict::ExhaustedUnknown, None)
                }
            }
            Status::Unknown => (Verdict::ResourceLimit, limit),
        }
    }
}

fn remaining(budget: Budget, used: u64) -> Budget {
    Budget { deadline: budget.deadline, evaluations: budget.evaluations.map(|m| m.saturating_sub(used)) }
}

fn exhausted(budget: Budget) -> Option<Limit> {
    if budget.evaluations == Some(0) {
        Some(Limit::Evaluations)
    } else if budget.deadline.is_some_and(|d| Instant::now() >= d) {
        Some(Limit::Time)
    } else {
        None
    }
}

fn run_phase(
    task: &PlanningTask,
    root: &SearchState,
    semantics: Semantics,
    config: &SearchConfig,
    budget: Budget,
) -> Result<(Verdict, SearchStats, Option<Limit>, bool), ModelError> {
    if let Some(limit) = exhausted(budget) {
        return Ok((Verdict::ResourceLimit, SearchStats::default(), Some(limit), false));
    }
    let mut search = Search::from_state(task, root.clone(), semantics, config)?;
    let (verdict, limit) = search.run(budget);
    Ok((verdict, search.stats.clone(), limit, search.pruned_any))
}

/// Solves from the task's initial search state.
pub fn solve(task: &PlanningTask, config: &SearchConfig) -> SearchResult {
    solve_from(task, &task.initial_search_state(), config)
}

/// Solves from an arbitrary search state.
pub fn solve_from(task: &PlanningTask, root: &SearchState, config: &SearchConfig) -> SearchResult {
    let start = Instant::now();
    let budget = Budget {
        deadline: config.time_budget_ms.map(|ms| start + Duration::from_millis(ms)),
        evaluations: config.max_evaluations,
    };
    let mut result = match solve_inner(task, root, config, budget) {
        Ok(r) => r,
        Err(e) => {
            log::error!("search aborted: {e}");
            SearchResult {
                verdict: Verdict::ResourceLimit,
                semantics: Semantics::Weak,
                stats: SearchStats::default(),
                limit: None,
                reran_unpruned: false,
            }
        }
    };
    result.stats.wall_time_ms = start.elapsed().as_secs_f64() * 1000.0;
    result
}

fn solve_inner(task: &PlanningTask, root: &SearchState, config: &SearchConfig, budget: Budget) -> Result<SearchResult, ModelError> {
    let mut stats = SearchStats::default();
    let final_semantics = if config.mode == Mode::Strong { Semantics::Strong } else { Semantics::Weak };
    if config.mode == Mode::Auto {
        let phase_end = Instant::now() + Duration::from_millis(config.strong_phase_budget_ms);
        let strong_budget = Budget { deadline: Some(budget.deadline.map_or(phase_end, |d| d.min(phase_end))), ..budget };
        let (verdict, s, limit, _) = run_phase(task, root, Semantics::Strong, config, strong_budget)?;
        stats.absorb(&s);
        stats.failed_leaves = s.failed_leaves;
        if matches!(verdict, Verdict::Plan(_)) {
            return Ok(SearchResult { verdict, semantics: Semantics::Strong, stats, limit, reran_unpruned: false });
        }
    }
    let (verdict, s, limit, pruned_any) = run_phase(task, root, final_semantics, config, remaining(budget, stats.evaluations))?;
    stats.absorb(&s);
    stats.failed_leaves = s.failed_leaves;
    let mut result = SearchResult { verdict, semantics: final_semantics, stats, limit, reran_unpruned: false };
    if !(pruned_any && config.helpful_pruning) {
        return Ok(result);
    }
    // Pruning may cut off the only solution below a state, which would turn
    // a solvable outcome into a FAIL leaf or exhaust the space early.
    let rerun = match &result.verdict {
        Verdict::Plan(tree) => !fail_leaves_dead_ends(task, root, tree)?,
        Verdict::ExhaustedUnknown => true,
        _ => false,
    };
    if rerun {
        log::info!("pruned {final_semantics} search inconclusive; searching again without pruning");
        let retry = SearchConfig { helpful_pruning: false, ..config.clone() };
        let (verdict, s, limit, _) =
            run_phase(task, root, final_semantics, &retry, remaining(budget, result.stats.evaluations))?;
        result.stats.absorb(&s);
        result.stats.failed_leaves = s.failed_leaves;
        result.verdict = verdict;
        result.limit = limit;
        result.reran_unpruned = true;
    }
    Ok(result)
}

/// Whether every FAIL leaf of `tree` is a dead end for the FF heuristic.
pub fn fail_leaves_dead_ends(task: &PlanningTask, root: &SearchState, tree: &ActionTree) -> Result<bool, ModelError> {
    let mut h = FfHeuristic::new(task)?;
    let mut ok = true;
    visit_leaves(task, root, tree, &mut |ss, leaf| {
        if *leaf == ActionTree::Fail && h.evaluate(ss).value.is_some() {
            ok = false;
        }
    });
    Ok(ok)
}

/// Calls `f` on every leaf with the search state it is reached in.
pub fn visit_leaves(task: &PlanningTask, ss: &SearchState, tree: &ActionTree, f: &mut dyn FnMut(&SearchState, &ActionTree)) {
    match tree {
        ActionTree::Act { action, children } => {
            for (o, c) in children.iter().enumerate() {
                visit_leaves(task, &task.successor(ss, *action, o), c, f);
            }
        }
        leaf => f(ss, leaf),
    }
}

/// How FAIL leaves are shown to be unsolvable.
#[derive(Clone, Debug)]
pub enum Certifier {
    /// Exhaustive solvability check; for small tasks.
    Oracle { limit: usize },
    /// The planning graph reaches a fixed point without the goal.
    RpgInfinity,
    /// A weak search without pruning proves unsolvability.
    Search { max_evaluations: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub clause: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub violation: Option<Violation>,
    pub fail_leaves: usize,
}

struct Validator<'t> {
    task: &'t PlanningTask,
    semantics: Semantics,
    certifier: Certifier,
    oracle: Option<Oracle<'t>>,
    ff: Option<FfHeuristic<'t>>,
    fail_leaves: usize,
}

impl<'t> Validator<'t> {
    fn certify(&mut self, ss: &SearchState) -> Result<bool, String> {
        match &self.certifier {
            Certifier::Oracle { limit } => {
                let limit = *limit;
                let task = self.task;
                let oracle = self.oracle.get_or_insert_with(|| Oracle::new(task, Semantics::Weak).with_limit(limit));
                oracle.solvable(ss).map(|s| !s).map_err(|e: OracleError| e.to_string())
            }
            Certifier::RpgInfinity => {
                if self.ff.is_none() {
                    let det = Determinization::new(self.task).map_err(|e| e.to_string())?;
                    self.ff = Some(FfHeuristic::with_determinization(self.task, Arc::new(det)));
                }
                Ok(self.ff.as_mut().expect("initialized").evaluate(ss).value.is_none())
            }
            Certifier::Search { max_evaluations } => {
                let config = SearchConfig::weak().with_pruning(false).with_max_evaluations(*max_evaluations);
                let r = solve_from(self.task, ss, &config);
                match r.verdict {
                    Verdict::Unsolvable => Ok(true),
                    Verdict::Plan(_) => Ok(false),
                    _ => Err("certifying search ran out of budget".into()),
                }
            }
        }
    }

    fn check(&mut self, ss: &SearchState, tree: &ActionTree, path: &mut String) -> Result<(), Violation> {
        let violation = |path: &String, clause: String| Err(Violation { path: path.clone(), clause });
        match tree {
            ActionTree::Stop => {
                if self.task.goal_satisfied(&ss.state) {
                    Ok(())
                } else {
                    violation(path, "STOP leaf in a state that does not satisfy the goal".into())
                }
            }
            ActionTree::Fail => violation(path, "FAIL leaf outside the outcomes of a nondeterministic action".into()),
            ActionTree::Act { action, children } => {
                let a = self.task.action(*action);
                if let Some(slot) = self.task.nondet_slot(*action) {
                    if !ss.available.contains(slot) {
                        return violation(path, format!("`{}` is used a second time on this path", a.name));
                    }
                }
                if !self.task.eval_formula(&ss.state, &a.precondition) {
                    return violation(path, format!("precondition of `{}` does not hold", a.name));
                }
                if children.len() != a.outcomes.len() {
                    return violation(path, format!("`{}` needs {} children", a.name, a.outcomes.len()));
                }
                let nondet = !a.is_deterministic();
                if nondet && self.semantics == Semantics::Weak && children.iter().all(|c| *c == ActionTree::Fail) {
                    return violation(path, format!("every outcome of `{}` is FAIL", a.name));
                }
                for (o, child) in children.iter().enumerate() {
                    let len = path.len();
                    let _ = write!(path, "/{}#{}", a.name, o);
                    let next = self.task.successor(ss, *action, o);
                    if *child == ActionTree::Fail && nondet {
                        if self.semantics == Semantics::Strong {
                            return violation(path, "FAIL leaf in a strong plan".into());
                        }
                        self.fail_leaves += 1;
                        match self.certify(&next) {
                            Ok(true) => {}
                            Ok(false) => return violation(path, "FAIL leaf on an outcome that can still be solved".into()),
                            Err(e) => return violation(path, format!("FAIL leaf could not be certified: {e}")),
                        }
                    } else {
                        self.check(&next, child, path)?;
                    }
                    path.truncate(len);
                }
                Ok(())
            }
        }
    }
}

/// Checks `tree` against the strong or weak plan definition from the initial search state.
pub fn validate_plan(task: &PlanningTask, tree: &ActionTree, semantics: Semantics, certifier: Certifier) -> ValidationReport {
    validate_plan_from(task, &task.initial_search_state(), tree, semantics, certifier)
}

pub fn validate_plan_from(
    task: &PlanningTask,
    ss: &SearchState,
    tree: &ActionTree,
    semantics: Semantics,
    certifier: Certifier,
) -> ValidationReport {
    let mut v = Validator { task, semantics, certifier, oracle: None, ff: None, fail_leaves: 0 };
    let result = v.check(ss, tree, &mut String::from("root"));
    ValidationReport { valid: result.is_ok(), violation: result.err(), fail_leaves: v.fail_leaves }
}

/// State reached after following `outcomes` from the root of `tree`.
pub fn state_at(task: &PlanningTask, tree: &ActionTree, outcomes: &[usize]) -> Option<State> {
    let mut ss = task.initial_search_state();
    let mut t = tree;
    for &o in outcomes {
        let ActionTree::Act { action, children } = t else { return None };
        ss = task.successor(&ss, *action, o);
        t = children.get(o)?;
    }
    Some(ss.state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples_data::{customer_quote_task, customer_quote_weak_plan, one_action_task, revisit_task, two_checks_task};
    use crate::model::{Availability, Fact, PartialAssignment};
    use Status::*;

    #[test]
    fn aggregates() {
        assert_eq!(sam_aggregate(&[Solved, Failed]), Solved);
        assert_eq!(sam_aggregate(&[Failed, Failed]), Failed);
        assert_eq!(sam_aggregate(&[Solved, Unknown]), Unknown);
        assert_eq!(or_aggregate(&[Failed, Solved]), Solved);
        assert_eq!(or_aggregate(&[]), Failed);
        assert_eq!(or_aggregate(&[Unknown, Failed]), Unknown);
        assert_eq!(and_aggregate(&[Solved, Failed]), Failed);
        assert_eq!(and_aggregate(&[Solved, Solved]), Solved);
        assert_eq!(and_aggregate(&[Solved, Unknown]), Unknown);
    }

    #[test]
    fn leaf_and_inner_f_values() {
        let task = two_checks_task();
        let config = SearchConfig::weak();
        let mut s = Search::new(&task, Semantics::Weak, &config).unwrap();
        assert_eq!(s.or_node(s.root()).f, 10.0);
        s.expand(s.root());
        // CheckComp: children h=1 (f=5) and dead end; CheckCons likewise.
        let root = s.or_node(s.root());
        assert_eq!(root.children.len(), 2);
        for &c in &root.children {
            assert_eq!(s.and_node(c).f, 5.0);
        }
        assert_eq!(root.f, 6.0);
        assert_eq!(root.best, Some(root.children[0]));
    }

    #[test]
    fn two_checks_plan_starts_like_the_worked_example() {
        let task = two_checks_task();
        let r = solve(&task, &SearchConfig::weak());
        let plan = r.verdict.plan().unwrap().clone();
        let ActionTree::Act { action, children } = &plan else { panic!() };
        assert_eq!(task.action(*action).name, "CheckComp");
        assert_eq!(children[1], ActionTree::Fail);
        assert!(matches!(&children[0], ActionTree::Act { action, .. } if task.action(*action).name == "CheckCons"));
    }

    #[test]
    fn one_action_task_plans() {
        let task = one_action_task();
        let weak = solve(&task, &SearchConfig::weak().with_pruning(false));
        let a = ActionId(0);
        assert_eq!(weak.verdict, Verdict::Plan(ActionTree::Act { action: a, children: vec![ActionTree::Fail, ActionTree::Stop] }));
        let strong = solve(&task, &SearchConfig::strong().with_pruning(false));
        assert_eq!(strong.verdict, Verdict::Unsolvable);
    }

    #[test]
    fn revisit_task_continues_after_bad_outcome() {
        let task = revisit_task();
        let config = SearchConfig::weak().with_pruning(false);
        let mut s = Search::new(&task, Semantics::Weak, &config).unwrap();
        s.expand(s.root());
        // a1 is the first AND child; its B outcome returns to A via a2.
        let a1 = s.or_node(s.root()).children[0];
        let b = s.and_node(a1).children[0];
        let back = task.successor(&s.or_node(b).ss, ActionId(1), 0);
        assert_eq!(back.state, task.initial().clone());
        assert!(!s.is_direct_duplicate(b, &back));
        let naive = SearchConfig { duplicate_pruning: DuplicatePruning::StateOnly, ..config.clone() };
        let mut n = Search::new(&task, Semantics::Weak, &naive).unwrap();
        n.expand(n.root());
        let b = n.and_node(n.or_node(n.root()).children[0]).children[0];
        assert!(n.is_direct_duplicate(b, &back));
    }

    #[test]
    fn no_op_successor_is_a_duplicate() {
        let task = customer_quote_task();
        let config = SearchConfig::weak();
        let s = Search::new(&task, Semantics::Weak, &config).unwrap();
        let root = task.initial_search_state();
        assert!(s.is_direct_duplicate(s.root(), &root));
        let arch = task.fact("CQ.archiving", "archived").unwrap();
        let fresh = SearchState { state: root.state.apply(&PartialAssignment::new(vec![arch]).unwrap()), available: root.available.clone() };
        assert!(!s.is_direct_duplicate(s.root(), &fresh));
    }

    #[test]
    fn cq_weak_plan_matches_hand_built_plan() {
        let task = customer_quote_task();
        let r = solve(&task, &SearchConfig::weak());
        let plan = r.verdict.plan().expect("plan").clone();
        assert_eq!(plan.fail_leaves(), 3);
        let report = validate_plan(&task, &plan, Semantics::Weak, Certifier::Oracle { limit: 100_000 });
        assert!(report.valid, "{report:?}");
        assert_eq!(canonical(&task, &plan), canonical(&task, &customer_quote_weak_plan(&task)));
    }

    /// Rendering with outcome labels, so sibling order does not matter.
    fn canonical(task: &PlanningTask, t: &ActionTree) -> String {
        match t {
            ActionTree::Stop => "STOP".into(),
            ActionTree::Fail => "FAIL".into(),
            ActionTree::Act { action, children } => {
                let a = task.action(*action);
                let mut parts: Vec<String> = children
                    .iter()
                    .enumerate()
                    .map(|(i, c)| format!("{}->{}", task.assignment_name(&a.outcomes[i]), canonical(task, c)))
                    .collect();
                parts.sort();
                format!("{}({})", a.name, parts.join(";"))
            }
        }
    }

    #[test]
    fn cq_strong_is_unsolvable() {
        let task = customer_quote_task();
        let r = solve(&task, &SearchConfig::strong().with_pruning(false));
        assert_eq!(r.verdict, Verdict::Unsolvable);
    }

    #[test]
    fn validation_clauses() {
        let task = customer_quote_task();
        let plan = customer_quote_weak_plan(&task);
        let oracle = || Certifier::Oracle { limit: 100_000 };
        assert!(validate_plan(&task, &plan, Semantics::Weak, oracle()).valid);
        assert!(validate_plan(&task, &plan, Semantics::Weak, Certifier::RpgInfinity).valid);
        let strong = validate_plan(&task, &plan, Semantics::Strong, oracle());
        assert!(!strong.valid);
        assert!(strong.violation.unwrap().clause.contains("strong"));
        // cross out the solvable `necessary` outcome of the approval check
        let mut bad = plan.clone();
        if let ActionTree::Act { children, .. } = &mut bad {
            if let ActionTree::Act { children, .. } = &mut children[0] {
                if let ActionTree::Act { children, .. } = &mut children[0] {
                    children[0] = ActionTree::Fail;
                }
            }
        }
        let r = validate_plan(&task, &bad, Semantics::Weak, oracle());
        assert!(!r.valid);
        let v = r.violation.unwrap();
        assert_eq!(v.path, "root/Check CQ Completeness#0/Check CQ Consistency#0/Check CQ Approval Status#0");
        let r = validate_plan(&task, &bad, Semantics::Weak, Certifier::Search { max_evaluations: 10_000 });
        assert!(!r.valid);
    }

    #[test]
    fn goal_root_gives_stop() {
        let task = one_action_task();
        let goal_state = task.initial().apply(&PartialAssignment::new(vec![Fact::new(0, 1)]).unwrap());
        let ss = SearchState { state: goal_state, available: Availability::all(1) };
        let r = solve_from(&task, &ss, &SearchConfig::weak());
        assert_eq!(r.verdict, Verdict::Plan(ActionTree::Stop));
        assert_eq!(r.stats.evaluations, 1);
    }

    #[test]
    fn auto_mode_falls_back_to_weak() {
        let task = customer_quote_task();
        let r = solve(&task, &SearchConfig::default());
        assert_eq!(r.semantics, Semantics::Weak);
        assert!(r.verdict.plan().is_some());
        let strong_only = solve(&task, &SearchConfig::strong());
        assert!(r.stats.evaluations > strong_only.stats.evaluations);
    }

    #[test]
    fn evaluation_budget_is_respected() {
        let task = customer_quote_task();
        let r = solve(&task, &SearchConfig::weak().with_heuristic(HeuristicKind::Blind).with_pruning(false).with_max_evaluations(5));
        assert_eq!(r.verdict, Verdict::ResourceLimit);
        assert_eq!(r.limit, Some(Limit::Evaluations));
    }

    #[test]
    fn weight_must_be_at_least_one() {
        let c = SearchConfig { weight: 0.5, ..SearchConfig::weak() };
        assert!(c.validate().is_err());
        assert!(SearchConfig::weak().validate().is_ok());
    }

    #[test]
    fn state_at_follows_outcomes() {
        let task = customer_quote_task();
        let plan = customer_quote_weak_plan(&task);
        let s = state_at(&task, &plan, &[1]).unwrap();
        assert!(s.holds(task.fact("CQ.completeness", "notComplete").unwrap()));
    }
}
