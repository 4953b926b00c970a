//! Instance generation and benchmark suites.

use crate::model::{Action, Fact, Formula, PartialAssignment, PlanningTask, Variable};
use crate::search::{solve, HeuristicKind, Mode, SearchConfig, VerdictKind};
use crate::task_io::{parse_pddl, ActionScope, BusinessObject, ProblemBundle, TaskIoError};
use rand::seq::{index, IndexedRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid generator spec: {0}")]
    Spec(String),
    #[error("cannot combine objects: {0}")]
    Combine(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{path}: {source}")]
    Corpus { path: String, source: TaskIoError },
}

#[derive(Clone, Debug)]
pub struct GeneratorSpec {
    pub object: BusinessObject,
    pub goal_size: usize,
    /// Goals sampled per variable subset; `None` takes every value tuple.
    pub samples: Option<usize>,
    pub seed: u64,
    pub scope: ActionScope,
}

impl GeneratorSpec {
    pub fn new(object: BusinessObject, goal_size: usize) -> Self {
        GeneratorSpec { object, goal_size, samples: None, seed: 0, scope: ActionScope::Full }
    }

    pub fn with_samples(mut self, s: usize) -> Self {
        self.samples = Some(s);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let n = self.object.variables.len();
        if self.goal_size == 0 || self.goal_size > n {
            return Err(ExperimentError::Spec(format!("goal size {} outside 1..={n}", self.goal_size)));
        }
        if self.samples == Some(0) {
            return Err(ExperimentError::Spec("samples per tuple must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub id: String,
    pub object: String,
    pub goal_size: usize,
    pub bundle: ProblemBundle,
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] < n - k + i) else { return out };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Goals over every `goal_size`-subset of the object's variables. For each
/// subset, `samples` value tuples are drawn uniformly without replacement
/// (all tuples when there are fewer), listed in lexicographic order.
pub fn generate(spec: &GeneratorSpec) -> Result<Vec<Instance>, ExperimentError> {
    spec.validate()?;
    let o = &spec.object;
    let domains: Vec<Vec<usize>> = o.variables.iter().map(|v| v.declared_values().map(usize::from).collect()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let objects: std::sync::Arc<[BusinessObject]> = vec![o.clone()].into();
    let mut out = Vec::new();
    for subset in subsets(domains.len(), spec.goal_size) {
        let total: usize = subset.iter().map(|&v| domains[v].len()).product();
        let mut picks: Vec<usize> = match spec.samples {
            Some(s) if s < total => index::sample(&mut rng, total, s).into_vec(),
            _ => (0..total).collect(),
        };
        picks.sort_unstable();
        for mut code in picks {
            let mut goal = Vec::with_capacity(subset.len());
            for &v in subset.iter().rev() {
                let d = &domains[v];
                let var = &o.variables[v];
                goal.push((o.qualified(&var.name), var.domain[d[code % d.len()]].clone()));
                code /= d.len();
            }
            goal.reverse();
            out.push(Instance {
                id: format!("{}-g{}-{:05}", o.id, spec.goal_size, out.len()),
                object: o.id.clone(),
                goal_size: spec.goal_size,
                bundle: ProblemBundle::new(objects.clone(), goal).with_scope(spec.scope),
            });
        }
    }
    Ok(out)
}

/// Size limits for random tasks.
#[derive(Clone, Copy, Debug)]
pub struct RandomTaskParams {
    pub max_vars: usize,
    pub max_domain: usize,
    pub max_actions: usize,
    pub max_outcomes: usize,
}

impl Default for RandomTaskParams {
    fn default() -> Self {
        RandomTaskParams { max_vars: 6, max_domain: 3, max_actions: 7, max_outcomes: 3 }
    }
}

fn random_fact(rng: &mut impl Rng, domains: &[usize], var: usize) -> Fact {
    Fact::new(var, rng.random_range(0..domains[var]) as u16)
}

fn random_assignment(rng: &mut impl Rng, domains: &[usize], max_len: usize) -> PartialAssignment {
    let n = domains.len();
    let len = rng.random_range(1..=max_len.min(n));
    let vars = index::sample(rng, n, len).into_vec();
    PartialAssignment::new(vars.into_iter().map(|v| random_fact(rng, domains, v)).collect()).expect("distinct variables")
}

fn random_formula(rng: &mut impl Rng, domains: &[usize], depth: u32) -> Formula {
    let n = domains.len();
    match rng.random_range(0..10) {
        0..=4 => {
            let var = rng.random_range(0..n);
            Formula::atom(random_fact(rng, domains, var))
        }
        5 if depth > 0 => Formula::not(random_formula(rng, domains, depth - 1)),
        6 | 7 if depth > 0 => Formula::And((0..2).map(|_| random_formula(rng, domains, depth - 1)).collect()),
        8 if depth > 0 => Formula::Or((0..2).map(|_| random_formula(rng, domains, depth - 1)).collect()),
        _ => Formula::top(),
    }
}

/// A small random task for property tests.
pub fn random_task(seed: u64, p: RandomTaskParams) -> PlanningTask {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=p.max_vars);
    let domains: Vec<usize> = (0..n).map(|_| rng.random_range(2..=p.max_domain.max(2))).collect();
    let names = ["a", "b", "c", "d", "e", "f", "g", "h"];
    let variables: Vec<Variable> = domains
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let values: Vec<String> = (0..d).map(|v| format!("v{v}")).collect();
            let refs: Vec<&str> = values.iter().map(String::as_str).collect();
            let name = format!("x{i}");
            let init = rng.random_range(0..d);
            Variable::new(name, &refs, refs[init]).expect("valid variable")
        })
        .collect();
    let m = rng.random_range(1..=p.max_actions);
    let actions = (0..m)
        .map(|i| {
            let k = if rng.random_bool(0.5) { 1 } else { rng.random_range(2..=p.max_outcomes.max(2)) };
            let mut outcomes: Vec<PartialAssignment> = Vec::new();
            for _ in 0..k {
                let o = random_assignment(&mut rng, &domains, 2);
                if !outcomes.contains(&o) {
                    outcomes.push(o);
                }
            }
            let pre = random_formula(&mut rng, &domains, 2);
            Action::new(format!("{}{i}", names.choose(&mut rng).expect("non-empty")), pre, outcomes)
        })
        .collect();
    let goal = random_assignment(&mut rng, &domains, 2).facts().to_vec();
    PlanningTask::new(variables, actions, goal).expect("random task is well formed")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub object: String,
    pub goal_size: usize,
    pub config: String,
    pub verdict: VerdictKind,
    /// `strong` or `weak`, the semantics of the phase that decided.
    pub semantics: String,
    pub evaluations: u64,
    pub wall_ms: f64,
    pub plan_size: Option<usize>,
    pub failed_leaves: Option<usize>,
    pub nondet_fraction: Option<f64>,
    pub error: Option<String>,
}

impl RunRecord {
    pub fn solved(&self) -> bool {
        self.verdict == VerdictKind::Plan
    }
}

/// A named search configuration in a suite.
#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub name: String,
    pub search: SearchConfig,
}

impl SuiteConfig {
    pub fn new(name: &str, search: SearchConfig) -> Self {
        SuiteConfig { name: name.to_string(), search }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub instances: usize,
    pub solved: usize,
    pub strong_plans: usize,
    pub weak_plans: usize,
    pub unsolvable: usize,
    pub exhausted: usize,
    pub resource_limit: usize,
    pub errors: usize,
    /// Mean share of nondeterministic actions over solved instances.
    pub mean_nondet_fraction: Option<f64>,
    pub mean_evaluations_solved: Option<f64>,
}

impl Coverage {
    pub fn rate(&self) -> f64 {
        if self.instances == 0 {
            0.0
        } else {
            self.solved as f64 / self.instances as f64
        }
    }

    fn from_records<'a>(records: impl Iterator<Item = &'a RunRecord>) -> Coverage {
        let mut c = Coverage::default();
        let (mut frac, mut evals) = (0.0, 0.0);
        for r in records {
            c.instances += 1;
            if r.error.is_some() {
                c.errors += 1;
                continue;
            }
            match r.verdict {
                VerdictKind::Plan => {
                    c.solved += 1;
                    if r.semantics == "strong" {
                        c.strong_plans += 1;
                    } else {
                        c.weak_plans += 1;
                    }
                    frac += r.nondet_fraction.unwrap_or(0.0);
                    evals += r.evaluations as f64;
                }
                VerdictKind::Unsolvable => c.unsolvable += 1,
                VerdictKind::ExhaustedUnknown => c.exhausted += 1,
                VerdictKind::ResourceLimit => c.resource_limit += 1,
            }
        }
        if c.solved > 0 {
            c.mean_nondet_fraction = Some(frac / c.solved as f64);
            c.mean_evaluations_solved = Some(evals / c.solved as f64);
        }
        c
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    /// config → goal size → coverage
    pub by_goal_size: BTreeMap<String, BTreeMap<usize, Coverage>>,
    /// config → object → coverage
    pub by_object: BTreeMap<String, BTreeMap<String, Coverage>>,
    pub overall: BTreeMap<String, Coverage>,
}

pub fn aggregate(records: &[RunRecord]) -> Aggregates {
    let mut agg = Aggregates::default();
    let configs: Vec<&str> = {
        let mut seen = Vec::new();
        for r in records {
            if !seen.contains(&r.config.as_str()) {
                seen.push(r.config.as_str());
            }
        }
        seen
    };
    for c in configs {
        let mine: Vec<&RunRecord> = records.iter().filter(|r| r.config == c).collect();
        let sizes: HashSet<usize> = mine.iter().map(|r| r.goal_size).collect();
        let objects: HashSet<&str> = mine.iter().map(|r| r.object.as_str()).collect();
        agg.by_goal_size.insert(
            c.to_string(),
            sizes.into_iter().map(|g| (g, Coverage::from_records(mine.iter().copied().filter(|r| r.goal_size == g)))).collect(),
        );
        agg.by_object.insert(
            c.to_string(),
            objects
                .into_iter()
                .map(|o| (o.to_string(), Coverage::from_records(mine.iter().copied().filter(|r| r.object == o))))
                .collect(),
        );
        agg.overall.insert(c.to_string(), Coverage::from_records(mine.iter().copied()));
    }
    agg
}

/// Solves one instance; compile errors become records, not failures.
pub fn run_instance(instance: &Instance, config: &SuiteConfig) -> RunRecord {
    let mut record = RunRecord {
        instance: instance.id.clone(),
        object: instance.object.clone(),
        goal_size: instance.goal_size,
        config: config.name.clone(),
        verdict: VerdictKind::ResourceLimit,
        semantics: String::new(),
        evaluations: 0,
        wall_ms: 0.0,
        plan_size: None,
        failed_leaves: None,
        nondet_fraction: None,
        error: None,
    };
    let task = match instance.bundle.compile() {
        Ok(t) => t,
        Err(e) => {
            record.error = Some(e.to_string());
            return record;
        }
    };
    let r = solve(&task, &config.search);
    record.verdict = r.verdict.kind();
    record.semantics = r.semantics.to_string();
    record.evaluations = r.stats.evaluations;
    record.wall_ms = r.stats.wall_time_ms;
    if let Some(plan) = r.verdict.plan() {
        record.plan_size = Some(plan.size());
        record.failed_leaves = Some(plan.fail_leaves());
        record.nondet_fraction = Some(plan.nondet_fraction(&task));
    }
    record
}

/// Runs every configuration on every instance in parallel. Records come back
/// in instance-major order regardless of scheduling.
pub fn run_suite(instances: &[Instance], configs: &[SuiteConfig]) -> (Vec<RunRecord>, Aggregates) {
    let jobs: Vec<(usize, usize)> = (0..instances.len()).flat_map(|i| (0..configs.len()).map(move |c| (i, c))).collect();
    let records: Vec<RunRecord> = jobs.par_iter().map(|&(i, c)| run_instance(&instances[i], &configs[c])).collect();
    let agg = aggregate(&records);
    (records, agg)
}

pub fn write_csv<W: std::io::Write>(records: &[RunRecord], out: W) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<RunRecord>, ExperimentError> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

/// Moves goal atoms of object `from` over to object `to`.
pub fn rename_goal(goal: &[(String, String)], from: &str, to: &str) -> Vec<(String, String)> {
    let prefix = format!("{from}.");
    goal.iter()
        .map(|(var, val)| match var.strip_prefix(&prefix) {
            Some(local) => (format!("{to}.{local}"), val.clone()),
            None => (var.clone(), val.clone()),
        })
        .collect()
}

/// Task over the first `k` objects whose goal conjoins their goals.
pub fn combine_goals(
    objects: &[BusinessObject],
    goals: &[Vec<(String, String)>],
    k: usize,
) -> Result<ProblemBundle, ExperimentError> {
    if k == 0 || k > objects.len() || k > goals.len() {
        return Err(ExperimentError::Combine(format!("k = {k} with {} objects and {} goals", objects.len(), goals.len())));
    }
    let mut ids = HashSet::new();
    for o in &objects[..k] {
        if o.id.is_empty() || !ids.insert(o.id.as_str()) {
            return Err(ExperimentError::Combine(format!("object id `{}` is empty or used twice", o.id)));
        }
    }
    let goal = goals[..k].concat();
    Ok(ProblemBundle::new(objects[..k].to_vec(), goal))
}

/// `k` renamed copies `{base.id}1..{base.id}k` of one object with its goal moved along.
pub fn copies(base: &BusinessObject, goal: &[(String, String)], k: usize) -> (Vec<BusinessObject>, Vec<Vec<(String, String)>>) {
    (1..=k)
        .map(|i| {
            let id = format!("{}{i}", base.id);
            (base.renamed(&id), rename_goal(goal, &base.id, &id))
        })
        .unzip()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub k: usize,
    pub verdict: VerdictKind,
    /// Evaluations solving the combined task.
    pub com: u64,
    /// Sum of evaluations solving each object's goal on its own.
    pub acc: u64,
    pub wall_ms: f64,
}

/// COM_k and ACC_k for `k = 1..=max_k`.
pub fn scaling(
    objects: &[BusinessObject],
    goals: &[Vec<(String, String)>],
    max_k: usize,
    config: &SearchConfig,
) -> Result<Vec<ScalingPoint>, ExperimentError> {
    let single: Vec<u64> = objects[..max_k]
        .par_iter()
        .zip(&goals[..max_k])
        .map(|(o, g)| {
            let task = ProblemBundle::new(vec![o.clone()], g.clone()).compile().map_err(|e| ExperimentError::Combine(e.to_string()))?;
            Ok(solve(&task, config).stats.evaluations)
        })
        .collect::<Result<_, ExperimentError>>()?;
    let mut out = Vec::new();
    for k in 1..=max_k {
        let task = combine_goals(objects, goals, k)?.compile().map_err(|e| ExperimentError::Combine(e.to_string()))?;
        let r = solve(&task, config);
        out.push(ScalingPoint {
            k,
            verdict: r.verdict.kind(),
            com: r.stats.evaluations,
            acc: single[..k].iter().sum(),
            wall_ms: r.stats.wall_time_ms,
        });
    }
    Ok(out)
}

/// The solved instance with the most evaluations.
pub fn hardest_solved(records: &[RunRecord]) -> Option<&RunRecord> {
    records.iter().filter(|r| r.solved()).max_by_key(|r| r.evaluations)
}

pub fn default_configs() -> Vec<SuiteConfig> {
    vec![
        SuiteConfig::new("ff", SearchConfig { mode: Mode::Auto, ..Default::default() }),
        SuiteConfig::new("blind", SearchConfig { mode: Mode::Auto, heuristic: HeuristicKind::Blind, ..Default::default() }),
    ]
}

/// A domain file and one of its problems.
#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub domain: PathBuf,
    pub problem: PathBuf,
}

fn define_kind(text: &str) -> Option<(&'static str, String)> {
    let lower = text.to_ascii_lowercase();
    let find_name = |key: &str| {
        let at = lower.find(key)? + key.len();
        let rest = lower[at..].trim_start();
        let end = rest.find(|c: char| c == ')' || c.is_whitespace())?;
        Some(rest[..end].to_string())
    };
    if let Some(domain_ref) = find_name("(:domain") {
        return Some(("problem", domain_ref));
    }
    find_name("(domain").map(|n| ("domain", n))
}

fn collect_pddl(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect_pddl(&p, out)?;
        } else if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("pddl")) {
            out.push(p);
        }
    }
    Ok(())
}

/// Pairs every problem file under `dir` with the domain of the same name in its directory.
pub fn discover_corpus(dir: &Path) -> Result<Vec<CorpusEntry>, ExperimentError> {
    let mut files = Vec::new();
    collect_pddl(dir, &mut files)?;
    let mut domains: Vec<(PathBuf, String)> = Vec::new();
    let mut problems: Vec<(PathBuf, String)> = Vec::new();
    for f in files {
        match define_kind(&std::fs::read_to_string(&f)?) {
            Some(("domain", n)) => domains.push((f, n)),
            Some((_, n)) => problems.push((f, n)),
            None => log::warn!("{}: neither a domain nor a problem", f.display()),
        }
    }
    Ok(problems
        .into_iter()
        .filter_map(|(p, n)| {
            let dir = p.parent();
            let d = domains.iter().find(|(d, dn)| *dn == n && d.parent() == dir).or_else(|| domains.iter().find(|(_, dn)| *dn == n));
            match d {
                Some((d, _)) => Some(CorpusEntry { domain: d.clone(), problem: p }),
                None => {
                    log::warn!("{}: no domain `{n}` found", p.display());
                    None
                }
            }
        })
        .collect())
}

pub fn load_corpus_entry(e: &CorpusEntry) -> Result<PlanningTask, ExperimentError> {
    let domain = std::fs::read_to_string(&e.domain)?;
    let problem = std::fs::read_to_string(&e.problem)?;
    parse_pddl(&domain, &problem).map_err(|source| ExperimentError::Corpus { path: e.problem.display().to_string(), source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples_data::customer_quote;

    #[test]
    fn subsets_are_lexicographic() {
        assert_eq!(subsets(4, 2), vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(subsets(3, 3), vec![vec![0, 1, 2]]);
        assert!(subsets(2, 3).is_empty());
    }

    #[test]
    fn single_variable_goals_cover_all_values() {
        let all = generate(&GeneratorSpec::new(customer_quote(), 1)).unwrap();
        assert_eq!(all.len(), 2 + 2 + 2 + 5 + 2 + 2 + 2);
        let capped = generate(&GeneratorSpec::new(customer_quote(), 1).with_samples(100)).unwrap();
        assert_eq!(capped.len(), 17);
    }

    #[test]
    fn full_goal_includes_the_end_state() {
        let all = generate(&GeneratorSpec::new(customer_quote(), 7)).unwrap();
        assert_eq!(all.len(), 2 * 2 * 2 * 5 * 2 * 2 * 2);
        let end: Vec<(String, String)> = [
            ("archiving", "archived"),
            ("completeness", "complete"),
            ("consistency", "consistent"),
            ("approval", "granted"),
            ("submission", "submitted"),
            ("acceptance", "accepted"),
            ("followUp", "documentCreated"),
        ]
        .iter()
        .map(|(v, x)| (format!("CQ.{v}"), x.to_string()))
        .collect();
        assert!(all.iter().any(|i| i.bundle.goal == end));
    }

    #[test]
    fn sampling_is_seeded() {
        let spec = GeneratorSpec::new(customer_quote(), 3).with_samples(5).with_seed(7);
        let goals = |s: &GeneratorSpec| generate(s).unwrap().into_iter().map(|i| i.bundle.goal).collect::<Vec<_>>();
        let a = goals(&spec);
        assert_eq!(a, goals(&spec));
        assert_eq!(a.len(), 35 * 5);
        assert_ne!(a, goals(&spec.clone().with_seed(8)));
        let distinct: HashSet<_> = a.iter().collect();
        assert_eq!(distinct.len(), a.len());
    }

    #[test]
    fn bad_specs_are_rejected() {
        assert!(generate(&GeneratorSpec::new(customer_quote(), 0)).is_err());
        assert!(generate(&GeneratorSpec::new(customer_quote(), 8)).is_err());
        assert!(generate(&GeneratorSpec::new(customer_quote(), 1).with_samples(0)).is_err());
    }

    #[test]
    fn random_tasks_are_deterministic() {
        let p = RandomTaskParams::default();
        for seed in 0..50 {
            let t = random_task(seed, p);
            assert!(t.variables().len() <= 6 && t.actions().len() <= 7);
            assert!(t.variables().iter().all(|v| v.domain.len() <= 3));
            let u = random_task(seed, p);
            assert_eq!(format!("{t:?}"), format!("{u:?}"));
        }
    }

    #[test]
    fn suite_records_and_csv() {
        let instances = generate(&GeneratorSpec::new(customer_quote(), 1)).unwrap();
        let configs = [SuiteConfig::new("weak", SearchConfig::weak())];
        let (records, agg) = run_suite(&instances, &configs);
        assert_eq!(records.len(), 17);
        assert_eq!(records.iter().map(|r| r.instance.as_str()).collect::<Vec<_>>(), instances.iter().map(|i| i.id.as_str()).collect::<Vec<_>>());
        let c = &agg.overall["weak"];
        assert_eq!(c.instances, 17);
        let mut buf = Vec::new();
        write_csv(&records, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("instance,object,goal_size,config,verdict,"));
        assert_eq!(read_csv(&buf[..]).unwrap(), records);
        assert_eq!(aggregate(&[]), Aggregates::default());
    }

    #[test]
    fn combining_one_object_is_the_single_instance() {
        let cq = customer_quote();
        let goal = vec![("CQ.archiving".to_string(), "archived".to_string())];
        let b = combine_goals(std::slice::from_ref(&cq), std::slice::from_ref(&goal), 1).unwrap();
        assert_eq!(b.goal, goal);
        let (objs, goals) = copies(&cq, &goal, 3);
        assert_eq!(goals[2], vec![("CQ3.archiving".to_string(), "archived".to_string())]);
        let b = combine_goals(&objs, &goals, 3).unwrap();
        assert_eq!(b.compile().unwrap().variables().len(), 21);
        let dup = vec![cq.clone(), cq];
        assert!(combine_goals(&dup, &[goal.clone(), goal], 2).is_err());
    }
}
