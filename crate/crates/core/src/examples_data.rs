//! Small tasks shared by tests, examples and benchmarks.

use crate::model::{Action, ActionId, ActionTree, Fact, Formula, PartialAssignment, PlanningTask, Variable};
use crate::task_io::{compile_bo, read_model_file, read_problem_file, BusinessObject};

/// The customer quote object in the native model format.
pub const CUSTOMER_QUOTE_JSON: &str = include_str!("../fixtures/cq.json");
/// Goal `{followUp=documentCreated, archiving=archived}` over the customer quote.
pub const CUSTOMER_QUOTE_PROBLEM_JSON: &str = include_str!("../fixtures/cq_problem.json");
pub const CUSTOMER_QUOTE_DOMAIN_PDDL: &str = include_str!("../fixtures/cq_domain.pddl");
pub const CUSTOMER_QUOTE_PROBLEM_PDDL: &str = include_str!("../fixtures/cq_problem.pddl");

pub fn customer_quote() -> BusinessObject {
    read_model_file(CUSTOMER_QUOTE_JSON).expect("shipped model is valid").remove(0)
}

/// The customer quote task with the follow-up and archiving goal.
pub fn customer_quote_task() -> PlanningTask {
    let problem = read_problem_file(CUSTOMER_QUOTE_PROBLEM_JSON).expect("shipped problem is valid");
    compile_bo(&[customer_quote()], &problem.goal_pairs(), &problem.overrides().expect("valid overrides"), problem.scope)
        .expect("shipped task compiles")
}

fn act(task: &PlanningTask, name: &str, children: Vec<ActionTree>) -> ActionTree {
    let action = task.action_by_name(name).unwrap_or_else(|| panic!("no action `{name}`"));
    ActionTree::Act { action, children }
}

/// The hand-built weak plan for [`customer_quote_task`]: three failing
/// outcomes, two successful branches.
pub fn customer_quote_weak_plan(task: &PlanningTask) -> ActionTree {
    let tail = || {
        act(
            task,
            "Submit CQ",
            vec![act(
                task,
                "Mark CQ as Accepted",
                vec![act(task, "Create Follow-Up for CQ", vec![act(task, "Archive CQ", vec![ActionTree::Stop])])],
            )],
        )
    };
    let decide = act(task, "Decide CQ Approval", vec![tail(), ActionTree::Fail]);
    let approval = act(task, "Check CQ Approval Status", vec![decide, tail()]);
    let consistency = act(task, "Check CQ Consistency", vec![approval, ActionTree::Fail]);
    act(task, "Check CQ Completeness", vec![consistency, ActionTree::Fail])
}

fn pa(facts: Vec<Fact>) -> PartialAssignment {
    PartialAssignment::new(facts).expect("consistent assignment")
}

/// `x ∈ {A, B}`, `I = A`, `G = B`, and one action with outcomes `{A}` and `{B}`.
/// Its only weak plan applies the action once.
pub fn one_action_task() -> PlanningTask {
    let x = Variable::new("x", &["A", "B"], "A").expect("valid variable");
    let a = Action::new("a", Formula::top(), vec![pa(vec![Fact::new(0, 0)]), pa(vec![Fact::new(0, 1)])]);
    PlanningTask::new(vec![x], vec![a], vec![Fact::new(0, 1)]).expect("valid task")
}

/// `x ∈ {A, B, C}`, `I = A`, `G = C`, with `a1: A → {B} | {C}`, `a2: B → {A}`,
/// `a3: A → {C}`. Returning to `A` after `a1` is not a duplicate of the
/// initial search state because `a1` is no longer available.
pub fn revisit_task() -> PlanningTask {
    let x = Variable::new("x", &["A", "B", "C"], "A").expect("valid variable");
    let at = |v| Formula::atom(Fact::new(0, v));
    let actions = vec![
        Action::new("a1", at(0), vec![pa(vec![Fact::new(0, 1)]), pa(vec![Fact::new(0, 2)])]),
        Action::new("a2", at(1), vec![pa(vec![Fact::new(0, 0)])]),
        Action::new("a3", at(0), vec![pa(vec![Fact::new(0, 2)])]),
    ];
    PlanningTask::new(vec![x], actions, vec![Fact::new(0, 2)]).expect("valid task")
}

/// Two binary checks with trivially true preconditions and goal `{Comp, Cons}`.
pub fn two_checks_task() -> PlanningTask {
    let comp = Variable::new("Comp", &["false", "true"], "false").expect("valid variable");
    let cons = Variable::new("Cons", &["false", "true"], "false").expect("valid variable");
    let check = |name: &str, var: usize| {
        Action::new(name, Formula::top(), vec![pa(vec![Fact::new(var, 1)]), pa(vec![Fact::new(var, 0)])])
    };
    PlanningTask::new(
        vec![comp, cons],
        vec![check("CheckComp", 0), check("CheckCons", 1)],
        vec![Fact::new(0, 1), Fact::new(1, 1)],
    )
    .expect("valid task")
}

/// `ActionId` of a named action, panicking if absent.
pub fn action_id(task: &PlanningTask, name: &str) -> ActionId {
    task.action_by_name(name).unwrap_or_else(|| panic!("no action `{name}`"))
}
