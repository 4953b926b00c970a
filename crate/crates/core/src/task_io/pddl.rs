//! PDDL subset of the nondeterministic IPC tracks.
//!
//! Accepted: typed or untyped STRIPS actions, preconditions built from
//! `and`/`or`/`not`/`imply`/`=` (and `forall`/`exists`, expanded while
//! grounding), effects that are conjunctions of literals with at most one
//! `oneof`. Grounding is exhaustive typed substitution.
//!
//! Ground atoms become binary variables unless a family of atoms provably
//! encodes one finite-domain variable: atoms `(p k1 .. kn v)` sharing the
//! predicate and the key arguments `k1 .. kn` form a group when at most one
//! member holds initially and every outcome touching the group adds exactly
//! one member while deleting the previously true one. Such a group becomes the
//! variable `k1. .. .kn.p` with values `v` in declaration order. A group with
//! no initial member starts unset.

use super::TaskIoError;
use crate::model::{Action, Fact, Formula, PartialAssignment, PlanningTask, Variable};
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write;

const GROUNDING_LIMIT: usize = 1_000_000;

#[derive(Clone, Copy, Debug)]
struct Pos {
    line: usize,
    column: usize,
}

#[derive(Clone, Debug)]
enum Sexp {
    Sym(String, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    fn pos(&self) -> Pos {
        match self {
            Sexp::Sym(_, p) | Sexp::List(_, p) => *p,
        }
    }

    fn sym(&self) -> Option<&str> {
        match self {
            Sexp::Sym(s, _) => Some(s),
            Sexp::List(..) => None,
        }
    }

    fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(items, _) => Some(items),
            Sexp::Sym(..) => None,
        }
    }

    /// Lowercased head symbol of a list.
    fn head(&self) -> Option<String> {
        self.list()?.first()?.sym().map(str::to_ascii_lowercase)
    }
}

fn syntax(pos: Pos, message: impl Into<String>) -> TaskIoError {
    TaskIoError::Syntax { line: pos.line, column: pos.column, message: message.into() }
}

fn read_sexps(text: &str) -> Result<Vec<Sexp>, TaskIoError> {
    let mut stack: Vec<(Vec<Sexp>, Pos)> = Vec::new();
    let mut top = Vec::new();
    let (mut line, mut column) = (1, 0);
    let mut chars = text.chars().peekable();
    let mut word = String::new();
    let mut word_pos = Pos { line, column };

    fn flush(word: &mut String, pos: Pos, stack: &mut [(Vec<Sexp>, Pos)], top: &mut Vec<Sexp>) {
        if !word.is_empty() {
            let s = Sexp::Sym(std::mem::take(word), pos);
            match stack.last_mut() {
                Some((items, _)) => items.push(s),
                None => top.push(s),
            }
        }
    }

    while let Some(c) = chars.next() {
        column += 1;
        let here = Pos { line, column };
        match c {
            ';' => {
                flush(&mut word, word_pos, &mut stack, &mut top);
                for c in chars.by_ref() {
                    if c == '\n' {
                        line += 1;
                        column = 0;
                        break;
                    }
                }
            }
            '(' => {
                flush(&mut word, word_pos, &mut stack, &mut top);
                stack.push((Vec::new(), here));
            }
            ')' => {
                flush(&mut word, word_pos, &mut stack, &mut top);
                let (items, pos) = stack.pop().ok_or_else(|| syntax(here, "unbalanced `)`"))?;
                let l = Sexp::List(items, pos);
                match stack.last_mut() {
                    Some((items, _)) => items.push(l),
                    None => top.push(l),
                }
            }
            c if c.is_whitespace() => {
                flush(&mut word, word_pos, &mut stack, &mut top);
                if c == '\n' {
                    line += 1;
                    column = 0;
                }
            }
            c => {
                if word.is_empty() {
                    word_pos = here;
                }
                word.push(c);
            }
        }
    }
    flush(&mut word, word_pos, &mut stack, &mut top);
    if let Some((_, pos)) = stack.last() {
        return Err(syntax(*pos, "unclosed `(`"));
    }
    Ok(top)
}

type TypedName = (String, Vec<String>);

/// `a b - t c - (either t u) d` → names with their types; untyped names get `object`.
fn typed_list(items: &[Sexp]) -> Result<Vec<TypedName>, TaskIoError> {
    let mut out = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let it = &items[i];
        match it.sym() {
            Some("-") => {
                let ty = items.get(i + 1).ok_or_else(|| syntax(it.pos(), "missing type after `-`"))?;
                let types = match ty {
                    Sexp::Sym(t, _) => vec![t.clone()],
                    Sexp::List(parts, pos) => {
                        if ty.head().as_deref() != Some("either") {
                            return Err(syntax(*pos, "expected a type or (either ...)"));
                        }
                        parts[1..]
                            .iter()
                            .map(|p| p.sym().map(str::to_string).ok_or_else(|| syntax(p.pos(), "expected a type name")))
                            .collect::<Result<_, _>>()?
                    }
                };
                out.extend(pending.drain(..).map(|n| (n, types.clone())));
                i += 2;
            }
            Some(name) => {
                pending.push(name.to_string());
                i += 1;
            }
            None => return Err(syntax(it.pos(), "expected a name")),
        }
    }
    out.extend(pending.into_iter().map(|n| (n, vec!["object".to_string()])));
    Ok(out)
}

#[derive(Clone, Debug)]
enum Cond {
    Atom(String, Vec<String>, Pos),
    Eq(String, String),
    Not(Box<Cond>),
    And(Vec<Cond>),
    Or(Vec<Cond>),
    Imply(Box<Cond>, Box<Cond>),
    Forall(Vec<TypedName>, Box<Cond>),
    Exists(Vec<TypedName>, Box<Cond>),
}

fn terms(items: &[Sexp]) -> Result<Vec<String>, TaskIoError> {
    items
        .iter()
        .map(|t| t.sym().map(str::to_string).ok_or_else(|| syntax(t.pos(), "expected a term")))
        .collect()
}

fn parse_cond(s: &Sexp) -> Result<Cond, TaskIoError> {
    let items = s.list().ok_or_else(|| syntax(s.pos(), "expected a formula"))?;
    let Some(head) = s.head() else {
        return Err(syntax(s.pos(), "expected a formula"));
    };
    let args = &items[1..];
    let arity = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(syntax(s.pos(), format!("`{head}` takes {n} argument(s)")))
        }
    };
    Ok(match head.as_str() {
        "and" => Cond::And(args.iter().map(parse_cond).collect::<Result<_, _>>()?),
        "or" => Cond::Or(args.iter().map(parse_cond).collect::<Result<_, _>>()?),
        "not" => {
            arity(1)?;
            Cond::Not(Box::new(parse_cond(&args[0])?))
        }
        "imply" => {
            arity(2)?;
            Cond::Imply(Box::new(parse_cond(&args[0])?), Box::new(parse_cond(&args[1])?))
        }
        "=" => {
            arity(2)?;
            let t = terms(args)?;
            Cond::Eq(t[0].clone(), t[1].clone())
        }
        "forall" | "exists" => {
            arity(2)?;
            let vars = typed_list(args[0].list().ok_or_else(|| syntax(args[0].pos(), "expected a variable list"))?)?;
            let body = Box::new(parse_cond(&args[1])?);
            if head == "forall" {
                Cond::Forall(vars, body)
            } else {
                Cond::Exists(vars, body)
            }
        }
        "when" | "oneof" | "increase" | "decrease" | "assign" => {
            return Err(TaskIoError::Unsupported(format!("`{head}` inside a formula")));
        }
        _ => Cond::Atom(items[0].sym().unwrap_or_default().to_string(), terms(args)?, s.pos()),
    })
}

#[derive(Clone, Debug)]
struct Lit {
    positive: bool,
    pred: String,
    args: Vec<String>,
    pos: Pos,
}

fn parse_literal(s: &Sexp) -> Result<Lit, TaskIoError> {
    let head = s.head().ok_or_else(|| syntax(s.pos(), "expected an effect literal"))?;
    let items = s.list().unwrap_or_default();
    match head.as_str() {
        "not" => {
            let inner = items.get(1).filter(|_| items.len() == 2).ok_or_else(|| syntax(s.pos(), "`not` takes 1 argument"))?;
            let mut lit = parse_literal(inner)?;
            if !lit.positive {
                return Err(syntax(s.pos(), "double negation in an effect"));
            }
            lit.positive = false;
            Ok(lit)
        }
        "when" => Err(TaskIoError::Unsupported("conditional effects (`when`)".into())),
        "forall" => Err(TaskIoError::Unsupported("quantified effects (`forall`)".into())),
        "increase" | "decrease" | "assign" | "scale-up" | "scale-down" => {
            Err(TaskIoError::Unsupported(format!("numeric fluents (`{head}`)")))
        }
        "oneof" => Err(TaskIoError::Unsupported("nested `oneof`".into())),
        "and" | "or" | "=" => Err(syntax(s.pos(), format!("`{head}` is not an effect literal"))),
        _ => Ok(Lit { positive: true, pred: items[0].sym().unwrap_or_default().to_string(), args: terms(&items[1..])?, pos: s.pos() }),
    }
}

/// Flattens a literal conjunction.
fn parse_literals(s: &Sexp, out: &mut Vec<Lit>) -> Result<(), TaskIoError> {
    if s.head().as_deref() == Some("and") {
        for c in &s.list().unwrap_or_default()[1..] {
            parse_literals(c, out)?;
        }
        Ok(())
    } else {
        out.push(parse_literal(s)?);
        Ok(())
    }
}

/// Effect as a list of outcomes, each a list of literals.
fn parse_effect(s: &Sexp) -> Result<Vec<Vec<Lit>>, TaskIoError> {
    let branches = |oneof: &Sexp| -> Result<Vec<Vec<Lit>>, TaskIoError> {
        oneof.list().unwrap_or_default()[1..]
            .iter()
            .map(|b| {
                let mut lits = Vec::new();
                parse_literals(b, &mut lits)?;
                Ok(lits)
            })
            .collect()
    };
    match s.head().as_deref() {
        Some("oneof") => branches(s),
        Some("and") => {
            let mut common = Vec::new();
            let mut alternatives: Option<Vec<Vec<Lit>>> = None;
            for c in &s.list().unwrap_or_default()[1..] {
                if c.head().as_deref() == Some("oneof") {
                    if alternatives.is_some() {
                        return Err(TaskIoError::Unsupported("more than one `oneof` per action".into()));
                    }
                    alternatives = Some(branches(c)?);
                } else {
                    parse_literals(c, &mut common)?;
                }
            }
            Ok(match alternatives {
                None => vec![common],
                Some(alts) => alts
                    .into_iter()
                    .map(|mut b| {
                        let mut all = common.clone();
                        all.append(&mut b);
                        all
                    })
                    .collect(),
            })
        }
        _ => Ok(vec![vec![parse_literal(s)?]]),
    }
}

#[derive(Debug)]
struct PredDecl {
    name: String,
    params: Vec<Vec<String>>,
}

#[derive(Debug)]
struct ActionSchema {
    name: String,
    params: Vec<TypedName>,
    pre: Cond,
    outcomes: Vec<Vec<Lit>>,
}

#[derive(Debug, Default)]
struct Domain {
    parents: HashMap<String, Vec<String>>,
    constants: Vec<TypedName>,
    predicates: Vec<PredDecl>,
    actions: Vec<ActionSchema>,
}

#[derive(Debug, Default)]
struct Problem {
    objects: Vec<TypedName>,
    init: Vec<(String, Vec<String>, Pos)>,
    goal: Option<Cond>,
}

/// Splits `(define (kind name) sections...)`.
fn define_body<'a>(top: &'a [Sexp], kind: &str) -> Result<&'a [Sexp], TaskIoError> {
    let first = top.first().ok_or_else(|| syntax(Pos { line: 1, column: 1 }, format!("empty {kind} file")))?;
    if top.len() > 1 {
        return Err(syntax(top[1].pos(), "trailing input after `define`"));
    }
    let items = first.list().filter(|_| first.head().as_deref() == Some("define"));
    let items = items.ok_or_else(|| syntax(first.pos(), "expected (define ...)"))?;
    let header = items.get(1).ok_or_else(|| syntax(first.pos(), format!("missing ({kind} ...)")))?;
    if header.head().as_deref() != Some(kind) {
        return Err(syntax(header.pos(), format!("expected ({kind} <name>)")));
    }
    Ok(&items[2..])
}

fn parse_domain(text: &str) -> Result<Domain, TaskIoError> {
    let top = read_sexps(text)?;
    let mut d = Domain::default();
    for section in define_body(&top, "domain")? {
        let items = section.list().ok_or_else(|| syntax(section.pos(), "expected a section"))?;
        let head = section.head().unwrap_or_default();
        match head.as_str() {
            ":requirements" => {
                for r in &items[1..] {
                    let r = r.sym().unwrap_or_default().to_ascii_lowercase();
                    if matches!(r.as_str(), ":fluents" | ":numeric-fluents" | ":durative-actions" | ":preferences") {
                        return Err(TaskIoError::Unsupported(format!("requirement `{r}`")));
                    }
                }
            }
            ":types" => {
                for (t, parents) in typed_list(&items[1..])? {
                    d.parents.entry(t).or_default().extend(parents);
                }
            }
            ":constants" => d.constants.extend(typed_list(&items[1..])?),
            ":predicates" => {
                for p in &items[1..] {
                    let parts = p.list().ok_or_else(|| syntax(p.pos(), "expected a predicate declaration"))?;
                    let name = parts.first().and_then(Sexp::sym).ok_or_else(|| syntax(p.pos(), "expected a predicate name"))?;
                    let params = typed_list(&parts[1..])?.into_iter().map(|(_, t)| t).collect();
                    d.predicates.push(PredDecl { name: name.to_string(), params });
                }
            }
            ":functions" => return Err(TaskIoError::Unsupported("numeric fluents (`:functions`)".into())),
            ":action" => d.actions.push(parse_action(section)?),
            other => return Err(TaskIoError::Unsupported(format!("domain section `{other}`"))),
        }
    }
    Ok(d)
}

fn parse_action(s: &Sexp) -> Result<ActionSchema, TaskIoError> {
    let items = s.list().unwrap_or_default();
    let name = items.get(1).and_then(Sexp::sym).ok_or_else(|| syntax(s.pos(), "missing action name"))?;
    let mut a = ActionSchema { name: name.to_string(), params: Vec::new(), pre: Cond::And(Vec::new()), outcomes: vec![Vec::new()] };
    let mut i = 2;
    while i < items.len() {
        let key = items[i].sym().map(str::to_ascii_lowercase).ok_or_else(|| syntax(items[i].pos(), "expected a keyword"))?;
        let value = items.get(i + 1).ok_or_else(|| syntax(items[i].pos(), format!("missing value for `{key}`")))?;
        match key.as_str() {
            ":parameters" => {
                a.params = typed_list(value.list().ok_or_else(|| syntax(value.pos(), "expected a parameter list"))?)?;
            }
            ":precondition" => a.pre = parse_cond(value)?,
            ":effect" => a.outcomes = parse_effect(value)?,
            other => return Err(syntax(items[i].pos(), format!("unknown action field `{other}`"))),
        }
        i += 2;
    }
    Ok(a)
}

fn parse_problem(text: &str) -> Result<Problem, TaskIoError> {
    let top = read_sexps(text)?;
    let mut p = Problem::default();
    for section in define_body(&top, "problem")? {
        let items = section.list().ok_or_else(|| syntax(section.pos(), "expected a section"))?;
        match section.head().unwrap_or_default().as_str() {
            ":domain" | ":requirements" => {}
            ":objects" => p.objects.extend(typed_list(&items[1..])?),
            ":init" => {
                for f in &items[1..] {
                    match f.head().as_deref() {
                        Some("=") => return Err(TaskIoError::Unsupported("numeric fluents in `:init`".into())),
                        Some("not") => return Err(syntax(f.pos(), "negative literal in `:init`")),
                        Some(_) => {
                            let parts = f.list().unwrap_or_default();
                            p.init.push((parts[0].sym().unwrap_or_default().to_string(), terms(&parts[1..])?, f.pos()));
                        }
                        None => return Err(syntax(f.pos(), "expected an atom")),
                    }
                }
            }
            ":goal" => {
                let g = items.get(1).ok_or_else(|| syntax(section.pos(), "empty goal"))?;
                p.goal = Some(parse_cond(g)?);
            }
            ":metric" => return Err(TaskIoError::Unsupported("`:metric`".into())),
            other => return Err(TaskIoError::Unsupported(format!("problem section `{other}`"))),
        }
    }
    Ok(p)
}

/// Ground formula over interned atoms, with constants folded away.
#[derive(Clone, Debug, PartialEq)]
enum Gf {
    True,
    False,
    Atom(usize),
    Not(Box<Gf>),
    And(Vec<Gf>),
    Or(Vec<Gf>),
}

impl Gf {
    fn not(g: Gf) -> Gf {
        match g {
            Gf::True => Gf::False,
            Gf::False => Gf::True,
            Gf::Not(inner) => *inner,
            g => Gf::Not(Box::new(g)),
        }
    }

    fn and(parts: Vec<Gf>) -> Gf {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Gf::True => {}
                Gf::False => return Gf::False,
                Gf::And(inner) => out.extend(inner),
                p => out.push(p),
            }
        }
        if out.len() == 1 {
            out.pop().unwrap()
        } else if out.is_empty() {
            Gf::True
        } else {
            Gf::And(out)
        }
    }

    fn or(parts: Vec<Gf>) -> Gf {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Gf::False => {}
                Gf::True => return Gf::True,
                Gf::Or(inner) => out.extend(inner),
                p => out.push(p),
            }
        }
        if out.len() == 1 {
            out.pop().unwrap()
        } else if out.is_empty() {
            Gf::False
        } else {
            Gf::Or(out)
        }
    }

    /// Atoms with the polarity they occur under.
    fn polarities(&self, positive: bool, out: &mut Vec<(usize, bool)>) {
        match self {
            Gf::True | Gf::False => {}
            Gf::Atom(a) => out.push((*a, positive)),
            Gf::Not(c) => c.polarities(!positive, out),
            Gf::And(cs) | Gf::Or(cs) => cs.iter().for_each(|c| c.polarities(positive, out)),
        }
    }

    /// Atoms that are top-level positive conjuncts.
    fn required_atoms(&self) -> Vec<usize> {
        match self {
            Gf::Atom(a) => vec![*a],
            Gf::And(cs) => cs.iter().filter_map(|c| if let Gf::Atom(a) = c { Some(*a) } else { None }).collect(),
            _ => Vec::new(),
        }
    }
}

struct GroundAction {
    name: String,
    pre: Gf,
    /// Per outcome: added and deleted atoms.
    outcomes: Vec<(Vec<usize>, Vec<usize>)>,
}

struct Grounder<'a> {
    domain: &'a Domain,
    /// Objects in declaration order with their types.
    objects: Vec<TypedName>,
    object_index: HashMap<String, usize>,
    pred_index: HashMap<String, usize>,
    atoms: Vec<(usize, Vec<usize>)>,
    atom_index: HashMap<(usize, Vec<usize>), usize>,
}

impl<'a> Grounder<'a> {
    fn new(domain: &'a Domain, problem: &Problem) -> Result<Self, TaskIoError> {
        let mut objects: Vec<TypedName> = Vec::new();
        let mut object_index = HashMap::new();
        for (name, types) in domain.constants.iter().chain(problem.objects.iter()) {
            match object_index.get(name) {
                Some(&i) => {
                    let entry: &mut TypedName = &mut objects[i];
                    for t in types {
                        if !entry.1.contains(t) {
                            entry.1.push(t.clone());
                        }
                    }
                }
                None => {
                    object_index.insert(name.clone(), objects.len());
                    objects.push((name.clone(), types.clone()));
                }
            }
        }
        let mut pred_index = HashMap::new();
        for (i, p) in domain.predicates.iter().enumerate() {
            if pred_index.insert(p.name.clone(), i).is_some() {
                return Err(TaskIoError::schema(format!("predicates.{}", p.name), "declared twice"));
            }
        }
        Ok(Grounder { domain, objects, object_index, pred_index, atoms: Vec::new(), atom_index: HashMap::new() })
    }

    fn is_subtype(&self, t: &str, target: &str, depth: usize) -> bool {
        if t == target || target == "object" {
            return true;
        }
        depth < 64
            && self.domain.parents.get(t).is_some_and(|ps| ps.iter().any(|p| self.is_subtype(p, target, depth + 1)))
    }

    fn objects_of(&self, types: &[String]) -> Vec<usize> {
        (0..self.objects.len())
            .filter(|&o| self.objects[o].1.iter().any(|ot| types.iter().any(|t| self.is_subtype(ot, t, 0))))
            .collect()
    }

    fn resolve(&self, term: &str, binding: &HashMap<String, usize>, pos: Pos) -> Result<usize, TaskIoError> {
        if term.starts_with('?') {
            binding.get(term).copied().ok_or_else(|| syntax(pos, format!("unbound variable `{term}`")))
        } else {
            self.object_index.get(term).copied().ok_or_else(|| syntax(pos, format!("unknown object `{term}`")))
        }
    }

    fn atom(&mut self, pred: &str, args: &[String], binding: &HashMap<String, usize>, pos: Pos) -> Result<usize, TaskIoError> {
        let p = *self.pred_index.get(pred).ok_or_else(|| syntax(pos, format!("undeclared predicate `{pred}`")))?;
        if self.domain.predicates[p].params.len() != args.len() {
            return Err(syntax(pos, format!("`{pred}` takes {} argument(s)", self.domain.predicates[p].params.len())));
        }
        let args = args.iter().map(|t| self.resolve(t, binding, pos)).collect::<Result<Vec<_>, _>>()?;
        Ok(self.intern(p, args))
    }

    fn intern(&mut self, pred: usize, args: Vec<usize>) -> usize {
        let key = (pred, args);
        if let Some(&i) = self.atom_index.get(&key) {
            return i;
        }
        self.atoms.push(key.clone());
        self.atom_index.insert(key, self.atoms.len() - 1);
        self.atoms.len() - 1
    }

    fn bindings(&self, params: &[TypedName]) -> Result<Vec<Vec<usize>>, TaskIoError> {
        let mut out: Vec<Vec<usize>> = vec![Vec::new()];
        for (_, types) in params {
            let candidates = self.objects_of(types);
            if out.len().saturating_mul(candidates.len()) > GROUNDING_LIMIT {
                return Err(TaskIoError::Unsupported(format!("more than {GROUNDING_LIMIT} groundings of one schema")));
            }
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    candidates.iter().map(move |&c| {
                        let mut p = prefix.clone();
                        p.push(c);
                        p
                    })
                })
                .collect();
        }
        Ok(out)
    }

    fn ground_cond(&mut self, c: &Cond, binding: &mut HashMap<String, usize>) -> Result<Gf, TaskIoError> {
        Ok(match c {
            Cond::Atom(p, args, pos) => Gf::Atom(self.atom(p, args, binding, *pos)?),
            Cond::Eq(a, b) => {
                let pos = Pos { line: 0, column: 0 };
                if self.resolve(a, binding, pos)? == self.resolve(b, binding, pos)? {
                    Gf::True
                } else {
                    Gf::False
                }
            }
            Cond::Not(inner) => Gf::not(self.ground_cond(inner, binding)?),
            Cond::And(cs) => Gf::and(cs.iter().map(|c| self.ground_cond(c, binding)).collect::<Result<_, _>>()?),
            Cond::Or(cs) => Gf::or(cs.iter().map(|c| self.ground_cond(c, binding)).collect::<Result<_, _>>()?),
            Cond::Imply(a, b) => Gf::or(vec![Gf::not(self.ground_cond(a, binding)?), self.ground_cond(b, binding)?]),
            Cond::Forall(vars, body) | Cond::Exists(vars, body) => {
                let mut parts = Vec::new();
                for b in self.bindings(vars)? {
                    let saved: Vec<Option<usize>> = vars.iter().map(|(v, _)| binding.get(v).copied()).collect();
                    for ((v, _), o) in vars.iter().zip(&b) {
                        binding.insert(v.clone(), *o);
                    }
                    parts.push(self.ground_cond(body, binding)?);
                    for ((v, _), old) in vars.iter().zip(saved) {
                        match old {
                            Some(o) => binding.insert(v.clone(), o),
                            None => binding.remove(v),
                        };
                    }
                }
                if matches!(c, Cond::Forall(..)) {
                    Gf::and(parts)
                } else {
                    Gf::or(parts)
                }
            }
        })
    }

    fn ground_actions(&mut self) -> Result<Vec<GroundAction>, TaskIoError> {
        let mut out = Vec::new();
        for schema in &self.domain.actions {
            for b in self.bindings(&schema.params)? {
                let mut binding: HashMap<String, usize> =
                    schema.params.iter().map(|(v, _)| v.clone()).zip(b.iter().copied()).collect();
                let pre = self.ground_cond(&schema.pre, &mut binding)?;
                if pre == Gf::False {
                    continue;
                }
                let mut outcomes = Vec::with_capacity(schema.outcomes.len());
                for lits in &schema.outcomes {
                    let (mut add, mut del) = (Vec::new(), Vec::new());
                    for l in lits {
                        let a = self.atom(&l.pred, &l.args, &binding, l.pos)?;
                        if l.positive {
                            add.push(a);
                        } else {
                            del.push(a);
                        }
                    }
                    add.sort_unstable();
                    add.dedup();
                    del.sort_unstable();
                    del.dedup();
                    outcomes.push((add, del));
                }
                let name = if b.is_empty() {
                    schema.name.clone()
                } else {
                    let args: Vec<&str> = b.iter().map(|&o| self.objects[o].0.as_str()).collect();
                    format!("{}({})", schema.name, args.join(","))
                };
                out.push(GroundAction { name, pre, outcomes });
            }
        }
        Ok(out)
    }
}

/// Where a ground atom lives in the task.
#[derive(Clone, Copy, Debug)]
enum Slot {
    Binary(usize),
    Member(usize, u16),
}

/// Parses and grounds a domain/problem pair.
pub fn parse_pddl(domain_text: &str, problem_text: &str) -> Result<PlanningTask, TaskIoError> {
    let domain = parse_domain(domain_text)?;
    let problem = parse_problem(problem_text)?;
    let mut g = Grounder::new(&domain, &problem)?;

    let mut init = HashSet::new();
    for (p, args, pos) in &problem.init {
        init.insert(g.atom(p, args, &HashMap::new(), *pos)?);
    }
    let goal = match &problem.goal {
        Some(c) => g.ground_cond(c, &mut HashMap::new())?,
        None => Gf::True,
    };
    let mut goal_lits = Vec::new();
    let conjuncts = match goal {
        Gf::And(cs) => cs,
        Gf::True => Vec::new(),
        other => vec![other],
    };
    for c in conjuncts {
        match c {
            Gf::Atom(a) => goal_lits.push((a, true)),
            Gf::Not(inner) => match *inner {
                Gf::Atom(a) => goal_lits.push((a, false)),
                _ => return Err(TaskIoError::Unsupported("goal must be a conjunction of literals".into())),
            },
            _ => return Err(TaskIoError::Unsupported("goal must be a conjunction of literals".into())),
        }
    }
    let actions = g.ground_actions()?;

    // Typed value parameters contribute every instance as a potential member.
    let mentioned: Vec<usize> = (0..g.atoms.len()).collect();
    let mut groups: BTreeMap<(usize, Vec<usize>), Vec<usize>> = BTreeMap::new();
    for a in mentioned {
        let (p, args) = g.atoms[a].clone();
        if args.is_empty() {
            continue;
        }
        let key = (p, args[..args.len() - 1].to_vec());
        groups.entry(key).or_default().push(a);
    }
    let keys: Vec<(usize, Vec<usize>)> = groups.keys().cloned().collect();
    for key in keys {
        let last_types = domain.predicates[key.0].params.last().cloned().unwrap_or_default();
        if last_types.iter().all(|t| t == "object") {
            continue;
        }
        for o in g.objects_of(&last_types) {
            let mut args = key.1.clone();
            args.push(o);
            let a = g.intern(key.0, args);
            let members = groups.get_mut(&key).expect("key present");
            if !members.contains(&a) {
                members.push(a);
            }
        }
    }
    for members in groups.values_mut() {
        members.sort_by_key(|&a| *g.atoms[a].1.last().expect("non-nullary"));
    }

    let mut negative = HashSet::new();
    let mut occ = Vec::new();
    for a in &actions {
        a.pre.polarities(true, &mut occ);
    }
    for (a, positive) in occ {
        if !positive {
            negative.insert(a);
        }
    }
    for &(a, positive) in &goal_lits {
        if !positive {
            negative.insert(a);
        }
    }

    let valid_group = |members: &[usize]| -> bool {
        if members.len() < 2 {
            return false;
        }
        let set: HashSet<usize> = members.iter().copied().collect();
        let true_init = members.iter().filter(|a| init.contains(a)).count();
        if true_init > 1 {
            return false;
        }
        if goal_lits.iter().any(|&(a, pos)| !pos && set.contains(&a)) {
            return false;
        }
        if true_init == 0 && members.iter().any(|a| negative.contains(a)) {
            return false;
        }
        for act in &actions {
            let required: Vec<usize> = act.pre.required_atoms().into_iter().filter(|a| set.contains(a)).collect();
            for (add, del) in &act.outcomes {
                let added: Vec<usize> = add.iter().copied().filter(|a| set.contains(a)).collect();
                let deleted: Vec<usize> = del.iter().copied().filter(|a| set.contains(a)).collect();
                if added.is_empty() && deleted.is_empty() {
                    continue;
                }
                if added.len() != 1 {
                    return false;
                }
                let m = added[0];
                let cleared = match required.first() {
                    Some(&p) => p == m || deleted.contains(&p),
                    None => members.iter().all(|&o| o == m || deleted.contains(&o)),
                };
                if !cleared {
                    return false;
                }
            }
        }
        true
    };

    // Variables ordered by predicate, then arguments.
    enum VarSpec {
        Group((usize, Vec<usize>), Vec<usize>),
        Binary(usize),
    }
    let mut specs: Vec<((usize, Vec<usize>), VarSpec)> = Vec::new();
    let mut grouped = HashSet::new();
    for (key, members) in &groups {
        if valid_group(members) {
            grouped.extend(members.iter().copied());
            specs.push((key.clone(), VarSpec::Group(key.clone(), members.clone())));
        }
    }
    for (a, (p, args)) in g.atoms.iter().enumerate() {
        if !grouped.contains(&a) {
            specs.push(((*p, args.clone()), VarSpec::Binary(a)));
        }
    }
    specs.sort_by(|x, y| x.0.cmp(&y.0));

    let obj_name = |o: usize| g.objects[o].0.as_str();
    let mut slots = vec![Slot::Binary(0); g.atoms.len()];
    let mut variables = Vec::with_capacity(specs.len());
    let mut names = HashSet::new();
    for (vi, (_, spec)) in specs.iter().enumerate() {
        let var = match spec {
            VarSpec::Group((p, key), members) => {
                let mut name: Vec<&str> = key.iter().map(|&o| obj_name(o)).collect();
                name.push(&domain.predicates[*p].name);
                let domain_values: Vec<&str> = members.iter().map(|&a| obj_name(*g.atoms[a].1.last().unwrap())).collect();
                for (k, &a) in members.iter().enumerate() {
                    slots[a] = Slot::Member(vi, k as u16);
                }
                match members.iter().position(|a| init.contains(a)) {
                    Some(k) => Variable::new(name.join("."), &domain_values, domain_values[k])?,
                    None => {
                        let mut v = Variable::new(name.join("."), &domain_values, domain_values[0])?;
                        v.start_unset();
                        v
                    }
                }
            }
            VarSpec::Binary(a) => {
                let (p, args) = &g.atoms[*a];
                let pred = &domain.predicates[*p].name;
                let name = if args.is_empty() {
                    pred.clone()
                } else {
                    format!("{}({})", pred, args.iter().map(|&o| obj_name(o)).collect::<Vec<_>>().join(","))
                };
                slots[*a] = Slot::Binary(vi);
                Variable::new(name, &["false", "true"], if init.contains(a) { "true" } else { "false" })?
            }
        };
        if !names.insert(var.name.clone()) {
            return Err(TaskIoError::schema(var.name.clone(), "two ground atoms map to the same variable name"));
        }
        variables.push(var);
    }

    let fact_of = |a: usize| match slots[a] {
        Slot::Binary(v) => Fact::new(v, 1),
        Slot::Member(v, k) => Fact::new(v, k),
    };
    fn to_formula(gf: &Gf, fact_of: &dyn Fn(usize) -> Fact) -> Formula {
        match gf {
            Gf::True => Formula::top(),
            Gf::False => Formula::or(Vec::new()),
            Gf::Atom(a) => Formula::atom(fact_of(*a)),
            Gf::Not(c) => Formula::not(to_formula(c, fact_of)),
            Gf::And(cs) => Formula::and(cs.iter().map(|c| to_formula(c, fact_of)).collect()),
            Gf::Or(cs) => Formula::or(cs.iter().map(|c| to_formula(c, fact_of)).collect()),
        }
    }

    let mut task_actions = Vec::with_capacity(actions.len());
    for act in &actions {
        let mut outcomes: Vec<PartialAssignment> = Vec::new();
        for (add, del) in &act.outcomes {
            let mut values: BTreeMap<usize, u16> = BTreeMap::new();
            for &d in del {
                if let Slot::Binary(v) = slots[d] {
                    values.insert(v, 0);
                }
            }
            for &a in add {
                let f = fact_of(a);
                values.insert(f.var.0, f.value);
            }
            let pa = PartialAssignment::new(values.into_iter().map(|(v, x)| Fact::new(v, x)).collect())?;
            if outcomes.contains(&pa) {
                log::warn!("{}: duplicate outcome dropped", act.name);
                continue;
            }
            outcomes.push(pa);
        }
        task_actions.push(Action::new(act.name.clone(), to_formula(&act.pre, &fact_of), outcomes));
    }
    let goal_facts = goal_lits
        .iter()
        .map(|&(a, positive)| match slots[a] {
            Slot::Binary(v) => Fact::new(v, positive as u16),
            Slot::Member(v, k) => Fact::new(v, k),
        })
        .collect();
    Ok(PlanningTask::new(variables, task_actions, goal_facts)?)
}

fn pddl_name(s: &str) -> String {
    let mut out: String = s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect();
    if !out.starts_with(|c: char| c.is_ascii_alphabetic()) {
        out.insert(0, 'x');
    }
    out
}

/// Renders a task as a PDDL domain and problem. Every variable `k1. .. .kn.p`
/// becomes predicate `p` over key constants and a per-predicate value type,
/// so that parsing the result recovers the same variables.
pub fn print_pddl(task: &PlanningTask) -> Result<(String, String), TaskIoError> {
    struct Enc {
        pred: String,
        keys: Vec<String>,
        values: Vec<String>,
    }
    let mut encs = Vec::with_capacity(task.variables().len());
    let mut arity: BTreeMap<String, usize> = BTreeMap::new();
    let mut typed_constants: Vec<(String, String)> = Vec::new();
    for v in task.variables() {
        let parts: Vec<&str> = v.name.split('.').collect();
        let simple = parts.iter().all(|p| !p.is_empty() && pddl_name(p) == *p);
        let (keys, pred) = if simple {
            (parts[..parts.len() - 1].iter().map(|s| s.to_string()).collect(), parts[parts.len() - 1].to_string())
        } else {
            (Vec::new(), pddl_name(&v.name))
        };
        if *arity.entry(pred.clone()).or_insert(keys.len() + 1) != keys.len() + 1 {
            return Err(TaskIoError::Unsupported(format!("variable `{}` clashes with another predicate arity", v.name)));
        }
        let values: Vec<String> = v.domain.iter().map(|x| pddl_name(x)).collect();
        for k in &keys {
            typed_constants.push((k.clone(), "key".to_string()));
        }
        for x in v.declared_values() {
            typed_constants.push((values[x as usize].clone(), format!("{pred}-value")));
        }
        encs.push(Enc { pred, keys, values });
    }
    typed_constants.sort();
    typed_constants.dedup();

    let atom = |f: Fact| -> String {
        let e = &encs[f.var.0];
        let mut parts = vec![e.pred.clone()];
        parts.extend(e.keys.iter().cloned());
        parts.push(e.values[f.value as usize].clone());
        format!("({})", parts.join(" "))
    };
    fn formula(f: &Formula, atom: &dyn Fn(Fact) -> String) -> String {
        match f {
            Formula::Atom(a) => atom(*a),
            Formula::Not(c) => format!("(not {})", formula(c, atom)),
            Formula::And(cs) => format!("(and {})", cs.iter().map(|c| formula(c, atom)).collect::<Vec<_>>().join(" ")),
            Formula::Or(cs) => format!("(or {})", cs.iter().map(|c| formula(c, atom)).collect::<Vec<_>>().join(" ")),
        }
    }
    let outcome = |o: &PartialAssignment| -> String {
        let mut lits = Vec::new();
        for f in o.facts() {
            lits.push(atom(*f));
            for other in task.variable(f.var).declared_values().filter(|&x| x != f.value) {
                lits.push(format!("(not {})", atom(Fact { var: f.var, value: other })));
            }
        }
        format!("(and {})", lits.join(" "))
    };

    let mut d = String::new();
    let _ = writeln!(d, "(define (domain samplan)");
    let _ = writeln!(d, "  (:requirements :strips :typing :negative-preconditions :disjunctive-preconditions :non-deterministic)");
    let mut types: Vec<String> = arity.keys().map(|p| format!("{p}-value")).collect();
    types.push("key".into());
    let _ = writeln!(d, "  (:types {})", types.join(" "));
    let _ = writeln!(d, "  (:constants");
    for (c, t) in &typed_constants {
        let _ = writeln!(d, "    {c} - {t}");
    }
    let _ = writeln!(d, "  )");
    let _ = writeln!(d, "  (:predicates");
    for (p, n) in &arity {
        let mut params: Vec<String> = (0..n - 1).map(|i| format!("?k{i} - key")).collect();
        params.push(format!("?v - {p}-value"));
        let _ = writeln!(d, "    ({p} {})", params.join(" "));
    }
    let _ = writeln!(d, "  )");
    let mut action_names = HashSet::new();
    for a in task.actions() {
        let name = pddl_name(&a.name);
        if !action_names.insert(name.clone()) {
            return Err(TaskIoError::Unsupported(format!("action name `{}` collides after sanitizing", a.name)));
        }
        let _ = writeln!(d, "  (:action {name}");
        let _ = writeln!(d, "    :parameters ()");
        let _ = writeln!(d, "    :precondition {}", formula(&a.precondition, &atom));
        if a.is_deterministic() {
            let _ = writeln!(d, "    :effect {})", outcome(&a.outcomes[0]));
        } else {
            let branches: Vec<String> = a.outcomes.iter().map(&outcome).collect();
            let _ = writeln!(d, "    :effect (oneof {}))", branches.join(" "));
        }
    }
    let _ = writeln!(d, ")");

    let mut p = String::new();
    let _ = writeln!(p, "(define (problem task) (:domain samplan)");
    let _ = writeln!(p, "  (:init");
    for (i, v) in task.variables().iter().enumerate() {
        let x = task.initial().values()[i];
        if !v.is_unset(x) {
            let _ = writeln!(p, "    {}", atom(Fact::new(i, x)));
        }
    }
    let _ = writeln!(p, "  )");
    let goal: Vec<String> = task.goal().iter().map(|f| atom(*f)).collect();
    let _ = writeln!(p, "  (:goal (and {}))", goal.join(" "));
    let _ = writeln!(p, ")");
    Ok((d, p))
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE_STEP_DOMAIN: &str = "(define (domain one) (:predicates (p) (q))
        (:action go :parameters () :precondition (p) :effect (q)))";

    #[test]
    fn strips_one_action() {
        let task = parse_pddl(ONE_STEP_DOMAIN, "(define (problem one) (:domain one) (:init (p)) (:goal (q)))").unwrap();
        assert_eq!(task.actions().len(), 1);
        assert!(task.actions()[0].is_deterministic());
        let q = task.fact("q", "true").unwrap();
        assert_eq!(task.goal(), &[q]);
        let s = task.initial_search_state();
        assert!(task.is_applicable(&s, crate::model::ActionId(0)));
        let next = task.successor(&s, crate::model::ActionId(0), 0);
        assert!(task.goal_satisfied(&next.state));
    }

    #[test]
    fn oneof_gives_outcomes() {
        let d = "(define (domain d) (:predicates (x_A) (x_B))
            (:action a :parameters () :precondition (and) :effect (oneof (and (x_A)) (and (x_B)))))";
        let task = parse_pddl(d, "(define (problem p) (:domain d) (:init) (:goal (x_B)))").unwrap();
        assert_eq!(task.actions()[0].outcomes.len(), 2);
    }

    #[test]
    fn negative_effect_assigns_false() {
        let d = "(define (domain d) (:predicates (p) (q))
            (:action a :parameters () :precondition (p) :effect (and (q) (not (p)))))";
        let task = parse_pddl(d, "(define (problem x) (:domain d) (:init (p)) (:goal (and (q) (not (p)))))").unwrap();
        let o = &task.actions()[0].outcomes[0];
        assert_eq!(task.assignment_name(o), "p=false, q=true");
        assert!(task.goal().contains(&task.fact("p", "false").unwrap()));
    }

    #[test]
    fn typed_grounding_and_equality() {
        let d = "(define (domain d) (:types block) (:predicates (on ?a - block ?b - block) (clear ?a - block))
            (:action stack :parameters (?a ?b - block)
               :precondition (and (clear ?a) (clear ?b) (not (= ?a ?b)))
               :effect (and (on ?a ?b) (not (clear ?b)))))";
        let p = "(define (problem x) (:domain d) (:objects b1 b2 b3 - block) (:init (clear b1) (clear b2) (clear b3)) (:goal (on b1 b2)))";
        let task = parse_pddl(d, p).unwrap();
        assert_eq!(task.actions().len(), 6);
        assert!(task.action_by_name("stack(b1,b2)").is_some());
        assert!(task.action_by_name("stack(b1,b1)").is_none());
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_pddl("(define (domain d)\n  (:predicates (p))\n  (:action a", "").unwrap_err();
        match err {
            TaskIoError::Syntax { line, column, .. } => assert_eq!((line, column), (3, 3)),
            other => panic!("unexpected {other}"),
        }
        let err = parse_pddl("(define (domain d) (:predicates (p)))\n)", "").unwrap_err();
        assert!(matches!(err, TaskIoError::Syntax { line: 2, column: 1, .. }), "{err}");
    }

    #[test]
    fn unsupported_constructs_are_named() {
        let when = "(define (domain d) (:predicates (p) (q))
            (:action a :parameters () :precondition (and) :effect (when (p) (q))))";
        let err = parse_pddl(when, "(define (problem x) (:domain d) (:init) (:goal (q)))").unwrap_err();
        assert!(err.to_string().contains("conditional effects"), "{err}");
        let forall = "(define (domain d) (:predicates (p ?x))
            (:action a :parameters () :precondition (and) :effect (forall (?x) (p ?x))))";
        let err = parse_pddl(forall, "(define (problem x) (:domain d) (:init) (:goal (and)))").unwrap_err();
        assert!(err.to_string().contains("quantified effects"), "{err}");
        let nested = "(define (domain d) (:predicates (p) (q))
            (:action a :parameters () :precondition (and) :effect (oneof (p) (oneof (q) (p)))))";
        let err = parse_pddl(nested, "(define (problem x) (:domain d) (:init) (:goal (q)))").unwrap_err();
        assert!(err.to_string().contains("nested"), "{err}");
        let numeric = "(define (domain d) (:functions (cost)) )";
        let err = parse_pddl(numeric, "(define (problem x) (:domain d))").unwrap_err();
        assert!(err.to_string().contains("numeric"), "{err}");
    }

    #[test]
    fn status_atoms_become_one_variable() {
        let d = "(define (domain d) (:types obj status)
            (:constants open closed - status)
            (:predicates (st ?o - obj ?s - status))
            (:action close :parameters (?o - obj) :precondition (st ?o open)
               :effect (and (st ?o closed) (not (st ?o open)))))";
        let p = "(define (problem x) (:domain d) (:objects A - obj) (:init (st A open)) (:goal (st A closed)))";
        let task = parse_pddl(d, p).unwrap();
        assert_eq!(task.variables().len(), 1);
        let v = &task.variables()[0];
        assert_eq!(v.name, "A.st");
        assert_eq!(v.domain, vec!["open", "closed"]);
        assert_eq!(task.goal(), &[task.fact("A.st", "closed").unwrap()]);
    }

    #[test]
    fn unsound_group_falls_back_to_binary() {
        // `reopen` adds `open` without deleting `closed`: both can hold.
        let d = "(define (domain d) (:types obj status)
            (:constants open closed - status)
            (:predicates (st ?o - obj ?s - status))
            (:action reopen :parameters (?o - obj) :precondition (and) :effect (st ?o open)))";
        let p = "(define (problem x) (:domain d) (:objects A - obj) (:init (st A closed)) (:goal (st A open)))";
        let task = parse_pddl(d, p).unwrap();
        assert_eq!(task.variables().len(), 2);
        assert!(task.var_by_name("st(A,open)").is_some());
    }
}
