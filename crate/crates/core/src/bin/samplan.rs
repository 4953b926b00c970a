use clap::{Args, Parser, Subcommand, ValueEnum};
use samplan::examples_data::customer_quote;
use samplan::experiments::{
    aggregate, discover_corpus, generate, load_corpus_entry, run_suite, write_csv, GeneratorSpec, Instance, RunRecord,
    SuiteConfig,
};
use samplan::model::Semantics;
use samplan::process::Format;
use samplan::search::{solve, validate_plan, HeuristicKind, Mode, SearchConfig, VerdictKind};
use samplan::service::{plan_task, serve, AppState, CertifierKind, Repository, ServiceLimits};
use samplan::task_io::{
    load_task, plan_from_json, print_pddl, read_model_file, write_task, ActionScope, AtomDoc, ProblemDocument,
};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "samplan", version, about = "Strong and weak planning for business-object models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find a plan and compile it into a process graph.
    Solve(SolveArgs),
    /// Convert between task formats.
    Compile(CompileArgs),
    /// Generate problem files over one object's variables.
    Gen(GenArgs),
    /// Run a generated suite or a PDDL corpus and write CSV records.
    Bench(BenchArgs),
    /// Check a plan file against a task.
    Validate(ValidateArgs),
    /// Start the HTTP planning service.
    Serve(ServeArgs),
}

#[derive(Args, Clone)]
struct SearchArgs {
    #[arg(long, value_enum, default_value = "auto")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "ff")]
    heuristic: HeuristicArg,
    #[arg(long, default_value_t = 5.0)]
    weight: f64,
    /// Expand all applicable actions instead of helpful ones only.
    #[arg(long)]
    no_helpful: bool,
    #[arg(long)]
    max_evals: Option<u64>,
    /// Time budget in seconds.
    #[arg(long, default_value_t = 60.0)]
    timeout: f64,
}

impl SearchArgs {
    fn config(&self) -> SearchConfig {
        SearchConfig {
            mode: match self.mode {
                ModeArg::Strong => Mode::Strong,
                ModeArg::Weak => Mode::Weak,
                ModeArg::Auto => Mode::Auto,
            },
            heuristic: match self.heuristic {
                HeuristicArg::Ff => HeuristicKind::Ff,
                HeuristicArg::Blind => HeuristicKind::Blind,
            },
            weight: self.weight,
            helpful_pruning: !self.no_helpful,
            max_evaluations: self.max_evals,
            time_budget_ms: Some((self.timeout * 1000.0) as u64),
            ..Default::default()
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum ModeArg {
    Strong,
    Weak,
    Auto,
}

#[derive(Copy, Clone, ValueEnum)]
enum HeuristicArg {
    Ff,
    Blind,
}

#[derive(Copy, Clone, ValueEnum)]
enum OutArg {
    Json,
    Dot,
    Bpmn,
}

#[derive(Args)]
struct SolveArgs {
    /// Task file, model and problem files, or PDDL domain and problem.
    #[arg(required = true, num_args = 1..=2)]
    inputs: Vec<PathBuf>,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long, value_enum, default_value = "json")]
    out: OutArg,
}

#[derive(Copy, Clone, ValueEnum)]
enum TargetArg {
    Json,
    Pddl,
}

#[derive(Args)]
struct CompileArgs {
    #[arg(required = true, num_args = 1..=2)]
    inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    to: TargetArg,
    /// Directory for output files; standard output when absent.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// Model file holding the object.
    model: PathBuf,
    #[arg(long)]
    object: Option<String>,
    #[arg(long)]
    goal_size: usize,
    /// Goals per variable subset; all value tuples when absent.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    bo_relevant: bool,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Model file; the shipped Customer Quote object when absent.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Directory of PDDL domain and problem files instead of a model.
    #[arg(long, conflicts_with = "model")]
    corpus: Option<PathBuf>,
    /// Goal sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    goal_sizes: Vec<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Heuristics to compare, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "ff")]
    heuristics: Vec<HeuristicArg>,
    #[command(flatten)]
    search: SearchArgs,
    /// CSV output; standard output when absent.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Aggregate JSON output.
    #[arg(long)]
    aggregates: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(required = true, num_args = 1..=2)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    plan: PathBuf,
    #[arg(long, value_enum, default_value = "weak")]
    mode: SemanticsArg,
    #[arg(long, value_enum, default_value = "rpg")]
    certifier: CertifierArg,
}

#[derive(Copy, Clone, ValueEnum)]
enum SemanticsArg {
    Strong,
    Weak,
}

#[derive(Copy, Clone, ValueEnum)]
enum CertifierArg {
    Rpg,
    Oracle,
    Search,
}

#[derive(Args)]
struct ServeArgs {
    /// Directory of model files; the shipped Customer Quote object when absent.
    #[arg(long)]
    models: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: String,
    /// Upper bound on any request's time budget, in seconds.
    #[arg(long, default_value_t = 60.0)]
    max_time: f64,
    #[arg(long)]
    max_evals: Option<u64>,
}

const EXIT_UNSOLVED: u8 = 1;
const EXIT_LIMIT: u8 = 2;
const EXIT_INPUT: u8 = 3;

type CliResult = Result<ExitCode, (u8, String)>;

fn input_error(e: impl std::fmt::Display) -> (u8, String) {
    (EXIT_INPUT, e.to_string())
}

fn verdict_code(v: VerdictKind) -> ExitCode {
    match v {
        VerdictKind::Plan => ExitCode::SUCCESS,
        VerdictKind::Unsolvable | VerdictKind::ExhaustedUnknown => ExitCode::from(EXIT_UNSOLVED),
        VerdictKind::ResourceLimit => ExitCode::from(EXIT_LIMIT),
    }
}

fn cmd_solve(a: &SolveArgs) -> CliResult {
    let task = load_task(&a.inputs).map_err(input_error)?;
    let config = a.search.config();
    let format = match a.out {
        OutArg::Json => Format::Json,
        OutArg::Dot => Format::Dot,
        OutArg::Bpmn => Format::Bpmn,
    };
    let r = plan_task(&task, &config, Some(format)).map_err(input_error)?;
    if config.mode == Mode::Auto && r.semantics == Semantics::Weak {
        eprintln!("strong phase: no strong plan; continued with weak planning");
    }
    eprintln!(
        "verdict: {:?} ({}), {} evaluations, {:.1} ms",
        r.verdict, r.semantics, r.stats.evaluations, r.stats.wall_time_ms
    );
    match (format, &r.rendered) {
        (Format::Json, _) => println!("{}", serde_json::to_string_pretty(&r).expect("serializable")),
        (_, Some(text)) => print!("{text}"),
        (_, None) => {}
    }
    Ok(verdict_code(r.verdict))
}

fn write_out(dir: &Option<PathBuf>, name: &str, text: &str) -> Result<(), (u8, String)> {
    match dir {
        Some(d) => {
            std::fs::create_dir_all(d).map_err(input_error)?;
            std::fs::write(d.join(name), text).map_err(input_error)
        }
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn cmd_compile(a: &CompileArgs) -> CliResult {
    let task = load_task(&a.inputs).map_err(input_error)?;
    match a.to {
        TargetArg::Json => write_out(&a.out_dir, "task.json", &write_task(&task))?,
        TargetArg::Pddl => {
            let (domain, problem) = print_pddl(&task).map_err(input_error)?;
            write_out(&a.out_dir, "domain.pddl", &domain)?;
            write_out(&a.out_dir, "problem.pddl", &problem)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn read_objects(path: &Path) -> Result<Vec<samplan::task_io::BusinessObject>, (u8, String)> {
    let text = std::fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    read_model_file(&text).map_err(input_error)
}

fn cmd_gen(a: &GenArgs) -> CliResult {
    let objects = read_objects(&a.model)?;
    let object = match &a.object {
        Some(id) => objects.iter().find(|o| &o.id == id).ok_or_else(|| input_error(format!("unknown object `{id}`")))?,
        None => objects.first().ok_or_else(|| input_error("model has no objects"))?,
    };
    let spec = GeneratorSpec {
        object: object.clone(),
        goal_size: a.goal_size,
        samples: a.samples,
        seed: a.seed,
        scope: if a.bo_relevant { ActionScope::BoRelevant } else { ActionScope::Full },
    };
    let instances = generate(&spec).map_err(input_error)?;
    std::fs::create_dir_all(&a.out_dir).map_err(input_error)?;
    for i in &instances {
        let doc = ProblemDocument {
            goal: i.bundle.goal.iter().map(|(var, val)| AtomDoc { var: var.clone(), val: val.clone() }).collect(),
            init_overrides: Vec::new(),
            scope: i.bundle.scope,
        };
        let text = serde_json::to_string_pretty(&doc).expect("serializable");
        std::fs::write(a.out_dir.join(format!("{}.json", i.id)), text).map_err(input_error)?;
    }
    eprintln!("wrote {} problems to {}", instances.len(), a.out_dir.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(a: &BenchArgs) -> CliResult {
    let configs: Vec<SuiteConfig> = a
        .heuristics
        .iter()
        .map(|h| {
            let mut c = a.search.clone();
            c.heuristic = *h;
            let name = match h {
                HeuristicArg::Ff => "ff",
                HeuristicArg::Blind => "blind",
            };
            SuiteConfig::new(name, c.config())
        })
        .collect();
    let records: Vec<RunRecord> = match &a.corpus {
        Some(dir) => bench_corpus(dir, &configs)?,
        None => {
            let objects = match &a.model {
                Some(p) => read_objects(p)?,
                None => vec![customer_quote()],
            };
            let mut instances: Vec<Instance> = Vec::new();
            for o in &objects {
                for &g in &a.goal_sizes {
                    let spec = GeneratorSpec { samples: a.samples, seed: a.seed, ..GeneratorSpec::new(o.clone(), g) };
                    instances.extend(generate(&spec).map_err(input_error)?);
                }
            }
            run_suite(&instances, &configs).0
        }
    };
    let agg = aggregate(&records);
    match &a.csv {
        Some(p) => write_csv(&records, std::fs::File::create(p).map_err(input_error)?).map_err(input_error)?,
        None => write_csv(&records, std::io::stdout()).map_err(input_error)?,
    }
    let agg_text = serde_json::to_string_pretty(&agg).expect("serializable");
    match &a.aggregates {
        Some(p) => std::fs::write(p, agg_text).map_err(input_error)?,
        None => {
            for (name, c) in &agg.overall {
                eprintln!("{name}: {}/{} solved ({:.1}%)", c.solved, c.instances, 100.0 * c.rate());
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn bench_corpus(dir: &Path, configs: &[SuiteConfig]) -> Result<Vec<RunRecord>, (u8, String)> {
    use rayon::prelude::*;
    let entries = discover_corpus(dir).map_err(input_error)?;
    eprintln!("{} problems found", entries.len());
    let records = entries
        .par_iter()
        .flat_map_iter(|e| {
            let id = e.problem.display().to_string();
            let parsed = load_corpus_entry(e);
            configs
                .iter()
                .map(|c| {
                    let mut r = RunRecord {
                        instance: id.clone(),
                        object: e.domain.display().to_string(),
                        goal_size: 0,
                        config: c.name.clone(),
                        verdict: VerdictKind::ResourceLimit,
                        semantics: String::new(),
                        evaluations: 0,
                        wall_ms: 0.0,
                        plan_size: None,
                        failed_leaves: None,
                        nondet_fraction: None,
                        error: None,
                    };
                    match &parsed {
                        Err(err) => r.error = Some(err.to_string()),
                        Ok(task) => {
                            r.goal_size = task.goal().len();
                            let s = solve(task, &c.search);
                            r.verdict = s.verdict.kind();
                            r.semantics = s.semantics.to_string();
                            r.evaluations = s.stats.evaluations;
                            r.wall_ms = s.stats.wall_time_ms;
                            if let Some(p) = s.verdict.plan() {
                                r.plan_size = Some(p.size());
                                r.failed_leaves = Some(p.fail_leaves());
                                r.nondet_fraction = Some(p.nondet_fraction(task));
                            }
                        }
                    }
                    r
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(records)
}

fn cmd_validate(a: &ValidateArgs) -> CliResult {
    let task = load_task(&a.inputs).map_err(input_error)?;
    let text = std::fs::read_to_string(&a.plan).map_err(input_error)?;
    let tree = plan_from_json(&task, &text).map_err(input_error)?;
    let semantics = match a.mode {
        SemanticsArg::Strong => Semantics::Strong,
        SemanticsArg::Weak => Semantics::Weak,
    };
    let certifier = match a.certifier {
        CertifierArg::Rpg => CertifierKind::Rpg,
        CertifierArg::Oracle => CertifierKind::Oracle,
        CertifierArg::Search => CertifierKind::Search,
    };
    let report = validate_plan(&task, &tree, semantics, certifier.certifier());
    println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
    Ok(if report.valid { ExitCode::SUCCESS } else { ExitCode::from(EXIT_UNSOLVED) })
}

fn cmd_serve(a: &ServeArgs) -> CliResult {
    let repo = match &a.models {
        Some(dir) => Repository::from_dir(dir).map_err(input_error)?,
        None => Repository::new(vec![customer_quote()]).map_err(input_error)?,
    };
    let limits = ServiceLimits { max_time_ms: (a.max_time * 1000.0) as u64, max_evaluations: a.max_evals };
    let rt = tokio::runtime::Runtime::new().map_err(input_error)?;
    rt.block_on(serve(&a.addr, AppState { repo, limits })).map_err(input_error)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Compile(a) => cmd_compile(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Serve(a) => cmd_serve(a),
    };
    match result {
        Ok(code) => code,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
