//! The `ggalg` command line, callable in-process through [`run`].

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ggalg_core::corpus::{cyclic_pairs, max_created, random_rules, CorpusShape};
use ggalg_core::io::{emit_reactionsum, parse_reactions, Format, ReactionDocument};
use ggalg_core::reaction::{sweep, verify_pair};
use ggalg_core::{
    check_sum_equivalence, commutator, emit_rulesum, enumerate_host_states, mt_pins, parse_grammar,
    parse_rulesum_json, product, reaction_commutator, reaction_product, GrammarDocument, HostState, Label,
    OperatorKind, OracleError, Rule, RuleSum, Semantics,
};

#[derive(Parser)]
#[command(name = "ggalg", version, about = "Products and commutators of stochastic graph grammar rules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Collected product `r2 · r1` (r1 acts first).
    Product(PairArgs),
    /// Collected commutator `[r2, r1]`.
    Commutator(PairArgs),
    /// Check products against sequential application on enumerated states.
    Verify(VerifyArgs),
    /// Reaction-level products, commutators and matrix checks.
    Reactions {
        #[command(subcommand)]
        command: ReactionCommand,
    },
    /// Re-derive the pinned microtubule examples.
    PaperExamples,
}

#[derive(Clone, Copy, ValueEnum)]
enum SemanticsArg {
    Keep,
    Clean,
}

impl From<SemanticsArg> for Semantics {
    fn from(s: SemanticsArg) -> Self {
        match s {
            SemanticsArg::Keep => Semantics::KeepHanging,
            SemanticsArg::Clean => Semantics::CleanHanging,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Hat,
    Full,
}

impl From<KindArg> for OperatorKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Hat => OperatorKind::Hat,
            KindArg::Full => OperatorKind::Full,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
    Dot,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Text => Format::Text,
            FormatArg::Json => Format::Json,
            FormatArg::Dot => Format::Dot,
        }
    }
}

#[derive(Args)]
struct AlgebraOpts {
    #[arg(long, value_enum, default_value = "keep")]
    semantics: SemanticsArg,
    #[arg(long, value_enum, default_value = "hat")]
    kind: KindArg,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
}

#[derive(Args)]
struct PairArgs {
    grammar: PathBuf,
    r2: String,
    r1: String,
    #[command(flatten)]
    opts: AlgebraOpts,
}

#[derive(Args)]
struct VerifyArgs {
    /// Grammar to verify; optional when `--random-rules` is given.
    grammar: Option<PathBuf>,
    /// Only this mode (both modes by default).
    #[arg(long, value_enum)]
    semantics: Option<SemanticsArg>,
    #[arg(long, value_enum, default_value = "hat")]
    kind: KindArg,
    #[arg(long, default_value_t = 12)]
    universe: usize,
    #[arg(long, default_value_t = 5)]
    max_host_nodes: usize,
    #[arg(long, default_value_t = 4)]
    max_edges: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Verify this many seeded random rules, paired cyclically.
    #[arg(long)]
    random_rules: Option<usize>,
    /// Check this rule-sum file instead of the computed product.
    #[arg(long, requires = "pair")]
    sum: Option<PathBuf>,
    /// Rule names `R2 R1` that `--sum` claims to equal.
    #[arg(long, num_args = 2, value_names = ["R2", "R1"])]
    pair: Option<Vec<String>>,
}

#[derive(Subcommand)]
enum ReactionCommand {
    Product(ReactionPair),
    Commutator(ReactionPair),
    /// Matrix checks for every ordered pair in a file, or an exhaustive sweep.
    Verify {
        file: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        max_degree: u32,
        #[arg(long, default_value_t = 12)]
        nmax: u32,
    },
}

#[derive(Args)]
struct ReactionPair {
    file: PathBuf,
    r2: String,
    r1: String,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
}

/// A failed command: exit code plus message for stderr.
struct Failure(u8, String);

const VERIFY_FAILED: u8 = 1;
const PARSE: u8 = 2;
const UNKNOWN: u8 = 3;
const CAPACITY: u8 = 4;

type Outcome = Result<(String, u8), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure(PARSE, format!("{}: {e}", path.display())))
}

fn load_grammar(path: &Path) -> Result<GrammarDocument, Failure> {
    parse_grammar(&read(path)?).map_err(|e| Failure(PARSE, format!("{}: {e}", path.display())))
}

fn load_reactions(path: &Path) -> Result<ReactionDocument, Failure> {
    parse_reactions(&read(path)?).map_err(|e| Failure(PARSE, format!("{}: {e}", path.display())))
}

fn rule<'a>(g: &'a GrammarDocument, name: &str) -> Result<&'a Rule, Failure> {
    g.rule(name).ok_or_else(|| Failure(UNKNOWN, format!("unknown rule `{name}`")))
}

fn algebra(args: &PairArgs, commute: bool) -> Outcome {
    let g = load_grammar(&args.grammar)?;
    let (r2, r1) = (rule(&g, &args.r2)?, rule(&g, &args.r1)?);
    let (mode, kind) = (args.opts.semantics.into(), args.opts.kind.into());
    let sum = if commute { commutator(r2, r1, mode, kind) } else { product(r2, r1, mode, kind) };
    let sum = sum.map_err(|e| Failure(PARSE, e.to_string()))?;
    Ok((emit_rulesum(&sum, args.opts.format.into()), 0))
}

fn capacity_hint(e: &dyn std::fmt::Display, needed: usize) -> Failure {
    Failure(
        CAPACITY,
        format!("{e}\nhint: use --universe {needed} or more (max host nodes + 2 x created nodes per rule + max edges)"),
    )
}

fn oracle_failure(e: OracleError, needed: usize) -> Failure {
    match e {
        OracleError::Capacity { .. } | OracleError::UniverseTooLarge { .. } => capacity_hint(&e, needed),
        other => Failure(PARSE, other.to_string()),
    }
}

struct Job {
    label: String,
    r2: Rule,
    r1: Rule,
    sum: Option<RuleSum>,
}

fn verify(args: &VerifyArgs) -> Outcome {
    let mut jobs = Vec::new();
    let mut labels: Vec<Label> = Vec::new();
    let mut rules: Vec<Rule> = Vec::new();
    if let Some(path) = &args.grammar {
        let g = load_grammar(path)?;
        labels.extend(g.labels.iter().cloned());
        if let Some(pair) = &args.pair {
            let (r2, r1) = (rule(&g, &pair[0])?.clone(), rule(&g, &pair[1])?.clone());
            let sum = match &args.sum {
                Some(p) => Some(parse_rulesum_json(&read(p)?).map_err(|e| Failure(PARSE, format!("{}: {e}", p.display())))?),
                None => None,
            };
            jobs.push(Job { label: format!("{} after {}", r2.name(), r1.name()), r2: r2.clone(), r1: r1.clone(), sum });
            rules.extend([r2, r1]);
        } else {
            for r1 in &g.rules {
                for r2 in &g.rules {
                    jobs.push(Job { label: format!("{} after {}", r2.name(), r1.name()), r2: r2.clone(), r1: r1.clone(), sum: None });
                }
            }
            rules.extend(g.rules.iter().cloned());
        }
    }
    if let Some(n) = args.random_rules {
        let shape = CorpusShape::default();
        let random = random_rules(args.seed, n, &shape);
        for l in &shape.labels {
            labels.push(Label::new(l).expect("corpus labels are non-empty"));
        }
        for (r2, r1) in cyclic_pairs(&random) {
            jobs.push(Job { label: format!("{} after {}", r2.name(), r1.name()), r2, r1, sum: None });
        }
        rules.extend(random);
    }
    if jobs.is_empty() {
        return Err(Failure(PARSE, "nothing to verify: give a grammar or --random-rules".into()));
    }
    labels.sort();
    labels.dedup();

    let needed = args.max_host_nodes + 2 * max_created(&rules) + args.max_edges;
    if args.universe < needed {
        return Err(capacity_hint(&format!("a universe of {} indices is too small for this run", args.universe), needed));
    }
    let modes: Vec<Semantics> = match args.semantics {
        Some(s) => vec![s.into()],
        None => Semantics::ALL.to_vec(),
    };
    let kind: OperatorKind = args.kind.into();
    let mut out = String::new();
    let mut failed = false;
    for mode in modes {
        let family: Vec<HostState> =
            enumerate_host_states(args.universe, args.max_host_nodes, &labels, args.max_edges, mode)
                .map_err(|e| oracle_failure(e, needed))?;
        writeln!(out, "{} semantics, {} states", mode.name(), family.len()).unwrap();
        for job in &jobs {
            let sum = match &job.sum {
                Some(s) => s.clone(),
                None => product(&job.r2, &job.r1, mode, kind).map_err(|e| Failure(PARSE, e.to_string()))?,
            };
            let report = check_sum_equivalence(&sum, &job.r2, &job.r1, kind, mode, &family)
                .map_err(|e| oracle_failure(e, needed))?;
            failed |= !report.pass;
            writeln!(out, "  {:<24} {report}", job.label).unwrap();
        }
    }
    writeln!(out, "{}", if failed { "FAIL" } else { "all pass" }).unwrap();
    Ok((out, if failed { VERIFY_FAILED } else { 0 }))
}

fn reaction_pair(args: &ReactionPair, commute: bool) -> Outcome {
    let doc = load_reactions(&args.file)?;
    let get = |name: &str| doc.reaction(name).ok_or_else(|| Failure(UNKNOWN, format!("unknown reaction `{name}`")));
    let (r2, r1) = (get(&args.r2)?, get(&args.r1)?);
    let sum = if commute { reaction_commutator(r2, r1) } else { reaction_product(r2, r1) };
    let sum = sum.map_err(|e| Failure(PARSE, e.to_string()))?;
    Ok((emit_reactionsum(&sum, &doc.species, args.format.into()), 0))
}

fn reaction_verify(file: Option<&Path>, max_degree: u32, nmax: u32) -> Outcome {
    let mut out = String::new();
    let mut failed = false;
    match file {
        Some(path) => {
            let doc = load_reactions(path)?;
            let bound = vec![nmax; doc.species.len()];
            for (n1, r1) in &doc.reactions {
                for (n2, r2) in &doc.reactions {
                    let c = verify_pair(r2, r1, &bound).map_err(|e| Failure(PARSE, e.to_string()))?;
                    failed |= !c.pass();
                    let status = if c.pass() { "pass" } else { "FAIL" };
                    writeln!(out, "{n2} after {n1}: {status} ({} columns)", c.columns_checked).unwrap();
                }
            }
        }
        None => {
            let report = sweep(max_degree, 2, nmax).map_err(|e| Failure(PARSE, e.to_string()))?;
            for (r2, r1, c) in &report.failures {
                writeln!(out, "FAIL {:?}->{:?} after {:?}->{:?}: {c:?}", r2.m(), r2.n(), r1.m(), r1.n()).unwrap();
            }
            failed = !report.failures.is_empty();
            writeln!(out, "{} ordered pairs, {} failures", report.pairs, report.failures.len()).unwrap();
        }
    }
    writeln!(out, "{}", if failed { "FAIL" } else { "all pass" }).unwrap();
    Ok((out, if failed { VERIFY_FAILED } else { 0 }))
}

fn examples() -> Outcome {
    let pins = mt_pins().map_err(|e| Failure(PARSE, e.to_string()))?;
    let mut out = String::new();
    for p in &pins {
        writeln!(out, "{p}").unwrap();
    }
    let failed = pins.iter().filter(|p| !p.pass()).count();
    writeln!(out, "{} of {} pins hold", pins.len() - failed, pins.len()).unwrap();
    Ok((out, if failed > 0 { VERIFY_FAILED } else { 0 }))
}

fn dispatch(cli: Cli) -> Outcome {
    match cli.command {
        Command::Product(a) => algebra(&a, false),
        Command::Commutator(a) => algebra(&a, true),
        Command::Verify(a) => verify(&a),
        Command::Reactions { command } => match command {
            ReactionCommand::Product(a) => reaction_pair(&a, false),
            ReactionCommand::Commutator(a) => reaction_pair(&a, true),
            ReactionCommand::Verify { file, max_degree, nmax } => reaction_verify(file.as_deref(), max_degree, nmax),
        },
        Command::PaperExamples => examples(),
    }
}

/// What a command printed and its exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub stdout: String,
    pub stderr: String,
    pub code: u8,
}

/// Runs the command line given as `args` (including the program name).
pub fn run<I, T>(args: I) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { PARSE } else { 0 };
            let text = e.render().to_string();
            return if e.use_stderr() {
                Output { stdout: String::new(), stderr: text, code }
            } else {
                Output { stdout: text, stderr: String::new(), code }
            };
        }
    };
    match dispatch(cli) {
        Ok((stdout, code)) => Output { stdout, stderr: String::new(), code },
        Err(Failure(code, msg)) => Output { stdout: String::new(), stderr: format!("error: {msg}\n"), code },
    }
}
