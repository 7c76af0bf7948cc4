//! Command-line front end: construction, containment checks, Ackermann
//! lookups, coefficient tables, derivation trees, extremal search, and the
//! verification suite.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error, 3 size-guard
//! refusal (the predicted size is printed).

use std::fs;
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dsforge::ackermann::AckTable;
use dsforge::coeffs::{coefficient, CoeffKind};
use dsforge::construct::{
    t_pi, t_pi_stats, t_rho, t_rho_stats, u_pi, u_pi_stats, u_s, u_s_stats, ConstructError,
    ConstructionStats, Pattern,
};
use dsforge::containment::{embeds, embeds_order_iso, Embedding};
use dsforge::decompose::{ackermann_tree, canonical_tree, project_tree};
use dsforge::extremal::{ex_blocked_bruteforce, ex_bruteforce, SearchBudget};
use dsforge::patterns::{parse_spec, PatternSpec};
use dsforge::seqcore::{BlockedSequence, Sequence};
use dsforge::verify::{run_suite, Mode, DEFAULT_SEED};

#[derive(Parser)]
#[command(
    name = "dsforge",
    about = "Generalized Davenport-Schinzel sequences: constructions, recurrences, \
             decompositions, and pattern-avoidance checks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build one of the parameterized lower-bound sequences.
    Construct(ConstructArgs),
    /// Decide whether a pattern embeds in a sequence read from a file.
    Check(CheckArgs),
    /// Inverse Ackermann value alpha(n, m) (or alpha(n) when m is omitted).
    Alpha(AlphaArgs),
    /// Ackermann table entry a(i, j).
    Ack(AckArgs),
    /// Recurrence coefficients and their tables.
    Coeffs(CoeffsArgs),
    /// Derivation trees and per-symbol projection trees in DOT form.
    Tree(TreeArgs),
    /// Exhaustive extremal search for small parameters.
    Ex(ExArgs),
    /// Run the verification suite and emit a report.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ConstructKind {
    #[value(name = "t_rho")]
    TRho,
    #[value(name = "u_s")]
    US,
    #[value(name = "t_pi")]
    TPi,
    #[value(name = "u_pi")]
    UPi,
}

#[derive(Args)]
struct ConstructArgs {
    #[arg(long, value_enum)]
    kind: ConstructKind,
    /// Divisibility parameter for t-rho.
    #[arg(long)]
    rho: Option<u64>,
    /// Order parameter for u-s.
    #[arg(long)]
    s: Option<u64>,
    /// Diagonal pattern (e.g. "uudd") for t-pi / u-pi.
    #[arg(long)]
    pi: Option<String>,
    #[arg(long)]
    i: u64,
    #[arg(long)]
    j: u64,
    /// Print predicted statistics instead of the sequence itself.
    #[arg(long)]
    stats: bool,
}

#[derive(Args)]
struct CheckArgs {
    /// Pattern spec: alt:LEN, N:k, M:k, Z:k, C:k, D:k, perm:r:parts,
    /// binperm:r:parts, dblperm:r:parts, dbl(...), or a literal sequence.
    #[arg(long)]
    pattern: String,
    /// Input file holding the host sequence (blocked or flat text form).
    #[arg(long = "in")]
    input: String,
    /// Require the witness to preserve symbol order.
    #[arg(long)]
    order_iso: bool,
}

#[derive(Args)]
struct AlphaArgs {
    #[arg(long)]
    n: u64,
    #[arg(long)]
    m: Option<u64>,
}

#[derive(Args)]
struct AckArgs {
    #[arg(long)]
    i: u64,
    #[arg(long)]
    j: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum CoeffArg {
    K,
    DblK,
    Fea,
    Ds,
    DblDs,
}

impl From<CoeffArg> for CoeffKind {
    fn from(value: CoeffArg) -> CoeffKind {
        match value {
            CoeffArg::K => CoeffKind::K,
            CoeffArg::DblK => CoeffKind::DblK,
            CoeffArg::Fea => CoeffKind::Fea,
            CoeffArg::Ds => CoeffKind::Ds,
            CoeffArg::DblDs => CoeffKind::DblDs,
        }
    }
}

#[derive(Args)]
struct CoeffsArgs {
    #[arg(long, value_enum)]
    kind: CoeffArg,
    #[arg(long)]
    s: u32,
    #[arg(long)]
    i: u32,
    /// Alphabet-size parameter for the doubled kinds.
    #[arg(long)]
    r: Option<u32>,
    /// Print the whole table up to the given indices.
    #[arg(long)]
    table: bool,
}

#[derive(Args)]
struct TreeArgs {
    #[arg(long = "in")]
    input: String,
    /// Use the Ackermann-guided schedule for the given row instead of the
    /// canonical halving schedule.
    #[arg(long)]
    ackermann: Option<u64>,
    /// Write DOT output to this file instead of stdout.
    #[arg(long)]
    dot: Option<String>,
    /// Emit the projection tree of this symbol with wing/quill/feather roles.
    #[arg(long)]
    project: Option<u32>,
}

#[derive(Args)]
struct ExArgs {
    #[arg(long)]
    pattern: String,
    #[arg(long)]
    n: usize,
    /// Block count; selects the blocked extremal function.
    #[arg(long, conflicts_with = "sparse")]
    m: Option<usize>,
    /// Sparsity for the sparse extremal function (default: 2).
    #[arg(long)]
    sparse: Option<usize>,
    /// Node budget for the search.
    #[arg(long)]
    budget: Option<u64>,
    /// Length cap for the search.
    #[arg(long)]
    max_len: Option<usize>,
    /// Wall-clock cap in seconds.
    #[arg(long)]
    time_cap: Option<u64>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Reduced instance counts for a fast smoke run.
    #[arg(long, conflicts_with = "full")]
    quick: bool,
    /// Full acceptance-scale instance counts (the default).
    #[arg(long)]
    full: bool,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if is_guard_refusal(&e) { 3 } else { 2 })
        }
    }
}

fn is_guard_refusal(e: &anyhow::Error) -> bool {
    matches!(
        e.downcast_ref::<ConstructError>(),
        Some(ConstructError::GuardExceeded { .. })
    )
}

fn dispatch(command: Command) -> anyhow::Result<ExitCode> {
    match command {
        Command::Construct(args) => cmd_construct(args),
        Command::Check(args) => cmd_check(args),
        Command::Alpha(args) => cmd_alpha(args),
        Command::Ack(args) => cmd_ack(args),
        Command::Coeffs(args) => cmd_coeffs(args),
        Command::Tree(args) => cmd_tree(args),
        Command::Ex(args) => cmd_ex(args),
        Command::Verify(args) => cmd_verify(args),
    }
}

fn cmd_construct(args: ConstructArgs) -> anyhow::Result<ExitCode> {
    let need = |opt: Option<u64>, name: &str| {
        opt.ok_or_else(|| anyhow::anyhow!("--{name} is required for this kind"))
    };
    let need_pi = |opt: &Option<String>| -> anyhow::Result<Pattern> {
        let text = opt
            .as_deref()
            .ok_or_else(|| anyhow::anyhow!("--pi is required for this kind"))?;
        Ok(Pattern::from_str(text).map_err(anyhow::Error::msg)?)
    };
    let (stats, build): (ConstructionStats, Box<dyn FnOnce() -> Result<BlockedSequence, ConstructError>>) =
        match args.kind {
            ConstructKind::TRho => {
                let rho = need(args.rho, "rho")?;
                (
                    t_rho_stats(rho, args.i, args.j)?,
                    Box::new(move || t_rho(rho, args.i, args.j)),
                )
            }
            ConstructKind::US => {
                let s = need(args.s, "s")?;
                (
                    u_s_stats(s, args.i, args.j)?,
                    Box::new(move || u_s(s, args.i, args.j)),
                )
            }
            ConstructKind::TPi => {
                let pi = need_pi(&args.pi)?;
                (
                    t_pi_stats(&pi, args.i, args.j)?,
                    Box::new(move || t_pi(&pi, args.i, args.j)),
                )
            }
            ConstructKind::UPi => {
                let pi = need_pi(&args.pi)?;
                (
                    u_pi_stats(&pi, args.i, args.j)?,
                    Box::new(move || u_pi(&pi, args.i, args.j)),
                )
            }
        };
    if args.stats {
        println!("{}", serde_json::to_string(&stats)?);
        return Ok(ExitCode::SUCCESS);
    }
    println!("{}", build()?);
    Ok(ExitCode::SUCCESS)
}

fn read_host(path: &str) -> anyhow::Result<Sequence> {
    let text = fs::read_to_string(path)?;
    if text.contains('(') || text.contains('<') {
        let blocked = BlockedSequence::from_str(text.trim()).map_err(anyhow::Error::msg)?;
        Ok(blocked.flatten())
    } else {
        Sequence::from_str(text.trim()).map_err(anyhow::Error::msg)
    }
}

fn witness_json(e: &Embedding) -> String {
    serde_json::json!({
        "symbol_map": e.symbol_map,
        "positions": e.positions,
    })
    .to_string()
}

fn cmd_check(args: CheckArgs) -> anyhow::Result<ExitCode> {
    let spec = parse_spec(&args.pattern).map_err(anyhow::Error::msg)?;
    let host = read_host(&args.input)?;
    let finder = if args.order_iso {
        embeds_order_iso
    } else {
        embeds
    };
    let hit = match &spec {
        PatternSpec::Single(p) => finder(p, &host),
        PatternSpec::Family(fam) => {
            let members = fam
                .members(dsforge::patterns::DEFAULT_ENUM_CAP)
                .map_err(anyhow::Error::msg)?;
            members.iter().find_map(|p| finder(p, &host))
        }
    };
    match hit {
        Some(e) => println!("YES {}", witness_json(&e)),
        None => println!("NO"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_alpha(args: AlphaArgs) -> anyhow::Result<ExitCode> {
    let table = AckTable::with_cap_bits(4096);
    let value = match args.m {
        Some(m) => table.alpha(args.n, m)?,
        None => table.alpha1(args.n)?,
    };
    println!("{value}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_ack(args: AckArgs) -> anyhow::Result<ExitCode> {
    let table = AckTable::with_cap_bits(4096);
    let value = table.ack(args.i, args.j)?;
    match value.exact() {
        Some(v) => println!("{v}"),
        None => println!("saturated (> 2^{})", table.cap_bits()),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_coeffs(args: CoeffsArgs) -> anyhow::Result<ExitCode> {
    let kind: CoeffKind = args.kind.into();
    if args.table {
        for s in 2..=args.s {
            for i in 1..=args.i {
                match coefficient(kind, s, i, args.r) {
                    Ok(v) => println!("{kind:?}\ts={s}\ti={i}\t{v}"),
                    Err(_) => println!("{kind:?}\ts={s}\ti={i}\t-"),
                }
            }
        }
    } else {
        let v = coefficient(kind, args.s, args.i, args.r)?;
        println!("{v}");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_tree(args: TreeArgs) -> anyhow::Result<ExitCode> {
    let text = fs::read_to_string(&args.input)?;
    let s = BlockedSequence::from_str(text.trim()).map_err(anyhow::Error::msg)?;
    let tree = match args.ackermann {
        Some(i) => ackermann_tree(&s, i)?,
        None => canonical_tree(&s)?,
    };
    let dot = match args.project {
        Some(symbol) => project_tree(&tree, symbol)?.to_dot(),
        None => tree.to_dot(),
    };
    match args.dot {
        Some(path) => fs::write(path, dot)?,
        None => print!("{dot}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_ex(args: ExArgs) -> anyhow::Result<ExitCode> {
    let family = parse_spec(&args.pattern)
        .map_err(anyhow::Error::msg)?
        .to_family();
    let mut budget = SearchBudget::default();
    if let Some(nodes) = args.budget {
        budget.max_nodes = nodes;
    }
    if let Some(len) = args.max_len {
        budget.max_length = len;
    }
    if let Some(secs) = args.time_cap {
        budget.time_cap = Duration::from_secs(secs);
    }
    let (max, witness, exact) = match args.m {
        Some(m) => {
            let res = ex_blocked_bruteforce(&family, args.n, m, &budget)?;
            (res.max, res.witness.to_string(), res.exact)
        }
        None => {
            let sparsity = args.sparse.unwrap_or(2);
            let res = ex_bruteforce(&family, args.n, sparsity, &budget)?;
            (res.max, res.witness.to_string(), res.exact)
        }
    };
    println!(
        "{}",
        serde_json::json!({ "max": max, "witness": witness, "exact": exact })
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> anyhow::Result<ExitCode> {
    let mode = if args.quick { Mode::Quick } else { Mode::Full };
    let report = run_suite(mode, args.seed);
    println!("{}", report.to_json());
    eprint!("{}", report.to_table());
    Ok(if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
