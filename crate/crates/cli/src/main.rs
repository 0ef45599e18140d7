use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigUint;
use rayon::prelude::*;
use sandpile_core::chipfiring::{big_number, ChipConfigJson};
use sandpile_core::tree::{spanning_tree_product, spanning_tree_recurrence};
use sandpile_core::verify::{self, Claim, ClaimReport, Summary, VerifyParams};
use sandpile_core::{
    build_wired_ball, build_wired_regular_tree, build_wired_tree, sandpile_group, ChipConfig,
    RootedTree, Sandpile, SandpileError, SinkedMultigraph, WiredTree, DEFAULT_ENUMERATION_BOUND,
};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "sandpile", version, about = "Sandpile groups of graphs and wired trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a graph as canonical JSON
    Build {
        #[command(subcommand)]
        kind: BuildKind,
    },
    /// Invariant factors of the sandpile group
    Group(GraphArg),
    /// Stabilize a configuration, reporting the odometer
    Stabilize(GraphChips),
    /// Burning test, plus the critical-vertex test when the graph is a wired tree
    Recurrent {
        #[command(flatten)]
        input: GraphChips,
        /// Root vertex, for the critical-vertex test
        #[arg(long, default_value_t = 0)]
        root: usize,
    },
    /// The identity element
    Identity(GraphArg),
    /// Order of a recurrent configuration, or of the class of one chip at a vertex
    Order {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long, conflicts_with = "vertex", required_unless_present = "vertex")]
        chips: Option<String>,
        #[arg(long)]
        vertex: Option<usize>,
    },
    /// Multiples of the root class on a regular tree, next to the lexicographic successor orbit
    LexOrbit {
        #[arg(long)]
        degree: usize,
        #[arg(long)]
        height: usize,
    },
    /// Spanning-tree count; regular trees are also checked against the closed forms
    SpanningTrees {
        #[arg(long, conflicts_with_all = ["degree", "height"], required_unless_present_all = ["degree", "height"])]
        graph: Option<PathBuf>,
        #[arg(long, requires = "height")]
        degree: Option<usize>,
        #[arg(long, requires = "degree")]
        height: Option<usize>,
    },
    /// Run a verification suite, one JSON line per instance and a summary line
    Verify(VerifyArgs),
}

#[derive(Subcommand)]
enum BuildKind {
    /// Wired regular tree
    RegularTree {
        #[arg(long)]
        degree: usize,
        #[arg(long)]
        height: usize,
    },
    /// Wired ball: d branches, no edge from the root to the sink
    Ball {
        #[arg(long)]
        degree: usize,
        #[arg(long)]
        n: usize,
    },
    /// Wire a rooted tree given as {"parents": [...], "labels": [...]}
    TreeFile { path: PathBuf },
}

#[derive(Args)]
struct GraphArg {
    /// Graph JSON file, or - for stdin
    #[arg(long)]
    graph: PathBuf,
}

#[derive(Args)]
struct GraphChips {
    #[command(flatten)]
    graph: GraphArg,
    /// A JSON array, a configuration object, or a path to either
    #[arg(long)]
    chips: String,
}

#[derive(Args)]
struct VerifyArgs {
    /// One of the claim names listed by --help
    #[arg(value_parser = parse_claim)]
    claim: Claim,
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long = "max-height")]
    max_height: Option<usize>,
    /// May be repeated
    #[arg(long = "prime")]
    primes: Vec<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_BOUND)]
    bound: u64,
    #[arg(long, default_value_t = sandpile_core::tree::DEFAULT_HOMOMORPHISM_SAMPLES)]
    samples: usize,
    /// Rooted tree JSON, for the tree-based claims
    #[arg(long)]
    tree: Option<PathBuf>,
}

fn parse_claim(s: &str) -> Result<Claim, String> {
    s.parse().map_err(|_| {
        let names: Vec<&str> = Claim::ALL.iter().map(|c| c.name()).collect();
        format!("expected one of: {}", names.join(", "))
    })
}

enum Failure {
    /// Bad input or parameters: exit 2.
    Usage(String),
    /// A check ran and did not hold: exit 1.
    Check,
}

impl From<SandpileError> for Failure {
    fn from(e: SandpileError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn read_source(path: &Path) -> Result<String, Failure> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
    }
}

fn load_graph(arg: &GraphArg) -> Result<SinkedMultigraph, Failure> {
    Ok(SinkedMultigraph::from_json_str(&read_source(&arg.graph)?)?)
}

fn load_chips(text: &str, g: &SinkedMultigraph) -> Result<ChipConfig, Failure> {
    let trimmed = text.trim_start();
    let raw = if trimmed.starts_with('[') || trimmed.starts_with('{') {
        text.to_string()
    } else {
        read_source(Path::new(text))?
    };
    let value: Value = serde_json::from_str(&raw).map_err(SandpileError::from)?;
    let json: ChipConfigJson = if value.is_array() {
        serde_json::from_value(json!({ "chips": value }))
    } else {
        serde_json::from_value(value)
    }
    .map_err(SandpileError::from)?;
    Ok(ChipConfig::from_json(&json, g)?)
}

fn emit(out: &mut impl Write, value: &impl serde::Serialize) -> io::Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    writeln!(out)
}

fn numbers(xs: &[BigUint]) -> Vec<serde_json::Number> {
    xs.iter().map(big_number).collect()
}

fn run(cli: Cli, out: &mut impl Write) -> Outcome {
    match cli.command {
        Command::Build { kind } => {
            let g = match kind {
                BuildKind::RegularTree { degree, height } => build_wired_regular_tree(degree, height)?,
                BuildKind::Ball { degree, n } => build_wired_ball(degree, n)?,
                BuildKind::TreeFile { path } => {
                    build_wired_tree(&RootedTree::from_json_str(&read_source(&path)?)?)?
                }
            };
            writeln!(out, "{}", g.to_json_string())?;
        }
        Command::Group(arg) => {
            let g = load_graph(&arg)?;
            emit(out, &sandpile_group(&g).to_json())?;
        }
        Command::Stabilize(input) => {
            let g = load_graph(&input.graph)?;
            let u = load_chips(&input.chips, &g)?;
            let r = Sandpile::new(&g).stabilize(&u)?;
            emit(
                out,
                &json!({ "stable": r.stable.to_json(&g), "odometer": numbers(&r.odometer) }),
            )?;
        }
        Command::Recurrent { input, root } => {
            let g = load_graph(&input.graph)?;
            let u = load_chips(&input.chips, &g)?;
            let sp = Sandpile::new(&g);
            let burning = sp.is_recurrent_burning(&u)?;
            let (critical, critical_vertices) = match WiredTree::from_graph(g.clone(), root) {
                Ok(tree) => {
                    let verts: Vec<usize> = tree
                        .critical_vertices(&u)?
                        .into_iter()
                        .map(|p| g.vertex_at(p))
                        .collect();
                    (Some(tree.is_recurrent_critical(&u)?), Some(verts))
                }
                Err(_) => (None, None),
            };
            emit(
                out,
                &json!({
                    "burning": burning,
                    "critical": critical,
                    "critical_vertices": critical_vertices,
                }),
            )?;
            if critical.is_some_and(|c| c != burning) {
                return Err(Failure::Check);
            }
        }
        Command::Identity(arg) => {
            let g = load_graph(&arg)?;
            emit(out, &Sandpile::new(&g).identity().to_json(&g))?;
        }
        Command::Order { graph, chips, vertex } => {
            let g = load_graph(&graph)?;
            let sp = Sandpile::new(&g);
            let u = match (chips, vertex) {
                (Some(text), _) => load_chips(&text, &g)?,
                (None, Some(v)) => {
                    let p = g.position_of(v).ok_or_else(|| {
                        Failure::Usage(format!("vertex {v} is the sink or out of range"))
                    })?;
                    sp.vertex_rep(p)?
                }
                (None, None) => unreachable!("clap requires one of the two"),
            };
            let order = sp.element_order(&u)?;
            emit(out, &json!({ "element": u.to_json(&g), "order": order.to_string() }))?;
        }
        Command::LexOrbit { degree, height } => lex_orbit(degree, height, out)?,
        Command::SpanningTrees { graph, degree, height } => {
            spanning_trees(graph.as_deref(), degree.zip(height), out)?
        }
        Command::Verify(args) => run_verify(args, out)?,
    }
    Ok(())
}

fn lex_orbit(d: usize, n: usize, out: &mut impl Write) -> Outcome {
    let t = sandpile_core::RegularTree::new(d, n)?;
    let period = sandpile_core::tree::root_subgroup_order(d, n)?;
    let period = usize::try_from(&period)
        .map_err(|_| Failure::Usage("root subgroup too large to list".into()))?;
    let fired = t.root_multiples(period)?;
    let start = t
        .level_vector_of(&fired[0])
        .ok_or_else(|| Failure::Usage("root class is not constant on levels".into()))?;
    let lex = t.lex_orbit(&start, period)?;
    let mut all = true;
    for (k, (u, v)) in fired.iter().zip(&lex).enumerate() {
        let level = t.level_vector_of(u);
        let ok = level.as_ref() == Some(v);
        all &= ok;
        emit(
            out,
            &json!({
                "k": (k + 1).to_string(),
                "chip_firing": level.map(|l| l.to_string()),
                "successor": v.to_string(),
                "pass": ok,
            }),
        )?;
    }
    emit(out, &json!({ "summary": true, "period": period.to_string(), "pass": all }))?;
    if all {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn spanning_trees(graph: Option<&Path>, regular: Option<(usize, usize)>, out: &mut impl Write) -> Outcome {
    let Some((d, n)) = regular else {
        let path = graph.expect("clap requires a graph or a degree and height");
        let g = SinkedMultigraph::from_json_str(&read_source(path)?)?;
        emit(out, &json!({ "spanning_trees": g.spanning_tree_count().to_string() }))?;
        return Ok(());
    };
    let count = |k: usize| build_wired_regular_tree(d, k).map(|g| g.spanning_tree_count());
    let det = count(n)?;
    let product = spanning_tree_product(d, n)?;
    let recurrence = if n >= 4 {
        Some(spanning_tree_recurrence(d, n, &count(n - 1)?, &count(n - 2)?)?)
    } else {
        None
    };
    let pass = product == det && recurrence.as_ref().is_none_or(|r| r == &det);
    emit(
        out,
        &json!({
            "spanning_trees": det.to_string(),
            "product_formula": product.to_string(),
            "recurrence": recurrence.map(|r| r.to_string()),
            "pass": pass,
        }),
    )?;
    if pass {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn thread_pool() -> Result<rayon::ThreadPool, Failure> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("SANDPILE_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Failure::Usage(format!("SANDPILE_THREADS must be a positive integer, got {v:?}")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Failure::Usage(format!("thread pool: {e}")))
}

fn run_verify(args: VerifyArgs, out: &mut impl Write) -> Outcome {
    let tree = match &args.tree {
        Some(path) => Some(RootedTree::from_json_str(&read_source(path)?)?),
        None => None,
    };
    let params = VerifyParams {
        degree: args.degree,
        height: args.height,
        max_height: args.max_height,
        primes: args.primes,
        seed: args.seed,
        bound: args.bound,
        samples: args.samples,
        tree,
    };
    let instances = verify::plan(args.claim, &params)?;
    let results: Vec<sandpile_core::Result<ClaimReport>> =
        thread_pool()?.install(|| instances.par_iter().map(verify::run).collect());
    let reports = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    for r in &reports {
        emit(out, r)?;
    }
    let summary = Summary::of(args.claim, &reports);
    emit(out, &summary)?;
    if summary.pass {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    let result = run(cli, &mut out);
    let flushed = out.flush();
    match (result, flushed) {
        (Ok(()), Ok(())) => ExitCode::SUCCESS,
        (Err(Failure::Check), _) => ExitCode::from(1),
        (Err(Failure::Usage(msg)), _) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        (Ok(()), Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
