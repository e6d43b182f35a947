use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use euclid_sr::checks::{check_chain_dichotomy, check_star3, sample_star_d, star3_instance, star_d_closed_instance};
use euclid_sr::gadgets::{build_star3, Pose, Star3Params};
use euclid_sr::io::{self, IoError};
use euclid_sr::layout::{scale_layout, validate_layout, OrthogonalLayout};
use euclid_sr::reduction::{build_solution, extract_cover, rebuild, reduce, Reduction, ReductionError, ReductionParams};
use euclid_sr::render::{render_svg, RenderOptions};
use euclid_sr::report::Report;
use euclid_sr::x3c::{associated_graph, solve_x3c_bruteforce, validate_x3c, X3CInstance};
use euclid_sr::stability::find_blocking_containing;
use euclid_sr::{enumerate_stable, find_blocking, greedy_match_2, Instance, SearchMode};

const EXIT_NEGATIVE: u8 = 3;
const EXIT_INVALID: u8 = 4;
const EXIT_BUDGET: u8 = 5;

#[derive(Parser)]
#[command(name = "euclid-sr", version, about = "Euclidean multi-dimensional stable roommates toolkit")]
struct Cli {
    /// Seed for every sampling step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for stability checks, enumeration and sampling.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit gadget instances.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Find stable matchings.
    Solve(SolveArgs),
    /// Check a matching for blocking coalitions.
    Verify(VerifyArgs),
    /// Build the reduced instance and its certificate.
    Reduce(ReduceArgs),
    /// Turn an exact cover into a matching of the reduced instance.
    SynthesizeSolution(SynthArgs),
    /// Read the exact cover encoded by a matching of the reduced instance.
    ExtractCover(ExtractArgs),
    /// Exact-cover instances.
    #[command(subcommand)]
    X3c(X3cCommand),
    /// Orthogonal layouts of the associated graph.
    #[command(subcommand)]
    Layout(LayoutCommand),
    /// Draw an instance and optionally a matching as SVG.
    Render(RenderArgs),
    /// Exhaustive and sampled gadget checks.
    #[command(subcommand)]
    Lemma(LemmaCommand),
}

#[derive(Subcommand)]
enum GenCommand {
    /// The 12-agent star for d = 3.
    Star3 {
        /// Use the standalone parameters rather than the attached ones.
        #[arg(long)]
        standalone: bool,
        #[arg(short, long = "output", value_name = "FILE")]
        o: Option<PathBuf>,
    },
    /// The hexagonal-prism exact-cover instance and its orthogonal layout.
    Prism {
        #[arg(long)]
        x3c: PathBuf,
        #[arg(long)]
        layout: PathBuf,
    },
    /// The d-star closed by its garbage agents (d >= 4).
    Star {
        #[arg(long)]
        d: usize,
        #[arg(short, long = "output", value_name = "FILE")]
        o: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Greedy2,
    Enumerate,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, value_enum, default_value = "enumerate")]
    method: Method,
    /// Stop after this many stable matchings.
    #[arg(long)]
    limit: Option<usize>,
    /// Search node budget.
    #[arg(long)]
    budget: Option<u64>,
    instance: PathBuf,
    #[arg(short, long = "output", value_name = "FILE")]
    o: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    instance: PathBuf,
    matching: PathBuf,
    /// Use the exhaustive checker instead of the radius-pruned one.
    #[arg(long)]
    naive: bool,
    /// Only report blocking coalitions containing these agent ids.
    #[arg(long, value_delimiter = ',')]
    containing: Vec<String>,
}

#[derive(Args)]
struct ReduceArgs {
    #[arg(long)]
    d: usize,
    /// Minimum route segment length after scaling.
    #[arg(long, default_value_t = euclid_sr::reduction::DEFAULT_SCALE)]
    scale: i64,
    x3c: PathBuf,
    layout: PathBuf,
    #[arg(short, long = "output", value_name = "FILE")]
    o: PathBuf,
    #[arg(long)]
    cert: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    cert: PathBuf,
    cover: PathBuf,
    #[arg(short, long = "output", value_name = "FILE")]
    o: Option<PathBuf>,
    /// Reduced instance; rebuilt from the certificate when omitted.
    #[arg(long)]
    instance: Option<PathBuf>,
}

#[derive(Args)]
struct ExtractArgs {
    cert: PathBuf,
    matching: PathBuf,
    #[arg(short, long = "output", value_name = "FILE")]
    o: Option<PathBuf>,
    /// Reduced instance; rebuilt from the certificate when omitted.
    #[arg(long)]
    instance: Option<PathBuf>,
}

#[derive(Subcommand)]
enum X3cCommand {
    /// Find an exact cover by backtracking.
    Solve {
        x3c: PathBuf,
        #[arg(short, long = "output", value_name = "FILE")]
        o: Option<PathBuf>,
    },
    /// Check the occurrence and cardinality constraints.
    Validate { x3c: PathBuf },
}

#[derive(Subcommand)]
enum LayoutCommand {
    /// Check a layout against the associated graph of an exact-cover instance.
    Validate { graph: PathBuf, layout: PathBuf },
    /// Scale a layout so every segment has length at least L.
    Scale {
        #[arg(long = "L")]
        l: i64,
        graph: PathBuf,
        layout: PathBuf,
        #[arg(short, long = "output", value_name = "FILE")]
        o: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RenderArgs {
    instance: PathBuf,
    matching: Option<PathBuf>,
    #[arg(short, long = "output", value_name = "FILE")]
    o: Option<PathBuf>,
    /// Skip searching for a blocking coalition to highlight.
    #[arg(long)]
    no_witness: bool,
    /// Omit agent labels.
    #[arg(long)]
    no_labels: bool,
}

#[derive(Subcommand)]
enum LemmaCommand {
    /// Enumerate all partitions of the standalone star3.
    CheckStar3,
    /// Enumerate the closed chain miniature.
    CheckChainDichotomy {
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Sample matchings of the closed d-star with 0 not matched to Y.
    #[command(name = "sample-starD")]
    SampleStarD {
        #[arg(long, default_value_t = 5)]
        d: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(short, long = "output", value_name = "FILE")]
        o: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn new(code: u8, msg: impl Into<String>) -> Self {
        Self { code, msg: msg.into() }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        let code = match e {
            IoError::File { .. } => 1,
            _ => EXIT_INVALID,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<ReductionError> for Failure {
    fn from(e: ReductionError) -> Self {
        Failure::new(EXIT_INVALID, e.to_string())
    }
}

type Outcome = Result<u8, Failure>;

fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => io::write_text(p, text).map_err(Failure::from),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn report_outcome(rep: &Report) -> u8 {
    print!("{rep}");
    if rep.passed() {
        println!("PASS");
        0
    } else {
        println!("FAIL ({} failed checks)", rep.failures().len());
        EXIT_INVALID
    }
}

fn gen(cmd: GenCommand) -> Outcome {
    let (inst, out) = match cmd {
        GenCommand::Star3 { standalone, o } => {
            let inst = if standalone {
                star3_instance()
            } else {
                let s = build_star3(Pose::default(), Star3Params::default().attached(), false)
                    .map_err(|e| Failure::new(EXIT_INVALID, e.to_string()))?;
                Instance::new(3, s.agents, None).map_err(|e| Failure::new(EXIT_INVALID, e.to_string()))?
            };
            (inst, o)
        }
        GenCommand::Prism { x3c, layout } => {
            io::write_x3c(&x3c, &X3CInstance::prism())?;
            io::write_layout(&layout, &OrthogonalLayout::prism_fixture())?;
            return Ok(0);
        }
        GenCommand::Star { d, o } => {
            if d < 4 {
                return Err(Failure::new(2, format!("--d must be at least 4 (use `gen star3` for d = 3), got {d}")));
            }
            (star_d_closed_instance(d).map_err(|e| Failure::new(EXIT_INVALID, e.to_string()))?, o)
        }
    };
    emit(out.as_deref(), &io::instance_to_string(&inst))?;
    Ok(0)
}

#[derive(Serialize)]
struct SolveOutput {
    method: &'static str,
    exhaustive: bool,
    hit_limit: bool,
    nodes: u64,
    matchings: Vec<Vec<Vec<String>>>,
}

fn solve(a: SolveArgs) -> Outcome {
    let inst = io::read_instance(&a.instance)?;
    let out = match a.method {
        Method::Greedy2 => {
            let m = greedy_match_2(&inst).map_err(|e| Failure::new(2, e.to_string()))?;
            SolveOutput { method: "greedy2", exhaustive: true, hit_limit: false, nodes: 0, matchings: vec![m.to_ids(&inst)] }
        }
        Method::Enumerate => {
            let e = enumerate_stable(&inst, a.limit, a.budget);
            SolveOutput {
                method: "enumerate",
                exhaustive: e.exhaustive,
                hit_limit: e.hit_limit,
                nodes: e.nodes,
                matchings: e.matchings.iter().map(|m| m.to_ids(&inst)).collect(),
            }
        }
    };
    eprintln!("{} stable matchings, exhaustive={}, nodes={}", out.matchings.len(), out.exhaustive, out.nodes);
    emit(a.o.as_deref(), &io::to_canonical_json(&out))?;
    Ok(if !out.exhaustive {
        EXIT_BUDGET
    } else if out.matchings.is_empty() {
        EXIT_NEGATIVE
    } else {
        0
    })
}

fn verify(a: VerifyArgs) -> Outcome {
    let inst = io::read_instance(&a.instance)?;
    let m = io::read_matching(&a.matching, &inst)?;
    let mode = if a.naive { SearchMode::Naive } else { SearchMode::Pruned };
    let found = if a.containing.is_empty() {
        find_blocking(&m, &inst, mode)
    } else {
        let fixed = inst.lookup_all(&a.containing).map_err(|e| Failure::new(2, e.to_string()))?;
        find_blocking_containing(&m, &inst, &fixed).or_else(|| {
            eprintln!("no blocking coalition contains {}", a.containing.join(", "));
            find_blocking(&m, &inst, mode)
        })
    };
    match found {
        None => {
            println!("STABLE");
            Ok(0)
        }
        Some(w) => {
            println!("UNSTABLE");
            println!("blocking coalition: {}", w.ids(&inst).join(" "));
            for &(k, old, new) in &w.improvements {
                println!("  {}: {:.9} -> {:.9}", inst.id(k), old, new);
            }
            Ok(EXIT_NEGATIVE)
        }
    }
}

fn reduce_cmd(a: ReduceArgs) -> Outcome {
    let x = io::read_x3c(&a.x3c)?;
    let lay = io::read_layout(&a.layout)?;
    let mut params = ReductionParams::new(a.d);
    params.scale = a.scale;
    let red = reduce(&x, &lay, params)?;
    io::write_instance(&a.o, &red.instance)?;
    io::write_certificate(&a.cert, &red.certificate)?;
    eprintln!(
        "d={} agents={} chains={} scale factor={} reduced separation={}",
        a.d,
        red.instance.len(),
        red.certificate.edges.len(),
        red.scale.factor,
        red.scale.reduced_separation
    );
    Ok(0)
}

fn load_reduction(cert: &Path, instance: Option<&Path>) -> Result<(Instance, Reduction), Failure> {
    let cert = io::read_certificate(cert)?;
    let red = rebuild(&cert)?;
    let inst = match instance {
        Some(p) => {
            let inst = io::read_instance(p)?;
            if inst != red.instance {
                return Err(Failure::new(EXIT_INVALID, format!("{} does not match the certificate", p.display())));
            }
            inst
        }
        None => red.instance.clone(),
    };
    Ok((inst, red))
}

fn synthesize(a: SynthArgs) -> Outcome {
    let (inst, red) = load_reduction(&a.cert, a.instance.as_deref())?;
    let cover = io::read_cover(&a.cover)?;
    let m = build_solution(&inst, &red.certificate, &cover)?;
    emit(a.o.as_deref(), &io::matching_to_string(&m, &inst))?;
    Ok(0)
}

fn extract(a: ExtractArgs) -> Outcome {
    let (inst, red) = load_reduction(&a.cert, a.instance.as_deref())?;
    let m = io::read_matching(&a.matching, &inst)?;
    let cover = extract_cover(&inst, &red.certificate, &m);
    emit(a.o.as_deref(), &io::cover_to_string(&cover))?;
    if red.certificate.x3c.is_cover(&cover) {
        Ok(0)
    } else {
        eprintln!("extracted sets do not form an exact cover");
        Ok(EXIT_NEGATIVE)
    }
}

fn x3c(cmd: X3cCommand) -> Outcome {
    match cmd {
        X3cCommand::Solve { x3c, o } => {
            let x = io::read_x3c(&x3c)?;
            match solve_x3c_bruteforce(&x) {
                Some(c) => {
                    emit(o.as_deref(), &io::cover_to_string(&c))?;
                    Ok(0)
                }
                None => {
                    println!("no exact cover");
                    Ok(EXIT_NEGATIVE)
                }
            }
        }
        X3cCommand::Validate { x3c } => Ok(report_outcome(&validate_x3c(&io::read_x3c_unchecked(&x3c)?))),
    }
}

fn layout(cmd: LayoutCommand) -> Outcome {
    match cmd {
        LayoutCommand::Validate { graph, layout } => {
            let g = associated_graph(&io::read_x3c(&graph)?);
            Ok(report_outcome(&validate_layout(&g, &io::read_layout(&layout)?)))
        }
        LayoutCommand::Scale { l, graph, layout, o } => {
            let g = associated_graph(&io::read_x3c(&graph)?);
            let lay = io::read_layout(&layout)?;
            let rep = validate_layout(&g, &lay);
            if !rep.passed() {
                return Ok(report_outcome(&rep));
            }
            let (scaled, info) = scale_layout(&lay, l).map_err(|e| Failure::new(EXIT_INVALID, e.to_string()))?;
            eprintln!(
                "factor={} min segment {} -> {}, min parallel gap {} -> {}",
                info.factor, info.min_segment_before, info.min_segment, info.min_parallel_gap_before, info.min_parallel_gap
            );
            emit(o.as_deref(), &io::layout_to_string(&scaled)?)?;
            Ok(0)
        }
    }
}

fn render(a: RenderArgs) -> Outcome {
    let inst = io::read_instance(&a.instance)?;
    let m = a.matching.as_deref().map(|p| io::read_matching(p, &inst)).transpose()?;
    let w = match (&m, a.no_witness) {
        (Some(m), false) => find_blocking(m, &inst, SearchMode::Pruned),
        _ => None,
    };
    let opts = RenderOptions { labels: !a.no_labels, ..RenderOptions::default() };
    emit(a.o.as_deref(), &render_svg(&inst, m.as_ref(), w.as_ref(), &opts))?;
    Ok(0)
}

fn lemma(cmd: LemmaCommand, seed: u64) -> Outcome {
    match cmd {
        LemmaCommand::CheckStar3 => {
            let r = check_star3();
            println!("{}", r.summary());
            println!("{} stable matchings", r.stable.len());
            Ok(if r.passed() { 0 } else { EXIT_NEGATIVE })
        }
        LemmaCommand::CheckChainDichotomy { budget } => {
            let r = check_chain_dichotomy(&ReductionParams::new(3), budget)?;
            println!("chain of {} links: {}", r.n_hat, r.summary());
            Ok(if !r.exhaustive {
                EXIT_BUDGET
            } else if r.passed() {
                0
            } else {
                EXIT_NEGATIVE
            })
        }
        LemmaCommand::SampleStarD { d, samples, o } => {
            if d < 4 {
                return Err(Failure::new(2, format!("--d must be at least 4, got {d}")));
            }
            println!("# seed: {seed}");
            let r = sample_star_d(d, samples, seed).map_err(|e| Failure::new(EXIT_INVALID, e.to_string()))?;
            println!("{}", r.summary());
            if let Some(p) = o {
                io::write_text(&p, &io::to_canonical_json(&r))?;
            }
            Ok(if r.passed() { 0 } else { EXIT_NEGATIVE })
        }
    }
}

fn run(cli: Cli) -> Outcome {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::new(2, format!("--jobs: {e}")))?;
    }
    match cli.command {
        Command::Gen(c) => gen(c),
        Command::Solve(a) => solve(a),
        Command::Verify(a) => verify(a),
        Command::Reduce(a) => reduce_cmd(a),
        Command::SynthesizeSolution(a) => synthesize(a),
        Command::ExtractCover(a) => extract(a),
        Command::X3c(c) => x3c(c),
        Command::Layout(c) => layout(c),
        Command::Render(a) => render(a),
        Command::Lemma(c) => lemma(c, cli.seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
