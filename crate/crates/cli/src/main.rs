//! `mmnet`: simulate, step through and explore multimedia nets.

mod load;
mod step;

use std::fs;
use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mmnet::patterns;
use mmnet::runtime::{Bounds, ExploreOptions, Reachability, Runtime, Snapshot, Step, Supply, Trace};

use load::{CliError, Loaded};

#[derive(Parser)]
#[command(name = "mmnet", version, about = "Simulate and explore multimedia nets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fire enabled transitions until none is left (least pair first, or random with --seed)
    Run(RunArgs),
    /// Interactive token game, reading choices from stdin
    Step(NetArgs),
    /// Build the reachability graph
    Explore(ExploreArgs),
    /// Decide whether a place can become nonempty
    Reach {
        place: String,
        #[command(flatten)]
        args: ExploreArgs,
    },
    /// Validate a net definition
    Lint {
        #[arg(long)]
        net: PathBuf,
    },
    /// Built-in pattern nets
    Patterns {
        #[command(subcommand)]
        command: PatternsCommand,
    },
}

#[derive(Subcommand)]
enum PatternsCommand {
    /// Print the net definition of a pattern (splitter, filter, enricher, detector, pipeline)
    Emit { name: String },
}

#[derive(Args, Clone)]
struct NetArgs {
    #[arg(long)]
    net: PathBuf,
    /// Metadata triples; overrides the net's `init` entry
    #[arg(long)]
    triples: Option<PathBuf>,
    /// Object store (JSON); overrides the net's `init` entry
    #[arg(long)]
    objects: Option<PathBuf>,
    /// Value lists for external-input variables, one `var = [v, ...]` per line
    #[arg(long)]
    supply: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    net: NetArgs,
    #[arg(long, default_value_t = 1000)]
    max_steps: usize,
    /// Pick among enabled pairs at random, reproducibly
    #[arg(long)]
    seed: Option<u64>,
    /// Write the final metadata, objects and trace here
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ExploreArgs {
    #[command(flatten)]
    net: NetArgs,
    /// Depth bound
    #[arg(long, default_value_t = Bounds::default().max_depth)]
    max_steps: usize,
    #[arg(long, default_value_t = Bounds::default().max_states)]
    max_states: usize,
    #[arg(long)]
    canonicalize: bool,
    #[arg(long)]
    parallel: bool,
    #[arg(long)]
    dot: Option<PathBuf>,
}

impl ExploreArgs {
    fn options(&self) -> ExploreOptions {
        ExploreOptions {
            bounds: Bounds { max_depth: self.max_steps, max_states: self.max_states, ..Bounds::default() },
            canonicalize: self.canonicalize,
            parallel: self.parallel,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let result = match cli.command {
        Command::Run(args) => cmd_run(&args, &mut out),
        Command::Step(args) => {
            let stdin = io::stdin();
            cmd_step(&args, &mut stdin.lock(), &mut out)
        }
        Command::Explore(args) => cmd_explore(&args, &mut out),
        Command::Reach { place, args } => cmd_reach(&place, &args, &mut out),
        Command::Lint { net } => cmd_lint(&net, &mut out),
        Command::Patterns { command: PatternsCommand::Emit { name } } => match patterns::emit(&name) {
            Some(text) => write!(out, "{text}").map_err(CliError::output),
            None => Err(CliError::Invalid(format!(
                "unknown pattern `{name}` (known: {})",
                patterns::PATTERN_NAMES.join(", ")
            ))),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn start(args: &NetArgs) -> Result<(Runtime, Snapshot, Supply), CliError> {
    let Loaded { net, storage, supply } = load::load(args.net.as_path(), args.triples.as_deref(), args.objects.as_deref(), args.supply.as_deref())?;
    let rt = Runtime::new(net).map_err(CliError::validation)?;
    let s0 = rt.initial_snapshot(storage)?;
    Ok((rt, s0, supply))
}

fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (rt, s0, supply) = start(&args.net)?;
    let (trace, end) = match args.seed {
        None => rt.run(&s0, &supply, args.max_steps)?,
        Some(seed) => random_run(&rt, &s0, &supply, args.max_steps, seed)?,
    };
    if let Some(seed) = args.seed {
        writeln!(out, "seed: {seed}").map_err(CliError::output)?;
    }
    let rendered = trace.render(&rt, &s0)?;
    write!(out, "{rendered}").map_err(CliError::output)?;
    writeln!(out, "steps: {}", trace.len()).map_err(CliError::output)?;
    writeln!(out, "final: {}", end.summary(rt.net())).map_err(CliError::output)?;
    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let write = |name: &str, text: String| {
            let p = dir.join(name);
            fs::write(&p, text).map_err(|e| CliError::io(&p, e))
        };
        write("metadata.ttl", end.storage.metadata.to_text())?;
        write("objects.json", end.storage.objects.to_json())?;
        write("trace.tsv", rendered)?;
    }
    Ok(())
}

/// Like [`Runtime::run`] but picks uniformly among the enabled pairs.
fn random_run(rt: &Runtime, s0: &Snapshot, supply: &Supply, max_steps: usize, seed: u64) -> Result<(Trace, Snapshot), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rr = supply.round_robin();
    let mut s = s0.clone();
    let mut trace = Trace::default();
    while trace.len() < max_steps {
        let mut enabled = rt.enabled(&s, &rr)?;
        if enabled.is_empty() {
            break;
        }
        enabled.sort();
        let (t, b) = enabled.swap_remove(rng.gen_range(0..enabled.len()));
        s = rt.fire(&t, &b, &s)?;
        rr.advance(rt.external_vars(&t)?);
        trace.steps.push(Step { transition: t, binding: b });
    }
    Ok((trace, s))
}

fn cmd_step(args: &NetArgs, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<(), CliError> {
    let (rt, s0, supply) = start(args)?;
    step::Session::new(&rt, s0, &supply).play(input, out)
}

fn cmd_explore(args: &ExploreArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (rt, s0, supply) = start(&args.net)?;
    let lts = rt.explore(&s0, &supply, &args.options())?;
    let reasons = lts.truncated.reasons();
    writeln!(out, "states: {}", lts.states.len()).map_err(CliError::output)?;
    writeln!(out, "edges: {}", lts.edges.len()).map_err(CliError::output)?;
    writeln!(out, "deadlocks: {}", lts.deadlocks().len()).map_err(CliError::output)?;
    writeln!(out, "truncated: {}", if reasons.is_empty() { "no".to_string() } else { reasons.join(", ") })
        .map_err(CliError::output)?;
    if let Some(path) = &args.dot {
        fs::write(path, lts.to_dot(rt.net())).map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}

fn cmd_reach(place: &str, args: &ExploreArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (rt, s0, supply) = start(&args.net)?;
    match rt.reachable_nonempty(&s0, place, &supply, &args.options())? {
        Reachability::Reachable(trace) => {
            writeln!(out, "reachable: {}", place).map_err(CliError::output)?;
            writeln!(out, "witness: [{}]", trace.transitions().join(", ")).map_err(CliError::output)?;
            write!(out, "{}", trace.render(&rt, &s0)?).map_err(CliError::output)?;
        }
        Reachability::NotReachable => writeln!(out, "not reachable: {place}").map_err(CliError::output)?,
        Reachability::Truncated(t) => {
            writeln!(out, "not reachable within bounds: {place} (hit {})", t.reasons().join(", "))
                .map_err(CliError::output)?
        }
    }
    Ok(())
}

fn cmd_lint(path: &std::path::Path, out: &mut dyn Write) -> Result<(), CliError> {
    let net = load::read_net(path)?;
    let errors = net.validate();
    for w in net.warnings() {
        writeln!(out, "warning: {w}").map_err(CliError::output)?;
    }
    if !errors.is_empty() {
        return Err(CliError::validation(errors));
    }
    writeln!(out, "ok: {} places, {} transitions", net.places.len(), net.transitions.len()).map_err(CliError::output)
}
