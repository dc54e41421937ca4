//! `gmn`: genuine multiparticle negativity from the command line.

use std::error::Error;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gmn_robustness::analysis::{write_csv, DEFAULT_SMIN, DEFAULT_STEPS};
use gmn_robustness::states::{format_state, read_state_file};
use gmn_robustness::{
    analysis, apply_local_channel, genuine_negativity, robustness_report, summarize,
    summarize_included, sweep_many, uniform_grid, ChannelKind, ComplexMatrix, EnsembleSummary,
    Generator, GmnOptions, NamedState, StateData, SweepInput, SweepSeries,
};

type Result<T> = std::result::Result<T, Box<dyn Error>>;

#[derive(Parser)]
#[command(
    name = "gmn",
    version,
    about = "Genuine multiparticle negativity under local noise"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute E for one state, optionally after noise.
    Monotone(MonotoneArgs),
    /// Sweep states over a grid of s and write E and eta as CSV.
    Sweep(SweepArgs),
    /// Sweep a random ensemble and write its statistics as CSV.
    Ensemble(EnsembleArgs),
    /// Write a random state in the state-file format.
    Genstate(GenstateArgs),
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Relative duality gap tolerance.
    #[arg(long, default_value_t = 1e-8)]
    gap_tol: f64,
    /// Relative primal and dual residual tolerance.
    #[arg(long, default_value_t = 1e-8)]
    feas_tol: f64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
}

impl SolverArgs {
    fn options(&self) -> GmnOptions {
        let mut o = GmnOptions::default();
        o.solver.gap_tol = self.gap_tol;
        o.solver.feasibility_tol = self.feas_tol;
        o.solver.max_iterations = self.max_iter;
        o
    }
}

#[derive(Args)]
struct GridArgs {
    /// Noise channel: ad, pd or dp.
    #[arg(long, value_parser = parse_channel)]
    channel: ChannelKind,
    #[arg(long, default_value_t = DEFAULT_SMIN)]
    smin: f64,
    /// Defaults to 1.0 for ad and pd, 0.5 for dp.
    #[arg(long)]
    smax: Option<f64>,
    /// Number of grid points, ends included.
    #[arg(long, default_value_t = DEFAULT_STEPS)]
    steps: usize,
}

impl GridArgs {
    fn grid(&self) -> Result<Vec<f64>> {
        let smax = self
            .smax
            .unwrap_or_else(|| analysis::default_smax(self.channel));
        Ok(uniform_grid(self.smin, smax, self.steps)?)
    }
}

#[derive(Args)]
struct MonotoneArgs {
    /// Named state, file:PATH, haar:N or wgs:N.
    #[arg(long)]
    state: String,
    /// Apply this channel before evaluating.
    #[arg(long, value_parser = parse_channel, requires = "s")]
    channel: Option<ChannelKind>,
    #[arg(long)]
    s: Option<f64>,
    /// Seed for haar:N and wgs:N.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Named state, file:PATH, haar:N or wgs:N. Repeatable.
    #[arg(long = "state", required_unless_present = "ensembles")]
    states: Vec<String>,
    /// Ensemble to add as summary rows, as haar:N or wgs:N. Repeatable.
    #[arg(long = "ensemble", value_name = "GEN:N")]
    ensembles: Vec<String>,
    #[command(flatten)]
    grid: GridArgs,
    /// Members per ensemble.
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Also write one row per ensemble member and grid point.
    #[arg(long)]
    members: bool,
    /// Keep ensemble statistics when 5% or more of the members are excluded.
    #[arg(long)]
    lenient: bool,
    /// Print the ranking by eta at each grid point to stderr.
    #[arg(long)]
    rank: bool,
    /// CSV path; stdout when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Copy, Clone, ValueEnum)]
enum Kind {
    Haar,
    Wgs,
}

impl From<Kind> for Generator {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Haar => Generator::HaarRandom,
            Kind::Wgs => Generator::WeightedGraph,
        }
    }
}

#[derive(Args)]
struct EnsembleArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    members: bool,
    #[arg(long)]
    lenient: bool,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct GenstateArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Ensemble member index; member 0 is what haar:N and wgs:N select.
    #[arg(long, default_value_t = 0)]
    index: u64,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn parse_channel(s: &str) -> std::result::Result<ChannelKind, String> {
    s.parse().map_err(|e: gmn_robustness::Error| e.to_string())
}

fn parse_generator(spec: &str) -> Result<(Generator, usize)> {
    let (name, n) = spec
        .split_once(':')
        .ok_or_else(|| format!("ensemble '{spec}' must look like haar:N or wgs:N"))?;
    let generator = match name {
        "haar" => Generator::HaarRandom,
        "wgs" => Generator::WeightedGraph,
        other => return Err(format!("unknown generator '{other}' (expected haar or wgs)").into()),
    };
    let n = n
        .parse()
        .map_err(|_| format!("ensemble '{spec}': bad qubit count '{n}'"))?;
    Ok((generator, n))
}

/// Resolves a state selector to a labelled initial state.
fn resolve_state(selector: &str, seed: u64) -> Result<SweepInput> {
    if let Some(path) = selector.strip_prefix("file:") {
        let data = read_state_file(Path::new(path)).map_err(|e| format!("{path}: {e}"))?;
        return Ok(SweepInput::new(selector, data.density()?, data.nqubits()));
    }
    if selector.starts_with("haar:") || selector.starts_with("wgs:") {
        let (generator, n) = parse_generator(selector)?;
        return Ok(SweepInput::pure(selector, &generator.member(n, seed, 0)?)?);
    }
    let named: NamedState = selector.parse()?;
    Ok(SweepInput::pure(
        selector,
        &gmn_robustness::named_state(named)?,
    )?)
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory, or to stdout when no path is given.
fn emit(path: Option<&Path>, contents: &str) -> Result<()> {
    let Some(path) = path else {
        // A reader that stops early, such as `head`, is not an error.
        return match std::io::stdout().lock().write_all(contents.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
            _ => Ok(()),
        };
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path)
        .map_err(|e| format!("{}: {}", path.display(), e.error))?;
    Ok(())
}

/// Ensemble size, seed and exclusion policy shared by `sweep` and `ensemble`.
#[derive(Clone, Copy)]
struct Sampling {
    count: usize,
    seed: u64,
    lenient: bool,
}

fn run_ensemble(
    generator: Generator,
    n: usize,
    sampling: &Sampling,
    kind: ChannelKind,
    grid: &[f64],
    options: &GmnOptions,
) -> Result<EnsembleSummary> {
    let Sampling {
        count,
        seed,
        lenient,
    } = *sampling;
    if count < 2 {
        return Err(format!("ensemble needs at least 2 members, got {count}").into());
    }
    let label = generator.label(n);
    let inputs = (0..count)
        .map(|i| {
            SweepInput::pure(
                format!("{label}#{i}"),
                &generator.member(n, seed, i as u64)?,
            )
        })
        .collect::<gmn_robustness::Result<Vec<_>>>()?;
    let members = sweep_many(&inputs, kind, grid, options)?;
    let summary = if lenient {
        summarize_included(generator, n, seed, members)?
    } else {
        summarize(generator, n, seed, members)?
    };
    if summary.excluded > 0 {
        eprintln!(
            "{label}: {} of {count} members excluded {:?}",
            summary.excluded, summary.excluded_members
        );
    }
    Ok(summary)
}

fn monotone(args: &MonotoneArgs) -> Result<()> {
    let input = resolve_state(&args.state, args.seed)?;
    let rho: ComplexMatrix = match (args.channel, args.s) {
        (Some(kind), Some(s)) => apply_local_channel(&input.rho0, kind, s, input.nqubits)?,
        (None, Some(_)) => return Err("--s needs --channel".into()),
        _ => input.rho0.clone(),
    };
    let r = genuine_negativity(&rho, input.nqubits, &args.solver.options())?;
    let certificate = if r.certificate_ok {
        "ok".to_string()
    } else {
        format!("FAILED ({})", r.diagnostics.join("; "))
    };
    let report = format!(
        "E = {:.6}\nobjective = {:.9}\ncertificate: {certificate}\n\
         solver: {} form, {:?}, {} iterations, gap {:.1e}\n",
        r.value,
        r.objective,
        r.solver.formulation,
        r.solver.status,
        r.solver.iterations,
        r.solver.gap
    );
    emit(None, &report)?;
    if !r.certificate_ok {
        return Err("certificate verification failed".into());
    }
    Ok(())
}

fn check_all(series: &[SweepSeries]) -> Result<()> {
    for s in series {
        s.check()?;
    }
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let kind = args.grid.channel;
    let grid = args.grid.grid()?;
    let options = args.solver.options();
    let inputs = args
        .states
        .iter()
        .map(|s| resolve_state(s, args.seed))
        .collect::<Result<Vec<_>>>()?;
    let series = sweep_many(&inputs, kind, &grid, &options)?;
    check_all(&series)?;
    let sampling = Sampling {
        count: args.count,
        seed: args.seed,
        lenient: args.lenient,
    };
    let summaries = args
        .ensembles
        .iter()
        .map(|spec| {
            let (generator, n) = parse_generator(spec)?;
            run_ensemble(generator, n, &sampling, kind, &grid, &options)
        })
        .collect::<Result<Vec<_>>>()?;
    if args.rank {
        eprint!("{}", robustness_report(&series, &summaries)?.to_table());
    }
    emit(
        args.output.as_deref(),
        &write_csv(&series, &summaries, args.members),
    )
}

fn ensemble(args: &EnsembleArgs) -> Result<()> {
    let grid = args.grid.grid()?;
    let summary = run_ensemble(
        args.kind.into(),
        args.n,
        &Sampling {
            count: args.count,
            seed: args.seed,
            lenient: args.lenient,
        },
        args.grid.channel,
        &grid,
        &args.solver.options(),
    )?;
    emit(
        args.output.as_deref(),
        &write_csv(&[], &[summary], args.members),
    )
}

fn genstate(args: &GenstateArgs) -> Result<()> {
    let psi = Generator::from(args.kind).member(args.n, args.seed, args.index)?;
    emit(args.output.as_deref(), &format_state(&StateData::Pure(psi)))
}

/// Sizes the rayon pool from `GMN_WORKERS` when set.
fn configure_workers() -> Result<()> {
    if let Ok(v) = std::env::var("GMN_WORKERS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| format!("GMN_WORKERS must be a positive integer, got '{v}'"))?;
        if n == 0 {
            return Err("GMN_WORKERS must be a positive integer, got 0".into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_workers().and_then(|()| match &cli.command {
        Command::Monotone(a) => monotone(a),
        Command::Sweep(a) => sweep(a),
        Command::Ensemble(a) => ensemble(a),
        Command::Genstate(a) => genstate(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gmn: {e}");
            ExitCode::FAILURE
        }
    }
}
