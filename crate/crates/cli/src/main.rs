/// `println!` that reports a closed stdout as an error instead of panicking.
macro_rules! outln {
    () => {
        $crate::output::emit("\n")?
    };
    ($($t:tt)*) => {
        $crate::output::emit(&format!("{}\n", format_args!($($t)*)))?
    };
}

macro_rules! out {
    ($($t:tt)*) => {
        $crate::output::emit(&format!($($t)*))?
    };
}

mod analysis;
mod output;
mod search;
mod sweep;
mod tables;
mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use povmsim_core::constructions::named_povm;
use povmsim_core::sdp::SolverOptions;
use povmsim_core::{NoiseModel, Povm, Tolerances};

use output::Format;

#[derive(Parser, Debug)]
#[command(name = "povmsim", version, about = "Projective simulability of quantum measurements")]
struct Cli {
    /// Feasibility and duality-gap tolerance of the conic solver.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
    /// Worker threads. POVMSIM_THREADS takes precedence when set.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Emit JSON.
    #[arg(long, global = true, conflicts_with = "csv")]
    json: bool,
    /// Emit CSV.
    #[arg(long, global = true)]
    csv: bool,
    /// Base seed for random initial POVMs.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Include the slow d = 4 rows in `tables`.
    #[arg(long, global = true)]
    long: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print a named POVM as JSON: sic2, sic3:θ, hesse, norrell, sic4, fsic2:d, fsic3:d.
    Construct {
        name: String,
        /// Write to this file instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check positivity, hermiticity and completeness; exits with 1 if invalid.
    Validate { povm: String },
    /// Decide the rank-vector criterion for the POVM itself.
    Feasibility {
        povm: String,
        /// Restrict to these rank vectors, e.g. "2,1,0;1,1,1".
        #[arg(long)]
        ranks: Option<String>,
    },
    /// Threshold visibility under depolarizing or worst-case noise.
    Visibility {
        povm: String,
        #[arg(long, value_enum, default_value_t = NoiseArg::Depol)]
        noise: NoiseArg,
        /// Try to read off a projective simulation model from the optimum.
        #[arg(long)]
        extract: bool,
        /// Write the extracted model as JSON.
        #[arg(long, requires = "extract")]
        model_out: Option<PathBuf>,
        /// Restrict to these rank vectors, e.g. "2,1,0;1,1,1".
        #[arg(long)]
        ranks: Option<String>,
    },
    /// Witness-ansatz bound for a rank-one POVM.
    Witness {
        povm: String,
        /// Rank vectors solved per package.
        #[arg(long, default_value_t = 50)]
        package_size: usize,
    },
    /// Dual witness operators of the visibility program.
    Certify {
        povm: String,
        #[arg(long, value_enum, default_value_t = NoiseArg::Depol)]
        noise: NoiseArg,
    },
    /// See-saw search for the most non-projective POVM.
    Search(search::SearchArgs),
    /// Threshold curves over a family of POVMs, as CSV by default.
    Sweep(sweep::SweepArgs),
    /// Recompute the published threshold and witness tables.
    Tables {
        /// JSON file of extra SIC fiducials (3a, 5a, 6a, ...).
        #[arg(long)]
        fiducials: Option<PathBuf>,
    },
    /// Check the analytic projective simulation models.
    Verify,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum NoiseArg {
    #[value(name = "depol", alias = "depolarizing")]
    Depol,
    #[value(name = "worst", alias = "worst-case")]
    Worst,
}

impl From<NoiseArg> for NoiseModel {
    fn from(n: NoiseArg) -> Self {
        match n {
            NoiseArg::Depol => NoiseModel::Depolarizing,
            NoiseArg::Worst => NoiseModel::WorstCase,
        }
    }
}

/// Settings shared by every subcommand.
pub struct Ctx {
    pub format: Format,
    pub solver: SolverOptions,
    pub seed: u64,
    pub long: bool,
}

/// Loads a POVM from a JSON file, or builds it from a name.
pub fn load_povm(arg: &str) -> Result<Povm> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {arg}"))?;
        let p = Povm::from_json(&text, &Tolerances::default()).with_context(|| format!("parsing {arg}"))?;
        if p.label().is_none() {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or(arg).to_string();
            return Ok(p.labeled(stem));
        }
        return Ok(p);
    }
    named_povm(arg).with_context(|| format!("'{arg}' is neither a file nor a known POVM name"))
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>> {
    match std::env::var("POVMSIM_THREADS") {
        Ok(s) if !s.trim().is_empty() => {
            let n: usize = s.trim().parse().with_context(|| format!("POVMSIM_THREADS={s} is not a number"))?;
            Ok(Some(n))
        }
        _ => Ok(flag),
    }
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(n) = thread_count(cli.threads)? {
        if n == 0 {
            bail!("thread count must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    if !(cli.tol > 0.0 && cli.tol < 1.0) {
        bail!("--tol must lie in (0, 1)");
    }
    let format = if cli.json {
        Format::Json
    } else if cli.csv {
        Format::Csv
    } else {
        Format::Text
    };
    let ctx = Ctx {
        format,
        solver: SolverOptions { feas_tol: cli.tol, gap_tol: cli.tol, ..Default::default() },
        seed: cli.seed,
        long: cli.long,
    };
    match cli.command {
        Command::Construct { name, output } => {
            let text = named_povm(&name)?.to_json();
            match output {
                Some(path) => std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?,
                None => outln!("{text}"),
            }
            Ok(true)
        }
        Command::Validate { povm } => analysis::validate(&ctx, &load_povm(&povm)?),
        Command::Feasibility { povm, ranks } => analysis::feasibility(&ctx, &load_povm(&povm)?, ranks.as_deref()),
        Command::Visibility { povm, noise, extract, model_out, ranks } => {
            analysis::visibility(&ctx, &load_povm(&povm)?, noise.into(), extract, model_out.as_deref(), ranks.as_deref())
        }
        Command::Witness { povm, package_size } => analysis::witness(&ctx, &load_povm(&povm)?, package_size),
        Command::Certify { povm, noise } => analysis::certify(&ctx, &load_povm(&povm)?, noise.into()),
        Command::Search(args) => search::run(&ctx, &args),
        Command::Sweep(args) => sweep::run(&ctx, &args),
        Command::Tables { fiducials } => tables::run(&ctx, fiducials.as_deref()),
        Command::Verify => verify::run(&ctx),
    }
}

fn broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| c.downcast_ref::<std::io::Error>().is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) if broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
