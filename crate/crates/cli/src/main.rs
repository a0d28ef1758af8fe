//! Command-line front end: parses inputs, runs the pipeline and writes
//! deterministic JSON reports or text tables.

mod cache;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use loopgroup_theta::Error;

#[derive(Parser, Debug)]
#[command(name = "loopgroup-theta", version, about = "Theta invariants of lattice towers from affine Kac-Moody representations")]
struct Cli {
    /// Directory for cached results of the expensive subcommands.
    #[arg(long, global = true, env = "LOOPGROUP_THETA_CACHE")]
    cache_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Invariants of a Euclidean lattice given as JSON {"gram": [[...]], "twist": "..."}.
    Lattice(LatticeArgs),
    /// Positive roots of the finite root system.
    Roots(AlgebraArgs),
    /// Affine Cartan data and affine roots up to the level bound.
    Affine(AlgebraArgs),
    /// Weights and multiplicities of the highest-weight module.
    Weights(AlgebraArgs),
    /// Exact truncation of the module: weight spaces, forms and integral bases.
    Rep(AlgebraArgs),
    /// The tower of twisted quotients attached to a group element.
    Bundle(BundleArgs),
    /// Strong summability reports for each epsilon and each t.
    ThetaFinite(ThetaArgs),
}

#[derive(Args, Debug)]
struct Output {
    /// Emit JSON instead of a text table.
    #[arg(long)]
    json: bool,
    /// Write the report to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct LatticeArgs {
    /// Lattice JSON file, or "-" for standard input.
    input: PathBuf,
    /// Rescaling t of the squared norm.
    #[arg(long = "t", default_value = "1")]
    t: String,
    #[arg(long, default_value = "1e-12")]
    tol: String,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct AlgebraArgs {
    /// Cartan type such as A1, C2, G2, or an explicit matrix "2,-1;-1,2".
    #[arg(long, default_value = "A1")]
    cartan: String,
    /// Dynkin labels of the highest weight, affine node last; default: basic level-1 weight.
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long, default_value_t = 4)]
    level_bound: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct BundleArgs {
    #[command(flatten)]
    algebra: AlgebraArgs,
    /// Group element, e.g. "chi(-a1,1);h(a1,2);eta(1/2)".
    #[arg(long, default_value = "eta(1/2)")]
    element: String,
}

#[derive(Args, Debug)]
struct ThetaArgs {
    #[command(flatten)]
    algebra: AlgebraArgs,
    #[arg(long, default_value = "eta(1/2)")]
    element: String,
    /// Comma-separated twists O(epsilon).
    #[arg(long, default_value = "0.1")]
    epsilon: String,
    /// Comma-separated rescalings t, fractions allowed.
    #[arg(long = "t", default_value = "1")]
    t: String,
    /// Required bound on the certified tail.
    #[arg(long, default_value = "1e-8")]
    tol: String,
    /// Levels evaluated exactly by enumeration; above them the analytic bound is used.
    #[arg(long, default_value_t = 6)]
    exact_levels: usize,
    /// Also write the per-level table as CSV to this file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn parse(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_) => 2,
            Error::TauOutOfRange(_) => 4,
            Error::AdmissibilityFailure(_) => 5,
            _ => 3,
        };
        Failure { code, message: e.to_string() }
    }
}

/// Rendered output and exit code of a finished subcommand.
pub struct Rendered {
    pub text: String,
    pub code: u8,
}

fn run(cli: &Cli) -> Result<Rendered, Failure> {
    let cache = cli.cache_dir.as_deref();
    match &cli.command {
        Command::Lattice(a) => commands::lattice(a),
        Command::Roots(a) => commands::roots(a),
        Command::Affine(a) => commands::affine(a),
        Command::Weights(a) => cache::cached(cache, "weights", a, || commands::weights(a)),
        Command::Rep(a) => cache::cached(cache, "rep", a, || commands::rep(a)),
        Command::Bundle(a) => cache::cached(cache, "bundle", a, || commands::bundle(a)),
        // The CSV side output is only produced by a fresh run.
        Command::ThetaFinite(a) if a.csv.is_some() => commands::theta_finite(a),
        Command::ThetaFinite(a) => cache::cached(cache, "theta-finite", a, || commands::theta_finite(a)),
    }
}

fn output_of(cli: &Cli) -> Option<&PathBuf> {
    match &cli.command {
        Command::Lattice(a) => a.output.out.as_ref(),
        Command::Roots(a) | Command::Affine(a) | Command::Weights(a) | Command::Rep(a) => a.output.out.as_ref(),
        Command::Bundle(a) => a.algebra.output.out.as_ref(),
        Command::ThetaFinite(a) => a.algebra.output.out.as_ref(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(r) => {
            let written = match output_of(&cli) {
                Some(path) => std::fs::write(path, &r.text).map_err(|e| format!("cannot write {}: {e}", path.display())),
                None => {
                    print!("{}", r.text);
                    Ok(())
                }
            };
            if let Err(msg) = written {
                eprintln!("error: {msg}");
                return ExitCode::from(3);
            }
            ExitCode::from(r.code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
