use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ncb_cli::commands::{self, RandomKind, Tolerances, EXIT_INVALID};

#[derive(Parser)]
#[command(name = "ncb", version, about = "Boundary representations and C*-envelopes of matrix operator systems")]
struct Cli {
    #[command(flatten)]
    tol: TolFlags,
    /// Output file (written atomically); stdout when omitted.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct TolFlags {
    /// Relative rank threshold for numerical linear algebra.
    #[arg(long, global = true, default_value = "1e-9")]
    tol_rank: f64,
    /// Strictness margin for peaking and norm certificates.
    #[arg(long, global = true, default_value = "1e-6")]
    tol_gap: f64,
    /// Duality-gap target of the semidefinite solver.
    #[arg(long, global = true, default_value = "1e-7")]
    sdp_eps: f64,
    /// Largest matrix level searched; defaults to (max n_k)².
    #[arg(long, global = true)]
    level_cap: Option<usize>,
    /// Random restarts per search.
    #[arg(long, global = true, default_value_t = 200)]
    budget: usize,
    /// Seed for every randomised step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Decomposition, boundary representations, boundary ideal and envelope.
    Analyze { input: String },
    /// Isomorphism of two reduced systems.
    Equiv { a: String, b: String },
    /// Envelope-only report.
    Envelope { input: String },
    /// Build an operator system from a parameterizing sequence.
    Build { input: String },
    /// Check and verify a nonreduced specification.
    Nonreduced { input: String },
    /// Paulsen's device of an operator space.
    Paulsen { input: String },
    /// Seeded random instance.
    Random {
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Block sizes of the Γ part, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        /// Block sizes of the Ω part (nonreduced kind).
        #[arg(long, value_delimiter = ',')]
        m: Vec<usize>,
        /// Source dimension; defaults to min(Σ n_k², 3).
        #[arg(long)]
        d: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Reduced,
    Nonreduced,
}

fn read_input(path: &str) -> std::io::Result<String> {
    if path == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        std::fs::read_to_string(path)
    }
}

fn write_output(path: Option<&Path>, text: &str) -> std::io::Result<()> {
    match path {
        None => std::io::stdout().write_all(text.as_bytes()),
        Some(p) => {
            let dir = p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(text.as_bytes())?;
            tmp.persist(p).map_err(|e| e.error)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let t = &cli.tol;
    let tol = Tolerances {
        tol_rank: t.tol_rank,
        tol_gap: t.tol_gap,
        sdp_eps: t.sdp_eps,
        level_cap: t.level_cap,
        budget: t.budget,
        seed: t.seed,
    };
    let read = |p: &str| read_input(p).map_err(|e| format!("cannot read {p}: {e}"));
    let outcome = match &cli.command {
        Command::Analyze { input } => read(input).map(|s| commands::cmd_analyze(&s, &tol)),
        Command::Envelope { input } => read(input).map(|s| commands::cmd_envelope(&s, &tol)),
        Command::Build { input } => read(input).map(|s| commands::cmd_build(&s, &tol)),
        Command::Nonreduced { input } => read(input).map(|s| commands::cmd_nonreduced(&s, &tol)),
        Command::Paulsen { input } => read(input).map(|s| commands::cmd_paulsen(&s, &tol)),
        Command::Equiv { a, b } => read(a).and_then(|x| read(b).map(|y| commands::cmd_equiv(&x, &y, &tol))),
        Command::Random { kind, n, m, d } => {
            let kind = match kind {
                KindArg::Reduced => RandomKind::Reduced,
                KindArg::Nonreduced => RandomKind::Nonreduced,
            };
            Ok(commands::cmd_random(kind, *d, n, m, &tol))
        }
    };
    let outcome = outcome.unwrap_or_else(|msg| commands::error_outcome(msg, EXIT_INVALID, &tol));
    if let Err(e) = write_output(cli.output.as_deref(), &outcome.document.to_json()) {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(EXIT_INVALID);
    }
    if outcome.exit != 0 {
        if let Some(errs) = outcome.document.payload.get("errors").and_then(|e| e.as_array()) {
            for e in errs {
                if let Some(m) = e.get("message").and_then(|m| m.as_str()) {
                    eprintln!("error: {m}");
                }
            }
        }
    }
    ExitCode::from(outcome.exit)
}
