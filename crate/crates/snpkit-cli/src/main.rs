//! `snpkit`: command-line front end.
//!
//! Exit codes: 0 contained / found / model, 1 not contained / absent / no
//! model, 2 unknown (budget), 3 other input errors, 64 usage, 65 parse
//! errors, 66 unreadable input, 73 unwritable output, 70 internal errors.

mod commands;

use clap::{Args, Parser, Subcommand, ValueEnum};
use snpkit::Budget;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "snpkit", version, about = "Containment of guarded monotone SNP sentences")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// Worker threads; 1 is the deterministic reference mode.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Caps as one count for all resources or `nodes=N,structures=N,clauses=N`.
    /// Applied after SNPKIT_BUDGET.
    #[arg(long, global = true, value_name = "SPEC")]
    budget: Option<String>,
    /// Remove every resource cap.
    #[arg(long, global = true)]
    paper_scale: bool,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Shorthand for `--format json`.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum MethodArg {
    Auto,
    Recolouring,
    Oracle,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Syntactic class and parameters of a sentence.
    CheckSyntax { file: PathBuf },
    /// Parameters ht, lh, wd, ar as JSON.
    Stats { file: PathBuf },
    /// Decide whether a structure satisfies a sentence and print a witness.
    Modelcheck {
        #[arg(long)]
        sentence: PathBuf,
        #[arg(long)]
        structure: PathBuf,
    },
    /// Split into connected sentences: one file per disjunct and a JSON-lines manifest.
    Decompose {
        file: PathBuf,
        /// Output directory (default: next to the input).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 64)]
        max_disjuncts: usize,
    },
    /// Ramsey-lifting transform.
    Delta {
        file: PathBuf,
        #[arg(long)]
        max_clause_vars: Option<usize>,
        /// Cap on generated clauses.
        #[arg(long)]
        max_clauses: Option<u64>,
        #[arg(long)]
        no_subsume: bool,
        /// Sentence output (default: `<input>.delta.snp`).
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Search for a recolouring between two sentences.
    Recolour {
        #[arg(long)]
        phi1: PathBuf,
        #[arg(long)]
        phi2: PathBuf,
        /// Re-check a found map with the brute-force extension condition.
        #[arg(long)]
        naive_iii: bool,
        /// Colour size bound (default: the larger arity).
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_name = "FILE")]
        emit_map: Option<PathBuf>,
    },
    /// Decide fm(phi1) ⊆ fm(phi2).
    Contain {
        #[arg(long)]
        phi1: PathBuf,
        #[arg(long)]
        phi2: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
        /// Largest structure the counterexample search tries.
        #[arg(long, default_value_t = 4)]
        max_size: usize,
        #[arg(long, default_value_t = 64)]
        max_disjuncts: usize,
        /// Skip the transform; only a found recolouring counts.
        #[arg(long)]
        raw: bool,
    },
    /// Exhaustive counterexample search up to a size bound.
    Falsify {
        #[arg(long)]
        phi1: PathBuf,
        #[arg(long)]
        phi2: PathBuf,
        #[arg(long, default_value_t = 4)]
        max_size: usize,
    },
    /// Transform into a sentence with complements and guarded pieces.
    Omega {
        file: PathBuf,
        #[arg(long)]
        max_clause_vars: Option<usize>,
        #[arg(long)]
        no_subsume: bool,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Transform into a sentence over ordered guarded colours.
    OmegaPrime {
        file: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Search for a recolouring between ordered guarded colours.
    Grecolour {
        #[arg(long)]
        phi1: PathBuf,
        #[arg(long)]
        phi2: PathBuf,
        /// Skeleton size bound.
        #[arg(long)]
        max_size: Option<usize>,
    },
}

/// Settings shared by every subcommand.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub budget: Budget,
    pub format: Format,
}

/// A failure with its exit code and a stable machine-readable name.
#[derive(Debug)]
pub struct Failure {
    pub exit: u8,
    pub code: &'static str,
    pub message: String,
}

impl Failure {
    pub fn new(exit: u8, code: &'static str, message: impl Into<String>) -> Failure {
        Failure { exit, code, message: message.into() }
    }
}

impl From<snpkit::Error> for Failure {
    fn from(e: snpkit::Error) -> Failure {
        use snpkit::Error as E;
        let (exit, code) = match &e {
            E::Parse { .. } | E::UndeclaredSymbol(_) | E::ArityMismatch { .. } => (65, "parse"),
            E::Budget { .. } => (2, "budget"),
            E::Internal(_) => (70, "internal"),
            E::SignatureMismatch(_) => (3, "signature"),
            E::Precondition(_) => (3, "precondition"),
            E::Unsupported(_) => (3, "unsupported"),
        };
        Failure::new(exit, code, e.to_string())
    }
}

fn budget_for(g: &Global) -> Result<Budget, Failure> {
    let mut b = Budget::default();
    if let Ok(spec) = std::env::var("SNPKIT_BUDGET") {
        b = Budget::parse_override(b, &spec).map_err(|e| Failure::new(64, "usage", format!("SNPKIT_BUDGET: {e}")))?;
    }
    if let Some(spec) = &g.budget {
        b = Budget::parse_override(b, spec).map_err(|e| Failure::new(64, "usage", format!("--budget: {e}")))?;
    }
    if g.paper_scale {
        eprintln!("warning: --paper-scale removes every resource cap; running time and memory can grow doubly exponentially");
        b = Budget::UNLIMITED;
    }
    Ok(b)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let g = &cli.global;
    if g.jobs == 0 {
        return Err(Failure::new(64, "usage", "--jobs must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(g.jobs)
        .build_global()
        .map_err(|e| Failure::new(70, "internal", e.to_string()))?;
    let default_format = if matches!(cli.command, Command::Stats { .. }) { Format::Json } else { Format::Text };
    let format = if g.json { Format::Json } else { g.format.unwrap_or(default_format) };
    let mut cfg = RunConfig { budget: budget_for(g)?, format };
    use commands as c;
    match cli.command {
        Command::CheckSyntax { file } => c::check_syntax(&cfg, &file),
        Command::Stats { file } => c::stats(&cfg, &file),
        Command::Modelcheck { sentence, structure } => c::modelcheck(&cfg, &sentence, &structure),
        Command::Decompose { file, out_dir, max_disjuncts } => c::decompose(&cfg, &file, out_dir, max_disjuncts),
        Command::Delta { file, max_clause_vars, max_clauses, no_subsume, out } => {
            if let Some(m) = max_clauses {
                cfg.budget.clauses = m;
            }
            c::delta(&cfg, &file, max_clause_vars, !no_subsume, out)
        }
        Command::Recolour { phi1, phi2, naive_iii, n, emit_map } => c::recolour(&cfg, &phi1, &phi2, naive_iii, n, emit_map),
        Command::Contain { phi1, phi2, method, max_size, max_disjuncts, raw } => {
            c::contain(&cfg, &phi1, &phi2, method, max_size, max_disjuncts, raw)
        }
        Command::Falsify { phi1, phi2, max_size } => c::falsify(&cfg, &phi1, &phi2, max_size),
        Command::Omega { file, max_clause_vars, no_subsume, out } => c::omega(&cfg, &file, max_clause_vars, !no_subsume, out),
        Command::OmegaPrime { file, n, out } => c::omega_prime(&cfg, &file, n, out),
        Command::Grecolour { phi1, phi2, max_size } => c::grecolour(&cfg, &phi1, &phi2, max_size),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            let line = serde_json::json!({
                "schema": commands::schema_id("error"),
                "error": { "code": f.code, "exit": f.exit, "message": f.message },
            });
            eprintln!("{line}");
            ExitCode::from(f.exit)
        }
    }
}
