use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use invforge::analysis;
use invforge::frontend::{parse_program, pretty_print};
use invforge::verifier::{InferConfig, Solver, SolverConfig};
use invforge::weakening::HeuristicLevel;
use invforge_cli::{load, render_report, render_summary, run_corpus, run_file, CliError, Format, RunConfig};

#[derive(Parser)]
#[command(name = "invforge", version, about = "Loop-invariant inference by postcondition weakening")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Infer loop invariants for the procedures of one file.
    Infer {
        file: PathBuf,
        #[command(flatten)]
        opts: Options,
        /// Print loop and occurrence tables as JSON on stderr.
        #[arg(long)]
        dump_analysis: bool,
    },
    /// Run inference over every .ivl file of a directory and print a summary.
    Corpus {
        dir: PathBuf,
        #[command(flatten)]
        opts: Options,
    },
    /// Parse a file, pretty-print it and check that the output parses back
    /// to the same program.
    Parse { file: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

#[derive(Args)]
struct Options {
    /// Procedure to analyse (repeatable); defaults to every procedure with a
    /// body, a postcondition and a loop.
    #[arg(long = "procedure", short = 'p')]
    procedures: Vec<String>,
    /// Heuristic preset: 0 none, 1 relaxation, 2 +aging, 3 +uncoupling and
    /// conjunct splitting, 4 +double uncoupling.
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=4),
          conflicts_with_all = ["relaxation", "aging", "uncoupling", "conjunct_split", "double_uncoupling"])]
    level: Option<u8>,
    #[arg(long)]
    relaxation: bool,
    #[arg(long)]
    aging: bool,
    #[arg(long)]
    uncoupling: bool,
    #[arg(long)]
    conjunct_split: bool,
    #[arg(long)]
    double_uncoupling: bool,
    /// Also split repeated loop targets; combines with any level.
    #[arg(long)]
    target_uncoupling: bool,
    /// Solver binary; falls back to $INVFORGE_SOLVER, then `z3`.
    #[arg(long)]
    solver: Option<String>,
    /// Per-query time budget in seconds.
    #[arg(long, default_value_t = 10.0)]
    timeout: f64,
    /// Candidates checked in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
    /// List every candidate, not only the verified ones.
    #[arg(long)]
    dump_candidates: bool,
    /// Save every SMT-LIB script sent to the solver in this directory.
    #[arg(long, num_args = 0..=1, default_missing_value = "invforge-scripts")]
    keep_scripts: Option<PathBuf>,
    /// Re-check failed candidates assuming the verified ones.
    #[arg(long)]
    assume_verified: bool,
    /// Prove declared loop invariants before assuming them.
    #[arg(long)]
    check_declared: bool,
}

impl Options {
    fn config(&self) -> Result<RunConfig, CliError> {
        if !self.timeout.is_finite() || self.timeout <= 0.0 {
            return Err(CliError::Usage("--timeout must be a positive number of seconds".into()));
        }
        let flags = [self.relaxation, self.aging, self.uncoupling, self.conjunct_split, self.double_uncoupling];
        let mut level = match self.level {
            Some(l) => HeuristicLevel::preset(l),
            None if flags.iter().any(|f| *f) => HeuristicLevel {
                relaxation: self.relaxation,
                aging: self.aging,
                uncoupling: self.uncoupling,
                conjunct_split: self.conjunct_split,
                double_uncoupling: self.double_uncoupling,
                target_uncoupling: false,
            },
            None => HeuristicLevel::default(),
        };
        level.target_uncoupling = self.target_uncoupling;
        Ok(RunConfig {
            procedures: self.procedures.clone(),
            infer: InferConfig {
                level,
                jobs: self.jobs.max(1),
                assume_verified: self.assume_verified,
                check_declared: self.check_declared,
            },
            solver: SolverConfig {
                path: SolverConfig::resolve(self.solver.as_deref()),
                budget: Duration::from_secs_f64(self.timeout),
                keep_scripts: self.keep_scripts.clone(),
            },
            format: match self.format {
                FormatArg::Text => Format::Text,
                FormatArg::Json => Format::Json,
            },
            dump_candidates: self.dump_candidates,
        })
    }
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize")
}

fn cmd_infer(file: &Path, opts: &Options, dump_analysis: bool) -> Result<u8, CliError> {
    let config = opts.config()?;
    if dump_analysis {
        let (_, program) = load(file)?;
        for p in program.procedures.iter().filter(|p| p.body.is_some()) {
            if let Ok(d) = analysis::dump(&program, p) {
                eprintln!("{}", json(&d));
            }
        }
    }
    let solver = Solver::new(config.solver.clone());
    let reports = run_file(file, &config, &solver)?;
    match config.format {
        Format::Json => println!("{}", json(&reports)),
        Format::Text => {
            for r in &reports {
                print!("{}", render_report(r, config.dump_candidates));
            }
        }
    }
    if let Some(r) = reports.iter().find(|r| r.has_error()) {
        let msg = r.candidates.iter().find_map(|c| c.diagnostic.clone()).unwrap_or_default();
        eprintln!("invforge: solver error in {}: {msg}", r.procedure);
        return Ok(3);
    }
    Ok(if reports.iter().all(|r| r.verified().next().is_some()) { 0 } else { 1 })
}

fn cmd_corpus(dir: &Path, opts: &Options) -> Result<u8, CliError> {
    let config = opts.config()?;
    if !dir.is_dir() {
        return Err(CliError::Usage(format!("{} is not a directory", dir.display())));
    }
    let rows = run_corpus(dir, &config)?;
    match config.format {
        Format::Json => println!("{}", json(&rows)),
        Format::Text => print!("{}", render_summary(&rows)),
    }
    let operational = rows
        .iter()
        .any(|r| r.error.as_deref().is_some_and(|e| e.contains("solver")));
    Ok(if operational { 3 } else { 0 })
}

fn cmd_parse(file: &Path) -> Result<u8, CliError> {
    let (_, program) = load(file)?;
    let printed = pretty_print(&program);
    print!("{printed}");
    match parse_program(&printed) {
        Ok(again) if again == program => Ok(0),
        Ok(_) => {
            eprintln!("invforge: printed program parses to a different tree");
            Ok(1)
        }
        Err(e) => {
            eprintln!("invforge: printed program does not parse: {e}");
            Ok(1)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Infer { file, opts, dump_analysis } => cmd_infer(file, opts, *dump_analysis),
        Command::Corpus { dir, opts } => cmd_corpus(dir, opts),
        Command::Parse { file } => cmd_parse(file),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("invforge: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
