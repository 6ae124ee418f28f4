//! Driver behind the `invforge` binary: loading files, running inference over
//! one file or a directory, and rendering reports.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use invforge::analysis::{all_loops, max_nesting};
use invforge::frontend::{parse_program, ParseError, Program, Type};
use invforge::verifier::{
    default_procedures, infer, CandidateStatus, InferConfig, InferError, InferenceReport, Solver,
    SolverConfig,
};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Procedures to analyse; empty means every procedure with a body, a
    /// postcondition and a loop.
    pub procedures: Vec<String>,
    pub infer: InferConfig,
    pub solver: SolverConfig,
    pub format: Format,
    /// List every candidate in text output, not only the verified ones.
    pub dump_candidates: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            procedures: Vec::new(),
            infer: InferConfig::default(),
            solver: SolverConfig::default(),
            format: Format::Text,
            dump_candidates: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}:{source}")]
    Parse { path: String, source: ParseError },
    #[error("{path}: {source}")]
    Infer { path: String, source: InferError },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Read { .. } | CliError::Parse { .. } | CliError::Usage(_) => 2,
            CliError::Infer { source: InferError::Solver(_), .. } => 3,
            CliError::Infer { source: InferError::Pool(_), .. } => 3,
            CliError::Infer { .. } => 2,
        }
    }
}

pub fn read_source(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|source| CliError::Read { path: path.display().to_string(), source })
}

pub fn load(path: &Path) -> Result<(String, Program), CliError> {
    let src = read_source(path)?;
    let program = parse_program(&src)
        .map_err(|source| CliError::Parse { path: path.display().to_string(), source })?;
    Ok((src, program))
}

fn selected<'p>(program: &'p Program, config: &RunConfig) -> Result<Vec<&'p str>, CliError> {
    if config.procedures.is_empty() {
        return Ok(default_procedures(program).into_iter().map(|p| p.name.as_str()).collect());
    }
    config
        .procedures
        .iter()
        .map(|name| {
            program
                .procedure(name)
                .map(|p| p.name.as_str())
                .ok_or_else(|| CliError::Usage(format!("no procedure named `{name}`")))
        })
        .collect()
}

/// Runs inference on every selected procedure of one file.
pub fn run_file(path: &Path, config: &RunConfig, solver: &Solver) -> Result<Vec<InferenceReport>, CliError> {
    let (_, program) = load(path)?;
    selected(&program, config)?
        .into_iter()
        .map(|name| {
            infer(&program, name, &config.infer, solver)
                .map_err(|source| CliError::Infer { path: path.display().to_string(), source })
        })
        .collect()
}

/// One line of the corpus summary table.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct CorpusSummaryRow {
    pub file: String,
    pub procedure: String,
    /// Non-blank lines in the whole file.
    pub loc_file: usize,
    /// Non-blank lines in the procedure declaration.
    pub loc_procedure: usize,
    pub loops: usize,
    pub max_nesting: usize,
    /// Variables modified by some loop, split into scalars and maps.
    pub modified_scalar: usize,
    pub modified_map: usize,
    pub candidates: usize,
    pub verified: usize,
    pub unknowns: usize,
    pub wall_seconds: f64,
    /// Set when the file or procedure could not be processed.
    pub error: Option<String>,
}

fn loc(text: &str) -> usize {
    text.lines().filter(|l| !l.trim().is_empty()).count()
}

fn structure_row(file: &str, src: &str, program: &Program, procedure: &str) -> CorpusSummaryRow {
    let mut row = CorpusSummaryRow {
        file: file.to_string(),
        procedure: procedure.to_string(),
        loc_file: loc(src),
        loc_procedure: 0,
        loops: 0,
        max_nesting: 0,
        modified_scalar: 0,
        modified_map: 0,
        candidates: 0,
        verified: 0,
        unknowns: 0,
        wall_seconds: 0.0,
        error: None,
    };
    let Some(proc) = program.procedure(procedure) else { return row };
    row.loc_procedure = src.get(proc.span.start..proc.span.end).map(loc).unwrap_or(0);
    if let Ok(loops) = all_loops(program, proc) {
        row.loops = loops.len();
        row.max_nesting = max_nesting(&loops);
        let modified: BTreeSet<&String> = loops.iter().flat_map(|l| &l.targets).collect();
        let scope = invforge::frontend::Scope::procedure(program, proc);
        for v in modified {
            match scope.lookup(v) {
                Some(Type::Map) => row.modified_map += 1,
                Some(_) => row.modified_scalar += 1,
                None => {}
            }
        }
    }
    row
}

/// `.ivl` files directly inside `dir`, sorted by name.
pub fn corpus_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = std::fs::read_dir(dir)
        .map_err(|source| CliError::Read { path: dir.display().to_string(), source })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "ivl"))
        .collect();
    files.sort();
    Ok(files)
}

/// Runs inference over every `.ivl` file in `dir`. Failures are recorded in
/// the affected rows and do not stop the run.
pub fn run_corpus(dir: &Path, config: &RunConfig) -> Result<Vec<CorpusSummaryRow>, CliError> {
    let solver = Solver::new(config.solver.clone());
    let mut rows = Vec::new();
    for path in corpus_files(dir)? {
        let file = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
        let (src, program) = match load(&path) {
            Ok(x) => x,
            Err(e) => {
                let mut row = structure_row(&file, "", &Program::default(), "");
                row.error = Some(e.to_string());
                rows.push(row);
                continue;
            }
        };
        let names = match selected(&program, config) {
            Ok(n) => n,
            Err(e) => {
                let mut row = structure_row(&file, &src, &program, "");
                row.error = Some(e.to_string());
                rows.push(row);
                continue;
            }
        };
        for name in names {
            let mut row = structure_row(&file, &src, &program, name);
            let start = Instant::now();
            match infer(&program, name, &config.infer, &solver) {
                Ok(report) => {
                    row.candidates = report.candidates.len();
                    row.verified = report.count(CandidateStatus::Verified);
                    row.unknowns = report.count(CandidateStatus::Unknown);
                    if let Some(c) = report.candidates.iter().find(|c| c.status == CandidateStatus::Error) {
                        row.error = c.diagnostic.clone();
                    }
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row.wall_seconds = start.elapsed().as_secs_f64();
            rows.push(row);
        }
    }
    Ok(rows)
}

fn status_word(s: CandidateStatus) -> &'static str {
    match s {
        CandidateStatus::Verified => "verified",
        CandidateStatus::Rejected => "rejected",
        CandidateStatus::Unknown => "unknown",
        CandidateStatus::Error => "error",
        CandidateStatus::Discarded => "discarded",
    }
}

/// Human-readable rendering of one inference report.
pub fn render_report(report: &InferenceReport, all_candidates: bool) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "procedure {}: {} candidates, {} verified, {} unknown, {} rejected ({:.2} s, {} solver queries)",
        report.procedure,
        report.candidates.len(),
        report.count(CandidateStatus::Verified),
        report.count(CandidateStatus::Unknown),
        report.count(CandidateStatus::Rejected),
        report.wall_seconds,
        report.solver_queries,
    );
    for d in report.declared.iter().filter(|d| !d.kept) {
        let _ = writeln!(s, "  dropped declared invariant at {}: {}", d.loop_id, d.formula);
    }
    for c in &report.candidates {
        if !all_candidates && c.status != CandidateStatus::Verified {
            continue;
        }
        let _ = write!(s, "  [{:>3}] {:<9} {}", c.index, status_word(c.status), c.formula);
        if !c.loops.is_empty() {
            let loops: Vec<String> = c.loops.iter().map(|l| l.to_string()).collect();
            let _ = write!(s, "   @ {}", loops.join(", "));
        }
        if c.assisted {
            s.push_str("   (assisted)");
        }
        if let Some(d) = &c.diagnostic {
            let _ = write!(s, "   ({d})");
        }
        s.push('\n');
    }
    s
}

const COLUMNS: [&str; 10] =
    ["file", "procedure", "LOC", "# lp.", "m.v.", "cnd.", "inv.", "unk.", "T.", "error"];

fn cells(r: &CorpusSummaryRow) -> [String; 10] {
    [
        r.file.clone(),
        r.procedure.clone(),
        format!("{} ({})", r.loc_file, r.loc_procedure),
        format!("{} ({})", r.loops, r.max_nesting),
        format!("{}/{}", r.modified_scalar, r.modified_map),
        r.candidates.to_string(),
        r.verified.to_string(),
        r.unknowns.to_string(),
        format!("{:.2}", r.wall_seconds),
        r.error.clone().unwrap_or_default(),
    ]
}

/// Aligned text table of corpus rows.
pub fn render_summary(rows: &[CorpusSummaryRow]) -> String {
    let body: Vec<[String; 10]> = rows.iter().map(cells).collect();
    let mut width = COLUMNS.map(str::len);
    for r in &body {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &[String]| -> String {
        let mut out = String::new();
        for (k, (c, w)) in cells.iter().zip(width).enumerate() {
            if k > 0 {
                out.push_str("  ");
            }
            let _ = write!(out, "{c:<w$}");
        }
        out.trim_end().to_string()
    };
    let mut s = line(&COLUMNS.map(String::from));
    s.push('\n');
    for r in &body {
        s.push_str(&line(r));
        s.push('\n');
    }
    s
}

/// Parses a table produced by [`render_summary`] back into rows. Seconds
/// come back with the two decimals the table shows.
pub fn parse_summary(text: &str) -> Option<Vec<CorpusSummaryRow>> {
    let mut lines = text.lines();
    let header = lines.next()?;
    let mut starts = Vec::new();
    let mut from = 0;
    for c in COLUMNS {
        let at = header[from..].find(c)? + from;
        starts.push(at);
        from = at + c.len();
    }
    let pair = |s: &str, sep: char| -> Option<(usize, usize)> {
        let (a, b) = s.split_once(sep)?;
        Some((a.trim().parse().ok()?, b.trim().trim_end_matches(')').trim().parse().ok()?))
    };
    lines
        .map(|l| {
            let cell = |k: usize| -> &str {
                let end = starts.get(k + 1).copied().unwrap_or(l.len()).min(l.len());
                l.get(starts[k].min(l.len())..end).unwrap_or("").trim()
            };
            let (loc_file, loc_procedure) = pair(cell(2), '(')?;
            let (loops, max_nesting) = pair(cell(3), '(')?;
            let (modified_scalar, modified_map) = pair(cell(4), '/')?;
            let error = Some(cell(9).to_string()).filter(|e| !e.is_empty());
            Some(CorpusSummaryRow {
                file: cell(0).to_string(),
                procedure: cell(1).to_string(),
                loc_file,
                loc_procedure,
                loops,
                max_nesting,
                modified_scalar,
                modified_map,
                candidates: cell(5).parse().ok()?,
                verified: cell(6).parse().ok()?,
                unknowns: cell(7).parse().ok()?,
                wall_seconds: cell(8).parse().ok()?,
                error,
            })
        })
        .collect()
}
