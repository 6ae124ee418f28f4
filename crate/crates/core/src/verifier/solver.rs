//! Driver for an external SMT solver speaking SMT-LIB 2 on stdin/stdout.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Environment variable naming the solver binary.
pub const SOLVER_ENV: &str = "INVFORGE_SOLVER";

pub const DEFAULT_BUDGET: Duration = Duration::from_secs(10);

/// Extra time allowed for follow-up queries after the main answer.
const FOLLOW_UP: Duration = Duration::from_secs(2);

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UnknownReason {
    Timeout,
    Incomplete { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum SolverVerdict {
    /// The negated condition is unsatisfiable.
    Valid,
    /// Counterexample model as printed by the solver.
    Invalid { model: String },
    Unknown { reason: UnknownReason },
}

impl SolverVerdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, SolverVerdict::Valid)
    }

    pub fn label(&self) -> &'static str {
        match self {
            SolverVerdict::Valid => "valid",
            SolverVerdict::Invalid { .. } => "invalid",
            SolverVerdict::Unknown { .. } => "unknown",
        }
    }
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("cannot start solver `{path}`: {source}")]
    Spawn { path: String, source: std::io::Error },
    #[error("solver i/o failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("unexpected solver output: {0}")]
    Protocol(String),
    #[error("cannot build query: {0}")]
    Encoding(String),
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub path: String,
    pub budget: Duration,
    /// Directory receiving a copy of every script sent.
    pub keep_scripts: Option<PathBuf>,
}

impl SolverConfig {
    /// Explicit path, else `$INVFORGE_SOLVER`, else `z3` on the `PATH`.
    pub fn resolve(explicit: Option<&str>) -> String {
        explicit
            .map(str::to_string)
            .or_else(|| std::env::var(SOLVER_ENV).ok().filter(|s| !s.is_empty()))
            .unwrap_or_else(|| "z3".to_string())
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { path: SolverConfig::resolve(None), budget: DEFAULT_BUDGET, keep_scripts: None }
    }
}

/// Runs one solver process per query and caches answers by script hash.
pub struct Solver {
    config: SolverConfig,
    cache: Mutex<HashMap<String, SolverVerdict>>,
    queries: Mutex<usize>,
}

impl Solver {
    pub fn new(config: SolverConfig) -> Self {
        Solver { config, cache: Mutex::new(HashMap::new()), queries: Mutex::new(0) }
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// Number of scripts actually sent to a solver process.
    pub fn queries(&self) -> usize {
        *self.queries.lock().unwrap()
    }

    fn args(&self) -> Vec<&'static str> {
        let name = Path::new(&self.config.path)
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default();
        if name.starts_with("cvc5") || name.starts_with("cvc4") {
            vec!["--lang=smt2", "--incremental"]
        } else if name.starts_with("z3") {
            vec!["-in"]
        } else {
            Vec::new()
        }
    }

    /// Solver-specific options sent ahead of every script. Model-based
    /// quantifier instantiation is disabled for z3, as Boogie does: it rarely
    /// helps validity proofs and makes refutations over quantified axioms
    /// run until the budget expires.
    fn preamble(&self) -> &'static str {
        if self.args() == ["-in"] {
            "(set-option :smt.mbqi false)\n"
        } else {
            ""
        }
    }

    /// Decides `script`; `label` names the saved copy when scripts are kept.
    pub fn check(&self, label: &str, script: &str) -> Result<SolverVerdict, SolverError> {
        let script = format!("{}{script}", self.preamble());
        let script = script.as_str();
        let digest = hex::encode(Sha256::digest(script.as_bytes()));
        if let Some(dir) = &self.config.keep_scripts {
            std::fs::create_dir_all(dir)?;
            let name: String = label
                .chars()
                .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
                .collect();
            std::fs::write(dir.join(format!("{name}-{}.smt2", &digest[..12])), script)?;
        }
        if let Some(v) = self.cache.lock().unwrap().get(&digest) {
            return Ok(v.clone());
        }
        *self.queries.lock().unwrap() += 1;
        let verdict = self.run(script)?;
        self.cache.lock().unwrap().insert(digest, verdict.clone());
        Ok(verdict)
    }

    fn run(&self, script: &str) -> Result<SolverVerdict, SolverError> {
        let mut child = Command::new(&self.config.path)
            .args(self.args())
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|source| SolverError::Spawn { path: self.config.path.clone(), source })?;
        let mut session = Session::start(&mut child)?;
        let result = session.decide(script, self.config.budget);
        let _ = session.send("(exit)\n");
        drop(session);
        let _ = child.kill();
        let _ = child.wait();
        result
    }
}

struct Session {
    stdin: ChildStdin,
    lines: Receiver<String>,
}

impl Session {
    fn start(child: &mut Child) -> Result<Session, SolverError> {
        let stdin = child.stdin.take().ok_or_else(|| SolverError::Protocol("no stdin".into()))?;
        let stdout = child.stdout.take().ok_or_else(|| SolverError::Protocol("no stdout".into()))?;
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Session { stdin, lines: rx })
    }

    fn send(&mut self, text: &str) -> std::io::Result<()> {
        self.stdin.write_all(text.as_bytes())?;
        self.stdin.flush()
    }

    /// Next non-empty line, `None` on timeout.
    fn line(&self, deadline: Instant) -> Result<Option<String>, SolverError> {
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            match self.lines.recv_timeout(left) {
                Ok(l) if l.trim().is_empty() => continue,
                Ok(l) => return Ok(Some(l.trim().to_string())),
                Err(RecvTimeoutError::Timeout) => return Ok(None),
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(SolverError::Protocol("solver exited without an answer".into()))
                }
            }
        }
    }

    /// Reads one balanced s-expression, possibly spanning several lines.
    fn sexpr(&self, deadline: Instant) -> Result<Option<String>, SolverError> {
        let mut text = String::new();
        let mut depth = 0i64;
        loop {
            let Some(l) = self.line(deadline)? else { return Ok(None) };
            for c in l.chars() {
                match c {
                    '(' => depth += 1,
                    ')' => depth -= 1,
                    _ => {}
                }
            }
            if !text.is_empty() {
                text.push('\n');
            }
            text.push_str(&l);
            if depth <= 0 {
                return Ok(Some(text));
            }
        }
    }

    fn decide(&mut self, script: &str, budget: Duration) -> Result<SolverVerdict, SolverError> {
        let deadline = Instant::now() + budget;
        self.send(script)?;
        let answer = match self.line(deadline) {
            Ok(Some(a)) => a,
            Ok(None) => return Ok(SolverVerdict::Unknown { reason: UnknownReason::Timeout }),
            Err(e) => return Err(e),
        };
        match answer.as_str() {
            "unsat" => Ok(SolverVerdict::Valid),
            "sat" => {
                self.send("(get-model)\n")?;
                let model = self.sexpr(Instant::now() + FOLLOW_UP)?.unwrap_or_default();
                Ok(SolverVerdict::Invalid { model })
            }
            "unknown" => {
                self.send("(get-info :reason-unknown)\n")?;
                let reason = self
                    .sexpr(Instant::now() + FOLLOW_UP)?
                    .map(|r| parse_reason(&r))
                    .unwrap_or_else(|| "unknown".into());
                let reason = if reason.contains("timeout") || reason.contains("canceled") {
                    UnknownReason::Timeout
                } else {
                    UnknownReason::Incomplete { reason }
                };
                Ok(SolverVerdict::Unknown { reason })
            }
            other => Err(SolverError::Protocol(other.to_string())),
        }
    }
}

/// `(:reason-unknown "incomplete quantifiers")` -> `incomplete quantifiers`.
fn parse_reason(s: &str) -> String {
    let inner = s.trim().trim_start_matches('(').trim_end_matches(')').trim();
    let inner = inner.strip_prefix(":reason-unknown").unwrap_or(inner).trim();
    inner.trim_matches('"').to_string()
}
