//! Perplexity scorers.
//!
//! Perplexity is an opaque positive number produced outside this crate.
//! [`ProcessScorer`] talks to a child process over line-delimited JSON:
//!
//! ```text
//! -> {"request_id":"s1::sys0","sentence":"...","context_graphs":["(...)"],"target_graph":"(...)"}
//! <- {"request_id":"s1::sys0","perplexity":3.25}
//! ```
//!
//! Responses may arrive in any order and are matched by `request_id`.
//! [`ScoreFileScorer`] reads precomputed values instead, and
//! [`MockScorer`] derives them from SMATCH for offline tests.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::AmrGraph;
use crate::smatch::{compute_smatch_with, SmatchConfig};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("cannot start scorer {command:?}: {source}")]
    Spawn { command: String, source: std::io::Error },
    #[error("scorer i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("request {request_id}: no response within {seconds} s")]
    Timeout { request_id: String, seconds: f64 },
    #[error("request {request_id}: scorer exited before responding")]
    Exited { request_id: String },
    #[error("malformed scorer response {line:?}: {reason}")]
    Malformed { line: String, reason: String },
    #[error("response for unknown request {0}")]
    UnknownRequest(String),
    #[error("second response for request {0}")]
    DuplicateResponse(String),
    #[error("request id {0} used twice in one batch")]
    DuplicateRequest(String),
    #[error("request {request_id}: perplexity must be positive and finite, got {value}")]
    InvalidPerplexity { request_id: String, value: f64 },
    #[error("request {request_id}: no score available")]
    Missing { request_id: String },
    #[error("request {request_id}: {reason}")]
    BadRequest { request_id: String, reason: String },
    #[error("{path}:{line}: {reason}")]
    ScoreFile { path: String, line: usize, reason: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScorerRequest {
    pub request_id: String,
    pub sentence: String,
    pub context_graphs: Vec<String>,
    pub target_graph: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScorerResponse {
    pub request_id: String,
    pub perplexity: f64,
}

/// A positive, finite perplexity.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize)]
pub struct PerplexityScore(f64);

impl PerplexityScore {
    pub fn new(value: f64) -> Option<Self> {
        (value.is_finite() && value > 0.0).then_some(PerplexityScore(value))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

impl fmt::Display for PerplexityScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn checked(request_id: &str, value: f64) -> Result<PerplexityScore, ScorerError> {
    PerplexityScore::new(value)
        .ok_or_else(|| ScorerError::InvalidPerplexity { request_id: request_id.to_string(), value })
}

pub trait Scorer {
    /// Scores every request, returning values in request order.
    fn score_batch(&mut self, requests: &[ScorerRequest]) -> Result<Vec<PerplexityScore>, ScorerError>;
}

/// `1 / (1 + m)` where `m` is the mean SMATCH F1 of `target` against
/// `context` with one copy of `target` removed (0 when nothing is left).
///
/// Lower is better, so ranking by this value agrees with ranking by mean
/// SMATCH against the other candidates.
pub fn mock_perplexity(target: &AmrGraph, context: &[AmrGraph], config: &SmatchConfig) -> f64 {
    let skip = context.iter().position(|g| g == target);
    let others: Vec<&AmrGraph> = context.iter().enumerate().filter(|(i, _)| Some(*i) != skip).map(|(_, g)| g).collect();
    let mean = if others.is_empty() {
        0.0
    } else {
        others.iter().map(|g| compute_smatch_with(target, g, config).score.f1).sum::<f64>() / others.len() as f64
    };
    1.0 / (1.0 + mean)
}

/// Deterministic stand-in for a language model, see [`mock_perplexity`].
#[derive(Clone, Debug, Default)]
pub struct MockScorer {
    pub config: SmatchConfig,
}

impl MockScorer {
    pub fn new(config: SmatchConfig) -> Self {
        MockScorer { config }
    }

    pub fn score_one(&self, request: &ScorerRequest) -> Result<PerplexityScore, ScorerError> {
        let parse = |text: &str| {
            AmrGraph::parse(text)
                .map_err(|e| ScorerError::BadRequest { request_id: request.request_id.clone(), reason: e.to_string() })
        };
        let target = parse(&request.target_graph)?;
        let context = request.context_graphs.iter().map(|c| parse(c)).collect::<Result<Vec<_>, _>>()?;
        checked(&request.request_id, mock_perplexity(&target, &context, &self.config))
    }
}

impl Scorer for MockScorer {
    fn score_batch(&mut self, requests: &[ScorerRequest]) -> Result<Vec<PerplexityScore>, ScorerError> {
        requests.iter().map(|r| self.score_one(r)).collect()
    }
}

/// Precomputed perplexities keyed by `"{sentence_id}::{system_id}"`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScoreFileScorer {
    scores: HashMap<String, f64>,
}

#[derive(Deserialize)]
struct ScoreRecord {
    sentence_id: String,
    system_id: String,
    perplexity: f64,
}

/// Reads a JSON-lines score file of
/// `{"sentence_id": ..., "system_id": ..., "perplexity": ...}` records.
pub fn read_score_file(path: &Path) -> Result<ScoreFileScorer, ScorerError> {
    let text = std::fs::read_to_string(path)?;
    let shown = path.display().to_string();
    let mut scores = HashMap::new();
    for (k, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |reason: String| ScorerError::ScoreFile { path: shown.clone(), line: k + 1, reason };
        let rec: ScoreRecord = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        let key = format!("{}::{}", rec.sentence_id, rec.system_id);
        if scores.insert(key.clone(), rec.perplexity).is_some() {
            return Err(err(format!("duplicate entry for {key}")));
        }
    }
    Ok(ScoreFileScorer { scores })
}

impl ScoreFileScorer {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, f64)>) -> Self {
        ScoreFileScorer { scores: pairs.into_iter().collect() }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

impl Scorer for ScoreFileScorer {
    fn score_batch(&mut self, requests: &[ScorerRequest]) -> Result<Vec<PerplexityScore>, ScorerError> {
        requests
            .iter()
            .map(|r| match self.scores.get(&r.request_id) {
                Some(v) => checked(&r.request_id, *v),
                None => Err(ScorerError::Missing { request_id: r.request_id.clone() }),
            })
            .collect()
    }
}

/// A scorer running as a child process (`sh -c COMMAND`).
pub struct ProcessScorer {
    command: String,
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
    max_in_flight: usize,
}

impl fmt::Debug for ProcessScorer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProcessScorer").field("command", &self.command).finish_non_exhaustive()
    }
}

impl ProcessScorer {
    pub fn spawn(command: &str) -> Result<Self, ScorerError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|source| ScorerError::Spawn { command: command.to_string(), source })?;
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        // a dedicated reader keeps the child's stdout drained while we write
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(ProcessScorer {
            command: command.to_string(),
            stdin: child.stdin.take(),
            child,
            lines: rx,
            timeout: DEFAULT_TIMEOUT,
            max_in_flight: 64,
        })
    }

    /// How long to wait for each response.
    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    /// Maximum number of requests sent but not yet answered.
    pub fn with_max_in_flight(mut self, n: usize) -> Self {
        self.max_in_flight = n.max(1);
        self
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    fn send(&mut self, request: &ScorerRequest) -> Result<(), ScorerError> {
        let stdin =
            self.stdin.as_mut().ok_or_else(|| ScorerError::Exited { request_id: request.request_id.clone() })?;
        let line = serde_json::to_string(request).expect("requests serialize");
        writeln!(stdin, "{line}")
            .and_then(|_| stdin.flush())
            .map_err(|_| ScorerError::Exited { request_id: request.request_id.clone() })
    }
}

impl Scorer for ProcessScorer {
    fn score_batch(&mut self, requests: &[ScorerRequest]) -> Result<Vec<PerplexityScore>, ScorerError> {
        let mut index: HashMap<&str, usize> = HashMap::new();
        for (i, r) in requests.iter().enumerate() {
            if index.insert(&r.request_id, i).is_some() {
                return Err(ScorerError::DuplicateRequest(r.request_id.clone()));
            }
        }
        let mut results: Vec<Option<PerplexityScore>> = vec![None; requests.len()];
        let mut answered: HashSet<String> = HashSet::new();
        let mut sent = 0;
        let mut received = 0;
        while received < requests.len() {
            while sent < requests.len() && sent - received < self.max_in_flight {
                self.send(&requests[sent])?;
                sent += 1;
            }
            let oldest = || {
                results[..sent]
                    .iter()
                    .position(Option::is_none)
                    .map(|i| requests[i].request_id.clone())
                    .unwrap_or_default()
            };
            let line = match self.lines.recv_timeout(self.timeout) {
                Ok(Ok(line)) => line,
                Ok(Err(e)) => return Err(ScorerError::Io(e)),
                Err(RecvTimeoutError::Timeout) => {
                    return Err(ScorerError::Timeout { request_id: oldest(), seconds: self.timeout.as_secs_f64() })
                }
                Err(RecvTimeoutError::Disconnected) => return Err(ScorerError::Exited { request_id: oldest() }),
            };
            if line.trim().is_empty() {
                continue;
            }
            let response: ScorerResponse = serde_json::from_str(&line)
                .map_err(|e| ScorerError::Malformed { line: line.clone(), reason: e.to_string() })?;
            let i = match index.get(response.request_id.as_str()) {
                Some(&i) if i < sent => i,
                _ => return Err(ScorerError::UnknownRequest(response.request_id)),
            };
            if !answered.insert(response.request_id.clone()) {
                return Err(ScorerError::DuplicateResponse(response.request_id));
            }
            results[i] = Some(checked(&response.request_id, response.perplexity)?);
            received += 1;
        }
        Ok(results.into_iter().map(|r| r.expect("every request answered")).collect())
    }
}

impl Drop for ProcessScorer {
    fn drop(&mut self) {
        // closing stdin asks a well-behaved scorer to exit
        self.stdin.take();
        if let Ok(None) = self.child.try_wait() {
            std::thread::sleep(Duration::from_millis(20));
            if let Ok(None) = self.child.try_wait() {
                let _ = self.child.kill();
            }
        }
        let _ = self.child.wait();
    }
}
