//! Corpus files, multi-system alignment, fold splitting and evaluation.
//!
//! A corpus file is a sequence of blocks separated by blank lines. Each
//! block holds `# ::key value` metadata lines followed by one Penman graph:
//!
//! ```text
//! # ::id s1
//! # ::snt The boy wants to go.
//! (w / want-01
//!     :ARG0 (b / boy)
//!     :ARG1 (g / go-02
//!         :ARG0 b))
//! ```

mod evaluate;
mod report;
mod split;

pub use evaluate::{evaluate, EvalError, EvaluationConfig, Strategy};
pub use report::{EvaluationReport, EvaluationRow, RowKind, REPORT_COLUMNS};
pub use split::{kfold_indices, kfold_split, write_folds, Fold, SplitError};

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use thiserror::Error;

use crate::graph::{serialize_penman, AmrGraph, ParseError};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line} (block {block}): {}", source.kind)]
    Parse { path: PathBuf, line: usize, block: usize, source: ParseError },
    #[error("{path}:{line} (block {block}): metadata without a graph")]
    MissingGraph { path: PathBuf, line: usize, block: usize },
    #[error("{path}:{line}: duplicate id {id:?}")]
    DuplicateId { path: PathBuf, line: usize, id: String },
    #[error("system {system:?} has no prediction for ids {ids:?}")]
    MissingPredictions { system: String, ids: Vec<String> },
    #[error("system {system:?} has predictions for unknown ids {ids:?}")]
    ExtraPredictions { system: String, ids: Vec<String> },
    #[error("duplicate system id {0:?}")]
    DuplicateSystem(String),
    #[error("no systems given")]
    NoSystems,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusEntry {
    pub id: String,
    pub sentence: Option<String>,
    pub graph: AmrGraph,
    /// Metadata other than `id` and `snt`, in file order.
    pub raw_metadata: Vec<(String, String)>,
}

impl CorpusEntry {
    pub fn new(id: impl Into<String>, sentence: Option<String>, graph: AmrGraph) -> Self {
        CorpusEntry { id: id.into(), sentence, graph, raw_metadata: Vec::new() }
    }
}

/// Splits a `# ::k1 v1 ::k2 v2` line into pairs. `snt` takes the rest of
/// the line verbatim.
fn metadata_pairs(rest: &str) -> Vec<(String, String)> {
    let split_kv = |seg: &str| match seg.split_once(char::is_whitespace) {
        Some((k, v)) => (k.to_string(), v.trim().to_string()),
        None => (seg.trim().to_string(), String::new()),
    };
    if rest.starts_with("snt ") || rest == "snt" {
        return vec![split_kv(rest)];
    }
    rest.split(" ::").filter(|s| !s.trim().is_empty()).map(split_kv).collect()
}

pub fn parse_corpus(text: &str, path: &Path) -> Result<Vec<CorpusEntry>, CorpusError> {
    let mut entries = Vec::new();
    let mut ids: HashSet<String> = HashSet::new();
    let lines: Vec<&str> = text.lines().collect();
    let mut i = 0;
    let mut block = 0;
    while i < lines.len() {
        if lines[i].trim().is_empty() {
            i += 1;
            continue;
        }
        let start = i;
        while i < lines.len() && !lines[i].trim().is_empty() {
            i += 1;
        }
        block += 1;
        let mut meta: Vec<(String, String)> = Vec::new();
        let mut graph_lines: Vec<(usize, &str)> = Vec::new();
        for (n, line) in lines.iter().enumerate().take(i).skip(start) {
            if let Some(rest) = line.trim_start().strip_prefix('#') {
                if let Some(rest) = rest.trim_start().strip_prefix("::") {
                    meta.extend(metadata_pairs(rest));
                }
            } else {
                graph_lines.push((n + 1, line));
            }
        }
        if graph_lines.is_empty() {
            if meta.is_empty() {
                continue; // comment-only block, e.g. a file header
            }
            return Err(CorpusError::MissingGraph { path: path.to_path_buf(), line: start + 1, block });
        }
        let body: String = graph_lines.iter().map(|(_, l)| *l).collect::<Vec<_>>().join("\n");
        let graph = AmrGraph::parse(&body).map_err(|source| CorpusError::Parse {
            path: path.to_path_buf(),
            line: graph_lines[(source.line.max(1) - 1).min(graph_lines.len() - 1)].0,
            block,
            source,
        })?;
        let mut id = None;
        let mut sentence = None;
        let mut raw_metadata = Vec::new();
        for (k, v) in meta {
            match k.as_str() {
                "id" if id.is_none() => id = Some(v),
                "snt" if sentence.is_none() => sentence = Some(v),
                _ => raw_metadata.push((k, v)),
            }
        }
        let id = id.unwrap_or_else(|| entries.len().to_string());
        if !ids.insert(id.clone()) {
            return Err(CorpusError::DuplicateId { path: path.to_path_buf(), line: start + 1, id });
        }
        entries.push(CorpusEntry { id, sentence, graph, raw_metadata });
    }
    Ok(entries)
}

pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<CorpusEntry>, CorpusError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })?;
    parse_corpus(&text, path)
}

pub fn format_corpus(entries: &[CorpusEntry]) -> String {
    let mut out = String::new();
    for (k, e) in entries.iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        writeln!(out, "# ::id {}", e.id).unwrap();
        if let Some(s) = &e.sentence {
            writeln!(out, "# ::snt {s}").unwrap();
        }
        for (key, value) in &e.raw_metadata {
            if value.is_empty() {
                writeln!(out, "# ::{key}").unwrap();
            } else {
                writeln!(out, "# ::{key} {value}").unwrap();
            }
        }
        out.push_str(&serialize_penman(&e.graph));
        out.push('\n');
    }
    out
}

pub fn write_corpus(entries: &[CorpusEntry], path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    std::fs::write(path, format_corpus(entries)).map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })
}

/// One sentence with a prediction from every system.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiEntry {
    pub id: String,
    pub sentence: Option<String>,
    /// Graphs in system order.
    pub graphs: Vec<AmrGraph>,
}

/// Predictions of several systems aligned by entry id.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiSystemCorpus {
    pub systems: Vec<String>,
    pub entries: Vec<MultiEntry>,
}

impl MultiSystemCorpus {
    /// Aligns per-system corpora by id, in the first system's entry order.
    /// Every system must cover exactly the same ids.
    pub fn align(systems: Vec<(String, Vec<CorpusEntry>)>) -> Result<Self, CorpusError> {
        let Some((_, first)) = systems.first() else {
            return Err(CorpusError::NoSystems);
        };
        let mut names = HashSet::new();
        for (name, _) in &systems {
            if !names.insert(name.clone()) {
                return Err(CorpusError::DuplicateSystem(name.clone()));
            }
        }
        let order: Vec<String> = first.iter().map(|e| e.id.clone()).collect();
        let mut entries: IndexMap<String, MultiEntry> = order
            .iter()
            .map(|id| (id.clone(), MultiEntry { id: id.clone(), sentence: None, graphs: Vec::new() }))
            .collect();
        for (name, corpus) in &systems {
            let by_id: HashMap<&str, &CorpusEntry> = corpus.iter().map(|e| (e.id.as_str(), e)).collect();
            let missing: Vec<String> = order.iter().filter(|id| !by_id.contains_key(id.as_str())).cloned().collect();
            if !missing.is_empty() {
                return Err(CorpusError::MissingPredictions { system: name.clone(), ids: missing });
            }
            let extra: Vec<String> =
                corpus.iter().filter(|e| !entries.contains_key(&e.id)).map(|e| e.id.clone()).collect();
            if !extra.is_empty() {
                return Err(CorpusError::ExtraPredictions { system: name.clone(), ids: extra });
            }
            for (id, slot) in entries.iter_mut() {
                let e = by_id[id.as_str()];
                if slot.sentence.is_none() {
                    slot.sentence = e.sentence.clone();
                }
                slot.graphs.push(e.graph.clone());
            }
        }
        Ok(MultiSystemCorpus {
            systems: systems.into_iter().map(|(n, _)| n).collect(),
            entries: entries.into_values().collect(),
        })
    }

    /// Reads one corpus file per system; systems are named by file stem
    /// (or full path when stems collide).
    pub fn read(paths: &[impl AsRef<Path>]) -> Result<Self, CorpusError> {
        let stems: Vec<String> = paths
            .iter()
            .map(|p| {
                p.as_ref()
                    .file_stem()
                    .map_or_else(|| p.as_ref().display().to_string(), |s| s.to_string_lossy().into_owned())
            })
            .collect();
        let unique = stems.iter().collect::<HashSet<_>>().len() == stems.len();
        let mut systems = Vec::new();
        for (p, stem) in paths.iter().zip(stems) {
            let name = if unique { stem } else { p.as_ref().display().to_string() };
            systems.push((name, read_corpus(p)?));
        }
        MultiSystemCorpus::align(systems)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
