//! The `amr-ens` command line.
//!
//! Exit codes: 0 on success, 1 when `validate --strict` finds a corrupted
//! graph, 2 on usage, input or runtime errors.

use std::error::Error;
use std::path::PathBuf;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::corpus::{
    evaluate, read_corpus, write_corpus, write_folds, CorpusEntry, EvaluationConfig, MultiSystemCorpus, Strategy,
};
use crate::graphene::{graphene_base, graphene_smatch, MergeConfig};
use crate::select::{
    read_score_file, select_oracle_best_with, select_ppl_avg, select_ppl_zero, select_smatch_avg_with, CandidateSet,
    ProcessScorer, Scorer,
};
use crate::smatch::{
    compute_breakdown_with, BreakdownScores, Search, SmatchConfig, SubMetric, DEFAULT_EXACT_BOUND, DEFAULT_RESTARTS,
    DEFAULT_SEED,
};
use crate::validate::{validate_graph, Violation};

/// Scoring, validation and ensembling of AMR graph predictions.
#[derive(Debug, Parser)]
#[command(name = "amr-ens", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check every graph of a corpus file for structural violations.
    Validate {
        file: PathBuf,
        /// Write a JSON report of all violations.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Exit with status 1 if any graph is corrupted.
        #[arg(long)]
        strict: bool,
    },
    /// Corpus-level SMATCH of predictions against gold.
    Smatch {
        pred: PathBuf,
        gold: PathBuf,
        /// Also print the fine-grained sub-metrics.
        #[arg(long)]
        breakdown: bool,
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
        /// Exhaustive alignment search (small graphs only).
        #[arg(long)]
        exact: bool,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Merge the predictions of several systems sentence by sentence.
    Merge {
        #[arg(long, value_enum)]
        strategy: MergeStrategy,
        #[arg(long)]
        out: PathBuf,
        /// Minimum vote fraction for an element to survive.
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// One corpus file per system.
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Pick one prediction per sentence.
    Select {
        #[arg(long, value_enum)]
        strategy: SelectStrategy,
        /// Scorer command speaking the JSON-lines protocol (repeatable).
        #[arg(long = "scorer-cmd", env = "AMR_SCORER_CMD")]
        scorer_cmd: Vec<String>,
        /// Precomputed score file (repeatable).
        #[arg(long)]
        scores: Vec<PathBuf>,
        /// Gold corpus, required by oracle-best.
        #[arg(long)]
        gold: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Score systems and ensembling strategies against gold.
    Evaluate {
        #[arg(long)]
        gold: PathBuf,
        /// Comma-separated strategies.
        #[arg(long, value_delimiter = ',', default_value = "graphene-base,graphene-smatch,smatch-avg,oracle-best")]
        strategies: Vec<Strategy>,
        #[arg(long = "scorer-cmd", env = "AMR_SCORER_CMD")]
        scorer_cmd: Vec<String>,
        #[arg(long)]
        scores: Vec<PathBuf>,
        /// Write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Leave timings out of the report so reruns are byte-identical.
        #[arg(long)]
        no_time: bool,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
        /// Worker threads (default: one per processor).
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Write seeded k-fold train/test splits of a corpus.
    Split {
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
        file: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MergeStrategy {
    GrapheneBase,
    GrapheneSmatch,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SelectStrategy {
    SmatchAvg,
    PplZero,
    PplAvg,
    OracleBest,
}

type CliResult = Result<i32, Box<dyn Error>>;

/// Runs the command line on `argv` (program name first) and returns the
/// exit code.
pub fn cli_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn run(command: Command) -> CliResult {
    match command {
        Command::Validate { file, report, strict } => run_validate(file, report, strict),
        Command::Smatch { pred, gold, breakdown, restarts, exact, seed } => {
            run_smatch(pred, gold, breakdown, restarts, exact, seed)
        }
        Command::Merge { strategy, out, threshold, seed, files } => run_merge(strategy, out, threshold, seed, files),
        Command::Select { strategy, scorer_cmd, scores, gold, out, seed, restarts, files } => {
            let config = SmatchConfig { restarts, seed };
            run_select(strategy, &scorer_cmd, &scores, gold, out, config, files)
        }
        Command::Evaluate { gold, strategies, scorer_cmd, scores, report, no_time, seed, restarts, jobs, files } => {
            let corpus = MultiSystemCorpus::read(&files)?;
            let gold = read_corpus(gold)?;
            let mut scorers = if strategies.iter().any(Strategy::needs_scorer) {
                build_scorers(&scorer_cmd, &scores)?
            } else {
                vec![]
            };
            let config = EvaluationConfig {
                strategies,
                smatch: SmatchConfig { restarts, seed },
                jobs,
                measure_time: !no_time,
                ..EvaluationConfig::default()
            };
            let result = evaluate(&corpus, &gold, &config, &mut scorers)?;
            print!("{}", result.to_table());
            if let Some(path) = report {
                std::fs::write(path, result.to_json())?;
            }
            Ok(0)
        }
        Command::Split { folds, seed, out_dir, file } => {
            let entries = read_corpus(&file)?;
            for path in write_folds(&entries, folds, seed, &out_dir)? {
                println!("{}", path.display());
            }
            Ok(0)
        }
    }
}

#[derive(Serialize)]
struct EntryReport<'a> {
    id: &'a str,
    violations: &'a [Violation],
}

fn run_validate(file: PathBuf, report: Option<PathBuf>, strict: bool) -> CliResult {
    let entries = read_corpus(&file)?;
    let reports: Vec<_> = entries.iter().map(|e| validate_graph(&e.graph)).collect();
    let mut corrupted = 0;
    for (e, r) in entries.iter().zip(&reports) {
        if r.is_empty() {
            continue;
        }
        corrupted += 1;
        for v in r.iter() {
            println!("{}: {v}", e.id);
        }
    }
    println!("corrupted: {corrupted}/{}", entries.len());
    if let Some(path) = report {
        let rows: Vec<EntryReport> =
            entries.iter().zip(&reports).map(|(e, r)| EntryReport { id: &e.id, violations: &r.violations }).collect();
        let mut text = serde_json::to_string_pretty(&rows)?;
        text.push('\n');
        std::fs::write(path, text)?;
    }
    Ok(if strict && corrupted > 0 { 1 } else { 0 })
}

fn pair_by_id<'a>(
    pred: &'a [CorpusEntry],
    gold: &'a [CorpusEntry],
) -> Result<Vec<(&'a CorpusEntry, &'a CorpusEntry)>, String> {
    let by_id: std::collections::HashMap<&str, &CorpusEntry> = gold.iter().map(|e| (e.id.as_str(), e)).collect();
    if pred.len() != gold.len() {
        return Err(format!("{} predictions but {} gold graphs", pred.len(), gold.len()));
    }
    pred.iter()
        .map(|p| by_id.get(p.id.as_str()).map(|g| (p, *g)).ok_or_else(|| format!("no gold graph for id {:?}", p.id)))
        .collect()
}

fn run_smatch(pred: PathBuf, gold: PathBuf, breakdown: bool, restarts: usize, exact: bool, seed: u64) -> CliResult {
    let pred = read_corpus(pred)?;
    let gold = read_corpus(gold)?;
    let base = SmatchConfig { restarts, seed };
    let mut total = BreakdownScores::empty();
    for (i, (p, g)) in pair_by_id(&pred, &gold)?.into_iter().enumerate() {
        let search =
            if exact { Search::Exact { bound: DEFAULT_EXACT_BOUND } } else { Search::Climb(base.derive(i as u64)) };
        let scores = compute_breakdown_with(&p.graph, &g.graph, &search).map_err(|e| format!("entry {}: {e}", p.id))?;
        total = total.accumulate(&scores);
    }
    let metrics: &[SubMetric] = if breakdown { &SubMetric::ALL } else { &[SubMetric::Smatch] };
    for m in metrics {
        let s = total.get(*m);
        println!("{:<13} P {:.1}  R {:.1}  F1 {:.1}", m.label(), s.precision * 100.0, s.recall * 100.0, s.f1 * 100.0);
    }
    Ok(0)
}

fn run_merge(strategy: MergeStrategy, out: PathBuf, threshold: f64, seed: u64, files: Vec<PathBuf>) -> CliResult {
    let corpus = MultiSystemCorpus::read(&files)?;
    let base = SmatchConfig { seed, ..SmatchConfig::default() };
    let mut merged = Vec::with_capacity(corpus.len());
    let mut corrupted = 0;
    for (i, e) in corpus.entries.iter().enumerate() {
        let cfg = MergeConfig { vote_threshold: threshold, smatch: base.derive(i as u64), ..MergeConfig::default() };
        let outcome = match strategy {
            MergeStrategy::GrapheneBase => graphene_base(&e.graphs, &cfg),
            MergeStrategy::GrapheneSmatch => graphene_smatch(&e.graphs, &cfg),
        }
        .map_err(|err| format!("entry {}: {err}", e.id))?;
        if !validate_graph(&outcome.graph).is_empty() {
            corrupted += 1;
        }
        merged.push(CorpusEntry::new(e.id.clone(), e.sentence.clone(), outcome.graph));
    }
    write_corpus(&merged, &out)?;
    println!("merged {} entries into {} ({corrupted} corrupted)", merged.len(), out.display());
    Ok(0)
}

fn build_scorers(commands: &[String], score_files: &[PathBuf]) -> Result<Vec<Box<dyn Scorer>>, Box<dyn Error>> {
    let mut scorers: Vec<Box<dyn Scorer>> = Vec::new();
    for cmd in commands {
        let timeout = std::env::var("AMR_SCORER_TIMEOUT")
            .ok()
            .and_then(|s| s.parse::<f64>().ok())
            .map_or(crate::select::DEFAULT_TIMEOUT, Duration::from_secs_f64);
        scorers.push(Box::new(ProcessScorer::spawn(cmd)?.with_timeout(timeout)));
    }
    for path in score_files {
        scorers.push(Box::new(read_score_file(path)?));
    }
    if scorers.is_empty() {
        return Err("perplexity strategies need --scorer-cmd, --scores or AMR_SCORER_CMD".into());
    }
    Ok(scorers)
}

fn run_select(
    strategy: SelectStrategy,
    scorer_cmd: &[String],
    score_files: &[PathBuf],
    gold: Option<PathBuf>,
    out: PathBuf,
    config: SmatchConfig,
    files: Vec<PathBuf>,
) -> CliResult {
    let corpus = MultiSystemCorpus::read(&files)?;
    let gold = match (strategy, gold) {
        (SelectStrategy::OracleBest, Some(path)) => {
            let entries = read_corpus(path)?;
            Some(entries.into_iter().map(|e| (e.id.clone(), e.graph)).collect::<std::collections::HashMap<_, _>>())
        }
        (SelectStrategy::OracleBest, None) => return Err("oracle-best needs --gold".into()),
        _ => None,
    };
    let mut scorers = match strategy {
        SelectStrategy::PplZero | SelectStrategy::PplAvg => build_scorers(scorer_cmd, score_files)?,
        _ => vec![],
    };
    let mut chosen = Vec::with_capacity(corpus.len());
    for (i, e) in corpus.entries.iter().enumerate() {
        let cands = corpus.systems.iter().cloned().zip(e.graphs.iter().cloned()).collect();
        let set = CandidateSet::new(e.id.clone(), e.sentence.clone(), cands)?;
        let cfg = config.derive(i as u64);
        let result = match strategy {
            SelectStrategy::SmatchAvg => select_smatch_avg_with(&set, &cfg),
            SelectStrategy::OracleBest => {
                let g = gold
                    .as_ref()
                    .and_then(|m| m.get(&e.id))
                    .ok_or_else(|| format!("no gold graph for id {:?}", e.id))?;
                select_oracle_best_with(&set, g, &cfg)
            }
            SelectStrategy::PplZero => select_ppl_zero(&set, scorers[0].as_mut())?,
            SelectStrategy::PplAvg => {
                let mut refs: Vec<&mut dyn Scorer> =
                    scorers.iter_mut().map(|s| s.as_mut() as &mut dyn Scorer).collect();
                select_ppl_avg(&set, &mut refs)?
            }
        };
        let mut entry = CorpusEntry::new(e.id.clone(), e.sentence.clone(), result.chosen(&set).clone());
        entry.raw_metadata.push(("system".to_string(), corpus.systems[result.chosen_index].clone()));
        chosen.push(entry);
    }
    write_corpus(&chosen, &out)?;
    println!("selected {} graphs into {}", chosen.len(), out.display());
    Ok(0)
}
