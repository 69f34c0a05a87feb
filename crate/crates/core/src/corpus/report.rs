use std::fmt::Write as _;

use serde::Serialize;

use crate::smatch::{BreakdownScores, SmatchScore, SubMetric};

/// Keys of each report row, in column order.
pub const REPORT_COLUMNS: [&str; 12] = [
    "model",
    "time_seconds",
    "corrupted",
    "smatch",
    "unlabeled",
    "no_wsd",
    "concepts",
    "ner",
    "negations",
    "wiki",
    "reentrancies",
    "srl",
];

const TABLE_HEADERS: [&str; 12] =
    ["Model", "Time (s)", "Corrupt.", "SMATCH", "Unlab.", "NoWSD", "Conc.", "NER", "Neg.", "Wiki", "Reent.", "SRL"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    System,
    Strategy,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationRow {
    pub model: String,
    pub kind: RowKind,
    /// Wall-clock seconds of the strategy phase; `None` for input systems
    /// or when timing is disabled.
    pub time_seconds: Option<f64>,
    pub corrupted: usize,
    /// Corpus-level (micro-averaged) scores.
    pub scores: BreakdownScores,
}

impl EvaluationRow {
    /// Score of `metric` on the 0-100 scale, rounded to one decimal.
    pub fn display_score(&self, metric: SubMetric) -> f64 {
        round1(self.scores.get(metric).f1 * 100.0)
    }
}

fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationReport {
    pub corpus_size: usize,
    pub seed: u64,
    pub restarts: usize,
    pub rows: Vec<EvaluationRow>,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    aggregation: &'static str,
    scale: &'static str,
    corpus_size: usize,
    seed: u64,
    restarts: usize,
    columns: [&'static str; 12],
    rows: Vec<JsonRow<'a>>,
}

#[derive(Serialize)]
struct JsonRow<'a> {
    model: &'a str,
    kind: RowKind,
    time_seconds: Option<f64>,
    corrupted: usize,
    smatch: f64,
    unlabeled: f64,
    no_wsd: f64,
    concepts: f64,
    ner: f64,
    negations: f64,
    wiki: f64,
    reentrancies: f64,
    srl: f64,
    counts: JsonCounts,
}

/// `[matched, candidate total, reference total]` per metric.
#[derive(Serialize)]
struct JsonCounts {
    smatch: [usize; 3],
    unlabeled: [usize; 3],
    no_wsd: [usize; 3],
    concepts: [usize; 3],
    ner: [usize; 3],
    negations: [usize; 3],
    wiki: [usize; 3],
    reentrancies: [usize; 3],
    srl: [usize; 3],
}

fn counts(s: &SmatchScore) -> [usize; 3] {
    [s.matched, s.candidate_total, s.reference_total]
}

impl EvaluationReport {
    pub fn row(&self, model: &str) -> Option<&EvaluationRow> {
        self.rows.iter().find(|r| r.model == model)
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let d = |m| r.display_score(m);
                let b = &r.scores;
                JsonRow {
                    model: &r.model,
                    kind: r.kind,
                    time_seconds: r.time_seconds.map(|t| (t * 1000.0).round() / 1000.0),
                    corrupted: r.corrupted,
                    smatch: d(SubMetric::Smatch),
                    unlabeled: d(SubMetric::Unlabeled),
                    no_wsd: d(SubMetric::NoWsd),
                    concepts: d(SubMetric::Concepts),
                    ner: d(SubMetric::Ner),
                    negations: d(SubMetric::Negations),
                    wiki: d(SubMetric::Wiki),
                    reentrancies: d(SubMetric::Reentrancies),
                    srl: d(SubMetric::Srl),
                    counts: JsonCounts {
                        smatch: counts(&b.smatch),
                        unlabeled: counts(&b.unlabeled),
                        no_wsd: counts(&b.no_wsd),
                        concepts: counts(&b.concepts),
                        ner: counts(&b.ner),
                        negations: counts(&b.negations),
                        wiki: counts(&b.wiki),
                        reentrancies: counts(&b.reentrancies),
                        srl: counts(&b.srl),
                    },
                }
            })
            .collect();
        let report = JsonReport {
            aggregation: "micro",
            scale: "f1 x 100, one decimal",
            corpus_size: self.corpus_size,
            seed: self.seed,
            restarts: self.restarts,
            columns: REPORT_COLUMNS,
            rows,
        };
        let mut out = serde_json::to_string_pretty(&report).expect("report serializes");
        out.push('\n');
        out
    }

    /// Plain-text table, input systems first, then strategies.
    pub fn to_table(&self) -> String {
        let mut cells: Vec<Vec<String>> = vec![TABLE_HEADERS.iter().map(|h| h.to_string()).collect()];
        for r in &self.rows {
            let mut row = vec![
                r.model.clone(),
                r.time_seconds.map_or_else(|| "-".to_string(), |t| format!("{t:.2}")),
                r.corrupted.to_string(),
            ];
            row.extend(SubMetric::ALL.iter().map(|m| format!("{:.1}", r.display_score(*m))));
            cells.push(row);
        }
        let widths: Vec<usize> =
            (0..TABLE_HEADERS.len()).map(|c| cells.iter().map(|r| r[c].chars().count()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        let mut previous = None;
        for (k, row) in cells.iter().enumerate() {
            let kind = k.checked_sub(1).map(|i| self.rows[i].kind);
            if k == 1 || (previous.is_some() && kind != previous) {
                let total = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
                writeln!(out, "{}", "-".repeat(total)).unwrap();
            }
            previous = kind;
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (cell, w))| if c == 0 { format!("{cell:<w$}") } else { format!("{cell:>w$}") })
                .collect();
            writeln!(out, "{}", line.join("  ").trim_end()).unwrap();
        }
        writeln!(
            out,
            "scores: corpus-level micro-averaged F1 x 100; times are relative, not comparable across machines"
        )
        .unwrap();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(model: &str, kind: RowKind, f1: (usize, usize, usize)) -> EvaluationRow {
        let mut scores = BreakdownScores::empty();
        scores.smatch = SmatchScore::from_counts(f1.0, f1.1, f1.2);
        EvaluationRow { model: model.into(), kind, time_seconds: None, corrupted: 0, scores }
    }

    #[test]
    fn json_columns_and_rounding() {
        let report = EvaluationReport {
            corpus_size: 1,
            seed: 1,
            restarts: 8,
            rows: vec![row("a", RowKind::System, (13, 16, 17)), row("b", RowKind::Strategy, (16, 17, 17))],
        };
        let v: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        let first = v["rows"][0].as_object().unwrap();
        for c in REPORT_COLUMNS {
            assert!(first.contains_key(c), "{c}");
        }
        assert_eq!(first["smatch"], 78.8);
        assert_eq!(v["rows"][1]["smatch"], 94.1);
        assert!(first["time_seconds"].is_null());
        let table = report.to_table();
        assert!(table.lines().next().unwrap().starts_with("Model"));
        assert!(table.contains("78.8") && table.contains("94.1"));
    }
}
