//! Acceptance checks. Runs without the test harness and prints one
//! `PASS`/`FAIL` line per criterion; exits non-zero if any fails.

mod common;

use std::ffi::OsStr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use amr_ensemble::corpus::{kfold_indices, REPORT_COLUMNS};
use amr_ensemble::graph::random::{random_graph, RandomGraphConfig};
use amr_ensemble::graph::{extract_triples, rename_variables, serialize_penman, AmrGraph, Triple};
use amr_ensemble::graphene::{graphene_base, MergeConfig};
use amr_ensemble::select::{
    select_oracle_best_with, select_ppl_zero, select_smatch_avg_with, CandidateSet, MockScorer,
};
use amr_ensemble::smatch::{best_alignment_exact, compute_smatch, compute_smatch_with, SmatchConfig};
use amr_ensemble::validate::{validate_graph, ViolationKind};
use common::{brute_force_matched, f1_fraction, fixture, fraction_gt, g, inject, perturb, random_clean, random_pair};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn climber_matches_exact() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut equal, mut over) = (0, 0);
    for _ in 0..500 {
        let (a, b) = random_pair(&mut rng, 8);
        ensure(a.num_instances() <= 8 && b.num_instances() <= 8, "pair exceeds 8 variables")?;
        let climb = compute_smatch(&a, &b, 8);
        let (_, exact) = best_alignment_exact(&a, &b).map_err(|e| e.to_string())?;
        if climb.matched == exact.matched {
            equal += 1;
        }
        if climb.matched > exact.matched {
            over += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure(over == 0, format!("{over} pairs where hill climbing beat the exact search"))?;
    ensure(equal >= 495, format!("only {equal}/500 pairs agree"))?;
    ensure(elapsed < Duration::from_secs(60), format!("took {elapsed:.1?}"))?;
    Ok(format!("{equal}/500 equal, 0 above exact, {:.1}s", elapsed.as_secs_f64()))
}

fn round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut failures = 0;
    for _ in 0..1000 {
        let cfg = RandomGraphConfig { nodes: rng.gen_range(1..=9), ..RandomGraphConfig::default() };
        let graph = random_graph(&mut rng, &cfg);
        let back = AmrGraph::parse(&serialize_penman(&graph)).map_err(|e| e.to_string())?;
        let (_, s) = best_alignment_exact(&graph, &back).map_err(|e| e.to_string())?;
        if s.f1 != 1.0 {
            failures += 1;
        }
    }
    ensure(failures == 0, format!("{failures} graphs changed"))?;
    Ok("1000/1000 graphs score 1.0 against their reparse".into())
}

const LISTING: [&str; 17] = [
    "(empty, :root, z0)",
    "(z0, :instance, schedule-01)",
    "(z0, :ARG0, z1)",
    "(z1, :instance, person)",
    "(z1, :name, z2)",
    "(z2, :instance, name)",
    "(z2, :op1, \"Antonio\")",
    "(z2, :op2, \"Banderas\")",
    "(z0, :ARG1, z3)",
    "(z3, :instance, premiere-01)",
    "(z3, :ARG0, z1)",
    "(z3, :ARG1, z4)",
    "(z4, :instance, movie)",
    "(z4, :poss, z1)",
    "(z0, :ARG3, z5)",
    "(z5, :instance, date-entity)",
    "(z5, :time, \"15:00\")",
];

fn triple_fixtures() -> Outcome {
    let gold = fixture("banderas_gold.amr");
    let p1 = fixture("banderas_pred1.amr");
    let p2 = fixture("banderas_pred2.amr");
    let listed: Vec<String> = extract_triples(&rename_variables(&gold)).iter().map(Triple::to_string).collect();
    ensure(listed == LISTING, format!("gold triples differ: {listed:?}"))?;
    let (n1, n2) = (extract_triples(&p1).len(), extract_triples(&p2).len());
    ensure((n1, n2) == (16, 17), format!("prediction triple counts {n1}, {n2}"))?;
    // pinned from the independent brute-force search
    let (m1, m2) = (brute_force_matched(&p1, &gold), brute_force_matched(&p2, &gold));
    ensure((m1, m2) == (13, 16), format!("brute force found {m1}, {m2} matches"))?;
    let (_, s1) = best_alignment_exact(&p1, &gold).map_err(|e| e.to_string())?;
    let (_, s2) = best_alignment_exact(&p2, &gold).map_err(|e| e.to_string())?;
    ensure(s1.f1_ratio() == f1_fraction(13, 16, 17), format!("pred 1 F1 {:?}", s1.f1_ratio()))?;
    ensure(s2.f1_ratio() == f1_fraction(16, 17, 17), format!("pred 2 F1 {:?}", s2.f1_ratio()))?;
    Ok(format!(
        "17 listed triples; 16 and 17 predicted; F1 26/33 ({:.1}) and 32/34 ({:.1})",
        s1.f1 * 100.0,
        s2.f1 * 100.0
    ))
}

fn has_relation(graph: &AmrGraph, src: &str, role: &str, tgt: &str) -> bool {
    graph.relations().iter().any(|r| {
        graph.concept(&r.source).map(|c| c.as_str()) == Some(src)
            && r.role.as_str() == role
            && graph.concept(&r.target).map(|c| c.as_str()) == Some(tgt)
    })
}

fn arg_violation_on(graph: &AmrGraph, concept: &str) -> bool {
    validate_graph(graph).iter().any(|v| {
        v.kind == ViolationKind::ArgOnNonPredicate && graph.concept(&v.variable).map(|c| c.as_str()) == Some(concept)
    })
}

fn graphene_tie() -> Outcome {
    let p1 = fixture("banderas_pred1.amr");
    let p2 = fixture("banderas_pred2.amr");
    let out = graphene_base(&[p1.clone(), p2.clone()], &MergeConfig::default()).map_err(|e| e.to_string())?;
    let merged = &out.graph;
    ensure(has_relation(merged, "premiere", ":mod", "movie"), "missing (premiere :mod movie)")?;
    ensure(has_relation(merged, "premiere", ":ARG1", "movie"), "missing (premiere :ARG1 movie)")?;
    let times: Vec<&str> =
        merged.attributes().iter().filter(|a| a.role.as_str() == ":time").map(|a| a.value.as_str()).collect();
    ensure(times.contains(&"\"15:00\"") && times.contains(&"\"3:00\""), format!("time attributes {times:?}"))?;
    ensure(arg_violation_on(merged, "premiere"), "merge not flagged with ArgOnNonPredicate")?;
    ensure(!arg_violation_on(&p1, "premiere") && !arg_violation_on(&p2, "premiere-01"), "an input is flagged")?;
    Ok(format!("pivot {:?}, both premiere edges and both times kept, merge flagged, inputs clean", out.pivot))
}

fn asymmetry() -> Outcome {
    let gold = g("(p / premiere-01 :ARG1 (m / movie))");
    let wrong = g("(p / premiere-01 :mod (m / movie))");
    let both = g("(p / premiere-01 :mod (m / movie) :ARG1 m)");
    let (_, w) = best_alignment_exact(&wrong, &gold).map_err(|e| e.to_string())?;
    let (_, b) = best_alignment_exact(&both, &gold).map_err(|e| e.to_string())?;
    let (wf, bf) = (w.f1_ratio(), b.f1_ratio());
    ensure(fraction_gt(bf, wf), format!("both-edges {bf:?} not above wrong-edge {wf:?}"))?;
    let gold = fixture("banderas_gold.amr");
    let (_, merged) = best_alignment_exact(&fixture("banderas_merged.amr"), &gold).map_err(|e| e.to_string())?;
    let (_, p1) = best_alignment_exact(&fixture("banderas_pred1.amr"), &gold).map_err(|e| e.to_string())?;
    ensure(fraction_gt(merged.f1_ratio(), p1.f1_ratio()), "merged graph does not beat prediction 1")?;
    Ok(format!(
        "both edges {}/{} > wrong edge {}/{}; merged {}/{} > pred 1 {}/{}",
        bf.0,
        bf.1,
        wf.0,
        wf.1,
        merged.f1_ratio().0,
        merged.f1_ratio().1,
        p1.f1_ratio().0,
        p1.f1_ratio().1
    ))
}

fn validator_soundness() -> Outcome {
    let kinds = [
        ViolationKind::ArgOnNonPredicate,
        ViolationKind::OpOrSntOnPredicate,
        ViolationKind::EntityStructure,
        ViolationKind::ConnectorStructure,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for kind in kinds {
        for i in 0..100 {
            let clean = random_clean(&mut rng);
            let (bad, (k, var, role)) = inject(&mut rng, &clean, kind);
            let found = validate_graph(&bad);
            let hit = found.iter().any(|v| v.kind == k && v.variable == var && v.role == role);
            ensure(hit, format!("{kind} injection {i} missed: {found:?}"))?;
            ensure(found.iter().all(|v| v.kind == k), format!("{kind} injection {i} has extra kinds: {found:?}"))?;
        }
    }
    for i in 0..100 {
        let clean = random_clean(&mut rng);
        let found = validate_graph(&clean);
        ensure(found.is_empty(), format!("clean graph {i} flagged: {found:?}"))?;
    }
    Ok("400/400 injections located, 100/100 clean graphs pass".into())
}

fn candidate_set(rng: &mut ChaCha8Rng, id: usize, gold: &AmrGraph, systems: usize) -> CandidateSet {
    let graphs: Vec<AmrGraph> = (0..systems).map(|_| perturb(rng, gold)).collect();
    CandidateSet::from_graphs(format!("s{id}"), Some(format!("sentence {id}")), graphs).expect("non-empty")
}

fn selection_equivalence() -> Outcome {
    let cfg = SmatchConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..200 {
        let gold = random_clean(&mut rng);
        let n = rng.gen_range(2..=5);
        let set = candidate_set(&mut rng, i, &gold, n);
        let avg = select_smatch_avg_with(&set, &cfg);
        let ppl = select_ppl_zero(&set, &mut MockScorer::new(cfg)).map_err(|e| e.to_string())?;
        ensure(avg.chosen_index == ppl.chosen_index, format!("set {i}: {} vs {}", avg.chosen_index, ppl.chosen_index))?;
    }
    let mut margin = f64::INFINITY;
    for c in 0..50 {
        let systems = rng.gen_range(2..=4);
        let sentences = rng.gen_range(5..=12);
        let mut oracle_total = 0.0;
        let mut system_totals = vec![0.0; systems];
        for s in 0..sentences {
            let gold = random_clean(&mut rng);
            let set = candidate_set(&mut rng, s, &gold, systems);
            let pick = select_oracle_best_with(&set, &gold, &cfg);
            oracle_total += compute_smatch_with(pick.chosen(&set), &gold, &cfg).score.f1;
            for (k, graph) in set.graphs().enumerate() {
                system_totals[k] += compute_smatch_with(graph, &gold, &cfg).score.f1;
            }
        }
        let oracle = oracle_total / sentences as f64;
        for (k, total) in system_totals.iter().enumerate() {
            let mean = total / sentences as f64;
            ensure(oracle >= mean, format!("corpus {c}: oracle {oracle:.4} below system {k} {mean:.4}"))?;
            margin = margin.min(oracle - mean);
        }
    }
    Ok(format!("200/200 sets agree; oracle dominates on 50/50 corpora (min margin {:.2} F1 points)", margin * 100.0))
}

fn fold_splitter() -> Outcome {
    let mut detail = Vec::new();
    for n in [10usize, 59255] {
        let folds = kfold_indices(n, 5, 42).map_err(|e| e.to_string())?;
        let mut seen = vec![false; n];
        for (train, test) in &folds {
            ensure(train.len() + test.len() == n, "train and test do not cover the corpus")?;
            for &i in test {
                ensure(!seen[i], format!("index {i} in two test folds"))?;
                seen[i] = true;
            }
            let mut all: Vec<usize> = train.iter().chain(test).copied().collect();
            all.sort_unstable();
            ensure(all.iter().copied().eq(0..n), "a fold's train/test is not a partition")?;
        }
        ensure(seen.iter().all(|&s| s), "test folds do not cover the corpus")?;
        let sizes: Vec<usize> = folds.iter().map(|(_, t)| t.len()).collect();
        let spread = sizes.iter().max().unwrap() - sizes.iter().min().unwrap();
        ensure(spread <= 1, format!("fold sizes {sizes:?}"))?;
        if n == 59255 {
            ensure(sizes == [11851; 5], format!("fold sizes {sizes:?}"))?;
        }
        ensure(kfold_indices(n, 5, 42).map_err(|e| e.to_string())? == folds, "rerun differs")?;
        detail.push(format!("{n} -> {sizes:?}"));
    }
    Ok(detail.join("; "))
}

fn corpus_file(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/corpus").join(name)
}

/// Runs the scripted session into `dir`; returns everything it produced.
fn cli_session(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let systems: Vec<PathBuf> = ["sys_a.amr", "sys_b.amr", "sys_c.amr"].iter().map(|s| corpus_file(s)).collect();
    let gold = corpus_file("gold.amr");
    let scores = corpus_file("scores.jsonl");
    let sys: Vec<&OsStr> = systems.iter().map(|p| p.as_os_str()).collect();
    let path = |name: &str| dir.join(name).into_os_string();
    let steps: Vec<(&str, Vec<std::ffi::OsString>)> = vec![
        ("validate", vec!["validate".into(), gold.clone().into(), "--report".into(), path("validate.json")]),
        ("smatch", vec!["smatch".into(), "--breakdown".into(), systems[0].clone().into(), gold.clone().into()]),
        (
            "merge",
            [
                &["merge".into(), "--strategy".into(), "graphene-base".into(), "--out".into(), path("merged.amr")][..],
                &os(&sys),
            ]
            .concat(),
        ),
        (
            "select",
            [
                &[
                    "select".into(),
                    "--strategy".into(),
                    "ppl-zero".into(),
                    "--scores".into(),
                    scores.clone().into(),
                    "--out".into(),
                    path("selected.amr"),
                ][..],
                &os(&sys),
            ]
            .concat(),
        ),
        (
            "evaluate",
            [
                &[
                    "evaluate".into(),
                    "--gold".into(),
                    gold.clone().into(),
                    "--strategies".into(),
                    "graphene-base,graphene-smatch,smatch-avg,ppl-zero,ppl-avg,oracle-best".into(),
                    "--scores".into(),
                    scores.clone().into(),
                    "--no-time".into(),
                    "--report".into(),
                    path("report.json"),
                ][..],
                &os(&sys),
            ]
            .concat(),
        ),
        (
            "split",
            vec!["split".into(), "--folds".into(), "5".into(), "--out-dir".into(), path("folds"), gold.clone().into()],
        ),
    ];
    let mut produced = Vec::new();
    for (name, args) in steps {
        let out = Command::new(env!("CARGO_BIN_EXE_amr-ens"))
            .args(&args)
            .env_remove("AMR_SCORER_CMD")
            .output()
            .map_err(|e| e.to_string())?;
        let stdout = String::from_utf8_lossy(&out.stdout).replace(&dir.display().to_string(), "<dir>");
        ensure(
            out.status.success(),
            format!("{name} exited {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)),
        )?;
        produced.push((format!("{name} stdout"), stdout.into_bytes()));
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir.join("folds"))
        .map_err(|e| e.to_string())?
        .map(|e| e.map(|e| e.path()).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    files.sort();
    for f in ["validate.json", "merged.amr", "selected.amr", "report.json"].iter().map(|f| dir.join(f)).chain(files) {
        let bytes = std::fs::read(&f).map_err(|e| format!("{}: {e}", f.display()))?;
        produced.push((f.strip_prefix(dir).unwrap().display().to_string(), bytes));
    }
    Ok(produced)
}

fn os(args: &[&OsStr]) -> Vec<std::ffi::OsString> {
    args.iter().map(|a| a.to_os_string()).collect()
}

fn cli_end_to_end() -> Outcome {
    let first = tempfile::tempdir().map_err(|e| e.to_string())?;
    let second = tempfile::tempdir().map_err(|e| e.to_string())?;
    let a = cli_session(first.path())?;
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(first.path().join("report.json")).unwrap()).map_err(|e| e.to_string())?;
    let columns: Vec<&str> =
        report["columns"].as_array().ok_or("no columns")?.iter().filter_map(|c| c.as_str()).collect();
    ensure(columns == REPORT_COLUMNS, format!("columns {columns:?}"))?;
    let rows = report["rows"].as_array().ok_or("no rows")?;
    for row in rows {
        for c in REPORT_COLUMNS {
            ensure(row.get(c).is_some(), format!("row lacks {c}"))?;
        }
    }
    let b = cli_session(second.path())?;
    ensure(a.len() == b.len(), "reruns produced different file sets")?;
    for ((name, x), (_, y)) in a.iter().zip(&b) {
        ensure(x == y, format!("{name} differs between runs"))?;
    }
    Ok(format!(
        "6 steps exit 0, {} report rows with {} columns, {} outputs byte-identical",
        rows.len(),
        columns.len(),
        a.len()
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("hill climbing vs exact search", climber_matches_exact),
        ("serialize/parse round trip", round_trip),
        ("reference triples and pinned scores", triple_fixtures),
        ("merge tie keeps both edges", graphene_tie),
        ("missing vs wrong triples", asymmetry),
        ("validator injections", validator_soundness),
        ("selection equivalence and oracle dominance", selection_equivalence),
        ("fold splitter", fold_splitter),
        ("command-line session", cli_end_to_end),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {}. {name}: {detail} [{secs:.1}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {}. {name}: {why} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("{}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
