mod common;

use amr_ensemble::graph::{extract_triples, rename_variables, serialize_penman, Triple};
use amr_ensemble::graphene::{graphene_base, graphene_smatch, merge_with_pivot, MergeConfig};
use amr_ensemble::smatch::{best_alignment_exact, compute_smatch, isomorphic};
use amr_ensemble::validate::{validate_graph, ViolationKind};
use common::{brute_force_matched, fixture, fixture_entries, g};

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

fn triple_strings(graph: &amr_ensemble::graph::AmrGraph) -> Vec<String> {
    extract_triples(&rename_variables(graph)).iter().map(Triple::to_string).collect()
}

#[test]
fn gold_graph_decomposes_into_the_listing() {
    assert_eq!(triple_strings(&fixture("banderas_gold.amr")), LISTING);
    assert_eq!(extract_triples(&fixture("banderas_pred1.amr")).len(), 16);
    assert_eq!(extract_triples(&fixture("banderas_pred2.amr")).len(), 17);
}

#[test]
fn linearized_form_attaches_the_date_elsewhere() {
    let lin = fixture("linearized_listing.amr");
    let gold = fixture("banderas_gold.amr");
    let lin_triples = triple_strings(&lin);
    assert_eq!(lin_triples.len(), 17);
    let differ: Vec<&String> = lin_triples.iter().filter(|t| !LISTING.contains(&t.as_str())).collect();
    assert_eq!(differ, ["(z3, :time, z5)"]);
    assert!(!isomorphic(&lin, &gold));
}

#[test]
fn fixtures_carry_sentence_metadata() {
    for name in ["banderas_gold.amr", "banderas_pred1.amr", "banderas_pred2.amr", "banderas_merged.amr"] {
        let entries = fixture_entries(name);
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0].id, "banderas");
        assert!(entries[0].sentence.as_deref().unwrap().starts_with("Antonio Banderas"));
    }
}

#[test]
fn prediction_scores_against_gold() {
    let gold = fixture("banderas_gold.amr");
    let p1 = fixture("banderas_pred1.amr");
    let p2 = fixture("banderas_pred2.amr");
    let s1 = best_alignment_exact(&p1, &gold).unwrap().1;
    let s2 = best_alignment_exact(&p2, &gold).unwrap().1;
    assert_eq!((s1.matched, s1.candidate_total, s1.reference_total), (13, 16, 17));
    assert_eq!((s2.matched, s2.candidate_total, s2.reference_total), (16, 17, 17));
    assert_eq!(s1.f1_ratio(), (26, 33));
    assert_eq!(s2.f1_ratio(), (32, 34));
    assert_eq!(compute_smatch(&p1, &gold, 8), s1);
    assert_eq!(compute_smatch(&p2, &gold, 8), s2);
}

#[test]
fn merging_the_two_predictions_keeps_both_premiere_edges() {
    let p1 = fixture("banderas_pred1.amr");
    let p2 = fixture("banderas_pred2.amr");
    let expected = fixture("banderas_merged.amr");
    let merged = merge_with_pivot(&p1, std::slice::from_ref(&p2), &MergeConfig::default()).unwrap();
    assert!(isomorphic(&merged.graph, &expected), "{}", serialize_penman(&merged.graph));
    let report = validate_graph(&merged.graph);
    assert!(report.has(ViolationKind::ArgOnNonPredicate));
}

#[test]
fn both_ensembles_land_on_the_first_pivot() {
    let candidates = [fixture("banderas_pred1.amr"), fixture("banderas_pred2.amr")];
    let expected = fixture("banderas_merged.amr");
    let cfg = MergeConfig::default();
    let base = graphene_base(&candidates, &cfg).unwrap();
    assert_eq!(base.pivot, Some(0));
    assert_eq!(base.pivot_scores[0], base.pivot_scores[1]);
    assert!(isomorphic(&base.graph, &expected));
    let smatch = graphene_smatch(&candidates, &cfg).unwrap();
    assert_eq!(smatch.pivot, Some(0));
    assert!(smatch.pivot_scores[0] > smatch.pivot_scores[1]);
    assert!(isomorphic(&smatch.graph, &expected));
}

#[test]
fn merged_graph_outscores_the_first_prediction() {
    let gold = fixture("banderas_gold.amr");
    let merged = fixture("banderas_merged.amr");
    let m = best_alignment_exact(&merged, &gold).unwrap().1;
    assert_eq!((m.matched, m.candidate_total, m.reference_total), (16, 20, 17));
    assert_eq!(brute_force_matched(&merged, &gold), 16);
    let p1 = best_alignment_exact(&fixture("banderas_pred1.amr"), &gold).unwrap().1;
    assert!(32 * 33 > 26 * 37 && m.f1 > p1.f1);
}

#[test]
fn dual_edge_instance() {
    let gold = g("(p / premiere-01 :ARG1 (m / movie))");
    let wrong = g("(p / premiere-01 :mod (m / movie))");
    let both = g("(p / premiere-01 :mod (m / movie) :ARG1 m)");
    let w = best_alignment_exact(&wrong, &gold).unwrap().1;
    let b = best_alignment_exact(&both, &gold).unwrap().1;
    assert_eq!(w.f1_ratio(), (6, 8));
    assert_eq!(b.f1_ratio(), (8, 9));
}
