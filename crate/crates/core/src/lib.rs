//! Scoring, validation and ensembling of AMR graph predictions.
//!
//! * [`graph`]: the AMR data model, Penman notation and triple extraction.
//! * [`smatch`]: SMATCH scoring with hill climbing, an exhaustive oracle and
//!   fine-grained sub-metrics.
//! * [`validate`]: structural well-formedness checks.
//! * [`graphene`]: pivot-voting graph merging.
//! * [`select`]: selection ensembles driven by SMATCH or external
//!   perplexity scorers.
//! * [`corpus`]: corpus files, k-fold splits and the evaluation harness.
//! * [`cli`]: the `amr-ens` command line front end.
//!
//! ```
//! use amr_ensemble::graph::AmrGraph;
//! use amr_ensemble::smatch::compute_smatch;
//!
//! let gold = AmrGraph::parse("(a / ask-01 :ARG0 (b / boy))")?;
//! let pred = AmrGraph::parse("(a / ask-01 :ARG0 (b / girl))")?;
//! assert_eq!(compute_smatch(&pred, &gold, 4).f1, 0.75);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod cli;
pub mod corpus;
pub mod graph;
pub mod graphene;
pub mod select;
pub mod smatch;
pub mod validate;
