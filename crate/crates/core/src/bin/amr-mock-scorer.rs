//! Answers scorer requests on stdin with mock perplexities on stdout.

use std::io::{BufRead, Write};

use amr_ensemble::select::{MockScorer, ScorerRequest, ScorerResponse};
use amr_ensemble::smatch::{SmatchConfig, DEFAULT_RESTARTS, DEFAULT_SEED};
use clap::Parser;

/// Deterministic perplexity scorer for offline runs: 1 / (1 + mean SMATCH
/// of the target against the context graphs).
#[derive(Parser)]
#[command(name = "amr-mock-scorer", version)]
struct Args {
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    restarts: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

fn main() {
    let args = Args::parse();
    let scorer = MockScorer::new(SmatchConfig { restarts: args.restarts, seed: args.seed });
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for line in std::io::stdin().lock().lines() {
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                eprintln!("amr-mock-scorer: {e}");
                std::process::exit(1);
            }
        };
        if line.trim().is_empty() {
            continue;
        }
        let response = serde_json::from_str::<ScorerRequest>(&line).map_err(|e| e.to_string()).and_then(|req| {
            scorer
                .score_one(&req)
                .map(|p| ScorerResponse { request_id: req.request_id.clone(), perplexity: p.value() })
                .map_err(|e| e.to_string())
        });
        match response {
            Ok(r) => {
                let _ = writeln!(out, "{}", serde_json::to_string(&r).expect("response serializes"));
                let _ = out.flush();
            }
            Err(e) => {
                eprintln!("amr-mock-scorer: {e}");
                std::process::exit(1);
            }
        }
    }
}
