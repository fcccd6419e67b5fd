//! Experiment runner CLI. Loads an optional config file, applies flag
//! overrides, trains, prints per-epoch metrics and the measured-vs-
//! predicted communication check, and (with `--out`) writes
//! `metrics.csv`, `ledger.json`, and `trace.jsonl`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use gnn_tp::bench::{parse_engine, run_experiment, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "gnn-tp-bench",
    about = "Train a GNN with one of the four engines and audit its communication costs"
)]
struct Args {
    /// Config file of `key = value` lines (see ExperimentConfig).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Engine: single, dp, naive-tp, or decoupled-tp.
    #[arg(long)]
    engine: Option<String>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    chunks: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for metrics.csv, ledger.json, and trace.jsonl.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(args: Args) -> gnn_tp::Result<()> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(engine) = &args.engine {
        cfg.engine = parse_engine(engine)?;
    }
    if let Some(workers) = args.workers {
        cfg.workers = workers;
    }
    if let Some(chunks) = args.chunks {
        cfg.chunks = chunks;
    }
    if let Some(epochs) = args.epochs {
        cfg.epochs = epochs;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }

    let out = run_experiment(&cfg)?;
    println!(
        "engine={:?} workers={} chunks={} pipelining={} seed={}",
        cfg.engine, cfg.workers, cfg.chunks, cfg.pipelining, cfg.seed
    );
    for r in &out.reports {
        println!(
            "epoch {:>3}  loss {:.6}  train {:.3}  val {:.3}  test {:.3}",
            r.epoch, r.loss, r.train_accuracy, r.val_accuracy, r.test_accuracy
        );
    }
    let cost = &out.cost;
    println!(
        "gather/split rounds: measured {} predicted {}",
        cost.rounds_measured, cost.rounds_predicted
    );
    for w in &cost.per_worker {
        println!(
            "worker {}: gather/split recv {} (predicted {}), fetch recv {} (predicted {}), \
             edge work {} (predicted {})",
            w.worker,
            w.gather_split_measured,
            w.gather_split_predicted,
            w.fetch_measured,
            w.fetch_predicted,
            w.edge_work_measured,
            w.edge_work_predicted
        );
    }
    println!(
        "edge-work imbalance: {:.3}; cost model {}",
        cost.edge_imbalance_measured,
        if cost.exact { "exact" } else { "MISMATCH" }
    );
    if let Some(paths) = &out.paths {
        println!(
            "wrote {}, {}, {}",
            paths.metrics_csv.display(),
            paths.ledger_json.display(),
            paths.trace_jsonl.display()
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
