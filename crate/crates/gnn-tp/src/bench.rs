//! Experiment harness: a flat key=value configuration format, exact
//! analytic communication/compute predictions, measured-vs-predicted
//! comparison, and a runner that writes `metrics.csv`, `ledger.json`, and
//! `trace.jsonl`.
//!
//! Every predicted quantity is an exact integer, not an estimate: the
//! engines move deterministic row sets, so the ledger must match the
//! closed forms scalar for scalar. `compare_measured_vs_predicted` checks
//! gather/split volumes, fetch volumes, per-worker compute counters, and
//! the gather/split round count. All-reduce, all-share, and scatter
//! volumes are measured but not predicted (they are implementation
//! transport, not part of the cost model).

use std::fs;
use std::io::Write;
use std::ops::Range;
use std::path::{Path, PathBuf};

use crate::collective::{CommKind, CommLedger};
use crate::decoupled::{DecoupledConfig, ModelKind};
use crate::dense::DenseMatrix;
use crate::engine::{
    run_training, DataSplit, EngineConfig, EngineKind, EpochReport, ModelSpec, TrainInput,
    TrainOutput,
};
use crate::graph::{partition_chunks, Graph, NormMode};
use crate::layers::EdgeAttention;
use crate::partition::even_ranges;
use crate::scheduler::{build_comm_plan, TraceEvent};
use crate::synth::{generate_synthetic, SyntheticKind};
use crate::{Error, Result};

/// Which synthetic dataset an experiment trains on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    TwoCluster,
    PowerLaw,
}

/// Full experiment description. Built from [`ExperimentConfig::default`],
/// then overridden by a config file and/or CLI flags, every value through
/// the same [`ExperimentConfig::apply`] validation.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub engine: EngineKind,
    pub workers: usize,
    pub epochs: usize,
    pub seed: u64,
    pub chunks: usize,
    pub pipelining: bool,
    pub learning_rate: f64,
    pub norm: NormMode,
    /// `coupled`, `decoupled-gcn`, or `decoupled-gat`.
    pub model: ModelShape,
    /// Layer dimensions, input first. For decoupled models the last entry
    /// is the class count.
    pub layer_dims: Vec<usize>,
    pub prop_rounds: usize,
    pub gamma: f64,
    pub dataset: DatasetKind,
    // Two-cluster parameters.
    pub size_a: usize,
    pub size_b: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub noise_std: f64,
    // Power-law parameters.
    pub vertices: usize,
    pub exponent: f64,
    /// 0 means the generator default.
    pub max_degree: usize,
    pub symmetric: bool,
    pub classes: usize,
    /// Output directory; `None` skips file output.
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelShape {
    Coupled,
    DecoupledGcn,
    DecoupledGat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            engine: EngineKind::DecoupledTp,
            workers: 4,
            epochs: 5,
            seed: 7,
            chunks: 8,
            pipelining: false,
            learning_rate: 0.5,
            norm: NormMode::SymSelfLoop,
            model: ModelShape::DecoupledGcn,
            layer_dims: vec![8, 8, 2],
            prop_rounds: 2,
            gamma: 0.9,
            dataset: DatasetKind::TwoCluster,
            size_a: 60,
            size_b: 60,
            p_in: 0.3,
            p_out: 0.05,
            noise_std: 0.3,
            vertices: 300,
            exponent: 2.5,
            max_degree: 0,
            symmetric: true,
            classes: 2,
            out: None,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for key {key:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "on" | "1" => Ok(true),
        "false" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!(
            "invalid boolean {value:?} for key {key:?}"
        ))),
    }
}

/// Parses an engine name as used by the CLI and config files.
pub fn parse_engine(value: &str) -> Result<EngineKind> {
    match value {
        "single" => Ok(EngineKind::SingleWorker),
        "dp" => Ok(EngineKind::DataParallel),
        "naive-tp" => Ok(EngineKind::NaiveTp),
        "decoupled-tp" => Ok(EngineKind::DecoupledTp),
        _ => Err(Error::Config(format!(
            "unknown engine {value:?} (expected single, dp, naive-tp, or decoupled-tp)"
        ))),
    }
}

impl ExperimentConfig {
    /// Applies one `key = value` setting.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "engine" => self.engine = parse_engine(value)?,
            "workers" => self.workers = parse_num(key, value)?,
            "epochs" => self.epochs = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "chunks" => self.chunks = parse_num(key, value)?,
            "pipelining" => self.pipelining = parse_bool(key, value)?,
            "learning_rate" => self.learning_rate = parse_num(key, value)?,
            "norm" => {
                self.norm = match value {
                    "sym-self-loop" => NormMode::SymSelfLoop,
                    "gcn-degree" => NormMode::GcnDegree,
                    _ => {
                        return Err(Error::Config(format!(
                            "unknown norm {value:?} (expected sym-self-loop or gcn-degree)"
                        )))
                    }
                }
            }
            "model" => {
                self.model = match value {
                    "coupled" => ModelShape::Coupled,
                    "decoupled-gcn" => ModelShape::DecoupledGcn,
                    "decoupled-gat" => ModelShape::DecoupledGat,
                    _ => {
                        return Err(Error::Config(format!(
                            "unknown model {value:?} (expected coupled, decoupled-gcn, or decoupled-gat)"
                        )))
                    }
                }
            }
            "layer_dims" => {
                let dims: Result<Vec<usize>> = value
                    .split(',')
                    .map(|d| parse_num::<usize>(key, d.trim()))
                    .collect();
                self.layer_dims = dims?;
            }
            "prop_rounds" => self.prop_rounds = parse_num(key, value)?,
            "gamma" => self.gamma = parse_num(key, value)?,
            "dataset" => {
                self.dataset = match value {
                    "two-cluster" => DatasetKind::TwoCluster,
                    "power-law" => DatasetKind::PowerLaw,
                    _ => {
                        return Err(Error::Config(format!(
                            "unknown dataset {value:?} (expected two-cluster or power-law)"
                        )))
                    }
                }
            }
            "size_a" => self.size_a = parse_num(key, value)?,
            "size_b" => self.size_b = parse_num(key, value)?,
            "p_in" => self.p_in = parse_num(key, value)?,
            "p_out" => self.p_out = parse_num(key, value)?,
            "noise_std" => self.noise_std = parse_num(key, value)?,
            "vertices" => self.vertices = parse_num(key, value)?,
            "exponent" => self.exponent = parse_num(key, value)?,
            "max_degree" => self.max_degree = parse_num(key, value)?,
            "symmetric" => self.symmetric = parse_bool(key, value)?,
            "classes" => self.classes = parse_num(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            _ => return Err(Error::Config(format!("unknown configuration key {key:?}"))),
        }
        Ok(())
    }

    /// Parses a config file body: one `key = value` per line, `#` comments
    /// and blank lines ignored. Unknown keys and bad values are reported
    /// with their 1-based line number.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("expected `key = value`, got {line:?}"),
                });
            };
            cfg.apply(key.trim(), value.trim()).map_err(|e| Error::Parse {
                line: idx + 1,
                msg: e.to_string(),
            })?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse_str(&fs::read_to_string(path)?)
    }

    /// The model spec this experiment trains.
    pub fn model_spec(&self) -> ModelSpec {
        match self.model {
            ModelShape::Coupled => ModelSpec::Coupled {
                layer_dims: self.layer_dims.clone(),
            },
            ModelShape::DecoupledGcn | ModelShape::DecoupledGat => {
                ModelSpec::Decoupled(DecoupledConfig {
                    nn_depth: self.layer_dims.len().saturating_sub(1),
                    prop_rounds: self.prop_rounds,
                    gamma: self.gamma,
                    layer_dims: self.layer_dims.clone(),
                    model_kind: match self.model {
                        ModelShape::DecoupledGat => ModelKind::DecoupledGat,
                        _ => ModelKind::DecoupledGcn,
                    },
                })
            }
        }
    }

    /// The engine configuration this experiment runs.
    pub fn engine_config(&self) -> EngineConfig {
        EngineConfig {
            kind: self.engine,
            workers: self.workers,
            model: self.model_spec(),
            norm_mode: self.norm,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            seed: self.seed,
            chunks: self.chunks,
            pipelining: self.pipelining,
        }
    }

    /// Generates the dataset and split. The dataset is seeded by `seed`;
    /// the split by `seed ^ SPLIT_SALT` so changing one leaves the other.
    pub fn build_dataset(&self) -> Result<(Graph, DenseMatrix, Vec<usize>, DataSplit)> {
        const SPLIT_SALT: u64 = 0x5EED_5EED;
        let kind = match self.dataset {
            DatasetKind::TwoCluster => SyntheticKind::TwoCluster {
                size_a: self.size_a,
                size_b: self.size_b,
                p_in: self.p_in,
                p_out: self.p_out,
                feature_dim: self.layer_dims.first().copied().unwrap_or(1),
                noise_std: self.noise_std,
            },
            DatasetKind::PowerLaw => SyntheticKind::PowerLaw {
                num_vertices: self.vertices,
                exponent: self.exponent,
                max_degree: if self.max_degree == 0 {
                    None
                } else {
                    Some(self.max_degree)
                },
                symmetric: self.symmetric,
                feature_dim: self.layer_dims.first().copied().unwrap_or(1),
                classes: self.classes,
            },
        };
        let (graph, features, labels) = generate_synthetic(&kind, self.seed)?;
        let dataset_classes = match self.dataset {
            DatasetKind::TwoCluster => 2,
            DatasetKind::PowerLaw => self.classes,
        };
        if self.layer_dims.last().copied().unwrap_or(0) != dataset_classes {
            return Err(Error::Config(format!(
                "model emits {} classes but the dataset has {dataset_classes}",
                self.layer_dims.last().copied().unwrap_or(0)
            )));
        }
        let split = DataSplit::standard(graph.num_vertices, self.seed ^ SPLIT_SALT);
        Ok((graph, features, labels, split))
    }
}

/// Exact per-epoch, per-worker cost predictions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostModel {
    /// Scalars received per worker per epoch in gather/split collectives.
    pub gather_split_received: Vec<u64>,
    /// Scalars received per worker per epoch in point-to-point fetches
    /// (data-parallel layer inputs; GAT score/embedding fetches).
    pub fetch_received: Vec<u64>,
    pub edge_work: Vec<u64>,
    pub nn_vertex_work: Vec<u64>,
    /// Gather/split rounds per epoch.
    pub gather_split_rounds: u64,
}

fn slice_widths(total: usize, workers: usize) -> Vec<usize> {
    even_ranges(total, workers).iter().map(Range::len).collect()
}

/// Rows of `set` that fall in `range` (both ascending).
fn rows_in_range(set: &[usize], range: &Range<usize>) -> usize {
    let lo = set.partition_point(|&r| r < range.start);
    let hi = set.partition_point(|&r| r < range.end);
    hi - lo
}

/// Closed-form cost prediction for one experiment on one graph. The
/// formulas mirror the collectives exactly:
///
/// * gather over rows `R` at width `D`: worker `i` receives
///   `|R ∩ own_i| * (D - w_i)`;
/// * split over rows `R` at width `D`: worker `i` receives
///   `(|R| - |R ∩ own_i|) * w_i`;
/// * data-parallel fetch at width `D`: worker `i` receives `|R_i| * D`
///   with `R_i` its remote in-neighbor set.
pub fn predict_costs(cfg: &ExperimentConfig, graph: &Graph) -> Result<CostModel> {
    let n = cfg.workers;
    let v = graph.num_vertices;
    let e = graph.num_edges;
    let ranges = even_ranges(v, n);
    let own_rows: Vec<u64> = ranges.iter().map(|r| r.len() as u64).collect();
    let mut model = CostModel {
        gather_split_received: vec![0; n],
        fetch_received: vec![0; n],
        edge_work: vec![0; n],
        nn_vertex_work: vec![0; n],
        gather_split_rounds: 0,
    };
    let gather_recv = |width: usize, i: usize, rows_i: u64| -> u64 {
        let w = slice_widths(width, n)[i] as u64;
        rows_i * (width as u64 - w)
    };
    let split_recv = |width: usize, i: usize, rows_total: u64, rows_i: u64| -> u64 {
        let w = slice_widths(width, n)[i] as u64;
        (rows_total - rows_i) * w
    };

    match cfg.engine {
        EngineKind::SingleWorker => {
            if n != 1 {
                return Err(Error::Config(
                    "the single-worker engine predicts costs for exactly 1 worker".into(),
                ));
            }
            match cfg.model {
                ModelShape::Coupled => {
                    let dims = &cfg.layer_dims;
                    let layers = dims.len() - 1;
                    let mut ew = 0u64;
                    for (l, &d) in dims.iter().take(layers).enumerate() {
                        ew += (e * d) as u64; // forward
                        if l > 0 {
                            ew += (e * d) as u64; // backward
                        }
                    }
                    model.edge_work[0] = ew;
                    model.nn_vertex_work[0] = (2 * layers * v) as u64;
                }
                _ => {
                    let c = *cfg.layer_dims.last().unwrap();
                    model.edge_work[0] = (2 * cfg.prop_rounds * e * c) as u64;
                    model.nn_vertex_work[0] = (2 * (cfg.layer_dims.len() - 1) * v) as u64;
                }
            }
        }
        EngineKind::NaiveTp => {
            if cfg.model != ModelShape::Coupled {
                return Err(Error::Config(
                    "the tensor-parallel coupled engine predicts coupled models only".into(),
                ));
            }
            let dims = &cfg.layer_dims;
            let layers = dims.len() - 1;
            model.gather_split_rounds = (4 * layers - 2) as u64;
            for i in 0..n {
                let mut recv = 0u64;
                let mut ew = 0u64;
                for l in 0..layers {
                    // Forward: gather at the layer input width; split of the
                    // layer output except after the last layer.
                    recv += gather_recv(dims[l], i, own_rows[i]);
                    if l + 1 != layers {
                        recv += split_recv(dims[l + 1], i, v as u64, own_rows[i]);
                    }
                    // Backward: split of the input gradient at every layer,
                    // gather except at the first.
                    recv += split_recv(dims[l], i, v as u64, own_rows[i]);
                    if l > 0 {
                        recv += gather_recv(dims[l], i, own_rows[i]);
                    }
                    let w = slice_widths(dims[l], n)[i] as u64;
                    ew += 2 * (e as u64) * w;
                }
                model.gather_split_received[i] = recv;
                model.edge_work[i] = ew;
                model.nn_vertex_work[i] = 2 * layers as u64 * own_rows[i];
            }
        }
        EngineKind::DataParallel => {
            if cfg.model != ModelShape::Coupled {
                return Err(Error::Config(
                    "the data-parallel engine predicts coupled models only".into(),
                ));
            }
            let dims = &cfg.layer_dims;
            let layers = dims.len() - 1;
            for i in 0..n {
                let (remote_rows, own_in_edges) = remote_in_neighbors(graph, &ranges, i);
                let mut fetch = 0u64;
                let mut ew = 0u64;
                for (l, &d) in dims.iter().take(layers).enumerate() {
                    fetch += (remote_rows * d) as u64;
                    ew += (own_in_edges * d) as u64;
                    if l > 0 {
                        ew += (own_in_edges * d) as u64;
                    }
                }
                model.fetch_received[i] = fetch;
                model.edge_work[i] = ew;
                model.nn_vertex_work[i] = 2 * layers as u64 * own_rows[i];
            }
        }
        EngineKind::DecoupledTp => {
            if cfg.model == ModelShape::Coupled {
                return Err(Error::Config(
                    "the decoupled engine predicts decoupled models only".into(),
                ));
            }
            let c = *cfg.layer_dims.last().unwrap();
            let rounds = cfg.prop_rounds;
            let nn_layers = cfg.layer_dims.len() - 1;
            let widths = slice_widths(c, n);
            if rounds > 0 {
                model.gather_split_rounds = 4;
                // Round 1 stages only the rows some chunk actually reads.
                let chunks = partition_chunks(graph, cfg.chunks)?;
                let gat = cfg.model == ModelShape::DecoupledGat;
                let zero_att = EdgeAttention {
                    alpha: vec![0.0; e],
                };
                let norm_coeffs;
                let plan_coeffs: &dyn crate::layers::AggCoeffs = if gat {
                    &zero_att
                } else {
                    norm_coeffs = crate::graph::compute_norm(graph, cfg.norm)?;
                    &norm_coeffs
                };
                let plan = build_comm_plan(&chunks, plan_coeffs, n)?;
                let needed = plan.needed_union();
                for i in 0..n {
                    let w = widths[i] as u64;
                    let needed_own = rows_in_range(&needed, &ranges[i]) as u64;
                    let mut recv = (needed.len() as u64 - needed_own) * w; // round 1 split
                    recv += 2 * gather_recv(c, i, own_rows[i]); // rounds 2 and 4
                    recv += split_recv(c, i, v as u64, own_rows[i]); // round 3
                    model.gather_split_received[i] = recv;
                    model.edge_work[i] = 2 * rounds as u64 * e as u64 * w;
                    if gat {
                        let (remote_rows, _) = remote_in_neighbors(graph, &ranges, i);
                        // Forward score fetch (width 1); with one round the
                        // backward pass also fetches embeddings (width C).
                        let mut fetch = remote_rows as u64;
                        if rounds == 1 {
                            fetch += (remote_rows * c) as u64;
                        }
                        model.fetch_received[i] = fetch;
                    }
                }
            }
            for i in 0..n {
                model.nn_vertex_work[i] = 2 * nn_layers as u64 * own_rows[i];
            }
        }
    }
    Ok(model)
}

/// `(|R_i|, in-edges of own destinations)` for worker `i`: the remote
/// in-neighbor count drives fetch volume, the in-edge count drives
/// data-parallel edge work.
fn remote_in_neighbors(graph: &Graph, ranges: &[Range<usize>], i: usize) -> (usize, usize) {
    let own = &ranges[i];
    let mut seen = vec![false; graph.num_vertices];
    let mut in_edges = 0;
    for v in own.clone() {
        for &u in graph.in_neighbors_of(v) {
            in_edges += 1;
            seen[u] = true;
        }
    }
    let remote = seen
        .iter()
        .enumerate()
        .filter(|&(u, &s)| s && !own.contains(&u))
        .count();
    (remote, in_edges)
}

/// Per-worker measured-vs-predicted comparison over a whole run.
#[derive(Debug, Clone)]
pub struct WorkerCostDelta {
    pub worker: usize,
    pub gather_split_measured: u64,
    pub gather_split_predicted: u64,
    pub fetch_measured: u64,
    pub fetch_predicted: u64,
    pub edge_work_measured: u64,
    pub edge_work_predicted: u64,
    pub nn_work_measured: u64,
    pub nn_work_predicted: u64,
}

impl WorkerCostDelta {
    pub fn exact(&self) -> bool {
        self.gather_split_measured == self.gather_split_predicted
            && self.fetch_measured == self.fetch_predicted
            && self.edge_work_measured == self.edge_work_predicted
            && self.nn_work_measured == self.nn_work_predicted
    }
}

/// Outcome of [`compare_measured_vs_predicted`].
#[derive(Debug, Clone)]
pub struct CostReport {
    pub per_worker: Vec<WorkerCostDelta>,
    pub rounds_measured: u64,
    pub rounds_predicted: u64,
    pub edge_imbalance_measured: f64,
    pub edge_imbalance_predicted: f64,
    /// True when every measured quantity equals its prediction.
    pub exact: bool,
}

fn imbalance(values: &[u64]) -> f64 {
    let max = values.iter().copied().max().unwrap_or(0);
    let min = values.iter().copied().min().unwrap_or(0);
    if min == 0 {
        if max == 0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        max as f64 / min as f64
    }
}

fn ledger_received_by(ledger: &CommLedger, worker: usize, kinds: &[CommKind]) -> u64 {
    ledger
        .records
        .iter()
        .filter(|r| r.worker == worker && kinds.contains(&r.kind))
        .map(|r| r.scalars_received)
        .sum()
}

/// Checks a finished run against the analytic model. Every comparison is
/// exact integer equality; `epochs` scales the per-epoch predictions.
pub fn compare_measured_vs_predicted(
    output: &TrainOutput,
    epochs: u64,
    model: &CostModel,
) -> CostReport {
    let n = model.gather_split_received.len();
    let mut per_worker = Vec::with_capacity(n);
    for i in 0..n {
        let edge_measured: u64 = output
            .reports
            .iter()
            .map(|r| r.per_worker[i].edge_work)
            .sum();
        let nn_measured: u64 = output
            .reports
            .iter()
            .map(|r| r.per_worker[i].nn_vertex_work)
            .sum();
        per_worker.push(WorkerCostDelta {
            worker: i,
            gather_split_measured: ledger_received_by(
                &output.ledger,
                i,
                &[CommKind::Gather, CommKind::Split],
            ),
            gather_split_predicted: model.gather_split_received[i] * epochs,
            fetch_measured: ledger_received_by(&output.ledger, i, &[CommKind::Fetch]),
            fetch_predicted: model.fetch_received[i] * epochs,
            edge_work_measured: edge_measured,
            edge_work_predicted: model.edge_work[i] * epochs,
            nn_work_measured: nn_measured,
            nn_work_predicted: model.nn_vertex_work[i] * epochs,
        });
    }
    let rounds_measured = output.ledger.gather_split_rounds() as u64;
    let rounds_predicted = model.gather_split_rounds * epochs;
    let edge_imbalance_measured = imbalance(
        &per_worker
            .iter()
            .map(|w| w.edge_work_measured)
            .collect::<Vec<_>>(),
    );
    let edge_imbalance_predicted = imbalance(&model.edge_work);
    let exact = per_worker.iter().all(WorkerCostDelta::exact) && rounds_measured == rounds_predicted;
    CostReport {
        per_worker,
        rounds_measured,
        rounds_predicted,
        edge_imbalance_measured,
        edge_imbalance_predicted,
        exact,
    }
}

/// Files written by [`run_experiment`].
#[derive(Debug, Clone)]
pub struct OutputPaths {
    pub metrics_csv: PathBuf,
    pub ledger_json: PathBuf,
    pub trace_jsonl: PathBuf,
}

/// Everything one experiment produced.
pub struct ExperimentOutput {
    pub reports: Vec<EpochReport>,
    pub ledger: CommLedger,
    pub trace: Vec<TraceEvent>,
    pub cost: CostReport,
    pub paths: Option<OutputPaths>,
}

/// One CSV row per epoch: loss/accuracy plus per-worker compute and
/// communication extremes. No wall-clock numbers — the file is
/// byte-identical across reruns of the same configuration.
fn write_metrics_csv(path: &Path, reports: &[EpochReport]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(
        f,
        "epoch,loss,train_acc,val_acc,max_edge_work,min_edge_work,\
         max_nn_vertex_work,min_nn_vertex_work,max_comm_scalars,min_comm_scalars"
    )?;
    for r in reports {
        let comm: Vec<u64> = r
            .per_worker
            .iter()
            .map(|w| w.scalars_sent + w.scalars_received)
            .collect();
        let edge: Vec<u64> = r.per_worker.iter().map(|w| w.edge_work).collect();
        let nn: Vec<u64> = r.per_worker.iter().map(|w| w.nn_vertex_work).collect();
        writeln!(
            f,
            "{},{},{},{},{},{},{},{},{},{}",
            r.epoch,
            r.loss,
            r.train_accuracy,
            r.val_accuracy,
            edge.iter().max().unwrap_or(&0),
            edge.iter().min().unwrap_or(&0),
            nn.iter().max().unwrap_or(&0),
            nn.iter().min().unwrap_or(&0),
            comm.iter().max().unwrap_or(&0),
            comm.iter().min().unwrap_or(&0),
        )?;
    }
    Ok(())
}

fn write_outputs(
    dir: &Path,
    reports: &[EpochReport],
    ledger: &CommLedger,
    trace: &[TraceEvent],
) -> Result<OutputPaths> {
    fs::create_dir_all(dir)?;
    let paths = OutputPaths {
        metrics_csv: dir.join("metrics.csv"),
        ledger_json: dir.join("ledger.json"),
        trace_jsonl: dir.join("trace.jsonl"),
    };
    write_metrics_csv(&paths.metrics_csv, reports)?;
    let json = serde_json::to_string_pretty(ledger)
        .map_err(|e| Error::Config(format!("ledger serialization failed: {e}")))?;
    fs::write(&paths.ledger_json, json + "\n")?;
    let mut f = fs::File::create(&paths.trace_jsonl)?;
    for ev in trace {
        let line = serde_json::to_string(ev)
            .map_err(|e| Error::Config(format!("trace serialization failed: {e}")))?;
        writeln!(f, "{line}")?;
    }
    Ok(paths)
}

/// Runs one experiment end to end: dataset, training, analytic check, and
/// (when an output directory is configured) the three output files.
/// Trace timestamps restart at zero each epoch; events are ordered by
/// epoch, then by begin time within it.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let (graph, features, labels, split) = cfg.build_dataset()?;
    let engine_cfg = cfg.engine_config();
    let input = TrainInput {
        graph: &graph,
        features: &features,
        labels: &labels,
        split: &split,
    };
    let output = run_training(&engine_cfg, &input)?;
    let model = predict_costs(cfg, &graph)?;
    let cost = compare_measured_vs_predicted(&output, cfg.epochs as u64, &model);
    let paths = match &cfg.out {
        Some(dir) => Some(write_outputs(dir, &output.reports, &output.ledger, &output.trace)?),
        None => None,
    };
    Ok(ExperimentOutput {
        reports: output.reports,
        ledger: output.ledger,
        trace: output.trace,
        cost,
        paths,
    })
}
