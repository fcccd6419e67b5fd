//! Four interchangeable training engines over the same model and graph.
//!
//! [`run_training`] dispatches to one of:
//!
//! * [`EngineKind::SingleWorker`] — no worker group, direct oracle
//!   computation; the reference every other engine is compared against.
//! * [`EngineKind::DataParallel`] — vertex-partitioned baseline; remote
//!   in-neighbor rows are fetched per layer, so communication and edge work
//!   follow the graph structure.
//! * [`EngineKind::NaiveTp`] — feature-dimension partitioning with a
//!   gather/split pair around every layer's NN update (4L-2 collective
//!   rounds per epoch).
//! * [`EngineKind::DecoupledTp`] — NN rounds first, then all propagation
//!   rounds on chunk-scheduled slices; exactly 4 gather/split rounds per
//!   epoch regardless of depth.
//!
//! All engines start from identical seed-derived parameters and run
//! full-batch gradient descent, so per-epoch losses agree with the
//! single-worker oracle to 1e-9 relative (bitwise at N=1); only the
//! grouping of cross-worker reductions differs.

pub mod data_parallel;
pub mod decoupled_tp;
pub mod naive_tp;
pub mod single;

use std::ops::Range;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::collective::{CommLedger, CommRecord};
use crate::decoupled::{DecoupledConfig, DecoupledParams, ModelKind};
use crate::dense::{glorot_init, DenseMatrix};
use crate::graph::{Graph, NormMode};
use crate::layers::LayerParams;
use crate::scheduler::TraceEvent;
use crate::{Error, Result};

/// Which training engine to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    SingleWorker,
    DataParallel,
    NaiveTp,
    DecoupledTp,
}

/// Model selection: a coupled GCN (aggregation interleaved with NN layers)
/// or a decoupled model (NN depth and propagation depth chosen
/// independently).
#[derive(Debug, Clone)]
pub enum ModelSpec {
    Coupled { layer_dims: Vec<usize> },
    Decoupled(DecoupledConfig),
}

impl ModelSpec {
    pub fn input_dim(&self) -> usize {
        match self {
            ModelSpec::Coupled { layer_dims } => layer_dims[0],
            ModelSpec::Decoupled(cfg) => cfg.layer_dims[0],
        }
    }

    pub fn classes(&self) -> usize {
        match self {
            ModelSpec::Coupled { layer_dims } => *layer_dims.last().unwrap(),
            ModelSpec::Decoupled(cfg) => cfg.classes(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Coupled { layer_dims } => {
                if layer_dims.len() < 2 {
                    return Err(Error::Config(
                        "coupled model needs at least input and output dims".into(),
                    ));
                }
                if layer_dims.iter().any(|&d| d == 0) {
                    return Err(Error::Config("layer dimensions must be positive".into()));
                }
                Ok(())
            }
            ModelSpec::Decoupled(cfg) => cfg.validate(),
        }
    }
}

/// Full configuration of one training run.
#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub kind: EngineKind,
    pub workers: usize,
    pub model: ModelSpec,
    pub norm_mode: NormMode,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Chunk count for the decoupled engine's propagation scheduling.
    pub chunks: usize,
    /// Overlap chunk staging with aggregation (decoupled engine).
    pub pipelining: bool,
}

/// Train/validation/test vertex masks.
#[derive(Debug, Clone)]
pub struct DataSplit {
    pub train: Vec<bool>,
    pub val: Vec<bool>,
    pub test: Vec<bool>,
}

impl DataSplit {
    /// Random 65/25/10 split by seeded shuffle.
    pub fn standard(num_vertices: usize, seed: u64) -> Self {
        let mut ids: Vec<usize> = (0..num_vertices).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ids.shuffle(&mut rng);
        let n_train = num_vertices * 65 / 100;
        let n_val = num_vertices * 25 / 100;
        let mut train = vec![false; num_vertices];
        let mut val = vec![false; num_vertices];
        let mut test = vec![false; num_vertices];
        for (i, &v) in ids.iter().enumerate() {
            if i < n_train {
                train[v] = true;
            } else if i < n_train + n_val {
                val[v] = true;
            } else {
                test[v] = true;
            }
        }
        DataSplit { train, val, test }
    }

    pub fn train_count(&self) -> usize {
        self.train.iter().filter(|&&m| m).count()
    }
}

/// Everything an engine consumes; shared read-only across workers.
#[derive(Debug, Clone, Copy)]
pub struct TrainInput<'a> {
    pub graph: &'a Graph,
    pub features: &'a DenseMatrix,
    pub labels: &'a [usize],
    pub split: &'a DataSplit,
}

/// Per-worker compute and communication counters for one epoch.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WorkerEpochStats {
    pub worker: usize,
    /// Edge-level aggregation work: sum over aggregation passes (forward
    /// and backward) of edges touched x feature width.
    pub edge_work: u64,
    /// NN work: sum over NN layer passes (forward and backward) of vertex
    /// rows processed.
    pub nn_vertex_work: u64,
    pub scalars_sent: u64,
    pub scalars_received: u64,
}

/// Coarse wall-clock phase breakdown for one epoch (max across workers;
/// informational only, never part of deterministic outputs).
#[derive(Debug, Clone, Copy, Default)]
pub struct PhaseTimes {
    pub forward_ns: u64,
    pub backward_ns: u64,
}

/// One epoch's metrics: loss/accuracy at the pre-update parameters plus
/// per-worker counters.
#[derive(Debug, Clone)]
pub struct EpochReport {
    pub epoch: usize,
    pub loss: f64,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
    pub test_accuracy: f64,
    pub per_worker: Vec<WorkerEpochStats>,
    pub phase: PhaseTimes,
}

impl EpochReport {
    fn ratio(max: u64, min: u64) -> f64 {
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

    /// max/min per-worker edge-work ratio (1.0 when perfectly balanced).
    pub fn edge_work_imbalance(&self) -> f64 {
        let max = self.per_worker.iter().map(|w| w.edge_work).max().unwrap_or(0);
        let min = self.per_worker.iter().map(|w| w.edge_work).min().unwrap_or(0);
        Self::ratio(max, min)
    }

    /// max/min per-worker NN vertex-work ratio.
    pub fn nn_work_imbalance(&self) -> f64 {
        let max = self
            .per_worker
            .iter()
            .map(|w| w.nn_vertex_work)
            .max()
            .unwrap_or(0);
        let min = self
            .per_worker
            .iter()
            .map(|w| w.nn_vertex_work)
            .min()
            .unwrap_or(0);
        Self::ratio(max, min)
    }
}

/// Result of a full training run.
pub struct TrainOutput {
    pub reports: Vec<EpochReport>,
    /// Merged collective ledger of the whole run (all epochs).
    pub ledger: CommLedger,
    /// Scheduler stage trace (decoupled engine only; empty otherwise).
    pub trace: Vec<TraceEvent>,
}

/// Validates the parts shared by every engine.
fn validate_common(cfg: &EngineConfig, input: &TrainInput) -> Result<()> {
    if cfg.workers == 0 {
        return Err(Error::Config("worker count must be at least 1".into()));
    }
    cfg.model.validate()?;
    let v = input.graph.num_vertices;
    if input.features.rows != v {
        return Err(Error::Shape(format!(
            "feature matrix has {} rows for a graph with {v} vertices",
            input.features.rows
        )));
    }
    if input.features.cols != cfg.model.input_dim() {
        return Err(Error::Shape(format!(
            "feature matrix has {} columns, model expects {}",
            input.features.cols,
            cfg.model.input_dim()
        )));
    }
    if input.labels.len() != v
        || input.split.train.len() != v
        || input.split.val.len() != v
        || input.split.test.len() != v
    {
        return Err(Error::Shape(
            "labels and split masks must cover every vertex".into(),
        ));
    }
    let classes = cfg.model.classes();
    if let Some(&bad) = input.labels.iter().find(|&&l| l >= classes) {
        return Err(Error::Config(format!(
            "label {bad} out of range for {classes} classes"
        )));
    }
    if input.split.train_count() == 0 {
        return Err(Error::Config("training mask is empty".into()));
    }
    if cfg.chunks == 0 || cfg.chunks > v {
        return Err(Error::Config(format!(
            "chunk count must be in [1, {v}], got {}",
            cfg.chunks
        )));
    }
    Ok(())
}

/// Runs the configured engine to completion.
pub fn run_training(cfg: &EngineConfig, input: &TrainInput) -> Result<TrainOutput> {
    validate_common(cfg, input)?;
    match cfg.kind {
        EngineKind::SingleWorker => single::run_single_worker(cfg, input),
        EngineKind::DataParallel => data_parallel::run_data_parallel(cfg, input),
        EngineKind::NaiveTp => naive_tp::run_naive_tp(cfg, input),
        EngineKind::DecoupledTp => decoupled_tp::run_decoupled_tp(cfg, input),
    }
}

/// Seed for layer `idx`'s initializer, derived so every engine and worker
/// agrees without communication.
fn layer_seed(base: u64, idx: u64) -> u64 {
    base ^ (idx + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Identical coupled-GCN weights on every caller with the same seed.
pub fn init_coupled_params(layer_dims: &[usize], seed: u64) -> Vec<LayerParams> {
    (0..layer_dims.len() - 1)
        .map(|l| {
            LayerParams::gcn(glorot_init(
                layer_dims[l],
                layer_dims[l + 1],
                layer_seed(seed, l as u64),
            ))
        })
        .collect()
}

/// Identical decoupled parameters (MLP plus attention for GAT) on every
/// caller with the same seed.
pub fn init_decoupled_params(cfg: &DecoupledConfig, seed: u64) -> Result<DecoupledParams> {
    let mlp = init_coupled_params(&cfg.layer_dims, seed);
    let attention = match cfg.model_kind {
        ModelKind::DecoupledGcn => None,
        ModelKind::DecoupledGat => {
            let c = cfg.classes();
            let w = glorot_init(c, c, layer_seed(seed, 101));
            let a = glorot_init(1, 2 * c, layer_seed(seed, 102)).data;
            Some(LayerParams::gat(w, a)?)
        }
    };
    Ok(DecoupledParams { mlp, attention })
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &x) in row.iter().enumerate() {
        if x > row[best] {
            best = j;
        }
    }
    best
}

/// Local fragments of the masked softmax cross-entropy and accuracy
/// counters, computed over one worker's owned logit rows.
///
/// Per-row arithmetic matches [`crate::dense::softmax_xent_loss`] exactly;
/// the engine sums fragments across workers in ascending id order, so the
/// single-worker value is reproduced bitwise at N=1 and to summation
/// grouping at N>1. `loss_sum` is the unnormalized sum; divide the reduced
/// total by the train count. `grad` rows are already scaled by
/// 1/train_count.
pub(crate) struct LossParts {
    pub loss_sum: f64,
    pub train_correct: f64,
    pub val_correct: f64,
    pub test_correct: f64,
    pub grad: DenseMatrix,
}

pub(crate) fn masked_loss_parts(
    logits_rows: &DenseMatrix,
    own: &Range<usize>,
    labels: &[usize],
    split: &DataSplit,
) -> Result<LossParts> {
    if logits_rows.rows != own.len() {
        return Err(Error::Shape(format!(
            "loss fragment over {} rows for a partition of {}",
            logits_rows.rows,
            own.len()
        )));
    }
    let classes = logits_rows.cols;
    let count = split.train_count();
    let inv = 1.0 / count as f64;
    let mut grad = DenseMatrix::zeros(logits_rows.rows, classes);
    let mut loss_sum = 0.0;
    let (mut train_correct, mut val_correct, mut test_correct) = (0.0, 0.0, 0.0);
    for (o, v) in own.clone().enumerate() {
        let row = logits_rows.row(o);
        let pred = argmax(row);
        if pred == labels[v] {
            if split.train[v] {
                train_correct += 1.0;
            }
            if split.val[v] {
                val_correct += 1.0;
            }
            if split.test[v] {
                test_correct += 1.0;
            }
        }
        if !split.train[v] {
            continue;
        }
        let label = labels[v];
        if label >= classes {
            return Err(Error::Contract(format!(
                "label {label} out of range for {classes} classes (vertex {v})"
            )));
        }
        let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for &x in row {
            sum += (x - mx).exp();
        }
        loss_sum += mx + sum.ln() - row[label];
        let g = grad.row_mut(o);
        for (j, &x) in row.iter().enumerate() {
            g[j] = ((x - mx).exp() / sum) * inv;
        }
        g[label] -= inv;
    }
    Ok(LossParts {
        loss_sum,
        train_correct,
        val_correct,
        test_correct,
        grad,
    })
}

/// Counts a mask's vertices, avoiding division by zero for empty masks.
pub(crate) fn mask_count(mask: &[bool]) -> f64 {
    mask.iter().filter(|&&m| m).count().max(1) as f64
}

/// Turns reduced scalar fragments into epoch metrics shared by all engines.
/// `reduced` is `[loss_sum, train_correct, val_correct, test_correct]`.
/// The loss normalization multiplies by a reciprocal to match
/// [`crate::dense::softmax_xent_loss`] bit for bit.
pub(crate) fn metrics_from_reduced(reduced: &[f64], split: &DataSplit) -> (f64, f64, f64, f64) {
    let loss = reduced[0] * (1.0 / split.train_count() as f64);
    let train_acc = reduced[1] / mask_count(&split.train);
    let val_acc = reduced[2] / mask_count(&split.val);
    let test_acc = reduced[3] / mask_count(&split.test);
    (loss, train_acc, val_acc, test_acc)
}

/// Full-batch gradient step on a stack of layer weights. Every engine and
/// worker applies the same elementwise operation in the same order, so
/// parameters stay identical wherever gradients are identical.
pub(crate) fn apply_weight_updates(
    params: &mut [LayerParams],
    grads: &[DenseMatrix],
    lr: f64,
) -> Result<()> {
    for (p, g) in params.iter_mut().zip(grads) {
        p.weight.add_scaled(g, -lr)?;
    }
    Ok(())
}

/// Gradient step on GAT attention parameters (weight plus vector).
pub(crate) fn apply_attention_update(
    p: &mut LayerParams,
    grad_w: &DenseMatrix,
    grad_a: &[f64],
    lr: f64,
) -> Result<()> {
    p.weight.add_scaled(grad_w, -lr)?;
    let attn = p
        .attn_vec
        .as_mut()
        .ok_or_else(|| Error::Contract("attention update on a non-GAT layer".into()))?;
    if attn.len() != grad_a.len() {
        return Err(Error::Shape(format!(
            "attention vector gradient length {} does not match {}",
            grad_a.len(),
            attn.len()
        )));
    }
    for (a, g) in attn.iter_mut().zip(grad_a) {
        *a -= lr * g;
    }
    Ok(())
}

/// Per-epoch data one worker reports back to the engine driver.
pub(crate) struct WorkerEpochOut {
    pub loss: f64,
    pub train_acc: f64,
    pub val_acc: f64,
    pub test_acc: f64,
    pub stats: WorkerEpochStats,
    pub phase: PhaseTimes,
    pub trace: Vec<TraceEvent>,
}

/// Merges per-worker epoch streams into [`EpochReport`]s plus the combined
/// trace. Losses/accuracies are identical on every worker after the
/// all-reduce; worker 0's copy is reported.
pub(crate) fn assemble_reports(
    mut per_worker: Vec<Vec<WorkerEpochOut>>,
) -> (Vec<EpochReport>, Vec<TraceEvent>) {
    let epochs = per_worker.first().map_or(0, |w| w.len());
    let mut reports = Vec::with_capacity(epochs);
    let mut trace = Vec::new();
    for e in 0..epochs {
        let mut per_worker_stats = Vec::with_capacity(per_worker.len());
        let mut phase = PhaseTimes::default();
        for w in per_worker.iter_mut() {
            let out = &mut w[e];
            per_worker_stats.push(out.stats.clone());
            phase.forward_ns = phase.forward_ns.max(out.phase.forward_ns);
            phase.backward_ns = phase.backward_ns.max(out.phase.backward_ns);
            trace.append(&mut out.trace);
        }
        let head = &per_worker[0][e];
        reports.push(EpochReport {
            epoch: e,
            loss: head.loss,
            train_accuracy: head.train_acc,
            val_accuracy: head.val_acc,
            test_accuracy: head.test_acc,
            per_worker: per_worker_stats,
            phase,
        });
    }
    (reports, trace)
}

/// Sums sent/received scalars in a shard suffix (one epoch's records).
pub(crate) fn shard_comm_totals(records: &[CommRecord]) -> (u64, u64) {
    let sent = records.iter().map(|r| r.scalars_sent).sum();
    let received = records.iter().map(|r| r.scalars_received).sum();
    (sent, received)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::softmax_xent_loss;

    #[test]
    fn split_fractions_are_65_25_10() {
        let s = DataSplit::standard(100, 7);
        assert_eq!(s.train_count(), 65);
        assert_eq!(s.val.iter().filter(|&&m| m).count(), 25);
        assert_eq!(s.test.iter().filter(|&&m| m).count(), 10);
        for v in 0..100 {
            let claims = [s.train[v], s.val[v], s.test[v]]
                .iter()
                .filter(|&&m| m)
                .count();
            assert_eq!(claims, 1, "vertex {v} in exactly one split");
        }
    }

    #[test]
    fn split_is_deterministic_per_seed() {
        let a = DataSplit::standard(57, 3);
        let b = DataSplit::standard(57, 3);
        assert_eq!(a.train, b.train);
        assert_eq!(a.val, b.val);
        let c = DataSplit::standard(57, 4);
        assert_ne!(a.train, c.train);
    }

    #[test]
    fn loss_parts_reproduce_oracle_loss_bitwise_for_full_ownership() {
        let v = 9;
        let logits = DenseMatrix::random_uniform(v, 4, -2.0, 2.0, 5);
        let labels: Vec<usize> = (0..v).map(|i| i % 4).collect();
        let split = DataSplit::standard(v, 11);
        let parts = masked_loss_parts(&logits, &(0..v), &labels, &split).unwrap();
        let (oracle_loss, oracle_grad) =
            softmax_xent_loss(&logits, &labels, &split.train).unwrap();
        let loss = parts.loss_sum * (1.0 / split.train_count() as f64);
        assert_eq!(loss, oracle_loss);
        assert_eq!(parts.grad.data, oracle_grad.data);
    }

    #[test]
    fn loss_parts_sum_across_partitions_to_oracle_total() {
        let v = 17;
        let logits = DenseMatrix::random_uniform(v, 3, -1.0, 1.0, 9);
        let labels: Vec<usize> = (0..v).map(|i| i % 3).collect();
        let split = DataSplit::standard(v, 2);
        let ranges = crate::partition::even_ranges(v, 3);
        let mut total = 0.0;
        for r in &ranges {
            let mut rows = DenseMatrix::zeros(r.len(), 3);
            for (o, gv) in r.clone().enumerate() {
                rows.row_mut(o).copy_from_slice(logits.row(gv));
            }
            total += masked_loss_parts(&rows, r, &labels, &split)
                .unwrap()
                .loss_sum;
        }
        let (oracle_loss, _) = softmax_xent_loss(&logits, &labels, &split.train).unwrap();
        let loss = total / split.train_count() as f64;
        assert!((loss - oracle_loss).abs() <= 1e-12 * oracle_loss.abs().max(1.0));
    }

    #[test]
    fn identical_seeds_give_identical_params() {
        let a = init_coupled_params(&[5, 4, 3], 42);
        let b = init_coupled_params(&[5, 4, 3], 42);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.weight.data, y.weight.data);
        }
        let c = init_coupled_params(&[5, 4, 3], 43);
        assert_ne!(a[0].weight.data, c[0].weight.data);
        // Different layers draw different weights.
        assert_ne!(a[0].weight.data[0], a[1].weight.data[0]);
    }

    #[test]
    fn argmax_ties_resolve_to_lowest_index() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), 1);
        assert_eq!(argmax(&[5.0]), 0);
        assert_eq!(argmax(&[-1.0, -1.0]), 0);
    }
}
