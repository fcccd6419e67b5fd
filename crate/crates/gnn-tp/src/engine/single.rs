//! Single-worker reference engine: the whole model evaluated directly with
//! the dense kernels, no worker group and no communication. Every
//! distributed engine is validated against the loss sequence this engine
//! produces.

use std::time::Instant;

use crate::collective::CommLedger;
use crate::decoupled::{
    decoupled_backward, decoupled_forward, DecoupledConfig, ModelKind,
};
use crate::dense::{DenseMatrix, FeatureInput};
use crate::graph::{compute_norm, NormCoefficients, NormMode};
use crate::layers::{aggregate, aggregate_backward, gcn_update, gcn_update_backward};
use crate::Result;

use super::{
    apply_attention_update, apply_weight_updates, init_coupled_params, init_decoupled_params,
    masked_loss_parts, metrics_from_reduced, EngineConfig, EpochReport, ModelSpec, PhaseTimes,
    TrainInput, TrainOutput, WorkerEpochStats,
};

/// Propagation coefficients for a model: the configured normalization for
/// GCN-style aggregation, degree normalization (always well-defined) for
/// GAT, whose propagation ignores it in favor of attention.
pub(crate) fn norm_for_model(
    graph: &crate::graph::Graph,
    norm_mode: NormMode,
    model: &ModelSpec,
) -> Result<NormCoefficients> {
    let gat = matches!(
        model,
        ModelSpec::Decoupled(DecoupledConfig {
            model_kind: ModelKind::DecoupledGat,
            ..
        })
    );
    if gat {
        compute_norm(graph, NormMode::GcnDegree)
    } else {
        compute_norm(graph, norm_mode)
    }
}

pub fn run_single_worker(cfg: &EngineConfig, input: &TrainInput) -> Result<TrainOutput> {
    if cfg.workers != 1 {
        return Err(crate::Error::Config(format!(
            "the single-worker engine runs with exactly 1 worker, got {}",
            cfg.workers
        )));
    }
    match &cfg.model {
        ModelSpec::Coupled { layer_dims } => run_coupled(cfg, input, layer_dims),
        ModelSpec::Decoupled(dcfg) => run_decoupled(cfg, input, dcfg),
    }
}

/// Coupled GCN: aggregation and NN update interleaved in every layer.
fn run_coupled(cfg: &EngineConfig, input: &TrainInput, layer_dims: &[usize]) -> Result<TrainOutput> {
    let graph = input.graph;
    let v = graph.num_vertices;
    let norm = compute_norm(graph, cfg.norm_mode)?;
    let mut params = init_coupled_params(layer_dims, cfg.seed);
    let num_layers = params.len();
    let mut reports = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let t0 = Instant::now();
        let mut edge_work = 0u64;
        let mut nn_work = 0u64;

        // Forward: A_l = A_norm * H_{l-1}; H_l = act(A_l W_l).
        let mut h = input.features.clone();
        let mut caches = Vec::with_capacity(num_layers);
        for (l, p) in params.iter().enumerate() {
            let a = aggregate(graph, &norm, FeatureInput::Full(&h))?;
            edge_work += (graph.num_edges * p.in_dim()) as u64;
            let (out, pre) = gcn_update(&a, p, l + 1 != num_layers)?;
            nn_work += v as u64;
            h = out;
            caches.push((a, pre));
        }
        let parts = masked_loss_parts(&h, &(0..v), input.labels, input.split)?;
        let (loss, train_acc, val_acc, test_acc) = metrics_from_reduced(
            &[
                parts.loss_sum,
                parts.train_correct,
                parts.val_correct,
                parts.test_correct,
            ],
            input.split,
        );
        let forward_ns = t0.elapsed().as_nanos() as u64;

        let t1 = Instant::now();
        let mut grads = vec![DenseMatrix::zeros(0, 0); num_layers];
        let mut g = parts.grad;
        for l in (0..num_layers).rev() {
            let (a, pre) = &caches[l];
            let (g_a, g_w) = gcn_update_backward(a, &params[l], pre, l + 1 != num_layers, &g)?;
            nn_work += v as u64;
            grads[l] = g_w;
            if l > 0 {
                g = aggregate_backward(graph, &norm, FeatureInput::Full(&g_a))?;
                edge_work += (graph.num_edges * params[l].in_dim()) as u64;
            }
        }
        apply_weight_updates(&mut params, &grads, cfg.learning_rate)?;
        let backward_ns = t1.elapsed().as_nanos() as u64;

        reports.push(EpochReport {
            epoch,
            loss,
            train_accuracy: train_acc,
            val_accuracy: val_acc,
            test_accuracy: test_acc,
            per_worker: vec![WorkerEpochStats {
                worker: 0,
                edge_work,
                nn_vertex_work: nn_work,
                scalars_sent: 0,
                scalars_received: 0,
            }],
            phase: PhaseTimes {
                forward_ns,
                backward_ns,
            },
        });
    }
    Ok(TrainOutput {
        reports,
        ledger: CommLedger::default(),
        trace: Vec::new(),
    })
}

/// Decoupled model: all NN layers first, then all propagation rounds.
fn run_decoupled(
    cfg: &EngineConfig,
    input: &TrainInput,
    dcfg: &DecoupledConfig,
) -> Result<TrainOutput> {
    let graph = input.graph;
    let v = graph.num_vertices;
    let norm = norm_for_model(graph, cfg.norm_mode, &cfg.model)?;
    let mut params = init_decoupled_params(dcfg, cfg.seed)?;
    let classes = dcfg.classes();
    let mut reports = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let t0 = Instant::now();
        let out = decoupled_forward(
            graph,
            &norm,
            dcfg,
            &params,
            input.features,
            input.labels,
            &input.split.train,
        )?;
        let parts = masked_loss_parts(&out.logits, &(0..v), input.labels, input.split)?;
        let (loss, train_acc, val_acc, test_acc) = metrics_from_reduced(
            &[
                parts.loss_sum,
                parts.train_correct,
                parts.val_correct,
                parts.test_correct,
            ],
            input.split,
        );
        debug_assert_eq!(loss, out.loss);
        let forward_ns = t0.elapsed().as_nanos() as u64;

        let t1 = Instant::now();
        let grads = decoupled_backward(
            graph,
            &norm,
            dcfg,
            &params,
            &out,
            input.labels,
            &input.split.train,
        )?;
        apply_weight_updates(&mut params.mlp, &grads.mlp, cfg.learning_rate)?;
        if let (Some(att), Some(gw), Some(ga)) = (
            params.attention.as_mut(),
            grads.attention_weight.as_ref(),
            grads.attention_vec.as_ref(),
        ) {
            apply_attention_update(att, gw, ga, cfg.learning_rate)?;
        }
        let backward_ns = t1.elapsed().as_nanos() as u64;

        // 2 aggregation passes (forward + backward) per propagation round
        // at class width; 2 NN passes per MLP layer.
        let edge_work = (2 * dcfg.prop_rounds * graph.num_edges * classes) as u64;
        let nn_work = (2 * params.mlp.len() * v) as u64;
        reports.push(EpochReport {
            epoch,
            loss,
            train_accuracy: train_acc,
            val_accuracy: val_acc,
            test_accuracy: test_acc,
            per_worker: vec![WorkerEpochStats {
                worker: 0,
                edge_work,
                nn_vertex_work: nn_work,
                scalars_sent: 0,
                scalars_received: 0,
            }],
            phase: PhaseTimes {
                forward_ns,
                backward_ns,
            },
        });
    }
    Ok(TrainOutput {
        reports,
        ledger: CommLedger::default(),
        trace: Vec::new(),
    })
}
