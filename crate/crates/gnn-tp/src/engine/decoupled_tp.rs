//! Decoupled tensor-parallel engine: every NN layer runs before any
//! propagation round, so one epoch needs exactly four gather/split rounds
//! no matter how deep the model is — split the MLP output into slices,
//! gather the propagated logits, split the logit gradient, gather the
//! input gradient. Propagation itself runs on chunk-scheduled slices with
//! optional staging/compute overlap.
//!
//! For GAT models the per-edge attention coefficients are computed from
//! the distributed MLP output (one point-to-point score exchange), then
//! shared with one all-share so every worker propagates with identical
//! coefficients. With one propagation round the attention parameters are
//! trained exactly like the single-worker oracle; with more rounds they
//! are kept fixed and only the MLP trains.

use std::ops::Range;
use std::time::Instant;

use crate::collective::{CommKind, WorkerCtx, WorkerGroup};
use crate::decoupled::{mlp_backward, mlp_forward, per_vertex_scores, ModelKind};
use crate::dense::{leaky_relu_scalar_grad, DenseMatrix, FeatureSlice};
use crate::graph::{partition_chunks, Graph};
use crate::layers::{
    softmax_in_edges, AggCoeffs, EdgeAttention, LayerParams, ATTENTION_LEAKY_SLOPE,
};
use crate::partition::owner_of;
use crate::scheduler::{build_comm_plan, chunked_backward_round, run_chunked_propagation};
use crate::{Error, Result};

use super::data_parallel::{build_exchange_plan, ExchangePlan};
use super::single::norm_for_model;
use super::{
    apply_attention_update, apply_weight_updates, assemble_reports, init_decoupled_params,
    masked_loss_parts, metrics_from_reduced, shard_comm_totals, EngineConfig, ModelSpec,
    PhaseTimes, TrainInput, TrainOutput, WorkerEpochOut, WorkerEpochStats,
};

/// Forward attention state kept for the backward pass.
struct AttentionForward {
    att: EdgeAttention,
    /// Score halves `s1[u]` for owned and fetched source vertices.
    s1_full: Vec<f64>,
    /// Score halves `s2[v]` for owned destinations (local index).
    s2_own: Vec<f64>,
}

/// Computes softmax attention for the in-edges of owned destinations, then
/// shares the coefficients: one fetch of remote source scores, one
/// all-share of the per-edge coefficients keyed by in-CSR edge position.
fn attention_forward(
    ctx: &mut WorkerCtx,
    graph: &Graph,
    plan: &ExchangePlan,
    own: &Range<usize>,
    l_hat_own: &DenseMatrix,
    p: &LayerParams,
) -> Result<AttentionForward> {
    let (s1_own, s2_own) = per_vertex_scores(l_hat_own, p)?;
    let outgoing: Vec<Vec<f64>> = plan
        .to_send
        .iter()
        .map(|rows| rows.iter().map(|&u| s1_own[u - own.start]).collect())
        .collect();
    let received = ctx.exchange_rows(CommKind::Fetch, 1, outgoing)?;
    let mut s1_full = vec![0.0; graph.num_vertices];
    for (o, gv) in own.clone().enumerate() {
        s1_full[gv] = s1_own[o];
    }
    for (j, rows) in plan.needed.iter().enumerate() {
        for (idx, &u) in rows.iter().enumerate() {
            s1_full[u] = received[j][idx];
        }
    }
    let mut s2_full = vec![0.0; graph.num_vertices];
    for (o, gv) in own.clone().enumerate() {
        s2_full[gv] = s2_own[o];
    }
    let mut alpha = vec![0.0; graph.num_edges];
    for v in own.clone() {
        softmax_in_edges(graph, &s1_full, &s2_full, v, &mut alpha);
    }
    let lo = graph.in_offsets[own.start];
    let hi = graph.in_offsets[own.end];
    let keys: Vec<usize> = (lo..hi).collect();
    let shared = ctx.all_share(graph.num_edges, &keys, &alpha[lo..hi])?;
    Ok(AttentionForward {
        att: EdgeAttention { alpha: shared },
        s1_full,
        s2_own,
    })
}

/// Distributed attention backward for a single propagation round. Each
/// worker pushes its destinations' per-edge score gradients to the source
/// owners; accumulation runs in ascending destination order across worker
/// blocks, reproducing the single-worker operand order exactly. Returns
/// the owned-row `L_hat` gradient plus fully reduced parameter gradients.
fn attention_backward(
    ctx: &mut WorkerCtx,
    graph: &Graph,
    plan: &ExchangePlan,
    own: &Range<usize>,
    l_hat_own: &DenseMatrix,
    p: &LayerParams,
    fwd: &AttentionForward,
    g_logits_own: &DenseMatrix,
    gamma: f64,
) -> Result<(DenseMatrix, DenseMatrix, Vec<f64>)> {
    let classes = p.out_dim();
    let me = ctx.worker_id;
    let n = ctx.num_workers();
    let v_total = graph.num_vertices;

    // Remote L_hat rows for the edge gradients <grad_logits[v], L_hat[u]>.
    let outgoing: Vec<Vec<f64>> = plan
        .to_send
        .iter()
        .map(|rows| {
            let mut buf = Vec::with_capacity(rows.len() * classes);
            for &u in rows {
                buf.extend_from_slice(l_hat_own.row(u - own.start));
            }
            buf
        })
        .collect();
    let received = ctx.exchange_rows(CommKind::Fetch, classes, outgoing)?;
    let mut lhat_store = DenseMatrix::zeros(v_total, classes);
    for (o, gv) in own.clone().enumerate() {
        lhat_store.row_mut(gv).copy_from_slice(l_hat_own.row(o));
    }
    for (j, rows) in plan.needed.iter().enumerate() {
        for (idx, &u) in rows.iter().enumerate() {
            lhat_store
                .row_mut(u)
                .copy_from_slice(&received[j][idx * classes..(idx + 1) * classes]);
        }
    }

    // Per-edge gradients for owned destinations: softmax backward, then
    // LeakyReLU backward to score gradients dq.
    let base = graph.in_offsets[own.start];
    let edge_span = graph.in_offsets[own.end] - base;
    let mut grad_alpha = vec![0.0; edge_span];
    let mut dq_edges = vec![0.0; edge_span];
    let mut ds2_own = vec![0.0; own.len()];
    let alpha = &fwd.att.alpha;
    for (o, v) in own.clone().enumerate() {
        let lo = graph.in_offsets[v];
        let hi = graph.in_offsets[v + 1];
        if lo == hi {
            continue;
        }
        let gz = g_logits_own.row(o);
        for pos in lo..hi {
            let u = graph.in_neighbors[pos];
            let lh = lhat_store.row(u);
            let mut acc = 0.0;
            for j in 0..classes {
                acc += gz[j] * lh[j];
            }
            grad_alpha[pos - base] = gamma * acc;
        }
        let mut dot = 0.0;
        for pos in lo..hi {
            dot += alpha[pos] * grad_alpha[pos - base];
        }
        for pos in lo..hi {
            let u = graph.in_neighbors[pos];
            let de = alpha[pos] * (grad_alpha[pos - base] - dot);
            let dq = de * leaky_relu_scalar_grad(fwd.s1_full[u] + fwd.s2_own[o], ATTENTION_LEAKY_SLOPE);
            dq_edges[pos - base] = dq;
            ds2_own[o] += dq;
        }
    }

    // Scatter dq to source owners. Both sides enumerate a block as (dst
    // ascending, in-edge position ascending), so no keys travel.
    let mut outgoing_dq: Vec<Vec<f64>> = vec![Vec::new(); n];
    for v in own.clone() {
        for pos in graph.in_offsets[v]..graph.in_offsets[v + 1] {
            let u = graph.in_neighbors[pos];
            let owner = owner_of(u, v_total, n);
            if owner != me {
                outgoing_dq[owner].push(dq_edges[pos - base]);
            }
        }
    }
    let received_dq = ctx.exchange_rows(CommKind::Scatter, 1, outgoing_dq)?;
    let ranges = ctx.vertex_ranges().to_vec();
    let mut ds1_own = vec![0.0; own.len()];
    for (j, range) in ranges.iter().enumerate() {
        if j == me {
            for v in own.clone() {
                for pos in graph.in_offsets[v]..graph.in_offsets[v + 1] {
                    let u = graph.in_neighbors[pos];
                    if own.contains(&u) {
                        ds1_own[u - own.start] += dq_edges[pos - base];
                    }
                }
            }
        } else {
            let mut cursor = 0usize;
            for v in range.clone() {
                for pos in graph.in_offsets[v]..graph.in_offsets[v + 1] {
                    let u = graph.in_neighbors[pos];
                    if own.contains(&u) {
                        ds1_own[u - own.start] += received_dq[j][cursor];
                        cursor += 1;
                    }
                }
            }
            debug_assert_eq!(cursor, received_dq[j].len());
        }
    }

    // Scores are linear in W*L_hat: local rows, reduced parameters.
    let wh_own = l_hat_own.matmul(&p.weight)?;
    let attn = p
        .attn_vec
        .as_ref()
        .ok_or_else(|| Error::Contract("attention backward on a non-GAT layer".into()))?;
    let (a1, a2) = attn.split_at(classes);
    let mut grad_wh = DenseMatrix::zeros(own.len(), classes);
    let mut grad_a_partial = vec![0.0; 2 * classes];
    for o in 0..own.len() {
        let whr = wh_own.row(o);
        let gw = grad_wh.row_mut(o);
        for j in 0..classes {
            gw[j] = ds1_own[o] * a1[j] + ds2_own[o] * a2[j];
            grad_a_partial[j] += ds1_own[o] * whr[j];
            grad_a_partial[classes + j] += ds2_own[o] * whr[j];
        }
    }
    let grad_w = ctx.allreduce_sum(&l_hat_own.matmul_tn(&grad_wh)?)?;
    let grad_a = ctx.allreduce_scalars(&grad_a_partial)?;
    let grad_h_att = grad_wh.matmul_nt(&p.weight)?;
    Ok((grad_h_att, grad_w, grad_a))
}

pub fn run_decoupled_tp(cfg: &EngineConfig, input: &TrainInput) -> Result<TrainOutput> {
    let ModelSpec::Decoupled(dcfg) = &cfg.model else {
        return Err(Error::Config(
            "the decoupled engine needs a decoupled model spec".into(),
        ));
    };
    let graph = input.graph;
    let v = graph.num_vertices;
    let classes = dcfg.classes();
    let rounds = dcfg.prop_rounds;
    let gat = matches!(dcfg.model_kind, ModelKind::DecoupledGat);
    let norm = norm_for_model(graph, cfg.norm_mode, &cfg.model)?;
    let chunks = partition_chunks(graph, cfg.chunks)?;
    // The chunk plan depends only on structure (GAT has no self terms), so
    // it is built once even though attention values change every epoch.
    let zero_att = EdgeAttention {
        alpha: vec![0.0; graph.num_edges],
    };
    let plan_coeffs: &dyn AggCoeffs = if gat { &zero_att } else { &norm };
    let plan = build_comm_plan(&chunks, plan_coeffs, cfg.workers)?;
    let group = WorkerGroup::new(cfg.workers, v, classes)?;
    let all_rows: Vec<usize> = (0..v).collect();

    let (outs, ledger) = group.run(|ctx| {
        let me = ctx.worker_id;
        let own = ctx.vertex_range();
        let slice_width = ctx.dim_range(classes).len();
        let xplan = build_exchange_plan(graph, ctx.vertex_ranges(), me);
        let mut params = init_decoupled_params(dcfg, cfg.seed)?;
        let mut x_own = DenseMatrix::zeros(own.len(), dcfg.layer_dims[0]);
        for (o, gv) in own.clone().enumerate() {
            x_own.row_mut(o).copy_from_slice(input.features.row(gv));
        }
        let mut epochs_out = Vec::with_capacity(cfg.epochs);

        for _ in 0..cfg.epochs {
            let shard_start = ctx.shard().len();
            let t0 = Instant::now();
            let mut edge_work = 0u64;
            let mut nn_work = 0u64;

            let (l_hat_own, mlp_cache) = mlp_forward(&x_own, &params.mlp)?;
            nn_work += (own.len() * params.mlp.len()) as u64;
            let att_fwd = if gat && rounds >= 1 {
                let p = params.attention.as_ref().expect("GAT params carry attention");
                Some(attention_forward(ctx, graph, &xplan, &own, &l_hat_own, p)?)
            } else {
                None
            };
            let coeffs: &dyn AggCoeffs = match &att_fwd {
                Some(f) => &f.att,
                None => &norm,
            };

            let (logits_own, trace) = if rounds == 0 {
                (l_hat_own.clone(), Vec::new())
            } else {
                let out = run_chunked_propagation(
                    ctx,
                    graph,
                    &chunks,
                    &plan,
                    &l_hat_own,
                    coeffs,
                    dcfg.gamma,
                    rounds,
                    cfg.pipelining,
                )?;
                edge_work += (rounds * graph.num_edges * slice_width) as u64;
                (out.rows_out, out.trace)
            };

            let parts = masked_loss_parts(&logits_own, &own, input.labels, input.split)?;
            let reduced = ctx.allreduce_scalars(&[
                parts.loss_sum,
                parts.train_correct,
                parts.val_correct,
                parts.test_correct,
            ])?;
            let (loss, train_acc, val_acc, test_acc) = metrics_from_reduced(&reduced, input.split);
            let forward_ns = t0.elapsed().as_nanos() as u64;

            let t1 = Instant::now();
            let g_logits_own = parts.grad;
            let mut g_lhat_own = if rounds == 0 {
                g_logits_own.clone()
            } else {
                // Backward propagation is one split, L local transposed
                // rounds over the slice, one gather.
                let sl = ctx.split(&all_rows, &g_logits_own)?;
                let mut g_vals = sl.values;
                for _ in 0..rounds {
                    g_vals = chunked_backward_round(graph, &chunks, coeffs, dcfg.gamma, &g_vals)?;
                }
                edge_work += (rounds * graph.num_edges * slice_width) as u64;
                ctx.gather(
                    &all_rows,
                    &FeatureSlice {
                        owner_worker: me,
                        col_range: ctx.dim_range(classes),
                        values: g_vals,
                    },
                )?
            };

            let mut att_grads = None;
            if let Some(fwd) = &att_fwd {
                if rounds == 1 {
                    let p = params.attention.as_ref().expect("GAT params carry attention");
                    let (gh, gw, ga) = attention_backward(
                        ctx,
                        graph,
                        &xplan,
                        &own,
                        &l_hat_own,
                        p,
                        fwd,
                        &g_logits_own,
                        dcfg.gamma,
                    )?;
                    g_lhat_own.add_scaled(&gh, 1.0)?;
                    att_grads = Some((gw, ga));
                }
                // rounds >= 2: attention parameters stay fixed.
            }

            let (mlp_grads_partial, _) = mlp_backward(&params.mlp, &mlp_cache, &g_lhat_own)?;
            nn_work += (own.len() * params.mlp.len()) as u64;
            let mut mlp_grads = Vec::with_capacity(mlp_grads_partial.len());
            for g in &mlp_grads_partial {
                mlp_grads.push(ctx.allreduce_sum(g)?);
            }
            apply_weight_updates(&mut params.mlp, &mlp_grads, cfg.learning_rate)?;
            if let Some((gw, ga)) = att_grads {
                let p = params.attention.as_mut().expect("GAT params carry attention");
                apply_attention_update(p, &gw, &ga, cfg.learning_rate)?;
            }
            let backward_ns = t1.elapsed().as_nanos() as u64;

            let (sent, received) = shard_comm_totals(&ctx.shard()[shard_start..]);
            epochs_out.push(WorkerEpochOut {
                loss,
                train_acc,
                val_acc,
                test_acc,
                stats: WorkerEpochStats {
                    worker: me,
                    edge_work,
                    nn_vertex_work: nn_work,
                    scalars_sent: sent,
                    scalars_received: received,
                },
                phase: PhaseTimes {
                    forward_ns,
                    backward_ns,
                },
                trace,
            });
        }
        Ok(epochs_out)
    })?;

    let (mut reports, trace) = assemble_reports(outs);
    for (e, r) in reports.iter_mut().enumerate() {
        r.epoch = e;
    }
    Ok(TrainOutput {
        reports,
        ledger,
        trace,
    })
}
