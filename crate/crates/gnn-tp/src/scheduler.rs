//! Chunk-based propagation scheduling: staged src-row communication with
//! dedup, optional compute/communication overlap, and a stage trace.
//!
//! Aggregating one chunk (a contiguous destination range plus its in-edges)
//! only needs the feature rows of that chunk's sources, so the big
//! pre-propagation split can be broken into per-chunk stages: stage `j`
//! delivers the rows chunk `j` needs that no earlier chunk already received
//! ([`build_comm_plan`] precomputes this dedup), and with pipelining enabled
//! the staging of chunk `j+1` runs concurrently with the aggregation of
//! chunk `j` (depth fixed at one outstanding chunk — double buffering).
//!
//! Scheduling is neutral by construction: per-destination accumulation
//! order never depends on the chunk count or the pipelining flag, so the
//! result is bitwise identical to the unchunked whole-graph propagation.
//! Workers all walk chunks in ascending order, so the collective sequence
//! lines up across the group; the chunked stages of one logical split (or
//! gather) are grouped into a single ledger round.

use std::ops::Range;
use std::sync::mpsc;
use std::time::Instant;

use serde::Serialize;

use crate::collective::WorkerCtx;
use crate::dense::{DenseMatrix, FeatureSlice};
use crate::graph::{Chunk, Graph};
use crate::layers::AggCoeffs;
use crate::{Error, Result};

/// Deduplicated per-chunk communication assignments.
///
/// A vertex needed by several chunks is staged with the first chunk that
/// needs it and reused afterwards, so each vertex appears in at most one
/// chunk's assignment list. Each assignment names a worker responsible for
/// that vertex's transfer task; responsibility is dealt round-robin with a
/// single counter across all chunks, which keeps per-worker task counts
/// within one of each other even when dedup skews which chunks carry
/// traffic.
#[derive(Debug, Clone)]
pub struct ChunkCommPlan {
    /// Per chunk: `(vertex, assigned worker)` pairs for the vertices first
    /// needed by that chunk, ascending by vertex id.
    pub per_chunk: Vec<Vec<(usize, usize)>>,
    /// Total assignments per worker.
    pub per_worker_counts: Vec<usize>,
    /// Per chunk: every row its aggregation reads (new and reused),
    /// ascending. Sources plus any in-range vertices with a self term.
    pub working_sets: Vec<Vec<usize>>,
}

impl ChunkCommPlan {
    /// All distinct rows staged over the whole run, ascending.
    pub fn needed_union(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self
            .per_chunk
            .iter()
            .flat_map(|c| c.iter().map(|&(v, _)| v))
            .collect();
        all.sort_unstable();
        all
    }
}

/// Builds the deduplicated staging plan for one propagation over `chunks`.
///
/// Chunk `j`'s working set is its source set plus any destination in its
/// range whose self coefficient is nonzero (those rows feed the aggregation
/// too). The first chunk needing a row gets its assignment.
pub fn build_comm_plan(
    chunks: &[Chunk],
    coeffs: &dyn AggCoeffs,
    num_workers: usize,
) -> Result<ChunkCommPlan> {
    if num_workers == 0 {
        return Err(Error::Config("worker count must be at least 1".into()));
    }
    let num_vertices = chunks.last().map_or(0, |c| c.dst_range.end);
    let mut seen = vec![false; num_vertices];
    let mut per_chunk = Vec::with_capacity(chunks.len());
    let mut working_sets = Vec::with_capacity(chunks.len());
    let mut per_worker_counts = vec![0usize; num_workers];
    let mut rr = 0usize;
    for chunk in chunks {
        // Merge the sorted source set with in-range self-term vertices.
        let mut working = Vec::with_capacity(chunk.src_set.len());
        let mut srcs = chunk.src_set.iter().copied().peekable();
        for v in chunk.dst_range.clone() {
            while let Some(&s) = srcs.peek() {
                if s < v {
                    working.push(s);
                    srcs.next();
                } else {
                    break;
                }
            }
            let self_needed = coeffs.self_coeff(v) != 0.0;
            if srcs.peek() == Some(&v) {
                srcs.next();
                working.push(v);
            } else if self_needed {
                working.push(v);
            }
        }
        working.extend(srcs);

        let mut new = Vec::new();
        for &v in &working {
            if !seen[v] {
                seen[v] = true;
                let worker = rr % num_workers;
                rr += 1;
                per_worker_counts[worker] += 1;
                new.push((v, worker));
            }
        }
        per_chunk.push(new);
        working_sets.push(working);
    }
    Ok(ChunkCommPlan {
        per_chunk,
        per_worker_counts,
        working_sets,
    })
}

/// Pipeline stage kinds appearing in the trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StageKind {
    /// Staging the rows a chunk reads (the chunked split).
    CommSplit,
    /// Local per-chunk aggregation of one propagation round.
    Aggregate,
    /// Collecting a chunk's full-width output rows (the chunked gather).
    CommGather,
}

/// One timed stage execution on one worker. Timestamps are nanoseconds from
/// the start of that worker's chunked run, so intervals are comparable
/// between a worker's comm and compute threads.
#[derive(Debug, Clone, Serialize)]
pub struct TraceEvent {
    pub worker: usize,
    pub stage: StageKind,
    pub chunk: usize,
    /// Propagation round (1-based) for aggregate stages, 0 for comm stages.
    pub round: usize,
    /// Stage size: the chunk working-set rows held resident for
    /// `CommSplit`/first-round `Aggregate`, gathered rows for `CommGather`.
    pub rows: usize,
    pub begin_ns: u64,
    pub end_ns: u64,
}

/// Result of one chunked propagation on one worker.
pub struct ChunkedOutput {
    /// Full-width output rows for this worker's owned vertices.
    pub rows_out: DenseMatrix,
    /// This worker's column slice of the output over all vertices.
    pub slice_out: FeatureSlice,
    pub trace: Vec<TraceEvent>,
}

/// Aggregates one chunk at one propagation round: for each destination in
/// the chunk range, self term first (when present), then in-neighbors
/// ascending, then the damping factor — the exact per-row operation order
/// of whole-graph propagation, so chunking is bitwise neutral.
fn aggregate_chunk_into(
    graph: &Graph,
    coeffs: &dyn AggCoeffs,
    chunk: &Chunk,
    src: &DenseMatrix,
    out: &mut DenseMatrix,
    gamma: f64,
) {
    let w = src.cols;
    for v in chunk.dst_range.clone() {
        out.data[v * w..(v + 1) * w].fill(0.0);
        let sc = coeffs.self_coeff(v);
        if sc != 0.0 {
            let s = &src.data[v * w..(v + 1) * w];
            let dst = &mut out.data[v * w..(v + 1) * w];
            for j in 0..w {
                dst[j] += sc * s[j];
            }
        }
        let lo = graph.in_offsets[v];
        for (k, &u) in graph.in_neighbors_of(v).iter().enumerate() {
            let c = coeffs.edge_coeff(lo + k);
            let s = &src.data[u * w..(u + 1) * w];
            let dst = &mut out.data[v * w..(v + 1) * w];
            for j in 0..w {
                dst[j] += c * s[j];
            }
        }
        for x in &mut out.data[v * w..(v + 1) * w] {
            *x *= gamma;
        }
    }
}

/// One backward propagation round computed chunk by chunk, bitwise equal to
/// the whole-graph adjoint round.
///
/// Self terms are applied globally first; then chunks contribute their
/// partial source gradients in ascending chunk order. Because chunk ranges
/// ascend and each source row's out-neighbors are visited ascending within
/// a chunk, every source row sees the exact operand order of the unchunked
/// adjoint.
pub fn chunked_backward_round(
    graph: &Graph,
    chunks: &[Chunk],
    coeffs: &dyn AggCoeffs,
    gamma: f64,
    grad: &DenseMatrix,
) -> Result<DenseMatrix> {
    if grad.rows != graph.num_vertices {
        return Err(Error::Shape(format!(
            "backward round input has {} rows for a graph with {} vertices",
            grad.rows, graph.num_vertices
        )));
    }
    let w = grad.cols;
    let mut out = DenseMatrix::zeros(graph.num_vertices, w);
    for u in 0..graph.num_vertices {
        let sc = coeffs.self_coeff(u);
        if sc != 0.0 {
            let s = &grad.data[u * w..(u + 1) * w];
            let dst = &mut out.data[u * w..(u + 1) * w];
            for j in 0..w {
                dst[j] += sc * s[j];
            }
        }
    }
    for chunk in chunks {
        let r = &chunk.dst_range;
        for u in 0..graph.num_vertices {
            let outs = graph.out_neighbors_of(u);
            let lo = outs.partition_point(|&v| v < r.start);
            let hi = outs.partition_point(|&v| v < r.end);
            if lo == hi {
                continue;
            }
            let base = graph.out_offsets[u];
            for k in lo..hi {
                let v = outs[k];
                let c = coeffs.edge_coeff(graph.out_to_in_edge[base + k]);
                let s = &grad.data[v * w..(v + 1) * w];
                let dst = &mut out.data[u * w..(u + 1) * w];
                for j in 0..w {
                    dst[j] += c * s[j];
                }
            }
        }
    }
    out.scale(gamma);
    Ok(out)
}

/// Runs `rounds` damped propagation rounds over `chunks` with staged
/// communication, inside a worker group.
///
/// Input: this worker's full-width rows for its owned vertices. Output: the
/// propagated full-width owned rows plus this worker's column slice over
/// all vertices, and a stage trace. The result is bitwise identical for any
/// chunk count and for pipelining on or off.
///
/// With `pipelining`, a communication thread stages chunk `j+1` while the
/// caller thread aggregates chunk `j`; gather stages likewise overlap
/// trailing aggregations. Exactly one chunk may be in flight ahead of the
/// compute (double buffering), which bounds resident staged rows by the two
/// largest adjacent working sets.
#[allow(clippy::too_many_arguments)]
pub fn run_chunked_propagation(
    ctx: &mut WorkerCtx,
    graph: &Graph,
    chunks: &[Chunk],
    plan: &ChunkCommPlan,
    rows_in: &DenseMatrix,
    coeffs: &dyn AggCoeffs,
    gamma: f64,
    rounds: usize,
    pipelining: bool,
) -> Result<ChunkedOutput> {
    let me = ctx.worker_id;
    let own = ctx.vertex_range();
    let num_vertices = graph.num_vertices;
    let width_full = rows_in.cols;
    if rows_in.rows != own.len() {
        return Err(Error::Shape(format!(
            "chunked propagation input has {} rows but worker {me} owns {}",
            rows_in.rows,
            own.len()
        )));
    }
    if chunks.len() != plan.per_chunk.len() {
        return Err(Error::Contract(
            "communication plan does not match the chunk list".into(),
        ));
    }
    let my_cols = ctx.dim_range(width_full);
    let slice_w = my_cols.len();
    let epoch = Instant::now();

    if rounds == 0 {
        // Identity propagation still crosses the layout boundary both ways.
        let all_rows: Vec<usize> = (0..num_vertices).collect();
        let mut trace = Vec::new();
        let b = epoch.elapsed().as_nanos() as u64;
        let slice_out = ctx.split(&all_rows, rows_in)?;
        trace.push(TraceEvent {
            worker: me,
            stage: StageKind::CommSplit,
            chunk: 0,
            round: 0,
            rows: num_vertices,
            begin_ns: b,
            end_ns: epoch.elapsed().as_nanos() as u64,
        });
        let b = epoch.elapsed().as_nanos() as u64;
        let rows_out = ctx.gather(&all_rows, &slice_out)?;
        trace.push(TraceEvent {
            worker: me,
            stage: StageKind::CommGather,
            chunk: 0,
            round: 0,
            rows: num_vertices,
            begin_ns: b,
            end_ns: epoch.elapsed().as_nanos() as u64,
        });
        return Ok(ChunkedOutput {
            rows_out,
            slice_out,
            trace,
        });
    }

    let n = chunks.len();
    // Per-chunk staging inputs: the new rows (global ids) and this worker's
    // owned block of them, extracted from `rows_in`.
    let mut stage_rows: Vec<Vec<usize>> = Vec::with_capacity(n);
    let mut stage_blocks: Vec<DenseMatrix> = Vec::with_capacity(n);
    for assignments in &plan.per_chunk {
        let rows: Vec<usize> = assignments.iter().map(|&(v, _)| v).collect();
        let mine: Vec<usize> = rows
            .iter()
            .copied()
            .filter(|v| own.contains(v))
            .collect();
        let mut block = DenseMatrix::zeros(mine.len(), width_full);
        for (o, &v) in mine.iter().enumerate() {
            block.row_mut(o).copy_from_slice(rows_in.row(v - own.start));
        }
        stage_rows.push(rows);
        stage_blocks.push(block);
    }
    let dst_rows: Vec<Vec<usize>> = chunks
        .iter()
        .map(|c| c.dst_range.clone().collect())
        .collect();

    // Staged source rows live here once delivered; rounds after the first
    // read the full previous-round slice instead.
    let mut store = DenseMatrix::zeros(num_vertices, slice_w);
    let mut z_cur = DenseMatrix::zeros(num_vertices, slice_w);
    let mut z_prev = DenseMatrix::zeros(num_vertices, slice_w);
    let mut rows_out = DenseMatrix::zeros(own.len(), width_full);
    let mut trace: Vec<TraceEvent> = Vec::new();

    let write_store = |store: &mut DenseMatrix, rows: &[usize], slice: &FeatureSlice| {
        for (o, &v) in rows.iter().enumerate() {
            store.row_mut(v).copy_from_slice(slice.values.row(o));
        }
    };
    let place_gathered =
        |rows_out: &mut DenseMatrix, dst: &Range<usize>, own: &Range<usize>, full: &DenseMatrix| {
            let lo = dst.start.max(own.start);
            let hi = dst.end.min(own.end);
            for (o, v) in (lo..hi).enumerate() {
                rows_out.row_mut(v - own.start).copy_from_slice(full.row(o));
            }
        };

    if !pipelining {
        // All per-chunk splits are sub-transfers of one logical split, so
        // they share a ledger round; compute stages between them record
        // nothing.
        ctx.begin_phase();
        for j in 0..n {
            let b = epoch.elapsed().as_nanos() as u64;
            let slice = ctx.split(&stage_rows[j], &stage_blocks[j])?;
            trace.push(TraceEvent {
                worker: me,
                stage: StageKind::CommSplit,
                chunk: j,
                round: 0,
                rows: plan.working_sets[j].len(),
                begin_ns: b,
                end_ns: epoch.elapsed().as_nanos() as u64,
            });
            write_store(&mut store, &stage_rows[j], &slice);
            let b = epoch.elapsed().as_nanos() as u64;
            aggregate_chunk_into(graph, coeffs, &chunks[j], &store, &mut z_cur, gamma);
            trace.push(TraceEvent {
                worker: me,
                stage: StageKind::Aggregate,
                chunk: j,
                round: 1,
                rows: plan.working_sets[j].len(),
                begin_ns: b,
                end_ns: epoch.elapsed().as_nanos() as u64,
            });
        }
        ctx.end_phase();
        for r in 2..=rounds {
            std::mem::swap(&mut z_prev, &mut z_cur);
            for j in 0..n {
                let b = epoch.elapsed().as_nanos() as u64;
                aggregate_chunk_into(graph, coeffs, &chunks[j], &z_prev, &mut z_cur, gamma);
                trace.push(TraceEvent {
                    worker: me,
                    stage: StageKind::Aggregate,
                    chunk: j,
                    round: r,
                    rows: 0,
                    begin_ns: b,
                    end_ns: epoch.elapsed().as_nanos() as u64,
                });
            }
        }
        ctx.begin_phase();
        for j in 0..n {
            let mut block = DenseMatrix::zeros(dst_rows[j].len(), slice_w);
            for (o, &v) in dst_rows[j].iter().enumerate() {
                block.row_mut(o).copy_from_slice(z_cur.row(v));
            }
            let fs = FeatureSlice {
                owner_worker: me,
                col_range: my_cols.clone(),
                values: block,
            };
            let b = epoch.elapsed().as_nanos() as u64;
            let full = ctx.gather(&dst_rows[j], &fs)?;
            trace.push(TraceEvent {
                worker: me,
                stage: StageKind::CommGather,
                chunk: j,
                round: 0,
                rows: dst_rows[j].len(),
                begin_ns: b,
                end_ns: epoch.elapsed().as_nanos() as u64,
            });
            place_gathered(&mut rows_out, &chunks[j].dst_range, &own, &full);
        }
        ctx.end_phase();
        return Ok(ChunkedOutput {
            rows_out,
            slice_out: FeatureSlice {
                owner_worker: me,
                col_range: my_cols,
                values: z_cur,
            },
            trace,
        });
    }

    // Pipelined path: the comm thread owns the worker context and performs
    // all collectives (splits ascending, then gathers ascending — the same
    // global order as the sequential path, so ledgers match). Credits bound
    // staging to one chunk ahead of the compute.
    let (staged_tx, staged_rx) = mpsc::sync_channel::<(usize, FeatureSlice)>(n);
    let (credit_tx, credit_rx) = mpsc::sync_channel::<()>(n + 2);
    let (greq_tx, greq_rx) = mpsc::sync_channel::<(usize, DenseMatrix)>(n);
    // Double buffering: chunk 0 plus one chunk ahead.
    credit_tx.send(()).expect("credit channel open");
    credit_tx.send(()).expect("credit channel open");

    let (comm_outcome, compute_outcome) = std::thread::scope(|scope| {
        let stage_rows = &stage_rows;
        let stage_blocks = &stage_blocks;
        let dst_rows = &dst_rows;
        let plan_ref = plan;
        let chunks_ref = chunks;
        let own_ref = &own;
        let my_cols_ref = &my_cols;
        let comm = scope.spawn(move || -> Result<(DenseMatrix, Vec<TraceEvent>)> {
            let mut trace = Vec::new();
            ctx.begin_phase();
            for j in 0..n {
                credit_rx.recv().map_err(|_| {
                    Error::Protocol(format!("worker {me}: compute side exited mid-pipeline"))
                })?;
                let b = epoch.elapsed().as_nanos() as u64;
                let slice = ctx.split(&stage_rows[j], &stage_blocks[j])?;
                trace.push(TraceEvent {
                    worker: me,
                    stage: StageKind::CommSplit,
                    chunk: j,
                    round: 0,
                    rows: plan_ref.working_sets[j].len(),
                    begin_ns: b,
                    end_ns: epoch.elapsed().as_nanos() as u64,
                });
                staged_tx.send((j, slice)).map_err(|_| {
                    Error::Protocol(format!("worker {me}: compute side exited mid-pipeline"))
                })?;
            }
            ctx.end_phase();
            ctx.begin_phase();
            let mut rows_out = DenseMatrix::zeros(own_ref.len(), width_full);
            for _ in 0..n {
                let (j, block) = greq_rx.recv().map_err(|_| {
                    Error::Protocol(format!("worker {me}: compute side exited mid-pipeline"))
                })?;
                let fs = FeatureSlice {
                    owner_worker: me,
                    col_range: my_cols_ref.clone(),
                    values: block,
                };
                let b = epoch.elapsed().as_nanos() as u64;
                let full = ctx.gather(&dst_rows[j], &fs)?;
                trace.push(TraceEvent {
                    worker: me,
                    stage: StageKind::CommGather,
                    chunk: j,
                    round: 0,
                    rows: dst_rows[j].len(),
                    begin_ns: b,
                    end_ns: epoch.elapsed().as_nanos() as u64,
                });
                place_gathered(&mut rows_out, &chunks_ref[j].dst_range, own_ref, &full);
            }
            ctx.end_phase();
            Ok((rows_out, trace))
        });

        let compute_outcome = (move || -> Result<(DenseMatrix, Vec<TraceEvent>)> {
            let mut trace = Vec::new();
            let send_gather = |j: usize, z: &DenseMatrix| -> Result<()> {
                let mut block = DenseMatrix::zeros(dst_rows[j].len(), slice_w);
                for (o, &v) in dst_rows[j].iter().enumerate() {
                    block.row_mut(o).copy_from_slice(z.row(v));
                }
                greq_tx.send((j, block)).map_err(|_| {
                    Error::Protocol(format!("worker {me}: comm side exited mid-pipeline"))
                })
            };
            for j in 0..n {
                let (jj, slice) = staged_rx.recv().map_err(|_| {
                    Error::Protocol(format!("worker {me}: comm side exited mid-pipeline"))
                })?;
                debug_assert_eq!(jj, j);
                write_store(&mut store, &stage_rows[j], &slice);
                let b = epoch.elapsed().as_nanos() as u64;
                aggregate_chunk_into(graph, coeffs, &chunks_ref[j], &store, &mut z_cur, gamma);
                trace.push(TraceEvent {
                    worker: me,
                    stage: StageKind::Aggregate,
                    chunk: j,
                    round: 1,
                    rows: plan_ref.working_sets[j].len(),
                    begin_ns: b,
                    end_ns: epoch.elapsed().as_nanos() as u64,
                });
                // Staging buffer for chunk j is free; let the comm thread
                // bring in the next chunk.
                let _ = credit_tx.send(());
                if rounds == 1 {
                    send_gather(j, &z_cur)?;
                }
            }
            for r in 2..=rounds {
                std::mem::swap(&mut z_prev, &mut z_cur);
                for j in 0..n {
                    let b = epoch.elapsed().as_nanos() as u64;
                    aggregate_chunk_into(graph, coeffs, &chunks_ref[j], &z_prev, &mut z_cur, gamma);
                    trace.push(TraceEvent {
                        worker: me,
                        stage: StageKind::Aggregate,
                        chunk: j,
                        round: r,
                        rows: 0,
                        begin_ns: b,
                        end_ns: epoch.elapsed().as_nanos() as u64,
                    });
                    if r == rounds {
                        send_gather(j, &z_cur)?;
                    }
                }
            }
            Ok((z_cur, trace))
        })();

        let comm_outcome = match comm.join() {
            Ok(r) => r,
            Err(panic) => std::panic::resume_unwind(panic),
        };
        (comm_outcome, compute_outcome)
    });

    // Prefer the root cause: a collective failure over the peer-exited
    // protocol error the other side reports.
    match (comm_outcome, compute_outcome) {
        (Ok((rows_out, comm_trace)), Ok((z_final, mut compute_trace))) => {
            compute_trace.extend(comm_trace);
            compute_trace.sort_by_key(|e| (e.begin_ns, e.end_ns));
            trace.extend(compute_trace);
            Ok(ChunkedOutput {
                rows_out,
                slice_out: FeatureSlice {
                    owner_worker: me,
                    col_range: my_cols,
                    values: z_final,
                },
                trace,
            })
        }
        (Err(c), Err(k)) => {
            if matches!(c, Error::Protocol(_)) && !matches!(k, Error::Protocol(_)) {
                Err(k)
            } else {
                Err(c)
            }
        }
        (Err(c), Ok(_)) => Err(c),
        (Ok(_), Err(k)) => Err(k),
    }
}

/// Peak simultaneously-resident staged source rows on any worker, from a
/// run trace.
///
/// A chunk's working set is resident from the start of its staging stage to
/// the end of its first-round aggregation. Without pipelining this is the
/// largest single working set; with pipelining, at most two adjacent
/// working sets overlap.
pub fn peak_resident_rows(trace: &[TraceEvent]) -> usize {
    let workers: Vec<usize> = {
        let mut w: Vec<usize> = trace.iter().map(|e| e.worker).collect();
        w.sort_unstable();
        w.dedup();
        w
    };
    let mut peak = 0usize;
    for wid in workers {
        // (time, delta): +rows when staging begins, -rows when the
        // first-round aggregation ends. Frees sort before allocations at
        // equal timestamps.
        let mut deltas: Vec<(u64, i64)> = Vec::new();
        for e in trace.iter().filter(|e| e.worker == wid) {
            match e.stage {
                StageKind::CommSplit if e.round == 0 => {
                    deltas.push((e.begin_ns, e.rows as i64));
                }
                StageKind::Aggregate if e.round == 1 => {
                    deltas.push((e.end_ns, -(e.rows as i64)));
                }
                _ => {}
            }
        }
        deltas.sort_by_key(|&(t, d)| (t, d));
        let mut cur = 0i64;
        for (_, d) in deltas {
            cur += d;
            peak = peak.max(cur.max(0) as usize);
        }
    }
    peak
}

/// True when any worker's communication stage ran concurrently with one of
/// its aggregation stages (open-interval intersection of their spans).
pub fn has_comm_compute_overlap(trace: &[TraceEvent]) -> bool {
    for a in trace {
        if a.stage == StageKind::Aggregate {
            continue;
        }
        for b in trace {
            if b.worker != a.worker || b.stage != StageKind::Aggregate {
                continue;
            }
            if a.begin_ns < b.end_ns && b.begin_ns < a.end_ns {
                return true;
            }
        }
    }
    false
}
