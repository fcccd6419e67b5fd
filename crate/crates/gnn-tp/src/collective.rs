//! In-process worker group with message-passing collectives and exact
//! communication accounting.
//!
//! Workers are OS threads running the same program (SPMD) connected by
//! bounded FIFO channels — an in-process stand-in for a multi-node collective
//! library. The semantics matter, the transport does not:
//!
//! * **Determinism** — every merge and accumulation order is fixed by worker
//!   id or key order, so collective outputs are bitwise identical across
//!   runs regardless of thread interleaving.
//! * **Accounting** — every collective appends per-worker records of scalars
//!   sent and received to a ledger shard; shards are merged after the group
//!   joins, so rounds never take cross-worker locks.
//! * **Deadlock freedom** — the contract is that all workers issue the same
//!   collective sequence; violations surface as protocol errors within a
//!   configurable round timeout (default 30 s), never as a hang.
//!
//! The two central collectives convert between the tensor-parallel layouts:
//! [`WorkerCtx::gather`] turns dimension-partitioned slices into
//! vertex-partitioned full-width rows, and [`WorkerCtx::split`] is its exact
//! inverse.

use std::collections::VecDeque;
use std::ops::Range;
use std::sync::mpsc;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::dense::{DenseMatrix, FeatureSlice};
use crate::partition::even_ranges;
use crate::{Error, Result};

/// Kind of collective operation, recorded in the ledger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CommKind {
    Gather,
    Split,
    AllShare,
    AllReduce,
    Barrier,
    /// Point-to-point fetch of remote rows (data-parallel forward).
    Fetch,
    /// Point-to-point scatter of partial gradients (data-parallel backward).
    Scatter,
}

/// One worker's view of one collective call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CommRecord {
    pub worker: usize,
    /// Logical round index. Consecutive collectives get consecutive rounds
    /// unless grouped into a phase (chunked transfers of one logical
    /// gather/split share a round).
    pub round: u64,
    pub kind: CommKind,
    pub scalars_sent: u64,
    pub scalars_received: u64,
}

/// Append-only merged record of every collective a group has executed,
/// sorted by (round, worker, issue order).
#[derive(Debug, Clone, Default, Serialize)]
pub struct CommLedger {
    pub records: Vec<CommRecord>,
}

impl CommLedger {
    /// Number of distinct gather/split rounds (the headline collective
    /// round count; all-reduce, all-share, barriers, and point-to-point
    /// traffic are excluded).
    pub fn gather_split_rounds(&self) -> usize {
        let mut rounds: Vec<u64> = self
            .records
            .iter()
            .filter(|r| matches!(r.kind, CommKind::Gather | CommKind::Split))
            .map(|r| r.round)
            .collect();
        rounds.sort_unstable();
        rounds.dedup();
        rounds.len()
    }

    /// Total scalars sent across all workers, filtered by kind.
    pub fn total_sent(&self, kinds: &[CommKind]) -> u64 {
        self.records
            .iter()
            .filter(|r| kinds.contains(&r.kind))
            .map(|r| r.scalars_sent)
            .sum()
    }

    /// Total scalars received across all workers, filtered by kind.
    pub fn total_received(&self, kinds: &[CommKind]) -> u64 {
        self.records
            .iter()
            .filter(|r| kinds.contains(&r.kind))
            .map(|r| r.scalars_received)
            .sum()
    }

    /// Checks that every round conserves scalars: what all workers sent
    /// equals what all workers received.
    pub fn is_conserved(&self) -> bool {
        use std::collections::BTreeMap;
        let mut per_round: BTreeMap<u64, (u64, u64)> = BTreeMap::new();
        for r in &self.records {
            let e = per_round.entry(r.round).or_insert((0, 0));
            e.0 += r.scalars_sent;
            e.1 += r.scalars_received;
        }
        per_round.values().all(|&(s, r)| s == r)
    }
}

/// Message exchanged between workers. `header` meaning depends on the kind:
/// gather/split blocks carry `[col_lo, col_hi, block_rows, total_rows]`,
/// all-reduce carries `[rows, cols, 0, 0]`, fetch/scatter carry
/// `[width, 0, block_rows, 0]`.
struct Message {
    from: usize,
    seq: u64,
    kind: CommKind,
    header: [usize; 4],
    payload: Vec<f64>,
    keys: Vec<usize>,
}

/// Shared configuration of an in-process worker group: worker count, the
/// contiguous vertex and column ownership ranges, and the round timeout.
#[derive(Debug)]
pub struct WorkerGroup {
    pub num_workers: usize,
    pub num_vertices: usize,
    pub feature_dim: usize,
    /// Contiguous vertex ranges per worker (ceil/floor rule).
    pub vertex_ownership: Vec<Range<usize>>,
    /// Contiguous column ranges per worker for `feature_dim` columns.
    /// Collectives that run at a different width re-derive ranges from the
    /// same rule.
    pub dim_ownership: Vec<Range<usize>>,
    timeout: Duration,
    ledger: Mutex<CommLedger>,
}

impl WorkerGroup {
    pub fn new(num_workers: usize, num_vertices: usize, feature_dim: usize) -> Result<Self> {
        if num_workers == 0 {
            return Err(Error::Config("worker count must be at least 1".into()));
        }
        Ok(WorkerGroup {
            num_workers,
            num_vertices,
            feature_dim,
            vertex_ownership: even_ranges(num_vertices, num_workers),
            dim_ownership: even_ranges(feature_dim, num_workers),
            timeout: Duration::from_secs(30),
            ledger: Mutex::new(CommLedger::default()),
        })
    }

    /// Overrides the default 30 s round timeout.
    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    /// Consistent copy of everything the group has recorded so far.
    pub fn ledger_snapshot(&self) -> CommLedger {
        self.ledger.lock().expect("ledger poisoned").clone()
    }

    /// Runs `f` on every worker concurrently and returns the per-worker
    /// results in worker order plus the merged ledger of this run.
    ///
    /// If any worker fails, the first non-protocol error is returned (a
    /// failing worker makes its peers fail with protocol errors; the root
    /// cause is the more useful report).
    pub fn run<T, F>(&self, f: F) -> Result<(Vec<T>, CommLedger)>
    where
        T: Send,
        F: Fn(&mut WorkerCtx) -> Result<T> + Sync,
    {
        let n = self.num_workers;
        let mut senders = Vec::with_capacity(n);
        let mut receivers = Vec::with_capacity(n);
        for _ in 0..n {
            // Capacity covers several rounds of in-flight messages so a
            // worker ahead of its peers never blocks on send.
            let (tx, rx) = mpsc::sync_channel::<Message>(4 * n + 16);
            senders.push(tx);
            receivers.push(rx);
        }

        let outcomes: Vec<(Result<T>, Vec<CommRecord>)> = std::thread::scope(|scope| {
            let mut handles = Vec::with_capacity(n);
            for (worker_id, receiver) in receivers.into_iter().enumerate() {
                let senders = senders.clone();
                let f = &f;
                handles.push(scope.spawn(move || {
                    let mut ctx = WorkerCtx {
                        worker_id,
                        group: self,
                        senders,
                        receiver,
                        stash: (0..n).map(|_| VecDeque::new()).collect(),
                        seq: 0,
                        round: 0,
                        in_phase: false,
                        shard: Vec::new(),
                    };
                    let result = f(&mut ctx);
                    (result, ctx.shard)
                }));
            }
            handles
                .into_iter()
                .map(|h| match h.join() {
                    Ok(outcome) => outcome,
                    Err(panic) => std::panic::resume_unwind(panic),
                })
                .collect()
        });

        // Merge shards: concatenate in worker order, then stable-sort by
        // round so records of one round stay grouped in worker order.
        let mut merged = Vec::new();
        for (_, shard) in &outcomes {
            merged.extend(shard.iter().cloned());
        }
        merged.sort_by_key(|r| r.round);
        let run_ledger = CommLedger { records: merged };
        self.ledger
            .lock()
            .expect("ledger poisoned")
            .records
            .extend(run_ledger.records.iter().cloned());

        let mut results = Vec::with_capacity(n);
        let mut errors: Vec<(usize, Error)> = Vec::new();
        for (worker, (result, _)) in outcomes.into_iter().enumerate() {
            match result {
                Ok(v) => results.push(v),
                Err(e) => errors.push((worker, e)),
            }
        }
        if !errors.is_empty() {
            let root = errors
                .iter()
                .position(|(_, e)| !matches!(e, Error::Protocol(_)))
                .unwrap_or(0);
            return Err(errors.swap_remove(root).1);
        }
        Ok((results, run_ledger))
    }
}

/// One worker's execution context: identity, channel endpoints, and the
/// local ledger shard. All collectives are methods on this type.
pub struct WorkerCtx<'g> {
    pub worker_id: usize,
    group: &'g WorkerGroup,
    senders: Vec<mpsc::SyncSender<Message>>,
    receiver: mpsc::Receiver<Message>,
    /// Early arrivals from each peer, kept in arrival (= seq) order.
    stash: Vec<VecDeque<Message>>,
    seq: u64,
    round: u64,
    in_phase: bool,
    shard: Vec<CommRecord>,
}

impl<'g> WorkerCtx<'g> {
    pub fn num_workers(&self) -> usize {
        self.group.num_workers
    }

    /// Contiguous vertex ranges per worker.
    pub fn vertex_ranges(&self) -> &[Range<usize>] {
        &self.group.vertex_ownership
    }

    /// This worker's owned vertex range.
    pub fn vertex_range(&self) -> Range<usize> {
        self.group.vertex_ownership[self.worker_id].clone()
    }

    /// Column ranges per worker for a matrix of width `d` (crate-wide rule).
    pub fn dim_ranges(&self, d: usize) -> Vec<Range<usize>> {
        even_ranges(d, self.group.num_workers)
    }

    /// This worker's column range for width `d`.
    pub fn dim_range(&self, d: usize) -> Range<usize> {
        self.dim_ranges(d)[self.worker_id].clone()
    }

    /// This worker's ledger records so far (its shard).
    pub fn shard(&self) -> &[CommRecord] {
        &self.shard
    }

    /// Starts a phase: until [`WorkerCtx::end_phase`], all collectives share
    /// one logical round index. Used for chunked transfers that together
    /// form one logical gather or split.
    pub fn begin_phase(&mut self) {
        if !self.in_phase {
            self.round += 1;
            self.in_phase = true;
        }
    }

    /// Ends the current phase; subsequent collectives get fresh rounds.
    pub fn end_phase(&mut self) {
        self.in_phase = false;
    }

    fn alloc_round(&mut self) -> u64 {
        if !self.in_phase {
            self.round += 1;
        }
        self.round
    }

    fn protocol_err(&self, msg: String) -> Error {
        Error::Protocol(format!("worker {}: {msg}", self.worker_id))
    }

    /// Core primitive: every worker sends one message to every peer and
    /// receives one from every peer, all tagged with the same sequence
    /// number. Returns received messages indexed by peer (self slot empty).
    fn exchange(
        &mut self,
        kind: CommKind,
        mut outgoing: Vec<(/* header */ [usize; 4], Vec<f64>, Vec<usize>)>,
    ) -> Result<(Vec<Option<Message>>, u64, u64)> {
        let n = self.group.num_workers;
        debug_assert_eq!(outgoing.len(), n);
        self.seq += 1;
        let seq = self.seq;
        let deadline = Instant::now() + self.group.timeout;
        let mut sent: u64 = 0;
        for j in (0..n).rev() {
            let (header, payload, keys) = outgoing.pop().expect("outgoing sized to n");
            if j == self.worker_id {
                continue;
            }
            sent += payload.len() as u64;
            let msg = Message {
                from: self.worker_id,
                seq,
                kind,
                header,
                payload,
                keys,
            };
            // Channel capacity covers every message a round can put in
            // flight, so this only blocks transiently; a vanished peer shows
            // up as a disconnect, and a stuck peer is caught by the receive
            // timeout below.
            self.senders[j].send(msg).map_err(|_| {
                self.protocol_err(format!(
                    "{kind:?} seq {seq}: worker {j} exited before the collective"
                ))
            })?;
        }
        let mut incoming: Vec<Option<Message>> = (0..n).map(|_| None).collect();
        let mut received: u64 = 0;
        for j in 0..n {
            if j == self.worker_id {
                continue;
            }
            let msg = self.recv_from(j, seq, kind, deadline)?;
            received += msg.payload.len() as u64;
            incoming[j] = Some(msg);
        }
        Ok((incoming, sent, received))
    }

    /// Receives the message with sequence `seq` from `from`, stashing any
    /// other arrivals. Channels are FIFO per peer, so a peer's messages
    /// arrive in seq order; a wrong seq or kind at the head means the peers
    /// are running different collective sequences.
    fn recv_from(
        &mut self,
        from: usize,
        seq: u64,
        kind: CommKind,
        deadline: Instant,
    ) -> Result<Message> {
        loop {
            if let Some(front) = self.stash[from].front() {
                if front.seq != seq {
                    let got = front.seq;
                    return Err(self.protocol_err(format!(
                        "collective sequence mismatch with worker {from}: expected seq {seq}, peer sent {got}"
                    )));
                }
                if front.kind != kind {
                    let got = front.kind;
                    return Err(self.protocol_err(format!(
                        "collective kind mismatch with worker {from} at seq {seq}: expected {kind:?}, peer sent {got:?}"
                    )));
                }
                return Ok(self.stash[from].pop_front().expect("front checked"));
            }
            let remaining = deadline.saturating_duration_since(Instant::now());
            match self.receiver.recv_timeout(remaining) {
                Ok(msg) => {
                    let slot = msg.from;
                    self.stash[slot].push_back(msg);
                    if slot == from {
                        continue;
                    }
                }
                Err(mpsc::RecvTimeoutError::Timeout) => {
                    return Err(self.protocol_err(format!(
                        "round timeout waiting for worker {from} ({kind:?} seq {seq})"
                    )));
                }
                Err(mpsc::RecvTimeoutError::Disconnected) => {
                    return Err(self.protocol_err(format!(
                        "all peers exited while waiting for worker {from} ({kind:?} seq {seq})"
                    )));
                }
            }
        }
    }

    fn record(&mut self, kind: CommKind, round: u64, sent: u64, received: u64) {
        self.shard.push(CommRecord {
            worker: self.worker_id,
            round,
            kind,
            scalars_sent: sent,
            scalars_received: received,
        });
    }

    /// Splits the sorted row list into per-worker index blocks by vertex
    /// ownership: block `j` is `rows[b[j]..b[j+1]]`.
    fn row_blocks(&self, rows: &[usize]) -> Result<Vec<Range<usize>>> {
        let n = self.group.num_workers;
        for w in rows.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::Contract(
                    "collective row lists must be strictly ascending".into(),
                ));
            }
        }
        if let Some(&last) = rows.last() {
            if last >= self.group.num_vertices {
                return Err(Error::Contract(format!(
                    "row id {last} outside vertex range [0, {})",
                    self.group.num_vertices
                )));
            }
        }
        let mut blocks = Vec::with_capacity(n);
        for range in &self.group.vertex_ownership {
            let lo = rows.partition_point(|&v| v < range.start);
            let hi = rows.partition_point(|&v| v < range.end);
            blocks.push(lo..hi);
        }
        Ok(blocks)
    }

    /// Converts a dimension-partitioned slice over the rows `rows` into
    /// vertex-partitioned full-width rows.
    ///
    /// Every worker passes its column slice covering all of `rows` (sorted
    /// global vertex ids) and ends up with full-width rows for the subset of
    /// `rows` it owns, columns assembled in ascending worker order.
    pub fn gather(&mut self, rows: &[usize], local: &FeatureSlice) -> Result<DenseMatrix> {
        let w = local.width();
        if local.rows() != rows.len() {
            return Err(Error::Shape(format!(
                "gather slice covers {} rows but the row list has {}",
                local.rows(),
                rows.len()
            )));
        }
        let n = self.group.num_workers;
        let blocks = self.row_blocks(rows)?;
        let mut outgoing = Vec::with_capacity(n);
        for j in 0..n {
            if j == self.worker_id {
                outgoing.push(([0, 0, 0, 0], Vec::new(), Vec::new()));
                continue;
            }
            let b = blocks[j].clone();
            let payload = local.values.data[b.start * w..b.end * w].to_vec();
            outgoing.push((
                [local.col_range.start, local.col_range.end, b.len(), rows.len()],
                payload,
                Vec::new(),
            ));
        }
        let (incoming, sent, received) = self.exchange(CommKind::Gather, outgoing)?;
        let round = self.alloc_round();
        self.record(CommKind::Gather, round, sent, received);

        // Validate that column ranges partition [0, D) in worker order.
        let mut ranges: Vec<Range<usize>> = Vec::with_capacity(n);
        for j in 0..n {
            match &incoming[j] {
                None => ranges.push(local.col_range.clone()),
                Some(m) => {
                    if m.header[3] != rows.len() {
                        return Err(Error::Collective(format!(
                            "gather row-list disagreement: worker {j} sees {} rows, worker {} sees {}",
                            m.header[3],
                            self.worker_id,
                            rows.len()
                        )));
                    }
                    ranges.push(m.header[0]..m.header[1]);
                }
            }
        }
        let mut cursor = 0;
        for (j, r) in ranges.iter().enumerate() {
            if r.start != cursor || r.end < r.start {
                return Err(Error::Collective(format!(
                    "gather column ranges do not partition the dimension (worker {j} claims {r:?}, expected start {cursor})"
                )));
            }
            cursor = r.end;
        }
        let full_width = cursor;

        let mine = blocks[self.worker_id].clone();
        let mut out = DenseMatrix::zeros(mine.len(), full_width);
        for j in 0..n {
            let r = ranges[j].clone();
            let wj = r.end - r.start;
            if wj == 0 {
                continue;
            }
            if j == self.worker_id {
                for (o, row_idx) in mine.clone().enumerate() {
                    out.row_mut(o)[r.start..r.end]
                        .copy_from_slice(&local.values.data[row_idx * w..(row_idx + 1) * w]);
                }
            } else {
                let m = incoming[j].as_ref().expect("peer message present");
                if m.header[2] != mine.len() || m.payload.len() != mine.len() * wj {
                    return Err(Error::Collective(format!(
                        "gather block from worker {j} has {} rows x {wj} cols, expected {}",
                        m.header[2],
                        mine.len()
                    )));
                }
                for o in 0..mine.len() {
                    out.row_mut(o)[r.start..r.end]
                        .copy_from_slice(&m.payload[o * wj..(o + 1) * wj]);
                }
            }
        }
        Ok(out)
    }

    /// Exact inverse of [`WorkerCtx::gather`]: every worker passes
    /// full-width rows for the subset of `rows` it owns and ends up with its
    /// column slice covering all of `rows`.
    pub fn split(&mut self, rows: &[usize], local_full: &DenseMatrix) -> Result<FeatureSlice> {
        let n = self.group.num_workers;
        let blocks = self.row_blocks(rows)?;
        let mine = blocks[self.worker_id].clone();
        if local_full.rows != mine.len() {
            return Err(Error::Shape(format!(
                "split input has {} rows but this worker owns {} of the row list",
                local_full.rows,
                mine.len()
            )));
        }
        let d = local_full.cols;
        let col_ranges = self.dim_ranges(d);
        let my_cols = col_ranges[self.worker_id].clone();
        let my_w = my_cols.end - my_cols.start;

        let mut outgoing = Vec::with_capacity(n);
        for j in 0..n {
            if j == self.worker_id {
                outgoing.push(([0, 0, 0, 0], Vec::new(), Vec::new()));
                continue;
            }
            let r = col_ranges[j].clone();
            let wj = r.end - r.start;
            let mut payload = Vec::with_capacity(mine.len() * wj);
            for o in 0..mine.len() {
                payload.extend_from_slice(&local_full.row(o)[r.start..r.end]);
            }
            outgoing.push(([r.start, r.end, mine.len(), rows.len()], payload, Vec::new()));
        }
        let (incoming, sent, received) = self.exchange(CommKind::Split, outgoing)?;
        let round = self.alloc_round();
        self.record(CommKind::Split, round, sent, received);

        let mut values = DenseMatrix::zeros(rows.len(), my_w);
        for j in 0..n {
            let b = blocks[j].clone();
            if j == self.worker_id {
                for (o, list_idx) in b.clone().enumerate() {
                    values
                        .row_mut(list_idx)
                        .copy_from_slice(&local_full.row(o)[my_cols.start..my_cols.end]);
                }
            } else {
                let m = incoming[j].as_ref().expect("peer message present");
                if m.header[0] != my_cols.start || m.header[1] != my_cols.end {
                    return Err(Error::Collective(format!(
                        "split block from worker {j} carries columns {}..{}, expected {}..{} (width disagreement)",
                        m.header[0], m.header[1], my_cols.start, my_cols.end
                    )));
                }
                if m.header[2] != b.len() || m.payload.len() != b.len() * my_w {
                    return Err(Error::Collective(format!(
                        "split block from worker {j} has {} rows, expected {}",
                        m.header[2],
                        b.len()
                    )));
                }
                for (o, list_idx) in b.clone().enumerate() {
                    values
                        .row_mut(list_idx)
                        .copy_from_slice(&m.payload[o * my_w..(o + 1) * my_w]);
                }
            }
        }
        Ok(FeatureSlice {
            owner_worker: self.worker_id,
            col_range: my_cols,
            values,
        })
    }

    /// Disjoint per-worker keyed contributions are merged into one array of
    /// length `total_len`, identical on every worker. Keys overlap or fail
    /// to cover `[0, total_len)` -> protocol error.
    pub fn all_share(
        &mut self,
        total_len: usize,
        keys: &[usize],
        values: &[f64],
    ) -> Result<Vec<f64>> {
        if keys.len() != values.len() {
            return Err(Error::Shape(format!(
                "all_share has {} keys but {} values",
                keys.len(),
                values.len()
            )));
        }
        let n = self.group.num_workers;
        let mut outgoing = Vec::with_capacity(n);
        for j in 0..n {
            if j == self.worker_id {
                outgoing.push(([0, 0, 0, 0], Vec::new(), Vec::new()));
            } else {
                outgoing.push((
                    [total_len, 0, keys.len(), 0],
                    values.to_vec(),
                    keys.to_vec(),
                ));
            }
        }
        let (incoming, sent, received) = self.exchange(CommKind::AllShare, outgoing)?;
        let round = self.alloc_round();
        self.record(CommKind::AllShare, round, sent, received);

        let mut out = vec![0.0; total_len];
        let mut filled = vec![false; total_len];
        let mut write = |ks: &[usize], vs: &[f64]| -> Result<()> {
            for (&k, &v) in ks.iter().zip(vs) {
                if k >= total_len {
                    return Err(Error::Protocol(format!(
                        "all_share key {k} outside [0, {total_len})"
                    )));
                }
                if filled[k] {
                    return Err(Error::Protocol(format!(
                        "all_share key {k} contributed by more than one worker"
                    )));
                }
                filled[k] = true;
                out[k] = v;
            }
            Ok(())
        };
        // Merge in ascending worker order (self contribution in place).
        for j in 0..n {
            if j == self.worker_id {
                write(keys, values)?;
            } else {
                let m = incoming[j].as_ref().expect("peer message present");
                if m.header[0] != total_len {
                    return Err(Error::Collective(format!(
                        "all_share length disagreement: worker {j} says {}, worker {} says {total_len}",
                        m.header[0], self.worker_id
                    )));
                }
                write(&m.keys, &m.payload)?;
            }
        }
        if !filled.iter().all(|&f| f) {
            return Err(Error::Protocol(
                "all_share keys do not cover the full array".into(),
            ));
        }
        Ok(out)
    }

    /// Sums identically-shaped per-worker matrices; the accumulation order
    /// is ascending worker id, so every worker computes the bitwise same
    /// result.
    pub fn allreduce_sum(&mut self, m: &DenseMatrix) -> Result<DenseMatrix> {
        let n = self.group.num_workers;
        let mut outgoing = Vec::with_capacity(n);
        for j in 0..n {
            if j == self.worker_id {
                outgoing.push(([0, 0, 0, 0], Vec::new(), Vec::new()));
            } else {
                outgoing.push(([m.rows, m.cols, 0, 0], m.data.clone(), Vec::new()));
            }
        }
        let (incoming, sent, received) = self.exchange(CommKind::AllReduce, outgoing)?;
        let round = self.alloc_round();
        self.record(CommKind::AllReduce, round, sent, received);

        let mut out = DenseMatrix::zeros(m.rows, m.cols);
        for j in 0..n {
            if j == self.worker_id {
                for (o, v) in out.data.iter_mut().zip(&m.data) {
                    *o += v;
                }
            } else {
                let msg = incoming[j].as_ref().expect("peer message present");
                if msg.header[0] != m.rows || msg.header[1] != m.cols {
                    return Err(Error::Collective(format!(
                        "allreduce shape disagreement: worker {j} has {}x{}, worker {} has {}x{}",
                        msg.header[0], msg.header[1], self.worker_id, m.rows, m.cols
                    )));
                }
                for (o, v) in out.data.iter_mut().zip(&msg.payload) {
                    *o += v;
                }
            }
        }
        Ok(out)
    }

    /// All-reduce of a small scalar vector (loss terms, accuracy counts).
    pub fn allreduce_scalars(&mut self, xs: &[f64]) -> Result<Vec<f64>> {
        let m = DenseMatrix {
            rows: 1,
            cols: xs.len(),
            data: xs.to_vec(),
        };
        Ok(self.allreduce_sum(&m)?.data)
    }

    /// Synchronization point with no data movement.
    pub fn barrier(&mut self) -> Result<()> {
        let n = self.group.num_workers;
        let outgoing = (0..n).map(|_| ([0usize; 4], Vec::new(), Vec::new())).collect();
        let (_, _, _) = self.exchange(CommKind::Barrier, outgoing)?;
        let round = self.alloc_round();
        self.record(CommKind::Barrier, round, 0, 0);
        Ok(())
    }

    /// Point-to-point row exchange (data-parallel neighbor fetch / gradient
    /// scatter). `outgoing[j]` is the row payload for worker `j` (`width`
    /// scalars per row, possibly empty); returns the payload received from
    /// each peer, in worker order, with the self slot passed through
    /// unchanged.
    pub fn exchange_rows(
        &mut self,
        kind: CommKind,
        width: usize,
        outgoing_rows: Vec<Vec<f64>>,
    ) -> Result<Vec<Vec<f64>>> {
        if !matches!(kind, CommKind::Fetch | CommKind::Scatter) {
            return Err(Error::Contract(
                "exchange_rows is only for fetch/scatter traffic".into(),
            ));
        }
        let n = self.group.num_workers;
        if outgoing_rows.len() != n {
            return Err(Error::Shape(format!(
                "exchange_rows needs {n} outgoing payloads, got {}",
                outgoing_rows.len()
            )));
        }
        let mut outgoing = Vec::with_capacity(n);
        let mut self_payload = Vec::new();
        for (j, payload) in outgoing_rows.into_iter().enumerate() {
            if width > 0 && payload.len() % width != 0 {
                return Err(Error::Shape(format!(
                    "exchange_rows payload for worker {j} has {} scalars, not a multiple of width {width}",
                    payload.len()
                )));
            }
            if j == self.worker_id {
                self_payload = payload;
                outgoing.push(([0, 0, 0, 0], Vec::new(), Vec::new()));
            } else {
                let rows = if width == 0 { 0 } else { payload.len() / width };
                outgoing.push(([width, 0, rows, 0], payload, Vec::new()));
            }
        }
        let (incoming, sent, received) = self.exchange(kind, outgoing)?;
        let round = self.alloc_round();
        self.record(kind, round, sent, received);
        let mut out = Vec::with_capacity(n);
        for (j, slot) in incoming.into_iter().enumerate() {
            if j == self.worker_id {
                out.push(std::mem::take(&mut self_payload));
            } else {
                let m = slot.expect("peer message present");
                if m.header[0] != width {
                    return Err(Error::Collective(format!(
                        "exchange_rows width disagreement: worker {j} sent width {}, expected {width}",
                        m.header[0]
                    )));
                }
                out.push(m.payload);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::col_slice;

    /// Owned full-width rows of a master matrix for one worker.
    fn owned_rows(master: &DenseMatrix, range: Range<usize>) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(range.len(), master.cols);
        for (o, v) in range.clone().enumerate() {
            m.row_mut(o).copy_from_slice(master.row(v));
        }
        m
    }

    #[test]
    fn split_then_gather_is_identity() {
        for n in [1usize, 2, 3, 4] {
            let (v_count, d) = (10, 6);
            let master = DenseMatrix::random_uniform(v_count, d, -1.0, 1.0, 99);
            let group = WorkerGroup::new(n, v_count, d).unwrap();
            let rows: Vec<usize> = (0..v_count).collect();
            let master_ref = &master;
            let rows_ref = &rows;
            let (results, ledger) = group
                .run(|ctx| {
                    let mine = owned_rows(master_ref, ctx.vertex_range());
                    let slice = ctx.split(rows_ref, &mine)?;
                    let back = ctx.gather(rows_ref, &slice)?;
                    Ok((mine, back))
                })
                .unwrap();
            for (mine, back) in results {
                assert_eq!(mine.data, back.data, "n = {n}");
            }
            assert!(ledger.is_conserved());
            assert_eq!(ledger.gather_split_rounds(), 2);
        }
    }

    #[test]
    fn gather_then_split_is_identity() {
        let (n, v_count, d) = (3, 17, 10);
        let master = DenseMatrix::random_uniform(v_count, d, -1.0, 1.0, 7);
        let group = WorkerGroup::new(n, v_count, d).unwrap();
        let rows: Vec<usize> = (0..v_count).collect();
        let (results, _) = group
            .run(|ctx| {
                let range = ctx.dim_range(d);
                let slice = col_slice(&master, range, ctx.worker_id)?;
                let full = ctx.gather(&rows, &slice)?;
                let back = ctx.split(&rows, &full)?;
                Ok((slice, back))
            })
            .unwrap();
        for (original, back) in results {
            assert_eq!(original.values.data, back.values.data);
            assert_eq!(original.col_range, back.col_range);
        }
    }

    #[test]
    fn single_worker_moves_no_scalars() {
        let (v_count, d) = (5, 4);
        let master = DenseMatrix::random_uniform(v_count, d, -1.0, 1.0, 3);
        let group = WorkerGroup::new(1, v_count, d).unwrap();
        let rows: Vec<usize> = (0..v_count).collect();
        let (results, ledger) = group
            .run(|ctx| {
                let slice = ctx.split(&rows, &master)?;
                let back = ctx.gather(&rows, &slice)?;
                Ok(back)
            })
            .unwrap();
        assert_eq!(results[0].data, master.data);
        assert!(ledger.records.iter().all(|r| r.scalars_sent == 0));
        assert_eq!(ledger.gather_split_rounds(), 2);
    }

    #[test]
    fn gather_ledger_matches_closed_form() {
        // N=2, V=4, D=4, all rows: each worker sends 2 rows x 2 cols.
        let (n, v_count, d) = (2, 4, 4);
        let master = DenseMatrix::random_uniform(v_count, d, -1.0, 1.0, 11);
        let group = WorkerGroup::new(n, v_count, d).unwrap();
        let rows: Vec<usize> = (0..v_count).collect();
        let (_, ledger) = group
            .run(|ctx| {
                let slice = col_slice(&master, ctx.dim_range(d), ctx.worker_id)?;
                ctx.gather(&rows, &slice)?;
                Ok(())
            })
            .unwrap();
        for r in &ledger.records {
            assert_eq!(r.kind, CommKind::Gather);
            assert_eq!(r.scalars_sent, 4, "worker {}", r.worker);
            assert_eq!(r.scalars_received, 4);
        }
        // (N-1)/N * |R| * D/N = 1/2 * 4 * 2 = 4.
        assert!(ledger.is_conserved());
    }

    #[test]
    fn split_and_gather_ledgers_pair_up() {
        let (n, v_count, d) = (4, 16, 8);
        let master = DenseMatrix::random_uniform(v_count, d, -1.0, 1.0, 13);
        let group = WorkerGroup::new(n, v_count, d).unwrap();
        let rows: Vec<usize> = (0..v_count).collect();
        let (_, ledger) = group
            .run(|ctx| {
                let mine = owned_rows(&master, ctx.vertex_range());
                let slice = ctx.split(&rows, &mine)?;
                ctx.gather(&rows, &slice)?;
                Ok(())
            })
            .unwrap();
        let split_total: u64 = ledger
            .records
            .iter()
            .filter(|r| r.kind == CommKind::Split)
            .map(|r| r.scalars_sent)
            .sum();
        let gather_total: u64 = ledger
            .records
            .iter()
            .filter(|r| r.kind == CommKind::Gather)
            .map(|r| r.scalars_sent)
            .sum();
        // Each round moves V * D * (N-1)/N = 16 * 8 * 3/4 = 96 scalars.
        assert_eq!(split_total, 96);
        assert_eq!(gather_total, 96);
    }

    #[test]
    fn zero_width_slices_pass_through_collectives() {
        // D=2 over N=4: workers 2 and 3 own zero columns.
        let (n, v_count, d) = (4, 8, 2);
        let master = DenseMatrix::random_uniform(v_count, d, -1.0, 1.0, 17);
        let group = WorkerGroup::new(n, v_count, d).unwrap();
        let rows: Vec<usize> = (0..v_count).collect();
        let (results, _) = group
            .run(|ctx| {
                let mine = owned_rows(&master, ctx.vertex_range());
                let slice = ctx.split(&rows, &mine)?;
                if ctx.worker_id >= 2 {
                    assert_eq!(slice.width(), 0);
                }
                let back = ctx.gather(&rows, &slice)?;
                Ok((mine, back))
            })
            .unwrap();
        for (mine, back) in results {
            assert_eq!(mine.data, back.data);
        }
    }

    #[test]
    fn all_share_merges_deterministically() {
        let n = 3;
        let group = WorkerGroup::new(n, 30, 4).unwrap();
        let (results, ledger) = group
            .run(|ctx| {
                let me = ctx.worker_id;
                let keys: Vec<usize> = (0..30).filter(|k| k % 3 == me).collect();
                let values: Vec<f64> = keys.iter().map(|&k| (k * k) as f64).collect();
                ctx.all_share(30, &keys, &values)
            })
            .unwrap();
        let expect: Vec<f64> = (0..30).map(|k| (k * k) as f64).collect();
        for r in &results {
            assert_eq!(r, &expect);
        }
        for rec in &ledger.records {
            assert_eq!(rec.kind, CommKind::AllShare);
            assert_eq!(rec.scalars_sent, 10 * (n as u64 - 1));
        }
    }

    #[test]
    fn all_share_rejects_overlapping_keys() {
        let group = WorkerGroup::new(2, 10, 4).unwrap();
        let err = group
            .run(|ctx| {
                // Both workers claim key 0.
                let keys = if ctx.worker_id == 0 { vec![0, 1] } else { vec![0, 2] };
                let values = vec![1.0; keys.len()];
                ctx.all_share(3, &keys, &values)
            })
            .unwrap_err();
        assert!(matches!(err, Error::Protocol(_)), "got {err:?}");
    }

    #[test]
    fn allreduce_sums_in_worker_order() {
        let group = WorkerGroup::new(4, 8, 4).unwrap();
        let (results, _) = group
            .run(|ctx| {
                let m = DenseMatrix::from_vec(2, 2, vec![1.0; 4])?;
                ctx.allreduce_sum(&m)
            })
            .unwrap();
        for r in &results {
            assert_eq!(r.data, vec![4.0; 4]);
        }
    }

    #[test]
    fn allreduce_shape_mismatch_is_collective_error() {
        let group = WorkerGroup::new(2, 8, 4).unwrap();
        let err = group
            .run(|ctx| {
                let m = if ctx.worker_id == 0 {
                    DenseMatrix::zeros(2, 2)
                } else {
                    DenseMatrix::zeros(2, 3)
                };
                ctx.allreduce_sum(&m)
            })
            .unwrap_err();
        assert!(matches!(err, Error::Collective(_)), "got {err:?}");
    }

    #[test]
    fn missing_worker_surfaces_protocol_error_not_hang() {
        let group = WorkerGroup::new(2, 8, 4)
            .unwrap()
            .with_timeout(Duration::from_millis(200));
        let started = Instant::now();
        let err = group
            .run(|ctx| {
                if ctx.worker_id == 0 {
                    ctx.barrier()?;
                }
                // Worker 1 never calls the barrier.
                Ok(())
            })
            .unwrap_err();
        assert!(matches!(err, Error::Protocol(_)), "got {err:?}");
        assert!(started.elapsed() < Duration::from_secs(5));
    }

    #[test]
    fn mismatched_collective_kinds_are_protocol_errors() {
        let group = WorkerGroup::new(2, 8, 4)
            .unwrap()
            .with_timeout(Duration::from_millis(500));
        let err = group
            .run(|ctx| {
                if ctx.worker_id == 0 {
                    ctx.barrier()?;
                } else {
                    ctx.allreduce_scalars(&[1.0])?;
                }
                Ok(())
            })
            .unwrap_err();
        assert!(matches!(err, Error::Protocol(_)), "got {err:?}");
    }

    #[test]
    fn ledger_snapshot_accumulates_and_round_counter_increments() {
        let group = WorkerGroup::new(2, 8, 4).unwrap();
        assert!(group.ledger_snapshot().records.is_empty());
        let (_, run_ledger) = group
            .run(|ctx| {
                ctx.barrier()?;
                ctx.allreduce_scalars(&[1.0])?;
                ctx.barrier()?;
                Ok(())
            })
            .unwrap();
        // Three collectives -> rounds 1, 2, 3 on every worker.
        let mut per_worker: Vec<Vec<u64>> = vec![Vec::new(); 2];
        for r in &run_ledger.records {
            per_worker[r.worker].push(r.round);
        }
        for rounds in per_worker {
            assert_eq!(rounds, vec![1, 2, 3]);
        }
        let snap1 = group.ledger_snapshot();
        let snap2 = group.ledger_snapshot();
        assert_eq!(snap1.records, snap2.records);
        assert_eq!(snap1.records.len(), run_ledger.records.len());
    }

    #[test]
    fn phases_group_collectives_into_one_round() {
        let group = WorkerGroup::new(2, 8, 4).unwrap();
        let (_, ledger) = group
            .run(|ctx| {
                ctx.begin_phase();
                ctx.allreduce_scalars(&[1.0])?;
                ctx.allreduce_scalars(&[2.0])?;
                ctx.end_phase();
                ctx.allreduce_scalars(&[3.0])?;
                Ok(())
            })
            .unwrap();
        let w0: Vec<u64> = ledger
            .records
            .iter()
            .filter(|r| r.worker == 0)
            .map(|r| r.round)
            .collect();
        assert_eq!(w0, vec![1, 1, 2]);
    }

    #[test]
    fn repeated_runs_are_bitwise_deterministic() {
        let run_once = || {
            let (n, v_count, d) = (3, 9, 5);
            let master = DenseMatrix::random_uniform(v_count, d, -1.0, 1.0, 23);
            let group = WorkerGroup::new(n, v_count, d).unwrap();
            let rows: Vec<usize> = (0..v_count).collect();
            group
                .run(|ctx| {
                    let mine = owned_rows(&master, ctx.vertex_range());
                    let slice = ctx.split(&rows, &mine)?;
                    let full = ctx.gather(&rows, &slice)?;
                    let summed = ctx.allreduce_sum(&full)?;
                    Ok(summed.data)
                })
                .unwrap()
        };
        let (r1, l1) = run_once();
        let (r2, l2) = run_once();
        assert_eq!(r1, r2);
        assert_eq!(l1.records, l2.records);
    }

    #[test]
    fn exchange_rows_round_trips_payloads() {
        let group = WorkerGroup::new(3, 9, 4).unwrap();
        let (results, ledger) = group
            .run(|ctx| {
                let me = ctx.worker_id;
                // Send [me, j] to each worker j.
                let outgoing: Vec<Vec<f64>> =
                    (0..3).map(|j| vec![me as f64, j as f64]).collect();
                ctx.exchange_rows(CommKind::Fetch, 2, outgoing)
            })
            .unwrap();
        for (me, got) in results.iter().enumerate() {
            for (j, payload) in got.iter().enumerate() {
                assert_eq!(payload, &vec![j as f64, me as f64]);
            }
        }
        assert!(ledger.is_conserved());
        // Each worker sends 2 scalars to each of 2 peers.
        for r in &ledger.records {
            assert_eq!(r.scalars_sent, 4);
        }
    }
}
