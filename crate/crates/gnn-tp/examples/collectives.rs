//! The gather/split collectives that power tensor parallelism, plus the
//! communication ledger that audits them.
//!
//! `split` turns vertex-partitioned full-width rows into dimension-
//! partitioned column slices; `gather` is its inverse. One round trip is
//! exact, and the ledger records who sent and received every scalar.
//!
//!     cargo run --example collectives

use gnn_tp::collective::{CommKind, WorkerGroup};
use gnn_tp::dense::DenseMatrix;

fn main() -> gnn_tp::Result<()> {
    const V: usize = 8;
    const D: usize = 6;
    const N: usize = 3;

    // Features every worker can recompute: row-major value v*D + j.
    let full = DenseMatrix::from_vec(
        V,
        D,
        (0..V * D).map(|i| i as f64).collect(),
    )?;

    let group = WorkerGroup::new(N, V, D)?;
    let all_rows: Vec<usize> = (0..V).collect();
    let (results, ledger) = group.run(|ctx| {
        let own = ctx.vertex_range();
        // Each worker starts with the full-width rows of its vertices.
        let mut mine = DenseMatrix::zeros(own.len(), D);
        for (local, v) in own.clone().enumerate() {
            mine.row_mut(local).copy_from_slice(full.row(v));
        }

        // Split: now this worker holds its column slice of *all* rows.
        let slice = ctx.split(&all_rows, &mine)?;
        // Gather: back to full-width rows of the owned vertices.
        let rows = ctx.gather(&all_rows, &slice)?;

        // The worker's global loss contribution, reduced across the group.
        let local_sum: f64 = (0..rows.rows).map(|r| rows.row(r)[0]).sum();
        let total = ctx.allreduce_scalars(&[local_sum])?[0];

        let exact = (0..own.len()).all(|r| rows.row(r) == full.row(own.start + r));
        Ok((ctx.worker_id, slice.col_range.clone(), exact, total))
    })?;

    for (worker, cols, exact, total) in &results {
        println!(
            "worker {worker}: columns {cols:?}, round trip exact: {exact}, \
             allreduced column-0 sum: {total}"
        );
    }

    println!("\nledger ({} records):", ledger.records.len());
    for r in &ledger.records {
        println!(
            "  round {:>2}  worker {}  {:?}: sent {:>3}, received {:>3}",
            r.round, r.worker, r.kind, r.scalars_sent, r.scalars_received
        );
    }
    println!(
        "gather/split rounds: {}, sent == received per round: {}",
        ledger.gather_split_rounds(),
        ledger.is_conserved()
    );
    println!(
        "total gathered scalars: {}",
        ledger.total_received(&[CommKind::Gather])
    );
    Ok(())
}
