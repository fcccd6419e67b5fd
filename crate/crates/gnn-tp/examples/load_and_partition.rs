//! Graph ingestion and partitioning: load an edge list, inspect degrees
//! and normalization coefficients, then cut the vertex space into worker
//! ranges and contiguous chunks.
//!
//!     cargo run --example load_and_partition

use std::io::Write;

use gnn_tp::graph::{compute_norm, load_edge_list, partition_chunks, NormMode};
use gnn_tp::partition::even_ranges;

fn main() -> gnn_tp::Result<()> {
    // A small undirected graph written the way on-disk edge lists look:
    // one `src dst` pair per line, `#` comments allowed.
    let path = std::env::temp_dir().join("gnn_tp_example_edges.txt");
    let mut f = std::fs::File::create(&path)?;
    writeln!(f, "# a 10-vertex ring with two chords")?;
    for v in 0..10usize {
        let w = (v + 1) % 10;
        writeln!(f, "{v} {w}")?;
        writeln!(f, "{w} {v}")?;
    }
    for &(a, b) in &[(0usize, 5usize), (2, 7)] {
        writeln!(f, "{a} {b}")?;
        writeln!(f, "{b} {a}")?;
    }
    drop(f);

    let graph = load_edge_list(&path, 10)?;
    println!(
        "loaded {} vertices, {} directed edges (symmetric: {})",
        graph.num_vertices,
        graph.num_edges,
        graph.is_symmetric()
    );
    for v in 0..graph.num_vertices {
        println!(
            "  vertex {v}: in {:?} out-degree {}",
            graph.in_neighbors_of(v),
            graph.out_neighbors_of(v).len()
        );
    }

    // Degree normalization. The symmetric self-loop mode folds a self term
    // into every vertex; plain degree normalization has none unless a
    // vertex would otherwise be isolated.
    for mode in [NormMode::SymSelfLoop, NormMode::GcnDegree] {
        let norm = compute_norm(&graph, mode)?;
        println!(
            "{mode:?}: self terms {}, coeff of edge 0 = {:.4}",
            norm.has_self_terms(),
            norm.edge_coeff[0]
        );
    }

    // Vertex ownership: contiguous ranges, sizes within one of each other.
    let ranges = even_ranges(10, 4);
    println!("4-worker vertex ownership: {ranges:?}");

    // Chunks: contiguous destination ranges plus the source rows their
    // in-edges read. The source sets are what the chunked scheduler stages.
    let chunks = partition_chunks(&graph, 3)?;
    for c in &chunks {
        println!(
            "chunk {}: dst {:?}, {} local edges, reads {} source rows {:?}",
            c.chunk_id,
            c.dst_range,
            c.num_edges(),
            c.src_set.len(),
            c.src_set
        );
    }

    std::fs::remove_file(&path)?;
    Ok(())
}
