//! Graph storage and preprocessing: dual-orientation CSR, degree arrays,
//! normalization coefficients, contiguous chunk partitioning, and edge-list
//! ingestion.
//!
//! A [`Graph`] is immutable after construction and freely shared across
//! workers. Both orientations describe the same edge set: `in_csr` lists the
//! sorted in-neighbors of every destination, `out_csr` the sorted
//! out-neighbors of every source, and `out_to_in_edge` maps each out-CSR
//! position to the in-CSR position of the same edge so per-edge coefficients
//! (stored in in-CSR order) can be read during out-edge traversals.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::ops::Range;
use std::path::Path;

use crate::partition::even_ranges;
use crate::{Error, Result};

/// Immutable directed graph with both CSR orientations and degree arrays.
#[derive(Debug, Clone)]
pub struct Graph {
    pub num_vertices: usize,
    pub num_edges: usize,
    /// in-CSR: `in_neighbors[in_offsets[v]..in_offsets[v+1]]` are the sorted
    /// sources of edges into `v`.
    pub in_offsets: Vec<usize>,
    pub in_neighbors: Vec<usize>,
    /// out-CSR: `out_neighbors[out_offsets[u]..out_offsets[u+1]]` are the
    /// sorted destinations of edges out of `u`.
    pub out_offsets: Vec<usize>,
    pub out_neighbors: Vec<usize>,
    pub deg_in: Vec<usize>,
    pub deg_out: Vec<usize>,
    /// For each out-CSR edge position, the in-CSR position of the same edge.
    pub out_to_in_edge: Vec<usize>,
}

impl Graph {
    /// Builds a graph from an edge list. Duplicate edges are collapsed;
    /// self-loops are allowed and treated as ordinary edges.
    pub fn from_edges(num_vertices: usize, edges: &[(usize, usize)]) -> Result<Graph> {
        for &(u, v) in edges {
            if u >= num_vertices || v >= num_vertices {
                return Err(Error::Config(format!(
                    "edge ({u}, {v}) outside vertex range [0, {num_vertices})"
                )));
            }
        }
        let mut sorted: Vec<(usize, usize)> = edges.to_vec();
        // Sort by (dst, src) so the in-CSR can be laid out in one pass.
        sorted.sort_unstable_by_key(|&(u, v)| (v, u));
        sorted.dedup();
        let num_edges = sorted.len();

        let mut in_offsets = vec![0usize; num_vertices + 1];
        let mut in_neighbors = Vec::with_capacity(num_edges);
        for &(u, v) in &sorted {
            in_offsets[v + 1] += 1;
            in_neighbors.push(u);
        }
        for v in 0..num_vertices {
            in_offsets[v + 1] += in_offsets[v];
        }

        // Transpose into the out-CSR, remembering each edge's in-CSR slot.
        let mut deg_out = vec![0usize; num_vertices];
        for &(u, _) in &sorted {
            deg_out[u] += 1;
        }
        let mut out_offsets = vec![0usize; num_vertices + 1];
        for u in 0..num_vertices {
            out_offsets[u + 1] = out_offsets[u] + deg_out[u];
        }
        let mut out_neighbors = vec![0usize; num_edges];
        let mut out_to_in_edge = vec![0usize; num_edges];
        let mut cursor = out_offsets.clone();
        // Iterating in (dst, src) order fills each source's out-list with
        // ascending destinations.
        for (in_pos, &(u, v)) in sorted.iter().enumerate() {
            let slot = cursor[u];
            out_neighbors[slot] = v;
            out_to_in_edge[slot] = in_pos;
            cursor[u] += 1;
        }

        let deg_in: Vec<usize> = (0..num_vertices)
            .map(|v| in_offsets[v + 1] - in_offsets[v])
            .collect();

        Ok(Graph {
            num_vertices,
            num_edges,
            in_offsets,
            in_neighbors,
            out_offsets,
            out_neighbors,
            deg_in,
            deg_out,
            out_to_in_edge,
        })
    }

    /// Sorted sources of edges into `v`.
    #[inline]
    pub fn in_neighbors_of(&self, v: usize) -> &[usize] {
        &self.in_neighbors[self.in_offsets[v]..self.in_offsets[v + 1]]
    }

    /// Sorted destinations of edges out of `u`.
    #[inline]
    pub fn out_neighbors_of(&self, u: usize) -> &[usize] {
        &self.out_neighbors[self.out_offsets[u]..self.out_offsets[u + 1]]
    }

    /// True if every edge has its reverse edge (required for the symmetric
    /// normalization mode).
    pub fn is_symmetric(&self) -> bool {
        for v in 0..self.num_vertices {
            for &u in self.in_neighbors_of(v) {
                if self.in_neighbors_of(u).binary_search(&v).is_err() {
                    return false;
                }
            }
        }
        true
    }
}

/// Loads a whitespace-separated "src dst" edge list. Vertex ids must already
/// be dense in `[0, num_vertices)`; out-of-range ids are reported with their
/// 1-based line number. Blank lines and lines starting with `#` are skipped;
/// duplicate edges are collapsed.
pub fn load_edge_list(path: &Path, num_vertices: usize) -> Result<Graph> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut edges = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut it = trimmed.split_whitespace();
        let src = it.next();
        let dst = it.next();
        let extra = it.next();
        let (src, dst) = match (src, dst, extra) {
            (Some(s), Some(d), None) => (s, d),
            _ => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected \"src dst\", got {trimmed:?}"),
                })
            }
        };
        let parse = |tok: &str, what: &str| -> Result<usize> {
            tok.parse::<usize>().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("{what} {tok:?} is not a non-negative integer"),
            })
        };
        let u = parse(src, "source")?;
        let v = parse(dst, "destination")?;
        if u >= num_vertices || v >= num_vertices {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("vertex id out of range: edge ({u}, {v}) with num_vertices {num_vertices}"),
            });
        }
        edges.push((u, v));
    }
    Graph::from_edges(num_vertices, &edges)
}

/// How per-edge aggregation coefficients are derived from degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMode {
    /// `c_uv = 1/sqrt(deg_in(v) * deg_out(u))` per edge. Degrees of an
    /// existing edge are never zero, so the formula is always finite;
    /// vertices with *no* in-edges additionally receive a self-loop
    /// coefficient (with both of its endpoint degrees counted as degree+1)
    /// so their features are not zeroed out by aggregation.
    GcnDegree,
    /// Symmetrically normalized adjacency with self-loops:
    /// `c_uv = 1/sqrt((deg(u)+1)(deg(v)+1))` per edge and `1/(deg(v)+1)` per
    /// vertex. Requires a symmetric edge set; the resulting matrix is
    /// symmetric with spectral norm at most 1.
    SymSelfLoop,
}

/// Per-edge (in-CSR aligned) and per-vertex self-loop coefficients.
///
/// `self_coeff[v] == 0.0` means vertex `v` has no self term.
#[derive(Debug, Clone)]
pub struct NormCoefficients {
    pub mode: NormMode,
    pub edge_coeff: Vec<f64>,
    pub self_coeff: Vec<f64>,
}

impl NormCoefficients {
    /// True if any vertex carries a self-loop term.
    pub fn has_self_terms(&self) -> bool {
        self.self_coeff.iter().any(|&c| c != 0.0)
    }
}

/// Computes aggregation coefficients for `graph` in the requested mode.
///
/// `SymSelfLoop` returns a contract violation if the edge set is not
/// symmetric, because only then is the normalized matrix symmetric with unit
/// spectral bound.
pub fn compute_norm(graph: &Graph, mode: NormMode) -> Result<NormCoefficients> {
    let v_count = graph.num_vertices;
    let mut edge_coeff = vec![0.0; graph.num_edges];
    let mut self_coeff = vec![0.0; v_count];
    match mode {
        NormMode::GcnDegree => {
            for v in 0..v_count {
                let lo = graph.in_offsets[v];
                for (k, &u) in graph.in_neighbors_of(v).iter().enumerate() {
                    edge_coeff[lo + k] =
                        1.0 / ((graph.deg_in[v] as f64).sqrt() * (graph.deg_out[u] as f64).sqrt());
                }
                if graph.deg_in[v] == 0 {
                    // Implicit self-loop: the loop adds one in- and one
                    // out-edge at v, giving 1/sqrt(1 * (deg_out(v)+1)).
                    self_coeff[v] = 1.0 / ((graph.deg_out[v] + 1) as f64).sqrt();
                }
            }
        }
        NormMode::SymSelfLoop => {
            if !graph.is_symmetric() {
                return Err(Error::Contract(
                    "symmetric normalization requires a symmetric edge set".into(),
                ));
            }
            // With a symmetric edge set deg_in == deg_out; either works.
            let dt = |v: usize| (graph.deg_in[v] + 1) as f64;
            for v in 0..v_count {
                let lo = graph.in_offsets[v];
                for (k, &u) in graph.in_neighbors_of(v).iter().enumerate() {
                    // sqrt(a)*sqrt(b) is commutative in (u, v), so the
                    // coefficient of (u, v) and (v, u) is bitwise identical.
                    edge_coeff[lo + k] = 1.0 / (dt(u).sqrt() * dt(v).sqrt());
                }
                self_coeff[v] = 1.0 / dt(v);
            }
        }
    }
    Ok(NormCoefficients {
        mode,
        edge_coeff,
        self_coeff,
    })
}

/// A contiguous destination-vertex range plus all of its in-edges.
///
/// The in-edges of a contiguous dst range occupy a contiguous span of the
/// parent in-CSR, so the restricted CSR is represented by `local_edges`
/// (parent in-CSR positions) rather than copied arrays; per-destination
/// offsets come straight from the parent graph.
#[derive(Debug, Clone)]
pub struct Chunk {
    pub chunk_id: usize,
    pub dst_range: Range<usize>,
    /// Sorted unique sources of the chunk's in-edges.
    pub src_set: Vec<usize>,
    /// Parent in-CSR edge positions covering exactly the in-edges of
    /// `dst_range`.
    pub local_edges: Range<usize>,
}

impl Chunk {
    /// Number of in-edges in the chunk.
    pub fn num_edges(&self) -> usize {
        self.local_edges.end - self.local_edges.start
    }
}

/// Splits `[0, V)` into `num_chunks` contiguous destination ranges by the
/// crate-wide ceil/floor rule and collects each range's in-edges and source
/// set.
pub fn partition_chunks(graph: &Graph, num_chunks: usize) -> Result<Vec<Chunk>> {
    if num_chunks == 0 || num_chunks > graph.num_vertices {
        return Err(Error::Config(format!(
            "chunk count {num_chunks} out of range [1, {}]",
            graph.num_vertices
        )));
    }
    let ranges = even_ranges(graph.num_vertices, num_chunks);
    let mut chunks = Vec::with_capacity(num_chunks);
    for (chunk_id, dst_range) in ranges.into_iter().enumerate() {
        let lo = graph.in_offsets[dst_range.start];
        let hi = graph.in_offsets[dst_range.end];
        let mut src_set: Vec<usize> = graph.in_neighbors[lo..hi].to_vec();
        src_set.sort_unstable();
        src_set.dedup();
        chunks.push(Chunk {
            chunk_id,
            dst_range,
            src_set,
            local_edges: lo..hi,
        });
    }
    Ok(chunks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    #[test]
    fn from_edges_builds_both_orientations() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(g.num_edges, 2);
        assert_eq!(g.deg_in, vec![0, 1, 1]);
        assert_eq!(g.deg_out, vec![1, 1, 0]);
        assert_eq!(g.in_neighbors_of(1), &[0]);
        assert_eq!(g.out_neighbors_of(0), &[1]);
    }

    #[test]
    fn duplicate_edges_collapse() {
        let g = Graph::from_edges(2, &[(0, 1), (0, 1)]).unwrap();
        assert_eq!(g.num_edges, 1);
        assert_eq!(g.deg_in, vec![0, 1]);
    }

    #[test]
    fn degree_sums_match_edge_count() {
        let g = Graph::from_edges(6, &[(0, 1), (2, 1), (3, 4), (4, 3), (5, 0), (0, 5)]).unwrap();
        assert_eq!(g.deg_in.iter().sum::<usize>(), g.num_edges);
        assert_eq!(g.deg_out.iter().sum::<usize>(), g.num_edges);
    }

    #[test]
    fn out_to_in_edge_identifies_same_edge() {
        let g = Graph::from_edges(5, &[(0, 2), (1, 2), (0, 3), (4, 0), (3, 2)]).unwrap();
        for u in 0..g.num_vertices {
            for (k, &v) in g.out_neighbors_of(u).iter().enumerate() {
                let in_pos = g.out_to_in_edge[g.out_offsets[u] + k];
                // The in-CSR slot must belong to v's range and name u.
                assert!(in_pos >= g.in_offsets[v] && in_pos < g.in_offsets[v + 1]);
                assert_eq!(g.in_neighbors[in_pos], u);
            }
        }
    }

    #[test]
    fn load_edge_list_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("edges.txt");
        let mut f = File::create(&path).unwrap();
        writeln!(f, "0 1").unwrap();
        writeln!(f, "1 2").unwrap();
        drop(f);
        let g = load_edge_list(&path, 3).unwrap();
        assert_eq!(g.num_edges, 2);
        assert_eq!(g.deg_in, vec![0, 1, 1]);
    }

    #[test]
    fn load_edge_list_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.txt");
        File::create(&path).unwrap();
        let g = load_edge_list(&path, 4).unwrap();
        assert_eq!(g.num_edges, 0);
        assert!(g.deg_in.iter().all(|&d| d == 0));
    }

    #[test]
    fn load_edge_list_dedups() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dup.txt");
        let mut f = File::create(&path).unwrap();
        writeln!(f, "0 1").unwrap();
        writeln!(f, "0 1").unwrap();
        drop(f);
        let g = load_edge_list(&path, 2).unwrap();
        assert_eq!(g.num_edges, 1);
    }

    #[test]
    fn load_edge_list_reports_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        let mut f = File::create(&path).unwrap();
        writeln!(f, "0 1").unwrap();
        writeln!(f, "7 1").unwrap();
        drop(f);
        match load_edge_list(&path, 3) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        let path = dir.path().join("malformed.txt");
        let mut f = File::create(&path).unwrap();
        writeln!(f, "0 1 9").unwrap();
        drop(f);
        match load_edge_list(&path, 3) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn gcn_degree_single_edge_is_one() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let c = compute_norm(&g, NormMode::GcnDegree).unwrap();
        assert_eq!(c.edge_coeff, vec![1.0]);
        // Vertex 0 has no in-edges: it gets the implicit self-loop.
        assert!((c.self_coeff[0] - 1.0 / 2.0f64.sqrt()).abs() < 1e-15);
        assert_eq!(c.self_coeff[1], 0.0);
    }

    #[test]
    fn sym_self_loop_isolated_vertex() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 0)]).unwrap();
        let c = compute_norm(&g, NormMode::SymSelfLoop).unwrap();
        // Vertex 2 is isolated: self coefficient 1/(0+1) = 1.
        assert_eq!(c.self_coeff[2], 1.0);
    }

    #[test]
    fn sym_self_loop_rejects_asymmetric_graphs() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        assert!(matches!(
            compute_norm(&g, NormMode::SymSelfLoop),
            Err(Error::Contract(_))
        ));
    }

    /// Dense coefficient matrix C with C[v][u] = coefficient of edge u->v
    /// (plus the self diagonal), used by the spectral-norm oracle.
    fn dense_coeff_matrix(g: &Graph, c: &NormCoefficients) -> Vec<Vec<f64>> {
        let n = g.num_vertices;
        let mut m = vec![vec![0.0; n]; n];
        for v in 0..n {
            m[v][v] += c.self_coeff[v];
            let lo = g.in_offsets[v];
            for (k, &u) in g.in_neighbors_of(v).iter().enumerate() {
                m[v][u] += c.edge_coeff[lo + k];
            }
        }
        m
    }

    /// Power-iteration estimate of the spectral norm of (symmetric) M.
    fn spectral_norm_power_iteration(m: &[Vec<f64>]) -> f64 {
        let n = m.len();
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64) * 0.01).collect();
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let k = norm(&x);
        for v in &mut x {
            *v /= k;
        }
        let mut lambda = 0.0;
        for _ in 0..500 {
            let mut y = vec![0.0; n];
            for i in 0..n {
                for j in 0..n {
                    y[i] += m[i][j] * x[j];
                }
            }
            lambda = norm(&y);
            if lambda == 0.0 {
                return 0.0;
            }
            for v in &mut y {
                *v /= lambda;
            }
            x = y;
        }
        lambda
    }

    #[test]
    fn sym_self_loop_path_spectral_norm_at_most_one() {
        // Symmetric 3-vertex path 0-1-2.
        let g = Graph::from_edges(3, &[(0, 1), (1, 0), (1, 2), (2, 1)]).unwrap();
        let c = compute_norm(&g, NormMode::SymSelfLoop).unwrap();
        let m = dense_coeff_matrix(&g, &c);
        // Symmetry is exact, not approximate.
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m[i][j], m[j][i]);
            }
        }
        let sn = spectral_norm_power_iteration(&m);
        assert!(sn <= 1.0 + 1e-9, "spectral norm {sn} exceeds 1");
    }

    #[test]
    fn sym_self_loop_random_graph_spectral_norm() {
        // Random symmetric graph on 20 vertices.
        let mut edges = Vec::new();
        let mut state = 0x2545f4914f6cdd1du64;
        for u in 0..20usize {
            for v in (u + 1)..20usize {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                if state % 5 == 0 {
                    edges.push((u, v));
                    edges.push((v, u));
                }
            }
        }
        let g = Graph::from_edges(20, &edges).unwrap();
        let c = compute_norm(&g, NormMode::SymSelfLoop).unwrap();
        let m = dense_coeff_matrix(&g, &c);
        let sn = spectral_norm_power_iteration(&m);
        assert!(sn <= 1.0 + 1e-9, "spectral norm {sn} exceeds 1");
    }

    #[test]
    fn partition_chunks_shapes() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let chunks = partition_chunks(&g, 2).unwrap();
        assert_eq!(chunks[0].dst_range, 0..2);
        assert_eq!(chunks[1].dst_range, 2..4);

        let g5 = Graph::from_edges(5, &[(0, 1)]).unwrap();
        let chunks = partition_chunks(&g5, 2).unwrap();
        assert_eq!(chunks[0].dst_range.len(), 3);
        assert_eq!(chunks[1].dst_range.len(), 2);
    }

    #[test]
    fn single_chunk_covers_all_edges() {
        let g = Graph::from_edges(5, &[(0, 1), (3, 1), (2, 4), (1, 0)]).unwrap();
        let chunks = partition_chunks(&g, 1).unwrap();
        assert_eq!(chunks.len(), 1);
        assert_eq!(chunks[0].local_edges, 0..g.num_edges);
        let mut srcs: Vec<usize> = vec![0, 3, 2, 1];
        srcs.sort_unstable();
        srcs.dedup();
        assert_eq!(chunks[0].src_set, srcs);
    }

    #[test]
    fn chunk_count_bounds() {
        let g = Graph::from_edges(3, &[(0, 1)]).unwrap();
        assert!(matches!(partition_chunks(&g, 0), Err(Error::Config(_))));
        assert!(matches!(partition_chunks(&g, 4), Err(Error::Config(_))));
    }

    #[test]
    fn chunks_partition_edges_exactly() {
        let g = Graph::from_edges(
            9,
            &[(0, 4), (1, 4), (2, 4), (8, 0), (7, 3), (6, 3), (5, 8), (4, 8), (3, 2)],
        )
        .unwrap();
        for n in 1..=9 {
            let chunks = partition_chunks(&g, n).unwrap();
            let mut covered = 0;
            let mut cursor = 0;
            for ch in &chunks {
                assert_eq!(ch.dst_range.start, cursor);
                cursor = ch.dst_range.end;
                covered += ch.num_edges();
                // src_set equals the sources of the chunk's local edges.
                let mut srcs: Vec<usize> =
                    g.in_neighbors[ch.local_edges.clone()].to_vec();
                srcs.sort_unstable();
                srcs.dedup();
                assert_eq!(ch.src_set, srcs);
            }
            assert_eq!(cursor, g.num_vertices);
            assert_eq!(covered, g.num_edges);
        }
    }

    proptest! {
        /// Rebuilding the graph from its transposed edge set yields the
        /// original out-CSR (transpose involution).
        #[test]
        fn transpose_involution(edges in proptest::collection::vec((0usize..12, 0usize..12), 0..60)) {
            let g = Graph::from_edges(12, &edges).unwrap();
            let flipped: Vec<(usize, usize)> = edges.iter().map(|&(u, v)| (v, u)).collect();
            let gt = Graph::from_edges(12, &flipped).unwrap();
            prop_assert_eq!(&g.in_offsets, &gt.out_offsets);
            prop_assert_eq!(&g.in_neighbors, &gt.out_neighbors);
            prop_assert_eq!(&g.out_offsets, &gt.in_offsets);
            prop_assert_eq!(&g.out_neighbors, &gt.in_neighbors);
        }
    }
}
