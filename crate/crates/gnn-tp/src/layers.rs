//! Coupled-mode GNN building blocks shared by every engine: sparse
//! aggregation over in-edges (forward and its exact transpose) and the GCN /
//! GAT update kernels.
//!
//! Aggregation is *column-separable*: it combines rows of its input with
//! per-edge scalars and never mixes columns. That is the algebraic fact that
//! makes feature-dimension tensor parallelism exact — running [`aggregate`]
//! on each column slice and concatenating equals running it on the full
//! matrix, bitwise. Attention score computation mixes columns, so
//! [`gat_attention`] refuses slices.
//!
//! Determinism contract: for every destination the accumulation order is
//! fixed — the self term first (when present), then in-neighbors in
//! ascending vertex order. The backward kernel mirrors this over out-edges,
//! so with symmetric coefficients it is bitwise identical to the forward
//! kernel.

use crate::dense::{relu, relu_grad, DenseMatrix, FeatureInput};
use crate::dense::{leaky_relu_scalar, leaky_relu_scalar_grad};
use crate::graph::{Graph, NormCoefficients};
use crate::{Error, Result};

/// Negative slope of the LeakyReLU applied to raw attention scores.
pub const ATTENTION_LEAKY_SLOPE: f64 = 0.2;

/// Per-edge aggregation coefficients, addressed by in-CSR edge position,
/// plus optional per-vertex self terms.
pub trait AggCoeffs {
    /// Coefficient of the edge at in-CSR position `in_pos`.
    fn edge_coeff(&self, in_pos: usize) -> f64;
    /// Self-loop coefficient of vertex `v` (0.0 when absent).
    fn self_coeff(&self, v: usize) -> f64;
    /// True if any vertex has a self term. A self term participates in
    /// aggregation exactly when `self_coeff(v) != 0.0`.
    fn has_self(&self) -> bool;
}

impl AggCoeffs for NormCoefficients {
    fn edge_coeff(&self, in_pos: usize) -> f64 {
        self.edge_coeff[in_pos]
    }
    fn self_coeff(&self, v: usize) -> f64 {
        self.self_coeff[v]
    }
    fn has_self(&self) -> bool {
        self.has_self_terms()
    }
}

/// Softmax-normalized per-edge attention weights, aligned with in-CSR order.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeAttention {
    pub alpha: Vec<f64>,
}

impl AggCoeffs for EdgeAttention {
    fn edge_coeff(&self, in_pos: usize) -> f64 {
        self.alpha[in_pos]
    }
    fn self_coeff(&self, _v: usize) -> f64 {
        0.0
    }
    fn has_self(&self) -> bool {
        false
    }
}

/// Parameters of one NN layer: the weight matrix, plus the attention vector
/// `a` (length `2 * out_dim`) for GAT layers.
#[derive(Debug, Clone)]
pub struct LayerParams {
    pub weight: DenseMatrix,
    pub attn_vec: Option<Vec<f64>>,
}

impl LayerParams {
    /// Plain GCN layer parameters.
    pub fn gcn(weight: DenseMatrix) -> Self {
        LayerParams {
            weight,
            attn_vec: None,
        }
    }

    /// GAT layer parameters; `attn_vec` must have `2 * out_dim` entries.
    pub fn gat(weight: DenseMatrix, attn_vec: Vec<f64>) -> Result<Self> {
        if attn_vec.len() != 2 * weight.cols {
            return Err(Error::Shape(format!(
                "attention vector length {} does not match 2 * out_dim = {}",
                attn_vec.len(),
                2 * weight.cols
            )));
        }
        Ok(LayerParams {
            weight,
            attn_vec: Some(attn_vec),
        })
    }

    pub fn in_dim(&self) -> usize {
        self.weight.rows
    }

    pub fn out_dim(&self) -> usize {
        self.weight.cols
    }
}

/// Sparse aggregation: `out[v] = self_coeff(v) * h[v] + sum over in-edges
/// (u -> v) of edge_coeff * h[u]`, self term first, sources ascending.
///
/// Works identically on full matrices and on feature slices — the column
/// count is opaque.
pub fn aggregate(graph: &Graph, coeffs: &dyn AggCoeffs, h: FeatureInput) -> Result<DenseMatrix> {
    let m = h.matrix();
    if m.rows != graph.num_vertices {
        return Err(Error::Shape(format!(
            "aggregate input has {} rows for a graph with {} vertices",
            m.rows, graph.num_vertices
        )));
    }
    let w = m.cols;
    let mut out = DenseMatrix::zeros(graph.num_vertices, w);
    for v in 0..graph.num_vertices {
        let sc = coeffs.self_coeff(v);
        if sc != 0.0 {
            let src = &m.data[v * w..(v + 1) * w];
            let dst = &mut out.data[v * w..(v + 1) * w];
            for j in 0..w {
                dst[j] += sc * src[j];
            }
        }
        let lo = graph.in_offsets[v];
        for (k, &u) in graph.in_neighbors_of(v).iter().enumerate() {
            let c = coeffs.edge_coeff(lo + k);
            let src = &m.data[u * w..(u + 1) * w];
            let dst = &mut out.data[v * w..(v + 1) * w];
            for j in 0..w {
                dst[j] += c * src[j];
            }
        }
    }
    Ok(out)
}

/// Exact transpose of [`aggregate`]: `grad_in[u] = self_coeff(u) *
/// grad_out[u] + sum over out-edges (u -> v) of edge_coeff * grad_out[v]`.
///
/// Gradients are gathered along out-edges (self term first, destinations
/// ascending), so with symmetric coefficients this is bitwise identical to
/// the forward kernel on the same input.
pub fn aggregate_backward(
    graph: &Graph,
    coeffs: &dyn AggCoeffs,
    grad_out: FeatureInput,
) -> Result<DenseMatrix> {
    let g = grad_out.matrix();
    if g.rows != graph.num_vertices {
        return Err(Error::Shape(format!(
            "aggregate_backward input has {} rows for a graph with {} vertices",
            g.rows, graph.num_vertices
        )));
    }
    let w = g.cols;
    let mut out = DenseMatrix::zeros(graph.num_vertices, w);
    for u in 0..graph.num_vertices {
        let sc = coeffs.self_coeff(u);
        if sc != 0.0 {
            let src = &g.data[u * w..(u + 1) * w];
            let dst = &mut out.data[u * w..(u + 1) * w];
            for j in 0..w {
                dst[j] += sc * src[j];
            }
        }
        let lo = graph.out_offsets[u];
        for (k, &v) in graph.out_neighbors_of(u).iter().enumerate() {
            let c = coeffs.edge_coeff(graph.out_to_in_edge[lo + k]);
            let src = &g.data[v * w..(v + 1) * w];
            let dst = &mut out.data[u * w..(u + 1) * w];
            for j in 0..w {
                dst[j] += c * src[j];
            }
        }
    }
    Ok(out)
}

/// NN update: `out = act(a * W)`, returning the pre-activation for backward.
/// With `apply_act` off, `out == pre`.
pub fn gcn_update(
    a: &DenseMatrix,
    p: &LayerParams,
    apply_act: bool,
) -> Result<(DenseMatrix, DenseMatrix)> {
    let pre = a.matmul(&p.weight)?;
    let out = if apply_act { relu(&pre) } else { pre.clone() };
    Ok((out, pre))
}

/// Backward of [`gcn_update`]: returns `(grad_a, grad_W)` given the layer
/// input `a`, the cached pre-activation, and the upstream gradient.
pub fn gcn_update_backward(
    a: &DenseMatrix,
    p: &LayerParams,
    pre: &DenseMatrix,
    apply_act: bool,
    grad_out: &DenseMatrix,
) -> Result<(DenseMatrix, DenseMatrix)> {
    if grad_out.rows != pre.rows || grad_out.cols != pre.cols {
        return Err(Error::Shape(format!(
            "update backward gradient {}x{} does not match pre-activation {}x{}",
            grad_out.rows, grad_out.cols, pre.rows, pre.cols
        )));
    }
    let g_pre = if apply_act {
        relu_grad(pre, grad_out)
    } else {
        grad_out.clone()
    };
    let grad_w = a.matmul_tn(&g_pre)?;
    let grad_a = g_pre.matmul_nt(&p.weight)?;
    Ok((grad_a, grad_w))
}

/// Per-vertex attention score halves: `s1[v] = a1 . (W h_v)` pairs with
/// sources, `s2[v] = a2 . (W h_v)` with destinations.
fn attention_scores(h: &DenseMatrix, p: &LayerParams) -> Result<(DenseMatrix, Vec<f64>, Vec<f64>)> {
    let attn = p.attn_vec.as_ref().ok_or_else(|| {
        Error::Contract("attention requested on a layer without an attention vector".into())
    })?;
    let wh = h.matmul(&p.weight)?;
    let d = p.out_dim();
    if attn.len() != 2 * d {
        return Err(Error::Shape(format!(
            "attention vector length {} does not match 2 * out_dim = {}",
            attn.len(),
            2 * d
        )));
    }
    let (a1, a2) = attn.split_at(d);
    let mut s1 = vec![0.0; h.rows];
    let mut s2 = vec![0.0; h.rows];
    for v in 0..h.rows {
        let row = wh.row(v);
        let mut acc1 = 0.0;
        let mut acc2 = 0.0;
        for j in 0..d {
            acc1 += a1[j] * row[j];
            acc2 += a2[j] * row[j];
        }
        s1[v] = acc1;
        s2[v] = acc2;
    }
    Ok((wh, s1, s2))
}

/// Computes softmax-normalized attention weights for every in-edge:
/// `e_uv = leaky_relu(a1.(W h_u) + a2.(W h_v))`, normalized over each
/// destination's in-edge set with max subtraction.
///
/// Attention mixes feature columns, so this requires full-dimension
/// embeddings; passing a feature slice is a contract violation.
pub fn gat_attention(graph: &Graph, h: FeatureInput, p: &LayerParams) -> Result<EdgeAttention> {
    if h.is_slice() {
        return Err(Error::Contract(
            "gat_attention requires full-dimension embeddings, not a feature slice".into(),
        ));
    }
    let m = h.matrix();
    if m.rows != graph.num_vertices {
        return Err(Error::Shape(format!(
            "gat_attention input has {} rows for a graph with {} vertices",
            m.rows, graph.num_vertices
        )));
    }
    let (_, s1, s2) = attention_scores(m, p)?;
    let mut alpha = vec![0.0; graph.num_edges];
    for v in 0..graph.num_vertices {
        softmax_in_edges(graph, &s1, &s2, v, &mut alpha);
    }
    Ok(EdgeAttention { alpha })
}

/// Softmax over the in-edges of a single destination; shared by the
/// single-shot and partitioned attention precompute paths so their
/// arithmetic is identical.
pub(crate) fn softmax_in_edges(
    graph: &Graph,
    s1: &[f64],
    s2: &[f64],
    v: usize,
    alpha: &mut [f64],
) {
    let lo = graph.in_offsets[v];
    let hi = graph.in_offsets[v + 1];
    if lo == hi {
        return;
    }
    let mut mx = f64::NEG_INFINITY;
    for pos in lo..hi {
        let u = graph.in_neighbors[pos];
        let e = leaky_relu_scalar(s1[u] + s2[v], ATTENTION_LEAKY_SLOPE);
        alpha[pos] = e;
        mx = mx.max(e);
    }
    let mut sum = 0.0;
    for item in alpha.iter_mut().take(hi).skip(lo) {
        let e = (*item - mx).exp();
        *item = e;
        sum += e;
    }
    for item in alpha.iter_mut().take(hi).skip(lo) {
        *item /= sum;
    }
}

/// Backward of [`gat_attention`] for a scalar loss with per-edge upstream
/// gradients `grad_alpha` (in-CSR aligned). Returns `(grad_h, grad_W,
/// grad_a)`; the forward quantities are recomputed internally.
pub fn gat_attention_backward(
    graph: &Graph,
    h: &DenseMatrix,
    p: &LayerParams,
    grad_alpha: &[f64],
) -> Result<(DenseMatrix, DenseMatrix, Vec<f64>)> {
    if grad_alpha.len() != graph.num_edges {
        return Err(Error::Shape(format!(
            "grad_alpha has {} entries for a graph with {} edges",
            grad_alpha.len(),
            graph.num_edges
        )));
    }
    if h.rows != graph.num_vertices {
        return Err(Error::Shape(format!(
            "gat_attention_backward input has {} rows for a graph with {} vertices",
            h.rows, graph.num_vertices
        )));
    }
    let (wh, s1, s2) = attention_scores(h, p)?;
    let d = p.out_dim();
    let attn = p.attn_vec.as_ref().expect("checked by attention_scores");
    let (a1, a2) = attn.split_at(d);

    // Recompute alpha, then push gradients through softmax and LeakyReLU to
    // per-vertex score gradients ds1 / ds2.
    let mut alpha = vec![0.0; graph.num_edges];
    for v in 0..graph.num_vertices {
        softmax_in_edges(graph, &s1, &s2, v, &mut alpha);
    }
    let mut ds1 = vec![0.0; graph.num_vertices];
    let mut ds2 = vec![0.0; graph.num_vertices];
    for v in 0..graph.num_vertices {
        let lo = graph.in_offsets[v];
        let hi = graph.in_offsets[v + 1];
        if lo == hi {
            continue;
        }
        let mut dot = 0.0;
        for pos in lo..hi {
            dot += alpha[pos] * grad_alpha[pos];
        }
        for pos in lo..hi {
            let u = graph.in_neighbors[pos];
            let de = alpha[pos] * (grad_alpha[pos] - dot);
            let dq = de * leaky_relu_scalar_grad(s1[u] + s2[v], ATTENTION_LEAKY_SLOPE);
            ds1[u] += dq;
            ds2[v] += dq;
        }
    }

    // s1/s2 are linear in Wh: grad_Wh[v] = ds1[v]*a1 + ds2[v]*a2, and the
    // attention vector collects grad_a1 = sum_v ds1[v]*Wh[v] (same for a2).
    let mut grad_wh = DenseMatrix::zeros(h.rows, d);
    let mut grad_a = vec![0.0; 2 * d];
    for v in 0..h.rows {
        let whr = wh.row(v);
        let gw = grad_wh.row_mut(v);
        for j in 0..d {
            gw[j] = ds1[v] * a1[j] + ds2[v] * a2[j];
            grad_a[j] += ds1[v] * whr[j];
            grad_a[d + j] += ds2[v] * whr[j];
        }
    }
    let grad_w = h.matmul_tn(&grad_wh)?;
    let grad_h = grad_wh.matmul_nt(&p.weight)?;
    Ok((grad_h, grad_w, grad_a))
}
