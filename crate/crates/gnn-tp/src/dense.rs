//! Minimal dense f64 kernels: matmul, activations, softmax/cross-entropy,
//! column slicing, and deterministic initialization.
//!
//! Everything is row-major and every accumulation runs in a fixed loop order
//! (ascending inner index, no reassociation), so two code paths that combine
//! the same operands in the same order produce bitwise-identical results.
//! Engine equivalence in this crate rests on that discipline, not on float
//! algebra.

use std::ops::Range;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Row-major dense matrix of f64 values. Rows are vertices, columns are
/// feature dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    /// All-zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from a row-major data vector.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "matrix data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    /// Builds a matrix from explicit rows (test/debug convenience).
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(nrows * ncols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != ncols {
                return Err(Error::Shape(format!(
                    "row {i} has {} entries, expected {ncols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        DenseMatrix::from_vec(nrows, ncols, data)
    }

    /// Identity matrix of order `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Deterministic uniform random matrix in `[lo, hi)`.
    pub fn random_uniform(rows: usize, cols: usize, lo: f64, hi: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rows * cols).map(|_| rng.gen_range(lo..hi)).collect();
        DenseMatrix { rows, cols, data }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Standard product `self * b`. Accumulation over the shared dimension is
    /// strictly ascending for every output element.
    pub fn matmul(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != b.rows {
            return Err(Error::Shape(format!(
                "matmul {}x{} * {}x{}",
                self.rows, self.cols, b.rows, b.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, b.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a_ik = self.data[i * self.cols + k];
                let b_row = &b.data[k * b.cols..(k + 1) * b.cols];
                let o_row = &mut out.data[i * b.cols..(i + 1) * b.cols];
                for j in 0..b.cols {
                    o_row[j] += a_ik * b_row[j];
                }
            }
        }
        Ok(out)
    }

    /// `self^T * b` without materializing the transpose; same ascending-`k`
    /// accumulation order as [`DenseMatrix::matmul`] on the transposed
    /// operand.
    pub fn matmul_tn(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != b.rows {
            return Err(Error::Shape(format!(
                "matmul_tn ({}x{})^T * {}x{}",
                self.rows, self.cols, b.rows, b.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.cols, b.cols);
        for k in 0..self.rows {
            let a_row = &self.data[k * self.cols..(k + 1) * self.cols];
            let b_row = &b.data[k * b.cols..(k + 1) * b.cols];
            for i in 0..self.cols {
                let a_ki = a_row[i];
                let o_row = &mut out.data[i * b.cols..(i + 1) * b.cols];
                for j in 0..b.cols {
                    o_row[j] += a_ki * b_row[j];
                }
            }
        }
        Ok(out)
    }

    /// `self * b^T`; accumulation over the shared dimension is ascending.
    pub fn matmul_nt(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != b.cols {
            return Err(Error::Shape(format!(
                "matmul_nt {}x{} * ({}x{})^T",
                self.rows, self.cols, b.rows, b.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, b.rows);
        for i in 0..self.rows {
            let a_row = &self.data[i * self.cols..(i + 1) * self.cols];
            for j in 0..b.rows {
                let b_row = &b.data[j * b.cols..(j + 1) * b.cols];
                let mut acc = 0.0;
                for k in 0..self.cols {
                    acc += a_row[k] * b_row[k];
                }
                out.data[i * b.rows + j] = acc;
            }
        }
        Ok(out)
    }

    /// Materialized transpose.
    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// In-place `self += factor * other`.
    pub fn add_scaled(&mut self, other: &DenseMatrix, factor: f64) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape(format!(
                "add_scaled {}x{} += {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += factor * b;
        }
        Ok(())
    }

    /// In-place scalar multiply.
    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.data {
            *v *= factor;
        }
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest absolute elementwise difference (test helper).
    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// A column-range slice of a parent matrix, owned by one worker.
///
/// `values` stores the slice contents densely (rows x width). The column
/// range refers to the parent feature dimension; slice widths across workers
/// partition `[0, D)` by the crate-wide ceil/floor rule. A zero-width slice
/// is legal (more workers than columns) and flows through every collective
/// and kernel unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSlice {
    pub owner_worker: usize,
    pub col_range: Range<usize>,
    pub values: DenseMatrix,
}

impl FeatureSlice {
    pub fn rows(&self) -> usize {
        self.values.rows
    }

    pub fn width(&self) -> usize {
        self.col_range.end - self.col_range.start
    }
}

/// Input to kernels that accept either a full matrix or a feature slice.
/// Aggregation-style kernels treat the column count as opaque; NN kernels
/// that mix columns (attention scores) must reject slices.
#[derive(Debug, Clone, Copy)]
pub enum FeatureInput<'a> {
    Full(&'a DenseMatrix),
    Slice(&'a FeatureSlice),
}

impl<'a> FeatureInput<'a> {
    /// The underlying dense storage (slice contents are dense too).
    pub fn matrix(&self) -> &'a DenseMatrix {
        match self {
            FeatureInput::Full(m) => m,
            FeatureInput::Slice(s) => &s.values,
        }
    }

    pub fn is_slice(&self) -> bool {
        matches!(self, FeatureInput::Slice(_))
    }
}

/// Elementwise ReLU.
pub fn relu(m: &DenseMatrix) -> DenseMatrix {
    DenseMatrix {
        rows: m.rows,
        cols: m.cols,
        data: m.data.iter().map(|&x| if x > 0.0 { x } else { 0.0 }).collect(),
    }
}

/// Gradient of ReLU: upstream gradient masked by `pre > 0`.
pub fn relu_grad(pre: &DenseMatrix, upstream: &DenseMatrix) -> DenseMatrix {
    assert_eq!(pre.rows, upstream.rows);
    assert_eq!(pre.cols, upstream.cols);
    DenseMatrix {
        rows: pre.rows,
        cols: pre.cols,
        data: pre
            .data
            .iter()
            .zip(&upstream.data)
            .map(|(&x, &g)| if x > 0.0 { g } else { 0.0 })
            .collect(),
    }
}

/// Elementwise LeakyReLU with the given negative slope.
pub fn leaky_relu(m: &DenseMatrix, slope: f64) -> DenseMatrix {
    DenseMatrix {
        rows: m.rows,
        cols: m.cols,
        data: m
            .data
            .iter()
            .map(|&x| if x > 0.0 { x } else { slope * x })
            .collect(),
    }
}

/// Gradient of LeakyReLU.
pub fn leaky_relu_grad(pre: &DenseMatrix, slope: f64, upstream: &DenseMatrix) -> DenseMatrix {
    assert_eq!(pre.rows, upstream.rows);
    assert_eq!(pre.cols, upstream.cols);
    DenseMatrix {
        rows: pre.rows,
        cols: pre.cols,
        data: pre
            .data
            .iter()
            .zip(&upstream.data)
            .map(|(&x, &g)| if x > 0.0 { g } else { slope * g })
            .collect(),
    }
}

/// Scalar LeakyReLU (used on per-edge attention scores).
#[inline]
pub fn leaky_relu_scalar(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        slope * x
    }
}

/// Scalar LeakyReLU derivative.
#[inline]
pub fn leaky_relu_scalar_grad(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        slope
    }
}

/// Row-wise softmax with per-row max subtraction for overflow safety.
pub fn row_softmax(m: &DenseMatrix) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(m.rows, m.cols);
    for r in 0..m.rows {
        let row = m.row(r);
        let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        let o = out.row_mut(r);
        for (j, &x) in row.iter().enumerate() {
            let e = (x - mx).exp();
            o[j] = e;
            sum += e;
        }
        for v in o.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// Mean masked softmax cross-entropy loss and its gradient w.r.t. the logits.
///
/// The loss averages the negative log-likelihood over rows where
/// `mask[v] == true`; gradient rows are zero wherever the mask is false.
pub fn softmax_xent_loss(
    logits: &DenseMatrix,
    labels: &[usize],
    mask: &[bool],
) -> Result<(f64, DenseMatrix)> {
    if labels.len() != logits.rows || mask.len() != logits.rows {
        return Err(Error::Shape(format!(
            "loss over {} logit rows with {} labels / {} mask entries",
            logits.rows,
            labels.len(),
            mask.len()
        )));
    }
    let classes = logits.cols;
    let count = mask.iter().filter(|&&m| m).count();
    if count == 0 {
        return Err(Error::Contract(
            "softmax cross-entropy over an empty mask is undefined".into(),
        ));
    }
    let inv = 1.0 / count as f64;
    let mut grad = DenseMatrix::zeros(logits.rows, classes);
    let mut loss = 0.0;
    for v in 0..logits.rows {
        if !mask[v] {
            continue;
        }
        let label = labels[v];
        if label >= classes {
            return Err(Error::Contract(format!(
                "label {label} out of range for {classes} classes (row {v})"
            )));
        }
        let row = logits.row(v);
        let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for &x in row {
            sum += (x - mx).exp();
        }
        loss += mx + sum.ln() - row[label];
        let g = grad.row_mut(v);
        for (j, &x) in row.iter().enumerate() {
            g[j] = ((x - mx).exp() / sum) * inv;
        }
        g[label] -= inv;
    }
    Ok((loss * inv, grad))
}

/// Copies a column range out of `m` into a worker-owned slice. Zero-width
/// ranges are allowed.
pub fn col_slice(m: &DenseMatrix, col_range: Range<usize>, owner_worker: usize) -> Result<FeatureSlice> {
    if col_range.start > col_range.end || col_range.end > m.cols {
        return Err(Error::Shape(format!(
            "column range {}..{} outside matrix with {} columns",
            col_range.start, col_range.end, m.cols
        )));
    }
    let width = col_range.end - col_range.start;
    let mut values = DenseMatrix::zeros(m.rows, width);
    for r in 0..m.rows {
        values.row_mut(r).copy_from_slice(&m.row(r)[col_range.start..col_range.end]);
    }
    Ok(FeatureSlice {
        owner_worker,
        col_range,
        values,
    })
}

/// Reassembles a full matrix from slices whose column ranges partition
/// `[0, D)`. Slices must be passed in ascending worker order, which for the
/// crate-wide partitioning rule is also ascending column order.
pub fn col_concat(slices: &[FeatureSlice]) -> Result<DenseMatrix> {
    if slices.is_empty() {
        return Err(Error::Shape("col_concat of zero slices".into()));
    }
    let rows = slices[0].rows();
    let mut cursor = 0;
    for s in slices {
        if s.rows() != rows {
            return Err(Error::Shape(format!(
                "col_concat row mismatch: {} vs {}",
                s.rows(),
                rows
            )));
        }
        if s.col_range.start != cursor {
            return Err(Error::Shape(format!(
                "col_concat ranges must be contiguous: expected start {cursor}, got {}",
                s.col_range.start
            )));
        }
        cursor = s.col_range.end;
    }
    let cols = cursor;
    let mut out = DenseMatrix::zeros(rows, cols);
    for s in slices {
        let w = s.width();
        for r in 0..rows {
            out.row_mut(r)[s.col_range.start..s.col_range.end]
                .copy_from_slice(&s.values.data[r * w..(r + 1) * w]);
        }
    }
    Ok(out)
}

/// Deterministic Glorot-uniform initialization: entries uniform in
/// `[-sqrt(6/(rows+cols)), sqrt(6/(rows+cols)))`.
pub fn glorot_init(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    DenseMatrix::random_uniform(rows, cols, -bound, bound, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::even_ranges;

    /// Independent naive triple-loop matmul used as the oracle.
    fn naive_matmul(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(a.rows, b.cols);
        for i in 0..a.rows {
            for j in 0..b.cols {
                let mut acc = 0.0;
                for k in 0..a.cols {
                    acc += a.get(i, k) * b.get(k, j);
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    #[test]
    fn matmul_identity() {
        let m = DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let out = DenseMatrix::identity(2).matmul(&m).unwrap();
        assert_eq!(out, m);
    }

    #[test]
    fn matmul_hand_arithmetic() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[&[1.0], &[1.0]]).unwrap();
        let out = a.matmul(&b).unwrap();
        assert_eq!(out.data, vec![3.0, 7.0]);
    }

    #[test]
    fn matmul_matches_naive_oracle_bitwise() {
        let a = DenseMatrix::random_uniform(7, 5, -1.0, 1.0, 11);
        let b = DenseMatrix::random_uniform(5, 3, -1.0, 1.0, 12);
        let fast = a.matmul(&b).unwrap();
        let oracle = naive_matmul(&a, &b);
        // Same ascending-k accumulation order on both sides -> 0 ulps.
        assert_eq!(fast.data, oracle.data);
    }

    #[test]
    fn matmul_shape_error() {
        let a = DenseMatrix::zeros(2, 3);
        let b = DenseMatrix::zeros(2, 3);
        assert!(matches!(a.matmul(&b), Err(Error::Shape(_))));
    }

    #[test]
    fn transpose_matmuls_match_explicit_transpose() {
        let a = DenseMatrix::random_uniform(6, 4, -1.0, 1.0, 21);
        let b = DenseMatrix::random_uniform(6, 3, -1.0, 1.0, 22);
        let fused = a.matmul_tn(&b).unwrap();
        let explicit = a.transpose().matmul(&b).unwrap();
        assert_eq!(fused.data, explicit.data);

        let c = DenseMatrix::random_uniform(5, 4, -1.0, 1.0, 23);
        let fused = a.matmul_nt(&c).unwrap();
        let explicit = a.matmul(&c.transpose()).unwrap();
        assert_eq!(fused.data, explicit.data);
    }

    #[test]
    fn relu_and_leaky_relu_values() {
        let m = DenseMatrix::from_rows(&[&[-1.0, 0.0, 2.0]]).unwrap();
        assert_eq!(relu(&m).data, vec![0.0, 0.0, 2.0]);
        let m2 = DenseMatrix::from_rows(&[&[-2.0]]).unwrap();
        assert_eq!(leaky_relu(&m2, 0.2).data, vec![-0.4]);
    }

    /// Central finite differences of a scalar function of one matrix entry.
    fn central_diff(f: &dyn Fn(&DenseMatrix) -> f64, at: &DenseMatrix, r: usize, c: usize) -> f64 {
        let h = 1e-6;
        let mut plus = at.clone();
        plus.set(r, c, plus.get(r, c) + h);
        let mut minus = at.clone();
        minus.set(r, c, minus.get(r, c) - h);
        (f(&plus) - f(&minus)) / (2.0 * h)
    }

    #[test]
    fn activation_grads_match_finite_differences() {
        // Random input away from the kink (|x| >= 1e-4 guaranteed by regen).
        let mut x = DenseMatrix::random_uniform(4, 3, -1.0, 1.0, 31);
        for v in &mut x.data {
            if v.abs() < 1e-3 {
                *v += 0.01;
            }
        }
        // Weighted sums as scalar losses.
        let w = DenseMatrix::random_uniform(4, 3, -1.0, 1.0, 32);
        let loss_relu = |m: &DenseMatrix| -> f64 {
            relu(m).data.iter().zip(&w.data).map(|(a, b)| a * b).sum()
        };
        let loss_leaky = |m: &DenseMatrix| -> f64 {
            leaky_relu(m, 0.2)
                .data
                .iter()
                .zip(&w.data)
                .map(|(a, b)| a * b)
                .sum()
        };
        let g_relu = relu_grad(&x, &w);
        let g_leaky = leaky_relu_grad(&x, 0.2, &w);
        for r in 0..4 {
            for c in 0..3 {
                let fd = central_diff(&loss_relu, &x, r, c);
                let an = g_relu.get(r, c);
                assert!(
                    (fd - an).abs() <= 1e-6 * (1.0 + fd.abs()),
                    "relu grad mismatch at ({r},{c}): fd={fd}, analytic={an}"
                );
                let fd = central_diff(&loss_leaky, &x, r, c);
                let an = g_leaky.get(r, c);
                assert!(
                    (fd - an).abs() <= 1e-6 * (1.0 + fd.abs()),
                    "leaky relu grad mismatch at ({r},{c}): fd={fd}, analytic={an}"
                );
            }
        }
    }

    #[test]
    fn row_softmax_uniform_and_sums() {
        let m = DenseMatrix::zeros(2, 4);
        let p = row_softmax(&m);
        for &v in &p.data {
            assert!((v - 0.25).abs() < 1e-15);
        }
        let m = DenseMatrix::random_uniform(5, 6, -3.0, 3.0, 41);
        let p = row_softmax(&m);
        for r in 0..5 {
            let s: f64 = p.row(r).iter().sum();
            assert!((s - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn xent_loss_monotone_in_correct_logit() {
        let labels = vec![0];
        let mask = vec![true];
        let at = |logit: f64| {
            let m = DenseMatrix::from_rows(&[&[logit, 0.0, 0.0]]).unwrap();
            softmax_xent_loss(&m, &labels, &mask).unwrap().0
        };
        assert!(at(20.0) < at(10.0));
        assert!(at(20.0) < 1e-8);
    }

    #[test]
    fn xent_grad_matches_finite_differences() {
        let logits = DenseMatrix::random_uniform(5, 4, -2.0, 2.0, 51);
        let labels = vec![0, 3, 1, 2, 1];
        let mask = vec![true, false, true, true, false];
        let (_, grad) = softmax_xent_loss(&logits, &labels, &mask).unwrap();
        let f = |m: &DenseMatrix| softmax_xent_loss(m, &labels, &mask).unwrap().0;
        for r in 0..5 {
            for c in 0..4 {
                let fd = central_diff(&f, &logits, r, c);
                let an = grad.get(r, c);
                assert!(
                    (fd - an).abs() <= 1e-5 * (1.0 + fd.abs()),
                    "xent grad mismatch at ({r},{c}): fd={fd}, analytic={an}"
                );
            }
        }
        // Unmasked rows receive exactly zero gradient.
        for c in 0..4 {
            assert_eq!(grad.get(1, c), 0.0);
            assert_eq!(grad.get(4, c), 0.0);
        }
    }

    #[test]
    fn xent_empty_mask_is_error() {
        let logits = DenseMatrix::zeros(3, 2);
        let err = softmax_xent_loss(&logits, &[0, 1, 0], &[false, false, false]);
        assert!(matches!(err, Err(Error::Contract(_))));
    }

    #[test]
    fn slice_concat_round_trip_bitwise() {
        let m = DenseMatrix::random_uniform(6, 5, -1.0, 1.0, 61);
        let ranges = even_ranges(5, 2);
        assert_eq!(ranges, vec![0..3, 3..5]);
        let slices: Vec<_> = ranges
            .iter()
            .enumerate()
            .map(|(w, r)| col_slice(&m, r.clone(), w).unwrap())
            .collect();
        let back = col_concat(&slices).unwrap();
        assert_eq!(back.data, m.data);
    }

    #[test]
    fn slice_concat_detects_gaps_and_overlaps() {
        let m = DenseMatrix::random_uniform(3, 4, -1.0, 1.0, 62);
        let a = col_slice(&m, 0..2, 0).unwrap();
        let gap = col_slice(&m, 3..4, 1).unwrap();
        assert!(matches!(col_concat(&[a.clone(), gap]), Err(Error::Shape(_))));
        let overlap = col_slice(&m, 1..4, 1).unwrap();
        assert!(matches!(col_concat(&[a, overlap]), Err(Error::Shape(_))));
    }

    #[test]
    fn zero_width_slices_flow_through() {
        // More workers than columns: trailing slices are empty.
        let m = DenseMatrix::random_uniform(4, 2, -1.0, 1.0, 63);
        let ranges = even_ranges(2, 4);
        let slices: Vec<_> = ranges
            .iter()
            .enumerate()
            .map(|(w, r)| col_slice(&m, r.clone(), w).unwrap())
            .collect();
        assert_eq!(slices[2].width(), 0);
        assert_eq!(slices[3].width(), 0);
        let back = col_concat(&slices).unwrap();
        assert_eq!(back.data, m.data);
    }

    #[test]
    fn glorot_is_deterministic_and_bounded() {
        let a = glorot_init(25, 40, 7);
        let b = glorot_init(25, 40, 7);
        assert_eq!(a.data, b.data);
        let c = glorot_init(25, 40, 8);
        assert_ne!(a.data, c.data);
        let bound = (6.0 / 65.0f64).sqrt();
        assert!(a.data.iter().all(|v| v.abs() <= bound));
        assert_eq!(a.data.len(), 1000);
    }
}
