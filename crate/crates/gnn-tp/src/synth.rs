//! Deterministic synthetic graph generators: a two-community graph with
//! cluster labels for convergence tests, and a heavy-tailed power-law graph
//! for load-balance experiments.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dense::DenseMatrix;
use crate::graph::Graph;
use crate::{Error, Result};

/// Which synthetic dataset to generate, with its parameters.
#[derive(Debug, Clone)]
pub enum SyntheticKind {
    /// Two dense communities with sparse cross edges. Edges are symmetric,
    /// labels are cluster ids (2 classes), and features are a noisy one-hot
    /// of the cluster.
    TwoCluster {
        size_a: usize,
        size_b: usize,
        p_in: f64,
        p_out: f64,
        feature_dim: usize,
        noise_std: f64,
    },
    /// Heavy-tailed in-degree distribution: the rank-r vertex targets
    /// in-degree `max(1, round(d_max * (r+1)^(-1/(exponent-1))))`, so low
    /// vertex ids are hubs. Sources are sampled uniformly. With `symmetric`
    /// every edge also gets its reverse, which the symmetric normalization
    /// mode requires.
    PowerLaw {
        num_vertices: usize,
        exponent: f64,
        /// Target in-degree of the largest hub; defaults to
        /// `round(V^(1/(exponent-1)))`, clamped to `V-1`.
        max_degree: Option<usize>,
        symmetric: bool,
        feature_dim: usize,
        classes: usize,
    },
}

/// A standard normal sample via Box-Muller (keeps the dependency set small
/// and the stream reproducible).
fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Generates a synthetic `(graph, features, labels)` triple, deterministic
/// for a fixed kind and seed.
pub fn generate_synthetic(
    kind: &SyntheticKind,
    seed: u64,
) -> Result<(Graph, DenseMatrix, Vec<usize>)> {
    match kind {
        SyntheticKind::TwoCluster {
            size_a,
            size_b,
            p_in,
            p_out,
            feature_dim,
            noise_std,
        } => {
            if *size_a == 0 || *size_b == 0 {
                return Err(Error::Config("cluster sizes must be at least 1".into()));
            }
            if !(0.0..=1.0).contains(p_in) || !(0.0..=1.0).contains(p_out) {
                return Err(Error::Config("edge probabilities must lie in [0, 1]".into()));
            }
            if *feature_dim == 0 {
                return Err(Error::Config("feature_dim must be at least 1".into()));
            }
            if *noise_std < 0.0 {
                return Err(Error::Config("noise_std must be non-negative".into()));
            }
            let v_count = size_a + size_b;
            let cluster = |v: usize| usize::from(v >= *size_a);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut edges = Vec::new();
            for u in 0..v_count {
                for v in (u + 1)..v_count {
                    let p = if cluster(u) == cluster(v) { *p_in } else { *p_out };
                    if rng.gen::<f64>() < p {
                        edges.push((u, v));
                        edges.push((v, u));
                    }
                }
            }
            let graph = Graph::from_edges(v_count, &edges)?;
            let mut features = DenseMatrix::zeros(v_count, *feature_dim);
            for v in 0..v_count {
                let hot = cluster(v) % *feature_dim;
                features.set(v, hot, 1.0);
                for d in 0..*feature_dim {
                    let n = standard_normal(&mut rng);
                    features.set(v, d, features.get(v, d) + noise_std * n);
                }
            }
            let labels = (0..v_count).map(cluster).collect();
            Ok((graph, features, labels))
        }
        SyntheticKind::PowerLaw {
            num_vertices,
            exponent,
            max_degree,
            symmetric,
            feature_dim,
            classes,
        } => {
            if *num_vertices < 2 {
                return Err(Error::Config("power-law graph needs at least 2 vertices".into()));
            }
            if *exponent <= 1.0 {
                return Err(Error::Config("power-law exponent must exceed 1".into()));
            }
            if *feature_dim == 0 || *classes == 0 {
                return Err(Error::Config("feature_dim and classes must be at least 1".into()));
            }
            let v_count = *num_vertices;
            let slope = 1.0 / (exponent - 1.0);
            let d_max = max_degree
                .unwrap_or_else(|| (v_count as f64).powf(slope).round() as usize)
                .clamp(1, v_count - 1);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut edges = Vec::new();
            let mut picked = vec![false; v_count];
            for v in 0..v_count {
                let want = ((d_max as f64) * ((v + 1) as f64).powf(-slope)).round() as usize;
                let want = want.clamp(1, v_count - 1);
                let mut chosen = Vec::with_capacity(want);
                while chosen.len() < want {
                    let u = rng.gen_range(0..v_count);
                    if u != v && !picked[u] {
                        picked[u] = true;
                        chosen.push(u);
                    }
                }
                for &u in &chosen {
                    picked[u] = false;
                    edges.push((u, v));
                    if *symmetric {
                        edges.push((v, u));
                    }
                }
            }
            let graph = Graph::from_edges(v_count, &edges)?;
            let mut features = DenseMatrix::zeros(v_count, *feature_dim);
            for i in 0..features.data.len() {
                features.data[i] = standard_normal(&mut rng);
            }
            let labels = (0..v_count).map(|_| rng.gen_range(0..*classes)).collect();
            Ok((graph, features, labels))
        }
    }
}
