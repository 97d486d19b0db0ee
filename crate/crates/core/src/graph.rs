//! Scored dependency graphs and ground truth adjacency.

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Directed edge `src -> dst` with a non-negative ranking score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Edge<T> {
    pub src: usize,
    pub dst: usize,
    pub score: T,
    /// Signed weight per lag (index 0 is lag 1) when the method has one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lag_weights: Option<Vec<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DependencyGraph<T> {
    n_nodes: usize,
    edges: Vec<Edge<T>>,
    pub includes_self_loops: bool,
}

impl<T: Scalar> DependencyGraph<T> {
    pub fn new(n_nodes: usize, includes_self_loops: bool) -> Self {
        Self {
            n_nodes,
            edges: Vec::new(),
            includes_self_loops,
        }
    }

    /// Adds or replaces the edge for `(src, dst)`. Zero scores are not stored.
    pub fn insert(&mut self, edge: Edge<T>) -> Result<()> {
        if edge.src >= self.n_nodes || edge.dst >= self.n_nodes {
            return Err(Error::Dimension(format!(
                "edge {}->{} outside {} nodes",
                edge.src, edge.dst, self.n_nodes
            )));
        }
        if !edge.score.is_finite() || edge.score < T::zero() {
            return Err(Error::Domain(format!("edge score must be finite and >= 0, got {}", edge.score)));
        }
        if edge.src == edge.dst && !self.includes_self_loops {
            return Ok(());
        }
        self.edges.retain(|e| !(e.src == edge.src && e.dst == edge.dst));
        if edge.score > T::zero() {
            self.edges.push(edge);
            self.edges.sort_by_key(|e| (e.src, e.dst));
        }
        Ok(())
    }

    /// Builds a graph from a dense `score[src][dst]` matrix.
    pub fn from_scores(scores: &Array2<T>, includes_self_loops: bool) -> Result<Self> {
        let n = scores.nrows();
        if scores.ncols() != n {
            return Err(Error::Dimension("score matrix must be square".into()));
        }
        let mut g = Self::new(n, includes_self_loops);
        for ((src, dst), &score) in scores.indexed_iter() {
            g.insert(Edge {
                src,
                dst,
                score,
                lag_weights: None,
            })?;
        }
        Ok(g)
    }

    /// Graph of a lagged linear system with `coef[[dst, src, lag - 1]]`.
    ///
    /// Each nonzero source/target pair becomes an edge scored by its largest
    /// absolute coefficient, self loops included.
    pub fn from_lag_coefficients(coef: &Array3<T>) -> Self {
        let (p, _, lag) = coef.dim();
        let mut g = Self::new(p, true);
        for dst in 0..p {
            for src in 0..p {
                let weights: Vec<T> = (0..lag).map(|l| coef[[dst, src, l]]).collect();
                let score = weights.iter().fold(T::zero(), |m, w| m.max(w.abs()));
                if score > T::zero() {
                    g.edges.push(Edge {
                        src,
                        dst,
                        score,
                        lag_weights: Some(weights),
                    });
                }
            }
        }
        g.edges.sort_by_key(|e| (e.src, e.dst));
        g
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    /// Score for `src -> dst`; absent edges score zero.
    pub fn score(&self, src: usize, dst: usize) -> T {
        self.edges
            .iter()
            .find(|e| e.src == src && e.dst == dst)
            .map_or(T::zero(), |e| e.score)
    }

    pub fn score_matrix(&self) -> Array2<T> {
        let mut m = Array2::zeros((self.n_nodes, self.n_nodes));
        for e in &self.edges {
            m[[e.src, e.dst]] = e.score;
        }
        m
    }
}

/// True dependency structure: `adjacency[[src, dst]]` is set when `dst` depends on `src`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthGraph {
    pub adjacency: Array2<bool>,
}

impl GroundTruthGraph {
    pub fn n_nodes(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn has_edge(&self, src: usize, dst: usize) -> bool {
        self.adjacency[[src, dst]]
    }

    pub fn n_edges(&self, self_loops: bool) -> usize {
        self.adjacency
            .indexed_iter()
            .filter(|((s, d), &a)| a && (self_loops || s != d))
            .count()
    }
}
