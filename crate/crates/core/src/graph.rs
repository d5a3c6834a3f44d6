//! Directed communication graphs and the matrix operators derived from them.
//!
//! Convention: `weights[(i, j)] = a_ij > 0` means agent `i` receives from
//! agent `j`, i.e. the edge `j → i`. Node numbers in [`DirectedTopology::from_edges`]
//! are 1-based; everything else is 0-based.

use std::collections::VecDeque;

use thiserror::Error;

use crate::linalg::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("graph needs at least one node")]
    Empty,
    #[error("edge ({from}, {to}) references a node outside 1..={n}")]
    NodeOutOfRange { from: usize, to: usize, n: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("edge ({from}, {to}) has non-positive weight")]
    NonPositiveWeight { from: usize, to: usize },
    #[error("adjacency matrix is not square or contains invalid entries")]
    InvalidAdjacency,
    #[error("agent {0} has no in-neighbours; observer gain 1/(d_in + a_im) is undefined")]
    ZeroInDegree(usize),
    #[error("no nonzero eigenvalue")]
    NoNonzeroEigenvalue,
}

/// A single directed edge `from → to` (1-based nodes); `to` receives from `from`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<T> {
    pub from: usize,
    pub to: usize,
    pub weight: Option<T>,
}

impl<T> Edge<T> {
    pub fn new(from: usize, to: usize) -> Self {
        Self {
            from,
            to,
            weight: None,
        }
    }

    pub fn weighted(from: usize, to: usize, weight: T) -> Self {
        Self {
            from,
            to,
            weight: Some(weight),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectedTopology<T> {
    weights: Matrix<T>,
}

impl<T: Scalar> DirectedTopology<T> {
    pub fn from_edges(n: usize, edges: &[Edge<T>]) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut weights = Matrix::zeros(n, n);
        for e in edges {
            if e.from == 0 || e.to == 0 || e.from > n || e.to > n {
                return Err(GraphError::NodeOutOfRange {
                    from: e.from,
                    to: e.to,
                    n,
                });
            }
            if e.from == e.to {
                return Err(GraphError::SelfLoop(e.from));
            }
            let w = e.weight.unwrap_or_else(T::one);
            if !(w > T::zero()) || !w.is_finite() {
                return Err(GraphError::NonPositiveWeight {
                    from: e.from,
                    to: e.to,
                });
            }
            weights[(e.to - 1, e.from - 1)] = w;
        }
        Ok(Self { weights })
    }

    /// Builds a topology directly from `A = [a_ij]`.
    pub fn from_adjacency(weights: Matrix<T>) -> Result<Self, GraphError> {
        if !weights.is_square() {
            return Err(GraphError::InvalidAdjacency);
        }
        let n = weights.rows();
        if n == 0 {
            return Err(GraphError::Empty);
        }
        for i in 0..n {
            if weights[(i, i)] != T::zero() {
                return Err(GraphError::SelfLoop(i + 1));
            }
            for j in 0..n {
                let w = weights[(i, j)];
                if !w.is_finite() || w < T::zero() {
                    return Err(GraphError::InvalidAdjacency);
                }
            }
        }
        Ok(Self { weights })
    }

    pub fn n(&self) -> usize {
        self.weights.rows()
    }

    pub fn adjacency(&self) -> &Matrix<T> {
        &self.weights
    }

    /// Edges as `(from, to, weight)` with 1-based nodes, ordered by `(from, to)`.
    pub fn edges(&self) -> Vec<Edge<T>> {
        let n = self.n();
        let mut out = Vec::new();
        for from in 0..n {
            for to in 0..n {
                let w = self.weights[(to, from)];
                if w > T::zero() {
                    out.push(Edge::weighted(from + 1, to + 1, w));
                }
            }
        }
        out
    }

    /// `d_i^in = Σ_j a_ij`.
    pub fn in_degrees(&self) -> Vec<T> {
        self.weights.row_sums()
    }

    /// `d_i^out = Σ_j a_ji`.
    pub fn out_degrees(&self) -> Vec<T> {
        self.weights.col_sums()
    }

    /// `L = D - A`; rows sum to zero.
    pub fn laplacian_in(&self) -> Matrix<T> {
        let d = self.in_degrees();
        let n = self.n();
        Matrix::from_fn(
            n,
            n,
            |i, j| {
                if i == j {
                    d[i]
                } else {
                    -self.weights[(i, j)]
                }
            },
        )
    }

    /// `L_O = D_O - A`; columns sum to zero.
    pub fn laplacian_out(&self) -> Matrix<T> {
        let d = self.out_degrees();
        let n = self.n();
        Matrix::from_fn(
            n,
            n,
            |i, j| {
                if i == j {
                    d[i]
                } else {
                    -self.weights[(i, j)]
                }
            },
        )
    }

    /// The graph with every edge flipped.
    pub fn reverse(&self) -> Self {
        Self {
            weights: self.weights.transpose(),
        }
    }

    /// True when `a_ij = a_ji` for all pairs, i.e. the graph is undirected.
    pub fn is_symmetric(&self) -> bool {
        self.weights.is_symmetric(T::zero())
    }

    pub fn is_strongly_connected(&self) -> bool {
        let n = self.n();
        // Every node must be reachable from node 0 along edges and along reversed edges.
        let reach = |forward: bool| {
            let mut seen = vec![false; n];
            let mut queue = VecDeque::from([0usize]);
            seen[0] = true;
            while let Some(u) = queue.pop_front() {
                for v in 0..n {
                    // u → v exists iff a_vu > 0
                    let w = if forward {
                        self.weights[(v, u)]
                    } else {
                        self.weights[(u, v)]
                    };
                    if w > T::zero() && !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        reach(true) && reach(false)
    }

    /// Assembles `Γ`, `A_d`, `L̂₀` and `M = I - Γ(L ⊗ I_n + A_d)`.
    ///
    /// Lifted coordinates are ordered row-major: agent `i`'s estimate of
    /// agent `m`'s derivative sits at index `i * n + m`.
    pub fn lifted_operators(&self) -> Result<LiftedOperators<T>, GraphError> {
        let n = self.n();
        let d_in = self.in_degrees();
        let mut gamma = Vec::with_capacity(n * n);
        let mut a_d = Vec::with_capacity(n * n);
        for i in 0..n {
            for m in 0..n {
                let a_im = self.weights[(i, m)];
                let denom = d_in[i] + a_im;
                if !(denom > T::zero()) {
                    return Err(GraphError::ZeroInDegree(i + 1));
                }
                gamma.push(T::one() / denom);
                a_d.push(a_im);
            }
        }
        let laplacian_in = self.laplacian_in();
        let laplacian_out = self.laplacian_out();
        let lo_t = laplacian_out.transpose();
        let mut l_hat0 = Matrix::zeros(n, n * n);
        for i in 0..n {
            for m in 0..n {
                l_hat0[(i, i * n + m)] = lo_t[(i, m)];
            }
        }
        let mut coupling = laplacian_in.kron(&Matrix::identity(n));
        for (k, &a) in a_d.iter().enumerate() {
            coupling[(k, k)] += a;
        }
        let observer_gain = Matrix::from_fn(n * n, n * n, |r, c| gamma[r] * coupling[(r, c)]);
        let m = &Matrix::identity(n * n) - &observer_gain;
        Ok(LiftedOperators {
            n,
            gamma,
            a_d,
            l_hat0,
            observer_gain,
            m,
            laplacian_in,
            laplacian_out,
        })
    }
}

/// Operators of the stacked observer iteration.
///
/// `gamma` and `a_d` hold the diagonals of `Γ` and `A_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedOperators<T> {
    pub n: usize,
    pub gamma: Vec<T>,
    pub a_d: Vec<T>,
    /// `L̂₀ = diag{(L_Oᵀ)_1, …, (L_Oᵀ)_n}`, an `n × n²` block-diagonal matrix.
    pub l_hat0: Matrix<T>,
    /// `Γ(L ⊗ I_n + A_d)`.
    pub observer_gain: Matrix<T>,
    /// `M = I - Γ(L ⊗ I_n + A_d)`.
    pub m: Matrix<T>,
    pub laplacian_in: Matrix<T>,
    pub laplacian_out: Matrix<T>,
}

impl<T: Scalar> LiftedOperators<T> {
    pub fn gamma_matrix(&self) -> Matrix<T> {
        Matrix::from_diagonal(&self.gamma)
    }

    pub fn a_d_matrix(&self) -> Matrix<T> {
        Matrix::from_diagonal(&self.a_d)
    }
}

/// Smallest eigenvalue of a symmetric PSD matrix that is not numerically zero.
///
/// An eigenvalue counts as zero when `|λ| ≤ 1e-9 · max(1, ‖s‖)`.
pub fn lambda2_min_nonzero<T: Scalar>(s: &Matrix<T>) -> Result<T, GraphError> {
    let ev = s.symmetric_eigenvalues();
    let scale = ev
        .iter()
        .fold(T::zero(), |m, v| m.max(v.abs()))
        .max(T::one());
    let cutoff = T::resolvable(1e-9) * scale;
    ev.into_iter()
        .find(|v| *v > cutoff)
        .ok_or(GraphError::NoNonzeroEigenvalue)
}

/// Largest singular value.
pub fn spectral_norm<T: Scalar>(a: &Matrix<T>) -> T {
    a.spectral_norm()
}
