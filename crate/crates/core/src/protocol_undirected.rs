//! Reduced-order protocol for undirected connected graphs.
//!
//! No observers are needed because every out-neighbour is also an
//! in-neighbour: `ξ⁺ = ξ + β L ∇f(x)` with `x = x(0) - L ξ`.

use crate::graph::{lambda2_min_nonzero, DirectedTopology};
use crate::linalg::Matrix;
use crate::objective::ObjectiveSpec;
use crate::protocol_directed::ProtocolError;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct UndirectedProtocolState<T> {
    pub x0: Vec<T>,
    pub xi: Vec<T>,
    pub k: usize,
}

impl<T: Scalar> UndirectedProtocolState<T> {
    pub fn new(x0: Vec<T>) -> Self {
        let n = x0.len();
        Self {
            x0,
            xi: vec![T::zero(); n],
            k: 0,
        }
    }

    pub fn x(&self, laplacian: &Matrix<T>) -> Vec<T> {
        let lx = laplacian.mul_vec(&self.xi);
        self.x0.iter().zip(lx).map(|(&a, b)| a - b).collect()
    }

    pub fn step(&self, spec: &ObjectiveSpec<T>, laplacian: &Matrix<T>, beta: T) -> Self {
        let g = spec.gradient(&self.x(laplacian));
        let drive = laplacian.mul_vec(&g);
        Self {
            x0: self.x0.clone(),
            xi: self
                .xi
                .iter()
                .zip(drive)
                .map(|(&v, d)| v + beta * d)
                .collect(),
            k: self.k + 1,
        }
    }
}

/// `1 / (l ‖L‖²)`.
pub fn beta_max_undirected<T: Scalar>(
    l: T,
    topology: &DirectedTopology<T>,
) -> Result<T, ProtocolError> {
    if !topology.is_symmetric() {
        return Err(ProtocolError::NotSymmetric);
    }
    let norm = topology.laplacian_in().spectral_norm();
    Ok(T::one() / (l * norm * norm))
}

/// Per-step decay factor `1 - β l0 λ₂(L)² / 4` of the cost gap.
///
/// `λ₂(L)²` and `λ₂(L²)` coincide for symmetric `L`; the former is computed.
pub fn rate_bound_undirected<T: Scalar>(
    beta: T,
    l0: T,
    laplacian: &Matrix<T>,
) -> Result<T, ProtocolError> {
    let lambda2 = lambda2_min_nonzero(laplacian)?;
    let factor = T::one() - beta * l0 * lambda2 * lambda2 / T::lit(4.0);
    if factor > T::zero() && factor < T::one() {
        Ok(factor)
    } else {
        Err(ProtocolError::RateOutOfRange(
            factor.to_f64().unwrap_or(f64::NAN),
        ))
    }
}
