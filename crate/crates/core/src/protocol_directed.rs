//! Observer-based sampled-data protocol for strongly connected digraphs.
//!
//! Between instants the agents hold their samples, so one sampling interval
//! maps `(ξ, ψ)` exactly to
//!
//! ```text
//! ξ⁺ = ξ + β L̂₀ ψ
//! ψ⁺ = ψ - Γ(L ⊗ I + A_d)(ψ - 1 ⊗ ∇f(x)),      x = x(0) - L_O ξ
//! ```
//!
//! independently of the interval length. The interval length only enters
//! through when each step happens, which is what pins the settling time.

use thiserror::Error;

use crate::graph::{lambda2_min_nonzero, DirectedTopology, GraphError, LiftedOperators};
use crate::linalg::{self, LinalgError, Matrix};
use crate::objective::ObjectiveSpec;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("observer matrix is not Schur (spectral radius {0} >= 1)")]
    NotSchur(f64),
    #[error("topology is not symmetric; the reduced-order protocol needs an undirected graph")]
    NotSymmetric,
    #[error("rate factor {0} lies outside (0, 1); constants are inconsistent")]
    RateOutOfRange(f64),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `(x(0), ξ, ψ, k)`; the agent states are recovered as `x(0) - L_O ξ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedProtocolState<T> {
    pub x0: Vec<T>,
    pub xi: Vec<T>,
    /// Stacked observers, `psi[i * n + m]` = agent `i`'s estimate of `f_m'(x_m)`.
    pub psi: Vec<T>,
    pub k: usize,
}

impl<T: Scalar> DirectedProtocolState<T> {
    pub fn new(x0: Vec<T>) -> Self {
        let n = x0.len();
        Self {
            x0,
            xi: vec![T::zero(); n],
            psi: vec![T::zero(); n * n],
            k: 0,
        }
    }

    pub fn x(&self, ops: &LiftedOperators<T>) -> Vec<T> {
        let lx = ops.laplacian_out.mul_vec(&self.xi);
        self.x0.iter().zip(lx).map(|(&a, b)| a - b).collect()
    }

    /// One sampling interval of the protocol. Both updates read step-`k` values only.
    pub fn step(&self, spec: &ObjectiveSpec<T>, ops: &LiftedOperators<T>, beta: T) -> Self {
        let n = ops.n;
        let x = self.x(ops);
        let g = spec.gradient(&x);
        let drive = ops.l_hat0.mul_vec(&self.psi);
        let xi = self
            .xi
            .iter()
            .zip(drive)
            .map(|(&v, d)| v + beta * d)
            .collect();
        let err: Vec<T> = self
            .psi
            .iter()
            .enumerate()
            .map(|(idx, &p)| p - g[idx % n])
            .collect();
        let correction = ops.observer_gain.mul_vec(&err);
        let psi = self
            .psi
            .iter()
            .zip(correction)
            .map(|(&p, c)| p - c)
            .collect();
        Self {
            x0: self.x0.clone(),
            xi,
            psi,
            k: self.k + 1,
        }
    }

    pub fn observer_error(
        &self,
        spec: &ObjectiveSpec<T>,
        ops: &LiftedOperators<T>,
    ) -> ObserverError<T> {
        let g = spec.gradient(&self.x(ops));
        let n = ops.n;
        ObserverError {
            e_psi: self
                .psi
                .iter()
                .enumerate()
                .map(|(idx, &p)| p - g[idx % n])
                .collect(),
        }
    }
}

/// `e_ψ = ψ - 1_n ⊗ ∇f(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverError<T> {
    pub e_psi: Vec<T>,
}

impl<T: Scalar> ObserverError<T> {
    pub fn norm(&self) -> T {
        linalg::norm2(&self.e_psi)
    }

    pub fn max_abs(&self) -> T {
        linalg::max_abs(&self.e_psi)
    }
}

/// Solution `W` of `Mᵀ W M - W = -I` as the series `Σ_j (Mᵀ)^j M^j`.
///
/// The series is summed by doubling (`S ← S + AᵀSA`, `A ← A²`), stopping once
/// the newly added block of terms is below `1e-14 · ‖S‖` (max-norm).
pub fn lyapunov_weight<T: Scalar>(m: &Matrix<T>) -> Result<Matrix<T>, ProtocolError> {
    check_schur(m)?;
    let n = m.rows();
    let tol = T::resolvable(1e-14);
    let mut sum = Matrix::identity(n);
    let mut power = m.clone();
    for _ in 0..64 {
        let block = &(&power.transpose() * &sum) * &power;
        sum = &sum + &block;
        if block.max_abs() <= tol * sum.max_abs() {
            return Ok(symmetrize(&sum));
        }
        power = &power * &power;
    }
    Err(ProtocolError::Linalg(LinalgError::NoConvergence))
}

/// Same solution by the vectorized linear system `(I - Mᵀ ⊗ Mᵀ) vec(W) = vec(I)`.
///
/// Dense `n⁴` system; intended as an independent cross-check on small graphs.
pub fn lyapunov_weight_vectorized<T: Scalar>(m: &Matrix<T>) -> Result<Matrix<T>, ProtocolError> {
    check_schur(m)?;
    let n = m.rows();
    let mt = m.transpose();
    let system = &Matrix::identity(n * n) - &mt.kron(&mt);
    let rhs: Vec<T> = Matrix::<T>::identity(n).as_slice().to_vec();
    let w = system.solve(&rhs)?;
    Ok(Matrix::from_fn(n, n, |r, c| w[r * n + c]))
}

fn check_schur<T: Scalar>(m: &Matrix<T>) -> Result<(), ProtocolError> {
    let rho = m.spectral_radius()?;
    if rho >= T::one() || !rho.is_finite() {
        return Err(ProtocolError::NotSchur(rho.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(())
}

fn symmetrize<T: Scalar>(a: &Matrix<T>) -> Matrix<T> {
    let half = T::lit(0.5);
    Matrix::from_fn(a.rows(), a.cols(), |r, c| (a[(r, c)] + a[(c, r)]) * half)
}

/// Max-norm residual `‖MᵀWM - W + I‖_max`.
pub fn lyapunov_residual<T: Scalar>(m: &Matrix<T>, w: &Matrix<T>) -> T {
    let mtwm = &(&m.transpose() * w) * m;
    (&(&mtwm - w) + &Matrix::identity(m.rows())).max_abs()
}

/// The three candidates of the step-size bound and their minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaBound<T> {
    /// `1 / (2‖L̂₀‖²(1 + 4l²b‖L_O‖² + 2l‖L_O‖²))`.
    pub observer_term: T,
    /// `1 / (4(2l²b‖L_O‖² + l‖L_O‖²))`.
    pub descent_term: T,
    /// `b = (2‖MᵀW‖² + ‖W‖) n`.
    pub b: T,
    pub value: T,
}

pub fn beta_max<T: Scalar>(ops: &LiftedOperators<T>, l: T, w: &Matrix<T>) -> BetaBound<T> {
    let n = T::from_count(ops.n);
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let mtw = (&ops.m.transpose() * w).spectral_norm();
    let b = (two * mtw * mtw + w.spectral_norm()) * n;
    let lo = ops.laplacian_out.spectral_norm();
    let lo2 = lo * lo;
    let lh = ops.l_hat0.spectral_norm();
    let observer_term =
        T::one() / (two * lh * lh * (T::one() + four * l * l * b * lo2 + two * l * lo2));
    let descent_term = T::one() / (four * (two * l * l * b * lo2 + l * lo2));
    let value = observer_term.min(descent_term).min(T::one());
    BetaBound {
        observer_term,
        descent_term,
        b,
        value,
    }
}

/// `V = e_ψᵀ W e_ψ + f(x) - f*`.
pub fn lyapunov_value<T: Scalar>(
    state: &DirectedProtocolState<T>,
    spec: &ObjectiveSpec<T>,
    ops: &LiftedOperators<T>,
    w: &Matrix<T>,
    f_star: T,
) -> T {
    let e = state.observer_error(spec, ops).e_psi;
    let we = w.mul_vec(&e);
    linalg::dot(&e, &we) + spec.value(&state.x(ops)) - f_star
}

/// `ε = min{1/(4‖W‖), β l0 λ₂(L_Oᵀ L_O) / 8}`.
pub fn contraction_rate<T: Scalar>(
    beta: T,
    w: &Matrix<T>,
    l0: T,
    topology: &DirectedTopology<T>,
) -> Result<T, ProtocolError> {
    let lo = topology.laplacian_out();
    let lambda2 = lambda2_min_nonzero(&(&lo.transpose() * &lo))?;
    Ok(rate_from_parts(beta, w.spectral_norm(), l0, lambda2))
}

fn rate_from_parts<T: Scalar>(beta: T, w_norm: T, l0: T, lambda2: T) -> T {
    (T::one() / (T::lit(4.0) * w_norm)).min(beta * l0 * lambda2 / T::lit(8.0))
}

/// Guaranteed bound `(1 - ε)^k_eps · V(0)` on the cost gap after `k_eps` steps.
pub fn accuracy_bound<T: Scalar>(v0: T, epsilon: T, k_eps: usize) -> T {
    let factor = (T::one() - epsilon).max(T::zero());
    if k_eps == 0 {
        return v0;
    }
    factor.powi(i32::try_from(k_eps).unwrap_or(i32::MAX)) * v0
}

/// All analytical quantities attached to a directed run.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedCertificate<T> {
    pub beta_max: T,
    pub beta: T,
    pub w: Matrix<T>,
    pub b_const: T,
    pub epsilon: T,
    pub lambda2: T,
}

impl<T: Scalar> DirectedCertificate<T> {
    pub fn compute(
        topology: &DirectedTopology<T>,
        ops: &LiftedOperators<T>,
        l0: T,
        l: T,
        beta: Option<T>,
    ) -> Result<Self, ProtocolError> {
        let w = lyapunov_weight(&ops.m)?;
        let bound = beta_max(ops, l, &w);
        let beta = beta.unwrap_or(bound.value);
        let lo = topology.laplacian_out();
        let lambda2 = lambda2_min_nonzero(&(&lo.transpose() * &lo))?;
        let epsilon = rate_from_parts(beta, w.spectral_norm(), l0, lambda2);
        Ok(Self {
            beta_max: bound.value,
            beta,
            b_const: bound.b,
            epsilon,
            lambda2,
            w,
        })
    }

    pub fn accuracy_bound(&self, v0: T, k_eps: usize) -> T {
        accuracy_bound(v0, self.epsilon, k_eps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;
    use crate::objective::{dispatch3_costs, Quadratic};

    fn topo(n: usize, edges: &[(usize, usize)]) -> DirectedTopology<f64> {
        let e: Vec<_> = edges.iter().map(|&(f, t)| Edge::new(f, t)).collect();
        DirectedTopology::from_edges(n, &e).unwrap()
    }

    fn dispatch_topology() -> DirectedTopology<f64> {
        topo(3, &[(1, 2), (2, 1), (2, 3), (3, 2), (3, 1)])
    }

    #[test]
    fn weight_of_zero_and_scaled_identity() {
        let w = lyapunov_weight(&Matrix::<f64>::zeros(3, 3)).unwrap();
        assert_eq!(w, Matrix::identity(3));
        let half = Matrix::<f64>::identity(2).scale(0.5);
        let w = lyapunov_weight(&half).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                let want = if r == c { 4.0 / 3.0 } else { 0.0 };
                assert!((w[(r, c)] - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn series_and_vectorized_solvers_agree() {
        let ops = topo(2, &[(1, 2), (2, 1)]).lifted_operators().unwrap();
        let w = lyapunov_weight(&ops.m).unwrap();
        let wv = lyapunov_weight_vectorized(&ops.m).unwrap();
        assert!(lyapunov_residual(&ops.m, &w) <= 1e-10);
        assert!((&w - &wv).max_abs() <= 1e-10);
        assert!(w.symmetric_eigenvalues()[0] > 0.0);
    }

    #[test]
    fn non_schur_rejected() {
        let m = Matrix::<f64>::identity(2).scale(1.5);
        assert!(matches!(
            lyapunov_weight(&m),
            Err(ProtocolError::NotSchur(_))
        ));
        assert!(matches!(
            lyapunov_weight_vectorized(&m),
            Err(ProtocolError::NotSchur(_))
        ));
    }

    #[test]
    fn beta_max_terms_and_limits() {
        let t = dispatch_topology();
        let ops = t.lifted_operators().unwrap();
        let w = lyapunov_weight(&ops.m).unwrap();
        let bound = beta_max(&ops, 0.21, &w);
        // Regression values, cross-checked with an independent numpy evaluation.
        assert!(
            (bound.b - 77.60956348243923).abs() < 1e-8,
            "b = {}",
            bound.b
        );
        assert!(
            (bound.value - 6.07807976000232e-4).abs() < 1e-12,
            "{}",
            bound.value
        );
        assert!((bound.descent_term - 3.673642284982803e-3).abs() < 1e-11);
        let at_042 = beta_max(&ops, 0.42, &w);
        assert!((at_042.value - 1.5509173918026078e-4).abs() < 1e-12);

        let lh = ops.l_hat0.spectral_norm();
        let tiny = beta_max(&ops, 1e-12, &w);
        assert!((tiny.value - (1.0 / (2.0 * lh * lh)).min(1.0)).abs() < 1e-9);

        let mut prev = f64::INFINITY;
        for l in [0.01, 0.1, 0.21, 1.0, 10.0] {
            let v = beta_max(&ops, l, &w).value;
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn first_step_from_rest() {
        let t = dispatch_topology();
        let ops = t.lifted_operators().unwrap();
        let spec = ObjectiveSpec::quadratic(dispatch3_costs()).unwrap();
        let s0 = DirectedProtocolState::new(vec![140.0; 3]);
        let s1 = s0.step(&spec, &ops, 0.1);
        assert_eq!(s1.xi, vec![0.0; 3]);
        let g = spec.gradient(&s0.x0);
        let want = ops.observer_gain.mul_vec(&linalg::repeat(3, &g));
        for (a, b) in s1.psi.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
        let s2 = s1.step(&spec, &ops, 0.1);
        let total: f64 = s2.x(&ops).iter().sum();
        assert!((total - 420.0).abs() <= 1e-9 * 420.0);
        assert_eq!(s2.k, 2);
    }

    #[test]
    fn kkt_point_is_stationary() {
        let t = dispatch_topology();
        let ops = t.lifted_operators().unwrap();
        let spec = ObjectiveSpec::quadratic(dispatch3_costs()).unwrap();
        let opt = spec.kkt_oracle(420.0).unwrap();
        // pick ξ with x0 - L_O ξ = x*: solve on the first n-1 rows with ξ_n = 0
        let x0 = vec![140.0; 3];
        let lo = ops.laplacian_out.clone();
        let rhs: Vec<f64> = x0.iter().zip(&opt.x_star).map(|(a, b)| a - b).collect();
        let reduced = Matrix::from_fn(2, 2, |r, c| lo[(r, c)]);
        let sol = reduced.solve(&rhs[..2]).unwrap();
        let state = DirectedProtocolState {
            x0,
            xi: vec![sol[0], sol[1], 0.0],
            psi: linalg::repeat(3, &spec.gradient(&opt.x_star)),
            k: 0,
        };
        let next = state.step(&spec, &ops, 0.1);
        for (a, b) in state.xi.iter().zip(&next.xi) {
            assert!((a - b).abs() <= 1e-12);
        }
        for (a, b) in state.psi.iter().zip(&next.psi) {
            assert!((a - b).abs() <= 1e-12);
        }
        let w = lyapunov_weight(&ops.m).unwrap();
        assert!(lyapunov_value(&state, &spec, &ops, &w, opt.f_star).abs() < 1e-9);
    }

    #[test]
    fn initial_lyapunov_value() {
        let t = dispatch_topology();
        let ops = t.lifted_operators().unwrap();
        let spec = ObjectiveSpec::quadratic(dispatch3_costs()).unwrap();
        let opt = spec.kkt_oracle(420.0).unwrap();
        let w = lyapunov_weight(&ops.m).unwrap();
        let s0 = DirectedProtocolState::new(vec![140.0; 3]);
        let g0 = linalg::repeat(3, &[28.1, 23.57, 31.93]);
        let want = linalg::dot(&g0, &w.mul_vec(&g0)) + spec.value(&s0.x0) - opt.f_star;
        let got = lyapunov_value(&s0, &spec, &ops, &w, opt.f_star);
        assert!((got - want).abs() < 1e-9 * want);
        // regression against the numpy prototype
        assert!((got - 19884.0072471175).abs() < 1e-6, "V0 = {got}");
    }

    #[test]
    fn contraction_rate_cases() {
        // ‖W‖ = 1 with β l0 λ₂ / 8 = 10 picks 1/4
        let t = topo(2, &[(1, 2), (2, 1)]);
        let eps = contraction_rate(20.0, &Matrix::identity(4), 2.0, &t).unwrap();
        assert_eq!(eps, 0.25);
        let small = contraction_rate(1e-3, &Matrix::identity(4), 1.0, &t).unwrap();
        assert!(small > 0.0 && small < 1.0);
    }

    #[test]
    fn accuracy_bound_cases() {
        assert_eq!(accuracy_bound(7.0, 0.3, 0), 7.0);
        assert_eq!(accuracy_bound(7.0, 1.0, 3), 0.0);
        assert!((accuracy_bound(8.0_f64, 0.5, 3) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identical_agents_stay_put() {
        let t = topo(3, &[(1, 2), (2, 3), (3, 1)]);
        let ops = t.lifted_operators().unwrap();
        let spec = ObjectiveSpec::quadratic(vec![Quadratic::new(1.0, 0.5, 0.0); 3]).unwrap();
        let mut s = DirectedProtocolState::new(vec![2.0; 3]);
        for _ in 0..50 {
            s = s.step(&spec, &ops, 0.05);
        }
        for v in s.x(&ops) {
            assert!((v - 2.0).abs() < 1e-12);
        }
    }
}
