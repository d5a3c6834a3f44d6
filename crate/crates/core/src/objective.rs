//! Local cost functions, their curvature constants and the constrained optimum.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::scalar::{CompensatedSum, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error("objective needs at least one agent")]
    Empty,
    #[error("agent {agent}: quadratic coefficient a = {a} is not positive (cost must be strongly convex)")]
    NotStronglyConvex { agent: usize, a: f64 },
    #[error("invalid curvature bounds l0 = {l0}, l = {l} (need 0 < l0 <= l)")]
    InvalidBounds { l0: f64, l: f64 },
    #[error("agent {agent}: sampled f'' = {value} at x = {x} is below l0 = {l0}")]
    NonConvex {
        agent: usize,
        x: f64,
        value: f64,
        l0: f64,
    },
    #[error("agent {agent}: sampled f'' = {value} at x = {x} exceeds l = {l}")]
    CurvatureAboveBound {
        agent: usize,
        x: f64,
        value: f64,
        l: f64,
    },
    #[error("agent {agent}: invalid working domain [{lo}, {hi}]")]
    InvalidDomain { agent: usize, lo: f64, hi: f64 },
    #[error("length mismatch: expected {expected} values, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("could not bracket the optimal marginal cost within the working domain")]
    BracketNotFound,
    #[error(
        "total derivative inverse is not monotone in the marginal cost (strong convexity violated)"
    )]
    NonMonotone,
    #[error("agent {agent}: optimum lies on the boundary of the working domain")]
    OptimumOutsideDomain { agent: usize },
}

/// `f(x) = a x² + b x + c` with `a > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadratic<T> {
    pub a: T,
    pub b: T,
    pub c: T,
}

impl<T: Scalar> Quadratic<T> {
    pub fn new(a: T, b: T, c: T) -> Self {
        Self { a, b, c }
    }

    #[inline]
    pub fn value(&self, x: T) -> T {
        (self.a * x + self.b) * x + self.c
    }

    #[inline]
    pub fn derivative(&self, x: T) -> T {
        T::lit(2.0) * self.a * x + self.b
    }

    #[inline]
    pub fn curvature(&self) -> T {
        T::lit(2.0) * self.a
    }

    /// The same cost wrapped as a closure-backed [`GenericCost`].
    pub fn to_generic(self, domain: (T, T)) -> GenericCost<T> {
        GenericCost::new(
            move |x| self.value(x),
            move |x| self.derivative(x),
            move |_| self.curvature(),
            domain,
        )
    }
}

type ScalarFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// A cost given by closures for `f`, `f'` and `f''`, valid on `domain`.
#[derive(Clone)]
pub struct GenericCost<T> {
    value: ScalarFn<T>,
    derivative: ScalarFn<T>,
    second_derivative: ScalarFn<T>,
    pub domain: (T, T),
}

impl<T: Scalar> GenericCost<T> {
    pub fn new(
        value: impl Fn(T) -> T + Send + Sync + 'static,
        derivative: impl Fn(T) -> T + Send + Sync + 'static,
        second_derivative: impl Fn(T) -> T + Send + Sync + 'static,
        domain: (T, T),
    ) -> Self {
        Self {
            value: Arc::new(value),
            derivative: Arc::new(derivative),
            second_derivative: Arc::new(second_derivative),
            domain,
        }
    }

    pub fn value(&self, x: T) -> T {
        (self.value)(x)
    }

    pub fn derivative(&self, x: T) -> T {
        (self.derivative)(x)
    }

    pub fn second_derivative(&self, x: T) -> T {
        (self.second_derivative)(x)
    }

    /// `(f')⁻¹(ν)` by bisection, saturated at the domain ends.
    fn inverse_derivative(&self, nu: T) -> T {
        let (mut lo, mut hi) = self.domain;
        if self.derivative(lo) >= nu {
            return lo;
        }
        if self.derivative(hi) <= nu {
            return hi;
        }
        let half = T::lit(0.5);
        for _ in 0..2000 {
            let mid = lo + (hi - lo) * half;
            if mid <= lo || mid >= hi {
                break;
            }
            if self.derivative(mid) < nu {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (dl, dh) = (nu - self.derivative(lo), self.derivative(hi) - nu);
        if dl <= dh {
            lo
        } else {
            hi
        }
    }
}

impl<T> fmt::Debug for GenericCost<T>
where
    T: fmt::Debug,
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GenericCost")
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

impl<T: PartialEq> PartialEq for GenericCost<T> {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.value, &other.value)
            && Arc::ptr_eq(&self.derivative, &other.derivative)
            && Arc::ptr_eq(&self.second_derivative, &other.second_derivative)
            && self.domain == other.domain
    }
}

/// Per-agent costs `f_i`; the global objective is `f(x) = Σ f_i(x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveSpec<T> {
    Quadratic(Vec<Quadratic<T>>),
    /// Closure-backed costs with declared curvature bounds `l0 ≤ f_i'' ≤ l`.
    Generic {
        costs: Vec<GenericCost<T>>,
        l0: T,
        l: T,
    },
}

/// Default working domain for generic costs.
pub const DEFAULT_DOMAIN: (f64, f64) = (-1e6, 1e6);

/// The constrained minimizer of `Σ f_i(x_i)` subject to `Σ x_i = C`.
///
/// `nu_star` is the common marginal cost `f_i'(x*_i)`, i.e. the negated
/// Lagrange multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimumCertificate<T> {
    pub x_star: Vec<T>,
    pub nu_star: T,
    pub f_star: T,
}

impl<T: Scalar> ObjectiveSpec<T> {
    pub fn quadratic(costs: Vec<Quadratic<T>>) -> Result<Self, ObjectiveError> {
        if costs.is_empty() {
            return Err(ObjectiveError::Empty);
        }
        for (i, q) in costs.iter().enumerate() {
            if !(q.a > T::zero()) || !q.a.is_finite() || !q.b.is_finite() || !q.c.is_finite() {
                return Err(ObjectiveError::NotStronglyConvex {
                    agent: i + 1,
                    a: q.a.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(Self::Quadratic(costs))
    }

    pub fn generic(costs: Vec<GenericCost<T>>, l0: T, l: T) -> Result<Self, ObjectiveError> {
        if costs.is_empty() {
            return Err(ObjectiveError::Empty);
        }
        if !(l0 > T::zero()) || !(l >= l0) || !l.is_finite() {
            return Err(ObjectiveError::InvalidBounds {
                l0: l0.to_f64().unwrap_or(f64::NAN),
                l: l.to_f64().unwrap_or(f64::NAN),
            });
        }
        for (i, c) in costs.iter().enumerate() {
            let (lo, hi) = c.domain;
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(ObjectiveError::InvalidDomain {
                    agent: i + 1,
                    lo: lo.to_f64().unwrap_or(f64::NAN),
                    hi: hi.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(Self::Generic { costs, l0, l })
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Quadratic(q) => q.len(),
            Self::Generic { costs, .. } => costs.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cost(&self, i: usize, x: T) -> T {
        match self {
            Self::Quadratic(q) => q[i].value(x),
            Self::Generic { costs, .. } => costs[i].value(x),
        }
    }

    pub fn derivative(&self, i: usize, x: T) -> T {
        match self {
            Self::Quadratic(q) => q[i].derivative(x),
            Self::Generic { costs, .. } => costs[i].derivative(x),
        }
    }

    pub fn second_derivative(&self, i: usize, x: T) -> T {
        match self {
            Self::Quadratic(q) => q[i].curvature(),
            Self::Generic { costs, .. } => costs[i].second_derivative(x),
        }
    }

    /// `f(x) = Σ f_i(x_i)`.
    pub fn value(&self, x: &[T]) -> T {
        debug_assert_eq!(x.len(), self.len());
        x.iter()
            .enumerate()
            .map(|(i, &xi)| self.cost(i, xi))
            .collect::<CompensatedSum<T>>()
            .value()
    }

    /// `∇f(x)`, component `i` being `f_i'(x_i)`.
    pub fn gradient(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.len());
        x.iter()
            .enumerate()
            .map(|(i, &xi)| self.derivative(i, xi))
            .collect()
    }

    /// `f(x) - f(x*)` evaluated as `Σ [f_i(x_i) - f_i(x*_i) - f_i'(x*_i)(x_i - x*_i)]`.
    ///
    /// On the constraint set `Σ x_i = Σ x*_i` this equals the optimality gap,
    /// but it does not suffer cancellation against `f*` near the optimum.
    pub fn optimality_gap(&self, x: &[T], opt: &OptimumCertificate<T>) -> T {
        let mut acc = CompensatedSum::new();
        for (i, (&xi, &xs)) in x.iter().zip(&opt.x_star).enumerate() {
            let d = xi - xs;
            let term = match self {
                Self::Quadratic(q) => q[i].a * d * d,
                Self::Generic { costs, .. } => {
                    costs[i].value(xi) - costs[i].value(xs) - costs[i].derivative(xs) * d
                }
            };
            acc.add(term);
        }
        acc.value()
    }

    /// Strong-convexity constant `l0` and gradient Lipschitz constant `l`.
    ///
    /// Quadratics: `l0 = min 2a_i`, `l = max 2a_i`. Generic costs return the
    /// declared bounds after sampling `f''` on each agent's domain intersected
    /// with `domain`.
    pub fn global_constants(&self, domain: Option<(T, T)>) -> Result<(T, T), ObjectiveError> {
        match self {
            Self::Quadratic(q) => {
                let curv = q.iter().map(Quadratic::curvature);
                let l0 = curv.clone().fold(T::infinity(), T::min);
                let l = curv.fold(T::neg_infinity(), T::max);
                Ok((l0, l))
            }
            Self::Generic { costs, l0, l } => {
                let slack = T::resolvable(1e-9);
                const SAMPLES: usize = 257;
                for (i, c) in costs.iter().enumerate() {
                    let (mut lo, mut hi) = c.domain;
                    if let Some((dlo, dhi)) = domain {
                        lo = lo.max(dlo);
                        hi = hi.min(dhi);
                    }
                    if !(lo <= hi) {
                        continue;
                    }
                    for s in 0..SAMPLES {
                        let x = lo + (hi - lo) * T::from_count(s) / T::from_count(SAMPLES - 1);
                        let v = c.second_derivative(x);
                        if !(v >= *l0 * (T::one() - slack)) {
                            return Err(ObjectiveError::NonConvex {
                                agent: i + 1,
                                x: x.to_f64().unwrap_or(f64::NAN),
                                value: v.to_f64().unwrap_or(f64::NAN),
                                l0: l0.to_f64().unwrap_or(f64::NAN),
                            });
                        }
                        if v > *l * (T::one() + slack) {
                            return Err(ObjectiveError::CurvatureAboveBound {
                                agent: i + 1,
                                x: x.to_f64().unwrap_or(f64::NAN),
                                value: v.to_f64().unwrap_or(f64::NAN),
                                l: l.to_f64().unwrap_or(f64::NAN),
                            });
                        }
                    }
                }
                Ok((*l0, *l))
            }
        }
    }

    /// Solves `Σ x_i = C` with equal marginal costs.
    pub fn kkt_oracle(&self, total: T) -> Result<OptimumCertificate<T>, ObjectiveError> {
        match self {
            Self::Quadratic(q) => Ok(self.kkt_closed_form(q, total)),
            Self::Generic { costs, .. } => self.kkt_bisection(costs, total),
        }
    }

    fn kkt_closed_form(&self, q: &[Quadratic<T>], total: T) -> OptimumCertificate<T> {
        let two = T::lit(2.0);
        let shift: CompensatedSum<T> = q.iter().map(|c| c.b / (two * c.a)).collect();
        let weight: CompensatedSum<T> = q.iter().map(|c| T::one() / (two * c.a)).collect();
        let nu_star = (total + shift.value()) / weight.value();
        let x_star: Vec<T> = q.iter().map(|c| (nu_star - c.b) / (two * c.a)).collect();
        let f_star = self.value(&x_star);
        OptimumCertificate {
            x_star,
            nu_star,
            f_star,
        }
    }

    fn kkt_bisection(
        &self,
        costs: &[GenericCost<T>],
        total: T,
    ) -> Result<OptimumCertificate<T>, ObjectiveError> {
        let supply = |nu: T| -> T {
            costs
                .iter()
                .map(|c| c.inverse_derivative(nu))
                .collect::<CompensatedSum<T>>()
                .value()
                - total
        };
        let mut nu_lo = costs
            .iter()
            .map(|c| c.derivative(c.domain.0))
            .fold(T::infinity(), T::min);
        let mut nu_hi = costs
            .iter()
            .map(|c| c.derivative(c.domain.1))
            .fold(T::neg_infinity(), T::max);
        let mut g_lo = supply(nu_lo);
        let mut g_hi = supply(nu_hi);
        let two = T::lit(2.0);
        let mut expansions = 0;
        while !(g_lo <= T::zero() && g_hi >= T::zero()) {
            if expansions == 60 {
                return Err(ObjectiveError::BracketNotFound);
            }
            let width = (nu_hi - nu_lo).abs().max(T::one());
            if g_lo > T::zero() {
                nu_lo -= width * two;
                g_lo = supply(nu_lo);
            }
            if g_hi < T::zero() {
                nu_hi += width * two;
                g_hi = supply(nu_hi);
            }
            expansions += 1;
        }
        if g_lo > g_hi {
            return Err(ObjectiveError::NonMonotone);
        }
        let tol = T::resolvable(1e-10) * total.abs().max(T::one());
        let half = T::lit(0.5);
        let mut nu = nu_lo;
        let mut g = g_lo;
        for _ in 0..4000 {
            let mid = nu_lo + (nu_hi - nu_lo) * half;
            let g_mid = supply(mid);
            if g_mid < g_lo || g_mid > g_hi {
                return Err(ObjectiveError::NonMonotone);
            }
            nu = mid;
            g = g_mid;
            if g_mid.abs() <= tol || mid <= nu_lo || mid >= nu_hi {
                break;
            }
            if g_mid < T::zero() {
                nu_lo = mid;
                g_lo = g_mid;
            } else {
                nu_hi = mid;
                g_hi = g_mid;
            }
        }
        if g.abs() > tol {
            return Err(ObjectiveError::BracketNotFound);
        }
        let x_star: Vec<T> = costs.iter().map(|c| c.inverse_derivative(nu)).collect();
        for (i, (c, &x)) in costs.iter().zip(&x_star).enumerate() {
            if x <= c.domain.0 || x >= c.domain.1 {
                return Err(ObjectiveError::OptimumOutsideDomain { agent: i + 1 });
            }
        }
        let f_star = self.value(&x_star);
        Ok(OptimumCertificate {
            x_star,
            nu_star: nu,
            f_star,
        })
    }
}

/// The three generator costs of the economic dispatch example.
pub fn dispatch3_costs<T: Scalar>() -> Vec<Quadratic<T>> {
    vec![
        Quadratic::new(T::lit(0.096), T::lit(1.22), T::lit(51.0)),
        Quadratic::new(T::lit(0.072), T::lit(3.41), T::lit(31.0)),
        Quadratic::new(T::lit(0.105), T::lit(2.53), T::lit(78.0)),
    ]
}
