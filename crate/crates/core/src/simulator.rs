//! Runs a protocol over a sampling schedule and records the diagnostic trace.

use log::warn;
use thiserror::Error;

use crate::graph::{DirectedTopology, GraphError, LiftedOperators};
use crate::linalg::{self, Matrix};
use crate::objective::{ObjectiveError, ObjectiveSpec, OptimumCertificate};
use crate::protocol_directed::{
    contraction_rate, lyapunov_value, DirectedCertificate, DirectedProtocolState, ProtocolError,
};
use crate::protocol_undirected::{
    beta_max_undirected, rate_bound_undirected, UndirectedProtocolState,
};
use crate::scalar::{CompensatedSum, Scalar};
use crate::schedule::{SamplingSchedule, ScheduleError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolKind {
    Directed,
    Undirected,
}

impl ProtocolKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Directed => "directed",
            Self::Undirected => "undirected",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("x0 has {got} entries but the graph has {n} agents")]
    InitialState { n: usize, got: usize },
    #[error("objective has {got} cost functions but the graph has {n} agents")]
    ObjectiveSize { n: usize, got: usize },
    #[error("declared total C = {declared} does not match sum of x0 = {actual}")]
    TotalMismatch { declared: f64, actual: f64 },
    #[error("graph is not strongly connected; the directed protocol requires strong connectivity")]
    NotStronglyConnected,
    #[error("graph is not connected; the undirected protocol requires a connected graph")]
    NotConnected,
    #[error(
        "undirected protocol requires a symmetric topology (every edge paired with its reverse)"
    )]
    NotSymmetric,
    #[error("horizon must be positive and finite, got {0}")]
    Horizon(f64),
    #[error("beta must be positive and finite, got {0}")]
    Beta(f64),
    #[error("beta = {beta} exceeds the certified bound {beta_max}; set unsafe_beta to run anyway")]
    BetaAboveBound { beta: f64, beta_max: f64 },
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("scenario rejected: {0}")]
    Rejected(#[from] ScenarioError),
    #[error("diverged at step {k}: {reason}")]
    Diverged { k: usize, reason: String },
    #[error(
        "internal invariant breach at step {k}: constraint residual {residual} exceeds tolerance"
    )]
    InvariantBreach { k: usize, residual: f64 },
    #[error("time {t} outside [0, {horizon}]")]
    OutOfRange { t: f64, horizon: f64 },
    #[error("trace does not carry the state needed for sampling ({0})")]
    MissingState(&'static str),
}

/// A complete, validated simulation setup.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T> {
    pub topology: DirectedTopology<T>,
    pub objective: ObjectiveSpec<T>,
    pub x0: Vec<T>,
    /// `C = 1ᵀ x0`.
    pub total: T,
    pub schedule: SamplingSchedule<T>,
    pub protocol: ProtocolKind,
    pub beta: Option<T>,
    pub horizon: T,
    pub unsafe_beta: bool,
}

impl<T: Scalar> Scenario<T> {
    /// Builds and validates a scenario; `C` is taken as the sum of `x0`.
    pub fn new(
        topology: DirectedTopology<T>,
        objective: ObjectiveSpec<T>,
        x0: Vec<T>,
        schedule: SamplingSchedule<T>,
        protocol: ProtocolKind,
        horizon: T,
    ) -> Result<Self, ScenarioError> {
        let total = x0.iter().copied().collect::<CompensatedSum<T>>().value();
        let sc = Self {
            topology,
            objective,
            x0,
            total,
            schedule,
            protocol,
            beta: None,
            horizon,
            unsafe_beta: false,
        };
        sc.validate()?;
        Ok(sc)
    }

    pub fn with_beta(mut self, beta: Option<T>, unsafe_beta: bool) -> Result<Self, ScenarioError> {
        self.beta = beta;
        self.unsafe_beta = unsafe_beta;
        self.validate()?;
        Ok(self)
    }

    /// Checks a declared `C` against `1ᵀ x0` (tolerance `1e-12 · max(1, |C|)`).
    pub fn with_declared_total(self, declared: T) -> Result<Self, ScenarioError> {
        let tol = T::resolvable(1e-12) * declared.abs().max(T::one());
        if !((declared - self.total).abs() <= tol) {
            return Err(ScenarioError::TotalMismatch {
                declared: declared.to_f64().unwrap_or(f64::NAN),
                actual: self.total.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.topology.n()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let n = self.n();
        if self.x0.len() != n {
            return Err(ScenarioError::InitialState {
                n,
                got: self.x0.len(),
            });
        }
        if self.objective.len() != n {
            return Err(ScenarioError::ObjectiveSize {
                n,
                got: self.objective.len(),
            });
        }
        if !(self.horizon > T::zero()) || !self.horizon.is_finite() {
            return Err(ScenarioError::Horizon(
                self.horizon.to_f64().unwrap_or(f64::NAN),
            ));
        }
        if let Some(b) = self.beta {
            if !(b > T::zero()) || !b.is_finite() {
                return Err(ScenarioError::Beta(b.to_f64().unwrap_or(f64::NAN)));
            }
        }
        match self.protocol {
            ProtocolKind::Directed => {
                if !self.topology.is_strongly_connected() {
                    return Err(ScenarioError::NotStronglyConnected);
                }
            }
            ProtocolKind::Undirected => {
                if !self.topology.is_symmetric() {
                    return Err(ScenarioError::NotSymmetric);
                }
                if !self.topology.is_strongly_connected() {
                    return Err(ScenarioError::NotConnected);
                }
            }
        }
        Ok(())
    }
}

/// Scenario facts a trace carries so it can be verified on its own.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceContext<T> {
    pub n: usize,
    pub protocol: ProtocolKind,
    pub total: T,
    pub schedule: SamplingSchedule<T>,
    pub horizon: T,
}

/// Step size and convergence certificates of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateBlock<T> {
    pub beta: T,
    pub beta_max: T,
    pub unsafe_beta: bool,
    pub l0: T,
    pub l: T,
    /// Lyapunov contraction rate (directed protocol).
    pub epsilon: Option<T>,
    /// Per-step cost-gap factor (undirected protocol); `None` when outside (0, 1).
    pub rate_factor: Option<T>,
    /// Bound on `f(x(T_c)) - f*` for truncated schedules.
    pub accuracy_bound: Option<T>,
    pub f_star: T,
    pub nu_star: T,
    pub x_star: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord<T> {
    pub k: usize,
    pub time: T,
    /// `T_k = t_k - t_{k-1}`; zero for `k = 0`.
    pub interval: T,
    pub x: Vec<T>,
    pub xi: Option<Vec<T>>,
    pub f: T,
    pub constraint_residual: T,
    /// Directed: `e_ψᵀWe_ψ + f - f*`. Undirected: `f - f*`.
    pub v: Option<T>,
    pub e_psi_norm: Option<T>,
    pub psi: Option<Vec<T>>,
}

/// Protocol state at the first instant at or past the horizon, kept for interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct Lookahead<T> {
    pub time: T,
    pub xi: Vec<T>,
    pub psi: Option<Vec<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace<T> {
    pub context: TraceContext<T>,
    pub certificate: CertificateBlock<T>,
    pub records: Vec<TraceRecord<T>>,
    pub lookahead: Option<Lookahead<T>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TraceOptions {
    /// Keep the full `n²` observer vector in every record.
    pub record_psi: bool,
}

/// Continuous-time state at an arbitrary time.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSample<T> {
    pub t: T,
    pub x: Vec<T>,
    pub xi: Vec<T>,
    pub psi: Option<Vec<T>>,
}

fn resolve_beta<T: Scalar>(
    requested: Option<T>,
    beta_max: T,
    unsafe_beta: bool,
) -> Result<T, ScenarioError> {
    match requested {
        None => Ok(beta_max),
        Some(b) if b <= beta_max => Ok(b),
        Some(b) if unsafe_beta => {
            warn!("running with beta = {b} above the certified bound {beta_max}; convergence guarantees do not apply");
            Ok(b)
        }
        Some(b) => Err(ScenarioError::BetaAboveBound {
            beta: b.to_f64().unwrap_or(f64::NAN),
            beta_max: beta_max.to_f64().unwrap_or(f64::NAN),
        }),
    }
}

// One engine per run; boxing the directed operators buys nothing.
#[allow(clippy::large_enum_variant)]
enum Engine<T> {
    Directed {
        ops: LiftedOperators<T>,
        w: Matrix<T>,
        state: DirectedProtocolState<T>,
    },
    Undirected {
        laplacian: Matrix<T>,
        state: UndirectedProtocolState<T>,
    },
}

impl<T: Scalar> Engine<T> {
    fn x(&self) -> Vec<T> {
        match self {
            Self::Directed { ops, state, .. } => state.x(ops),
            Self::Undirected { laplacian, state } => state.x(laplacian),
        }
    }

    fn xi(&self) -> &[T] {
        match self {
            Self::Directed { state, .. } => &state.xi,
            Self::Undirected { state, .. } => &state.xi,
        }
    }

    fn psi(&self) -> Option<&[T]> {
        match self {
            Self::Directed { state, .. } => Some(&state.psi),
            Self::Undirected { .. } => None,
        }
    }

    fn step(&mut self, spec: &ObjectiveSpec<T>, beta: T) {
        match self {
            Self::Directed { ops, state, .. } => *state = state.step(spec, ops, beta),
            Self::Undirected { laplacian, state } => *state = state.step(spec, laplacian, beta),
        }
    }

    fn is_finite(&self) -> bool {
        self.xi().iter().all(|v| v.is_finite())
            && self.psi().is_none_or(|p| p.iter().all(|v| v.is_finite()))
    }
}

/// Runs the scenario's protocol at every sampling instant `t_k < horizon`.
pub fn run<T: Scalar>(
    sc: &Scenario<T>,
    options: TraceOptions,
) -> Result<SimulationTrace<T>, SimError> {
    sc.validate()?;
    let spec = &sc.objective;
    let (l0, l) = spec.global_constants(None).map_err(ScenarioError::from)?;
    let opt = spec.kkt_oracle(sc.total).map_err(ScenarioError::from)?;
    let count = sc
        .schedule
        .steps_before(sc.horizon)
        .map_err(ScenarioError::from)?;

    let (mut engine, mut certificate) = match sc.protocol {
        ProtocolKind::Directed => {
            let ops = sc
                .topology
                .lifted_operators()
                .map_err(ScenarioError::from)?;
            let cert = DirectedCertificate::compute(&sc.topology, &ops, l0, l, None)
                .map_err(ScenarioError::from)?;
            let beta = resolve_beta(sc.beta, cert.beta_max, sc.unsafe_beta)?;
            let epsilon =
                contraction_rate(beta, &cert.w, l0, &sc.topology).map_err(ScenarioError::from)?;
            let block = certificate_block(beta, cert.beta_max, l0, l, &opt, Some(epsilon), None);
            (
                Engine::Directed {
                    ops,
                    w: cert.w,
                    state: DirectedProtocolState::new(sc.x0.clone()),
                },
                block,
            )
        }
        ProtocolKind::Undirected => {
            let beta_max = beta_max_undirected(l, &sc.topology).map_err(ScenarioError::from)?;
            let beta = resolve_beta(sc.beta, beta_max, sc.unsafe_beta)?;
            let laplacian = sc.topology.laplacian_in();
            let factor = match rate_bound_undirected(beta, l0, &laplacian) {
                Ok(f) => Some(f),
                Err(ProtocolError::RateOutOfRange(f)) if sc.unsafe_beta => {
                    warn!("rate factor {f} outside (0, 1) for unsafe beta; no decay certificate");
                    None
                }
                Err(e) => return Err(ScenarioError::from(e).into()),
            };
            let block = certificate_block(beta, beta_max, l0, l, &opt, None, factor);
            (
                Engine::Undirected {
                    laplacian,
                    state: UndirectedProtocolState::new(sc.x0.clone()),
                },
                block,
            )
        }
    };

    let residual_tol = T::resolvable(1e-9) * sc.total.abs().max(T::one());
    let blowup = T::lit(1e6)
        * sc.x0
            .iter()
            .fold(sc.total.abs().max(T::one()), |m, v| m.max(v.abs()));
    let mut records = Vec::with_capacity(count);
    let mut instants = sc.schedule.instants();
    for inst in instants.by_ref().take(count) {
        if !engine.is_finite() {
            return Err(SimError::Diverged {
                k: inst.k,
                reason: "non-finite state".into(),
            });
        }
        let x = engine.x();
        let f = spec.value(&x);
        let residual = (x.iter().copied().collect::<CompensatedSum<T>>().value() - sc.total).abs();
        if !f.is_finite() || !residual.is_finite() {
            return Err(SimError::Diverged {
                k: inst.k,
                reason: "non-finite state".into(),
            });
        }
        if residual > residual_tol {
            if linalg::max_abs(&x) > blowup {
                return Err(SimError::Diverged {
                    k: inst.k,
                    reason: format!("state magnitude {} exploded", linalg::max_abs(&x)),
                });
            }
            return Err(SimError::InvariantBreach {
                k: inst.k,
                residual: residual.to_f64().unwrap_or(f64::NAN),
            });
        }
        let (v, e_psi_norm) = match &engine {
            Engine::Directed { ops, w, state } => (
                Some(lyapunov_value(state, spec, ops, w, opt.f_star)),
                Some(state.observer_error(spec, ops).norm()),
            ),
            Engine::Undirected { .. } => (Some(spec.optimality_gap(&x, &opt)), None),
        };
        if v.is_some_and(|v| !v.is_finite()) {
            return Err(SimError::Diverged {
                k: inst.k,
                reason: "non-finite Lyapunov value".into(),
            });
        }
        records.push(TraceRecord {
            k: inst.k,
            time: inst.time,
            interval: inst.interval,
            x,
            xi: Some(engine.xi().to_vec()),
            f,
            constraint_residual: residual,
            v,
            e_psi_norm,
            psi: if options.record_psi {
                engine.psi().map(<[T]>::to_vec)
            } else {
                None
            },
        });
        engine.step(spec, certificate.beta);
    }
    if !engine.is_finite() {
        return Err(SimError::Diverged {
            k: count,
            reason: "non-finite state".into(),
        });
    }
    let next = instants.next().expect("schedules are infinite");
    let lookahead = Some(Lookahead {
        time: next.time,
        xi: engine.xi().to_vec(),
        psi: if options.record_psi {
            engine.psi().map(<[T]>::to_vec)
        } else {
            None
        },
    });

    if let SamplingSchedule::Truncated { k_eps, .. } = sc.schedule {
        let start = records.first().and_then(|r| r.v);
        certificate.accuracy_bound = match (start, certificate.epsilon, certificate.rate_factor) {
            (Some(v0), Some(eps), _) => {
                Some(crate::protocol_directed::accuracy_bound(v0, eps, k_eps))
            }
            (Some(gap0), None, Some(factor)) => {
                Some(factor.powi(i32::try_from(k_eps).unwrap_or(i32::MAX)) * gap0)
            }
            _ => None,
        };
    }

    Ok(SimulationTrace {
        context: TraceContext {
            n: sc.n(),
            protocol: sc.protocol,
            total: sc.total,
            schedule: sc.schedule,
            horizon: sc.horizon,
        },
        certificate,
        records,
        lookahead,
    })
}

fn certificate_block<T: Scalar>(
    beta: T,
    beta_max: T,
    l0: T,
    l: T,
    opt: &OptimumCertificate<T>,
    epsilon: Option<T>,
    rate_factor: Option<T>,
) -> CertificateBlock<T> {
    CertificateBlock {
        beta,
        beta_max,
        unsafe_beta: beta > beta_max,
        l0,
        l,
        epsilon,
        rate_factor,
        accuracy_bound: None,
        f_star: opt.f_star,
        nu_star: opt.nu_star,
        x_star: opt.x_star.clone(),
    }
}

impl<T: Scalar> SimulationTrace<T> {
    /// State at time `t`: `x` is held from the latest instant `≤ t`, while `ξ`
    /// and `ψ` move linearly across each sampling interval.
    pub fn sample_at(&self, t: T) -> Result<StateSample<T>, SimError> {
        let horizon = self.context.horizon;
        if !(t >= T::zero() && t <= horizon) {
            return Err(SimError::OutOfRange {
                t: t.to_f64().unwrap_or(f64::NAN),
                horizon: horizon.to_f64().unwrap_or(f64::NAN),
            });
        }
        let idx = self.records.partition_point(|r| r.time <= t);
        let cur = &self.records[idx.saturating_sub(1).min(self.records.len() - 1)];
        let xi_cur = cur.xi.as_ref().ok_or(SimError::MissingState("xi"))?;
        let (t_next, xi_next, psi_next) = match self.records.get(idx) {
            Some(next) => (
                next.time,
                next.xi.as_ref().ok_or(SimError::MissingState("xi"))?,
                next.psi.as_ref(),
            ),
            None => {
                let la = self
                    .lookahead
                    .as_ref()
                    .ok_or(SimError::MissingState("lookahead"))?;
                (la.time, &la.xi, la.psi.as_ref())
            }
        };
        let alpha = (t - cur.time) / (t_next - cur.time);
        let lerp = |a: &[T], b: &[T]| -> Vec<T> {
            a.iter()
                .zip(b)
                .map(|(&p, &q)| p + alpha * (q - p))
                .collect()
        };
        let psi = match (&cur.psi, psi_next) {
            (Some(a), Some(b)) => Some(lerp(a, b)),
            _ => None,
        };
        Ok(StateSample {
            t,
            x: cur.x.clone(),
            xi: lerp(xi_cur, xi_next),
            psi,
        })
    }

    pub fn final_record(&self) -> &TraceRecord<T> {
        self.records
            .last()
            .expect("traces hold at least the initial record")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

impl CheckStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Pass => "pass",
            Self::Fail => "fail",
            Self::Skipped => "skipped",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub status: CheckStatus,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const CHECK_CONSTRAINT: &str = "constraint_conservation";
pub const CHECK_MONOTONE: &str = "lyapunov_monotone";
pub const CHECK_ENVELOPE: &str = "geometric_envelope";
pub const CHECK_ACCURACY: &str = "accuracy_at_settling_time";
pub const CHECK_CONSENSUS: &str = "observer_consensus";

fn check(name: &'static str, ok: bool, detail: String) -> CheckResult {
    CheckResult {
        name,
        status: if ok {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        detail,
    }
}

fn skipped(name: &'static str, detail: &str) -> CheckResult {
    CheckResult {
        name,
        status: CheckStatus::Skipped,
        detail: detail.to_string(),
    }
}

fn powk<T: Scalar>(base: T, k: usize) -> T {
    base.powi(i32::try_from(k).unwrap_or(i32::MAX))
}

/// Re-checks the convergence guarantees against a completed trace.
///
/// Uses only what a serialized trace carries (the CSV columns plus the
/// certificate block), so a trace read back from disk gets the same verdicts.
pub fn verify_trace<T: Scalar>(tr: &SimulationTrace<T>) -> VerifyReport {
    let ctx = &tr.context;
    let cert = &tr.certificate;
    let recs = &tr.records;
    let mut checks = Vec::new();
    let f_star = cert.f_star;
    let resolution = T::resolvable(1e-12) * f_star.abs().max(T::one());

    let tol = T::resolvable(1e-9) * ctx.total.abs().max(T::one());
    let worst = recs
        .iter()
        .fold(T::zero(), |m, r| m.max(r.constraint_residual));
    checks.push(check(
        CHECK_CONSTRAINT,
        recs.iter().all(|r| r.constraint_residual <= tol),
        format!("max |1'x - C| = {worst:e} (tolerance {tol:e})"),
    ));

    let values: Option<Vec<T>> = recs.iter().map(|r| r.v).collect();
    match values {
        Some(v) if !v.is_empty() => {
            let v0 = v[0];
            let slack = T::resolvable(1e-9) * v0.abs();
            let mut worst_inc = T::neg_infinity();
            let mut first_bad = None;
            for (k, pair) in v.windows(2).enumerate() {
                let inc = pair[1] - pair[0];
                worst_inc = worst_inc.max(inc);
                if inc > slack && first_bad.is_none() {
                    first_bad = Some(k + 1);
                }
            }
            let label = match ctx.protocol {
                ProtocolKind::Directed => "V",
                ProtocolKind::Undirected => "f - f*",
            };
            checks.push(check(
                CHECK_MONOTONE,
                first_bad.is_none(),
                match first_bad {
                    None => format!("{label} non-increasing (largest step change {worst_inc:e})"),
                    Some(k) => {
                        format!("{label} increased at step {k} (largest increase {worst_inc:e})")
                    }
                },
            ));

            let rate = match ctx.protocol {
                ProtocolKind::Directed => cert.epsilon.map(|e| T::one() - e),
                ProtocolKind::Undirected => cert.rate_factor,
            };
            match rate {
                Some(factor) => {
                    let widen = T::one() + T::resolvable(1e-6);
                    let bad = v
                        .iter()
                        .enumerate()
                        .find(|(k, &vk)| vk > powk(factor, *k) * v0 * widen + resolution);
                    checks.push(check(
                        CHECK_ENVELOPE,
                        bad.is_none(),
                        match bad {
                            None => format!(
                                "{label} <= {factor}^k * {label}(0) for all {} records",
                                v.len()
                            ),
                            Some((k, vk)) => format!(
                                "{label}({k}) = {vk:e} exceeds envelope {:e}",
                                powk(factor, k) * v0
                            ),
                        },
                    ));
                }
                None => checks.push(skipped(
                    CHECK_ENVELOPE,
                    "no valid decay rate for this step size",
                )),
            }
        }
        _ => {
            checks.push(skipped(CHECK_MONOTONE, "trace has no Lyapunov column"));
            checks.push(skipped(CHECK_ENVELOPE, "trace has no Lyapunov column"));
        }
    }

    match (ctx.schedule, cert.accuracy_bound) {
        (SamplingSchedule::Truncated { settling_time, .. }, Some(bound))
            if ctx.horizon > settling_time =>
        {
            let at_tc = recs.iter().rev().find(|r| r.time <= settling_time);
            match at_tc {
                Some(r) => {
                    let gap = r.f - f_star;
                    checks.push(check(
                        CHECK_ACCURACY,
                        gap <= bound + resolution,
                        format!("f(x(T_c)) - f* = {gap:e}, bound {bound:e}"),
                    ));
                }
                None => checks.push(skipped(
                    CHECK_ACCURACY,
                    "no record before the settling time",
                )),
            }
        }
        (SamplingSchedule::Truncated { .. }, _) => checks.push(skipped(
            CHECK_ACCURACY,
            "horizon ends before the settling time or no bound",
        )),
        _ => checks.push(skipped(
            CHECK_ACCURACY,
            "exact-settling schedule; no truncation bound",
        )),
    }

    if ctx.protocol == ProtocolKind::Directed {
        let gap_tol = T::lit(1e-8).max(resolution);
        let obs_tol = T::resolvable(1e-6);
        let last = tr.final_record();
        if last.f - f_star < gap_tol {
            let ok = last.e_psi_norm.is_some_and(|e| e <= obs_tol);
            checks.push(check(
                CHECK_CONSENSUS,
                ok,
                format!(
                    "observer error {} at the final step (tolerance {obs_tol:e})",
                    last.e_psi_norm
                        .map_or("missing".to_string(), |e| format!("{e:e}"))
                ),
            ));
        } else {
            checks.push(skipped(CHECK_CONSENSUS, "cost gap never fell below 1e-8"));
        }
    }

    VerifyReport { checks }
}
