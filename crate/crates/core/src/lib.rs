//! Distributed resource allocation with specified-time convergence over
//! directed networks and sampled-data communication.
//!
//! Every agent `i` holds a local decision `x_i` and a private convex cost
//! `f_i`. The protocols keep `Σ x_i = C` at every step and drive the network
//! to the minimizer of `Σ f_i(x_i)` at a time fixed in advance by the
//! sampling schedule.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod graph;
pub mod linalg;
pub mod objective;
pub mod protocol_directed;
pub mod protocol_undirected;
pub mod scalar;
pub mod schedule;
pub mod simulator;

pub use graph::{DirectedTopology, Edge, GraphError, LiftedOperators};
pub use linalg::{LinalgError, Matrix};
pub use objective::{GenericCost, ObjectiveError, ObjectiveSpec, OptimumCertificate, Quadratic};
pub use protocol_directed::{DirectedCertificate, DirectedProtocolState, ProtocolError};
pub use protocol_undirected::UndirectedProtocolState;
pub use scalar::{CompensatedSum, Scalar};
pub use schedule::{SampleInstant, SamplingSchedule, ScheduleError};
pub use simulator::{
    run, verify_trace, CertificateBlock, CheckResult, CheckStatus, ProtocolKind, Scenario,
    ScenarioError, SimError, SimulationTrace, StateSample, TraceContext, TraceOptions, TraceRecord,
    VerifyReport,
};

pub type Topology = DirectedTopology<f64>;
pub type Objective = ObjectiveSpec<f64>;
pub type Schedule = SamplingSchedule<f64>;
pub type Scenario64 = Scenario<f64>;
pub type Trace = SimulationTrace<f64>;
pub type Record = TraceRecord<f64>;
pub type Certificate = CertificateBlock<f64>;
