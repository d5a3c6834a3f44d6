//! TOML scenario files.
//!
//! ```toml
//! protocol = "directed"
//! horizon = 5.0
//! x0 = [140.0, 140.0, 140.0]
//!
//! [graph]
//! n = 3
//! edges = [[1, 2], [2, 1], [2, 3], [3, 2], [3, 1]]
//!
//! [objective]
//! quadratic = [
//!     { a = 0.096, b = 1.22, c = 51.0 },
//!     { a = 0.072, b = 3.41, c = 31.0 },
//!     { a = 0.105, b = 2.53, c = 78.0 },
//! ]
//!
//! [schedule]
//! kind = "truncated"
//! T_c = 2.0
//! k_eps = 80
//! eps = 0.01
//! ```
//!
//! Edges are `[from, to]` or `[from, to, weight]` with 1-based agent ids; an
//! edge `from -> to` means `to` receives from `from`. Optional top-level keys:
//! `beta`, `unsafe_beta`, and `C` (checked against the sum of `x0`).

use std::path::Path;

use serde::{Deserialize, Serialize};
use specdo_core::{Edge, Objective, ProtocolKind, Quadratic, Scenario64, Schedule, Topology};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("{field}: {message}")]
    Semantic {
        field: &'static str,
        message: String,
    },
    #[error("cannot serialize scenario: {0}")]
    Emit(String),
}

impl ScenarioFileError {
    pub fn is_io(&self) -> bool {
        matches!(self, Self::Io { .. })
    }
}

fn semantic(field: &'static str, message: impl ToString) -> ScenarioFileError {
    ScenarioFileError::Semantic {
        field,
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolName {
    Directed,
    Undirected,
}

impl From<ProtocolName> for ProtocolKind {
    fn from(p: ProtocolName) -> Self {
        match p {
            ProtocolName::Directed => ProtocolKind::Directed,
            ProtocolName::Undirected => ProtocolKind::Undirected,
        }
    }
}

impl From<ProtocolKind> for ProtocolName {
    fn from(p: ProtocolKind) -> Self {
        match p {
            ProtocolKind::Directed => ProtocolName::Directed,
            ProtocolKind::Undirected => ProtocolName::Undirected,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EdgeEntry {
    Plain([usize; 2]),
    Weighted(usize, usize, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    pub n: usize,
    pub edges: Vec<EdgeEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticEntry {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSection {
    pub quadratic: Vec<QuadraticEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    Basel,
    Truncated,
    Power,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub kind: ScheduleKind,
    #[serde(rename = "T_c")]
    pub settling_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_eps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
}

impl ScheduleSection {
    pub fn to_schedule(&self) -> Result<Schedule, ScenarioFileError> {
        let sched = match self.kind {
            ScheduleKind::Basel => Schedule::basel(self.settling_time),
            ScheduleKind::Truncated => {
                let k_eps = self.k_eps.ok_or_else(|| {
                    semantic("schedule.k_eps", "required for a truncated schedule")
                })?;
                let eps = self
                    .eps
                    .ok_or_else(|| semantic("schedule.eps", "required for a truncated schedule"))?;
                Schedule::truncated(self.settling_time, k_eps, eps)
            }
            ScheduleKind::Power => {
                let b = self
                    .b
                    .ok_or_else(|| semantic("schedule.b", "required for a power schedule"))?;
                Schedule::power(self.settling_time, b)
            }
        };
        sched.map_err(|e| semantic("schedule", e))
    }

    pub fn from_schedule(s: &Schedule) -> Self {
        match *s {
            Schedule::Basel { settling_time } => Self {
                kind: ScheduleKind::Basel,
                settling_time,
                k_eps: None,
                eps: None,
                b: None,
            },
            Schedule::Truncated {
                settling_time,
                k_eps,
                eps,
            } => Self {
                kind: ScheduleKind::Truncated,
                settling_time,
                k_eps: Some(k_eps),
                eps: Some(eps),
                b: None,
            },
            Schedule::Power {
                settling_time,
                ratio,
            } => Self {
                kind: ScheduleKind::Power,
                settling_time,
                k_eps: None,
                eps: None,
                b: Some(ratio),
            },
        }
    }
}

fn is_false(v: &bool) -> bool {
    !*v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub protocol: ProtocolName,
    pub horizon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub unsafe_beta: bool,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub total: Option<f64>,
    pub x0: Vec<f64>,
    pub graph: GraphSection,
    pub objective: ObjectiveSection,
    pub schedule: ScheduleSection,
}

impl ScenarioFile {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioFileError> {
        toml::from_str(text).map_err(|e| ScenarioFileError::Syntax(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String, ScenarioFileError> {
        toml::to_string(self).map_err(|e| ScenarioFileError::Emit(e.to_string()))
    }

    /// Validates every invariant and builds the scenario.
    pub fn to_scenario(&self) -> Result<Scenario64, ScenarioFileError> {
        let edges: Vec<Edge<f64>> = self
            .graph
            .edges
            .iter()
            .map(|e| match *e {
                EdgeEntry::Plain([from, to]) => Edge::new(from, to),
                EdgeEntry::Weighted(from, to, w) => Edge::weighted(from, to, w),
            })
            .collect();
        let topology =
            Topology::from_edges(self.graph.n, &edges).map_err(|e| semantic("graph", e))?;
        let costs = self
            .objective
            .quadratic
            .iter()
            .map(|q| Quadratic::new(q.a, q.b, q.c))
            .collect();
        let objective =
            Objective::quadratic(costs).map_err(|e| semantic("objective.quadratic", e))?;
        let schedule = self.schedule.to_schedule()?;
        let mut sc = Scenario64::new(
            topology,
            objective,
            self.x0.clone(),
            schedule,
            self.protocol.into(),
            self.horizon,
        )
        .map_err(|e| semantic(scenario_field(&e), e))?
        .with_beta(self.beta, self.unsafe_beta)
        .map_err(|e| semantic("beta", e))?;
        if let Some(c) = self.total {
            sc = sc.with_declared_total(c).map_err(|e| semantic("C", e))?;
        }
        Ok(sc)
    }

    pub fn from_scenario(sc: &Scenario64) -> Self {
        let edges = sc
            .topology
            .edges()
            .into_iter()
            .map(|e| match e.weight {
                Some(w) if w != 1.0 => EdgeEntry::Weighted(e.from, e.to, w),
                _ => EdgeEntry::Plain([e.from, e.to]),
            })
            .collect();
        let quadratic = match &sc.objective {
            Objective::Quadratic(qs) => qs
                .iter()
                .map(|q| QuadraticEntry {
                    a: q.a,
                    b: q.b,
                    c: q.c,
                })
                .collect(),
            // Closures have no text form.
            Objective::Generic { .. } => Vec::new(),
        };
        Self {
            protocol: sc.protocol.into(),
            horizon: sc.horizon,
            beta: sc.beta,
            unsafe_beta: sc.unsafe_beta,
            total: Some(sc.total),
            x0: sc.x0.clone(),
            graph: GraphSection {
                n: sc.topology.n(),
                edges,
            },
            objective: ObjectiveSection { quadratic },
            schedule: ScheduleSection::from_schedule(&sc.schedule),
        }
    }
}

fn scenario_field(e: &specdo_core::ScenarioError) -> &'static str {
    use specdo_core::ScenarioError as E;
    match e {
        E::InitialState { .. } => "x0",
        E::ObjectiveSize { .. } => "objective.quadratic",
        E::TotalMismatch { .. } => "C",
        E::NotStronglyConnected | E::NotConnected | E::NotSymmetric | E::Graph(_) => "graph",
        E::Horizon(_) => "horizon",
        E::Beta(_) | E::BetaAboveBound { .. } => "beta",
        E::Objective(_) => "objective",
        E::Protocol(_) => "protocol",
        E::Schedule(_) => "schedule",
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario64, ScenarioFileError> {
    ScenarioFile::from_toml(text)?.to_scenario()
}

pub fn read_scenario_file(path: &Path) -> Result<ScenarioFile, ScenarioFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ScenarioFile::from_toml(&text)
}

pub fn emit_scenario(sc: &Scenario64) -> Result<String, ScenarioFileError> {
    ScenarioFile::from_scenario(sc).to_toml()
}
