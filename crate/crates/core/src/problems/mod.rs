//! The seven problem families: instances, solutions, objectives,
//! feasibility checks, violation magnitudes and evaluation metrics.
//!
//! Instances are immutable after construction and safe to share across
//! threads. All evaluation functions are pure.

mod distance;
pub(crate) mod eval;
mod metrics;

pub use distance::{canonical_solution, solution_distance};
pub use eval::{check_feasibility, locality_alpha, objective, violation_magnitude};
pub use metrics::{feasibility_rate, optimality_gap, Sense};

use crate::error::ProblemError;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Tsp,
    Op,
    Cvrp,
    Mis,
    Mvc,
    Pfsp,
    Jssp,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 7] = [
        ProblemKind::Tsp,
        ProblemKind::Op,
        ProblemKind::Cvrp,
        ProblemKind::Mis,
        ProblemKind::Mvc,
        ProblemKind::Pfsp,
        ProblemKind::Jssp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Tsp => "tsp",
            ProblemKind::Op => "op",
            ProblemKind::Cvrp => "cvrp",
            ProblemKind::Mis => "mis",
            ProblemKind::Mvc => "mvc",
            ProblemKind::Pfsp => "pfsp",
            ProblemKind::Jssp => "jssp",
        }
    }

    pub fn parse(s: &str) -> Option<ProblemKind> {
        Self::ALL.iter().copied().find(|k| k.name() == s)
    }

    /// Optimization sense of the native objective.
    pub fn sense(self) -> Sense {
        match self {
            ProblemKind::Op | ProblemKind::Mis => Sense::Max,
            _ => Sense::Min,
        }
    }
}

/// One operation of a JSSP job: the machine it needs (1-based) and its duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Operation {
    pub machine: usize,
    pub duration: f64,
}

/// Kind-specific instance payload. Customer-indexed lists (`prizes`,
/// `demands`) cover nodes `1..n-1`; the depot is node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InstanceData {
    Tsp {
        coords: Vec<(f64, f64)>,
    },
    Op {
        coords: Vec<(f64, f64)>,
        prizes: Vec<f64>,
        budget: f64,
    },
    Cvrp {
        coords: Vec<(f64, f64)>,
        demands: Vec<f64>,
        capacity: f64,
    },
    Mis {
        vertices: usize,
        edges: Vec<(usize, usize)>,
    },
    Mvc {
        vertices: usize,
        edges: Vec<(usize, usize)>,
    },
    Pfsp {
        /// `processing[job][machine]`, jobs and machines 0-based here;
        /// job ids in solution text are 1-based.
        processing: Vec<Vec<f64>>,
    },
    Jssp {
        /// `jobs[job]` is the ordered operation sequence of that job.
        jobs: Vec<Vec<Operation>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    #[serde(default)]
    pub id: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(flatten)]
    pub data: InstanceData,
}

impl Instance {
    pub fn new(id: impl Into<String>, seed: u64, data: InstanceData) -> Result<Self, ProblemError> {
        let inst = Instance {
            id: id.into(),
            seed,
            data,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn kind(&self) -> ProblemKind {
        match self.data {
            InstanceData::Tsp { .. } => ProblemKind::Tsp,
            InstanceData::Op { .. } => ProblemKind::Op,
            InstanceData::Cvrp { .. } => ProblemKind::Cvrp,
            InstanceData::Mis { .. } => ProblemKind::Mis,
            InstanceData::Mvc { .. } => ProblemKind::Mvc,
            InstanceData::Pfsp { .. } => ProblemKind::Pfsp,
            InstanceData::Jssp { .. } => ProblemKind::Jssp,
        }
    }

    /// Grammar size parameter: node count for routing/graph problems,
    /// job count for scheduling problems.
    pub fn size(&self) -> usize {
        match &self.data {
            InstanceData::Tsp { coords }
            | InstanceData::Op { coords, .. }
            | InstanceData::Cvrp { coords, .. } => coords.len(),
            InstanceData::Mis { vertices, .. } | InstanceData::Mvc { vertices, .. } => *vertices,
            InstanceData::Pfsp { processing } => processing.len(),
            InstanceData::Jssp { jobs } => jobs.len(),
        }
    }

    /// Number of machines, for the scheduling problems.
    pub fn machines(&self) -> Option<usize> {
        match &self.data {
            InstanceData::Pfsp { processing } => Some(processing.first().map_or(0, Vec::len)),
            InstanceData::Jssp { jobs } => Some(jobs.first().map_or(0, Vec::len)),
            _ => None,
        }
    }

    pub fn coords(&self) -> Option<&[(f64, f64)]> {
        match &self.data {
            InstanceData::Tsp { coords }
            | InstanceData::Op { coords, .. }
            | InstanceData::Cvrp { coords, .. } => Some(coords),
            _ => None,
        }
    }

    /// Euclidean distance between two nodes of a geometric instance.
    pub fn dist(&self, a: usize, b: usize) -> f64 {
        let c = self.coords().expect("geometric instance");
        let (ax, ay) = c[a];
        let (bx, by) = c[b];
        ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt()
    }

    /// Demand of a CVRP node (`0` for the depot).
    pub fn demand(&self, node: usize) -> f64 {
        match &self.data {
            InstanceData::Cvrp { demands, .. } => {
                if node == 0 {
                    0.0
                } else {
                    demands[node - 1]
                }
            }
            _ => panic!("demand on non-CVRP instance"),
        }
    }

    /// Prize of an OP customer node.
    pub fn prize(&self, node: usize) -> f64 {
        match &self.data {
            InstanceData::Op { prizes, .. } => prizes[node - 1],
            _ => panic!("prize on non-OP instance"),
        }
    }

    pub fn edges(&self) -> Option<&[(usize, usize)]> {
        match &self.data {
            InstanceData::Mis { edges, .. } | InstanceData::Mvc { edges, .. } => Some(edges),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        match &self.data {
            InstanceData::Tsp { coords } => {
                if coords.is_empty() {
                    return Err(ProblemError::InvalidInstance("no nodes".into()));
                }
            }
            InstanceData::Op {
                coords,
                prizes,
                budget,
            } => {
                if coords.len() < 2 {
                    return Err(ProblemError::InvalidInstance(
                        "OP needs a depot and at least one customer".into(),
                    ));
                }
                if prizes.len() != coords.len() - 1 {
                    return Err(ProblemError::InvalidInstance(
                        "prizes must cover customers 1..n-1".into(),
                    ));
                }
                if prizes.iter().any(|p| *p <= 0.0) {
                    return Err(ProblemError::InvalidInstance("prizes must be positive".into()));
                }
                if *budget <= 0.0 {
                    return Err(ProblemError::InvalidInstance("budget must be positive".into()));
                }
            }
            InstanceData::Cvrp {
                coords,
                demands,
                capacity,
            } => {
                if coords.len() < 2 {
                    return Err(ProblemError::InvalidInstance(
                        "CVRP needs a depot and at least one customer".into(),
                    ));
                }
                if demands.len() != coords.len() - 1 {
                    return Err(ProblemError::InvalidInstance(
                        "demands must cover customers 1..n-1".into(),
                    ));
                }
                if *capacity <= 0.0 {
                    return Err(ProblemError::InvalidInstance("capacity must be positive".into()));
                }
                if demands.iter().any(|q| *q <= 0.0) {
                    return Err(ProblemError::InvalidInstance("demands must be positive".into()));
                }
                // A customer heavier than one vehicle cannot be served by splitting.
                if demands.iter().any(|q| *q > *capacity) {
                    return Err(ProblemError::InvalidInstance(
                        "some demand exceeds vehicle capacity".into(),
                    ));
                }
            }
            InstanceData::Mis { vertices, edges } | InstanceData::Mvc { vertices, edges } => {
                let mut seen = std::collections::HashSet::new();
                for &(u, v) in edges {
                    if u >= *vertices || v >= *vertices {
                        return Err(ProblemError::InvalidInstance(
                            "edge endpoint out of range".into(),
                        ));
                    }
                    if u == v {
                        return Err(ProblemError::InvalidInstance("self-loop edge".into()));
                    }
                    let key = (u.min(v), u.max(v));
                    if !seen.insert(key) {
                        return Err(ProblemError::InvalidInstance("duplicate edge".into()));
                    }
                }
            }
            InstanceData::Pfsp { processing } => {
                if processing.is_empty() {
                    return Err(ProblemError::InvalidInstance("no jobs".into()));
                }
                let m = processing[0].len();
                if m == 0 {
                    return Err(ProblemError::InvalidInstance("no machines".into()));
                }
                for row in processing {
                    if row.len() != m {
                        return Err(ProblemError::InvalidInstance(
                            "ragged processing-time matrix".into(),
                        ));
                    }
                    if row.iter().any(|p| *p <= 0.0) {
                        return Err(ProblemError::InvalidInstance(
                            "processing times must be positive".into(),
                        ));
                    }
                }
            }
            InstanceData::Jssp { jobs } => {
                if jobs.is_empty() {
                    return Err(ProblemError::InvalidInstance("no jobs".into()));
                }
                let m = jobs[0].len();
                if m == 0 {
                    return Err(ProblemError::InvalidInstance("no machines".into()));
                }
                for ops in jobs {
                    if ops.len() != m {
                        return Err(ProblemError::InvalidInstance(
                            "every job must have one operation per machine".into(),
                        ));
                    }
                    let mut machines: Vec<usize> = ops.iter().map(|o| o.machine).collect();
                    machines.sort_unstable();
                    // Taillard convention: each job visits each machine exactly once.
                    if machines != (1..=m).collect::<Vec<_>>() {
                        return Err(ProblemError::InvalidInstance(
                            "each job must visit each machine exactly once".into(),
                        ));
                    }
                    if ops.iter().any(|o| o.duration <= 0.0) {
                        return Err(ProblemError::InvalidInstance(
                            "durations must be positive".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ProblemError> {
        let inst: Instance = serde_json::from_str(text)
            .map_err(|e| ProblemError::InvalidInstance(e.to_string()))?;
        inst.validate()?;
        Ok(inst)
    }
}

/// A candidate solution. May be infeasible; that is the point of repair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "form", content = "payload", rename_all = "lowercase")]
pub enum Solution {
    /// TSP node sequence.
    Tour(Vec<usize>),
    /// OP customer sequence; depot implicit at both ends.
    PrizeRoute(Vec<usize>),
    /// CVRP customer sequences; depot implicit at both ends of each route.
    RouteSet(Vec<Vec<usize>>),
    /// MIS/MVC vertex ids.
    VertexSet(Vec<usize>),
    /// PFSP job sequence, 1-based job ids.
    JobOrder(Vec<usize>),
    /// JSSP per-machine job sequences, 1-based job ids, machine 1 first.
    MachineSchedules(Vec<Vec<usize>>),
}

impl Solution {
    pub fn same_form(&self, other: &Solution) -> bool {
        std::mem::discriminant(self) == std::mem::discriminant(other)
    }

    /// Does this payload form fit the problem kind?
    pub fn fits(&self, kind: ProblemKind) -> bool {
        matches!(
            (self, kind),
            (Solution::Tour(_), ProblemKind::Tsp)
                | (Solution::PrizeRoute(_), ProblemKind::Op)
                | (Solution::RouteSet(_), ProblemKind::Cvrp)
                | (Solution::VertexSet(_), ProblemKind::Mis)
                | (Solution::VertexSet(_), ProblemKind::Mvc)
                | (Solution::JobOrder(_), ProblemKind::Pfsp)
                | (Solution::MachineSchedules(_), ProblemKind::Jssp)
        )
    }
}

/// Outcome of a feasibility check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub feasible: bool,
    pub violations: Vec<Violation>,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: String,
    pub detail: String,
}

impl ViolationReport {
    pub fn feasible() -> Self {
        ViolationReport {
            feasible: true,
            violations: Vec::new(),
            magnitude: 0.0,
        }
    }
}
