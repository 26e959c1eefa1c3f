//! Objectives, feasibility checks and violation magnitudes.
//!
//! The magnitude convention: every count-style violation (duplicate,
//! out-of-range entry, missing element, conflict edge, uncovered edge)
//! contributes 1. Budget/capacity overflows contribute
//! `1 + overflow / budget` per violated route so that any violation has
//! magnitude at least one; this keeps the repair locality bound
//! `d <= alpha * v` sound even for arbitrarily small overflows.

use super::{Instance, InstanceData, Operation, ProblemKind, Solution, Violation, ViolationReport};
use crate::error::ProblemError;
use std::collections::HashSet;

/// Result of scanning a sequence against a universe of required ids.
pub(crate) struct PermScan {
    /// Count of dropped entries (out of range or repeated).
    pub invalid: usize,
    /// Required ids absent from the sequence, ascending.
    pub missing: Vec<usize>,
}

/// Scan `seq` against the id range `lo..=hi`.
pub(crate) fn perm_scan(seq: &[usize], lo: usize, hi: usize) -> PermScan {
    let mut seen = HashSet::new();
    let mut invalid = 0usize;
    for &v in seq {
        if !(v >= lo && v <= hi && seen.insert(v)) {
            invalid += 1;
        }
    }
    let missing = (lo..=hi).filter(|v| !seen.contains(v)).collect();
    PermScan { invalid, missing }
}

fn route_length(inst: &Instance, route: &[usize], close_depot: bool) -> f64 {
    if route.is_empty() {
        return 0.0;
    }
    let mut len = 0.0;
    for w in route.windows(2) {
        len += inst.dist(w[0], w[1]);
    }
    if close_depot {
        len += inst.dist(0, route[0]) + inst.dist(*route.last().unwrap(), 0);
    }
    len
}

fn check_indices(seq: &[usize], hi: usize) -> Result<(), ProblemError> {
    for &v in seq {
        if v > hi {
            return Err(ProblemError::IndexOutOfRange(v));
        }
    }
    Ok(())
}

fn pfsp_makespan(processing: &[Vec<f64>], order: &[usize]) -> f64 {
    let m = processing[0].len();
    let mut prev = vec![0.0f64; m];
    for &job in order {
        let p = &processing[job - 1];
        let mut cur = vec![0.0f64; m];
        for j in 0..m {
            // C[k][j] = max(C[k][j-1], C[k-1][j]) + p[k][j]
            let prev_stage = if j == 0 { 0.0 } else { cur[j - 1] };
            cur[j] = prev_stage.max(prev[j]) + p[j];
        }
        prev = cur;
    }
    prev[m - 1]
}

pub(crate) struct Dispatch {
    pub makespan: f64,
    /// Operations that could not be started; nonzero iff the induced
    /// disjunctive graph is cyclic (or the schedules are malformed).
    pub unscheduled: usize,
}

/// Semi-active dispatch: start every operation at the earliest time
/// respecting its job predecessor and its machine predecessor.
pub(crate) fn jssp_dispatch(jobs: &[Vec<Operation>], schedules: &[Vec<usize>]) -> Dispatch {
    let n = jobs.len();
    let m = jobs[0].len();
    let mut ptr = vec![0usize; schedules.len()];
    let mut next_op = vec![0usize; n];
    let mut job_time = vec![0.0f64; n];
    let mut machine_time = vec![0.0f64; m];
    let mut scheduled = 0usize;
    let total = n * m;
    loop {
        let mut progress = false;
        for mach in 0..schedules.len().min(m) {
            while ptr[mach] < schedules[mach].len() {
                let job = schedules[mach][ptr[mach]];
                if job == 0 || job > n {
                    break;
                }
                let k = next_op[job - 1];
                if k >= m || jobs[job - 1][k].machine != mach + 1 {
                    break;
                }
                let start = job_time[job - 1].max(machine_time[mach]);
                let done = start + jobs[job - 1][k].duration;
                job_time[job - 1] = done;
                machine_time[mach] = done;
                next_op[job - 1] += 1;
                ptr[mach] += 1;
                scheduled += 1;
                progress = true;
            }
        }
        if !progress {
            break;
        }
    }
    Dispatch {
        makespan: job_time.iter().copied().fold(0.0, f64::max),
        unscheduled: total - scheduled,
    }
}

/// Objective value of a solution under its instance.
///
/// Total on in-range payloads, including infeasible ones: the TSP/CVRP
/// objective of a non-permutation is the length of the written route(s).
pub fn objective(inst: &Instance, sol: &Solution) -> Result<f64, ProblemError> {
    if !sol.fits(inst.kind()) {
        return Err(ProblemError::KindMismatch);
    }
    match (&inst.data, sol) {
        (InstanceData::Tsp { coords }, Solution::Tour(seq)) => {
            check_indices(seq, coords.len() - 1)?;
            if seq.len() < 2 {
                return Ok(0.0);
            }
            let mut len = route_length(inst, seq, false);
            len += inst.dist(*seq.last().unwrap(), seq[0]);
            Ok(len)
        }
        (InstanceData::Op { coords, .. }, Solution::PrizeRoute(seq)) => {
            check_indices(seq, coords.len() - 1)?;
            let mut seen = HashSet::new();
            let mut prize = 0.0;
            for &v in seq {
                if v != 0 && seen.insert(v) {
                    prize += inst.prize(v);
                }
            }
            Ok(prize)
        }
        (InstanceData::Cvrp { coords, .. }, Solution::RouteSet(routes)) => {
            for r in routes {
                check_indices(r, coords.len() - 1)?;
            }
            Ok(routes.iter().map(|r| route_length(inst, r, true)).sum())
        }
        (InstanceData::Mis { vertices, .. }, Solution::VertexSet(set))
        | (InstanceData::Mvc { vertices, .. }, Solution::VertexSet(set)) => {
            check_indices(set, vertices.saturating_sub(1))?;
            let distinct: HashSet<usize> = set.iter().copied().collect();
            Ok(distinct.len() as f64)
        }
        (InstanceData::Pfsp { processing }, Solution::JobOrder(order)) => {
            for &j in order {
                if j == 0 || j > processing.len() {
                    return Err(ProblemError::IndexOutOfRange(j));
                }
            }
            if order.is_empty() {
                return Ok(0.0);
            }
            Ok(pfsp_makespan(processing, order))
        }
        (InstanceData::Jssp { jobs }, Solution::MachineSchedules(schedules)) => {
            for s in schedules {
                for &j in s {
                    if j == 0 || j > jobs.len() {
                        return Err(ProblemError::IndexOutOfRange(j));
                    }
                }
            }
            let m = jobs[0].len();
            if schedules.len() != m {
                return Err(ProblemError::CyclicSchedule);
            }
            let d = jssp_dispatch(jobs, schedules);
            if d.unscheduled > 0 {
                return Err(ProblemError::CyclicSchedule);
            }
            Ok(d.makespan)
        }
        _ => Err(ProblemError::KindMismatch),
    }
}

fn push(violations: &mut Vec<Violation>, constraint: &str, detail: String) {
    violations.push(Violation {
        constraint: constraint.to_string(),
        detail,
    });
}

/// Full constraint check. `magnitude` is zero exactly when feasible.
pub fn check_feasibility(inst: &Instance, sol: &Solution) -> Result<ViolationReport, ProblemError> {
    if !sol.fits(inst.kind()) {
        return Err(ProblemError::KindMismatch);
    }
    let mut violations = Vec::new();
    let mut magnitude = 0.0f64;
    match (&inst.data, sol) {
        (InstanceData::Tsp { coords }, Solution::Tour(seq)) => {
            let scan = perm_scan(seq, 0, coords.len() - 1);
            if scan.invalid > 0 {
                push(
                    &mut violations,
                    "permutation",
                    format!("{} duplicate or out-of-range entries", scan.invalid),
                );
            }
            if !scan.missing.is_empty() {
                push(
                    &mut violations,
                    "coverage",
                    format!("missing nodes {:?}", scan.missing),
                );
            }
            magnitude += (scan.invalid + scan.missing.len()) as f64;
        }
        (InstanceData::Op { coords, budget, .. }, Solution::PrizeRoute(seq)) => {
            let mut seen = HashSet::new();
            let mut kept = Vec::new();
            let mut invalid = 0usize;
            for &v in seq {
                if v >= 1 && v < coords.len() && seen.insert(v) {
                    kept.push(v);
                } else {
                    invalid += 1;
                }
            }
            if invalid > 0 {
                push(
                    &mut violations,
                    "distinct-nodes",
                    format!("{} duplicate or out-of-range entries", invalid),
                );
                magnitude += invalid as f64;
            }
            let len = route_length(inst, &kept, true);
            if len > *budget {
                push(
                    &mut violations,
                    "budget",
                    format!("route length {:.4} exceeds budget {:.4}", len, budget),
                );
                magnitude += 1.0 + (len - budget) / budget;
            }
        }
        (
            InstanceData::Cvrp {
                coords, capacity, ..
            },
            Solution::RouteSet(routes),
        ) => {
            let n = coords.len();
            let mut seen = HashSet::new();
            let mut invalid = 0usize;
            for route in routes {
                let mut load = 0.0;
                for &v in route {
                    if v >= 1 && v < n && seen.insert(v) {
                        load += inst.demand(v);
                    } else {
                        invalid += 1;
                    }
                }
                if load > *capacity {
                    push(
                        &mut violations,
                        "capacity",
                        format!("route load {:.4} exceeds capacity {:.4} (overflow {:.4})",
                            load, capacity, load - capacity),
                    );
                    magnitude += 1.0 + (load - capacity) / capacity;
                }
            }
            if invalid > 0 {
                push(
                    &mut violations,
                    "partition",
                    format!("{} duplicate or out-of-range entries", invalid),
                );
                magnitude += invalid as f64;
            }
            let missing: Vec<usize> = (1..n).filter(|v| !seen.contains(v)).collect();
            if !missing.is_empty() {
                push(
                    &mut violations,
                    "coverage",
                    format!("uncovered customers {:?}", missing),
                );
                magnitude += missing.len() as f64;
            }
        }
        (InstanceData::Mis { vertices, edges }, Solution::VertexSet(set)) => {
            let invalid = set.iter().filter(|&&v| v >= *vertices).count();
            if invalid > 0 {
                push(
                    &mut violations,
                    "vertex-range",
                    format!("{} out-of-range vertices", invalid),
                );
                magnitude += invalid as f64;
            }
            let members: HashSet<usize> =
                set.iter().copied().filter(|&v| v < *vertices).collect();
            let conflicts: Vec<(usize, usize)> = edges
                .iter()
                .copied()
                .filter(|&(u, v)| members.contains(&u) && members.contains(&v))
                .collect();
            if !conflicts.is_empty() {
                push(
                    &mut violations,
                    "independence",
                    format!("{} conflict edges {:?}", conflicts.len(), conflicts),
                );
                magnitude += conflicts.len() as f64;
            }
        }
        (InstanceData::Mvc { vertices, edges }, Solution::VertexSet(set)) => {
            let invalid = set.iter().filter(|&&v| v >= *vertices).count();
            if invalid > 0 {
                push(
                    &mut violations,
                    "vertex-range",
                    format!("{} out-of-range vertices", invalid),
                );
                magnitude += invalid as f64;
            }
            let members: HashSet<usize> =
                set.iter().copied().filter(|&v| v < *vertices).collect();
            let uncovered: Vec<(usize, usize)> = edges
                .iter()
                .copied()
                .filter(|&(u, v)| !members.contains(&u) && !members.contains(&v))
                .collect();
            if !uncovered.is_empty() {
                push(
                    &mut violations,
                    "coverage",
                    format!("{} uncovered edges {:?}", uncovered.len(), uncovered),
                );
                magnitude += uncovered.len() as f64;
            }
        }
        (InstanceData::Pfsp { processing }, Solution::JobOrder(order)) => {
            let scan = perm_scan(order, 1, processing.len());
            if scan.invalid > 0 {
                push(
                    &mut violations,
                    "permutation",
                    format!("{} duplicate or out-of-range entries", scan.invalid),
                );
            }
            if !scan.missing.is_empty() {
                push(
                    &mut violations,
                    "coverage",
                    format!("missing jobs {:?}", scan.missing),
                );
            }
            magnitude += (scan.invalid + scan.missing.len()) as f64;
        }
        (InstanceData::Jssp { jobs }, Solution::MachineSchedules(schedules)) => {
            let n = jobs.len();
            let m = jobs[0].len();
            let mut perm_magnitude = 0usize;
            for mach in 0..schedules.len().max(m) {
                let empty: Vec<usize> = Vec::new();
                let seq = schedules.get(mach).unwrap_or(&empty);
                if mach >= m {
                    // Machine lists beyond the instance's machine count.
                    perm_magnitude += seq.len().max(1);
                    push(
                        &mut violations,
                        "machine-count",
                        format!("unexpected machine sequence #{}", mach + 1),
                    );
                    continue;
                }
                let scan = perm_scan(seq, 1, n);
                if scan.invalid > 0 || !scan.missing.is_empty() {
                    push(
                        &mut violations,
                        "machine-permutation",
                        format!(
                            "machine {}: {} invalid entries, missing jobs {:?}",
                            mach + 1,
                            scan.invalid,
                            scan.missing
                        ),
                    );
                }
                perm_magnitude += scan.invalid + scan.missing.len();
            }
            magnitude += perm_magnitude as f64;
            if perm_magnitude == 0 {
                let d = jssp_dispatch(jobs, schedules);
                if d.unscheduled > 0 {
                    push(
                        &mut violations,
                        "precedence",
                        format!("{} operations blocked by a machine-order cycle", d.unscheduled),
                    );
                    magnitude += d.unscheduled as f64;
                }
            }
        }
        _ => return Err(ProblemError::KindMismatch),
    }
    Ok(ViolationReport {
        feasible: violations.is_empty(),
        violations,
        magnitude,
    })
}

/// The scalar `v(x)`; zero exactly when the solution is feasible.
pub fn violation_magnitude(inst: &Instance, sol: &Solution) -> Result<f64, ProblemError> {
    Ok(check_feasibility(inst, sol)?.magnitude)
}

/// Conservative locality constant for the repair operator on this
/// instance: the repair moves a solution by at most `alpha * v(x)`.
///
/// TSP/PFSP/MIS/MVC use count metrics where every unit of violation is
/// fixed by one edit (`alpha = 1`). OP node removal and CVRP route
/// splitting can move many elements per violated budget/capacity
/// constraint, so their constants scale with instance size.
pub fn locality_alpha(inst: &Instance) -> f64 {
    let n = inst.size() as f64;
    match inst.kind() {
        ProblemKind::Tsp | ProblemKind::Pfsp | ProblemKind::Mis | ProblemKind::Mvc => 1.0,
        ProblemKind::Op => n,
        ProblemKind::Cvrp => 2.0 * n + 1.0,
        // +1 covers entry deletions on top of a full cycle-breaking
        // reorder, which can rearrange up to n entries on each machine
        ProblemKind::Jssp => n * inst.machines().unwrap_or(1) as f64 + 1.0,
    }
}
