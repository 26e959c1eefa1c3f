//! Feasibility repair operators.
//!
//! Each operator maps an arbitrary solution of the right form to a
//! feasible one, leaves feasible inputs untouched, and moves the input
//! by at most `alpha * v` in solution distance, where `v` is the
//! violation magnitude and `alpha` the documented per-kind constant.
//!
//! Tie-breaking is deterministic throughout: first-found position wins
//! on equal cost, conflict and uncovered edges are processed in sorted
//! order, and equal-degree conflicts drop the first endpoint.

use crate::error::ProblemError;
use crate::problems::{
    canonical_solution, check_feasibility, locality_alpha, solution_distance, Instance,
    InstanceData, Solution,
};
use std::collections::HashSet;

#[derive(Debug, Clone, PartialEq)]
pub struct RepairOutcome {
    pub repaired: Solution,
    pub modified: bool,
    pub distance_moved: f64,
    pub input_magnitude: f64,
    pub alpha_bound: f64,
}

fn outcome(
    inst: &Instance,
    input: &Solution,
    repaired: Solution,
) -> Result<RepairOutcome, ProblemError> {
    // canonical comparison: dropping an empty route or reordering a set
    // listing does not count as a modification
    let modified = canonical_solution(&repaired) != canonical_solution(input);
    Ok(RepairOutcome {
        distance_moved: solution_distance(input, &repaired)?,
        input_magnitude: check_feasibility(inst, input)?.magnitude,
        alpha_bound: locality_alpha(inst),
        repaired,
        modified,
    })
}

/// Keep the first occurrence of each id in `lo..=hi`, dropping the rest.
fn dedupe(seq: &[usize], lo: usize, hi: usize, seen: &mut HashSet<usize>) -> (Vec<usize>, bool) {
    let mut kept = Vec::with_capacity(seq.len());
    let mut dropped = false;
    for &v in seq {
        if v >= lo && v <= hi && seen.insert(v) {
            kept.push(v);
        } else {
            dropped = true;
        }
    }
    (kept, dropped)
}

fn closed_length(inst: &Instance, route: &[usize]) -> f64 {
    if route.is_empty() {
        return 0.0;
    }
    let mut len = inst.dist(0, route[0]) + inst.dist(*route.last().unwrap(), 0);
    for w in route.windows(2) {
        len += inst.dist(w[0], w[1]);
    }
    len
}

/// Greedy cheapest insertion of `v` into the cyclic tour `r`, scanning
/// i = 1..|r| with modular wraparound; position 0 cost is d(v, r[0]).
fn insert_cheapest_cyclic(inst: &Instance, r: &mut Vec<usize>, v: usize) {
    let len = r.len();
    let mut best_pos = 0usize;
    let mut best_cost = inst.dist(v, r[0]);
    for i in 1..=len {
        let a = r[i - 1];
        let b = r[i % len];
        let cost = inst.dist(a, v) + inst.dist(v, b) - inst.dist(a, b);
        if cost < best_cost {
            best_cost = cost;
            best_pos = i;
        }
    }
    r.insert(best_pos % (len + 1).max(1), v);
}

pub fn repair_tsp(inst: &Instance, tour: &[usize]) -> Result<RepairOutcome, ProblemError> {
    let n = inst.size();
    let mut seen = HashSet::new();
    let (mut kept, _) = dedupe(tour, 0, n - 1, &mut seen);
    let mut missing: Vec<usize> = (0..n).filter(|v| !seen.contains(v)).collect();
    if kept.is_empty() {
        // Alg. 4's insertion cost reads r'[0]; seed with the lowest
        // missing node when dedupe leaves nothing.
        kept.push(missing.remove(0));
    }
    for v in missing {
        insert_cheapest_cyclic(inst, &mut kept, v);
    }
    outcome(inst, &Solution::Tour(tour.to_vec()), Solution::Tour(kept))
}

pub fn repair_op(inst: &Instance, route: &[usize]) -> Result<RepairOutcome, ProblemError> {
    let n = inst.size();
    let budget = match &inst.data {
        InstanceData::Op { budget, .. } => *budget,
        _ => return Err(ProblemError::KindMismatch),
    };
    let mut seen = HashSet::new();
    let (mut kept, _) = dedupe(route, 1, n - 1, &mut seen);
    while closed_length(inst, &kept) > budget && !kept.is_empty() {
        // remove the node with the worst prize / distance-contribution
        // ratio, recomputed each iteration
        let mut worst = 0usize;
        let mut worst_ratio = f64::INFINITY;
        for (i, &v) in kept.iter().enumerate() {
            let prev = if i == 0 { 0 } else { kept[i - 1] };
            let next = if i + 1 == kept.len() { 0 } else { kept[i + 1] };
            let contrib =
                (inst.dist(prev, v) + inst.dist(v, next) - inst.dist(prev, next)).max(1e-12);
            let ratio = inst.prize(v) / contrib;
            if ratio < worst_ratio {
                worst_ratio = ratio;
                worst = i;
            }
        }
        kept.remove(worst);
    }
    if closed_length(inst, &kept) > budget {
        kept.clear();
    }
    outcome(
        inst,
        &Solution::PrizeRoute(route.to_vec()),
        Solution::PrizeRoute(kept),
    )
}

pub fn repair_cvrp(inst: &Instance, routes: &[Vec<usize>]) -> Result<RepairOutcome, ProblemError> {
    let n = inst.size();
    let capacity = match &inst.data {
        InstanceData::Cvrp { capacity, .. } => *capacity,
        _ => return Err(ProblemError::KindMismatch),
    };
    for v in 1..n {
        if inst.demand(v) > capacity {
            return Err(ProblemError::InvalidInstance(format!(
                "demand of customer {} exceeds vehicle capacity",
                v
            )));
        }
    }
    // phase 1: per-route cleanup with a shared seen set, so duplicates
    // across routes (and interior depots) are dropped as well
    let mut seen = HashSet::new();
    let mut fixed: Vec<Vec<usize>> = Vec::new();
    for r in routes {
        let (kept, _) = dedupe(r, 1, n - 1, &mut seen);
        if !kept.is_empty() {
            fixed.push(kept);
        }
    }
    // phase 2: cheapest insertion of missing customers over all routes
    // and positions
    let missing: Vec<usize> = (1..n).filter(|v| !seen.contains(v)).collect();
    for v in missing {
        if fixed.is_empty() {
            fixed.push(vec![v]);
            continue;
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for (k, r) in fixed.iter().enumerate() {
            for i in 0..=r.len() {
                let a = if i == 0 { 0 } else { r[i - 1] };
                let b = if i == r.len() { 0 } else { r[i] };
                let cost = inst.dist(a, v) + inst.dist(v, b) - inst.dist(a, b);
                if best.map_or(true, |(c, _, _)| cost < c) {
                    best = Some((cost, k, i));
                }
            }
        }
        let (_, k, i) = best.unwrap();
        fixed[k].insert(i, v);
    }
    // phase 3: split overloaded routes at the cheapest admissible point
    let load = |r: &[usize]| r.iter().map(|&v| inst.demand(v)).sum::<f64>();
    let mut k = 0usize;
    while k < fixed.len() {
        while load(&fixed[k]) > capacity {
            let r = &fixed[k];
            let mut best: Option<(f64, usize)> = None;
            let mut prefix = 0.0;
            for i in 1..r.len() {
                prefix += inst.demand(r[i - 1]);
                if prefix > capacity {
                    break;
                }
                let cost =
                    inst.dist(r[i - 1], 0) + inst.dist(0, r[i]) - inst.dist(r[i - 1], r[i]);
                if best.map_or(true, |(c, _)| cost < c) {
                    best = Some((cost, i));
                }
            }
            let (_, i) = best.expect("per-customer demands fit capacity");
            let tail = fixed[k].split_off(i);
            fixed.push(tail);
        }
        k += 1;
    }
    outcome(
        inst,
        &Solution::RouteSet(routes.to_vec()),
        Solution::RouteSet(fixed),
    )
}

pub fn repair_mis(inst: &Instance, set: &[usize]) -> Result<RepairOutcome, ProblemError> {
    let (vertices, edges) = match &inst.data {
        InstanceData::Mis { vertices, edges } => (*vertices, edges),
        _ => return Err(ProblemError::KindMismatch),
    };
    let in_range: Vec<usize> = set.iter().copied().filter(|&v| v < vertices).collect();
    let dropped_oor = in_range.len() != set.len();
    let mut members: HashSet<usize> = in_range.iter().copied().collect();
    let mut sorted_edges: Vec<(usize, usize)> = edges.clone();
    sorted_edges.sort_unstable();
    let mut removed_any = false;
    loop {
        let conflict = sorted_edges
            .iter()
            .copied()
            .find(|&(u, v)| members.contains(&u) && members.contains(&v));
        let Some((u, v)) = conflict else { break };
        let deg = |x: usize| {
            sorted_edges
                .iter()
                .filter(|&&(a, b)| (a == x && members.contains(&b)) || (b == x && members.contains(&a)))
                .count()
        };
        // higher degree within the set goes; ties drop u
        let out = if deg(v) > deg(u) { v } else { u };
        members.remove(&out);
        removed_any = true;
    }
    let repaired = if removed_any || dropped_oor {
        let mut s: Vec<usize> = members.into_iter().collect();
        s.sort_unstable();
        Solution::VertexSet(s)
    } else {
        Solution::VertexSet(set.to_vec())
    };
    outcome(inst, &Solution::VertexSet(set.to_vec()), repaired)
}

pub fn repair_mvc(inst: &Instance, set: &[usize]) -> Result<RepairOutcome, ProblemError> {
    let (vertices, edges) = match &inst.data {
        InstanceData::Mvc { vertices, edges } => (*vertices, edges),
        _ => return Err(ProblemError::KindMismatch),
    };
    let in_range: Vec<usize> = set.iter().copied().filter(|&v| v < vertices).collect();
    let dropped_oor = in_range.len() != set.len();
    let mut members: HashSet<usize> = in_range.iter().copied().collect();
    let mut sorted_edges: Vec<(usize, usize)> = edges.clone();
    sorted_edges.sort_unstable();
    let mut added: Vec<usize> = Vec::new();
    loop {
        let uncovered: Vec<(usize, usize)> = sorted_edges
            .iter()
            .copied()
            .filter(|&(u, v)| !members.contains(&u) && !members.contains(&v))
            .collect();
        let Some(&(u, v)) = uncovered.first() else { break };
        let deg = |x: usize| {
            uncovered
                .iter()
                .filter(|&&(a, b)| a == x || b == x)
                .count()
        };
        // endpoint covering at least as many uncovered edges; ties add u
        let pick = if deg(u) >= deg(v) { u } else { v };
        members.insert(pick);
        added.push(pick);
    }
    let repaired = if !added.is_empty() || dropped_oor {
        let mut s: Vec<usize> = members.into_iter().collect();
        s.sort_unstable();
        Solution::VertexSet(s)
    } else {
        Solution::VertexSet(set.to_vec())
    };
    outcome(inst, &Solution::VertexSet(set.to_vec()), repaired)
}

pub fn repair_pfsp(inst: &Instance, order: &[usize]) -> Result<RepairOutcome, ProblemError> {
    let processing = match &inst.data {
        InstanceData::Pfsp { processing } => processing,
        _ => return Err(ProblemError::KindMismatch),
    };
    let n = processing.len();
    let mut seen = HashSet::new();
    let (mut kept, _) = dedupe(order, 1, n, &mut seen);
    let missing: Vec<usize> = (1..=n).filter(|j| !seen.contains(j)).collect();
    for j in missing {
        // evaluate every insertion position by full makespan recomputation
        let mut best_pos = 0usize;
        let mut best_make = f64::INFINITY;
        for i in 0..=kept.len() {
            let mut candidate = kept.clone();
            candidate.insert(i, j);
            let make = crate::problems::objective(inst, &Solution::JobOrder(candidate))?;
            if make < best_make {
                best_make = make;
                best_pos = i;
            }
        }
        kept.insert(best_pos, j);
    }
    outcome(
        inst,
        &Solution::JobOrder(order.to_vec()),
        Solution::JobOrder(kept),
    )
}

pub fn repair_jssp(inst: &Instance, schedules: &[Vec<usize>]) -> Result<RepairOutcome, ProblemError> {
    let jobs = match &inst.data {
        InstanceData::Jssp { jobs } => jobs,
        _ => return Err(ProblemError::KindMismatch),
    };
    let n = jobs.len();
    let m = jobs[0].len();
    // phase 1: per-machine permutation repair, appending missing jobs
    let mut fixed: Vec<Vec<usize>> = Vec::with_capacity(m);
    for mach in 0..m {
        let empty: Vec<usize> = Vec::new();
        let seq = schedules.get(mach).unwrap_or(&empty);
        let mut seen = HashSet::new();
        let (mut kept, _) = dedupe(seq, 1, n, &mut seen);
        kept.extend((1..=n).filter(|j| !seen.contains(j)));
        fixed.push(kept);
    }
    // phase 2: resolve machine-order cycles against job precedence. The
    // reorder runs only when the combined disjunctive graph is cyclic;
    // acyclic schedules pass through untouched so repair stays idempotent.
    if crate::problems::objective(inst, &Solution::MachineSchedules(fixed.clone())).is_err() {
        // tau: operations in (stage, job) order is a topological order of
        // the job-precedence chains
        let stage_of = |mach: usize, job: usize| {
            jobs[job - 1]
                .iter()
                .position(|op| op.machine == mach + 1)
                .expect("each job visits each machine")
        };
        for (mach, seq) in fixed.iter_mut().enumerate() {
            seq.sort_by_key(|&job| (stage_of(mach, job), job));
        }
    }
    outcome(
        inst,
        &Solution::MachineSchedules(schedules.to_vec()),
        Solution::MachineSchedules(fixed),
    )
}

/// Kind dispatch to the operator above.
pub fn repair(inst: &Instance, sol: &Solution) -> Result<RepairOutcome, ProblemError> {
    match sol {
        Solution::Tour(seq) => repair_tsp(inst, seq),
        Solution::PrizeRoute(seq) => repair_op(inst, seq),
        Solution::RouteSet(routes) => repair_cvrp(inst, routes),
        Solution::VertexSet(set) => match inst.kind() {
            crate::problems::ProblemKind::Mis => repair_mis(inst, set),
            crate::problems::ProblemKind::Mvc => repair_mvc(inst, set),
            _ => Err(ProblemError::KindMismatch),
        },
        Solution::JobOrder(order) => repair_pfsp(inst, order),
        Solution::MachineSchedules(s) => repair_jssp(inst, s),
    }
}
