//! Exhaustive reference solvers and classical baselines.
//!
//! These are deliberately independent of the repair and decode code
//! paths: straight enumeration, used to supply reference optima for gap
//! metrics and to enumerate feasible solutions for idempotence tests.

use crate::error::OracleError;
use crate::problems::{check_feasibility, objective, ProblemKind, Sense, Solution};
use crate::Instance;
use std::collections::HashSet;
use std::time::{Duration, Instant};

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub solution: Solution,
    pub value: f64,
    pub explored: u64,
    pub wall: Duration,
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, x);
            out.push(tail);
        }
    }
    out
}

struct Search {
    best: Option<(f64, Solution)>,
    explored: u64,
    sense: Sense,
}

impl Search {
    fn new(sense: Sense) -> Self {
        Search {
            best: None,
            explored: 0,
            sense,
        }
    }

    fn offer(&mut self, value: f64, sol: impl FnOnce() -> Solution) {
        self.explored += 1;
        let better = match (&self.best, self.sense) {
            (None, _) => true,
            (Some((b, _)), Sense::Min) => value < *b,
            (Some((b, _)), Sense::Max) => value > *b,
        };
        if better {
            self.best = Some((value, sol()));
        }
    }
}

/// Exact optimum by exhaustive enumeration. Size caps keep runtimes at
/// desk scale; larger instances return `TooLarge`.
pub fn brute_force(inst: &Instance) -> Result<OracleResult, OracleError> {
    let t0 = Instant::now();
    let n = inst.size();
    let mut search = Search::new(inst.kind().sense());
    match inst.kind() {
        ProblemKind::Tsp => {
            if n > 9 {
                return Err(OracleError::TooLarge);
            }
            // fix node 0 first to quotient rotations
            let rest: Vec<usize> = (1..n).collect();
            for tail in permutations(&rest) {
                let mut tour = vec![0];
                tour.extend(tail);
                let v = objective(inst, &Solution::Tour(tour.clone()))?;
                search.offer(v, || Solution::Tour(tour));
            }
        }
        ProblemKind::Op => {
            if n > 12 {
                return Err(OracleError::TooLarge);
            }
            op_dfs(inst, &mut Vec::new(), &mut vec![false; n], 0.0, 0.0, &mut search);
        }
        ProblemKind::Cvrp => {
            if n > 7 {
                return Err(OracleError::TooLarge);
            }
            let customers: Vec<usize> = (1..n).collect();
            for perm in permutations(&customers) {
                for routes in splits(inst, &perm) {
                    let sol = Solution::RouteSet(routes);
                    let v = objective(inst, &sol)?;
                    search.offer(v, || sol);
                }
            }
        }
        ProblemKind::Mis | ProblemKind::Mvc => {
            if n > 20 {
                return Err(OracleError::TooLarge);
            }
            for mask in 0u32..(1 << n) {
                let set: Vec<usize> = (0..n).filter(|v| mask >> v & 1 == 1).collect();
                let sol = Solution::VertexSet(set);
                if !check_feasibility(inst, &sol)?.feasible {
                    search.explored += 1;
                    continue;
                }
                let v = objective(inst, &sol)?;
                search.offer(v, || sol);
            }
        }
        ProblemKind::Pfsp => {
            if n > 8 {
                return Err(OracleError::TooLarge);
            }
            let jobs: Vec<usize> = (1..=n).collect();
            for perm in permutations(&jobs) {
                let v = objective(inst, &Solution::JobOrder(perm.clone()))?;
                search.offer(v, || Solution::JobOrder(perm));
            }
        }
        ProblemKind::Jssp => {
            let m = inst.machines().unwrap_or(0);
            if n * m > 9 {
                return Err(OracleError::TooLarge);
            }
            let jobs: Vec<usize> = (1..=n).collect();
            let per_machine = permutations(&jobs);
            let mut idx = vec![0usize; m];
            loop {
                let schedules: Vec<Vec<usize>> =
                    idx.iter().map(|&i| per_machine[i].clone()).collect();
                let sol = Solution::MachineSchedules(schedules);
                match objective(inst, &sol) {
                    Ok(v) => search.offer(v, || sol),
                    Err(_) => search.explored += 1, // cyclic tuple, skip
                }
                // odometer over machine-sequence tuples
                let mut carry = 0;
                while carry < m {
                    idx[carry] += 1;
                    if idx[carry] < per_machine.len() {
                        break;
                    }
                    idx[carry] = 0;
                    carry += 1;
                }
                if carry == m {
                    break;
                }
            }
        }
    }
    let (value, solution) = search.best.expect("every instance has a feasible solution");
    debug_assert!(check_feasibility(inst, &solution)?.feasible);
    Ok(OracleResult {
        solution,
        value,
        explored: search.explored,
        wall: t0.elapsed(),
    })
}

fn op_dfs(
    inst: &Instance,
    route: &mut Vec<usize>,
    used: &mut [bool],
    len_open: f64,
    prize: f64,
    search: &mut Search,
) {
    let budget = match &inst.data {
        crate::problems::InstanceData::Op { budget, .. } => *budget,
        _ => unreachable!(),
    };
    let last = route.last().copied().unwrap_or(0);
    if len_open + inst.dist(last, 0) <= budget {
        search.offer(prize, || Solution::PrizeRoute(route.clone()));
    }
    for v in 1..inst.size() {
        if used[v] {
            continue;
        }
        let extended = len_open + inst.dist(last, v);
        if extended + inst.dist(v, 0) > budget {
            continue;
        }
        used[v] = true;
        route.push(v);
        op_dfs(inst, route, used, extended, prize + inst.prize(v), search);
        route.pop();
        used[v] = false;
    }
}

/// All ways to cut a customer permutation into consecutive routes whose
/// loads fit the capacity.
fn splits(inst: &Instance, perm: &[usize]) -> Vec<Vec<Vec<usize>>> {
    let capacity = match &inst.data {
        crate::problems::InstanceData::Cvrp { capacity, .. } => *capacity,
        _ => unreachable!(),
    };
    if perm.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::new();
    let k = perm.len();
    for mask in 0u32..(1 << (k - 1)) {
        let mut routes: Vec<Vec<usize>> = vec![Vec::new()];
        for (i, &v) in perm.iter().enumerate() {
            routes.last_mut().unwrap().push(v);
            if i + 1 < k && mask >> i & 1 == 1 {
                routes.push(Vec::new());
            }
        }
        let ok = routes
            .iter()
            .all(|r| r.iter().map(|&v| inst.demand(v)).sum::<f64>() <= capacity);
        if ok {
            out.push(routes);
        }
    }
    out
}

/// Greedy nearest-unvisited tour from `start`; ties take the lowest
/// index. Always a full permutation.
pub fn nearest_neighbor_tsp(inst: &Instance, start: usize) -> Solution {
    let n = inst.size();
    let mut tour = vec![start];
    let mut visited = vec![false; n];
    visited[start] = true;
    while tour.len() < n {
        let last = *tour.last().unwrap();
        let mut pick = None;
        for v in 0..n {
            if visited[v] {
                continue;
            }
            let d = inst.dist(last, v);
            if pick.map_or(true, |(bd, _)| d < bd) {
                pick = Some((d, v));
            }
        }
        let (_, v) = pick.unwrap();
        visited[v] = true;
        tour.push(v);
    }
    Solution::Tour(tour)
}

/// All feasible solutions in canonical order, truncated to `cap`.
pub fn enumerate_feasible(inst: &Instance, cap: usize) -> Result<Vec<Solution>, OracleError> {
    let n = inst.size();
    let mut out: Vec<Solution> = Vec::new();
    let push = |sol: Solution, out: &mut Vec<Solution>| out.len() < cap && {
        out.push(sol);
        out.len() < cap
    };
    match inst.kind() {
        ProblemKind::Tsp => {
            if n > 9 {
                return Err(OracleError::TooLarge);
            }
            let nodes: Vec<usize> = (0..n).collect();
            for perm in permutations(&nodes) {
                if !push(Solution::Tour(perm), &mut out) {
                    break;
                }
            }
        }
        ProblemKind::Op => {
            if n > 12 {
                return Err(OracleError::TooLarge);
            }
            let mut stack = vec![Vec::<usize>::new()];
            while let Some(route) = stack.pop() {
                let sol = Solution::PrizeRoute(route.clone());
                if check_feasibility(inst, &sol)?.feasible && !push(sol, &mut out) {
                    break;
                }
                // extend lexicographically; push in reverse for in-order pop
                for v in (1..n).rev() {
                    if !route.contains(&v) {
                        let mut next = route.clone();
                        next.push(v);
                        let within = check_feasibility(inst, &Solution::PrizeRoute(next.clone()))?;
                        if within.feasible {
                            stack.push(next);
                        }
                    }
                }
            }
        }
        ProblemKind::Cvrp => {
            if n > 7 {
                return Err(OracleError::TooLarge);
            }
            let customers: Vec<usize> = (1..n).collect();
            let mut seen: HashSet<Solution> = HashSet::new();
            'outer: for perm in permutations(&customers) {
                for routes in splits(inst, &perm) {
                    let sol = crate::problems::canonical_solution(&Solution::RouteSet(routes));
                    if seen.insert(sol.clone()) && !push(sol, &mut out) {
                        break 'outer;
                    }
                }
            }
        }
        ProblemKind::Mis | ProblemKind::Mvc => {
            if n > 20 {
                return Err(OracleError::TooLarge);
            }
            for mask in 0u32..(1 << n) {
                let set: Vec<usize> = (0..n).filter(|v| mask >> v & 1 == 1).collect();
                let sol = Solution::VertexSet(set);
                if check_feasibility(inst, &sol)?.feasible && !push(sol, &mut out) {
                    break;
                }
            }
        }
        ProblemKind::Pfsp => {
            if n > 8 {
                return Err(OracleError::TooLarge);
            }
            let jobs: Vec<usize> = (1..=n).collect();
            for perm in permutations(&jobs) {
                if !push(Solution::JobOrder(perm), &mut out) {
                    break;
                }
            }
        }
        ProblemKind::Jssp => {
            let m = inst.machines().unwrap_or(0);
            if n * m > 9 {
                return Err(OracleError::TooLarge);
            }
            let jobs: Vec<usize> = (1..=n).collect();
            let per_machine = permutations(&jobs);
            let mut idx = vec![0usize; m];
            'odo: loop {
                let schedules: Vec<Vec<usize>> =
                    idx.iter().map(|&i| per_machine[i].clone()).collect();
                let sol = Solution::MachineSchedules(schedules);
                if check_feasibility(inst, &sol)?.feasible && !push(sol, &mut out) {
                    break;
                }
                let mut carry = 0;
                while carry < m {
                    idx[carry] += 1;
                    if idx[carry] < per_machine.len() {
                        continue 'odo;
                    }
                    idx[carry] = 0;
                    carry += 1;
                }
                break;
            }
        }
    }
    Ok(out)
}
