//! Canonical forms and the solution distance metric.

use super::Solution;
use crate::error::ProblemError;
use std::collections::BTreeSet;

/// Representation-independent canonical form: vertex sets are sorted and
/// deduplicated, route sets drop empty routes and sort by first customer.
pub fn canonical_solution(sol: &Solution) -> Solution {
    match sol {
        Solution::VertexSet(ids) => {
            let set: BTreeSet<usize> = ids.iter().copied().collect();
            Solution::VertexSet(set.into_iter().collect())
        }
        Solution::RouteSet(routes) => {
            let mut routes: Vec<Vec<usize>> =
                routes.iter().filter(|r| !r.is_empty()).cloned().collect();
            routes.sort_by_key(|r| r[0]);
            Solution::RouteSet(routes)
        }
        other => other.clone(),
    }
}

fn levenshtein(a: &[usize], b: &[usize]) -> usize {
    let (la, lb) = (a.len(), b.len());
    let mut prev: Vec<usize> = (0..=lb).collect();
    for i in 1..=la {
        let mut cur = vec![i; lb + 1];
        for j in 1..=lb {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        prev = cur;
    }
    prev[lb]
}

fn aligned_list_distance(a: &[Vec<usize>], b: &[Vec<usize>]) -> usize {
    let mut total = 0;
    let common = a.len().min(b.len());
    for i in 0..common {
        total += levenshtein(&a[i], &b[i]);
    }
    for extra in &a[common..] {
        total += extra.len();
    }
    for extra in &b[common..] {
        total += extra.len();
    }
    total
}

/// Element-level edit distance between two solutions of the same form,
/// computed on canonical forms. Sets use symmetric-difference size.
pub fn solution_distance(a: &Solution, b: &Solution) -> Result<f64, ProblemError> {
    if !a.same_form(b) {
        return Err(ProblemError::KindMismatch);
    }
    let (a, b) = (canonical_solution(a), canonical_solution(b));
    let d = match (&a, &b) {
        (Solution::Tour(x), Solution::Tour(y))
        | (Solution::PrizeRoute(x), Solution::PrizeRoute(y))
        | (Solution::JobOrder(x), Solution::JobOrder(y)) => levenshtein(x, y),
        (Solution::VertexSet(x), Solution::VertexSet(y)) => {
            let xs: BTreeSet<usize> = x.iter().copied().collect();
            let ys: BTreeSet<usize> = y.iter().copied().collect();
            xs.symmetric_difference(&ys).count()
        }
        (Solution::RouteSet(x), Solution::RouteSet(y))
        | (Solution::MachineSchedules(x), Solution::MachineSchedules(y)) => {
            aligned_list_distance(x, y)
        }
        _ => unreachable!("same_form checked"),
    };
    Ok(d as f64)
}
