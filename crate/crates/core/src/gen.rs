//! Seeded instance generation and adversarial solution fuzzing.

use crate::error::ProblemError;
use crate::problems::{InstanceData, Operation, ProblemKind, Solution};
use crate::Instance;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distribution {
    /// Coordinates uniform in the unit square.
    Uniform,
    /// Gaussian mixture with 3 components, clamped to the unit square.
    GaussianMixture,
    /// Erdős–Rényi with edge probability 0.15.
    ErdosRenyi,
    /// Barabási–Albert preferential attachment, 3 edges per new vertex.
    BarabasiAlbert,
}

impl Distribution {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "uniform" => Some(Distribution::Uniform),
            "gm" => Some(Distribution::GaussianMixture),
            "er" => Some(Distribution::ErdosRenyi),
            "ba" => Some(Distribution::BarabasiAlbert),
            _ => None,
        }
    }

    pub fn default_for(kind: ProblemKind) -> Self {
        match kind {
            ProblemKind::Mis | ProblemKind::Mvc => Distribution::ErdosRenyi,
            _ => Distribution::Uniform,
        }
    }
}

fn coords(rng: &mut ChaCha8Rng, n: usize, dist: Distribution) -> Vec<(f64, f64)> {
    match dist {
        Distribution::GaussianMixture => {
            let centers: Vec<(f64, f64)> =
                (0..3).map(|_| (rng.gen::<f64>(), rng.gen::<f64>())).collect();
            (0..n)
                .map(|_| {
                    let (cx, cy) = centers[rng.gen_range(0..3)];
                    let dx: f64 = rng.sample::<f64, _>(rand::distributions::Standard) - 0.5;
                    let dy: f64 = rng.sample::<f64, _>(rand::distributions::Standard) - 0.5;
                    (
                        (cx + 0.15 * dx).clamp(0.0, 1.0),
                        (cy + 0.15 * dy).clamp(0.0, 1.0),
                    )
                })
                .collect()
        }
        _ => (0..n).map(|_| (rng.gen(), rng.gen())).collect(),
    }
}

fn graph(rng: &mut ChaCha8Rng, n: usize, dist: Distribution) -> Vec<(usize, usize)> {
    match dist {
        Distribution::BarabasiAlbert => {
            let m = 3usize.min(n.saturating_sub(1)).max(1);
            let mut edges: Vec<(usize, usize)> = Vec::new();
            let mut endpoints: Vec<usize> = Vec::new();
            for v in 1..n {
                let mut targets: Vec<usize> = Vec::new();
                while targets.len() < m.min(v) {
                    let t = if endpoints.is_empty() || rng.gen_bool(0.5) {
                        rng.gen_range(0..v)
                    } else {
                        endpoints[rng.gen_range(0..endpoints.len())]
                    };
                    if t < v && !targets.contains(&t) {
                        targets.push(t);
                    }
                }
                for t in targets {
                    edges.push((t.min(v), t.max(v)));
                    endpoints.push(t);
                    endpoints.push(v);
                }
            }
            edges.sort_unstable();
            edges.dedup();
            edges
        }
        _ => {
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if rng.gen_bool(0.15) {
                        edges.push((u, v));
                    }
                }
            }
            edges
        }
    }
}

/// Seeded deterministic instance of the requested kind and size. For
/// scheduling kinds, `machines` defaults to 3 when unset.
pub fn random_instance(
    kind: ProblemKind,
    size: usize,
    machines: Option<usize>,
    seed: u64,
    dist: Distribution,
) -> Result<Instance, ProblemError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = machines.unwrap_or(3).max(1);
    let data = match kind {
        ProblemKind::Tsp => InstanceData::Tsp {
            coords: coords(&mut rng, size, dist),
        },
        ProblemKind::Op => {
            let c = coords(&mut rng, size, dist);
            let prizes = (1..size).map(|_| rng.gen_range(1..=10) as f64).collect();
            let budget = 2.0 + rng.gen::<f64>() * 2.0;
            InstanceData::Op {
                coords: c,
                prizes,
                budget,
            }
        }
        ProblemKind::Cvrp => {
            let c = coords(&mut rng, size, dist);
            let demands = (1..size).map(|_| rng.gen_range(1..=9) as f64).collect();
            InstanceData::Cvrp {
                coords: c,
                demands,
                capacity: 30.0,
            }
        }
        ProblemKind::Mis => InstanceData::Mis {
            vertices: size,
            edges: graph(&mut rng, size, dist),
        },
        ProblemKind::Mvc => InstanceData::Mvc {
            vertices: size,
            edges: graph(&mut rng, size, dist),
        },
        ProblemKind::Pfsp => InstanceData::Pfsp {
            processing: (0..size)
                .map(|_| (0..m).map(|_| rng.gen_range(1..=99) as f64).collect())
                .collect(),
        },
        ProblemKind::Jssp => InstanceData::Jssp {
            jobs: (0..size)
                .map(|_| {
                    let mut order: Vec<usize> = (1..=m).collect();
                    order.shuffle(&mut rng);
                    order
                        .into_iter()
                        .map(|machine| Operation {
                            machine,
                            duration: rng.gen_range(1..=99) as f64,
                        })
                        .collect()
                })
                .collect(),
        },
    };
    Instance::new(format!("{}-{}-{}", kind.name(), size, seed), seed, data)
}

fn random_seq(rng: &mut ChaCha8Rng, max_len: usize, hi: usize) -> Vec<usize> {
    let len = rng.gen_range(0..=max_len);
    (0..len).map(|_| rng.gen_range(0..=hi)).collect()
}

/// Adversarial solution of the right form: random entries with
/// duplicates, omissions, out-of-range ids, interior depots, overloads
/// and the rest, for exercising repair and the violation accounting.
pub fn fuzz_solution(inst: &Instance, seed: u64) -> Solution {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = inst.size();
    // slightly out-of-range ids appear with small probability
    let hi = n + usize::from(rng.gen_bool(0.3));
    match inst.kind() {
        ProblemKind::Tsp => Solution::Tour(random_seq(&mut rng, 2 * n, hi)),
        ProblemKind::Op => Solution::PrizeRoute(random_seq(&mut rng, 2 * n, hi)),
        ProblemKind::Cvrp => {
            let routes = rng.gen_range(0..=3.max(n / 2));
            Solution::RouteSet(
                (0..routes)
                    .map(|_| random_seq(&mut rng, n, hi))
                    .collect(),
            )
        }
        ProblemKind::Mis | ProblemKind::Mvc => {
            Solution::VertexSet(random_seq(&mut rng, n + 2, hi))
        }
        ProblemKind::Pfsp => Solution::JobOrder(random_seq(&mut rng, 2 * n, hi)),
        ProblemKind::Jssp => {
            let m = inst.machines().unwrap_or(1);
            let lists = if rng.gen_bool(0.2) {
                rng.gen_range(0..=m + 1)
            } else {
                m
            };
            Solution::MachineSchedules(
                (0..lists)
                    .map(|_| random_seq(&mut rng, 2 * n, hi))
                    .collect(),
            )
        }
    }
}
