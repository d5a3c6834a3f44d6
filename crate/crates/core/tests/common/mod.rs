#![allow(dead_code)]

use proptest::prelude::*;
use specdo_core::{Edge, Objective, Quadratic, Topology};

/// Directed graph on `n` nodes: a Hamiltonian cycle through `order` plus
/// the extra edges flagged in `extra`, weights drawn from `weights`.
pub fn cycle_plus(n: usize, order: &[usize], extra: &[bool], weights: &[f64]) -> Topology {
    let mut present = vec![false; n * n];
    for w in 0..n {
        let (a, b) = (order[w], order[(w + 1) % n]);
        present[a * n + b] = true;
    }
    for (idx, &on) in extra.iter().enumerate().take(n * n) {
        if on && idx / n != idx % n {
            present[idx] = true;
        }
    }
    let edges: Vec<Edge<f64>> = present
        .iter()
        .enumerate()
        .filter(|(_, &p)| p)
        .map(|(idx, _)| Edge::weighted(idx / n + 1, idx % n + 1, weights[idx % weights.len()]))
        .collect();
    Topology::from_edges(n, &edges).unwrap()
}

/// Arbitrary digraph from an adjacency bitmask (self loops dropped).
pub fn from_mask(n: usize, mask: u32) -> Topology {
    let mut edges = Vec::new();
    for from in 0..n {
        for to in 0..n {
            if from != to && mask & (1 << (from * n + to)) != 0 {
                edges.push(Edge::new(from + 1, to + 1));
            }
        }
    }
    Topology::from_edges(n, &edges).unwrap()
}

/// Reachability by transitive closure (Floyd-Warshall on booleans).
pub fn closure_strongly_connected(t: &Topology) -> bool {
    let n = t.n();
    let a = t.adjacency();
    let mut r = vec![false; n * n];
    for i in 0..n {
        r[i * n + i] = true;
        for j in 0..n {
            // a[(to, from)] > 0 encodes from -> to
            if a[(j, i)] > 0.0 {
                r[i * n + j] = true;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if r[i * n + k] && r[k * n + j] {
                    r[i * n + j] = true;
                }
            }
        }
    }
    r.iter().all(|&v| v)
}

pub fn strongly_connected_graph(max_n: usize) -> impl Strategy<Value = Topology> {
    (2..=max_n).prop_flat_map(|n| {
        (
            Just(n),
            Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
            prop::collection::vec(prop::bool::weighted(0.3), n * n),
            prop::collection::vec(0.2f64..3.0, n * n),
        )
            .prop_map(|(n, order, extra, w)| cycle_plus(n, &order, &extra, &w))
    })
}

pub fn symmetric_graph(max_n: usize) -> impl Strategy<Value = Topology> {
    (2..=max_n).prop_flat_map(|n| {
        (
            Just(n),
            Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
            prop::collection::vec(prop::bool::weighted(0.3), n * n),
            prop::collection::vec(0.2f64..3.0, n * n),
        )
            .prop_map(|(n, order, extra, w)| {
                // path through `order` plus extras, mirrored with equal weights
                let mut edges = Vec::new();
                let mut add = |a: usize, b: usize, wt: f64| {
                    edges.push(Edge::weighted(a + 1, b + 1, wt));
                    edges.push(Edge::weighted(b + 1, a + 1, wt));
                };
                for k in 0..n - 1 {
                    add(order[k], order[k + 1], w[k]);
                }
                for a in 0..n {
                    for b in a + 1..n {
                        let adjacent = order
                            .windows(2)
                            .any(|p| (p[0] == a && p[1] == b) || (p[0] == b && p[1] == a));
                        if extra[a * n + b] && !adjacent {
                            add(a, b, w[a * n + b]);
                        }
                    }
                }
                Topology::from_edges(n, &edges).unwrap()
            })
    })
}

pub fn quadratics(n: usize) -> impl Strategy<Value = Objective> {
    prop::collection::vec((0.05f64..2.0, -5.0f64..5.0, -10.0f64..10.0), n).prop_map(|v| {
        Objective::quadratic(
            v.into_iter()
                .map(|(a, b, c)| Quadratic::new(a, b, c))
                .collect(),
        )
        .unwrap()
    })
}
