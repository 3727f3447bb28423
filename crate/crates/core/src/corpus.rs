//! Seeded random instance generators for tests and benchmarks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{Dynamics, LocalFunction, StateAlphabet};
use crate::graph::{edge, Edge, Graph, NodeId};

fn id(v: u32) -> NodeId {
    NodeId(v)
}

/// Random connected graph on ids 1..=n: a random attachment tree plus up to
/// `extra_edges` additional random edges (duplicates silently dropped).
pub fn random_connected_graph(rng: &mut ChaCha8Rng, n: u32, extra_edges: usize) -> Graph {
    assert!(n >= 1);
    let mut edges: Vec<Edge> = Vec::new();
    for v in 2..=n {
        let parent = rng.gen_range(1..v);
        edges.push(edge(id(parent), id(v)));
    }
    for _ in 0..extra_edges {
        if n < 2 {
            break;
        }
        let u = rng.gen_range(1..=n);
        let v = rng.gen_range(1..=n);
        if u != v && !edges.contains(&edge(id(u), id(v))) {
            edges.push(edge(id(u), id(v)));
        }
    }
    Graph::new((1..=n).map(id).collect(), &edges).expect("construction is connected and simple")
}

/// Random connected graph where no degree exceeds `max_degree`.
pub fn random_bounded_degree_graph(rng: &mut ChaCha8Rng, n: u32, max_degree: usize) -> Graph {
    assert!(max_degree >= 2 && n >= 1);
    let mut degree = vec![0usize; n as usize + 1];
    let mut edges: Vec<Edge> = Vec::new();
    for v in 2..=n {
        // attach to a uniformly random earlier node with spare degree; the
        // path fallback (v-1) always has spare capacity in a tree prefix
        let candidates: Vec<u32> =
            (1..v).filter(|&u| degree[u as usize] < max_degree - 1).collect();
        let parent =
            if candidates.is_empty() { v - 1 } else { candidates[rng.gen_range(0..candidates.len())] };
        edges.push(edge(id(parent), id(v)));
        degree[parent as usize] += 1;
        degree[v as usize] += 1;
    }
    for _ in 0..n {
        let u = rng.gen_range(1..=n);
        let v = rng.gen_range(1..=n);
        if u != v
            && degree[u as usize] < max_degree
            && degree[v as usize] < max_degree
            && !edges.contains(&edge(id(u), id(v)))
        {
            edges.push(edge(id(u), id(v)));
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
    }
    Graph::new((1..=n).map(id).collect(), &edges).expect("construction is connected and simple")
}

/// Uniformly random local functions on the given graph.
pub fn random_dynamics_on(rng: &mut ChaCha8Rng, graph: Graph, q: u8) -> Dynamics {
    let functions = graph
        .nodes()
        .iter()
        .map(|&v| {
            let d = graph.degree(v);
            let len = (q as usize).pow(d as u32 + 1);
            let table: Vec<u8> = (0..len).map(|_| rng.gen_range(0..q)).collect();
            (v, LocalFunction::table(d, table, q).unwrap())
        })
        .collect();
    Dynamics::new(graph, StateAlphabet::new(q).unwrap(), functions).unwrap()
}

pub fn random_dynamics(rng: &mut ChaCha8Rng, n: u32, q: u8) -> Dynamics {
    let extra = rng.gen_range(0..=n as usize);
    let graph = random_connected_graph(rng, n, extra);
    random_dynamics_on(rng, graph, q)
}

/// Deterministic corpus of `count` random dynamics with n in `n_range` and q
/// drawn from `qs`.
pub fn corpus(seed: u64, count: usize, n_range: (u32, u32), qs: &[u8]) -> Vec<Dynamics> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(n_range.0..=n_range.1);
            let q = qs[rng.gen_range(0..qs.len())];
            random_dynamics(&mut rng, n, q)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_deterministic() {
        let a = corpus(42, 10, (3, 6), &[2, 3]);
        let b = corpus(42, 10, (3, 6), &[2, 3]);
        assert_eq!(a, b);
        let c = corpus(43, 10, (3, 6), &[2, 3]);
        assert_ne!(a, c);
    }

    #[test]
    fn bounded_degree_is_respected() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [3u32, 5, 8, 12] {
            let g = random_bounded_degree_graph(&mut rng, n, 3);
            assert!(g.max_degree() <= 3);
            assert_eq!(g.n(), n as usize);
        }
    }
}
