//! The ball-certificate scheme for bounded-time convergence.
//!
//! The prover hands every node v the edge set of its radius-(k+1) ball and
//! the local functions of all endpoints. The verifier checks, per node:
//! (a) each neighbor's radius-k ball claim is contained in v's claim and v's
//!     own incident edges are claimed,
//! (b) overlapping function claims are identical and match v's true function,
//! (c) simulating k+1 steps of the claimed sub-dynamics from every initial
//!     assignment leaves v fixed between steps k and k+1.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::bits::{BitReader, BitWriter};
use crate::dynamics::{ceil_log2, table_encoding_bits, Dynamics, LocalFunction};
use crate::error::{FsdError, Result};
use crate::graph::{bfs_distances, edge, Edge, Graph, NodeId};
use crate::pls::{Certificate, CertificateAssignment, Decision, NodeView, RejectTag};
use crate::rules::StructuredRule;

pub const DEFAULT_SIM_CAP: u128 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchemeParams {
    pub q: u8,
    pub k: usize,
    /// Largest identifier the encoding must accommodate.
    pub id_max: u32,
    /// Condition (c) is rejected with a budget tag when
    /// q^(ball nodes) * (k+1) exceeds this.
    pub sim_cap: u128,
}

impl SchemeParams {
    pub fn for_dynamics(dynamics: &Dynamics, k: usize) -> Self {
        let id_max = dynamics.graph.nodes().last().map(|n| n.0).unwrap_or(1);
        SchemeParams { q: dynamics.q(), k, id_max, sim_cap: DEFAULT_SIM_CAP }
    }

    /// Bits per encoded identifier.
    fn id_bits(&self) -> usize {
        (ceil_log2(self.id_max as u64) as usize).max(1)
    }
}

/// What a certificate claims: a ball's edge set and the endpoint functions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BallCertificate {
    /// Sorted (min,max) pairs.
    pub claimed_ball: Vec<Edge>,
    /// One function per endpoint of a claimed edge.
    pub claimed_functions: BTreeMap<NodeId, LocalFunction>,
}

impl BallCertificate {
    pub fn endpoints(&self) -> BTreeSet<NodeId> {
        self.claimed_ball.iter().flat_map(|&(u, v)| [u, v]).collect()
    }

    /// Wire format (empty ball = zero-length certificate): edge count at 2w
    /// bits, edges as two (id-1) fields of w bits each, then per endpoint in
    /// ascending order a 1-bit form tag and the function payload. Table
    /// payload: arity at 2w bits, then q^(arity+1) entries of ceil(log2 q)
    /// bits. Structured payload: byte count at 16 bits, then the rule bytes.
    pub fn encode(&self, params: &SchemeParams) -> Certificate {
        if self.claimed_ball.is_empty() {
            debug_assert!(self.claimed_functions.is_empty());
            return Certificate::empty();
        }
        let w = params.id_bits();
        let mut writer = BitWriter::new();
        writer.write_bits(self.claimed_ball.len() as u64, 2 * w);
        for &(u, v) in &self.claimed_ball {
            writer.write_bits(u.0 as u64 - 1, w);
            writer.write_bits(v.0 as u64 - 1, w);
        }
        let entry_bits = ceil_log2(params.q as u64) as usize;
        for f in self.claimed_functions.values() {
            match f {
                LocalFunction::Table { arity, table } => {
                    writer.write_bits(0, 1);
                    writer.write_bits(*arity as u64, 2 * w);
                    for &s in table {
                        writer.write_bits(s as u64, entry_bits);
                    }
                }
                LocalFunction::Structured(rule) => {
                    writer.write_bits(1, 1);
                    let bytes = rule.to_bytes();
                    writer.write_bits(bytes.len() as u64, 16);
                    for &byte in &bytes {
                        writer.write_bits(byte as u64, 8);
                    }
                }
            }
        }
        let bit_length = writer.bit_len();
        Certificate { bytes: writer.into_bytes(), bit_length }
    }

    pub fn decode(cert: &Certificate, params: &SchemeParams) -> Result<Self> {
        if cert.is_empty() {
            return Ok(BallCertificate {
                claimed_ball: Vec::new(),
                claimed_functions: BTreeMap::new(),
            });
        }
        let w = params.id_bits();
        let mut reader = BitReader::new(&cert.bytes, cert.bit_length)?;
        let count = reader.read_bits(2 * w)? as usize;
        if count == 0 {
            return Err(FsdError::MalformedCertificate("nonempty bytes, empty edge list".into()));
        }
        let mut claimed_ball = Vec::with_capacity(count);
        for _ in 0..count {
            let u = reader.read_bits(w)? as u32 + 1;
            let v = reader.read_bits(w)? as u32 + 1;
            if u >= v || v > params.id_max {
                return Err(FsdError::MalformedCertificate(format!("bad edge ({u},{v})")));
            }
            claimed_ball.push((NodeId(u), NodeId(v)));
        }
        if claimed_ball.windows(2).any(|p| p[0] >= p[1]) {
            return Err(FsdError::MalformedCertificate("edges not sorted and unique".into()));
        }
        let endpoints: BTreeSet<NodeId> =
            claimed_ball.iter().flat_map(|&(u, v)| [u, v]).collect();
        let entry_bits = ceil_log2(params.q as u64) as usize;
        let mut claimed_functions = BTreeMap::new();
        for &v in &endpoints {
            let f = match reader.read_bits(1)? {
                0 => {
                    let arity = reader.read_bits(2 * w)? as usize;
                    let len = (params.q as u128)
                        .checked_pow(arity as u32 + 1)
                        .filter(|&l| l <= 1 << 24)
                        .ok_or_else(|| {
                            FsdError::MalformedCertificate(format!("table arity {arity} too large"))
                        })? as usize;
                    let mut table = Vec::with_capacity(len);
                    for _ in 0..len {
                        let s = reader.read_bits(entry_bits)? as u8;
                        if s >= params.q {
                            return Err(FsdError::MalformedCertificate(
                                "table entry out of range".into(),
                            ));
                        }
                        table.push(s);
                    }
                    LocalFunction::Table { arity, table }
                }
                _ => {
                    let len = reader.read_bits(16)? as usize;
                    let mut bytes = Vec::with_capacity(len);
                    for _ in 0..len {
                        bytes.push(reader.read_bits(8)? as u8);
                    }
                    let rule = StructuredRule::from_bytes(&bytes)
                        .map_err(|e| FsdError::MalformedCertificate(e.to_string()))?;
                    if rule.q() != params.q {
                        return Err(FsdError::MalformedCertificate("rule alphabet mismatch".into()));
                    }
                    LocalFunction::Structured(rule)
                }
            };
            claimed_functions.insert(v, f);
        }
        reader.finish()?;
        Ok(BallCertificate { claimed_ball, claimed_functions })
    }
}

/// True radius-(k+1) ball claims for every node.
pub fn honest_prover(dynamics: &Dynamics, params: &SchemeParams) -> CertificateAssignment {
    let g = &dynamics.graph;
    let assignment = g
        .nodes()
        .iter()
        .map(|&v| {
            let claimed_ball = g.ball_edges(v, params.k + 1);
            let claimed_functions = claimed_ball
                .iter()
                .flat_map(|&(a, b)| [a, b])
                .collect::<BTreeSet<_>>()
                .into_iter()
                .map(|w| (w, dynamics.functions[&w].clone()))
                .collect();
            let cert = BallCertificate { claimed_ball, claimed_functions }.encode(params);
            (v, cert)
        })
        .collect();
    CertificateAssignment(assignment)
}

/// Adjacency inside a claimed edge set, ports sorted ascending.
fn claimed_adjacency(ball: &[Edge]) -> BTreeMap<NodeId, Vec<NodeId>> {
    let mut adj: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for &(u, v) in ball {
        adj.entry(u).or_default().push(v);
        adj.entry(v).or_default().push(u);
    }
    for list in adj.values_mut() {
        list.sort_unstable();
    }
    adj
}

/// Edges of `ball` with an endpoint at distance <= radius from `v`, measured
/// inside the claimed subgraph.
fn ball_restriction(ball: &[Edge], v: NodeId, radius: usize) -> Vec<Edge> {
    let adj = claimed_adjacency(ball);
    let dist = bfs_distances(&adj, v);
    ball.iter()
        .copied()
        .filter(|&(a, b)| {
            dist.get(&a).map(|&d| d <= radius).unwrap_or(false)
                || dist.get(&b).map(|&d| d <= radius).unwrap_or(false)
        })
        .collect()
}

/// One node's verification round; checks run in order a, b, c and the first
/// failure is tagged.
pub fn verify_node(view: &NodeView, params: &SchemeParams) -> Decision {
    let own = match BallCertificate::decode(view.own_certificate, params) {
        Ok(c) => c,
        Err(_) => return Decision::Reject(RejectTag::Malformed),
    };
    let mut neighbor_claims = Vec::with_capacity(view.neighbor_certificates.len());
    for cert in &view.neighbor_certificates {
        match BallCertificate::decode(cert, params) {
            Ok(c) => neighbor_claims.push(c),
            Err(_) => return Decision::Reject(RejectTag::Malformed),
        }
    }

    // (a) own incident edges and every neighbor's radius-k restriction must
    // appear in the own claim
    let own_edges: BTreeSet<Edge> = own.claimed_ball.iter().copied().collect();
    for &u in view.ports {
        if !own_edges.contains(&edge(view.id, u)) {
            return Decision::Reject(RejectTag::CondA);
        }
    }
    for (&u, claim) in view.ports.iter().zip(&neighbor_claims) {
        for e in ball_restriction(&claim.claimed_ball, u, params.k) {
            if !own_edges.contains(&e) {
                return Decision::Reject(RejectTag::CondA);
            }
        }
    }

    // (b) overlapping claims agree, and every claim about v matches v's true
    // function (decoding is canonical, so value equality is bit identity)
    if let Some(f) = own.claimed_functions.get(&view.id) {
        if f != view.local_function {
            return Decision::Reject(RejectTag::CondB);
        }
    }
    for claim in &neighbor_claims {
        if let Some(f) = claim.claimed_functions.get(&view.id) {
            if f != view.local_function {
                return Decision::Reject(RejectTag::CondB);
            }
        }
        for (w, f) in &claim.claimed_functions {
            if let Some(own_f) = own.claimed_functions.get(w) {
                if own_f != f {
                    return Decision::Reject(RejectTag::CondB);
                }
            }
        }
    }

    // (c) simulate the claimed sub-dynamics
    simulate_claim(view.id, &own, params, view.local_function)
}

/// Condition (c): enumerate all initial assignments on the claimed ball's
/// nodes and advance each node while its full claimed neighborhood is still
/// computable; v must stay computable through step k+1 and be fixed between
/// steps k and k+1.
fn simulate_claim(
    v: NodeId,
    own: &BallCertificate,
    params: &SchemeParams,
    true_function: &LocalFunction,
) -> Decision {
    let adj = claimed_adjacency(&own.claimed_ball);
    let mut nodes: Vec<NodeId> = adj.keys().copied().collect();
    if !adj.contains_key(&v) {
        // isolated node: the claim spans nothing around v; simulate v alone
        nodes.push(v);
        nodes.sort_unstable();
    }
    let k = params.k;
    let q = params.q;
    let m = nodes.len();
    let total = (q as u128).checked_pow(m as u32);
    match total.and_then(|t| t.checked_mul(k as u128 + 1)) {
        Some(cost) if cost <= params.sim_cap => {}
        _ => return Decision::Reject(RejectTag::Budget),
    }
    let index_of: BTreeMap<NodeId, usize> = nodes.iter().copied().enumerate().map(|(i, n)| (n, i)).collect();

    // the shrinking set of nodes whose next state is computable
    let function_of = |w: NodeId| -> Option<&LocalFunction> {
        if w == v && !own.claimed_functions.contains_key(&v) {
            Some(true_function)
        } else {
            own.claimed_functions.get(&w)
        }
    };
    let empty: Vec<NodeId> = Vec::new();
    let neighbors_of =
        |w: NodeId| -> &Vec<NodeId> { adj.get(&w).unwrap_or(&empty) };
    let simulable: BTreeSet<NodeId> = nodes
        .iter()
        .copied()
        .filter(|&w| function_of(w).map(|f| f.arity() == neighbors_of(w).len()).unwrap_or(false))
        .collect();
    let mut layers: Vec<BTreeSet<NodeId>> = vec![nodes.iter().copied().collect()];
    for s in 1..=k + 1 {
        let prev = &layers[s - 1];
        let layer: BTreeSet<NodeId> = prev
            .iter()
            .copied()
            .filter(|&w| simulable.contains(&w) && neighbors_of(w).iter().all(|u| prev.contains(u)))
            .collect();
        layers.push(layer);
    }
    if !layers[k + 1].contains(&v) {
        return Decision::Reject(RejectTag::CondC);
    }

    let v_idx = index_of[&v];
    let total = total.unwrap();
    let mut cur = vec![0u8; m];
    let mut next = vec![0u8; m];
    for assignment in 0..total {
        let mut rest = assignment;
        for s in cur.iter_mut() {
            *s = (rest % q as u128) as u8;
            rest /= q as u128;
        }
        // after step s, `cur` is valid exactly on layers[s], which is all
        // that steps s+1.. ever read
        let mut v_at_k = cur[v_idx];
        for (s, layer) in layers.iter().enumerate().skip(1) {
            for &w in layer {
                let i = index_of[&w];
                let nbr_states: Vec<u8> =
                    neighbors_of(w).iter().map(|u| cur[index_of[u]]).collect();
                next[i] = function_of(w).unwrap().eval(q, cur[i], &nbr_states);
            }
            std::mem::swap(&mut cur, &mut next);
            if s == k {
                v_at_k = cur[v_idx];
            }
        }
        if cur[v_idx] != v_at_k {
            return Decision::Reject(RejectTag::CondC);
        }
    }
    Decision::Accept
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundReport {
    pub measured_max_bits: u64,
    pub theorem1_bound_bits: u128,
    /// Only meaningful on bounded-degree instances.
    pub corollary1_bound_bits: u128,
    pub max_degree: usize,
}

/// b_max(k+1) * ceil(log2 id_max) * |f_max|, with |f_max| the largest
/// table-encoding size over the instance's degrees.
pub fn theorem1_bound(g: &Graph, k: usize, q: u8, id_max: u32) -> u128 {
    let b_max = g.ball_size_max(k + 1) as u128;
    let f_max = g
        .nodes()
        .iter()
        .map(|&v| table_encoding_bits(q, g.degree(v)))
        .max()
        .unwrap_or(0) as u128;
    b_max * ceil_log2(id_max as u64) as u128 * f_max
}

/// Degree-bounded form: Δ((Δ-1)^(k+1) - 1) * q^(Δ+1) * ceil(log2 q) *
/// ceil(log2 id_max). Meaningful for Δ >= 3.
pub fn corollary1_bound(delta: usize, k: usize, q: u8, id_max: u32) -> u128 {
    let d = delta as u128;
    let ball_term = d * ((d.saturating_sub(1)).pow(k as u32 + 1).saturating_sub(1));
    ball_term
        * (q as u128).pow(delta as u32 + 1)
        * ceil_log2(q as u64) as u128
        * ceil_log2(id_max as u64) as u128
}

/// The certificate-size floor 2^(k/6) * 6/k implied by the decoder-family
/// reduction.
pub fn theorem3_lower_bound(k: u32) -> f64 {
    (k as f64 / 6.0).exp2() * 6.0 / k as f64
}

pub fn bound_report(
    dynamics: &Dynamics,
    params: &SchemeParams,
    assignment: &CertificateAssignment,
) -> BoundReport {
    let g = &dynamics.graph;
    BoundReport {
        measured_max_bits: assignment.max_bits() as u64,
        theorem1_bound_bits: theorem1_bound(g, params.k, params.q, params.id_max),
        corollary1_bound_bits: corollary1_bound(g.max_degree(), params.k, params.q, params.id_max),
        max_degree: g.max_degree(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::StateAlphabet;
    use crate::pls::run_verifier;

    fn id(v: u32) -> NodeId {
        NodeId(v)
    }

    fn identity_dynamics(g: Graph, q: u8) -> Dynamics {
        let functions = g
            .nodes()
            .iter()
            .map(|&v| {
                let d = g.degree(v);
                let len = (q as usize).pow(d as u32 + 1);
                let table: Vec<u8> =
                    (0..len).map(|i| (i / (q as usize).pow(d as u32)) as u8).collect();
                (v, LocalFunction::table(d, table, q).unwrap())
            })
            .collect();
        Dynamics::new(g, StateAlphabet::new(q).unwrap(), functions).unwrap()
    }

    fn path3() -> Graph {
        Graph::new(vec![id(1), id(2), id(3)], &[(id(1), id(2)), (id(2), id(3))]).unwrap()
    }

    #[test]
    fn certificate_round_trip_and_empty() {
        let dynamics = identity_dynamics(path3(), 2);
        let params = SchemeParams::for_dynamics(&dynamics, 0);
        let assignment = honest_prover(&dynamics, &params);
        for &v in dynamics.graph.nodes() {
            let decoded = BallCertificate::decode(assignment.get(v), &params).unwrap();
            assert_eq!(decoded.encode(&params), *assignment.get(v));
        }
        // single node: empty certificate
        let single = identity_dynamics(Graph::new(vec![id(1)], &[]).unwrap(), 2);
        let p1 = SchemeParams::for_dynamics(&single, 3);
        assert!(honest_prover(&single, &p1).get(id(1)).is_empty());
    }

    #[test]
    fn prover_claims_are_balls() {
        let dynamics = identity_dynamics(path3(), 2);
        let params = SchemeParams::for_dynamics(&dynamics, 0);
        let assignment = honest_prover(&dynamics, &params);
        let cert_a = BallCertificate::decode(assignment.get(id(1)), &params).unwrap();
        assert_eq!(cert_a.claimed_ball, vec![(id(1), id(2)), (id(2), id(3))]);
        assert_eq!(
            cert_a.claimed_functions.keys().copied().collect::<Vec<_>>(),
            vec![id(1), id(2), id(3)]
        );
    }

    #[test]
    fn identity_accepts_everywhere() {
        let g = Graph::new(
            vec![id(1), id(2), id(3)],
            &[(id(1), id(2)), (id(2), id(3)), (id(1), id(3))],
        )
        .unwrap();
        let dynamics = identity_dynamics(g, 2);
        let params = SchemeParams::for_dynamics(&dynamics, 0);
        let assignment = honest_prover(&dynamics, &params);
        let outcome =
            run_verifier(&dynamics, &assignment, |view| verify_node(view, &params)).unwrap();
        assert!(outcome.accepted);
    }

    #[test]
    fn swap_dynamics_rejects_with_tag_c() {
        // two nodes copying each other never converge
        let g = Graph::new(vec![id(1), id(2)], &[(id(1), id(2))]).unwrap();
        let copy = || LocalFunction::table(1, vec![0, 1, 0, 1], 2).unwrap();
        let dynamics = Dynamics::new(
            g,
            StateAlphabet::new(2).unwrap(),
            [(id(1), copy()), (id(2), copy())].into(),
        )
        .unwrap();
        let params = SchemeParams::for_dynamics(&dynamics, 1);
        let assignment = honest_prover(&dynamics, &params);
        let outcome =
            run_verifier(&dynamics, &assignment, |view| verify_node(view, &params)).unwrap();
        assert!(!outcome.accepted);
        for d in outcome.decisions.values() {
            assert_eq!(*d, Decision::Reject(RejectTag::CondC));
        }
    }

    #[test]
    fn flipped_table_rejected_by_neighbor_with_tag_b() {
        let dynamics = identity_dynamics(path3(), 2);
        let params = SchemeParams::for_dynamics(&dynamics, 0);
        let mut assignment = honest_prover(&dynamics, &params);
        // corrupt node 1's claim about node 2's function
        let mut claim = BallCertificate::decode(assignment.get(id(1)), &params).unwrap();
        if let LocalFunction::Table { table, .. } = claim.claimed_functions.get_mut(&id(2)).unwrap()
        {
            table[0] ^= 1;
        }
        assignment.0.insert(id(1), claim.encode(&params));
        let outcome =
            run_verifier(&dynamics, &assignment, |view| verify_node(view, &params)).unwrap();
        assert_eq!(outcome.decisions[&id(2)], Decision::Reject(RejectTag::CondB));
    }

    #[test]
    fn missing_edge_rejected_with_tag_a() {
        let dynamics = identity_dynamics(path3(), 2);
        let params = SchemeParams::for_dynamics(&dynamics, 0);
        let mut assignment = honest_prover(&dynamics, &params);
        let mut claim = BallCertificate::decode(assignment.get(id(2)), &params).unwrap();
        claim.claimed_ball.retain(|&e| e != (id(1), id(2)));
        claim.claimed_functions.remove(&id(1));
        assignment.0.insert(id(2), claim.encode(&params));
        let outcome =
            run_verifier(&dynamics, &assignment, |view| verify_node(view, &params)).unwrap();
        assert_eq!(outcome.decisions[&id(2)], Decision::Reject(RejectTag::CondA));
    }

    #[test]
    fn garbage_certificate_is_malformed() {
        let dynamics = identity_dynamics(path3(), 2);
        let params = SchemeParams::for_dynamics(&dynamics, 0);
        let mut assignment = honest_prover(&dynamics, &params);
        assignment.0.insert(id(2), Certificate::new(vec![0x00, 0x00], 16).unwrap());
        let outcome =
            run_verifier(&dynamics, &assignment, |view| verify_node(view, &params)).unwrap();
        assert_eq!(outcome.decisions[&id(2)], Decision::Reject(RejectTag::Malformed));
    }

    #[test]
    fn single_node_negation_never_certified() {
        let g = Graph::new(vec![id(1)], &[]).unwrap();
        let f = LocalFunction::table(0, vec![1, 0], 2).unwrap();
        let dynamics =
            Dynamics::new(g, StateAlphabet::new(2).unwrap(), [(id(1), f)].into()).unwrap();
        let params = SchemeParams::for_dynamics(&dynamics, 1);
        let assignment = honest_prover(&dynamics, &params);
        let outcome =
            run_verifier(&dynamics, &assignment, |view| verify_node(view, &params)).unwrap();
        assert_eq!(outcome.decisions[&id(1)], Decision::Reject(RejectTag::CondC));
    }

    #[test]
    fn budget_is_surfaced() {
        let dynamics = identity_dynamics(path3(), 2);
        let mut params = SchemeParams::for_dynamics(&dynamics, 0);
        params.sim_cap = 4;
        let assignment = honest_prover(&dynamics, &params);
        let outcome =
            run_verifier(&dynamics, &assignment, |view| verify_node(view, &params)).unwrap();
        assert_eq!(outcome.decisions[&id(1)], Decision::Reject(RejectTag::Budget));
    }

    #[test]
    fn bound_formulas() {
        // path a-b-c, k=0, q=2, id_max=3: b_max(1)=2, |f_max|=14, bound 56
        let g = path3();
        assert_eq!(theorem1_bound(&g, 0, 2, 3), 56);
        // single node: zero
        let single = Graph::new(vec![id(1)], &[]).unwrap();
        assert_eq!(theorem1_bound(&single, 5, 2, 1), 0);
        // Δ=3, k=2, q=3 term times ceil(log2 id_max)
        assert_eq!(corollary1_bound(3, 2, 3, 16), 3402 * 4);
        assert_eq!(theorem3_lower_bound(6), 2.0);
        assert_eq!(theorem3_lower_bound(12), 2.0);
        assert_eq!(theorem3_lower_bound(24), 4.0);
    }

    #[test]
    fn honest_size_within_bounds_on_path() {
        let dynamics = identity_dynamics(path3(), 2);
        let params = SchemeParams::for_dynamics(&dynamics, 0);
        let assignment = honest_prover(&dynamics, &params);
        let report = bound_report(&dynamics, &params, &assignment);
        assert_eq!(report.measured_max_bits, 43);
        assert!(report.measured_max_bits as u128 <= report.theorem1_bound_bits);
    }
}
