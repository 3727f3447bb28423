//! Lower-bound instance generators.
//!
//! Two families, both parameterized by a pair of sets held by two "players":
//! a 4-state mark/clock instance whose dynamics converges within 2 steps iff
//! the pair sets are disjoint, and a 3-state Error-propagation instance built
//! from two decoder circuits whose dynamics converges within 6t steps iff the
//! index sets are disjoint.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::circuit::{self, Circuit, GateKind, GateRole};
use crate::dynamics::{Configuration, Dynamics, LocalFunction, StateAlphabet};
use crate::error::{FsdError, Result};
use crate::graph::{edge, Edge, Graph, NodeId};
use crate::oracle::{
    self, converges_within, converges_within_sampled, max_settle_time, ConvergenceVerdict,
};
use crate::rules::{mark_clock, ternary, GateOp, OutputTag, StructuredRule};

/// A set of unordered pairs {i,j} with 1 <= i < j <= n.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairSet {
    pub n: u32,
    pub pairs: BTreeSet<(u32, u32)>,
}

impl PairSet {
    pub fn new(n: u32, pairs: impl IntoIterator<Item = (u32, u32)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (i, j) in pairs {
            if i == j || i < 1 || j < 1 || i > n || j > n {
                return Err(FsdError::OutOfRange(format!("pair ({i},{j}) not within [{n}]")));
            }
            set.insert((i.min(j), i.max(j)));
        }
        Ok(PairSet { n, pairs: set })
    }

    pub fn contains(&self, i: u32, j: u32) -> bool {
        self.pairs.contains(&(i.min(j), i.max(j)))
    }

    pub fn intersection(&self, other: &PairSet) -> BTreeSet<(u32, u32)> {
        self.pairs.intersection(&other.pairs).copied().collect()
    }

    pub fn is_disjoint_from(&self, other: &PairSet) -> bool {
        self.pairs.is_disjoint(&other.pairs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GadgetInstance {
    pub dynamics: Dynamics,
    /// Node id -> role tag (set-a/set-b/bits-a/bits-b for the pair-set
    /// family; decoder-a/decoder-b/selector/collector/root for the decoder
    /// family).
    pub roles: BTreeMap<NodeId, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionReport {
    pub converges: bool,
    pub disjoint: bool,
    /// converges == disjoint, the statement under test.
    pub equivalent: bool,
    /// Whether the full configuration space was enumerated.
    pub exhaustive: bool,
    /// Max steps to a fixed point over checked configurations (exhaustive
    /// mode, convergent case only).
    pub max_settle_time: Option<usize>,
}

fn id(v: u32) -> NodeId {
    NodeId(v)
}

/// Port of neighbor `u` in `g.ports(v)`.
fn port_of(g: &Graph, v: NodeId, u: NodeId) -> u16 {
    g.ports(v).binary_search(&u).expect("not a neighbor") as u16
}

// ---------------------------------------------------------------------------
// Pair-set (mark/clock) family
// ---------------------------------------------------------------------------

/// Number of bit-gadget nodes per side: 2*ceil(log2 n).
pub fn thm2_ell(n: u32) -> u32 {
    2 * crate::dynamics::ceil_log2(n as u64) as u32
}

/// Node ids: v_i^A = i, v_i^B = n+i (i in [n]); d_s^A = 2n+s,
/// d_s^B = 2n+ell+s (s in [ell]).
pub fn build_thm2_graph(n: u32, a: &PairSet, b: &PairSet) -> Result<GadgetInstance> {
    if n < 2 {
        return Err(FsdError::OutOfRange(format!("pair-set instance needs n >= 2, got {n}")));
    }
    if a.n != n || b.n != n {
        return Err(FsdError::OutOfRange("pair sets must share the instance's n".into()));
    }
    let ell = thm2_ell(n);
    let va: Vec<NodeId> = (1..=n).map(id).collect();
    let vb: Vec<NodeId> = (1..=n).map(|i| id(n + i)).collect();
    let da: Vec<NodeId> = (1..=ell).map(|s| id(2 * n + s)).collect();
    let db: Vec<NodeId> = (1..=ell).map(|s| id(2 * n + ell + s)).collect();

    let mut edges: Vec<Edge> = Vec::new();
    for (vs, ds, set) in [(&va, &da, a), (&vb, &db, b)] {
        for &v in vs.iter() {
            for &d in ds.iter() {
                edges.push(edge(v, d));
            }
        }
        for &(i, j) in &set.pairs {
            edges.push(edge(vs[i as usize - 1], vs[j as usize - 1]));
        }
    }
    let d_all: Vec<NodeId> = da.iter().chain(db.iter()).copied().collect();
    for (x, &u) in d_all.iter().enumerate() {
        for &w in &d_all[x + 1..] {
            edges.push(edge(u, w));
        }
    }
    let nodes: Vec<NodeId> = (1..=2 * n + 2 * ell).map(id).collect();
    let graph = Graph::new(nodes, &edges)?;

    let mut functions = BTreeMap::new();
    let mut roles = BTreeMap::new();
    for (side, vs, ds, partner_ds) in [("a", &va, &da, &db), ("b", &vb, &db, &da)] {
        for (s0, &d) in ds.iter().enumerate() {
            let partner = partner_ds[s0];
            let clique_ports = d_all
                .iter()
                .filter(|&&w| w != d && w != partner)
                .map(|&w| port_of(&graph, d, w))
                .collect();
            let v_ports = vs.iter().map(|&v| port_of(&graph, d, v)).collect();
            functions.insert(
                d,
                LocalFunction::Structured(StructuredRule::Thm2Bit {
                    partner_port: port_of(&graph, d, partner),
                    clique_ports,
                    v_ports,
                }),
            );
            roles.insert(d, format!("bits-{side}"));
        }
        let set = if side == "a" { a } else { b };
        for (i0, &v) in vs.iter().enumerate() {
            let i = i0 as u32 + 1;
            let d_ports = ds.iter().map(|&d| port_of(&graph, v, d)).collect();
            let v_ports = (1..=n)
                .filter(|&j| j != i && set.contains(i, j))
                .map(|j| port_of(&graph, v, vs[j as usize - 1]))
                .collect();
            functions.insert(
                v,
                LocalFunction::Structured(StructuredRule::Thm2Set {
                    index: i,
                    half_bits: (ell / 2) as u16,
                    d_ports,
                    v_ports,
                }),
            );
            roles.insert(v, format!("set-{side}"));
        }
    }
    let dynamics = Dynamics::new(graph, StateAlphabet::new(mark_clock::Q)?, functions)?;
    Ok(GadgetInstance { dynamics, roles })
}

/// The divergence witness for a common pair {i,j}: marks v_i, v_j on both
/// sides, bit-gadget marks spelling i-1 then j-1, all clocks zero.
pub fn thm2_witness(
    instance: &GadgetInstance,
    n: u32,
    a: &PairSet,
    b: &PairSet,
    pair: (u32, u32),
) -> Result<Configuration> {
    let (i, j) = (pair.0.min(pair.1), pair.0.max(pair.1));
    if !a.contains(i, j) || !b.contains(i, j) {
        return Err(FsdError::OutOfRange(format!("pair ({i},{j}) not common to both sets")));
    }
    let ell = thm2_ell(n);
    let half = ell / 2;
    let dynamics = &instance.dynamics;
    let mut x = Configuration::new(vec![0; dynamics.n()]);
    for &vi in &[i, n + i, j, n + j] {
        x.set(dynamics, id(vi), mark_clock::pack(1, 0));
    }
    for side in 0..2 {
        for s in 1..=ell {
            let bit = if s <= half {
                ((i - 1) >> (s - 1)) & 1
            } else {
                ((j - 1) >> (s - half - 1)) & 1
            };
            x.set(dynamics, id(2 * n + side * ell + s), mark_clock::pack(bit as u8, 0));
        }
    }
    Ok(x)
}

/// Checks "converges within 2 steps iff the pair sets are disjoint":
/// exhaustively when 4^|V| fits the cap, otherwise by witness injection plus
/// sampling.
pub fn check_thm2_reduction(
    n: u32,
    a: &PairSet,
    b: &PairSet,
    cap: Option<u128>,
    samples: usize,
    seed: u64,
) -> Result<ReductionReport> {
    let instance = build_thm2_graph(n, a, b)?;
    let disjoint = a.is_disjoint_from(b);
    let mut targeted = Vec::new();
    if let Some(&pair) = a.intersection(b).iter().next() {
        targeted.push(thm2_witness(&instance, n, a, b, pair)?);
    }
    reduction_report(&instance.dynamics, 2, disjoint, &targeted, cap, samples, seed)
}

fn reduction_report(
    dynamics: &Dynamics,
    k: usize,
    disjoint: bool,
    targeted: &[Configuration],
    cap: Option<u128>,
    samples: usize,
    seed: u64,
) -> Result<ReductionReport> {
    let cap_value = cap.unwrap_or(oracle::DEFAULT_EXHAUSTIVE_CAP);
    let exhaustive =
        dynamics.configuration_count().map(|t| t <= cap_value).unwrap_or(false);
    let (verdict, max_settle) = if exhaustive {
        let v = converges_within(dynamics, k, cap)?;
        let settle = if matches!(v, ConvergenceVerdict::Converges) {
            max_settle_time(dynamics, k + 1, cap)?
        } else {
            None
        };
        (v, settle)
    } else {
        (converges_within_sampled(dynamics, k, samples, seed, targeted)?, None)
    };
    let converges = matches!(verdict, ConvergenceVerdict::Converges);
    Ok(ReductionReport {
        converges,
        disjoint,
        equivalent: converges == disjoint,
        exhaustive,
        max_settle_time: max_settle,
    })
}

// ---------------------------------------------------------------------------
// Decoder (ternary Error) family
// ---------------------------------------------------------------------------

/// An index set X subset of [2^t], the "player input" of the decoder family.
pub fn validate_index_set(t: u32, x: &BTreeSet<u32>) -> Result<()> {
    let max = 1u32 << t;
    if let Some(&bad) = x.iter().find(|&&i| i < 1 || i > max) {
        return Err(FsdError::OutOfRange(format!("index {bad} outside [1, {max}]")));
    }
    Ok(())
}

struct Thm3Layout {
    circuit: Circuit,
    /// Decoder gate g of copy 0 (A) / copy 1 (B) -> node id.
    gate_node: [Vec<NodeId>; 2],
    selectors: Vec<NodeId>,
    collector_internal: Vec<NodeId>,
    root: NodeId,
    node_count: u32,
}

fn thm3_layout(t: u32) -> Result<Thm3Layout> {
    let circuit = circuit::build_decoder(t)?;
    let gates = circuit.gate_count() as u32;
    let gate_node = [
        (1..=gates).map(id).collect::<Vec<_>>(),
        (gates + 1..=2 * gates).map(id).collect::<Vec<_>>(),
    ];
    let selectors: Vec<NodeId> = (1..=t).map(|i| id(2 * gates + i)).collect();
    // Collector: left-complete binary tree over the selectors, built level by
    // level; the last internal node created is the root. For t = 1 the root
    // hangs off s_1 directly.
    let mut next_id = 2 * gates + t + 1;
    let mut collector_internal = Vec::new();
    let mut level = selectors.clone();
    if t == 1 {
        collector_internal.push(id(next_id));
        next_id += 1;
    } else {
        while level.len() > 1 {
            let mut next_level = Vec::new();
            for chunk in level.chunks(2) {
                if chunk.len() == 2 {
                    let parent = id(next_id);
                    next_id += 1;
                    collector_internal.push(parent);
                    next_level.push(parent);
                } else {
                    next_level.push(chunk[0]);
                }
            }
            level = next_level;
        }
    }
    let root = *collector_internal.last().unwrap();
    Ok(Thm3Layout {
        circuit,
        gate_node,
        selectors,
        collector_internal,
        root,
        node_count: next_id - 1,
    })
}

/// Collector edges as (child, parent) pairs, mirroring the level-by-level
/// construction in `thm3_layout`.
fn collector_edges(layout: &Thm3Layout, t: u32) -> Vec<(NodeId, NodeId)> {
    let mut out = Vec::new();
    if t == 1 {
        out.push((layout.selectors[0], layout.root));
        return out;
    }
    let mut internal = layout.collector_internal.iter();
    let mut level = layout.selectors.clone();
    while level.len() > 1 {
        let mut next_level = Vec::new();
        for chunk in level.chunks(2) {
            if chunk.len() == 2 {
                let parent = *internal.next().unwrap();
                out.push((chunk[0], parent));
                out.push((chunk[1], parent));
                next_level.push(parent);
            } else {
                next_level.push(chunk[0]);
            }
        }
        level = next_level;
    }
    out
}

/// Builds the ternary instance: two decoder copies whose inputs are tied to a
/// shared selector, plus a collector tree whose root keeps negating itself
/// while no Error is visible. Node ids: copy-A gates 1..N in circuit order,
/// copy-B gates N+1..2N, selectors, then collector nodes bottom-up.
pub fn build_thm3_instance(
    t: u32,
    a: &BTreeSet<u32>,
    b: &BTreeSet<u32>,
) -> Result<GadgetInstance> {
    validate_index_set(t, a)?;
    validate_index_set(t, b)?;
    let layout = thm3_layout(t)?;
    let circuit = &layout.circuit;

    let mut edges: Vec<Edge> = Vec::new();
    for copy in 0..2 {
        let map = &layout.gate_node[copy];
        for gate in &circuit.gates {
            for &src in &gate.ins {
                edges.push(edge(map[src as usize], map[gate.id as usize]));
            }
        }
        for (i0, &g) in circuit.inputs.iter().enumerate() {
            edges.push(edge(map[g as usize], layout.selectors[i0]));
        }
    }
    for (child, parent) in collector_edges(&layout, t) {
        edges.push(edge(child, parent));
    }
    let nodes: Vec<NodeId> = (1..=layout.node_count).map(id).collect();
    let graph = Graph::new(nodes, &edges)?;

    let mut functions = BTreeMap::new();
    let mut roles = BTreeMap::new();
    for (copy, set, tag) in [(0usize, a, "decoder-a"), (1, b, "decoder-b")] {
        let map = &layout.gate_node[copy];
        for gate in &circuit.gates {
            let v = map[gate.id as usize];
            let arity = graph.degree(v) as u16;
            let rule = match gate.kind {
                GateKind::Input => {
                    let bit = match gate.role {
                        GateRole::Input { bit } => bit,
                        _ => unreachable!("input gate without input role"),
                    };
                    let s = layout.selectors[bit as usize - 1];
                    StructuredRule::Thm3Input { arity, selector_port: port_of(&graph, v, s) }
                }
                kind => {
                    let op = match kind {
                        GateKind::And => GateOp::And,
                        GateKind::Or => GateOp::Or,
                        GateKind::Not => GateOp::Not,
                        GateKind::Input => unreachable!(),
                    };
                    let in_ports = gate
                        .ins
                        .iter()
                        .map(|&src| port_of(&graph, v, map[src as usize]))
                        .collect();
                    let output = match gate.role {
                        GateRole::Output { index } => {
                            Some(OutputTag { index, in_set: set.contains(&index) })
                        }
                        _ => None,
                    };
                    StructuredRule::Thm3Gate { arity, op, in_ports, output }
                }
            };
            functions.insert(v, LocalFunction::Structured(rule));
            roles.insert(v, tag.to_string());
        }
    }
    for &s in &layout.selectors {
        functions.insert(
            s,
            LocalFunction::Structured(StructuredRule::Thm3Selector {
                arity: graph.degree(s) as u16,
            }),
        );
        roles.insert(s, "selector".to_string());
    }
    for &c in &layout.collector_internal {
        let rule = if c == layout.root {
            StructuredRule::Thm3Root { arity: graph.degree(c) as u16 }
        } else {
            StructuredRule::Thm3Collector { arity: graph.degree(c) as u16 }
        };
        functions.insert(c, LocalFunction::Structured(rule));
        roles.insert(c, if c == layout.root { "root" } else { "collector" }.to_string());
    }
    let dynamics = Dynamics::new(graph, StateAlphabet::new(ternary::Q)?, functions)?;
    Ok(GadgetInstance { dynamics, roles })
}

/// Divergence witness for a common index i: selector spells i-1, every
/// decoder node holds its true gate value, collector all False. Nothing ever
/// errors and the root flips forever.
pub fn thm3_witness(
    instance: &GadgetInstance,
    t: u32,
    a: &BTreeSet<u32>,
    b: &BTreeSet<u32>,
    i: u32,
) -> Result<Configuration> {
    if !a.contains(&i) || !b.contains(&i) {
        return Err(FsdError::OutOfRange(format!("index {i} not common to both sets")));
    }
    let layout = thm3_layout(t)?;
    let inputs: Vec<bool> = (0..t).map(|j| ((i - 1) >> j) & 1 == 1).collect();
    let values = circuit::evaluate_gates(&layout.circuit, &inputs)?;
    let dynamics = &instance.dynamics;
    let mut x = Configuration::new(vec![ternary::FALSE; dynamics.n()]);
    for copy in 0..2 {
        for (g, &val) in values.iter().enumerate() {
            x.set(dynamics, layout.gate_node[copy][g], u8::from(val));
        }
    }
    for (j, &s) in layout.selectors.iter().enumerate() {
        x.set(dynamics, s, u8::from(inputs[j]));
    }
    Ok(x)
}

/// Checks "converges within 6t steps iff the index sets are disjoint",
/// exhaustively when 3^|V| fits the cap (t = 1), otherwise by witness
/// injection plus sampling.
pub fn check_thm3_reduction(
    t: u32,
    a: &BTreeSet<u32>,
    b: &BTreeSet<u32>,
    cap: Option<u128>,
    samples: usize,
    seed: u64,
) -> Result<ReductionReport> {
    let instance = build_thm3_instance(t, a, b)?;
    let disjoint = a.is_disjoint(b);
    let mut targeted = Vec::new();
    if let Some(&i) = a.intersection(b).next() {
        targeted.push(thm3_witness(&instance, t, a, b, i)?);
    }
    reduction_report(&instance.dynamics, 6 * t as usize, disjoint, &targeted, cap, samples, seed)
}
