//! Finite-state dynamics: alphabets, local functions, the synchronous global
//! function, orbits, and encoding-size accounting.

use std::collections::BTreeMap;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{FsdError, Result};
use crate::graph::{Graph, NodeId};
use crate::rules::StructuredRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateAlphabet {
    pub q: u8,
}

impl StateAlphabet {
    pub fn new(q: u8) -> Result<Self> {
        if q == 0 {
            return Err(FsdError::OutOfRange("alphabet must have q >= 1".into()));
        }
        Ok(StateAlphabet { q })
    }
}

/// A node's local update function over its closed neighborhood.
///
/// Table form indexes the next state by (self state, neighbor states in port
/// order), row-major with the self state as the most significant coordinate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LocalFunction {
    Table { arity: usize, table: Vec<u8> },
    Structured(StructuredRule),
}

impl LocalFunction {
    pub fn table(arity: usize, table: Vec<u8>, q: u8) -> Result<Self> {
        let expected = (q as u128).checked_pow(arity as u32 + 1);
        match expected {
            Some(len) if len == table.len() as u128 => {}
            _ => {
                return Err(FsdError::InvalidDynamics(format!(
                    "table length {} does not match q^(d+1) for q={q}, d={arity}",
                    table.len()
                )))
            }
        }
        if table.iter().any(|&s| s >= q) {
            return Err(FsdError::InvalidDynamics("table entry out of range".into()));
        }
        Ok(LocalFunction::Table { arity, table })
    }

    pub fn arity(&self) -> usize {
        match self {
            LocalFunction::Table { arity, .. } => *arity,
            LocalFunction::Structured(rule) => rule.arity(),
        }
    }

    pub fn eval(&self, q: u8, self_state: u8, neighbors: &[u8]) -> u8 {
        match self {
            LocalFunction::Table { table, .. } => {
                let mut idx = self_state as usize;
                for &s in neighbors {
                    idx = idx * q as usize + s as usize;
                }
                table[idx]
            }
            LocalFunction::Structured(rule) => rule.eval(self_state, neighbors),
        }
    }

    /// Expands a structured rule into table form (small arities only).
    pub fn expand_to_table(&self, q: u8) -> Result<LocalFunction> {
        let d = self.arity();
        if d > 10 {
            return Err(FsdError::OutOfRange(format!("arity {d} too large to expand")));
        }
        let len = (q as usize).pow(d as u32 + 1);
        let mut table = vec![0u8; len];
        let mut states = vec![0u8; d + 1];
        for (idx, slot) in table.iter_mut().enumerate() {
            let mut rest = idx;
            for pos in (0..=d).rev() {
                states[pos] = (rest % q as usize) as u8;
                rest /= q as usize;
            }
            *slot = self.eval(q, states[0], &states[1..]);
        }
        LocalFunction::table(d, table, q)
    }
}

/// ceil(q^(d+1) * log2 q) + (d+1) * ceil(log2(d+1)) bits for a table, or the
/// serialized byte length times 8 for a structured rule.
pub fn encoded_size_bits(f: &LocalFunction, q: u8) -> u64 {
    match f {
        LocalFunction::Table { arity, .. } => table_encoding_bits(q, *arity),
        LocalFunction::Structured(rule) => rule.to_bytes().len() as u64 * 8,
    }
}

/// The table-encoding formula, port-identification term included.
pub fn table_encoding_bits(q: u8, arity: usize) -> u64 {
    table_term_bits(q, arity) + port_term_bits(arity)
}

/// Table term only: ceil(q^(d+1) * log2 q), exact when q is a power of two.
pub fn table_term_bits(q: u8, arity: usize) -> u64 {
    if q == 1 {
        return 0;
    }
    let entries = (q as u128)
        .checked_pow(arity as u32 + 1)
        .expect("table size overflows u128");
    if q.is_power_of_two() {
        return entries as u64 * q.trailing_zeros() as u64;
    }
    (entries as f64 * (q as f64).log2()).ceil() as u64
}

/// Port-identification term: (d+1) * ceil(log2(d+1)).
pub fn port_term_bits(arity: usize) -> u64 {
    let d1 = arity as u64 + 1;
    d1 * ceil_log2(d1)
}

/// ceil(log2 n) for n >= 1.
pub fn ceil_log2(n: u64) -> u64 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros() as u64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dynamics {
    pub graph: Graph,
    pub alphabet: StateAlphabet,
    pub functions: BTreeMap<NodeId, LocalFunction>,
}

impl Dynamics {
    pub fn new(
        graph: Graph,
        alphabet: StateAlphabet,
        functions: BTreeMap<NodeId, LocalFunction>,
    ) -> Result<Self> {
        for &v in graph.nodes() {
            let f = functions
                .get(&v)
                .ok_or_else(|| FsdError::InvalidDynamics(format!("missing function for {v}")))?;
            if f.arity() != graph.degree(v) {
                return Err(FsdError::InvalidDynamics(format!(
                    "arity {} at node {v} does not match degree {}",
                    f.arity(),
                    graph.degree(v)
                )));
            }
        }
        if functions.len() != graph.n() {
            return Err(FsdError::InvalidDynamics("function for unknown node".into()));
        }
        Ok(Dynamics { graph, alphabet, functions })
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn q(&self) -> u8 {
        self.alphabet.q
    }

    /// Total number of configurations, q^n.
    pub fn configuration_count(&self) -> Option<u128> {
        (self.q() as u128).checked_pow(self.n() as u32)
    }

    pub fn validate_configuration(&self, x: &Configuration) -> Result<()> {
        if x.states().len() != self.n() {
            return Err(FsdError::ConfigurationLength {
                got: x.states().len(),
                expected: self.n(),
            });
        }
        for (i, &s) in x.states().iter().enumerate() {
            if s >= self.q() {
                return Err(FsdError::MalformedConfiguration {
                    node: self.graph.nodes()[i],
                    state: s,
                    q: self.q(),
                });
            }
        }
        Ok(())
    }
}

/// A state assignment to every node, indexed by ascending node id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration(Vec<u8>);

impl Configuration {
    pub fn new(states: Vec<u8>) -> Self {
        Configuration(states)
    }

    pub fn states(&self) -> &[u8] {
        &self.0
    }

    pub fn state_of(&self, dynamics: &Dynamics, v: NodeId) -> u8 {
        self.0[dynamics.graph.index_of(v)]
    }

    pub fn set(&mut self, dynamics: &Dynamics, v: NodeId, state: u8) {
        self.0[dynamics.graph.index_of(v)] = state;
    }

    /// Decodes the lexicographic index with node index 0 least significant.
    pub fn from_index(mut index: u128, q: u8, n: usize) -> Self {
        let mut states = vec![0u8; n];
        for s in states.iter_mut() {
            *s = (index % q as u128) as u8;
            index /= q as u128;
        }
        Configuration(states)
    }

    pub fn to_index(&self, q: u8) -> u128 {
        self.0.iter().rev().fold(0u128, |acc, &s| acc * q as u128 + s as u128)
    }
}

/// One synchronous step: every node reads from `x`, writes to the result.
pub fn apply_global(dynamics: &Dynamics, x: &Configuration) -> Result<Configuration> {
    dynamics.validate_configuration(x)?;
    Ok(apply_global_unchecked(dynamics, x))
}

pub(crate) fn apply_global_unchecked(dynamics: &Dynamics, x: &Configuration) -> Configuration {
    let g = &dynamics.graph;
    let q = dynamics.q();
    let mut nbr_states = Vec::with_capacity(g.max_degree());
    let mut next = Vec::with_capacity(g.n());
    for (i, &v) in g.nodes().iter().enumerate() {
        nbr_states.clear();
        nbr_states.extend(g.ports(v).iter().map(|&u| x.states()[g.index_of(u)]));
        next.push(dynamics.functions[&v].eval(q, x.states()[i], &nbr_states));
    }
    Configuration::new(next)
}

pub fn is_fixed_point(dynamics: &Dynamics, x: &Configuration) -> Result<bool> {
    Ok(&apply_global(dynamics, x)? == x)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OrbitOutcome {
    /// A fixed point was reached at the given step.
    FixedPoint { step: usize },
    /// The orbit entered a cycle of period >= 2.
    Cycle { start: usize, period: usize },
    /// `max_steps` elapsed before a repeat.
    Truncated,
}

#[derive(Debug, Clone)]
pub struct Orbit {
    /// x^0 .. x^T.
    pub states: Vec<Configuration>,
    pub outcome: OrbitOutcome,
}

/// Iterates the global function until a configuration repeats or `max_steps`
/// steps have been taken.
pub fn orbit(dynamics: &Dynamics, x0: &Configuration, max_steps: usize) -> Result<Orbit> {
    dynamics.validate_configuration(x0)?;
    let mut seen: HashMap<Configuration, usize> = HashMap::new();
    let mut states = vec![x0.clone()];
    seen.insert(x0.clone(), 0);
    for step in 1..=max_steps {
        let next = apply_global_unchecked(dynamics, states.last().unwrap());
        if let Some(&first) = seen.get(&next) {
            let period = step - first;
            states.push(next);
            let outcome = if period == 1 {
                OrbitOutcome::FixedPoint { step: first }
            } else {
                OrbitOutcome::Cycle { start: first, period }
            };
            return Ok(Orbit { states, outcome });
        }
        seen.insert(next.clone(), step);
        states.push(next);
    }
    // One extra probe so a fixed point exactly at max_steps is still reported.
    let next = apply_global_unchecked(dynamics, states.last().unwrap());
    let outcome = if &next == states.last().unwrap() {
        OrbitOutcome::FixedPoint { step: max_steps }
    } else {
        OrbitOutcome::Truncated
    };
    Ok(Orbit { states, outcome })
}
