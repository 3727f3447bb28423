//! Binary decoder circuits: t input bits fan out to 2^t one-hot outputs.
//!
//! Built from 2-duplicators (one-input Or replication), duplicator trees, and
//! expanders (Not + replication), recursively: the low t-1 bits drive two
//! half-size decoders whose outputs are gated by the top bit. Duplicator and
//! expander inputs are identified with the circuit inputs that feed them, so
//! the base decoder for t = 1 is three gates: the input, a Not, and an Or.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::error::{FsdError, Result};

pub type GateId = u32;

pub const MAX_DECODER_BITS: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    Input,
    And,
    Or,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "lowercase")]
pub enum GateRole {
    /// Circuit input d_bit; bit 1 is least significant.
    Input { bit: u32 },
    /// Circuit output v_index; output `index` is hot for input value index-1.
    Output { index: u32 },
    Internal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gate {
    pub id: GateId,
    pub kind: GateKind,
    /// Ordered in-neighbors.
    pub ins: Vec<GateId>,
    /// Out-neighbors in construction order.
    pub outs: Vec<GateId>,
    pub role: GateRole,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Circuit {
    pub gates: Vec<Gate>,
    /// Input gate ids, least significant bit first.
    pub inputs: Vec<GateId>,
    /// Output gate ids, v_1 first.
    pub outputs: Vec<GateId>,
}

impl Circuit {
    pub fn gate(&self, id: GateId) -> &Gate {
        &self.gates[id as usize]
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    pub fn total_degree(&self, id: GateId) -> usize {
        let g = self.gate(id);
        g.ins.len() + g.outs.len()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph decoder {\n  node [shape=box];\n");
        for g in &self.gates {
            let label = match g.role {
                GateRole::Input { bit } => format!("d{bit}"),
                GateRole::Output { index } => format!("v{index}\\n{:?}", g.kind),
                GateRole::Internal => format!("{:?}", g.kind),
            };
            writeln!(out, "  g{} [label=\"{label}\"];", g.id).unwrap();
        }
        for g in &self.gates {
            for &i in &g.ins {
                writeln!(out, "  g{i} -> g{};", g.id).unwrap();
            }
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Default)]
struct Builder {
    gates: Vec<Gate>,
}

impl Builder {
    fn add(&mut self, kind: GateKind, ins: Vec<GateId>) -> GateId {
        let id = self.gates.len() as GateId;
        for &src in &ins {
            self.gates[src as usize].outs.push(id);
        }
        self.gates.push(Gate { id, kind, ins, outs: Vec::new(), role: GateRole::Internal });
        id
    }

    fn input(&mut self, bit: u32) -> GateId {
        let id = self.add(GateKind::Input, Vec::new());
        self.gates[id as usize].role = GateRole::Input { bit };
        id
    }
}

/// Leaves of a replication tree of the given width hanging off `root`.
fn duplicate_tree(b: &mut Builder, root: GateId, width: usize) -> Vec<GateId> {
    debug_assert!(width.is_power_of_two());
    if width == 1 {
        return vec![root];
    }
    let left = b.add(GateKind::Or, vec![root]);
    let right = b.add(GateKind::Or, vec![root]);
    let mut leaves = duplicate_tree(b, left, width / 2);
    leaves.extend(duplicate_tree(b, right, width / 2));
    leaves
}

/// Decoder body over existing input wires; returns the 2^t outputs.
fn build_body(b: &mut Builder, t: u32, inputs: &[GateId]) -> Vec<GateId> {
    debug_assert_eq!(inputs.len(), t as usize);
    if t == 1 {
        let not = b.add(GateKind::Not, vec![inputs[0]]);
        let or = b.add(GateKind::Or, vec![inputs[0]]);
        return vec![not, or];
    }
    let half = 1usize << (t - 1);
    // 2-duplicators on the low t-1 bits feed the two half-size copies.
    let mut sub1_inputs = Vec::with_capacity(t as usize - 1);
    let mut sub2_inputs = Vec::with_capacity(t as usize - 1);
    for &d in &inputs[..t as usize - 1] {
        sub1_inputs.push(b.add(GateKind::Or, vec![d]));
        sub2_inputs.push(b.add(GateKind::Or, vec![d]));
    }
    // Expander on the top bit: Not gates the low half, Or the high half.
    let not_top = b.add(GateKind::Not, vec![inputs[t as usize - 1]]);
    let or_top = b.add(GateKind::Or, vec![inputs[t as usize - 1]]);
    let out1 = build_body(b, t - 1, &sub1_inputs);
    let out2 = build_body(b, t - 1, &sub2_inputs);
    let u1 = duplicate_tree(b, not_top, half);
    let u2 = duplicate_tree(b, or_top, half);
    let mut ands = Vec::with_capacity(2 * half);
    for i in 0..half {
        ands.push(b.add(GateKind::And, vec![out1[i], u1[i]]));
    }
    for i in 0..half {
        ands.push(b.add(GateKind::And, vec![out2[i], u2[i]]));
    }
    // Output duplication so every output has in-degree 1 and the And gates
    // stay within total degree 3.
    ands.iter().map(|&a| b.add(GateKind::Or, vec![a])).collect()
}

/// Decoder on t bits with 2^t outputs; output v_i is hot exactly for the
/// input whose binary value (d_1 least significant) is i-1.
pub fn build_decoder(t: u32) -> Result<Circuit> {
    if t == 0 || t > MAX_DECODER_BITS {
        return Err(FsdError::OutOfRange(format!(
            "decoder bits must be in 1..={MAX_DECODER_BITS}, got {t}"
        )));
    }
    let mut b = Builder::default();
    let inputs: Vec<GateId> = (1..=t).map(|bit| b.input(bit)).collect();
    let outputs = build_body(&mut b, t, &inputs);
    for (i, &o) in outputs.iter().enumerate() {
        b.gates[o as usize].role = GateRole::Output { index: i as u32 + 1 };
    }
    Ok(Circuit { gates: b.gates, inputs, outputs })
}

/// Standalone replication fragment: one input, `width` equal outputs,
/// 2*width - 1 gates.
pub fn build_duplicator(width: usize) -> Result<Circuit> {
    if !width.is_power_of_two() {
        return Err(FsdError::OutOfRange(format!("duplicator width {width} not a power of two")));
    }
    let mut b = Builder::default();
    let input = b.input(1);
    let outputs = duplicate_tree(&mut b, input, width);
    for (i, &o) in outputs.iter().enumerate() {
        b.gates[o as usize].role = GateRole::Output { index: i as u32 + 1 };
    }
    Ok(Circuit { gates: b.gates, inputs: vec![input], outputs })
}

/// Standalone expander fragment: outputs (Not(x), x).
pub fn build_expander() -> Circuit {
    let mut b = Builder::default();
    let input = b.input(1);
    let not = b.add(GateKind::Not, vec![input]);
    let or = b.add(GateKind::Or, vec![input]);
    b.gates[not as usize].role = GateRole::Output { index: 1 };
    b.gates[or as usize].role = GateRole::Output { index: 2 };
    Circuit { gates: b.gates, inputs: vec![input], outputs: vec![not, or] }
}

/// Kahn topological order; errors if the gate graph has a cycle.
pub fn topological_order(c: &Circuit) -> Result<Vec<GateId>> {
    let n = c.gates.len();
    let mut indeg: Vec<usize> = c.gates.iter().map(|g| g.ins.len()).collect();
    let mut queue: Vec<GateId> =
        (0..n as GateId).filter(|&i| indeg[i as usize] == 0).collect();
    let mut order = Vec::with_capacity(n);
    let mut head = 0;
    while head < queue.len() {
        let u = queue[head];
        head += 1;
        order.push(u);
        for &w in &c.gates[u as usize].outs {
            indeg[w as usize] -= 1;
            if indeg[w as usize] == 0 {
                queue.push(w);
            }
        }
    }
    if order.len() != n {
        return Err(FsdError::CircuitCycle);
    }
    Ok(order)
}

/// Per-gate values under the given input assignment (d_1 first).
pub fn evaluate_gates(c: &Circuit, inputs: &[bool]) -> Result<Vec<bool>> {
    if inputs.len() != c.inputs.len() {
        return Err(FsdError::OutOfRange(format!(
            "expected {} input bits, got {}",
            c.inputs.len(),
            inputs.len()
        )));
    }
    let mut values = vec![false; c.gates.len()];
    for (&g, &v) in c.inputs.iter().zip(inputs) {
        values[g as usize] = v;
    }
    for id in topological_order(c)? {
        let gate = &c.gates[id as usize];
        if gate.kind == GateKind::Input {
            continue;
        }
        let in_values: Vec<bool> = gate.ins.iter().map(|&i| values[i as usize]).collect();
        values[id as usize] = match gate.kind {
            GateKind::And => in_values.iter().all(|&b| b),
            GateKind::Or => in_values.iter().any(|&b| b),
            GateKind::Not => !in_values[0],
            GateKind::Input => unreachable!(),
        };
    }
    Ok(values)
}

/// Output values v_1..v_{2^t}.
pub fn evaluate(c: &Circuit, inputs: &[bool]) -> Result<Vec<bool>> {
    let values = evaluate_gates(c, inputs)?;
    Ok(c.outputs.iter().map(|&o| values[o as usize]).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StructureReport {
    pub bits: u32,
    pub gate_count: usize,
    /// (8t-3)*2^(t-1) - t, the count under unmerged duplicator/expander
    /// inputs; merging saves one gate per expander, 2^(t-1) in total.
    pub reference_count: u64,
    pub count_delta: i64,
    pub max_total_degree: usize,
    pub max_input_out_degree: usize,
    pub max_output_in_degree: usize,
    pub depth: usize,
    pub depth_bound: usize,
}

pub fn reference_gate_count(t: u32) -> u64 {
    (8 * t as u64 - 3) * (1 << (t - 1)) - t as u64
}

/// Measures degree conditions, depth, and the gate-count delta against the
/// unmerged reference formula. Deviations are reported, never fatal.
pub fn audit_structure(c: &Circuit, t: u32) -> Result<StructureReport> {
    let order = topological_order(c)?;
    let mut depth = vec![0usize; c.gates.len()];
    for &id in &order {
        let g = &c.gates[id as usize];
        depth[id as usize] =
            g.ins.iter().map(|&i| depth[i as usize] + 1).max().unwrap_or(0);
    }
    let max_total_degree = (0..c.gates.len() as GateId).map(|i| c.total_degree(i)).max().unwrap();
    let max_input_out_degree =
        c.inputs.iter().map(|&i| c.gate(i).outs.len()).max().unwrap_or(0);
    let max_output_in_degree =
        c.outputs.iter().map(|&o| c.gate(o).ins.len()).max().unwrap_or(0);
    let reference = reference_gate_count(t);
    Ok(StructureReport {
        bits: t,
        gate_count: c.gate_count(),
        reference_count: reference,
        count_delta: c.gate_count() as i64 - reference as i64,
        max_total_degree,
        max_input_out_degree,
        max_output_in_degree,
        depth: depth.iter().copied().max().unwrap_or(0),
        depth_bound: 3 * t as usize,
    })
}

/// The defining truth table: output i (1-based) is hot iff the input bits
/// encode i-1 with d_1 least significant.
pub fn one_hot_reference(t: u32, inputs: &[bool]) -> Vec<bool> {
    let value: usize =
        inputs.iter().enumerate().map(|(i, &b)| (b as usize) << i).sum();
    (0..1usize << t).map(|i| i == value).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(value: usize, t: u32) -> Vec<bool> {
        (0..t).map(|i| (value >> i) & 1 == 1).collect()
    }

    #[test]
    fn fragment_shapes_and_values() {
        let dup8 = build_duplicator(8).unwrap();
        assert_eq!(dup8.gate_count(), 15);
        assert_eq!(evaluate(&dup8, &[true]).unwrap(), vec![true; 8]);
        let dup4 = build_duplicator(4).unwrap();
        assert_eq!(evaluate(&dup4, &[false]).unwrap(), vec![false; 4]);
        let exp = build_expander();
        assert_eq!(evaluate(&exp, &[true]).unwrap(), vec![false, true]);
        assert_eq!(evaluate(&exp, &[false]).unwrap(), vec![true, false]);
    }

    #[test]
    fn decoder_base_case() {
        let c = build_decoder(1).unwrap();
        assert_eq!(c.gate_count(), 3);
        assert_eq!(evaluate(&c, &[false]).unwrap(), vec![true, false]);
        assert_eq!(evaluate(&c, &[true]).unwrap(), vec![false, true]);
    }

    #[test]
    fn decoder_is_one_hot_up_to_six_bits() {
        for t in 1..=6 {
            let c = build_decoder(t).unwrap();
            for value in 0..1usize << t {
                let input = bits(value, t);
                assert_eq!(
                    evaluate(&c, &input).unwrap(),
                    one_hot_reference(t, &input),
                    "t={t} value={value}"
                );
            }
        }
    }

    #[test]
    fn structure_audit() {
        // one gate per expander saved relative to the reference formula
        let expected = [(1, 3), (2, 22), (3, 77), (4, 220)];
        for (t, count) in expected {
            let c = build_decoder(t).unwrap();
            let report = audit_structure(&c, t).unwrap();
            assert_eq!(report.gate_count, count);
            assert_eq!(report.count_delta, -(1 << (t - 1)));
            assert!(report.max_total_degree <= 3);
            assert!(report.max_input_out_degree <= 2);
            assert!(report.max_output_in_degree <= 2);
            assert_eq!(report.depth, 3 * t as usize - 2);
            assert!(report.depth <= report.depth_bound);
        }
        assert_eq!(reference_gate_count(2), 24);
        assert_eq!(reference_gate_count(3), 81);
        assert_eq!(reference_gate_count(4), 228);
        assert_eq!(reference_gate_count(6), 1434);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(build_decoder(0).is_err());
        assert!(build_decoder(MAX_DECODER_BITS + 1).is_err());
        assert!(build_duplicator(3).is_err());
    }
}
