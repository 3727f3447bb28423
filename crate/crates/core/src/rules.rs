//! Structured (succinct) local rules used by the lower-bound gadget
//! generators. Each rule evaluates from the node's own state plus its
//! neighbors' states in port order, and serializes to a canonical byte
//! string of O(d log d) bits.

use serde::{Deserialize, Serialize};

use crate::error::{FsdError, Result};

/// Theorem-2 mark/clock packing over Q = {0,1} x {0,1}.
pub mod mark_clock {
    pub const Q: u8 = 4;

    pub fn pack(mark: u8, clock: u8) -> u8 {
        mark * 2 + clock
    }

    pub fn mark(state: u8) -> u8 {
        state >> 1
    }

    pub fn clock(state: u8) -> u8 {
        state & 1
    }
}

/// Theorem-3 ternary states.
pub mod ternary {
    pub const Q: u8 = 3;
    pub const FALSE: u8 = 0;
    pub const TRUE: u8 = 1;
    pub const ERROR: u8 = 2;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateOp {
    And,
    Or,
    Not,
}

impl GateOp {
    pub fn apply(self, inputs: &[bool]) -> bool {
        match self {
            GateOp::And => inputs.iter().all(|&b| b),
            GateOp::Or => inputs.iter().any(|&b| b),
            GateOp::Not => !inputs[0],
        }
    }

    fn tag(self) -> u8 {
        match self {
            GateOp::And => 0,
            GateOp::Or => 1,
            GateOp::Not => 2,
        }
    }

    fn from_tag(t: u8) -> Result<Self> {
        match t {
            0 => Ok(GateOp::And),
            1 => Ok(GateOp::Or),
            2 => Ok(GateOp::Not),
            _ => Err(FsdError::MalformedInstance(format!("bad gate op tag {t}"))),
        }
    }
}

/// Output-gate annotation for Theorem-3 decoder outputs: the 1-based output
/// index and whether it belongs to the player's set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputTag {
    pub index: u32,
    pub in_set: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "params", rename_all = "kebab-case")]
pub enum StructuredRule {
    /// Bit-gadget node d^X_s of the Theorem-2 graph (q = 4).
    /// Ports are split into the partner d^Y_s, the remaining clique nodes,
    /// and the V-side nodes checked by condition d2.
    Thm2Bit {
        partner_port: u16,
        clique_ports: Vec<u16>,
        v_ports: Vec<u16>,
    },
    /// Set-gadget node v^X_i of the Theorem-2 graph (q = 4).
    /// `d_ports[s-1]` is the port of d^X_s; `half_bits` = l/2.
    Thm2Set {
        index: u32,
        half_bits: u16,
        d_ports: Vec<u16>,
        v_ports: Vec<u16>,
    },
    /// Theorem-3 selector node: holds unless a neighbor is Error.
    Thm3Selector { arity: u16 },
    /// Theorem-3 collector internal node: holds unless a neighbor is Error.
    Thm3Collector { arity: u16 },
    /// Theorem-3 collector root: negates its own value unless infected.
    Thm3Root { arity: u16 },
    /// Theorem-3 decoder input node d^X_i: must equal s_i or become Error.
    Thm3Input { arity: u16, selector_port: u16 },
    /// Theorem-3 decoder gate node: must equal its gate function applied to
    /// the incoming neighbors or become Error; output gates of indices
    /// outside the player's set additionally turn Error when True.
    Thm3Gate {
        arity: u16,
        op: GateOp,
        in_ports: Vec<u16>,
        output: Option<OutputTag>,
    },
}

impl StructuredRule {
    pub fn arity(&self) -> usize {
        match self {
            StructuredRule::Thm2Bit { clique_ports, v_ports, .. } => {
                1 + clique_ports.len() + v_ports.len()
            }
            StructuredRule::Thm2Set { d_ports, v_ports, .. } => d_ports.len() + v_ports.len(),
            StructuredRule::Thm3Selector { arity }
            | StructuredRule::Thm3Collector { arity }
            | StructuredRule::Thm3Root { arity }
            | StructuredRule::Thm3Input { arity, .. }
            | StructuredRule::Thm3Gate { arity, .. } => *arity as usize,
        }
    }

    /// Alphabet size the rule is defined over.
    pub fn q(&self) -> u8 {
        match self {
            StructuredRule::Thm2Bit { .. } | StructuredRule::Thm2Set { .. } => mark_clock::Q,
            _ => ternary::Q,
        }
    }

    pub fn eval(&self, self_state: u8, neighbors: &[u8]) -> u8 {
        debug_assert_eq!(neighbors.len(), self.arity());
        match self {
            StructuredRule::Thm2Bit { partner_port, clique_ports, v_ports } => {
                use mark_clock::{clock, mark, pack};
                let own_clock = clock(self_state);
                let partner = neighbors[*partner_port as usize];
                // d1: every node of the bit gadget shares the clock.
                let d1 = clock(partner) == own_clock
                    && clique_ports.iter().all(|&p| clock(neighbors[p as usize]) == own_clock);
                // d2: exactly two marked nodes on this node's V side.
                let d2 =
                    v_ports.iter().filter(|&&p| mark(neighbors[p as usize]) == 1).count() == 2;
                // d3: the mark matches the partner's mark.
                let d3 = mark(partner) == mark(self_state);
                if d1 && d2 && d3 {
                    pack(mark(self_state), 1 - own_clock)
                } else {
                    self_state
                }
            }
            StructuredRule::Thm2Set { index, half_bits, d_ports, v_ports } => {
                use mark_clock::{clock, mark, pack};
                let v1 = mark(self_state) == 1;
                let v2 =
                    v_ports.iter().filter(|&&p| mark(neighbors[p as usize]) == 1).count() == 1;
                // v3: the first or the second half of the bit-gadget marks
                // spells out the binary representation of the index
                // (bit s of index-1, s = 1 least significant).
                let half = *half_bits as usize;
                let matches_half = |offset: usize| {
                    (0..half).all(|s| {
                        let bit = ((*index as u64 - 1) >> s) & 1;
                        mark(neighbors[d_ports[offset + s] as usize]) as u64 == bit
                    })
                };
                let v3 = matches_half(0) || matches_half(half);
                let new_mark = u8::from(v1 && v2 && v3);
                pack(new_mark, clock(self_state))
            }
            StructuredRule::Thm3Selector { .. } | StructuredRule::Thm3Collector { .. } => {
                ternary_step(self_state, neighbors, |s| s)
            }
            StructuredRule::Thm3Root { .. } => ternary_step(self_state, neighbors, |s| 1 - s),
            StructuredRule::Thm3Input { selector_port, .. } => {
                ternary_step(self_state, neighbors, |s| {
                    if s == neighbors[*selector_port as usize] {
                        s
                    } else {
                        ternary::ERROR
                    }
                })
            }
            StructuredRule::Thm3Gate { op, in_ports, output, .. } => {
                ternary_step(self_state, neighbors, |s| {
                    let inputs: Vec<bool> = in_ports
                        .iter()
                        .map(|&p| neighbors[p as usize] == ternary::TRUE)
                        .collect();
                    let expected = u8::from(op.apply(&inputs));
                    if s != expected {
                        return ternary::ERROR;
                    }
                    match output {
                        Some(tag) if !tag.in_set && s == ternary::TRUE => ternary::ERROR,
                        _ => s,
                    }
                })
            }
        }
    }

    /// Canonical byte serialization; `from_bytes(to_bytes(r)) == r`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::default();
        match self {
            StructuredRule::Thm2Bit { partner_port, clique_ports, v_ports } => {
                w.u8(0);
                w.u16(*partner_port);
                w.ports(clique_ports);
                w.ports(v_ports);
            }
            StructuredRule::Thm2Set { index, half_bits, d_ports, v_ports } => {
                w.u8(1);
                w.u32(*index);
                w.u16(*half_bits);
                w.ports(d_ports);
                w.ports(v_ports);
            }
            StructuredRule::Thm3Selector { arity } => {
                w.u8(2);
                w.u16(*arity);
            }
            StructuredRule::Thm3Collector { arity } => {
                w.u8(3);
                w.u16(*arity);
            }
            StructuredRule::Thm3Root { arity } => {
                w.u8(4);
                w.u16(*arity);
            }
            StructuredRule::Thm3Input { arity, selector_port } => {
                w.u8(5);
                w.u16(*arity);
                w.u16(*selector_port);
            }
            StructuredRule::Thm3Gate { arity, op, in_ports, output } => {
                w.u8(6);
                w.u16(*arity);
                w.u8(op.tag());
                w.ports(in_ports);
                match output {
                    None => w.u8(0),
                    Some(tag) => {
                        w.u8(if tag.in_set { 2 } else { 1 });
                        w.u32(tag.index);
                    }
                }
            }
        }
        w.0
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let rule = match r.u8()? {
            0 => StructuredRule::Thm2Bit {
                partner_port: r.u16()?,
                clique_ports: r.ports()?,
                v_ports: r.ports()?,
            },
            1 => StructuredRule::Thm2Set {
                index: r.u32()?,
                half_bits: r.u16()?,
                d_ports: r.ports()?,
                v_ports: r.ports()?,
            },
            2 => StructuredRule::Thm3Selector { arity: r.u16()? },
            3 => StructuredRule::Thm3Collector { arity: r.u16()? },
            4 => StructuredRule::Thm3Root { arity: r.u16()? },
            5 => StructuredRule::Thm3Input { arity: r.u16()?, selector_port: r.u16()? },
            6 => StructuredRule::Thm3Gate {
                arity: r.u16()?,
                op: GateOp::from_tag(r.u8()?)?,
                in_ports: r.ports()?,
                output: match r.u8()? {
                    0 => None,
                    t @ (1 | 2) => Some(OutputTag { index: r.u32()?, in_set: t == 2 }),
                    t => {
                        return Err(FsdError::MalformedInstance(format!("bad output tag {t}")))
                    }
                },
            },
            t => return Err(FsdError::MalformedInstance(format!("bad rule tag {t}"))),
        };
        if r.pos != bytes.len() {
            return Err(FsdError::MalformedInstance("trailing rule bytes".into()));
        }
        Ok(rule)
    }
}

/// Error-first ternary semantics shared by all Theorem-3 rules: a neighbor in
/// Error (or being in Error already) dominates every other clause.
fn ternary_step(self_state: u8, neighbors: &[u8], otherwise: impl Fn(u8) -> u8) -> u8 {
    if self_state == ternary::ERROR || neighbors.contains(&ternary::ERROR) {
        ternary::ERROR
    } else {
        otherwise(self_state)
    }
}

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn ports(&mut self, ports: &[u16]) {
        self.u16(ports.len() as u16);
        for &p in ports {
            self.u16(p);
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(FsdError::MalformedInstance("truncated rule bytes".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn ports(&mut self) -> Result<Vec<u16>> {
        let len = self.u16()? as usize;
        (0..len).map(|_| self.u16()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_bytes_round_trip() {
        let rules = vec![
            StructuredRule::Thm2Bit {
                partner_port: 3,
                clique_ports: vec![0, 1, 2],
                v_ports: vec![4, 5],
            },
            StructuredRule::Thm2Set {
                index: 7,
                half_bits: 2,
                d_ports: vec![0, 1, 2, 3],
                v_ports: vec![4],
            },
            StructuredRule::Thm3Root { arity: 2 },
            StructuredRule::Thm3Input { arity: 3, selector_port: 2 },
            StructuredRule::Thm3Gate {
                arity: 3,
                op: GateOp::And,
                in_ports: vec![0, 1],
                output: Some(OutputTag { index: 5, in_set: false }),
            },
        ];
        for r in rules {
            let bytes = r.to_bytes();
            assert_eq!(StructuredRule::from_bytes(&bytes).unwrap(), r);
        }
    }

    #[test]
    fn error_is_contagious_and_absorbing() {
        let rule = StructuredRule::Thm3Root { arity: 1 };
        assert_eq!(rule.eval(ternary::ERROR, &[ternary::FALSE]), ternary::ERROR);
        assert_eq!(rule.eval(ternary::TRUE, &[ternary::ERROR]), ternary::ERROR);
        assert_eq!(rule.eval(ternary::TRUE, &[ternary::FALSE]), ternary::FALSE);
    }
}
