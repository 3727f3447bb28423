//! Generic one-round certification machinery: certificates, node views, the
//! verifier runner, and completeness/soundness/locality test harnesses.
//!
//! Certificates are opaque byte strings at this layer; concrete schemes
//! define their own encodings.

use std::collections::BTreeMap;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Dynamics, LocalFunction};
use crate::error::{FsdError, Result};
use crate::graph::NodeId;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Certificate {
    pub bytes: Vec<u8>,
    pub bit_length: usize,
}

impl Certificate {
    pub fn new(bytes: Vec<u8>, bit_length: usize) -> Result<Self> {
        if (bit_length + 7) / 8 != bytes.len() {
            return Err(FsdError::MalformedCertificate(format!(
                "bit length {bit_length} inconsistent with {} bytes",
                bytes.len()
            )));
        }
        Ok(Certificate { bytes, bit_length })
    }

    pub fn empty() -> Self {
        Certificate::default()
    }

    pub fn is_empty(&self) -> bool {
        self.bit_length == 0
    }

    pub fn flip_bit(&mut self, bit: usize) {
        self.bytes[bit / 8] ^= 1 << (7 - bit % 8);
    }
}

/// One certificate per node.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CertificateAssignment(pub BTreeMap<NodeId, Certificate>);

#[derive(Serialize, Deserialize)]
struct CertificateJson {
    bytes: String,
    bit_length: usize,
}

impl CertificateAssignment {
    pub fn get(&self, v: NodeId) -> &Certificate {
        &self.0[&v]
    }

    pub fn max_bits(&self) -> usize {
        self.0.values().map(|c| c.bit_length).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> Result<String> {
        let map: BTreeMap<String, CertificateJson> = self
            .0
            .iter()
            .map(|(v, c)| {
                (
                    v.0.to_string(),
                    CertificateJson { bytes: BASE64.encode(&c.bytes), bit_length: c.bit_length },
                )
            })
            .collect();
        Ok(serde_json::to_string(&map)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let map: BTreeMap<String, CertificateJson> =
            serde_json::from_str(text).map_err(|e| FsdError::MalformedCertificate(e.to_string()))?;
        let mut out = BTreeMap::new();
        for (key, cj) in map {
            let id: u32 = key
                .parse()
                .map_err(|_| FsdError::MalformedCertificate(format!("bad node key {key:?}")))?;
            let bytes = BASE64
                .decode(&cj.bytes)
                .map_err(|e| FsdError::MalformedCertificate(e.to_string()))?;
            out.insert(NodeId(id), Certificate::new(bytes, cj.bit_length)?);
        }
        Ok(CertificateAssignment(out))
    }
}

/// Everything a node sees in one verification round: itself, its ports, and
/// the certificates at distance <= 1. Nothing else.
#[derive(Debug, Clone)]
pub struct NodeView<'a> {
    pub id: NodeId,
    pub q: u8,
    pub ports: &'a [NodeId],
    pub local_function: &'a LocalFunction,
    pub own_certificate: &'a Certificate,
    /// In port order.
    pub neighbor_certificates: Vec<&'a Certificate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectTag {
    /// Some certificate in view failed to decode.
    Malformed,
    /// Ball-containment check failed.
    CondA,
    /// Function-consistency check failed.
    CondB,
    /// Simulation found a non-converging assignment (or the node itself was
    /// not simulable from the claims).
    CondC,
    /// The simulation would exceed the configured budget.
    Budget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "decision", content = "tag")]
pub enum Decision {
    Accept,
    Reject(RejectTag),
}

impl Decision {
    pub fn is_accept(self) -> bool {
        self == Decision::Accept
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SchemeOutcome {
    pub decisions: BTreeMap<NodeId, Decision>,
    /// AND over all node decisions.
    pub accepted: bool,
    pub max_certificate_bits: usize,
}

/// Evaluates `verifier` at every node on exactly its NodeView; nodes are
/// independent and run in parallel.
pub fn run_verifier<F>(
    dynamics: &Dynamics,
    assignment: &CertificateAssignment,
    verifier: F,
) -> Result<SchemeOutcome>
where
    F: Fn(&NodeView) -> Decision + Sync,
{
    let g = &dynamics.graph;
    for &v in g.nodes() {
        if !assignment.0.contains_key(&v) {
            return Err(FsdError::MalformedCertificate(format!("no certificate for node {v}")));
        }
    }
    let decisions: BTreeMap<NodeId, Decision> = g
        .nodes()
        .par_iter()
        .map(|&v| {
            let view = NodeView {
                id: v,
                q: dynamics.q(),
                ports: g.ports(v),
                local_function: &dynamics.functions[&v],
                own_certificate: assignment.get(v),
                neighbor_certificates: g.ports(v).iter().map(|&u| assignment.get(u)).collect(),
            };
            (v, verifier(&view))
        })
        .collect();
    let accepted = decisions.values().all(|d| d.is_accept());
    Ok(SchemeOutcome { decisions, accepted, max_certificate_bits: assignment.max_bits() })
}

/// Instances where some node rejected honest certificates; empty = pass.
pub fn check_completeness<P, F>(
    instances: &[Dynamics],
    prover: P,
    verifier: F,
) -> Result<Vec<usize>>
where
    P: Fn(&Dynamics) -> Result<CertificateAssignment>,
    F: Fn(&Dynamics, &NodeView) -> Decision + Sync,
{
    let mut failures = Vec::new();
    for (idx, dynamics) in instances.iter().enumerate() {
        let assignment = prover(dynamics)?;
        let outcome = run_verifier(dynamics, &assignment, |view| verifier(dynamics, view))?;
        if !outcome.accepted {
            failures.push(idx);
        }
    }
    Ok(failures)
}

#[derive(Debug, Clone, Copy)]
pub struct SoundnessBudget {
    /// Per-node certificate length cap for the exhaustive phase, in bits.
    pub exhaustive_bit_limit: usize,
    /// Exhaustive phase is skipped when the assignment count exceeds this.
    pub exhaustive_assignment_cap: u128,
    /// Honest certificates with a few random bit flips.
    pub mutation_trials: usize,
    /// Uniformly random certificates of honest per-node lengths.
    pub random_trials: usize,
    pub seed: u64,
}

impl Default for SoundnessBudget {
    fn default() -> Self {
        SoundnessBudget {
            exhaustive_bit_limit: 8,
            exhaustive_assignment_cap: 1 << 24,
            mutation_trials: 1000,
            random_trials: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SoundnessVerdict {
    /// No all-accept assignment found; flags record which phases ran to
    /// completion.
    NoAcceptingAssignmentFound { exhaustive_covered: bool },
    /// All-accept assignment on a NO instance: a soundness bug, returned as
    /// evidence.
    Forged(Box<CertificateAssignment>),
}

/// Certificate number `index` in the length-ordered enumeration of all
/// certificates of at most `limit` bits: index 0 is empty, then the two
/// 1-bit strings, the four 2-bit strings, ...
fn certificate_by_index(mut index: u128, limit: usize) -> Certificate {
    let mut len = 0;
    while index >= 1u128 << len {
        index -= 1u128 << len;
        len += 1;
        debug_assert!(len <= limit);
    }
    let mut bytes = vec![0u8; (len + 7) / 8];
    for bit in 0..len {
        if (index >> (len - 1 - bit)) & 1 == 1 {
            bytes[bit / 8] |= 1 << (7 - bit % 8);
        }
    }
    Certificate { bytes, bit_length: len }
}

fn random_certificate(rng: &mut ChaCha8Rng, bit_length: usize) -> Certificate {
    let mut bytes = vec![0u8; (bit_length + 7) / 8];
    rng.fill(bytes.as_mut_slice());
    if bit_length % 8 != 0 {
        let last = bytes.len() - 1;
        bytes[last] &= !0u8 << (8 - bit_length % 8);
    }
    Certificate { bytes, bit_length }
}

/// Searches for an all-accept assignment on a NO instance: (i) exhaustively
/// over short certificates when feasible, (ii) honest certificates with
/// random bit flips, (iii) random certificates of honest lengths.
pub fn search_soundness<F>(
    dynamics: &Dynamics,
    honest: &CertificateAssignment,
    verifier: F,
    budget: &SoundnessBudget,
) -> Result<SoundnessVerdict>
where
    F: Fn(&NodeView) -> Decision + Sync,
{
    let n = dynamics.n();
    let nodes: Vec<NodeId> = dynamics.graph.nodes().to_vec();

    // (i) exhaustive over all assignments of certificates up to the bit limit
    let per_node: u128 = (2u128 << budget.exhaustive_bit_limit) - 1;
    let total = per_node.checked_pow(n as u32);
    let exhaustive_covered = match total {
        Some(total) if total <= budget.exhaustive_assignment_cap => {
            let found = (0..total as u64).into_par_iter().find_map_first(|combo| {
                let mut rest = combo as u128;
                let mut assignment = CertificateAssignment::default();
                for &v in &nodes {
                    assignment
                        .0
                        .insert(v, certificate_by_index(rest % per_node, budget.exhaustive_bit_limit));
                    rest /= per_node;
                }
                match run_verifier(dynamics, &assignment, &verifier) {
                    Ok(outcome) if outcome.accepted => Some(assignment),
                    _ => None,
                }
            });
            if let Some(assignment) = found {
                return Ok(SoundnessVerdict::Forged(Box::new(assignment)));
            }
            true
        }
        _ => false,
    };

    // (ii) honest certificates with 1..=3 random bit flips at random nodes
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    for _ in 0..budget.mutation_trials {
        let mut assignment = honest.clone();
        for _ in 0..rng.gen_range(1..=3usize) {
            let v = nodes[rng.gen_range(0..n)];
            let cert = assignment.0.get_mut(&v).unwrap();
            if cert.bit_length > 0 {
                let bit = rng.gen_range(0..cert.bit_length);
                cert.flip_bit(bit);
            }
        }
        if run_verifier(dynamics, &assignment, &verifier)?.accepted {
            return Ok(SoundnessVerdict::Forged(Box::new(assignment)));
        }
    }

    // (iii) uniformly random certificates of the honest lengths
    for _ in 0..budget.random_trials {
        let assignment = CertificateAssignment(
            nodes
                .iter()
                .map(|&v| (v, random_certificate(&mut rng, honest.get(v).bit_length)))
                .collect(),
        );
        if run_verifier(dynamics, &assignment, &verifier)?.accepted {
            return Ok(SoundnessVerdict::Forged(Box::new(assignment)));
        }
    }
    Ok(SoundnessVerdict::NoAcceptingAssignmentFound { exhaustive_covered })
}

/// Perturbs certificates of nodes at distance >= 2 from random probe nodes
/// and checks the probe's decision never changes: one-round locality.
pub fn locality_audit<F>(
    dynamics: &Dynamics,
    assignment: &CertificateAssignment,
    verifier: F,
    trials: usize,
    seed: u64,
) -> Result<bool>
where
    F: Fn(&NodeView) -> Decision + Sync,
{
    let g = &dynamics.graph;
    let baseline = run_verifier(dynamics, assignment, &verifier)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let probe = g.nodes()[rng.gen_range(0..g.n())];
        let dist = g.distances_from(probe);
        let far: Vec<NodeId> =
            g.nodes().iter().copied().filter(|v| dist[v] >= 2).collect();
        if far.is_empty() {
            continue;
        }
        let mut mutated = assignment.clone();
        for &v in &far {
            let len = mutated.get(v).bit_length.max(4);
            mutated.0.insert(v, random_certificate(&mut rng, len));
        }
        let outcome = run_verifier(dynamics, &mutated, &verifier)?;
        if outcome.decisions[&probe] != baseline.decisions[&probe] {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::StateAlphabet;
    use crate::graph::Graph;

    fn id(v: u32) -> NodeId {
        NodeId(v)
    }

    fn triangle_identity() -> Dynamics {
        let g = Graph::new(
            vec![id(1), id(2), id(3)],
            &[(id(1), id(2)), (id(2), id(3)), (id(1), id(3))],
        )
        .unwrap();
        let f = |g: &Graph, v: NodeId| {
            let d = g.degree(v);
            let len = (2usize).pow(d as u32 + 1);
            let table: Vec<u8> = (0..len).map(|i| (i >> d) as u8).collect();
            LocalFunction::table(d, table, 2).unwrap()
        };
        let functions = g.nodes().iter().map(|&v| (v, f(&g, v))).collect();
        Dynamics::new(g, StateAlphabet::new(2).unwrap(), functions).unwrap()
    }

    fn empty_assignment(dynamics: &Dynamics) -> CertificateAssignment {
        CertificateAssignment(
            dynamics.graph.nodes().iter().map(|&v| (v, Certificate::empty())).collect(),
        )
    }

    #[test]
    fn always_accept_and_nonempty_reject() {
        let dynamics = triangle_identity();
        let assignment = empty_assignment(&dynamics);
        let outcome = run_verifier(&dynamics, &assignment, |_| Decision::Accept).unwrap();
        assert!(outcome.accepted);
        let outcome2 = run_verifier(&dynamics, &assignment, |view| {
            if view.own_certificate.is_empty() {
                Decision::Accept
            } else {
                Decision::Reject(RejectTag::Malformed)
            }
        })
        .unwrap();
        assert!(outcome2.accepted);
    }

    #[test]
    fn soundness_search_extremes() {
        let dynamics = triangle_identity();
        let honest = empty_assignment(&dynamics);
        let budget = SoundnessBudget {
            exhaustive_bit_limit: 2,
            mutation_trials: 10,
            random_trials: 10,
            ..SoundnessBudget::default()
        };
        // always-reject at node 1: nothing accepted
        let v = search_soundness(
            &dynamics,
            &honest,
            |view| {
                if view.id == id(1) {
                    Decision::Reject(RejectTag::CondC)
                } else {
                    Decision::Accept
                }
            },
            &budget,
        )
        .unwrap();
        assert_eq!(v, SoundnessVerdict::NoAcceptingAssignmentFound { exhaustive_covered: true });
        // always-accept: first assignment forged
        let v2 = search_soundness(&dynamics, &honest, |_| Decision::Accept, &budget).unwrap();
        assert!(matches!(v2, SoundnessVerdict::Forged(_)));
    }

    #[test]
    fn certificate_enumeration_is_length_ordered() {
        assert_eq!(certificate_by_index(0, 4), Certificate::empty());
        let one_bit = certificate_by_index(1, 4);
        assert_eq!(one_bit.bit_length, 1);
        let c = certificate_by_index(3, 4); // first 2-bit string, 00
        assert_eq!((c.bit_length, c.bytes[0]), (2, 0));
        let c2 = certificate_by_index(6, 4); // last 2-bit string, 11
        assert_eq!((c2.bit_length, c2.bytes[0]), (2, 0b1100_0000));
    }

    #[test]
    fn locality_audit_pass_and_fail() {
        // path of 3 so distance-2 pairs exist
        let g = Graph::new(vec![id(1), id(2), id(3)], &[(id(1), id(2)), (id(2), id(3))]).unwrap();
        let f = |d: usize| {
            let len = (2usize).pow(d as u32 + 1);
            let table: Vec<u8> = (0..len).map(|i| (i >> d) as u8).collect();
            LocalFunction::table(d, table, 2).unwrap()
        };
        let functions = g.nodes().iter().map(|&v| (v, f(g.degree(v)))).collect();
        let dynamics = Dynamics::new(g, StateAlphabet::new(2).unwrap(), functions).unwrap();
        let assignment = empty_assignment(&dynamics);
        assert!(locality_audit(&dynamics, &assignment, |_| Decision::Accept, 20, 1).unwrap());
        // negative control: a verifier whose decision depends on hidden shared
        // state (not a pure function of the NodeView) must be caught
        let calls = std::sync::atomic::AtomicUsize::new(0);
        let cheat = |_view: &NodeView| {
            let c = calls.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
            if c < 3 {
                Decision::Accept
            } else {
                Decision::Reject(RejectTag::CondA)
            }
        };
        assert!(!locality_audit(&dynamics, &assignment, cheat, 20, 1).unwrap());
    }

    #[test]
    fn assignment_json_round_trip() {
        let dynamics = triangle_identity();
        let mut assignment = empty_assignment(&dynamics);
        assignment.0.insert(id(2), Certificate::new(vec![0xAB, 0x80], 9).unwrap());
        let text = assignment.to_json().unwrap();
        assert_eq!(CertificateAssignment::from_json(&text).unwrap(), assignment);
        assert_eq!(assignment.max_bits(), 9);
    }
}
