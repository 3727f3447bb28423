//! Canonical JSON instance format:
//! `{ "q": int, "nodes": [ids], "edges": [[id,id]...],
//!    "functions": { id: {"form":"table","table":[...]} |
//!                   {"form":"structured","rule":name,"params":{...}} } }`
//! All lists are sorted; two equal instances serialize identically.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Dynamics, LocalFunction, StateAlphabet};
use crate::error::{FsdError, Result};
use crate::graph::{Graph, NodeId};
use crate::rules::StructuredRule;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase")]
enum FunctionJson {
    Table {
        table: Vec<u8>,
    },
    Structured {
        #[serde(flatten)]
        rule: StructuredRule,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct InstanceJson {
    q: u8,
    nodes: Vec<u32>,
    edges: Vec<(u32, u32)>,
    functions: BTreeMap<String, FunctionJson>,
}

/// Serializes a dynamics to its canonical JSON text.
pub fn to_json(dynamics: &Dynamics) -> Result<String> {
    let mut nodes: Vec<u32> = dynamics.graph.nodes().iter().map(|n| n.0).collect();
    nodes.sort_unstable();
    let edges: Vec<(u32, u32)> =
        dynamics.graph.edges().into_iter().map(|(u, v)| (u.0, v.0)).collect();
    let functions = dynamics
        .functions
        .iter()
        .map(|(v, f)| {
            let fj = match f {
                LocalFunction::Table { table, .. } => FunctionJson::Table { table: table.clone() },
                LocalFunction::Structured(rule) => FunctionJson::Structured { rule: rule.clone() },
            };
            (v.0.to_string(), fj)
        })
        .collect();
    let json = InstanceJson { q: dynamics.q(), nodes, edges, functions };
    Ok(serde_json::to_string(&json)?)
}

/// Parses and fully validates a canonical JSON instance.
pub fn from_json(text: &str) -> Result<Dynamics> {
    let json: InstanceJson =
        serde_json::from_str(text).map_err(|e| FsdError::MalformedInstance(e.to_string()))?;
    let nodes: Vec<NodeId> = json.nodes.iter().map(|&n| NodeId(n)).collect();
    let edges: Vec<(NodeId, NodeId)> =
        json.edges.iter().map(|&(u, v)| (NodeId(u), NodeId(v))).collect();
    let graph = Graph::new(nodes, &edges)?;
    let alphabet = StateAlphabet::new(json.q)?;
    let mut functions = BTreeMap::new();
    for (key, fj) in &json.functions {
        let id: u32 = key
            .parse()
            .map_err(|_| FsdError::MalformedInstance(format!("bad function key {key:?}")))?;
        let v = NodeId(id);
        if !graph.contains(v) {
            return Err(FsdError::MalformedInstance(format!("function for unknown node {v}")));
        }
        let f = match fj {
            FunctionJson::Table { table } => {
                LocalFunction::table(graph.degree(v), table.clone(), json.q)?
            }
            FunctionJson::Structured { rule } => {
                if rule.q() != json.q {
                    return Err(FsdError::MalformedInstance(format!(
                        "rule at node {v} expects q = {}, instance has q = {}",
                        rule.q(),
                        json.q
                    )));
                }
                LocalFunction::Structured(rule.clone())
            }
        };
        functions.insert(v, f);
    }
    Dynamics::new(graph, alphabet, functions)
}

/// Roles sidecar: node id → role name, serialized with ids in numeric order.
pub fn roles_to_json(roles: &BTreeMap<NodeId, String>) -> Result<String> {
    #[derive(Serialize)]
    struct Entry {
        node: u32,
        role: String,
    }
    let entries: Vec<Entry> =
        roles.iter().map(|(v, r)| Entry { node: v.0, role: r.clone() }).collect();
    Ok(serde_json::to_string(&entries)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(v: u32) -> NodeId {
        NodeId(v)
    }

    fn sample() -> Dynamics {
        let g = Graph::new(vec![id(1), id(2)], &[(id(1), id(2))]).unwrap();
        let f = || LocalFunction::table(1, vec![0, 1, 0, 1], 2).unwrap();
        Dynamics::new(
            g,
            StateAlphabet::new(2).unwrap(),
            [(id(1), f()), (id(2), f())].into(),
        )
        .unwrap()
    }

    #[test]
    fn json_round_trip_is_canonical() {
        let dynamics = sample();
        let text = to_json(&dynamics).unwrap();
        let back = from_json(&text).unwrap();
        assert_eq!(back, dynamics);
        assert_eq!(to_json(&back).unwrap(), text);
    }

    #[test]
    fn structured_rule_round_trips() {
        let g = Graph::new(vec![id(1), id(2)], &[(id(1), id(2))]).unwrap();
        let rule = StructuredRule::Thm3Root { arity: 1 };
        let dynamics = Dynamics::new(
            g,
            StateAlphabet::new(3).unwrap(),
            [
                (id(1), LocalFunction::Structured(StructuredRule::Thm3Selector { arity: 1 })),
                (id(2), LocalFunction::Structured(rule)),
            ]
            .into(),
        )
        .unwrap();
        let text = to_json(&dynamics).unwrap();
        assert!(text.contains("\"form\":\"structured\""));
        assert_eq!(from_json(&text).unwrap(), dynamics);
    }

    #[test]
    fn rejects_bad_instances() {
        // wrong table length
        let bad = r#"{"q":2,"nodes":[1,2],"edges":[[1,2]],"functions":{"1":{"form":"table","table":[0,1]},"2":{"form":"table","table":[0,1,0,1]}}}"#;
        assert!(from_json(bad).is_err());
        // disconnected graph
        let bad2 = r#"{"q":2,"nodes":[1,2],"edges":[],"functions":{"1":{"form":"table","table":[0,1]},"2":{"form":"table","table":[0,1]}}}"#;
        assert!(from_json(bad2).is_err());
    }
}
