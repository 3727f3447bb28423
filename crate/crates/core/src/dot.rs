//! Graphviz DOT export with optional role labels and colors.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::graph::Graph;
use crate::graph::NodeId;

fn role_color(role: &str) -> &'static str {
    match role {
        "set-a" | "decoder-a" => "lightblue",
        "set-b" | "decoder-b" => "lightpink",
        "bits-a" => "steelblue",
        "bits-b" => "salmon",
        "selector" => "gold",
        "collector" => "lightgreen",
        "root" => "green",
        _ => "white",
    }
}

/// Renders the graph; when `roles` is given, nodes get a role label and a
/// fill color per role.
pub fn to_dot(graph: &Graph, roles: Option<&BTreeMap<NodeId, String>>) -> String {
    let mut out = String::new();
    let name = graph.name.as_deref().unwrap_or("fsd");
    writeln!(out, "graph \"{name}\" {{").unwrap();
    writeln!(out, "  node [shape=circle style=filled fillcolor=white];").unwrap();
    for &v in graph.nodes() {
        match roles.and_then(|r| r.get(&v)) {
            Some(role) => writeln!(
                out,
                "  {v} [label=\"{v}\\n{role}\" fillcolor={}];",
                role_color(role)
            )
            .unwrap(),
            None => writeln!(out, "  {v};").unwrap(),
        }
    }
    for (u, v) in graph.edges() {
        writeln!(out, "  {u} -- {v};").unwrap();
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_nodes_edges_and_roles() {
        let g = Graph::new(vec![NodeId(1), NodeId(2)], &[(NodeId(1), NodeId(2))]).unwrap();
        let plain = to_dot(&g, None);
        assert!(plain.contains("1 -- 2;"));
        let roles: BTreeMap<NodeId, String> = [(NodeId(1), "selector".to_string())].into();
        let labeled = to_dot(&g, Some(&roles));
        assert!(labeled.contains("selector"));
        assert!(labeled.contains("gold"));
    }
}
