use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AgentClass, NetworkError, PerClass};

pub type NodeIx = usize;
pub type EdgeIx = usize;

/// Per-class traffic parameters of an edge. A class is allowed on an edge iff
/// the edge carries parameters for it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassParams {
    /// meters/second
    pub free_flow_speed: f64,
    /// agents/meter
    pub jam_density: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: String,
    pub from: NodeIx,
    pub to: NodeIx,
    /// meters
    pub length: f64,
    pub classes: PerClass<Option<ClassParams>>,
}

impl Edge {
    pub fn allows(&self, class: AgentClass) -> bool {
        self.classes[class].is_some()
    }

    pub fn free_flow_speed(&self, class: AgentClass) -> Option<f64> {
        self.classes[class].map(|p| p.free_flow_speed)
    }

    pub fn allowed_classes(&self) -> impl Iterator<Item = AgentClass> + '_ {
        AgentClass::ALL.into_iter().filter(|c| self.allows(*c))
    }
}

/// One line of the JSON-lines network file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum NetworkRecord {
    Node(NodeRecord),
    Edge(EdgeRecord),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRecord {
    pub id: String,
    #[serde(default)]
    pub x: f64,
    #[serde(default)]
    pub y: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub id: String,
    pub from: String,
    pub to: String,
    pub length: f64,
    pub classes: BTreeMap<AgentClass, ClassParams>,
}

/// Directed road network. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    node_index: HashMap<String, NodeIx>,
    edge_index: HashMap<String, EdgeIx>,
    outgoing: Vec<Vec<EdgeIx>>,
    incoming: Vec<Vec<EdgeIx>>,
}

impl NetworkGraph {
    /// Parses the JSON-lines network format. Blank lines are skipped; nodes may
    /// appear after the edges that reference them.
    pub fn from_jsonl(text: &str) -> Result<Self, NetworkError> {
        let mut node_records = Vec::new();
        let mut edge_records = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: NetworkRecord =
                serde_json::from_str(line).map_err(|e| NetworkError::Parse {
                    line: lineno + 1,
                    message: e.to_string(),
                })?;
            match record {
                NetworkRecord::Node(n) => node_records.push(n),
                NetworkRecord::Edge(e) => edge_records.push((lineno + 1, e)),
            }
        }

        let mut nodes = Vec::with_capacity(node_records.len());
        let mut node_index = HashMap::with_capacity(node_records.len());
        for n in node_records {
            if node_index.insert(n.id.clone(), nodes.len()).is_some() {
                return Err(NetworkError::Validation {
                    field: format!("node `{}`", n.id),
                    message: "duplicate node id".into(),
                });
            }
            nodes.push(Node { id: n.id, x: n.x, y: n.y });
        }

        let mut edges = Vec::with_capacity(edge_records.len());
        let mut edge_index = HashMap::with_capacity(edge_records.len());
        for (line, e) in edge_records {
            let lookup = |id: &str| {
                node_index.get(id).copied().ok_or_else(|| NetworkError::DanglingEdge {
                    edge: e.id.clone(),
                    node: id.to_string(),
                })
            };
            let from = lookup(&e.from)?;
            let to = lookup(&e.to)?;
            let field = |what: &str| format!("edge `{}` (line {line}) {what}", e.id);
            if !(e.length.is_finite() && e.length > 0.0) {
                return Err(NetworkError::Validation {
                    field: field("length"),
                    message: format!("must be > 0, got {}", e.length),
                });
            }
            if e.classes.is_empty() {
                return Err(NetworkError::Validation {
                    field: field("classes"),
                    message: "at least one agent class must be allowed".into(),
                });
            }
            let mut classes = PerClass::<Option<ClassParams>>::default();
            for (class, params) in &e.classes {
                if !(params.free_flow_speed.is_finite() && params.free_flow_speed > 0.0) {
                    return Err(NetworkError::Validation {
                        field: field(&format!("classes.{class}.free_flow_speed")),
                        message: "must be > 0".into(),
                    });
                }
                if !(params.jam_density.is_finite() && params.jam_density > 0.0) {
                    return Err(NetworkError::Validation {
                        field: field(&format!("classes.{class}.jam_density")),
                        message: "must be > 0".into(),
                    });
                }
                classes[*class] = Some(*params);
            }
            if edge_index.insert(e.id.clone(), edges.len()).is_some() {
                return Err(NetworkError::Validation {
                    field: field("id"),
                    message: "duplicate edge id".into(),
                });
            }
            edges.push(Edge { id: e.id, from, to, length: e.length, classes });
        }

        let mut outgoing = vec![Vec::new(); nodes.len()];
        let mut incoming = vec![Vec::new(); nodes.len()];
        for (ix, e) in edges.iter().enumerate() {
            outgoing[e.from].push(ix);
            incoming[e.to].push(ix);
        }

        Ok(NetworkGraph { nodes, edges, node_index, edge_index, outgoing, incoming })
    }

    pub fn from_file(path: &Path) -> Result<Self, NetworkError> {
        let text = std::fs::read_to_string(path).map_err(|source| NetworkError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_jsonl(&text)
    }

    /// Serializes back to the JSON-lines format, nodes first.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for n in &self.nodes {
            let rec = NetworkRecord::Node(NodeRecord { id: n.id.clone(), x: n.x, y: n.y });
            out.push_str(&serde_json::to_string(&rec).expect("node record serializes"));
            out.push('\n');
        }
        for e in &self.edges {
            let rec = NetworkRecord::Edge(EdgeRecord {
                id: e.id.clone(),
                from: self.nodes[e.from].id.clone(),
                to: self.nodes[e.to].id.clone(),
                length: e.length,
                classes: e.classes.iter().filter_map(|(c, p)| p.map(|p| (c, p))).collect(),
            });
            out.push_str(&serde_json::to_string(&rec).expect("edge record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, ix: EdgeIx) -> &Edge {
        &self.edges[ix]
    }

    pub fn node(&self, ix: NodeIx) -> &Node {
        &self.nodes[ix]
    }

    pub fn edge_ix(&self, id: &str) -> Option<EdgeIx> {
        self.edge_index.get(id).copied()
    }

    pub fn node_ix(&self, id: &str) -> Option<NodeIx> {
        self.node_index.get(id).copied()
    }

    /// Edges leaving `node`.
    pub fn outgoing(&self, node: NodeIx) -> &[EdgeIx] {
        &self.outgoing[node]
    }

    pub fn incoming(&self, node: NodeIx) -> &[EdgeIx] {
        &self.incoming[node]
    }

    /// Edges that can follow `edge` in a path.
    pub fn successors(&self, edge: EdgeIx) -> &[EdgeIx] {
        &self.outgoing[self.edges[edge].to]
    }

    /// Total degree (in + out) of a node.
    pub fn degree(&self, node: NodeIx) -> usize {
        self.outgoing[node].len() + self.incoming[node].len()
    }

    /// Number of adjacency entries; equals the edge count for a consistent graph.
    pub fn adjacency_len(&self) -> usize {
        self.outgoing.iter().map(Vec::len).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_NODES: &str = r#"{"type":"node","id":"a","x":0,"y":0}
{"type":"node","id":"b","x":100,"y":0}
{"type":"edge","id":"ab","from":"a","to":"b","length":100.0,"classes":{"pedestrian":{"free_flow_speed":1.4,"jam_density":1.0}}}
"#;

    #[test]
    fn two_node_file() {
        let g = NetworkGraph::from_jsonl(TWO_NODES).unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.adjacency_len(), 1);
        let e = g.edge(g.edge_ix("ab").unwrap());
        assert!(e.allows(AgentClass::Pedestrian));
        assert!(!e.allows(AgentClass::Car));
    }

    #[test]
    fn dangling_edge_is_rejected() {
        let text = TWO_NODES.replace(r#""to":"b""#, r#""to":"zz""#);
        match NetworkGraph::from_jsonl(&text) {
            Err(NetworkError::DanglingEdge { edge, node }) => {
                assert_eq!(edge, "ab");
                assert_eq!(node, "zz");
            }
            other => panic!("expected DanglingEdge, got {other:?}"),
        }
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = format!("{TWO_NODES}{{not json\n");
        match NetworkGraph::from_jsonl(&text) {
            Err(NetworkError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected Parse, got {other:?}"),
        }
    }

    #[test]
    fn invalid_edge_fields() {
        let zero_len = TWO_NODES.replace("100.0", "0.0");
        assert!(matches!(
            NetworkGraph::from_jsonl(&zero_len),
            Err(NetworkError::Validation { .. })
        ));
        let dup = format!(
            "{TWO_NODES}{}\n",
            TWO_NODES.lines().nth(2).unwrap()
        );
        assert!(matches!(NetworkGraph::from_jsonl(&dup), Err(NetworkError::Validation { .. })));
        let slow = TWO_NODES.replace("1.4", "0");
        assert!(matches!(NetworkGraph::from_jsonl(&slow), Err(NetworkError::Validation { .. })));
    }

    #[test]
    fn jsonl_round_trip() {
        let g = NetworkGraph::from_jsonl(TWO_NODES).unwrap();
        let again = NetworkGraph::from_jsonl(&g.to_jsonl()).unwrap();
        assert_eq!(g, again);
    }
}
