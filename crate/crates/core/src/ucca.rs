//! UCCA graphs over source sentences.
//!
//! A graph is a labeled DAG whose leaves (terminals) are the tokens of the
//! sentence. Every node, terminal or not, is a semantic unit identified with
//! its yield: the set of token indices reachable from it. Remote edges count
//! toward yields but never designate the annotatable instance of a node.
//!
//! Graphs are read from and written to a canonical JSON form:
//!
//! ```json
//! {"sentence_id":"s1","tokens":[{"index":0,"text":"Hi"}],"nodes":["r","t0"],
//!  "edges":[{"parent":"r","child":"t0","category":"H","remote":false}],
//!  "terminals":{"t0":0}}
//! ```

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

/// Sorted set of token indices.
pub type TokenSet = BTreeSet<usize>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("malformed graph document: {0}")]
    Malformed(String),
    #[error("sentence {sentence}: graph has no tokens")]
    NoTokens { sentence: String },
    #[error("sentence {sentence}: token at position {position} has index {index}")]
    TokenIndex {
        sentence: String,
        position: usize,
        index: usize,
    },
    #[error("sentence {sentence}: token {index} has empty text")]
    EmptyToken { sentence: String, index: usize },
    #[error("sentence {sentence}: duplicate node id {node:?}")]
    DuplicateNode { sentence: String, node: String },
    #[error("sentence {sentence}: edge {parent:?} -> {child:?} references unknown node {node:?}")]
    DanglingEdge {
        sentence: String,
        parent: String,
        child: String,
        node: String,
    },
    #[error("sentence {sentence}: terminal entry references unknown node {node:?}")]
    DanglingTerminal { sentence: String, node: String },
    #[error("sentence {sentence}: self-loop on node {node:?}")]
    SelfLoop { sentence: String, node: String },
    #[error("sentence {sentence}: duplicate edge {parent:?} -> {child:?}")]
    DuplicateEdge {
        sentence: String,
        parent: String,
        child: String,
    },
    #[error("sentence {sentence}: empty category on edge {parent:?} -> {child:?}")]
    EmptyCategory {
        sentence: String,
        parent: String,
        child: String,
    },
    #[error("sentence {sentence}: cycle through nodes {nodes:?}")]
    Cycle { sentence: String, nodes: Vec<String> },
    #[error("sentence {sentence}: terminal {node:?} maps to token {index}, which does not exist")]
    TerminalOutOfRange {
        sentence: String,
        node: String,
        index: usize,
    },
    #[error("sentence {sentence}: token {index} is mapped by terminals {first:?} and {second:?}")]
    TerminalCollision {
        sentence: String,
        index: usize,
        first: String,
        second: String,
    },
    #[error("sentence {sentence}: token {index} has no terminal node")]
    UnmappedToken { sentence: String, index: usize },
    #[error("sentence {sentence}: terminal {node:?} has outgoing edges")]
    TerminalWithChildren { sentence: String, node: String },
    #[error("sentence {sentence}: non-terminal {node:?} has no children")]
    ChildlessNonTerminal { sentence: String, node: String },
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("node {0:?} has no parent")]
    NoParent(String),
}

/// A source token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub index: usize,
    pub text: String,
}

/// Edge category. The foundational-layer tags used for evaluation are named;
/// anything else is carried verbatim as an extension tag.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UccaCategory {
    Linker,
    ParallelScene,
    Process,
    State,
    Participant,
    Relater,
    Centre,
    Elaborator,
    Extension(String),
}

impl UccaCategory {
    pub fn from_code(code: &str) -> Self {
        match code {
            "L" => Self::Linker,
            "H" => Self::ParallelScene,
            "P" => Self::Process,
            "S" => Self::State,
            "A" => Self::Participant,
            "R" => Self::Relater,
            "C" => Self::Centre,
            "E" => Self::Elaborator,
            other => Self::Extension(other.to_string()),
        }
    }

    pub fn code(&self) -> &str {
        match self {
            Self::Linker => "L",
            Self::ParallelScene => "H",
            Self::Process => "P",
            Self::State => "S",
            Self::Participant => "A",
            Self::Relater => "R",
            Self::Centre => "C",
            Self::Elaborator => "E",
            Self::Extension(code) => code,
        }
    }

    pub fn is_extension(&self) -> bool {
        matches!(self, Self::Extension(_))
    }
}

impl fmt::Display for UccaCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl Serialize for UccaCategory {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for UccaCategory {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let code = String::deserialize(d)?;
        Ok(Self::from_code(&code))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UccaEdge {
    pub parent: String,
    pub child: String,
    pub category: UccaCategory,
    #[serde(default)]
    pub remote: bool,
}

/// Identifies one parent edge of a node: the instance under which a
/// multi-parent node is displayed and annotated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParentInstance {
    pub parent: String,
    pub category: UccaCategory,
    pub remote: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SemanticUnit {
    pub node_id: String,
    #[serde(rename = "yield")]
    pub yield_: TokenSet,
    pub is_terminal: bool,
    pub categories: Vec<UccaCategory>,
}

/// Non-fatal observation made while parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphWarning {
    ExtensionCategory {
        parent: String,
        child: String,
        code: String,
    },
}

impl fmt::Display for GraphWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ExtensionCategory {
                parent,
                child,
                code,
            } => write!(f, "edge {parent} -> {child} uses extension category {code:?}"),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDocument {
    sentence_id: String,
    tokens: Vec<Token>,
    nodes: Vec<String>,
    edges: Vec<UccaEdge>,
    terminals: BTreeMap<String, usize>,
}

/// A validated UCCA graph. Immutable once built.
#[derive(Debug, Clone)]
pub struct UccaGraph {
    sentence_id: String,
    tokens: Vec<Token>,
    nodes: Vec<String>,
    edges: Vec<UccaEdge>,
    index: HashMap<String, usize>,
    // node position -> token index, for terminals
    terminal_token: Vec<Option<usize>>,
    token_terminal: Vec<usize>,
    children: Vec<Vec<usize>>,
    parents: Vec<Vec<usize>>,
    yields: Vec<TokenSet>,
    topo: Vec<usize>,
    warnings: Vec<GraphWarning>,
}

impl PartialEq for UccaGraph {
    fn eq(&self, other: &Self) -> bool {
        self.sentence_id == other.sentence_id
            && self.tokens == other.tokens
            && self.nodes == other.nodes
            && self.edges == other.edges
            && self.terminal_token == other.terminal_token
    }
}

impl UccaGraph {
    /// Parse and validate a canonical graph document.
    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let doc: GraphDocument =
            serde_json::from_str(text).map_err(|e| GraphError::Malformed(e.to_string()))?;
        Self::build(
            doc.sentence_id,
            doc.tokens,
            doc.nodes,
            doc.edges,
            doc.terminals,
        )
    }

    pub fn from_value(value: serde_json::Value) -> Result<Self, GraphError> {
        let doc: GraphDocument =
            serde_json::from_value(value).map_err(|e| GraphError::Malformed(e.to_string()))?;
        Self::build(
            doc.sentence_id,
            doc.tokens,
            doc.nodes,
            doc.edges,
            doc.terminals,
        )
    }

    /// Validate the parts of a graph and assemble it.
    pub fn build(
        sentence_id: String,
        tokens: Vec<Token>,
        nodes: Vec<String>,
        edges: Vec<UccaEdge>,
        terminals: BTreeMap<String, usize>,
    ) -> Result<Self, GraphError> {
        let sentence = || sentence_id.clone();
        if tokens.is_empty() {
            return Err(GraphError::NoTokens {
                sentence: sentence(),
            });
        }
        for (position, token) in tokens.iter().enumerate() {
            if token.index != position {
                return Err(GraphError::TokenIndex {
                    sentence: sentence(),
                    position,
                    index: token.index,
                });
            }
            if token.text.is_empty() {
                return Err(GraphError::EmptyToken {
                    sentence: sentence(),
                    index: token.index,
                });
            }
        }

        let mut index = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            if index.insert(node.clone(), i).is_some() {
                return Err(GraphError::DuplicateNode {
                    sentence: sentence(),
                    node: node.clone(),
                });
            }
        }

        let mut children = vec![Vec::new(); nodes.len()];
        let mut parents = vec![Vec::new(); nodes.len()];
        let mut seen_pairs = BTreeSet::new();
        let mut warnings = Vec::new();
        for (e, edge) in edges.iter().enumerate() {
            let lookup = |id: &str| {
                index.get(id).copied().ok_or_else(|| GraphError::DanglingEdge {
                    sentence: sentence(),
                    parent: edge.parent.clone(),
                    child: edge.child.clone(),
                    node: id.to_string(),
                })
            };
            let p = lookup(&edge.parent)?;
            let c = lookup(&edge.child)?;
            if p == c {
                return Err(GraphError::SelfLoop {
                    sentence: sentence(),
                    node: edge.parent.clone(),
                });
            }
            if !seen_pairs.insert((p, c)) {
                return Err(GraphError::DuplicateEdge {
                    sentence: sentence(),
                    parent: edge.parent.clone(),
                    child: edge.child.clone(),
                });
            }
            if edge.category.code().is_empty() {
                return Err(GraphError::EmptyCategory {
                    sentence: sentence(),
                    parent: edge.parent.clone(),
                    child: edge.child.clone(),
                });
            }
            if let UccaCategory::Extension(code) = &edge.category {
                warnings.push(GraphWarning::ExtensionCategory {
                    parent: edge.parent.clone(),
                    child: edge.child.clone(),
                    code: code.clone(),
                });
            }
            children[p].push(e);
            parents[c].push(e);
        }

        let mut terminal_token = vec![None; nodes.len()];
        let mut token_terminal: Vec<Option<usize>> = vec![None; tokens.len()];
        for (node, &tok) in &terminals {
            let n = *index.get(node).ok_or_else(|| GraphError::DanglingTerminal {
                sentence: sentence(),
                node: node.clone(),
            })?;
            if tok >= tokens.len() {
                return Err(GraphError::TerminalOutOfRange {
                    sentence: sentence(),
                    node: node.clone(),
                    index: tok,
                });
            }
            if let Some(prev) = token_terminal[tok] {
                return Err(GraphError::TerminalCollision {
                    sentence: sentence(),
                    index: tok,
                    first: nodes[prev].clone(),
                    second: node.clone(),
                });
            }
            token_terminal[tok] = Some(n);
            terminal_token[n] = Some(tok);
        }
        let token_terminal = token_terminal
            .into_iter()
            .enumerate()
            .map(|(i, t)| {
                t.ok_or(GraphError::UnmappedToken {
                    sentence: sentence(),
                    index: i,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;

        for (n, node) in nodes.iter().enumerate() {
            let is_terminal = terminal_token[n].is_some();
            if is_terminal && !children[n].is_empty() {
                return Err(GraphError::TerminalWithChildren {
                    sentence: sentence(),
                    node: node.clone(),
                });
            }
            if !is_terminal && children[n].is_empty() {
                return Err(GraphError::ChildlessNonTerminal {
                    sentence: sentence(),
                    node: node.clone(),
                });
            }
        }

        let topo = topological_order(&nodes, &edges, &index, &children).map_err(|cycle| {
            GraphError::Cycle {
                sentence: sentence(),
                nodes: cycle,
            }
        })?;

        // Children before parents, so each yield is the union of its children's.
        let mut yields = vec![TokenSet::new(); nodes.len()];
        for &n in topo.iter().rev() {
            if let Some(tok) = terminal_token[n] {
                yields[n].insert(tok);
                continue;
            }
            let mut acc = TokenSet::new();
            for &e in &children[n] {
                let c = index[&edges[e].child];
                acc.extend(yields[c].iter().copied());
            }
            yields[n] = acc;
        }

        Ok(Self {
            sentence_id,
            tokens,
            nodes,
            edges,
            index,
            terminal_token,
            token_terminal,
            children,
            parents,
            yields,
            topo,
            warnings,
        })
    }

    pub fn sentence_id(&self) -> &str {
        &self.sentence_id
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn edges(&self) -> &[UccaEdge] {
        &self.edges
    }

    pub fn warnings(&self) -> &[GraphWarning] {
        &self.warnings
    }

    pub fn contains(&self, node: &str) -> bool {
        self.index.contains_key(node)
    }

    fn position(&self, node: &str) -> Result<usize, GraphError> {
        self.index
            .get(node)
            .copied()
            .ok_or_else(|| GraphError::UnknownNode(node.to_string()))
    }

    pub fn is_terminal(&self, node: &str) -> Result<bool, GraphError> {
        Ok(self.terminal_token[self.position(node)?].is_some())
    }

    /// Token index of a terminal node, `None` for internal nodes.
    pub fn terminal_index(&self, node: &str) -> Result<Option<usize>, GraphError> {
        Ok(self.terminal_token[self.position(node)?])
    }

    pub fn terminal_of_token(&self, token: usize) -> Option<&str> {
        self.token_terminal.get(token).map(|&n| self.nodes[n].as_str())
    }

    /// Nodes without parents.
    pub fn roots(&self) -> Vec<&str> {
        (0..self.nodes.len())
            .filter(|&n| self.parents[n].is_empty())
            .map(|n| self.nodes[n].as_str())
            .collect()
    }

    /// Node ids in a topological order (parents before children).
    pub fn topological_order(&self) -> Vec<&str> {
        self.topo.iter().map(|&n| self.nodes[n].as_str()).collect()
    }

    pub fn parent_edges(&self, node: &str) -> Result<Vec<&UccaEdge>, GraphError> {
        let n = self.position(node)?;
        Ok(self.parents[n].iter().map(|&e| &self.edges[e]).collect())
    }

    pub fn child_edges(&self, node: &str) -> Result<Vec<&UccaEdge>, GraphError> {
        let n = self.position(node)?;
        Ok(self.children[n].iter().map(|&e| &self.edges[e]).collect())
    }

    /// Token indices of the leaf descendants of `node`, remote edges included.
    pub fn yield_of(&self, node: &str) -> Result<&TokenSet, GraphError> {
        Ok(&self.yields[self.position(node)?])
    }

    /// Surface text of a node's yield, tokens in sentence order.
    pub fn yield_text(&self, node: &str) -> Result<String, GraphError> {
        let y = self.yield_of(node)?;
        Ok(y.iter()
            .map(|&i| self.tokens[i].text.as_str())
            .collect::<Vec<_>>()
            .join(" "))
    }

    /// All strict descendants of `node`, following every edge.
    pub fn descendants(&self, node: &str) -> Result<BTreeSet<&str>, GraphError> {
        let start = self.position(node)?;
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![start];
        let mut out = BTreeSet::new();
        while let Some(n) = stack.pop() {
            for &e in &self.children[n] {
                let c = self.index[&self.edges[e].child];
                if !seen[c] {
                    seen[c] = true;
                    out.insert(self.nodes[c].as_str());
                    stack.push(c);
                }
            }
        }
        Ok(out)
    }

    fn unit_order(&self, a: usize, b: usize) -> Ordering {
        let first = |n: usize| self.yields[n].first().copied();
        first(a)
            .cmp(&first(b))
            .then_with(|| self.nodes[a].cmp(&self.nodes[b]))
    }

    /// One semantic unit per node, ordered by the first token of the yield,
    /// ties broken by node id.
    pub fn semantic_units(&self) -> Vec<SemanticUnit> {
        let mut order: Vec<usize> = (0..self.nodes.len()).collect();
        order.sort_by(|&a, &b| self.unit_order(a, b));
        order
            .into_iter()
            .map(|n| SemanticUnit {
                node_id: self.nodes[n].clone(),
                yield_: self.yields[n].clone(),
                is_terminal: self.terminal_token[n].is_some(),
                categories: self.parents[n]
                    .iter()
                    .map(|&e| self.edges[e].category.clone())
                    .collect(),
            })
            .collect()
    }

    /// The parent edge under which `node` is annotatable.
    ///
    /// A unique non-remote parent wins outright. Otherwise candidates are the
    /// non-remote parents (or every parent when all are remote), and the one
    /// whose yield starts earliest is chosen, ties broken by parent id.
    pub fn primary_instance(&self, node: &str) -> Result<ParentInstance, GraphError> {
        let n = self.position(node)?;
        let parent_edges = &self.parents[n];
        if parent_edges.is_empty() {
            return Err(GraphError::NoParent(node.to_string()));
        }
        let primary: Vec<usize> = parent_edges
            .iter()
            .copied()
            .filter(|&e| !self.edges[e].remote)
            .collect();
        let candidates = if primary.is_empty() {
            parent_edges.clone()
        } else {
            primary
        };
        let chosen = candidates
            .into_iter()
            .min_by(|&a, &b| {
                let pa = self.index[&self.edges[a].parent];
                let pb = self.index[&self.edges[b].parent];
                self.unit_order(pa, pb)
            })
            .expect("candidates are non-empty");
        let edge = &self.edges[chosen];
        Ok(ParentInstance {
            parent: edge.parent.clone(),
            category: edge.category.clone(),
            remote: edge.remote,
        })
    }

    /// Category on the primary instance's edge; `None` for roots.
    pub fn primary_category(&self, node: &str) -> Result<Option<UccaCategory>, GraphError> {
        match self.primary_instance(node) {
            Ok(inst) => Ok(Some(inst.category)),
            Err(GraphError::NoParent(_)) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Canonical JSON: fixed field order, nodes and edges in document order,
    /// terminals ordered by token index.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("graph serialization is infallible")
    }
}

struct TerminalsByToken<'a>(&'a UccaGraph);

impl Serialize for TerminalsByToken<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let g = self.0;
        let mut map = s.serialize_map(Some(g.token_terminal.len()))?;
        for (tok, &n) in g.token_terminal.iter().enumerate() {
            map.serialize_entry(&g.nodes[n], &tok)?;
        }
        map.end()
    }
}

impl Serialize for UccaGraph {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("UccaGraph", 5)?;
        st.serialize_field("sentence_id", &self.sentence_id)?;
        st.serialize_field("tokens", &self.tokens)?;
        st.serialize_field("nodes", &self.nodes)?;
        st.serialize_field("edges", &self.edges)?;
        st.serialize_field("terminals", &TerminalsByToken(self))?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for UccaGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = GraphDocument::deserialize(d)?;
        Self::build(doc.sentence_id, doc.tokens, doc.nodes, doc.edges, doc.terminals)
            .map_err(serde::de::Error::custom)
    }
}

/// Kahn's algorithm; on failure returns the ids of one cycle.
fn topological_order(
    nodes: &[String],
    edges: &[UccaEdge],
    index: &HashMap<String, usize>,
    children: &[Vec<usize>],
) -> Result<Vec<usize>, Vec<String>> {
    let mut indegree = vec![0usize; nodes.len()];
    for edge in edges {
        indegree[index[&edge.child]] += 1;
    }
    let mut ready: Vec<usize> = (0..nodes.len()).filter(|&n| indegree[n] == 0).collect();
    ready.reverse();
    let mut order = Vec::with_capacity(nodes.len());
    while let Some(n) = ready.pop() {
        order.push(n);
        for &e in children[n].iter().rev() {
            let c = index[&edges[e].child];
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(c);
            }
        }
    }
    if order.len() == nodes.len() {
        return Ok(order);
    }

    // Every unplaced node lies on or downstream of a cycle; walk backwards
    // through unplaced parents until a node repeats.
    let mut parents = vec![Vec::new(); nodes.len()];
    for edge in edges {
        parents[index[&edge.child]].push(index[&edge.parent]);
    }
    let start = (0..nodes.len())
        .find(|&n| indegree[n] > 0)
        .expect("some node is unplaced");
    let mut path = vec![start];
    let mut pos: HashMap<usize, usize> = HashMap::from([(start, 0)]);
    let mut cur = start;
    loop {
        let next = parents[cur]
            .iter()
            .copied()
            .find(|&p| indegree[p] > 0)
            .expect("an unplaced node has an unplaced parent");
        if let Some(&at) = pos.get(&next) {
            let mut cycle: Vec<String> = path[at..].iter().map(|&n| nodes[n].clone()).collect();
            cycle.reverse();
            return Err(cycle);
        }
        pos.insert(next, path.len());
        path.push(next);
        cur = next;
    }
}
