//! Weighted multigraphs, lattice and Bethe generators, boundary handling and
//! the edge-list text format.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::weight::{LinkWeight, WeightError};

pub type NodeId = u32;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Link {
    pub a: NodeId,
    pub b: NodeId,
    pub w: LinkWeight,
}

impl Link {
    /// Endpoints as `(min, max)`.
    pub fn key(&self) -> (NodeId, NodeId) {
        (self.a.min(self.b), self.a.max(self.b))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("node {0} is in both boundaries")]
    BoundaryOverlap(NodeId),
    #[error("network has no {0} boundary")]
    MissingBoundary(char),
    #[error("lattice size must be at least 2, got {0}")]
    LatticeTooSmall(usize),
    #[error("Bethe lattice needs k >= 3 and at least one layer (k={k}, layers={layers})")]
    BadBethe { k: usize, layers: usize },
    #[error("retained fraction {0} outside (0, 1]")]
    BadFraction(f64),
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

/// Undirected weighted multigraph with optional boundary node sets.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Network {
    nodes: BTreeSet<NodeId>,
    links: Vec<Link>,
    boundary_a: BTreeSet<NodeId>,
    boundary_b: BTreeSet<NodeId>,
}

impl Network {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: NodeId) {
        self.nodes.insert(id);
    }

    /// Adds a link between existing nodes. Self-loops carry no connectivity
    /// and are dropped; the return value says whether the link was stored.
    pub fn add_link(&mut self, a: NodeId, b: NodeId, w: LinkWeight) -> Result<bool, NetworkError> {
        for id in [a, b] {
            if !self.nodes.contains(&id) {
                return Err(NetworkError::UnknownNode(id));
            }
        }
        if a == b {
            return Ok(false);
        }
        self.links.push(Link { a, b, w });
        Ok(true)
    }

    pub fn set_boundaries(
        &mut self,
        a: impl IntoIterator<Item = NodeId>,
        b: impl IntoIterator<Item = NodeId>,
    ) -> Result<(), NetworkError> {
        let a: BTreeSet<_> = a.into_iter().collect();
        let b: BTreeSet<_> = b.into_iter().collect();
        for id in a.iter().chain(&b) {
            if !self.nodes.contains(id) {
                return Err(NetworkError::UnknownNode(*id));
            }
        }
        if let Some(&id) = a.intersection(&b).next() {
            return Err(NetworkError::BoundaryOverlap(id));
        }
        self.boundary_a = a;
        self.boundary_b = b;
        Ok(())
    }

    pub fn nodes(&self) -> &BTreeSet<NodeId> {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn boundary_a(&self) -> &BTreeSet<NodeId> {
        &self.boundary_a
    }

    pub fn boundary_b(&self) -> &BTreeSet<NodeId> {
        &self.boundary_b
    }

    pub fn has_boundaries(&self) -> bool {
        !self.boundary_a.is_empty() && !self.boundary_b.is_empty()
    }

    /// Copy with every link replaced by `f(link)`; `None` drops the link.
    pub fn map_links(&self, mut f: impl FnMut(&Link) -> Option<LinkWeight>) -> Network {
        let mut out = self.clone();
        out.links = self
            .links
            .iter()
            .filter_map(|l| f(l).map(|w| Link { w, ..*l }))
            .collect();
        out
    }

    /// Copy with every link weight set to `w`.
    pub fn with_uniform_weight(&self, w: LinkWeight) -> Network {
        self.map_links(|_| Some(w))
    }

    /// Whether every node is reachable from the lowest id.
    pub fn is_connected(&self) -> bool {
        let Some(&start) = self.nodes.iter().next() else {
            return true;
        };
        let adj = self.adjacency();
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in adj.get(&u).into_iter().flatten() {
                if seen.insert(v) {
                    queue.push_back(v);
                }
            }
        }
        seen.len() == self.nodes.len()
    }

    pub(crate) fn adjacency(&self) -> BTreeMap<NodeId, Vec<NodeId>> {
        let mut adj: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for l in &self.links {
            adj.entry(l.a).or_default().push(l.b);
            adj.entry(l.b).or_default().push(l.a);
        }
        adj
    }

    /// Canonical text form: nodes ascending, links by `(min id, max id, θ)`.
    pub fn save(&self) -> String {
        let mut out = String::new();
        for id in &self.nodes {
            let _ = writeln!(out, "node {id}");
        }
        let mut links: Vec<(NodeId, NodeId, f64)> = self
            .links
            .iter()
            .map(|l| {
                let (a, b) = l.key();
                (a, b, l.w.theta())
            })
            .collect();
        links.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)).then(x.2.total_cmp(&y.2)));
        for (a, b, theta) in links {
            let _ = writeln!(out, "link {a} {b} {theta:?}");
        }
        for (tag, set) in [('A', &self.boundary_a), ('B', &self.boundary_b)] {
            if set.is_empty() {
                continue;
            }
            let _ = write!(out, "boundary {tag}");
            for id in set {
                let _ = write!(out, " {id}");
            }
            out.push('\n');
        }
        out
    }
}

impl FromStr for Network {
    type Err = NetworkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        load_network(s)
    }
}

/// Parses the line-oriented network format:
///
/// ```text
/// # comment
/// node <id>
/// link <idA> <idB> <theta-in-radians>
/// boundary A <id> ...
/// boundary B <id> ...
/// ```
///
/// Records may come in any order; references are resolved after the whole
/// document is read.
pub fn load_network(text: &str) -> Result<Network, NetworkError> {
    struct Pending {
        line: usize,
        column: usize,
        a: NodeId,
        b: NodeId,
        w: LinkWeight,
    }
    let mut net = Network::new();
    let mut links = Vec::new();
    let mut boundaries: [(Vec<(NodeId, usize, usize)>, bool); 2] = Default::default();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let tokens = tokenize(content);
        let Some(&(keyword_col, keyword)) = tokens.first() else {
            continue;
        };
        let err = |column: usize, message: String| NetworkError::Parse {
            line,
            column,
            message,
        };
        let id_at = |i: usize| -> Result<(NodeId, usize), NetworkError> {
            let &(col, tok) = tokens
                .get(i)
                .ok_or_else(|| err(content.len() + 1, "missing node id".into()))?;
            tok.parse::<NodeId>()
                .map(|id| (id, col))
                .map_err(|_| err(col, format!("invalid node id `{tok}`")))
        };
        match keyword {
            "node" => {
                let (id, _) = id_at(1)?;
                if let Some(&(col, _)) = tokens.get(2) {
                    return Err(err(col, "unexpected trailing token".into()));
                }
                net.add_node(id);
            }
            "link" => {
                let (a, column) = id_at(1)?;
                let (b, _) = id_at(2)?;
                let &(col, tok) = tokens
                    .get(3)
                    .ok_or_else(|| err(content.len() + 1, "missing link angle".into()))?;
                let theta: f64 = tok
                    .parse()
                    .map_err(|_| err(col, format!("invalid angle `{tok}`")))?;
                let w = LinkWeight::from_theta(theta).map_err(|e: WeightError| err(col, e.to_string()))?;
                if let Some(&(col, _)) = tokens.get(4) {
                    return Err(err(col, "unexpected trailing token".into()));
                }
                links.push(Pending { line, column, a, b, w });
            }
            "boundary" => {
                let &(col, side) = tokens
                    .get(1)
                    .ok_or_else(|| err(content.len() + 1, "missing boundary side".into()))?;
                let slot = match side {
                    "A" | "a" => 0,
                    "B" | "b" => 1,
                    _ => return Err(err(col, format!("boundary side must be A or B, got `{side}`"))),
                };
                boundaries[slot].1 = true;
                for i in 2..tokens.len() {
                    let (id, col) = id_at(i)?;
                    boundaries[slot].0.push((id, line, col));
                }
            }
            other => return Err(err(keyword_col, format!("unknown record `{other}`"))),
        }
    }

    for p in links {
        for id in [p.a, p.b] {
            if !net.nodes.contains(&id) {
                return Err(NetworkError::Parse {
                    line: p.line,
                    column: p.column,
                    message: format!("link references unknown node {id}"),
                });
            }
        }
        net.add_link(p.a, p.b, p.w)?;
    }

    let mut sets: [BTreeSet<NodeId>; 2] = Default::default();
    for (slot, (members, _)) in boundaries.iter().enumerate() {
        for &(id, line, column) in members {
            let parse_err = |message: String| NetworkError::Parse { line, column, message };
            if !net.nodes.contains(&id) {
                return Err(parse_err(format!("boundary references unknown node {id}")));
            }
            if sets[1 - slot].contains(&id) || !sets[slot].insert(id) {
                return Err(parse_err(format!("node {id} listed in a boundary more than once")));
            }
        }
    }
    // second pass so that a node listed in B before A is still caught
    if let Some(&id) = sets[0].intersection(&sets[1]).next() {
        return Err(NetworkError::BoundaryOverlap(id));
    }
    let [a, b] = sets;
    net.boundary_a = a;
    net.boundary_b = b;
    Ok(net)
}

fn tokenize(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        match (ch.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                out.push((s + 1, &line[s..i]));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LatticeKind {
    Square,
    /// Brick-wall embedding: a square grid with every other vertical bond
    /// removed, giving degree 3 in the bulk.
    Honeycomb,
    /// Square grid plus the `(x, y)–(x+1, y+1)` diagonal of every cell.
    Triangular,
}

impl LatticeKind {
    pub const ALL: [LatticeKind; 3] = [LatticeKind::Square, LatticeKind::Honeycomb, LatticeKind::Triangular];

    pub fn name(self) -> &'static str {
        match self {
            LatticeKind::Square => "square",
            LatticeKind::Honeycomb => "honeycomb",
            LatticeKind::Triangular => "triangular",
        }
    }
}

impl std::fmt::Display for LatticeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LatticeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "square" => Ok(LatticeKind::Square),
            "honeycomb" | "hex" => Ok(LatticeKind::Honeycomb),
            "triangular" | "tri" => Ok(LatticeKind::Triangular),
            other => Err(format!("unknown lattice `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LatticeSpec {
    pub kind: LatticeKind,
    /// Number of node columns (and rows).
    pub size: usize,
}

impl LatticeSpec {
    pub fn new(kind: LatticeKind, size: usize) -> Result<Self, NetworkError> {
        if size < 2 {
            return Err(NetworkError::LatticeTooSmall(size));
        }
        Ok(Self { kind, size })
    }
}

/// Uniform-weight `L × L` lattice. Node `(x, y)` has id `y·L + x`; boundary A
/// is the column `x = 0`, boundary B the column `x = L − 1`.
pub fn build_lattice(spec: LatticeSpec, theta: LinkWeight) -> Result<Network, NetworkError> {
    let size = LatticeSpec::new(spec.kind, spec.size)?.size;
    let id = |x: usize, y: usize| (y * size + x) as NodeId;
    let mut net = Network::new();
    for i in 0..size * size {
        net.add_node(i as NodeId);
    }
    for y in 0..size {
        for x in 0..size {
            if x + 1 < size {
                net.add_link(id(x, y), id(x + 1, y), theta)?;
            }
            if y + 1 < size {
                let vertical = match spec.kind {
                    LatticeKind::Honeycomb => (x + y) % 2 == 0,
                    _ => true,
                };
                if vertical {
                    net.add_link(id(x, y), id(x, y + 1), theta)?;
                }
                if spec.kind == LatticeKind::Triangular && x + 1 < size {
                    net.add_link(id(x, y), id(x + 1, y + 1), theta)?;
                }
            }
        }
    }
    net.set_boundaries((0..size).map(|y| id(0, y)), (0..size).map(|y| id(size - 1, y)))?;
    Ok(net)
}

/// Finite Bethe lattice: root 0 with `k` children, every further internal
/// node with `k − 1` children, `layers` generations deep. Boundary A is the
/// root, boundary B the outermost layer.
pub fn build_bethe(k: usize, layers: usize, theta: LinkWeight) -> Result<Network, NetworkError> {
    if k < 3 || layers < 1 {
        return Err(NetworkError::BadBethe { k, layers });
    }
    let mut net = Network::new();
    net.add_node(0);
    let mut frontier = vec![0 as NodeId];
    let mut next_id: NodeId = 1;
    for layer in 0..layers {
        let children = if layer == 0 { k } else { k - 1 };
        let mut next = Vec::with_capacity(frontier.len() * children);
        for &parent in &frontier {
            for _ in 0..children {
                net.add_node(next_id);
                net.add_link(parent, next_id, theta)?;
                next.push(next_id);
                next_id += 1;
            }
        }
        frontier = next;
    }
    net.set_boundaries([0], frontier)?;
    Ok(net)
}

/// Joins every pair of nodes inside each boundary with a singlet link, so a
/// boundary acts as a single meta node.
pub fn contract_boundaries(net: &Network) -> Result<Network, NetworkError> {
    if net.boundary_a.is_empty() {
        return Err(NetworkError::MissingBoundary('A'));
    }
    if net.boundary_b.is_empty() {
        return Err(NetworkError::MissingBoundary('B'));
    }
    let mut out = net.clone();
    for set in [&net.boundary_a, &net.boundary_b] {
        let members: Vec<_> = set.iter().copied().collect();
        for (i, &u) in members.iter().enumerate() {
            for &v in &members[i + 1..] {
                out.add_link(u, v, LinkWeight::SINGLET)?;
            }
        }
    }
    Ok(out)
}

/// Keeps each link independently with probability `f`.
pub fn dilute(net: &Network, f: f64, seed: u64) -> Result<Network, NetworkError> {
    if !(f > 0.0 && f <= 1.0) {
        return Err(NetworkError::BadFraction(f));
    }
    if f == 1.0 {
        return Ok(net.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(net.map_links(|l| rng.random_bool(f).then_some(l.w)))
}
