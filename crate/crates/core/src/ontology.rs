//! Knowledge-node structures: ordered trees, meshes, and the binary
//! adjacency matrices both project onto.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::RationalMatrix;
use crate::node::{canonical_order, Link, NodeId};
use crate::rational::Rational;

/// Anything defined over a set of knowledge nodes.
pub trait Ontology {
    /// Node ids in canonical order.
    fn node_ids(&self) -> &[NodeId];
}

/// Two ontologies describe the same knowledge iff their node sets match;
/// links are irrelevant.
pub fn node_equivalent(a: &(impl Ontology + ?Sized), b: &(impl Ontology + ?Sized)) -> bool {
    a.node_ids() == b.node_ids()
}

pub(crate) fn require_same_nodes(a: &[NodeId], b: &[NodeId]) -> Result<()> {
    if a == b {
        return Ok(());
    }
    let left: BTreeSet<_> = a.iter().collect();
    let right: BTreeSet<_> = b.iter().collect();
    let only_left: Vec<String> = left.difference(&right).map(|n| n.to_string()).collect();
    let only_right: Vec<String> = right.difference(&left).map(|n| n.to_string()).collect();
    Err(Error::NodeMismatch(format!(
        "only in first: [{}]; only in second: [{}]",
        only_left.join(", "),
        only_right.join(", ")
    )))
}

/// Outcome of checking whether a link set forms a tree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TreeReport {
    pub is_tree: bool,
    pub node_count: usize,
    pub edge_count: usize,
    pub is_connected: bool,
    /// A closed walk `[a, .., a]` around some cycle, rotated to start at its
    /// smallest node.
    pub cycle_witness: Option<Vec<NodeId>>,
}

struct Forest {
    parent: Vec<usize>,
    adjacency: Vec<Vec<usize>>,
}

impl Forest {
    fn new(n: usize) -> Self {
        Forest {
            parent: (0..n).collect(),
            adjacency: vec![Vec::new(); n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Route between two nodes already joined in the forest.
    fn route(&self, from: usize, to: usize) -> Vec<usize> {
        let mut prev = vec![usize::MAX; self.adjacency.len()];
        prev[from] = from;
        let mut queue = VecDeque::from([from]);
        while let Some(v) = queue.pop_front() {
            if v == to {
                break;
            }
            for &u in &self.adjacency[v] {
                if prev[u] == usize::MAX {
                    prev[u] = v;
                    queue.push_back(u);
                }
            }
        }
        let mut path = vec![to];
        let mut v = to;
        while v != from {
            v = prev[v];
            path.push(v);
        }
        path.reverse();
        path
    }
}

fn normalize_cycle(mut cycle: Vec<usize>) -> Vec<usize> {
    // cycle is closed: first == last
    cycle.pop();
    let start = (0..cycle.len()).min_by_key(|&i| cycle[i]).unwrap_or(0);
    cycle.rotate_left(start);
    if cycle.len() > 2 && cycle[cycle.len() - 1] < cycle[1] {
        cycle[1..].reverse();
    }
    let first = cycle[0];
    cycle.push(first);
    cycle
}

/// Checks a candidate node/link set: a tree is connected with exactly
/// `n - 1` links. Links are treated as a multiset, so a repeated link is a
/// two-node cycle and a self-link a one-node cycle.
pub fn validate_tree(nodes: &[NodeId], links: &[(NodeId, NodeId)]) -> Result<TreeReport> {
    if nodes.is_empty() {
        return Err(Error::DomainError("a tree needs at least one node".into()));
    }
    let order = canonical_order(nodes)?;
    let index: HashMap<&NodeId, usize> = order.iter().enumerate().map(|(i, n)| (n, i)).collect();
    let n = order.len();
    let mut forest = Forest::new(n);
    let mut witness = None;
    let mut components = n;
    for (a, b) in links {
        let ia = *index.get(a).ok_or_else(|| Error::UnknownNode(a.clone()))?;
        let ib = *index.get(b).ok_or_else(|| Error::UnknownNode(b.clone()))?;
        let (ra, rb) = (forest.find(ia), forest.find(ib));
        if ra == rb {
            if witness.is_none() {
                let mut cycle = forest.route(ib, ia);
                cycle.push(ib);
                witness = Some(normalize_cycle(cycle));
            }
        } else {
            forest.parent[ra] = rb;
            forest.adjacency[ia].push(ib);
            forest.adjacency[ib].push(ia);
            components -= 1;
        }
    }
    let is_connected = components == 1;
    Ok(TreeReport {
        is_tree: is_connected && links.len() == n - 1,
        node_count: n,
        edge_count: links.len(),
        is_connected,
        cycle_witness: witness.map(|c| c.into_iter().map(|i| order[i].clone()).collect()),
    })
}

/// Symmetric or directed 0/1 matrix over a canonical node order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Adjacency {
    nodes: Vec<NodeId>,
    bits: Vec<bool>,
}

impl Adjacency {
    pub fn empty(nodes: &[NodeId]) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::DomainError("adjacency needs at least one node".into()));
        }
        let nodes = canonical_order(nodes)?;
        let n = nodes.len();
        Ok(Adjacency {
            nodes,
            bits: vec![false; n * n],
        })
    }

    /// Builds a symmetric matrix with a 1 at both `(a, b)` and `(b, a)` for
    /// every link.
    pub fn from_links<'a>(nodes: &[NodeId], links: impl IntoIterator<Item = &'a Link>) -> Result<Self> {
        let mut adjacency = Adjacency::empty(nodes)?;
        for link in links {
            let i = adjacency.index_of(link.low())?;
            let j = adjacency.index_of(link.high())?;
            adjacency.set(i, j, true);
            adjacency.set(j, i, true);
        }
        Ok(adjacency)
    }

    /// Row-major bits; `nodes` must already be in canonical order.
    pub fn from_bits(nodes: &[NodeId], bits: Vec<bool>) -> Result<Self> {
        let canonical = canonical_order(nodes)?;
        if canonical != nodes {
            return Err(Error::DomainError("nodes must be given in canonical order".into()));
        }
        if bits.len() != nodes.len() * nodes.len() || nodes.is_empty() {
            return Err(Error::DimensionError {
                left: nodes.len() * nodes.len(),
                right: bits.len(),
            });
        }
        Ok(Adjacency {
            nodes: canonical,
            bits,
        })
    }

    /// Reads a 0/1 rational matrix; any other entry is rejected.
    pub fn from_matrix(nodes: &[NodeId], matrix: &RationalMatrix) -> Result<Self> {
        if matrix.dimension() != nodes.len() {
            return Err(Error::DimensionError {
                left: nodes.len(),
                right: matrix.dimension(),
            });
        }
        let mut bits = Vec::with_capacity(matrix.entries().len());
        for (k, v) in matrix.entries().iter().enumerate() {
            if v.is_zero() {
                bits.push(false);
            } else if v.is_one() {
                bits.push(true);
            } else {
                let n = nodes.len();
                return Err(Error::DomainError(format!(
                    "entry ({}, {}) = {v} is not binary",
                    k / n + 1,
                    k % n + 1
                )));
            }
        }
        Adjacency::from_bits(&canonical_order(nodes)?, bits)
    }

    pub fn dimension(&self) -> usize {
        self.nodes.len()
    }

    pub fn index_of(&self, id: &NodeId) -> Result<usize> {
        self.nodes
            .binary_search(id)
            .map_err(|_| Error::UnknownNode(id.clone()))
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.nodes.len() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        let n = self.nodes.len();
        self.bits[i * n + j] = value;
    }

    pub fn has_link(&self, a: &NodeId, b: &NodeId) -> bool {
        match (self.index_of(a), self.index_of(b)) {
            (Ok(i), Ok(j)) => self.get(i, j),
            _ => false,
        }
    }

    pub fn popcount(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.dimension();
        (0..n).all(|i| (i + 1..n).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn has_zero_diagonal(&self) -> bool {
        (0..self.dimension()).all(|i| !self.get(i, i))
    }

    /// Every nonzero position `(i, j)`.
    pub fn ones(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.dimension();
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(k, _)| (k / n, k % n))
    }

    /// Undirected links: every position with `i <= j` whose entry or its
    /// mirror is set.
    pub fn links(&self) -> Vec<Link> {
        let n = self.dimension();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i..n {
                if self.get(i, j) || self.get(j, i) {
                    out.push(Link::new(self.nodes[i].clone(), self.nodes[j].clone()));
                }
            }
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        let n = self.dimension();
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut stack = vec![0];
        while let Some(v) = stack.pop() {
            let next: Vec<usize> = (0..n).filter(|&u| !seen[u] && (self.get(v, u) || self.get(u, v))).collect();
            for u in next {
                seen[u] = true;
                stack.push(u);
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn to_rational(&self) -> RationalMatrix {
        RationalMatrix::from_fn(self.dimension(), |i, j| {
            if self.get(i, j) {
                Rational::one()
            } else {
                Rational::zero()
            }
        })
        .expect("adjacency is never empty")
    }
}

impl Ontology for Adjacency {
    fn node_ids(&self) -> &[NodeId] {
        &self.nodes
    }
}

/// A rooted tree whose sibling sequences are significant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrderedTree {
    root: NodeId,
    nodes: Vec<NodeId>,
    children: BTreeMap<NodeId, Vec<NodeId>>,
}

impl OrderedTree {
    /// Builds a tree from explicit child sequences. Every node other than
    /// `root` must appear in exactly one sequence.
    pub fn new(root: NodeId, children: BTreeMap<NodeId, Vec<NodeId>>) -> Result<Self> {
        let mut all = vec![root.clone()];
        for kids in children.values() {
            all.extend(kids.iter().cloned());
        }
        let nodes = canonical_order(&all).map_err(|e| match e {
            Error::DuplicateNode(id) if id == root => {
                Error::MalformedTree(format!("root {id} is listed as a child"))
            }
            Error::DuplicateNode(id) => {
                Error::MalformedTree(format!("{id} has more than one parent or repeats among siblings"))
            }
            other => other,
        })?;
        for parent in children.keys() {
            if nodes.binary_search(parent).is_err() {
                return Err(Error::MalformedTree(format!("parent {parent} is unreachable from {root}")));
            }
        }
        let children: BTreeMap<_, _> = children.into_iter().filter(|(_, v)| !v.is_empty()).collect();
        let tree = OrderedTree { root, nodes, children };
        // every node is reached exactly once from the root, otherwise some
        // parent/child chain is detached into a cycle
        let reached = tree.preorder().len();
        if reached != tree.nodes.len() {
            return Err(Error::MalformedTree(format!(
                "only {reached} of {} nodes are reachable from {}",
                tree.nodes.len(),
                tree.root
            )));
        }
        Ok(tree)
    }

    pub fn single(root: NodeId) -> Self {
        OrderedTree {
            nodes: vec![root.clone()],
            root,
            children: BTreeMap::new(),
        }
    }

    /// Orients an undirected tree away from `root` (smallest node when
    /// `None`), ordering each sibling sequence canonically.
    pub fn from_links(nodes: &[NodeId], links: &[Link], root: Option<&NodeId>) -> Result<Self> {
        let pairs: Vec<(NodeId, NodeId)> = links
            .iter()
            .map(|l| (l.low().clone(), l.high().clone()))
            .collect();
        let report = validate_tree(nodes, &pairs)?;
        if !report.is_tree {
            return Err(Error::NotATree(Box::new(report)));
        }
        let order = canonical_order(nodes)?;
        let root = match root {
            Some(r) if order.binary_search(r).is_ok() => r.clone(),
            Some(r) => return Err(Error::UnknownNode(r.clone())),
            None => order[0].clone(),
        };
        let mut neighbours: BTreeMap<&NodeId, BTreeSet<&NodeId>> = BTreeMap::new();
        for link in links {
            neighbours.entry(link.low()).or_default().insert(link.high());
            neighbours.entry(link.high()).or_default().insert(link.low());
        }
        let mut children = BTreeMap::new();
        let mut visited = BTreeSet::from([root.clone()]);
        let mut queue = VecDeque::from([root.clone()]);
        while let Some(v) = queue.pop_front() {
            let mut kids = Vec::new();
            for &u in neighbours.get(&v).into_iter().flatten() {
                if visited.insert(u.clone()) {
                    kids.push(u.clone());
                    queue.push_back(u.clone());
                }
            }
            if !kids.is_empty() {
                children.insert(v, kids);
            }
        }
        Ok(OrderedTree {
            root,
            nodes: order,
            children,
        })
    }

    pub fn root(&self) -> &NodeId {
        &self.root
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn children(&self, parent: &NodeId) -> &[NodeId] {
        self.children.get(parent).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn child_map(&self) -> &BTreeMap<NodeId, Vec<NodeId>> {
        &self.children
    }

    /// Parent-to-child links, parents in canonical order and children in
    /// sibling order.
    pub fn parent_child_links(&self) -> Vec<(NodeId, NodeId)> {
        self.children
            .iter()
            .flat_map(|(p, kids)| kids.iter().map(move |c| (p.clone(), c.clone())))
            .collect()
    }

    pub fn links(&self) -> Vec<Link> {
        let mut links: Vec<Link> = self
            .parent_child_links()
            .into_iter()
            .map(|(p, c)| Link::new(p, c))
            .collect();
        links.sort();
        links
    }

    /// Depth-first visit in sibling order.
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        let mut stack = vec![self.root.clone()];
        while let Some(v) = stack.pop() {
            if !seen.insert(v.clone()) {
                continue;
            }
            for c in self.children(&v).iter().rev() {
                stack.push(c.clone());
            }
            out.push(v);
        }
        out
    }

    /// Projection onto a symmetric 0/1 matrix. Sibling order is lost.
    pub fn to_adjacency(&self) -> Adjacency {
        Adjacency::from_links(&self.nodes, &self.links()).expect("tree nodes are canonical and distinct")
    }
}

impl Ontology for OrderedTree {
    fn node_ids(&self) -> &[NodeId] {
        &self.nodes
    }
}

pub fn to_adjacency(tree: &OrderedTree) -> Adjacency {
    tree.to_adjacency()
}

/// Multi-connected ontology: symmetric, loop-free, connected.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeshOntology {
    adjacency: Adjacency,
}

impl MeshOntology {
    pub fn new(adjacency: Adjacency) -> Result<Self> {
        if !adjacency.is_symmetric() {
            return Err(Error::InvalidMesh("adjacency is not symmetric".into()));
        }
        if !adjacency.has_zero_diagonal() {
            return Err(Error::InvalidMesh("adjacency has a nonzero diagonal".into()));
        }
        if !adjacency.is_connected() {
            return Err(Error::InvalidMesh("graph is disconnected".into()));
        }
        Ok(MeshOntology { adjacency })
    }

    pub fn from_links(nodes: &[NodeId], links: &[Link]) -> Result<Self> {
        if let Some(l) = links.iter().find(|l| l.is_loop()) {
            return Err(Error::InvalidMesh(format!("self link at {}", l.low())));
        }
        MeshOntology::new(Adjacency::from_links(nodes, links)?)
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    pub fn links(&self) -> Vec<Link> {
        self.adjacency.links()
    }

    pub fn len(&self) -> usize {
        self.adjacency.dimension()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Tree on the mesh's links rooted at the smallest node, when the mesh
    /// itself is a tree.
    pub fn as_tree(&self) -> Result<OrderedTree> {
        OrderedTree::from_links(self.node_ids(), &self.links(), None)
    }
}

impl Ontology for MeshOntology {
    fn node_ids(&self) -> &[NodeId] {
        self.adjacency.node_ids()
    }
}

/// Number of distinct node arrangements with reversals identified: `n!/2`.
pub fn arrangement_bound(n: u32) -> Result<BigUint> {
    if n < 2 {
        return Err(Error::DomainError(format!("arrangement bound needs n >= 2, got {n}")));
    }
    let factorial: BigUint = (1..=n).map(BigUint::from).product();
    Ok(factorial / 2u32)
}
