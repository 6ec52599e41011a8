//! Seeded generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, VecDeque};
use std::path::PathBuf;

use ontomesh::node::node;
use ontomesh::rational::ratio;
use ontomesh::{Adjacency, Link, MeshOntology, NodeId, OrderedTree, PrerequisiteRelation, Rational, RationalMatrix};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// `"1"` to `"n"`.
pub fn labels(n: usize) -> Vec<NodeId> {
    (1..=n).map(|i| node(i.to_string())).collect()
}

/// Distinct labels mixing words, digits and punctuation.
pub fn random_labels(rng: &mut ChaCha8Rng, n: usize) -> Vec<NodeId> {
    const STEMS: [&str; 6] = ["unit", "k", "topic_", "x-", "Node", "é"];
    let mut out: Vec<NodeId> = Vec::new();
    while out.len() < n {
        let label = match rng.gen_range(0..3) {
            0 => rng.gen_range(0..200).to_string(),
            1 => format!("{}{}", STEMS.choose(rng).unwrap(), rng.gen_range(0..50)),
            _ => format!("{} {}", STEMS.choose(rng).unwrap(), rng.gen_range(0..9)),
        };
        let id = node(label);
        if !out.contains(&id) {
            out.push(id);
        }
    }
    out
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn find(&mut self, x: usize) -> usize {
        if self.0[x] != x {
            let root = self.find(self.0[x]);
            self.0[x] = root;
        }
        self.0[x]
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (a, b) = (self.find(a), self.find(b));
        self.0[a] = b;
        a != b
    }
}

/// Random spanning forest of the candidate edges (a spanning tree when
/// they connect all `n` nodes).
pub fn random_spanning_edges(rng: &mut ChaCha8Rng, n: usize, candidates: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut edges = candidates.to_vec();
    edges.shuffle(rng);
    let mut dsu = Dsu((0..n).collect());
    edges.into_iter().filter(|&(a, b)| dsu.union(a, b)).collect()
}

fn complete_edges(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

fn to_links(nodes: &[NodeId], edges: &[(usize, usize)]) -> Vec<Link> {
    edges.iter().map(|&(a, b)| Link::new(nodes[a].clone(), nodes[b].clone())).collect()
}

/// Connected mesh: a random spanning tree plus each other link with
/// probability `density`.
pub fn random_mesh(rng: &mut ChaCha8Rng, nodes: &[NodeId], density: f64) -> MeshOntology {
    let n = nodes.len();
    let mut edges = random_spanning_edges(rng, n, &complete_edges(n));
    for e in complete_edges(n) {
        if !edges.contains(&e) && rng.gen_bool(density) {
            edges.push(e);
        }
    }
    MeshOntology::from_links(nodes, &to_links(nodes, &edges)).expect("connected by construction")
}

/// Symmetric, zero-diagonal, possibly disconnected.
pub fn random_adjacency(rng: &mut ChaCha8Rng, nodes: &[NodeId], density: f64) -> Adjacency {
    let links: Vec<Link> = complete_edges(nodes.len())
        .into_iter()
        .filter(|_| rng.gen_bool(density))
        .map(|(a, b)| Link::new(nodes[a].clone(), nodes[b].clone()))
        .collect();
    Adjacency::from_links(nodes, &links).unwrap()
}

/// Orients undirected tree edges from a random root with shuffled
/// sibling order.
fn orient(rng: &mut ChaCha8Rng, nodes: &[NodeId], edges: &[(usize, usize)]) -> OrderedTree {
    let n = nodes.len();
    let mut neighbours = vec![Vec::new(); n];
    for &(a, b) in edges {
        neighbours[a].push(b);
        neighbours[b].push(a);
    }
    let root = rng.gen_range(0..n);
    let mut seen = vec![false; n];
    seen[root] = true;
    let mut queue = VecDeque::from([root]);
    let mut children = BTreeMap::new();
    while let Some(v) = queue.pop_front() {
        let mut kids: Vec<usize> = neighbours[v].iter().copied().filter(|&u| !seen[u]).collect();
        kids.shuffle(rng);
        for &u in &kids {
            seen[u] = true;
            queue.push_back(u);
        }
        if !kids.is_empty() {
            children.insert(nodes[v].clone(), kids.into_iter().map(|u| nodes[u].clone()).collect());
        }
    }
    OrderedTree::new(nodes[root].clone(), children).expect("oriented tree")
}

/// Random ordered spanning tree of `mesh` using only mesh links.
pub fn random_tree_within(rng: &mut ChaCha8Rng, mesh: &MeshOntology) -> OrderedTree {
    let nodes = ontomesh::Ontology::node_ids(mesh).to_vec();
    let candidates: Vec<(usize, usize)> = mesh.adjacency().ones().filter(|(i, j)| i < j).collect();
    let edges = random_spanning_edges(rng, nodes.len(), &candidates);
    orient(rng, &nodes, &edges)
}

/// Random ordered tree over arbitrary labels.
pub fn random_tree(rng: &mut ChaCha8Rng, nodes: &[NodeId]) -> OrderedTree {
    let n = nodes.len();
    let edges: Vec<(usize, usize)> = (1..n).map(|i| (rng.gen_range(0..i), i)).collect();
    orient(rng, nodes, &edges)
}

/// One of 0, 1/10, ..., 1, with zero drawn with probability `zero`.
pub fn tenth(rng: &mut ChaCha8Rng, zero: f64) -> Rational {
    if rng.gen_bool(zero) {
        ratio(0, 1)
    } else {
        ratio(rng.gen_range(1..=10), 10)
    }
}

/// Zero-diagonal weight matrix in tenths.
pub fn random_weights(rng: &mut ChaCha8Rng, n: usize, symmetric: bool, zero: f64) -> RationalMatrix {
    let mut m = RationalMatrix::zeros(n).unwrap();
    for i in 0..n {
        for j in 0..n {
            if i == j || (symmetric && j < i) {
                continue;
            }
            let w = tenth(rng, zero);
            if symmetric {
                m[(j, i)] = w.clone();
            }
            m[(i, j)] = w;
        }
    }
    m
}

/// Arbitrary rational in `[0, 1]` with a small denominator.
pub fn random_probability(rng: &mut ChaCha8Rng) -> Rational {
    let d = rng.gen_range(1..=40);
    ratio(rng.gen_range(0..=d), d)
}

/// Acyclic relation: pairs respect a hidden random order.
pub fn random_dag(rng: &mut ChaCha8Rng, nodes: &[NodeId], density: f64) -> PrerequisiteRelation {
    let mut order = nodes.to_vec();
    order.shuffle(rng);
    let mut pairs = Vec::new();
    for i in 0..order.len() {
        for j in i + 1..order.len() {
            if rng.gen_bool(density) {
                pairs.push((order[i].clone(), order[j].clone()));
            }
        }
    }
    PrerequisiteRelation::new(nodes, pairs).expect("acyclic by construction")
}
