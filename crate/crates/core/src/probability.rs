//! Expert-frequency probability matrices and prerequisite constraints.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::Serialize;

use crate::decomposition::InstanceOntology;
use crate::error::{Error, Result};
use crate::matrix::RationalMatrix;
use crate::node::{canonical_order, NodeId};
use crate::ontology::{require_same_nodes, Adjacency, Ontology};
use crate::rational::{is_probability, Rational};

/// Decompositions of one mesh, one per expert.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpertCorpus {
    nodes: Vec<NodeId>,
    entries: Vec<(String, InstanceOntology)>,
}

impl ExpertCorpus {
    pub fn new(nodes: &[NodeId], entries: Vec<(String, InstanceOntology)>) -> Result<Self> {
        let nodes = canonical_order(nodes)?;
        let mut labels = BTreeSet::new();
        for (label, tree) in &entries {
            if !labels.insert(label.as_str()) {
                return Err(Error::DuplicateExpert(label.clone()));
            }
            require_same_nodes(&nodes, tree.node_ids())?;
        }
        Ok(ExpertCorpus { nodes, entries })
    }

    pub fn entries(&self) -> &[(String, InstanceOntology)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl Ontology for ExpertCorpus {
    fn node_ids(&self) -> &[NodeId] {
        &self.nodes
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    Symmetric,
    Directed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    OutOfRange { row: NodeId, col: NodeId, value: String },
    NonZeroDiagonal { node: NodeId, value: String },
    Asymmetric { row: NodeId, col: NodeId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OutOfRange { row, col, value } => {
                write!(f, "entry ({row}, {col}) = {value} is outside [0, 1]")
            }
            Violation::NonZeroDiagonal { node, value } => {
                write!(f, "diagonal entry ({node}, {node}) = {value} is not 0")
            }
            Violation::Asymmetric { row, col } => {
                write!(f, "entries ({row}, {col}) and ({col}, {row}) differ")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProbabilityReport {
    pub kind: MatrixKind,
    pub violations: Vec<Violation>,
}

impl ProbabilityReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ProbabilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        f.write_str(&text.join("; "))
    }
}

/// Lists every entry outside `[0, 1]`, nonzero diagonal entry and, for
/// the symmetric kind, every asymmetric pair. Never fails.
pub fn validate_probability_matrix(nodes: &[NodeId], weights: &RationalMatrix, kind: MatrixKind) -> ProbabilityReport {
    let n = weights.dimension();
    let label = |i: usize| {
        nodes
            .get(i)
            .cloned()
            .unwrap_or_else(|| NodeId::new(format!("#{}", i + 1)).expect("non-empty"))
    };
    let mut violations = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let v = &weights[(i, j)];
            if !is_probability(v) {
                violations.push(Violation::OutOfRange {
                    row: label(i),
                    col: label(j),
                    value: v.to_string(),
                });
            }
            if i == j && !v.is_zero() {
                violations.push(Violation::NonZeroDiagonal {
                    node: label(i),
                    value: v.to_string(),
                });
            }
            if kind == MatrixKind::Symmetric && i < j && *v != weights[(j, i)] {
                violations.push(Violation::Asymmetric { row: label(i), col: label(j) });
            }
        }
    }
    ProbabilityReport { kind, violations }
}

fn checked_weights(nodes: &[NodeId], weights: RationalMatrix, kind: MatrixKind) -> Result<(Vec<NodeId>, RationalMatrix)> {
    let canonical = canonical_order(nodes)?;
    if canonical != nodes {
        return Err(Error::DomainError("nodes must be given in canonical order".into()));
    }
    if weights.dimension() != nodes.len() {
        return Err(Error::DimensionError {
            left: nodes.len(),
            right: weights.dimension(),
        });
    }
    let report = validate_probability_matrix(nodes, &weights, kind);
    if !report.is_valid() {
        return Err(Error::InvalidProbabilityMatrix(Box::new(report)));
    }
    Ok((canonical, weights))
}

/// Read access shared by the symmetric and directed matrices.
pub trait WeightMatrix: Ontology {
    fn weights(&self) -> &RationalMatrix;

    fn weight(&self, i: usize, j: usize) -> &Rational {
        &self.weights()[(i, j)]
    }

    fn index_of(&self, id: &NodeId) -> Result<usize> {
        self.node_ids()
            .binary_search(id)
            .map_err(|_| Error::UnknownNode(id.clone()))
    }

    /// Nonzero positions.
    fn support(&self) -> Adjacency {
        let n = self.node_ids().len();
        let bits = self.weights().entries().iter().map(|w| !w.is_zero()).collect();
        debug_assert_eq!(self.weights().entries().len(), n * n);
        Adjacency::from_bits(self.node_ids(), bits).expect("weights are square over canonical nodes")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProbabilityMatrix {
    nodes: Vec<NodeId>,
    weights: RationalMatrix,
}

impl ProbabilityMatrix {
    pub fn new(nodes: &[NodeId], weights: RationalMatrix) -> Result<Self> {
        let (nodes, weights) = checked_weights(nodes, weights, MatrixKind::Symmetric)?;
        Ok(ProbabilityMatrix { nodes, weights })
    }
}

impl Ontology for ProbabilityMatrix {
    fn node_ids(&self) -> &[NodeId] {
        &self.nodes
    }
}

impl WeightMatrix for ProbabilityMatrix {
    fn weights(&self) -> &RationalMatrix {
        &self.weights
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectedProbabilityMatrix {
    nodes: Vec<NodeId>,
    weights: RationalMatrix,
}

impl DirectedProbabilityMatrix {
    pub fn new(nodes: &[NodeId], weights: RationalMatrix) -> Result<Self> {
        let (nodes, weights) = checked_weights(nodes, weights, MatrixKind::Directed)?;
        Ok(DirectedProbabilityMatrix { nodes, weights })
    }
}

impl From<ProbabilityMatrix> for DirectedProbabilityMatrix {
    fn from(p: ProbabilityMatrix) -> Self {
        DirectedProbabilityMatrix {
            nodes: p.nodes,
            weights: p.weights,
        }
    }
}

impl Ontology for DirectedProbabilityMatrix {
    fn node_ids(&self) -> &[NodeId] {
        &self.nodes
    }
}

impl WeightMatrix for DirectedProbabilityMatrix {
    fn weights(&self) -> &RationalMatrix {
        &self.weights
    }
}

/// Relative link frequency over the corpus: `count(i-j) / |corpus|`.
pub fn accumulate(corpus: &ExpertCorpus) -> Result<ProbabilityMatrix> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let nodes = corpus.node_ids();
    let n = nodes.len();
    let mut counts = vec![0u64; n * n];
    for (_, tree) in corpus.entries() {
        require_same_nodes(nodes, tree.node_ids())?;
        for (i, j) in tree.adjacency().ones() {
            counts[i * n + j] += 1;
        }
    }
    let total = BigInt::from(corpus.len());
    let weights = RationalMatrix::from_fn(n, |i, j| Rational::new(BigInt::from(counts[i * n + j]), total.clone()))?;
    ProbabilityMatrix::new(nodes, weights)
}

/// Acyclic "before / after" pairs over a node universe.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrerequisiteRelation {
    nodes: Vec<NodeId>,
    pairs: BTreeSet<(NodeId, NodeId)>,
}

impl PrerequisiteRelation {
    /// `nodes` is the universe; every pair endpoint must belong to it.
    pub fn new(nodes: &[NodeId], pairs: impl IntoIterator<Item = (NodeId, NodeId)>) -> Result<Self> {
        let nodes = canonical_order(nodes)?;
        let pairs: BTreeSet<_> = pairs.into_iter().collect();
        for (a, b) in &pairs {
            for id in [a, b] {
                if nodes.binary_search(id).is_err() {
                    return Err(Error::UnknownNode(id.clone()));
                }
            }
        }
        let relation = PrerequisiteRelation { nodes, pairs };
        if let Some(cycle) = relation.find_cycle() {
            return Err(Error::CyclicPrerequisites(cycle));
        }
        Ok(relation)
    }

    /// Universe taken from the pair endpoints.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (NodeId, NodeId)>) -> Result<Self> {
        let pairs: Vec<_> = pairs.into_iter().collect();
        let universe: BTreeSet<NodeId> = pairs.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect();
        let universe: Vec<NodeId> = universe.into_iter().collect();
        PrerequisiteRelation::new(&universe, pairs)
    }

    pub fn pairs(&self) -> &BTreeSet<(NodeId, NodeId)> {
        &self.pairs
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    fn successors(&self) -> BTreeMap<&NodeId, Vec<&NodeId>> {
        let mut out: BTreeMap<&NodeId, Vec<&NodeId>> = BTreeMap::new();
        for (a, b) in &self.pairs {
            out.entry(a).or_default().push(b);
        }
        out
    }

    /// A closed walk `[a, .., a]` if the relation has a cycle.
    fn find_cycle(&self) -> Option<Vec<NodeId>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Active,
            Done,
        }
        let succ = self.successors();
        let mut mark: BTreeMap<&NodeId, Mark> = self.nodes.iter().map(|n| (n, Mark::New)).collect();
        for start in &self.nodes {
            if mark[start] != Mark::New {
                continue;
            }
            // iterative DFS keeping the active path
            let mut path: Vec<&NodeId> = vec![start];
            let mut cursor: Vec<usize> = vec![0];
            mark.insert(start, Mark::Active);
            while let Some(&top) = path.last() {
                let depth = path.len() - 1;
                let next = succ.get(top).and_then(|s| s.get(cursor[depth]).copied());
                cursor[depth] += 1;
                match next {
                    Some(u) => match mark[u] {
                        Mark::New => {
                            mark.insert(u, Mark::Active);
                            path.push(u);
                            cursor.push(0);
                        }
                        Mark::Active => {
                            let from = path.iter().position(|&p| p == u).expect("active node is on path");
                            let mut cycle: Vec<NodeId> = path[from..].iter().map(|&p| p.clone()).collect();
                            cycle.push(u.clone());
                            return Some(cycle);
                        }
                        Mark::Done => {}
                    },
                    None => {
                        mark.insert(top, Mark::Done);
                        path.pop();
                        cursor.pop();
                    }
                }
            }
        }
        None
    }

    /// Bitmask of required predecessors for each node of `order`. Pair
    /// endpoints outside `order` are an error.
    pub(crate) fn predecessor_masks(&self, order: &[NodeId]) -> Result<Vec<u64>> {
        let mut masks = vec![0u64; order.len()];
        let index = |id: &NodeId| order.binary_search(id).map_err(|_| Error::UnknownNode(id.clone()));
        for (a, b) in &self.pairs {
            let (ia, ib) = (index(a)?, index(b)?);
            masks[ib] |= 1 << ia;
        }
        Ok(masks)
    }
}

impl Ontology for PrerequisiteRelation {
    fn node_ids(&self) -> &[NodeId] {
        &self.nodes
    }
}

/// Zeroes `D(j, i)` for every prerequisite `i` before `j`; every other
/// entry is copied unchanged.
pub fn apply_prerequisites(p: &ProbabilityMatrix, relation: &PrerequisiteRelation) -> Result<DirectedProbabilityMatrix> {
    let mut weights = p.weights().clone();
    for (before, after) in relation.pairs() {
        let i = p.index_of(before).map_err(|_| mismatch(before))?;
        let j = p.index_of(after).map_err(|_| mismatch(after))?;
        weights[(j, i)] = Rational::zero();
    }
    DirectedProbabilityMatrix::new(p.node_ids(), weights)
}

fn mismatch(id: &NodeId) -> Error {
    Error::NodeMismatch(format!("prerequisite node {id} is not in the matrix"))
}

/// Topological order with the smallest available node first.
pub fn prerequisite_order(relation: &PrerequisiteRelation) -> Vec<NodeId> {
    let mut indegree: BTreeMap<&NodeId, usize> = relation.nodes.iter().map(|n| (n, 0)).collect();
    for (_, b) in &relation.pairs {
        *indegree.get_mut(b).expect("pair endpoints are in the universe") += 1;
    }
    let succ = relation.successors();
    let mut ready: BTreeSet<&NodeId> = indegree.iter().filter(|(_, &d)| d == 0).map(|(&n, _)| n).collect();
    let mut order = Vec::with_capacity(relation.nodes.len());
    while let Some(v) = ready.pop_first() {
        order.push(v.clone());
        for &u in succ.get(v).into_iter().flatten() {
            let d = indegree.get_mut(u).expect("known node");
            *d -= 1;
            if *d == 0 {
                ready.insert(u);
            }
        }
    }
    debug_assert_eq!(order.len(), relation.nodes.len(), "relation is acyclic by construction");
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::node::{link, node, nodes};
    use crate::ontology::OrderedTree;
    use crate::rational::{int, ratio};

    fn tree(ids: &[&str], links: &[(&str, &str)]) -> InstanceOntology {
        let links: Vec<_> = links.iter().map(|(a, b)| link(*a, *b)).collect();
        InstanceOntology::new(OrderedTree::from_links(&nodes(ids.iter().copied()), &links, None).unwrap(), None)
    }

    fn ids() -> Vec<NodeId> {
        nodes(["1", "2", "3"])
    }

    #[test]
    fn single_expert_gives_indicator() {
        let t = tree(&["1", "2", "3"], &[("1", "2"), ("2", "3")]);
        let corpus = ExpertCorpus::new(&ids(), vec![("E1".into(), t.clone())]).unwrap();
        let p = accumulate(&corpus).unwrap();
        assert_eq!(p.support(), t.adjacency());
        assert_eq!(p.weight(0, 1), &int(1));
        assert_eq!(p.weight(0, 2), &int(0));
    }

    #[test]
    fn five_experts_one_link_fifth() {
        let a = tree(&["1", "2", "3"], &[("1", "2"), ("2", "3")]);
        let b = tree(&["1", "2", "3"], &[("1", "3"), ("2", "3")]);
        let entries = vec![
            ("E1".to_string(), a),
            ("E2".to_string(), b.clone()),
            ("E3".to_string(), b.clone()),
            ("E4".to_string(), b.clone()),
            ("E5".to_string(), b),
        ];
        let p = accumulate(&ExpertCorpus::new(&ids(), entries).unwrap()).unwrap();
        assert_eq!(p.weight(0, 1), &ratio(1, 5));
        assert_eq!(p.weight(1, 0), &ratio(1, 5));
        assert_eq!(p.weight(1, 2), &int(1));
        assert_eq!(p.weight(0, 2), &ratio(4, 5));
    }

    #[test]
    fn duplicated_tree_matches_single() {
        let t = tree(&["1", "2", "3"], &[("1", "2"), ("2", "3")]);
        let one = accumulate(&ExpertCorpus::new(&ids(), vec![("a".into(), t.clone())]).unwrap()).unwrap();
        let two = accumulate(&ExpertCorpus::new(&ids(), vec![("a".into(), t.clone()), ("b".into(), t)]).unwrap()).unwrap();
        assert_eq!(one, two);
    }

    #[test]
    fn corpus_errors() {
        let t = tree(&["1", "2", "3"], &[("1", "2"), ("2", "3")]);
        assert_eq!(accumulate(&ExpertCorpus::new(&ids(), vec![]).unwrap()), Err(Error::EmptyCorpus));
        assert_eq!(
            ExpertCorpus::new(&ids(), vec![("a".into(), t.clone()), ("a".into(), t)]),
            Err(Error::DuplicateExpert("a".into()))
        );
        let other = tree(&["1", "2", "4"], &[("1", "2"), ("2", "4")]);
        assert!(matches!(
            ExpertCorpus::new(&ids(), vec![("a".into(), other)]),
            Err(Error::NodeMismatch(_))
        ));
    }

    fn chain_matrix() -> ProbabilityMatrix {
        let w = RationalMatrix::parse("0, 0.2, 0\n0.2, 0, 0.5\n0, 0.5, 0").unwrap();
        ProbabilityMatrix::new(&ids(), w).unwrap()
    }

    #[test]
    fn prerequisites_make_one_way_links() {
        let p = chain_matrix();
        let empty = PrerequisiteRelation::new(&ids(), []).unwrap();
        let d = apply_prerequisites(&p, &empty).unwrap();
        assert_eq!(d.weights(), p.weights());
        assert!(d.weights().is_symmetric());

        let r = PrerequisiteRelation::new(&ids(), [(node("1"), node("2"))]).unwrap();
        let d = apply_prerequisites(&p, &r).unwrap();
        assert_eq!(d.weight(0, 1), &ratio(1, 5));
        assert_eq!(d.weight(1, 0), &int(0));
        assert_eq!(d.weight(1, 2), &ratio(1, 2));
        assert_eq!(d.weight(2, 1), &ratio(1, 2));
    }

    #[test]
    fn prerequisite_outside_matrix() {
        let r = PrerequisiteRelation::from_pairs([(node("1"), node("9"))]).unwrap();
        assert!(matches!(apply_prerequisites(&chain_matrix(), &r), Err(Error::NodeMismatch(_))));
    }

    #[test]
    fn cyclic_relations_rejected() {
        let r = PrerequisiteRelation::new(&ids(), [(node("1"), node("2")), (node("2"), node("1"))]);
        assert_eq!(r, Err(Error::CyclicPrerequisites(nodes(["1", "2", "1"]))));
        let r = PrerequisiteRelation::new(
            &ids(),
            [(node("1"), node("2")), (node("2"), node("3")), (node("3"), node("1"))],
        );
        assert_eq!(r, Err(Error::CyclicPrerequisites(nodes(["1", "2", "3", "1"]))));
        let r = PrerequisiteRelation::new(&ids(), [(node("2"), node("2"))]);
        assert_eq!(r, Err(Error::CyclicPrerequisites(nodes(["2", "2"]))));
        assert!(matches!(
            PrerequisiteRelation::new(&ids(), [(node("1"), node("x"))]),
            Err(Error::UnknownNode(_))
        ));
    }

    #[test]
    fn topological_orders() {
        let r = PrerequisiteRelation::new(&ids(), [(node("1"), node("2")), (node("2"), node("3"))]).unwrap();
        assert_eq!(prerequisite_order(&r), nodes(["1", "2", "3"]));
        let r = PrerequisiteRelation::new(&nodes(["a", "b"]), []).unwrap();
        assert_eq!(prerequisite_order(&r), nodes(["a", "b"]));
        let r = PrerequisiteRelation::from_pairs([(node("b"), node("a")), (node("b"), node("c"))]).unwrap();
        assert_eq!(prerequisite_order(&r), nodes(["b", "a", "c"]));
    }

    #[test]
    fn validation_reports() {
        let bad = RationalMatrix::parse("0, 1.5\n1.5, 0").unwrap();
        let report = validate_probability_matrix(&nodes(["1", "2"]), &bad, MatrixKind::Symmetric);
        assert_eq!(report.violations.len(), 2);
        assert!(matches!(report.violations[0], Violation::OutOfRange { .. }));

        let diag = RationalMatrix::parse("0, 0, 0\n0, 0, 0\n0, 0, 0.1").unwrap();
        let report = validate_probability_matrix(&ids(), &diag, MatrixKind::Symmetric);
        assert_eq!(
            report.violations,
            vec![Violation::NonZeroDiagonal {
                node: node("3"),
                value: "1/10".into()
            }]
        );

        let asym = RationalMatrix::parse("0, 0.2\n0, 0").unwrap();
        assert!(!validate_probability_matrix(&nodes(["1", "2"]), &asym, MatrixKind::Symmetric).is_valid());
        assert!(validate_probability_matrix(&nodes(["1", "2"]), &asym, MatrixKind::Directed).is_valid());
        assert!(matches!(
            ProbabilityMatrix::new(&nodes(["1", "2"]), asym),
            Err(Error::InvalidProbabilityMatrix(_))
        ));
    }
}
