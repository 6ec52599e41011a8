//! Decomposition operators between a mesh and its instance ontologies, the
//! merge operator, and spanning-tree extraction, enumeration and counting.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::One;

use crate::error::{Error, Result};
use crate::matrix::RationalMatrix;
use crate::node::{Link, NodeId};
use crate::ontology::{require_same_nodes, Adjacency, MeshOntology, Ontology, OrderedTree};

/// The rational matrix `X` with `X * M = O`. Entries are arbitrary
/// rationals and `X` need not be invertible.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecompositionOperator {
    pub matrix: RationalMatrix,
    pub label: Option<String>,
}

/// One decomposition of a mesh: an ordered tree over the mesh's nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceOntology {
    tree: OrderedTree,
    label: Option<String>,
}

impl InstanceOntology {
    pub fn new(tree: OrderedTree, label: Option<String>) -> Self {
        InstanceOntology { tree, label }
    }

    /// Checks that `tree` spans the mesh and uses only mesh links.
    pub fn within(mesh: &MeshOntology, tree: OrderedTree, label: Option<String>) -> Result<Self> {
        require_same_nodes(mesh.node_ids(), tree.node_ids())?;
        if let Some(l) = tree.links().into_iter().find(|l| !mesh.adjacency().has_link(l.low(), l.high())) {
            return Err(Error::MissingLink(l.low().clone(), l.high().clone()));
        }
        Ok(InstanceOntology { tree, label })
    }

    pub fn tree(&self) -> &OrderedTree {
        &self.tree
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn adjacency(&self) -> Adjacency {
        self.tree.to_adjacency()
    }

    pub fn links(&self) -> Vec<Link> {
        self.tree.links()
    }
}

impl Ontology for InstanceOntology {
    fn node_ids(&self) -> &[NodeId] {
        self.tree.node_ids()
    }
}

/// `X = O * M^-1`.
pub fn decomposition_operator(mesh: &MeshOntology, instance: &InstanceOntology) -> Result<DecompositionOperator> {
    require_same_nodes(mesh.node_ids(), instance.node_ids())?;
    let inverse = mesh.adjacency().to_rational().invert().map_err(|e| match e {
        Error::SingularError { dimension, rank } => Error::SingularMesh { dimension, rank },
        other => other,
    })?;
    let matrix = instance.adjacency().to_rational().multiply(&inverse)?;
    Ok(DecompositionOperator {
        matrix,
        label: instance.label.clone(),
    })
}

/// The raw product `X * M`. Not necessarily a 0/1 matrix; callers validate
/// it as a tree separately.
pub fn apply_decomposition(operator: &DecompositionOperator, mesh: &MeshOntology) -> Result<RationalMatrix> {
    operator.matrix.multiply(&mesh.adjacency().to_rational())
}

/// `M = X^-1 * O`.
pub fn reconstruct(operator: &DecompositionOperator, instance: &InstanceOntology) -> Result<RationalMatrix> {
    let tree = instance.adjacency().to_rational();
    if operator.matrix.dimension() != tree.dimension() {
        return Err(Error::DimensionError {
            left: operator.matrix.dimension(),
            right: tree.dimension(),
        });
    }
    let inverse = operator.matrix.invert().map_err(|e| match e {
        Error::SingularError { dimension, rank } => Error::SingularOperator { dimension, rank },
        other => other,
    })?;
    inverse.multiply(&tree)
}

/// Entrywise union: 1 wherever either operand has a 1.
pub fn merge(a: &Adjacency, b: &Adjacency) -> Result<Adjacency> {
    require_same_nodes(a.node_ids(), b.node_ids())?;
    let mut out = a.clone();
    for (i, j) in b.ones() {
        out.set(i, j, true);
    }
    Ok(out)
}

/// Whether every 1 of `part` is also a 1 of `whole`.
pub fn is_sub_ontology(part: &Adjacency, whole: &Adjacency) -> Result<bool> {
    if part.dimension() != whole.dimension() {
        return Err(Error::DimensionError {
            left: part.dimension(),
            right: whole.dimension(),
        });
    }
    require_same_nodes(part.node_ids(), whole.node_ids())?;
    Ok(part.ones().all(|(i, j)| whole.get(i, j)))
}

/// Breaks `removed` links out of the mesh; what remains must be a spanning
/// tree. The result is rooted at the smallest node with children in
/// canonical order.
pub fn extract_spanning_tree(mesh: &MeshOntology, removed: &[Link]) -> Result<InstanceOntology> {
    let removed: BTreeSet<&Link> = removed.iter().collect();
    for l in &removed {
        if !mesh.adjacency().has_link(l.low(), l.high()) {
            return Err(Error::MissingLink(l.low().clone(), l.high().clone()));
        }
    }
    let remaining: Vec<Link> = mesh.links().into_iter().filter(|l| !removed.contains(l)).collect();
    let tree = OrderedTree::from_links(mesh.node_ids(), &remaining, None)?;
    Ok(InstanceOntology::new(tree, None))
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu { parent: (0..n).collect() }
    }

    fn find(&self, mut x: usize) -> usize {
        while self.parent[x] != x {
            x = self.parent[x];
        }
        x
    }
}

struct Enumerator<'a> {
    n: usize,
    edges: Vec<(usize, usize)>,
    nodes: &'a [NodeId],
    limit: usize,
    chosen: Vec<usize>,
    out: Vec<InstanceOntology>,
}

impl Enumerator<'_> {
    fn done(&self) -> bool {
        self.out.len() >= self.limit
    }

    /// Whether chosen edges plus `edges[from..]` still connect every node.
    fn can_connect(&self, from: usize) -> bool {
        let mut dsu = Dsu::new(self.n);
        let mut components = self.n;
        let extra = self.edges[from..].iter();
        for &(a, b) in self.chosen.iter().map(|&k| &self.edges[k]).chain(extra) {
            let (ra, rb) = (dsu.find(a), dsu.find(b));
            if ra != rb {
                dsu.parent[ra] = rb;
                components -= 1;
            }
        }
        components == 1
    }

    fn creates_cycle(&self, edge: usize) -> bool {
        let mut dsu = Dsu::new(self.n);
        for &k in &self.chosen {
            let (a, b) = self.edges[k];
            let (ra, rb) = (dsu.find(a), dsu.find(b));
            dsu.parent[ra] = rb;
        }
        let (a, b) = self.edges[edge];
        dsu.find(a) == dsu.find(b)
    }

    fn emit(&mut self) {
        let links: Vec<Link> = self
            .chosen
            .iter()
            .map(|&k| {
                let (a, b) = self.edges[k];
                Link::new(self.nodes[a].clone(), self.nodes[b].clone())
            })
            .collect();
        let tree = OrderedTree::from_links(self.nodes, &links, None).expect("enumerated edge set is a spanning tree");
        self.out.push(InstanceOntology::new(tree, None));
    }

    fn search(&mut self, next: usize) {
        if self.done() {
            return;
        }
        if self.chosen.len() == self.n - 1 {
            self.emit();
            return;
        }
        if next == self.edges.len() {
            return;
        }
        if !self.creates_cycle(next) {
            self.chosen.push(next);
            self.search(next + 1);
            self.chosen.pop();
        }
        if self.can_connect(next + 1) {
            self.search(next + 1);
        }
    }
}

/// Distinct spanning trees of the mesh, include-before-exclude over links
/// in canonical order, stopping after `limit` trees (all when `None`).
pub fn enumerate_spanning_trees(mesh: &MeshOntology, limit: Option<usize>) -> Vec<InstanceOntology> {
    let adjacency = mesh.adjacency();
    let n = adjacency.dimension();
    let edges: Vec<(usize, usize)> = adjacency.ones().filter(|(i, j)| i < j).collect();
    let mut e = Enumerator {
        n,
        edges,
        nodes: mesh.node_ids(),
        limit: limit.unwrap_or(usize::MAX),
        chosen: Vec::new(),
        out: Vec::new(),
    };
    if e.limit > 0 {
        e.search(0);
    }
    e.out
}

/// Laplacian `D - A` of the mesh.
pub fn laplacian(mesh: &MeshOntology) -> RationalMatrix {
    let a = mesh.adjacency();
    let n = a.dimension();
    RationalMatrix::from_fn(n, |i, j| {
        if i == j {
            let degree = (0..n).filter(|&k| a.get(i, k)).count();
            BigInt::from(degree).into()
        } else if a.get(i, j) {
            -crate::rational::one()
        } else {
            crate::rational::zero()
        }
    })
    .expect("mesh has at least one node")
}

/// Number of labelled spanning trees via the matrix-tree theorem: any
/// cofactor of the Laplacian.
pub fn count_spanning_trees(mesh: &MeshOntology) -> BigInt {
    match laplacian(mesh).minor(0) {
        None => BigInt::one(),
        Some(reduced) => {
            let det = reduced.determinant();
            debug_assert!(det.is_integer());
            det.to_integer()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{k_inverse_closed_form, k_matrix};
    use crate::node::{link, node, nodes};
    use crate::ontology::validate_tree;

    fn triangle() -> MeshOntology {
        MeshOntology::from_links(&nodes(["1", "2", "3"]), &[link("1", "2"), link("2", "3"), link("1", "3")]).unwrap()
    }

    fn complete(n: usize) -> MeshOntology {
        let ids: Vec<NodeId> = (1..=n).map(|i| node(i.to_string())).collect();
        let mut links = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                links.push(Link::new(ids[i].clone(), ids[j].clone()));
            }
        }
        MeshOntology::from_links(&ids, &links).unwrap()
    }

    fn star4() -> InstanceOntology {
        let tree = OrderedTree::from_links(
            &nodes(["1", "2", "3", "4"]),
            &[link("1", "2"), link("1", "3"), link("1", "4")],
            None,
        )
        .unwrap();
        InstanceOntology::new(tree, Some("E1".into()))
    }

    #[test]
    fn star_operator_on_k4() {
        let k4 = complete(4);
        let x = decomposition_operator(&k4, &star4()).unwrap();
        let expected = star4().adjacency().to_rational().multiply(&k_inverse_closed_form(4).unwrap()).unwrap();
        assert_eq!(x.matrix, expected);
        assert_eq!(x.label.as_deref(), Some("E1"));
        assert_eq!(apply_decomposition(&x, &k4).unwrap(), star4().adjacency().to_rational());
    }

    #[test]
    fn tree_mesh_gives_identity_operator() {
        // a 2-node mesh is its own only tree and is invertible
        let mesh = MeshOntology::from_links(&nodes(["a", "b"]), &[link("a", "b")]).unwrap();
        let tree = InstanceOntology::within(&mesh, mesh.as_tree().unwrap(), None).unwrap();
        let x = decomposition_operator(&mesh, &tree).unwrap();
        assert!(x.matrix.is_identity());
        assert_eq!(reconstruct(&x, &tree).unwrap(), mesh.adjacency().to_rational());
    }

    #[test]
    fn singular_mesh_reported() {
        // path 1-2-3 has a singular adjacency
        let mesh = MeshOntology::from_links(&nodes(["1", "2", "3"]), &[link("1", "2"), link("2", "3")]).unwrap();
        let tree = InstanceOntology::within(&mesh, mesh.as_tree().unwrap(), None).unwrap();
        assert_eq!(
            decomposition_operator(&mesh, &tree),
            Err(Error::SingularMesh { dimension: 3, rank: 2 })
        );
    }

    #[test]
    fn node_mismatch_reported() {
        let other = OrderedTree::from_links(&nodes(["1", "2", "9"]), &[link("1", "2"), link("2", "9")], None).unwrap();
        let result = decomposition_operator(&triangle(), &InstanceOntology::new(other, None));
        assert!(matches!(result, Err(Error::NodeMismatch(_))));
    }

    #[test]
    fn apply_identity_and_zero() {
        let mesh = triangle();
        let id = DecompositionOperator {
            matrix: RationalMatrix::identity(3).unwrap(),
            label: None,
        };
        assert_eq!(apply_decomposition(&id, &mesh).unwrap(), mesh.adjacency().to_rational());
        let zero = DecompositionOperator {
            matrix: RationalMatrix::zeros(3).unwrap(),
            label: None,
        };
        let product = apply_decomposition(&zero, &mesh).unwrap();
        let as_adj = Adjacency::from_matrix(mesh.node_ids(), &product).unwrap();
        let report = validate_tree(mesh.node_ids(), &[]).unwrap();
        assert_eq!(as_adj.popcount(), 0);
        assert!(!report.is_tree);
        let wrong = DecompositionOperator {
            matrix: RationalMatrix::identity(2).unwrap(),
            label: None,
        };
        assert!(matches!(apply_decomposition(&wrong, &mesh), Err(Error::DimensionError { .. })));
    }

    #[test]
    fn reconstruct_identity_and_singular() {
        let mesh = triangle();
        let path = extract_spanning_tree(&mesh, &[link("1", "3")]).unwrap();
        let id = DecompositionOperator {
            matrix: RationalMatrix::identity(3).unwrap(),
            label: None,
        };
        assert_eq!(reconstruct(&id, &path).unwrap(), path.adjacency().to_rational());
        let zero = DecompositionOperator {
            matrix: RationalMatrix::zeros(3).unwrap(),
            label: None,
        };
        assert_eq!(
            reconstruct(&zero, &path),
            Err(Error::SingularOperator { dimension: 3, rank: 0 })
        );
    }

    #[test]
    fn merge_rule() {
        let ids = nodes(["1", "2", "3"]);
        let a = Adjacency::from_links(&ids, &[link("1", "2")]).unwrap();
        let b = Adjacency::from_links(&ids, &[link("2", "3")]).unwrap();
        let c = merge(&a, &b).unwrap();
        assert_eq!(c.links(), vec![link("1", "2"), link("2", "3")]);
        assert_eq!(merge(&a, &a).unwrap(), a);
        let d = Adjacency::from_links(&nodes(["1", "2", "4"]), &[]).unwrap();
        assert!(matches!(merge(&a, &d), Err(Error::NodeMismatch(_))));
    }

    #[test]
    fn sub_ontology_checks() {
        let k4 = complete(4);
        let star = star4().adjacency();
        assert!(is_sub_ontology(&star, k4.adjacency()).unwrap());
        assert!(!is_sub_ontology(k4.adjacency(), &star).unwrap());
        assert!(is_sub_ontology(&star, &star).unwrap());
        assert!(matches!(
            is_sub_ontology(&star, triangle().adjacency()),
            Err(Error::DimensionError { left: 4, right: 3 })
        ));
    }

    #[test]
    fn extract_from_triangle() {
        let t = extract_spanning_tree(&triangle(), &[link("1", "3")]).unwrap();
        assert_eq!(t.links(), vec![link("1", "2"), link("2", "3")]);
        assert_eq!(t.tree().root(), &node("1"));
        match extract_spanning_tree(&triangle(), &[]) {
            Err(Error::NotATree(report)) => assert!(report.cycle_witness.is_some()),
            other => panic!("expected NotATree, got {other:?}"),
        }
        match extract_spanning_tree(&triangle(), &[link("1", "3"), link("1", "2")]) {
            Err(Error::NotATree(report)) => assert!(!report.is_connected),
            other => panic!("expected NotATree, got {other:?}"),
        }
        assert!(matches!(
            extract_spanning_tree(&star4_mesh(), &[link("2", "3")]),
            Err(Error::MissingLink(..))
        ));
    }

    fn star4_mesh() -> MeshOntology {
        MeshOntology::new(star4().adjacency()).unwrap()
    }

    #[test]
    fn enumeration_small_cases() {
        let trees = enumerate_spanning_trees(&triangle(), None);
        assert_eq!(trees.len(), 3);
        let distinct: BTreeSet<Vec<Link>> = trees.iter().map(|t| t.links()).collect();
        assert_eq!(distinct.len(), 3);
        assert_eq!(enumerate_spanning_trees(&complete(4), None).len(), 16);
        assert_eq!(enumerate_spanning_trees(&complete(4), Some(5)).len(), 5);
        assert!(enumerate_spanning_trees(&complete(4), Some(0)).is_empty());
        assert_eq!(enumerate_spanning_trees(&star4_mesh(), None).len(), 1);
    }

    #[test]
    fn enumeration_is_deterministic() {
        let first: Vec<_> = enumerate_spanning_trees(&complete(5), None).iter().map(|t| t.links()).collect();
        let second: Vec<_> = enumerate_spanning_trees(&complete(5), None).iter().map(|t| t.links()).collect();
        assert_eq!(first, second);
        // include-first order starts with the star-like tree on the first links
        assert_eq!(first[0], vec![link("1", "2"), link("1", "3"), link("1", "4"), link("1", "5")]);
    }

    #[test]
    fn kirchhoff_counts() {
        assert_eq!(count_spanning_trees(&triangle()), BigInt::from(3));
        assert_eq!(count_spanning_trees(&complete(4)), BigInt::from(16));
        assert_eq!(count_spanning_trees(&complete(6)), BigInt::from(6i64.pow(4)));
        assert_eq!(count_spanning_trees(&star4_mesh()), BigInt::from(1));
        let single = MeshOntology::from_links(&nodes(["x"]), &[]).unwrap();
        assert_eq!(count_spanning_trees(&single), BigInt::from(1));
    }

    #[test]
    fn k_matrix_agrees_with_complete_mesh() {
        assert_eq!(complete(5).adjacency().to_rational(), k_matrix(5).unwrap());
    }
}
