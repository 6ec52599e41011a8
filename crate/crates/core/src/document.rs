//! The TOML ontology document: one schema with a `kind` discriminator.
//!
//! ```toml
//! format_version = "1"
//! kind = "probability"          # tree | mesh | probability | directed | corpus | prerequisites
//! nodes = ["1", "2", "3"]
//!
//! [[links]]
//! from = "1"
//! to = "2"
//! weight = "1/5"                # or 0.2; decimals are read exactly
//! ```
//!
//! Per kind:
//! - `tree`: links run parent to child; `order_rank` orders siblings
//!   (unranked children follow, in canonical order). The first entry of
//!   `nodes` is the root. `ordered = false` marks sibling order as
//!   insignificant.
//! - `mesh`: undirected links, no weights.
//! - `probability`: undirected links, each with a weight.
//! - `directed`: one-way links `from -> to`, each with a weight.
//! - `corpus`: `[[entries]]` with `label`, optional `root` and tree `links`.
//! - `prerequisites`: `pairs = [["before", "after"], ...]`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::decomposition::InstanceOntology;
use crate::error::{Error, Result};
use crate::matrix::RationalMatrix;
use crate::node::{Link, NodeId};
use crate::ontology::{validate_tree, MeshOntology, Ontology, OrderedTree};
use crate::probability::{
    DirectedProbabilityMatrix, ExpertCorpus, PrerequisiteRelation, ProbabilityMatrix, WeightMatrix,
};
use crate::rational::{parse_rational, Rational};

pub const FORMAT_VERSION: &str = "1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocumentKind {
    Tree,
    Mesh,
    Probability,
    Directed,
    Corpus,
    Prerequisites,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocLink {
    pub from: NodeId,
    pub to: NodeId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order_rank: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "optional_rational")]
    pub weight: Option<Rational>,
}

impl DocLink {
    pub fn plain(from: NodeId, to: NodeId) -> Self {
        DocLink {
            from,
            to,
            order_rank: None,
            weight: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusEntry {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root: Option<NodeId>,
    #[serde(default)]
    pub links: Vec<DocLink>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OntologyDocument {
    pub format_version: String,
    pub kind: DocumentKind,
    pub nodes: Vec<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ordered: Option<bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub links: Vec<DocLink>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<(NodeId, NodeId)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entries: Option<Vec<CorpusEntry>>,
}

/// Domain value a document describes.
#[derive(Clone, Debug, PartialEq)]
pub enum Loaded {
    Tree(OrderedTree),
    Mesh(MeshOntology),
    Probability(ProbabilityMatrix),
    Directed(DirectedProbabilityMatrix),
    Corpus(ExpertCorpus),
    Prerequisites(PrerequisiteRelation),
}

pub fn serialize_rational<S: Serializer>(value: &Rational, serializer: S) -> std::result::Result<S::Ok, S::Error> {
    serializer.serialize_str(&value.to_string())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Literal {
    Text(String),
    Integer(i64),
    Float(f64),
}

impl Literal {
    fn into_rational(self) -> Result<Rational> {
        match self {
            Literal::Text(s) => parse_rational(&s),
            Literal::Integer(i) => Ok(crate::rational::int(i)),
            // Display prints the shortest decimal that reads back as the
            // same float, which is the literal the author wrote
            Literal::Float(f) if f.is_finite() => parse_rational(&format!("{f}")),
            Literal::Float(f) => Err(Error::SchemaError(format!("weight {f} is not finite"))),
        }
    }
}

mod optional_rational {
    use super::*;

    pub fn serialize<S: Serializer>(value: &Option<Rational>, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match value {
            Some(v) => serialize_rational(v, serializer),
            None => serializer.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Option<Rational>, D::Error> {
        let literal = Option::<Literal>::deserialize(deserializer)?;
        literal
            .map(|l| l.into_rational().map_err(serde::de::Error::custom))
            .transpose()
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Reads and validates a document. Syntax problems carry a line and
/// column; missing or mistyped fields are schema errors; documents whose
/// content breaks a structural rule (not a tree, cyclic prerequisites, ...)
/// are invariant errors.
pub fn parse_document(text: &str) -> Result<OntologyDocument> {
    let doc = parse_unchecked(text)?;
    doc.load()?;
    Ok(doc)
}

/// Syntax and schema checks only.
pub fn parse_unchecked(text: &str) -> Result<OntologyDocument> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
        let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
        Error::SyntaxError {
            line,
            column,
            message: e.message().trim().to_string(),
        }
    })?;
    let doc: OntologyDocument = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| Error::SchemaError(e.message().trim().to_string()))?;
    doc.check_schema()?;
    Ok(doc)
}

pub fn serialize_document(doc: &OntologyDocument) -> String {
    toml::to_string(doc).expect("documents always serialize")
}

fn schema(message: impl Into<String>) -> Error {
    Error::SchemaError(message.into())
}

fn invariant(e: Error) -> Error {
    match e {
        Error::SchemaError(_) | Error::InvariantError(_) | Error::SyntaxError { .. } => e,
        other => Error::InvariantError(format!("{}: {other}", other.name())),
    }
}

impl OntologyDocument {
    fn new(kind: DocumentKind, nodes: Vec<NodeId>) -> Self {
        OntologyDocument {
            format_version: FORMAT_VERSION.into(),
            kind,
            nodes,
            ordered: None,
            links: Vec::new(),
            pairs: None,
            entries: None,
        }
    }

    fn check_schema(&self) -> Result<()> {
        use DocumentKind::*;
        if self.format_version != FORMAT_VERSION {
            return Err(schema(format!(
                "unsupported format_version {:?}, expected {FORMAT_VERSION:?}",
                self.format_version
            )));
        }
        if self.nodes.is_empty() {
            return Err(schema("nodes must not be empty"));
        }
        let mut seen = BTreeSet::new();
        for n in &self.nodes {
            if !seen.insert(n) {
                return Err(schema(format!("duplicate node id {n}")));
            }
        }
        let known = |id: &NodeId| {
            if seen.contains(id) {
                Ok(())
            } else {
                Err(schema(format!("{id} is not listed in nodes")))
            }
        };
        let links_ok = |links: &[DocLink], ranks: bool, weights: bool| -> Result<()> {
            for l in links {
                known(&l.from)?;
                known(&l.to)?;
                if !ranks && l.order_rank.is_some() {
                    return Err(schema(format!("link {}-{}: order_rank is not allowed here", l.from, l.to)));
                }
                if weights != l.weight.is_some() {
                    let want = if weights { "requires" } else { "does not take" };
                    return Err(schema(format!("link {}-{} {want} a weight", l.from, l.to)));
                }
            }
            Ok(())
        };
        let field_absent = |present: bool, field: &str| {
            if present {
                Err(schema(format!("field {field} is not allowed for kind {:?}", self.kind)))
            } else {
                Ok(())
            }
        };
        field_absent(self.ordered.is_some() && self.kind != Tree, "ordered")?;
        field_absent(self.pairs.is_some() && self.kind != Prerequisites, "pairs")?;
        field_absent(self.entries.is_some() && self.kind != Corpus, "entries")?;
        match self.kind {
            Tree => links_ok(&self.links, true, false),
            Mesh => links_ok(&self.links, false, false),
            Probability | Directed => links_ok(&self.links, false, true),
            Corpus => {
                field_absent(!self.links.is_empty(), "links")?;
                let entries = self.entries.as_ref().ok_or_else(|| schema("corpus requires entries"))?;
                for entry in entries {
                    if let Some(root) = &entry.root {
                        known(root)?;
                    }
                    links_ok(&entry.links, true, false)?;
                }
                Ok(())
            }
            Prerequisites => {
                field_absent(!self.links.is_empty(), "links")?;
                let pairs = self.pairs.as_ref().ok_or_else(|| schema("prerequisites require pairs"))?;
                for (a, b) in pairs {
                    known(a)?;
                    known(b)?;
                }
                Ok(())
            }
        }
    }

    /// Builds the domain value, enforcing every invariant of its type.
    pub fn load(&self) -> Result<Loaded> {
        self.check_schema()?;
        let loaded = match self.kind {
            DocumentKind::Tree => Loaded::Tree(build_tree(&self.nodes, &self.nodes[0], &self.links)?),
            DocumentKind::Mesh => {
                let links = undirected_links(&self.links)?;
                Loaded::Mesh(MeshOntology::from_links(&self.nodes, &links).map_err(invariant)?)
            }
            DocumentKind::Probability => Loaded::Probability(
                ProbabilityMatrix::new(&sorted(&self.nodes), self.weight_matrix(true)?).map_err(invariant)?,
            ),
            DocumentKind::Directed => Loaded::Directed(
                DirectedProbabilityMatrix::new(&sorted(&self.nodes), self.weight_matrix(false)?).map_err(invariant)?,
            ),
            DocumentKind::Corpus => {
                let mut entries = Vec::new();
                for entry in self.entries.as_deref().unwrap_or_default() {
                    let root = entry.root.as_ref().unwrap_or(&self.nodes[0]);
                    let tree = build_tree(&self.nodes, root, &entry.links)
                        .map_err(|e| Error::InvariantError(format!("entry {}: {e}", entry.label)))?;
                    entries.push((entry.label.clone(), InstanceOntology::new(tree, Some(entry.label.clone()))));
                }
                Loaded::Corpus(ExpertCorpus::new(&self.nodes, entries).map_err(invariant)?)
            }
            DocumentKind::Prerequisites => {
                let pairs = self.pairs.clone().unwrap_or_default();
                Loaded::Prerequisites(PrerequisiteRelation::new(&self.nodes, pairs).map_err(invariant)?)
            }
        };
        Ok(loaded)
    }

    pub(crate) fn weight_matrix(&self, symmetric: bool) -> Result<RationalMatrix> {
        let nodes = sorted(&self.nodes);
        let index = |id: &NodeId| nodes.binary_search(id).expect("schema checked");
        let mut weights = RationalMatrix::zeros(nodes.len())?;
        let mut seen = BTreeSet::new();
        for l in &self.links {
            let (i, j) = (index(&l.from), index(&l.to));
            let key = if symmetric { (i.min(j), i.max(j)) } else { (i, j) };
            if !seen.insert(key) {
                return Err(schema(format!("link {}-{} is listed twice", l.from, l.to)));
            }
            let w = l.weight.clone().expect("schema checked");
            weights[(i, j)] = w.clone();
            if symmetric {
                weights[(j, i)] = w;
            }
        }
        Ok(weights)
    }

    pub fn from_tree(tree: &OrderedTree, ordered: bool) -> Self {
        let mut nodes = vec![tree.root().clone()];
        nodes.extend(tree.node_ids().iter().filter(|n| *n != tree.root()).cloned());
        let mut doc = OntologyDocument::new(DocumentKind::Tree, nodes);
        doc.links = tree_links(tree);
        if !ordered {
            doc.ordered = Some(false);
        }
        doc
    }

    pub fn from_mesh(mesh: &MeshOntology) -> Self {
        let mut doc = OntologyDocument::new(DocumentKind::Mesh, mesh.node_ids().to_vec());
        doc.links = mesh
            .links()
            .into_iter()
            .map(|l| DocLink::plain(l.low().clone(), l.high().clone()))
            .collect();
        doc
    }

    pub fn from_probability(p: &ProbabilityMatrix) -> Self {
        let mut doc = OntologyDocument::new(DocumentKind::Probability, p.node_ids().to_vec());
        doc.links = weighted_links(p, true);
        doc
    }

    pub fn from_directed(d: &DirectedProbabilityMatrix) -> Self {
        let mut doc = OntologyDocument::new(DocumentKind::Directed, d.node_ids().to_vec());
        doc.links = weighted_links(d, false);
        doc
    }

    pub fn from_corpus(corpus: &ExpertCorpus) -> Self {
        let mut doc = OntologyDocument::new(DocumentKind::Corpus, corpus.node_ids().to_vec());
        let default_root = &corpus.node_ids()[0];
        doc.entries = Some(
            corpus
                .entries()
                .iter()
                .map(|(label, instance)| {
                    let root = instance.tree().root();
                    CorpusEntry {
                        label: label.clone(),
                        root: (root != default_root).then(|| root.clone()),
                        links: tree_links(instance.tree()),
                    }
                })
                .collect(),
        );
        doc
    }

    pub fn from_prerequisites(relation: &PrerequisiteRelation) -> Self {
        let mut doc = OntologyDocument::new(DocumentKind::Prerequisites, relation.node_ids().to_vec());
        doc.pairs = Some(relation.pairs().iter().cloned().collect());
        doc
    }
}

fn sorted(nodes: &[NodeId]) -> Vec<NodeId> {
    let mut out = nodes.to_vec();
    out.sort();
    out
}

fn undirected_links(links: &[DocLink]) -> Result<Vec<Link>> {
    let mut seen = BTreeSet::new();
    for l in links {
        let link = Link::new(l.from.clone(), l.to.clone());
        if !seen.insert(link.clone()) {
            return Err(schema(format!("link {link} is listed twice")));
        }
    }
    Ok(seen.into_iter().collect())
}

fn tree_links(tree: &OrderedTree) -> Vec<DocLink> {
    tree.child_map()
        .iter()
        .flat_map(|(parent, kids)| {
            kids.iter().enumerate().map(move |(rank, child)| DocLink {
                from: parent.clone(),
                to: child.clone(),
                order_rank: Some(rank as u32),
                weight: None,
            })
        })
        .collect()
}

fn weighted_links<W: WeightMatrix>(m: &W, symmetric: bool) -> Vec<DocLink> {
    let ids = m.node_ids();
    let n = ids.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j || (symmetric && j < i) {
                continue;
            }
            let w = m.weight(i, j);
            if *w != crate::rational::zero() {
                out.push(DocLink {
                    from: ids[i].clone(),
                    to: ids[j].clone(),
                    order_rank: None,
                    weight: Some(w.clone()),
                });
            }
        }
    }
    out
}

/// Orients parent-to-child links from `root` and orders siblings by rank.
fn build_tree(nodes: &[NodeId], root: &NodeId, links: &[DocLink]) -> Result<OrderedTree> {
    let pairs: Vec<(NodeId, NodeId)> = links.iter().map(|l| (l.from.clone(), l.to.clone())).collect();
    let report = validate_tree(nodes, &pairs).map_err(invariant)?;
    if !report.is_tree {
        return Err(invariant(Error::NotATree(Box::new(report))));
    }
    let mut grouped: BTreeMap<NodeId, Vec<&DocLink>> = BTreeMap::new();
    for l in links {
        grouped.entry(l.from.clone()).or_default().push(l);
    }
    let mut children = BTreeMap::new();
    for (parent, mut kids) in grouped {
        let mut ranks = BTreeSet::new();
        for k in &kids {
            if let Some(r) = k.order_rank {
                if !ranks.insert(r) {
                    return Err(Error::InvariantError(format!("children of {parent} share order_rank {r}")));
                }
            }
        }
        kids.sort_by(|a, b| match (a.order_rank, b.order_rank) {
            (Some(x), Some(y)) => x.cmp(&y),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => a.to.cmp(&b.to),
        });
        children.insert(parent, kids.into_iter().map(|l| l.to.clone()).collect());
    }
    OrderedTree::new(root.clone(), children)
        .map_err(|e| Error::InvariantError(format!("links must point away from root {root}: {e}")))
}
