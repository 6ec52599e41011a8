//! Multi-connected ontologies over knowledge nodes.
//!
//! A subject domain is a mesh of knowledge nodes ([`MeshOntology`]); each
//! expert's presentation of it is an ordered spanning tree
//! ([`InstanceOntology`]). The crate relates the two through exact rational
//! decomposition operators, accumulates expert trees into link-probability
//! matrices, turns prerequisites into one-way links, and plans the learning
//! path of maximum probability.

pub mod cli;
pub mod decomposition;
pub mod document;
pub mod error;
pub mod matrix;
pub mod node;
pub mod ontology;
pub mod planner;
pub mod probability;
pub mod rational;

pub use decomposition::{
    apply_decomposition, count_spanning_trees, decomposition_operator, enumerate_spanning_trees,
    extract_spanning_tree, is_sub_ontology, merge, reconstruct, DecompositionOperator, InstanceOntology,
};
pub use document::{parse_document, serialize_document, DocumentKind, Loaded, OntologyDocument};
pub use error::{Error, Result};
pub use matrix::{k_inverse_closed_form, k_matrix, RationalMatrix};
pub use node::{Link, NodeId};
pub use ontology::{
    arrangement_bound, node_equivalent, to_adjacency, validate_tree, Adjacency, MeshOntology, Ontology,
    OrderedTree, TreeReport,
};
pub use planner::{brute_force_plan, brute_force_search, path_probability, plan_path, LearningPath, PlanOptions};
pub use probability::{
    accumulate, apply_prerequisites, prerequisite_order, validate_probability_matrix, DirectedProbabilityMatrix,
    ExpertCorpus, MatrixKind, PrerequisiteRelation, ProbabilityMatrix, WeightMatrix,
};
pub use rational::Rational;
