//! Command-line front end. [`run_command`] never panics on bad input and
//! returns the captured output, so it can be driven from tests.
//!
//! Exit codes: 0 success, 1 the algebra rejected well-formed input, 2 the
//! input could not be read (usage, syntax, schema or invariant errors).

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::decomposition::{
    count_spanning_trees, decomposition_operator, enumerate_spanning_trees, extract_spanning_tree, merge,
    reconstruct, DecompositionOperator, InstanceOntology,
};
use crate::document::{parse_unchecked, serialize_document, DocumentKind, Loaded, OntologyDocument};
use crate::error::{Error, Result};
use crate::matrix::RationalMatrix;
use crate::node::{Link, NodeId};
use crate::ontology::{node_equivalent, validate_tree, Adjacency, MeshOntology, Ontology};
use crate::planner::{brute_force_search, plan_path, LearningPath, PlanOptions};
use crate::probability::{
    accumulate, apply_prerequisites, validate_probability_matrix, DirectedProbabilityMatrix, ExpertCorpus,
    MatrixKind, PrerequisiteRelation, WeightMatrix,
};

#[derive(Parser, Debug)]
#[command(name = "ontomesh", version, about = "Mesh ontologies, decomposition operators and learning paths")]
struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a document and report every problem found.
    Validate { file: PathBuf },
    /// Invert a matrix given as matrix text or as a mesh document.
    Invert { matrix: PathBuf },
    /// Compare the node sets of two documents.
    Equiv { a: PathBuf, b: PathBuf },
    /// Merge trees or meshes over the same nodes into one mesh.
    Compose {
        #[arg(required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
    },
    /// Break a mesh into spanning trees.
    Decompose {
        mesh: PathBuf,
        /// Links to remove, e.g. `1-2,3-4`. What remains must be a tree.
        #[arg(long, value_delimiter = ',', required_unless_present = "enumerate", conflicts_with = "enumerate")]
        remove: Vec<String>,
        /// List up to this many spanning trees as a corpus document.
        #[arg(long)]
        enumerate: Option<usize>,
    },
    /// Print the decomposition operator taking the mesh to the tree.
    Operator { mesh: PathBuf, tree: PathBuf },
    /// Rebuild the mesh matrix from an operator (matrix text) and its tree.
    Reconstruct { operator: PathBuf, tree: PathBuf },
    /// Accumulate an expert corpus into a probability matrix.
    Ingest { corpus: PathBuf },
    /// Turn prerequisite pairs into one-way links.
    Prereq { probability: PathBuf, pairs: PathBuf },
    /// Find the learning path of maximum probability.
    Plan {
        matrix: PathBuf,
        /// Node the path must start from.
        #[arg(long)]
        start: Option<String>,
        /// Prerequisites document enforced as a global order constraint.
        #[arg(long)]
        precedence: Option<PathBuf>,
        /// Confirm the result by exhaustive search.
        #[arg(long)]
        oracle: bool,
    },
    /// Count the spanning trees of a mesh.
    CountTrees { mesh: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub status: i32,
    pub stdout: String,
    pub stderr: String,
}

struct Reply {
    status: i32,
    text: String,
    json: Value,
}

impl Reply {
    fn ok(text: impl Into<String>, json: Value) -> Self {
        Reply {
            status: 0,
            text: text.into(),
            json,
        }
    }

    fn document(doc: &OntologyDocument) -> Self {
        Reply::ok(serialize_document(doc), serde_json::to_value(doc).expect("documents serialize"))
    }

    fn matrix(m: &RationalMatrix) -> Self {
        Reply::ok(m.to_string(), matrix_json(m))
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run_command<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let status = if e.use_stderr() { 2 } else { 0 };
            return if e.use_stderr() {
                Outcome {
                    status,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Outcome {
                    status,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    match execute(&cli.command) {
        Ok(reply) => {
            let mut stdout = if cli.json {
                serde_json::to_string_pretty(&reply.json).expect("json values serialize")
            } else {
                reply.text
            };
            if !stdout.ends_with('\n') {
                stdout.push('\n');
            }
            Outcome {
                status: reply.status,
                stdout,
                stderr: String::new(),
            }
        }
        Err(e) => {
            let stderr = if cli.json {
                format!("{}\n", json!({ "error": e.name(), "message": e.to_string() }))
            } else {
                format!("{}: {e}\n", e.name())
            };
            Outcome {
                status: if e.is_input_error() { 2 } else { 1 },
                stdout: String::new(),
                stderr,
            }
        }
    }
}

fn execute(command: &Command) -> Result<Reply> {
    match command {
        Command::Validate { file } => validate(file),
        Command::Invert { matrix } => {
            let (kind, m) = read_matrix(matrix)?;
            let inverse = m.invert().map_err(|e| match (kind, e) {
                (Some(DocumentKind::Mesh), Error::SingularError { dimension, rank }) => {
                    Error::SingularMesh { dimension, rank }
                }
                (_, e) => e,
            })?;
            Ok(Reply::matrix(&inverse))
        }
        Command::Equiv { a, b } => {
            let (a, b) = (load(a)?, load(b)?);
            let same = node_equivalent(&a, &b);
            let text = if same {
                "equivalent (same node set)"
            } else {
                "not equivalent"
            };
            Ok(Reply::ok(text, json!({ "equivalent": same })))
        }
        Command::Compose { inputs } => {
            let mut merged: Option<Adjacency> = None;
            for path in inputs {
                let next = match load(path)? {
                    Loaded::Tree(t) => t.to_adjacency(),
                    Loaded::Mesh(m) => m.adjacency().clone(),
                    other => return Err(wrong_kind(path, &other, "a tree or mesh")),
                };
                merged = Some(match merged {
                    None => next,
                    Some(acc) => merge(&acc, &next)?,
                });
            }
            let mesh = MeshOntology::new(merged.expect("clap requires one input"))?;
            Ok(Reply::document(&OntologyDocument::from_mesh(&mesh)))
        }
        Command::Decompose {
            mesh,
            remove,
            enumerate,
        } => {
            let mesh = load_mesh(mesh)?;
            if let Some(limit) = enumerate {
                let trees = enumerate_spanning_trees(&mesh, Some(*limit));
                let entries = trees
                    .into_iter()
                    .enumerate()
                    .map(|(i, t)| (format!("T{}", i + 1), t))
                    .collect();
                let corpus = ExpertCorpus::new(mesh.node_ids(), entries)?;
                return Ok(Reply::document(&OntologyDocument::from_corpus(&corpus)));
            }
            let links = remove.iter().map(|s| parse_link(s)).collect::<Result<Vec<_>>>()?;
            let instance = extract_spanning_tree(&mesh, &links)?;
            Ok(Reply::document(&OntologyDocument::from_tree(instance.tree(), true)))
        }
        Command::Operator { mesh, tree } => {
            let mesh = load_mesh(mesh)?;
            let instance = load_instance(tree, Some(&mesh))?;
            Ok(Reply::matrix(&decomposition_operator(&mesh, &instance)?.matrix))
        }
        Command::Reconstruct { operator, tree } => {
            let (_, matrix) = read_matrix(operator)?;
            let instance = load_instance(tree, None)?;
            let operator = DecompositionOperator { matrix, label: None };
            Ok(Reply::matrix(&reconstruct(&operator, &instance)?))
        }
        Command::Ingest { corpus } => {
            let corpus = match load(corpus)? {
                Loaded::Corpus(c) => c,
                other => return Err(wrong_kind(corpus, &other, "a corpus")),
            };
            Ok(Reply::document(&OntologyDocument::from_probability(&accumulate(&corpus)?)))
        }
        Command::Prereq { probability, pairs } => {
            let p = match load(probability)? {
                Loaded::Probability(p) => p,
                other => return Err(wrong_kind(probability, &other, "a probability matrix")),
            };
            let relation = load_relation(pairs)?;
            Ok(Reply::document(&OntologyDocument::from_directed(&apply_prerequisites(&p, &relation)?)))
        }
        Command::Plan {
            matrix,
            start,
            precedence,
            oracle,
        } => {
            let weights = load_weights(matrix)?;
            let options = PlanOptions {
                start: start.as_deref().map(str::parse).transpose()?,
                precedence: precedence.as_deref().map(load_relation).transpose()?,
            };
            plan(&weights, &options, *oracle)
        }
        Command::CountTrees { mesh } => {
            let count = count_spanning_trees(&load_mesh(mesh)?);
            Ok(Reply::ok(count.to_string(), json!({ "spanning_trees": count.to_string() })))
        }
    }
}

fn plan(weights: &DirectedProbabilityMatrix, options: &PlanOptions, oracle: bool) -> Result<Reply> {
    let path = plan_path(weights, options)?;
    let mut text = path_text(&path);
    let mut out = serde_json::to_value(&path).expect("paths serialize");
    if oracle {
        let (check, stats) = brute_force_search(weights, options)?;
        if check != path {
            return Err(Error::InvariantError(format!(
                "exhaustive search disagrees: {}",
                path_text(&check).replace('\n', "; ")
            )));
        }
        text.push_str(&format!("oracle: agrees ({} orders covered)\n", stats.orders_covered));
        out["oracle"] = serde_json::to_value(stats).expect("stats serialize");
    }
    Ok(Reply::ok(text, out))
}

fn path_text(path: &LearningPath) -> String {
    let order: Vec<&str> = path.order.iter().map(NodeId::as_str).collect();
    format!("order: {}\nprobability: {}\n", order.join(" "), path.probability)
}

fn validate(path: &Path) -> Result<Reply> {
    let doc = parse_unchecked(&read(path)?)?;
    let mut problems: Vec<String> = Vec::new();
    let mut detail = Value::Null;
    match doc.kind {
        DocumentKind::Tree => {
            let pairs: Vec<(NodeId, NodeId)> = doc.links.iter().map(|l| (l.from.clone(), l.to.clone())).collect();
            let report = validate_tree(&doc.nodes, &pairs)?;
            detail = serde_json::to_value(&report).expect("reports serialize");
            if !report.is_tree {
                if !report.is_connected {
                    problems.push("links do not connect every node".into());
                }
                if let Some(cycle) = &report.cycle_witness {
                    let walk: Vec<&str> = cycle.iter().map(NodeId::as_str).collect();
                    problems.push(format!("cycle {}", walk.join(" -> ")));
                }
                if problems.is_empty() {
                    problems.push(format!("{} links for {} nodes", report.edge_count, report.node_count));
                }
            }
        }
        DocumentKind::Probability | DocumentKind::Directed => {
            let symmetric = doc.kind == DocumentKind::Probability;
            let kind = if symmetric {
                MatrixKind::Symmetric
            } else {
                MatrixKind::Directed
            };
            let mut sorted = doc.nodes.clone();
            sorted.sort();
            let report = validate_probability_matrix(&sorted, &doc.weight_matrix(symmetric)?, kind);
            detail = serde_json::to_value(&report).expect("reports serialize");
            problems.extend(report.violations.iter().map(ToString::to_string));
        }
        _ => {}
    }
    if problems.is_empty() {
        if let Err(e) = doc.load() {
            problems.push(e.to_string());
        }
    }
    let valid = problems.is_empty();
    let kind = serde_json::to_value(doc.kind).expect("kinds serialize");
    let label = kind.as_str().unwrap_or_default().to_string();
    let text = if valid {
        format!("valid {label}: {} nodes\n", doc.nodes.len())
    } else {
        let mut t = format!("invalid {label}:\n");
        for p in &problems {
            t.push_str(&format!("  {p}\n"));
        }
        t
    };
    Ok(Reply {
        status: if valid { 0 } else { 1 },
        text,
        json: json!({ "valid": valid, "kind": kind, "problems": problems, "report": detail }),
    })
}

fn matrix_json(m: &RationalMatrix) -> Value {
    let rows: Vec<Vec<String>> = m.rows().map(|r| r.iter().map(ToString::to_string).collect()).collect();
    json!({ "matrix": rows })
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::IoError(format!("{}: {e}", path.display())))
}

fn in_file(path: &Path, e: Error) -> Error {
    match e {
        Error::SyntaxError { line, column, message } => Error::SyntaxError {
            line,
            column,
            message: format!("{}: {message}", path.display()),
        },
        Error::SchemaError(m) => Error::SchemaError(format!("{}: {m}", path.display())),
        Error::InvariantError(m) => Error::InvariantError(format!("{}: {m}", path.display())),
        other => other,
    }
}

fn load_text(path: &Path, text: &str) -> Result<Loaded> {
    parse_unchecked(text).and_then(|d| d.load()).map_err(|e| in_file(path, e))
}

fn load(path: &Path) -> Result<Loaded> {
    load_text(path, &read(path)?)
}

fn kind_name(loaded: &Loaded) -> &'static str {
    match loaded {
        Loaded::Tree(_) => "tree",
        Loaded::Mesh(_) => "mesh",
        Loaded::Probability(_) => "probability",
        Loaded::Directed(_) => "directed",
        Loaded::Corpus(_) => "corpus",
        Loaded::Prerequisites(_) => "prerequisites",
    }
}

fn wrong_kind(path: &Path, loaded: &Loaded, wanted: &str) -> Error {
    Error::SchemaError(format!(
        "{}: expected {wanted}, found a {} document",
        path.display(),
        kind_name(loaded)
    ))
}

fn load_mesh(path: &Path) -> Result<MeshOntology> {
    match load(path)? {
        Loaded::Mesh(m) => Ok(m),
        other => Err(wrong_kind(path, &other, "a mesh")),
    }
}

fn load_instance(path: &Path, mesh: Option<&MeshOntology>) -> Result<InstanceOntology> {
    let label = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    let tree = match load(path)? {
        Loaded::Tree(t) => t,
        other => return Err(wrong_kind(path, &other, "a tree")),
    };
    match mesh {
        Some(m) => InstanceOntology::within(m, tree, label),
        None => Ok(InstanceOntology::new(tree, label)),
    }
}

fn load_relation(path: &Path) -> Result<PrerequisiteRelation> {
    match load(path)? {
        Loaded::Prerequisites(r) => Ok(r),
        other => Err(wrong_kind(path, &other, "prerequisites")),
    }
}

fn load_weights(path: &Path) -> Result<DirectedProbabilityMatrix> {
    match load(path)? {
        Loaded::Probability(p) => Ok(p.into()),
        Loaded::Directed(d) => Ok(d),
        other => Err(wrong_kind(path, &other, "a probability matrix")),
    }
}

/// A document when the text is TOML with a `kind` key, matrix text
/// otherwise.
fn read_matrix(path: &Path) -> Result<(Option<DocumentKind>, RationalMatrix)> {
    let text = read(path)?;
    let is_document = text.parse::<toml::Table>().is_ok_and(|t| t.contains_key("kind"));
    if !is_document {
        return RationalMatrix::parse(&text).map(|m| (None, m)).map_err(|e| in_file(path, e));
    }
    let loaded = load_text(path, &text)?;
    let matrix = match &loaded {
        Loaded::Tree(t) => t.to_adjacency().to_rational(),
        Loaded::Mesh(m) => m.adjacency().to_rational(),
        Loaded::Probability(p) => p.weights().clone(),
        Loaded::Directed(d) => d.weights().clone(),
        other => return Err(wrong_kind(path, other, "a matrix")),
    };
    let kind = match loaded {
        Loaded::Tree(_) => DocumentKind::Tree,
        Loaded::Mesh(_) => DocumentKind::Mesh,
        Loaded::Probability(_) => DocumentKind::Probability,
        _ => DocumentKind::Directed,
    };
    Ok((Some(kind), matrix))
}

fn parse_link(text: &str) -> Result<Link> {
    let (a, b) = text
        .trim()
        .split_once('-')
        .ok_or_else(|| Error::SchemaError(format!("link {text:?} is not of the form a-b")))?;
    Ok(Link::new(a.trim().parse()?, b.trim().parse()?))
}

impl Ontology for Loaded {
    fn node_ids(&self) -> &[NodeId] {
        match self {
            Loaded::Tree(t) => t.node_ids(),
            Loaded::Mesh(m) => m.node_ids(),
            Loaded::Probability(p) => p.node_ids(),
            Loaded::Directed(d) => d.node_ids(),
            Loaded::Corpus(c) => c.node_ids(),
            Loaded::Prerequisites(r) => r.node_ids(),
        }
    }
}
