use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Label of a knowledge node.
///
/// Ordering is "natural": runs of ASCII digits compare by numeric value and
/// everything else compares lexicographically, so `"2" < "10"` and
/// `"unit2" < "unit10"`. Distinct labels never compare equal; labels whose
/// runs all tie (`"7"` vs `"007"`) fall back to plain string order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        if label.trim().is_empty() {
            return Err(Error::DomainError("node id must be non-empty".into()));
        }
        if label.trim() != label {
            return Err(Error::DomainError(format!(
                "node id {label:?} has surrounding whitespace"
            )));
        }
        Ok(NodeId(label))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// Shorthand used heavily in tests and fixtures; panics on an empty label.
pub fn node(label: impl Into<String>) -> NodeId {
    NodeId::new(label).expect("valid node label")
}

pub fn nodes<I, S>(labels: I) -> Vec<NodeId>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    labels.into_iter().map(node).collect()
}

fn chunks(s: &str) -> impl Iterator<Item = (bool, &str)> {
    let bytes = s.as_bytes();
    let mut start = 0;
    std::iter::from_fn(move || {
        if start >= bytes.len() {
            return None;
        }
        let digit = bytes[start].is_ascii_digit();
        let mut end = start + 1;
        while end < bytes.len() && bytes[end].is_ascii_digit() == digit {
            end += 1;
        }
        let chunk = (digit, &s[start..end]);
        start = end;
        Some(chunk)
    })
}

fn compare_digits(a: &str, b: &str) -> Ordering {
    let a = a.trim_start_matches('0');
    let b = b.trim_start_matches('0');
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

impl Ord for NodeId {
    fn cmp(&self, other: &Self) -> Ordering {
        let mut left = chunks(&self.0);
        let mut right = chunks(&other.0);
        loop {
            match (left.next(), right.next()) {
                (None, None) => return self.0.cmp(&other.0),
                (None, Some(_)) => return Ordering::Less,
                (Some(_), None) => return Ordering::Greater,
                (Some((true, a)), Some((true, b))) => match compare_digits(a, b) {
                    Ordering::Equal => continue,
                    ord => return ord,
                },
                (Some((_, a)), Some((_, b))) => match a.cmp(b) {
                    Ordering::Equal => continue,
                    ord => return ord,
                },
            }
        }
    }
}

impl PartialOrd for NodeId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl std::str::FromStr for NodeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NodeId::new(s)
    }
}

impl Serialize for NodeId {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for NodeId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        NodeId::new(s).map_err(serde::de::Error::custom)
    }
}

/// An undirected link, stored with its endpoints in canonical order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Link(NodeId, NodeId);

impl Link {
    pub fn new(a: NodeId, b: NodeId) -> Self {
        if a <= b {
            Link(a, b)
        } else {
            Link(b, a)
        }
    }

    pub fn low(&self) -> &NodeId {
        &self.0
    }

    pub fn high(&self) -> &NodeId {
        &self.1
    }

    pub fn is_loop(&self) -> bool {
        self.0 == self.1
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.0, self.1)
    }
}

pub fn link(a: impl Into<String>, b: impl Into<String>) -> Link {
    Link::new(node(a), node(b))
}

/// Sorts labels into canonical index order, rejecting duplicates.
pub fn canonical_order(labels: &[NodeId]) -> Result<Vec<NodeId>> {
    let mut sorted = labels.to_vec();
    sorted.sort();
    for pair in sorted.windows(2) {
        if pair[0] == pair[1] {
            return Err(Error::DuplicateNode(pair[0].clone()));
        }
    }
    Ok(sorted)
}
