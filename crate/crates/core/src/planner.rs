//! Maximum-probability learning paths: open Hamiltonian orders scored by the
//! product of step weights, solved exactly by a subset dynamic program and
//! cross-checked by exhaustive search.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::node::NodeId;
use crate::probability::{PrerequisiteRelation, WeightMatrix};
use crate::rational::Rational;

/// Largest instance the subset dynamic program accepts.
pub const PLAN_LIMIT: usize = 16;
/// Largest instance the exhaustive search accepts.
pub const BRUTE_FORCE_LIMIT: usize = 11;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LearningPath {
    pub order: Vec<NodeId>,
    #[serde(serialize_with = "crate::document::serialize_rational")]
    pub probability: Rational,
}

/// Optional constraints shared by [`plan_path`] and [`brute_force_plan`].
#[derive(Clone, Debug, Default)]
pub struct PlanOptions {
    /// Fix the first node; every start is tried when `None`.
    pub start: Option<NodeId>,
    /// Global precedence: for each pair, the first node must appear
    /// somewhere before the second, not merely adjacent to it.
    pub precedence: Option<PrerequisiteRelation>,
}

impl PlanOptions {
    pub fn start(node: NodeId) -> Self {
        PlanOptions {
            start: Some(node),
            precedence: None,
        }
    }

    pub fn precedence(relation: PrerequisiteRelation) -> Self {
        PlanOptions {
            start: None,
            precedence: Some(relation),
        }
    }
}

/// Product of consecutive step weights along `order`.
pub fn path_probability<W: WeightMatrix + ?Sized>(weights: &W, order: &[NodeId]) -> Result<Rational> {
    let indices = order_indices(weights, order)?;
    let mut product = Rational::one();
    for step in indices.windows(2) {
        let w = weights.weight(step[0], step[1]);
        if w.is_zero() {
            return Err(Error::InfeasibleStep(order_node(weights, step[0]), order_node(weights, step[1])));
        }
        product *= w;
    }
    Ok(product)
}

fn order_node<W: WeightMatrix + ?Sized>(weights: &W, i: usize) -> NodeId {
    weights.node_ids()[i].clone()
}

fn order_indices<W: WeightMatrix + ?Sized>(weights: &W, order: &[NodeId]) -> Result<Vec<usize>> {
    let n = weights.node_ids().len();
    if order.len() != n {
        return Err(Error::InvalidOrder(format!("{} nodes given, matrix has {n}", order.len())));
    }
    let mut seen = vec![false; n];
    let mut out = Vec::with_capacity(n);
    for id in order {
        let i = weights.index_of(id)?;
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::InvalidOrder(format!("{id} is visited twice")));
        }
        out.push(i);
    }
    Ok(out)
}

struct Prepared {
    n: usize,
    start: Option<usize>,
    preds: Vec<u64>,
}

fn prepare<W: WeightMatrix + ?Sized>(weights: &W, options: &PlanOptions, limit: usize) -> Result<Prepared> {
    let n = weights.node_ids().len();
    if n < 2 {
        return Err(Error::DomainError(format!("planning needs at least 2 nodes, got {n}")));
    }
    if n > limit {
        return Err(Error::TooLarge { nodes: n, limit });
    }
    let start = options.start.as_ref().map(|s| weights.index_of(s)).transpose()?;
    let preds = match &options.precedence {
        Some(relation) => relation
            .predecessor_masks(weights.node_ids())
            .map_err(|e| match e {
                Error::UnknownNode(id) => Error::NodeMismatch(format!("precedence node {id} is not in the matrix")),
                other => other,
            })?,
        None => vec![0; n],
    };
    Ok(Prepared { n, start, preds })
}

/// Exact optimum by dynamic programming over visited-node subsets.
///
/// `best[mask][v]` is the largest product obtainable by continuing from `v`
/// (the last node placed, with `mask` already placed) through every
/// unplaced node. Reading the table forwards and always taking the
/// smallest node that still attains the optimum yields the
/// lexicographically smallest optimal order.
pub fn plan_path<W: WeightMatrix + ?Sized>(weights: &W, options: &PlanOptions) -> Result<LearningPath> {
    let Prepared { n, start, preds } = prepare(weights, options, PLAN_LIMIT)?;
    let full = (1u64 << n) - 1;
    let slot = |mask: u64, v: usize| mask as usize * n + v;
    let mut best: Vec<Option<Rational>> = vec![None; (1usize << n) * n];
    let closed = |mask: u64| (0..n).all(|v| mask & (1 << v) == 0 || preds[v] & !mask == 0);

    for v in 0..n {
        best[slot(full, v)] = Some(Rational::one());
    }
    for mask in (1..full).rev() {
        if !closed(mask) {
            continue;
        }
        for v in (0..n).filter(|&v| mask & (1 << v) != 0) {
            let mut top: Option<Rational> = None;
            for u in (0..n).filter(|&u| mask & (1 << u) == 0 && preds[u] & !mask == 0) {
                let step = weights.weight(v, u);
                if step.is_zero() {
                    continue;
                }
                if let Some(rest) = &best[slot(mask | 1 << u, u)] {
                    let value = step * rest;
                    if top.as_ref().is_none_or(|t| value > *t) {
                        top = Some(value);
                    }
                }
            }
            best[slot(mask, v)] = top;
        }
    }

    let candidates: Vec<usize> = match start {
        Some(s) => vec![s],
        None => (0..n).collect(),
    };
    let mut optimum: Option<(usize, Rational)> = None;
    for &s in &candidates {
        if preds[s] != 0 {
            continue;
        }
        if let Some(value) = &best[slot(1 << s, s)] {
            if optimum.as_ref().is_none_or(|(_, o)| value > o) {
                optimum = Some((s, value.clone()));
            }
        }
    }
    let (first, probability) = optimum.ok_or(Error::NoFeasiblePath)?;

    let mut order = vec![first];
    let mut mask = 1u64 << first;
    let mut remaining = probability.clone();
    let mut v = first;
    while mask != full {
        let next = (0..n)
            .filter(|&u| mask & (1 << u) == 0 && preds[u] & !mask == 0)
            .find(|&u| {
                let step = weights.weight(v, u);
                !step.is_zero()
                    && best[slot(mask | 1 << u, u)]
                        .as_ref()
                        .is_some_and(|rest| step * rest == remaining)
            })
            .expect("optimal value is attained by some successor");
        remaining = best[slot(mask | 1 << next, next)].clone().expect("checked above");
        mask |= 1 << next;
        order.push(next);
        v = next;
    }

    Ok(LearningPath {
        order: order.into_iter().map(|i| order_node(weights, i)).collect(),
        probability,
    })
}

/// Counters from an exhaustive search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    /// Orders accounted for, including those discarded as a block because
    /// a prefix already had probability zero.
    pub orders_covered: u64,
    /// Whether reversed orders were identified (symmetric weights with no
    /// start or precedence constraint).
    pub reversal_identified: bool,
}

struct Search<'a, W: ?Sized> {
    weights: &'a W,
    n: usize,
    preds: &'a [u64],
    undirected: bool,
    order: Vec<usize>,
    used: Vec<bool>,
    best: Option<(Vec<usize>, Rational)>,
    covered: u64,
}

fn factorial(k: usize) -> u64 {
    (1..=k as u64).product()
}

impl<W: WeightMatrix + ?Sized> Search<'_, W> {
    /// Orders completing the current prefix, under the reversal rule.
    fn completions(&self) -> u64 {
        let rest = self.n - self.order.len();
        let first = self.order[0];
        if rest == 0 {
            return u64::from(!self.undirected || first < self.order[self.n - 1]);
        }
        if !self.undirected {
            return factorial(rest);
        }
        let larger = (0..self.n).filter(|&u| !self.used[u] && u > first).count() as u64;
        larger * factorial(rest - 1)
    }

    fn precedence_ok(&self) -> bool {
        let mut position = vec![0; self.n];
        for (p, &v) in self.order.iter().enumerate() {
            position[v] = p;
        }
        (0..self.n).all(|v| (0..self.n).all(|u| self.preds[v] & (1 << u) == 0 || position[u] < position[v]))
    }

    fn visit(&mut self, product: Rational) {
        if product.is_zero() {
            self.covered += self.completions();
            return;
        }
        if self.order.len() == self.n {
            if self.undirected && self.order[0] > self.order[self.n - 1] {
                return;
            }
            self.covered += 1;
            if !self.precedence_ok() {
                return;
            }
            // orders arrive in lexicographic order, so only a strict
            // improvement replaces the incumbent
            if self.best.as_ref().is_none_or(|(_, b)| product > *b) {
                self.best = Some((self.order.clone(), product));
            }
            return;
        }
        let last = *self.order.last().expect("start placed before visiting");
        for u in 0..self.n {
            if self.used[u] {
                continue;
            }
            let step = self.weights.weight(last, u);
            self.used[u] = true;
            self.order.push(u);
            self.visit(&product * step);
            self.order.pop();
            self.used[u] = false;
        }
    }
}

/// Exhaustive search over every permutation, with the same contract as
/// [`plan_path`]. Reversed orders are identified when the weights are
/// symmetric and neither a start nor a precedence relation is given.
pub fn brute_force_search<W: WeightMatrix + ?Sized>(
    weights: &W,
    options: &PlanOptions,
) -> Result<(LearningPath, SearchStats)> {
    let Prepared { n, start, preds } = prepare(weights, options, BRUTE_FORCE_LIMIT)?;
    let unconstrained = start.is_none() && preds.iter().all(|&p| p == 0);
    let undirected = unconstrained && weights.weights().is_symmetric();
    let mut search = Search {
        weights,
        n,
        preds: &preds,
        undirected,
        order: Vec::with_capacity(n),
        used: vec![false; n],
        best: None,
        covered: 0,
    };
    let starts: Vec<usize> = match start {
        Some(s) => vec![s],
        None => (0..n).collect(),
    };
    for s in starts {
        search.used[s] = true;
        search.order.push(s);
        search.visit(Rational::one());
        search.order.pop();
        search.used[s] = false;
    }
    let stats = SearchStats {
        orders_covered: search.covered,
        reversal_identified: undirected,
    };
    let (order, probability) = search.best.ok_or(Error::NoFeasiblePath)?;
    let path = LearningPath {
        order: order.into_iter().map(|i| order_node(weights, i)).collect(),
        probability,
    };
    Ok((path, stats))
}

pub fn brute_force_plan<W: WeightMatrix + ?Sized>(weights: &W, options: &PlanOptions) -> Result<LearningPath> {
    brute_force_search(weights, options).map(|(path, _)| path)
}
