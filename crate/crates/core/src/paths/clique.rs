//! k-uniform cliques, the t-clique graph and powers of tight cycles.

use serde::{Deserialize, Serialize};

use crate::bitset::VertexSet;
use crate::combinat::for_each_subset;
use crate::error::{invalid_query, invalid_structure, Result};
use crate::hypergraph::Hypergraph;
use crate::Vertex;

/// Whether every `k`-subset of `set` is an edge.
pub fn is_clique(h: &Hypergraph, set: &[Vertex]) -> bool {
    for_each_subset(set, h.k(), |e| h.has_edge(e))
}

/// Candidates that keep `clique ∪ {v}` a clique, given candidates for `clique`
/// and the newly added vertex `added`.
fn narrow(h: &Hypergraph, clique: &[Vertex], added: Vertex, cands: &VertexSet) -> VertexSet {
    let k = h.k();
    let grown = clique.len() + 1;
    if grown + 1 < k {
        return cands.clone();
    }
    // every new (k-1)-subset contains `added`
    let mut out = cands.clone();
    let mut with_added = Vec::with_capacity(k - 1);
    for_each_subset(clique, k - 2, |rest| {
        with_added.clear();
        with_added.extend_from_slice(rest);
        with_added.push(added);
        with_added.sort_unstable();
        match h.link_words(&with_added) {
            Some(w) => out = out.intersection_with_words(w),
            None => out = VertexSet::empty(h.n()),
        }
        !out.is_empty()
    });
    out
}

/// Visits the `t`-cliques built from `order` (as sorted-by-position subsets).
/// Returns `true` if `visit` asked to stop.
fn cliques_in_order(h: &Hypergraph, order: &[Vertex], t: usize, visit: &mut dyn FnMut(&[Vertex]) -> bool) -> bool {
    fn rec(
        h: &Hypergraph,
        order: &[Vertex],
        from: usize,
        t: usize,
        clique: &mut Vec<Vertex>,
        cands: &VertexSet,
        visit: &mut dyn FnMut(&[Vertex]) -> bool,
    ) -> bool {
        if clique.len() == t {
            return !visit(clique);
        }
        let need = t - clique.len();
        for i in from..order.len() {
            if order.len() - i < need {
                break;
            }
            let v = order[i];
            if !cands.contains(v) {
                continue;
            }
            let next = narrow(h, clique, v, cands);
            clique.push(v);
            let stop = rec(h, order, i + 1, t, clique, &next, visit);
            clique.pop();
            if stop {
                return true;
            }
        }
        false
    }
    let cands = VertexSet::from_iter_n(h.n(), order.iter().copied());
    rec(h, order, 0, t, &mut Vec::with_capacity(t), &cands, visit)
}

/// `K_t(H)`: the t-graph whose edges are the t-sets spanning k-uniform cliques.
pub fn clique_graph(h: &Hypergraph, t: usize) -> Result<Hypergraph> {
    if t < h.k() {
        return Err(invalid_query(format!("clique size t = {t} is below k = {}", h.k())));
    }
    let order: Vec<Vertex> = (0..h.n() as Vertex).collect();
    let mut edges = Vec::new();
    cliques_in_order(h, &order, t, &mut |c| {
        edges.push(c.to_vec());
        true
    });
    Hypergraph::new(h.n(), t, edges)
}

/// A `t`-vertex clique, vertices chosen greedily in increasing order with
/// backtracking when the greedy choice dead-ends.
pub fn find_clique(h: &Hypergraph, t: usize) -> Result<Option<Vec<Vertex>>> {
    let order: Vec<Vertex> = (0..h.n() as Vertex).collect();
    find_clique_among(h, &order, t)
}

/// As [`find_clique`] restricted to `order`, trying vertices in the given order.
/// The clique is returned in that order.
pub fn find_clique_among(h: &Hypergraph, order: &[Vertex], t: usize) -> Result<Option<Vec<Vertex>>> {
    if t < h.k() {
        return Err(invalid_query(format!("clique size t = {t} is below k = {}", h.k())));
    }
    let mut found = None;
    cliques_in_order(h, order, t, &mut |c| {
        found = Some(c.to_vec());
        false
    });
    Ok(found)
}

/// The `(t-k+1)`th power of a tight cycle, as a cyclic ordering.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerCycle {
    k: usize,
    t: usize,
    order: Vec<Vertex>,
}

impl PowerCycle {
    pub fn new(k: usize, t: usize, order: Vec<Vertex>) -> Result<Self> {
        if t < k || k == 0 {
            return Err(invalid_structure(format!("need t >= k >= 1, got k = {k}, t = {t}")));
        }
        if order.len() < t {
            return Err(invalid_structure(format!(
                "ordering of {} vertices is shorter than the window t = {t}",
                order.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(v) = order.iter().find(|v| !seen.insert(**v)) {
            return Err(invalid_structure(format!("vertex {v} repeats in the ordering")));
        }
        Ok(PowerCycle { k, t, order })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn order(&self) -> &[Vertex] {
        &self.order
    }

    /// The cyclic `t`-windows.
    pub fn windows(&self) -> impl Iterator<Item = Vec<Vertex>> + '_ {
        let n = self.order.len();
        (0..n).map(move |i| (0..self.t).map(|j| self.order[(i + j) % n]).collect())
    }
}

/// Whether every cyclic `t`-window of `cycle` spans a clique of `h`.
pub fn validate_power_cycle(h: &Hypergraph, cycle: &PowerCycle) -> Result<bool> {
    if h.k() != cycle.k {
        return Err(invalid_structure(format!(
            "power cycle is {}-uniform but the host is {}-uniform",
            cycle.k,
            h.k()
        )));
    }
    if let Some(&v) = cycle.order.iter().find(|&&v| v as usize >= h.n()) {
        return Err(invalid_structure(format!("vertex {v} is not in the host")));
    }
    Ok(cycle.windows().all(|w| is_clique(h, &w)))
}
