//! ℓ-paths, ℓ-cycles and powers of tight cycles: validators and exact solvers.
//!
//! An ℓ-path or ℓ-cycle is identified with a vertex ordering whose edges are the
//! `k`-windows starting at multiples of `k - ℓ`; consecutive windows then share
//! exactly `ℓ` vertices. The solvers are exhaustive backtracking searches with an
//! explicit node budget.

mod clique;
mod search;

use std::collections::{BTreeMap, HashSet};

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitset::VertexSet;
use crate::budget::Budget;
use crate::error::{invalid_query, invalid_structure, Error, Result};
use crate::hypergraph::Hypergraph;
use crate::Vertex;

pub use clique::{clique_graph, find_clique, find_clique_among, is_clique, validate_power_cycle, PowerCycle};
pub(crate) use search::{OrderSearch, SearchSpec};

fn check_ell(k: usize, ell: usize) -> Result<()> {
    if ell == 0 || ell >= k {
        return Err(invalid_structure(format!(
            "need 1 <= ell <= k-1, got k = {k}, ell = {ell}"
        )));
    }
    Ok(())
}

fn check_distinct(order: &[Vertex]) -> Result<()> {
    let mut seen = HashSet::with_capacity(order.len());
    for &v in order {
        if !seen.insert(v) {
            return Err(invalid_structure(format!("vertex {v} repeats in the ordering")));
        }
    }
    Ok(())
}

fn sorted(mut e: Vec<Vertex>) -> Vec<Vertex> {
    e.sort_unstable();
    e
}

/// An ℓ-path, identified with its vertex ordering.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EllPath {
    k: usize,
    ell: usize,
    order: Vec<Vertex>,
}

impl EllPath {
    pub fn new(k: usize, ell: usize, order: Vec<Vertex>) -> Result<Self> {
        check_ell(k, ell)?;
        check_distinct(&order)?;
        if order.len() < k {
            return Err(invalid_structure(format!(
                "an ℓ-path needs at least k = {k} vertices, got {}",
                order.len()
            )));
        }
        if !(order.len() - ell).is_multiple_of(k - ell) {
            return Err(invalid_structure(format!(
                "path length {} violates (k-ℓ) | (len-ℓ) for k = {k}, ℓ = {ell}",
                order.len()
            )));
        }
        Ok(EllPath { k, ell, order })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn order(&self) -> &[Vertex] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// The first and last `ℓ` vertices, in path order.
    pub fn ends(&self) -> (&[Vertex], &[Vertex]) {
        (&self.order[..self.ell], &self.order[self.order.len() - self.ell..])
    }

    /// Edge windows, each sorted, in path order.
    pub fn edges(&self) -> Vec<Vec<Vertex>> {
        let s = self.k - self.ell;
        (0..(self.order.len() - self.ell) / s)
            .map(|w| sorted(self.order[w * s..w * s + self.k].to_vec()))
            .collect()
    }

    pub fn reversed(&self) -> EllPath {
        let mut order = self.order.clone();
        order.reverse();
        EllPath { order, ..*self }
    }
}

/// An ℓ-cycle, identified with a cyclic vertex ordering.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EllCycle {
    k: usize,
    ell: usize,
    order: Vec<Vertex>,
}

impl EllCycle {
    /// `ℓ = 0` is allowed here: a 0-cycle is a cyclically ordered matching.
    pub fn new(k: usize, ell: usize, order: Vec<Vertex>) -> Result<Self> {
        if k == 0 || ell >= k {
            return Err(invalid_structure(format!(
                "need 0 <= ell <= k-1, got k = {k}, ell = {ell}"
            )));
        }
        check_distinct(&order)?;
        let s = k - ell;
        if !order.len().is_multiple_of(s) {
            return Err(Error::Divisibility {
                what: "cycle length".into(),
                divisor: s,
                value: order.len(),
            });
        }
        // shorter orderings would make a window meet its predecessor on both sides
        if order.len() < k + s {
            return Err(invalid_structure(format!(
                "an ℓ-cycle needs at least 2k-ℓ = {} vertices, got {}",
                k + s,
                order.len()
            )));
        }
        Ok(EllCycle { k, ell, order })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn order(&self) -> &[Vertex] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Number of edges, `len / (k-ℓ)`.
    pub fn edge_count(&self) -> usize {
        self.order.len() / (self.k - self.ell)
    }

    /// Edge windows, each sorted, in cyclic order starting at position 0.
    pub fn edges(&self) -> Vec<Vec<Vertex>> {
        let s = self.k - self.ell;
        let n = self.order.len();
        (0..n / s)
            .map(|w| sorted((0..self.k).map(|i| self.order[(w * s + i) % n]).collect()))
            .collect()
    }

    /// The edge set in canonical (sorted) form; two cycles are the same
    /// sub-hypergraph exactly when these agree.
    pub fn edge_set(&self) -> Vec<Vec<Vertex>> {
        let mut e = self.edges();
        e.sort_unstable();
        e
    }

    /// Deletes window `window` and reads the cycle as an ℓ-path starting right
    /// after it. The path keeps the longest run of the remaining windows that
    /// fits on distinct vertices: all of them when `ℓ <= k-ℓ`.
    pub fn open_at(&self, window: usize) -> EllPath {
        let s = self.k - self.ell;
        let n = self.order.len();
        let start = (window * s + s) % n;
        let len = self.ell + (n - self.ell) / s * s;
        let order: Vec<Vertex> = (0..len).map(|i| self.order[(start + i) % n]).collect();
        EllPath {
            k: self.k,
            ell: self.ell,
            order,
        }
    }
}

/// Prescribed ends: two vertex-disjoint ordered tuples of distinct vertices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndPair {
    pub a: Vec<Vertex>,
    pub b: Vec<Vertex>,
}

impl EndPair {
    pub fn new(a: Vec<Vertex>, b: Vec<Vertex>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(invalid_query("end tuples must have the same length"));
        }
        let mut all = a.clone();
        all.extend_from_slice(&b);
        check_distinct(&all).map_err(|_| invalid_query("end tuples must be disjoint with distinct entries"))?;
        Ok(EndPair { a, b })
    }

    pub fn ell(&self) -> usize {
        self.a.len()
    }
}

fn check_host(h: &Hypergraph, k: usize, order: &[Vertex]) -> Result<()> {
    if h.k() != k {
        return Err(invalid_structure(format!(
            "structure is {k}-uniform but the host is {}-uniform",
            h.k()
        )));
    }
    if let Some(&v) = order.iter().find(|&&v| v as usize >= h.n()) {
        return Err(invalid_structure(format!("vertex {v} is not in the host")));
    }
    Ok(())
}

/// Whether every window of `path` is an edge of `h`.
pub fn validate_ell_path(h: &Hypergraph, path: &EllPath) -> Result<bool> {
    check_host(h, path.k, &path.order)?;
    Ok(path.edges().iter().all(|e| h.has_edge(e)))
}

/// Whether every cyclic window of `cycle` is an edge of `h`.
pub fn validate_ell_cycle(h: &Hypergraph, cycle: &EllCycle) -> Result<bool> {
    check_host(h, cycle.k, &cycle.order)?;
    Ok(cycle.edges().iter().all(|e| h.has_edge(e)))
}

fn check_ends(h: &Hypergraph, ends: &EndPair) -> Result<()> {
    if let Some(&v) = ends.a.iter().chain(&ends.b).find(|&&v| v as usize >= h.n()) {
        return Err(invalid_query(format!("end vertex {v} is not in the host")));
    }
    Ok(())
}

fn path_search_spec(ell: usize, len: usize, ends: &EndPair, pool: VertexSet) -> SearchSpec {
    let mut forced = vec![None; len];
    for (i, &v) in ends.a.iter().enumerate() {
        forced[i] = Some(v);
    }
    for (i, &v) in ends.b.iter().enumerate() {
        forced[len - ell + i] = Some(v);
    }
    SearchSpec {
        ell,
        len,
        cyclic: false,
        forced,
        pool,
        anchor: None,
    }
}

/// A Hamilton ℓ-path of `h` starting with `ends.a` and finishing with `ends.b`.
pub fn find_hamilton_ell_path(h: &Hypergraph, ell: usize, ends: &EndPair, budget: &Budget) -> Result<Option<EllPath>> {
    let k = h.k();
    check_ell(k, ell).map_err(|e| invalid_query(e.to_string()))?;
    if ends.ell() != ell {
        return Err(invalid_query(format!(
            "end tuples have length {}, expected {ell}",
            ends.ell()
        )));
    }
    check_ends(h, ends)?;
    let n = h.n();
    if n < 2 * ell {
        return Err(invalid_query(format!("host has {n} < 2ℓ vertices")));
    }
    if !(n - ell).is_multiple_of(k - ell) {
        return Err(Error::Divisibility {
            what: "Hamilton ℓ-path needs (k-ℓ) | (n-ℓ)".into(),
            divisor: k - ell,
            value: n - ell,
        });
    }
    if n < k {
        return Ok(None);
    }
    let mut pool = VertexSet::full(n);
    for &v in ends.a.iter().chain(&ends.b) {
        pool.remove(v);
    }
    let search = OrderSearch::new(h, path_search_spec(ell, n, ends, pool), budget);
    let mut found = None;
    search.run(&[], &mut |o: &[Vertex]| {
        found = Some(o.to_vec());
        false
    })?;
    Ok(found.map(|order| EllPath { k, ell, order }))
}

/// Whether every ordered pair of disjoint ℓ-tuples is joined by a Hamilton ℓ-path.
///
/// Each pair gets a fresh search limited to `per_pair_nodes`.
pub fn is_hamilton_path_connected(h: &Hypergraph, ell: usize, per_pair_nodes: u64) -> Result<bool> {
    let n = h.n();
    let k = h.k();
    check_ell(k, ell).map_err(|e| invalid_query(e.to_string()))?;
    if n < 2 * ell {
        return Ok(false);
    }
    if !(n - ell).is_multiple_of(k - ell) {
        return Err(Error::Divisibility {
            what: "Hamilton ℓ-path needs (k-ℓ) | (n-ℓ)".into(),
            divisor: k - ell,
            value: n - ell,
        });
    }
    let tuples = ordered_tuples(n, 2 * ell);
    for t in tuples {
        let ends = EndPair {
            a: t[..ell].to_vec(),
            b: t[ell..].to_vec(),
        };
        let budget = Budget::with_context(per_pair_nodes, "Hamilton path connectivity");
        if find_hamilton_ell_path(h, ell, &ends, &budget)?.is_none() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// All ordered `len`-tuples of distinct vertices from `0..n`.
fn ordered_tuples(n: usize, len: usize) -> Vec<Vec<Vertex>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(len);
    fn rec(n: usize, len: usize, cur: &mut Vec<Vertex>, out: &mut Vec<Vec<Vertex>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for v in 0..n as Vertex {
            if !cur.contains(&v) {
                cur.push(v);
                rec(n, len, cur, out);
                cur.pop();
            }
        }
    }
    rec(n, len, &mut cur, &mut out);
    out
}

/// What [`enumerate_hamilton_ell_cycles`] returns.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnumerationMode {
    Count,
    List,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Enumeration {
    Count(BigUint),
    /// One representative ordering per distinct cycle (the lexicographically
    /// smallest one visited), sorted by ordering.
    List(Vec<EllCycle>),
}

impl Enumeration {
    pub fn count(&self) -> BigUint {
        match self {
            Enumeration::Count(c) => c.clone(),
            Enumeration::List(l) => BigUint::from(l.len()),
        }
    }
}

type CycleMap = BTreeMap<Vec<Vec<Vertex>>, Vec<Vertex>>;

/// Exact enumeration of the distinct Hamilton ℓ-cycles of `h`, distinct meaning
/// distinct edge sets.
///
/// Vertex 0 is pinned to the first stride block (every cycle has such a
/// rotation), and the work is split across threads by ordering prefix.
pub fn enumerate_hamilton_ell_cycles(
    h: &Hypergraph,
    ell: usize,
    mode: EnumerationMode,
    budget: &Budget,
) -> Result<Enumeration> {
    let map = hamilton_cycle_map(h, ell, budget)?;
    Ok(match mode {
        EnumerationMode::Count => Enumeration::Count(BigUint::from(map.len())),
        EnumerationMode::List => {
            let mut list: Vec<EllCycle> = map
                .into_values()
                .map(|order| EllCycle { k: h.k(), ell, order })
                .collect();
            list.sort_by(|a, b| a.order.cmp(&b.order));
            Enumeration::List(list)
        }
    })
}

fn hamilton_cycle_map(h: &Hypergraph, ell: usize, budget: &Budget) -> Result<CycleMap> {
    let n = h.n();
    let k = h.k();
    if ell >= k {
        return Err(invalid_query(format!("need ell <= k-1, got k = {k}, ell = {ell}")));
    }
    let s = k - ell;
    if !n.is_multiple_of(s) {
        return Err(Error::Divisibility {
            what: "Hamilton ℓ-cycle needs (k-ℓ) | n".into(),
            divisor: s,
            value: n,
        });
    }
    if n < k + s {
        return Ok(CycleMap::new());
    }
    let spec = SearchSpec {
        ell,
        len: n,
        cyclic: true,
        forced: vec![None; n],
        pool: VertexSet::full(n),
        anchor: Some((0, s)),
    };
    let search = OrderSearch::new(h, spec, budget);
    let prefixes = search.prefixes(2.min(n))?;
    let parts: Vec<Result<CycleMap>> = prefixes
        .par_iter()
        .map(|prefix| {
            let mut local = CycleMap::new();
            search.run(prefix, &mut |o: &[Vertex]| {
                let cycle = EllCycle {
                    k,
                    ell,
                    order: o.to_vec(),
                };
                let key = cycle.edge_set();
                match local.get_mut(&key) {
                    Some(best) if *best <= cycle.order => {}
                    Some(best) => *best = cycle.order,
                    None => {
                        local.insert(key, cycle.order);
                    }
                }
                true
            })?;
            Ok(local)
        })
        .collect();
    let mut merged = CycleMap::new();
    for part in parts {
        for (key, order) in part? {
            match merged.get_mut(&key) {
                Some(best) if *best <= order => {}
                Some(best) => *best = order,
                None => {
                    merged.insert(key, order);
                }
            }
        }
    }
    Ok(merged)
}

/// Default vertex cap for [`find_short_connector`]: `8k^5`.
pub const fn default_connector_vertices(k: usize) -> usize {
    8 * k * k * k * k * k
}

/// A shortest ℓ-path with ends `ends` on at most `max_vertices` vertices.
///
/// Lengths are tried in increasing order, so the first hit is minimum-length.
pub fn find_short_connector(
    h: &Hypergraph,
    ell: usize,
    ends: &EndPair,
    max_vertices: usize,
    budget: &Budget,
) -> Result<Option<EllPath>> {
    let k = h.k();
    check_ell(k, ell).map_err(|e| invalid_query(e.to_string()))?;
    if ends.ell() != ell {
        return Err(invalid_query(format!(
            "end tuples have length {}, expected {ell}",
            ends.ell()
        )));
    }
    if max_vertices < 2 * ell {
        return Err(invalid_query(format!("max_vertices = {max_vertices} is below 2ℓ")));
    }
    check_ends(h, ends)?;
    let s = k - ell;
    let mut pool = VertexSet::full(h.n());
    for &v in ends.a.iter().chain(&ends.b) {
        pool.remove(v);
    }
    let mut len = (2 * ell).max(k);
    while !(len - ell).is_multiple_of(s) {
        len += 1;
    }
    while len <= max_vertices.min(h.n()) {
        let search = OrderSearch::new(h, path_search_spec(ell, len, ends, pool.clone()), budget);
        let mut found = None;
        search.run(&[], &mut |o: &[Vertex]| {
            found = Some(o.to_vec());
            false
        })?;
        if let Some(order) = found {
            return Ok(Some(EllPath { k, ell, order }));
        }
        len += s;
    }
    Ok(None)
}
