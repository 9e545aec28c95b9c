//! The k-uniform hypergraph substrate: storage, degree queries, generators and
//! the text / JSON edge-list formats.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bitset::{and_count, iter_words, words_for, VertexSet};
use crate::combinat::{binomial_u128, for_each_subset};
use crate::error::{invalid_query, Error, Result};
use crate::Vertex;

/// Above this many `(k-1)`-subsets the codegree index switches to a hash map
/// holding only the non-empty neighbourhoods.
const DENSE_INDEX_MAX_WORDS: u128 = 1 << 25;

#[derive(Clone, Debug)]
enum CodegreeIndex {
    /// One neighbourhood bitset per `(k-1)`-subset, addressed by colex rank.
    Dense {
        binom: Vec<u64>,
        data: Vec<u64>,
    },
    Sparse {
        map: HashMap<Vec<Vertex>, Vec<u64>>,
    },
}

/// An `n`-vertex `k`-uniform hypergraph on the vertex set `0..n`.
///
/// Immutable after construction. Edges are kept sorted (each edge ascending,
/// the edge list lexicographic) and every `(k-1)`-set carries a bitset of the
/// vertices completing it to an edge, so codegree queries are word-parallel.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(into = "EdgeListData", try_from = "EdgeListData")]
pub struct Hypergraph {
    n: usize,
    k: usize,
    edges: Vec<Vec<Vertex>>,
    words: usize,
    index: CodegreeIndex,
}

/// Serialized form shared by the JSON export and the text format.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct EdgeListData {
    pub n: usize,
    pub k: usize,
    pub edges: Vec<Vec<Vertex>>,
}

impl From<Hypergraph> for EdgeListData {
    fn from(h: Hypergraph) -> Self {
        EdgeListData {
            n: h.n,
            k: h.k,
            edges: h.edges,
        }
    }
}

impl TryFrom<EdgeListData> for Hypergraph {
    type Error = Error;

    fn try_from(d: EdgeListData) -> Result<Self> {
        Hypergraph::new(d.n, d.k, d.edges)
    }
}

impl PartialEq for Hypergraph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.k == other.k && self.edges == other.edges
    }
}

impl Eq for Hypergraph {}

impl Hypergraph {
    /// Builds a hypergraph from arbitrary-order edges. Duplicate edges collapse.
    pub fn new<I>(n: usize, k: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = Vec<Vertex>>,
    {
        if k == 0 {
            return Err(invalid_query("uniformity k must be at least 1"));
        }
        if n > Vertex::MAX as usize {
            return Err(invalid_query(format!("{n} vertices is too many")));
        }
        let mut list = Vec::new();
        for mut e in edges {
            e.sort_unstable();
            if e.len() != k {
                return Err(invalid_query(format!(
                    "edge {e:?} has {} vertices, expected {k}",
                    e.len()
                )));
            }
            if e.windows(2).any(|w| w[0] == w[1]) {
                return Err(invalid_query(format!("edge {e:?} repeats a vertex")));
            }
            if e.iter().any(|&v| v as usize >= n) {
                return Err(invalid_query(format!("edge {e:?} has a vertex >= {n}")));
            }
            list.push(e);
        }
        list.sort_unstable();
        list.dedup();
        Ok(Self::from_sorted(n, k, list))
    }

    fn from_sorted(n: usize, k: usize, edges: Vec<Vec<Vertex>>) -> Self {
        let words = words_for(n);
        let keys = binomial_u128(n, k - 1);
        let index = if keys.saturating_mul(words as u128) <= DENSE_INDEX_MAX_WORDS {
            let mut binom = vec![0u64; (n + 1) * k];
            for m in 0..=n {
                for r in 0..k {
                    binom[m * k + r] = binomial_u128(m, r) as u64;
                }
            }
            let mut data = vec![0u64; keys as usize * words];
            for e in &edges {
                for skip in 0..k {
                    let rank = colex_rank(
                        &binom,
                        k,
                        e.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &v)| v),
                    );
                    let v = e[skip];
                    data[rank * words + (v as usize >> 6)] |= 1 << (v & 63);
                }
            }
            CodegreeIndex::Dense { binom, data }
        } else {
            let mut map: HashMap<Vec<Vertex>, Vec<u64>> = HashMap::new();
            for e in &edges {
                for skip in 0..k {
                    let key: Vec<Vertex> = e
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != skip)
                        .map(|(_, &v)| v)
                        .collect();
                    let v = e[skip];
                    map.entry(key).or_insert_with(|| vec![0; words])[v as usize >> 6] |= 1 << (v & 63);
                }
            }
            CodegreeIndex::Sparse { map }
        };
        Hypergraph {
            n,
            k,
            edges,
            words,
            index,
        }
    }

    /// The complete k-graph `K_n^(k)`.
    pub fn complete(n: usize, k: usize) -> Result<Self> {
        let all: Vec<Vertex> = (0..n as Vertex).collect();
        let mut edges = Vec::new();
        for_each_subset(&all, k, |s| {
            edges.push(s.to_vec());
            true
        });
        Self::new(n, k, edges)
    }

    pub fn empty(n: usize, k: usize) -> Result<Self> {
        Self::new(n, k, Vec::new())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn edges(&self) -> &[Vec<Vertex>] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Neighbourhood words of a sorted `(k-1)`-set: the vertices `v` with `set ∪ {v}` an edge.
    pub(crate) fn link_words(&self, sorted: &[Vertex]) -> Option<&[u64]> {
        debug_assert_eq!(sorted.len(), self.k - 1);
        match &self.index {
            CodegreeIndex::Dense { binom, data } => {
                if sorted.iter().any(|&v| v as usize >= self.n) {
                    return None;
                }
                let rank = colex_rank(binom, self.k, sorted.iter().copied());
                Some(&data[rank * self.words..(rank + 1) * self.words])
            }
            CodegreeIndex::Sparse { map } => map.get(sorted).map(|w| w.as_slice()),
        }
    }

    /// Vertices completing a `(k-1)`-set (any order) to an edge.
    pub fn link(&self, set: &[Vertex]) -> VertexSet {
        let mut sorted = set.to_vec();
        sorted.sort_unstable();
        let mut out = VertexSet::empty(self.n);
        if sorted.len() + 1 == self.k {
            if let Some(w) = self.link_words(&sorted) {
                for v in iter_words(w) {
                    out.insert(v);
                }
            }
        }
        out
    }

    /// Whether the given vertices (any order) form an edge.
    pub fn has_edge(&self, vertices: &[Vertex]) -> bool {
        if vertices.len() != self.k {
            return false;
        }
        let mut sorted = vertices.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return false;
        }
        let last = sorted.pop().unwrap();
        self.link_words(&sorted)
            .is_some_and(|w| w.get(last as usize >> 6).is_some_and(|x| x & (1 << (last & 63)) != 0))
    }

    /// Number of edges containing the `(k-1)`-set `set` whose last vertex lies in `target`.
    ///
    /// `set` may meet `target`; its own vertices are never counted. This is the
    /// `d(U, S)` used by the partition events, where `U` ranges over sets that
    /// overlap the block being measured.
    pub fn codegree_into(&self, set: &[Vertex], target: &VertexSet) -> usize {
        let mut sorted = set.to_vec();
        sorted.sort_unstable();
        self.codegree_into_sorted(&sorted, target)
    }

    pub(crate) fn codegree_into_sorted(&self, sorted: &[Vertex], target: &VertexSet) -> usize {
        self.link_words(sorted).map_or(0, |w| and_count(w, target.words()))
    }

    /// `d(U, S)`: edges containing `U` whose remaining vertices all lie in `S`.
    pub fn degree(&self, u: &[Vertex], s: &[Vertex]) -> Result<usize> {
        if u.len() >= self.k {
            return Err(invalid_query(format!(
                "|U| = {} must be at most k-1 = {}",
                u.len(),
                self.k - 1
            )));
        }
        let uset = self.checked_set(u, "U")?;
        let sset = self.checked_set(s, "S")?;
        if u.iter().any(|&v| sset.contains(v)) {
            return Err(invalid_query("U and S must be disjoint"));
        }
        if u.len() + 1 == self.k {
            return Ok(self.codegree_into(u, &sset));
        }
        Ok(self
            .edges
            .iter()
            .filter(|e| {
                u.iter().all(|v| e.binary_search(v).is_ok()) && e.iter().all(|&v| uset.contains(v) || sset.contains(v))
            })
            .count())
    }

    fn checked_set(&self, vs: &[Vertex], name: &str) -> Result<VertexSet> {
        let mut set = VertexSet::empty(self.n);
        for &v in vs {
            if v as usize >= self.n {
                return Err(invalid_query(format!("{name} contains vertex {v} >= n = {}", self.n)));
            }
            if set.contains(v) {
                return Err(invalid_query(format!("{name} repeats vertex {v}")));
            }
            set.insert(v);
        }
        Ok(set)
    }

    /// Minimum `d`-degree `δ_d(H)`; for `d = k-1` the minimum codegree.
    pub fn min_d_degree(&self, d: usize) -> Result<u64> {
        if d == 0 || d >= self.k {
            return Err(invalid_query(format!(
                "d = {d} must satisfy 1 <= d <= k-1 = {}",
                self.k - 1
            )));
        }
        Ok(self.min_d_degree_with_witness(d).0)
    }

    /// Minimum `d`-degree together with a `d`-set attaining it.
    pub fn min_d_degree_with_witness(&self, d: usize) -> (u64, Vec<Vertex>) {
        let all: Vec<Vertex> = (0..self.n as Vertex).collect();
        if self.n < d {
            return (0, Vec::new());
        }
        let mut best: Option<(u64, Vec<Vertex>)> = None;
        if d + 1 == self.k {
            for_each_subset(&all, d, |s| {
                let c = self
                    .link_words(s)
                    .map_or(0, |w| w.iter().map(|x| x.count_ones() as u64).sum());
                if best.as_ref().is_none_or(|(b, _)| c < *b) {
                    best = Some((c, s.to_vec()));
                }
                c != 0
            });
        } else {
            let mut counts: HashMap<Vec<Vertex>, u64> = HashMap::new();
            for e in &self.edges {
                for_each_subset(e, d, |s| {
                    *counts.entry(s.to_vec()).or_default() += 1;
                    true
                });
            }
            for_each_subset(&all, d, |s| {
                let c = counts.get(s).copied().unwrap_or(0);
                if best.as_ref().is_none_or(|(b, _)| c < *b) {
                    best = Some((c, s.to_vec()));
                }
                c != 0
            });
        }
        best.unwrap_or((0, Vec::new()))
    }

    /// Minimum codegree `δ(H)`.
    pub fn min_codegree(&self) -> u64 {
        if self.k == 1 {
            return self.edges.len() as u64;
        }
        self.min_d_degree_with_witness(self.k - 1).0
    }

    /// `H[S]`, relabelled onto `0..|S|` with the map back to global labels retained.
    pub fn induced(&self, s: &[Vertex]) -> Induced {
        let mut labels: Vec<Vertex> = s.iter().copied().filter(|&v| (v as usize) < self.n).collect();
        labels.sort_unstable();
        labels.dedup();
        let mut local = vec![Vertex::MAX; self.n];
        for (i, &v) in labels.iter().enumerate() {
            local[v as usize] = i as Vertex;
        }
        let edges: Vec<Vec<Vertex>> = self
            .edges
            .iter()
            .filter(|e| e.iter().all(|&v| local[v as usize] != Vertex::MAX))
            .map(|e| e.iter().map(|&v| local[v as usize]).collect())
            .collect();
        // relabelling is monotone, so the filtered list stays sorted
        let graph = Hypergraph::from_sorted(labels.len(), self.k, edges);
        Induced { graph, labels }
    }

    /// A copy with extra edges.
    pub fn with_edges<I: IntoIterator<Item = Vec<Vertex>>>(&self, extra: I) -> Result<Self> {
        Hypergraph::new(self.n, self.k, self.edges.iter().cloned().chain(extra))
    }

    /// A copy without the given edges (given in any vertex order).
    pub fn without_edges(&self, removed: &[Vec<Vertex>]) -> Self {
        let removed: std::collections::HashSet<Vec<Vertex>> = removed
            .iter()
            .map(|e| {
                let mut e = e.clone();
                e.sort_unstable();
                e
            })
            .collect();
        let edges = self.edges.iter().filter(|e| !removed.contains(*e)).cloned().collect();
        Hypergraph::from_sorted(self.n, self.k, edges)
    }

    /// Relabels vertex `v` as `perm[v]`.
    pub fn relabel(&self, perm: &[Vertex]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(invalid_query("permutation length must equal n"));
        }
        Hypergraph::new(
            self.n,
            self.k,
            self.edges.iter().map(|e| e.iter().map(|&v| perm[v as usize]).collect()),
        )
    }

    /// Text edge-list: `n k` on the first line, then one sorted edge per line.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.k);
        for e in &self.edges {
            let mut first = true;
            for v in e {
                if !first {
                    out.push(' ');
                }
                first = false;
                let _ = write!(out, "{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hl, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing `n k` header".into(),
        })?;
        let head: Vec<usize> = parse_numbers(header, hl + 1)?;
        let [n, k] = head[..] else {
            return Err(Error::Parse {
                line: hl + 1,
                msg: "header must be `n k`".into(),
            });
        };
        let mut edges = Vec::new();
        for (i, l) in lines {
            let e: Vec<usize> = parse_numbers(l, i + 1)?;
            edges.push(e.into_iter().map(|v| v as Vertex).collect::<Vec<_>>());
        }
        Hypergraph::new(n, k, edges).map_err(|e| match e {
            Error::InvalidQuery(msg) => Error::Parse { line: 0, msg },
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("edge lists always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            msg: e.to_string(),
        })
    }
}

fn parse_numbers(line: &str, lineno: usize) -> Result<Vec<usize>> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<usize>().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("`{t}` is not a non-negative integer"),
            })
        })
        .collect()
}

fn colex_rank(binom: &[u64], k: usize, sorted: impl Iterator<Item = Vertex>) -> usize {
    sorted
        .enumerate()
        .map(|(i, v)| binom[v as usize * k + i + 1] as usize)
        .sum()
}

/// An induced sub-hypergraph on local labels `0..labels.len()`.
#[derive(Clone, Debug)]
pub struct Induced {
    pub graph: Hypergraph,
    /// `labels[local] = global`.
    pub labels: Vec<Vertex>,
}

impl Induced {
    pub fn to_global(&self, local: &[Vertex]) -> Vec<Vertex> {
        local.iter().map(|&v| self.labels[v as usize]).collect()
    }

    /// Maps global labels to local ones; `None` if some vertex is outside the induced set.
    pub fn to_local(&self, global: &[Vertex]) -> Option<Vec<Vertex>> {
        global
            .iter()
            .map(|v| self.labels.binary_search(v).ok().map(|i| i as Vertex))
            .collect()
    }
}

/// Minimum codegree fraction `δ_{k,ℓ}` above which Hamilton ℓ-cycles are forced.
pub fn dirac_threshold(k: usize, ell: usize) -> Result<Rational64> {
    if k < 2 || ell == 0 || ell >= k {
        return Err(invalid_query(format!(
            "need k >= 2 and 1 <= ell <= k-1, got k = {k}, ell = {ell}"
        )));
    }
    let step = k - ell;
    if k.is_multiple_of(step) {
        Ok(Rational64::new(1, 2))
    } else {
        Ok(Rational64::new(1, (k.div_ceil(step) * step) as i64))
    }
}

/// Binomial random k-graph: each k-subset is an edge independently with probability `p`.
pub fn gen_random(n: usize, k: usize, p: f64, seed: u64) -> Result<Hypergraph> {
    if k < 2 || n < k {
        return Err(invalid_query(format!("need n >= k >= 2, got n = {n}, k = {k}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid_query(format!("edge probability {p} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all: Vec<Vertex> = (0..n as Vertex).collect();
    let mut edges = Vec::new();
    for_each_subset(&all, k, |s| {
        if rng.random_bool(p) {
            edges.push(s.to_vec());
        }
        true
    });
    Ok(Hypergraph::from_sorted(n, k, edges))
}

/// Codegree requirements `δ(H) ≥ (δ + γ) n` of the counting theorems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoodnessSpec {
    pub delta: Rational64,
    pub gamma: Rational64,
}

impl GoodnessSpec {
    pub fn new(delta: Rational64, gamma: Rational64) -> Result<Self> {
        let zero = Rational64::from_integer(0);
        let one = Rational64::from_integer(1);
        if delta < zero || delta > one {
            return Err(invalid_query(format!("delta = {delta} outside [0, 1]")));
        }
        if gamma <= zero || gamma >= one {
            return Err(invalid_query(format!("gamma = {gamma} outside (0, 1)")));
        }
        if delta + gamma > one {
            return Err(invalid_query(format!("delta + gamma = {} exceeds 1", delta + gamma)));
        }
        Ok(GoodnessSpec { delta, gamma })
    }

    /// `δ + γ/2`, the goodness level a random partition is expected to reach.
    pub fn half_slack(&self) -> Rational64 {
        self.delta + self.gamma / 2
    }
}

/// Parses `0.35`, `7/20` or `1` into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational64> {
    let t = text.trim();
    let bad = || invalid_query(format!("`{text}` is not a rational number"));
    if let Some((a, b)) = t.split_once('/') {
        let a: i64 = a.trim().parse().map_err(|_| bad())?;
        let b: i64 = b.trim().parse().map_err(|_| bad())?;
        if b == 0 {
            return Err(bad());
        }
        return Ok(Rational64::new(a, b));
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() || frac.len() > 15 {
        return Err(bad());
    }
    let int: i64 = if int.is_empty() {
        0
    } else {
        int.parse().map_err(|_| bad())?
    };
    let scale = 10i64.pow(frac.len() as u32);
    let fracv: i64 = if frac.is_empty() {
        0
    } else {
        frac.parse().map_err(|_| bad())?
    };
    let r = Rational64::new(int * scale + fracv, scale);
    Ok(if neg { -r } else { r })
}
