//! F-factors: exact search and counting, per-block stitching, perfect matchings,
//! and the matching / 0-cycle arrangement relation.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{exp_neg_bracket, multinomial, ser_display, Bracket};
use crate::budget::Budget;
use crate::combinat::{factorial, for_each_subset};
use crate::error::{invalid_query, Error, Result};
use crate::hypergraph::Hypergraph;
use crate::partition::Partition;
use crate::Vertex;

/// The pattern `F` of an F-factor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorSpec {
    pattern: Hypergraph,
}

impl FactorSpec {
    pub fn new(pattern: Hypergraph) -> Result<Self> {
        if pattern.edge_count() == 0 {
            return Err(invalid_query("pattern must have at least one edge"));
        }
        if pattern.n() < pattern.k() {
            return Err(invalid_query("pattern needs t >= k vertices"));
        }
        Ok(FactorSpec { pattern })
    }

    /// A single `k`-edge; F-factors are then perfect matchings.
    pub fn edge(k: usize) -> Result<Self> {
        Self::new(Hypergraph::complete(k, k)?)
    }

    pub fn pattern(&self) -> &Hypergraph {
        &self.pattern
    }

    pub fn t(&self) -> usize {
        self.pattern.n()
    }

    pub fn k(&self) -> usize {
        self.pattern.k()
    }
}

/// Vertex-disjoint copies of `F`; `copies[c][x]` is the image of pattern vertex `x`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorDecomposition {
    pub copies: Vec<Vec<Vertex>>,
}

/// Independent check: copies are disjoint, cover `V(H)` and map every pattern edge to an edge.
pub fn verify_factor(h: &Hypergraph, spec: &FactorSpec, f: &FactorDecomposition) -> bool {
    let mut seen = vec![false; h.n()];
    for copy in &f.copies {
        if copy.len() != spec.t() {
            return false;
        }
        for &v in copy {
            match seen.get_mut(v as usize) {
                Some(s) if !*s => *s = true,
                _ => return false,
            }
        }
        for e in spec.pattern.edges() {
            let image: Vec<Vertex> = e.iter().map(|&x| copy[x as usize]).collect();
            if !h.has_edge(&image) {
                return false;
            }
        }
    }
    seen.iter().all(|&s| s)
}

/// Pattern edges grouped by their largest vertex, for pruning partial injections.
struct Pattern<'a> {
    spec: &'a FactorSpec,
    closing: Vec<Vec<&'a [Vertex]>>,
}

impl<'a> Pattern<'a> {
    fn new(spec: &'a FactorSpec) -> Self {
        let mut closing = vec![Vec::new(); spec.t()];
        for e in spec.pattern.edges() {
            closing[*e.last().expect("edges are nonempty") as usize].push(e.as_slice());
        }
        Pattern { spec, closing }
    }

    /// One injection per distinct edge image of `F` onto the vertex set `set`.
    fn copies_on(&self, h: &Hypergraph, set: &[Vertex]) -> Vec<Vec<Vertex>> {
        let t = self.spec.t();
        let mut found: BTreeMap<Vec<Vec<Vertex>>, Vec<Vertex>> = BTreeMap::new();
        let mut image = Vec::with_capacity(t);
        let mut used = vec![false; t];
        let mut scratch = Vec::new();
        self.extend(h, set, &mut image, &mut used, &mut scratch, &mut found);
        found.into_values().collect()
    }

    fn extend(
        &self,
        h: &Hypergraph,
        set: &[Vertex],
        image: &mut Vec<Vertex>,
        used: &mut [bool],
        scratch: &mut Vec<Vertex>,
        found: &mut BTreeMap<Vec<Vec<Vertex>>, Vec<Vertex>>,
    ) {
        let x = image.len();
        if x == set.len() {
            let mut edges: Vec<Vec<Vertex>> = self
                .spec
                .pattern
                .edges()
                .iter()
                .map(|e| {
                    let mut m: Vec<Vertex> = e.iter().map(|&y| image[y as usize]).collect();
                    m.sort_unstable();
                    m
                })
                .collect();
            edges.sort_unstable();
            found.entry(edges).or_insert_with(|| image.clone());
            return;
        }
        for i in 0..set.len() {
            if used[i] {
                continue;
            }
            image.push(set[i]);
            let ok = self.closing[x].iter().all(|e| {
                scratch.clear();
                scratch.extend(e.iter().map(|&y| image[y as usize]));
                h.has_edge(scratch)
            });
            if ok {
                used[i] = true;
                self.extend(h, set, image, used, scratch, found);
                used[i] = false;
            }
            image.pop();
        }
    }
}

/// Calls `visit` with every F-factor; copies are generated around the smallest
/// uncovered vertex, so each factor is produced exactly once.
struct FactorSearch<'a> {
    h: &'a Hypergraph,
    pattern: Pattern<'a>,
    budget: &'a Budget,
}

impl FactorSearch<'_> {
    /// Copies through the smallest uncovered vertex.
    fn options(&self, covered: &[bool]) -> Vec<Vec<Vertex>> {
        let Some(v) = covered.iter().position(|&c| !c) else {
            return Vec::new();
        };
        let rest: Vec<Vertex> = (v + 1..covered.len())
            .filter(|&u| !covered[u])
            .map(|u| u as Vertex)
            .collect();
        let mut out = Vec::new();
        let mut set = Vec::with_capacity(self.pattern.spec.t());
        for_each_subset(&rest, self.pattern.spec.t() - 1, |others| {
            set.clear();
            set.push(v as Vertex);
            set.extend_from_slice(others);
            out.extend(self.pattern.copies_on(self.h, &set));
            true
        });
        out
    }

    fn count(&self, covered: &mut Vec<bool>) -> Result<BigUint> {
        self.budget.tick()?;
        if covered.iter().all(|&c| c) {
            return Ok(BigUint::one());
        }
        let mut total = BigUint::zero();
        for copy in self.options(covered) {
            copy.iter().for_each(|&v| covered[v as usize] = true);
            let sub = self.count(covered);
            copy.iter().for_each(|&v| covered[v as usize] = false);
            total += sub?;
        }
        Ok(total)
    }

    fn find(&self, covered: &mut Vec<bool>, chosen: &mut Vec<Vec<Vertex>>) -> Result<bool> {
        self.budget.tick()?;
        if covered.iter().all(|&c| c) {
            return Ok(true);
        }
        for copy in self.options(covered) {
            copy.iter().for_each(|&v| covered[v as usize] = true);
            chosen.push(copy);
            if self.find(covered, chosen)? {
                return Ok(true);
            }
            let copy = chosen.pop().expect("pushed above");
            copy.iter().for_each(|&v| covered[v as usize] = false);
        }
        Ok(false)
    }
}

fn check_factor_input(h: &Hypergraph, spec: &FactorSpec) -> Result<()> {
    if h.k() != spec.k() {
        return Err(invalid_query(format!(
            "pattern is {}-uniform but the host is {}-uniform",
            spec.k(),
            h.k()
        )));
    }
    if !h.n().is_multiple_of(spec.t()) {
        return Err(Error::Divisibility {
            what: "F-factor needs |F| | |V(H)|".into(),
            divisor: spec.t(),
            value: h.n(),
        });
    }
    Ok(())
}

pub fn find_f_factor(h: &Hypergraph, spec: &FactorSpec, budget: &Budget) -> Result<Option<FactorDecomposition>> {
    check_factor_input(h, spec)?;
    let search = FactorSearch {
        h,
        pattern: Pattern::new(spec),
        budget,
    };
    let mut covered = vec![false; h.n()];
    let mut chosen = Vec::new();
    Ok(search
        .find(&mut covered, &mut chosen)?
        .then_some(FactorDecomposition { copies: chosen }))
}

/// Number of distinct F-factors, distinct meaning distinct sets of copies, each
/// copy identified by its image edge set.
pub fn count_f_factors(h: &Hypergraph, spec: &FactorSpec, budget: &Budget) -> Result<BigUint> {
    check_factor_input(h, spec)?;
    let search = FactorSearch {
        h,
        pattern: Pattern::new(spec),
        budget,
    };
    if h.n() == 0 {
        return Ok(BigUint::one());
    }
    let covered = vec![false; h.n()];
    search
        .options(&covered)
        .into_par_iter()
        .map(|copy| {
            let mut cov = covered.clone();
            copy.iter().for_each(|&v| cov[v as usize] = true);
            search.count(&mut cov)
        })
        .try_reduce(BigUint::zero, |a, b| Ok(a + b))
}

/// An F-factor of each `H[V_i]`, combined; `None` if some block has none.
pub fn stitch_factor(
    h: &Hypergraph,
    p: &Partition,
    spec: &FactorSpec,
    block_nodes: u64,
) -> Result<Option<FactorDecomposition>> {
    if p.n() != h.n() {
        return Err(invalid_query("partition does not cover the host"));
    }
    if let Some(b) = p.blocks().iter().find(|b| b.len() % spec.t() != 0) {
        return Err(Error::Divisibility {
            what: "every block size must be divisible by |F|".into(),
            divisor: spec.t(),
            value: b.len(),
        });
    }
    let parts = p
        .blocks()
        .par_iter()
        .map(|b| {
            let sub = h.induced(b);
            let budget = Budget::with_context(block_nodes, "per-block F-factor search");
            Ok(find_f_factor(&sub.graph, spec, &budget)?
                .map(|f| f.copies.iter().map(|c| sub.to_global(c)).collect::<Vec<_>>()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut copies = Vec::new();
    for part in parts {
        match part {
            Some(c) => copies.extend(c),
            None => return Ok(None),
        }
    }
    Ok(Some(FactorDecomposition { copies }))
}

pub fn perfect_matching(h: &Hypergraph, budget: &Budget) -> Result<Option<FactorDecomposition>> {
    find_f_factor(h, &FactorSpec::edge(h.k())?, budget)
}

/// `n!/((k!)^{n/k} (n/k)!)`, the number of perfect matchings of `K_n^(k)`.
pub fn complete_matching_count(n: usize, k: usize) -> BigUint {
    if k == 0 || !n.is_multiple_of(k) {
        return BigUint::zero();
    }
    factorial(n) / (factorial(k).pow(n as u32 / k as u32) * factorial(n / k))
}

/// `e^{-n} · n^{-n/t} · n!/(n_1! ⋯ n_r!)` as a bracket.
pub fn factor_lower_bound(n: usize, t: usize, sizes: &[usize], bits: u32) -> Result<Bracket> {
    if t == 0 || !n.is_multiple_of(t) || n == 0 {
        return Err(Error::Divisibility {
            what: "factor bound needs t | n".into(),
            divisor: t,
            value: n,
        });
    }
    let multi = BigUint::from(1u8) * multinomial(n, sizes)?;
    let power = BigUint::from(n).pow((n / t) as u32);
    let factor = BigRational::new(multi.into(), power.into());
    Ok(exp_neg_bracket(n as u64, bits).scale(&factor).round_outward(bits))
}

/// `(n/t)^{n/t}`, a bound on the number of partitions with prescribed sizes
/// that one F-factor is consistent with.
pub fn factor_partition_multiplicity(n: usize, t: usize) -> Result<BigUint> {
    if t == 0 || !n.is_multiple_of(t) {
        return Err(Error::Divisibility {
            what: "needs t | n".into(),
            divisor: t,
            value: n,
        });
    }
    Ok(BigUint::from(n / t).pow((n / t) as u32))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MatchingCycleRelation {
    #[serde(serialize_with = "ser_display")]
    pub matchings: BigUint,
    /// Cyclic sequences of disjoint edges covering `V(H)`, up to rotation and reflection.
    #[serde(serialize_with = "ser_display")]
    pub arrangements: BigUint,
    /// `((n/k) - 1)!/2`.
    #[serde(serialize_with = "ser_display")]
    pub factor: BigUint,
    /// `arrangements == matchings · factor`.
    pub ratio_check: bool,
}

/// Counts perfect matchings and, separately, Hamilton 0-cycle arrangements, and
/// checks that the latter is `((n/k)-1)!/2` times the former.
pub fn matching_zero_cycle_relation(h: &Hypergraph, budget: &Budget) -> Result<MatchingCycleRelation> {
    let (n, k) = (h.n(), h.k());
    if n % k != 0 {
        return Err(Error::Divisibility {
            what: "matching needs k | n".into(),
            divisor: k,
            value: n,
        });
    }
    if n < 3 * k {
        return Err(invalid_query(format!("need n >= 3k, got n = {n}, k = {k}")));
    }
    let q = n / k;
    let matchings = count_f_factors(h, &FactorSpec::edge(k)?, budget)?;
    let arrangements = count_arrangements(h, budget)?;
    let factor = factorial(q - 1) / BigUint::from(2u8);
    let ratio_check = arrangements == &matchings * &factor;
    Ok(MatchingCycleRelation {
        matchings,
        arrangements,
        factor,
        ratio_check,
    })
}

/// Sequences `e_1, …, e_q` of disjoint edges covering `V(H)` with `0 ∈ e_1`
/// (fixing the rotation) and `e_2 < e_q` (fixing the reflection).
fn count_arrangements(h: &Hypergraph, budget: &Budget) -> Result<BigUint> {
    fn rec(h: &Hypergraph, covered: &mut Vec<bool>, seq: &mut Vec<usize>, q: usize, budget: &Budget) -> Result<u64> {
        budget.tick()?;
        if seq.len() == q {
            let edges = h.edges();
            return Ok((edges[seq[1]] < edges[seq[q - 1]]) as u64);
        }
        let mut total = 0;
        for (i, e) in h.edges().iter().enumerate() {
            if e.iter().any(|&v| covered[v as usize]) || (seq.is_empty() && e[0] != 0) {
                continue;
            }
            e.iter().for_each(|&v| covered[v as usize] = true);
            seq.push(i);
            let sub = rec(h, covered, seq, q, budget);
            seq.pop();
            e.iter().for_each(|&v| covered[v as usize] = false);
            total += sub?;
        }
        Ok(total)
    }
    let q = h.n() / h.k();
    Ok(BigUint::from(rec(
        h,
        &mut vec![false; h.n()],
        &mut Vec::new(),
        q,
        budget,
    )?))
}
