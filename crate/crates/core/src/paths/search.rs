//! Backtracking over vertex orderings whose stride-`(k-ℓ)` windows must be edges.
//!
//! Paths and cycles share one engine. Positions are filled left to right; when a
//! position closes a window, its candidates are the link of the window's first
//! `k-1` vertices intersected with the unused pool, so dead extensions are never
//! entered. Vertices that sit in exactly one window are interchangeable, so runs
//! of such positions are forced to be increasing.

use crate::bitset::VertexSet;
use crate::budget::Budget;
use crate::error::Result;
use crate::hypergraph::Hypergraph;
use crate::Vertex;

pub(crate) struct OrderSearch<'a> {
    h: &'a Hypergraph,
    k: usize,
    len: usize,
    cyclic: bool,
    forced: Vec<Option<Vertex>>,
    /// `Some(start)` when the window `[start, start + k)` closes at this position.
    closes: Vec<Option<usize>>,
    /// Position must hold a larger vertex than the previous one.
    ascending: Vec<bool>,
    /// Wrap-around windows, checked once the ordering is complete.
    wrapping: Vec<usize>,
    /// `(v, bound)`: `v` must be placed before position `bound`.
    anchor: Option<(Vertex, usize)>,
    pool: VertexSet,
    budget: &'a Budget,
}

pub(crate) struct SearchSpec {
    pub ell: usize,
    pub len: usize,
    pub cyclic: bool,
    pub forced: Vec<Option<Vertex>>,
    pub pool: VertexSet,
    pub anchor: Option<(Vertex, usize)>,
}

impl<'a> OrderSearch<'a> {
    pub fn new(h: &'a Hypergraph, spec: SearchSpec, budget: &'a Budget) -> Self {
        let k = h.k();
        let s = k - spec.ell;
        let len = spec.len;
        let windows = if spec.cyclic {
            len / s
        } else {
            (len.saturating_sub(spec.ell)) / s
        };
        let mut closes = vec![None; len];
        let mut wrapping = Vec::new();
        let mut cover = vec![0usize; len];
        let mut owner = vec![usize::MAX; len];
        for w in 0..windows {
            let start = w * s;
            if start + k <= len {
                closes[start + k - 1] = Some(start);
            } else {
                wrapping.push(start);
            }
            for p in start..start + k {
                cover[p % len] += 1;
                owner[p % len] = w;
            }
        }
        let mut ascending = vec![false; len];
        for p in 1..len {
            ascending[p] = cover[p] == 1
                && cover[p - 1] == 1
                && owner[p] == owner[p - 1]
                && spec.forced[p].is_none()
                && spec.forced[p - 1].is_none();
        }
        OrderSearch {
            h,
            k,
            len,
            cyclic: spec.cyclic,
            forced: spec.forced,
            closes,
            ascending,
            wrapping,
            anchor: spec.anchor,
            pool: spec.pool,
            budget,
        }
    }

    /// Runs the search from `prefix`, calling `visit` on every complete ordering.
    /// `visit` returns `false` to stop. Returns `true` if stopped early.
    pub fn run<F>(&self, prefix: &[Vertex], visit: &mut F) -> Result<bool>
    where
        F: FnMut(&[Vertex]) -> bool,
    {
        let mut order = Vec::with_capacity(self.len);
        let mut avail = self.pool.clone();
        for &v in prefix {
            avail.remove(v);
            order.push(v);
        }
        let mut scratch = Vec::with_capacity(self.k);
        self.dfs(&mut order, &mut avail, &mut scratch, visit, self.len)
    }

    /// All admissible prefixes of length `depth`, in search order.
    pub fn prefixes(&self, depth: usize) -> Result<Vec<Vec<Vertex>>> {
        let depth = depth.min(self.len);
        let mut out = Vec::new();
        let mut order = Vec::with_capacity(self.len);
        let mut avail = self.pool.clone();
        let mut scratch = Vec::with_capacity(self.k);
        self.dfs(
            &mut order,
            &mut avail,
            &mut scratch,
            &mut |p: &[Vertex]| {
                out.push(p.to_vec());
                true
            },
            depth,
        )?;
        Ok(out)
    }

    fn dfs<F>(
        &self,
        order: &mut Vec<Vertex>,
        avail: &mut VertexSet,
        scratch: &mut Vec<Vertex>,
        visit: &mut F,
        stop: usize,
    ) -> Result<bool>
    where
        F: FnMut(&[Vertex]) -> bool,
    {
        let pos = order.len();
        if let Some((v, bound)) = self.anchor {
            if pos == bound && !order.contains(&v) {
                return Ok(false);
            }
        }
        if pos == stop {
            if stop == self.len && !self.closes_wrapping(order, scratch) {
                return Ok(false);
            }
            return Ok(!visit(order));
        }
        self.budget.tick()?;

        let link = match self.closes[pos] {
            Some(start) => {
                scratch.clear();
                scratch.extend_from_slice(&order[start..pos]);
                scratch.sort_unstable();
                match self.h.link_words(scratch) {
                    Some(w) => Some(w),
                    None => return Ok(false),
                }
            }
            None => None,
        };

        if let Some(v) = self.forced[pos] {
            let ok = link.is_none_or(|w| w[v as usize >> 6] & (1 << (v & 63)) != 0);
            if ok {
                order.push(v);
                let stopped = self.dfs(order, avail, scratch, visit, stop)?;
                order.pop();
                return Ok(stopped);
            }
            return Ok(false);
        }

        let cands = match link {
            Some(w) => avail.intersection_with_words(w),
            None => avail.clone(),
        };
        let floor = if self.ascending[pos] {
            Some(order[pos - 1])
        } else {
            None
        };
        for v in cands.iter() {
            if floor.is_some_and(|f| v <= f) {
                continue;
            }
            avail.remove(v);
            order.push(v);
            let stopped = self.dfs(order, avail, scratch, visit, stop)?;
            order.pop();
            avail.insert(v);
            if stopped {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn closes_wrapping(&self, order: &[Vertex], scratch: &mut Vec<Vertex>) -> bool {
        if !self.cyclic {
            return true;
        }
        self.wrapping.iter().all(|&start| {
            scratch.clear();
            scratch.extend((start..start + self.k).map(|p| order[p % self.len]));
            self.h.has_edge(scratch)
        })
    }
}
