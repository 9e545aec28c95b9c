//! Absorbing ℓ-paths and the classification of `(k-ℓ)`-sets by how many short
//! absorbing paths they have.

use num_bigint::BigUint;
use num_rational::Rational64;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::ser_display;
use crate::budget::Budget;
use crate::error::{invalid_query, Result};
use crate::hypergraph::Hypergraph;
use crate::paths::{find_hamilton_ell_path, validate_ell_path, EllPath, EndPair};
use crate::Vertex;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct AbsorberConfig {
    pub beta: Rational64,
    /// Vertex count of the absorbing paths.
    pub t_abs: usize,
}

impl AbsorberConfig {
    pub fn new(beta: Rational64, t_abs: usize, k: usize) -> Result<Self> {
        if beta <= Rational64::from_integer(0) || beta > Rational64::from_integer(1) {
            return Err(invalid_query(format!("beta = {beta} outside (0, 1]")));
        }
        if t_abs < k {
            return Err(invalid_query(format!("t_abs = {t_abs} is below k = {k}")));
        }
        Ok(AbsorberConfig { beta, t_abs })
    }
}

fn check_sets(h: &Hypergraph, ell: usize, avoid: &[Vertex], sets: &[Vec<Vertex>]) -> Result<()> {
    let mut used = vec![false; h.n()];
    for &v in avoid {
        if let Some(u) = used.get_mut(v as usize) {
            *u = true;
        }
    }
    for s in sets {
        if s.len() != h.k() - ell {
            return Err(invalid_query(format!(
                "set {s:?} does not have k-ℓ = {} vertices",
                h.k() - ell
            )));
        }
        for &v in s {
            match used.get_mut(v as usize) {
                None => return Err(invalid_query(format!("vertex {v} is not in the host"))),
                Some(u) if *u => {
                    return Err(invalid_query(format!(
                        "vertex {v} of {s:?} overlaps the path or another set"
                    )))
                }
                Some(u) => *u = true,
            }
        }
    }
    Ok(())
}

/// An ℓ-path with the ends of `path` spanning `V(path) ∪ ⋃ sets`, found by
/// exhaustive search; `path` itself when `sets` is empty.
pub fn can_absorb(h: &Hypergraph, path: &EllPath, sets: &[Vec<Vertex>], budget: &Budget) -> Result<Option<EllPath>> {
    if !validate_ell_path(h, path)? {
        return Err(invalid_query("the absorbing candidate is not an ℓ-path of the host"));
    }
    let ell = path.ell();
    check_sets(h, ell, path.order(), sets)?;
    if sets.is_empty() {
        return Ok(Some(path.clone()));
    }
    absorb_unchecked(h, path.order(), ell, sets, budget)
}

fn absorb_unchecked(
    h: &Hypergraph,
    order: &[Vertex],
    ell: usize,
    sets: &[Vec<Vertex>],
    budget: &Budget,
) -> Result<Option<EllPath>> {
    let (a, b) = (&order[..ell], &order[order.len() - ell..]);
    // overlapping ends cannot be the ends of a longer path
    if a.iter().any(|v| b.contains(v)) {
        return Ok(None);
    }
    let mut span = order.to_vec();
    for s in sets {
        span.extend_from_slice(s);
    }
    let sub = h.induced(&span);
    let local = |t: &[Vertex]| sub.to_local(t).expect("ends lie in the span");
    let ends = EndPair::new(local(a), local(b))?;
    Ok(find_hamilton_ell_path(&sub.graph, ell, &ends, budget)?
        .map(|q| EllPath::new(h.k(), ell, sub.to_global(q.order())).expect("search returns valid orderings")))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SetClassification {
    /// Ordered `t_abs`-vertex ℓ-paths avoiding `S` that can absorb it.
    #[serde(serialize_with = "ser_display")]
    pub count: BigUint,
    /// `β n^{t_abs}`, rounded up.
    #[serde(serialize_with = "ser_display")]
    pub required: BigUint,
    pub good: bool,
}

/// Visits every ordered `len`-vertex ℓ-path of `h` inside `pool`, fixing the
/// first vertex to `first`.
fn for_each_ordered_path(
    h: &Hypergraph,
    ell: usize,
    len: usize,
    first: Vertex,
    pool: &[bool],
    budget: &Budget,
    visit: &mut dyn FnMut(&[Vertex]) -> Result<()>,
) -> Result<()> {
    let k = h.k();
    let s = k - ell;
    #[allow(clippy::too_many_arguments)]
    fn rec(
        h: &Hypergraph,
        k: usize,
        s: usize,
        len: usize,
        order: &mut Vec<Vertex>,
        used: &mut Vec<bool>,
        budget: &Budget,
        visit: &mut dyn FnMut(&[Vertex]) -> Result<()>,
    ) -> Result<()> {
        budget.tick()?;
        let pos = order.len();
        if pos == len {
            return visit(order);
        }
        // position `pos` closes the window starting at `pos + 1 - k` when that start is a stride multiple
        let closes = pos + 1 >= k && (pos + 1 - k).is_multiple_of(s);
        let link = if closes {
            let mut w = order[pos + 1 - k..pos].to_vec();
            w.sort_unstable();
            Some(h.link(&w))
        } else {
            None
        };
        for v in 0..used.len() as Vertex {
            if used[v as usize] || link.as_ref().is_some_and(|l| !l.contains(v)) {
                continue;
            }
            used[v as usize] = true;
            order.push(v);
            let r = rec(h, k, s, len, order, used, budget, visit);
            order.pop();
            used[v as usize] = false;
            r?;
        }
        Ok(())
    }
    let mut used: Vec<bool> = pool.iter().map(|&p| !p).collect();
    used[first as usize] = true;
    let mut order = vec![first];
    rec(h, k, s, len, &mut order, &mut used, budget, visit)
}

/// Counts the absorbing paths for `set` and compares with `β n^{t_abs}`.
pub fn classify_set(
    h: &Hypergraph,
    ell: usize,
    set: &[Vertex],
    cfg: &AbsorberConfig,
    budget: &Budget,
) -> Result<SetClassification> {
    let k = h.k();
    if ell == 0 || ell >= k {
        return Err(invalid_query(format!("need 1 <= ell <= k-1, got k = {k}, ell = {ell}")));
    }
    if cfg.t_abs < k {
        return Err(invalid_query(format!("t_abs = {} is below k = {k}", cfg.t_abs)));
    }
    check_sets(h, ell, &[], &[set.to_vec()])?;
    let n = h.n();
    let numer = BigUint::from(*cfg.beta.numer() as u64) * BigUint::from(n).pow(cfg.t_abs as u32);
    let denom = BigUint::from(*cfg.beta.denom() as u64);
    let required = (&numer + &denom - 1u32) / &denom;

    let s = k - ell;
    let count = if !(cfg.t_abs - ell).is_multiple_of(s) {
        BigUint::zero()
    } else {
        let mut pool = vec![true; n];
        for &v in set {
            pool[v as usize] = false;
        }
        let sets = [set.to_vec()];
        (0..n as Vertex)
            .into_par_iter()
            .filter(|&v| pool[v as usize])
            .map(|first| {
                let mut c = 0u64;
                for_each_ordered_path(h, ell, cfg.t_abs, first, &pool, budget, &mut |order| {
                    if absorb_unchecked(h, order, ell, &sets, budget)?.is_some() {
                        c += 1;
                    }
                    Ok(())
                })?;
                Ok(c)
            })
            .try_reduce(|| 0, |a, b| Ok(a + b))?
            .into()
    };
    let good = &count * &denom >= numer;
    Ok(SetClassification { count, required, good })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinat::subsets;
    use crate::gen_random;
    use num_traits::One;
    use proptest::prelude::*;

    fn b() -> Budget {
        Budget::default()
    }

    #[test]
    fn empty_set_list_is_identity() {
        let h = gen_random(9, 3, 0.9, 2).unwrap();
        let p = (0..9)
            .flat_map(|a| (0..9).map(move |c| vec![a, (a + 1) % 9, c]))
            .map(|o| EllPath::new(3, 2, o))
            .filter_map(|r| r.ok())
            .find(|p| validate_ell_path(&h, p).unwrap())
            .unwrap();
        assert_eq!(can_absorb(&h, &p, &[], &b()).unwrap(), Some(p));
    }

    #[test]
    fn complete_hosts_absorb() {
        for (n, k, ell) in [(10, 3, 1), (10, 3, 2), (11, 4, 2), (12, 4, 1)] {
            let h = Hypergraph::complete(n, k).unwrap();
            let s = k - ell;
            let len = ell + s * (2 * ell).max(k).saturating_sub(ell).div_ceil(s);
            let p = EllPath::new(k, ell, (0..len as Vertex).collect()).unwrap();
            let set: Vec<Vertex> = (len as Vertex..(len + s) as Vertex).collect();
            let q = can_absorb(&h, &p, std::slice::from_ref(&set), &b()).unwrap().unwrap();
            assert!(validate_ell_path(&h, &q).unwrap());
            assert_eq!(q.ends(), p.ends());
            let mut span: Vec<Vertex> = q.order().to_vec();
            span.sort_unstable();
            let mut want: Vec<Vertex> = p.order().iter().chain(&set).copied().collect();
            want.sort_unstable();
            assert_eq!(span, want);
        }
    }

    #[test]
    fn absorb_errors_and_failures() {
        let h = Hypergraph::complete(9, 3).unwrap();
        let p = EllPath::new(3, 1, vec![0, 1, 2, 3, 4]).unwrap();
        assert!(can_absorb(&h, &p, &[vec![4, 5]], &b()).is_err());
        assert!(can_absorb(&h, &p, &[vec![5, 6], vec![6, 7]], &b()).is_err());
        assert!(can_absorb(&h, &p, &[vec![5, 6, 7]], &b()).is_err());
        let e = Hypergraph::empty(9, 3).unwrap();
        assert!(can_absorb(&e, &p, &[vec![5, 6]], &b()).is_err());
        // the path survives but every edge through 5 is gone
        let g = h.without_edges(
            &subsets(&(0..9).collect::<Vec<Vertex>>(), 3)
                .into_iter()
                .filter(|e| e.contains(&5))
                .collect::<Vec<_>>(),
        );
        assert_eq!(can_absorb(&g, &p, &[vec![5, 6]], &b()).unwrap(), None);
    }

    fn brute_count(h: &Hypergraph, ell: usize, set: &[Vertex], t: usize) -> u64 {
        let free: Vec<Vertex> = (0..h.n() as Vertex).filter(|v| !set.contains(v)).collect();
        let mut count = 0;
        for chosen in subsets(&free, t) {
            let mut perm = chosen.clone();
            loop {
                if let Ok(p) = EllPath::new(h.k(), ell, perm.clone()) {
                    if validate_ell_path(h, &p).unwrap()
                        && p.ends().0.iter().all(|v| !p.ends().1.contains(v))
                        && can_absorb(h, &p, &[set.to_vec()], &Budget::default())
                            .unwrap()
                            .is_some()
                    {
                        count += 1;
                    }
                }
                if !next_perm(&mut perm) {
                    break;
                }
            }
        }
        count
    }

    fn next_perm(v: &mut [Vertex]) -> bool {
        let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
            return false;
        };
        let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).unwrap();
        v.swap(i - 1, j);
        v[i..].reverse();
        true
    }

    #[test]
    fn classify_examples() {
        let cfg = AbsorberConfig::new(Rational64::new(1, 1000), 4, 3).unwrap();
        let e = Hypergraph::empty(8, 3).unwrap();
        let c = classify_set(&e, 2, &[0], &cfg, &b()).unwrap();
        assert_eq!(c.count, BigUint::zero());
        assert!(!c.good);
        let k8 = Hypergraph::complete(8, 3).unwrap();
        let c = classify_set(&k8, 2, &[0], &cfg, &b()).unwrap();
        // every ordered 4-tuple of the other 7 vertices
        assert_eq!(c.count, BigUint::from(7u32 * 6 * 5 * 4));
        assert!(c.good);
        let one = AbsorberConfig::new(Rational64::one(), 4, 3).unwrap();
        assert!(!classify_set(&k8, 2, &[0], &one, &b()).unwrap().good);
        assert!(AbsorberConfig::new(Rational64::new(0, 1), 4, 3).is_err());
        assert!(AbsorberConfig::new(Rational64::new(1, 2), 2, 3).is_err());
        assert!(classify_set(&k8, 2, &[0, 1], &cfg, &b()).is_err());
    }

    #[test]
    fn classify_matches_brute_force() {
        for seed in 0..3 {
            let h = gen_random(7, 3, 0.7, seed).unwrap();
            let cfg = AbsorberConfig::new(Rational64::new(1, 100), 5, 3).unwrap();
            let c = classify_set(&h, 1, &[0, 1], &cfg, &b()).unwrap();
            assert_eq!(c.count, BigUint::from(brute_count(&h, 1, &[0, 1], 5)));
            let cfg = AbsorberConfig::new(Rational64::new(1, 100), 4, 3).unwrap();
            let c = classify_set(&h, 2, &[3], &cfg, &b()).unwrap();
            assert_eq!(c.count, BigUint::from(brute_count(&h, 2, &[3], 4)));
        }
    }

    #[test]
    fn classification_is_relabelling_invariant() {
        let h = Hypergraph::complete(8, 3).unwrap();
        let cfg = AbsorberConfig::new(Rational64::new(1, 100), 5, 3).unwrap();
        let base = classify_set(&h, 1, &[2, 5], &cfg, &b()).unwrap();
        // swaps 2 and 5, shuffles the rest
        let perm: Vec<Vertex> = vec![7, 3, 5, 0, 6, 2, 1, 4];
        let g = h.relabel(&perm).unwrap();
        assert_eq!(classify_set(&g, 1, &[5, 2], &cfg, &b()).unwrap(), base);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn absorbing_counts_grow_with_edges(seed in 0u64..1000) {
            let all: Vec<Vertex> = (0..7).collect();
            let mut h = gen_random(7, 3, 0.4, seed).unwrap();
            let cfg = AbsorberConfig::new(Rational64::new(1, 100), 4, 3).unwrap();
            let mut last = classify_set(&h, 2, &[6], &cfg, &b()).unwrap().count;
            let missing: Vec<Vec<Vertex>> = subsets(&all, 3).into_iter().filter(|e| !h.has_edge(e)).collect();
            for e in missing.into_iter().step_by(3) {
                h = h.with_edges([e]).unwrap();
                let now = classify_set(&h, 2, &[6], &cfg, &b()).unwrap().count;
                prop_assert!(now >= last);
                last = now;
            }
        }
    }
}
