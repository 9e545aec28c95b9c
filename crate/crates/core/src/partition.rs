//! Balanced size vectors, iterated random bisection with per-level degree events,
//! and the goodness predicates checked on the resulting partitions.

use num_bigint::{BigInt, BigUint};
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Hypergeometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::bitset::VertexSet;
use crate::bounds::{big_rational, Bracket, DEFAULT_PRECISION_BITS};
use crate::combinat::{binomial_big, for_each_subset};
use crate::error::{invalid_query, Error, Result};
use crate::hypergraph::{GoodnessSpec, Hypergraph};
use crate::Vertex;

/// Violations kept verbatim in a [`GoodnessReport`]; the rest are only counted.
pub const VIOLATION_CAP: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeVector {
    pub sizes: Vec<usize>,
    pub m: usize,
    pub divisor: usize,
    pub k: usize,
}

impl SizeVector {
    pub fn n(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn r(&self) -> usize {
        self.sizes.len()
    }

    /// Number of bisection levels `s`, with `r = 2^s`.
    pub fn levels(&self) -> usize {
        self.sizes.len().trailing_zeros() as usize
    }

    /// First violated invariant, if any.
    pub fn violation(&self) -> Option<String> {
        let r = self.sizes.len();
        if r == 0 || !r.is_power_of_two() {
            return Some(format!("block count r = {r} is not a power of two"));
        }
        if let Some(&x) = self.sizes.iter().find(|&&x| x < self.m || x > 5 * self.m) {
            return Some(format!("block size {x} outside [m, 5m] = [{}, {}]", self.m, 5 * self.m));
        }
        if self.divisor == 0 {
            return Some("divisor must be positive".into());
        }
        if let Some(&x) = self.sizes.iter().find(|&&x| x % self.divisor != 0) {
            return Some(format!("block size {x} is not divisible by {}", self.divisor));
        }
        let lo = self.sizes.iter().min().copied().unwrap_or(0);
        let hi = self.sizes.iter().max().copied().unwrap_or(0);
        if hi - lo > 2 * self.k {
            return Some(format!(
                "block sizes {lo} and {hi} differ by more than 2k = {}",
                2 * self.k
            ));
        }
        None
    }

    /// `m_{i,j}`: total size of the `2^{s-i}` leaves under node `j` (0-based) at level `i`.
    pub fn node_size(&self, level: usize, j: usize) -> usize {
        let span = 1usize << (self.levels() - level);
        self.sizes[j * span..(j + 1) * span].iter().sum()
    }
}

/// Sizes `n_1, …, n_r` with `r = 2^s`, `2m ≤ n/r < 4m`, each a multiple of
/// `divisor`, lying in `[m, 5m]` and pairwise within `2k`.
pub fn size_vector(n: usize, m: usize, divisor: usize, k: usize) -> Result<SizeVector> {
    if m == 0 || divisor == 0 || k == 0 {
        return Err(invalid_query("m, divisor and k must be positive"));
    }
    if !n.is_multiple_of(divisor) {
        return Err(Error::Divisibility {
            what: "size vector needs divisor | n".into(),
            divisor,
            value: n,
        });
    }
    if n < 2 * m {
        return Err(Error::Construction(format!(
            "no s with 2m <= n/2^s < 4m: n = {n} is below 2m = {}",
            2 * m
        )));
    }
    let mut r = 1usize;
    while n >= 4 * m * r {
        r *= 2;
    }
    let units = n / divisor;
    let (base, extra) = (units / r, units % r);
    // spread the `extra` larger blocks evenly around the cycle
    let sizes = (0..r)
        .map(|i| {
            let bump = (i + 1) * extra / r - i * extra / r;
            (base + bump) * divisor
        })
        .collect();
    let sv = SizeVector { sizes, m, divisor, k };
    match sv.violation() {
        Some(v) => Err(Error::Construction(v)),
        None => Ok(sv),
    }
}

/// The `-1/4` exponent of the level events or the `-1/3` of the refinement events.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Slack {
    Quarter,
    Third,
}

impl Slack {
    fn q(self) -> u32 {
        match self {
            Slack::Quarter => 4,
            Slack::Third => 3,
        }
    }
}

/// `(δ + γ − 2 m^{-1/q}) m`, clamped at 0, held so that integer degrees can be
/// compared against it exactly.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EventThreshold {
    pub m: u64,
    pub slack: Slack,
    /// The unclamped value is at most 0, so the event is vacuous.
    pub clamped: bool,
    /// Smallest integer degree meeting the threshold.
    pub min_degree: u64,
    /// Enclosure of the clamped value.
    pub value: Bracket,
    /// The clamped value when it is rational (`m` a perfect `q`th power, or clamped).
    #[serde(serialize_with = "ser_opt_rational")]
    pub exact: Option<BigRational>,
}

fn ser_opt_rational<S: Serializer>(x: &Option<BigRational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_some(&v.to_string()),
        None => s.serialize_none(),
    }
}

fn pow(x: &BigRational, e: u32) -> BigRational {
    num_traits::pow::Pow::pow(x, e)
}

impl EventThreshold {
    pub fn new(delta: Rational64, gamma: Rational64, m: u64, slack: Slack) -> Result<Self> {
        if m == 0 {
            return Err(invalid_query("block size must be at least 1"));
        }
        let q = slack.q();
        let dg = big_rational(delta + gamma);
        let mq = BigRational::from_integer(BigInt::from(m));
        // threshold ≤ 0  ⟺  (δ+γ)^q m ≤ 2^q
        let two_q = BigRational::from_integer(BigInt::from(1u64 << q));
        let clamped = !dg.is_positive() || pow(&dg, q) * &mq <= two_q;

        let admits = |d: u64| -> bool {
            let x = &dg * &mq - BigRational::from_integer(BigInt::from(d));
            !x.is_positive() || pow(&x, q) <= &two_q * pow(&mq, q - 1)
        };
        let min_degree = if clamped {
            0
        } else {
            let (mut lo, mut hi) = (0u64, (&dg * &mq).ceil().to_integer().to_u64().unwrap_or(u64::MAX));
            while lo < hi {
                let mid = lo + (hi - lo) / 2;
                if admits(mid) {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            lo
        };

        // m^{(q-1)/q} = (m^{q-1})^{1/q}, bracketed at a fixed number of fractional bits
        let bits = DEFAULT_PRECISION_BITS as usize;
        let scaled = BigUint::from(m).pow(q - 1) << (q as usize * bits);
        let root = scaled.nth_root(q);
        let perfect = root.pow(q) == scaled;
        let denom = BigRational::from_integer(BigInt::one() << bits);
        let root_lo = BigRational::from_integer(root.clone().into()) / &denom;
        let root_hi = if perfect {
            root_lo.clone()
        } else {
            BigRational::from_integer((root + 1u32).into()) / &denom
        };
        let two = BigRational::from_integer(BigInt::from(2));
        let clamp0 = |x: BigRational| if x.is_negative() { BigRational::zero() } else { x };
        let main = &dg * &mq;
        let value = Bracket {
            lo: clamp0(&main - &two * &root_hi),
            hi: clamp0(&main - &two * &root_lo),
        };
        let exact = if clamped {
            Some(BigRational::zero())
        } else if perfect {
            Some(value.lo.clone())
        } else {
            None
        };
        Ok(EventThreshold {
            m,
            slack,
            clamped,
            min_degree,
            value,
            exact,
        })
    }

    pub fn admits(&self, degree: u64) -> bool {
        degree >= self.min_degree
    }
}

/// Threshold of the level events `E_{i,j}` for a block of size `m`.
pub fn event_threshold(delta: Rational64, gamma: Rational64, m: u64) -> Result<EventThreshold> {
    EventThreshold::new(delta, gamma, m, Slack::Quarter)
}

/// An ordered partition `V_1, …, V_r` of `0..n` together with target sizes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    n: usize,
    blocks: Vec<Vec<Vertex>>,
    sizes: Vec<usize>,
}

impl Partition {
    /// Blocks must be disjoint and cover `0..n`; `sizes` are the targets checked by P1.
    pub fn new(n: usize, blocks: Vec<Vec<Vertex>>, sizes: Vec<usize>) -> Result<Self> {
        if blocks.len() != sizes.len() {
            return Err(Error::Construction(format!(
                "{} blocks but {} target sizes",
                blocks.len(),
                sizes.len()
            )));
        }
        let mut seen = vec![false; n];
        for b in &blocks {
            for &v in b {
                let slot = seen
                    .get_mut(v as usize)
                    .ok_or_else(|| Error::Construction(format!("vertex {v} is outside 0..{n}")))?;
                if *slot {
                    return Err(Error::Construction(format!("vertex {v} lies in two blocks")));
                }
                *slot = true;
            }
        }
        if let Some(v) = seen.iter().position(|&x| !x) {
            return Err(Error::Construction(format!("vertex {v} is in no block")));
        }
        Ok(Partition { n, blocks, sizes })
    }

    /// Partition whose targets are its own block sizes.
    pub fn from_blocks(n: usize, blocks: Vec<Vec<Vertex>>) -> Result<Self> {
        let sizes = blocks.iter().map(Vec::len).collect();
        Self::new(n, blocks, sizes)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Vec<Vertex>] {
        &self.blocks
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Block index of every vertex.
    pub fn block_of(&self) -> Vec<usize> {
        let mut out = vec![0; self.n];
        for (i, b) in self.blocks.iter().enumerate() {
            for &v in b {
                out[v as usize] = i;
            }
        }
        out
    }

    /// `V_{i-1} ∪ V_i ∪ V_{i+1}` (indices mod r), sorted.
    pub fn neighbourhood(&self, i: usize) -> Vec<Vertex> {
        neighbourhood(&self.blocks, i)
    }

    /// One line per block, vertices separated by spaces.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for b in &self.blocks {
            let line: Vec<String> = b.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse_text(n: usize, text: &str) -> Result<Self> {
        let mut blocks = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let block = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<Vertex>().map_err(|_| Error::Parse {
                        line: no + 1,
                        msg: format!("`{t}` is not a vertex"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if !block.is_empty() {
                blocks.push(block);
            }
        }
        Self::from_blocks(n, blocks)
    }
}

fn neighbourhood(blocks: &[Vec<Vertex>], i: usize) -> Vec<Vertex> {
    let r = blocks.len();
    let mut idx = vec![(i + r - 1) % r, i, (i + 1) % r];
    idx.sort_unstable();
    idx.dedup();
    let mut out: Vec<Vertex> = idx.iter().flat_map(|&j| blocks[j].iter().copied()).collect();
    out.sort_unstable();
    out
}

/// Whether `d(U, target) ≥ threshold` for every `(k-1)`-set `U` of `pool` (sorted).
fn all_meet(h: &Hypergraph, pool: &[Vertex], target: &VertexSet, threshold: &EventThreshold) -> bool {
    if threshold.min_degree == 0 {
        return true;
    }
    for_each_subset(pool, h.k() - 1, |u| {
        threshold.admits(h.codegree_into_sorted(u, target) as u64)
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LevelTrace {
    pub level: usize,
    /// `V_{i,j}`, each sorted.
    pub blocks: Vec<Vec<Vertex>>,
    /// `m_{i,j}`.
    pub sizes: Vec<usize>,
    /// `E_{i,j}`.
    pub events: Vec<bool>,
    /// Whether the `E_{i,j}` threshold clamped to 0.
    pub clamped: Vec<bool>,
    /// `F_{i-1,j}` for the parents of this level; empty at level 0.
    pub refinements: Vec<bool>,
    /// Whether both `F_{i-1,j}` child thresholds clamped to 0.
    pub refinement_clamped: Vec<bool>,
}

impl LevelTrace {
    /// `E_i`: every event of the level holds.
    pub fn all_events(&self) -> bool {
        self.events.iter().all(|&e| e)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BisectionTrace {
    /// Number of halving rounds `s`.
    pub s: usize,
    /// Levels `0..=s`.
    pub levels: Vec<LevelTrace>,
}

impl BisectionTrace {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }

    /// Checks that every `F_{i-1,j}` implies `E_{i,2j-1}` and `E_{i,2j}`.
    pub fn refinement_implies_events(&self) -> bool {
        self.levels.iter().skip(1).all(|lvl| {
            lvl.refinements
                .iter()
                .enumerate()
                .all(|(j, &f)| !f || (lvl.events[2 * j] && lvl.events[2 * j + 1]))
        })
    }
}

/// Splits `V(H)` in halves `s` times with the sizes of `sv`, recording each
/// level's events. Deterministic in `seed`.
pub fn random_bisection(
    h: &Hypergraph,
    sv: &SizeVector,
    spec: &GoodnessSpec,
    seed: u64,
) -> Result<(Partition, BisectionTrace)> {
    if sv.n() != h.n() {
        return Err(Error::Construction(format!(
            "size vector sums to {} but the host has {} vertices",
            sv.n(),
            h.n()
        )));
    }
    if let Some(v) = sv.violation() {
        return Err(Error::Construction(v));
    }
    if h.k() < 2 {
        return Err(invalid_query("random bisection needs k >= 2"));
    }
    let s = sv.levels();
    let n = h.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let threshold = |m: usize, slack| EventThreshold::new(spec.delta, spec.gamma, m as u64, slack);

    let mut blocks: Vec<Vec<Vertex>> = vec![(0..n as Vertex).collect()];
    let mut levels = Vec::with_capacity(s + 1);
    for level in 0..=s {
        let mut refinements = Vec::new();
        let mut refinement_clamped = Vec::new();
        if level > 0 {
            let parents = std::mem::take(&mut blocks);
            // split every parent first; the F events look at the parents' neighbourhoods
            let mut children = Vec::with_capacity(2 * parents.len());
            for (j, parent) in parents.iter().enumerate() {
                let mut shuffled = parent.clone();
                shuffled.shuffle(&mut rng);
                let left_size = sv.node_size(level, 2 * j);
                let mut left = shuffled[..left_size].to_vec();
                let mut right = shuffled[left_size..].to_vec();
                left.sort_unstable();
                right.sort_unstable();
                children.push(left);
                children.push(right);
            }
            for j in 0..parents.len() {
                let pool = neighbourhood(&parents, j);
                let mut ok = true;
                let mut vacuous = true;
                for c in [2 * j, 2 * j + 1] {
                    let t = threshold(children[c].len(), Slack::Third)?;
                    vacuous &= t.clamped;
                    let target = VertexSet::from_iter_n(n, children[c].iter().copied());
                    ok = ok && all_meet(h, &pool, &target, &t);
                }
                refinements.push(ok);
                refinement_clamped.push(vacuous);
            }
            blocks = children;
        }
        let mut events = Vec::with_capacity(blocks.len());
        let mut clamped = Vec::with_capacity(blocks.len());
        for j in 0..blocks.len() {
            let t = threshold(blocks[j].len(), Slack::Quarter)?;
            let target = VertexSet::from_iter_n(n, blocks[j].iter().copied());
            events.push(all_meet(h, &neighbourhood(&blocks, j), &target, &t));
            clamped.push(t.clamped);
        }
        levels.push(LevelTrace {
            level,
            sizes: blocks.iter().map(Vec::len).collect(),
            blocks: blocks.clone(),
            events,
            clamped,
            refinements,
            refinement_clamped,
        });
    }
    let partition = Partition::new(n, blocks, sv.sizes.clone())?;
    Ok((partition, BisectionTrace { s, levels }))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// 0-based block index.
    pub block: usize,
    /// The offending `(k-1)`-set for P2, or the `d`-set for the factor variant.
    pub set: Vec<Vertex>,
    pub degree: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GoodnessReport {
    pub good: bool,
    /// Every block has its target size.
    pub sizes_match: bool,
    /// The first [`VIOLATION_CAP`] violations, by block then set.
    pub violations: Vec<Violation>,
    pub violation_count: u64,
    /// Minimum of degree over the block's normaliser; `None` when nothing was checked.
    #[serde(serialize_with = "ser_opt_rational")]
    pub min_ratio: Option<BigRational>,
}

impl GoodnessReport {
    pub fn min_ratio_f64(&self) -> Option<f64> {
        self.min_ratio.as_ref().and_then(|x| x.to_f64())
    }

    fn record(&mut self, block: usize, set: &[Vertex], degree: u64, ratio: BigRational, ok: bool) {
        if self.min_ratio.as_ref().is_none_or(|m| &ratio < m) {
            self.min_ratio = Some(ratio);
        }
        if !ok {
            self.violation_count += 1;
            if self.violations.len() < VIOLATION_CAP {
                self.violations.push(Violation {
                    block,
                    set: set.to_vec(),
                    degree,
                });
            }
        }
    }

    fn new(sizes_match: bool) -> Self {
        GoodnessReport {
            good: false,
            sizes_match,
            violations: Vec::new(),
            violation_count: 0,
            min_ratio: None,
        }
    }
}

fn check_partition_shape(h: &Hypergraph, p: &Partition) -> Result<bool> {
    if p.n() != h.n() {
        return Err(invalid_query(format!(
            "partition covers {} vertices but the host has {}",
            p.n(),
            h.n()
        )));
    }
    Ok(p.blocks.iter().zip(&p.sizes).all(|(b, &s)| b.len() == s))
}

/// P1 and P2: block sizes match, and `d(U, V_i) ≥ δ |V_i|` for every
/// `(k-1)`-set `U ⊆ V_{i-1} ∪ V_i ∪ V_{i+1}`.
pub fn check_good(h: &Hypergraph, p: &Partition, delta: Rational64) -> Result<GoodnessReport> {
    let sizes_match = check_partition_shape(h, p)?;
    let mut report = GoodnessReport::new(sizes_match);
    let delta = big_rational(delta);
    for (i, block) in p.blocks.iter().enumerate() {
        if block.is_empty() {
            continue;
        }
        let size = BigRational::from_integer(BigInt::from(block.len()));
        let needed = &delta * &size;
        let target = VertexSet::from_iter_n(h.n(), block.iter().copied());
        let pool = p.neighbourhood(i);
        for_each_subset(&pool, h.k() - 1, |u| {
            let d = h.codegree_into_sorted(u, &target) as u64;
            let dq = BigRational::from_integer(BigInt::from(d));
            let ok = dq >= needed;
            report.record(i, u, d, dq / &size, ok);
            true
        });
    }
    report.good = sizes_match && report.violation_count == 0;
    Ok(report)
}

/// Block sizes match and `δ_d(H[V_i]) ≥ μ C(n_i, k-d)` in every block.
pub fn check_good_factor(h: &Hypergraph, p: &Partition, d: usize, mu: Rational64) -> Result<GoodnessReport> {
    if d == 0 || d >= h.k() {
        return Err(invalid_query(format!(
            "d = {d} must satisfy 1 <= d <= k-1 = {}",
            h.k() - 1
        )));
    }
    let sizes_match = check_partition_shape(h, p)?;
    let mut report = GoodnessReport::new(sizes_match);
    let mu = big_rational(mu);
    for (i, block) in p.blocks.iter().enumerate() {
        if block.len() < d {
            continue;
        }
        let sub = h.induced(block);
        let (deg, witness) = sub.graph.min_d_degree_with_witness(d);
        let norm = BigRational::from_integer(binomial_big(block.len(), h.k() - d).into());
        let dq = BigRational::from_integer(BigInt::from(deg));
        let ok = dq >= &mu * &norm;
        let ratio = if norm.is_zero() { BigRational::zero() } else { dq / norm };
        report.record(i, &sub.to_global(&witness), deg, ratio, ok);
    }
    report.good = sizes_match && report.violation_count == 0;
    Ok(report)
}

/// Population `N`, draws `n`, successes `m` and deviation `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypergeometricParams {
    pub population: u64,
    pub draws: u64,
    pub successes: u64,
    pub t: f64,
}

impl HypergeometricParams {
    pub fn new(population: u64, draws: u64, successes: u64, t: f64) -> Result<Self> {
        if draws > population || successes > population {
            return Err(invalid_query(format!(
                "need draws, successes <= population, got N = {population}, n = {draws}, m = {successes}"
            )));
        }
        if t.is_nan() || t <= 0.0 {
            return Err(invalid_query(format!("deviation t = {t} must be positive")));
        }
        Ok(HypergeometricParams {
            population,
            draws,
            successes,
            t,
        })
    }

    pub fn mean(&self) -> f64 {
        if self.population == 0 {
            return 0.0;
        }
        self.draws as f64 * self.successes as f64 / self.population as f64
    }
}

/// `2 exp(-2t²/n)`, a bound on `P(|X − E X| ≥ t)`.
pub fn hypergeometric_tail_bound(params: &HypergeometricParams) -> f64 {
    if params.draws == 0 {
        return 0.0;
    }
    2.0 * (-2.0 * params.t * params.t / params.draws as f64).exp()
}

/// Observed frequency of `|X − E X| ≥ t` over `samples` draws.
pub fn hypergeometric_tail_frequency(params: &HypergeometricParams, samples: u64, seed: u64) -> Result<f64> {
    let dist = Hypergeometric::new(params.population, params.successes, params.draws)
        .map_err(|e| invalid_query(format!("hypergeometric parameters: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mean = params.mean();
    let hits = (0..samples)
        .filter(|_| (dist.sample(&mut rng) as f64 - mean).abs() >= params.t)
        .count();
    Ok(hits as f64 / samples.max(1) as f64)
}

/// Independent per-index seed derived from a root seed (SplitMix64 finaliser).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 95% Wilson score interval for `hits` out of `trials`.
pub fn wilson_interval(hits: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let n = trials as f64;
    let p = hits as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    // the endpoints are exactly 0 and 1 when no or every trial hit
    let lo = if hits == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if hits == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelFrequency {
    pub level: usize,
    /// Trials in which `E_{level-1}` held (all trials at level 0).
    pub conditioned: u64,
    /// Of those, trials in which `E_level` also held.
    pub holds: u64,
    /// Trials whose `E_level` thresholds all clamped to 0.
    pub vacuous: u64,
}

impl LevelFrequency {
    pub fn frequency(&self) -> Option<f64> {
        (self.conditioned > 0).then(|| self.holds as f64 / self.conditioned as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GoodEstimate {
    pub trials: u64,
    /// Trials whose final partition is good at `δ + γ/2`.
    pub good: u64,
    pub fraction: f64,
    pub interval: (f64, f64),
    pub levels: Vec<LevelFrequency>,
    /// Trials in which every level event held.
    pub all_events: u64,
    /// Trials violating the refinement implication; always 0.
    pub implication_failures: u64,
}

/// Monte Carlo estimate of the probability that a random partition with sizes
/// `sv` is good at `δ + γ/2`, with per-level conditional event frequencies.
pub fn estimate_good_probability(
    h: &Hypergraph,
    sv: &SizeVector,
    spec: &GoodnessSpec,
    trials: u64,
    seed: u64,
) -> Result<GoodEstimate> {
    if trials == 0 {
        return Err(invalid_query("trials must be at least 1"));
    }
    let level = spec.half_slack();
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|t| {
            let (p, trace) = random_bisection(h, sv, spec, derive_seed(seed, t))?;
            let good = check_good(h, &p, level)?.good;
            let events: Vec<bool> = trace.levels.iter().map(LevelTrace::all_events).collect();
            let vacuous: Vec<bool> = trace.levels.iter().map(|l| l.clamped.iter().all(|&c| c)).collect();
            Ok((good, events, vacuous, trace.refinement_implies_events()))
        })
        .collect::<Result<Vec<_>>>()?;

    let s = sv.levels();
    let mut levels: Vec<LevelFrequency> = (0..=s)
        .map(|level| LevelFrequency {
            level,
            conditioned: 0,
            holds: 0,
            vacuous: 0,
        })
        .collect();
    let (mut good, mut all_events, mut implication_failures) = (0, 0, 0);
    for (g, events, vacuous, implication) in &outcomes {
        good += *g as u64;
        all_events += events.iter().all(|&e| e) as u64;
        implication_failures += !implication as u64;
        for (i, lf) in levels.iter_mut().enumerate() {
            lf.vacuous += vacuous[i] as u64;
            if i == 0 || events[i - 1] {
                lf.conditioned += 1;
                lf.holds += events[i] as u64;
            }
        }
    }
    Ok(GoodEstimate {
        trials,
        good,
        fraction: good as f64 / trials as f64,
        interval: wilson_interval(good, trials),
        levels,
        all_events,
        implication_failures,
    })
}
