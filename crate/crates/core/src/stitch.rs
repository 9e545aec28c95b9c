//! Partition-respecting Hamilton ℓ-cycles and powers of tight cycles built by
//! joining per-block Hamilton paths through junction tuples, plus the end-to-end
//! partition → stitch pipeline.

use std::collections::HashSet;

use num_bigint::BigUint;
use num_rational::{BigRational, Rational64};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{exp_neg_bracket, multinomial, Bracket, DEFAULT_PRECISION_BITS};
use crate::budget::Budget;
use crate::error::{invalid_query, Error, Result};
use crate::factors::{count_f_factors, factor_lower_bound, stitch_factor, verify_factor, FactorSpec};
use crate::hypergraph::{GoodnessSpec, Hypergraph};
use crate::partition::{
    check_good, check_good_factor, derive_seed, random_bisection, size_vector, Partition, SizeVector,
};
use crate::paths::{
    clique_graph, enumerate_hamilton_ell_cycles, find_clique_among, find_hamilton_ell_path, validate_ell_cycle,
    validate_power_cycle, EllCycle, EndPair, EnumerationMode, PowerCycle,
};
use crate::Vertex;

pub const DEFAULT_JUNCTION_RETRIES: usize = 20;
pub const DEFAULT_BLOCK_NODES: u64 = 2_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StitchConfig {
    /// Junction resamplings allowed per block before giving up.
    pub junction_retries: usize,
    /// Node budget of each per-block path search.
    pub block_nodes: u64,
    pub seed: u64,
}

impl Default for StitchConfig {
    fn default() -> Self {
        StitchConfig {
            junction_retries: DEFAULT_JUNCTION_RETRIES,
            block_nodes: DEFAULT_BLOCK_NODES,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CertificateKind {
    Cycle { ell: usize },
    Power { t: usize },
}

/// A Hamilton ℓ-cycle or power of a tight cycle together with the partition it
/// respects and the pieces it was assembled from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RespectingCertificate {
    pub k: usize,
    pub kind: CertificateKind,
    /// Full cyclic vertex order; windows start at position 0.
    pub order: Vec<Vertex>,
    pub blocks: Vec<Vec<Vertex>>,
    /// `v_i`, an ordered tuple inside block `i`.
    pub junctions: Vec<Vec<Vertex>>,
    /// `L_i`: block `i` minus its junction, in cycle order.
    pub segments: Vec<Vec<Vertex>>,
}

impl RespectingCertificate {
    pub fn ell_cycle(&self) -> Result<EllCycle> {
        match self.kind {
            CertificateKind::Cycle { ell } => EllCycle::new(self.k, ell, self.order.clone()),
            CertificateKind::Power { .. } => Err(invalid_query("certificate holds a power cycle")),
        }
    }

    pub fn power_cycle(&self) -> Result<PowerCycle> {
        match self.kind {
            CertificateKind::Power { t } => PowerCycle::new(self.k, t, self.order.clone()),
            CertificateKind::Cycle { .. } => Err(invalid_query("certificate holds an ℓ-cycle")),
        }
    }

    /// Validates the structure against `h` and the respecting property against `p`.
    pub fn is_sound(&self, h: &Hypergraph, p: &Partition) -> Result<bool> {
        let structural = match self.kind {
            CertificateKind::Cycle { .. } => validate_ell_cycle(h, &self.ell_cycle()?)?,
            CertificateKind::Power { .. } => validate_power_cycle(h, &self.power_cycle()?)?,
        };
        Ok(structural && is_respecting(&self.order, p)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }
}

/// Whether the cyclic order visits every block as one arc, consecutive blocks
/// on consecutive arcs, in one of the two directions.
pub fn is_respecting(order: &[Vertex], p: &Partition) -> Result<bool> {
    let n = p.n();
    if order.len() != n {
        return Err(invalid_query(format!(
            "cycle has {} vertices but the partition covers {n}",
            order.len()
        )));
    }
    let mut seen = vec![false; n];
    for &v in order {
        match seen.get_mut(v as usize) {
            Some(s) if !*s => *s = true,
            _ => {
                return Err(invalid_query(format!(
                    "cycle vertex {v} is repeated or outside the partition"
                )))
            }
        }
    }
    let block_of = p.block_of();
    let labels: Vec<usize> = order.iter().map(|&v| block_of[v as usize]).collect();
    let nonempty: Vec<usize> = (0..p.r()).filter(|&i| !p.blocks()[i].is_empty()).collect();
    if nonempty.len() <= 1 {
        return Ok(true);
    }
    // start at a block boundary and read off the arcs
    let start = match (0..n).find(|&i| labels[i] != labels[(i + n - 1) % n]) {
        Some(s) => s,
        None => return Ok(false),
    };
    let mut arcs = Vec::new();
    for i in 0..n {
        let l = labels[(start + i) % n];
        if arcs.last() != Some(&l) {
            arcs.push(l);
        }
    }
    if arcs.len() != nonempty.len() {
        return Ok(false);
    }
    let pos = |b: usize| {
        nonempty
            .iter()
            .position(|&x| x == b)
            .expect("label is a nonempty block")
    };
    let q = nonempty.len();
    let step = (pos(arcs[1]) + q - pos(arcs[0])) % q;
    if step != 1 && step != q - 1 {
        return Ok(false);
    }
    Ok((0..q).all(|i| (pos(arcs[(i + 1) % q]) + q - pos(arcs[i])) % q == step))
}

/// The distinct ordered partitions with block sizes `sizes` respected by the
/// cyclic order: one per direction and starting vertex, deduplicated.
pub fn respecting_partitions(order: &[Vertex], sizes: &[usize]) -> Result<HashSet<Vec<Vec<Vertex>>>> {
    let n = order.len();
    if sizes.iter().sum::<usize>() != n {
        return Err(invalid_query(format!("sizes do not sum to the cycle length {n}")));
    }
    let mut out = HashSet::new();
    for dir in [false, true] {
        for start in 0..n {
            let at = |i: usize| {
                if dir {
                    order[(start + n - i % n) % n]
                } else {
                    order[(start + i) % n]
                }
            };
            let mut blocks = Vec::with_capacity(sizes.len());
            let mut i = 0;
            for &s in sizes {
                let mut b: Vec<Vertex> = (i..i + s).map(at).collect();
                b.sort_unstable();
                blocks.push(b);
                i += s;
            }
            out.insert(blocks);
        }
    }
    Ok(out)
}

/// Number of ordered partitions with sizes `sizes` that the cycle's ordering respects.
pub fn respecting_multiplicity(cycle: &EllCycle, sizes: &[usize]) -> Result<usize> {
    Ok(respecting_partitions(cycle.order(), sizes)?.len())
}

/// As [`respecting_multiplicity`], but over every ordering of the same edge set
/// obtained by permuting the runs of vertices that lie in a single edge.
pub fn respecting_multiplicity_of_edge_set(cycle: &EllCycle, sizes: &[usize], max_orderings: usize) -> Result<usize> {
    let (k, ell, n) = (cycle.k(), cycle.ell(), cycle.len());
    let s = k - ell;
    let runs: Vec<(usize, usize)> = if s > ell {
        (0..n / s).map(|b| (b * s + ell, b * s + s)).collect()
    } else {
        Vec::new()
    };
    let run_len = s.saturating_sub(ell);
    let per_run: usize = (1..=run_len).product();
    let total = (per_run as u128).checked_pow(runs.len() as u32).unwrap_or(u128::MAX);
    if total > max_orderings as u128 {
        return Err(Error::BudgetExhausted {
            context: "orderings of a cycle edge set".into(),
            limit: max_orderings as u64,
        });
    }
    let mut all = HashSet::new();
    let mut order = cycle.order().to_vec();
    fn rec(
        runs: &[(usize, usize)],
        order: &mut Vec<Vertex>,
        sizes: &[usize],
        all: &mut HashSet<Vec<Vec<Vertex>>>,
    ) -> Result<()> {
        let Some(&(a, b)) = runs.first() else {
            all.extend(respecting_partitions(order, sizes)?);
            return Ok(());
        };
        let mut run: Vec<Vertex> = order[a..b].to_vec();
        run.sort_unstable();
        loop {
            order[a..b].copy_from_slice(&run);
            rec(&runs[1..], order, sizes, all)?;
            if !next_permutation(&mut run) {
                break;
            }
        }
        Ok(())
    }
    rec(&runs, &mut order, sizes, &mut all)?;
    Ok(all.len())
}

fn next_permutation(v: &mut [Vertex]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len())
        .rev()
        .find(|&j| v[j] > v[i - 1])
        .expect("pivot has a successor");
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// `e^{-n}/(2n) · n!/(n_1! ⋯ n_r!)` as a bracket.
pub fn lower_bound_count(n: usize, sizes: &[usize], bits: u32) -> Result<Bracket> {
    if n == 0 {
        return Err(invalid_query("n must be at least 1"));
    }
    let multi = BigRational::from_integer(multinomial(n, sizes)?.into());
    let factor = multi / BigRational::from_integer((2 * n).into());
    Ok(exp_neg_bracket(n as u64, bits).scale(&factor).round_outward(bits))
}

/// Per-block path solver: the order of a spanning path of `H[block ∪ start]`
/// from `start` to `end`, or `None`.
type BlockSolver<'a> = dyn Fn(&[Vertex], &[Vertex], &[Vertex]) -> Result<Option<Vec<Vertex>>> + Sync + 'a;
/// Draws a junction tuple inside a block.
type JunctionPicker<'a> = dyn Fn(&[Vertex], &mut ChaCha8Rng) -> Result<Option<Vec<Vertex>>> + 'a;

struct Assembly {
    junctions: Vec<Vec<Vertex>>,
    paths: Vec<Vec<Vertex>>,
}

/// Picks junctions, solves every block in parallel and resamples junctions
/// around failed blocks until all blocks succeed or a block runs out of retries.
fn assemble(p: &Partition, cfg: &StitchConfig, pick: &JunctionPicker, solve: &BlockSolver) -> Result<Option<Assembly>> {
    let r = p.r();
    let blocks = p.blocks();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut junctions = Vec::with_capacity(r);
    for b in blocks {
        match pick(b, &mut rng)? {
            Some(j) => junctions.push(j),
            None => return Ok(None),
        }
    }
    let mut paths: Vec<Option<Vec<Vertex>>> = vec![None; r];
    let mut retries = vec![0usize; r];
    let mut pending: Vec<usize> = (0..r).collect();
    while !pending.is_empty() {
        let solved = pending
            .par_iter()
            .map(|&i| solve(&blocks[i], &junctions[(i + r - 1) % r], &junctions[i]))
            .collect::<Vec<_>>();
        let mut next = Vec::new();
        for (&i, res) in pending.iter().zip(solved) {
            match res? {
                Some(path) => paths[i] = Some(path),
                None => {
                    paths[i] = None;
                    retries[i] += 1;
                    if retries[i] > cfg.junction_retries {
                        return Ok(None);
                    }
                    // alternate between the block's own junction and the incoming one
                    let j = if retries[i] % 2 == 1 { i } else { (i + r - 1) % r };
                    match pick(&blocks[j], &mut rng)? {
                        Some(t) => junctions[j] = t,
                        None => return Ok(None),
                    }
                    next.extend([j, (j + 1) % r]);
                }
            }
        }
        next.sort_unstable();
        next.dedup();
        pending = next;
    }
    Ok(Some(Assembly {
        junctions,
        paths: paths.into_iter().map(|p| p.expect("every block solved")).collect(),
    }))
}

/// `v_r L_1 v_1 L_2 ⋯ v_{r-1} L_r`: each block path starts at the previous
/// junction, so the cycle's windows begin at the last junction.
fn concatenate(asm: &Assembly, width: usize) -> (Vec<Vertex>, Vec<Vec<Vertex>>) {
    let r = asm.paths.len();
    let segments: Vec<Vec<Vertex>> = asm
        .paths
        .iter()
        .map(|path| path[width..path.len() - width].to_vec())
        .collect();
    let mut order = asm.junctions[r - 1].clone();
    for (i, segment) in segments.iter().enumerate() {
        order.extend(segment);
        if i + 1 < r {
            order.extend(&asm.junctions[i]);
        }
    }
    (order, segments)
}

fn check_blocks(p: &Partition, h: &Hypergraph) -> Result<()> {
    if p.n() != h.n() {
        return Err(invalid_query(format!(
            "partition covers {} vertices but the host has {}",
            p.n(),
            h.n()
        )));
    }
    if p.r() < 2 {
        return Err(invalid_query("stitching needs at least two blocks"));
    }
    Ok(())
}

/// A Hamilton ℓ-cycle of `h` respecting `p`, assembled from per-block Hamilton
/// ℓ-paths between random junction tuples.
pub fn stitch_cycle(
    h: &Hypergraph,
    p: &Partition,
    ell: usize,
    cfg: &StitchConfig,
) -> Result<Option<RespectingCertificate>> {
    check_blocks(p, h)?;
    let k = h.k();
    if ell == 0 || ell >= k {
        return Err(invalid_query(format!("need 1 <= ell <= k-1, got k = {k}, ell = {ell}")));
    }
    let s = k - ell;
    for b in p.blocks() {
        if b.len() % s != 0 {
            return Err(Error::Divisibility {
                what: "block size must be divisible by k-ℓ".into(),
                divisor: s,
                value: b.len(),
            });
        }
        if b.len() < k + ell {
            return Err(invalid_query(format!(
                "block of {} vertices is below k + ℓ = {}",
                b.len(),
                k + ell
            )));
        }
    }
    let pick = |block: &[Vertex], rng: &mut ChaCha8Rng| -> Result<Option<Vec<Vertex>>> {
        let mut t: Vec<Vertex> = block.choose_multiple(rng, ell).copied().collect();
        t.shuffle(rng);
        Ok(Some(t))
    };
    let solve = |block: &[Vertex], start: &[Vertex], end: &[Vertex]| -> Result<Option<Vec<Vertex>>> {
        let mut span = block.to_vec();
        span.extend_from_slice(start);
        let sub = h.induced(&span);
        let local = |t: &[Vertex]| sub.to_local(t).expect("junction lies in the span");
        let ends = EndPair::new(local(start), local(end))?;
        let budget = Budget::with_context(cfg.block_nodes, "per-block Hamilton path");
        Ok(find_hamilton_ell_path(&sub.graph, ell, &ends, &budget)?.map(|path| sub.to_global(path.order())))
    };
    let Some(asm) = assemble(p, cfg, &pick, &solve)? else {
        return Ok(None);
    };
    let (order, segments) = concatenate(&asm, ell);
    let cert = RespectingCertificate {
        k,
        kind: CertificateKind::Cycle { ell },
        order,
        blocks: p.blocks().to_vec(),
        junctions: asm.junctions,
        segments,
    };
    if !cert.is_sound(h, p)? {
        return Err(Error::Construction("assembled cycle failed validation".into()));
    }
    Ok(Some(cert))
}

/// A `(t-k+1)`th power of a tight Hamilton cycle respecting `p`: junctions are
/// `(t-1)`-cliques and each block is a tight Hamilton path of the `t`-clique
/// graph of `H[V_i ∪ junction_{i-1}]`.
pub fn stitch_power_cycle(
    h: &Hypergraph,
    p: &Partition,
    t: usize,
    cfg: &StitchConfig,
) -> Result<Option<RespectingCertificate>> {
    check_blocks(p, h)?;
    let k = h.k();
    if t < k || t < 2 {
        return Err(invalid_query(format!("need t >= k, got t = {t}, k = {k}")));
    }
    if let Some(b) = p.blocks().iter().find(|b| b.len() < t) {
        return Err(invalid_query(format!("block of {} vertices is below t = {t}", b.len())));
    }
    let width = t - 1;
    let pick = |block: &[Vertex], rng: &mut ChaCha8Rng| -> Result<Option<Vec<Vertex>>> {
        let mut order = block.to_vec();
        order.shuffle(rng);
        if width < k {
            return Ok(Some(order[..width].to_vec()));
        }
        find_clique_among(h, &order, width)
    };
    let solve = |block: &[Vertex], start: &[Vertex], end: &[Vertex]| -> Result<Option<Vec<Vertex>>> {
        let mut span = block.to_vec();
        span.extend_from_slice(start);
        let sub = h.induced(&span);
        let local = |x: &[Vertex]| sub.to_local(x).expect("junction lies in the span");
        let kt = clique_graph(&sub.graph, t)?;
        let ends = EndPair::new(local(start), local(end))?;
        let budget = Budget::with_context(cfg.block_nodes, "per-block tight path in the clique graph");
        Ok(find_hamilton_ell_path(&kt, width, &ends, &budget)?.map(|path| sub.to_global(path.order())))
    };
    let Some(asm) = assemble(p, cfg, &pick, &solve)? else {
        return Ok(None);
    };
    let (order, segments) = concatenate(&asm, width);
    let cert = RespectingCertificate {
        k,
        kind: CertificateKind::Power { t },
        order,
        blocks: p.blocks().to_vec(),
        junctions: asm.junctions,
        segments,
    };
    if !cert.is_sound(h, p)? {
        return Err(Error::Construction("assembled power cycle failed validation".into()));
    }
    Ok(Some(cert))
}

/// Per-stage seed derivation for reproducible pipelines.
pub trait SeedSchedule: Sync {
    fn seed(&self, stage: &str, index: u64) -> u64;
}

/// Default schedule: SplitMix64 over the root seed, the stage name and the index.
#[derive(Clone, Copy, Debug)]
pub struct MixSchedule(pub u64);

impl SeedSchedule for MixSchedule {
    fn seed(&self, stage: &str, index: u64) -> u64 {
        let tag = stage.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
            (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
        });
        derive_seed(derive_seed(self.0, tag), index)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Target {
    Cycle {
        ell: usize,
    },
    Power {
        t: usize,
    },
    /// Goodness is checked as `(n, d, μ)`-goodness when `degree` is given.
    Factor {
        spec: FactorSpec,
        degree: Option<(usize, Rational64)>,
    },
}

impl Target {
    fn divisor(&self, k: usize) -> usize {
        match self {
            Target::Cycle { ell } => k - ell,
            Target::Power { .. } => 1,
            Target::Factor { spec, .. } => spec.t(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub target: Target,
    pub m: usize,
    pub spec: GoodnessSpec,
    pub trials: u64,
    /// Stitch every sampled partition, not only the good ones.
    pub stitch_all: bool,
    pub junction_retries: usize,
    pub block_nodes: u64,
    /// Node budget for the exact count; `None` skips it.
    pub exact_nodes: Option<u64>,
    /// Certificates kept in the report.
    pub samples: usize,
    pub precision_bits: u32,
}

impl PipelineConfig {
    pub fn new(target: Target, m: usize, spec: GoodnessSpec, trials: u64) -> Self {
        PipelineConfig {
            target,
            m,
            spec,
            trials,
            stitch_all: false,
            junction_retries: DEFAULT_JUNCTION_RETRIES,
            block_nodes: DEFAULT_BLOCK_NODES,
            exact_nodes: None,
            samples: 1,
            precision_bits: DEFAULT_PRECISION_BITS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StitchOutcome {
    Skipped,
    Success,
    Failure,
    Unsound,
    BudgetExhausted,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub partition_seed: u64,
    pub stitch_seed: u64,
    pub good: bool,
    pub stitch: StitchOutcome,
}

#[derive(Clone, Debug, Serialize)]
pub struct PipelineReport {
    pub size_vector: SizeVector,
    pub trials: u64,
    pub good: u64,
    pub goodness_fraction: f64,
    pub stitch_attempts: u64,
    pub stitch_successes: u64,
    /// Successes over attempts; `None` when nothing was attempted.
    pub stitch_success_rate: Option<f64>,
    pub unsound: u64,
    pub budget_exhausted: u64,
    pub records: Vec<TrialRecord>,
    pub samples: Vec<serde_json::Value>,
    pub lower_bound: Bracket,
    /// Exact count as a decimal string, when computed within budget.
    pub exact_count: Option<String>,
    /// Why the exact count is absent.
    pub exact_note: Option<String>,
}

/// Size vector → random bisection → goodness check → stitching, per trial,
/// plus the counting lower bound and optionally the exact count.
pub fn pipeline(h: &Hypergraph, cfg: &PipelineConfig, seeds: &dyn SeedSchedule) -> Result<PipelineReport> {
    let n = h.n();
    let k = h.k();
    match &cfg.target {
        Target::Cycle { ell } if *ell == 0 || *ell >= k => {
            return Err(invalid_query(format!("need 1 <= ell <= k-1, got k = {k}, ell = {ell}")))
        }
        Target::Power { t } if *t < k => return Err(invalid_query(format!("need t >= k, got t = {t}"))),
        Target::Factor { spec, .. } if spec.k() != k => {
            return Err(invalid_query("pattern and host have different uniformity"))
        }
        _ => {}
    }
    let sv = size_vector(n, cfg.m, cfg.target.divisor(k), k)?;
    let level = cfg.spec.half_slack();

    let run_trial = |trial: u64| -> Result<(TrialRecord, Option<serde_json::Value>)> {
        let partition_seed = seeds.seed("partition", trial);
        let stitch_seed = seeds.seed("stitch", trial);
        let (p, _) = random_bisection(h, &sv, &cfg.spec, partition_seed)?;
        let good = match &cfg.target {
            Target::Factor {
                degree: Some((d, mu)), ..
            } => check_good_factor(h, &p, *d, *mu)?.good,
            _ => check_good(h, &p, level)?.good,
        };
        let mut record = TrialRecord {
            trial,
            partition_seed,
            stitch_seed,
            good,
            stitch: StitchOutcome::Skipped,
        };
        if !(good || cfg.stitch_all) || p.r() < 2 && !matches!(cfg.target, Target::Factor { .. }) {
            return Ok((record, None));
        }
        let scfg = StitchConfig {
            junction_retries: cfg.junction_retries,
            block_nodes: cfg.block_nodes,
            seed: stitch_seed,
        };
        let attempt: Result<Option<(bool, serde_json::Value)>> = match &cfg.target {
            Target::Cycle { ell } => stitch_cycle(h, &p, *ell, &scfg).and_then(|c| {
                c.map(|c| Ok((c.is_sound(h, &p)?, serde_json::to_value(&c).expect("serializes"))))
                    .transpose()
            }),
            Target::Power { t } => stitch_power_cycle(h, &p, *t, &scfg).and_then(|c| {
                c.map(|c| Ok((c.is_sound(h, &p)?, serde_json::to_value(&c).expect("serializes"))))
                    .transpose()
            }),
            Target::Factor { spec, .. } => stitch_factor(h, &p, spec, cfg.block_nodes).map(|f| {
                f.map(|f| {
                    let sound = verify_factor(h, spec, &f)
                        && f.copies
                            .iter()
                            .all(|c| p.blocks().iter().any(|b| c.iter().all(|v| b.contains(v))));
                    (sound, serde_json::to_value(&f).expect("serializes"))
                })
            }),
        };
        let sample = match attempt {
            Ok(Some((true, json))) => {
                record.stitch = StitchOutcome::Success;
                Some(json)
            }
            Ok(Some((false, json))) => {
                record.stitch = StitchOutcome::Unsound;
                Some(json)
            }
            Ok(None) => {
                record.stitch = StitchOutcome::Failure;
                None
            }
            Err(Error::BudgetExhausted { .. }) => {
                record.stitch = StitchOutcome::BudgetExhausted;
                None
            }
            Err(e) => return Err(e),
        };
        Ok((record, sample))
    };
    let results = (0..cfg.trials)
        .into_par_iter()
        .map(run_trial)
        .collect::<Result<Vec<_>>>()?;

    let mut records = Vec::with_capacity(results.len());
    let mut samples = Vec::new();
    for (record, sample) in results {
        if let (Some(json), true) = (sample, samples.len() < cfg.samples) {
            samples.push(json);
        }
        records.push(record);
    }
    let count = |o: StitchOutcome| records.iter().filter(|r| r.stitch == o).count() as u64;
    let good = records.iter().filter(|r| r.good).count() as u64;
    let successes = count(StitchOutcome::Success);
    let attempts = records.len() as u64 - count(StitchOutcome::Skipped);

    let lower_bound = match &cfg.target {
        Target::Factor { spec, .. } => factor_lower_bound(n, spec.t(), &sv.sizes, cfg.precision_bits)?,
        _ => lower_bound_count(n, &sv.sizes, cfg.precision_bits)?,
    };
    let (exact_count, exact_note) = match cfg.exact_nodes {
        None => (None, Some("not requested".to_string())),
        Some(nodes) => match exact_count(h, &cfg.target, nodes) {
            Ok(c) => (Some(c.to_string()), None),
            Err(Error::BudgetExhausted { limit, .. }) => (None, Some(format!("budget of {limit} nodes exhausted"))),
            Err(e) => (None, Some(e.to_string())),
        },
    };
    Ok(PipelineReport {
        size_vector: sv,
        trials: cfg.trials,
        good,
        goodness_fraction: good as f64 / cfg.trials.max(1) as f64,
        stitch_attempts: attempts,
        stitch_successes: successes,
        stitch_success_rate: (attempts > 0).then(|| successes as f64 / attempts as f64),
        unsound: count(StitchOutcome::Unsound),
        budget_exhausted: count(StitchOutcome::BudgetExhausted),
        records,
        samples,
        lower_bound,
        exact_count,
        exact_note,
    })
}

/// Exact number of distinct target structures in `h`.
pub fn exact_count(h: &Hypergraph, target: &Target, nodes: u64) -> Result<BigUint> {
    let budget = Budget::with_context(nodes, "exact count");
    match target {
        Target::Cycle { ell } => Ok(enumerate_hamilton_ell_cycles(h, *ell, EnumerationMode::Count, &budget)?.count()),
        Target::Power { t } => {
            let kt = clique_graph(h, *t)?;
            Ok(enumerate_hamilton_ell_cycles(&kt, t - 1, EnumerationMode::Count, &budget)?.count())
        }
        Target::Factor { spec, .. } => count_f_factors(h, spec, &budget),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen_random;
    use num_traits::ToPrimitive;

    fn blocks_of(n: usize, size: usize) -> Partition {
        Partition::from_blocks(
            n,
            (0..n / size)
                .map(|i| ((i * size) as Vertex..((i + 1) * size) as Vertex).collect())
                .collect(),
        )
        .unwrap()
    }

    fn cfg(seed: u64) -> StitchConfig {
        StitchConfig {
            seed,
            ..StitchConfig::default()
        }
    }

    #[test]
    fn complete_host_stitches() {
        let h = Hypergraph::complete(36, 3).unwrap();
        let p = blocks_of(36, 12);
        let c = stitch_cycle(&h, &p, 2, &cfg(1)).unwrap().unwrap();
        assert!(validate_ell_cycle(&h, &c.ell_cycle().unwrap()).unwrap());
        assert!(is_respecting(&c.order, &p).unwrap());
        assert_eq!(c.junctions.len(), 3);
        let json: serde_json::Value = serde_json::from_str(&c.to_json()).unwrap();
        assert_eq!(json["order"].as_array().unwrap().len(), 36);
    }

    #[test]
    fn stride_alignment_with_loose_cycles() {
        // ℓ = 1, k = 3: stride 2 does not divide ℓ, so windows must start at the last junction
        let h = Hypergraph::complete(24, 3).unwrap();
        let p = blocks_of(24, 6);
        let c = stitch_cycle(&h, &p, 1, &cfg(3)).unwrap().unwrap();
        assert!(c.is_sound(&h, &p).unwrap());
        let h = Hypergraph::complete(20, 4).unwrap();
        let p = blocks_of(20, 10);
        for ell in [1, 2, 3] {
            if 10 % (4 - ell) == 0 {
                let c = stitch_cycle(&h, &p, ell, &cfg(ell as u64)).unwrap().unwrap();
                assert!(c.is_sound(&h, &p).unwrap());
            }
        }
    }

    #[test]
    fn edgeless_host_does_not_stitch() {
        let h = Hypergraph::empty(36, 3).unwrap();
        assert_eq!(stitch_cycle(&h, &blocks_of(36, 12), 2, &cfg(1)).unwrap(), None);
        assert_eq!(stitch_power_cycle(&h, &blocks_of(36, 12), 4, &cfg(1)).unwrap(), None);
    }

    #[test]
    fn stitch_preconditions() {
        let h = Hypergraph::complete(20, 3).unwrap();
        assert!(matches!(
            stitch_cycle(
                &h,
                &Partition::from_blocks(20, vec![(0..9).collect(), (9..20).collect()]).unwrap(),
                1,
                &cfg(0)
            ),
            Err(Error::Divisibility { .. })
        ));
        assert!(stitch_cycle(&h, &blocks_of(20, 20), 2, &cfg(0)).is_err());
        assert!(stitch_cycle(&h, &blocks_of(20, 10), 3, &cfg(0)).is_err());
    }

    #[test]
    fn random_hosts_give_sound_certificates() {
        for seed in 0..8 {
            let h = gen_random(36, 3, 0.95, seed).unwrap();
            let p = blocks_of(36, 12);
            if let Some(c) = stitch_cycle(&h, &p, 2, &cfg(seed)).unwrap() {
                assert!(c.is_sound(&h, &p).unwrap());
            }
        }
    }

    #[test]
    fn power_cycles_stitch() {
        let h = Hypergraph::complete(30, 3).unwrap();
        let p = blocks_of(30, 10);
        let c = stitch_power_cycle(&h, &p, 4, &cfg(2)).unwrap().unwrap();
        assert!(validate_power_cycle(&h, &c.power_cycle().unwrap()).unwrap());
        assert!(is_respecting(&c.order, &p).unwrap());
        for (i, j) in c.junctions.iter().enumerate() {
            assert!(crate::paths::is_clique(&h, j));
            assert!(j.iter().all(|v| p.blocks()[i].contains(v)));
        }
        // one missing edge inside a block
        let g = h.without_edges(&[vec![0, 1, 2]]);
        for seed in 0..5 {
            if let Some(c) = stitch_power_cycle(&g, &p, 4, &cfg(seed)).unwrap() {
                assert!(c.is_sound(&g, &p).unwrap());
            }
        }
        // t = k reduces to a tight cycle
        let c = stitch_power_cycle(&h, &p, 3, &cfg(4)).unwrap().unwrap();
        let tight = EllCycle::new(3, 2, c.order.clone()).unwrap();
        assert!(validate_ell_cycle(&h, &tight).unwrap());
    }

    #[test]
    fn respecting_examples() {
        let order: Vec<Vertex> = (0..6).collect();
        let p = Partition::from_blocks(6, vec![vec![0, 2, 4], vec![1, 3, 5]]).unwrap();
        assert!(!is_respecting(&order, &p).unwrap());
        // singletons in cycle order, forwards and backwards
        let order: Vec<Vertex> = vec![3, 0, 5, 1, 4, 2];
        let p = Partition::from_blocks(6, order.iter().map(|&v| vec![v]).collect()).unwrap();
        assert!(is_respecting(&order, &p).unwrap());
        let mut rev = order.clone();
        rev.reverse();
        assert!(is_respecting(&rev, &p).unwrap());
        // singletons out of cycle order
        let p = Partition::from_blocks(6, (0..6).map(|v| vec![v]).collect()).unwrap();
        assert!(!is_respecting(&order, &p).unwrap());
        // wrapping arc
        let p = Partition::from_blocks(6, vec![vec![5, 0], vec![1, 2], vec![3, 4]]).unwrap();
        assert!(is_respecting(&(0..6).collect::<Vec<_>>(), &p).unwrap());
        let p = Partition::from_blocks(6, vec![vec![5, 0], vec![3, 4], vec![1, 2]]).unwrap();
        assert!(is_respecting(&(0..6).collect::<Vec<_>>(), &p).unwrap());
        assert!(is_respecting(&[0, 1, 2], &p).is_err());
    }

    #[test]
    fn multiplicity_examples() {
        let c = EllCycle::new(2, 1, (0..6).collect()).unwrap();
        // (3,3): 6 starting points × 2 directions collapse in pairs
        let brute = {
            let mut set = HashSet::new();
            for start in 0..6 {
                for dir in [1, 5] {
                    let a: Vec<Vertex> = (0..3).map(|i| ((start + dir * i) % 6) as Vertex).collect();
                    let b: Vec<Vertex> = (3..6).map(|i| ((start + dir * i) % 6) as Vertex).collect();
                    let (mut a, mut b) = (a, b);
                    a.sort_unstable();
                    b.sort_unstable();
                    set.insert(vec![a, b]);
                }
            }
            set.len()
        };
        assert_eq!(respecting_multiplicity(&c, &[3, 3]).unwrap(), brute);
        assert_eq!(brute, 6);
        assert_eq!(respecting_multiplicity(&c, &[1; 6]).unwrap(), 12);
        assert_eq!(respecting_multiplicity(&c, &[6]).unwrap(), 1);
        for sizes in [vec![2, 4], vec![2, 2, 2], vec![1, 5]] {
            for part in respecting_partitions(c.order(), &sizes).unwrap() {
                let p = Partition::new(6, part, sizes.clone()).unwrap();
                assert!(is_respecting(c.order(), &p).unwrap());
            }
        }
    }

    #[test]
    fn edge_set_multiplicity_covers_private_reorderings() {
        // k = 4, ℓ = 1: positions 1, 2 of each stride block lie in one edge only
        let c = EllCycle::new(4, 1, (0..9).collect()).unwrap();
        let plain = respecting_multiplicity(&c, &[3, 3, 3]).unwrap();
        let all = respecting_multiplicity_of_edge_set(&c, &[3, 3, 3], 1000).unwrap();
        assert!(plain <= 18);
        assert!(all >= plain);
        assert!(respecting_multiplicity_of_edge_set(&c, &[3, 3, 3], 4).is_err());
        // tight cycles have no freedom
        let t = EllCycle::new(3, 2, (0..7).collect()).unwrap();
        assert_eq!(
            respecting_multiplicity_of_edge_set(&t, &[3, 4], 10).unwrap(),
            respecting_multiplicity(&t, &[3, 4]).unwrap()
        );
    }

    #[test]
    fn lower_bound_examples() {
        let b = lower_bound_count(4, &[2, 2], 64).unwrap();
        assert!((b.approx() - 0.75 * (-4f64).exp()).abs() < 1e-15);
        assert!((b.approx() - 0.013_736).abs() < 1e-6);
        let b = lower_bound_count(8, &[4, 4], 64).unwrap();
        assert!((b.approx() - 0.001_468).abs() < 1e-6);
        let b = lower_bound_count(7, &[7], 64).unwrap();
        assert!((b.approx() - (-7f64).exp() / 14.0).abs() < 1e-17);
        assert!(b.lo < b.hi);
        assert!(lower_bound_count(7, &[3, 3], 64).is_err());
    }

    #[test]
    fn pipeline_on_complete_host() {
        let h = Hypergraph::complete(36, 3).unwrap();
        let spec = GoodnessSpec::new(Rational64::new(1, 2), Rational64::new(1, 5)).unwrap();
        let cfg = PipelineConfig::new(Target::Cycle { ell: 2 }, 6, spec, 4);
        let rep = pipeline(&h, &cfg, &MixSchedule(9)).unwrap();
        assert_eq!(rep.goodness_fraction, 1.0);
        assert_eq!(rep.stitch_success_rate, Some(1.0));
        assert_eq!(rep.unsound, 0);
        assert_eq!(rep.samples.len(), 1);
        let again = pipeline(&h, &cfg, &MixSchedule(9)).unwrap();
        assert_eq!(rep.records, again.records);
        assert_eq!(
            serde_json::to_string(&rep).unwrap(),
            serde_json::to_string(&again).unwrap()
        );
    }

    #[test]
    fn pipeline_on_edgeless_host() {
        let h = Hypergraph::empty(36, 3).unwrap();
        let spec = GoodnessSpec::new(Rational64::new(1, 2), Rational64::new(1, 5)).unwrap();
        let mut cfg = PipelineConfig::new(Target::Cycle { ell: 2 }, 6, spec, 3);
        let rep = pipeline(&h, &cfg, &MixSchedule(1)).unwrap();
        assert_eq!(rep.goodness_fraction, 0.0);
        assert_eq!(rep.stitch_attempts, 0);
        cfg.stitch_all = true;
        let rep = pipeline(&h, &cfg, &MixSchedule(1)).unwrap();
        assert_eq!(rep.stitch_attempts, 3);
        assert_eq!(rep.stitch_successes, 0);
    }

    #[test]
    fn pipeline_exact_count_on_k8() {
        let h = Hypergraph::complete(8, 2).unwrap();
        let spec = GoodnessSpec::new(Rational64::new(1, 2), Rational64::new(1, 5)).unwrap();
        let mut cfg = PipelineConfig::new(Target::Cycle { ell: 1 }, 2, spec, 2);
        cfg.exact_nodes = Some(10_000_000);
        let rep = pipeline(&h, &cfg, &MixSchedule(3)).unwrap();
        assert_eq!(rep.exact_count.as_deref(), Some("2520"));
        assert!(rep.lower_bound.hi.to_f64().unwrap() <= 2520.0);
        cfg.exact_nodes = Some(10);
        let rep = pipeline(&h, &cfg, &MixSchedule(3)).unwrap();
        assert_eq!(rep.exact_count, None);
        assert!(rep.exact_note.unwrap().contains("exhausted"));
    }

    #[test]
    fn schedules_separate_stages() {
        let s = MixSchedule(5);
        assert_ne!(s.seed("partition", 0), s.seed("stitch", 0));
        assert_ne!(s.seed("partition", 0), s.seed("partition", 1));
        assert_eq!(s.seed("partition", 3), MixSchedule(5).seed("partition", 3));
    }
}
