//! Host families for experiments.

use clap::ValueEnum;
use hypercount::factors::{FactorDecomposition, FactorSpec};
use hypercount::paths::{EllCycle, EllPath};
use hypercount::{gen_random, Hypergraph, Result, Vertex};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Complete,
    Binomial,
    PlantedCycle,
    PlantedPath,
    PlantedFactor,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Planted {
    Cycle { ell: usize, order: Vec<Vertex> },
    Path { ell: usize, order: Vec<Vertex> },
    Factor { t: usize, copies: Vec<Vec<Vertex>> },
}

fn shuffled(n: usize, seed: u64) -> Vec<Vertex> {
    let mut order: Vec<Vertex> = (0..n as Vertex).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order
}

/// A Hamilton ℓ-cycle on a random vertex order plus binomial noise of density `p`.
pub fn planted_cycle(n: usize, k: usize, ell: usize, p: f64, seed: u64) -> Result<(Hypergraph, EllCycle)> {
    let cycle = EllCycle::new(k, ell, shuffled(n, seed))?;
    let host = gen_random(n, k, p, seed ^ 1)?.with_edges(cycle.edges())?;
    Ok((host, cycle))
}

/// A Hamilton ℓ-path on a random vertex order plus binomial noise of density `p`.
pub fn planted_path(n: usize, k: usize, ell: usize, p: f64, seed: u64) -> Result<(Hypergraph, EllPath)> {
    let path = EllPath::new(k, ell, shuffled(n, seed))?;
    let host = gen_random(n, k, p, seed ^ 1)?.with_edges(path.edges())?;
    Ok((host, path))
}

/// Copies of `spec` on consecutive chunks of a random vertex order plus
/// binomial noise of density `p`.
pub fn planted_factor(n: usize, spec: &FactorSpec, p: f64, seed: u64) -> Result<(Hypergraph, FactorDecomposition)> {
    let t = spec.t();
    if !n.is_multiple_of(t) {
        return Err(hypercount::Error::Divisibility {
            what: "planted factor needs t | n".into(),
            divisor: t,
            value: n,
        });
    }
    let copies: Vec<Vec<Vertex>> = shuffled(n, seed).chunks(t).map(<[Vertex]>::to_vec).collect();
    let edges: Vec<Vec<Vertex>> = copies
        .iter()
        .flat_map(|c| {
            spec.pattern()
                .edges()
                .iter()
                .map(move |e| e.iter().map(|&x| c[x as usize]).collect())
        })
        .collect();
    let host = gen_random(n, spec.k(), p, seed ^ 1)?.with_edges(edges)?;
    Ok((host, FactorDecomposition { copies }))
}

/// The complete pattern `K_t^{(k)}`, a single edge when `t = k`.
pub fn clique_pattern(t: usize, k: usize) -> Result<FactorSpec> {
    FactorSpec::new(Hypergraph::complete(t, k)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use hypercount::factors::verify_factor;
    use hypercount::paths::{validate_ell_cycle, validate_ell_path};

    #[test]
    fn planted_structures_validate() {
        let (h, c) = planted_cycle(12, 3, 2, 0.0, 5).unwrap();
        assert_eq!(h.edge_count(), 12);
        assert!(validate_ell_cycle(&h, &c).unwrap());
        let (h, c) = planted_cycle(12, 3, 1, 0.2, 5).unwrap();
        assert!(validate_ell_cycle(&h, &c).unwrap());
        let (h, q) = planted_path(11, 3, 1, 0.0, 2).unwrap();
        assert_eq!(h.edge_count(), 5);
        assert!(validate_ell_path(&h, &q).unwrap());
        let spec = clique_pattern(4, 3).unwrap();
        let (h, f) = planted_factor(12, &spec, 0.0, 9).unwrap();
        assert_eq!(h.edge_count(), 12);
        assert!(verify_factor(&h, &spec, &f));
        assert!(planted_factor(10, &spec, 0.0, 9).is_err());
    }

    #[test]
    fn seeds_are_reproducible() {
        assert_eq!(
            planted_cycle(12, 3, 2, 0.3, 5).unwrap(),
            planted_cycle(12, 3, 2, 0.3, 5).unwrap()
        );
        assert_ne!(
            planted_cycle(12, 3, 2, 0.3, 5).unwrap().1,
            planted_cycle(12, 3, 2, 0.3, 6).unwrap().1
        );
    }
}
