#![allow(dead_code)]

use std::f64::consts::FRAC_PI_4;

use conpt::{build_lattice, sponge_crossing, Curve, LatticeKind, LatticeSpec, LinkWeight, Network, RuleSystem};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Connected graph on up to `max_nodes` nodes with at most `max_links`
/// distinct links and uniform random θ; boundaries are node 0 and node n−1.
pub fn random_network(seed: u64, max_nodes: u32, max_links: usize) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=max_nodes);
    let mut net = Network::new();
    for id in 0..n {
        net.add_node(id);
    }
    let theta = |rng: &mut ChaCha8Rng| LinkWeight::from_theta(rng.random_range(0.0..=FRAC_PI_4)).unwrap();
    let mut pairs = Vec::new();
    for v in 1..n {
        let u = rng.random_range(0..v);
        pairs.push((u, v));
    }
    let mut rest: Vec<(u32, u32)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).filter(|p| !pairs.contains(p)).collect();
    rest.shuffle(&mut rng);
    let extra = rng.random_range(0..=max_links.saturating_sub(pairs.len()).min(rest.len()));
    pairs.extend(rest.into_iter().take(extra));
    for (a, b) in pairs {
        let w = theta(&mut rng);
        net.add_link(a, b, w).unwrap();
    }
    net.set_boundaries([0], [n - 1]).unwrap();
    net
}

pub const THETA_UNITS: f64 = FRAC_PI_4;

/// ConPT star-mesh sweep of one lattice kind: one curve per size over a
/// grid in θ-units, each point averaged over `runs` orders.
pub fn conpt_sweep(kind: LatticeKind, sizes: &[usize], grid: &[f64], runs: usize, seed: u64) -> Vec<Curve> {
    sizes
        .iter()
        .map(|&l| {
            let spec = LatticeSpec::new(kind, l).unwrap();
            let ys = grid
                .iter()
                .map(|&x| {
                    let net = build_lattice(spec, LinkWeight::from_theta(x * THETA_UNITS).unwrap()).unwrap();
                    let est = sponge_crossing(&net, RuleSystem::ConPT, runs, seed).unwrap();
                    assert!(est.succeeded() > 0, "{kind:?} L={l} x={x}: no run succeeded");
                    est.mean
                })
                .collect();
            Curve::new(format!("{}-L{l}", kind.name()), l as f64, grid.to_vec(), ys).unwrap()
        })
        .collect()
}

pub fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect()
}

pub fn p_to_units(p: f64) -> f64 {
    LinkWeight::from_p(p).unwrap().theta_units()
}
