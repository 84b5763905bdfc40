//! Classical ground truth: exact enumeration over link states and Monte
//! Carlo with union-find.

use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::network::{Network, NodeId};

pub const MAX_ENUM_LINKS: usize = 24;
pub const DEFAULT_TRIALS: u64 = 50_000;
const BLOCK: u64 = 4_096;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("exact enumeration is limited to {max} links, network has {links}")]
    TooManyLinks { links: usize, max: usize },
    #[error("network needs both boundaries set")]
    MissingBoundary,
    #[error("at least one trial is required")]
    NoTrials,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossingSample {
    pub trials: u64,
    pub hits: u64,
    pub estimate: f64,
    pub stderr: f64,
}

impl CrossingSample {
    fn new(trials: u64, hits: u64) -> Self {
        let estimate = hits as f64 / trials as f64;
        Self {
            trials,
            hits,
            estimate,
            stderr: (estimate * (1.0 - estimate) / trials as f64).sqrt(),
        }
    }
}

/// Network relabelled onto `0..n` with boundary flags.
struct Compact {
    n: usize,
    links: Vec<(usize, usize, f64)>,
    side: Vec<u8>,
}

const SIDE_A: u8 = 1;
const SIDE_B: u8 = 2;

impl Compact {
    fn new(net: &Network) -> Result<Self, OracleError> {
        if !net.has_boundaries() {
            return Err(OracleError::MissingBoundary);
        }
        let index: BTreeMap<NodeId, usize> = net.nodes().iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let mut side = vec![0u8; index.len()];
        for id in net.boundary_a() {
            side[index[id]] = SIDE_A;
        }
        for id in net.boundary_b() {
            side[index[id]] = SIDE_B;
        }
        let links = net.links().iter().map(|l| (index[&l.a], index[&l.b], l.w.p())).collect();
        Ok(Self { n: index.len(), links, side })
    }

    fn bfs(&self, open: &[bool]) -> bool {
        let mut adj = vec![Vec::new(); self.n];
        for (&(a, b, _), &o) in self.links.iter().zip(open) {
            if o {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        let mut seen: Vec<bool> = self.side.iter().map(|&s| s == SIDE_A).collect();
        let mut queue: VecDeque<usize> = (0..self.n).filter(|&i| seen[i]).collect();
        while let Some(u) = queue.pop_front() {
            if self.side[u] == SIDE_B {
                return true;
            }
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        false
    }
}

/// Disjoint-set forest with path halving and union by size.
struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn reset(&mut self) {
        for (i, p) in self.parent.iter_mut().enumerate() {
            *p = i;
        }
        self.size.fill(1);
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

/// Crossing test by union-find; the two boundaries become two extra
/// vertices `n` and `n + 1`.
fn crosses_uf(c: &Compact, uf: &mut UnionFind, open: impl Iterator<Item = bool>) -> bool {
    uf.reset();
    let (a, b) = (c.n, c.n + 1);
    for (i, &s) in c.side.iter().enumerate() {
        match s {
            SIDE_A => uf.union(i, a),
            SIDE_B => uf.union(i, b),
            _ => {}
        }
    }
    for (&(x, y, _), o) in c.links.iter().zip(open) {
        if o {
            uf.union(x, y);
        }
    }
    uf.find(a) == uf.find(b)
}

/// Whether the open links (one flag per link, in link order) join the two
/// boundaries, by breadth-first search.
pub fn crossing_bfs(net: &Network, open: &[bool]) -> Result<bool, OracleError> {
    Ok(Compact::new(net)?.bfs(open))
}

/// Same question as [`crossing_bfs`], answered with union-find.
pub fn crossing_union_find(net: &Network, open: &[bool]) -> Result<bool, OracleError> {
    let c = Compact::new(net)?;
    let mut uf = UnionFind::new(c.n + 2);
    Ok(crosses_uf(&c, &mut uf, open.iter().copied()))
}

/// Exact classical sponge-crossing probability: sums the probability of
/// every open/closed link configuration that contains a boundary-to-boundary
/// path.
pub fn brute_force_sc(net: &Network) -> Result<f64, OracleError> {
    let c = Compact::new(net)?;
    let e = c.links.len();
    if e > MAX_ENUM_LINKS {
        return Err(OracleError::TooManyLinks {
            links: e,
            max: MAX_ENUM_LINKS,
        });
    }
    let total: u64 = 1 << e;
    let chunk = total.min(1 << 12);
    let partial: Vec<f64> = (0..total / chunk)
        .into_par_iter()
        .map(|block| {
            let mut open = vec![false; e];
            let mut sum = 0.0;
            for mask in block * chunk..(block + 1) * chunk {
                let mut prob = 1.0;
                for (i, o) in open.iter_mut().enumerate() {
                    *o = mask >> i & 1 == 1;
                    let p = c.links[i].2;
                    prob *= if *o { p } else { 1.0 - p };
                }
                if prob > 0.0 && c.bfs(&open) {
                    sum += prob;
                }
            }
            sum
        })
        .collect();
    Ok(partial.iter().sum::<f64>().min(1.0))
}

fn block_seed(seed: u64, block: u64) -> u64 {
    let mut z = seed ^ block.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Monte Carlo estimate of the classical sponge-crossing probability. Each
/// trial opens every link independently with its `p`.
pub fn monte_carlo_sc(net: &Network, trials: u64, seed: u64) -> Result<CrossingSample, OracleError> {
    if trials == 0 {
        return Err(OracleError::NoTrials);
    }
    let c = Compact::new(net)?;
    let blocks = trials.div_ceil(BLOCK);
    let hits: u64 = (0..blocks)
        .into_par_iter()
        .map(|block| {
            let mut rng = ChaCha8Rng::seed_from_u64(block_seed(seed, block));
            let mut uf = UnionFind::new(c.n + 2);
            let count = BLOCK.min(trials - block * BLOCK);
            let mut hits = 0u64;
            for _ in 0..count {
                let open = c.links.iter().map(|&(_, _, p)| rng.random::<f64>() < p);
                if crosses_uf(&c, &mut uf, open) {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    Ok(CrossingSample::new(trials, hits))
}
