//! Star-mesh transform under series/parallel rules.
//!
//! An `n`-leaf star is replaced by the complete graph on its leaves whose
//! pairwise net connectivities equal the star's leg-pair series values. The
//! net connectivity of a complete graph is itself defined through star-mesh
//! transforms: pick a pivot vertex, transform its sub-star into an
//! `(n−1)`-mesh, merge that mesh edgewise in parallel with the remaining
//! edges, and recurse down to a single edge. Solving therefore nests solves
//! of smaller stars inside every residual evaluation.
//!
//! Nested solves are warm-started from the last solution found at the same
//! position of the recursion tree (and reuse it outright when the legs are
//! bitwise unchanged). This keeps the nested cost to a few residual
//! evaluations per call instead of a full cold solve.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::broyden::{broyden, BroydenOptions};
use crate::weight::{snap_top, LinkWeight, RuleSystem, MAX_THETA};

pub const DEFAULT_N_MAX: usize = 11;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Residual ∞-norm accepted as converged.
    pub tol: f64,
    /// Step ∞-norm below which an iteration is considered stalled.
    pub step_tol: f64,
    pub max_iter: usize,
    /// Random restarts after the deterministic initial guess fails.
    pub restarts: usize,
    /// Forward-difference step in θ for the initial Jacobian.
    pub fd_step: f64,
    /// Largest star accepted.
    pub n_max: usize,
    /// Residual target for solves nested inside the connectivity recursion.
    pub nested_tol: f64,
    /// Iteration budget for warm-started nested solves before falling back
    /// to a cold start.
    pub warm_iter: usize,
    /// Recompute the residual of every top-level solution with a fresh
    /// solver state and reject it if above `tol`.
    pub verify: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            step_tol: 1e-12,
            max_iter: 200,
            restarts: 5,
            fd_step: 1e-6,
            n_max: DEFAULT_N_MAX,
            nested_tol: 1e-12,
            warm_iter: 25,
            verify: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("star with {n} legs exceeds the configured limit of {max}")]
    StarTooLarge { n: usize, max: usize },
    #[error("a star needs at least two legs, got {0}")]
    TooFewLegs(usize),
    #[error("vertex pair ({0}, {1}) is invalid for a {2}-vertex mesh")]
    BadPair(usize, usize, usize),
    #[error("candidate mesh has {found} vertices but the star has {expected} legs")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("star-mesh solve on {n} legs did not converge (best residual {best_residual:e})")]
    NonConvergence { n: usize, best_residual: f64 },
}

/// Star with an implicit root and `n ≥ 2` legs.
#[derive(Clone, Debug, PartialEq)]
pub struct StarGraph {
    legs: Vec<LinkWeight>,
}

impl StarGraph {
    pub fn new(legs: Vec<LinkWeight>) -> Result<Self, SolveError> {
        if legs.len() < 2 {
            return Err(SolveError::TooFewLegs(legs.len()));
        }
        Ok(Self { legs })
    }

    pub fn legs(&self) -> &[LinkWeight] {
        &self.legs
    }

    pub fn len(&self) -> usize {
        self.legs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.legs.is_empty()
    }
}

#[inline]
fn tri_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

/// Complete graph on `n` vertices, edges stored for `i < j` in
/// lexicographic order.
#[derive(Clone, Debug, PartialEq)]
pub struct MeshGraph {
    n: usize,
    weights: Vec<LinkWeight>,
}

impl MeshGraph {
    pub fn new(n: usize, weights: Vec<LinkWeight>) -> Result<Self, SolveError> {
        let expected = n * n.saturating_sub(1) / 2;
        if n < 2 || weights.len() != expected {
            return Err(SolveError::DimensionMismatch {
                expected,
                found: weights.len(),
            });
        }
        Ok(Self { n, weights })
    }

    pub fn uniform(n: usize, w: LinkWeight) -> Self {
        Self {
            n,
            weights: vec![w; n * (n - 1) / 2],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> LinkWeight {
        self.weights[tri_index(self.n, i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, w: LinkWeight) {
        let idx = tri_index(self.n, i, j);
        self.weights[idx] = w;
    }

    /// Edges as `((i, j), weight)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = ((usize, usize), LinkWeight)> + '_ {
        all_pairs(self.n).into_iter().zip(self.weights.iter().copied())
    }

    fn to_measure(&self, rules: RuleSystem) -> Tri {
        Tri {
            n: self.n,
            v: self.weights.iter().map(|w| w.measure(rules)).collect(),
        }
    }
}

/// Mesh in measure values, used inside the recursion.
#[derive(Clone, Debug)]
struct Tri {
    n: usize,
    v: Vec<f64>,
}

impl Tri {
    fn zeros(n: usize) -> Self {
        Tri {
            n,
            v: vec![0.0; n * (n - 1) / 2],
        }
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.v[tri_index(self.n, i, j)]
    }
}

#[inline]
fn measure_of_theta(rules: RuleSystem, theta: f64) -> f64 {
    match rules {
        RuleSystem::Classical => {
            let s = theta.sin();
            snap_top(2.0 * s * s)
        }
        RuleSystem::ConPT => snap_top((2.0 * theta).sin().max(0.0)),
    }
}

#[inline]
fn theta_of_measure(rules: RuleSystem, m: f64) -> f64 {
    let m = m.clamp(0.0, 1.0);
    match rules {
        RuleSystem::Classical => (m / 2.0).sqrt().asin(),
        RuleSystem::ConPT => m.asin() / 2.0,
    }
    .clamp(0.0, MAX_THETA)
}

fn pivot_of(n: usize, i: usize, j: usize) -> usize {
    (0..n).rev().find(|&v| v != i && v != j).expect("mesh has at least three vertices")
}

/// The series guess overshoots when parallel paths saturate the mesh; the
/// shrunken copies start inside the responsive region.
const INIT_SCALES: [f64; 3] = [1.0, 0.5, 0.25];

const POLISH_BELOW: f64 = 1e-5;
const POLISH_ATTEMPTS: usize = 2;

const SOLVE_MARK: u16 = u16::MAX;
const SUBSET_MARK: u16 = u16::MAX - 1;

struct Warm {
    legs: Vec<f64>,
    theta: Vec<f64>,
    jac: Option<DMatrix<f64>>,
}

fn mix(mut h: u64, x: u64) -> u64 {
    // splitmix64 finaliser over the running hash
    h ^= x.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(h << 6).wrapping_add(h >> 2);
    h = (h ^ (h >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    h ^ (h >> 31)
}

/// Solver state for one top-level request.
struct Engine<'a> {
    rules: RuleSystem,
    cfg: &'a SolverConfig,
    seed: u64,
    warm: HashMap<Vec<u16>, Warm>,
    path: Vec<u16>,
}

impl<'a> Engine<'a> {
    fn new(rules: RuleSystem, cfg: &'a SolverConfig, seed: u64) -> Self {
        Self {
            rules,
            cfg,
            seed,
            warm: HashMap::new(),
            path: Vec::new(),
        }
    }

    /// Net connectivity of `mesh` for each requested pair.
    fn connectivity(&mut self, mesh: &Tri, pairs: &[(usize, usize)]) -> Result<Vec<f64>, SolveError> {
        let n = mesh.n;
        if n == 2 {
            return Ok(vec![mesh.v[0]; pairs.len()]);
        }
        let mut out = vec![0.0; pairs.len()];
        for pivot in (0..n).rev().take(3) {
            let members: Vec<usize> = pairs
                .iter()
                .enumerate()
                .filter(|(_, &(i, j))| pivot_of(n, i, j) == pivot)
                .map(|(k, _)| k)
                .collect();
            if members.is_empty() {
                continue;
            }
            let rest: Vec<usize> = (0..n).filter(|&u| u != pivot).collect();
            let legs: Vec<f64> = rest.iter().map(|&u| mesh.get(pivot, u)).collect();
            self.path.push(pivot as u16);
            let sub = self.solve_legs(&legs, false)?;
            let m = n - 1;
            let mut comb = Tri::zeros(m);
            for a in 0..m {
                for b in a + 1..m {
                    comb.v[tri_index(m, a, b)] =
                        self.rules.parallel2(sub.get(a, b), mesh.get(rest[a], rest[b]));
                }
            }
            let shift = |v: usize| if v > pivot { v - 1 } else { v };
            let mapped: Vec<(usize, usize)> = members.iter().map(|&k| (shift(pairs[k].0), shift(pairs[k].1))).collect();
            let vals = self.connectivity(&comb, &mapped)?;
            self.path.pop();
            for (&k, v) in members.iter().zip(vals) {
                out[k] = v;
            }
        }
        Ok(out)
    }

    fn residual(&mut self, targets: &[f64], n: usize, theta: &[f64]) -> Result<Vec<f64>, SolveError> {
        let mesh = Tri {
            n,
            v: theta.iter().map(|&t| measure_of_theta(self.rules, t)).collect(),
        };
        let depth = self.path.len();
        let conn = self.connectivity(&mesh, &all_pairs(n));
        self.path.truncate(depth);
        match conn {
            Ok(conn) => Ok(targets.iter().zip(conn).map(|(t, c)| t - c).collect()),
            // a nested star without a solution rejects this candidate
            Err(SolveError::NonConvergence { .. }) => Ok(vec![f64::INFINITY; targets.len()]),
            Err(e) => Err(e),
        }
    }

    /// Mesh (in measure values) for a star with the given leg measures.
    fn solve_legs(&mut self, legs: &[f64], top: bool) -> Result<Tri, SolveError> {
        let rules = self.rules;
        let n = legs.len();
        if n == 2 {
            return Ok(Tri {
                n: 1 + 1,
                v: vec![rules.series2(legs[0], legs[1])],
            });
        }
        let active: Vec<usize> = (0..n).filter(|&k| legs[k] > 0.0).collect();
        if active.len() < n {
            // zero legs decouple: their mesh edges are zero
            let mut out = Tri::zeros(n);
            if active.len() >= 2 {
                let sub_legs: Vec<f64> = active.iter().map(|&k| legs[k]).collect();
                self.path.push(SUBSET_MARK);
                let sub = self.solve_legs(&sub_legs, top)?;
                self.path.pop();
                for a in 0..active.len() {
                    for b in a + 1..active.len() {
                        out.v[tri_index(n, active[a], active[b])] = sub.get(a, b);
                    }
                }
            }
            return Ok(out);
        }

        self.path.push(SOLVE_MARK);
        let key = self.path.clone();
        let depth = self.path.len();
        let previous = self.warm.remove(&key);
        if let Some(w) = &previous {
            if w.legs == legs {
                let sol = Tri {
                    n,
                    v: w.theta.iter().map(|&t| measure_of_theta(rules, t)).collect(),
                };
                self.warm.insert(key, previous.unwrap());
                self.path.pop();
                return Ok(sol);
            }
        }

        let pairs = all_pairs(n);
        let targets: Vec<f64> = pairs.iter().map(|&(i, j)| rules.series2(legs[i], legs[j])).collect();
        let accept = self.cfg.tol;
        let base = BroydenOptions {
            tol: if top { self.cfg.tol } else { self.cfg.nested_tol },
            step_tol: self.cfg.step_tol,
            max_iter: self.cfg.max_iter,
            fd_step: self.cfg.fd_step,
            lower: 0.0,
            upper: MAX_THETA,
        };

        let mut starts: Vec<(Vec<f64>, Option<DMatrix<f64>>, usize)> = Vec::new();
        if let Some(w) = previous.filter(|w| w.theta.len() == targets.len()) {
            starts.push((w.theta, w.jac, self.cfg.warm_iter));
        }
        let init: Vec<f64> = targets.iter().map(|&t| theta_of_measure(rules, t)).collect();
        for scale in INIT_SCALES {
            starts.push((init.iter().map(|t| t * scale).collect(), None, self.cfg.max_iter));
        }

        let mut best = f64::INFINITY;
        let mut found = None;
        let mut restart = 0usize;
        let mut polished = 0usize;
        let mut polish: Option<Vec<f64>> = None;
        let mut idx = 0usize;
        loop {
            let (x0, jac0, max_iter) = if let Some(x) = polish.take() {
                (x, None, self.cfg.max_iter)
            } else if idx < starts.len() {
                let s = std::mem::take(&mut starts[idx]);
                idx += 1;
                (s.0, s.1, s.2)
            } else if restart < self.cfg.restarts {
                let mut h = mix(self.seed, restart as u64);
                for &k in &key {
                    h = mix(h, u64::from(k));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(h);
                restart += 1;
                let x0 = (0..targets.len()).map(|_| rng.random_range(0.1..MAX_THETA - 0.1)).collect();
                (x0, None, self.cfg.max_iter)
            } else {
                break;
            };
            let opts = BroydenOptions { max_iter, ..base };
            let mut f = |x: &[f64]| self.residual(&targets, n, x);
            let run = broyden(&mut f, &x0, jac0, &opts);
            self.path.truncate(depth);
            match run {
                Ok(run) if run.converged || run.residual <= accept => {
                    found = Some(run);
                    break;
                }
                Ok(run) => {
                    best = best.min(run.residual);
                    if run.residual < POLISH_BELOW && polished < POLISH_ATTEMPTS {
                        // stalled close to a root: retry from there with a fresh Jacobian
                        polished += 1;
                        polish = Some(run.x);
                    }
                }
                Err(SolveError::NonConvergence { best_residual, .. }) => best = best.min(best_residual),
                Err(e) => {
                    self.path.pop();
                    return Err(e);
                }
            }
        }
        self.path.pop();
        let Some(run) = found else {
            return Err(SolveError::NonConvergence { n, best_residual: best });
        };
        let sol = Tri {
            n,
            v: run.x.iter().map(|&t| measure_of_theta(rules, t)).collect(),
        };
        self.warm.insert(
            key,
            Warm {
                legs: legs.to_vec(),
                theta: run.x,
                jac: run.jac,
            },
        );
        Ok(sol)
    }
}

/// Net connectivity between mesh vertices `i` and `j` under `rules`.
pub fn pairwise_connectivity(mesh: &MeshGraph, rules: RuleSystem, i: usize, j: usize) -> Result<f64, SolveError> {
    pairwise_connectivity_with(mesh, rules, i, j, &SolverConfig::default())
}

pub fn pairwise_connectivity_with(
    mesh: &MeshGraph,
    rules: RuleSystem,
    i: usize,
    j: usize,
    cfg: &SolverConfig,
) -> Result<f64, SolveError> {
    let n = mesh.n();
    if i == j || i >= n || j >= n {
        return Err(SolveError::BadPair(i, j, n));
    }
    if n > cfg.n_max + 1 {
        return Err(SolveError::StarTooLarge { n: n - 1, max: cfg.n_max });
    }
    let mut engine = Engine::new(rules, cfg, 0);
    Ok(engine.connectivity(&mesh.to_measure(rules), &[(i, j)])?[0])
}

/// `series(legᵢ, legⱼ) − net(i, j)` for every pair `i < j`, in the rule
/// system's measure.
pub fn star_mesh_residual(star: &StarGraph, candidate: &MeshGraph, rules: RuleSystem) -> Result<Vec<f64>, SolveError> {
    star_mesh_residual_with(star, candidate, rules, &SolverConfig::default())
}

pub fn star_mesh_residual_with(
    star: &StarGraph,
    candidate: &MeshGraph,
    rules: RuleSystem,
    cfg: &SolverConfig,
) -> Result<Vec<f64>, SolveError> {
    let n = star.len();
    if candidate.n() != n {
        return Err(SolveError::DimensionMismatch {
            expected: n,
            found: candidate.n(),
        });
    }
    let legs: Vec<f64> = star.legs.iter().map(|w| w.measure(rules)).collect();
    let mut engine = Engine::new(rules, cfg, 0);
    let mesh = candidate.to_measure(rules);
    let conn = engine.connectivity(&mesh, &all_pairs(n))?;
    Ok(all_pairs(n)
        .into_iter()
        .zip(conn)
        .map(|((i, j), c)| rules.series2(legs[i], legs[j]) - c)
        .collect())
}

/// Solves the star-mesh transform of `star` with the default configuration.
pub fn solve_star_mesh(star: &StarGraph, rules: RuleSystem, seed: u64) -> Result<MeshGraph, SolveError> {
    solve_star_mesh_with(star, rules, seed, &SolverConfig::default())
}

pub fn solve_star_mesh_with(
    star: &StarGraph,
    rules: RuleSystem,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<MeshGraph, SolveError> {
    let legs: Vec<f64> = star.legs.iter().map(|w| w.measure(rules)).collect();
    let sol = solve_measures(&legs, rules, seed, cfg)?;
    Ok(MeshGraph {
        n: star.len(),
        weights: sol
            .into_iter()
            .map(|m| LinkWeight::from_theta(theta_of_measure(rules, m)).expect("θ clamped into range"))
            .collect(),
    })
}

/// Star-mesh solve on leg measure values; returns the mesh measures for the
/// pairs `i < j` in lexicographic order.
pub(crate) fn solve_measures(legs: &[f64], rules: RuleSystem, seed: u64, cfg: &SolverConfig) -> Result<Vec<f64>, SolveError> {
    let n = legs.len();
    if n < 2 {
        return Err(SolveError::TooFewLegs(n));
    }
    if n > cfg.n_max {
        return Err(SolveError::StarTooLarge { n, max: cfg.n_max });
    }
    if n == 2 {
        return Ok(vec![rules.series2(legs[0], legs[1])]);
    }
    let mut engine = Engine::new(rules, cfg, seed);
    let sol = engine.solve_legs(legs, true)?;
    if cfg.verify {
        let mut fresh = Engine::new(rules, cfg, 0);
        let conn = fresh.connectivity(&sol, &all_pairs(n))?;
        let residual = all_pairs(n)
            .into_iter()
            .zip(conn)
            .fold(0.0f64, |m, ((i, j), c)| m.max((rules.series2(legs[i], legs[j]) - c).abs()));
        if residual > cfg.tol {
            return Err(SolveError::NonConvergence {
                n,
                best_residual: residual,
            });
        }
    }
    Ok(sol.v)
}
