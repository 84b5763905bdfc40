//! Two-terminal reduction by consecutive node degradation and the
//! sponge-crossing estimate built on it.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::network::{contract_boundaries, Network, NetworkError, NodeId};
use crate::starmesh::{solve_measures, SolveError, SolverConfig};
use crate::weight::{LinkWeight, RuleSystem};

pub const DEFAULT_RUNS: usize = 7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReductionError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("node {0} is not in the network")]
    UnknownNode(NodeId),
    #[error("terminals must be two distinct nodes of the network")]
    BadTerminals,
    #[error("node {0} is a terminal and cannot be degraded")]
    TerminalDegraded(NodeId),
    #[error("order must list every non-terminal node exactly once")]
    BadOrder,
    #[error("degrading node {node}: {source}")]
    Solve { node: NodeId, source: SolveError },
    #[error("runs must be at least 1")]
    NoRuns,
}

/// Failed reduction: nodes degraded before the failure and their star sizes.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{error} (after {} degraded nodes)", .completed.len())]
pub struct ReductionFailure {
    pub error: ReductionError,
    pub completed: Vec<NodeId>,
    pub star_sizes: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReductionTrace {
    /// Non-terminal nodes in the order they were removed.
    pub order: Vec<NodeId>,
    pub final_theta: LinkWeight,
    /// Star size met at each step; 0 for nodes dropped as disconnected.
    pub per_step_max_degree: Vec<usize>,
}

/// How the next node to degrade is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OrderPolicy {
    /// Smallest current degree first, ties broken by a random permutation.
    #[default]
    MinDegree,
    /// Random permutation order, except that nodes of degree ≤ 2 go first.
    Random,
}

impl OrderPolicy {
    pub fn name(self) -> &'static str {
        match self {
            OrderPolicy::MinDegree => "min-degree",
            OrderPolicy::Random => "random",
        }
    }
}

impl fmt::Display for OrderPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OrderPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "min-degree" | "mindeg" => Ok(OrderPolicy::MinDegree),
            "random" => Ok(OrderPolicy::Random),
            _ => Err(format!("unknown order policy '{s}' (expected min-degree or random)")),
        }
    }
}

/// Measure-valued simple graph with parallel links merged.
#[derive(Clone, Debug)]
struct WorkGraph {
    rules: RuleSystem,
    adj: BTreeMap<NodeId, BTreeMap<NodeId, f64>>,
}

impl WorkGraph {
    fn from_network(net: &Network, rules: RuleSystem) -> Self {
        let mut g = WorkGraph {
            rules,
            adj: net.nodes().iter().map(|&id| (id, BTreeMap::new())).collect(),
        };
        for l in net.links() {
            g.join(l.a, l.b, l.w.measure(rules));
        }
        g
    }

    /// Adds `m` in parallel to the link `a`–`b`.
    fn join(&mut self, a: NodeId, b: NodeId, m: f64) {
        if a == b || m <= 0.0 {
            return;
        }
        let rules = self.rules;
        let cur = self.adj.get(&a).and_then(|e| e.get(&b)).copied();
        let v = match cur {
            Some(c) => rules.parallel2(c, m),
            None => m,
        };
        self.adj.entry(a).or_default().insert(b, v);
        self.adj.entry(b).or_default().insert(a, v);
    }

    fn degree(&self, v: NodeId) -> usize {
        self.adj.get(&v).map_or(0, BTreeMap::len)
    }

    fn remove(&mut self, v: NodeId) -> BTreeMap<NodeId, f64> {
        let legs = self.adj.remove(&v).unwrap_or_default();
        for u in legs.keys() {
            if let Some(e) = self.adj.get_mut(u) {
                e.remove(&v);
            }
        }
        legs
    }

    fn has_unit_leg(&self, v: NodeId) -> bool {
        self.adj.get(&v).is_some_and(|e| e.values().any(|&m| m >= 1.0))
    }

    /// Removes `v`, replacing its star by the equivalent mesh. Returns the
    /// star size.
    fn degrade(&mut self, v: NodeId, seed: u64, cfg: &SolverConfig) -> Result<usize, SolveError> {
        let legs = self.remove(v);
        let size = legs.len();
        if let Some((&keep, _)) = legs.iter().find(|(_, &m)| m >= 1.0) {
            // a unit leg identifies v with that neighbour
            for (&u, &m) in &legs {
                self.join(keep, u, m);
            }
            return Ok(size);
        }
        if size < 2 {
            return Ok(size);
        }
        let ids: Vec<NodeId> = legs.keys().copied().collect();
        let measures: Vec<f64> = legs.values().copied().collect();
        let mesh = solve_measures(&measures, self.rules, seed, cfg)?;
        let mut k = 0;
        for i in 0..ids.len() {
            for j in i + 1..ids.len() {
                self.join(ids[i], ids[j], mesh[k]);
                k += 1;
            }
        }
        Ok(size)
    }

    /// Nodes reachable from either terminal.
    fn reachable(&self, s: NodeId, t: NodeId) -> BTreeSet<NodeId> {
        let mut seen = BTreeSet::from([s, t]);
        let mut queue = VecDeque::from([s, t]);
        while let Some(u) = queue.pop_front() {
            for &v in self.adj.get(&u).into_iter().flat_map(BTreeMap::keys) {
                if seen.insert(v) {
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    fn to_network(&self, template: &Network) -> Result<Network, NetworkError> {
        let mut out = Network::new();
        for &id in self.adj.keys() {
            out.add_node(id);
        }
        for (&a, e) in &self.adj {
            for (&b, &m) in e.range(a + 1..) {
                let w = LinkWeight::from_measure(self.rules, m.min(1.0)).unwrap_or(LinkWeight::SINGLET);
                out.add_link(a, b, w)?;
            }
        }
        let keep = |set: &BTreeSet<NodeId>| set.iter().copied().filter(|id| self.adj.contains_key(id)).collect::<Vec<_>>();
        out.set_boundaries(keep(template.boundary_a()), keep(template.boundary_b()))?;
        Ok(out)
    }
}

fn step_seed(seed: u64, step: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(step as u64)
}

/// Removes `v` from `net`: a dangling or isolated node is deleted, a node
/// with a singlet leg is merged into that neighbour, and otherwise its star
/// is replaced by the star-mesh equivalent. Parallel links are merged.
pub fn degrade_node(net: &Network, v: NodeId, rules: RuleSystem, seed: u64) -> Result<Network, ReductionError> {
    degrade_node_with(net, v, rules, seed, &SolverConfig::default())
}

pub fn degrade_node_with(
    net: &Network,
    v: NodeId,
    rules: RuleSystem,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<Network, ReductionError> {
    if !net.nodes().contains(&v) {
        return Err(ReductionError::UnknownNode(v));
    }
    let mut g = WorkGraph::from_network(net, rules);
    g.degrade(v, seed, cfg).map_err(|source| ReductionError::Solve { node: v, source })?;
    Ok(g.to_network(net)?)
}

struct Reducer<'a> {
    g: WorkGraph,
    s: NodeId,
    t: NodeId,
    cfg: &'a SolverConfig,
    seed: u64,
    order: Vec<NodeId>,
    sizes: Vec<usize>,
}

impl Reducer<'_> {
    fn new<'a>(net: &Network, (s, t): (NodeId, NodeId), rules: RuleSystem, seed: u64, cfg: &'a SolverConfig) -> Result<Reducer<'a>, ReductionError> {
        if s == t || !net.nodes().contains(&s) || !net.nodes().contains(&t) {
            return Err(ReductionError::BadTerminals);
        }
        let mut r = Reducer {
            g: WorkGraph::from_network(net, rules),
            s,
            t,
            cfg,
            seed,
            order: Vec::new(),
            sizes: Vec::new(),
        };
        r.prune();
        Ok(r)
    }

    fn fail(&self, error: ReductionError) -> ReductionFailure {
        ReductionFailure {
            error,
            completed: self.order.clone(),
            star_sizes: self.sizes.clone(),
        }
    }

    fn step(&mut self, v: NodeId) -> Result<(), ReductionFailure> {
        if v == self.s || v == self.t {
            return Err(self.fail(ReductionError::TerminalDegraded(v)));
        }
        if !self.g.adj.contains_key(&v) {
            // already dropped as disconnected
            self.order.push(v);
            self.sizes.push(0);
            return Ok(());
        }
        let seed = step_seed(self.seed, self.order.len());
        let size = self
            .g
            .degrade(v, seed, self.cfg)
            .map_err(|source| self.fail(ReductionError::Solve { node: v, source }))?;
        self.order.push(v);
        self.sizes.push(size);
        if size > 2 {
            // zero mesh edges may cut pieces off both terminals
            self.prune();
        }
        Ok(())
    }

    fn prune(&mut self) {
        let keep = self.g.reachable(self.s, self.t);
        let gone: Vec<NodeId> = self.g.adj.keys().copied().filter(|id| !keep.contains(id)).collect();
        for id in gone {
            self.g.remove(id);
        }
    }

    fn finish(self) -> ReductionTrace {
        let m = self.g.adj.get(&self.s).and_then(|e| e.get(&self.t)).copied().unwrap_or(0.0);
        ReductionTrace {
            order: self.order,
            final_theta: LinkWeight::from_measure(self.g.rules, m.min(1.0)).unwrap_or(LinkWeight::SINGLET),
            per_step_max_degree: self.sizes,
        }
    }
}

/// Degrades the non-terminal nodes of `net` in the given order and returns
/// the single remaining link between `s` and `t`.
pub fn reduce_to_pair(
    net: &Network,
    terminals: (NodeId, NodeId),
    rules: RuleSystem,
    order: &[NodeId],
    seed: u64,
) -> Result<ReductionTrace, ReductionFailure> {
    reduce_to_pair_with(net, terminals, rules, order, seed, &SolverConfig::default())
}

pub fn reduce_to_pair_with(
    net: &Network,
    terminals: (NodeId, NodeId),
    rules: RuleSystem,
    order: &[NodeId],
    seed: u64,
    cfg: &SolverConfig,
) -> Result<ReductionTrace, ReductionFailure> {
    let no_trace = |error| ReductionFailure {
        error,
        completed: Vec::new(),
        star_sizes: Vec::new(),
    };
    let mut r = Reducer::new(net, terminals, rules, seed, cfg).map_err(no_trace)?;
    let listed: BTreeSet<NodeId> = order.iter().copied().collect();
    let expected: BTreeSet<NodeId> = net.nodes().iter().copied().filter(|&id| id != terminals.0 && id != terminals.1).collect();
    if listed.len() != order.len() || listed != expected {
        return Err(no_trace(ReductionError::BadOrder));
    }
    for &v in order {
        r.step(v)?;
    }
    Ok(r.finish())
}

/// Reduction where the order is chosen on the fly by `policy`. Nodes with a
/// singlet leg (exact merges) always go first.
pub fn reduce_with_policy(
    net: &Network,
    terminals: (NodeId, NodeId),
    rules: RuleSystem,
    policy: OrderPolicy,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<ReductionTrace, ReductionFailure> {
    let mut r = Reducer::new(net, terminals, rules, seed, cfg).map_err(|error| ReductionFailure {
        error,
        completed: Vec::new(),
        star_sizes: Vec::new(),
    })?;
    let mut perm: Vec<NodeId> = net.nodes().iter().copied().filter(|&id| id != terminals.0 && id != terminals.1).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut done = BTreeSet::new();
    while done.len() < perm.len() {
        let pending = perm.iter().copied().filter(|v| !done.contains(v));
        let next = {
            let g = &r.g;
            let rank = |v: NodeId| {
                if !g.adj.contains_key(&v) || g.has_unit_leg(v) {
                    0
                } else {
                    match (policy, g.degree(v)) {
                        (_, d) if d <= 2 => 1,
                        (OrderPolicy::MinDegree, d) => d,
                        (OrderPolicy::Random, _) => 3,
                    }
                }
            };
            // first pending node of least rank in permutation order
            pending.min_by_key(|&v| rank(v)).expect("pending nodes remain")
        };
        done.insert(next);
        r.step(next)?;
    }
    Ok(r.finish())
}

/// One reduction run of a sponge-crossing estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub run: usize,
    pub order_hash: u64,
    pub final_theta: LinkWeight,
    pub measure: f64,
    pub max_star: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpongeCrossingEstimate {
    pub mean: f64,
    pub std: f64,
    pub runs: usize,
    pub rules: RuleSystem,
    /// Successful runs, by run index.
    pub samples: Vec<RunRecord>,
    /// Failed runs: run index and the failure.
    pub failures: Vec<(usize, ReductionFailure)>,
}

impl SpongeCrossingEstimate {
    pub fn succeeded(&self) -> usize {
        self.samples.len()
    }

    /// Sample standard deviation of the final θ over successful runs.
    pub fn theta_std(&self) -> f64 {
        let mut v: Vec<f64> = self.samples.iter().map(|r| r.final_theta.theta()).collect();
        mean_std(&mut v).1
    }
}

/// Mean and sample standard deviation, summed in sorted order.
fn mean_std(v: &mut [f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn order_hash(order: &[NodeId]) -> u64 {
    // FNV-1a over the little-endian ids
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for id in order {
        for b in id.to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpongeOptions {
    pub runs: usize,
    pub policy: OrderPolicy,
    pub solver: SolverConfig,
}

impl Default for SpongeOptions {
    fn default() -> Self {
        Self {
            runs: DEFAULT_RUNS,
            policy: OrderPolicy::default(),
            solver: SolverConfig::default(),
        }
    }
}

/// Sponge-crossing measure between the two boundaries of `net`, averaged
/// over `runs` random degradation orders. Run `r` uses seed `seed + r`.
pub fn sponge_crossing(net: &Network, rules: RuleSystem, runs: usize, seed: u64) -> Result<SpongeCrossingEstimate, ReductionError> {
    sponge_crossing_with(net, rules, seed, &SpongeOptions { runs, ..SpongeOptions::default() })
}

pub fn sponge_crossing_with(net: &Network, rules: RuleSystem, seed: u64, opts: &SpongeOptions) -> Result<SpongeCrossingEstimate, ReductionError> {
    if opts.runs == 0 {
        return Err(ReductionError::NoRuns);
    }
    let contracted = contract_boundaries(net)?;
    let s = *net.boundary_a().iter().next().expect("boundary checked");
    let t = *net.boundary_b().iter().next().expect("boundary checked");
    let outcomes: Vec<(usize, Result<RunRecord, ReductionFailure>)> = (0..opts.runs)
        .into_par_iter()
        .map(|run| {
            let start = Instant::now();
            let res = reduce_with_policy(&contracted, (s, t), rules, opts.policy, seed.wrapping_add(run as u64), &opts.solver).map(|trace| RunRecord {
                run,
                order_hash: order_hash(&trace.order),
                final_theta: trace.final_theta,
                measure: trace.final_theta.measure(rules),
                max_star: trace.per_step_max_degree.iter().copied().max().unwrap_or(0),
                seconds: start.elapsed().as_secs_f64(),
            });
            (run, res)
        })
        .collect();
    let mut samples = Vec::new();
    let mut failures = Vec::new();
    for (run, res) in outcomes {
        match res {
            Ok(rec) => samples.push(rec),
            Err(f) => failures.push((run, f)),
        }
    }
    samples.sort_by_key(|r| r.run);
    failures.sort_by_key(|f| f.0);
    let mut values: Vec<f64> = samples.iter().map(|r| r.measure).collect();
    let (mean, std) = mean_std(&mut values);
    Ok(SpongeCrossingEstimate {
        mean,
        std,
        runs: opts.runs,
        rules,
        samples,
        failures,
    })
}

/// Per-run trace as CSV: run, order hash, final θ, wall time.
pub fn trace_csv(est: &SpongeCrossingEstimate) -> String {
    let mut out = String::from("run,order_hash,final_theta,wall_seconds\n");
    for r in &est.samples {
        out.push_str(&format!("{},{:016x},{:.15e},{:.6}\n", r.run, r.order_hash, r.final_theta.theta(), r.seconds));
    }
    out
}
