//! Command-line runner: parses arguments, runs one computation and writes a
//! CSV with a one-line `#` header.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use thiserror::Error;

use crate::bethe::{bethe_diluted_recursion, bethe_finite, bethe_fixed_point, BetheSpec};
use crate::network::{build_lattice, load_network, LatticeKind, LatticeSpec, Network};
use crate::oracle::{monte_carlo_sc, DEFAULT_TRIALS};
use crate::reduction::{sponge_crossing_with, OrderPolicy, SpongeCrossingEstimate, SpongeOptions, DEFAULT_RUNS};
use crate::scaling::{estimate_threshold_crossing, fit_power_law, literature_thresholds, turning_point, Curve, LATTICE_ROWS};
use crate::starmesh::SolverConfig;
use crate::weight::{LinkWeight, RuleSystem};

pub const DEFAULT_SEED: u64 = 1;
pub const THREADS_ENV: &str = "CONPT_THREADS";

pub const EXIT_PARSE: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;
pub const EXIT_IO: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Solver(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => EXIT_PARSE,
            CliError::Solver(_) => EXIT_SOLVER,
            CliError::Io { .. } => EXIT_IO,
        }
    }
}

fn parse_err(e: impl ToString) -> CliError {
    CliError::Parse(e.to_string())
}

/// `start:stop:step`, stop included only when it lands on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| ((self.start + i as f64 * self.step) * 1e12).round() / 1e12)
            .filter(|&x| x < self.stop || (x - self.stop).abs() <= 1e-9 * self.step)
            .collect()
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts[..] else {
            return Err(format!("grid `{s}` is not start:stop:step"));
        };
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("grid `{s}`: {e}"));
        let g = Grid {
            start: num(a)?,
            stop: num(b)?,
            step: num(c)?,
        };
        if !(g.start.is_finite() && g.stop.is_finite() && g.step.is_finite() && g.step > 0.0 && g.stop >= g.start) {
            return Err(format!("grid `{s}` needs finite start <= stop and step > 0"));
        }
        Ok(g)
    }
}

impl std::fmt::Display for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}

/// Integer list: `5`, `3,4,5` or `3..10` (inclusive).
#[derive(Clone, Debug, PartialEq)]
pub struct IntList(pub Vec<usize>);

impl FromStr for IntList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let int = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{s}`: {e}"));
        let mut out = Vec::new();
        for part in s.split(',') {
            if let Some((a, b)) = part.split_once("..") {
                let b = b.strip_prefix('=').unwrap_or(b);
                let (a, b) = (int(a)?, int(b)?);
                if a > b {
                    return Err(format!("empty range `{part}`"));
                }
                out.extend(a..=b);
            } else {
                out.push(int(part)?);
            }
        }
        out.sort_unstable();
        out.dedup();
        Ok(IntList(out))
    }
}

impl std::fmt::Display for IntList {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    /// p or c, by rule system
    Measure,
    /// θ / (π/4)
    Theta,
}

impl Axis {
    fn weight(self, rules: RuleSystem, x: f64) -> Result<LinkWeight, CliError> {
        match self {
            Axis::Measure => LinkWeight::from_measure(rules, x),
            Axis::Theta => LinkWeight::from_theta(x * std::f64::consts::FRAC_PI_4),
        }
        .map_err(|e| parse_err(format!("grid value {x}: {e}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FitKind {
    Crossing,
    Turning,
    Power,
}

#[derive(Parser, Debug)]
#[command(name = "conpt", version, about = "Sponge-crossing connectivity under classical and ConPT rules")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Reduce one network to its two terminals over several random orders.
    Reduce(ReduceArgs),
    /// Bethe-lattice sponge crossing over a grid of link values.
    Bethe(BetheArgs),
    /// Star-mesh sponge crossing on 2D lattices.
    LatticeSweep(SweepArgs),
    /// Classical Monte Carlo sponge crossing.
    Mc(McArgs),
    /// Crossing points, turning points or power laws from curve CSVs.
    Fit(FitArgs),
    /// Threshold table for Bethe degrees and 2D lattices.
    Table1(TableArgs),
}

#[derive(Args, Debug)]
pub struct Common {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SolverArgs {
    #[arg(long, default_value_t = DEFAULT_RUNS)]
    pub runs: usize,
    #[arg(long, default_value_t = OrderPolicy::MinDegree)]
    pub policy: OrderPolicy,
    /// Star-mesh residual tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Per-run timings and order hashes go here (not deterministic).
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

impl SolverArgs {
    fn options(&self) -> Result<SpongeOptions, CliError> {
        let mut solver = SolverConfig::default();
        if let Some(tol) = self.tol {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(parse_err(format!("--tol must be positive, got {tol}")));
            }
            solver.tol = tol;
        }
        if self.runs == 0 {
            return Err(parse_err("--runs must be at least 1"));
        }
        Ok(SpongeOptions {
            runs: self.runs,
            policy: self.policy,
            solver,
        })
    }

    fn echo(&self) -> Vec<(&'static str, String)> {
        vec![
            ("runs", self.runs.to_string()),
            ("policy", self.policy.to_string()),
            ("tol", self.tol.unwrap_or(SolverConfig::default().tol).to_string()),
        ]
    }
}

#[derive(Args, Debug)]
pub struct ReduceArgs {
    #[arg(long)]
    pub net: PathBuf,
    #[arg(long, default_value_t = RuleSystem::ConPT)]
    pub rules: RuleSystem,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct BetheArgs {
    #[arg(long, default_value_t = RuleSystem::ConPT)]
    pub rules: RuleSystem,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Finite lattice depth; infinite lattice when absent.
    #[arg(long)]
    pub layers: Option<usize>,
    /// Retained link fraction.
    #[arg(long, default_value_t = 1.0)]
    pub f: f64,
    #[arg(long)]
    pub grid: Grid,
    #[arg(long, value_enum, default_value_t = Axis::Measure)]
    pub axis: Axis,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, default_value_t = RuleSystem::ConPT)]
    pub rules: RuleSystem,
    #[arg(long, default_value_t = LatticeKind::Square)]
    pub lattice: LatticeKind,
    #[arg(long = "L", default_value = "3,4,5")]
    pub sizes: IntList,
    #[arg(long)]
    pub grid: Grid,
    #[arg(long, value_enum, default_value_t = Axis::Measure)]
    pub axis: Axis,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct McArgs {
    #[arg(long, default_value_t = LatticeKind::Square)]
    pub lattice: LatticeKind,
    #[arg(long = "L", default_value = "4,6,8,12")]
    pub sizes: IntList,
    /// Use this network instead of lattices.
    #[arg(long, conflicts_with = "sizes")]
    pub net: Option<PathBuf>,
    #[arg(long)]
    pub grid: Grid,
    #[arg(long, value_enum, default_value_t = Axis::Measure)]
    pub axis: Axis,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: u64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Curve CSV; `#` lines are skipped.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = FitKind::Crossing)]
    pub kind: FitKind,
    #[arg(long, default_value = "label")]
    pub label_col: String,
    /// Size column; otherwise the last number inside the label.
    #[arg(long)]
    pub size_col: Option<String>,
    #[arg(long, default_value = "x")]
    pub x_col: String,
    #[arg(long, default_value = "y")]
    pub y_col: String,
    /// Power-law window `lo:hi` on x.
    #[arg(long)]
    pub window: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct TableArgs {
    #[arg(long, default_value = "3..10")]
    pub k: IntList,
    #[command(flatten)]
    pub common: Common,
}

/// A CSV body plus the key=value echo that goes into its header line.
struct Output {
    command: &'static str,
    params: Vec<(&'static str, String)>,
    columns: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        String::new()
    }
}

impl Output {
    fn header(&self, seed: u64) -> String {
        let mut h = format!("# conpt {} command={} seed={seed}", env!("CARGO_PKG_VERSION"), self.command);
        for (k, v) in &self.params {
            let _ = write!(h, " {k}={v}");
        }
        h
    }

    fn render(&self, seed: u64) -> Result<Vec<u8>, CliError> {
        let mut text = self.header(seed).into_bytes();
        text.push(b'\n');
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(text);
        let io = |e: csv::Error| CliError::Io {
            path: PathBuf::from("<csv>"),
            source: std::io::Error::other(e),
        };
        w.write_record(&self.columns).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.into_inner().map_err(|e| CliError::Io {
            path: PathBuf::from("<csv>"),
            source: std::io::Error::other(e.to_string()),
        })
    }
}

fn temp_path(path: &Path) -> PathBuf {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!(".{name}.tmp{}", std::process::id()))
}

/// Writes through a temporary sibling and renames into place.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = temp_path(path);
    let io = |source| CliError::Io { path: path.to_path_buf(), source };
    std::fs::write(&tmp, bytes).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

fn emit(out: &Output, common: &Common, ok: Result<(), CliError>) -> Result<(), CliError> {
    let bytes = out.render(common.seed)?;
    match (&common.out, ok) {
        (Some(path), Ok(())) => write_atomic(path, &bytes),
        (Some(path), Err(e)) => {
            // keep what was computed, under the temporary name
            let tmp = temp_path(path);
            std::fs::write(&tmp, &bytes).map_err(|source| CliError::Io { path: tmp.clone(), source })?;
            eprintln!("partial output left in {}", tmp.display());
            Err(e)
        }
        (None, ok) => {
            use std::io::Write;
            std::io::stdout().write_all(&bytes).map_err(|source| CliError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            })?;
            ok
        }
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn read_network(path: &Path) -> Result<Network, CliError> {
    load_network(&read_text(path)?).map_err(|e| parse_err(format!("{}: {e}", path.display())))
}

fn reduce(a: &ReduceArgs) -> Result<(), CliError> {
    let net = read_network(&a.net)?;
    let opts = a.solver.options()?;
    let est = sponge_crossing_with(&net, a.rules, a.common.seed, &opts).map_err(|e| CliError::Solver(e.to_string()))?;
    let mut params = vec![("net", a.net.display().to_string()), ("rules", a.rules.name().to_string())];
    params.extend(a.solver.echo());
    let mut rows: Vec<(usize, Vec<String>)> = est
        .samples
        .iter()
        .map(|r| {
            let row = vec![
                r.run.to_string(),
                "ok".into(),
                format!("{:016x}", r.order_hash),
                num(r.final_theta.theta()),
                num(r.final_theta.theta_units()),
                num(r.measure),
                r.max_star.to_string(),
            ];
            (r.run, row)
        })
        .collect();
    for (run, f) in &est.failures {
        rows.push((*run, vec![run.to_string(), "failed".into(), String::new(), String::new(), String::new(), String::new(), String::new()]));
        eprintln!("run {run}: {}", f.error);
    }
    rows.sort_by_key(|r| r.0);
    let out = Output {
        command: "reduce",
        params,
        columns: vec!["run", "status", "order_hash", "final_theta", "theta_units", "measure", "max_star"],
        rows: rows.into_iter().map(|r| r.1).collect(),
    };
    write_trace(a.solver.trace.as_deref(), &[("network".to_string(), &est)])?;
    eprintln!("mean={} std={} ok={}/{}", num(est.mean), num(est.std), est.succeeded(), est.runs);
    let ok = if est.succeeded() == 0 {
        Err(CliError::Solver("no reduction run succeeded".into()))
    } else {
        Ok(())
    };
    emit(&out, &a.common, ok)
}

fn write_trace(path: Option<&Path>, ests: &[(String, &SpongeCrossingEstimate)]) -> Result<(), CliError> {
    let Some(path) = path else { return Ok(()) };
    let mut text = String::from("point,run,order_hash,final_theta,max_star,wall_seconds\n");
    for (key, est) in ests {
        for r in &est.samples {
            let _ = writeln!(text, "{key},{},{:016x},{},{},{:.6}", r.run, r.order_hash, num(r.final_theta.theta()), r.max_star, r.seconds);
        }
    }
    write_atomic(path, text.as_bytes())
}

fn bethe(a: &BetheArgs) -> Result<(), CliError> {
    let spec = BetheSpec::diluted(a.k, a.f, a.rules).map_err(parse_err)?;
    let xs = a.grid.values();
    let weights = xs.iter().map(|&x| a.axis.weight(a.rules, x)).collect::<Result<Vec<_>, _>>()?;
    let diluted = a.f < 1.0;
    let rows = weights
        .par_iter()
        .map(|w| {
            let m = w.measure(a.rules);
            let (value, exact) = match a.layers {
                Some(l) => (bethe_finite(spec, l, m)?, None),
                None if diluted => {
                    let d = bethe_diluted_recursion(spec, m)?;
                    (d.value, Some(d.exact))
                }
                None => (bethe_fixed_point(spec, m)?, None),
            };
            let mut row = vec![
                a.rules.name().to_string(),
                a.k.to_string(),
                num(a.f),
                a.layers.map_or("inf".into(), |l| l.to_string()),
                num(m),
                num(w.theta_units()),
                num(value),
            ];
            if let Some(e) = exact {
                row.push(e.to_string());
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>, crate::bethe::BetheError>>()
        .map_err(parse_err)?;
    let mut columns = vec!["rules", "k", "f", "l", "w", "theta_units", "value"];
    if diluted {
        columns.push("exact");
    }
    let out = Output {
        command: "bethe",
        params: vec![
            ("rules", a.rules.name().to_string()),
            ("k", a.k.to_string()),
            ("layers", a.layers.map_or("inf".into(), |l| l.to_string())),
            ("f", a.f.to_string()),
            ("grid", a.grid.to_string()),
            ("axis", format!("{:?}", a.axis).to_lowercase()),
        ],
        columns,
        rows,
    };
    emit(&out, &a.common, Ok(()))
}

fn crossing_summary(curves: BTreeMap<usize, (Vec<f64>, Vec<f64>)>, what: &str) {
    let curves: Vec<Curve> = curves
        .into_iter()
        .filter_map(|(l, (xs, ys))| Curve::new(format!("L={l}"), l as f64, xs, ys).ok())
        .collect();
    match estimate_threshold_crossing(&curves) {
        Ok(c) => eprintln!("crossing {what}={:.6} ± {:.6}", c.threshold, c.uncertainty),
        Err(e) => eprintln!("crossing: {e}"),
    }
}

fn lattice_sweep(a: &SweepArgs) -> Result<(), CliError> {
    let opts = a.solver.options()?;
    let xs = a.grid.values();
    let mut points = Vec::new();
    for &l in &a.sizes.0 {
        let spec = LatticeSpec::new(a.lattice, l).map_err(parse_err)?;
        for &x in &xs {
            points.push((l, spec, x, a.axis.weight(a.rules, x)?));
        }
    }
    let results = points
        .par_iter()
        .map(|&(l, spec, x, w)| {
            let net = build_lattice(spec, w).map_err(|e| CliError::Solver(e.to_string()))?;
            let est = sponge_crossing_with(&net, a.rules, a.common.seed, &opts).map_err(|e| CliError::Solver(e.to_string()))?;
            Ok((l, x, w, est))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut rows = Vec::new();
    let mut curves: BTreeMap<usize, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    let mut empty = Vec::new();
    for (l, x, w, est) in &results {
        let mean_units = LinkWeight::from_measure(a.rules, est.mean).map(|m| m.theta_units()).unwrap_or(f64::NAN);
        rows.push(vec![
            a.lattice.name().to_string(),
            l.to_string(),
            num(*x),
            num(w.theta_units()),
            est.runs.to_string(),
            est.succeeded().to_string(),
            num(est.mean),
            num(est.std),
            num(mean_units),
            num(est.theta_std() / std::f64::consts::FRAC_PI_4),
        ]);
        if est.succeeded() == 0 {
            empty.push(format!("L={l} x={x}"));
        } else {
            let c = curves.entry(*l).or_default();
            c.0.push(w.theta_units());
            c.1.push(est.mean);
        }
    }
    let mut params = vec![
        ("rules", a.rules.name().to_string()),
        ("lattice", a.lattice.name().to_string()),
        ("L", a.sizes.to_string()),
        ("grid", a.grid.to_string()),
        ("axis", format!("{:?}", a.axis).to_lowercase()),
    ];
    params.extend(a.solver.echo());
    let out = Output {
        command: "lattice-sweep",
        params,
        columns: vec!["lattice", "L", "x", "theta_units", "runs", "ok", "mean", "std", "mean_theta_units", "theta_units_std"],
        rows,
    };
    let traced: Vec<(String, &SpongeCrossingEstimate)> = results.iter().map(|(l, x, _, est)| (format!("L{l}:{x}"), est)).collect();
    write_trace(a.solver.trace.as_deref(), &traced)?;
    crossing_summary(curves, "theta_units");
    let ok = if empty.is_empty() {
        Ok(())
    } else {
        Err(CliError::Solver(format!("no successful run at {}", empty.join(", "))))
    };
    emit(&out, &a.common, ok)
}

fn point_seed(seed: u64, size: usize, index: usize) -> u64 {
    seed ^ (size as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (index as u64).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

fn mc(a: &McArgs) -> Result<(), CliError> {
    if a.trials == 0 {
        return Err(parse_err("--trials must be at least 1"));
    }
    let xs = a.grid.values();
    let rules = RuleSystem::Classical;
    let fixed = a.net.as_deref().map(read_network).transpose()?;
    let sizes: Vec<usize> = if fixed.is_some() { vec![0] } else { a.sizes.0.clone() };
    let mut points = Vec::new();
    for &l in &sizes {
        for (i, &x) in xs.iter().enumerate() {
            points.push((l, i, x, a.axis.weight(rules, x)?));
        }
    }
    let rows = points
        .par_iter()
        .map(|&(l, i, x, w)| {
            let net = match &fixed {
                Some(n) => n.with_uniform_weight(w),
                None => build_lattice(LatticeSpec::new(a.lattice, l).map_err(parse_err)?, w).map_err(parse_err)?,
            };
            let s = monte_carlo_sc(&net, a.trials, point_seed(a.common.seed, l, i)).map_err(|e| CliError::Solver(e.to_string()))?;
            Ok((l, x, w, s))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut curves: BTreeMap<usize, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    let label = |l: usize| if fixed.is_some() { "net".to_string() } else { l.to_string() };
    let body = rows
        .iter()
        .map(|(l, x, w, s)| {
            let c = curves.entry(*l).or_default();
            c.0.push(w.p());
            c.1.push(s.estimate);
            vec![label(*l), num(*x), num(w.p()), num(w.theta_units()), s.trials.to_string(), s.hits.to_string(), num(s.estimate), num(s.stderr)]
        })
        .collect();
    let out = Output {
        command: "mc",
        params: vec![
            ("lattice", fixed.as_ref().map_or(a.lattice.name().to_string(), |_| "net".into())),
            ("L", a.net.as_ref().map_or(a.sizes.to_string(), |p| p.display().to_string())),
            ("grid", a.grid.to_string()),
            ("axis", format!("{:?}", a.axis).to_lowercase()),
            ("trials", a.trials.to_string()),
        ],
        columns: vec!["L", "x", "p", "theta_units", "trials", "hits", "estimate", "stderr"],
        rows: body,
    };
    if fixed.is_none() {
        crossing_summary(curves, "p");
    }
    emit(&out, &a.common, Ok(()))
}

/// Last decimal number embedded in a label, e.g. `square-L12` → 12.
fn size_from_label(label: &str) -> Option<f64> {
    let mut best = None;
    let mut cur = String::new();
    for ch in label.chars().chain(std::iter::once(' ')) {
        if ch.is_ascii_digit() || (ch == '.' && !cur.is_empty()) {
            cur.push(ch);
        } else if !cur.is_empty() {
            best = cur.trim_end_matches('.').parse().ok().or(best);
            cur.clear();
        }
    }
    best
}

fn read_curves(a: &FitArgs) -> Result<Vec<Curve>, CliError> {
    let text = read_text(&a.input)?;
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(parse_err)?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| parse_err(format!("no column `{name}` in {}", a.input.display())));
    let (li, xi, yi) = (col(&a.label_col)?, col(&a.x_col)?, col(&a.y_col)?);
    let si = a.size_col.as_deref().map(col).transpose()?;
    let mut groups: BTreeMap<String, (f64, Vec<(f64, f64)>)> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(parse_err)?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let (x, y) = (field(xi), field(yi));
        if x.is_empty() || y.is_empty() {
            continue;
        }
        let label = field(li).to_string();
        let size = match si {
            Some(i) => field(i).parse().map_err(|e| parse_err(format!("size `{}`: {e}", field(i))))?,
            None => size_from_label(&label).ok_or_else(|| parse_err(format!("no size in label `{label}`")))?,
        };
        let x: f64 = x.parse().map_err(|e| parse_err(format!("x `{x}`: {e}")))?;
        let y: f64 = y.parse().map_err(|e| parse_err(format!("y `{y}`: {e}")))?;
        groups.entry(label).or_insert((size, Vec::new())).1.push((x, y));
    }
    groups
        .into_iter()
        .map(|(label, (size, mut pts))| {
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let (xs, ys) = pts.into_iter().unzip();
            Curve::new(label, size, xs, ys).map_err(parse_err)
        })
        .collect()
}

fn parse_window(s: &str) -> Result<(f64, f64), CliError> {
    let (a, b) = s.split_once(':').ok_or_else(|| parse_err(format!("window `{s}` is not lo:hi")))?;
    let lo: f64 = a.parse().map_err(parse_err)?;
    let hi: f64 = b.parse().map_err(parse_err)?;
    if !(lo < hi) {
        return Err(parse_err(format!("window `{s}` is empty")));
    }
    Ok((lo, hi))
}

fn fit(a: &FitArgs) -> Result<(), CliError> {
    let curves = read_curves(a)?;
    let mut rows = Vec::new();
    let span = |c: &Curve| (c.xs[0], *c.xs.last().expect("curve is nonempty"));
    match a.kind {
        FitKind::Crossing => {
            let est = estimate_threshold_crossing(&curves).map_err(|e| CliError::Solver(e.to_string()))?;
            let lo = curves.iter().map(|c| span(c).0).fold(f64::NEG_INFINITY, f64::max);
            let hi = curves.iter().map(|c| span(c).1).fold(f64::INFINITY, f64::min);
            for (sa, sb, x) in &est.pairs {
                rows.push(vec!["crossing".into(), format!("{sa}-{sb}"), num(*x), String::new(), num(lo), num(hi)]);
            }
            rows.push(vec!["threshold".into(), "all".into(), num(est.threshold), num(est.uncertainty), num(lo), num(hi)]);
        }
        FitKind::Turning => {
            for c in &curves {
                let x = turning_point(c).map_err(|e| CliError::Solver(e.to_string()))?;
                let (lo, hi) = span(c);
                rows.push(vec!["turning_point".into(), c.label.clone(), num(x), String::new(), num(lo), num(hi)]);
            }
        }
        FitKind::Power => {
            let window = a.window.as_deref().map(parse_window).transpose()?.unwrap_or((f64::MIN_POSITIVE, f64::MAX));
            for c in &curves {
                let f = fit_power_law(&c.xs, &c.ys, window).map_err(|e| CliError::Solver(e.to_string()))?;
                let (lo, hi) = span(c);
                let (lo, hi) = (lo.max(window.0), hi.min(window.1));
                rows.push(vec!["exponent".into(), c.label.clone(), num(f.exponent), num(f.stderr), num(lo), num(hi)]);
                rows.push(vec!["log_prefactor".into(), c.label.clone(), num(f.intercept), String::new(), num(lo), num(hi)]);
            }
        }
    }
    let out = Output {
        command: "fit",
        params: vec![
            ("in", a.input.display().to_string()),
            ("kind", format!("{:?}", a.kind).to_lowercase()),
            ("x_col", a.x_col.clone()),
            ("y_col", a.y_col.clone()),
            ("window", a.window.clone().unwrap_or_else(|| "all".into())),
        ],
        columns: vec!["quantity", "label", "value", "stderr", "window_lo", "window_hi"],
        rows,
    };
    emit(&out, &a.common, Ok(()))
}

fn table1(a: &TableArgs) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for &k in &a.k.0 {
        let r = literature_thresholds(k).map_err(parse_err)?;
        let lattice = format!("bethe-k{k}");
        for (model, v) in [("CEP", r.cep), ("QEP", r.qep), ("QEP-GHZ", r.qep_ghz), ("ConPT", r.conpt)] {
            rows.push(vec![lattice.clone(), model.to_string(), num(v), String::new()]);
        }
    }
    for r in LATTICE_ROWS {
        for (model, v) in [("CEP", r.cep), ("QEP", r.qep), ("QEP-GHZ", r.qep_ghz)] {
            rows.push(vec![r.lattice.to_string(), model.to_string(), num(v), String::new()]);
        }
        rows.push(vec![r.lattice.to_string(), "ConPT".into(), num(r.conpt), num(r.conpt_err)]);
    }
    let out = Output {
        command: "table1",
        params: vec![("k", a.k.to_string())],
        columns: vec!["lattice", "model", "threshold_theta_units", "uncertainty"],
        rows,
    };
    emit(&out, &a.common, Ok(()))
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| parse_err(format!("{THREADS_ENV}=`{v}` is not a thread count")))?;
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    configure_threads()?;
    match &cli.command {
        Command::Reduce(a) => reduce(a),
        Command::Bethe(a) => bethe(a),
        Command::LatticeSweep(a) => lattice_sweep(a),
        Command::Mc(a) => mc(a),
        Command::Fit(a) => fit(a),
        Command::Table1(a) => table1(a),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_PARSE } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints() {
        let g: Grid = "0:1:0.25".parse().unwrap();
        assert_eq!(g.values(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let g: Grid = "0:1:0.3".parse().unwrap();
        assert_eq!(g.values(), vec![0.0, 0.3, 0.6, 0.9]);
        let g: Grid = "0:1:0.001".parse().unwrap();
        let v = g.values();
        assert_eq!(v.len(), 1001);
        assert_eq!(v[300], 0.3);
        assert!("1:0:0.1".parse::<Grid>().is_err());
        assert!("0:1".parse::<Grid>().is_err());
        assert!("0:1:0".parse::<Grid>().is_err());
    }

    #[test]
    fn int_lists() {
        assert_eq!("3..5".parse::<IntList>().unwrap().0, vec![3, 4, 5]);
        assert_eq!("5,3,4,4".parse::<IntList>().unwrap().0, vec![3, 4, 5]);
        assert_eq!("3..=4,8".parse::<IntList>().unwrap().0, vec![3, 4, 8]);
        assert!("5..3".parse::<IntList>().is_err());
        assert!("x".parse::<IntList>().is_err());
    }

    #[test]
    fn label_sizes() {
        assert_eq!(size_from_label("square-L12"), Some(12.0));
        assert_eq!(size_from_label("l=2.5"), Some(2.5));
        assert_eq!(size_from_label("7"), Some(7.0));
        assert_eq!(size_from_label("none"), None);
    }

    #[test]
    fn nonfinite_fields_are_blank() {
        assert_eq!(num(f64::NAN), "");
        assert_eq!(num(0.5), "0.5");
    }

    #[test]
    fn exit_codes_are_distinct() {
        let codes = [CliError::Parse(String::new()).exit_code(), CliError::Solver(String::new()).exit_code(), EXIT_IO];
        assert_eq!(codes, [2, 3, 4]);
    }
}
