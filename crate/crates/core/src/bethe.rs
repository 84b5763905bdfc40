//! Exact results on the Bethe lattice: renormalization fixed point,
//! thresholds, saturation, dilution and finite-layer recursion.

use thiserror::Error;

use crate::weight::RuleSystem;

/// Iterates below this are treated as the trivial root.
const ZERO_CUTOFF: f64 = 1e-14;
const DAMPING: f64 = 0.5;
const DAMPED_STEPS: usize = 2_000;
/// Smallest positive root looked for; link values this small are already
/// within the snapping distance of 0 after one series step.
const PROBE_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BetheError {
    #[error("Bethe degree must be at least 3, got {0}")]
    BadDegree(usize),
    #[error("retained fraction {0} outside (0, 1]")]
    BadFraction(f64),
    #[error("link value {0} outside [0, 1]")]
    BadWeight(f64),
    #[error("a finite Bethe lattice needs at least one layer")]
    NoLayers,
    #[error("finite-layer recursion is defined for the undiluted lattice only (f = {0})")]
    DilutedFinite(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetheSpec {
    pub k: usize,
    pub f: f64,
    pub rules: RuleSystem,
}

impl BetheSpec {
    pub fn new(k: usize, rules: RuleSystem) -> Result<Self, BetheError> {
        Self::diluted(k, 1.0, rules)
    }

    pub fn diluted(k: usize, f: f64, rules: RuleSystem) -> Result<Self, BetheError> {
        let spec = Self { k, f, rules };
        spec.check()?;
        Ok(spec)
    }

    fn check(&self) -> Result<(), BetheError> {
        if self.k < 3 {
            return Err(BetheError::BadDegree(self.k));
        }
        if !(self.f > 0.0 && self.f <= 1.0) {
            return Err(BetheError::BadFraction(self.f));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetheThresholds {
    /// `p_th` (classical) or `c_th` (ConPT).
    pub threshold: f64,
    /// `c_sat`; ConPT on the undiluted lattice only.
    pub saturation: Option<f64>,
    /// False when `f < 1/(k−1)` and the lattice no longer percolates.
    pub valid: bool,
}

fn check_weight(w: f64) -> Result<(), BetheError> {
    if (0.0..=1.0).contains(&w) {
        Ok(())
    } else {
        Err(BetheError::BadWeight(w))
    }
}

fn branches(rules: RuleSystem, y: f64, m: usize) -> f64 {
    rules.parallel_iter(std::iter::repeat_n(y, m))
}

/// Limit of `x ← map(x)` started at `x0`, for a monotone increasing map of
/// [0, 1] into itself that fixes 0. Damped iteration first; if that has not
/// settled, bisection on the bracket the iterate sits in.
fn monotone_limit(x0: f64, map: impl Fn(f64) -> f64) -> f64 {
    let g = |x: f64| map(x) - x;
    let mut x = x0;
    for _ in 0..DAMPED_STEPS {
        if x < ZERO_CUTOFF {
            return 0.0;
        }
        let next = (1.0 - DAMPING) * x + DAMPING * map(x);
        if (next - x).abs() <= f64::EPSILON * x.max(f64::MIN_POSITIVE) {
            return next;
        }
        x = next;
    }
    let gx = g(x);
    let (mut lo, mut hi) = if gx > 0.0 {
        // rising towards the first root above x
        (x, 1.0)
    } else {
        // falling: either a positive root below x or the trivial one
        let mut probe = 0.5 * x;
        while g(probe) <= 0.0 {
            if probe < PROBE_FLOOR {
                return 0.0;
            }
            probe *= 0.5;
        }
        (probe, x)
    };
    if g(hi) > 0.0 {
        return hi;
    }
    while hi - lo > f64::EPSILON * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let v = 0.5 * (lo + hi);
    if v < ZERO_CUTOFF {
        0.0
    } else {
        v
    }
}

/// Sponge-crossing value between the root and the boundary of the infinite
/// Bethe lattice with link value `w` (p or c).
pub fn bethe_fixed_point(spec: BetheSpec, w: f64) -> Result<f64, BetheError> {
    spec.check()?;
    check_weight(w)?;
    if spec.f < 1.0 {
        return bethe_diluted_recursion(spec, w).map(|d| d.value);
    }
    let rules = spec.rules;
    let k = spec.k;
    let sub = monotone_limit(w, |x| branches(rules, rules.series2(x, w), k - 1));
    Ok(rules.parallel2(sub, rules.series2(sub, w)))
}

pub fn bethe_thresholds(spec: BetheSpec) -> Result<BetheThresholds, BetheError> {
    spec.check()?;
    let eff = spec.f * (spec.k - 1) as f64;
    let valid = eff >= 1.0;
    Ok(match spec.rules {
        RuleSystem::Classical => BetheThresholds {
            threshold: 1.0 / eff,
            saturation: None,
            valid,
        },
        RuleSystem::ConPT => BetheThresholds {
            threshold: 1.0 / eff.sqrt(),
            saturation: (spec.f == 1.0).then(|| saturation_point(spec.k)),
            valid,
        },
    })
}

/// Link concurrence above which the ConPT sponge-crossing value is 1.
pub fn saturation_point(k: usize) -> f64 {
    let k = k as f64;
    let num = 0.5f64.powf(1.0 / k) - 0.25f64.powf(1.0 / k);
    let den = 0.5f64.powf((k - 1.0) / k) - 0.25f64.powf((k - 1.0) / k);
    (num / den).sqrt()
}

/// Sponge-crossing value of the Bethe lattice with `layers` layers below
/// the root (the same network as `build_bethe`).
pub fn bethe_finite(spec: BetheSpec, layers: usize, w: f64) -> Result<f64, BetheError> {
    spec.check()?;
    check_weight(w)?;
    if spec.f != 1.0 {
        return Err(BetheError::DilutedFinite(spec.f));
    }
    if layers == 0 {
        return Err(BetheError::NoLayers);
    }
    let rules = spec.rules;
    // value seen from a node `m` layers above the boundary; boundary nodes see 1
    let mut sub = 1.0;
    for _ in 1..layers {
        sub = branches(rules, rules.series2(sub, w), spec.k - 1);
    }
    Ok(branches(rules, rules.series2(sub, w), spec.k))
}

/// `bethe_finite` for every layer count `1..=max_layers`.
pub fn bethe_finite_series(spec: BetheSpec, max_layers: usize, w: f64) -> Result<Vec<f64>, BetheError> {
    spec.check()?;
    check_weight(w)?;
    if spec.f != 1.0 {
        return Err(BetheError::DilutedFinite(spec.f));
    }
    let rules = spec.rules;
    let mut out = Vec::with_capacity(max_layers);
    let mut sub = 1.0;
    for _ in 0..max_layers {
        out.push(branches(rules, rules.series2(sub, w), spec.k));
        sub = branches(rules, rules.series2(sub, w), spec.k - 1);
    }
    Ok(out)
}

/// Closed-form ConPT sponge-crossing concurrence for `k = 3`.
pub fn bethe_closed_form_k3(c: f64) -> f64 {
    let c_th = std::f64::consts::FRAC_1_SQRT_2;
    if c <= c_th {
        return 0.0;
    }
    if c >= saturation_point(3) {
        return 1.0;
    }
    let inner = ((0.25 + 1.0 / (c * c)).sqrt() - 0.5).powf(1.5);
    (2.0 * inner.clamp(-1.0, 1.0).acos()).sin()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DilutedValue {
    pub value: f64,
    /// False for ConPT: the binomial average is only a faithful stand-in
    /// for the ensemble close to threshold.
    pub exact: bool,
}

/// Share of a branch that the parallel law treats as additive: `p` itself
/// classically, `h = (1 − √(1 − c²))/2` under ConPT.
fn branch_gain(rules: RuleSystem, y: f64) -> f64 {
    match rules {
        RuleSystem::Classical => y,
        RuleSystem::ConPT => y * y / (2.0 * (1.0 + (1.0 - y * y).sqrt())),
    }
}

fn from_gain(rules: RuleSystem, big_h: f64) -> f64 {
    match rules {
        RuleSystem::Classical => big_h,
        RuleSystem::ConPT if big_h >= 0.5 => 1.0,
        RuleSystem::ConPT => 2.0 * (big_h * (1.0 - big_h)).sqrt(),
    }
}

/// Parallel combination of `n` branches of value `y`, each present with
/// probability `f`, averaged over the number present. The average is taken
/// over the per-branch miss factors `1 − gain`, where the binomial sum
/// collapses to `(1 − f·gain)ⁿ`.
fn diluted_branches(rules: RuleSystem, y: f64, n: usize, f: f64) -> f64 {
    if f == 1.0 {
        return branches(rules, y, n);
    }
    let gain = branch_gain(rules, y);
    let log_miss = n as f64 * (-f * gain).ln_1p();
    from_gain(rules, -log_miss.exp_m1())
}

/// Fixed point with each of the `k − 1` branches kept with probability `f`,
/// averaged over the number of surviving branches. The root averages over
/// its `k` branches the same way.
pub fn bethe_diluted_recursion(spec: BetheSpec, w: f64) -> Result<DilutedValue, BetheError> {
    spec.check()?;
    check_weight(w)?;
    let rules = spec.rules;
    let (k, f) = (spec.k, spec.f);
    let sub = monotone_limit(w, |x| diluted_branches(rules, rules.series2(x, w), k - 1, f));
    Ok(DilutedValue {
        value: diluted_branches(rules, rules.series2(sub, w), k, f),
        exact: rules == RuleSystem::Classical,
    })
}
