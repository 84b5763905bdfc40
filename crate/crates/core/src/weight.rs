//! Link weights and the series/parallel composition laws.
//!
//! A link is a pure state `cos θ |00⟩ + sin θ |11⟩` with `0 ≤ θ ≤ π/4`. The
//! classical rule system measures it by the singlet conversion probability
//! `p = 2 sin²θ`, the concurrence rule system by `c = sin 2θ`.

use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Largest admissible link angle (a singlet).
pub const MAX_THETA: f64 = FRAC_PI_4;

/// Values this close to 0 or 1 are snapped onto the endpoint.
pub const SNAP_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WeightError {
    #[error("link angle {0} outside [0, π/4]")]
    ThetaOutOfRange(f64),
    #[error("measure value {0} outside [0, 1]")]
    MeasureOutOfRange(f64),
    #[error("composition needs at least one value")]
    Empty,
}

/// Snap a measure value onto `[0, 1]`, rejecting anything further than
/// [`SNAP_EPS`] outside the interval.
pub fn snap_measure(m: f64) -> Result<f64, WeightError> {
    Ok(snap_unchecked(check_measure(m)?))
}

fn check_measure(m: f64) -> Result<f64, WeightError> {
    if !m.is_finite() || m < -SNAP_EPS || m > 1.0 + SNAP_EPS {
        return Err(WeightError::MeasureOutOfRange(m));
    }
    Ok(m.clamp(0.0, 1.0))
}

// Views stay exact near 0 (small θ keep their precision) but land on 1 at the singlet.
#[inline]
pub(crate) fn snap_top(m: f64) -> f64 {
    if m >= 1.0 - SNAP_EPS {
        1.0
    } else {
        m
    }
}

#[inline]
pub(crate) fn snap_unchecked(m: f64) -> f64 {
    if m <= SNAP_EPS {
        0.0
    } else if m >= 1.0 - SNAP_EPS {
        1.0
    } else {
        m
    }
}

/// A single link's entanglement angle. `θ` is the canonical representation;
/// `p` and `c` are derived.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct LinkWeight(f64);

impl LinkWeight {
    pub const ZERO: LinkWeight = LinkWeight(0.0);
    pub const SINGLET: LinkWeight = LinkWeight(MAX_THETA);

    pub fn from_theta(theta: f64) -> Result<Self, WeightError> {
        if !theta.is_finite() || theta < -SNAP_EPS || theta > MAX_THETA + SNAP_EPS {
            return Err(WeightError::ThetaOutOfRange(theta));
        }
        Ok(LinkWeight(theta.clamp(0.0, MAX_THETA)))
    }

    /// Inverse of `p = 2 sin²θ`.
    pub fn from_p(p: f64) -> Result<Self, WeightError> {
        let p = check_measure(p)?;
        Ok(LinkWeight((p / 2.0).sqrt().asin().clamp(0.0, MAX_THETA)))
    }

    /// Inverse of `c = sin 2θ`.
    pub fn from_c(c: f64) -> Result<Self, WeightError> {
        let c = check_measure(c)?;
        Ok(LinkWeight((c.asin() / 2.0).clamp(0.0, MAX_THETA)))
    }

    pub fn from_measure(rules: RuleSystem, m: f64) -> Result<Self, WeightError> {
        match rules {
            RuleSystem::Classical => Self::from_p(m),
            RuleSystem::ConPT => Self::from_c(m),
        }
    }

    pub fn theta(self) -> f64 {
        self.0
    }

    /// `θ` in units of `π/4`, the convention used for threshold tables.
    pub fn theta_units(self) -> f64 {
        self.0 / MAX_THETA
    }

    pub fn p(self) -> f64 {
        let s = self.0.sin();
        snap_top(2.0 * s * s)
    }

    pub fn c(self) -> f64 {
        snap_top((2.0 * self.0).sin().max(0.0))
    }

    pub fn measure(self, rules: RuleSystem) -> f64 {
        match rules {
            RuleSystem::Classical => self.p(),
            RuleSystem::ConPT => self.c(),
        }
    }
}

/// Both derived views of a weight, `(p, c)`.
pub fn convert_weight(w: LinkWeight) -> (f64, f64) {
    (w.p(), w.c())
}

/// Which pair of composition laws is in force.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleSystem {
    /// Bond percolation on the singlet conversion probability `p`.
    Classical,
    /// Concurrence percolation on `c`.
    ConPT,
}

impl RuleSystem {
    pub const ALL: [RuleSystem; 2] = [RuleSystem::Classical, RuleSystem::ConPT];

    pub fn name(self) -> &'static str {
        match self {
            RuleSystem::Classical => "classical",
            RuleSystem::ConPT => "conpt",
        }
    }

    /// Series law on two already-validated values.
    #[inline]
    pub fn series2(self, a: f64, b: f64) -> f64 {
        snap_unchecked(a * b)
    }

    /// Parallel law on two already-validated values.
    #[inline]
    pub fn parallel2(self, a: f64, b: f64) -> f64 {
        self.parallel_iter([a, b])
    }

    /// Parallel law over any number of already-validated values. An empty
    /// iterator yields 0 (no path).
    pub fn parallel_iter<I: IntoIterator<Item = f64>>(self, values: I) -> f64 {
        match self {
            RuleSystem::Classical => {
                // 1 - p = Π (1 - p_i), accumulated in log space for small p.
                let mut log_miss = 0.0;
                for p in values {
                    let p = snap_unchecked(p);
                    if p >= 1.0 {
                        return 1.0;
                    }
                    log_miss += (-p).ln_1p();
                }
                snap_unchecked(-log_miss.exp_m1())
            }
            RuleSystem::ConPT => {
                // Largest Schmidt coefficients multiply: Π (1+√(1-c_i²))/2, kept
                // as h_i = 1 - (1+√(1-c_i²))/2 so that tiny c survive.
                let mut log_keep = 0.0;
                for c in values {
                    let c = snap_unchecked(c);
                    if c >= 1.0 {
                        return 1.0;
                    }
                    let h = c * c / (2.0 * (1.0 + (1.0 - c * c).sqrt()));
                    log_keep += (-h).ln_1p();
                }
                let big_h = -log_keep.exp_m1();
                if big_h >= 0.5 {
                    // product of coefficients fell to ≤ 1/2: a singlet is reachable
                    return 1.0;
                }
                snap_unchecked(2.0 * (big_h * (1.0 - big_h)).sqrt())
            }
        }
    }

    /// Series law over any number of already-validated values.
    pub fn series_iter<I: IntoIterator<Item = f64>>(self, values: I) -> f64 {
        snap_unchecked(values.into_iter().map(snap_unchecked).product())
    }
}

impl fmt::Display for RuleSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RuleSystem {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "classical" | "cep" => Ok(RuleSystem::Classical),
            "conpt" | "concurrence" => Ok(RuleSystem::ConPT),
            other => Err(format!("unknown rule system `{other}`")),
        }
    }
}

fn validated(ws: &[f64]) -> Result<Vec<f64>, WeightError> {
    if ws.is_empty() {
        return Err(WeightError::Empty);
    }
    ws.iter().map(|&w| snap_measure(w)).collect()
}

/// Equivalent weight of links in series, in the rule system's measure.
pub fn compose_series(rules: RuleSystem, ws: &[f64]) -> Result<f64, WeightError> {
    Ok(rules.series_iter(validated(ws)?))
}

/// Equivalent weight of parallel links, in the rule system's measure.
pub fn compose_parallel(rules: RuleSystem, ws: &[f64]) -> Result<f64, WeightError> {
    Ok(rules.parallel_iter(validated(ws)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_convert_exactly() {
        assert_eq!(convert_weight(LinkWeight::SINGLET), (1.0, 1.0));
        assert_eq!(convert_weight(LinkWeight::ZERO), (0.0, 0.0));
    }

    #[test]
    fn eighth_pi_views() {
        let w = LinkWeight::from_theta(std::f64::consts::PI / 8.0).unwrap();
        let (p, c) = convert_weight(w);
        assert!((p - (1.0 - FRAC_PI_4.cos())).abs() < 1e-15);
        assert!((p - 0.29289).abs() < 1e-5);
        assert!((c - 0.70711).abs() < 1e-5);
    }

    #[test]
    fn round_trips() {
        for i in 0..=1000 {
            let theta = MAX_THETA * i as f64 / 1000.0;
            let w = LinkWeight::from_theta(theta).unwrap();
            assert!((LinkWeight::from_p(w.p()).unwrap().theta() - theta).abs() < 1e-12);
            assert!((LinkWeight::from_c(w.c()).unwrap().theta() - theta).abs() < 1e-7);
        }
    }

    #[test]
    fn c_round_trip_away_from_singlet() {
        // sin 2θ is flat at π/4, so the c-inverse is only well conditioned below it.
        for i in 0..=900 {
            let theta = MAX_THETA * i as f64 / 1000.0;
            let w = LinkWeight::from_theta(theta).unwrap();
            assert!((LinkWeight::from_c(w.c()).unwrap().theta() - theta).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(LinkWeight::from_theta(1.0).is_err());
        assert!(LinkWeight::from_theta(-0.1).is_err());
        assert!(LinkWeight::from_p(1.5).is_err());
        assert!(LinkWeight::from_c(f64::NAN).is_err());
        assert!(compose_series(RuleSystem::Classical, &[0.5, 1.2]).is_err());
    }

    #[test]
    fn series_examples() {
        assert_eq!(compose_series(RuleSystem::Classical, &[0.5, 0.5]).unwrap(), 0.25);
        let c = compose_series(RuleSystem::ConPT, &[0.70711, 0.70711]).unwrap();
        assert!((c - 0.5).abs() < 1e-5);
        for rules in RuleSystem::ALL {
            assert_eq!(compose_series(rules, &[0.37]).unwrap(), 0.37);
            assert_eq!(compose_parallel(rules, &[0.37]).unwrap(), 0.37);
        }
    }

    #[test]
    fn parallel_examples() {
        let p = compose_parallel(RuleSystem::Classical, &[0.5, 0.5]).unwrap();
        assert!((p - 0.75).abs() < 1e-15);
        // factors 0.9 · 0.9 = 0.81 > 1/2, then invert (1+√(1-c²))/2 = 0.81
        let c = compose_parallel(RuleSystem::ConPT, &[0.6, 0.6]).unwrap();
        let expect = (1.0f64 - (2.0 * 0.81 - 1.0f64).powi(2)).sqrt();
        assert!((c - expect).abs() < 1e-14);
        assert!((c - 0.7846).abs() < 1e-4);
        assert_eq!(compose_parallel(RuleSystem::ConPT, &[0.95, 0.95]).unwrap(), 1.0);
    }

    #[test]
    fn saturation_boundary_is_exact() {
        // two links with cos²θ = 1/√2 each multiply exactly onto 1/2
        let g = std::f64::consts::FRAC_1_SQRT_2;
        let c = (1.0 - (2.0 * g - 1.0) * (2.0 * g - 1.0)).sqrt();
        let out = compose_parallel(RuleSystem::ConPT, &[c, c]).unwrap();
        assert!(out > 1.0 - 1e-7, "{out}");
        assert_eq!(compose_parallel(RuleSystem::ConPT, &[c, c, 0.1]).unwrap(), 1.0);
    }

    #[test]
    fn empty_lists_rejected() {
        assert_eq!(compose_series(RuleSystem::ConPT, &[]), Err(WeightError::Empty));
        assert_eq!(compose_parallel(RuleSystem::Classical, &[]), Err(WeightError::Empty));
    }

    #[test]
    fn tiny_concurrences_add_in_quadrature() {
        let c = RuleSystem::ConPT.parallel2(1e-7, 1e-7);
        assert!((c / (1e-7 * 2f64.sqrt()) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn snapping_near_endpoints() {
        assert_eq!(snap_measure(1.0 + 1e-13).unwrap(), 1.0);
        assert_eq!(snap_measure(-1e-13).unwrap(), 0.0);
        assert_eq!(snap_measure(0.5).unwrap(), 0.5);
    }

    #[test]
    fn rules_parse() {
        assert_eq!("ConPT".parse::<RuleSystem>().unwrap(), RuleSystem::ConPT);
        assert_eq!("classical".parse::<RuleSystem>().unwrap(), RuleSystem::Classical);
        assert!("quantum".parse::<RuleSystem>().is_err());
    }
}
