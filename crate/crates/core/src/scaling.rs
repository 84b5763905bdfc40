//! Threshold and exponent extraction from sponge-crossing curves, plus the
//! closed-form threshold calculators for the Bethe lattice.

use std::f64::consts::{FRAC_2_PI, PI};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScalingError {
    #[error("curve '{0}': x values must be strictly increasing")]
    NotIncreasing(String),
    #[error("curve '{0}': y values must be finite and inside [0, 1]")]
    OutOfRange(String),
    #[error("curve '{0}': {1} x values but {2} y values")]
    LengthMismatch(String, usize, usize),
    #[error("need at least {need} {what}, got {got}")]
    TooFew { what: &'static str, need: usize, got: usize },
    #[error("curve '{0}' is not on a uniform grid")]
    NonUniform(String),
    #[error("no crossing between sizes {0} and {1}")]
    NoCrossing(f64, f64),
    #[error("no sign change in the second derivative of '{0}'")]
    NoTurningPoint(String),
    #[error("nonpositive value at x = {0} inside the fit window")]
    NonPositive(f64),
    #[error("decay is not monotone in size")]
    NonMonotone,
    #[error("root is not bracketed in (0, 1) for k = {0}")]
    NotBracketed(usize),
    #[error("degree must be at least 3, got {0}")]
    BadDegree(usize),
}

/// One sponge-crossing curve: values `ys` over control values `xs` for a
/// system of linear size (or layer count) `size`.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub label: String,
    pub size: f64,
}

impl Curve {
    pub fn new(label: impl Into<String>, size: f64, xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, ScalingError> {
        let label = label.into();
        if xs.len() != ys.len() {
            return Err(ScalingError::LengthMismatch(label, xs.len(), ys.len()));
        }
        if xs.iter().any(|x| !x.is_finite()) || xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ScalingError::NotIncreasing(label));
        }
        if ys.iter().any(|y| !(0.0..=1.0).contains(y)) {
            return Err(ScalingError::OutOfRange(label));
        }
        Ok(Self { xs, ys, label, size })
    }

    /// Linear interpolation; `None` outside the grid.
    pub fn at(&self, x: f64) -> Option<f64> {
        let (first, last) = (*self.xs.first()?, *self.xs.last()?);
        if x < first || x > last {
            return None;
        }
        let i = self.xs.partition_point(|&v| v <= x).clamp(1, self.xs.len().max(2) - 1);
        if self.xs.len() == 1 {
            return Some(self.ys[0]);
        }
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let t = (x - x0) / (x1 - x0);
        Some(self.ys[i - 1] + t * (self.ys[i] - self.ys[i - 1]))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingFit {
    pub exponent: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub window: (f64, f64),
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrossingEstimate {
    pub threshold: f64,
    /// Half the spread of the pairwise crossings.
    pub uncertainty: f64,
    /// `(smaller size, larger size, crossing)` for each adjacent pair.
    pub pairs: Vec<(f64, f64, f64)>,
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Crossing of two curves, or `None` when their difference never changes
/// sign. With several sign changes the steepest one wins: shallow ones come
/// from noise where both curves sit near 0 or 1.
fn pair_crossing(a: &Curve, b: &Curve) -> Option<f64> {
    let lo = a.xs[0].max(b.xs[0]);
    let hi = a.xs.last()?.min(*b.xs.last()?);
    let mut grid: Vec<f64> = a.xs.iter().chain(&b.xs).copied().filter(|x| (lo..=hi).contains(x)).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let diff = |x: f64| a.at(x).unwrap_or(0.0) - b.at(x).unwrap_or(0.0);
    let nonzero: Vec<(f64, f64)> = grid.iter().map(|&x| (x, diff(x))).filter(|&(_, d)| d != 0.0).collect();
    let mut best: Option<(f64, f64)> = None;
    for w in nonzero.windows(2) {
        let ((x0, d0), (x1, d1)) = (w[0], w[1]);
        if (d0 < 0.0) != (d1 < 0.0) {
            let jump = (d1 - d0).abs() / (x1 - x0);
            if best.is_none_or(|(j, _)| jump > j) {
                best = Some((jump, bisect(x0, x1, diff, 1e-13)));
            }
        }
    }
    best.map(|(_, x)| x)
}

/// Finite-size threshold estimate from pairwise crossings of curves taken
/// at adjacent sizes.
pub fn estimate_threshold_crossing(curves: &[Curve]) -> Result<CrossingEstimate, ScalingError> {
    if curves.len() < 2 {
        return Err(ScalingError::TooFew {
            what: "curves",
            need: 2,
            got: curves.len(),
        });
    }
    let mut sorted: Vec<&Curve> = curves.iter().collect();
    sorted.sort_by(|a, b| a.size.total_cmp(&b.size));
    let mut pairs = Vec::with_capacity(sorted.len() - 1);
    for w in sorted.windows(2) {
        let x = pair_crossing(w[0], w[1]).ok_or(ScalingError::NoCrossing(w[0].size, w[1].size))?;
        pairs.push((w[0].size, w[1].size, x));
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.2).collect();
    let (min, max) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    Ok(CrossingEstimate {
        threshold: xs.iter().sum::<f64>() / xs.len() as f64,
        uncertainty: 0.5 * (max - min),
        pairs,
    })
}

/// Inflection point of a curve on a uniform grid: the root of the central
/// second difference where it turns from positive to negative.
pub fn turning_point(curve: &Curve) -> Result<f64, ScalingError> {
    let n = curve.xs.len();
    if n < 7 {
        return Err(ScalingError::TooFew {
            what: "grid points",
            need: 7,
            got: n,
        });
    }
    let h = (curve.xs[n - 1] - curve.xs[0]) / (n - 1) as f64;
    if curve.xs.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-6 * h) {
        return Err(ScalingError::NonUniform(curve.label.clone()));
    }
    // rounding floor of a second difference
    let floor = 16.0 * f64::EPSILON * curve.ys.iter().fold(0.0f64, |m, y| m.max(y.abs())) / (h * h);
    let d2: Vec<(f64, f64)> = (1..n - 1)
        .map(|i| (curve.xs[i], (curve.ys[i + 1] - 2.0 * curve.ys[i] + curve.ys[i - 1]) / (h * h)))
        .filter(|&(_, d)| d.abs() > floor)
        .collect();
    let mut best: Option<(f64, f64)> = None;
    for w in d2.windows(2) {
        let ((x0, d0), (x1, d1)) = (w[0], w[1]);
        if d0 > 0.0 && d1 < 0.0 {
            let jump = d0 - d1;
            if best.is_none_or(|(j, _)| jump > j) {
                let line = |x: f64| d0 + (d1 - d0) * (x - x0) / (x1 - x0);
                best = Some((jump, bisect(x0, x1, line, 1e-14 * h.max(1.0))));
            }
        }
    }
    best.map(|(_, x)| x).ok_or_else(|| ScalingError::NoTurningPoint(curve.label.clone()))
}

/// Ordinary least squares `y = a + b x`; returns `(b, a, stderr of b)`.
fn least_squares(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if pts.len() > 2 {
        let ssr: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
        (ssr / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, intercept, stderr)
}

/// Least-squares line through `(ln x, ln y)` for the points with `x` inside
/// `window` (inclusive). `intercept` is `ln` of the prefactor.
pub fn fit_power_law(xs: &[f64], ys: &[f64], window: (f64, f64)) -> Result<ScalingFit, ScalingError> {
    let mut pts = Vec::new();
    for (&x, &y) in xs.iter().zip(ys) {
        if x < window.0 || x > window.1 {
            continue;
        }
        if !(x > 0.0 && y > 0.0) {
            return Err(ScalingError::NonPositive(x));
        }
        pts.push((x.ln(), y.ln()));
    }
    if pts.len() < 2 {
        return Err(ScalingError::TooFew {
            what: "points in the fit window",
            need: 2,
            got: pts.len(),
        });
    }
    let (exponent, intercept, stderr) = least_squares(&pts);
    Ok(ScalingFit {
        exponent,
        intercept,
        stderr,
        window,
        points: pts.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// Below threshold: the value itself decays with size.
    Sub,
    /// Above threshold: the distance to 1 decays with size.
    Super,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrelationLength {
    pub xi: f64,
    pub stderr: f64,
}

/// Correlation length from exponential decay in system size:
/// `ln v ≈ a − L/ξ` with `v = P` below and `v = 1 − P` above threshold.
pub fn correlation_length(values: &[(f64, f64)], regime: Regime) -> Result<CorrelationLength, ScalingError> {
    if values.len() < 3 {
        return Err(ScalingError::TooFew {
            what: "sizes",
            need: 3,
            got: values.len(),
        });
    }
    let mut pts: Vec<(f64, f64)> = values
        .iter()
        .map(|&(l, v)| (l, if regime == Regime::Sub { v } else { 1.0 - v }))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.windows(2).any(|w| w[1].1 >= w[0].1) {
        return Err(ScalingError::NonMonotone);
    }
    if let Some(&(l, _)) = pts.iter().find(|p| p.1 <= 0.0) {
        return Err(ScalingError::NonPositive(l));
    }
    let logs: Vec<(f64, f64)> = pts.iter().map(|&(l, v)| (l, v.ln())).collect();
    let (slope, _, se) = least_squares(&logs);
    Ok(CorrelationLength {
        xi: -1.0 / slope,
        stderr: se / (slope * slope),
    })
}

/// Thermal exponent from `ξ ∼ |x − x_th|^{−ν}`; `exponent` holds ν.
pub fn kesten_exponent(xis: &[(f64, f64)], x_th: f64, window: (f64, f64)) -> Result<ScalingFit, ScalingError> {
    let (dx, xi): (Vec<f64>, Vec<f64>) = xis.iter().map(|&(x, xi)| ((x - x_th).abs(), xi)).unzip();
    let mut fit = fit_power_law(&dx, &xi, window)?;
    fit.exponent = -fit.exponent;
    Ok(fit)
}

/// Correlation lengths at every x shared by all curves, from the decay of
/// the curve values with size on the side of `x_th` the x falls on. Points
/// where the decay is not clean (non-monotone, or saturated at 0 or 1) are
/// skipped.
pub fn kesten_points(curves: &[Curve], x_th: f64) -> Vec<(f64, CorrelationLength, Regime)> {
    let Some(first) = curves.first() else { return Vec::new() };
    let mut out = Vec::new();
    for (i, &x) in first.xs.iter().enumerate() {
        let mut values = vec![(first.size, first.ys[i])];
        for c in &curves[1..] {
            match c.xs.iter().position(|&v| v == x) {
                Some(j) => values.push((c.size, c.ys[j])),
                None => break,
            }
        }
        if values.len() != curves.len() || x == x_th {
            continue;
        }
        let regime = if x < x_th { Regime::Sub } else { Regime::Super };
        if let Ok(xi) = correlation_length(&values, regime) {
            out.push((x, xi, regime));
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffFit {
    pub l_star: f64,
    pub stderr: f64,
    /// `ln` of the prefactor of `l^{−1/2} e^{−l/l*}`.
    pub amplitude: f64,
}

/// Fits `C(l) ∼ l^{−1/2} e^{−l/l*}` over layer counts in `window`;
/// `values[i]` is the value at `l = i + 1`.
pub fn fit_layer_cutoff(values: &[f64], window: (usize, usize)) -> Result<CutoffFit, ScalingError> {
    let mut pts = Vec::new();
    for l in window.0.max(1)..=window.1.min(values.len()) {
        let v = values[l - 1];
        if v <= 0.0 {
            return Err(ScalingError::NonPositive(l as f64));
        }
        pts.push((l as f64, v.ln() + 0.5 * (l as f64).ln()));
    }
    if pts.len() < 3 {
        return Err(ScalingError::TooFew {
            what: "layers in the fit window",
            need: 3,
            got: pts.len(),
        });
    }
    let (slope, amplitude, se) = least_squares(&pts);
    Ok(CutoffFit {
        l_star: -1.0 / slope,
        stderr: se / (slope * slope),
        amplitude,
    })
}

/// Bethe-lattice thresholds of one degree, in θ-units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdRow {
    pub k: usize,
    pub cep: f64,
    pub qep: f64,
    pub qep_ghz: f64,
    pub conpt: f64,
}

/// Two-dimensional lattice thresholds in θ-units; the ConPT column carries
/// its uncertainty.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeRow {
    pub lattice: &'static str,
    pub cep: f64,
    pub qep: f64,
    pub qep_ghz: f64,
    pub conpt: f64,
    pub conpt_err: f64,
}

pub const LATTICE_ROWS: [LatticeRow; 3] = [
    LatticeRow { lattice: "square", cep: 0.670, qep: 0.670, qep_ghz: 0.584, conpt: 0.42, conpt_err: 0.08 },
    LatticeRow { lattice: "honeycomb", cep: 0.777, qep: 0.761, qep_ghz: 0.745, conpt: 0.51, conpt_err: 0.08 },
    LatticeRow { lattice: "triangular", cep: 0.545, qep: 0.545, qep_ghz: 0.481, conpt: 0.32, conpt_err: 0.08 },
];

const SCAN_POINTS: usize = 1_000;
const ROOT_TOL: f64 = 1e-12;

/// First root of `f` on (0, 1): scan, then bisect.
fn unit_root(k: usize, f: impl Fn(f64) -> f64) -> Result<f64, ScalingError> {
    let mut prev = (0.0, f64::NAN);
    for i in 1..SCAN_POINTS {
        let x = i as f64 / SCAN_POINTS as f64;
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if prev.1.is_finite() && (prev.1 < 0.0) != (fx < 0.0) {
            return Ok(bisect(prev.0, x, &f, ROOT_TOL));
        }
        prev = (x, fx);
    }
    Err(ScalingError::NotBracketed(k))
}

/// θ-units of a singlet-conversion probability.
fn p_to_units(p: f64) -> f64 {
    4.0 / PI * (p / 2.0).sqrt().asin()
}

/// Percolation thresholds on the degree-`k` Bethe lattice under classical
/// percolation of singlets, entanglement swapping, GHZ-assisted swapping
/// and ConPT.
pub fn literature_thresholds(k: usize) -> Result<ThresholdRow, ScalingError> {
    if k < 3 {
        return Err(ScalingError::BadDegree(k));
    }
    let kf = k as f64;
    let cep = 4.0 / PI * (1.0 / (2.0 * (kf - 1.0)).sqrt()).asin();
    let conpt = FRAC_2_PI * (1.0 / (kf - 1.0).sqrt()).asin();

    let swap = unit_root(k, |x| 2.0 * x + x.powi(k as i32) * (x * kf - x - kf - 1.0) - (1.0 - x) / (kf - 1.0))?;
    let qep = p_to_units(2.0 * swap - swap * swap);

    let terms = (k - 2) / 2;
    let ghz = unit_root(k, |x| {
        let q = 2.0 * x - x * x;
        // C(2i, i) 4^{-i}, built incrementally
        let (mut coef, mut pow, mut sum) = (1.0, 1.0, 0.0);
        for i in 0..=terms {
            if i > 0 {
                coef *= (2 * i - 1) as f64 / (2 * i) as f64;
                pow *= q;
            }
            sum += coef * pow;
        }
        1.0 - (1.0 - x) * sum - 1.0 / (kf - 1.0)
    })?;
    let qep_ghz = p_to_units(ghz);

    Ok(ThresholdRow { k, cep, qep, qep_ghz, conpt })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logistic(size: f64, center: f64) -> Curve {
        let xs: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let ys = xs.iter().map(|x| 1.0 / (1.0 + (-size * (x - center)).exp())).collect();
        Curve::new(format!("L={size}"), size, xs, ys).unwrap()
    }

    #[test]
    fn curve_validation() {
        assert!(matches!(Curve::new("a", 1.0, vec![0.0, 0.0], vec![0.1, 0.2]), Err(ScalingError::NotIncreasing(_))));
        assert!(matches!(Curve::new("a", 1.0, vec![0.0, 1.0], vec![0.1, 1.2]), Err(ScalingError::OutOfRange(_))));
        assert!(matches!(Curve::new("a", 1.0, vec![0.0], vec![0.1, 0.2]), Err(ScalingError::LengthMismatch(..))));
        let c = Curve::new("a", 1.0, vec![0.0, 1.0, 2.0], vec![0.0, 0.5, 0.7]).unwrap();
        assert_eq!(c.at(0.5), Some(0.25));
        assert_eq!(c.at(2.0), Some(0.7));
        assert_eq!(c.at(2.1), None);
    }

    #[test]
    fn logistic_family_crossing() {
        let curves = [logistic(5.0, 0.4), logistic(20.0, 0.4), logistic(10.0, 0.4)];
        let est = estimate_threshold_crossing(&curves).unwrap();
        assert!((est.threshold - 0.4).abs() < 1e-6, "{est:?}");
        assert!(est.uncertainty < 1e-6);
        assert_eq!(est.pairs.len(), 2);
        assert_eq!((est.pairs[0].0, est.pairs[0].1), (5.0, 10.0));
    }

    #[test]
    fn parallel_curves_do_not_cross() {
        let a = Curve::new("a", 1.0, vec![0.0, 1.0], vec![0.1, 0.2]).unwrap();
        let b = Curve::new("b", 2.0, vec![0.0, 1.0], vec![0.2, 0.3]).unwrap();
        assert_eq!(estimate_threshold_crossing(&[a.clone(), b]), Err(ScalingError::NoCrossing(1.0, 2.0)));
        assert!(matches!(estimate_threshold_crossing(&[a]), Err(ScalingError::TooFew { .. })));
    }

    #[test]
    fn logistic_turning_point() {
        let x = turning_point(&logistic(10.0, 0.4)).unwrap();
        assert!((x - 0.4).abs() <= 0.01, "{x}");
        let short = Curve::new("s", 1.0, vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        assert!(matches!(turning_point(&short), Err(ScalingError::TooFew { .. })));
        let line = Curve::new("l", 1.0, (0..10).map(f64::from).collect(), (0..10).map(|i| i as f64 / 10.0).collect()).unwrap();
        assert!(matches!(turning_point(&line), Err(ScalingError::NoTurningPoint(_))));
    }

    #[test]
    fn exact_power_law() {
        let xs: Vec<f64> = (1..=20).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x * x).collect();
        let fit = fit_power_law(&xs, &ys, (0.0, 10.0)).unwrap();
        assert!((fit.exponent - 2.0).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(fit.stderr < 1e-10);
        assert_eq!(fit.points, 20);
        assert_eq!(fit_power_law(&[0.0, 1.0], &[1.0, 1.0], (-1.0, 2.0)), Err(ScalingError::NonPositive(0.0)));
    }

    #[test]
    fn exponential_decay_length() {
        let sub: Vec<(f64, f64)> = (3..=8).map(|l| (l as f64, (-(l as f64) / 3.5).exp())).collect();
        let xi = correlation_length(&sub, Regime::Sub).unwrap();
        assert!((xi.xi - 3.5).abs() < 0.01);
        let sup: Vec<(f64, f64)> = sub.iter().map(|&(l, v)| (l, 1.0 - v)).collect();
        assert!((correlation_length(&sup, Regime::Super).unwrap().xi - 3.5).abs() < 0.01);
        assert_eq!(correlation_length(&sup, Regime::Sub), Err(ScalingError::NonMonotone));
    }

    #[test]
    fn kesten_recovers_nu() {
        let xis: Vec<(f64, f64)> = (1..=10).map(|i| 0.5 + 0.01 * i as f64).map(|x| (x, 2.0 * (x - 0.5f64).powf(-1.3))).collect();
        let fit = kesten_exponent(&xis, 0.5, (0.0, 1.0)).unwrap();
        assert!((fit.exponent - 1.3).abs() < 1e-9);
    }

    #[test]
    fn kesten_points_split_by_side() {
        let xs: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let curves: Vec<Curve> = [3.0, 4.0, 5.0]
            .iter()
            .map(|&l| {
                let ys = xs.iter().map(|&x| if x < 0.5 { (-l * (0.5 - x) * 4.0).exp() } else { 1.0 - (-l * (x - 0.5) * 2.0).exp() }).collect();
                Curve::new("c", l, xs.clone(), ys).unwrap()
            })
            .collect();
        let pts = kesten_points(&curves, 0.5);
        assert_eq!(pts.len(), 10);
        let (x, xi, regime) = pts[0];
        assert_eq!((x, regime), (0.0, Regime::Sub));
        assert!((xi.xi - 0.5).abs() < 1e-9);
        let (x, xi, regime) = pts[9];
        assert_eq!((x, regime), (1.0, Regime::Super));
        assert!((xi.xi - 1.0).abs() < 1e-9);
    }

    #[test]
    fn layer_cutoff_fit() {
        let values: Vec<f64> = (1..=400).map(|l| 0.7 * (l as f64).powf(-0.5) * (-(l as f64) / 50.0).exp()).collect();
        let fit = fit_layer_cutoff(&values, (10, 400)).unwrap();
        assert!((fit.l_star - 50.0).abs() < 1e-8);
        assert!((fit.amplitude - 0.7f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn degree_three_row() {
        let row = literature_thresholds(3).unwrap();
        assert!((row.cep - 2.0 / 3.0).abs() < 1e-12);
        assert!((row.conpt - 0.5).abs() < 1e-12);
        assert!((row.qep_ghz - 2.0 / 3.0).abs() < 1e-12);
        assert!((row.qep - 0.5761).abs() < 1e-4, "{row:?}");
        assert_eq!(literature_thresholds(2), Err(ScalingError::BadDegree(2)));
    }

    #[test]
    fn conpt_is_lowest() {
        for k in 3..=10 {
            let r = literature_thresholds(k).unwrap();
            assert!(r.conpt < r.cep.min(r.qep).min(r.qep_ghz), "{r:?}");
        }
        let r = literature_thresholds(5).unwrap();
        assert!((r.qep - 0.4201).abs() < 1e-4 && (r.qep_ghz - 0.6232).abs() < 1e-4, "{r:?}");
    }
}
