//! Outage probability curves and their structural thresholds.
//!
//! An [`OutageCurve`] maps a block transmit power `P` to the probability
//! `F(P)` that the block's mutual information falls below the fixed rate
//! `R`. For Weibull fading with shape `beta`,
//!
//! ```text
//! F(P) = 1 - exp(-(c / P)^(beta/2)),    c = 2^R - 1,
//! ```
//!
//! which degrades to Rayleigh fading at `beta = 2`. `F` is strictly
//! decreasing, concave on `[0, P_b]` and convex on `[P_b, inf)`, and lies
//! above the chord from `(0, 1)` to `(P_a, F(P_a))` for a unique tangent
//! power `P_a >= P_b`. The pair `(P_b, P_a)` drives every scheduler in this
//! crate: powers below `P_b` are worth concentrating, and `P_a` is the
//! on-level that on-off schemes aim for.

use std::path::Path;

use crate::error::{Error, Result};

/// Fading family behind an outage curve.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// Weibull fading with shape parameter `beta > 0` (`beta = 2` is Rayleigh).
    Weibull { beta: f64 },
    /// Piecewise-linear interpolation of `(power, probability)` samples,
    /// sorted by power strictly ascending with strictly decreasing
    /// probabilities in `(0, 1]`. Below the first sample the curve is
    /// interpolated toward `(0, 1)`; beyond the last it is clamped.
    Tabulated { grid: Vec<(f64, f64)> },
}

/// A strictly decreasing outage probability function together with the rate
/// it was derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct OutageCurve {
    family: Family,
    rate: f64,
    /// `c = 2^R - 1`, the SNR threshold for outage.
    rate_term: f64,
}

impl OutageCurve {
    /// Weibull fading curve at rate `rate` bits/sec/Hz.
    pub fn weibull(beta: f64, rate: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::Domain(format!("weibull shape must be positive, got {beta}")));
        }
        Self::new(Family::Weibull { beta }, rate)
    }

    /// Rayleigh fading (`beta = 2`).
    pub fn rayleigh(rate: f64) -> Result<Self> {
        Self::weibull(2.0, rate)
    }

    /// Curve interpolated from `(power, probability)` samples.
    pub fn tabulated(grid: Vec<(f64, f64)>, rate: f64) -> Result<Self> {
        if grid.len() < 3 {
            return Err(Error::Domain(format!(
                "tabulated curve needs at least 3 samples, got {}",
                grid.len()
            )));
        }
        for (i, &(p, f)) in grid.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::Domain(format!("sample {i}: power {p} must be finite and nonnegative")));
            }
            if !f.is_finite() || f <= 0.0 || f > 1.0 {
                return Err(Error::Domain(format!("sample {i}: probability {f} must lie in (0, 1]")));
            }
            if i > 0 {
                let (pp, fp) = grid[i - 1];
                if p <= pp {
                    return Err(Error::Domain(format!("sample {i}: powers must be strictly ascending")));
                }
                if f >= fp {
                    return Err(Error::Domain(format!(
                        "sample {i}: probabilities must be strictly decreasing"
                    )));
                }
            }
        }
        Self::new(Family::Tabulated { grid }, rate)
    }

    /// Load a tabulated curve from a two-column CSV `power,probability` with
    /// a one-line header, rows sorted by power strictly ascending.
    pub fn from_csv(path: &Path, rate: f64) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::parse(path, 0, e.to_string()))?;
        let mut grid = Vec::new();
        for (idx, record) in reader.records().enumerate() {
            let row = idx + 1;
            let record = record.map_err(|e| Error::parse(path, row, e.to_string()))?;
            if record.len() != 2 {
                return Err(Error::parse(path, row, format!("expected 2 columns, got {}", record.len())));
            }
            let p: f64 = record[0]
                .parse()
                .map_err(|_| Error::parse(path, row, format!("bad power value {:?}", &record[0])))?;
            let f: f64 = record[1]
                .parse()
                .map_err(|_| Error::parse(path, row, format!("bad probability value {:?}", &record[1])))?;
            grid.push((p, f));
        }
        if grid.is_empty() {
            return Err(Error::parse(path, 0, "no data rows"));
        }
        Self::tabulated(grid, rate)
    }

    fn new(family: Family, rate: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::Domain(format!("rate must be positive, got {rate}")));
        }
        let rate_term = (2.0f64).powf(rate) - 1.0;
        Ok(OutageCurve { family, rate, rate_term })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Transmission rate `R` in bits/sec/Hz.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// SNR threshold `c = 2^R - 1`.
    pub fn rate_term(&self) -> f64 {
        self.rate_term
    }

    /// Outage probability at transmit power `power >= 0`.
    pub fn outage(&self, power: f64) -> Result<f64> {
        if !power.is_finite() || power < 0.0 {
            return Err(Error::Domain(format!("power must be finite and nonnegative, got {power}")));
        }
        Ok(self.f(power))
    }

    /// Outage probability without the domain check. Callers guarantee
    /// `power >= 0`; used in the schedulers' inner loops.
    #[inline]
    pub fn f(&self, power: f64) -> f64 {
        1.0 - self.sf(power)
    }

    /// Survival probability `1 - F(power)`, computed without cancellation.
    /// this is the only way to resolve curvature in the near-flat region of
    /// high-diversity curves, where `F` is within a few ulps of 1.
    #[inline]
    pub fn sf(&self, power: f64) -> f64 {
        debug_assert!(power >= 0.0);
        match &self.family {
            Family::Weibull { beta } => {
                if power <= 0.0 {
                    return 0.0;
                }
                (-(self.rate_term / power).powf(beta / 2.0)).exp()
            }
            Family::Tabulated { grid } => {
                if power <= 0.0 {
                    return 0.0;
                }
                1.0 - interp_tabulated(grid, power)
            }
        }
    }
}

/// Piecewise-linear interpolation with the `(0, 1)` anchor below the first
/// sample and clamping beyond the last.
fn interp_tabulated(grid: &[(f64, f64)], power: f64) -> f64 {
    let (p0, f0) = grid[0];
    if power <= p0 {
        if p0 <= 0.0 {
            return f0;
        }
        return 1.0 + (f0 - 1.0) * power / p0;
    }
    let (plast, flast) = grid[grid.len() - 1];
    if power >= plast {
        return flast;
    }
    let idx = grid.partition_point(|&(p, _)| p <= power);
    let (pa, fa) = grid[idx - 1];
    let (pb, fb) = grid[idx];
    fa + (fb - fa) * (power - pa) / (pb - pa)
}

/// The structural threshold pair of a concave-convex curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// Inflection power separating the concave and convex regions.
    pub p_b: f64,
    /// Tangent power: the chord from `(0, 1)` to `(p_a, F(p_a))` lower-bounds
    /// the curve.
    pub p_a: f64,
    /// Tolerance the bisection for `p_a` was run at.
    pub tol: f64,
}

impl Thresholds {
    /// Compute both thresholds. Convex-everywhere curves get the degenerate
    /// pair `(0, 0)`.
    pub fn compute(curve: &OutageCurve, tol: f64) -> Result<Thresholds> {
        match classify(curve, tol)? {
            CurveClass::TypeA => Ok(Thresholds { p_b: 0.0, p_a: 0.0, tol }),
            CurveClass::TypeB(th) => Ok(th),
        }
    }

    /// Default grid step for the one-dimensional power searches built on
    /// these thresholds.
    pub fn default_grid_step(&self) -> f64 {
        if self.p_b > 0.0 {
            self.p_b * 1e-4
        } else {
            1e-4
        }
    }
}

/// Shape classification of an outage curve.
#[derive(Debug, Clone, PartialEq)]
pub enum CurveClass {
    /// Convex on the whole domain; scheduling reduces to the classic convex
    /// problem and both thresholds degenerate to zero.
    TypeA,
    /// Concave then convex, with the thresholds attached.
    TypeB(Thresholds),
}

/// Inflection power `P_b` of the curve.
///
/// For Weibull fading the second derivative of `F` vanishes where
/// `(c/P)^(beta/2) = (beta/2 + 1)/(beta/2)`, giving the closed form
/// `P_b = c * ((beta/2) / (beta/2 + 1))^(2/beta)`. For tabulated curves the
/// inflection is the sign-change point of the numerical second difference
/// over the sample grid, or 0 when the samples are convex everywhere.
pub fn compute_pb(curve: &OutageCurve) -> Result<f64> {
    match curve.family() {
        Family::Weibull { beta } => {
            let half = beta / 2.0;
            Ok((half / (half + 1.0)).powf(2.0 / beta) * curve.rate_term())
        }
        Family::Tabulated { grid } => tabulated_pb(grid, curve.rate_term()),
    }
}

/// Second-difference sign change over the tabulated knots. Curvature here is
/// the jump of slopes at an interior knot, normalized by `c^2` so that the
/// stability tolerance is scale-free.
fn tabulated_pb(grid: &[(f64, f64)], c: f64) -> Result<f64> {
    const TOL: f64 = 1e-9;
    let n = grid.len();
    let curv: Vec<f64> = (1..n - 1)
        .map(|k| {
            let (pl, fl) = grid[k - 1];
            let (pm, fm) = grid[k];
            let (pr, fr) = grid[k + 1];
            let left = (fm - fl) / (pm - pl);
            let right = (fr - fm) / (pr - pm);
            (right - left) / (pr - pl) * c * c
        })
        .collect();
    if curv.iter().all(|&v| v >= -TOL) {
        return Ok(0.0);
    }
    // Smallest knot from which the curvature stays nonnegative-within-tol.
    let mut split = None;
    for k in 0..curv.len() {
        if curv[k] >= 0.0 && curv[k..].iter().all(|&v| v >= -TOL) {
            split = Some(k);
            break;
        }
    }
    let Some(split) = split else {
        return Err(Error::Resolution(
            "no stable curvature sign change in the tabulated grid".into(),
        ));
    };
    // Everything before the split must look concave, otherwise the grid is
    // too coarse to trust the single crossing.
    if curv[..split].iter().any(|&v| v > TOL) {
        return Err(Error::Resolution(
            "curvature changes sign more than once in the tabulated grid".into(),
        ));
    }
    Ok(grid[split + 1].0)
}

/// Chord from `(0, 1)` through `(anchor, F(anchor))`, evaluated at `x`.
#[inline]
fn chord(curve: &OutageCurve, anchor: f64, x: f64) -> f64 {
    (curve.f(anchor) - 1.0) / anchor * x + 1.0
}

/// Bisection for the tangent power `P_a`, retrying with a doubled upper
/// bound (up to 8 times, starting from `100 c`) when the initial interval
/// fails to bracket it.
pub fn compute_pa(curve: &OutageCurve, tol: f64) -> Result<f64> {
    let mut a_up = 100.0 * curve.rate_term();
    let mut last = None;
    for _ in 0..=8 {
        match compute_pa_bracketed(curve, tol, a_up) {
            Ok(pa) => return Ok(pa),
            Err(e @ Error::Search(_)) => {
                last = Some(e);
                a_up *= 2.0;
            }
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap())
}

/// Single bisection attempt for `P_a` on `[0, a_up]`.
///
/// At the midpoint `P` the chord through `(P, F(P))` is probed `tol` to
/// either side: if it is below the curve on the left and above on the right,
/// `P` is still left of the tangent point and the lower bound moves up;
/// otherwise the upper bound moves down.
pub fn compute_pa_bracketed(curve: &OutageCurve, tol: f64, a_up: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    if !(a_up > 0.0) {
        return Err(Error::Domain(format!("upper bound must be positive, got {a_up}")));
    }
    let below = |p: f64| -> bool {
        if p <= tol {
            return false;
        }
        chord(curve, p, p - tol) < curve.f(p - tol) && chord(curve, p, p + tol) > curve.f(p + tol)
    };
    if below(a_up) {
        return Err(Error::Search(format!(
            "tangent power not bracketed by upper bound {a_up}"
        )));
    }
    let mut lo = 0.0f64;
    let mut hi = a_up;
    let mut mid = 0.5 * (lo + hi);
    let mut iterations = 0;
    while hi - lo > tol {
        mid = 0.5 * (lo + hi);
        if below(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
        if iterations > 200 {
            return Err(Error::Search("tangent bisection failed to converge".into()));
        }
    }
    Ok(mid)
}

/// Grid argmin of the chord slope `S(P) = (F(P) - 1) / P` over `(0, p_max]`.
///
/// The minimizer of `S` is the tangent power, so this is an independent
/// cross-check for [`compute_pa`] that never looks at chords or curvature.
pub fn slope_min_pa(curve: &OutageCurve, grid_step: f64, p_max: f64) -> Result<f64> {
    if !(grid_step > 0.0) || !(p_max > grid_step) {
        return Err(Error::Domain(format!(
            "need 0 < grid_step < p_max, got step {grid_step}, p_max {p_max}"
        )));
    }
    let steps = (p_max / grid_step).floor() as usize;
    let mut best_k = 1usize;
    let mut best_s = f64::INFINITY;
    for k in 1..=steps {
        let p = k as f64 * grid_step;
        let s = -curve.sf(p) / p;
        if s < best_s {
            best_s = s;
            best_k = k;
        }
    }
    if best_k == steps {
        return Err(Error::Bracket(format!(
            "slope still decreasing at p_max = {p_max}; enlarge the range"
        )));
    }
    Ok(best_k as f64 * grid_step)
}

/// Classify the curve as convex everywhere or concave-then-convex.
///
/// The second finite difference of `F` is scanned on a uniform grid of
/// `c`-normalized powers; a curve that fits neither shape within `tol` is
/// reported as a classification error rather than forced into one.
pub fn classify(curve: &OutageCurve, tol: f64) -> Result<CurveClass> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    match curve.family() {
        Family::Weibull { .. } => {
            // A Weibull curve always has a strictly positive inflection, so
            // the closed form decides the class; the grid scan only verifies
            // the concave/convex split. (For large shape parameters the
            // concave region is flat to machine precision, which makes the
            // scan pass vacuously there - the sign of the curvature is not
            // recoverable from F alone.)
            let c = curve.rate_term();
            let h = 1e-4;
            let n = (10.0 / h) as usize;
            let f: Vec<f64> = (1..=n + 1).map(|k| curve.f(k as f64 * h * c)).collect();
            let d2 = |k: usize| f[k + 1] - 2.0 * f[k] + f[k - 1];
            let p_b = compute_pb(curve)?;
            for k in 1..n - 1 {
                // Grid index k covers powers (k-1 .. k+1) * h * c; stencils
                // straddling the inflection are checked on neither side.
                let right_edge = (k + 1) as f64 * h * c;
                let left_edge = (k - 1) as f64 * h * c;
                if right_edge <= p_b && d2(k) > tol {
                    return Err(Error::Classification(format!(
                        "convex bump below the inflection at P = {:.6}",
                        k as f64 * h * c
                    )));
                }
                if left_edge >= p_b && d2(k) < -tol {
                    return Err(Error::Classification(format!(
                        "concave dip above the inflection at P = {:.6}",
                        k as f64 * h * c
                    )));
                }
            }
            let p_a = compute_pa(curve, tol.min(1e-6))?;
            Ok(CurveClass::TypeB(Thresholds { p_b, p_a, tol: tol.min(1e-6) }))
        }
        Family::Tabulated { grid } => {
            let p_b = tabulated_pb(grid, curve.rate_term())?;
            if p_b == 0.0 {
                return Ok(CurveClass::TypeA);
            }
            let p_a = compute_pa(curve, tol.min(1e-6))?;
            Ok(CurveClass::TypeB(Thresholds { p_b, p_a, tol: tol.min(1e-6) }))
        }
    }
}

/// Log-spaced verification grid over `[1e-4 c, 100 c]`, 4096 points. Chord
/// and monotonicity checks scan this range because every feature of the
/// supported curves scales with `c`.
pub fn verification_grid(c: f64) -> Vec<f64> {
    let n = 4096;
    let lo = (1e-4 * c).ln();
    let hi = (100.0 * c).ln();
    (0..n)
        .map(|k| (lo + (hi - lo) * k as f64 / (n - 1) as f64).exp())
        .collect()
}
